//! Multi-Lorentzian fits to mechanical spectra.
//!
//! Model: `B + Σ A_j h_j² / ((f - f_j)² + h_j²)` on a linear power axis, with
//! `h_j` the half width in Hz, so `γ_j = 2·2π·h_j`.

use serde::{Deserialize, Serialize};

use super::lsq::least_squares;
use super::{median, noise_level, FitParam, FitResult};
use crate::consts::angular;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanicalFit {
    /// One per peak, ascending in frequency: `omega_m`, `gamma_eff` (rad/s)
    /// and `amplitude` (peak height above background, linear units).
    pub modes: Vec<FitResult>,
    pub background: FitParam,
    pub residual_norm: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Fitted heights below this many noise units are reported.
const MIN_LINE_SNR: f64 = 5.0;

pub fn lorentzian(f: f64, f0: f64, hw: f64, amplitude: f64) -> f64 {
    let x = f - f0;
    amplitude * hw * hw / (x * x + hw * hw)
}

struct Pick {
    index: usize,
    prominence: f64,
    half_width: f64,
}

fn smooth(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(2);
            let hi = (i + 2).min(n - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

/// Local maxima ranked by topographic prominence.
fn prominence_picks(f: &[f64], y: &[f64]) -> Vec<Pick> {
    let n = y.len();
    let mut picks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let mut left_min = y[i];
        let mut j = i;
        while j > 0 {
            j -= 1;
            if y[j] > y[i] {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = y[i];
        let mut j = i;
        while j + 1 < n {
            j += 1;
            if y[j] > y[i] {
                break;
            }
            right_min = right_min.min(y[j]);
        }
        let prominence = y[i] - left_min.max(right_min);
        let half = y[i] - 0.5 * prominence;
        let mut l = i;
        while l > 0 && y[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < n && y[r] > half {
            r += 1;
        }
        let step = (f[n - 1] - f[0]) / (n - 1) as f64;
        picks.push(Pick {
            index: i,
            prominence,
            half_width: (0.5 * (f[r] - f[l])).max(step),
        });
    }
    picks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    picks
}

/// Fits `n_peaks` Lorentzians plus a constant background to a thermal
/// spectrum. dBm input is converted to linear power first.
pub fn fit_mechanical_modes(spec: &Spectrum, n_peaks: usize) -> Result<MechanicalFit> {
    if n_peaks == 0 {
        return Err(Error::invalid("need at least one peak"));
    }
    if spec.len() < 4 * n_peaks + 4 {
        return Err(Error::invalid(format!(
            "{} samples are too few for {n_peaks} peaks",
            spec.len()
        )));
    }
    let f = spec.freq_hz();
    let y = spec.linear_values();
    let mut warnings = Vec::new();

    let mut picks = prominence_picks(f, &smooth(&y));
    if picks.is_empty() {
        return Err(Error::numerical("spectrum has no local maximum"));
    }
    if picks.len() < n_peaks {
        warnings.push(format!(
            "only {} peaks resolved for {n_peaks} requested; lines are likely merged",
            picks.len()
        ));
    }
    picks.truncate(n_peaks);
    while picks.len() < n_peaks {
        let p = &picks[0];
        let offset = (picks.len() as f64) * p.half_width;
        let step = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
        let index = ((p.index as f64 + offset / step) as usize).min(f.len() - 1);
        picks.push(Pick {
            index,
            prominence: 0.5 * p.prominence,
            half_width: p.half_width,
        });
    }
    picks.sort_by_key(|p| p.index);

    let base = median(&y);
    let noise = noise_level(&y).max(1e-300);
    let centres: Vec<f64> = picks.iter().map(|p| f[p.index]).collect();
    let mut x0 = vec![base];
    let mut scale = vec![base.abs().max(noise)];
    for p in &picks {
        x0.extend([p.prominence, 0.0, p.half_width]);
        scale.extend([p.prominence.max(noise), p.half_width, p.half_width]);
    }
    let residual = |q: &[f64]| -> Vec<f64> {
        f.iter()
            .zip(&y)
            .map(|(&fi, &yi)| {
                let mut m = q[0];
                for (j, c) in centres.iter().enumerate() {
                    let k = 1 + 3 * j;
                    m += lorentzian(fi, c + q[k + 1], q[k + 2].abs(), q[k]);
                }
                m - yi
            })
            .collect()
    };
    let out = least_squares(&residual, &x0, &scale);
    if !out.converged {
        warnings.push(format!("optimizer stopped: {}", out.reason));
    }

    let mut modes: Vec<(f64, f64, FitResult)> = centres
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let k = 1 + 3 * j;
            let f0 = c + out.params[k + 1];
            let hw = out.params[k + 2].abs();
            let fit = FitResult {
                params: vec![
                    FitParam::rate("omega_m", angular(f0), angular(out.sigmas[k + 1])),
                    FitParam::rate("gamma_eff", angular(2.0 * hw), angular(2.0 * out.sigmas[k + 2])),
                    FitParam::plain("amplitude", out.params[k], out.sigmas[k]),
                ],
                residual_norm: out.residual_norm,
                converged: out.converged,
                warnings: Vec::new(),
            };
            (f0, hw, fit)
        })
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (f0, _, m) in &modes {
        if m.value("amplitude") < MIN_LINE_SNR * noise {
            warnings.push(format!(
                "line near {f0:.6e} Hz is not above the noise; requested peaks may be merged or absent"
            ));
        }
    }
    for w in modes.windows(2) {
        if w[1].0 - w[0].0 < w[0].1 + w[1].1 {
            warnings.push(format!(
                "peaks at {:.6e} Hz and {:.6e} Hz overlap within one linewidth; assignment is not unique",
                w[0].0, w[1].0
            ));
        }
    }
    Ok(MechanicalFit {
        modes: modes.into_iter().map(|m| m.2).collect(),
        background: FitParam::plain("background", out.params[0], out.sigmas[0]),
        residual_norm: out.residual_norm,
        converged: out.converged,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::cyclic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synth(lines: &[(f64, f64, f64)], noise: f64, seed: u64) -> Spectrum {
        let f: Vec<f64> = (0..2001).map(|i| 5.30e9 + 1e5 * i as f64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, noise.max(1e-300)).unwrap();
        let y = f
            .iter()
            .map(|&x| {
                let s: f64 = lines.iter().map(|&(f0, g, a)| lorentzian(x, f0, g / 2.0, a)).sum();
                0.1 + s + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 }
            })
            .collect();
        Spectrum::linear(f, y).unwrap()
    }

    #[test]
    fn single_line_at_20_db() {
        let fit = fit_mechanical_modes(&synth(&[(5.365e9, 6.32e6, 1.0)], 0.01, 1), 1).unwrap();
        let m = &fit.modes[0];
        assert!(fit.converged);
        assert!((cyclic(m.value("gamma_eff")) / 6.32e6 - 1.0).abs() < 0.02);
        assert!((cyclic(m.value("omega_m")) - 5.365e9).abs() < 250e3);
    }

    #[test]
    fn noiseless_exact() {
        let fit = fit_mechanical_modes(&synth(&[(5.365e9, 6.32e6, 1.0)], 0.0, 0), 1).unwrap();
        let m = &fit.modes[0];
        assert!((cyclic(m.value("gamma_eff")) / 6.32e6 - 1.0).abs() < 1e-6);
        assert!((m.value("amplitude") - 1.0).abs() < 1e-6);
    }

    #[test]
    fn triplet_resolved() {
        let truth = [(5.365e9, 6.3e6, 1.0), (5.395e9, 5.0e6, 0.3), (5.425e9, 7.0e6, 0.2)];
        let fit = fit_mechanical_modes(&synth(&truth, 0.005, 2), 3).unwrap();
        assert!(fit.warnings.iter().all(|w| !w.contains("overlap")), "{:?}", fit.warnings);
        for (m, t) in fit.modes.iter().zip(truth) {
            assert!((cyclic(m.value("omega_m")) - t.0).abs() < 250e3);
        }
    }

    #[test]
    fn absent_line_has_amplitude_consistent_with_zero() {
        let fit = fit_mechanical_modes(&synth(&[], 0.01, 4), 1).unwrap();
        let a = fit.modes[0].get("amplitude").unwrap();
        assert!(a.covers(0.0, 3.0), "{a:?}");
    }

    #[test]
    fn merged_lines_warn() {
        let fit = fit_mechanical_modes(&synth(&[(5.365e9, 6e6, 1.0), (5.366e9, 6e6, 1.0)], 0.001, 5), 2).unwrap();
        assert!(!fit.warnings.is_empty(), "{fit:?}");
    }
}
