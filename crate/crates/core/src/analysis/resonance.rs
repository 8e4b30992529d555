//! Reflection dip of a single-sided cavity swept by the laser.
//!
//! `|r|² = 1 - κ_e(κ - κ_e) / (δ² + κ²/4)`. The data only constrain the
//! product `κ_e(κ - κ_e)`, so the fit runs on the on-resonance depth
//! `d = 4κ_e(κ - κ_e)/κ²` and maps back to the under-coupled root
//! `κ_e ≤ κ/2`. No additive offset: it cannot be separated from gain and
//! depth on a finite span.

use super::lsq::{multi_start, propagate};
use super::{noise_level, FitParam, FitResult};
use crate::consts::angular;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Dip depth below baseline, in units of the noise level, under which the
/// trace is treated as featureless.
const MIN_FEATURE_SNR: f64 = 8.0;

/// Reflected power for gain `g`, centre `f0`, linewidth `k` (Hz), depth `d`.
pub fn reflection_dip(f: f64, f0: f64, k: f64, d: f64, g: f64) -> f64 {
    let hk = 0.5 * k;
    let x = f - f0;
    g * (1.0 - d * hk * hk / (x * x + hk * hk))
}

/// Under-coupled external rate for total rate `k` and depth `d`.
fn kappa_e_from_depth(k: f64, d: f64) -> f64 {
    0.5 * k * (1.0 - (1.0 - d.min(1.0)).max(0.0).sqrt())
}

fn percentile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s[((s.len() - 1) as f64 * q).round() as usize]
}

fn featureless(msg: String) -> FitResult {
    FitResult {
        params: Vec::new(),
        residual_norm: f64::NAN,
        converged: false,
        warnings: vec![msg],
    }
}

/// Fits `ω_o`, `κ`, `κ_e` (rad/s) and the gain to a laser-swept reflection
/// trace. The frequency axis is the absolute laser frequency in Hz.
pub fn fit_optical_resonance(trace: &Spectrum) -> Result<FitResult> {
    if trace.len() < 8 {
        return Err(Error::invalid("resonance fit needs at least 8 samples"));
    }
    let f = trace.freq_hz();
    let y = trace.linear_values();
    let centre = 0.5 * (f[0] + f[f.len() - 1]);
    let x: Vec<f64> = f.iter().map(|v| v - centre).collect();
    let span = x[x.len() - 1] - x[0];

    let base = percentile(&y, 0.9);
    let (imin, ymin) = y
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let noise = noise_level(&y);
    if base - ymin < MIN_FEATURE_SNR * noise || base <= 0.0 || base - ymin <= 0.0 {
        return Ok(featureless(format!(
            "no resonance feature: dip {:.3e} below baseline vs noise {:.3e}",
            base - ymin,
            noise
        )));
    }
    let half = base - 0.5 * (base - ymin);
    let below = y.iter().filter(|v| **v < half).count();
    let step = span / (x.len() - 1) as f64;
    let k0 = (below as f64 * step).max(2.0 * step);
    let d0 = ((base - ymin) / base).clamp(0.05, 0.99);

    // three-point smoothed minimum as a second centre guess
    let smooth_min = (1..y.len() - 1)
        .min_by(|&a, &b| (y[a - 1] + y[a] + y[a + 1]).total_cmp(&(y[b - 1] + y[b] + y[b + 1])))
        .unwrap_or(imin);
    let mut starts = Vec::new();
    for c in [x[imin], x[smooth_min]] {
        for kf in [0.5, 1.0, 2.0] {
            starts.push(vec![c, k0 * kf, d0, base]);
        }
    }
    let scale = [k0, k0, 0.1, base];
    let residual = |p: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(&y)
            .map(|(&xi, &yi)| reflection_dip(xi, p[0], p[1].abs(), p[2], p[3]) - yi)
            .collect()
    };
    let out = multi_start(&residual, &starts, &scale)
        .ok_or_else(|| Error::numerical("resonance fit produced no outcome"))?;

    let mut p = out.params.clone();
    p[1] = p[1].abs();
    let mut warnings = Vec::new();
    if p[2] > 1.0 {
        warnings.push(format!("fitted depth {:.4} exceeds critical coupling; clamped to 1", p[2]));
    }
    if p[2] <= 0.0 {
        warnings.push("fitted depth is not positive".into());
    }
    if span < 3.0 * p[1] {
        warnings.push(format!(
            "trace spans {:.2} linewidths; at least 3 are needed for a reliable fit",
            span / p[1]
        ));
    }
    let ke = kappa_e_from_depth(p[1], p[2]);
    let ke_sigma = propagate(|q| kappa_e_from_depth(q[1].abs(), q[2]), &p, &out.covariance, &scale);
    warnings.push(format!(
        "over-coupled alternative: kappa_e/2pi = {:.6e} Hz",
        p[1] - ke
    ));
    if !out.converged {
        warnings.push(format!("optimizer stopped: {}", out.reason));
    }
    Ok(FitResult {
        params: vec![
            FitParam::rate("omega_o", angular(centre + p[0]), angular(out.sigmas[0])),
            FitParam::rate("kappa", angular(p[1]), angular(out.sigmas[1])),
            FitParam::rate("kappa_e", angular(ke), angular(ke_sigma)),
            FitParam::plain("depth", p[2], out.sigmas[2]),
            FitParam::plain("gain", p[3], out.sigmas[3]),
        ],
        residual_norm: out.residual_norm,
        converged: out.converged && p[2] > 0.0,
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

    fn trace(k: f64, ke: f64, noise: f64, seed: u64) -> Spectrum {
        let f0 = 193.1e12;
        let f: Vec<f64> = (0..801).map(|i| f0 - 4.0 * k + 8.0 * k * i as f64 / 800.0).collect();
        let d = 4.0 * ke * (k - ke) / (k * k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(0.0, noise).unwrap();
        let y = f
            .iter()
            .map(|&x| reflection_dip(x, f0, k, d, 1.0) + if noise > 0.0 { n.sample(&mut rng) } else { 0.0 })
            .collect();
        Spectrum::linear(f, y).unwrap()
    }

    #[test]
    fn noiseless_recovery() {
        let r = fit_optical_resonance(&trace(1.41e9, 0.6e9, 0.0, 0)).unwrap();
        assert!(r.converged, "{:?}", r.warnings);
        assert!((cyclic(r.value("kappa")) / 1.41e9 - 1.0).abs() < 1e-6);
        assert!((cyclic(r.value("kappa_e")) / 0.6e9 - 1.0).abs() < 1e-6);
        assert!((cyclic(r.value("omega_o")) / 193.1e12 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_recovery_within_two_percent() {
        for seed in 0..5 {
            let r = fit_optical_resonance(&trace(1.41e9, 0.6e9, 0.01, seed)).unwrap();
            assert!(r.converged);
            assert!((cyclic(r.value("kappa")) / 1.41e9 - 1.0).abs() < 0.02);
            assert!((cyclic(r.value("kappa_e")) / 0.6e9 - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn flat_trace_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 0.01).unwrap();
        let f: Vec<f64> = (0..400).map(|i| 193e12 + 1e7 * i as f64).collect();
        let y = f.iter().map(|_| 1.0 + n.sample(&mut rng)).collect();
        let r = fit_optical_resonance(&Spectrum::linear(f, y).unwrap()).unwrap();
        assert!(!r.converged);
        assert!(r.warnings[0].contains("no resonance feature"));
    }
}
