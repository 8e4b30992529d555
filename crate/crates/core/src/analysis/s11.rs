//! Pump detuning from the intensity-modulation response.
//!
//! The magnitude `|S(Ω)|` of the cavity-only sideband response is even in
//! `Δ`, so magnitude data fix `|Δ|` only. Both signs are returned; the
//! caller's branch hint breaks the tie. A narrow mismatch left in the
//! residual marks the transparency window.

use serde::{Deserialize, Serialize};

use super::lsq::least_squares;
use super::{noise_level, FitParam, FitResult};
use crate::consts::{angular, cyclic};
use crate::dynamics::{sideband_response, Branch, CavityParams};
use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, Units};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S11Fit {
    /// Ranked best first. Each holds `delta`, `kappa_e` (rad/s) and `gain`.
    pub candidates: Vec<FitResult>,
    /// True when the candidates fit equally well.
    pub ambiguous: bool,
    /// Location of the largest structured residual, Hz, if above noise.
    pub window_hz: Option<f64>,
}

impl S11Fit {
    pub fn best(&self) -> &FitResult {
        &self.candidates[0]
    }
}

fn model(c: &CavityParams, delta: f64, kappa_e: f64, omega: f64) -> f64 {
    let bare = CavityParams {
        kappa_e,
        g0: 0.0,
        ..*c
    };
    sideband_response(&bare, delta, 0.0, omega).norm()
}

/// Fits `|S|` on a modulation-frequency axis (Hz). `c` supplies `κ` and a
/// starting `κ_e`. `hint` orders the two detuning signs; blue when absent.
/// dB input is read as `20 log10 |S|`.
pub fn fit_s11_detuning(s11: &Spectrum, c: &CavityParams, hint: Option<Branch>) -> Result<S11Fit> {
    c.validate()?;
    if s11.len() < 8 {
        return Err(Error::invalid("s11 fit needs at least 8 samples"));
    }
    let omega: Vec<f64> = s11.freq_hz().iter().map(|f| angular(*f)).collect();
    let y: Vec<f64> = match s11.meta.units {
        Units::Linear => s11.values().to_vec(),
        Units::Dbm => s11.values().iter().map(|v| 10f64.powf(v / 20.0)).collect(),
    };
    let gain_for = |m: &[f64]| -> f64 {
        let num: f64 = m.iter().zip(&y).map(|(a, b)| a * b).sum();
        let den: f64 = m.iter().map(|a| a * a).sum();
        if den > 0.0 {
            num / den
        } else {
            1.0
        }
    };
    // coarse scan over |Δ|
    let top = omega[omega.len() - 1].max(3.0 * c.kappa);
    let mut scan: Vec<(f64, f64)> = (0..=120)
        .map(|i| {
            let d = top * i as f64 / 120.0;
            let m: Vec<f64> = omega.iter().map(|&w| model(c, d, c.kappa_e, w)).collect();
            let g = gain_for(&m);
            let r: f64 = m.iter().zip(&y).map(|(a, b)| (g * a - b).powi(2)).sum();
            (d, r)
        })
        .collect();
    scan.sort_by(|a, b| a.1.total_cmp(&b.1));

    let scale = [c.kappa, c.kappa_e, 1.0];
    let residual = |p: &[f64]| -> Vec<f64> {
        omega
            .iter()
            .zip(&y)
            .map(|(&w, &yi)| p[2] * model(c, p[0], p[1].abs().min(c.kappa), w) - yi)
            .collect()
    };
    let mut best: Option<super::lsq::LsqOutcome> = None;
    for (d, _) in scan.iter().take(3) {
        let m: Vec<f64> = omega.iter().map(|&w| model(c, *d, c.kappa_e, w)).collect();
        let out = least_squares(&residual, &[*d, c.kappa_e, gain_for(&m)], &scale);
        if best.as_ref().is_none_or(|b| out.residual_norm < b.residual_norm) {
            best = Some(out);
        }
    }
    let out = best.ok_or_else(|| Error::numerical("s11 fit produced no outcome"))?;
    let delta = out.params[0].abs();
    let kappa_e = out.params[1].abs().min(c.kappa);

    let mut warnings = Vec::new();
    if !out.converged {
        warnings.push(format!("optimizer stopped: {}", out.reason));
    }
    if out.params[1].abs() > c.kappa {
        warnings.push("external coupling hit the total linewidth".into());
    }
    let make = |sign: f64| FitResult {
        params: vec![
            FitParam::rate("delta", sign * delta, out.sigmas[0]),
            FitParam::rate("kappa_e", kappa_e, out.sigmas[1]),
            FitParam::plain("gain", out.params[2], out.sigmas[2]),
        ],
        residual_norm: out.residual_norm,
        converged: out.converged,
        warnings: warnings.clone(),
    };
    // sign resolution is meaningless once Δ is indistinguishable from zero
    let unique = delta <= out.sigmas[0] || delta < 1e-9 * c.kappa;
    let preferred = match hint.unwrap_or(Branch::Blue) {
        Branch::Blue => 1.0,
        Branch::Red => -1.0,
    };
    let candidates = if unique {
        vec![make(1.0)]
    } else {
        vec![make(preferred), make(-preferred)]
    };

    let res = residual(&out.params);
    let noise = noise_level(&y);
    let (imax, rmax) = res
        .iter()
        .map(|v| v.abs())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let window_hz = (rmax > 5.0 * noise.max(1e-12 * out.params[2].abs())).then(|| cyclic(omega[imax]));

    Ok(S11Fit {
        ambiguous: candidates.len() > 1,
        candidates,
        window_hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{sideband_spectrum, DriveCondition};
    use crate::presets;

    fn axis() -> Vec<f64> {
        (1..=600).map(|i| 10e6 * i as f64).collect()
    }

    fn synth(c: &CavityParams, delta_hz: f64, n: f64) -> Spectrum {
        let d = DriveCondition::new(1e-4, angular(delta_hz), 1550e-9).unwrap();
        sideband_spectrum(c, &d, n, &axis()).unwrap().magnitude()
    }

    #[test]
    fn recovers_blue_detuning() {
        let c = presets::this_work_measured().with_g0(0.0);
        let fit = fit_s11_detuning(&synth(&c, 5.4e9, 0.0), &c, None).unwrap();
        let best = fit.best();
        assert!(best.converged);
        assert!((cyclic(best.value("delta")) / 5.4e9 - 1.0).abs() < 1e-6);
        assert!((best.value("kappa_e") / c.kappa_e - 1.0).abs() < 1e-6);
        assert!(fit.ambiguous);
        assert_eq!(fit.candidates[1].value("delta"), -best.value("delta"));
    }

    #[test]
    fn hint_orders_candidates() {
        let c = presets::this_work_measured().with_g0(0.0);
        let fit = fit_s11_detuning(&synth(&c, -5.4e9, 0.0), &c, Some(Branch::Red)).unwrap();
        assert!(fit.best().value("delta") < 0.0);
    }

    #[test]
    fn zero_detuning_is_unique() {
        let c = presets::this_work_measured().with_g0(0.0);
        let fit = fit_s11_detuning(&synth(&c, 0.0, 0.0), &c, None).unwrap();
        assert_eq!(fit.candidates.len(), 1);
        assert!(fit.best().value("delta").abs() < 1e-3 * c.kappa);
    }

    #[test]
    fn window_marks_mechanical_frequency() {
        let c = presets::this_work_measured();
        let fm = cyclic(c.omega_m);
        let s = synth(&c, fm, 3000.0);
        let fit = fit_s11_detuning(&s, &c, None).unwrap();
        let w = fit.window_hz.expect("window visible in residual");
        let implied = cyclic(fit.best().value("delta").abs());
        assert!((w - implied).abs() / implied < 0.01, "{w} vs {implied}");
    }
}
