//! Linearized cavity optomechanics.
//!
//! Single-sided coupling to one bus waveguide, measured in reflection:
//! `a_out = a_in - sqrt(κ_e) a`. Detuning is `Δ = ω_L - ω_o`, so red drive is
//! `Δ < 0`. All rates are angular.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::{angular, cyclic, C, HBAR, K_B, TWO_PI};
use crate::error::{Error, Result};
use crate::spectrum::{ComplexSpectrum, Spectrum, SpectrumMeta, Units};

pub const ROOM_TEMPERATURE: f64 = 295.0;

/// Cavity rates in rad/s. The serialized form uses cyclic Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CavityParamsHz", into = "CavityParamsHz")]
pub struct CavityParams {
    pub omega_o: f64,
    pub omega_m: f64,
    pub kappa: f64,
    pub kappa_e: f64,
    pub gamma: f64,
    pub g0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CavityParamsHz {
    omega_o_hz: f64,
    omega_m_hz: f64,
    kappa_hz: f64,
    kappa_e_hz: f64,
    gamma_hz: f64,
    #[serde(default)]
    g0_hz: f64,
}

impl TryFrom<CavityParamsHz> for CavityParams {
    type Error = Error;

    fn try_from(h: CavityParamsHz) -> Result<Self> {
        CavityParams::from_hz(h.omega_o_hz, h.omega_m_hz, h.kappa_hz, h.kappa_e_hz, h.gamma_hz, h.g0_hz)
    }
}

impl From<CavityParams> for CavityParamsHz {
    fn from(c: CavityParams) -> Self {
        CavityParamsHz {
            omega_o_hz: cyclic(c.omega_o),
            omega_m_hz: cyclic(c.omega_m),
            kappa_hz: cyclic(c.kappa),
            kappa_e_hz: cyclic(c.kappa_e),
            gamma_hz: cyclic(c.gamma),
            g0_hz: cyclic(c.g0),
        }
    }
}

impl CavityParams {
    pub fn new(omega_o: f64, omega_m: f64, kappa: f64, kappa_e: f64, gamma: f64, g0: f64) -> Result<Self> {
        let c = Self {
            omega_o,
            omega_m,
            kappa,
            kappa_e,
            gamma,
            g0,
        };
        c.validate()?;
        Ok(c)
    }

    /// Same as [`CavityParams::new`] with every argument in cyclic Hz.
    pub fn from_hz(f_o: f64, f_m: f64, kappa: f64, kappa_e: f64, gamma: f64, g0: f64) -> Result<Self> {
        Self::new(
            angular(f_o),
            angular(f_m),
            angular(kappa),
            angular(kappa_e),
            angular(gamma),
            angular(g0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_o", self.omega_o),
            ("omega_m", self.omega_m),
            ("kappa", self.kappa),
            ("kappa_e", self.kappa_e),
            ("gamma", self.gamma),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.g0.is_finite() && self.g0 >= 0.0) {
            return Err(Error::invalid(format!("g0 must be non-negative, got {}", self.g0)));
        }
        if self.kappa_e > self.kappa {
            return Err(Error::invalid(format!(
                "external coupling exceeds total linewidth ({} > {})",
                self.kappa_e, self.kappa
            )));
        }
        Ok(())
    }

    pub fn with_g0(&self, g0: f64) -> Self {
        Self { g0, ..*self }
    }
}

/// Pump on the bus waveguide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriveHz", into = "DriveHz")]
pub struct DriveCondition {
    /// On-chip power, W.
    pub p_in: f64,
    /// `ω_L - ω_o`, rad/s.
    pub delta: f64,
    /// Pump vacuum wavelength, m.
    pub lambda0: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct DriveHz {
    p_in_w: f64,
    delta_hz: f64,
    #[serde(default = "default_lambda")]
    lambda0_m: f64,
}

fn default_lambda() -> f64 {
    1550e-9
}

impl TryFrom<DriveHz> for DriveCondition {
    type Error = Error;

    fn try_from(h: DriveHz) -> Result<Self> {
        DriveCondition::new(h.p_in_w, angular(h.delta_hz), h.lambda0_m)
    }
}

impl From<DriveCondition> for DriveHz {
    fn from(d: DriveCondition) -> Self {
        DriveHz {
            p_in_w: d.p_in,
            delta_hz: cyclic(d.delta),
            lambda0_m: d.lambda0,
        }
    }
}

impl DriveCondition {
    pub fn new(p_in: f64, delta: f64, lambda0: f64) -> Result<Self> {
        if !(p_in.is_finite() && p_in >= 0.0) {
            return Err(Error::invalid(format!("pump power must be non-negative, got {p_in}")));
        }
        if !delta.is_finite() {
            return Err(Error::invalid("detuning must be finite"));
        }
        if !(lambda0.is_finite() && lambda0 > 0.0) {
            return Err(Error::invalid(format!("wavelength must be positive, got {lambda0}")));
        }
        Ok(Self { p_in, delta, lambda0 })
    }

    pub fn laser_frequency(&self) -> f64 {
        TWO_PI * C / self.lambda0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Blue,
    Red,
}

impl Branch {
    /// Blue for `Δ > 0`, red otherwise.
    pub fn from_detuning(delta: f64) -> Self {
        if delta > 0.0 {
            Branch::Blue
        } else {
            Branch::Red
        }
    }

    /// Sideband detuning `±ω_m`.
    pub fn detuning(self, omega_m: f64) -> f64 {
        match self {
            Branch::Blue => omega_m,
            Branch::Red => -omega_m,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Blue => "blue",
            Branch::Red => "red",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "blue" => Ok(Branch::Blue),
            "red" => Ok(Branch::Red),
            other => Err(Error::Parse(format!("unknown branch '{other}' (expected blue or red)"))),
        }
    }
}

/// Mean intracavity photon number for a pump of power `P` at detuning `Δ`:
/// `κ_e (P / ħω_L) / ((κ/2)² + Δ²)`.
pub fn intracavity_photons(c: &CavityParams, d: &DriveCondition) -> f64 {
    let flux = d.p_in / (HBAR * d.laser_frequency());
    c.kappa_e * flux / (0.25 * c.kappa * c.kappa + d.delta * d.delta)
}

/// Power that puts `n` photons in the cavity; inverse of
/// [`intracavity_photons`].
pub fn pump_power_for_photons(c: &CavityParams, n: f64, delta: f64, lambda0: f64) -> f64 {
    let omega_l = TWO_PI * C / lambda0;
    n * HBAR * omega_l * (0.25 * c.kappa * c.kappa + delta * delta) / c.kappa_e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linewidth {
    /// Effective mechanical linewidth, rad/s. Non-positive under strong blue
    /// drive.
    pub gamma_eff: f64,
    /// Optical damping `γ_eff - γ`, rad/s.
    pub optical_damping: f64,
    /// Anti-damping has cancelled intrinsic loss.
    pub lasing: bool,
}

impl Linewidth {
    fn new(gamma: f64, optical_damping: f64) -> Self {
        let gamma_eff = gamma + optical_damping;
        Self {
            gamma_eff,
            optical_damping,
            lasing: gamma_eff <= 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackactionForm {
    /// Resolved-sideband limit at `Δ = ±ω_m`.
    Asymptotic,
    /// Both sideband Lorentzians at the actual detuning.
    #[default]
    Full,
}

fn check_photons(n: f64) -> Result<()> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::invalid(format!("photon number must be non-negative, got {n}")));
    }
    Ok(())
}

/// `Γ_opt / (g0² n)` at detuning `Δ`. Positive (damping) for red drive.
pub fn backaction_density(c: &CavityParams, delta: f64) -> f64 {
    let h = 0.25 * c.kappa * c.kappa;
    let plus = delta + c.omega_m;
    let minus = delta - c.omega_m;
    c.kappa / (h + plus * plus) - c.kappa / (h + minus * minus)
}

/// `γ ∓ 4 g0² n / κ`, blue subtracting.
pub fn effective_linewidth_asymptotic(c: &CavityParams, n_cav: f64, branch: Branch) -> Result<Linewidth> {
    check_photons(n_cav)?;
    let rate = 4.0 * c.g0 * c.g0 * n_cav / c.kappa;
    let damping = match branch {
        Branch::Blue => -rate,
        Branch::Red => rate,
    };
    Ok(Linewidth::new(c.gamma, damping))
}

/// `γ + g0² n [κ/((κ/2)² + (Δ+ω_m)²) - κ/((κ/2)² + (Δ-ω_m)²)]`.
pub fn effective_linewidth_full(c: &CavityParams, n_cav: f64, delta: f64) -> Result<Linewidth> {
    check_photons(n_cav)?;
    Ok(Linewidth::new(
        c.gamma,
        c.g0 * c.g0 * n_cav * backaction_density(c, delta),
    ))
}

/// Dispatches on `form`. The asymptotic form takes the branch from the sign
/// of `delta`.
pub fn effective_linewidth(c: &CavityParams, n_cav: f64, delta: f64, form: BackactionForm) -> Result<Linewidth> {
    match form {
        BackactionForm::Asymptotic => effective_linewidth_asymptotic(c, n_cav, Branch::from_detuning(delta)),
        BackactionForm::Full => effective_linewidth_full(c, n_cav, delta),
    }
}

/// `C0 = 4 g0² / (κ γ)`.
pub fn single_photon_cooperativity(c: &CavityParams) -> f64 {
    4.0 * c.g0 * c.g0 / (c.kappa * c.gamma)
}

pub fn cooperativity(c: &CavityParams, n_cav: f64) -> f64 {
    n_cav * single_photon_cooperativity(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LasingThreshold {
    /// Photon number at unit cooperativity, `κγ/(4g0²)`.
    pub n_threshold: f64,
    /// On-chip power reaching `n_threshold` at `Δ = ω_m`, W.
    pub p_threshold: f64,
}

pub fn lasing_threshold(c: &CavityParams, lambda0: f64) -> Result<LasingThreshold> {
    if c.g0 == 0.0 {
        return Err(Error::invalid("no lasing threshold without optomechanical coupling"));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::invalid("wavelength must be positive"));
    }
    let n_threshold = c.kappa * c.gamma / (4.0 * c.g0 * c.g0);
    Ok(LasingThreshold {
        n_threshold,
        p_threshold: pump_power_for_photons(c, n_threshold, c.omega_m, lambda0),
    })
}

struct Susceptibilities {
    cavity: Complex64,
    conjugate: Complex64,
    mechanical: Complex64,
}

fn susceptibilities(c: &CavityParams, delta: f64, omega: f64) -> Susceptibilities {
    let i = Complex64::i();
    let half_k = 0.5 * c.kappa;
    let half_g = 0.5 * c.gamma;
    Susceptibilities {
        cavity: 1.0 / (half_k - i * (delta + omega)),
        conjugate: 1.0 / (half_k + i * (delta - omega)),
        mechanical: 1.0 / (half_g - i * (omega - c.omega_m)) - 1.0 / (half_g - i * (omega + c.omega_m)),
    }
}

/// Probe reflection `r(Ω)` at offset `Ω` (rad/s) from the pump, with `n`
/// pump photons in the cavity. No rotating-wave approximation on the
/// mechanics.
pub fn omit_reflection(c: &CavityParams, delta: f64, n_cav: f64, omega: f64) -> Complex64 {
    let s = susceptibilities(c, delta, omega);
    let g2 = c.g0 * c.g0 * n_cav;
    let denom = 1.0 + g2 * s.mechanical * (s.cavity - s.conjugate);
    let dressed = 1.0 - g2 * s.mechanical * s.cavity / denom;
    1.0 - c.kappa_e * s.cavity * dressed
}

/// Probe reflection over a frequency axis in Hz (offsets from the pump).
pub fn omit_response(
    c: &CavityParams,
    d: &DriveCondition,
    n_cav: f64,
    probe_hz: &[f64],
) -> Result<ComplexSpectrum> {
    check_photons(n_cav)?;
    let values = probe_hz
        .iter()
        .map(|&f| omit_reflection(c, d.delta, n_cav, angular(f)))
        .collect();
    ComplexSpectrum::new(
        probe_hz.to_vec(),
        values,
        SpectrumMeta {
            units: Units::Linear,
            detuning_hz: Some(cyclic(d.delta)),
            label: Some("omit_reflection".into()),
            ..Default::default()
        },
    )
}

/// Mechanical self-energy from the pump, `G² (χ_c - χ̄)` at `Ω = ω_m`.
pub fn mechanical_self_energy(c: &CavityParams, delta: f64, n_cav: f64) -> Complex64 {
    let s = susceptibilities(c, delta, c.omega_m);
    c.g0 * c.g0 * n_cav * (s.cavity - s.conjugate)
}

/// Width (rad/s) of the transparency window: pole width of the dressed
/// mechanical susceptibility, `γ + 2 Re Σ(ω_m)`.
pub fn omit_window_width(c: &CavityParams, delta: f64, n_cav: f64) -> Result<f64> {
    check_photons(n_cav)?;
    Ok(c.gamma + 2.0 * mechanical_self_energy(c, delta, n_cav).re)
}

/// Detected response to intensity modulation of the pump at `Ω`:
/// `r*(0) r(Ω) + r(0) r*(-Ω)`. Unchanged under `Δ → -Δ` when `g0 = 0`.
pub fn sideband_response(c: &CavityParams, delta: f64, n_cav: f64, omega: f64) -> Complex64 {
    let r0 = omit_reflection(c, delta, n_cav, 0.0);
    let rp = omit_reflection(c, delta, n_cav, omega);
    let rm = omit_reflection(c, delta, n_cav, -omega);
    r0.conj() * rp + r0 * rm.conj()
}

pub fn sideband_spectrum(
    c: &CavityParams,
    d: &DriveCondition,
    n_cav: f64,
    mod_hz: &[f64],
) -> Result<ComplexSpectrum> {
    check_photons(n_cav)?;
    let values = mod_hz
        .iter()
        .map(|&f| sideband_response(c, d.delta, n_cav, angular(f)))
        .collect();
    ComplexSpectrum::new(
        mod_hz.to_vec(),
        values,
        SpectrumMeta {
            units: Units::Linear,
            detuning_hz: Some(cyclic(d.delta)),
            label: Some("s11".into()),
            ..Default::default()
        },
    )
}

/// One mechanical line in a thermal spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalMode {
    /// rad/s
    pub omega_m: f64,
    /// rad/s
    pub gamma_eff: f64,
    /// Coupling squared relative to the cavity's `g0²`.
    pub relative_g0_sq: f64,
}

/// High-temperature occupancy `k_B T / (ħ ω)`.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> f64 {
    K_B * temperature / (HBAR * omega)
}

/// Integrated weight of a mode's line: `g0² n_th γ / γ_eff`, using the
/// cavity's intrinsic `γ` for every mode.
pub fn thermal_line_area(c: &CavityParams, mode: &ThermalMode, temperature: f64) -> f64 {
    c.g0 * c.g0 * mode.relative_g0_sq * thermal_occupancy(mode.omega_m, temperature) * c.gamma / mode.gamma_eff
}

/// Sum of Lorentzians in Hz with linear units and unit gain. Each line has
/// FWHM `γ_eff / 2π` and area [`thermal_line_area`] per Hz.
pub fn thermal_spectrum(
    c: &CavityParams,
    modes: &[ThermalMode],
    temperature: f64,
    freq_hz: &[f64],
) -> Result<Spectrum> {
    if modes.is_empty() {
        return Err(Error::invalid("thermal spectrum needs at least one mode"));
    }
    if !(temperature > 0.0) {
        return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
    }
    for m in modes {
        if !(m.omega_m > 0.0 && m.gamma_eff > 0.0 && m.relative_g0_sq >= 0.0) {
            return Err(Error::invalid(format!("bad thermal mode {m:?}")));
        }
    }
    let values = freq_hz
        .iter()
        .map(|&f| {
            modes
                .iter()
                .map(|m| {
                    let hw = cyclic(m.gamma_eff) / 2.0;
                    let df = f - cyclic(m.omega_m);
                    thermal_line_area(c, m, temperature) * hw / std::f64::consts::PI / (df * df + hw * hw)
                })
                .sum()
        })
        .collect();
    Spectrum::new(
        freq_hz.to_vec(),
        values,
        SpectrumMeta {
            label: Some("thermal".into()),
            ..Default::default()
        },
    )
}

/// One row of a linewidth-versus-power measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    /// W
    pub p_in: f64,
    /// rad/s; the sideband `±ω_m` of `branch` when absent.
    pub delta: Option<f64>,
    /// rad/s
    pub gamma_eff: f64,
    pub branch: Branch,
}

/// Noise-free backaction series at the given powers and detuning, full form.
pub fn backaction_series(
    c: &CavityParams,
    powers: &[f64],
    delta: f64,
    lambda0: f64,
) -> Result<Vec<SeriesPoint>> {
    powers
        .iter()
        .map(|&p| {
            let d = DriveCondition::new(p, delta, lambda0)?;
            let n = intracavity_photons(c, &d);
            let lw = effective_linewidth_full(c, n, delta)?;
            Ok(SeriesPoint {
                p_in: p,
                delta: Some(delta),
                gamma_eff: lw.gamma_eff,
                branch: Branch::from_detuning(delta),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn device() -> CavityParams {
        presets::this_work_measured()
    }

    #[test]
    fn photons_vanish_without_power_or_far_detuned() {
        let c = device();
        assert_eq!(intracavity_photons(&c, &DriveCondition::new(0.0, c.omega_m, 1550e-9).unwrap()), 0.0);
        let far = intracavity_photons(&c, &DriveCondition::new(1e-3, 1e6 * c.kappa, 1550e-9).unwrap());
        assert!(far < 1e-6);
    }

    #[test]
    fn photons_invert_to_power() {
        let c = device();
        let d = DriveCondition::new(375e-6, c.omega_m, 1550e-9).unwrap();
        let n = intracavity_photons(&c, &d);
        let p = pump_power_for_photons(&c, n, d.delta, d.lambda0);
        assert!(((p - d.p_in) / d.p_in).abs() < 1e-12);
    }

    #[test]
    fn slope_per_photon() {
        let c = device();
        let lw = effective_linewidth_asymptotic(&c, 1.0, Branch::Red).unwrap();
        let hz = cyclic(lw.optical_damping);
        assert!((hz - 709.0).abs() / 709.0 < 2e-3, "{hz}");
    }

    #[test]
    fn asymptotic_branches_mirror() {
        let c = device();
        for n in [0.0, 10.0, 4000.0, 2e4] {
            let b = effective_linewidth_asymptotic(&c, n, Branch::Blue).unwrap();
            let r = effective_linewidth_asymptotic(&c, n, Branch::Red).unwrap();
            assert!((b.gamma_eff + r.gamma_eff - 2.0 * c.gamma).abs() < 1e-9 * c.gamma);
        }
        assert_eq!(effective_linewidth_asymptotic(&c, 0.0, Branch::Blue).unwrap().gamma_eff, c.gamma);
        assert!(effective_linewidth_asymptotic(&c, -1.0, Branch::Blue).is_err());
    }

    #[test]
    fn threshold_zeroes_blue_linewidth() {
        let c = device();
        let t = lasing_threshold(&c, 1550e-9).unwrap();
        let lw = effective_linewidth_asymptotic(&c, t.n_threshold, Branch::Blue).unwrap();
        assert!(lw.gamma_eff.abs() < 1e-9 * c.gamma);
        assert!(lw.lasing);
        assert!((cooperativity(&c, t.n_threshold) - 1.0).abs() < 1e-12);
        let t2 = lasing_threshold(&c.with_g0(2.0 * c.g0), 1550e-9).unwrap();
        assert!((t2.n_threshold * 4.0 / t.n_threshold - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_and_asymptotic_agree_when_resolved() {
        let c = device();
        let n = 5000.0;
        for branch in [Branch::Blue, Branch::Red] {
            let a = effective_linewidth_asymptotic(&c, n, branch).unwrap();
            let f = effective_linewidth_full(&c, n, branch.detuning(c.omega_m)).unwrap();
            let rel = (a.optical_damping - f.optical_damping).abs() / a.optical_damping.abs();
            assert!(rel < 0.01, "{rel}");
        }
    }

    #[test]
    fn bare_cavity_reflection() {
        let c = device().with_g0(0.0);
        let r = omit_reflection(&c, -c.omega_m, 1e4, c.omega_m);
        let expected = 1.0 - 2.0 * c.kappa_e / c.kappa;
        assert!((r - Complex64::new(expected, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn window_width_matches_linewidth() {
        let c = device();
        for (delta, n) in [(-c.omega_m, 3000.0), (c.omega_m, 3000.0), (-0.8 * c.omega_m, 100.0)] {
            let w = omit_window_width(&c, delta, n).unwrap();
            let g = effective_linewidth_full(&c, n, delta).unwrap().gamma_eff;
            assert!(((w - g) / g).abs() < 1e-9);
        }
    }

    #[test]
    fn sideband_response_is_even_in_detuning_without_coupling() {
        let c = device().with_g0(0.0);
        for f in [1e8, 2e9, 5.4e9] {
            let a = sideband_response(&c, c.omega_m, 0.0, angular(f));
            let b = sideband_response(&c, -c.omega_m, 0.0, angular(f));
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn thermal_single_line_width() {
        let c = device();
        let mode = ThermalMode {
            omega_m: c.omega_m,
            gamma_eff: c.gamma,
            relative_g0_sq: 1.0,
        };
        let f0 = cyclic(c.omega_m);
        let hw = cyclic(c.gamma) / 2.0;
        let s = thermal_spectrum(&c, &[mode], ROOM_TEMPERATURE, &[f0 - hw, f0, f0 + hw]).unwrap();
        let v = s.values();
        assert!((v[0] / v[1] - 0.5).abs() < 1e-12);
        assert!((v[2] / v[1] - 0.5).abs() < 1e-12);
        assert!(thermal_spectrum(&c, &[], ROOM_TEMPERATURE, &[f0]).is_err());
        assert!(thermal_spectrum(&c, &[mode], 0.0, &[f0]).is_err());
    }

    #[test]
    fn params_json_in_hz() {
        let c = device();
        let text = serde_json::to_string(&c).unwrap();
        assert!(text.contains("\"kappa_hz\""));
        let back: CavityParams = serde_json::from_str(&text).unwrap();
        assert!(((back.kappa - c.kappa) / c.kappa).abs() < 1e-15);
        let bad = r#"{"omega_o_hz":1,"omega_m_hz":1,"kappa_hz":1,"kappa_e_hz":2,"gamma_hz":1,"g0_hz":0}"#;
        assert!(serde_json::from_str::<CavityParams>(bad).is_err());
    }
}
