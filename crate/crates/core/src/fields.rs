//! Discretized cavity fields and the moving-boundary zero-point coupling.
//!
//! A field component is a Bloch profile times a plane wave times a slowly
//! varying envelope, sampled on a uniform longitudinal grid:
//! `E(x) = (Ẽ_f(x) e^{i k_f x} + Ẽ_b(x) e^{i k_b x}) f(x)`.
//!
//! The coupling integral is evaluated with lumped transverse data: boundary
//! patches carry `u·n`, `|E∥|²`, `|D⊥|²`, the permittivities on either side
//! and an area weight, while the volume normalizations integrate the sampled
//! longitudinal fields (trapezoidal rule) times an effective cross-section.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::consts::{angular, HBAR};
use crate::error::{Error, Result};

/// Relative tolerance on grid spacing uniformity.
pub const GRID_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_PAD_FACTOR: usize = 8;
pub const DEFAULT_SAMPLES_PER_CELL: usize = 16;

/// One propagating component of a cavity field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlochField", into = "RawBlochField")]
pub struct BlochField {
    x: Vec<f64>,
    bloch: Vec<Complex64>,
    envelope: Vec<f64>,
    k: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBlochField {
    x_m: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    envelope: Vec<f64>,
    k_rad_per_m: f64,
}

impl TryFrom<RawBlochField> for BlochField {
    type Error = Error;

    fn try_from(r: RawBlochField) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::invalid("re and im arrays differ in length"));
        }
        let bloch = r
            .re
            .iter()
            .zip(&r.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        BlochField::new(r.x_m, bloch, r.envelope, r.k_rad_per_m)
    }
}

impl From<BlochField> for RawBlochField {
    fn from(f: BlochField) -> Self {
        RawBlochField {
            re: f.bloch.iter().map(|c| c.re).collect(),
            im: f.bloch.iter().map(|c| c.im).collect(),
            x_m: f.x,
            envelope: f.envelope,
            k_rad_per_m: f.k,
        }
    }
}

impl BlochField {
    pub fn new(x: Vec<f64>, bloch: Vec<Complex64>, envelope: Vec<f64>, k: f64) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::invalid("a field needs at least two samples"));
        }
        if bloch.len() != x.len() || envelope.len() != x.len() {
            return Err(Error::invalid(format!(
                "field arrays differ in length: x={}, bloch={}, envelope={}",
                x.len(),
                bloch.len(),
                envelope.len()
            )));
        }
        check_uniform(&x)?;
        if envelope.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return Err(Error::invalid("envelope must be finite and nonnegative"));
        }
        if !k.is_finite() || bloch.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Self {
            x,
            bloch,
            envelope,
            k,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.x
    }

    pub fn bloch(&self) -> &[Complex64] {
        &self.bloch
    }

    pub fn envelope(&self) -> &[f64] {
        &self.envelope
    }

    pub fn wavevector(&self) -> f64 {
        self.k
    }

    pub fn spacing(&self) -> f64 {
        (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
    }

    /// Assembled samples `Ẽ(x) e^{ikx} f(x)`.
    pub fn samples(&self) -> Vec<Complex64> {
        self.x
            .iter()
            .zip(&self.bloch)
            .zip(&self.envelope)
            .map(|((&x, &b), &f)| b * Complex64::from_polar(f, self.k * x))
            .collect()
    }

    /// Same field with the Bloch profile multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.bloch.iter_mut().for_each(|b| *b *= s);
        out
    }
}

fn check_uniform(x: &[f64]) -> Result<()> {
    let h = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    for w in x.windows(2) {
        let d = w[1] - w[0];
        if ((d - h) / h).abs() > GRID_TOLERANCE {
            return Err(Error::invalid(format!(
                "grid is not uniform: spacing {d} vs mean {h}"
            )));
        }
    }
    Ok(())
}

/// Forward and backward components sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub forward: BlochField,
    pub backward: BlochField,
}

impl FieldPair {
    pub fn new(forward: BlochField, backward: BlochField) -> Result<Self> {
        if forward.x != backward.x {
            return Err(Error::invalid("forward and backward fields must share a grid"));
        }
        Ok(Self { forward, backward })
    }

    pub fn grid(&self) -> &[f64] {
        &self.forward.x
    }

    pub fn samples(&self) -> Vec<Complex64> {
        self.forward
            .samples()
            .into_iter()
            .zip(self.backward.samples())
            .map(|(f, b)| f + b)
            .collect()
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            forward: self.forward.scaled(s),
            backward: self.backward.scaled(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    Uniform,
    /// Half cosine vanishing at the cavity ends.
    Cosine,
    /// Gaussian with standard deviation `L/6`.
    Gaussian,
}

impl FromStr for EnvelopeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Self::Uniform),
            "cosine" => Ok(Self::Cosine),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::invalid(format!("unsupported envelope kind '{other}'"))),
        }
    }
}

impl EnvelopeKind {
    fn eval(self, x: f64, length: f64) -> f64 {
        match self {
            Self::Uniform => 1.0,
            Self::Cosine => (PI * x / length).cos().max(0.0),
            Self::Gaussian => {
                let sigma = length / 6.0;
                (-0.5 * (x / sigma).powi(2)).exp()
            }
        }
    }
}

/// Cavity grid of `n_cells * samples_per_cell` points centred on `x = 0`.
pub fn cavity_grid(n_cells: usize, a: f64, samples_per_cell: usize) -> Result<Vec<f64>> {
    if n_cells == 0 || samples_per_cell == 0 {
        return Err(Error::invalid("need at least one cell and one sample per cell"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid(format!("period must be positive, got {a}")));
    }
    let n = n_cells * samples_per_cell;
    let dx = a / samples_per_cell as f64;
    let x0 = -0.5 * n_cells as f64 * a;
    Ok((0..n).map(|j| x0 + dx * j as f64).collect())
}

/// Synthetic standing wave with `k_f = +k`, `k_b = -k`, unit Bloch profile
/// and a shared envelope.
pub fn synth_standing_wave(
    k: f64,
    envelope: EnvelopeKind,
    n_cells: usize,
    a: f64,
    samples_per_cell: usize,
) -> Result<FieldPair> {
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("wavevector must be >= 0, got {k}")));
    }
    let x = cavity_grid(n_cells, a, samples_per_cell)?;
    let length = n_cells as f64 * a;
    let env: Vec<f64> = x.iter().map(|&xi| envelope.eval(xi, length)).collect();
    let ones = vec![Complex64::new(1.0, 0.0); x.len()];
    let forward = BlochField::new(x.clone(), ones.clone(), env.clone(), k)?;
    let backward = BlochField::new(x, ones, env, -k)?;
    FieldPair::new(forward, backward)
}

/// A standing-wave cavity of `N` identical defect cells, `L = N a`.
#[derive(Debug, Clone, PartialEq)]
pub struct CavityAssembly {
    pub n_defect: usize,
    pub period: f64,
    pub optical: FieldPair,
    pub mechanical: FieldPair,
}

impl CavityAssembly {
    pub fn synthetic(
        n_defect: usize,
        period: f64,
        k_o: f64,
        k_m: f64,
        envelope: EnvelopeKind,
        samples_per_cell: usize,
    ) -> Result<Self> {
        Ok(Self {
            n_defect,
            period,
            optical: synth_standing_wave(k_o, envelope, n_defect, period, samples_per_cell)?,
            mechanical: synth_standing_wave(k_m, envelope, n_defect, period, samples_per_cell)?,
        })
    }

    pub fn length(&self) -> f64 {
        self.n_defect as f64 * self.period
    }
}

/// Zero-padded magnitude spectrum over signed wavevector, normalized to a
/// unit peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialSpectrum {
    /// rad/m, ascending, zero at index `len/2`.
    pub k: Vec<f64>,
    pub magnitude: Vec<f64>,
    pub period: Option<f64>,
}

impl SpatialSpectrum {
    pub fn bin_width(&self) -> f64 {
        self.k[1] - self.k[0]
    }

    /// Wavevector axis in units of π/a, when a period is known.
    pub fn k_over_pi_a(&self) -> Option<Vec<f64>> {
        self.period
            .map(|a| self.k.iter().map(|k| k * a / PI).collect())
    }

    /// Index of the largest magnitude, optionally restricted to `k > 0`.
    pub fn peak_index(&self, positive_only: bool) -> usize {
        self.k
            .iter()
            .zip(&self.magnitude)
            .enumerate()
            .filter(|(_, (k, _))| !positive_only || **k > 0.0)
            .max_by(|a, b| a.1 .1.total_cmp(b.1 .1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    pub fn peak_wavevector(&self, positive_only: bool) -> f64 {
        self.k[self.peak_index(positive_only)]
    }

    /// Full width at half maximum of the peak at `idx`, linearly
    /// interpolated between bins, rad/m.
    pub fn peak_width(&self, idx: usize) -> f64 {
        let half = 0.5 * self.magnitude[idx];
        let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
            for i in range {
                let j = (i as isize + step) as usize;
                if self.magnitude[j] < half {
                    let (m0, m1) = (self.magnitude[i], self.magnitude[j]);
                    let t = (m0 - half) / (m0 - m1);
                    return self.k[i] + t * (self.k[j] - self.k[i]);
                }
            }
            self.k[if step < 0 { 0 } else { self.k.len() - 1 }]
        };
        let right = crossing(&mut (idx..self.k.len() - 1), 1);
        let left = crossing(&mut (1..=idx).rev(), -1);
        right - left
    }

    /// CSV `k_rad_per_m,k_over_pi_a,magnitude`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_rad_per_m,k_over_pi_a,magnitude\n");
        let norm = self.k_over_pi_a();
        for (i, (k, m)) in self.k.iter().zip(&self.magnitude).enumerate() {
            match &norm {
                Some(n) => writeln!(out, "{k},{},{m}", n[i]),
                None => writeln!(out, "{k},,{m}"),
            }
            .unwrap();
        }
        out
    }
}

/// Flat-window, zero-padded FFT magnitude of sampled values on a uniform
/// grid.
pub fn spatial_spectrum(
    x: &[f64],
    values: &[Complex64],
    pad_factor: usize,
    period: Option<f64>,
) -> Result<SpatialSpectrum> {
    if x.len() < 8 {
        return Err(Error::invalid(format!(
            "spatial spectrum needs at least 8 samples, got {}",
            x.len()
        )));
    }
    if values.len() != x.len() {
        return Err(Error::invalid("grid and values differ in length"));
    }
    if pad_factor == 0 {
        return Err(Error::invalid("pad factor must be >= 1"));
    }
    check_uniform(x)?;
    let dx = (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64;
    let n = x.len() * pad_factor;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..values.len()].copy_from_slice(values);
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    // fftshift: bin b maps to signed index b - n/2
    let half = n / 2;
    let dk = 2.0 * PI / (n as f64 * dx);
    let mut k = Vec::with_capacity(n);
    let mut magnitude = Vec::with_capacity(n);
    for b in 0..n {
        let signed = b as isize - half as isize;
        let src = signed.rem_euclid(n as isize) as usize;
        k.push(signed as f64 * dk);
        magnitude.push(buf[src].norm());
    }
    let peak = magnitude.iter().cloned().fold(0.0, f64::max);
    if peak > 0.0 {
        magnitude.iter_mut().for_each(|m| *m /= peak);
    }
    Ok(SpatialSpectrum {
        k,
        magnitude,
        period,
    })
}

pub fn field_spectrum(f: &FieldPair, pad_factor: usize, period: Option<f64>) -> Result<SpatialSpectrum> {
    spatial_spectrum(f.grid(), &f.samples(), pad_factor, period)
}

/// One lumped boundary patch of the moving-boundary surface integral.
///
/// Permittivities are relative; `Dperp2` is `|D⊥|²` in units of `ε₀² |E|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPatch {
    #[serde(rename = "uDotN")]
    pub u_dot_n: f64,
    #[serde(rename = "Epar2")]
    pub e_par2: f64,
    #[serde(rename = "Dperp2")]
    pub d_perp2: f64,
    #[serde(rename = "epsIn")]
    pub eps_in: f64,
    #[serde(rename = "epsOut")]
    pub eps_out: f64,
    #[serde(rename = "dA")]
    pub area: f64,
}

impl BoundaryPatch {
    /// `(u·n)(Δε |E∥|² − Δ(ε⁻¹) |D⊥|²) dA`, with `n` pointing from the
    /// inside medium to the outside.
    pub fn contribution(&self) -> f64 {
        let d_eps = self.eps_in - self.eps_out;
        let d_inv = 1.0 / self.eps_in - 1.0 / self.eps_out;
        self.u_dot_n * (d_eps * self.e_par2 - d_inv * self.d_perp2) * self.area
    }
}

/// Bulk material data for the volume normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialData {
    /// Mass density, kg/m³.
    #[serde(rename = "rho_kg_m3")]
    pub rho: f64,
    /// Effective relative permittivity weighting `∫ε|E|²`.
    #[serde(rename = "eps_volume")]
    pub eps: f64,
    /// Effective optical cross-section, m².
    #[serde(rename = "optical_area_m2")]
    pub optical_area: f64,
    /// Effective mechanical cross-section, m².
    #[serde(rename = "mechanical_area_m2")]
    pub mechanical_area: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    HBAR
}

impl MaterialData {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rho", self.rho),
            ("eps_volume", self.eps),
            ("optical_area", self.optical_area),
            ("mechanical_area", self.mechanical_area),
            ("hbar", self.hbar),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Zero-point coupling, rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingRate {
    pub signed: f64,
    pub magnitude: f64,
}

/// Trapezoidal quadrature weights on a uniform grid.
pub fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
        .collect()
}

/// Mechanical displacement snapshot: the real part of the phasor sum.
fn displacement(mechanical: &FieldPair) -> Vec<f64> {
    mechanical.samples().iter().map(|c| c.re).collect()
}

/// Moving-boundary zero-point coupling
///
/// `g₀ = sqrt(ħ/2ω_m) (ω_o/2) Σ_p (u·n)(Δε|E∥|² − Δ(ε⁻¹)|D⊥|²) dA
///       / (sqrt(∫ρ|u|²) ∫ε|E|²)`.
///
/// The result is invariant under rescaling `u` or `E` as long as the patches
/// are rescaled consistently with the volume fields.
pub fn g0_moving_boundary(
    optical: &FieldPair,
    mechanical: &FieldPair,
    patches: &[BoundaryPatch],
    material: &MaterialData,
    omega_o: f64,
    omega_m: f64,
) -> Result<CouplingRate> {
    material.validate()?;
    if optical.grid() != mechanical.grid() {
        return Err(Error::invalid("optical and mechanical fields must share a grid"));
    }
    for (name, w) in [("omega_o", omega_o), ("omega_m", omega_m)] {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {w}")));
        }
    }
    if let Some(p) = patches.iter().find(|p| !(p.area > 0.0) || !(p.eps_in > 0.0) || !(p.eps_out > 0.0)) {
        return Err(Error::invalid(format!(
            "boundary patch needs positive area and permittivities: {p:?}"
        )));
    }

    let weights = trapezoid_weights(optical.grid());
    let u = displacement(mechanical);
    let e = optical.samples();
    let mech_norm: f64 = material.rho
        * material.mechanical_area
        * u.iter().zip(&weights).map(|(u, w)| u * u * w).sum::<f64>();
    let opt_energy: f64 = material.eps
        * material.optical_area
        * e.iter().zip(&weights).map(|(e, w)| e.norm_sqr() * w).sum::<f64>();
    if !(mech_norm > 0.0) {
        return Err(Error::numerical("mechanical field has zero norm"));
    }
    if !(opt_energy > 0.0) {
        return Err(Error::numerical("optical field has zero energy"));
    }
    let surface: f64 = patches.iter().map(BoundaryPatch::contribution).sum();
    let signed = (material.hbar / (2.0 * omega_m)).sqrt() * 0.5 * omega_o * surface
        / (mech_norm.sqrt() * opt_energy);
    Ok(CouplingRate {
        signed,
        magnitude: signed.abs(),
    })
}

/// Lumped sidewall description used to derive boundary patches from
/// sampled fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidewallModel {
    /// Sidewall height (device-layer thickness), m.
    pub height: f64,
    pub eps_in: f64,
    pub eps_out: f64,
    /// Fraction of `|E|²` tangential to the wall.
    pub parallel_fraction: f64,
    /// Fraction of `|E|²` normal to the wall.
    pub normal_fraction: f64,
    /// Projection of the displacement onto the wall normal.
    pub normal_projection: f64,
    /// Number of identical walls at each longitudinal position.
    pub walls: usize,
}

/// One patch per grid sample, area `walls × height × trapezoid weight`.
pub fn sidewall_patches(
    optical: &FieldPair,
    mechanical: &FieldPair,
    wall: &SidewallModel,
) -> Result<Vec<BoundaryPatch>> {
    if optical.grid() != mechanical.grid() {
        return Err(Error::invalid("optical and mechanical fields must share a grid"));
    }
    let weights = trapezoid_weights(optical.grid());
    let u = displacement(mechanical);
    let e = optical.samples();
    Ok(weights
        .iter()
        .zip(u.iter().zip(&e))
        .map(|(w, (u, e))| {
            let e2 = e.norm_sqr();
            BoundaryPatch {
                u_dot_n: u * wall.normal_projection,
                e_par2: wall.parallel_fraction * e2,
                d_perp2: wall.normal_fraction * wall.eps_in * wall.eps_in * e2,
                eps_in: wall.eps_in,
                eps_out: wall.eps_out,
                area: wall.walls as f64 * wall.height * w,
            }
        })
        .collect())
}

/// Full-cavity estimate `g₀,uc / sqrt(N)`. This is an upper bound: it assumes
/// perfect overlap of the cavity fields with the unit-cell fields.
pub fn g0_cavity_scaling(g0_uc: f64, n_cells: usize) -> Result<f64> {
    if n_cells == 0 {
        return Err(Error::invalid("need at least one defect cell"));
    }
    if !(g0_uc > 0.0 && g0_uc.is_finite()) {
        return Err(Error::invalid(format!("unit-cell coupling must be positive, got {g0_uc}")));
    }
    Ok(g0_uc / (n_cells as f64).sqrt())
}

/// The `fields.json` document consumed by `omc g0` and `omc fft`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldsDocument {
    pub omega_o_hz: f64,
    pub omega_m_hz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_m: Option<f64>,
    pub material: MaterialData,
    pub optical: FieldPair,
    pub mechanical: FieldPair,
    pub patches: Vec<BoundaryPatch>,
}

impl FieldsDocument {
    pub fn g0(&self) -> Result<CouplingRate> {
        let r = g0_moving_boundary(
            &self.optical,
            &self.mechanical,
            &self.patches,
            &self.material,
            angular(self.omega_o_hz),
            angular(self.omega_m_hz),
        )?;
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: f64 = 188e-9;

    fn wall() -> SidewallModel {
        SidewallModel {
            height: 220e-9,
            eps_in: 12.1,
            eps_out: 2.1,
            parallel_fraction: 0.7,
            normal_fraction: 0.3,
            normal_projection: 0.4,
            walls: 2,
        }
    }

    fn material() -> MaterialData {
        MaterialData {
            rho: 2329.0,
            eps: 8.0,
            optical_area: 643e-9 * 220e-9,
            mechanical_area: 643e-9 * 220e-9,
            hbar: HBAR,
        }
    }

    fn g0_for(opt: &FieldPair, mech: &FieldPair, w: &SidewallModel) -> f64 {
        let p = sidewall_patches(opt, mech, w).unwrap();
        g0_moving_boundary(opt, mech, &p, &material(), 2.0 * PI * 195e12, 2.0 * PI * 5.4e9)
            .unwrap()
            .signed
    }

    #[test]
    fn k_zero_uniform_is_constant_real() {
        let f = synth_standing_wave(0.0, EnvelopeKind::Uniform, 4, A, 8).unwrap();
        for s in f.samples() {
            assert_eq!(s, Complex64::new(2.0, 0.0));
        }
    }

    #[test]
    fn unsupported_envelope() {
        assert!("triangle".parse::<EnvelopeKind>().is_err());
        assert_eq!("Gaussian".parse::<EnvelopeKind>().unwrap(), EnvelopeKind::Gaussian);
    }

    #[test]
    fn rejects_non_uniform_grid() {
        let x = vec![0.0, 1.0, 2.0, 3.5, 4.0, 5.0, 6.0, 7.0];
        let one = vec![Complex64::new(1.0, 0.0); 8];
        assert!(BlochField::new(x.clone(), one.clone(), vec![1.0; 8], 0.0).is_err());
        let ok: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let v = vec![Complex64::new(1.0, 0.0); 8];
        assert!(spatial_spectrum(&x, &v, 2, None).is_err());
        assert!(spatial_spectrum(&ok[..7], &v[..7], 2, None).is_err());
    }

    #[test]
    fn negative_envelope_rejected() {
        let x: Vec<f64> = (0..4).map(|i| i as f64).collect();
        let b = vec![Complex64::new(1.0, 0.0); 4];
        assert!(BlochField::new(x, b, vec![1.0, -0.1, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn pure_tone_peaks_within_one_bin() {
        let x = cavity_grid(32, A, 16).unwrap();
        let k = 0.37 * PI / A;
        let v: Vec<Complex64> = x.iter().map(|&xi| Complex64::from_polar(1.0, k * xi)).collect();
        let s = spatial_spectrum(&x, &v, 8, Some(A)).unwrap();
        let kp = s.peak_wavevector(false);
        assert!((kp - k).abs() <= s.bin_width());
    }

    #[test]
    fn cosine_gives_symmetric_peaks() {
        let f = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Uniform, 32, A, 16).unwrap();
        let s = field_spectrum(&f, 8, Some(A)).unwrap();
        let kp = s.peak_wavevector(true);
        let mirror = s.k.iter().position(|&k| (k + kp).abs() < 1e-6 * kp).unwrap();
        assert!((s.magnitude[mirror] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn gaussian_envelope_broadens_peak() {
        let k = 0.5 * PI / A;
        let uni = field_spectrum(&synth_standing_wave(k, EnvelopeKind::Uniform, 31, A, 16).unwrap(), 8, None).unwrap();
        let gau = field_spectrum(&synth_standing_wave(k, EnvelopeKind::Gaussian, 31, A, 16).unwrap(), 8, None).unwrap();
        let wu = uni.peak_width(uni.peak_index(true));
        let wg = gau.peak_width(gau.peak_index(true));
        assert!(wg >= wu, "gaussian {wg} vs uniform {wu}");
    }

    #[test]
    fn peak_location_independent_of_envelope() {
        let k = 0.5 * PI / A;
        let mut peaks = Vec::new();
        for kind in [EnvelopeKind::Uniform, EnvelopeKind::Cosine, EnvelopeKind::Gaussian] {
            let s = field_spectrum(&synth_standing_wave(k, kind, 16, A, 16).unwrap(), 8, None).unwrap();
            peaks.push((s.peak_wavevector(true), s.bin_width()));
        }
        for (p, dk) in &peaks {
            assert!((p - peaks[0].0).abs() <= *dk);
        }
    }

    #[test]
    fn null_displacement_gives_zero() {
        let opt = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Uniform, 8, A, 16).unwrap();
        let mech = synth_standing_wave(PI / A, EnvelopeKind::Uniform, 8, A, 16).unwrap();
        let mut p = sidewall_patches(&opt, &mech, &wall()).unwrap();
        p.iter_mut().for_each(|p| p.u_dot_n = 0.0);
        let r = g0_moving_boundary(&opt, &mech, &p, &material(), 1e15, 3e10).unwrap();
        assert_eq!(r.signed, 0.0);
        // the fully zero displacement field is rejected by the norm guard
        let zero = mech.scaled(Complex64::new(0.0, 0.0));
        let p = sidewall_patches(&opt, &zero, &wall()).unwrap();
        assert!(matches!(
            g0_moving_boundary(&opt, &zero, &p, &material(), 1e15, 3e10),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn index_matched_boundary_gives_zero() {
        let opt = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Uniform, 8, A, 16).unwrap();
        let mech = synth_standing_wave(PI / A, EnvelopeKind::Uniform, 8, A, 16).unwrap();
        let w = SidewallModel {
            eps_out: 12.1,
            ..wall()
        };
        assert_eq!(g0_for(&opt, &mech, &w), 0.0);
    }

    #[test]
    fn zero_optical_energy_is_an_error() {
        let opt = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Uniform, 8, A, 16)
            .unwrap()
            .scaled(Complex64::new(0.0, 0.0));
        let mech = synth_standing_wave(PI / A, EnvelopeKind::Uniform, 8, A, 16).unwrap();
        let p = sidewall_patches(&opt, &mech, &wall()).unwrap();
        assert!(g0_moving_boundary(&opt, &mech, &p, &material(), 1e15, 3e10).is_err());
    }

    #[test]
    fn doubling_displacement_leaves_g0_unchanged() {
        let opt = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Cosine, 12, A, 16).unwrap();
        let mech = synth_standing_wave(PI / A, EnvelopeKind::Cosine, 12, A, 16).unwrap();
        let g1 = g0_for(&opt, &mech, &wall());
        let g2 = g0_for(&opt, &mech.scaled(Complex64::new(2.0, 0.0)), &wall());
        assert!(((g2 - g1) / g1).abs() < 1e-12);
    }

    #[test]
    fn matched_wavevectors_dominate_mismatched() {
        let opt = synth_standing_wave(0.5 * PI / A, EnvelopeKind::Uniform, 31, A, 16).unwrap();
        let matched = synth_standing_wave(PI / A, EnvelopeKind::Uniform, 31, A, 16).unwrap();
        let off = synth_standing_wave(0.75 * PI / A, EnvelopeKind::Uniform, 31, A, 16).unwrap();
        let gm = g0_for(&opt, &matched, &wall()).abs();
        let go = g0_for(&opt, &off, &wall()).abs();
        assert!(gm > 10.0 * go, "matched {gm} vs mismatched {go}");
    }

    #[test]
    fn cavity_scaling() {
        assert_eq!(g0_cavity_scaling(3.0, 1).unwrap(), 3.0);
        assert_eq!(g0_cavity_scaling(3.0, 4).unwrap(), 1.5);
        let g = g0_cavity_scaling(4.2e6, 31).unwrap();
        assert!((g - 0.754e6).abs() < 1e3, "{g}");
        assert!(g0_cavity_scaling(1.0, 0).is_err());
        assert!(g0_cavity_scaling(-1.0, 3).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_field() {
        let f = synth_standing_wave(1e6, EnvelopeKind::Gaussian, 4, A, 8).unwrap();
        let s = serde_json::to_string(&f.forward).unwrap();
        assert!(s.contains("\"x_m\"") && s.contains("\"k_rad_per_m\""));
        let back: BlochField = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f.forward);
        let p = BoundaryPatch {
            u_dot_n: 1.0,
            e_par2: 2.0,
            d_perp2: 3.0,
            eps_in: 12.0,
            eps_out: 1.0,
            area: 1e-15,
        };
        let s = serde_json::to_string(&p).unwrap();
        for key in ["uDotN", "Epar2", "Dperp2", "epsIn", "epsOut", "dA"] {
            assert!(s.contains(key), "{key} missing in {s}");
        }
    }
}
