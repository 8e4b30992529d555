//! One-dimensional band-structure surrogates.
//!
//! Optics: scalar Helmholtz `-E'' = (ω/c)² ε(x) E` with periodic `ε`.
//! Mechanics: longitudinal rod `-(Y u')' = ω² ρ(x) u` with periodic density
//! and stiffness. Both are expanded in `2M + 1` plane waves `e^{i(k+G)x}` and
//! reduced to a Hermitian generalized eigenproblem `K v = λ B v`, solved by
//! Cholesky reduction of `B`. The stiffness in the rod uses the inverse
//! (Ho/Li) factorization rule, since `Y u'` rather than `u'` is continuous
//! across segment interfaces.
//!
//! The unit cell is a piecewise-constant fill profile: each segment carries a
//! fraction of the period and a material fill in `[0, 1]` that linearly mixes
//! the high and low media.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::consts::C;
use crate::error::{Error, Result};

pub const DEFAULT_HARMONICS: usize = 64;
const FRACTION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Fraction of the period covered by this segment.
    pub fraction: f64,
    /// High-material fill in `[0, 1]`.
    pub fill: f64,
}

/// Unit-cell design variables plus the 1-D fill profile derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCell", into = "RawCell")]
pub struct UnitCellGeometry {
    pub a: f64,
    pub w: f64,
    pub thickness: f64,
    /// Hole axis along the beam, m.
    pub hole_x: f64,
    /// Hole axis across the beam, m.
    pub hole_y: f64,
    pub segments: Vec<Segment>,
}

#[derive(Serialize, Deserialize)]
struct RawCell {
    a_m: f64,
    w_m: f64,
    thickness_m: f64,
    #[serde(default)]
    hole_x_m: f64,
    #[serde(default)]
    hole_y_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    segments: Option<Vec<Segment>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    slices: Option<usize>,
}

impl TryFrom<RawCell> for UnitCellGeometry {
    type Error = Error;

    fn try_from(r: RawCell) -> Result<Self> {
        match r.segments {
            Some(segments) => UnitCellGeometry::new(r.a_m, r.w_m, r.thickness_m, r.hole_x_m, r.hole_y_m, segments),
            None => UnitCellGeometry::elliptic_hole(
                r.a_m,
                r.w_m,
                r.thickness_m,
                r.hole_x_m,
                r.hole_y_m,
                r.slices.unwrap_or(DEFAULT_SLICES),
            ),
        }
    }
}

impl From<UnitCellGeometry> for RawCell {
    fn from(g: UnitCellGeometry) -> Self {
        RawCell {
            a_m: g.a,
            w_m: g.w,
            thickness_m: g.thickness,
            hole_x_m: g.hole_x,
            hole_y_m: g.hole_y,
            segments: Some(g.segments),
            slices: None,
        }
    }
}

pub const DEFAULT_SLICES: usize = 8;

impl UnitCellGeometry {
    pub fn new(
        a: f64,
        w: f64,
        thickness: f64,
        hole_x: f64,
        hole_y: f64,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        let g = Self {
            a,
            w,
            thickness,
            hole_x,
            hole_y,
            segments,
        };
        g.validate()?;
        Ok(g)
    }

    /// Beam of width `w` with a centred elliptic hole. The hole is cut into
    /// `slices` segments whose fill is `1 - mean chord / w`.
    pub fn elliptic_hole(
        a: f64,
        w: f64,
        thickness: f64,
        hole_x: f64,
        hole_y: f64,
        slices: usize,
    ) -> Result<Self> {
        if !(hole_x >= 0.0 && hole_x <= a) {
            return Err(Error::invalid(format!("hole_x must lie in [0, a], got {hole_x}")));
        }
        if !(hole_y >= 0.0 && hole_y <= w) {
            return Err(Error::invalid(format!("hole_y must lie in [0, w], got {hole_y}")));
        }
        if slices == 0 {
            return Err(Error::invalid("need at least one hole slice"));
        }
        let mut segments = Vec::new();
        let rim = 0.5 * (a - hole_x) / a;
        if hole_x == 0.0 || hole_y == 0.0 {
            segments.push(Segment { fraction: 0.5, fill: 1.0 });
            segments.push(Segment { fraction: 0.5, fill: 1.0 });
        } else {
            // ∫ sqrt(1 - t²) dt
            let prim = |t: f64| 0.5 * (t * (1.0 - t * t).max(0.0).sqrt() + t.clamp(-1.0, 1.0).asin());
            if rim > 0.0 {
                segments.push(Segment { fraction: rim, fill: 1.0 });
            }
            for s in 0..slices {
                let t0 = -1.0 + 2.0 * s as f64 / slices as f64;
                let t1 = -1.0 + 2.0 * (s + 1) as f64 / slices as f64;
                let mean_chord = hole_y * (prim(t1) - prim(t0)) / (t1 - t0);
                segments.push(Segment {
                    fraction: hole_x / a / slices as f64,
                    fill: (1.0 - mean_chord / w).clamp(0.0, 1.0),
                });
            }
            if rim > 0.0 {
                segments.push(Segment { fraction: rim, fill: 1.0 });
            }
        }
        Self::new(a, w, thickness, hole_x, hole_y, segments)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("w", self.w), ("thickness", self.thickness)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.segments.len() < 2 {
            return Err(Error::invalid("fill profile needs at least two segments"));
        }
        let total: f64 = self.segments.iter().map(|s| s.fraction).sum();
        if (total - 1.0).abs() > FRACTION_TOLERANCE {
            return Err(Error::invalid(format!(
                "segment lengths must sum to the period (fractions sum to {total})"
            )));
        }
        for s in &self.segments {
            if !(s.fraction > 0.0) || !(0.0..=1.0).contains(&s.fill) {
                return Err(Error::invalid(format!("bad segment {s:?}")));
            }
        }
        Ok(())
    }

    /// Same profile on a period scaled by `s`; all lengths scale together.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a: self.a * s,
            w: self.w * s,
            thickness: self.thickness * s,
            hole_x: self.hole_x * s,
            hole_y: self.hole_y * s,
            segments: self.segments.clone(),
        }
    }

    /// Profile repeated `n` times on a period `n a`.
    pub fn supercell(&self, n: usize) -> Self {
        let segments = (0..n)
            .flat_map(|_| self.segments.iter().map(|s| Segment { fraction: s.fraction / n as f64, fill: s.fill }))
            .collect();
        Self {
            a: self.a * n as f64,
            segments,
            ..self.clone()
        }
    }

    /// Mean fill over the cell.
    pub fn mean_fill(&self) -> f64 {
        self.segments.iter().map(|s| s.fraction * s.fill).sum()
    }

    /// Linear interpolation of every design variable and of the fill profile.
    pub fn lerp(&self, other: &Self, t: f64) -> Result<Self> {
        if self.segments.len() != other.segments.len() {
            return Err(Error::invalid(
                "interpolated cells must have the same number of segments",
            ));
        }
        let mix = |x: f64, y: f64| x + t * (y - x);
        let segments = self
            .segments
            .iter()
            .zip(&other.segments)
            .map(|(p, q)| Segment {
                fraction: mix(p.fraction, q.fraction),
                fill: mix(p.fill, q.fill),
            })
            .collect();
        Ok(Self {
            a: mix(self.a, other.a),
            w: mix(self.w, other.w),
            thickness: mix(self.thickness, other.thickness),
            hole_x: mix(self.hole_x, other.hole_x),
            hole_y: mix(self.hole_y, other.hole_y),
            segments,
        })
    }
}

/// High/low index pair for the optical surrogate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalMedium {
    pub n_hi: f64,
    pub n_lo: f64,
    /// Index bounding the light cone of the continuum.
    pub n_cladding: f64,
}

impl Default for OpticalMedium {
    /// Slab effective index of a 220 nm silicon layer, air holes, oxide
    /// cladding.
    fn default() -> Self {
        Self {
            n_hi: 2.85,
            n_lo: 1.0,
            n_cladding: 1.45,
        }
    }
}

impl OpticalMedium {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_lo >= 1.0 && self.n_hi > self.n_lo && self.n_hi.is_finite()) {
            return Err(Error::invalid(format!(
                "need n_hi > n_lo >= 1, got n_hi={}, n_lo={}",
                self.n_hi, self.n_lo
            )));
        }
        if !(self.n_cladding >= 1.0) {
            return Err(Error::invalid("cladding index must be >= 1"));
        }
        Ok(())
    }

    fn permittivity(&self, fill: f64) -> f64 {
        fill * self.n_hi * self.n_hi + (1.0 - fill) * self.n_lo * self.n_lo
    }
}

/// Densities and effective Young's moduli for the rod surrogate. Geometrical
/// softening enters as a reduced `youngs_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicalMedium {
    pub rho_hi: f64,
    pub youngs_hi: f64,
    pub rho_lo: f64,
    pub youngs_lo: f64,
    /// Substrate SAW velocity bounding the sound cone, m/s.
    pub v_saw: f64,
}

impl Default for MechanicalMedium {
    /// Silicon density with stiffness softened to a 2030 m/s rod velocity;
    /// holes are empty (area-weighted rod).
    fn default() -> Self {
        Self {
            rho_hi: 2329.0,
            youngs_hi: 2329.0 * 2030.0 * 2030.0,
            rho_lo: 0.0,
            youngs_lo: 0.0,
            v_saw: 3400.0,
        }
    }
}

impl MechanicalMedium {
    pub fn uniform(rho: f64, youngs: f64, v_saw: f64) -> Self {
        Self {
            rho_hi: rho,
            youngs_hi: youngs,
            rho_lo: rho,
            youngs_lo: youngs,
            v_saw,
        }
    }

    fn density(&self, fill: f64) -> f64 {
        fill * self.rho_hi + (1.0 - fill) * self.rho_lo
    }

    fn stiffness(&self, fill: f64) -> f64 {
        fill * self.youngs_hi + (1.0 - fill) * self.youngs_lo
    }

    fn validate_for(&self, g: &UnitCellGeometry) -> Result<()> {
        if !(self.v_saw > 0.0) {
            return Err(Error::invalid("SAW velocity must be positive"));
        }
        for s in &g.segments {
            if !(self.density(s.fill) > 0.0 && self.stiffness(s.fill) > 0.0) {
                return Err(Error::invalid(format!(
                    "density and stiffness must be positive in every segment (fill {})",
                    s.fill
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuum {
    /// `ω = c k / n`
    Light { n_cladding: f64 },
    /// `ω = v k`
    Sound { v: f64 },
}

impl Continuum {
    /// Continuum edge at wavevector `k`, Hz.
    pub fn frequency_hz(&self, k: f64) -> f64 {
        match *self {
            Continuum::Light { n_cladding } => C * k / (2.0 * PI * n_cladding),
            Continuum::Sound { v } => v * k / (2.0 * PI),
        }
    }
}

/// Bands sampled over `k ∈ [0, π/a]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDiagram {
    pub a: f64,
    /// Wavevector samples in units of π/a.
    pub k_reduced: Vec<f64>,
    /// Sorted mode frequencies per k sample, Hz.
    pub freqs_hz: Vec<Vec<f64>>,
    pub continuum: Continuum,
}

impl BandDiagram {
    pub fn wavevector(&self, i: usize) -> f64 {
        self.k_reduced[i] * PI / self.a
    }

    pub fn n_bands(&self) -> usize {
        self.freqs_hz.first().map_or(0, Vec::len)
    }

    pub fn band(&self, b: usize) -> Vec<f64> {
        self.freqs_hz.iter().map(|f| f[b]).collect()
    }

    /// `(min, max)` of band `b` over the sampled wavevectors.
    pub fn band_range(&self, b: usize) -> (f64, f64) {
        self.band(b)
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| (lo.min(f), hi.max(f)))
    }

    /// CSV `k_over_pi_a,band_index,freq_hz,above_continuum`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k_over_pi_a,band_index,freq_hz,above_continuum\n");
        for (i, fs) in self.freqs_hz.iter().enumerate() {
            let edge = self.continuum.frequency_hz(self.wavevector(i));
            for (b, f) in fs.iter().enumerate() {
                writeln!(out, "{},{},{},{}", self.k_reduced[i], b, f, *f > edge).unwrap();
            }
        }
        out
    }

    /// Whether `target` (Hz) falls outside every sampled band and below the
    /// continuum edge at the zone boundary.
    pub fn is_in_quasi_gap(&self, target: f64) -> bool {
        let edge = self.continuum.frequency_hz(PI / self.a);
        if target >= edge {
            return false;
        }
        (0..self.n_bands()).all(|b| {
            let (lo, hi) = self.band_range(b);
            target < lo || target > hi
        })
    }
}

/// Fourier coefficients `c_m`, `m ∈ [-order, order]`, of a piecewise-constant
/// periodic profile; entry `m + order`.
fn fourier_coefficients(segments: &[Segment], values: &[f64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); 2 * order + 1];
    for (idx, m) in (-(order as i64)..=order as i64).enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut start = 0.0;
        for (s, &v) in segments.iter().zip(values) {
            let end = start + s.fraction;
            if m == 0 {
                acc += v * s.fraction;
            } else {
                let q = 2.0 * PI * m as f64;
                let e0 = Complex64::from_polar(1.0, -q * start);
                let e1 = Complex64::from_polar(1.0, -q * end);
                acc += v * (e0 - e1) / Complex64::new(0.0, q);
            }
            start = end;
        }
        out[idx] = acc;
    }
    out
}

/// Toeplitz matrix `T[m][n] = c[m - n]` on the `2M + 1` basis.
fn toeplitz(coeffs: &[Complex64], harmonics: usize) -> DMatrix<Complex64> {
    let n = 2 * harmonics + 1;
    let centre = 2 * harmonics;
    DMatrix::from_fn(n, n, |i, j| coeffs[centre + i - j])
}

/// Sorted eigenvalues of `K v = λ B v` for Hermitian `K` and Hermitian
/// positive-definite `B`.
fn generalized_eigenvalues(k: DMatrix<Complex64>, b: DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = b.nrows();
    let chol = b.clone().cholesky().ok_or_else(|| {
        let min_diag = (0..n).map(|i| b[(i, i)].re).fold(f64::INFINITY, f64::min);
        Error::numerical(format!(
            "plane-wave mass matrix is not positive definite (size {n}, min diagonal {min_diag:e})"
        ))
    })?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(&k)
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let z = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let c = z.adjoint();
    let c = (&c + c.adjoint()).scale(0.5);
    let mut vals: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite eigenvalue in plane-wave expansion"));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

fn check_k_samples(k_reduced: &[f64], n_bands: usize, harmonics: usize) -> Result<()> {
    if k_reduced.is_empty() {
        return Err(Error::invalid("need at least one k sample"));
    }
    if k_reduced.iter().any(|k| !k.is_finite()) {
        return Err(Error::invalid("k samples must be finite"));
    }
    if n_bands == 0 {
        return Err(Error::invalid("need at least one band"));
    }
    if n_bands > 2 * harmonics + 1 {
        return Err(Error::invalid(format!(
            "{n_bands} bands requested but the basis has only {} plane waves",
            2 * harmonics + 1
        )));
    }
    Ok(())
}

/// Optical bands at the given reduced wavevectors (units of π/a).
pub fn optical_bands(
    g: &UnitCellGeometry,
    medium: &OpticalMedium,
    k_reduced: &[f64],
    n_bands: usize,
    harmonics: usize,
) -> Result<BandDiagram> {
    g.validate()?;
    medium.validate()?;
    check_k_samples(k_reduced, n_bands, harmonics)?;
    let eps: Vec<f64> = g.segments.iter().map(|s| medium.permittivity(s.fill)).collect();
    let b = toeplitz(&fourier_coefficients(&g.segments, &eps, 2 * harmonics), harmonics);
    let freqs_hz = k_reduced
        .iter()
        .map(|&kr| {
            let k = kr * PI / g.a;
            let kin = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(2 * harmonics + 1, |i, _| {
                let q = k + 2.0 * PI * (i as f64 - harmonics as f64) / g.a;
                Complex64::new(q * q, 0.0)
            }));
            let vals = generalized_eigenvalues(kin, b.clone())?;
            Ok(vals
                .into_iter()
                .take(n_bands)
                .map(|l| C * l.max(0.0).sqrt() / (2.0 * PI))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(BandDiagram {
        a: g.a,
        k_reduced: k_reduced.to_vec(),
        freqs_hz,
        continuum: Continuum::Light {
            n_cladding: medium.n_cladding,
        },
    })
}

/// Longitudinal rod bands at the given reduced wavevectors (units of π/a).
pub fn mechanical_bands(
    g: &UnitCellGeometry,
    medium: &MechanicalMedium,
    k_reduced: &[f64],
    n_bands: usize,
    harmonics: usize,
) -> Result<BandDiagram> {
    g.validate()?;
    medium.validate_for(g)?;
    check_k_samples(k_reduced, n_bands, harmonics)?;
    let rho: Vec<f64> = g.segments.iter().map(|s| medium.density(s.fill)).collect();
    let compliance: Vec<f64> = g.segments.iter().map(|s| 1.0 / medium.stiffness(s.fill)).collect();
    let mass = toeplitz(&fourier_coefficients(&g.segments, &rho, 2 * harmonics), harmonics);
    let stiffness = toeplitz(&fourier_coefficients(&g.segments, &compliance, 2 * harmonics), harmonics)
        .try_inverse()
        .ok_or_else(|| Error::numerical("compliance Toeplitz matrix is singular"))?;
    let n = 2 * harmonics + 1;
    let freqs_hz = k_reduced
        .iter()
        .map(|&kr| {
            let k = kr * PI / g.a;
            let q: Vec<f64> = (0..n)
                .map(|i| k + 2.0 * PI * (i as f64 - harmonics as f64) / g.a)
                .collect();
            let kin = DMatrix::from_fn(n, n, |i, j| stiffness[(i, j)] * (q[i] * q[j]));
            let vals = generalized_eigenvalues(kin, mass.clone())?;
            Ok(vals
                .into_iter()
                .take(n_bands)
                .map(|l| l.max(0.0).sqrt() / (2.0 * PI))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(BandDiagram {
        a: g.a,
        k_reduced: k_reduced.to_vec(),
        freqs_hz,
        continuum: Continuum::Sound { v: medium.v_saw },
    })
}

/// Defect-to-mirror morphing path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPath {
    pub defect: UnitCellGeometry,
    pub mirror: UnitCellGeometry,
}

impl PerturbationPath {
    pub fn new(defect: UnitCellGeometry, mirror: UnitCellGeometry) -> Result<Self> {
        if defect.segments.len() != mirror.segments.len() {
            return Err(Error::invalid(
                "defect and mirror cells must have the same number of segments",
            ));
        }
        Ok(Self { defect, mirror })
    }

    /// Geometry at `t ∈ [0, 1]`; `t = 0` is the defect cell exactly and
    /// `t = 1` the mirror cell exactly.
    pub fn at(&self, t: f64) -> Result<UnitCellGeometry> {
        if t == 0.0 {
            return Ok(self.defect.clone());
        }
        if t == 1.0 {
            return Ok(self.mirror.clone());
        }
        self.defect.lerp(&self.mirror, t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub optical: OpticalMedium,
    pub mechanical: MechanicalMedium,
    pub n_bands: usize,
    pub harmonics: usize,
    /// Reduced wavevectors used to locate band ranges for the gap test.
    pub gap_k_samples: usize,
    /// Optical mode frequency, Hz. No optical gap flags when absent.
    pub optical_target_hz: Option<f64>,
    /// Mechanical mode frequency, Hz. Defaults to the defect cell's lowest
    /// zone-edge mechanical frequency.
    pub mechanical_target_hz: Option<f64>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            optical: OpticalMedium::default(),
            mechanical: MechanicalMedium::default(),
            n_bands: 4,
            harmonics: 16,
            gap_k_samples: 9,
            optical_target_hz: None,
            mechanical_target_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub t: f64,
    pub a: f64,
    pub optical_x_hz: Vec<f64>,
    pub mechanical_x_hz: Vec<f64>,
    pub optical_gap: Option<bool>,
    pub mechanical_gap: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mechanical_target_hz: f64,
    pub steps: Vec<SweepStep>,
    /// Fraction of steps with an open mechanical quasi-gap at the target.
    pub mechanical_gap_fraction: f64,
    pub optical_gap_fraction: Option<f64>,
}

/// Zone-edge frequencies along the defect-to-mirror path.
pub fn perturbation_sweep(
    path: &PerturbationPath,
    settings: &SweepSettings,
    steps: usize,
) -> Result<SweepResult> {
    if steps < 2 {
        return Err(Error::invalid("a perturbation sweep needs at least two steps"));
    }
    let ks: Vec<f64> = crate::window::linspace(0.0, 1.0, settings.gap_k_samples.max(2));
    let mech_target = match settings.mechanical_target_hz {
        Some(f) => f,
        None => mechanical_bands(&path.defect, &settings.mechanical, &[1.0], 1, settings.harmonics)?.freqs_hz[0][0],
    };
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let g = path.at(t)?;
        let mech = mechanical_bands(&g, &settings.mechanical, &ks, settings.n_bands, settings.harmonics)?;
        let opt = optical_bands(&g, &settings.optical, &ks, settings.n_bands, settings.harmonics)?;
        let last = ks.len() - 1;
        out.push(SweepStep {
            t,
            a: g.a,
            optical_x_hz: opt.freqs_hz[last].clone(),
            mechanical_x_hz: mech.freqs_hz[last].clone(),
            optical_gap: settings.optical_target_hz.map(|f| opt.is_in_quasi_gap(f)),
            mechanical_gap: mech.is_in_quasi_gap(mech_target),
        });
    }
    let frac = |flags: &mut dyn Iterator<Item = bool>| {
        let v: Vec<bool> = flags.collect();
        v.iter().filter(|b| **b).count() as f64 / v.len() as f64
    };
    let mechanical_gap_fraction = frac(&mut out.iter().map(|s| s.mechanical_gap));
    let optical_gap_fraction = settings
        .optical_target_hz
        .map(|_| frac(&mut out.iter().map(|s| s.optical_gap.unwrap_or(false))));
    Ok(SweepResult {
        mechanical_target_hz: mech_target,
        steps: out,
        mechanical_gap_fraction,
        optical_gap_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_segment(a: f64, fill: f64) -> UnitCellGeometry {
        UnitCellGeometry::new(
            a,
            643e-9,
            220e-9,
            0.5 * a,
            0.0,
            vec![
                Segment { fraction: 0.5, fill: 1.0 },
                Segment { fraction: 0.5, fill },
            ],
        )
        .unwrap()
    }

    #[test]
    fn elliptic_cell_profile() {
        let g = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 100e-9, 300e-9, 8).unwrap();
        assert_eq!(g.segments.len(), 10);
        let total: f64 = g.segments.iter().map(|s| s.fraction).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // removed area matches the ellipse area π hx hy / 4
        let removed: f64 = g.segments.iter().map(|s| s.fraction * g.a * (1.0 - s.fill) * g.w).sum();
        let ellipse = PI * 100e-9 * 300e-9 / 4.0;
        assert!(((removed - ellipse) / ellipse).abs() < 1e-9);
        assert!(UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 200e-9, 300e-9, 8).is_err());
    }

    #[test]
    fn bad_profiles_rejected() {
        let seg = |f, v| Segment { fraction: f, fill: v };
        assert!(UnitCellGeometry::new(1.0, 1.0, 1.0, 0.0, 0.0, vec![seg(1.0, 1.0)]).is_err());
        assert!(UnitCellGeometry::new(1.0, 1.0, 1.0, 0.0, 0.0, vec![seg(0.5, 1.0), seg(0.4, 1.0)]).is_err());
        assert!(UnitCellGeometry::new(1.0, 1.0, 1.0, 0.0, 0.0, vec![seg(0.5, 1.2), seg(0.5, 1.0)]).is_err());
    }

    #[test]
    fn optical_empty_lattice() {
        let a = 400e-9;
        let g = two_segment(a, 1.0);
        let m = OpticalMedium { n_hi: 2.0, n_lo: 1.0, n_cladding: 1.0 };
        let ks = [0.0, 0.3, 0.7, 1.0];
        let d = optical_bands(&g, &m, &ks, 5, 8).unwrap();
        for (i, &kr) in ks.iter().enumerate() {
            let k = kr * PI / a;
            let mut exact: Vec<f64> = (-8i32..=8)
                .map(|j| C * (k + 2.0 * PI * j as f64 / a).abs() / (2.0 * PI * 2.0))
                .collect();
            exact.sort_by(f64::total_cmp);
            for b in 0..5 {
                let f = d.freqs_hz[i][b];
                let e = exact[b];
                if e == 0.0 {
                    assert!(f < 1e-6 * exact[2]);
                } else {
                    assert!(((f - e) / e).abs() < 1e-9, "k={kr} band {b}: {f} vs {e}");
                }
            }
        }
    }

    #[test]
    fn mechanical_empty_lattice() {
        let a = 188e-9;
        let g = two_segment(a, 0.3);
        let m = MechanicalMedium::uniform(2329.0, 9.6e9, 3400.0);
        let v = (9.6e9f64 / 2329.0).sqrt();
        let d = mechanical_bands(&g, &m, &[0.5, 1.0], 4, 8).unwrap();
        for (i, kr) in [0.5, 1.0].iter().enumerate() {
            let k = kr * PI / a;
            let mut exact: Vec<f64> = (-8i32..=8)
                .map(|j| v * (k + 2.0 * PI * j as f64 / a).abs() / (2.0 * PI))
                .collect();
            exact.sort_by(f64::total_cmp);
            for b in 0..4 {
                assert!(((d.freqs_hz[i][b] - exact[b]) / exact[b]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rejects_vanishing_density() {
        let g = two_segment(188e-9, 0.0);
        let m = MechanicalMedium::default();
        assert!(mechanical_bands(&g, &m, &[1.0], 2, 8).is_err());
    }

    #[test]
    fn optical_bands_converge_on_doubling() {
        let g = two_segment(400e-9, 0.0);
        let m = OpticalMedium { n_hi: 12f64.sqrt(), n_lo: 2.1f64.sqrt(), n_cladding: 1.45 };
        let coarse = optical_bands(&g, &m, &[1.0], 3, 32).unwrap();
        let fine = optical_bands(&g, &m, &[1.0], 3, 64).unwrap();
        for b in 0..3 {
            let (c, f) = (coarse.freqs_hz[0][b], fine.freqs_hz[0][b]);
            assert!(((c - f) / f).abs() < 5e-3, "band {b}: {c} vs {f}");
        }
    }

    #[test]
    fn mechanical_bands_converge_on_doubling() {
        let g = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 120e-9, 450e-9, 8).unwrap();
        let m = MechanicalMedium::default();
        let coarse = mechanical_bands(&g, &m, &[1.0], 3, 32).unwrap();
        let fine = mechanical_bands(&g, &m, &[1.0], 3, 64).unwrap();
        for b in 0..3 {
            let (c, f) = (coarse.freqs_hz[0][b], fine.freqs_hz[0][b]);
            assert!(((c - f) / f).abs() < 5e-3, "band {b}: {c} vs {f}");
        }
    }

    #[test]
    fn supercell_folds_primitive_bands() {
        let g = two_segment(300e-9, 0.2);
        let m = OpticalMedium { n_hi: 3.0, n_lo: 1.45, n_cladding: 1.45 };
        let kr = 0.4;
        let sup = optical_bands(&g.supercell(2), &m, &[kr], 4, 32).unwrap();
        // k on the doubled period is kr π/(2a); fold back onto the primitive zone
        let p1 = optical_bands(&g, &m, &[kr / 2.0], 2, 16).unwrap();
        let p2 = optical_bands(&g, &m, &[kr / 2.0 - 1.0], 2, 16).unwrap();
        let mut folded: Vec<f64> = p1.freqs_hz[0].iter().chain(&p2.freqs_hz[0]).copied().collect();
        folded.sort_by(f64::total_cmp);
        for b in 0..4 {
            let (s, p) = (sup.freqs_hz[0][b], folded[b]);
            assert!(((s - p) / p).abs() < 1e-3, "band {b}: {s} vs {p}");
        }
    }

    #[test]
    fn csv_format() {
        let g = two_segment(188e-9, 0.5);
        let d = mechanical_bands(&g, &MechanicalMedium::default(), &[0.0, 1.0], 2, 4).unwrap();
        let csv = d.to_csv();
        assert!(csv.starts_with("k_over_pi_a,band_index,freq_hz,above_continuum\n"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn path_endpoints_are_exact() {
        let d = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 100e-9, 300e-9, 4).unwrap();
        let m = UnitCellGeometry::elliptic_hole(375e-9, 643e-9, 220e-9, 200e-9, 400e-9, 4).unwrap();
        let p = PerturbationPath::new(d.clone(), m.clone()).unwrap();
        assert_eq!(p.at(0.0).unwrap(), d);
        assert_eq!(p.at(1.0).unwrap(), m);
        let odd = UnitCellGeometry::elliptic_hole(375e-9, 643e-9, 220e-9, 200e-9, 400e-9, 5).unwrap();
        assert!(PerturbationPath::new(d, odd).is_err());
    }

    #[test]
    fn degenerate_path_is_constant() {
        let d = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 100e-9, 300e-9, 4).unwrap();
        let p = PerturbationPath::new(d.clone(), d).unwrap();
        let r = perturbation_sweep(&p, &SweepSettings::default(), 3).unwrap();
        for s in &r.steps {
            assert_eq!(s.mechanical_x_hz, r.steps[0].mechanical_x_hz);
            assert_eq!(s.optical_x_hz, r.steps[0].optical_x_hz);
        }
        assert!(perturbation_sweep(&p, &SweepSettings::default(), 1).is_err());
    }

    #[test]
    fn lengths_scale_frequencies() {
        let g = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 110e-9, 400e-9, 6).unwrap();
        let ks = [0.0, 0.5, 1.0];
        let m = MechanicalMedium::default();
        let o = OpticalMedium::default();
        let s = 1.7;
        let (m1, m2) = (
            mechanical_bands(&g, &m, &ks, 3, 16).unwrap(),
            mechanical_bands(&g.scaled(s), &m, &ks, 3, 16).unwrap(),
        );
        let (o1, o2) = (
            optical_bands(&g, &o, &ks, 3, 16).unwrap(),
            optical_bands(&g.scaled(s), &o, &ks, 3, 16).unwrap(),
        );
        for i in 0..ks.len() {
            for b in 0..3 {
                for (p, q) in [(&m1, &m2), (&o1, &o2)] {
                    let (f1, f2) = (p.freqs_hz[i][b], q.freqs_hz[i][b]);
                    let scale = p.freqs_hz[i][2];
                    if f1 > 1e-6 * scale {
                        assert!(((f1 / s - f2) / f2).abs() < 1e-9, "{f1} {f2}");
                    } else {
                        assert!(f2 < 1e-6 * scale);
                    }
                }
            }
        }
    }

    fn x_gap(g: &UnitCellGeometry, m: &OpticalMedium) -> f64 {
        let d = optical_bands(g, m, &[1.0], 2, 32).unwrap();
        d.freqs_hz[0][1] - d.freqs_hz[0][0]
    }

    #[test]
    fn optical_gap_grows_with_contrast() {
        let g = two_segment(400e-9, 0.0);
        let mut last = -1.0;
        for hi in [2.2, 3.0, 5.0, 8.0, 12.0] {
            let m = OpticalMedium { n_hi: f64::sqrt(hi), n_lo: 2.1f64.sqrt(), n_cladding: 1.0 };
            let gap = x_gap(&g, &m);
            assert!(gap > last, "eps {hi}: {gap} <= {last}");
            last = gap;
        }
    }

    #[test]
    fn weak_density_modulation_gap() {
        // degenerate 2x2 perturbation at X: ω² = k² Y / (ρ0 ± |ρ1|)
        let a = 188e-9;
        let rho0 = 2329.0;
        let delta = 0.02 * rho0;
        let youngs = 9.6e9;
        let m = MechanicalMedium {
            rho_hi: rho0 + delta,
            youngs_hi: youngs,
            rho_lo: rho0 - delta,
            youngs_lo: youngs,
            v_saw: 1e4,
        };
        let g = two_segment(a, 0.0);
        let d = mechanical_bands(&g, &m, &[1.0], 2, 32).unwrap();
        let rho1 = 2.0 * delta / PI;
        let k = PI / a;
        let lo = k * (youngs / (rho0 + rho1)).sqrt() / (2.0 * PI);
        let hi = k * (youngs / (rho0 - rho1)).sqrt() / (2.0 * PI);
        let gap = d.freqs_hz[0][1] - d.freqs_hz[0][0];
        assert!(((gap - (hi - lo)) / (hi - lo)).abs() < 0.02, "{gap} vs {}", hi - lo);
    }

    #[test]
    fn period_doubling_pulls_bands_down() {
        let d = UnitCellGeometry::elliptic_hole(188e-9, 643e-9, 220e-9, 100e-9, 420e-9, 6).unwrap();
        let m = d.scaled(375.0 / 188.0);
        let m = UnitCellGeometry { w: d.w, thickness: d.thickness, ..m };
        let p = PerturbationPath::new(d, m).unwrap();
        let settings = SweepSettings { harmonics: 12, gap_k_samples: 5, ..SweepSettings::default() };
        let r = perturbation_sweep(&p, &settings, 33).unwrap();
        for w in r.steps.windows(2) {
            for b in 0..settings.n_bands {
                let (f0, f1) = (w[0].mechanical_x_hz[b], w[1].mechanical_x_hz[b]);
                assert!(f1 < f0);
                assert!((f0 - f1) / f0 < 0.05);
                let (o0, o1) = (w[0].optical_x_hz[b], w[1].optical_x_hz[b]);
                assert!(o1 < o0);
                assert!((o0 - o1) / o0 < 0.05);
            }
        }
        assert!((0.0..=1.0).contains(&r.mechanical_gap_fraction));
    }

    #[test]
    fn cell_json_accepts_hole_description() {
        let g: UnitCellGeometry = serde_json::from_str(
            r#"{"a_m":188e-9,"w_m":643e-9,"thickness_m":220e-9,"hole_x_m":100e-9,"hole_y_m":300e-9,"slices":4}"#,
        )
        .unwrap();
        assert_eq!(g.segments.len(), 6);
        let back: UnitCellGeometry = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
