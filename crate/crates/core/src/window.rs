//! Phase-protection operating window.
//!
//! A mechanical mode at `k_m = 2 k_o` is guided when its frequency lies below
//! the substrate surface-acoustic-wave line `ω_SAW = k_m v_SAW`, and the
//! optical mode is index guided when `n_eff > n_cladding`. All frequencies are
//! angular inside this module; the `_hz` helpers convert at the boundary.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::consts::{cyclic, TWO_PI};
use crate::error::{Error, Result};

/// Substrate description: SAW phase velocity and cladding index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateModel {
    /// SAW phase velocity, m/s.
    pub v_saw: f64,
    /// Cladding refractive index.
    pub n_cladding: f64,
}

impl SubstrateModel {
    pub fn new(v_saw: f64, n_cladding: f64) -> Result<Self> {
        let s = Self { v_saw, n_cladding };
        s.validate()?;
        Ok(s)
    }

    /// Thermal silicon dioxide: `v_SAW ≈ 3400 m/s`, `n = 1.45`.
    pub fn silicon_dioxide() -> Self {
        Self {
            v_saw: 3400.0,
            n_cladding: 1.45,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_saw.is_finite() && self.v_saw > 0.0) {
            return Err(Error::invalid(format!(
                "SAW velocity must be positive, got {}",
                self.v_saw
            )));
        }
        if !(self.n_cladding.is_finite() && self.n_cladding >= 1.0) {
            return Err(Error::invalid(format!(
                "cladding index must be >= 1, got {}",
                self.n_cladding
            )));
        }
        Ok(())
    }
}

/// A point in the `(n_eff, a)` design plane at a fixed vacuum wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub n_eff: f64,
    /// Unit-cell period, m.
    pub a: f64,
    /// Vacuum wavelength, m.
    pub lambda0: f64,
}

impl OperatingPoint {
    pub fn new(n_eff: f64, a: f64, lambda0: f64) -> Result<Self> {
        let p = Self { n_eff, a, lambda0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("n_eff", self.n_eff), ("a", self.a), ("lambda0", self.lambda0)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Optical wavevector `k_o = 2π n_eff / λ₀` in rad/m.
pub fn optical_wavevector(p: &OperatingPoint) -> f64 {
    TWO_PI * p.n_eff / p.lambda0
}

/// Angular SAW cutoff `ω_SAW = k_m v_SAW` with `k_m = 2 k_o`.
pub fn saw_cutoff_frequency(p: &OperatingPoint, s: &SubstrateModel) -> f64 {
    let k_m = 2.0 * optical_wavevector(p);
    k_m * s.v_saw
}

/// Cyclic SAW cutoff from the closed form `f_SAW = 2 n_eff v_SAW / λ₀`.
pub fn saw_cutoff_frequency_hz(p: &OperatingPoint, s: &SubstrateModel) -> f64 {
    2.0 * p.n_eff * s.v_saw / p.lambda0
}

/// Angular SAW cutoff when the mechanical mode sits at the zone edge,
/// `k_m = π/a`. This is the alternative convention to [`saw_cutoff_frequency`];
/// the two coincide only when `2 k_o = π/a`.
pub fn saw_cutoff_at_zone_edge(a: f64, s: &SubstrateModel) -> f64 {
    PI / a * s.v_saw
}

/// Result of [`window_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowVerdict {
    /// `n_eff > n_cladding` (strict).
    pub guided_optics: bool,
    /// `ω_m < ω_SAW` (strict).
    pub guided_mechanics: bool,
    /// Advisory: `k_m = 2 k_o <= π/a`. Zone-edge folding is allowed, so this
    /// never fails the window on its own.
    pub in_first_bz: bool,
    /// `(ω_SAW - ω_m) / 2π`, Hz.
    pub margin_hz: f64,
}

impl WindowVerdict {
    /// Both optics and mechanics are outside their continua.
    pub fn in_window(&self) -> bool {
        self.guided_optics && self.guided_mechanics
    }
}

pub fn window_check(
    p: &OperatingPoint,
    s: &SubstrateModel,
    omega_m: f64,
) -> Result<WindowVerdict> {
    p.validate()?;
    s.validate()?;
    if !(omega_m.is_finite() && omega_m > 0.0) {
        return Err(Error::invalid(format!(
            "mechanical frequency must be positive, got {omega_m}"
        )));
    }
    let omega_saw = saw_cutoff_frequency(p, s);
    let k_m = 2.0 * optical_wavevector(p);
    Ok(WindowVerdict {
        guided_optics: p.n_eff > s.n_cladding,
        guided_mechanics: omega_m < omega_saw,
        in_first_bz: k_m <= PI / p.a,
        margin_hz: cyclic(omega_saw - omega_m),
    })
}

/// Row-major `(n_eff, a)` grid of SAW cutoffs and window flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMap {
    pub n_eff: Vec<f64>,
    pub a: Vec<f64>,
    /// `f_SAW` in Hz, index `i * a.len() + j` for `(n_eff[i], a[j])`.
    pub f_saw_hz: Vec<f64>,
    pub in_window: Vec<bool>,
}

impl WindowMap {
    pub fn get(&self, i: usize, j: usize) -> (f64, bool) {
        let idx = i * self.a.len() + j;
        (self.f_saw_hz[idx], self.in_window[idx])
    }

    /// CSV with header `n_eff,a_m,f_saw_hz,in_window`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_eff,a_m,f_saw_hz,in_window\n");
        for (i, n) in self.n_eff.iter().enumerate() {
            for (j, a) in self.a.iter().enumerate() {
                let (f, w) = self.get(i, j);
                let _ = writeln!(out, "{n},{a},{f},{w}");
            }
        }
        out
    }
}

/// Evenly spaced samples over `[min, max]` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => {
            let h = (max - min) / (steps - 1) as f64;
            (0..steps).map(|i| min + h * i as f64).collect()
        }
    }
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::invalid(format!("{name} range is empty")));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(format!("{name} range must be strictly increasing")));
    }
    Ok(())
}

/// Scan the window over `n_eff × a` at fixed `λ₀` for a caller-supplied
/// angular mechanical frequency.
pub fn window_map(
    n_eff: &[f64],
    a: &[f64],
    lambda0: f64,
    s: &SubstrateModel,
    omega_m: f64,
) -> Result<WindowMap> {
    check_axis("n_eff", n_eff)?;
    check_axis("a", a)?;
    let mut f_saw_hz = Vec::with_capacity(n_eff.len() * a.len());
    let mut in_window = Vec::with_capacity(n_eff.len() * a.len());
    for &n in n_eff {
        for &period in a {
            let p = OperatingPoint::new(n, period, lambda0)?;
            let v = window_check(&p, s, omega_m)?;
            f_saw_hz.push(cyclic(saw_cutoff_frequency(&p, s)));
            in_window.push(v.in_window());
        }
    }
    Ok(WindowMap {
        n_eff: n_eff.to_vec(),
        a: a.to_vec(),
        f_saw_hz,
        in_window,
    })
}
