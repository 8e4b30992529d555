//! Measurement reduction: background subtraction, resonance and sideband
//! fits, mechanical line fits, coupling-rate regression and the comparison
//! table.
//!
//! Every fit reports 1σ uncertainties from the Jacobian at the optimum.
//! Rates are angular, as everywhere in the library.

pub mod background;
pub mod g0;
pub mod lsq;
pub mod mech;
pub mod resonance;
pub mod s11;
pub mod table1;

use serde::{Deserialize, Serialize};

use crate::consts::TWO_PI;

pub use background::{add_background, subtract_background, BackgroundSubtraction};
pub use g0::{extract_g0, G0Options, PowerSeries};
pub use mech::{fit_mechanical_modes, MechanicalFit};
pub use resonance::fit_optical_resonance;
pub use s11::{fit_s11_detuning, S11Fit};
pub use table1::{table1_report, Table1Report, TableEntry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    /// Angular rate, rad/s. Reported externally in Hz.
    RadPerSecond,
    Dimensionless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    /// 1σ
    pub sigma: f64,
    pub unit: Unit,
}

impl FitParam {
    pub fn rate(name: &str, value: f64, sigma: f64) -> Self {
        Self {
            name: name.into(),
            value,
            sigma,
            unit: Unit::RadPerSecond,
        }
    }

    pub fn plain(name: &str, value: f64, sigma: f64) -> Self {
        Self {
            name: name.into(),
            value,
            sigma,
            unit: Unit::Dimensionless,
        }
    }

    /// `value ± k σ`
    pub fn interval(&self, k: f64) -> (f64, f64) {
        (self.value - k * self.sigma, self.value + k * self.sigma)
    }

    pub fn covers(&self, truth: f64, k: f64) -> bool {
        let (lo, hi) = self.interval(k);
        lo <= truth && truth <= hi
    }

    /// Name and value in external units: rates become `<name>_hz`.
    pub fn external(&self) -> (String, f64, f64) {
        match self.unit {
            Unit::RadPerSecond => (format!("{}_hz", self.name), self.value / TWO_PI, self.sigma / TWO_PI),
            Unit::Dimensionless => (self.name.clone(), self.value, self.sigma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    pub residual_norm: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Value of a parameter known to exist.
    pub fn value(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("fit has no parameter '{name}'"))
            .value
    }

    pub fn sigma(&self, name: &str) -> f64 {
        self.get(name)
            .unwrap_or_else(|| panic!("fit has no parameter '{name}'"))
            .sigma
    }

    /// CSV `name,value,sigma` in external units.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,value,sigma\n");
        for p in &self.params {
            let (n, v, s) = p.external();
            out.push_str(&format!("{n},{v},{s}\n"));
        }
        out.push_str(&format!("residual_norm,{},\n", self.residual_norm));
        out.push_str(&format!("converged,{},\n", self.converged as u8));
        out
    }
}

/// Robust noise estimate: MAD of first differences over `sqrt 2`.
pub(crate) fn noise_level(y: &[f64]) -> f64 {
    if y.len() < 3 {
        return 0.0;
    }
    let mut d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    d.sort_by(f64::total_cmp);
    1.4826 * d[d.len() / 2] / std::f64::consts::SQRT_2
}

pub(crate) fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}
