//! Coupling rate from linewidth versus pump power.
//!
//! Each point's power and detuning give a photon number `n`, and the model
//! `γ_eff = γ + g0² x` with `x = n h(Δ)` is linear in `(γ, g0²)`. Here `h` is
//! the backaction density: both sideband Lorentzians for the full form,
//! `∓4/κ` for the resolved-sideband limit. Fitting both branches jointly ties
//! their slopes to be equal and opposite in `n`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FitParam, FitResult};
use crate::consts::{angular, cyclic};
use crate::dynamics::{backaction_density, intracavity_photons, BackactionForm, Branch, CavityParams, DriveCondition, SeriesPoint};
use crate::error::{Error, Result};

/// Branch slopes further apart than this many standard errors are flagged.
pub const BRANCH_TENSION_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PowerSeries {
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    p_in_w: f64,
    delta_hz: Option<f64>,
    branch: Branch,
    gamma_eff_hz: f64,
}

impl PowerSeries {
    pub fn new(points: Vec<SeriesPoint>) -> Self {
        Self { points }
    }

    /// CSV `p_in_w,delta_hz,branch,gamma_eff_hz`; `delta_hz` may be empty.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut points = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let r = row?;
            if !(r.p_in_w.is_finite() && r.p_in_w >= 0.0 && r.gamma_eff_hz.is_finite()) {
                return Err(Error::Parse(format!("bad power-series row {r:?}")));
            }
            points.push(SeriesPoint {
                p_in: r.p_in_w,
                delta: r.delta_hz.map(angular),
                gamma_eff: angular(r.gamma_eff_hz),
                branch: r.branch,
            });
        }
        Ok(Self { points })
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(Row {
                p_in_w: p.p_in,
                delta_hz: p.delta.map(cyclic),
                branch: p.branch,
                gamma_eff_hz: cyclic(p.gamma_eff),
            })
            .expect("in-memory CSV write");
        }
        String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G0Options {
    pub form: BackactionForm,
    /// Fractional 1σ uncertainty of the power calibration.
    pub power_systematic: f64,
    /// Pump wavelength, m.
    pub lambda0: f64,
    /// Fixes the intercept; lets a single branch with few points be used.
    pub known_gamma: Option<f64>,
}

impl Default for G0Options {
    fn default() -> Self {
        Self {
            form: BackactionForm::Full,
            power_systematic: 0.0,
            lambda0: 1550e-9,
            known_gamma: None,
        }
    }
}

struct LinearFit {
    intercept: f64,
    slope: f64,
    sigma_intercept: f64,
    sigma_slope: f64,
    rss: f64,
}

fn regress(x: &[f64], y: &[f64], known_intercept: Option<f64>) -> Result<LinearFit> {
    let m = x.len();
    let xmax = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let span = x.iter().copied().fold(f64::NEG_INFINITY, f64::max) - x.iter().copied().fold(f64::INFINITY, f64::min);
    if xmax == 0.0 || span <= 1e-12 * xmax {
        return Err(Error::invalid(
            "insufficient span: photon numbers do not vary across the series",
        ));
    }
    let xs: Vec<f64> = x.iter().map(|v| v / xmax).collect();
    match known_intercept {
        Some(g) => {
            if m < 2 {
                return Err(Error::invalid("need at least two points"));
            }
            let sxx: f64 = xs.iter().map(|v| v * v).sum();
            let sxy: f64 = xs.iter().zip(y).map(|(a, b)| a * (b - g)).sum();
            let b = sxy / sxx;
            let rss: f64 = xs.iter().zip(y).map(|(a, yy)| (yy - g - b * a).powi(2)).sum();
            let s2 = rss / (m - 1) as f64;
            Ok(LinearFit {
                intercept: g,
                slope: b / xmax,
                sigma_intercept: 0.0,
                sigma_slope: (s2 / sxx).sqrt() / xmax,
                rss,
            })
        }
        None => {
            if m < 3 {
                return Err(Error::invalid(
                    "need at least three points to fit slope, intercept and scatter",
                ));
            }
            let design = DMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
            let yv = DVector::from_column_slice(y);
            let normal = design.transpose() * &design;
            let inv = normal
                .try_inverse()
                .ok_or_else(|| Error::invalid("insufficient span: singular regression"))?;
            let beta = &inv * design.transpose() * &yv;
            let rss = (&yv - &design * &beta).norm_squared();
            let s2 = rss / (m - 2) as f64;
            Ok(LinearFit {
                intercept: beta[0],
                slope: beta[1] / xmax,
                sigma_intercept: (s2 * inv[(0, 0)]).sqrt(),
                sigma_slope: (s2 * inv[(1, 1)]).sqrt() / xmax,
                rss,
            })
        }
    }
}

/// Regressor `x = n h(Δ)` for each point.
fn regressors(series: &PowerSeries, c: &CavityParams, opts: &G0Options, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    let mut fallback = 0;
    let x = series
        .points
        .iter()
        .map(|p| {
            let delta = p.delta.unwrap_or_else(|| {
                fallback += 1;
                p.branch.detuning(c.omega_m)
            });
            if delta != 0.0 && Branch::from_detuning(delta) != p.branch {
                return Err(Error::invalid(format!(
                    "point at {} W labelled {} has detuning of the other sign",
                    p.p_in,
                    p.branch.as_str()
                )));
            }
            let n = intracavity_photons(c, &DriveCondition::new(p.p_in, delta, opts.lambda0)?);
            let h = match opts.form {
                BackactionForm::Full => backaction_density(c, delta),
                BackactionForm::Asymptotic => match p.branch {
                    Branch::Blue => -4.0 / c.kappa,
                    Branch::Red => 4.0 / c.kappa,
                },
            };
            Ok(n * h)
        })
        .collect::<Result<Vec<f64>>>()?;
    if fallback > 0 {
        warnings.push(format!(
            "{fallback} points had no detuning; used the sideband detuning of their branch"
        ));
    }
    Ok(x)
}

/// Regresses effective linewidth on photon number. `c` supplies `κ`, `κ_e`
/// and `ω_m`; its `g0` and `γ` are ignored unless `known_gamma` is set in
/// `opts`.
///
/// Parameters: `g0`, `gamma` (rad/s), `g0_sq_slope` and, when a branch has
/// enough points of its own, `gamma_blue`, `gamma_red`, `slope_blue`,
/// `slope_red` and `branch_tension` (slope difference in standard errors).
pub fn extract_g0(series: &PowerSeries, c: &CavityParams, opts: &G0Options) -> Result<FitResult> {
    if series.points.is_empty() {
        return Err(Error::invalid("empty power series"));
    }
    if !(opts.power_systematic >= 0.0) {
        return Err(Error::invalid("power systematic must be non-negative"));
    }
    let mut warnings = Vec::new();
    let x = regressors(series, c, opts, &mut warnings)?;
    let y: Vec<f64> = series.points.iter().map(|p| p.gamma_eff).collect();
    let joint = regress(&x, &y, opts.known_gamma)?;

    let mut params = Vec::new();
    let mut converged = true;
    let g0 = if joint.slope > 0.0 {
        joint.slope.sqrt()
    } else {
        converged = false;
        warnings.push(format!(
            "backaction slope {:.3e} is not positive; no coupling rate",
            joint.slope
        ));
        0.0
    };
    let stat = if g0 > 0.0 { joint.sigma_slope / (2.0 * g0) } else { f64::INFINITY };
    let sys = 0.5 * opts.power_systematic * g0;
    params.push(FitParam::rate("g0", g0, stat.hypot(sys)));
    params.push(FitParam::rate("gamma", joint.intercept, joint.sigma_intercept));
    params.push(FitParam::plain("g0_sq_slope", joint.slope, joint.sigma_slope));

    let mut branch_fits = Vec::new();
    for branch in [Branch::Blue, Branch::Red] {
        let (bx, by): (Vec<f64>, Vec<f64>) = x
            .iter()
            .zip(&y)
            .zip(&series.points)
            .filter(|(_, p)| p.branch == branch)
            .map(|((a, b), _)| (*a, *b))
            .unzip();
        if bx.is_empty() {
            continue;
        }
        match regress(&bx, &by, opts.known_gamma) {
            Ok(f) => {
                params.push(FitParam::rate(&format!("gamma_{}", branch.as_str()), f.intercept, f.sigma_intercept));
                params.push(FitParam::plain(&format!("slope_{}", branch.as_str()), f.slope, f.sigma_slope));
                branch_fits.push(f);
            }
            Err(e) => warnings.push(format!("{} branch not fitted on its own: {e}", branch.as_str())),
        }
    }
    if let [a, b] = branch_fits.as_slice() {
        let tension = (a.slope - b.slope).abs() / a.sigma_slope.hypot(b.sigma_slope);
        params.push(FitParam::plain("branch_tension", tension, 0.0));
        if tension > BRANCH_TENSION_LIMIT {
            warnings.push(format!(
                "blue and red slopes disagree by {tension:.1} standard errors"
            ));
        }
    }
    Ok(FitResult {
        params,
        residual_norm: joint.rss.sqrt(),
        converged,
        warnings,
    })
}
