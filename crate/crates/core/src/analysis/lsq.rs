//! Damped least squares on top of the `levenberg-marquardt` crate.
//!
//! Parameters are optimized in scaled form `u = x / scale` so that every
//! coordinate is O(1). The Jacobian is a central difference in `u`.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::{DMatrix, DVector, Dyn, Owned};

type Residual<'a> = dyn Fn(&[f64]) -> Vec<f64> + 'a;

struct Problem<'a> {
    f: &'a Residual<'a>,
    scale: &'a [f64],
    u: DVector<f64>,
}

impl Problem<'_> {
    fn unscale(&self, u: &DVector<f64>) -> Vec<f64> {
        u.iter().zip(self.scale).map(|(v, s)| v * s).collect()
    }

    fn eval(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
        let r = (self.f)(&self.unscale(u));
        if r.iter().all(|v| v.is_finite()) {
            Some(DVector::from_vec(r))
        } else {
            None
        }
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, u: &DVector<f64>) {
        self.u.copy_from(u);
    }

    fn params(&self) -> DVector<f64> {
        self.u.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        self.eval(&self.u)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        jacobian(self, &self.u)
    }
}

fn jacobian(p: &Problem<'_>, u: &DVector<f64>) -> Option<DMatrix<f64>> {
    let n = u.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = 1e-6 * u[j].abs().max(1.0);
        let mut up = u.clone();
        let mut dn = u.clone();
        up[j] += h;
        dn[j] -= h;
        let rp = p.eval(&up)?;
        let rm = p.eval(&dn)?;
        cols.push((rp - rm) / (2.0 * h));
    }
    Some(DMatrix::from_columns(&cols))
}

#[derive(Debug, Clone)]
pub struct LsqOutcome {
    pub params: Vec<f64>,
    /// 1σ from `s² (JᵀJ)⁻¹`; infinite when the normal matrix is singular.
    pub sigmas: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// `sqrt(Σ r²)`
    pub residual_norm: f64,
    pub converged: bool,
    pub reason: String,
    pub evaluations: usize,
}

/// Minimizes `Σ r(x)²` from `x0`. `scale` sets the natural size of each
/// parameter and must be nonzero.
pub fn least_squares(residual: &Residual<'_>, x0: &[f64], scale: &[f64]) -> LsqOutcome {
    assert_eq!(x0.len(), scale.len());
    let u0 = DVector::from_iterator(x0.len(), x0.iter().zip(scale).map(|(x, s)| x / s));
    let problem = Problem {
        f: residual,
        scale,
        u: u0,
    };
    let (problem, report) = LevenbergMarquardt::new()
        .with_ftol(1e-13)
        .with_xtol(1e-13)
        .with_gtol(1e-13)
        .with_patience(200)
        .minimize(problem);
    let converged = report.termination.was_successful()
        || matches!(report.termination, TerminationReason::NoImprovementPossible(_));
    finish(&problem, converged, format!("{:?}", report.termination), report.number_of_evaluations)
}

fn finish(p: &Problem<'_>, converged: bool, reason: String, evaluations: usize) -> LsqOutcome {
    let params = p.unscale(&p.u);
    let n = params.len();
    let r = p.eval(&p.u);
    let residual_norm = r.as_ref().map_or(f64::INFINITY, |r| r.norm());
    let m = r.as_ref().map_or(0, |r| r.len());
    let mut covariance = DMatrix::from_element(n, n, f64::INFINITY);
    if let (Some(j), true) = (jacobian(p, &p.u), m > n) {
        let s2 = residual_norm * residual_norm / (m - n) as f64;
        if let Some(inv) = (j.transpose() * &j).try_inverse() {
            let d = DMatrix::from_diagonal(&DVector::from_column_slice(p.scale));
            covariance = &d * inv * &d * s2;
        }
    }
    let sigmas = (0..n)
        .map(|i| {
            let v = covariance[(i, i)];
            if v.is_finite() && v >= 0.0 {
                v.sqrt()
            } else {
                f64::INFINITY
            }
        })
        .collect();
    LsqOutcome {
        params,
        sigmas,
        covariance,
        residual_norm,
        converged: converged && residual_norm.is_finite(),
        reason,
        evaluations,
    }
}

/// Runs [`least_squares`] from each start and keeps the converged outcome
/// with the smallest residual, falling back to the smallest residual overall.
pub fn multi_start(residual: &Residual<'_>, starts: &[Vec<f64>], scale: &[f64]) -> Option<LsqOutcome> {
    let outcomes: Vec<LsqOutcome> = starts.iter().map(|x0| least_squares(residual, x0, scale)).collect();
    let best = |pool: Vec<&LsqOutcome>| {
        pool.into_iter()
            .min_by(|a, b| a.residual_norm.total_cmp(&b.residual_norm))
            .cloned()
    };
    best(outcomes.iter().filter(|o| o.converged).collect()).or_else(|| best(outcomes.iter().collect()))
}

/// Linear-model propagation: `σ_f² = ∇fᵀ Σ ∇f` with a central-difference
/// gradient.
pub fn propagate(f: impl Fn(&[f64]) -> f64, x: &[f64], cov: &DMatrix<f64>, scale: &[f64]) -> f64 {
    let n = x.len();
    let grad: Vec<f64> = (0..n)
        .map(|j| {
            let h = 1e-6 * scale[j].abs().max(x[j].abs() * 1e-3);
            let mut up = x.to_vec();
            let mut dn = x.to_vec();
            up[j] += h;
            dn[j] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        })
        .collect();
    let g = DVector::from_vec(grad);
    let v = (g.transpose() * cov * &g)[(0, 0)];
    if v.is_finite() && v >= 0.0 {
        v.sqrt()
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_exact() {
        let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-1.7 * t).exp()).collect();
        let r = |p: &[f64]| t.iter().zip(&y).map(|(t, y)| p[0] * (-p[1] * t).exp() - y).collect();
        let out = least_squares(&r, &[1.0, 1.0], &[1.0, 1.0]);
        assert!(out.converged, "{}", out.reason);
        assert!((out.params[0] - 3.0).abs() < 1e-9);
        assert!((out.params[1] - 1.7).abs() < 1e-9);
    }

    #[test]
    fn scaling_handles_disparate_magnitudes() {
        let x: Vec<f64> = (0..60).map(|i| 100.0 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|x| 2e9 * (-5e-4 * x).exp()).collect();
        let r = |p: &[f64]| x.iter().zip(&y).map(|(x, y)| (p[0] * (-p[1] * x).exp() - y) / 1e9).collect();
        let out = least_squares(&r, &[1.5e9, 8e-4], &[1e9, 1e-3]);
        assert!(out.converged, "{out:?}");
        assert!(((out.params[0] - 2e9) / 2e9).abs() < 1e-9);
        assert!(((out.params[1] - 5e-4) / 5e-4).abs() < 1e-9);
    }

    #[test]
    fn linear_fit_covariance_matches_closed_form() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let noise = [0.1, -0.2, 0.05, 0.0, 0.3, -0.1, -0.25, 0.15, 0.05, -0.1];
        let y: Vec<f64> = x.iter().zip(noise).map(|(x, e)| 1.0 + 2.0 * x + e).collect();
        let r = |p: &[f64]| x.iter().zip(&y).map(|(x, y)| p[0] + p[1] * x - y).collect();
        let out = least_squares(&r, &[0.0, 0.0], &[1.0, 1.0]);
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
        let s2 = out.residual_norm.powi(2) / (n - 2.0);
        assert!((out.sigmas[1] - (s2 / sxx).sqrt()).abs() < 1e-6 * out.sigmas[1]);
    }

    #[test]
    fn non_finite_residuals_do_not_converge() {
        let r = |p: &[f64]| vec![p[0].ln(), p[0].ln() + 1.0];
        let out = least_squares(&r, &[-1.0], &[1.0]);
        assert!(!out.converged);
    }
}
