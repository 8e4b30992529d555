//! Deterministic Nelder-Mead with reflection, expansion, contraction and
//! shrink coefficients `(1, 2, 0.5, 0.5)`.
//!
//! With bounds, the search runs in normalized coordinates `u ∈ [0, 1]ⁿ`.
//! Trial points are projected onto the box and charged a quadratic penalty on
//! the projection distance, so every stored vertex is feasible.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Value assigned to a trial point whose objective is not finite.
pub const REJECTED_VALUE: f64 = 1e30;
/// Weight of the squared projection distance (normalized coordinates).
pub const BOUND_PENALTY: f64 = 1e3;
/// Initial axis step as a fraction of each bound range.
pub const INITIAL_STEP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when `max |f_i - f_best|` over the simplex falls below this.
    pub tol_f: f64,
    /// Stop when `max ‖v_i - v_best‖∞` falls below this. Measured in
    /// normalized coordinates when bounds are set.
    pub tol_x: f64,
    /// Inclusive `(lo, hi)` per coordinate.
    pub bounds: Option<Vec<(f64, f64)>>,
    /// Axis steps for the initial simplex in the original coordinates.
    /// Without bounds the default is `0.05 max(|x0_i|, 1)`.
    pub initial_step: Option<Vec<f64>>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol_f: 1e-12,
            tol_x: 1e-10,
            bounds: None,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Init,
    Reflect,
    Expand,
    ContractOutside,
    ContractInside,
    Shrink,
}

impl Operation {
    pub fn as_str(self) -> &'static str {
        match self {
            Operation::Init => "init",
            Operation::Reflect => "reflect",
            Operation::Expand => "expand",
            Operation::ContractOutside => "contract_outside",
            Operation::ContractInside => "contract_inside",
            Operation::Shrink => "shrink",
        }
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    ValueSpread,
    Diameter,
    MaxIterations,
}

/// Simplex after an iteration, sorted best first. Vertices are in the
/// original coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    pub vertices: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub iteration: usize,
    pub diameter: f64,
    pub value_spread: f64,
}

impl SimplexState {
    pub fn best(&self) -> (&[f64], f64) {
        (&self.vertices[0], self.values[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub operation: Operation,
    pub state: SimplexState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Trial points whose objective was NaN or infinite.
    pub rejected: usize,
    pub termination: Termination,
    pub state: SimplexState,
    pub trace: Vec<TraceEntry>,
}

impl NelderMeadResult {
    /// `iteration,operation,best_value,value_spread,diameter,x0,x1,...`
    pub fn trace_csv(&self) -> String {
        let n = self.x.len();
        let mut out = String::from("iteration,operation,best_value,value_spread,diameter");
        for i in 0..n {
            write!(out, ",x{i}").unwrap();
        }
        out.push('\n');
        for e in &self.trace {
            let s = &e.state;
            write!(
                out,
                "{},{},{},{},{}",
                s.iteration, e.operation, s.values[0], s.value_spread, s.diameter
            )
            .unwrap();
            for v in &s.vertices[0] {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

struct Space {
    bounds: Option<Vec<(f64, f64)>>,
}

impl Space {
    fn to_inner(&self, x: &[f64]) -> Vec<f64> {
        match &self.bounds {
            Some(b) => x.iter().zip(b).map(|(v, (lo, hi))| (v - lo) / (hi - lo)).collect(),
            None => x.to_vec(),
        }
    }

    fn to_outer(&self, u: &[f64]) -> Vec<f64> {
        match &self.bounds {
            Some(b) => u.iter().zip(b).map(|(v, (lo, hi))| lo + v * (hi - lo)).collect(),
            None => u.to_vec(),
        }
    }

    /// Projected point and squared projection distance.
    fn project(&self, u: &[f64]) -> (Vec<f64>, f64) {
        if self.bounds.is_none() {
            return (u.to_vec(), 0.0);
        }
        let p: Vec<f64> = u.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        let d2 = u.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        (p, d2)
    }
}

fn validate(x0: &[f64], opts: &NelderMeadOptions) -> Result<()> {
    if x0.is_empty() {
        return Err(Error::invalid("start point has no coordinates"));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("start point must be finite"));
    }
    if !(opts.tol_f >= 0.0 && opts.tol_x >= 0.0) {
        return Err(Error::invalid("tolerances must be non-negative"));
    }
    if let Some(b) = &opts.bounds {
        if b.len() != x0.len() {
            return Err(Error::invalid(format!(
                "{} bounds for {} coordinates",
                b.len(),
                x0.len()
            )));
        }
        for (i, ((lo, hi), x)) in b.iter().zip(x0).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(format!("bound {i} is empty: [{lo}, {hi}]")));
            }
            if x < lo || x > hi {
                return Err(Error::invalid(format!(
                    "start coordinate {i} = {x} lies outside [{lo}, {hi}]"
                )));
            }
        }
    }
    if let Some(s) = &opts.initial_step {
        if s.len() != x0.len() || s.iter().any(|v| !(v.is_finite() && *v != 0.0)) {
            return Err(Error::invalid("initial steps must be finite, nonzero, one per coordinate"));
        }
    }
    Ok(())
}

/// Minimizes `f` from `x0`.
///
/// Non-finite objective values at trial points are replaced by
/// [`REJECTED_VALUE`] and logged; the start simplex itself must evaluate
/// finite.
pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult> {
    validate(x0, opts)?;
    let n = x0.len();
    let space = Space {
        bounds: opts.bounds.clone(),
    };
    let mut evaluations = 0usize;
    let mut rejected = 0usize;
    let mut eval = |u: &[f64]| -> (Vec<f64>, f64, bool) {
        let (p, d2) = space.project(u);
        evaluations += 1;
        let v = f(&space.to_outer(&p));
        if v.is_finite() {
            (p, v + BOUND_PENALTY * d2, true)
        } else {
            log::warn!("objective returned {v} at {:?}; vertex rejected", space.to_outer(&p));
            rejected += 1;
            (p, REJECTED_VALUE, false)
        }
    };

    let u0 = space.to_inner(x0);
    let mut verts = vec![u0.clone()];
    for i in 0..n {
        let step = match (&opts.initial_step, &opts.bounds) {
            (Some(s), Some(b)) => s[i] / (b[i].1 - b[i].0),
            (Some(s), None) => s[i],
            (None, Some(_)) => INITIAL_STEP_FRACTION,
            (None, None) => INITIAL_STEP_FRACTION * x0[i].abs().max(1.0),
        };
        let mut v = u0.clone();
        v[i] += step;
        if opts.bounds.is_some() && v[i] > 1.0 {
            v[i] = u0[i] - step;
        }
        verts.push(v);
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    for v in verts {
        let (p, val, ok) = eval(&v);
        if !ok {
            return Err(Error::invalid(format!(
                "objective is not finite on the initial simplex at {:?}",
                space.to_outer(&p)
            )));
        }
        simplex.push((p, val));
    }

    let snapshot = |s: &[(Vec<f64>, f64)], iteration: usize| -> SimplexState {
        let best = &s[0];
        let diameter = s
            .iter()
            .map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let value_spread = s.iter().map(|(_, v)| (v - best.1).abs()).fold(0.0, f64::max);
        SimplexState {
            vertices: s.iter().map(|(v, _)| space.to_outer(v)).collect(),
            values: s.iter().map(|(_, v)| *v).collect(),
            iteration,
            diameter,
            value_spread,
        }
    };
    // stable: ties keep their previous order
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));

    order(&mut simplex);
    let mut trace = vec![TraceEntry {
        operation: Operation::Init,
        state: snapshot(&simplex, 0),
    }];
    let mut iteration = 0;
    let termination = loop {
        let s = &trace[trace.len() - 1].state;
        if s.value_spread <= opts.tol_f {
            break Termination::ValueSpread;
        }
        if s.diameter <= opts.tol_x {
            break Termination::Diameter;
        }
        if iteration >= opts.max_iter {
            break Termination::MaxIterations;
        }
        iteration += 1;

        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let f_best = simplex[0].1;
        let f_second = simplex[n - 1].1;

        let (xr, fr, _) = eval(&along(REFLECT));
        let op = if fr < f_best {
            let (xe, fe, _) = eval(&along(REFLECT * EXPAND));
            if fe < fr {
                simplex[n] = (xe, fe);
                Operation::Expand
            } else {
                simplex[n] = (xr, fr);
                Operation::Reflect
            }
        } else if fr < f_second {
            simplex[n] = (xr, fr);
            Operation::Reflect
        } else {
            let outside = fr < worst.1;
            let (xc, fc, _) = if outside {
                eval(&along(REFLECT * CONTRACT))
            } else {
                eval(&along(-CONTRACT))
            };
            let accept = if outside { fc <= fr } else { fc < worst.1 };
            if accept {
                simplex[n] = (xc, fc);
                if outside {
                    Operation::ContractOutside
                } else {
                    Operation::ContractInside
                }
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let v: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, x)| b + SHRINK * (x - b))
                        .collect();
                    let (p, val, _) = eval(&v);
                    *vertex = (p, val);
                }
                Operation::Shrink
            }
        };
        order(&mut simplex);
        trace.push(TraceEntry {
            operation: op,
            state: snapshot(&simplex, iteration),
        });
    };

    let state = trace[trace.len() - 1].state.clone();
    Ok(NelderMeadResult {
        x: state.vertices[0].clone(),
        value: state.values[0],
        iterations: iteration,
        evaluations,
        rejected,
        termination,
        state,
        trace,
    })
}
