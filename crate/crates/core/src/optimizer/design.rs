//! Unit-cell design objective over `x = [a, w, hole_x/a, hole_y/w]`.
//!
//! Each evaluation rebuilds the elliptic-hole cell and derives
//!
//! * `n_eff` from the first two optical bands at the pump frequency,
//! * the zone-edge mechanical frequency from the rod surrogate,
//! * the window margin, phase-match envelopes over `L = N a`,
//! * a sidewall moving-boundary coupling from synthetic standing waves.
//!
//! The objective is minimized: coupling enters with a negative sign.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, NelderMeadOptions, NelderMeadResult};
use crate::bands::{mechanical_bands, optical_bands, MechanicalMedium, OpticalMedium, UnitCellGeometry, DEFAULT_SLICES};
use crate::consts::{angular, cyclic, C, HBAR};
use crate::error::{Error, Result};
use crate::fields::{g0_moving_boundary, sidewall_patches, CavityAssembly, EnvelopeKind, MaterialData, SidewallModel};
use crate::phasematch::{term_mismatches, WavevectorSet};
use crate::window::{window_check, OperatingPoint, SubstrateModel};

const SAMPLES_PER_CELL: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TermWeights {
    pub coupling: f64,
    pub window: f64,
    pub phase: f64,
}

impl Default for TermWeights {
    fn default() -> Self {
        Self {
            coupling: 1.0,
            window: 10.0,
            phase: 1.0,
        }
    }
}

/// Inclusive `[lo, hi]` per design variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignBounds {
    pub a_m: [f64; 2],
    pub w_m: [f64; 2],
    pub hole_x_over_a: [f64; 2],
    pub hole_y_over_w: [f64; 2],
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self {
            a_m: [50e-9, 400e-9],
            w_m: [400e-9, 900e-9],
            hole_x_over_a: [0.2, 0.8],
            hole_y_over_w: [0.2, 0.8],
        }
    }
}

impl DesignBounds {
    pub fn as_pairs(&self) -> Vec<(f64, f64)> {
        [self.a_m, self.w_m, self.hole_x_over_a, self.hole_y_over_w]
            .iter()
            .map(|b| (b[0], b[1]))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DesignObjective {
    pub weights: TermWeights,
    pub bounds: DesignBounds,
    pub lambda0_m: f64,
    /// Defect cells in the cavity, `L = N a`.
    pub n_cells: usize,
    /// Required fractional clearance below the SAW line and above the
    /// cladding index.
    pub min_margin: f64,
    pub substrate: SubstrateModel,
    pub optical: OpticalMedium,
    pub mechanical: MechanicalMedium,
    /// Field input of the coupling term.
    pub sidewall: SidewallModel,
    /// Coupling normalization, Hz.
    pub g0_scale_hz: f64,
    pub harmonics: usize,
    pub slices: usize,
}

impl Default for DesignObjective {
    fn default() -> Self {
        Self {
            weights: TermWeights::default(),
            bounds: DesignBounds::default(),
            lambda0_m: 1550e-9,
            n_cells: 31,
            min_margin: 0.02,
            substrate: SubstrateModel::silicon_dioxide(),
            optical: OpticalMedium::default(),
            mechanical: MechanicalMedium::default(),
            sidewall: SidewallModel {
                height: 220e-9,
                eps_in: 12.1,
                eps_out: 2.1,
                parallel_fraction: 0.7,
                normal_fraction: 0.3,
                normal_projection: 0.4,
                walls: 2,
            },
            g0_scale_hz: 1e6,
            harmonics: 8,
            slices: DEFAULT_SLICES,
        }
    }
}

/// One evaluated design point with the per-term breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEvaluation {
    pub a_m: f64,
    pub w_m: f64,
    pub hole_x_m: f64,
    pub hole_y_m: f64,
    pub n_eff: f64,
    /// rad/m
    pub k_o: f64,
    /// rad/m
    pub k_m: f64,
    /// Pump frequency falls in the optical band gap; `k_o` is pinned to the
    /// zone edge.
    pub optical_in_gap: bool,
    pub f_m_hz: f64,
    pub f_saw_hz: f64,
    pub margin_hz: f64,
    pub in_window: bool,
    /// Absent when the coupling weight is zero.
    pub g0_hz: Option<f64>,
    pub coupling_term: f64,
    pub window_term: f64,
    pub phase_term: f64,
    pub total: f64,
}

impl DesignObjective {
    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        if [w.coupling, w.window, w.phase].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("term weights must be finite and non-negative"));
        }
        if w.coupling + w.window + w.phase == 0.0 {
            return Err(Error::invalid("at least one objective term needs a positive weight"));
        }
        for (i, (lo, hi)) in self.bounds.as_pairs().into_iter().enumerate() {
            if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                return Err(Error::invalid(format!("design bound {i} must satisfy 0 < lo < hi")));
            }
        }
        if self.bounds.hole_x_over_a[1] >= 1.0 || self.bounds.hole_y_over_w[1] >= 1.0 {
            return Err(Error::invalid("hole fractions must stay below 1"));
        }
        if !(self.lambda0_m > 0.0 && self.g0_scale_hz > 0.0) {
            return Err(Error::invalid("wavelength and coupling scale must be positive"));
        }
        if self.n_cells == 0 || self.harmonics == 0 || self.slices == 0 {
            return Err(Error::invalid("cell count, harmonics and slices must be positive"));
        }
        if !(0.0..1.0).contains(&self.min_margin) {
            return Err(Error::invalid("min_margin must lie in [0, 1)"));
        }
        self.substrate.validate()?;
        self.optical.validate()
    }

    /// Design vector of a cell.
    pub fn encode(g: &UnitCellGeometry) -> Vec<f64> {
        vec![g.a, g.w, g.hole_x / g.a, g.hole_y / g.w]
    }

    pub fn decode(&self, x: &[f64], thickness: f64) -> Result<UnitCellGeometry> {
        if x.len() != 4 {
            return Err(Error::invalid(format!("design vector has {} entries, expected 4", x.len())));
        }
        UnitCellGeometry::elliptic_hole(x[0], x[1], thickness, x[2] * x[0], x[3] * x[1], self.slices)
    }

    fn pump_hz(&self) -> f64 {
        C / self.lambda0_m
    }

    /// Optical wavevector at the pump frequency and whether it sits in the gap.
    fn optical_wavevector(&self, g: &UnitCellGeometry) -> Result<(f64, bool)> {
        let nu = self.pump_hz();
        let band = |b: usize, kr: f64| -> Result<f64> {
            Ok(optical_bands(g, &self.optical, &[kr], b + 1, self.harmonics)?.freqs_hz[0][b])
        };
        let edge0 = band(0, 1.0)?;
        if nu <= edge0 {
            let kr = bisect(|kr| band(0, kr).map(|f| f - nu), 0.0, 1.0)?;
            return Ok((kr * PI / g.a, false));
        }
        let edge1 = band(1, 1.0)?;
        if nu < edge1 {
            return Ok((PI / g.a, true));
        }
        let top1 = band(1, 0.0)?;
        if nu > top1 {
            return Err(Error::numerical(format!(
                "pump at {nu:.4e} Hz lies above the second optical band of a = {:.4e} m",
                g.a
            )));
        }
        // band 1 falls from Γ to X; unfold onto |k| ∈ [π/a, 2π/a]
        let kr = bisect(|kr| band(1, kr).map(|f| nu - f), 0.0, 1.0)?;
        Ok(((2.0 - kr) * PI / g.a, false))
    }

    pub fn evaluate_geometry(&self, g: &UnitCellGeometry) -> Result<DesignEvaluation> {
        let (k_o, optical_in_gap) = self.optical_wavevector(g)?;
        let n_eff = k_o * self.lambda0_m / (2.0 * PI);
        let k_m = PI / g.a;
        let f_m_hz = mechanical_bands(g, &self.mechanical, &[1.0], 1, self.harmonics)?.freqs_hz[0][0];
        let point = OperatingPoint::new(n_eff, g.a, self.lambda0_m)?;
        let verdict = window_check(&point, &self.substrate, angular(f_m_hz))?;
        let f_saw_hz = f_m_hz + verdict.margin_hz;

        let relu = |v: f64| v.max(0.0);
        let m = self.min_margin;
        let window_term = relu(f_m_hz - (1.0 - m) * f_saw_hz) / f_saw_hz
            + relu(self.substrate.n_cladding * (1.0 + m) - n_eff) / self.substrate.n_cladding;

        let length = self.n_cells as f64 * g.a;
        let report = term_mismatches(&WavevectorSet::standing_wave(k_o, k_m, length)?);
        let strongest = |co: bool| {
            report
                .entries
                .iter()
                .filter(|e| e.term.is_co_propagating() == co)
                .map(|e| e.envelope)
                .fold(0.0, f64::max)
        };
        let phase_term = (1.0 - strongest(false)) + strongest(true);

        let g0_hz = if self.weights.coupling > 0.0 {
            Some(self.coupling_hz(g, k_o, k_m, f_m_hz)?)
        } else {
            None
        };
        let coupling_term = g0_hz.map_or(0.0, |v| -v / self.g0_scale_hz);
        let w = self.weights;
        let total = w.coupling * coupling_term + w.window * window_term + w.phase * phase_term;
        Ok(DesignEvaluation {
            a_m: g.a,
            w_m: g.w,
            hole_x_m: g.hole_x,
            hole_y_m: g.hole_y,
            n_eff,
            k_o,
            k_m,
            optical_in_gap,
            f_m_hz,
            f_saw_hz,
            margin_hz: verdict.margin_hz,
            in_window: verdict.in_window(),
            g0_hz,
            coupling_term,
            window_term,
            phase_term,
            total,
        })
    }

    fn coupling_hz(&self, g: &UnitCellGeometry, k_o: f64, k_m: f64, f_m_hz: f64) -> Result<f64> {
        let cav = CavityAssembly::synthetic(self.n_cells, g.a, k_o, k_m, EnvelopeKind::Cosine, SAMPLES_PER_CELL)?;
        let patches = sidewall_patches(&cav.optical, &cav.mechanical, &self.sidewall)?;
        let area = g.w * g.thickness;
        let material = MaterialData {
            rho: self.mechanical.rho_hi,
            eps: self.optical.n_hi * self.optical.n_hi,
            optical_area: area,
            mechanical_area: area * g.mean_fill(),
            hbar: HBAR,
        };
        let r = g0_moving_boundary(
            &cav.optical,
            &cav.mechanical,
            &patches,
            &material,
            angular(self.pump_hz()),
            angular(f_m_hz),
        )?;
        Ok(cyclic(r.magnitude))
    }

    pub fn evaluate(&self, x: &[f64], thickness: f64) -> Result<DesignEvaluation> {
        self.evaluate_geometry(&self.decode(x, thickness)?)
    }
}

/// Root of a monotone function on `[lo, hi]` by bisection; clamps to the
/// nearer end when there is no sign change.
fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo >= 0.0 {
        return Ok(lo);
    }
    if f_hi <= 0.0 {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellOptimization {
    pub geometry: UnitCellGeometry,
    pub start: DesignEvaluation,
    pub best: DesignEvaluation,
    /// The returned design lies outside the window.
    pub best_infeasible: bool,
    pub run: NelderMeadResult,
}

impl fmt::Display for CellOptimization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let row = |f: &mut fmt::Formatter<'_>, label: &str, e: &DesignEvaluation| {
            writeln!(
                f,
                "{label:<6} a={:.4e} w={:.4e} hx={:.4e} hy={:.4e} n_eff={:.4} f_m={:.4e} f_saw={:.4e} window={} g0={} | coupling={:.6e} window={:.6e} phase={:.6e} total={:.6e}",
                e.a_m,
                e.w_m,
                e.hole_x_m,
                e.hole_y_m,
                e.n_eff,
                e.f_m_hz,
                e.f_saw_hz,
                if e.in_window { "open" } else { "closed" },
                e.g0_hz.map_or("-".to_string(), |v| format!("{v:.4e}")),
                e.coupling_term,
                e.window_term,
                e.phase_term,
                e.total
            )
        };
        row(f, "start", &self.start)?;
        row(f, "best", &self.best)?;
        writeln!(
            f,
            "iterations={} evaluations={} termination={:?}{}",
            self.run.iterations,
            self.run.evaluations,
            self.run.termination,
            if self.best_infeasible { " (no feasible design found)" } else { "" }
        )
    }
}

/// Runs Nelder-Mead on the design vector of `start`. Bounds come from the
/// objective and override any in `opts`; thickness is held fixed.
pub fn optimize_cell(start: &UnitCellGeometry, obj: &DesignObjective, opts: &NelderMeadOptions) -> Result<CellOptimization> {
    obj.validate()?;
    start.validate()?;
    let thickness = start.thickness;
    let x0 = DesignObjective::encode(start);
    let start_geom = obj.decode(&x0, thickness)?;
    let start_eval = obj.evaluate_geometry(&start_geom)?;
    if !start_eval.total.is_finite() {
        return Err(Error::invalid("design objective is not finite at the start cell"));
    }
    let opts = NelderMeadOptions {
        bounds: Some(obj.bounds.as_pairs()),
        ..opts.clone()
    };
    let run = nelder_mead(
        |x| match obj.evaluate(x, thickness) {
            Ok(e) => e.total,
            Err(err) => {
                log::debug!("design evaluation failed at {x:?}: {err}");
                f64::NAN
            }
        },
        &x0,
        &opts,
    )?;
    let geometry = obj.decode(&run.x, thickness)?;
    let best = obj.evaluate_geometry(&geometry)?;
    Ok(CellOptimization {
        geometry,
        start: start_eval,
        best_infeasible: !best.in_window,
        best,
        run,
    })
}
