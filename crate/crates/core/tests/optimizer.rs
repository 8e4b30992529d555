use omc_core::bands::UnitCellGeometry;
use omc_core::optimizer::{optimize_cell, DesignObjective, NelderMeadOptions, TermWeights};
use omc_core::window::{linspace, SubstrateModel};

const W: f64 = 643e-9;

fn cell(a: f64, hx: f64, hy: f64) -> UnitCellGeometry {
    UnitCellGeometry::elliptic_hole(a, W, 220e-9, hx * a, hy * W, 8).unwrap()
}

fn window_only() -> DesignObjective {
    DesignObjective {
        weights: TermWeights { coupling: 0.0, window: 10.0, phase: 0.0 },
        ..Default::default()
    }
}

fn opts(max_iter: usize) -> NelderMeadOptions {
    NelderMeadOptions { max_iter, tol_f: 1e-12, tol_x: 1e-10, ..Default::default() }
}

#[test]
fn window_only_run_enters_the_window() {
    let obj = window_only();
    let start = cell(55e-9, 0.3, 0.5);
    assert!(!obj.evaluate_geometry(&start).unwrap().in_window);

    // oracle: the window is reachable inside the bounds
    let feasible = linspace(obj.bounds.a_m[0], obj.bounds.a_m[1], 15)
        .into_iter()
        .any(|a| obj.evaluate_geometry(&cell(a, 0.5, 0.5)).map(|e| e.in_window).unwrap_or(false));
    assert!(feasible);

    let r = optimize_cell(&start, &obj, &opts(200)).unwrap();
    assert!(!r.best_infeasible, "{r}");
    assert!(r.best.in_window);
    assert_eq!(r.best.window_term, 0.0);
    assert!(r.best.total <= r.start.total);
}

#[test]
fn coupling_weight_zero_ignores_the_sidewall_model() {
    let a = window_only();
    let mut b = window_only();
    b.sidewall.eps_out = b.sidewall.eps_in;
    b.sidewall.normal_projection = 0.9;
    let start = cell(120e-9, 0.4, 0.4);
    let ra = optimize_cell(&start, &a, &opts(40)).unwrap();
    let rb = optimize_cell(&start, &b, &opts(40)).unwrap();
    assert_eq!(ra.run.trace_csv(), rb.run.trace_csv());
    assert!(ra.best.g0_hz.is_none());
}

#[test]
fn full_objective_from_reference_cell() {
    let obj = DesignObjective::default();
    let r = optimize_cell(&cell(188e-9, 0.5, 0.5), &obj, &opts(150)).unwrap();
    assert!(r.best.in_window, "{r}");
    assert!(r.best.a_m < 375e-9);
    assert!(r.best.total <= r.start.total);
    assert!(r.best.g0_hz.unwrap() > 0.0);

    let values: Vec<f64> = r.run.trace.iter().map(|t| t.state.values[0]).collect();
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    let bounds = obj.bounds.as_pairs();
    for t in &r.run.trace {
        for v in &t.state.vertices {
            for (x, (lo, hi)) in v.iter().zip(&bounds) {
                assert!(x >= lo && x <= hi, "{x} outside [{lo}, {hi}]");
            }
        }
    }
}

#[test]
fn unreachable_window_is_flagged() {
    // a SAW line this slow sits below every attainable mechanical frequency
    let obj = DesignObjective {
        substrate: SubstrateModel::new(10.0, 1.45).unwrap(),
        ..window_only()
    };
    let r = optimize_cell(&cell(188e-9, 0.5, 0.5), &obj, &opts(30)).unwrap();
    assert!(r.best_infeasible);
    assert!(r.to_string().contains("no feasible design"));
}

#[test]
fn invalid_objective_is_rejected() {
    let obj = DesignObjective { n_cells: 0, ..Default::default() };
    assert!(optimize_cell(&cell(188e-9, 0.5, 0.5), &obj, &opts(10)).is_err());
}
