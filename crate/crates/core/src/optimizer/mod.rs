//! Simplex search and the unit-cell design loop.

mod design;
mod simplex;

pub use design::{optimize_cell, CellOptimization, DesignBounds, DesignEvaluation, DesignObjective, TermWeights};
pub use simplex::{
    nelder_mead, NelderMeadOptions, NelderMeadResult, Operation, SimplexState, Termination, TraceEntry,
    BOUND_PENALTY, INITIAL_STEP_FRACTION, REJECTED_VALUE,
};
