//! Design and analysis toolkit for clamped optomechanical crystals.
//!
//! The crate covers the full pipeline: the phase-protection operating window
//! ([`window`]), discretized cavity fields and the moving-boundary coupling
//! integral ([`fields`]), six-term phase matching ([`phasematch`]), 1-D
//! band-structure surrogates ([`bands`]), linearized cavity dynamics
//! ([`dynamics`]), measurement reduction ([`analysis`]) and Nelder-Mead design
//! optimization ([`optimizer`]). The `omc` binary wires these together
//! ([`cli`]).
//!
//! Rates and frequencies are angular (rad/s) inside the library. Every file
//! format and CLI flag uses cyclic Hz.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod bands;
pub mod cli;
pub mod consts;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod optimizer;
pub mod phasematch;
pub mod presets;
pub mod spectrum;
pub mod window;

pub use error::{Error, Result};
