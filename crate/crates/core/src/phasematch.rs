//! Phase matching of the standing-wave coupling integral.
//!
//! With forward/backward optical and mechanical components, the squared
//! optical field times the displacement expands into six terms whose spatial
//! phase varies as `exp(i Δk x)`. Integrated over a cavity of length `L`, each
//! term is suppressed by `|sin(ΔkL)/(ΔkL)|`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|ΔkL|` the sinc is evaluated from its Taylor series.
pub const SERIES_CROSSOVER: f64 = 1e-8;

/// Default phase-match threshold on `|sinc|`.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Forward/backward wavevectors of the optical and mechanical fields, rad/m,
/// and the cavity length in m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavevectorSet {
    pub k_of: f64,
    pub k_ob: f64,
    pub k_mf: f64,
    pub k_mb: f64,
    pub length: f64,
}

impl WavevectorSet {
    pub fn new(k_of: f64, k_ob: f64, k_mf: f64, k_mb: f64, length: f64) -> Result<Self> {
        let w = Self {
            k_of,
            k_ob,
            k_mf,
            k_mb,
            length,
        };
        w.validate()?;
        Ok(w)
    }

    /// Counter-propagating standing waves: `k_of = -k_ob = k_o`,
    /// `k_mf = -k_mb = k_m`.
    pub fn standing_wave(k_o: f64, k_m: f64, length: f64) -> Result<Self> {
        Self::new(k_o, -k_o, k_m, -k_m, length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return Err(Error::invalid(format!(
                "cavity length must be positive, got {}",
                self.length
            )));
        }
        if [self.k_of, self.k_ob, self.k_mf, self.k_mb]
            .iter()
            .any(|k| !k.is_finite())
        {
            return Err(Error::invalid("wavevectors must be finite"));
        }
        Ok(())
    }

    /// Relabel forward and backward on both fields.
    pub fn swapped(&self) -> Self {
        Self {
            k_of: self.k_ob,
            k_ob: self.k_of,
            k_mf: self.k_mb,
            k_mb: self.k_mf,
            length: self.length,
        }
    }
}

/// The six terms of the expanded overlap integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    I,
    II,
    III,
    IV,
    V,
    VI,
}

impl Term {
    pub const ALL: [Term; 6] = [Term::I, Term::II, Term::III, Term::IV, Term::V, Term::VI];

    pub fn label(self) -> &'static str {
        match self {
            Term::I => "i",
            Term::II => "ii",
            Term::III => "iii",
            Term::IV => "iv",
            Term::V => "v",
            Term::VI => "vi",
        }
    }

    /// Phase mismatch of this term.
    pub fn delta_k(self, w: &WavevectorSet) -> f64 {
        let dko = w.k_of - w.k_ob;
        match self {
            Term::I => w.k_mf,
            Term::II => w.k_mf + dko,
            Term::III => w.k_mf - dko,
            Term::IV => w.k_mb,
            Term::V => w.k_mb + dko,
            Term::VI => w.k_mb - dko,
        }
    }

    /// Terms (i) and (iv) carry only `|E_f|²`/`|E_b|²`: pump and sideband
    /// travel together. The rest mix forward and backward optics.
    pub fn is_co_propagating(self) -> bool {
        matches!(self, Term::I | Term::IV)
    }

    /// Image of this term under `f ↔ b` relabeling of optics and mechanics.
    pub fn mirrored(self) -> Term {
        match self {
            Term::I => Term::IV,
            Term::II => Term::VI,
            Term::III => Term::V,
            Term::IV => Term::I,
            Term::V => Term::III,
            Term::VI => Term::II,
        }
    }

    /// Sign branch of `k_m = ±(k_of - k_ob)` (with `k_m ≡ k_mf = -k_mb`)
    /// under which a counter-propagating term is matched.
    pub fn sign_branch(self) -> Option<SignBranch> {
        match self {
            Term::III | Term::V => Some(SignBranch::Plus),
            Term::II | Term::VI => Some(SignBranch::Minus),
            Term::I | Term::IV => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignBranch {
    Plus,
    Minus,
}

/// `|sin(ΔkL)/(ΔkL)|`, exactly 1 at `Δk = 0`.
pub fn suppression_factor(delta_k: f64, length: f64) -> f64 {
    sinc_abs(delta_k * length)
}

/// Envelope of the sinc, `min(1, 1/|ΔkL|)`.
pub fn suppression_envelope(delta_k: f64, length: f64) -> f64 {
    let x = (delta_k * length).abs();
    if x <= 1.0 {
        1.0
    } else {
        1.0 / x
    }
}

fn sinc_abs(x: f64) -> f64 {
    if x.abs() < SERIES_CROSSOVER {
        1.0 - x * x / 6.0
    } else {
        (x.sin() / x).abs().min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: Term,
    /// rad/m
    pub delta_k: f64,
    /// `ΔkL`, the accumulated mismatch phase.
    pub phase: f64,
    pub suppression: f64,
    pub envelope: f64,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermReport {
    pub entries: Vec<TermEntry>,
    pub threshold: f64,
    pub length: f64,
}

impl TermReport {
    pub fn entry(&self, term: Term) -> &TermEntry {
        &self.entries[Term::ALL.iter().position(|t| *t == term).unwrap()]
    }

    pub fn matched_terms(&self) -> Vec<Term> {
        self.entries.iter().filter(|e| e.matched).map(|e| e.term).collect()
    }
}

impl fmt::Display for TermReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<5} {:>14} {:>12} {:>12} {:>12} {:>8}",
            "term", "dk (rad/m)", "dk*L", "|sinc|", "envelope", "matched"
        )?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<5} {:>14.6e} {:>12.4} {:>12.4e} {:>12.4e} {:>8}",
                e.term.label(),
                e.delta_k,
                e.phase,
                e.suppression,
                e.envelope,
                if e.matched { "yes" } else { "no" }
            )?;
        }
        Ok(())
    }
}

/// Six-term mismatch table at the default threshold.
pub fn term_mismatches(w: &WavevectorSet) -> TermReport {
    term_mismatches_with(w, DEFAULT_THRESHOLD)
}

pub fn term_mismatches_with(w: &WavevectorSet, threshold: f64) -> TermReport {
    let entries = Term::ALL
        .iter()
        .map(|&term| {
            let delta_k = term.delta_k(w);
            let suppression = suppression_factor(delta_k, w.length);
            TermEntry {
                term,
                delta_k,
                phase: delta_k * w.length,
                suppression,
                envelope: suppression_envelope(delta_k, w.length),
                matched: suppression > threshold,
            }
        })
        .collect();
    TermReport {
        entries,
        threshold,
        length: w.length,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionClass {
    CounterPropagating,
    CoPropagating,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: InteractionClass,
    /// Both co- and counter-propagating terms pass the threshold.
    pub ambiguous: bool,
    /// Terms above threshold, strongest first.
    pub dominant: Vec<Term>,
    /// Sign branches of the matched counter-propagating terms.
    pub branches: Vec<SignBranch>,
    pub report: TermReport,
}

pub fn classify_interaction(w: &WavevectorSet, threshold: f64) -> Result<Classification> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    w.validate()?;
    let report = term_mismatches_with(w, threshold);
    let mut dominant: Vec<&TermEntry> = report.entries.iter().filter(|e| e.matched).collect();
    // stable sort keeps term order on ties
    dominant.sort_by(|a, b| b.suppression.total_cmp(&a.suppression));

    let co = dominant.iter().any(|e| e.term.is_co_propagating());
    let counter = dominant.iter().any(|e| !e.term.is_co_propagating());
    let class = match dominant.first() {
        None => InteractionClass::None,
        Some(e) if e.term.is_co_propagating() => InteractionClass::CoPropagating,
        Some(_) => InteractionClass::CounterPropagating,
    };
    let mut branches = Vec::new();
    for e in &dominant {
        if let Some(b) = e.term.sign_branch() {
            if !branches.contains(&b) {
                branches.push(b);
            }
        }
    }
    Ok(Classification {
        class,
        ambiguous: co && counter,
        dominant: dominant.iter().map(|e| e.term).collect(),
        branches,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn suspended_limit_keeps_terms_i_and_iv() {
        let w = WavevectorSet::new(3.0, 3.0, 0.0, 0.0, 1.0).unwrap();
        let r = term_mismatches(&w);
        assert_eq!(r.entry(Term::I).delta_k, 0.0);
        assert_eq!(r.entry(Term::I).suppression, 1.0);
        assert_eq!(r.entry(Term::IV).suppression, 1.0);
    }

    #[test]
    fn backward_matching_uses_terms_iii_and_v() {
        let k_o = 2.0e6;
        let w = WavevectorSet::standing_wave(k_o, 2.0 * k_o, 31.0 * 188e-9).unwrap();
        let r = term_mismatches(&w);
        assert_eq!(r.entry(Term::III).delta_k, 0.0);
        assert_eq!(r.entry(Term::V).delta_k, 0.0);
        assert_eq!(r.entry(Term::III).suppression, 1.0);
        assert_eq!(r.matched_terms(), vec![Term::III, Term::V]);
    }

    #[test]
    fn first_null() {
        let l = 2.0;
        assert!(suppression_factor(PI / l, l) < 1e-15);
        assert!(suppression_factor(2.0 * PI / l, l) < 1e-15);
        assert_eq!(suppression_factor(0.0, l), 1.0);
    }

    #[test]
    fn half_zone_optics_is_counter_propagating() {
        let a = 188e-9;
        let k_o = PI / (2.0 * a);
        let w = WavevectorSet::standing_wave(k_o, PI / a, 31.0 * a).unwrap();
        let c = classify_interaction(&w, DEFAULT_THRESHOLD).unwrap();
        assert_eq!(c.class, InteractionClass::CounterPropagating);
        assert!(!c.ambiguous);
        assert_eq!(c.dominant, vec![Term::III, Term::V]);
        assert_eq!(c.branches, vec![SignBranch::Plus]);
        let co = c.report.entry(Term::I);
        assert!((co.phase - 31.0 * PI).abs() < 1e-9);
        assert!((co.envelope - 1.0 / (31.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn all_zero_is_ambiguous() {
        let w = WavevectorSet::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let c = classify_interaction(&w, 0.5).unwrap();
        assert!(c.ambiguous);
        assert_eq!(c.dominant.len(), 6);
    }

    #[test]
    fn mismatched_mechanics_matches_nothing() {
        let a = 188e-9;
        let k_o = PI / (2.0 * a);
        let w = WavevectorSet::standing_wave(k_o, 1.5 * k_o, 31.0 * a).unwrap();
        let c = classify_interaction(&w, 0.5).unwrap();
        assert_eq!(c.class, InteractionClass::None);
        // oracle: |Δk_iii L| = 0.5 k_o L = 7.75π
        let x = 7.75 * PI;
        let s = (x.sin() / x).abs();
        assert!((c.report.entry(Term::III).suppression - s).abs() < 1e-12);
    }

    #[test]
    fn bad_threshold_and_length() {
        let w = WavevectorSet::new(0.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert!(classify_interaction(&w, 1.0).is_err());
        assert!(classify_interaction(&w, 0.0).is_err());
        assert!(WavevectorSet::new(0.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn series_crossover_is_continuous() {
        let below = sinc_abs(SERIES_CROSSOVER * (1.0 - 1e-12));
        let above = sinc_abs(SERIES_CROSSOVER * (1.0 + 1e-12));
        assert!((below - above).abs() <= 1e-15);
    }

    proptest! {
        #[test]
        fn sinc_even_and_bounded(dk in -1e8f64..1e8, l in 1e-9f64..1e-3) {
            let s = suppression_factor(dk, l);
            prop_assert_eq!(s, suppression_factor(-dk, l));
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!(s <= suppression_envelope(dk, l) + 1e-15);
        }

        #[test]
        fn relabeling_permutes_terms(
            kof in -1e7f64..1e7, kob in -1e7f64..1e7,
            kmf in -1e7f64..1e7, kmb in -1e7f64..1e7,
        ) {
            let w = WavevectorSet::new(kof, kob, kmf, kmb, 1e-6).unwrap();
            let s = w.swapped();
            for t in Term::ALL {
                prop_assert_eq!(t.delta_k(&w).abs(), t.mirrored().delta_k(&s).abs());
            }
        }
    }
}
