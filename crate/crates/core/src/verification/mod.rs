//! Executable checks of the structural properties of the synchronous model.
//!
//! Each suite draws random instances from a seed, checks one property per
//! instance, and reports every offending input. Case `k` uses its own
//! generator seeded by `trial_seed(seed, k)`, so a suite is deterministic in
//! `(suite, cases, seed)` regardless of how cases are spread over threads.

mod generate;
mod matching;
mod suites;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{HkError, Result};
use crate::montecarlo::{rng_from_seed, trial_seed};

pub use generate::{instance, instance_of_shape, Instance, Shape};
pub use matching::{matching_decomposition, MatchingDecomposition, MatchingTerm, ZERO_SUM_TOL};

/// `(1 - epsilon)^(n - 2)`, an upper bound on the probability that `n`
/// uniform opinions form a disconnected opinion graph.
pub fn disconnect_bound(n: usize, epsilon: f64) -> Result<f64> {
    if n < 2 {
        return Err(HkError::Domain(format!("disconnect bound needs n >= 2, got {n}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HkError::Domain(format!("disconnect bound needs 0 < epsilon < 1, got {epsilon}")));
    }
    let base = 1.0 - epsilon;
    Ok(match i32::try_from(n - 2) {
        Ok(k) => base.powi(k),
        Err(_) => base.powf((n - 2) as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    OrderPreserving,
    DisconnectedPreserving,
    GapCriterion,
    EdgePersistence,
    HInductive,
    Matching,
    OracleEquivalence,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::OrderPreserving,
        Suite::DisconnectedPreserving,
        Suite::GapCriterion,
        Suite::EdgePersistence,
        Suite::HInductive,
        Suite::Matching,
        Suite::OracleEquivalence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::OrderPreserving => "order-preserving",
            Suite::DisconnectedPreserving => "disconnected-preserving",
            Suite::GapCriterion => "gap-criterion",
            Suite::EdgePersistence => "edge-persistence",
            Suite::HInductive => "h-inductive",
            Suite::Matching => "matching",
            Suite::OracleEquivalence => "oracle-equivalence",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = HkError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| HkError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub case: u64,
    /// The offending input, as JSON.
    pub input: serde_json::Value,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite: String,
    pub cases: u64,
    /// Cases in which the property's premise held (for implications such as
    /// "disconnected now implies disconnected next step").
    pub exercised: u64,
    pub violations: Vec<Violation>,
    pub seed: u64,
    pub elapsed_ms: u64,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Result of checking one case.
pub(crate) struct CaseResult {
    pub exercised: bool,
    pub violation: Option<(serde_json::Value, String)>,
}

impl CaseResult {
    pub fn vacuous() -> Self {
        CaseResult { exercised: false, violation: None }
    }

    pub fn ok() -> Self {
        CaseResult { exercised: true, violation: None }
    }

    pub fn fail(input: serde_json::Value, detail: impl Into<String>) -> Self {
        CaseResult { exercised: true, violation: Some((input, detail.into())) }
    }
}

pub fn run_suite(suite: Suite, cases: u64, seed: u64) -> VerificationReport {
    let started = Instant::now();
    let check = suites::checker(suite);
    let results: Vec<CaseResult> =
        (0..cases).into_par_iter().map(|k| check(&mut rng_from_seed(trial_seed(seed, k)))).collect();
    let exercised = results.iter().filter(|r| r.exercised).count() as u64;
    let violations = results
        .into_iter()
        .enumerate()
        .filter_map(|(k, r)| r.violation.map(|(input, detail)| Violation { case: k as u64, input, detail }))
        .collect();
    VerificationReport {
        suite: suite.name().to_string(),
        cases,
        exercised,
        violations,
        seed,
        elapsed_ms: started.elapsed().as_millis() as u64,
    }
}

/// [`run_suite`] with the suite given by name.
pub fn run_suite_named(name: &str, cases: u64, seed: u64) -> Result<VerificationReport> {
    Ok(run_suite(name.parse()?, cases, seed))
}
