//! Seeded, parallel Monte Carlo estimation.
//!
//! Every trial owns an independent generator seeded from
//! `(master_seed, trial_index)`, and all reductions are over integer counts,
//! so results are bit-identical for any number of worker threads.
//!
//! Seed derivation (stable across versions):
//!
//! ```text
//! mix64(z)          = SplitMix64 finalizer:
//!                     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//!                     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//!                     z ^ (z >> 31)
//! trial_seed(m, k)  = mix64(m ^ (k * 0x9E3779B97F4A7C15))
//! cell_seed(m, n, e)= mix64(mix64(m ^ (n * 0xD1B54A32D192ED03)) ^ bits(e))
//! ```
//!
//! Each trial seed initialises a ChaCha8 generator (`seed_from_u64`), and a
//! uniform draw is `(next_u64 >> 11) * 2^-53`, a value in `[0, 1)`.

use num_rational::BigRational;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::Opinion;
use crate::error::{HkError, Result};
use crate::graph;
use crate::model::{self, ArithmeticMode, ModelParams, OpinionProfile};
use crate::verification::disconnect_bound;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
pub const CELL_MULTIPLIER: u64 = 0xD1B5_4A32_D192_ED03;

/// Generator description written into output metadata.
pub const GENERATOR: &str = "ChaCha8 (rand_chacha seed_from_u64); uniform = (next_u64 >> 11) * 2^-53; \
     trial_seed = splitmix64(master ^ index * 0x9E3779B97F4A7C15)";

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, trial_index: u64) -> u64 {
    mix64(master_seed ^ trial_index.wrapping_mul(GOLDEN_GAMMA))
}

/// Seed of one sweep cell. Depends on the cell's own `(n, epsilon)` only, so
/// growing a grid leaves existing cells untouched.
pub fn cell_seed(master_seed: u64, n: usize, epsilon: f64) -> u64 {
    mix64(mix64(master_seed ^ (n as u64).wrapping_mul(CELL_MULTIPLIER)) ^ epsilon.to_bits())
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` independent uniform opinions on `[0, 1)`, sorted.
pub fn sample_initial(n: usize, trial_seed: u64) -> Result<OpinionProfile> {
    if n == 0 {
        return Err(HkError::EmptyProfile);
    }
    let mut rng = rng_from_seed(trial_seed);
    OpinionProfile::new((0..n).map(|_| uniform01(&mut rng)).collect())
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let low = if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) };
    (low, high)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPlan {
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub master_seed: u64,
    /// Model settings; the plan's `epsilon` overrides `params.epsilon`.
    pub params: ModelParams,
}

impl TrialPlan {
    pub fn new(n: usize, epsilon: f64, trials: u64, master_seed: u64, params: ModelParams) -> Result<Self> {
        let plan = TrialPlan { n, epsilon, trials, master_seed, params: params.with_epsilon(epsilon) };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(HkError::EmptyProfile);
        }
        if self.trials == 0 {
            return Err(HkError::InvalidParams("trials must be at least 1".into()));
        }
        self.effective_params().validate()
    }

    pub fn effective_params(&self) -> ModelParams {
        self.params.clone().with_epsilon(self.epsilon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub epsilon: f64,
    pub trials: u64,
    pub successes: u64,
    /// Trials that hit `max_steps` (consensus estimates only).
    pub nonconverged: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Mean convergence step over converged trials.
    pub mean_steps: Option<f64>,
    pub master_seed: u64,
}

impl EstimateRecord {
    fn from_counts(plan: &TrialPlan, counts: Counts) -> Self {
        let (ci_low, ci_high) = wilson_interval(counts.successes, plan.trials);
        let converged = plan.trials - counts.nonconverged;
        EstimateRecord {
            n: plan.n,
            epsilon: plan.epsilon,
            trials: plan.trials,
            successes: counts.successes,
            nonconverged: counts.nonconverged,
            p_hat: counts.successes as f64 / plan.trials as f64,
            ci_low,
            ci_high,
            mean_steps: (counts.tracks_steps && converged > 0).then(|| counts.steps as f64 / converged as f64),
            master_seed: plan.master_seed,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    successes: u64,
    nonconverged: u64,
    steps: u64,
    tracks_steps: bool,
}

impl Counts {
    fn merge(self, other: Counts) -> Counts {
        Counts {
            successes: self.successes + other.successes,
            nonconverged: self.nonconverged + other.nonconverged,
            steps: self.steps + other.steps,
            tracks_steps: self.tracks_steps || other.tracks_steps,
        }
    }
}

/// Outcome of a single simulated trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    Consensus { steps: usize },
    NoConsensus { steps: usize },
    NotConverged,
}

/// Runs one trajectory from `initial` in the arithmetic mode of `params`.
pub fn run_outcome(initial: &OpinionProfile, params: &ModelParams) -> TrialOutcome {
    fn classify<T: Opinion>(r: &model::TrajectoryResult<T>) -> TrialOutcome {
        match r.converged_at {
            None => TrialOutcome::NotConverged,
            Some(steps) if r.consensus => TrialOutcome::Consensus { steps },
            Some(steps) => TrialOutcome::NoConsensus { steps },
        }
    }
    match params.mode {
        ArithmeticMode::Float64 => classify(&model::run(initial, params)),
        ArithmeticMode::ExactRational => {
            let exact: OpinionProfile<BigRational> = initial.to_exact();
            classify(&model::run(&exact, params))
        }
    }
}

fn count_trials<F>(plan: &TrialPlan, per_trial: F) -> Counts
where
    F: Fn(OpinionProfile) -> Counts + Sync,
{
    (0..plan.trials)
        .into_par_iter()
        .map(|k| {
            let initial = sample_initial(plan.n, trial_seed(plan.master_seed, k)).expect("plan validated n >= 1");
            per_trial(initial)
        })
        .reduce(Counts::default, Counts::merge)
}

/// Probability that a uniformly random initial profile reaches consensus.
pub fn estimate_consensus_probability(plan: &TrialPlan) -> Result<EstimateRecord> {
    plan.validate()?;
    let params = plan.effective_params();
    let counts = count_trials(plan, |initial| match run_outcome(&initial, &params) {
        TrialOutcome::Consensus { steps } => {
            Counts { successes: 1, steps: steps as u64, tracks_steps: true, ..Counts::default() }
        }
        TrialOutcome::NoConsensus { steps } => Counts { steps: steps as u64, tracks_steps: true, ..Counts::default() },
        TrialOutcome::NotConverged => Counts { nonconverged: 1, tracks_steps: true, ..Counts::default() },
    });
    Ok(EstimateRecord::from_counts(plan, counts))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisconnectEstimate {
    pub record: EstimateRecord,
    /// `(1 - epsilon)^(n - 2)`, when defined.
    pub bound: Option<f64>,
}

/// Frequency with which the initial opinion graph is disconnected.
pub fn estimate_disconnect_probability(plan: &TrialPlan) -> Result<DisconnectEstimate> {
    plan.validate()?;
    let eps = plan.epsilon;
    let counts = count_trials(plan, |initial| Counts {
        successes: u64::from(!graph::is_connected(&initial, eps)),
        ..Counts::default()
    });
    Ok(DisconnectEstimate {
        record: EstimateRecord::from_counts(plan, counts),
        bound: disconnect_bound(plan.n, eps).ok(),
    })
}

/// Frequency with which the `H_0` predicate holds for the initial profile.
pub fn estimate_h0_frequency(plan: &TrialPlan) -> Result<EstimateRecord> {
    plan.validate()?;
    let eps = plan.epsilon;
    let counts = count_trials(plan, |initial| Counts {
        successes: u64::from(graph::h_statement(&initial, eps)),
        ..Counts::default()
    });
    Ok(EstimateRecord::from_counts(plan, counts))
}

/// Consensus probability over the grid `n_values x epsilon_values`, rows in
/// `(n ascending, epsilon ascending)` order. Duplicate grid values collapse.
pub fn sweep(
    n_values: &[usize],
    epsilon_values: &[f64],
    trials: u64,
    master_seed: u64,
    params: &ModelParams,
) -> Result<Vec<EstimateRecord>> {
    if n_values.is_empty() || epsilon_values.is_empty() {
        return Err(HkError::InvalidParams("sweep grid must be non-empty".into()));
    }
    if epsilon_values.iter().any(|e| !e.is_finite()) {
        return Err(HkError::InvalidParams("epsilon values must be finite".into()));
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let mut eps = epsilon_values.to_vec();
    eps.sort_by(f64::total_cmp);
    eps.dedup();

    let mut out = Vec::with_capacity(ns.len() * eps.len());
    for &n in &ns {
        for &e in &eps {
            let plan = TrialPlan::new(n, e, trials, cell_seed(master_seed, n, e), params.clone())?;
            let mut record = estimate_consensus_probability(&plan)?;
            record.master_seed = master_seed;
            out.push(record);
        }
    }
    Ok(out)
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: one per core).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| HkError::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
