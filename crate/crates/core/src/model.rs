//! Opinion profiles and the Hegselmann-Krause update operators.
//!
//! Profiles are kept in canonical (ascending) order. The synchronous update
//! never reorders agents, so every neighbourhood is a contiguous index range
//! of the sorted profile and one step costs O(n) with prefix sums.

use std::fmt;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arith::Opinion;
use crate::error::{HkError, Result};
use crate::graph;

pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-13;
pub const DEFAULT_CONSENSUS_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ArithmeticMode {
    #[default]
    Float64,
    ExactRational,
}

impl fmt::Display for ArithmeticMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithmeticMode::Float64 => "float64",
            ArithmeticMode::ExactRational => "exact-rational",
        })
    }
}

impl std::str::FromStr for ArithmeticMode {
    type Err = HkError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" | "float64" | "f64" => Ok(ArithmeticMode::Float64),
            "rational" | "exact-rational" | "exact" => Ok(ArithmeticMode::ExactRational),
            other => Err(HkError::InvalidParams(format!("unknown arithmetic mode `{other}`"))),
        }
    }
}

/// Parameters of one simulation.
///
/// `epsilon` is stored as `f64`; in exact-rational mode it is converted
/// exactly to the rational it denotes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    pub mode: ArithmeticMode,
    /// Float mode only: a step whose largest displacement is at most this
    /// counts as a fixed point.
    pub convergence_tol: f64,
    /// Largest spread a group of agents may have and still count as one
    /// cluster (float mode; exact mode requires zero spread).
    pub consensus_tol: f64,
    pub max_steps: usize,
    /// Record connectivity of the opinion graph at every step of `run`.
    pub track_connectivity: bool,
}

impl ModelParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        let params = ModelParams {
            epsilon,
            mode: ArithmeticMode::Float64,
            // the tolerance must stay below epsilon for tiny thresholds
            convergence_tol: DEFAULT_CONVERGENCE_TOL.min(epsilon / 2.0),
            consensus_tol: DEFAULT_CONSENSUS_TOL,
            max_steps: DEFAULT_MAX_STEPS,
            track_connectivity: false,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_mode(mut self, mode: ArithmeticMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = max_steps;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_tracking(mut self, track: bool) -> Self {
        self.track_connectivity = track;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(HkError::InvalidParams(format!("epsilon must be a finite number > 0, got {}", self.epsilon)));
        }
        if !(self.convergence_tol >= 0.0 && self.convergence_tol < self.epsilon) {
            return Err(HkError::InvalidParams(format!(
                "convergence_tol must lie in [0, epsilon), got {}",
                self.convergence_tol
            )));
        }
        if !(self.consensus_tol >= 0.0 && self.consensus_tol.is_finite()) {
            return Err(HkError::InvalidParams(format!(
                "consensus_tol must be finite and >= 0, got {}",
                self.consensus_tol
            )));
        }
        if self.max_steps < 1 {
            return Err(HkError::InvalidParams("max_steps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn epsilon_as<T: Opinion>(&self) -> T {
        T::from_f64(self.epsilon)
    }
}

/// Opinions of all agents at one time step, sorted ascending.
///
/// Position `i` of the canonical profile is the `(i+1)`-th order statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionProfile<T = f64> {
    opinions: Vec<T>,
    time: u64,
}

pub type ExactProfile = OpinionProfile<BigRational>;

impl<T: Opinion> OpinionProfile<T> {
    /// Validates that all opinions lie in `[0, 1]` and sorts them.
    pub fn new(mut opinions: Vec<T>) -> Result<Self> {
        if opinions.is_empty() {
            return Err(HkError::EmptyProfile);
        }
        let (zero, one) = (T::zero(), T::one());
        for (index, x) in opinions.iter().enumerate() {
            if !x.is_finite() || *x < zero || *x > one {
                return Err(HkError::OpinionOutOfRange { index, value: x.to_f64() });
            }
        }
        opinions.sort_by(T::total_cmp);
        Ok(OpinionProfile { opinions, time: 0 })
    }

    pub(crate) fn from_sorted(opinions: Vec<T>, time: u64) -> Self {
        debug_assert!(is_sorted(&opinions));
        OpinionProfile { opinions, time }
    }

    pub fn opinions(&self) -> &[T] {
        &self.opinions
    }

    pub fn into_opinions(self) -> Vec<T> {
        self.opinions
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    pub fn len(&self) -> usize {
        self.opinions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opinions.is_empty()
    }

    /// The image of this profile under `x -> 1 - x`, re-sorted.
    pub fn reflect(&self) -> Self {
        let one = T::one();
        let opinions = self.opinions.iter().rev().map(|x| one.sub(x)).collect();
        OpinionProfile { opinions, time: self.time }
    }

    pub fn to_f64(&self) -> OpinionProfile<f64> {
        OpinionProfile { opinions: self.opinions.iter().map(T::to_f64).collect(), time: self.time }
    }
}

impl OpinionProfile<f64> {
    /// Exact rational image of a float profile.
    pub fn to_exact(&self) -> ExactProfile {
        OpinionProfile { opinions: self.opinions.iter().map(|&x| BigRational::from_f64(x)).collect(), time: self.time }
    }
}

fn is_sorted<T: PartialOrd>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] <= w[1])
}

/// Inclusive index range `[lo, hi]` of the sorted profile holding an agent's
/// opinion neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborWindow {
    pub lo: usize,
    pub hi: usize,
}

impl NeighborWindow {
    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, j: usize) -> bool {
        self.lo <= j && j <= self.hi
    }
}

#[inline]
fn within<T: Opinion>(a: &T, b: &T, epsilon: &T) -> bool {
    a.abs_diff(b) <= *epsilon
}

/// Neighbour window of agent `i` in a sorted slice, by binary search.
pub fn window_of<T: Opinion>(xs: &[T], i: usize, epsilon: &T) -> Result<NeighborWindow> {
    if i >= xs.len() {
        return Err(HkError::IndexOutOfRange { index: i, len: xs.len() });
    }
    let xi = &xs[i];
    let lo = xs[..i].partition_point(|x| !within(x, xi, epsilon));
    let hi = i + xs[i..].partition_point(|x| within(x, xi, epsilon)) - 1;
    Ok(NeighborWindow { lo, hi })
}

/// Neighbour windows of every agent of a sorted slice, by two pointers.
pub fn windows<T: Opinion>(xs: &[T], epsilon: &T) -> Vec<NeighborWindow> {
    let n = xs.len();
    let mut out = Vec::with_capacity(n);
    let (mut lo, mut hi) = (0, 0);
    for i in 0..n {
        while !within(&xs[lo], &xs[i], epsilon) {
            lo += 1;
        }
        if hi < i {
            hi = i;
        }
        while hi + 1 < n && within(&xs[hi + 1], &xs[i], epsilon) {
            hi += 1;
        }
        out.push(NeighborWindow { lo, hi });
    }
    out
}

pub fn neighbors<T: Opinion>(profile: &OpinionProfile<T>, i: usize, params: &ModelParams) -> Result<NeighborWindow> {
    window_of(profile.opinions(), i, &params.epsilon_as::<T>())
}

/// One synchronous update of a sorted slice, prefix-sum path. The output is
/// returned in agent order without re-sorting.
pub fn sync_update<T: Opinion>(xs: &[T], epsilon: &T) -> Vec<T> {
    let prefix = T::prefix_sums(xs);
    windows(xs, epsilon).into_iter().map(|w| T::window_mean(&prefix, w.lo, w.hi)).collect()
}

/// One synchronous update by direct pairwise scan. Accepts agents in any
/// order; quadratic.
pub fn sync_update_naive<T: Opinion>(xs: &[T], epsilon: &T) -> Vec<T> {
    xs.iter().map(|xi| T::mean_of(xs.iter().filter(|xj| within(*xj, xi, epsilon)))).collect()
}

fn canonicalize<T: Opinion>(mut next: Vec<T>, time: u64) -> OpinionProfile<T> {
    // Order is preserved exactly in rational mode; in float mode a rounding
    // tie may leave two equal-in-exact-arithmetic neighbours one ulp apart.
    if !is_sorted(&next) {
        debug_assert!(!T::EXACT, "exact synchronous update produced unsorted output");
        next.sort_by(T::total_cmp);
    }
    OpinionProfile::from_sorted(next, time)
}

pub fn sync_step<T: Opinion>(profile: &OpinionProfile<T>, params: &ModelParams) -> OpinionProfile<T> {
    let next = sync_update(profile.opinions(), &params.epsilon_as::<T>());
    canonicalize(next, profile.time + 1)
}

pub fn sync_step_naive<T: Opinion>(profile: &OpinionProfile<T>, params: &ModelParams) -> OpinionProfile<T> {
    let next = sync_update_naive(profile.opinions(), &params.epsilon_as::<T>());
    canonicalize(next, profile.time + 1)
}

/// Moves only `agent` (an index into the sorted profile) to the mean of its
/// neighbour window, then re-sorts.
pub fn async_step<T: Opinion>(
    profile: &OpinionProfile<T>,
    params: &ModelParams,
    agent: usize,
) -> Result<OpinionProfile<T>> {
    let xs = profile.opinions();
    let w = window_of(xs, agent, &params.epsilon_as::<T>())?;
    let mut next = xs.to_vec();
    next[agent] = T::mean_of(&xs[w.lo..=w.hi]);
    next.sort_by(T::total_cmp);
    Ok(OpinionProfile::from_sorted(next, profile.time + 1))
}

/// Asynchronous step with the updating agent drawn uniformly.
pub fn async_step_random<T: Opinion, R: Rng + ?Sized>(
    profile: &OpinionProfile<T>,
    params: &ModelParams,
    rng: &mut R,
) -> OpinionProfile<T> {
    let agent = rng.random_range(0..profile.len());
    async_step(profile, params, agent).expect("agent drawn in range")
}

fn settled<T: Opinion>(a: &[T], b: &[T], tol: f64) -> bool {
    if T::EXACT {
        a == b
    } else {
        a.iter().zip(b).all(|(x, y)| x.abs_diff(y).to_f64() <= tol)
    }
}

pub fn is_fixed_point<T: Opinion>(profile: &OpinionProfile<T>, params: &ModelParams) -> bool {
    let next = sync_step(profile, params);
    settled(profile.opinions(), next.opinions(), params.convergence_tol)
}

/// A group of agents holding (within tolerance) one terminal opinion.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster<T = f64> {
    pub value: T,
    pub size: usize,
    /// Index range in the final sorted profile.
    pub lo: usize,
    pub hi: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult<T = f64> {
    /// First step `t` at which the profile was a fixed point.
    pub converged_at: Option<usize>,
    pub final_profile: OpinionProfile<T>,
    pub clusters: Vec<Cluster<T>>,
    pub consensus: bool,
    /// Connectivity of the opinion graph at `t = 0, 1, ...`, when tracked.
    pub connectivity_history: Option<Vec<bool>>,
}

impl<T: Opinion> TrajectoryResult<T> {
    pub fn converged(&self) -> bool {
        self.converged_at.is_some()
    }
}

/// Groups a sorted profile into clusters: components of the opinion graph,
/// each further split wherever its spread exceeds `consensus_tol` (exact
/// mode: wherever adjacent values differ).
pub fn clusters<T: Opinion>(xs: &[T], epsilon: &T, consensus_tol: f64) -> Vec<Cluster<T>> {
    let mut out = Vec::new();
    for comp in graph::components_of(xs, epsilon) {
        let (lo, hi) = (*comp.start(), *comp.end());
        let spread_ok = if T::EXACT { xs[lo] == xs[hi] } else { xs[hi].sub(&xs[lo]).to_f64() <= consensus_tol };
        if spread_ok {
            out.push(make_cluster(xs, lo, hi));
            continue;
        }
        let mut start = lo;
        for k in lo..hi {
            let split = if T::EXACT { xs[k] != xs[k + 1] } else { xs[k + 1].sub(&xs[k]).to_f64() > consensus_tol };
            if split {
                out.push(make_cluster(xs, start, k));
                start = k + 1;
            }
        }
        out.push(make_cluster(xs, start, hi));
    }
    out
}

fn make_cluster<T: Opinion>(xs: &[T], lo: usize, hi: usize) -> Cluster<T> {
    Cluster { value: T::mean_of(&xs[lo..=hi]), size: hi - lo + 1, lo, hi }
}

/// Iterates the synchronous update until a fixed point or `max_steps`.
pub fn run<T: Opinion>(initial: &OpinionProfile<T>, params: &ModelParams) -> TrajectoryResult<T> {
    run_observed(initial, params, |_| {})
}

/// Like [`run`], calling `observe` on the profile at every visited step
/// `t = 0, 1, ...` up to and including the final one.
pub fn run_observed<T: Opinion, F: FnMut(&OpinionProfile<T>)>(
    initial: &OpinionProfile<T>,
    params: &ModelParams,
    mut observe: F,
) -> TrajectoryResult<T> {
    let epsilon = params.epsilon_as::<T>();
    let mut history = params.track_connectivity.then(Vec::new);
    let mut current = initial.clone();
    let mut converged_at = None;
    for t in 0..=params.max_steps {
        observe(&current);
        if let Some(h) = history.as_mut() {
            h.push(graph::is_connected_slice(current.opinions(), &epsilon));
        }
        if t == params.max_steps {
            break;
        }
        let next = canonicalize(sync_update(current.opinions(), &epsilon), current.time + 1);
        if settled(current.opinions(), next.opinions(), params.convergence_tol) {
            converged_at = Some(t);
            break;
        }
        current = next;
    }
    let clusters = clusters(current.opinions(), &epsilon, params.consensus_tol);
    let consensus = clusters.len() == 1;
    TrajectoryResult { converged_at, final_profile: current, clusters, consensus, connectivity_history: history }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(xs: &[f64]) -> OpinionProfile {
        OpinionProfile::new(xs.to_vec()).unwrap()
    }

    fn params(eps: f64) -> ModelParams {
        ModelParams::new(eps).unwrap()
    }

    fn q(xs: &[(i64, i64)]) -> ExactProfile {
        OpinionProfile::new(xs.iter().map(|&(a, b)| BigRational::from_ratio(a, b)).collect()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn profile_validation() {
        assert_eq!(OpinionProfile::<f64>::new(vec![]), Err(HkError::EmptyProfile));
        assert!(matches!(OpinionProfile::new(vec![0.2, 1.5]), Err(HkError::OpinionOutOfRange { index: 1, .. })));
        assert!(OpinionProfile::new(vec![f64::NAN]).is_err());
        assert_eq!(p(&[0.9, 0.1, 0.5]).opinions(), &[0.1, 0.5, 0.9]);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0.0).is_err());
        assert!(ModelParams::new(-0.1).is_err());
        assert!(ModelParams::new(f64::NAN).is_err());
        assert!(ModelParams::new(0.5).unwrap().with_max_steps(0).validate().is_err());
        assert!(params(1e-14).convergence_tol < 1e-14);
        let mut bad = params(0.5);
        bad.convergence_tol = 0.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn neighbor_examples() {
        let prof = p(&[0.0, 0.4, 0.8]);
        assert_eq!(neighbors(&prof, 0, &params(0.5)).unwrap(), NeighborWindow { lo: 0, hi: 1 });
        for i in 0..3 {
            assert_eq!(neighbors(&prof, i, &params(1.0)).unwrap(), NeighborWindow { lo: 0, hi: 2 });
        }
        // closed boundary
        let tie = p(&[0.0, 0.5]);
        assert_eq!(neighbors(&tie, 0, &params(0.5)).unwrap(), NeighborWindow { lo: 0, hi: 1 });
        assert_eq!(neighbors(&prof, 3, &params(0.5)), Err(HkError::IndexOutOfRange { index: 3, len: 3 }));
    }

    #[test]
    fn windows_agree_with_binary_search() {
        let xs = [0.0, 0.1, 0.1, 0.35, 0.5, 0.5, 0.9, 1.0];
        for eps in [0.05, 0.1, 0.25, 0.4, 1.0] {
            let all = windows(&xs, &eps);
            for (i, w) in all.iter().enumerate() {
                assert_eq!(*w, window_of(&xs, i, &eps).unwrap());
            }
        }
    }

    #[test]
    fn sync_step_examples() {
        let cases: [(&[f64], f64, &[f64]); 4] = [
            (&[0.0, 0.4, 0.8], 0.5, &[0.2, 0.4, 0.6]),
            (&[0.1, 0.9], 0.5, &[0.1, 0.9]),
            (&[0.3, 0.3, 0.3], 0.05, &[0.3, 0.3, 0.3]),
            (&[0.0, 1.0], 1.0, &[0.5, 0.5]),
        ];
        for (input, eps, expected) in cases {
            let fast = sync_step(&p(input), &params(eps));
            let naive = sync_step_naive(&p(input), &params(eps));
            assert_close(fast.opinions(), expected);
            assert_close(naive.opinions(), expected);
            assert_eq!(fast.time(), 1);
        }
    }

    #[test]
    fn sync_step_exact_example() {
        let prof = q(&[(0, 1), (2, 5), (4, 5)]);
        let next = sync_step(&prof, &params(0.5));
        assert_eq!(next, q(&[(1, 5), (2, 5), (3, 5)]).with_time(1));
        assert_eq!(sync_step_naive(&prof, &params(0.5)), next);
    }

    impl<T: Opinion> OpinionProfile<T> {
        fn with_time(mut self, t: u64) -> Self {
            self.time = t;
            self
        }
    }

    #[test]
    fn async_step_examples() {
        let eps = params(0.5);
        let a = async_step(&p(&[0.0, 0.4, 0.8]), &eps, 1).unwrap();
        assert_close(a.opinions(), &[0.0, 0.4, 0.8]);
        let b = async_step(&p(&[0.0, 0.4]), &eps, 0).unwrap();
        assert_close(b.opinions(), &[0.2, 0.4]);
        let c = async_step(&p(&[0.3]), &eps, 0).unwrap();
        assert_close(c.opinions(), &[0.3]);
        assert!(async_step(&p(&[0.3]), &eps, 1).is_err());
        // a single move may pass another agent
        let d = async_step(&p(&[0.0, 0.1, 0.5]), &eps, 0).unwrap();
        assert_close(d.opinions(), &[0.1, 0.2, 0.5]);
    }

    #[test]
    fn fixed_point_examples() {
        assert!(is_fixed_point(&p(&[0.3, 0.3, 0.3]), &params(0.2)));
        assert!(is_fixed_point(&p(&[0.1, 0.9]), &params(0.5)));
        assert!(!is_fixed_point(&p(&[0.0, 0.4, 0.8]), &params(0.5)));
        assert!(is_fixed_point(&q(&[(1, 10), (9, 10)]), &params(0.5)));
        assert!(!is_fixed_point(&q(&[(0, 1), (2, 5), (4, 5)]), &params(0.5)));
    }

    #[test]
    fn run_examples() {
        let r = run(&p(&[0.0, 0.4, 0.8]), &params(0.5));
        assert_eq!(r.converged_at, Some(2));
        assert!(r.consensus);
        assert_eq!(r.clusters.len(), 1);
        assert!((r.clusters[0].value - 0.4).abs() <= 1e-12);
        assert_eq!(r.clusters[0].size, 3);

        let r = run(&p(&[0.1, 0.9]), &params(0.5).with_tracking(true));
        assert_eq!(r.converged_at, Some(0));
        assert!(!r.consensus);
        assert_eq!(r.clusters.len(), 2);
        assert_eq!(r.connectivity_history, Some(vec![false]));

        let r = run(&p(&[0.5]), &params(0.3));
        assert_eq!(r.converged_at, Some(0));
        assert!(r.consensus);
    }

    #[test]
    fn run_exact_example() {
        let r = run(&q(&[(0, 1), (2, 5), (4, 5)]), &params(0.5).with_tracking(true));
        assert_eq!(r.converged_at, Some(2));
        assert!(r.consensus);
        assert_eq!(r.clusters[0].value, BigRational::from_ratio(2, 5));
        assert_eq!(r.connectivity_history, Some(vec![true, true, true]));
    }

    #[test]
    fn run_reports_nonconvergence() {
        let prm = params(0.3).with_max_steps(1);
        let r = run(&p(&[0.0, 0.25, 0.5, 0.75, 1.0]), &prm);
        assert_eq!(r.converged_at, None);
        assert_eq!(r.final_profile.time(), 1);
    }

    #[test]
    fn clusters_split_on_spread() {
        // one component, but not a common value
        let xs = [0.1, 0.2, 0.2];
        let cs = clusters(&xs, &0.5, 1e-9);
        assert_eq!(cs.len(), 2);
        assert_eq!((cs[0].size, cs[1].size), (1, 2));
        let cs = clusters(&[0.1, 0.1 + 1e-12, 0.8], &0.5, 1e-9);
        assert_eq!(cs.len(), 2);
    }

    #[test]
    fn reflection_roundtrip() {
        let prof = p(&[0.0, 0.25, 0.625]);
        assert_close(prof.reflect().opinions(), &[0.375, 0.75, 1.0]);
        assert_eq!(prof.reflect().reflect(), prof);
    }
}
