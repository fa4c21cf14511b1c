//! The opinion graph: agents are vertices, and `i ~ j` whenever
//! `|x_i - x_j| <= epsilon`.
//!
//! Adjacency is never materialised. For a sorted profile each neighbourhood
//! is an index window, so set differences and intersections of two
//! neighbourhoods reduce to interval arithmetic on the window bounds.
//!
//! Agent ranks in the `H_t` predicate are 1-based order statistics
//! (`(1)`, `(ceil(n/2))`, `(n)`); internally they map to 0-based indices
//! `0`, `ceil(n/2) - 1` and `n - 1`.

use std::collections::VecDeque;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::arith::Opinion;
use crate::error::{HkError, Result};
use crate::model::{self, NeighborWindow, OpinionProfile};

/// Cardinalities of `N_i - N_j`, `N_j - N_i` and `N_i ∩ N_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub only_i: usize,
    pub only_j: usize,
    pub shared: usize,
}

impl EdgeCounts {
    pub fn from_windows(a: NeighborWindow, b: NeighborWindow) -> Self {
        let lo = a.lo.max(b.lo);
        let hi = a.hi.min(b.hi);
        let shared = if lo <= hi { hi - lo + 1 } else { 0 };
        EdgeCounts { only_i: a.len() - shared, only_j: b.len() - shared, shared }
    }

    /// `2 * max(|N_i - N_j|, |N_j - N_i|) <= |N_i ∩ N_j|`.
    pub fn persistence_holds(&self) -> bool {
        2 * self.only_i.max(self.only_j) <= self.shared
    }
}

/// Read-only view of the opinion graph of a sorted profile.
#[derive(Debug, Clone)]
pub struct OpinionGraph<'a, T> {
    xs: &'a [T],
    epsilon: T,
}

impl<'a, T: Opinion> OpinionGraph<'a, T> {
    pub fn new(profile: &'a OpinionProfile<T>, epsilon: f64) -> Self {
        OpinionGraph { xs: profile.opinions(), epsilon: T::from_f64(epsilon) }
    }

    /// `xs` must be sorted ascending.
    pub fn from_sorted(xs: &'a [T], epsilon: T) -> Self {
        OpinionGraph { xs, epsilon }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    fn check(&self, i: usize) -> Result<()> {
        if i >= self.xs.len() {
            return Err(HkError::IndexOutOfRange { index: i, len: self.xs.len() });
        }
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> Result<bool> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.xs[i].abs_diff(&self.xs[j]) <= self.epsilon)
    }

    pub fn window(&self, i: usize) -> Result<NeighborWindow> {
        model::window_of(self.xs, i, &self.epsilon)
    }

    /// Connected iff every gap between consecutive order statistics is at
    /// most epsilon.
    pub fn is_connected(&self) -> bool {
        is_connected_slice(self.xs, &self.epsilon)
    }

    /// Breadth-first search over the full pairwise edge set. Quadratic.
    pub fn is_connected_bruteforce(&self) -> bool {
        let n = self.xs.len();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for (v, seen_v) in seen.iter_mut().enumerate() {
                if !*seen_v && self.xs[u].abs_diff(&self.xs[v]) <= self.epsilon {
                    *seen_v = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == n
    }

    pub fn components(&self) -> Vec<RangeInclusive<usize>> {
        components_of(self.xs, &self.epsilon)
    }

    /// Largest gap between consecutive opinions; zero for a single agent.
    pub fn max_gap(&self) -> T {
        self.xs.windows(2).map(|w| w[1].sub(&w[0])).fold(T::zero(), |m, g| if g > m { g } else { m })
    }

    pub fn edge_counts(&self, i: usize, j: usize) -> Result<EdgeCounts> {
        if i == j {
            return Err(HkError::Domain(format!("edge counts need distinct agents, got {i} twice")));
        }
        Ok(EdgeCounts::from_windows(self.window(i)?, self.window(j)?))
    }

    /// Whether edge `(i, j)` satisfies the persistence inequality; when it
    /// does, the edge is still present after one synchronous step.
    pub fn edge_persists_condition(&self, i: usize, j: usize) -> Result<bool> {
        if !self.has_edge(i, j)? {
            return Err(HkError::NotAnEdge { i, j });
        }
        Ok(self.edge_counts(i, j)?.persistence_holds())
    }

    /// The `H_t` predicate: the minimum, median (rank `ceil(n/2)`) and
    /// maximum agents are linked by two edges that both satisfy the
    /// persistence inequality.
    pub fn h_statement(&self) -> bool {
        let n = self.xs.len();
        let median = n.div_ceil(2).saturating_sub(1);
        [(0, median), (median, n.saturating_sub(1))]
            .into_iter()
            // a vertex paired with itself is trivially a persistent edge
            .all(|(a, b)| a == b || self.edge_persists_condition(a, b).unwrap_or(false))
    }
}

pub(crate) fn is_connected_slice<T: Opinion>(xs: &[T], epsilon: &T) -> bool {
    xs.windows(2).all(|w| w[1].sub(&w[0]) <= *epsilon)
}

pub(crate) fn components_of<T: Opinion>(xs: &[T], epsilon: &T) -> Vec<RangeInclusive<usize>> {
    let mut out = Vec::new();
    if xs.is_empty() {
        return out;
    }
    let mut start = 0;
    for k in 0..xs.len() - 1 {
        if xs[k + 1].sub(&xs[k]) > *epsilon {
            out.push(start..=k);
            start = k + 1;
        }
    }
    out.push(start..=xs.len() - 1);
    out
}

pub fn is_connected<T: Opinion>(profile: &OpinionProfile<T>, epsilon: f64) -> bool {
    OpinionGraph::new(profile, epsilon).is_connected()
}

pub fn is_connected_bruteforce<T: Opinion>(profile: &OpinionProfile<T>, epsilon: f64) -> bool {
    OpinionGraph::new(profile, epsilon).is_connected_bruteforce()
}

pub fn components<T: Opinion>(profile: &OpinionProfile<T>, epsilon: f64) -> Vec<RangeInclusive<usize>> {
    OpinionGraph::new(profile, epsilon).components()
}

pub fn edge_counts<T: Opinion>(profile: &OpinionProfile<T>, i: usize, j: usize, epsilon: f64) -> Result<EdgeCounts> {
    OpinionGraph::new(profile, epsilon).edge_counts(i, j)
}

pub fn edge_persists_condition<T: Opinion>(
    profile: &OpinionProfile<T>,
    i: usize,
    j: usize,
    epsilon: f64,
) -> Result<bool> {
    OpinionGraph::new(profile, epsilon).edge_persists_condition(i, j)
}

pub fn h_statement<T: Opinion>(profile: &OpinionProfile<T>, epsilon: f64) -> bool {
    OpinionGraph::new(profile, epsilon).h_statement()
}
