//! Matching decomposition of a zero-sum linear combination.
//!
//! Given `lambda_1 + ... + lambda_n = 0`, the combination
//! `sum_i lambda_i x_i` can be rewritten as `sum c (x_j - x_k)` with every
//! `c >= 0`, `lambda_j > 0`, `lambda_k < 0`, and the coefficients summing to
//! the total positive mass. Many such matchings exist; this one pairs the
//! positive and negative masses greedily in index order.

use serde::Serialize;

use crate::arith::Opinion;
use crate::error::{HkError, Result};

/// Float-mode tolerance on `|sum lambda|`.
pub const ZERO_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingTerm<T> {
    pub coefficient: T,
    /// Index with a positive coefficient.
    pub positive: usize,
    /// Index with a negative coefficient.
    pub negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingDecomposition<T> {
    pub terms: Vec<MatchingTerm<T>>,
    pub total_positive_mass: T,
}

impl<T: Opinion> MatchingDecomposition<T> {
    /// `sum c (x_positive - x_negative)`.
    pub fn reconstruct(&self, xs: &[T]) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| acc.add(&t.coefficient.mul(&xs[t.positive].sub(&xs[t.negative]))))
    }

    pub fn coefficient_sum(&self) -> T {
        self.terms.iter().fold(T::zero(), |acc, t| acc.add(&t.coefficient))
    }
}

pub fn matching_decomposition<T: Opinion>(lambdas: &[T], xs: &[T]) -> Result<MatchingDecomposition<T>> {
    if lambdas.len() != xs.len() {
        return Err(HkError::LengthMismatch { lambdas: lambdas.len(), xs: xs.len() });
    }
    let zero = T::zero();
    let total = lambdas.iter().fold(T::zero(), |acc, l| acc.add(l));
    let balanced = if T::EXACT { total == zero } else { total.to_f64().abs() <= ZERO_SUM_TOL };
    if !balanced {
        return Err(HkError::NonZeroSum(total.to_f64()));
    }

    let positives: Vec<usize> = (0..lambdas.len()).filter(|&i| lambdas[i] > zero).collect();
    let negatives: Vec<usize> = (0..lambdas.len()).filter(|&i| lambdas[i] < zero).collect();
    let total_positive_mass = positives.iter().fold(T::zero(), |acc, &i| acc.add(&lambdas[i]));

    let mut terms = Vec::with_capacity(positives.len() + negatives.len());
    let (mut p, mut q) = (0, 0);
    let mut pos_left = positives.first().map(|&i| lambdas[i].clone());
    let mut neg_left = negatives.first().map(|&k| lambdas[k].abs());
    while let (Some(a), Some(b)) = (pos_left.clone(), neg_left.clone()) {
        let c = if a <= b { a.clone() } else { b.clone() };
        if c > zero {
            terms.push(MatchingTerm { coefficient: c.clone(), positive: positives[p], negative: negatives[q] });
        }
        let (a, b) = (a.sub(&c), b.sub(&c));
        if a <= zero {
            p += 1;
            pos_left = positives.get(p).map(|&i| lambdas[i].clone());
        } else {
            pos_left = Some(a);
        }
        if b <= zero {
            q += 1;
            neg_left = negatives.get(q).map(|&k| lambdas[k].abs());
        } else {
            neg_left = Some(b);
        }
    }
    Ok(MatchingDecomposition { terms, total_positive_mass })
}
