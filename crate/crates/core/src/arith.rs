//! Scalar types the dynamics can run over.
//!
//! Two arithmetic modes are supported: binary64 floats for speed, and exact
//! rationals for verification and exact fixed-point detection. Conversion
//! from `f64` into the rational mode is exact, so a float profile and its
//! rational image describe the same real numbers.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// An opinion value. Implementations define the arithmetic used by the step
/// engine, including how window sums are accumulated for the prefix-sum path.
pub trait Opinion: Clone + PartialOrd + Debug + Send + Sync + 'static {
    /// Running-sum representation used by the prefix-sum step.
    type PrefixSum: Clone + Send + Sync;

    /// Whether arithmetic is exact (equality is meaningful).
    const EXACT: bool;
    /// Short name reported in metadata.
    const NAME: &'static str;

    /// Exact for rationals; identity for `f64`.
    fn from_f64(x: f64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div_count(&self, count: usize) -> Self;
    fn abs(&self) -> Self;
    fn is_finite(&self) -> bool;

    fn abs_diff(&self, other: &Self) -> Self {
        self.sub(other).abs()
    }

    /// Total order for sorting; NaN is excluded by profile validation.
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    /// Prefix sums `P[0] = 0, P[k] = x[0] + ... + x[k-1]`, accumulated in
    /// ascending index order.
    fn prefix_sums(xs: &[Self]) -> Vec<Self::PrefixSum>;

    /// Mean of `xs[lo..=hi]` from prefix sums.
    fn window_mean(prefix: &[Self::PrefixSum], lo: usize, hi: usize) -> Self;

    /// Plain ascending-index mean, used by the reference path.
    fn mean_of<'a, I: IntoIterator<Item = &'a Self>>(items: I) -> Self {
        let mut count = 0;
        let mut acc = Self::zero();
        for x in items {
            acc = acc.add(x);
            count += 1;
        }
        acc.div_count(count)
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn fast_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    #[inline]
    pub fn add_f64(self, x: f64) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = fast_two_sum(s, e + self.lo);
        DoubleDouble { hi, lo }
    }

    #[inline]
    pub fn difference(self, other: Self) -> f64 {
        let (s, e) = two_sum(self.hi, -other.hi);
        s + (e + (self.lo - other.lo))
    }
}

impl Opinion for f64 {
    type PrefixSum = DoubleDouble;

    const EXACT: bool = false;
    const NAME: &'static str = "float64";

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_count(&self, count: usize) -> Self {
        self / count as f64
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        f64::total_cmp(self, other)
    }

    // Compensated sums keep window sums accurate to ~2^-106 relative to the
    // running total, so a window mean does not pick up cancellation error
    // from the magnitude of everything to its left.
    fn prefix_sums(xs: &[Self]) -> Vec<DoubleDouble> {
        let mut out = Vec::with_capacity(xs.len() + 1);
        let mut acc = DoubleDouble::default();
        out.push(acc);
        for &x in xs {
            acc = acc.add_f64(x);
            out.push(acc);
        }
        out
    }

    #[inline]
    fn window_mean(prefix: &[DoubleDouble], lo: usize, hi: usize) -> Self {
        prefix[hi + 1].difference(prefix[lo]) / (hi - lo + 1) as f64
    }
}

impl Opinion for BigRational {
    type PrefixSum = BigRational;

    const EXACT: bool = true;
    const NAME: &'static str = "exact-rational";

    fn from_f64(x: f64) -> Self {
        <BigRational as FromPrimitive>::from_f64(x).expect("finite f64 converts exactly to a rational")
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div_count(&self, count: usize) -> Self {
        self / BigInt::from(count)
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn is_finite(&self) -> bool {
        true
    }
    fn total_cmp(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn prefix_sums(xs: &[Self]) -> Vec<BigRational> {
        let mut out = Vec::with_capacity(xs.len() + 1);
        let mut acc = <BigRational as Zero>::zero();
        out.push(acc.clone());
        for x in xs {
            acc += x;
            out.push(acc.clone());
        }
        out
    }

    fn window_mean(prefix: &[BigRational], lo: usize, hi: usize) -> Self {
        (&prefix[hi + 1] - &prefix[lo]) / BigInt::from(hi - lo + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_from_f64_is_exact() {
        let r = <BigRational as Opinion>::from_f64(0.1);
        // 0.1 is not a dyadic rational; its binary64 image is.
        assert_ne!(r, BigRational::from_ratio(1, 10));
        assert_eq!(Opinion::to_f64(&r), 0.1);
        let half = <BigRational as Opinion>::from_f64(0.5);
        assert_eq!(half, BigRational::from_ratio(1, 2));
    }

    #[test]
    fn compensated_window_sum_resists_cancellation() {
        // Large prefix followed by a tiny window.
        let mut xs = vec![1.0; 1_000_000];
        xs.push(1e-3);
        xs.push(3e-3);
        let p = f64::prefix_sums(&xs);
        let m = f64::window_mean(&p, xs.len() - 2, xs.len() - 1);
        assert!((m - 2e-3).abs() <= 1e-18, "{m}");
    }

    #[test]
    fn window_mean_matches_exact() {
        let xs: Vec<f64> = (0..50).map(|k| (k as f64 * 0.37).fract()).collect();
        let p = f64::prefix_sums(&xs);
        let exact: Vec<BigRational> = xs.iter().map(|&x| <BigRational as Opinion>::from_f64(x)).collect();
        let pe = BigRational::prefix_sums(&exact);
        for lo in 0..xs.len() {
            for hi in lo..xs.len() {
                let a = f64::window_mean(&p, lo, hi);
                let b = Opinion::to_f64(&BigRational::window_mean(&pe, lo, hi));
                assert!((a - b).abs() <= 2.0 * f64::EPSILON * b.abs().max(1e-300));
            }
        }
    }
}
