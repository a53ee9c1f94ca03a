//! Scalar abstraction and the log2-domain numerics shared by every estimator.
//!
//! All floating point work is generic over [`Real`]; the crate root exports
//! `f64` aliases for the common case.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Floating point scalar used by the log channel: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + fmt::Debug
    + fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Bits of mantissa, used to decide when a series has converged.
    const MANTISSA_BITS: i32;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).unwrap_or_else(Self::infinity)
    }
}

impl Real for f32 {
    const MANTISSA_BITS: i32 = 24;
}

impl Real for f64 {
    const MANTISSA_BITS: i32 = 53;
}

/// A nonnegative quantity stored as its base-2 logarithm; zero is `-inf`.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Log2<T>(pub T);

impl<T: Real> Log2<T> {
    pub fn zero() -> Self {
        Log2(T::neg_infinity())
    }

    pub fn one() -> Self {
        Log2(T::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.0 == T::neg_infinity()
    }

    pub fn log2(&self) -> T {
        self.0
    }

    /// The linear value; underflows to 0 for very small quantities.
    pub fn exp2(&self) -> T {
        self.0.exp2()
    }

    pub fn from_value(x: T) -> Self {
        if x <= T::zero() {
            Self::zero()
        } else {
            Log2(x.log2())
        }
    }

    pub fn from_rational(r: &BigRational) -> Self {
        if r.is_zero() || r.is_negative() {
            return Self::zero();
        }
        Log2(T::lit(
            log2_biguint(r.numer().magnitude()) - log2_biguint(r.denom().magnitude()),
        ))
    }

    pub fn mul(self, other: Self) -> Self {
        if self.is_zero() || other.is_zero() {
            Self::zero()
        } else {
            Log2(self.0 + other.0)
        }
    }

    pub fn powf(self, s: T) -> Self {
        if self.is_zero() {
            Self::zero()
        } else {
            Log2(self.0 * s)
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

impl<T: Real> fmt::Debug for Log2<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            write!(f, "Log2(-inf)")
        } else {
            write!(f, "Log2({})", self.0)
        }
    }
}

impl<T: Real> PartialOrd for Log2<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// log2 of a big unsigned integer, accurate to double precision.
pub fn log2_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits in u64") as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits in u64") as f64;
    top.log2() + shift as f64
}

/// Stable `log2(sum 2^x_i)`; empty input or all `-inf` gives `-inf`.
///
/// The shifted terms are summed pairwise in a fixed order, so results are
/// bitwise reproducible for a given input order.
pub fn log_sum_exp2<T: Real>(xs: &[T]) -> T {
    let m = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    if m == T::infinity() {
        return m;
    }
    let shifted: Vec<T> = xs.iter().map(|&x| (x - m).exp2()).collect();
    m + pairwise_sum(&shifted).log2()
}

pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n if n <= 8 => xs.iter().copied().fold(T::zero(), |a, b| a + b),
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Online accumulator for `log2(sum 2^x_i)`.
#[derive(Clone, Copy, Debug)]
pub struct LogSumAcc<T> {
    max: T,
    scaled: T,
}

impl<T: Real> Default for LogSumAcc<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> LogSumAcc<T> {
    pub fn new() -> Self {
        LogSumAcc {
            max: T::neg_infinity(),
            scaled: T::zero(),
        }
    }

    pub fn add(&mut self, x: T) {
        if x == T::neg_infinity() {
            return;
        }
        if x <= self.max {
            self.scaled = self.scaled + (x - self.max).exp2();
        } else {
            self.scaled = self.scaled * (self.max - x).exp2() + T::one();
            self.max = x;
        }
    }

    pub fn value(&self) -> T {
        if self.max == T::neg_infinity() {
            T::neg_infinity()
        } else {
            self.max + self.scaled.log2()
        }
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
}

pub fn least_squares<T: Real>(xs: &[T], ys: &[T]) -> Option<LinearFit<T>> {
    let pts: Vec<(T, T)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x, y))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().fold(T::zero(), |a, p| a + p.0) / n;
    let my = pts.iter().fold(T::zero(), |a, p| a + p.1) / n;
    let sxx = pts
        .iter()
        .fold(T::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = pts
        .iter()
        .fold(T::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
    })
}

/// Index range of the tail window: the last half of `len` points, at least one.
pub fn tail_window(len: usize) -> std::ops::Range<usize> {
    let start = len / 2;
    start.min(len.saturating_sub(1))..len
}

/// Max and min of the finite entries of a slice.
pub fn extrema<T: Real>(xs: &[T]) -> Option<(T, T)> {
    let mut it = xs.iter().copied().filter(|x| !x.is_nan());
    let first = it.next()?;
    Some(it.fold((first, first), |(mx, mn), x| (mx.max(x), mn.min(x))))
}

/// Bisection for the zero of a decreasing function on `[lo, hi]`.
pub fn bisect_decreasing<T: Real>(mut lo: T, mut hi: T, tol: T, mut f: impl FnMut(T) -> T) -> T {
    for _ in 0..200 {
        let mid = (lo + hi) / T::lit(2.0);
        let v = f(mid);
        if v.abs() <= tol && (hi - lo) <= tol {
            return mid;
        }
        if v > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= T::epsilon() * hi.abs().max(T::one()) {
            break;
        }
    }
    (lo + hi) / T::lit(2.0)
}

/// `2^k` as an exact rational; `k` may be negative.
pub fn pow2_rational(k: i64) -> BigRational {
    let p = BigUint::one() << k.unsigned_abs();
    let p = num_bigint::BigInt::from(p);
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(One::one(), p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse_matches_direct_sum() {
        let xs = [-1.0f64, -2.0, -3.0, -0.5];
        let direct = xs.iter().map(|x| x.exp2()).sum::<f64>().log2();
        assert!((log_sum_exp2(&xs) - direct).abs() < 1e-15);
        let mut acc = LogSumAcc::new();
        xs.iter().for_each(|&x| acc.add(x));
        assert!((acc.value() - direct).abs() < 1e-15);
    }

    #[test]
    fn lse_handles_deep_underflow() {
        let xs = [-3000.0f64, -3000.0];
        assert!((log_sum_exp2(&xs) + 2999.0).abs() < 1e-12);
        assert_eq!(log_sum_exp2::<f64>(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp2(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn big_log2() {
        let x = BigUint::one() << 300u32;
        assert_eq!(log2_biguint(&x), 300.0);
        let y = BigUint::from(3u32) << 100u32;
        assert!((log2_biguint(&y) - (100.0 + 3f64.log2())).abs() < 1e-12);
        assert_eq!(log2_biguint(&BigUint::from(8u32)), 3.0);
    }

    #[test]
    fn rational_log2() {
        let r = BigRational::new(1.into(), 1024.into());
        assert_eq!(Log2::<f64>::from_rational(&r).log2(), -10.0);
        assert!(Log2::<f64>::from_rational(&BigRational::zero()).is_zero());
    }

    #[test]
    fn fit_recovers_line() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
        let fit = least_squares(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_finds_root() {
        let r = bisect_decreasing(0.0f64, 4.0, 1e-13, |q| 1.0 - 2.0 * q);
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn window_is_tail_half() {
        assert_eq!(tail_window(10), 5..10);
        assert_eq!(tail_window(1), 0..1);
        assert_eq!(tail_window(3), 1..3);
    }
}
