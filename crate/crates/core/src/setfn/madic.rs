//! Self-similar measures for the maps `x -> (x + j)/m` evaluated on dyadic intervals.
//!
//! Log channel: the interval `[u, v)` is pushed through single branches
//! (multiplying by the branch weight) until it straddles a branch boundary.
//! The remaining mass is then a suffix mass `ν([x,1))`, a run of full
//! branches, and a prefix mass `ν([0,y))`. Both one-sided masses are series
//! of nonnegative terms along the orbit of `x -> m x mod 1` and are summed in
//! the log domain, so nothing cancels.
//!
//! Exact channel: the distribution function satisfies
//! `F(y) = Σ_{i<j} p_i + p_j F(m y - j)` on branch `j`. Dyadic points have
//! eventually periodic orbits, so the recursion closes into a cycle whose
//! fixed point is solved in rationals.

use std::collections::{HashMap, HashSet};

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::num::{Log2, LogSumAcc, Real};
use crate::rational::rational_to_real;

/// Default cap on distinct orbit points in the exact recursion.
pub const DEFAULT_STATE_CAP: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct MAdicMeasure<T> {
    base: u32,
    weights: Vec<BigRational>,
    logw: Vec<T>,
    /// `log2 Σ_{i<j} p_i`.
    left_log: Vec<T>,
    /// `log2 Σ_{i>j} p_i`.
    right_log: Vec<T>,
    state_cap: usize,
}

enum Mode {
    Value,
    Positivity,
}

impl<T: Real> MAdicMeasure<T> {
    /// `weights` are positional: `weights[j]` belongs to the map `x -> (x + j)/m`.
    pub fn new(weights: Vec<BigRational>) -> Self {
        let base = weights.len() as u32;
        let to_log = |r: &BigRational| Log2::<T>::from_rational(r).log2();
        let logw = weights.iter().map(to_log).collect();
        let mut left_log = Vec::with_capacity(weights.len());
        let mut right_log = Vec::with_capacity(weights.len());
        for j in 0..weights.len() {
            let left: BigRational = weights[..j].iter().sum();
            let right: BigRational = weights[j + 1..].iter().sum();
            left_log.push(to_log(&left));
            right_log.push(to_log(&right));
        }
        MAdicMeasure {
            base,
            weights,
            logw,
            left_log,
            right_log,
            state_cap: DEFAULT_STATE_CAP,
        }
    }

    pub fn with_state_cap(mut self, cap: usize) -> Self {
        self.state_cap = cap;
        self
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    fn range_log(&self, lo: usize, hi: usize) -> T {
        let mut acc = LogSumAcc::new();
        for j in lo..hi {
            acc.add(self.logw[j]);
        }
        acc.value()
    }

    /// `log2 ν([k 2^-n, (k+1) 2^-n))`.
    pub fn interval_log2(&self, level: u32, k: u64) -> T {
        self.interval(level, k, Mode::Value)
    }

    pub fn interval_positive(&self, level: u32, k: u64) -> bool {
        self.interval(level, k, Mode::Positivity) > T::neg_infinity()
    }

    fn interval(&self, level: u32, k: u64, mode: Mode) -> T {
        if level == 0 {
            return T::zero();
        }
        let den = 1u128 << level;
        let m = self.base as u128;
        let (mut u, mut v) = (k as u128, k as u128 + 1);
        let mut head = T::zero();
        loop {
            let du = (m * u / den) as usize;
            let dv = ((m * v).div_ceil(den) - 1) as usize;
            if du == dv {
                let w = self.logw[du];
                if w == T::neg_infinity() {
                    return w;
                }
                head = head + w;
                let shift = du as u128 * den;
                u = m * u - shift;
                v = m * v - shift;
                continue;
            }
            let mut acc = LogSumAcc::new();
            if dv > du + 1 {
                acc.add(self.range_log(du + 1, dv));
            }
            if matches!(mode, Mode::Positivity) && acc.value() > T::neg_infinity() {
                return T::zero();
            }
            if self.logw[du] > T::neg_infinity() {
                let s = self.suffix_log(m * u - du as u128 * den, den, &mode);
                acc.add(self.logw[du] + s);
            }
            if matches!(mode, Mode::Positivity) && acc.value() > T::neg_infinity() {
                return T::zero();
            }
            if self.logw[dv] > T::neg_infinity() {
                let p = self.prefix_log(m * v - dv as u128 * den, den, &mode);
                acc.add(self.logw[dv] + p);
            }
            let tail = acc.value();
            return if tail == T::neg_infinity() {
                tail
            } else {
                head + tail
            };
        }
    }

    fn converged(acc: &LogSumAcc<T>, prod: T) -> bool {
        let total = acc.value();
        total > T::neg_infinity() && prod < total - T::lit((T::MANTISSA_BITS + 12) as f64)
    }

    /// `log2 ν([x/den, 1))` for `0 <= x < den`.
    fn suffix_log(&self, mut x: u128, den: u128, mode: &Mode) -> T {
        let m = self.base as u128;
        let mut acc = LogSumAcc::new();
        let mut prod = T::zero();
        let mut seen = HashSet::new();
        loop {
            if x == 0 {
                acc.add(prod);
                break;
            }
            let d = (m * x / den) as usize;
            acc.add(prod + self.right_log[d]);
            if matches!(mode, Mode::Positivity) && acc.value() > T::neg_infinity() {
                break;
            }
            if self.logw[d] == T::neg_infinity() {
                break;
            }
            prod = prod + self.logw[d];
            x = m * x - d as u128 * den;
            if Self::converged(&acc, prod) {
                break;
            }
            if acc.value() == T::neg_infinity() && !seen.insert(x) {
                break;
            }
        }
        acc.value()
    }

    /// `log2 ν([0, y/den))` for `0 < y <= den`.
    fn prefix_log(&self, mut y: u128, den: u128, mode: &Mode) -> T {
        let m = self.base as u128;
        let mut acc = LogSumAcc::new();
        let mut prod = T::zero();
        let mut seen = HashSet::new();
        loop {
            if y == den {
                acc.add(prod);
                break;
            }
            if y == 0 {
                break;
            }
            let d = (m * y / den) as usize;
            acc.add(prod + self.left_log[d]);
            if matches!(mode, Mode::Positivity) && acc.value() > T::neg_infinity() {
                break;
            }
            if self.logw[d] == T::neg_infinity() {
                break;
            }
            prod = prod + self.logw[d];
            y = m * y - d as u128 * den;
            if Self::converged(&acc, prod) {
                break;
            }
            if acc.value() == T::neg_infinity() && !seen.insert(y) {
                break;
            }
        }
        acc.value()
    }

    /// Exact `F(y/2^n) = ν([0, y 2^-n))` for `0 <= y <= 2^n`.
    pub fn cdf_exact(&self, level: u32, y: u128) -> Result<BigRational> {
        let den = 1u128 << level;
        if y >= den {
            return Ok(BigRational::one());
        }
        let m = self.base as u128;
        let mut index: HashMap<u128, usize> = HashMap::new();
        let mut consts: Vec<BigRational> = Vec::new();
        let mut gains: Vec<BigRational> = Vec::new();
        let mut cur = y;
        let cycle_start = loop {
            if cur == 0 {
                break None;
            }
            if let Some(&s) = index.get(&cur) {
                break Some(s);
            }
            if index.len() >= self.state_cap {
                return Err(Error::StateOverflow {
                    cap: self.state_cap,
                });
            }
            index.insert(cur, consts.len());
            let d = (m * cur / den) as usize;
            consts.push(self.weights[..d].iter().sum());
            gains.push(self.weights[d].clone());
            if self.weights[d].is_zero() {
                break None;
            }
            cur = m * cur - d as u128 * den;
        };
        let steps = consts.len();
        // Value at the cycle start, or zero when the orbit terminates.
        let tail = match cycle_start {
            None => BigRational::zero(),
            Some(s) => {
                let mut num = BigRational::zero();
                let mut g = BigRational::one();
                for k in s..steps {
                    num += &g * &consts[k];
                    g *= &gains[k];
                }
                num / (BigRational::one() - g)
            }
        };
        let end = cycle_start.unwrap_or(steps);
        let mut value = tail;
        for k in (0..end).rev() {
            value = &consts[k] + &gains[k] * value;
        }
        Ok(value)
    }

    pub fn interval_exact(&self, level: u32, k: u64) -> Result<BigRational> {
        let hi = self.cdf_exact(level, k as u128 + 1)?;
        let lo = self.cdf_exact(level, k as u128)?;
        Ok(hi - lo)
    }

    /// Float evaluation through the exact channel (test helper).
    pub fn interval_exact_real(&self, level: u32, k: u64) -> Result<T> {
        Ok(rational_to_real(&self.interval_exact(level, k)?))
    }
}
