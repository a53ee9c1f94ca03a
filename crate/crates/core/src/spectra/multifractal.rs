//! Coarse multifractal counts `N_α(n)` and the optimised dimensions `F̄`, `F̲`.

use std::ops::Range;

use num_bigint::BigUint;
use num_traits::Zero;

use crate::dyadic::GridScheme;
use crate::error::{Error, Result};
use crate::num::{log2_biguint, tail_window, Real};
use crate::setfn::{Evaluator, Threshold};
use crate::table::{SpectrumTable, TableKind};

use super::tau::to_f64;

/// Above this many distinct breakpoints, `sup_α` is taken over a subsample.
const MAX_CANDIDATES: usize = 20_000;
const SUBSAMPLE: usize = 4096;

/// The threshold `2^{-αn}`, exact when `αn` is an integer.
pub fn alpha_threshold<T: Real>(level: u32, alpha: T) -> Threshold<T> {
    let e = alpha * T::lit(level as f64);
    if e.fract() == T::zero() && e.abs() < T::lit(2f64.powi(52)) {
        Threshold::pow2(-e.to_i64().expect("integral exponent"))
    } else {
        Threshold::from_log2(-e)
    }
}

/// `card {Q ∈ S_n : J(Q) >= 2^{-αn}}`.
pub fn coarse_count<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    level: u32,
    alpha: T,
) -> Result<BigUint> {
    check_alpha(alpha)?;
    eval.count_at_least(grid, level, &alpha_threshold(level, alpha))
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    Ok(())
}

/// Cumulative counts of one level as a step function of `α`.
#[derive(Clone, Debug)]
pub struct LevelCounts<T> {
    pub level: u32,
    /// `α` at which each group enters, increasing.
    pub breaks: Vec<T>,
    /// `log2` of the count once the matching break is passed.
    pub log2_cum: Vec<T>,
}

impl<T: Real> LevelCounts<T> {
    fn build(eval: &Evaluator<T>, grid: &GridScheme, level: u32) -> Result<Self> {
        let groups = eval
            .level_dist(grid, level)?
            .materialize(eval.limits.max_groups)?;
        let n = T::lit(level.max(1) as f64);
        let mut acc = BigUint::zero();
        let mut breaks = Vec::with_capacity(groups.len());
        let mut log2_cum = Vec::with_capacity(groups.len());
        for g in &groups {
            acc += &g.mult;
            let a = (-g.log2 / n).max(T::zero());
            // Equal breaks collapse into the last cumulative count.
            if breaks.last() == Some(&a) {
                *log2_cum.last_mut().expect("nonempty") = T::lit(log2_biguint(&acc));
            } else {
                breaks.push(a);
                log2_cum.push(T::lit(log2_biguint(&acc)));
            }
        }
        Ok(LevelCounts {
            level,
            breaks,
            log2_cum,
        })
    }

    /// `log2 N_α(n)`, `-inf` when no cube qualifies.
    pub fn log2_count(&self, alpha: T) -> T {
        let slack = T::lit(1e-9) * alpha.abs().max(T::one());
        let k = self.breaks.partition_point(|&b| b <= alpha + slack);
        if k == 0 {
            T::neg_infinity()
        } else {
            self.log2_cum[k - 1]
        }
    }

    /// `log⁺ N_α(n) / (n log 2)`; levels with no qualifying cube give 0.
    pub fn growth(&self, alpha: T) -> T {
        (self.log2_count(alpha) / T::lit(self.level.max(1) as f64)).max(T::zero())
    }
}

#[derive(Clone, Debug)]
pub struct FEstimates<T> {
    pub levels: Vec<u32>,
    pub window: Range<usize>,
    pub alpha_grid: Vec<T>,
    /// `F̄(α)` on the grid: window maximum of the growth rates.
    pub upper_alpha: Vec<T>,
    /// `F̲(α)` on the grid: window minimum of the growth rates.
    pub lower_alpha: Vec<T>,
    /// `sup_α F̄(α)/α` over the breakpoints and the grid.
    pub upper: T,
    pub lower: T,
    /// Maximisers of the two suprema.
    pub upper_at: T,
    pub lower_at: T,
    /// Number of `α` values the suprema were taken over.
    pub candidates: usize,
    pub counts: Vec<LevelCounts<T>>,
}

impl<T: Real> FEstimates<T> {
    /// Abscissa `n`, one column `log2_N_<α>` per grid point.
    pub fn n_alpha_table(&self) -> SpectrumTable {
        let mut t = SpectrumTable::new(
            TableKind::NAlpha,
            "n",
            self.levels.iter().map(|&n| n as f64).collect(),
        );
        for &a in &self.alpha_grid {
            t.push_column(
                format!("log2_N_{}", to_f64(a)),
                self.counts
                    .iter()
                    .map(|c| to_f64(c.log2_count(a)))
                    .collect(),
            );
        }
        t
    }

    /// Abscissa `α`, columns `F_upper` and `F_lower`.
    pub fn f_table(&self) -> SpectrumTable {
        let mut t = SpectrumTable::new(
            TableKind::FAlpha,
            "alpha",
            self.alpha_grid.iter().map(|&a| to_f64(a)).collect(),
        );
        t.push_column(
            "F_upper",
            self.upper_alpha.iter().map(|&v| to_f64(v)).collect(),
        );
        t.push_column(
            "F_lower",
            self.lower_alpha.iter().map(|&v| to_f64(v)).collect(),
        );
        t.summary.insert("F_upper_est".into(), to_f64(self.upper));
        t.summary.insert("F_lower_est".into(), to_f64(self.lower));
        t.summary.insert("F_upper_at".into(), to_f64(self.upper_at));
        t.summary.insert("F_lower_at".into(), to_f64(self.lower_at));
        t
    }
}

/// Window max/min of `log⁺ N_α(n)/(n log 2)` per `α`, then `sup_α (·)/α`.
///
/// Both window functions are step functions of `α` that jump only at the
/// breakpoints `-log2 J(Q)/n`, so the suprema are taken over those (plus the
/// grid); very large breakpoint sets are subsampled.
#[allow(non_snake_case)]
pub fn F_estimates<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    levels: &[u32],
    alpha_grid: &[T],
) -> Result<FEstimates<T>> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("level range is empty".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels[0] == 0 {
        return Err(Error::InvalidArgument(
            "levels must be positive and increasing".into(),
        ));
    }
    for &a in alpha_grid {
        check_alpha(a)?;
    }
    if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(
            "alpha grid must be increasing".into(),
        ));
    }
    let counts = levels
        .iter()
        .map(|&n| LevelCounts::build(eval, grid, n))
        .collect::<Result<Vec<_>>>()?;
    let window = tail_window(levels.len());
    let win = &counts[window.clone()];
    let band = |a: T| {
        let mut hi = T::neg_infinity();
        let mut lo = T::infinity();
        for c in win {
            let g = c.growth(a);
            hi = hi.max(g);
            lo = lo.min(g);
        }
        (hi, lo)
    };

    let mut cand: Vec<T> = win
        .iter()
        .flat_map(|c| c.breaks.iter().copied())
        .filter(|&a| a > T::zero())
        .collect();
    cand.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    cand.dedup();
    if cand.len() > MAX_CANDIDATES {
        let step = cand.len() as f64 / SUBSAMPLE as f64;
        cand = (0..SUBSAMPLE)
            .map(|i| cand[(i as f64 * step) as usize])
            .collect();
    }
    cand.extend_from_slice(alpha_grid);
    let mut upper = (T::zero(), T::zero());
    let mut lower = (T::zero(), T::zero());
    for &a in &cand {
        let (hi, lo) = band(a);
        if hi / a > upper.0 {
            upper = (hi / a, a);
        }
        if lo / a > lower.0 {
            lower = (lo / a, a);
        }
    }
    let (upper_alpha, lower_alpha) = alpha_grid.iter().map(|&a| band(a)).unzip();
    Ok(FEstimates {
        levels: levels.to_vec(),
        window,
        alpha_grid: alpha_grid.to_vec(),
        upper_alpha,
        lower_alpha,
        upper: upper.0,
        lower: lower.0,
        upper_at: upper.1,
        lower_at: lower.1,
        candidates: cand.len(),
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::{Schedule, SetFunctionSpec};

    #[test]
    fn coarse_counts() {
        let g2 = GridScheme::classical(2);
        let leb = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(2)).unwrap();
        assert_eq!(
            coarse_count(&leb, &g2, 3, 2.0).unwrap(),
            BigUint::from(64u32)
        );
        assert_eq!(coarse_count(&leb, &g2, 3, 1.99).unwrap(), BigUint::zero());
        let g1 = GridScheme::classical(1);
        let e = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"])).unwrap();
        assert_eq!(coarse_count(&e, &g1, 2, 1.0).unwrap(), BigUint::from(1u32));
        assert!(coarse_count(&e, &g1, 2, 0.0).is_err());
    }

    #[test]
    fn lebesgue_and_power() {
        let g = GridScheme::classical(1);
        let levels: Vec<u32> = (1..=24).collect();
        let leb = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        let f = F_estimates(&leb, &g, &levels, &[0.5, 1.0, 2.0]).unwrap();
        assert_eq!(f.upper_alpha, vec![0.0, 1.0, 1.0]);
        assert!((f.upper - 1.0).abs() < 1e-12 && (f.upper_at - 1.0).abs() < 1e-12);
        assert!((f.lower - 1.0).abs() < 1e-12);
        let sq =
            Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"]).power("2")).unwrap();
        // Finite-size bias is about 0.056 at n = 24 and 0.02 at n = 100.
        let f = F_estimates(&sq, &g, &levels, &[1.0]).unwrap();
        assert!((f.upper - 0.4445).abs() < 1e-3, "{}", f.upper);
        let f = F_estimates(&sq, &g, &(50..=100).collect::<Vec<_>>(), &[1.0]).unwrap();
        assert!((f.upper - 0.5).abs() < 0.025, "{}", f.upper);
    }

    #[test]
    fn oscillating_gap() {
        let g = GridScheme::classical(1);
        let spec = SetFunctionSpec::oscillating(1, Schedule::alternating_blocks(2, 1, 6));
        let e = Evaluator::<f64>::new(&spec).unwrap();
        let f = F_estimates(&e, &g, &(1..=24).collect::<Vec<_>>(), &[1.0]).unwrap();
        assert!(f.lower < 1.0 - 0.05, "{}", f.lower);
        let t = f.n_alpha_table();
        assert_eq!(t.columns.len(), 1);
        assert!(t.validate().is_ok() && f.f_table().validate().is_ok());
    }
}
