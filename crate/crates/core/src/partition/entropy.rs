//! Partition entropy estimates from `M(x)` along a schedule of `x`.

use num_bigint::BigUint;

use crate::dyadic::GridScheme;
use crate::error::{Error, Result};
use crate::num::{extrema, least_squares, log2_biguint, tail_window, LinearFit, Real};
use crate::setfn::{Evaluator, Threshold};

use super::adaptive::count_good;

#[derive(Clone, Debug)]
pub struct EntropyEstimate<T> {
    pub log2_x: Vec<T>,
    pub counts: Vec<BigUint>,
    /// `log M(x) / log x`.
    pub ratios: Vec<T>,
    /// Window maximum of the ratios (upper entropy estimate).
    pub upper: T,
    /// Window minimum of the ratios (lower entropy estimate).
    pub lower: T,
    /// Least squares of `log M` on `log x` over the window.
    pub fit: Option<LinearFit<T>>,
    pub window: std::ops::Range<usize>,
}

impl<T: Real> EntropyEstimate<T> {
    pub fn slope(&self) -> Option<T> {
        self.fit.as_ref().map(|f| f.slope)
    }
}

/// Thresholds `t = 2^{-k}` for `x = 2^k`, `k = lo, lo+step, ..., hi`.
pub fn dyadic_schedule<T: Real>(lo: i64, hi: i64, step: i64) -> Vec<Threshold<T>> {
    (lo..=hi)
        .step_by(step.max(1) as usize)
        .map(|k| Threshold::pow2(-k))
        .collect()
}

/// Thresholds for `x = 2^e` with real exponents (log channel only).
pub fn geometric_schedule<T: Real>(exponents: &[T]) -> Vec<Threshold<T>> {
    exponents
        .iter()
        .map(|&e| Threshold::from_x_log2(e))
        .collect()
}

pub fn entropy_estimate<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    schedule: &[Threshold<T>],
) -> Result<EntropyEstimate<T>> {
    if schedule.len() < 3 {
        return Err(Error::InvalidArgument(
            "entropy estimates need at least 3 schedule points".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1].log2 >= w[0].log2) {
        return Err(Error::InvalidArgument(
            "x schedule must be increasing".into(),
        ));
    }
    let mut log2_x = Vec::with_capacity(schedule.len());
    let mut counts = Vec::with_capacity(schedule.len());
    let mut ratios = Vec::with_capacity(schedule.len());
    for t in schedule {
        let m = count_good(eval, grid, t)?;
        let lx = -t.log2;
        let lm = T::lit(log2_biguint(&m));
        log2_x.push(lx);
        ratios.push(lm / lx);
        counts.push(m);
    }
    let window = tail_window(schedule.len());
    let (upper, lower) = extrema(&ratios[window.clone()]).expect("nonempty window");
    let ys: Vec<T> = counts[window.clone()]
        .iter()
        .map(|m| T::lit(log2_biguint(m)))
        .collect();
    let fit = least_squares(&log2_x[window.clone()], &ys);
    Ok(EntropyEstimate {
        log2_x,
        counts,
        ratios,
        upper,
        lower,
        fit,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setfn::SetFunctionSpec;

    #[test]
    fn lebesgue_and_square() {
        let g = GridScheme::classical(1);
        let sched = dyadic_schedule::<f64>(4, 30, 1);
        let leb = Evaluator::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        let r = entropy_estimate(&leb, &g, &sched).unwrap();
        assert!((r.slope().unwrap() - 1.0).abs() < 0.01);
        let sq = Evaluator::new(&SetFunctionSpec::lebesgue(1).power("2")).unwrap();
        let r = entropy_estimate(&sq, &g, &sched).unwrap();
        assert!((r.slope().unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn too_short() {
        let g = GridScheme::classical(1);
        let leb = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        assert!(entropy_estimate(&leb, &g, &dyadic_schedule(4, 5, 1)).is_err());
    }
}
