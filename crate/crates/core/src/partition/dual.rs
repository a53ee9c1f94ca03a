//! The dual problem: the smallest achievable `J(G_x)` under a cardinality
//! budget, and its convergence exponents.
//!
//! The family `{G_x}` only changes when `t = 1/x` crosses a cube value, and
//! lowering `t` past the current maximum `m = J(G_x)` splits exactly the
//! cubes of value `m` (and, recursively, children of value `m`). The sweep
//! walks these events in order, so every distinct `G_x` is visited once with
//! its cardinality and maximum.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_rational::BigRational;

use crate::dyadic::{CubeId, GridScheme};
use crate::error::{Error, Result};
use crate::num::{extrema, least_squares, tail_window, LinearFit, Real};
use crate::setfn::{Evaluator, Threshold};

use super::adaptive::{Frame, Walker};

/// One member of the sweep: a distinct `G_x`.
#[derive(Clone, Debug)]
pub struct SweepState<T> {
    pub card: u64,
    /// `log2 J(G_x)`.
    pub max_log2: T,
    /// A cube attaining the maximum.
    pub argmax: Option<CubeId>,
    /// Largest `t` giving this partition (`log2`), with its witness cube.
    pub threshold_log2: T,
    pub threshold_cube: CubeId,
    /// Deepest level present in the partition.
    pub depth: u32,
}

#[derive(Clone, Debug)]
pub struct DualRow<T> {
    pub budget: u64,
    pub gamma_log2: T,
    pub gamma_exact: Option<BigRational>,
    pub threshold_log2: T,
    pub threshold_exact: Option<BigRational>,
    pub card: u64,
    pub depth: u32,
}

#[derive(Clone, Debug)]
pub struct AlphaExponents<T> {
    /// Window maximum of `log γ_n / log n`.
    pub upper: T,
    /// Window minimum of `log γ_n / log n`.
    pub lower: T,
    pub fit: Option<LinearFit<T>>,
    pub window: std::ops::Range<usize>,
}

#[derive(Clone, Debug)]
pub struct DualSweepResult<T> {
    pub rows: Vec<DualRow<T>>,
    pub min_card: u64,
    pub alpha: Option<AlphaExponents<T>>,
}

struct Item<T> {
    frame: Frame<T>,
    root: bool,
}

impl<T: Real> PartialEq for Item<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Item<T> {}

impl<T: Real> PartialOrd for Item<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Item<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.frame
            .log2
            .partial_cmp(&other.frame.log2)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.frame.cube.level.cmp(&self.frame.cube.level))
            .then_with(|| other.frame.cube.coords.cmp(&self.frame.cube.coords))
    }
}

/// All distinct `G_x` with cardinality at most `max_card`, in order of
/// decreasing `t`, plus the first state beyond the budget (if reached).
pub fn dual_sweep<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    max_card: u64,
) -> Result<Vec<SweepState<T>>> {
    let walker = Walker::new(eval, grid)?;
    let classical = GridScheme::classical(grid.dim());
    let mut heap: BinaryHeap<Item<T>> = BinaryHeap::new();
    let mut card = 0u64;
    let mut depth = 0u32;
    let mut next_root_level = 0u32;
    let mut states = Vec::new();
    let limit = eval.limits.max_cubes as u64;
    if max_card >= limit {
        return Err(Error::TooManyCubes {
            limit: eval.limits.max_cubes,
        });
    }
    loop {
        // Bring in roots of deeper levels while they could hold the next event.
        loop {
            if next_root_level > walker.max_depth {
                break;
            }
            let sup = eval.sup_level_log2(&classical, next_root_level)?.log2();
            let top = heap.peek().map_or(T::neg_infinity(), |i| i.frame.log2);
            let done = if grid.is_classical() {
                next_root_level > 0
            } else {
                sup == T::neg_infinity() || (sup < top && !heap.is_empty())
            };
            if done {
                break;
            }
            for r in grid.grid_roots(next_root_level)? {
                heap.push(Item {
                    frame: walker.frame(r),
                    root: true,
                });
            }
            next_root_level += 1;
        }
        let Some(top) = heap.pop() else { break };
        if top.frame.log2 == T::neg_infinity() {
            heap.push(top);
            break;
        }
        // Event at `t = m`: everything of value `>= m` becomes bad.
        let t = Threshold {
            log2: top.frame.log2,
            exact: if eval.supports_exact() {
                eval.value_exact(&top.frame.cube).ok()
            } else {
                None
            },
        };
        let event_cube = top.frame.cube.clone();
        let mut split = vec![top];
        while let Some(peek) = heap.peek() {
            if walker.meets(&peek.frame, &t) {
                split.push(heap.pop().expect("peeked"));
            } else {
                break;
            }
        }
        while let Some(item) = split.pop() {
            if !item.root {
                card -= 1;
            }
            for ch in grid.children_in_grid(&item.frame.cube) {
                if ch.level > walker.max_depth {
                    return Err(Error::MaxDepthExceeded {
                        cube: ch,
                        limit: walker.max_depth,
                    });
                }
                let f = walker.child(&item.frame, ch);
                let it = Item {
                    frame: f,
                    root: false,
                };
                if walker.meets(&it.frame, &t) {
                    split.push(it);
                } else {
                    card += 1;
                    depth = depth.max(it.frame.cube.level);
                    heap.push(it);
                }
            }
        }
        if card > limit {
            return Err(Error::TooManyCubes {
                limit: eval.limits.max_cubes,
            });
        }
        // The current maximum of G_x: the largest non-root item.
        let (max_log2, argmax) = max_member(&heap);
        states.push(SweepState {
            card,
            max_log2,
            argmax,
            threshold_log2: t.log2,
            threshold_cube: event_cube,
            depth,
        });
        if card > max_card || max_log2 == T::neg_infinity() {
            break;
        }
    }
    Ok(states)
}

fn max_member<T: Real>(heap: &BinaryHeap<Item<T>>) -> (T, Option<CubeId>) {
    // Roots still pending sit in the heap too; they are not part of G_x.
    if let Some(top) = heap.peek() {
        if !top.root {
            return (top.frame.log2, Some(top.frame.cube.clone()));
        }
    }
    heap.iter()
        .filter(|i| !i.root)
        .max()
        .map_or((T::neg_infinity(), None), |i| {
            (i.frame.log2, Some(i.frame.cube.clone()))
        })
}

fn row_for<T: Real>(
    eval: &Evaluator<T>,
    states: &[SweepState<T>],
    budget: u64,
) -> Result<DualRow<T>> {
    let min = states.first().map_or(0, |s| s.card);
    let pos = states.iter().rposition(|s| s.card <= budget);
    let Some(i) = pos else {
        return Err(Error::EmptyBudget { budget, min });
    };
    let s = &states[i];
    let exact = |c: &Option<CubeId>| c.as_ref().and_then(|c| eval.value_exact(c).ok());
    Ok(DualRow {
        budget,
        gamma_log2: s.max_log2,
        gamma_exact: exact(&s.argmax),
        threshold_log2: s.threshold_log2,
        threshold_exact: exact(&Some(s.threshold_cube.clone())),
        card: s.card,
        depth: s.depth,
    })
}

/// `γ_n` with its witnessing `G_x`.
pub fn dual_gamma<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    budget: u64,
) -> Result<DualRow<T>> {
    let states = dual_sweep(eval, grid, budget)?;
    row_for(eval, &states, budget)
}

/// `γ_n` for every budget, from a single sweep. Budgets below the smallest
/// achievable cardinality are an error.
pub fn dual_table<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    budgets: &[u64],
) -> Result<DualSweepResult<T>> {
    let max = budgets.iter().copied().max().unwrap_or(0);
    let states = dual_sweep(eval, grid, max)?;
    let rows = budgets
        .iter()
        .map(|&b| row_for(eval, &states, b))
        .collect::<Result<Vec<_>>>()?;
    let alpha = alpha_exponents(
        &rows.iter().map(|r| r.budget).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.gamma_log2).collect::<Vec<_>>(),
    );
    Ok(DualSweepResult {
        rows,
        min_card: states.first().map_or(0, |s| s.card),
        alpha,
    })
}

/// `log γ_n / log n` over the tail half of the budgets, plus the slope of
/// `log γ_n` against `log n`. Needs at least three budgets above 1.
pub fn alpha_exponents<T: Real>(budgets: &[u64], gamma_log2: &[T]) -> Option<AlphaExponents<T>> {
    let pts: Vec<(T, T)> = budgets
        .iter()
        .zip(gamma_log2)
        .filter(|(&n, g)| n > 1 && g.is_finite())
        .map(|(&n, &g)| (T::lit((n as f64).log2()), g))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let window = tail_window(pts.len());
    let tail = &pts[window.clone()];
    let ratios: Vec<T> = tail.iter().map(|(x, y)| *y / *x).collect();
    let (upper, lower) = extrema(&ratios)?;
    let xs: Vec<T> = tail.iter().map(|p| p.0).collect();
    let ys: Vec<T> = tail.iter().map(|p| p.1).collect();
    Some(AlphaExponents {
        upper,
        lower,
        fit: least_squares(&xs, &ys),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;
    use crate::setfn::SetFunctionSpec;

    #[test]
    fn lebesgue_line() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(1)).unwrap();
        let g = GridScheme::classical(1);
        let t = dual_table(&e, &g, &[2, 4, 7, 8]).unwrap();
        let got: Vec<f64> = t.rows.iter().map(|r| r.gamma_log2).collect();
        assert_eq!(got, vec![-1.0, -2.0, -2.0, -3.0]);
        assert_eq!(t.rows[2].gamma_exact, Some(parse_rational("1/4").unwrap()));
        assert!(matches!(
            dual_gamma(&e, &g, 1),
            Err(Error::EmptyBudget { budget: 1, min: 2 })
        ));
    }

    #[test]
    fn binary_measure_budget_five() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.2", "0.8"])).unwrap();
        let r = dual_gamma(&e, &GridScheme::classical(1), 5).unwrap();
        assert_eq!(r.gamma_exact, Some(parse_rational("0.4096").unwrap()));
        assert_eq!(r.card, 5);
    }

    #[test]
    fn lebesgue_square_powers() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::lebesgue(2)).unwrap();
        let t = dual_table(&e, &GridScheme::classical(2), &[4, 16, 64, 256]).unwrap();
        for (k, r) in t.rows.iter().enumerate() {
            assert_eq!(r.gamma_log2, -2.0 * (k as f64 + 1.0));
        }
    }

    #[test]
    fn interior_sweep_is_monotone() {
        let e = Evaluator::<f64>::new(&SetFunctionSpec::dyadic(1, &["0.3", "0.7"])).unwrap();
        let states = dual_sweep(&e, &GridScheme::interior(1), 200).unwrap();
        assert!(states
            .windows(2)
            .all(|w| w[1].max_log2 <= w[0].max_log2 && w[1].card > w[0].card));
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let a = alpha_exponents(&[2, 4, 8, 16, 32], &[-1.0f64; 5]).unwrap();
        assert!(a.fit.unwrap().slope.abs() < 1e-15);
    }
}
