//! The adaptive approximation algorithm: minimal `x`-good partitions `G_x`
//! and their cardinality `M(x)`.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::dyadic::{CubeId, GridScheme, Partition};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::setfn::{Cascade, Evaluator, Threshold};

#[derive(Clone, Debug)]
pub struct GoodPartitionResult<T> {
    pub threshold: Threshold<T>,
    pub partition: Partition,
    /// `log2 J(Q)` for each cube of the partition, same order.
    pub values_log2: Vec<T>,
    /// `log2 J(G_x)`, the largest value in the partition.
    pub max_value_log2: T,
    /// Cubes per level.
    pub histogram: BTreeMap<u32, usize>,
    pub warning: Option<String>,
}

impl<T: Real> GoodPartitionResult<T> {
    pub fn count(&self) -> usize {
        self.partition.len()
    }
}

/// A cube together with its value; cascades also carry the class counts so
/// children are evaluated incrementally.
#[derive(Clone, Debug)]
pub(crate) struct Frame<T> {
    pub cube: CubeId,
    pub log2: T,
    counts: Option<Vec<u32>>,
}

pub(crate) struct Walker<'a, T> {
    pub eval: &'a Evaluator<T>,
    pub grid: &'a GridScheme,
    cascade: Option<&'a Cascade<T>>,
    pub max_depth: u32,
}

impl<'a, T: Real> Walker<'a, T> {
    pub fn new(eval: &'a Evaluator<T>, grid: &'a GridScheme) -> Result<Self> {
        eval.check_grid(grid)?;
        Ok(Walker {
            eval,
            grid,
            cascade: eval.cascade(),
            max_depth: eval.max_depth(),
        })
    }

    pub fn frame(&self, cube: CubeId) -> Frame<T> {
        match self.cascade {
            Some(c) => {
                let counts = c.counts(&cube);
                let log2 = match &counts {
                    Some(k) => c.log2_from_counts(cube.level, k),
                    None => T::neg_infinity(),
                };
                Frame { cube, log2, counts }
            }
            None => Frame {
                log2: self
                    .eval
                    .value_log2(&cube)
                    .expect("dimension checked")
                    .log2(),
                cube,
                counts: None,
            },
        }
    }

    pub fn child(&self, parent: &Frame<T>, cube: CubeId) -> Frame<T> {
        match (self.cascade, &parent.counts) {
            (Some(c), Some(pc)) => {
                let step = cube.level;
                match c.table(step)[cube.digit(step)] {
                    Some(k) => {
                        let mut counts = pc.clone();
                        counts[k as usize] += 1;
                        let log2 = c.log2_from_counts(step, &counts);
                        Frame {
                            cube,
                            log2,
                            counts: Some(counts),
                        }
                    }
                    None => Frame {
                        cube,
                        log2: T::neg_infinity(),
                        counts: None,
                    },
                }
            }
            (Some(_), None) => Frame {
                cube,
                log2: T::neg_infinity(),
                counts: None,
            },
            (None, _) => self.frame(cube),
        }
    }

    /// `J(Q) >= t`.
    pub fn meets(&self, f: &Frame<T>, t: &Threshold<T>) -> bool {
        match (self.cascade, &f.counts) {
            (Some(c), Some(k)) => self.eval.meets_with(f.log2, t, || c.exact_from_counts(k)),
            (Some(_), None) => false,
            (None, _) => self.eval.meets(&f.cube, f.log2, t),
        }
    }

    /// Roots of the grid with `J >= t`, over all levels that can hold one.
    pub fn bad_roots(&self, t: &Threshold<T>) -> Result<Vec<Frame<T>>> {
        if self.grid.is_classical() {
            let root = self.frame(CubeId::root(self.grid.dim()));
            return Ok(if self.meets(&root, t) {
                vec![root]
            } else {
                Vec::new()
            });
        }
        let classical = GridScheme::classical(self.grid.dim());
        let eps = Evaluator::<T>::tie_eps(t.log2);
        let mut out = Vec::new();
        let mut level = 0u32;
        loop {
            let sup = self.eval.sup_level_log2(&classical, level)?.log2();
            if sup < t.log2 - eps {
                break;
            }
            if level > self.max_depth {
                return Err(Error::MaxDepthExceeded {
                    cube: CubeId::root(self.grid.dim()),
                    limit: self.max_depth,
                });
            }
            for r in self.grid.grid_roots(level)? {
                let f = self.frame(r);
                if self.meets(&f, t) {
                    out.push(f);
                }
            }
            level += 1;
        }
        Ok(out)
    }

    /// Depth-first traversal below the bad roots. `emit` receives every good
    /// cube with a bad member parent, in depth-first order; returns the number
    /// of bad cubes visited.
    pub fn walk(
        &self,
        t: &Threshold<T>,
        limit: usize,
        mut emit: impl FnMut(Frame<T>),
    ) -> Result<u64> {
        let mut stack: Vec<(Frame<T>, bool)> = self
            .bad_roots(t)?
            .into_iter()
            .rev()
            .map(|f| (f, true))
            .collect();
        let mut bad = 0u64;
        let mut visited = 0usize;
        while let Some((f, is_bad)) = stack.pop() {
            if !is_bad {
                emit(f);
                continue;
            }
            bad += 1;
            let children = self.grid.children_in_grid(&f.cube);
            visited += children.len();
            if visited > limit {
                return Err(Error::TooManyCubes { limit });
            }
            for ch in children.into_iter().rev() {
                if ch.level > self.max_depth {
                    return Err(Error::MaxDepthExceeded {
                        cube: ch,
                        limit: self.max_depth,
                    });
                }
                let c = self.child(&f, ch);
                let b = self.meets(&c, t);
                stack.push((c, b));
            }
        }
        Ok(bad)
    }
}

/// `G_x` for `t = 1/x`: cubes with `J(Q) < t` whose member parent has `J >= t`.
pub fn adaptive_partition<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    t: &Threshold<T>,
) -> Result<GoodPartitionResult<T>> {
    let walker = Walker::new(eval, grid)?;
    let mut cubes = Vec::new();
    let mut values = Vec::new();
    let mut histogram = BTreeMap::new();
    let mut max_value = T::neg_infinity();
    let mut warning = None;
    if grid.is_classical() {
        let root = walker.frame(CubeId::root(grid.dim()));
        if !walker.meets(&root, t) {
            warning =
                Some("threshold exceeds the value of the unit cube; G_x is empty".to_string());
        }
    }
    walker.walk(t, eval.limits.max_cubes, |f| {
        *histogram.entry(f.cube.level).or_insert(0) += 1;
        if f.log2 > max_value {
            max_value = f.log2;
        }
        values.push(f.log2);
        cubes.push(f.cube);
    })?;
    Ok(GoodPartitionResult {
        threshold: t.clone(),
        partition: Partition::new(cubes, grid.clone()),
        values_log2: values,
        max_value_log2: max_value,
        histogram,
        warning,
    })
}

/// `M(x) = card G_x` without materialising the partition.
///
/// On the classical grid every bad cube other than the root has a bad
/// parent, so `M = (2^d - 1) B + 1` where `B` counts bad cubes over all
/// levels; those counts come from grouped level distributions.
pub fn count_good<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    t: &Threshold<T>,
) -> Result<BigUint> {
    let walker = Walker::new(eval, grid)?;
    if grid.is_classical() {
        let root = walker.frame(CubeId::root(grid.dim()));
        if !walker.meets(&root, t) {
            return Ok(BigUint::zero());
        }
        match count_bad_by_levels(eval, grid, t, walker.max_depth) {
            Ok(bad) => {
                let fan = (BigUint::one() << grid.dim()) - BigUint::one();
                return Ok(fan * bad + BigUint::one());
            }
            Err(e) if e.is_resource_guard() => {}
            Err(e) => return Err(e),
        }
    }
    let mut m = 0u128;
    walker.walk(t, usize::MAX, |_| m += 1)?;
    Ok(BigUint::from(m))
}

fn count_bad_by_levels<T: Real>(
    eval: &Evaluator<T>,
    grid: &GridScheme,
    t: &Threshold<T>,
    max_depth: u32,
) -> Result<BigUint> {
    let mut total = BigUint::zero();
    let mut level = 0u32;
    loop {
        if level > max_depth {
            return Err(Error::LevelTooDeep {
                level,
                max: max_depth,
            });
        }
        let n = eval.count_at_least(grid, level, t)?;
        if n.is_zero() {
            return Ok(total);
        }
        total += n;
        level += 1;
    }
}
