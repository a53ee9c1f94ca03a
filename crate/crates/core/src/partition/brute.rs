//! Exhaustive oracles over dyadic partitions of bounded depth. Only meant for
//! tiny instances; every comparison is exact when the set function allows it.

use std::cmp::Ordering;

use num_rational::BigRational;

use crate::dyadic::{CubeId, GridScheme, Partition};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::setfn::{Evaluator, Threshold};

/// Guard on `d * m` for the exhaustive recursions.
pub const MAX_BRUTE_BITS: u32 = 16;

fn check_size<T: Real>(eval: &Evaluator<T>, depth: u32) -> Result<()> {
    let bits = eval.dim() as u32 * depth;
    if bits > MAX_BRUTE_BITS {
        return Err(Error::EnumerationBound {
            level: depth,
            dim: eval.dim(),
            limit: MAX_BRUTE_BITS,
        });
    }
    Ok(())
}

/// Smallest partition of the unit cube into dyadic cubes of depth at most
/// `m`, all with `J(Q) < t`. Each cube is either kept (when allowed) or
/// split, and the cheaper option wins.
pub fn brute_force_min_partition<T: Real>(
    eval: &Evaluator<T>,
    t: &Threshold<T>,
    max_depth: u32,
) -> Result<(usize, Partition)> {
    check_size(eval, max_depth)?;
    let grid = GridScheme::classical(eval.dim());
    let root = CubeId::root(eval.dim());
    match best_cover(eval, t, &root, max_depth)? {
        Some(cubes) => Ok((cubes.len(), Partition::new(cubes, grid))),
        None => Err(Error::Infeasible { depth: max_depth }),
    }
}

fn best_cover<T: Real>(
    eval: &Evaluator<T>,
    t: &Threshold<T>,
    q: &CubeId,
    max_depth: u32,
) -> Result<Option<Vec<CubeId>>> {
    let v = eval.value_log2(q)?.log2();
    let keep = (!eval.meets(q, v, t)).then(|| vec![q.clone()]);
    let split = if q.level < max_depth {
        let mut all = Vec::new();
        let mut ok = true;
        for ch in q.children() {
            match best_cover(eval, t, &ch, max_depth)? {
                Some(c) => all.extend(c),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        ok.then_some(all)
    } else {
        None
    };
    Ok(match (keep, split) {
        (Some(k), Some(s)) => Some(if s.len() < k.len() { s } else { k }),
        (k, s) => k.or(s),
    })
}

/// A cube value usable for exact ordering.
#[derive(Clone, Debug)]
pub enum OracleValue<T> {
    Exact(BigRational),
    Log2(T),
}

impl<T: Real> OracleValue<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (OracleValue::Exact(a), OracleValue::Exact(b)) => a.cmp(b),
            (OracleValue::Log2(a), OracleValue::Log2(b)) => {
                a.partial_cmp(b).unwrap_or(Ordering::Equal)
            }
            _ => unreachable!("mixed channels"),
        }
    }
}

/// Result of the min-max oracle for one budget.
#[derive(Clone, Debug)]
pub struct MinMaxResult<T> {
    pub budget: usize,
    /// `min_P max_{Q ∈ P} J(Q)` over partitions of depth `<= m` with `card P <= budget`.
    pub value: Option<OracleValue<T>>,
}

/// `min max_{Q∈P} J(Q)` over all dyadic partitions `P` of the unit cube of
/// depth at most `m` with `card P <= n`, for every `n` in `1..=max_budget`.
///
/// Values are replaced by their ranks among all cube values of the tree, so
/// the knapsack-style recursion only compares integers.
pub fn brute_min_max<T: Real>(
    eval: &Evaluator<T>,
    max_depth: u32,
    max_budget: usize,
) -> Result<Vec<MinMaxResult<T>>> {
    check_size(eval, max_depth)?;
    let exact = eval.supports_exact();
    // Collect the whole tree in depth-first order.
    let mut nodes: Vec<(CubeId, OracleValue<T>)> = Vec::new();
    let mut stack = vec![CubeId::root(eval.dim())];
    while let Some(q) = stack.pop() {
        let v = if exact {
            OracleValue::Exact(eval.value_exact(&q)?)
        } else {
            OracleValue::Log2(eval.value_log2(&q)?.log2())
        };
        if q.level < max_depth {
            stack.extend(q.children());
        }
        nodes.push((q, v));
    }
    let mut order: Vec<usize> = (0..nodes.len()).collect();
    order.sort_by(|&a, &b| nodes[a].1.cmp(&nodes[b].1));
    let mut rank = vec![0u32; nodes.len()];
    let mut distinct: Vec<OracleValue<T>> = Vec::new();
    for (i, &idx) in order.iter().enumerate() {
        if i == 0 || nodes[order[i - 1]].1.cmp(&nodes[idx].1) != Ordering::Equal {
            distinct.push(nodes[idx].1.clone());
        }
        rank[idx] = (distinct.len() - 1) as u32;
    }
    let index: std::collections::HashMap<CubeId, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, (q, _))| (q.clone(), i))
        .collect();
    let table = min_max_table(
        &CubeId::root(eval.dim()),
        max_depth,
        max_budget,
        &index,
        &rank,
    );
    Ok((1..=max_budget)
        .map(|n| MinMaxResult {
            budget: n,
            value: (table[n] != INF).then(|| distinct[table[n] as usize].clone()),
        })
        .collect())
}

const INF: u32 = u32::MAX;

/// Largest useful budget inside a subtree of the given height.
fn max_cubes(dim: usize, height: u32, budget: usize) -> usize {
    let bits = dim as u32 * height;
    if bits >= usize::BITS - 1 {
        budget
    } else {
        budget.min(1usize << bits)
    }
}

/// `f[k]` = best rank of the maximum using at most `k` cubes inside `q`.
fn min_max_table(
    q: &CubeId,
    max_depth: u32,
    budget: usize,
    index: &std::collections::HashMap<CubeId, usize>,
    rank: &[u32],
) -> Vec<u32> {
    let own = rank[index[q]];
    let mut f = vec![INF; budget + 1];
    if q.level < max_depth {
        // Combine children: g[k] = min over splits of max of child values.
        let mut g = vec![INF; budget + 1];
        g[0] = 0;
        let child_cap = max_cubes(q.dim(), max_depth - q.level - 1, budget);
        for ch in q.children() {
            let c = min_max_table(&ch, max_depth, budget, index, rank);
            let mut next = vec![INF; budget + 1];
            for used in 0..=budget {
                if g[used] == INF {
                    continue;
                }
                for k in 1..=child_cap.min(budget - used) {
                    if c[k] == INF {
                        continue;
                    }
                    let v = g[used].max(c[k]);
                    if v < next[used + k] {
                        next[used + k] = v;
                    }
                }
            }
            g = next;
        }
        f = g;
    }
    for k in 1..=budget {
        if own < f[k] {
            f[k] = own;
        }
    }
    // At most k cubes.
    for k in 1..=budget {
        if f[k - 1] < f[k] {
            f[k] = f[k - 1];
        }
    }
    f[0] = INF;
    f
}

/// Every dyadic partition of the unit cube of depth at most `m`.
pub fn enumerate_partitions(dim: usize, max_depth: u32) -> Result<Vec<Vec<CubeId>>> {
    if dim as u32 * max_depth > 6 {
        return Err(Error::EnumerationBound {
            level: max_depth,
            dim,
            limit: 6,
        });
    }
    Ok(partitions_of(&CubeId::root(dim), max_depth))
}

fn partitions_of(q: &CubeId, max_depth: u32) -> Vec<Vec<CubeId>> {
    let mut out = vec![vec![q.clone()]];
    if q.level < max_depth {
        let mut acc: Vec<Vec<CubeId>> = vec![Vec::new()];
        for ch in q.children() {
            let sub = partitions_of(&ch, max_depth);
            let mut next = Vec::with_capacity(acc.len() * sub.len());
            for a in &acc {
                for s in &sub {
                    let mut v = a.clone();
                    v.extend(s.iter().cloned());
                    next.push(v);
                }
            }
            acc = next;
        }
        out.extend(acc);
    }
    out
}
