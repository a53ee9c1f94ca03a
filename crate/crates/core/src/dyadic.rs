//! Dyadic cubes, grid schemes and partition validity.
//!
//! A cube of level `n` with coordinates `(k_1, ..., k_d)` is the half-open box
//! `prod_i [k_i 2^-n, (k_i + 1) 2^-n)`. Children are listed in lexicographic
//! coordinate order; child index `c` sets bit `d - 1 - i` of `c` as the new
//! low bit of coordinate `i`.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level whose coordinates fit in `u64` with room for child arithmetic.
pub const MAX_LEVEL: u32 = 63;

/// Hard cap on `n * d` for full-level enumeration.
pub const HARD_ENUMERATION_BITS: u32 = 62;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub level: u32,
    pub coords: Vec<u64>,
}

impl CubeId {
    pub fn new(level: u32, coords: Vec<u64>) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep {
                level,
                max: MAX_LEVEL,
            });
        }
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "cube must have at least one coordinate".into(),
            ));
        }
        let side = 1u128 << level;
        if let Some(&k) = coords.iter().find(|&&k| k as u128 >= side) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {k} out of range for level {level}"
            )));
        }
        Ok(CubeId { level, coords })
    }

    /// The unit cube in dimension `dim`.
    pub fn root(dim: usize) -> Self {
        CubeId {
            level: 0,
            coords: vec![0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `log2 Λ(Q) = -n d`.
    pub fn log2_volume(&self) -> i64 {
        -(self.level as i64) * self.dim() as i64
    }

    pub fn parent(&self) -> Option<CubeId> {
        (self.level > 0).then(|| CubeId {
            level: self.level - 1,
            coords: self.coords.iter().map(|k| k >> 1).collect(),
        })
    }

    /// The ancestor at `level` (which must not exceed this cube's level).
    pub fn ancestor(&self, level: u32) -> CubeId {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        CubeId {
            level,
            coords: self.coords.iter().map(|k| k >> shift).collect(),
        }
    }

    pub fn child(&self, index: usize) -> CubeId {
        let d = self.dim();
        CubeId {
            level: self.level + 1,
            coords: self
                .coords
                .iter()
                .enumerate()
                .map(|(i, k)| (k << 1) | ((index >> (d - 1 - i)) & 1) as u64)
                .collect(),
        }
    }

    /// All `2^d` children, lexicographic order.
    pub fn children(&self) -> impl Iterator<Item = CubeId> + '_ {
        (0..1usize << self.dim()).map(move |c| self.child(c))
    }

    /// Child index taken at step `j` (1-based) on the path from the root.
    pub fn digit(&self, step: u32) -> usize {
        debug_assert!(step >= 1 && step <= self.level);
        let bit = self.level - step;
        let d = self.dim();
        self.coords.iter().enumerate().fold(0usize, |acc, (i, k)| {
            acc | ((((k >> bit) & 1) as usize) << (d - 1 - i))
        })
    }

    /// Whether `other` is this cube or one of its descendants.
    pub fn contains(&self, other: &CubeId) -> bool {
        other.dim() == self.dim()
            && other.level >= self.level
            && other.ancestor(self.level) == *self
    }

    pub fn is_disjoint(&self, other: &CubeId) -> bool {
        !self.contains(other) && !other.contains(self)
    }

    /// Split off the first `left_dim` coordinates (for product set functions).
    pub fn split(&self, left_dim: usize) -> (CubeId, CubeId) {
        (
            CubeId {
                level: self.level,
                coords: self.coords[..left_dim].to_vec(),
            },
            CubeId {
                level: self.level,
                coords: self.coords[left_dim..].to_vec(),
            },
        )
    }
}

impl fmt::Display for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.level)?;
        for (i, k) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CubeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CubeId({self})")
    }
}

impl FromStr for CubeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad cube text {s:?}, expected n:k1,...,kd"));
        let (level, coords) = s.trim().split_once(':').ok_or_else(bad)?;
        let level = level.trim().parse::<u32>().map_err(|_| bad())?;
        let coords = coords
            .split(',')
            .map(|k| k.trim().parse::<u64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        CubeId::new(level, coords)
    }
}

/// Membership rule for a cube family `S ⊂ D`.
#[derive(Clone)]
pub enum GridKind {
    /// Every dyadic cube.
    Classical,
    /// Cubes whose closure misses the boundary of the unit cube.
    Interior,
    /// A user predicate; callers guarantee that children of members behave.
    Predicate(Arc<dyn Fn(&CubeId) -> bool + Send + Sync>),
}

#[derive(Clone)]
pub struct GridScheme {
    dim: usize,
    kind: GridKind,
}

impl fmt::Debug for GridScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            GridKind::Classical => "classical",
            GridKind::Interior => "interior",
            GridKind::Predicate(_) => "predicate",
        };
        write!(f, "GridScheme({kind}, d={})", self.dim)
    }
}

impl GridScheme {
    pub fn classical(dim: usize) -> Self {
        GridScheme {
            dim,
            kind: GridKind::Classical,
        }
    }

    pub fn interior(dim: usize) -> Self {
        GridScheme {
            dim,
            kind: GridKind::Interior,
        }
    }

    pub fn predicate(dim: usize, p: impl Fn(&CubeId) -> bool + Send + Sync + 'static) -> Self {
        GridScheme {
            dim,
            kind: GridKind::Predicate(Arc::new(p)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &GridKind {
        &self.kind
    }

    pub fn is_classical(&self) -> bool {
        matches!(self.kind, GridKind::Classical)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            GridKind::Classical => "classical",
            GridKind::Interior => "interior",
            GridKind::Predicate(_) => "predicate",
        }
    }

    pub fn is_member(&self, cube: &CubeId) -> bool {
        if cube.dim() != self.dim {
            return false;
        }
        match &self.kind {
            GridKind::Classical => true,
            GridKind::Interior => {
                if cube.level < 2 {
                    return false;
                }
                let hi = (1u128 << cube.level) - 2;
                cube.coords.iter().all(|&k| k >= 1 && (k as u128) <= hi)
            }
            GridKind::Predicate(p) => p(cube),
        }
    }

    /// Children of `cube` that belong to the grid, lexicographic order.
    pub fn children_in_grid(&self, cube: &CubeId) -> Vec<CubeId> {
        cube.children().filter(|c| self.is_member(c)).collect()
    }

    fn check_enumerable(&self, level: u32, limit_bits: u32) -> Result<()> {
        if level > MAX_LEVEL {
            return Err(Error::LevelTooDeep {
                level,
                max: MAX_LEVEL,
            });
        }
        let bits = level as u64 * self.dim as u64;
        let limit = limit_bits.min(HARD_ENUMERATION_BITS);
        if bits > limit as u64 {
            return Err(Error::EnumerationBound {
                level,
                dim: self.dim,
                limit,
            });
        }
        Ok(())
    }

    /// Streams the members of level `n`, refusing when `n * d > limit_bits`.
    pub fn level_members(
        &self,
        level: u32,
        limit_bits: u32,
    ) -> Result<Box<dyn Iterator<Item = CubeId> + '_>> {
        match &self.kind {
            GridKind::Classical => {
                self.check_enumerable(level, limit_bits)?;
                Ok(Box::new(BoxIter::new(
                    self.dim,
                    level,
                    0,
                    (1u64 << level) - 1,
                )))
            }
            GridKind::Interior => {
                if level < 2 {
                    return Ok(Box::new(std::iter::empty()));
                }
                self.check_enumerable(level, limit_bits)?;
                Ok(Box::new(BoxIter::new(
                    self.dim,
                    level,
                    1,
                    (1u64 << level) - 2,
                )))
            }
            GridKind::Predicate(_) => {
                self.check_enumerable(level, limit_bits)?;
                Ok(Box::new(
                    BoxIter::new(self.dim, level, 0, (1u64 << level) - 1)
                        .filter(move |c| self.is_member(c)),
                ))
            }
        }
    }

    /// Members of level `n` whose parent is not a member.
    pub fn grid_roots(&self, level: u32) -> Result<Vec<CubeId>> {
        match &self.kind {
            GridKind::Classical => Ok(if level == 0 {
                vec![CubeId::root(self.dim)]
            } else {
                Vec::new()
            }),
            GridKind::Interior => {
                if level < 2 {
                    return Ok(Vec::new());
                }
                if level > MAX_LEVEL {
                    return Err(Error::LevelTooDeep {
                        level,
                        max: MAX_LEVEL,
                    });
                }
                let hi = (1u64 << level) - 2;
                let mut out = Vec::new();
                let mut cur = vec![0u64; self.dim];
                interior_shell(self.dim, hi, 0, false, &mut cur, &mut |coords| {
                    out.push(CubeId {
                        level,
                        coords: coords.to_vec(),
                    })
                });
                Ok(out)
            }
            GridKind::Predicate(_) => {
                let limit = HARD_ENUMERATION_BITS;
                Ok(self
                    .level_members(level, limit)?
                    .filter(|c| c.parent().is_none_or(|p| !self.is_member(&p)))
                    .collect())
            }
        }
    }
}

/// Coordinates in `[1, hi]^d` with at least one coordinate on a face (`1` or `hi`).
fn interior_shell(
    dim: usize,
    hi: u64,
    i: usize,
    on_face: bool,
    cur: &mut Vec<u64>,
    emit: &mut dyn FnMut(&[u64]),
) {
    if i == dim {
        if on_face {
            emit(cur);
        }
        return;
    }
    if i == dim - 1 && !on_face {
        cur[i] = 1;
        emit(cur);
        if hi != 1 {
            cur[i] = hi;
            emit(cur);
        }
        return;
    }
    for v in 1..=hi {
        cur[i] = v;
        interior_shell(dim, hi, i + 1, on_face || v == 1 || v == hi, cur, emit);
    }
}

/// Odometer over `[lo, hi]^d` at a fixed level, lexicographic order.
struct BoxIter {
    level: u32,
    lo: u64,
    hi: u64,
    next: Option<Vec<u64>>,
}

impl BoxIter {
    fn new(dim: usize, level: u32, lo: u64, hi: u64) -> Self {
        BoxIter {
            level,
            lo,
            hi,
            next: (lo <= hi).then(|| vec![lo; dim]),
        }
    }
}

impl Iterator for BoxIter {
    type Item = CubeId;

    fn next(&mut self) -> Option<CubeId> {
        let cur = self.next.take()?;
        let mut nxt = cur.clone();
        let mut i = nxt.len();
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if nxt[i] < self.hi {
                nxt[i] += 1;
                advanced = true;
                break;
            }
            nxt[i] = self.lo;
        }
        if advanced {
            self.next = Some(nxt);
        }
        Some(CubeId {
            level: self.level,
            coords: cur,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub cubes: Vec<CubeId>,
    pub grid: GridScheme,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub disjoint: bool,
    /// First overlapping pair found, as `(container, contained)`.
    pub overlap: Option<(CubeId, CubeId)>,
    pub total_volume: BigRational,
    /// `1 - total_volume` when positive.
    pub volume_deficit: Option<BigRational>,
    pub dimension_ok: bool,
    /// Disjoint and of total volume exactly 1.
    pub covers_unit_cube: bool,
}

impl PartitionReport {
    /// A partition of the unit cube in the classical sense.
    pub fn is_partition_of_unit_cube(&self) -> bool {
        self.dimension_ok && self.disjoint && self.covers_unit_cube
    }
}

impl Partition {
    pub fn new(cubes: Vec<CubeId>, grid: GridScheme) -> Self {
        Partition { cubes, grid }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn validate(&self) -> PartitionReport {
        validate_partition(self)
    }
}

pub fn validate_partition(p: &Partition) -> PartitionReport {
    let dim = p.grid.dim();
    let dimension_ok = p.cubes.iter().all(|c| c.dim() == dim);
    let mut seen: HashSet<&CubeId> = HashSet::with_capacity(p.cubes.len());
    let mut overlap = None;
    for c in &p.cubes {
        if !seen.insert(c) && overlap.is_none() {
            overlap = Some((c.clone(), c.clone()));
        }
    }
    if overlap.is_none() {
        'outer: for c in &p.cubes {
            let mut a = c.parent();
            while let Some(anc) = a {
                if seen.contains(&anc) {
                    overlap = Some((anc, c.clone()));
                    break 'outer;
                }
                a = anc.parent();
            }
        }
    }
    let max_bits = p
        .cubes
        .iter()
        .map(|c| c.level as u64 * c.dim() as u64)
        .max()
        .unwrap_or(0);
    let mut scaled = BigUint::zero();
    for c in &p.cubes {
        scaled += BigUint::one() << (max_bits - c.level as u64 * c.dim() as u64);
    }
    let total_volume = BigRational::new(
        BigInt::from(scaled),
        BigInt::from(BigUint::one() << max_bits),
    );
    let one = BigRational::one();
    let volume_deficit = (total_volume < one).then(|| &one - &total_volume);
    let disjoint = overlap.is_none();
    PartitionReport {
        disjoint,
        overlap,
        covers_unit_cube: disjoint && total_volume == one,
        total_volume,
        volume_deficit,
        dimension_ok,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(level: u32, coords: &[u64]) -> CubeId {
        CubeId::new(level, coords.to_vec()).unwrap()
    }

    #[test]
    fn children_in_lexicographic_order() {
        let g = GridScheme::classical(1);
        assert_eq!(
            g.children_in_grid(&c(0, &[0])),
            vec![c(1, &[0]), c(1, &[1])]
        );
        let g2 = GridScheme::classical(2);
        assert_eq!(
            g2.children_in_grid(&c(1, &[0, 1])),
            vec![c(2, &[0, 2]), c(2, &[0, 3]), c(2, &[1, 2]), c(2, &[1, 3])]
        );
        let gi = GridScheme::interior(1);
        assert_eq!(
            gi.children_in_grid(&c(2, &[1])),
            vec![c(3, &[2]), c(3, &[3])]
        );
    }

    #[test]
    fn parent_and_volume() {
        let q = c(3, &[5, 2]);
        assert_eq!(q.parent().unwrap(), c(2, &[2, 1]));
        assert_eq!(q.log2_volume(), -6);
        assert_eq!(q.children().count(), 4);
        for ch in q.children() {
            assert_eq!(ch.parent().unwrap(), q);
        }
        assert!(c(1, &[0]).contains(&c(3, &[3])));
        assert!(!c(1, &[0]).contains(&c(3, &[4])));
    }

    #[test]
    fn digits_follow_child_indices() {
        let q = c(0, &[0, 0]).child(2).child(1).child(3);
        assert_eq!((q.digit(1), q.digit(2), q.digit(3)), (2, 1, 3));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let q = c(4, &[3, 9]);
        assert_eq!(q.to_string(), "4:3,9");
        assert_eq!("4:3,9".parse::<CubeId>().unwrap(), q);
        assert!("2:4".parse::<CubeId>().is_err());
        assert!("x".parse::<CubeId>().is_err());
        assert!(CubeId::new(64, vec![0]).is_err());
    }

    #[test]
    fn roots() {
        let g = GridScheme::classical(2);
        assert_eq!(g.grid_roots(0).unwrap(), vec![CubeId::root(2)]);
        assert!(g.grid_roots(3).unwrap().is_empty());
        let gi = GridScheme::interior(1);
        assert_eq!(gi.grid_roots(2).unwrap(), vec![c(2, &[1]), c(2, &[2])]);
        assert_eq!(gi.grid_roots(3).unwrap(), vec![c(3, &[1]), c(3, &[6])]);
        assert!(gi.grid_roots(1).unwrap().is_empty());
    }

    #[test]
    fn interior_membership() {
        let gi = GridScheme::interior(2);
        assert!(!gi.is_member(&CubeId::root(2)));
        assert!(!gi.is_member(&c(1, &[0, 1])));
        assert!(gi.is_member(&c(2, &[1, 2])));
        assert!(!gi.is_member(&c(2, &[0, 2])));
        let q = c(3, &[1, 6]);
        assert!(gi.is_member(&q));
        assert!(q.children().all(|ch| gi.is_member(&ch)));
    }

    #[test]
    fn interior_roots_generate_all_members() {
        for d in 1..=2usize {
            let g = GridScheme::interior(d);
            let max = if d == 1 { 6 } else { 5 };
            let mut generated: HashSet<CubeId> = HashSet::new();
            for n in 2..=max {
                for r in g.grid_roots(n).unwrap() {
                    let mut stack = vec![r];
                    while let Some(q) = stack.pop() {
                        if q.level > max {
                            continue;
                        }
                        stack.extend(g.children_in_grid(&q));
                        generated.insert(q);
                    }
                }
            }
            let mut expected = HashSet::new();
            for n in 0..=max {
                for q in GridScheme::classical(d).level_members(n, 62).unwrap() {
                    if g.is_member(&q) {
                        expected.insert(q);
                    }
                }
            }
            assert_eq!(generated, expected, "d={d}");
        }
    }

    #[test]
    fn predicate_roots() {
        let g = GridScheme::predicate(1, |q: &CubeId| q.coords[0] % 2 == 0 || q.level == 0);
        let roots = g.grid_roots(2).unwrap();
        assert_eq!(roots, vec![c(2, &[2])]);
    }

    #[test]
    fn level_enumeration() {
        let g = GridScheme::classical(2);
        let v: Vec<_> = g.level_members(1, 26).unwrap().collect();
        assert_eq!(
            v,
            vec![c(1, &[0, 0]), c(1, &[0, 1]), c(1, &[1, 0]), c(1, &[1, 1])]
        );
        assert!(matches!(
            g.level_members(14, 26),
            Err(Error::EnumerationBound { .. })
        ));
        assert_eq!(
            GridScheme::interior(1)
                .level_members(3, 26)
                .unwrap()
                .count(),
            6
        );
    }

    #[test]
    fn validation() {
        let g = GridScheme::classical(1);
        let ok = Partition::new(vec![c(1, &[0]), c(1, &[1])], g.clone()).validate();
        assert!(ok.is_partition_of_unit_cube());
        let mixed = Partition::new(vec![c(1, &[0]), c(2, &[2]), c(2, &[3])], g.clone()).validate();
        assert!(mixed.is_partition_of_unit_cube());
        let bad = Partition::new(vec![c(1, &[0]), c(2, &[1])], g.clone()).validate();
        assert!(!bad.disjoint);
        assert_eq!(bad.overlap, Some((c(1, &[0]), c(2, &[1]))));
        let short = Partition::new(vec![c(1, &[0]), c(2, &[2])], g).validate();
        assert!(short.disjoint && !short.covers_unit_cube);
        assert_eq!(
            short.volume_deficit,
            Some(BigRational::new(1.into(), 4.into()))
        );
    }
}
