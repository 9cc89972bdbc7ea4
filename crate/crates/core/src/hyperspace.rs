//! Finite (hence compact, closed and bounded) subsets of the space, the
//! induced Hausdorff pseudometrics `H_i`, and nearest-point selection.
//!
//! All infima over a set are attained because sets are finite, so every
//! `inf` is a `min` and no tolerance is involved. The directed distances are
//! plain `O(|A| * |B|)` scans.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::{Point, PseudometricFamily};

/// A nonempty finite point set, stored sorted lexicographically with
/// duplicates removed.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct FiniteSet {
    points: Vec<Point>,
}

impl FiniteSet {
    /// Sorts the points and drops exact duplicates.
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        let dim = points.first().ok_or(Error::EmptySet)?.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        points.sort_by(Point::lex_cmp);
        points.dedup_by(|a, b| a.coords() == b.coords());
        Ok(FiniteSet { points })
    }

    /// Like [`FiniteSet::new`], but additionally drops any point whose
    /// aggregate distance `max_i d_i` to an already kept point is at most
    /// `tolerance`. Points are visited in lexicographic order.
    pub fn with_tolerance(points: Vec<Point>, family: &PseudometricFamily, tolerance: f64) -> Result<Self> {
        if !(tolerance >= 0.0 && tolerance.is_finite()) {
            return Err(Error::Input(format!("dedup tolerance {tolerance} must be nonnegative")));
        }
        let set = FiniteSet::new(points)?;
        if tolerance == 0.0 {
            return Ok(set);
        }
        family.check_dim(set.dim())?;
        let mut kept: Vec<Point> = Vec::with_capacity(set.len());
        for p in set.points {
            if kept.iter().all(|q| family.aggregate(&p, q) > tolerance) {
                kept.push(p);
            }
        }
        Ok(FiniteSet { points: kept })
    }

    pub fn singleton(point: Point) -> Self {
        FiniteSet { points: vec![point] }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Exact coordinate membership.
    pub fn contains(&self, x: &Point) -> bool {
        self.points
            .binary_search_by(|p| p.lex_cmp(x))
            .is_ok()
    }
}

impl<'a> IntoIterator for &'a FiniteSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

fn check(family: &PseudometricFamily, i: usize, dims: &[usize]) -> Result<()> {
    family.check_index(i)?;
    dims.iter().try_for_each(|&d| family.check_dim(d))
}

#[inline]
pub(crate) fn point_set_distance_unchecked(family: &PseudometricFamily, i: usize, x: &Point, set: &FiniteSet) -> f64 {
    let mut best = f64::INFINITY;
    for a in &set.points {
        let d = family.d(i, x, a);
        if d < best {
            best = d;
        }
    }
    best
}

#[inline]
fn directed_unchecked(family: &PseudometricFamily, i: usize, from: &FiniteSet, to: &FiniteSet) -> f64 {
    let mut worst = 0.0f64;
    for a in &from.points {
        let d = point_set_distance_unchecked(family, i, a, to);
        if d > worst {
            worst = d;
        }
    }
    worst
}

#[inline]
pub(crate) fn hausdorff_unchecked(family: &PseudometricFamily, i: usize, a: &FiniteSet, b: &FiniteSet) -> f64 {
    directed_unchecked(family, i, a, b).max(directed_unchecked(family, i, b, a))
}

/// `d_i(x, A) = min_{a in A} d_i(x, a)`.
pub fn point_set_distance(family: &PseudometricFamily, i: usize, x: &Point, set: &FiniteSet) -> Result<f64> {
    check(family, i, &[x.dim(), set.dim()])?;
    Ok(point_set_distance_unchecked(family, i, x, set))
}

/// One-sided excess `sup_{a in A} d_i(a, B)`.
pub fn directed_hausdorff(family: &PseudometricFamily, i: usize, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    check(family, i, &[a.dim(), b.dim()])?;
    Ok(directed_unchecked(family, i, a, b))
}

/// Hausdorff pseudometric `H_i(A, B)`, the larger of the two directed excesses.
pub fn hausdorff(family: &PseudometricFamily, i: usize, a: &FiniteSet, b: &FiniteSet) -> Result<f64> {
    check(family, i, &[a.dim(), b.dim()])?;
    Ok(hausdorff_unchecked(family, i, a, b))
}

/// Membership in the hyperspace entourage `{(A, B) : H_i(A, B) < eps}`.
pub fn hyper_entourage_contains(
    family: &PseudometricFamily,
    i: usize,
    epsilon: f64,
    a: &FiniteSet,
    b: &FiniteSet,
) -> Result<bool> {
    if !(epsilon > 0.0) {
        return Err(Error::Input(format!("entourage radius {epsilon} must be positive")));
    }
    Ok(hausdorff(family, i, a, b)? < epsilon)
}

/// Selected member of a set together with its distance to the query under
/// every index.
#[derive(Clone, Debug, PartialEq)]
pub struct Nearest {
    pub point: Point,
    pub distances: Vec<f64>,
}

/// Member of `set` minimizing `max_i d_i(x, a)`. Ties go to the
/// lexicographically smallest candidate.
pub fn nearest_point(family: &PseudometricFamily, x: &Point, set: &FiniteSet) -> Result<Nearest> {
    family.check_dim(x.dim())?;
    family.check_dim(set.dim())?;
    Ok(nearest_unchecked(family, x, set))
}

pub(crate) fn nearest_unchecked(family: &PseudometricFamily, x: &Point, set: &FiniteSet) -> Nearest {
    let n = family.len();
    let mut best_idx = 0;
    let mut best_agg = f64::INFINITY;
    let mut best = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    for (k, a) in set.points.iter().enumerate() {
        let mut agg = 0.0f64;
        for (i, slot) in scratch.iter_mut().enumerate() {
            *slot = family.d(i, x, a);
            agg = agg.max(*slot);
        }
        // points are sorted, so keeping the first strict minimum is the
        // lexicographic tie-break
        if agg < best_agg {
            best_agg = agg;
            best_idx = k;
            std::mem::swap(&mut best, &mut scratch);
        }
    }
    Nearest {
        point: set.points[best_idx].clone(),
        distances: best,
    }
}
