//! The carrier space: points, the finite pseudometric family that generates
//! the uniformity, and entourage membership.
//!
//! A single member of a family is allowed to be degenerate (for example a
//! projection onto one coordinate, which is zero for distinct points sharing
//! that coordinate). The family as a whole is what separates points.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperspace::FiniteSet;

/// A point of the space. Coordinates are always finite.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    /// Negative zero is normalized to zero so that lexicographic order and
    /// coordinate equality agree.
    pub fn new(mut coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyPoint);
        }
        if let Some((position, &value)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { position, value });
        }
        for v in coords.iter_mut().filter(|v| **v == 0.0) {
            *v = 0.0;
        }
        Ok(Point(coords))
    }

    /// One-dimensional shorthand.
    pub fn scalar(value: f64) -> Result<Self> {
        Point::new(vec![value])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Lexicographic order on coordinates. This is the tie-break order used
    /// for set storage and nearest-point selection.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (j, v) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(de)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

/// A pseudometric on raw coordinate slices of a fixed dimension.
///
/// Implementations must satisfy `d(x, x) = 0`, exact symmetry, and the
/// triangle inequality. Callers guarantee both slices have the family's
/// dimension.
pub trait Pseudometric: fmt::Debug + Send + Sync {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64;
}

/// Builtin pseudometric catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PseudometricSpec {
    /// `sum_j w_j |x_j - y_j|` over the listed coordinates.
    WeightedAbs {
        coords: Vec<usize>,
        #[serde(default)]
        weights: Vec<f64>,
    },
    /// `sqrt(sum_j (w_j (x_j - y_j))^2)` over the listed coordinates.
    WeightedEuclidean {
        coords: Vec<usize>,
        #[serde(default)]
        weights: Vec<f64>,
    },
}

impl PseudometricSpec {
    pub fn abs(coords: Vec<usize>, weights: Vec<f64>) -> Self {
        PseudometricSpec::WeightedAbs { coords, weights }
    }

    pub fn euclidean(coords: Vec<usize>, weights: Vec<f64>) -> Self {
        PseudometricSpec::WeightedEuclidean { coords, weights }
    }

    fn parts(&self) -> (&[usize], &[f64]) {
        match self {
            PseudometricSpec::WeightedAbs { coords, weights }
            | PseudometricSpec::WeightedEuclidean { coords, weights } => (coords, weights),
        }
    }

    fn parts_mut(&mut self) -> (&mut Vec<usize>, &mut Vec<f64>) {
        match self {
            PseudometricSpec::WeightedAbs { coords, weights }
            | PseudometricSpec::WeightedEuclidean { coords, weights } => (coords, weights),
        }
    }

    /// Fill in unit weights when omitted and check the spec against `dimension`.
    fn normalized(mut self, dimension: usize) -> Result<Self> {
        let (coords, weights) = self.parts_mut();
        if coords.is_empty() {
            return Err(Error::Config("pseudometric needs at least one coordinate".into()));
        }
        if let Some(&j) = coords.iter().find(|&&j| j >= dimension) {
            return Err(Error::Config(format!(
                "pseudometric coordinate {j} out of range for dimension {dimension}"
            )));
        }
        if weights.is_empty() {
            *weights = vec![1.0; coords.len()];
        }
        if weights.len() != coords.len() {
            return Err(Error::Config(format!(
                "pseudometric has {} coordinates but {} weights",
                coords.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::Config(format!("pseudometric weight {w} is not strictly positive")));
        }
        Ok(self)
    }

    fn scaled(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for w in out.parts_mut().1.iter_mut() {
            *w *= lambda;
        }
        out
    }
}

impl Pseudometric for PseudometricSpec {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let (coords, weights) = self.parts();
        match self {
            PseudometricSpec::WeightedAbs { .. } => coords
                .iter()
                .zip(weights)
                .map(|(&j, &w)| w * (x[j] - y[j]).abs())
                .sum(),
            PseudometricSpec::WeightedEuclidean { .. } => coords
                .iter()
                .zip(weights)
                .map(|(&j, &w)| {
                    let t = w * (x[j] - y[j]).abs();
                    t * t
                })
                .sum::<f64>()
                .sqrt(),
        }
    }
}

#[derive(Debug)]
struct Scaled {
    inner: Arc<dyn Pseudometric>,
    factor: f64,
}

impl Pseudometric for Scaled {
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.factor * self.inner.distance(x, y)
    }
}

#[derive(Clone, Debug)]
enum Member {
    Builtin(PseudometricSpec),
    Custom(Arc<dyn Pseudometric>),
}

impl Member {
    #[inline]
    fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Member::Builtin(spec) => spec.distance(x, y),
            Member::Custom(d) => d.distance(x, y),
        }
    }
}

/// A finite indexed family `{d_i}` of pseudometrics on a space of fixed
/// dimension.
#[derive(Clone, Debug)]
pub struct PseudometricFamily {
    dimension: usize,
    members: Vec<Member>,
}

impl PseudometricFamily {
    pub fn new(dimension: usize, specs: Vec<PseudometricSpec>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if specs.is_empty() {
            return Err(Error::Config("pseudometric family must be nonempty".into()));
        }
        let members = specs
            .into_iter()
            .map(|s| s.normalized(dimension).map(Member::Builtin))
            .collect::<Result<Vec<_>>>()?;
        Ok(PseudometricFamily { dimension, members })
    }

    /// Family from user-supplied pseudometrics.
    pub fn from_custom(dimension: usize, members: Vec<Arc<dyn Pseudometric>>) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if members.is_empty() {
            return Err(Error::Config("pseudometric family must be nonempty".into()));
        }
        Ok(PseudometricFamily {
            dimension,
            members: members.into_iter().map(Member::Custom).collect(),
        })
    }

    /// `|x - y|` on the real line.
    pub fn real_line() -> Self {
        Self::new(1, vec![PseudometricSpec::abs(vec![0], vec![1.0])]).expect("valid builtin")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Builtin specs, or `None` if the family holds custom members.
    pub fn specs(&self) -> Option<Vec<PseudometricSpec>> {
        self.members
            .iter()
            .map(|m| match m {
                Member::Builtin(s) => Some(s.clone()),
                Member::Custom(_) => None,
            })
            .collect()
    }

    /// The same family with every weight multiplied by `lambda > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Input(format!("scale factor {lambda} must be positive")));
        }
        let members = self
            .members
            .iter()
            .map(|m| match m {
                Member::Builtin(s) => Member::Builtin(s.scaled(lambda)),
                Member::Custom(d) => Member::Custom(Arc::new(Scaled {
                    inner: Arc::clone(d),
                    factor: lambda,
                })),
            })
            .collect();
        Ok(PseudometricFamily {
            dimension: self.dimension,
            members,
        })
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i < self.members.len() {
            Ok(())
        } else {
            Err(Error::InvalidIndex {
                index: i,
                len: self.members.len(),
            })
        }
    }

    pub fn check_dim(&self, found: usize) -> Result<()> {
        if found == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dimension,
                found,
            })
        }
    }

    /// `d_i(x, y)` without validation. Callers have checked index and dimensions.
    #[inline]
    pub(crate) fn d(&self, i: usize, x: &Point, y: &Point) -> f64 {
        self.members[i].distance(&x.0, &y.0)
    }

    /// `max_i d_i(x, y)`, the aggregate used for nearest-point selection.
    #[inline]
    pub(crate) fn aggregate(&self, x: &Point, y: &Point) -> f64 {
        self.members
            .iter()
            .map(|m| m.distance(&x.0, &y.0))
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, i: usize, x: &Point, y: &Point) -> Result<f64> {
        self.check_index(i)?;
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok(self.d(i, x, y))
    }

    /// All `d_i(x, y)` in index order.
    pub fn eval_all(&self, x: &Point, y: &Point) -> Result<Vec<f64>> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok((0..self.len()).map(|i| self.d(i, x, y)).collect())
    }

    /// Largest distance between two members of `set` over every index. Zero
    /// for singletons. Finite sets under a finite family are always bounded.
    pub fn augmented_diameter(&self, set: &FiniteSet) -> Result<f64> {
        self.check_dim(set.dim())?;
        let pts = set.points();
        let mut diameter = 0.0f64;
        for (k, x) in pts.iter().enumerate() {
            for y in &pts[k + 1..] {
                for i in 0..self.len() {
                    diameter = diameter.max(self.d(i, x, y));
                }
            }
        }
        Ok(diameter)
    }

    /// Membership of `(x, y)` in the basic entourage `{(x, y) : d_i(x, y) < eps}`.
    pub fn entourage_contains(&self, e: &Entourage, x: &Point, y: &Point) -> Result<bool> {
        Ok(self.eval(e.index, x, y)? < e.epsilon)
    }
}

/// A basic entourage `V(i, eps)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entourage {
    index: usize,
    epsilon: f64,
}

impl Entourage {
    pub fn new(family: &PseudometricFamily, index: usize, epsilon: f64) -> Result<Self> {
        family.check_index(index)?;
        if !(epsilon > 0.0) {
            return Err(Error::Input(format!("entourage radius {epsilon} must be positive")));
        }
        Ok(Entourage { index, epsilon })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}
