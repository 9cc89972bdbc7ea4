//! Set-valued maps `F : X -> 2^X` with finite images, the singleton lift of
//! point maps, and the builtin catalog used by the CLI and demos.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperspace::FiniteSet;
use crate::space::Point;

type SetEval = dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync;
type PointEval = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// A total set-valued map with nonempty finite images.
#[derive(Clone)]
pub struct Multifunction {
    dimension: usize,
    descriptor: String,
    eval: Arc<SetEval>,
}

impl fmt::Debug for Multifunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multifunction")
            .field("dimension", &self.dimension)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl Multifunction {
    /// Wrap a closure producing the image points of `x`. The closure must be
    /// deterministic and return at least one point of the same dimension.
    pub fn new<F>(dimension: usize, descriptor: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static,
    {
        Multifunction {
            dimension,
            descriptor: descriptor.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    /// `F(x)` as a normalized finite set.
    pub fn evaluate(&self, x: &Point) -> Result<FiniteSet> {
        if x.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.dim(),
            });
        }
        let image = (self.eval)(x.coords())
            .into_iter()
            .map(|c| {
                if c.len() != self.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: self.dimension,
                        found: c.len(),
                    });
                }
                Point::new(c)
            })
            .collect::<Result<Vec<_>>>()?;
        FiniteSet::new(image)
    }
}

/// A single-valued self map `T : X -> X`.
#[derive(Clone)]
pub struct SelfMap {
    dimension: usize,
    descriptor: String,
    eval: Arc<PointEval>,
}

impl fmt::Debug for SelfMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelfMap")
            .field("dimension", &self.dimension)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

impl SelfMap {
    pub fn new<F>(dimension: usize, descriptor: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        SelfMap {
            dimension,
            descriptor: descriptor.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.dim(),
            });
        }
        let y = (self.eval)(x.coords());
        if y.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: y.len(),
            });
        }
        Point::new(y)
    }
}

/// The set-valued map `x -> {T x}`.
pub fn lift_single_valued(t: &SelfMap) -> Multifunction {
    let eval = Arc::clone(&t.eval);
    Multifunction {
        dimension: t.dimension,
        descriptor: t.descriptor.clone(),
        eval: Arc::new(move |x| vec![eval(x)]),
    }
}

/// One affine branch `x -> M x + v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub matrix: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
}

impl AffineMap {
    /// `scale * Id` with zero offset.
    pub fn scaled_identity(dimension: usize, scale: f64) -> Self {
        let matrix = (0..dimension)
            .map(|r| (0..dimension).map(|c| if r == c { scale } else { 0.0 }).collect())
            .collect();
        AffineMap {
            matrix,
            offset: vec![0.0; dimension],
        }
    }

    fn validate(&self, dimension: usize) -> Result<()> {
        if self.matrix.len() != dimension || self.matrix.iter().any(|row| row.len() != dimension) {
            return Err(Error::Config(format!(
                "affine matrix must be {dimension}x{dimension}"
            )));
        }
        if self.offset.len() != dimension {
            return Err(Error::Config(format!(
                "affine offset has length {}, expected {dimension}",
                self.offset.len()
            )));
        }
        let all_finite = self.matrix.iter().flatten().chain(&self.offset).all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("affine map entries must be finite".into()));
        }
        Ok(())
    }

    /// `matrix * x + offset`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, v)| row.iter().zip(x).map(|(m, xi)| m * xi).sum::<f64>() + v)
            .collect()
    }
}

impl fmt::Display for AffineMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "M={:?}, v={:?}", self.matrix, self.offset)
    }
}

/// Builtin catalog of maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinSpec {
    /// `x -> {M x + v}`
    AffineContraction {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
    /// `x -> {M_j x + v_j : j}`
    MultiAffine { branches: Vec<AffineMap> },
    /// `x -> {lambda_j x : j}`
    ScaledSelector { ratios: Vec<f64> },
    /// `x -> {x}`
    Identity,
    /// `x -> {mu x}` with `mu > 1`
    Expansion { factor: f64 },
}

impl BuiltinSpec {
    pub fn descriptor(&self) -> String {
        fn list(v: &[f64]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
        }
        match self {
            BuiltinSpec::AffineContraction { matrix, offset } => {
                format!("affine_contraction(M={matrix:?}, v={offset:?})")
            }
            BuiltinSpec::MultiAffine { branches } => {
                let parts: Vec<String> = branches.iter().map(|b| format!("({b})")).collect();
                format!("multi_affine({})", parts.join(", "))
            }
            BuiltinSpec::ScaledSelector { ratios } => format!("scaled_selector({})", list(ratios)),
            BuiltinSpec::Identity => "identity".to_string(),
            BuiltinSpec::Expansion { factor } => format!("expansion({factor})"),
        }
    }

    fn validate(&self, dimension: usize) -> Result<()> {
        if dimension == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        match self {
            BuiltinSpec::AffineContraction { matrix, offset } => AffineMap {
                matrix: matrix.clone(),
                offset: offset.clone(),
            }
            .validate(dimension),
            BuiltinSpec::MultiAffine { branches } => {
                if branches.is_empty() {
                    return Err(Error::Config("multi_affine needs at least one branch".into()));
                }
                branches.iter().try_for_each(|b| b.validate(dimension))
            }
            BuiltinSpec::ScaledSelector { ratios } => {
                if ratios.is_empty() || ratios.iter().any(|r| !r.is_finite()) {
                    return Err(Error::Config("scaled_selector needs finite ratios".into()));
                }
                Ok(())
            }
            BuiltinSpec::Identity => Ok(()),
            BuiltinSpec::Expansion { factor } => {
                if !(factor.is_finite() && *factor > 1.0) {
                    return Err(Error::Config(format!("expansion factor {factor} must exceed 1")));
                }
                Ok(())
            }
        }
    }

    /// The underlying point map, for catalog entries that are single-valued.
    pub fn self_map(&self, dimension: usize) -> Result<Option<SelfMap>> {
        self.validate(dimension)?;
        let name = self.descriptor();
        let map = match self.clone() {
            BuiltinSpec::AffineContraction { matrix, offset } => {
                let a = AffineMap { matrix, offset };
                SelfMap::new(dimension, name, move |x| a.apply(x))
            }
            BuiltinSpec::Identity => SelfMap::new(dimension, name, |x| x.to_vec()),
            BuiltinSpec::Expansion { factor } => {
                SelfMap::new(dimension, name, move |x| x.iter().map(|v| factor * v).collect())
            }
            BuiltinSpec::ScaledSelector { ratios } if ratios.len() == 1 => {
                let r = ratios[0];
                SelfMap::new(dimension, name, move |x| x.iter().map(|v| r * v).collect())
            }
            BuiltinSpec::MultiAffine { mut branches } if branches.len() == 1 => {
                let a = branches.remove(0);
                SelfMap::new(dimension, name, move |x| a.apply(x))
            }
            _ => return Ok(None),
        };
        Ok(Some(map))
    }
}

/// Instantiate a catalog map on a space of the given dimension.
pub fn make_builtin(spec: &BuiltinSpec, dimension: usize) -> Result<Multifunction> {
    if let Some(t) = spec.self_map(dimension)? {
        return Ok(lift_single_valued(&t));
    }
    let name = spec.descriptor();
    let f = match spec.clone() {
        BuiltinSpec::MultiAffine { branches } => {
            Multifunction::new(dimension, name, move |x| branches.iter().map(|b| b.apply(x)).collect())
        }
        BuiltinSpec::ScaledSelector { ratios } => Multifunction::new(dimension, name, move |x| {
            ratios
                .iter()
                .map(|r| x.iter().map(|v| r * v).collect())
                .collect()
        }),
        _ => unreachable!("single-valued specs handled above"),
    };
    Ok(f)
}
