//! Contraction conditions for set-valued maps and a deterministic sampling
//! falsifier.
//!
//! For an index `i`, exponent `r >= 1` and coefficients `(a_i, b_i, c_i)` the
//! condition at a pair `(x, y)` reads
//!
//! ```text
//! min{ H_i(Fx,Fy)^r, d_i(x,Fx) d_i(y,Fy)^(r-1), d_i(y,Fy)^r }
//!     + a_i min{ d_i(x,Fy), d_i(y,Fx) }
//!   <= [ b_i d_i(x,Fx) + c_i d_i(x,y) ] d_i(y,Fy)^(r-1)
//! ```
//!
//! with `0^0 = 1`. When `r = 1` the middle term of the first minimum is
//! `d_i(x,Fx)`. The single-valued variant with a subtracted second minimum is
//! the case `a_i = -1`, see [`corollary_sides`].
//!
//! A scan that finds no violation is a sample result, not a proof.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::hyperspace::{hausdorff_unchecked, point_set_distance_unchecked, FiniteSet};
use crate::multifunction::{Multifunction, SelfMap};
use crate::space::{Point, PseudometricFamily};

/// Relative slack used when deciding whether `lhs <= rhs`.
pub const HOLD_TOLERANCE: f64 = 1e-12;

/// Per-index coefficients `(a_i, b_i, c_i)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Coefficients {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Coefficients { a, b, c }
    }

    /// `k_i = b_i + c_i`, the geometric decay rate of orbit steps.
    pub fn rate(&self) -> f64 {
        self.b + self.c
    }
}

/// Exponent `r` and one coefficient triple per family index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionParams {
    r: u32,
    coefficients: Vec<Coefficients>,
}

impl ContractionParams {
    pub fn new(r: u32, coefficients: Vec<Coefficients>) -> Result<Self> {
        if r < 1 {
            return Err(Error::Config("exponent r must be at least 1".into()));
        }
        if coefficients.is_empty() {
            return Err(Error::Config("need at least one coefficient triple".into()));
        }
        for (i, k) in coefficients.iter().enumerate() {
            if !(k.a.is_finite() && k.b.is_finite() && k.c.is_finite()) {
                return Err(Error::Config(format!("coefficients for index {i} must be finite")));
            }
            let rate = k.rate();
            if !(rate > 0.0 && rate < 1.0) {
                return Err(Error::Config(format!(
                    "index {i}: b + c = {rate} must lie strictly between 0 and 1"
                )));
            }
        }
        Ok(ContractionParams { r, coefficients })
    }

    /// The same triple for each of `count` indices.
    pub fn uniform(r: u32, coefficients: Coefficients, count: usize) -> Result<Self> {
        Self::new(r, vec![coefficients; count])
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn coefficients(&self) -> &[Coefficients] {
        &self.coefficients
    }

    /// `b_i + c_i` for every index.
    pub fn rates(&self) -> Vec<f64> {
        self.coefficients.iter().map(Coefficients::rate).collect()
    }

    pub fn check_family(&self, family: &PseudometricFamily) -> Result<()> {
        if self.coefficients.len() != family.len() {
            return Err(Error::Config(format!(
                "{} coefficient triples for a family of {} pseudometrics",
                self.coefficients.len(),
                family.len()
            )));
        }
        Ok(())
    }
}

/// Both sides of the condition at one `(i, x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sides {
    pub lhs: f64,
    pub rhs: f64,
}

impl Sides {
    /// `lhs <= rhs` up to a relative slack of [`HOLD_TOLERANCE`].
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + HOLD_TOLERANCE * self.rhs.abs().max(1.0)
    }
}

fn check_inputs(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    x: &Point,
    y: &Point,
) -> Result<()> {
    params.check_family(family)?;
    family.check_dim(f.dimension())?;
    family.check_dim(x.dim())?;
    family.check_dim(y.dim())
}

#[allow(clippy::too_many_arguments)]
fn sides_unchecked(
    family: &PseudometricFamily,
    params: &ContractionParams,
    i: usize,
    x: &Point,
    y: &Point,
    fx: &FiniteSet,
    fy: &FiniteSet,
) -> Sides {
    let Coefficients { a, b, c } = params.coefficients[i];
    let r = params.r as i32;
    let d_x_fx = point_set_distance_unchecked(family, i, x, fx);
    let d_y_fy = point_set_distance_unchecked(family, i, y, fy);
    let d_x_fy = point_set_distance_unchecked(family, i, x, fy);
    let d_y_fx = point_set_distance_unchecked(family, i, y, fx);
    let d_xy = family.d(i, x, y);
    let h = hausdorff_unchecked(family, i, fx, fy);

    // powi(0.0, 0) == 1.0, which is the convention wanted for r = 1
    let residual_factor = d_y_fy.powi(r - 1);
    let first = h.powi(r).min(d_x_fx * residual_factor).min(d_y_fy.powi(r));
    let lhs = first + a * d_x_fy.min(d_y_fx);
    let rhs = (b * d_x_fx + c * d_xy) * residual_factor;
    Sides { lhs, rhs }
}

/// Both sides of the condition for index `i` at `(x, y)`.
pub fn condition_sides(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    i: usize,
    x: &Point,
    y: &Point,
) -> Result<Sides> {
    check_inputs(f, params, family, x, y)?;
    family.check_index(i)?;
    let fx = f.evaluate(x)?;
    let fy = f.evaluate(y)?;
    Ok(sides_unchecked(family, params, i, x, y, &fx, &fy))
}

/// Sides for every index, evaluating `F` once per point.
pub fn condition_sides_all(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    x: &Point,
    y: &Point,
) -> Result<Vec<Sides>> {
    check_inputs(f, params, family, x, y)?;
    let fx = f.evaluate(x)?;
    let fy = f.evaluate(y)?;
    Ok((0..family.len())
        .map(|i| sides_unchecked(family, params, i, x, y, &fx, &fy))
        .collect())
}

/// Whether the condition holds at `(x, y)` for every index.
pub fn holds_at(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    x: &Point,
    y: &Point,
) -> Result<bool> {
    Ok(condition_sides_all(f, params, family, x, y)?.iter().all(Sides::holds))
}

/// Single-valued condition with the second minimum subtracted:
///
/// ```text
/// min{ d_i(Tx,Ty), d_i(x,Tx), d_i(y,Ty) } - min{ d_i(x,Ty), d_i(y,Tx) }
///   <= b_i d_i(x,Tx) + c_i d_i(x,y)
/// ```
#[allow(clippy::too_many_arguments)]
pub fn corollary_sides(
    t: &SelfMap,
    b: f64,
    c: f64,
    family: &PseudometricFamily,
    i: usize,
    x: &Point,
    y: &Point,
) -> Result<Sides> {
    if !(b + c > 0.0 && b + c < 1.0) {
        return Err(Error::Input(format!("b + c = {} must lie strictly between 0 and 1", b + c)));
    }
    family.check_index(i)?;
    family.check_dim(t.dimension())?;
    family.check_dim(x.dim())?;
    family.check_dim(y.dim())?;
    let tx = t.apply(x)?;
    let ty = t.apply(y)?;
    let d = |p: &Point, q: &Point| family.d(i, p, q);
    let lhs = d(&tx, &ty).min(d(x, &tx)).min(d(y, &ty)) - d(x, &ty).min(d(y, &tx));
    let rhs = b * d(x, &tx) + c * d(x, y);
    Ok(Sides { lhs, rhs })
}

/// True iff `a_i > c_i > 0` for every index, the regime in which a
/// single-valued map satisfying the condition has at most one fixed point.
pub fn uniqueness_applicable(params: &ContractionParams) -> bool {
    params.coefficients.iter().all(|k| k.a > k.c && k.c > 0.0)
}

/// Axis-aligned box with strictly positive extent on every axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Boxes up to this dimension contribute all of their corners to the probe set.
const MAX_CORNER_DIM: usize = 4;

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::Input(format!(
                "region bounds must be nonempty and of equal length ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Input(format!(
                    "region is degenerate on axis {j}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Region { lower, upper })
    }

    /// `[lo, hi]^dimension`.
    pub fn cube(dimension: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dimension], vec![hi; dimension])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn center(&self) -> Point {
        let c = self.lower.iter().zip(&self.upper).map(|(l, u)| 0.5 * (l + u)).collect();
        Point::new(c).expect("finite bounds")
    }

    /// Corners in binary counting order (bit `j` set selects the upper bound on
    /// axis `j`). Above a small dimension only the all-lower and all-upper
    /// corners are returned.
    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        let masks: Vec<u64> = if d <= MAX_CORNER_DIM {
            (0..1u64 << d).collect()
        } else {
            vec![0, u64::MAX]
        };
        masks
            .into_iter()
            .map(|mask| {
                let c = (0..d)
                    .map(|j| {
                        if (mask >> j.min(63)) & 1 == 1 {
                            self.upper[j]
                        } else {
                            self.lower[j]
                        }
                    })
                    .collect();
                Point::new(c).expect("finite bounds")
            })
            .collect()
    }

    /// Map a point of the unit cube into the region.
    fn place(&self, unit: &[f64]) -> Point {
        let c = unit
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(u, (l, h))| l + u * (h - l))
            .collect();
        Point::new(c).expect("finite bounds")
    }
}

/// Ordered pairs of distinct probe points (corners and center), always checked
/// before any sampled pair.
pub fn probe_pairs(region: &Region) -> Vec<(Point, Point)> {
    let mut probes = region.corners();
    probes.push(region.center());
    let mut pairs = Vec::with_capacity(probes.len() * (probes.len() - 1));
    for (s, x) in probes.iter().enumerate() {
        for (t, y) in probes.iter().enumerate() {
            if s != t {
                pairs.push((x.clone(), y.clone()));
            }
        }
    }
    pairs
}

/// Additive-recurrence low-discrepancy sequence in `[0, 1)^dim` with a
/// seeded random shift.
#[derive(Clone, Debug)]
pub struct QuasiRandom {
    alpha: Vec<f64>,
    shift: Vec<f64>,
}

impl QuasiRandom {
    pub fn new(dim: usize, seed: u64) -> Self {
        // phi is the unique positive root of x^(dim+1) = x + 1
        let mut phi = 2.0f64;
        for _ in 0..64 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alpha = (1..=dim).map(|j| (1.0 / phi).powi(j as i32).fract()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = (0..dim).map(|_| rng.random::<f64>()).collect();
        QuasiRandom { alpha, shift }
    }

    pub fn point(&self, n: usize) -> Vec<f64> {
        let step = (n + 1) as f64;
        self.alpha
            .iter()
            .zip(&self.shift)
            .map(|(a, s)| (s + step * a).fract())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    /// Position in the checked sequence; probe pairs come first.
    pub sample: usize,
    pub x: Point,
    pub y: Point,
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub map: String,
    pub r: u32,
    pub seed: u64,
    pub budget: usize,
    pub region: Region,
    pub probe_pairs: usize,
    pub pairs_checked: usize,
    pub holds_on_sample: bool,
    pub violations: Vec<Violation>,
}

impl ConditionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Check the condition on the probe pairs of `region` plus `budget`
/// quasi-random pairs drawn from `region x region`.
pub fn scan(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    region: &Region,
    budget: usize,
    seed: u64,
) -> Result<ConditionReport> {
    scan_with(f, params, family, region, budget, seed, Execution::default())
}

/// [`scan`] with an explicit execution strategy. Reports are identical under
/// either strategy.
pub fn scan_with(
    f: &Multifunction,
    params: &ContractionParams,
    family: &PseudometricFamily,
    region: &Region,
    budget: usize,
    seed: u64,
    exec: Execution,
) -> Result<ConditionReport> {
    if budget == 0 {
        return Err(Error::Input("scan budget must be at least 1".into()));
    }
    params.check_family(family)?;
    family.check_dim(f.dimension())?;
    family.check_dim(region.dim())?;

    let d = region.dim();
    let probes = probe_pairs(region);
    let sequence = QuasiRandom::new(2 * d, seed);
    let n_probe = probes.len();

    let check_pair = |sample: usize| -> Result<Vec<Violation>> {
        let (x, y) = if sample < n_probe {
            probes[sample].clone()
        } else {
            let u = sequence.point(sample - n_probe);
            (region.place(&u[..d]), region.place(&u[d..]))
        };
        let fx = f.evaluate(&x)?;
        let fy = f.evaluate(&y)?;
        let mut found = Vec::new();
        for i in 0..family.len() {
            let s = sides_unchecked(family, params, i, &x, &y, &fx, &fy);
            if !s.holds() {
                found.push(Violation {
                    sample,
                    x: x.clone(),
                    y: y.clone(),
                    index: i,
                    lhs: s.lhs,
                    rhs: s.rhs,
                });
            }
        }
        Ok(found)
    };

    let results = map_indexed(exec, n_probe + budget, check_pair);
    let mut violations = Vec::new();
    for r in results {
        violations.extend(r?);
    }
    Ok(ConditionReport {
        map: f.descriptor().to_string(),
        r: params.r,
        seed,
        budget,
        region: region.clone(),
        probe_pairs: n_probe,
        pairs_checked: n_probe + budget,
        holds_on_sample: violations.is_empty(),
        violations,
    })
}
