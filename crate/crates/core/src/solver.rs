//! Orbit construction by nearest-point selection and the checks that certify
//! it converges.
//!
//! Starting from `x_0`, each step picks `x_{n+1}` in `F(x_n)` closest to
//! `x_n`. Under the contraction condition the step lengths decay like
//! `k_i^n d_i(x_0, x_1)` with `k_i = b_i + c_i`, and every tail pair obeys
//! `d_i(x_n, x_m) <= k_i^n / (1 - k_i) * d_i(x_0, x_1)`. Both are checked on
//! recorded traces by [`verify_geometric_decay`] and [`verify_tail_bound`].
//! The tail bound is the finite stand-in for the orbit being Cauchy.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::checker::{uniqueness_applicable, ContractionParams};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::hyperspace::{nearest_unchecked, point_set_distance_unchecked, FiniteSet};
use crate::multifunction::Multifunction;
use crate::space::{Point, PseudometricFamily};

/// Absolute slack for the decay and tail checks.
pub const VERIFY_SLACK: f64 = 1e-9;

/// Multiplier for the default divergence guard, `1e12 * (1 + |x_0|)`.
const DEFAULT_GUARD_SCALE: f64 = 1e12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Stop once `max_i d_i(x, Fx)` is at most this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Abort when any step distance exceeds this. `None` picks
    /// `1e12 * (1 + max_i d_i(x_0, 0))`.
    #[serde(default)]
    pub divergence_guard: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-8,
            max_iterations: 10_000,
            divergence_guard: None,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerance(tolerance: f64) -> Self {
        SolveOptions {
            tolerance,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Input(format!("tolerance {} must be positive", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Input("max_iterations must be at least 1".into()));
        }
        if let Some(g) = self.divergence_guard {
            if !(g > 0.0) {
                return Err(Error::Input(format!("divergence guard {g} must be positive")));
            }
        }
        Ok(())
    }

    fn guard_for(&self, family: &PseudometricFamily, x0: &Point) -> f64 {
        self.divergence_guard.unwrap_or_else(|| {
            let origin = Point::new(vec![0.0; x0.dim()]).expect("zero is finite");
            DEFAULT_GUARD_SCALE * (1.0 + family.aggregate(x0, &origin))
        })
    }
}

/// Recorded orbit `x_0, ..., x_n` with per-index step distances
/// `d_i(x_k, x_{k+1})` and residuals `d_i(x_k, F x_k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitTrace {
    points: Vec<Point>,
    step_distances: Vec<Vec<f64>>,
    residuals: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    FixedPointFound,
    MaxIterationsReached,
    Diverged,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub final_point: Point,
    pub final_residual: Vec<f64>,
    pub iterations_used: usize,
    /// Per-index geometric fit of the step distances; `None` with fewer than
    /// two positive steps.
    pub rate_estimates: Vec<Option<f64>>,
}

impl OrbitTrace {
    /// Assemble a trace, checking the shape invariants.
    pub fn from_parts(points: Vec<Point>, step_distances: Vec<Vec<f64>>, residuals: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TraceTooShort { needed: 1, have: 0 });
        }
        let dim = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.dim(),
            });
        }
        if step_distances.len() + 1 != points.len() || residuals.len() != points.len() {
            return Err(Error::Input(format!(
                "trace shape mismatch: {} points, {} steps, {} residual rows",
                points.len(),
                step_distances.len(),
                residuals.len()
            )));
        }
        let width = residuals[0].len();
        if width == 0 || step_distances.iter().chain(&residuals).any(|r| r.len() != width) {
            return Err(Error::Input("ragged per-index rows in trace".into()));
        }
        Ok(OrbitTrace {
            points,
            step_distances,
            residuals,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn step_distances(&self) -> &[Vec<f64>] {
        &self.step_distances
    }

    pub fn residuals(&self) -> &[Vec<f64>] {
        &self.residuals
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn index_count(&self) -> usize {
        self.residuals[0].len()
    }

    /// Least-squares fit of `log d_i(x_n, x_{n+1})` against `n`, returned as
    /// the per-step ratio.
    pub fn rate_estimates(&self) -> Vec<Option<f64>> {
        (0..self.index_count())
            .map(|i| {
                let samples: Vec<(f64, f64)> = self
                    .step_distances
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s[i] > 0.0 && s[i].is_finite())
                    .map(|(n, s)| (n as f64, s[i].ln()))
                    .collect();
                if samples.len() < 2 {
                    return None;
                }
                let m = samples.len() as f64;
                let mean_n = samples.iter().map(|s| s.0).sum::<f64>() / m;
                let mean_l = samples.iter().map(|s| s.1).sum::<f64>() / m;
                let cov: f64 = samples.iter().map(|(n, l)| (n - mean_n) * (l - mean_l)).sum();
                let var: f64 = samples.iter().map(|(n, _)| (n - mean_n).powi(2)).sum();
                Some((cov / var).exp())
            })
            .collect()
    }

    /// Write as CSV: `n, x_0.., step_d_0.., res_d_0..`. Floats use 17
    /// significant digits; the step fields of the last row are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Input(format!("csv write failed: {e}"));
        let mut header = vec!["n".to_string()];
        header.extend((0..self.dim()).map(|j| format!("x_{j}")));
        header.extend((0..self.index_count()).map(|i| format!("step_d_{i}")));
        header.extend((0..self.index_count()).map(|i| format!("res_d_{i}")));
        w.write_record(&header).map_err(io)?;
        for (n, p) in self.points.iter().enumerate() {
            let mut row = vec![n.to_string()];
            row.extend(p.coords().iter().map(|v| fmt_float(*v)));
            match self.step_distances.get(n) {
                Some(s) => row.extend(s.iter().map(|v| fmt_float(*v))),
                None => row.extend(std::iter::repeat_n(String::new(), self.index_count())),
            }
            row.extend(self.residuals[n].iter().map(|v| fmt_float(*v)));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Input(format!("csv write failed: {e}")))?;
        Ok(())
    }

    /// Parse the format produced by [`OrbitTrace::write_csv`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let bad = |msg: String| Error::Input(format!("trace csv: {msg}"));
        let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let count = |prefix: &str| header.iter().filter(|h| h.starts_with(prefix)).count();
        let (dim, width) = (count("x_"), count("step_d_"));
        if header.get(0) != Some("n") || dim == 0 || width == 0 || count("res_d_") != width {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
        let (mut points, mut steps, mut residuals) = (Vec::new(), Vec::new(), Vec::new());
        for (row_no, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != 1 + dim + 2 * width {
                return Err(bad(format!("row {row_no} has {} fields", rec.len())));
            }
            let n: usize = rec[0].parse().map_err(|e| bad(format!("row index: {e}")))?;
            if n != row_no {
                return Err(bad(format!("row {row_no} labelled {n}")));
            }
            let coords = (1..=dim).map(|j| parse(&rec[j])).collect::<Result<Vec<_>>>()?;
            points.push(Point::new(coords)?);
            let step_fields = &(1 + dim..1 + dim + width).map(|j| &rec[j]).collect::<Vec<_>>();
            if step_fields.iter().all(|s| s.is_empty()) {
                // only the final row may omit steps
            } else {
                steps.push(step_fields.iter().map(|s| parse(s)).collect::<Result<Vec<_>>>()?);
            }
            let res = (1 + dim + width..1 + dim + 2 * width)
                .map(|j| parse(&rec[j]))
                .collect::<Result<Vec<_>>>()?;
            residuals.push(res);
        }
        OrbitTrace::from_parts(points, steps, residuals)
    }

    /// Recheck the trace against `F`: orbit membership, recorded step
    /// distances and recorded residuals, all exactly.
    pub fn verify_orbit(&self, f: &Multifunction, family: &PseudometricFamily) -> Result<OrbitCheck> {
        family.check_dim(self.dim())?;
        family.check_dim(f.dimension())?;
        if family.len() != self.index_count() {
            return Err(Error::Input(format!(
                "trace has {} indices, family has {}",
                self.index_count(),
                family.len()
            )));
        }
        let mut check = OrbitCheck {
            membership: true,
            steps_consistent: true,
            residuals_consistent: true,
            first_failure: None,
        };
        let fail = |check: &mut OrbitCheck, msg: String| {
            if check.first_failure.is_none() {
                check.first_failure = Some(msg);
            }
        };
        for (k, x) in self.points.iter().enumerate() {
            let image = f.evaluate(x)?;
            for i in 0..family.len() {
                if point_set_distance_unchecked(family, i, x, &image) != self.residuals[k][i] {
                    check.residuals_consistent = false;
                    fail(&mut check, format!("residual mismatch at n={k}, index {i}"));
                }
            }
            if let Some(next) = self.points.get(k + 1) {
                if !image.contains(next) {
                    check.membership = false;
                    fail(&mut check, format!("x_{} is not in F(x_{k})", k + 1));
                }
                for i in 0..family.len() {
                    if family.d(i, x, next) != self.step_distances[k][i] {
                        check.steps_consistent = false;
                        fail(&mut check, format!("step distance mismatch at n={k}, index {i}"));
                    }
                }
            }
        }
        Ok(check)
    }
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitCheck {
    pub membership: bool,
    pub steps_consistent: bool,
    pub residuals_consistent: bool,
    pub first_failure: Option<String>,
}

impl OrbitCheck {
    pub fn passed(&self) -> bool {
        self.membership && self.steps_consistent && self.residuals_consistent
    }
}

fn check_map(f: &Multifunction, family: &PseudometricFamily, x: &Point) -> Result<()> {
    family.check_dim(f.dimension())?;
    family.check_dim(x.dim())
}

fn residual_of(family: &PseudometricFamily, x: &Point, image: &FiniteSet) -> Vec<f64> {
    (0..family.len())
        .map(|i| point_set_distance_unchecked(family, i, x, image))
        .collect()
}

/// One nearest-point step: the member of `F(x)` closest to `x`.
pub fn step(f: &Multifunction, family: &PseudometricFamily, x: &Point) -> Result<Point> {
    check_map(f, family, x)?;
    let image = f.evaluate(x)?;
    Ok(nearest_unchecked(family, x, &image).point)
}

/// `d_i(x, F x)` for every index.
pub fn residual(f: &Multifunction, family: &PseudometricFamily, x: &Point) -> Result<Vec<f64>> {
    check_map(f, family, x)?;
    let image = f.evaluate(x)?;
    Ok(residual_of(family, x, &image))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Iterate nearest-point steps from `x0` until the residual drops below the
/// tolerance, a step exceeds the divergence guard, or the iteration budget
/// runs out.
pub fn solve(
    f: &Multifunction,
    family: &PseudometricFamily,
    x0: &Point,
    opts: &SolveOptions,
) -> Result<(OrbitTrace, SolveReport)> {
    opts.validate()?;
    check_map(f, family, x0)?;
    let guard = opts.guard_for(family, x0);

    let mut points = vec![x0.clone()];
    let mut steps: Vec<Vec<f64>> = Vec::new();
    let mut residuals: Vec<Vec<f64>> = Vec::new();
    let mut x = x0.clone();
    let mut image = f.evaluate(&x)?;
    let mut diverged = false;

    let status = loop {
        residuals.push(residual_of(family, &x, &image));
        if diverged {
            break SolveStatus::Diverged;
        }
        if max_of(residuals.last().unwrap()) <= opts.tolerance {
            break SolveStatus::FixedPointFound;
        }
        if steps.len() >= opts.max_iterations {
            break SolveStatus::MaxIterationsReached;
        }
        let next = nearest_unchecked(family, &x, &image);
        diverged = next.distances.iter().any(|d| *d > guard);
        x = next.point;
        points.push(x.clone());
        steps.push(next.distances);
        image = f.evaluate(&x)?;
    };

    let trace = OrbitTrace {
        points,
        step_distances: steps,
        residuals,
    };
    let report = SolveReport {
        status,
        final_point: x,
        final_residual: trace.residuals.last().unwrap().clone(),
        iterations_used: trace.step_distances.len(),
        rate_estimates: trace.rate_estimates(),
    };
    Ok((trace, report))
}

/// First failing bound found by a trace check. For decay checks `m = n + 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub index: usize,
    pub n: usize,
    pub m: usize,
    pub observed: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub checked: usize,
    pub first_violation: Option<BoundViolation>,
}

fn check_rates(trace: &OrbitTrace, k: &[f64]) -> Result<()> {
    if trace.len() < 2 {
        return Err(Error::TraceTooShort {
            needed: 2,
            have: trace.len(),
        });
    }
    if k.len() != trace.index_count() {
        return Err(Error::Input(format!(
            "{} rates for a trace with {} indices",
            k.len(),
            trace.index_count()
        )));
    }
    if let Some(bad) = k.iter().find(|k| !(**k > 0.0 && **k < 1.0)) {
        return Err(Error::Input(format!("rate {bad} must lie strictly between 0 and 1")));
    }
    Ok(())
}

/// Check `d_i(x_n, x_{n+1}) <= k_i^n d_i(x_0, x_1) + VERIFY_SLACK` for every
/// recorded step and index.
pub fn verify_geometric_decay(trace: &OrbitTrace, k: &[f64]) -> Result<BoundCheck> {
    check_rates(trace, k)?;
    let first = &trace.step_distances[0];
    let mut checked = 0;
    for (n, s) in trace.step_distances.iter().enumerate() {
        for (i, (&observed, &ki)) in s.iter().zip(k).enumerate() {
            checked += 1;
            let bound = ki.powi(n as i32) * first[i];
            if observed > bound + VERIFY_SLACK {
                return Ok(BoundCheck {
                    holds: false,
                    checked,
                    first_violation: Some(BoundViolation {
                        index: i,
                        n,
                        m: n + 1,
                        observed,
                        bound,
                    }),
                });
            }
        }
    }
    Ok(BoundCheck {
        holds: true,
        checked,
        first_violation: None,
    })
}

/// Check `d_i(x_n, x_m) <= k_i^n / (1 - k_i) d_i(x_0, x_1) + VERIFY_SLACK` for
/// every recorded pair `n < m`.
pub fn verify_tail_bound(trace: &OrbitTrace, family: &PseudometricFamily, k: &[f64]) -> Result<BoundCheck> {
    verify_tail_bound_with(trace, family, k, Execution::default())
}

pub fn verify_tail_bound_with(
    trace: &OrbitTrace,
    family: &PseudometricFamily,
    k: &[f64],
    exec: Execution,
) -> Result<BoundCheck> {
    check_rates(trace, k)?;
    family.check_dim(trace.dim())?;
    if family.len() != trace.index_count() {
        return Err(Error::Input(format!(
            "trace has {} indices, family has {}",
            trace.index_count(),
            family.len()
        )));
    }
    let first = &trace.step_distances[0];
    let pts = &trace.points;
    let rows = map_indexed(exec, pts.len(), |n| {
        for m in n + 1..pts.len() {
            for (i, &ki) in k.iter().enumerate() {
                let observed = family.d(i, &pts[n], &pts[m]);
                let bound = ki.powi(n as i32) / (1.0 - ki) * first[i];
                if observed > bound + VERIFY_SLACK {
                    return Some(BoundViolation {
                        index: i,
                        n,
                        m,
                        observed,
                        bound,
                    });
                }
            }
        }
        None
    });
    let n = pts.len();
    let checked = n * (n - 1) / 2 * k.len();
    let first_violation = rows.into_iter().flatten().next();
    Ok(BoundCheck {
        holds: first_violation.is_none(),
        checked,
        first_violation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub starts: Vec<Point>,
    pub statuses: Vec<SolveStatus>,
    pub limits: Vec<Point>,
    /// Largest `max_i d_i(z, w)` over pairs of converged limits.
    pub max_pair_distance: f64,
    /// `2 * tolerance * (1 + max_i c_i / a_i)`.
    pub bound: f64,
    pub passed: bool,
}

/// Solve from every start and check that all converged limits coincide up to
/// the solver tolerance. Only meaningful when `a_i > c_i > 0` for all `i`.
pub fn uniqueness_probe(
    f: &Multifunction,
    family: &PseudometricFamily,
    params: &ContractionParams,
    starts: &[Point],
    opts: &SolveOptions,
) -> Result<UniquenessReport> {
    uniqueness_probe_with(f, family, params, starts, opts, Execution::default())
}

pub fn uniqueness_probe_with(
    f: &Multifunction,
    family: &PseudometricFamily,
    params: &ContractionParams,
    starts: &[Point],
    opts: &SolveOptions,
    exec: Execution,
) -> Result<UniquenessReport> {
    params.check_family(family)?;
    if !uniqueness_applicable(params) {
        return Err(Error::Input(
            "uniqueness probe requires a_i > c_i > 0 for every index".into(),
        ));
    }
    if starts.is_empty() {
        return Err(Error::Input("uniqueness probe needs at least one start".into()));
    }
    let runs = map_indexed(exec, starts.len(), |s| solve(f, family, &starts[s], opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let statuses: Vec<SolveStatus> = runs.iter().map(|(_, r)| r.status).collect();
    let limits: Vec<Point> = runs.into_iter().map(|(_, r)| r.final_point).collect();
    let converged: Vec<&Point> = limits
        .iter()
        .zip(&statuses)
        .filter(|(_, s)| **s == SolveStatus::FixedPointFound)
        .map(|(p, _)| p)
        .collect();
    let mut max_pair_distance = 0.0f64;
    for (s, z) in converged.iter().enumerate() {
        for w in &converged[s + 1..] {
            max_pair_distance = max_pair_distance.max(family.aggregate(z, w));
        }
    }
    let ratio = params
        .coefficients()
        .iter()
        .map(|k| k.c / k.a)
        .fold(0.0, f64::max);
    let bound = 2.0 * opts.tolerance * (1.0 + ratio);
    Ok(UniquenessReport {
        starts: starts.to_vec(),
        statuses,
        limits,
        max_pair_distance,
        bound,
        passed: max_pair_distance <= bound,
    })
}
