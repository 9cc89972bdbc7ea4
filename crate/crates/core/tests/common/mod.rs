//! Seeded random inputs and brute-force oracles shared by the integration
//! tests. Nothing here calls the hyperspace or solver code it is used to check.

#![allow(dead_code)]

use multifix::{FiniteSet, Point, PseudometricFamily, PseudometricSpec};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spec(rng: &mut impl Rng, dim: usize) -> PseudometricSpec {
    let count = rng.random_range(1..=dim);
    let mut coords = sample(rng, dim, count).into_vec();
    coords.sort_unstable();
    let weights = (0..count).map(|_| rng.random_range(0.1..5.0)).collect();
    if rng.random_bool(0.5) {
        PseudometricSpec::abs(coords, weights)
    } else {
        PseudometricSpec::euclidean(coords, weights)
    }
}

/// Family of 1..=3 builtin pseudometrics on a space of dimension 1..=3.
pub fn random_family(rng: &mut impl Rng) -> PseudometricFamily {
    let dim = rng.random_range(1..=3);
    random_family_in(rng, dim)
}

pub fn random_family_in(rng: &mut impl Rng, dim: usize) -> PseudometricFamily {
    let n = rng.random_range(1..=3);
    let specs = (0..n).map(|_| random_spec(rng, dim)).collect();
    PseudometricFamily::new(dim, specs).unwrap()
}

pub fn random_point(rng: &mut impl Rng, dim: usize, scale: f64) -> Point {
    Point::new((0..dim).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

/// Nonempty set of at most `max_len` points.
pub fn random_set(rng: &mut impl Rng, dim: usize, max_len: usize, scale: f64) -> FiniteSet {
    let n = rng.random_range(1..=max_len);
    FiniteSet::new((0..n).map(|_| random_point(rng, dim, scale)).collect()).unwrap()
}

/// Double-loop Hausdorff distance from pairwise `d_i` evaluations.
pub fn hausdorff_oracle(family: &PseudometricFamily, i: usize, a: &FiniteSet, b: &FiniteSet) -> f64 {
    let d = |x: &Point, y: &Point| family.eval(i, x, y).unwrap();
    let directed = |from: &FiniteSet, to: &FiniteSet| {
        from.iter()
            .map(|x| to.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

pub fn point_set_oracle(family: &PseudometricFamily, i: usize, x: &Point, a: &FiniteSet) -> f64 {
    a.iter()
        .map(|y| family.eval(i, x, y).unwrap())
        .fold(f64::INFINITY, f64::min)
}

/// Every index, every ordered pair.
pub fn diameter_oracle(family: &PseudometricFamily, a: &FiniteSet) -> f64 {
    let mut best = 0.0f64;
    for i in 0..family.len() {
        for x in a {
            for y in a {
                best = best.max(family.eval(i, x, y).unwrap());
            }
        }
    }
    best
}

/// Reference pseudometric evaluation written directly from the catalog
/// definitions.
pub fn spec_oracle(spec: &PseudometricSpec, x: &[f64], y: &[f64]) -> f64 {
    match spec {
        PseudometricSpec::WeightedAbs { coords, weights } => {
            let mut s = 0.0;
            for (k, &j) in coords.iter().enumerate() {
                s += weights[k] * (x[j] - y[j]).abs();
            }
            s
        }
        PseudometricSpec::WeightedEuclidean { coords, weights } => {
            let mut s = 0.0;
            for (k, &j) in coords.iter().enumerate() {
                let t = weights[k] * (x[j] - y[j]);
                s += t * t;
            }
            s.sqrt()
        }
    }
}
