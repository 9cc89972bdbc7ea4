//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use multifix::cli::ScenarioConfig;
use multifix::multifunction::AffineMap;
use multifix::solver::uniqueness_probe;
use multifix::{
    hausdorff, lift_single_valued, make_builtin, scan, solve, verify_geometric_decay, verify_tail_bound,
    BuiltinSpec, Coefficients, ContractionParams, FiniteSet, OrbitTrace, Point, PseudometricFamily, PseudometricSpec,
    Region, SelfMap, SolveOptions, SolveStatus,
};
use rand::Rng;

use common::{hausdorff_oracle, random_family, random_point, random_set, rng};

type Outcome = Result<String, String>;

fn scenario_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn halving(dim: usize) -> multifix::Multifunction {
    make_builtin(
        &BuiltinSpec::AffineContraction {
            matrix: AffineMap::scaled_identity(dim, 0.5).matrix,
            offset: vec![0.0; dim],
        },
        dim,
    )
    .unwrap()
}

fn two_halvings(dim: usize) -> multifix::Multifunction {
    make_builtin(
        &BuiltinSpec::MultiAffine {
            branches: vec![AffineMap::scaled_identity(dim, 0.5), AffineMap::scaled_identity(dim, 0.25)],
        },
        dim,
    )
    .unwrap()
}

fn identity(dim: usize) -> multifix::Multifunction {
    make_builtin(&BuiltinSpec::Identity, dim).unwrap()
}

fn line_params(a: f64, b: f64, c: f64) -> ContractionParams {
    ContractionParams::new(1, vec![Coefficients::new(a, b, c)]).unwrap()
}

/// Families on dimensions one to three for the orbit criteria.
fn orbit_families() -> Vec<PseudometricFamily> {
    vec![
        PseudometricFamily::real_line(),
        PseudometricFamily::new(
            2,
            vec![
                PseudometricSpec::abs(vec![0], vec![1.0]),
                PseudometricSpec::abs(vec![1], vec![2.0]),
                PseudometricSpec::euclidean(vec![0, 1], vec![1.0, 1.0]),
            ],
        )
        .unwrap(),
        PseudometricFamily::new(
            3,
            vec![
                PseudometricSpec::euclidean(vec![0, 1, 2], vec![1.0, 2.0, 3.0]),
                PseudometricSpec::abs(vec![2], vec![0.5]),
            ],
        )
        .unwrap(),
    ]
}

fn hausdorff_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let trials = 10_000;
    for t in 0..trials {
        let family = random_family(&mut rng);
        let dim = family.dimension();
        let a = random_set(&mut rng, dim, 8, 10.0);
        let b = random_set(&mut rng, dim, 8, 10.0);
        for i in 0..family.len() {
            let got = hausdorff(&family, i, &a, &b).unwrap();
            let want = hausdorff_oracle(&family, i, &a, &b);
            if got.to_bits() != want.to_bits() {
                return Err(format!("trial {t}, index {i}: {got:e} vs oracle {want:e}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        return Err(format!("{trials} pairs took {elapsed:.2} s"));
    }
    Ok(format!("{trials} pairs bitwise equal in {elapsed:.2} s"))
}

fn pseudometric_axioms() -> Outcome {
    let mut rng = rng(2);
    let trials = 10_000;
    let slack = |d: f64| 1e-12 * d.max(1.0);
    for t in 0..trials {
        let family = random_family(&mut rng);
        let dim = family.dimension();
        let (x, y, z) = (
            random_point(&mut rng, dim, 10.0),
            random_point(&mut rng, dim, 10.0),
            random_point(&mut rng, dim, 10.0),
        );
        let (a, b, c) = (
            random_set(&mut rng, dim, 6, 10.0),
            random_set(&mut rng, dim, 6, 10.0),
            random_set(&mut rng, dim, 6, 10.0),
        );
        for i in 0..family.len() {
            let d = |p: &Point, q: &Point| family.eval(i, p, q).unwrap();
            if d(&x, &y).to_bits() != d(&y, &x).to_bits() {
                return Err(format!("trial {t}: d_{i} not symmetric"));
            }
            if d(&x, &z) > d(&x, &y) + d(&y, &z) + slack(d(&x, &z)) {
                return Err(format!("trial {t}: d_{i} triangle inequality fails"));
            }
            let h = |p: &FiniteSet, q: &FiniteSet| hausdorff(&family, i, p, q).unwrap();
            if h(&a, &b).to_bits() != h(&b, &a).to_bits() {
                return Err(format!("trial {t}: H_{i} not symmetric"));
            }
            if h(&a, &c) > h(&a, &b) + h(&b, &c) + slack(h(&a, &c)) {
                return Err(format!("trial {t}: H_{i} triangle inequality fails"));
            }
        }
    }
    Ok(format!("{trials} random triples of points and of sets"))
}

struct OrbitRun {
    family: PseudometricFamily,
    k: Vec<f64>,
    trace: OrbitTrace,
    label: String,
}

/// Orbits of the halving map and the two-branch multi_affine map, run for
/// exactly 100 iterations from 20 random starts in each dimension, after
/// confirming the chosen parameters pass the scan on `[-10, 10]^d`.
fn contraction_orbits() -> Result<Vec<OrbitRun>, String> {
    let coefficients = Coefficients::new(0.1, 0.2, 0.5);
    let opts = SolveOptions {
        tolerance: f64::MIN_POSITIVE,
        max_iterations: 100,
        divergence_guard: None,
    };
    let mut rng = rng(3);
    let mut runs = Vec::new();
    for family in orbit_families() {
        let dim = family.dimension();
        let params = ContractionParams::uniform(1, coefficients, family.len()).unwrap();
        let region = Region::cube(dim, -10.0, 10.0).unwrap();
        for (name, f) in [("halving", halving(dim)), ("multi_affine", two_halvings(dim))] {
            let report = scan(&f, &params, &family, &region, 10_000, 42).unwrap();
            if !report.holds_on_sample {
                return Err(format!("{name} in dimension {dim}: parameters fail the scan"));
            }
            for s in 0..20 {
                let x0 = random_point(&mut rng, dim, 10.0);
                let (trace, rep) = solve(&f, &family, &x0, &opts).unwrap();
                if rep.status != SolveStatus::MaxIterationsReached || trace.len() != 101 {
                    return Err(format!("{name} d={dim} start {s}: {:?} after {}", rep.status, trace.len()));
                }
                runs.push(OrbitRun {
                    family: family.clone(),
                    k: params.rates(),
                    trace,
                    label: format!("{name} d={dim} start {s}"),
                });
            }
        }
    }
    Ok(runs)
}

fn geometric_decay(runs: &[OrbitRun]) -> Outcome {
    for run in runs {
        let check = verify_geometric_decay(&run.trace, &run.k).unwrap();
        if !check.holds {
            return Err(format!("{}: {:?}", run.label, check.first_violation));
        }
    }
    Ok(format!("{} traces of 100 steps, k = 0.7", runs.len()))
}

fn tail_bound(runs: &[OrbitRun]) -> Outcome {
    for run in runs {
        let check = verify_tail_bound(&run.trace, &run.family, &run.k).unwrap();
        if !check.holds {
            return Err(format!("{}: {:?}", run.label, check.first_violation));
        }
    }
    Ok(format!("{} traces, all pairs n < m <= 100", runs.len()))
}

fn fixed_point_residual() -> Outcome {
    let line = PseudometricFamily::real_line();
    let (_, rep) = solve(
        &halving(1),
        &line,
        &Point::scalar(1.0).unwrap(),
        &SolveOptions::with_tolerance(1e-8),
    )
    .unwrap();
    if rep.status != SolveStatus::FixedPointFound || rep.iterations_used > 30 || rep.final_residual[0] > 1e-8 {
        return Err(format!(
            "halving: {:?} after {} iterations, residual {:e}",
            rep.status, rep.iterations_used, rep.final_residual[0]
        ));
    }
    // The residual of the selector at x is x/2, so a residual tolerance of
    // 5e-9 places the final point within 1e-8 of the fixed point 0.
    let selector = make_builtin(
        &BuiltinSpec::ScaledSelector {
            ratios: vec![0.5, 1.0 / 3.0],
        },
        1,
    )
    .unwrap();
    let (_, sel) = solve(&selector, &line, &Point::scalar(6.0).unwrap(), &SolveOptions::with_tolerance(5e-9)).unwrap();
    let end = sel.final_point.coords()[0];
    if sel.status != SolveStatus::FixedPointFound || end.abs() > 1e-8 {
        return Err(format!("selector: {:?} ending at {end:e}", sel.status));
    }
    Ok(format!(
        "halving {} iterations, residual {:.3e}; selector ends at {end:.3e}",
        rep.iterations_used, rep.final_residual[0]
    ))
}

fn uniqueness() -> Outcome {
    let line = PseudometricFamily::real_line();
    let params = line_params(0.6, 0.2, 0.5);
    if !multifix::uniqueness_applicable(&params) {
        return Err("uniqueness_applicable is false".into());
    }
    let starts: Vec<Point> = [-3.0, 1.0, 7.0].iter().map(|&v| Point::scalar(v).unwrap()).collect();
    let opts = SolveOptions::with_tolerance(1e-8);
    let probe = uniqueness_probe(&halving(1), &line, &params, &starts, &opts).unwrap();
    let converged = probe.statuses.iter().all(|s| *s == SolveStatus::FixedPointFound);
    if !converged || probe.max_pair_distance > 1e-6 {
        return Err(format!("halving limits {:?}", probe.limits));
    }

    let id = identity(1);
    let region = Region::cube(1, -1.0, 1.0).unwrap();
    let report = scan(&id, &params, &line, &region, 10_000, 42).unwrap();
    let in_probes = report.violations.first().is_some_and(|v| v.sample < report.probe_pairs);
    if report.holds_on_sample || !in_probes {
        return Err("identity map not rejected within the probe pairs".into());
    }
    let control = uniqueness_probe(&id, &line, &params, &starts, &opts).unwrap();
    if control.passed || control.max_pair_distance < 1.0 {
        return Err(format!("identity limits collapsed: {:?}", control.limits));
    }
    Ok(format!(
        "halving limits within {:.3e}; identity rejected at probe pair {}, limits {} apart",
        probe.max_pair_distance, report.violations[0].sample, control.max_pair_distance
    ))
}

fn checker_falsification() -> Outcome {
    let line = PseudometricFamily::real_line();
    let params = line_params(0.6, 0.2, 0.5);
    let region = Region::cube(1, -1.0, 1.0).unwrap();
    let expansion = make_builtin(&BuiltinSpec::Expansion { factor: 2.0 }, 1).unwrap();
    let run = |f: &multifix::Multifunction| scan(f, &params, &line, &region, 10_000, 42).unwrap();

    let mut failures = Vec::new();
    for (name, f, expected) in [
        ("expansion(2)", &expansion, false),
        ("identity", &identity(1), false),
        ("halving", &halving(1), true),
    ] {
        let first = run(f);
        if first.to_json() != run(f).to_json() {
            failures.push(format!("{name}: report differs between runs"));
        }
        if first.holds_on_sample != expected {
            let detail = first
                .violations
                .first()
                .map(|v| format!(" (first violation x={} y={} lhs={} rhs={})", v.x, v.y, v.lhs, v.rhs))
                .unwrap_or_default();
            failures.push(format!(
                "{name}: holds_on_sample = {}, expected {expected}{detail}",
                first.holds_on_sample
            ));
        }
    }
    if failures.is_empty() {
        Ok("expansion and identity rejected, halving accepted, reports reproducible".into())
    } else {
        Err(failures.join("; "))
    }
}

fn single_valued_reduction() -> Outcome {
    let mut rng = rng(8);
    let trials = 10_000;
    for t in 0..trials {
        let family = random_family(&mut rng);
        let dim = family.dimension();
        let matrix: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let offset: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let affine = AffineMap { matrix, offset };
        let t_map = SelfMap::new(dim, "random affine", move |x: &[f64]| affine.apply(x));
        let lifted = lift_single_valued(&t_map);
        let x = random_point(&mut rng, dim, 10.0);
        let y = random_point(&mut rng, dim, 10.0);
        let (tx, ty) = (t_map.apply(&x).unwrap(), t_map.apply(&y).unwrap());
        let (fx, fy) = (lifted.evaluate(&x).unwrap(), lifted.evaluate(&y).unwrap());
        for i in 0..family.len() {
            let h = hausdorff(&family, i, &fx, &fy).unwrap();
            let d = family.eval(i, &tx, &ty).unwrap();
            if h.to_bits() != d.to_bits() {
                return Err(format!("trial {t}, index {i}: H = {h:e}, d = {d:e}"));
            }
        }
    }
    Ok(format!("{trials} random affine maps and point pairs"))
}

fn cli_round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = scenario_path("halving.json");
    let status = Command::new(env!("CARGO_BIN_EXE_multifix"))
        .arg("solve")
        .arg("--config")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.code() != Some(0) {
        return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let file = std::fs::File::open(dir.path().join(multifix::cli::TRACE_FILE)).map_err(|e| e.to_string())?;
    let trace = OrbitTrace::read_csv(file).map_err(|e| e.to_string())?;
    let scenario = ScenarioConfig::load(&config, &[])
        .map_err(|e| e.to_string())?
        .build()
        .map_err(|(_, m)| m)?;
    let check = trace.verify_orbit(&scenario.map, &scenario.family).unwrap();
    if !check.passed() {
        return Err(format!("re-verification failed: {check:?}"));
    }
    Ok(format!("{} trace rows re-verified", trace.len()))
}

fn main() {
    let orbits = contraction_orbits();
    let shared = |f: fn(&[OrbitRun]) -> Outcome| match &orbits {
        Ok(runs) => f(runs),
        Err(e) => Err(e.clone()),
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("hausdorff oracle equivalence", hausdorff_oracle_equivalence()),
        ("pseudometric axioms", pseudometric_axioms()),
        ("geometric decay", shared(geometric_decay)),
        ("cauchy tail bound", shared(tail_bound)),
        ("fixed-point residual", fixed_point_residual()),
        ("uniqueness", uniqueness()),
        ("checker falsification", checker_falsification()),
        ("single-valued reduction", single_valued_reduction()),
        ("cli round-trip", cli_round_trip()),
    ];
    let mut failed = 0;
    for (n, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
