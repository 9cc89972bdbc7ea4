//! `multifix` command line: `check`, `solve` and `demo`.
//!
//! Exit codes: 0 success, 1 the run completed but the condition or solve
//! failed, 2 configuration or usage error. Summaries go to stdout and
//! diagnostics to stderr.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::checker::{scan, ConditionReport};
use crate::error::Error;
use crate::solver::{
    solve, uniqueness_probe, verify_geometric_decay, verify_tail_bound, BoundCheck, OrbitTrace, SolveReport,
    SolveStatus, UniquenessReport,
};
pub use config::{ConfigError, Scenario, ScenarioConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const REPORT_FILE: &str = "condition_report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const SOLVE_REPORT_FILE: &str = "solve_report.json";

/// Packaged scenarios, by demo name.
pub const DEMOS: &[(&str, &str)] = &[
    ("halving", include_str!("../../scenarios/halving.json")),
    ("two-branch", include_str!("../../scenarios/two_branch.json")),
    ("corollary", include_str!("../../scenarios/corollary.json")),
    ("uniqueness", include_str!("../../scenarios/uniqueness.json")),
];

#[derive(Debug, Parser)]
#[command(
    name = "multifix",
    version,
    about = "Fixed points of set-valued contractive maps",
    after_help = "Scenario fields can be overridden with dotted flags, e.g. --solve.tolerance=1e-10"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Scenario JSON document.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides scan.seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Scan the contraction condition and write a condition report.
    Check(RunArgs),
    /// Solve for a fixed point and write the orbit trace and a solve report.
    Solve(RunArgs),
    /// Run a packaged scenario and print a summary table.
    Demo {
        /// One of: halving, two-branch, corollary, uniqueness.
        name: String,
    },
}

/// Result of `solve` plus the trace certificates, as written to
/// `solve_report.json`.
#[derive(Clone, Debug, Serialize)]
pub struct SolveOutcome {
    pub map: String,
    #[serde(flatten)]
    pub report: SolveReport,
    /// Decay rates used for verification.
    pub k: Vec<f64>,
    /// `None` when the orbit has a single point and there is nothing to check.
    pub geometric_decay: Option<BoundCheck>,
    pub tail_bound: Option<BoundCheck>,
    pub success: bool,
}

/// Solve a scenario and verify its trace with the scenario's rates.
pub fn solve_scenario(s: &Scenario) -> crate::Result<(OrbitTrace, SolveOutcome)> {
    solve_from(s, &s.x0)
}

fn solve_from(s: &Scenario, x0: &crate::Point) -> crate::Result<(OrbitTrace, SolveOutcome)> {
    let (trace, report) = solve(&s.map, &s.family, x0, &s.solve)?;
    let (decay, tail) = if trace.len() >= 2 {
        (
            Some(verify_geometric_decay(&trace, &s.rates)?),
            Some(verify_tail_bound(&trace, &s.family, &s.rates)?),
        )
    } else {
        (None, None)
    };
    let success = report.status == SolveStatus::FixedPointFound
        && decay.as_ref().is_none_or(|c| c.holds)
        && tail.as_ref().is_none_or(|c| c.holds);
    let outcome = SolveOutcome {
        map: s.map.descriptor().to_string(),
        report,
        k: s.rates.clone(),
        geometric_decay: decay,
        tail_bound: tail,
        success,
    };
    Ok((trace, outcome))
}

pub fn check_scenario(s: &Scenario) -> crate::Result<ConditionReport> {
    scan(&s.map, &s.params, &s.family, &s.region, s.budget, s.seed)
}

/// Separate `--a.b=value` overrides from ordinary arguments.
fn split_overrides(args: &[String]) -> (Vec<String>, Vec<String>) {
    let mut overrides = Vec::new();
    let mut rest = Vec::new();
    for a in args {
        match a.strip_prefix("--") {
            Some(body) if body.split_once('=').is_some_and(|(k, _)| k.contains('.')) => {
                overrides.push(body.to_string())
            }
            _ => rest.push(a.clone()),
        }
    }
    (overrides, rest)
}

/// Entry point; returns the process exit code.
pub fn run<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let args: Vec<String> = args.into_iter().collect();
    let (mut overrides, rest) = split_overrides(&args);
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Check(a) | Command::Solve(a) if !a.config.exists() => {
            eprintln!("{}: config file not found", a.config.display());
            EXIT_CONFIG
        }
        Command::Check(a) => {
            if let Some(seed) = a.seed {
                overrides.push(format!("scan.seed={seed}"));
            }
            with_scenario(&a.config, &overrides, |s| cmd_check(s, &a.out))
        }
        Command::Solve(a) => {
            if let Some(seed) = a.seed {
                overrides.push(format!("scan.seed={seed}"));
            }
            with_scenario(&a.config, &overrides, |s| cmd_solve(s, &a.out))
        }
        Command::Demo { name } => cmd_demo(&name),
    }
}

fn with_scenario(path: &Path, overrides: &[String], body: impl FnOnce(&Scenario) -> i32) -> i32 {
    let loaded = ScenarioConfig::load(path, overrides).and_then(|cfg| {
        let text = fs::read_to_string(path).unwrap_or_default();
        cfg.build_anchored(&text, &path.display().to_string())
    });
    match loaded {
        Ok(s) => body(&s),
        Err(e) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
    }
}

fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, i32> {
    let path = dir.join(name);
    fs::create_dir_all(dir)
        .and_then(|_| fs::write(&path, contents))
        .map_err(|e| {
            eprintln!("{}: {e}", path.display());
            EXIT_CONFIG
        })?;
    Ok(path)
}

fn report_error(e: Error) -> i32 {
    eprintln!("error: {e}");
    match e {
        Error::Config(_) | Error::Input(_) | Error::DimensionMismatch { .. } => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn cmd_check(s: &Scenario, out: &Path) -> i32 {
    let report = match check_scenario(s) {
        Ok(r) => r,
        Err(e) => return report_error(e),
    };
    let mut json = report.to_json();
    json.push('\n');
    let path = match write_file(out, REPORT_FILE, json.as_bytes()) {
        Ok(p) => p,
        Err(code) => return code,
    };
    println!(
        "{}: {} pairs checked, {} violations -> {}",
        report.map,
        report.pairs_checked,
        report.violations.len(),
        path.display()
    );
    if let Some(v) = report.violations.first() {
        println!("first violation: x = {}, y = {}, index {}, lhs = {}, rhs = {}", v.x, v.y, v.index, v.lhs, v.rhs);
    }
    if report.holds_on_sample {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn cmd_solve(s: &Scenario, out: &Path) -> i32 {
    let (trace, outcome) = match solve_scenario(s) {
        Ok(r) => r,
        Err(e) => return report_error(e),
    };
    let mut csv = Vec::new();
    if let Err(e) = trace.write_csv(&mut csv) {
        return report_error(e);
    }
    let mut json = serde_json::to_string_pretty(&outcome).expect("report serializes");
    json.push('\n');
    let written = write_file(out, TRACE_FILE, &csv).and_then(|t| write_file(out, SOLVE_REPORT_FILE, json.as_bytes()).map(|r| (t, r)));
    let (trace_path, report_path) = match written {
        Ok(p) => p,
        Err(code) => return code,
    };
    let r = &outcome.report;
    println!(
        "{}: {:?} after {} iterations, final point {}, residual {:?}",
        outcome.map, r.status, r.iterations_used, r.final_point, r.final_residual
    );
    println!("rate estimates {:?}, k = {:?}", r.rate_estimates, outcome.k);
    println!("wrote {} and {}", trace_path.display(), report_path.display());
    if outcome.success {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

/// Summary of a packaged scenario run.
#[derive(Clone, Debug)]
pub struct DemoOutcome {
    pub table: String,
    pub success: bool,
    pub condition: ConditionReport,
    pub runs: Vec<SolveOutcome>,
    pub uniqueness: Option<UniquenessReport>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
}

fn fmt_check(c: &Option<BoundCheck>) -> &'static str {
    match c {
        None => "n/a",
        Some(c) if c.holds => "ok",
        Some(_) => "FAIL",
    }
}

/// Run a packaged scenario end to end.
pub fn run_demo(name: &str) -> Result<DemoOutcome, String> {
    let text = DEMOS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = DEMOS.iter().map(|(n, _)| *n).collect();
            format!("unknown demo {name:?}; available: {}", names.join(", "))
        })?;
    let cfg = ScenarioConfig::parse(text, name, &[]).map_err(|e| e.to_string())?;
    let s = cfg.build_anchored(text, name).map_err(|e| e.to_string())?;

    let condition = check_scenario(&s).map_err(|e| e.to_string())?;
    let starts = if s.starts.is_empty() { vec![s.x0.clone()] } else { s.starts.clone() };
    let runs = starts
        .iter()
        .map(|x0| solve_from(&s, x0).map(|(_, o)| o))
        .collect::<crate::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let uniqueness = if s.starts.is_empty() {
        None
    } else {
        Some(uniqueness_probe(&s.map, &s.family, &s.params, &s.starts, &s.solve).map_err(|e| e.to_string())?)
    };

    let mut t = String::new();
    let _ = writeln!(t, "demo {name}: {}", s.map.descriptor());
    let _ = writeln!(
        t,
        "{:>10} {:>22} {:>6} {:>14} {:>10} {:>6} {:>6}",
        "start", "status", "iters", "residual", "rate", "decay", "tail"
    );
    for (x0, o) in starts.iter().zip(&runs) {
        let r = &o.report;
        let _ = writeln!(
            t,
            "{:>10} {:>22} {:>6} {:>14.6e} {:>10} {:>6} {:>6}",
            x0.to_string(),
            format!("{:?}", r.status),
            r.iterations_used,
            r.final_residual.iter().copied().fold(0.0, f64::max),
            fmt_opt(r.rate_estimates.first().copied().flatten()),
            fmt_check(&o.geometric_decay),
            fmt_check(&o.tail_bound),
        );
    }
    let _ = writeln!(
        t,
        "condition (r = {}, k = {:?}): {} on sample, {} violations in {} pairs",
        s.params.r(),
        s.rates,
        if condition.holds_on_sample { "holds" } else { "violated" },
        condition.violations.len(),
        condition.pairs_checked
    );
    if let Some(u) = &uniqueness {
        let limits: Vec<String> = u.limits.iter().map(|p| format!("{:.3e}", p.coords()[0])).collect();
        let _ = writeln!(
            t,
            "limits [{}], max pairwise distance {:.3e} (bound {:.3e}): {}",
            limits.join(", "),
            u.max_pair_distance,
            u.bound,
            if u.passed { "unique" } else { "DISTINCT" }
        );
    }
    let success = runs.iter().all(|o| o.success) && uniqueness.as_ref().is_none_or(|u| u.passed);
    Ok(DemoOutcome {
        table: t,
        success,
        condition,
        runs,
        uniqueness,
    })
}

fn cmd_demo(name: &str) -> i32 {
    match run_demo(name) {
        Ok(d) => {
            print!("{}", d.table);
            if d.success {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(msg) => {
            eprintln!("{msg}");
            EXIT_CONFIG
        }
    }
}
