//! Scenario documents: one JSON object describing the space, the map, the
//! contraction parameters and the solve/scan settings.
//!
//! Overrides are dotted paths into the document, e.g. `solve.tolerance=1e-10`
//! or `params.coefficients.0.a=0.3`. Values are parsed as JSON and fall back
//! to plain strings.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::checker::{Coefficients, ContractionParams, Region};
use crate::multifunction::{make_builtin, BuiltinSpec, Multifunction, SelfMap};
use crate::solver::SolveOptions;
use crate::space::{Point, PseudometricFamily, PseudometricSpec};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub space: SpaceConfig,
    pub map: BuiltinSpec,
    pub params: ParamsConfig,
    pub solve: SolveConfig,
    pub scan: ScanConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub dimension: usize,
    pub family: Vec<PseudometricSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_r")]
    pub r: u32,
    pub coefficients: Vec<Coefficients>,
}

fn default_r() -> u32 {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub x0: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
    #[serde(default)]
    pub divergence_guard: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub budget: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    /// Per-index decay rates for trace verification; defaults to `b_i + c_i`.
    #[serde(default)]
    pub k: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub starts: Vec<Vec<f64>>,
}

/// A configuration problem, optionally anchored to a line of the source
/// document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
            if let Some(col) = self.column {
                write!(f, ":{col}")?;
            }
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a command needs, built and validated from a [`ScenarioConfig`].
#[derive(Clone, Debug)]
pub struct Scenario {
    pub family: PseudometricFamily,
    pub spec: BuiltinSpec,
    pub map: Multifunction,
    pub self_map: Option<SelfMap>,
    pub params: ContractionParams,
    pub x0: Point,
    pub solve: SolveOptions,
    pub region: Region,
    pub budget: usize,
    pub seed: u64,
    pub rates: Vec<f64>,
    pub starts: Vec<Point>,
}

/// Split `key=value` into a dotted path and a JSON value.
pub fn parse_override(raw: &str) -> Result<(Vec<String>, Value), String> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("override {raw:?} is not of the form key=value"))?;
    let path: Vec<String> = key.split('.').map(str::to_string).collect();
    if path.iter().any(String::is_empty) {
        return Err(format!("override key {key:?} has an empty segment"));
    }
    let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
    Ok((path, value))
}

/// Set `path` in `doc` to `value`, creating intermediate objects as needed.
pub fn apply_override(doc: &mut Value, path: &[String], value: Value) -> Result<(), String> {
    let mut cur = doc;
    for (depth, seg) in path.iter().enumerate() {
        let last = depth + 1 == path.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(seg.clone(), value);
                    return Ok(());
                }
                map.entry(seg.clone()).or_insert_with(|| Value::Object(Default::default()))
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| format!("segment {seg:?} must index an array"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| format!("index {idx} out of range for array of {len}"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(format!("cannot descend into {:?} at {seg:?}", path[..depth].join("."))),
        };
    }
    Err("empty override path".into())
}

/// 1-based line of the first occurrence of `"key"` in the document.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&needle)).map(|n| n + 1)
}

impl ScenarioConfig {
    /// Parse a document and apply overrides. Parse and type errors carry the
    /// line and column of the offending token when no overrides are given.
    pub fn parse(text: &str, source: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let err = |line, column, message: String| ConfigError {
            source: source.to_string(),
            line,
            column,
            message,
        };
        if overrides.is_empty() {
            return serde_json::from_str(text)
                .map_err(|e| err(Some(e.line()), Some(e.column()), e.to_string()));
        }
        let mut doc: Value = serde_json::from_str(text)
            .map_err(|e| err(Some(e.line()), Some(e.column()), e.to_string()))?;
        for raw in overrides {
            let (path, value) = parse_override(raw).map_err(|m| err(None, None, m))?;
            apply_override(&mut doc, &path, value)
                .map_err(|m| err(None, None, format!("override {raw:?}: {m}")))?;
        }
        serde_json::from_value(doc).map_err(|e| err(None, None, format!("after overrides: {e}")))
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source: source.clone(),
            line: None,
            column: None,
            message: format!("cannot read config: {e}"),
        })?;
        let cfg = Self::parse(&text, &source, overrides)?;
        cfg.build_anchored(&text, &source)?;
        Ok(cfg)
    }

    /// Validate and instantiate. Errors are anchored to the line of the
    /// section they concern within `text`.
    pub fn build_anchored(&self, text: &str, source: &str) -> Result<Scenario, ConfigError> {
        self.build().map_err(|(key, message)| ConfigError {
            source: source.to_string(),
            line: line_of(text, key),
            column: None,
            message: format!("{key}: {message}"),
        })
    }

    /// Validate and instantiate. The error names the offending section.
    pub fn build(&self) -> Result<Scenario, (&'static str, String)> {
        let dim = self.space.dimension;
        let family = PseudometricFamily::new(dim, self.space.family.clone()).map_err(|e| ("family", e.to_string()))?;
        let map = make_builtin(&self.map, dim).map_err(|e| ("map", e.to_string()))?;
        let self_map = self.map.self_map(dim).map_err(|e| ("map", e.to_string()))?;

        let (given, needed) = (self.params.coefficients.len(), family.len());
        if given < needed {
            return Err((
                "coefficients",
                format!("missing coefficient triple for index {given}: family has {needed} pseudometrics, {given} triples given"),
            ));
        }
        if given > needed {
            return Err(("coefficients", format!("extra coefficient triple at index {needed}")));
        }
        let params = ContractionParams::new(self.params.r, self.params.coefficients.clone())
            .map_err(|e| ("params", e.to_string()))?;

        let x0 = Point::new(self.solve.x0.clone()).map_err(|e| ("x0", e.to_string()))?;
        family.check_dim(x0.dim()).map_err(|e| ("x0", e.to_string()))?;
        let solve = SolveOptions {
            tolerance: self.solve.tolerance,
            max_iterations: self.solve.max_iterations,
            divergence_guard: self.solve.divergence_guard,
        };
        solve.validate().map_err(|e| ("solve", e.to_string()))?;

        let region = Region::new(self.scan.lower.clone(), self.scan.upper.clone()).map_err(|e| ("scan", e.to_string()))?;
        family.check_dim(region.dim()).map_err(|e| ("scan", e.to_string()))?;
        if self.scan.budget == 0 {
            return Err(("budget", "scan budget must be at least 1".into()));
        }

        let rates = match &self.verify.k {
            Some(k) => {
                if k.len() != family.len() || k.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                    return Err(("verify", format!("need {} rates in (0, 1), got {k:?}", family.len())));
                }
                k.clone()
            }
            None => params.rates(),
        };

        let starts = match &self.probe {
            Some(p) => p
                .starts
                .iter()
                .map(|s| {
                    let pt = Point::new(s.clone()).map_err(|e| ("probe", e.to_string()))?;
                    family.check_dim(pt.dim()).map_err(|e| ("probe", e.to_string()))?;
                    Ok(pt)
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };

        Ok(Scenario {
            family,
            spec: self.map.clone(),
            map,
            self_map,
            params,
            x0,
            solve,
            region,
            budget: self.scan.budget,
            seed: self.scan.seed,
            rates,
            starts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const HALVING: &str = include_str!("../../scenarios/halving.json");

    #[test]
    fn packaged_scenario_builds() {
        let cfg = ScenarioConfig::parse(HALVING, "halving.json", &[]).unwrap();
        let s = cfg.build().unwrap();
        assert_eq!(s.family.len(), 1);
        assert_eq!(s.budget, 10_000);
        assert!((s.rates[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn overrides_apply() {
        let o = vec![
            "solve.tolerance=1e-10".to_string(),
            "params.coefficients.0.a=0.3".to_string(),
            "verify.k=[0.6]".to_string(),
        ];
        let cfg = ScenarioConfig::parse(HALVING, "h", &o).unwrap();
        assert_eq!(cfg.solve.tolerance, 1e-10);
        assert_eq!(cfg.params.coefficients[0].a, 0.3);
        assert_eq!(cfg.build().unwrap().rates, vec![0.6]);
    }

    #[test]
    fn override_errors() {
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
        let bad = vec!["params.coefficients.5.a=1".to_string()];
        assert!(ScenarioConfig::parse(HALVING, "h", &bad).is_err());
        let typed = vec!["solve.tolerance=abc".to_string()];
        assert!(ScenarioConfig::parse(HALVING, "h", &typed).is_err());
    }

    #[test]
    fn parse_errors_are_line_anchored() {
        let broken = HALVING.replace("\"tolerance\": 1e-8", "\"tolerance\": \"x\"");
        let e = ScenarioConfig::parse(&broken, "h.json", &[]).unwrap_err();
        assert_eq!(e.line, line_of(&broken, "tolerance"));
        assert!(e.to_string().starts_with("h.json:"));
    }

    #[test]
    fn missing_coefficient_is_reported() {
        let two = HALVING.replace(
            r#""family": [{ "kind": "weighted_abs", "coords": [0], "weights": [1.0] }]"#,
            r#""family": [{ "kind": "weighted_abs", "coords": [0] }, { "kind": "weighted_abs", "coords": [0], "weights": [2.0] }]"#,
        );
        let cfg = ScenarioConfig::parse(&two, "two.json", &[]).unwrap();
        let e = cfg.build_anchored(&two, "two.json").unwrap_err();
        assert!(e.message.contains("missing coefficient triple for index 1"), "{e}");
        assert_eq!(e.line, line_of(&two, "coefficients"));
    }

    #[test]
    fn hypothesis_enforced_at_load() {
        let o = vec!["params.coefficients.0.b=0.6".to_string()];
        let cfg = ScenarioConfig::parse(HALVING, "h", &o).unwrap();
        assert_eq!(cfg.build().unwrap_err().0, "params");
    }
}
