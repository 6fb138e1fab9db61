//! Scenario files: a market plus optional rules and simulation settings.
//!
//! ```json
//! {"r": 0.0, "mu": [0.2402265], "sigma": [0.6931472], "rho": [[1.0]],
//!  "b": [0.5], "c": [1.0],
//!  "sim": {"horizon": 300.0, "steps": 300, "paths": 1, "seed": 7}}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{MarketParams, MarketSpec, RebalancingRule};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    pub horizon: Option<f64>,
    pub steps: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub r: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSettings>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field `{field}`: {source}")]
    Invalid {
        path: String,
        field: &'static str,
        source: crate::Error,
    },
}

/// A parsed and validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub market: MarketParams,
    pub b: Option<RebalancingRule>,
    pub c: Option<RebalancingRule>,
    pub sim: SimSettings,
}

impl ScenarioFile {
    pub fn from_market(spec: MarketSpec) -> Self {
        Self {
            r: spec.r,
            mu: spec.mu,
            sigma: spec.sigma,
            rho: spec.rho,
            b: None,
            c: None,
            sim: None,
        }
    }

    pub fn market_spec(&self) -> MarketSpec {
        MarketSpec {
            r: self.r,
            mu: self.mu.clone(),
            sigma: self.sigma.clone(),
            rho: self.rho.clone(),
        }
    }
}

fn field_of(err: &crate::Error) -> &'static str {
    use crate::Error::*;
    match err {
        DimensionMismatch { what, .. } => match *what {
            "sigma" => "sigma",
            "rho rows" | "rho columns" => "rho",
            "rule b" => "b",
            "rule c" => "c",
            _ => "mu",
        },
        NonPositiveVolatility { .. } => "sigma",
        InvalidCorrelation(_) => "rho",
        SingularCovariance { .. } => "rho",
        NonFinite(what) => what,
        _ => "market",
    }
}

pub fn parse_scenario(text: &str, path: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        path: path.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let market =
        MarketParams::from_spec(&file.market_spec()).map_err(|source| ScenarioError::Invalid {
            path: path.to_string(),
            field: field_of(&source),
            source,
        })?;
    let rule = |w: &Option<Vec<f64>>,
                field: &'static str|
     -> Result<Option<RebalancingRule>, ScenarioError> {
        match w {
            None => Ok(None),
            Some(w) if w.len() == market.n() => Ok(Some(RebalancingRule::new(w.clone()))),
            Some(w) => Err(ScenarioError::Invalid {
                path: path.to_string(),
                field,
                source: crate::Error::DimensionMismatch {
                    what: if field == "b" { "rule b" } else { "rule c" },
                    expected: market.n(),
                    found: w.len(),
                },
            }),
        }
    };
    Ok(Scenario {
        b: rule(&file.b, "b")?,
        c: rule(&file.c, "c")?,
        sim: file.sim.clone().unwrap_or_default(),
        market,
    })
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_scenario(&text, &shown)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_scenario() {
        let text = r#"{"r": 0.0, "mu": [0.24], "sigma": [0.69], "rho": [[1.0]],
                       "b": [0.5], "c": [1.0], "sim": {"horizon": 300, "steps": 300}}"#;
        let s = parse_scenario(text, "x.json").unwrap();
        assert_eq!(s.b.unwrap().weights(), &[0.5]);
        assert_eq!(s.sim.steps, Some(300));
        assert_eq!(s.sim.seed, None);
    }

    #[test]
    fn syntax_errors_are_located() {
        let text = "{\n  \"r\": 0.0,\n  \"mu\": [0.1,,]\n}";
        match parse_scenario(text, "bad.json") {
            Err(ScenarioError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_errors_name_the_field() {
        let text = r#"{"r": 0.0, "mu": [0.1, 0.1], "sigma": [1, 1], "rho": [[1, 1], [1, 1]]}"#;
        match parse_scenario(text, "s.json") {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "rho"),
            other => panic!("{other:?}"),
        }
        let text = r#"{"r": 0.0, "mu": [0.1], "sigma": [-1], "rho": [[1]]}"#;
        assert!(matches!(
            parse_scenario(text, "s.json"),
            Err(ScenarioError::Invalid { field: "sigma", .. })
        ));
        let text = r#"{"r": 0.0, "mu": [0.1], "sigma": [1], "rho": [[1]], "b": [1, 2]}"#;
        assert!(matches!(
            parse_scenario(text, "s.json"),
            Err(ScenarioError::Invalid { field: "b", .. })
        ));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = r#"{"r": 0.0, "mu": [0.1], "sigma": [1], "rho": [[1]], "drift": 3}"#;
        assert!(matches!(
            parse_scenario(text, "s.json"),
            Err(ScenarioError::Parse { .. })
        ));
    }
}
