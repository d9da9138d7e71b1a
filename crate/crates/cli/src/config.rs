use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use distpred::learners::{Grid, ParamValue, StdDenominator};
use distpred::Loss;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::grammar::parse_model_spec;

/// One input table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: PathBuf,
    pub target: String,
    /// Defaults to the file stem. Seeds for fold splits are derived from it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl DatasetEntry {
    pub fn display_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path.file_stem().map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned())
        })
    }
}

fn default_losses() -> Vec<String> {
    vec!["log".to_string()]
}

fn default_folds() -> usize {
    5
}

fn default_std() -> String {
    "n".to_string()
}

/// A benchmark run: every model is cross-validated on every dataset and
/// scored under every loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    pub models: Vec<String>,
    #[serde(default = "default_losses")]
    pub losses: Vec<String>,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Standard errors from all out-of-fold losses pooled, instead of the mean of fold standard errors.
    #[serde(default)]
    pub pooled_se: bool,
    /// `n` or `n-1`.
    #[serde(default = "default_std")]
    pub std_denominator: String,
    /// Also emit pairwise Wilcoxon comparisons.
    #[serde(default)]
    pub compare: bool,
    /// Extra tuning grids keyed by model specification, then by parameter path.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grids: BTreeMap<String, BTreeMap<String, Vec<serde_json::Value>>>,
}

pub fn parse_std_denominator(s: &str) -> CliResult<StdDenominator> {
    match s {
        "n" | "N" => Ok(StdDenominator::N),
        "n-1" | "N-1" => Ok(StdDenominator::NMinusOne),
        other => Err(CliError::Config(format!("std denominator must be `n` or `n-1`, got `{other}`"))),
    }
}

pub fn parse_loss(id: &str) -> CliResult<Loss> {
    id.parse::<Loss>().map_err(|e| CliError::Config(e.to_string()))
}

fn param_value(v: &serde_json::Value) -> CliResult<ParamValue> {
    match v {
        serde_json::Value::Bool(b) => Ok(ParamValue::Bool(*b)),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Ok(ParamValue::Int(i)),
            None => Ok(ParamValue::Float(n.as_f64().unwrap_or(f64::NAN))),
        },
        serde_json::Value::String(s) => Ok(ParamValue::Text(s.clone())),
        other => Err(CliError::Config(format!("grid values must be numbers, booleans or strings, got {other}"))),
    }
}

/// Splits a comma-separated list at commas outside parentheses.
pub fn split_top_level(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut current = String::new();
    for c in list.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(current.trim().to_string());
                current.clear();
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    if !current.trim().is_empty() || !out.is_empty() {
        out.push(current.trim().to_string());
    }
    out
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configs always serialize")
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.datasets.is_empty() {
            return Err(CliError::Config("at least one dataset is required".into()));
        }
        if self.models.is_empty() {
            return Err(CliError::Config("at least one model is required".into()));
        }
        if self.losses.is_empty() {
            return Err(CliError::Config("at least one loss is required".into()));
        }
        if self.folds < 2 {
            return Err(CliError::Config(format!("need at least 2 folds, got {}", self.folds)));
        }
        for m in self.models.iter().chain(self.grids.keys()) {
            parse_model_spec(m)?;
        }
        for l in &self.losses {
            parse_loss(l)?;
        }
        parse_std_denominator(&self.std_denominator)?;
        let mut names: Vec<String> = self.datasets.iter().map(DatasetEntry::display_name).collect();
        names.sort();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(CliError::Config("dataset names must be distinct".into()));
        }
        Ok(())
    }

    /// Canonical form: model specifications and loss identifiers re-rendered,
    /// dataset names filled in.
    pub fn normalize(&self) -> CliResult<Self> {
        self.validate()?;
        let canon = |m: &String| parse_model_spec(m).map(|s| s.to_string());
        let mut out = self.clone();
        out.models = self.models.iter().map(canon).collect::<CliResult<_>>()?;
        out.losses = self.losses.iter().map(|l| parse_loss(l).map(|l| l.to_string())).collect::<CliResult<_>>()?;
        for d in &mut out.datasets {
            d.name = Some(d.display_name());
        }
        out.std_denominator = match parse_std_denominator(&self.std_denominator)? {
            StdDenominator::N => "n".into(),
            StdDenominator::NMinusOne => "n-1".into(),
        };
        out.grids = self
            .grids
            .iter()
            .map(|(k, v)| Ok((canon(k)?, v.clone())))
            .collect::<CliResult<_>>()?;
        Ok(out)
    }

    /// Extra grid for a model given in canonical form.
    pub fn grid_for(&self, canonical: &str) -> CliResult<Grid> {
        let mut grid = Grid::new();
        for (k, v) in &self.grids {
            if parse_model_spec(k)?.to_string() == canonical {
                for (path, values) in v {
                    grid.insert(path.clone(), values.iter().map(param_value).collect::<CliResult<_>>()?);
                }
            }
        }
        Ok(grid)
    }
}
