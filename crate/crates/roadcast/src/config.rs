//! Run configuration: one TOML file with sections for the dataset, split,
//! EDA and training; command-line flags override whatever they name.

use std::path::Path;

use chrono::NaiveDate;
use roadcast_core::frame::{SplitSpec, SplitStrategy};
use serde::Deserialize;

use crate::dataset::{default_lags, CellScheme, DatasetConfig};
use crate::error::AppError;

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub dataset: DatasetConfig,
    pub split_strategy: SplitStrategy,
    pub test_fraction: f64,
    pub wind_bin_mph: f64,
    /// Model names to train/evaluate; empty means the full default roster.
    pub models: Vec<String>,
    pub automl_budget: usize,
    pub automl_folds: usize,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            dataset: DatasetConfig::default(),
            split_strategy: SplitStrategy::TemporalHoldout,
            test_fraction: 0.2,
            wind_bin_mph: 1.0,
            models: Vec::new(),
            automl_budget: 16,
            automl_folds: 3,
        }
    }
}

impl AppConfig {
    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec { strategy: self.split_strategy, test_fraction: self.test_fraction, seed }
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.dataset.validate()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(AppError::Config(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if !(self.wind_bin_mph > 0.0) {
            return Err(AppError::Config("wind_bin_mph must be positive".into()));
        }
        if self.automl_budget == 0 {
            return Err(AppError::Config("automl budget must be >= 1".into()));
        }
        if self.automl_folds < 2 {
            return Err(AppError::Config("automl folds must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: Option<RawDataset>,
    split: Option<RawSplit>,
    eda: Option<RawEda>,
    train: Option<RawTrain>,
    automl: Option<RawAutoml>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    cell_scheme: Option<String>,
    grid_resolution_deg: Option<f64>,
    bucket_hours: Option<u32>,
    zero_fill: Option<bool>,
    lags: Option<Vec<usize>>,
    top_k_conditions: Option<usize>,
    smoothing: Option<f64>,
    encode_folds: Option<usize>,
    min_date: Option<String>,
    max_date: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    strategy: Option<String>,
    test_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEda {
    wind_bin_mph: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrain {
    models: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAutoml {
    budget: Option<usize>,
    folds: Option<usize>,
}

fn parse_date(field: &str, s: &str) -> Result<NaiveDate, AppError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| AppError::Config(format!("{field}: expected YYYY-MM-DD, got \"{s}\"")))
}

fn resolve(raw: RawConfig) -> Result<AppConfig, AppError> {
    let mut cfg = AppConfig::default();
    if let Some(d) = raw.dataset {
        if let Some(scheme) = d.cell_scheme.as_deref() {
            cfg.dataset.cell_scheme = match scheme {
                "state" => CellScheme::State,
                "state_city" => CellScheme::StateCity,
                "grid" => CellScheme::Grid { resolution_deg: d.grid_resolution_deg.unwrap_or(0.1) },
                other => {
                    return Err(AppError::Config(format!(
                        "cell_scheme must be state|state_city|grid, got \"{other}\""
                    )))
                }
            };
        } else if d.grid_resolution_deg.is_some() {
            return Err(AppError::Config(
                "grid_resolution_deg requires cell_scheme = \"grid\"".into(),
            ));
        }
        if let Some(b) = d.bucket_hours {
            cfg.dataset.bucket_hours = b;
            // lags default in bucket units, so they follow the bucket length
            cfg.dataset.lags = default_lags(b.max(1).min(24));
        }
        if let Some(z) = d.zero_fill {
            cfg.dataset.zero_fill = z;
        }
        if let Some(l) = d.lags {
            cfg.dataset.lags = l;
        }
        if let Some(k) = d.top_k_conditions {
            cfg.dataset.top_k_conditions = k;
        }
        if let Some(m) = d.smoothing {
            cfg.dataset.smoothing = m;
        }
        if let Some(f) = d.encode_folds {
            cfg.dataset.encode_folds = f;
        }
        if let Some(s) = d.min_date {
            cfg.dataset.min_date = Some(parse_date("min_date", &s)?);
        }
        if let Some(s) = d.max_date {
            cfg.dataset.max_date = Some(parse_date("max_date", &s)?);
        }
    }
    if let Some(s) = raw.split {
        if let Some(strategy) = s.strategy.as_deref() {
            cfg.split_strategy = match strategy {
                "temporal" => SplitStrategy::TemporalHoldout,
                "random" => SplitStrategy::Random,
                other => {
                    return Err(AppError::Config(format!(
                        "split strategy must be temporal|random, got \"{other}\""
                    )))
                }
            };
        }
        if let Some(f) = s.test_fraction {
            cfg.test_fraction = f;
        }
    }
    if let Some(e) = raw.eda {
        if let Some(w) = e.wind_bin_mph {
            cfg.wind_bin_mph = w;
        }
    }
    if let Some(t) = raw.train {
        if let Some(m) = t.models {
            cfg.models = m;
        }
    }
    if let Some(a) = raw.automl {
        if let Some(b) = a.budget {
            cfg.automl_budget = b;
        }
        if let Some(f) = a.folds {
            cfg.automl_folds = f;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the config file, or the built-in defaults when no path is given.
pub fn load_config(path: Option<&Path>) -> Result<AppConfig, AppError> {
    let Some(path) = path else {
        return Ok(AppConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    resolve(raw)
}
