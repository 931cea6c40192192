//! Model specification and dispatch: one enum naming every trainable
//! configuration, one fitted-model wrapper that carries the training schema
//! fingerprint and refuses frames whose schema differs.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::adaboost::{fit_adaboost_r2, AdaBoost, AdaBoostConfig};
use crate::error::CoreError;
use crate::forest::{fit_forest, Forest, ForestConfig};
use crate::frame::FeatureFrame;
use crate::gbdt::{fit_gbdt, BoostConfig, CatEncoding, Gbdt, Growth};
use crate::linear::{fit_elastic_net, fit_huber, fit_ridge, LinearModel};
use crate::lstm::{fit_lstm, Lstm, LstmConfig, SeqBatch, SeqWindow};
use crate::rng;
use crate::search::{automl_search, SearchSpace};
use crate::stack::{fit_stacking, StackConfig, StackedModel};
use crate::tree::{fit_tree, FeatureNames, Tree, TreeConfig};

/// Column-name prefix of lagged-count features, which sequence windows drop
/// because the window itself supplies the history.
pub const LAG_COLUMN_PREFIX: &str = "count_lag_";

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LstmAdapterConfig {
    /// Steps per training window; the target is the count one bucket later.
    pub window: usize,
    pub lstm: LstmConfig,
}

impl Default for LstmAdapterConfig {
    fn default() -> Self {
        LstmAdapterConfig { window: 28, lstm: LstmConfig::default() }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    DecisionTree(TreeConfig),
    RandomForest(ForestConfig),
    AdaBoostR2(AdaBoostConfig),
    Gbdt { config: BoostConfig, encoding: CatEncoding },
    Lasso { lambda: f64, tol: f64, max_iter: usize },
    ElasticNet { lambda: f64, alpha: f64, tol: f64, max_iter: usize },
    Ridge { lambda: f64 },
    Huber { delta: f64, tol: f64, max_iter: usize },
    Lstm(LstmAdapterConfig),
    Stacking(StackConfig),
    AutoMl(SearchSpace),
}

impl ModelSpec {
    pub fn name(&self) -> String {
        match self {
            ModelSpec::DecisionTree(_) => "decision_tree".to_string(),
            ModelSpec::RandomForest(_) => "random_forest".to_string(),
            ModelSpec::AdaBoostR2(_) => "adaboost_r2".to_string(),
            ModelSpec::Gbdt { config, encoding } => match (config.growth, encoding) {
                (Growth::LeafWise { .. }, CatEncoding::None) => "gbdt_leaf_wise".to_string(),
                (Growth::LeafWise { .. }, CatEncoding::Target) => {
                    "gbdt_leaf_wise_target".to_string()
                }
                (Growth::DepthWise, CatEncoding::Target) => "gbdt_target_encoded".to_string(),
                (Growth::DepthWise, CatEncoding::None) => "gbdt_depth_wise".to_string(),
            },
            ModelSpec::Lasso { .. } => "lasso".to_string(),
            ModelSpec::ElasticNet { .. } => "elastic_net".to_string(),
            ModelSpec::Ridge { .. } => "ridge".to_string(),
            ModelSpec::Huber { .. } => "huber".to_string(),
            ModelSpec::Lstm(_) => "lstm".to_string(),
            ModelSpec::Stacking(_) => "stacking".to_string(),
            ModelSpec::AutoMl(_) => "auto_ml".to_string(),
        }
    }

    /// Digest of the full configuration, stable across runs.
    pub fn config_digest(&self) -> u64 {
        rng::fnv1a64(format!("{self:?}").as_bytes())
    }

    /// Re-seeds every stochastic component from `seed`, leaving the rest of
    /// the configuration untouched. Nested specs get derived streams.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            ModelSpec::DecisionTree(c) => c.seed = seed,
            ModelSpec::RandomForest(c) => c.seed = seed,
            ModelSpec::AdaBoostR2(c) => c.seed = seed,
            ModelSpec::Gbdt { config, .. } => config.seed = seed,
            ModelSpec::Lasso { .. } | ModelSpec::ElasticNet { .. } => {}
            ModelSpec::Ridge { .. } | ModelSpec::Huber { .. } => {}
            ModelSpec::Lstm(c) => c.lstm.seed = seed,
            ModelSpec::Stacking(c) => {
                c.seed = seed;
                c.bases = c
                    .bases
                    .drain(..)
                    .enumerate()
                    .map(|(i, b)| b.with_seed(rng::mix_seed(seed, i as u64 + 1)))
                    .collect();
            }
            ModelSpec::AutoMl(s) => s.seed = seed,
        }
        self
    }
}

/// LSTM adapter over tabular frames: per-cell series in bucket order form
/// the training windows; the full train series is retained so prediction
/// can place any later bucket after its true feature history.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct LstmRegressor {
    pub config: LstmAdapterConfig,
    /// Frame columns kept inside windows (lagged-count columns dropped).
    pub feature_cols: Vec<usize>,
    /// None when no cell had more than `window` buckets to learn from.
    pub lstm: Option<Lstm>,
    /// Per-cell train history: (bucket_start, kept features), time-sorted.
    pub series: BTreeMap<String, Vec<(i64, Vec<f64>)>>,
    /// Train target mean, used when a row lacks a full window of history.
    pub fallback: f64,
}

impl LstmRegressor {
    fn kept_features(&self, row: &[f64]) -> Vec<f64> {
        self.feature_cols.iter().map(|&j| row[j]).collect()
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let mut out = alloc::vec![self.fallback; frame.n_rows()];
        let mut by_cell: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, key) in frame.row_keys.iter().enumerate() {
            by_cell.entry(key.cell.as_str()).or_default().push(i);
        }
        let Some(lstm) = &self.lstm else {
            return Ok(out);
        };
        let w = self.config.window;
        for (cell, mut rows) in by_cell {
            rows.sort_by_key(|&i| frame.row_keys[i].bucket_start);
            let mut timeline: Vec<(i64, Vec<f64>)> =
                self.series.get(cell).cloned().unwrap_or_default();
            for i in rows {
                let bucket = frame.row_keys[i].bucket_start;
                let feats = self.kept_features(frame.row(i));
                let before = timeline.partition_point(|(b, _)| *b < bucket);
                if before >= w {
                    let steps: Vec<Vec<f64>> =
                        timeline[before - w..before].iter().map(|(_, f)| f.clone()).collect();
                    out[i] = lstm.predict_window(&steps);
                }
                timeline.insert(before, (bucket, feats));
            }
        }
        Ok(out)
    }
}

pub fn fit_lstm_regressor(
    frame: &FeatureFrame,
    config: &LstmAdapterConfig,
) -> Result<LstmRegressor, CoreError> {
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    if config.window < 1 {
        return Err(CoreError::InvalidConfig(String::from("window must be >= 1")));
    }
    let feature_cols: Vec<usize> = frame
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.name.starts_with(LAG_COLUMN_PREFIX))
        .map(|(j, _)| j)
        .collect();
    let fallback = frame.targets.iter().sum::<f64>() / frame.n_rows() as f64;

    let mut by_cell: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, key) in frame.row_keys.iter().enumerate() {
        by_cell.entry(key.cell.clone()).or_default().push(i);
    }
    let mut series = BTreeMap::new();
    let mut batches: Vec<SeqBatch> = Vec::new();
    for (cell, mut rows) in by_cell {
        rows.sort_by_key(|&i| frame.row_keys[i].bucket_start);
        let feats: Vec<(i64, Vec<f64>)> = rows
            .iter()
            .map(|&i| {
                (
                    frame.row_keys[i].bucket_start,
                    feature_cols.iter().map(|&j| frame.value(i, j)).collect(),
                )
            })
            .collect();
        let mut windows = Vec::new();
        for t in config.window..rows.len() {
            let steps: Vec<Vec<f64>> =
                feats[t - config.window..t].iter().map(|(_, f)| f.clone()).collect();
            windows.push(SeqWindow { steps, target: frame.targets[rows[t]] });
        }
        if !windows.is_empty() {
            batches.push(SeqBatch { cell: cell.clone(), windows });
        }
        series.insert(cell, feats);
    }

    let lstm = if batches.is_empty() { None } else { Some(fit_lstm(&batches, &config.lstm)?) };
    Ok(LstmRegressor { config: config.clone(), feature_cols, lstm, series, fallback })
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Tree(Tree),
    Forest(Forest),
    AdaBoost(AdaBoost),
    Gbdt(Gbdt),
    Linear(LinearModel),
    Lstm(LstmRegressor),
    Stacked(StackedModel),
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    /// Schema fingerprint of the training frame; predict frames must match.
    pub schema: u64,
    /// For auto_ml, the concrete winning specification.
    pub resolved: Option<Box<ModelSpec>>,
    pub inner: Fitted,
}

impl TrainedModel {
    pub fn name(&self) -> String {
        self.spec.name()
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let got = frame.schema_fingerprint();
        if got != self.schema {
            return Err(CoreError::FingerprintMismatch {
                model: format!("{:016x}", self.schema),
                frame: format!("{got:016x}"),
            });
        }
        match &self.inner {
            Fitted::Tree(m) => m.predict_frame(frame),
            Fitted::Forest(m) => m.predict_frame(frame),
            Fitted::AdaBoost(m) => m.predict_frame(frame),
            Fitted::Gbdt(m) => m.predict_frame(frame),
            Fitted::Linear(m) => m.predict_frame(frame),
            Fitted::Lstm(m) => m.predict_frame(frame),
            Fitted::Stacked(m) => m.predict_frame(frame),
        }
    }

    /// Prediction for one bare feature row. Sequence and stacking models
    /// need row keys or base dispatch, so they only support frame input.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, CoreError> {
        match &self.inner {
            Fitted::Tree(m) => m.predict_row(row, &FeatureNames::None),
            Fitted::Forest(m) => m.predict_row(row, &FeatureNames::None),
            Fitted::AdaBoost(m) => m.predict_row(row, &FeatureNames::None),
            Fitted::Gbdt(m) => m.predict_row(row, &FeatureNames::None),
            Fitted::Linear(m) => m.predict_row(row),
            Fitted::Lstm(_) | Fitted::Stacked(_) => Err(CoreError::InvalidConfig(String::from(
                "model needs a full frame to predict",
            ))),
        }
    }
}

pub fn fit(frame: &FeatureFrame, spec: &ModelSpec) -> Result<TrainedModel, CoreError> {
    let schema = frame.schema_fingerprint();
    let mut resolved = None;
    let inner = match spec {
        ModelSpec::DecisionTree(c) => Fitted::Tree(fit_tree(frame, c)?),
        ModelSpec::RandomForest(c) => Fitted::Forest(fit_forest(frame, c)?),
        ModelSpec::AdaBoostR2(c) => Fitted::AdaBoost(fit_adaboost_r2(frame, c)?),
        ModelSpec::Gbdt { config, encoding } => Fitted::Gbdt(fit_gbdt(frame, config, *encoding)?),
        ModelSpec::Lasso { lambda, tol, max_iter } => {
            Fitted::Linear(fit_elastic_net(frame, *lambda, 1.0, *tol, *max_iter)?)
        }
        ModelSpec::ElasticNet { lambda, alpha, tol, max_iter } => {
            Fitted::Linear(fit_elastic_net(frame, *lambda, *alpha, *tol, *max_iter)?)
        }
        ModelSpec::Ridge { lambda } => Fitted::Linear(fit_ridge(frame, *lambda)?),
        ModelSpec::Huber { delta, tol, max_iter } => {
            Fitted::Linear(fit_huber(frame, *delta, *tol, *max_iter)?)
        }
        ModelSpec::Lstm(c) => Fitted::Lstm(fit_lstm_regressor(frame, c)?),
        ModelSpec::Stacking(c) => Fitted::Stacked(fit_stacking(frame, c)?),
        ModelSpec::AutoMl(space) => {
            let (best, _) = automl_search(frame, space)?;
            let trained = fit(frame, &best)?;
            resolved = Some(Box::new(best));
            trained.inner
        }
    };
    Ok(TrainedModel { spec: spec.clone(), schema, resolved, inner })
}
