//! Stacking: base models produce an n x m matrix of out-of-fold predictions
//! (row i is predicted by bases trained without fold(i)), a ridge
//! meta-learner is fit on that matrix, and the bases are refit on the full
//! training frame for prediction time. Row i's target can never influence
//! the model that predicts row i's meta-feature.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cv::{fold_assignment, FoldStrategy};
use crate::error::CoreError;
use crate::frame::{ColumnKind, ColumnMeta, FeatureFrame};
use crate::linear::{fit_ridge, LinearModel};
use crate::model::{fit, ModelSpec, TrainedModel};
use crate::rng;

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct StackConfig {
    pub bases: Vec<ModelSpec>,
    pub folds: usize,
    /// Ridge strength of the meta-learner; the small default stabilizes
    /// collinear base predictions.
    pub meta_lambda: f64,
    pub strategy: FoldStrategy,
    pub seed: u64,
}

impl Default for StackConfig {
    fn default() -> Self {
        StackConfig {
            bases: Vec::new(),
            folds: 5,
            meta_lambda: 1e-3,
            strategy: FoldStrategy::TemporalContiguous,
            seed: 0,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct StackedModel {
    /// Bases refit on the full training frame, in config order.
    pub bases: Vec<TrainedModel>,
    pub meta: LinearModel,
    /// The n x m out-of-fold meta-feature matrix from fitting.
    pub oof: Vec<Vec<f64>>,
    pub config: StackConfig,
}

impl StackedModel {
    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let per_base: Vec<Vec<f64>> = self
            .bases
            .iter()
            .map(|b| b.predict_frame(frame))
            .collect::<Result<_, _>>()?;
        let mut out = Vec::with_capacity(frame.n_rows());
        let mut row = alloc::vec![0.0f64; self.bases.len()];
        for i in 0..frame.n_rows() {
            for (b, preds) in per_base.iter().enumerate() {
                row[b] = preds[i];
            }
            out.push(self.meta.predict_row(&row)?);
        }
        Ok(out)
    }
}

pub fn fit_stacking(frame: &FeatureFrame, config: &StackConfig) -> Result<StackedModel, CoreError> {
    if config.bases.is_empty() {
        return Err(CoreError::InvalidConfig(String::from("stacking needs at least one base")));
    }
    let n = frame.n_rows();
    let m = config.bases.len();
    let fold_of = fold_assignment(frame, config.folds, config.strategy, config.seed)?;

    let mut oof = alloc::vec![alloc::vec![0.0f64; m]; n];
    for j in 0..config.folds {
        let mask: Vec<bool> = fold_of.iter().map(|&f| f == j).collect();
        let holdout_rows: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
        let (train, holdout) = frame.split_by_mask(&mask, rng::mix_seed(config.seed, j as u64))?;
        for (b, spec) in config.bases.iter().enumerate() {
            let model = fit(&train, spec).map_err(|e| CoreError::BaseFitFailed {
                base: spec.name(),
                fold: j,
                cause: e.to_string(),
            })?;
            let preds = model.predict_frame(&holdout).map_err(|e| CoreError::BaseFitFailed {
                base: spec.name(),
                fold: j,
                cause: e.to_string(),
            })?;
            for (p, &row) in preds.iter().zip(&holdout_rows) {
                oof[row][b] = *p;
            }
        }
    }

    // meta-feature frame: one column per base, original row keys and targets
    let columns: Vec<ColumnMeta> = config
        .bases
        .iter()
        .enumerate()
        .map(|(b, s)| ColumnMeta::new(format!("base_{b}_{}", s.name()), ColumnKind::Numeric))
        .collect();
    let mut meta_frame = FeatureFrame::new(columns);
    for i in 0..n {
        meta_frame.push_row(frame.row_keys[i].clone(), &oof[i], frame.targets[i]);
    }
    let meta = fit_ridge(&meta_frame, config.meta_lambda)?;

    let bases: Vec<TrainedModel> = config
        .bases
        .iter()
        .map(|spec| {
            fit(frame, spec).map_err(|e| CoreError::BaseFitFailed {
                base: spec.name(),
                fold: config.folds,
                cause: e.to_string(),
            })
        })
        .collect::<Result<_, _>>()?;

    Ok(StackedModel { bases, meta, oof, config: config.clone() })
}
