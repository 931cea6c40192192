//! AdaBoost.R2 with linear loss. Base trees are fit with the current sample
//! weights directly in the weighted SSE criterion (no resampling), so a run
//! is a deterministic function of (data, config). The fitted model keeps the
//! full weight trace so the update arithmetic can be audited round by round.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::frame::FeatureFrame;
use crate::rng;
use crate::tree::{fit_tree_weighted, FeatureNames, Tree, TreeConfig};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoostConfig {
    pub n_rounds: usize,
    pub base: TreeConfig,
    pub seed: u64,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        AdaBoostConfig {
            n_rounds: 50,
            base: TreeConfig { max_depth: 3, ..TreeConfig::default() },
            seed: 0,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct AdaBoost {
    pub trees: Vec<Tree>,
    /// Per-kept-round ln(1/beta_t); +inf marks a round that fit exactly.
    pub log_inv_beta: Vec<f64>,
    /// weight_history[0] is the uniform start; entry t is the normalized
    /// vector after round t's update. A round that stops fitting (avg loss 0
    /// or >= 0.5) appends no entry.
    pub weight_history: Vec<Vec<f64>>,
}

/// Weighted median: smallest value whose cumulative weight reaches half the
/// total, so exact ties resolve to the lower value.
pub fn weighted_median(values: &[f64], weights: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), weights.len());
    debug_assert!(!values.is_empty());
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let half = 0.5 * total;
    let mut cum = 0.0;
    for &i in &order {
        cum += weights[i];
        if cum >= half {
            return values[i];
        }
    }
    values[*order.last().unwrap()]
}

impl AdaBoost {
    pub fn predict_row(&self, row: &[f64], names: &FeatureNames) -> Result<f64, CoreError> {
        let preds: Vec<f64> = self
            .trees
            .iter()
            .map(|t| t.predict_row(row, names))
            .collect::<Result<_, _>>()?;
        Ok(weighted_median(&preds, &self.log_inv_beta))
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let names = FeatureNames::Frame(frame);
        (0..frame.n_rows()).map(|i| self.predict_row(frame.row(i), &names)).collect()
    }
}

pub fn fit_adaboost_r2(frame: &FeatureFrame, config: &AdaBoostConfig) -> Result<AdaBoost, CoreError> {
    if config.n_rounds < 1 {
        return Err(CoreError::InvalidConfig(String::from("n_rounds must be >= 1")));
    }
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }
    let n = frame.n_rows();
    let mut weights = alloc::vec![1.0 / n as f64; n];
    let mut model = AdaBoost {
        trees: Vec::new(),
        log_inv_beta: Vec::new(),
        weight_history: alloc::vec![weights.clone()],
    };

    for t in 0..config.n_rounds {
        let tree_config = TreeConfig {
            seed: rng::mix_seed(config.seed, t as u64),
            ..config.base.clone()
        };
        let tree = fit_tree_weighted(frame, &weights, &tree_config)?;
        let preds = tree.predict_frame(frame)?;
        let errs: Vec<f64> = preds
            .iter()
            .zip(&frame.targets)
            .map(|(p, y)| (y - p).abs())
            .collect();
        let max_err = errs.iter().fold(0.0f64, |a, &b| a.max(b));
        if max_err == 0.0 {
            // exact fit: this round alone decides every prediction
            model.trees.push(tree);
            model.log_inv_beta.push(f64::INFINITY);
            break;
        }
        let avg_loss: f64 = errs
            .iter()
            .zip(&weights)
            .map(|(e, w)| w * (e / max_err))
            .sum();
        if avg_loss >= 0.5 {
            break; // round discarded
        }
        let beta = avg_loss / (1.0 - avg_loss);
        model.trees.push(tree);
        model.log_inv_beta.push((1.0 / beta).ln());

        for (w, e) in weights.iter_mut().zip(&errs) {
            *w *= beta.powf(1.0 - e / max_err);
        }
        let sum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= sum);
        model.weight_history.push(weights.clone());
    }

    if model.trees.is_empty() {
        return Err(CoreError::NoUsableRound);
    }
    Ok(model)
}
