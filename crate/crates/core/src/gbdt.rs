//! Histogram gradient boosting for squared loss: F_0 is the target mean and
//! each round adds `lr * tree(residuals)`. Trees split only at equal-frequency
//! bin edges computed once per tree. Growth is either depth-wise (CART
//! recursion) or leaf-wise (always expand the pending leaf with the largest
//! gain, capped at `max_leaves`).
//!
//! With squared loss and non-negative split gains the recorded training loss
//! sequence is non-increasing for any learning rate in (0, 2).

use alloc::string::String;
use alloc::vec::Vec;

use crate::encode::EncodingTable;
use crate::error::CoreError;
use crate::frame::FeatureFrame;
use crate::metrics::mse;
use crate::rng;
use crate::tree::{
    choose_split, compute_tree_edges, fit_tree_on, FeatureNames, Node, SplitMode, Tree, TreeConfig,
};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    DepthWise,
    LeafWise { max_leaves: usize },
}

/// How raw categorical columns riding along in the frame are handled.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatEncoding {
    None,
    /// Re-encode each raw categorical column with out-of-fold target means
    /// before fitting; the full-data table is kept for prediction.
    Target,
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub growth: Growth,
    pub bins: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_gain: f64,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            n_rounds: 200,
            learning_rate: 0.1,
            growth: Growth::LeafWise { max_leaves: 31 },
            bins: 64,
            max_depth: 32,
            min_samples_leaf: 5,
            min_gain: 1e-12,
            seed: 0,
        }
    }
}

impl BoostConfig {
    fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            min_gain: self.min_gain,
            feature_subsample: 1.0,
            split_mode: SplitMode::Histogram(self.bins),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), CoreError> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(CoreError::InvalidConfig(String::from("learning_rate must be in (0,1]")));
        }
        if self.bins < 2 {
            return Err(CoreError::InvalidConfig(String::from("histogram bins must be >= 2")));
        }
        if let Growth::LeafWise { max_leaves } = self.growth {
            if max_leaves < 2 {
                return Err(CoreError::InvalidConfig(String::from("max_leaves must be >= 2")));
            }
        }
        Ok(())
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Gbdt {
    pub base: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Training MSE after the constant fit and after each round.
    pub loss_curve: Vec<f64>,
    /// (column index, table) pairs when fit with target encoding.
    pub encoders: Vec<(usize, EncodingTable)>,
}

impl Gbdt {
    /// Predicts one row whose categorical columns are already numeric.
    pub fn predict_row(&self, row: &[f64], names: &FeatureNames) -> Result<f64, CoreError> {
        let mut acc = self.base;
        for tree in &self.trees {
            acc += self.learning_rate * tree.predict_row(row, names)?;
        }
        Ok(acc)
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let names = FeatureNames::Frame(frame);
        let mut out = Vec::with_capacity(frame.n_rows());
        let mut scratch: Vec<f64> = Vec::new();
        for i in 0..frame.n_rows() {
            let row = frame.row(i);
            if self.encoders.is_empty() {
                out.push(self.predict_row(row, &names)?);
                continue;
            }
            scratch.clear();
            scratch.extend_from_slice(row);
            for (j, table) in &self.encoders {
                if let Some(cat) = frame.raw_categories.get(j) {
                    scratch[*j] = table.encode(cat.codes[i]);
                }
            }
            out.push(self.predict_row(&scratch, &names)?);
        }
        Ok(out)
    }
}

/// One leaf-wise tree over `rows` against target slice `y`.
fn grow_leaf_wise(
    frame: &FeatureFrame,
    y: &[f64],
    weights: &[f64],
    rows: Vec<usize>,
    config: &TreeConfig,
    max_leaves: usize,
) -> Tree {
    struct Pending {
        node: usize,
        rows: Vec<usize>,
        depth: usize,
        cand: Option<crate::tree::SplitCandidate>,
    }

    let edges = compute_tree_edges(frame, &rows, config);
    let features: Vec<usize> = (0..frame.n_cols()).collect();
    let mean = |rows: &[usize]| -> f64 {
        let mut sw = 0.0;
        let mut swy = 0.0;
        for &i in rows {
            sw += weights[i];
            swy += weights[i] * y[i];
        }
        if sw > 0.0 { swy / sw } else { 0.0 }
    };
    let consider = |rows: &[usize], depth: usize| -> Option<crate::tree::SplitCandidate> {
        if depth >= config.max_depth || rows.len() < 2 * config.min_samples_leaf {
            return None;
        }
        choose_split(frame, y, weights, rows, &features, config, edges.as_ref())
    };

    let mut nodes = alloc::vec![Node::Leaf { value: mean(&rows), count: rows.len() }];
    let root_cand = consider(&rows, 0);
    let mut pending = alloc::vec![Pending { node: 0, rows, depth: 0, cand: root_cand }];
    let mut n_leaves = 1usize;

    while n_leaves < max_leaves {
        // earliest-created pending leaf wins gain ties
        let mut pick: Option<usize> = None;
        for (k, p) in pending.iter().enumerate() {
            if let Some(c) = &p.cand {
                if pick.map_or(true, |b| c.gain > pending[b].cand.as_ref().unwrap().gain) {
                    pick = Some(k);
                }
            }
        }
        let Some(k) = pick else { break };
        let Pending { node, rows, depth, cand } = pending.swap_remove(k);
        let cand = cand.unwrap();

        let (mut left_rows, mut right_rows) = (Vec::new(), Vec::new());
        for &i in &rows {
            if frame.value(i, cand.feature) <= cand.threshold {
                left_rows.push(i);
            } else {
                right_rows.push(i);
            }
        }
        let left = nodes.len();
        nodes.push(Node::Leaf { value: mean(&left_rows), count: left_rows.len() });
        let right = nodes.len();
        nodes.push(Node::Leaf { value: mean(&right_rows), count: right_rows.len() });
        nodes[node] = Node::Split { feature: cand.feature, threshold: cand.threshold, left, right };
        n_leaves += 1;

        let lc = consider(&left_rows, depth + 1);
        pending.push(Pending { node: left, rows: left_rows, depth: depth + 1, cand: lc });
        let rc = consider(&right_rows, depth + 1);
        pending.push(Pending { node: right, rows: right_rows, depth: depth + 1, cand: rc });
    }

    Tree { nodes, n_features: frame.n_cols() }
}

pub fn fit_gbdt(
    frame: &FeatureFrame,
    config: &BoostConfig,
    encoding: CatEncoding,
) -> Result<Gbdt, CoreError> {
    config.validate()?;
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }

    let mut encoders: Vec<(usize, EncodingTable)> = Vec::new();
    let owned;
    let fit_frame: &FeatureFrame = if encoding == CatEncoding::Target && !frame.raw_categories.is_empty() {
        let mut work = frame.clone();
        for (&j, cat) in &frame.raw_categories {
            let oof = crate::encode::target_encode(
                &cat.codes,
                &frame.targets,
                cat.folds,
                cat.smoothing,
                rng::mix_seed(config.seed, j as u64),
            )?;
            for (i, v) in oof.into_iter().enumerate() {
                work.set_value(i, j, v);
            }
            encoders.push((j, EncodingTable::fit(&cat.codes, &frame.targets, cat.smoothing)));
        }
        owned = work;
        &owned
    } else {
        frame
    };

    let n = fit_frame.n_rows();
    let y = &fit_frame.targets;
    let base = y.iter().sum::<f64>() / n as f64;
    let mut current = alloc::vec![base; n];
    let mut model = Gbdt {
        base,
        learning_rate: config.learning_rate,
        trees: Vec::new(),
        loss_curve: alloc::vec![mse(y, &current)?],
        encoders,
    };

    let tree_config = config.tree_config();
    let weights = alloc::vec![1.0; n];
    let names = FeatureNames::Frame(fit_frame);
    for _ in 0..config.n_rounds {
        let residuals: Vec<f64> = y.iter().zip(&current).map(|(a, b)| a - b).collect();
        let tree = match config.growth {
            Growth::DepthWise => {
                fit_tree_on(fit_frame, &residuals, &weights, (0..n).collect(), &tree_config)?
            }
            Growth::LeafWise { max_leaves } => grow_leaf_wise(
                fit_frame,
                &residuals,
                &weights,
                (0..n).collect(),
                &tree_config,
                max_leaves,
            ),
        };
        for i in 0..n {
            current[i] += config.learning_rate * tree.predict_row(fit_frame.row(i), &names)?;
        }
        model.trees.push(tree);
        model.loss_curve.push(mse(y, &current)?);
    }
    Ok(model)
}
