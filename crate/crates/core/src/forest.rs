//! Random forest: bagged CART trees with per-split feature subsampling and
//! out-of-bag error. Per-tree seeds are derived as hash(master seed, tree
//! index), so fits are bit-identical across runs and across the serial and
//! rayon-parallel build of this crate.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::CoreError;
use crate::frame::FeatureFrame;
use crate::rng;
use crate::tree::{fit_tree_on, FeatureNames, Tree, TreeConfig};

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    /// Fraction of features drawn per split; overrides `tree.feature_subsample`.
    pub feature_subsample: f64,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            bootstrap: true,
            feature_subsample: 1.0 / 3.0,
            tree: TreeConfig::default(),
            seed: 0,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
    /// Mean squared error over rows left out of at least one bootstrap
    /// sample; None when bootstrap is off or no row was ever out-of-bag.
    pub oob_mse: Option<f64>,
}

impl Forest {
    pub fn predict_row(&self, row: &[f64], names: &FeatureNames) -> Result<f64, CoreError> {
        let mut sum = 0.0;
        for tree in &self.trees {
            sum += tree.predict_row(row, names)?;
        }
        Ok(sum / self.trees.len() as f64)
    }

    pub fn predict_frame(&self, frame: &FeatureFrame) -> Result<Vec<f64>, CoreError> {
        let names = FeatureNames::Frame(frame);
        (0..frame.n_rows()).map(|i| self.predict_row(frame.row(i), &names)).collect()
    }
}

fn fit_one(frame: &FeatureFrame, config: &ForestConfig, index: usize) -> Result<(Tree, Vec<bool>), CoreError> {
    let n = frame.n_rows();
    let tree_seed = rng::mix_seed(config.seed, index as u64);
    let mut in_bag = alloc::vec![false; n];
    let rows: Vec<usize> = if config.bootstrap {
        let mut r = rng::seed_rng(rng::mix_seed(tree_seed, 0));
        (0..n)
            .map(|_| {
                let i = r.random_range(0..n);
                in_bag[i] = true;
                i
            })
            .collect()
    } else {
        in_bag.iter_mut().for_each(|b| *b = true);
        (0..n).collect()
    };
    let tree_config = TreeConfig {
        feature_subsample: config.feature_subsample,
        seed: rng::mix_seed(tree_seed, 1),
        ..config.tree.clone()
    };
    let weights = alloc::vec![1.0; n];
    let tree = fit_tree_on(frame, &frame.targets, &weights, rows, &tree_config)?;
    Ok((tree, in_bag))
}

pub fn fit_forest(frame: &FeatureFrame, config: &ForestConfig) -> Result<Forest, CoreError> {
    if config.n_trees < 1 {
        return Err(CoreError::InvalidConfig(String::from("n_trees must be >= 1")));
    }
    if !(config.feature_subsample > 0.0 && config.feature_subsample <= 1.0) {
        return Err(CoreError::InvalidConfig(String::from("feature_subsample must be in (0,1]")));
    }
    if frame.is_empty() {
        return Err(CoreError::EmptyFrame);
    }

    #[cfg(feature = "parallel")]
    let fits: Vec<(Tree, Vec<bool>)> = {
        use rayon::prelude::*;
        (0..config.n_trees)
            .into_par_iter()
            .map(|t| fit_one(frame, config, t))
            .collect::<Result<_, _>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let fits: Vec<(Tree, Vec<bool>)> = (0..config.n_trees)
        .map(|t| fit_one(frame, config, t))
        .collect::<Result<_, _>>()?;

    let oob_mse = if config.bootstrap {
        let n = frame.n_rows();
        let names = FeatureNames::Frame(frame);
        let mut sums = alloc::vec![0.0f64; n];
        let mut counts = alloc::vec![0usize; n];
        for (tree, in_bag) in &fits {
            for i in 0..n {
                if !in_bag[i] {
                    sums[i] += tree.predict_row(frame.row(i), &names)?;
                    counts[i] += 1;
                }
            }
        }
        let mut err = 0.0;
        let mut covered = 0usize;
        for i in 0..n {
            if counts[i] > 0 {
                let d = frame.targets[i] - sums[i] / counts[i] as f64;
                err += d * d;
                covered += 1;
            }
        }
        (covered > 0).then(|| err / covered as f64)
    } else {
        None
    };

    Ok(Forest { trees: fits.into_iter().map(|(t, _)| t).collect(), oob_mse })
}
