//! K-fold cross-validation. Temporal folds are contiguous runs of distinct
//! time buckets (rows of one bucket never straddle folds); random folds are
//! a seeded shuffle. Every fold split goes through the frame's leakage-safe
//! re-encoding, so fold-train statistics never reach fold-test rows.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::CoreError;
use crate::frame::FeatureFrame;
use crate::metrics::{mse, r_square};
use crate::model::{fit, ModelSpec};
use crate::rng;

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldStrategy {
    /// Contiguous runs of distinct bucket_start values, in time order.
    TemporalContiguous,
    Random,
}

/// Fold id per row. Temporal assignment needs at least `k` distinct buckets.
pub fn fold_assignment(
    frame: &FeatureFrame,
    k: usize,
    strategy: FoldStrategy,
    seed: u64,
) -> Result<Vec<usize>, CoreError> {
    let n = frame.n_rows();
    if k < 2 || k > n {
        return Err(CoreError::InvalidConfig(String::from("need 2 <= k <= n_rows")));
    }
    match strategy {
        FoldStrategy::TemporalContiguous => {
            let mut buckets: Vec<i64> = frame.row_keys.iter().map(|r| r.bucket_start).collect();
            buckets.sort_unstable();
            buckets.dedup();
            let m = buckets.len();
            if m < k {
                return Err(CoreError::TooFewBuckets { need: k, folds: k, got: m });
            }
            // chunk the bucket timeline into k contiguous groups; the
            // remainder goes to the earliest groups
            let base = m / k;
            let rem = m % k;
            let mut fold_of_bucket: BTreeMap<i64, usize> = BTreeMap::new();
            let mut at = 0usize;
            for fold in 0..k {
                let len = base + usize::from(fold < rem);
                for &b in &buckets[at..at + len] {
                    fold_of_bucket.insert(b, fold);
                }
                at += len;
            }
            Ok(frame.row_keys.iter().map(|r| fold_of_bucket[&r.bucket_start]).collect())
        }
        FoldStrategy::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng::seed_rng(seed));
            let mut fold_of = alloc::vec![0usize; n];
            let base = n / k;
            let rem = n % k;
            let mut at = 0usize;
            for fold in 0..k {
                let len = base + usize::from(fold < rem);
                for &i in &order[at..at + len] {
                    fold_of[i] = fold;
                }
                at += len;
            }
            Ok(fold_of)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldScore {
    pub mse: f64,
    /// Absent when the fold's actual values have zero variance (or a
    /// single row), per the metric's precondition.
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<FoldScore>,
    pub mean_mse: f64,
    pub std_mse: f64,
    pub mean_r2: Option<f64>,
    pub std_r2: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn kfold_cv(
    frame: &FeatureFrame,
    spec: &ModelSpec,
    k: usize,
    strategy: FoldStrategy,
    seed: u64,
) -> Result<CvReport, CoreError> {
    let fold_of = fold_assignment(frame, k, strategy, seed)?;
    let mut folds = Vec::with_capacity(k);
    for j in 0..k {
        let mask: Vec<bool> = fold_of.iter().map(|&f| f == j).collect();
        let (train, test) = frame.split_by_mask(&mask, rng::mix_seed(seed, j as u64))?;
        let model = fit(&train, spec)?;
        let preds = model.predict_frame(&test)?;
        let fold_mse = mse(&test.targets, &preds)?;
        let r2 = match r_square(&test.targets, &preds) {
            Ok(v) => Some(v),
            Err(CoreError::ZeroVariance) | Err(CoreError::InvalidConfig(_)) => None,
            Err(e) => return Err(e),
        };
        folds.push(FoldScore { mse: fold_mse, r2 });
    }
    let (mean_mse, std_mse) = mean_std(&folds.iter().map(|f| f.mse).collect::<Vec<_>>());
    let r2s: Vec<f64> = folds.iter().filter_map(|f| f.r2).collect();
    let (mean_r2, std_r2) = if r2s.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&r2s);
        (Some(m), Some(s))
    };
    Ok(CvReport { folds, mean_mse, std_mse, mean_r2, std_r2 })
}
