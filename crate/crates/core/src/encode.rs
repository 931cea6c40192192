//! Smoothed target encoding for categorical columns. Training rows are
//! encoded out-of-fold so a row's own target never feeds its encoding;
//! unseen rows go through a table fitted on the full training data.

use alloc::collections::BTreeMap;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::CoreError;
use crate::rng;

/// Per-category smoothed means fitted on full training data, applied to
/// rows outside it (test or prediction time).
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingTable {
    pub means: BTreeMap<u32, f64>,
    pub global_mean: f64,
}

impl EncodingTable {
    pub fn fit(codes: &[u32], targets: &[f64], smoothing: f64) -> Self {
        let n = targets.len();
        let global_mean = if n == 0 { 0.0 } else { targets.iter().sum::<f64>() / n as f64 };
        let mut stats: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
        for (&c, &y) in codes.iter().zip(targets) {
            let e = stats.entry(c).or_insert((0.0, 0));
            e.0 += y;
            e.1 += 1;
        }
        let means = stats
            .into_iter()
            .map(|(c, (sum, cnt))| {
                (c, (sum + smoothing * global_mean) / (cnt as f64 + smoothing))
            })
            .collect();
        EncodingTable { means, global_mean }
    }

    /// Unseen categories encode to the train global mean.
    pub fn encode(&self, code: u32) -> f64 {
        self.means.get(&code).copied().unwrap_or(self.global_mean)
    }
}

/// Out-of-fold target encoding: row i's code is replaced by the smoothed
/// mean target of its category over the K-1 folds that exclude row i.
/// Fold assignment is a seeded shuffle chunked into K near-equal parts.
pub fn target_encode(
    codes: &[u32],
    targets: &[f64],
    folds: usize,
    smoothing: f64,
    seed: u64,
) -> Result<Vec<f64>, CoreError> {
    let fold_of = assign_folds(codes.len(), folds, seed)?;
    target_encode_with_folds(codes, targets, &fold_of, folds, smoothing)
}

/// Same as [`target_encode`] but with caller-supplied fold labels in 0..folds.
pub fn target_encode_with_folds(
    codes: &[u32],
    targets: &[f64],
    fold_of: &[usize],
    folds: usize,
    smoothing: f64,
) -> Result<Vec<f64>, CoreError> {
    if folds < 2 {
        return Err(CoreError::InvalidConfig("target encoding needs K >= 2 folds".to_string()));
    }
    let n = codes.len();
    if targets.len() != n || fold_of.len() != n {
        return Err(CoreError::LengthMismatch { left: n, right: targets.len() });
    }
    // per-fold per-category sums plus per-fold totals; OOF stats are total minus fold
    let mut cat_total: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    let mut cat_fold: BTreeMap<(u32, usize), (f64, usize)> = BTreeMap::new();
    let mut fold_total: Vec<(f64, usize)> = alloc::vec![(0.0, 0); folds];
    for i in 0..n {
        let (c, f, y) = (codes[i], fold_of[i], targets[i]);
        let e = cat_total.entry(c).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
        let e = cat_fold.entry((c, f)).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
        fold_total[f].0 += y;
        fold_total[f].1 += 1;
    }
    let grand: (f64, usize) = fold_total.iter().fold((0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (c, f) = (codes[i], fold_of[i]);
        let total = cat_total[&c];
        let own = cat_fold.get(&(c, f)).copied().unwrap_or((0.0, 0));
        let oof_sum = total.0 - own.0;
        let oof_cnt = total.1 - own.1;
        let g_sum = grand.0 - fold_total[f].0;
        let g_cnt = grand.1 - fold_total[f].1;
        let g = if g_cnt == 0 { 0.0 } else { g_sum / g_cnt as f64 };
        let denom = oof_cnt as f64 + smoothing;
        let enc = if denom > 0.0 { (oof_sum + smoothing * g) / denom } else { g };
        out.push(enc);
    }
    Ok(out)
}

fn assign_folds(n: usize, folds: usize, seed: u64) -> Result<Vec<usize>, CoreError> {
    if folds < 2 {
        return Err(CoreError::InvalidConfig("target encoding needs K >= 2 folds".to_string()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seed_rng(seed));
    let mut fold_of = alloc::vec![0usize; n];
    let base = n / folds;
    let rem = n % folds;
    let mut pos = 0;
    for f in 0..folds {
        let len = base + usize::from(f < rem);
        for &i in &order[pos..pos + len] {
            fold_of[i] = f;
        }
        pos += len;
    }
    Ok(fold_of)
}
