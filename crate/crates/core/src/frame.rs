//! Dense feature matrix with column metadata, row-aligned targets and
//! spatio-temporal row keys, plus the train/test splitting logic.
//!
//! Splitting re-fits every leakage-sensitive column (target encodings, cell
//! rate columns) from the train rows alone, so no test-row target can reach
//! a train-time statistic.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;

use crate::encode::{self, EncodingTable};
use crate::error::CoreError;
use crate::rng;

/// Column name used for per-cell mean historical count features. Splits
/// recompute columns with this name from train rows only.
pub const CELL_RATE_COLUMN: &str = "cell_mean_count";

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    OneHot,
    TargetEncoded,
    Cyclic,
}

impl ColumnKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::OneHot => "one-hot",
            ColumnKind::TargetEncoded => "target-encoded",
            ColumnKind::Cyclic => "cyclic",
        }
    }

    pub fn parse(s: &str) -> Option<ColumnKind> {
        match s {
            "numeric" => Some(ColumnKind::Numeric),
            "one-hot" => Some(ColumnKind::OneHot),
            "target-encoded" => Some(ColumnKind::TargetEncoded),
            "cyclic" => Some(ColumnKind::Cyclic),
            _ => None,
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnMeta { name: name.into(), kind }
    }
}

/// (spatial cell, bucket start) identity of one frame row. Bucket starts are
/// seconds since the epoch of the naive local timestamp.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowKey {
    pub cell: String,
    pub bucket_start: i64,
}

/// Raw categorical codes backing a target-encoded column, kept so a split
/// can re-fit the encoding on train rows only.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone)]
pub struct CatColumn {
    pub vocab: Vec<String>,
    pub codes: Vec<u32>,
    pub folds: usize,
    pub smoothing: f64,
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    TemporalHoldout,
    Random,
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub strategy: SplitStrategy,
    pub test_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn temporal(test_fraction: f64) -> Self {
        SplitSpec { strategy: SplitStrategy::TemporalHoldout, test_fraction, seed: 0 }
    }

    pub fn random(test_fraction: f64, seed: u64) -> Self {
        SplitSpec { strategy: SplitStrategy::Random, test_fraction, seed }
    }
}

/// Row-major feature matrix with metadata and targets.
#[derive(Debug, Clone)]
pub struct FeatureFrame {
    n_cols: usize,
    data: Vec<f64>,
    pub columns: Vec<ColumnMeta>,
    pub targets: Vec<f64>,
    pub row_keys: Vec<RowKey>,
    pub raw_categories: BTreeMap<usize, CatColumn>,
}

impl FeatureFrame {
    pub fn new(columns: Vec<ColumnMeta>) -> Self {
        let n_cols = columns.len();
        FeatureFrame {
            n_cols,
            data: Vec::new(),
            columns,
            targets: Vec::new(),
            row_keys: Vec::new(),
            raw_categories: BTreeMap::new(),
        }
    }

    pub fn from_parts(
        columns: Vec<ColumnMeta>,
        data: Vec<f64>,
        targets: Vec<f64>,
        row_keys: Vec<RowKey>,
    ) -> Result<Self, CoreError> {
        let n_cols = columns.len();
        if n_cols == 0 || targets.len() != row_keys.len() || data.len() != targets.len() * n_cols {
            return Err(CoreError::LengthMismatch { left: data.len(), right: targets.len() * n_cols });
        }
        Ok(FeatureFrame { n_cols, data, columns, targets, row_keys, raw_categories: BTreeMap::new() })
    }

    pub fn push_row(&mut self, key: RowKey, features: &[f64], target: f64) {
        assert_eq!(features.len(), self.n_cols, "row width must match column metadata");
        debug_assert!(features.iter().all(|v| v.is_finite()), "features must be imputed before framing");
        self.data.extend_from_slice(features);
        self.targets.push(target);
        self.row_keys.push(key);
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn set_value(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n_cols + j] = v;
    }

    pub fn column_vec(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn find_column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureFrame {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        let mut targets = Vec::with_capacity(idx.len());
        let mut row_keys = Vec::with_capacity(idx.len());
        for &i in idx {
            data.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
            row_keys.push(self.row_keys[i].clone());
        }
        let raw_categories = self
            .raw_categories
            .iter()
            .map(|(&col, cat)| {
                let codes = idx.iter().map(|&i| cat.codes[i]).collect();
                (col, CatColumn { vocab: cat.vocab.clone(), codes, folds: cat.folds, smoothing: cat.smoothing })
            })
            .collect();
        FeatureFrame {
            n_cols: self.n_cols,
            data,
            columns: self.columns.clone(),
            targets,
            row_keys,
            raw_categories,
        }
    }

    /// Fingerprint of the column layout only: names and kinds. Models check
    /// this against incoming frames before predicting.
    pub fn schema_fingerprint(&self) -> u64 {
        let mut buf = Vec::new();
        for c in &self.columns {
            buf.extend_from_slice(c.name.as_bytes());
            buf.push(0);
            buf.extend_from_slice(c.kind.as_str().as_bytes());
            buf.push(0);
        }
        rng::fnv1a64(&buf)
    }

    /// Fingerprint of the full contents: layout, row keys, features, targets.
    pub fn fingerprint(&self) -> u64 {
        let mut buf = Vec::new();
        buf.extend_from_slice(&(self.n_rows() as u64).to_le_bytes());
        buf.extend_from_slice(&self.schema_fingerprint().to_le_bytes());
        for key in &self.row_keys {
            buf.extend_from_slice(key.cell.as_bytes());
            buf.push(0);
            buf.extend_from_slice(&key.bucket_start.to_le_bytes());
        }
        for v in &self.data {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        for v in &self.targets {
            buf.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        rng::fnv1a64(&buf)
    }

    /// Train/test split per `spec`. Temporal holdout places the last
    /// ceil(test_fraction * buckets) buckets of every cell in test; random
    /// splits are seed-deterministic. Target-encoded and cell-rate columns
    /// are recomputed from train rows only.
    pub fn split(&self, spec: &SplitSpec) -> Result<(FeatureFrame, FeatureFrame), CoreError> {
        if self.is_empty() {
            return Err(CoreError::EmptyFrame);
        }
        if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
            return Err(CoreError::InvalidConfig("test_fraction must be in (0,1)".to_string()));
        }
        let n = self.n_rows();
        let mut test_mask = alloc::vec![false; n];
        match spec.strategy {
            SplitStrategy::TemporalHoldout => {
                let mut by_cell: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
                for (i, key) in self.row_keys.iter().enumerate() {
                    by_cell.entry(key.cell.as_str()).or_default().push(i);
                }
                for rows in by_cell.values_mut() {
                    rows.sort_by_key(|&i| self.row_keys[i].bucket_start);
                    let n_c = rows.len();
                    let n_test = ((spec.test_fraction * n_c as f64).ceil() as usize).max(1).min(n_c);
                    for &i in &rows[n_c - n_test..] {
                        test_mask[i] = true;
                    }
                }
            }
            SplitStrategy::Random => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng::seed_rng(spec.seed));
                let n_test = ((spec.test_fraction * n as f64).ceil() as usize).max(1).min(n);
                for &i in &order[..n_test] {
                    test_mask[i] = true;
                }
            }
        }
        let train_idx: Vec<usize> = (0..n).filter(|&i| !test_mask[i]).collect();
        let test_idx: Vec<usize> = (0..n).filter(|&i| test_mask[i]).collect();
        if train_idx.is_empty() {
            return Err(CoreError::EmptySplitSide("train"));
        }
        if test_idx.is_empty() {
            return Err(CoreError::EmptySplitSide("test"));
        }
        let mut train = self.select_rows(&train_idx);
        let mut test = self.select_rows(&test_idx);
        refit_target_encodings(&mut train, &mut test, spec.seed)?;
        refit_cell_rates(&mut train, &mut test);
        Ok((train, test))
    }

    /// Splits on an explicit held-out mask with the same leakage-safe
    /// re-encoding as [`FeatureFrame::split`]; cross-validation folds use
    /// this to keep fold-train statistics out of fold-test rows.
    pub fn split_by_mask(
        &self,
        holdout: &[bool],
        seed: u64,
    ) -> Result<(FeatureFrame, FeatureFrame), CoreError> {
        if holdout.len() != self.n_rows() {
            return Err(CoreError::LengthMismatch { left: holdout.len(), right: self.n_rows() });
        }
        let train_idx: Vec<usize> = (0..self.n_rows()).filter(|&i| !holdout[i]).collect();
        let test_idx: Vec<usize> = (0..self.n_rows()).filter(|&i| holdout[i]).collect();
        if train_idx.is_empty() {
            return Err(CoreError::EmptySplitSide("train"));
        }
        if test_idx.is_empty() {
            return Err(CoreError::EmptySplitSide("test"));
        }
        let mut train = self.select_rows(&train_idx);
        let mut test = self.select_rows(&test_idx);
        refit_target_encodings(&mut train, &mut test, seed)?;
        refit_cell_rates(&mut train, &mut test);
        Ok((train, test))
    }
}

/// Re-fits target-encoded columns: out-of-fold encodings for train rows,
/// full-train smoothed means for test rows. Unseen categories fall back to
/// the train global mean.
fn refit_target_encodings(
    train: &mut FeatureFrame,
    test: &mut FeatureFrame,
    seed: u64,
) -> Result<(), CoreError> {
    let cols: Vec<usize> = train.raw_categories.keys().copied().collect();
    for col in cols {
        let cat = train.raw_categories[&col].clone();
        let oof = encode::target_encode(
            &cat.codes,
            &train.targets,
            cat.folds,
            cat.smoothing,
            rng::mix_seed(seed, col as u64),
        )?;
        for (i, v) in oof.iter().enumerate() {
            train.set_value(i, col, *v);
        }
        let table = EncodingTable::fit(&cat.codes, &train.targets, cat.smoothing);
        let test_cat = &test.raw_categories[&col];
        let encoded: Vec<f64> = test_cat.codes.iter().map(|&c| table.encode(c)).collect();
        for (i, v) in encoded.iter().enumerate() {
            test.set_value(i, col, *v);
        }
    }
    Ok(())
}

/// Re-fits cell rate columns from the train targets: each row gets the mean
/// train count of its cell, or the global train mean for unseen cells.
fn refit_cell_rates(train: &mut FeatureFrame, test: &mut FeatureFrame) {
    let Some(col) = train.find_column(CELL_RATE_COLUMN) else {
        return;
    };
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (key, &y) in train.row_keys.iter().zip(&train.targets) {
        let e = sums.entry(key.cell.clone()).or_insert((0.0, 0));
        e.0 += y;
        e.1 += 1;
    }
    let global = train.targets.iter().sum::<f64>() / train.n_rows() as f64;
    let rate = |cell: &str| sums.get(cell).map_or(global, |&(s, c)| s / c as f64);
    for i in 0..train.n_rows() {
        let v = rate(&train.row_keys[i].cell);
        train.set_value(i, col, v);
    }
    for i in 0..test.n_rows() {
        let v = rate(&test.row_keys[i].cell);
        test.set_value(i, col, v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(cell: &str, bucket: i64) -> RowKey {
        RowKey { cell: cell.to_string(), bucket_start: bucket }
    }

    fn toy_frame(cells: &[&str], buckets: i64) -> FeatureFrame {
        let mut f = FeatureFrame::new(alloc::vec![ColumnMeta::new("x", ColumnKind::Numeric)]);
        for cell in cells {
            for b in 0..buckets {
                f.push_row(key(cell, b), &[b as f64], (b % 3) as f64);
            }
        }
        f
    }

    #[test]
    fn temporal_holdout_takes_last_buckets_per_cell() {
        let frame = toy_frame(&["CA", "TX"], 10);
        let (train, test) = frame.split(&SplitSpec::temporal(0.2)).unwrap();
        assert_eq!(train.n_rows(), 16);
        assert_eq!(test.n_rows(), 4);
        for k in &test.row_keys {
            assert!(k.bucket_start >= 8, "test holds the last 2 of 10 buckets");
        }
    }

    #[test]
    fn random_split_is_seed_deterministic() {
        let frame = toy_frame(&["CA"], 20);
        let spec = SplitSpec::random(0.3, 99);
        let (tr1, te1) = frame.split(&spec).unwrap();
        let (tr2, te2) = frame.split(&spec).unwrap();
        assert_eq!(tr1.row_keys, tr2.row_keys);
        assert_eq!(te1.row_keys, te2.row_keys);
        assert_eq!(te1.n_rows(), 6);
    }

    #[test]
    fn degenerate_fractions_rejected() {
        let frame = toy_frame(&["CA"], 4);
        assert!(frame.split(&SplitSpec::temporal(0.0)).is_err());
        assert!(frame.split(&SplitSpec::temporal(1.0)).is_err());
    }

    #[test]
    fn cell_rate_recomputed_from_train_only() {
        let mut f = FeatureFrame::new(alloc::vec![ColumnMeta::new(
            CELL_RATE_COLUMN,
            ColumnKind::Numeric
        )]);
        // Cell A: targets 1,2,3,100 — the 100 lands in test and must not
        // leak into the train-side rate.
        for (b, y) in [(0, 1.0), (1, 2.0), (2, 3.0), (3, 100.0)] {
            f.push_row(key("A", b), &[0.0], y);
        }
        let (train, test) = f.split(&SplitSpec::temporal(0.25)).unwrap();
        assert_eq!(train.value(0, 0), 2.0); // mean of 1,2,3
        assert_eq!(test.value(0, 0), 2.0);
    }

    #[test]
    fn permuting_test_targets_leaves_train_frame_unchanged() {
        let mut f = toy_frame(&["CA", "TX"], 12);
        // attach a target-encoded column backed by two categories
        f.columns.push(ColumnMeta::new("wc", ColumnKind::TargetEncoded));
        let codes: Vec<u32> = (0..f.n_rows() as u32).map(|i| i % 2).collect();
        let mut data = Vec::new();
        for i in 0..f.n_rows() {
            data.extend_from_slice(f.row(i));
            data.push(0.0);
        }
        f.data = data;
        f.n_cols = 2;
        f.raw_categories.insert(
            1,
            CatColumn { vocab: alloc::vec!["a".into(), "b".into()], codes, folds: 3, smoothing: 1.0 },
        );

        let spec = SplitSpec::temporal(0.25);
        let (train_a, _) = f.split(&spec).unwrap();

        let mut poisoned = f.clone();
        // perturb targets of rows that will land in test (last 3 buckets per cell)
        for i in 0..poisoned.n_rows() {
            if poisoned.row_keys[i].bucket_start >= 9 {
                poisoned.targets[i] += 1000.0;
            }
        }
        let (train_b, _) = poisoned.split(&spec).unwrap();
        assert_eq!(train_a.targets, train_b.targets);
        assert_eq!(train_a.data, train_b.data, "no test-row statistic may reach the train frame");
    }
}
