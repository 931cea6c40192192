//! Records to supervised count-regression data: spatio-temporal count
//! aggregation and feature engineering into a core `FeatureFrame`.
//!
//! Leakage rule: target-dependent columns (target encoding, cell rates)
//! are provisional here and re-fitted from train rows by the split;
//! target-free vocabularies (one-hot categories) are fixed at build time.

use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, NaiveDate, NaiveDateTime, Timelike};
use roadcast_core::frame::{CatColumn, ColumnKind, ColumnMeta, FeatureFrame, RowKey, CELL_RATE_COLUMN};
use roadcast_core::model::LAG_COLUMN_PREFIX;
use roadcast_core::{encode, rng, CoreError};

use crate::error::AppError;
use crate::ingest::AccidentRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellScheme {
    State,
    StateCity,
    Grid { resolution_deg: f64 },
}

impl CellScheme {
    pub fn cell_key(&self, r: &AccidentRecord) -> String {
        match self {
            CellScheme::State => r.state.clone(),
            CellScheme::StateCity => {
                format!("{}/{}", r.state, r.city.as_deref().unwrap_or("unknown"))
            }
            CellScheme::Grid { resolution_deg } => {
                let la = (r.start_lat / resolution_deg).floor() as i64;
                let lo = (r.start_lng / resolution_deg).floor() as i64;
                format!("g{la}:{lo}")
            }
        }
    }
}

/// Default lag set: previous bucket, the one before, and same time one day
/// earlier, expressed in bucket units and deduplicated.
pub fn default_lags(bucket_hours: u32) -> Vec<usize> {
    let mut lags = vec![1, 2, (24 / bucket_hours) as usize];
    lags.sort_unstable();
    lags.dedup();
    lags
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetConfig {
    pub cell_scheme: CellScheme,
    pub bucket_hours: u32,
    pub zero_fill: bool,
    /// Lag offsets in bucket units.
    pub lags: Vec<usize>,
    pub top_k_conditions: usize,
    pub smoothing: f64,
    pub encode_folds: usize,
    pub min_date: Option<NaiveDate>,
    pub max_date: Option<NaiveDate>,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            cell_scheme: CellScheme::StateCity,
            bucket_hours: 24,
            zero_fill: true,
            lags: default_lags(24),
            top_k_conditions: 10,
            smoothing: 20.0,
            encode_folds: 5,
            min_date: None,
            max_date: None,
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<(), AppError> {
        if self.bucket_hours == 0 || 24 % self.bucket_hours != 0 {
            return Err(AppError::Config(format!(
                "bucket_hours must divide 24 evenly, got {}",
                self.bucket_hours
            )));
        }
        if self.lags.iter().any(|&k| k == 0) {
            return Err(AppError::Config("lag offsets must be >= 1 bucket".into()));
        }
        if self.top_k_conditions == 0 {
            return Err(AppError::Config("top_k_conditions must be >= 1".into()));
        }
        if self.encode_folds < 2 {
            return Err(AppError::Config("encode_folds must be >= 2".into()));
        }
        if !(self.smoothing >= 0.0) {
            return Err(AppError::Config("smoothing must be >= 0".into()));
        }
        if let (Some(lo), Some(hi)) = (self.min_date, self.max_date) {
            if lo > hi {
                return Err(AppError::Config(format!("min_date {lo} after max_date {hi}")));
            }
        }
        Ok(())
    }

    fn bucket_secs(&self) -> i64 {
        self.bucket_hours as i64 * 3600
    }

    fn in_range(&self, r: &AccidentRecord) -> bool {
        let d = r.start_time.date();
        self.min_date.map_or(true, |lo| d >= lo) && self.max_date.map_or(true, |hi| d <= hi)
    }

    fn bucket_of(&self, t: &NaiveDateTime) -> i64 {
        let s = self.bucket_secs();
        t.and_utc().timestamp().div_euclid(s) * s
    }
}

/// Per-cell bucket counts plus exclusion accounting. Bucket keys are
/// bucket-start epoch seconds; the range spans all included records.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregated {
    pub bucket_secs: i64,
    pub cells: BTreeMap<String, BTreeMap<i64, u32>>,
    pub excluded: u64,
    pub range: Option<(i64, i64)>,
}

impl Aggregated {
    pub fn total_count(&self) -> u64 {
        self.cells.values().flat_map(|b| b.values()).map(|&c| c as u64).sum()
    }

    pub fn n_rows(&self) -> usize {
        self.cells.values().map(|b| b.len()).sum()
    }
}

pub fn aggregate_counts(records: &[AccidentRecord], cfg: &DatasetConfig) -> Result<Aggregated, AppError> {
    cfg.validate()?;
    let mut agg = Aggregated {
        bucket_secs: cfg.bucket_secs(),
        cells: BTreeMap::new(),
        excluded: 0,
        range: None,
    };
    for r in records {
        if !cfg.in_range(r) {
            agg.excluded += 1;
            continue;
        }
        let b = cfg.bucket_of(&r.start_time);
        *agg.cells.entry(cfg.cell_scheme.cell_key(r)).or_default().entry(b).or_insert(0) += 1;
        agg.range = Some(agg.range.map_or((b, b), |(lo, hi)| (lo.min(b), hi.max(b))));
    }
    if cfg.zero_fill {
        if let Some((lo, hi)) = agg.range {
            for buckets in agg.cells.values_mut() {
                let mut b = lo;
                while b <= hi {
                    buckets.entry(b).or_insert(0);
                    b += agg.bucket_secs;
                }
            }
        }
    }
    Ok(agg)
}

const WEATHER_FIELDS: [&str; 6] = [
    "temperature_f",
    "humidity_pct",
    "pressure_in",
    "visibility_mi",
    "wind_speed_mph",
    "precipitation_in",
];

fn weather_value(r: &AccidentRecord, field: usize) -> Option<f64> {
    match field {
        0 => r.temperature_f,
        1 => r.humidity_pct,
        2 => r.pressure_in,
        3 => r.visibility_mi,
        4 => r.wind_speed_mph,
        5 => r.precipitation_in,
        _ => unreachable!("six weather fields"),
    }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Category label used when a bucket has no observed weather condition.
pub const OTHER_CONDITION: &str = "other";

fn condition_slug(name: &str) -> String {
    let lower = name.to_lowercase();
    lower
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Per-(cell,bucket) accumulators from member records.
struct BucketStats {
    weather_sum: [f64; 6],
    weather_n: [u32; 6],
    conditions: BTreeMap<String, u32>,
}

impl BucketStats {
    fn new() -> Self {
        BucketStats { weather_sum: [0.0; 6], weather_n: [0; 6], conditions: BTreeMap::new() }
    }

    fn mean(&self, field: usize) -> Option<f64> {
        if self.weather_n[field] == 0 {
            None
        } else {
            Some(self.weather_sum[field] / self.weather_n[field] as f64)
        }
    }

    /// Modal condition among members; count ties break to the lexically
    /// smallest name.
    fn modal_condition(&self) -> Option<&str> {
        let mut best: Option<(&str, u32)> = None;
        for (name, &n) in &self.conditions {
            if best.map_or(true, |(_, bn)| n > bn) {
                best = Some((name, n));
            }
        }
        best.map(|(name, _)| name)
    }
}

pub fn engineer_features(
    agg: &Aggregated,
    records: &[AccidentRecord],
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<FeatureFrame, AppError> {
    cfg.validate()?;

    // member-record statistics per (cell, bucket)
    let mut stats: BTreeMap<(String, i64), BucketStats> = BTreeMap::new();
    let mut global: [Vec<f64>; 6] = Default::default();
    let mut condition_freq: BTreeMap<String, u64> = BTreeMap::new();
    for r in records {
        if !cfg.in_range(r) {
            continue;
        }
        let key = (cfg.cell_scheme.cell_key(r), cfg.bucket_of(&r.start_time));
        let s = stats.entry(key).or_insert_with(BucketStats::new);
        for f in 0..6 {
            if let Some(v) = weather_value(r, f) {
                s.weather_sum[f] += v;
                s.weather_n[f] += 1;
                global[f].push(v);
            }
        }
        if let Some(c) = &r.weather_condition {
            *s.conditions.entry(c.clone()).or_insert(0) += 1;
            *condition_freq.entry(c.clone()).or_insert(0) += 1;
        }
    }
    let medians: Vec<f64> = global
        .iter_mut()
        .map(|v| {
            v.sort_by(f64::total_cmp);
            median(v)
        })
        .collect();

    // top-K condition vocabulary by frequency, ties to the lexically smaller
    let mut by_freq: Vec<(&String, &u64)> = condition_freq.iter().collect();
    by_freq.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    let top: Vec<String> =
        by_freq.iter().take(cfg.top_k_conditions).map(|(name, _)| (*name).clone()).collect();

    // full vocabulary for the target-encoded column, "other" included
    let mut vocab: Vec<String> = condition_freq.keys().cloned().collect();
    if !vocab.iter().any(|v| v == OTHER_CONDITION) {
        vocab.push(OTHER_CONDITION.to_string());
        vocab.sort();
    }
    let code_of: BTreeMap<&str, u32> =
        vocab.iter().enumerate().map(|(i, v)| (v.as_str(), i as u32)).collect();

    let mut columns = vec![
        ColumnMeta::new("year", ColumnKind::Numeric),
        ColumnMeta::new("hour_sin", ColumnKind::Cyclic),
        ColumnMeta::new("hour_cos", ColumnKind::Cyclic),
        ColumnMeta::new("month_sin", ColumnKind::Cyclic),
        ColumnMeta::new("month_cos", ColumnKind::Cyclic),
    ];
    const DOW: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];
    for d in DOW {
        columns.push(ColumnMeta::new(format!("dow_{d}"), ColumnKind::OneHot));
    }
    for f in WEATHER_FIELDS {
        columns.push(ColumnMeta::new(f, ColumnKind::Numeric));
    }
    let wc_first = columns.len();
    for name in &top {
        columns.push(ColumnMeta::new(format!("wc_{}", condition_slug(name)), ColumnKind::OneHot));
    }
    columns.push(ColumnMeta::new("wc_other", ColumnKind::OneHot));
    let te_col = columns.len();
    columns.push(ColumnMeta::new("weather_condition_te", ColumnKind::TargetEncoded));
    let lag_first = columns.len();
    for &k in &cfg.lags {
        columns.push(ColumnMeta::new(format!("{LAG_COLUMN_PREFIX}{k}"), ColumnKind::Numeric));
    }
    columns.push(ColumnMeta::new(CELL_RATE_COLUMN, ColumnKind::Numeric));
    let rate_col = columns.len() - 1;
    let n_cols = columns.len();

    let mut frame = FeatureFrame::new(columns);
    let mut codes: Vec<u32> = Vec::new();

    for (cell, buckets) in &agg.cells {
        let series_len = buckets.len();
        for &k in &cfg.lags {
            if k >= series_len {
                return Err(CoreError::LagTooLong { lag: k, len: series_len, cell: cell.clone() }.into());
            }
        }
        let cell_mean = buckets.values().map(|&c| c as f64).sum::<f64>() / series_len as f64;

        // walk buckets in time order carrying last observed weather forward
        let mut carried: [Option<f64>; 6] = [None; 6];
        let mut carried_condition: Option<String> = None;
        for (&bucket, &count) in buckets {
            let t = DateTime::from_timestamp(bucket, 0).expect("bucket in range").naive_utc();
            let mut row = vec![0.0; n_cols];
            row[0] = t.year() as f64;
            let hour_frac = t.hour() as f64 / 24.0;
            row[1] = (core::f64::consts::TAU * hour_frac).sin();
            row[2] = (core::f64::consts::TAU * hour_frac).cos();
            let month_frac = t.month() as f64 / 12.0;
            row[3] = (core::f64::consts::TAU * month_frac).sin();
            row[4] = (core::f64::consts::TAU * month_frac).cos();
            row[5 + t.weekday().num_days_from_monday() as usize] = 1.0;

            let stat = stats.get(&(cell.clone(), bucket));
            for f in 0..6 {
                let observed = stat.and_then(|s| s.mean(f));
                if let Some(v) = observed {
                    carried[f] = Some(v);
                }
                row[12 + f] = observed.or(carried[f]).unwrap_or(medians[f]);
            }

            let observed_cond = stat.and_then(|s| s.modal_condition());
            if let Some(c) = observed_cond {
                carried_condition = Some(c.to_string());
            }
            let cond = carried_condition.clone().unwrap_or_else(|| OTHER_CONDITION.to_string());
            let wc_idx = top.iter().position(|name| *name == cond);
            match wc_idx {
                Some(i) => row[wc_first + i] = 1.0,
                None => row[wc_first + top.len()] = 1.0,
            }
            codes.push(code_of.get(cond.as_str()).copied().unwrap_or_else(|| code_of[OTHER_CONDITION]));

            for (li, &k) in cfg.lags.iter().enumerate() {
                let past = bucket - k as i64 * agg.bucket_secs;
                row[lag_first + li] = buckets.get(&past).map_or(0.0, |&c| c as f64);
            }
            row[rate_col] = cell_mean;

            frame.push_row(RowKey { cell: cell.clone(), bucket_start: bucket }, &row, count as f64);
        }
    }

    if frame.is_empty() {
        return Err(AppError::Validation("no records in the configured date range".into()));
    }

    // provisional out-of-fold encoding over the whole frame; splits re-fit it
    let oof = encode::target_encode(
        &codes,
        &frame.targets,
        cfg.encode_folds,
        cfg.smoothing,
        rng::mix_seed(seed, te_col as u64),
    )?;
    for (i, v) in oof.into_iter().enumerate() {
        frame.set_value(i, te_col, v);
    }
    frame.raw_categories.insert(
        te_col,
        CatColumn { vocab, codes, folds: cfg.encode_folds, smoothing: cfg.smoothing },
    );
    Ok(frame)
}

/// Aggregation and feature engineering in one step.
pub fn build_frame(
    records: &[AccidentRecord],
    cfg: &DatasetConfig,
    seed: u64,
) -> Result<FeatureFrame, AppError> {
    let agg = aggregate_counts(records, cfg)?;
    engineer_features(&agg, records, cfg, seed)
}
