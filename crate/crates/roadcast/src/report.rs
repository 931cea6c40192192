//! Model roster, fitting, and evaluation reports: metrics per model on a
//! held-out frame, a comparison CSV, and the actual-vs-predicted pairs
//! behind it. Reports carry no wall-clock data, so reruns are byte-identical.

use std::fmt::Write as _;

use roadcast_core::adaboost::AdaBoostConfig;
use roadcast_core::forest::ForestConfig;
use roadcast_core::frame::FeatureFrame;
use roadcast_core::gbdt::{BoostConfig, CatEncoding, Growth};
use roadcast_core::model::{fit, LstmAdapterConfig};
use roadcast_core::search::{FamilySpace, LeaderboardEntry, SearchSpace};
use roadcast_core::stack::StackConfig;
use roadcast_core::tree::TreeConfig;
use roadcast_core::{metrics, rng, CoreError, ModelSpec, TrainedModel};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluation roster mirroring the paper's comparison table.
pub const DEFAULT_ROSTER: [&str; 11] = [
    "random_forest",
    "auto_ml",
    "decision_tree",
    "adaboost_r2",
    "gbdt_target_encoded",
    "lstm",
    "lasso",
    "elastic_net",
    "huber",
    "stacking",
    "gbdt_leaf_wise",
];

/// Count targets carry heavy shot noise, so the standalone tree gets
/// shallower depth and larger leaves than the core default.
fn roster_tree() -> TreeConfig {
    TreeConfig { max_depth: 10, min_samples_leaf: 10, ..TreeConfig::default() }
}

fn stacking_bases() -> Vec<ModelSpec> {
    vec![
        ModelSpec::RandomForest(ForestConfig { n_trees: 50, ..ForestConfig::default() }),
        ModelSpec::DecisionTree(roster_tree()),
        ModelSpec::Lasso { lambda: 0.1, tol: 1e-7, max_iter: 10_000 },
    ]
}

fn automl_families() -> Vec<FamilySpace> {
    vec![
        FamilySpace::RandomForest {
            n_trees: (30, 120),
            max_depth: (6, 16),
            feature_subsample: (0.3, 1.0),
        },
        FamilySpace::DecisionTree { max_depth: (4, 16), min_samples_leaf: (2, 20) },
        FamilySpace::Gbdt { n_rounds: (50, 300), learning_rate: (0.03, 0.3), max_leaves: (15, 63) },
        FamilySpace::Lasso { lambda: (1e-3, 1.0) },
        FamilySpace::Ridge { lambda: (1e-3, 10.0) },
    ]
}

/// The canonical configuration behind each roster name. `budget`/`folds`
/// only shape the auto_ml entry.
pub fn spec_for_name(name: &str, budget: usize, folds: usize) -> Option<ModelSpec> {
    let spec = match name {
        "decision_tree" => ModelSpec::DecisionTree(roster_tree()),
        "random_forest" => ModelSpec::RandomForest(ForestConfig::default()),
        "adaboost_r2" => ModelSpec::AdaBoostR2(AdaBoostConfig::default()),
        "gbdt_leaf_wise" => ModelSpec::Gbdt {
            config: BoostConfig::default(),
            encoding: CatEncoding::None,
        },
        "gbdt_leaf_wise_target" => ModelSpec::Gbdt {
            config: BoostConfig::default(),
            encoding: CatEncoding::Target,
        },
        "gbdt_target_encoded" => ModelSpec::Gbdt {
            config: BoostConfig { growth: Growth::DepthWise, max_depth: 6, ..BoostConfig::default() },
            encoding: CatEncoding::Target,
        },
        "gbdt_depth_wise" => ModelSpec::Gbdt {
            config: BoostConfig { growth: Growth::DepthWise, max_depth: 6, ..BoostConfig::default() },
            encoding: CatEncoding::None,
        },
        "lasso" => ModelSpec::Lasso { lambda: 0.1, tol: 1e-7, max_iter: 10_000 },
        "elastic_net" => ModelSpec::ElasticNet { lambda: 0.1, alpha: 0.5, tol: 1e-7, max_iter: 10_000 },
        "ridge" => ModelSpec::Ridge { lambda: 1.0 },
        "huber" => ModelSpec::Huber { delta: 1.0, tol: 1e-7, max_iter: 300 },
        "lstm" => ModelSpec::Lstm(LstmAdapterConfig::default()),
        "stacking" => ModelSpec::Stacking(StackConfig { bases: stacking_bases(), ..StackConfig::default() }),
        "auto_ml" => ModelSpec::AutoMl(SearchSpace {
            families: automl_families(),
            budget,
            folds,
            ..SearchSpace::default()
        }),
        _ => return None,
    };
    Some(spec)
}

#[derive(Debug, Clone)]
pub struct RosterEntry {
    pub name: String,
    pub spec: ModelSpec,
}

/// Resolves model names (or the default roster when empty) into seeded
/// specs: each model draws its seed from the master seed and its name, so
/// adding or removing one model never shifts another's stream.
pub fn resolve_roster(
    names: &[String],
    master_seed: u64,
    budget: usize,
    folds: usize,
) -> Result<Vec<RosterEntry>, crate::error::AppError> {
    let chosen: Vec<String> = if names.is_empty() {
        DEFAULT_ROSTER.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    let mut out = Vec::with_capacity(chosen.len());
    for name in chosen {
        let spec = spec_for_name(&name, budget, folds).ok_or_else(|| {
            crate::error::AppError::Config(format!("unknown model \"{name}\""))
        })?;
        let seed = rng::mix_seed(master_seed, rng::fnv1a64(name.as_bytes()));
        out.push(RosterEntry { name, spec: spec.with_seed(seed) });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct FittedEntry {
    pub name: String,
    pub outcome: Result<TrainedModel, CoreError>,
}

pub fn fit_roster(train: &FeatureFrame, roster: &[RosterEntry]) -> Vec<FittedEntry> {
    #[cfg(feature = "parallel")]
    let it = roster.par_iter();
    #[cfg(not(feature = "parallel"))]
    let it = roster.iter();
    it.map(|e| FittedEntry { name: e.name.clone(), outcome: fit(train, &e.spec) })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub name: String,
    /// Hex digest of the resolved model configuration.
    pub digest: String,
    pub mse: Option<f64>,
    pub rmse: Option<f64>,
    pub r2: Option<f64>,
    /// Sample actual/predicted pair at the representative test row.
    pub actual: Option<f64>,
    pub predicted: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub train_fingerprint: String,
    pub test_fingerprint: String,
    pub split: String,
    pub seed: u64,
}

/// Index of the representative test row: the first row whose target equals
/// the modal test target (count ties break to the smaller value).
fn representative_row(targets: &[f64]) -> Option<usize> {
    if targets.is_empty() {
        return None;
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best = (sorted[0], 0usize);
    let mut run = (sorted[0], 0usize);
    for &v in &sorted {
        if v == run.0 {
            run.1 += 1;
        } else {
            run = (v, 1);
        }
        if run.1 > best.1 {
            best = run;
        }
    }
    targets.iter().position(|&v| v == best.0)
}

pub fn score_report(
    fitted: &[FittedEntry],
    train_fingerprint: u64,
    test: &FeatureFrame,
    split: &str,
    seed: u64,
) -> EvalReport {
    let rep = representative_row(&test.targets);
    let mut rows: Vec<EvalRow> = fitted
        .iter()
        .map(|f| {
            let digest = match &f.outcome {
                Ok(m) => format!("{:016x}", m.spec.config_digest()),
                Err(_) => "-".to_string(),
            };
            let scored = f.outcome.as_ref().map_err(|e| e.to_string()).and_then(|m| {
                let preds = m.predict_frame(test).map_err(|e| e.to_string())?;
                let mse = metrics::mse(&test.targets, &preds).map_err(|e| e.to_string())?;
                let rmse = metrics::rmse(&test.targets, &preds).map_err(|e| e.to_string())?;
                let r2 = metrics::r_square(&test.targets, &preds).ok();
                Ok((mse, rmse, r2, preds))
            });
            match scored {
                Ok((mse, rmse, r2, preds)) => EvalRow {
                    name: f.name.clone(),
                    digest,
                    mse: Some(mse),
                    rmse: Some(rmse),
                    r2,
                    actual: rep.map(|i| test.targets[i]),
                    predicted: rep.map(|i| preds[i]),
                    error: None,
                },
                Err(e) => EvalRow {
                    name: f.name.clone(),
                    digest,
                    mse: None,
                    rmse: None,
                    r2: None,
                    actual: None,
                    predicted: None,
                    error: Some(e),
                },
            }
        })
        .collect();
    // best first; failures go last, alphabetically
    rows.sort_by(|a, b| match (a.mse, b.mse) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => a.name.cmp(&b.name),
    });
    EvalReport {
        rows,
        train_fingerprint: format!("{train_fingerprint:016x}"),
        test_fingerprint: format!("{:016x}", test.fingerprint()),
        split: split.to_string(),
        seed,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".to_string())
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "evaluation");
        let _ = writeln!(out, "train_fingerprint: {}", self.train_fingerprint);
        let _ = writeln!(out, "test_fingerprint: {}", self.test_fingerprint);
        let _ = writeln!(out, "split: {}", self.split);
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "{:<22} {:>12} {:>12} {:>10} {:>10} {:>12}  status",
            "model", "mse", "rmse", "r2", "actual", "predicted"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<22} {:>12} {:>12} {:>10} {:>10} {:>12}  {}",
                r.name,
                opt(r.mse),
                opt(r.rmse),
                opt(r.r2),
                opt(r.actual),
                opt(r.predicted),
                r.error.as_deref().unwrap_or("ok"),
            );
        }
        out
    }

    /// Comparison-table CSV: Model, MSE, R-Square, Actual, Predicted, plus
    /// a Status column for rows that failed to fit.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("Model,MSE,R-Square,Actual,Predicted,Status\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.name,
                opt(r.mse),
                opt(r.r2),
                opt(r.actual),
                opt(r.predicted),
                r.error.as_deref().unwrap_or("ok"),
            );
        }
        out
    }
}

/// Per-row test predictions for every successfully scored model:
/// `cell,bucket_start,actual,<model...>` in report row order.
pub fn render_pairs(fitted: &[FittedEntry], test: &FeatureFrame) -> String {
    let scored: Vec<(&str, Vec<f64>)> = fitted
        .iter()
        .filter_map(|f| {
            let m = f.outcome.as_ref().ok()?;
            let preds = m.predict_frame(test).ok()?;
            Some((f.name.as_str(), preds))
        })
        .collect();
    let mut out = String::from("cell,bucket_start,actual");
    for (name, _) in &scored {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..test.n_rows() {
        let key = &test.row_keys[i];
        let _ = write!(out, "{},{},{:?}", key.cell.replace(',', ";"), key.bucket_start, test.targets[i]);
        for (_, preds) in &scored {
            let _ = write!(out, ",{:?}", preds[i]);
        }
        out.push('\n');
    }
    out
}

/// AutoML leaderboard CSV in sampling order.
pub fn render_leaderboard(entries: &[LeaderboardEntry], winner: &ModelSpec) -> String {
    let mut out = String::from("index,family,mean_mse,mean_r2,chosen,status\n");
    let winner_digest = winner.config_digest();
    for e in entries {
        let chosen = e.spec.config_digest() == winner_digest && e.error.is_none();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.index,
            e.family,
            opt(e.mean_mse),
            opt(e.mean_r2),
            if chosen { "yes" } else { "no" },
            e.error.as_deref().unwrap_or("ok"),
        );
    }
    out
}
