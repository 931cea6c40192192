//! AutoML as seeded random search: `budget` candidate configurations are
//! sampled round-robin over the model families, each scored by k-fold CV
//! mean MSE, and the argmin wins (ties to the earliest sample). Candidate i
//! is derived from (seed, family name, i/F) alone, so reordering the family
//! list changes nothing.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cv::{kfold_cv, FoldStrategy};
use crate::error::CoreError;
use crate::forest::ForestConfig;
use crate::frame::FeatureFrame;
use crate::gbdt::{BoostConfig, CatEncoding, Growth};
use crate::model::ModelSpec;
use crate::rng;
use crate::tree::TreeConfig;

/// Hyperparameter ranges for one model family; all ranges are inclusive.
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpace {
    DecisionTree { max_depth: (usize, usize), min_samples_leaf: (usize, usize) },
    RandomForest { n_trees: (usize, usize), max_depth: (usize, usize), feature_subsample: (f64, f64) },
    Gbdt { n_rounds: (usize, usize), learning_rate: (f64, f64), max_leaves: (usize, usize) },
    Lasso { lambda: (f64, f64) },
    ElasticNet { lambda: (f64, f64), alpha: (f64, f64) },
    Ridge { lambda: (f64, f64) },
    Huber { delta: (f64, f64) },
    AdaBoost { n_rounds: (usize, usize), max_depth: (usize, usize) },
}

fn log_uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        return lo;
    }
    (r.random_range(lo.ln()..=hi.ln())).exp()
}

fn int_in(r: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    r.random_range(lo..=hi)
}

impl FamilySpace {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpace::DecisionTree { .. } => "decision_tree",
            FamilySpace::RandomForest { .. } => "random_forest",
            FamilySpace::Gbdt { .. } => "gbdt",
            FamilySpace::Lasso { .. } => "lasso",
            FamilySpace::ElasticNet { .. } => "elastic_net",
            FamilySpace::Ridge { .. } => "ridge",
            FamilySpace::Huber { .. } => "huber",
            FamilySpace::AdaBoost { .. } => "adaboost",
        }
    }

    fn sample(&self, r: &mut ChaCha8Rng) -> ModelSpec {
        match self {
            FamilySpace::DecisionTree { max_depth, min_samples_leaf } => {
                ModelSpec::DecisionTree(TreeConfig {
                    max_depth: int_in(r, *max_depth),
                    min_samples_leaf: int_in(r, *min_samples_leaf),
                    ..TreeConfig::default()
                })
            }
            FamilySpace::RandomForest { n_trees, max_depth, feature_subsample } => {
                ModelSpec::RandomForest(ForestConfig {
                    n_trees: int_in(r, *n_trees),
                    feature_subsample: r.random_range(feature_subsample.0..=feature_subsample.1),
                    tree: TreeConfig { max_depth: int_in(r, *max_depth), ..TreeConfig::default() },
                    seed: r.random(),
                    ..ForestConfig::default()
                })
            }
            FamilySpace::Gbdt { n_rounds, learning_rate, max_leaves } => ModelSpec::Gbdt {
                config: BoostConfig {
                    n_rounds: int_in(r, *n_rounds),
                    learning_rate: r.random_range(learning_rate.0..=learning_rate.1),
                    growth: Growth::LeafWise { max_leaves: int_in(r, *max_leaves) },
                    ..BoostConfig::default()
                },
                encoding: CatEncoding::None,
            },
            FamilySpace::Lasso { lambda } => ModelSpec::Lasso {
                lambda: log_uniform(r, lambda.0, lambda.1),
                tol: 1e-7,
                max_iter: 10_000,
            },
            FamilySpace::ElasticNet { lambda, alpha } => ModelSpec::ElasticNet {
                lambda: log_uniform(r, lambda.0, lambda.1),
                alpha: r.random_range(alpha.0..=alpha.1),
                tol: 1e-7,
                max_iter: 10_000,
            },
            FamilySpace::Ridge { lambda } => {
                ModelSpec::Ridge { lambda: log_uniform(r, lambda.0, lambda.1) }
            }
            FamilySpace::Huber { delta } => ModelSpec::Huber {
                delta: r.random_range(delta.0..=delta.1),
                tol: 1e-7,
                max_iter: 200,
            },
            FamilySpace::AdaBoost { n_rounds, max_depth } => {
                ModelSpec::AdaBoostR2(crate::adaboost::AdaBoostConfig {
                    n_rounds: int_in(r, *n_rounds),
                    base: TreeConfig { max_depth: int_in(r, *max_depth), ..TreeConfig::default() },
                    seed: r.random(),
                })
            }
        }
    }
}

#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub families: Vec<FamilySpace>,
    pub budget: usize,
    pub folds: usize,
    pub strategy: FoldStrategy,
    pub seed: u64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            families: Vec::new(),
            budget: 16,
            folds: 3,
            strategy: FoldStrategy::TemporalContiguous,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeaderboardEntry {
    /// Sampling index; the tie-break key.
    pub index: usize,
    pub family: String,
    pub spec: ModelSpec,
    pub mean_mse: Option<f64>,
    pub mean_r2: Option<f64>,
    pub error: Option<String>,
}

/// Returns the winning spec and the leaderboard sorted by mean MSE (failed
/// candidates last), both fully determined by (frame, space).
pub fn automl_search(
    frame: &FeatureFrame,
    space: &SearchSpace,
) -> Result<(ModelSpec, Vec<LeaderboardEntry>), CoreError> {
    if space.budget < 1 || space.families.is_empty() {
        return Err(CoreError::InvalidConfig(String::from(
            "search needs budget >= 1 and at least one family",
        )));
    }
    let mut ordered: Vec<&FamilySpace> = space.families.iter().collect();
    ordered.sort_by_key(|f| f.name());
    let n_families = ordered.len();

    let mut board: Vec<LeaderboardEntry> = Vec::with_capacity(space.budget);
    for i in 0..space.budget {
        let family = ordered[i % n_families];
        let stream = rng::mix_seed(
            rng::mix_seed(space.seed, rng::fnv1a64(family.name().as_bytes())),
            (i / n_families) as u64,
        );
        let spec = family.sample(&mut rng::seed_rng(stream));
        let entry = match kfold_cv(frame, &spec, space.folds, space.strategy, rng::mix_seed(space.seed, i as u64)) {
            Ok(report) => LeaderboardEntry {
                index: i,
                family: family.name().to_string(),
                spec,
                mean_mse: Some(report.mean_mse),
                mean_r2: report.mean_r2,
                error: None,
            },
            Err(e) => LeaderboardEntry {
                index: i,
                family: family.name().to_string(),
                spec,
                mean_mse: None,
                mean_r2: None,
                error: Some(e.to_string()),
            },
        };
        board.push(entry);
    }

    let mut best: Option<usize> = None;
    for (k, entry) in board.iter().enumerate() {
        if let Some(score) = entry.mean_mse {
            if best.map_or(true, |b| score < board[b].mean_mse.unwrap()) {
                best = Some(k);
            }
        }
    }
    let Some(best) = best else {
        let mut causes: Vec<String> = board.iter().filter_map(|e| e.error.clone()).collect();
        causes.dedup();
        return Err(CoreError::AllCandidatesFailed {
            count: space.budget,
            causes: causes.join("; "),
        });
    };
    let winner = board[best].spec.clone();
    board.sort_by(|a, b| match (a.mean_mse, b.mean_mse) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.index.cmp(&b.index)),
        (Some(_), None) => core::cmp::Ordering::Less,
        (None, Some(_)) => core::cmp::Ordering::Greater,
        (None, None) => a.index.cmp(&b.index),
    });
    Ok((winner, board))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{ColumnKind, ColumnMeta, RowKey};
    use crate::rng::seed_rng;
    use alloc::string::ToString;
    use alloc::vec;

    fn nonlinear_frame(n: i64, seed: u64) -> FeatureFrame {
        let mut r = seed_rng(seed);
        let mut f = FeatureFrame::new(vec![
            ColumnMeta::new("a", ColumnKind::Numeric),
            ColumnMeta::new("b", ColumnKind::Numeric),
        ]);
        for i in 0..n {
            let a = r.random_range(0.0..3.0);
            let b = r.random_range(0.0..3.0);
            let y = (2.5 * a).sin() * 3.0 + (1.7 * b).cos() * 2.0 + r.random_range(-0.1..0.1);
            f.push_row(RowKey { cell: "c".to_string(), bucket_start: i }, &[a, b], y);
        }
        f
    }

    fn small_space(budget: usize) -> SearchSpace {
        SearchSpace {
            families: vec![
                FamilySpace::RandomForest {
                    n_trees: (10, 15),
                    max_depth: (4, 8),
                    feature_subsample: (0.5, 1.0),
                },
                FamilySpace::Lasso { lambda: (1e-4, 1.0) },
            ],
            budget,
            folds: 3,
            strategy: FoldStrategy::TemporalContiguous,
            seed: 7,
        }
    }

    #[test]
    fn budget_one_returns_the_single_candidate() {
        let f = nonlinear_frame(60, 1);
        let (winner, board) = automl_search(&f, &small_space(1)).unwrap();
        assert_eq!(board.len(), 1);
        assert_eq!(winner, board[0].spec);
        assert!(board[0].mean_mse.is_some());
    }

    #[test]
    fn same_seed_identical_leaderboard() {
        let f = nonlinear_frame(60, 2);
        let space = small_space(4);
        let (w1, b1) = automl_search(&f, &space).unwrap();
        let (w2, b2) = automl_search(&f, &space).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn family_order_does_not_matter() {
        let f = nonlinear_frame(60, 3);
        let space = small_space(5);
        let mut reversed = space.clone();
        reversed.families.reverse();
        let (w1, b1) = automl_search(&f, &space).unwrap();
        let (w2, b2) = automl_search(&f, &reversed).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(b1, b2);
    }

    #[test]
    fn forest_beats_lasso_on_nonlinear_data() {
        let f = nonlinear_frame(200, 4);
        let (winner, board) = automl_search(&f, &small_space(4)).unwrap();
        assert!(matches!(winner, ModelSpec::RandomForest(_)), "{winner:?}");
        // leaderboard sorted ascending by mean MSE
        let scores: Vec<f64> = board.iter().filter_map(|e| e.mean_mse).collect();
        for w in scores.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn all_failures_surface_their_causes() {
        // constant feature: AdaBoost's first round is always discarded
        let mut f = FeatureFrame::new(vec![ColumnMeta::new("x", ColumnKind::Numeric)]);
        for i in 0..30i64 {
            f.push_row(
                RowKey { cell: "c".to_string(), bucket_start: i },
                &[1.0],
                if i % 2 == 0 { -1.0 } else { 1.0 },
            );
        }
        let space = SearchSpace {
            families: vec![FamilySpace::AdaBoost { n_rounds: (2, 4), max_depth: (1, 2) }],
            budget: 2,
            folds: 3,
            strategy: FoldStrategy::TemporalContiguous,
            seed: 0,
        };
        let err = automl_search(&f, &space).unwrap_err();
        let CoreError::AllCandidatesFailed { count, causes } = err else {
            panic!("wrong error: {err:?}")
        };
        assert_eq!(count, 2);
        assert!(causes.contains("no usable round"));
    }

    #[test]
    fn empty_space_is_invalid() {
        let f = nonlinear_frame(20, 5);
        let space = SearchSpace { budget: 3, ..SearchSpace::default() };
        assert!(matches!(automl_search(&f, &space), Err(CoreError::InvalidConfig(_))));
    }
}
