//! Acceptance gate: one test per criterion, each asserting its pinned
//! tolerance and printing one PASS line (visible under --nocapture).
//! Criterion 10 needs the external snapshot and stays #[ignore]d.

use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;
use roadcast_core::adaboost::{fit_adaboost_r2, AdaBoostConfig};
use roadcast_core::forest::{fit_forest, ForestConfig};
use roadcast_core::frame::{ColumnKind, ColumnMeta, FeatureFrame, RowKey, SplitSpec};
use roadcast_core::gbdt::{fit_gbdt, BoostConfig, CatEncoding, Growth};
use roadcast_core::linear::{fit_elastic_net, fit_ridge, kkt_check, lasso_lambda_max};
use roadcast_core::lstm::{lstm_backward, lstm_forward, LstmParams};
use roadcast_core::metrics;
use roadcast_core::rng::seed_rng;
use roadcast_core::tree::{best_split, fit_tree, histogram_split, TreeConfig};

use roadcast::dataset::{build_frame, DatasetConfig};
use roadcast::eda;
use roadcast::fixture::{generate_fixture, FIXTURE_SEED};
use roadcast::ingest::{parse_snapshot, ParseMode};
use roadcast::report::{fit_roster, resolve_roster};

fn frame_from(data: &[Vec<f64>], targets: &[f64]) -> FeatureFrame {
    let d = data[0].len();
    let cols: Vec<ColumnMeta> =
        (0..d).map(|j| ColumnMeta::new(&format!("x{j}"), ColumnKind::Numeric)).collect();
    let mut f = FeatureFrame::new(cols);
    for (i, row) in data.iter().enumerate() {
        f.push_row(RowKey { cell: "c".to_string(), bucket_start: i as i64 }, row, targets[i]);
    }
    f
}

/// Weighted-SSE via the same algebraic identity the library uses, so gains
/// on integer-valued data agree bit for bit.
fn sse(y: &[f64], idx: &[usize]) -> f64 {
    let w = idx.len() as f64;
    let wy: f64 = idx.iter().map(|&i| y[i]).sum();
    let wyy: f64 = idx.iter().map(|&i| y[i] * y[i]).sum();
    (wyy - wy * wy / w).max(0.0)
}

/// Exhaustive O(d n^2) enumeration over every feature and every boundary
/// between distinct values; first strictly better candidate wins, features
/// scanned in ascending order.
fn brute_force_split(
    x: &[Vec<f64>],
    y: &[f64],
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let parent = sse(y, &all);
    let mut best: Option<(usize, f64, f64)> = None;
    for j in 0..x[0].len() {
        let mut values: Vec<f64> = x.iter().map(|r| r[j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = 0.5 * (pair[0] + pair[1]);
            let left: Vec<usize> = (0..n).filter(|&i| x[i][j] <= threshold).collect();
            let right: Vec<usize> = (0..n).filter(|&i| x[i][j] > threshold).collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let gain = (parent - sse(y, &left) - sse(y, &right)).max(0.0);
            if gain > 0.0 && best.is_none_or(|(_, _, g)| gain > g) {
                best = Some((j, threshold, gain));
            }
        }
    }
    best
}

#[test]
fn criterion_01_split_finder_matches_brute_force() {
    let start = Instant::now();
    let mut rng = seed_rng(101);
    let mut found = 0usize;
    for _ in 0..200 {
        let n = rng.random_range(2..=30usize);
        let d = rng.random_range(1..=4usize);
        // integer grid keeps every SSE sum exact in f64
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0..6) as f64).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-5..=5) as f64).collect();
        let w = vec![1.0; n];
        let min_leaf = rng.random_range(1..=3usize);

        // library choice: per-feature best_split, ascending features,
        // strictly greater gain wins (the tree's own tie rule)
        let mut lib: Option<(usize, f64, f64)> = None;
        for j in 0..d {
            let xj: Vec<f64> = x.iter().map(|r| r[j]).collect();
            if let Some((threshold, gain)) = best_split(&xj, &y, &w, min_leaf, 0.0) {
                if lib.is_none_or(|(_, _, g)| gain > g) {
                    lib = Some((j, threshold, gain));
                }
            }
        }
        let brute = brute_force_split(&x, &y, min_leaf);
        match (lib, brute) {
            (None, None) => {}
            (Some((jf, tf, gf)), Some((jb, tb, gb))) => {
                assert_eq!(jf, jb, "feature choice diverged");
                assert_eq!(tf, tb, "threshold diverged");
                assert!((gf - gb).abs() <= 1e-9, "gain diverged: {gf} vs {gb}");
                found += 1;
            }
            (a, b) => panic!("split existence diverged: lib {a:?} vs brute {b:?}"),
        }
    }
    assert!(found > 100, "most random datasets should admit a split, got {found}");
    assert!(start.elapsed() < Duration::from_secs(10));
    println!("criterion 1: PASS — best_split equals brute force on 200 random datasets");
}

#[test]
fn criterion_02_lasso_kkt_and_lambda_max() {
    let start = Instant::now();
    let mut rng = seed_rng(202);
    for _ in 0..50 {
        let n = rng.random_range(15..40usize);
        let d = rng.random_range(2..6usize);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| {
                let signal: f64 = r.iter().enumerate().map(|(j, v)| (j as f64 + 1.0) * v).sum();
                signal + rng.random_range(-0.3..0.3)
            })
            .collect();
        let frame = frame_from(&x, &y);
        let lmax = lasso_lambda_max(&frame);
        assert!(lmax > 0.0);
        for factor in [0.01, 0.05, 0.2, 0.5, 0.9] {
            let lambda = factor * lmax;
            let model = fit_elastic_net(&frame, lambda, 1.0, 1e-10, 100_000).unwrap();
            assert!(model.converged);
            let worst = kkt_check(&model, &frame, lambda).unwrap();
            assert!(worst < 1e-6, "KKT violation {worst} at lambda {lambda}");
        }
        for boundary in [lmax, 1.5 * lmax] {
            let model = fit_elastic_net(&frame, boundary, 1.0, 1e-10, 100_000).unwrap();
            assert!(
                model.coefficients.iter().all(|&b| b == 0.0),
                "lambda >= lambda_max must zero every coefficient"
            );
        }
    }
    assert!(start.elapsed() < Duration::from_secs(30));
    println!("criterion 2: PASS — KKT < 1e-6 on 50 problems x 5 lambdas; lambda_max zeroes all");
}

/// OLS oracle: centered normal equations solved by Gaussian elimination.
fn ols(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let (n, d) = (x.len(), x[0].len());
    let xbar: Vec<f64> = (0..d).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let mut a = vec![vec![0.0f64; d]; d];
    let mut b = vec![0.0f64; d];
    for j in 0..d {
        for k in 0..d {
            a[j][k] =
                x.iter().map(|r| (r[j] - xbar[j]) * (r[k] - xbar[k])).sum::<f64>();
        }
        b[j] = x.iter().zip(y).map(|(r, &yy)| (r[j] - xbar[j]) * (yy - ybar)).sum::<f64>();
    }
    for k in 0..d {
        let pivot = (k..d).max_by(|&p, &q| a[p][k].abs().total_cmp(&a[q][k].abs())).unwrap();
        a.swap(k, pivot);
        b.swap(k, pivot);
        for i in k + 1..d {
            let f = a[i][k] / a[k][k];
            for j in k..d {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut beta = vec![0.0f64; d];
    for k in (0..d).rev() {
        let mut acc = b[k];
        for j in k + 1..d {
            acc -= a[k][j] * beta[j];
        }
        beta[k] = acc / a[k][k];
    }
    let intercept = ybar - beta.iter().zip(&xbar).map(|(c, m)| c * m).sum::<f64>();
    (beta, intercept)
}

#[test]
fn criterion_03_elastic_net_limits() {
    let mut rng = seed_rng(303);
    let x: Vec<Vec<f64>> = (0..20)
        .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0] - 1.5 * r[1] + 0.25 * r[2] + rng.random_range(-0.2..0.2)).collect();
    let frame = frame_from(&x, &y);

    // alpha = 0 against the closed-form ridge
    for lambda in [0.1, 0.7, 2.0] {
        let cd = fit_elastic_net(&frame, lambda, 0.0, 1e-14, 1_000_000).unwrap();
        let closed = fit_ridge(&frame, lambda).unwrap();
        for (a, b) in cd.coefficients.iter().zip(&closed.coefficients) {
            assert!((a - b).abs() < 1e-8, "ridge limit diverged: {a} vs {b}");
        }
        assert!((cd.intercept - closed.intercept).abs() < 1e-8);
    }

    // lambda = 0 against OLS normal equations
    let cd = fit_elastic_net(&frame, 0.0, 1.0, 1e-14, 1_000_000).unwrap();
    let (beta, intercept) = ols(&x, &y);
    for (a, b) in cd.coefficients.iter().zip(&beta) {
        assert!((a - b).abs() < 1e-8, "OLS limit diverged: {a} vs {b}");
    }
    assert!((cd.intercept - intercept).abs() < 1e-8);
    println!("criterion 3: PASS — alpha=0 matches closed-form ridge, lambda=0 matches OLS (1e-8)");
}

#[test]
fn criterion_04_lstm_gradients_match_finite_differences() {
    let start = Instant::now();
    let (d, h, t_len) = (3usize, 4usize, 5usize);
    let mut rng = seed_rng(404);
    let params = LstmParams::init(d, h, 7);
    let window: Vec<Vec<f64>> =
        (0..t_len).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let target = 0.37;
    let (_, grads) = lstm_backward(&params, &window, target);

    let loss = |p: &LstmParams| {
        let (pred, _) = lstm_forward(p, &window);
        (pred - target) * (pred - target)
    };
    let step = 1e-5;
    let blocks: [(&str, fn(&LstmParams) -> &Vec<f64>, fn(&mut LstmParams) -> &mut Vec<f64>); 9] = [
        ("w_i", |p| &p.w_i, |p| &mut p.w_i),
        ("w_f", |p| &p.w_f, |p| &mut p.w_f),
        ("w_o", |p| &p.w_o, |p| &mut p.w_o),
        ("w_g", |p| &p.w_g, |p| &mut p.w_g),
        ("b_i", |p| &p.b_i, |p| &mut p.b_i),
        ("b_f", |p| &p.b_f, |p| &mut p.b_f),
        ("b_o", |p| &p.b_o, |p| &mut p.b_o),
        ("b_g", |p| &p.b_g, |p| &mut p.b_g),
        ("v", |p| &p.v, |p| &mut p.v),
    ];
    for (name, read, write) in blocks {
        let len = read(&params).len();
        let mut fd = vec![0.0f64; len];
        for j in 0..len {
            let mut plus = params.clone();
            write(&mut plus)[j] += step;
            let mut minus = params.clone();
            write(&mut minus)[j] -= step;
            fd[j] = (loss(&plus) - loss(&minus)) / (2.0 * step);
        }
        let got = read(&grads);
        let diff: f64 = got.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let scale: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / scale < 1e-4, "block {name}: relative error {}", diff / scale);
    }
    // output bias is the lone scalar block
    let mut plus = params.clone();
    plus.c += step;
    let mut minus = params.clone();
    minus.c -= step;
    let fd_c = (loss(&plus) - loss(&minus)) / (2.0 * step);
    assert!((grads.c - fd_c).abs() / fd_c.abs().max(1e-8) < 1e-4, "block c diverged");
    assert!(start.elapsed() < Duration::from_secs(5));
    println!("criterion 4: PASS — BPTT matches central differences (rel 1e-4) on d=3,h=4,T=5");
}

#[test]
fn criterion_05_degenerate_equivalences() {
    let mut rng = seed_rng(505);
    // <= 6 distinct values/feature so 64 bins cover every boundary
    let x: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..3).map(|_| rng.random_range(0..6) as f64).collect())
        .collect();
    let y: Vec<f64> = x.iter().map(|r| r[0] * 2.0 - r[1] + rng.random_range(-1.0..1.0)).collect();
    let frame = frame_from(&x, &y);

    // forest(1 tree, no bootstrap, all features) == the tree, bit for bit
    let tree_cfg = TreeConfig { max_depth: 6, min_samples_leaf: 2, ..TreeConfig::default() };
    let tree = fit_tree(&frame, &tree_cfg).unwrap();
    let forest = fit_forest(
        &frame,
        &ForestConfig {
            n_trees: 1,
            bootstrap: false,
            feature_subsample: 1.0,
            tree: tree_cfg.clone(),
            seed: 99,
        },
    )
    .unwrap();
    assert_eq!(
        tree.predict_frame(&frame).unwrap(),
        forest.predict_frame(&frame).unwrap(),
        "degenerate forest must be bit-identical to its tree"
    );

    // GBDT(1 round, lr 1, deep) == mean + CART on residuals
    let gbdt = fit_gbdt(
        &frame,
        &BoostConfig {
            n_rounds: 1,
            learning_rate: 1.0,
            growth: Growth::DepthWise,
            max_depth: 32,
            min_samples_leaf: 2,
            bins: 64,
            ..BoostConfig::default()
        },
        CatEncoding::None,
    )
    .unwrap();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let residuals: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let residual_frame = frame_from(&x, &residuals);
    let cart = fit_tree(
        &residual_frame,
        &TreeConfig { max_depth: 32, min_samples_leaf: 2, ..TreeConfig::default() },
    )
    .unwrap();
    let boosted = gbdt.predict_frame(&frame).unwrap();
    let manual: Vec<f64> =
        cart.predict_frame(&residual_frame).unwrap().iter().map(|p| mean + p).collect();
    for (a, b) in boosted.iter().zip(&manual) {
        assert!((a - b).abs() < 1e-10, "one-round GBDT diverged: {a} vs {b}");
    }

    // histogram split with bins >= distinct values == exhaustive split
    for _ in 0..25 {
        let n = rng.random_range(5..40usize);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..12) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let w = vec![1.0; n];
        let exhaustive = best_split(&xs, &ys, &w, 1, 0.0);
        let histogram = histogram_split(&xs, &ys, &w, 64, 1, 0.0);
        match (exhaustive, histogram) {
            (None, None) => {}
            (Some((te, ge)), Some((th, gh))) => {
                assert_eq!(te, th, "histogram threshold diverged");
                assert!((ge - gh).abs() < 1e-12, "histogram gain diverged");
            }
            (a, b) => panic!("split existence diverged: {a:?} vs {b:?}"),
        }
    }
    println!("criterion 5: PASS — 1-tree forest == tree; 1-round GBDT == mean+CART; histogram == exhaustive");
}

#[test]
fn criterion_06_metric_identities() {
    // mean predictor scores exactly zero
    let y = [1.0, 2.0, 3.0, 7.0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mean_preds = vec![mean; y.len()];
    assert_eq!(metrics::r_square(&y, &mean_preds).unwrap(), 0.0);

    // rmse^2 == mse
    let mut rng = seed_rng(606);
    for _ in 0..20 {
        let a: Vec<f64> = (0..13).map(|_| rng.random_range(-5.0..5.0)).collect();
        let p: Vec<f64> = (0..13).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mse = metrics::mse(&a, &p).unwrap();
        let rmse = metrics::rmse(&a, &p).unwrap();
        assert!((rmse * rmse - mse).abs() < 1e-12);
    }

    // hand example reproduces the negative-R^2 regime seen in the paper's
    // robust-regression row
    let r2 = metrics::r_square(&[0.0, 2.0], &[5.0, 5.0]).unwrap();
    assert_eq!(r2, -16.0);
    assert!(r2 < 0.0);
    println!("criterion 6: PASS — mean predictor R2 = 0, rmse^2 = mse, hand example = -16.0");
}

#[test]
fn criterion_07_fixture_model_ordering() {
    let start = Instant::now();
    let records = generate_fixture(FIXTURE_SEED);
    let frame = build_frame(&records, &DatasetConfig::default(), 42).unwrap();
    let (train, test) = frame.split(&SplitSpec { seed: 42, ..SplitSpec::temporal(0.2) }).unwrap();

    let names: Vec<String> = ["random_forest", "decision_tree", "lasso", "stacking"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let roster = resolve_roster(&names, 42, 16, 3).unwrap();
    let fitted = fit_roster(&train, &roster);
    let mut r2 = std::collections::BTreeMap::new();
    for f in &fitted {
        let model = f.outcome.as_ref().expect("fixture models must fit");
        let preds = model.predict_frame(&test).unwrap();
        r2.insert(f.name.clone(), metrics::r_square(&test.targets, &preds).unwrap());
    }
    let (rf, dt, lasso, stack) =
        (r2["random_forest"], r2["decision_tree"], r2["lasso"], r2["stacking"]);
    assert!(rf > dt, "random forest must beat the tree: {rf} vs {dt}");
    assert!(dt > lasso, "tree must beat lasso: {dt} vs {lasso}");
    let best_base = rf.max(dt).max(lasso);
    assert!(stack >= best_base - 0.05, "stacking fell behind: {stack} vs best base {best_base}");
    assert!(start.elapsed() < Duration::from_secs(120));
    println!(
        "criterion 7: PASS — R2 rf {rf:.3} > dt {dt:.3} > lasso {lasso:.3}; stacking {stack:.3} >= best-0.05"
    );
}

#[test]
fn criterion_08_eda_determinism_and_conservation() {
    // conservation on every table, fixture-wide
    let records = generate_fixture(FIXTURE_SEED);
    let tables = eda::all_tables(&records, 1.0);
    for t in &tables {
        assert_eq!(
            t.total() + t.excluded,
            records.len() as u64,
            "table {} loses records",
            t.name
        );
    }

    // byte-identity across runs and thread counts, through the binary
    let exe = env!("CARGO_BIN_EXE_roadcast");
    let csv = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixture.csv");
    let base = tempfile::tempdir().unwrap();
    let mut snapshots: Vec<Vec<(String, Vec<u8>)>> = Vec::new();
    for (label, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let out = base.path().join(label);
        let ok = std::process::Command::new(exe)
            .args(["ingest", "--input"])
            .arg(&csv)
            .arg("--out")
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(ok.success());
        let ok = std::process::Command::new(exe)
            .args(["eda", "--threads", threads, "--out"])
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(ok.success());
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .filter_map(|e| {
                let name = e.unwrap().file_name().into_string().unwrap();
                name.starts_with("eda_").then(|| {
                    let bytes = std::fs::read(out.join(&name)).unwrap();
                    (name, bytes)
                })
            })
            .collect();
        files.sort();
        assert_eq!(files.len(), 7, "eda must write exactly seven tables");
        snapshots.push(files);
    }
    assert_eq!(snapshots[0], snapshots[1], "outputs changed across --threads settings");
    assert_eq!(snapshots[0], snapshots[2], "outputs changed across reruns");
    println!("criterion 8: PASS — seven tables byte-identical across runs/threads; counts conserve");
}

#[test]
fn criterion_09_adaboost_r2_weight_trace() {
    // 20-row stump fixture: two flat levels plus sparse bumps, so every
    // round leaves most errors far below the max and the linear loss
    // stays under 0.5
    let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
    let mut y: Vec<f64> = (0..20).map(|i| if i < 10 { 0.0 } else { 10.0 }).collect();
    for (i, bump) in [(2, 0.6), (5, 1.2), (8, 0.3), (13, 0.8), (16, 1.5), (19, 0.4)] {
        y[i] += bump;
    }
    let frame = frame_from(&x, &y);
    let model = fit_adaboost_r2(
        &frame,
        &AdaBoostConfig {
            n_rounds: 3,
            base: TreeConfig { max_depth: 1, min_samples_leaf: 1, ..TreeConfig::default() },
            seed: 3,
        },
    )
    .unwrap();
    assert_eq!(model.trees.len(), 3, "fixture must sustain three usable rounds");
    assert_eq!(model.weight_history.len(), 4);

    // independent replay of the R2 update from the kept trees' predictions
    let n = 20usize;
    let mut w = vec![1.0 / n as f64; n];
    assert_eq!(model.weight_history[0], w);
    for t in 0..3 {
        let preds = model.trees[t].predict_frame(&frame).unwrap();
        let errs: Vec<f64> = preds.iter().zip(&y).map(|(p, v)| (v - p).abs()).collect();
        let max_err = errs.iter().fold(0.0f64, |a, &b| a.max(b));
        assert!(max_err > 0.0, "stump must not fit exactly");
        let avg_loss: f64 = errs.iter().zip(&w).map(|(e, wi)| wi * (e / max_err)).sum();
        assert!(avg_loss < 0.5, "round {t} unusable: avg loss {avg_loss}");
        let beta = avg_loss / (1.0 - avg_loss);
        assert!((model.log_inv_beta[t] - (1.0 / beta).ln()).abs() < 1e-12);
        for (wi, e) in w.iter_mut().zip(&errs) {
            *wi *= beta.powf(1.0 - e / max_err);
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|wi| *wi /= sum);
        for (i, (a, b)) in model.weight_history[t + 1].iter().zip(&w).enumerate() {
            assert!((a - b).abs() < 1e-12, "round {t} weight {i}: {a} vs {b}");
        }
    }
    println!("criterion 9: PASS — 3-round weight trace matches the scripted R2 update (1e-12)");
}

#[test]
#[ignore = "needs the external snapshot; set ROADCAST_SNAPSHOT to its CSV path"]
fn criterion_10_external_snapshot_statistics() {
    let path = std::env::var("ROADCAST_SNAPSHOT")
        .expect("set ROADCAST_SNAPSHOT to the downloaded snapshot CSV");
    let ingested = parse_snapshot(Path::new(&path), ParseMode::Lenient).unwrap();
    let tables = eda::all_tables(&ingested.records, 1.0);
    let by_name = |name: &str| tables.iter().find(|t| t.name == name).unwrap();

    let mut states = by_name("state_counts").rows.clone();
    states.sort_by(|a, b| b.count.cmp(&a.count));
    assert_eq!(states[0].key, "CA", "state rank 1");
    assert_eq!(states[1].key, "FL", "state rank 2");

    let weekday = by_name("weekday_shares");
    let friday = weekday.rows.iter().find(|r| r.key == "5-friday").unwrap();
    assert!((friday.share - 0.172).abs() <= 0.005, "friday share {}", friday.share);

    let hour = by_name("hourly_histogram").argmax().unwrap().key.clone();
    assert!(["16", "17", "18"].contains(&hour.as_str()), "hourly argmax {hour}");

    let yearly = by_name("yearly_counts");
    let count = |k: &str| yearly.rows.iter().find(|r| r.key == k).map_or(0, |r| r.count);
    assert!(count("2020") as f64 >= 1.5 * count("2019") as f64, "2020 must dwarf 2019");
    println!("criterion 10: PASS — snapshot ranks, Friday share, hourly peak, 2020 jump all hold");
}
