//! Cross-module round-trips plus property checks on the data pipeline.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use roadcast_core::metrics;
use roadcast_core::rng::seed_rng;

use roadcast::dataset::{aggregate_counts, build_frame, DatasetConfig};
use roadcast::eda::all_tables;
use roadcast::fixture::generate_fixture;
use roadcast::frame_io::{load_frame, save_frame};
use roadcast::ingest::{parse_snapshot, write_snapshot, AccidentRecord, ParseMode};
use roadcast::model_io::{load_model, save_model, ModelFile};
use roadcast::report::{fit_roster, resolve_roster};

fn records() -> &'static [AccidentRecord] {
    static CELL: OnceLock<Vec<AccidentRecord>> = OnceLock::new();
    CELL.get_or_init(|| generate_fixture(7))
}

#[test]
fn documented_library_path_works() {
    use roadcast_core::frame::SplitSpec;
    use roadcast_core::{fit, ModelSpec};

    let frame = build_frame(&records()[..1200], &DatasetConfig::default(), 42).unwrap();
    let (train, test) = frame.split(&SplitSpec::temporal(0.2)).unwrap();
    let model = fit(&train, &ModelSpec::RandomForest(Default::default())).unwrap();
    let preds = model.predict_frame(&test).unwrap();
    assert_eq!(preds.len(), test.n_rows());
    metrics::r_square(&test.targets, &preds).unwrap();
}

#[test]
fn frame_file_round_trip_is_lossless() {
    let frame = build_frame(records(), &DatasetConfig::default(), 42).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.frame");
    save_frame(&path, &frame).unwrap();
    let back = load_frame(&path).unwrap();
    assert_eq!(back.fingerprint(), frame.fingerprint());
    assert_eq!(back.n_rows(), frame.n_rows());
    assert_eq!(back.n_cols(), frame.n_cols());
    assert_eq!(back.targets, frame.targets);
    assert_eq!(back.row_keys, frame.row_keys);
}

#[test]
fn model_files_preserve_predictions_exactly() {
    let frame = build_frame(&records()[..1500], &DatasetConfig::default(), 42).unwrap();
    let names: Vec<String> =
        ["decision_tree", "lasso", "adaboost_r2"].iter().map(|s| s.to_string()).collect();
    let roster = resolve_roster(&names, 42, 16, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for entry in fit_roster(&frame, &roster) {
        let model = entry.outcome.expect("roster model must fit");
        let before = model.predict_frame(&frame).unwrap();
        let path = dir.path().join(format!("{}.ron", entry.name));
        save_model(&path, &ModelFile::new(model, 42, frame.fingerprint())).unwrap();
        let after = load_model(&path).unwrap().model.predict_frame(&frame).unwrap();
        assert_eq!(before, after, "{} drifted through its file", entry.name);
        assert!(metrics::r_square(&frame.targets, &after).unwrap() > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn snapshot_round_trip_preserves_records(
        subset in prop::sample::subsequence((0..2000usize).collect::<Vec<_>>(), 1..300)
    ) {
        let picked: Vec<AccidentRecord> =
            subset.iter().map(|&i| records()[i].clone()).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_snapshot(&path, &picked).unwrap();
        let back = parse_snapshot(&path, ParseMode::Strict).unwrap();
        prop_assert_eq!(&back.records, &picked);
        prop_assert_eq!(back.summary.rows_accepted, picked.len() as u64);
        prop_assert_eq!(back.summary.rows_rejected, 0);
    }

    #[test]
    fn aggregation_accounts_for_every_record(
        subset in prop::sample::subsequence((0..3000usize).collect::<Vec<_>>(), 1..500)
    ) {
        let picked: Vec<AccidentRecord> =
            subset.iter().map(|&i| records()[i].clone()).collect();
        let agg = aggregate_counts(&picked, &DatasetConfig::default()).unwrap();
        prop_assert_eq!(agg.total_count() + agg.excluded, picked.len() as u64);
    }

    #[test]
    fn zero_fill_only_adds_empty_buckets(
        subset in prop::sample::subsequence((0..3000usize).collect::<Vec<_>>(), 2..400)
    ) {
        let picked: Vec<AccidentRecord> =
            subset.iter().map(|&i| records()[i].clone()).collect();
        let sparse_cfg = DatasetConfig { zero_fill: false, ..DatasetConfig::default() };
        let sparse = aggregate_counts(&picked, &sparse_cfg).unwrap();
        let filled = aggregate_counts(&picked, &DatasetConfig::default()).unwrap();
        prop_assert_eq!(sparse.total_count(), filled.total_count());
        for (cell, buckets) in &filled.cells {
            let observed = &sparse.cells[cell];
            for (bucket, &count) in buckets {
                match observed.get(bucket) {
                    Some(&c) => prop_assert_eq!(c, count),
                    None => prop_assert_eq!(count, 0, "padding must be zero"),
                }
            }
        }
    }

    #[test]
    fn stat_tables_ignore_record_order(shuffle_seed in any::<u64>()) {
        let mut shuffled: Vec<AccidentRecord> = records()[..800].to_vec();
        shuffled.shuffle(&mut seed_rng(shuffle_seed));
        let original = all_tables(&records()[..800], 1.0);
        let permuted = all_tables(&shuffled, 1.0);
        prop_assert_eq!(original, permuted);
    }

    #[test]
    fn frames_are_reproducible_across_builds(take in 200..1200usize) {
        let a = build_frame(&records()[..take], &DatasetConfig::default(), 9).unwrap();
        let b = build_frame(&records()[..take], &DatasetConfig::default(), 9).unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
    }
}
