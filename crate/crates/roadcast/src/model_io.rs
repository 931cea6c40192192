//! Model persistence in RON. RON keeps non-finite floats (AdaBoost rounds
//! that fit exactly carry infinite log-weights) and Rust's float formatting
//! is shortest-round-trip, so a saved model predicts bit-identically after
//! reload.

use std::path::Path;

use roadcast_core::TrainedModel;
use serde::{Deserialize, Serialize};

use crate::error::AppError;

pub const MODEL_FORMAT: &str = "roadcast-model v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    /// Model family name, e.g. "random_forest".
    pub name: String,
    /// Digest of the resolved configuration, hex.
    pub config_digest: String,
    pub seed: u64,
    /// Content fingerprint of the frame the model was fitted on, hex.
    pub train_fingerprint: String,
    pub model: TrainedModel,
}

impl ModelFile {
    pub fn new(model: TrainedModel, seed: u64, train_fingerprint: u64) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            name: model.name(),
            config_digest: format!("{:016x}", model.spec.config_digest()),
            seed,
            train_fingerprint: format!("{train_fingerprint:016x}"),
            model,
        }
    }
}

pub fn save_model(path: &Path, file: &ModelFile) -> Result<(), AppError> {
    let pretty = ron::ser::PrettyConfig::new().depth_limit(6);
    let text = ron::ser::to_string_pretty(file, pretty)
        .map_err(|e| AppError::Validation(format!("model serialization failed: {e}")))?;
    std::fs::write(path, text).map_err(|e| AppError::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelFile, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let file: ModelFile = ron::from_str(&text).map_err(|e| {
        AppError::Compat(format!("{}: not a roadcast model file ({e})", path.display()))
    })?;
    if file.format != MODEL_FORMAT {
        return Err(AppError::Compat(format!(
            "{}: unsupported model format \"{}\"",
            path.display(),
            file.format
        )));
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use roadcast_core::frame::{ColumnKind, ColumnMeta, FeatureFrame, RowKey};
    use roadcast_core::model::fit;
    use roadcast_core::tree::TreeConfig;
    use roadcast_core::ModelSpec;

    fn toy_frame() -> FeatureFrame {
        let mut f = FeatureFrame::new(vec![
            ColumnMeta::new("x0", ColumnKind::Numeric),
            ColumnMeta::new("x1", ColumnKind::Numeric),
        ]);
        for i in 0..40 {
            let x0 = (i % 8) as f64;
            let x1 = (i % 5) as f64;
            f.push_row(
                RowKey { cell: "CA/A".into(), bucket_start: i },
                &[x0, x1],
                2.0 * x0 + if x1 > 2.0 { 5.0 } else { 0.0 },
            );
        }
        f
    }

    #[test]
    fn tree_model_round_trips_with_identical_predictions() {
        let frame = toy_frame();
        let spec = ModelSpec::DecisionTree(TreeConfig::default());
        let trained = fit(&frame, &spec).unwrap();
        let before = trained.predict_frame(&frame).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tree.ron");
        save_model(&path, &ModelFile::new(trained, 42, frame.fingerprint())).unwrap();
        let loaded = load_model(&path).unwrap();
        assert_eq!(loaded.name, "decision_tree");
        let after = loaded.model.predict_frame(&frame).unwrap();
        assert_eq!(before.iter().map(|v| v.to_bits()).collect::<Vec<u64>>(),
                   after.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
    }

    #[test]
    fn infinite_boost_weights_survive_the_format() {
        use roadcast_core::adaboost::AdaBoostConfig;
        // deep stumps on tiny separable data fit rounds exactly, producing
        // infinite log(1/beta) weights
        let mut f = FeatureFrame::new(vec![ColumnMeta::new("x", ColumnKind::Numeric)]);
        let ys = [0.0, 0.01, 0.02, 0.0, 10.0, 20.0];
        for (i, y) in ys.iter().enumerate() {
            f.push_row(RowKey { cell: "c".into(), bucket_start: i as i64 }, &[i as f64], *y);
        }
        let cfg = AdaBoostConfig {
            n_rounds: 2,
            base: TreeConfig { max_depth: 8, min_samples_leaf: 1, ..TreeConfig::default() },
            seed: 7,
        };
        let trained = fit(&f, &ModelSpec::AdaBoostR2(cfg)).unwrap();
        let has_inf = match &trained.inner {
            roadcast_core::model::Fitted::AdaBoost(m) => {
                m.log_inv_beta.iter().any(|b| b.is_infinite())
            }
            _ => unreachable!("adaboost spec fits an adaboost model"),
        };
        assert!(has_inf, "fixture must exercise the infinite-weight path");

        let before = trained.predict_frame(&f).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ada.ron");
        save_model(&path, &ModelFile::new(trained, 7, f.fingerprint())).unwrap();
        let after = load_model(&path).unwrap().model.predict_frame(&f).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn non_model_file_is_compat_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ron");
        std::fs::write(&path, "(format: \"something\")").unwrap();
        let err = load_model(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
