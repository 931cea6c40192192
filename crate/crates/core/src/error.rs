use alloc::string::String;

/// Errors raised while building frames or fitting/applying models.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("frame is empty")]
    EmptyFrame,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("R² undefined: actual values have zero variance")]
    ZeroVariance,
    #[error("row is missing feature column {index} ({name})")]
    MissingFeature { index: usize, name: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("split would leave an empty {0} side")]
    EmptySplitSide(&'static str),
    #[error("lag {lag} exceeds series length {len} for cell {cell}")]
    LagTooLong { lag: usize, len: usize, cell: String },
    #[error("no usable round: first boosting round had average loss >= 0.5")]
    NoUsableRound,
    #[error("base model '{base}' failed on fold {fold}: {cause}")]
    BaseFitFailed { base: String, fold: usize, cause: String },
    #[error("need at least {need} distinct time buckets for {folds} temporal folds, got {got}")]
    TooFewBuckets { need: usize, folds: usize, got: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("all {count} search candidates failed to fit: {causes}")]
    AllCandidatesFailed { count: usize, causes: String },
    #[error("model schema fingerprint {model} does not match frame {frame}")]
    FingerprintMismatch { model: String, frame: String },
}
