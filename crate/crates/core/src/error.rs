use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    IoFailure { path: PathBuf, source: io::Error },

    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: duplicate sample id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: sample {id:?} has an empty response")]
    EmptyResponse { line: usize, id: String },
    #[error("corpus contains no samples")]
    EmptyCorpus,
    #[error("warmup ratio {alpha} selects no samples out of {n}")]
    WarmupTooSmall { alpha: f64, n: usize },

    #[error("line {line}: malformed score record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: model id {found:?} differs from {expected:?}")]
    MixedModelIds {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("line {line}: {field} is negative ({value})")]
    NegativeValue {
        line: usize,
        field: &'static str,
        value: f64,
    },
    #[error("line {line}: duplicate score for sample {id:?}")]
    DuplicateSampleId { line: usize, id: String },
    #[error("line {line}: entropy {entropy} exceeds ln({vocab_size}) = {bound}")]
    EntropyExceedsLogVocab {
        line: usize,
        entropy: f64,
        vocab_size: u64,
        bound: f64,
    },
    #[error("score set is empty")]
    EmptyScoreSet,
    #[error("score sets {a:?} and {b:?} share no sample ids")]
    EmptyIntersection { a: String, b: String },

    #[error("n-gram training needs at least one text")]
    EmptyTraining,
    #[error("n-gram order must be in 1..={max}, got {order}")]
    InvalidOrder { order: usize, max: usize },
    #[error("smoothing constant must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("blend weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("model order/lambda mismatch: base ({base_order}, {base_lambda}) vs ({other_order}, {other_lambda})")]
    OrderMismatch {
        base_order: usize,
        base_lambda: f64,
        other_order: usize,
        other_lambda: f64,
    },
    #[error("line {line}: malformed model dump: {reason}")]
    MalformedModel { line: usize, reason: String },

    #[error("base and calibrated score sets share model id {0:?}")]
    SameModelId(String),
    #[error("sample id {0:?} is scored but not present in the corpus")]
    UnknownSampleId(String),
    #[error("line {line}: malformed diff record: {reason}")]
    MalformedDiff { line: usize, reason: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input is empty")]
    EmptyInput,
    #[error("no records are eligible for selection")]
    EmptyPool,
    #[error("line {line}: malformed selection file: {reason}")]
    MalformedSelection { line: usize, reason: String },

    #[error("iteration {iteration} stalled: {reason}")]
    IterationStalled { iteration: usize, reason: String },
    #[error("invalid state transition: {0}")]
    StateError(String),
    #[error("expected scores for model {expected:?}, got {found:?}")]
    ModelIdMismatch { expected: String, found: String },
    #[error("scores are missing {} corpus ids: {}", missing.len(), preview(missing))]
    CoverageGap { missing: Vec<String> },
    #[error("corpus digest {found} does not match the run's {expected}")]
    CorpusDigestMismatch { expected: String, found: String },

    #[error("metric {metric} has no finite values")]
    NoFiniteValues { metric: String },
    #[error("need at least {needed} complete records, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

fn preview(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .map(String::as_str)
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(", ...");
    }
    s
}

impl Error {
    /// Stable variant name, printed by the CLI next to the message.
    pub fn name(&self) -> &'static str {
        match self {
            Error::Read { .. } => "ReadFailure",
            Error::IoFailure { .. } => "IoFailure",
            Error::MalformedLine { .. } => "MalformedLine",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::EmptyResponse { .. } => "EmptyResponse",
            Error::EmptyCorpus => "EmptyCorpus",
            Error::WarmupTooSmall { .. } => "WarmupTooSmall",
            Error::MalformedRecord { .. } => "MalformedRecord",
            Error::MixedModelIds { .. } => "MixedModelIds",
            Error::NegativeValue { .. } => "NegativeValue",
            Error::DuplicateSampleId { .. } => "DuplicateSampleId",
            Error::EntropyExceedsLogVocab { .. } => "EntropyExceedsLogVocab",
            Error::EmptyScoreSet => "EmptyScoreSet",
            Error::EmptyIntersection { .. } => "EmptyIntersection",
            Error::EmptyTraining => "EmptyTraining",
            Error::InvalidOrder { .. } => "InvalidOrder",
            Error::InvalidLambda(_) => "InvalidLambda",
            Error::InvalidWeight(_) => "InvalidWeight",
            Error::OrderMismatch { .. } => "OrderMismatch",
            Error::MalformedModel { .. } => "MalformedModel",
            Error::SameModelId(_) => "SameModelId",
            Error::UnknownSampleId(_) => "UnknownSampleId",
            Error::MalformedDiff { .. } => "MalformedDiff",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::EmptyInput => "EmptyInput",
            Error::EmptyPool => "EmptyPool",
            Error::MalformedSelection { .. } => "MalformedSelection",
            Error::IterationStalled { .. } => "IterationStalled",
            Error::StateError(_) => "StateError",
            Error::ModelIdMismatch { .. } => "ModelIdMismatch",
            Error::CoverageGap { .. } => "CoverageGap",
            Error::CorpusDigestMismatch { .. } => "CorpusDigestMismatch",
            Error::NoFiniteValues { .. } => "NoFiniteValues",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::UnknownMetric(_) => "UnknownMetric",
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidConfig(_)
            | Error::WarmupTooSmall { .. }
            | Error::InvalidOrder { .. }
            | Error::InvalidLambda(_)
            | Error::InvalidWeight(_)
            | Error::UnknownMetric(_) => ErrorCategory::Config,
            Error::IoFailure { .. } => ErrorCategory::Internal,
            _ => ErrorCategory::Data,
        }
    }

    pub(crate) fn read(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Read {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn write(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::IoFailure {
            path: path.into(),
            source,
        }
    }
}
