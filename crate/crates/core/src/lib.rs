//! Training-data selection for instruction tuning by model-state differences.
//!
//! A base model and a lightly calibrated copy of it score every sample. The
//! per-token NLL difference drops both tails of the corpus, and the per-token
//! entropy difference ranks what remains. The crate covers the whole loop:
//! corpus ingestion ([`corpus`]), the score-file contract ([`scores`]), a
//! built-in n-gram reference scorer ([`ngram`]), differencing ([`metrics`]),
//! filtering and selection ([`selector`]), iterative orchestration
//! ([`pipeline`]) and reports ([`analytics`]).

pub mod analytics;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod ngram;
pub mod pipeline;
pub mod scores;
pub mod selector;
pub mod synth;
pub mod util;

pub use analytics::{correlations, histogram, overlap, CorrelationMatrix, Histogram, Metric, OverlapReport};
pub use corpus::{Corpus, Sample, WarmupSplit};
pub use error::{Error, ErrorCategory, Result};
pub use metrics::{compute_diffs, length_stats, DiffRecord, DiffReport, LengthStats};
pub use ngram::NGramModel;
pub use pipeline::{run_builtin, BuiltinRun, BuiltinScorer, IterationState, Status};
pub use scores::{align, Alignment, SampleScore, ScoreSet};
pub use selector::{nll_filter, quantile, select, select_at, Selection, SelectionConfig, Strategy};
