//! Two-stage selection with iterative recalibration.
//!
//! Stage 1 samples a warmup subset and calibrates a copy of the base model
//! on it. Stage 2 repeats K times: score every sample under both states,
//! difference the scores, filter by NLL difference, select by the configured
//! strategy and, unless this was the last round, recalibrate a fresh copy of
//! the *base* model on the selection.
//!
//! [`run_builtin`] drives the whole loop with the n-gram reference scorer.
//! The [`state`] submodule persists runs on disk and drives the same loop one
//! step at a time when scores come from an external model.

pub mod state;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{compute_diffs, DiffRecord};
use crate::ngram::{NGramModel, DEFAULT_BLEND_WEIGHT, DEFAULT_LAMBDA, DEFAULT_ORDER};
use crate::scores::ScoreSet;
use crate::selector::{select_at, Selection, SelectionConfig};

pub const BASE_MODEL_ID: &str = "base";

/// Label of the calibrated state produced after iteration `k` (0 = warmup).
pub fn inst_model_id(k: usize) -> String {
    format!("inst_k{k}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    AwaitingScores,
    Scored,
    Selected,
    /// The next calibrated state has been formed from this iteration's
    /// selection.
    Trained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    /// 0 is the warmup stage; selection rounds are 1..=K.
    pub iteration: usize,
    pub base_model_id: String,
    /// The calibrated state this iteration scores with.
    pub inst_model_id: String,
    pub selection: Option<Selection>,
    pub status: Status,
}

/// Parameters of the built-in n-gram scorer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuiltinScorer {
    pub order: usize,
    pub lambda: f64,
    pub blend_weight: f64,
}

impl Default for BuiltinScorer {
    fn default() -> Self {
        BuiltinScorer {
            order: DEFAULT_ORDER,
            lambda: DEFAULT_LAMBDA,
            blend_weight: DEFAULT_BLEND_WEIGHT,
        }
    }
}

/// Everything one selection round produced.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub state: IterationState,
    pub inst_scores: ScoreSet,
    pub diffs: Vec<DiffRecord>,
    /// Set when the selection equals the previous round's (as a set).
    pub fixed_point: bool,
}

#[derive(Debug, Clone)]
pub struct BuiltinRun {
    pub config: SelectionConfig,
    pub scorer: BuiltinScorer,
    pub corpus_digest: String,
    pub warmup_ids: Vec<String>,
    pub warmup_state: IterationState,
    pub base_scores: ScoreSet,
    pub iterations: Vec<IterationRecord>,
}

impl BuiltinRun {
    /// Selection of the last round.
    pub fn final_selection(&self) -> &Selection {
        self.iterations
            .last()
            .and_then(|r| r.state.selection.as_ref())
            .expect("a completed run has at least one selection")
    }

    /// Audit trail: the warmup state followed by every selection round.
    pub fn states(&self) -> Vec<&IterationState> {
        std::iter::once(&self.warmup_state)
            .chain(self.iterations.iter().map(|r| &r.state))
            .collect()
    }
}

/// Runs the full loop with the built-in scorer. The result is a pure function
/// of the inputs.
pub fn run_builtin<S: AsRef<str>>(
    corpus: &Corpus,
    config: &SelectionConfig,
    scorer: &BuiltinScorer,
    base_texts: &[S],
) -> Result<BuiltinRun> {
    config.validate()?;
    let base = NGramModel::train(base_texts, scorer.order, scorer.lambda)?;
    let split = corpus.sample_warmup(config.alpha, config.seed)?;
    let warmup_samples = split.warmup.iter().map(|id| corpus.get(id).expect("corpus id"));
    let mut inst = base.blend_samples(warmup_samples, scorer.blend_weight)?;
    let base_scores = base.score_corpus(BASE_MODEL_ID, corpus);

    let warmup_state = IterationState {
        iteration: 0,
        base_model_id: BASE_MODEL_ID.to_owned(),
        inst_model_id: inst_model_id(0),
        selection: None,
        status: Status::Trained,
    };

    let mut iterations: Vec<IterationRecord> = Vec::with_capacity(config.iterations);
    for k in 1..=config.iterations {
        let model_id = inst_model_id(k - 1);
        let inst_scores = inst.score_corpus(&model_id, corpus);
        let diffs = compute_diffs(corpus, &base_scores, &inst_scores)?.records;
        let selection = select_at(&diffs, corpus, config, k).map_err(|e| stall(k, e))?;
        if selection.is_empty() {
            return Err(Error::IterationStalled {
                iteration: k,
                reason: "selection is empty".into(),
            });
        }
        let fixed_point = iterations.last().is_some_and(|prev| {
            let prev = prev.state.selection.as_ref().expect("selected");
            same_ids(prev, &selection)
        });
        let mut status = Status::Selected;
        if k < config.iterations {
            let chosen = selection
                .entries
                .iter()
                .map(|e| corpus.get(&e.sample_id).expect("corpus id"));
            inst = base.blend_samples(chosen, scorer.blend_weight)?;
            status = Status::Trained;
        }
        iterations.push(IterationRecord {
            state: IterationState {
                iteration: k,
                base_model_id: BASE_MODEL_ID.to_owned(),
                inst_model_id: model_id,
                selection: Some(selection),
                status,
            },
            inst_scores,
            diffs,
            fixed_point,
        });
    }

    Ok(BuiltinRun {
        config: config.clone(),
        scorer: *scorer,
        corpus_digest: corpus.source_digest().to_owned(),
        warmup_ids: split.warmup,
        warmup_state,
        base_scores,
        iterations,
    })
}

fn stall(iteration: usize, e: Error) -> Error {
    match e {
        Error::EmptyPool | Error::EmptyInput => Error::IterationStalled {
            iteration,
            reason: e.to_string(),
        },
        other => other,
    }
}

fn same_ids(a: &Selection, b: &Selection) -> bool {
    let a: BTreeSet<&str> = a.ids().into_iter().collect();
    let b: BTreeSet<&str> = b.ids().into_iter().collect();
    a == b
}
