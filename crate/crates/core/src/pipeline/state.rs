//! On-disk run state.
//!
//! ```text
//! <root>/run.json                 run summary, config and per-iteration status
//! <root>/scores_base.jsonl        base-state scores
//! <root>/iter_<k>/scores_inst.jsonl
//! <root>/iter_<k>/diffs.jsonl
//! <root>/iter_<k>/selection.jsonl
//! <root>/iter_<k>/manifest.json   hand-off to an external trainer
//! ```
//!
//! In external mode each round goes awaiting_scores -> scored -> selected.
//! The trainer reads the manifest, produces the next calibrated state, scores
//! the corpus with it, and [`resume_external`] picks the loop back up. Every
//! file is replaced atomically and `run.json` is written last, so an
//! interrupted step can simply be repeated.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{inst_model_id, BuiltinRun, BuiltinScorer, IterationState, Status, BASE_MODEL_ID};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::metrics::{compute_diffs, save_diffs};
use crate::scores::ScoreSet;
use crate::selector::{select_at, Selection, SelectionConfig};
use crate::util::{read_bytes, write_atomic};

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Builtin,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    InProgress,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub inst_model_id: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filtered_count: Option<usize>,
    #[serde(default)]
    pub fixed_point: bool,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub format_version: u32,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,
    pub corpus_digest: String,
    pub config: SelectionConfig,
    pub config_digest: String,
    pub seed: u64,
    pub iterations_planned: usize,
    pub base_model_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scorer: Option<BuiltinScorer>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warmup_ids: Vec<String>,
    pub status: RunStatus,
    pub iterations: Vec<IterationSummary>,
}

/// Contents of `iter_<k>/manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub iteration: usize,
    pub selected_ids: Vec<String>,
    /// Model id the next round's scores must carry.
    pub next_inst_model_id: String,
    pub corpus_digest: String,
    pub config_digest: String,
    pub seed: u64,
}

/// Paths within a state directory.
#[derive(Debug, Clone)]
pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        StateDir { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn run_file(&self) -> PathBuf {
        self.root.join("run.json")
    }

    pub fn base_scores(&self) -> PathBuf {
        self.root.join("scores_base.jsonl")
    }

    pub fn iter_dir(&self, k: usize) -> PathBuf {
        self.root.join(format!("iter_{k}"))
    }

    pub fn inst_scores(&self, k: usize) -> PathBuf {
        self.iter_dir(k).join("scores_inst.jsonl")
    }

    pub fn diffs(&self, k: usize) -> PathBuf {
        self.iter_dir(k).join("diffs.jsonl")
    }

    pub fn selection(&self, k: usize) -> PathBuf {
        self.iter_dir(k).join("selection.jsonl")
    }

    pub fn manifest(&self, k: usize) -> PathBuf {
        self.iter_dir(k).join("manifest.json")
    }

    pub fn load_run(&self) -> Result<RunFile> {
        let path = self.run_file();
        let bytes = read_bytes(&path)?;
        let run: RunFile = serde_json::from_slice(&bytes)
            .map_err(|e| Error::StateError(format!("{}: {e}", path.display())))?;
        if run.format_version != FORMAT_VERSION {
            return Err(Error::StateError(format!(
                "unsupported state format version {}",
                run.format_version
            )));
        }
        Ok(run)
    }

    fn save_run(&self, run: &RunFile) -> Result<()> {
        write_atomic(&self.run_file(), &pretty(run))
    }

    pub fn load_manifest(&self, k: usize) -> Result<Manifest> {
        let path = self.manifest(k);
        serde_json::from_slice(&read_bytes(&path)?)
            .map_err(|e| Error::StateError(format!("{}: {e}", path.display())))
    }

    /// The state of round `k` as recorded on disk.
    pub fn iteration_state(&self, run: &RunFile, k: usize) -> Result<IterationState> {
        let summary = run
            .iterations
            .iter()
            .find(|s| s.iteration == k)
            .ok_or_else(|| Error::StateError(format!("no iteration {k} in run")))?;
        let selection = match summary.status {
            Status::Selected | Status::Trained => Some(Selection::load(self.selection(k))?),
            _ => None,
        };
        Ok(IterationState {
            iteration: k,
            base_model_id: run.base_model_id.clone(),
            inst_model_id: summary.inst_model_id.clone(),
            selection,
            status: summary.status,
        })
    }
}

fn pretty<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory values serialize");
    out.push(b'\n');
    out
}

/// Writes the hand-off manifest for a round that has a selection. Writing
/// the same state twice produces the same file.
pub fn emit_manifest(dir: &StateDir, state: &IterationState) -> Result<PathBuf> {
    let selection = match (&state.selection, state.status) {
        (Some(sel), Status::Selected | Status::Trained) => sel,
        _ => {
            return Err(Error::StateError(format!(
                "iteration {} has no selection yet (status {:?})",
                state.iteration, state.status
            )))
        }
    };
    let manifest = Manifest {
        iteration: state.iteration,
        selected_ids: selection.ids().into_iter().map(str::to_owned).collect(),
        next_inst_model_id: inst_model_id(state.iteration),
        corpus_digest: selection.corpus_digest.clone(),
        config_digest: selection.config_digest.clone(),
        seed: selection.seed,
    };
    let path = dir.manifest(state.iteration);
    write_atomic(&path, &pretty(&manifest))?;
    Ok(path)
}

/// Persists a finished built-in run in the state-directory layout.
pub fn write_builtin(dir: &StateDir, run: &BuiltinRun, dataset: Option<&Path>) -> Result<RunFile> {
    run.base_scores.save(dir.base_scores())?;
    let mut summaries = Vec::with_capacity(run.iterations.len());
    for rec in &run.iterations {
        let k = rec.state.iteration;
        let selection = rec.state.selection.as_ref().expect("builtin rounds are selected");
        rec.inst_scores.save(dir.inst_scores(k))?;
        save_diffs(&rec.diffs, dir.diffs(k))?;
        selection.save(dir.selection(k))?;
        emit_manifest(dir, &rec.state)?;
        summaries.push(IterationSummary {
            iteration: k,
            inst_model_id: rec.state.inst_model_id.clone(),
            status: rec.state.status,
            selected: Some(selection.len()),
            filtered_count: Some(selection.filtered_count),
            fixed_point: rec.fixed_point,
        });
    }
    let file = RunFile {
        format_version: FORMAT_VERSION,
        mode: Mode::Builtin,
        dataset: dataset.map(Path::to_path_buf),
        corpus_digest: run.corpus_digest.clone(),
        config: run.config.clone(),
        config_digest: run.config.digest(),
        seed: run.config.seed,
        iterations_planned: run.config.iterations,
        base_model_id: BASE_MODEL_ID.to_owned(),
        scorer: Some(run.scorer),
        warmup_ids: run.warmup_ids.clone(),
        status: RunStatus::Complete,
        iterations: summaries,
    };
    dir.save_run(&file)?;
    Ok(file)
}

fn check_coverage(corpus: &Corpus, scores: &ScoreSet) -> Result<()> {
    let missing: Vec<String> = corpus
        .ids()
        .filter(|id| !scores.contains(id))
        .map(str::to_owned)
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::CoverageGap { missing })
    }
}

fn check_corpus(run: &RunFile, corpus: &Corpus) -> Result<()> {
    if run.corpus_digest != corpus.source_digest() {
        return Err(Error::CorpusDigestMismatch {
            expected: run.corpus_digest.clone(),
            found: corpus.source_digest().to_owned(),
        });
    }
    Ok(())
}

/// Starts an external-mode run. Round 1 waits for scores from the warmup
/// calibrated state, `inst_k0`.
pub fn init_external(
    dir: &StateDir,
    corpus: &Corpus,
    config: &SelectionConfig,
    base_scores: &ScoreSet,
    dataset: Option<&Path>,
) -> Result<RunFile> {
    config.validate()?;
    if dir.run_file().exists() {
        return Err(Error::StateError(format!(
            "{} already holds a run",
            dir.root().display()
        )));
    }
    check_coverage(corpus, base_scores)?;
    base_scores.save(dir.base_scores())?;
    let run = RunFile {
        format_version: FORMAT_VERSION,
        mode: Mode::External,
        dataset: dataset.map(Path::to_path_buf),
        corpus_digest: corpus.source_digest().to_owned(),
        config: config.clone(),
        config_digest: config.digest(),
        seed: config.seed,
        iterations_planned: config.iterations,
        base_model_id: base_scores.model_id().to_owned(),
        scorer: None,
        warmup_ids: Vec::new(),
        status: RunStatus::InProgress,
        iterations: vec![IterationSummary {
            iteration: 1,
            inst_model_id: inst_model_id(0),
            status: Status::AwaitingScores,
            selected: None,
            filtered_count: None,
            fixed_point: false,
        }],
    };
    dir.save_run(&run)?;
    Ok(run)
}

/// Loads the next calibrated state's scores and moves the current round to
/// `scored`. If the current round is already selected, the next round is
/// opened first (and the finished one marked trained).
pub fn resume_external(dir: &StateDir, corpus: &Corpus, new_scores: &ScoreSet) -> Result<IterationState> {
    let mut run = dir.load_run()?;
    check_corpus(&run, corpus)?;
    if run.mode != Mode::External {
        return Err(Error::StateError("built-in runs cannot be resumed".into()));
    }
    if run.status == RunStatus::Complete {
        return Err(Error::StateError(format!(
            "all {} iterations are complete",
            run.iterations_planned
        )));
    }
    let current = run.iterations.last().expect("runs start with one iteration").clone();
    match current.status {
        Status::AwaitingScores => {}
        Status::Selected => {
            let next = current.iteration + 1;
            let manifest = dir.load_manifest(current.iteration)?;
            run.iterations.last_mut().unwrap().status = Status::Trained;
            run.iterations.push(IterationSummary {
                iteration: next,
                inst_model_id: manifest.next_inst_model_id,
                status: Status::AwaitingScores,
                selected: None,
                filtered_count: None,
                fixed_point: false,
            });
        }
        Status::Scored => {
            return Err(Error::StateError(format!(
                "iteration {} is already scored and awaits selection",
                current.iteration
            )))
        }
        Status::Trained => {
            return Err(Error::StateError(format!(
                "iteration {} is marked trained but no later round exists",
                current.iteration
            )))
        }
    }
    let summary = run.iterations.last_mut().unwrap();
    if new_scores.model_id() != summary.inst_model_id {
        return Err(Error::ModelIdMismatch {
            expected: summary.inst_model_id.clone(),
            found: new_scores.model_id().to_owned(),
        });
    }
    check_coverage(corpus, new_scores)?;
    new_scores.save(dir.inst_scores(summary.iteration))?;
    summary.status = Status::Scored;
    let k = summary.iteration;
    dir.save_run(&run)?;
    dir.iteration_state(&run, k)
}

/// [`resume_external`] reading the scores from a file.
pub fn resume_external_from(dir: &StateDir, corpus: &Corpus, scores_path: &Path) -> Result<IterationState> {
    resume_external(dir, corpus, &ScoreSet::load(scores_path)?)
}

/// Runs differencing and selection for a scored round, writes the selection
/// and manifest, and marks the round selected.
pub fn select_step(dir: &StateDir, corpus: &Corpus) -> Result<IterationState> {
    let mut run = dir.load_run()?;
    check_corpus(&run, corpus)?;
    let k = {
        let current = run.iterations.last().expect("runs start with one iteration");
        if current.status != Status::Scored {
            return Err(Error::StateError(format!(
                "iteration {} is {:?}, expected scored",
                current.iteration, current.status
            )));
        }
        current.iteration
    };
    let base = ScoreSet::load(dir.base_scores())?;
    let inst = ScoreSet::load(dir.inst_scores(k))?;
    let diffs = compute_diffs(corpus, &base, &inst)?.records;
    let selection = select_at(&diffs, corpus, &run.config, k).map_err(|e| match e {
        Error::EmptyPool | Error::EmptyInput => Error::IterationStalled {
            iteration: k,
            reason: e.to_string(),
        },
        other => other,
    })?;
    let fixed_point = k > 1 && {
        let prev = Selection::load(dir.selection(k - 1))?;
        let mut a = prev.ids();
        let mut b = selection.ids();
        a.sort_unstable();
        b.sort_unstable();
        a == b
    };
    save_diffs(&diffs, dir.diffs(k))?;
    selection.save(dir.selection(k))?;
    let state = IterationState {
        iteration: k,
        base_model_id: run.base_model_id.clone(),
        inst_model_id: run.iterations.last().unwrap().inst_model_id.clone(),
        selection: Some(selection),
        status: Status::Selected,
    };
    emit_manifest(dir, &state)?;
    let summary = run.iterations.last_mut().unwrap();
    summary.status = Status::Selected;
    summary.selected = state.selection.as_ref().map(Selection::len);
    summary.filtered_count = state.selection.as_ref().map(|s| s.filtered_count);
    summary.fixed_point = fixed_point;
    if k >= run.iterations_planned {
        run.status = RunStatus::Complete;
    }
    dir.save_run(&run)?;
    Ok(state)
}
