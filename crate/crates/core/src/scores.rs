//! The scorer-to-engine contract: per-sample, per-model-state aggregates.
//!
//! A score file is JSONL with one record per sample:
//!
//! ```text
//! {"sample_id":"s1","model_id":"base","token_count":12,"nll":1.25,"entropy":2.5,"entropy_exact":true}
//! ```
//!
//! `nll` and `entropy` are nats per response token. Records may also carry an
//! optional `vocab_size` (checked as an entropy bound) and arbitrary extra
//! fields such as per-token arrays, which are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{read_bytes, to_jsonl, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: String,
    pub model_id: String,
    /// Number of scored response positions.
    pub token_count: u64,
    /// Length-normalized negative log-likelihood, nats per token.
    pub nll: f64,
    /// Mean per-position predictive entropy, nats per token.
    pub entropy: f64,
    /// True iff the entropy was summed over the full vocabulary.
    pub entropy_exact: bool,
}

#[derive(Serialize, Deserialize)]
struct Record {
    sample_id: String,
    model_id: String,
    token_count: u64,
    nll: f64,
    entropy: f64,
    entropy_exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab_size: Option<u64>,
}

/// All scores produced by one model state, keyed by sample id.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    model_id: String,
    scores: BTreeMap<String, SampleScore>,
    vocab_size: Option<u64>,
}

impl ScoreSet {
    pub fn new(model_id: impl Into<String>, vocab_size: Option<u64>) -> Self {
        ScoreSet {
            model_id: model_id.into(),
            scores: BTreeMap::new(),
            vocab_size,
        }
    }

    /// Adds one score, enforcing the record invariants. `line` is only used
    /// for error reporting.
    pub fn insert(&mut self, score: SampleScore) -> Result<()> {
        self.insert_at(score, 0)
    }

    fn insert_at(&mut self, score: SampleScore, line: usize) -> Result<()> {
        if score.model_id != self.model_id {
            return Err(Error::MixedModelIds {
                line,
                expected: self.model_id.clone(),
                found: score.model_id,
            });
        }
        validate(&score, self.vocab_size, line)?;
        if self.scores.contains_key(&score.sample_id) {
            return Err(Error::DuplicateSampleId {
                line,
                id: score.sample_id,
            });
        }
        self.scores.insert(score.sample_id.clone(), score);
        Ok(())
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn vocab_size(&self) -> Option<u64> {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, sample_id: &str) -> Option<&SampleScore> {
        self.scores.get(sample_id)
    }

    pub fn contains(&self, sample_id: &str) -> bool {
        self.scores.contains_key(sample_id)
    }

    /// Scores in ascending sample-id order.
    pub fn iter(&self) -> impl Iterator<Item = &SampleScore> {
        self.scores.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.scores.keys().map(String::as_str)
    }

    /// Parses score JSONL. Record order in the input does not matter.
    pub fn from_jsonl_bytes(bytes: &[u8]) -> Result<ScoreSet> {
        Self::parse(bytes, None)
    }

    /// Like [`ScoreSet::from_jsonl_bytes`], additionally bounding every
    /// entropy by `ln(vocab_size)`.
    pub fn from_jsonl_bytes_with_vocab(bytes: &[u8], vocab_size: u64) -> Result<ScoreSet> {
        Self::parse(bytes, Some(vocab_size))
    }

    fn parse(bytes: &[u8], declared_vocab: Option<u64>) -> Result<ScoreSet> {
        let mut set: Option<ScoreSet> = None;
        for (idx, line) in bytes.split(|&b| b == b'\n').enumerate() {
            let line_no = idx + 1;
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let rec: Record = serde_json::from_slice(line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                reason: e.to_string(),
            })?;
            let set = set.get_or_insert_with(|| {
                ScoreSet::new(rec.model_id.clone(), declared_vocab.or(rec.vocab_size))
            });
            if let Some(v) = rec.vocab_size {
                if set.vocab_size != Some(v) {
                    return Err(Error::MalformedRecord {
                        line: line_no,
                        reason: format!(
                            "vocab_size {v} disagrees with {:?} declared earlier",
                            set.vocab_size
                        ),
                    });
                }
            }
            set.insert_at(
                SampleScore {
                    sample_id: rec.sample_id,
                    model_id: rec.model_id,
                    token_count: rec.token_count,
                    nll: rec.nll,
                    entropy: rec.entropy,
                    entropy_exact: rec.entropy_exact,
                },
                line_no,
            )?;
        }
        set.ok_or(Error::EmptyScoreSet)
    }

    /// Loads a score file from disk.
    pub fn load(path: impl AsRef<Path>) -> Result<ScoreSet> {
        Self::from_jsonl_bytes(&read_bytes(path.as_ref())?)
    }

    /// JSONL rendering, one record per sample in ascending id order. Reals use
    /// the shortest decimal form that parses back to the same bits.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let records: Vec<Record> = self
            .scores
            .values()
            .map(|s| Record {
                sample_id: s.sample_id.clone(),
                model_id: s.model_id.clone(),
                token_count: s.token_count,
                nll: s.nll,
                entropy: s.entropy,
                entropy_exact: s.entropy_exact,
                vocab_size: self.vocab_size,
            })
            .collect();
        to_jsonl(&records)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.is_empty() {
            return Err(Error::EmptyScoreSet);
        }
        write_atomic(path.as_ref(), &self.to_jsonl())
    }
}

fn validate(s: &SampleScore, vocab_size: Option<u64>, line: usize) -> Result<()> {
    if s.sample_id.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            reason: "sample_id is empty".into(),
        });
    }
    if s.token_count == 0 {
        return Err(Error::MalformedRecord {
            line,
            reason: "token_count must be at least 1".into(),
        });
    }
    for (field, value) in [("nll", s.nll), ("entropy", s.entropy)] {
        if !value.is_finite() {
            return Err(Error::MalformedRecord {
                line,
                reason: format!("{field} is not finite"),
            });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { line, field, value });
        }
    }
    if let Some(v) = vocab_size {
        let bound = (v as f64).ln();
        // Exact-sum entropies of a near-uniform distribution may overshoot
        // ln V by rounding.
        if s.entropy > bound + 1e-9 {
            return Err(Error::EntropyExceedsLogVocab {
                line,
                entropy: s.entropy,
                vocab_size: v,
                bound,
            });
        }
    }
    Ok(())
}

/// Result of matching two score sets on sample id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    /// Ids scored by both sets, ascending.
    pub ids: Vec<String>,
    /// Ids present in `a` but absent from `b`.
    pub missing_from_b: Vec<String>,
    /// Ids present in `b` but absent from `a`.
    pub missing_from_a: Vec<String>,
}

/// Intersects the key sets of two score sets.
pub fn align(a: &ScoreSet, b: &ScoreSet) -> Result<Alignment> {
    let mut out = Alignment {
        ids: Vec::new(),
        missing_from_b: Vec::new(),
        missing_from_a: Vec::new(),
    };
    for id in a.ids() {
        if b.contains(id) {
            out.ids.push(id.to_owned());
        } else {
            out.missing_from_b.push(id.to_owned());
        }
    }
    out.missing_from_a = b.ids().filter(|id| !a.contains(id)).map(str::to_owned).collect();
    if out.ids.is_empty() {
        return Err(Error::EmptyIntersection {
            a: a.model_id.clone(),
            b: b.model_id.clone(),
        });
    }
    Ok(out)
}
