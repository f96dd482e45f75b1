//! Per-sample model-state differences.
//!
//! For each sample scored by both states:
//!
//! * `delta_nll = nll_inst - nll_base` (learning-signal strength)
//! * `delta_h = h_base - h_inst`; positive means the calibrated state is less
//!   entropic on the sample (compression), negative means more (expansion).

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sample};
use crate::error::{Error, Result};
use crate::scores::{align, ScoreSet};
use crate::util::{read_bytes, to_jsonl, write_atomic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRecord {
    pub sample_id: String,
    pub delta_nll: f64,
    pub delta_h: f64,
    pub nll_base: f64,
    pub nll_inst: f64,
    pub h_base: f64,
    pub h_inst: f64,
    pub inst_len: u64,
    pub resp_len: u64,
    pub len_ratio_ir: f64,
    /// `None` when the instruction is empty (infinite ratio).
    pub len_ratio_ri: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthStats {
    pub inst_len: u64,
    pub resp_len: u64,
    pub len_ratio_ir: f64,
    pub len_ratio_ri: Option<f64>,
}

/// Character lengths (Unicode scalar values) and their ratios.
pub fn length_stats(sample: &Sample) -> LengthStats {
    let inst_len = sample.instruction.chars().count() as u64;
    let resp_len = sample.response.chars().count() as u64;
    let len_ratio_ir = if resp_len == 0 {
        0.0
    } else {
        inst_len as f64 / resp_len as f64
    };
    let len_ratio_ri = (inst_len > 0).then(|| resp_len as f64 / inst_len as f64);
    LengthStats {
        inst_len,
        resp_len,
        len_ratio_ir,
        len_ratio_ri,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    /// One record per aligned id, in corpus order.
    pub records: Vec<DiffRecord>,
    /// Ids scored by the base state only.
    pub missing_from_inst: Vec<String>,
    /// Ids scored by the calibrated state only.
    pub missing_from_base: Vec<String>,
}

/// Differences the calibrated state `inst` against `base` for every sample
/// both sets score.
pub fn compute_diffs(corpus: &Corpus, base: &ScoreSet, inst: &ScoreSet) -> Result<DiffReport> {
    if base.model_id() == inst.model_id() {
        return Err(Error::SameModelId(base.model_id().to_owned()));
    }
    let alignment = align(base, inst)?;
    let mut positions = Vec::with_capacity(alignment.ids.len());
    for id in &alignment.ids {
        let pos = corpus
            .position(id)
            .ok_or_else(|| Error::UnknownSampleId(id.clone()))?;
        positions.push(pos);
    }
    positions.sort_unstable();
    let samples = corpus.samples();
    let records = positions
        .par_iter()
        .map(|&pos| {
            let sample = &samples[pos];
            let b = base.get(&sample.id).expect("aligned id");
            let i = inst.get(&sample.id).expect("aligned id");
            let lengths = length_stats(sample);
            DiffRecord {
                sample_id: sample.id.clone(),
                delta_nll: i.nll - b.nll,
                delta_h: b.entropy - i.entropy,
                nll_base: b.nll,
                nll_inst: i.nll,
                h_base: b.entropy,
                h_inst: i.entropy,
                inst_len: lengths.inst_len,
                resp_len: lengths.resp_len,
                len_ratio_ir: lengths.len_ratio_ir,
                len_ratio_ri: lengths.len_ratio_ri,
            }
        })
        .collect();
    Ok(DiffReport {
        records,
        missing_from_inst: alignment.missing_from_b,
        missing_from_base: alignment.missing_from_a,
    })
}

/// Diff dump: one JSON object per record.
pub fn diffs_to_jsonl(records: &[DiffRecord]) -> Vec<u8> {
    to_jsonl(records)
}

pub fn diffs_from_jsonl(bytes: &[u8]) -> Result<Vec<DiffRecord>> {
    let mut out = Vec::new();
    for (idx, line) in bytes.split(|&b| b == b'\n').enumerate() {
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let rec: DiffRecord = serde_json::from_slice(line).map_err(|e| Error::MalformedDiff {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

pub fn save_diffs(records: &[DiffRecord], path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &diffs_to_jsonl(records))
}

pub fn load_diffs(path: impl AsRef<Path>) -> Result<Vec<DiffRecord>> {
    diffs_from_jsonl(&read_bytes(path.as_ref())?)
}
