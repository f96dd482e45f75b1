//! Instruction-response corpora: JSONL ingestion and seeded warmup sampling.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::util::{count_floor, read_bytes, sha256_hex};

/// One instruction-response pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub instruction: String,
    pub response: String,
    /// Fields beyond the three known ones, kept verbatim.
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        instruction: impl Into<String>,
        response: impl Into<String>,
    ) -> Self {
        Sample {
            id: id.into(),
            instruction: instruction.into(),
            response: response.into(),
            extra: Map::new(),
        }
    }
}

#[derive(Deserialize)]
struct RawSample {
    id: String,
    instruction: String,
    response: String,
    #[serde(flatten)]
    extra: Map<String, Value>,
}

/// An ordered, validated collection of samples. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    samples: Vec<Sample>,
    index: HashMap<String, usize>,
    source_digest: String,
}

impl Corpus {
    /// Reads a JSONL corpus from disk.
    pub fn ingest(path: impl AsRef<Path>) -> Result<Corpus> {
        let bytes = read_bytes(path.as_ref())?;
        Corpus::from_jsonl_bytes(&bytes)
    }

    /// Parses JSONL bytes; the digest is taken over the raw bytes.
    pub fn from_jsonl_bytes(bytes: &[u8]) -> Result<Corpus> {
        let source_digest = sha256_hex(bytes);
        let mut samples = Vec::new();
        for (idx, line) in bytes.split(|&b| b == b'\n').enumerate() {
            let line_no = idx + 1;
            let line = line.strip_suffix(b"\r").unwrap_or(line);
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            let raw: RawSample =
                serde_json::from_slice(line).map_err(|e| Error::MalformedLine {
                    line: line_no,
                    reason: e.to_string(),
                })?;
            samples.push((line_no, raw));
        }
        Corpus::build(samples, source_digest)
    }

    /// Builds a corpus from in-memory samples. The digest covers the JSONL
    /// rendering of the samples, so it matches what `to_jsonl` would write.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Corpus> {
        let bytes = crate::util::to_jsonl(&samples);
        let numbered = samples
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                (
                    i + 1,
                    RawSample {
                        id: s.id,
                        instruction: s.instruction,
                        response: s.response,
                        extra: s.extra,
                    },
                )
            })
            .collect();
        Corpus::build(numbered, sha256_hex(&bytes))
    }

    fn build(raw: Vec<(usize, RawSample)>, source_digest: String) -> Result<Corpus> {
        let mut index = HashMap::with_capacity(raw.len());
        let mut samples = Vec::with_capacity(raw.len());
        for (line, r) in raw {
            if r.id.is_empty() {
                return Err(Error::MalformedLine {
                    line,
                    reason: "sample id is empty".into(),
                });
            }
            if r.response.is_empty() {
                return Err(Error::EmptyResponse { line, id: r.id });
            }
            if index.contains_key(&r.id) {
                return Err(Error::DuplicateId { line, id: r.id });
            }
            index.insert(r.id.clone(), samples.len());
            samples.push(Sample {
                id: r.id,
                instruction: r.instruction,
                response: r.response,
                extra: r.extra,
            });
        }
        if samples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus {
            samples,
            index,
            source_digest,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn source_digest(&self) -> &str {
        &self.source_digest
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.id.as_str())
    }

    pub fn get(&self, id: &str) -> Option<&Sample> {
        self.index.get(id).map(|&i| &self.samples[i])
    }

    /// Position of `id` in corpus order.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// JSONL rendering in corpus order.
    pub fn to_jsonl(&self) -> Vec<u8> {
        crate::util::to_jsonl(&self.samples)
    }

    /// Splits the corpus into a warmup subset of `floor(alpha * N)` samples and
    /// the rest. Both id lists come back in corpus order.
    ///
    /// Sampling is a seeded Fisher-Yates shuffle of corpus positions; the first
    /// `floor(alpha * N)` shuffled positions form the warmup set.
    pub fn sample_warmup(&self, alpha: f64, seed: u64) -> Result<WarmupSplit> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1], got {alpha}"
            )));
        }
        let n = self.samples.len();
        let size = count_floor(alpha, n);
        if size == 0 {
            return Err(Error::WarmupTooSmall { alpha, n });
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut in_warmup = vec![false; n];
        for &i in &order[..size] {
            in_warmup[i] = true;
        }
        let (mut warmup, mut rest) = (Vec::with_capacity(size), Vec::with_capacity(n - size));
        for (sample, chosen) in self.samples.iter().zip(in_warmup) {
            if chosen {
                warmup.push(sample.id.clone());
            } else {
                rest.push(sample.id.clone());
            }
        }
        Ok(WarmupSplit { warmup, rest })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarmupSplit {
    pub warmup: Vec<String>,
    pub rest: Vec<String>,
}
