//! Built-in reference scorer: an add-lambda smoothed byte-level n-gram model.
//!
//! The vocabulary is the 256 byte values plus an end-of-sequence symbol. The
//! same symbol pads the left edge of every sequence, so each position has a
//! full `order - 1` symbol context. For every context `c` and symbol `v`:
//!
//! ```text
//! p(v | c) = (count(c, v) + lambda) / (total(c) + lambda * 257)
//! ```
//!
//! Training on text stands in for fine-tuning: the calibrated model is the
//! base model's counts plus a weighted copy of the warmup counts.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Sample};
use crate::error::{Error, Result};
use crate::scores::{SampleScore, ScoreSet};
use crate::util::{read_bytes, write_atomic};

pub const VOCAB_SIZE: usize = 257;
/// End-of-sequence, also used as left padding.
pub const EOS: u16 = 256;
/// Contexts are packed 9 bits per symbol into a `u64`.
pub const MAX_ORDER: usize = 8;
pub const DEFAULT_ORDER: usize = 3;
pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_BLEND_WEIGHT: f64 = 5.0;

const SYMBOL_BITS: u32 = 9;

#[derive(Debug, Clone, PartialEq)]
struct ContextCounts {
    total: f64,
    /// Non-zero counts, ascending by symbol.
    entries: Vec<(u16, f64)>,
    /// Entropy of the smoothed distribution, cached at build time.
    entropy: f64,
}

impl ContextCounts {
    fn new(counts: BTreeMap<u16, f64>, lambda: f64) -> Self {
        let entries: Vec<(u16, f64)> = counts.into_iter().filter(|&(_, c)| c > 0.0).collect();
        let total: f64 = entries.iter().map(|&(_, c)| c).sum();
        let denom = total + lambda * VOCAB_SIZE as f64;
        let unseen = (VOCAB_SIZE - entries.len()) as f64;
        let p0 = lambda / denom;
        let mut entropy = -unseen * p0 * p0.ln();
        for &(_, c) in &entries {
            let p = (c + lambda) / denom;
            entropy -= p * p.ln();
        }
        ContextCounts {
            total,
            entries,
            entropy,
        }
    }

    fn count(&self, symbol: u16) -> f64 {
        self.entries
            .binary_search_by_key(&symbol, |&(s, _)| s)
            .map_or(0.0, |i| self.entries[i].1)
    }
}

/// Raw (context, symbol) occurrence counts, before smoothing.
#[derive(Debug, Default)]
struct CountTable {
    cells: HashMap<u64, BTreeMap<u16, f64>>,
}

impl CountTable {
    fn add_sequence(&mut self, order: usize, prefix: &[u8], body: &[u8], weight: f64) {
        let mut ctx = ContextKey::start(order);
        for &b in prefix {
            ctx.push(b as u16);
        }
        for sym in body.iter().map(|&b| b as u16).chain(std::iter::once(EOS)) {
            *self
                .cells
                .entry(ctx.key)
                .or_default()
                .entry(sym)
                .or_insert(0.0) += weight;
            ctx.push(sym);
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ContextKey {
    key: u64,
    mask: u64,
}

impl ContextKey {
    fn start(order: usize) -> Self {
        let width = SYMBOL_BITS * (order as u32 - 1);
        let mask = if width == 0 { 0 } else { (1u64 << width) - 1 };
        let mut ctx = ContextKey { key: 0, mask };
        for _ in 1..order {
            ctx.push(EOS);
        }
        ctx
    }

    fn push(&mut self, sym: u16) {
        self.key = ((self.key << SYMBOL_BITS) | sym as u64) & self.mask;
    }

    fn from_symbols(order: usize, symbols: &[u16]) -> Self {
        let mut ctx = ContextKey::start(order);
        for &s in symbols {
            ctx.push(s);
        }
        ctx
    }
}

fn unpack(order: usize, key: u64) -> Vec<u16> {
    (0..order - 1)
        .rev()
        .map(|i| ((key >> (SYMBOL_BITS * i as u32)) & 0x1ff) as u16)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    lambda: f64,
    contexts: BTreeMap<u64, ContextCounts>,
}

impl NGramModel {
    /// A model with no counts: every conditional is uniform.
    pub fn untrained(order: usize, lambda: f64) -> Result<Self> {
        check_params(order, lambda)?;
        Ok(NGramModel {
            order,
            lambda,
            contexts: BTreeMap::new(),
        })
    }

    /// Counts every order-n window over each text's bytes followed by
    /// end-of-sequence.
    pub fn train<S: AsRef<str>>(texts: &[S], order: usize, lambda: f64) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::EmptyTraining);
        }
        let base = NGramModel::untrained(order, lambda)?;
        let mut table = CountTable::default();
        for t in texts {
            table.add_sequence(order, &[], t.as_ref().as_bytes(), 1.0);
        }
        Ok(base.with_added(table))
    }

    /// Returns `self` plus `weight` times the counts of `texts`. The receiver
    /// is left unchanged.
    pub fn blend<S: AsRef<str>>(&self, texts: &[S], weight: f64) -> Result<Self> {
        check_weight(weight)?;
        let mut table = CountTable::default();
        for t in texts {
            table.add_sequence(self.order, &[], t.as_ref().as_bytes(), weight);
        }
        Ok(self.with_added(table))
    }

    /// Blends in samples the way they are scored: each response is counted
    /// conditioned on its instruction, and only response positions (plus the
    /// final end-of-sequence) contribute counts.
    pub fn blend_samples<'a>(
        &self,
        samples: impl IntoIterator<Item = &'a Sample>,
        weight: f64,
    ) -> Result<Self> {
        check_weight(weight)?;
        let mut table = CountTable::default();
        for s in samples {
            table.add_sequence(
                self.order,
                s.instruction.as_bytes(),
                s.response.as_bytes(),
                weight,
            );
        }
        Ok(self.with_added(table))
    }

    /// Returns `self` plus `weight` times the counts of `other`.
    pub fn blend_model(&self, other: &NGramModel, weight: f64) -> Result<Self> {
        check_weight(weight)?;
        if other.order != self.order || other.lambda != self.lambda {
            return Err(Error::OrderMismatch {
                base_order: self.order,
                base_lambda: self.lambda,
                other_order: other.order,
                other_lambda: other.lambda,
            });
        }
        let mut table = CountTable::default();
        for (&key, cc) in &other.contexts {
            let cell = table.cells.entry(key).or_default();
            for &(sym, c) in &cc.entries {
                cell.insert(sym, weight * c);
            }
        }
        Ok(self.with_added(table))
    }

    fn with_added(&self, table: CountTable) -> Self {
        let mut contexts = self.contexts.clone();
        for (key, added) in table.cells {
            let mut merged: BTreeMap<u16, f64> = contexts
                .get(&key)
                .map(|cc| cc.entries.iter().copied().collect())
                .unwrap_or_default();
            for (sym, c) in added {
                *merged.entry(sym).or_insert(0.0) += c;
            }
            contexts.insert(key, ContextCounts::new(merged, self.lambda));
        }
        NGramModel {
            order: self.order,
            lambda: self.lambda,
            contexts,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of contexts with at least one count.
    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    /// Raw count of `symbol` after `context`. Contexts shorter than
    /// `order - 1` are left-padded with end-of-sequence.
    pub fn count(&self, context: &[u16], symbol: u16) -> f64 {
        let key = ContextKey::from_symbols(self.order, context).key;
        self.contexts.get(&key).map_or(0.0, |cc| cc.count(symbol))
    }

    pub fn total(&self, context: &[u16]) -> f64 {
        let key = ContextKey::from_symbols(self.order, context).key;
        self.contexts.get(&key).map_or(0.0, |cc| cc.total)
    }

    /// Smoothed conditional probability `p(symbol | context)`.
    pub fn prob(&self, context: &[u16], symbol: u16) -> f64 {
        (self.count(context, symbol) + self.lambda)
            / (self.total(context) + self.lambda * VOCAB_SIZE as f64)
    }

    /// The full conditional distribution after `context`, indexed by symbol.
    pub fn distribution(&self, context: &[u16]) -> Vec<f64> {
        (0..VOCAB_SIZE as u16).map(|v| self.prob(context, v)).collect()
    }

    /// Scores the response of `sample`, conditioned on its instruction.
    ///
    /// The scored positions are the response bytes and the terminating
    /// end-of-sequence symbol. `nll` is the mean of `-ln p(target)` and
    /// `entropy` the mean full-vocabulary entropy over those positions.
    pub fn score(&self, model_id: &str, sample: &Sample) -> SampleScore {
        let uniform = (VOCAB_SIZE as f64).ln();
        let v_lambda = self.lambda * VOCAB_SIZE as f64;
        let mut ctx = ContextKey::start(self.order);
        for &b in sample.instruction.as_bytes() {
            ctx.push(b as u16);
        }
        let response = sample.response.as_bytes();
        let (mut nll_sum, mut entropy_sum) = (0.0, 0.0);
        for sym in response.iter().map(|&b| b as u16).chain(std::iter::once(EOS)) {
            match self.contexts.get(&ctx.key) {
                Some(cc) => {
                    let p = (cc.count(sym) + self.lambda) / (cc.total + v_lambda);
                    nll_sum -= p.ln();
                    entropy_sum += cc.entropy;
                }
                None => {
                    nll_sum += uniform;
                    entropy_sum += uniform;
                }
            }
            ctx.push(sym);
        }
        let token_count = response.len() as u64 + 1;
        SampleScore {
            sample_id: sample.id.clone(),
            model_id: model_id.to_owned(),
            token_count,
            nll: nll_sum / token_count as f64,
            entropy: entropy_sum / token_count as f64,
            entropy_exact: true,
        }
    }

    /// Scores every sample of `corpus` in parallel.
    pub fn score_corpus(&self, model_id: &str, corpus: &Corpus) -> ScoreSet {
        let scores: Vec<SampleScore> = corpus
            .samples()
            .par_iter()
            .map(|s| self.score(model_id, s))
            .collect();
        let mut set = ScoreSet::new(model_id, Some(VOCAB_SIZE as u64));
        for s in scores {
            set.insert(s)
                .expect("corpus ids are unique and scores satisfy the record invariants");
        }
        set
    }

    /// Count dump: a header line followed by one line per context, ascending
    /// by packed context key.
    pub fn to_dump(&self) -> Vec<u8> {
        let mut out = String::new();
        let header = DumpHeader {
            order: self.order,
            lambda: self.lambda,
            vocab: VOCAB_SIZE,
        };
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
        for (&key, cc) in &self.contexts {
            let line = DumpContext {
                context: unpack(self.order, key),
                counts: cc.entries.clone(),
            };
            let _ = writeln!(out, "{}", serde_json::to_string(&line).expect("line serializes"));
        }
        out.into_bytes()
    }

    pub fn from_dump(bytes: &[u8]) -> Result<Self> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::MalformedModel {
            line: 0,
            reason: e.to_string(),
        })?;
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header_line) = lines.next().ok_or(Error::MalformedModel {
            line: 1,
            reason: "missing header".into(),
        })?;
        let header: DumpHeader =
            serde_json::from_str(header_line).map_err(|e| Error::MalformedModel {
                line: 1,
                reason: e.to_string(),
            })?;
        if header.vocab != VOCAB_SIZE {
            return Err(Error::MalformedModel {
                line: 1,
                reason: format!("vocab must be {VOCAB_SIZE}, got {}", header.vocab),
            });
        }
        let mut model = NGramModel::untrained(header.order, header.lambda)?;
        for (idx, line) in lines {
            let bad = |reason: String| Error::MalformedModel {
                line: idx + 1,
                reason,
            };
            let rec: DumpContext = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            if rec.context.len() != header.order - 1 {
                return Err(bad(format!(
                    "context has {} symbols, expected {}",
                    rec.context.len(),
                    header.order - 1
                )));
            }
            if rec.context.iter().any(|&s| s as usize >= VOCAB_SIZE) {
                return Err(bad("context symbol out of range".into()));
            }
            let mut counts = BTreeMap::new();
            for (sym, c) in rec.counts {
                if sym as usize >= VOCAB_SIZE || !(c.is_finite() && c > 0.0) {
                    return Err(bad(format!("invalid count {c} for symbol {sym}")));
                }
                if counts.insert(sym, c).is_some() {
                    return Err(bad(format!("symbol {sym} listed twice")));
                }
            }
            let key = ContextKey::from_symbols(header.order, &rec.context).key;
            if model
                .contexts
                .insert(key, ContextCounts::new(counts, header.lambda))
                .is_some()
            {
                return Err(bad("context listed twice".into()));
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_dump())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_dump(&read_bytes(path.as_ref())?)
    }
}

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    order: usize,
    lambda: f64,
    vocab: usize,
}

#[derive(Serialize, Deserialize)]
struct DumpContext {
    context: Vec<u16>,
    counts: Vec<(u16, f64)>,
}

fn check_params(order: usize, lambda: f64) -> Result<()> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidOrder {
            order,
            max: MAX_ORDER,
        });
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidLambda(lambda));
    }
    Ok(())
}

fn check_weight(weight: f64) -> Result<()> {
    if weight.is_finite() && weight > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight(weight))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: u16 = b'a' as u16;
    const B: u16 = b'b' as u16;

    #[test]
    fn unigram_counts() {
        let m = NGramModel::train(&["ab"], 1, 0.1).unwrap();
        assert_eq!(m.count(&[], A), 1.0);
        assert_eq!(m.count(&[], B), 1.0);
        assert_eq!(m.count(&[], EOS), 1.0);
        assert_eq!(m.total(&[]), 3.0);
    }

    #[test]
    fn bigram_smoothed_probability() {
        let m = NGramModel::train(&["aa"], 2, 0.1).unwrap();
        // windows after 'a': 'a' then EOS
        assert_eq!(m.total(&[A]), 2.0);
        let expected = 1.1 / 27.7;
        assert!((m.prob(&[A], A) - expected).abs() < 1e-15);
        assert!((m.prob(&[A], A) - 0.0397).abs() < 1e-4);
    }

    #[test]
    fn training_is_deterministic() {
        let texts = ["hello world", "hold the door"];
        assert_eq!(
            NGramModel::train(&texts, 3, 0.1).unwrap(),
            NGramModel::train(&texts, 3, 0.1).unwrap()
        );
    }

    #[test]
    fn invalid_parameters() {
        assert!(matches!(
            NGramModel::train::<&str>(&[], 3, 0.1),
            Err(Error::EmptyTraining)
        ));
        assert!(matches!(
            NGramModel::untrained(0, 0.1),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(matches!(
            NGramModel::untrained(9, 0.1),
            Err(Error::InvalidOrder { .. })
        ));
        assert!(matches!(
            NGramModel::untrained(2, 0.0),
            Err(Error::InvalidLambda(_))
        ));
        let m = NGramModel::untrained(2, 0.1).unwrap();
        assert!(matches!(m.blend(&["x"], 0.0), Err(Error::InvalidWeight(_))));
        let other = NGramModel::untrained(3, 0.1).unwrap();
        assert!(matches!(
            m.blend_model(&other, 1.0),
            Err(Error::OrderMismatch { .. })
        ));
    }

    #[test]
    fn blend_empty_is_identity_and_doubles_counts() {
        let base = NGramModel::train(&["ab"], 2, 0.1).unwrap();
        assert_eq!(base.blend::<&str>(&[], 5.0).unwrap(), base);
        let doubled = base.blend(&["ab"], 1.0).unwrap();
        for ctx in [[EOS], [A], [B]] {
            for v in 0..VOCAB_SIZE as u16 {
                assert_eq!(doubled.count(&ctx, v), 2.0 * base.count(&ctx, v));
            }
        }
        // the receiver is untouched
        assert_eq!(base, NGramModel::train(&["ab"], 2, 0.1).unwrap());
        assert_eq!(base.blend_model(&base, 1.0).unwrap(), doubled);
    }

    #[test]
    fn untrained_model_is_uniform() {
        let m = NGramModel::untrained(3, 0.1).unwrap();
        let s = m.score("base", &Sample::new("x", "what?", "anything at all"));
        let ln257 = (257f64).ln();
        assert_eq!(s.nll, ln257);
        assert_eq!(s.entropy, ln257);
        assert_eq!(s.token_count, 16);
        assert!(s.entropy_exact);
    }

    #[test]
    fn distributions_normalize() {
        let m = NGramModel::train(&["the cat sat on the mat", "a b c"], 3, 0.1)
            .unwrap()
            .blend(&["the the the"], 5.0)
            .unwrap();
        for ctx in [[b't' as u16, b'h' as u16], [EOS, EOS], [b'x' as u16, 3]] {
            let sum: f64 = m.distribution(&ctx).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "{sum}");
        }
    }

    #[test]
    fn blend_samples_counts_only_response_positions() {
        let base = NGramModel::untrained(2, 0.1).unwrap();
        let m = base
            .blend_samples([&Sample::new("s", "xy", "a")], 1.0)
            .unwrap();
        // response 'a' follows instruction tail 'y'; then EOS follows 'a'
        assert_eq!(m.count(&[b'y' as u16], A), 1.0);
        assert_eq!(m.count(&[A], EOS), 1.0);
        assert_eq!(m.context_count(), 2);
    }

    #[test]
    fn dump_round_trip() {
        let m = NGramModel::train(&["abcabc", "\u{00e9}t\u{00e9}"], 3, 0.25)
            .unwrap()
            .blend(&["cab"], 2.5)
            .unwrap();
        let back = NGramModel::from_dump(&m.to_dump()).unwrap();
        assert_eq!(back, m);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.jsonl");
        m.save(&p).unwrap();
        assert_eq!(NGramModel::load(&p).unwrap(), m);
    }

    proptest! {
        #[test]
        fn own_response_never_raises_nll(
            base_texts in proptest::collection::vec("[a-e ]{0,30}", 1..6),
            instruction in "[a-e ]{0,12}",
            response in "[a-e ]{1,30}",
            order in 1usize..5,
            weight in 1.0f64..8.0,
        ) {
            let base = NGramModel::train(&base_texts, order, 0.1).unwrap();
            let sample = Sample::new("s", instruction, response);
            let blended = base.blend_samples([&sample], weight).unwrap();
            let before = base.score("base", &sample).nll;
            let after = blended.score("inst", &sample).nll;
            prop_assert!(after <= before + 1e-12, "{after} > {before}");
        }

        #[test]
        fn entropy_bounded_by_log_vocab(
            texts in proptest::collection::vec("[a-z]{0,20}", 1..4),
            response in ".{1,20}",
        ) {
            let m = NGramModel::train(&texts, 2, 0.1).unwrap();
            let s = m.score("m", &Sample::new("s", "", response));
            prop_assert!(s.entropy <= (257f64).ln() + 1e-12);
            prop_assert!(s.entropy >= 0.0 && s.nll >= 0.0);
        }
    }
}
