use std::collections::HashSet;

use diffsel::ngram::NGramModel;
use diffsel::pipeline::{run_builtin, BuiltinScorer};
use diffsel::{
    compute_diffs, nll_filter, select, synth, Corpus, DiffRecord, Sample, SampleScore, ScoreSet,
    SelectionConfig, Strategy as Pick,
};
use proptest::prelude::*;

fn record(i: usize, dn: f64, dh: f64) -> DiffRecord {
    DiffRecord {
        sample_id: format!("p{i:05}"),
        delta_nll: dn,
        delta_h: dh,
        nll_base: 1.0 + (i % 13) as f64,
        nll_inst: 1.0 + (i % 13) as f64 + dn,
        h_base: 2.0 + (i % 7) as f64 * 0.5,
        h_inst: 2.0 + (i % 7) as f64 * 0.5 - dh,
        inst_len: (i % 5) as u64,
        resp_len: 1 + (i % 11) as u64,
        len_ratio_ir: 0.0,
        len_ratio_ri: None,
    }
}

fn records() -> impl Strategy<Value = Vec<DiffRecord>> {
    prop::collection::vec((-50i32..50, -50i32..50), 10..400).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (a, b))| record(i, a as f64 / 8.0, b as f64 / 8.0))
            .collect()
    })
}

fn corpus_of(recs: &[DiffRecord]) -> Corpus {
    Corpus::from_samples(
        recs.iter()
            .map(|r| Sample::new(r.sample_id.clone(), "q", "r"))
            .collect(),
    )
    .unwrap()
}

fn text() -> impl Strategy<Value = String> {
    "[a-d ]{1,40}"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_keeps_the_central_ranks(
        values in prop::collection::hash_set(-100_000i64..100_000, 5..500),
        gamma_pct in 1usize..50,
    ) {
        let values: Vec<f64> = values.into_iter().map(|v| v as f64 / 16.0).collect();
        let n = values.len();
        let recs: Vec<DiffRecord> = values.iter().enumerate().map(|(i, &v)| record(i, v, 0.0)).collect();
        let gamma = gamma_pct as f64 / 100.0;
        let kept = nll_filter(&recs, gamma).unwrap();
        let lo = (gamma_pct * n).div_ceil(100).max(1);
        let hi = ((100 - gamma_pct) * n).div_ceil(100);
        prop_assert_eq!(kept.len(), hi + 1 - lo);
    }

    #[test]
    fn filter_is_idempotent_at_zero_and_order_preserving(recs in records(), gamma_pct in 0usize..50) {
        prop_assert_eq!(nll_filter(&recs, 0.0).unwrap(), recs.clone());
        let kept = nll_filter(&recs, gamma_pct as f64 / 100.0).unwrap();
        let pos: Vec<usize> = kept
            .iter()
            .map(|k| recs.iter().position(|r| r.sample_id == k.sample_id).unwrap())
            .collect();
        prop_assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn every_strategy_selects_a_bounded_subset(
        recs in records(),
        beta_pct in 1usize..=100,
        seed in any::<u64>(),
    ) {
        let corpus = corpus_of(&recs);
        let k = beta_pct * recs.len() / 100;
        prop_assume!(k > 0);
        let all: HashSet<&str> = recs.iter().map(|r| r.sample_id.as_str()).collect();
        for strategy in Pick::ALL {
            let cfg = SelectionConfig {
                beta: beta_pct as f64 / 100.0,
                strategy,
                seed,
                ..SelectionConfig::default()
            };
            let sel = select(&recs, &corpus, &cfg).unwrap();
            let ids: HashSet<&str> = sel.ids().into_iter().collect();
            prop_assert_eq!(ids.len(), sel.len());
            prop_assert!(sel.len() <= k);
            prop_assert!(sel.len() <= sel.filtered_count);
            prop_assert_eq!(sel.len(), k.min(sel.filtered_count));
            prop_assert!(ids.is_subset(&all));
            prop_assert_eq!(sel.k, k);
        }
    }

    #[test]
    fn selection_is_invariant_to_input_order(recs in records(), seed in any::<u64>()) {
        let corpus = corpus_of(&recs);
        let mut reversed = recs.clone();
        reversed.reverse();
        for strategy in [Pick::DiffEntropyMin, Pick::DiffEntropyMax, Pick::Random] {
            let cfg = SelectionConfig { strategy, seed, ..SelectionConfig::default() };
            let a = select(&recs, &corpus, &cfg).unwrap();
            let b = select(&reversed, &corpus, &cfg).unwrap();
            prop_assert_eq!(a.ids(), b.ids());
        }
    }

    #[test]
    fn swapping_states_negates_differences(
        rows in prop::collection::vec((0.01f64..8.0, 0.0f64..5.5, 0.01f64..8.0, 0.0f64..5.5), 1..60),
    ) {
        let samples: Vec<Sample> = (0..rows.len()).map(|i| Sample::new(format!("d{i}"), "", "x")).collect();
        let corpus = Corpus::from_samples(samples).unwrap();
        let mut a = ScoreSet::new("a", None);
        let mut b = ScoreSet::new("b", None);
        for (i, &(na, ha, nb, hb)) in rows.iter().enumerate() {
            let mk = |m: &str, nll, entropy| SampleScore {
                sample_id: format!("d{i}"),
                model_id: m.into(),
                token_count: 3,
                nll,
                entropy,
                entropy_exact: false,
            };
            a.insert(mk("a", na, ha)).unwrap();
            b.insert(mk("b", nb, hb)).unwrap();
        }
        let ab = compute_diffs(&corpus, &a, &b).unwrap().records;
        let ba = compute_diffs(&corpus, &b, &a).unwrap().records;
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert_eq!(x.delta_nll, -y.delta_nll);
            prop_assert_eq!(x.delta_h, -y.delta_h);
        }
    }

    #[test]
    fn warmup_split_partitions_the_corpus(n in 1usize..300, alpha_pct in 1usize..=100, seed in any::<u64>()) {
        let corpus = synth::corpus(n, 1);
        let want = alpha_pct * n / 100;
        match corpus.sample_warmup(alpha_pct as f64 / 100.0, seed) {
            Ok(split) => {
                prop_assert_eq!(split.warmup.len(), want);
                prop_assert_eq!(split.warmup.len() + split.rest.len(), n);
                let w: HashSet<&String> = split.warmup.iter().collect();
                prop_assert!(split.rest.iter().all(|id| !w.contains(id)));
            }
            Err(e) => prop_assert!(want == 0, "unexpected error {e}"),
        }
    }

    #[test]
    fn blending_a_sample_lowers_its_nll(
        base in prop::collection::vec(text(), 1..8),
        inst in "[a-d ]{0,20}",
        resp in text(),
        order in 1usize..5,
        weight in 0.5f64..10.0,
    ) {
        let model = NGramModel::train(&base, order, 0.1).unwrap();
        let sample = Sample::new("t", inst, resp);
        let blended = model.blend_samples([&sample], weight).unwrap();
        let before = model.score("base", &sample);
        let after = blended.score("inst_k0", &sample);
        prop_assert!(after.nll < before.nll);
    }
}

#[test]
fn weak_scorer_pair_still_drives_the_loop() {
    let corpus = synth::corpus(400, 8);
    let base_texts = synth::base_texts(100, 8);
    let cfg = SelectionConfig {
        iterations: 2,
        ..SelectionConfig::default()
    };
    let weak = BuiltinScorer {
        order: 1,
        ..BuiltinScorer::default()
    };
    let run = run_builtin(&corpus, &cfg, &weak, &base_texts).unwrap();
    for rec in &run.iterations {
        assert_eq!(rec.state.selection.as_ref().unwrap().len(), 40);
    }
    let strong = run_builtin(&corpus, &cfg, &BuiltinScorer::default(), &base_texts).unwrap();
    assert_eq!(strong.final_selection().len(), 40);
}
