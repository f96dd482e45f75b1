//! Input builders shared by the benchmarks.

use diffsel::{DiffRecord, Sample};

/// `n` diff records with spread-out, distinct values.
pub fn diff_records(n: usize) -> Vec<DiffRecord> {
    (0..n)
        .map(|i| {
            let x = i as f64;
            DiffRecord {
                sample_id: format!("s{i:07}"),
                delta_nll: (x * 0.618_033_988_7).fract() - 0.5,
                delta_h: (x * 0.414_213_562_3).fract() - 0.3,
                nll_base: 1.0 + (x * 0.732_050_807_5).fract(),
                nll_inst: 1.0 + (x * 0.236_067_977_4).fract(),
                h_base: 2.0 + (x * 0.316_624_790_4).fract(),
                h_inst: 2.0 + (x * 0.645_751_311_1).fract(),
                inst_len: 10 + (i % 90) as u64,
                resp_len: 20 + (i % 300) as u64,
                len_ratio_ir: (10 + (i % 90)) as f64 / (20 + (i % 300)) as f64,
                len_ratio_ri: Some((20 + (i % 300)) as f64 / (10 + (i % 90)) as f64),
            }
        })
        .collect()
}

/// Samples whose ids match [`diff_records`].
pub fn samples(n: usize) -> Vec<Sample> {
    (0..n)
        .map(|i| Sample::new(format!("s{i:07}"), "q", "r"))
        .collect()
}
