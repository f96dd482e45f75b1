//! Distribution, correlation and overlap reports over diff records.

use std::collections::HashSet;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::DiffRecord;
use crate::selector::Selection;

/// A per-sample quantity that can be histogrammed or correlated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NllBase,
    NllInst,
    HBase,
    HInst,
    DeltaNll,
    DeltaH,
    InstLen,
    RespLen,
    LenRatioRi,
    LenRatioIr,
}

impl Metric {
    pub const ALL: [Metric; 10] = [
        Metric::NllBase,
        Metric::NllInst,
        Metric::HBase,
        Metric::HInst,
        Metric::DeltaNll,
        Metric::DeltaH,
        Metric::InstLen,
        Metric::RespLen,
        Metric::LenRatioRi,
        Metric::LenRatioIr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::NllBase => "nll_base",
            Metric::NllInst => "nll_inst",
            Metric::HBase => "h_base",
            Metric::HInst => "h_inst",
            Metric::DeltaNll => "delta_nll",
            Metric::DeltaH => "delta_h",
            Metric::InstLen => "inst_len",
            Metric::RespLen => "resp_len",
            Metric::LenRatioRi => "len_ratio_ri",
            Metric::LenRatioIr => "len_ratio_ir",
        }
    }

    /// The metric's value, or `None` if it is flagged infinite.
    pub fn value(self, r: &DiffRecord) -> Option<f64> {
        let v = match self {
            Metric::NllBase => r.nll_base,
            Metric::NllInst => r.nll_inst,
            Metric::HBase => r.h_base,
            Metric::HInst => r.h_inst,
            Metric::DeltaNll => r.delta_nll,
            Metric::DeltaH => r.delta_h,
            Metric::InstLen => r.inst_len as f64,
            Metric::RespLen => r.resp_len as f64,
            Metric::LenRatioRi => r.len_ratio_ri?,
            Metric::LenRatioIr => r.len_ratio_ir,
        };
        v.is_finite().then_some(v)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_").to_ascii_lowercase();
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| Error::UnknownMetric(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub metric: Metric,
    /// `counts.len() + 1` strictly ascending edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Number of finite input values.
    pub total: u64,
    pub positive: u64,
    pub negative: u64,
}

impl Histogram {
    /// Share of values above zero (compression, for `delta_h`).
    pub fn positive_fraction(&self) -> f64 {
        self.positive as f64 / self.total as f64
    }

    /// Share of values below zero (expansion, for `delta_h`).
    pub fn negative_fraction(&self) -> f64 {
        self.negative as f64 / self.total as f64
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["bin_lower", "bin_upper", "count"])
            .expect("writing to memory");
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([
                self.bin_edges[i].to_string(),
                self.bin_edges[i + 1].to_string(),
                c.to_string(),
            ])
            .expect("writing to memory");
        }
        w.into_inner().expect("writing to memory")
    }

    /// Static SVG bar chart.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 360.0;
        const PAD: f64 = 40.0;
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1) as f64;
        let bar_w = (W - 2.0 * PAD) / self.counts.len() as f64;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{} (n={}, &gt;0: {:.3}, &lt;0: {:.3})</text>"#,
            W / 2.0,
            self.metric,
            self.total,
            self.positive_fraction(),
            self.negative_fraction()
        );
        for (i, &c) in self.counts.iter().enumerate() {
            let h = (H - 2.0 * PAD) * c as f64 / max;
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4c72b0"><title>[{}, {}]: {}</title></rect>"##,
                PAD + i as f64 * bar_w,
                H - PAD - h,
                (bar_w - 1.0).max(0.5),
                h,
                self.bin_edges[i],
                self.bin_edges[i + 1],
                c
            );
        }
        let _ = writeln!(
            s,
            r#"<line x1="{PAD}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/>"#,
            y = H - PAD,
            x2 = W - PAD
        );
        for (x, v) in [(PAD, self.bin_edges[0]), (W - PAD, *self.bin_edges.last().unwrap())] {
            let _ = writeln!(
                s,
                r#"<text x="{x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{v:.4}</text>"#,
                H - PAD + 16.0
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Equal-width histogram over the finite values of `metric`.
///
/// Bins are half-open except the last, which is closed. If every value is
/// the same, a single narrow bin around that value holds them all.
pub fn histogram(diffs: &[DiffRecord], metric: Metric, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidConfig("bins must be at least 1".into()));
    }
    let values: Vec<f64> = diffs.iter().filter_map(|r| metric.value(r)).collect();
    histogram_values(&values, metric, bins)
}

pub(crate) fn histogram_values(values: &[f64], metric: Metric, bins: usize) -> Result<Histogram> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::NoFiniteValues {
            metric: metric.to_string(),
        });
    }
    let (min, max) = finite
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let total = finite.len() as u64;
    let positive = finite.iter().filter(|&&v| v > 0.0).count() as u64;
    let negative = finite.iter().filter(|&&v| v < 0.0).count() as u64;

    let width = (max - min) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| min + width * i as f64).collect();
    let ascending = width > 0.0 && edges.windows(2).all(|w| w[0] < w[1]);
    if !ascending {
        let eps = 1e-9 * min.abs().max(1.0);
        return Ok(Histogram {
            metric,
            bin_edges: vec![min - eps, min + eps],
            counts: vec![total],
            total,
            positive,
            negative,
        });
    }
    let mut edges = edges;
    edges[bins] = max;
    let mut counts = vec![0u64; bins];
    for &v in &finite {
        let mut idx = (((v - min) / width) as usize).min(bins - 1);
        // The division can disagree with the materialized edges by an ulp.
        while idx > 0 && v < edges[idx] {
            idx -= 1;
        }
        while idx + 1 < bins && v >= edges[idx + 1] {
            idx += 1;
        }
        counts[idx] += 1;
    }
    Ok(Histogram {
        metric,
        bin_edges: edges,
        counts,
        total,
        positive,
        negative,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    /// `|A ∩ B|`
    pub overlap: usize,
    /// `|A ∩ B| / |A|`, 0 for an empty A.
    pub r_a: f64,
    /// `|A ∩ B| / |B|`, 0 for an empty B.
    pub r_b: f64,
    pub size_a: usize,
    pub size_b: usize,
}

pub fn overlap(a: &Selection, b: &Selection) -> OverlapReport {
    overlap_ids(&a.ids(), &b.ids())
}

/// Set overlap between two id lists.
pub fn overlap_ids<S: AsRef<str>>(a: &[S], b: &[S]) -> OverlapReport {
    let set_a: HashSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let set_b: HashSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let overlap = set_a.intersection(&set_b).count();
    let ratio = |n: usize| if n == 0 { 0.0 } else { overlap as f64 / n as f64 };
    OverlapReport {
        overlap,
        r_a: ratio(set_a.len()),
        r_b: ratio(set_b.len()),
        size_a: set_a.len(),
        size_b: set_b.len(),
    }
}

/// Pearson and Spearman matrices. Entries involving a zero-variance metric
/// are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMatrix {
    pub metric_names: Vec<Metric>,
    pub pearson: Vec<Vec<Option<f64>>>,
    pub spearman: Vec<Vec<Option<f64>>>,
    /// Records used (those finite in every requested metric).
    pub n: usize,
    pub zero_variance: Vec<Metric>,
}

impl CorrelationMatrix {
    pub fn pearson_csv(&self) -> Vec<u8> {
        matrix_csv(&self.metric_names, &self.pearson)
    }

    pub fn spearman_csv(&self) -> Vec<u8> {
        matrix_csv(&self.metric_names, &self.spearman)
    }
}

fn matrix_csv(names: &[Metric], m: &[Vec<Option<f64>>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = std::iter::once("metric")
        .chain(names.iter().map(|m| m.as_str()))
        .collect();
    w.write_record(&header).expect("writing to memory");
    for (name, row) in names.iter().zip(m) {
        let cells: Vec<String> = std::iter::once(name.to_string())
            .chain(row.iter().map(|v| v.map_or_else(|| "NA".to_owned(), |x| x.to_string())))
            .collect();
        w.write_record(&cells).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

/// Correlates `metrics` over the records that are finite in all of them.
pub fn correlations(diffs: &[DiffRecord], metrics: &[Metric]) -> Result<CorrelationMatrix> {
    if metrics.is_empty() {
        return Err(Error::InvalidConfig("no metrics requested".into()));
    }
    let columns: Vec<Vec<f64>> = {
        let rows: Vec<Vec<f64>> = diffs
            .iter()
            .filter_map(|r| metrics.iter().map(|m| m.value(r)).collect::<Option<Vec<f64>>>())
            .collect();
        (0..metrics.len())
            .map(|j| rows.iter().map(|row| row[j]).collect())
            .collect()
    };
    let n = columns[0].len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, found: n });
    }
    let ranks: Vec<Vec<f64>> = columns.iter().map(|c| average_ranks(c)).collect();
    let pearson = correlation_matrix(&columns);
    let spearman = correlation_matrix(&ranks);
    let zero_variance = metrics
        .iter()
        .zip(&pearson)
        .enumerate()
        .filter(|(i, (_, row))| row[*i].is_none())
        .map(|(_, (m, _))| *m)
        .collect();
    Ok(CorrelationMatrix {
        metric_names: metrics.to_vec(),
        pearson,
        spearman,
        n,
        zero_variance,
    })
}

fn correlation_matrix(columns: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let centred: Vec<Option<(Vec<f64>, f64)>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / c.len() as f64;
            let dev: Vec<f64> = c.iter().map(|x| x - mean).collect();
            let ss: f64 = dev.iter().map(|d| d * d).sum();
            (ss > 0.0).then_some((dev, ss.sqrt()))
        })
        .collect();
    let k = columns.len();
    let mut m = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i..k {
            let r = match (&centred[i], &centred[j]) {
                (Some(_), Some(_)) if i == j => Some(1.0),
                (Some((di, ni)), Some((dj, nj))) => {
                    let cov: f64 = di.iter().zip(dj).map(|(a, b)| a * b).sum();
                    Some((cov / (ni * nj)).clamp(-1.0, 1.0))
                }
                _ => None,
            };
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    m
}

/// 1-based ranks, ties sharing the mean of the ranks they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}
