use std::fs;
use std::path::{Path, PathBuf};

use diffsel::analytics::{correlations, histogram, overlap, Metric};
use diffsel::metrics::{compute_diffs, load_diffs, save_diffs};
use diffsel::ngram::NGramModel;
use diffsel::pipeline::state::{
    init_external, resume_external_from, select_step, write_builtin, StateDir,
};
use diffsel::pipeline::{inst_model_id, run_builtin, BuiltinScorer, BASE_MODEL_ID};
use diffsel::util::{sha256_hex, write_atomic};
use diffsel::{synth, Corpus, ScoreSet, Selection, SelectionConfig};
use sha2::{Digest, Sha256};

use crate::{
    AnalyzeCommand, Cli, CliError, Command, GenerateArgs, IterateArgs, NGramArgs, RatioArgs,
    ScoreArgs, ScorerKind, SelectArgs,
};

type Written = Vec<PathBuf>;

pub(crate) fn run(cli: &Cli) -> Result<Written, CliError> {
    match &cli.command {
        Command::Score(args) => score(&cli.out_dir, args),
        Command::Select(args) => select(&cli.out_dir, args),
        Command::Iterate(args) => iterate(&cli.out_dir, args),
        Command::Analyze { report } => analyze(&cli.out_dir, report),
        Command::Generate(args) => generate(&cli.out_dir, args),
    }
}

/// Digest over the contents of the written files, in write order.
pub(crate) fn run_digest(written: &[PathBuf]) -> String {
    let mut hasher = Sha256::new();
    for path in written {
        let bytes = fs::read(path).unwrap_or_default();
        hasher.update(sha256_hex(&bytes).as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

fn selection_config(r: &RatioArgs, iterations: usize) -> Result<SelectionConfig, CliError> {
    let config = SelectionConfig {
        alpha: r.alpha,
        beta: r.beta,
        gamma: r.gamma,
        strategy: r.strategy,
        seed: r.seed,
        iterations,
    };
    config.validate()?;
    Ok(config)
}

fn scorer(n: &NGramArgs) -> BuiltinScorer {
    BuiltinScorer {
        order: n.order,
        lambda: n.lambda,
        blend_weight: n.blend_weight,
    }
}

fn read_base_corpus(path: &Path) -> Result<Vec<String>, CliError> {
    let text = fs::read_to_string(path).map_err(|source| diffsel::Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}

fn score(out_dir: &Path, args: &ScoreArgs) -> Result<Written, CliError> {
    if args.scorer == ScorerKind::External {
        return Err(CliError::Usage(
            "external scorers write their own score files; use `select` or `iterate` on them".into(),
        ));
    }
    let base_corpus = args
        .base_corpus
        .as_deref()
        .ok_or_else(|| CliError::Usage("--scorer builtin requires --base-corpus".into()))?;
    let config = selection_config(&args.ratios, 1)?;
    let corpus = Corpus::ingest(&args.dataset)?;
    let texts = read_base_corpus(base_corpus)?;
    let s = scorer(&args.ngram);

    let base = NGramModel::train(&texts, s.order, s.lambda)?;
    let split = corpus.sample_warmup(config.alpha, config.seed)?;
    let warm = split.warmup.iter().filter_map(|id| corpus.get(id));
    let inst = base.blend_samples(warm, s.blend_weight)?;

    let base_path = out_dir.join("scores_base.jsonl");
    let inst_path = out_dir.join("scores_inst.jsonl");
    base.score_corpus(BASE_MODEL_ID, &corpus).save(&base_path)?;
    inst.score_corpus(&inst_model_id(0), &corpus).save(&inst_path)?;
    eprintln!(
        "scored {} samples; warmup {} samples; wrote {} and {}",
        corpus.len(),
        split.warmup.len(),
        base_path.display(),
        inst_path.display()
    );
    Ok(vec![base_path, inst_path])
}

fn select(out_dir: &Path, args: &SelectArgs) -> Result<Written, CliError> {
    let config = selection_config(&args.ratios, args.iteration.max(1))?;
    let corpus = Corpus::ingest(&args.dataset)?;
    let base_path = args
        .base_scores
        .clone()
        .unwrap_or_else(|| out_dir.join("scores_base.jsonl"));
    let inst_path = args
        .inst_scores
        .clone()
        .unwrap_or_else(|| out_dir.join("scores_inst.jsonl"));
    let base = ScoreSet::load(&base_path)?;
    let inst = ScoreSet::load(&inst_path)?;
    let report = compute_diffs(&corpus, &base, &inst)?;
    if !report.missing_from_inst.is_empty() || !report.missing_from_base.is_empty() {
        eprintln!(
            "warning: {} ids scored only by {}, {} only by {}; excluded",
            report.missing_from_inst.len(),
            base.model_id(),
            report.missing_from_base.len(),
            inst.model_id()
        );
    }
    let selection = diffsel::select_at(&report.records, &corpus, &config, args.iteration)?;
    warn_shortfall(&selection);

    let diffs_path = out_dir.join("diffs.jsonl");
    let sel_path = out_dir.join("selection.jsonl");
    save_diffs(&report.records, &diffs_path)?;
    selection.save(&sel_path)?;
    eprintln!(
        "selected {} of {} samples ({} eligible after filtering); wrote {}",
        selection.len(),
        corpus.len(),
        selection.filtered_count,
        sel_path.display()
    );
    Ok(vec![diffs_path, sel_path])
}

fn warn_shortfall(selection: &Selection) {
    if let Some(missing) = selection.shortfall() {
        eprintln!(
            "warning: only {} eligible samples, {missing} short of {}",
            selection.len(),
            selection.k
        );
    }
}

fn iterate(out_dir: &Path, args: &IterateArgs) -> Result<Written, CliError> {
    if let Some(root) = &args.resume {
        return resume(root, args);
    }
    if args.iterations > 3 {
        eprintln!("hint: gains usually flatten after two or three iterations");
    }
    let config = selection_config(&args.ratios, args.iterations)?;
    let dataset = args
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::Usage("--dataset is required".into()))?;
    let corpus = Corpus::ingest(dataset)?;
    let dataset_abs = fs::canonicalize(dataset).unwrap_or_else(|_| dataset.to_path_buf());
    let dir = StateDir::new(
        args.state_dir
            .clone()
            .unwrap_or_else(|| out_dir.join("state")),
    );

    match args.scorer {
        ScorerKind::Builtin => {
            let base_corpus = args
                .base_corpus
                .as_deref()
                .ok_or_else(|| CliError::Usage("--scorer builtin requires --base-corpus".into()))?;
            let texts = read_base_corpus(base_corpus)?;
            let run = run_builtin(&corpus, &config, &scorer(&args.ngram), &texts)?;
            write_builtin(&dir, &run, Some(&dataset_abs))?;
            let mut written = vec![dir.base_scores()];
            for rec in &run.iterations {
                let k = rec.state.iteration;
                let sel = rec.state.selection.as_ref().expect("selected");
                eprintln!(
                    "iteration {k}: selected {} ({} eligible){}",
                    sel.len(),
                    sel.filtered_count,
                    if rec.fixed_point { ", same set as previous iteration" } else { "" }
                );
                warn_shortfall(sel);
                written.extend([dir.inst_scores(k), dir.diffs(k), dir.selection(k), dir.manifest(k)]);
            }
            written.push(dir.run_file());
            eprintln!("wrote state to {}", dir.root().display());
            Ok(written)
        }
        ScorerKind::External => {
            let (Some(base_path), Some(inst_path)) = (&args.base_scores, &args.inst_scores) else {
                return Err(CliError::Usage(
                    "--scorer external requires --base-scores and --inst-scores".into(),
                ));
            };
            let base = ScoreSet::load(base_path)?;
            init_external(&dir, &corpus, &config, &base, Some(&dataset_abs))?;
            advance(&dir, &corpus, inst_path)
        }
    }
}

fn resume(root: &Path, args: &IterateArgs) -> Result<Written, CliError> {
    let dir = StateDir::new(root);
    let run = dir.load_run()?;
    let dataset = args
        .dataset
        .clone()
        .or(run.dataset)
        .ok_or_else(|| CliError::Usage("the run records no dataset; pass --dataset".into()))?;
    let corpus = Corpus::ingest(&dataset)?;
    let scores = args.scores.as_deref().expect("clap enforces --scores");
    advance(&dir, &corpus, scores)
}

fn advance(dir: &StateDir, corpus: &Corpus, scores: &Path) -> Result<Written, CliError> {
    let scored = resume_external_from(dir, corpus, scores)?;
    let k = scored.iteration;
    let state = select_step(dir, corpus)?;
    let sel = state.selection.as_ref().expect("selected");
    warn_shortfall(sel);
    let run = dir.load_run()?;
    eprintln!(
        "iteration {k}: selected {} ({} eligible)",
        sel.len(),
        sel.filtered_count
    );
    if run.status == diffsel::pipeline::state::RunStatus::Complete {
        eprintln!("run complete after {k} iterations");
    } else {
        eprintln!(
            "next: train on {} and resume with scores for model id {:?}",
            dir.manifest(k).display(),
            inst_model_id(k)
        );
    }
    Ok(vec![
        dir.inst_scores(k),
        dir.diffs(k),
        dir.selection(k),
        dir.manifest(k),
    ])
}

fn analyze(out_dir: &Path, report: &AnalyzeCommand) -> Result<Written, CliError> {
    let diffs_or_default =
        |p: &Option<PathBuf>| p.clone().unwrap_or_else(|| out_dir.join("diffs.jsonl"));
    match report {
        AnalyzeCommand::Hist {
            diffs,
            metric,
            bins,
        } => {
            let records = load_diffs(diffs_or_default(diffs))?;
            let h = histogram(&records, *metric, *bins)?;
            let csv_path = out_dir.join(format!("hist_{metric}.csv"));
            let svg_path = out_dir.join(format!("hist_{metric}.svg"));
            write_atomic(&csv_path, &h.to_csv())?;
            write_atomic(&svg_path, h.to_svg().as_bytes())?;
            println!(
                "{metric}: n={} positive={:.4} negative={:.4}",
                h.total,
                h.positive_fraction(),
                h.negative_fraction()
            );
            Ok(vec![csv_path, svg_path])
        }
        AnalyzeCommand::Corr { diffs, metrics } => {
            let records = load_diffs(diffs_or_default(diffs))?;
            let metrics: Vec<Metric> = if metrics.is_empty() {
                Metric::ALL.to_vec()
            } else {
                metrics.clone()
            };
            let m = correlations(&records, &metrics)?;
            for z in &m.zero_variance {
                eprintln!("warning[ZeroVariance]: {z} is constant; its entries are NA");
            }
            let pearson = out_dir.join("corr_pearson.csv");
            let spearman = out_dir.join("corr_spearman.csv");
            write_atomic(&pearson, &m.pearson_csv())?;
            write_atomic(&spearman, &m.spearman_csv())?;
            println!("correlations over {} records", m.n);
            Ok(vec![pearson, spearman])
        }
        AnalyzeCommand::Overlap { a, b } => {
            let r = overlap(&Selection::load(a)?, &Selection::load(b)?);
            let json = serde_json::to_string(&r).expect("report serializes");
            println!("{json}");
            let path = out_dir.join("overlap.json");
            write_atomic(&path, format!("{json}\n").as_bytes())?;
            Ok(vec![path])
        }
    }
}

fn generate(out_dir: &Path, args: &GenerateArgs) -> Result<Written, CliError> {
    if args.samples == 0 || args.base_lines == 0 {
        return Err(CliError::Usage("--samples and --base-lines must be positive".into()));
    }
    let dataset = out_dir.join("dataset.jsonl");
    let base = out_dir.join("base_corpus.txt");
    write_atomic(&dataset, &synth::corpus(args.samples, args.seed).to_jsonl())?;
    let mut text = synth::base_texts(args.base_lines, args.seed).join("\n");
    text.push('\n');
    write_atomic(&base, text.as_bytes())?;
    eprintln!("wrote {} and {}", dataset.display(), base.display());
    Ok(vec![dataset, base])
}
