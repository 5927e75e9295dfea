//! `evlink`: command-line front end for the event coreference pipeline.
//!
//! Exit codes: 0 on success, 1 when inputs fail validation (bad files,
//! missing embeddings, bad configuration), 2 when a run fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evlink::cluster::{clusterings_from_jsonl, clusterings_to_jsonl, PairDecision};
use evlink::corpus::{load_corpus, Corpus, Split};
use evlink::embedding::{read_embeddings, EmbeddingTable};
use evlink::metrics::{score_corpus, Aggregation, MetricReport};
use evlink::pairs::{corpus_pairs, pairs_to_jsonl, PairStrategy};
use evlink::pipeline::{
    cluster_decisions, fit, gold_clusterings, load_run_data, load_splits, predict_corpus,
    run_pipeline, synth, train_transform, Method, PipelineConfig, Scorer, SynthConfig,
};
use evlink::scorer::{compute_diagnostics, load_checkpoint, save_checkpoint, Checkpoint};
use evlink::{Error, Exec, Result};

#[derive(Parser, Debug)]
#[command(
    name = "evlink",
    version,
    about = "Within-document event coreference pipeline"
)]
struct Cli {
    /// Pipeline configuration (flat TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured aggregation mode.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Aggregation>,
    /// Output directory (or file, for single-output commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Run every stage sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a corpus and, optionally, that an embeddings file covers it.
    Validate(ValidateArgs),
    /// Dump gold-labelled mention pairs as JSON lines.
    Pairs(PairsArgs),
    /// Train a cosine transform on the configured train split.
    TrainCosine,
    /// Train the configured regressor method with dev epoch selection.
    TrainRegressor,
    /// Tune the cosine threshold on the configured dev split.
    TuneThreshold,
    /// Decide pairs and cluster a corpus with a checkpoint or baseline.
    Predict(PredictArgs),
    /// Cluster pairwise decisions by transitive closure.
    Cluster(ClusterArgs),
    /// Score system clusters against a gold corpus.
    Score(ScoreArgs),
    /// Print a saved report as a table.
    Report(ReportArgs),
    /// Generate a synthetic corpus with planted chains.
    Synth(SynthArgs),
    /// Mean cosine of coreferent and non-coreferent pairs.
    Diagnostics(DiagnosticsArgs),
    /// Run the whole configured pipeline.
    Run,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Expected embedding dimension.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args, Debug)]
struct PairsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = "all-preceding")]
    strategy: PairStrategy,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, required_unless_present = "baseline")]
    checkpoint: Option<PathBuf>,
    /// Baseline rule instead of a checkpoint: singletons, type, lemma, lemma-type.
    #[arg(long, conflicts_with = "checkpoint")]
    baseline: Option<evlink::cluster::BaselineRule>,
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long, default_value = "all-preceding")]
    strategy: PairStrategy,
}

#[derive(Args, Debug)]
struct ClusterArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Pair decisions as written by `predict` (`decisions.jsonl`).
    #[arg(long)]
    decisions: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Gold corpus.
    #[arg(long)]
    gold: PathBuf,
    /// System clusters (`system.jsonl`).
    #[arg(long)]
    system: PathBuf,
}

#[derive(Args, Debug)]
struct ReportArgs {
    report: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    docs: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 5.0)]
    ratio: f64,
}

#[derive(Args, Debug)]
struct DiagnosticsArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    embeddings: PathBuf,
    /// Cosine transform checkpoint to apply first.
    #[arg(long)]
    transform: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<Aggregation> {
    s.parse()
}

fn exec(cli: &Cli) -> Exec {
    if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn out_dir(cli: &Cli, default: &str) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let mut cfg = PipelineConfig::load(input(path)?)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.mode = mode;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if cli.sequential {
        cfg.parallel = false;
    }
    Ok(cfg)
}

/// Input files that are missing are a validation failure, not a runtime one.
fn input(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Config(format!(
            "input `{}` does not exist",
            path.display()
        )))
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn validate(args: &ValidateArgs) -> Result<()> {
    let corpus = load_corpus(input(&args.corpus)?)?;
    let report = corpus.validate()?;
    println!(
        "{}: {} documents, {} mentions",
        args.corpus.display(),
        report.documents,
        report.mentions
    );
    if !report.missing_lemma.is_empty() {
        println!(
            "  {} mentions without a head lemma",
            report.missing_lemma.len()
        );
    }
    if !report.missing_type.is_empty() {
        println!(
            "  {} mentions without an event type",
            report.missing_type.len()
        );
    }
    if let Some(path) = &args.embeddings {
        let table = read_embeddings(input(path)?, args.dim)?;
        let missing = table.missing_for(&corpus);
        if let Some(first) = missing.first() {
            eprintln!(
                "{} mentions have no embedding, first `{first}`",
                missing.len()
            );
            return Err(Error::MissingEmbedding(first.clone()));
        }
        println!(
            "{}: dim {}, covers every mention",
            path.display(),
            table.dim()
        );
    }
    Ok(())
}

fn pairs(cli: &Cli, args: &PairsArgs) -> Result<()> {
    let corpus = load_corpus(input(&args.corpus)?)?;
    let pairs = corpus_pairs(&corpus, args.strategy)?;
    log::info!("{} pairs", pairs.len());
    emit(cli, &pairs_to_jsonl(&pairs))
}

fn train_cosine(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let mut splits = vec![Split::Train];
    if cfg.dev_corpus.is_some() {
        splits.push(Split::Dev);
    }
    let mut probe = cfg.clone();
    probe.method = Method::Cosine;
    let data = load_splits(&probe, &splits)?;
    let (model, summary) =
        train_transform(&cfg, &data).map_err(|e| e.in_stage("train-transform"))?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_checkpoint(
        &Checkpoint::CosineTransform(model),
        &dir.join("transform.json"),
    )?;
    write_file(&dir.join("transform_training.json"), &to_json(&summary))?;
    if let (Some(b), Some(a)) = (&summary.dev_before, &summary.dev_after) {
        println!("dev cos delta: {:?} -> {:?}", b.cos_delta, a.cos_delta);
    }
    println!("wrote {}", dir.join("transform.json").display());
    Ok(())
}

fn train_regressor(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    if !cfg.method.is_regressor() {
        return Err(Error::Config(format!(
            "method {} is not a regressor",
            cfg.method
        )));
    }
    cfg.validate()?;
    let data = load_run_data(&cfg)?;
    let fitted = fit(&cfg, &data)?;
    let dir = &cfg.out_dir;
    save_fitted(dir, &fitted)?;
    if let Some(r) = &fitted.regressor {
        println!("best epoch {} of {}", r.best_epoch, r.trace.len());
    }
    Ok(())
}

fn save_fitted(dir: &Path, fitted: &evlink::pipeline::Fitted) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if let Some(c) = fitted.checkpoint() {
        save_checkpoint(&c, &dir.join("checkpoint.json"))?;
        println!("wrote {}", dir.join("checkpoint.json").display());
    }
    #[derive(serde::Serialize)]
    struct Log<'a> {
        transform: &'a Option<evlink::pipeline::TransformSummary>,
        threshold: &'a Option<evlink::pipeline::ThresholdTuning>,
        regressor: &'a Option<evlink::pipeline::RegressorSummary>,
    }
    write_file(
        &dir.join("training.json"),
        &to_json(&Log {
            transform: &fitted.transform,
            threshold: &fitted.threshold,
            regressor: &fitted.regressor,
        }),
    )
}

fn tune(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(cli)?;
    if cfg.method != Method::Cosine {
        log::warn!(
            "tune-threshold always tunes the cosine method; ignoring method {}",
            cfg.method
        );
        cfg.method = Method::Cosine;
    }
    cfg.validate()?;
    let data = load_run_data(&cfg)?;
    let fitted = fit(&cfg, &data)?;
    save_fitted(&cfg.out_dir, &fitted)?;
    if let Some(t) = &fitted.threshold {
        println!(
            "threshold {} (dev B3/MUC average {:.4})",
            t.threshold, t.b3_muc
        );
    }
    Ok(())
}

fn predict(cli: &Cli, args: &PredictArgs) -> Result<()> {
    let corpus = load_corpus(input(&args.corpus)?)?;
    let scorer = match (&args.checkpoint, args.baseline) {
        (_, Some(rule)) => Scorer::Baseline(rule),
        (Some(path), None) => match load_checkpoint(input(path)?)? {
            Checkpoint::Cosine(m) => Scorer::Cosine(m),
            Checkpoint::Regressor(m) => Scorer::Regressor(m),
            Checkpoint::CosineTransform(_) => {
                return Err(Error::Config(
                    "a cosine transform alone cannot decide pairs; tune a threshold first".into(),
                ))
            }
        },
        (None, None) => unreachable!("clap requires one"),
    };
    let table = match (&scorer, &args.embeddings) {
        (Scorer::Baseline(_), _) => None,
        (_, Some(p)) => Some(read_embeddings(input(p)?, None)?),
        (_, None) => {
            return Err(Error::Config(
                "--embeddings is required with a checkpoint".into(),
            ))
        }
    };
    if let Some(t) = &table {
        t.check_coverage(&corpus)?;
    }
    let predictions = predict_corpus(&scorer, &corpus, table.as_ref(), args.strategy, exec(cli))?;
    let dir = out_dir(cli, "predictions");
    let sys: Vec<_> = predictions.iter().map(|p| p.clustering.clone()).collect();
    let mut decisions = String::new();
    for d in predictions.iter().flat_map(|p| &p.decisions) {
        decisions.push_str(&serde_json::to_string(d).expect("decision serializes"));
        decisions.push('\n');
    }
    write_file(&dir.join("decisions.jsonl"), &decisions)?;
    write_file(&dir.join("system.jsonl"), &clusterings_to_jsonl(&sys))?;
    println!("wrote {}", dir.display());
    Ok(())
}

fn cluster(cli: &Cli, args: &ClusterArgs) -> Result<()> {
    let corpus = load_corpus(input(&args.corpus)?)?;
    let text = std::fs::read_to_string(input(&args.decisions)?)
        .map_err(|e| Error::io(&args.decisions, e))?;
    let context = args.decisions.display().to_string();
    let mut by_doc: std::collections::HashMap<String, Vec<PairDecision>> =
        std::collections::HashMap::new();
    let index: std::collections::HashMap<&str, &str> = corpus
        .documents
        .iter()
        .flat_map(|d| {
            d.mentions
                .iter()
                .map(move |m| (m.mention_id.as_str(), d.doc_id.as_str()))
        })
        .collect();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let d: PairDecision = serde_json::from_str(line).map_err(|e| Error::Parse {
            context: format!("{context}:{}", i + 1),
            message: e.to_string(),
        })?;
        let doc = index.get(d.first.as_str()).ok_or_else(|| {
            Error::Validation(format!("decision names unknown mention `{}`", d.first))
        })?;
        by_doc.entry(doc.to_string()).or_default().push(d);
    }
    let clusterings = corpus
        .documents
        .iter()
        .map(|doc| cluster_decisions(doc, by_doc.get(&doc.doc_id).map_or(&[][..], Vec::as_slice)))
        .collect::<Result<Vec<_>>>()?;
    emit(cli, &clusterings_to_jsonl(&clusterings))
}

fn score(cli: &Cli, args: &ScoreArgs) -> Result<()> {
    let corpus: Corpus = load_corpus(input(&args.gold)?)?;
    let text =
        std::fs::read_to_string(input(&args.system)?).map_err(|e| Error::io(&args.system, e))?;
    let sys = clusterings_from_jsonl(&text, &args.system.display().to_string())?;
    let report = score_corpus(
        &gold_clusterings(&corpus),
        &sys,
        cli.mode.unwrap_or_default(),
        exec(cli),
    )?;
    print!("{}", report.to_table());
    if let Some(out) = &cli.out {
        write_file(out, &report.to_json())?;
    }
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let text =
        std::fs::read_to_string(input(&args.report)?).map_err(|e| Error::io(&args.report, e))?;
    let report: MetricReport = serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: args.report.display().to_string(),
        message: e.to_string(),
    })?;
    print!("{}", report.to_table());
    if let Some(e) = &report.error_analysis {
        println!();
        print!("{}", e.to_table());
    }
    Ok(())
}

fn run_synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        docs: args.docs,
        dim: args.dim,
        separation_ratio: args.ratio,
        seed: cli.seed.unwrap_or(SynthConfig::default().seed),
        ..Default::default()
    };
    let data = synth(&cfg)?;
    let dir = out_dir(cli, "synth");
    data.write(&dir)?;
    let pipeline = PipelineConfig {
        train_corpus: Some("train.json".into()),
        dev_corpus: Some("dev.json".into()),
        test_corpus: Some("test.json".into()),
        embeddings: Some("embeddings.jsonl".into()),
        embedding_dim: Some(args.dim),
        seed: cfg.seed,
        out_dir: "out".into(),
        ..Default::default()
    };
    write_file(&dir.join("pipeline.toml"), &pipeline.to_toml())?;
    println!(
        "wrote {} ({} / {} / {} documents)",
        dir.display(),
        data.train.documents.len(),
        data.dev.documents.len(),
        data.test.documents.len()
    );
    Ok(())
}

fn diagnostics(cli: &Cli, args: &DiagnosticsArgs) -> Result<()> {
    let corpus = load_corpus(input(&args.corpus)?)?;
    let table: EmbeddingTable = read_embeddings(input(&args.embeddings)?, None)?;
    table.check_coverage(&corpus)?;
    let transform = match &args.transform {
        None => None,
        Some(p) => match load_checkpoint(input(p)?)? {
            Checkpoint::CosineTransform(t) => Some(t),
            Checkpoint::Cosine(m) => m.transform,
            Checkpoint::Regressor(m) => m.frozen_transform,
        },
    };
    let pairs = corpus_pairs(&corpus, PairStrategy::AllPreceding)?;
    let d = compute_diagnostics(&pairs, &table, transform.as_ref())?;
    emit(cli, &to_json(&d))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = run_pipeline(&cfg)?;
    print!("{}", out.report.to_table());
    println!("wrote {}", cfg.out_dir.display());
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Pairs(a) => pairs(cli, a),
        Command::TrainCosine => train_cosine(cli),
        Command::TrainRegressor => train_regressor(cli),
        Command::TuneThreshold => tune(cli),
        Command::Predict(a) => predict(cli, a),
        Command::Cluster(a) => cluster(cli, a),
        Command::Score(a) => score(cli, a),
        Command::Report(a) => report(a),
        Command::Synth(a) => run_synth(cli, a),
        Command::Diagnostics(a) => diagnostics(cli, a),
        Command::Run => run(cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
