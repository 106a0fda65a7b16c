mod config;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use logent::detect::{read_labels_csv, write_labels_csv};
use logent::failgen::{
    generate, natural_corpus, openstack_baseline, openstack_shape, templated_corpus, LabeledCorpus,
    ScenarioSpec,
};
use logent::ingest::{read_all, ErrorPolicy};
use logent::ngram::cross_validate;
use logent::timeline::{import_timeline, score_timeline_par};
use logent::{
    export_timeline, hampel_flag, window, DetectionReport, Format, LogRecord, MaskSet, NGramModel,
    SplitPlan, TokenSequence,
};

use config::{Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "logent",
    version,
    about = "Entropy timelines and failure detection for execution logs"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic corpus
    Gen(GenArgs),
    /// Train an n-gram model on a corpus
    Train(TrainArgs),
    /// Score a corpus window by window into an entropy timeline
    Score(ScoreArgs),
    /// Flag anomalous windows, and evaluate them when labels are given
    Detect(DetectArgs),
    /// Cross-validate held-out entropy over a range of model orders
    Xval(XvalArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    /// 52-window cloud controller log with spawn failures
    Openstack,
    /// Failure-free training log for the openstack preset
    OpenstackBaseline,
    /// Masked log lines from 20 templates
    Templated,
    /// Distinct English-like sentences
    Natural,
}

#[derive(clap::Args)]
struct GenArgs {
    /// Scenario TOML file
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Emit the failure-free training run of the scenario instead
    #[arg(long, conflicts_with = "preset")]
    baseline: bool,
    /// Record count for the record-count presets
    #[arg(long)]
    records: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    /// Structured if the first non-blank line starts with `{`
    Auto,
    Plain,
    Structured,
}

#[derive(clap::Args)]
struct CorpusArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    format: FormatArg,
    /// TOML mask rule file; the default rules apply otherwise
    #[arg(long)]
    mask_rules: Option<PathBuf>,
    /// Skip malformed structured lines instead of failing
    #[arg(long)]
    skip_malformed: bool,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// Model output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    input: CorpusArgs,
    /// Timeline CSV output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct DetectArgs {
    #[arg(long)]
    timeline: PathBuf,
    /// Per-window `window,label` CSV
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Report JSON output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct XvalArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[arg(long, default_value_t = 1)]
    min_order: usize,
    #[arg(long, default_value_t = 8)]
    max_order: usize,
    /// Table CSV output path
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::resolve(&cli.overrides)?;
    match cli.command {
        Command::Gen(args) => gen(&cfg, args),
        Command::Train(args) => train(&cfg, args),
        Command::Score(args) => score(&cfg, args),
        Command::Detect(args) => detect(&cfg, args),
        Command::Xval(args) => xval(&cfg, args),
    }
}

/// Writes `bytes` to a sibling temporary file and renames it into place, so
/// a failed command never leaves a partial artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} is not a file path", path.display()))?;
    let tmp = path.with_file_name(format!(".{}.partial", name.to_string_lossy()));
    fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("cannot write {}", path.display()))
}

fn refuse_overwrite(out: &Path, inputs: &[&Path]) -> Result<()> {
    let Ok(out) = out.canonicalize() else {
        return Ok(());
    };
    for input in inputs {
        if input.canonicalize().is_ok_and(|i| i == out) {
            bail!("output {} would overwrite an input", out.display());
        }
    }
    Ok(())
}

fn gen(cfg: &RunConfig, args: GenArgs) -> Result<()> {
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;
    if let Some(preset) = args.preset {
        let seed = cfg.seed.unwrap_or(2017);
        let corpus = match preset {
            Preset::Openstack => openstack_shape(seed),
            Preset::OpenstackBaseline => openstack_baseline(seed, args.records.unwrap_or(6000)),
            Preset::Templated | Preset::Natural => {
                let n = args.records.unwrap_or(2000);
                let seqs = if preset == Preset::Templated {
                    templated_corpus(seed, n)
                } else {
                    natural_corpus(seed, n)
                };
                let text: String = seqs.iter().map(|s| s.tokens.join(" ") + "\n").collect();
                write_atomic(&args.out.join("corpus.txt"), text.as_bytes())?;
                println!("records {}, bytes {}, regions 0", seqs.len(), text.len());
                return Ok(());
            }
        };
        return write_labeled(cfg, &corpus, &args.out);
    }
    let path = args.spec.expect("clap requires spec or preset");
    let text = fs::read_to_string(&path)
        .with_context(|| format!("cannot read spec {}", path.display()))?;
    let mut spec: ScenarioSpec =
        toml::from_str(&text).with_context(|| format!("bad spec {}", path.display()))?;
    if let Some(seed) = cfg.seed {
        spec.seed = seed;
    }
    spec.validate()
        .with_context(|| format!("invalid spec {}", path.display()))?;
    if args.baseline {
        spec = spec.baseline();
    }
    let corpus = generate(&spec)?;
    write_labeled(cfg, &corpus, &args.out)
}

/// Corpus, truth regions and per-window labels.
fn write_labeled(cfg: &RunConfig, corpus: &LabeledCorpus, dir: &Path) -> Result<()> {
    let jsonl = corpus.to_jsonl();
    let mut labels = Vec::new();
    write_labels_csv(&corpus.window_labels(cfg.window_bytes), &mut labels)?;
    write_atomic(&dir.join("corpus.jsonl"), &jsonl)?;
    write_atomic(
        &dir.join("truth.json"),
        (corpus.truth_json() + "\n").as_bytes(),
    )?;
    write_atomic(&dir.join("labels.csv"), &labels)?;
    println!(
        "records {}, bytes {}, regions {}",
        corpus.records.len(),
        jsonl.len(),
        corpus.truth_regions.len()
    );
    Ok(())
}

fn load_corpus(args: &CorpusArgs) -> Result<(Vec<LogRecord>, MaskSet)> {
    let rules = match &args.mask_rules {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read mask rules {}", path.display()))?;
            MaskSet::from_toml(&text)
                .with_context(|| format!("bad mask rules {}", path.display()))?
        }
        None => MaskSet::default_rules(),
    };
    let bytes = fs::read(&args.corpus)
        .with_context(|| format!("cannot read corpus {}", args.corpus.display()))?;
    let format = match args.format {
        FormatArg::Plain => Format::Plain,
        FormatArg::Structured => Format::Structured,
        FormatArg::Auto => {
            let first = bytes.iter().find(|b| !b.is_ascii_whitespace());
            if first == Some(&b'{') {
                Format::Structured
            } else {
                Format::Plain
            }
        }
    };
    let policy = if args.skip_malformed {
        ErrorPolicy::Skip
    } else {
        ErrorPolicy::Abort
    };
    let (records, skipped) = read_all(bytes.as_slice(), format, policy)
        .with_context(|| format!("cannot parse corpus {}", args.corpus.display()))?;
    if skipped > 0 {
        eprintln!("warning: skipped {skipped} malformed lines");
    }
    Ok((records, rules))
}

fn train(cfg: &RunConfig, args: TrainArgs) -> Result<()> {
    refuse_overwrite(&args.out, &[&args.input.corpus])?;
    let (records, rules) = load_corpus(&args.input)?;
    let seqs: Vec<TokenSequence> = records
        .iter()
        .map(|r| TokenSequence::from_record(r, &rules))
        .collect();
    let model = NGramModel::train(seqs.iter(), cfg.order, cfg.alpha)?;
    if model.total_tokens() == 0 {
        eprintln!("warning: corpus has no tokens; the model is degenerate");
    }
    write_atomic(&args.out, &model.to_bytes())?;
    println!(
        "order {}, vocab {}, tokens {}",
        model.order(),
        model.vocab_size(),
        model.total_tokens()
    );
    Ok(())
}

fn score(cfg: &RunConfig, args: ScoreArgs) -> Result<()> {
    refuse_overwrite(&args.out, &[&args.model, &args.input.corpus])?;
    let file = File::open(&args.model)
        .with_context(|| format!("cannot open model {}", args.model.display()))?;
    let model = NGramModel::load(BufReader::new(file))
        .with_context(|| format!("cannot load model {}", args.model.display()))?;
    let (records, rules) = load_corpus(&args.input)?;
    let windows: Vec<_> = window(records, cfg.window_bytes).collect();
    let timeline = score_timeline_par(&model, &windows, &rules)?;
    let mut csv = Vec::new();
    export_timeline(&timeline, &mut csv)?;
    write_atomic(&args.out, &csv)?;
    let values = timeline.values();
    let mean = if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    };
    println!("windows {}, mean entropy {mean:.4}", values.len());
    Ok(())
}

fn detect(cfg: &RunConfig, args: DetectArgs) -> Result<()> {
    let mut inputs = vec![args.timeline.as_path()];
    inputs.extend(args.labels.as_deref());
    refuse_overwrite(&args.out, &inputs)?;
    let file = File::open(&args.timeline)
        .with_context(|| format!("cannot open timeline {}", args.timeline.display()))?;
    let timeline = import_timeline(BufReader::new(file))
        .with_context(|| format!("bad timeline {}", args.timeline.display()))?;
    let flags: BTreeSet<usize> = hampel_flag(&timeline.values(), &cfg.hampel);
    let mut report = DetectionReport::new(timeline.len(), &flags, cfg.gap_bridge);
    if let Some(path) = &args.labels {
        let file =
            File::open(path).with_context(|| format!("cannot open labels {}", path.display()))?;
        let labels =
            read_labels_csv(file).with_context(|| format!("bad labels {}", path.display()))?;
        report = report.with_labels(&labels)?;
    }
    write_atomic(&args.out, (report.to_json() + "\n").as_bytes())?;
    print!("windows {}, flagged {:?}", report.windows, report.flagged);
    if let Some(e) = &report.evaluation {
        print!(
            ", precision {:.4}, recall {:.4}, F {:.4}, balanced accuracy {:.4}",
            e.metrics.precision, e.metrics.recall, e.metrics.f_measure, e.metrics.balanced_accuracy
        );
    }
    println!();
    Ok(())
}

fn xval(cfg: &RunConfig, args: XvalArgs) -> Result<()> {
    refuse_overwrite(&args.out, &[&args.input.corpus])?;
    if args.min_order == 0 || args.min_order > args.max_order {
        bail!(
            "order range {}..{} is empty or starts at 0",
            args.min_order,
            args.max_order
        );
    }
    let (records, rules) = load_corpus(&args.input)?;
    let seqs: Vec<TokenSequence> = records
        .iter()
        .map(|r| TokenSequence::from_record(r, &rules))
        .collect();
    let plan = SplitPlan::new(cfg.folds, cfg.seed.unwrap_or(0));
    let rows = cross_validate(&seqs, args.min_order..=args.max_order, &plan, cfg.alpha)?;
    let mut out = BufWriter::new(Vec::new());
    writeln!(out, "order,mean_entropy")?;
    for r in &rows {
        writeln!(out, "{},{:.6}", r.order, r.mean_entropy)?;
        println!("n={} {:.4}", r.order, r.mean_entropy);
    }
    write_atomic(&args.out, &out.into_inner()?)?;
    Ok(())
}
