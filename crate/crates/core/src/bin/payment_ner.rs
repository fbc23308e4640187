//! Command-line entry point: file-based experiment recipes over the
//! payment-ner library. Exit codes: 0 success, 1 usage error, 2 data error.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use payment_ner::baseline::RuleSet;
use payment_ner::bench::{measure_latency, measure_throughput};
use payment_ner::corpus::{
    corpus_stats, default_format_mix, generate_corpus, read_annotations,
    read_annotations_lenient, read_raw_messages, write_annotations, write_raw_messages,
    GeneratorConfig,
};
use payment_ner::crf::{load_model, save_model, train, TrainConfig};
use payment_ner::eval::{
    cross_format_eval, evaluate, paired_bootstrap, CrossFormatPlanEntry, EntitySpan,
};
use payment_ner::features::Gazetteers;
use payment_ner::tagger::{CrfTagger, RuleTagger, Tagger};
use payment_ner::{AnnotatedMessage, MessageFormat, PaymentMessage};

#[derive(Parser)]
#[command(name = "payment-ner", version, about = "Payment-message named entity recognition")]
struct Cli {
    /// Seed for generation, splitting and resampling.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Emit one JSON object per log line.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic annotated corpus.
    Generate {
        /// Number of messages.
        #[arg(long)]
        count: usize,
        /// Output annotation file.
        #[arg(long)]
        out: PathBuf,
        /// Format proportions, e.g. `mt103=0.4,pain001=0.3,ach=0.14,sepa=0.1,other=0.06`.
        #[arg(long)]
        format_mix: Option<String>,
        /// Also write raw messages as JSON lines.
        #[arg(long)]
        raw_out: Option<PathBuf>,
    },
    /// Train a CRF model on annotated corpora.
    Train {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        /// Output model file.
        #[arg(long)]
        model: PathBuf,
        /// L2 regularization coefficient.
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        /// Feature pruning threshold (minimum occurrence count).
        #[arg(long, default_value_t = 2)]
        prune: u32,
        /// Directory overriding the builtin gazetteer files.
        #[arg(long)]
        gazetteers: Option<PathBuf>,
    },
    /// Tag messages and write predictions as an annotation file.
    Tag {
        /// Trained model (required unless --baseline).
        #[arg(long)]
        model: Option<PathBuf>,
        /// Input: annotation file or raw JSON-lines message file.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use the rule-based baseline instead of a model.
        #[arg(long)]
        baseline: bool,
        /// JSON rule file for the baseline.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        gazetteers: Option<PathBuf>,
    },
    /// Evaluate predictions against gold annotations.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Write the full report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Second prediction file: paired-bootstrap test of pred over this.
        #[arg(long)]
        bootstrap: Option<PathBuf>,
        #[arg(long, default_value_t = 10000)]
        iters: usize,
    },
    /// Cross-format generalization experiments from a plan file.
    Crossformat {
        #[arg(long)]
        corpus: PathBuf,
        /// JSON plan: `[{"train_formats": ["MT103"], "test_format": "SEPA"}, ...]`.
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        l2: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long, default_value_t = 2)]
        prune: u32,
        #[arg(long)]
        gazetteers: Option<PathBuf>,
    },
    /// Measure tagging latency and throughput.
    Bench {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        batch: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Throughput measurement window in seconds.
        #[arg(long, default_value_t = 10)]
        duration: u64,
        #[arg(long)]
        baseline: bool,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        gazetteers: Option<PathBuf>,
        /// Write both reports as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn data(context: &str, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

struct Log {
    quiet: bool,
    json: bool,
}

impl Log {
    fn event(&self, name: &str, fields: &[(&str, String)]) {
        if self.quiet {
            return;
        }
        if self.json {
            let mut object = serde_json::Map::new();
            object.insert("event".into(), name.into());
            for (key, value) in fields {
                // Numeric values stay numbers in JSON output.
                let json_value = value
                    .parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .map(serde_json::Value::Number)
                    .unwrap_or_else(|| serde_json::Value::String(value.clone()));
                object.insert((*key).into(), json_value);
            }
            println!("{}", serde_json::Value::Object(object));
        } else {
            let rendered: Vec<String> = fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{} {}", name, rendered.join(" "));
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    let log = Log { quiet: cli.quiet, json: cli.json_logs };
    match run(cli, &log) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli, log: &Log) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { count, out, format_mix, raw_out } => {
            let mut config = GeneratorConfig::with_count_seed(count, cli.seed);
            if let Some(spec) = format_mix {
                config.format_mix = parse_format_mix(&spec)?;
            }
            let corpus = generate_corpus(&config)
                .map_err(|e| CliError::Usage(format!("--count/--format-mix: {e}")))?;
            write_corpus(&corpus, &out)?;
            if let Some(raw_path) = raw_out {
                let messages: Vec<PaymentMessage> =
                    corpus.iter().map(|m| m.message.clone()).collect();
                let mut sink = create(&raw_path)?;
                write_raw_messages(&messages, &mut sink)
                    .map_err(|e| CliError::data(&raw_path.display().to_string(), e))?;
                sink.flush().map_err(|e| CliError::data(&raw_path.display().to_string(), e))?;
            }
            let stats = corpus_stats(&corpus).map_err(|e| CliError::data("stats", e))?;
            log.event(
                "generate",
                &[
                    ("count", corpus.len().to_string()),
                    ("out", out.display().to_string()),
                    ("entity_density_mean", format!("{:.2}", stats.entity_density_mean)),
                    ("multilingual", format!("{:.3}", stats.multilingual_proportion)),
                ],
            );
            Ok(())
        }
        Command::Train { train: train_path, dev, model, l2, max_iter, prune, gazetteers } => {
            let train_corpus = read_corpus(&train_path)?;
            let dev_corpus = read_corpus(&dev)?;
            let gaz = load_gazetteers(gazetteers.as_deref())?;
            let config = TrainConfig {
                l2_lambda: l2,
                max_iterations: max_iter,
                prune_threshold: prune,
                seed: cli.seed,
                ..Default::default()
            };
            let mut on_progress = |p: &payment_ner::crf::TrainProgress| {
                log.event(
                    "train_iteration",
                    &[
                        ("iteration", p.iteration.to_string()),
                        ("objective", format!("{:.6}", p.objective)),
                        ("gradient_norm", format!("{:.6}", p.gradient_norm)),
                        (
                            "dev_micro_f1",
                            p.dev_micro_f1.map_or("n/a".into(), |f| format!("{f:.4}")),
                        ),
                    ],
                );
            };
            let trained = train(&train_corpus, &dev_corpus, &gaz, &config, Some(&mut on_progress))
                .map_err(|e| CliError::data("training failed", e))?;
            let mut sink = create(&model)?;
            save_model(&trained, &mut sink)
                .map_err(|e| CliError::data(&model.display().to_string(), e))?;
            sink.flush().map_err(|e| CliError::data(&model.display().to_string(), e))?;
            log.event(
                "train_done",
                &[
                    ("model", model.display().to_string()),
                    ("features", trained.num_features().to_string()),
                ],
            );
            Ok(())
        }
        Command::Tag { model, input, out, baseline, rules, gazetteers } => {
            let gaz = load_gazetteers(gazetteers.as_deref())?;
            let tagger = build_tagger(model.as_deref(), baseline, rules.as_deref(), gaz)?;
            let messages = read_messages(&input)?;
            let mut predictions = Vec::with_capacity(messages.len());
            for message in &messages {
                let tagged = tagger
                    .tag(message)
                    .map_err(|e| CliError::data(&format!("tagging {}", message.id), e))?;
                predictions.push(AnnotatedMessage {
                    gold_spans: tagged.spans,
                    labels: tagged.labels,
                    tokens: tagged.tokens,
                    message: message.clone(),
                    inner_spans: Vec::new(),
                });
            }
            write_corpus(&predictions, &out)?;
            log.event(
                "tag",
                &[
                    ("tagger", tagger.name().to_string()),
                    ("messages", predictions.len().to_string()),
                    ("out", out.display().to_string()),
                ],
            );
            Ok(())
        }
        Command::Eval { gold, pred, report, bootstrap, iters } => {
            let gold_corpus = read_corpus(&gold)?;
            let predictions = read_predictions(&pred)?;
            let eval_report = evaluate(&gold_corpus, &predictions)
                .map_err(|e| CliError::data("evaluation failed", e))?;
            println!("micro_f1 {:.4}", eval_report.micro.f1);
            log.event(
                "eval",
                &[
                    ("micro_precision", format!("{:.4}", eval_report.micro.precision)),
                    ("micro_recall", format!("{:.4}", eval_report.micro.recall)),
                    ("micro_f1", format!("{:.4}", eval_report.micro.f1)),
                    ("messages", eval_report.message_count.to_string()),
                ],
            );
            if let Some(report_path) = report {
                write_json(&report_path, &eval_report)?;
            }
            if let Some(other) = bootstrap {
                let baseline_predictions = read_predictions(&other)?;
                let p = paired_bootstrap(
                    &gold_corpus,
                    &predictions,
                    &baseline_predictions,
                    iters,
                    cli.seed,
                )
                .map_err(|e| CliError::data("bootstrap failed", e))?;
                println!("bootstrap_p {p:.6}");
                log.event(
                    "bootstrap",
                    &[("p_value", format!("{p:.6}")), ("iterations", iters.to_string())],
                );
            }
            Ok(())
        }
        Command::Crossformat { corpus, plan, report, l2, max_iter, prune, gazetteers } => {
            let corpus = read_corpus(&corpus)?;
            let plan_text = std::fs::read_to_string(&plan)
                .map_err(|e| CliError::data(&plan.display().to_string(), e))?;
            let entries: Vec<CrossFormatPlanEntry> = serde_json::from_str(&plan_text)
                .map_err(|e| CliError::data(&plan.display().to_string(), e))?;
            let gaz = load_gazetteers(gazetteers.as_deref())?;
            let config = TrainConfig {
                l2_lambda: l2,
                max_iterations: max_iter,
                prune_threshold: prune,
                seed: cli.seed,
                ..Default::default()
            };
            let matrix = cross_format_eval(&corpus, &entries, &gaz, &config)
                .map_err(|e| CliError::data("cross-format run failed", e))?;
            for cell in &matrix.cells {
                let train_formats: Vec<&str> =
                    cell.train_formats.iter().map(|f| f.as_str()).collect();
                log.event(
                    "crossformat_cell",
                    &[
                        ("train", train_formats.join("+")),
                        ("test", cell.test_format.as_str().to_string()),
                        ("micro_f1", format!("{:.4}", cell.micro_f1)),
                    ],
                );
            }
            write_json(&report, &matrix)?;
            Ok(())
        }
        Command::Bench { model, input, batch, workers, duration, baseline, rules, gazetteers, report } => {
            let gaz = load_gazetteers(gazetteers.as_deref())?;
            let tagger = build_tagger(model.as_deref(), baseline, rules.as_deref(), gaz)?;
            let messages = read_messages(&input)?;
            let latency = measure_latency(tagger.as_ref(), &messages, 1, 1)
                .map_err(|e| CliError::data("latency benchmark failed", e))?;
            println!("{}", latency.summary());
            let throughput = measure_throughput(
                tagger.as_ref(),
                &messages,
                batch,
                workers,
                Duration::from_secs(duration),
            )
            .map_err(|e| CliError::data("throughput benchmark failed", e))?;
            println!("{}", throughput.summary());
            if let Some(report_path) = report {
                write_json(
                    &report_path,
                    &serde_json::json!({ "latency": latency, "throughput": throughput }),
                )?;
            }
            Ok(())
        }
    }
}

fn parse_format_mix(spec: &str) -> Result<BTreeMap<MessageFormat, f64>, CliError> {
    let mut mix: BTreeMap<MessageFormat, f64> =
        default_format_mix().into_keys().map(|k| (k, 0.0)).collect();
    for part in spec.split(',') {
        let (name, value) = part.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--format-mix entry {part:?} is not name=proportion"))
        })?;
        let format: MessageFormat = name.trim().to_uppercase().parse().map_err(|_| {
            CliError::Usage(format!("--format-mix: unknown format {name:?}"))
        })?;
        let proportion: f64 = value.trim().parse().map_err(|_| {
            CliError::Usage(format!("--format-mix: bad proportion {value:?}"))
        })?;
        mix.insert(format, proportion);
    }
    Ok(mix)
}

fn build_tagger(
    model: Option<&Path>,
    baseline: bool,
    rules: Option<&Path>,
    gazetteers: Gazetteers,
) -> Result<Box<dyn Tagger>, CliError> {
    if baseline {
        let rule_set = match rules {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::data(&path.display().to_string(), e))?;
                RuleSet::from_json(&text)
                    .map_err(|e| CliError::data(&path.display().to_string(), e))?
            }
            None => RuleSet::default(),
        };
        return Ok(Box::new(RuleTagger::new(rule_set, gazetteers)));
    }
    let Some(model_path) = model else {
        return Err(CliError::Usage("--model is required unless --baseline is set".into()));
    };
    let mut source = open(model_path)?;
    let model = load_model(&mut source)
        .map_err(|e| CliError::data(&model_path.display().to_string(), e))?;
    Ok(Box::new(CrfTagger::new(model, gazetteers)))
}

fn load_gazetteers(dir: Option<&Path>) -> Result<Gazetteers, CliError> {
    match dir {
        Some(path) => {
            Gazetteers::from_dir(path).map_err(|e| CliError::data(&path.display().to_string(), e))
        }
        None => Ok(Gazetteers::builtin()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::data(&path.display().to_string(), e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(&path.display().to_string(), e))
}

fn read_corpus(path: &Path) -> Result<Vec<AnnotatedMessage>, CliError> {
    let mut source = open(path)?;
    read_annotations(&mut source).map_err(|e| CliError::data(&path.display().to_string(), e))
}

fn read_predictions(path: &Path) -> Result<BTreeMap<String, Vec<EntitySpan>>, CliError> {
    let mut source = open(path)?;
    let (corpus, _repairs) = read_annotations_lenient(&mut source)
        .map_err(|e| CliError::data(&path.display().to_string(), e))?;
    Ok(corpus.into_iter().map(|m| (m.message.id.clone(), m.gold_spans)).collect())
}

/// Reads tagging input: raw JSON-lines when the file starts with `{`,
/// otherwise the annotation format (labels ignored).
fn read_messages(path: &Path) -> Result<Vec<PaymentMessage>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::data(&path.display().to_string(), e))?;
    if text.trim_start().starts_with('{') {
        read_raw_messages(&mut text.as_bytes())
            .map_err(|e| CliError::data(&path.display().to_string(), e))
    } else {
        let corpus = read_annotations(&mut text.as_bytes())
            .map_err(|e| CliError::data(&path.display().to_string(), e))?;
        Ok(corpus.into_iter().map(|m| m.message).collect())
    }
}

fn write_corpus(corpus: &[AnnotatedMessage], path: &Path) -> Result<(), CliError> {
    let mut sink = create(path)?;
    write_annotations(corpus, &mut sink)
        .map_err(|e| CliError::data(&path.display().to_string(), e))?;
    sink.flush().map_err(|e| CliError::data(&path.display().to_string(), e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::data(&path.display().to_string(), e))?;
    std::fs::write(path, body + "\n").map_err(|e| CliError::data(&path.display().to_string(), e))
}
