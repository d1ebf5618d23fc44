//! Command-line surface: generate synthetic streams, train detectors, score
//! streams (files or stdin), evaluate AUC-ROC, and benchmark throughput.

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use varade::baselines::{iso_fit, knn_fit, IsoForestParams};
use varade::bench::{bench_throughput, BenchConfig};
use varade::checkpoint::{self, Checkpoint, ModelKind};
use varade::data::{self, CsvReader, Label, LabeledStream, Normalizer, SynthConfig};
use varade::detector::{detect_stream, ScoredPoint, SourceItem, StreamStats};
use varade::error::VaradeError;
use varade::eval::{evaluate, EvalReport};
use varade::model::{VaradeConfig, VaradeModel};
use varade::optim::AdamConfig;
use varade::tensor::Tensor;
use varade::train::{train, TrainConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(
    name = "varade",
    about = "Streaming multivariate time-series anomaly detection",
    disable_help_subcommand = true
)]
struct Cli {
    /// Optional flat key=value config file; explicit flags win on conflict.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic 86-channel sensor stream as CSV.
    Synth(SynthArgs),
    /// Fit a detector on a recorded stream and write a checkpoint.
    Train(TrainArgs),
    /// Score a stream (file or '-' for stdin) against a checkpoint.
    Score(ScoreArgs),
    /// Compute AUC-ROC over a labeled scored stream.
    Eval(EvalArgs),
    /// Measure inference throughput on pre-built inputs.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Number of 30-action cycles.
    #[arg(long)]
    cycles: Option<usize>,
    /// Sample rate in Hz.
    #[arg(long)]
    rate: Option<f64>,
    /// Collision bursts to inject.
    #[arg(long)]
    anomalies: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Minimum burst duration, seconds.
    #[arg(long)]
    burst_min: Option<f64>,
    /// Maximum burst duration, seconds.
    #[arg(long)]
    burst_max: Option<f64>,
    /// Omit the label column.
    #[arg(long)]
    no_labels: bool,
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV (normal behavior; labels, if any, are ignored with a warning).
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint output path.
    #[arg(long)]
    out: PathBuf,
    /// Detector family.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    // forecaster options
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    base_maps: Option<usize>,
    #[arg(long)]
    lambda: Option<f32>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f32>,
    /// Cosine-decay the learning rate down to this value.
    #[arg(long)]
    final_lr: Option<f32>,
    /// Progress print interval in steps (0 = quiet).
    #[arg(long)]
    log_every: Option<usize>,
    // kNN options
    #[arg(long)]
    k: Option<usize>,
    /// Cap on stored kNN reference points (uniform subsample).
    #[arg(long)]
    max_points: Option<usize>,
    // Isolation Forest options
    #[arg(long)]
    trees: Option<usize>,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    contamination: Option<f64>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Input CSV path, or '-' for standard input (live mode).
    #[arg(long)]
    data: String,
    /// Output path; defaults to standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append the input's label column to each scored line.
    #[arg(long)]
    emit_labels: bool,
    /// Bound on queued unscored samples under sink backpressure.
    #[arg(long)]
    pending_capacity: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// Scored stream: `timestamp,score,label` lines with header.
    #[arg(long)]
    scores: PathBuf,
    /// Emit a single machine-readable line instead of the text report.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Concurrent scoring threads over the shared model.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    json: bool,
}

/// Flat key=value fallback values; flags win on conflict.
struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    fn load(path: Option<&Path>) -> Result<Self, String> {
        let mut values = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let Some((key, value)) = line.split_once('=') else {
                    return Err(format!(
                        "config file {} line {}: expected key=value",
                        path.display(),
                        i + 1
                    ));
                };
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(ConfigFile { values })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| format!("config key '{key}': cannot parse '{raw}'")),
            None => Ok(default),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are success, everything else is a usage error
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match ConfigFile::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args, &config),
        Command::Train(args) => cmd_train(args, &config),
        Command::Score(args) => cmd_score(args, &config),
        Command::Eval(args) => cmd_eval(args, &config),
        Command::Bench(args) => cmd_bench(args, &config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            let code = match e {
                VaradeError::Numeric(_) => EXIT_NUMERIC,
                VaradeError::Io(_)
                | VaradeError::Format { .. }
                | VaradeError::Checkpoint(_)
                | VaradeError::Shape { .. }
                | VaradeError::Other(_) => EXIT_DATA,
                VaradeError::Config(_) => EXIT_USAGE,
            };
            ExitCode::from(code)
        }
    }
}

enum CliError {
    Usage(String),
    Lib(VaradeError),
}

impl From<VaradeError> for CliError {
    fn from(e: VaradeError) -> Self {
        CliError::Lib(e)
    }
}

impl From<String> for CliError {
    fn from(msg: String) -> Self {
        CliError::Usage(msg)
    }
}

fn cmd_synth(args: SynthArgs, config: &ConfigFile) -> Result<(), CliError> {
    let synth = SynthConfig {
        cycles: config.get(args.cycles, "cycles", 4)?,
        sample_rate_hz: config.get(args.rate, "rate", 200.0)?,
        anomalies: config.get(args.anomalies, "anomalies", 0)?,
        seed: config.get(args.seed, "seed", 0)?,
        burst_min_s: config.get(args.burst_min, "burst_min", 0.8)?,
        burst_max_s: config.get(args.burst_max, "burst_max", 2.0)?,
    };
    let (stream, report) = data::synth_generate(&synth)?;
    data::write_csv(&args.out, &stream, !args.no_labels)?;
    println!(
        "wrote {} samples ({} anomalous across {} bursts, label fraction {:.5}) to {}",
        report.total_samples,
        report.anomaly_samples,
        report.bursts,
        report.label_fraction,
        args.out.display()
    );
    Ok(())
}

fn normalized_samples(stream: &LabeledStream, normalizer: &Normalizer) -> Result<Vec<Vec<f32>>, VaradeError> {
    stream
        .records
        .iter()
        .map(|r| normalizer.apply(&r.values))
        .collect()
}

fn cmd_train(args: TrainArgs, config: &ConfigFile) -> Result<(), CliError> {
    let model_name: String = config.get(args.model.clone(), "model", "varade".to_string())?;
    let seed: u64 = config.get(args.seed, "seed", 0)?;
    let stream = data::load_csv(&args.data)?;
    if stream.is_empty() {
        return Err(CliError::Lib(VaradeError::Config("training stream is empty".into())));
    }
    if stream.has_labels() {
        eprintln!(
            "warning: training data contains {} anomaly labels; labels are ignored, training assumes normal behavior",
            stream.anomaly_count()
        );
    }
    let normalizer = Normalizer::fit(&stream)?;
    let normalized = normalized_samples(&stream, &normalizer)?;

    let model = match model_name.as_str() {
        "varade" => {
            let cfg = VaradeConfig {
                window: config.get(args.window, "window", 512)?,
                channels: stream.channels(),
                base_maps: config.get(args.base_maps, "base_maps", 128)?,
                lambda: config.get(args.lambda, "lambda", 1.0)?,
                ..VaradeConfig::default()
            };
            let mut model = VaradeModel::build(cfg, seed)?;
            let steps: usize = config.get(args.steps, "steps", 2000)?;
            if steps > 0 {
                let train_cfg = TrainConfig {
                    steps,
                    batch_size: config.get(args.batch, "batch", 64)?,
                    seed,
                    adam: AdamConfig {
                        lr: config.get(args.lr, "lr", 1e-5)?,
                        ..AdamConfig::default()
                    },
                    final_lr: match args.final_lr {
                        Some(v) => Some(v),
                        None => config.get(None, "final_lr", f32::NAN).ok().filter(|v| v.is_finite()),
                    },
                    log_every: config.get(args.log_every, "log_every", 0)?,
                };
                let stats = train(&mut model, &normalized, &train_cfg)?;
                println!(
                    "trained {} steps: total {:.6} recon {:.6} kl {:.6}",
                    stats.steps,
                    stats.final_loss.total,
                    stats.final_loss.recon,
                    stats.final_loss.kl
                );
            } else {
                println!("0 training steps requested; writing initialization checkpoint");
            }
            ModelKind::Varade(model)
        }
        "knn" => {
            let k = config.get(args.k, "k", varade::baselines::DEFAULT_K)?;
            let max_points: usize = config.get(args.max_points, "max_points", 2000)?;
            let points = subsample(&normalized, max_points, seed);
            ModelKind::Knn(knn_fit(points, k)?)
        }
        "iforest" => {
            let params = IsoForestParams {
                n_trees: config.get(args.trees, "trees", 100)?,
                subsample: config.get(args.subsample, "subsample", 256)?,
                contamination: config.get(args.contamination, "contamination", 0.1)?,
            };
            ModelKind::IsoForest(iso_fit(&normalized, params, seed)?)
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown model '{other}', expected varade|knn|iforest"
            )));
        }
    };
    checkpoint::save(&args.out, &Checkpoint { normalizer, model })?;
    println!("checkpoint written to {}", args.out.display());
    Ok(())
}

fn subsample(data: &[Vec<f32>], cap: usize, seed: u64) -> Vec<Vec<f32>> {
    if data.len() <= cap {
        return data.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, data.len(), cap)
        .into_iter()
        .map(|i| data[i].clone())
        .collect()
}

fn cmd_score(args: ScoreArgs, config: &ConfigFile) -> Result<(), CliError> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let pending_capacity: usize = config.get(args.pending_capacity, "pending_capacity", 65536)?;
    let live = args.data == "-";

    let out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(std::fs::File::create(path).map_err(VaradeError::Io)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = out;
    let emit_labels = args.emit_labels;
    let mut write_point = move |p: ScoredPoint, flush: bool| {
        if emit_labels {
            let label = match p.label {
                Some(Label::Anomaly) => 1,
                _ => 0,
            };
            let _ = writeln!(out, "{},{},{}", p.timestamp, p.score, label);
        } else {
            let _ = writeln!(out, "{},{}", p.timestamp, p.score);
        }
        if flush {
            let _ = out.flush();
        }
    };

    let stats = if live {
        let stdin = std::io::stdin().lock();
        score_reader(&ckpt, stdin, &mut |p| write_point(p, true), pending_capacity)?
    } else {
        let file = std::fs::File::open(&args.data).map_err(VaradeError::Io)?;
        score_reader(
            &ckpt,
            std::io::BufReader::new(file),
            &mut |p| write_point(p, false),
            pending_capacity,
        )?
    };
    eprintln!(
        "scored {} samples ({} dropped, {} malformed)",
        stats.emitted, stats.dropped, stats.malformed
    );
    Ok(())
}

fn score_reader<R: BufRead, F: FnMut(ScoredPoint)>(
    ckpt: &Checkpoint,
    reader: R,
    emit: &mut F,
    pending_capacity: usize,
) -> Result<StreamStats, CliError> {
    let mut csv = CsvReader::new(reader)?;
    let data_channels = data::CHANNEL_COUNT;
    let model_channels = ckpt.model.channels();
    if model_channels != data_channels {
        return Err(CliError::Lib(VaradeError::Other(format!(
            "channel-count mismatch: checkpoint expects {model_channels} channels, data has {data_channels}"
        ))));
    }
    match &ckpt.model {
        ModelKind::Varade(model) => {
            let source = std::iter::from_fn(move || -> Option<SourceItem> {
                match csv.next_record() {
                    Ok(Some(r)) => Some(Ok((r.timestamp, r.values, Some(r.label)))),
                    Ok(None) => None,
                    Err(e) => Some(Err(e)),
                }
            });
            let stats = detect_stream(model, &ckpt.normalizer, source, emit, pending_capacity)?;
            Ok(stats)
        }
        ModelKind::Knn(index) => {
            let mut stats = StreamStats::default();
            loop {
                match csv.next_record() {
                    Ok(None) => break,
                    Err(_) => stats.malformed += 1,
                    Ok(Some(r)) => {
                        let normalized = ckpt.normalizer.apply(&r.values)?;
                        let score = index.score(&normalized)?;
                        emit(ScoredPoint {
                            timestamp: r.timestamp,
                            score,
                            label: Some(r.label),
                        });
                        stats.emitted += 1;
                    }
                }
            }
            Ok(stats)
        }
        ModelKind::IsoForest(forest) => {
            let mut stats = StreamStats::default();
            loop {
                match csv.next_record() {
                    Ok(None) => break,
                    Err(_) => stats.malformed += 1,
                    Ok(Some(r)) => {
                        let normalized = ckpt.normalizer.apply(&r.values)?;
                        let score = forest.score(&normalized)?;
                        emit(ScoredPoint {
                            timestamp: r.timestamp,
                            score,
                            label: Some(r.label),
                        });
                        stats.emitted += 1;
                    }
                }
            }
            Ok(stats)
        }
    }
}

fn load_scored(path: &Path) -> Result<Vec<ScoredPoint>, VaradeError> {
    let text = std::fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(VaradeError::Format {
                row: i,
                column: "-".into(),
                detail: format!("expected timestamp,score,label; got {} fields", fields.len()),
            });
        }
        let parse = |field: &str, column: &str| -> Result<f64, VaradeError> {
            field.parse().map_err(|_| VaradeError::Format {
                row: i,
                column: column.into(),
                detail: format!("non-numeric cell '{field}'"),
            })
        };
        let timestamp = parse(fields[0], "timestamp")?;
        let score = parse(fields[1], "score")?;
        let label = match fields[2] {
            "0" | "normal" => Label::Normal,
            "1" | "anomaly" => Label::Anomaly,
            other => {
                return Err(VaradeError::Format {
                    row: i,
                    column: "label".into(),
                    detail: format!("unrecognized label '{other}'"),
                });
            }
        };
        points.push(ScoredPoint {
            timestamp,
            score,
            label: Some(label),
        });
    }
    Ok(points)
}

fn print_eval(report: &EvalReport, json: bool) {
    if json {
        println!(
            "{{\"auc\":{:.6},\"n_normal\":{},\"n_anomaly\":{},\"normal_mean\":{:.6},\"anomaly_mean\":{:.6}}}",
            report.auc,
            report.n_normal,
            report.n_anomaly,
            report.normal_scores.mean,
            report.anomaly_scores.mean
        );
    } else {
        println!("auc {:.6}", report.auc);
        println!("normal   n={} min={:.6} mean={:.6} max={:.6}",
            report.n_normal, report.normal_scores.min, report.normal_scores.mean, report.normal_scores.max);
        println!("anomaly  n={} min={:.6} mean={:.6} max={:.6}",
            report.n_anomaly, report.anomaly_scores.min, report.anomaly_scores.mean, report.anomaly_scores.max);
    }
}

fn cmd_eval(args: EvalArgs, _config: &ConfigFile) -> Result<(), CliError> {
    let points = load_scored(&args.scores)?;
    let report = evaluate(&points)?;
    print_eval(&report, args.json);
    Ok(())
}

fn cmd_bench(args: BenchArgs, config: &ConfigFile) -> Result<(), CliError> {
    let ckpt = checkpoint::load(&args.checkpoint)?;
    let bench_cfg = BenchConfig {
        iterations: config.get(args.iterations, "iterations", 100)?,
        warmup: config.get(args.warmup, "warmup", 10)?,
        threads: config.get(args.threads, "threads", 1)?,
    };
    let seed: u64 = config.get(args.seed, "seed", 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = match &ckpt.model {
        ModelKind::Varade(model) => {
            let c = model.config.channels;
            let t = model.config.window;
            let windows: Vec<Tensor> = (0..8)
                .map(|_| {
                    Tensor::new(
                        vec![c, t],
                        (0..c * t).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
                    )
                    .expect("window shape")
                })
                .collect();
            bench_throughput(
                &windows,
                |w| {
                    let (_, logvar) = model.forward(w).expect("bench forward");
                    logvar.data().iter().map(|&v| (v as f64).exp()).sum::<f64>()
                        / logvar.len() as f64
                },
                &bench_cfg,
            )?
        }
        ModelKind::Knn(index) => {
            let dim = index.dim();
            let queries: Vec<Vec<f32>> = (0..64)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
                .collect();
            bench_throughput(&queries, |q| index.score(q).expect("bench knn"), &bench_cfg)?
        }
        ModelKind::IsoForest(forest) => {
            let dim = forest.dim();
            let queries: Vec<Vec<f32>> = (0..64)
                .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
                .collect();
            bench_throughput(&queries, |q| forest.score(q).expect("bench iforest"), &bench_cfg)?
        }
    };
    if args.json {
        println!(
            "{{\"model\":\"{}\",\"frequency_hz\":{:.3},\"wall_clock_s\":{:.6},\"p50_ms\":{:.4},\"p95_ms\":{:.4},\"p99_ms\":{:.4},\"measured\":{},\"warmup_excluded\":{},\"threads\":{}}}",
            ckpt.model.name(),
            report.frequency_hz,
            report.wall_clock_s,
            report.p50_ms,
            report.p95_ms,
            report.p99_ms,
            report.measured,
            report.warmup_excluded,
            report.threads
        );
    } else {
        println!("model            {}", ckpt.model.name());
        println!("inference freq   {:.3} Hz", report.frequency_hz);
        println!("wall clock       {:.6} s", report.wall_clock_s);
        println!("latency p50      {:.4} ms", report.p50_ms);
        println!("latency p95      {:.4} ms", report.p95_ms);
        println!("latency p99      {:.4} ms", report.p99_ms);
        println!("measured         {}", report.measured);
        println!("warm-up excluded {}", report.warmup_excluded);
        println!("threads          {}", report.threads);
    }
    Ok(())
}
