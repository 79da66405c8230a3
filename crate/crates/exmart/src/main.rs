//! `exmart` — change-point detection on CSV streams via exchangeability
//! martingales.
//!
//! Exit codes: 0 no alarm, 10 at least one alarm, 2 usage or data error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use exmart::config::{BettingFamily, EstimatorKind, Mode, ResolvedRun, RunConfig};
use exmart::conformal::DenominatorMode;
use exmart::detector::{azuma_threshold, doob_threshold, TestKind};
use exmart::harness::{generate_stream, ScenarioSpec};
use exmart::nonconformity::Sample;
use exmart::output::{
    format_sig, write_alarm, write_stream_header, write_stream_row, write_trace_header,
    write_trace_record,
};
use exmart::pipeline::{PushOutcome, PvalueMode, StreamDetector};

const EXIT_ALARM: u8 = 10;
const EXIT_ERROR: u8 = 2;

#[derive(Parser)]
#[command(
    name = "exmart",
    version,
    about = "Change-point detection for data streams via conformal p-values and martingales"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect change points in a CSV stream of feature vectors.
    Detect {
        /// Input CSV: header row naming feature columns; an optional first
        /// column named `timestamp` is skipped.
        input: PathBuf,
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Generate a synthetic Gaussian stream and run the detector on it.
    Simulate {
        #[command(flatten)]
        common: CommonOpts,
        /// Pre-change stream length.
        #[arg(long, default_value_t = 700)]
        n1: usize,
        /// Post-change stream length.
        #[arg(long, default_value_t = 500)]
        n2: usize,
        /// Stream dimensionality.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Post-change mean shift: one value per dimension
        /// (comma-separated), or a single value broadcast to all.
        #[arg(long, default_value = "2.0", value_delimiter = ',')]
        shift: Vec<f64>,
        /// Post-change standard deviation scale.
        #[arg(long, default_value_t = 1.0)]
        post_std: f64,
        /// Write the generated stream to this CSV file.
        #[arg(long)]
        stream: Option<PathBuf>,
    },
    /// Print a rejection threshold.
    Thresholds {
        #[arg(long)]
        window: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        test: TestArg,
    },
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// p-value computation mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Training prefix length (inductive mode).
    #[arg(long)]
    train_size: Option<usize>,
    /// Sliding window W for tests and density estimation.
    #[arg(long)]
    window: Option<usize>,
    /// Significance level of the rejection test.
    #[arg(long)]
    alpha: Option<f64>,
    /// Concentration-inequality test.
    #[arg(long, value_enum)]
    test: Option<TestArg>,
    /// Betting function family.
    #[arg(long, value_enum)]
    betting: Option<BettingArg>,
    /// Epsilon of the power betting function.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Increment bound b (also the plug-in clip).
    #[arg(long)]
    bound: Option<f64>,
    /// Seed for the tie-break randomization (and simulation).
    /// Falls back to the config file, then EXMART_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the per-step trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write alarms here as line-delimited JSON.
    #[arg(long)]
    alarms: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Reset the martingale after an alarm instead of halting.
    #[arg(long)]
    continue_after_alarm: bool,
    /// Density-estimation moments: windowed or cumulative.
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Density-estimation window (defaults to --window).
    #[arg(long)]
    estimator_window: Option<usize>,
    /// Inductive p-value divisor.
    #[arg(long, value_enum)]
    denominator: Option<DenominatorArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Inductive,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TestArg {
    Azuma,
    Doob,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BettingArg {
    Power,
    Mixture,
    Odd,
    Plugin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Windowed,
    Cumulative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DenominatorArg {
    TrainingPlusOne,
    StreamIndex,
}

impl CommonOpts {
    fn resolve(&self) -> Result<ResolvedRun> {
        let flags = RunConfig {
            mode: self.mode.map(|m| match m {
                ModeArg::Full => Mode::Full,
                ModeArg::Inductive => Mode::Inductive,
            }),
            train_size: self.train_size,
            window: self.window,
            alpha: self.alpha,
            test: self.test.map(|t| match t {
                TestArg::Azuma => TestKind::Azuma,
                TestArg::Doob => TestKind::Doob,
            }),
            betting: self.betting.map(|b| match b {
                BettingArg::Power => BettingFamily::Power,
                BettingArg::Mixture => BettingFamily::Mixture,
                BettingArg::Odd => BettingFamily::Odd,
                BettingArg::Plugin => BettingFamily::Plugin,
            }),
            epsilon: self.epsilon,
            bound: self.bound,
            seed: self.seed,
            trace: self.trace.clone(),
            alarms: self.alarms.clone(),
            continue_after_alarm: self.continue_after_alarm.then_some(true),
            estimator: self.estimator.map(|e| match e {
                EstimatorArg::Windowed => EstimatorKind::Windowed,
                EstimatorArg::Cumulative => EstimatorKind::Cumulative,
            }),
            estimator_window: self.estimator_window,
            denominator: self.denominator.map(|d| match d {
                DenominatorArg::TrainingPlusOne => DenominatorMode::TrainingPlusOne,
                DenominatorArg::StreamIndex => DenominatorMode::StreamIndex,
            }),
        };
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                RunConfig::from_toml(&text)?
            }
            None => RunConfig::default(),
        };
        let mut merged = flags.merged_over(file);
        if merged.seed.is_none() {
            if let Ok(value) = std::env::var("EXMART_SEED") {
                let seed = value.parse::<u64>().map_err(|_| {
                    anyhow!("EXMART_SEED must be an unsigned integer, got {value:?}")
                })?;
                merged.seed = Some(seed);
            }
        }
        Ok(merged.resolve()?)
    }
}

/// Sinks for the per-step outputs; rows are written as they are produced.
struct Writers {
    trace: Option<BufWriter<File>>,
    alarms: Option<BufWriter<File>>,
}

impl Writers {
    fn create(run: &ResolvedRun) -> Result<Self> {
        let trace = match &run.trace_path {
            Some(path) => {
                let file = File::create(path)
                    .with_context(|| format!("creating trace file {}", path.display()))?;
                let mut writer = BufWriter::new(file);
                write_trace_header(&mut writer)?;
                Some(writer)
            }
            None => None,
        };
        let alarms = match &run.alarms_path {
            Some(path) => {
                let file = File::create(path)
                    .with_context(|| format!("creating alarms file {}", path.display()))?;
                Some(BufWriter::new(file))
            }
            None => None,
        };
        Ok(Writers { trace, alarms })
    }

    fn finish(self) -> Result<()> {
        if let Some(mut writer) = self.trace {
            writer.flush()?;
        }
        if let Some(mut writer) = self.alarms {
            writer.flush()?;
        }
        Ok(())
    }
}

fn feed(detector: &mut StreamDetector, sample: Sample, writers: &mut Writers) -> Result<bool> {
    let alarm_count = detector.alarms().len();
    match detector.push(sample)? {
        PushOutcome::Step(record) => {
            if let Some(writer) = writers.trace.as_mut() {
                write_trace_record(writer, &record)?;
            }
            if record.alarm {
                if let Some(writer) = writers.alarms.as_mut() {
                    for alarm in &detector.alarms()[alarm_count..] {
                        write_alarm(writer, alarm)?;
                    }
                }
            }
            Ok(!detector.halted())
        }
        PushOutcome::Training => Ok(true),
        PushOutcome::Halted => Ok(false),
    }
}

fn run_detect(input: &Path, common: &CommonOpts) -> Result<u8> {
    let run = common.resolve()?;
    let mut writers = Writers::create(&run)?;
    let mut detector = StreamDetector::new(run.stream.clone())?;

    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(BufReader::new(file));
    let headers = reader
        .headers()
        .with_context(|| format!("reading header of {}", input.display()))?
        .clone();
    if headers.is_empty() {
        bail!("{}: empty header row", input.display());
    }
    let skip_timestamp = headers.get(0) == Some("timestamp");
    let feature_columns = headers.len() - usize::from(skip_timestamp);
    if feature_columns == 0 {
        bail!("{}: no feature columns", input.display());
    }

    let mut rows = 0u64;
    for result in reader.records() {
        let record = result.with_context(|| format!("reading {}", input.display()))?;
        let line = record.position().map(|p| p.line()).unwrap_or_default();
        let mut features = Vec::with_capacity(feature_columns);
        for (column, cell) in record.iter().enumerate().skip(usize::from(skip_timestamp)) {
            let value: f64 = cell.trim().parse().map_err(|_| {
                anyhow!(
                    "{}:{line}: column {} ({:?}) is not a number",
                    input.display(),
                    column + 1,
                    cell
                )
            })?;
            if !value.is_finite() {
                bail!(
                    "{}:{line}: column {} has non-finite value {cell:?}",
                    input.display(),
                    column + 1
                );
            }
            features.push(value);
        }
        let sample =
            Sample::new(features).map_err(|e| anyhow!("{}:{line}: {e}", input.display()))?;
        rows += 1;
        if !feed(&mut detector, sample, &mut writers)? {
            break;
        }
    }
    if run.stream.mode == PvalueMode::Inductive && rows < run.stream.train_size as u64 {
        bail!(
            "{}: {} rows, but inductive mode needs at least the training size {}",
            input.display(),
            rows,
            run.stream.train_size
        );
    }

    let alarm_count = detector.alarms().len();
    writers.finish()?;
    eprintln!(
        "processed {rows} rows, {alarm_count} alarm(s){}",
        if detector.halted() { ", halted" } else { "" }
    );
    Ok(if alarm_count > 0 { EXIT_ALARM } else { 0 })
}

#[allow(clippy::too_many_arguments)]
fn run_simulate(
    common: &CommonOpts,
    n1: usize,
    n2: usize,
    dim: usize,
    shift: &[f64],
    post_std: f64,
    stream_path: Option<&Path>,
) -> Result<u8> {
    let run = common.resolve()?;
    let shift = match shift {
        [single] => vec![*single; dim],
        exact if exact.len() == dim => exact.to_vec(),
        other => bail!("--shift needs 1 or {dim} values, got {}", other.len()),
    };
    let scenario = ScenarioSpec {
        n1,
        n2,
        dim,
        pre_mean: vec![0.0; dim],
        shift,
        post_std,
        seed: run.stream.seed,
    };
    if run.stream.mode == PvalueMode::Inductive && run.stream.train_size >= n1 && n1 > 0 {
        bail!(
            "training size {} must be smaller than the pre-change length {n1}",
            run.stream.train_size
        );
    }
    let samples = generate_stream(&scenario)?;

    if let Some(path) = stream_path {
        let file = File::create(path)
            .with_context(|| format!("creating stream file {}", path.display()))?;
        let mut writer = BufWriter::new(file);
        write_stream_header(&mut writer, dim)?;
        for sample in &samples {
            write_stream_row(&mut writer, sample)?;
        }
        writer.flush()?;
    }

    let mut writers = Writers::create(&run)?;
    let mut detector = StreamDetector::new(run.stream.clone())?;
    for sample in samples {
        if !feed(&mut detector, sample, &mut writers)? {
            break;
        }
    }
    let alarm_count = detector.alarms().len();
    writers.finish()?;
    eprintln!(
        "simulated {} samples, {alarm_count} alarm(s)",
        scenario.len()
    );
    Ok(if alarm_count > 0 { EXIT_ALARM } else { 0 })
}

fn run_thresholds(window: usize, alpha: f64, test: TestArg) -> Result<u8> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!("--alpha must lie in (0,1), got {alpha}");
    }
    if window == 0 {
        bail!("--window must be >= 1");
    }
    let threshold = match test {
        TestArg::Azuma => azuma_threshold(window, alpha),
        TestArg::Doob => doob_threshold(window, alpha),
    };
    println!("{}", format_sig(threshold, 6));
    Ok(0)
}

fn run() -> Result<u8> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Detect { input, common } => run_detect(input, common),
        Command::Simulate {
            common,
            n1,
            n2,
            dim,
            shift,
            post_std,
            stream,
        } => run_simulate(common, *n1, *n2, *dim, shift, *post_std, stream.as_deref()),
        Command::Thresholds {
            window,
            alpha,
            test,
        } => run_thresholds(*window, *alpha, *test),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
