//! `loudloss` command-line front end.
//!
//! stdout carries data (JSON or CSV), stderr a single diagnostic line on
//! failure. Exit codes: 0 ok, 1 internal error, 2 input error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::audio_io::{load_wav, save_wav, synthetic_pair};
use crate::error::Error;
use crate::loss_engine::{compressed_loss, mse_loss, LossConfig, LossDomain, LossEngine, Weighting};
use crate::melbands::{build_partition, BandOverlap, BandScale, PartitionConfig};
use crate::metrics::MetricReport;
use crate::spectrum::{stft_magnitude, to_log_power, StftConfig, DEFAULT_FLOOR_DB};
use crate::trainer_demo::{compare_objectives, CompareConfig};
use crate::weights::{per_bin_weights, LoudnessContour};

#[derive(Debug, Parser)]
#[command(name = "loudloss", version, about = "Equal-loudness weighted sub-band spectral loss")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score an enhanced WAV against a clean reference WAV (JSON report).
    Analyze(AnalyzeArgs),
    /// Print the sub-band table as CSV.
    Partition(BandArgs),
    /// Print per-band (or per-bin) perceptual weights as CSV.
    Weights(WeightsArgs),
    /// Train per-bin gains under the weighted loss and under MSE and compare.
    TrainDemo(TrainArgs),
    /// Write the seeded sinusoid / sinusoid+noise pair as two WAV files.
    SynthPair(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Mel,
    UniformHz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OverlapArg {
    Half,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightingArg {
    EqualLoudness,
    Uniform,
    PerBin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DomainArg {
    LogPower,
    LinearMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct BandArgs {
    /// Number of sub-bands.
    #[arg(short = 'k', long = "bands", default_value_t = 25)]
    pub bands: usize,
    #[arg(long, value_enum, default_value_t = ScaleArg::Mel)]
    pub scale: ScaleArg,
    #[arg(long, value_enum, default_value_t = OverlapArg::Half)]
    pub overlap: OverlapArg,
    /// Lowest boundary frequency in Hz.
    #[arg(long, default_value_t = 0.0)]
    pub f_min: f64,
    /// Highest boundary frequency in Hz (default: Nyquist).
    #[arg(long)]
    pub f_max: Option<f64>,
    /// STFT window / FFT length in samples.
    #[arg(long, default_value_t = 512)]
    pub window: usize,
}

impl BandArgs {
    fn partition_config(&self) -> PartitionConfig {
        let mut cfg = PartitionConfig::for_stft(crate::PIPELINE_SAMPLE_RATE, self.window);
        cfg.num_bands = self.bands;
        cfg.f_min = self.f_min;
        if let Some(f_max) = self.f_max {
            cfg.f_max = f_max;
        }
        cfg.scale = match self.scale {
            ScaleArg::Mel => BandScale::Mel,
            ScaleArg::UniformHz => BandScale::UniformHz,
        };
        cfg.overlap = match self.overlap {
            OverlapArg::Half => BandOverlap::Half,
            OverlapArg::None => BandOverlap::None,
        };
        cfg
    }
}

#[derive(Debug, Clone, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub bands: BandArgs,
    #[arg(long, value_enum, default_value_t = WeightingArg::EqualLoudness)]
    pub weighting: WeightingArg,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Enhanced (estimated) WAV.
    pub est: PathBuf,
    /// Clean reference WAV.
    pub reference: PathBuf,
    #[command(flatten)]
    pub bands: BandArgs,
    #[arg(long, value_enum, default_value_t = WeightingArg::EqualLoudness)]
    pub weighting: WeightingArg,
    #[arg(long, value_enum, default_value_t = DomainArg::LogPower)]
    pub domain: DomainArg,
    /// Compression exponents for the compressed-magnitude baseline.
    #[arg(long = "alpha", value_delimiter = ',', default_values_t = [0.3, 0.7])]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_FLOOR_DB, allow_negative_numbers = true)]
    pub floor_db: f64,
    #[arg(long, default_value_t = 256)]
    pub hop: usize,
}

impl AnalyzeArgs {
    fn loss_config(&self) -> LossConfig {
        let weighting = match self.weighting {
            WeightingArg::EqualLoudness => Weighting::EqualLoudness,
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::PerBin => Weighting::PerBin,
        };
        LossConfig {
            domain: match self.domain {
                DomainArg::LogPower => LossDomain::LogPower,
                DomainArg::LinearMagnitude => LossDomain::LinearMagnitude,
            },
            weighting,
            partition: (weighting != Weighting::PerBin).then(|| self.bands.partition_config()),
            floor_db: self.floor_db,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = CompareConfig::default().steps)]
    pub steps: usize,
    #[arg(long, default_value_t = CompareConfig::default().n_frames)]
    pub frames: usize,
    /// Step size for the weighted-loss run.
    #[arg(long, default_value_t = CompareConfig::default().lr_loud)]
    pub lr_loud: f64,
    /// Step size for the magnitude-MSE run.
    #[arg(long, default_value_t = CompareConfig::default().lr_mse)]
    pub lr_mse: f64,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output path of the noisy estimate.
    #[arg(long)]
    pub est_out: PathBuf,
    /// Output path of the clean sinusoid.
    #[arg(long)]
    pub ref_out: PathBuf,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    /// The diagnostic collapsed onto one line.
    pub fn line(&self) -> String {
        self.message.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::DivergenceDetected { .. } => CliError::internal(err.to_string()),
            _ => CliError::input(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::internal(format!("writing output: {err}"))
    }
}

fn write_json(out: &mut dyn Write, value: Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&value)
        .map_err(|e| CliError::internal(format!("serializing report: {e}")))?;
    writeln!(out, "{text}")?;
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::internal(format!("serializing report: {e}")))
}

pub fn run_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let est = load_wav(&args.est)?;
    let reference = load_wav(&args.reference)?;
    if est.len() != reference.len() {
        return Err(Error::LengthMismatch {
            est: est.len(),
            reference: reference.len(),
        }
        .into());
    }
    let stft = StftConfig::new(args.bands.window, args.hop)?;
    let engine = LossEngine::new(args.loss_config(), est.sample_rate(), stft.fft_size())?;
    let est_mag = stft_magnitude(&est, &stft)?;
    let ref_mag = stft_magnitude(&reference, &stft)?;
    let report = engine.loss(&est_mag, &ref_mag)?;
    let compressed = args
        .alphas
        .iter()
        .map(|&alpha| Ok(json!({ "alpha": alpha, "loss": compressed_loss(&est_mag, &ref_mag, alpha)? })))
        .collect::<Result<Vec<_>, Error>>()?;
    let floor = args.floor_db;
    let metrics = MetricReport::compute(&est, &reference)?;
    let value = json!({
        "loss": to_value(&report)?,
        "mse_magnitude": mse_loss(&est_mag, &ref_mag)?,
        "mse_log_power": mse_loss(&to_log_power(&est_mag, floor), &to_log_power(&ref_mag, floor))?,
        "compressed": compressed,
        "metrics": to_value(&metrics)?,
    });
    write_json(out, value)
}

pub fn run_partition(args: &BandArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let partition = build_partition(&args.partition_config())?;
    writeln!(out, "band,start_bin,end_bin,F_i,center_hz,lower_hz,upper_hz")?;
    for (i, b) in partition.bands().iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.6}",
            i,
            b.start,
            b.end,
            b.width(),
            b.center_hz,
            b.lower_hz,
            b.upper_hz
        )?;
    }
    Ok(())
}

pub fn run_weights(args: &WeightsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let contour = LoudnessContour::forty_phon();
    let cfg = args.bands.partition_config();
    if args.weighting == WeightingArg::PerBin {
        cfg.validate()?;
        let bin_hz = f64::from(cfg.sample_rate) / cfg.fft_size as f64;
        let weights = per_bin_weights(&contour, cfg.num_bins(), cfg.sample_rate, cfg.fft_size);
        writeln!(out, "bin,center_hz,spl_db,weight")?;
        for (bin, w) in weights.iter().enumerate() {
            let hz = bin as f64 * bin_hz;
            writeln!(out, "{},{:.6},{:.6},{:.6}", bin, hz, contour.interpolated_spl(hz), w)?;
        }
        return Ok(());
    }
    let partition = build_partition(&cfg)?;
    writeln!(out, "band,center_hz,table_hz,spl_db,weight")?;
    for (i, band) in partition.bands().iter().enumerate() {
        let (table_hz, spl) = contour.nearest_entry(band.center_hz);
        let weight = match args.weighting {
            WeightingArg::Uniform => 1.0,
            _ => contour.reference_spl() / spl,
        };
        writeln!(
            out,
            "{},{:.6},{},{:.2},{:.6}",
            i, band.center_hz, table_hz, spl, weight
        )?;
    }
    Ok(())
}

pub fn run_train_demo(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = CompareConfig {
        n_frames: args.frames,
        steps: args.steps,
        lr_loud: args.lr_loud,
        lr_mse: args.lr_mse,
    };
    let comparison = compare_objectives(args.seed, &cfg)?;
    match args.format {
        FormatArg::Json => write_json(out, to_value(&comparison)?),
        FormatArg::Csv => {
            write!(out, "{}", comparison.residual_csv())?;
            Ok(())
        }
    }
}

pub fn run_synth_pair(args: &SynthArgs) -> Result<(), CliError> {
    let (est, reference) = synthetic_pair(args.seed);
    save_wav(&est, &args.est_out)?;
    save_wav(&reference, &args.ref_out)?;
    Ok(())
}

/// Parse `args` (including the program name) and run the chosen subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{err}")?;
                return Ok(());
            }
            let rendered = err.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::input(first.trim_start_matches("error: ").to_string()));
        }
    };
    match &cli.command {
        Command::Analyze(a) => run_analyze(a, out),
        Command::Partition(a) => run_partition(a, out),
        Command::Weights(a) => run_weights(a, out),
        Command::TrainDemo(a) => run_train_demo(a, out),
        Command::SynthPair(a) => run_synth_pair(a),
    }
}
