use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use depthcal::calibration::{BinningConfig, CalibrationConfig, PoolingDivisor};
use depthcal::cli::{
    cli_apply, cli_calibrate, cli_evaluate, cli_simulate, ApplyOptions, CalibrateOptions,
    EvalMode, EvaluateOptions, SimulateOptions,
};
use depthcal::evaluation::{DEFAULT_BUCKET_WIDTH, DEFAULT_INLIER_GATE};
use depthcal::{CalibrationFormat, Error};

/// Depth camera bias calibration against a planar wall.
#[derive(Parser)]
#[command(name = "depthcal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic wall dataset with a known bias field.
    Simulate {
        /// Simulation config (JSON).
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        output: PathBuf,
        /// Overrides the seed of the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit per-pixel bias and the noise model from a dataset.
    Calibrate(CalibrateArgs),
    /// Compensate depth images with a calibration.
    Apply {
        /// Calibration file.
        calibration: PathBuf,
        /// Depth images or directories of them.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Output image (single input) or directory.
        #[arg(long)]
        output: PathBuf,
    },
    /// Write raw vs. calibrated error curves as CSV.
    Evaluate {
        calibration: PathBuf,
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Local)]
        mode: Mode,
        /// Output CSV path.
        #[arg(long)]
        output: PathBuf,
        /// Distance bucket width, meters.
        #[arg(long, default_value_t = DEFAULT_BUCKET_WIDTH)]
        bucket_width: f64,
        /// Max |z − z*| for a pixel to count as wall, meters.
        #[arg(long, default_value_t = DEFAULT_INLIER_GATE)]
        inlier_gate: f64,
    },
}

#[derive(Args)]
struct CalibrateArgs {
    /// Dataset manifest.
    manifest: PathBuf,
    /// Output calibration file.
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Binary)]
    format: Format,
    /// Noise bin centers as start:step:end, meters.
    #[arg(long, default_value = "0.4:0.1:5.0")]
    bins: String,
    /// Full width of a noise bin, meters.
    #[arg(long, default_value_t = 0.2)]
    bin_width: f64,
    /// Minimum residuals for a noise bin to be used.
    #[arg(long, default_value_t = 1000)]
    min_bin_samples: usize,
    /// Minimum pairs for a pixel to be fitted.
    #[arg(long, default_value_t = 10)]
    min_pairs: usize,
    /// Reject measured depths beyond this range, meters.
    #[arg(long, default_value_t = 8.0)]
    max_range: f64,
    /// Normalize pooled variances by the residual count instead of the
    /// degrees of freedom.
    #[arg(long)]
    pool_by_count: bool,
    /// Report path; defaults next to the output.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Accepted for interface uniformity; calibration is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Binary,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Local,
    Global,
}

fn parse_bins(spec: &str) -> Result<(f64, f64, f64), Error> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Error::InvalidConfig(format!("--bins {spec}: {e}")))?;
    match parts[..] {
        [start, step, end] => Ok((start, step, end)),
        _ => Err(Error::InvalidConfig(format!(
            "--bins expects start:step:end, got {spec}"
        ))),
    }
}

fn calibrate_options(args: CalibrateArgs) -> Result<CalibrateOptions, Error> {
    let (start, step, end) = parse_bins(&args.bins)?;
    let mut config = CalibrationConfig {
        binning: BinningConfig::uniform(start, step, end, 0.5 * args.bin_width, args.min_bin_samples)?,
        ..CalibrationConfig::default()
    };
    config.fit.min_pairs = args.min_pairs;
    config.accumulate.max_range = args.max_range;
    if args.pool_by_count {
        config.pooling = PoolingDivisor::SampleCount;
    }
    Ok(CalibrateOptions {
        manifest: args.manifest,
        output: args.output,
        format: match args.format {
            Format::Json => CalibrationFormat::Json,
            Format::Binary => CalibrationFormat::Binary,
        },
        config,
        report: args.report,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate {
            config,
            output,
            seed,
        } => {
            let manifest = cli_simulate(&SimulateOptions {
                config,
                output,
                seed,
            })?;
            println!("{}", manifest.display());
        }
        Command::Calibrate(args) => {
            let opts = calibrate_options(args)?;
            let summary = cli_calibrate(&opts)?;
            let (a, b, c) = (
                summary.report.noise_model[0],
                summary.report.noise_model[1],
                summary.report.noise_model[2],
            );
            println!(
                "{}: {} valid pixels, sigma(z) = {a:.6e} z^2 + {b:.6e} z + {c:.6e}",
                opts.output.display(),
                summary.report.valid_pixels
            );
        }
        Command::Apply {
            calibration,
            inputs,
            output,
        } => {
            let written = cli_apply(&ApplyOptions {
                calibration,
                inputs,
                output,
            })?;
            for p in written {
                println!("{}", p.display());
            }
        }
        Command::Evaluate {
            calibration,
            manifest,
            mode,
            output,
            bucket_width,
            inlier_gate,
        } => {
            let mode = match mode {
                Mode::Local => EvalMode::Local,
                Mode::Global => EvalMode::Global,
            };
            let mut opts = EvaluateOptions::new(calibration, manifest, mode, output);
            opts.bucket_width = bucket_width;
            opts.inlier_gate = inlier_gate;
            let rows = cli_evaluate(&opts)?;
            println!("{}: {} buckets", opts.output.display(), rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.kind());
            ExitCode::FAILURE
        }
    }
}
