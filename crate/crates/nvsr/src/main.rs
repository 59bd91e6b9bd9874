use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use nvsr::bench::{parse_rates, parse_systems, run_grid, GridSpec, Source};
use nvsr::exchange::{ExchangePredictor, DEFAULT_TIMEOUT};
use nvsr::wav::{read_wav, write_wav, WavFormat};
use nvsr_core::config::SAMPLE_RATE;
use nvsr_core::degrade::{simulate_lr, DegradeSpec};
use nvsr_core::metrics::lsd_waveforms;
use nvsr_core::resample::resample_poly;
use nvsr_core::{Pipeline, PipelineConfig, PredictorChoice, VocoderConfig, Waveform};

#[derive(Parser)]
#[command(name = "nvsr", version, about = "Speech super-resolution to 44.1 kHz")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PredictorArg {
    Pad,
    External,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Band-limit a recording as if it had been captured at a lower rate.
    Simulate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Low sampling rate in Hz.
        #[arg(long)]
        target_rate: u32,
        /// Write the low-rate signal instead of its 44.1 kHz upsampled version.
        #[arg(long)]
        keep_lr: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        pcm16: bool,
    },
    /// Super-resolve a recording to 44.1 kHz.
    Sr {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "pad")]
        predictor: PredictorArg,
        /// Skip lower-frequencies replacement.
        #[arg(long)]
        no_postproc: bool,
        /// Cutoff in Hz instead of the input rate or detection.
        #[arg(long)]
        cutoff_hz: Option<f64>,
        /// Exchange directory for the external predictor (default: $NVSR_EXCHANGE_DIR).
        #[arg(long)]
        exchange_dir: Option<PathBuf>,
        /// Seconds to wait for the external predictor.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long, default_value_t = VocoderConfig::default().gl_iterations)]
        gl_iters: usize,
        #[arg(long)]
        pcm16: bool,
    },
    /// Evaluate systems over a grid of input rates.
    Bench {
        /// Newline-delimited WAV paths with optional split tags.
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        manifest: Option<PathBuf>,
        /// Only manifest entries with this split tag.
        #[arg(long)]
        split: Option<String>,
        /// Use N generated speech-like utterances instead of a manifest.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long, default_value_t = 3.0)]
        synthetic_secs: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input rates, kHz or Hz.
        #[arg(long, default_value = "2,4,8,12,16,24,32")]
        rates: String,
        #[arg(long, default_value = "unprocessed,pad,none")]
        systems: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0: all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        exchange_dir: Option<PathBuf>,
        /// Write a spectrogram PNG for every cell into this directory.
        #[arg(long)]
        png_dir: Option<PathBuf>,
        #[arg(long, default_value_t = VocoderConfig::default().gl_iterations)]
        gl_iters: usize,
    },
    /// Log-spectral distance between two recordings at 44.1 kHz.
    Lsd {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        est: PathBuf,
    },
}

fn to_pipeline_rate(w: Waveform) -> anyhow::Result<Waveform> {
    if w.sample_rate() == SAMPLE_RATE {
        Ok(w)
    } else {
        Ok(resample_poly(&w, SAMPLE_RATE)?)
    }
}

fn format_of(pcm16: bool) -> WavFormat {
    if pcm16 {
        WavFormat::Pcm16
    } else {
        WavFormat::Float32
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            input,
            target_rate,
            keep_lr,
            out,
            pcm16,
        } => {
            let clean = to_pipeline_rate(read_wav(&input)?)?;
            let lr = simulate_lr(&clean, &DegradeSpec::new(target_rate, SAMPLE_RATE))?;
            let w = if keep_lr { lr.low } else { lr.upsampled };
            write_wav(&out, &w, format_of(pcm16))?;
        }
        Command::Sr {
            input,
            out,
            predictor,
            no_postproc,
            cutoff_hz,
            exchange_dir,
            timeout,
            gl_iters,
            pcm16,
        } => {
            let config = PipelineConfig {
                predictor: match predictor {
                    PredictorArg::Pad => PredictorChoice::Pad,
                    PredictorArg::External => PredictorChoice::External,
                    PredictorArg::None => PredictorChoice::None,
                },
                postproc: !no_postproc,
                cutoff_override_hz: cutoff_hz,
                vocoder: VocoderConfig {
                    gl_iterations: gl_iters,
                    ..VocoderConfig::default()
                },
                ..PipelineConfig::default()
            };
            let pipeline = if let PredictorArg::External = predictor {
                let bridge = match exchange_dir {
                    Some(d) => ExchangePredictor::new(d),
                    None => ExchangePredictor::from_env()
                        .context("external predictor needs --exchange-dir or NVSR_EXCHANGE_DIR")?,
                };
                let wait = timeout.map_or(DEFAULT_TIMEOUT, Duration::from_secs_f64);
                Pipeline::with_predictor(config, Box::new(bridge.with_timeout(wait)))?
            } else {
                Pipeline::new(config)?
            };
            let x = read_wav(&input)?;
            let run = pipeline.run(&x)?;
            info!(
                "cutoff band {} ({:.0} Hz, {:?})",
                run.cutoff.band, run.cutoff.hz, run.cutoff.source
            );
            write_wav(&out, &run.output, format_of(pcm16))?;
        }
        Command::Bench {
            manifest,
            split,
            synthetic,
            synthetic_secs,
            seed,
            rates,
            systems,
            out,
            jobs,
            exchange_dir,
            png_dir,
            gl_iters,
        } => {
            let source = match (manifest, synthetic) {
                (Some(path), None) => Source::Manifest { path, split },
                (None, Some(count)) => Source::Synthetic {
                    count,
                    seconds: synthetic_secs,
                    seed,
                },
                _ => bail!("give exactly one of --manifest and --synthetic"),
            };
            let mut spec = GridSpec::new(source, parse_systems(&systems)?);
            spec.rates = parse_rates(&rates)?;
            spec.jobs = jobs;
            spec.exchange_dir = exchange_dir;
            spec.png_dir = png_dir;
            spec.vocoder.gl_iterations = gl_iters;
            let report = run_grid(&spec)?;
            report.write(&out)?;
            print!("{}", report.to_markdown());
            if !report.failures.is_empty() {
                for f in &report.failures {
                    eprintln!("failed: {} @ {} Hz [{}]: {}", f.id, f.input_rate, f.system, f.error);
                }
                return Ok(ExitCode::from(1));
            }
        }
        Command::Lsd { reference, est } => {
            let r = to_pipeline_rate(read_wav(&reference)?)?;
            let e = to_pipeline_rate(read_wav(&est)?)?;
            println!("{:.6}", lsd_waveforms(&r, &e)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
