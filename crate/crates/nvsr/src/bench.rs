//! Evaluation grid: simulate each utterance at every input rate, run each system, score
//! the output against the clean utterance with LSD.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use nvsr_core::config::SAMPLE_RATE;
use nvsr_core::degrade::{simulate_lr, DegradeSpec};
use nvsr_core::melbwe::{CutoffMask, MelPredictor};
use nvsr_core::metrics::lsd_with_plan;
use nvsr_core::resample::resample_poly;
use nvsr_core::{MelSpectrogram, Pipeline, PipelineConfig, PredictorChoice, StftPlan, VocoderConfig, Waveform};
use rayon::prelude::*;

use crate::corpus::{read_manifest, synthetic_corpus};
use crate::error::{NvsrError, Result};
use crate::exchange::ExchangePredictor;
use crate::wav::read_wav;

pub const DEFAULT_RATES: [u32; 7] = [2000, 4000, 8000, 12000, 16000, 24000, 32000];

/// The degraded input, upsampled back to the target rate.
pub const UNPROCESSED: &str = "unprocessed";
/// The clean utterance itself.
pub const TARGET: &str = "target";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Unprocessed,
    Target,
    /// Vocoder fed the clean utterance's mel.
    GroundTruthMel,
    Pad,
    NoPrediction,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SystemId {
    pub method: Method,
    pub postproc: bool,
}

impl SystemId {
    pub const fn new(method: Method) -> Self {
        Self {
            method,
            postproc: true,
        }
    }

    pub const fn without_postproc(method: Method) -> Self {
        Self {
            method,
            postproc: false,
        }
    }

    pub fn uses_vocoder(&self) -> bool {
        !matches!(self.method, Method::Unprocessed | Method::Target)
    }

    pub fn label(&self) -> String {
        let base = match self.method {
            Method::Unprocessed => UNPROCESSED,
            Method::Target => TARGET,
            Method::GroundTruthMel => "gt-mel",
            Method::Pad => "pad",
            Method::NoPrediction => "none",
            Method::External => "external",
        };
        if self.uses_vocoder() && !self.postproc {
            format!("{base}-nopost")
        } else {
            base.to_owned()
        }
    }
}

impl FromStr for SystemId {
    type Err = NvsrError;

    fn from_str(s: &str) -> Result<Self> {
        let (base, postproc) = match s.strip_suffix("-nopost") {
            Some(b) => (b, false),
            None => (s, true),
        };
        let method = match base {
            UNPROCESSED => Method::Unprocessed,
            TARGET => Method::Target,
            "gt-mel" => Method::GroundTruthMel,
            "pad" => Method::Pad,
            "none" => Method::NoPrediction,
            "external" => Method::External,
            _ => return Err(NvsrError::Config(format!("unknown system {s:?}"))),
        };
        let id = SystemId { method, postproc };
        if !postproc && !id.uses_vocoder() {
            return Err(NvsrError::Config(format!("{base} has no post-processing to disable")));
        }
        Ok(id)
    }
}

/// Comma-separated system labels.
pub fn parse_systems(list: &str) -> Result<Vec<SystemId>> {
    list.split(',').map(|s| s.trim().parse()).collect()
}

/// Comma-separated rates in kHz (`8`, `11.025`) or Hz (`8000`).
pub fn parse_rates(list: &str) -> Result<Vec<u32>> {
    list.split(',')
        .map(|s| {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| NvsrError::Config(format!("bad rate {s:?}")))?;
            let hz = if v < 1000.0 { v * 1000.0 } else { v };
            if !(hz >= 1.0 && hz.fract() == 0.0) {
                return Err(NvsrError::Config(format!("bad rate {s:?}")));
            }
            Ok(hz as u32)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub enum Source {
    Manifest { path: PathBuf, split: Option<String> },
    Synthetic { count: usize, seconds: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct GridSpec {
    pub rates: Vec<u32>,
    pub systems: Vec<SystemId>,
    pub source: Source,
    pub target_rate: u32,
    pub vocoder: VocoderConfig,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub exchange_dir: Option<PathBuf>,
    pub png_dir: Option<PathBuf>,
}

impl GridSpec {
    pub fn new(source: Source, systems: Vec<SystemId>) -> Self {
        Self {
            rates: DEFAULT_RATES.to_vec(),
            systems,
            source,
            target_rate: SAMPLE_RATE,
            vocoder: VocoderConfig::default(),
            jobs: 0,
            exchange_dir: None,
            png_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_rate != SAMPLE_RATE {
            return Err(NvsrError::Config(format!(
                "target rate must be {SAMPLE_RATE} Hz, got {}",
                self.target_rate
            )));
        }
        if self.rates.is_empty() || self.systems.is_empty() {
            return Err(NvsrError::Config("grid needs at least one rate and one system".into()));
        }
        if let Some(r) = self.rates.iter().find(|&&r| r >= self.target_rate) {
            return Err(NvsrError::Config(format!(
                "input rate {r} Hz is not below the target rate"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub id: String,
    pub input_rate: u32,
    pub system: String,
    pub lsd: f64,
    pub runtime_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailedRow {
    pub id: String,
    pub input_rate: u32,
    pub system: String,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct GridReport {
    /// Sorted by (system, rate, id).
    pub results: Vec<EvalResult>,
    pub failures: Vec<FailedRow>,
    pub rates: Vec<u32>,
    pub systems: Vec<String>,
}

/// Shares one predictor between the pipelines of a grid run.
struct Shared(Arc<dyn MelPredictor>);

impl MelPredictor for Shared {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn predict(&self, mel: &MelSpectrogram, mask: &CutoffMask) -> nvsr_core::Result<MelSpectrogram> {
        self.0.predict(mel, mask)
    }
}

struct Runner {
    system: SystemId,
    pipeline: Option<Pipeline>,
}

fn build_runners(spec: &GridSpec) -> Result<Vec<Runner>> {
    let mut external: Option<Arc<dyn MelPredictor>> = None;
    spec.systems
        .iter()
        .map(|&system| {
            let cfg = PipelineConfig {
                vocoder: spec.vocoder,
                postproc: system.postproc,
                ..PipelineConfig::default()
            };
            let pipeline = match system.method {
                Method::Unprocessed | Method::Target => None,
                Method::GroundTruthMel | Method::Pad => Some(Pipeline::new(cfg)?),
                Method::NoPrediction => Some(Pipeline::new(PipelineConfig {
                    predictor: PredictorChoice::None,
                    ..cfg
                })?),
                Method::External => {
                    let shared = match &external {
                        Some(p) => p.clone(),
                        None => {
                            let p = match &spec.exchange_dir {
                                Some(d) => ExchangePredictor::new(d.clone()),
                                None => ExchangePredictor::from_env().ok_or_else(|| {
                                    NvsrError::Config(
                                        "external system needs an exchange directory".into(),
                                    )
                                })?,
                            };
                            let p: Arc<dyn MelPredictor> = Arc::new(p);
                            external = Some(p.clone());
                            p
                        }
                    };
                    Some(Pipeline::with_predictor(
                        PipelineConfig {
                            predictor: PredictorChoice::External,
                            ..cfg
                        },
                        Box::new(Shared(shared)),
                    )?)
                }
            };
            Ok(Runner { system, pipeline })
        })
        .collect()
}

enum Utterance {
    Loaded(String, Waveform),
    Unreadable(String, String),
}

fn load_utterances(source: &Source) -> Result<Vec<Utterance>> {
    match source {
        Source::Synthetic {
            count,
            seconds,
            seed,
        } => Ok(synthetic_corpus(*count, *seconds, *seed)
            .into_iter()
            .map(|(id, w)| Utterance::Loaded(id, w))
            .collect()),
        Source::Manifest { path, split } => Ok(read_manifest(path, split.as_deref())?
            .into_iter()
            .map(|entry| {
                let loaded = read_wav(&entry.path).and_then(|w| {
                    if w.sample_rate() == SAMPLE_RATE {
                        Ok(w)
                    } else {
                        Ok(resample_poly(&w, SAMPLE_RATE)?)
                    }
                });
                match loaded {
                    Ok(w) => Utterance::Loaded(entry.id, w),
                    Err(e) => {
                        warn!("{}: {e}", entry.path.display());
                        Utterance::Unreadable(entry.id, e.to_string())
                    }
                }
            })
            .collect()),
    }
}

fn evaluate(
    runner: &Runner,
    plan: &StftPlan,
    clean: &Waveform,
    low: &Waveform,
    upsampled: &Waveform,
    rate: u32,
) -> Result<Waveform> {
    let out = match (runner.system.method, &runner.pipeline) {
        (Method::Unprocessed, _) => upsampled.clone(),
        (Method::Target, _) => clean.clone(),
        (Method::GroundTruthMel, Some(p)) => {
            p.render(&p.mel(clean)?, upsampled, rate as f64 / 2.0)?
        }
        (_, Some(p)) => p.nvsr(low)?,
        (_, None) => unreachable!("vocoder systems always carry a pipeline"),
    };
    debug_assert_eq!(out.sample_rate(), plan.framing(0).sample_rate);
    Ok(out)
}

/// Runs every (utterance, rate, system) cell. Per-cell failures become [`FailedRow`]s.
pub fn run_grid(spec: &GridSpec) -> Result<GridReport> {
    spec.validate()?;
    let runners = build_runners(spec)?;
    let utterances = load_utterances(&spec.source)?;
    let plan = StftPlan::new(nvsr_core::config::WINDOW_LEN, nvsr_core::config::HOP, SAMPLE_RATE)?;
    if let Some(dir) = &spec.png_dir {
        fs::create_dir_all(dir).map_err(|e| NvsrError::io(dir, e))?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| NvsrError::Config(e.to_string()))?;
    let cells: Vec<(&Utterance, u32)> = utterances
        .iter()
        .flat_map(|u| spec.rates.iter().map(move |&r| (u, r)))
        .collect();
    info!(
        "grid: {} utterances x {} rates x {} systems on {} workers",
        utterances.len(),
        spec.rates.len(),
        runners.len(),
        pool.current_num_threads()
    );

    type Row = std::result::Result<EvalResult, FailedRow>;
    let rows: Vec<Row> = pool.install(|| {
        cells
            .par_iter()
            .flat_map_iter(|&(utt, rate)| -> Vec<Row> {
                let fail = |id: &str, system: String, error: String| FailedRow {
                    id: id.to_owned(),
                    input_rate: rate,
                    system,
                    error,
                };
                let (id, clean) = match utt {
                    Utterance::Loaded(id, w) => (id, w),
                    Utterance::Unreadable(id, e) => {
                        return runners
                            .iter()
                            .map(|r| Err(fail(id, r.system.label(), e.clone())))
                            .collect()
                    }
                };
                let lr = match simulate_lr(clean, &DegradeSpec::new(rate, SAMPLE_RATE)) {
                    Ok(lr) => lr,
                    Err(e) => {
                        return runners
                            .iter()
                            .map(|r| Err(fail(id, r.system.label(), e.to_string())))
                            .collect()
                    }
                };
                runners
                    .iter()
                    .map(|runner| {
                        let label = runner.system.label();
                        let start = Instant::now();
                        let scored = evaluate(runner, &plan, clean, &lr.low, &lr.upsampled, rate)
                            .and_then(|out| {
                                if let Some(dir) = &spec.png_dir {
                                    let name = format!("{}_{}_{label}.png", id.replace('/', "_"), rate);
                                    crate::png::write_spectrogram(&dir.join(name), &plan, &out)?;
                                }
                                Ok(lsd_with_plan(&plan, clean, &out)?)
                            });
                        match scored {
                            Ok(lsd) if lsd.is_finite() => Ok(EvalResult {
                                id: id.clone(),
                                input_rate: rate,
                                system: label,
                                lsd,
                                runtime_ms: start.elapsed().as_secs_f64() * 1e3,
                            }),
                            Ok(lsd) => Err(fail(id, label, format!("non-finite LSD {lsd}"))),
                            Err(e) => Err(fail(id, label, e.to_string())),
                        }
                    })
                    .collect()
            })
            .collect()
    });

    let mut report = GridReport {
        rates: spec.rates.clone(),
        systems: runners.iter().map(|r| r.system.label()).collect(),
        ..GridReport::default()
    };
    for row in rows {
        match row {
            Ok(r) => report.results.push(r),
            Err(f) => report.failures.push(f),
        }
    }
    let order = |s: &str| report.systems.iter().position(|x| x == s);
    report.results.sort_by(|a, b| {
        (order(&a.system), a.input_rate, &a.id).cmp(&(order(&b.system), b.input_rate, &b.id))
    });
    report.failures.sort_by(|a, b| {
        (order(&a.system), a.input_rate, &a.id).cmp(&(order(&b.system), b.input_rate, &b.id))
    });
    Ok(report)
}

/// Mean LSD per (system, rate).
pub type Summary = BTreeMap<(String, u32), f64>;

impl GridReport {
    pub fn summary(&self) -> Summary {
        let mut acc: BTreeMap<(String, u32), (f64, usize)> = BTreeMap::new();
        for r in &self.results {
            let e = acc.entry((r.system.clone(), r.input_rate)).or_default();
            e.0 += r.lsd;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }

    pub fn mean(&self, system: &str, rate: u32) -> Option<f64> {
        self.summary().get(&(system.to_owned(), rate)).copied()
    }

    /// Mean of the per-rate means for `system`, over rates that produced results.
    pub fn average(&self, system: &str) -> Option<f64> {
        let summary = self.summary();
        let means: Vec<f64> = self
            .rates
            .iter()
            .filter_map(|&r| summary.get(&(system.to_owned(), r)).copied())
            .collect();
        (!means.is_empty()).then(|| means.iter().sum::<f64>() / means.len() as f64)
    }

    /// Per-cell CSV. Runtimes are left out so identical runs give identical bytes.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| NvsrError::Config(format!("csv: {e}"));
        w.write_record(["utterance", "input_rate", "system", "lsd", "status"])
            .map_err(csv_err)?;
        for r in &self.results {
            w.write_record([
                r.id.as_str(),
                &r.input_rate.to_string(),
                &r.system,
                &r.lsd.to_string(),
                "ok",
            ])
            .map_err(csv_err)?;
        }
        for f in &self.failures {
            w.write_record([
                f.id.as_str(),
                &f.input_rate.to_string(),
                &f.system,
                "",
                &format!("error: {}", f.error),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| NvsrError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn timings_csv(&self) -> String {
        let mut out = String::from("utterance,input_rate,system,runtime_ms\n");
        for r in &self.results {
            let _ = writeln!(out, "{},{},{},{:.3}", r.id, r.input_rate, r.system, r.runtime_ms);
        }
        out
    }

    /// Systems as rows, input rates in kHz as columns, plus an AVG column.
    pub fn to_markdown(&self) -> String {
        let summary = self.summary();
        let mut out = String::from("| System |");
        for r in &self.rates {
            let _ = write!(out, " {} |", format_khz(*r));
        }
        out.push_str(" AVG |\n|---|");
        for _ in 0..=self.rates.len() {
            out.push_str("---:|");
        }
        out.push('\n');
        for s in &self.systems {
            let _ = write!(out, "| {s} |");
            for &r in &self.rates {
                match summary.get(&(s.clone(), r)) {
                    Some(v) => {
                        let _ = write!(out, " {v:.2} |");
                    }
                    None => out.push_str(" - |"),
                }
            }
            match self.average(s) {
                Some(v) => {
                    let _ = writeln!(out, " {v:.2} |");
                }
                None => out.push_str(" - |\n"),
            }
        }
        if !self.failures.is_empty() {
            let _ = writeln!(out, "\n{} cell(s) failed.", self.failures.len());
        }
        out
    }

    /// Writes `<out>`, `<out stem>.timings.csv` and `<out stem>.md`.
    pub fn write(&self, out: &Path) -> Result<()> {
        fs::write(out, self.to_csv()?).map_err(|e| NvsrError::io(out, e))?;
        let timings = out.with_extension("timings.csv");
        fs::write(&timings, self.timings_csv()).map_err(|e| NvsrError::io(&timings, e))?;
        let md = out.with_extension("md");
        fs::write(&md, self.to_markdown()).map_err(|e| NvsrError::io(&md, e))
    }
}

fn format_khz(rate: u32) -> String {
    if rate % 1000 == 0 {
        format!("{}", rate / 1000)
    } else {
        format!("{}", rate as f64 / 1000.0)
    }
}
