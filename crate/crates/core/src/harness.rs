//! Batch expansion experiments over a MIDI corpus.
//!
//! A run reads every annotated piece, expands it at its boundary bar with
//! the configured infiller, scores the result with [`boundary_analysis`] and
//! writes:
//!
//! * `<stem>_expanded.mid` per piece,
//! * `results.csv` with columns `piece_id, boundary_bar, bars_in, bars_out,
//!   gs1, gs2, delta_gs, rhs1, rhs2, delta_rhs` (successful pieces only),
//! * `results.json` with one row per annotated piece; failed pieces carry an
//!   `error` message and null metrics,
//! * `summary.json` with counts and the mean, population standard deviation
//!   and number of positive values of `delta_gs` and `delta_rhs`.
//!
//! Outputs depend only on the configuration. Each piece gets its own seed,
//! `seed ^ fnv1a64(piece_id)`, so adding or removing pieces does not change
//! the others.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expansion::{
    expand_parts, CopyFutureInfiller, CopyPastInfiller, Infiller, MarkovError, MarkovInfiller,
    MarkovModel, RandomInfiller,
};
use crate::metrics::boundary_analysis;
use crate::midi::{parse_midi, quantize, write_midi, DEFAULT_POSITIONS_PER_BAR};
use crate::tokenizer::{decode, encode};

pub const DEFAULT_GAP_BARS: usize = 4;
pub const CSV_COLUMNS: [&str; 10] = [
    "piece_id",
    "boundary_bar",
    "bars_in",
    "bars_out",
    "gs1",
    "gs2",
    "delta_gs",
    "rhs1",
    "rhs2",
    "delta_rhs",
];

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("annotation file is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("annotation schema error at {key}: {reason}")]
    Schema { key: String, reason: String },
    #[error("annotation list is empty")]
    EmptyAnnotations,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("markov model: {0}")]
    Markov(#[from] MarkovError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("no results to write")]
    NoResults,
    #[error("serializing results: {0}")]
    Serialize(String),
}

impl HarnessError {
    /// True for problems with how the run was asked for rather than with the data.
    pub fn is_usage(&self) -> bool {
        matches!(self, HarnessError::Config(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Which infiller a run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfillerChoice {
    CopyPast,
    CopyFuture,
    Random,
    Markov { model: PathBuf, order: Option<usize> },
}

impl InfillerChoice {
    /// Parses `copy-past`, `copy-future`, `random` or `markov`; the latter needs
    /// a model path.
    pub fn from_name(name: &str, model: Option<PathBuf>, order: Option<usize>) -> Result<Self, HarnessError> {
        match name {
            "copy-past" => Ok(InfillerChoice::CopyPast),
            "copy-future" => Ok(InfillerChoice::CopyFuture),
            "random" => Ok(InfillerChoice::Random),
            "markov" => model
                .map(|model| InfillerChoice::Markov { model, order })
                .ok_or_else(|| HarnessError::Config("the markov infiller needs a model path".into())),
            other => Err(HarnessError::Config(format!(
                "unknown infiller {other:?} (expected copy-past, copy-future, random or markov)"
            ))),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Infiller>, HarnessError> {
        Ok(match self {
            InfillerChoice::CopyPast => Box::new(CopyPastInfiller),
            InfillerChoice::CopyFuture => Box::new(CopyFutureInfiller),
            InfillerChoice::Random => Box::new(RandomInfiller),
            InfillerChoice::Markov { model, order } => {
                let model = MarkovModel::load(model)?;
                if let Some(k) = order {
                    if *k != model.order() {
                        return Err(HarnessError::Config(format!(
                            "model has order {}, configuration asks for {k}",
                            model.order()
                        )));
                    }
                }
                Box::new(MarkovInfiller::new(model))
            }
        })
    }
}

impl fmt::Display for InfillerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfillerChoice::CopyPast => f.write_str("copy-past"),
            InfillerChoice::CopyFuture => f.write_str("copy-future"),
            InfillerChoice::Random => f.write_str("random"),
            InfillerChoice::Markov { model, .. } => write!(f, "markov({})", model.display()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    corpus_dir: PathBuf,
    annotations: PathBuf,
    output_dir: PathBuf,
    #[serde(default = "default_gap")]
    gap_bars: usize,
    #[serde(default = "default_infiller")]
    infiller: String,
    markov_model: Option<PathBuf>,
    markov_order: Option<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_q")]
    positions_per_bar: u16,
}

fn default_gap() -> usize {
    DEFAULT_GAP_BARS
}
fn default_infiller() -> String {
    "copy-future".into()
}
fn default_q() -> u16 {
    DEFAULT_POSITIONS_PER_BAR
}

/// Everything a batch run needs.
///
/// Config files are TOML:
///
/// ```toml
/// corpus_dir = "corpus"
/// annotations = "corpus/annotations.json"
/// output_dir = "out"
/// gap_bars = 4                # default 4
/// infiller = "markov"         # copy-past | copy-future (default) | random | markov
/// markov_model = "model.json" # markov only
/// markov_order = 2            # optional check against the model
/// seed = 7                    # default 0
/// positions_per_bar = 16      # default 16
/// ```
///
/// Relative paths are resolved against the config file's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub corpus_dir: PathBuf,
    pub annotations: PathBuf,
    pub output_dir: PathBuf,
    pub gap_bars: usize,
    pub infiller: InfillerChoice,
    pub seed: u64,
    pub positions_per_bar: u16,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, HarnessError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        let infiller = InfillerChoice::from_name(&file.infiller, file.markov_model.map(resolve), file.markov_order)?;
        Ok(ExperimentConfig {
            corpus_dir: resolve(file.corpus_dir),
            annotations: resolve(file.annotations),
            output_dir: resolve(file.output_dir),
            gap_bars: file.gap_bars,
            infiller,
            seed: file.seed,
            positions_per_bar: file.positions_per_bar,
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        ExperimentConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.gap_bars == 0 {
            return Err(HarnessError::Config("gap_bars must be at least 1".into()));
        }
        if self.positions_per_bar == 0 {
            return Err(HarnessError::Config("positions_per_bar must be at least 1".into()));
        }
        if !self.corpus_dir.is_dir() {
            return Err(HarnessError::Config(format!(
                "corpus directory {} does not exist",
                self.corpus_dir.display()
            )));
        }
        if !self.annotations.is_file() {
            return Err(HarnessError::Config(format!(
                "annotation file {} does not exist",
                self.annotations.display()
            )));
        }
        if let InfillerChoice::Markov { model, .. } = &self.infiller {
            if !model.is_file() {
                return Err(HarnessError::Config(format!(
                    "markov model {} does not exist",
                    model.display()
                )));
            }
        }
        Ok(())
    }
}

/// Parses an annotation list: `[{"file": "a.mid", "boundary_bar": 8}, ...]`.
pub fn parse_annotations(text: &str) -> Result<BTreeMap<String, usize>, AnnotationError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let schema = |key: String, reason: &str| AnnotationError::Schema {
        key,
        reason: reason.to_string(),
    };
    let entries = value
        .as_array()
        .ok_or_else(|| schema("$".into(), "expected a list of annotations"))?;
    if entries.is_empty() {
        return Err(AnnotationError::EmptyAnnotations);
    }
    let mut out = BTreeMap::new();
    for (i, entry) in entries.iter().enumerate() {
        let obj = entry
            .as_object()
            .ok_or_else(|| schema(format!("[{i}]"), "expected an object"))?;
        if let Some(extra) = obj.keys().find(|k| *k != "file" && *k != "boundary_bar") {
            return Err(schema(format!("[{i}].{extra}"), "unknown key"));
        }
        let file = obj
            .get("file")
            .and_then(|v| v.as_str())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| schema(format!("[{i}].file"), "expected a non-empty string"))?;
        let boundary = obj
            .get("boundary_bar")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| schema(format!("[{i}].boundary_bar"), "expected a non-negative integer"))?;
        if boundary < 1 {
            return Err(schema(format!("[{i}].boundary_bar"), "must be at least 1"));
        }
        if out.insert(file.to_string(), boundary as usize).is_some() {
            return Err(schema(format!("[{i}].file"), "duplicate file"));
        }
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<BTreeMap<String, usize>, AnnotationError> {
    let text = std::fs::read_to_string(path).map_err(|source| AnnotationError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_annotations(&text)
}

/// Metrics for one expanded piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceResult {
    pub piece_id: String,
    pub boundary_bar: usize,
    pub bars_in: usize,
    pub bars_out: usize,
    pub gs1: f64,
    pub gs2: f64,
    pub delta_gs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub delta_rhs: f64,
}

/// What happened to one annotated piece.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceOutcome {
    pub piece_id: String,
    pub result: Result<PieceResult, String>,
}

/// Result of one piece plus the expanded file, before anything is written.
pub struct PieceRun {
    pub result: PieceResult,
    pub midi: Vec<u8>,
}

pub fn piece_seed(seed: u64, piece_id: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(piece_id.as_bytes());
    seed ^ h.finish()
}

/// Expands and scores one piece from its MIDI bytes.
pub fn run_piece(
    piece_id: &str,
    bytes: &[u8],
    boundary_bar: usize,
    gap_bars: usize,
    positions_per_bar: u16,
    infiller: &dyn Infiller,
    seed: u64,
) -> Result<PieceRun, String> {
    let score = parse_midi(bytes).map_err(|e| e.to_string())?;
    let tokens = encode(&quantize(&score, positions_per_bar));
    let parts = expand_parts(&tokens, boundary_bar, gap_bars, infiller, piece_seed(seed, piece_id))
        .map_err(|e| e.to_string())?;
    let analysis = boundary_analysis(&parts.past, &parts.new, &parts.future).map_err(|e| e.to_string())?;
    let midi = write_midi(&decode(&parts.expanded).to_score(score.ticks_per_quarter()));
    Ok(PieceRun {
        result: PieceResult {
            piece_id: piece_id.to_string(),
            boundary_bar,
            bars_in: tokens.bar_count(),
            bars_out: parts.expanded.bar_count(),
            gs1: analysis.gs1,
            gs2: analysis.gs2,
            delta_gs: analysis.delta_gs,
            rhs1: analysis.rhs1,
            rhs2: analysis.rhs2,
            delta_rhs: analysis.delta_rhs,
        },
        midi,
    })
}

/// File name of the expanded MIDI for `piece_id`.
pub fn expanded_file_name(piece_id: &str) -> String {
    let stem = Path::new(piece_id)
        .file_stem()
        .map_or_else(|| piece_id.to_string(), |s| s.to_string_lossy().into_owned());
    format!("{stem}_expanded.mid")
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

/// Runs the whole batch and writes the expanded MIDI files.
///
/// Per-piece failures become error outcomes and do not stop the run. Corpus
/// files without an annotation are skipped with a warning. Outcomes are
/// sorted by piece id.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<PieceOutcome>, HarnessError> {
    config.validate()?;
    let annotations = load_annotations(&config.annotations)?;
    let infiller = config.infiller.build()?;

    let dir = &config.corpus_dir;
    let mut present = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_file() && is_midi(&path) {
            if let Some(name) = path.file_name().and_then(|n| n.to_str()) {
                present.push(name.to_string());
            }
        }
    }
    present.sort();
    for name in &present {
        if !annotations.contains_key(name) {
            warn!("{name}: no boundary annotation, skipped");
        }
    }

    let runs: Vec<(String, Result<PieceRun, String>)> = annotations
        .par_iter()
        .map(|(piece_id, &boundary)| {
            let path = dir.join(piece_id);
            let run = std::fs::read(&path)
                .map_err(|e| format!("{}: {e}", path.display()))
                .and_then(|bytes| {
                    run_piece(
                        piece_id,
                        &bytes,
                        boundary,
                        config.gap_bars,
                        config.positions_per_bar,
                        infiller.as_ref(),
                        config.seed,
                    )
                });
            (piece_id.clone(), run)
        })
        .collect();

    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut outcomes = Vec::with_capacity(runs.len());
    for (piece_id, run) in runs {
        let result = match run {
            Ok(run) => {
                let path = out.join(expanded_file_name(&piece_id));
                std::fs::write(&path, &run.midi).map_err(io_err(&path))?;
                Ok(run.result)
            }
            Err(e) => {
                warn!("{piece_id}: {e}");
                Err(e)
            }
        };
        outcomes.push(PieceOutcome { piece_id, result });
    }
    Ok(outcomes)
}

#[derive(Serialize)]
struct JsonRow<'a> {
    piece_id: &'a str,
    boundary_bar: Option<usize>,
    bars_in: Option<usize>,
    bars_out: Option<usize>,
    gs1: Option<f64>,
    gs2: Option<f64>,
    delta_gs: Option<f64>,
    rhs1: Option<f64>,
    rhs2: Option<f64>,
    delta_rhs: Option<f64>,
    error: Option<&'a str>,
}

impl<'a> From<&'a PieceOutcome> for JsonRow<'a> {
    fn from(o: &'a PieceOutcome) -> Self {
        let r = o.result.as_ref().ok();
        JsonRow {
            piece_id: &o.piece_id,
            boundary_bar: r.map(|r| r.boundary_bar),
            bars_in: r.map(|r| r.bars_in),
            bars_out: r.map(|r| r.bars_out),
            gs1: r.map(|r| r.gs1),
            gs2: r.map(|r| r.gs2),
            delta_gs: r.map(|r| r.delta_gs),
            rhs1: r.map(|r| r.rhs1),
            rhs2: r.map(|r| r.rhs2),
            delta_rhs: r.map(|r| r.delta_rhs),
            error: o.result.as_ref().err().map(String::as_str),
        }
    }
}

/// Mean, population standard deviation and count of positive values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    pub mean: f64,
    pub stddev: f64,
    pub positive: usize,
}

impl DeltaStats {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return DeltaStats {
                mean: 0.0,
                stddev: 0.0,
                positive: 0,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        DeltaStats {
            mean,
            stddev: var.sqrt(),
            positive: values.iter().filter(|v| **v > 0.0).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub failed: usize,
    pub delta_gs: DeltaStats,
    pub delta_rhs: DeltaStats,
}

pub fn summarize(outcomes: &[PieceOutcome]) -> Summary {
    let ok: Vec<&PieceResult> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    let gs: Vec<f64> = ok.iter().map(|r| r.delta_gs).collect();
    let rhs: Vec<f64> = ok.iter().map(|r| r.delta_rhs).collect();
    Summary {
        count: ok.len(),
        failed: outcomes.len() - ok.len(),
        delta_gs: DeltaStats::of(&gs),
        delta_rhs: DeltaStats::of(&rhs),
    }
}

/// Writes `results.csv`, `results.json` and `summary.json` into `output_dir`.
pub fn emit_results(outcomes: &[PieceOutcome], output_dir: &Path) -> Result<Summary, HarnessError> {
    if outcomes.is_empty() {
        return Err(HarnessError::NoResults);
    }
    std::fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;

    let csv_path = output_dir.join("results.csv");
    let ser = |e: csv::Error| HarnessError::Serialize(format!("{}: {e}", csv_path.display()));
    let mut w = csv::Writer::from_path(&csv_path).map_err(ser)?;
    w.write_record(CSV_COLUMNS).map_err(ser)?;
    for r in outcomes.iter().filter_map(|o| o.result.as_ref().ok()) {
        w.write_record([
            r.piece_id.clone(),
            r.boundary_bar.to_string(),
            r.bars_in.to_string(),
            r.bars_out.to_string(),
            r.gs1.to_string(),
            r.gs2.to_string(),
            r.delta_gs.to_string(),
            r.rhs1.to_string(),
            r.rhs2.to_string(),
            r.delta_rhs.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(io_err(&csv_path))?;

    let rows: Vec<JsonRow> = outcomes.iter().map(JsonRow::from).collect();
    write_json(&output_dir.join("results.json"), &rows)?;
    let summary = summarize(outcomes);
    write_json(&output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| HarnessError::Serialize(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(io_err(path))
}
