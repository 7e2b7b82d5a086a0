//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 batch finished with
//! some failed pieces.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;

use crate::expansion::{expand_parts, train_markov};
use crate::harness::{emit_results, run_experiment, ExperimentConfig, HarnessError, InfillerChoice};
use crate::metrics::boundary_analysis;
use crate::midi::{parse_midi, quantize, write_midi, DEFAULT_POSITIONS_PER_BAR};
use crate::tokenizer::{decode, encode, TokenSequence};

#[derive(Debug, Parser)]
#[command(name = "score-expansion", version, about = "Expand MIDI pieces at phrase boundaries and score the result")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Insert new bars into one MIDI file at a boundary bar.
    Expand {
        file: PathBuf,
        #[arg(long)]
        boundary: usize,
        #[arg(long, default_value_t = 4)]
        gap: usize,
        /// copy-past, copy-future, random or markov
        #[arg(long, default_value = "copy-future")]
        infiller: String,
        /// Model file for the markov infiller.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POSITIONS_PER_BAR)]
        positions_per_bar: u16,
    },
    /// Score a new segment against its past and future contexts.
    Evaluate {
        past: PathBuf,
        new: PathBuf,
        future: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POSITIONS_PER_BAR)]
        positions_per_bar: u16,
    },
    /// Run a batch experiment described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        gap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        infiller: Option<String>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        positions_per_bar: Option<u16>,
    },
    /// Train a Markov infiller on every MIDI file in a directory.
    TrainMarkov {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_POSITIONS_PER_BAR)]
        positions_per_bar: u16,
    },
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> Failure {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn read_tokens(path: &Path, q: u16) -> Result<(TokenSequence, u16), Failure> {
    let bytes = std::fs::read(path).map_err(data(path.display()))?;
    let score = parse_midi(&bytes).map_err(data(path.display()))?;
    Ok((encode(&quantize(&score, q)), score.ticks_per_quarter()))
}

fn check_grid(q: u16) -> Result<(), Failure> {
    if q == 0 {
        return Err(Failure::Usage("--positions-per-bar must be at least 1".into()));
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn execute(command: Command) -> Result<ExitCode, Failure> {
    match command {
        Command::Expand {
            file,
            boundary,
            gap,
            infiller,
            model,
            seed,
            out,
            positions_per_bar,
        } => {
            check_grid(positions_per_bar)?;
            let infiller = InfillerChoice::from_name(&infiller, model, None)?.build()?;
            let (tokens, tpq) = read_tokens(&file, positions_per_bar)?;
            let parts = expand_parts(&tokens, boundary, gap, infiller.as_ref(), seed)
                .map_err(data(file.display()))?;
            let analysis = boundary_analysis(&parts.past, &parts.new, &parts.future)
                .map_err(data("metrics"))?;
            let bytes = write_midi(&decode(&parts.expanded).to_score(tpq));
            std::fs::write(&out, bytes).map_err(data(out.display()))?;
            eprintln!(
                "{}: {} bars -> {} bars, written to {}",
                file.display(),
                tokens.bar_count(),
                parts.expanded.bar_count(),
                out.display()
            );
            print_json(&analysis);
        }
        Command::Evaluate {
            past,
            new,
            future,
            positions_per_bar,
        } => {
            check_grid(positions_per_bar)?;
            let (p, _) = read_tokens(&past, positions_per_bar)?;
            let (n, _) = read_tokens(&new, positions_per_bar)?;
            let (f, _) = read_tokens(&future, positions_per_bar)?;
            print_json(&boundary_analysis(&p, &n, &f).map_err(data("metrics"))?);
        }
        Command::Run {
            config,
            gap,
            seed,
            infiller,
            model,
            output_dir,
            positions_per_bar,
        } => {
            let mut cfg = ExperimentConfig::load(&config).map_err(|e| Failure::Usage(e.to_string()))?;
            if let Some(g) = gap {
                cfg.gap_bars = g;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(q) = positions_per_bar {
                cfg.positions_per_bar = q;
            }
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            if infiller.is_some() || model.is_some() {
                let (current_model, current_order) = match &cfg.infiller {
                    InfillerChoice::Markov { model, order } => (Some(model.clone()), *order),
                    _ => (None, None),
                };
                let name = infiller.unwrap_or_else(|| "markov".into());
                cfg.infiller = InfillerChoice::from_name(&name, model.or(current_model), current_order)?;
            }
            let outcomes = run_experiment(&cfg)?;
            let summary = emit_results(&outcomes, &cfg.output_dir)?;
            print_json(&summary);
            if summary.count == 0 {
                return Err(Failure::Data("every piece failed".into()));
            }
            if summary.failed > 0 {
                return Ok(ExitCode::from(3));
            }
        }
        Command::TrainMarkov {
            corpus,
            order,
            out,
            positions_per_bar,
        } => {
            check_grid(positions_per_bar)?;
            if order == 0 {
                return Err(Failure::Usage("--order must be at least 1".into()));
            }
            let mut paths: Vec<PathBuf> = std::fs::read_dir(&corpus)
                .map_err(data(corpus.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
                })
                .collect();
            paths.sort();
            let mut sequences = Vec::with_capacity(paths.len());
            for path in &paths {
                match read_tokens(path, positions_per_bar) {
                    Ok((ts, _)) => sequences.push(ts),
                    Err(Failure::Data(msg) | Failure::Usage(msg)) => warn!("skipping {msg}"),
                }
            }
            let model = train_markov(&sequences, order).map_err(data(corpus.display()))?;
            model.save(&out).map_err(data(out.display()))?;
            eprintln!(
                "trained order-{order} model on {} of {} files, written to {}",
                sequences.len(),
                paths.len(),
                out.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `std::env::args` and runs the chosen subcommand.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
