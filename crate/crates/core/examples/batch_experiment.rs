//! Runs the full 20-piece experiment (12 bars expanded to 16) on the bundled
//! corpus with every baseline infiller and prints the summaries.
//!
//! ```bash
//! cargo run -p score-expansion --example batch_experiment [output_dir]
//! ```

use std::path::PathBuf;

use score_expansion::expansion::train_markov;
use score_expansion::harness::{emit_results, run_experiment, ExperimentConfig, InfillerChoice};
use score_expansion::midi::{parse_midi, quantize};
use score_expansion::tokenizer::encode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("score-expansion-batch"));

    // a Markov model trained on the same corpus, for comparison
    let mut sequences = Vec::new();
    for entry in std::fs::read_dir(&corpus)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "mid") {
            sequences.push(encode(&quantize(&parse_midi(&std::fs::read(&path)?)?, 16)));
        }
    }
    let model_path = out.join("markov.json");
    std::fs::create_dir_all(&out)?;
    train_markov(&sequences, 3)?.save(&model_path)?;

    let choices = [
        InfillerChoice::CopyPast,
        InfillerChoice::CopyFuture,
        InfillerChoice::Random,
        InfillerChoice::Markov { model: model_path, order: Some(3) },
    ];
    println!("{:<14} {:>6} {:>10} {:>8} {:>10} {:>8}", "infiller", "pieces", "mean dGS", "dGS>0", "mean dRHS", "dRHS>0");
    for choice in choices {
        let label = choice.to_string().split('(').next().unwrap_or_default().to_string();
        let config = ExperimentConfig {
            corpus_dir: corpus.clone(),
            annotations: corpus.join("annotations.json"),
            output_dir: out.join(&label),
            gap_bars: 4,
            infiller: choice,
            seed: 2021,
            positions_per_bar: 16,
        };
        let outcomes = run_experiment(&config)?;
        let s = emit_results(&outcomes, &config.output_dir)?;
        println!(
            "{:<14} {:>6} {:>+10.4} {:>8} {:>+10.4} {:>8}",
            label, s.count, s.delta_gs.mean, s.delta_gs.positive, s.delta_rhs.mean, s.delta_rhs.positive
        );
    }
    println!("\nresults under {}", out.display());
    Ok(())
}
