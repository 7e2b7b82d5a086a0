//! Trains a token Markov chain on the fixture corpus, fills a gap with it,
//! and saves and reloads the model.
//!
//! ```bash
//! cargo run -p score-expansion --example markov_infill [order] [seed]
//! ```

use score_expansion::expansion::{expand_parts, train_markov, MarkovInfiller, MarkovModel};
use score_expansion::fixtures::synthetic_corpus;
use score_expansion::metrics::boundary_analysis;
use score_expansion::midi::quantize;
use score_expansion::tokenizer::encode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let order: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(42);

    let corpus: Vec<_> = synthetic_corpus(20)
        .iter()
        .map(|p| encode(&quantize(&p.score, 16)))
        .collect();
    let model = train_markov(&corpus[1..], order)?;
    println!(
        "order-{order} model: {} contexts of full length",
        model.contexts(order).count()
    );

    let path = std::env::temp_dir().join("score-expansion-example-model.json");
    model.save(&path)?;
    let reloaded = MarkovModel::load(&path)?;
    assert_eq!(reloaded, model);
    println!("saved and reloaded {}", path.display());

    let infiller = MarkovInfiller::new(reloaded);
    let parts = expand_parts(&corpus[0], 8, 4, &infiller, seed)?;
    println!("\ngenerated gap ({} bars):", parts.new.bar_count());
    for (i, bar) in parts.new.bars().iter().enumerate() {
        let line: Vec<String> = bar.tokens().iter().map(|t| t.to_string()).collect();
        println!("  {i}: {}", line.join(" | "));
    }
    let a = boundary_analysis(&parts.past, &parts.new, &parts.future)?;
    println!("\ndGS {:+.4}  dRHS {:+.4}", a.delta_gs, a.delta_rhs);
    Ok(())
}
