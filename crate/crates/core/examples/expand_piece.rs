//! Expands one 12-bar fixture to 16 bars with the two copy baselines and
//! prints how the boundary metrics react.
//!
//! ```bash
//! cargo run -p score-expansion --example expand_piece
//! ```

use score_expansion::expansion::{expand_parts, CopyFutureInfiller, CopyPastInfiller, Infiller};
use score_expansion::fixtures::synthetic_piece;
use score_expansion::metrics::boundary_analysis;
use score_expansion::midi::quantize;
use score_expansion::tokenizer::encode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let piece = synthetic_piece(0);
    let tokens = encode(&quantize(&piece.score, 16));
    println!("{}: {} bars, boundary at bar {}", piece.name, tokens.bar_count(), piece.boundary_bar);

    let infillers: [&dyn Infiller; 2] = [&CopyPastInfiller, &CopyFutureInfiller];
    for infiller in infillers {
        let parts = expand_parts(&tokens, piece.boundary_bar, 4, infiller, 0)?;
        let a = boundary_analysis(&parts.past, &parts.new, &parts.future)?;
        println!(
            "{:<12} -> {} bars | GS1 {:.3} GS2 {:.3} dGS {:+.3} | RHS1 {:.3} RHS2 {:.3} dRHS {:+.3}",
            infiller.name(),
            parts.expanded.bar_count(),
            a.gs1,
            a.gs2,
            a.delta_gs,
            a.rhs1,
            a.rhs2,
            a.delta_rhs
        );
        assert_eq!(parts.expanded.slice_bars(0, piece.boundary_bar)?, parts.past);
    }
    Ok(())
}
