//! Plugging a custom infiller into the expansion pipeline.
//!
//! The infiller below writes one held chord per gap bar, built from the
//! pitch classes of the future context's first bar.
//!
//! ```bash
//! cargo run -p score-expansion --example custom_infiller
//! ```

use score_expansion::expansion::{expand, ExpansionRequest, InfillError, Infiller};
use score_expansion::fixtures::synthetic_piece;
use score_expansion::midi::{quantize, QuantizedNote, QuantizedScore};
use score_expansion::tokenizer::{decode, encode, TokenSequence};

struct HeldChord;

impl Infiller for HeldChord {
    fn name(&self) -> &str {
        "held-chord"
    }

    fn generate(&self, request: &ExpansionRequest, _seed: u64) -> Result<TokenSequence, InfillError> {
        let q = request.positions_per_bar();
        let first = decode(request.future()).bars.into_iter().next().unwrap_or_default();
        let mut chord: Vec<u8> = first.iter().map(|n| 60 + n.pitch % 12).collect();
        chord.sort_unstable();
        chord.dedup();
        let bar: Vec<QuantizedNote> = chord.iter().map(|&p| QuantizedNote::new(0, p, q, 72)).collect();
        Ok(encode(&QuantizedScore::new(q, vec![bar; request.gap_bars()])))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let piece = synthetic_piece(7);
    let tokens = encode(&quantize(&piece.score, 16));
    let expanded = expand(&tokens, piece.boundary_bar, 2, &HeldChord, 0)?;
    println!(
        "{}: {} -> {} bars with {}",
        piece.name,
        tokens.bar_count(),
        expanded.bar_count(),
        HeldChord.name()
    );
    let gap = expanded.slice_bars(piece.boundary_bar, piece.boundary_bar + 2)?;
    print!("{}", gap.to_text());
    Ok(())
}
