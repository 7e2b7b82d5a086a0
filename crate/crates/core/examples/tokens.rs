//! Encodes a piece as event tokens, slices it, and decodes it again.
//!
//! ```bash
//! cargo run -p score-expansion --example tokens
//! ```

use score_expansion::midi::{parse_midi, quantize};
use score_expansion::tokenizer::{decode, encode, TokenSequence};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus/piece_01.mid");
    let grid = quantize(&parse_midi(&std::fs::read(path)?)?, 16);
    let tokens = encode(&grid);
    println!("{} tokens, {} bars", tokens.len(), tokens.bar_count());

    let first_bar = tokens.slice_bars(0, 1)?;
    println!("\nfirst bar in text form:\n{}", first_bar.to_text());

    // the text form parses back to the same tokens
    let reparsed = TokenSequence::from_text(16, &tokens.to_text())?;
    assert_eq!(reparsed, tokens);

    // slices over a partition join back to the original
    let head = tokens.slice_bars(0, 6)?;
    let tail = tokens.slice_bars(6, tokens.bar_count())?;
    assert_eq!(TokenSequence::concat([&head, &tail])?, tokens);

    let back = decode(&tokens);
    let same_grid = back
        .bars
        .iter()
        .zip(&grid.bars)
        .all(|(a, b)| a.iter().map(|n| (n.position, n.pitch, n.duration)).eq(b.iter().map(|n| (n.position, n.pitch, n.duration))));
    println!("decode restores positions, pitches and durations: {same_grid}");

    match TokenSequence::from_text(16, "BAR\nPITCH 60\n") {
        Err(e) => println!("malformed stream rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
