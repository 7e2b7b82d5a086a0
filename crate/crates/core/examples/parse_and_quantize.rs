//! Reads a MIDI file and prints it as a bar/position grid.
//!
//! ```bash
//! cargo run -p score-expansion --example parse_and_quantize [file.mid] [positions_per_bar]
//! ```

use std::path::PathBuf;

use score_expansion::midi::{parse_midi, quantize};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus/piece_00.mid")
    });
    let q: u16 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(16);

    let score = parse_midi(&std::fs::read(&path)?)?;
    println!(
        "{}: {} notes, {} ticks per quarter",
        path.display(),
        score.notes().len(),
        score.ticks_per_quarter()
    );
    for n in score.notes().iter().take(6) {
        println!("  pitch {:>3}  onset {:>6}  duration {:>5}  velocity {:>3}", n.pitch, n.onset, n.duration, n.velocity);
    }

    let grid = quantize(&score, q);
    println!("\n{} bars on a {q}-step grid (x = onset):", grid.bar_count());
    for (i, bar) in grid.bars.iter().enumerate() {
        let row: String = (0..q)
            .map(|p| if bar.iter().any(|n| n.position == p) { 'x' } else { '.' })
            .collect();
        let pitches: Vec<u8> = bar.iter().map(|n| n.pitch).collect();
        println!("  bar {i:>2} |{row}| {pitches:?}");
    }
    Ok(())
}
