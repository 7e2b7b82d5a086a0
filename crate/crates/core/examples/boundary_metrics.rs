//! Grooving similarity and register histogram similarity on small,
//! hand-made inputs.
//!
//! ```bash
//! cargo run -p score-expansion --example boundary_metrics
//! ```

use score_expansion::metrics::{gs_pair, rhs, GroovingVector, RegisterHistogram};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let on_beats = GroovingVector::from_onsets(16, [0, 4, 8, 12]);
    let half = GroovingVector::from_onsets(16, [0, 8]);
    let off_beats = GroovingVector::from_onsets(16, [2, 6, 10, 14]);
    println!("GS(on beats, on beats)   = {}", gs_pair(&on_beats, &on_beats)?);
    println!("GS(on beats, half notes) = {}", gs_pair(&on_beats, &half)?);
    println!("GS(on beats, off beats)  = {}", gs_pair(&on_beats, &off_beats)?);
    println!("GS(x, not x)             = {}", gs_pair(&half, &half.complement())?);

    let uniform = RegisterHistogram::uniform();
    let bass = RegisterHistogram::from_pitches([28, 31, 36, 40, 43]).smoothed();
    let treble = RegisterHistogram::from_pitches([76, 79, 84, 88, 91]).smoothed();
    let mixed = RegisterHistogram::from_pitches([36, 40, 60, 64, 79, 84]).smoothed();
    println!("\nRHS(uniform, uniform) = {:.6} (-log2 7 = {:.6})", rhs(&uniform, &uniform)?, -(7f64.log2()));
    println!("RHS(bass, bass)       = {:.6}", rhs(&bass, &bass)?);
    println!("RHS(bass, mixed)      = {:.6}", rhs(&bass, &mixed)?);
    println!("RHS(mixed, bass)      = {:.6}", rhs(&mixed, &bass)?);
    println!("RHS(bass, treble)     = {:.6}", rhs(&bass, &treble)?);
    Ok(())
}
