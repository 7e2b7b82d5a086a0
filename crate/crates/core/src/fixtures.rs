//! Deterministic synthetic 12-bar pieces with a clear phrase boundary.
//!
//! Each piece has a low, even-position phrase before its boundary bar and a
//! high, odd-position phrase after it:
//!
//! * before the boundary every onset sits on an even sixteenth and every
//!   pitch lies in octaves 1-2 (MIDI 24..=47);
//! * from the boundary on every onset sits on an odd sixteenth and every
//!   pitch lies in octaves 5-6 (MIDI 72..=95).
//!
//! Bars within a phrase share a core rhythm and differ by at most one extra
//! onset, so rhythm and register are both disjoint across the boundary.
//! The bundled corpus under `fixtures/corpus` is produced by
//! [`write_corpus`].

use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::midi::{write_midi, NoteEvent, Score};

pub const FIXTURE_BARS: usize = 12;
pub const FIXTURE_PIECES: usize = 20;
pub const FIXTURE_TICKS_PER_QUARTER: u16 = 480;
const STEP: u32 = FIXTURE_TICKS_PER_QUARTER as u32 / 4;

/// Scale degrees (semitones above the root) the fixtures draw pitches from.
const SCALE: [u8; 5] = [0, 2, 4, 7, 9];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Annotation {
    pub file: String,
    pub boundary_bar: usize,
}

/// A synthetic piece and the bar where its second phrase starts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixturePiece {
    pub name: String,
    pub boundary_bar: usize,
    pub score: Score,
}

fn core_rhythm(rng: &mut ChaCha8Rng, parity: u16) -> Vec<u16> {
    let mut pool: Vec<u16> = (0..8).map(|i| 2 * i + parity).collect();
    let first = pool.remove(0);
    pool.shuffle(rng);
    let extra = rng.gen_range(2..=4);
    let mut out: Vec<u16> = std::iter::once(first).chain(pool.into_iter().take(extra)).collect();
    out.sort_unstable();
    out
}

fn bar_rhythm(rng: &mut ChaCha8Rng, core: &[u16], parity: u16) -> Vec<u16> {
    let mut onsets = core.to_vec();
    if rng.gen_bool(0.5) {
        let spare: Vec<u16> = (0..8)
            .map(|i| 2 * i + parity)
            .filter(|p| !core.contains(p))
            .collect();
        if let Some(p) = spare.choose(rng) {
            onsets.push(*p);
        }
    }
    onsets.sort_unstable();
    onsets
}

fn pitch_in(rng: &mut ChaCha8Rng, root: u8, octave_base: u8) -> u8 {
    octave_base + (root + SCALE.choose(rng).copied().unwrap_or(0)) % 12
}

/// Generates fixture piece `index`. The same index always gives the same piece.
pub fn synthetic_piece(index: usize) -> FixturePiece {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0000 + index as u64);
    let boundary_bar = 4 + index % 5;
    let root = rng.gen_range(0..5u8);
    let past_core = core_rhythm(&mut rng, 0);
    let future_core = core_rhythm(&mut rng, 1);

    let mut notes = Vec::new();
    for bar in 0..FIXTURE_BARS {
        let in_past = bar < boundary_bar;
        let (onsets, low, high) = if in_past {
            (bar_rhythm(&mut rng, &past_core, 0), 24, 36)
        } else {
            (bar_rhythm(&mut rng, &future_core, 1), 72, 84)
        };
        let bar_start = (bar * 16) as u32 * STEP;
        for (i, &pos) in onsets.iter().enumerate() {
            let next = onsets.get(i + 1).copied().unwrap_or(16);
            let onset = bar_start + u32::from(pos) * STEP;
            // slightly early or late so quantization has work to do
            let jitter = rng.gen_range(0..=STEP / 4);
            let onset = if i % 2 == 0 { onset + jitter } else { onset.saturating_sub(jitter) };
            let duration = u32::from(next - pos) * STEP - STEP / 4;
            let velocity = rng.gen_range(56..=104);
            // first onset of the bar in the lower octave, the rest higher, so
            // every bar touches both of its phrase's octaves
            let base = if i == 0 { low } else { high };
            let pitch = pitch_in(&mut rng, root, base);
            notes.push(NoteEvent::new(pitch, onset, duration, velocity));
            if i == 0 {
                notes.push(NoteEvent::new(low + root + 7, onset, duration, velocity - 8));
            }
        }
    }
    FixturePiece {
        name: format!("piece_{index:02}.mid"),
        boundary_bar,
        score: Score::new(FIXTURE_TICKS_PER_QUARTER, notes).expect("fixture notes are valid"),
    }
}

pub fn synthetic_corpus(count: usize) -> Vec<FixturePiece> {
    (0..count).map(synthetic_piece).collect()
}

/// Writes `count` fixture pieces as MIDI files plus `annotations.json` into `dir`.
pub fn write_corpus(dir: &Path, count: usize) -> io::Result<Vec<Annotation>> {
    std::fs::create_dir_all(dir)?;
    let mut annotations = Vec::with_capacity(count);
    for piece in synthetic_corpus(count) {
        std::fs::write(dir.join(&piece.name), write_midi(&piece.score))?;
        annotations.push(Annotation {
            file: piece.name,
            boundary_bar: piece.boundary_bar,
        });
    }
    let json = serde_json::to_string_pretty(&annotations).map_err(io::Error::other)?;
    std::fs::write(dir.join("annotations.json"), json + "\n")?;
    Ok(annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::quantize;

    #[test]
    fn pieces_are_deterministic() {
        assert_eq!(synthetic_piece(3), synthetic_piece(3));
        assert_ne!(synthetic_piece(3).score, synthetic_piece(4).score);
    }

    #[test]
    fn phrases_are_disjoint_in_rhythm_and_register() {
        for piece in synthetic_corpus(FIXTURE_PIECES) {
            let qs = quantize(&piece.score, 16);
            assert_eq!(qs.bar_count(), FIXTURE_BARS, "{}", piece.name);
            for (b, bar) in qs.bars.iter().enumerate() {
                assert!(!bar.is_empty());
                let past = b < piece.boundary_bar;
                for n in bar {
                    assert_eq!(n.position % 2 == 0, past, "{} bar {b}", piece.name);
                    let range = if past { 24..=47 } else { 72..=95 };
                    assert!(range.contains(&n.pitch), "{} bar {b} pitch {}", piece.name, n.pitch);
                }
            }
        }
    }
}
