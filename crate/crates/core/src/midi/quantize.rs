use super::{NoteEvent, Score};

/// Sixteenth-note grid in 4/4.
pub const DEFAULT_POSITIONS_PER_BAR: u16 = 16;

/// A note snapped to the bar/position grid. `duration` is in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuantizedNote {
    pub position: u16,
    pub pitch: u8,
    pub duration: u16,
    pub velocity: u8,
}

impl QuantizedNote {
    pub fn new(position: u16, pitch: u8, duration: u16, velocity: u8) -> Self {
        QuantizedNote {
            position,
            pitch,
            duration,
            velocity,
        }
    }
}

/// A score on a grid of `positions_per_bar` slots per 4/4 bar.
///
/// Each note lives in the bar of its onset; notes inside a bar are kept in
/// `(position, pitch, duration, velocity)` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedScore {
    pub positions_per_bar: u16,
    pub bars: Vec<Vec<QuantizedNote>>,
}

/// `round(num / den)` with halves rounded up.
fn round_div(num: u64, den: u64) -> u64 {
    (2 * num + den) / (2 * den)
}

impl QuantizedScore {
    pub fn new(positions_per_bar: u16, mut bars: Vec<Vec<QuantizedNote>>) -> Self {
        assert!(positions_per_bar >= 1, "positions_per_bar must be at least 1");
        if bars.is_empty() {
            bars.push(Vec::new());
        }
        for bar in &mut bars {
            bar.sort_unstable();
        }
        QuantizedScore {
            positions_per_bar,
            bars,
        }
    }

    pub fn bar_count(&self) -> usize {
        self.bars.len()
    }

    pub fn note_count(&self) -> usize {
        self.bars.iter().map(Vec::len).sum()
    }

    /// Longest representable duration in grid units: two bars.
    pub fn max_duration(&self) -> u16 {
        self.positions_per_bar.saturating_mul(2)
    }

    /// Places every note back on the tick timeline at `ticks_per_quarter`.
    ///
    /// Grid points that fall between ticks are rounded half up, which
    /// [`quantize`] undoes exactly as long as the grid step is at least one
    /// tick (`positions_per_bar <= 4 * ticks_per_quarter`).
    pub fn to_score(&self, ticks_per_quarter: u16) -> Score {
        let q = u64::from(self.positions_per_bar);
        let bar_ticks = 4 * u64::from(ticks_per_quarter);
        let notes = self
            .bars
            .iter()
            .enumerate()
            .flat_map(|(bar, notes)| {
                notes.iter().map(move |n| {
                    let slot = bar as u64 * q + u64::from(n.position);
                    let onset = round_div(slot * bar_ticks, q);
                    let duration = round_div(u64::from(n.duration) * bar_ticks, q).max(1);
                    NoteEvent::new(
                        n.pitch.min(127),
                        onset as u32,
                        duration as u32,
                        n.velocity.clamp(1, 127),
                    )
                })
            })
            .collect();
        Score::new(ticks_per_quarter.max(1), notes).expect("clamped notes are valid")
    }
}

/// Snaps `score` onto a 4/4 grid with `positions_per_bar` slots per bar.
///
/// Onsets go to the nearest grid point, ties toward the later one.
/// Durations go to the nearest whole number of grid steps and are clamped to
/// `1..=2 * positions_per_bar`. The bar count runs through the bar holding the
/// last onset; an empty score gives a single empty bar.
///
/// # Panics
///
/// If `positions_per_bar` is zero.
pub fn quantize(score: &Score, positions_per_bar: u16) -> QuantizedScore {
    assert!(positions_per_bar >= 1, "positions_per_bar must be at least 1");
    let q = u64::from(positions_per_bar);
    let bar_ticks = score.ticks_per_bar();
    let max_duration = u64::from(positions_per_bar) * 2;

    let mut bars: Vec<Vec<QuantizedNote>> = vec![Vec::new()];
    for note in score.notes() {
        let slot = round_div(u64::from(note.onset) * q, bar_ticks);
        let bar = (slot / q) as usize;
        let position = (slot % q) as u16;
        let duration = round_div(u64::from(note.duration) * q, bar_ticks).clamp(1, max_duration);
        if bars.len() <= bar {
            bars.resize_with(bar + 1, Vec::new);
        }
        bars[bar].push(QuantizedNote::new(position, note.pitch, duration as u16, note.velocity));
    }
    QuantizedScore::new(positions_per_bar, bars)
}
