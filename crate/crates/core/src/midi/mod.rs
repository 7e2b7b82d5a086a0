//! Standard MIDI File input/output and grid quantization.
//!
//! Only what the expansion pipeline needs is modelled: notes with pitch,
//! onset, duration and velocity. Tempo, program changes, pedals and
//! percussion (channel 10) are discarded on read. Pieces must be in 4/4.

mod quantize;
mod smf;

pub use quantize::{quantize, QuantizedNote, QuantizedScore, DEFAULT_POSITIONS_PER_BAR};
pub use smf::{parse_midi, write_midi};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MidiError {
    #[error("malformed MIDI at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },
    #[error("unsupported SMF format {0} (only formats 0 and 1 are read)")]
    UnsupportedFormat(u16),
    #[error("SMPTE time division is not supported")]
    SmpteDivision,
    #[error("time signature {numerator}/{denominator} is not supported, only 4/4")]
    TimeSignature { numerator: u8, denominator: u32 },
    #[error("invalid note {index}: {reason}")]
    InvalidNote { index: usize, reason: String },
    #[error("ticks per quarter must be at least 1")]
    ZeroTicksPerQuarter,
}

/// One sounding note. Times are in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NoteEvent {
    pub pitch: u8,
    pub onset: u32,
    pub duration: u32,
    pub velocity: u8,
}

impl NoteEvent {
    pub fn new(pitch: u8, onset: u32, duration: u32, velocity: u8) -> Self {
        NoteEvent {
            pitch,
            onset,
            duration,
            velocity,
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.pitch > 127 {
            return Err(format!("pitch {} above 127", self.pitch));
        }
        if self.duration == 0 {
            return Err("zero duration".into());
        }
        if !(1..=127).contains(&self.velocity) {
            return Err(format!("velocity {} outside 1..=127", self.velocity));
        }
        Ok(())
    }

    fn sort_key(&self) -> (u32, u8, u32, u8) {
        (self.onset, self.pitch, self.duration, self.velocity)
    }
}

/// A parsed piece: a tick resolution and its notes sorted by `(onset, pitch)`.
///
/// Ties on `(onset, pitch)` are broken by duration then velocity so that the
/// ordering is total and comparisons between scores are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Score {
    ticks_per_quarter: u16,
    notes: Vec<NoteEvent>,
}

impl Score {
    pub fn new(ticks_per_quarter: u16, mut notes: Vec<NoteEvent>) -> Result<Self, MidiError> {
        if ticks_per_quarter == 0 {
            return Err(MidiError::ZeroTicksPerQuarter);
        }
        for (index, note) in notes.iter().enumerate() {
            note.check()
                .map_err(|reason| MidiError::InvalidNote { index, reason })?;
        }
        notes.sort_by_key(NoteEvent::sort_key);
        Ok(Score {
            ticks_per_quarter,
            notes,
        })
    }

    pub fn empty(ticks_per_quarter: u16) -> Result<Self, MidiError> {
        Score::new(ticks_per_quarter, Vec::new())
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    pub fn notes(&self) -> &[NoteEvent] {
        &self.notes
    }

    pub fn into_notes(self) -> Vec<NoteEvent> {
        self.notes
    }

    /// Length of one 4/4 bar in ticks.
    pub fn ticks_per_bar(&self) -> u64 {
        4 * u64::from(self.ticks_per_quarter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_sorts_by_onset_then_pitch() {
        let s = Score::new(
            480,
            vec![
                NoteEvent::new(64, 480, 10, 80),
                NoteEvent::new(67, 0, 10, 80),
                NoteEvent::new(60, 0, 10, 80),
            ],
        )
        .unwrap();
        let keys: Vec<_> = s.notes().iter().map(|n| (n.onset, n.pitch)).collect();
        assert_eq!(keys, vec![(0, 60), (0, 67), (480, 64)]);
    }

    #[test]
    fn rejects_invalid_notes() {
        assert!(matches!(
            Score::new(480, vec![NoteEvent::new(60, 0, 0, 80)]),
            Err(MidiError::InvalidNote { index: 0, .. })
        ));
        assert!(Score::new(480, vec![NoteEvent::new(128, 0, 1, 80)]).is_err());
        assert!(Score::new(480, vec![NoteEvent::new(60, 0, 1, 0)]).is_err());
        assert_eq!(Score::empty(0), Err(MidiError::ZeroTicksPerQuarter));
    }
}
