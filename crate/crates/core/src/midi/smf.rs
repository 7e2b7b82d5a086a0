use std::collections::{HashMap, VecDeque};

use log::warn;

use super::{MidiError, NoteEvent, Score};

const PERCUSSION_CHANNEL: u8 = 9;
const MAX_DELTA: u32 = 0x0FFF_FFFF;
/// 500000 microseconds per quarter note, i.e. 120 BPM.
const TEMPO_120: [u8; 3] = [0x07, 0xA1, 0x20];

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Reader { data, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn err(&self, reason: impl Into<String>) -> MidiError {
        MidiError::Parse {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn u8(&mut self) -> Result<u8, MidiError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8], MidiError> {
        if self.remaining() < n {
            return Err(self.err(format!("need {n} bytes, {} left", self.remaining())));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, MidiError> {
        let b = self.bytes(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn varlen(&mut self) -> Result<u32, MidiError> {
        let start = self.pos;
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7F);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(MidiError::Parse {
            offset: start,
            reason: "variable-length quantity longer than 4 bytes".into(),
        })
    }
}

/// Parses an SMF format 0 or 1 file into a [`Score`].
///
/// All tracks are merged. Note-on with velocity 0 acts as note-off. Notes
/// still sounding when their track ends are closed at the end-of-track tick
/// and a warning is logged. Overlapping notes of the same pitch on the same
/// channel are paired first-on first-off.
pub fn parse_midi(bytes: &[u8]) -> Result<Score, MidiError> {
    if bytes.len() < 4 || &bytes[..4] != b"MThd" {
        return Err(MidiError::Parse {
            offset: 0,
            reason: "missing MThd header".into(),
        });
    }
    let mut r = Reader::new(bytes);
    r.pos = 4;
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(r.err(format!("header length {header_len} shorter than 6")));
    }
    let header = r.bytes(header_len)?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    let division = u16::from_be_bytes([header[4], header[5]]);
    if format > 1 {
        return Err(MidiError::UnsupportedFormat(format));
    }
    if division & 0x8000 != 0 {
        return Err(MidiError::SmpteDivision);
    }
    if division == 0 {
        return Err(MidiError::Parse {
            offset: 12,
            reason: "ticks per quarter is zero".into(),
        });
    }

    let mut notes = Vec::new();
    while r.remaining() > 0 {
        if r.remaining() < 8 {
            return Err(r.err("truncated chunk header"));
        }
        let id = r.bytes(4)?;
        let len = r.u32()? as usize;
        let start = r.pos;
        let body = r.bytes(len)?;
        if id == b"MTrk" {
            parse_track(body, start, &mut notes)?;
        }
    }
    Score::new(division, notes)
}

fn parse_track(body: &[u8], base: usize, notes: &mut Vec<NoteEvent>) -> Result<(), MidiError> {
    let mut r = Reader::new(body);
    let rebase = |e: MidiError| match e {
        MidiError::Parse { offset, reason } => MidiError::Parse {
            offset: offset + base,
            reason,
        },
        other => other,
    };
    let mut tick: u64 = 0;
    let mut running: Option<u8> = None;
    let mut open: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();

    while r.remaining() > 0 {
        tick += u64::from(r.varlen().map_err(rebase)?);
        if tick > u64::from(u32::MAX) {
            return Err(rebase(r.err("track longer than 2^32 ticks")));
        }
        let first = r.u8().map_err(rebase)?;
        let status = if first & 0x80 != 0 {
            first
        } else {
            r.pos -= 1;
            running.ok_or_else(|| rebase(r.err("data byte without running status")))?
        };
        match status {
            0x80..=0xEF => {
                running = Some(status);
                let kind = status & 0xF0;
                let channel = status & 0x0F;
                let a = r.u8().map_err(rebase)?;
                let b = if matches!(kind, 0xC0 | 0xD0) {
                    0
                } else {
                    r.u8().map_err(rebase)?
                };
                if a > 127 || b > 127 {
                    return Err(rebase(r.err("data byte with high bit set")));
                }
                if channel == PERCUSSION_CHANNEL {
                    continue;
                }
                match kind {
                    0x90 if b > 0 => open.entry((channel, a)).or_default().push_back((tick, b)),
                    0x80 | 0x90 => {
                        if let Some((on, vel)) = open.get_mut(&(channel, a)).and_then(|q| q.pop_front()) {
                            close(notes, a, on, vel, tick);
                        }
                    }
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = r.varlen().map_err(rebase)? as usize;
                r.bytes(len).map_err(rebase)?;
            }
            0xFF => {
                running = None;
                let kind = r.u8().map_err(rebase)?;
                let len = r.varlen().map_err(rebase)? as usize;
                let data = r.bytes(len).map_err(rebase)?;
                match kind {
                    0x2F => break,
                    0x58 if len >= 2 => {
                        let numerator = data[0];
                        let denominator = 1u32.checked_shl(u32::from(data[1])).unwrap_or(0);
                        if numerator != 4 || denominator != 4 {
                            return Err(MidiError::TimeSignature {
                                numerator,
                                denominator,
                            });
                        }
                    }
                    _ => {}
                }
            }
            other => {
                r.pos -= 1;
                return Err(rebase(r.err(format!("unexpected status byte {other:#04x}"))));
            }
        }
    }

    let mut dangling: Vec<_> = open
        .into_iter()
        .flat_map(|((_, pitch), q)| q.into_iter().map(move |(on, vel)| (on, pitch, vel)))
        .collect();
    if !dangling.is_empty() {
        dangling.sort_unstable();
        warn!(
            "{} note(s) without note-off closed at end of track (tick {tick})",
            dangling.len()
        );
        for (on, pitch, vel) in dangling {
            close(notes, pitch, on, vel, tick);
        }
    }
    Ok(())
}

/// Zero-length notes are stretched to one tick.
fn close(notes: &mut Vec<NoteEvent>, pitch: u8, on: u64, vel: u8, off: u64) {
    notes.push(NoteEvent::new(pitch, on as u32, (off - on).max(1) as u32, vel));
}

fn push_varlen(out: &mut Vec<u8>, value: u32) {
    debug_assert!(value <= MAX_DELTA);
    let mut buf = [0u8; 4];
    let mut n = 0;
    let mut v = value;
    loop {
        buf[n] = (v & 0x7F) as u8;
        n += 1;
        v >>= 7;
        if v == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(buf[i] | if i > 0 { 0x80 } else { 0 });
    }
}

fn push_delta(out: &mut Vec<u8>, mut delta: u64) {
    // Gaps beyond the 28-bit delta range are bridged with empty text events.
    while delta > u64::from(MAX_DELTA) {
        push_varlen(out, MAX_DELTA);
        out.extend_from_slice(&[0xFF, 0x01, 0x00]);
        delta -= u64::from(MAX_DELTA);
    }
    push_varlen(out, delta as u32);
}

/// Writes `score` as a single-track SMF format 0 file at 120 BPM in 4/4.
///
/// Notes of the same pitch that overlap in time are spread over separate
/// channels so that reading the file back pairs every note-on with its own
/// note-off. Channel 10 is never used.
pub fn write_midi(score: &Score) -> Vec<u8> {
    let channels: Vec<u8> = (0..16).filter(|&c| c != PERCUSSION_CHANNEL).collect();
    // (tick, is_on, channel, pitch, velocity); offs sort before ons at a tick.
    let mut events: Vec<(u64, bool, u8, u8, u8)> = Vec::with_capacity(score.notes().len() * 2);
    let mut busy_until: HashMap<(u8, u8), u64> = HashMap::new();
    for note in score.notes() {
        let on = u64::from(note.onset);
        let off = on + u64::from(note.duration);
        let channel = channels
            .iter()
            .copied()
            .find(|&c| busy_until.get(&(c, note.pitch)).is_none_or(|&t| t <= on))
            .unwrap_or_else(|| {
                warn!("more than 15 overlapping notes at pitch {}", note.pitch);
                channels[0]
            });
        busy_until.insert((channel, note.pitch), off);
        events.push((on, true, channel, note.pitch, note.velocity));
        events.push((off, false, channel, note.pitch, 0x40));
    }
    events.sort_unstable();

    let mut track = Vec::with_capacity(events.len() * 4 + 32);
    push_varlen(&mut track, 0);
    track.extend_from_slice(&[0xFF, 0x51, 0x03]);
    track.extend_from_slice(&TEMPO_120);
    push_varlen(&mut track, 0);
    track.extend_from_slice(&[0xFF, 0x58, 0x04, 4, 2, 24, 8]);
    let mut last = 0u64;
    for (tick, is_on, channel, pitch, velocity) in events {
        push_delta(&mut track, tick - last);
        last = tick;
        let status = if is_on { 0x90 } else { 0x80 } | channel;
        track.extend_from_slice(&[status, pitch, velocity]);
    }
    push_varlen(&mut track, 0);
    track.extend_from_slice(&[0xFF, 0x2F, 0x00]);

    let mut out = Vec::with_capacity(track.len() + 22);
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&score.ticks_per_quarter().to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    out
}
