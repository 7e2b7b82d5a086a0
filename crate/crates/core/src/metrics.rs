//! Boundary-preservation metrics.
//!
//! Rhythm is compared with grooving patterns: one binary vector per bar
//! marking which grid positions carry an onset. Two patterns score
//! `1 - hamming / Q`, and two segments score the mean over every pair of
//! one bar from each.
//!
//! Register is compared with a 7-bin octave histogram (C1..B1 up to C7..B7)
//! and the negative cross entropy `sum_i h1[i] * log2(h2[i])`, which is at
//! most zero and closer to zero for more similar registers. Histograms are
//! smoothed with [`SMOOTHING_EPSILON`] so the logarithm is always defined.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::QuantizedNote;
use crate::tokenizer::{decode, Token, TokenSequence};

pub const REGISTER_BINS: usize = 7;
/// MIDI number of C1, the lower edge of the first octave bin.
pub const LOWEST_OCTAVE_PITCH: u8 = 24;
pub const SMOOTHING_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("grooving vectors differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("register histogram bin {bin} is {value}, the logarithm needs a positive value")]
    Domain { bin: usize, value: f64 },
    #[error("segment has no bars")]
    EmptySegment,
    #[error("segments use different grids: {0} vs {1}")]
    GridMismatch(u16, u16),
}

/// Onset positions of one bar as a bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroovingVector(Vec<bool>);

impl GroovingVector {
    pub fn from_onsets(positions_per_bar: u16, onsets: impl IntoIterator<Item = u16>) -> Self {
        let mut bits = vec![false; usize::from(positions_per_bar)];
        for p in onsets {
            if let Some(b) = bits.get_mut(usize::from(p)) {
                *b = true;
            }
        }
        GroovingVector(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn onsets(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter_map(|(i, b)| b.then_some(i))
    }

    pub fn complement(&self) -> Self {
        GroovingVector(self.0.iter().map(|b| !b).collect())
    }
}

pub fn grooving_vector(bar: &[QuantizedNote], positions_per_bar: u16) -> GroovingVector {
    GroovingVector::from_onsets(positions_per_bar, bar.iter().map(|n| n.position))
}

/// `1 - (number of differing positions) / Q`.
pub fn gs_pair(a: &GroovingVector, b: &GroovingVector) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let differing = a.0.iter().zip(&b.0).filter(|(x, y)| x != y).count();
    Ok(1.0 - differing as f64 / a.len() as f64)
}

fn segment_grooves(seg: &TokenSequence) -> Vec<GroovingVector> {
    let q = seg.positions_per_bar();
    decode(seg).bars.iter().map(|bar| grooving_vector(bar, q)).collect()
}

/// Mean grooving similarity over all (bar of `a`, bar of `b`) pairs.
pub fn gs_segments(a: &TokenSequence, b: &TokenSequence) -> Result<f64, MetricError> {
    if a.positions_per_bar() != b.positions_per_bar() {
        return Err(MetricError::GridMismatch(a.positions_per_bar(), b.positions_per_bar()));
    }
    let ga = segment_grooves(a);
    let gb = segment_grooves(b);
    if ga.is_empty() || gb.is_empty() {
        return Err(MetricError::EmptySegment);
    }
    let mut sum = 0.0;
    for x in &ga {
        for y in &gb {
            sum += gs_pair(x, y)?;
        }
    }
    Ok(sum / (ga.len() * gb.len()) as f64)
}

/// A distribution over the seven octave bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegisterHistogram([f64; REGISTER_BINS]);

/// Octave bin of a MIDI pitch, with pitches below C1 or above B7 clamped
/// into the edge bins.
pub fn octave_bin(pitch: u8) -> usize {
    (usize::from(pitch.saturating_sub(LOWEST_OCTAVE_PITCH)) / 12).min(REGISTER_BINS - 1)
}

impl RegisterHistogram {
    pub fn uniform() -> Self {
        RegisterHistogram([1.0 / REGISTER_BINS as f64; REGISTER_BINS])
    }

    /// Normalizes non-negative weights to sum to one, without smoothing.
    /// All-zero weights give the uniform histogram.
    pub fn from_weights(weights: [f64; REGISTER_BINS]) -> Self {
        assert!(
            weights.iter().all(|w| w.is_finite() && *w >= 0.0),
            "histogram weights must be finite and non-negative"
        );
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return RegisterHistogram::uniform();
        }
        RegisterHistogram(weights.map(|w| w / total))
    }

    /// Counts pitches per octave and normalizes, without smoothing.
    pub fn from_pitches(pitches: impl IntoIterator<Item = u8>) -> Self {
        let mut counts = [0.0; REGISTER_BINS];
        for p in pitches {
            counts[octave_bin(p)] += 1.0;
        }
        RegisterHistogram::from_weights(counts)
    }

    /// Adds [`SMOOTHING_EPSILON`] to every bin and renormalizes.
    pub fn smoothed(&self) -> Self {
        RegisterHistogram::from_weights(self.0.map(|h| h + SMOOTHING_EPSILON))
    }

    pub fn bins(&self) -> &[f64; REGISTER_BINS] {
        &self.0
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|h| **h > 0.0)
            .map(|h| h * h.log2())
            .sum::<f64>()
    }
}

/// Smoothed octave histogram of every note in `seg`. An empty segment gives
/// the uniform histogram.
pub fn register_histogram(seg: &TokenSequence) -> RegisterHistogram {
    let pitches = seg.tokens().iter().filter_map(|t| match t {
        Token::Pitch(p) => Some(*p),
        _ => None,
    });
    RegisterHistogram::from_pitches(pitches).smoothed()
}

/// Register histogram similarity: `sum_i h1[i] * log2(h2[i])`.
///
/// Not symmetric. `h2` must be strictly positive, as smoothed histograms are.
pub fn rhs(h1: &RegisterHistogram, h2: &RegisterHistogram) -> Result<f64, MetricError> {
    if let Some((bin, &value)) = h2.0.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
        return Err(MetricError::Domain { bin, value });
    }
    Ok(h1.0.iter().zip(&h2.0).map(|(a, b)| a * b.log2()).sum())
}

/// Similarities of the new segment to each context, and their differences.
///
/// Positive `delta_gs` means the new segment's rhythm is closer to the
/// future than to the past; the same reading holds for `delta_rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryAnalysis {
    pub gs1: f64,
    pub gs2: f64,
    pub delta_gs: f64,
    pub rhs1: f64,
    pub rhs2: f64,
    pub delta_rhs: f64,
}

pub fn boundary_analysis(
    past: &TokenSequence,
    new: &TokenSequence,
    future: &TokenSequence,
) -> Result<BoundaryAnalysis, MetricError> {
    let gs1 = gs_segments(past, new)?;
    let gs2 = gs_segments(new, future)?;
    let (hp, hn, hf) = (
        register_histogram(past),
        register_histogram(new),
        register_histogram(future),
    );
    let rhs1 = rhs(&hp, &hn)?;
    let rhs2 = rhs(&hn, &hf)?;
    Ok(BoundaryAnalysis {
        gs1,
        gs2,
        delta_gs: gs2 - gs1,
        rhs1,
        rhs2,
        delta_rhs: rhs2 - rhs1,
    })
}
