use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExpansionRequest, InfillError, Infiller};
use crate::midi::{QuantizedNote, QuantizedScore};
use crate::tokenizer::{decode, encode, TokenSequence};

fn cycle(bars: &[TokenSequence], start: usize, count: usize) -> TokenSequence {
    let picked: Vec<&TokenSequence> = (0..count).map(|i| &bars[(start + i) % bars.len()]).collect();
    TokenSequence::concat(picked).expect("bars share one grid")
}

/// Fills the gap with the last bars of the past, cycling if the past is
/// shorter than the gap. The copy always ends on the past's final bar.
#[derive(Debug, Clone, Copy, Default)]
pub struct CopyPastInfiller;

impl Infiller for CopyPastInfiller {
    fn name(&self) -> &str {
        "copy-past"
    }

    fn generate(&self, request: &ExpansionRequest, _seed: u64) -> Result<TokenSequence, InfillError> {
        let bars = request.past().bars();
        let n = bars.len();
        let gap = request.gap_bars();
        Ok(cycle(&bars, (n - gap % n) % n, gap))
    }
}

/// Fills the gap with the first bars of the future, cycling if needed.
#[derive(Debug, Clone, Copy, Default)]
pub struct CopyFutureInfiller;

impl Infiller for CopyFutureInfiller {
    fn name(&self) -> &str {
        "copy-future"
    }

    fn generate(&self, request: &ExpansionRequest, _seed: u64) -> Result<TokenSequence, InfillError> {
        Ok(cycle(&request.future().bars(), 0, request.gap_bars()))
    }
}

/// Uniformly random notes, loosely shaped by the contexts.
///
/// Each bar gets 0 to 8 notes at random grid positions. Pitches are drawn
/// from the pitch span of both contexts (C3..C5 when they hold no notes),
/// durations from one grid step to a quarter bar, and velocities from the
/// velocity range found in the contexts.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomInfiller;

impl Infiller for RandomInfiller {
    fn name(&self) -> &str {
        "random"
    }

    fn generate(&self, request: &ExpansionRequest, seed: u64) -> Result<TokenSequence, InfillError> {
        let q = request.positions_per_bar();
        let notes: Vec<QuantizedNote> = [request.past(), request.future()]
            .into_iter()
            .flat_map(|ts| decode(ts).bars.into_iter().flatten())
            .collect();
        let (lo, hi) = notes
            .iter()
            .fold(None, |acc: Option<(u8, u8)>, n| {
                Some(acc.map_or((n.pitch, n.pitch), |(lo, hi)| (lo.min(n.pitch), hi.max(n.pitch))))
            })
            .unwrap_or((48, 72));
        let (vlo, vhi) = notes
            .iter()
            .fold(None, |acc: Option<(u8, u8)>, n| {
                Some(acc.map_or((n.velocity, n.velocity), |(lo, hi)| (lo.min(n.velocity), hi.max(n.velocity))))
            })
            .unwrap_or((64, 64));
        let max_duration = (q / 4).max(1);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bars = (0..request.gap_bars())
            .map(|_| {
                let count = rng.gen_range(0..=8);
                (0..count)
                    .map(|_| {
                        QuantizedNote::new(
                            rng.gen_range(0..q),
                            rng.gen_range(lo..=hi),
                            rng.gen_range(1..=max_duration),
                            rng.gen_range(vlo..=vhi),
                        )
                    })
                    .collect()
            })
            .collect();
        Ok(encode(&QuantizedScore::new(q, bars)))
    }
}
