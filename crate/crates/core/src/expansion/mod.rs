//! Splitting a piece at a boundary bar and filling the artificial gap.
//!
//! The piece is cut into a past context (bars before the boundary) and a
//! future context (bars from the boundary on). An [`Infiller`] produces the
//! new bars that go between them. Past and future are never modified; the
//! expanded piece is their token-exact concatenation around the new bars.

mod baselines;
mod markov;

pub use baselines::{CopyFutureInfiller, CopyPastInfiller, RandomInfiller};
pub use markov::{train_markov, MarkovError, MarkovInfiller, MarkovModel, DEFAULT_ORDER, MAX_NOTES_PER_BAR};

use thiserror::Error;

use crate::tokenizer::{TokenError, TokenSequence};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InfillError {
    #[error("no grammar-legal token has probability mass")]
    NoLegalToken,
    #[error("infiller grid {infiller} does not match context grid {context}")]
    GridMismatch { infiller: u16, context: u16 },
    #[error("infiller returned {got} bars, expected {expected}")]
    WrongBarCount { expected: usize, got: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExpansionError {
    #[error("boundary bar {boundary} must lie in 1..{bars}")]
    Boundary { boundary: usize, bars: usize },
    #[error("gap must be at least one bar")]
    ZeroGap,
    #[error("past and future contexts use different grids")]
    GridMismatch,
    #[error(transparent)]
    Infill(#[from] InfillError),
    #[error(transparent)]
    Token(#[from] TokenError),
}

/// The two contexts and the number of bars to create between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionRequest {
    past: TokenSequence,
    future: TokenSequence,
    gap_bars: usize,
}

impl ExpansionRequest {
    pub fn new(past: TokenSequence, future: TokenSequence, gap_bars: usize) -> Result<Self, ExpansionError> {
        if gap_bars == 0 {
            return Err(ExpansionError::ZeroGap);
        }
        if past.positions_per_bar() != future.positions_per_bar() {
            return Err(ExpansionError::GridMismatch);
        }
        Ok(ExpansionRequest {
            past,
            future,
            gap_bars,
        })
    }

    pub fn past(&self) -> &TokenSequence {
        &self.past
    }

    pub fn future(&self) -> &TokenSequence {
        &self.future
    }

    pub fn gap_bars(&self) -> usize {
        self.gap_bars
    }

    pub fn positions_per_bar(&self) -> u16 {
        self.past.positions_per_bar()
    }
}

/// Anything that can write `gap_bars` bars of music between two contexts.
///
/// Implementations must return exactly `request.gap_bars()` bars on the
/// request's grid, and must be a pure function of `(request, seed)`.
pub trait Infiller: Send + Sync {
    fn name(&self) -> &str;

    fn generate(&self, request: &ExpansionRequest, seed: u64) -> Result<TokenSequence, InfillError>;
}

impl<T: Infiller + ?Sized> Infiller for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn generate(&self, request: &ExpansionRequest, seed: u64) -> Result<TokenSequence, InfillError> {
        (**self).generate(request, seed)
    }
}

/// Splits `ts` into bars `0..boundary` and `boundary..`.
pub fn split_at_boundary(ts: &TokenSequence, boundary: usize) -> Result<(TokenSequence, TokenSequence), ExpansionError> {
    let bars = ts.bar_count();
    if boundary == 0 || boundary >= bars {
        return Err(ExpansionError::Boundary { boundary, bars });
    }
    Ok((ts.slice_bars(0, boundary)?, ts.slice_bars(boundary, bars)?))
}

/// The pieces of one expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub past: TokenSequence,
    pub new: TokenSequence,
    pub future: TokenSequence,
    pub expanded: TokenSequence,
}

/// Like [`expand`] but also hands back the three segments.
pub fn expand_parts(
    ts: &TokenSequence,
    boundary: usize,
    gap_bars: usize,
    infiller: &dyn Infiller,
    seed: u64,
) -> Result<Expansion, ExpansionError> {
    if gap_bars == 0 {
        return Err(ExpansionError::ZeroGap);
    }
    let (past, future) = split_at_boundary(ts, boundary)?;
    let request = ExpansionRequest::new(past, future, gap_bars)?;
    let new = infiller.generate(&request, seed)?;
    if new.positions_per_bar() != request.positions_per_bar() {
        return Err(InfillError::GridMismatch {
            infiller: new.positions_per_bar(),
            context: request.positions_per_bar(),
        }
        .into());
    }
    if new.bar_count() != gap_bars {
        return Err(InfillError::WrongBarCount {
            expected: gap_bars,
            got: new.bar_count(),
        }
        .into());
    }
    let ExpansionRequest { past, future, .. } = request;
    let expanded = TokenSequence::concat([&past, &new, &future])?;
    Ok(Expansion {
        past,
        new,
        future,
        expanded,
    })
}

/// Inserts `gap_bars` new bars at bar `boundary` of `ts`.
pub fn expand(
    ts: &TokenSequence,
    boundary: usize,
    gap_bars: usize,
    infiller: &dyn Infiller,
    seed: u64,
) -> Result<TokenSequence, ExpansionError> {
    expand_parts(ts, boundary, gap_bars, infiller, seed).map(|e| e.expanded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::{QuantizedNote, QuantizedScore};
    use crate::tokenizer::encode;

    pub(crate) fn piece(bars: usize) -> TokenSequence {
        let bars = (0..bars)
            .map(|b| vec![QuantizedNote::new((b % 16) as u16, 40 + b as u8, 2, 90)])
            .collect();
        encode(&QuantizedScore::new(16, bars))
    }

    struct Broken;
    impl Infiller for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn generate(&self, request: &ExpansionRequest, _: u64) -> Result<TokenSequence, InfillError> {
            Ok(request.past().clone())
        }
    }

    #[test]
    fn split_shapes() {
        let (p, f) = split_at_boundary(&piece(12), 8).unwrap();
        assert_eq!((p.bar_count(), f.bar_count()), (8, 4));
        let (p, f) = split_at_boundary(&piece(2), 1).unwrap();
        assert_eq!((p.bar_count(), f.bar_count()), (1, 1));
        assert_eq!(
            split_at_boundary(&piece(12), 0),
            Err(ExpansionError::Boundary { boundary: 0, bars: 12 })
        );
        assert!(split_at_boundary(&piece(12), 12).is_err());
    }

    #[test]
    fn expansion_adds_gap_and_keeps_contexts() {
        let ts = piece(12);
        for gap in [2, 4] {
            let e = expand_parts(&ts, 8, gap, &CopyPastInfiller, 0).unwrap();
            assert_eq!(e.expanded.bar_count(), 12 + gap);
            assert_eq!(e.expanded.slice_bars(0, 8).unwrap(), ts.slice_bars(0, 8).unwrap());
            assert_eq!(
                e.expanded.slice_bars(8 + gap, 12 + gap).unwrap(),
                ts.slice_bars(8, 12).unwrap()
            );
        }
    }

    #[test]
    fn rejects_zero_gap_and_bad_infillers() {
        let ts = piece(12);
        assert_eq!(expand(&ts, 8, 0, &CopyPastInfiller, 0), Err(ExpansionError::ZeroGap));
        assert_eq!(
            expand(&ts, 8, 4, &Broken, 0),
            Err(ExpansionError::Infill(InfillError::WrongBarCount { expected: 4, got: 8 }))
        );
    }
}
