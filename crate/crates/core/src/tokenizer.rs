//! Flat bar/position event tokens.
//!
//! A bar is a `Bar` token followed by zero or more notes, each written as
//! `Position Pitch Duration Velocity`. Positions inside a bar never go
//! backwards. The grammar is checked by a small state machine
//! ([`GrammarState`]) which the sampling infillers reuse to mask illegal
//! tokens.
//!
//! The text form has one token per line: `BAR`, `POS 0`, `PITCH 60`,
//! `DUR 4`, `VEL 5`. Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::midi::{QuantizedNote, QuantizedScore};

pub const MIN_PITCH: u8 = 22;
pub const MAX_PITCH: u8 = 107;
pub const VELOCITY_BINS: u8 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Token {
    Bar,
    Position(u16),
    Pitch(u8),
    Duration(u16),
    Velocity(u8),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Bar => write!(f, "BAR"),
            Token::Position(p) => write!(f, "POS {p}"),
            Token::Pitch(p) => write!(f, "PITCH {p}"),
            Token::Duration(d) => write!(f, "DUR {d}"),
            Token::Velocity(v) => write!(f, "VEL {v}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse token {0:?}")]
pub struct TokenParseError(pub String);

impl FromStr for Token {
    type Err = TokenParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || TokenParseError(s.to_string());
        let mut parts = s.split_whitespace();
        let head = parts.next().ok_or_else(bad)?;
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(bad());
        }
        let token = match (head, arg) {
            ("BAR", None) => Token::Bar,
            ("POS", Some(a)) => Token::Position(a.parse().map_err(|_| bad())?),
            ("PITCH", Some(a)) => Token::Pitch(a.parse().map_err(|_| bad())?),
            ("DUR", Some(a)) => Token::Duration(a.parse().map_err(|_| bad())?),
            ("VEL", Some(a)) => Token::Velocity(a.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        Ok(token)
    }
}

/// Every token legal on a grid of `positions_per_bar`, in the fixed order
/// used for sampling and model files (the derived `Ord` of [`Token`]).
pub fn vocabulary(positions_per_bar: u16) -> Vec<Token> {
    let q = positions_per_bar;
    std::iter::once(Token::Bar)
        .chain((0..q).map(Token::Position))
        .chain((MIN_PITCH..=MAX_PITCH).map(Token::Pitch))
        .chain((1..=q.saturating_mul(2)).map(Token::Duration))
        .chain((0..VELOCITY_BINS).map(Token::Velocity))
        .collect()
}

/// Velocity bin: 8 equal-width bins over `1..=127`, i.e. `floor((v - 1) / 15.75)`.
pub fn velocity_bin(velocity: u8) -> u8 {
    let v = u32::from(velocity.clamp(1, 127)) - 1;
    ((v * 4 / 63) as u8).min(VELOCITY_BINS - 1)
}

/// Representative velocity of a bin: its midpoint, rounded.
pub fn bin_velocity(bin: u8) -> u8 {
    let bin = f64::from(bin.min(VELOCITY_BINS - 1));
    (1.0 + 15.75 * (bin + 0.5)).round() as u8
}

/// What a grammar violation expected to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Bar,
    BarOrPosition,
    Pitch,
    Duration,
    Velocity,
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Expected::Bar => "BAR",
            Expected::BarOrPosition => "BAR or POS",
            Expected::Pitch => "PITCH",
            Expected::Duration => "DUR",
            Expected::Velocity => "VEL",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("grammar error at token {index}: expected {expected}, found {}", found.map_or("end of stream".to_string(), |t| t.to_string()))]
pub struct GrammarError {
    pub index: usize,
    pub expected: Expected,
    pub found: Option<Token>,
    /// Set when the token kind was right but its value was not.
    pub detail: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error(transparent)]
    Grammar(#[from] GrammarError),
    #[error("bar range {from}..{to} invalid for a sequence of {bars} bars")]
    Range { from: usize, to: usize, bars: usize },
    #[error("grid mismatch: {0} vs {1} positions per bar")]
    GridMismatch(u16, u16),
    #[error("line {line}: {source}")]
    Text {
        line: usize,
        #[source]
        source: TokenParseError,
    },
}

/// Incremental grammar checker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrammarState {
    positions_per_bar: u16,
    phase: Phase,
    last_position: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Start,
    InBar,
    AfterPosition,
    AfterPitch,
    AfterDuration,
}

impl GrammarState {
    pub fn new(positions_per_bar: u16) -> Self {
        GrammarState {
            positions_per_bar,
            phase: Phase::Start,
            last_position: 0,
        }
    }

    pub fn expected(&self) -> Expected {
        match self.phase {
            Phase::Start => Expected::Bar,
            Phase::InBar => Expected::BarOrPosition,
            Phase::AfterPosition => Expected::Pitch,
            Phase::AfterPitch => Expected::Duration,
            Phase::AfterDuration => Expected::Velocity,
        }
    }

    /// True when the stream may legally end here.
    pub fn is_complete(&self) -> bool {
        self.phase == Phase::InBar
    }

    pub fn last_position(&self) -> u16 {
        self.last_position
    }

    /// Why `token` is illegal here, or `None` if it is legal.
    fn violation(&self, token: Token) -> Option<Option<String>> {
        let q = self.positions_per_bar;
        match (self.phase, token) {
            (Phase::Start | Phase::InBar, Token::Bar) => None,
            (Phase::InBar, Token::Position(p)) => {
                if p >= q {
                    Some(Some(format!("position {p} outside 0..{q}")))
                } else if p < self.last_position {
                    Some(Some(format!(
                        "position {p} before previous position {}",
                        self.last_position
                    )))
                } else {
                    None
                }
            }
            (Phase::AfterPosition, Token::Pitch(p)) => (!(MIN_PITCH..=MAX_PITCH).contains(&p))
                .then(|| Some(format!("pitch {p} outside {MIN_PITCH}..={MAX_PITCH}"))),
            (Phase::AfterPitch, Token::Duration(d)) => (d == 0 || d > q.saturating_mul(2))
                .then(|| Some(format!("duration {d} outside 1..={}", q.saturating_mul(2)))),
            (Phase::AfterDuration, Token::Velocity(v)) => (v >= VELOCITY_BINS)
                .then(|| Some(format!("velocity bin {v} outside 0..{VELOCITY_BINS}"))),
            _ => Some(None),
        }
    }

    pub fn allows(&self, token: Token) -> bool {
        self.violation(token).is_none()
    }

    pub fn advance(&mut self, index: usize, token: Token) -> Result<(), GrammarError> {
        if let Some(detail) = self.violation(token) {
            return Err(GrammarError {
                index,
                expected: self.expected(),
                found: Some(token),
                detail,
            });
        }
        self.phase = match token {
            Token::Bar => {
                self.last_position = 0;
                Phase::InBar
            }
            Token::Position(p) => {
                self.last_position = p;
                Phase::AfterPosition
            }
            Token::Pitch(_) => Phase::AfterPitch,
            Token::Duration(_) => Phase::AfterDuration,
            Token::Velocity(_) => Phase::InBar,
        };
        Ok(())
    }
}

/// A grammar-valid token stream for a fixed grid resolution.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSequence", into = "RawSequence")]
pub struct TokenSequence {
    positions_per_bar: u16,
    tokens: Vec<Token>,
}

#[derive(Serialize, Deserialize)]
struct RawSequence {
    positions_per_bar: u16,
    tokens: Vec<Token>,
}

impl TryFrom<RawSequence> for TokenSequence {
    type Error = GrammarError;
    fn try_from(raw: RawSequence) -> Result<Self, GrammarError> {
        TokenSequence::new(raw.positions_per_bar, raw.tokens)
    }
}

impl From<TokenSequence> for RawSequence {
    fn from(ts: TokenSequence) -> Self {
        RawSequence {
            positions_per_bar: ts.positions_per_bar,
            tokens: ts.tokens,
        }
    }
}

/// Checks `tokens` against the grammar without building a sequence.
pub fn validate(positions_per_bar: u16, tokens: &[Token]) -> Result<(), GrammarError> {
    let mut state = GrammarState::new(positions_per_bar);
    for (i, &t) in tokens.iter().enumerate() {
        state.advance(i, t)?;
    }
    if state.is_complete() {
        Ok(())
    } else {
        Err(GrammarError {
            index: tokens.len(),
            expected: state.expected(),
            found: None,
            detail: None,
        })
    }
}

impl TokenSequence {
    pub fn new(positions_per_bar: u16, tokens: Vec<Token>) -> Result<Self, GrammarError> {
        validate(positions_per_bar, &tokens)?;
        Ok(TokenSequence {
            positions_per_bar,
            tokens,
        })
    }

    pub fn positions_per_bar(&self) -> u16 {
        self.positions_per_bar
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn bar_count(&self) -> usize {
        self.tokens.iter().filter(|t| **t == Token::Bar).count()
    }

    fn bar_starts(&self) -> Vec<usize> {
        self.tokens
            .iter()
            .enumerate()
            .filter_map(|(i, t)| (*t == Token::Bar).then_some(i))
            .collect()
    }

    /// Bars `from..to`, token for token.
    pub fn slice_bars(&self, from: usize, to: usize) -> Result<TokenSequence, TokenError> {
        let starts = self.bar_starts();
        if from >= to || to > starts.len() {
            return Err(TokenError::Range {
                from,
                to,
                bars: starts.len(),
            });
        }
        let end = starts.get(to).copied().unwrap_or(self.tokens.len());
        Ok(TokenSequence {
            positions_per_bar: self.positions_per_bar,
            tokens: self.tokens[starts[from]..end].to_vec(),
        })
    }

    /// Each bar as its own single-bar sequence.
    pub fn bars(&self) -> Vec<TokenSequence> {
        let starts = self.bar_starts();
        starts
            .iter()
            .enumerate()
            .map(|(i, &s)| TokenSequence {
                positions_per_bar: self.positions_per_bar,
                tokens: self.tokens[s..starts.get(i + 1).copied().unwrap_or(self.tokens.len())]
                    .to_vec(),
            })
            .collect()
    }

    /// Joins sequences end to end. All parts must share one grid.
    pub fn concat<'a, I>(parts: I) -> Result<TokenSequence, TokenError>
    where
        I: IntoIterator<Item = &'a TokenSequence>,
    {
        let mut iter = parts.into_iter();
        let first = iter.next().ok_or(TokenError::Range {
            from: 0,
            to: 0,
            bars: 0,
        })?;
        let mut out = first.clone();
        for part in iter {
            if part.positions_per_bar != out.positions_per_bar {
                return Err(TokenError::GridMismatch(out.positions_per_bar, part.positions_per_bar));
            }
            out.tokens.extend_from_slice(&part.tokens);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.tokens.len() * 7);
        for t in &self.tokens {
            s.push_str(&t.to_string());
            s.push('\n');
        }
        s
    }

    pub fn from_text(positions_per_bar: u16, text: &str) -> Result<TokenSequence, TokenError> {
        let tokens = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .map(|(i, l)| {
                l.parse()
                    .map_err(|source| TokenError::Text { line: i + 1, source })
            })
            .collect::<Result<Vec<Token>, _>>()?;
        Ok(TokenSequence::new(positions_per_bar, tokens)?)
    }
}

/// Encodes a quantized score. Every bar, empty or not, starts with `Bar`.
/// Pitches outside the token range are clamped into it.
pub fn encode(qs: &QuantizedScore) -> TokenSequence {
    let max_duration = qs.max_duration();
    let mut tokens = Vec::with_capacity(1 + qs.bars.len() + qs.note_count() * 4);
    for bar in &qs.bars {
        tokens.push(Token::Bar);
        // clamp before sorting so the order matches what decoding rebuilds
        let mut notes: Vec<(u16, u8, u16, u8)> = bar
            .iter()
            .map(|n| {
                (
                    n.position.min(qs.positions_per_bar - 1),
                    n.pitch.clamp(MIN_PITCH, MAX_PITCH),
                    n.duration.clamp(1, max_duration),
                    velocity_bin(n.velocity),
                )
            })
            .collect();
        notes.sort_unstable();
        for (position, pitch, duration, velocity) in notes {
            tokens.push(Token::Position(position));
            tokens.push(Token::Pitch(pitch));
            tokens.push(Token::Duration(duration));
            tokens.push(Token::Velocity(velocity));
        }
    }
    if tokens.is_empty() {
        tokens.push(Token::Bar);
    }
    TokenSequence {
        positions_per_bar: qs.positions_per_bar,
        tokens,
    }
}

/// Decodes a sequence back to a quantized score. Velocities come back as bin
/// midpoints.
pub fn decode(ts: &TokenSequence) -> QuantizedScore {
    decode_tokens(ts.positions_per_bar, &ts.tokens).expect("TokenSequence is grammar-valid")
}

/// Decodes an unchecked token slice.
pub fn decode_tokens(positions_per_bar: u16, tokens: &[Token]) -> Result<QuantizedScore, GrammarError> {
    validate(positions_per_bar, tokens)?;
    let mut bars: Vec<Vec<QuantizedNote>> = Vec::new();
    for chunk in tokens.split(|t| *t == Token::Bar).skip(1) {
        let notes = chunk
            .chunks_exact(4)
            .map(|note| match *note {
                [Token::Position(p), Token::Pitch(n), Token::Duration(d), Token::Velocity(v)] => {
                    QuantizedNote::new(p, n, d, bin_velocity(v))
                }
                _ => unreachable!("validated"),
            })
            .collect();
        bars.push(notes);
    }
    Ok(QuantizedScore::new(positions_per_bar, bars))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Token::*;

    #[test]
    fn clamped_notes_encode_in_decoded_order() {
        let qs = QuantizedScore::new(16, vec![vec![QuantizedNote::new(2, 13, 8, 92), QuantizedNote::new(2, 22, 4, 103)]]);
        let ts = encode(&qs);
        assert_eq!(
            ts.tokens(),
            &[Bar, Position(2), Pitch(22), Duration(4), Velocity(6), Position(2), Pitch(22), Duration(8), Velocity(5)]
        );
        assert_eq!(encode(&decode(&ts)), ts);
    }

    fn twelve_bars() -> TokenSequence {
        let bars = (0..12)
            .map(|b| vec![QuantizedNote::new(b as u16 % 16, 60 + b as u8, 4, 80)])
            .collect();
        encode(&QuantizedScore::new(16, bars))
    }

    #[test]
    fn velocity_bins_match_hand_computed_edges() {
        // floor((v - 1) / 15.75), top bin closed at 127
        for v in 1u8..=127 {
            let expected = (((f64::from(v) - 1.0) / 15.75).floor() as u8).min(7);
            assert_eq!(velocity_bin(v), expected, "velocity {v}");
        }
        assert_eq!(velocity_bin(80), 5);
        for b in 0..8 {
            assert_eq!(velocity_bin(bin_velocity(b)), b);
        }
    }

    #[test]
    fn encodes_empty_bar() {
        let ts = encode(&QuantizedScore::new(16, vec![vec![]]));
        assert_eq!(ts.tokens(), &[Bar]);
        assert_eq!(decode(&ts).bars, vec![Vec::<QuantizedNote>::new()]);
    }

    #[test]
    fn encodes_single_note() {
        let qs = QuantizedScore::new(16, vec![vec![QuantizedNote::new(0, 60, 4, 80)]]);
        let ts = encode(&qs);
        assert_eq!(
            ts.tokens(),
            &[Bar, Position(0), Pitch(60), Duration(4), Velocity(5)]
        );
    }

    #[test]
    fn bar_counting() {
        assert_eq!(TokenSequence::new(16, vec![Bar]).unwrap().bar_count(), 1);
        let ts = twelve_bars();
        assert_eq!(ts.bar_count(), 12);
        let gap = encode(&QuantizedScore::new(16, vec![vec![]; 4]));
        let joined = TokenSequence::concat([
            &ts.slice_bars(0, 8).unwrap(),
            &gap,
            &ts.slice_bars(8, 12).unwrap(),
        ])
        .unwrap();
        assert_eq!(joined.bar_count(), 16);
    }

    #[test]
    fn slicing_partitions_the_sequence() {
        let ts = twelve_bars();
        assert_eq!(ts.slice_bars(0, 12).unwrap(), ts);
        let a = ts.slice_bars(0, 8).unwrap();
        let b = ts.slice_bars(8, 12).unwrap();
        assert_eq!(b.bar_count(), 4);
        assert_eq!(TokenSequence::concat([&a, &b]).unwrap(), ts);
        assert!(matches!(ts.slice_bars(3, 3), Err(TokenError::Range { .. })));
        assert!(matches!(ts.slice_bars(0, 13), Err(TokenError::Range { .. })));
        assert_eq!(ts.bars().len(), 12);
    }

    #[test]
    fn missing_position_is_a_grammar_error() {
        let err = TokenSequence::new(16, vec![Bar, Pitch(60), Duration(4), Velocity(5)]).unwrap_err();
        assert_eq!(err.index, 1);
        assert_eq!(err.expected, Expected::BarOrPosition);
        assert_eq!(err.found, Some(Pitch(60)));
        assert!(decode_tokens(16, &[Bar, Pitch(60)]).is_err());
    }

    #[test]
    fn other_grammar_errors() {
        let e = validate(16, &[]).unwrap_err();
        assert_eq!((e.index, e.expected, e.found), (0, Expected::Bar, None));
        let e = validate(16, &[Position(0)]).unwrap_err();
        assert_eq!(e.expected, Expected::Bar);
        let e = validate(16, &[Bar, Position(0), Pitch(60)]).unwrap_err();
        assert_eq!((e.index, e.expected, e.found), (3, Expected::Duration, None));
        let e = validate(16, &[Bar, Position(16)]).unwrap_err();
        assert!(e.detail.is_some());
        let descending = [
            Bar, Position(4), Pitch(60), Duration(1), Velocity(0),
            Position(3), Pitch(60), Duration(1), Velocity(0),
        ];
        assert_eq!(validate(16, &descending).unwrap_err().index, 5);
        assert!(validate(16, &[Bar, Position(0), Pitch(21)]).is_err());
        assert!(validate(16, &[Bar, Position(0), Pitch(60), Duration(33)]).is_err());
        assert!(validate(16, &[Bar, Position(0), Pitch(60), Duration(1), Velocity(8)]).is_err());
        // positions reset at each bar
        let ok = [
            Bar, Position(9), Pitch(60), Duration(1), Velocity(0),
            Bar, Position(2), Pitch(60), Duration(1), Velocity(0),
        ];
        assert!(validate(16, &ok).is_ok());
    }

    #[test]
    fn out_of_range_pitches_clamp() {
        let qs = QuantizedScore::new(16, vec![vec![
            QuantizedNote::new(0, 10, 1, 64),
            QuantizedNote::new(1, 120, 1, 64),
        ]]);
        let pitches: Vec<_> = encode(&qs)
            .tokens()
            .iter()
            .filter_map(|t| match t {
                Pitch(p) => Some(*p),
                _ => None,
            })
            .collect();
        assert_eq!(pitches, vec![22, 107]);
    }

    #[test]
    fn text_form_round_trips() {
        let ts = twelve_bars();
        let text = ts.to_text();
        assert!(text.starts_with("BAR\nPOS 0\nPITCH 60\nDUR 4\nVEL 5\n"));
        assert_eq!(TokenSequence::from_text(16, &text).unwrap(), ts);
        let with_comments = format!("# header\n\n{text}");
        assert_eq!(TokenSequence::from_text(16, &with_comments).unwrap(), ts);
        assert!(matches!(
            TokenSequence::from_text(16, "BAR\nPOS x\n"),
            Err(TokenError::Text { line: 2, .. })
        ));
        assert!(matches!(
            TokenSequence::from_text(16, "POS 1\n"),
            Err(TokenError::Grammar(_))
        ));
    }

    #[test]
    fn vocabulary_is_sorted_and_complete() {
        let v = vocabulary(16);
        assert_eq!(v.len(), 1 + 16 + 86 + 32 + 8);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(v[0], Bar);
        assert_eq!(*v.last().unwrap(), Velocity(7));
    }

    #[test]
    fn concat_rejects_mixed_grids() {
        let a = TokenSequence::new(16, vec![Bar]).unwrap();
        let b = TokenSequence::new(12, vec![Bar]).unwrap();
        assert_eq!(
            TokenSequence::concat([&a, &b]),
            Err(TokenError::GridMismatch(16, 12))
        );
    }
}
