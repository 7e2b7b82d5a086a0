//! Order-k Markov chain over event tokens with grammar-masked sampling.
//!
//! # Model file format
//!
//! Models are stored as JSON:
//!
//! ```text
//! {
//!   "format": "score-expansion-markov",
//!   "version": 1,
//!   "order": 2,
//!   "positions_per_bar": 16,
//!   "vocabulary": ["BAR", "POS 0", ..., "VEL 7"],
//!   "contexts": [
//!     { "context": [], "next": [[0, 24], [1, 10], ...] },
//!     { "context": [0], "next": [[1, 12]] },
//!     ...
//!   ]
//! }
//! ```
//!
//! `vocabulary` lists every token in sampling order, using the text form of
//! the tokenizer. `context` and the first element of each `next` pair are
//! indices into it; the second element of a pair is a positive count.
//! Contexts of every length from 0 (unigram) to `order` are present, sorted
//! by length and then by index sequence. Loading checks all of the above.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ExpansionRequest, InfillError, Infiller};
use crate::tokenizer::{vocabulary, GrammarState, Token, TokenSequence};

pub const DEFAULT_ORDER: usize = 2;
/// Notes allowed in one generated bar before a `Bar` token is forced.
pub const MAX_NOTES_PER_BAR: usize = 64;

const FORMAT: &str = "score-expansion-markov";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("cannot train on an empty corpus")]
    EmptyCorpus,
    #[error("Markov order must be at least 1")]
    ZeroOrder,
    #[error("corpus mixes grids of {0} and {1} positions per bar")]
    GridMismatch(u16, u16),
    #[error("invalid model file: {0}")]
    Format(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

type Counts = BTreeMap<Token, u64>;

/// Next-token counts for every context of length `0..=order` seen in training.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkovModel {
    order: usize,
    positions_per_bar: u16,
    /// `tables[n]` maps length-`n` contexts to next-token counts.
    tables: Vec<BTreeMap<Vec<Token>, Counts>>,
}

/// Counts every `(context -> next)` transition of every length up to `order`.
pub fn train_markov(corpus: &[TokenSequence], order: usize) -> Result<MarkovModel, MarkovError> {
    let first = corpus.first().ok_or(MarkovError::EmptyCorpus)?;
    if order == 0 {
        return Err(MarkovError::ZeroOrder);
    }
    let q = first.positions_per_bar();
    let mut tables = vec![BTreeMap::<Vec<Token>, Counts>::new(); order + 1];
    for seq in corpus {
        if seq.positions_per_bar() != q {
            return Err(MarkovError::GridMismatch(q, seq.positions_per_bar()));
        }
        let tokens = seq.tokens();
        for (i, &next) in tokens.iter().enumerate() {
            for (n, table) in tables.iter_mut().enumerate().take(i.min(order) + 1) {
                *table
                    .entry(tokens[i - n..i].to_vec())
                    .or_default()
                    .entry(next)
                    .or_insert(0) += 1;
            }
        }
    }
    Ok(MarkovModel {
        order,
        positions_per_bar: q,
        tables,
    })
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    positions_per_bar: u16,
    vocabulary: Vec<String>,
    contexts: Vec<ContextEntry>,
}

#[derive(Serialize, Deserialize)]
struct ContextEntry {
    context: Vec<usize>,
    next: Vec<(usize, u64)>,
}

impl MarkovModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn positions_per_bar(&self) -> u16 {
        self.positions_per_bar
    }

    /// Next-token counts after `context`, if that context was seen.
    /// Contexts longer than the model order are never present.
    pub fn counts(&self, context: &[Token]) -> Option<&BTreeMap<Token, u64>> {
        self.tables.get(context.len())?.get(context)
    }

    /// All stored contexts of length `len`.
    pub fn contexts(&self, len: usize) -> impl Iterator<Item = (&[Token], &BTreeMap<Token, u64>)> {
        self.tables
            .get(len)
            .into_iter()
            .flat_map(|t| t.iter().map(|(k, v)| (k.as_slice(), v)))
    }

    /// Draws the next token after `history`, restricted to what `state` allows.
    ///
    /// Starts from the longest context available and backs off one token at a
    /// time down to the unigram table whenever a context is unseen or none of
    /// its successors is legal. Sampling is inverse-CDF over integer counts in
    /// vocabulary order.
    pub fn sample_next<R: Rng>(
        &self,
        history: &[Token],
        state: &GrammarState,
        rng: &mut R,
    ) -> Result<Token, InfillError> {
        let longest = history.len().min(self.order);
        for len in (0..=longest).rev() {
            let Some(counts) = self.counts(&history[history.len() - len..]) else {
                continue;
            };
            let legal: Vec<(Token, u64)> = counts
                .iter()
                .filter(|(t, _)| state.allows(**t))
                .map(|(t, c)| (*t, *c))
                .collect();
            let total: u64 = legal.iter().map(|(_, c)| c).sum();
            if total == 0 {
                continue;
            }
            let mut draw = rng.gen_range(0..total);
            for (token, count) in legal {
                if draw < count {
                    return Ok(token);
                }
                draw -= count;
            }
        }
        Err(InfillError::NoLegalToken)
    }

    pub fn to_json(&self) -> Result<String, MarkovError> {
        let vocab = vocabulary(self.positions_per_bar);
        let index: BTreeMap<Token, usize> = vocab.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let contexts = self
            .tables
            .iter()
            .flat_map(|table| table.iter())
            .map(|(ctx, counts)| ContextEntry {
                context: ctx.iter().map(|t| index[t]).collect(),
                next: counts.iter().map(|(t, c)| (index[t], *c)).collect(),
            })
            .collect();
        let file = ModelFile {
            format: FORMAT.into(),
            version: VERSION,
            order: self.order,
            positions_per_bar: self.positions_per_bar,
            vocabulary: vocab.iter().map(Token::to_string).collect(),
            contexts,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<MarkovModel, MarkovError> {
        let bad = |msg: String| MarkovError::Format(msg);
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(bad(format!(
                "unsupported format {:?} version {}",
                file.format, file.version
            )));
        }
        if file.order == 0 {
            return Err(MarkovError::ZeroOrder);
        }
        if file.positions_per_bar == 0 {
            return Err(bad("positions_per_bar is zero".into()));
        }
        let vocab = vocabulary(file.positions_per_bar);
        let listed: Vec<String> = vocab.iter().map(Token::to_string).collect();
        if listed != file.vocabulary {
            return Err(bad("vocabulary does not match the grid".into()));
        }
        let lookup = |i: usize| vocab.get(i).copied().ok_or_else(|| bad(format!("token index {i} out of range")));
        let mut tables = vec![BTreeMap::<Vec<Token>, Counts>::new(); file.order + 1];
        for entry in file.contexts {
            let len = entry.context.len();
            if len > file.order {
                return Err(bad(format!("context of length {len} exceeds order {}", file.order)));
            }
            let ctx = entry.context.into_iter().map(lookup).collect::<Result<Vec<_>, _>>()?;
            let mut counts = Counts::new();
            for (i, c) in entry.next {
                if c == 0 {
                    return Err(bad("zero count".into()));
                }
                counts.insert(lookup(i)?, c);
            }
            if counts.is_empty() {
                return Err(bad("context without successors".into()));
            }
            if tables[len].insert(ctx, counts).is_some() {
                return Err(bad("duplicate context".into()));
            }
        }
        Ok(MarkovModel {
            order: file.order,
            positions_per_bar: file.positions_per_bar,
            tables,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), MarkovError> {
        std::fs::write(path, self.to_json()?).map_err(|source| MarkovError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<MarkovModel, MarkovError> {
        let text = std::fs::read_to_string(path).map_err(|source| MarkovError::Io {
            path: path.display().to_string(),
            source,
        })?;
        MarkovModel::from_json(&text)
    }
}

/// Samples the gap token by token from a [`MarkovModel`].
///
/// The chain is primed with the last `order` tokens of the past context and
/// the gap's opening `Bar`. Only grammar-legal tokens are considered at each
/// step, positions never move backwards inside a bar, and the bar after the
/// last requested one ends generation. A bar that reaches
/// [`MAX_NOTES_PER_BAR`] notes is closed by force.
#[derive(Debug, Clone)]
pub struct MarkovInfiller {
    model: MarkovModel,
}

impl MarkovInfiller {
    pub fn new(model: MarkovModel) -> Self {
        MarkovInfiller { model }
    }

    pub fn model(&self) -> &MarkovModel {
        &self.model
    }
}

impl Infiller for MarkovInfiller {
    fn name(&self) -> &str {
        "markov"
    }

    fn generate(&self, request: &ExpansionRequest, seed: u64) -> Result<TokenSequence, InfillError> {
        let q = self.model.positions_per_bar;
        if q != request.positions_per_bar() {
            return Err(InfillError::GridMismatch {
                infiller: q,
                context: request.positions_per_bar(),
            });
        }
        let order = self.model.order;
        let past = request.past().tokens();
        let mut history: Vec<Token> = past[past.len().saturating_sub(order)..].to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = GrammarState::new(q);
        let mut out = Vec::new();
        let mut bars = 0;
        let mut notes_in_bar = 0;
        let mut next = Token::Bar;
        loop {
            if next == Token::Bar {
                if bars == request.gap_bars() {
                    break;
                }
                bars += 1;
                notes_in_bar = 0;
            }
            state
                .advance(out.len(), next)
                .expect("sampled tokens are grammar-legal");
            out.push(next);
            if matches!(next, Token::Velocity(_)) {
                notes_in_bar += 1;
            }
            history.push(next);
            if history.len() > order {
                history.remove(0);
            }
            next = if notes_in_bar >= MAX_NOTES_PER_BAR && state.is_complete() {
                Token::Bar
            } else {
                self.model.sample_next(&history, &state, &mut rng)?
            };
        }
        Ok(TokenSequence::new(q, out).expect("generated stream is grammar-valid"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Token::*;

    fn seq(tokens: Vec<Token>) -> TokenSequence {
        TokenSequence::new(16, tokens).unwrap()
    }

    #[test]
    fn bigram_counts_by_hand() {
        let s = seq(vec![Bar, Position(0), Pitch(60), Duration(4), Velocity(5)]);
        let m = train_markov(&[s], 1).unwrap();
        let one = |t: Token| BTreeMap::from([(t, 1u64)]);
        assert_eq!(m.counts(&[Bar]), Some(&one(Position(0))));
        assert_eq!(m.counts(&[Position(0)]), Some(&one(Pitch(60))));
        assert_eq!(m.counts(&[Pitch(60)]), Some(&one(Duration(4))));
        assert_eq!(m.counts(&[Duration(4)]), Some(&one(Velocity(5))));
        assert_eq!(m.counts(&[Velocity(5)]), None);
        assert_eq!(m.contexts(1).count(), 4);
        // unigram table counts every token once
        assert_eq!(m.counts(&[]).unwrap().values().sum::<u64>(), 5);
    }

    #[test]
    fn training_errors() {
        assert!(matches!(train_markov(&[], 2), Err(MarkovError::EmptyCorpus)));
        let s = seq(vec![Bar]);
        assert!(matches!(train_markov(std::slice::from_ref(&s), 0), Err(MarkovError::ZeroOrder)));
        let t = TokenSequence::new(12, vec![Bar]).unwrap();
        assert!(matches!(train_markov(&[s, t], 1), Err(MarkovError::GridMismatch(16, 12))));
    }

    #[test]
    fn duplicated_corpus_doubles_counts() {
        let s = seq(vec![
            Bar, Position(0), Pitch(60), Duration(4), Velocity(5),
            Position(4), Pitch(62), Duration(2), Velocity(3), Bar,
        ]);
        let once = train_markov(std::slice::from_ref(&s), 2).unwrap();
        let twice = train_markov(&[s.clone(), s], 2).unwrap();
        for len in 0..=2 {
            let a: Vec<_> = once.contexts(len).collect();
            let b: Vec<_> = twice.contexts(len).collect();
            assert_eq!(a.len(), b.len());
            for ((ka, ca), (kb, cb)) in a.into_iter().zip(b) {
                assert_eq!(ka, kb);
                assert!(ca.iter().zip(cb).all(|((ta, na), (tb, nb))| ta == tb && 2 * na == *nb));
            }
        }
        let req = ExpansionRequest::new(
            seq(vec![Bar, Position(0), Pitch(60), Duration(4), Velocity(5)]),
            seq(vec![Bar]),
            3,
        )
        .unwrap();
        // same proportions, but the integer draw range differs, so compare the
        // normalized distributions rather than samples
        let norm = |m: &MarkovModel| -> Vec<(Token, f64)> {
            let c = m.counts(&[]).unwrap();
            let t: u64 = c.values().sum();
            c.iter().map(|(k, v)| (*k, *v as f64 / t as f64)).collect()
        };
        assert_eq!(norm(&once), norm(&twice));
        assert_eq!(MarkovInfiller::new(twice).generate(&req, 1).unwrap().bar_count(), 3);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = seq(vec![
            Bar, Position(0), Pitch(60), Duration(4), Velocity(5),
            Bar, Position(3), Pitch(64), Duration(1), Velocity(7),
        ]);
        let m = train_markov(&[s], 3).unwrap();
        let json = m.to_json().unwrap();
        assert_eq!(MarkovModel::from_json(&json).unwrap(), m);
        assert!(json.contains("\"POS 3\""));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["version"] = 2.into();
        assert!(matches!(MarkovModel::from_json(&v.to_string()), Err(MarkovError::Format(_))));
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["contexts"][0]["next"][0][0] = 100000.into();
        assert!(matches!(MarkovModel::from_json(&v.to_string()), Err(MarkovError::Format(_))));
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["positions_per_bar"] = 8.into();
        assert!(matches!(MarkovModel::from_json(&v.to_string()), Err(MarkovError::Format(_))));
        assert!(MarkovModel::from_json("{").is_err());
    }

    #[test]
    fn output_is_one_valid_bar_for_gap_one() {
        let corpus = seq(vec![
            Bar, Position(0), Pitch(60), Duration(4), Velocity(5),
            Position(2), Pitch(67), Duration(2), Velocity(4),
            Bar, Position(8), Pitch(62), Duration(8), Velocity(5), Bar,
        ]);
        let m = MarkovInfiller::new(train_markov(std::slice::from_ref(&corpus), 2).unwrap());
        let req = ExpansionRequest::new(corpus.clone(), corpus, 1).unwrap();
        for seed in 0..50 {
            let out = m.generate(&req, seed).unwrap();
            assert_eq!(out.bar_count(), 1);
            assert_eq!(out, m.generate(&req, seed).unwrap());
        }
    }

    #[test]
    fn note_cap_forces_a_bar() {
        // a chain that never samples Bar on its own once inside a bar
        let mut tokens = vec![Bar];
        for _ in 0..3 {
            tokens.extend([Position(0), Pitch(60), Duration(1), Velocity(0)]);
        }
        let m = MarkovInfiller::new(train_markov(&[seq(tokens)], 1).unwrap());
        let req = ExpansionRequest::new(seq(vec![Bar]), seq(vec![Bar]), 2).unwrap();
        let out = m.generate(&req, 3).unwrap();
        assert_eq!(out.bar_count(), 2);
        let notes = out.tokens().iter().filter(|t| matches!(t, Velocity(_))).count();
        assert_eq!(notes, 2 * MAX_NOTES_PER_BAR);
    }

    #[test]
    fn backs_off_when_context_successors_are_illegal() {
        let corpus = seq(vec![
            Bar, Position(0), Pitch(60), Duration(1), Velocity(0),
            Position(0), Pitch(60), Duration(1), Velocity(0),
        ]);
        let m = train_markov(&[corpus], 1).unwrap();
        assert_eq!(m.counts(&[Velocity(0)]), Some(&BTreeMap::from([(Position(0), 1)])));
        let mut state = GrammarState::new(16);
        for (i, t) in [Bar, Position(5), Pitch(60), Duration(1), Velocity(0)].into_iter().enumerate() {
            state.advance(i, t).unwrap();
        }
        // POS 0 is the only successor of VEL 0 but lies behind POS 5, so the
        // unigram table decides, where BAR is the only legal token
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(m.sample_next(&[Velocity(0)], &state, &mut rng), Ok(Bar));
        }
    }

    #[test]
    fn no_legal_token_is_an_error() {
        let m = train_markov(&[seq(vec![Bar])], 1).unwrap();
        let mut state = GrammarState::new(16);
        state.advance(0, Bar).unwrap();
        state.advance(1, Position(0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.sample_next(&[Position(0)], &state, &mut rng), Err(InfillError::NoLegalToken));
    }
}
