#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use score_expansion::midi::{NoteEvent, QuantizedNote, QuantizedScore, Score};
use score_expansion::tokenizer::{MAX_PITCH, MIN_PITCH};

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn corpus_dir() -> PathBuf {
    fixtures_dir().join("corpus")
}

pub fn random_score<R: Rng>(rng: &mut R, notes: usize) -> Score {
    let tpq = [96u16, 120, 384, 480, 960][rng.gen_range(0..5)];
    let notes = (0..notes)
        .map(|_| {
            NoteEvent::new(
                rng.gen_range(0..=127),
                rng.gen_range(0..40_000),
                rng.gen_range(1..4_000),
                rng.gen_range(1..=127),
            )
        })
        .collect();
    Score::new(tpq, notes).unwrap()
}

pub fn random_quantized<R: Rng>(rng: &mut R, q: u16, bars: usize, notes: usize) -> QuantizedScore {
    let mut out = vec![Vec::new(); bars];
    for _ in 0..notes {
        let bar = rng.gen_range(0..bars);
        out[bar].push(QuantizedNote::new(
            rng.gen_range(0..q),
            rng.gen_range(MIN_PITCH..=MAX_PITCH),
            rng.gen_range(1..=2 * q),
            rng.gen_range(1..=127),
        ));
    }
    QuantizedScore::new(q, out)
}
