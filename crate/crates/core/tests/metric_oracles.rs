//! Metric functions against straightforward re-implementations.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use score_expansion::metrics::{gs_pair, gs_segments, register_histogram, rhs, GroovingVector, RegisterHistogram};
use score_expansion::midi::QuantizedScore;
use score_expansion::tokenizer::encode;

fn oracle_gs_masks(a: u64, b: u64, q: u32) -> f64 {
    1.0 - f64::from((a ^ b).count_ones()) / f64::from(q)
}

fn masks(qs: &QuantizedScore) -> Vec<u64> {
    qs.bars
        .iter()
        .map(|bar| bar.iter().fold(0u64, |m, n| m | 1 << n.position))
        .collect()
}

fn oracle_gs_segments(a: &QuantizedScore, b: &QuantizedScore) -> f64 {
    let q = u32::from(a.positions_per_bar);
    let (ma, mb) = (masks(a), masks(b));
    let mut total = 0.0;
    for x in &ma {
        for y in &mb {
            total += oracle_gs_masks(*x, *y, q);
        }
    }
    total / (ma.len() * mb.len()) as f64
}

fn oracle_histogram(qs: &QuantizedScore) -> [f64; 7] {
    let mut counts = [0u32; 7];
    for n in qs.bars.iter().flatten() {
        let octave = if n.pitch < 24 { 0 } else { (usize::from(n.pitch) / 12 - 2).min(6) };
        counts[octave] += 1;
    }
    let total: u32 = counts.iter().sum();
    let eps = 1e-6;
    counts.map(|c| {
        let p = if total == 0 { 1.0 / 7.0 } else { f64::from(c) / f64::from(total) };
        (p + eps) / (1.0 + 7.0 * eps)
    })
}

fn oracle_rhs(h1: &[f64; 7], h2: &[f64; 7]) -> f64 {
    (0..7).rev().map(|i| h1[i] * (h2[i].ln() / std::f64::consts::LN_2)).sum()
}

#[test]
fn gs_pair_matches_bitmask_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2000 {
        let q: u16 = rng.gen_range(1..=64);
        let full = if q == 64 { u64::MAX } else { (1u64 << q) - 1 };
        let (a, b) = (rng.gen::<u64>() & full, rng.gen::<u64>() & full);
        let onsets = |m: u64| (0..q).filter(move |i| m >> i & 1 == 1);
        let ga = GroovingVector::from_onsets(q, onsets(a));
        let gb = GroovingVector::from_onsets(q, onsets(b));
        let got = gs_pair(&ga, &gb).unwrap();
        assert_eq!(got, oracle_gs_masks(a, b, u32::from(q)));
        assert_eq!(got, gs_pair(&gb, &ga).unwrap());
    }
}

#[test]
fn segment_metrics_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let (bars, notes) = (rng.gen_range(1..6), rng.gen_range(0..40));
        let a = common::random_quantized(&mut rng, 16, bars, notes);
        let (bars, notes) = (rng.gen_range(1..6), rng.gen_range(0..40));
        let b = common::random_quantized(&mut rng, 16, bars, notes);
        let (ta, tb) = (encode(&a), encode(&b));
        assert!((gs_segments(&ta, &tb).unwrap() - oracle_gs_segments(&a, &b)).abs() < 1e-12);
        let (ha, hb) = (register_histogram(&ta), register_histogram(&tb));
        for (x, y) in ha.bins().iter().zip(oracle_histogram(&a)) {
            assert!((x - y).abs() < 1e-15);
        }
        let want = oracle_rhs(&oracle_histogram(&a), &oracle_histogram(&b));
        assert!((rhs(&ha, &hb).unwrap() - want).abs() < 1e-12);
    }
}

#[test]
fn rhs_never_exceeds_self_similarity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..500 {
        let h1 = RegisterHistogram::from_weights(std::array::from_fn(|_| rng.gen_range(0.0..1.0))).smoothed();
        let h2 = RegisterHistogram::from_weights(std::array::from_fn(|_| rng.gen_range(0.0..1.0))).smoothed();
        assert!(rhs(&h1, &h1).unwrap() >= rhs(&h1, &h2).unwrap() - 1e-12);
    }
}

#[test]
fn rhs_rejects_zero_bins() {
    let h = RegisterHistogram::from_pitches([60]);
    assert!(rhs(&h.smoothed(), &h).is_err());
    assert!(rhs(&h, &h.smoothed()).is_ok());
}
