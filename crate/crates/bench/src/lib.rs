//! Seeded input generators shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stylecast_core::classify::{DatasetEmbeddingIndex, IndexEntry};
use stylecast_core::embed::EmbeddingVector;
use stylecast_core::manifest::CommentRecord;
use stylecast_core::platform::RawComment;
use stylecast_core::signal::{SignalKind, SignalSeries};
use stylecast_core::{Language, VideoCategory};

pub const HZ: f64 = 20.0;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Audio and light series of `seconds` length with a burst in the middle third.
pub fn signals(seconds: f64, seed: u64) -> (SignalSeries, SignalSeries) {
    let mut r = rng(seed);
    let n = (seconds * HZ) as usize;
    let mut gen = |burst: f64| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let base = r.gen_range(0.0..0.2);
                if i > n / 3 && i < 2 * n / 3 && i % 7 < 3 {
                    base + burst
                } else {
                    base
                }
            })
            .collect()
    };
    let a = gen(0.8);
    let l = gen(0.5);
    (
        SignalSeries::uniform(SignalKind::AudioAmplitude, HZ, 0.0, a).unwrap(),
        SignalSeries::uniform(SignalKind::LightIntensity, HZ, 0.0, l).unwrap(),
    )
}

pub fn comments(n: usize, seed: u64) -> Vec<CommentRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let words = r.gen_range(3..20);
            let text = (0..words).map(|w| format!("w{}", (i * 31 + w) % 97)).collect::<Vec<_>>().join(" ");
            CommentRecord::new(i.to_string(), "v", text, r.gen_range(0..5000), Language::En)
        })
        .collect()
}

pub fn raw_comments(n: usize, seed: u64) -> Vec<RawComment> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| RawComment { comment_id: i.to_string(), text: String::new(), like_count: r.gen_range(0..10_000) })
        .collect()
}

pub fn vector(dim: usize, r: &mut ChaCha8Rng) -> EmbeddingVector {
    EmbeddingVector::new((0..dim).map(|_| r.gen_range(-1.0..1.0)).collect(), "bench").unwrap()
}

pub fn index(videos: usize, dim: usize, seed: u64) -> (EmbeddingVector, DatasetEmbeddingIndex) {
    let mut r = rng(seed);
    let entries = (0..videos)
        .map(|i| IndexEntry {
            video_id: format!("v{i}"),
            category: VideoCategory::CURATED[i % 5],
            embedding: vector(dim, &mut r),
        })
        .collect();
    (vector(dim, &mut r), DatasetEmbeddingIndex::from_entries(entries))
}
