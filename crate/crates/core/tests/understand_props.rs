use proptest::prelude::*;
use stylecast_core::classify::{classify_embedding, ClassifyParams, DatasetEmbeddingIndex, IndexEntry};
use stylecast_core::describe::{
    describe_video, normalize_transcript, uniform_indices, DescribeRequest, MockDescriber, RawSegment, VideoMeta,
};
use stylecast_core::embed::{cosine_similarity, EmbeddingVector};
use stylecast_core::manifest::TranscriptSegment;
use stylecast_core::provider::RetryPolicy;
use stylecast_core::{Language, VideoCategory};

fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, dim).prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
}

fn ev(v: Vec<f64>) -> EmbeddingVector {
    EmbeddingVector::new(v, "test").unwrap()
}

fn index_of(entries: &[(usize, Vec<f64>)], scale: f64) -> DatasetEmbeddingIndex {
    DatasetEmbeddingIndex::from_entries(
        entries
            .iter()
            .enumerate()
            .map(|(i, (c, v))| IndexEntry {
                video_id: format!("v{i}"),
                category: VideoCategory::CURATED[*c],
                embedding: ev(v.iter().map(|x| x * scale).collect()),
            })
            .collect(),
    )
}

proptest! {
    #[test]
    fn cosine_is_symmetric_bounded_and_scale_free(
        (a, b) in (1usize..32).prop_flat_map(|d| (vector(d), vector(d))),
        lambda in 1e-3..1e3f64,
    ) {
        let ab = cosine_similarity(&ev(a.clone()), &ev(b.clone())).unwrap();
        let ba = cosine_similarity(&ev(b.clone()), &ev(a.clone())).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab.abs() <= 1.0 + 1e-9);
        let scaled = cosine_similarity(&ev(a.iter().map(|x| x * lambda).collect()), &ev(b)).unwrap();
        prop_assert!((scaled - ab).abs() < 1e-9);
    }

    #[test]
    fn classification_ignores_uniform_rescaling(
        (target, entries) in (2usize..12).prop_flat_map(|d| (vector(d), prop::collection::vec((0usize..5, vector(d)), 1..60))),
        scale in 1e-2..1e2f64,
    ) {
        let params = ClassifyParams::default();
        let target = ev(target);
        let a = classify_embedding(&target, &index_of(&entries, 1.0), &params).unwrap();
        let b = classify_embedding(&target, &index_of(&entries, scale), &params).unwrap();
        // Scaling moves sums by rounding error only; exact near-ties may flip.
        let mut sums: Vec<f64> = a.per_category_scores.values().copied().collect();
        sums.sort_by(|x, y| y.total_cmp(x));
        prop_assume!(sums[0] - sums[1] > 1e-9);
        prop_assert_eq!(a.best_curated, b.best_curated);
        prop_assert_eq!(a.category, b.category);
    }

    #[test]
    fn classification_matches_pairwise_oracle(
        (target, entries) in (2usize..12).prop_flat_map(|d| (vector(d), prop::collection::vec((0usize..5, vector(d)), 1..100))),
    ) {
        let params = ClassifyParams::default();
        let t = ev(target);
        let got = classify_embedding(&t, &index_of(&entries, 1.0), &params).unwrap();
        let mut sums = [0.0; 5];
        let mut counts = [0usize; 5];
        for (c, v) in &entries {
            sums[*c] += cosine_similarity(&t, &ev(v.clone())).unwrap();
            counts[*c] += 1;
        }
        let mut best = 0;
        for i in 1..5 {
            if sums[i] > sums[best] {
                best = i;
            }
        }
        prop_assert_eq!(got.best_curated, VideoCategory::CURATED[best]);
        let mean = if counts[best] == 0 { 0.0 } else { sums[best] / counts[best] as f64 };
        prop_assert_eq!(got.fallback_applied, mean < params.fallback_threshold);
        for (i, c) in VideoCategory::CURATED.iter().enumerate() {
            prop_assert_eq!(got.per_category_scores[c], sums[i]);
        }
    }

    #[test]
    fn frame_subsampling_keeps_ends_and_order(n in 0usize..500, max in 1usize..64) {
        let idx = uniform_indices(n, max);
        prop_assert_eq!(idx.len(), n.min(max));
        prop_assert!(idx.windows(2).all(|p| p[0] < p[1]));
        if n > 0 {
            prop_assert_eq!(idx[0], 0);
            if max >= 2 {
                prop_assert_eq!(*idx.last().unwrap(), n - 1);
            }
        }
    }

    #[test]
    fn normalized_transcript_is_sorted_and_disjoint(
        raw in prop::collection::vec((0.0..60.0f64, 0.0..10.0f64, "[a-z ]{0,8}"), 0..30),
        frames in prop::collection::vec(0.0..70.0f64, 0..40),
    ) {
        let mut frames = frames;
        frames.sort_by(f64::total_cmp);
        let raw: Vec<RawSegment> = raw
            .into_iter()
            .map(|(start_s, len, text)| RawSegment { start_s, end_s: start_s + len, text })
            .collect();
        let out = normalize_transcript(raw, &frames);
        for s in &out {
            prop_assert!(s.start_s <= s.end_s);
            prop_assert!(!s.text.trim().is_empty());
            for &i in &s.linked_frame_indices {
                prop_assert!(frames[i] >= s.start_s && frames[i] < s.end_s);
            }
        }
        for p in out.windows(2) {
            prop_assert!(p[0].end_s <= p[1].start_s);
            prop_assert!(p[0].start_s <= p[1].start_s);
        }
    }

    #[test]
    fn mock_description_is_deterministic(
        title in "[A-Za-z ]{1,20}",
        lines in prop::collection::vec("[a-z ]{1,12}", 0..4),
        frames in 0usize..50,
        zh in any::<bool>(),
    ) {
        prop_assume!(frames > 0 || !lines.is_empty());
        let transcript = lines
            .iter()
            .enumerate()
            .map(|(i, text)| TranscriptSegment {
                start_s: i as f64,
                end_s: i as f64 + 0.5,
                text: text.clone(),
                linked_frame_indices: vec![],
            })
            .collect();
        let request = DescribeRequest {
            transcript,
            frame_paths: (0..frames).map(|i| format!("v/frames/frame_{i:06}.jpg")).collect(),
            meta: VideoMeta { title, description: String::new(), duration_s: 12.0 },
            language: if zh { Language::Zh } else { Language::En },
            max_frames: 32,
        };
        let a = describe_video(&request, &MockDescriber, RetryPolicy::default()).unwrap();
        let b = describe_video(&request, &MockDescriber, RetryPolicy::default()).unwrap();
        prop_assert_eq!(a, b);
    }
}
