use std::path::{Path, PathBuf};

use proptest::prelude::*;
use stylecast_core::classify::build_embedding_index;
use stylecast_core::dataset::DatasetBundle;
use stylecast_core::embed::MockEmbedder;
use stylecast_core::generate::{
    build_prompt, generate_comment, generate_for_video, FewShot, GenerationDeps, GenerationParams, GenerationRequest,
    MockGenerator, StyleChoice,
};
use stylecast_core::manifest::{CommentRecord, VideoManifestEntry};
use stylecast_core::prompts::GENERATE_V1;
use stylecast_core::provider::RetryPolicy;
use stylecast_core::score::{
    length_part, originality_score, relevance_score, score_comment, BenchPair, ScoringContext, ScoringParams, ScoringProviders,
};
use stylecast_core::select::{run_tournament, HeuristicScorer, ScoreOutcome, SelectionParams, StyleScorer, VideoContext};
use stylecast_core::sentiment::LexiconSentiment;
use stylecast_core::text::{comment_length, shares_substring};
use stylecast_core::{Language, Platform, Sentiment, StyleLabel};

struct Lookup(Vec<f64>);

impl StyleScorer for Lookup {
    fn score(&self, c: &CommentRecord, _: &VideoContext, p: &SelectionParams) -> stylecast_core::Result<ScoreOutcome> {
        let v = self.0[c.comment_id.parse::<usize>().unwrap()];
        Ok(ScoreOutcome {
            score: p.combine(v, v, v),
            retries: 0,
            fallback: false,
        })
    }
}

fn video() -> VideoContext {
    VideoContext {
        description: "a dog steals a sandwich".into(),
        language: Language::En,
        sentiment: Sentiment::Positive,
        profile: vec![1.0; 10],
        length_mid: 67.5,
    }
}

fn pool(likes: &[u64]) -> Vec<CommentRecord> {
    likes
        .iter()
        .enumerate()
        .map(|(i, l)| CommentRecord::new(i.to_string(), "v", format!("comment number {i}!"), *l, Language::En))
        .collect()
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/e2e")
}

proptest! {
    #[test]
    fn tournament_winner_is_argmax_of_the_scored_pool(
        scores in prop::collection::vec(0u8..6, 1..200),
        pool_size in 1usize..250,
        groups in 1usize..15,
        jobs in 1usize..5,
        seed in any::<u64>(),
    ) {
        let n = scores.len();
        let scores: Vec<f64> = scores.into_iter().map(|s| s as f64 / 5.0).collect();
        let likes: Vec<u64> = (0..n as u64).map(|i| (i * 7919) % 97).collect();
        let params = SelectionParams { pool_size, group_count: groups, seed, ..SelectionParams::default() };
        let r = run_tournament(&pool(&likes), &video(), &params, &Lookup(scores.clone()), jobs).unwrap();
        // Over the scored members, the winner is the first maximum.
        let members = &r.trace.pool_source_indices;
        let totals: Vec<f64> = members.iter().map(|i| params.combine(scores[*i], scores[*i], scores[*i]).total).collect();
        let mut best = 0;
        for i in 1..totals.len() {
            if totals[i] > totals[best] {
                best = i;
            }
        }
        prop_assert_eq!(r.template_index, best);
        prop_assert_eq!(&r.template.comment_id, &members[best].to_string());
        let covered: usize = r.trace.groups.iter().map(|g| g.len()).sum();
        prop_assert_eq!(covered, members.len());
        if pool_size >= n {
            prop_assert_eq!(members.len(), n);
        }
    }

    #[test]
    fn permuting_inside_a_group_keeps_its_winner(
        n in 2usize..120,
        groups in 1usize..10,
        which in any::<prop::sample::Index>(),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        // Distinct scores: no ties, so identity is fully determined.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        scores.shuffle(&mut rng);
        let params = SelectionParams { pool_size: n, group_count: groups, ..SelectionParams::default() };
        let base = pool(&vec![1; n]);
        let r = run_tournament(&base, &video(), &params, &Lookup(scores.clone()), 1).unwrap();
        let g = r.trace.groups[which.index(r.trace.groups.len())].clone();
        let winner_id = base[r.group_winners[r.trace.groups.iter().position(|x| *x == g).unwrap()]].comment_id.clone();

        let mut permuted = base.clone();
        permuted[g.clone()].shuffle(&mut rng);
        let r2 = run_tournament(&permuted, &video(), &params, &Lookup(scores), 1).unwrap();
        let gi = r2.trace.groups.iter().position(|x| *x == g).unwrap();
        prop_assert_eq!(&permuted[r2.group_winners[gi]].comment_id, &winner_id);
        prop_assert_eq!(&r2.template.comment_id, &r.template.comment_id);
    }

    #[test]
    fn combined_score_is_the_weighted_sum(a in 0u32..=20, b in 0u32..=20, s in 0.0..=1.0f64, t in 0.0..=1.0f64, l in 0.0..=1.0f64) {
        prop_assume!(a + b <= 20);
        let (alpha, beta) = (a as f64 / 20.0, b as f64 / 20.0);
        let params = SelectionParams { alpha, beta, gamma: 1.0 - alpha - beta, ..SelectionParams::default() };
        prop_assume!(params.validate().is_ok());
        let out = params.combine(s, t, l);
        prop_assert!((out.total - (alpha * s + beta * t + (1.0 - alpha - beta) * l)).abs() < 1e-12);
    }

    #[test]
    fn seeded_tournament_is_reproducible(
        likes in prop::collection::vec(0u64..1000, 1..150),
        pool_size in 1usize..100,
        seed in any::<u64>(),
    ) {
        let p = pool(&likes);
        let params = SelectionParams { pool_size, seed, ..SelectionParams::default() };
        let scorer = HeuristicScorer { sentiment: &LexiconSentiment };
        let a = run_tournament(&p, &video(), &params, &scorer, 1).unwrap();
        let b = run_tournament(&p, &video(), &params, &scorer, 3).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn originality_is_antitone(x in -1.0..=1.0f64, y in -1.0..=1.0f64) {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        prop_assert!(originality_score(lo) >= originality_score(hi));
        prop_assert_eq!(originality_score(1.0), 0.0);
        prop_assert_eq!(originality_score(0.0), 10.0);
    }

    #[test]
    fn relevance_peaks_at_baseline_and_is_symmetric(b in -1.0..=1.0f64, d in 0.0..=2.0f64, sigma in 0.01..=1.0f64) {
        let up = relevance_score(b + d, b, sigma);
        let down = relevance_score(b - d, b, sigma);
        prop_assert!((up - down).abs() < 1e-12);
        prop_assert!(up <= relevance_score(b, b, sigma));
    }

    #[test]
    fn length_part_is_continuous(eps in 1e-12..1e-7f64) {
        let p = ScoringParams::default();
        for band in [p.band_en, p.band_zh] {
            for edge in [band.min, band.max] {
                prop_assert!((length_part(edge - eps, band) - 5.0).abs() < 1e-6);
                prop_assert!((length_part(edge + eps, band) - 5.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn score_report_recomputes(comment in "[a-z!?. ]{1,200}", video_text in "[a-z ]{1,80}", zh in any::<bool>()) {
        let language = if zh { Language::Zh } else { Language::En };
        let bench = vec![
            BenchPair { comment: "what a great dog".into(), video_text: "a dog steals a sandwich".into() },
            BenchPair { comment: "terrible parking".into(), video_text: "a car parks badly".into() },
        ];
        let embedder = MockEmbedder::default();
        let ctx = ScoringContext::build(&bench, &["so funny".into()], &embedder, None, ScoringParams::default(), RetryPolicy::default()).unwrap();
        let providers = ScoringProviders { embedder: &embedder, cache: None, sentiment: &LexiconSentiment, retry: RetryPolicy::default() };
        let Ok(r) = score_comment(&comment, language, &video_text, &ctx, &providers) else {
            // Text with no tokens has no embedding direction.
            return Ok(());
        };
        prop_assert!((0.0..=10.0).contains(&r.s_total));
        prop_assert_eq!(r.length, comment_length(&comment, language));
        let style = r.s_length_part + if r.comment_sentiment == r.video_sentiment { 5.0 } else { 0.0 };
        let orig = (10.0 * (1.0 - r.sim_max)).clamp(0.0, 10.0);
        let rel = 10.0 * (-(r.sim_to_video - r.sim_baseline).powi(2) / (2.0 * ctx.sigma * ctx.sigma)).exp();
        prop_assert!((r.s_style - style).abs() < 1e-12);
        prop_assert!((r.s_originality - orig).abs() < 1e-12);
        prop_assert!((r.s_relevance - rel).abs() < 1e-12);
        prop_assert!((r.s_total - (orig + rel + style) / 3.0).abs() < 1e-12);
        let again = score_comment(&comment, language, &video_text, &ctx, &providers).unwrap();
        prop_assert_eq!(again, r);
    }

    #[test]
    fn template_text_never_leaks_into_the_comment(
        template in "[a-z]{3,9}( [a-z]{3,9}){3,12}",
        description in "[A-Z][a-z]{2,8}( [a-z]{2,8}){2,20}",
        style in 0usize..6,
        zh in any::<bool>(),
    ) {
        prop_assume!(!shares_substring(&template, &description, 10));
        let language = if zh { Language::Zh } else { Language::En };
        let style = StyleLabel::ALL[style];
        let request = GenerationRequest {
            video_description: description,
            style_template: CommentRecord::new("t", "v", template.clone(), 10, language).with_style(style),
            style,
            language,
            few_shot: vec![],
            instruction_version: GENERATE_V1.into(),
        };
        let out = generate_comment(&request, &MockGenerator, &GenerationParams::default(), RetryPolicy::default()).unwrap();
        prop_assert!(!shares_substring(&out.text, &template, 10), "{:?} leaks {:?}", out.text, template);
    }
}

fn golden_request() -> GenerationRequest {
    GenerationRequest {
        video_description: "A cat leaps away from a cucumber placed behind it while it eats.".into(),
        style_template: CommentRecord::new("t1", "v9", "When the snack fights back, you learn humility.", 50, Language::En)
            .with_style(StyleLabel::SarcasmIrony),
        style: StyleLabel::SarcasmIrony,
        language: Language::En,
        few_shot: vec![
            FewShot {
                description: "A dog steals a sandwich from the table.".into(),
                comment: "Oh sure, the dog definitely paid for that sandwich.".into(),
            },
            FewShot {
                description: "A toddler argues with a roomba.".into(),
                comment: "Great, the roomba is winning the debate. Very reassuring.".into(),
            },
        ],
        instruction_version: GENERATE_V1.into(),
    }
}

#[test]
fn prompt_matches_golden_file() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/prompt_en.txt");
    let doc = build_prompt(&golden_request()).unwrap();
    let rendered = doc.render();
    assert_eq!(rendered, build_prompt(&golden_request()).unwrap().render());
    if std::env::var_os("STYLECAST_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &rendered).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(rendered, golden, "prompt drifted from {}", path.display());
}

#[test]
fn mock_generation_is_deterministic_end_to_end() {
    let dataset = DatasetBundle::load(&fixtures().join("dataset.json")).unwrap();
    let embedder = MockEmbedder::default();
    let index = build_embedding_index(&dataset, &embedder, None, RetryPolicy::default(), 2).unwrap();
    let scorer = HeuristicScorer { sentiment: &LexiconSentiment };
    let deps = GenerationDeps {
        dataset: &dataset,
        index: &index,
        embedder: &embedder,
        embed_cache: None,
        sentiment: &LexiconSentiment,
        scorer: &scorer,
        generator: &MockGenerator,
        classify: Default::default(),
        selection: SelectionParams { pool_size: 20, group_count: 4, seed: 9, ..SelectionParams::default() },
        generation: GenerationParams::default(),
        retry: RetryPolicy::default(),
        jobs: 2,
    };
    let mut v = VideoManifestEntry::new("youtube-x", Platform::Youtube, "https://youtu.be/x");
    v.semantic_description = "A dog steals a sandwich from the kitchen table while the family watches.".into();
    let a = generate_for_video(&v, StyleChoice::Auto, &deps).unwrap();
    let b = generate_for_video(&v, StyleChoice::Auto, &deps).unwrap();
    assert_eq!(a, b);
    assert!(!a.comment.text.is_empty());

    v.semantic_description.clear();
    let err = generate_for_video(&v, StyleChoice::Auto, &deps).unwrap_err();
    assert!(err.to_string().contains("run describe first"), "{err}");
}
