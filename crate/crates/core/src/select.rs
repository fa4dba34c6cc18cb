//! Style-template selection: a weighted style-matching score and a two-round
//! tournament over the category's comment pool.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Language, Sentiment};
use crate::embed::cosine;
use crate::error::{Error, Result};
use crate::manifest::CommentRecord;
use crate::prompts::{self, JUDGE_V1};
use crate::provider::{ChatMessage, ChatRequest, HttpJsonClient, ProviderError};
use crate::sentiment::SentimentProvider;
use crate::text::{comment_length, is_sentence_end, tokens};

/// Handcrafted structure features, in this order: sentence count, seven
/// punctuation classes (comma, period, exclamation, question, ellipsis,
/// quote, dash/tilde), emoji count, interjection count.
pub const FEATURE_DIM: usize = 10;

const INTERJECTIONS_EN: &[&str] = &[
    "haha", "hahaha", "lol", "lmao", "omg", "wow", "oh", "ah", "ha", "bruh", "yay", "ugh", "oops", "hey", "whoa",
];
const INTERJECTIONS_ZH: &[char] = &['哈', '啊', '哇', '呀', '嘿', '呜', '哎', '唉', '嗯', '哦', '噢', '嘻'];

fn punct_class(c: char) -> Option<usize> {
    Some(match c {
        ',' | '，' | '、' | ';' | '；' | ':' | '：' => 0,
        '.' | '。' => 1,
        '!' | '！' => 2,
        '?' | '？' => 3,
        '…' => 4,
        '"' | '\'' | '“' | '”' | '‘' | '’' | '「' | '」' | '『' | '』' => 5,
        '-' | '~' | '～' | '—' => 6,
        _ => return None,
    })
}

fn is_emoji(c: char) -> bool {
    matches!(c as u32, 0x1F300..=0x1FAFF | 0x2600..=0x27BF | 0x1F000..=0x1F2FF)
}

pub fn style_features(text: &str) -> [f64; FEATURE_DIM] {
    let mut f = [0.0; FEATURE_DIM];
    let sentences = text
        .split(is_sentence_end)
        .filter(|s| s.chars().any(|c| c.is_alphanumeric()))
        .count();
    f[0] = sentences.max(1) as f64;
    for c in text.chars() {
        if let Some(k) = punct_class(c) {
            f[1 + k] += 1.0;
        }
        if is_emoji(c) {
            f[8] += 1.0;
        }
        if INTERJECTIONS_ZH.contains(&c) {
            f[9] += 1.0;
        }
    }
    f[9] += tokens(text)
        .iter()
        .filter(|t| INTERJECTIONS_EN.contains(&t.as_str()))
        .count() as f64;
    f
}

/// Mean feature vector of a category's comments.
pub fn category_profile<'a>(comments: impl IntoIterator<Item = &'a CommentRecord>) -> Vec<f64> {
    let mut sum = vec![0.0; FEATURE_DIM];
    let mut n = 0usize;
    for c in comments {
        for (s, x) in sum.iter_mut().zip(style_features(&c.text)) {
            *s += x;
        }
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

/// Midpoint of the full-score length band of the platform language.
pub fn default_length_mid(language: Language) -> f64 {
    match language {
        Language::Zh => 30.0,
        Language::En => 67.5,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoContext {
    pub description: String,
    pub language: Language,
    pub sentiment: Sentiment,
    pub profile: Vec<f64>,
    pub length_mid: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Heuristic,
    LlmJudge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    pub pool_size: usize,
    pub group_count: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub scorer_kind: ScorerKind,
    pub seed: u64,
    pub sigma_sel_zh: f64,
    pub sigma_sel_en: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            pool_size: 100,
            group_count: 10,
            alpha: 0.4,
            beta: 0.3,
            gamma: 0.3,
            scorer_kind: ScorerKind::Heuristic,
            seed: 0,
            sigma_sel_zh: 4.0,
            sigma_sel_en: 5.0,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<()> {
        let w = [self.alpha, self.beta, self.gamma];
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "alpha, beta, gamma must be non-negative and sum to 1 (got {}, {}, {})",
                self.alpha, self.beta, self.gamma
            )));
        }
        if self.group_count == 0 || self.pool_size == 0 {
            return Err(Error::InvalidParams("pool_size and group_count must be at least 1".into()));
        }
        if !(self.sigma_sel_zh > 0.0 && self.sigma_sel_en > 0.0) {
            return Err(Error::InvalidParams("sigma_sel must be positive".into()));
        }
        Ok(())
    }

    pub fn sigma_sel(&self, language: Language) -> f64 {
        match language {
            Language::Zh => self.sigma_sel_zh,
            Language::En => self.sigma_sel_en,
        }
    }

    pub fn combine(&self, s_struct: f64, s_tone: f64, s_length: f64) -> StyleScore {
        StyleScore {
            total: self.alpha * s_struct + self.beta * s_tone + self.gamma * s_length,
            s_struct,
            s_tone,
            s_length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StyleScore {
    pub total: f64,
    pub s_struct: f64,
    pub s_tone: f64,
    pub s_length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreOutcome {
    pub score: StyleScore,
    pub retries: u32,
    /// The judge gave up and the heuristic score was used instead.
    pub fallback: bool,
}

pub trait StyleScorer: Sync {
    fn score(&self, comment: &CommentRecord, video: &VideoContext, params: &SelectionParams) -> Result<ScoreOutcome>;
}

pub fn selection_length_score(len: usize, length_mid: f64, sigma: f64) -> f64 {
    let d = len as f64 - length_mid;
    (-(d * d) / (2.0 * sigma * sigma)).exp()
}

pub struct HeuristicScorer<'a> {
    pub sentiment: &'a dyn SentimentProvider,
}

impl HeuristicScorer<'_> {
    pub fn components(&self, comment: &CommentRecord, video: &VideoContext, params: &SelectionParams) -> Result<StyleScore> {
        let s_struct = cosine(&style_features(&comment.text), &video.profile)
            .map(|c| c.clamp(0.0, 1.0))
            .unwrap_or(0.0);
        let sentiment = self
            .sentiment
            .classify(&comment.text)
            .map_err(|e| Error::provider(self.sentiment.id(), e))?;
        let s_tone = if sentiment == video.sentiment { 1.0 } else { 0.0 };
        let s_length = selection_length_score(
            comment_length(&comment.text, comment.language),
            video.length_mid,
            params.sigma_sel(comment.language),
        );
        Ok(params.combine(s_struct, s_tone, s_length))
    }
}

impl StyleScorer for HeuristicScorer<'_> {
    fn score(&self, comment: &CommentRecord, video: &VideoContext, params: &SelectionParams) -> Result<ScoreOutcome> {
        Ok(ScoreOutcome {
            score: self.components(comment, video, params)?,
            retries: 0,
            fallback: false,
        })
    }
}

pub trait JudgeProvider: Send + Sync {
    fn id(&self) -> &str;
    fn judge(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError>;
}

pub fn judge_payload(comment: &CommentRecord, video: &VideoContext, model: &str) -> Result<ChatRequest> {
    let hint = match video.language {
        Language::Zh => format!("about {} characters", video.length_mid),
        Language::En => format!("about {} words", video.length_mid),
    };
    let system = prompts::render(prompts::template(JUDGE_V1)?, &[("length_hint", &hint)]);
    let user = format!(
        "Video description:\n{}\n\nVideo mood: {}\n\nCandidate comment:\n{}",
        video.description,
        video.sentiment.as_str(),
        comment.text
    );
    Ok(ChatRequest {
        model: model.to_string(),
        messages: vec![ChatMessage::text("system", system), ChatMessage::text("user", user)],
    })
}

/// Parse `{"struct": x, "tone": y, "length": z}`, tolerating prose around the
/// object. Every component must lie in [0, 1].
pub fn parse_judge_output(text: &str) -> Option<(f64, f64, f64)> {
    #[derive(Deserialize)]
    struct Raw {
        #[serde(rename = "struct")]
        s_struct: f64,
        tone: f64,
        length: f64,
    }
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    let raw: Raw = serde_json::from_str(text.get(start..=end)?).ok()?;
    let ok = |x: f64| (0.0..=1.0).contains(&x);
    (ok(raw.s_struct) && ok(raw.tone) && ok(raw.length)).then_some((raw.s_struct, raw.tone, raw.length))
}

/// Asks a judge model for the three components and recomputes the total
/// locally. Unparseable output or provider failure is retried, then the
/// heuristic scorer takes over and the outcome is flagged.
pub struct LlmJudgeScorer<'a> {
    pub judge: &'a dyn JudgeProvider,
    pub model: String,
    pub max_retries: u32,
    pub fallback: HeuristicScorer<'a>,
}

impl StyleScorer for LlmJudgeScorer<'_> {
    fn score(&self, comment: &CommentRecord, video: &VideoContext, params: &SelectionParams) -> Result<ScoreOutcome> {
        let payload = judge_payload(comment, video, &self.model)?;
        for attempt in 0..=self.max_retries {
            match self.judge.judge(&payload) {
                Ok(text) => {
                    if let Some((s, t, l)) = parse_judge_output(&text) {
                        return Ok(ScoreOutcome {
                            score: params.combine(s, t, l),
                            retries: attempt,
                            fallback: false,
                        });
                    }
                    tracing::warn!(judge = self.judge.id(), attempt, "unparseable judge output");
                }
                Err(e) => tracing::warn!(judge = self.judge.id(), attempt, error = %e, "judge call failed"),
            }
        }
        Ok(ScoreOutcome {
            score: self.fallback.components(comment, video, params)?,
            retries: self.max_retries,
            fallback: true,
        })
    }
}

/// Replays canned responses in order, repeating the last one.
pub struct ScriptedJudge {
    responses: Vec<std::result::Result<String, ProviderError>>,
    next: std::sync::atomic::AtomicUsize,
}

impl ScriptedJudge {
    pub fn new(responses: Vec<std::result::Result<String, ProviderError>>) -> Self {
        Self {
            responses,
            next: Default::default(),
        }
    }

    pub fn calls(&self) -> usize {
        self.next.load(std::sync::atomic::Ordering::SeqCst)
    }
}

impl JudgeProvider for ScriptedJudge {
    fn id(&self) -> &str {
        "mock-judge"
    }

    fn judge(&self, _payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        let i = self.next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        match self.responses.get(i.min(self.responses.len().saturating_sub(1))) {
            Some(r) => r.clone(),
            None => Err(ProviderError::Unavailable("no scripted response".into())),
        }
    }
}

/// Offline judge: neutral structure and tone, and a length score from the
/// candidate's size relative to the hinted length.
#[derive(Debug, Default)]
pub struct MockJudge;

impl JudgeProvider for MockJudge {
    fn id(&self) -> &str {
        "mock-judge"
    }

    fn judge(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        let text: String = payload
            .messages
            .iter()
            .flat_map(|m| &m.content)
            .filter_map(|p| match p {
                crate::provider::ContentPart::Text { text } => Some(text.as_str()),
                _ => None,
            })
            .collect::<Vec<_>>()
            .join("\n");
        let candidate = text
            .split_once("Candidate comment:\n")
            .map(|(_, c)| c.trim())
            .ok_or_else(|| ProviderError::Malformed("no candidate in judge prompt".into()))?;
        let size = candidate.chars().filter(|c| !c.is_whitespace()).count() as f64;
        let length = (size / 60.0).min(1.0);
        Ok(format!(r#"{{"struct": 0.5, "tone": 0.5, "length": {length:.3}}}"#))
    }
}

pub struct HttpJudge {
    client: HttpJsonClient,
}

impl HttpJudge {
    pub fn new(client: HttpJsonClient) -> Self {
        Self { client }
    }

    pub fn model(&self) -> &str {
        self.client.model()
    }
}

impl JudgeProvider for HttpJudge {
    fn id(&self) -> &str {
        self.client.endpoint()
    }

    fn judge(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        self.client.chat(payload)
    }
}

/// Indices of the `pool_size` most-liked comments, in their original order.
/// Ties in like count are broken by a seeded shuffle.
pub fn subsample_pool(pool: &[CommentRecord], pool_size: usize, seed: u64) -> Vec<usize> {
    if pool.len() <= pool_size {
        return (0..pool.len()).collect();
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by(|a, b| pool[*b].like_count.cmp(&pool[*a].like_count));
    order.truncate(pool_size);
    order.sort_unstable();
    order
}

/// Contiguous groups over `n` pool positions. A full pool is split into
/// `group_count` groups whose sizes differ by at most one. A short pool keeps
/// the nominal group size `ceil(pool_size / group_count)` and uses as many
/// groups as it needs, the last one possibly smaller.
pub fn partition(n: usize, pool_size: usize, group_count: usize) -> Vec<Range<usize>> {
    if n == 0 {
        return Vec::new();
    }
    if n >= pool_size {
        let g = group_count.min(n);
        let (base, extra) = (n / g, n % g);
        let mut start = 0;
        (0..g)
            .map(|i| {
                let len = base + usize::from(i < extra);
                let r = start..start + len;
                start += len;
                r
            })
            .collect()
    } else {
        let size = pool_size.div_ceil(group_count);
        (0..n.div_ceil(size)).map(|i| i * size..((i + 1) * size).min(n)).collect()
    }
}

/// First index of the maximum, comparing totals only.
fn argmax_first(items: impl IntoIterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in items {
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub pool_index: usize,
    pub comment_id: String,
    #[serde(flatten)]
    pub score: StyleScore,
    pub retries: u32,
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentTrace {
    /// Size of the category pool before subsampling.
    pub candidates: usize,
    /// Position in the category pool of each tournament pool member.
    pub pool_source_indices: Vec<usize>,
    pub groups: Vec<Range<usize>>,
    pub judge_fallbacks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TournamentResult {
    pub template: CommentRecord,
    pub template_index: usize,
    /// Pool index of each group winner.
    pub group_winners: Vec<usize>,
    pub score_table: Vec<ScoreRow>,
    pub trace: TournamentTrace,
}

pub fn run_tournament(
    pool: &[CommentRecord],
    video: &VideoContext,
    params: &SelectionParams,
    scorer: &dyn StyleScorer,
    jobs: usize,
) -> Result<TournamentResult> {
    params.validate()?;
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let picked = subsample_pool(pool, params.pool_size, params.seed);
    let members: Vec<&CommentRecord> = picked.iter().map(|i| &pool[*i]).collect();

    let chunk = members.len().div_ceil(jobs.max(1));
    let outcomes: Vec<Result<ScoreOutcome>> = std::thread::scope(|s| {
        let handles: Vec<_> = members
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|c| scorer.score(c, video, params)).collect::<Vec<_>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scoring worker panicked"))
            .collect()
    });
    let mut score_table = Vec::with_capacity(members.len());
    for (i, (c, o)) in members.iter().zip(outcomes).enumerate() {
        let o = o?;
        score_table.push(ScoreRow {
            pool_index: i,
            comment_id: c.comment_id.clone(),
            score: o.score,
            retries: o.retries,
            fallback: o.fallback,
        });
    }

    let groups = partition(members.len(), params.pool_size, params.group_count);
    let group_winners: Vec<usize> = groups
        .iter()
        .map(|g| argmax_first(g.clone().map(|i| (i, score_table[i].score.total))).expect("groups are non-empty"))
        .collect();
    let template_index =
        argmax_first(group_winners.iter().map(|i| (*i, score_table[*i].score.total))).expect("at least one group");

    Ok(TournamentResult {
        template: members[template_index].clone(),
        template_index,
        group_winners,
        trace: TournamentTrace {
            candidates: pool.len(),
            judge_fallbacks: score_table.iter().filter(|r| r.fallback).count(),
            pool_source_indices: picked,
            groups,
        },
        score_table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sentiment::LexiconSentiment;

    fn video(profile: Vec<f64>, language: Language) -> VideoContext {
        VideoContext {
            description: "a cat falls off a sofa".into(),
            language,
            sentiment: Sentiment::Positive,
            profile,
            length_mid: default_length_mid(language),
        }
    }

    #[test]
    fn features_count_what_they_say() {
        let f = style_features("Haha, no way! Is that real?? 😂😂");
        // "Haha, no way" and "Is that real"; the emoji tail is not a sentence.
        assert_eq!(f, [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 2.0, 1.0]);
        assert_eq!(style_features("")[0], 1.0);
        let zh = style_features("哈哈哈，笑死了。");
        assert_eq!(zh[0], 1.0);
        assert_eq!(zh[9], 3.0);
    }

    #[test]
    fn perfect_comment_scores_one() {
        // 30 CJK characters: one sentence ending with 。 and one comma.
        let text = format!("{}，{}。", "好".repeat(14), "玩".repeat(14));
        let c = CommentRecord::new("c", "v", &text, 0, Language::Zh);
        assert_eq!(comment_length(&text, Language::Zh), 30);
        let v = video(style_features(&text).to_vec(), Language::Zh);
        let s = HeuristicScorer { sentiment: &LexiconSentiment }
            .score(&c, &v, &SelectionParams::default())
            .unwrap()
            .score;
        assert!((s.total - 1.0).abs() < 1e-12, "{s:?}");
    }

    #[test]
    fn weight_degeneracy() {
        let c = CommentRecord::new("c", "v", "what a day, honestly", 0, Language::En);
        let v = video(vec![1.0; FEATURE_DIM], Language::En);
        let p = SelectionParams {
            alpha: 1.0,
            beta: 0.0,
            gamma: 0.0,
            ..Default::default()
        };
        let s = HeuristicScorer { sentiment: &LexiconSentiment }.score(&c, &v, &p).unwrap().score;
        assert_eq!(s.total, s.s_struct);
    }

    #[test]
    fn length_score_oracle() {
        let expected = (-(15.0f64 * 15.0) / 32.0).exp();
        assert!((selection_length_score(45, 30.0, 4.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn invalid_weights_rejected() {
        let p = SelectionParams {
            alpha: 0.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn partition_rules() {
        let sizes = |r: Vec<Range<usize>>| r.iter().map(|g| g.len()).collect::<Vec<_>>();
        assert_eq!(sizes(partition(23, 100, 10)), vec![10, 10, 3]);
        assert_eq!(sizes(partition(100, 100, 10)), vec![10; 10]);
        assert_eq!(sizes(partition(1, 100, 10)), vec![1]);
        assert_eq!(sizes(partition(13, 10, 3)), vec![5, 4, 4]);
    }

    struct Fixed(Vec<f64>);

    impl StyleScorer for Fixed {
        fn score(&self, c: &CommentRecord, _: &VideoContext, p: &SelectionParams) -> Result<ScoreOutcome> {
            let i: usize = c.comment_id.parse().unwrap();
            Ok(ScoreOutcome {
                score: StyleScore {
                    total: self.0[i],
                    ..p.combine(0.0, 0.0, 0.0)
                },
                retries: 0,
                fallback: false,
            })
        }
    }

    fn pool(n: usize) -> Vec<CommentRecord> {
        (0..n)
            .map(|i| CommentRecord::new(i.to_string(), "v", "x", (n - i) as u64, Language::En))
            .collect()
    }

    #[test]
    fn dominant_comment_wins() {
        let mut scores = vec![0.5; 100];
        scores[57] = 0.9;
        let r = run_tournament(&pool(100), &video(vec![1.0; 10], Language::En), &Default::default(), &Fixed(scores), 4)
            .unwrap();
        assert_eq!(r.template.comment_id, "57");
        assert!(r.group_winners.contains(&r.template_index));
        assert_eq!(r.group_winners.len(), 10);
    }

    #[test]
    fn all_equal_picks_index_zero() {
        let r = run_tournament(&pool(37), &video(vec![1.0; 10], Language::En), &Default::default(), &Fixed(vec![0.3; 37]), 2)
            .unwrap();
        assert_eq!(r.template_index, 0);
        assert_eq!(r.trace.groups.len(), 4);
    }

    #[test]
    fn empty_pool_errors() {
        let e = run_tournament(&[], &video(vec![], Language::En), &Default::default(), &Fixed(vec![]), 1).unwrap_err();
        assert_eq!(e.to_string(), "empty comment pool");
    }

    #[test]
    fn subsample_keeps_most_liked_in_order() {
        let mut p = pool(150);
        p[149].like_count = 10_000;
        let idx = subsample_pool(&p, 100, 7);
        assert_eq!(idx.len(), 100);
        assert!(idx.contains(&149));
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(idx, subsample_pool(&p, 100, 7));
    }

    fn judge_scorer<'a>(judge: &'a ScriptedJudge) -> LlmJudgeScorer<'a> {
        LlmJudgeScorer {
            judge,
            model: "m".into(),
            max_retries: 2,
            fallback: HeuristicScorer { sentiment: &LexiconSentiment },
        }
    }

    #[test]
    fn judge_total_recomputed_locally() {
        let judge = ScriptedJudge::new(vec![Ok(r#"{"struct": 1, "tone": 1, "length": 1, "total": 0.2}"#.into())]);
        let c = CommentRecord::new("c", "v", "x", 0, Language::En);
        let o = judge_scorer(&judge).score(&c, &video(vec![1.0; 10], Language::En), &Default::default()).unwrap();
        assert!((o.score.total - 1.0).abs() < 1e-12);
        assert!(!o.fallback);
    }

    #[test]
    fn judge_retries_then_succeeds() {
        let judge = ScriptedJudge::new(vec![
            Ok("I think it is pretty good".into()),
            Ok("{struct: high}".into()),
            Ok(r#"Sure: {"struct": 0.5, "tone": 1.0, "length": 0.0}"#.into()),
        ]);
        let c = CommentRecord::new("c", "v", "x", 0, Language::En);
        let o = judge_scorer(&judge).score(&c, &video(vec![1.0; 10], Language::En), &Default::default()).unwrap();
        assert_eq!(o.retries, 2);
        assert!(!o.fallback);
        assert!((o.score.total - (0.4 * 0.5 + 0.3)).abs() < 1e-12);
    }

    #[test]
    fn judge_down_falls_back() {
        let judge = ScriptedJudge::new(vec![Err(ProviderError::Unavailable("down".into()))]);
        let c = CommentRecord::new("c", "v", "lol", 0, Language::En);
        let v = video(vec![1.0; 10], Language::En);
        let o = judge_scorer(&judge).score(&c, &v, &Default::default()).unwrap();
        assert!(o.fallback);
        assert_eq!(judge.calls(), 3);
        let h = HeuristicScorer { sentiment: &LexiconSentiment }.score(&c, &v, &Default::default()).unwrap();
        assert_eq!(o.score, h.score);
    }
}
