//! Automatic scoring on a 0-10 scale: originality, relevance and style
//! conformity, with the total as their mean.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{Language, Sentiment};
use crate::embed::{cosine_similarity, embed_text, EmbedProvider, EmbeddingCache, EmbeddingVector};
use crate::error::{Error, Result};
use crate::provider::RetryPolicy;
use crate::sentiment::SentimentProvider;
use crate::text::comment_length;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LengthBand {
    pub min: f64,
    pub max: f64,
    /// Decay scale outside the band.
    pub sigma_l: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringParams {
    /// Relevance width. `None` uses the spread of benchmark similarities.
    pub sigma: Option<f64>,
    pub sigma_floor: f64,
    pub band_en: LengthBand,
    pub band_zh: LengthBand,
}

impl Default for ScoringParams {
    fn default() -> Self {
        Self {
            sigma: None,
            sigma_floor: 0.05,
            band_en: LengthBand {
                min: 63.0,
                max: 72.0,
                sigma_l: 5.0,
            },
            band_zh: LengthBand {
                min: 25.0,
                max: 35.0,
                sigma_l: 4.0,
            },
        }
    }
}

impl ScoringParams {
    pub fn validate(&self) -> Result<()> {
        for b in [self.band_en, self.band_zh] {
            if !(b.min <= b.max && b.sigma_l > 0.0) {
                return Err(Error::InvalidParams(format!("bad length band {b:?}")));
            }
        }
        if self.sigma.is_some_and(|s| !(s > 0.0)) || !(self.sigma_floor > 0.0) {
            return Err(Error::InvalidParams("sigma must be positive".into()));
        }
        Ok(())
    }

    pub fn band(&self, language: Language) -> LengthBand {
        match language {
            Language::En => self.band_en,
            Language::Zh => self.band_zh,
        }
    }
}

pub fn originality_score(sim_max: f64) -> f64 {
    (10.0 * (1.0 - sim_max)).clamp(0.0, 10.0)
}

pub fn relevance_score(sim: f64, baseline: f64, sigma: f64) -> f64 {
    let d = sim - baseline;
    10.0 * (-(d * d) / (2.0 * sigma * sigma)).exp()
}

pub fn length_part(len: f64, band: LengthBand) -> f64 {
    let nearest = if len < band.min {
        band.min
    } else if len > band.max {
        band.max
    } else {
        return 5.0;
    };
    let d = len - nearest;
    5.0 * (-(d * d) / (2.0 * band.sigma_l * band.sigma_l)).exp()
}

pub fn sentiment_part(comment: Sentiment, video: Sentiment) -> f64 {
    if comment == video {
        5.0
    } else {
        0.0
    }
}

pub fn total_score(originality: f64, relevance: f64, style: f64) -> f64 {
    (originality + relevance + style) / 3.0
}

/// A benchmark human comment paired with the text of its video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchPair {
    pub comment: String,
    pub video_text: String,
}

pub struct ScoringContext {
    references: Vec<EmbeddingVector>,
    pub sim_baseline: f64,
    pub sigma: f64,
    pub params: ScoringParams,
}

impl std::fmt::Debug for ScoringContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoringContext")
            .field("references", &self.references.len())
            .field("sim_baseline", &self.sim_baseline)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl ScoringContext {
    /// Baseline is the mean similarity over benchmark (comment, video) pairs;
    /// sigma defaults to their population standard deviation, floored.
    pub fn build(
        bench: &[BenchPair],
        train: &[String],
        embedder: &dyn EmbedProvider,
        cache: Option<&EmbeddingCache>,
        params: ScoringParams,
        retry: RetryPolicy,
    ) -> Result<Self> {
        params.validate()?;
        if bench.is_empty() {
            return Err(Error::NoReferenceCorpus);
        }
        let embed = |t: &str| embed_text(t, embedder, cache, retry);
        let mut sims = Vec::with_capacity(bench.len());
        let mut references = Vec::with_capacity(bench.len() + train.len());
        for pair in bench {
            let c = embed(&pair.comment)?;
            sims.push(cosine_similarity(&c, &embed(&pair.video_text)?)?);
            references.push(c);
        }
        for t in train {
            references.push(embed(t)?);
        }
        let n = sims.len() as f64;
        let sim_baseline = sims.iter().sum::<f64>() / n;
        let spread = (sims.iter().map(|s| (s - sim_baseline).powi(2)).sum::<f64>() / n).sqrt();
        let sigma = params.sigma.unwrap_or(spread.max(params.sigma_floor));
        Ok(Self {
            references,
            sim_baseline,
            sigma,
            params,
        })
    }

    pub fn reference_count(&self) -> usize {
        self.references.len()
    }

    /// Highest similarity of `comment` to any reference comment or to the video.
    pub fn sim_max(&self, comment: &EmbeddingVector, video: &EmbeddingVector) -> Result<f64> {
        let mut best = cosine_similarity(comment, video)?;
        for r in &self.references {
            best = best.max(cosine_similarity(comment, r)?);
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub s_originality: f64,
    pub s_relevance: f64,
    pub s_style: f64,
    pub s_total: f64,
    pub s_length_part: f64,
    pub s_sentiment_part: f64,
    pub sim_max: f64,
    pub sim_to_video: f64,
    pub sim_baseline: f64,
    pub length: usize,
    pub comment_sentiment: Sentiment,
    pub video_sentiment: Sentiment,
}

pub struct ScoringProviders<'a> {
    pub embedder: &'a dyn EmbedProvider,
    pub cache: Option<&'a EmbeddingCache>,
    pub sentiment: &'a dyn SentimentProvider,
    pub retry: RetryPolicy,
}

pub fn score_comment(
    comment: &str,
    language: Language,
    video_text: &str,
    context: &ScoringContext,
    providers: &ScoringProviders,
) -> Result<ScoreReport> {
    let embed = |t: &str| embed_text(t, providers.embedder, providers.cache, providers.retry);
    let (c, v) = (embed(comment)?, embed(video_text)?);
    let sim_max = context.sim_max(&c, &v)?;
    let sim_to_video = cosine_similarity(&c, &v)?;
    let classify = |t: &str| {
        providers
            .sentiment
            .classify(t)
            .map_err(|e| Error::provider(providers.sentiment.id(), e))
    };
    let (comment_sentiment, video_sentiment) = (classify(comment)?, classify(video_text)?);
    let length = comment_length(comment, language);
    let s_length_part = length_part(length as f64, context.params.band(language));
    let s_sentiment_part = sentiment_part(comment_sentiment, video_sentiment);
    let s_originality = originality_score(sim_max);
    let s_relevance = relevance_score(sim_to_video, context.sim_baseline, context.sigma);
    let s_style = s_length_part + s_sentiment_part;
    Ok(ScoreReport {
        s_originality,
        s_relevance,
        s_style,
        s_total: total_score(s_originality, s_relevance, s_style),
        s_length_part,
        s_sentiment_part,
        sim_max,
        sim_to_video,
        sim_baseline: context.sim_baseline,
        length,
        comment_sentiment,
        video_sentiment,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub system: String,
    pub n: usize,
    pub originality: f64,
    pub relevance: f64,
    pub style: f64,
    pub total: f64,
}

/// Mean per dimension per system, systems in first-seen order.
pub fn aggregate<'a>(reports: impl IntoIterator<Item = (&'a str, &'a ScoreReport)>) -> Vec<AggregateRow> {
    let mut order: Vec<String> = Vec::new();
    let mut sums: BTreeMap<String, (usize, f64, f64, f64)> = BTreeMap::new();
    for (system, r) in reports {
        let e = sums.entry(system.to_string()).or_insert_with(|| {
            order.push(system.to_string());
            (0, 0.0, 0.0, 0.0)
        });
        e.0 += 1;
        e.1 += r.s_originality;
        e.2 += r.s_relevance;
        e.3 += r.s_style;
    }
    order
        .into_iter()
        .map(|system| {
            let (n, o, r, s) = sums[&system];
            let k = n as f64;
            let (o, r, s) = (o / k, r / k, s / k);
            AggregateRow {
                system,
                n,
                originality: o,
                relevance: r,
                style: s,
                total: total_score(o, r, s),
            }
        })
        .collect()
}

pub fn format_table(rows: &[AggregateRow]) -> String {
    let width = rows.iter().map(|r| r.system.len()).max().unwrap_or(0).max(6);
    let mut out = format!("{:<width$}  {:>6}  {:>6}  {:>6}  {:>6}\n", "System", "Orig.", "Rel.", "Style", "Total");
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>6.2}  {:>6.2}  {:>6.2}  {:>6.2}\n",
            r.system, r.originality, r.relevance, r.style, r.total
        ));
    }
    out
}
