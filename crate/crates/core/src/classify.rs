//! Category assignment by summed embedding similarity against the curated
//! dataset, with a mean-similarity fallback to `other`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::DatasetBundle;
use crate::domain::VideoCategory;
use crate::embed::{cosine_similarity, embed_text, EmbedProvider, EmbeddingCache, EmbeddingVector};
use crate::error::{Error, Result};
use crate::provider::RetryPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub video_id: String,
    pub category: VideoCategory,
    pub embedding: EmbeddingVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexFailure {
    pub video_id: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetEmbeddingIndex {
    pub entries: Vec<IndexEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<IndexFailure>,
}

impl DatasetEmbeddingIndex {
    pub fn from_entries(entries: Vec<IndexEntry>) -> Self {
        Self {
            entries,
            failures: Vec::new(),
        }
    }

    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn check_usable(&self) -> Result<()> {
        if self.is_partial() {
            return Err(Error::PartialIndex {
                failed: self.failures.len(),
                total: self.failures.len() + self.entries.len(),
            });
        }
        if self.entries.is_empty() {
            return Err(Error::EmptyIndex);
        }
        Ok(())
    }
}

/// Embed every dataset description. Cached vectors are reused, so a rebuild
/// over an unchanged dataset makes no provider calls. Provider failures do
/// not abort the build; they are recorded and make the index partial.
pub fn build_embedding_index(
    dataset: &DatasetBundle,
    provider: &dyn EmbedProvider,
    cache: Option<&EmbeddingCache>,
    retry: RetryPolicy,
    jobs: usize,
) -> Result<DatasetEmbeddingIndex> {
    if dataset.videos.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let jobs = jobs.max(1);
    let chunk = dataset.videos.len().div_ceil(jobs);
    let results: Vec<Result<EmbeddingVector>> = std::thread::scope(|s| {
        let handles: Vec<_> = dataset
            .videos
            .chunks(chunk)
            .map(|videos| {
                s.spawn(move || {
                    videos
                        .iter()
                        .map(|v| embed_text(&v.semantic_description, provider, cache, retry))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("embedding worker panicked"))
            .collect()
    });

    let mut index = DatasetEmbeddingIndex::default();
    for (video, result) in dataset.videos.iter().zip(results) {
        match result {
            Ok(embedding) => index.entries.push(IndexEntry {
                video_id: video.video_id.clone(),
                category: video.category,
                embedding,
            }),
            Err(e) => {
                tracing::warn!(video_id = %video.video_id, error = %e, "embedding failed");
                index.failures.push(IndexFailure {
                    video_id: video.video_id.clone(),
                    message: e.to_string(),
                });
            }
        }
    }
    Ok(index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    /// Below this mean similarity of the winning category the video is `other`.
    pub fallback_threshold: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self { fallback_threshold: 0.15 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDecision {
    pub category: VideoCategory,
    /// The argmax before any fallback.
    pub best_curated: VideoCategory,
    pub per_category_scores: BTreeMap<VideoCategory, f64>,
    pub best_mean: f64,
    pub margin: f64,
    pub fallback_applied: bool,
}

pub fn classify_embedding(
    target: &EmbeddingVector,
    index: &DatasetEmbeddingIndex,
    params: &ClassifyParams,
) -> Result<CategoryDecision> {
    index.check_usable()?;
    let mut sums = [0.0f64; 5];
    let mut counts = [0usize; 5];
    for e in &index.entries {
        let i = e
            .category
            .curated_index()
            .ok_or_else(|| Error::InvalidDataset(format!("{} is not in a curated category", e.video_id)))?;
        sums[i] += cosine_similarity(target, &e.embedding)?;
        counts[i] += 1;
    }

    let mut best = 0;
    for i in 1..5 {
        if sums[i] > sums[best] {
            best = i;
        }
    }
    let second = (0..5)
        .filter(|i| *i != best)
        .map(|i| sums[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let best_mean = if counts[best] == 0 {
        0.0
    } else {
        sums[best] / counts[best] as f64
    };
    let fallback = best_mean < params.fallback_threshold;
    let best_curated = VideoCategory::CURATED[best];
    Ok(CategoryDecision {
        category: if fallback { VideoCategory::Other } else { best_curated },
        best_curated,
        per_category_scores: VideoCategory::CURATED.iter().copied().zip(sums).collect(),
        best_mean,
        margin: sums[best] - second,
        fallback_applied: fallback,
    })
}

pub fn classify_video(
    description: &str,
    provider: &dyn EmbedProvider,
    cache: Option<&EmbeddingCache>,
    index: &DatasetEmbeddingIndex,
    params: &ClassifyParams,
    retry: RetryPolicy,
) -> Result<CategoryDecision> {
    if description.trim().is_empty() {
        return Err(Error::stage("classify", "video has no semantic description; run describe first"));
    }
    index.check_usable()?;
    let target = embed_text(description, provider, cache, retry)?;
    classify_embedding(&target, index, params)
}
