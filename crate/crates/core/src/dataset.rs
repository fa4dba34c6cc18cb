//! The curated comment dataset: balanced per (platform, category) cell, one
//! document per video pairing its semantic description with its comments,
//! plus the manual style-annotation flow.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{Language, Platform, StyleLabel, VideoCategory};
use crate::error::{CellViolation, Error, Result};
use crate::manifest::{write_atomic, AnnotationEvent, CommentRecord, VideoManifestEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetVideo {
    pub video_id: String,
    pub platform: Platform,
    pub language: Language,
    pub category: VideoCategory,
    pub semantic_description: String,
    pub comments: Vec<CommentRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub videos: Vec<DatasetVideo>,
}

impl DatasetBundle {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        write_atomic(path, s.as_bytes())
    }

    pub fn comments(&self) -> impl Iterator<Item = (&DatasetVideo, &CommentRecord)> {
        self.videos.iter().flat_map(|v| v.comments.iter().map(move |c| (v, c)))
    }

    pub fn comment_count(&self) -> usize {
        self.videos.iter().map(|v| v.comments.len()).sum()
    }

    pub fn video(&self, video_id: &str) -> Option<&DatasetVideo> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BalancePolicy {
    /// Videos required in every (platform, category) cell.
    pub per_cell: usize,
}

impl Default for BalancePolicy {
    fn default() -> Self {
        Self { per_cell: 20 }
    }
}

/// Count videos per (platform, curated category) for the platforms present.
pub fn cell_counts(entries: &[VideoManifestEntry]) -> BTreeMap<(Platform, VideoCategory), usize> {
    let mut counts = BTreeMap::new();
    for platform in Platform::ALL {
        if entries.iter().any(|e| e.platform == platform) {
            for category in VideoCategory::CURATED {
                counts.insert((platform, category), 0);
            }
        }
    }
    for e in entries {
        if let Some(c) = e.category {
            *counts.entry((e.platform, c)).or_insert(0) += 1;
        }
    }
    counts
}

pub fn assemble_dataset(
    entries: &[VideoManifestEntry],
    comments: &[CommentRecord],
    policy: BalancePolicy,
) -> Result<DatasetBundle> {
    assemble_dataset_with(entries, comments, Some(policy))
}

/// As [`assemble_dataset`], skipping the balance check when `policy` is `None`.
pub fn assemble_dataset_with(
    entries: &[VideoManifestEntry],
    comments: &[CommentRecord],
    policy: Option<BalancePolicy>,
) -> Result<DatasetBundle> {
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for e in entries {
        match e.category {
            None => return Err(Error::InvalidDataset(format!("{} has no curated category", e.video_id))),
            Some(VideoCategory::Other) => {
                return Err(Error::InvalidDataset(format!(
                    "{} is labeled `other`, which is not a curated category",
                    e.video_id
                )))
            }
            Some(_) => {}
        }
    }

    if let Some(policy) = policy {
        let violations: Vec<CellViolation> = cell_counts(entries)
            .into_iter()
            .filter(|(_, n)| *n != policy.per_cell)
            .map(|((platform, category), count)| CellViolation {
                platform: platform.to_string(),
                category: category.to_string(),
                count,
                expected: policy.per_cell,
            })
            .collect();
        if !violations.is_empty() {
            return Err(Error::Unbalanced(violations));
        }
    }

    let index: HashMap<&str, usize> = entries.iter().enumerate().map(|(i, e)| (e.video_id.as_str(), i)).collect();
    let mut grouped: Vec<Vec<CommentRecord>> = vec![Vec::new(); entries.len()];
    for c in comments {
        let slot = index
            .get(c.video_id.as_str())
            .ok_or_else(|| Error::InvalidDataset(format!("comment {} references unknown video {}", c.comment_id, c.video_id)))?;
        grouped[*slot].push(c.clone());
    }

    let videos = entries
        .iter()
        .zip(grouped)
        .map(|(e, comments)| DatasetVideo {
            video_id: e.video_id.clone(),
            platform: e.platform,
            language: e.language,
            category: e.category.expect("checked above"),
            semantic_description: e.semantic_description.clone(),
            comments,
        })
        .collect();
    Ok(DatasetBundle { videos })
}

/// Label a comment, appending to its audit log. Relabeling overwrites the
/// label but keeps the earlier event.
pub fn annotate_style(comment: &CommentRecord, label: StyleLabel, annotator_id: &str) -> CommentRecord {
    let mut out = comment.clone();
    out.annotation_log.push(AnnotationEvent {
        annotator_id: annotator_id.to_string(),
        label,
        previous: comment.style_label,
    });
    out.style_label = Some(label);
    out
}

/// Comments per style label; unlabeled comments are counted under `None`.
pub fn label_histogram<'a>(comments: impl IntoIterator<Item = &'a CommentRecord>) -> BTreeMap<Option<StyleLabel>, usize> {
    let mut hist = BTreeMap::new();
    for c in comments {
        *hist.entry(c.style_label).or_insert(0) += 1;
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entries(platform: Platform, per_cell: usize) -> Vec<VideoManifestEntry> {
        let mut out = Vec::new();
        for category in VideoCategory::CURATED {
            for i in 0..per_cell {
                let id = format!("{platform}-{category}-{i}");
                let url = match platform {
                    Platform::Douyin => format!("https://www.douyin.com/video/{i}"),
                    Platform::Youtube => format!("https://youtu.be/{i}"),
                };
                let mut e = VideoManifestEntry::new(id, platform, url);
                e.category = Some(category);
                out.push(e);
            }
        }
        out
    }

    #[test]
    fn balanced_douyin_passes() {
        let e = entries(Platform::Douyin, 20);
        assert_eq!(e.len(), 100);
        let bundle = assemble_dataset(&e, &[], BalancePolicy::default()).unwrap();
        assert_eq!(bundle.videos.len(), 100);
    }

    #[test]
    fn short_cell_is_named() {
        let mut e = entries(Platform::Douyin, 20);
        let drop = e.iter().position(|v| v.category == Some(VideoCategory::FunnyAnimal)).unwrap();
        e.remove(drop);
        match assemble_dataset(&e, &[], BalancePolicy::default()).unwrap_err() {
            Error::Unbalanced(cells) => {
                assert_eq!(cells.len(), 1);
                assert_eq!(cells[0].platform, "douyin");
                assert_eq!(cells[0].category, "funny_animal");
                assert_eq!(cells[0].count, 19);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn empty_dataset_errors() {
        assert_eq!(
            assemble_dataset(&[], &[], BalancePolicy::default()).unwrap_err().to_string(),
            "empty dataset"
        );
    }

    #[test]
    fn comments_attach_to_videos() {
        let e = entries(Platform::Youtube, 1);
        let c = CommentRecord::new("c1", &e[2].video_id, "ha", 3, Language::En);
        let bundle = assemble_dataset(&e, &[c], BalancePolicy { per_cell: 1 }).unwrap();
        assert_eq!(bundle.videos[2].comments.len(), 1);
        let orphan = CommentRecord::new("c2", "nope", "ha", 3, Language::En);
        assert!(assemble_dataset(&e, &[orphan], BalancePolicy { per_cell: 1 }).is_err());
    }

    #[test]
    fn other_is_not_curated() {
        let mut e = entries(Platform::Youtube, 1);
        e[0].category = Some(VideoCategory::Other);
        assert!(matches!(
            assemble_dataset(&e, &[], BalancePolicy { per_cell: 1 }),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn annotation_audit_log() {
        let c = CommentRecord::new("c1", "v", "text", 0, Language::Zh);
        let once = annotate_style(&c, StyleLabel::PunsHomophones, "ann-1");
        assert_eq!(once.style_label, Some(StyleLabel::PunsHomophones));
        let relabeled = annotate_style(&annotate_style(&c, StyleLabel::Rhyming, "ann-1"), StyleLabel::MemeApplication, "ann-2");
        assert_eq!(relabeled.style_label, Some(StyleLabel::MemeApplication));
        assert_eq!(relabeled.annotation_log.len(), 2);
        assert_eq!(relabeled.annotation_log[1].previous, Some(StyleLabel::Rhyming));
    }

    #[test]
    fn bulk_annotation_histogram() {
        // Hand count: 3 rhyming, 2 sarcasm, 4 plain humor, 1 unlabeled.
        let labels = [
            Some(StyleLabel::Rhyming),
            Some(StyleLabel::PlainHumor),
            Some(StyleLabel::SarcasmIrony),
            Some(StyleLabel::PlainHumor),
            None,
            Some(StyleLabel::Rhyming),
            Some(StyleLabel::PlainHumor),
            Some(StyleLabel::SarcasmIrony),
            Some(StyleLabel::Rhyming),
            Some(StyleLabel::PlainHumor),
        ];
        let comments: Vec<_> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let c = CommentRecord::new(format!("c{i}"), "v", "t", 0, Language::En);
                match l {
                    Some(l) => annotate_style(&c, *l, "ann"),
                    None => c,
                }
            })
            .collect();
        let hist = label_histogram(&comments);
        assert_eq!(hist[&Some(StyleLabel::Rhyming)], 3);
        assert_eq!(hist[&Some(StyleLabel::SarcasmIrony)], 2);
        assert_eq!(hist[&Some(StyleLabel::PlainHumor)], 4);
        assert_eq!(hist[&None], 1);
    }
}
