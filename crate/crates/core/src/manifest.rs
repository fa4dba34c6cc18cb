//! The video manifest: a UTF-8 JSON document `{"videos": [...]}` whose
//! entries accumulate each stage's output. Keys this crate does not know are
//! carried through load/save untouched.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::domain::{Language, Platform, StyleLabel, VideoCategory};
use crate::error::{Error, Result};
use crate::provider::sha256_hex;
use crate::signal::{FrameSchedule, HighlightWindow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
    #[serde(default)]
    pub linked_frame_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionProvenance {
    pub provider_id: String,
    pub prompt_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoManifestEntry {
    pub video_id: String,
    pub platform: Platform,
    pub url: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description_text: String,
    #[serde(default)]
    pub duration_s: f64,
    pub language: Language,
    /// Workdir-relative path of the downloaded media.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_path: Option<String>,
    #[serde(default)]
    pub transcript: Vec<TranscriptSegment>,
    /// Workdir-relative frame image paths, in schedule order.
    #[serde(default)]
    pub frame_paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub highlights: Option<Vec<HighlightWindow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_schedule: Option<FrameSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<VideoCategory>,
    #[serde(default)]
    pub semantic_description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_provenance: Option<DescriptionProvenance>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl VideoManifestEntry {
    pub fn new(video_id: impl Into<String>, platform: Platform, url: impl Into<String>) -> Self {
        Self {
            video_id: video_id.into(),
            platform,
            url: url.into(),
            title: String::new(),
            description_text: String::new(),
            duration_s: 0.0,
            language: platform.language(),
            media_path: None,
            transcript: Vec::new(),
            frame_paths: Vec::new(),
            highlights: None,
            frame_schedule: None,
            category: None,
            semantic_description: String::new(),
            description_provenance: None,
            extra: Map::new(),
        }
    }

    pub fn has_description(&self) -> bool {
        !self.semantic_description.trim().is_empty()
    }

    fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::InvalidEntry {
            entry: self.video_id.clone(),
            message,
        };
        if self.language != self.platform.language() {
            return Err(invalid(format!(
                "{} videos are {}, not {}",
                self.platform,
                self.platform.language(),
                self.language
            )));
        }
        validate_url(self.platform, &self.url).map_err(invalid)?;
        for seg in &self.transcript {
            if !(seg.start_s < seg.end_s) {
                return Err(invalid(format!("transcript segment [{}, {}] is empty", seg.start_s, seg.end_s)));
            }
            if let Some(bad) = seg.linked_frame_indices.iter().find(|i| **i >= self.frame_paths.len()) {
                return Err(invalid(format!("transcript links missing frame {bad}")));
            }
        }
        Ok(())
    }
}

fn validate_url(platform: Platform, raw: &str) -> std::result::Result<(), String> {
    let parsed = url::Url::parse(raw).map_err(|e| format!("bad url {raw:?}: {e}"))?;
    let host = parsed.host_str().unwrap_or_default();
    let allowed: &[&str] = match platform {
        Platform::Douyin => &["douyin.com", "iesdouyin.com"],
        Platform::Youtube => &["youtube.com", "youtu.be"],
    };
    if allowed.iter().any(|d| host == *d || host.ends_with(&format!(".{d}"))) {
        Ok(())
    } else {
        Err(format!("{raw} is not a {platform} url"))
    }
}

/// Derive a stable id from a platform URL: the YouTube `v` parameter or
/// short-link path, the Douyin `/video/<id>` segment, else a URL hash.
pub fn video_id_from_url(platform: Platform, raw: &str) -> String {
    if let Ok(u) = url::Url::parse(raw) {
        let segments: Vec<&str> = u.path_segments().map(|s| s.filter(|p| !p.is_empty()).collect()).unwrap_or_default();
        let found = match platform {
            Platform::Youtube => u
                .query_pairs()
                .find(|(k, _)| k == "v")
                .map(|(_, v)| v.into_owned())
                .or_else(|| {
                    let host = u.host_str().unwrap_or_default();
                    if host.ends_with("youtu.be") {
                        segments.first().map(|s| s.to_string())
                    } else if segments.first() == Some(&"shorts") {
                        segments.get(1).map(|s| s.to_string())
                    } else {
                        None
                    }
                }),
            Platform::Douyin => segments
                .iter()
                .position(|s| *s == "video")
                .and_then(|i| segments.get(i + 1))
                .map(|s| s.to_string()),
        };
        if let Some(id) = found {
            return format!("{}-{}", platform, id);
        }
    }
    format!("{}-{}", platform, &sha256_hex(raw.as_bytes())[..12])
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub videos: Vec<VideoManifestEntry>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl Manifest {
    pub fn get(&self, video_id: &str) -> Option<&VideoManifestEntry> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    pub fn get_mut(&mut self, video_id: &str) -> Option<&mut VideoManifestEntry> {
        self.videos.iter_mut().find(|v| v.video_id == video_id)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let malformed = |e: serde_json::Error| Error::MalformedManifest {
            path: origin.to_path_buf(),
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        };
        let doc: Value = serde_json::from_str(text).map_err(malformed)?;
        let (raw_videos, extra) = match doc {
            Value::Array(items) => (items, Map::new()),
            Value::Object(mut obj) => match obj.remove("videos") {
                Some(Value::Array(items)) => (items, obj),
                _ => {
                    return Err(Error::MalformedManifest {
                        path: origin.to_path_buf(),
                        message: "expected a top-level \"videos\" array".into(),
                        line: 1,
                        column: 1,
                    })
                }
            },
            _ => {
                return Err(Error::MalformedManifest {
                    path: origin.to_path_buf(),
                    message: "expected an object or array".into(),
                    line: 1,
                    column: 1,
                })
            }
        };

        let mut videos = Vec::with_capacity(raw_videos.len());
        let mut seen = HashSet::new();
        for (index, raw) in raw_videos.into_iter().enumerate() {
            let entry = parse_entry(raw, index)?;
            if !seen.insert(entry.video_id.clone()) {
                return Err(Error::DuplicateVideo(entry.video_id));
            }
            videos.push(entry);
        }
        Ok(Self { videos, extra })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}

fn parse_entry(raw: Value, index: usize) -> Result<VideoManifestEntry> {
    let Value::Object(mut obj) = raw else {
        return Err(Error::InvalidEntry {
            entry: format!("#{index}"),
            message: "entry is not an object".into(),
        });
    };
    let label = obj
        .get("video_id")
        .and_then(Value::as_str)
        .map(str::to_owned)
        .unwrap_or_else(|| format!("#{index}"));
    let platform_raw = obj.get("platform").and_then(Value::as_str).unwrap_or_default().to_owned();
    let platform: Platform = platform_raw.parse().map_err(|p| Error::UnknownPlatform {
        platform: p,
        entry: label.clone(),
    })?;
    let url = obj.get("url").and_then(Value::as_str).unwrap_or_default().to_owned();
    if !obj.contains_key("video_id") {
        obj.insert("video_id".into(), video_id_from_url(platform, &url).into());
    }
    if !obj.contains_key("language") {
        obj.insert("language".into(), platform.language().as_str().into());
    }
    let entry: VideoManifestEntry = serde_json::from_value(Value::Object(obj)).map_err(|e| Error::InvalidEntry {
        entry: label,
        message: e.to_string(),
    })?;
    entry.validate()?;
    Ok(entry)
}

pub fn load_seed_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path.to_path_buf())
        } else {
            Error::io(path, e)
        }
    })?;
    Manifest::parse(&text, path)
}

/// Write through a sibling temp file so readers never see a torn document.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommentSource {
    PlatformApi,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub annotator_id: String,
    pub label: StyleLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<StyleLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub comment_id: String,
    pub video_id: String,
    pub text: String,
    pub like_count: u64,
    pub language: Language,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style_label: Option<StyleLabel>,
    pub source: CommentSource,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotation_log: Vec<AnnotationEvent>,
}

impl CommentRecord {
    pub fn new(
        comment_id: impl Into<String>,
        video_id: impl Into<String>,
        text: impl Into<String>,
        like_count: u64,
        language: Language,
    ) -> Self {
        Self {
            comment_id: comment_id.into(),
            video_id: video_id.into(),
            text: text.into(),
            like_count,
            language,
            style_label: None,
            source: CommentSource::PlatformApi,
            annotation_log: Vec::new(),
        }
    }

    pub fn with_style(mut self, label: StyleLabel) -> Self {
        self.style_label = Some(label);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Manifest> {
        Manifest::parse(text, Path::new("seed.json"))
    }

    #[test]
    fn empty_list_is_empty_manifest() {
        assert!(parse("[]").unwrap().videos.is_empty());
        assert!(parse(r#"{"videos": []}"#).unwrap().videos.is_empty());
    }

    #[test]
    fn two_platforms_get_language_defaults() {
        let m = parse(
            r#"{"videos": [
                {"platform": "douyin", "url": "https://www.douyin.com/video/7301"},
                {"platform": "youtube", "url": "https://www.youtube.com/watch?v=abc123", "title": "cats"}
            ]}"#,
        )
        .unwrap();
        assert_eq!(m.videos.len(), 2);
        assert_eq!(m.videos[0].video_id, "douyin-7301");
        assert_eq!(m.videos[0].language, Language::Zh);
        assert_eq!(m.videos[1].video_id, "youtube-abc123");
        assert_eq!(m.videos[1].language, Language::En);
        assert_eq!(m.videos[1].title, "cats");
    }

    #[test]
    fn unknown_platform_is_named() {
        let err = parse(r#"[{"video_id": "t1", "platform": "tiktok", "url": "https://tiktok.com/x"}]"#).unwrap_err();
        assert!(err.to_string().starts_with("unknown platform: tiktok"), "{err}");
        assert!(err.to_string().contains("t1"));
    }

    #[test]
    fn malformed_reports_position() {
        match parse("{\"videos\": [\n  {\"platform\": }\n]}").unwrap_err() {
            Error::MalformedManifest { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn language_must_match_platform() {
        let err = parse(r#"[{"platform": "douyin", "url": "https://www.douyin.com/video/1", "language": "en"}]"#)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidEntry { .. }));
    }

    #[test]
    fn url_checked_against_platform() {
        let err = parse(r#"[{"platform": "youtube", "url": "https://www.douyin.com/video/1"}]"#).unwrap_err();
        assert!(err.to_string().contains("not a youtube url"));
    }

    #[test]
    fn duplicates_rejected() {
        let err = parse(
            r#"[{"video_id": "a", "platform": "youtube", "url": "https://youtu.be/x"},
                {"video_id": "a", "platform": "youtube", "url": "https://youtu.be/y"}]"#,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateVideo(id) if id == "a"));
    }

    #[test]
    fn unknown_keys_round_trip() {
        let text = r#"{"batch": "2024-q1", "videos": [
            {"platform": "youtube", "url": "https://youtu.be/q", "curator_note": {"ok": true}}
        ]}"#;
        let m = parse(text).unwrap();
        assert_eq!(m.extra["batch"], "2024-q1");
        assert_eq!(m.videos[0].extra["curator_note"]["ok"], true);
        let again = parse(&m.to_json()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn id_derivation() {
        assert_eq!(video_id_from_url(Platform::Youtube, "https://youtu.be/xyz"), "youtube-xyz");
        assert_eq!(
            video_id_from_url(Platform::Youtube, "https://www.youtube.com/shorts/s1"),
            "youtube-s1"
        );
        let hashed = video_id_from_url(Platform::Douyin, "https://v.douyin.com/abc/");
        assert!(hashed.starts_with("douyin-") && hashed.len() == "douyin-".len() + 12);
    }
}
