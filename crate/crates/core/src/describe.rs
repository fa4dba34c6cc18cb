//! Speech transcription and the multimodal semantic description of a video.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::Language;
use crate::error::{Error, Result};
use crate::manifest::TranscriptSegment;
use crate::media::SyntheticMedia;
use crate::prompts::{self, DESCRIBE_V1};
use crate::provider::{
    fingerprint_json, ChatMessage, ChatRequest, ContentPart, HttpJsonClient, ProviderError, RetryPolicy,
};

/// A transcript segment as a speech recognizer returns it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

pub trait TranscribeProvider: Send + Sync {
    fn id(&self) -> &str;
    fn transcribe(&self, media_path: &Path) -> std::result::Result<Vec<RawSegment>, ProviderError>;
}

/// Sort segments, truncate overlaps at the next start and link each segment
/// to the frames whose timestamps fall in `[start, end)`.
pub fn normalize_transcript(mut raw: Vec<RawSegment>, frame_times: &[f64]) -> Vec<TranscriptSegment> {
    raw.retain(|s| !s.text.trim().is_empty());
    raw.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.end_s.total_cmp(&b.end_s)));
    let starts: Vec<f64> = raw.iter().map(|s| s.start_s).collect();
    raw.into_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let end = match starts.get(i + 1) {
                Some(next) => s.end_s.min(*next),
                None => s.end_s,
            };
            (end > s.start_s).then(|| TranscriptSegment {
                start_s: s.start_s,
                end_s: end,
                text: s.text.trim().to_string(),
                linked_frame_indices: frame_times
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| **t >= s.start_s && **t < end)
                    .map(|(k, _)| k)
                    .collect(),
            })
        })
        .collect()
}

pub fn transcribe_audio(
    media_path: &Path,
    provider: &dyn TranscribeProvider,
    frame_times: &[f64],
    retry: RetryPolicy,
) -> Result<Vec<TranscriptSegment>> {
    let (raw, _) = retry.run(|_| provider.transcribe(media_path));
    let raw = raw.map_err(|e| Error::provider(provider.id(), e))?;
    Ok(normalize_transcript(raw, frame_times))
}

/// Reads the transcript embedded in a synthetic media document, or a
/// `<media>.transcript.json` sidecar next to real media. No transcript means
/// silence.
#[derive(Debug, Default)]
pub struct MockTranscriber;

impl TranscribeProvider for MockTranscriber {
    fn id(&self) -> &str {
        "mock-transcribe"
    }

    fn transcribe(&self, media_path: &Path) -> std::result::Result<Vec<RawSegment>, ProviderError> {
        if let Ok(media) = SyntheticMedia::load(media_path) {
            return Ok(media
                .transcript
                .into_iter()
                .map(|s| RawSegment {
                    start_s: s.start_s,
                    end_s: s.end_s,
                    text: s.text,
                })
                .collect());
        }
        let mut sidecar = media_path.as_os_str().to_owned();
        sidecar.push(".transcript.json");
        match std::fs::read_to_string(PathBuf::from(sidecar)) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string())),
            Err(_) => Ok(Vec::new()),
        }
    }
}

/// Posts `{model, media: {filename, data_base64}}` and reads `{segments}`.
pub struct HttpTranscriber {
    client: HttpJsonClient,
}

impl HttpTranscriber {
    pub fn new(client: HttpJsonClient) -> Self {
        Self { client }
    }
}

#[derive(Deserialize)]
struct SegmentsResponse {
    segments: Vec<RawSegment>,
}

impl TranscribeProvider for HttpTranscriber {
    fn id(&self) -> &str {
        self.client.model()
    }

    fn transcribe(&self, media_path: &Path) -> std::result::Result<Vec<RawSegment>, ProviderError> {
        use base64::Engine as _;
        let bytes = std::fs::read(media_path).map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let body = serde_json::json!({
            "model": self.client.model(),
            "media": {
                "filename": media_path.file_name().map(|n| n.to_string_lossy().into_owned()),
                "data_base64": base64::engine::general_purpose::STANDARD.encode(bytes),
            }
        });
        let resp: SegmentsResponse = self.client.post_json(&body)?;
        Ok(resp.segments)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub title: String,
    pub description: String,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeRequest {
    pub transcript: Vec<TranscriptSegment>,
    /// Workdir-relative frame paths in time order.
    pub frame_paths: Vec<String>,
    pub meta: VideoMeta,
    pub language: Language,
    pub max_frames: usize,
}

pub const DEFAULT_MAX_FRAMES: usize = 32;

impl DescribeRequest {
    pub fn validate(&self) -> Result<()> {
        if self.max_frames == 0 {
            return Err(Error::InvalidParams("max_frames must be at least 1".into()));
        }
        if self.frame_paths.is_empty() && self.transcript.is_empty() {
            return Err(Error::InvalidParams("describe needs frames or a transcript".into()));
        }
        Ok(())
    }
}

/// Indices of at most `max` items spread uniformly over `n`, always keeping
/// the first and (for `max >= 2`) the last.
pub fn uniform_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    if max == 1 {
        return vec![0];
    }
    (0..max)
        .map(|i| ((i * (n - 1)) as f64 / (max - 1) as f64).round() as usize)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticDescription {
    pub text: String,
    pub provider_id: String,
    pub prompt_fingerprint: String,
}

/// The exact payload sent to a describe provider for `request`.
pub fn describe_payload(request: &DescribeRequest, model: &str) -> Result<ChatRequest> {
    let system = prompts::render(
        prompts::template(DESCRIBE_V1)?,
        &[("language_name", prompts::language_name(request.language))],
    );
    let transcript = if request.transcript.is_empty() {
        "(no speech)".to_string()
    } else {
        request
            .transcript
            .iter()
            .map(|s| {
                let frames: Vec<String> = s.linked_frame_indices.iter().map(|i| i.to_string()).collect();
                format!("[{:.2}-{:.2}] ({}) {}", s.start_s, s.end_s, frames.join(","), s.text)
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let frames = uniform_indices(request.frame_paths.len(), request.max_frames);
    let user_text = prompts::render(
        prompts::user_template(DESCRIBE_V1)?,
        &[
            ("title", &request.meta.title),
            ("description", &request.meta.description),
            ("duration", &format!("{:.1}", request.meta.duration_s)),
            ("frame_count", &frames.len().to_string()),
            ("transcript", &transcript),
        ],
    );
    let mut content = vec![ContentPart::Text { text: user_text }];
    content.extend(frames.into_iter().map(|i| ContentPart::Image {
        path: request.frame_paths[i].clone(),
    }));
    Ok(ChatRequest {
        model: model.to_string(),
        messages: vec![
            ChatMessage::text("system", system),
            ChatMessage {
                role: "user".into(),
                content,
            },
        ],
    })
}

pub trait DescribeProvider: Send + Sync {
    fn id(&self) -> &str;
    fn model(&self) -> &str;
    fn describe(&self, request: &DescribeRequest, payload: &ChatRequest) -> std::result::Result<String, ProviderError>;
}

pub fn describe_video(request: &DescribeRequest, provider: &dyn DescribeProvider, retry: RetryPolicy) -> Result<SemanticDescription> {
    request.validate()?;
    let payload = describe_payload(request, provider.model())?;
    let fingerprint = fingerprint_json(&(DESCRIBE_V1, &payload));
    let (text, _) = retry.run(|_| {
        let text = provider.describe(request, &payload)?;
        let text = text.trim().to_string();
        if text.is_empty() {
            Err(ProviderError::Refused("empty description".into()))
        } else {
            Ok(text)
        }
    });
    Ok(SemanticDescription {
        text: text.map_err(|e| Error::provider(provider.id(), e))?,
        provider_id: provider.id().to_string(),
        prompt_fingerprint: fingerprint,
    })
}

/// Deterministic describer: the title (and uploader description), the first
/// and last transcript lines and the frame count, in a fixed template.
#[derive(Debug, Default)]
pub struct MockDescriber;

impl MockDescriber {
    pub fn canonical(request: &DescribeRequest, frames_sent: usize) -> String {
        let title = match request.meta.description.trim() {
            "" => request.meta.title.trim().to_string(),
            d => format!("{}: {}", request.meta.title.trim(), d),
        };
        let lines = (request.transcript.first(), request.transcript.last());
        match (request.language, lines) {
            (Language::En, (Some(first), Some(last))) => format!(
                "{title}. Opens with \"{}\" and ends with \"{}\". {frames_sent} frames over {:.1} s.",
                first.text, last.text, request.meta.duration_s
            ),
            (Language::En, _) => format!(
                "{title}. No speech. {frames_sent} frames over {:.1} s.",
                request.meta.duration_s
            ),
            (Language::Zh, (Some(first), Some(last))) => format!(
                "{title}。开头：“{}”，结尾：“{}”。共{frames_sent}帧，时长{:.1}秒。",
                first.text, last.text, request.meta.duration_s
            ),
            (Language::Zh, _) => format!(
                "{title}。无语音。共{frames_sent}帧，时长{:.1}秒。",
                request.meta.duration_s
            ),
        }
    }
}

impl DescribeProvider for MockDescriber {
    fn id(&self) -> &str {
        "mock-describe"
    }

    fn model(&self) -> &str {
        "mock"
    }

    fn describe(&self, request: &DescribeRequest, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        let frames_sent = payload
            .messages
            .iter()
            .flat_map(|m| &m.content)
            .filter(|p| matches!(p, ContentPart::Image { .. }))
            .count();
        Ok(Self::canonical(request, frames_sent))
    }
}

pub struct HttpDescriber {
    client: HttpJsonClient,
}

impl HttpDescriber {
    pub fn new(client: HttpJsonClient) -> Self {
        Self { client }
    }
}

impl DescribeProvider for HttpDescriber {
    fn id(&self) -> &str {
        self.client.endpoint()
    }

    fn model(&self) -> &str {
        self.client.model()
    }

    fn describe(&self, _request: &DescribeRequest, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        self.client.chat(payload)
    }
}
