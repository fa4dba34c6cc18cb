//! Style-conditioned comment generation: the prompt document, generate
//! providers, the length ceiling and the per-video orchestration.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{classify_video, CategoryDecision, ClassifyParams, DatasetEmbeddingIndex};
use crate::dataset::DatasetBundle;
use crate::domain::{Language, StyleLabel, VideoCategory};
use crate::embed::{EmbedProvider, EmbeddingCache};
use crate::error::{Error, Result};
use crate::manifest::{CommentRecord, VideoManifestEntry};
use crate::prompts::{self, GENERATE_V1};
use crate::provider::{fingerprint_json, ChatMessage, ChatRequest, HttpJsonClient, ProviderError, RetryPolicy};
use crate::select::{
    category_profile, default_length_mid, run_tournament, SelectionParams, StyleScorer, TournamentResult, VideoContext,
};
use crate::sentiment::SentimentProvider;
use crate::text::{truncate_at_sentence, trim_quotes};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShot {
    pub description: String,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub video_description: String,
    pub style_template: CommentRecord,
    pub style: StyleLabel,
    pub language: Language,
    pub few_shot: Vec<FewShot>,
    pub instruction_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationParams {
    pub few_shot_k: usize,
    pub max_chars_zh: usize,
    pub max_chars_en: usize,
    pub instruction_version: String,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            few_shot_k: 3,
            max_chars_zh: 200,
            max_chars_en: 480,
            instruction_version: GENERATE_V1.to_string(),
        }
    }
}

impl GenerationParams {
    pub fn max_chars(&self, language: Language) -> usize {
        match language {
            Language::Zh => self.max_chars_zh,
            Language::En => self.max_chars_en,
        }
    }
}

pub fn length_hint(language: Language) -> &'static str {
    match language {
        Language::Zh => "25 to 35 characters",
        Language::En => "63 to 72 words",
    }
}

pub fn style_marker(style: StyleLabel) -> String {
    format!("[STYLE:{style}]")
}

/// Up to `k` dataset comments labeled `style` in `language`, most liked
/// first (comment id breaks ties), never including the template itself.
pub fn select_few_shot(
    dataset: &DatasetBundle,
    style: StyleLabel,
    language: Language,
    exclude_comment_id: &str,
    k: usize,
) -> Vec<FewShot> {
    let mut matches: Vec<(&str, &CommentRecord)> = dataset
        .comments()
        .filter(|(_, c)| c.style_label == Some(style) && c.language == language && c.comment_id != exclude_comment_id)
        .map(|(v, c)| (v.semantic_description.as_str(), c))
        .collect();
    matches.sort_by(|a, b| b.1.like_count.cmp(&a.1.like_count).then_with(|| a.1.comment_id.cmp(&b.1.comment_id)));
    matches
        .into_iter()
        .take(k)
        .map(|(d, c)| FewShot {
            description: d.to_string(),
            comment: c.text.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptDocument {
    pub instruction_version: String,
    pub system: String,
    pub user: String,
    pub zero_shot: bool,
}

impl PromptDocument {
    pub fn fingerprint(&self) -> String {
        fingerprint_json(&(&self.instruction_version, &self.system, &self.user))
    }

    /// Plain-text rendering, used for golden files and logs.
    pub fn render(&self) -> String {
        format!(
            "### instruction {}\n### system\n{}\n### user\n{}\n",
            self.instruction_version,
            self.system.trim_end(),
            self.user.trim_end()
        )
    }

    pub fn to_chat(&self, model: &str) -> ChatRequest {
        ChatRequest {
            model: model.to_string(),
            messages: vec![
                ChatMessage::text("system", self.system.clone()),
                ChatMessage::text("user", self.user.clone()),
            ],
        }
    }
}

pub fn build_prompt(request: &GenerationRequest) -> Result<PromptDocument> {
    let system = prompts::render(
        prompts::template(&request.instruction_version)?,
        &[
            ("language_name", prompts::language_name(request.language)),
            ("length_hint", length_hint(request.language)),
        ],
    );
    let marker = style_marker(request.style);
    let mut user = format!("{marker}\nStyle: {}\n\n", request.style.describe());
    if request.few_shot.is_empty() {
        tracing::warn!(style = %request.style, language = %request.language, "no few-shot examples, prompting zero-shot");
    } else {
        user.push_str("Examples of this style:\n");
        for (i, ex) in request.few_shot.iter().enumerate() {
            user.push_str(&format!("Example {}\nVideo: {}\nComment: {}\n\n", i + 1, ex.description, ex.comment));
        }
    }
    user.push_str(&format!(
        "Style template (structure reference only, do not reuse its content):\n{}\n\n",
        request.style_template.text
    ));
    user.push_str(&format!("Video description:\n{}\n\n", request.video_description));
    user.push_str(&format!("Write one comment for this video in the {marker} style.\n"));
    Ok(PromptDocument {
        instruction_version: request.instruction_version.clone(),
        system,
        user,
        zero_shot: request.few_shot.is_empty(),
    })
}

pub trait GenerateProvider: Send + Sync {
    fn id(&self) -> &str;
    fn model(&self) -> &str;
    fn generate(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedComment {
    pub text: String,
    pub style: StyleLabel,
    pub language: Language,
    pub request_fingerprint: String,
    pub provider_id: String,
    pub reasked: bool,
    pub truncated: bool,
}

pub const SHORTER_ADDENDUM: &str = "That comment is too long. Reply again with a shorter comment";

fn ask(
    provider: &dyn GenerateProvider,
    payload: &ChatRequest,
    retry: RetryPolicy,
) -> std::result::Result<String, ProviderError> {
    retry
        .run(|_| {
            let raw = provider.generate(payload)?;
            let text = trim_quotes(&raw).to_string();
            if text.is_empty() {
                Err(ProviderError::Refused("empty comment".into()))
            } else {
                Ok(text)
            }
        })
        .0
}

/// Generate a comment and enforce the length ceiling: one re-ask with a
/// "shorter" addendum, then truncation at a sentence boundary.
pub fn generate_comment(
    request: &GenerationRequest,
    provider: &dyn GenerateProvider,
    params: &GenerationParams,
    retry: RetryPolicy,
) -> Result<GeneratedComment> {
    let doc = build_prompt(request)?;
    let fingerprint = doc.fingerprint();
    let fail = |source| Error::Generation {
        fingerprint: fingerprint.clone(),
        source,
    };
    let max = params.max_chars(request.language);
    let mut payload = doc.to_chat(provider.model());
    let mut text = ask(provider, &payload, retry).map_err(fail)?;
    let (mut reasked, mut truncated) = (false, false);
    if text.chars().count() > max {
        reasked = true;
        payload.messages.push(ChatMessage::text("assistant", text.clone()));
        payload
            .messages
            .push(ChatMessage::text("user", format!("{SHORTER_ADDENDUM} of at most {max} characters.")));
        text = ask(provider, &payload, retry).map_err(fail)?;
        if text.chars().count() > max {
            text = truncate_at_sentence(&text, max);
            truncated = true;
        }
    }
    Ok(GeneratedComment {
        text,
        style: request.style,
        language: request.language,
        request_fingerprint: fingerprint,
        provider_id: provider.id().to_string(),
        reasked,
        truncated,
    })
}

/// Deterministic generator. It builds the comment from a per-style opener
/// and the start of the video description found in the prompt, so it never
/// copies the style template. After a "shorter" request it halves the
/// excerpt.
#[derive(Debug, Default)]
pub struct MockGenerator;

impl MockGenerator {
    fn opener(style: StyleLabel, language: Language) -> &'static str {
        match (language, style) {
            (Language::En, StyleLabel::PunsHomophones) => "Pun fully intended:",
            (Language::En, StyleLabel::Rhyming) => "Clip so fine, it made my day shine:",
            (Language::En, StyleLabel::MemeApplication) => "Nobody: Absolutely nobody: This video:",
            (Language::En, StyleLabel::SarcasmIrony) => "Oh sure, totally normal stuff here:",
            (Language::En, StyleLabel::PlainHumor) => "I cannot stop laughing at this:",
            (Language::En, StyleLabel::ContentExtraction) => "Best moment of the day:",
            (Language::Zh, StyleLabel::PunsHomophones) => "谐音梗警告：",
            (Language::Zh, StyleLabel::Rhyming) => "押韵来了：",
            (Language::Zh, StyleLabel::MemeApplication) => "家人们谁懂啊：",
            (Language::Zh, StyleLabel::SarcasmIrony) => "哦是吗，真是太正常了：",
            (Language::Zh, StyleLabel::PlainHumor) => "笑死我了：",
            (Language::Zh, StyleLabel::ContentExtraction) => "名场面：",
        }
    }

    fn section<'a>(text: &'a str, header: &str) -> Option<&'a str> {
        let start = text.find(header)? + header.len();
        let rest = &text[start..];
        Some(rest.split("\n\n").next().unwrap_or(rest).trim())
    }

    pub fn compose(style: StyleLabel, language: Language, description: &str, shorter: bool) -> String {
        let opener = Self::opener(style, language);
        match language {
            Language::En => {
                let n = if shorter { 8 } else { 16 };
                let words: Vec<&str> = description.split_whitespace().take(n).collect();
                format!("{opener} {}", words.join(" ").trim_end_matches(['.', ',', ':', ';']))
            }
            Language::Zh => {
                let n = if shorter { 10 } else { 20 };
                let excerpt: String = description.chars().filter(|c| !c.is_whitespace()).take(n).collect();
                format!("{opener}{}", excerpt.trim_end_matches(['。', '，', '：', '；']))
            }
        }
    }
}

impl GenerateProvider for MockGenerator {
    fn id(&self) -> &str {
        "mock-generate"
    }

    fn model(&self) -> &str {
        "mock"
    }

    fn generate(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        let texts: Vec<&str> = payload
            .messages
            .iter()
            .flat_map(|m| &m.content)
            .filter_map(|p| match p {
                crate::provider::ContentPart::Text { text } => Some(text.as_str()),
                _ => None,
            })
            .collect();
        let user = texts
            .iter()
            .find(|t| t.starts_with("[STYLE:"))
            .ok_or_else(|| ProviderError::Malformed("no style marker in prompt".into()))?;
        let label = user[7..].split(']').next().unwrap_or_default();
        let style = StyleLabel::from_str(label).map_err(ProviderError::Malformed)?;
        let description = Self::section(user, "Video description:\n").unwrap_or_default();
        let language = if texts.iter().any(|t| t.contains(prompts::language_name(Language::Zh))) {
            Language::Zh
        } else {
            Language::En
        };
        let shorter = texts.last().is_some_and(|t| t.starts_with(SHORTER_ADDENDUM));
        Ok(Self::compose(style, language, description, shorter))
    }
}

pub struct HttpGenerator {
    client: HttpJsonClient,
}

impl HttpGenerator {
    pub fn new(client: HttpJsonClient) -> Self {
        Self { client }
    }
}

impl GenerateProvider for HttpGenerator {
    fn id(&self) -> &str {
        self.client.endpoint()
    }

    fn model(&self) -> &str {
        self.client.model()
    }

    fn generate(&self, payload: &ChatRequest) -> std::result::Result<String, ProviderError> {
        self.client.chat(payload)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleChoice {
    Auto,
    Fixed(StyleLabel),
}

impl FromStr for StyleChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "auto" => Ok(StyleChoice::Auto),
            other => other.parse().map(StyleChoice::Fixed),
        }
    }
}

/// Everything `generate_for_video` needs besides the video.
pub struct GenerationDeps<'a> {
    pub dataset: &'a DatasetBundle,
    pub index: &'a DatasetEmbeddingIndex,
    pub embedder: &'a dyn EmbedProvider,
    pub embed_cache: Option<&'a EmbeddingCache>,
    pub sentiment: &'a dyn SentimentProvider,
    pub scorer: &'a dyn StyleScorer,
    pub generator: &'a dyn GenerateProvider,
    pub classify: ClassifyParams,
    pub selection: SelectionParams,
    pub generation: GenerationParams,
    pub retry: RetryPolicy,
    pub jobs: usize,
}

/// Classification and template selection for one video, shared by every
/// style generated for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub decision: CategoryDecision,
    /// The video was `other`, so the pool is every category's comments.
    pub pool_union_fallback: bool,
    pub context: VideoContext,
    pub tournament: TournamentResult,
}

pub fn prepare_generation(video: &VideoManifestEntry, deps: &GenerationDeps) -> Result<Preparation> {
    if !video.has_description() {
        return Err(Error::stage("generate", format!("{} has no semantic description; run describe first", video.video_id)));
    }
    let decision = classify_video(
        &video.semantic_description,
        deps.embedder,
        deps.embed_cache,
        deps.index,
        &deps.classify,
        deps.retry,
    )?;
    let union = decision.category == VideoCategory::Other;
    let pool: Vec<CommentRecord> = deps
        .dataset
        .comments()
        .filter(|(v, c)| c.language == video.language && (union || v.category == decision.category))
        .map(|(_, c)| c.clone())
        .collect();
    if union {
        tracing::info!(video_id = %video.video_id, "category is other, using the union of all category pools");
    }
    let sentiment = deps
        .sentiment
        .classify(&video.semantic_description)
        .map_err(|e| Error::provider(deps.sentiment.id(), e))?;
    let context = VideoContext {
        description: video.semantic_description.clone(),
        language: video.language,
        sentiment,
        profile: category_profile(&pool),
        length_mid: default_length_mid(video.language),
    };
    let tournament = run_tournament(&pool, &context, &deps.selection, deps.scorer, deps.jobs)?;
    Ok(Preparation {
        decision,
        pool_union_fallback: union,
        context,
        tournament,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub comment: GeneratedComment,
    pub template_comment_id: String,
    /// `auto` was requested but the template has no style label.
    pub style_defaulted: bool,
    pub zero_shot: bool,
}

pub fn resolve_style(choice: StyleChoice, template: &CommentRecord) -> (StyleLabel, bool) {
    match choice {
        StyleChoice::Fixed(s) => (s, false),
        StyleChoice::Auto => match template.style_label {
            Some(s) => (s, false),
            None => (StyleLabel::PlainHumor, true),
        },
    }
}

/// The request for one style, plus whether `auto` had to default the style.
pub fn generation_request(
    video: &VideoManifestEntry,
    prep: &Preparation,
    choice: StyleChoice,
    dataset: &DatasetBundle,
    params: &GenerationParams,
) -> (GenerationRequest, bool) {
    let template = &prep.tournament.template;
    let (style, style_defaulted) = resolve_style(choice, template);
    let request = GenerationRequest {
        video_description: video.semantic_description.clone(),
        style_template: template.clone(),
        style,
        language: video.language,
        few_shot: select_few_shot(dataset, style, video.language, &template.comment_id, params.few_shot_k),
        instruction_version: params.instruction_version.clone(),
    };
    (request, style_defaulted)
}

pub fn generate_with_preparation(
    video: &VideoManifestEntry,
    prep: &Preparation,
    choice: StyleChoice,
    deps: &GenerationDeps,
) -> Result<GenerationOutcome> {
    let (request, style_defaulted) = generation_request(video, prep, choice, deps.dataset, &deps.generation);
    let comment = generate_comment(&request, deps.generator, &deps.generation, deps.retry)?;
    Ok(GenerationOutcome {
        comment,
        template_comment_id: request.style_template.comment_id.clone(),
        style_defaulted,
        zero_shot: request.few_shot.is_empty(),
    })
}

pub fn generate_for_video(video: &VideoManifestEntry, choice: StyleChoice, deps: &GenerationDeps) -> Result<GenerationOutcome> {
    let prep = prepare_generation(video, deps)?;
    generate_with_preparation(video, &prep, choice, deps)
}
