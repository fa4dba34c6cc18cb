//! Workdir-based stages. Each stage reads `<workdir>/manifest.json`, skips
//! work that is already done unless forced, and writes its outputs next to
//! the video:
//!
//! ```text
//! <workdir>/manifest.json
//! <workdir>/<video_id>/video.mp4
//! <workdir>/<video_id>/comments.json
//! <workdir>/<video_id>/frames/frame_000000.jpg
//! <workdir>/<video_id>/classification.json
//! <workdir>/<video_id>/selection.json
//! <workdir>/<video_id>/generated.jsonl
//! <workdir>/cache/embeddings/<sha256>.json
//! ```
//!
//! Floats in stage outputs are rounded to 1e-9 so the files do not depend on
//! last-bit differences between platform math libraries.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classify::{build_embedding_index, classify_video, DatasetEmbeddingIndex};
use crate::config::{DecoderKind, PipelineConfig, PlatformKind};
use crate::dataset::{annotate_style, assemble_dataset_with, label_histogram, DatasetBundle};
use crate::describe::{
    describe_video, transcribe_audio, DescribeProvider, DescribeRequest, HttpDescriber, HttpTranscriber, MockDescriber,
    MockTranscriber, TranscribeProvider, VideoMeta,
};
use crate::domain::{Language, StyleLabel, VideoCategory};
use crate::embed::{EmbedProvider, EmbeddingCache, HttpEmbedder, MockEmbedder};
use crate::error::{Error, Result};
use crate::generate::{
    generate_comment, generation_request, prepare_generation, GenerateProvider, GenerationDeps, HttpGenerator,
    MockGenerator, Preparation, StyleChoice,
};
use crate::manifest::{load_seed_manifest, write_atomic, CommentRecord, DescriptionProvenance, Manifest, VideoManifestEntry};
use crate::media::{extract_media_series, AutoDecoder, FfmpegDecoder, MediaDecoder, SyntheticDecoder};
use crate::platform::{
    fetch_top_comments, fetch_video, ApiClients, DouyinClient, MockPlatformClient, PlatformClient, YoutubeClient,
};
use crate::provider::sha256_hex;
use crate::questionnaire::{export_questionnaire, tally, AnswerKey, SystemOutput, Tally};
use crate::score::{aggregate, format_table, score_comment, AggregateRow, BenchPair, ScoreReport, ScoringContext, ScoringProviders};
use crate::select::{HeuristicScorer, HttpJudge, JudgeProvider, LlmJudgeScorer, MockJudge, ScorerKind, StyleScorer};
use crate::sentiment::{HttpSentiment, LexiconSentiment, SentimentProvider};
use crate::signal::{build_frame_schedule_with, detect_highlights, highlight_score};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Round every float in `value` to 9 decimal places.
pub fn round_floats(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            let r = (x * 1e9).round() / 1e9;
            // -0.0 and 0.0 must print the same.
            let r = if r == 0.0 { 0.0 } else { r };
            if let Some(m) = serde_json::Number::from_f64(r) {
                *n = m;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

pub fn to_stable_json<T: Serialize>(value: &T, pretty: bool) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_floats(&mut v);
    Ok(if pretty {
        serde_json::to_string_pretty(&v)?
    } else {
        serde_json::to_string(&v)?
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_stable_json(value, true)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::io(path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))
}

/// What a stage did, or would do under `--dry-run`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: &'static str,
    pub dry_run: bool,
    pub actions: Vec<String>,
    pub skipped: Vec<String>,
}

impl StageReport {
    fn new(stage: &'static str, dry_run: bool) -> Self {
        Self {
            stage,
            dry_run,
            ..Default::default()
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let verb = if self.dry_run { "would" } else { "did" };
        for a in &self.actions {
            out.push_str(&format!("{}: {verb} {a}\n", self.stage));
        }
        for s in &self.skipped {
            out.push_str(&format!("{}: skip {s} (already done; use --force to redo)\n", self.stage));
        }
        if self.actions.is_empty() && self.skipped.is_empty() {
            out.push_str(&format!("{}: nothing to do\n", self.stage));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunFlags {
    pub force: bool,
    pub dry_run: bool,
}

/// Configured providers and clients for one run.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub flags: RunFlags,
    transcriber: Box<dyn TranscribeProvider>,
    describer: Box<dyn DescribeProvider>,
    embedder: Box<dyn EmbedProvider>,
    generator: Box<dyn GenerateProvider>,
    sentiment: Box<dyn SentimentProvider>,
    judge: Box<dyn JudgeProvider>,
    judge_model: String,
    decoder: Box<dyn MediaDecoder>,
    platform: Option<Box<dyn PlatformClient>>,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, flags: RunFlags) -> Result<Self> {
        config.validate()?;
        let root = config.workdir.clone();
        let p = &config.providers;
        let transcriber: Box<dyn TranscribeProvider> = match p.transcribe.client(&root)? {
            None => Box::new(MockTranscriber),
            Some(c) => Box::new(HttpTranscriber::new(c)),
        };
        let describer: Box<dyn DescribeProvider> = match p.describe.client(&root)? {
            None => Box::new(MockDescriber),
            Some(c) => Box::new(HttpDescriber::new(c)),
        };
        let embedder: Box<dyn EmbedProvider> = match p.embed.client(&root)? {
            None => Box::new(p.mock_embed_dim.map(MockEmbedder::new).unwrap_or_default()),
            Some(c) => Box::new(HttpEmbedder::new(c)),
        };
        let generator: Box<dyn GenerateProvider> = match p.generate.client(&root)? {
            None => Box::new(MockGenerator),
            Some(c) => Box::new(HttpGenerator::new(c)),
        };
        let sentiment: Box<dyn SentimentProvider> = match p.sentiment.client(&root)? {
            None => Box::new(LexiconSentiment),
            Some(c) => Box::new(HttpSentiment::new(c)),
        };
        let (judge, judge_model): (Box<dyn JudgeProvider>, String) = match p.judge.client(&root)? {
            None => (Box::new(MockJudge), "mock".into()),
            Some(c) => {
                let j = HttpJudge::new(c);
                let model = j.model().to_string();
                (Box::new(j), model)
            }
        };
        let ffmpeg = FfmpegDecoder::new(config.media.ffmpeg.clone());
        let decoder: Box<dyn MediaDecoder> = match config.media.decoder {
            DecoderKind::Auto => Box::new(AutoDecoder { ffmpeg }),
            DecoderKind::Ffmpeg => Box::new(ffmpeg),
            DecoderKind::Synthetic => Box::new(SyntheticDecoder),
        };
        let platform: Option<Box<dyn PlatformClient>> = match config.platform.kind {
            PlatformKind::Mock => config
                .platform
                .mock_root
                .clone()
                .map(|r| Box::new(MockPlatformClient::new(r)) as Box<dyn PlatformClient>),
            PlatformKind::Api => {
                let douyin = DouyinClient::from_env(config.platform.douyin.clone())
                    .map_err(|e| tracing::warn!(error = %e, "douyin client unavailable"))
                    .ok()
                    .map(|c| Box::new(c) as Box<dyn PlatformClient>);
                let youtube = YoutubeClient::from_env(config.platform.youtube.clone())
                    .map_err(|e| tracing::warn!(error = %e, "youtube client unavailable"))
                    .ok()
                    .map(|c| Box::new(c) as Box<dyn PlatformClient>);
                Some(Box::new(ApiClients { douyin, youtube }))
            }
        };
        Ok(Self {
            config,
            flags,
            transcriber,
            describer,
            embedder,
            generator,
            sentiment,
            judge,
            judge_model,
            decoder,
            platform,
        })
    }

    pub fn workdir(&self) -> &Path {
        &self.config.workdir
    }

    fn manifest_path(&self) -> PathBuf {
        self.workdir().join(MANIFEST_FILE)
    }

    fn load_manifest(&self, stage: &'static str) -> Result<Manifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Err(Error::stage(stage, format!("no manifest at {}; run ingest first", path.display())));
        }
        load_seed_manifest(&path)
    }

    fn save_manifest(&self, manifest: &Manifest) -> Result<()> {
        write_json(&self.manifest_path(), manifest)
    }

    fn select<'m>(&self, manifest: &'m Manifest, ids: &[String], stage: &'static str) -> Result<Vec<&'m VideoManifestEntry>> {
        if ids.is_empty() {
            return Ok(manifest.videos.iter().collect());
        }
        ids.iter()
            .map(|id| {
                manifest
                    .get(id)
                    .ok_or_else(|| Error::stage(stage, format!("unknown video id {id}")))
            })
            .collect()
    }

    fn cache(&self) -> EmbeddingCache {
        EmbeddingCache::in_workdir(self.workdir())
    }

    fn load_dataset(&self, stage: &'static str) -> Result<DatasetBundle> {
        let path = self
            .config
            .dataset
            .as_ref()
            .ok_or_else(|| Error::Config(format!("{stage} needs `dataset` set in the config")))?;
        DatasetBundle::load(path)
    }

    fn build_index(&self, dataset: &DatasetBundle) -> Result<DatasetEmbeddingIndex> {
        let cache = self.cache();
        let index = build_embedding_index(dataset, self.embedder.as_ref(), Some(&cache), self.config.retry, self.config.jobs)?;
        index.check_usable()?;
        Ok(index)
    }

    fn video_dir(&self, video_id: &str) -> PathBuf {
        self.workdir().join(video_id)
    }

    /// Fetch metadata, media and top comments for every seed entry.
    pub fn ingest(&self, seed_manifest: &Path, ids: &[String]) -> Result<StageReport> {
        let seed = load_seed_manifest(seed_manifest)?;
        let wanted: Vec<&VideoManifestEntry> = self.select(&seed, ids, "ingest")?;
        let mut manifest = if self.manifest_path().exists() {
            load_seed_manifest(&self.manifest_path())?
        } else {
            Manifest {
                videos: Vec::new(),
                extra: seed.extra.clone(),
            }
        };
        let mut report = StageReport::new("ingest", self.flags.dry_run);
        let mut todo = Vec::new();
        for entry in wanted {
            let dir = self.video_dir(&entry.video_id);
            let done = manifest.get(&entry.video_id).is_some_and(|e| e.media_path.is_some())
                && dir.join("video.mp4").exists()
                && dir.join("comments.json").exists();
            if done && !self.flags.force {
                report.skipped.push(entry.video_id.clone());
            } else {
                report.actions.push(format!("fetch {}", entry.video_id));
                todo.push(entry);
            }
        }
        if self.flags.dry_run || todo.is_empty() {
            return Ok(report);
        }
        let client = self
            .platform
            .as_deref()
            .ok_or_else(|| Error::Config("platform.mock_root must be set for the mock platform".into()))?;
        for entry in todo {
            let dir = self.video_dir(&entry.video_id);
            if self.flags.force {
                let media = dir.join("video.mp4");
                if media.exists() {
                    std::fs::remove_file(&media).map_err(|e| Error::io(&media, e))?;
                }
            }
            let fetched = fetch_video(entry, client, self.workdir())?;
            let top = fetch_top_comments(&fetched, client, self.config.platform.top_k)?;
            write_json(&dir.join("comments.json"), &CommentsFile {
                short_pool: top.short_pool,
                comments: top.comments,
            })?;
            match manifest.get_mut(&fetched.video_id) {
                Some(slot) => *slot = fetched,
                None => manifest.videos.push(fetched),
            }
            tracing::info!(video_id = %entry.video_id, "ingested");
        }
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    /// Highlight detection, adaptive frame sampling, frame extraction and
    /// transcription.
    pub fn preprocess(&self, ids: &[String]) -> Result<StageReport> {
        let mut manifest = self.load_manifest("preprocess")?;
        let mut report = StageReport::new("preprocess", self.flags.dry_run);
        let mut todo = Vec::new();
        for entry in self.select(&manifest, ids, "preprocess")? {
            if entry.media_path.is_none() {
                return Err(Error::stage("preprocess", format!("{} has no media; run ingest first", entry.video_id)));
            }
            if entry.frame_schedule.is_some() && !self.flags.force {
                report.skipped.push(entry.video_id.clone());
            } else {
                report.actions.push(format!("sample frames and transcribe {}", entry.video_id));
                todo.push(entry.video_id.clone());
            }
        }
        if self.flags.dry_run {
            return Ok(report);
        }
        for id in todo {
            let entry = manifest.get_mut(&id).expect("selected from manifest");
            let media = self.workdir().join(entry.media_path.as_deref().expect("checked"));
            let series = extract_media_series(&media, self.decoder.as_ref())?;
            let score = highlight_score(&series.audio, &series.light, &self.config.highlight)?;
            let windows = detect_highlights(&score, &self.config.highlight)?;
            let duration = series.duration_s;
            let windows: Vec<_> = windows.into_iter().filter(|w| w.end_s <= duration).collect();
            let schedule = build_frame_schedule_with(duration, &windows, self.config.media.rates)?;
            let frames_dir = self.video_dir(&id).join("frames");
            if frames_dir.exists() {
                std::fs::remove_dir_all(&frames_dir).map_err(|e| Error::io(&frames_dir, e))?;
            }
            let names = self.decoder.extract_frames(&media, &schedule.frame_times, &frames_dir)?;
            let transcript = transcribe_audio(&media, self.transcriber.as_ref(), &schedule.frame_times, self.config.retry)?;
            entry.frame_paths = names.into_iter().map(|n| format!("{id}/frames/{n}")).collect();
            entry.transcript = transcript;
            entry.highlights = Some(windows);
            entry.frame_schedule = Some(schedule);
            if !(entry.duration_s > 0.0) {
                entry.duration_s = duration;
            }
            tracing::info!(video_id = %id, frames = entry.frame_paths.len(), "preprocessed");
        }
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    pub fn describe(&self, ids: &[String]) -> Result<StageReport> {
        let mut manifest = self.load_manifest("describe")?;
        let mut report = StageReport::new("describe", self.flags.dry_run);
        let mut todo = Vec::new();
        for entry in self.select(&manifest, ids, "describe")? {
            if entry.frame_schedule.is_none() {
                return Err(Error::stage("describe", format!("{} has no frames; run preprocess first", entry.video_id)));
            }
            if entry.has_description() && !self.flags.force {
                report.skipped.push(entry.video_id.clone());
            } else {
                report.actions.push(format!("describe {}", entry.video_id));
                todo.push(entry.video_id.clone());
            }
        }
        if self.flags.dry_run {
            return Ok(report);
        }
        for id in todo {
            let entry = manifest.get_mut(&id).expect("selected from manifest");
            let request = DescribeRequest {
                transcript: entry.transcript.clone(),
                frame_paths: entry.frame_paths.clone(),
                meta: VideoMeta {
                    title: entry.title.clone(),
                    description: entry.description_text.clone(),
                    duration_s: entry.duration_s,
                },
                language: entry.language,
                max_frames: self.config.media.max_frames,
            };
            let d = describe_video(&request, self.describer.as_ref(), self.config.retry)?;
            entry.semantic_description = d.text;
            entry.description_provenance = Some(DescriptionProvenance {
                provider_id: d.provider_id,
                prompt_fingerprint: d.prompt_fingerprint,
            });
            tracing::info!(video_id = %id, "described");
        }
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    fn require_descriptions(&self, entries: &[&VideoManifestEntry], stage: &'static str) -> Result<()> {
        match entries.iter().find(|e| !e.has_description()) {
            Some(e) => Err(Error::stage(stage, format!("{} has no semantic description; run describe first", e.video_id))),
            None => Ok(()),
        }
    }

    pub fn classify(&self, ids: &[String]) -> Result<StageReport> {
        let mut manifest = self.load_manifest("classify")?;
        let mut report = StageReport::new("classify", self.flags.dry_run);
        let selected = self.select(&manifest, ids, "classify")?;
        self.require_descriptions(&selected, "classify")?;
        let mut todo = Vec::new();
        for entry in selected {
            let done = entry.category.is_some() && self.video_dir(&entry.video_id).join("classification.json").exists();
            if done && !self.flags.force {
                report.skipped.push(entry.video_id.clone());
            } else {
                report.actions.push(format!("classify {}", entry.video_id));
                todo.push(entry.video_id.clone());
            }
        }
        if self.flags.dry_run || todo.is_empty() {
            return Ok(report);
        }
        let dataset = self.load_dataset("classify")?;
        let index = self.build_index(&dataset)?;
        let cache = self.cache();
        for id in todo {
            let entry = manifest.get_mut(&id).expect("selected from manifest");
            let decision = classify_video(
                &entry.semantic_description,
                self.embedder.as_ref(),
                Some(&cache),
                &index,
                &self.config.classification,
                self.config.retry,
            )?;
            entry.category = Some(decision.category);
            write_json(&self.video_dir(&id).join("classification.json"), &decision)?;
            tracing::info!(video_id = %id, category = %decision.category, "classified");
        }
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    fn scorer(&self) -> Box<dyn StyleScorer + '_> {
        let heuristic = HeuristicScorer {
            sentiment: self.sentiment.as_ref(),
        };
        match self.config.selection.scorer_kind {
            ScorerKind::Heuristic => Box::new(heuristic),
            ScorerKind::LlmJudge => Box::new(LlmJudgeScorer {
                judge: self.judge.as_ref(),
                model: self.judge_model.clone(),
                max_retries: self.config.retry.max_retries,
                fallback: heuristic,
            }),
        }
    }

    /// Select a style template and generate one comment per requested style.
    pub fn generate(&self, ids: &[String], choice: StyleChoice, per_style: bool) -> Result<StageReport> {
        let mut manifest = self.load_manifest("generate")?;
        let mut report = StageReport::new("generate", self.flags.dry_run);
        let selected = self.select(&manifest, ids, "generate")?;
        self.require_descriptions(&selected, "generate")?;
        let selected: Vec<String> = selected.iter().map(|e| e.video_id.clone()).collect();
        let choices: Vec<StyleChoice> = match (choice, per_style) {
            (StyleChoice::Auto, true) => StyleLabel::ALL.into_iter().map(StyleChoice::Fixed).collect(),
            (c, _) => vec![c],
        };
        if self.flags.dry_run {
            for id in &selected {
                for c in &choices {
                    report.actions.push(format!("generate {id} with style {}", choice_name(*c)));
                }
            }
            return Ok(report);
        }

        let dataset = self.load_dataset("generate")?;
        let index = self.build_index(&dataset)?;
        let cache = self.cache();
        let scorer = self.scorer();
        let deps = GenerationDeps {
            dataset: &dataset,
            index: &index,
            embedder: self.embedder.as_ref(),
            embed_cache: Some(&cache),
            sentiment: self.sentiment.as_ref(),
            scorer: scorer.as_ref(),
            generator: self.generator.as_ref(),
            classify: self.config.classification,
            selection: crate::select::SelectionParams {
                seed: self.config.seed,
                ..self.config.selection.clone()
            },
            generation: self.config.generation.clone(),
            retry: self.config.retry,
            jobs: self.config.jobs,
        };

        for id in selected {
            let dir = self.video_dir(&id);
            let entry = manifest.get(&id).expect("selected from manifest").clone();
            let selection_path = dir.join("selection.json");
            let prep: Preparation = if selection_path.exists() && !self.flags.force {
                read_json(&selection_path)?
            } else {
                let prep = prepare_generation(&entry, &deps)?;
                write_json(&selection_path, &prep)?;
                prep
            };
            let out_path = dir.join("generated.jsonl");
            let mut records: Vec<GeneratedRecord> = read_jsonl(&out_path)?;
            let mut changed = false;
            for c in &choices {
                let (request, style_defaulted) = generation_request(&entry, &prep, *c, &dataset, &deps.generation);
                let fingerprint = crate::generate::build_prompt(&request)?.fingerprint();
                let existing = records.iter().position(|r| r.request_fingerprint == fingerprint);
                if existing.is_some() && !self.flags.force {
                    report.skipped.push(format!("{id} style {}", choice_name(*c)));
                    continue;
                }
                let comment = generate_comment(&request, self.generator.as_ref(), &deps.generation, deps.retry)?;
                let record = GeneratedRecord {
                    video_id: id.clone(),
                    style_requested: choice_name(*c),
                    style: comment.style,
                    style_defaulted,
                    category: prep.decision.category,
                    pool_union_fallback: prep.pool_union_fallback,
                    template_comment_id: request.style_template.comment_id.clone(),
                    zero_shot: request.few_shot.is_empty(),
                    text: comment.text,
                    language: comment.language,
                    request_fingerprint: comment.request_fingerprint,
                    provider_id: comment.provider_id,
                    reasked: comment.reasked,
                    truncated: comment.truncated,
                };
                match existing {
                    Some(i) => records[i] = record,
                    None => records.push(record),
                }
                changed = true;
                report.actions.push(format!("generate {id} with style {}", choice_name(*c)));
            }
            if changed {
                let mut body = String::new();
                for r in &records {
                    body.push_str(&to_stable_json(r, false)?);
                    body.push('\n');
                }
                write_atomic(&out_path, body.as_bytes())?;
            }
            if let Some(e) = manifest.get_mut(&id) {
                if e.category.is_none() {
                    e.category = Some(prep.decision.category);
                }
            }
            tracing::info!(video_id = %id, "generated");
        }
        self.save_manifest(&manifest)?;
        Ok(report)
    }

    /// Candidates from every `generated.jsonl` in the workdir, as system `stylecast`.
    pub fn generated_candidates(&self) -> Result<Vec<Candidate>> {
        let manifest = self.load_manifest("score")?;
        let mut out = Vec::new();
        for v in &manifest.videos {
            for r in read_jsonl::<GeneratedRecord>(&self.video_dir(&v.video_id).join("generated.jsonl"))? {
                out.push(Candidate {
                    system: "stylecast".into(),
                    video_id: r.video_id,
                    text: r.text,
                    language: Some(r.language),
                    video_text: None,
                });
            }
        }
        Ok(out)
    }

    /// Score candidates against benchmark and training corpora. Writes
    /// `scores/reports.jsonl` and `scores/summary.txt` under the workdir.
    pub fn score(&self, candidates: &[Candidate], bench: &[BenchPair], train: &[String]) -> Result<(StageReport, Vec<AggregateRow>)> {
        let mut report = StageReport::new("score", self.flags.dry_run);
        report.actions.push(format!(
            "score {} candidates against {} benchmark pairs and {} training comments",
            candidates.len(),
            bench.len(),
            train.len()
        ));
        if self.flags.dry_run {
            return Ok((report, Vec::new()));
        }
        let manifest = if self.manifest_path().exists() {
            Some(load_seed_manifest(&self.manifest_path())?)
        } else {
            None
        };
        let cache = self.cache();
        let ctx = ScoringContext::build(bench, train, self.embedder.as_ref(), Some(&cache), self.config.scoring.clone(), self.config.retry)?;
        let providers = ScoringProviders {
            embedder: self.embedder.as_ref(),
            cache: Some(&cache),
            sentiment: self.sentiment.as_ref(),
            retry: self.config.retry,
        };
        let mut rows = Vec::with_capacity(candidates.len());
        for c in candidates {
            let entry = manifest.as_ref().and_then(|m| m.get(&c.video_id));
            let video_text = match (&c.video_text, entry) {
                (Some(t), _) => t.clone(),
                (None, Some(e)) if e.has_description() => e.semantic_description.clone(),
                _ => {
                    return Err(Error::stage(
                        "score",
                        format!("no video text for {}; give video_text or run describe first", c.video_id),
                    ))
                }
            };
            let language = c.language.or(entry.map(|e| e.language)).ok_or_else(|| Error::UnknownLanguage(c.video_id.clone()))?;
            let r = score_comment(&c.text, language, &video_text, &ctx, &providers)?;
            rows.push(ScoredCandidate {
                system: c.system.clone(),
                video_id: c.video_id.clone(),
                text: c.text.clone(),
                report: r,
            });
        }
        let table = aggregate(rows.iter().map(|r| (r.system.as_str(), &r.report)));
        let dir = self.workdir().join("scores");
        let mut body = String::new();
        for r in &rows {
            body.push_str(&to_stable_json(r, false)?);
            body.push('\n');
        }
        write_atomic(&dir.join("reports.jsonl"), body.as_bytes())?;
        write_atomic(&dir.join("summary.txt"), format_table(&table).as_bytes())?;
        write_json(&dir.join("context.json"), &serde_json::json!({
            "sim_baseline": ctx.sim_baseline,
            "sigma": ctx.sigma,
            "references": ctx.reference_count(),
        }))?;
        Ok((report, table))
    }

    /// Blinded packet and answer key, one item per video in first-seen order.
    pub fn questionnaire(&self, candidates: &[Candidate], seed: u64, out_dir: &Path) -> Result<StageReport> {
        let mut report = StageReport::new("questionnaire", self.flags.dry_run);
        let mut videos: Vec<String> = Vec::new();
        let mut systems: Vec<String> = Vec::new();
        for c in candidates {
            if !videos.contains(&c.video_id) {
                videos.push(c.video_id.clone());
            }
            if !systems.contains(&c.system) {
                systems.push(c.system.clone());
            }
        }
        let outputs: Vec<SystemOutput> = candidates
            .iter()
            .map(|c| SystemOutput {
                system: c.system.clone(),
                video_id: c.video_id.clone(),
                text: c.text.clone(),
            })
            .collect();
        let (packet, key) = export_questionnaire(&videos, &systems, &outputs, seed)?;
        report.actions.push(format!(
            "write {} items for {} systems to {}",
            packet.items.len(),
            systems.len(),
            out_dir.display()
        ));
        if !self.flags.dry_run {
            write_json(&out_dir.join("packet.json"), &packet)?;
            write_json(&out_dir.join("answer_key.json"), &key)?;
        }
        Ok(report)
    }
}

pub fn tally_files(key_path: &Path, responses: &Path) -> Result<Tally> {
    let key: AnswerKey = read_json(key_path)?;
    let f = std::fs::File::open(responses).map_err(|e| Error::io(responses, e))?;
    tally(&key, f)
}

fn choice_name(c: StyleChoice) -> String {
    match c {
        StyleChoice::Auto => "auto".into(),
        StyleChoice::Fixed(s) => s.to_string(),
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::InvalidDataset(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentsFile {
    pub short_pool: bool,
    pub comments: Vec<CommentRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub video_id: String,
    pub style_requested: String,
    pub style: StyleLabel,
    pub style_defaulted: bool,
    pub category: VideoCategory,
    pub pool_union_fallback: bool,
    pub template_comment_id: String,
    pub zero_shot: bool,
    pub text: String,
    pub language: Language,
    pub request_fingerprint: String,
    pub provider_id: String,
    pub reasked: bool,
    pub truncated: bool,
}

/// One comment to score or to put in a questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub system: String,
    pub video_id: String,
    pub text: String,
    #[serde(default)]
    pub language: Option<Language>,
    /// Overrides the video's semantic description from the workdir manifest.
    #[serde(default)]
    pub video_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub system: String,
    pub video_id: String,
    pub text: String,
    #[serde(flatten)]
    pub report: ScoreReport,
}

pub fn load_candidates(path: &Path) -> Result<Vec<Candidate>> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    read_jsonl(path)
}

/// Benchmark pairs from either a `[{comment, video_text}]` list or a dataset
/// bundle, where each comment pairs with its video's description.
pub fn load_bench(path: &Path) -> Result<Vec<BenchPair>> {
    let doc: Value = read_json(path)?;
    if doc.is_array() {
        return serde_json::from_value(doc).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())));
    }
    let bundle: DatasetBundle = serde_json::from_value(doc).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))?;
    Ok(bundle
        .comments()
        .map(|(v, c)| BenchPair {
            comment: c.text.clone(),
            video_text: v.semantic_description.clone(),
        })
        .collect())
}

/// Training comment texts from either a list of strings or a dataset bundle.
pub fn load_train(path: &Path) -> Result<Vec<String>> {
    let doc: Value = read_json(path)?;
    if doc.is_array() {
        return serde_json::from_value(doc).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())));
    }
    let bundle: DatasetBundle = serde_json::from_value(doc).map_err(|e| Error::InvalidDataset(format!("{}: {e}", path.display())))?;
    Ok(bundle.comments().map(|(_, c)| c.text.clone()).collect())
}

/// Build a dataset bundle from a categorized, described manifest and a
/// comment list. With `per_cell` set the balance check is enforced.
pub fn build_dataset(manifest: &Path, comments: &Path, per_cell: Option<usize>) -> Result<(DatasetBundle, String)> {
    let m = load_seed_manifest(manifest)?;
    let comments: Vec<CommentRecord> = read_json(comments)?;
    let counts = crate::dataset::cell_counts(&m.videos);
    let bundle = assemble_dataset_with(
        &m.videos,
        &comments,
        per_cell.map(|per_cell| crate::dataset::BalancePolicy { per_cell }),
    )?;
    let mut summary = String::new();
    for ((p, c), n) in counts {
        summary.push_str(&format!("{p}/{c}: {n}\n"));
    }
    Ok((bundle, summary))
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    comment_id: String,
    label: String,
}

/// Apply `comment_id,label` rows to a dataset. Returns the new label
/// histogram. Unknown ids or labels fail before anything is written.
pub fn annotate_dataset(dataset_path: &Path, labels_csv: &Path, annotator: &str, dry_run: bool) -> Result<String> {
    let mut bundle = DatasetBundle::load(dataset_path)?;
    let f = std::fs::File::open(labels_csv).map_err(|e| Error::io(labels_csv, e))?;
    let mut rows = Vec::new();
    for (i, row) in csv::Reader::from_reader(f).deserialize::<LabelRow>().enumerate() {
        let row = row.map_err(|e| Error::InvalidDataset(format!("{} row {}: {e}", labels_csv.display(), i + 1)))?;
        let label: StyleLabel = row.label.trim().parse().map_err(Error::InvalidDataset)?;
        rows.push((row.comment_id.trim().to_string(), label));
    }
    let known: HashSet<String> = bundle.comments().map(|(_, c)| c.comment_id.clone()).collect();
    if let Some((id, _)) = rows.iter().find(|(id, _)| !known.contains(id)) {
        return Err(Error::InvalidDataset(format!("unknown comment id {id}")));
    }
    for (id, label) in &rows {
        for v in bundle.videos.iter_mut() {
            for c in v.comments.iter_mut().filter(|c| &c.comment_id == id) {
                *c = annotate_style(c, *label, annotator);
            }
        }
    }
    if !dry_run {
        bundle.save(dataset_path)?;
    }
    let mut out = String::new();
    for (label, n) in label_histogram(bundle.comments().map(|(_, c)| c)) {
        out.push_str(&format!("{}: {n}\n", label.map_or("unlabeled".to_string(), |l| l.to_string())));
    }
    Ok(out)
}

/// sha256 over every file under `root` except `logs/`, as
/// `path NUL sha256(content) LF` lines in path order.
pub fn tree_digest(root: &Path) -> Result<String> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, String)>) -> Result<()> {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        entries.sort();
        for p in entries {
            let rel = p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            if rel == "logs" {
                continue;
            }
            if p.is_dir() {
                walk(&p, root, out)?;
            } else {
                let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
                out.push((rel, sha256_hex(&bytes)));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(root, root, &mut files)?;
    files.sort();
    let listing: String = files.iter().map(|(p, h)| format!("{p}\0{h}\n")).collect();
    Ok(sha256_hex(listing.as_bytes()))
}
