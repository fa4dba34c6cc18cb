//! Platform access: metadata, media and comments for a manifest entry.
//!
//! [`PlatformClient`] has three implementations: the Douyin Open Platform
//! client, the YouTube Data API v3 client and a deterministic mock that
//! serves fixtures from disk. [`ApiClients`] routes an entry to the client of
//! its platform.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::Platform;
use crate::error::{Error, Result};
use crate::manifest::{write_atomic, CommentRecord, VideoManifestEntry};
use crate::provider::RateLimiter;

pub const DOUYIN_TOKEN_ENV: &str = "DOUYIN_API_TOKEN";
pub const YOUTUBE_KEY_ENV: &str = "YOUTUBE_API_KEY";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VideoMetadata {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description_text: String,
    #[serde(default)]
    pub duration_s: f64,
}

/// A comment as returned by a platform, before it is bound to a manifest
/// entry. Order of the returned list is the platform's order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawComment {
    pub comment_id: String,
    pub text: String,
    pub like_count: u64,
}

pub trait PlatformClient: Send + Sync {
    fn fetch_metadata(&self, entry: &VideoManifestEntry) -> Result<VideoMetadata>;
    fn download_media(&self, entry: &VideoManifestEntry, dest: &Path) -> Result<()>;
    fn fetch_comments(&self, entry: &VideoManifestEntry) -> Result<Vec<RawComment>>;
}

/// The id the platform knows the video by: an explicit `platform_id` key in
/// the entry, else the `video_id` without its `<platform>-` prefix.
pub fn platform_item_id(entry: &VideoManifestEntry) -> String {
    if let Some(id) = entry.extra.get("platform_id").and_then(Value::as_str) {
        return id.to_string();
    }
    let prefix = format!("{}-", entry.platform);
    entry.video_id.strip_prefix(&prefix).unwrap_or(&entry.video_id).to_string()
}

/// Populate an entry with platform metadata and download its media to
/// `<workdir>/<video_id>/video.mp4`. Existing media is not downloaded again.
/// On failure the caller's entry is untouched.
pub fn fetch_video(entry: &VideoManifestEntry, client: &dyn PlatformClient, workdir: &Path) -> Result<VideoManifestEntry> {
    let meta = client.fetch_metadata(entry)?;
    let rel = format!("{}/video.mp4", entry.video_id);
    let dest = workdir.join(&rel);
    if !dest.exists() {
        let dir = dest.parent().expect("video dir");
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let partial = dest.with_extension("part");
        client.download_media(entry, &partial)?;
        std::fs::rename(&partial, &dest).map_err(|e| Error::io(&dest, e))?;
    }
    let mut out = entry.clone();
    if !meta.title.is_empty() {
        out.title = meta.title;
    }
    if !meta.description_text.is_empty() {
        out.description_text = meta.description_text;
    }
    if meta.duration_s > 0.0 {
        out.duration_s = meta.duration_s;
    }
    out.media_path = Some(rel);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopComments {
    pub comments: Vec<CommentRecord>,
    /// Fewer than `k` comments were available.
    pub short_pool: bool,
}

/// The `k` most-liked comments, descending; equal like counts keep the
/// platform's order.
pub fn top_k_by_likes(pool: &[RawComment], k: usize) -> (Vec<RawComment>, bool) {
    let mut ranked: Vec<&RawComment> = pool.iter().collect();
    ranked.sort_by(|a, b| b.like_count.cmp(&a.like_count));
    let short = pool.len() < k;
    (ranked.into_iter().take(k).cloned().collect(), short)
}

pub fn fetch_top_comments(entry: &VideoManifestEntry, client: &dyn PlatformClient, k: usize) -> Result<TopComments> {
    if k == 0 {
        return Err(Error::InvalidParams("k must be positive".into()));
    }
    let pool = client.fetch_comments(entry)?;
    let (top, short_pool) = top_k_by_likes(&pool, k);
    if short_pool {
        tracing::warn!(video_id = %entry.video_id, available = pool.len(), k, "short_pool");
    }
    let comments = top
        .into_iter()
        .map(|c| CommentRecord::new(c.comment_id, &entry.video_id, c.text, c.like_count, entry.language))
        .collect();
    Ok(TopComments { comments, short_pool })
}

/// Serves `<root>/<video_id>/{metadata.json, comments.json, media.*}`.
#[derive(Debug)]
pub struct MockPlatformClient {
    root: PathBuf,
    fail_status: Option<u16>,
    downloads: AtomicUsize,
}

impl MockPlatformClient {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            fail_status: None,
            downloads: AtomicUsize::new(0),
        }
    }

    /// Every call fails as if the platform answered with `status`.
    pub fn failing(root: impl Into<PathBuf>, status: u16) -> Self {
        Self {
            fail_status: Some(status),
            ..Self::new(root)
        }
    }

    pub fn download_count(&self) -> usize {
        self.downloads.load(Ordering::SeqCst)
    }

    fn check(&self, entry: &VideoManifestEntry) -> Result<()> {
        match self.fail_status {
            Some(code) => Err(status_error(entry.platform, code, "mock failure".into())),
            None => Ok(()),
        }
    }

    fn fixture(&self, entry: &VideoManifestEntry, name: &str) -> PathBuf {
        self.root.join(&entry.video_id).join(name)
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, path: &Path) -> Result<T> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Platform {
                platform: "mock".into(),
                code: 404,
                message: format!("no fixture {}", path.display()),
            },
            _ => Error::io(path, e),
        })?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl PlatformClient for MockPlatformClient {
    fn fetch_metadata(&self, entry: &VideoManifestEntry) -> Result<VideoMetadata> {
        self.check(entry)?;
        self.read_json(&self.fixture(entry, "metadata.json"))
    }

    fn download_media(&self, entry: &VideoManifestEntry, dest: &Path) -> Result<()> {
        self.check(entry)?;
        let dir = self.root.join(&entry.video_id);
        let source = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.file_stem().is_some_and(|s| s == "media"))
            .min()
            .ok_or_else(|| Error::Platform {
                platform: "mock".into(),
                code: 404,
                message: format!("no media fixture in {}", dir.display()),
            })?;
        let bytes = std::fs::read(&source).map_err(|e| Error::io(&source, e))?;
        write_atomic(dest, &bytes)?;
        self.downloads.fetch_add(1, Ordering::SeqCst);
        Ok(())
    }

    fn fetch_comments(&self, entry: &VideoManifestEntry) -> Result<Vec<RawComment>> {
        self.check(entry)?;
        self.read_json(&self.fixture(entry, "comments.json"))
    }
}

fn status_error(platform: Platform, code: u16, message: String) -> Error {
    if code == 401 || code == 403 {
        Error::PlatformAuth {
            platform: platform.to_string(),
            code,
            message,
        }
    } else {
        Error::Platform {
            platform: platform.to_string(),
            code,
            message,
        }
    }
}

struct HttpBase {
    platform: Platform,
    client: reqwest::blocking::Client,
    limiter: RateLimiter,
}

impl HttpBase {
    fn new(platform: Platform, rate_per_s: Option<f64>) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(60))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self {
            platform,
            client,
            limiter: RateLimiter::per_second(rate_per_s),
        })
    }

    fn send(&self, req: reqwest::blocking::RequestBuilder) -> Result<reqwest::blocking::Response> {
        self.limiter.acquire();
        let resp = req.send().map_err(|e| Error::Platform {
            platform: self.platform.to_string(),
            code: 0,
            message: e.to_string(),
        })?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(status_error(self.platform, status.as_u16(), body));
        }
        Ok(resp)
    }

    fn json(&self, req: reqwest::blocking::RequestBuilder) -> Result<Value> {
        let resp = self.send(req)?;
        resp.json().map_err(|e| Error::Platform {
            platform: self.platform.to_string(),
            code: 0,
            message: format!("bad json: {e}"),
        })
    }

    fn download(&self, url: &str, dest: &Path) -> Result<()> {
        let resp = self.send(self.client.get(url))?;
        let bytes = resp.bytes().map_err(|e| Error::Platform {
            platform: self.platform.to_string(),
            code: 0,
            message: e.to_string(),
        })?;
        write_atomic(dest, &bytes)
    }

    fn missing(&self, what: &str) -> Error {
        Error::Platform {
            platform: self.platform.to_string(),
            code: 0,
            message: format!("response lacks {what}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoutubeConfig {
    #[serde(default = "default_youtube_base")]
    pub base_url: String,
    /// `{id}` is replaced by the video id. The Data API itself does not
    /// serve media, so downloads need a separate source.
    #[serde(default)]
    pub media_url_template: Option<String>,
    #[serde(default = "default_pages")]
    pub max_comment_pages: usize,
    #[serde(default)]
    pub rate_per_s: Option<f64>,
}

impl Default for YoutubeConfig {
    fn default() -> Self {
        Self {
            base_url: default_youtube_base(),
            media_url_template: None,
            max_comment_pages: default_pages(),
            rate_per_s: None,
        }
    }
}

fn default_youtube_base() -> String {
    "https://www.googleapis.com/youtube/v3".into()
}

fn default_douyin_base() -> String {
    "https://open.douyin.com".into()
}

fn default_pages() -> usize {
    5
}

/// YouTube Data API v3: `videos` for metadata, `commentThreads` for comments.
pub struct YoutubeClient {
    http: HttpBase,
    config: YoutubeConfig,
    api_key: String,
}

impl YoutubeClient {
    pub fn new(config: YoutubeConfig, api_key: String) -> Result<Self> {
        Ok(Self {
            http: HttpBase::new(Platform::Youtube, config.rate_per_s)?,
            config,
            api_key,
        })
    }

    pub fn from_env(config: YoutubeConfig) -> Result<Self> {
        let key = std::env::var(YOUTUBE_KEY_ENV).map_err(|_| Error::Config(format!("{YOUTUBE_KEY_ENV} is not set")))?;
        Self::new(config, key)
    }
}

impl PlatformClient for YoutubeClient {
    fn fetch_metadata(&self, entry: &VideoManifestEntry) -> Result<VideoMetadata> {
        let id = platform_item_id(entry);
        let url = format!("{}/videos", self.config.base_url);
        let doc = self.http.json(self.http.client.get(url).query(&[
            ("part", "snippet,contentDetails"),
            ("id", id.as_str()),
            ("key", self.api_key.as_str()),
        ]))?;
        let item = doc.pointer("/items/0").ok_or_else(|| self.http.missing("items[0]"))?;
        let text = |ptr: &str| item.pointer(ptr).and_then(Value::as_str).unwrap_or_default().to_string();
        Ok(VideoMetadata {
            title: text("/snippet/title"),
            description_text: text("/snippet/description"),
            duration_s: parse_iso8601_duration(&text("/contentDetails/duration")).unwrap_or(0.0),
        })
    }

    fn download_media(&self, entry: &VideoManifestEntry, dest: &Path) -> Result<()> {
        let template = self.config.media_url_template.as_ref().ok_or_else(|| Error::Platform {
            platform: "youtube".into(),
            code: 0,
            message: "the Data API does not serve media; set media_url_template".into(),
        })?;
        self.http.download(&template.replace("{id}", &platform_item_id(entry)), dest)
    }

    fn fetch_comments(&self, entry: &VideoManifestEntry) -> Result<Vec<RawComment>> {
        let id = platform_item_id(entry);
        let url = format!("{}/commentThreads", self.config.base_url);
        let mut out = Vec::new();
        let mut page_token: Option<String> = None;
        for _ in 0..self.config.max_comment_pages.max(1) {
            let mut query = vec![
                ("part", "snippet".to_string()),
                ("videoId", id.clone()),
                ("maxResults", "100".to_string()),
                ("order", "relevance".to_string()),
                ("textFormat", "plainText".to_string()),
                ("key", self.api_key.clone()),
            ];
            if let Some(t) = &page_token {
                query.push(("pageToken", t.clone()));
            }
            let doc = self.http.json(self.http.client.get(&url).query(&query))?;
            for item in doc.get("items").and_then(Value::as_array).into_iter().flatten() {
                let top = item.pointer("/snippet/topLevelComment");
                let comment_id = top.and_then(|t| t.get("id")).and_then(Value::as_str);
                let snippet = top.and_then(|t| t.get("snippet"));
                let text = snippet
                    .and_then(|s| s.get("textOriginal").or_else(|| s.get("textDisplay")))
                    .and_then(Value::as_str);
                let likes = snippet.and_then(|s| s.get("likeCount")).and_then(Value::as_u64).unwrap_or(0);
                if let (Some(comment_id), Some(text)) = (comment_id, text) {
                    out.push(RawComment {
                        comment_id: comment_id.to_string(),
                        text: text.to_string(),
                        like_count: likes,
                    });
                }
            }
            page_token = doc.get("nextPageToken").and_then(Value::as_str).map(str::to_owned);
            if page_token.is_none() {
                break;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DouyinConfig {
    #[serde(default = "default_douyin_base")]
    pub base_url: String,
    /// `open_id` of the authorized account the access token belongs to.
    #[serde(default)]
    pub open_id: String,
    #[serde(default)]
    pub media_url_template: Option<String>,
    #[serde(default = "default_pages")]
    pub max_comment_pages: usize,
    #[serde(default)]
    pub rate_per_s: Option<f64>,
}

impl Default for DouyinConfig {
    fn default() -> Self {
        Self {
            base_url: default_douyin_base(),
            open_id: String::new(),
            media_url_template: None,
            max_comment_pages: default_pages(),
            rate_per_s: None,
        }
    }
}

/// Douyin Open Platform: `video_data` for metadata and `item/comment/list`
/// for comments, authenticated with the `access-token` header.
pub struct DouyinClient {
    http: HttpBase,
    config: DouyinConfig,
    token: String,
}

impl DouyinClient {
    pub fn new(config: DouyinConfig, token: String) -> Result<Self> {
        Ok(Self {
            http: HttpBase::new(Platform::Douyin, config.rate_per_s)?,
            config,
            token,
        })
    }

    pub fn from_env(config: DouyinConfig) -> Result<Self> {
        let token = std::env::var(DOUYIN_TOKEN_ENV).map_err(|_| Error::Config(format!("{DOUYIN_TOKEN_ENV} is not set")))?;
        Self::new(config, token)
    }

    /// Douyin reports failures inside a 200 body via `data.error_code`.
    fn check_body(&self, doc: &Value) -> Result<()> {
        let code = doc.pointer("/data/error_code").and_then(Value::as_i64).unwrap_or(0);
        if code == 0 {
            return Ok(());
        }
        let message = doc
            .pointer("/data/description")
            .and_then(Value::as_str)
            .unwrap_or("error")
            .to_string();
        // 2190002..2190008 are the token/authorization family.
        if (2_190_002..=2_190_008).contains(&code) {
            return Err(Error::PlatformAuth {
                platform: "douyin".into(),
                code: 403,
                message: format!("{code}: {message}"),
            });
        }
        Err(Error::Platform {
            platform: "douyin".into(),
            code: 0,
            message: format!("{code}: {message}"),
        })
    }

    fn video_data(&self, entry: &VideoManifestEntry) -> Result<Value> {
        let url = format!("{}/api/douyin/v1/video/video_data/", self.config.base_url);
        let body = serde_json::json!({ "item_ids": [platform_item_id(entry)] });
        let doc = self.http.json(
            self.http
                .client
                .post(url)
                .query(&[("open_id", self.config.open_id.as_str())])
                .header("access-token", &self.token)
                .json(&body),
        )?;
        self.check_body(&doc)?;
        doc.pointer("/data/list/0").cloned().ok_or_else(|| self.http.missing("data.list[0]"))
    }
}

impl PlatformClient for DouyinClient {
    fn fetch_metadata(&self, entry: &VideoManifestEntry) -> Result<VideoMetadata> {
        let item = self.video_data(entry)?;
        let title = item.get("title").and_then(Value::as_str).unwrap_or_default().to_string();
        let desc = item
            .get("desc")
            .or_else(|| item.get("description"))
            .and_then(Value::as_str)
            .unwrap_or(&title)
            .to_string();
        // Duration arrives in milliseconds.
        let duration_s = item.get("duration").and_then(Value::as_f64).unwrap_or(0.0) / 1000.0;
        Ok(VideoMetadata {
            title,
            description_text: desc,
            duration_s,
        })
    }

    fn download_media(&self, entry: &VideoManifestEntry, dest: &Path) -> Result<()> {
        let url = match &self.config.media_url_template {
            Some(t) => t.replace("{id}", &platform_item_id(entry)),
            None => self
                .video_data(entry)?
                .get("play_url")
                .and_then(Value::as_str)
                .map(str::to_owned)
                .ok_or_else(|| self.http.missing("play_url"))?,
        };
        self.http.download(&url, dest)
    }

    fn fetch_comments(&self, entry: &VideoManifestEntry) -> Result<Vec<RawComment>> {
        let url = format!("{}/item/comment/list/", self.config.base_url);
        let item_id = platform_item_id(entry);
        let mut out = Vec::new();
        let mut cursor = 0i64;
        for _ in 0..self.config.max_comment_pages.max(1) {
            let doc = self.http.json(
                self.http
                    .client
                    .get(&url)
                    .query(&[
                        ("open_id", self.config.open_id.clone()),
                        ("item_id", item_id.clone()),
                        ("count", "50".to_string()),
                        ("cursor", cursor.to_string()),
                    ])
                    .header("access-token", &self.token),
            )?;
            self.check_body(&doc)?;
            for c in doc.pointer("/data/list").and_then(Value::as_array).into_iter().flatten() {
                let id = c.get("comment_id").and_then(Value::as_str);
                let text = c.get("content").and_then(Value::as_str);
                let likes = c.get("digg_count").and_then(Value::as_u64).unwrap_or(0);
                if let (Some(id), Some(text)) = (id, text) {
                    out.push(RawComment {
                        comment_id: id.to_string(),
                        text: text.to_string(),
                        like_count: likes,
                    });
                }
            }
            let has_more = doc.pointer("/data/has_more").and_then(Value::as_bool).unwrap_or(false);
            cursor = doc.pointer("/data/cursor").and_then(Value::as_i64).unwrap_or(0);
            if !has_more {
                break;
            }
        }
        Ok(out)
    }
}

/// Dispatches by `entry.platform`.
pub struct ApiClients {
    pub douyin: Option<Box<dyn PlatformClient>>,
    pub youtube: Option<Box<dyn PlatformClient>>,
}

impl ApiClients {
    fn pick(&self, entry: &VideoManifestEntry) -> Result<&dyn PlatformClient> {
        let client = match entry.platform {
            Platform::Douyin => self.douyin.as_deref(),
            Platform::Youtube => self.youtube.as_deref(),
        };
        client.ok_or_else(|| Error::Config(format!("no {} client configured", entry.platform)))
    }
}

impl PlatformClient for ApiClients {
    fn fetch_metadata(&self, entry: &VideoManifestEntry) -> Result<VideoMetadata> {
        self.pick(entry)?.fetch_metadata(entry)
    }

    fn download_media(&self, entry: &VideoManifestEntry, dest: &Path) -> Result<()> {
        self.pick(entry)?.download_media(entry, dest)
    }

    fn fetch_comments(&self, entry: &VideoManifestEntry) -> Result<Vec<RawComment>> {
        self.pick(entry)?.fetch_comments(entry)
    }
}

/// `PT#H#M#S` durations as used by the YouTube API.
pub fn parse_iso8601_duration(s: &str) -> Option<f64> {
    let rest = s.strip_prefix('P')?;
    let (days, time) = match rest.split_once('T') {
        Some((d, t)) => (d, t),
        None => (rest, ""),
    };
    let mut total = 0.0;
    let mut take = |part: &str, units: &[(char, f64)]| -> Option<()> {
        let mut num = String::new();
        for c in part.chars() {
            if c.is_ascii_digit() || c == '.' {
                num.push(c);
            } else {
                let scale = units.iter().find(|(u, _)| *u == c)?.1;
                total += num.parse::<f64>().ok()? * scale;
                num.clear();
            }
        }
        num.is_empty().then_some(())
    };
    take(days, &[('D', 86_400.0), ('W', 604_800.0)])?;
    take(time, &[('H', 3600.0), ('M', 60.0), ('S', 1.0)])?;
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Language;

    fn raw(likes: &[u64]) -> Vec<RawComment> {
        likes
            .iter()
            .enumerate()
            .map(|(i, l)| RawComment {
                comment_id: format!("c{i}"),
                text: format!("comment {i}"),
                like_count: *l,
            })
            .collect()
    }

    #[test]
    fn top_five_with_ties_in_platform_order() {
        let (top, short) = top_k_by_likes(&raw(&[9, 3, 7, 7, 1, 0]), 5);
        let likes: Vec<_> = top.iter().map(|c| c.like_count).collect();
        assert_eq!(likes, [9, 7, 7, 3, 1]);
        assert_eq!(top[1].comment_id, "c2");
        assert_eq!(top[2].comment_id, "c3");
        assert!(!short);
    }

    #[test]
    fn short_pool_returns_everything() {
        let (top, short) = top_k_by_likes(&raw(&[1, 2, 3]), 5);
        assert_eq!(top.len(), 3);
        assert!(short);
    }

    fn fixture_dir() -> (tempfile::TempDir, VideoManifestEntry) {
        let dir = tempfile::tempdir().unwrap();
        let vid = dir.path().join("youtube-abc");
        std::fs::create_dir_all(&vid).unwrap();
        std::fs::write(
            vid.join("metadata.json"),
            r#"{"title": "Cat vs cucumber", "description_text": "classic", "duration_s": 12.5}"#,
        )
        .unwrap();
        std::fs::write(vid.join("media.mp4"), b"not really an mp4").unwrap();
        std::fs::write(
            vid.join("comments.json"),
            r#"[{"comment_id": "a", "text": "lol", "like_count": 4},
                {"comment_id": "b", "text": "the jump", "like_count": 40}]"#,
        )
        .unwrap();
        let entry = VideoManifestEntry::new("youtube-abc", Platform::Youtube, "https://youtu.be/abc");
        (dir, entry)
    }

    #[test]
    fn mock_fetch_populates_entry() {
        let (fixtures, entry) = fixture_dir();
        let work = tempfile::tempdir().unwrap();
        let client = MockPlatformClient::new(fixtures.path());
        let out = fetch_video(&entry, &client, work.path()).unwrap();
        assert_eq!(out.title, "Cat vs cucumber");
        assert_eq!(out.duration_s, 12.5);
        assert_eq!(out.media_path.as_deref(), Some("youtube-abc/video.mp4"));
        assert_eq!(std::fs::read(work.path().join("youtube-abc/video.mp4")).unwrap(), b"not really an mp4");
    }

    #[test]
    fn second_fetch_does_not_download_again() {
        let (fixtures, entry) = fixture_dir();
        let work = tempfile::tempdir().unwrap();
        let client = MockPlatformClient::new(fixtures.path());
        fetch_video(&entry, &client, work.path()).unwrap();
        fetch_video(&entry, &client, work.path()).unwrap();
        assert_eq!(client.download_count(), 1);
    }

    #[test]
    fn auth_failure_leaves_entry_alone() {
        let (fixtures, entry) = fixture_dir();
        let work = tempfile::tempdir().unwrap();
        let client = MockPlatformClient::failing(fixtures.path(), 403);
        let before = entry.clone();
        let err = fetch_video(&entry, &client, work.path()).unwrap_err();
        assert!(err.to_string().starts_with("platform auth"), "{err}");
        assert_eq!(entry, before);
        assert!(!work.path().join("youtube-abc").exists());
    }

    #[test]
    fn comments_are_bound_to_entry() {
        let (fixtures, entry) = fixture_dir();
        let client = MockPlatformClient::new(fixtures.path());
        let top = fetch_top_comments(&entry, &client, 5).unwrap();
        assert!(top.short_pool);
        assert_eq!(top.comments[0].comment_id, "b");
        assert_eq!(top.comments[0].video_id, "youtube-abc");
        assert_eq!(top.comments[0].language, Language::En);
    }

    #[test]
    fn iso_durations() {
        assert_eq!(parse_iso8601_duration("PT1M3S"), Some(63.0));
        assert_eq!(parse_iso8601_duration("PT1H"), Some(3600.0));
        assert_eq!(parse_iso8601_duration("P1DT2S"), Some(86_402.0));
        assert_eq!(parse_iso8601_duration("garbage"), None);
    }

    #[test]
    fn item_id_strips_prefix() {
        let mut e = VideoManifestEntry::new("douyin-7301", Platform::Douyin, "https://www.douyin.com/video/7301");
        assert_eq!(platform_item_id(&e), "7301");
        e.extra.insert("platform_id".into(), "999".into());
        assert_eq!(platform_item_id(&e), "999");
    }
}
