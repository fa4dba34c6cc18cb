//! Pipeline configuration, read from a TOML file. Secrets never live in the
//! file: HTTP bindings name the environment variable that holds the key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::ClassifyParams;
use crate::dataset::BalancePolicy;
use crate::describe::DEFAULT_MAX_FRAMES;
use crate::error::{Error, Result};
use crate::generate::GenerationParams;
use crate::platform::{DouyinConfig, YoutubeConfig};
use crate::prompts;
use crate::provider::{HttpEndpoint, HttpJsonClient, RetryPolicy};
use crate::score::ScoringParams;
use crate::select::SelectionParams;
use crate::signal::{HighlightParams, SamplingRates};

pub const DEFAULT_CONFIG_FILE: &str = "stylecast.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderBinding {
    #[default]
    Mock,
    Http {
        endpoint: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_s: u64,
        #[serde(default)]
        rate_per_s: Option<f64>,
    },
}

fn default_timeout() -> u64 {
    60
}

impl ProviderBinding {
    pub fn is_mock(&self) -> bool {
        matches!(self, ProviderBinding::Mock)
    }

    /// An HTTP client for this binding, or `None` for the mock.
    pub fn client(&self, asset_root: &Path) -> Result<Option<HttpJsonClient>> {
        match self {
            ProviderBinding::Mock => Ok(None),
            ProviderBinding::Http {
                endpoint,
                model,
                api_key_env,
                timeout_s,
                rate_per_s,
            } => {
                let ep = HttpEndpoint {
                    endpoint: endpoint.clone(),
                    model: model.clone(),
                    api_key_env: api_key_env.clone(),
                    timeout_s: *timeout_s,
                };
                let client = HttpJsonClient::new(ep, *rate_per_s).map_err(|e| Error::provider(endpoint.clone(), e))?;
                Ok(Some(client.with_asset_root(asset_root)))
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub transcribe: ProviderBinding,
    pub describe: ProviderBinding,
    pub embed: ProviderBinding,
    pub generate: ProviderBinding,
    pub sentiment: ProviderBinding,
    pub judge: ProviderBinding,
    /// Dimension of the mock embedder.
    pub mock_embed_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderKind {
    /// Synthetic JSON clips are read directly, anything else goes to ffmpeg.
    #[default]
    Auto,
    Ffmpeg,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediaConfig {
    pub decoder: DecoderKind,
    pub ffmpeg: PathBuf,
    pub rates: SamplingRates,
    pub max_frames: usize,
}

impl Default for MediaConfig {
    fn default() -> Self {
        Self {
            decoder: DecoderKind::Auto,
            ffmpeg: PathBuf::from("ffmpeg"),
            rates: SamplingRates::default(),
            max_frames: DEFAULT_MAX_FRAMES,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    /// Serve fixtures from `mock_root/<video_id>/`.
    #[default]
    Mock,
    Api,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatformConfig {
    pub kind: PlatformKind,
    pub mock_root: Option<PathBuf>,
    pub top_k: usize,
    pub youtube: YoutubeConfig,
    pub douyin: DouyinConfig,
}

impl Default for PlatformConfig {
    fn default() -> Self {
        Self {
            kind: PlatformKind::Mock,
            mock_root: None,
            top_k: 100,
            youtube: YoutubeConfig::default(),
            douyin: DouyinConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub workdir: PathBuf,
    /// Curated dataset bundle used by classify and generate.
    pub dataset: Option<PathBuf>,
    pub seed: u64,
    pub jobs: usize,
    pub platform: PlatformConfig,
    pub providers: Providers,
    pub media: MediaConfig,
    pub highlight: HighlightParams,
    pub classification: ClassifyParams,
    pub selection: SelectionParams,
    pub generation: GenerationParams,
    pub scoring: ScoringParams,
    pub balance: BalancePolicy,
    pub retry: RetryPolicy,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("work"),
            dataset: None,
            seed: 0,
            jobs: 1,
            platform: PlatformConfig::default(),
            providers: Providers::default(),
            media: MediaConfig::default(),
            highlight: HighlightParams::default(),
            classification: ClassifyParams::default(),
            selection: SelectionParams::default(),
            generation: GenerationParams::default(),
            scoring: ScoringParams::default(),
            balance: BalancePolicy::default(),
            retry: RetryPolicy::default(),
        }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Load `path`, resolving relative paths in it against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file not found: {}", path.display())),
            _ => Error::io(path, e),
        })?;
        let mut config = Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.workdir);
        if let Some(d) = self.dataset.as_mut() {
            fix(d);
        }
        if let Some(r) = self.platform.mock_root.as_mut() {
            fix(r);
        }
        if self.media.ffmpeg.components().count() > 1 {
            fix(&mut self.media.ffmpeg);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |e: Error| Error::Config(e.to_string());
        self.highlight.validate().map_err(usage)?;
        self.selection.validate().map_err(usage)?;
        self.scoring.validate().map_err(usage)?;
        prompts::template(&self.generation.instruction_version).map_err(usage)?;
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        if self.platform.top_k == 0 || self.media.max_frames == 0 {
            return Err(Error::Config("top_k and max_frames must be at least 1".into()));
        }
        if self.generation.max_chars_en == 0 || self.generation.max_chars_zh == 0 {
            return Err(Error::Config("generation length ceilings must be positive".into()));
        }
        if !(self.classification.fallback_threshold.is_finite()) {
            return Err(Error::Config("classification.fallback_threshold must be finite".into()));
        }
        Ok(())
    }
}
