//! Closed vocabularies shared by every stage: platforms, languages, the six
//! comment styles and the video categories.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    Douyin,
    Youtube,
}

impl Platform {
    pub const ALL: [Platform; 2] = [Platform::Douyin, Platform::Youtube];

    pub fn as_str(self) -> &'static str {
        match self {
            Platform::Douyin => "douyin",
            Platform::Youtube => "youtube",
        }
    }

    /// Douyin content is Chinese, YouTube content English.
    pub fn language(self) -> Language {
        match self {
            Platform::Douyin => Language::Zh,
            Platform::Youtube => Language::En,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Platform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "douyin" => Ok(Platform::Douyin),
            "youtube" => Ok(Platform::Youtube),
            other => Err(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    Zh,
    En,
}

impl Language {
    pub fn as_str(self) -> &'static str {
        match self {
            Language::Zh => "zh",
            Language::En => "en",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zh" => Ok(Language::Zh),
            "en" => Ok(Language::En),
            other => Err(Error::UnknownLanguage(other.to_string())),
        }
    }
}

/// The six annotated comment styles. The set is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleLabel {
    PunsHomophones,
    Rhyming,
    MemeApplication,
    SarcasmIrony,
    PlainHumor,
    ContentExtraction,
}

impl StyleLabel {
    pub const ALL: [StyleLabel; 6] = [
        StyleLabel::PunsHomophones,
        StyleLabel::Rhyming,
        StyleLabel::MemeApplication,
        StyleLabel::SarcasmIrony,
        StyleLabel::PlainHumor,
        StyleLabel::ContentExtraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StyleLabel::PunsHomophones => "puns_homophones",
            StyleLabel::Rhyming => "rhyming",
            StyleLabel::MemeApplication => "meme_application",
            StyleLabel::SarcasmIrony => "sarcasm_irony",
            StyleLabel::PlainHumor => "plain_humor",
            StyleLabel::ContentExtraction => "content_extraction",
        }
    }

    /// Short human description used inside prompts.
    pub fn describe(self) -> &'static str {
        match self {
            StyleLabel::PunsHomophones => "puns built on homophones or near-homophones",
            StyleLabel::Rhyming => "rhyme and rhythm",
            StyleLabel::MemeApplication => "a well-known internet meme or catchphrase",
            StyleLabel::SarcasmIrony => "sarcasm or irony",
            StyleLabel::PlainHumor => "plain, direct humor",
            StyleLabel::ContentExtraction => "a witty remark that quotes or extracts the video content",
        }
    }
}

impl fmt::Display for StyleLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StyleLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StyleLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown style label: {s}"))
    }
}

/// Video genres. The five curated categories are ordered; that order breaks
/// classification ties. `Other` is only ever produced by the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VideoCategory {
    TalkShow,
    HumorousCommentary,
    FunnyAnimal,
    DailyLifeJokes,
    ComedySkits,
    Other,
}

impl VideoCategory {
    pub const CURATED: [VideoCategory; 5] = [
        VideoCategory::TalkShow,
        VideoCategory::HumorousCommentary,
        VideoCategory::FunnyAnimal,
        VideoCategory::DailyLifeJokes,
        VideoCategory::ComedySkits,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            VideoCategory::TalkShow => "talk_show",
            VideoCategory::HumorousCommentary => "humorous_commentary",
            VideoCategory::FunnyAnimal => "funny_animal",
            VideoCategory::DailyLifeJokes => "daily_life_jokes",
            VideoCategory::ComedySkits => "comedy_skits",
            VideoCategory::Other => "other",
        }
    }

    pub fn is_curated(self) -> bool {
        self != VideoCategory::Other
    }

    pub fn curated_index(self) -> Option<usize> {
        VideoCategory::CURATED.iter().position(|c| *c == self)
    }
}

impl fmt::Display for VideoCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VideoCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VideoCategory::CURATED
            .into_iter()
            .chain([VideoCategory::Other])
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category: {s}"))
    }
}

/// Binary sentiment class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sentiment {
    Positive,
    Negative,
}

impl Sentiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Negative => "negative",
        }
    }
}
