//! Core algorithms for style-conditioned humorous comment generation.

pub mod classify;
pub mod config;
pub mod dataset;
pub mod describe;
pub mod domain;
pub mod embed;
pub mod error;
pub mod generate;
pub mod manifest;
pub mod media;
pub mod pipeline;
pub mod platform;
pub mod prompts;
pub mod provider;
pub mod questionnaire;
pub mod score;
pub mod select;
pub mod sentiment;
pub mod signal;
pub mod text;

pub use domain::{Language, Platform, Sentiment, StyleLabel, VideoCategory};
pub use error::{Error, ErrorKind, Result};
