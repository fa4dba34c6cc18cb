//! Decoding front-end: turns a media file into normalized audio-amplitude and
//! luminance series, and writes sampled frames as `frame_{index:06}.jpg`.
//!
//! [`FfmpegDecoder`] shells out to an ffmpeg binary. [`SyntheticDecoder`]
//! reads a small JSON description of a clip instead of real media, so the
//! pipeline can run without any system decoder.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SignalKind, SignalSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct MediaSeries {
    pub audio: SignalSeries,
    pub light: SignalSeries,
    pub duration_s: f64,
}

pub trait MediaDecoder: Send + Sync {
    fn decode_series(&self, path: &Path) -> Result<MediaSeries>;

    /// Write one frame per timestamp into `out_dir`, returning the file names
    /// in timestamp order.
    fn extract_frames(&self, path: &Path, times: &[f64], out_dir: &Path) -> Result<Vec<String>>;
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:06}.jpg")
}

pub fn extract_media_series(path: &Path, decoder: &dyn MediaDecoder) -> Result<MediaSeries> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    decoder.decode_series(path)
}

/// Trim both series to their common span so they can be scored together.
fn align(audio: (f64, Vec<f64>), light: (Vec<f64>, Vec<f64>), path: &Path) -> Result<MediaSeries> {
    let (audio_hz, audio_raw) = audio;
    let (light_t, light_raw) = light;
    if light_t.is_empty() {
        return Err(Error::Decoder {
            path: path.to_path_buf(),
            diagnostic: "no video frames decoded".into(),
        });
    }
    let light_rate = if light_t.len() > 1 {
        (light_t.len() - 1) as f64 / (light_t[light_t.len() - 1] - light_t[0])
    } else {
        audio_hz
    };
    let audio_len_s = audio_raw.len() as f64 / audio_hz;
    let light_len_s = light_t[light_t.len() - 1] + 1.0 / light_rate;
    let duration_s = if audio_raw.is_empty() { light_len_s } else { audio_len_s.max(light_len_s) };
    let span_end = if audio_raw.is_empty() {
        light_t[light_t.len() - 1]
    } else {
        light_t[light_t.len() - 1].min((audio_raw.len() - 1) as f64 / audio_hz)
    };

    let keep_light = light_t.iter().take_while(|t| **t <= span_end + 1e-9).count().max(1);
    let light = SignalSeries::new(
        SignalKind::LightIntensity,
        light_rate,
        light_t[..keep_light].to_vec(),
        normalize(&light_raw[..keep_light]),
    )?;
    let audio = if audio_raw.is_empty() {
        // No audio stream: a silent track on the light grid.
        SignalSeries::new(SignalKind::AudioAmplitude, light_rate, light.times().to_vec(), vec![0.0; light.len()])?
    } else {
        let keep = (((span_end * audio_hz) + 1e-9).floor() as usize + 1).min(audio_raw.len());
        SignalSeries::uniform(SignalKind::AudioAmplitude, audio_hz, 0.0, normalize(&audio_raw[..keep]))?
    };
    Ok(MediaSeries {
        audio,
        light,
        duration_s,
    })
}

fn normalize(raw: &[f64]) -> Vec<f64> {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![0.0; raw.len()];
    }
    raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfmpegDecoder {
    pub program: PathBuf,
    /// Rate of the RMS audio envelope.
    pub envelope_hz: f64,
    pub audio_sample_rate: u32,
}

impl Default for FfmpegDecoder {
    fn default() -> Self {
        Self {
            program: PathBuf::from("ffmpeg"),
            envelope_hz: 20.0,
            audio_sample_rate: 8000,
        }
    }
}

impl FfmpegDecoder {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        Self {
            program: program.into(),
            ..Self::default()
        }
    }

    fn run(&self, path: &Path, args: &[&str]) -> Result<(Vec<u8>, String, bool)> {
        let mut child = Command::new(&self.program)
            .args(["-nostdin", "-hide_banner", "-i"])
            .arg(path)
            .args(args)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Decoder {
                path: path.to_path_buf(),
                diagnostic: format!("cannot start {}: {e}", self.program.display()),
            })?;
        let mut stderr = child.stderr.take().expect("piped stderr");
        let err_reader = std::thread::spawn(move || {
            let mut s = String::new();
            let _ = stderr.read_to_string(&mut s);
            s
        });
        let mut out = Vec::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        let status = child.wait().map_err(|e| Error::io(path, e))?;
        let diagnostic = err_reader.join().unwrap_or_default();
        Ok((out, diagnostic, status.success()))
    }

    fn decoder_error(path: &Path, diagnostic: &str) -> Error {
        let tail: Vec<&str> = diagnostic.lines().rev().take(4).collect();
        Error::Decoder {
            path: path.to_path_buf(),
            diagnostic: tail.into_iter().rev().collect::<Vec<_>>().join(" | "),
        }
    }

    /// Per-window RMS of the mono mix.
    fn audio_envelope(&self, path: &Path) -> Result<Vec<f64>> {
        let rate = self.audio_sample_rate.to_string();
        let (pcm, diag, ok) = self.run(path, &["-vn", "-ac", "1", "-ar", &rate, "-f", "f32le", "-"])?;
        if !ok {
            if diag.contains("does not contain any stream") || diag.contains("matches no streams") {
                return Ok(Vec::new());
            }
            return Err(Self::decoder_error(path, &diag));
        }
        let samples: Vec<f32> = pcm.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let window = ((self.audio_sample_rate as f64 / self.envelope_hz).round() as usize).max(1);
        Ok(samples
            .chunks(window)
            .map(|w| (w.iter().map(|s| (*s as f64).powi(2)).sum::<f64>() / w.len() as f64).sqrt())
            .collect())
    }

    /// Mean luminance of every decoded frame with its presentation time.
    fn luminance(&self, path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
        const SIDE: usize = 32;
        let (raw, diag, ok) = self.run(
            path,
            &[
                "-an",
                "-vf",
                "scale=32:32,format=gray,showinfo",
                "-fps_mode",
                "passthrough",
                "-f",
                "rawvideo",
                "-",
            ],
        )?;
        if !ok {
            return Err(Self::decoder_error(path, &diag));
        }
        let times: Vec<f64> = diag
            .lines()
            .filter(|l| l.contains("Parsed_showinfo"))
            .filter_map(|l| {
                let rest = &l[l.find("pts_time:")? + "pts_time:".len()..];
                rest.split_whitespace().next()?.parse().ok()
            })
            .collect();
        let means: Vec<f64> = raw
            .chunks_exact(SIDE * SIDE)
            .map(|f| f.iter().map(|p| *p as f64).sum::<f64>() / (SIDE * SIDE * 255) as f64)
            .collect();
        if times.len() != means.len() {
            return Err(Error::Decoder {
                path: path.to_path_buf(),
                diagnostic: format!("{} frame timestamps for {} frames", times.len(), means.len()),
            });
        }
        Ok((times, means))
    }
}

impl MediaDecoder for FfmpegDecoder {
    fn decode_series(&self, path: &Path) -> Result<MediaSeries> {
        let audio = self.audio_envelope(path)?;
        let light = self.luminance(path)?;
        align((self.envelope_hz, audio), light, path)
    }

    fn extract_frames(&self, path: &Path, times: &[f64], out_dir: &Path) -> Result<Vec<String>> {
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        let mut names = Vec::with_capacity(times.len());
        for (i, t) in times.iter().enumerate() {
            let name = frame_file_name(i);
            let dest = out_dir.join(&name);
            let status = Command::new(&self.program)
                .args(["-nostdin", "-hide_banner", "-v", "error", "-ss", &format!("{t:.3}"), "-i"])
                .arg(path)
                .args(["-frames:v", "1", "-q:v", "3", "-y"])
                .arg(&dest)
                .stdin(Stdio::null())
                .stdout(Stdio::null())
                .stderr(Stdio::piped())
                .output()
                .map_err(|e| Error::io(path, e))?;
            if !status.status.success() || !dest.exists() {
                return Err(Self::decoder_error(path, &String::from_utf8_lossy(&status.stderr)));
            }
            names.push(name);
        }
        Ok(names)
    }
}

/// A clip described by piecewise-constant levels instead of real media.
///
/// ```json
/// {"duration_s": 10, "rate_hz": 20,
///  "audio_steps": [[0, 0.1], [4, 0.9], [5, 0.1]],
///  "light_steps": [[0, 0.3]],
///  "transcript": [{"start_s": 0.5, "end_s": 2.0, "text": "hello"}]}
/// ```
///
/// Each step is `[time_s, level]`; the level holds until the next step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMedia {
    pub duration_s: f64,
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default)]
    pub audio_steps: Vec<(f64, f64)>,
    #[serde(default)]
    pub light_steps: Vec<(f64, f64)>,
    #[serde(default)]
    pub transcript: Vec<SyntheticSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

fn default_rate() -> f64 {
    20.0
}

impl SyntheticMedia {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Decoder {
            path: path.to_path_buf(),
            diagnostic: format!("not a synthetic media document: {e}"),
        })
    }

    fn level(steps: &[(f64, f64)], t: f64) -> f64 {
        steps
            .iter()
            .take_while(|(start, _)| *start <= t + 1e-12)
            .last()
            .map_or(0.0, |(_, v)| *v)
    }

    fn sampled(&self, steps: &[(f64, f64)]) -> Vec<f64> {
        let n = (self.duration_s * self.rate_hz + 1e-9).floor() as usize;
        (0..n).map(|i| Self::level(steps, i as f64 / self.rate_hz)).collect()
    }

    pub fn light_at(&self, t: f64) -> f64 {
        Self::level(&self.light_steps, t)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SyntheticDecoder;

impl MediaDecoder for SyntheticDecoder {
    fn decode_series(&self, path: &Path) -> Result<MediaSeries> {
        let media = SyntheticMedia::load(path)?;
        if !(media.duration_s > 0.0) || !(media.rate_hz > 0.0) {
            return Err(Error::Decoder {
                path: path.to_path_buf(),
                diagnostic: "duration_s and rate_hz must be positive".into(),
            });
        }
        let audio = media.sampled(&media.audio_steps);
        let light = media.sampled(&media.light_steps);
        let times = (0..light.len()).map(|i| i as f64 / media.rate_hz).collect();
        let mut series = align((media.rate_hz, audio), (times, light), path)?;
        series.duration_s = media.duration_s;
        Ok(series)
    }

    fn extract_frames(&self, path: &Path, times: &[f64], out_dir: &Path) -> Result<Vec<String>> {
        use image::codecs::jpeg::JpegEncoder;
        let media = SyntheticMedia::load(path)?;
        std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        times
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let level = (media.light_at(*t).clamp(0.0, 1.0) * 255.0).round() as u8;
                let img = image::GrayImage::from_pixel(16, 16, image::Luma([level]));
                let mut bytes = Vec::new();
                JpegEncoder::new_with_quality(&mut bytes, 90)
                    .encode_image(&img)
                    .map_err(|e| Error::Decoder {
                        path: path.to_path_buf(),
                        diagnostic: e.to_string(),
                    })?;
                let name = frame_file_name(i);
                let dest = out_dir.join(&name);
                std::fs::write(&dest, bytes).map_err(|e| Error::io(&dest, e))?;
                Ok(name)
            })
            .collect()
    }
}

/// Synthetic documents (files starting with `{`) go to [`SyntheticDecoder`],
/// everything else to ffmpeg.
#[derive(Debug, Clone, Default)]
pub struct AutoDecoder {
    pub ffmpeg: FfmpegDecoder,
}

impl AutoDecoder {
    fn is_synthetic(path: &Path) -> bool {
        let mut first = [0u8; 1];
        std::fs::File::open(path)
            .and_then(|mut f| f.read_exact(&mut first))
            .is_ok_and(|_| first[0] == b'{')
    }
}

impl MediaDecoder for AutoDecoder {
    fn decode_series(&self, path: &Path) -> Result<MediaSeries> {
        if Self::is_synthetic(path) {
            SyntheticDecoder.decode_series(path)
        } else {
            self.ffmpeg.decode_series(path)
        }
    }

    fn extract_frames(&self, path: &Path, times: &[f64], out_dir: &Path) -> Result<Vec<String>> {
        if Self::is_synthetic(path) {
            SyntheticDecoder.extract_frames(path, times, out_dir)
        } else {
            self.ffmpeg.extract_frames(path, times, out_dir)
        }
    }
}
