//! Highlight detection over audio/luminance series and the adaptive frame
//! sampling schedule derived from it.
//!
//! The score is `H(t) = w_a * |dA/dt| + w_l * |dL/dt|` evaluated on a common
//! uniform grid. Both inputs are linearly resampled onto the grid, smoothed
//! with a triangular moving average and differentiated by central
//! differences (one-sided at the ends).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    AudioAmplitude,
    LightIntensity,
    HighlightScore,
}

/// A sampled time series. Audio and light series hold values in `[0, 1]`;
/// highlight scores are non-negative but unbounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalSeries {
    kind: SignalKind,
    sample_rate_hz: f64,
    times: Vec<f64>,
    values: Vec<f64>,
}

impl SignalSeries {
    pub fn new(kind: SignalKind, sample_rate_hz: f64, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample rate must be positive, got {sample_rate_hz}")));
        }
        if times.len() != values.len() {
            return Err(Error::InvalidSignal(format!(
                "{} timestamps for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidSignal("timestamps must be finite and strictly increasing".into()));
        }
        let bounded = kind != SignalKind::HighlightScore;
        for &v in &values {
            if !v.is_finite() || (bounded && !(0.0..=1.0).contains(&v)) || v < 0.0 {
                return Err(Error::InvalidSignal(format!("value {v} out of range for {kind:?}")));
            }
        }
        Ok(Self {
            kind,
            sample_rate_hz,
            times,
            values,
        })
    }

    /// Uniformly sampled series starting at `start_s`.
    pub fn uniform(kind: SignalKind, sample_rate_hz: f64, start_s: f64, values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len()).map(|i| start_s + i as f64 / sample_rate_hz).collect();
        Self::new(kind, sample_rate_hz, times, values)
    }

    /// Min-max normalize raw measurements to `[0, 1]`. A constant series
    /// normalizes to all zeros.
    pub fn normalized(kind: SignalKind, sample_rate_hz: f64, start_s: f64, raw: &[f64]) -> Result<Self> {
        let (lo, hi) = raw
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let values = if raw.is_empty() || !(hi > lo) {
            vec![0.0; raw.len()]
        } else {
            raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
        };
        Self::uniform(kind, sample_rate_hz, start_s, values)
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times.first().copied().unwrap_or(0.0)
    }

    pub fn end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    /// Linear interpolation, clamped to the end values outside the span.
    fn sample_sorted(&self, grid: &[f64]) -> Vec<f64> {
        let mut k = 0;
        grid.iter()
            .map(|&t| {
                if t <= self.times[0] {
                    return self.values[0];
                }
                let last = self.times.len() - 1;
                if t >= self.times[last] {
                    return self.values[last];
                }
                while self.times[k + 1] < t {
                    k += 1;
                }
                let (t0, t1) = (self.times[k], self.times[k + 1]);
                let frac = (t - t0) / (t1 - t0);
                self.values[k] + frac * (self.values[k + 1] - self.values[k])
            })
            .collect()
    }
}

/// Threshold for a highlight: an absolute score or a percentile of the
/// video's own score distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Absolute(f64),
    Percentile { percentile: f64 },
}

impl Threshold {
    pub fn resolve(self, values: &[f64]) -> f64 {
        match self {
            Threshold::Absolute(v) => v,
            Threshold::Percentile { percentile } => percentile_of(values, percentile),
        }
    }
}

/// Linear-interpolated percentile (closest-ranks, `p` in `[0, 100]`).
pub fn percentile_of(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HighlightParams {
    pub omega_a: f64,
    pub omega_l: f64,
    pub threshold: Threshold,
    pub smooth_window_s: f64,
    pub min_window_s: f64,
    pub merge_gap_s: f64,
    /// Rate of the common resampling grid.
    pub grid_hz: f64,
}

impl Default for HighlightParams {
    fn default() -> Self {
        Self {
            omega_a: 0.5,
            omega_l: 0.5,
            threshold: Threshold::Percentile { percentile: 90.0 },
            smooth_window_s: 0.25,
            min_window_s: 0.5,
            merge_gap_s: 1.0,
            grid_hz: 20.0,
        }
    }
}

impl HighlightParams {
    pub fn with_weights(omega_a: f64, omega_l: f64) -> Self {
        Self {
            omega_a,
            omega_l,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let weight_ok = |w: f64| (0.0..=1.0).contains(&w);
        if !weight_ok(self.omega_a) || !weight_ok(self.omega_l) || (self.omega_a + self.omega_l - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParams(format!(
                "highlight weights must lie in [0,1] and sum to 1, got {} + {}",
                self.omega_a, self.omega_l
            )));
        }
        if self.smooth_window_s < 0.0 || self.min_window_s < 0.0 || self.merge_gap_s < 0.0 {
            return Err(Error::InvalidParams("highlight windows must be non-negative".into()));
        }
        if !(self.grid_hz > 0.0) {
            return Err(Error::InvalidParams("grid_hz must be positive".into()));
        }
        if let Threshold::Percentile { percentile } = self.threshold {
            if !(0.0..=100.0).contains(&percentile) {
                return Err(Error::InvalidParams(format!("percentile {percentile} outside [0,100]")));
            }
        }
        Ok(())
    }
}

/// Smoothed absolute derivative of one series on the grid.
fn abs_derivative(values: &[f64], half_width: usize, dt: f64) -> Vec<f64> {
    let n = values.len();
    let smoothed: Vec<f64> = if half_width == 0 {
        values.to_vec()
    } else {
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(half_width);
                let hi = (i + half_width).min(n - 1);
                let (mut acc, mut norm) = (0.0, 0.0);
                for (j, v) in values.iter().enumerate().take(hi + 1).skip(lo) {
                    let w = (half_width + 1 - i.abs_diff(j)) as f64;
                    acc += w * v;
                    norm += w;
                }
                acc / norm
            })
            .collect()
    };
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let d = if i == 0 {
                (smoothed[1] - smoothed[0]) / dt
            } else if i == n - 1 {
                (smoothed[n - 1] - smoothed[n - 2]) / dt
            } else {
                (smoothed[i + 1] - smoothed[i - 1]) / (2.0 * dt)
            };
            d.abs()
        })
        .collect()
}

pub fn highlight_score(audio: &SignalSeries, light: &SignalSeries, params: &HighlightParams) -> Result<SignalSeries> {
    params.validate()?;
    if audio.is_empty() || light.is_empty() {
        return Err(Error::EmptySignal);
    }
    let tolerance = (1.0 / audio.sample_rate_hz).max(1.0 / light.sample_rate_hz);
    let start_gap = (audio.start() - light.start()).abs();
    let end_gap = (audio.end() - light.end()).abs();
    if start_gap > tolerance + 1e-9 || end_gap > tolerance + 1e-9 {
        return Err(Error::SpanMismatch(format!(
            "audio [{:.3}, {:.3}] vs light [{:.3}, {:.3}]",
            audio.start(),
            audio.end(),
            light.start(),
            light.end()
        )));
    }

    let t0 = audio.start().max(light.start());
    let t1 = audio.end().min(light.end()).max(t0);
    let dt = 1.0 / params.grid_hz;
    let n = ((t1 - t0) * params.grid_hz + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| t0 + i as f64 * dt).collect();

    let half_width = (params.smooth_window_s * params.grid_hz / 2.0).round() as usize;
    let da = abs_derivative(&audio.sample_sorted(&grid), half_width, dt);
    let dl = abs_derivative(&light.sample_sorted(&grid), half_width, dt);
    let values = da
        .iter()
        .zip(&dl)
        .map(|(a, l)| params.omega_a * a + params.omega_l * l)
        .collect();
    SignalSeries::new(SignalKind::HighlightScore, params.grid_hz, grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighlightWindow {
    pub start_s: f64,
    pub end_s: f64,
    pub peak_score: f64,
}

impl HighlightWindow {
    pub fn len(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Runs of grid points with `H > threshold` become windows spanning the first
/// to the last point of the run. Windows separated by less than
/// `merge_gap_s` merge; windows shorter than `min_window_s` are dropped.
pub fn detect_highlights(score: &SignalSeries, params: &HighlightParams) -> Result<Vec<HighlightWindow>> {
    params.validate()?;
    let theta = params.threshold.resolve(score.values());
    let mut runs: Vec<HighlightWindow> = Vec::new();
    let mut open: Option<HighlightWindow> = None;
    for (&t, &v) in score.times().iter().zip(score.values()) {
        if v > theta {
            match open.as_mut() {
                Some(w) => {
                    w.end_s = t;
                    w.peak_score = w.peak_score.max(v);
                }
                None => {
                    open = Some(HighlightWindow {
                        start_s: t,
                        end_s: t,
                        peak_score: v,
                    })
                }
            }
        } else if let Some(w) = open.take() {
            runs.push(w);
        }
    }
    runs.extend(open);

    let mut merged: Vec<HighlightWindow> = Vec::with_capacity(runs.len());
    for w in runs {
        match merged.last_mut() {
            Some(prev) if w.start_s - prev.end_s < params.merge_gap_s => {
                prev.end_s = w.end_s;
                prev.peak_score = prev.peak_score.max(w.peak_score);
            }
            _ => merged.push(w),
        }
    }
    merged.retain(|w| w.end_s > w.start_s && w.len() + 1e-9 >= params.min_window_s);
    Ok(merged)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub rate_fps: f64,
}

impl ScheduleSegment {
    /// Frames that fit whole sampling intervals in `[start, end)`.
    pub fn frame_count(&self) -> usize {
        ((self.end_s - self.start_s) * self.rate_fps + 1e-9).floor() as usize
    }

    pub fn frame_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.frame_count()).map(move |k| self.start_s + k as f64 / self.rate_fps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingRates {
    pub highlight_fps: f64,
    pub normal_fps: f64,
}

impl Default for SamplingRates {
    fn default() -> Self {
        Self {
            highlight_fps: 10.0,
            normal_fps: 0.5,
        }
    }
}

/// Piecewise sampling plan tiling `[0, duration_s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSchedule {
    pub duration_s: f64,
    pub segments: Vec<ScheduleSegment>,
    pub frame_times: Vec<f64>,
}

impl FrameSchedule {
    pub fn frame_count(&self) -> usize {
        self.frame_times.len()
    }
}

pub fn build_frame_schedule(duration_s: f64, highlights: &[HighlightWindow]) -> Result<FrameSchedule> {
    build_frame_schedule_with(duration_s, highlights, SamplingRates::default())
}

pub fn build_frame_schedule_with(
    duration_s: f64,
    highlights: &[HighlightWindow],
    rates: SamplingRates,
) -> Result<FrameSchedule> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(Error::InvalidParams(format!("duration must be positive, got {duration_s}")));
    }
    let mut segments: Vec<ScheduleSegment> = Vec::new();
    let mut push = |start_s: f64, end_s: f64, rate_fps: f64| {
        if end_s <= start_s {
            return;
        }
        match segments.last_mut() {
            Some(last) if last.rate_fps == rate_fps && last.end_s == start_s => last.end_s = end_s,
            _ => segments.push(ScheduleSegment {
                start_s,
                end_s,
                rate_fps,
            }),
        }
    };

    let mut cursor = 0.0;
    for w in highlights {
        if w.start_s < -1e-9 || w.end_s > duration_s + 1e-9 || w.end_s < w.start_s {
            return Err(Error::InvalidParams(format!(
                "highlight [{}, {}] outside video of {duration_s} s",
                w.start_s, w.end_s
            )));
        }
        if w.start_s < cursor - 1e-9 {
            return Err(Error::InvalidParams("highlights must be sorted and disjoint".into()));
        }
        let start = w.start_s.max(0.0);
        let end = w.end_s.min(duration_s);
        push(cursor, start, rates.normal_fps);
        push(start, end, rates.highlight_fps);
        cursor = end;
    }
    push(cursor, duration_s, rates.normal_fps);

    let frame_times = segments.iter().flat_map(|s| s.frame_times()).collect();
    Ok(FrameSchedule {
        duration_s,
        segments,
        frame_times,
    })
}
