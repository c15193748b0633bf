//! Synthetic headway traces with labelled noise.
//!
//! Two ground-truth generators are provided: the controlled approach towards
//! a parked vehicle (constant speed, gap shrinking linearly) and piecewise
//! constant car-following events. [`inject_noise`] then corrupts a truth
//! series with the three kinds of disturbance seen on the sensor: Gaussian
//! jitter, weak-signal returns near zero and spurious returns from roadside
//! objects.
//!
//! # Random stream
//!
//! Noise is driven by ChaCha8 seeded through `SeedableRng::seed_from_u64`.
//! A uniform in `[0, 1)` is `(next_u64() >> 11) * 2^-53`. Each sample draws
//! exactly four uniforms `u1..u4`, whatever branch fires:
//!
//! - `u1 < weak_signal_prob`: observed = `0.05 + 0.45 * u3`;
//! - else `u2 < env_spike_prob`: observed = `lo + (hi - lo) * u3`;
//! - else jitter `sigma * sqrt(-2 ln(1 - u3)) * cos(2 pi u4)`, clipped to
//!   `±3 sigma`.
//!
//! Observed values are finally clamped to the sensor range `[0, 40]`.

use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::trip_data::{RawReading, Trip, MAX_RANGE_M};

/// Miles per hour to meters per second.
pub const MPH_TO_MPS: f64 = 0.44704;

/// Range of weak-signal returns, meters.
pub const WEAK_SIGNAL_RANGE: (f64, f64) = (0.05, 0.5);

/// Header of the truth sidecar file.
pub const SIDECAR_HEADER: &str = "Sample,Truth (m),Label";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sidecar line {line}: {message}")]
    Sidecar { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproachConfig {
    pub speed_mph: f64,
    pub start_gap: f64,
    pub end_gap: f64,
    /// Samples per second.
    pub sample_rate: f64,
    /// Where the target vehicle is parked; informational only.
    pub initial_park_gap: f64,
}

impl Default for ApproachConfig {
    fn default() -> Self {
        Self {
            speed_mph: 10.0,
            start_gap: 26.0,
            end_gap: 10.0,
            sample_rate: 3.0,
            initial_park_gap: 100.0,
        }
    }
}

impl ApproachConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let ok = self.start_gap > self.end_gap
            && self.end_gap > 0.0
            && self.speed_mph > 0.0
            && self.sample_rate > 0.0
            && self.start_gap.is_finite()
            && self.speed_mph.is_finite()
            && self.sample_rate.is_finite();
        if ok {
            Ok(())
        } else {
            Err(SynthError::Config(format!(
                "approach needs start_gap > end_gap > 0 and positive speed and rate, got {self:?}"
            )))
        }
    }

    pub fn speed_mps(&self) -> f64 {
        self.speed_mph * MPH_TO_MPS
    }

    /// Time to close from `start_gap` to `end_gap`, seconds.
    pub fn duration(&self) -> f64 {
        (self.start_gap - self.end_gap) / self.speed_mps()
    }
}

/// Samples `gap(t) = start_gap - v t` at `sample_rate` until the gap would
/// fall below `end_gap`. Returns `(time s, gap m)` pairs.
pub fn gen_approach(cfg: &ApproachConfig) -> Result<Vec<(f64, f64)>, SynthError> {
    cfg.validate()?;
    let v = cfg.speed_mps();
    let mut out = Vec::new();
    for k in 0u64.. {
        let t = k as f64 / cfg.sample_rate;
        let gap = cfg.start_gap - v * t;
        if gap < cfg.end_gap {
            break;
        }
        out.push((t, gap));
    }
    Ok(out)
}

/// Concatenates constant plateaus `(level m, count)`.
pub fn gen_event_trace(plateaus: &[(f64, usize)]) -> Result<Vec<f64>, SynthError> {
    let mut out = Vec::with_capacity(plateaus.iter().map(|p| p.1).sum());
    for &(level, count) in plateaus {
        if !(0.0..=MAX_RANGE_M).contains(&level) || count == 0 {
            return Err(SynthError::Config(format!(
                "plateau ({level}, {count}) needs a level in [0, 40] and a positive count"
            )));
        }
        out.extend(std::iter::repeat_n(level, count));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    pub gaussian_sigma: f64,
    pub weak_signal_prob: f64,
    pub env_spike_prob: f64,
    pub spike_range: (f64, f64),
    pub seed: u64,
}

impl NoiseConfig {
    /// Default noise levels with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        Self {
            gaussian_sigma: 0.1,
            weak_signal_prob: 0.02,
            env_spike_prob: 0.03,
            spike_range: (0.5, 35.0),
            seed,
        }
    }

    /// No noise at all.
    pub fn silent(seed: u64) -> Self {
        Self {
            gaussian_sigma: 0.0,
            weak_signal_prob: 0.0,
            env_spike_prob: 0.0,
            ..Self::with_seed(seed)
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let (lo, hi) = self.spike_range;
        let ok = prob(self.weak_signal_prob)
            && prob(self.env_spike_prob)
            && self.gaussian_sigma >= 0.0
            && self.gaussian_sigma.is_finite()
            && lo <= hi
            && (0.0..=MAX_RANGE_M).contains(&lo)
            && (0.0..=MAX_RANGE_M).contains(&hi);
        if ok {
            Ok(())
        } else {
            Err(SynthError::Config(format!(
                "invalid noise configuration {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseLabel {
    Clean,
    WeakSignal,
    EnvSpike,
}

impl NoiseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseLabel::Clean => "CLEAN",
            NoiseLabel::WeakSignal => "WEAK_SIGNAL",
            NoiseLabel::EnvSpike => "ENV_SPIKE",
        }
    }

    pub fn is_noise(&self) -> bool {
        *self != NoiseLabel::Clean
    }
}

impl fmt::Display for NoiseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "CLEAN" => Ok(NoiseLabel::Clean),
            "WEAK_SIGNAL" => Ok(NoiseLabel::WeakSignal),
            "ENV_SPIKE" => Ok(NoiseLabel::EnvSpike),
            _ => Err(format!("unknown label {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub truth: Vec<f64>,
    pub observed: Vec<f64>,
    pub labels: Vec<NoiseLabel>,
}

impl LabeledTrace {
    pub fn len(&self) -> usize {
        self.truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.truth.is_empty()
    }

    /// Lays the observed series out as a trip log: one reading every
    /// `1 / rate` seconds from midnight on 1 January 2019 (truncated to whole
    /// seconds), position and course zero.
    pub fn to_trip(&self, trip_id: i64, rate: f64, speed_mph: f64) -> Trip {
        let start = NaiveDate::from_ymd_opt(2019, 1, 1)
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .expect("valid epoch");
        let readings = self
            .observed
            .iter()
            .enumerate()
            .map(|(k, &distance)| {
                let ts: NaiveDateTime = start + Duration::seconds((k as f64 / rate).floor() as i64);
                RawReading {
                    date: ts.date(),
                    time: ts.time(),
                    latitude: 0.0,
                    longitude: 0.0,
                    speed: speed_mph,
                    course_over_ground: 0.0,
                    distance,
                    trip_id,
                }
            })
            .collect();
        Trip { trip_id, readings }
    }
}

struct Uniforms(ChaCha8Rng);

impl Uniforms {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn inject_noise(truth: &[f64], cfg: &NoiseConfig) -> Result<LabeledTrace, SynthError> {
    cfg.validate()?;
    let mut rng = Uniforms::new(cfg.seed);
    let (weak_lo, weak_hi) = WEAK_SIGNAL_RANGE;
    let (spike_lo, spike_hi) = cfg.spike_range;
    let sigma = cfg.gaussian_sigma;

    let mut observed = Vec::with_capacity(truth.len());
    let mut labels = Vec::with_capacity(truth.len());
    for &t in truth {
        let [u1, u2, u3, u4] = [rng.next(), rng.next(), rng.next(), rng.next()];
        let (value, label) = if u1 < cfg.weak_signal_prob {
            (weak_lo + (weak_hi - weak_lo) * u3, NoiseLabel::WeakSignal)
        } else if u2 < cfg.env_spike_prob {
            (spike_lo + (spike_hi - spike_lo) * u3, NoiseLabel::EnvSpike)
        } else if sigma > 0.0 {
            let g = (-2.0 * (1.0 - u3).ln()).sqrt() * (std::f64::consts::TAU * u4).cos();
            let jitter = (sigma * g).clamp(-3.0 * sigma, 3.0 * sigma);
            (t + jitter, NoiseLabel::Clean)
        } else {
            (t, NoiseLabel::Clean)
        };
        observed.push(value.clamp(0.0, MAX_RANGE_M));
        labels.push(label);
    }
    Ok(LabeledTrace {
        truth: truth.to_vec(),
        observed,
        labels,
    })
}

/// Writes `Sample,Truth (m),Label` rows, samples numbered from 0.
pub fn write_truth_sidecar(trace: &LabeledTrace) -> String {
    let mut out = String::from(SIDECAR_HEADER);
    out.push('\n');
    for (i, (t, l)) in trace.truth.iter().zip(&trace.labels).enumerate() {
        out.push_str(&format!("{i},{t},{l}\n"));
    }
    out
}

/// Parses a truth sidecar into truth values and labels.
pub fn parse_truth_sidecar(text: &str) -> Result<(Vec<f64>, Vec<NoiseLabel>), SynthError> {
    let err = |line: usize, message: String| SynthError::Sidecar { line, message };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == SIDECAR_HEADER => {}
        _ => return Err(err(1, format!("expected header {SIDECAR_HEADER:?}"))),
    }
    let mut truth = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [sample, value, label] = fields[..] else {
            return Err(err(
                line_no,
                format!("expected 3 columns, found {}", fields.len()),
            ));
        };
        let sample: usize = sample
            .parse()
            .map_err(|_| err(line_no, format!("bad sample number {sample:?}")))?;
        if sample != truth.len() {
            return Err(err(line_no, format!("sample {sample} out of sequence")));
        }
        let value: f64 = value
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(line_no, format!("bad truth value {value:?}")))?;
        truth.push(value);
        labels.push(label.parse().map_err(|m| err(line_no, m))?);
    }
    Ok((truth, labels))
}
