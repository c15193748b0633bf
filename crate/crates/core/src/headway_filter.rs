//! Two-stage streaming headway filter.
//!
//! Stage 1 fits the gate model to the last `N` accepted distances and
//! predicts the next one. A reading within `th1` of the prediction is VALID.
//! Otherwise stage 2 averages the reading with the next `lookahead - 1` raw
//! readings; if the reading is within `th2` of that mean it starts a new
//! car-following event (EVENT_CHANGE), else it is NOISE.
//!
//! Bootstrapping and event handling:
//! - the first `N` readings fill the window unconditionally (WARMUP);
//! - an EVENT_CHANGE clears the window and seeds it with the accepted value,
//!   so the following `N - 1` readings are WARMUP again;
//! - NOISE and UNDECIDED readings never enter the window;
//! - a reading that fails stage 1 with no followers at end of stream is
//!   UNDECIDED; with fewer than `lookahead - 1` followers the mean uses what
//!   exists.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDateTime;
use thiserror::Error;

use crate::forecast::{fit, forecast_one, ForecastError, ModelOrder};
use crate::trip_data::{RawReading, Trip};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("invalid filter configuration: {0}")]
    Config(String),
    #[error("prediction window holds {len} values, {needed} required")]
    WindowNotFull { len: usize, needed: usize },
    #[error("no lookahead readings available")]
    NoLookahead,
    #[error("reading {index} at {timestamp} predates the previous reading at {previous}")]
    OutOfOrder {
        index: usize,
        timestamp: NaiveDateTime,
        previous: NaiveDateTime,
    },
    #[error("reading {0} is not a finite distance")]
    NonFinite(usize),
    #[error(transparent)]
    Forecast(#[from] ForecastError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Warmup,
    Valid,
    EventChange,
    Noise,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Warmup => "WARMUP",
            Verdict::Valid => "VALID",
            Verdict::EventChange => "EVENT_CHANGE",
            Verdict::Noise => "NOISE",
            Verdict::Undecided => "UNDECIDED",
        }
    }

    /// VALID and EVENT_CHANGE readings are the filter's retained output.
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Valid | Verdict::EventChange)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown verdict {0:?}")]
pub struct UnknownVerdict(pub String);

impl FromStr for Verdict {
    type Err = UnknownVerdict;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "WARMUP" => Verdict::Warmup,
            "VALID" => Verdict::Valid,
            "EVENT_CHANGE" => Verdict::EventChange,
            "NOISE" => Verdict::Noise,
            "UNDECIDED" => Verdict::Undecided,
            _ => return Err(UnknownVerdict(s.to_string())),
        })
    }
}

/// Verdict for one reading. `predicted` is the stage-1 forecast and is
/// present exactly for VALID, EVENT_CHANGE and NOISE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub predicted: Option<f64>,
    pub reading_index: usize,
}

impl Classification {
    pub fn warmup(reading_index: usize) -> Self {
        Self {
            verdict: Verdict::Warmup,
            predicted: None,
            reading_index,
        }
    }
}

/// Smallest window any gate order can use; orders with `d + p = 2` need 4.
pub const MIN_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    pub window_size: usize,
    pub th1: f64,
    pub th2: f64,
    /// Readings averaged by stage 2, counting the reading under test.
    pub lookahead: usize,
    pub order: ModelOrder,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            window_size: 30,
            th1: 2.0,
            th2: 1.0,
            lookahead: 5,
            order: ModelOrder::SES,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), FilterError> {
        let fail = |m: String| Err(FilterError::Config(m));
        if self.window_size < MIN_WINDOW {
            return fail(format!("window size {} < {MIN_WINDOW}", self.window_size));
        }
        if self.window_size < self.order.min_window() {
            return fail(format!(
                "window size {} too small for order {}",
                self.window_size, self.order
            ));
        }
        if !(self.th1 > 0.0 && self.th1.is_finite()) {
            return fail(format!("th1 {} must be positive", self.th1));
        }
        if !(self.th2 > 0.0 && self.th2.is_finite()) {
            return fail(format!("th2 {} must be positive", self.th2));
        }
        if self.lookahead < 2 {
            return fail(format!("lookahead {} < 2", self.lookahead));
        }
        Ok(())
    }
}

/// Stage 1: predict from a full window and compare with `m`.
///
/// Returns the prediction and whether `|p - m| < th1`.
pub fn stage1_check(
    window: &[f64],
    m: f64,
    cfg: &FilterConfig,
) -> Result<(f64, bool), FilterError> {
    if window.len() < cfg.window_size {
        return Err(FilterError::WindowNotFull {
            len: window.len(),
            needed: cfg.window_size,
        });
    }
    let window = &window[window.len() - cfg.window_size..];
    let p = forecast_one(&fit(window, cfg.order)?);
    Ok((p, (p - m).abs() < cfg.th1))
}

/// Stage 2: `|m - mean([m] ++ future)| < th2`.
pub fn stage2_check(m: f64, future: &[f64], cfg: &FilterConfig) -> Result<bool, FilterError> {
    if future.is_empty() {
        return Err(FilterError::NoLookahead);
    }
    let n = future.len().min(cfg.lookahead - 1);
    let mean = (m + future[..n].iter().sum::<f64>()) / (n + 1) as f64;
    Ok((m - mean).abs() < cfg.th2)
}

/// Gate inputs recorded for one verdict, for offline re-verification.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRecord {
    pub reading_index: usize,
    pub measured: f64,
    /// Window used for the stage-1 prediction; empty for WARMUP.
    pub window: Vec<f64>,
    /// Raw followers averaged by stage 2; empty when stage 2 did not run.
    pub lookahead: Vec<f64>,
}

/// Streaming filter state for one trip.
#[derive(Debug, Clone)]
pub struct HeadwayFilter {
    cfg: FilterConfig,
    window: VecDeque<f64>,
    /// Readings not yet classified; the front one may be waiting on followers.
    pending: VecDeque<(usize, f64)>,
    /// Stage-1 prediction for the front of `pending`, once it has failed.
    blocked_prediction: Option<f64>,
    index: usize,
    last_timestamp: Option<NaiveDateTime>,
    audit: Option<Vec<GateRecord>>,
}

impl HeadwayFilter {
    pub fn new(cfg: FilterConfig) -> Result<Self, FilterError> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            window: VecDeque::with_capacity(cfg.window_size),
            pending: VecDeque::with_capacity(cfg.lookahead),
            blocked_prediction: None,
            index: 0,
            last_timestamp: None,
            audit: None,
        })
    }

    /// Like [`HeadwayFilter::new`], additionally recording the gate inputs
    /// behind every verdict.
    pub fn with_audit(cfg: FilterConfig) -> Result<Self, FilterError> {
        let mut filter = Self::new(cfg)?;
        filter.audit = Some(Vec::new());
        Ok(filter)
    }

    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }

    /// Accepted distances currently in the prediction window.
    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    /// Number of readings pushed so far.
    pub fn consumed(&self) -> usize {
        self.index
    }

    /// Readings pushed but not yet classified.
    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn audit_log(&self) -> Option<&[GateRecord]> {
        self.audit.as_deref()
    }

    /// Pushes one logged reading. Equal timestamps are allowed.
    pub fn push(&mut self, reading: &RawReading) -> Result<Vec<Classification>, FilterError> {
        let ts = reading.timestamp();
        if let Some(previous) = self.last_timestamp {
            if ts < previous {
                return Err(FilterError::OutOfOrder {
                    index: self.index,
                    timestamp: ts,
                    previous,
                });
            }
        }
        let out = self.push_distance(reading.distance)?;
        self.last_timestamp = Some(ts);
        Ok(out)
    }

    /// Pushes a bare distance.
    pub fn push_distance(&mut self, m: f64) -> Result<Vec<Classification>, FilterError> {
        if !m.is_finite() {
            return Err(FilterError::NonFinite(self.index));
        }
        self.pending.push_back((self.index, m));
        self.index += 1;
        let mut out = Vec::new();
        self.drain(false, &mut out)?;
        Ok(out)
    }

    /// Classifies everything still pending at end of stream.
    pub fn finish(&mut self) -> Result<Vec<Classification>, FilterError> {
        let mut out = Vec::new();
        self.drain(true, &mut out)?;
        Ok(out)
    }

    fn drain(&mut self, at_end: bool, out: &mut Vec<Classification>) -> Result<(), FilterError> {
        let n = self.cfg.window_size;
        let followers_needed = self.cfg.lookahead - 1;

        while let Some(&(index, m)) = self.pending.front() {
            if self.window.len() < n {
                self.record(index, m, Vec::new(), Vec::new());
                self.window.push_back(m);
                self.pending.pop_front();
                out.push(Classification::warmup(index));
                continue;
            }

            let p = match self.blocked_prediction {
                Some(p) => p,
                None => {
                    let (p, pass) = stage1_check(self.window.make_contiguous(), m, &self.cfg)?;
                    if pass {
                        let window = self.window_snapshot();
                        self.record(index, m, window, Vec::new());
                        self.window.pop_front();
                        self.window.push_back(m);
                        self.pending.pop_front();
                        out.push(Classification {
                            verdict: Verdict::Valid,
                            predicted: Some(p),
                            reading_index: index,
                        });
                        continue;
                    }
                    self.blocked_prediction = Some(p);
                    p
                }
            };

            let available = self.pending.len() - 1;
            if available < followers_needed && !at_end {
                break;
            }
            let window = self.window_snapshot();
            self.blocked_prediction = None;

            if available == 0 {
                self.record(index, m, window, Vec::new());
                self.pending.pop_front();
                out.push(Classification {
                    verdict: Verdict::Undecided,
                    predicted: None,
                    reading_index: index,
                });
                continue;
            }

            let future: Vec<f64> = self
                .pending
                .iter()
                .skip(1)
                .take(followers_needed)
                .map(|&(_, v)| v)
                .collect();
            let verdict = if stage2_check(m, &future, &self.cfg)? {
                self.window.clear();
                self.window.push_back(m);
                Verdict::EventChange
            } else {
                Verdict::Noise
            };
            self.record(index, m, window, future);
            self.pending.pop_front();
            out.push(Classification {
                verdict,
                predicted: Some(p),
                reading_index: index,
            });
        }
        Ok(())
    }

    fn window_snapshot(&self) -> Vec<f64> {
        if self.audit.is_some() {
            self.window.iter().copied().collect()
        } else {
            Vec::new()
        }
    }

    fn record(
        &mut self,
        reading_index: usize,
        measured: f64,
        window: Vec<f64>,
        lookahead: Vec<f64>,
    ) {
        if let Some(log) = self.audit.as_mut() {
            log.push(GateRecord {
                reading_index,
                measured,
                window,
                lookahead,
            });
        }
    }
}

/// Filters a whole trip: one verdict per reading, in order.
pub fn filter_trip(trip: &Trip, cfg: &FilterConfig) -> Result<Vec<Classification>, FilterError> {
    let mut filter = HeadwayFilter::new(*cfg)?;
    let mut out = Vec::with_capacity(trip.readings.len());
    for reading in &trip.readings {
        out.extend(filter.push(reading)?);
    }
    out.extend(filter.finish()?);
    Ok(out)
}

/// Filters a bare distance series.
pub fn filter_series(
    distances: &[f64],
    cfg: &FilterConfig,
) -> Result<Vec<Classification>, FilterError> {
    filter_series_audited(distances, cfg).map(|(v, _)| v)
}

/// Filters a bare distance series and returns the gate log alongside.
pub fn filter_series_audited(
    distances: &[f64],
    cfg: &FilterConfig,
) -> Result<(Vec<Classification>, Vec<GateRecord>), FilterError> {
    let mut filter = HeadwayFilter::with_audit(*cfg)?;
    let mut out = Vec::with_capacity(distances.len());
    for &m in distances {
        out.extend(filter.push_distance(m)?);
    }
    out.extend(filter.finish()?);
    let log = filter.audit.take().unwrap_or_default();
    Ok((out, log))
}

/// A verdict that the recorded gate inputs do not support.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditFailure {
    pub reading_index: usize,
    pub reason: String,
}

/// Re-evaluates both gates from the recorded inputs and checks every verdict
/// against them.
pub fn reverify(
    verdicts: &[Classification],
    log: &[GateRecord],
    cfg: &FilterConfig,
) -> Result<(), AuditFailure> {
    let fail = |i: usize, reason: String| AuditFailure {
        reading_index: i,
        reason,
    };
    if verdicts.len() != log.len() {
        return Err(fail(
            0,
            format!("{} verdicts, {} records", verdicts.len(), log.len()),
        ));
    }
    for (c, rec) in verdicts.iter().zip(log) {
        let i = c.reading_index;
        if rec.reading_index != i {
            return Err(fail(i, "record out of step with verdicts".into()));
        }
        if c.verdict == Verdict::Warmup {
            continue;
        }
        let (p, pass1) =
            stage1_check(&rec.window, rec.measured, cfg).map_err(|e| fail(i, e.to_string()))?;
        if let Some(logged) = c.predicted {
            if logged.to_bits() != p.to_bits() {
                return Err(fail(
                    i,
                    format!("prediction {logged} does not reproduce ({p})"),
                ));
            }
        }
        let pass2 =
            || stage2_check(rec.measured, &rec.lookahead, cfg).map_err(|e| fail(i, e.to_string()));
        let ok = match c.verdict {
            Verdict::Valid => pass1,
            Verdict::EventChange => !pass1 && pass2()?,
            Verdict::Noise => !pass1 && !pass2()?,
            Verdict::Undecided => !pass1 && rec.lookahead.is_empty(),
            Verdict::Warmup => unreachable!(),
        };
        if !ok {
            return Err(fail(
                i,
                format!("{} not supported by gate inputs", c.verdict),
            ));
        }
    }
    Ok(())
}
