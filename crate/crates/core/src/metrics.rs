//! Forecast error metrics and the per-order model comparison.

use std::fmt;

use thiserror::Error;

use crate::forecast::ModelOrder;
use crate::headway_filter::{filter_series, FilterConfig, FilterError};

/// Truth values with magnitude below this are not scored.
pub const ZERO_TRUTH_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("series lengths differ: {truth} truth values, {estimate} estimates")]
    LengthMismatch { truth: usize, estimate: usize },
    #[error("no scorable pairs")]
    NoPairs,
    #[error("no model orders requested")]
    EmptyOrders,
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Errors between a truth series and an estimate series.
///
/// A pair is scored when the estimate is present and `|truth| >= 1e-9`; all
/// four metrics are computed over the same scored pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// Mean squared error, m².
    pub mse: f64,
    /// Root mean squared error, m.
    pub rmse: f64,
    /// Mean absolute percentage error, percent.
    pub mape: f64,
    /// Mean absolute error, m.
    pub mae: f64,
    pub n_used: usize,
    pub n_skipped: usize,
}

pub fn error_report(truth: &[f64], estimate: &[Option<f64>]) -> Result<ErrorReport, MetricsError> {
    if truth.len() != estimate.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            estimate: estimate.len(),
        });
    }
    let mut sq = 0.0;
    let mut abs = 0.0;
    let mut pct = 0.0;
    let mut n_used = 0usize;
    for (&t, e) in truth.iter().zip(estimate) {
        let Some(e) = *e else { continue };
        if t.abs() < ZERO_TRUTH_EPS {
            continue;
        }
        let err = (t - e).abs();
        sq += err * err;
        abs += err;
        pct += err / t.abs();
        n_used += 1;
    }
    if n_used == 0 {
        return Err(MetricsError::NoPairs);
    }
    let n = n_used as f64;
    let mse = sq / n;
    Ok(ErrorReport {
        mse,
        rmse: mse.sqrt(),
        mape: 100.0 * pct / n,
        mae: abs / n,
        n_used,
        n_skipped: truth.len() - n_used,
    })
}

/// Convenience for fully present estimates.
pub fn error_report_dense(truth: &[f64], estimate: &[f64]) -> Result<ErrorReport, MetricsError> {
    let est: Vec<Option<f64>> = estimate.iter().copied().map(Some).collect();
    error_report(truth, &est)
}

/// One row of a comparison: the gate order and its two scored columns.
/// A column is `None` when the filter left nothing to score.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub order: ModelOrder,
    /// Truth against the stage-1 predictions.
    pub prediction: Option<ErrorReport>,
    /// Truth against the readings the filter retained.
    pub filtered: Option<ErrorReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonTable {
    pub fn row(&self, order: ModelOrder) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.order == order)
    }
}

/// Runs the filter once per order and scores both columns against `truth`.
///
/// Orders are deduplicated, keeping first occurrence.
pub fn compare_models(
    truth: &[f64],
    raw: &[f64],
    orders: &[ModelOrder],
    cfg: &FilterConfig,
) -> Result<ComparisonTable, MetricsError> {
    if orders.is_empty() {
        return Err(MetricsError::EmptyOrders);
    }
    if truth.len() != raw.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            estimate: raw.len(),
        });
    }
    let mut unique: Vec<ModelOrder> = Vec::with_capacity(orders.len());
    for &o in orders {
        if !unique.contains(&o) {
            unique.push(o);
        }
    }

    let mut rows = Vec::with_capacity(unique.len());
    for order in unique {
        let cfg = FilterConfig { order, ..*cfg };
        let verdicts = filter_series(raw, &cfg)?;
        let predicted: Vec<Option<f64>> = verdicts.iter().map(|c| c.predicted).collect();
        let retained: Vec<Option<f64>> = verdicts
            .iter()
            .zip(raw)
            .map(|(c, &m)| c.verdict.is_accepted().then_some(m))
            .collect();
        rows.push(ComparisonRow {
            order,
            prediction: score(truth, &predicted)?,
            filtered: score(truth, &retained)?,
        });
    }
    Ok(ComparisonTable { rows })
}

fn score(truth: &[f64], estimate: &[Option<f64>]) -> Result<Option<ErrorReport>, MetricsError> {
    match error_report(truth, estimate) {
        Ok(r) => Ok(Some(r)),
        Err(MetricsError::NoPairs) => Ok(None),
        Err(e) => Err(e),
    }
}

const MODEL_W: usize = 11;
const CELL_W: usize = 8;

/// Fixed-width rendering with two decimals per metric.
impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let group = CELL_W * 4;
        writeln!(
            f,
            "{:<MODEL_W$}{:>group$}{:>group$}",
            "", "Ground Truth Vs Prediction", "Ground Truth Vs Filtered Data"
        )?;
        write!(f, "{:<MODEL_W$}", "ARIMA Model")?;
        for _ in 0..2 {
            for name in ["MSE", "RMSE", "MAPE", "MAE"] {
                write!(f, "{name:>CELL_W$}")?;
            }
        }
        writeln!(f)?;
        for row in &self.rows {
            write!(f, "{:<MODEL_W$}", row.order.to_string())?;
            for report in [row.prediction, row.filtered] {
                match report {
                    Some(r) => {
                        for v in [r.mse, r.rmse, r.mape, r.mae] {
                            write!(f, "{v:>CELL_W$.2}")?;
                        }
                    }
                    None => {
                        for _ in 0..4 {
                            write!(f, "{:>CELL_W$}", "n/a")?;
                        }
                    }
                }
            }
            writeln!(f)?;
        }
        writeln!(f, "MSE in m^2; RMSE and MAE in m; MAPE in percent.")
    }
}
