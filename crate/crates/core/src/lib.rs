//! Headway time-series pipeline for a single-beam LIDAR mounted on a
//! following vehicle.
//!
//! - [`trip_data`]: logged trip rows, the CSV codec and pulse-width conversion.
//! - [`forecast`]: exponential smoothing and low-order ARIMA one-step forecasts.
//! - [`headway_filter`]: the two-stage prediction/mean-filter noise gate.
//! - [`metrics`]: MSE/RMSE/MAPE/MAE and per-order model comparison.
//! - [`synth`]: synthetic ground truth and labelled noise.

pub mod forecast;
pub mod headway_filter;
pub mod metrics;
pub mod synth;
pub mod trip_data;

pub use forecast::{
    difference, fit, forecast_one, ses_step, FittedModel, ForecastError, ModelOrder, SesState,
};
pub use headway_filter::{
    filter_series, filter_trip, stage1_check, stage2_check, Classification, FilterConfig,
    FilterError, HeadwayFilter, Verdict,
};
pub use metrics::{compare_models, error_report, ComparisonTable, ErrorReport, MetricsError};
pub use synth::{
    gen_approach, gen_event_trace, inject_noise, ApproachConfig, LabeledTrace, NoiseConfig,
    NoiseLabel,
};
pub use trip_data::{
    parse_trip, pulse_to_distance, write_trip, PulseSample, RawReading, Trip, TripDataError,
};
