//! One-step-ahead forecasting: simple exponential smoothing and a compact
//! ARIMA engine for the six low orders used by the headway gate.
//!
//! Coefficients are estimated by conditional sum of squares (CSS) on the
//! differenced window `z`. Residuals before the first usable observation are
//! taken as zero, so for `t = p + 1 ..= n`
//!
//! ```text
//! e_t = z_t - c - phi * z_{t-1} - theta * e_{t-1}
//! ```
//!
//! with `e_p = 0`. The MA term enters with a plus sign
//! (`z_t = ... + e_t + theta * e_{t-1}`), which makes ARIMA(0,1,1) with
//! `theta` forecast-identical to SES with `alpha = 1 + theta`.
//!
//! The constant `c` is only estimated when `d = 0`; differenced models carry
//! no drift.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Coefficient bound for AR and MA terms.
pub const COEF_BOUND: f64 = 0.999;

/// Absolute tolerance of the golden-section search.
pub const SEARCH_TOL: f64 = 1e-5;

/// Iteration cap of the golden-section search.
pub const SEARCH_MAX_ITER: usize = 200;

// Coarse scan that picks the bracket the golden-section search refines.
const GRID_HALF_STEPS: i32 = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForecastError {
    #[error("series of length {len} is too short (need at least {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("smoothing factor {0} is outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("ARIMA order ({0},{1},{2}) is not supported")]
    UnsupportedOrder(u8, u8, u8),
    #[error("cannot parse model order {0:?}; expected p,d,q")]
    OrderSyntax(String),
    #[error("coefficient {name} = {value} is outside the admissible range")]
    Coefficient { name: &'static str, value: f64 },
    #[error("series contains a non-finite value")]
    NonFinite,
}

/// Simple exponential smoothing state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SesState {
    alpha: f64,
    s: f64,
}

impl SesState {
    pub fn new(alpha: f64, initial: f64) -> Result<Self, ForecastError> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ForecastError::InvalidAlpha(alpha));
        }
        Ok(Self { alpha, s: initial })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Current smoothed level, which is also the next one-step forecast.
    pub fn level(&self) -> f64 {
        self.s
    }

    #[must_use]
    pub fn step(self, x: f64) -> Self {
        Self {
            alpha: self.alpha,
            s: self.s + self.alpha * (x - self.s),
        }
    }
}

/// `S_t = S_{t-1} + alpha * (x_t - S_{t-1})`.
pub fn ses_step(state: SesState, x: f64) -> SesState {
    state.step(x)
}

/// An ARIMA `(p, d, q)` order restricted to the supported set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModelOrder {
    p: u8,
    d: u8,
    q: u8,
}

impl ModelOrder {
    pub const MEAN: ModelOrder = ModelOrder { p: 0, d: 0, q: 0 };
    pub const RANDOM_WALK: ModelOrder = ModelOrder { p: 0, d: 1, q: 0 };
    pub const SES: ModelOrder = ModelOrder { p: 0, d: 1, q: 1 };
    pub const AR1: ModelOrder = ModelOrder { p: 1, d: 0, q: 0 };
    pub const DIFF_AR1: ModelOrder = ModelOrder { p: 1, d: 1, q: 0 };
    pub const LINEAR_TREND_MA1: ModelOrder = ModelOrder { p: 0, d: 2, q: 1 };

    /// Every supported order, in the order they are reported.
    pub const ALL: [ModelOrder; 6] = [
        Self::MEAN,
        Self::RANDOM_WALK,
        Self::SES,
        Self::AR1,
        Self::DIFF_AR1,
        Self::LINEAR_TREND_MA1,
    ];

    pub fn new(p: u8, d: u8, q: u8) -> Result<Self, ForecastError> {
        let order = ModelOrder { p, d, q };
        if Self::ALL.contains(&order) {
            Ok(order)
        } else {
            Err(ForecastError::UnsupportedOrder(p, d, q))
        }
    }

    pub fn p(&self) -> usize {
        self.p as usize
    }

    pub fn d(&self) -> usize {
        self.d as usize
    }

    pub fn q(&self) -> usize {
        self.q as usize
    }

    /// Smallest window `fit` accepts for this order.
    pub fn min_window(&self) -> usize {
        self.d() + self.p() + 2
    }

    fn tail_len(&self) -> usize {
        (self.d() + self.p()).max(1)
    }
}

impl Default for ModelOrder {
    fn default() -> Self {
        Self::SES
    }
}

impl fmt::Display for ModelOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)
    }
}

impl FromStr for ModelOrder {
    type Err = ForecastError;

    /// Accepts `p,d,q` with optional surrounding parentheses and spaces.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || ForecastError::OrderSyntax(s.to_string());
        let inner = s.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|rest| rest.strip_suffix(')'))
            .unwrap_or(inner);
        let parts: Vec<u8> = inner
            .split(',')
            .map(|t| t.trim().parse::<u8>())
            .collect::<Result<_, _>>()
            .map_err(|_| syntax())?;
        match parts[..] {
            [p, d, q] => ModelOrder::new(p, d, q),
            _ => Err(syntax()),
        }
    }
}

/// Applies `d` rounds of first differencing.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>, ForecastError> {
    if series.len() <= d {
        return Err(ForecastError::TooShort {
            len: series.len(),
            needed: d + 1,
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// A fitted model, ready to produce its one-step forecast.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    order: ModelOrder,
    c: f64,
    phi: f64,
    theta: f64,
    last_residual: f64,
    z_last: f64,
    window_tail: Vec<f64>,
}

impl FittedModel {
    /// Builds a model with the given coefficients and runs the residual
    /// recursion over `window`. Coefficients the order does not use must be 0.
    pub fn with_coefficients(
        window: &[f64],
        order: ModelOrder,
        c: f64,
        phi: f64,
        theta: f64,
    ) -> Result<Self, ForecastError> {
        let z = prepare(window, order)?;
        for (name, value, used) in [
            ("c", c, order.d() == 0),
            ("phi", phi, order.p() == 1),
            ("theta", theta, order.q() == 1),
        ] {
            let admissible = if !used {
                value == 0.0
            } else if name == "c" {
                value.is_finite()
            } else {
                value.abs() <= COEF_BOUND
            };
            if !admissible {
                return Err(ForecastError::Coefficient { name, value });
            }
        }
        Ok(Self::assemble(window, &z, order, c, phi, theta))
    }

    fn assemble(
        window: &[f64],
        z: &[f64],
        order: ModelOrder,
        c: f64,
        phi: f64,
        theta: f64,
    ) -> Self {
        let (_, last_residual) = css(z, order.p(), c, phi, theta);
        FittedModel {
            order,
            c,
            phi,
            theta,
            last_residual,
            z_last: *z.last().expect("prepare guarantees a non-empty series"),
            window_tail: window[window.len() - order.tail_len()..].to_vec(),
        }
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn last_residual(&self) -> f64 {
        self.last_residual
    }

    pub fn window_tail(&self) -> &[f64] {
        &self.window_tail
    }

    /// Forecast of the next differenced value.
    pub fn increment(&self) -> f64 {
        self.c + self.phi * self.z_last + self.theta * self.last_residual
    }
}

fn prepare(window: &[f64], order: ModelOrder) -> Result<Vec<f64>, ForecastError> {
    let needed = order.min_window();
    if window.len() < needed {
        return Err(ForecastError::TooShort {
            len: window.len(),
            needed,
        });
    }
    if window.iter().any(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    difference(window, order.d())
}

/// Conditional sum of squares and the final residual.
fn css(z: &[f64], p: usize, c: f64, phi: f64, theta: f64) -> (f64, f64) {
    let mut eps = 0.0;
    let mut sse = 0.0;
    for t in p..z.len() {
        let ar = if p == 1 { phi * z[t - 1] } else { 0.0 };
        eps = z[t] - c - ar - theta * eps;
        sse += eps * eps;
    }
    (sse, eps)
}

/// CSS objective for the given order and coefficients on window `window`.
pub fn css_objective(
    window: &[f64],
    order: ModelOrder,
    c: f64,
    phi: f64,
    theta: f64,
) -> Result<f64, ForecastError> {
    let z = prepare(window, order)?;
    Ok(css(&z, order.p(), c, phi, theta).0)
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Least-squares constant of an AR(1) given `phi`.
fn ar_constant(z: &[f64], phi: f64) -> f64 {
    let n = z.len() - 1;
    z.windows(2).map(|w| w[1] - phi * w[0]).sum::<f64>() / n as f64
}

/// Fits `order` to `window` by conditional sum of squares.
pub fn fit(window: &[f64], order: ModelOrder) -> Result<FittedModel, ForecastError> {
    let z = prepare(window, order)?;
    let (c, phi, theta) = match (order.p(), order.d(), order.q()) {
        (0, 0, 0) => (mean(&z), 0.0, 0.0),
        (0, _, 0) => (0.0, 0.0, 0.0),
        (0, _, 1) => {
            let theta = minimize_bounded(|th| css(&z, 0, 0.0, 0.0, th).0);
            (0.0, 0.0, theta)
        }
        (1, 0, 0) => {
            // The constant is profiled out in closed form. Searching on the
            // centred series keeps the objective independent of level.
            let level = mean(&z);
            let centred: Vec<f64> = z.iter().map(|v| v - level).collect();
            let phi = minimize_bounded(|ph| {
                let c = ar_constant(&centred, ph);
                css(&centred, 1, c, ph, 0.0).0
            });
            (ar_constant(&z, phi), phi, 0.0)
        }
        (1, _, 0) => {
            let phi = minimize_bounded(|ph| css(&z, 1, 0.0, ph, 0.0).0);
            (0.0, phi, 0.0)
        }
        _ => unreachable!("ModelOrder only admits supported orders"),
    };
    Ok(FittedModel::assemble(window, &z, order, c, phi, theta))
}

/// One-step-ahead forecast on the original scale.
pub fn forecast_one(model: &FittedModel) -> f64 {
    let z_hat = model.increment();
    let tail = &model.window_tail;
    let last = tail[tail.len() - 1];
    match model.order.d() {
        0 => z_hat,
        1 => last + z_hat,
        _ => 2.0 * last - tail[tail.len() - 2] + z_hat,
    }
}

/// Minimises `f` over `[-COEF_BOUND, COEF_BOUND]`.
///
/// A coarse scan picks the best grid point (ties go to the point nearest 0),
/// then golden-section search refines the bracket around it. The refined
/// point is returned only if it does not do worse than the grid point.
fn minimize_bounded<F: Fn(f64) -> f64>(f: F) -> f64 {
    let step = COEF_BOUND / GRID_HALF_STEPS as f64;
    let mut best_x = 0.0;
    let mut best_f = f(0.0);
    for k in 1..=GRID_HALF_STEPS {
        for x in [k as f64 * step, -(k as f64) * step] {
            let x = x.clamp(-COEF_BOUND, COEF_BOUND);
            let fx = f(x);
            if fx < best_f {
                best_x = x;
                best_f = fx;
            }
        }
    }

    let lo = (best_x - step).max(-COEF_BOUND);
    let hi = (best_x + step).min(COEF_BOUND);
    let x = golden_section(&f, lo, hi, SEARCH_TOL, SEARCH_MAX_ITER);
    if f(x) < best_f {
        x
    } else {
        best_x
    }
}

fn golden_section<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ses_examples() {
        let s = SesState::new(1.0 - 1e-12, 3.0).unwrap().step(9.0);
        assert!((s.level() - 9.0).abs() < 1e-9);
        let s = SesState::new(1e-12, 3.0).unwrap().step(9.0);
        assert!((s.level() - 3.0).abs() < 1e-9);
        let s = ses_step(SesState::new(0.5, 10.0).unwrap(), 12.0);
        assert_eq!(s.level(), 11.0);
        assert_eq!(s.alpha(), 0.5);
    }

    #[test]
    fn ses_rejects_bad_alpha() {
        for a in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(SesState::new(a, 0.0).is_err(), "{a}");
        }
    }

    #[test]
    fn difference_examples() {
        assert_eq!(
            difference(&[1.0, 2.0, 4.0, 8.0], 1).unwrap(),
            vec![1.0, 2.0, 4.0]
        );
        assert_eq!(
            difference(&[1.0, 2.0, 4.0, 8.0], 2).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(difference(&[1.0, 2.0], 0).unwrap(), vec![1.0, 2.0]);
        assert_eq!(
            difference(&[5.0], 1),
            Err(ForecastError::TooShort { len: 1, needed: 2 })
        );
    }

    #[test]
    fn order_parsing() {
        assert_eq!("0,1,1".parse::<ModelOrder>().unwrap(), ModelOrder::SES);
        assert_eq!(
            "(1, 1, 0)".parse::<ModelOrder>().unwrap(),
            ModelOrder::DIFF_AR1
        );
        assert_eq!(ModelOrder::LINEAR_TREND_MA1.to_string(), "(0,2,1)");
        assert_eq!(
            "2,0,0".parse::<ModelOrder>(),
            Err(ForecastError::UnsupportedOrder(2, 0, 0))
        );
        assert!(matches!(
            "0,1".parse::<ModelOrder>(),
            Err(ForecastError::OrderSyntax(_))
        ));
        assert!(matches!(
            "a,b,c".parse::<ModelOrder>(),
            Err(ForecastError::OrderSyntax(_))
        ));
    }

    #[test]
    fn constant_window_forecasts_the_constant() {
        let window = [5.0; 30];
        for order in ModelOrder::ALL {
            let f = forecast_one(&fit(&window, order).unwrap());
            assert!((f - 5.0).abs() < 1e-9, "{order}: {f}");
        }
    }

    #[test]
    fn random_walk_has_no_free_coefficients() {
        let window: Vec<f64> = (1..=10).map(f64::from).collect();
        let m = fit(&window, ModelOrder::RANDOM_WALK).unwrap();
        assert_eq!((m.constant(), m.phi(), m.theta()), (0.0, 0.0, 0.0));
        assert_eq!(forecast_one(&m), 10.0);
        assert_eq!(
            forecast_one(&fit(&[2.0, 4.0, 6.0], ModelOrder::RANDOM_WALK).unwrap()),
            6.0
        );
    }

    #[test]
    fn mean_model_forecasts_window_mean() {
        let m = fit(&[2.0, 4.0, 6.0], ModelOrder::MEAN).unwrap();
        assert_eq!(forecast_one(&m), 4.0);
    }

    #[test]
    fn too_short_windows() {
        assert_eq!(
            fit(&[1.0, 2.0, 3.0], ModelOrder::DIFF_AR1).unwrap_err(),
            ForecastError::TooShort { len: 3, needed: 4 }
        );
        assert!(fit(&[1.0, 2.0, 3.0], ModelOrder::LINEAR_TREND_MA1).is_err());
        assert!(fit(&[1.0, 2.0, 3.0], ModelOrder::SES).is_ok());
        assert_eq!(
            fit(&[1.0, f64::NAN, 3.0], ModelOrder::SES).unwrap_err(),
            ForecastError::NonFinite
        );
    }

    #[test]
    fn with_coefficients_validates() {
        let w = [1.0, 2.0, 3.0, 4.0];
        assert!(FittedModel::with_coefficients(&w, ModelOrder::SES, 0.0, 0.0, -0.5).is_ok());
        assert!(FittedModel::with_coefficients(&w, ModelOrder::SES, 1.0, 0.0, -0.5).is_err());
        assert!(FittedModel::with_coefficients(&w, ModelOrder::SES, 0.0, 0.0, -1.0).is_err());
        assert!(
            FittedModel::with_coefficients(&w, ModelOrder::RANDOM_WALK, 0.0, 0.2, 0.0).is_err()
        );
    }

    #[test]
    fn unused_coefficients_are_zero_after_fit() {
        let w = [3.0, 5.0, 4.0, 6.0, 5.5, 7.0, 6.1];
        for order in ModelOrder::ALL {
            let m = fit(&w, order).unwrap();
            if order.d() != 0 {
                assert_eq!(m.constant(), 0.0);
            }
            if order.p() == 0 {
                assert_eq!(m.phi(), 0.0);
            }
            if order.q() == 0 {
                assert_eq!(m.theta(), 0.0);
            }
            assert!(m.phi().abs() <= COEF_BOUND && m.theta().abs() <= COEF_BOUND);
            assert_eq!(m.window_tail().len(), (order.d() + order.p()).max(1));
        }
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section(&|x: f64| (x - 0.3).powi(2), -1.0, 1.0, 1e-8, 200);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((minimize_bounded(|x| (x + 0.42).powi(2)) + 0.42).abs() < SEARCH_TOL);
        // Minimum on the boundary.
        assert!((minimize_bounded(|x| x) + COEF_BOUND).abs() < SEARCH_TOL);
        // Flat objective resolves to zero.
        assert_eq!(minimize_bounded(|_| 1.0), 0.0);
    }
}
