//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use headway_core::forecast::{fit, forecast_one};
use headway_core::headway_filter::{FilterConfig, Verdict};

/// Whole-array restatement of the two-stage filter: walk the readings in
/// order, keep the accepted values in a growing vector and predict from its
/// last `N` entries.
pub fn batch_filter(xs: &[f64], cfg: &FilterConfig) -> Vec<(Verdict, Option<f64>)> {
    let n = cfg.window_size;
    let mut accepted: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(xs.len());
    for (i, &m) in xs.iter().enumerate() {
        if accepted.len() < n {
            accepted.push(m);
            out.push((Verdict::Warmup, None));
            continue;
        }
        let window = &accepted[accepted.len() - n..];
        let p = forecast_one(&fit(window, cfg.order).unwrap());
        if (p - m).abs() < cfg.th1 {
            accepted.push(m);
            out.push((Verdict::Valid, Some(p)));
            continue;
        }
        let end = (i + cfg.lookahead).min(xs.len());
        let segment = &xs[i..end];
        if segment.len() == 1 {
            out.push((Verdict::Undecided, None));
            continue;
        }
        let mean = (m + segment[1..].iter().sum::<f64>()) / segment.len() as f64;
        if (m - mean).abs() < cfg.th2 {
            accepted = vec![m];
            out.push((Verdict::EventChange, Some(p)));
        } else {
            out.push((Verdict::Noise, Some(p)));
        }
    }
    out
}

/// One-step SES forecasts seeded with `s_1 = x_1`: element `t` is the
/// forecast of `x_{t+1}` made after seeing `x_1..=x_t`.
pub fn ses_forecasts(xs: &[f64], alpha: f64) -> Vec<f64> {
    let mut s = xs[0];
    let mut out = vec![s];
    for &x in &xs[1..] {
        s = alpha * x + (1.0 - alpha) * s;
        out.push(s);
    }
    out
}

/// Ordinary least squares of `z_t` on `(1, z_{t-1})`; returns `(c, phi)`.
pub fn ols_ar1(z: &[f64]) -> (f64, f64) {
    let xs = &z[..z.len() - 1];
    let ys = &z[1..];
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let phi = sxy / sxx;
    (my - phi * mx, phi)
}

/// Spike fixture: 5 m plateau (t0..t5), spikes at t6..t9, 20 m
/// plateau (t10..t19), back to 5 m (t20..t29).
pub fn spike_fixture() -> Vec<f64> {
    let mut xs = vec![5.0; 6];
    xs.extend([17.0, 0.5, 12.0, 9.0]);
    xs.extend([20.0; 10]);
    xs.extend([5.0; 10]);
    xs
}

/// Small deterministic generator for test traces (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n
    }
}

/// Random trace in `[0, 40]`: a random walk with occasional jumps so both
/// gates and event changes get exercised.
pub fn random_trace(rng: &mut SplitMix, len: usize) -> Vec<f64> {
    let mut level = rng.range(2.0, 38.0);
    (0..len)
        .map(|_| {
            let u = rng.unit();
            if u < 0.05 {
                rng.range(0.0, 40.0)
            } else {
                if u < 0.08 {
                    level = rng.range(2.0, 38.0);
                }
                level = (level + rng.range(-0.3, 0.3)).clamp(0.0, 40.0);
                level
            }
        })
        .collect()
}
