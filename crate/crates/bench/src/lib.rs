//! Fixtures shared by the criterion benchmarks in `benches/`.

use headway_core::{gen_approach, gen_event_trace, inject_noise, ApproachConfig, NoiseConfig};

/// Controlled approach sampled at `rate` Hz: `(truth, observed)`.
pub fn approach_trace(rate: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let cfg = ApproachConfig {
        sample_rate: rate,
        ..ApproachConfig::default()
    };
    let truth: Vec<f64> = gen_approach(&cfg)
        .expect("valid approach")
        .iter()
        .map(|p| p.1)
        .collect();
    let observed = inject_noise(&truth, &NoiseConfig::with_seed(seed))
        .expect("valid noise")
        .observed;
    (truth, observed)
}

/// Three plateaus of `len` samples each with default noise.
pub fn event_trace(len: usize, seed: u64) -> Vec<f64> {
    let truth = gen_event_trace(&[(5.0, len), (20.0, len), (5.0, len)]).expect("valid plateaus");
    inject_noise(&truth, &NoiseConfig::with_seed(seed))
        .expect("valid noise")
        .observed
}
