mod common;

use common::{ses_forecasts, SplitMix};
use headway_core::forecast::{fit, ModelOrder};
use headway_core::headway_filter::{filter_series, FilterConfig, Verdict};
use headway_core::metrics::{compare_models, error_report, error_report_dense};
use headway_core::synth::{gen_approach, ApproachConfig};
use proptest::prelude::*;

proptest! {
    #[test]
    fn metric_identities(pairs in prop::collection::vec((0.1f64..40.0, 0.0f64..40.0), 1..80), k in 0.01f64..100.0) {
        let truth: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let est: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let r = error_report_dense(&truth, &est).unwrap();
        prop_assert!((r.rmse * r.rmse - r.mse).abs() <= 1e-12 * r.mse.max(1.0));
        prop_assert!(r.mae <= r.rmse + 1e-12);
        prop_assert!(r.mse >= 0.0 && r.mape >= 0.0 && r.mae >= 0.0);
        prop_assert_eq!(r.n_used + r.n_skipped, truth.len());

        let ts: Vec<f64> = truth.iter().map(|v| v * k).collect();
        let es: Vec<f64> = est.iter().map(|v| v * k).collect();
        let s = error_report_dense(&ts, &es).unwrap();
        prop_assert!((s.mae - k * r.mae).abs() <= 1e-9 * (k * r.mae).max(1.0));
        prop_assert!((s.rmse - k * r.rmse).abs() <= 1e-9 * (k * r.rmse).max(1.0));
        prop_assert!((s.mse - k * k * r.mse).abs() <= 1e-9 * (k * k * r.mse).max(1.0));
        prop_assert!((s.mape - r.mape).abs() <= 1e-9 * r.mape.max(1.0));

        let same = error_report_dense(&truth, &truth).unwrap();
        prop_assert_eq!((same.mse, same.rmse, same.mape, same.mae), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn skip_accounting(truth in prop::collection::vec(prop_oneof![Just(0.0), 0.5f64..40.0], 1..60), mask in prop::collection::vec(any::<bool>(), 60)) {
        let est: Vec<Option<f64>> = truth.iter().zip(&mask).map(|(t, &keep)| keep.then_some(t + 1.0)).collect();
        match error_report(&truth, &est) {
            Ok(r) => prop_assert_eq!(r.n_used + r.n_skipped, truth.len()),
            Err(_) => prop_assert!(truth.iter().zip(&est).all(|(t, e)| e.is_none() || *t == 0.0)),
        }
    }
}

#[test]
fn noise_free_approach_is_tracked_by_the_smoothing_gate() {
    // At 100 Hz the per-sample gap decrement is 4.47 cm.
    let approach = ApproachConfig {
        sample_rate: 100.0,
        ..ApproachConfig::default()
    };
    let truth: Vec<f64> = gen_approach(&approach)
        .unwrap()
        .iter()
        .map(|p| p.1)
        .collect();
    let cfg = FilterConfig::default();
    let table = compare_models(&truth, &truth, &[ModelOrder::SES], &cfg).unwrap();
    let pred = table.rows[0].prediction.unwrap();
    assert!(pred.mae <= 0.05, "mae {}", pred.mae);

    // Cross-check each prediction against an SES recursion over the same
    // window with alpha = 1 + theta.
    let verdicts = filter_series(&truth, &cfg).unwrap();
    let n = cfg.window_size;
    for (i, c) in verdicts.iter().enumerate().skip(n) {
        assert_eq!(c.verdict, Verdict::Valid);
        let window = &truth[i - n..i];
        let theta = fit(window, ModelOrder::SES).unwrap().theta();
        let oracle = *ses_forecasts(window, 1.0 + theta).last().unwrap();
        assert!((c.predicted.unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn filtered_column_scores_only_retained_samples() {
    let mut rng = SplitMix(5);
    let truth: Vec<f64> = (0..120).map(|i| 20.0 - 0.02 * f64::from(i)).collect();
    let mut raw = truth.clone();
    for _ in 0..6 {
        let i = 40 + rng.below(70) as usize;
        raw[i] = 0.2;
    }
    let cfg = FilterConfig::default();
    let table = compare_models(&truth, &raw, &[ModelOrder::SES], &cfg).unwrap();
    let verdicts = filter_series(&raw, &cfg).unwrap();
    let retained = verdicts.iter().filter(|c| c.verdict.is_accepted()).count();
    let filtered = table.rows[0].filtered.unwrap();
    assert_eq!(filtered.n_used, retained);
    assert_eq!(filtered.mse, 0.0);
    let pred = table.rows[0].prediction.unwrap();
    assert!(filtered.mse <= pred.mse);
}
