mod common;

use linkspy::fingerprint::*;
use linkspy::sim::SimSpec;
use proptest::prelude::*;

fn alternating(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|i| if i % 2 == 0 { hi } else { lo }).collect()
}

#[test]
fn alternating_series_has_period_two() {
    let xs = alternating(64, 28_356.0, 68_368.0);
    let f = summarize(&xs, 55_000.0).unwrap();
    assert_eq!(f.dominant_period, 2.0);
    assert_eq!(f.high_fraction, 0.5);
    let best = (1..=32)
        .max_by(|&a, &b| common::brute_autocorrelation(&xs, a).total_cmp(&common::brute_autocorrelation(&xs, b)).then(b.cmp(&a)))
        .unwrap();
    assert_eq!(best, 2);
}

#[test]
fn square_wave_victim_gives_alternating_trace() {
    let spec = SimSpec::default().with_noise(0.0);
    let profile = WorkloadProfile::with_duty("square", 400_000, 0.5, spec.bytes_per_cycle);
    let trace = record_workload_trace(&spec, &profile, 1, 200_000, 256, 64).unwrap();
    let lat = trace.latencies();
    assert!(lat.iter().step_by(2).all(|&l| l > 60_000.0), "{lat:?}");
    assert!(lat.iter().skip(1).step_by(2).all(|&l| l == 28_356.0), "{lat:?}");
    assert_eq!(extract_features(&trace, 55_000.0).unwrap().dominant_period, 2.0);
}

proptest! {
    #[test]
    fn autocorrelation_matches_textbook(xs in prop::collection::vec(0.0f64..1e5, 2..80), lag in 1usize..40) {
        prop_assume!(lag < xs.len());
        let got = autocorrelation(&xs, lag);
        let want = common::brute_autocorrelation(&xs, lag);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn shifting_latencies_shifts_location_features(xs in prop::collection::vec(20_000.0f64..80_000.0, 16..200), c in -10_000.0f64..10_000.0) {
        let a = summarize(&xs, 50_000.0).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let b = summarize(&shifted, 50_000.0 + c).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-6 * (1.0 + x.abs());
        prop_assert!(close(b.mean, a.mean + c));
        prop_assert!(close(b.p10, a.p10 + c));
        prop_assert!(close(b.p50, a.p50 + c));
        prop_assert!(close(b.p90, a.p90 + c));
        prop_assert!(close(b.stddev, a.stddev));
        prop_assert!(a.p10 <= a.p50 && a.p50 <= a.p90);
        prop_assert!((0.0..=1.0).contains(&a.high_fraction));
    }

    #[test]
    fn affine_feature_rescaling_keeps_labels(
        train_rows in prop::collection::vec((prop::array::uniform7(0i32..50), 0usize..3), 6..40),
        test_rows in prop::collection::vec(prop::array::uniform7(0i32..50), 1..20),
        scale in prop::array::uniform7(prop::sample::select(vec![0.5f64, 2.0, 4.0])),
        offset in prop::array::uniform7(-100i32..100),
    ) {
        let labels = ["a", "b", "c"];
        let mut train_set: Vec<_> = train_rows
            .iter()
            .map(|(v, l)| LabeledFeatures::new(FeatureVector::from_array(v.map(f64::from)), labels[*l]))
            .collect();
        train_set.push(LabeledFeatures::new(FeatureVector::from_array([0.0; 7]), "a"));
        train_set.push(LabeledFeatures::new(FeatureVector::from_array([1.0; 7]), "b"));
        let map = |f: &FeatureVector| {
            let a = f.to_array();
            FeatureVector::from_array(std::array::from_fn(|i| a[i] * scale[i] + f64::from(offset[i])))
        };
        let moved: Vec<_> = train_set.iter().map(|r| LabeledFeatures::new(map(&r.features), r.label.clone())).collect();
        let m1 = train(&train_set, 3).unwrap();
        let m2 = train(&moved, 3).unwrap();
        for v in &test_rows {
            let f = FeatureVector::from_array(v.map(f64::from));
            prop_assert_eq!(classify(&m1, &f), classify(&m2, &map(&f)));
        }
    }

    #[test]
    fn accuracy_is_confusion_trace_over_total(
        train_rows in prop::collection::vec((prop::array::uniform7(0.0f64..1.0), 0usize..3), 8..40),
        test_rows in prop::collection::vec((prop::array::uniform7(0.0f64..1.0), 0usize..3), 1..40),
    ) {
        let labels = ["x", "y", "z"];
        let mut set: Vec<_> = train_rows.iter().map(|(v, l)| LabeledFeatures::new(FeatureVector::from_array(*v), labels[*l])).collect();
        for l in labels {
            set.push(LabeledFeatures::new(FeatureVector::from_array([0.5; 7]), l));
        }
        let test: Vec<_> = test_rows.iter().map(|(v, l)| LabeledFeatures::new(FeatureVector::from_array(*v), labels[*l])).collect();
        let model = train(&set, 3).unwrap();
        let eval = evaluate(&model, &test).unwrap();
        prop_assert_eq!(eval.total(), test.len());
        prop_assert_eq!(eval.accuracy, eval.correct() as f64 / eval.total() as f64);
    }
}

#[test]
fn dataset_csv_round_trip() {
    let rows = vec![
        LabeledFeatures::new(FeatureVector::from_array([1.5, 2.0, 3.0, 4.0, 5.0, 0.25, 7.0]), "rf"),
        LabeledFeatures::new(FeatureVector::from_array([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.0]), "pme"),
    ];
    let mut buf = Vec::new();
    write_dataset_csv(&mut buf, &rows).unwrap();
    assert!(String::from_utf8_lossy(&buf).starts_with("mean,stddev,p10,p50,p90,high_fraction,dominant_period,label\n"));
    assert_eq!(read_dataset_csv(buf.as_slice()).unwrap(), rows);
}

#[test]
fn single_profile_rejected() {
    let mut profiles = default_profiles(64.0);
    profiles.truncate(1);
    assert!(FingerprintPlan::new(profiles, 0).validate().is_err());
}

#[test]
fn split_is_disjoint_and_balanced() {
    let spec = SimSpec::default();
    let mut plan = FingerprintPlan::new(default_profiles(spec.bytes_per_cycle), 10);
    plan.traces_per_class = 4;
    plan.windows_per_trace = 2;
    plan.window_samples = 64;
    let data = build_dataset(&spec, &plan).unwrap();
    assert_eq!(data.traces.len(), 16);
    assert_eq!(data.train.len(), 16);
    assert_eq!(data.test.len(), 16);
    let mut seeds: Vec<u64> = data.traces.iter().map(|t| t.trace.seed).collect();
    seeds.sort();
    seeds.dedup();
    assert_eq!(seeds.len(), 16);
    assert!(data.traces.iter().all(|t| t.train == (t.trace.seed % 2 == 0)));
}
