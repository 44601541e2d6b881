use crate::error::{Error, Result};
use crate::probe::Trace;
use crate::stats;

pub const FEATURE_NAMES: [&str; 7] = ["mean", "stddev", "p10", "p50", "p90", "high_fraction", "dominant_period"];

/// Autocorrelation peaks below this are not reported as a period.
const MIN_PERIOD_CORRELATION: f64 = 0.1;
/// Lags whose autocorrelation is this close to the maximum count as tied;
/// the shortest tied lag wins.
const PEAK_TIE_TOLERANCE: f64 = 1e-9;

/// Minimum trace length accepted by [`extract_features`].
pub const MIN_TRACE_SAMPLES: usize = 16;

/// Statistical summary of a latency trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub mean: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub high_fraction: f64,
    /// Lag in samples of the autocorrelation peak; 0 when there is none.
    pub dominant_period: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.mean,
            self.stddev,
            self.p10,
            self.p50,
            self.p90,
            self.high_fraction,
            self.dominant_period,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            mean: a[0],
            stddev: a[1],
            p10: a[2],
            p50: a[3],
            p90: a[4],
            high_fraction: a[5],
            dominant_period: a[6],
        }
    }
}

/// Unbiased autocorrelation at `lag`, normalized by the population variance.
/// Zero for a constant series.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    if lag >= n {
        return 0.0;
    }
    let m = stats::mean(xs);
    let var: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = xs[..n - lag].iter().zip(&xs[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / (n - lag) as f64;
    cov / var
}

fn dominant_period(xs: &[f64]) -> usize {
    let r: Vec<f64> = (1..=xs.len() / 2).map(|lag| autocorrelation(xs, lag)).collect();
    let Some(peak) = r.iter().copied().reduce(f64::max) else {
        return 0;
    };
    if peak < MIN_PERIOD_CORRELATION {
        return 0;
    }
    r.iter().position(|&v| v >= peak - PEAK_TIE_TOLERANCE).map_or(0, |i| i + 1)
}

/// Features of an arbitrary non-empty latency series.
pub fn summarize(latencies: &[f64], threshold: f64) -> Result<FeatureVector> {
    if latencies.is_empty() {
        return Err(Error::TooFewSamples {
            what: "feature extraction",
            min: 1,
            got: 0,
        });
    }
    let mut sorted = latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    let high = latencies.iter().filter(|&&x| x > threshold).count();
    Ok(FeatureVector {
        mean: stats::mean(latencies),
        stddev: stats::population_std(latencies),
        p10: stats::quantile_sorted(&sorted, 0.1),
        p50: stats::quantile_sorted(&sorted, 0.5),
        p90: stats::quantile_sorted(&sorted, 0.9),
        high_fraction: high as f64 / latencies.len() as f64,
        dominant_period: dominant_period(latencies) as f64,
    })
}

pub fn extract_features(trace: &Trace, threshold: f64) -> Result<FeatureVector> {
    if trace.len() < MIN_TRACE_SAMPLES {
        return Err(Error::TooFewSamples {
            what: "trace",
            min: MIN_TRACE_SAMPLES,
            got: trace.len(),
        });
    }
    summarize(&trace.latencies(), threshold)
}

/// One feature vector per non-overlapping window of `window` samples; a
/// partial final window is dropped.
pub fn windowed_features(trace: &Trace, window: usize, threshold: f64) -> Result<Vec<FeatureVector>> {
    if window < MIN_TRACE_SAMPLES {
        return Err(Error::config(
            "window_samples",
            format!("must be at least {MIN_TRACE_SAMPLES}, got {window}"),
        ));
    }
    trace
        .latencies()
        .chunks_exact(window)
        .map(|w| summarize(w, threshold))
        .collect()
}
