//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use linkspy::sim::{ContendingBytes, Cycles, TransferTag};

/// Standard normal tail `P(Z > x)` by composite Simpson integration of the
/// density over `[x, x + 12]`.
pub fn q_by_integration(x: f64) -> f64 {
    let (a, b) = (x, x + 12.0);
    let n = 200_000; // even
    let h = (b - a) / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(a) + pdf(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Sum of `bytes / duration` over every cycle of the window during which a
/// transfer is active, counted cycle by cycle.
pub fn brute_force_contention(transfers: &[(Cycles, Cycles, u64, TransferTag)], window: (Cycles, Cycles)) -> ContendingBytes {
    let mut total = ContendingBytes::zero();
    for &(start, end, bytes, tag) in transfers {
        if tag == TransferTag::Probe {
            continue;
        }
        let active = (window.0..window.1).filter(|&c| start <= c && c < end).count() as u64;
        if active > 0 {
            total += ContendingBytes::fraction(bytes, active, end - start);
        }
    }
    total
}

/// Textbook autocorrelation at `lag`: sample covariance over the `n - lag`
/// overlapping pairs divided by the population variance.
pub fn brute_autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len() as f64;
    let mut mean = 0.0;
    for x in xs {
        mean += x;
    }
    mean /= n;
    let mut var = 0.0;
    for x in xs {
        var += (x - mean).powi(2);
    }
    var /= n;
    let mut cov = 0.0;
    let mut pairs = 0.0;
    for i in 0..xs.len() - lag {
        cov += (xs[i] - mean) * (xs[i + lag] - mean);
        pairs += 1.0;
    }
    if var == 0.0 {
        0.0
    } else {
        cov / pairs / var
    }
}
