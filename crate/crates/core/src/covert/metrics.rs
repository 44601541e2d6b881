use super::BitStream;
use crate::sim::Cycles;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelMetrics {
    pub bits_sent: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub bandwidth_kbps: f64,
}

/// Compares `received` with `sent` position by position. Bits missing from
/// (or extra in) `received` count as errors. Bandwidth is
/// `len(sent) * clock_hz / elapsed_cycles / 1000`.
pub fn compute_metrics(sent: &BitStream, received: &BitStream, elapsed_cycles: Cycles, clock_hz: f64) -> ChannelMetrics {
    let mismatched = sent.iter().zip(received.iter()).filter(|(a, b)| a != b).count();
    let bit_errors = mismatched + sent.len().abs_diff(received.len());
    let bits_sent = sent.len();
    let ber = if bits_sent == 0 {
        0.0
    } else {
        (bit_errors as f64 / bits_sent as f64).min(1.0)
    };
    let bandwidth_kbps = if elapsed_cycles == 0 {
        0.0
    } else {
        bits_sent as f64 * clock_hz / elapsed_cycles as f64 / 1000.0
    };
    ChannelMetrics {
        bits_sent,
        bit_errors,
        ber,
        bandwidth_kbps,
    }
}
