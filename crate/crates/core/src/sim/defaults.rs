//! Built-in constants. The latency endpoints, buffer sizes, preamble length
//! and decision threshold reproduce a two-GPU NVLink 2.0 measurement setup.

use super::Cycles;

/// Probe latency on an idle link.
pub const IDLE_PROBE_CYCLES: Cycles = 28_356;
/// Probe latency while one covert payload copy fully overlaps the probe.
pub const BUSY_PROBE_CYCLES: Cycles = 68_368;
/// Covert sender copy size (1.25 MiB).
pub const COVERT_PAYLOAD_BYTES: u64 = 1_310_720;
/// Probe copy size.
pub const PROBE_BYTES: u64 = 256;
/// Fixed decision threshold used in replication mode.
pub const REPLICATION_THRESHOLD_CYCLES: f64 = 55_000.0;
pub const PREAMBLE_LEN: usize = 4;
pub const LENGTH_FIELD_BITS: usize = 16;

pub const BYTES_PER_CYCLE: f64 = 64.0;
pub const CLOCK_HZ: f64 = 1.38e9;
pub const NOISE_SIGMA_CYCLES: f64 = 8_800.0;

/// Contention coefficient that maps one fully overlapping payload copy onto
/// the busy endpoint: (68,368 - 28,356) / 1,310,720 cycles per byte.
pub const CONTENTION_CYCLES_PER_BYTE: f64 =
    (BUSY_PROBE_CYCLES - IDLE_PROBE_CYCLES) as f64 / COVERT_PAYLOAD_BYTES as f64;

/// Noise draws beyond this many standard deviations are treated as
/// implausible when sizing slots and probe periods.
pub const PLAUSIBLE_SIGMAS: f64 = 6.0;
