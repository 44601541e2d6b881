use std::fmt;
use std::ops::AddAssign;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use super::{defaults, Cycles};
use crate::error::{Error, Result};

/// Overlap-weighted byte volume, kept as an exact fraction so that different
/// accumulation orders compare equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct ContendingBytes(BigRational);

impl ContendingBytes {
    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn whole(bytes: u64) -> Self {
        Self(BigRational::from_integer(BigInt::from(bytes)))
    }

    /// `bytes * numerator / denominator`.
    pub fn fraction(bytes: u64, numerator: u64, denominator: u64) -> Self {
        assert!(denominator > 0, "zero-length transfer");
        Self(BigRational::new(
            BigInt::from(bytes) * BigInt::from(numerator),
            BigInt::from(denominator),
        ))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

impl AddAssign for ContendingBytes {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl fmt::Debug for ContendingBytes {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContendingBytes({})", self.0)
    }
}

/// Probe latency as a linear function of contending bytes plus Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyModel {
    pub idle_base_cycles: f64,
    pub contention_cycles_per_byte: f64,
    pub noise_sigma_cycles: f64,
    pub rng_seed: u64,
}

impl Default for LatencyModel {
    fn default() -> Self {
        Self {
            idle_base_cycles: defaults::IDLE_PROBE_CYCLES as f64,
            contention_cycles_per_byte: defaults::CONTENTION_CYCLES_PER_BYTE,
            noise_sigma_cycles: defaults::NOISE_SIGMA_CYCLES,
            rng_seed: 0,
        }
    }
}

impl LatencyModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.idle_base_cycles.is_finite() && self.idle_base_cycles > 0.0) {
            return Err(Error::config(
                "idle_base_cycles",
                format!("must be positive, got {}", self.idle_base_cycles),
            ));
        }
        if !(self.contention_cycles_per_byte.is_finite() && self.contention_cycles_per_byte >= 0.0) {
            return Err(Error::config(
                "contention_cycles_per_byte",
                format!("must be non-negative, got {}", self.contention_cycles_per_byte),
            ));
        }
        if !(self.noise_sigma_cycles.is_finite() && self.noise_sigma_cycles >= 0.0) {
            return Err(Error::config(
                "noise_sigma_cycles",
                format!("must be non-negative, got {}", self.noise_sigma_cycles),
            ));
        }
        Ok(())
    }

    /// Length of the contention window that starts at probe issue.
    pub fn window_cycles(&self) -> Cycles {
        (self.idle_base_cycles.ceil() as Cycles).max(1)
    }

    pub fn mean_latency(&self, contending_bytes: f64) -> f64 {
        self.idle_base_cycles + self.contention_cycles_per_byte * contending_bytes
    }

    /// Latency for a given contention level and standard-normal draw `z`,
    /// rounded to whole cycles and clamped to at least one.
    pub fn latency(&self, contending: &ContendingBytes, z: f64) -> Cycles {
        let raw = self.mean_latency(contending.to_f64()) + self.noise_sigma_cycles * z;
        if raw < 1.0 {
            1
        } else {
            raw.round() as Cycles
        }
    }

    /// Upper end of the plausible latency range for a contention level.
    pub fn max_plausible_latency(&self, contending_bytes: f64) -> Cycles {
        (self.mean_latency(contending_bytes) + defaults::PLAUSIBLE_SIGMAS * self.noise_sigma_cycles).ceil() as Cycles
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_coefficient_maps_payload_to_busy_endpoint() {
        let m = LatencyModel::default();
        let busy = m.latency(&ContendingBytes::whole(defaults::COVERT_PAYLOAD_BYTES), 0.0);
        assert_eq!(busy, defaults::BUSY_PROBE_CYCLES);
        assert_eq!(m.latency(&ContendingBytes::zero(), 0.0), defaults::IDLE_PROBE_CYCLES);
        assert!((m.contention_cycles_per_byte - 0.030527).abs() < 1e-6);
    }

    #[test]
    fn latency_is_clamped() {
        let m = LatencyModel::default();
        assert_eq!(m.latency(&ContendingBytes::zero(), -1e9), 1);
    }

    #[test]
    fn fractions_are_exact() {
        let mut a = ContendingBytes::fraction(10, 1, 3);
        a += ContendingBytes::fraction(10, 2, 3);
        assert_eq!(a, ContendingBytes::whole(10));
    }

    #[test]
    fn rejects_bad_parameters() {
        let m = LatencyModel {
            noise_sigma_cycles: -1.0,
            ..LatencyModel::default()
        };
        assert!(m.validate().is_err());
        let m = LatencyModel {
            idle_base_cycles: 0.0,
            ..LatencyModel::default()
        };
        assert!(m.validate().is_err());
    }
}
