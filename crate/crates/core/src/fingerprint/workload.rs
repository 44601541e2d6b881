use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::sim::{Cycles, GpuId, TransferRequest, TransferTag};

/// Periodic burst generator standing in for an application's interconnect
/// traffic. The four built-in profiles carry benchmark names but their
/// parameters are synthetic.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadProfile {
    pub name: String,
    pub burst_bytes: u64,
    pub burst_period: Cycles,
    /// Fraction of the period a burst keeps its sublink busy.
    pub duty: f64,
    /// Standard deviation of burst start jitter, in cycles.
    pub jitter_sigma: f64,
    /// Relative standard deviation of burst size.
    pub size_sigma: f64,
    /// Bursts copy from `src` into `dst`.
    pub src: GpuId,
    pub dst: GpuId,
}

impl WorkloadProfile {
    /// Sizes bursts so each one occupies `duty * burst_period` cycles at `bytes_per_cycle`.
    pub fn with_duty(name: &str, burst_period: Cycles, duty: f64, bytes_per_cycle: f64) -> Self {
        Self {
            name: name.to_string(),
            burst_bytes: ((duty * burst_period as f64 * bytes_per_cycle).round() as u64).max(1),
            burst_period,
            duty,
            jitter_sigma: 0.0,
            size_sigma: 0.0,
            src: 1,
            dst: 0,
        }
    }

    pub fn jitter(mut self, jitter_sigma: f64, size_sigma: f64) -> Self {
        self.jitter_sigma = jitter_sigma;
        self.size_sigma = size_sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("profile.{}.{f}", self.name);
        if self.name.is_empty() {
            return Err(Error::config("profile", "name must not be empty"));
        }
        if self.burst_bytes == 0 {
            return Err(Error::config(field("burst_bytes"), "must be at least 1"));
        }
        if self.burst_period == 0 {
            return Err(Error::config(field("burst_period"), "must be at least 1"));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            return Err(Error::config(field("duty"), format!("must be in (0, 1], got {}", self.duty)));
        }
        for (name, v) in [("jitter_sigma", self.jitter_sigma), ("size_sigma", self.size_sigma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(field(name), format!("must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Built-in synthetic stand-ins, sized for `bytes_per_cycle`.
pub fn default_profiles(bytes_per_cycle: f64) -> Vec<WorkloadProfile> {
    vec![
        WorkloadProfile::with_duty("rf", 400_000, 0.3, bytes_per_cycle).jitter(4_000.0, 0.05),
        WorkloadProfile::with_duty("pme", 1_000_000, 0.5, bytes_per_cycle).jitter(10_000.0, 0.05),
        WorkloadProfile::with_duty("amber20-dhfr", 1_400_000, 0.15, bytes_per_cycle).jitter(14_000.0, 0.05),
        WorkloadProfile::with_duty("amber20-cellulose", 600_000, 0.8, bytes_per_cycle).jitter(6_000.0, 0.05),
    ]
}

/// One burst per period for `floor(duration / burst_period)` periods.
pub fn generate_workload(profile: &WorkloadProfile, seed: u64, duration: Cycles) -> Result<Vec<TransferRequest>> {
    profile.validate()?;
    if duration < profile.burst_period {
        return Err(Error::config(
            "duration",
            format!("{duration} cycles is shorter than the burst period {}", profile.burst_period),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let count = duration / profile.burst_period;
    Ok((0..count)
        .map(|k| {
            let dz: f64 = rng.sample(StandardNormal);
            let sz: f64 = rng.sample(StandardNormal);
            let nominal = (k * profile.burst_period) as f64;
            let start = (nominal + profile.jitter_sigma * dz).round().max(0.0) as Cycles;
            let bytes = (profile.burst_bytes as f64 * (1.0 + profile.size_sigma * sz)).round().max(1.0) as u64;
            TransferRequest::new(profile.src, profile.dst, bytes, start, TransferTag::Workload)
        })
        .collect())
}
