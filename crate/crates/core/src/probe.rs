//! The spy agent: periodic probe copies, latency traces and threshold calibration.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sim::defaults::{COVERT_PAYLOAD_BYTES, PROBE_BYTES};
use crate::sim::{ContentionScope, Cycles, GpuId, Simulator, TransferRequest, TransferTag};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeSample {
    /// Probe issue time.
    pub timestamp: Cycles,
    pub latency: Cycles,
}

/// Probe latencies sampled on a fixed grid of `period` cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<ProbeSample>,
    pub probe_bytes: u64,
    pub period: Cycles,
    pub seed: u64,
    pub label: Option<String>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latencies(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.latency as f64).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    /// Writes `timestamp_cycles,latency_cycles[,label]` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match &self.label {
            Some(label) => {
                w.write_record(["timestamp_cycles", "latency_cycles", "label"])?;
                for s in &self.samples {
                    w.write_record([s.timestamp.to_string(), s.latency.to_string(), label.clone()])?;
                }
            }
            None => {
                w.write_record(["timestamp_cycles", "latency_cycles"])?;
                for s in &self.samples {
                    w.write_record([s.timestamp.to_string(), s.latency.to_string()])?;
                }
            }
        }
        w.flush().map_err(|e| Error::io("<trace>", e))?;
        Ok(())
    }
}

/// Idle and busy latency statistics plus the decision threshold between them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub mu_idle: f64,
    pub mu_busy: f64,
    pub sigma_idle: f64,
    pub sigma_busy: f64,
    pub threshold: f64,
}

impl Calibration {
    /// `key = value` lines, one per field.
    pub fn to_report(&self) -> String {
        format!(
            "mu_idle = {}\nmu_busy = {}\nsigma_idle = {}\nsigma_busy = {}\nthreshold = {}\n",
            self.mu_idle, self.mu_busy, self.sigma_idle, self.sigma_busy, self.threshold
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationPlan {
    pub n_idle: usize,
    pub n_busy: usize,
    /// Size of the contending copy overlapping each busy probe.
    pub payload_bytes: u64,
    /// Replaces the midpoint rule when set.
    pub threshold_override: Option<f64>,
}

impl Default for CalibrationPlan {
    fn default() -> Self {
        Self {
            n_idle: 200,
            n_busy: 200,
            payload_bytes: COVERT_PAYLOAD_BYTES,
            threshold_override: None,
        }
    }
}

/// Issues `probe_bytes` copies from `src` to `dst` and times them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeAgent {
    pub src: GpuId,
    pub dst: GpuId,
    pub probe_bytes: u64,
}

impl ProbeAgent {
    pub fn new(src: GpuId, dst: GpuId) -> Self {
        Self {
            src,
            dst,
            probe_bytes: PROBE_BYTES,
        }
    }

    pub fn with_probe_bytes(mut self, bytes: u64) -> Self {
        self.probe_bytes = bytes;
        self
    }

    /// Probe issued at the current simulated time.
    pub fn issue_probe(&self, sim: &mut Simulator) -> Result<ProbeSample> {
        let now = sim.now();
        self.issue_probe_at(sim, now)
    }

    /// Probe issued at cycle `at`; the simulation is advanced to its completion.
    pub fn issue_probe_at(&self, sim: &mut Simulator, at: Cycles) -> Result<ProbeSample> {
        let req = TransferRequest::new(self.src, self.dst, self.probe_bytes, at, TransferTag::Probe);
        let (_, latency) = sim.probe_latency(req)?;
        sim.run_until(at + latency)?;
        Ok(ProbeSample { timestamp: at, latency })
    }

    /// Largest latency this probe can plausibly report: every sublink in the
    /// contention scope saturated over the whole window, plus the noise margin.
    pub fn max_plausible_latency(&self, sim: &Simulator) -> Result<Cycles> {
        let link = sim.topology().link_between(self.src, self.dst)?;
        let rate = sim.topology().link(link).bytes_per_cycle;
        let sublinks = match sim.scope() {
            ContentionScope::Link => 2.0,
            ContentionScope::Sublink => 1.0,
        };
        let model = sim.model();
        let saturated = sublinks * rate * model.window_cycles() as f64;
        Ok(model.max_plausible_latency(saturated))
    }

    /// Samples `floor(duration / period)` probes on the grid `now, now + period, ...`.
    pub fn record_trace(&self, sim: &mut Simulator, duration: Cycles, period: Cycles) -> Result<Trace> {
        let min_period = self.max_plausible_latency(sim)?;
        if period < min_period {
            return Err(Error::config(
                "period",
                format!("{period} cycles is shorter than the plausible probe latency {min_period}"),
            ));
        }
        if duration < period {
            return Err(Error::config(
                "duration",
                format!("{duration} cycles is shorter than one period ({period})"),
            ));
        }
        let start = sim.now();
        let count = duration / period;
        let samples = (0..count)
            .map(|i| self.issue_probe_at(sim, start + i * period))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trace {
            samples,
            probe_bytes: self.probe_bytes,
            period,
            seed: sim.model().rng_seed,
            label: None,
        })
    }

    /// Measures idle probes, then probes each overlapped by one payload copy
    /// travelling the opposite direction, and places the threshold.
    pub fn calibrate(&self, sim: &mut Simulator, plan: CalibrationPlan) -> Result<Calibration> {
        for (field, n) in [("n_idle", plan.n_idle), ("n_busy", plan.n_busy)] {
            if n < 2 {
                return Err(Error::TooFewSamples {
                    what: if field == "n_idle" { "idle calibration" } else { "busy calibration" },
                    min: 2,
                    got: n,
                });
            }
        }
        let link = sim.topology().link_between(self.src, self.dst)?;
        let busy_bytes = plan.payload_bytes as f64;
        let spacing = sim
            .model()
            .max_plausible_latency(busy_bytes)
            .max(sim.nominal_duration(link, plan.payload_bytes))
            + 1;

        let mut t = sim.now();
        let mut idle = Vec::with_capacity(plan.n_idle);
        for _ in 0..plan.n_idle {
            idle.push(self.issue_probe_at(sim, t)?.latency as f64);
            t += spacing;
        }
        let mut busy = Vec::with_capacity(plan.n_busy);
        for _ in 0..plan.n_busy {
            sim.schedule_transfer(TransferRequest::new(
                self.dst,
                self.src,
                plan.payload_bytes,
                t,
                TransferTag::CovertSender,
            ))?;
            busy.push(self.issue_probe_at(sim, t)?.latency as f64);
            t += spacing;
        }
        sim.run_until(t)?;

        let mu_idle = stats::mean(&idle);
        let mu_busy = stats::mean(&busy);
        if mu_busy <= mu_idle {
            return Err(Error::Calibration(format!(
                "busy mean {mu_busy} does not exceed idle mean {mu_idle}"
            )));
        }
        let threshold = plan.threshold_override.unwrap_or((mu_idle + mu_busy) / 2.0);
        Ok(Calibration {
            mu_idle,
            mu_busy,
            sigma_idle: stats::sample_std(&idle).unwrap_or(0.0),
            sigma_busy: stats::sample_std(&busy).unwrap_or(0.0),
            threshold,
        })
    }
}
