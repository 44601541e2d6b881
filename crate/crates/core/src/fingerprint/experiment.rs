use std::collections::HashSet;

use rayon::prelude::*;

use super::{generate_workload, windowed_features, LabeledFeatures, WorkloadProfile};
use crate::error::{Error, Result};
use crate::probe::{ProbeAgent, Trace};
use crate::sim::defaults::{PROBE_BYTES, REPLICATION_THRESHOLD_CYCLES};
use crate::sim::{Cycles, SimSpec, Simulator};

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintPlan {
    pub profiles: Vec<WorkloadProfile>,
    pub traces_per_class: usize,
    pub windows_per_trace: usize,
    pub window_samples: usize,
    pub probe_period: Cycles,
    pub probe_bytes: u64,
    /// Latency threshold for the `high_fraction` feature.
    pub threshold: f64,
    pub k: usize,
    pub seed: u64,
}

impl FingerprintPlan {
    pub fn new(profiles: Vec<WorkloadProfile>, seed: u64) -> Self {
        Self {
            profiles,
            traces_per_class: 8,
            windows_per_trace: 6,
            window_samples: 256,
            probe_period: 200_000,
            probe_bytes: PROBE_BYTES,
            threshold: REPLICATION_THRESHOLD_CYCLES,
            k: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.profiles.len() < 2 {
            return Err(Error::Classifier(format!(
                "fingerprinting needs at least 2 workload classes, got {}",
                self.profiles.len()
            )));
        }
        let mut names = HashSet::new();
        for p in &self.profiles {
            p.validate()?;
            if !names.insert(p.name.as_str()) {
                return Err(Error::config("profiles", format!("duplicate profile {:?}", p.name)));
            }
        }
        for (field, v) in [("traces_per_class", self.traces_per_class), ("windows_per_trace", self.windows_per_trace)] {
            if v == 0 {
                return Err(Error::config(field, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Seed of trace `index` of class `class`; even seeds train, odd seeds test.
    pub fn trace_seed(&self, class: usize, index: usize) -> u64 {
        self.seed.wrapping_add((class * self.traces_per_class + index) as u64)
    }
}

/// Runs `profile` as the victim on a fresh simulator and records the spy's trace.
pub fn record_workload_trace(
    spec: &SimSpec,
    profile: &WorkloadProfile,
    seed: u64,
    probe_period: Cycles,
    probe_bytes: u64,
    samples: usize,
) -> Result<Trace> {
    let mut sim = Simulator::new(&spec.clone().with_seed(seed))?;
    let duration = probe_period * samples as Cycles;
    for req in generate_workload(profile, seed, duration.max(profile.burst_period))? {
        sim.schedule_transfer(req)?;
    }
    // The spy pulls from the same remote GPU the victim reads from.
    let spy = ProbeAgent::new(profile.src, profile.dst).with_probe_bytes(probe_bytes);
    Ok(spy.record_trace(&mut sim, duration, probe_period)?.with_label(&profile.name))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrace {
    pub trace: Trace,
    pub train: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintData {
    pub traces: Vec<LabeledTrace>,
    pub train: Vec<LabeledFeatures>,
    pub test: Vec<LabeledFeatures>,
}

/// Records `traces_per_class` traces per profile (in parallel, one simulator
/// each) and splits their windows into train and test sets by seed parity.
pub fn build_dataset(spec: &SimSpec, plan: &FingerprintPlan) -> Result<FingerprintData> {
    plan.validate()?;
    let jobs: Vec<(usize, usize)> = (0..plan.profiles.len())
        .flat_map(|c| (0..plan.traces_per_class).map(move |i| (c, i)))
        .collect();
    let samples = plan.windows_per_trace * plan.window_samples;
    let traces = jobs
        .par_iter()
        .map(|&(c, i)| {
            let seed = plan.trace_seed(c, i);
            record_workload_trace(spec, &plan.profiles[c], seed, plan.probe_period, plan.probe_bytes, samples)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut data = FingerprintData {
        traces: Vec::with_capacity(traces.len()),
        train: Vec::new(),
        test: Vec::new(),
    };
    for trace in traces {
        let train = trace.seed % 2 == 0;
        let label = trace.label.clone().expect("labeled above");
        let rows = windowed_features(&trace, plan.window_samples, plan.threshold)?
            .into_iter()
            .map(|f| LabeledFeatures::new(f, label.clone()));
        if train {
            data.train.extend(rows);
        } else {
            data.test.extend(rows);
        }
        data.traces.push(LabeledTrace { trace, train });
    }
    Ok(data)
}
