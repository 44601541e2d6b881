//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional; missing
//! keys fall back to the replication defaults. Workload profiles can be
//! added or adjusted with `profile.<name>.<field>` keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::covert::{ChannelConfig, FrameFormat, Framing};
use crate::error::{Error, Result};
use crate::fingerprint::{default_profiles, FingerprintPlan, WorkloadProfile};
use crate::sim::defaults::{COVERT_PAYLOAD_BYTES, LENGTH_FIELD_BITS, PREAMBLE_LEN, PROBE_BYTES};
use crate::sim::{ContentionScope, Cycles, GpuId, SimSpec};

/// Parses `key = value` lines into a map; duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(format!("line {}", n + 1), format!("expected `key = value`, got {line:?}")));
        };
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::config(format!("line {}", n + 1), "empty key"));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::config(key, format!("duplicate key on line {}", n + 1)));
        }
    }
    Ok(map)
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got {value:?}"))),
    }
}

fn parse_links(key: &str, value: &str) -> Result<Vec<(GpuId, GpuId)>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let (a, b) = pair
                .split_once('-')
                .ok_or_else(|| Error::config(key, format!("expected `a-b`, got {pair:?}")))?;
            Ok((parse(key, a.trim())?, parse(key, b.trim())?))
        })
        .collect()
}

pub fn parse_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// All experiment parameters, after defaults and file values are merged.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sim: SimSpec,
    pub seed: Option<u64>,
    pub probe_bytes: u64,
    pub calibration_samples: usize,
    /// Explicit decision threshold; the covert channel and features fall back
    /// to the replication constant, calibration to the midpoint rule.
    pub threshold: Option<f64>,
    pub slot_cycles: Option<Cycles>,
    pub payload_bytes: u64,
    pub preamble_len: usize,
    pub probes_per_slot: usize,
    pub length_field_bits: usize,
    pub length_header: bool,
    pub lead_in_slots: u64,
    pub runs: usize,
    pub message: Option<String>,
    pub bits: Option<usize>,
    pub profiles: Vec<String>,
    pub profile_set: Vec<WorkloadProfile>,
    pub probe_period: Cycles,
    pub window_samples: usize,
    pub windows_per_trace: usize,
    pub traces_per_class: usize,
    pub k: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sim = SimSpec::default();
        let profile_set = default_profiles(sim.bytes_per_cycle);
        let plan = FingerprintPlan::new(Vec::new(), 0);
        Self {
            profiles: profile_set.iter().map(|p| p.name.clone()).collect(),
            profile_set,
            sim,
            seed: None,
            probe_bytes: PROBE_BYTES,
            calibration_samples: 200,
            threshold: None,
            slot_cycles: None,
            payload_bytes: COVERT_PAYLOAD_BYTES,
            preamble_len: PREAMBLE_LEN,
            probes_per_slot: 1,
            length_field_bits: LENGTH_FIELD_BITS,
            length_header: true,
            lead_in_slots: 4,
            runs: 5,
            message: None,
            bits: None,
            probe_period: plan.probe_period,
            window_samples: plan.window_samples,
            windows_per_trace: plan.windows_per_trace,
            traces_per_class: plan.traces_per_class,
            k: plan.k,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let map = parse_key_values(text)?;
        let mut cfg = Self::default();
        let mut profile_keys: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
        let mut rate_changed = false;

        for (key, value) in &map {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "gpu_count" => cfg.sim.gpu_count = parse(k, v)?,
                "links" => cfg.sim.link_pairs = parse_links(k, v)?,
                "bytes_per_cycle" => {
                    cfg.sim.bytes_per_cycle = parse(k, v)?;
                    rate_changed = true;
                }
                "clock_hz" => cfg.sim.clock_hz = parse(k, v)?,
                "idle_base_cycles" => cfg.sim.latency_model.idle_base_cycles = parse(k, v)?,
                "contention_cycles_per_byte" => cfg.sim.latency_model.contention_cycles_per_byte = parse(k, v)?,
                "noise_sigma_cycles" => cfg.sim.latency_model.noise_sigma_cycles = parse(k, v)?,
                "contention_scope" => {
                    cfg.sim.contention_scope = match v {
                        "link" => ContentionScope::Link,
                        "sublink" => ContentionScope::Sublink,
                        _ => return Err(Error::config(k, format!("expected `link` or `sublink`, got {v:?}"))),
                    }
                }
                "seed" => cfg.seed = Some(parse(k, v)?),
                "probe_bytes" => cfg.probe_bytes = parse(k, v)?,
                "calibration_samples" => cfg.calibration_samples = parse(k, v)?,
                "threshold" => cfg.threshold = Some(parse(k, v)?),
                "slot_cycles" => cfg.slot_cycles = Some(parse(k, v)?),
                "payload_bytes" => cfg.payload_bytes = parse(k, v)?,
                "preamble_len" => cfg.preamble_len = parse(k, v)?,
                "probes_per_slot" => cfg.probes_per_slot = parse(k, v)?,
                "length_field_bits" => cfg.length_field_bits = parse(k, v)?,
                "length_header" => cfg.length_header = parse_bool(k, v)?,
                "lead_in_slots" => cfg.lead_in_slots = parse(k, v)?,
                "runs" => cfg.runs = parse(k, v)?,
                "message" => cfg.message = Some(v.to_string()),
                "bits" => cfg.bits = Some(parse(k, v)?),
                "profiles" => cfg.profiles = parse_list(v),
                "probe_period_cycles" => cfg.probe_period = parse(k, v)?,
                "window_samples" => cfg.window_samples = parse(k, v)?,
                "windows_per_trace" => cfg.windows_per_trace = parse(k, v)?,
                "traces_per_class" => cfg.traces_per_class = parse(k, v)?,
                "k" => cfg.k = parse(k, v)?,
                _ => {
                    let Some((name, field)) = k.strip_prefix("profile.").and_then(|rest| rest.rsplit_once('.')) else {
                        return Err(Error::config(k, "unknown key"));
                    };
                    profile_keys
                        .entry(name.to_string())
                        .or_default()
                        .push((field.to_string(), v.to_string()));
                }
            }
        }

        if rate_changed {
            cfg.profile_set = default_profiles(cfg.sim.bytes_per_cycle);
        }
        for (name, fields) in profile_keys {
            cfg.apply_profile(&name, &fields)?;
        }
        Ok(cfg)
    }

    fn apply_profile(&mut self, name: &str, fields: &[(String, String)]) -> Result<()> {
        let rate = self.sim.bytes_per_cycle;
        let idx = match self.profile_set.iter().position(|p| p.name == name) {
            Some(i) => i,
            None => {
                self.profile_set.push(WorkloadProfile::with_duty(name, 1_000_000, 0.5, rate));
                self.profile_set.len() - 1
            }
        };
        let p = &mut self.profile_set[idx];
        let mut explicit_bytes = None;
        for (field, value) in fields {
            let key = format!("profile.{name}.{field}");
            match field.as_str() {
                "burst_period" => p.burst_period = parse(&key, value)?,
                "duty" => p.duty = parse(&key, value)?,
                "burst_bytes" => explicit_bytes = Some(parse(&key, value)?),
                "jitter_sigma" => p.jitter_sigma = parse(&key, value)?,
                "size_sigma" => p.size_sigma = parse(&key, value)?,
                "src" => p.src = parse(&key, value)?,
                "dst" => p.dst = parse(&key, value)?,
                _ => return Err(Error::config(key, "unknown profile field")),
            }
        }
        p.burst_bytes = explicit_bytes.unwrap_or(((p.duty * p.burst_period as f64 * rate).round() as u64).max(1));
        p.validate()
    }

    pub fn frame_format(&self, payload_bits: usize) -> FrameFormat {
        FrameFormat {
            preamble_len: self.preamble_len,
            framing: if self.length_header {
                Framing::LengthHeader {
                    field_bits: self.length_field_bits,
                }
            } else {
                Framing::Fixed { payload_bits }
            },
        }
    }

    pub fn channel_config(&self, payload_bits: usize) -> ChannelConfig {
        let mut ch = ChannelConfig::for_spec(&self.sim, self.probes_per_slot);
        ch.payload_bytes = self.payload_bytes;
        ch.probe_bytes = self.probe_bytes;
        ch.format = self.frame_format(payload_bits);
        if let Some(t) = self.threshold {
            ch.threshold = t;
        }
        ch.slot_cycles = self.slot_cycles.unwrap_or_else(|| ch.min_slot_cycles(&self.sim));
        ch
    }

    /// Looks up the selected profile names.
    pub fn selected_profiles(&self) -> Result<Vec<WorkloadProfile>> {
        self.profiles
            .iter()
            .map(|name| {
                self.profile_set
                    .iter()
                    .find(|p| &p.name == name)
                    .cloned()
                    .ok_or_else(|| Error::config("profiles", format!("unknown profile {name:?}")))
            })
            .collect()
    }

    pub fn fingerprint_plan(&self, seed: u64) -> Result<FingerprintPlan> {
        let mut plan = FingerprintPlan::new(self.selected_profiles()?, seed);
        plan.traces_per_class = self.traces_per_class;
        plan.windows_per_trace = self.windows_per_trace;
        plan.window_samples = self.window_samples;
        plan.probe_period = self.probe_period;
        plan.probe_bytes = self.probe_bytes;
        plan.k = self.k;
        if let Some(t) = self.threshold {
            plan.threshold = t;
        }
        Ok(plan)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::from_text("").unwrap(), ExperimentConfig::default());
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.profiles, ["rf", "pme", "amber20-dhfr", "amber20-cellulose"]);
        assert_eq!(cfg.channel_config(0).slot_cycles, 68_368 + 6 * 8_800);
    }

    #[test]
    fn parses_values_and_comments() {
        let text = "# model\nnoise_sigma_cycles = 0   # quiet\nlinks = 0-1, 1-2\ngpu_count=3\n\nthreshold = 55000\nlength_header = off\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.sim.latency_model.noise_sigma_cycles, 0.0);
        assert_eq!(cfg.sim.link_pairs, vec![(0, 1), (1, 2)]);
        assert_eq!(cfg.sim.gpu_count, 3);
        assert_eq!(cfg.threshold, Some(55_000.0));
        assert_eq!(cfg.frame_format(8).framing, Framing::Fixed { payload_bits: 8 });
        assert_eq!(cfg.channel_config(8).slot_cycles, 68_368);
    }

    #[test]
    fn errors_name_the_key() {
        for (text, key) in [
            ("runs = five", "runs"),
            ("bogus = 1", "bogus"),
            ("links = 0:1", "links"),
            ("contention_scope = ring", "contention_scope"),
            ("profile.rf.duty = 2", "profile.rf.duty"),
            ("profile.rf.colour = 2", "profile.rf.colour"),
        ] {
            match ExperimentConfig::from_text(text) {
                Err(Error::Config { field, .. }) => assert_eq!(field, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(parse_key_values("runs = 1\nruns = 2").is_err());
        assert!(parse_key_values("no equals sign").is_err());
    }

    #[test]
    fn custom_profiles() {
        let text = "profile.burst.burst_period = 600000\nprofile.burst.duty = 0.25\nprofile.rf.jitter_sigma = 0\nprofiles = rf, burst\n";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        let ps = cfg.selected_profiles().unwrap();
        assert_eq!(ps[0].name, "rf");
        assert_eq!(ps[0].jitter_sigma, 0.0);
        assert_eq!(ps[1].burst_bytes, 9_600_000);
        let cfg = ExperimentConfig::from_text("profiles = rf, nope").unwrap();
        assert!(cfg.selected_profiles().is_err());
    }
}
