use super::{build_frame, compute_metrics, BitStream, ChannelMetrics, DecodedFrame, FrameFormat, FrameScanner, ScanStep};
use crate::error::{Error, Result};
use crate::probe::ProbeAgent;
use crate::sim::defaults::{COVERT_PAYLOAD_BYTES, PROBE_BYTES, REPLICATION_THRESHOLD_CYCLES};
use crate::sim::{Cycles, GpuId, LatencyModel, SimSpec, Simulator, TransferRequest, TransferTag};

/// Shared by sender and receiver: both know the slot grid and framing.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub slot_cycles: Cycles,
    pub payload_bytes: u64,
    pub probe_bytes: u64,
    pub threshold: f64,
    /// Probes per slot, majority-voted; odd.
    pub probes_per_slot: usize,
    pub format: FrameFormat,
    /// The sender pulls `payload_bytes` from `sender_remote` into `sender_local`.
    pub sender_local: GpuId,
    pub sender_remote: GpuId,
    /// The receiver pulls `probe_bytes` from `receiver_remote` into `receiver_local`.
    pub receiver_local: GpuId,
    pub receiver_remote: GpuId,
}

/// Mean contending bytes seen by a probe issued together with one payload copy.
fn busy_contention(model: &LatencyModel, bytes_per_cycle: f64, payload_bytes: u64) -> f64 {
    let duration = ((payload_bytes as f64 / bytes_per_cycle).ceil()).max(1.0);
    let overlap = duration.min(model.window_cycles() as f64);
    payload_bytes as f64 * overlap / duration
}

impl ChannelConfig {
    /// Replication defaults with the shortest slot that holds
    /// `probes_per_slot` worst-case busy probes.
    pub fn for_spec(spec: &SimSpec, probes_per_slot: usize) -> Self {
        let mut cfg = Self {
            slot_cycles: 0,
            payload_bytes: COVERT_PAYLOAD_BYTES,
            probe_bytes: PROBE_BYTES,
            threshold: REPLICATION_THRESHOLD_CYCLES,
            probes_per_slot,
            format: FrameFormat::default(),
            sender_local: 0,
            sender_remote: 1,
            receiver_local: 1,
            receiver_remote: 0,
        };
        cfg.slot_cycles = cfg.min_slot_cycles(spec);
        cfg
    }

    pub fn worst_busy_latency(&self, spec: &SimSpec) -> Cycles {
        let model = &spec.latency_model;
        model.max_plausible_latency(busy_contention(model, spec.bytes_per_cycle, self.payload_bytes))
    }

    pub fn min_slot_cycles(&self, spec: &SimSpec) -> Cycles {
        self.worst_busy_latency(spec) * self.probes_per_slot.max(1) as Cycles
    }

    /// Noise-free idle and busy latency means.
    pub fn expected_means(&self, spec: &SimSpec) -> (f64, f64) {
        let model = &spec.latency_model;
        let busy = busy_contention(model, spec.bytes_per_cycle, self.payload_bytes);
        (model.mean_latency(0.0), model.mean_latency(busy))
    }

    pub fn sub_slot_cycles(&self) -> Cycles {
        self.slot_cycles / self.probes_per_slot as Cycles
    }

    pub fn receiver(&self) -> ProbeAgent {
        ProbeAgent::new(self.receiver_remote, self.receiver_local).with_probe_bytes(self.probe_bytes)
    }

    pub fn validate(&self, spec: &SimSpec) -> Result<()> {
        self.format.validate()?;
        if self.probes_per_slot == 0 || self.probes_per_slot.is_multiple_of(2) {
            return Err(Error::config(
                "probes_per_slot",
                format!("must be odd, got {}", self.probes_per_slot),
            ));
        }
        if self.payload_bytes == 0 {
            return Err(Error::config("payload_bytes", "must be at least 1"));
        }
        if self.probe_bytes == 0 {
            return Err(Error::config("probe_bytes", "must be at least 1"));
        }
        let min_slot = self.min_slot_cycles(spec);
        if self.slot_cycles < min_slot {
            return Err(Error::config(
                "slot_cycles",
                format!(
                    "{} cycles cannot hold {} worst-case busy probe(s) ({} cycles each)",
                    self.slot_cycles,
                    self.probes_per_slot,
                    self.worst_busy_latency(spec)
                ),
            ));
        }
        let (idle, busy) = self.expected_means(spec);
        if !(self.threshold > idle && self.threshold < busy) {
            return Err(Error::config(
                "threshold",
                format!("{} must lie strictly between idle mean {idle} and busy mean {busy}", self.threshold),
            ));
        }
        Ok(())
    }
}

/// `1` iff the latency is strictly above the threshold.
pub fn classify_sample(latency: Cycles, threshold: f64) -> bool {
    latency as f64 > threshold
}

/// Schedules the sender's copies for `frame`, starting at slot `start_slot`.
/// A `1` puts one payload copy at the start of every probe sub-slot; a `0`
/// leaves the slot idle. Returns the number of copies scheduled.
pub fn sender_run(sim: &mut Simulator, cfg: &ChannelConfig, frame: &BitStream, start_slot: u64) -> Result<usize> {
    let link = sim.topology().link_between(cfg.sender_remote, cfg.sender_local)?;
    let duration = sim.nominal_duration(link, cfg.payload_bytes);
    let sub_slot = cfg.sub_slot_cycles();
    if duration > sub_slot {
        return Err(Error::config(
            "payload_bytes",
            format!("copy takes {duration} cycles, longer than the {sub_slot}-cycle probe sub-slot"),
        ));
    }
    let mut scheduled = 0;
    for (k, bit) in frame.iter().enumerate() {
        if !bit {
            continue;
        }
        let slot_start = (start_slot + k as u64) * cfg.slot_cycles;
        for j in 0..cfg.probes_per_slot as u64 {
            sim.schedule_transfer(TransferRequest::new(
                cfg.sender_remote,
                cfg.sender_local,
                cfg.payload_bytes,
                slot_start + j * sub_slot,
                TransferTag::CovertSender,
            ))?;
            scheduled += 1;
        }
    }
    Ok(scheduled)
}

/// Receiver view of one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotObservation {
    pub slot: u64,
    pub latencies: Vec<Cycles>,
    pub bit: bool,
}

impl SlotObservation {
    /// The median latency; with an odd probe count its classification equals
    /// the majority vote.
    pub fn median_latency(&self) -> Cycles {
        let mut l = self.latencies.clone();
        l.sort_unstable();
        l[l.len() / 2]
    }
}

fn observe_slot(sim: &mut Simulator, cfg: &ChannelConfig, agent: &ProbeAgent, slot: u64) -> Result<SlotObservation> {
    let slot_start = slot * cfg.slot_cycles;
    let sub_slot = cfg.sub_slot_cycles();
    let mut latencies = Vec::with_capacity(cfg.probes_per_slot);
    let mut votes = 0;
    for j in 0..cfg.probes_per_slot as u64 {
        let sample = agent.issue_probe_at(sim, slot_start + j * sub_slot)?;
        votes += usize::from(classify_sample(sample.latency, cfg.threshold));
        latencies.push(sample.latency);
    }
    Ok(SlotObservation {
        slot,
        latencies,
        bit: 2 * votes > cfg.probes_per_slot,
    })
}

/// Result of a receiver session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceivedFrame {
    /// Absolute slot index of the first preamble bit.
    pub start_slot: u64,
    pub payload: BitStream,
    pub observations: Vec<SlotObservation>,
}

/// Probes slot by slot from the current simulated time until a complete
/// frame has been read, for at most `max_slots` slots.
pub fn receiver_run(sim: &mut Simulator, cfg: &ChannelConfig, max_slots: usize) -> Result<ReceivedFrame> {
    let agent = cfg.receiver();
    let first_slot = sim.now().div_ceil(cfg.slot_cycles);
    let mut scanner = FrameScanner::new(cfg.format);
    let mut observations = Vec::new();
    for i in 0..max_slots {
        let obs = observe_slot(sim, cfg, &agent, first_slot + i as u64)?;
        let step = scanner.push(obs.bit);
        observations.push(obs);
        if step == ScanStep::Complete {
            return Ok(ReceivedFrame {
                start_slot: first_slot + scanner.start().expect("synchronized") as u64,
                payload: scanner.into_payload(),
                observations,
            });
        }
        if let Some(needed) = scanner.remaining() {
            let available = max_slots - i - 1;
            if needed > available {
                return Err(Error::Truncated { needed, available });
            }
        }
    }
    Err(scanner.incomplete_error(max_slots))
}

/// Per-symbol error counts over payload bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SymbolErrors {
    pub zeros: usize,
    pub zero_errors: usize,
    pub ones: usize,
    pub one_errors: usize,
}

impl SymbolErrors {
    fn tally(sent: &BitStream, received: &BitStream) -> Self {
        let mut s = Self::default();
        for (tx, rx) in sent.iter().zip(received.iter()) {
            if tx {
                s.ones += 1;
                s.one_errors += usize::from(!rx);
            } else {
                s.zeros += 1;
                s.zero_errors += usize::from(rx);
            }
        }
        s
    }
}

/// One end-to-end transmission.
#[derive(Debug)]
pub struct Transmission {
    pub frame_start_slot: u64,
    pub frame: BitStream,
    pub payload: BitStream,
    /// Every slot from 0 through the end of the frame.
    pub observations: Vec<SlotObservation>,
    /// Decisions in the payload slots, aligned with the sender's schedule.
    pub received: BitStream,
    /// The receiver's own frame decoding over the observed slots.
    pub decoded: Result<DecodedFrame>,
    pub metrics: ChannelMetrics,
    pub symbols: SymbolErrors,
}

impl Transmission {
    /// Whether the receiver locked onto the frame at the slot the sender used
    /// and recovered a payload of the right length.
    pub fn synchronized(&self) -> bool {
        matches!(&self.decoded, Ok(d) if d.start as u64 == self.frame_start_slot && d.payload.len() == self.payload.len())
    }
}

/// Builds a fresh simulator from `spec`, sends `payload` framed after
/// `lead_in_slots` idle slots and lets the receiver observe every slot.
///
/// Bit errors are counted against the sender's slot schedule, so a corrupted
/// preamble or header does not hide the per-bit error rate; whether the
/// receiver's own framing succeeded is reported separately in `decoded`.
pub fn transmit(spec: &SimSpec, cfg: &ChannelConfig, payload: &BitStream, lead_in_slots: u64) -> Result<Transmission> {
    cfg.validate(spec)?;
    let mut sim = Simulator::new(spec)?;
    let frame = build_frame(payload, &cfg.format)?;
    sender_run(&mut sim, cfg, &frame, lead_in_slots)?;

    let agent = cfg.receiver();
    let total_slots = lead_in_slots + frame.len() as u64;
    let observations = (0..total_slots)
        .map(|slot| observe_slot(&mut sim, cfg, &agent, slot))
        .collect::<Result<Vec<_>>>()?;

    let decisions: Vec<bool> = observations.iter().map(|o| o.bit).collect();
    let decoded = super::decode_frame(&decisions, &cfg.format);
    let payload_start = (lead_in_slots as usize) + cfg.format.preamble_len + cfg.format.header_bits();
    let received: BitStream = decisions[payload_start..].iter().copied().collect();

    let elapsed = frame.len() as Cycles * cfg.slot_cycles;
    let metrics = compute_metrics(payload, &received, elapsed, spec.clock_hz);
    let symbols = SymbolErrors::tally(payload, &received);
    Ok(Transmission {
        frame_start_slot: lead_in_slots,
        frame,
        payload: payload.clone(),
        observations,
        received,
        decoded,
        metrics,
        symbols,
    })
}
