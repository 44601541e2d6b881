//! Discrete-event model of GPUs joined by bidirectional links.

pub mod defaults;
mod model;
mod simulator;
mod topology;

pub use model::{ContendingBytes, LatencyModel};
pub use simulator::{CompletionEvent, Simulator};
pub use topology::{build_topology, ContentionScope, Link, LinkId, SimSpec, Sublink, Topology};

/// Simulated time and durations, in device clock cycles.
pub type Cycles = u64;
pub type GpuId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferTag {
    Probe,
    CovertSender,
    Workload,
}

/// A peer-to-peer copy of `bytes` from `src_gpu` to `dst_gpu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransferRequest {
    pub src_gpu: GpuId,
    pub dst_gpu: GpuId,
    pub bytes: u64,
    pub issue_time: Cycles,
    pub tag: TransferTag,
}

impl TransferRequest {
    pub fn new(src_gpu: GpuId, dst_gpu: GpuId, bytes: u64, issue_time: Cycles, tag: TransferTag) -> Self {
        Self {
            src_gpu,
            dst_gpu,
            bytes,
            issue_time,
            tag,
        }
    }
}

/// A scheduled transfer with its resolved service interval `[start_cycle, end_cycle)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveTransfer {
    pub request: TransferRequest,
    pub start_cycle: Cycles,
    pub end_cycle: Cycles,
}

impl ActiveTransfer {
    pub fn duration(&self) -> Cycles {
        self.end_cycle - self.start_cycle
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransferHandle(pub(crate) usize);

impl TransferHandle {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Half-open interval of cycles `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: Cycles,
    pub end: Cycles,
}

impl Window {
    pub fn new(start: Cycles, end: Cycles) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> Cycles {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    /// Number of cycles shared with `[start, end)`.
    pub fn overlap(&self, start: Cycles, end: Cycles) -> Cycles {
        let lo = self.start.max(start);
        let hi = self.end.min(end);
        hi.saturating_sub(lo)
    }
}
