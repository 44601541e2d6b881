use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::topology::{build_topology, ContentionScope, LinkId, SimSpec, Topology};
use super::{ActiveTransfer, ContendingBytes, Cycles, LatencyModel, TransferHandle, TransferRequest, TransferTag, Window};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompletionEvent {
    pub handle: TransferHandle,
    pub end_cycle: Cycles,
    pub tag: TransferTag,
}

#[derive(Debug, Clone)]
struct Record {
    transfer: ActiveTransfer,
    nominal: Cycles,
    completed: bool,
}

/// FIFO service order of one directed sublink, sorted by `(issue_time, handle)`.
/// Service intervals never overlap, so end cycles increase along the queue.
#[derive(Debug, Clone, Default)]
struct SublinkQueue {
    order: Vec<usize>,
    /// Length of the prefix already reported as completed.
    done: usize,
}

/// Sequential discrete-event simulator over a fixed [`Topology`].
///
/// Transfers on the same directed sublink are served one at a time in issue
/// order. Probes do not occupy a sublink: their latency is computed from the
/// traffic overlapping their contention window and one draw from the
/// simulator's seeded noise stream.
#[derive(Debug, Clone)]
pub struct Simulator {
    topology: Topology,
    model: LatencyModel,
    scope: ContentionScope,
    now: Cycles,
    rng: ChaCha8Rng,
    records: Vec<Record>,
    queues: Vec<SublinkQueue>,
    probes: BinaryHeap<Reverse<(Cycles, usize)>>,
}

impl Simulator {
    pub fn new(spec: &SimSpec) -> Result<Self> {
        let topology = build_topology(spec)?;
        let queues = vec![SublinkQueue::default(); topology.sublink_count()];
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.latency_model.rng_seed),
            model: spec.latency_model.clone(),
            scope: spec.contention_scope,
            now: 0,
            records: Vec::new(),
            queues,
            probes: BinaryHeap::new(),
            topology,
        })
    }

    pub fn now(&self) -> Cycles {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn model(&self) -> &LatencyModel {
        &self.model
    }

    pub fn scope(&self) -> ContentionScope {
        self.scope
    }

    /// Number of transfers (including probes) ever scheduled.
    pub fn scheduled_count(&self) -> usize {
        self.records.len()
    }

    pub fn pending_count(&self) -> usize {
        self.records.iter().filter(|r| !r.completed).count()
    }

    pub fn transfer(&self, handle: TransferHandle) -> ActiveTransfer {
        self.records[handle.0].transfer
    }

    /// End cycle of the transfer once the simulation has passed it.
    pub fn completion(&self, handle: TransferHandle) -> Option<Cycles> {
        let r = &self.records[handle.0];
        r.completed.then_some(r.transfer.end_cycle)
    }

    /// Nominal service time of `bytes` on a link: `ceil(bytes / bytes_per_cycle)`.
    pub fn nominal_duration(&self, link: LinkId, bytes: u64) -> Cycles {
        let rate = self.topology.link(link).bytes_per_cycle;
        ((bytes as f64 / rate).ceil() as Cycles).max(1)
    }

    fn route(&self, req: &TransferRequest) -> Result<LinkId> {
        if req.bytes == 0 {
            return Err(Error::config("bytes", "transfer size must be at least 1 byte"));
        }
        if req.src_gpu == req.dst_gpu {
            return Err(Error::Routing {
                src: req.src_gpu,
                dst: req.dst_gpu,
            });
        }
        if req.issue_time < self.now {
            return Err(Error::TimeTravel {
                requested: req.issue_time,
                now: self.now,
            });
        }
        self.topology.link_between(req.src_gpu, req.dst_gpu)
    }

    fn queue_index(&self, link: LinkId, src: crate::GpuId) -> usize {
        link.0 * 2 + self.topology.link(link).direction(src)
    }

    /// Enqueue a copy on the `src → dst` sublink.
    pub fn schedule_transfer(&mut self, req: TransferRequest) -> Result<TransferHandle> {
        let link = self.route(&req)?;
        let q = self.queue_index(link, req.src_gpu);
        let id = self.records.len();
        self.records.push(Record {
            transfer: ActiveTransfer {
                request: req,
                start_cycle: req.issue_time,
                end_cycle: req.issue_time,
            },
            nominal: self.nominal_duration(link, req.bytes),
            completed: false,
        });

        let records = &self.records;
        let queue = &mut self.queues[q];
        let pos = queue
            .order
            .partition_point(|&other| records[other].transfer.request.issue_time <= req.issue_time);
        debug_assert!(pos >= queue.done);
        queue.order.insert(pos, id);
        self.retime(q, pos);
        Ok(TransferHandle(id))
    }

    /// Recompute service intervals of queue `q` from position `from` onward.
    fn retime(&mut self, q: usize, from: usize) {
        let queue = &self.queues[q];
        let mut free_at = match from {
            0 => 0,
            i => self.records[queue.order[i - 1]].transfer.end_cycle,
        };
        for &id in &queue.order[from..] {
            let r = &mut self.records[id];
            let start = r.transfer.request.issue_time.max(free_at);
            r.transfer.start_cycle = start;
            r.transfer.end_cycle = start + r.nominal;
            free_at = r.transfer.end_cycle;
        }
    }

    /// Overlap-weighted bytes of all transfers on either sublink of `link`
    /// that intersect `window`, excluding `exclude`.
    pub fn contending_bytes(&self, link: LinkId, window: Window, exclude: Option<TransferHandle>) -> ContendingBytes {
        self.contending_on(&[link.0 * 2, link.0 * 2 + 1], window, exclude)
    }

    fn contending_on(&self, queues: &[usize], window: Window, exclude: Option<TransferHandle>) -> ContendingBytes {
        let mut total = ContendingBytes::zero();
        if window.is_empty() {
            return total;
        }
        for &q in queues {
            let order = &self.queues[q].order;
            let first = order.partition_point(|&id| self.records[id].transfer.end_cycle <= window.start);
            for &id in &order[first..] {
                let t = &self.records[id].transfer;
                if t.start_cycle >= window.end {
                    break;
                }
                if Some(TransferHandle(id)) == exclude || t.request.tag == TransferTag::Probe {
                    continue;
                }
                let overlap = window.overlap(t.start_cycle, t.end_cycle);
                if overlap > 0 {
                    total += ContendingBytes::fraction(t.request.bytes, overlap, t.duration());
                }
            }
        }
        total
    }

    /// Issue a probe copy and measure its latency.
    ///
    /// The contention window is `[issue, issue + ceil(idle_base_cycles))`.
    /// The probe is recorded as a transfer lasting exactly the returned
    /// latency; other transfers are not rescheduled.
    pub fn probe_latency(&mut self, probe: TransferRequest) -> Result<(TransferHandle, Cycles)> {
        let link = self.route(&probe)?;
        let window = Window::new(probe.issue_time, probe.issue_time + self.model.window_cycles());
        let contending = match self.scope {
            ContentionScope::Link => self.contending_bytes(link, window, None),
            ContentionScope::Sublink => {
                let q = self.queue_index(link, probe.src_gpu);
                self.contending_on(&[q], window, None)
            }
        };
        let z: f64 = self.rng.sample(StandardNormal);
        let latency = self.model.latency(&contending, z);

        let id = self.records.len();
        let probe = TransferRequest {
            tag: TransferTag::Probe,
            ..probe
        };
        self.records.push(Record {
            transfer: ActiveTransfer {
                request: probe,
                start_cycle: probe.issue_time,
                end_cycle: probe.issue_time + latency,
            },
            nominal: latency,
            completed: false,
        });
        self.probes.push(Reverse((probe.issue_time + latency, id)));
        Ok((TransferHandle(id), latency))
    }

    /// Advance to cycle `t`, completing every transfer that ends at or before it.
    /// Events come back ordered by end cycle, then by scheduling order.
    pub fn run_until(&mut self, t: Cycles) -> Result<Vec<CompletionEvent>> {
        if t < self.now {
            return Err(Error::TimeTravel {
                requested: t,
                now: self.now,
            });
        }
        let mut due: Vec<(Cycles, usize)> = Vec::new();
        for queue in &mut self.queues {
            while let Some(&id) = queue.order.get(queue.done) {
                let end = self.records[id].transfer.end_cycle;
                if end > t {
                    break;
                }
                due.push((end, id));
                queue.done += 1;
            }
        }
        while let Some(&Reverse((end, id))) = self.probes.peek() {
            if end > t {
                break;
            }
            self.probes.pop();
            due.push((end, id));
        }
        due.sort_unstable();

        self.now = t;
        Ok(due
            .into_iter()
            .map(|(end, id)| {
                let r = &mut self.records[id];
                r.completed = true;
                CompletionEvent {
                    handle: TransferHandle(id),
                    end_cycle: end,
                    tag: r.transfer.request.tag,
                }
            })
            .collect())
    }

    /// Latest end cycle among transfers not yet completed.
    pub fn horizon(&self) -> Cycles {
        self.records
            .iter()
            .filter(|r| !r.completed)
            .map(|r| r.transfer.end_cycle)
            .max()
            .unwrap_or(self.now)
            .max(self.now)
    }

    /// Run until every scheduled transfer has completed.
    pub fn drain(&mut self) -> Result<Vec<CompletionEvent>> {
        let h = self.horizon();
        self.run_until(h)
    }
}
