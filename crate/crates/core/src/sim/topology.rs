use std::collections::HashSet;

use super::defaults;
use super::{GpuId, LatencyModel};
use crate::error::{Error, Result};

/// Which traffic counts as contention for a probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContentionScope {
    /// Transfers on both sublinks of the probe's link.
    #[default]
    Link,
    /// Only transfers travelling in the probe's direction.
    Sublink,
}

/// Everything needed to build a [`Topology`] and its latency model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub gpu_count: u32,
    pub link_pairs: Vec<(GpuId, GpuId)>,
    pub bytes_per_cycle: f64,
    pub clock_hz: f64,
    pub latency_model: LatencyModel,
    pub contention_scope: ContentionScope,
}

impl Default for SimSpec {
    /// Two GPUs joined by one link.
    fn default() -> Self {
        Self {
            gpu_count: 2,
            link_pairs: vec![(0, 1)],
            bytes_per_cycle: defaults::BYTES_PER_CYCLE,
            clock_hz: defaults::CLOCK_HZ,
            latency_model: LatencyModel::default(),
            contention_scope: ContentionScope::Link,
        }
    }
}

impl SimSpec {
    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.latency_model.noise_sigma_cycles = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.latency_model.rng_seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LinkId(pub usize);

/// One direction of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sublink {
    pub src: GpuId,
    pub dst: GpuId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub endpoint_a: GpuId,
    pub endpoint_b: GpuId,
    pub sublink_ab: Sublink,
    pub sublink_ba: Sublink,
    /// Rate of each sublink; both directions share it.
    pub bytes_per_cycle: f64,
}

impl Link {
    fn new(a: GpuId, b: GpuId, bytes_per_cycle: f64) -> Self {
        Self {
            endpoint_a: a,
            endpoint_b: b,
            sublink_ab: Sublink { src: a, dst: b },
            sublink_ba: Sublink { src: b, dst: a },
            bytes_per_cycle,
        }
    }

    pub fn sublinks(&self) -> [Sublink; 2] {
        [self.sublink_ab, self.sublink_ba]
    }

    pub fn connects(&self, x: GpuId, y: GpuId) -> bool {
        (self.endpoint_a == x && self.endpoint_b == y) || (self.endpoint_a == y && self.endpoint_b == x)
    }

    /// 0 for the a→b sublink, 1 for b→a.
    pub(crate) fn direction(&self, src: GpuId) -> usize {
        usize::from(src != self.endpoint_a)
    }
}

/// Immutable GPU/link graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub gpus: Vec<GpuId>,
    pub links: Vec<Link>,
    pub clock_hz: f64,
}

impl Topology {
    pub fn link_between(&self, src: GpuId, dst: GpuId) -> Result<LinkId> {
        self.links
            .iter()
            .position(|l| l.connects(src, dst))
            .map(LinkId)
            .ok_or(Error::Routing { src, dst })
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn sublink_count(&self) -> usize {
        self.links.len() * 2
    }
}

pub fn build_topology(spec: &SimSpec) -> Result<Topology> {
    if spec.gpu_count < 2 {
        return Err(Error::config("gpu_count", format!("need at least 2 GPUs, got {}", spec.gpu_count)));
    }
    if !(spec.bytes_per_cycle.is_finite() && spec.bytes_per_cycle > 0.0) {
        return Err(Error::config(
            "bytes_per_cycle",
            format!("must be positive, got {}", spec.bytes_per_cycle),
        ));
    }
    if !(spec.clock_hz.is_finite() && spec.clock_hz > 0.0) {
        return Err(Error::config("clock_hz", format!("must be positive, got {}", spec.clock_hz)));
    }
    spec.latency_model.validate()?;
    if spec.link_pairs.is_empty() {
        return Err(Error::config("link_pairs", "at least one link is required"));
    }

    let mut seen = HashSet::new();
    let mut links = Vec::with_capacity(spec.link_pairs.len());
    for (i, &(a, b)) in spec.link_pairs.iter().enumerate() {
        let field = format!("link_pairs[{i}]");
        if a == b {
            return Err(Error::config(field, format!("self-link ({a},{b})")));
        }
        for gpu in [a, b] {
            if gpu >= spec.gpu_count {
                return Err(Error::config(
                    field,
                    format!("unknown gpu {gpu} (gpu_count = {})", spec.gpu_count),
                ));
            }
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(Error::config(field, format!("duplicate link ({a},{b})")));
        }
        links.push(Link::new(a, b, spec.bytes_per_cycle));
    }

    Ok(Topology {
        gpus: (0..spec.gpu_count).collect(),
        links,
        clock_hz: spec.clock_hz,
    })
}
