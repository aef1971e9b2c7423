//! Pre-sampled edge states shared by every protocol run on an instance.
//!
//! Coordinated comparison requires both protocols to see the same world:
//! each transmission channel's success is drawn once, up front, keyed by
//! `(instance_seed, channel index)`, so any run on the same instance reads
//! identical states no matter in which order it consults them.

use std::io::{self, Write};

use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("propagation probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
    #[error("expected {expected} channel bits, got {got}")]
    WrongBitCount { expected: usize, got: usize },
    #[error("explicit channel mask needs a graph with at most 64 channels, got {0}")]
    TooManyChannels(usize),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix2(a: u64, b: u64) -> u64 {
    splitmix64(a ^ splitmix64(b))
}

/// Counter-based channel draw: deterministic in `(instance_seed, channel)`,
/// active with probability `pp`.
pub fn channel_state(instance_seed: u64, channel: u64, pp: f64) -> bool {
    let r = mix2(instance_seed, channel);
    // top 53 bits to a uniform in [0, 1)
    ((r >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < pp
}

/// Splits a master seed into one stream seed per `(group, index)` pair.
/// Distinct pairs yield distinct streams; the same pair always yields the
/// same seed, which is what lets a manifest rerun reproduce every instance.
pub fn derive_instance_seed(master_seed: u64, group: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(group ^ splitmix64(index)))
}

/// One sampled world: a binary state per transmission channel of a graph.
///
/// Undirected edges hold a single state shared by both directions; directed
/// edges each hold their own. States are materialized as a packed bitset.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeStateInstance<'g> {
    graph: &'g Graph,
    pp: f64,
    instance_seed: u64,
    bits: Vec<u64>,
}

/// Samples every channel independently with probability `pp`.
/// Regenerating with the same `(graph, pp, instance_seed)` is bit-identical.
pub fn sample_instance(
    graph: &Graph,
    pp: f64,
    instance_seed: u64,
) -> Result<EdgeStateInstance<'_>, InstanceError> {
    if !(pp > 0.0 && pp <= 1.0) {
        return Err(InstanceError::InvalidProbability(pp));
    }
    let channels = graph.channel_count();
    let mut bits = vec![0u64; channels.div_ceil(64)];
    for c in 0..channels {
        if channel_state(instance_seed, c as u64, pp) {
            bits[c / 64] |= 1 << (c % 64);
        }
    }
    Ok(EdgeStateInstance {
        graph,
        pp,
        instance_seed,
        bits,
    })
}

impl<'g> EdgeStateInstance<'g> {
    /// Builds an instance from explicit channel states (one bool per channel).
    /// Used by exhaustive enumeration and hand-built scenarios; the recorded
    /// instance seed is 0 and carries no meaning for explicit instances.
    pub fn from_bits(
        graph: &'g Graph,
        pp: f64,
        states: &[bool],
    ) -> Result<EdgeStateInstance<'g>, InstanceError> {
        if states.len() != graph.channel_count() {
            return Err(InstanceError::WrongBitCount {
                expected: graph.channel_count(),
                got: states.len(),
            });
        }
        let mut bits = vec![0u64; states.len().div_ceil(64)];
        for (c, &on) in states.iter().enumerate() {
            if on {
                bits[c / 64] |= 1 << (c % 64);
            }
        }
        Ok(EdgeStateInstance {
            graph,
            pp,
            instance_seed: 0,
            bits,
        })
    }

    /// Builds an instance from a bit mask, channel `c` active when bit `c` is
    /// set. Only valid for graphs with at most 64 channels.
    pub fn from_mask(graph: &'g Graph, pp: f64, mask: u64) -> Result<EdgeStateInstance<'g>, InstanceError> {
        let channels = graph.channel_count();
        if channels > 64 {
            return Err(InstanceError::TooManyChannels(channels));
        }
        Ok(EdgeStateInstance {
            graph,
            pp,
            instance_seed: 0,
            bits: vec![mask & mask_low(channels)],
        })
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn pp(&self) -> f64 {
        self.pp
    }

    pub fn instance_seed(&self) -> u64 {
        self.instance_seed
    }

    pub fn channel_count(&self) -> usize {
        self.graph.channel_count()
    }

    pub fn channel_active(&self, channel: usize) -> bool {
        debug_assert!(channel < self.graph.channel_count());
        self.bits[channel / 64] >> (channel % 64) & 1 == 1
    }

    pub fn active_channel_count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Graph restricted to active channels; the node set (and labels) stay
    /// unchanged, so deactivated nodes remain as isolated nodes.
    pub fn active_subgraph(&self) -> Graph {
        let edges: Vec<_> = self
            .graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(c, _)| self.channel_active(*c))
            .map(|(_, &e)| e)
            .collect();
        Graph::from_parts(self.graph.directed(), self.graph.labels().to_vec(), &edges)
    }

    /// Binary dump: channel count as little-endian u64, then the states
    /// packed 8 per byte, channel index ascending from the low bit.
    pub fn dump_bits<W: Write>(&self, mut w: W) -> io::Result<()> {
        let channels = self.graph.channel_count();
        w.write_all(&(channels as u64).to_le_bytes())?;
        let mut bytes = vec![0u8; channels.div_ceil(8)];
        for c in 0..channels {
            if self.channel_active(c) {
                bytes[c / 8] |= 1 << (c % 8);
            }
        }
        w.write_all(&bytes)
    }
}

fn mask_low(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}
