//! Exact maximum-coverage oracles over sampled edge states.
//!
//! Given an instance's active channels, the oracle finds the best coverage
//! any seed set of the given size could have achieved — the yardstick the
//! gain metric measures both protocols against. Undirected instances reduce
//! to picking the largest connected components; directed instances need an
//! exhaustive search over seed combinations, feasible only while
//! `C(nodes, n)` stays under a cap.

use thiserror::Error;

use crate::graph::NodeId;
use crate::instance::EdgeStateInstance;

/// Largest number of seed combinations the directed oracle will enumerate
/// unless the caller raises the cap.
pub const DEFAULT_DIRECTED_CAP: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("this oracle handles {expected} graphs, got a {got} graph")]
    WrongOracle {
        expected: &'static str,
        got: &'static str,
    },
    #[error("{combinations} seed combinations exceed the enumeration cap {cap}")]
    Infeasible { combinations: u128, cap: u64 },
    #[error("cannot average over an empty instance stream")]
    EmptyStream,
}

/// How a bound was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMethod {
    /// Component sizes of the active undirected subgraph.
    Components,
    /// Exhaustive search over seed combinations of reachability sets.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Best coverage achievable by any seed set of the requested size.
    pub c_max: usize,
    /// Lexicographically smallest seed set attaining `c_max`, ascending.
    pub optimal_seed_set: Vec<NodeId>,
    pub method: OracleMethod,
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
        if acc > u128::MAX / (n as u128 + 1) {
            return u128::MAX;
        }
    }
    acc
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Exact bound for an undirected instance: seeding one node per component
/// covers that whole component, so the optimum is the `n` largest components
/// of the active subgraph. The witness seeds each chosen component at its
/// smallest node id (components ordered by size, ties by smallest member).
pub fn max_coverage_undirected(
    inst: &EdgeStateInstance,
    n: u32,
) -> Result<OracleResult, OracleError> {
    let graph = inst.graph();
    if graph.directed() {
        return Err(OracleError::WrongOracle {
            expected: "undirected",
            got: "directed",
        });
    }
    let nodes = graph.node_count();
    assert!(n >= 1 && n as usize <= nodes, "budget {n} outside 1..={nodes}");
    let mut uf = UnionFind::new(nodes);
    for (ch, &(a, b)) in graph.edges().iter().enumerate() {
        if inst.channel_active(ch) {
            uf.union(a, b);
        }
    }
    // (size, min member) per root; min member is the root's smallest node
    let mut min_member = vec![u32::MAX; nodes];
    for v in 0..nodes as u32 {
        let r = uf.find(v) as usize;
        min_member[r] = min_member[r].min(v);
    }
    let mut comps: Vec<(u32, u32)> = Vec::new();
    for v in 0..nodes as u32 {
        if uf.find(v) == v {
            comps.push((uf.size[v as usize], min_member[v as usize]));
        }
    }
    comps.sort_by_key(|&(size, min)| (std::cmp::Reverse(size), min));
    // fewer components than seeds: everything is already covered and the
    // spare seeds are padded with the smallest unused ids
    let take = (n as usize).min(comps.len());
    let chosen = &comps[..take];
    let c_max = chosen.iter().map(|&(size, _)| size as usize).sum();
    let mut witness: std::collections::BTreeSet<NodeId> =
        chosen.iter().map(|&(_, min)| min).collect();
    let mut next = 0u32;
    while witness.len() < n as usize {
        while witness.contains(&next) {
            next += 1;
        }
        witness.insert(next);
    }
    Ok(OracleResult {
        c_max,
        optimal_seed_set: witness.into_iter().collect(),
        method: OracleMethod::Components,
    })
}

fn reach_bitsets(inst: &EdgeStateInstance) -> Vec<Vec<u64>> {
    let graph = inst.graph();
    let nodes = graph.node_count();
    let words = nodes.div_ceil(64);
    let mut all = Vec::with_capacity(nodes);
    let mut queue = Vec::new();
    for s in 0..nodes as u32 {
        let mut bits = vec![0u64; words];
        let mut seen = vec![false; nodes];
        seen[s as usize] = true;
        bits[s as usize / 64] |= 1 << (s % 64);
        queue.clear();
        queue.push(s);
        while let Some(u) = queue.pop() {
            for &(v, ch) in graph.out_neighbors(u) {
                if !seen[v as usize] && inst.channel_active(ch as usize) {
                    seen[v as usize] = true;
                    bits[v as usize / 64] |= 1 << (v % 64);
                    queue.push(v);
                }
            }
        }
        all.push(bits);
    }
    all
}

fn search(
    reach: &[Vec<u64>],
    n: usize,
    start: usize,
    depth: usize,
    acc: &mut Vec<Vec<u64>>,
    chosen: &mut Vec<NodeId>,
    best: &mut usize,
    best_set: &mut Vec<NodeId>,
) {
    if depth == n {
        let size: usize = acc[n].iter().map(|w| w.count_ones() as usize).sum();
        if size > *best {
            *best = size;
            *best_set = chosen.clone();
        }
        return;
    }
    let nodes = reach.len();
    for v in start..=nodes - (n - depth) {
        let (lower, upper) = acc.split_at_mut(depth + 1);
        for ((dst, &src), &r) in upper[0]
            .iter_mut()
            .zip(lower[depth].iter())
            .zip(reach[v].iter())
        {
            *dst = src | r;
        }
        chosen.push(v as NodeId);
        search(reach, n, v + 1, depth + 1, acc, chosen, best, best_set);
        chosen.pop();
    }
}

/// Exact bound for a directed instance via exhaustive search: the coverage
/// of a seed set is the union of the seeds' reachability sets over active
/// channels, so every `C(nodes, n)` combination is scored and the best kept.
/// Enumeration is lexicographic and only strict improvements are recorded,
/// so the witness is the lexicographically smallest optimum. Errs with
/// [`OracleError::Infeasible`] when the combination count exceeds `cap`
/// (default [`DEFAULT_DIRECTED_CAP`]).
pub fn max_coverage_directed(
    inst: &EdgeStateInstance,
    n: u32,
    cap: Option<u64>,
) -> Result<OracleResult, OracleError> {
    let graph = inst.graph();
    if !graph.directed() {
        return Err(OracleError::WrongOracle {
            expected: "directed",
            got: "undirected",
        });
    }
    let nodes = graph.node_count();
    assert!(n >= 1 && n as usize <= nodes, "budget {n} outside 1..={nodes}");
    let cap = cap.unwrap_or(DEFAULT_DIRECTED_CAP);
    let combinations = binomial(nodes as u64, n as u64);
    if combinations > cap as u128 {
        return Err(OracleError::Infeasible { combinations, cap });
    }
    let reach = reach_bitsets(inst);
    let words = nodes.div_ceil(64);
    let mut acc = vec![vec![0u64; words]; n as usize + 1];
    let mut chosen = Vec::with_capacity(n as usize);
    let mut best = 0usize;
    let mut best_set = Vec::new();
    search(
        &reach,
        n as usize,
        0,
        0,
        &mut acc,
        &mut chosen,
        &mut best,
        &mut best_set,
    );
    Ok(OracleResult {
        c_max: best,
        optimal_seed_set: best_set,
        method: OracleMethod::Exhaustive,
    })
}

/// Mean exact bound over a batch of instances sharing a graph and budget.
/// Dispatches on graph directedness per instance.
pub fn mean_c_max(
    instances: &[EdgeStateInstance],
    n: u32,
    cap: Option<u64>,
) -> Result<f64, OracleError> {
    if instances.is_empty() {
        return Err(OracleError::EmptyStream);
    }
    let mut total: u64 = 0;
    for inst in instances {
        let res = if inst.graph().directed() {
            max_coverage_directed(inst, n, cap)?
        } else {
            max_coverage_undirected(inst, n)?
        };
        total += res.c_max as u64;
    }
    Ok(total as f64 / instances.len() as f64)
}
