//! Seed ranking strategies: a total order over nodes, fixed before any
//! protocol run consumes it.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{Graph, NodeId};
use crate::instance::derive_instance_seed;

#[derive(Debug, Error)]
pub enum RankingError {
    #[error("propagation probability {0} is outside (0, 1]")]
    InvalidProbability(f64),
    #[error("simulation count must be positive")]
    NoSimulations,
    #[error("order is not a permutation of the graph's nodes: {0}")]
    NotAPermutation(String),
    #[error("ranking references label {0} absent from the graph")]
    UnknownLabel(u64),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// How a ranking was produced, with the parameters that pin it down.
#[derive(Debug, Clone, PartialEq)]
pub enum RankingStrategy {
    Random { rng_seed: u64 },
    Degree,
    Greedy { pp: f64, sims: u32, rng_seed: u64 },
    GreedyMarginal { pp: f64, sims: u32, rng_seed: u64 },
    Explicit,
}

impl RankingStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            RankingStrategy::Random { .. } => "random",
            RankingStrategy::Degree => "degree",
            RankingStrategy::Greedy { .. } => "greedy",
            RankingStrategy::GreedyMarginal { .. } => "greedy-marginal",
            RankingStrategy::Explicit => "explicit",
        }
    }
}

/// A total order over a graph's nodes, best candidate first.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRanking {
    strategy: RankingStrategy,
    order: Vec<NodeId>,
    scores: Vec<f64>,
}

impl SeedRanking {
    fn validated(
        graph: &Graph,
        strategy: RankingStrategy,
        order: Vec<NodeId>,
        scores: Vec<f64>,
    ) -> Result<SeedRanking, RankingError> {
        let n = graph.node_count();
        if order.len() != n {
            return Err(RankingError::NotAPermutation(format!(
                "{} entries for {} nodes",
                order.len(),
                n
            )));
        }
        let mut seen = vec![false; n];
        for &v in &order {
            if (v as usize) >= n || seen[v as usize] {
                return Err(RankingError::NotAPermutation(format!(
                    "node id {v} out of range or repeated"
                )));
            }
            seen[v as usize] = true;
        }
        debug_assert_eq!(scores.len(), n);
        Ok(SeedRanking {
            strategy,
            order,
            scores,
        })
    }

    /// Wraps an explicit order (must be a permutation of the graph's nodes).
    pub fn from_order(graph: &Graph, order: Vec<NodeId>) -> Result<SeedRanking, RankingError> {
        let scores = vec![0.0; order.len()];
        Self::validated(graph, RankingStrategy::Explicit, order, scores)
    }

    /// Explicit ranking that starts with `prefix` and continues with the
    /// remaining nodes in ascending id order. Used to replay an oracle
    /// witness as single-stage seeds.
    pub fn with_prefix(graph: &Graph, prefix: &[NodeId]) -> Result<SeedRanking, RankingError> {
        let n = graph.node_count();
        let mut in_prefix = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for &v in prefix {
            if (v as usize) >= n || in_prefix[v as usize] {
                return Err(RankingError::NotAPermutation(format!(
                    "prefix node id {v} out of range or repeated"
                )));
            }
            in_prefix[v as usize] = true;
            order.push(v);
        }
        order.extend((0..n as NodeId).filter(|&v| !in_prefix[v as usize]));
        Self::from_order(graph, order)
    }

    pub fn strategy(&self) -> &RankingStrategy {
        &self.strategy
    }

    /// Full permutation, best candidate first.
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    /// Scores aligned with `order`: degree for the degree strategy, estimated
    /// spread for the greedy strategies, 0 otherwise.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn top(&self, n: usize) -> &[NodeId] {
        &self.order[..n]
    }

    /// Writes `rank,node_label,score` rows, best candidate first.
    pub fn write_csv<W: Write>(&self, graph: &Graph, w: W) -> Result<(), RankingError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["rank", "node_label", "score"])?;
        for (i, &v) in self.order.iter().enumerate() {
            out.write_record(&[
                (i + 1).to_string(),
                graph.label_of(v).to_string(),
                self.scores[i].to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Reads a ranking written by `write_csv` back as an explicit order.
    pub fn read_csv<R: Read>(graph: &Graph, r: R) -> Result<SeedRanking, RankingError> {
        let mut reader = csv::Reader::from_reader(r);
        let mut rows: Vec<(usize, u64, f64)> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let rank: usize = record
                .get(0)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| RankingError::NotAPermutation("bad rank column".into()))?;
            let label: u64 = record
                .get(1)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| RankingError::NotAPermutation("bad label column".into()))?;
            let score: f64 = record.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
            rows.push((rank, label, score));
        }
        rows.sort_by_key(|&(rank, _, _)| rank);
        let mut order = Vec::with_capacity(rows.len());
        let mut scores = Vec::with_capacity(rows.len());
        for (_, label, score) in rows {
            let v = graph
                .dense_of(label)
                .ok_or(RankingError::UnknownLabel(label))?;
            order.push(v);
            scores.push(score);
        }
        Self::validated(graph, RankingStrategy::Explicit, order, scores)
    }
}

/// Uniformly random permutation, deterministic per `rng_seed`.
pub fn rank_random(graph: &Graph, rng_seed: u64) -> SeedRanking {
    let mut order: Vec<NodeId> = (0..graph.node_count() as NodeId).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    order.shuffle(&mut rng);
    let scores = vec![0.0; order.len()];
    SeedRanking {
        strategy: RankingStrategy::Random { rng_seed },
        order,
        scores,
    }
}

/// Nodes sorted by total degree descending (in plus out for directed graphs),
/// ties broken by ascending node id. Degrees come from the full graph, never
/// from a sampled instance.
pub fn rank_degree(graph: &Graph) -> SeedRanking {
    let mut order: Vec<NodeId> = (0..graph.node_count() as NodeId).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(graph.total_degree(v)), v));
    let scores = order.iter().map(|&v| graph.total_degree(v) as f64).collect();
    SeedRanking {
        strategy: RankingStrategy::Degree,
        order,
        scores,
    }
}

/// One independent-cascade run from `seeds` with fresh randomness; every
/// channel is consulted at most once. Returns the activated node count.
fn mc_spread<R: Rng>(graph: &Graph, seeds: &[NodeId], pp: f64, rng: &mut R) -> usize {
    let mut activated = vec![false; graph.node_count()];
    let mut frontier: Vec<NodeId> = Vec::new();
    for &s in seeds {
        if !activated[s as usize] {
            activated[s as usize] = true;
            frontier.push(s);
        }
    }
    frontier.sort_unstable();
    let mut size = frontier.len();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, _) in graph.out_neighbors(u) {
                if !activated[v as usize] && rng.random::<f64>() < pp {
                    activated[v as usize] = true;
                    next.push(v);
                }
            }
        }
        next.sort_unstable();
        size += next.len();
        frontier = next;
    }
    size
}

fn check_mc_params(pp: f64, sims: u32) -> Result<(), RankingError> {
    if !(pp > 0.0 && pp <= 1.0) {
        return Err(RankingError::InvalidProbability(pp));
    }
    if sims == 0 {
        return Err(RankingError::NoSimulations);
    }
    Ok(())
}

/// Ranks nodes by their estimated single-seed cascade size: the mean activated
/// count over `sims` fresh-randomness cascades per node at probability `pp`.
/// Ties break by ascending node id. Deterministic per `rng_seed`.
pub fn rank_greedy(
    graph: &Graph,
    pp: f64,
    sims: u32,
    rng_seed: u64,
) -> Result<SeedRanking, RankingError> {
    check_mc_params(pp, sims)?;
    let n = graph.node_count();
    let estimates: Vec<f64> = (0..n as NodeId)
        .into_par_iter()
        .map(|v| {
            let mut total: u64 = 0;
            for sim in 0..sims {
                let seed = derive_instance_seed(rng_seed, v as u64, sim as u64);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                total += mc_spread(graph, &[v], pp, &mut rng) as u64;
            }
            total as f64 / sims as f64
        })
        .collect();
    let mut order: Vec<NodeId> = (0..n as NodeId).collect();
    order.sort_by(|&a, &b| {
        estimates[b as usize]
            .total_cmp(&estimates[a as usize])
            .then(a.cmp(&b))
    });
    let scores = order.iter().map(|&v| estimates[v as usize]).collect();
    Ok(SeedRanking {
        strategy: RankingStrategy::Greedy { pp, sims, rng_seed },
        order,
        scores,
    })
}

/// Hill-climbing variant: repeatedly appends the node with the largest
/// estimated marginal spread given the already chosen prefix. Costlier than
/// `rank_greedy` by a factor of the node count; not used by the stock
/// experiment grids.
pub fn rank_greedy_marginal(
    graph: &Graph,
    pp: f64,
    sims: u32,
    rng_seed: u64,
) -> Result<SeedRanking, RankingError> {
    check_mc_params(pp, sims)?;
    let n = graph.node_count();
    let mut chosen: Vec<NodeId> = Vec::with_capacity(n);
    let mut chosen_scores: Vec<f64> = Vec::with_capacity(n);
    let mut remaining: Vec<NodeId> = (0..n as NodeId).collect();
    let mut base = 0.0f64;
    for position in 0..n {
        let evaluated: Vec<(NodeId, f64)> = remaining
            .par_iter()
            .map(|&c| {
                let mut seeds = chosen.clone();
                seeds.push(c);
                let mut total: u64 = 0;
                for sim in 0..sims {
                    let stream = derive_instance_seed(rng_seed, position as u64, c as u64);
                    let seed = derive_instance_seed(stream, 0, sim as u64);
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    total += mc_spread(graph, &seeds, pp, &mut rng) as u64;
                }
                (c, total as f64 / sims as f64)
            })
            .collect();
        let &(best, best_spread) = evaluated
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .expect("remaining is non-empty");
        chosen.push(best);
        chosen_scores.push(best_spread - base);
        base = best_spread;
        remaining.retain(|&v| v != best);
    }
    Ok(SeedRanking {
        strategy: RankingStrategy::GreedyMarginal { pp, sims, rng_seed },
        order: chosen,
        scores: chosen_scores,
    })
}
