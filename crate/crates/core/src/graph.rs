//! Graph representation with dense node ids, edge-list IO, synthetic
//! generators, and descriptive network statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Dense node identifier in `0..node_count`.
pub type NodeId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed edge line {content:?} (expected two nonnegative integer labels)")]
    MalformedLine { line: usize, content: String },
    #[error("self-loop on node {label}")]
    SelfLoop { label: u64 },
    #[error("edge list contains no edges")]
    EmptyEdgeList,
    #[error("edge endpoint {0} is not a valid node id")]
    UnknownNode(NodeId),
    #[error("edge probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("attachment count {m} must satisfy 1 <= m < node count {n}")]
    InvalidAttachment { m: u32, n: u32 },
    #[error("node count {0} is too small (need at least 2)")]
    TooFewNodes(u32),
}

/// Simple graph, directed or undirected, over dense ids `0..node_count`.
///
/// External labels are arbitrary nonnegative integers; dense ids follow
/// ascending label order. Edges are stored once in canonical sorted order
/// (undirected endpoints normalized to `(lo, hi)`), and the position of an
/// edge in that order is its channel index. Self-loops are rejected and
/// duplicate edges collapse to one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    directed: bool,
    labels: Vec<u64>,
    edges: Vec<(NodeId, NodeId)>,
    out_adj: Vec<Vec<(NodeId, u32)>>,
    degree: Vec<u32>,
}

impl Graph {
    /// Builds a graph whose node set is exactly the labels appearing in `edges`.
    pub fn from_labeled_edges(directed: bool, edges: &[(u64, u64)]) -> Result<Graph, GraphError> {
        if edges.is_empty() {
            return Err(GraphError::EmptyEdgeList);
        }
        let mut labels = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop { label: a });
            }
            labels.insert(a);
            labels.insert(b);
        }
        let labels: Vec<u64> = labels.into_iter().collect();
        let index: BTreeMap<u64, NodeId> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, i as NodeId))
            .collect();
        let dense: Vec<(NodeId, NodeId)> = edges.iter().map(|&(a, b)| (index[&a], index[&b])).collect();
        Ok(Self::from_parts(directed, labels, &dense))
    }

    /// Builds a graph over `node_count` nodes labeled `0..node_count`.
    /// Nodes absent from `edges` stay as isolated nodes.
    pub fn from_dense(
        directed: bool,
        node_count: usize,
        edges: &[(NodeId, NodeId)],
    ) -> Result<Graph, GraphError> {
        for &(a, b) in edges {
            if a as usize >= node_count {
                return Err(GraphError::UnknownNode(a));
            }
            if b as usize >= node_count {
                return Err(GraphError::UnknownNode(b));
            }
            if a == b {
                return Err(GraphError::SelfLoop { label: a as u64 });
            }
        }
        let labels: Vec<u64> = (0..node_count as u64).collect();
        Ok(Self::from_parts(directed, labels, edges))
    }

    /// Core constructor: `labels` must be strictly ascending, endpoints valid
    /// dense ids, and no self-loops. Edges are canonicalized here.
    pub(crate) fn from_parts(directed: bool, labels: Vec<u64>, edges: &[(NodeId, NodeId)]) -> Graph {
        debug_assert!(labels.windows(2).all(|w| w[0] < w[1]));
        let mut canon: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
        for &(a, b) in edges {
            debug_assert!(a != b);
            debug_assert!((a as usize) < labels.len() && (b as usize) < labels.len());
            if directed {
                canon.insert((a, b));
            } else {
                canon.insert((a.min(b), a.max(b)));
            }
        }
        let edges: Vec<(NodeId, NodeId)> = canon.into_iter().collect();
        let n = labels.len();
        let mut out_adj = vec![Vec::new(); n];
        let mut degree = vec![0u32; n];
        for (idx, &(a, b)) in edges.iter().enumerate() {
            out_adj[a as usize].push((b, idx as u32));
            degree[a as usize] += 1;
            degree[b as usize] += 1;
            if !directed {
                out_adj[b as usize].push((a, idx as u32));
            }
        }
        Graph {
            directed,
            labels,
            edges,
            out_adj,
            degree,
        }
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Number of independent transmission channels: one per stored edge.
    /// An undirected edge is a single channel shared by both directions.
    pub fn channel_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order; the position of an edge is its channel index.
    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    /// Outgoing `(neighbor, channel index)` pairs. For undirected graphs each
    /// edge appears here from both endpoints under the same channel index.
    pub fn out_neighbors(&self, v: NodeId) -> &[(NodeId, u32)] {
        &self.out_adj[v as usize]
    }

    /// Total degree: incident edge count when undirected, in plus out when directed.
    pub fn total_degree(&self, v: NodeId) -> u32 {
        self.degree[v as usize]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn label_of(&self, v: NodeId) -> u64 {
        self.labels[v as usize]
    }

    pub fn dense_of(&self, label: u64) -> Option<NodeId> {
        self.labels.binary_search(&label).ok().map(|i| i as NodeId)
    }

    /// Writes one `source target` line per edge using external labels.
    /// Isolated nodes are not representable in this format.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> io::Result<()> {
        for &(a, b) in &self.edges {
            writeln!(w, "{} {}", self.labels[a as usize], self.labels[b as usize])?;
        }
        Ok(())
    }

    /// Neighbor sets of the undirected view (direction ignored).
    pub(crate) fn undirected_neighbors(&self) -> Vec<BTreeSet<NodeId>> {
        let mut nbrs = vec![BTreeSet::new(); self.node_count()];
        for &(a, b) in &self.edges {
            nbrs[a as usize].insert(b);
            nbrs[b as usize].insert(a);
        }
        nbrs
    }
}

/// Loads a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped; every other line must hold exactly two nonnegative
/// integer labels. Duplicate edges are collapsed; self-loops are rejected.
pub fn load_edge_list<P: AsRef<Path>>(path: P, directed: bool) -> Result<Graph, GraphError> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (a, b) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(GraphError::MalformedLine {
                    line: lineno + 1,
                    content: trimmed.to_string(),
                })
            }
        };
        let parse = |tok: &str| -> Result<u64, GraphError> {
            tok.parse().map_err(|_| GraphError::MalformedLine {
                line: lineno + 1,
                content: trimmed.to_string(),
            })
        };
        let (a, b) = (parse(a)?, parse(b)?);
        if a == b {
            return Err(GraphError::SelfLoop { label: a });
        }
        edges.push((a, b));
    }
    Graph::from_labeled_edges(directed, &edges)
}

/// Random graph families available to `generate_synthetic`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticModel {
    /// Every unordered pair becomes an edge independently with probability `p`.
    ErdosRenyi { nodes: u32, p: f64 },
    /// Preferential attachment: the first `m` nodes form a path, then each new
    /// node attaches to `m` distinct existing nodes chosen proportionally to
    /// degree. Edge count is exactly `(m - 1) + m * (nodes - m)`.
    BarabasiAlbert { nodes: u32, m: u32 },
}

/// Generates an undirected synthetic graph, deterministic per `rng_seed`.
pub fn generate_synthetic(model: SyntheticModel, rng_seed: u64) -> Result<Graph, GraphError> {
    match model {
        SyntheticModel::ErdosRenyi { nodes, p } => {
            if nodes < 2 {
                return Err(GraphError::TooFewNodes(nodes));
            }
            if !(0.0..=1.0).contains(&p) || p.is_nan() {
                return Err(GraphError::InvalidProbability(p));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut edges = Vec::new();
            for i in 0..nodes {
                for j in (i + 1)..nodes {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            Graph::from_dense(false, nodes as usize, &edges)
        }
        SyntheticModel::BarabasiAlbert { nodes, m } => {
            if nodes < 2 {
                return Err(GraphError::TooFewNodes(nodes));
            }
            if m == 0 || m >= nodes {
                return Err(GraphError::InvalidAttachment { m, n: nodes });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
            let mut edges: Vec<(NodeId, NodeId)> = Vec::new();
            // endpoint multiset: each edge contributes both ends, so sampling
            // uniformly from it is degree-proportional sampling
            let mut endpoints: Vec<NodeId> = Vec::new();
            for i in 1..m {
                edges.push((i - 1, i));
                endpoints.push(i - 1);
                endpoints.push(i);
            }
            if m == 1 {
                // a single starting node has no edges yet; attach node 1 to it
                // directly so the endpoint list becomes non-empty
                edges.push((0, 1));
                endpoints.push(0);
                endpoints.push(1);
            }
            let first_new = if m == 1 { 2 } else { m };
            for v in first_new..nodes {
                let mut targets = BTreeSet::new();
                while targets.len() < m as usize {
                    let t = endpoints[rng.random_range(0..endpoints.len())];
                    if t != v {
                        targets.insert(t);
                    }
                }
                for &t in &targets {
                    edges.push((t, v));
                    endpoints.push(t);
                    endpoints.push(v);
                }
            }
            Graph::from_dense(false, nodes as usize, &edges)
        }
    }
}

/// Descriptive statistics of a network's undirected view.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    /// Connected components (weak components for directed graphs).
    pub components: usize,
    /// Mean local clustering coefficient; nodes of degree < 2 contribute 0.
    pub clustering: f64,
    /// Diameter of the largest component; 0 for a single-node component.
    pub diameter: usize,
}

impl NetworkStats {
    pub fn csv_header() -> &'static str {
        "name,nodes,edges,components,cc,diameter"
    }

    pub fn csv_row(&self, name: &str) -> String {
        format!(
            "{},{},{},{},{},{}",
            name, self.nodes, self.edges, self.components, self.clustering, self.diameter
        )
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

/// Computes node/edge counts, component count, mean local clustering, and the
/// diameter of the largest component, all on the undirected view.
pub fn compute_stats(g: &Graph) -> NetworkStats {
    let n = g.node_count();
    let nbrs = g.undirected_neighbors();

    let mut dsu = UnionFind::new(n);
    for &(a, b) in g.edges() {
        dsu.union(a as usize, b as usize);
    }
    let mut roots = BTreeSet::new();
    for v in 0..n {
        roots.insert(dsu.find(v));
    }
    let components = roots.len();

    let mut cc_sum = 0.0;
    for v in 0..n {
        let k = nbrs[v].len();
        if k < 2 {
            continue;
        }
        let mut links = 0usize;
        let neigh: Vec<NodeId> = nbrs[v].iter().copied().collect();
        for (i, &a) in neigh.iter().enumerate() {
            for &b in &neigh[i + 1..] {
                if nbrs[a as usize].contains(&b) {
                    links += 1;
                }
            }
        }
        cc_sum += (2 * links) as f64 / (k * (k - 1)) as f64;
    }
    let clustering = if n == 0 { 0.0 } else { cc_sum / n as f64 };

    // largest component: most nodes, smallest member id on ties
    let mut comp_members: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        comp_members.entry(dsu.find(v)).or_default().push(v);
    }
    let largest = comp_members
        .values()
        .max_by_key(|members| (members.len(), std::cmp::Reverse(members[0])))
        .cloned()
        .unwrap_or_default();

    let mut diameter = 0usize;
    let mut dist = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for &start in &largest {
        dist.fill(usize::MAX);
        dist[start] = 0;
        queue.clear();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &w in &nbrs[u] {
                if dist[w as usize] == usize::MAX {
                    dist[w as usize] = dist[u] + 1;
                    queue.push_back(w as usize);
                }
            }
        }
        for &v in &largest {
            if dist[v] != usize::MAX {
                diameter = diameter.max(dist[v]);
            }
        }
    }

    NetworkStats {
        nodes: n,
        edges: g.edge_count(),
        components,
        clustering,
        diameter,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_remap_to_sorted_dense_ids() {
        let g = Graph::from_labeled_edges(false, &[(30, 7), (7, 100)]).unwrap();
        assert_eq!(g.labels(), &[7, 30, 100]);
        assert_eq!(g.dense_of(7), Some(0));
        assert_eq!(g.dense_of(30), Some(1));
        assert_eq!(g.dense_of(100), Some(2));
        assert_eq!(g.dense_of(8), None);
        assert_eq!(g.edges(), &[(0, 1), (0, 2)]);
    }

    #[test]
    fn duplicate_edges_collapse_and_self_loops_fail() {
        let g = Graph::from_labeled_edges(false, &[(1, 2), (2, 1), (1, 2)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        let err = Graph::from_labeled_edges(false, &[(3, 3)]).unwrap_err();
        assert!(matches!(err, GraphError::SelfLoop { label: 3 }));
        // directed keeps both orientations as distinct edges
        let d = Graph::from_labeled_edges(true, &[(1, 2), (2, 1)]).unwrap();
        assert_eq!(d.edge_count(), 2);
    }

    #[test]
    fn undirected_edge_visible_from_both_endpoints_same_channel() {
        let g = Graph::from_labeled_edges(false, &[(0, 1)]).unwrap();
        assert_eq!(g.out_neighbors(0), &[(1, 0)]);
        assert_eq!(g.out_neighbors(1), &[(0, 0)]);
        assert_eq!(g.channel_count(), 1);
    }

    #[test]
    fn loader_handles_comments_whitespace_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.edges");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "# comment").unwrap();
        writeln!(f, "5\t9").unwrap();
        writeln!(f, "  9 12  ").unwrap();
        writeln!(f, "5 9").unwrap();
        drop(f);
        let g = load_edge_list(&path, false).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.labels(), &[5, 9, 12]);

        let bad = dir.path().join("bad.edges");
        std::fs::write(&bad, "1 2\n3 oops\n").unwrap();
        match load_edge_list(&bad, false).unwrap_err() {
            GraphError::MalformedLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }

        let loop_file = dir.path().join("loop.edges");
        std::fs::write(&loop_file, "4 4\n").unwrap();
        assert!(matches!(
            load_edge_list(&loop_file, false).unwrap_err(),
            GraphError::SelfLoop { label: 4 }
        ));

        let empty = dir.path().join("empty.edges");
        std::fs::write(&empty, "# nothing\n").unwrap();
        assert!(matches!(
            load_edge_list(&empty, false).unwrap_err(),
            GraphError::EmptyEdgeList
        ));
    }

    #[test]
    fn write_then_reload_round_trips() {
        let g = Graph::from_labeled_edges(false, &[(10, 3), (3, 42), (42, 10), (3, 8)]).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.edges");
        std::fs::write(&path, &buf).unwrap();
        let back = load_edge_list(&path, false).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn erdos_renyi_extremes_and_determinism() {
        let empty = generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 10, p: 0.0 }, 1).unwrap();
        assert_eq!(empty.edge_count(), 0);
        assert_eq!(empty.node_count(), 10);
        let full = generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 10, p: 1.0 }, 1).unwrap();
        assert_eq!(full.edge_count(), 45);

        let a = generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 100, p: 0.1 }, 7).unwrap();
        let b = generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 100, p: 0.1 }, 7).unwrap();
        let c = generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 100, p: 0.1 }, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // 4950 pairs at p = 0.1: expected 495, allow 5 standard deviations
        let expected = 495.0;
        let sd = (4950.0_f64 * 0.1 * 0.9).sqrt();
        assert!((a.edge_count() as f64 - expected).abs() < 5.0 * sd);

        assert!(matches!(
            generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 10, p: 1.5 }, 1),
            Err(GraphError::InvalidProbability(_))
        ));
        assert!(matches!(
            generate_synthetic(SyntheticModel::ErdosRenyi { nodes: 1, p: 0.5 }, 1),
            Err(GraphError::TooFewNodes(1))
        ));
    }

    #[test]
    fn barabasi_albert_edge_count_and_determinism() {
        let g = generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: 50, m: 2 }, 1).unwrap();
        assert_eq!(g.edge_count(), 2 * (50 - 2) + 1);
        let h = generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: 50, m: 2 }, 1).unwrap();
        assert_eq!(g, h);

        let tree = generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: 20, m: 1 }, 3).unwrap();
        assert_eq!(tree.edge_count(), 19);

        let g3 = generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: 16, m: 4 }, 9).unwrap();
        assert_eq!(g3.edge_count(), 3 + 4 * 12);

        assert!(matches!(
            generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: 5, m: 5 }, 1),
            Err(GraphError::InvalidAttachment { .. })
        ));
    }

    #[test]
    fn stats_on_path_triangle_and_star() {
        let path = Graph::from_labeled_edges(false, &[(0, 1), (1, 2)]).unwrap();
        let s = compute_stats(&path);
        assert_eq!(s.components, 1);
        assert_eq!(s.clustering, 0.0);
        assert_eq!(s.diameter, 2);

        let tri_plus_isolated =
            Graph::from_dense(false, 4, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let s = compute_stats(&tri_plus_isolated);
        assert_eq!(s.components, 2);
        assert!((s.clustering - 0.75).abs() < 1e-12);
        assert_eq!(s.diameter, 1);

        let star = Graph::from_labeled_edges(false, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let s = compute_stats(&star);
        assert_eq!(s.clustering, 0.0);
        assert_eq!(s.diameter, 2);

        let k4 = Graph::from_labeled_edges(
            false,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
        )
        .unwrap();
        let s = compute_stats(&k4);
        assert_eq!(s.clustering, 1.0);
        assert_eq!(s.diameter, 1);
        assert_eq!(s.components, 1);
    }

    #[test]
    fn directed_stats_use_undirected_view() {
        let g = Graph::from_labeled_edges(true, &[(0, 1), (1, 0), (1, 2)]).unwrap();
        let s = compute_stats(&g);
        assert_eq!(s.edges, 3);
        assert_eq!(s.components, 1);
        assert_eq!(s.diameter, 2);
        assert_eq!(g.total_degree(1), 3);
        assert_eq!(g.total_degree(0), 2);
        assert_eq!(g.total_degree(2), 1);
    }
}
