//! Experiment grid: networks x propagation probabilities x budgets x
//! rankings, every cell sharing coordinated edge-state instances.
//!
//! Instances are keyed by (network, pp, instance index), so cells that
//! differ only in budget or ranking see identical channel states and their
//! outcomes are paired. A grid run emits three files into the output
//! directory: `records.csv` (one row per protocol comparison), `summary.csv`
//! (one row per cell), and `manifest.txt` (the fully resolved configuration,
//! itself a valid config file whose rerun reproduces `records.csv` byte for
//! byte).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::engine::{run_sequential, run_single_stage, BudgetError, SeedBudget};
use crate::graph::{generate_synthetic, load_edge_list, Graph, GraphError, SyntheticModel};
use crate::instance::{derive_instance_seed, sample_instance, InstanceError};
use crate::oracle::{
    max_coverage_directed, max_coverage_undirected, OracleError, OracleResult,
    DEFAULT_DIRECTED_CAP,
};
use crate::ranking::{
    rank_degree, rank_greedy, rank_greedy_marginal, rank_random, RankingError, SeedRanking,
};
use crate::stats::{
    summarize_all, write_records_csv, write_summary_csv, ComparisonRecord, StatsError,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
    #[error(transparent)]
    Budget(#[from] BudgetError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// One network in the grid: an edge-list file or a generated topology.
/// Generated topologies are undirected; a directed grid mirrors every edge
/// into both directions.
#[derive(Debug, Clone, PartialEq)]
pub enum NetworkSpec {
    File { name: String, path: PathBuf },
    Er { name: String, nodes: u32, p: f64, seed: u64 },
    Ba { name: String, nodes: u32, m: u32, seed: u64 },
}

impl NetworkSpec {
    pub fn name(&self) -> &str {
        match self {
            NetworkSpec::File { name, .. }
            | NetworkSpec::Er { name, .. }
            | NetworkSpec::Ba { name, .. } => name,
        }
    }

    fn build(&self, directed: bool) -> Result<Graph, HarnessError> {
        let graph = match self {
            NetworkSpec::File { path, .. } => load_edge_list(path, directed)?,
            NetworkSpec::Er { nodes, p, seed, .. } => mirror_if(
                generate_synthetic(SyntheticModel::ErdosRenyi { nodes: *nodes, p: *p }, *seed)?,
                directed,
            )?,
            NetworkSpec::Ba { nodes, m, seed, .. } => mirror_if(
                generate_synthetic(SyntheticModel::BarabasiAlbert { nodes: *nodes, m: *m }, *seed)?,
                directed,
            )?,
        };
        Ok(graph)
    }
}

fn mirror_if(graph: Graph, directed: bool) -> Result<Graph, GraphError> {
    if !directed {
        return Ok(graph);
    }
    let mirrored: Vec<(u64, u64)> = graph
        .edges()
        .iter()
        .flat_map(|&(a, b)| {
            [
                (graph.label_of(a), graph.label_of(b)),
                (graph.label_of(b), graph.label_of(a)),
            ]
        })
        .collect();
    Graph::from_labeled_edges(true, &mirrored)
}

/// Ranking strategies the grid can request. Parameters (seeds, simulation
/// counts) come from the grid configuration rather than the choice itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingChoice {
    Random,
    Degree,
    Greedy,
    GreedyMarginal,
}

impl RankingChoice {
    pub fn name(&self) -> &'static str {
        match self {
            RankingChoice::Random => "random",
            RankingChoice::Degree => "degree",
            RankingChoice::Greedy => "greedy",
            RankingChoice::GreedyMarginal => "greedy-marginal",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "random" => Some(RankingChoice::Random),
            "degree" => Some(RankingChoice::Degree),
            "greedy" => Some(RankingChoice::Greedy),
            "greedy-marginal" => Some(RankingChoice::GreedyMarginal),
            _ => None,
        }
    }
}

/// Full grid configuration. [`format_config`] renders it to the key=value
/// text form and [`parse_config`] reads it back.
#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub networks: Vec<NetworkSpec>,
    pub directed: bool,
    pub pp_values: Vec<f64>,
    pub budgets: Vec<SeedBudget>,
    pub rankings: Vec<RankingChoice>,
    pub instances: u32,
    pub master_seed: u64,
    pub oracle: bool,
    pub oracle_cap: u64,
    pub greedy_sims: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            networks: Vec::new(),
            directed: true,
            pp_values: Vec::new(),
            budgets: Vec::new(),
            rankings: Vec::new(),
            instances: 0,
            master_seed: 0,
            oracle: false,
            oracle_cap: DEFAULT_DIRECTED_CAP,
            greedy_sims: 10_000,
        }
    }
}

// Seed-space tags keeping ranking draws independent of instance draws.
const RANDOM_RANK_TAG: u64 = 0x72616e_6b_72616e64;
const GREEDY_RANK_TAG: u64 = 0x72616e_6b_67726479;
const MARGINAL_RANK_TAG: u64 = 0x72616e_6b_6d617267;

fn parse_err(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_network(line: usize, value: &str) -> Result<NetworkSpec, HarnessError> {
    let (name, rest) = value
        .split_once(':')
        .ok_or_else(|| parse_err(line, format!("network '{value}' needs a name: prefix")))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(parse_err(line, format!("bad network name '{name}'")));
    }
    let rest = rest.trim();
    let gen_args = |prefix: &str| -> Option<Vec<&str>> {
        rest.strip_prefix(prefix)?
            .strip_suffix(')')
            .map(|inner| inner.split(',').map(str::trim).collect())
    };
    if let Some(args) = gen_args("ba(") {
        if args.len() != 3 {
            return Err(parse_err(line, "ba(...) takes nodes,m,seed"));
        }
        return Ok(NetworkSpec::Ba {
            name: name.to_string(),
            nodes: args[0]
                .parse()
                .map_err(|_| parse_err(line, format!("bad node count '{}'", args[0])))?,
            m: args[1]
                .parse()
                .map_err(|_| parse_err(line, format!("bad attachment count '{}'", args[1])))?,
            seed: args[2]
                .parse()
                .map_err(|_| parse_err(line, format!("bad seed '{}'", args[2])))?,
        });
    }
    if let Some(args) = gen_args("er(") {
        if args.len() != 3 {
            return Err(parse_err(line, "er(...) takes nodes,p,seed"));
        }
        return Ok(NetworkSpec::Er {
            name: name.to_string(),
            nodes: args[0]
                .parse()
                .map_err(|_| parse_err(line, format!("bad node count '{}'", args[0])))?,
            p: args[1]
                .parse()
                .map_err(|_| parse_err(line, format!("bad edge probability '{}'", args[1])))?,
            seed: args[2]
                .parse()
                .map_err(|_| parse_err(line, format!("bad seed '{}'", args[2])))?,
        });
    }
    Ok(NetworkSpec::File {
        name: name.to_string(),
        path: PathBuf::from(rest),
    })
}

fn parse_budget_item(line: usize, item: &str) -> Result<SeedBudget, HarnessError> {
    if let Some(pct) = item.strip_suffix('%') {
        let sp: f64 = pct
            .parse()
            .map_err(|_| parse_err(line, format!("bad budget percentage '{item}'")))?;
        Ok(SeedBudget::Percent(sp))
    } else {
        let n: u32 = item
            .parse()
            .map_err(|_| parse_err(line, format!("bad budget '{item}'")))?;
        Ok(SeedBudget::Count(n))
    }
}

/// Parses the key=value grid configuration format. `#` starts a comment,
/// blank lines are skipped, `network =` lines repeat, every other key
/// appears at most once.
pub fn parse_config(text: &str) -> Result<GridConfig, HarnessError> {
    let mut config = GridConfig::default();
    let mut seen: std::collections::HashSet<&str> = std::collections::HashSet::new();
    let mut required = std::collections::HashSet::from(["pp", "budget", "ranking", "instances"]);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_err(line, format!("expected key = value, got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(parse_err(line, format!("key '{key}' has no value")));
        }
        if key != "network" && !seen.insert(key) {
            return Err(parse_err(line, format!("duplicate key '{key}'")));
        }
        required.remove(key);
        match key {
            "network" => config.networks.push(parse_network(line, value)?),
            "directed" => {
                config.directed = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad bool '{value}'")))?
            }
            "pp" => {
                config.pp_values = value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| parse_err(line, format!("bad probability '{s}'")))
                    })
                    .collect::<Result<_, _>>()?
            }
            "budget" => {
                config.budgets = value
                    .split(',')
                    .map(|s| parse_budget_item(line, s.trim()))
                    .collect::<Result<_, _>>()?
            }
            "ranking" => {
                config.rankings = value
                    .split(',')
                    .map(|s| {
                        RankingChoice::parse(s.trim())
                            .ok_or_else(|| parse_err(line, format!("unknown ranking '{s}'")))
                    })
                    .collect::<Result<_, _>>()?
            }
            "instances" => {
                config.instances = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad instance count '{value}'")))?
            }
            "master_seed" => {
                config.master_seed = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad seed '{value}'")))?
            }
            "oracle" => {
                config.oracle = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad bool '{value}'")))?
            }
            "oracle_cap" => {
                config.oracle_cap = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad cap '{value}'")))?
            }
            "greedy_sims" => {
                config.greedy_sims = value
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad simulation count '{value}'")))?
            }
            other => return Err(parse_err(line, format!("unknown key '{other}'"))),
        }
    }
    if config.networks.is_empty() {
        return Err(HarnessError::Invalid("no networks given".into()));
    }
    if let Some(missing) = required.into_iter().next() {
        return Err(HarnessError::Invalid(format!("missing key '{missing}'")));
    }
    validate_config(&config)?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<GridConfig, HarnessError> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn validate_config(config: &GridConfig) -> Result<(), HarnessError> {
    let invalid = |msg: String| Err(HarnessError::Invalid(msg));
    if config.networks.is_empty() {
        return invalid("no networks given".into());
    }
    let mut names = std::collections::HashSet::new();
    for net in &config.networks {
        if !names.insert(net.name()) {
            return invalid(format!("duplicate network name '{}'", net.name()));
        }
    }
    if config.pp_values.is_empty() {
        return invalid("no propagation probabilities given".into());
    }
    for &pp in &config.pp_values {
        if !(pp > 0.0 && pp <= 1.0) {
            return invalid(format!("propagation probability {pp} outside (0, 1]"));
        }
    }
    if config.budgets.is_empty() {
        return invalid("no budgets given".into());
    }
    if config.rankings.is_empty() {
        return invalid("no rankings given".into());
    }
    let mut ranking_names = std::collections::HashSet::new();
    for choice in &config.rankings {
        if !ranking_names.insert(choice.name()) {
            return invalid(format!("duplicate ranking '{}'", choice.name()));
        }
    }
    if config.instances == 0 {
        return invalid("instances must be at least 1".into());
    }
    Ok(())
}

/// Renders a configuration to the text format [`parse_config`] reads.
/// The output is deterministic, so manifests are stable across reruns.
pub fn format_config(config: &GridConfig) -> String {
    let mut out = String::new();
    out.push_str("# experiment grid configuration\n");
    for net in &config.networks {
        let value = match net {
            NetworkSpec::File { name, path } => format!("{name}:{}", path.display()),
            NetworkSpec::Er { name, nodes, p, seed } => format!("{name}:er({nodes},{p},{seed})"),
            NetworkSpec::Ba { name, nodes, m, seed } => format!("{name}:ba({nodes},{m},{seed})"),
        };
        writeln!(out, "network = {value}").unwrap();
    }
    writeln!(out, "directed = {}", config.directed).unwrap();
    let pp: Vec<String> = config.pp_values.iter().map(f64::to_string).collect();
    writeln!(out, "pp = {}", pp.join(",")).unwrap();
    let budgets: Vec<String> = config
        .budgets
        .iter()
        .map(|b| match b {
            SeedBudget::Count(n) => n.to_string(),
            SeedBudget::Percent(sp) => format!("{sp}%"),
        })
        .collect();
    writeln!(out, "budget = {}", budgets.join(",")).unwrap();
    let rankings: Vec<&str> = config.rankings.iter().map(RankingChoice::name).collect();
    writeln!(out, "ranking = {}", rankings.join(",")).unwrap();
    writeln!(out, "instances = {}", config.instances).unwrap();
    writeln!(out, "master_seed = {}", config.master_seed).unwrap();
    writeln!(out, "oracle = {}", config.oracle).unwrap();
    writeln!(out, "oracle_cap = {}", config.oracle_cap).unwrap();
    writeln!(out, "greedy_sims = {}", config.greedy_sims).unwrap();
    out
}

/// Cache key for a simulation-based ranking: every input that can change
/// the result is hashed, so a stale entry is impossible to hit.
fn greedy_cache_key(
    graph: &Graph,
    pp: f64,
    sims: u32,
    seed: u64,
    marginal: bool,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(if marginal { b"marginal-v1" as &[u8] } else { b"greedy-v1" });
    hasher.update([graph.directed() as u8]);
    hasher.update((graph.node_count() as u64).to_le_bytes());
    for v in 0..graph.node_count() as u32 {
        hasher.update(graph.label_of(v).to_le_bytes());
    }
    for &(a, b) in graph.edges() {
        hasher.update(a.to_le_bytes());
        hasher.update(b.to_le_bytes());
    }
    hasher.update(pp.to_bits().to_le_bytes());
    hasher.update(sims.to_le_bytes());
    hasher.update(seed.to_le_bytes());
    hex::encode(&hasher.finalize()[..16])
}

fn cached_simulation_ranking(
    cache_dir: &Path,
    graph: &Graph,
    pp: f64,
    sims: u32,
    seed: u64,
    marginal: bool,
) -> Result<SeedRanking, HarnessError> {
    let key = greedy_cache_key(graph, pp, sims, seed, marginal);
    let path = cache_dir.join(format!("rank-{key}.csv"));
    if path.exists() {
        let file = std::fs::File::open(&path)?;
        return Ok(SeedRanking::read_csv(graph, file)?);
    }
    let ranking = if marginal {
        rank_greedy_marginal(graph, pp, sims, seed)?
    } else {
        rank_greedy(graph, pp, sims, seed)?
    };
    std::fs::create_dir_all(cache_dir)?;
    ranking.write_csv(graph, std::fs::File::create(&path)?)?;
    Ok(ranking)
}

/// Paths and counts produced by a grid run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridOutput {
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
    pub cell_count: usize,
    pub record_count: usize,
}

/// Runs the full grid and writes `records.csv`, `summary.csv` and
/// `manifest.txt` into `out_dir`. Instances are parallelized with rayon
/// (bound the worker count with `RAYON_NUM_THREADS`); results are merged in
/// index order, so the output does not depend on the thread schedule.
pub fn run_grid(config: &GridConfig, out_dir: &Path) -> Result<GridOutput, HarnessError> {
    validate_config(config)?;
    std::fs::create_dir_all(out_dir)?;
    let cache_dir = out_dir.join("cache");
    let mut all_records: Vec<ComparisonRecord> = Vec::new();
    let mut cell_count = 0usize;
    for (net_idx, spec) in config.networks.iter().enumerate() {
        let graph = spec.build(config.directed)?;
        let mut budgets: Vec<u32> = Vec::with_capacity(config.budgets.len());
        for budget in &config.budgets {
            let n = budget.resolve(graph.node_count())?;
            if budgets.contains(&n) {
                return Err(HarnessError::Invalid(format!(
                    "budgets resolve to the same stage count {n} on network '{}'",
                    spec.name()
                )));
            }
            budgets.push(n);
        }
        let degree_ranking = if config.rankings.contains(&RankingChoice::Degree) {
            Some(rank_degree(&graph))
        } else {
            None
        };
        for (pp_idx, &pp) in config.pp_values.iter().enumerate() {
            let group = (net_idx * config.pp_values.len() + pp_idx) as u64;
            let greedy_ranking = if config.rankings.contains(&RankingChoice::Greedy) {
                Some(cached_simulation_ranking(
                    &cache_dir,
                    &graph,
                    pp,
                    config.greedy_sims,
                    derive_instance_seed(config.master_seed ^ GREEDY_RANK_TAG, group, 0),
                    false,
                )?)
            } else {
                None
            };
            let marginal_ranking = if config.rankings.contains(&RankingChoice::GreedyMarginal) {
                Some(cached_simulation_ranking(
                    &cache_dir,
                    &graph,
                    pp,
                    config.greedy_sims,
                    derive_instance_seed(config.master_seed ^ MARGINAL_RANK_TAG, group, 0),
                    true,
                )?)
            } else {
                None
            };
            // feasibility probe per budget: an infeasible oracle disables the
            // bound columns for that budget instead of failing the run
            let mut oracle_on: Vec<bool> = Vec::with_capacity(budgets.len());
            if config.oracle {
                let probe_seed = derive_instance_seed(config.master_seed, group, 0);
                let probe = sample_instance(&graph, pp, probe_seed)?;
                for &n in &budgets {
                    let feasible = if graph.directed() {
                        match max_coverage_directed(&probe, n, Some(config.oracle_cap)) {
                            Ok(_) => true,
                            Err(OracleError::Infeasible { .. }) => false,
                            Err(e) => return Err(e.into()),
                        }
                    } else {
                        max_coverage_undirected(&probe, n).map(|_| true)?
                    };
                    oracle_on.push(feasible);
                }
            } else {
                oracle_on = vec![false; budgets.len()];
            }
            let uses_random = config.rankings.contains(&RankingChoice::Random);
            let per_instance: Vec<Vec<ComparisonRecord>> = (0..config.instances)
                .into_par_iter()
                .map(|idx| -> Result<Vec<ComparisonRecord>, HarnessError> {
                    let instance_seed =
                        derive_instance_seed(config.master_seed, group, idx as u64);
                    let inst = sample_instance(&graph, pp, instance_seed)?;
                    let random_ranking = if uses_random {
                        Some(rank_random(
                            &graph,
                            derive_instance_seed(
                                config.master_seed ^ RANDOM_RANK_TAG,
                                group,
                                idx as u64,
                            ),
                        ))
                    } else {
                        None
                    };
                    let mut oracle_results: Vec<Option<OracleResult>> =
                        Vec::with_capacity(budgets.len());
                    for (b_idx, &n) in budgets.iter().enumerate() {
                        if !oracle_on[b_idx] {
                            oracle_results.push(None);
                            continue;
                        }
                        let res = if graph.directed() {
                            max_coverage_directed(&inst, n, Some(config.oracle_cap))?
                        } else {
                            max_coverage_undirected(&inst, n)?
                        };
                        oracle_results.push(Some(res));
                    }
                    let mut records =
                        Vec::with_capacity(budgets.len() * config.rankings.len());
                    for (b_idx, &n) in budgets.iter().enumerate() {
                        for choice in &config.rankings {
                            let ranking = match choice {
                                RankingChoice::Random => random_ranking.as_ref().unwrap(),
                                RankingChoice::Degree => degree_ranking.as_ref().unwrap(),
                                RankingChoice::Greedy => greedy_ranking.as_ref().unwrap(),
                                RankingChoice::GreedyMarginal => {
                                    marginal_ranking.as_ref().unwrap()
                                }
                            };
                            let sn = run_single_stage(&inst, ranking, n);
                            let sq = run_sequential(&inst, ranking, n);
                            let (c_max, gain_pct, optimal_seeds) = match &oracle_results[b_idx]
                            {
                                Some(res) => (
                                    Some(res.c_max as u32),
                                    Some(crate::stats::gain(
                                        sq.coverage as f64,
                                        sn.coverage as f64,
                                        res.c_max as f64,
                                    )?),
                                    res.optimal_seed_set
                                        .iter()
                                        .map(|&v| graph.label_of(v).to_string())
                                        .collect::<Vec<_>>()
                                        .join(";"),
                                ),
                                None => (None, None, String::new()),
                            };
                            records.push(ComparisonRecord {
                                network: spec.name().to_string(),
                                pp,
                                budget: n,
                                ranking: choice.name().to_string(),
                                instance_seed,
                                c_sn: sn.coverage as u32,
                                c_sq: sq.coverage as u32,
                                c_max,
                                gain_pct,
                                seeds_saved: sq.seeds_saved as u32,
                                sn_steps: sn.total_steps as u32,
                                sq_steps: sq.total_steps as u32,
                                optimal_seeds,
                            });
                        }
                    }
                    Ok(records)
                })
                .collect::<Result<_, _>>()?;
            // transpose instance-major results into cell-major record order
            let cells_here = budgets.len() * config.rankings.len();
            for cell in 0..cells_here {
                for per in &per_instance {
                    all_records.push(per[cell].clone());
                }
            }
            cell_count += cells_here;
        }
    }
    let records_path = out_dir.join("records.csv");
    let summary_path = out_dir.join("summary.csv");
    let manifest_path = out_dir.join("manifest.txt");
    write_records_csv(&records_path, &all_records)?;
    let summary = summarize_all(&all_records)?;
    write_summary_csv(&summary_path, &summary)?;
    std::fs::write(&manifest_path, format_config(config))?;
    Ok(GridOutput {
        records_path,
        summary_path,
        manifest_path,
        cell_count,
        record_count: all_records.len(),
    })
}
