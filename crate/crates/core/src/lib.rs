//! Influence-spread simulation under the independent cascade model.
//!
//! The library compares two seeding protocols on identical pre-sampled
//! edge-state instances: activating the whole seed budget at once versus
//! spending one seed per stage and letting each cascade finish first.
//! Exact maximum-coverage oracles, a relative gain metric, and paired
//! nonparametric tests quantify the difference, and an experiment harness
//! sweeps grids of networks, propagation probabilities, budgets, and
//! ranking strategies into CSV reports.

pub mod engine;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod ranking;
pub mod stats;

pub use engine::{
    build_strict_improvement_instance, diffuse, run_sequential, run_sequential_logged,
    run_single_stage, run_single_stage_logged, BudgetError, ChannelLog, DiffuseResult,
    DiffusionOutcome, SeedBudget, StageRecord,
};
pub use graph::{
    compute_stats, generate_synthetic, load_edge_list, Graph, GraphError, NetworkStats, NodeId,
    SyntheticModel,
};
pub use harness::{
    format_config, load_config, parse_config, run_grid, GridConfig, GridOutput, HarnessError,
    NetworkSpec, RankingChoice,
};
pub use instance::{
    channel_state, derive_instance_seed, sample_instance, EdgeStateInstance, InstanceError,
};
pub use oracle::{
    max_coverage_directed, max_coverage_undirected, mean_c_max, OracleError, OracleMethod,
    OracleResult, DEFAULT_DIRECTED_CAP,
};
pub use ranking::{
    rank_degree, rank_greedy, rank_greedy_marginal, rank_random, RankingError, RankingStrategy,
    SeedRanking,
};
pub use stats::{
    gain, greedy_upper_bound, hodges_lehmann, read_records_csv, read_summary_csv, summarize_all,
    summarize_config, wilcoxon_signed_rank, write_records_csv, write_summary_csv,
    ComparisonRecord, StatsError, SummaryRow, TestResult,
};
