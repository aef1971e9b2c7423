//! Command-line front end for the influence-spread experiment library.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use seedsim_core::{
    compute_stats, derive_instance_seed, generate_synthetic, load_config, load_edge_list,
    max_coverage_directed, max_coverage_undirected, rank_degree, rank_greedy,
    rank_greedy_marginal, rank_random, read_records_csv, run_grid, sample_instance,
    summarize_all, write_summary_csv, Graph, SeedBudget, SyntheticModel,
};

#[derive(Parser)]
#[command(name = "seedsim", version, about = "Influence-spread seeding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid described by a config file.
    Run {
        /// Key=value grid configuration (see README for the schema).
        #[arg(long)]
        config: PathBuf,
        /// Output directory for records.csv, summary.csv, manifest.txt.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        master_seed: Option<u64>,
        /// Override the config's per-cell instance count.
        #[arg(long)]
        instances: Option<u32>,
    },
    /// Exact coverage bounds over sampled instances of one network.
    Oracle {
        /// Edge-list file (one "src dst" pair per line, # comments).
        #[arg(long)]
        graph: PathBuf,
        /// Treat the edge list as directed.
        #[arg(long)]
        directed: bool,
        /// Channel activation probability.
        #[arg(long)]
        pp: f64,
        /// Seed-set size the bound is computed for.
        #[arg(long)]
        n: u32,
        /// Number of instances to sample.
        #[arg(long, default_value_t = 1)]
        instances: u64,
        /// Master seed for instance sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumeration cap for the directed oracle.
        #[arg(long)]
        cap: Option<u64>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute a seed ranking for a network.
    Rank {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        /// random | degree | greedy | greedy-marginal
        #[arg(long)]
        strategy: String,
        /// Channel activation probability (simulation-based strategies).
        #[arg(long)]
        pp: Option<f64>,
        /// Cascades per estimate (simulation-based strategies).
        #[arg(long)]
        sims: Option<u32>,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate a records CSV into per-cell summary rows.
    Stats {
        /// records.csv produced by `run`.
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "summary.csv")]
        out: PathBuf,
    },
    /// Generate a synthetic network as an edge list.
    Gen {
        /// ba | er
        #[arg(long)]
        model: String,
        #[arg(long)]
        nodes: u32,
        /// Edges per new node (ba).
        #[arg(long)]
        m: Option<u32>,
        /// Edge probability (er).
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Structural statistics of a network, as one CSV row.
    StatsNet {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        directed: bool,
        /// Row name (defaults to the file stem).
        #[arg(long)]
        name: Option<String>,
    },
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_graph(path: &PathBuf, directed: bool) -> Result<Graph> {
    load_edge_list(path, directed).with_context(|| format!("loading {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            master_seed,
            instances,
        } => {
            let mut grid = load_config(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            if let Some(seed) = master_seed {
                grid.master_seed = seed;
            }
            if let Some(count) = instances {
                grid.instances = count;
            }
            let result = run_grid(&grid, &out)?;
            println!(
                "wrote {} records across {} cells",
                result.record_count, result.cell_count
            );
            println!("records:  {}", result.records_path.display());
            println!("summary:  {}", result.summary_path.display());
            println!("manifest: {}", result.manifest_path.display());
        }
        Command::Oracle {
            graph,
            directed,
            pp,
            n,
            instances,
            seed,
            cap,
            out,
        } => {
            let g = load_graph(&graph, directed)?;
            SeedBudget::Count(n).resolve(g.node_count())?;
            let mut w = open_output(&out)?;
            writeln!(w, "instance_seed,c_max,optimal_seeds")?;
            for idx in 0..instances {
                let instance_seed = derive_instance_seed(seed, 0, idx);
                let inst = sample_instance(&g, pp, instance_seed)?;
                let res = if directed {
                    max_coverage_directed(&inst, n, cap)?
                } else {
                    max_coverage_undirected(&inst, n)?
                };
                let seeds: Vec<String> = res
                    .optimal_seed_set
                    .iter()
                    .map(|&v| g.label_of(v).to_string())
                    .collect();
                writeln!(w, "{},{},{}", instance_seed, res.c_max, seeds.join(";"))?;
            }
        }
        Command::Rank {
            graph,
            directed,
            strategy,
            pp,
            sims,
            rng_seed,
            out,
        } => {
            let g = load_graph(&graph, directed)?;
            let sim_params = || -> Result<(f64, u32)> {
                Ok((
                    pp.context("--pp is required for simulation-based strategies")?,
                    sims.context("--sims is required for simulation-based strategies")?,
                ))
            };
            let ranking = match strategy.as_str() {
                "random" => rank_random(&g, rng_seed),
                "degree" => rank_degree(&g),
                "greedy" => {
                    let (pp, sims) = sim_params()?;
                    rank_greedy(&g, pp, sims, rng_seed)?
                }
                "greedy-marginal" => {
                    let (pp, sims) = sim_params()?;
                    rank_greedy_marginal(&g, pp, sims, rng_seed)?
                }
                other => bail!("unknown strategy '{other}'"),
            };
            ranking.write_csv(&g, open_output(&out)?)?;
        }
        Command::Stats { records, out } => {
            let rows = read_records_csv(&records)
                .with_context(|| format!("reading {}", records.display()))?;
            let summary = summarize_all(&rows)?;
            write_summary_csv(&out, &summary)?;
            println!("wrote {} summary rows to {}", summary.len(), out.display());
        }
        Command::Gen {
            model,
            nodes,
            m,
            p,
            seed,
            out,
        } => {
            let spec = match model.as_str() {
                "ba" => SyntheticModel::BarabasiAlbert {
                    nodes,
                    m: m.context("--m is required for the ba model")?,
                },
                "er" => SyntheticModel::ErdosRenyi {
                    nodes,
                    p: p.context("--p is required for the er model")?,
                },
                other => bail!("unknown model '{other}'"),
            };
            let g = generate_synthetic(spec, seed)?;
            g.write_edge_list(open_output(&out)?)?;
        }
        Command::StatsNet {
            graph,
            directed,
            name,
        } => {
            let g = load_graph(&graph, directed)?;
            let stats = compute_stats(&g);
            let name = name.unwrap_or_else(|| {
                graph
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "network".to_string())
            });
            println!("{}", seedsim_core::NetworkStats::csv_header());
            println!("{}", stats.csv_row(&name));
        }
    }
    Ok(())
}
