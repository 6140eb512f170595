use std::path::PathBuf;

use anyhow::Context;
use clap::{Parser, Subcommand};

use aslam_harness::bench::benchmark_dopt;
use aslam_harness::config::{parse_criterion, ExperimentConfig};
use aslam_harness::experiment::{run_experiment, CriterionRow};
use aslam_harness::replay::replay_trace;

#[derive(Parser)]
#[command(name = "aslam", about = "Active graph-SLAM exploration simulator", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an exploration experiment from a config file.
    Explore {
        /// Path to a `key = value` experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the spanning-tree D-optimality against the exact route.
    BenchDopt {
        /// Graph sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
        sizes: Vec<usize>,
        /// Repetitions per size; medians are reported.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Re-evaluate a stopping criterion over a recorded trace.csv.
    Replay {
        #[arg(long)]
        trace: PathBuf,
        /// Criterion label, e.g. `task:2:3`, `temporal:600`, `coverage:90`.
        #[arg(long)]
        criterion: String,
    },
    /// Small pose-graph utilities.
    GraphTool {
        #[command(subcommand)]
        cmd: GraphCmd,
    },
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Print the exact and spanning-tree D-optimality of a pose-graph file.
    Dopt { file: PathBuf },
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().cmd {
        Cmd::Explore { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            cfg.apply_overrides(seed, out);
            let summary = run_experiment(&cfg)?;
            for trial in &summary.trials {
                println!(
                    "trial {} (seed {}): {} steps{}",
                    trial.index,
                    trial.seed,
                    trial.steps_run,
                    match trial.exhausted_at {
                        Some(s) => format!(", frontiers exhausted at step {s}"),
                        None => String::new(),
                    }
                );
                print_rows(&trial.rows);
                println!("  artifacts: {}", trial.out_dir.display());
            }
            if let Some(rows) = &summary.mean_rows {
                println!("mean over {} trials:", summary.trials.len());
                print_rows(rows);
            }
        }
        Cmd::BenchDopt { sizes, reps, seed } => {
            println!(
                "{:>6} {:>14} {:>14} {:>9} {:>12}",
                "n", "fast median", "exact median", "speedup", "max rel diff"
            );
            for row in benchmark_dopt(&sizes, reps, seed)? {
                println!(
                    "{:>6} {:>12.3}ms {:>12.3}ms {:>8.1}x {:>12.2e}",
                    row.n,
                    row.median_fast_s * 1e3,
                    row.median_exact_s * 1e3,
                    row.speedup,
                    row.max_rel_diff
                );
            }
        }
        Cmd::Replay { trace, criterion } => {
            let spec = parse_criterion(&criterion)?;
            let out = replay_trace(&trace, &spec)?;
            match out.trigger {
                Some((step, time)) => {
                    println!("{criterion}: stop at step {step} (wall time {time:.1} s)")
                }
                None => println!("{criterion}: never stops over {} steps", out.steps),
            }
            if let Some(ok) = out.matches_recorded {
                println!(
                    "recorded decisions: {}",
                    if ok { "match" } else { "MISMATCH" }
                );
            }
        }
        Cmd::GraphTool { cmd: GraphCmd::Dopt { file } } => {
            let graph = aslam_core::graph_io::import_pose_graph(&file)?;
            let exact = aslam_core::optimality::dopt_exact(&graph)?;
            let fast = aslam_core::optimality::dopt_graph(&graph)?;
            println!("nodes: {}, edges: {}", graph.node_count(), graph.edge_count());
            println!("exact D-opt:         {exact}");
            println!("spanning-tree D-opt: {fast}");
        }
    }
    Ok(())
}

fn print_rows(rows: &[CriterionRow]) {
    println!(
        "  {:<14} {:>9} {:>9} {:>9} {:>9} {:>7} {:>5} {:>5} {:>5} {:>10}",
        "criterion", "step", "time s", "area m2", "cover %", "mRMSE", "n", "d", "opt", "D-opt"
    );
    for r in rows {
        match r.triggered_step {
            None => println!("  {:<14} {:>9}", r.label, "∞"),
            Some(step) => println!(
                "  {:<14} {:>9} {:>9.1} {:>9.2} {:>9.1} {:>7} {:>5} {:>5.2} {:>5} {:>10.4}",
                r.label,
                step,
                r.time_s,
                r.area_m2,
                r.coverage_pct,
                r.mrmse_m.map(|v| format!("{v:.3}")).unwrap_or_default(),
                r.nodes,
                r.mean_degree,
                r.opt_count,
                r.dopt
            ),
        }
    }
}
