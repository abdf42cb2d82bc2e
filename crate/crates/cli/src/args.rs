//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "storeplan", version, about = "Storage siting and sizing by cutting planes over per-day dispatch")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the rate-of-return planner and write the report and traces.
    Plan {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Dispatch every day at a fixed plan.
    Evaluate {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Plan file (TOML with a `ratings` table).
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve the monolithic LP and compare the decomposition against it.
    Oracle {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Reduce hourly profiles to weighted typical days.
    Cluster {
        /// Hourly profile table (CSV).
        #[arg(long)]
        profiles: PathBuf,
        /// Number of typical days.
        #[arg(long)]
        clusters: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Time both methods on a random system over growing day counts.
    Bench {
        /// Buses in the generated system.
        #[arg(long, default_value_t = 10)]
        buses: usize,
        /// Day counts to time.
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
        day_counts: Vec<usize>,
        /// Runs per point; the fastest is kept.
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Solve one day's dispatch at a fixed plan.
    Dispatch {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Plan file; no storage when absent.
        #[arg(long)]
        plan: Option<PathBuf>,
        /// Day id; the first day when absent.
        #[arg(long)]
        day: Option<String>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    /// Network file (TOML).
    #[arg(long)]
    pub network: PathBuf,
    /// Typical-day file (TOML), or an hourly profile table (CSV) that is
    /// clustered into `--clusters` typical days.
    #[arg(long)]
    pub days: PathBuf,
    /// Typical days to keep when `--days` is a profile table; every day
    /// when absent.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Technology file, or a bundled name: `libes`, `aa-caes`.
    #[arg(long, default_value = "libes")]
    pub tech: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Planner configuration (TOML). Flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Relative optimality tolerance.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Required rate of return.
    #[arg(long)]
    pub chi: Option<f64>,
    /// Investment budget per day.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for generated instances.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for reports and tables.
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}
