//! `storeplan` command-line tool.

mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Plan { instance, run, out } => commands::plan(instance, run, out),
        Command::Evaluate { instance, plan, out } => commands::evaluate(instance, plan, out),
        Command::Oracle { instance, run, out } => commands::oracle(instance, run, out),
        Command::Cluster { profiles, clusters, out } => commands::cluster(profiles, *clusters, out),
        Command::Bench {
            buses,
            day_counts,
            repeats,
            run,
            out,
        } => commands::bench(*buses, day_counts, *repeats, run, out),
        Command::Dispatch {
            instance,
            plan,
            day,
            out,
        } => commands::dispatch(instance, plan.as_deref(), day.as_deref(), out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
