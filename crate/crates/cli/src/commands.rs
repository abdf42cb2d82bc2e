//! Subcommand implementations.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use storeplan::bench::{self, BenchRow};
use storeplan::dispatch::{self, DispatchSolution};
use storeplan::model::{self, Network, Plan, StorageTech, TypicalDay};
use storeplan::oracle::{self, MonolithicStats, OracleComparison};
use storeplan::planner::{self, PlanResult, PlannerConfig, Status};
use storeplan::scenario;

use crate::args::{InstanceArgs, OutArgs, RunArgs};
use crate::error::CliError;

pub struct Instance {
    pub network: Network,
    pub days: Vec<TypicalDay>,
    pub tech: StorageTech,
}

/// Reads and validates the three instance files.
pub fn load_instance(args: &InstanceArgs) -> Result<Instance, CliError> {
    let network = model::load_network(&args.network)?;
    let days = if args.days.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let year = scenario::load_profiles_file(&args.days).map_err(|e| CliError::in_file(&args.days, e))?;
        let k = args.clusters.unwrap_or(year.num_days());
        scenario::cluster_days(&year, k).map_err(|e| CliError::in_file(&args.days, e))?
    } else {
        model::load_days(&args.days)?
    };
    let tech = model::load_tech(&args.tech)?;
    let report = model::validate_network(&network, &days);
    if !report.is_valid() {
        return Err(CliError::Input(format!(
            "{} / {}: {}",
            args.network.display(),
            args.days.display(),
            report.violations.join("; ")
        )));
    }
    let issues = tech.validate();
    if !issues.is_empty() {
        return Err(CliError::in_file(&args.tech, issues.join("; ")));
    }
    Ok(Instance { network, days, tech })
}

/// Config file values with flag overrides applied, validated.
pub fn load_config(run: &RunArgs) -> Result<PlannerConfig, CliError> {
    let mut cfg = match &run.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            toml::from_str(&text).map_err(|e| CliError::in_file(path, e))?
        }
        None => PlannerConfig::default(),
    };
    if let Some(v) = run.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = run.chi {
        cfg.chi = v;
    }
    if let Some(v) = run.budget {
        cfg.budget_max = Some(v);
    }
    if let Some(v) = run.workers {
        cfg.workers = Some(v);
    }
    if let Some(v) = run.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Caps the global worker pool. Only the first call takes effect.
pub fn set_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool already set: {e}");
        }
    }
}

fn out_dir(out: &OutArgs) -> Result<&Path, CliError> {
    fs::create_dir_all(&out.out_dir).map_err(|e| CliError::io(&out.out_dir, e))?;
    Ok(&out.out_dir)
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf), CliError> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
    Ok((BufWriter::new(f), path))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn write_report(dir: &Path, r: &PlanResult) -> Result<(), CliError> {
    write_text(dir, "report.json", &r.to_json()?)?;
    write_text(dir, "timings.json", &planner::timings_json(&r.timings)?)
}

fn write_schedules(dir: &Path, net: &Network, sols: &[DispatchSolution]) -> Result<(), CliError> {
    let (w, _) = create(dir, "dispatch.csv")?;
    dispatch::write_dispatch_csv(sols, net, w)?;
    let (w, _) = create(dir, "prices.csv")?;
    dispatch::write_prices_csv(sols, net, w)?;
    Ok(())
}

fn print_plan(plan: &Plan) {
    if plan.is_empty() {
        println!("plan: no storage");
    }
    for bus in plan.installed() {
        let r = plan.get(bus);
        println!("plan: bus {bus}: {:.4} MW / {:.4} MWh", r.power, r.energy);
    }
}

fn print_summary(r: &PlanResult) {
    println!("status: {:?}", r.status);
    print_plan(&r.plan);
    println!("baseline cost: {:.4}", r.baseline_cost);
    println!("system cost: {:.4}", r.system_cost);
    println!("investment cost: {:.4}", r.investment_cost);
    println!("storage revenue: {:.4}", r.revenue);
    if let Some(x) = r.achieved_return {
        println!("return: {x:.4}");
    }
}

pub fn plan(instance: &InstanceArgs, run: &RunArgs, out: &OutArgs) -> Result<(), CliError> {
    let cfg = load_config(run)?;
    set_workers(cfg.workers);
    let inst = load_instance(instance)?;
    let r = planner::outer_loop(&inst.network, &inst.days, &inst.tech, &cfg)?;
    let dir = out_dir(out)?;
    write_report(dir, &r)?;
    let (w, _) = create(dir, "trace.csv")?;
    r.write_trace_csv(w)?;
    let (w, _) = create(dir, "cuts.csv")?;
    r.write_cuts_csv(w)?;
    let (w, _) = create(dir, "budgets.csv")?;
    r.write_budgets_csv(w)?;
    print_summary(&r);
    match r.status {
        Status::IterationLimit | Status::OuterLimit => Err(CliError::NotConverged(format!(
            "planner stopped with status {:?}; report written to {}",
            r.status,
            dir.display()
        ))),
        _ => Ok(()),
    }
}

pub fn evaluate(instance: &InstanceArgs, plan_path: &Path, out: &OutArgs) -> Result<(), CliError> {
    let inst = load_instance(instance)?;
    let plan = model::load_plan(plan_path)?;
    plan.check(&inst.network, &inst.tech)
        .map_err(|e| CliError::in_file(plan_path, e))?;
    let r = planner::evaluate_plan(&inst.network, &inst.days, &inst.tech, &plan)?;
    let sols = dispatch::solve_days(&inst.network, &inst.days, &plan.snapped(), &inst.tech)?;
    let dir = out_dir(out)?;
    write_report(dir, &r)?;
    write_schedules(dir, &inst.network, &sols)?;
    print_summary(&r);
    Ok(())
}

#[derive(Serialize)]
struct OracleReport<'a> {
    schema_version: u32,
    budget: Option<f64>,
    oracle_plan: &'a Plan,
    oracle_cost: f64,
    oracle_duality_gap: f64,
    stats: MonolithicStats,
    decomposition_status: Status,
    decomposition_plan: &'a Plan,
    comparison: OracleComparison,
}

pub fn oracle(instance: &InstanceArgs, run: &RunArgs, out: &OutArgs) -> Result<(), CliError> {
    let cfg = load_config(run)?;
    set_workers(cfg.workers);
    let inst = load_instance(instance)?;
    let o = oracle::solve_monolithic(&inst.network, &inst.days, &inst.tech, cfg.budget_max)?;
    let r = planner::inner_loop(&inst.network, &inst.days, &inst.tech, cfg.budget_max, cfg.epsilon, cfg.max_iter)?;
    let cmp = oracle::compare_to_oracle(&r, o.cost, r.baseline_cost, cfg.epsilon)?;
    let report = OracleReport {
        schema_version: planner::SCHEMA_VERSION,
        budget: cfg.budget_max,
        oracle_plan: &o.plan,
        oracle_cost: o.cost,
        oracle_duality_gap: o.duality_gap,
        stats: o.stats,
        decomposition_status: r.status,
        decomposition_plan: &r.plan,
        comparison: cmp,
    };
    let dir = out_dir(out)?;
    write_text(dir, "oracle.json", &serde_json::to_string_pretty(&report)?)?;
    print_plan(&o.plan);
    println!("oracle cost: {:.4}", o.cost);
    println!("decomposition cost: {:.4}", r.system_cost);
    println!(
        "saving ratio: {:.4} ({})",
        cmp.saving_ratio,
        if cmp.pass { "pass" } else { "fail" }
    );
    println!(
        "monolithic LP: {} rows, {} cols, {} nonzeros, build {:.3}s, solve {:.3}s",
        o.stats.rows, o.stats.cols, o.stats.nonzeros, o.stats.build_secs, o.stats.solve_secs
    );
    if r.status != Status::Converged {
        return Err(CliError::NotConverged(format!("decomposition stopped with status {:?}", r.status)));
    }
    Ok(())
}

pub fn cluster(profiles: &Path, clusters: usize, out: &OutArgs) -> Result<(), CliError> {
    let year = scenario::load_profiles_file(profiles).map_err(|e| CliError::in_file(profiles, e))?;
    let days = scenario::cluster_days(&year, clusters).map_err(|e| CliError::in_file(profiles, e))?;
    let dir = out_dir(out)?;
    write_text(dir, "days.toml", &model::days_to_toml(&days)?)?;
    for d in &days {
        println!("{}: weight {}", d.id, d.weight);
    }
    Ok(())
}

fn print_bench(rows: &[BenchRow]) {
    println!(
        "{:>5} {:>14} {:>6} {:>12} {:>8} {:>8} {:>8}",
        "days", "decomp_secs", "iters", "oracle_secs", "rows", "cols", "ratio"
    );
    for r in rows {
        println!(
            "{:>5} {:>14.3} {:>6} {:>12.3} {:>8} {:>8} {:>8.4}",
            r.days, r.decomposition_secs, r.iterations, r.oracle_secs, r.oracle_rows, r.oracle_cols, r.saving_ratio
        );
    }
}

pub fn bench(buses: usize, day_counts: &[usize], repeats: usize, run: &RunArgs, out: &OutArgs) -> Result<(), CliError> {
    let cfg = load_config(run)?;
    set_workers(cfg.workers);
    if buses < 2 {
        return Err(CliError::Input("--buses must be at least 2".into()));
    }
    let max_days = day_counts.iter().copied().max().unwrap_or(1).max(1);
    let inst = bench::bench_instance(buses, max_days, cfg.seed);
    let rows = bench::run_bench(&inst, day_counts, cfg.epsilon, repeats)?;
    let dir = out_dir(out)?;
    let (w, _) = create(dir, "bench.csv")?;
    bench::write_bench_csv(&rows, w)?;
    print_bench(&rows);
    if let Some((d, m)) = bench::time_ratios(&rows) {
        println!("time growth first to last: decomposition {d:.2}x, monolithic {m:.2}x");
    }
    Ok(())
}

pub fn dispatch(instance: &InstanceArgs, plan_path: Option<&Path>, day: Option<&str>, out: &OutArgs) -> Result<(), CliError> {
    let inst = load_instance(instance)?;
    let plan = match plan_path {
        Some(p) => {
            let plan = model::load_plan(p)?;
            plan.check(&inst.network, &inst.tech).map_err(|e| CliError::in_file(p, e))?;
            plan.snapped()
        }
        None => Plan::new(),
    };
    let d = match day {
        Some(id) => inst
            .days
            .iter()
            .find(|d| d.id == id)
            .ok_or_else(|| CliError::in_file(&instance.days, format!("no day with id {id:?}")))?,
        None => inst
            .days
            .first()
            .ok_or_else(|| CliError::in_file(&instance.days, "no days"))?,
    };
    let sol = dispatch::solve_ed(&inst.network, d, &plan, &inst.tech)?;
    let dir = out_dir(out)?;
    write_schedules(dir, &inst.network, std::slice::from_ref(&sol))?;
    println!("day {}: operating cost {:.4}", sol.day, sol.cost);
    println!("relative duality gap: {:.2e}", sol.duality_gap);
    if !sol.storage.is_empty() {
        println!("storage revenue: {:.4}", dispatch::storage_revenue(&sol, &inst.tech, 1.0));
    }
    Ok(())
}
