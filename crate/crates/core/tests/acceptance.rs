//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storeplan::bench::{bench_instance, run_bench, time_ratios, DAY_COUNTS};
use storeplan::dispatch::{check_no_simultaneous, simultaneity_threshold};
use storeplan::instances::{self, Instance, RandomSpec};
use storeplan::model::{load_days, load_network, load_plan, load_tech, Plan, StorageTech};
use storeplan::oracle::{compare_to_oracle, solve_monolithic, MonolithicResult};
use storeplan::planner::{inner_loop, outer_loop, PlanResult, PlannerConfig, Status};

use common::*;

const EPSILON: f64 = 0.05;
const INSTANCES: u64 = 10;

struct Case {
    inst: Instance,
    result: PlanResult,
    oracle: MonolithicResult,
    secs: f64,
}

type Outcome = Result<String, String>;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn run_cases() -> Vec<Case> {
    let spec = RandomSpec::default();
    (0..INSTANCES)
        .map(|seed| {
            let inst = instances::random_instance(seed, &spec);
            let t0 = Instant::now();
            let result = inner_loop(&inst.network, &inst.days, &inst.tech, None, EPSILON, 200).unwrap();
            let secs = t0.elapsed().as_secs_f64();
            let oracle = solve_monolithic(&inst.network, &inst.days, &inst.tech, None).unwrap();
            Case { inst, result, oracle, secs }
        })
        .collect()
}

fn oracle_equivalence(cases: &[Case]) -> Outcome {
    let mut worst: f64 = f64::INFINITY;
    let mut slowest: f64 = 0.0;
    for c in cases {
        let n = &c.inst.network;
        ensure(
            (5..=20).contains(&n.buses.len()) && (6..=30).contains(&n.lines.len()),
            format!("{} has {} buses and {} lines", c.inst.name, n.buses.len(), n.lines.len()),
        )?;
        ensure(
            (3..=8).contains(&n.generators.len()) && (1..=5).contains(&c.inst.days.len()),
            format!("{} has {} generators and {} days", c.inst.name, n.generators.len(), c.inst.days.len()),
        )?;
        let cmp = compare_to_oracle(&c.result, c.oracle.cost, c.result.baseline_cost, EPSILON).map_err(|e| e.to_string())?;
        ensure(cmp.pass, format!("{}: saving ratio {:.4}", c.inst.name, cmp.saving_ratio))?;
        ensure(c.secs < 60.0, format!("{}: {:.1}s", c.inst.name, c.secs))?;
        worst = worst.min(cmp.saving_ratio);
        slowest = slowest.max(c.secs);
    }
    Ok(format!("{} instances, min saving ratio {worst:.4}, slowest {slowest:.2}s", cases.len()))
}

fn strong_duality(cases: &[Case]) -> Outcome {
    let mut solves = 0;
    let mut gap: f64 = 0.0;
    for c in cases {
        solves += c.result.dispatch_solves;
        gap = gap.max(c.result.max_duality_gap);
    }
    ensure(gap <= 1e-8, format!("max relative duality gap {gap:.3e}"))?;
    Ok(format!("{solves} dispatch solves, max relative gap {gap:.2e}"))
}

fn revenue_identity(cases: &[Case]) -> Outcome {
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for c in cases.iter().filter(|c| !c.result.plan.is_empty()) {
        let (direct, identity) = revenue_pair(&c.inst, &c.result.plan.snapped());
        let rel = (direct - identity).abs() / direct.abs().max(1.0);
        ensure(rel <= 1e-6, format!("{}: revenue {direct} vs identity {identity}", c.inst.name))?;
        worst = worst.max(rel);
        checked += 1;
    }
    ensure(checked > 0, "no instance installed storage".into())?;
    Ok(format!("{checked} instances with storage, max relative error {worst:.2e}"))
}

fn finite_differences(cases: &[Case]) -> Outcome {
    let m2 = instances::m2();
    let mut probes = vec![(m2.clone(), Plan::new().with("1", 6.0, 8.0))];
    for c in cases.iter().filter(|c| !c.result.plan.is_empty()).take(5) {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + probes.len() as u64);
        probes.push((c.inst.clone(), interior_plan(&mut rng, &c.inst)));
    }
    ensure(probes.len() == 6, format!("only {} random instances with storage", probes.len() - 1))?;
    let (mut total, mut excluded) = (0usize, 0usize);
    for (inst, plan) in &probes {
        for s in fd_samples(inst, plan, 1e-2) {
            total += 1;
            if s.degenerate() {
                excluded += 1;
                eprintln!(
                    "  excluded {} bus {} {}: forward {:.6} backward {:.6}",
                    inst.name, s.bus, s.coord, s.forward, s.backward
                );
                continue;
            }
            ensure(
                s.matches(),
                format!("{} bus {} {}: subgradient {} vs central {}", inst.name, s.bus, s.coord, s.analytic, s.central),
            )?;
        }
    }
    let rate = excluded as f64 / total as f64;
    ensure(rate < 0.2, format!("{excluded}/{total} samples degenerate"))?;
    Ok(format!("{total} samples on M2 and 5 random instances, {excluded} degenerate excluded"))
}

fn cut_validity(cases: &[Case]) -> Outcome {
    let (mut checks, mut cuts) = (0usize, 0usize);
    for (k, c) in cases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + k as u64);
        let e_top = c.result.plan.ratings.values().map(|r| r.energy).fold(20.0f64, f64::max) * 2.0;
        cuts += c.result.cuts.len();
        for _ in 0..20 {
            let plan = feasible_plan(&mut rng, &c.inst, e_top);
            plan.check(&c.inst.network, &c.inst.tech).map_err(|e| e.to_string())?;
            let cost = cost_at(&c.inst, &plan);
            for cut in &c.result.cuts {
                let v = cut.value_at(&plan);
                checks += 1;
                ensure(
                    v <= cost + 1e-6 * cost.abs(),
                    format!("{} cut {}: {v} above sampled cost {cost}", c.inst.name, cut.iteration),
                )?;
            }
        }
    }
    Ok(format!("{cuts} cuts, {checks} cut/plan pairs, 0 violations"))
}

fn exact_relaxation(cases: &[Case]) -> Outcome {
    let mut hours = 0usize;
    for c in cases {
        let sols = solve(&c.inst, &c.result.plan.snapped());
        for s in &sols {
            let rep = check_no_simultaneous(s, &c.inst.tech);
            ensure(rep.condition_failures.is_empty(), format!("{}: sufficient condition fails", c.inst.name))?;
            ensure(rep.violations.is_empty(), format!("{}: simultaneous hours {:?}", c.inst.name, rep.violations))?;
            hours += s.hours * s.storage.len();
        }
    }
    let libes = StorageTech::libes();
    let threshold = simultaneity_threshold(&libes, -200.0);
    ensure(
        format!("{threshold:.1}") == "21.1",
        format!("threshold {threshold} is not 21.1 to three significant figures"),
    )?;
    ensure(libes.c_dis + libes.c_ch > threshold, "LiBES fails its own condition".into())?;

    let neg = instances::negative_lmp();
    let sols = solve(&neg, &instances::negative_lmp_plan());
    let mut simultaneous = 0;
    let mut failures = 0;
    for s in &sols {
        let rep = check_no_simultaneous(s, &neg.tech);
        simultaneous += rep.violations.len();
        failures += rep.condition_failures.len();
    }
    ensure(simultaneous >= 1 && failures >= 1, format!("counterexample: {simultaneous} simultaneous hours"))?;
    Ok(format!(
        "0 simultaneous of {hours} storage-hours; LiBES threshold at -200 is {threshold:.1}; counterexample has {simultaneous} simultaneous hour(s)"
    ))
}

fn rate_of_return() -> Outcome {
    let inst = instances::m2_ladder();
    let mut summary = Vec::new();
    let mut prev = f64::INFINITY;
    let mut last_status = Status::Converged;
    for chi in [1.0, 1.1, 1.2, 1.5] {
        let cfg = PlannerConfig {
            chi,
            epsilon: EPSILON,
            ..PlannerConfig::default()
        };
        let r = outer_loop(&inst.network, &inst.days, &inst.tech, &cfg).map_err(|e| e.to_string())?;
        let ce = r.investment_cost;
        ensure(ce <= prev + 1e-9 * prev.abs().max(1.0), format!("C^E rises to {ce} at chi {chi}"))?;
        if r.status == Status::Converged && !r.plan.is_empty() {
            ensure(
                r.revenue >= chi * ce - 1e-6 * ce,
                format!("chi {chi}: revenue {} below {}", r.revenue, chi * ce),
            )?;
        }
        summary.push(format!("chi {chi}: C^E {:.2} ({:?})", ce.abs(), r.status));
        prev = ce;
        last_status = r.status;
    }
    ensure(last_status == Status::ReturnUnachievable, format!("chi 1.5 ends {last_status:?}"))?;
    Ok(summary.join(", "))
}

fn scaling() -> Outcome {
    let inst = bench_instance(10, 10, 0);
    let rows = run_bench(&inst, &DAY_COUNTS, EPSILON, 1).map_err(|e| e.to_string())?;
    let (decomp, mono) = time_ratios(&rows).ok_or("empty bench")?;
    let first = &rows[0];
    let last = rows.last().unwrap();
    let linear = first.decomposition_secs * last.days as f64 / first.days as f64;
    for r in &rows {
        ensure(r.pass, format!("{} days: saving ratio {:.4}", r.days, r.saving_ratio))?;
    }
    ensure(
        last.decomposition_secs <= 2.0 * linear,
        format!("decomposition {:.2}s exceeds twice the linear {:.2}s", last.decomposition_secs, linear),
    )?;
    ensure(mono > decomp, format!("monolithic ratio {mono:.1} not above decomposition ratio {decomp:.1}"))?;
    Ok(format!(
        "t(10)/t(1): decomposition {decomp:.1} (limit {:.0}), monolithic {mono:.1}",
        2.0 * last.days as f64 / first.days as f64
    ))
}

fn table_configs() -> Outcome {
    let dir = data_dir().join("tech");
    let caes = load_tech(&dir.join("aa_caes.toml")).map_err(|e| e.to_string())?;
    let libes = load_tech(&dir.join("libes.toml")).map_err(|e| e.to_string())?;
    ensure(caes.rho_min == 0.05 && caes.rho_max == 0.25, format!("AA-CAES ratio [{}, {}]", caes.rho_min, caes.rho_max))?;
    ensure((caes.round_trip() - 0.72).abs() <= 1e-12, format!("AA-CAES round trip {}", caes.round_trip()))?;
    ensure(libes.rho_min == 0.1 && libes.rho_max == 4.0, format!("LiBES ratio [{}, {}]", libes.rho_min, libes.rho_max))?;
    ensure((libes.round_trip() - 0.9).abs() <= 1e-12, format!("LiBES round trip {}", libes.round_trip()))?;
    ensure(libes.c_dis == 87.0, format!("LiBES c_dis {}", libes.c_dis))?;
    ensure(caes == StorageTech::aa_caes() && libes == StorageTech::libes(), "files differ from built-ins".into())?;

    // The fixture directories must match the built-in instances too.
    for inst in [instances::m1(), instances::m2(), instances::m2_ladder(), instances::negative_lmp()] {
        let d = data_dir().join(inst.name.to_lowercase());
        let net = load_network(&d.join("network.toml")).map_err(|e| e.to_string())?;
        let days = load_days(&d.join("days.toml")).map_err(|e| e.to_string())?;
        let tech = load_tech(&d.join("tech.toml")).map_err(|e| e.to_string())?;
        ensure(net == inst.network && days == inst.days && tech == inst.tech, format!("{} fixture differs", inst.name))?;
    }
    let plan = load_plan(&data_dir().join("negative-lmp/plan.toml")).map_err(|e| e.to_string())?;
    ensure(plan == instances::negative_lmp_plan(), "counterexample plan differs".into())?;
    Ok("AA-CAES [0.05, 0.25] rt 0.72; LiBES [0.1, 4] rt 0.9, c_dis 87".into())
}

fn main() -> ExitCode {
    let t0 = Instant::now();
    let cases = run_cases();
    let results: Vec<(u32, Outcome)> = vec![
        (1, oracle_equivalence(&cases)),
        (2, strong_duality(&cases)),
        (3, revenue_identity(&cases)),
        (4, finite_differences(&cases)),
        (5, cut_validity(&cases)),
        (6, exact_relaxation(&cases)),
        (7, rate_of_return()),
        (8, scaling()),
        (9, table_configs()),
    ];
    let mut failed = 0;
    for (n, r) in &results {
        match r {
            Ok(msg) => println!("criterion {n}: PASS ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n}: FAIL ({msg})");
            }
        }
    }
    println!("acceptance: {} of {} passed in {:.1}s", results.len() - failed, results.len(), t0.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
