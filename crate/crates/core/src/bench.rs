//! Wall-clock comparison of the decomposition against the monolithic LP as
//! the number of typical days grows.

use std::io::Write;

use serde::Serialize;
use web_time::Instant;

use crate::instances::{self, Instance, RandomSpec};
use crate::oracle::{compare_costs, solve_monolithic};
use crate::planner::{inner_loop, PlannerError};

/// Day counts used by default.
pub const DAY_COUNTS: [usize; 4] = [1, 3, 5, 10];

/// One row of the timing table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub days: usize,
    pub decomposition_secs: f64,
    pub iterations: usize,
    pub dispatch_solves: usize,
    pub oracle_secs: f64,
    pub oracle_rows: usize,
    pub oracle_cols: usize,
    pub oracle_nonzeros: usize,
    pub baseline_cost: f64,
    pub decomposition_cost: f64,
    pub oracle_cost: f64,
    pub saving_ratio: f64,
    pub pass: bool,
}

/// A random system with exactly `buses` buses and `days` typical days.
/// Smaller benchmarks use a prefix of the days.
pub fn bench_instance(buses: usize, days: usize, seed: u64) -> Instance {
    let spec = RandomSpec {
        buses: (buses, buses),
        lines: (buses.saturating_sub(1).max(1), (buses * 3 / 2).max(buses)),
        days: (days, days),
        ..RandomSpec::default()
    };
    instances::random_instance(seed, &spec)
}

/// Solves the first `n` days of `inst` both ways for every `n` in
/// `day_counts`. The fastest of `repeats` runs is reported for each
/// method.
pub fn run_bench(
    inst: &Instance,
    day_counts: &[usize],
    epsilon: f64,
    repeats: usize,
) -> Result<Vec<BenchRow>, PlannerError> {
    let repeats = repeats.max(1);
    let mut rows = Vec::with_capacity(day_counts.len());
    for &n in day_counts {
        let n = n.min(inst.days.len());
        let days = &inst.days[..n];
        let (mut decomp_secs, mut oracle_secs) = (f64::INFINITY, f64::INFINITY);
        let mut last = None;
        for _ in 0..repeats {
            let t0 = Instant::now();
            let r = inner_loop(&inst.network, days, &inst.tech, None, epsilon, 200)?;
            decomp_secs = decomp_secs.min(t0.elapsed().as_secs_f64());
            let t1 = Instant::now();
            let o = solve_monolithic(&inst.network, days, &inst.tech, None)?;
            oracle_secs = oracle_secs.min(t1.elapsed().as_secs_f64());
            last = Some((r, o));
        }
        let (r, o) = last.expect("at least one repeat");
        let cmp = compare_costs(r.system_cost, o.cost, r.baseline_cost, epsilon)?;
        log::info!(
            "{n} days: decomposition {decomp_secs:.3}s, monolithic {oracle_secs:.3}s, ratio {:.4}",
            cmp.saving_ratio
        );
        rows.push(BenchRow {
            days: n,
            decomposition_secs: decomp_secs,
            iterations: r.iterations.len(),
            dispatch_solves: r.dispatch_solves,
            oracle_secs,
            oracle_rows: o.stats.rows,
            oracle_cols: o.stats.cols,
            oracle_nonzeros: o.stats.nonzeros,
            baseline_cost: r.baseline_cost,
            decomposition_cost: r.system_cost,
            oracle_cost: o.cost,
            saving_ratio: cmp.saving_ratio,
            pass: cmp.pass,
        });
    }
    Ok(rows)
}

/// Growth of each method's time from the first row to the last.
pub fn time_ratios(rows: &[BenchRow]) -> Option<(f64, f64)> {
    let (first, last) = (rows.first()?, rows.last()?);
    Some((
        last.decomposition_secs / first.decomposition_secs,
        last.oracle_secs / first.oracle_secs,
    ))
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<(), PlannerError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(|e| PlannerError::Csv(e.into()))?;
    Ok(())
}
