//! Inner cutting-plane loop and the outer rate-of-return loop.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::Instant;

use crate::dispatch::{solve_days, storage_revenue, DispatchError, DispatchSolution};
use crate::master::{self, plan_summary, MasterError, MasterState, TraceRow};
use crate::model::{ModelError, Network, Plan, StorageTech, TypicalDay};
use crate::oracle::{self, OracleError};
use crate::subgradient::{self, all_subgradients, assemble_cut, system_cost, Cut, DayPrices, SubgradientError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("{0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Plan(#[from] ModelError),
    #[error(transparent)]
    Dispatch(#[from] DispatchError),
    #[error(transparent)]
    Subgradient(#[from] SubgradientError),
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Run configuration, usually read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub epsilon: f64,
    /// Required ratio of storage revenue to investment cost.
    pub chi: f64,
    /// Initial investment budget per day; unlimited when absent.
    pub budget_max: Option<f64>,
    /// Budget below which the return target is declared unachievable.
    /// Defaults to `1e-3 * (c_p + c_e)`.
    pub budget_min: Option<f64>,
    pub max_iter: usize,
    pub max_outer: usize,
    /// Worker threads for per-day and per-bus solves; all cores if absent.
    pub workers: Option<usize>,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            epsilon: 0.05,
            chi: 1.0,
            budget_max: None,
            budget_min: None,
            max_iter: 100,
            max_outer: 20,
            workers: None,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        let bad = |m: &str| Err(PlannerError::InvalidConfig(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad("epsilon must be in (0,1)");
        }
        if !self.chi.is_finite() || self.chi <= 0.0 {
            return bad("chi must be positive");
        }
        if self.budget_max.is_some_and(|b| !(b >= 0.0)) {
            return bad("budget_max must be non-negative");
        }
        if self.budget_min.is_some_and(|b| !(b >= 0.0)) {
            return bad("budget_min must be non-negative");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.max_outer == 0 {
            return bad("max_outer must be at least 1");
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1");
        }
        Ok(())
    }
}

/// How a planning run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    IterationLimit,
    ReturnUnachievable,
    OuterLimit,
    /// A fixed plan was evaluated without optimization.
    Evaluated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayCost {
    pub day: String,
    pub weight: f64,
    pub cost: f64,
}

/// One round of the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRecord {
    pub round: usize,
    pub budget: Option<f64>,
    pub investment_cost: f64,
    pub revenue: f64,
    pub achieved_return: Option<f64>,
}

/// Wall-clock seconds spent per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub dispatch: f64,
    pub subgradient: f64,
    pub master: f64,
    pub floor: f64,
    pub total: f64,
}

/// Running totals over every dispatch solve of a run.
#[derive(Debug, Clone, Copy, Default)]
struct SolveStats {
    solves: usize,
    max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub schema_version: u32,
    pub status: Status,
    pub converged: bool,
    pub plan: Plan,
    /// System cost without storage, `C^S(0)`.
    pub baseline_cost: f64,
    /// `C^S` at the plan.
    pub system_cost: f64,
    pub operating_costs: Vec<DayCost>,
    pub weighted_operating_cost: f64,
    /// Weighted storage operating profit `C^R`.
    pub revenue: f64,
    /// Investment cost `C^E`.
    pub investment_cost: f64,
    /// `C^R / C^E`, absent when nothing is built.
    pub achieved_return: Option<f64>,
    pub lower_bound: Option<f64>,
    /// `(best - lower) / (baseline - lower)` at exit.
    pub relative_gap: Option<f64>,
    pub iterations: Vec<TraceRow>,
    pub budgets: Vec<BudgetRecord>,
    /// Number of single-day dispatch LPs solved.
    pub dispatch_solves: usize,
    /// Largest relative duality gap over those solves.
    pub max_duality_gap: f64,
    #[serde(skip)]
    pub cuts: Vec<Cut>,
    #[serde(skip)]
    pub timings: Timings,
}

impl PlanResult {
    /// The report body: everything except wall-clock timings.
    pub fn to_json(&self) -> Result<String, PlannerError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<(), PlannerError> {
        master::write_trace_csv(&self.iterations, w)?;
        Ok(())
    }

    pub fn write_cuts_csv<W: Write>(&self, w: W) -> Result<(), PlannerError> {
        subgradient::write_cuts_csv(&self.cuts, w)?;
        Ok(())
    }

    pub fn write_budgets_csv<W: Write>(&self, w: W) -> Result<(), PlannerError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["round", "budget", "investment_cost", "revenue", "achieved_return"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for b in &self.budgets {
            out.write_record([
                b.round.to_string(),
                opt(b.budget),
                b.investment_cost.to_string(),
                b.revenue.to_string(),
                opt(b.achieved_return),
            ])?;
        }
        out.flush().map_err(|e| PlannerError::Csv(e.into()))?;
        Ok(())
    }
}

/// A dispatched plan.
#[derive(Debug, Clone)]
struct Sample {
    plan: Plan,
    op_costs: Vec<f64>,
    cost: f64,
    revenue: f64,
    investment: f64,
}

struct Planner<'a> {
    net: &'a Network,
    days: &'a [TypicalDay],
    tech: &'a StorageTech,
    weights: Vec<f64>,
    epsilon: f64,
    max_iter: usize,
    state: MasterState,
    samples: Vec<Sample>,
    trace: Vec<TraceRow>,
    iteration: usize,
    timings: Timings,
    stats: SolveStats,
    baseline: Sample,
    baseline_sols: Vec<DispatchSolution>,
}

struct InnerOutcome {
    best: Sample,
    converged: bool,
    lower_bound: f64,
}

impl<'a> Planner<'a> {
    fn new(net: &'a Network, days: &'a [TypicalDay], tech: &'a StorageTech, epsilon: f64, max_iter: usize) -> Result<Self, PlannerError> {
        let weights: Vec<f64> = days.iter().map(|d| d.weight).collect();
        let mut timings = Timings::default();
        let mut stats = SolveStats::default();
        let zero = Plan::new();
        let (baseline, sols) = sample(net, days, tech, &weights, &zero, &mut timings, &mut stats)?;
        let mut state = MasterState::new(net.candidate_buses.clone(), tech, None, baseline.cost);
        let mut planner = Planner {
            net,
            days,
            tech,
            weights,
            epsilon,
            max_iter,
            state: state.clone(),
            samples: vec![baseline.clone()],
            trace: Vec::new(),
            iteration: 0,
            timings,
            stats,
            baseline,
            baseline_sols: Vec::new(),
        };
        let cut = planner.cut_at(&zero, &sols)?;
        state.cuts.push(cut);
        planner.state = state;
        planner.baseline_sols = sols;
        Ok(planner)
    }

    fn cut_at(&mut self, plan: &Plan, sols: &[DispatchSolution]) -> Result<Cut, PlannerError> {
        let t = Instant::now();
        let g = all_subgradients(self.net, self.days, plan, sols, self.tech)?;
        let op: Vec<f64> = sols.iter().map(|s| s.cost).collect();
        let cut = assemble_cut(self.net, plan, &op, &self.weights, self.tech, &g, self.iteration)?;
        self.timings.subgradient += t.elapsed().as_secs_f64();
        Ok(cut)
    }

    fn ensure_floor(&mut self) -> Result<(), PlannerError> {
        if self.state.floor.is_none() && self.state.budget.is_none() {
            let t = Instant::now();
            self.state.floor = Some(oracle::operating_floor(self.net, self.days, self.tech)?);
            self.timings.floor += t.elapsed().as_secs_f64();
        }
        Ok(())
    }

    /// Best sample within the current budget.
    fn best_within_budget(&self) -> Sample {
        let budget = self.state.budget;
        self.samples
            .iter()
            .filter(|s| budget.is_none_or(|b| s.investment <= b * (1.0 + 1e-9) + 1e-9))
            .min_by(|a, b| a.cost.total_cmp(&b.cost))
            .cloned()
            .unwrap_or_else(|| self.baseline.clone())
    }

    fn inner(&mut self, budget: Option<f64>) -> Result<InnerOutcome, PlannerError> {
        self.state.budget = budget;
        self.ensure_floor()?;
        let mut best = self.best_within_budget();
        self.state.best_cost = best.cost;
        self.state.lower_bound = f64::NEG_INFINITY;
        for _ in 0..self.max_iter {
            let t = Instant::now();
            let (plan, lb) = master::solve_master(&self.state)?;
            self.timings.master += t.elapsed().as_secs_f64();
            self.state.lower_bound = self.state.lower_bound.max(lb.min(self.state.best_cost));
            self.iteration += 1;
            let mut row = TraceRow {
                iteration: self.iteration,
                lower_bound: self.state.lower_bound,
                best_cost: self.state.best_cost,
                sampled_cost: None,
                budget,
                plan: plan_summary(&plan),
            };
            if master::convergence_check(&self.state, self.epsilon) {
                self.trace.push(row);
                return Ok(InnerOutcome {
                    best,
                    converged: true,
                    lower_bound: self.state.lower_bound,
                });
            }
            let plan = plan.snapped();
            let (s, sols) = sample(self.net, self.days, self.tech, &self.weights, &plan, &mut self.timings, &mut self.stats)?;
            row.sampled_cost = Some(s.cost);
            if s.cost < best.cost {
                best = s.clone();
                self.state.best_cost = s.cost;
                row.best_cost = s.cost;
            }
            self.trace.push(row);
            let cut = self.cut_at(&plan, &sols)?;
            self.state.cuts.push(cut);
            self.samples.push(s);
            if master::convergence_check(&self.state, self.epsilon) {
                return Ok(InnerOutcome {
                    best,
                    converged: true,
                    lower_bound: self.state.lower_bound,
                });
            }
        }
        Ok(InnerOutcome {
            best,
            converged: false,
            lower_bound: self.state.lower_bound,
        })
    }

    fn result(&self, s: &Sample, status: Status, lower: Option<f64>, budgets: Vec<BudgetRecord>, started: Instant) -> PlanResult {
        let base = self.baseline.cost;
        let relative_gap = lower.map(|lb| {
            let denom = base - lb;
            if denom.abs() <= 1e-12 * base.abs().max(1.0) {
                0.0
            } else {
                (s.cost - lb) / denom
            }
        });
        let mut timings = self.timings;
        timings.total = started.elapsed().as_secs_f64();
        build_result(self.days, s, status, base, lower, relative_gap, self.trace.clone(), budgets, self.state.cuts.clone(), timings, self.stats)
    }
}

#[allow(clippy::too_many_arguments)]
fn build_result(
    days: &[TypicalDay],
    s: &Sample,
    status: Status,
    baseline_cost: f64,
    lower_bound: Option<f64>,
    relative_gap: Option<f64>,
    iterations: Vec<TraceRow>,
    budgets: Vec<BudgetRecord>,
    cuts: Vec<Cut>,
    timings: Timings,
    stats: SolveStats,
) -> PlanResult {
    let operating_costs: Vec<DayCost> = days
        .iter()
        .zip(&s.op_costs)
        .map(|(d, &c)| DayCost {
            day: d.id.clone(),
            weight: d.weight,
            cost: c,
        })
        .collect();
    let weighted: f64 = days.iter().zip(&s.op_costs).map(|(d, c)| d.weight * c).sum();
    PlanResult {
        schema_version: SCHEMA_VERSION,
        status,
        converged: matches!(status, Status::Converged | Status::Evaluated),
        plan: s.plan.clone(),
        baseline_cost,
        system_cost: s.cost,
        operating_costs,
        weighted_operating_cost: weighted,
        revenue: s.revenue,
        investment_cost: s.investment,
        achieved_return: (s.investment > 0.0).then(|| s.revenue / s.investment),
        lower_bound,
        relative_gap,
        iterations,
        budgets,
        dispatch_solves: stats.solves,
        max_duality_gap: stats.max_gap,
        cuts,
        timings,
    }
}

fn sample(
    net: &Network,
    days: &[TypicalDay],
    tech: &StorageTech,
    weights: &[f64],
    plan: &Plan,
    timings: &mut Timings,
    stats: &mut SolveStats,
) -> Result<(Sample, Vec<DispatchSolution>), PlannerError> {
    let t = Instant::now();
    let sols = solve_days(net, days, plan, tech)?;
    timings.dispatch += t.elapsed().as_secs_f64();
    stats.solves += sols.len();
    stats.max_gap = sols.iter().map(|s| s.duality_gap).fold(stats.max_gap, f64::max);
    let op_costs: Vec<f64> = sols.iter().map(|s| s.cost).collect();
    let revenue = sols.iter().zip(weights).map(|(s, &w)| storage_revenue(s, tech, w)).sum();
    let s = Sample {
        cost: system_cost(&op_costs, weights, plan, tech),
        investment: plan.investment_cost(tech),
        plan: plan.clone(),
        op_costs,
        revenue,
    };
    Ok((s, sols))
}

/// Cutting-plane minimization of the system cost under an investment
/// budget (`None` for unlimited). Returns the best sampled plan.
pub fn inner_loop(
    net: &Network,
    days: &[TypicalDay],
    tech: &StorageTech,
    budget: Option<f64>,
    epsilon: f64,
    max_iter: usize,
) -> Result<PlanResult, PlannerError> {
    let started = Instant::now();
    check_loop_args(epsilon, max_iter)?;
    let mut p = Planner::new(net, days, tech, epsilon, max_iter)?;
    let out = p.inner(budget)?;
    let status = if out.converged { Status::Converged } else { Status::IterationLimit };
    let budgets = vec![budget_record(1, budget, &out.best)];
    Ok(p.result(&out.best, status, Some(out.lower_bound), budgets, started))
}

fn check_loop_args(epsilon: f64, max_iter: usize) -> Result<(), PlannerError> {
    PlannerConfig {
        epsilon,
        max_iter,
        ..PlannerConfig::default()
    }
    .validate()
}

fn budget_record(round: usize, budget: Option<f64>, s: &Sample) -> BudgetRecord {
    BudgetRecord {
        round,
        budget,
        investment_cost: s.investment,
        revenue: s.revenue,
        achieved_return: (s.investment > 0.0).then(|| s.revenue / s.investment),
    }
}

/// True when no storage size at any candidate bus can earn `chi` times its
/// capital cost at the given prices, so no plan meets the return target.
/// Price-taker profit at the no-storage prices bounds the revenue of every
/// plan from above.
fn return_unachievable(
    net: &Network,
    sols: &[DispatchSolution],
    weights: &[f64],
    tech: &StorageTech,
    chi: f64,
) -> Result<bool, PlannerError> {
    let idx = net.bus_index();
    let scale = 1e-9 * (1.0 + tech.c_p + tech.c_e) * chi;
    for bus in &net.candidate_buses {
        let b = idx[bus.as_str()];
        let prices: Vec<DayPrices> = sols.iter().zip(weights).map(|(s, &w)| DayPrices::at_bus(s, b, w)).collect();
        let g_p = (1.0 - chi) * tech.c_p;
        let g_e = (1.0 - chi) * tech.c_e;
        if subgradient::price_taker_slack(&prices, tech, g_p, g_e)? <= scale {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cutting planes with a rate-of-return requirement: the budget is cut to
/// `C^R / chi` until the best plan earns at least `chi` times its capital
/// cost. Cuts carry over between rounds.
pub fn outer_loop(net: &Network, days: &[TypicalDay], tech: &StorageTech, cfg: &PlannerConfig) -> Result<PlanResult, PlannerError> {
    let started = Instant::now();
    cfg.validate()?;
    let mut chi = cfg.chi;
    if chi < 1.0 {
        log::warn!("rate of return {chi} is below 1; using 1");
        chi = 1.0;
    }
    let budget_min = cfg.budget_min.unwrap_or(1e-3 * (tech.c_p + tech.c_e));
    let mut p = Planner::new(net, days, tech, cfg.epsilon, cfg.max_iter)?;

    if chi > 1.0 && return_unachievable(net, &p.baseline_sols, &p.weights, tech, chi)? {
        log::info!("no storage unit earns {chi} times its cost at current prices");
        let base = p.baseline.clone();
        let budgets = vec![budget_record(0, cfg.budget_max, &base)];
        return Ok(p.result(&base, Status::ReturnUnachievable, None, budgets, started));
    }

    let mut budget = cfg.budget_max;
    let mut budgets = Vec::new();
    let mut last = None;
    for round in 1..=cfg.max_outer {
        let out = p.inner(budget)?;
        budgets.push(budget_record(round, budget, &out.best));
        let best = &out.best;
        if !out.converged {
            return Ok(p.result(best, Status::IterationLimit, Some(out.lower_bound), budgets, started));
        }
        if best.plan.is_empty() || best.revenue >= chi * best.investment * (1.0 - 1e-6) {
            return Ok(p.result(best, Status::Converged, Some(out.lower_bound), budgets, started));
        }
        let next = (best.revenue / chi * 0.99).min(best.investment * 0.99);
        log::info!(
            "round {round}: return {:.4} below {chi}; budget {:.6} -> {:.6}",
            best.revenue / best.investment,
            best.investment,
            next
        );
        if next < budget_min {
            let base = p.baseline.clone();
            return Ok(p.result(&base, Status::ReturnUnachievable, None, budgets, started));
        }
        budget = Some(next);
        last = Some(out);
    }
    let out = last.expect("at least one outer round");
    Ok(p.result(&out.best, Status::OuterLimit, Some(out.lower_bound), budgets, started))
}

/// Dispatches every day at a fixed plan and reports costs and revenue.
pub fn evaluate_plan(net: &Network, days: &[TypicalDay], tech: &StorageTech, plan: &Plan) -> Result<PlanResult, PlannerError> {
    let started = Instant::now();
    plan.check(net, tech)?;
    let weights: Vec<f64> = days.iter().map(|d| d.weight).collect();
    let mut timings = Timings::default();
    let mut stats = SolveStats::default();
    let (base, _) = sample(net, days, tech, &weights, &Plan::new(), &mut timings, &mut stats)?;
    let (s, _) = sample(net, days, tech, &weights, &plan.snapped(), &mut timings, &mut stats)?;
    timings.total = started.elapsed().as_secs_f64();
    Ok(build_result(days, &s, Status::Evaluated, base.cost, None, None, Vec::new(), Vec::new(), Vec::new(), timings, stats))
}

/// Wall-clock breakdown as a small JSON document, kept apart from the
/// report so that reports of identical runs compare equal.
pub fn timings_json(t: &Timings) -> Result<String, PlannerError> {
    Ok(serde_json::to_string_pretty(t)?)
}
