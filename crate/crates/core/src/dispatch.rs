//! Per-day economic dispatch under a fixed storage plan: LP construction,
//! solution extraction (LMPs, regulation prices, storage rating duals),
//! storage revenue, and the simultaneous charge/discharge check.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::lp::{self, LinearProgram, LpError, LpSolution, LpStatus, Relation, RowId, VarId};
use crate::model::{BusId, Network, Plan, StorageTech, TypicalDay};

/// Charge and discharge above this many MW in the same hour count as
/// simultaneous.
pub const SIMULTANEITY_EPS: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum DispatchError {
    #[error("plan installs storage at bus {0}, which is not a storage candidate")]
    NotCandidate(BusId),
    #[error("plan references unknown bus {0}")]
    UnknownBus(BusId),
    #[error("day {day}: dispatch infeasible from hour {hour}")]
    Infeasible { day: String, hour: usize },
    #[error("day {day}: dispatch LP unbounded")]
    Unbounded { day: String },
    #[error("day {day}: simplex iteration limit reached")]
    IterationLimit { day: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// How storage ratings enter the rating rows.
pub(crate) enum RatingSource<'a> {
    /// Fixed right-hand sides from a plan (only installed buses get rows).
    Fixed(&'a Plan),
    /// Shared rating variables per bus index (monolithic model).
    Variables(&'a HashMap<usize, (VarId, VarId)>),
}

#[derive(Debug, Clone)]
pub(crate) struct StorageIndex {
    pub bus: usize,
    pub p_ch: Vec<VarId>,
    pub p_dis: Vec<VarId>,
    pub r_eu: Vec<VarId>,
    pub r_ed: Vec<VarId>,
    pub e_soc: Vec<VarId>,
    pub soc_row: Vec<RowId>,
    pub ch_row: Vec<RowId>,
    pub dis_row: Vec<RowId>,
    pub soc_max_row: Vec<RowId>,
    pub soc_min_row: Vec<RowId>,
}

/// Column and row handles of one day's dispatch block.
#[derive(Debug, Clone)]
pub(crate) struct DayIndex {
    pub hours: usize,
    pub p_g: Vec<Vec<VarId>>,
    pub r_gu: Vec<Vec<VarId>>,
    pub r_gd: Vec<Vec<VarId>>,
    pub p_rs: Vec<Vec<VarId>>,
    pub theta: Vec<Vec<VarId>>,
    pub flow: Vec<Vec<VarId>>,
    pub balance: Vec<Vec<RowId>>,
    pub reg_up: Vec<RowId>,
    pub reg_down: Vec<RowId>,
    pub storage: Vec<StorageIndex>,
}

/// First bus of every connected component (network order), which gets
/// its voltage angle pinned to zero.
fn reference_buses(net: &Network, idx: &HashMap<&str, usize>) -> Vec<bool> {
    let n = net.buses.len();
    let mut adj = vec![Vec::new(); n];
    for l in &net.lines {
        let (a, b) = (idx[l.from.as_str()], idx[l.to.as_str()]);
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut is_ref = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        is_ref[s] = true;
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    is_ref
}

/// Appends one day's dispatch variables, rows and cost terms to `lp`,
/// with every objective coefficient multiplied by `weight`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_day(
    lp: &mut LinearProgram,
    net: &Network,
    day: &TypicalDay,
    tech: &StorageTech,
    ratings: &RatingSource<'_>,
    hours: usize,
    weight: f64,
    prefix: &str,
) -> DayIndex {
    let idx = net.bus_index();
    let nb = net.buses.len();
    let is_ref = reference_buses(net, &idx);
    let inf = f64::INFINITY;
    let storage_buses: Vec<usize> = match ratings {
        RatingSource::Fixed(plan) => (0..nb).filter(|&b| plan.is_installed(&net.buses[b])).collect(),
        RatingSource::Variables(map) => {
            let mut v: Vec<usize> = map.keys().copied().collect();
            v.sort_unstable();
            v
        }
    };

    let mut di = DayIndex {
        hours,
        p_g: Vec::with_capacity(hours),
        r_gu: Vec::with_capacity(hours),
        r_gd: Vec::with_capacity(hours),
        p_rs: Vec::with_capacity(hours),
        theta: Vec::with_capacity(hours),
        flow: Vec::with_capacity(hours),
        balance: Vec::with_capacity(hours),
        reg_up: Vec::with_capacity(hours),
        reg_down: Vec::with_capacity(hours),
        storage: storage_buses
            .iter()
            .map(|&b| StorageIndex {
                bus: b,
                p_ch: Vec::new(),
                p_dis: Vec::new(),
                r_eu: Vec::new(),
                r_ed: Vec::new(),
                e_soc: Vec::new(),
                soc_row: Vec::new(),
                ch_row: Vec::new(),
                dis_row: Vec::new(),
                soc_max_row: Vec::new(),
                soc_min_row: Vec::new(),
            })
            .collect(),
    };

    for t in 0..hours {
        let h = t + 1;
        let pg: Vec<VarId> = net
            .generators
            .iter()
            .map(|g| lp.add_var(format!("{prefix}pg_{}_{h}", g.id), g.g_min, g.g_max, weight * g.c_g))
            .collect();
        let rgu: Vec<VarId> = net
            .generators
            .iter()
            .map(|g| lp.add_var(format!("{prefix}rgu_{}_{h}", g.id), 0.0, tech.t_ru * g.ramp_up, weight * g.c_gu))
            .collect();
        let rgd: Vec<VarId> = net
            .generators
            .iter()
            .map(|g| lp.add_var(format!("{prefix}rgd_{}_{h}", g.id), 0.0, tech.t_rd * g.ramp_down, weight * g.c_gd))
            .collect();
        let prs: Vec<VarId> = net
            .buses
            .iter()
            .map(|b| lp.add_var(format!("{prefix}prs_{b}_{h}"), 0.0, day.spill_max_at(b, t), weight * day.c_rs))
            .collect();
        let theta: Vec<VarId> = (0..nb)
            .map(|b| {
                let (lo, hi) = if is_ref[b] { (0.0, 0.0) } else { (-inf, inf) };
                lp.add_var(format!("{prefix}theta_{}_{h}", net.buses[b]), lo, hi, 0.0)
            })
            .collect();
        let flow: Vec<VarId> = net
            .lines
            .iter()
            .map(|l| lp.add_var(format!("{prefix}f_{}_{h}", l.id), -l.capacity, l.capacity, 0.0))
            .collect();

        let mut bal: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nb];
        for (i, g) in net.generators.iter().enumerate() {
            bal[idx[g.bus.as_str()]].push((pg[i], 1.0));
        }
        for (l, line) in net.lines.iter().enumerate() {
            bal[idx[line.from.as_str()]].push((flow[l], -1.0));
            bal[idx[line.to.as_str()]].push((flow[l], 1.0));
        }
        for b in 0..nb {
            bal[b].push((prs[b], -1.0));
        }

        let mut up_terms: Vec<(VarId, f64)> = rgu.iter().map(|&v| (v, 1.0)).collect();
        let mut down_terms: Vec<(VarId, f64)> = rgd.iter().map(|&v| (v, 1.0)).collect();

        for s in di.storage.iter_mut() {
            let bus = &net.buses[s.bus];
            let p_ch = lp.add_var(format!("{prefix}pch_{bus}_{h}"), 0.0, inf, weight * tech.c_ch);
            let p_dis = lp.add_var(format!("{prefix}pdis_{bus}_{h}"), 0.0, inf, weight * tech.c_dis);
            let r_eu = lp.add_var(format!("{prefix}reu_{bus}_{h}"), 0.0, inf, weight * tech.c_eu);
            let r_ed = lp.add_var(format!("{prefix}red_{bus}_{h}"), 0.0, inf, weight * tech.c_ed);
            // Nonnegativity follows from the socmin row, so no bound is needed.
            let e_soc = lp.add_var(format!("{prefix}esoc_{bus}_{h}"), -inf, inf, 0.0);
            bal[s.bus].push((p_dis, tech.eta_dis));
            bal[s.bus].push((p_ch, -1.0 / tech.eta_ch));
            up_terms.push((r_eu, tech.eta_dis));
            down_terms.push((r_ed, 1.0 / tech.eta_ch));

            let mut soc = vec![(e_soc, 1.0), (p_ch, -1.0), (p_dis, 1.0)];
            if let Some(&prev) = s.e_soc.last() {
                soc.push((prev, -1.0));
            }
            s.soc_row.push(lp.add_row(format!("{prefix}soc_{bus}_{h}"), soc, Relation::Eq, 0.0));
            let (pr, er, cap_p, cap_e) = match ratings {
                RatingSource::Fixed(plan) => {
                    let r = plan.get(bus);
                    (None, None, r.power, r.energy)
                }
                RatingSource::Variables(map) => {
                    let (p, e) = map[&s.bus];
                    (Some(p), Some(e), 0.0, 0.0)
                }
            };
            let with_rating = |mut terms: Vec<(VarId, f64)>, rating: Option<VarId>| {
                if let Some(v) = rating {
                    terms.push((v, -1.0));
                }
                terms
            };
            s.ch_row.push(lp.add_row(
                format!("{prefix}chcap_{bus}_{h}"),
                with_rating(vec![(p_ch, 1.0), (r_ed, 1.0)], pr),
                Relation::Le,
                cap_p,
            ));
            s.dis_row.push(lp.add_row(
                format!("{prefix}discap_{bus}_{h}"),
                with_rating(vec![(p_dis, 1.0), (r_eu, 1.0)], pr),
                Relation::Le,
                cap_p,
            ));
            s.soc_max_row.push(lp.add_row(
                format!("{prefix}socmax_{bus}_{h}"),
                with_rating(vec![(e_soc, 1.0), (r_ed, tech.t_es)], er),
                Relation::Le,
                cap_e,
            ));
            s.soc_min_row.push(lp.add_row(
                format!("{prefix}socmin_{bus}_{h}"),
                vec![(e_soc, 1.0), (r_eu, -tech.t_es)],
                Relation::Ge,
                0.0,
            ));
            s.p_ch.push(p_ch);
            s.p_dis.push(p_dis);
            s.r_eu.push(r_eu);
            s.r_ed.push(r_ed);
            s.e_soc.push(e_soc);
        }

        let balance: Vec<RowId> = bal
            .into_iter()
            .enumerate()
            .map(|(b, terms)| {
                let bus = &net.buses[b];
                let rhs = day.demand_at(bus, t) - day.renewable_at(bus, t);
                lp.add_row(format!("{prefix}bal_{bus}_{h}"), terms, Relation::Eq, rhs)
            })
            .collect();

        let requirement: f64 = net
            .buses
            .iter()
            .map(|b| day.phi_r * day.renewable_at(b, t) + day.phi_d * day.demand_at(b, t))
            .sum();
        di.reg_up.push(lp.add_row(format!("{prefix}regup_{h}"), up_terms, Relation::Ge, requirement));
        di.reg_down.push(lp.add_row(format!("{prefix}regdn_{h}"), down_terms, Relation::Ge, requirement));

        for (i, g) in net.generators.iter().enumerate() {
            lp.add_row(
                format!("{prefix}gmax_{}_{h}", g.id),
                vec![(pg[i], 1.0), (rgu[i], 1.0)],
                Relation::Le,
                g.g_max,
            );
            lp.add_row(
                format!("{prefix}gmin_{}_{h}", g.id),
                vec![(pg[i], 1.0), (rgd[i], -1.0)],
                Relation::Ge,
                g.g_min,
            );
            if let Some(prev) = di.p_g.last() {
                lp.add_row(
                    format!("{prefix}rampup_{}_{h}", g.id),
                    vec![(pg[i], 1.0), (prev[i], -1.0)],
                    Relation::Le,
                    g.ramp_up,
                );
                lp.add_row(
                    format!("{prefix}rampdn_{}_{h}", g.id),
                    vec![(pg[i], 1.0), (prev[i], -1.0)],
                    Relation::Ge,
                    -g.ramp_down,
                );
            }
        }
        for (l, line) in net.lines.iter().enumerate() {
            let (o, r) = (idx[line.from.as_str()], idx[line.to.as_str()]);
            let k = 1.0 / line.reactance;
            lp.add_row(
                format!("{prefix}flow_{}_{h}", line.id),
                vec![(flow[l], 1.0), (theta[o], -k), (theta[r], k)],
                Relation::Eq,
                0.0,
            );
        }

        di.p_g.push(pg);
        di.r_gu.push(rgu);
        di.r_gd.push(rgd);
        di.p_rs.push(prs);
        di.theta.push(theta);
        di.flow.push(flow);
        di.balance.push(balance);
    }
    di
}

/// A day's dispatch LP together with its column/row handles.
#[derive(Debug, Clone)]
pub struct EdProblem {
    pub lp: LinearProgram,
    pub(crate) index: DayIndex,
}

fn check_plan_buses(net: &Network, plan: &Plan) -> Result<(), DispatchError> {
    let idx = net.bus_index();
    for bus in plan.ratings.keys() {
        if !idx.contains_key(bus.as_str()) {
            return Err(DispatchError::UnknownBus(bus.clone()));
        }
        if plan.is_installed(bus) && !net.candidate_buses.contains(bus) {
            return Err(DispatchError::NotCandidate(bus.clone()));
        }
    }
    Ok(())
}

/// Builds the economic dispatch LP of one typical day at a fixed plan.
/// Storage variables and rows exist only at installed buses.
pub fn build_ed(
    net: &Network,
    day: &TypicalDay,
    plan: &Plan,
    tech: &StorageTech,
) -> Result<EdProblem, DispatchError> {
    check_plan_buses(net, plan)?;
    Ok(build_hours(net, day, plan, tech, day.hours))
}

fn build_hours(net: &Network, day: &TypicalDay, plan: &Plan, tech: &StorageTech, hours: usize) -> EdProblem {
    let mut lp = LinearProgram::new();
    let index = add_day(&mut lp, net, day, tech, &RatingSource::Fixed(plan), hours, 1.0, "");
    EdProblem { lp, index }
}

/// Storage schedule and rating duals at one installed bus. Dual values
/// follow the sign convention of the rating rows: `phi_*` are nonpositive,
/// `psi_soc` is nonnegative.
#[derive(Debug, Clone, Serialize)]
pub struct StorageDispatch {
    pub bus: BusId,
    /// LMP at this bus per hour.
    pub lmp: Vec<f64>,
    pub p_ch: Vec<f64>,
    pub p_dis: Vec<f64>,
    pub r_eu: Vec<f64>,
    pub r_ed: Vec<f64>,
    pub e_soc: Vec<f64>,
    pub phi_ch: Vec<f64>,
    pub phi_dis: Vec<f64>,
    pub phi_soc: Vec<f64>,
    pub psi_soc: Vec<f64>,
    pub gamma_e: Vec<f64>,
}

/// Primal schedule and prices of one day. Tables are indexed
/// `[hour][entity]` in network order.
#[derive(Debug, Clone, Serialize)]
pub struct DispatchSolution {
    pub day: String,
    pub hours: usize,
    pub p_g: Vec<Vec<f64>>,
    pub r_gu: Vec<Vec<f64>>,
    pub r_gd: Vec<Vec<f64>>,
    pub p_rs: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
    pub flow: Vec<Vec<f64>>,
    pub lmp: Vec<Vec<f64>>,
    pub lambda_ru: Vec<f64>,
    pub lambda_rd: Vec<f64>,
    pub storage: Vec<StorageDispatch>,
    /// Operating cost C^P of the day (unweighted).
    pub cost: f64,
    pub duality_gap: f64,
    pub iterations: usize,
}

impl DispatchSolution {
    pub fn storage_at(&self, bus: &str) -> Option<&StorageDispatch> {
        self.storage.iter().find(|s| s.bus == bus)
    }
}

fn values(sol: &LpSolution, vars: &[VarId]) -> Vec<f64> {
    vars.iter().map(|&v| sol.value(v)).collect()
}

fn duals(sol: &LpSolution, rows: &[RowId]) -> Vec<f64> {
    rows.iter().map(|&r| sol.dual(r)).collect()
}

fn table(sol: &LpSolution, vars: &[Vec<VarId>]) -> Vec<Vec<f64>> {
    vars.iter().map(|row| values(sol, row)).collect()
}

pub(crate) fn extract(
    net: &Network,
    day: &TypicalDay,
    index: &DayIndex,
    sol: &LpSolution,
    cost: f64,
    gap: f64,
) -> DispatchSolution {
    DispatchSolution {
        day: day.id.clone(),
        hours: index.hours,
        p_g: table(sol, &index.p_g),
        r_gu: table(sol, &index.r_gu),
        r_gd: table(sol, &index.r_gd),
        p_rs: table(sol, &index.p_rs),
        theta: table(sol, &index.theta),
        flow: table(sol, &index.flow),
        lmp: index.balance.iter().map(|r| duals(sol, r)).collect(),
        lambda_ru: duals(sol, &index.reg_up),
        lambda_rd: duals(sol, &index.reg_down),
        storage: index
            .storage
            .iter()
            .map(|s| StorageDispatch {
                bus: net.buses[s.bus].clone(),
                lmp: duals(sol, &index.balance.iter().map(|r| r[s.bus]).collect::<Vec<_>>()),
                p_ch: values(sol, &s.p_ch),
                p_dis: values(sol, &s.p_dis),
                r_eu: values(sol, &s.r_eu),
                r_ed: values(sol, &s.r_ed),
                e_soc: values(sol, &s.e_soc),
                phi_ch: duals(sol, &s.ch_row),
                phi_dis: duals(sol, &s.dis_row),
                phi_soc: duals(sol, &s.soc_max_row),
                psi_soc: duals(sol, &s.soc_min_row),
                gamma_e: duals(sol, &s.soc_row),
            })
            .collect(),
        cost,
        duality_gap: gap,
        iterations: sol.iterations,
    }
}

/// Solves one day's dispatch. An infeasible day is reported with the first
/// hour from which no feasible schedule exists.
pub fn solve_ed(
    net: &Network,
    day: &TypicalDay,
    plan: &Plan,
    tech: &StorageTech,
) -> Result<DispatchSolution, DispatchError> {
    let problem = build_ed(net, day, plan, tech)?;
    let sol = lp::solve(&problem.lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(DispatchError::Infeasible {
                day: day.id.clone(),
                hour: first_infeasible_hour(net, day, plan, tech),
            })
        }
        LpStatus::Unbounded => return Err(DispatchError::Unbounded { day: day.id.clone() }),
        LpStatus::IterationLimit => {
            return Err(DispatchError::IterationLimit { day: day.id.clone() })
        }
    }
    let gap = lp::duality_gap(&sol, &problem.lp)?;
    Ok(extract(net, day, &problem.index, &sol, sol.objective, gap))
}

/// Smallest `h` such that hours `1..=h` admit no feasible dispatch.
fn first_infeasible_hour(net: &Network, day: &TypicalDay, plan: &Plan, tech: &StorageTech) -> usize {
    let feasible = |h: usize| {
        let p = build_hours(net, day, plan, tech, h);
        matches!(lp::solve(&p.lp), Ok(s) if s.status != LpStatus::Infeasible)
    };
    let (mut lo, mut hi) = (0usize, day.hours);
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Solves every day at the plan. Days run concurrently when the
/// `parallel` feature is enabled; results keep the input order.
pub fn solve_days(
    net: &Network,
    days: &[TypicalDay],
    plan: &Plan,
    tech: &StorageTech,
) -> Result<Vec<DispatchSolution>, DispatchError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        days.par_iter()
            .map(|d| solve_ed(net, d, plan, tech))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        days.iter().map(|d| solve_ed(net, d, plan, tech)).collect()
    }
}

/// Storage operating profit of one day, weighted by `weight`.
pub fn storage_revenue(sol: &DispatchSolution, tech: &StorageTech, weight: f64) -> f64 {
    let mut total = 0.0;
    for s in &sol.storage {
        for t in 0..sol.hours {
            let lmp = s.lmp[t];
            total += s.p_dis[t] * lmp * tech.eta_dis - s.p_ch[t] * lmp / tech.eta_ch
                + s.r_eu[t] * sol.lambda_ru[t] * tech.eta_dis
                + s.r_ed[t] * sol.lambda_rd[t] / tech.eta_ch
                - tech.c_dis * s.p_dis[t]
                - tech.c_ch * s.p_ch[t]
                - tech.c_eu * s.r_eu[t]
                - tech.c_ed * s.r_ed[t];
        }
    }
    weight * total
}

/// Least round-trip operating cost `c_dis + c_ch` that rules out
/// simultaneous charging and discharging at price `lmp`.
pub fn simultaneity_threshold(tech: &StorageTech, lmp: f64) -> f64 {
    -(1.0 / tech.eta_ch - tech.eta_dis) * lmp
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SimultaneityReport {
    /// `(hour, bus)` pairs (1-based hours) with both charge and discharge
    /// above [`SIMULTANEITY_EPS`].
    pub violations: Vec<(usize, BusId)>,
    /// `(hour, bus, lmp)` where the sufficient no-simultaneity condition
    /// fails.
    pub condition_failures: Vec<(usize, BusId, f64)>,
}

/// Reports simultaneous charge/discharge and the hours where the
/// sufficient condition `c_dis + c_ch > -(1/eta_ch - eta_dis) * lmp` fails.
pub fn check_no_simultaneous(sol: &DispatchSolution, tech: &StorageTech) -> SimultaneityReport {
    let mut rep = SimultaneityReport::default();
    for s in &sol.storage {
        for t in 0..sol.hours {
            if s.p_ch[t] > SIMULTANEITY_EPS && s.p_dis[t] > SIMULTANEITY_EPS {
                rep.violations.push((t + 1, s.bus.clone()));
            }
            let lmp = s.lmp[t];
            if tech.c_dis + tech.c_ch <= simultaneity_threshold(tech, lmp) {
                rep.condition_failures.push((t + 1, s.bus.clone(), lmp));
            }
        }
    }
    rep
}

/// Writes the primal schedule in long form: one line per
/// `(day, hour, entity, variable)`.
pub fn write_dispatch_csv<W: Write>(sols: &[DispatchSolution], net: &Network, w: W) -> Result<(), DispatchError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["day", "hour", "kind", "entity", "variable", "value"])?;
    for sol in sols {
        for t in 0..sol.hours {
            let h = (t + 1).to_string();
            let mut rec = |kind: &str, entity: &str, var: &str, v: f64| {
                out.write_record([sol.day.as_str(), h.as_str(), kind, entity, var, &v.to_string()])
            };
            for (i, g) in net.generators.iter().enumerate() {
                rec("generator", &g.id, "p_g", sol.p_g[t][i])?;
                rec("generator", &g.id, "r_gu", sol.r_gu[t][i])?;
                rec("generator", &g.id, "r_gd", sol.r_gd[t][i])?;
            }
            for (b, bus) in net.buses.iter().enumerate() {
                rec("bus", bus, "p_rs", sol.p_rs[t][b])?;
                rec("bus", bus, "theta", sol.theta[t][b])?;
            }
            for (l, line) in net.lines.iter().enumerate() {
                rec("line", &line.id, "f", sol.flow[t][l])?;
            }
            for s in &sol.storage {
                rec("storage", &s.bus, "p_ch", s.p_ch[t])?;
                rec("storage", &s.bus, "p_dis", s.p_dis[t])?;
                rec("storage", &s.bus, "r_eu", s.r_eu[t])?;
                rec("storage", &s.bus, "r_ed", s.r_ed[t])?;
                rec("storage", &s.bus, "e_soc", s.e_soc[t])?;
            }
        }
    }
    out.flush().map_err(|e| DispatchError::Csv(e.into()))?;
    Ok(())
}

/// Writes the price table: one line per `(day, hour, bus)`.
pub fn write_prices_csv<W: Write>(sols: &[DispatchSolution], net: &Network, w: W) -> Result<(), DispatchError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["day", "hour", "bus", "lmp", "lambda_ru", "lambda_rd"])?;
    for sol in sols {
        for t in 0..sol.hours {
            for (b, bus) in net.buses.iter().enumerate() {
                out.write_record([
                    sol.day.clone(),
                    (t + 1).to_string(),
                    bus.clone(),
                    sol.lmp[t][b].to_string(),
                    sol.lambda_ru[t].to_string(),
                    sol.lambda_rd[t].to_string(),
                ])?;
            }
        }
    }
    out.flush().map_err(|e| DispatchError::Csv(e.into()))?;
    Ok(())
}
