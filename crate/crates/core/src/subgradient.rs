//! Investment subgradients of the system cost and the cuts built from them.
//!
//! Buses with installed storage take their subgradients from the rating-row
//! duals of the dispatch LPs. Empty candidate buses use a price-taker
//! subproblem for a marginal 1 MWh unit at the current prices.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dispatch::DispatchSolution;
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, RowId, VarId};
use crate::model::{BusId, Network, Plan, Rating, StorageTech, TypicalDay};

#[derive(Debug, Error)]
pub enum SubgradientError {
    #[error("bus {0} has no installed storage in the dispatch solutions")]
    NotInstalled(BusId),
    #[error("no subgradient supplied for candidate bus {0}")]
    MissingBus(BusId),
    #[error("unknown bus {0}")]
    UnknownBus(BusId),
    #[error("price-taker subproblem ended with status {0:?}")]
    Subproblem(LpStatus),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Which formula produced a bus subgradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Rating-row duals at an installed bus.
    Installed,
    /// Split of the price-taker optimum across power and energy.
    PriceTaker,
    /// Rating-row duals of the price-taker subproblem at its optimal ratio,
    /// used when the split does not under-estimate the price-taker cost.
    PriceTakerDual,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Installed => "BE",
            Branch::PriceTaker => "BN",
            Branch::PriceTakerDual => "BN-dual",
        })
    }
}

/// Subgradient of the system cost with respect to one bus's ratings,
/// capital cost included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BusSubgradient {
    pub g_p: f64,
    pub g_e: f64,
    pub branch: Branch,
}

/// Subgradients for installed buses:
/// `g_p = c_p + sum_j w_j sum_t (phi_ch + phi_dis)` and
/// `g_e = c_e + sum_j w_j sum_t phi_soc`.
pub fn subgrad_installed(
    sols: &[DispatchSolution],
    weights: &[f64],
    tech: &StorageTech,
) -> BTreeMap<BusId, BusSubgradient> {
    let mut out: BTreeMap<BusId, BusSubgradient> = BTreeMap::new();
    for (sol, &w) in sols.iter().zip(weights) {
        for s in &sol.storage {
            let entry = out.entry(s.bus.clone()).or_insert(BusSubgradient {
                g_p: tech.c_p,
                g_e: tech.c_e,
                branch: Branch::Installed,
            });
            entry.g_p += w * (s.phi_ch.iter().sum::<f64>() + s.phi_dis.iter().sum::<f64>());
            entry.g_e += w * s.phi_soc.iter().sum::<f64>();
        }
    }
    out
}

/// Installed-bus subgradient at one bus.
pub fn installed_at(
    sols: &[DispatchSolution],
    weights: &[f64],
    tech: &StorageTech,
    bus: &str,
) -> Result<BusSubgradient, SubgradientError> {
    subgrad_installed(sols, weights, tech)
        .remove(bus)
        .ok_or_else(|| SubgradientError::NotInstalled(bus.to_string()))
}

/// Prices seen by a price-taking unit at one bus on one typical day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPrices {
    pub weight: f64,
    pub lmp: Vec<f64>,
    pub lambda_ru: Vec<f64>,
    pub lambda_rd: Vec<f64>,
}

impl DayPrices {
    /// Prices at bus index `b` of a solved day.
    pub fn at_bus(sol: &DispatchSolution, b: usize, weight: f64) -> DayPrices {
        DayPrices {
            weight,
            lmp: sol.lmp.iter().map(|row| row[b]).collect(),
            lambda_ru: sol.lambda_ru.clone(),
            lambda_rd: sol.lambda_rd.clone(),
        }
    }
}

/// Price-taker optimum for one bus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sgsp {
    /// Net daily cost of the best marginal 1 MWh unit, capital included.
    pub g0: f64,
    /// Its power-to-energy ratio.
    pub rho0: f64,
    /// Weighted operating profit of that unit.
    pub profit: f64,
}

struct UnitLp {
    lp: LinearProgram,
    rho: VarId,
    power_rows: Vec<RowId>,
    energy_rows: Vec<RowId>,
}

/// Operating model of one storage unit with `e^R = 1`, paid the given
/// prices. The objective is the negated weighted profit plus
/// `power_cost * rho`; the constant energy cost is left out.
fn unit_lp(prices: &[DayPrices], tech: &StorageTech, power_cost: f64, rho: (f64, f64)) -> UnitLp {
    let mut lp = LinearProgram::new();
    let inf = f64::INFINITY;
    let rho_var = lp.add_var("rho", rho.0, rho.1, power_cost);
    let mut power_rows = Vec::new();
    let mut energy_rows = Vec::new();
    for (j, day) in prices.iter().enumerate() {
        let w = day.weight;
        let mut prev: Option<VarId> = None;
        for t in 0..day.lmp.len() {
            let h = t + 1;
            let (lmp, ru, rd) = (day.lmp[t], day.lambda_ru[t], day.lambda_rd[t]);
            let p_ch = lp.add_var(format!("pch_{j}_{h}"), 0.0, inf, w * (tech.c_ch + lmp / tech.eta_ch));
            let p_dis = lp.add_var(format!("pdis_{j}_{h}"), 0.0, inf, w * (tech.c_dis - lmp * tech.eta_dis));
            let r_eu = lp.add_var(format!("reu_{j}_{h}"), 0.0, inf, w * (tech.c_eu - ru * tech.eta_dis));
            let r_ed = lp.add_var(format!("red_{j}_{h}"), 0.0, inf, w * (tech.c_ed - rd / tech.eta_ch));
            let e = lp.add_var(format!("e_{j}_{h}"), -inf, inf, 0.0);
            let mut soc = vec![(e, 1.0), (p_ch, -1.0), (p_dis, 1.0)];
            if let Some(p) = prev {
                soc.push((p, -1.0));
            }
            lp.add_row(format!("soc_{j}_{h}"), soc, Relation::Eq, 0.0);
            power_rows.push(lp.add_row(
                format!("chcap_{j}_{h}"),
                vec![(p_ch, 1.0), (r_ed, 1.0), (rho_var, -1.0)],
                Relation::Le,
                0.0,
            ));
            power_rows.push(lp.add_row(
                format!("discap_{j}_{h}"),
                vec![(p_dis, 1.0), (r_eu, 1.0), (rho_var, -1.0)],
                Relation::Le,
                0.0,
            ));
            energy_rows.push(lp.add_row(
                format!("socmax_{j}_{h}"),
                vec![(e, 1.0), (r_ed, tech.t_es)],
                Relation::Le,
                1.0,
            ));
            lp.add_row(
                format!("socmin_{j}_{h}"),
                vec![(e, 1.0), (r_eu, -tech.t_es)],
                Relation::Ge,
                0.0,
            );
            prev = Some(e);
        }
    }
    UnitLp {
        lp,
        rho: rho_var,
        power_rows,
        energy_rows,
    }
}

fn solve_unit(unit: &UnitLp) -> Result<lp::LpSolution, SubgradientError> {
    let sol = lp::solve(&unit.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(SubgradientError::Subproblem(sol.status));
    }
    Ok(sol)
}

/// Solves the price-taker subproblem at one bus: the least net daily cost
/// `g0 = c_p rho + c_e - profit` of a 1 MWh unit over `rho` in the
/// technology's ratio range.
pub fn solve_sgsp(prices: &[DayPrices], tech: &StorageTech) -> Result<Sgsp, SubgradientError> {
    let unit = unit_lp(prices, tech, tech.c_p, (tech.rho_min, tech.rho_max));
    let sol = solve_unit(&unit)?;
    let rho0 = sol.value(unit.rho);
    let g0 = sol.objective + tech.c_e;
    Ok(Sgsp {
        g0,
        rho0,
        profit: tech.c_p * rho0 + tech.c_e - g0,
    })
}

/// Splits `g0` into power and energy components with ratio `rho0`.
pub fn split_subgradient(g0: f64, rho0: f64) -> (f64, f64) {
    (g0 * rho0 / (1.0 + rho0), g0 / (1.0 + rho0))
}

/// Minimum over the ratio range of the price-taker cost of a 1 MWh unit
/// minus the linear estimate `g_p rho + g_e`. Nonnegative when the pair
/// under-estimates the cost of every unit size.
pub fn price_taker_slack(prices: &[DayPrices], tech: &StorageTech, g_p: f64, g_e: f64) -> Result<f64, SubgradientError> {
    let unit = unit_lp(prices, tech, tech.c_p - g_p, (tech.rho_min, tech.rho_max));
    let sol = solve_unit(&unit)?;
    Ok(sol.objective + tech.c_e - g_e)
}

/// Subgradient of the price-taker cost at the fixed ratio `rho`, read off
/// the rating-row duals.
pub fn price_taker_dual(prices: &[DayPrices], tech: &StorageTech, rho: f64) -> Result<(f64, f64), SubgradientError> {
    let unit = unit_lp(prices, tech, tech.c_p, (rho, rho));
    let sol = solve_unit(&unit)?;
    let h_p: f64 = unit.power_rows.iter().map(|&r| sol.dual(r)).sum();
    let h_e: f64 = unit.energy_rows.iter().map(|&r| sol.dual(r)).sum();
    Ok((tech.c_p + h_p, tech.c_e + h_e))
}

/// Subgradient for an empty candidate bus. The split price-taker value is
/// used when it is a valid under-estimator, otherwise the dual-based one.
pub fn subgrad_empty(prices: &[DayPrices], tech: &StorageTech) -> Result<BusSubgradient, SubgradientError> {
    let sgsp = solve_sgsp(prices, tech)?;
    let (g_p, g_e) = split_subgradient(sgsp.g0, sgsp.rho0);
    let scale = 1.0 + tech.c_p.abs() + tech.c_e.abs() + sgsp.profit.abs();
    let slack = price_taker_slack(prices, tech, g_p, g_e)?;
    if slack >= -1e-9 * scale {
        return Ok(BusSubgradient {
            g_p,
            g_e,
            branch: Branch::PriceTaker,
        });
    }
    log::debug!("price-taker split under-estimate fails by {slack:.3e}, using duals");
    let (g_p, g_e) = price_taker_dual(prices, tech, sgsp.rho0)?;
    Ok(BusSubgradient {
        g_p,
        g_e,
        branch: Branch::PriceTakerDual,
    })
}

/// Storage revenue recovered from installed-bus subgradients:
/// `-sum_b [(g_p - c_p) p_b + (g_e - c_e) e_b]`.
pub fn revenue_identity(plan: &Plan, subgrads: &BTreeMap<BusId, BusSubgradient>, tech: &StorageTech) -> f64 {
    -plan
        .installed()
        .into_iter()
        .filter_map(|b| subgrads.get(b).map(|g| (plan.get(b), g)))
        .map(|(r, g)| (g.g_p - tech.c_p) * r.power + (g.g_e - tech.c_e) * r.energy)
        .sum::<f64>()
}

/// A supporting hyperplane of the system cost at a sampled plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub iteration: usize,
    /// Candidate buses, in network order.
    pub buses: Vec<BusId>,
    /// Ratings `(p, e)` at the sampled plan, aligned with `buses`.
    pub point: Vec<(f64, f64)>,
    /// Sampled system cost: weighted operating cost plus investment cost.
    pub cost: f64,
    /// `(g_p, g_e)` aligned with `buses`.
    pub gradient: Vec<(f64, f64)>,
    pub branch: Vec<Branch>,
}

impl Cut {
    /// Value of the linear model at `plan`.
    pub fn value_at(&self, plan: &Plan) -> f64 {
        let mut v = self.cost;
        for ((bus, &(p0, e0)), &(gp, ge)) in self.buses.iter().zip(&self.point).zip(&self.gradient) {
            let r = plan.get(bus);
            v += gp * (r.power - p0) + ge * (r.energy - e0);
        }
        v
    }
}

/// Weighted operating cost plus investment cost.
pub fn system_cost(op_costs: &[f64], weights: &[f64], plan: &Plan, tech: &StorageTech) -> f64 {
    let op: f64 = op_costs.iter().zip(weights).map(|(c, w)| c * w).sum();
    op + plan.investment_cost(tech)
}

/// Stacks one subgradient per candidate bus into a cut at `plan`.
pub fn assemble_cut(
    net: &Network,
    plan: &Plan,
    op_costs: &[f64],
    weights: &[f64],
    tech: &StorageTech,
    subgrads: &BTreeMap<BusId, BusSubgradient>,
    iteration: usize,
) -> Result<Cut, SubgradientError> {
    let mut cut = Cut {
        iteration,
        buses: Vec::new(),
        point: Vec::new(),
        cost: system_cost(op_costs, weights, plan, tech),
        gradient: Vec::new(),
        branch: Vec::new(),
    };
    for bus in &net.candidate_buses {
        let g = subgrads
            .get(bus)
            .ok_or_else(|| SubgradientError::MissingBus(bus.clone()))?;
        let Rating { power, energy } = plan.get(bus);
        cut.buses.push(bus.clone());
        cut.point.push((power, energy));
        cut.gradient.push((g.g_p, g.g_e));
        cut.branch.push(g.branch);
    }
    Ok(cut)
}

/// Subgradients for every candidate bus at a plan whose days are solved.
/// Empty buses solve their price-taker subproblems concurrently when the
/// `parallel` feature is on.
pub fn all_subgradients(
    net: &Network,
    days: &[TypicalDay],
    plan: &Plan,
    sols: &[DispatchSolution],
    tech: &StorageTech,
) -> Result<BTreeMap<BusId, BusSubgradient>, SubgradientError> {
    let weights: Vec<f64> = days.iter().map(|d| d.weight).collect();
    let mut out = subgrad_installed(sols, &weights, tech);
    let idx = net.bus_index();
    let mut empty = Vec::new();
    for bus in &net.candidate_buses {
        if !plan.is_installed(bus) {
            let b = *idx
                .get(bus.as_str())
                .ok_or_else(|| SubgradientError::UnknownBus(bus.clone()))?;
            empty.push((bus.clone(), b));
        }
    }
    let solve = |(bus, b): &(BusId, usize)| -> Result<(BusId, BusSubgradient), SubgradientError> {
        let prices: Vec<DayPrices> = sols
            .iter()
            .zip(&weights)
            .map(|(s, &w)| DayPrices::at_bus(s, *b, w))
            .collect();
        Ok((bus.clone(), subgrad_empty(&prices, tech)?))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        empty.par_iter().map(solve).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = empty.iter().map(solve).collect();
    for r in results {
        let (bus, g) = r?;
        out.insert(bus, g);
    }
    Ok(out)
}

/// Writes one line per `(iteration, bus)` with the cut's subgradient.
pub fn write_cuts_csv<W: Write>(cuts: &[Cut], w: W) -> Result<(), SubgradientError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["iteration", "bus", "p", "e", "g_p", "g_e", "branch", "cost"])?;
    for cut in cuts {
        for (k, bus) in cut.buses.iter().enumerate() {
            out.write_record([
                cut.iteration.to_string(),
                bus.clone(),
                cut.point[k].0.to_string(),
                cut.point[k].1.to_string(),
                cut.gradient[k].0.to_string(),
                cut.gradient[k].1.to_string(),
                cut.branch[k].to_string(),
                cut.cost.to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| SubgradientError::Csv(e.into()))?;
    Ok(())
}
