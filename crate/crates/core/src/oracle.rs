//! Monolithic single-level LP: investment and every day's dispatch in one
//! model. It is the reference the decomposition is checked and timed
//! against.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;
use web_time::Instant;

use crate::dispatch::{add_day, RatingSource};
use crate::lp::{self, LinearProgram, LpError, LpStatus, Relation, VarId};
use crate::model::{Network, Plan, StorageTech, TypicalDay};
use crate::planner::PlanResult;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("monolithic LP is infeasible")]
    Infeasible,
    #[error("monolithic LP ended with status {0:?}")]
    Status(LpStatus),
    #[error("oracle finds no saving ({oracle:.6}) but the decomposition saves {decomposition:.6}")]
    Inconsistent { oracle: f64, decomposition: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Size and timing of one monolithic solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonolithicStats {
    pub build_secs: f64,
    pub solve_secs: f64,
    pub rows: usize,
    pub cols: usize,
    pub nonzeros: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonolithicResult {
    pub plan: Plan,
    /// Optimal system cost: weighted operating cost plus investment cost.
    pub cost: f64,
    pub duality_gap: f64,
    pub stats: MonolithicStats,
}

struct Monolithic {
    lp: LinearProgram,
    ratings: HashMap<usize, (VarId, VarId)>,
}

/// Builds the single LP. With `priced = false` the ratings cost nothing
/// and have no ratio or budget rows.
fn build(net: &Network, days: &[TypicalDay], tech: &StorageTech, budget: Option<f64>, priced: bool) -> Monolithic {
    let mut lp = LinearProgram::new();
    let idx = net.bus_index();
    let inf = f64::INFINITY;
    let (cp, ce) = if priced { (tech.c_p, tech.c_e) } else { (0.0, 0.0) };
    let mut ratings = HashMap::new();
    let mut capital = Vec::new();
    for bus in &net.candidate_buses {
        let p = lp.add_var(format!("pR_{bus}"), 0.0, inf, cp);
        let e = lp.add_var(format!("eR_{bus}"), 0.0, inf, ce);
        if priced {
            lp.add_row(format!("rhomin_{bus}"), vec![(p, 1.0), (e, -tech.rho_min)], Relation::Ge, 0.0);
            lp.add_row(format!("rhomax_{bus}"), vec![(p, 1.0), (e, -tech.rho_max)], Relation::Le, 0.0);
        }
        capital.push((p, tech.c_p));
        capital.push((e, tech.c_e));
        ratings.insert(idx[bus.as_str()], (p, e));
    }
    if let (true, Some(b)) = (priced, budget) {
        lp.add_row("budget", capital, Relation::Le, b);
    }
    let source = RatingSource::Variables(&ratings);
    for (j, day) in days.iter().enumerate() {
        add_day(&mut lp, net, day, tech, &source, day.hours, day.weight, &format!("d{j}_"));
    }
    Monolithic { lp, ratings }
}

/// Solves investment and dispatch jointly for the least system cost.
pub fn solve_monolithic(
    net: &Network,
    days: &[TypicalDay],
    tech: &StorageTech,
    budget: Option<f64>,
) -> Result<MonolithicResult, OracleError> {
    let t0 = Instant::now();
    let m = build(net, days, tech, budget, true);
    let build_secs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let sol = lp::solve(&m.lp)?;
    let solve_secs = t1.elapsed().as_secs_f64();
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(OracleError::Infeasible),
        s => return Err(OracleError::Status(s)),
    }
    let mut plan = Plan::new();
    for bus in &net.candidate_buses {
        let (p, e) = m.ratings[&net.bus_index()[bus.as_str()]];
        let (p, e) = (sol.value(p).max(0.0), sol.value(e).max(0.0));
        if p > 0.0 || e > 0.0 {
            plan.set(bus.clone(), p, e);
        }
    }
    Ok(MonolithicResult {
        plan,
        cost: sol.objective,
        duality_gap: lp::duality_gap(&sol, &m.lp)?,
        stats: MonolithicStats {
            build_secs,
            solve_secs,
            rows: m.lp.num_rows(),
            cols: m.lp.num_vars(),
            nonzeros: m.lp.nnz(),
            iterations: sol.iterations,
        },
    })
}

/// Weighted operating cost with free, unlimited storage at every
/// candidate bus: a lower bound on the operating cost of any plan. Days
/// are solved separately.
pub fn operating_floor(net: &Network, days: &[TypicalDay], tech: &StorageTech) -> Result<f64, OracleError> {
    let one = |day: &TypicalDay| -> Result<f64, OracleError> {
        let m = build(net, std::slice::from_ref(day), tech, None, false);
        let sol = lp::solve(&m.lp)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.objective),
            LpStatus::Infeasible => Err(OracleError::Infeasible),
            s => Err(OracleError::Status(s)),
        }
    };
    #[cfg(feature = "parallel")]
    let costs: Vec<Result<f64, OracleError>> = {
        use rayon::prelude::*;
        days.par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let costs: Vec<Result<f64, OracleError>> = days.iter().map(one).collect();
    costs.into_iter().sum()
}

/// Saving of the decomposition relative to the oracle's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleComparison {
    pub baseline: f64,
    pub decomposition_cost: f64,
    pub oracle_cost: f64,
    pub decomposition_saving: f64,
    pub oracle_saving: f64,
    pub saving_ratio: f64,
    pub epsilon: f64,
    pub pass: bool,
}

/// Compares system costs against the baseline `C^S(0)`. The check passes
/// when the decomposition achieves at least `1 - epsilon` of the oracle's
/// saving.
pub fn compare_costs(
    decomposition_cost: f64,
    oracle_cost: f64,
    baseline: f64,
    epsilon: f64,
) -> Result<OracleComparison, OracleError> {
    let tol = 1e-9 * baseline.abs().max(1.0);
    let oracle_saving = baseline - oracle_cost;
    let decomposition_saving = baseline - decomposition_cost;
    let saving_ratio = if oracle_saving <= tol {
        if decomposition_saving > tol {
            return Err(OracleError::Inconsistent {
                oracle: oracle_saving,
                decomposition: decomposition_saving,
            });
        }
        1.0
    } else {
        decomposition_saving / oracle_saving
    };
    Ok(OracleComparison {
        baseline,
        decomposition_cost,
        oracle_cost,
        decomposition_saving,
        oracle_saving,
        saving_ratio,
        epsilon,
        pass: saving_ratio >= 1.0 - epsilon,
    })
}

/// [`compare_costs`] for a planner result.
pub fn compare_to_oracle(
    decomposition: &PlanResult,
    oracle_cost: f64,
    baseline: f64,
    epsilon: f64,
) -> Result<OracleComparison, OracleError> {
    compare_costs(decomposition.system_cost, oracle_cost, baseline, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_arithmetic() {
        let same = compare_costs(900.0, 900.0, 1000.0, 0.05).unwrap();
        assert_eq!(same.saving_ratio, 1.0);
        assert!(same.pass);
        let near = compare_costs(904.0, 900.0, 1000.0, 0.05).unwrap();
        assert!((near.saving_ratio - 0.96).abs() < 1e-12 && near.pass);
        let far = compare_costs(910.0, 900.0, 1000.0, 0.05).unwrap();
        assert!((far.saving_ratio - 0.9).abs() < 1e-12 && !far.pass);
        assert!(matches!(
            compare_costs(990.0, 1000.0, 1000.0, 0.05),
            Err(OracleError::Inconsistent { .. })
        ));
        assert!(compare_costs(1000.0, 1000.0, 1000.0, 0.05).unwrap().pass);
    }
}
