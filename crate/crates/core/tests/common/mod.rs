//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::Rng;
use storeplan::dispatch::{solve_days, storage_revenue, DispatchSolution};
use storeplan::instances::Instance;
use storeplan::model::Plan;
use storeplan::subgradient::{all_subgradients, revenue_identity, subgrad_installed, system_cost};

pub fn weights(inst: &Instance) -> Vec<f64> {
    inst.days.iter().map(|d| d.weight).collect()
}

/// System cost at a plan, ratio bounds not enforced.
pub fn cost_at(inst: &Instance, plan: &Plan) -> f64 {
    let sols = solve_days(&inst.network, &inst.days, plan, &inst.tech).unwrap();
    let costs: Vec<f64> = sols.iter().map(|s| s.cost).collect();
    system_cost(&costs, &weights(inst), plan, &inst.tech)
}

pub fn solve(inst: &Instance, plan: &Plan) -> Vec<DispatchSolution> {
    solve_days(&inst.network, &inst.days, plan, &inst.tech).unwrap()
}

/// One finite-difference probe of a single rating.
#[derive(Debug, Clone)]
pub struct FdSample {
    pub bus: String,
    pub coord: &'static str,
    pub analytic: f64,
    pub forward: f64,
    pub backward: f64,
    pub central: f64,
}

fn fd_tol(reference: f64) -> f64 {
    (1e-4 * reference.abs()).max(1e-3)
}

impl FdSample {
    /// One-sided slopes disagree: the cost has a kink within the step.
    pub fn degenerate(&self) -> bool {
        (self.forward - self.backward).abs() > fd_tol(self.central)
    }

    pub fn matches(&self) -> bool {
        (self.central - self.analytic).abs() <= fd_tol(self.analytic)
    }
}

/// Probes every installed rating of `plan` with step `h`.
pub fn fd_samples(inst: &Instance, plan: &Plan, h: f64) -> Vec<FdSample> {
    let sols = solve(inst, plan);
    let base = {
        let costs: Vec<f64> = sols.iter().map(|s| s.cost).collect();
        system_cost(&costs, &weights(inst), plan, &inst.tech)
    };
    let grads = subgrad_installed(&sols, &weights(inst), &inst.tech);
    let mut out = Vec::new();
    for bus in plan.installed() {
        let r = plan.get(bus);
        let g = grads[bus];
        for (coord, analytic) in [("p", g.g_p), ("e", g.g_e)] {
            let shifted = |d: f64| {
                let (p, e) = if coord == "p" { (r.power + d, r.energy) } else { (r.power, r.energy + d) };
                cost_at(inst, &plan.clone().with(bus, p, e))
            };
            let (up, down) = (shifted(h), shifted(-h));
            out.push(FdSample {
                bus: bus.to_string(),
                coord,
                analytic,
                forward: (up - base) / h,
                backward: (base - down) / h,
                central: (up - down) / (2.0 * h),
            });
        }
    }
    out
}

/// Storage at every candidate bus, ratio strictly inside the bounds.
pub fn interior_plan<R: Rng>(rng: &mut R, inst: &Instance) -> Plan {
    let t = &inst.tech;
    let mut plan = Plan::new();
    for bus in &inst.network.candidate_buses {
        let e = rng.gen_range(2.0..30.0);
        let rho = rng.gen_range(t.rho_min.max(0.2)..t.rho_max.min(2.0));
        plan.set(bus.clone(), rho * e, e);
    }
    plan
}

/// A ratio-feasible plan where each candidate is empty with probability
/// 0.3.
pub fn feasible_plan<R: Rng>(rng: &mut R, inst: &Instance, e_max: f64) -> Plan {
    let t = &inst.tech;
    let mut plan = Plan::new();
    for bus in &inst.network.candidate_buses {
        if rng.gen_bool(0.3) {
            continue;
        }
        let e = rng.gen_range(0.0..e_max);
        let rho = rng.gen_range(t.rho_min..=t.rho_max);
        plan.set(bus.clone(), rho * e, e);
    }
    plan
}

/// `(revenue from the schedule, revenue from the subgradients)`.
pub fn revenue_pair(inst: &Instance, plan: &Plan) -> (f64, f64) {
    let sols = solve(inst, plan);
    let w = weights(inst);
    let direct: f64 = sols.iter().zip(&w).map(|(s, &wj)| storage_revenue(s, &inst.tech, wj)).sum();
    let grads = all_subgradients(&inst.network, &inst.days, plan, &sols, &inst.tech).unwrap();
    (direct, revenue_identity(plan, &grads, &inst.tech))
}
