//! Browser bindings for the demo page: dispatch one day, run the planner,
//! and evaluate the no-simultaneity threshold.
//!
//! The plain functions return serializable views and are tested natively;
//! the `#[wasm_bindgen]` wrappers hand JSON strings to JavaScript.

use serde::Serialize;
use storeplan::dispatch::{self, check_no_simultaneous, simultaneity_threshold};
use storeplan::model::{self, Plan, StorageTech};
use storeplan::planner::{self, PlannerConfig};
use wasm_bindgen::prelude::*;

/// Input files of a bundled example.
#[derive(Debug, Clone, Serialize)]
pub struct Example {
    pub network: &'static str,
    pub days: &'static str,
    pub tech: &'static str,
    pub plan: &'static str,
}

macro_rules! bundled {
    ($dir:literal, $plan:expr) => {
        Example {
            network: include_str!(concat!("../../../data/", $dir, "/network.toml")),
            days: include_str!(concat!("../../../data/", $dir, "/days.toml")),
            tech: include_str!(concat!("../../../data/", $dir, "/tech.toml")),
            plan: $plan,
        }
    };
}

pub const EXAMPLES: [&str; 4] = ["m2", "m2-ladder", "negative-lmp", "m1"];

pub fn example(name: &str) -> Result<Example, String> {
    Ok(match name {
        "m1" => bundled!("m1", ""),
        "m2" => bundled!("m2", "[ratings.1]\npower = 10.0\nenergy = 10.0\n"),
        "m2-ladder" => bundled!("m2-ladder", "[ratings.1]\npower = 5.0\nenergy = 5.0\n"),
        "negative-lmp" => bundled!("negative-lmp", include_str!("../../../data/negative-lmp/plan.toml")),
        _ => return Err(format!("unknown example {name:?}")),
    })
}

fn parse_tech(text: &str) -> Result<StorageTech, String> {
    let name = text.trim();
    if let Some(t) = StorageTech::bundled(name) {
        return Ok(t);
    }
    model::parse_tech(text).map_err(|e| e.to_string())
}

fn parse_plan(text: &str) -> Result<Plan, String> {
    if text.trim().is_empty() {
        return Ok(Plan::new());
    }
    model::parse_plan(text).map_err(|e| e.to_string())
}

struct Inputs {
    network: model::Network,
    days: Vec<model::TypicalDay>,
    tech: StorageTech,
}

fn parse_inputs(network: &str, days: &str, tech: &str) -> Result<Inputs, String> {
    let network = model::parse_network(network).map_err(|e| e.to_string())?;
    let days = model::parse_days(days).map_err(|e| e.to_string())?;
    let tech = parse_tech(tech)?;
    let report = model::validate_network(&network, &days);
    if !report.is_valid() {
        return Err(report.violations.join("; "));
    }
    let issues = tech.validate();
    if !issues.is_empty() {
        return Err(issues.join("; "));
    }
    Ok(Inputs { network, days, tech })
}

#[derive(Debug, Clone, Serialize)]
pub struct StorageView {
    pub bus: String,
    pub p_ch: Vec<f64>,
    pub p_dis: Vec<f64>,
    pub e_soc: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DispatchView {
    pub day: String,
    pub cost: f64,
    pub duality_gap: f64,
    pub buses: Vec<String>,
    /// `[hour][bus]`.
    pub lmp: Vec<Vec<f64>>,
    pub storage: Vec<StorageView>,
    pub revenue: f64,
    /// 1-based hours with simultaneous charging and discharging.
    pub simultaneous_hours: Vec<usize>,
}

/// Solves day `day` (0-based) at the given plan.
pub fn dispatch_day(network: &str, days: &str, tech: &str, plan: &str, day: usize) -> Result<DispatchView, String> {
    let inp = parse_inputs(network, days, tech)?;
    let plan = parse_plan(plan)?;
    plan.check(&inp.network, &inp.tech).map_err(|e| e.to_string())?;
    let d = inp
        .days
        .get(day)
        .ok_or_else(|| format!("day index {day} out of range ({} days)", inp.days.len()))?;
    let sol = dispatch::solve_ed(&inp.network, d, &plan.snapped(), &inp.tech).map_err(|e| e.to_string())?;
    let simultaneous_hours = check_no_simultaneous(&sol, &inp.tech)
        .violations
        .into_iter()
        .map(|(h, _)| h)
        .collect();
    Ok(DispatchView {
        day: sol.day.clone(),
        cost: sol.cost,
        duality_gap: sol.duality_gap,
        buses: inp.network.buses.clone(),
        lmp: sol.lmp.clone(),
        storage: sol
            .storage
            .iter()
            .map(|s| StorageView {
                bus: s.bus.clone(),
                p_ch: s.p_ch.clone(),
                p_dis: s.p_dis.clone(),
                e_soc: s.e_soc.clone(),
            })
            .collect(),
        revenue: dispatch::storage_revenue(&sol, &inp.tech, 1.0),
        simultaneous_hours,
    })
}

/// Runs the rate-of-return planner and returns the report body as JSON.
pub fn plan_storage(network: &str, days: &str, tech: &str, epsilon: f64, chi: f64) -> Result<String, String> {
    let inp = parse_inputs(network, days, tech)?;
    let cfg = PlannerConfig {
        epsilon,
        chi,
        ..PlannerConfig::default()
    };
    let r = planner::outer_loop(&inp.network, &inp.days, &inp.tech, &cfg).map_err(|e| e.to_string())?;
    r.to_json().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThresholdView {
    pub eta_ch: f64,
    pub eta_dis: f64,
    /// Least `c_dis + c_ch` that rules out simultaneous operation.
    pub threshold: f64,
    pub holds: bool,
}

/// Threshold at `lmp` for a symmetric split of `round_trip`.
pub fn threshold(round_trip: f64, lmp: f64, marginal_cost: f64) -> Result<ThresholdView, String> {
    if !(round_trip > 0.0 && round_trip <= 1.0) {
        return Err(format!("round-trip efficiency must be in (0, 1], got {round_trip}"));
    }
    let eta_ch = round_trip.sqrt();
    let eta_dis = round_trip / eta_ch;
    let mut tech = StorageTech::libes();
    tech.eta_ch = eta_ch;
    tech.eta_dis = eta_dis;
    let threshold = simultaneity_threshold(&tech, lmp);
    Ok(ThresholdView {
        eta_ch,
        eta_dis,
        threshold,
        holds: marginal_cost > threshold,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = exampleJson)]
pub fn example_json(name: &str) -> Result<String, JsError> {
    to_js(example(name))
}

#[wasm_bindgen(js_name = dispatchJson)]
pub fn dispatch_json(network: &str, days: &str, tech: &str, plan: &str, day: usize) -> Result<String, JsError> {
    to_js(dispatch_day(network, days, tech, plan, day))
}

#[wasm_bindgen(js_name = planJson)]
pub fn plan_json(network: &str, days: &str, tech: &str, epsilon: f64, chi: f64) -> Result<String, JsError> {
    plan_storage(network, days, tech, epsilon, chi).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = thresholdJson)]
pub fn threshold_json(round_trip: f64, lmp: f64, marginal_cost: f64) -> Result<String, JsError> {
    to_js(threshold(round_trip, lmp, marginal_cost))
}
