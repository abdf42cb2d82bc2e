//! Network, typical-day, storage-technology and plan types, their
//! validation, TOML file IO, and the storage cost-model helpers.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

pub type BusId = String;

/// Ratings below this many MW are treated as no installation.
pub const INSTALL_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("serialization failed: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("lifetime must be positive, got {0}")]
    NonPositiveLifetime(f64),
    #[error("interest rate must be non-negative, got {0}")]
    NegativeInterest(f64),
    #[error("depth-of-discharge range must be in (0, 1], got {0}")]
    InvalidDodRange(f64),
    #[error("bus {bus}: {reason}")]
    InvalidPlan { bus: BusId, reason: String },
}

/// Bus ids may be written as bare integers or strings in input files.
fn id_string<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Int(i64),
        Str(String),
    }
    Ok(match Raw::deserialize(d)? {
        Raw::Int(v) => v.to_string(),
        Raw::Str(s) => s,
    })
}

fn id_strings<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    struct Wrap(#[serde(deserialize_with = "id_string")] String);
    Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    #[serde(deserialize_with = "id_string")]
    pub from: BusId,
    #[serde(deserialize_with = "id_string")]
    pub to: BusId,
    /// Per-unit reactance.
    pub reactance: f64,
    /// Thermal limit, MW.
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    #[serde(deserialize_with = "id_string")]
    pub bus: BusId,
    pub g_max: f64,
    #[serde(default)]
    pub g_min: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Energy cost, money/MWh.
    pub c_g: f64,
    #[serde(default)]
    pub c_gu: f64,
    #[serde(default)]
    pub c_gd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    #[serde(deserialize_with = "id_strings")]
    pub buses: Vec<BusId>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(deserialize_with = "id_strings")]
    pub candidate_buses: Vec<BusId>,
}

impl Network {
    pub fn bus_index(&self) -> HashMap<&str, usize> {
        self.buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.as_str(), i))
            .collect()
    }
}

fn default_hours() -> usize {
    24
}

fn default_phi_d() -> f64 {
    0.03
}

fn default_phi_r() -> f64 {
    0.05
}

/// A weighted representative day. Profile tables are keyed by bus id; a bus
/// missing from a table has an all-zero profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalDay {
    pub id: String,
    pub weight: f64,
    #[serde(default = "default_hours")]
    pub hours: usize,
    #[serde(default)]
    pub demand: BTreeMap<BusId, Vec<f64>>,
    #[serde(default)]
    pub renewable: BTreeMap<BusId, Vec<f64>>,
    #[serde(default)]
    pub spill_max: BTreeMap<BusId, Vec<f64>>,
    #[serde(default)]
    pub c_rs: f64,
    #[serde(default = "default_phi_d")]
    pub phi_d: f64,
    #[serde(default = "default_phi_r")]
    pub phi_r: f64,
}

fn profile_at(table: &BTreeMap<BusId, Vec<f64>>, bus: &str, t: usize) -> f64 {
    table.get(bus).and_then(|v| v.get(t)).copied().unwrap_or(0.0)
}

impl TypicalDay {
    pub fn demand_at(&self, bus: &str, t: usize) -> f64 {
        profile_at(&self.demand, bus, t)
    }

    pub fn renewable_at(&self, bus: &str, t: usize) -> f64 {
        profile_at(&self.renewable, bus, t)
    }

    pub fn spill_max_at(&self, bus: &str, t: usize) -> f64 {
        profile_at(&self.spill_max, bus, t)
    }

    pub fn total_demand(&self, t: usize) -> f64 {
        self.demand.values().filter_map(|v| v.get(t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageTech {
    #[serde(default)]
    pub name: String,
    /// Prorated power-rating capital cost, money/(MW·day).
    pub c_p: f64,
    /// Prorated energy-rating capital cost, money/(MWh·day).
    pub c_e: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub eta_ch: f64,
    pub eta_dis: f64,
    #[serde(default)]
    pub c_dis: f64,
    #[serde(default)]
    pub c_ch: f64,
    #[serde(default)]
    pub c_eu: f64,
    #[serde(default)]
    pub c_ed: f64,
    pub t_es: f64,
    pub t_ru: f64,
    pub t_rd: f64,
}

/// Table I capital costs are quoted per kW/kWh over a 20 year life.
const TABLE_LIFETIME: f64 = 20.0;
const TABLE_INTEREST: f64 = 0.05;
/// Regulation ramp window for generators, h.
const DEFAULT_REG_WINDOW: f64 = 1.0 / 6.0;
/// Linear fit of LMO cycle-life loss per kWh discharged.
pub const LMO_FIT_SLOPE: f64 = 1.5e-4;

fn split_round_trip(round_trip: f64) -> (f64, f64) {
    let eta_ch = round_trip.sqrt();
    (eta_ch, round_trip / eta_ch)
}

impl StorageTech {
    pub fn round_trip(&self) -> f64 {
        self.eta_ch * self.eta_dis
    }

    /// Above-ground advanced adiabatic compressed air storage.
    pub fn aa_caes() -> StorageTech {
        let (eta_ch, eta_dis) = split_round_trip(0.72);
        StorageTech {
            name: "AA-CAES".into(),
            c_p: prorate_capital_cost(1250.0 * 1000.0, TABLE_INTEREST, TABLE_LIFETIME)
                .expect("constant inputs are valid"),
            c_e: prorate_capital_cost(150.0 * 1000.0, TABLE_INTEREST, TABLE_LIFETIME)
                .expect("constant inputs are valid"),
            rho_min: 0.05,
            rho_max: 0.25,
            eta_ch,
            eta_dis,
            c_dis: 0.0,
            c_ch: 0.0,
            c_eu: 0.0,
            c_ed: 0.0,
            t_es: 1.0,
            t_ru: DEFAULT_REG_WINDOW,
            t_rd: DEFAULT_REG_WINDOW,
        }
    }

    /// Lithium-ion battery storage. The energy rating is oversized by 1/0.7
    /// to keep cells inside the 20-90% SoC window.
    pub fn libes() -> StorageTech {
        let (eta_ch, eta_dis) = split_round_trip(0.9);
        let c_dis = libes_marginal_cost(406.0, 0.7, LMO_FIT_SLOPE).expect("constant inputs are valid");
        StorageTech {
            name: "LiBES".into(),
            c_p: prorate_capital_cost(409.0 * 1000.0, TABLE_INTEREST, TABLE_LIFETIME)
                .expect("constant inputs are valid"),
            c_e: prorate_capital_cost(468.0 * 1000.0, TABLE_INTEREST, TABLE_LIFETIME)
                .expect("constant inputs are valid")
                / 0.7,
            rho_min: 0.1,
            rho_max: 4.0,
            eta_ch,
            eta_dis,
            c_dis,
            c_ch: 0.0,
            c_eu: 0.1 * c_dis,
            c_ed: 0.0,
            t_es: 1.0,
            t_ru: DEFAULT_REG_WINDOW,
            t_rd: DEFAULT_REG_WINDOW,
        }
    }

    /// Looks up a bundled technology by name (case-insensitive).
    pub fn bundled(name: &str) -> Option<StorageTech> {
        match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "aa-caes" | "caes" => Some(Self::aa_caes()),
            "libes" | "li-ion" => Some(Self::libes()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.rho_min > 0.0 && self.rho_min <= self.rho_max) {
            v.push(format!(
                "tech: need 0 < rho_min <= rho_max, got [{}, {}]",
                self.rho_min, self.rho_max
            ));
        }
        for (name, eta) in [("eta_ch", self.eta_ch), ("eta_dis", self.eta_dis)] {
            if !(eta > 0.0 && eta <= 1.0) {
                v.push(format!("tech: {name} must be in (0, 1], got {eta}"));
            }
        }
        for (name, c) in [
            ("c_p", self.c_p),
            ("c_e", self.c_e),
            ("c_dis", self.c_dis),
            ("c_ch", self.c_ch),
            ("c_eu", self.c_eu),
            ("c_ed", self.c_ed),
        ] {
            if !(c >= 0.0 && c.is_finite()) {
                v.push(format!("tech: {name} must be non-negative, got {c}"));
            }
        }
        if !(self.t_es > 0.0) {
            v.push(format!("tech: t_es must be positive, got {}", self.t_es));
        }
        if !(self.t_ru >= 0.0 && self.t_rd >= 0.0) {
            v.push("tech: t_ru and t_rd must be non-negative".to_string());
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rating {
    /// Power rating p^R, MW.
    pub power: f64,
    /// Energy rating e^R, MWh.
    pub energy: f64,
}

/// Storage installation per bus. Buses not present have no storage.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Plan {
    #[serde(default)]
    pub ratings: BTreeMap<BusId, Rating>,
}

impl Plan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, bus: impl Into<BusId>, power: f64, energy: f64) -> Self {
        self.set(bus, power, energy);
        self
    }

    pub fn set(&mut self, bus: impl Into<BusId>, power: f64, energy: f64) {
        self.ratings.insert(bus.into(), Rating { power, energy });
    }

    pub fn get(&self, bus: &str) -> Rating {
        self.ratings.get(bus).copied().unwrap_or_default()
    }

    /// Whether the bus counts as having storage installed.
    pub fn is_installed(&self, bus: &str) -> bool {
        self.get(bus).power > INSTALL_THRESHOLD
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.keys().all(|b| !self.is_installed(b))
    }

    /// Installed buses in id order.
    pub fn installed(&self) -> Vec<&str> {
        self.ratings
            .keys()
            .filter(|b| self.is_installed(b))
            .map(|b| b.as_str())
            .collect()
    }

    /// Investment cost C^E, money/day.
    pub fn investment_cost(&self, tech: &StorageTech) -> f64 {
        self.ratings
            .values()
            .fold(0.0, |acc, r| acc + tech.c_p * r.power + tech.c_e * r.energy)
    }

    /// Drops ratings below the installation threshold.
    pub fn snapped(&self) -> Plan {
        Plan {
            ratings: self
                .ratings
                .iter()
                .filter(|(_, r)| r.power > INSTALL_THRESHOLD)
                .map(|(b, r)| (b.clone(), *r))
                .collect(),
        }
    }

    /// Checks sign and P/E-ratio bounds (relative tolerance 1e-7) and that
    /// every bus is a storage candidate.
    pub fn check(&self, net: &Network, tech: &StorageTech) -> Result<(), ModelError> {
        let cands: HashSet<&str> = net.candidate_buses.iter().map(|s| s.as_str()).collect();
        for (bus, r) in &self.ratings {
            let fail = |reason: String| ModelError::InvalidPlan {
                bus: bus.clone(),
                reason,
            };
            if r.power < 0.0 || r.energy < 0.0 || !r.power.is_finite() || !r.energy.is_finite() {
                return Err(fail(format!(
                    "ratings must be non-negative (p={}, e={})",
                    r.power, r.energy
                )));
            }
            if r.power == 0.0 && r.energy == 0.0 {
                continue;
            }
            if !cands.contains(bus.as_str()) {
                return Err(fail("not a storage candidate bus".into()));
            }
            let tol = 1e-7 * r.power.max(r.energy).max(1.0);
            if r.power < tech.rho_min * r.energy - tol || r.power > tech.rho_max * r.energy + tol {
                return Err(fail(format!(
                    "P/E ratio {:.6} outside [{}, {}]",
                    r.power / r.energy,
                    tech.rho_min,
                    tech.rho_max
                )));
            }
        }
        Ok(())
    }
}

/// Collected invariant violations; empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks network and day invariants, including cross-references.
pub fn validate_network(net: &Network, days: &[TypicalDay]) -> ValidationReport {
    let mut v = Vec::new();
    let mut seen = HashSet::new();
    for b in &net.buses {
        if !seen.insert(b.as_str()) {
            v.push(format!("bus {b}: duplicate id"));
        }
    }
    if net.buses.is_empty() {
        v.push("network: no buses".into());
    }
    for l in &net.lines {
        for end in [&l.from, &l.to] {
            if !seen.contains(end.as_str()) {
                v.push(format!("line {}: unknown bus {end}", l.id));
            }
        }
        if l.from == l.to {
            v.push(format!("line {}: both ends at bus {}", l.id, l.from));
        }
        if !(l.reactance > 0.0) {
            v.push(format!("line {}: reactance must be positive, got {}", l.id, l.reactance));
        }
        if !(l.capacity > 0.0) {
            v.push(format!("line {}: capacity must be positive, got {}", l.id, l.capacity));
        }
    }
    for g in &net.generators {
        if !seen.contains(g.bus.as_str()) {
            v.push(format!("generator {}: unknown bus {}", g.id, g.bus));
        }
        if !(g.g_min <= g.g_max) {
            v.push(format!("generator {}: g_min {} exceeds g_max {}", g.id, g.g_min, g.g_max));
        }
        if !(g.ramp_up >= 0.0 && g.ramp_down >= 0.0) {
            v.push(format!("generator {}: ramp rates must be non-negative", g.id));
        }
        if !(g.c_gu >= 0.0 && g.c_gd >= 0.0) {
            v.push(format!("generator {}: regulation costs must be non-negative", g.id));
        }
    }
    for b in &net.candidate_buses {
        if !seen.contains(b.as_str()) {
            v.push(format!("candidate bus {b}: unknown bus"));
        }
    }
    let mut day_ids = HashSet::new();
    for d in days {
        if !day_ids.insert(d.id.as_str()) {
            v.push(format!("day {}: duplicate id", d.id));
        }
        if !(d.weight >= 0.0 && d.weight.is_finite()) {
            v.push(format!("day {}: weight must be non-negative, got {}", d.id, d.weight));
        }
        if d.hours == 0 {
            v.push(format!("day {}: hours must be positive", d.id));
        }
        for (name, phi) in [("phi_d", d.phi_d), ("phi_r", d.phi_r)] {
            if !(0.0..=1.0).contains(&phi) {
                v.push(format!("day {}: {name} must be in [0, 1], got {phi}", d.id));
            }
        }
        for (name, table) in [
            ("demand", &d.demand),
            ("renewable", &d.renewable),
            ("spill_max", &d.spill_max),
        ] {
            for (bus, series) in table {
                if !seen.contains(bus.as_str()) {
                    v.push(format!("day {} {name}: unknown bus {bus}", d.id));
                }
                if series.len() != d.hours {
                    v.push(format!(
                        "day {} {name} bus {bus}: expected {} hourly entries, found {}",
                        d.id,
                        d.hours,
                        series.len()
                    ));
                }
                if let Some(t) = series.iter().position(|x| !x.is_finite() || *x < 0.0) {
                    v.push(format!(
                        "day {} {name} bus {bus}: hour {} must be finite and non-negative",
                        d.id,
                        t + 1
                    ));
                }
            }
        }
        for bus in &net.buses {
            for t in 0..d.hours {
                let rs = d.spill_max_at(bus, t);
                let rn = d.renewable_at(bus, t);
                if rs > rn {
                    v.push(format!(
                        "day {} bus {bus}: spill_max {rs} exceeds renewable {rn} at hour {}",
                        d.id,
                        t + 1
                    ));
                    break;
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// Capital recovery factor `r(1+r)^n / ((1+r)^n - 1)`, `1/n` at `r = 0`.
pub fn capital_recovery_factor(interest_rate: f64, lifetime: f64) -> f64 {
    if interest_rate == 0.0 {
        return 1.0 / lifetime;
    }
    let g = (1.0 + interest_rate).powf(lifetime);
    interest_rate * g / (g - 1.0)
}

/// Daily annuity of a capital cost.
pub fn prorate_capital_cost(cost: f64, interest_rate: f64, lifetime: f64) -> Result<f64, ModelError> {
    if !(lifetime > 0.0) {
        return Err(ModelError::NonPositiveLifetime(lifetime));
    }
    if !(interest_rate >= 0.0) {
        return Err(ModelError::NegativeInterest(interest_rate));
    }
    Ok(cost * capital_recovery_factor(interest_rate, lifetime) / 365.0)
}

/// Marginal discharge cost of a battery, money/MWh, from the cell
/// replacement cost (money/kWh), usable depth-of-discharge range and the
/// fitted cycle-life loss slope (life fraction per kWh).
pub fn libes_marginal_cost(
    cell_replacement_cost: f64,
    dod_range: f64,
    fit_slope: f64,
) -> Result<f64, ModelError> {
    if !(dod_range > 0.0 && dod_range <= 1.0) {
        return Err(ModelError::InvalidDodRange(dod_range));
    }
    Ok(fit_slope * cell_replacement_cost / dod_range * 1000.0)
}

#[derive(Debug, Serialize, Deserialize)]
struct DaysFile {
    days: Vec<TypicalDay>,
}

fn read(path: &Path) -> Result<String, ModelError> {
    fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<T, ModelError> {
    toml::from_str(text).map_err(|source| ModelError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_network(text: &str) -> Result<Network, ModelError> {
    parse(text, Path::new("<network>"))
}

pub fn parse_days(text: &str) -> Result<Vec<TypicalDay>, ModelError> {
    parse::<DaysFile>(text, Path::new("<days>")).map(|f| f.days)
}

pub fn parse_tech(text: &str) -> Result<StorageTech, ModelError> {
    parse(text, Path::new("<tech>"))
}

pub fn parse_plan(text: &str) -> Result<Plan, ModelError> {
    parse(text, Path::new("<plan>"))
}

pub fn load_network(path: &Path) -> Result<Network, ModelError> {
    parse(&read(path)?, path)
}

pub fn load_days(path: &Path) -> Result<Vec<TypicalDay>, ModelError> {
    parse::<DaysFile>(&read(path)?, path).map(|f| f.days)
}

/// Loads a technology file, or a bundled technology by name
/// (`aa-caes`, `libes`) when the path does not exist.
pub fn load_tech(path: &Path) -> Result<StorageTech, ModelError> {
    if !path.exists() {
        if let Some(t) = path.to_str().and_then(StorageTech::bundled) {
            return Ok(t);
        }
    }
    parse(&read(path)?, path)
}

pub fn load_plan(path: &Path) -> Result<Plan, ModelError> {
    parse(&read(path)?, path)
}

pub fn network_to_toml(net: &Network) -> Result<String, ModelError> {
    Ok(toml::to_string(net)?)
}

pub fn days_to_toml(days: &[TypicalDay]) -> Result<String, ModelError> {
    Ok(toml::to_string(&DaysFile {
        days: days.to_vec(),
    })?)
}

pub fn tech_to_toml(tech: &StorageTech) -> Result<String, ModelError> {
    Ok(toml::to_string(tech)?)
}

pub fn plan_to_toml(plan: &Plan) -> Result<String, ModelError> {
    Ok(toml::to_string(plan)?)
}
