//! Bundled test systems: the two hand-checkable micro-instances, the
//! negative-price counterexample, and a seeded random network generator.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Generator, Line, Network, Plan, StorageTech, TypicalDay};

/// A complete planning input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub name: String,
    pub network: Network,
    pub days: Vec<TypicalDay>,
    pub tech: StorageTech,
}

fn generator(id: &str, bus: &str, g_max: f64, c_g: f64) -> Generator {
    Generator {
        id: id.into(),
        bus: bus.into(),
        g_max,
        g_min: 0.0,
        ramp_up: 1000.0,
        ramp_down: 1000.0,
        c_g,
        c_gu: 0.0,
        c_gd: 0.0,
    }
}

fn single_bus_day(id: &str, demand: Vec<f64>) -> TypicalDay {
    TypicalDay {
        id: id.into(),
        weight: 1.0,
        hours: demand.len(),
        demand: [("1".to_string(), demand)].into_iter().collect(),
        renewable: BTreeMap::new(),
        spill_max: BTreeMap::new(),
        c_rs: 0.0,
        phi_d: 0.0,
        phi_r: 0.0,
    }
}

/// Lossless storage with unit capital costs and no marginal costs.
pub fn unit_tech() -> StorageTech {
    StorageTech {
        name: "unit".into(),
        c_p: 1.0,
        c_e: 1.0,
        rho_min: 0.1,
        rho_max: 4.0,
        eta_ch: 1.0,
        eta_dis: 1.0,
        c_dis: 0.0,
        c_ch: 0.0,
        c_eu: 0.0,
        c_ed: 0.0,
        t_es: 1.0,
        t_ru: 1.0,
        t_rd: 1.0,
    }
}

/// One bus, one 100 MW generator at 20/MWh, two hours of demand (50, 80).
/// Prices are flat, so storage has no arbitrage value.
pub fn m1() -> Instance {
    Instance {
        name: "M1".into(),
        network: Network {
            buses: vec!["1".into()],
            lines: vec![],
            generators: vec![generator("G1", "1", 100.0, 20.0)],
            candidate_buses: vec!["1".into()],
        },
        days: vec![single_bus_day("d1", vec![50.0, 80.0])],
        tech: unit_tech(),
    }
}

/// One bus, generators 60 MW at 10/MWh and 100 MW at 50/MWh, two hours of
/// demand (50, 80). The zero-storage dispatch costs 2100 with prices
/// (10, 50).
pub fn m2() -> Instance {
    Instance {
        name: "M2".into(),
        network: Network {
            buses: vec!["1".into()],
            lines: vec![],
            generators: vec![
                generator("G1", "1", 60.0, 10.0),
                generator("G2", "1", 100.0, 50.0),
            ],
            candidate_buses: vec!["1".into()],
        },
        days: vec![single_bus_day("d1", vec![50.0, 80.0])],
        tech: unit_tech(),
    }
}

/// M2 with a ladder of twenty 2 MW units between the cheap unit and the
/// peaker, so that the value of shifting energy falls gradually with the
/// amount shifted. Capital costs are 11 per MW and per MWh.
pub fn m2_ladder() -> Instance {
    let mut generators = vec![generator("base", "1", 40.0, 10.0)];
    for k in 0..20 {
        generators.push(generator(&format!("L{}", k + 1), "1", 2.0, 11.0 + 2.0 * k as f64));
    }
    generators.push(generator("peaker", "1", 100.0, 50.0));
    let mut tech = unit_tech();
    tech.c_p = 11.0;
    tech.c_e = 11.0;
    Instance {
        name: "M2-ladder".into(),
        network: Network {
            buses: vec!["1".into()],
            lines: vec![],
            generators,
            candidate_buses: vec!["1".into()],
        },
        days: vec![single_bus_day("d1", vec![51.0, 85.0])],
        tech,
    }
}

/// A bus whose marginal unit has a cost of -50/MWh for five hours, then a
/// 40/MWh hour. Storage without marginal costs and with a 0.72 round trip
/// profits from charging and discharging at once when its energy rating
/// is full.
pub fn negative_lmp() -> Instance {
    let mut tech = StorageTech::aa_caes();
    tech.name = "lossy, free to cycle".into();
    let mut demand = vec![60.0; 5];
    demand.push(150.0);
    Instance {
        name: "negative-lmp".into(),
        network: Network {
            buses: vec!["1".into()],
            lines: vec![],
            generators: vec![
                generator("must-take", "1", 100.0, -50.0),
                generator("peaker", "1", 100.0, 40.0),
            ],
            candidate_buses: vec!["1".into()],
        },
        days: vec![single_bus_day("d1", demand)],
        tech,
    }
}

/// The plan used with [`negative_lmp`]: 10 MW / 40 MWh at bus 1.
pub fn negative_lmp_plan() -> Plan {
    Plan::new().with("1", 10.0, 40.0)
}

/// Size ranges for [`random_instance`].
#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub buses: (usize, usize),
    pub lines: (usize, usize),
    pub generators: (usize, usize),
    pub days: (usize, usize),
    pub candidates: (usize, usize),
    pub hours: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            buses: (5, 20),
            lines: (6, 30),
            generators: (3, 8),
            days: (1, 5),
            candidates: (2, 4),
            hours: 24,
        }
    }
}

/// Battery-like storage cheap enough to be worth building on the random
/// systems.
pub fn random_tech() -> StorageTech {
    let (eta_ch, eta_dis) = (0.9f64.sqrt(), 0.9 / 0.9f64.sqrt());
    StorageTech {
        name: "LiBES-like".into(),
        c_p: 4.0,
        c_e: 8.0,
        rho_min: 0.1,
        rho_max: 4.0,
        eta_ch,
        eta_dis,
        c_dis: 5.0,
        c_ch: 0.0,
        c_eu: 0.5,
        c_ed: 0.0,
        t_es: 1.0,
        t_ru: 1.0 / 6.0,
        t_rd: 1.0 / 6.0,
    }
}

/// A connected random network with daily demand and renewable profiles.
/// Identical seeds give identical instances. Feasibility is not
/// guaranteed: line limits or ramp rates can leave an hour without a
/// dispatch.
pub fn random_instance(seed: u64, spec: &RandomSpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(spec.buses.0..=spec.buses.1);
    let buses: Vec<String> = (1..=nb).map(|b| b.to_string()).collect();
    let min_lines = spec.lines.0.max(nb - 1);
    let nl = rng.gen_range(min_lines..=spec.lines.1.max(min_lines));
    let ng = rng.gen_range(spec.generators.0..=spec.generators.1);
    let nd = rng.gen_range(spec.days.0..=spec.days.1);

    let base: Vec<f64> = (0..nb).map(|_| rng.gen_range(10.0..60.0)).collect();
    let peak_total: f64 = base.iter().sum::<f64>() * 1.3;

    let mut lines = Vec::with_capacity(nl);
    let mut pairs = std::collections::HashSet::new();
    for b in 1..nb {
        let a = rng.gen_range(0..b);
        pairs.insert((a, b));
        lines.push((a, b));
    }
    let mut guard = 0;
    while lines.len() < nl && guard < 10_000 {
        guard += 1;
        let a = rng.gen_range(0..nb);
        let b = rng.gen_range(0..nb);
        if a == b {
            continue;
        }
        let key = (a.min(b), a.max(b));
        if nb > 2 && pairs.contains(&key) && pairs.len() < nb * (nb - 1) / 2 {
            continue;
        }
        pairs.insert(key);
        lines.push((a, b));
    }
    let lines: Vec<Line> = lines
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| Line {
            id: format!("L{}", k + 1),
            from: buses[a].clone(),
            to: buses[b].clone(),
            reactance: rng.gen_range(0.05..0.3),
            capacity: (rng.gen_range(0.25..0.8) * peak_total).round(),
        })
        .collect();

    let capacity_total = peak_total * 1.6;
    let shares: Vec<f64> = (0..ng).map(|_| rng.gen_range(0.5..1.5)).collect();
    let share_sum: f64 = shares.iter().sum();
    let generators: Vec<Generator> = shares
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let g_max = (capacity_total * s / share_sum).round().max(10.0);
            Generator {
                id: format!("G{}", i + 1),
                bus: buses[rng.gen_range(0..nb)].clone(),
                g_max,
                g_min: 0.0,
                ramp_up: (g_max * rng.gen_range(0.3..0.8)).round(),
                ramp_down: (g_max * rng.gen_range(0.3..0.8)).round(),
                c_g: rng.gen_range(10.0f64..120.0).round(),
                c_gu: rng.gen_range(2.0f64..10.0).round(),
                c_gd: rng.gen_range(1.0f64..5.0).round(),
            }
        })
        .collect();

    let nc = rng.gen_range(spec.candidates.0..=spec.candidates.1).min(nb);
    let mut order: Vec<usize> = (0..nb).collect();
    order.shuffle(&mut rng);
    let mut cands: Vec<usize> = order[..nc].to_vec();
    cands.sort_unstable();
    let candidate_buses = cands.iter().map(|&b| buses[b].clone()).collect();

    let renewable_buses: Vec<usize> = (0..nb).filter(|_| rng.gen_bool(0.3)).collect();
    let mut days = Vec::with_capacity(nd);
    for j in 0..nd {
        let scale = rng.gen_range(0.8..1.1);
        let phase = rng.gen_range(-2.0..2.0);
        let mut demand = BTreeMap::new();
        let mut renewable = BTreeMap::new();
        let mut spill_max = BTreeMap::new();
        for b in 0..nb {
            let series: Vec<f64> = (0..spec.hours)
                .map(|t| {
                    let x = (t as f64 + phase - 7.0) / 24.0 * std::f64::consts::TAU;
                    let shape = 0.7 - 0.3 * x.cos();
                    (base[b] * scale * shape * rng.gen_range(0.95..1.05) * 100.0).round() / 100.0
                })
                .collect();
            demand.insert(buses[b].clone(), series);
        }
        for &b in &renewable_buses {
            let cap = base[b] * rng.gen_range(0.3..1.0);
            let series: Vec<f64> = (0..spec.hours)
                .map(|t| {
                    let x = (t as f64 - 12.0) / 24.0 * std::f64::consts::TAU;
                    let v = cap * (0.5 + 0.5 * x.cos()) * rng.gen_range(0.8..1.0);
                    (v * 100.0).round() / 100.0
                })
                .collect();
            spill_max.insert(buses[b].clone(), series.clone());
            renewable.insert(buses[b].clone(), series);
        }
        days.push(TypicalDay {
            id: format!("day{}", j + 1),
            weight: rng.gen_range(1..=60) as f64,
            hours: spec.hours,
            demand,
            renewable,
            spill_max,
            c_rs: 0.0,
            phi_d: 0.03,
            phi_r: 0.05,
        });
    }

    Instance {
        name: format!("random-{seed}"),
        network: Network {
            buses,
            lines,
            generators,
            candidate_buses,
        },
        days,
        tech: random_tech(),
    }
}
