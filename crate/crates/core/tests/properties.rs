//! Randomized invariants.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storeplan::dispatch::{solve_days, DispatchError};
use storeplan::instances::{self, RandomSpec};
use storeplan::master::{solve_master, MasterState};
use storeplan::model::{Plan, StorageTech};
use storeplan::scenario::{cluster_days, YearProfiles};
use storeplan::subgradient::{split_subgradient, Branch, Cut};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_preserves_total_and_ratio(g0 in -1e4f64..1e4, rho in 0.01f64..10.0) {
        let (gp, ge) = split_subgradient(g0, rho);
        prop_assert!((gp + ge - g0).abs() <= 1e-9 * g0.abs().max(1.0));
        prop_assert!((gp - rho * ge).abs() <= 1e-9 * g0.abs().max(1.0));
    }

    #[test]
    fn master_plan_is_feasible_and_optimal(
        nb in 1usize..4,
        cuts in prop::collection::vec(
            (0.0f64..1000.0, prop::collection::vec((0.0f64..20.0, 0.0f64..20.0, -60.0f64..60.0, -60.0f64..60.0), 3)),
            1..6,
        ),
        budget in 0.0f64..200.0,
    ) {
        let tech = StorageTech::libes();
        let buses: Vec<String> = (1..=nb).map(|b| b.to_string()).collect();
        let mut st = MasterState::new(buses.clone(), &tech, Some(budget), 1000.0);
        for (k, (cost, coords)) in cuts.iter().enumerate() {
            st.cuts.push(Cut {
                iteration: k,
                buses: buses.clone(),
                point: coords[..nb].iter().map(|c| (c.0, c.1)).collect(),
                cost: *cost,
                gradient: coords[..nb].iter().map(|c| (c.2, c.3)).collect(),
                branch: vec![Branch::Installed; nb],
            });
        }
        let (plan, z) = solve_master(&st).unwrap();
        let tol = 1e-6 * (1.0 + z.abs() + budget);
        prop_assert!(plan.investment_cost(&tech) <= budget + tol);
        for r in plan.ratings.values() {
            prop_assert!(r.power >= -1e-9 && r.energy >= -1e-9);
            prop_assert!(r.power >= tech.rho_min * r.energy - tol);
            prop_assert!(r.power <= tech.rho_max * r.energy + tol);
        }
        let model = st.cuts.iter().map(|c| c.value_at(&plan)).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((model - z).abs() <= tol, "model {} vs z {}", model, z);
    }

    #[test]
    fn cluster_weights_sum_to_day_count(
        seed in any::<u64>(),
        n in 1usize..12,
        k_frac in 0.0f64..1.0,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let day = |rng: &mut ChaCha8Rng, lo: f64| -> Vec<Vec<f64>> {
            (0..24).map(|_| (0..2).map(|_| rng.gen_range(lo..100.0)).collect()).collect()
        };
        let demand = (0..n).map(|_| day(&mut rng, 1.0)).collect();
        let renewable = (0..n).map(|_| day(&mut rng, 0.0)).collect();
        let profiles = YearProfiles { buses: vec!["a".into(), "b".into()], demand, renewable };
        let k = 1 + ((n - 1) as f64 * k_frac) as usize;
        let days = cluster_days(&profiles, k).unwrap();
        prop_assert_eq!(days.len(), k);
        prop_assert_eq!(days.iter().map(|d| d.weight).sum::<f64>(), n as f64);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn revenue_identity_on_small_systems(seed in 0u64..10_000) {
        let spec = RandomSpec {
            buses: (3, 6),
            lines: (3, 8),
            generators: (2, 4),
            days: (1, 2),
            candidates: (1, 3),
            hours: 24,
        };
        let inst = instances::random_instance(seed, &spec);
        // Random systems can be infeasible without storage (thin meshed lines,
        // tight ramps); the identity says nothing about those.
        let base = solve_days(&inst.network, &inst.days, &Plan::new(), &inst.tech);
        prop_assume!(!matches!(base, Err(DispatchError::Infeasible { .. })));
        base.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let plan = common::interior_plan(&mut rng, &inst);
        let (direct, identity) = common::revenue_pair(&inst, &plan);
        prop_assert!((direct - identity).abs() <= 1e-6 * direct.abs().max(1.0), "{} vs {}", direct, identity);
    }
}
