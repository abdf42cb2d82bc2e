//! Simplex results checked against brute-force vertex enumeration.

#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use storeplan::lp::{
    duality_gap, max_complementarity, max_dual_infeasibility, max_violation, solve,
    LinearProgram, LpStatus, Relation,
};

#[derive(Debug, Clone)]
struct Instance {
    n: usize,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

fn build(inst: &Instance) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let vars: Vec<_> = (0..inst.n)
        .map(|j| lp.add_var(format!("x{j}"), inst.lower[j], inst.upper[j], inst.cost[j]))
        .collect();
    for (i, (a, rel, b)) in inst.rows.iter().enumerate() {
        let coeffs = a
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (vars[j], v))
            .collect();
        lp.add_row(format!("r{i}"), coeffs, *rel, *b);
    }
    lp
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[piv][c].abs() < 1e-9 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn feasible(inst: &Instance, x: &[f64]) -> bool {
    let tol = 1e-7;
    for j in 0..inst.n {
        if x[j] < inst.lower[j] - tol || x[j] > inst.upper[j] + tol {
            return false;
        }
    }
    inst.rows.iter().all(|(a, rel, b)| {
        let act: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        match rel {
            Relation::Le => act <= b + tol,
            Relation::Ge => act >= b - tol,
            Relation::Eq => (act - b).abs() <= tol,
        }
    })
}

/// Minimum over all vertices of the (boxed) polytope, or `None` when empty.
fn enumerate(inst: &Instance) -> Option<f64> {
    let n = inst.n;
    // Equalities join the pool like any other plane: forcing them into every
    // basis breaks on redundant rows. The feasibility filter enforces them.
    let mut planes: Vec<(Vec<f64>, f64)> = inst.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), inst.lower[j]));
        planes.push((e, inst.upper[j]));
    }
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    fn rec(
        start: usize,
        pool: &[usize],
        pick: &mut Vec<usize>,
        n: usize,
        f: &mut dyn FnMut(&[usize]),
    ) {
        if pick.len() == n {
            f(pick);
            return;
        }
        for k in start..pool.len() {
            pick.push(pool[k]);
            rec(k + 1, pool, pick, n, f);
            pick.pop();
        }
    }
    let all: Vec<usize> = (0..planes.len()).collect();
    let mut visit = |sel: &[usize]| {
        let a = sel.iter().map(|&i| planes[i].0.clone()).collect();
        let b = sel.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = gauss_solve(a, b) {
            if feasible(inst, &x) {
                let obj: f64 = inst.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                best = Some(best.map_or(obj, |o: f64| o.min(obj)));
            }
        }
    };
    rec(0, &all, &mut pick, n, &mut visit);
    best
}

fn relation() -> impl Strategy<Value = Relation> {
    prop_oneof![
        4 => Just(Relation::Le),
        3 => Just(Relation::Ge),
        1 => Just(Relation::Eq)
    ]
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=6, 1usize..=8).prop_flat_map(|(n, m)| {
        let coef = prop_oneof![3 => Just(0.0), 7 => (-4i32..=4).prop_map(|v| v as f64)];
        let row = (proptest::collection::vec(coef, n), relation(), -6i32..=10);
        (
            proptest::collection::vec((-5i32..=5).prop_map(|v| v as f64), n),
            proptest::collection::vec((-3i32..=0, 1i32..=6), n),
            proptest::collection::vec(row, m),
        )
            .prop_map(move |(cost, bounds, rows)| Instance {
                n,
                cost,
                lower: bounds.iter().map(|b| b.0 as f64).collect(),
                upper: bounds.iter().map(|b| (b.0 + b.1) as f64).collect(),
                rows: rows
                    .into_iter()
                    .map(|(a, rel, b)| (a, rel, b as f64))
                    .collect(),
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn simplex_matches_vertex_enumeration(inst in instance()) {
        let lp = build(&inst);
        let sol = solve(&lp).unwrap();
        match enumerate(&inst) {
            None => prop_assert_eq!(sol.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(sol.status, LpStatus::Optimal);
                let tol = 1e-9 * best.abs().max(1.0);
                prop_assert!((sol.objective - best).abs() <= tol,
                    "simplex {} vs enumeration {}", sol.objective, best);
                prop_assert!(max_violation(&sol, &lp) <= 1e-9);
                prop_assert!(duality_gap(&sol, &lp).unwrap() <= 1e-9);
                prop_assert!(max_dual_infeasibility(&sol, &lp) <= 1e-9);
                prop_assert!(max_complementarity(&sol, &lp) <= 1e-9);
            }
        }
    }

    #[test]
    fn solve_is_deterministic(inst in instance()) {
        let lp = build(&inst);
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.primal, b.primal);
        prop_assert_eq!(a.duals, b.duals);
    }
}

#[test]
fn degenerate_transportation_problem() {
    // 3 supplies x 3 demands, total supply equal to total demand
    let supply = [20.0, 30.0, 25.0];
    let demand = [10.0, 35.0, 30.0];
    let cost = [8.0, 6.0, 10.0, 9.0, 12.0, 13.0, 14.0, 9.0, 16.0];
    let mut rows = Vec::new();
    for i in 0..3 {
        let a = (0..9).map(|k| if k / 3 == i { 1.0 } else { 0.0 }).collect();
        rows.push((a, Relation::Le, supply[i]));
    }
    for j in 0..3 {
        let a = (0..9).map(|k| if k % 3 == j { 1.0 } else { 0.0 }).collect();
        rows.push((a, Relation::Ge, demand[j]));
    }
    let inst = Instance {
        n: 9,
        cost: cost.to_vec(),
        lower: vec![0.0; 9],
        upper: vec![40.0; 9],
        rows,
    };
    let lp = build(&inst);
    let sol = solve(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    let best = enumerate(&inst).unwrap();
    assert!((sol.objective - best).abs() < 1e-9, "{} vs {}", sol.objective, best);
    assert!(duality_gap(&sol, &lp).unwrap() < 1e-12);
}

#[test]
fn single_feasible_point_is_found() {
    // x0 = -2, x2 = x5 = 0 is the only way to meet the last row
    let inst = Instance {
        n: 6,
        cost: vec![0.0, 0.0, 0.0, 0.0, 0.0, -1.0],
        lower: vec![-2.0, -1.0, -1.0, -2.0, -1.0, 0.0],
        upper: vec![-1.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        rows: vec![
            (vec![0.0; 6], Relation::Le, 0.0),
            (vec![0.0, -1.0, 0.0, -1.0, 0.0, 0.0], Relation::Le, 0.0),
            (vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0], Relation::Le, 0.0),
            (vec![3.0, 0.0, -3.0, 0.0, 0.0, 2.0], Relation::Le, -6.0),
        ],
    };
    assert_eq!(enumerate(&inst), Some(0.0));
    let sol = solve(&build(&inst)).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!(sol.objective.abs() <= 1e-12);
    assert!((sol.primal[0] + 2.0).abs() <= 1e-12);
}
