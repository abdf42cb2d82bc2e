//! Linear programs and their primal/dual solutions.
//!
//! Every optimization in this crate (per-day dispatch, the subgradient
//! subproblem, the cutting-plane master and the monolithic baseline) is
//! expressed as a [`LinearProgram`] and solved by [`solve`], a bounded
//! revised simplex method returning primal values, row duals and reduced
//! costs.
//!
//! Dual sign convention (objective is always minimized): the dual of a row
//! is the derivative of the optimal objective with respect to its
//! right-hand side. `≤` rows therefore carry nonpositive duals, `≥` rows
//! nonnegative duals and `=` rows free duals.

mod lp_format;
mod lu;
mod scaling;
mod simplex;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use lp_format::write_lp_format;

/// Absolute primal feasibility tolerance used to accept a solution.
pub const FEAS_TOL: f64 = 1e-7;
/// Relative duality gap tolerance.
pub const GAP_TOL: f64 = 1e-8;
/// Complementary slackness tolerance on `|dual * slack|`.
pub const COMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("constraint `{row}` references unknown variable index {var}")]
    UnknownVariable { row: String, var: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(String),
    #[error("solution is not optimal ({0:?})")]
    NotOptimal(LpStatus),
}

/// A minimization LP: `min c·x` subject to rows `a·x {≤,≥,=} b` and
/// bounds `l ≤ x ≤ u` (infinite bounds allowed).
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
    var_index: HashMap<String, VarId>,
    row_index: HashMap<String, RowId>,
    duplicate: Option<LpError>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> VarId {
        let name = name.into();
        let id = VarId(self.vars.len());
        if self.var_index.insert(name.clone(), id).is_some() && self.duplicate.is_none() {
            self.duplicate = Some(LpError::DuplicateVariable(name.clone()));
        }
        self.vars.push(Variable {
            name,
            lower,
            upper,
            cost,
        });
        id
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> RowId {
        let name = name.into();
        let id = RowId(self.rows.len());
        if self.row_index.insert(name.clone(), id).is_some() && self.duplicate.is_none() {
            self.duplicate = Some(LpError::DuplicateConstraint(name.clone()));
        }
        self.rows.push(Constraint {
            name,
            coeffs,
            relation,
            rhs,
        });
        id
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        self.vars[var.0].lower = lower;
        self.vars[var.0].upper = upper;
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn row_by_name(&self, name: &str) -> Option<RowId> {
        self.row_index.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Checks the structural invariants (unique names, ordered bounds,
    /// known column references, finite data).
    pub fn validate(&self) -> Result<(), LpError> {
        if let Some(err) = &self.duplicate {
            return Err(err.clone());
        }
        for v in &self.vars {
            if v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(LpError::NonFinite(v.name.clone()));
            }
            if v.lower > v.upper || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvertedBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite(r.name.clone()));
            }
            for &(v, a) in &r.coeffs {
                if v.0 >= self.vars.len() {
                    return Err(LpError::UnknownVariable {
                        row: r.name.clone(),
                        var: v.0,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(r.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// Row activities `a·x` for a primal point.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum())
            .collect()
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, &xv)| v.cost * xv).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal value per variable.
    pub primal: Vec<f64>,
    /// Dual value per row (see the module docs for the sign convention).
    pub duals: Vec<f64>,
    /// Reduced cost per variable, `c_j - a_j·y`.
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.primal[var.0]
    }

    pub fn dual(&self, row: RowId) -> f64 {
        self.duals[row.0]
    }
}

/// Solves the LP. Malformed input is an error; infeasibility and
/// unboundedness are reported through [`LpSolution::status`].
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    Ok(simplex::solve_validated(lp))
}

/// Dual objective value assembled from row duals, reduced costs, bounds and
/// right-hand sides. Returns `-inf` when a reduced cost prices an infinite
/// bound.
pub fn dual_objective(sol: &LpSolution, lp: &LinearProgram) -> f64 {
    let mut obj: f64 = lp
        .rows()
        .iter()
        .zip(&sol.duals)
        .map(|(r, &y)| r.rhs * y)
        .sum();
    for (v, &d) in lp.vars().iter().zip(&sol.reduced_costs) {
        if d > 0.0 {
            if v.lower.is_finite() {
                obj += d * v.lower;
            } else if d > FEAS_TOL {
                return f64::NEG_INFINITY;
            }
        } else if d < 0.0 {
            if v.upper.is_finite() {
                obj += d * v.upper;
            } else if d < -FEAS_TOL {
                return f64::NEG_INFINITY;
            }
        }
    }
    obj
}

/// Relative gap `|primal - dual| / max(1, |primal|)` of an optimal solution.
pub fn duality_gap(sol: &LpSolution, lp: &LinearProgram) -> Result<f64, LpError> {
    if sol.status != LpStatus::Optimal {
        return Err(LpError::NotOptimal(sol.status));
    }
    let primal = lp.objective_at(&sol.primal);
    let dual = dual_objective(sol, lp);
    Ok((primal - dual).abs() / primal.abs().max(1.0))
}

/// Largest absolute violation of any row or bound.
pub fn max_violation(sol: &LpSolution, lp: &LinearProgram) -> f64 {
    let act = lp.activities(&sol.primal);
    let mut worst = 0.0f64;
    for (r, a) in lp.rows().iter().zip(act) {
        let v = match r.relation {
            Relation::Le => a - r.rhs,
            Relation::Ge => r.rhs - a,
            Relation::Eq => (a - r.rhs).abs(),
        };
        worst = worst.max(v);
    }
    for (v, &x) in lp.vars().iter().zip(&sol.primal) {
        worst = worst.max(v.lower - x).max(x - v.upper);
    }
    worst
}

/// Largest `|dual * slack|` over rows and `|reduced cost * distance to
/// bound|` over variables.
pub fn max_complementarity(sol: &LpSolution, lp: &LinearProgram) -> f64 {
    let act = lp.activities(&sol.primal);
    let mut worst = 0.0f64;
    for ((r, a), &y) in lp.rows().iter().zip(act).zip(&sol.duals) {
        worst = worst.max((y * (r.rhs - a)).abs());
    }
    for ((v, &x), &d) in lp.vars().iter().zip(&sol.primal).zip(&sol.reduced_costs) {
        let dist = if d > 0.0 {
            x - v.lower
        } else if d < 0.0 {
            v.upper - x
        } else {
            0.0
        };
        if dist.is_finite() {
            worst = worst.max((d * dist).abs());
        }
    }
    worst
}

/// Largest sign violation of the duals (`≤` rows must be nonpositive,
/// `≥` rows nonnegative) and of the reduced costs against active bounds.
pub fn max_dual_infeasibility(sol: &LpSolution, lp: &LinearProgram) -> f64 {
    let mut worst = 0.0f64;
    for (r, &y) in lp.rows().iter().zip(&sol.duals) {
        let v = match r.relation {
            Relation::Le => y,
            Relation::Ge => -y,
            Relation::Eq => 0.0,
        };
        worst = worst.max(v);
    }
    for (v, &d) in lp.vars().iter().zip(&sol.reduced_costs) {
        if d > 0.0 && v.lower == f64::NEG_INFINITY {
            worst = worst.max(d);
        }
        if d < 0.0 && v.upper == f64::INFINITY {
            worst = worst.max(-d);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_lower_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        let r = lp.add_row("x_ge_3", vec![(x, 1.0)], Relation::Ge, 3.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value(x) - 3.0).abs() < 1e-12);
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.dual(r) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_variable_vertex() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, -1.0);
        let cap = lp.add_row("cap", vec![(x, 1.0), (y, 1.0)], Relation::Le, 4.0);
        lp.add_row("xmax", vec![(x, 1.0)], Relation::Le, 3.0);
        lp.add_row("ymax", vec![(y, 1.0)], Relation::Le, 3.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective + 4.0).abs() < 1e-12);
        assert!((sol.value(x) + sol.value(y) - 4.0).abs() < 1e-12);
        assert!((sol.dual(cap) + 1.0).abs() < 1e-12);
        assert!(duality_gap(&sol, &lp).unwrap() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        lp.add_row("neg", vec![(x, 1.0)], Relation::Le, -1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray_is_detected() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY, -1.0);
        let y = lp.add_var("y", 0.0, f64::INFINITY, 0.0);
        lp.add_row("r", vec![(x, 1.0), (y, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn zero_objective_has_zero_gap() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 5.0, 0.0);
        let y = lp.add_var("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_row("link", vec![(x, 1.0), (y, 1.0)], Relation::Eq, 2.0);
        let sol = solve(&lp).unwrap();
        assert_eq!(duality_gap(&sol, &lp).unwrap(), 0.0);
    }

    #[test]
    fn perturbed_dual_on_binding_row_opens_gap() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 10.0, 1.0);
        let r = lp.add_row("x_ge_5", vec![(x, 1.0)], Relation::Ge, 5.0);
        let mut sol = solve(&lp).unwrap();
        assert!(duality_gap(&sol, &lp).unwrap() < 1e-12);
        sol.duals[r.0] += 1.0;
        let gap = duality_gap(&sol, &lp).unwrap();
        assert!((gap - 5.0 / 5.0).abs() < 1e-12, "gap {gap}");
    }

    #[test]
    fn malformed_input_is_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_var("x", 1.0, 0.0, 1.0);
        assert!(matches!(solve(&lp), Err(LpError::InvertedBounds { .. })));

        let mut lp = LinearProgram::new();
        lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_var("x", 0.0, 1.0, 1.0);
        assert_eq!(
            solve(&lp).unwrap_err(),
            LpError::DuplicateVariable("x".into())
        );

        let mut lp = LinearProgram::new();
        lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row("r", vec![(VarId(3), 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve(&lp), Err(LpError::UnknownVariable { .. })));
    }

    #[test]
    fn gap_requires_optimal_status() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, f64::INFINITY, 1.0);
        lp.add_row("neg", vec![(x, 1.0)], Relation::Le, -1.0);
        let sol = solve(&lp).unwrap();
        assert!(matches!(
            duality_gap(&sol, &lp),
            Err(LpError::NotOptimal(LpStatus::Infeasible))
        ));
    }
}
