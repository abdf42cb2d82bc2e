//! Bounded revised simplex.
//!
//! A dual phase (dual steepest edge pricing, bound-flipping ratio test,
//! Harris tolerances) drives the basis to primal feasibility, using an
//! artificial cost vector when the slack basis is not dual feasible. A
//! primal phase then removes the remaining dual infeasibilities. Both
//! phases fall back to Bland's rule after a run of degenerate pivots, and
//! the result is re-verified on a fresh factorization before it is
//! reported.

use super::lu::{ColRef, LuFactors};
use super::scaling;
use super::{LinearProgram, LpSolution, LpStatus, Relation};

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 50;
const MAX_ROUNDS: usize = 8;
const NONE: usize = usize::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum State {
    Basic,
    Lower,
    Upper,
    Free,
    Fixed,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterLimit,
}

/// Scaled computational form: structural columns `0..n`, then one slack
/// per row with a unit column.
struct Problem {
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    unit_idx: Vec<usize>,
    ones: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

impl Problem {
    fn build(lp: &LinearProgram) -> Problem {
        let m = lp.num_rows();
        let n = lp.num_vars();
        // merge duplicate entries per row, drop zeros
        let mut triplets: Vec<(usize, usize, f64)> = Vec::with_capacity(lp.nnz());
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for (i, row) in lp.rows().iter().enumerate() {
            buf.clear();
            buf.extend(row.coeffs.iter().map(|&(v, a)| (v.0, a)));
            buf.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < buf.len() {
                let j = buf[k].0;
                let mut a = 0.0;
                while k < buf.len() && buf[k].0 == j {
                    a += buf[k].1;
                    k += 1;
                }
                if a != 0.0 {
                    triplets.push((i, j, a));
                }
            }
        }
        let mut col_start = vec![0usize; n + 1];
        for &(_, j, _) in &triplets {
            col_start[j + 1] += 1;
        }
        for j in 0..n {
            col_start[j + 1] += col_start[j];
        }
        let nnz = triplets.len();
        let mut col_row = vec![0usize; nnz];
        let mut col_val = vec![0.0; nnz];
        let mut fill = col_start.clone();
        for &(i, j, a) in &triplets {
            col_row[fill[j]] = i;
            col_val[fill[j]] = a;
            fill[j] += 1;
        }
        let sc = scaling::geometric(m, &col_start, &col_row, &col_val);
        for j in 0..n {
            for k in col_start[j]..col_start[j + 1] {
                col_val[k] *= sc.row[col_row[k]] * sc.col[j];
            }
        }
        let mut row_start = vec![0usize; m + 1];
        for &(i, _, _) in &triplets {
            row_start[i + 1] += 1;
        }
        for i in 0..m {
            row_start[i + 1] += row_start[i];
        }
        let mut row_col = vec![0usize; nnz];
        let mut row_val = vec![0.0; nnz];
        let mut fill = row_start.clone();
        for j in 0..n {
            for k in col_start[j]..col_start[j + 1] {
                let i = col_row[k];
                row_col[fill[i]] = j;
                row_val[fill[i]] = col_val[k];
                fill[i] += 1;
            }
        }
        let mut cost = vec![0.0; n + m];
        let mut lower = vec![0.0; n + m];
        let mut upper = vec![0.0; n + m];
        for (j, v) in lp.vars().iter().enumerate() {
            cost[j] = v.cost * sc.col[j];
            lower[j] = v.lower / sc.col[j];
            upper[j] = v.upper / sc.col[j];
        }
        let mut rhs = vec![0.0; m];
        for (i, r) in lp.rows().iter().enumerate() {
            rhs[i] = r.rhs * sc.row[i];
            let (lo, hi) = match r.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower[n + i] = lo;
            upper[n + i] = hi;
        }
        Problem {
            m,
            n,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            cost,
            lower,
            upper,
            rhs,
            unit_idx: (0..m).collect(),
            ones: vec![1.0; m],
            row_scale: sc.row,
            col_scale: sc.col,
        }
    }

    fn column(&self, j: usize) -> ColRef<'_> {
        if j < self.n {
            let (s, e) = (self.col_start[j], self.col_start[j + 1]);
            (&self.col_row[s..e], &self.col_val[s..e])
        } else {
            let i = j - self.n;
            (&self.unit_idx[i..i + 1], &self.ones[i..i + 1])
        }
    }

    fn dot_column(&self, j: usize, y: &[f64]) -> f64 {
        let (idx, val) = self.column(j);
        idx.iter().zip(val).map(|(&i, &a)| a * y[i]).sum()
    }
}

struct Simplex<'a> {
    p: &'a Problem,
    m: usize,
    n: usize,
    cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    y: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    lu: LuFactors,
    weights: Vec<f64>,
    iters: usize,
    max_iters: usize,
    bland: bool,
    stall: usize,
    col_work: Vec<f64>,
    pos_work: Vec<f64>,
    alpha: Vec<f64>,
    rho: Vec<f64>,
    tau: Vec<f64>,
    row_alpha: Vec<f64>,
    row_mark: Vec<bool>,
    touched: Vec<usize>,
}

impl<'a> Simplex<'a> {
    fn new(p: &'a Problem) -> Self {
        let (m, n) = (p.m, p.n);
        let nt = n + m;
        let mut state = vec![State::Basic; nt];
        let mut x = vec![0.0; nt];
        for j in 0..n {
            let (lo, hi, c) = (p.lower[j], p.upper[j], p.cost[j]);
            let st = if lo == hi {
                State::Fixed
            } else if lo.is_finite() && (c >= 0.0 || !hi.is_finite()) {
                State::Lower
            } else if hi.is_finite() {
                State::Upper
            } else {
                State::Free
            };
            state[j] = st;
            x[j] = match st {
                State::Lower | State::Fixed => lo,
                State::Upper => hi,
                _ => 0.0,
            };
        }
        let basis: Vec<usize> = (n..nt).collect();
        let mut pos_of = vec![NONE; nt];
        for (i, &b) in basis.iter().enumerate() {
            pos_of[b] = i;
        }
        Simplex {
            p,
            m,
            n,
            cost: p.cost.clone(),
            x,
            d: vec![0.0; nt],
            y: vec![0.0; m],
            state,
            basis,
            pos_of,
            lu: LuFactors::default(),
            weights: vec![1.0; m],
            iters: 0,
            max_iters: 50 * nt + 10_000,
            bland: false,
            stall: 0,
            col_work: vec![0.0; m],
            pos_work: vec![0.0; m],
            alpha: vec![0.0; m],
            rho: vec![0.0; m],
            tau: vec![0.0; m],
            row_alpha: vec![0.0; nt],
            row_mark: vec![false; nt],
            touched: Vec::new(),
        }
    }

    fn nonbasic_state_at(&self, j: usize, value: f64) -> (State, f64) {
        let (lo, hi) = (self.p.lower[j], self.p.upper[j]);
        if lo == hi {
            (State::Fixed, lo)
        } else if lo.is_finite() && (!hi.is_finite() || value - lo <= hi - value) {
            (State::Lower, lo)
        } else if hi.is_finite() {
            (State::Upper, hi)
        } else {
            (State::Free, 0.0)
        }
    }

    fn refactor(&mut self) {
        let p = self.p;
        let basis = &self.basis;
        let (lu, repairs) = LuFactors::factorize(self.m, |pos| p.column(basis[pos]));
        self.lu = lu;
        for (pos, row) in repairs {
            let old = self.basis[pos];
            let slack = self.n + row;
            let (st, v) = self.nonbasic_state_at(old, self.x[old]);
            self.state[old] = st;
            self.x[old] = v;
            self.pos_of[old] = NONE;
            self.basis[pos] = slack;
            self.state[slack] = State::Basic;
            self.pos_of[slack] = pos;
            self.weights[pos] = 1.0;
            log::debug!("basis repair: position {pos} replaced by slack of row {row}");
        }
    }

    fn compute_primal(&mut self) {
        self.col_work.copy_from_slice(&self.p.rhs);
        for j in 0..self.n + self.m {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                let (idx, val) = self.p.column(j);
                for (&i, &a) in idx.iter().zip(val) {
                    self.col_work[i] -= a * self.x[j];
                }
            }
        }
        self.lu.ftran(&mut self.col_work, &mut self.pos_work);
        for i in 0..self.m {
            self.x[self.basis[i]] = self.pos_work[i];
        }
        self.pos_work.iter_mut().for_each(|v| *v = 0.0);
    }

    fn compute_duals(&mut self) {
        for i in 0..self.m {
            self.pos_work[i] = self.cost[self.basis[i]];
        }
        self.lu.btran(&mut self.pos_work, &mut self.y);
        for j in 0..self.n + self.m {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - self.p.dot_column(j, &self.y)
            };
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        (self.p.lower[j] - v).max(v - self.p.upper[j]).max(0.0)
    }

    fn dual_infeasibility(&self, j: usize) -> f64 {
        let d = self.d[j];
        match self.state[j] {
            State::Lower => (-d).max(0.0),
            State::Upper => d.max(0.0),
            State::Free => d.abs(),
            State::Basic | State::Fixed => 0.0,
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basis.iter().all(|&b| self.infeasibility(b) <= PRIMAL_TOL)
    }

    fn dual_feasible(&self) -> bool {
        (0..self.n + self.m).all(|j| self.dual_infeasibility(j) <= DUAL_TOL)
    }

    fn set_artificial_costs(&mut self) {
        for j in 0..self.n + self.m {
            self.cost[j] = match self.state[j] {
                State::Lower => 1.0,
                State::Upper => -1.0,
                _ => 0.0,
            };
        }
    }

    fn ftran_column(&mut self, j: usize) {
        let (idx, val) = self.p.column(j);
        for (&i, &a) in idx.iter().zip(val) {
            self.col_work[i] += a;
        }
        self.lu.ftran(&mut self.col_work, &mut self.alpha);
    }

    fn btran_unit(&mut self, r: usize) {
        self.pos_work[r] = 1.0;
        self.lu.btran(&mut self.pos_work, &mut self.rho);
    }

    /// Row `r` of `B^-1 A` over all columns touched by `rho`.
    fn compute_pivot_row(&mut self) {
        for &j in &self.touched {
            self.row_alpha[j] = 0.0;
            self.row_mark[j] = false;
        }
        self.touched.clear();
        let p = self.p;
        for i in 0..self.m {
            let r = self.rho[i];
            if r == 0.0 {
                continue;
            }
            for k in p.row_start[i]..p.row_start[i + 1] {
                let j = p.row_col[k];
                if !self.row_mark[j] {
                    self.row_mark[j] = true;
                    self.touched.push(j);
                }
                self.row_alpha[j] += r * p.row_val[k];
            }
            let s = self.n + i;
            self.row_mark[s] = true;
            self.touched.push(s);
            self.row_alpha[s] = r;
        }
    }

    fn needs_refactor(&self) -> bool {
        self.lu.num_updates() >= REFACTOR_EVERY
            || self.lu.eta_nnz() > 2 * self.lu.factor_nnz() + self.m
    }

    fn fresh_start(&mut self) {
        self.refactor();
        self.compute_primal();
        self.compute_duals();
    }

    /// Updates the DSE weights for a pivot on row `r` with entering column
    /// `alpha` and leaving row `rho`.
    fn update_weights(&mut self, r: usize) {
        let beta: f64 = self.rho.iter().map(|v| v * v).sum();
        self.col_work.copy_from_slice(&self.rho);
        self.lu.ftran(&mut self.col_work, &mut self.tau);
        let ar = self.alpha[r];
        for i in 0..self.m {
            if i == r || self.alpha[i] == 0.0 {
                continue;
            }
            let ratio = self.alpha[i] / ar;
            let w = self.weights[i] - 2.0 * ratio * self.tau[i] + ratio * ratio * beta;
            self.weights[i] = w.max(1e-4 * self.weights[i]).max(1e-12);
        }
        self.weights[r] = (beta / (ar * ar)).max(1e-12);
    }

    fn replace_basic(&mut self, r: usize, q: usize, leaving_state: State, leaving_value: f64) {
        let p = self.basis[r];
        self.state[p] = leaving_state;
        self.x[p] = leaving_value;
        self.pos_of[p] = NONE;
        self.basis[r] = q;
        self.state[q] = State::Basic;
        self.pos_of[q] = r;
        self.lu.update(r, &self.alpha);
        self.iters += 1;
    }

    fn leaving_state(&self, j: usize, to_lower: bool) -> (State, f64) {
        let (lo, hi) = (self.p.lower[j], self.p.upper[j]);
        if lo == hi {
            (State::Fixed, lo)
        } else if to_lower {
            (State::Lower, lo)
        } else {
            (State::Upper, hi)
        }
    }

    fn track_stall(&mut self, degenerate: bool) {
        if degenerate {
            self.stall += 1;
            if self.stall > STALL_LIMIT && !self.bland {
                log::debug!("switching to Bland's rule after {} degenerate pivots", self.stall);
                self.bland = true;
            }
        } else {
            self.stall = 0;
            self.bland = false;
        }
    }

    fn choose_leaving_row(&self) -> Option<usize> {
        let mut best = None;
        let mut best_score = 0.0;
        for i in 0..self.m {
            let b = self.basis[i];
            let inf = self.infeasibility(b);
            if inf <= PRIMAL_TOL {
                continue;
            }
            if self.bland {
                match best {
                    Some(bi) if self.basis[bi] < b => {}
                    _ => best = Some(i),
                }
                continue;
            }
            let score = inf * inf / self.weights[i];
            if score > best_score {
                best_score = score;
                best = Some(i);
            }
        }
        best
    }

    fn dual_phase(&mut self) -> Outcome {
        let mut retries = 0;
        let mut cands: Vec<(usize, f64, f64)> = Vec::new();
        let mut flips: Vec<usize> = Vec::new();
        loop {
            if self.iters >= self.max_iters {
                return Outcome::IterLimit;
            }
            if self.needs_refactor() {
                self.fresh_start();
            }
            let Some(r) = self.choose_leaving_row() else {
                return Outcome::Optimal;
            };
            let p = self.basis[r];
            let to_lower = self.x[p] < self.p.lower[p];
            let target = if to_lower {
                self.p.lower[p]
            } else {
                self.p.upper[p]
            };
            let s = if to_lower { 1.0 } else { -1.0 };
            self.btran_unit(r);
            self.compute_pivot_row();

            cands.clear();
            for &j in &self.touched {
                let a = s * self.row_alpha[j];
                let dj = self.d[j];
                let ratio = match self.state[j] {
                    State::Lower if a < -PIVOT_TOL => dj.max(0.0) / -a,
                    State::Upper if a > PIVOT_TOL => (-dj).max(0.0) / a,
                    State::Free if a.abs() > PIVOT_TOL => 0.0,
                    _ => continue,
                };
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return Outcome::Infeasible;
            }
            cands.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

            // bound flipping: pass breakpoints while the dual slope stays positive
            let mut slope = (self.x[p] - target).abs();
            let mut k = 0;
            flips.clear();
            if !self.bland {
                while k < cands.len() {
                    let (j, _, absa) = cands[k];
                    let span = self.p.upper[j] - self.p.lower[j];
                    if !span.is_finite() {
                        break;
                    }
                    let next = slope - absa * span;
                    // a breakpoint that closes the gap up to rounding is pivoted on
                    if next <= PRIMAL_TOL {
                        break;
                    }
                    slope = next;
                    flips.push(j);
                    k += 1;
                }
                if k == cands.len() {
                    return Outcome::Infeasible;
                }
            }
            let rest = &cands[k..];
            let q_idx = if self.bland {
                let tmin = rest[0].1;
                let mut best = 0;
                for (idx, c) in rest.iter().enumerate() {
                    if c.1 <= tmin && c.0 < rest[best].0 {
                        best = idx;
                    }
                }
                best
            } else {
                let mut tmax = f64::INFINITY;
                for &(j, _, absa) in rest {
                    let dj = match self.state[j] {
                        State::Lower => self.d[j].max(0.0),
                        State::Upper => (-self.d[j]).max(0.0),
                        _ => self.d[j].abs(),
                    };
                    tmax = tmax.min((dj + DUAL_TOL) / absa);
                }
                let mut best = 0;
                let mut best_a = -1.0;
                for (idx, &(_, t, absa)) in rest.iter().enumerate() {
                    if t <= tmax && absa > best_a {
                        best_a = absa;
                        best = idx;
                    }
                }
                best
            };
            let (q, t, _) = rest[q_idx];

            self.ftran_column(q);
            let ar = self.alpha[r];
            let check = (ar - self.row_alpha[q]).abs();
            if (check > 1e-7 * (1.0 + ar.abs()) || ar.abs() < PIVOT_TOL) && retries < 3 {
                retries += 1;
                self.alpha.iter_mut().for_each(|v| *v = 0.0);
                self.fresh_start();
                continue;
            }
            retries = 0;

            if !flips.is_empty() {
                for &j in &flips {
                    let (ns, nv) = match self.state[j] {
                        State::Lower => (State::Upper, self.p.upper[j]),
                        _ => (State::Lower, self.p.lower[j]),
                    };
                    let delta = nv - self.x[j];
                    self.x[j] = nv;
                    self.state[j] = ns;
                    let (idx, val) = self.p.column(j);
                    for (&i, &a) in idx.iter().zip(val) {
                        self.col_work[i] += a * delta;
                    }
                }
                self.lu.ftran(&mut self.col_work, &mut self.pos_work);
                for i in 0..self.m {
                    self.x[self.basis[i]] -= self.pos_work[i];
                    self.pos_work[i] = 0.0;
                }
            }

            let theta = (self.x[p] - target) / ar;
            for i in 0..self.m {
                if self.alpha[i] != 0.0 {
                    self.x[self.basis[i]] -= theta * self.alpha[i];
                }
            }
            self.x[q] += theta;

            for &j in &self.touched {
                if self.state[j] != State::Basic {
                    self.d[j] += s * t * self.row_alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[p] = s * t;

            self.update_weights(r);
            let (ls, lv) = self.leaving_state(p, to_lower);
            self.replace_basic(r, q, ls, lv);
            self.track_stall(t <= 1e-12);
        }
    }

    fn choose_entering(&self) -> Option<usize> {
        let mut best = None;
        let mut best_score = 0.0;
        for j in 0..self.n + self.m {
            let inf = self.dual_infeasibility(j);
            if inf <= DUAL_TOL {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            if inf > best_score {
                best_score = inf;
                best = Some(j);
            }
        }
        best
    }

    fn primal_phase(&mut self) -> Outcome {
        let mut retries = 0;
        loop {
            if self.iters >= self.max_iters {
                return Outcome::IterLimit;
            }
            if self.needs_refactor() {
                self.fresh_start();
            }
            let Some(q) = self.choose_entering() else {
                return Outcome::Optimal;
            };
            let dir = if self.d[q] < 0.0 { 1.0 } else { -1.0 };
            self.ftran_column(q);

            // Harris two-pass ratio test
            let mut tmax = f64::INFINITY;
            for i in 0..self.m {
                let a = self.alpha[i];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * a;
                let dist = if rate < 0.0 {
                    self.x[b] - self.p.lower[b]
                } else {
                    self.p.upper[b] - self.x[b]
                };
                if dist.is_finite() {
                    tmax = tmax.min((dist.max(0.0) + PRIMAL_TOL) / rate.abs());
                }
            }
            let mut r = NONE;
            let mut theta = f64::INFINITY;
            let mut best_a = -1.0;
            for i in 0..self.m {
                let a = self.alpha[i];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let rate = -dir * a;
                let dist = if rate < 0.0 {
                    self.x[b] - self.p.lower[b]
                } else {
                    self.p.upper[b] - self.x[b]
                };
                if !dist.is_finite() {
                    continue;
                }
                let t = dist.max(0.0) / rate.abs();
                let better = if self.bland {
                    t < theta || (t == theta && r != NONE && b < self.basis[r])
                } else {
                    t <= tmax && a.abs() > best_a
                };
                if better {
                    r = i;
                    theta = t;
                    best_a = a.abs();
                }
            }
            let span = self.p.upper[q] - self.p.lower[q];
            if span.is_finite() && span <= theta {
                // entering variable reaches its opposite bound first
                let (ns, nv) = match self.state[q] {
                    State::Lower => (State::Upper, self.p.upper[q]),
                    _ => (State::Lower, self.p.lower[q]),
                };
                let step = nv - self.x[q];
                for i in 0..self.m {
                    if self.alpha[i] != 0.0 {
                        self.x[self.basis[i]] -= step * self.alpha[i];
                    }
                }
                self.x[q] = nv;
                self.state[q] = ns;
                self.alpha.iter_mut().for_each(|v| *v = 0.0);
                self.iters += 1;
                self.track_stall(false);
                continue;
            }
            if r == NONE {
                return Outcome::Unbounded;
            }

            self.btran_unit(r);
            self.compute_pivot_row();
            let ar = self.alpha[r];
            let check = (ar - self.row_alpha[q]).abs();
            if check > 1e-7 * (1.0 + ar.abs()) && retries < 3 {
                retries += 1;
                self.alpha.iter_mut().for_each(|v| *v = 0.0);
                self.fresh_start();
                continue;
            }
            retries = 0;

            let p = self.basis[r];
            let step = dir * theta;
            for i in 0..self.m {
                if self.alpha[i] != 0.0 {
                    self.x[self.basis[i]] -= step * self.alpha[i];
                }
            }
            self.x[q] += step;
            let to_lower = -dir * ar < 0.0;

            let ratio = self.d[q] / ar;
            for &j in &self.touched {
                if self.state[j] != State::Basic {
                    self.d[j] -= ratio * self.row_alpha[j];
                }
            }
            self.d[q] = 0.0;
            self.d[p] = -ratio;

            self.update_weights(r);
            let (ls, lv) = self.leaving_state(p, to_lower);
            self.replace_basic(r, q, ls, lv);
            self.track_stall(theta == 0.0);
        }
    }

    fn run(&mut self) -> Outcome {
        if self.m == 0 {
            return self.run_unconstrained();
        }
        for round in 0..MAX_ROUNDS {
            self.cost.copy_from_slice(&self.p.cost);
            self.fresh_start();
            let pf = self.primal_feasible();
            let df = self.dual_feasible();
            if pf && df {
                return Outcome::Optimal;
            }
            log::trace!("simplex round {round}: primal feasible {pf}, dual feasible {df}");
            if !pf {
                if !df {
                    self.set_artificial_costs();
                    self.compute_duals();
                }
                match self.dual_phase() {
                    Outcome::Optimal => {}
                    other => return other,
                }
                if !df {
                    self.cost.copy_from_slice(&self.p.cost);
                }
                self.compute_duals();
            }
            match self.primal_phase() {
                Outcome::Optimal => {}
                other => return other,
            }
        }
        Outcome::IterLimit
    }

    fn run_unconstrained(&mut self) -> Outcome {
        for j in 0..self.n {
            let c = self.p.cost[j];
            self.d[j] = c;
            let st = self.state[j];
            if (c < 0.0 && !self.p.upper[j].is_finite()) || (c > 0.0 && !self.p.lower[j].is_finite())
            {
                return Outcome::Unbounded;
            }
            if c < 0.0 && st != State::Fixed {
                self.state[j] = State::Upper;
                self.x[j] = self.p.upper[j];
            }
        }
        Outcome::Optimal
    }
}

pub(super) fn solve_validated(lp: &LinearProgram) -> LpSolution {
    let prob = Problem::build(lp);
    let mut sx = Simplex::new(&prob);
    let outcome = sx.run();
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Infeasible => LpStatus::Infeasible,
        Outcome::Unbounded => LpStatus::Unbounded,
        Outcome::IterLimit => LpStatus::IterationLimit,
    };
    let (m, n) = (prob.m, prob.n);
    let mut primal = vec![0.0; n];
    for (j, v) in lp.vars().iter().enumerate() {
        primal[j] = match sx.state[j] {
            State::Lower | State::Fixed => v.lower,
            State::Upper => v.upper,
            _ => sx.x[j] * prob.col_scale[j],
        };
    }
    let duals: Vec<f64> = (0..m).map(|i| sx.y[i] * prob.row_scale[i]).collect();
    let mut reduced_costs: Vec<f64> = lp.vars().iter().map(|v| v.cost).collect();
    for (r, &y) in lp.rows().iter().zip(&duals) {
        if y == 0.0 {
            continue;
        }
        for &(v, a) in &r.coeffs {
            reduced_costs[v.0] -= a * y;
        }
    }
    for (j, d) in reduced_costs.iter_mut().enumerate() {
        if sx.state[j] == State::Basic {
            *d = 0.0;
        }
    }
    let objective = lp.objective_at(&primal);
    log::trace!(
        "lp solved: {} rows, {} cols, {} iterations, {:?}",
        m,
        n,
        sx.iters,
        status
    );
    LpSolution {
        status,
        primal,
        duals,
        reduced_costs,
        objective,
        iterations: sx.iters,
    }
}
