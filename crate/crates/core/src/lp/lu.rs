//! Sparse LU factorization of simplex bases with a product-form eta file.
//!
//! The factorization is left-looking (one basis column at a time, with a
//! depth-first reach through the already computed `L` columns) and uses
//! threshold partial pivoting with a row-count tie-break. Positions whose
//! columns turn out numerically dependent are reported back so the caller
//! can swap in logical columns.

const NONE: usize = usize::MAX;
const PIVOT_THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;

/// A column given as parallel index/value slices.
pub(crate) type ColRef<'a> = (&'a [usize], &'a [f64]);

#[derive(Debug, Clone)]
struct Eta {
    pos: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_pos: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_nnz: usize,
}

/// Basis positions that could not be pivoted, paired with the row whose
/// logical column replaced them.
pub(crate) type Repairs = Vec<(usize, usize)>;

impl LuFactors {
    pub(crate) fn num_updates(&self) -> usize {
        self.etas.len()
    }

    pub(crate) fn eta_nnz(&self) -> usize {
        self.eta_nnz
    }

    pub(crate) fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Factorizes the `m x m` basis whose column at position `p` is `col(p)`.
    pub(crate) fn factorize<'a, F>(m: usize, col: F) -> (LuFactors, Repairs)
    where
        F: Fn(usize) -> ColRef<'a>,
    {
        let mut row_count = vec![0usize; m];
        let mut col_nnz = Vec::with_capacity(m);
        for p in 0..m {
            let (idx, _) = col(p);
            col_nnz.push(idx.len());
            for &r in idx {
                row_count[r] += 1;
            }
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (col_nnz[p], p));

        let mut lu = LuFactors {
            m,
            l_start: vec![0],
            u_start: vec![0],
            ..Default::default()
        };
        let mut row_step = vec![NONE; m];
        let mut work = vec![0.0; m];
        let mut in_pattern = vec![false; m];
        let mut pattern: Vec<usize> = Vec::new();
        let mut visited = vec![false; m];
        let mut topo: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut singular = Vec::new();

        for &p in &order {
            let (idx, val) = col(p);
            pattern.clear();
            for (&r, &v) in idx.iter().zip(val) {
                if !in_pattern[r] {
                    in_pattern[r] = true;
                    pattern.push(r);
                }
                work[r] += v;
            }

            // Reach of the column through L, in topological order.
            topo.clear();
            for &r in idx {
                let s = row_step[r];
                if s == NONE || visited[s] {
                    continue;
                }
                visited[s] = true;
                stack.push((s, lu.l_start[s]));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (node, mut next) = stack[top];
                    let end = lu.l_start[node + 1];
                    let mut child = None;
                    while next < end {
                        let cs = row_step[lu.l_idx[next]];
                        next += 1;
                        if cs != NONE && !visited[cs] {
                            child = Some(cs);
                            break;
                        }
                    }
                    stack[top].1 = next;
                    match child {
                        Some(cs) => {
                            visited[cs] = true;
                            stack.push((cs, lu.l_start[cs]));
                        }
                        None => {
                            topo.push(node);
                            stack.pop();
                        }
                    }
                }
            }
            for &s in &topo {
                visited[s] = false;
            }

            for &s in topo.iter().rev() {
                let v = work[lu.pivot_row[s]];
                if v == 0.0 {
                    continue;
                }
                for k in lu.l_start[s]..lu.l_start[s + 1] {
                    let r = lu.l_idx[k];
                    if !in_pattern[r] {
                        in_pattern[r] = true;
                        pattern.push(r);
                    }
                    work[r] -= lu.l_val[k] * v;
                }
            }

            let mut max_abs = 0.0f64;
            for &r in &pattern {
                if row_step[r] == NONE {
                    max_abs = max_abs.max(work[r].abs());
                }
            }

            if max_abs < SINGULAR_TOL {
                singular.push(p);
            } else {
                let mut best = NONE;
                for &r in &pattern {
                    if row_step[r] != NONE || work[r].abs() < PIVOT_THRESHOLD * max_abs {
                        continue;
                    }
                    if best == NONE
                        || (row_count[r], r) < (row_count[best], best)
                    {
                        best = r;
                    }
                }
                let step = lu.pivot_row.len();
                let piv = work[best];
                for &s in &topo {
                    let u = work[lu.pivot_row[s]];
                    if u != 0.0 {
                        lu.u_idx.push(s);
                        lu.u_val.push(u);
                    }
                }
                for &r in &pattern {
                    if row_step[r] == NONE && r != best && work[r] != 0.0 {
                        lu.l_idx.push(r);
                        lu.l_val.push(work[r] / piv);
                    }
                }
                lu.u_start.push(lu.u_idx.len());
                lu.l_start.push(lu.l_idx.len());
                lu.u_diag.push(piv);
                lu.pivot_row.push(best);
                lu.pivot_pos.push(p);
                row_step[best] = step;
            }

            for &r in &pattern {
                work[r] = 0.0;
                in_pattern[r] = false;
            }
        }

        let mut repairs = Vec::new();
        if !singular.is_empty() {
            let free_rows: Vec<usize> = (0..m).filter(|&r| row_step[r] == NONE).collect();
            for (p, r) in singular.into_iter().zip(free_rows) {
                let step = lu.pivot_row.len();
                lu.u_start.push(lu.u_idx.len());
                lu.l_start.push(lu.l_idx.len());
                lu.u_diag.push(1.0);
                lu.pivot_row.push(r);
                lu.pivot_pos.push(p);
                row_step[r] = step;
                repairs.push((p, r));
            }
        }
        (lu, repairs)
    }

    /// Solves `B x = a`. `rhs` is dense by row and is consumed as scratch;
    /// the result is written by basis position into `out`.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        let m = self.m;
        for s in 0..m {
            let v = rhs[self.pivot_row[s]];
            if v == 0.0 {
                continue;
            }
            for k in self.l_start[s]..self.l_start[s + 1] {
                rhs[self.l_idx[k]] -= self.l_val[k] * v;
            }
        }
        for s in (0..m).rev() {
            let r = self.pivot_row[s];
            let v = rhs[r];
            rhs[r] = 0.0;
            if v == 0.0 {
                out[self.pivot_pos[s]] = 0.0;
                continue;
            }
            let x = v / self.u_diag[s];
            out[self.pivot_pos[s]] = x;
            for k in self.u_start[s]..self.u_start[s + 1] {
                rhs[self.pivot_row[self.u_idx[k]]] -= self.u_val[k] * x;
            }
        }
        for eta in &self.etas {
            let xr = out[eta.pos];
            if xr == 0.0 {
                continue;
            }
            let xr = xr / eta.pivot;
            out[eta.pos] = xr;
            for &(i, a) in &eta.entries {
                out[i] -= a * xr;
            }
        }
    }

    /// Solves `B^T y = c`. `rhs` is dense by basis position and is consumed;
    /// the result is written by row into `out`.
    pub(crate) fn btran(&self, rhs: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut v = rhs[eta.pos];
            for &(i, a) in &eta.entries {
                v -= a * rhs[i];
            }
            rhs[eta.pos] = v / eta.pivot;
        }
        let m = self.m;
        let mut z = vec![0.0; m];
        for s in 0..m {
            let mut v = rhs[self.pivot_pos[s]];
            for k in self.u_start[s]..self.u_start[s + 1] {
                v -= self.u_val[k] * z[self.u_idx[k]];
            }
            z[s] = v / self.u_diag[s];
        }
        for s in (0..m).rev() {
            let mut v = z[s];
            for k in self.l_start[s]..self.l_start[s + 1] {
                v -= self.l_val[k] * out[self.l_idx[k]];
            }
            out[self.pivot_row[s]] = v;
        }
        rhs.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Records the replacement of the column at `pos` by a column whose
    /// FTRAN image is `alpha` (dense by position).
    pub(crate) fn update(&mut self, pos: usize, alpha: &[f64]) {
        let entries: Vec<(usize, f64)> = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &a)| i != pos && a != 0.0)
            .map(|(i, &a)| (i, a))
            .collect();
        self.eta_nnz += entries.len() + 1;
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            entries,
        });
    }
}
