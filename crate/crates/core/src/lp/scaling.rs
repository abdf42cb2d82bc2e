//! Geometric-mean equilibration with power-of-two factors.

/// Row and column factors such that the scaled matrix is
/// `row[i] * a_ij * col[j]`.
#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

const PASSES: usize = 6;

fn pow2(x: f64) -> f64 {
    if !x.is_finite() || x <= 0.0 {
        return 1.0;
    }
    2f64.powi(x.log2().round() as i32)
}

/// Computes scale factors from a column-compressed matrix.
pub(crate) fn geometric(
    m: usize,
    col_start: &[usize],
    row_idx: &[usize],
    vals: &[f64],
) -> Scaling {
    let n = col_start.len() - 1;
    let mut row = vec![1.0; m];
    let mut col = vec![1.0; n];
    for _ in 0..PASSES {
        let mut rmin = vec![f64::INFINITY; m];
        let mut rmax = vec![0.0f64; m];
        for j in 0..n {
            for k in col_start[j]..col_start[j + 1] {
                let a = (vals[k] * col[j]).abs();
                if a == 0.0 {
                    continue;
                }
                let i = row_idx[k];
                rmin[i] = rmin[i].min(a);
                rmax[i] = rmax[i].max(a);
            }
        }
        for i in 0..m {
            if rmax[i] > 0.0 {
                row[i] = pow2(1.0 / (rmin[i] * rmax[i]).sqrt());
            }
        }
        let mut spread = 1.0f64;
        for j in 0..n {
            let mut cmin = f64::INFINITY;
            let mut cmax = 0.0f64;
            for k in col_start[j]..col_start[j + 1] {
                let a = (vals[k] * row[row_idx[k]]).abs();
                if a == 0.0 {
                    continue;
                }
                cmin = cmin.min(a);
                cmax = cmax.max(a);
            }
            if cmax > 0.0 {
                col[j] = pow2(1.0 / (cmin * cmax).sqrt());
                spread = spread.max(cmax / cmin);
            }
        }
        if spread < 4.0 {
            break;
        }
    }
    Scaling { row, col }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_are_powers_of_two_and_equilibrate() {
        // [[1000, 1], [1, 0.001]] column-major
        let col_start = [0, 2, 4];
        let row_idx = [0, 1, 0, 1];
        let vals = [1000.0, 1.0, 1.0, 0.001];
        let s = geometric(2, &col_start, &row_idx, &vals);
        for f in s.row.iter().chain(&s.col) {
            assert_eq!(f.log2().fract(), 0.0);
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..2 {
            for k in col_start[j]..col_start[j + 1] {
                let a = (vals[k] * s.row[row_idx[k]] * s.col[j]).abs();
                lo = lo.min(a);
                hi = hi.max(a);
            }
        }
        assert!(hi / lo < 1e6 / 10.0, "spread {}", hi / lo);
    }
}
