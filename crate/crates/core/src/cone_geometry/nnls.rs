//! Lawson–Hanson nonnegative least squares and the least-distance program
//! built on it.

use crate::{Error, Result};

/// Least squares min |A x - b| for the columns of `a` listed in `cols`.
/// Columns are stored as vectors of length `rows`.
fn lstsq_cols(a: &[Vec<f64>], cols: &[usize], b: &[f64]) -> Vec<f64> {
    let rows = b.len();
    let k = cols.len();
    // Householder QR on a rows x k copy.
    let mut m: Vec<Vec<f64>> = cols.iter().map(|&c| a[c].clone()).collect();
    let mut rhs = b.to_vec();
    let mut rank_ok = vec![true; k];
    for j in 0..k.min(rows) {
        let norm: f64 = (j..rows).map(|i| m[j][i] * m[j][i]).sum::<f64>().sqrt();
        if norm < 1e-300 {
            rank_ok[j] = false;
            continue;
        }
        let alpha = if m[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (j..rows).map(|i| m[j][i]).collect();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        for col in m.iter_mut().skip(j) {
            let dot: f64 = (j..rows).map(|i| v[i - j] * col[i]).sum();
            let f = 2.0 * dot / vv;
            for i in j..rows {
                col[i] -= f * v[i - j];
            }
        }
        let dot: f64 = (j..rows).map(|i| v[i - j] * rhs[i]).sum();
        let f = 2.0 * dot / vv;
        for i in j..rows {
            rhs[i] -= f * v[i - j];
        }
    }
    let scale = m
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut x = vec![0.0; k];
    for j in (0..k.min(rows)).rev() {
        let d = m[j][j];
        if !rank_ok[j] || d.abs() <= 1e-13 * scale.max(1.0) {
            continue;
        }
        let s: f64 = (j + 1..k.min(rows)).map(|l| m[l][j] * x[l]).sum();
        x[j] = (rhs[j] - s) / d;
    }
    x
}

fn residual(a: &[Vec<f64>], x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = b.to_vec();
    for (col, &xj) in a.iter().zip(x) {
        if xj != 0.0 {
            for (ri, ci) in r.iter_mut().zip(col) {
                *ri -= ci * xj;
            }
        }
    }
    r
}

/// Solve min |A x - b| subject to x >= 0. `a` holds the columns of A.
///
/// The active set grows in index order on ties, so results are reproducible.
pub fn nnls(a: &[Vec<f64>], b: &[f64], tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let m = a.len();
    let mut x = vec![0.0; m];
    let mut passive = vec![false; m];
    let mut iters = 0usize;
    let scale = a
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max)
        * b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let thresh = tol * scale.max(1.0);
    loop {
        let r = residual(a, &x, b);
        let w: Vec<f64> = a
            .iter()
            .map(|c| c.iter().zip(&r).map(|(ci, ri)| ci * ri).sum())
            .collect();
        let mut best: Option<usize> = None;
        for j in 0..m {
            if !passive[j] && w[j] > thresh && best.is_none_or(|b| w[j] > w[b]) {
                best = Some(j);
            }
        }
        let Some(j) = best else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            iters += 1;
            if iters > max_iter {
                return Err(Error::NonConvergence(max_iter));
            }
            let cols: Vec<usize> = (0..m).filter(|&i| passive[i]).collect();
            let sol = lstsq_cols(a, &cols, b);
            if sol.iter().all(|&s| s > 0.0) {
                x = vec![0.0; m];
                for (&c, &s) in cols.iter().zip(&sol) {
                    x[c] = s;
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (&c, &s) in cols.iter().zip(&sol) {
                if s <= 0.0 {
                    let denom = x[c] - s;
                    if denom > 0.0 {
                        alpha = alpha.min(x[c] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (&c, &s) in cols.iter().zip(&sol) {
                x[c] += alpha * (s - x[c]);
                if x[c] <= tol * x[c].abs().max(1.0) {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
}

/// Least-distance feasibility for {y : g_i . y >= 1}. Returns the minimum-norm
/// feasible point, or `None` when the system is infeasible.
pub fn least_distance(generators: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<Option<Vec<f64>>> {
    let Some(first) = generators.first() else {
        return Ok(Some(Vec::new()));
    };
    let n = first.len();
    let cols: Vec<Vec<f64>> = generators
        .iter()
        .map(|g| {
            let mut c = g.clone();
            c.push(1.0);
            c
        })
        .collect();
    let mut f = vec![0.0; n + 1];
    f[n] = 1.0;
    let u = nnls(&cols, &f, tol, max_iter)?;
    let r: Vec<f64> = residual(&cols, &u, &f).iter().map(|v| -v).collect();
    let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-10 || r[n].abs() < 1e-14 {
        return Ok(None);
    }
    let y: Vec<f64> = r[..n].iter().map(|v| -v / r[n]).collect();
    Ok(Some(y))
}

/// Inverse of a square matrix given by rows, or `None` when singular.
pub fn invert(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() <= 1e-12 * scale {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_clamps_identity_problem() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let x = nnls(&a, &[-3.0, 4.0], 1e-12, 100).unwrap();
        assert_eq!(x, vec![0.0, 4.0]);
    }

    #[test]
    fn nnls_matches_unconstrained_when_interior() {
        let a = vec![vec![1.0, 1.0], vec![0.0, 1.0]];
        let x = nnls(&a, &[2.0, 5.0], 1e-12, 100).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 3.0).abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn least_distance_detects_infeasible_system() {
        let g = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        assert!(least_distance(&g, 1e-12, 100).unwrap().is_none());
        let g = vec![vec![1.0, 0.0], vec![1.0, 1.0]];
        let y = least_distance(&g, 1e-12, 100).unwrap().unwrap();
        assert!(g.iter().all(|gi| gi[0] * y[0] + gi[1] * y[1] >= 1.0 - 1e-10), "{y:?}");
    }

    #[test]
    fn invert_two_by_two() {
        let inv = invert(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(inv, vec![vec![1.0, -1.0], vec![0.0, 1.0]]);
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }
}
