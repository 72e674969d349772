//! Dense primal simplex for `max cᵀx, A x ≤ b, x ≥ 0` with `b ≥ 0`.

use crate::error::{HeisError, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-11;
const PERTURBATION: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200_000;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Most negative reduced cost, falling back to Bland's rule on stalling.
    Dantzig,
    /// Smallest eligible index; never cycles.
    Bland,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Multipliers of the `≤` rows; nonnegative at an optimum.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

pub fn maximize(a: &[Vec<f64>], b: &[f64], c: &[f64], pricing: Pricing) -> Result<LpSolution> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(HeisError::precondition("LP dimensions do not match"));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(HeisError::precondition("right-hand side must be nonnegative"));
    }
    let width = n + m + 1;
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(*v));
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[width - 1] = b[i] + perturbation(i, scale);
    }
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut bland = pricing == Pricing::Bland;
    let mut streak = 0;
    let mut iterations = 0;
    loop {
        let entering = {
            let r = &t[obj..obj + n + m];
            if bland {
                r.iter().position(|&v| v < -COST_TOL)
            } else {
                let mut best = None;
                let mut best_v = -COST_TOL;
                for (j, &v) in r.iter().enumerate() {
                    if v < best_v {
                        best_v = v;
                        best = Some(j);
                    }
                }
                best
            }
        };
        let Some(q) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aiq = t[i * width + q];
            if aiq > PIVOT_TOL {
                let ratio = t[i * width + width - 1].max(0.0) / aiq;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((k, best)) => {
                        if ratio < best - 1e-14 * (1.0 + best)
                            || (ratio <= best + 1e-14 * (1.0 + best) && basis[i] < basis[k])
                        {
                            Some((i, ratio))
                        } else {
                            Some((k, best))
                        }
                    }
                };
            }
        }
        let Some((p, ratio)) = leave else {
            return Err(HeisError::numeric("LP is unbounded"));
        };
        if ratio == 0.0 {
            streak += 1;
            if streak > DEGENERATE_STREAK {
                bland = true;
            }
        } else {
            streak = 0;
        }
        pivot(&mut t, width, m + 1, p, q);
        basis[p] = q;
        iterations += 1;
        if iterations > MAX_ITERATIONS {
            return Err(HeisError::numeric("simplex iteration limit reached"));
        }
    }
    let (x, duals) = refine(a, b, c, &basis)?;
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, duals, objective, iterations })
}

/// Small distinct right-hand-side shifts that break ties between degenerate
/// vertices. The final basis is re-solved against the unshifted data.
fn perturbation(i: usize, scale: f64) -> f64 {
    let h = (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
    PERTURBATION * scale * (1.0 + h as f64 / (1u64 << 53) as f64)
}

fn pivot(t: &mut [f64], width: usize, rows: usize, p: usize, q: usize) {
    let inv = 1.0 / t[p * width + q];
    for v in &mut t[p * width..(p + 1) * width] {
        *v *= inv;
    }
    t[p * width + q] = 1.0;
    let pivot_row: Vec<f64> = t[p * width..(p + 1) * width].to_vec();
    for i in 0..rows {
        if i == p {
            continue;
        }
        let f = t[i * width + q];
        if f == 0.0 {
            continue;
        }
        let row = &mut t[i * width..(i + 1) * width];
        for (v, pv) in row.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        row[q] = 0.0;
    }
}

/// Recomputes the basic solution and the duals from the original data.
fn refine(a: &[Vec<f64>], b: &[f64], c: &[f64], basis: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    let column = |j: usize, i: usize| if j < n { a[i][j] } else if j - n == i { 1.0 } else { 0.0 };
    let mut bm = vec![vec![0.0; m]; m];
    for (k, &j) in basis.iter().enumerate() {
        for i in 0..m {
            bm[i][k] = column(j, i);
        }
    }
    let xb = solve(&bm, b)?;
    let bt: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|k| bm[k][i]).collect()).collect();
    let cb: Vec<f64> = basis.iter().map(|&j| if j < n { c[j] } else { 0.0 }).collect();
    let duals = solve(&bt, &cb)?;
    let mut x = vec![0.0; n];
    for (k, &j) in basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    Ok((x, duals.into_iter().map(|v| v.max(0.0)).collect()))
}

/// Gaussian elimination with partial pivoting.
fn solve(m: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut b = rhs.to_vec();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .expect("nonempty");
        if a[p][k].abs() < 1e-14 {
            return Err(HeisError::numeric("singular basis"));
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}
