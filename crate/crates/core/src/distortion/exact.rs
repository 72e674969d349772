//! Two-phase simplex over exact rationals with Bland's rule.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{HeisError, Result};

pub type Q = BigRational;

#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub x: Vec<Q>,
    pub objective: Q,
}

pub fn q(v: f64) -> Result<Q> {
    BigRational::from_float(v).ok_or_else(|| HeisError::precondition("non-finite value in exact LP"))
}

pub fn q_int(v: i64) -> Q {
    BigRational::from_integer(BigInt::from(v))
}

pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn pivot(&mut self, p: usize, col: usize, objective: &mut [Q]) {
        let inv = self.rows[p][col].recip();
        for v in &mut self.rows[p] {
            *v *= &inv;
        }
        let prow = self.rows[p].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == p || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !objective[col].is_zero() {
            let f = objective[col].clone();
            for (v, pv) in objective.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[p] = col;
    }

    /// Minimizes with reduced costs in `objective` (last entry: −value).
    fn run(&mut self, objective: &mut [Q], allowed: usize) -> Result<()> {
        let rhs = self.width - 1;
        loop {
            let Some(col) = (0..allowed).find(|&j| objective[j].is_negative()) else {
                return Ok(());
            };
            let mut best: Option<(usize, Q)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col].is_positive() {
                    let ratio = &row[rhs] / &row[col];
                    let better = match &best {
                        None => true,
                        Some((k, r)) => ratio < *r || (ratio == *r && self.basis[i] < self.basis[*k]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((p, _)) = best else {
                return Err(HeisError::numeric("exact LP is unbounded"));
            };
            self.pivot(p, col, objective);
        }
    }
}

/// `min cᵀx` subject to `A x = b`, `x ≥ 0`, with `b ≥ 0`.
pub fn minimize(a: &[Vec<Q>], b: &[Q], c: &[Q]) -> Result<ExactSolution> {
    let m = a.len();
    let n = c.len();
    if b.iter().any(|v| v.is_negative()) {
        return Err(HeisError::precondition("right-hand side must be nonnegative"));
    }
    let width = n + m + 1;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![Q::zero(); width];
        row[..n].clone_from_slice(&a[i]);
        row[n + i] = Q::one();
        row[width - 1] = b[i].clone();
        rows.push(row);
    }
    let mut t = Tableau { rows, basis: (n..n + m).collect(), width };

    // Phase one: minimize the sum of artificials.
    let mut phase1 = vec![Q::zero(); width];
    for j in n..n + m {
        phase1[j] = Q::one();
    }
    for i in 0..m {
        for j in 0..width {
            let v = t.rows[i][j].clone();
            phase1[j] -= v;
        }
    }
    t.run(&mut phase1, n + m)?;
    if !phase1[width - 1].is_zero() {
        return Err(HeisError::numeric("exact LP is infeasible"));
    }
    // Drive remaining artificials out of the basis.
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            if let Some(col) = (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                t.pivot(i, col, &mut phase1);
            } else {
                t.rows.remove(i);
                t.basis.remove(i);
                continue;
            }
        }
        i += 1;
    }

    let mut phase2 = vec![Q::zero(); width];
    phase2[..n].clone_from_slice(c);
    for (i, &bj) in t.basis.iter().enumerate() {
        if !phase2[bj].is_zero() {
            let f = phase2[bj].clone();
            for (v, rv) in phase2.iter_mut().zip(&t.rows[i]) {
                *v -= &f * rv;
            }
        }
    }
    t.run(&mut phase2, n)?;
    let mut x = vec![Q::zero(); n];
    for (i, &bj) in t.basis.iter().enumerate() {
        if bj < n {
            x[bj] = t.rows[i][width - 1].clone();
        }
    }
    let objective = c.iter().zip(&x).fold(Q::zero(), |acc, (ci, xi)| acc + ci * xi);
    Ok(ExactSolution { x, objective })
}
