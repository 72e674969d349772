//! Minimal `L¹` distortion of finite metrics.
//!
//! A finite metric embeds in `L¹` with distortion `c` iff some nonnegative
//! combination of cut metrics `d_Σ = Σ_E y_E δ_E` satisfies
//! `d ≤ d_Σ ≤ c·d`. Minimizing `c` is a linear program over the
//! `2^{n−1} − 1` nontrivial cuts. It is solved in the equivalent form
//! `max s` subject to `A y ≤ d` and `s·d − A y ≤ 0`, whose origin is feasible;
//! then `c = 1/s` and the decomposition is `y/s`.

pub mod exact;
pub mod simplex;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::ccmetric::{cc_distance, cc_norm};
use crate::cuts::is_horizontal_pair;
use crate::error::{HeisError, Result};
use crate::hgroup::{HPoint, TangentVec};
use crate::rng::substream;

pub use simplex::Pricing;

/// Largest point count accepted by the floating-point LP.
pub const MAX_LP_POINTS: usize = 14;
/// Largest point count accepted by the exact rational LP.
pub const MAX_EXACT_POINTS: usize = 8;
/// Chain pitch with `d(e, exp(kτZ)) = √k`.
pub const UNIT_PITCH: f64 = 1.0 / (4.0 * std::f64::consts::PI);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetric {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

impl FiniteMetric {
    pub fn new(labels: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let m = FiniteMetric { labels, matrix };
        m.validate()?;
        Ok(m)
    }

    pub fn from_points(points: &[HPoint]) -> Result<Self> {
        let labels = (0..points.len()).map(|i| format!("p{i}")).collect();
        Self::from_labeled_points(labels, points)
    }

    pub fn from_labeled_points(labels: Vec<String>, points: &[HPoint]) -> Result<Self> {
        let n = points.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = cc_distance(&points[i], &points[j]);
                matrix[i][j] = d;
                matrix[j][i] = d;
            }
        }
        FiniteMetric::new(labels, matrix)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.matrix.len() != n || self.matrix.iter().any(|r| r.len() != n) {
            return Err(HeisError::precondition(format!("matrix must be {n}×{n}")));
        }
        for i in 0..n {
            if self.matrix[i][i] != 0.0 {
                return Err(HeisError::precondition(format!("matrix[{i}][{i}] must be 0")));
            }
            for j in 0..n {
                let d = self.matrix[i][j];
                if !d.is_finite() || d < 0.0 {
                    return Err(HeisError::precondition(format!("matrix[{i}][{j}] must be finite and ≥ 0")));
                }
                if d != self.matrix[j][i] {
                    return Err(HeisError::precondition(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let slack = self.matrix[i][k] + self.matrix[k][j] - self.matrix[i][j];
                    if slack < -1e-9 {
                        return Err(HeisError::precondition(format!(
                            "triangle inequality fails at ({i},{k},{j}) by {}",
                            -slack
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.matrix[i][j]
    }

    pub fn scaled(&self, lambda: f64) -> FiniteMetric {
        FiniteMetric {
            labels: self.labels.clone(),
            matrix: self.matrix.iter().map(|r| r.iter().map(|v| v * lambda).collect()).collect(),
        }
    }

    /// The submetric on `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> FiniteMetric {
        FiniteMetric {
            labels: indices.iter().map(|&i| self.labels[i].clone()).collect(),
            matrix: indices.iter().map(|&i| indices.iter().map(|&j| self.matrix[i][j]).collect()).collect(),
        }
    }

    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
    }
}

/// How to populate a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BallSpec {
    /// Points `(iε, jε, kε²)` of the dilated integer grid.
    Grid { step: f64 },
    /// Uniform points of the ball by rejection from its bounding box.
    Random { count: usize },
}

/// Points of the CC ball of radius `radius` about the identity. The identity
/// is always included; `chain` adds `exp(kτZ)` for every `k ≥ 1` inside the ball.
pub fn sample_ball(radius: f64, spec: BallSpec, seed: u64, chain: Option<f64>) -> Result<Vec<HPoint>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(HeisError::precondition("radius must be positive"));
    }
    let limit = radius * (1.0 + 1e-12);
    let c_bound = radius * radius * (1.0 / (4.0 * std::f64::consts::PI) + 0.25);
    let mut points = match spec {
        BallSpec::Grid { step } => {
            if !(step > 0.0) || (radius / step) > 1e3 {
                return Err(HeisError::precondition("grid step must be positive and not too fine"));
            }
            let imax = (radius / step).floor() as i64;
            let kmax = (c_bound / (step * step)).ceil() as i64;
            let rows: Vec<Vec<HPoint>> = (-imax..=imax)
                .into_par_iter()
                .map(|i| {
                    let mut row = Vec::new();
                    for j in -imax..=imax {
                        for k in -kmax..=kmax {
                            let p = HPoint::new(i as f64 * step, j as f64 * step, k as f64 * step * step);
                            if cc_norm(&p) <= limit {
                                row.push(p);
                            }
                        }
                    }
                    row
                })
                .collect();
            rows.into_iter().flatten().collect()
        }
        BallSpec::Random { count } => {
            let mut rng = substream(seed, 0);
            let mut pts = vec![HPoint::IDENTITY];
            let mut attempts = 0usize;
            while pts.len() < count {
                let p = HPoint::new(
                    rng.gen_range(-radius..radius),
                    rng.gen_range(-radius..radius),
                    rng.gen_range(-c_bound..c_bound),
                );
                if cc_norm(&p) <= radius {
                    pts.push(p);
                }
                attempts += 1;
                if attempts > 1000 * count.max(1) + 10_000 {
                    return Err(HeisError::numeric("rejection sampling of the ball stalled"));
                }
            }
            pts.truncate(count.max(1));
            pts
        }
    };
    if !points.contains(&HPoint::IDENTITY) {
        points.insert(0, HPoint::IDENTITY);
    }
    if let Some(tau) = chain {
        if !(tau > 0.0) {
            return Err(HeisError::precondition("chain pitch must be positive"));
        }
        let mut k = 1;
        loop {
            let p = TangentVec::new(0.0, 0.0, k as f64 * tau).exp();
            if cc_norm(&p) > limit {
                break;
            }
            if !points.contains(&p) {
                points.push(p);
            }
            k += 1;
        }
    }
    if points.is_empty() {
        return Err(HeisError::precondition("ball sample is empty"));
    }
    Ok(points)
}

/// Cut masks for `n` points: bit `i` set iff point `i` is on side B. Point 0
/// stays on side A, so each cut appears once, in increasing binary order.
pub fn enumerate_cuts(n: usize) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    (1u64..(1u64 << (n - 1))).map(|m| m << 1).collect()
}

fn separates(mask: u64, i: usize, j: usize) -> bool {
    ((mask >> i) & 1) != ((mask >> j) & 1)
}

pub fn mask_to_string(mask: u64, n: usize) -> String {
    (0..n).map(|i| if (mask >> i) & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn mask_from_string(s: &str) -> Result<u64> {
    if s.len() > 63 {
        return Err(HeisError::precondition("cut bitmask too long"));
    }
    let mut mask = 0u64;
    for (i, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => mask |= 1 << i,
            _ => return Err(HeisError::precondition(format!("invalid bitmask character {ch:?}"))),
        }
    }
    Ok(mask)
}

/// Optimality evidence for an LP solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Largest violation of `d ≤ d_Σ ≤ c·d`.
    pub primal_residual: f64,
    /// Largest violation of dual feasibility.
    pub dual_residual: f64,
    /// Sum of complementary products, each nonnegative.
    pub complementarity: f64,
    /// `|c − Σ α_ij d_ij|`.
    pub duality_gap: f64,
}

impl Certificate {
    pub fn max_residual(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.complementarity).max(self.duality_gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutDecomposition {
    pub labels: Vec<String>,
    /// One bitmask string per cut; character `i` is `1` when label `i` is on side B.
    pub cuts: Vec<String>,
    pub weights: Vec<f64>,
    pub distortion: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

impl CutDecomposition {
    pub fn validate(&self) -> Result<()> {
        let n = self.labels.len();
        if self.cuts.len() != self.weights.len() {
            return Err(HeisError::precondition("cuts and weights differ in length"));
        }
        for (s, w) in self.cuts.iter().zip(&self.weights) {
            if s.len() != n {
                return Err(HeisError::precondition(format!("cut {s:?} does not have {n} entries")));
            }
            mask_from_string(s)?;
            if !(*w >= 0.0) || !w.is_finite() {
                return Err(HeisError::precondition("weights must be finite and nonnegative"));
            }
        }
        if !(self.distortion >= 1.0 - 1e-9) {
            return Err(HeisError::precondition("distortion must be at least 1"));
        }
        Ok(())
    }

    /// `d_Σ(i, j) = Σ_E w_E |χ_E(i) − χ_E(j)|`.
    pub fn induced_metric(&self) -> Result<Vec<Vec<f64>>> {
        self.validate()?;
        let n = self.labels.len();
        let masks: Vec<u64> = self.cuts.iter().map(|s| mask_from_string(s)).collect::<Result<_>>()?;
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = masks
                    .iter()
                    .zip(&self.weights)
                    .filter(|(mask, _)| separates(**mask, i, j))
                    .map(|(_, w)| w)
                    .sum();
            }
        }
        Ok(m)
    }

    /// Largest violation of `d ≤ d_Σ ≤ distortion·d` against `metric`.
    pub fn sandwich_violation(&self, metric: &FiniteMetric) -> Result<f64> {
        let ds = self.induced_metric()?;
        let mut worst = 0.0f64;
        for (i, j) in metric.pairs() {
            let d = metric.d(i, j);
            worst = worst.max(d - ds[i][j]).max(ds[i][j] - self.distortion * d);
        }
        Ok(worst)
    }
}

/// Minimal distortion of `metric` with the default pricing rule.
pub fn lp_distortion(metric: &FiniteMetric) -> Result<CutDecomposition> {
    lp_distortion_with(metric, Pricing::Dantzig)
}

pub fn lp_distortion_with(metric: &FiniteMetric, pricing: Pricing) -> Result<CutDecomposition> {
    metric.validate()?;
    let n = metric.len();
    if !(2..=MAX_LP_POINTS).contains(&n) {
        return Err(HeisError::precondition(format!("LP needs 2 ≤ n ≤ {MAX_LP_POINTS}, got {n}")));
    }
    let cuts = enumerate_cuts(n);
    let pairs = metric.pairs();
    let p = pairs.len();
    let nc = cuts.len();
    let incidence: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(i, j)| cuts.iter().map(|&m| if separates(m, i, j) { 1.0 } else { 0.0 }).collect())
        .collect();
    let dist: Vec<f64> = pairs.iter().map(|&(i, j)| metric.d(i, j)).collect();

    let mut a = Vec::with_capacity(2 * p);
    let mut b = Vec::with_capacity(2 * p);
    for r in 0..p {
        let mut row = incidence[r].clone();
        row.push(0.0);
        a.push(row);
        b.push(dist[r]);
    }
    for r in 0..p {
        let mut row: Vec<f64> = incidence[r].iter().map(|v| -v).collect();
        row.push(dist[r]);
        a.push(row);
        b.push(0.0);
    }
    let mut obj = vec![0.0; nc + 1];
    obj[nc] = 1.0;
    let sol = simplex::maximize(&a, &b, &obj, pricing)?;
    let s = sol.x[nc];
    if !(s > 0.0) {
        return Err(HeisError::numeric("LP returned a zero contraction ratio"));
    }
    let c = 1.0 / s;
    let y: Vec<f64> = sol.x[..nc].iter().map(|v| v / s).collect();
    let beta: Vec<f64> = sol.duals[..p].iter().map(|u| c * u).collect();
    let alpha: Vec<f64> = sol.duals[p..].iter().map(|v| c * v).collect();

    let ay: Vec<f64> = incidence.iter().map(|row| row.iter().zip(&y).map(|(a, y)| a * y).sum()).collect();
    let mut primal = 0.0f64;
    let mut comp = 0.0;
    for r in 0..p {
        primal = primal.max(dist[r] - ay[r]).max(ay[r] - c * dist[r]);
        comp += alpha[r] * (ay[r] - dist[r]).abs() + beta[r] * (c * dist[r] - ay[r]).abs();
    }
    let mut dual = 0.0f64;
    for e in 0..nc {
        let reduced: f64 = (0..p).map(|r| incidence[r][e] * (beta[r] - alpha[r])).sum();
        dual = dual.max(-reduced);
        comp += y[e] * reduced.abs();
    }
    let dbeta: f64 = dist.iter().zip(&beta).map(|(d, b)| d * b).sum();
    dual = dual.max((dbeta - 1.0).abs());
    let dalpha: f64 = dist.iter().zip(&alpha).map(|(d, a)| d * a).sum();
    let certificate = Certificate {
        primal_residual: primal.max(0.0),
        dual_residual: dual,
        complementarity: comp,
        duality_gap: (c - dalpha).abs(),
    };

    let mut out_cuts = Vec::new();
    let mut weights = Vec::new();
    for (e, &w) in y.iter().enumerate() {
        if w > 0.0 {
            out_cuts.push(mask_to_string(cuts[e], n));
            weights.push(w);
        }
    }
    Ok(CutDecomposition {
        labels: metric.labels.clone(),
        cuts: out_cuts,
        weights,
        distortion: c,
        certificate: Some(certificate),
    })
}

/// Minimal distortion by the exact rational LP, for `n ≤ MAX_EXACT_POINTS`.
///
/// The distances are converted to rationals exactly, so the result is the
/// exact optimum for the given floating-point matrix.
pub fn exact_distortion(metric: &FiniteMetric) -> Result<exact::Q> {
    use exact::{q, q_int, Q};
    use num_traits::Zero;
    metric.validate()?;
    let n = metric.len();
    if !(2..=MAX_EXACT_POINTS).contains(&n) {
        return Err(HeisError::precondition(format!("exact LP needs 2 ≤ n ≤ {MAX_EXACT_POINTS}")));
    }
    let cuts = enumerate_cuts(n);
    let pairs = metric.pairs();
    let p = pairs.len();
    let nc = cuts.len();
    // Columns: y (nc), c, surplus (p), slack (p).
    let width = nc + 1 + 2 * p;
    let mut a = Vec::with_capacity(2 * p);
    let mut b = Vec::with_capacity(2 * p);
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let mut row = vec![Q::zero(); width];
        for (e, &m) in cuts.iter().enumerate() {
            if separates(m, i, j) {
                row[e] = q_int(1);
            }
        }
        row[nc + 1 + r] = q_int(-1);
        a.push(row);
        b.push(q(metric.d(i, j))?);
    }
    for (r, &(i, j)) in pairs.iter().enumerate() {
        let mut row = vec![Q::zero(); width];
        for (e, &m) in cuts.iter().enumerate() {
            if separates(m, i, j) {
                row[e] = q_int(1);
            }
        }
        row[nc] = -q(metric.d(i, j))?;
        row[nc + 1 + p + r] = q_int(1);
        a.push(row);
        b.push(Q::zero());
    }
    let mut cost = vec![Q::zero(); width];
    cost[nc] = q_int(1);
    Ok(exact::minimize(&a, &b, &cost)?.objective)
}

/// One coordinate per positive-weight cut: `w_E·χ_E(x)`.
pub fn embed_from_cuts(d: &CutDecomposition) -> Result<Vec<Vec<f64>>> {
    d.validate()?;
    let n = d.labels.len();
    let active: Vec<(u64, f64)> = d
        .cuts
        .iter()
        .zip(&d.weights)
        .filter(|(_, w)| **w > 0.0)
        .map(|(s, w)| mask_from_string(s).map(|m| (m, *w)))
        .collect::<Result<_>>()?;
    Ok((0..n)
        .map(|i| active.iter().map(|&(m, w)| if (m >> i) & 1 == 1 { w } else { 0.0 }).collect())
        .collect())
}

pub fn l1_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// Prefix cuts `{0..=i} | {i+1..}` of an ordered chain, weighted by the gaps,
/// so that `d_Σ(i, j) = Σ_{i ≤ k < j} gap_k`.
pub fn prefix_cut_decomposition(labels: Vec<String>, gaps: &[f64]) -> Result<CutDecomposition> {
    let n = labels.len();
    if gaps.len() + 1 != n || n < 2 {
        return Err(HeisError::precondition("need n ≥ 2 labels and n − 1 gaps"));
    }
    let cuts = (0..n - 1)
        .map(|i| {
            let mask: u64 = ((1u64 << n) - 1) & !((1u64 << (i + 1)) - 1);
            mask_to_string(mask, n)
        })
        .collect();
    Ok(CutDecomposition { labels, cuts, weights: gaps.to_vec(), distortion: 1.0, certificate: None })
}

/// A horizontal cross of arm `radius` about the identity plus the central
/// chain `exp(kτZ)`, `k = 1..=chain`.
#[derive(Debug, Clone)]
pub struct CollapseConfig {
    pub name: String,
    pub labels: Vec<String>,
    pub points: Vec<HPoint>,
    /// Indices of the chain points, in order of `k`.
    pub chain: Vec<usize>,
}

pub fn collapse_config(radius: f64, tau: f64, chain: usize) -> CollapseConfig {
    let mut labels = vec!["e".to_string(), "+a".into(), "-a".into(), "+b".into(), "-b".into()];
    let mut points = vec![
        HPoint::IDENTITY,
        HPoint::new(radius, 0.0, 0.0),
        HPoint::new(-radius, 0.0, 0.0),
        HPoint::new(0.0, radius, 0.0),
        HPoint::new(0.0, -radius, 0.0),
    ];
    let mut idx = Vec::new();
    for k in 1..=chain {
        idx.push(points.len());
        labels.push(format!("z{k}"));
        points.push(TangentVec::new(0.0, 0.0, k as f64 * tau).exp());
    }
    CollapseConfig { name: format!("cross{radius}+chain{chain}"), labels, points, chain: idx }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseRow {
    pub config: String,
    pub n: usize,
    pub distortion: f64,
    pub k: usize,
    pub central_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseSummary {
    pub config: String,
    pub radius: f64,
    pub chain: usize,
    pub n: usize,
    pub distortion: f64,
    pub central_min: f64,
    pub horizontal_max: f64,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseReport {
    pub rows: Vec<CollapseRow>,
    pub summaries: Vec<CollapseSummary>,
}

impl CollapseReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("config,n,distortion,k,central_ratio\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{:.16e},{},{:.16e}", r.config, r.n, r.distortion, r.k, r.central_ratio);
        }
        s
    }
}

/// Optimal distortion and the per-`k` ratios `d_Σ(e, exp(kτZ))/d(e, exp(kτZ))`
/// of the optimal decomposition, for every radius and chain length.
pub fn center_collapse_report(radii: &[f64], tau: f64, chains: &[usize]) -> Result<CollapseReport> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(HeisError::precondition("chain pitch must be positive"));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(HeisError::precondition("radii must be positive"));
    }
    if chains.iter().any(|&m| 5 + m > MAX_LP_POINTS) {
        return Err(HeisError::precondition(format!(
            "chain too long: cross plus chain must have at most {MAX_LP_POINTS} points"
        )));
    }
    let jobs: Vec<(f64, usize)> = radii.iter().flat_map(|&r| chains.iter().map(move |&m| (r, m))).collect();
    let results: Vec<Result<(Vec<CollapseRow>, CollapseSummary)>> = jobs
        .par_iter()
        .map(|&(radius, m)| {
            let cfg = collapse_config(radius, tau, m);
            let metric = FiniteMetric::from_labeled_points(cfg.labels.clone(), &cfg.points)?;
            let dec = lp_distortion(&metric)?;
            let ds = dec.induced_metric()?;
            let rows: Vec<CollapseRow> = cfg
                .chain
                .iter()
                .enumerate()
                .map(|(k, &j)| CollapseRow {
                    config: cfg.name.clone(),
                    n: metric.len(),
                    distortion: dec.distortion,
                    k: k + 1,
                    central_ratio: ds[0][j] / metric.d(0, j),
                })
                .collect();
            let central_min = rows.iter().map(|r| r.central_ratio).fold(f64::INFINITY, f64::min);
            let mut horizontal_max = f64::NEG_INFINITY;
            for (i, j) in metric.pairs() {
                if is_horizontal_pair(&cfg.points[i], &cfg.points[j]) {
                    horizontal_max = horizontal_max.max(ds[i][j] / metric.d(i, j));
                }
            }
            let summary = CollapseSummary {
                config: cfg.name.clone(),
                radius,
                chain: m,
                n: metric.len(),
                distortion: dec.distortion,
                central_min,
                horizontal_max,
                certificate: dec.certificate,
            };
            Ok((rows, summary))
        })
        .collect();
    let mut report = CollapseReport { rows: Vec::new(), summaries: Vec::new() };
    for r in results {
        let (rows, summary) = r?;
        report.rows.extend(rows);
        report.summaries.push(summary);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("x{i}")).collect()
    }

    fn cross() -> Vec<HPoint> {
        collapse_config(1.0, UNIT_PITCH, 0).points
    }

    #[test]
    fn ball_grid_contents() {
        let pts = sample_ball(1.0, BallSpec::Grid { step: 1.0 }, 0, None).unwrap();
        for p in cross() {
            assert!(pts.contains(&p), "{p:?}");
        }
        let with_chain = sample_ball(1.0, BallSpec::Grid { step: 0.5 }, 0, Some(UNIT_PITCH)).unwrap();
        assert!(with_chain.contains(&TangentVec::new(0.0, 0.0, UNIT_PITCH).exp()));
        assert!(sample_ball(0.0, BallSpec::Grid { step: 1.0 }, 0, None).is_err());
    }

    #[test]
    fn ball_count_scales_with_homogeneous_dimension() {
        let count = |eps: f64| sample_ball(1.0, BallSpec::Grid { step: eps }, 0, None).unwrap().len() as f64;
        let ratio = count(1.0 / 16.0) / count(1.0 / 8.0);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn random_ball_is_deterministic() {
        let a = sample_ball(2.0, BallSpec::Random { count: 50 }, 9, None).unwrap();
        let b = sample_ball(2.0, BallSpec::Random { count: 50 }, 9, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 50);
        assert!(a.iter().all(|p| cc_norm(p) <= 2.0));
    }

    #[test]
    fn cut_enumeration_order() {
        let cuts = enumerate_cuts(3);
        let s: Vec<String> = cuts.iter().map(|&m| mask_to_string(m, 3)).collect();
        assert_eq!(s, vec!["010", "001", "011"]);
        assert_eq!(enumerate_cuts(14).len(), (1 << 13) - 1);
        assert_eq!(mask_from_string("011").unwrap(), 6);
    }

    #[test]
    fn two_points() {
        let m = FiniteMetric::new(labels(2), vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let d = lp_distortion(&m).unwrap();
        assert!((d.distortion - 1.0).abs() < 1e-12);
        assert_eq!(d.cuts, vec!["01"]);
        assert!((d.weights[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn metric_validation() {
        assert!(FiniteMetric::new(labels(2), vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        let bad_triangle = vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]];
        assert!(FiniteMetric::new(labels(3), bad_triangle).is_err());
    }

    /// Brute force over the three cuts of a 3-point space: the weights
    /// `y_k = (d_ki + d_kj − d_ij)/2` on the singleton cuts reproduce `d`.
    #[test]
    fn three_point_metrics_are_l1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let pts: Vec<HPoint> = (0..3)
                .map(|_| HPoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let m = FiniteMetric::from_points(&pts).unwrap();
            let d = lp_distortion(&m).unwrap();
            assert!((d.distortion - 1.0).abs() < 1e-8);
            let w = |k: usize, i: usize, j: usize| 0.5 * (m.d(k, i) + m.d(k, j) - m.d(i, j));
            assert!(w(0, 1, 2) >= 0.0 && w(1, 0, 2) >= 0.0 && w(2, 0, 1) >= 0.0);
            assert!(d.sandwich_violation(&m).unwrap() < 1e-8);
        }
    }

    #[test]
    fn plus_sign_is_l1() {
        // Center and four unit neighbors of the ℓ¹ grid.
        let mut d = vec![vec![0.0; 5]; 5];
        for i in 1..5 {
            d[0][i] = 1.0;
            d[i][0] = 1.0;
        }
        for i in 1..5 {
            for j in 1..5 {
                if i != j {
                    d[i][j] = if (i as i32 - j as i32).abs() == 2 { 2.0 } else { 1.0 };
                }
            }
        }
        let m = FiniteMetric::new(labels(5), d).unwrap();
        let dec = lp_distortion(&m).unwrap();
        assert!((dec.distortion - 1.0).abs() < 1e-9);
        let exact = exact_distortion(&m).unwrap();
        assert_eq!(exact, exact::q_int(1));
    }

    #[test]
    fn k23_metric_matches_exact_solver() {
        // Path metric of K_{2,3}; not L¹.
        let mut d = vec![vec![2.0; 5]; 5];
        for i in 0..5 {
            d[i][i] = 0.0;
        }
        for i in 0..2 {
            for j in 2..5 {
                d[i][j] = 1.0;
                d[j][i] = 1.0;
            }
        }
        let m = FiniteMetric::new(labels(5), d).unwrap();
        let float = lp_distortion(&m).unwrap().distortion;
        let exact = exact::to_f64(&exact_distortion(&m).unwrap());
        assert!((float - exact).abs() < 1e-9, "{float} vs {exact}");
        assert!(float > 1.0 + 1e-6);
    }

    #[test]
    fn cross_matches_exact_solver() {
        let m = FiniteMetric::from_points(&cross()).unwrap();
        let dec = lp_distortion(&m).unwrap();
        let ex = exact::to_f64(&exact_distortion(&m).unwrap());
        assert!((dec.distortion - ex).abs() < 1e-9);
        let cert = dec.certificate.unwrap();
        assert!(cert.max_residual() < 1e-6, "{cert:?}");
        assert!(dec.sandwich_violation(&m).unwrap() < 1e-8);
    }

    #[test]
    fn pricing_rules_agree() {
        let pts = sample_ball(1.5, BallSpec::Random { count: 7 }, 4, None).unwrap();
        let m = FiniteMetric::from_points(&pts).unwrap();
        let a = lp_distortion_with(&m, Pricing::Dantzig).unwrap().distortion;
        let b = lp_distortion_with(&m, Pricing::Bland).unwrap().distortion;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn embedding_reproduces_cut_metric() {
        let single = CutDecomposition {
            labels: labels(3),
            cuts: vec!["011".into()],
            weights: vec![2.5],
            distortion: 1.0,
            certificate: None,
        };
        let t = embed_from_cuts(&single).unwrap();
        assert_eq!(t, vec![vec![0.0], vec![2.5], vec![2.5]]);
        let pts = sample_ball(1.0, BallSpec::Random { count: 6 }, 2, None).unwrap();
        let m = FiniteMetric::from_points(&pts).unwrap();
        let dec = lp_distortion(&m).unwrap();
        let table = embed_from_cuts(&dec).unwrap();
        let ds = dec.induced_metric().unwrap();
        for i in 0..m.len() {
            for j in 0..m.len() {
                let l1 = l1_distance(&table[i], &table[j]);
                assert!((l1 - ds[i][j]).abs() < 1e-12);
                if i != j {
                    assert!(l1 >= m.d(i, j) - 1e-8 && l1 <= dec.distortion * m.d(i, j) + 1e-8);
                }
            }
        }
    }

    #[test]
    fn permuting_labels_permutes_rows() {
        let pts = sample_ball(1.0, BallSpec::Random { count: 5 }, 5, None).unwrap();
        let m = FiniteMetric::from_points(&pts).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let pm = m.restrict(&perm);
        let a = lp_distortion(&m).unwrap();
        let b = lp_distortion(&pm).unwrap();
        assert!((a.distortion - b.distortion).abs() < 1e-9);
        let tb = embed_from_cuts(&b).unwrap();
        let db = b.induced_metric().unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((l1_distance(&tb[i], &tb[j]) - db[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prefix_cuts_reproduce_path_metrics() {
        let gaps = [0.5, 1.25, 2.0, 0.75];
        let dec = prefix_cut_decomposition(labels(5), &gaps).unwrap();
        let ds = dec.induced_metric().unwrap();
        for i in 0..5 {
            for j in i..5 {
                let want: f64 = gaps[i..j].iter().sum();
                assert_eq!(ds[i][j], want);
            }
        }
    }

    #[test]
    fn fiber_chain_embeds_isometrically() {
        // √|i − j| is not a path metric, but it is a snowflake of the line and still L¹.
        let pts: Vec<HPoint> = (0..7).map(|k| TangentVec::new(0.0, 0.0, k as f64 * UNIT_PITCH).exp()).collect();
        let m = FiniteMetric::from_points(&pts).unwrap();
        assert!((m.d(0, 4) - 2.0).abs() < 1e-12);
        let dec = lp_distortion(&m).unwrap();
        assert!((dec.distortion - 1.0).abs() < 1e-8);
    }

    #[test]
    fn collapse_report_shape() {
        let r = center_collapse_report(&[1.0], UNIT_PITCH, &[2, 4]).unwrap();
        assert_eq!(r.rows.len(), 6);
        assert_eq!(r.summaries.len(), 2);
        assert!(r.summaries[1].distortion >= r.summaries[0].distortion - 1e-9);
        let csv = r.to_csv();
        assert!(csv.starts_with("config,n,distortion,k,central_ratio\n"));
        assert_eq!(csv.lines().count(), 7);
        assert!(center_collapse_report(&[1.0], UNIT_PITCH, &[10]).is_err());
    }

    #[test]
    fn decomposition_json_roundtrip() {
        let m = FiniteMetric::from_points(&cross()).unwrap();
        let dec = lp_distortion(&m).unwrap();
        let json = serde_json::to_string(&dec).unwrap();
        let back: CutDecomposition = serde_json::from_str(&json).unwrap();
        assert_eq!(back, dec);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scale_invariance(seed in 0u64..1000, lambda in 0.1..10.0f64) {
            let pts = sample_ball(1.5, BallSpec::Random { count: 6 }, seed, None).unwrap();
            let m = FiniteMetric::from_points(&pts).unwrap();
            let a = lp_distortion(&m).unwrap();
            let b = lp_distortion(&m.scaled(lambda)).unwrap();
            prop_assert!((a.distortion - b.distortion).abs() < 1e-9);
        }

        #[test]
        fn nesting_monotonicity(seed in 0u64..1000) {
            let pts = sample_ball(1.5, BallSpec::Random { count: 7 }, seed, None).unwrap();
            let m = FiniteMetric::from_points(&pts).unwrap();
            let mut prev = 1.0 - 1e-9;
            for k in 2..=7 {
                let idx: Vec<usize> = (0..k).collect();
                let c = lp_distortion(&m.restrict(&idx)).unwrap().distortion;
                prop_assert!(c >= prev - 1e-9);
                prev = c;
            }
        }

        #[test]
        fn certificates_hold(seed in 0u64..1000) {
            let pts = sample_ball(2.0, BallSpec::Random { count: 8 }, seed, None).unwrap();
            let m = FiniteMetric::from_points(&pts).unwrap();
            let dec = lp_distortion(&m).unwrap();
            prop_assert!(dec.certificate.unwrap().max_residual() < 1e-6);
            prop_assert!(dec.sandwich_violation(&m).unwrap() < 1e-8);
        }
    }
}
