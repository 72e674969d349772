//! Monotonicity of subsets along lines.
//!
//! A set is monotone when almost every line meets it in a ray, the empty set
//! or the whole line, up to null sets. Traces are sampled on the part of each
//! line inside a window, and the defect of a trace is the least fraction of
//! samples that must flip to turn it into a step or a constant.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::ccmetric::cc_distance;
use crate::cuts::HalfSpace;
use crate::error::{HeisError, Result};
use crate::hgroup::{plane_height, HPoint};
use crate::lines::{sample_lines, Line};
use crate::rng::substream2;
use crate::window::Box3;

const FIT_FAMILY: u64 = 0x6669_74;

/// Membership oracle built from closed-form primitives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetOracle {
    All,
    Empty,
    VerticalHalfspace { angle: f64, offset: f64, side: i8 },
    HorizontalHalfspace { center: HPoint, side: i8 },
    CcBall { center: HPoint, radius: f64 },
    EuclideanBall { center: HPoint, radius: f64 },
    /// `lo < ⟨π(y), (cos φ, sin φ)⟩ < hi`.
    VerticalSlab { angle: f64, lo: f64, hi: f64 },
    /// `c < q₀ + q₁a + q₂b + q₃a² + q₄ab + q₅b²`.
    SublevelParaboloid { q: [f64; 6] },
    Complement { set: Box<SetOracle> },
    Union { sets: Vec<SetOracle> },
    Intersection { sets: Vec<SetOracle> },
}

impl SetOracle {
    pub fn half_space(h: &HalfSpace) -> Self {
        match *h {
            HalfSpace::Vertical { angle, offset, side } => {
                SetOracle::VerticalHalfspace { angle, offset, side }
            }
            HalfSpace::Horizontal { center, side } => SetOracle::HorizontalHalfspace { center, side },
        }
    }

    pub fn complement(self) -> Self {
        SetOracle::Complement { set: Box::new(self) }
    }

    pub fn contains(&self, y: &HPoint) -> bool {
        match self {
            SetOracle::All => true,
            SetOracle::Empty => false,
            SetOracle::VerticalHalfspace { angle, offset, side } => {
                HalfSpace::vertical(*angle, *offset, *side).contains(y)
            }
            SetOracle::HorizontalHalfspace { center, side } => {
                HalfSpace::horizontal(*center, *side).contains(y)
            }
            SetOracle::CcBall { center, radius } => cc_distance(center, y) < *radius,
            SetOracle::EuclideanBall { center, radius } => {
                let d2 = (y.a - center.a).powi(2) + (y.b - center.b).powi(2) + (y.c - center.c).powi(2);
                d2 < radius * radius
            }
            SetOracle::VerticalSlab { angle, lo, hi } => {
                let s = y.a * angle.cos() + y.b * angle.sin();
                *lo < s && s < *hi
            }
            SetOracle::SublevelParaboloid { q } => {
                y.c < q[0] + q[1] * y.a + q[2] * y.b + q[3] * y.a * y.a + q[4] * y.a * y.b + q[5] * y.b * y.b
            }
            SetOracle::Complement { set } => !set.contains(y),
            SetOracle::Union { sets } => sets.iter().any(|s| s.contains(y)),
            SetOracle::Intersection { sets } => sets.iter().all(|s| s.contains(y)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match self {
            SetOracle::All | SetOracle::Empty => true,
            SetOracle::VerticalHalfspace { angle, offset, .. } => finite(&[*angle, *offset]),
            SetOracle::HorizontalHalfspace { center, .. } => center.is_finite(),
            SetOracle::CcBall { center, radius } | SetOracle::EuclideanBall { center, radius } => {
                center.is_finite() && radius.is_finite() && *radius >= 0.0
            }
            SetOracle::VerticalSlab { angle, lo, hi } => finite(&[*angle, *lo, *hi]),
            SetOracle::SublevelParaboloid { q } => finite(q),
            SetOracle::Complement { set } => return set.validate(),
            SetOracle::Union { sets } | SetOracle::Intersection { sets } => {
                return sets.iter().try_for_each(|s| s.validate())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(HeisError::precondition("set oracle has invalid parameters"))
        }
    }
}

/// Membership at `n` equispaced parameters of `line` from `t0` to `t1` inclusive.
pub fn trace_line(set: &SetOracle, line: &Line, t0: f64, t1: f64, n: usize) -> Result<Vec<bool>> {
    if n < 2 {
        return Err(HeisError::precondition("a trace needs at least two samples"));
    }
    let h = (t1 - t0) / (n - 1) as f64;
    Ok((0..n).map(|i| set.contains(&line.point(t0 + h * i as f64))).collect())
}

/// Least fraction of entries to flip so the trace becomes a step or a constant.
pub fn defect_line(trace: &[bool]) -> f64 {
    let n = trace.len();
    assert!(n > 0, "empty trace");
    let ones_total = trace.iter().filter(|&&b| b).count();
    // Pattern 0^k 1^(n−k): mismatches are ones in the prefix plus zeros in the suffix.
    let mut ones_prefix = 0;
    let mut best = usize::MAX;
    for k in 0..=n {
        let zeros_suffix = (n - k) - (ones_total - ones_prefix);
        let rising = ones_prefix + zeros_suffix;
        let falling = n - rising;
        best = best.min(rising).min(falling);
        if k < n && trace[k] {
            ones_prefix += 1;
        }
    }
    best as f64 / n as f64
}

/// Whether a trace is already a step or a constant.
pub fn is_step(trace: &[bool]) -> bool {
    trace.windows(2).filter(|w| w[0] != w[1]).count() <= 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectQuantiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub mean_defect: f64,
    pub stderr: f64,
    pub quantiles: DefectQuantiles,
    /// Fraction of lines with a nonzero defect.
    pub nonmonotone_fraction: f64,
    pub n_lines: usize,
    pub n_samples: usize,
    pub window: Box3,
    pub seed: u64,
    /// `mean_defect < 10 / n_samples`.
    pub empirically_monotone: bool,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

pub fn monotonicity_defect(
    set: &SetOracle,
    window: &Box3,
    n_lines: usize,
    n_samples: usize,
    seed: u64,
) -> Result<DefectReport> {
    set.validate()?;
    if n_lines == 0 || n_samples < 2 {
        return Err(HeisError::precondition("need at least one line and two samples per line"));
    }
    let lines = sample_lines(window, n_lines, seed)?;
    let defects: Vec<f64> = lines
        .par_iter()
        .map(|line| match line.clip_to_box(window) {
            Some((t0, t1)) => defect_line(&trace_line(set, line, t0, t1, n_samples).expect("n ≥ 2")),
            None => 0.0,
        })
        .collect();
    let n = defects.len() as f64;
    let mean = defects.iter().sum::<f64>() / n;
    let var = if defects.len() > 1 {
        defects.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = defects.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(DefectReport {
        mean_defect: mean,
        stderr: (var / n).sqrt(),
        quantiles: DefectQuantiles {
            p50: quantile(&sorted, 0.5),
            p90: quantile(&sorted, 0.9),
            p99: quantile(&sorted, 0.99),
            max: sorted[sorted.len() - 1],
        },
        nonmonotone_fraction: defects.iter().filter(|&&d| d > 0.0).count() as f64 / n,
        n_lines,
        n_samples,
        window: *window,
        seed,
        empirically_monotone: mean < 10.0 / n_samples as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCandidate {
    pub half_space: HalfSpace,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub half_space: HalfSpace,
    /// Empirical symmetric-difference fraction of the better family.
    pub fraction: f64,
    pub vertical: FitCandidate,
    pub horizontal: FitCandidate,
    pub budget: usize,
    pub seed: u64,
}

/// Best threshold on `values` for `labels`: returns (mismatches, threshold, side),
/// where the prediction is `side·(value − threshold) > 0`.
fn best_threshold(values: &mut [(f64, bool)]) -> (usize, f64, i8) {
    values.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = values.len();
    let total_in = values.iter().filter(|v| v.1).count();
    // Threshold between index k−1 and k: predict "in" above for side +1.
    let mut in_below = 0;
    let mut best = (usize::MAX, 0.0, 1i8);
    for k in 0..=n {
        let out_above = (n - k) - (total_in - in_below);
        let plus = in_below + out_above;
        let minus = n - plus;
        let thr = if k == 0 {
            values[0].0 - 1.0
        } else if k == n {
            values[n - 1].0 + 1.0
        } else {
            0.5 * (values[k - 1].0 + values[k].0)
        };
        if plus < best.0 {
            best = (plus, thr, 1);
        }
        if minus < best.0 {
            best = (minus, thr, -1);
        }
        if k < n && values[k].1 {
            in_below += 1;
        }
    }
    best
}

fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Random restarts used by the half-space fit.
pub const FIT_RESTARTS: usize = 200;

/// Fits a vertical and a horizontal half-space to `set` on uniform window
/// samples and reports the better one.
pub fn half_space_fit(set: &SetOracle, window: &Box3, budget: usize, seed: u64) -> Result<FitReport> {
    set.validate()?;
    if budget < 1000 {
        return Err(HeisError::precondition("fit budget must be at least 1000 samples"));
    }
    let points: Vec<(HPoint, bool)> = (0..budget as u64)
        .into_par_iter()
        .map(|i| {
            let y = window.sample(&mut substream2(seed, FIT_FAMILY, i));
            (y, set.contains(&y))
        })
        .collect();
    let n = budget as f64;

    let vertical_at = |phi: f64| {
        let (s, c) = phi.sin_cos();
        let mut vals: Vec<(f64, bool)> = points.iter().map(|(y, l)| (y.a * c + y.b * s, *l)).collect();
        best_threshold(&mut vals)
    };
    let horizontal_at = |a0: f64, b0: f64| {
        let mut vals: Vec<(f64, bool)> = points
            .iter()
            .map(|(y, l)| (y.c - plane_height(&HPoint::new(a0, b0, 0.0), y.proj()), *l))
            .collect();
        best_threshold(&mut vals)
    };

    let mut rng = substream2(seed, FIT_FAMILY, u64::MAX);
    let phis: Vec<f64> = (0..FIT_RESTARTS).map(|_| rng.gen_range(0.0..PI)).collect();
    let centers: Vec<(f64, f64)> = (0..FIT_RESTARTS)
        .map(|_| (rng.gen_range(window.a[0]..window.a[1]), rng.gen_range(window.b[0]..window.b[1])))
        .collect();

    // Vertical family: search the angle, the offset and side are exact.
    let mut best_phi = phis
        .par_iter()
        .map(|&phi| (vertical_at(phi).0, phi))
        .min_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)))
        .expect("restarts");
    let width = PI / FIT_RESTARTS as f64;
    for _ in 0..3 {
        let (phi, _) = golden_min(|p| vertical_at(p).0 as f64, best_phi.1 - width, best_phi.1 + width, 40);
        let m = vertical_at(phi).0;
        if m < best_phi.0 {
            best_phi = (m, phi);
        }
    }
    let phi = best_phi.1.rem_euclid(PI);
    let (mis_v, offset, side_v) = vertical_at(phi);
    let vertical = FitCandidate {
        half_space: HalfSpace::vertical(phi, offset, side_v),
        fraction: mis_v as f64 / n,
    };

    // Horizontal family: search the center projection, the height and side are exact.
    let mut best_c = centers
        .par_iter()
        .map(|&(a, b)| (horizontal_at(a, b).0, a, b))
        .min_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)))
        .expect("restarts");
    let span = (window.a[1] - window.a[0]).max(window.b[1] - window.b[0]);
    let mut radius = span / 4.0;
    for _ in 0..4 {
        let (a, _) = golden_min(|a| horizontal_at(a, best_c.2).0 as f64, best_c.1 - radius, best_c.1 + radius, 30);
        let m = horizontal_at(a, best_c.2).0;
        if m < best_c.0 {
            best_c = (m, a, best_c.2);
        }
        let (b, _) = golden_min(|b| horizontal_at(best_c.1, b).0 as f64, best_c.2 - radius, best_c.2 + radius, 30);
        let m = horizontal_at(best_c.1, b).0;
        if m < best_c.0 {
            best_c = (m, best_c.1, b);
        }
        radius /= 2.0;
    }
    let (mis_h, c0, side_h) = horizontal_at(best_c.1, best_c.2);
    let horizontal = FitCandidate {
        half_space: HalfSpace::horizontal(HPoint::new(best_c.1, best_c.2, c0), side_h),
        fraction: mis_h as f64 / n,
    };

    let better = if horizontal.fraction < vertical.fraction { &horizontal } else { &vertical };
    Ok(FitReport {
        half_space: better.half_space,
        fraction: better.fraction,
        vertical,
        horizontal,
        budget,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicCheck {
    pub is_geodesic: bool,
    pub max_excess: f64,
    pub all_monotone: bool,
}

/// Exhaustive excess check of the cut metric `Σ w_E |χ_E(i) − χ_E(j)|` on a
/// grid, compared with monotonicity of every positively weighted trace.
///
/// The excess of a triple is accumulated cut by cut, each cut contributing
/// `0` or `2·w_E`, so zero excess is decided without rounding.
pub fn geodesic_monotone_check(cuts: &[(Vec<bool>, f64)], positions: &[f64]) -> Result<GeodesicCheck> {
    let n = positions.len();
    if cuts.iter().any(|(t, w)| t.len() != n || !(*w >= 0.0)) {
        return Err(HeisError::precondition("traces must share the grid and weights must be nonnegative"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| positions[i].total_cmp(&positions[j]));
    if order.windows(2).any(|w| positions[w[0]] == positions[w[1]]) {
        return Err(HeisError::precondition("positions must be distinct"));
    }
    let mut max_excess = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (order[i], order[j], order[k]);
                let mut e = 0.0;
                for (trace, w) in cuts {
                    if trace[a] == trace[c] && trace[a] != trace[b] {
                        e += 2.0 * w;
                    }
                }
                max_excess = max_excess.max(e);
            }
        }
    }
    let all_monotone = cuts.iter().all(|(trace, w)| {
        *w == 0.0 || is_step(&order.iter().map(|&i| trace[i]).collect::<Vec<_>>())
    });
    let is_geodesic = max_excess == 0.0;
    debug_assert_eq!(is_geodesic, all_monotone);
    Ok(GeodesicCheck { is_geodesic, max_excess, all_monotone })
}
