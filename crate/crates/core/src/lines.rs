//! Horizontal lines and the incidence geometry between them.
//!
//! A line is a left translate `{base · exp(t(cos φ X + sin φ Y))}` of a
//! horizontal one-parameter subgroup. Every line through `x` lies on the
//! horizontal plane `P_x`, so `q ∈ L` iff `π(q)` is on the projected line and
//! `c_q = plane_height(base, π(q))`.
//!
//! Two facts drive the constructions below. The height of `P_p` above a point
//! moving along a line `L` differs from the height of `L` itself by an affine
//! function of the line parameter (the quadratic terms cancel), so a point
//! `p ∉ π⁻¹(π(L))` is joined to `L` by exactly one line. For skew lines, a
//! segment from `π(L₁)` to `π(L₂)` lifts to a line meeting both iff it
//! cuts off a triangle of signed area `A` with the crossing point, where
//! `A` is the height gap over the crossing; those segments are the tangents
//! of a hyperbola with the two projected lines as asymptotes.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::PI;

use crate::error::{HeisError, Result};
use crate::hgroup::{plane_height, HPoint, Planar, TangentVec};
use crate::rng::substream;
use crate::window::Box3;

/// Tolerance for exact incidence predicates.
pub const INCIDENCE_TOL: f64 = 1e-10;
/// Tolerance for constructions that pass through a solve.
pub const CONSTRUCTION_TOL: f64 = 1e-8;

fn cross(u: Planar, v: Planar) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

fn scale_of(p: &HPoint) -> f64 {
    1.0 + p.a.abs() + p.b.abs() + p.c.abs()
}

/// A horizontal line through `base` with direction angle in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub base: HPoint,
    pub angle: f64,
}

#[derive(Serialize, Deserialize)]
struct LineRepr {
    base: HPoint,
    angle: f64,
}

impl Serialize for Line {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        LineRepr { base: self.canonical_base(), angle: self.angle }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Line {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = LineRepr::deserialize(d)?;
        if !r.base.is_finite() || !r.angle.is_finite() {
            return Err(serde::de::Error::custom("line has non-finite data"));
        }
        Ok(Line::new(r.base, r.angle))
    }
}

impl Line {
    /// Line through `base` with direction `(cos angle, sin angle)`; the angle is reduced mod π.
    pub fn new(base: HPoint, angle: f64) -> Self {
        let mut a = angle.rem_euclid(PI);
        if a >= PI {
            a = 0.0;
        }
        Line { base, angle: a }
    }

    /// Line through two points of a horizontal pair.
    pub fn through(p: &HPoint, q: &HPoint) -> Self {
        Line::new(*p, (q.b - p.b).atan2(q.a - p.a))
    }

    pub fn direction(&self) -> Planar {
        let (s, c) = self.angle.sin_cos();
        [c, s]
    }

    /// Unit normal of the projected line, rotated a quarter turn counterclockwise.
    pub fn normal(&self) -> Planar {
        let u = self.direction();
        [-u[1], u[0]]
    }

    pub fn point(&self, t: f64) -> HPoint {
        let u = self.direction();
        self.base.mul(&TangentVec::new(t * u[0], t * u[1], 0.0).exp())
    }

    /// The parameter of the point of `π(L)` closest to `w`.
    pub fn project_param(&self, w: Planar) -> f64 {
        let u = self.direction();
        (w[0] - self.base.a) * u[0] + (w[1] - self.base.b) * u[1]
    }

    /// Signed distance from `w` to the projected line, positive on the normal side.
    pub fn planar_offset(&self, w: Planar) -> f64 {
        let n = self.normal();
        (w[0] - self.base.a) * n[0] + (w[1] - self.base.b) * n[1]
    }

    /// Height of the line above a planar point of its projection.
    pub fn height_over(&self, w: Planar) -> f64 {
        plane_height(&self.base, w)
    }

    /// Largest of the planar offset and the height gap; zero iff `q ∈ L`.
    pub fn containment_residual(&self, q: &HPoint) -> f64 {
        let off = self.planar_offset(q.proj()).abs();
        let gap = (q.c - self.height_over(q.proj())).abs();
        off.max(gap)
    }

    pub fn contains(&self, q: &HPoint) -> bool {
        self.containment_residual(q) <= INCIDENCE_TOL * scale_of(q).max(scale_of(&self.base))
    }

    /// Base moved along the line to the point whose projection is nearest the origin.
    pub fn canonical_base(&self) -> HPoint {
        self.point(self.project_param([0.0, 0.0]))
    }

    /// Parameter interval of the part of the line inside `window`.
    ///
    /// Returns the hull `[t_min, t_max]` of the parameters whose points lie in
    /// the box; the height along a line is quadratic in `t`, so the set itself
    /// may be two intervals.
    pub fn clip_to_box(&self, window: &Box3) -> Option<(f64, f64)> {
        let u = self.direction();
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (origin, dir, range) in [(self.base.a, u[0], window.a), (self.base.b, u[1], window.b)] {
            if dir.abs() < 1e-300 {
                if origin < range[0] || origin > range[1] {
                    return None;
                }
            } else {
                let t0 = (range[0] - origin) / dir;
                let t1 = (range[1] - origin) / dir;
                lo = lo.max(t0.min(t1));
                hi = hi.min(t0.max(t1));
            }
        }
        if lo > hi {
            return None;
        }
        // c(t) = c0 + a0·sinφ·t + cosφ·sinφ·t²/2
        let q2 = 0.5 * u[0] * u[1];
        let q1 = self.base.a * u[1];
        let q0 = self.base.c;
        let height = |t: f64| q0 + t * (q1 + t * q2);
        let mut cands = vec![lo, hi];
        for level in window.c {
            for r in quadratic_roots(q2, q1, q0 - level) {
                if r > lo && r < hi {
                    cands.push(r);
                }
            }
        }
        if q2 != 0.0 {
            let v = -q1 / (2.0 * q2);
            if v > lo && v < hi {
                cands.push(v);
            }
        }
        cands.sort_by(f64::total_cmp);
        let slack = 1e-12 * (1.0 + window.c[0].abs().max(window.c[1].abs()));
        let inside = |t: f64| {
            let h = height(t);
            h >= window.c[0] - slack && h <= window.c[1] + slack
        };
        let mut first = None;
        let mut last = None;
        for (idx, &t) in cands.iter().enumerate() {
            if inside(t) {
                first.get_or_insert(t);
                last = Some(t);
            }
            if let Some(&next) = cands.get(idx + 1) {
                let mid = 0.5 * (t + next);
                if inside(mid) {
                    first.get_or_insert(t);
                    last = Some(next);
                }
            }
        }
        match (first, last) {
            (Some(a), Some(b)) if b > a => Some((a, b)),
            _ => None,
        }
    }
}

/// Real roots of `a t² + b t + c`, using the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

pub fn line_from(base: HPoint, angle: f64) -> Line {
    Line::new(base, angle)
}

/// Relative position of two lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairTag {
    Equal,
    Intersecting,
    ParallelSameProjection,
    ParallelDistinctProjection,
    Skew,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairClass {
    pub tag: PairTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<HPoint>,
}

/// Crossing point of two non-parallel projected lines.
fn projection_crossing(l1: &Line, l2: &Line) -> Option<Planar> {
    let u1 = l1.direction();
    let u2 = l2.direction();
    let det = cross(u1, u2);
    if det.abs() < INCIDENCE_TOL {
        return None;
    }
    let d = [l2.base.a - l1.base.a, l2.base.b - l1.base.b];
    let t = cross(d, u2) / det;
    Some([l1.base.a + t * u1[0], l1.base.b + t * u1[1]])
}

/// Height of `L₂` minus height of `L₁` above their projection crossing.
pub fn crossing_gap(l1: &Line, l2: &Line) -> Option<(Planar, f64)> {
    let x = projection_crossing(l1, l2)?;
    Some((x, l2.height_over(x) - l1.height_over(x)))
}

pub fn classify_pair(l1: &Line, l2: &Line) -> PairClass {
    let scale = scale_of(&l1.base).max(scale_of(&l2.base));
    match crossing_gap(l1, l2) {
        None => {
            if l1.planar_offset(l2.base.proj()).abs() > INCIDENCE_TOL * scale {
                PairClass { tag: PairTag::ParallelDistinctProjection, witness: None }
            } else if (l2.base.c - l1.height_over(l2.base.proj())).abs() <= INCIDENCE_TOL * scale {
                PairClass { tag: PairTag::Equal, witness: None }
            } else {
                PairClass { tag: PairTag::ParallelSameProjection, witness: None }
            }
        }
        Some((x, gap)) => {
            let h1 = l1.height_over(x);
            if gap.abs() <= INCIDENCE_TOL * (scale + h1.abs()) {
                PairClass {
                    tag: PairTag::Intersecting,
                    witness: Some(HPoint::new(x[0], x[1], h1)),
                }
            } else {
                PairClass { tag: PairTag::Skew, witness: None }
            }
        }
    }
}

/// All lines through `p` that meet `line`.
///
/// The gap `c_{L(t)} − plane_height(p, π(L(t)))` is affine in `t`, so there
/// is one joining line when `π(p)` is off `π(L)` and none when `p` sits over
/// `π(L)` at the wrong height. Fails when `p ∈ L`.
pub fn join_to_line(p: &HPoint, line: &Line) -> Result<Vec<Line>> {
    if line.contains(p) {
        return Err(HeisError::precondition("point lies on the line; every line through it joins"));
    }
    let u = line.direction();
    let da = line.base.a - p.a;
    let db = line.base.b - p.b;
    let slope = 0.5 * (da * u[1] - db * u[0]);
    let constant = line.base.c - p.c - 0.5 * da * db - p.a * db;
    if slope.abs() <= INCIDENCE_TOL * scale_of(p).max(scale_of(&line.base)) {
        return Ok(Vec::new());
    }
    let t = -constant / slope;
    let target = line.point(t);
    Ok(vec![Line::through(p, &target)])
}

/// Planar point over which every line joining parallel `l1`, `l2` passes.
///
/// The joins are related by the point reflection through this midpoint, so
/// it is the midpoint of any one join segment.
pub fn parallel_join_fiber(l1: &Line, l2: &Line) -> Result<Planar> {
    let class = classify_pair(l1, l2);
    if class.tag != PairTag::ParallelDistinctProjection {
        return Err(HeisError::precondition(format!(
            "lines must be parallel with distinct projections, got {:?}",
            class.tag
        )));
    }
    let joins = join_to_line(&l1.base, l2)?;
    let join = joins
        .first()
        .ok_or_else(|| HeisError::numeric("no join between parallel lines"))?;
    let t = join_param_on(join, l2)?;
    let end = join.point(t);
    Ok([0.5 * (l1.base.a + end.a), 0.5 * (l1.base.b + end.b)])
}

// Parameter along `from` of its crossing with the projection of `onto`.
fn join_param_on(from: &Line, onto: &Line) -> Result<f64> {
    let n = onto.normal();
    let u = from.direction();
    let denom = u[0] * n[0] + u[1] * n[1];
    if denom.abs() < INCIDENCE_TOL {
        return Err(HeisError::numeric("join is parallel to the target line"));
    }
    Ok(-onto.planar_offset(from.base.proj()) / denom)
}

/// Normal form of the tangent hyperbola of a skew pair.
///
/// `to_axis(w) = linear·w + translation` is an area-preserving affine map
/// sending `π(L₁)` to the x-axis and `π(L₂)` to the y-axis; the hyperbola is
/// `xy = c` in those coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperbola {
    pub linear: [[f64; 2]; 2],
    pub translation: [f64; 2],
    pub c: f64,
}

impl Hyperbola {
    pub fn to_axis(&self, w: Planar) -> Planar {
        let m = &self.linear;
        [
            m[0][0] * w[0] + m[0][1] * w[1] + self.translation[0],
            m[1][0] * w[0] + m[1][1] * w[1] + self.translation[1],
        ]
    }

    pub fn from_axis(&self, x: Planar) -> Planar {
        let m = &self.linear;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let y = [x[0] - self.translation[0], x[1] - self.translation[1]];
        [
            (m[1][1] * y[0] - m[0][1] * y[1]) / det,
            (-m[1][0] * y[0] + m[0][0] * y[1]) / det,
        ]
    }

    pub fn determinant(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    /// Endpoints on `π(L₁)` and `π(L₂)` of the tangent at axis abscissa `x0 ≠ 0`.
    pub fn tangent_segment(&self, x0: f64) -> (Planar, Planar) {
        let p1 = self.from_axis([2.0 * x0, 0.0]);
        let p2 = self.from_axis([0.0, 2.0 * self.c / x0]);
        (p1, p2)
    }

    /// `|X·Y − 4c|` for the axis intercepts `X`, `Y` of a projected line;
    /// zero iff the line is tangent. Infinite for lines parallel to an asymptote.
    pub fn tangency_residual(&self, line: &Line) -> f64 {
        let p = self.to_axis(line.base.proj());
        let u = line.direction();
        let m = &self.linear;
        let v = [m[0][0] * u[0] + m[0][1] * u[1], m[1][0] * u[0] + m[1][1] * u[1]];
        if v[0].abs() < 1e-300 || v[1].abs() < 1e-300 {
            return f64::INFINITY;
        }
        let x_int = p[0] - p[1] * v[0] / v[1];
        let y_int = p[1] - p[0] * v[1] / v[0];
        (x_int * y_int - 4.0 * self.c).abs()
    }
}

/// The hyperbola whose tangents lift to the lines meeting both skew lines.
pub fn hyperbola_of_skew(l1: &Line, l2: &Line) -> Result<Hyperbola> {
    let class = classify_pair(l1, l2);
    if class.tag != PairTag::Skew {
        return Err(HeisError::precondition(format!("lines are not skew: {:?}", class.tag)));
    }
    let (x, gap) = crossing_gap(l1, l2).expect("skew lines have crossing projections");
    let u1 = l1.direction();
    let mut u2 = l2.direction();
    if cross(u1, u2) < 0.0 {
        u2 = [-u2[0], -u2[1]];
    }
    let cr = cross(u1, u2);
    let k = cr.sqrt();
    // k·[u1 u2]⁻¹, so that u1 ↦ k e1 and u2 ↦ k e2 with determinant 1.
    let linear = [
        [k * u2[1] / cr, -k * u2[0] / cr],
        [-k * u1[1] / cr, k * u1[0] / cr],
    ];
    let translation = [
        -(linear[0][0] * x[0] + linear[0][1] * x[1]),
        -(linear[1][0] * x[0] + linear[1][1] * x[1]),
    ];
    Ok(Hyperbola { linear, translation, c: 0.5 * gap })
}

/// The horizontal lift of the tangent at `x0`, started on `l1`.
pub fn tangent_lift(l1: &Line, hyperbola: &Hyperbola, x0: f64) -> Line {
    let (p1, p2) = hyperbola.tangent_segment(x0);
    let start = HPoint::new(p1[0], p1[1], l1.height_over(p1));
    Line::new(start, (p2[1] - p1[1]).atan2(p2[0] - p1[0]))
}

/// Height gap, above the crossing of projections, between a line started on
/// `l1` and `l2`. Zero iff the line also meets `l2`.
pub fn meeting_residual(line: &Line, l2: &Line) -> f64 {
    match crossing_gap(line, l2) {
        Some((_, gap)) => gap.abs(),
        None => f64::INFINITY,
    }
}

/// One line of the sampled kinematic family, from its own substream.
///
/// Angle uniform on `[0, π)`, signed offset uniform across the projected
/// window for that angle, base at the middle of the projected chord with a
/// uniform height. Every sampled line meets the window.
pub fn sample_line(window: &Box3, seed: u64, index: u64) -> Line {
    let mut rng = substream(seed, index);
    let angle = rng.gen_range(0.0..PI);
    let (s, c) = angle.sin_cos();
    let normal = [-s, c];
    let center = window.center();
    let half = 0.5 * (window.a[1] - window.a[0]) * normal[0].abs()
        + 0.5 * (window.b[1] - window.b[0]) * normal[1].abs();
    let offset = rng.gen_range(-half..half);
    let through = [center.a + offset * normal[0], center.b + offset * normal[1]];
    let probe = Line::new(HPoint::new(through[0], through[1], 0.0), angle);
    // Midpoint of the planar chord through the rectangle.
    let u = probe.direction();
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (origin, dir, range) in [(through[0], u[0], window.a), (through[1], u[1], window.b)] {
        if dir.abs() > 1e-300 {
            let t0 = (range[0] - origin) / dir;
            let t1 = (range[1] - origin) / dir;
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
    }
    let mid = if lo.is_finite() && hi.is_finite() { 0.5 * (lo + hi) } else { 0.0 };
    let height = rng.gen_range(window.c[0]..window.c[1]);
    let base = HPoint::new(through[0] + mid * u[0], through[1] + mid * u[1], height);
    Line::new(base, angle)
}

/// `n` lines from the sampled kinematic family; identical for a fixed seed
/// regardless of thread count.
pub fn sample_lines(window: &Box3, n: usize, seed: u64) -> Result<Vec<Line>> {
    if n == 0 {
        return Err(HeisError::precondition("line count must be positive"));
    }
    Ok((0..n as u64)
        .into_par_iter()
        .map(|i| sample_line(window, seed, i))
        .collect())
}
