//! Carnot–Carathéodory distance and geodesics.
//!
//! Length minimizers are horizontal lifts of circular arcs. With the
//! displacement `g = p⁻¹q`, chord length `ℓ = |π(g)|` and exponential
//! height `z = c_g − a_g b_g / 2`, the minimizing arc has central angle `θ`
//! solving `ℓ²(θ − sin θ) / (8 sin²(θ/2)) = |z|` and length
//! `ℓθ / (2 sin(θ/2))`. The degenerate cases are the chord (`z = 0`) and the
//! full circle over a vertical displacement (`ℓ = 0`, length `√(4π|z|)`).
//!
//! The solver works with the half angle `φ = θ/2`. For `φ > π/2` it switches
//! to `ψ = π − φ` so that arcs close to a full circle keep relative precision.

mod grid;

pub use grid::{grid_oracle_distance, grid_oracle_distance_in, GRID_DIRECTION_RADIUS};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::hgroup::{HPoint, Planar};

const BISECTION_STEPS: usize = 110;
const NEWTON_STEPS: usize = 3;

/// `x − sin x`, with a series near zero to avoid cancellation.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.25 {
        let x2 = x * x;
        // x³/3! − x⁵/5! + x⁷/7! − x⁹/9! + x¹¹/11! − x¹³/13!
        x * x2
            * (1.0 / 6.0
                - x2 * (1.0 / 120.0
                    - x2 * (1.0 / 5040.0
                        - x2 * (1.0 / 362_880.0 - x2 * (1.0 / 39_916_800.0 - x2 / 6_227_020_800.0)))))
    } else {
        x - x.sin()
    }
}

/// Arc-area ratio `|z| / ℓ²` as a function of the half angle `φ ∈ (0, π)`.
pub fn arc_area_ratio(half_angle: f64) -> f64 {
    if half_angle <= 0.5 * PI {
        let s = half_angle.sin();
        x_minus_sin(2.0 * half_angle) / (8.0 * s * s)
    } else {
        area_ratio_reflected(PI - half_angle)
    }
}

// Same ratio written in ψ = π − φ.
fn area_ratio_reflected(psi: f64) -> f64 {
    let s = psi.sin();
    (2.0 * PI - 2.0 * psi + (2.0 * psi).sin()) / (8.0 * s * s)
}

fn area_ratio_deriv(phi: f64) -> f64 {
    let s = phi.sin();
    let c = phi.cos();
    0.5 - x_minus_sin(2.0 * phi) * c / (4.0 * s * s * s)
}

fn area_ratio_reflected_deriv(psi: f64) -> f64 {
    let s = psi.sin();
    let n = 2.0 * PI - 2.0 * psi + (2.0 * psi).sin();
    -0.5 - n * psi.cos() / (4.0 * s * s * s)
}

/// Which part of the solver produced a distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArcKind {
    /// `z ≈ 0`: the geodesic is the lifted chord.
    Chord,
    /// `ℓ ≈ 0`: the geodesic is a lifted full circle.
    Vertical,
    /// Generic circular arc.
    Arc,
}

/// Solution of the arc equation for one displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSolution {
    pub kind: ArcKind,
    /// Chord length `ℓ`.
    pub chord: f64,
    /// Exponential height `z` (signed).
    pub height: f64,
    /// Central angle `θ ∈ [0, 2π]`.
    pub theta: f64,
    /// `π − θ/2` when the arc is longer than a half circle, else `θ/2`.
    /// Kept separately because `θ` alone loses precision near `2π`.
    reduced: f64,
    reflected: bool,
    /// CC length of the arc.
    pub length: f64,
}

impl ArcSolution {
    /// Radius of the projected circle; infinite for the chord case.
    pub fn radius(&self) -> f64 {
        match self.kind {
            ArcKind::Chord => f64::INFINITY,
            ArcKind::Vertical => (self.height.abs() / PI).sqrt(),
            ArcKind::Arc => self.chord / (2.0 * self.reduced.sin()),
        }
    }

    /// Enclosed area `ℓ²(θ − sin θ)/(8 sin²(θ/2))` at the solved angle.
    pub fn enclosed_area(&self) -> f64 {
        match self.kind {
            ArcKind::Chord => 0.0,
            ArcKind::Vertical => self.height.abs(),
            ArcKind::Arc => {
                let ratio = if self.reflected {
                    area_ratio_reflected(self.reduced)
                } else {
                    arc_area_ratio(self.reduced)
                };
                self.chord * self.chord * ratio
            }
        }
    }
}

/// Chord length and exponential height of `p⁻¹q`.
pub fn displacement(p: &HPoint, q: &HPoint) -> (Planar, f64) {
    let g = p.delta_to(q);
    ([g.a, g.b], g.c - 0.5 * g.a * g.b)
}

/// Solves the arc equation for chord `ℓ ≥ 0` and height `z`.
pub fn solve_arc(chord: f64, height: f64) -> ArcSolution {
    let az = height.abs();
    if az < 1e-14 * (chord * chord).max(1.0) {
        return ArcSolution {
            kind: ArcKind::Chord,
            chord,
            height,
            theta: 0.0,
            reduced: 0.0,
            reflected: false,
            length: chord,
        };
    }
    if chord < 1e-14 * az.sqrt().max(1.0) {
        return ArcSolution {
            kind: ArcKind::Vertical,
            chord,
            height,
            theta: 2.0 * PI,
            reduced: 0.0,
            reflected: true,
            length: (4.0 * PI * az).sqrt(),
        };
    }
    let ratio = az / (chord * chord);
    let reflected = ratio > PI / 8.0;
    let (f, df): (fn(f64) -> f64, fn(f64) -> f64) = if reflected {
        (area_ratio_reflected, area_ratio_reflected_deriv)
    } else {
        (arc_area_ratio, area_ratio_deriv)
    };
    // f is increasing in φ and decreasing in ψ on (0, π/2].
    let increasing = !reflected;
    let (mut lo, mut hi) = (0.0f64, 0.5 * PI);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = f(mid) > ratio;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..NEWTON_STEPS {
        let r = f(x) - ratio;
        let d = df(x);
        if !(d.is_finite() && d != 0.0) {
            break;
        }
        let next = x - r / d;
        if next > lo && next < hi && (f(next) - ratio).abs() < r.abs() {
            x = next;
        } else {
            break;
        }
    }
    let (theta, length) = if reflected {
        (2.0 * (PI - x), chord * (PI - x) / x.sin())
    } else if x < 1e-8 {
        (2.0 * x, chord * (1.0 + x * x / 6.0))
    } else {
        (2.0 * x, chord * x / x.sin())
    };
    ArcSolution {
        kind: ArcKind::Arc,
        chord,
        height,
        theta,
        reduced: x,
        reflected,
        length,
    }
}

/// CC distance, computed from the left-invariant displacement `p⁻¹q`.
pub fn cc_distance(p: &HPoint, q: &HPoint) -> f64 {
    let (w, z) = displacement(p, q);
    solve_arc(w[0].hypot(w[1]), z).length
}

/// Distance from the identity.
pub fn cc_norm(p: &HPoint) -> f64 {
    cc_distance(&HPoint::IDENTITY, p)
}

/// Sampled length minimizer between two points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub samples: Vec<HPoint>,
    pub length: f64,
    pub theta: f64,
}

impl Geodesic {
    /// Length of the projected polyline through the samples.
    pub fn polygonal_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| (w[1].a - w[0].a).hypot(w[1].b - w[0].b))
            .sum()
    }
}

/// Samples `n ≥ 2` points (including both endpoints) of a geodesic from `p` to `q`.
///
/// Points are exact samples of the lifted arc: the planar point at central
/// angle `α` and the height gained from the circular segment area.
pub fn cc_geodesic(p: &HPoint, q: &HPoint, n: usize) -> Geodesic {
    assert!(n >= 2, "geodesic needs at least two samples");
    let (w, z) = displacement(p, q);
    let chord = w[0].hypot(w[1]);
    let sol = solve_arc(chord, z);
    let sigma = if z >= 0.0 { 1.0 } else { -1.0 };
    let local = |u: Planar, height: f64| HPoint::new(u[0], u[1], height + 0.5 * u[0] * u[1]);

    let samples: Vec<HPoint> = match sol.kind {
        ArcKind::Chord => (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                local([s * w[0], s * w[1]], 0.0)
            })
            .collect(),
        ArcKind::Vertical | ArcKind::Arc => {
            let r = sol.radius();
            // Center of the projected circle; the arc runs counterclockwise
            // around it when z > 0.
            let center = if sol.kind == ArcKind::Vertical {
                [0.0, sigma * r]
            } else {
                let u = [w[0] / chord, w[1] / chord];
                let normal = [-u[1], u[0]];
                let cos_half = if sol.reflected { -sol.reduced.cos() } else { sol.reduced.cos() };
                let off = sigma * r * cos_half;
                [0.5 * w[0] + off * normal[0], 0.5 * w[1] + off * normal[1]]
            };
            let rel = [-center[0], -center[1]];
            (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    let alpha = sol.theta * s;
                    let (sn, cs) = (sigma * alpha).sin_cos();
                    let u = [
                        center[0] + cs * rel[0] - sn * rel[1],
                        center[1] + sn * rel[0] + cs * rel[1],
                    ];
                    let seg = sigma * 0.5 * r * r * x_minus_sin(alpha);
                    local(u, seg)
                })
                .collect()
        }
    };
    Geodesic {
        samples: samples.into_iter().map(|g| p.mul(&g)).collect(),
        length: sol.length,
        theta: sol.theta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::{lift_polyline, shoelace_area, Polyline2D, TangentVec};
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn vertical_distance() {
        let d = cc_distance(&HPoint::IDENTITY, &TangentVec::new(0.0, 0.0, 1.0).exp());
        assert!((d - 3.544_907_701_811_032).abs() < 1e-14);
        for t in [1e-6, 0.3, 7.0, 1e3] {
            let d = cc_distance(&HPoint::IDENTITY, &HPoint::new(0.0, 0.0, -t));
            assert!(rel(d, (4.0 * PI * t).sqrt()) < 1e-15);
        }
        // Off the identity the height difference picks up rounding of order 1e-16.
        for t in [0.3, 7.0, 1e3] {
            let d = cc_distance(&HPoint::new(1.0, 2.0, 3.0), &HPoint::new(1.0, 2.0, 3.0 - t));
            assert!(rel(d, (4.0 * PI * t).sqrt()) < 1e-12);
        }
    }

    #[test]
    fn chord_distance() {
        assert_eq!(cc_distance(&HPoint::IDENTITY, &HPoint::new(3.0, 4.0, 6.0)), 5.0);
        assert_eq!(cc_norm(&HPoint::new(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn half_circle_matches_closed_form() {
        // A half circle of radius r: chord 2r, area πr²/2, length πr.
        let r = 0.8;
        let sol = solve_arc(2.0 * r, 0.5 * PI * r * r);
        assert!(rel(sol.length, PI * r) < 1e-13);
        assert!((sol.theta - PI).abs() < 1e-12);
    }

    #[test]
    fn arc_root_residual() {
        for &(l, z) in &[(1.0, 0.5), (1e-3, 10.0), (5.0, 1e-9), (0.1, -0.3), (2.0, 1e6), (1e-7, 2.0)] {
            let sol = solve_arc(l, z);
            assert_eq!(sol.kind, ArcKind::Arc);
            let resid = (sol.enclosed_area() - f64::abs(z)).abs();
            assert!(resid < 1e-12 * f64::abs(z).max(1.0), "l={l} z={z} resid={resid}");
        }
    }

    #[test]
    fn seams_are_continuous() {
        // Sweep z across 0 at fixed chord, and the chord across 0 at fixed z.
        let mut prev = cc_distance(&HPoint::IDENTITY, &TangentVec::new(1.0, 0.0, -1e-4).exp());
        let steps = 20_000;
        for i in 1..=steps {
            let z = -1e-4 + 2e-4 * i as f64 / steps as f64;
            let d = cc_distance(&HPoint::IDENTITY, &TangentVec::new(1.0, 0.0, z).exp());
            assert!((d - prev).abs() < 1e-6);
            prev = d;
        }
        let mut prev = cc_distance(&HPoint::IDENTITY, &TangentVec::new(-1e-4, 0.0, 1.0).exp());
        for i in 1..=steps {
            let x = -1e-4 + 2e-4 * i as f64 / steps as f64;
            let d = cc_distance(&HPoint::IDENTITY, &TangentVec::new(x, 0.0, 1.0).exp());
            assert!((d - prev).abs() < 1e-6, "jump at x={x}");
            prev = d;
        }
    }

    #[test]
    fn straight_geodesic() {
        let g = cc_geodesic(&HPoint::IDENTITY, &HPoint::new(1.0, 0.0, 0.0), 5);
        for (i, s) in g.samples.iter().enumerate() {
            let t = i as f64 / 4.0;
            assert!((s.a - t).abs() < 1e-15 && s.b.abs() < 1e-15 && s.c.abs() < 1e-15);
        }
        assert_eq!(g.length, 1.0);
        assert_eq!(g.theta, 0.0);
    }

    #[test]
    fn full_circle_geodesic() {
        let q = TangentVec::new(0.0, 0.0, 1.0).exp();
        let g = cc_geodesic(&HPoint::IDENTITY, &q, 65);
        let end = g.samples.last().unwrap();
        assert!((end.a).abs() < 1e-12 && end.b.abs() < 1e-12 && (end.c - 1.0).abs() < 1e-12);
        let proj: Vec<Planar> = g.samples[..64].iter().map(|s| s.proj()).collect();
        // Inscribed 64-gon of the unit-area circle.
        let expect = 0.5 * 64.0 * (2.0 * PI / 64.0).sin() / PI;
        assert!((shoelace_area(&proj) - expect).abs() < 1e-12);
        assert!(rel(g.length, (4.0 * PI).sqrt()) < 1e-14);
    }

    #[test]
    fn samples_lie_on_lift_of_the_arc() {
        // Lifting the projected sample polygon reaches the sampled heights up to
        // the chord/arc segment error, which shrinks as n grows.
        let p = HPoint::new(0.3, -0.2, 1.0);
        let q = HPoint::new(1.1, 0.5, -0.4);
        let mut prev_err = f64::INFINITY;
        for n in [33, 65, 129] {
            let g = cc_geodesic(&p, &q, n);
            let poly = Polyline2D::new(g.samples.iter().map(|s| s.proj()).collect()).unwrap();
            let lift = lift_polyline(&p, &poly).unwrap();
            let err = (lift.endpoint.c - q.c).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
        assert!(prev_err < 1e-3);
    }

    #[test]
    fn polygonal_length_converges() {
        let p = HPoint::new(-0.4, 0.1, 0.2);
        let q = HPoint::new(0.9, -0.6, 1.3);
        let d = cc_distance(&p, &q);
        let e1 = (cc_geodesic(&p, &q, 16).polygonal_length() - d).abs();
        let e2 = (cc_geodesic(&p, &q, 32).polygonal_length() - d).abs();
        let e4 = (cc_geodesic(&p, &q, 64).polygonal_length() - d).abs();
        assert!(e2 < e1 && e4 < e2);
        let order = (e1 / e2).log2();
        assert!(order >= 1.0, "observed order {order}");
    }

    fn pt(r: f64) -> impl Strategy<Value = HPoint> {
        (-r..r, -r..r, -r..r).prop_map(|(a, b, c)| HPoint::new(a, b, c))
    }

    proptest! {
        #[test]
        fn geodesic_endpoint_and_length(p in pt(3.0), q in pt(3.0)) {
            let g = cc_geodesic(&p, &q, 17);
            let end = g.samples.last().unwrap();
            let first = g.samples[0];
            prop_assert!((end.a - q.a).abs() < 1e-8 && (end.b - q.b).abs() < 1e-8 && (end.c - q.c).abs() < 1e-8);
            prop_assert!((first.a - p.a).abs() < 1e-12 && (first.c - p.c).abs() < 1e-12);
            prop_assert!((g.length - cc_distance(&p, &q)).abs() < 1e-8);
        }

        #[test]
        fn projected_samples_lie_on_one_circle(p in pt(3.0), q in pt(3.0)) {
            let g = cc_geodesic(&p, &q, 9);
            let (w, z) = displacement(&p, &q);
            let sol = solve_arc(w[0].hypot(w[1]), z);
            prop_assume!(sol.kind == ArcKind::Arc);
            // Circumcenter of three samples, then every sample's radius residual.
            let s: Vec<Planar> = g.samples.iter().map(|x| x.proj()).collect();
            let (a, b, c) = (s[0], s[4], s[8]);
            let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
            prop_assume!(d.abs() > 1e-6);
            let sq = |v: Planar| v[0] * v[0] + v[1] * v[1];
            let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
            let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
            let r0 = (a[0] - ux).hypot(a[1] - uy);
            for v in &s {
                prop_assert!(((v[0] - ux).hypot(v[1] - uy) - r0).abs() < 1e-9 * r0.max(1.0));
            }
        }

        #[test]
        fn left_invariance(g in pt(5.0), p in pt(5.0), q in pt(5.0)) {
            let d = cc_distance(&p, &q);
            prop_assume!(d > 1e-3);
            prop_assert!(rel(cc_distance(&g.mul(&p), &g.mul(&q)), d) < 1e-10);
        }

        #[test]
        fn dilation_homogeneity(p in pt(5.0), q in pt(5.0), l in 0.05..20.0f64) {
            let d = cc_distance(&p, &q);
            prop_assume!(d > 1e-3);
            prop_assert!(rel(cc_distance(&p.dilate(l), &q.dilate(l)), l * d) < 1e-10);
        }

        #[test]
        fn triangle_inequality(p in pt(4.0), q in pt(4.0), r in pt(4.0)) {
            prop_assert!(cc_distance(&p, &r) <= cc_distance(&p, &q) + cc_distance(&q, &r) + 1e-10);
        }

        #[test]
        fn symmetric(p in pt(4.0), q in pt(4.0)) {
            let (a, b) = (cc_distance(&p, &q), cc_distance(&q, &p));
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }
}
