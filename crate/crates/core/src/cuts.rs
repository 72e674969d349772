//! Half-space cuts, cut measures and the cut metrics they induce.
//!
//! A cut measure `Σ` gives `d_Σ(x, y) = ∫ |χ_E(x) − χ_E(y)| dΣ(E)`. Three
//! representations are supported:
//!
//! - finitely many weighted half-spaces;
//! - translation-invariant vertical measures `dμ(v) × dp`, where `v` is the
//!   direction of the boundary line and `p` its offset, for which
//!   `d_Σ(x, y) = |π(y) − π(x)| ∫ |sin(v − ξ)| dμ(v)`;
//! - horizontal measures `u dλ` with `u` a density on the plane centers. A
//!   horizontal plane `P_y` separates `x₁` and `x₂` iff it crosses the segment
//!   between them, so `d_Σ(x₁, x₂)` is the `u`-mass of that set of centers,
//!   estimated by Monte Carlo over a declared window.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{HeisError, Result};
use crate::hgroup::{plane_height, HPoint, Planar};
use crate::quad;
use crate::rng::substream2;
use crate::window::Box3;

/// Distance below which a point counts as lying on a cut's boundary plane.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Tolerance used to recognize horizontal and vertical pairs.
pub const PAIR_TOL: f64 = 1e-10;
/// Number of fiber-direction strata in horizontal Monte Carlo estimates.
pub const MC_STRATA: usize = 64;
/// Default sample budget for horizontal Monte Carlo estimates.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

const MC_FAMILY: u64 = 0x6375_7473;

fn side_sign(side: i8) -> f64 {
    if side < 0 {
        -1.0
    } else {
        1.0
    }
}

fn normalize_side(side: i8) -> i8 {
    if side < 0 {
        -1
    } else {
        1
    }
}

/// One component of the complement of a vertical or horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HalfSpace {
    /// `side·(⟨π(y), (cos φ, sin φ)⟩ − p) > 0`.
    Vertical { angle: f64, offset: f64, side: i8 },
    /// `side·(c_y − plane_height(center, π(y))) > 0`.
    Horizontal { center: HPoint, side: i8 },
}

impl HalfSpace {
    pub fn vertical(angle: f64, offset: f64, side: i8) -> Self {
        HalfSpace::Vertical { angle, offset, side: normalize_side(side) }
    }

    pub fn horizontal(center: HPoint, side: i8) -> Self {
        HalfSpace::Horizontal { center, side: normalize_side(side) }
    }

    pub fn side(&self) -> i8 {
        match *self {
            HalfSpace::Vertical { side, .. } | HalfSpace::Horizontal { side, .. } => side,
        }
    }

    pub fn complement(&self) -> Self {
        match *self {
            HalfSpace::Vertical { angle, offset, side } => {
                HalfSpace::Vertical { angle, offset, side: -side }
            }
            HalfSpace::Horizontal { center, side } => HalfSpace::Horizontal { center, side: -side },
        }
    }

    /// Signed defining function, before the side is applied.
    pub fn level(&self, y: &HPoint) -> f64 {
        match *self {
            HalfSpace::Vertical { angle, offset, .. } => {
                let (s, c) = angle.sin_cos();
                y.a * c + y.b * s - offset
            }
            HalfSpace::Horizontal { center, .. } => y.c - plane_height(&center, y.proj()),
        }
    }

    pub fn contains(&self, y: &HPoint) -> bool {
        side_sign(self.side()) * self.level(y) > 0.0
    }

    pub fn on_boundary(&self, y: &HPoint) -> bool {
        self.level(y).abs() <= BOUNDARY_TOL
    }

    pub fn is_finite(&self) -> bool {
        match *self {
            HalfSpace::Vertical { angle, offset, .. } => angle.is_finite() && offset.is_finite(),
            HalfSpace::Horizontal { center, .. } => center.is_finite(),
        }
    }
}

/// Result of the elementary cut metric on one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Separation {
    pub separated: bool,
    /// A point sat on the boundary plane; it was counted as not separated.
    pub boundary: bool,
}

impl Separation {
    pub fn value(&self) -> f64 {
        if self.separated {
            1.0
        } else {
            0.0
        }
    }
}

pub fn elementary_separated(e: &HalfSpace, x: &HPoint, y: &HPoint) -> Separation {
    if e.on_boundary(x) || e.on_boundary(y) {
        return Separation { separated: false, boundary: true };
    }
    Separation { separated: e.contains(x) != e.contains(y), boundary: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedCut {
    pub half_space: HalfSpace,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleAtom {
    pub angle: f64,
    pub mass: f64,
}

/// Registered densities on boundary directions `v ∈ [0, π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AngleDensity {
    /// Total mass `mass` spread evenly.
    Uniform { mass: f64 },
    /// `f(v) = Σ_k cos[k]·cos(2kv) + sin[k]·sin(2kv)`.
    Fourier {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl AngleDensity {
    pub fn eval(&self, v: f64) -> f64 {
        match self {
            AngleDensity::Uniform { mass } => mass / PI,
            AngleDensity::Fourier { cos, sin } => {
                let mut s = 0.0;
                for (k, a) in cos.iter().enumerate() {
                    s += a * (2.0 * k as f64 * v).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    s += b * (2.0 * k as f64 * v).sin();
                }
                s
            }
        }
    }

    fn is_nonnegative_by_form(&self) -> bool {
        match self {
            AngleDensity::Uniform { mass } => *mass >= 0.0,
            AngleDensity::Fourier { cos, sin } => {
                let c0 = cos.first().copied().unwrap_or(0.0);
                let rest: f64 = cos.iter().skip(1).chain(sin.iter().skip(1)).map(|x| x.abs()).sum();
                c0 >= rest
            }
        }
    }

    fn is_finite(&self) -> bool {
        match self {
            AngleDensity::Uniform { mass } => mass.is_finite(),
            AngleDensity::Fourier { cos, sin } => cos.iter().chain(sin).all(|x| x.is_finite()),
        }
    }
}

/// Registered densities on horizontal plane centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum PointDensity {
    Constant { value: f64 },
    /// `amplitude · exp(−|y − center|²/(2σ²))` in coordinates.
    Gaussian { center: HPoint, sigma: f64, amplitude: f64 },
}

impl PointDensity {
    pub fn eval(&self, y: &HPoint) -> f64 {
        match self {
            PointDensity::Constant { value } => *value,
            PointDensity::Gaussian { center, sigma, amplitude } => {
                let r2 = (y.a - center.a).powi(2) + (y.b - center.b).powi(2) + (y.c - center.c).powi(2);
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            PointDensity::Constant { value } if value.is_finite() && *value >= 0.0 => Ok(()),
            PointDensity::Gaussian { center, sigma, amplitude }
                if center.is_finite() && sigma.is_finite() && *sigma > 0.0 && amplitude.is_finite() && *amplitude >= 0.0 =>
            {
                Ok(())
            }
            _ => Err(HeisError::precondition("horizontal density must be finite and nonnegative")),
        }
    }
}

fn default_order() -> usize {
    64
}

fn default_samples() -> usize {
    DEFAULT_MC_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalInvariant {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AngleAtom>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<AngleDensity>,
    /// Gauss–Legendre order used for densities.
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub signed: bool,
}

impl VerticalInvariant {
    pub fn from_atoms(atoms: Vec<AngleAtom>) -> Self {
        VerticalInvariant { atoms: Some(atoms), density: None, order: default_order(), signed: false }
    }

    pub fn from_density(density: AngleDensity, order: usize) -> Self {
        VerticalInvariant { atoms: None, density: Some(density), order, signed: false }
    }

    pub fn signed(mut self) -> Self {
        self.signed = true;
        self
    }

    /// `∫ |sin(v − ξ)| dμ(v)`, the cut distance per unit of projected length.
    pub fn profile(&self, xi: f64) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.iter().map(|at| at.mass * (at.angle - xi).sin().abs()).sum();
        }
        let density = self.density.as_ref().expect("validated measure");
        // On [ξ, ξ + π] the weight |sin(v − ξ)| is smooth.
        quad::integrate(|v| (v - xi).sin() * density.eval(v), xi, xi + PI, 1, self.order)
    }

    pub fn total_variation(&self) -> f64 {
        if let Some(atoms) = &self.atoms {
            return atoms.iter().map(|at| at.mass.abs()).sum();
        }
        let density = self.density.as_ref().expect("validated measure");
        match density {
            AngleDensity::Uniform { mass } => mass.abs(),
            AngleDensity::Fourier { .. } => {
                quad::integrate(|v| density.eval(v).abs(), 0.0, PI, 32, 16)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACHorizontal {
    pub density: PointDensity,
    pub window: Box3,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CutMeasure {
    Finite {
        atoms: Vec<WeightedCut>,
        #[serde(default)]
        signed: bool,
    },
    VerticalInvariant(VerticalInvariant),
    AcHorizontal(ACHorizontal),
}

/// A cut distance with its Monte Carlo standard error (zero when exact).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutValue {
    pub value: f64,
    pub stderr: f64,
    /// Number of half-space atoms with a point on their boundary.
    #[serde(default)]
    pub boundary_hits: usize,
}

impl CutValue {
    fn exact(value: f64) -> Self {
        CutValue { value, stderr: 0.0, boundary_hits: 0 }
    }
}

impl CutMeasure {
    pub fn validate(&self) -> Result<()> {
        match self {
            CutMeasure::Finite { atoms, signed } => {
                for at in atoms {
                    if !at.half_space.is_finite() || !at.weight.is_finite() {
                        return Err(HeisError::precondition("cut atom has non-finite data"));
                    }
                    if !signed && at.weight < 0.0 {
                        return Err(HeisError::precondition("negative weight in an unsigned measure"));
                    }
                }
                Ok(())
            }
            CutMeasure::VerticalInvariant(v) => {
                match (&v.atoms, &v.density) {
                    (Some(atoms), None) => {
                        for at in atoms {
                            if !at.angle.is_finite() || !at.mass.is_finite() {
                                return Err(HeisError::precondition("angle atom has non-finite data"));
                            }
                            if !v.signed && at.mass < 0.0 {
                                return Err(HeisError::precondition("negative mass in an unsigned measure"));
                            }
                        }
                    }
                    (None, Some(d)) => {
                        if !d.is_finite() {
                            return Err(HeisError::precondition("angle density has non-finite data"));
                        }
                        if !v.signed && !d.is_nonnegative_by_form() {
                            return Err(HeisError::precondition(
                                "unsigned angle density must be nonnegative (constant term dominating)",
                            ));
                        }
                        if v.order == 0 {
                            return Err(HeisError::precondition("quadrature order must be positive"));
                        }
                    }
                    _ => {
                        return Err(HeisError::precondition(
                            "vertical_invariant needs exactly one of `atoms` or `density`",
                        ))
                    }
                }
                Ok(())
            }
            CutMeasure::AcHorizontal(h) => {
                h.density.validate()?;
                if h.samples < MC_STRATA {
                    return Err(HeisError::precondition(format!(
                        "sample budget must be at least {MC_STRATA}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Upper bound on `d_Σ / d`: infinite for atomic measures with mass,
    /// the total variation of `μ` for vertical-invariant ones, and unknown for
    /// horizontal densities.
    pub fn lipschitz_bound(&self) -> Option<f64> {
        match self {
            CutMeasure::Finite { atoms, .. } => {
                Some(if atoms.iter().all(|a| a.weight == 0.0) { 0.0 } else { f64::INFINITY })
            }
            CutMeasure::VerticalInvariant(v) => Some(v.total_variation()),
            CutMeasure::AcHorizontal(_) => None,
        }
    }

    /// Replaces every half-space atom by its complement.
    pub fn complemented(&self) -> CutMeasure {
        match self {
            CutMeasure::Finite { atoms, signed } => CutMeasure::Finite {
                atoms: atoms
                    .iter()
                    .map(|a| WeightedCut { half_space: a.half_space.complement(), weight: a.weight })
                    .collect(),
                signed: *signed,
            },
            other => other.clone(),
        }
    }
}

pub fn cut_distance(sigma: &CutMeasure, x: &HPoint, y: &HPoint) -> Result<CutValue> {
    sigma.validate()?;
    match sigma {
        CutMeasure::Finite { atoms, .. } => {
            let mut value = 0.0;
            let mut hits = 0;
            for at in atoms {
                let s = elementary_separated(&at.half_space, x, y);
                hits += s.boundary as usize;
                value += at.weight * s.value();
            }
            Ok(CutValue { value, stderr: 0.0, boundary_hits: hits })
        }
        CutMeasure::VerticalInvariant(v) => {
            let dx = y.a - x.a;
            let dy = y.b - x.b;
            let len = dx.hypot(dy);
            if len == 0.0 {
                return Ok(CutValue::exact(0.0));
            }
            Ok(CutValue::exact(len * v.profile(dy.atan2(dx))))
        }
        CutMeasure::AcHorizontal(h) => {
            let segment = Segment::classify(x, y)?;
            let (value, stderr) = mc_integrate(h, |c| segment.crossed_by(c));
            Ok(CutValue { value, stderr, boundary_hits: 0 })
        }
    }
}

/// A segment whose crossing planes can be decided in closed form.
#[derive(Debug, Clone, Copy)]
enum Segment {
    Degenerate,
    Horizontal(HPoint, HPoint),
    Vertical(HPoint, f64),
}

impl Segment {
    fn classify(x: &HPoint, y: &HPoint) -> Result<Segment> {
        let scale = 1.0 + x.a.abs().max(y.a.abs()) + x.b.abs().max(y.b.abs()) + x.c.abs().max(y.c.abs());
        let planar = (y.a - x.a).hypot(y.b - x.b);
        if planar <= PAIR_TOL * scale {
            if (y.c - x.c).abs() <= PAIR_TOL * scale {
                return Ok(Segment::Degenerate);
            }
            return Ok(Segment::Vertical(*x, y.c - x.c));
        }
        if is_horizontal_pair(x, y) {
            return Ok(Segment::Horizontal(*x, *y));
        }
        Err(HeisError::UnsupportedPair(format!(
            "horizontal densities are evaluated on horizontal or vertical pairs only: {x:?}, {y:?}"
        )))
    }

    fn crossed_by(&self, center: &HPoint) -> bool {
        match *self {
            Segment::Degenerate => false,
            Segment::Horizontal(x1, x2) => wedge_contains_unchecked(center, &x1, &x2),
            Segment::Vertical(x, dz) => {
                let h = plane_height(center, x.proj()) - x.c;
                if dz > 0.0 {
                    h > 0.0 && h < dz
                } else {
                    h < 0.0 && h > dz
                }
            }
        }
    }
}

pub fn is_horizontal_pair(x: &HPoint, y: &HPoint) -> bool {
    let scale = 1.0 + x.a.abs() + x.b.abs() + x.c.abs() + y.a.abs() + y.b.abs() + y.c.abs();
    (y.c - plane_height(x, y.proj())).abs() <= PAIR_TOL * scale
}

fn wedge_contains_unchecked(y: &HPoint, x1: &HPoint, x2: &HPoint) -> bool {
    // plane_height(x(t), π(y)) − c_y is affine in t along a line, so it has a
    // root in (0, 1) iff its endpoint values have strictly opposite signs.
    let w = y.proj();
    let h0 = plane_height(x1, w) - y.c;
    let h1 = plane_height(x2, w) - y.c;
    h0 * h1 < 0.0
}

/// Whether the horizontal plane centered at `y` crosses the open segment `(x1, x2)`.
pub fn wedge_contains(y: &HPoint, x1: &HPoint, x2: &HPoint) -> Result<bool> {
    if !is_horizontal_pair(x1, x2) {
        return Err(HeisError::UnsupportedPair("wedge region needs a horizontal pair".into()));
    }
    if x1 == x2 {
        return Err(HeisError::precondition("wedge region needs distinct points"));
    }
    Ok(wedge_contains_unchecked(y, x1, x2))
}

/// Stratified Monte Carlo estimate of `∫_window u·1_S dλ`.
fn mc_integrate<F: Fn(&HPoint) -> bool + Sync>(h: &ACHorizontal, indicator: F) -> (f64, f64) {
    let w = &h.window;
    let per = h.samples / MC_STRATA;
    let dc = (w.c[1] - w.c[0]) / MC_STRATA as f64;
    let cell = (w.a[1] - w.a[0]) * (w.b[1] - w.b[0]) * dc;
    let parts: Vec<(f64, f64)> = (0..MC_STRATA)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream2(h.seed, MC_FAMILY, k as u64);
            let c_lo = w.c[0] + k as f64 * dc;
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                let y = HPoint::new(
                    rng.gen_range(w.a[0]..w.a[1]),
                    rng.gen_range(w.b[0]..w.b[1]),
                    c_lo + dc * rng.gen::<f64>(),
                );
                if indicator(&y) {
                    let f = h.density.eval(&y);
                    s += f;
                    s2 += f * f;
                }
            }
            let n = per as f64;
            let mean = s / n;
            let var = if per > 1 { (s2 / n - mean * mean).max(0.0) * n / (n - 1.0) } else { 0.0 };
            (cell * mean, cell * cell * var / n)
        })
        .collect();
    let value = parts.iter().map(|p| p.0).sum();
    let var: f64 = parts.iter().map(|p| p.1).sum();
    (value, var.sqrt())
}

/// `|Σ|(π⁻¹(S)) ∩ window` for the strip `S` of half-width `r` around the
/// planar line through `point` with direction angle `angle`.
pub fn strip_mass(h: &ACHorizontal, point: Planar, angle: f64, r: f64) -> Result<(f64, f64)> {
    CutMeasure::AcHorizontal(h.clone()).validate()?;
    if !(r >= 0.0) {
        return Err(HeisError::precondition("strip half-width must be nonnegative"));
    }
    let (s, c) = angle.sin_cos();
    Ok(mc_integrate(h, |y| ((y.a - point[0]) * -s + (y.b - point[1]) * c).abs() < r))
}

/// `α(x1, x2) + α(x2, x3) − α(x1, x3)` for an ordered triple.
pub fn excess<T, D: Fn(&T, &T) -> f64>(d: D, x1: &T, x2: &T, x3: &T) -> f64 {
    d(x1, x2) + d(x2, x3) - d(x1, x3)
}

/// Coefficient of `cos(2kθ)` in the expansion of `|sin θ|` on `[0, π)`.
pub fn sinabs_fourier(k: u32) -> f64 {
    if k == 0 {
        2.0 / PI
    } else {
        let k = k as f64;
        4.0 / (PI * (1.0 - 4.0 * k * k))
    }
}

/// The same coefficient by composite Gauss–Legendre quadrature.
pub fn sinabs_fourier_quadrature(k: u32) -> f64 {
    let kf = k as f64;
    let integral = quad::integrate(|t| t.sin() * (2.0 * kf * t).cos(), 0.0, PI, 64, 24);
    if k == 0 {
        integral / PI
    } else {
        2.0 * integral / PI
    }
}

/// `L⁰_k(x)` by the three-term recurrence.
pub fn laguerre(k: u32, x: f64) -> f64 {
    let mut prev = 1.0;
    if k == 0 {
        return prev;
    }
    let mut cur = 1.0 - x;
    for n in 1..k {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 - x) * cur - nf * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Spherical function `φ_{λ,k,ε}(z, t)` of the Heisenberg group.
pub fn eval_phi(lambda: f64, k: u32, eps: i8, z: Planar, t: f64) -> Result<Complex64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(HeisError::precondition("λ must be positive"));
    }
    if eps != 1 && eps != -1 {
        return Err(HeisError::precondition("ε must be ±1"));
    }
    let m = 1.0 + 2.0 * k as f64;
    let r2 = z[0] * z[0] + z[1] * z[1];
    let amp = (2.0 * PI).powi(2) * lambda / (m * m)
        * (-lambda * r2 / (4.0 * m)).exp()
        * laguerre(k, lambda * r2 / (2.0 * m));
    let phase = -(eps as f64) * lambda * t / m;
    Ok(Complex64::from_polar(1.0, phase) * amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hgroup::TangentVec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vert(t: f64) -> HPoint {
        TangentVec::new(0.0, 0.0, t).exp()
    }

    #[test]
    fn separation_examples() {
        let e = HalfSpace::vertical(0.0, 0.0, 1);
        let x = HPoint::new(-1.0, 0.0, 0.0);
        let y = HPoint::new(1.0, 0.0, 0.0);
        assert!(elementary_separated(&e, &x, &y).separated);
        assert!(!elementary_separated(&e, &x, &x).separated);
        let h = HalfSpace::horizontal(HPoint::IDENTITY, 1);
        assert!(elementary_separated(&h, &vert(1.0), &vert(-1.0)).separated);
        let on = elementary_separated(&e, &HPoint::new(0.0, 3.0, 1.0), &y);
        assert!(on.boundary && !on.separated);
    }

    #[test]
    fn complement_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spaces = [
            HalfSpace::vertical(0.7, 0.3, -1),
            HalfSpace::horizontal(HPoint::new(0.2, -0.5, 1.0), 1),
        ];
        let w = Box3::cube(2.0).unwrap();
        for e in spaces {
            for _ in 0..1000 {
                let y = w.sample(&mut rng);
                assert_ne!(e.contains(&y), e.complement().contains(&y));
            }
        }
    }

    #[test]
    fn horizontal_halfspace_boundary_is_the_plane() {
        let center = HPoint::new(0.3, -0.2, 0.5);
        let e = HalfSpace::horizontal(center, 1);
        for w in [[1.0, 2.0], [-0.5, 0.1], [0.3, -0.2]] {
            let on = HPoint::new(w[0], w[1], plane_height(&center, w));
            assert!(e.on_boundary(&on));
            assert!(e.contains(&on.shift_vertical(1e-6)));
        }
    }

    #[test]
    fn finite_cut_distance() {
        let m = CutMeasure::Finite {
            atoms: vec![WeightedCut { half_space: HalfSpace::vertical(0.0, 0.0, 1), weight: 2.5 }],
            signed: false,
        };
        let d = cut_distance(&m, &HPoint::new(-1.0, 0.0, 0.0), &HPoint::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(d.value, 2.5);
        let bad = CutMeasure::Finite {
            atoms: vec![WeightedCut { half_space: HalfSpace::vertical(0.0, 0.0, 1), weight: -1.0 }],
            signed: false,
        };
        assert!(cut_distance(&bad, &HPoint::IDENTITY, &HPoint::IDENTITY).is_err());
    }

    #[test]
    fn vertical_uniform_value() {
        for mass in [1.0, 2.0] {
            let atoms_form = CutMeasure::VerticalInvariant(VerticalInvariant::from_density(
                AngleDensity::Uniform { mass },
                64,
            ));
            let d = cut_distance(&atoms_form, &HPoint::IDENTITY, &HPoint::new(0.6, 0.8, 5.0)).unwrap();
            assert!((d.value - 2.0 * mass / PI).abs() < 1e-13);
        }
    }

    #[test]
    fn vertical_profile_diagonalizes_on_fourier_modes() {
        // ∫ |sin(v − ξ)| cos(2kv) dv = (π/2)·ŝ_k·cos(2kξ) for k ≥ 1.
        for k in 1..6usize {
            let mut cos = vec![0.0; k + 1];
            cos[k] = 1.0;
            let m = VerticalInvariant::from_density(AngleDensity::Fourier { cos, sin: vec![] }, 64).signed();
            for xi in [0.0, 0.4, 2.0] {
                let want = 0.5 * PI * sinabs_fourier(k as u32) * (2.0 * k as f64 * xi).cos();
                assert!((m.profile(xi) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vertical_atoms_match_density_limit() {
        // Many equal atoms approximate the uniform density.
        let n = 2000;
        let atoms = (0..n)
            .map(|i| AngleAtom { angle: PI * (i as f64 + 0.5) / n as f64, mass: 1.0 / n as f64 })
            .collect();
        let m = VerticalInvariant::from_atoms(atoms);
        assert!((m.profile(0.3) - 2.0 / PI).abs() < 1e-6);
    }

    #[test]
    fn unsigned_density_must_be_nonnegative() {
        let m = CutMeasure::VerticalInvariant(VerticalInvariant::from_density(
            AngleDensity::Fourier { cos: vec![0.1, 1.0], sin: vec![] },
            32,
        ));
        assert!(m.validate().is_err());
    }

    #[test]
    fn wedge_examples() {
        let x1 = HPoint::new(-1.0, 0.0, 0.0);
        let x2 = HPoint::new(1.0, 0.0, 0.0);
        assert!(wedge_contains(&HPoint::new(0.0, 1.0, 0.25), &x1, &x2).unwrap());
        assert!(!wedge_contains(&HPoint::new(0.0, 0.0, 1.0), &x1, &x2).unwrap());
        assert!(!wedge_contains(&HPoint::new(-1.0, 0.0, 1e9), &x1, &x2).unwrap());
        assert!(wedge_contains(&HPoint::IDENTITY, &x1, &vert(1.0)).is_err());
    }

    #[test]
    fn wedge_matches_dense_root_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = Box3::cube(2.0).unwrap();
        for _ in 0..500 {
            let x1 = w.sample(&mut rng);
            let ang: f64 = rng.gen_range(0.0..PI);
            let s: f64 = rng.gen_range(0.2..2.0);
            let x2 = x1.mul(&TangentVec::new(s * ang.cos(), s * ang.sin(), 0.0).exp());
            let y = w.sample(&mut rng);
            let n = 4000;
            let h = |t: f64| {
                let xt = x1.mul(&TangentVec::new(t * s * ang.cos(), t * s * ang.sin(), 0.0).exp());
                plane_height(&xt, y.proj()) - y.c
            };
            let mut sign_change = false;
            for i in 0..n {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                if h(a) * h(b) < 0.0 {
                    sign_change = true;
                }
            }
            let h0 = h(0.0).abs().min(h(1.0).abs());
            if h0 > 1e-3 {
                assert_eq!(wedge_contains(&y, &x1, &x2).unwrap(), sign_change);
            }
        }
    }

    fn constant_measure(samples: usize, seed: u64) -> ACHorizontal {
        ACHorizontal {
            density: PointDensity::Constant { value: 1.0 },
            window: Box3::new([-2.0, 2.0], [-2.0, 2.0], [-4.0, 4.0]).unwrap(),
            samples,
            seed,
        }
    }

    #[test]
    fn horizontal_measure_matches_fiber_integral() {
        // For constant u the wedge meets each fiber in the interval between
        // the two plane heights, clipped to the window.
        let h = constant_measure(200_000, 3);
        let x1 = HPoint::new(-0.5, 0.2, 0.1);
        let x2 = x1.mul(&TangentVec::new(0.8, 0.3, 0.0).exp());
        let m = CutMeasure::AcHorizontal(h.clone());
        let got = cut_distance(&m, &x1, &x2).unwrap();
        let w = &h.window;
        let inner = |a: f64| {
            quad::integrate(
                |b| {
                    let h1 = plane_height(&x1, [a, b]);
                    let h2 = plane_height(&x2, [a, b]);
                    let (lo, hi) = (h1.min(h2).max(w.c[0]), h1.max(h2).min(w.c[1]));
                    (hi - lo).max(0.0)
                },
                w.b[0],
                w.b[1],
                64,
                8,
            )
        };
        let want = quad::integrate(inner, w.a[0], w.a[1], 64, 8);
        assert!((got.value - want).abs() < 4.0 * got.stderr, "{got:?} vs {want}");
        assert!(got.stderr < 0.02 * want);
    }

    #[test]
    fn non_horizontal_pair_is_unsupported() {
        let m = CutMeasure::AcHorizontal(constant_measure(1000, 1));
        let r = cut_distance(&m, &HPoint::IDENTITY, &HPoint::new(1.0, 0.0, 1.0));
        assert!(matches!(r, Err(HeisError::UnsupportedPair(_))));
    }

    #[test]
    fn fiber_additivity() {
        let x = HPoint::new(0.2, -0.1, -0.5);
        let m = CutMeasure::AcHorizontal(constant_measure(100_000, 11));
        let d = |p: &HPoint, q: &HPoint| cut_distance(&m, p, q).unwrap();
        let (s, s2) = (0.4, 0.7);
        let a = d(&x, &x.shift_vertical(s));
        let b = d(&x.shift_vertical(s), &x.shift_vertical(s + s2));
        let whole = d(&x, &x.shift_vertical(s + s2));
        // Same samples: the crossing sets are disjoint and cover the whole.
        assert!((a.value + b.value - whole.value).abs() < 1e-9 * whole.value);
        let other = CutMeasure::AcHorizontal(constant_measure(100_000, 12));
        let b2 = cut_distance(&other, &x.shift_vertical(s), &x.shift_vertical(s + s2)).unwrap();
        let se = (a.stderr.powi(2) + b2.stderr.powi(2) + whole.stderr.powi(2)).sqrt();
        assert!((a.value + b2.value - whole.value).abs() < 4.0 * se);
    }

    #[test]
    fn strip_mass_scales_linearly() {
        let h = constant_measure(100_000, 4);
        let (m1, e1) = strip_mass(&h, [0.1, -0.2], 0.6, 0.25).unwrap();
        let (m2, e2) = strip_mass(&h, [0.1, -0.2], 0.6, 0.5).unwrap();
        let (m4, _) = strip_mass(&h, [0.1, -0.2], 0.6, 1.0).unwrap();
        assert!(m1 > 0.0);
        assert!(m2 <= 2.0 * m1 + 4.0 * (e1 * e1 * 4.0 + e2 * e2).sqrt());
        assert!(m4 <= 4.0 * m1 * 1.05);
    }

    #[test]
    fn mc_is_thread_count_independent() {
        let m = CutMeasure::AcHorizontal(constant_measure(20_000, 5));
        let x1 = HPoint::new(0.0, 0.0, 0.0);
        let x2 = HPoint::new(1.0, 0.0, 0.0);
        let a = cut_distance(&m, &x1, &x2).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| cut_distance(&m, &x1, &x2).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn excess_examples() {
        let ray = |x: &f64, y: &f64| ((*x >= 0.0) != (*y >= 0.0)) as i32 as f64;
        assert_eq!(excess(ray, &-1.0, &1.0, &2.0), 0.0);
        let interval = |x: &f64, y: &f64| {
            let inside = |t: f64| (0.0..=1.0).contains(&t);
            (inside(*x) != inside(*y)) as i32 as f64
        };
        assert_eq!(excess(interval, &-1.0, &0.5, &2.0), 2.0);
    }

    #[test]
    fn fourier_coefficients() {
        assert!((sinabs_fourier(0) - 0.636_619_772_367_581_3).abs() < 1e-15);
        assert!((sinabs_fourier(1) + 0.424_413_181_578_387_5).abs() < 1e-15);
        for k in 0..=64 {
            assert!(sinabs_fourier(k) != 0.0);
            assert!((sinabs_fourier(k) - sinabs_fourier_quadrature(k)).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn laguerre_closed_forms() {
        for x in [0.0, 0.5, 1.0, 3.7] {
            assert_eq!(laguerre(0, x), 1.0);
            assert!((laguerre(1, x) - (1.0 - x)).abs() < 1e-15);
            assert!((laguerre(2, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-14);
            let l3 = (-x * x * x + 9.0 * x * x - 18.0 * x + 6.0) / 6.0;
            assert!((laguerre(3, x) - l3).abs() < 1e-13);
        }
    }

    #[test]
    fn phi_examples() {
        let v = eval_phi(2.0, 0, 1, [0.0, 0.0], 0.0).unwrap();
        assert!((v.re - 4.0 * PI * PI * 2.0).abs() < 1e-12 && v.im == 0.0);
        let r = 6f64.sqrt();
        let v = eval_phi(1.0, 1, 1, [r, 0.0], 0.0).unwrap();
        assert!(v.re.abs() < 1e-14);
        assert!(eval_phi(0.0, 1, 1, [0.0, 0.0], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn phi_modulus_ignores_t(lambda in 0.1..5.0f64, k in 0u32..8, z0 in -2.0..2.0f64, z1 in -2.0..2.0f64,
                                 t1 in -10.0..10.0f64, t2 in -10.0..10.0f64, pos in any::<bool>()) {
            let eps = if pos { 1 } else { -1 };
            let a = eval_phi(lambda, k, eps, [z0, z1], t1).unwrap().norm();
            let b = eval_phi(lambda, k, eps, [z0, z1], t2).unwrap().norm();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }

        #[test]
        fn complement_leaves_finite_metric(
            angle in 0.0..PI, off in -1.0..1.0f64, w1 in 0.0..3.0f64, w2 in 0.0..3.0f64,
            ca in -1.0..1.0f64, cb in -1.0..1.0f64, cc in -1.0..1.0f64,
            xa in -2.0..2.0f64, xb in -2.0..2.0f64, xc in -2.0..2.0f64,
            ya in -2.0..2.0f64, yb in -2.0..2.0f64, yc in -2.0..2.0f64,
        ) {
            let m = CutMeasure::Finite {
                atoms: vec![
                    WeightedCut { half_space: HalfSpace::vertical(angle, off, 1), weight: w1 },
                    WeightedCut { half_space: HalfSpace::horizontal(HPoint::new(ca, cb, cc), -1), weight: w2 },
                ],
                signed: false,
            };
            let x = HPoint::new(xa, xb, xc);
            let y = HPoint::new(ya, yb, yc);
            let d = cut_distance(&m, &x, &y).unwrap().value;
            prop_assert_eq!(d, cut_distance(&m.complemented(), &x, &y).unwrap().value);
            prop_assert_eq!(d, cut_distance(&m, &y, &x).unwrap().value);
        }

        #[test]
        fn vertical_invariant_factors_through_projection(
            xa in -2.0..2.0f64, xb in -2.0..2.0f64, xc in -2.0..2.0f64,
            ya in -2.0..2.0f64, yb in -2.0..2.0f64, yc in -2.0..2.0f64,
            t in -5.0..5.0f64, s in -5.0..5.0f64,
            m1 in 0.0..2.0f64, a1 in 0.0..PI, m2 in 0.0..2.0f64, a2 in 0.0..PI,
        ) {
            let m = CutMeasure::VerticalInvariant(VerticalInvariant::from_atoms(vec![
                AngleAtom { angle: a1, mass: m1 },
                AngleAtom { angle: a2, mass: m2 },
            ]));
            let x = HPoint::new(xa, xb, xc);
            let y = HPoint::new(ya, yb, yc);
            prop_assert_eq!(cut_distance(&m, &x, &x.shift_vertical(t)).unwrap().value, 0.0);
            let d = cut_distance(&m, &x, &y).unwrap().value;
            let d2 = cut_distance(&m, &x.shift_vertical(t), &y.shift_vertical(s)).unwrap().value;
            prop_assert_eq!(d, d2);
            let lip = m.lipschitz_bound().unwrap();
            prop_assert!(d <= lip * crate::ccmetric::cc_distance(&x, &y) + 1e-12);
        }

        #[test]
        fn vertical_invariant_triangle(
            p in prop::array::uniform6(-2.0..2.0f64), q in prop::array::uniform3(-2.0..2.0f64),
        ) {
            let m = CutMeasure::VerticalInvariant(VerticalInvariant::from_density(
                AngleDensity::Fourier { cos: vec![1.0, 0.3], sin: vec![0.0, 0.5] }, 64,
            ));
            let x = HPoint::new(p[0], p[1], p[2]);
            let y = HPoint::new(p[3], p[4], p[5]);
            let z = HPoint::new(q[0], q[1], q[2]);
            let d = |a: &HPoint, b: &HPoint| cut_distance(&m, a, b).unwrap().value;
            prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + 1e-10);
            prop_assert!((d(&x, &y) - d(&y, &x)).abs() < 1e-12);
        }
    }
}
