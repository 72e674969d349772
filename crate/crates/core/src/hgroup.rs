//! The three-dimensional Heisenberg group in matrix coordinates.
//!
//! A point `(a, b, c)` stands for the unitriangular matrix
//!
//! ```text
//! | 1 a c |
//! | 0 1 b |
//! | 0 0 1 |
//! ```
//!
//! so the group law is `(a,b,c)·(a',b',c') = (a+a', b+b', c+c'+a·b')`.
//! The Lie algebra has basis `X, Y, Z` with `[X,Y] = Z`; `exp` and `log`
//! convert between algebra coefficients and matrix coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{HeisError, Result};

/// A planar point, used for projections `π(p) = (a, b)`.
pub type Planar = [f64; 2];

/// An element of the Heisenberg group in matrix coordinates.
///
/// Serializes as the JSON array `[a, b, c]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct HPoint {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl From<[f64; 3]> for HPoint {
    fn from(v: [f64; 3]) -> Self {
        HPoint::new(v[0], v[1], v[2])
    }
}

impl From<HPoint> for [f64; 3] {
    fn from(p: HPoint) -> Self {
        [p.a, p.b, p.c]
    }
}

impl HPoint {
    pub const IDENTITY: HPoint = HPoint { a: 0.0, b: 0.0, c: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        HPoint { a, b, c }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }

    /// Group product `self · q`.
    #[inline]
    pub fn mul(&self, q: &HPoint) -> HPoint {
        HPoint {
            a: self.a + q.a,
            b: self.b + q.b,
            c: self.c + q.c + self.a * q.b,
        }
    }

    #[inline]
    pub fn inv(&self) -> HPoint {
        HPoint {
            a: -self.a,
            b: -self.b,
            c: self.a * self.b - self.c,
        }
    }

    /// `inv(self) · q`, the displacement from `self` to `q` in the left frame of `self`.
    #[inline]
    pub fn delta_to(&self, q: &HPoint) -> HPoint {
        self.inv().mul(q)
    }

    /// Abelianization `π(a, b, c) = (a, b)`.
    #[inline]
    pub fn proj(&self) -> Planar {
        [self.a, self.b]
    }

    /// Anisotropic dilation `(λa, λb, λ²c)`.
    ///
    /// Panics when `lambda` is not a positive finite number.
    pub fn dilate(&self, lambda: f64) -> HPoint {
        assert!(
            lambda > 0.0 && lambda.is_finite(),
            "dilation factor must be positive, got {lambda}"
        );
        HPoint {
            a: lambda * self.a,
            b: lambda * self.b,
            c: lambda * lambda * self.c,
        }
    }

    /// Right translation along the center: `self · exp(tZ)`.
    #[inline]
    pub fn shift_vertical(&self, t: f64) -> HPoint {
        HPoint { c: self.c + t, ..*self }
    }

    pub fn log(&self) -> TangentVec {
        TangentVec {
            x: self.a,
            y: self.b,
            z: self.c - 0.5 * self.a * self.b,
        }
    }
}

/// Coefficients of `xX + yY + zZ` in the Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct TangentVec {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for TangentVec {
    fn from(v: [f64; 3]) -> Self {
        TangentVec { x: v[0], y: v[1], z: v[2] }
    }
}

impl From<TangentVec> for [f64; 3] {
    fn from(v: TangentVec) -> Self {
        [v.x, v.y, v.z]
    }
}

impl TangentVec {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        TangentVec { x, y, z }
    }

    /// Horizontal vectors have no `Z` component.
    pub fn is_horizontal(&self) -> bool {
        self.z == 0.0
    }

    /// The exponential series truncates after the quadratic term.
    pub fn exp(&self) -> HPoint {
        HPoint {
            a: self.x,
            b: self.y,
            c: self.z + 0.5 * self.x * self.y,
        }
    }

    /// Lie bracket, using `[X,Y] = Z` and a central `Z`.
    pub fn bracket(&self, other: &TangentVec) -> TangentVec {
        TangentVec {
            x: 0.0,
            y: 0.0,
            z: self.x * other.y - self.y * other.x,
        }
    }
}

/// Free-function forms, mirroring the algebraic notation.
pub fn mul(p: &HPoint, q: &HPoint) -> HPoint {
    p.mul(q)
}

pub fn inv(p: &HPoint) -> HPoint {
    p.inv()
}

pub fn exp(v: &TangentVec) -> HPoint {
    v.exp()
}

pub fn log(p: &HPoint) -> TangentVec {
    p.log()
}

pub fn dilate(p: &HPoint, lambda: f64) -> HPoint {
    p.dilate(lambda)
}

/// Height over `w` of the horizontal plane centered at `x`.
///
/// The plane `P_x` is the union of lines through `x`; a point `y` lies on it
/// iff `c_y == plane_height(x, π(y))`. The relation is symmetric in `x, y`.
#[inline]
pub fn plane_height(x: &HPoint, w: Planar) -> f64 {
    let da = w[0] - x.a;
    let db = w[1] - x.b;
    x.c + 0.5 * da * db + x.a * db
}

/// Signed shoelace area of a closed polygon, counterclockwise positive.
/// The closing edge from the last vertex back to the first is implied.
pub fn shoelace_area(vertices: &[Planar]) -> f64 {
    let n = vertices.len();
    if n < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..n {
        let p = vertices[i];
        let q = vertices[(i + 1) % n];
        twice += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * twice
}

/// An open planar polyline with at least two vertices.
///
/// Serializes as a JSON array of `[x, y]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Planar>", into = "Vec<Planar>")]
pub struct Polyline2D {
    vertices: Vec<Planar>,
}

impl TryFrom<Vec<Planar>> for Polyline2D {
    type Error = HeisError;

    fn try_from(vertices: Vec<Planar>) -> Result<Self> {
        Polyline2D::new(vertices)
    }
}

impl From<Polyline2D> for Vec<Planar> {
    fn from(p: Polyline2D) -> Self {
        p.vertices
    }
}

impl Polyline2D {
    pub fn new(vertices: Vec<Planar>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(HeisError::precondition(format!(
                "polyline needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(HeisError::precondition("polyline has non-finite vertex"));
        }
        Ok(Polyline2D { vertices })
    }

    pub fn vertices(&self) -> &[Planar] {
        &self.vertices
    }

    pub fn is_closed(&self) -> bool {
        self.vertices.first() == self.vertices.last()
    }

    /// Euclidean length, which is also the length of any horizontal lift.
    pub fn length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }
}

/// Result of lifting a polyline horizontally.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub endpoint: HPoint,
    /// `c` coordinate of the lift above each vertex, starting with `start.c`.
    pub heights: Vec<f64>,
}

/// Horizontal lift of `path` starting at `start`.
///
/// Each segment `v_i → v_{i+1}` is the right translate by `exp(Δx X + Δy Y)`.
/// For a closed path the endpoint is `start · exp(A Z)`, `A` the signed area.
pub fn lift_polyline(start: &HPoint, path: &Polyline2D) -> Result<Lift> {
    let first = path.vertices[0];
    let scale = 1.0f64.max(first[0].abs()).max(first[1].abs());
    if (start.a - first[0]).abs() > 1e-12 * scale || (start.b - first[1]).abs() > 1e-12 * scale {
        return Err(HeisError::precondition(format!(
            "lift start projects to ({}, {}) but path begins at ({}, {})",
            start.a, start.b, first[0], first[1]
        )));
    }
    let mut cur = *start;
    let mut heights = Vec::with_capacity(path.vertices.len());
    heights.push(cur.c);
    for w in path.vertices.windows(2) {
        let step = TangentVec::new(w[1][0] - w[0][0], w[1][1] - w[0][1], 0.0).exp();
        cur = cur.mul(&step);
        heights.push(cur.c);
    }
    Ok(Lift { endpoint: cur, heights })
}
