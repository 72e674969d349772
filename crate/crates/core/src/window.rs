//! Axis-aligned boxes in `(a, b, c)` coordinates.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{HeisError, Result};
use crate::hgroup::HPoint;

/// Closed box `[a0,a1] × [b0,b1] × [c0,c1]`.
///
/// Serializes as `[[a0,a1],[b0,b1],[c0,c1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 3]", into = "[[f64; 2]; 3]")]
pub struct Box3 {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
}

impl TryFrom<[[f64; 2]; 3]> for Box3 {
    type Error = HeisError;

    fn try_from(v: [[f64; 2]; 3]) -> Result<Self> {
        Box3::new(v[0], v[1], v[2])
    }
}

impl From<Box3> for [[f64; 2]; 3] {
    fn from(w: Box3) -> Self {
        [w.a, w.b, w.c]
    }
}

impl Box3 {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> Result<Self> {
        for (name, r) in [("a", a), ("b", b), ("c", c)] {
            if !(r[0].is_finite() && r[1].is_finite()) || r[0] >= r[1] {
                return Err(HeisError::precondition(format!(
                    "empty or invalid window range for {name}: [{}, {}]",
                    r[0], r[1]
                )));
            }
        }
        Ok(Box3 { a, b, c })
    }

    /// The cube `[-h, h]³`.
    pub fn cube(h: f64) -> Result<Self> {
        Box3::new([-h, h], [-h, h], [-h, h])
    }

    pub fn contains(&self, p: &HPoint) -> bool {
        (self.a[0]..=self.a[1]).contains(&p.a)
            && (self.b[0]..=self.b[1]).contains(&p.b)
            && (self.c[0]..=self.c[1]).contains(&p.c)
    }

    pub fn volume(&self) -> f64 {
        (self.a[1] - self.a[0]) * (self.b[1] - self.b[0]) * (self.c[1] - self.c[0])
    }

    pub fn center(&self) -> HPoint {
        HPoint::new(
            0.5 * (self.a[0] + self.a[1]),
            0.5 * (self.b[0] + self.b[1]),
            0.5 * (self.c[0] + self.c[1]),
        )
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HPoint {
        HPoint::new(
            rng.gen_range(self.a[0]..self.a[1]),
            rng.gen_range(self.b[0]..self.b[1]),
            rng.gen_range(self.c[0]..self.c[1]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_ranges() {
        assert!(Box3::new([0.0, 0.0], [0.0, 1.0], [0.0, 1.0]).is_err());
        assert!(Box3::new([1.0, 0.0], [0.0, 1.0], [0.0, 1.0]).is_err());
        let w = Box3::cube(2.0).unwrap();
        assert_eq!(w.volume(), 64.0);
        assert!(w.contains(&HPoint::new(2.0, -2.0, 0.0)));
        assert!(!w.contains(&HPoint::new(2.1, 0.0, 0.0)));
    }

    #[test]
    fn json_shape() {
        let w: Box3 = serde_json::from_str("[[-1,1],[-2,2],[0,3]]").unwrap();
        assert_eq!(w.c, [0.0, 3.0]);
        assert!(serde_json::from_str::<Box3>("[[1,1],[-2,2],[0,3]]").is_err());
    }
}
