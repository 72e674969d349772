//! Lattice shortest-path oracle for the CC distance.
//!
//! States are lattice points `(iε, jε, k·ε²/2)`. A move by the primitive
//! integer vector `(m, n)` right-multiplies by `exp(mεX + nεY)`, which maps
//! `(i, j, k)` to `(i+m, j+n, k + 2in + mn)`, so the lattice is closed under
//! every move and no height snapping is needed after the start. Each move
//! costs its Euclidean length `ε√(m²+n²)`; every lattice path is therefore
//! a genuine horizontal path and the oracle bounds the true distance from
//! above, up to the snapping of the target onto the lattice.
//!
//! Moves use every primitive `(m, n)` with `max(|m|,|n|) ≤ GRID_DIRECTION_RADIUS`.
//! With axis moves only, the lattice metric would converge to the sub-Finsler
//! metric of the `ℓ¹` norm instead of the CC metric.
//!
//! The search is A* guided by isoperimetric lower bounds. Close a horizontal
//! path of length `L` (projected chord `ℓ`, exponential height `z`) with a
//! circular arc of angle `β` over the chord, on the side that adds its
//! segment area `A_β` to `|z|`. The loop has length `L + len_β` and signed
//! area `|z| + A_β`, so `L ≥ √(4π(|z| + A_β)) − len_β`. The maximum over a
//! fixed set of `β` (with `β = 0` the plain chord) is admissible, so the
//! returned value is the exact lattice shortest path; the arc solver is not
//! used.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::hash::{BuildHasherDefault, Hasher};

use crate::error::{HeisError, Result};
use crate::hgroup::HPoint;
use crate::window::Box3;

pub const GRID_DIRECTION_RADIUS: i64 = 3;

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn moves() -> Vec<(i64, i64, f64)> {
    let r = GRID_DIRECTION_RADIUS;
    let mut out = Vec::new();
    for m in -r..=r {
        for n in -r..=r {
            if (m, n) != (0, 0) && gcd(m, n) == 1 {
                out.push((m, n, ((m * m + n * n) as f64).sqrt()));
            }
        }
    }
    out
}

#[derive(Default)]
struct KeyHasher(u64);

impl Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, _bytes: &[u8]) {
        unreachable!("only u64 keys are hashed")
    }

    fn write_u64(&mut self, x: u64) {
        // splitmix64 finalizer
        let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        self.0 = z ^ (z >> 31);
    }
}

type StateMap = HashMap<u64, f64, BuildHasherDefault<KeyHasher>>;

fn pack(i: i64, j: i64, k: i64) -> u64 {
    // 16 bits each for i, j and 32 bits for k, offset to be nonnegative.
    let i = (i + (1 << 15)) as u64;
    let j = (j + (1 << 15)) as u64;
    let k = (k + (1 << 31)) as u64;
    (i << 48) | (j << 32) | k
}

fn unpack(key: u64) -> (i64, i64, i64) {
    let i = (key >> 48) as i64 - (1 << 15);
    let j = ((key >> 32) & 0xFFFF) as i64 - (1 << 15);
    let k = (key & 0xFFFF_FFFF) as i64 - (1 << 31);
    (i, j, k)
}

#[derive(PartialEq)]
struct Entry {
    /// Priority: path length so far plus the lower bound to the target.
    rank: f64,
    dist: f64,
    key: u64,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .rank
            .total_cmp(&self.rank)
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// (segment area, arc length) per unit chord for the closing arcs β = kπ/3.
const CLOSING_ARCS: [(f64, f64); 5] = {
    const PI: f64 = std::f64::consts::PI;
    const S3: f64 = 0.866_025_403_784_438_6; // sin(π/3)
    // area(β) = (β − sin β)/(8 sin²(β/2)), length(β) = β/(2 sin(β/2))
    [
        ((PI / 3.0 - S3) / 2.0, PI / 3.0),
        ((2.0 * PI / 3.0 - S3) / 6.0, (2.0 * PI / 3.0) / (2.0 * S3)),
        (PI / 8.0, PI / 2.0),
        ((4.0 * PI / 3.0 + S3) / 6.0, (4.0 * PI / 3.0) / (2.0 * S3)),
        ((5.0 * PI / 3.0 + S3) / 2.0, 5.0 * PI / 3.0),
    ]
};

/// Lower bound, in units of the lattice step, on the length of any horizontal
/// path from lattice state `(i, j, k)` to `(ti, tj, tk)`.
fn remaining_bound(state: (i64, i64, i64), target: (i64, i64, i64)) -> f64 {
    let (i, j, k) = state;
    let (ti, tj, tk) = target;
    // Displacement state⁻¹·target in lattice units: c picks up −a·Δb.
    let da = (ti - i) as f64;
    let db = (tj - j) as f64;
    let dc = 0.5 * (tk - k) as f64 - i as f64 * db;
    let z = (dc - 0.5 * da * db).abs();
    let chord2 = da * da + db * db;
    let chord = chord2.sqrt();
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut best = chord.max((four_pi * z).sqrt() - chord);
    for &(area, len) in &CLOSING_ARCS {
        best = best.max((four_pi * (z + area * chord2)).sqrt() - len * chord);
    }
    best
}

/// Default search window `[-4,4]² × [-8,8]`.
pub fn default_window() -> Box3 {
    Box3 { a: [-4.0, 4.0], b: [-4.0, 4.0], c: [-8.0, 8.0] }
}

/// Oracle distance with the default window.
pub fn grid_oracle_distance(p: &HPoint, q: &HPoint, step: f64) -> Result<f64> {
    grid_oracle_distance_in(p, q, step, &default_window())
}

/// Shortest lattice path from the identity to the snapped displacement `p⁻¹q`.
///
/// Fails when `p`, `q` or the displacement leave `window`; states outside the
/// window are never expanded.
pub fn grid_oracle_distance_in(p: &HPoint, q: &HPoint, step: f64, window: &Box3) -> Result<f64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(HeisError::precondition(format!("grid step must be positive, got {step}")));
    }
    let g = p.delta_to(q);
    for (name, x) in [("p", p), ("q", q), ("p⁻¹q", &g)] {
        if !window.contains(x) {
            return Err(HeisError::WindowExceeded(format!(
                "{name} = ({}, {}, {}) lies outside the oracle window",
                x.a, x.b, x.c
            )));
        }
    }
    let pitch = 0.5 * step * step;
    let bounds_i = ((window.a[0] / step).ceil() as i64, (window.a[1] / step).floor() as i64);
    let bounds_j = ((window.b[0] / step).ceil() as i64, (window.b[1] / step).floor() as i64);
    let bounds_k = ((window.c[0] / pitch).ceil() as i64, (window.c[1] / pitch).floor() as i64);
    if bounds_i.0.abs().max(bounds_i.1.abs()) >= 1 << 15
        || bounds_j.0.abs().max(bounds_j.1.abs()) >= 1 << 15
        || bounds_k.0.abs().max(bounds_k.1.abs()) >= 1 << 31
    {
        return Err(HeisError::precondition("grid step too fine for the window"));
    }
    let ti = (g.a / step).round() as i64;
    let tj = (g.b / step).round() as i64;
    let tk = (g.c / pitch).round() as i64;
    let target = pack(ti, tj, tk);
    let goal = (ti, tj, tk);
    let start = pack(0, 0, 0);
    if target == start {
        return Ok(0.0);
    }

    let moves = moves();
    let mut dist = StateMap::default();
    let mut heap = BinaryHeap::new();
    dist.insert(start, 0.0);
    heap.push(Entry { rank: remaining_bound((0, 0, 0), goal), dist: 0.0, key: start });
    while let Some(Entry { dist: d, key, .. }) = heap.pop() {
        if key == target {
            return Ok(d * step);
        }
        if d > dist[&key] {
            continue;
        }
        let (i, j, k) = unpack(key);
        for &(m, n, len) in &moves {
            let (ni, nj, nk) = (i + m, j + n, k + 2 * i * n + m * n);
            if ni < bounds_i.0 || ni > bounds_i.1 || nj < bounds_j.0 || nj > bounds_j.1 {
                continue;
            }
            if nk < bounds_k.0 || nk > bounds_k.1 {
                continue;
            }
            let nd = d + len;
            let nkey = pack(ni, nj, nk);
            let slot = dist.entry(nkey).or_insert(f64::INFINITY);
            if nd < *slot {
                *slot = nd;
                let rank = nd + remaining_bound((ni, nj, nk), goal);
                heap.push(Entry { rank, dist: nd, key: nkey });
            }
        }
    }
    Err(HeisError::numeric("target unreachable inside the oracle window"))
}
