//! Integer lattice points and square boxes of Z².

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{domain, Result};

/// A point of Z². Ordering is lexicographic in `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex {
    pub x: i64,
    pub y: i64,
}

impl Vertex {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn linf(self, other: Vertex) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn l1(self, other: Vertex) -> i64 {
        (self.x - other.x).abs() + (self.y - other.y).abs()
    }

    pub fn l2(self, other: Vertex) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }

    pub fn neighbors(self) -> [Vertex; 4] {
        [
            Vertex::new(self.x + 1, self.y),
            Vertex::new(self.x - 1, self.y),
            Vertex::new(self.x, self.y + 1),
            Vertex::new(self.x, self.y - 1),
        ]
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The box `origin + [0, side)² ∩ Z²`.
///
/// The boundary is the outer ring: vertices of the box with a neighbour
/// outside it. Everything else is interior.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxGeometry {
    pub origin: Vertex,
    pub side: usize,
}

impl BoxGeometry {
    pub fn new(origin: Vertex, side: usize) -> Result<Self> {
        if side == 0 {
            return domain("box side must be positive");
        }
        Ok(Self { origin, side })
    }

    /// `[0, n)²`.
    pub fn v_n(n: usize) -> Result<Self> {
        Self::new(Vertex::new(0, 0), n)
    }

    /// `[-2n, 3n)²`, the enlarged domain the field lives on.
    pub fn v_5n(n: usize) -> Result<Self> {
        let n_i = n as i64;
        Self::new(Vertex::new(-2 * n_i, -2 * n_i), 5 * n)
    }

    /// The box of side length `ell` (so `ell + 1` vertices per side) centred at `center`.
    pub fn centered(center: Vertex, ell: usize) -> Result<Self> {
        if ell == 0 || ell % 2 != 0 {
            return domain(format!("centred box needs a positive even side length, got {ell}"));
        }
        let half = (ell / 2) as i64;
        Self::new(Vertex::new(center.x - half, center.y - half), ell + 1)
    }

    pub fn len(&self) -> usize {
        self.side * self.side
    }

    pub fn is_empty(&self) -> bool {
        self.side == 0
    }

    /// Number of interior vertices per side.
    pub fn interior_side(&self) -> usize {
        self.side.saturating_sub(2)
    }

    pub fn interior_len(&self) -> usize {
        self.interior_side() * self.interior_side()
    }

    pub fn max_corner(&self) -> Vertex {
        let s = self.side as i64 - 1;
        Vertex::new(self.origin.x + s, self.origin.y + s)
    }

    pub fn contains(&self, v: Vertex) -> bool {
        let s = self.side as i64;
        let dx = v.x - self.origin.x;
        let dy = v.y - self.origin.y;
        (0..s).contains(&dx) && (0..s).contains(&dy)
    }

    pub fn contains_box(&self, other: &BoxGeometry) -> bool {
        self.contains(other.origin) && self.contains(other.max_corner())
    }

    pub fn is_boundary(&self, v: Vertex) -> bool {
        if !self.contains(v) {
            return false;
        }
        let s = self.side as i64 - 1;
        let dx = v.x - self.origin.x;
        let dy = v.y - self.origin.y;
        dx == 0 || dy == 0 || dx == s || dy == s
    }

    pub fn is_interior(&self, v: Vertex) -> bool {
        self.contains(v) && !self.is_boundary(v)
    }

    /// Row-major index (y-major, x-minor).
    pub fn index(&self, v: Vertex) -> Option<usize> {
        if !self.contains(v) {
            return None;
        }
        let dx = (v.x - self.origin.x) as usize;
        let dy = (v.y - self.origin.y) as usize;
        Some(dy * self.side + dx)
    }

    pub fn vertex(&self, index: usize) -> Vertex {
        Vertex::new(
            self.origin.x + (index % self.side) as i64,
            self.origin.y + (index / self.side) as i64,
        )
    }

    /// Row-major index among interior vertices.
    pub fn interior_index(&self, v: Vertex) -> Option<usize> {
        if !self.is_interior(v) {
            return None;
        }
        let n = self.interior_side();
        let dx = (v.x - self.origin.x - 1) as usize;
        let dy = (v.y - self.origin.y - 1) as usize;
        Some(dy * n + dx)
    }

    pub fn interior_vertex(&self, index: usize) -> Vertex {
        let n = self.interior_side();
        Vertex::new(self.origin.x + 1 + (index % n) as i64, self.origin.y + 1 + (index / n) as i64)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.len()).map(move |i| self.vertex(i))
    }

    pub fn boundary(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.vertices().filter(move |v| self.is_boundary(*v))
    }

    pub fn interior(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.interior_len()).map(move |i| self.interior_vertex(i))
    }

    /// Centre vertex; only meaningful for odd sides.
    pub fn center(&self) -> Vertex {
        let h = (self.side / 2) as i64;
        Vertex::new(self.origin.x + h, self.origin.y + h)
    }

    /// `d_∞(v, ∂B)` for `v` in the box.
    pub fn boundary_distance(&self, v: Vertex) -> i64 {
        let s = self.side as i64 - 1;
        let dx = v.x - self.origin.x;
        let dy = v.y - self.origin.y;
        dx.min(dy).min(s - dx).min(s - dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_and_interior_partition_the_box() {
        let b = BoxGeometry::new(Vertex::new(-3, 2), 6).unwrap();
        let boundary: Vec<_> = b.boundary().collect();
        let interior: Vec<_> = b.interior().collect();
        assert_eq!(boundary.len() + interior.len(), b.len());
        assert!(boundary.iter().all(|v| !interior.contains(v)));
        assert_eq!(interior.len(), 16);
        for (i, v) in interior.iter().enumerate() {
            assert_eq!(b.interior_index(*v), Some(i));
        }
    }

    #[test]
    fn centered_box_has_ell_plus_one_vertices() {
        let b = BoxGeometry::centered(Vertex::new(10, 10), 4).unwrap();
        assert_eq!(b.side, 5);
        assert_eq!(b.center(), Vertex::new(10, 10));
        assert!(BoxGeometry::centered(Vertex::new(0, 0), 3).is_err());
    }

    #[test]
    fn v_5n_surrounds_v_n() {
        let outer = BoxGeometry::v_5n(8).unwrap();
        let inner = BoxGeometry::v_n(8).unwrap();
        assert!(outer.contains_box(&inner));
        assert_eq!(outer.origin, Vertex::new(-16, -16));
        assert_eq!(outer.side, 40);
    }
}
