//! Lattice paths viewed as continuous polylines in `R²`.
//!
//! Every segment lies inside a single lattice edge, so lattice points can
//! only occur at polyline vertices. Positions along a path are arclength
//! parameters `s ∈ [0, length]`; subpaths are parameter intervals.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::lattice::Vertex;

/// Tolerance for integrality of coordinates.
pub const COORD_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// The lattice point at this position, if both coordinates are integral.
    pub fn as_vertex(self) -> Option<Vertex> {
        let (rx, ry) = (self.x.round(), self.y.round());
        ((self.x - rx).abs() <= COORD_TOL && (self.y - ry).abs() <= COORD_TOL).then(|| Vertex::new(rx as i64, ry as i64))
    }
}

impl From<Vertex> for Point {
    fn from(v: Vertex) -> Self {
        Point::new(v.x as f64, v.y as f64)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Parameter interval `[s0, s1]` along a path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub s0: f64,
    pub s1: f64,
}

impl Span {
    pub fn new(s0: f64, s1: f64) -> Self {
        Self { s0, s1 }
    }

    pub fn contains(&self, s: f64) -> bool {
        self.s0 <= s && s <= self.s1
    }

    pub fn len(&self) -> f64 {
        self.s1 - self.s0
    }

    pub fn is_point(&self) -> bool {
        self.s0 == self.s1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticePath {
    pts: Vec<Point>,
    /// Arclength at each polyline vertex.
    cum: Vec<f64>,
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= COORD_TOL {
        r
    } else {
        v
    }
}

impl LatticePath {
    /// Validates that consecutive points lie on one lattice edge.
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return domain("a path needs at least one point");
        }
        let pts: Vec<Point> = points.into_iter().map(|p| Point::new(snap(p.x), snap(p.y))).collect();
        if let Some(p) = pts.iter().find(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return domain(format!("non-finite path point {p}"));
        }
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for (i, w) in pts.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let (fixed, lo, hi) = if a.y == b.y && a.x != b.x {
                (a.y, a.x.min(b.x), a.x.max(b.x))
            } else if a.x == b.x && a.y != b.y {
                (a.x, a.y.min(b.y), a.y.max(b.y))
            } else {
                return domain(format!("segment {i} from {a} to {b} is not a proper axis-parallel step"));
            };
            if fixed.fract() != 0.0 {
                return domain(format!("segment {i} from {a} to {b} is off the lattice lines"));
            }
            if hi > lo.floor() + 1.0 {
                return domain(format!("segment {i} from {a} to {b} spans more than one edge"));
            }
            cum.push(cum[i] + (hi - lo));
        }
        Ok(Self { pts, cum })
    }

    /// Path through lattice vertices, each a neighbour of the previous one.
    pub fn from_vertices(vs: &[Vertex]) -> Result<Self> {
        Self::new(vs.iter().map(|&v| Point::from(v)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.pts
    }

    pub fn vertex_params(&self) -> &[f64] {
        &self.cum
    }

    pub fn arclength(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    pub fn full(&self) -> Span {
        Span::new(0.0, self.arclength())
    }

    pub fn start(&self) -> Point {
        self.pts[0]
    }

    pub fn end(&self) -> Point {
        *self.pts.last().unwrap()
    }

    /// `‖P‖`, the distance between the endpoints.
    pub fn norm(&self) -> f64 {
        self.start().dist(self.end())
    }

    /// `|P|`, the number of distinct lattice points on the path.
    pub fn cardinality(&self) -> usize {
        self.lattice_points().len()
    }

    /// Distinct lattice points in order of first visit.
    pub fn lattice_points(&self) -> Vec<Vertex> {
        let mut seen = HashSet::new();
        self.pts.iter().filter_map(|p| p.as_vertex()).filter(|v| seen.insert(*v)).collect()
    }

    /// No lattice point is visited twice.
    pub fn is_simple(&self) -> bool {
        let mut seen = HashSet::new();
        self.pts.iter().filter_map(|p| p.as_vertex()).all(|v| seen.insert(v))
    }

    /// Index `k` of the segment `[cum[k], cum[k+1]]` containing `s`.
    pub fn segment_at(&self, s: f64) -> usize {
        let nseg = self.pts.len() - 1;
        if nseg == 0 {
            return 0;
        }
        let k = self.cum.partition_point(|&c| c <= s);
        k.saturating_sub(1).min(nseg - 1)
    }

    pub fn point_at(&self, s: f64) -> Point {
        if self.pts.len() == 1 {
            return self.pts[0];
        }
        let k = self.segment_at(s);
        let (a, b) = (self.pts[k], self.pts[k + 1]);
        if s <= self.cum[k] {
            return a;
        }
        if s >= self.cum[k + 1] {
            return b;
        }
        let t = s - self.cum[k];
        if a.y == b.y {
            Point::new(a.x + t * (b.x - a.x).signum(), a.y)
        } else {
            Point::new(a.x, a.y + t * (b.y - a.y).signum())
        }
    }

    /// Polyline of the span: its start, the vertices strictly inside, its end.
    pub fn span_points(&self, span: Span) -> Vec<Point> {
        let mut out = vec![self.point_at(span.s0)];
        let first = self.cum.partition_point(|&c| c <= span.s0);
        for i in first..self.pts.len() {
            if self.cum[i] >= span.s1 {
                break;
            }
            out.push(self.pts[i]);
        }
        if span.s1 > span.s0 {
            out.push(self.point_at(span.s1));
        }
        out
    }

    /// Lattice points with their parameters, in path order, repeats included.
    pub fn span_lattice_points(&self, span: Span) -> Vec<(f64, Vertex)> {
        let first = self.cum.partition_point(|&c| c < span.s0);
        let mut out = Vec::new();
        for i in first..self.pts.len() {
            if self.cum[i] > span.s1 {
                break;
            }
            if let Some(v) = self.pts[i].as_vertex() {
                out.push((self.cum[i], v));
            }
        }
        out
    }

    /// Distinct lattice points of the span.
    pub fn span_cardinality(&self, span: Span) -> usize {
        let set: HashSet<Vertex> = self.span_lattice_points(span).into_iter().map(|p| p.1).collect();
        set.len()
    }

    pub fn span_norm(&self, span: Span) -> f64 {
        self.point_at(span.s0).dist(self.point_at(span.s1))
    }

    /// `max_{z ∈ span} ‖z − c‖`, attained at polyline points by convexity.
    pub fn span_max_dist(&self, span: Span, c: Point) -> f64 {
        self.span_points(span).iter().map(|p| p.dist(c)).fold(0.0, f64::max)
    }

    /// The span as a path of its own.
    pub fn subpath(&self, span: Span) -> LatticePath {
        let pts = self.span_points(span);
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for i in 1..pts.len() {
            cum.push(cum[i - 1] + pts[i].dist(pts[i - 1]));
        }
        LatticePath { pts, cum }
    }
}

/// First parameter after `from` (and not beyond `limit`) at distance exactly
/// `ell` from `P(from)`, by segment–circle intersection.
pub fn first_exit_param(path: &LatticePath, from: f64, limit: f64, ell: f64) -> Option<f64> {
    let c = path.point_at(from);
    let pts = path.points();
    let cum = path.vertex_params();
    if pts.len() == 1 || from >= limit {
        return None;
    }
    let mut k = path.segment_at(from);
    let mut a = c;
    let mut sa = from;
    loop {
        let (sb, b) = if cum[k + 1] >= limit {
            (limit, path.point_at(limit))
        } else {
            (cum[k + 1], pts[k + 1])
        };
        if b.dist(c) >= ell {
            // Convexity of the distance along the segment means exactly one
            // crossing in (sa, sb].
            let d = b.sub(a);
            let f = a.sub(c);
            let qa = d.dot(d);
            let qb = 2.0 * f.dot(d);
            let qc = f.dot(f) - ell * ell;
            let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
            let t = if qb >= 0.0 {
                2.0 * qc / (-qb - disc.sqrt())
            } else {
                (-qb + disc.sqrt()) / (2.0 * qa)
            };
            let t = t.clamp(0.0, 1.0);
            if 1.0 - t <= 1e-12 {
                return Some(sb);
            }
            return Some(sa + t * (sb - sa));
        }
        if sb >= limit || k + 2 >= pts.len() {
            return None;
        }
        k += 1;
        a = b;
        sa = sb;
    }
}

/// The subpath of `P` from `from` until it first reaches `∂B(P(from), ℓ)`.
pub fn first_exit(path: &LatticePath, from: f64, ell: f64) -> Result<(Point, LatticePath)> {
    match first_exit_param(path, from, path.arclength(), ell) {
        Some(s) => Ok((path.point_at(s), path.subpath(Span::new(from, s)))),
        None => Err(crate::error::LfppError::NotFound(format!(
            "path never leaves the ball of radius {ell} around {}",
            path.point_at(from)
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight(n: i64) -> LatticePath {
        LatticePath::from_vertices(&(0..=n).map(|i| Vertex::new(i, 0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn validation() {
        assert!(LatticePath::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)]).is_err());
        assert!(LatticePath::new(vec![Point::new(0.5, 0.0), Point::new(1.5, 0.0)]).is_err());
        assert!(LatticePath::new(vec![Point::new(0.0, 0.5), Point::new(1.0, 0.5)]).is_err());
        let p = LatticePath::new(vec![
            Point::new(0.5, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 1.25),
        ])
        .unwrap();
        assert_eq!(p.arclength(), 1.75);
        assert_eq!(p.cardinality(), 2);
    }

    #[test]
    fn spans_and_points() {
        let p = straight(10);
        assert_eq!(p.point_at(3.25), Point::new(3.25, 0.0));
        let s = Span::new(2.5, 5.0);
        assert_eq!(
            p.span_points(s),
            vec![
                Point::new(2.5, 0.0),
                Point::new(3.0, 0.0),
                Point::new(4.0, 0.0),
                Point::new(5.0, 0.0)
            ]
        );
        assert_eq!(p.span_cardinality(s), 3);
        assert_eq!(p.subpath(s).arclength(), 2.5);
    }

    #[test]
    fn straight_exit_and_not_found() {
        let (pt, sub) = first_exit(&straight(10), 0.0, 5.0).unwrap();
        assert_eq!(pt, Point::new(5.0, 0.0));
        assert_eq!(sub.norm(), 5.0);
        assert!(first_exit(&straight(1), 0.0, 5.0).is_err());
    }
}
