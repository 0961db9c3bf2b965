//! Shifted box grids and the ellipse of a path.

use std::collections::HashMap;

use super::path::{LatticePath, Point, Span};

/// Index of a box in `BD_r`.
pub type BoxIndex = (i64, i64);

/// The partition `BD_r` of the plane into closed boxes
/// `[ar − 1/2, (a+1)r − 1/2] × [br − 1/2, (b+1)r − 1/2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    r: f64,
}

impl BoxGrid {
    pub fn new(r: f64) -> Self {
        assert!(r > 0.0 && r.is_finite(), "box scale must be positive");
        Self { r }
    }

    pub fn scale(&self) -> f64 {
        self.r
    }

    /// One coordinate; boundary values go to the smaller index.
    fn coord(&self, t: f64) -> i64 {
        ((t + 0.5) / self.r).ceil() as i64 - 1
    }

    pub fn box_of(&self, p: Point) -> BoxIndex {
        (self.coord(p.x), self.coord(p.y))
    }

    /// `[lo, hi]` extent of a box along each axis.
    pub fn bounds(&self, b: BoxIndex) -> ((f64, f64), (f64, f64)) {
        let lo = |a: i64| a as f64 * self.r - 0.5;
        ((lo(b.0), lo(b.0 + 1)), (lo(b.1), lo(b.1 + 1)))
    }

    pub fn contains_closed(&self, b: BoxIndex, p: Point) -> bool {
        let ((x0, x1), (y0, y1)) = self.bounds(b);
        x0 <= p.x && p.x <= x1 && y0 <= p.y && p.y <= y1
    }

    /// All boxes whose closure contains `p` (one to four).
    pub fn boxes_containing(&self, p: Point) -> Vec<BoxIndex> {
        let axis = |t: f64| {
            let u = (t + 0.5) / self.r;
            let a = u.ceil() as i64 - 1;
            if u == u.floor() {
                vec![a, a + 1]
            } else {
                vec![a]
            }
        };
        let mut out = Vec::new();
        for a in axis(p.x) {
            for b in axis(p.y) {
                out.push((a, b));
            }
        }
        out
    }

    /// Index range of boxes met by the open interval `(u, v)` on one axis.
    fn open_range(&self, u: f64, v: f64) -> (i64, i64) {
        let (lo, hi) = (u.min(v), u.max(v));
        (((lo + 0.5) / self.r).floor() as i64, ((hi + 0.5) / self.r).ceil() as i64 - 1)
    }

    /// Boxes visited by the half-open span `(s0, s1]` of the path: those met
    /// by the open pieces of each segment plus the box of the end point.
    pub fn visits(&self, path: &LatticePath, span: Span) -> Vec<BoxIndex> {
        let mut out: Vec<BoxIndex> = Vec::new();
        let pts = path.span_points(span);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.y == b.y {
                let (i0, i1) = self.open_range(a.x, b.x);
                let row = self.coord(a.y);
                out.extend((i0..=i1).map(|i| (i, row)));
            } else {
                let (i0, i1) = self.open_range(a.y, b.y);
                let col = self.coord(a.x);
                out.extend((i0..=i1).map(|i| (col, i)));
            }
            out.push(self.box_of(b));
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// For every box met by the closed span, the last parameter at which the
    /// path lies in the closed box.
    pub fn last_visits(&self, path: &LatticePath, span: Span) -> HashMap<BoxIndex, f64> {
        let mut last: HashMap<BoxIndex, f64> = HashMap::new();
        let pts = path.span_points(span);
        let params = span_params(path, span, &pts);
        let mut note = |b: BoxIndex, s: f64| {
            let e = last.entry(b).or_insert(s);
            if s > *e {
                *e = s;
            }
        };
        if pts.len() == 1 {
            for b in self.boxes_containing(pts[0]) {
                note(b, span.s0);
            }
        }
        for (w, sw) in pts.windows(2).zip(params.windows(2)) {
            let (a, b) = (w[0], w[1]);
            let (sa, sb) = (sw[0], sw[1]);
            let horizontal = a.y == b.y;
            let (ua, ub, fixed) = if horizontal { (a.x, b.x, a.y) } else { (a.y, b.y, a.x) };
            let fixed_boxes: Vec<i64> = {
                let u = (fixed + 0.5) / self.r;
                let c = u.ceil() as i64 - 1;
                if u == u.floor() {
                    vec![c, c + 1]
                } else {
                    vec![c]
                }
            };
            let (lo, hi) = (ua.min(ub), ua.max(ub));
            let i0 = ((lo + 0.5) / self.r).ceil() as i64 - 1;
            let i1 = ((hi + 0.5) / self.r).floor() as i64;
            for i in i0..=i1 {
                let (blo, bhi) = (i as f64 * self.r - 0.5, (i + 1) as f64 * self.r - 0.5);
                let (clo, chi) = (lo.max(blo), hi.min(bhi));
                if clo > chi {
                    continue;
                }
                // Parameter of the later end of the clipped piece.
                let later = if ub >= ua { chi } else { clo };
                let s = sa + (later - ua).abs() / (ub - ua).abs() * (sb - sa);
                let s = s.min(sb);
                for &f in &fixed_boxes {
                    note(if horizontal { (i, f) } else { (f, i) }, s);
                }
            }
        }
        last
    }
}

/// Parameters of the points returned by `span_points`.
pub(crate) fn span_params(path: &LatticePath, span: Span, pts: &[Point]) -> Vec<f64> {
    let cum = path.vertex_params();
    let first = cum.partition_point(|&c| c <= span.s0);
    let mut out = Vec::with_capacity(pts.len());
    out.push(span.s0);
    out.extend(cum[first..].iter().take_while(|&&c| c < span.s1).copied());
    if span.s1 > span.s0 {
        out.push(span.s1);
    }
    debug_assert_eq!(out.len(), pts.len());
    out
}

/// The ellipse `{z : ‖x − z‖ + ‖y − z‖ ≤ 2a}` with foci `x`, `y`.
#[derive(Clone, Copy, Debug)]
pub struct Ellipse {
    center: Point,
    axis: Point,
    a: f64,
    b: f64,
}

impl Ellipse {
    pub fn from_foci(x: Point, y: Point, focal_sum: f64) -> Self {
        let c = x.dist(y) / 2.0;
        let a = focal_sum / 2.0;
        assert!(a > c, "focal sum must exceed the focal distance");
        let axis = if c > 0.0 {
            Point::new((y.x - x.x) / (2.0 * c), (y.y - x.y) / (2.0 * c))
        } else {
            Point::new(1.0, 0.0)
        };
        Self {
            center: Point::new((x.x + y.x) / 2.0, (x.y + y.y) / 2.0),
            axis,
            a,
            b: (a * a - c * c).sqrt(),
        }
    }

    pub fn semi_axes(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    fn local(&self, p: Point) -> (f64, f64) {
        let d = p.sub(self.center);
        let u = d.dot(self.axis);
        let v = d.x * -self.axis.y + d.y * self.axis.x;
        (u.abs(), v.abs())
    }

    pub fn contains(&self, p: Point) -> bool {
        let (u, v) = self.local(p);
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }

    /// Cheap upper bound on `distance(p)`: the gap to the boundary point on
    /// the ray from the centre.
    pub fn distance_upper(&self, p: Point) -> f64 {
        let (u, v) = self.local(p);
        let q = ((u / self.a).powi(2) + (v / self.b).powi(2)).sqrt();
        if q <= 1.0 {
            0.0
        } else {
            u.hypot(v) * (1.0 - 1.0 / q)
        }
    }

    /// Euclidean distance from `p` to the filled ellipse (0 inside).
    pub fn distance(&self, p: Point) -> f64 {
        let (y0, y1) = self.local(p);
        if (y0 / self.a).powi(2) + (y1 / self.b).powi(2) <= 1.0 {
            return 0.0;
        }
        distance_outside(self.a, self.b, y0, y1)
    }
}

/// Distance from `(y0, y1)` in the first quadrant, outside the ellipse with
/// semi-axes `e0 ≥ e1`, by bisection on the root of the normal equation.
fn distance_outside(e0: f64, e1: f64, y0: f64, y1: f64) -> f64 {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            let r0 = (e0 / e1).powi(2);
            let sbar = ellipse_root(r0, z0, z1, g);
            let x0 = r0 * y0 / (sbar + r0);
            let x1 = y1 / (sbar + 1.0);
            (x0 - y0).hypot(x1 - y1)
        } else {
            (y1 - e1).abs()
        }
    } else {
        let numer = e0 * y0;
        let denom = e0 * e0 - e1 * e1;
        if numer < denom {
            let xd = numer / denom;
            let x0 = e0 * xd;
            let x1 = e1 * (1.0 - xd * xd).max(0.0).sqrt();
            (x0 - y0).hypot(x1)
        } else {
            (y0 - e0).abs()
        }
    }
}

fn ellipse_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Vertex;

    #[test]
    fn integer_points_are_interior() {
        let g = BoxGrid::new(4.0);
        for x in -9..9 {
            for y in -9..9 {
                let p = Point::new(x as f64, y as f64);
                assert_eq!(g.boxes_containing(p).len(), 1);
                let (a, b) = g.box_of(p);
                assert_eq!(g.box_of(Point::new(x as f64 + 4.0, y as f64)), (a + 1, b));
            }
        }
        assert_eq!(g.box_of(Point::new(3.5, 0.0)), (0, 0));
        assert_eq!(g.boxes_containing(Point::new(3.5, 0.0)).len(), 2);
    }

    #[test]
    fn visits_of_a_straight_run() {
        let g = BoxGrid::new(4.0);
        let p = LatticePath::from_vertices(&(0..=8).map(|i| Vertex::new(i, 0)).collect::<Vec<_>>()).unwrap();
        assert_eq!(g.visits(&p, Span::new(0.0, 4.0)), vec![(0, 0), (1, 0)]);
        assert_eq!(g.visits(&p, Span::new(0.0, 3.5)), vec![(0, 0)]);
        let last = g.last_visits(&p, p.full());
        assert_eq!(last[&(0, 0)], 3.5);
        assert_eq!(last[&(2, 0)], 8.0);
    }

    #[test]
    fn ellipse_distance_matches_sampling() {
        let e = Ellipse::from_foci(Point::new(0.0, 0.0), Point::new(10.0, 3.0), 12.0);
        let (a, b) = e.semi_axes();
        for &(x, y) in &[(20.0, 1.0), (-3.0, 7.0), (5.0, 1.5), (5.0, 10.0), (12.0, -4.0)] {
            let p = Point::new(x, y);
            let exact = e.distance(p);
            let th = (3.0f64).atan2(10.0);
            let mut best = f64::INFINITY;
            let n = 200_000;
            for i in 0..n {
                let t = i as f64 / n as f64 * std::f64::consts::TAU;
                let (u, v) = (a * t.cos(), b * t.sin());
                let q = Point::new(5.0 + u * th.cos() - v * th.sin(), 1.5 + u * th.sin() + v * th.cos());
                best = best.min(q.dist(p));
            }
            if e.contains(p) {
                assert_eq!(exact, 0.0);
            } else {
                assert!((exact - best).abs() < 1e-6, "{exact} vs {best}");
            }
        }
    }
}
