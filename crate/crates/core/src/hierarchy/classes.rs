//! Scale classes `SL_j` and the tame/untame verdict.

use serde::{Deserialize, Serialize};

use super::geometry::Ellipse;
use super::path::{LatticePath, Span};
use crate::error::{config, domain, Result};
use crate::scales::ScaleParams;

/// Relative tolerance for scale-class and containment checks.
pub const SCALE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchyParams {
    pub scales: ScaleParams,
    pub kappa: f64,
}

impl HierarchyParams {
    pub fn new(scales: ScaleParams, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return config(format!("kappa must lie in (0, 1), got {kappa}"));
        }
        Ok(Self { scales, kappa })
    }

    pub fn big_k(&self) -> f64 {
        self.scales.big_k_f64()
    }

    pub fn m(&self) -> u32 {
        self.scales.m
    }

    pub fn n(&self) -> usize {
        self.scales.n
    }

    /// `K^j`.
    pub fn scale(&self, j: u32) -> f64 {
        self.scales.scale(j)
    }

    /// `d₀ = ⌊κN / K^{m−1}⌋`.
    pub fn d0(&self) -> usize {
        (self.kappa * self.n() as f64 / self.scale(self.m() - 1)).floor() as usize
    }
}

/// Whether the span lies in `B(x_P, ‖P‖)`.
pub fn within_own_ball(path: &LatticePath, span: Span) -> bool {
    let norm = path.span_norm(span);
    path.span_max_dist(span, path.point_at(span.s0)) <= norm * (1.0 + SCALE_TOL) + SCALE_TOL
}

/// Membership of the span in `SL_j`.
pub fn in_scale_class(path: &LatticePath, span: Span, j: u32, params: &HierarchyParams) -> bool {
    let norm = path.span_norm(span);
    if j == 0 {
        return span.is_point() && path.point_at(span.s0).as_vertex().is_some();
    }
    if j == params.m() {
        return norm >= params.kappa * params.n() as f64 * (1.0 - SCALE_TOL);
    }
    if j > params.m() {
        return false;
    }
    let ratio = norm / params.scale(j);
    let k = params.big_k();
    ratio >= 1.0 - SCALE_TOL && ratio <= 1.0 + 1.0 / k + SCALE_TOL && within_own_ball(path, span)
}

pub fn scale_class_of(path: &LatticePath, span: Span, params: &HierarchyParams) -> Vec<u32> {
    (0..=params.m()).filter(|&j| in_scale_class(path, span, j, params)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TameVerdict {
    pub tame: bool,
    /// Largest distance from a polyline point to `E(P)`.
    pub max_distance: f64,
    /// `4K^j`.
    pub threshold: f64,
    /// The verdict sits within `1e−9` of flipping.
    pub near_tie: bool,
}

/// Tame verdict for a span of scale `K^{j+1}`, measured against the
/// inflated ellipse `Ẽ(P)` at distance `4K^j`.
pub fn tame_verdict(path: &LatticePath, span: Span, j: u32, k: f64) -> TameVerdict {
    let x = path.point_at(span.s0);
    let y = path.point_at(span.s1);
    let norm = x.dist(y);
    let threshold = 4.0 * k.powi(j as i32);
    let ellipse = Ellipse::from_foci(x, y, (1.0 + 2.0 / (k * k)) * norm);
    let mut max_distance: f64 = 0.0;
    for p in path.span_points(span) {
        if ellipse.distance_upper(p) > max_distance {
            max_distance = max_distance.max(ellipse.distance(p));
        }
    }
    TameVerdict {
        tame: max_distance <= threshold,
        max_distance,
        threshold,
        near_tie: (max_distance - threshold).abs() <= 1e-9,
    }
}

/// Classifies `P ∈ SL_{j+1}`. Verdicts exist for `0 ≤ j ≤ m − 2`.
pub fn classify_tame(path: &LatticePath, j: u32, params: &HierarchyParams) -> Result<TameVerdict> {
    classify_span(path, path.full(), j, params)
}

pub(crate) fn classify_span(path: &LatticePath, span: Span, j: u32, params: &HierarchyParams) -> Result<TameVerdict> {
    if j + 2 > params.m() {
        return domain(format!("tame verdicts exist for levels 0..={}, got {j}", params.m() as i64 - 2));
    }
    if !in_scale_class(path, span, j + 1, params) {
        return domain(format!("path is not in scale class {}", j + 1));
    }
    Ok(tame_verdict(path, span, j, params.big_k()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Vertex;

    fn params() -> HierarchyParams {
        HierarchyParams::new(ScaleParams::new(4096, 3, 4).unwrap(), 0.25).unwrap()
    }

    #[test]
    fn straight_is_tame() {
        let p = LatticePath::from_vertices(&(0..=64).map(|i| Vertex::new(i, 0)).collect::<Vec<_>>()).unwrap();
        let v = classify_tame(&p, 1, &params()).unwrap();
        assert!(v.tame);
        assert_eq!(v.max_distance, 0.0);
        assert!(classify_tame(&p, 0, &params()).is_err());
        assert!(classify_tame(&p, 3, &params()).is_err());
    }

    #[test]
    fn detour_is_untame() {
        // Up to (0, 63), over, back down and east: the detour point has
        // focal sum well above (1 + 2/K²)‖P‖ + 8K.
        let mut vs: Vec<Vertex> = (0..=63).map(|y| Vertex::new(0, y)).collect();
        vs.extend((0..=63).rev().map(|y| Vertex::new(1, y)));
        vs.extend((2..=64).map(|x| Vertex::new(x, 0)));
        let p = LatticePath::from_vertices(&vs).unwrap();
        assert!(in_scale_class(&p, p.full(), 2, &params()));
        let v = classify_tame(&p, 1, &params()).unwrap();
        assert!(!v.tame);
        assert!(v.max_distance > v.threshold);
    }
}
