//! Subpath extraction: the tame, top-level, untame and level-0 procedures,
//! each followed by a postcondition check.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::classes::{classify_span, in_scale_class, HierarchyParams, SCALE_TOL};
use super::geometry::{BoxGrid, BoxIndex};
use super::path::{first_exit_param, LatticePath, Point, Span};
use crate::error::{domain, LfppError, Result};
use crate::lattice::Vertex;

/// Tolerance for "touching without crossing" a perpendicular line.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractionKind {
    Tame,
    Top,
    Untame,
    Level0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// All `d` subpaths were extracted.
    Completed,
    /// The end point of `P` lies in the blocked boxes.
    EndBlocked,
    /// The remainder of `P` stays inside the open ball.
    NoExit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    pub kind: ExtractionKind,
    /// The parent span on the underlying path.
    pub parent: Span,
    /// Scale index of the children.
    pub child_level: u32,
    /// Common norm `ℓ` of the subpaths (1 at level 0).
    pub ell: f64,
    /// `d̂` of the untame procedure.
    pub d_hat: Option<usize>,
    pub spans: Vec<Span>,
    /// Child lattice points at level 0.
    pub leaves: Vec<Vertex>,
    /// Per-box subpath visit counts in `BD_{K^j}`.
    pub box_visits: BTreeMap<BoxIndex, u32>,
    pub stop: StopReason,
    /// Perpendicular lines touched within `1e−9` without being crossed.
    pub near_ties: usize,
    pub violations: Vec<String>,
}

impl Extraction {
    pub fn d(&self) -> usize {
        self.spans.len()
    }

    pub fn max_box_visits(&self) -> u32 {
        self.box_visits.values().copied().max().unwrap_or(0)
    }

    pub fn subpaths(&self, path: &LatticePath) -> Vec<LatticePath> {
        self.spans.iter().map(|&s| path.subpath(s)).collect()
    }

    pub(crate) fn into_checked(self) -> Result<Self> {
        if self.violations.is_empty() {
            Ok(self)
        } else {
            Err(LfppError::Internal(format!(
                "{:?} extraction: {}",
                self.kind,
                self.violations.join("; ")
            )))
        }
    }
}

fn count_visits(path: &LatticePath, spans: &[Span], grid: BoxGrid) -> BTreeMap<BoxIndex, u32> {
    let mut counts = BTreeMap::new();
    for &s in spans {
        for b in grid.visits(path, s) {
            *counts.entry(b).or_insert(0) += 1;
        }
    }
    counts
}

/// First parameter in `[from, limit]` whose projection reaches `target`.
fn first_reach(path: &LatticePath, from: f64, limit: f64, proj: impl Fn(Point) -> f64, target: f64, ties: &mut usize) -> Option<f64> {
    let pts = path.points();
    let cum = path.vertex_params();
    let mut sa = from;
    let mut pa = proj(path.point_at(from));
    if pa >= target {
        return Some(from);
    }
    if pts.len() == 1 {
        return None;
    }
    let mut k = path.segment_at(from);
    loop {
        let (sb, b) = if cum[k + 1] >= limit {
            (limit, path.point_at(limit))
        } else {
            (cum[k + 1], pts[k + 1])
        };
        let pb = proj(b);
        if pb >= target {
            let t = (target - pa) / (pb - pa);
            if 1.0 - t <= 1e-12 {
                return Some(sb);
            }
            return Some(sa + t * (sb - sa));
        }
        if target - pb <= TIE_TOL {
            *ties += 1;
        }
        if sb >= limit || k + 2 >= pts.len() {
            return None;
        }
        k += 1;
        sa = sb;
        pa = pb;
    }
}

/// Exit parameter, accepting an end point that sits on the sphere up to
/// rounding.
fn exit_or_end(path: &LatticePath, from: f64, limit: f64, ell: f64) -> Option<f64> {
    first_exit_param(path, from, limit, ell)
        .or_else(|| (path.point_at(limit).dist(path.point_at(from)) >= ell * (1.0 - SCALE_TOL)).then_some(limit))
}

/// `d` subpaths starting where `P` first crosses the lines perpendicular to
/// `x → y` at distances `0, ℓ, 2ℓ, …`.
fn perpendicular(path: &LatticePath, span: Span, ell: f64, d: usize) -> Result<(Vec<Span>, usize)> {
    let x = path.point_at(span.s0);
    let y = path.point_at(span.s1);
    let norm = x.dist(y);
    let e = Point::new((y.x - x.x) / norm, (y.y - x.y) / norm);
    let proj = |p: Point| p.sub(x).dot(e);
    let mut spans = Vec::with_capacity(d);
    let mut ties = 0;
    let mut cursor = span.s0;
    let mut prev_end = span.s0;
    for i in 0..d {
        let mut xs = first_reach(path, cursor, span.s1, proj, i as f64 * ell, &mut ties)
            .ok_or_else(|| LfppError::Internal(format!("perpendicular line {i} never reached")))?;
        // The previous exit can sit on this line; rounding must not reorder them.
        if xs < prev_end && prev_end - xs <= TIE_TOL {
            xs = prev_end;
        }
        let ys = exit_or_end(path, xs, span.s1, ell).ok_or_else(|| {
            LfppError::Internal(format!(
                "subpath {} never leaves its ball (start {xs}, end {}, ℓ {ell}, end distance {})",
                i + 1,
                span.s1,
                path.point_at(span.s1).dist(path.point_at(xs))
            ))
        })?;
        spans.push(Span::new(xs, ys));
        cursor = xs;
        prev_end = ys;
    }
    Ok((spans, ties))
}

fn base(kind: ExtractionKind, parent: Span, child_level: u32, ell: f64) -> Extraction {
    Extraction {
        kind,
        parent,
        child_level,
        ell,
        d_hat: None,
        spans: Vec::new(),
        leaves: Vec::new(),
        box_visits: BTreeMap::new(),
        stop: StopReason::Completed,
        near_ties: 0,
        violations: Vec::new(),
    }
}

pub(crate) fn tame_span(path: &LatticePath, span: Span, j: u32, params: &HierarchyParams) -> Result<Extraction> {
    let k = params.big_k();
    let d = k as usize;
    let ell = path.span_norm(span) / k;
    let mut ex = base(ExtractionKind::Tame, span, j, ell);
    let (spans, ties) = perpendicular(path, span, ell, d)?;
    ex.spans = spans;
    ex.near_ties = ties;
    ex.box_visits = count_visits(path, &ex.spans, BoxGrid::new(params.scale(j)));
    check(&mut ex, path, params);
    Ok(ex)
}

pub(crate) fn top_span(path: &LatticePath, span: Span, params: &HierarchyParams) -> Result<Extraction> {
    let m = params.m();
    let ell = params.scale(m - 1);
    let d0 = params.d0();
    if d0 == 0 {
        return domain("κN is below K^{m−1}; no top-level subpaths fit");
    }
    let mut ex = base(ExtractionKind::Top, span, m - 1, ell);
    let (spans, ties) = perpendicular(path, span, ell, d0)?;
    ex.spans = spans;
    ex.near_ties = ties;
    ex.box_visits = count_visits(path, &ex.spans, BoxGrid::new(ell));
    check(&mut ex, path, params);
    Ok(ex)
}

pub(crate) fn untame_span(path: &LatticePath, span: Span, j: u32, params: &HierarchyParams) -> Result<Extraction> {
    let k = params.big_k();
    let norm = path.span_norm(span);
    let gain = 1.0 + 1.0 / (k * k);
    let d_hat = if norm <= (1.0 + 1.0 / k) / gain * params.scale(j + 1) {
        k as usize
    } else {
        k as usize + 1
    };
    let ell = gain * norm / d_hat as f64;
    let grid = BoxGrid::new(params.scale(j));
    let last = grid.last_visits(path, span);
    let end = path.point_at(span.s1);

    let mut ex = base(ExtractionKind::Untame, span, j, ell);
    ex.d_hat = Some(d_hat);
    let mut counts: BTreeMap<BoxIndex, u32> = BTreeMap::new();
    let mut xs = span.s0;
    let max_iter = (span.len() / ell).ceil() as usize + 2;
    for _ in 0..max_iter {
        let Some(ys) = first_exit_param(path, xs, span.s1, ell) else {
            ex.stop = StopReason::NoExit;
            break;
        };
        ex.spans.push(Span::new(xs, ys));
        let visits = grid.visits(path, Span::new(xs, ys));
        let blocked: Vec<BoxIndex> = visits
            .iter()
            .copied()
            .filter(|b| counts.get(b).copied().unwrap_or(0) >= 11)
            .collect();
        for b in &visits {
            *counts.entry(*b).or_insert(0) += 1;
        }
        if blocked.is_empty() {
            xs = ys;
            continue;
        }
        if blocked.iter().any(|&b| grid.contains_closed(b, end)) {
            ex.stop = StopReason::EndBlocked;
            break;
        }
        let zs = blocked.iter().map(|b| last[b]).fold(f64::NEG_INFINITY, f64::max);
        xs = if zs > ys { zs } else { ys };
    }
    ex.box_visits = counts;
    check(&mut ex, path, params);
    Ok(ex)
}

pub(crate) fn level0_span(path: &LatticePath, span: Span) -> Extraction {
    let x = path.point_at(span.s0).as_vertex();
    let y = path.point_at(span.s1).as_vertex();
    let mut ex = base(ExtractionKind::Level0, span, 0, 1.0);
    let mut seen = HashSet::new();
    for (s, v) in path.span_lattice_points(span) {
        if Some(v) == x || Some(v) == y || !seen.insert(v) {
            continue;
        }
        ex.spans.push(Span::new(s, s));
        ex.leaves.push(v);
    }
    let norm = path.span_norm(span);
    if (ex.d() as f64) < norm / 2.0 {
        ex.violations.push(format!("level 0: d = {} < ‖P‖/2 = {}", ex.d(), norm / 2.0));
    }
    ex
}

/// Re-verifies the extraction guarantees and records any violation.
fn check(ex: &mut Extraction, path: &LatticePath, params: &HierarchyParams) {
    let k = params.big_k();
    let j = ex.child_level;
    let kj = params.scale(j);
    let norm = path.span_norm(ex.parent);
    let ell = ex.ell;
    let d = ex.d();
    let mut v = Vec::new();

    match ex.kind {
        ExtractionKind::Top => {
            if ell != kj {
                v.push(format!("top level: ℓ = {ell} differs from K^(m-1) = {kj}"));
            }
            if d != params.d0() {
                v.push(format!("top level: d = {d} differs from d0 = {}", params.d0()));
            }
            if ell * (d as f64) > norm * (1.0 + SCALE_TOL) {
                v.push(format!("top level: d·ℓ = {} exceeds ‖P‖ = {norm}", ell * d as f64));
            }
        }
        ExtractionKind::Tame | ExtractionKind::Untame => {
            if ell < kj * (1.0 - SCALE_TOL) || ell > (1.0 + 1.0 / k) * kj * (1.0 + SCALE_TOL) {
                v.push(format!("ℓ = {ell} outside [{kj}, {}]", (1.0 + 1.0 / k) * kj));
            }
            if (d as f64) < k {
                v.push(format!("(a) d = {d} < K"));
            }
        }
        ExtractionKind::Level0 => {}
    }
    match ex.kind {
        ExtractionKind::Tame => {
            if ((ell * d as f64) - norm).abs() > SCALE_TOL * norm {
                v.push(format!("(b) d·ℓ = {} differs from ‖P‖ = {norm}", ell * d as f64));
            }
        }
        ExtractionKind::Untame => {
            let d_hat = ex.d_hat.unwrap_or(0);
            if d < d_hat {
                v.push(format!("(a) d = {d} < d̂ = {d_hat}"));
            }
            let want = (1.0 + 1.0 / (k * k)) * norm;
            if ell * (d as f64) < want * (1.0 - SCALE_TOL) {
                v.push(format!("(b) d·ℓ = {} < (1+1/K²)‖P‖ = {want}", ell * d as f64));
            }
            let x = path.point_at(ex.parent.s0);
            for (i, s) in ex.spans.iter().enumerate() {
                let reach = path.span_max_dist(*s, x);
                let bound = (i + 1) as f64 * ell;
                if reach > bound * (1.0 + SCALE_TOL) {
                    v.push(format!("regularity: subpath {} reaches {reach} > {bound}", i + 1));
                }
            }
        }
        _ => {}
    }
    if ex.kind != ExtractionKind::Level0 {
        let max = ex.max_box_visits();
        if max > 12 {
            v.push(format!("(c) a box is visited by {max} subpaths"));
        }
        for (i, s) in ex.spans.iter().enumerate() {
            let n = path.span_norm(*s);
            if (n - ell).abs() > SCALE_TOL * ell {
                v.push(format!("(d) subpath {} has norm {n} ≠ ℓ = {ell}", i + 1));
            }
            let reach = path.span_max_dist(*s, path.point_at(s.s0));
            if reach > ell * (1.0 + SCALE_TOL) {
                v.push(format!("(d) subpath {} leaves B(x, ℓ): {reach}", i + 1));
            }
        }
    }
    for (i, w) in ex.spans.windows(2).enumerate() {
        if w[1].s0 < w[0].s1 {
            v.push(format!("subpaths {} and {} overlap", i + 1, i + 2));
        }
    }
    if let (Some(f), Some(l)) = (ex.spans.first(), ex.spans.last()) {
        if f.s0 < ex.parent.s0 || l.s1 > ex.parent.s1 {
            v.push("subpaths leave the parent span".into());
        }
    }
    ex.violations.extend(v);
}

/// Tame extraction of `P ∈ SL_{j+1}` into `K` subpaths of norm `‖P‖/K`.
pub fn extract_tame(path: &LatticePath, j: u32, params: &HierarchyParams) -> Result<Extraction> {
    let verdict = classify_span(path, path.full(), j, params)?;
    if !verdict.tame {
        return domain("extract_tame called on an untame path");
    }
    tame_span(path, path.full(), j, params)?.into_checked()
}

/// Top-level extraction of `P ∈ SL_m` into `d₀` subpaths of norm `K^{m−1}`.
pub fn extract_top(path: &LatticePath, params: &HierarchyParams) -> Result<Extraction> {
    if params.m() < 2 {
        return domain("top-level extraction needs m ≥ 2");
    }
    if !in_scale_class(path, path.full(), params.m(), params) {
        return domain(format!("path norm {} is below κN", path.norm()));
    }
    top_span(path, path.full(), params)?.into_checked()
}

/// Untame extraction of `P ∈ SL_{j+1}` with the 12-visit rule.
pub fn extract_untame(path: &LatticePath, j: u32, params: &HierarchyParams) -> Result<Extraction> {
    let verdict = classify_span(path, path.full(), j, params)?;
    if verdict.tame {
        return domain("extract_untame called on a tame path");
    }
    untame_span(path, path.full(), j, params)?.into_checked()
}

/// Lattice points of `P ∈ SL₁` other than its endpoints.
pub fn extract_level0(path: &LatticePath, params: &HierarchyParams) -> Result<Extraction> {
    if !in_scale_class(path, path.full(), 1, params) {
        return domain("path is not in scale class 1");
    }
    level0_span(path, path.full()).into_checked()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::ScaleParams;

    fn params() -> HierarchyParams {
        HierarchyParams::new(ScaleParams::new(4096, 3, 4).unwrap(), 0.25).unwrap()
    }

    fn straight(n: i64) -> LatticePath {
        LatticePath::from_vertices(&(0..=n).map(|i| Vertex::new(i, 0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn straight_tame() {
        let p = straight(64);
        let ex = extract_tame(&p, 1, &params()).unwrap();
        assert_eq!(ex.d(), 8);
        for (i, s) in ex.spans.iter().enumerate() {
            assert_eq!(*s, Span::new(8.0 * i as f64, 8.0 * (i + 1) as f64));
        }
        assert!(ex.max_box_visits() <= 2);
    }

    #[test]
    fn level0_counts() {
        let p = straight(8);
        let ex = extract_level0(&p, &params()).unwrap();
        assert_eq!(ex.d(), 7);
        let q = LatticePath::new(
            std::iter::once(Point::new(0.5, 0.0))
                .chain((1..=8).map(|i| Point::new(i as f64, 0.0)))
                .chain(std::iter::once(Point::new(8.0, 0.5)))
                .collect(),
        )
        .unwrap();
        assert_eq!(level0_span(&q, q.full()).d(), 8);
    }

    #[test]
    fn wrong_verdict_is_rejected() {
        assert!(extract_untame(&straight(64), 1, &params()).is_err());
        assert!(extract_top(&straight(64), &params()).is_err());
    }
}
