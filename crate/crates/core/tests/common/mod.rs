//! Test-side re-derivation of the extraction guarantees from raw polylines.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use lfpp_core::hierarchy::{Extraction, ExtractionKind, HierarchyParams, LatticePath, Point};

const TOL: f64 = 1e-9;

/// Closed box of `BD_r` holding `p`, ties going to the lower index.
fn box_index(p: Point, r: f64) -> (i64, i64) {
    let idx = |t: f64| ((t + 0.5) / r).ceil() as i64 - 1;
    (idx(p.x), idx(p.y))
}

/// Boxes met by a polyline, excluding its first point.
fn boxes_met(sub: &LatticePath, r: f64) -> HashSet<(i64, i64)> {
    let pts = sub.points();
    let mut out = HashSet::new();
    for w in pts.windows(2) {
        for t in [0.25, 0.5, 0.75, 1.0] {
            let p = Point::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y));
            out.insert(box_index(p, r));
        }
    }
    out
}

/// Every property of a tame or untame extraction, recomputed from the
/// subpath polylines. Returns one message per broken property.
pub fn recheck_extraction(path: &LatticePath, ex: &Extraction, params: &HierarchyParams) -> Vec<String> {
    let mut bad = Vec::new();
    let k = params.big_k();
    let kj = params.scale(ex.child_level);
    let norm = path.start().dist(path.end());
    let ell = ex.ell;
    let d = ex.spans.len();
    let subs = ex.subpaths(path);

    if ell < kj * (1.0 - TOL) || ell > (1.0 + 1.0 / k) * kj * (1.0 + TOL) {
        bad.push(format!("ℓ = {ell} outside [K^j, (1+1/K)K^j]"));
    }
    if (d as f64) < k {
        bad.push(format!("(a) d = {d} < K"));
    }
    match ex.kind {
        ExtractionKind::Tame => {
            if (ell * d as f64 - norm).abs() > TOL * norm {
                bad.push(format!("(b) dℓ = {} ≠ ‖P‖ = {norm}", ell * d as f64));
            }
        }
        ExtractionKind::Untame => {
            if ell * (d as f64) < (1.0 + 1.0 / (k * k)) * norm * (1.0 - TOL) {
                bad.push(format!("(b) dℓ = {} < (1+1/K²)‖P‖", ell * d as f64));
            }
            if d < ex.d_hat.unwrap_or(0) {
                bad.push("(a) d below d̂".into());
            }
            let x = path.start();
            for (i, s) in subs.iter().enumerate() {
                let reach = s.points().iter().map(|p| p.dist(x)).fold(0.0, f64::max);
                if reach > (i + 1) as f64 * ell * (1.0 + TOL) {
                    bad.push(format!("regularity: subpath {} reaches {reach}", i + 1));
                }
            }
        }
        _ => bad.push(format!("unexpected kind {:?}", ex.kind)),
    }
    for (i, s) in subs.iter().enumerate() {
        let (a, b) = (s.start(), s.end());
        if (a.dist(b) - ell).abs() > TOL * ell {
            bad.push(format!("(d) subpath {} has norm {}", i + 1, a.dist(b)));
        }
        let reach = s.points().iter().map(|p| p.dist(a)).fold(0.0, f64::max);
        if reach > ell * (1.0 + TOL) {
            bad.push(format!("(d) subpath {} leaves its ball: {reach}", i + 1));
        }
    }
    for w in ex.spans.windows(2) {
        if w[1].s0 < w[0].s1 {
            bad.push(format!("subpaths overlap: {:?} {:?}", w[0], w[1]));
        }
    }
    if ex.spans.first().is_some_and(|f| f.s0 < 0.0) || ex.spans.last().is_some_and(|l| l.s1 > path.arclength() + TOL) {
        bad.push("subpath outside P".into());
    }
    let mut visits: HashMap<(i64, i64), usize> = HashMap::new();
    for s in &subs {
        for b in boxes_met(s, kj) {
            *visits.entry(b).or_default() += 1;
        }
    }
    if let Some((b, n)) = visits.iter().max_by_key(|e| *e.1) {
        if *n > 12 {
            bad.push(format!("(c) box {b:?} met by {n} subpaths"));
        }
    }
    bad
}

/// Largest number of subpaths meeting one box of `BD_{K^j}`.
pub fn max_visits(path: &LatticePath, ex: &Extraction, params: &HierarchyParams) -> usize {
    let kj = params.scale(ex.child_level);
    let mut visits: HashMap<(i64, i64), usize> = HashMap::new();
    for s in ex.subpaths(path) {
        for b in boxes_met(&s, kj) {
            *visits.entry(b).or_default() += 1;
        }
    }
    visits.values().copied().max().unwrap_or(0)
}

use lfpp_core::dgff::MultiscaleView;
use lfpp_core::hierarchy::PathTree;
use lfpp_core::open::{heavy_mass, label_open, y_flow_exact, OpenConfig};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// `θ(u) = Π 1/d_a` over the ancestors of `u`.
pub fn theta(t: &PathTree, u: usize) -> BigRational {
    t.ancestors(u).iter().fold(BigRational::one(), |acc, &a| {
        acc / BigRational::from_integer(BigInt::from(t.node(a).d()))
    })
}

/// Tree and flow identities recomputed from ancestor products and a direct
/// open count, compared against the library's labels and flows.
pub fn direct_tree_identities(t: &PathTree, view: &MultiscaleView, cfg: &OpenConfig) -> Vec<String> {
    let mut bad = Vec::new();
    let leaf_sum = t.leaves().fold(BigRational::zero(), |a, l| a + theta(t, l.id));
    if !leaf_sum.is_one() {
        bad.push(format!("Σ θ over leaves = {leaf_sum}"));
    }
    for n in t.nodes().iter().filter(|n| !n.is_leaf()) {
        let out = n.children.iter().fold(BigRational::zero(), |a, &c| a + theta(t, c));
        if out != theta(t, n.id) || n.flow() != theta(t, n.id) {
            bad.push(format!("flow not conserved at node {}", n.id));
        }
    }
    if t.leaf_count() > t.path().cardinality() {
        bad.push(format!("{} leaves for |P| = {}", t.leaf_count(), t.path().cardinality()));
    }
    let k = view.params().k;
    let open: HashMap<usize, bool> = t
        .nodes()
        .iter()
        .skip(1)
        .map(|n| {
            (
                n.id,
                t.node_points(n.id)
                    .iter()
                    .any(|z| view.eta_at(n.scale, *z).unwrap() >= cfg.threshold(k)),
            )
        })
        .collect();
    let labels = match label_open(t, view, cfg) {
        Ok(l) => l,
        Err(e) => return vec![e.to_string()],
    };
    for r in 0..t.depth() {
        let mut want = BigRational::zero();
        for n in t
            .nodes()
            .iter()
            .filter(|n| t.ancestors(n.id).len() == r as usize && n.tame() == Some(true))
        {
            let o = n.children.iter().filter(|c| open[c]).count();
            want += theta(t, n.id) * BigRational::new(BigInt::from(o), BigInt::from(n.d()));
        }
        match y_flow_exact(t, &labels, r) {
            Ok(y) if y == want => {}
            Ok(y) => bad.push(format!("Y_{r} = {y}, direct count {want}")),
            Err(e) => bad.push(e.to_string()),
        }
    }
    let lhs = t
        .nodes()
        .iter()
        .skip(1)
        .filter(|n| open[&n.id])
        .fold(BigRational::zero(), |a, n| a + theta(t, n.id));
    let rhs = t.leaves().fold(BigRational::zero(), |a, l| {
        let o = std::iter::once(l.id)
            .chain(t.ancestors(l.id))
            .filter(|u| open.get(u) == Some(&true))
            .count();
        a + theta(t, l.id) * BigRational::from_integer(BigInt::from(o))
    });
    if lhs != rhs || !heavy_mass(t, &labels).identity_holds {
        bad.push(format!("open-flow identity: {lhs} vs {rhs}"));
    }
    bad
}
