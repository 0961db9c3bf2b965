//! Path trees built by recursive extraction, and the uniform flow on them.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::classes::{classify_span, in_scale_class, HierarchyParams, TameVerdict, SCALE_TOL};
use super::extract::{level0_span, tame_span, top_span, untame_span, ExtractionKind};
use super::path::{LatticePath, Span};
use crate::error::{domain, LfppError, Result};
use crate::lattice::Vertex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Depth `L(u)` in the tree.
    pub level: u32,
    /// Scale class index of the node's subpath.
    pub scale: u32,
    pub span: Span,
    pub norm: f64,
    pub verdict: Option<TameVerdict>,
    pub children: Vec<usize>,
    pub kind: Option<ExtractionKind>,
    pub ell: f64,
    pub leaf: Option<Vertex>,
    /// `θ(u) = 1 / flow_den`.
    pub flow_den: u64,
    pub near_ties: usize,
}

impl TreeNode {
    pub fn d(&self) -> usize {
        self.children.len()
    }

    pub fn tame(&self) -> Option<bool> {
        self.verdict.map(|v| v.tame)
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn flow(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.flow_den))
    }

    pub fn flow_f64(&self) -> f64 {
        1.0 / self.flow_den as f64
    }
}

#[derive(Clone, Debug)]
pub struct PathTree {
    path: LatticePath,
    params: HierarchyParams,
    nodes: Vec<TreeNode>,
}

impl PathTree {
    pub fn path(&self) -> &LatticePath {
        &self.path
    }

    pub fn params(&self) -> &HierarchyParams {
        &self.params
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    /// Depth `j` of the tree, the scale class of the root.
    pub fn depth(&self) -> u32 {
        self.nodes[0].scale
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.scale == 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().count()
    }

    pub fn near_ties(&self) -> usize {
        self.nodes.iter().map(|n| n.near_ties).sum()
    }

    /// Distinct lattice points on the node's subpath.
    pub fn node_points(&self, id: usize) -> Vec<Vertex> {
        let mut seen = HashSet::new();
        self.path
            .span_lattice_points(self.nodes[id].span)
            .into_iter()
            .map(|p| p.1)
            .filter(|v| seen.insert(*v))
            .collect()
    }

    /// Ancestors of `id` from its parent up to the root.
    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    /// Exact `Σ_{leaves} θ`.
    pub fn leaf_flow_sum(&self) -> BigRational {
        self.leaves().fold(BigRational::zero(), |acc, n| acc + n.flow())
    }

    /// Nodes whose flow differs from the sum over their children.
    pub fn conservation_failures(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| !n.is_leaf())
            .filter(|n| n.children.iter().fold(BigRational::zero(), |a, &c| a + self.nodes[c].flow()) != n.flow())
            .map(|n| n.id)
            .collect()
    }
}

/// Exact flows `θ(u)`, indexed by node id.
pub fn uniform_flow(tree: &PathTree) -> Vec<BigRational> {
    tree.nodes.iter().map(TreeNode::flow).collect()
}

/// Exact flow through untame non-root nodes.
pub fn untame_flow_exact(tree: &PathTree) -> BigRational {
    tree.nodes
        .iter()
        .filter(|n| n.level >= 1 && n.tame() == Some(false))
        .fold(BigRational::zero(), |a, n| a + n.flow())
}

pub fn untame_flow(tree: &PathTree) -> f64 {
    let r = untame_flow_exact(tree);
    ratio_to_f64(&r)
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafBoundReport {
    pub leaves: usize,
    pub violations: usize,
    /// Largest `θ(v)` divided by its bound.
    pub worst_ratio: f64,
}

/// Checks `θ(v) ≤ 8/(κK^m) · exp(−C_v/(K²+1))` at every leaf of a top-level
/// tree, where `C_v` counts untame strict ancestors below the root.
pub fn leaf_flow_bound(tree: &PathTree) -> LeafBoundReport {
    let p = &tree.params;
    let k = p.big_k();
    let base = 8.0 / (p.kappa * p.scale(p.m()));
    let mut report = LeafBoundReport {
        leaves: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for leaf in tree.leaves() {
        let c_v = tree
            .ancestors(leaf.id)
            .iter()
            .filter(|&&a| tree.nodes[a].level >= 1 && tree.nodes[a].tame() == Some(false))
            .count();
        let bound = base * (-(c_v as f64) / (k * k + 1.0)).exp();
        let ratio = leaf.flow_f64() / bound;
        report.leaves += 1;
        report.worst_ratio = report.worst_ratio.max(ratio);
        if ratio > 1.0 + 1e-12 {
            report.violations += 1;
        }
    }
    report
}

/// Builds the depth-`j` tree of `P ∈ SL_j` and re-verifies the tree
/// properties: `d_ρ = d₀` at the top, `d_u ≥ K` with the norm ratios in the
/// middle, `d_u ≥ ‖u‖/2` above the leaves, and distinct leaves.
pub fn build_tree(path: &LatticePath, j: u32, params: &HierarchyParams) -> Result<PathTree> {
    if j > params.m() {
        return domain(format!("scale class {j} exceeds m = {}", params.m()));
    }
    if j == params.m() && params.m() < 2 {
        return domain("top-level trees need m ≥ 2");
    }
    let full = path.full();
    if !in_scale_class(path, full, j, params) {
        return domain(format!("path is not in scale class {j}"));
    }
    let mut nodes = vec![TreeNode {
        id: 0,
        parent: None,
        level: 0,
        scale: j,
        span: full,
        norm: path.norm(),
        verdict: None,
        children: Vec::new(),
        kind: None,
        ell: 0.0,
        leaf: if j == 0 { path.start().as_vertex() } else { None },
        flow_den: 1,
        near_ties: 0,
    }];
    let mut next = 0;
    while next < nodes.len() {
        let id = next;
        next += 1;
        let s = nodes[id].scale;
        if s == 0 {
            continue;
        }
        let span = nodes[id].span;
        if s < params.m() {
            nodes[id].verdict = Some(classify_span(path, span, s - 1, params)?);
        }
        let ex = if s == params.m() {
            top_span(path, span, params)?
        } else if s == 1 {
            level0_span(path, span)
        } else if nodes[id].tame() == Some(true) {
            tame_span(path, span, s - 1, params)?
        } else {
            untame_span(path, span, s - 1, params)?
        };
        let ex = ex.into_checked().map_err(|e| LfppError::Internal(format!("node {id}: {e}")))?;
        let d = ex.d() as u64;
        let den = nodes[id].flow_den.checked_mul(d).ok_or_else(|| LfppError::Capacity {
            what: "flow denominator".into(),
            limit: usize::MAX,
        })?;
        nodes[id].kind = Some(ex.kind);
        nodes[id].ell = ex.ell;
        nodes[id].near_ties = ex.near_ties;
        for (i, cs) in ex.spans.iter().enumerate() {
            let cid = nodes.len();
            if s > 1 && !in_scale_class(path, *cs, s - 1, params) {
                return Err(LfppError::Internal(format!(
                    "node {id}: child {} is not in scale class {}",
                    i + 1,
                    s - 1
                )));
            }
            nodes.push(TreeNode {
                id: cid,
                parent: Some(id),
                level: nodes[id].level + 1,
                scale: s - 1,
                span: *cs,
                norm: path.span_norm(*cs),
                verdict: None,
                children: Vec::new(),
                kind: None,
                ell: 0.0,
                leaf: ex.leaves.get(i).copied(),
                flow_den: den,
                near_ties: 0,
            });
            nodes[id].children.push(cid);
        }
    }
    let tree = PathTree {
        path: path.clone(),
        params: *params,
        nodes,
    };
    let problems = tree_violations(&tree);
    if !problems.is_empty() {
        return Err(LfppError::Internal(format!("tree properties: {}", problems.join("; "))));
    }
    Ok(tree)
}

/// Structural tree properties that must hold after construction.
pub fn tree_violations(tree: &PathTree) -> Vec<String> {
    let p = &tree.params;
    let k = p.big_k();
    let j = tree.depth();
    let mut out = Vec::new();
    if j == p.m() && tree.root().d() != p.d0() {
        out.push(format!("root has d = {} but d0 = {}", tree.root().d(), p.d0()));
    }
    for u in &tree.nodes {
        if u.is_leaf() {
            continue;
        }
        let middle = u.level + 2 <= j && !(u.level == 0 && j == p.m());
        if middle {
            if (u.d() as f64) < k {
                out.push(format!("node {}: d = {} < K", u.id, u.d()));
            }
            let gain = if u.tame() == Some(false) { 1.0 + 1.0 / (k * k) } else { 1.0 };
            for &c in &u.children {
                let v = &tree.nodes[c];
                if v.norm * (u.d() as f64) < gain * u.norm * (1.0 - SCALE_TOL) {
                    out.push(format!(
                        "node {}: child {} has ‖v‖·d = {} < {}",
                        u.id,
                        c,
                        v.norm * u.d() as f64,
                        gain * u.norm
                    ));
                }
            }
        }
        if u.level + 1 == j && (u.d() as f64) < u.norm / 2.0 {
            out.push(format!("node {}: d = {} < ‖u‖/2", u.id, u.d()));
        }
    }
    let leaves: Vec<Vertex> = tree.leaves().filter_map(|l| l.leaf).collect();
    let distinct: HashSet<Vertex> = leaves.iter().copied().collect();
    if distinct.len() != leaves.len() || leaves.len() != tree.leaf_count() {
        out.push(format!(
            "{} leaves map to {} distinct lattice points",
            tree.leaf_count(),
            distinct.len()
        ));
    }
    if leaves.len() > tree.path.cardinality() {
        out.push(format!("{} leaves exceed |P| = {}", leaves.len(), tree.path.cardinality()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::ScaleParams;

    fn straight(n: i64) -> LatticePath {
        LatticePath::from_vertices(&(0..=n).map(|i| Vertex::new(i, 0)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn balanced_straight_tree() {
        let params = HierarchyParams::new(ScaleParams::new(64, 2, 3).unwrap(), 0.5).unwrap();
        let p = straight(16);
        let tree = build_tree(&p, 2, &params).unwrap();
        assert_eq!(tree.root().d(), 4);
        assert!(tree
            .nodes()
            .iter()
            .filter(|n| n.level >= 1 && n.level <= 1)
            .all(|n| n.tame() == Some(true)));
        // Each level-1 subpath of length 4 has 3 interior lattice points.
        assert_eq!(tree.leaf_count(), 12);
        assert_eq!(tree.leaf_flow_sum(), BigRational::one());
        assert!(tree.conservation_failures().is_empty());
        assert_eq!(untame_flow(&tree), 0.0);
        assert!(tree.leaves().all(|l| l.flow_den == 12));
    }

    #[test]
    fn top_tree_flows() {
        let params = HierarchyParams::new(ScaleParams::new(64, 2, 3).unwrap(), 0.5).unwrap();
        let p = straight(40);
        let tree = build_tree(&p, 3, &params).unwrap();
        assert_eq!(tree.root().d(), 2);
        assert_eq!(tree.leaf_flow_sum(), BigRational::one());
        let report = leaf_flow_bound(&tree);
        assert_eq!(report.violations, 0);
    }

    #[test]
    fn quarter_flows() {
        // Fractional endpoints give every level-1 subpath four interior points.
        let params = HierarchyParams::new(ScaleParams::new(64, 2, 3).unwrap(), 0.5).unwrap();
        let mut pts = vec![super::super::path::Point::new(0.5, 0.0)];
        pts.extend((1..=18).map(|i| super::super::path::Point::new(i as f64, 0.0)));
        pts.push(super::super::path::Point::new(18.5, 0.0));
        let p = LatticePath::new(pts).unwrap();
        let tree = build_tree(&p, 2, &params).unwrap();
        assert_eq!(tree.leaf_count(), 16);
        assert!(tree.leaves().all(|l| l.flow() == BigRational::new(BigInt::one(), BigInt::from(16))));
    }
}
