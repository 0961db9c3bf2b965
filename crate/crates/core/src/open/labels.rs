//! Open labels on path trees and the flow functionals built from them.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dgff::checks::C1;
use crate::dgff::MultiscaleView;
use crate::error::{config, domain, Result};
use crate::hierarchy::tree::ratio_to_f64;
use crate::hierarchy::PathTree;
use crate::lattice::Vertex;

/// Largest good-point constant used for the reported band.
pub const GOOD_POINT_CAP: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenConfig {
    pub delta: f64,
    pub eps: f64,
}

impl OpenConfig {
    /// `ε = √δ / 2`.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return config(format!("delta must lie in (0, 1), got {delta}"));
        }
        Ok(Self {
            delta,
            eps: delta.sqrt() / 2.0,
        })
    }

    pub fn with_eps(delta: f64, eps: f64) -> Result<Self> {
        let mut c = Self::from_delta(delta)?;
        if !(eps >= 0.0) {
            return config(format!("eps must be non-negative, got {eps}"));
        }
        c.eps = eps;
        Ok(c)
    }

    /// The open threshold `εk`.
    pub fn threshold(&self, k: u32) -> f64 {
        self.eps * k as f64
    }

    /// `C = √(320 C₁) + 2`.
    pub fn good_point_constant() -> f64 {
        (320.0 * C1).sqrt() + 2.0
    }

    /// Heavy leaves have at least `8δm` open ancestors.
    pub fn heavy_threshold(&self, m: u32) -> f64 {
        8.0 * self.delta * m as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeLabels {
    pub threshold: f64,
    /// Open flag per node; `None` at the root.
    pub open: Vec<Option<bool>>,
    /// `d_u Δ_u`, the number of open children, per internal node.
    pub open_children: Vec<Option<usize>>,
    /// `O_v` per leaf.
    pub open_ancestors: Vec<Option<u32>>,
    pub heavy: Vec<Option<bool>>,
}

impl NodeLabels {
    /// `Δ_u` as an exact fraction.
    pub fn delta(&self, tree: &PathTree, id: usize) -> Option<BigRational> {
        let n = self.open_children[id]?;
        Some(BigRational::new(BigInt::from(n), BigInt::from(tree.node(id).d())))
    }

    pub fn delta_f64(&self, tree: &PathTree, id: usize) -> Option<f64> {
        Some(self.open_children[id]? as f64 / tree.node(id).d() as f64)
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|o| **o == Some(true)).count()
    }
}

/// All distinct lattice points of the tree's path.
pub fn tree_points(tree: &PathTree) -> Vec<Vertex> {
    tree.path().lattice_points()
}

/// Labels every non-root node open when some lattice point on its subpath
/// has `η_s(z) ≥ εk`, `s` being the node's scale class.
pub fn label_open(tree: &PathTree, view: &MultiscaleView, cfg: &OpenConfig) -> Result<NodeLabels> {
    let k = view.params().k;
    let threshold = cfg.threshold(k);
    let m = view.params().m;
    let nodes = tree.nodes();
    let mut open = vec![None; nodes.len()];
    let mut missing: Vec<Vertex> = Vec::new();
    for node in nodes.iter().skip(1) {
        if node.scale >= m {
            return domain(format!("node {} has scale {} but the view has m = {m}", node.id, node.scale));
        }
        let mut flag = false;
        for z in tree.node_points(node.id) {
            match view.eta_at(node.scale, z) {
                Some(v) => flag |= v >= threshold,
                None => missing.push(z),
            }
        }
        open[node.id] = Some(flag);
    }
    if !missing.is_empty() {
        missing.sort_unstable();
        missing.dedup();
        let shown: Vec<String> = missing.iter().take(16).map(|v| format!("({}, {})", v.x, v.y)).collect();
        return domain(format!("{} lattice points lack field data: {}", missing.len(), shown.join(" ")));
    }
    let open_children = nodes
        .iter()
        .map(|n| (!n.is_leaf()).then(|| n.children.iter().filter(|&&c| open[c] == Some(true)).count()))
        .collect();
    let mut open_ancestors = vec![None; nodes.len()];
    let mut heavy = vec![None; nodes.len()];
    let cut = cfg.heavy_threshold(m);
    for leaf in tree.leaves() {
        let mut count = u32::from(open[leaf.id] == Some(true));
        count += tree.ancestors(leaf.id).iter().filter(|&&a| open[a] == Some(true)).count() as u32;
        open_ancestors[leaf.id] = Some(count);
        heavy[leaf.id] = Some(count as f64 >= cut);
    }
    Ok(NodeLabels {
        threshold,
        open,
        open_children,
        open_ancestors,
        heavy,
    })
}

/// `Σ_{w ∈ subtree(u), L(w) = L(u) + r} θ_u(w) Δ_w 1{w tame}`, with the flow
/// renormalised so that `θ_u(u) = 1`.
fn y_sub(tree: &PathTree, labels: &NodeLabels, u: usize, r: u32) -> BigRational {
    let mut frontier = vec![u];
    for _ in 0..r {
        frontier = frontier.iter().flat_map(|&w| tree.node(w).children.iter().copied()).collect();
    }
    let base = BigInt::from(tree.node(u).flow_den);
    frontier
        .into_iter()
        .filter(|&w| tree.node(w).tame() == Some(true))
        .filter_map(|w| {
            let n = labels.open_children[w]?;
            let den = BigInt::from(tree.node(w).flow_den) * BigInt::from(tree.node(w).d());
            Some(BigRational::new(base.clone() * BigInt::from(n), den))
        })
        .fold(BigRational::zero(), |a, b| a + b)
}

/// `Y_{P,r} = Σ_{L(u)=r} θ(u) Δ_u 1{u tame}`.
pub fn y_flow_exact(tree: &PathTree, labels: &NodeLabels, r: u32) -> Result<BigRational> {
    if r >= tree.depth() {
        return domain(format!("r must lie in 0..{}, got {r}", tree.depth()));
    }
    Ok(y_sub(tree, labels, 0, r))
}

pub fn y_flow(tree: &PathTree, labels: &NodeLabels, r: u32) -> Result<f64> {
    y_flow_exact(tree, labels, r).map(|v| ratio_to_f64(&v))
}

/// Nodes and levels where `Y_{P,r+1} = (1/d_P) Σ_i Y_{P^(i),r}` fails.
pub fn y_recursion_failures(tree: &PathTree, labels: &NodeLabels) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    for u in tree.nodes().iter().filter(|n| !n.is_leaf()) {
        let depth_below = u.scale;
        for r in 0..depth_below.saturating_sub(1) {
            let lhs = y_sub(tree, labels, u.id, r + 1);
            let sum = u.children.iter().fold(BigRational::zero(), |a, &c| a + y_sub(tree, labels, c, r));
            let rhs = sum / BigRational::from_integer(BigInt::from(u.d()));
            if lhs != rhs {
                out.push((u.id, r));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeavyReport {
    pub mass: f64,
    /// Heavy mass is at most 1/2.
    pub e1: bool,
    /// `Σ_{u ≠ ρ} θ(u) 1{u open}`.
    pub open_flow: f64,
    /// `Σ_{v leaf} θ(v) O_v`.
    pub leaf_weighted: f64,
    /// The two sums agree exactly.
    pub identity_holds: bool,
    pub heavy_leaves: usize,
}

/// Flow mass on heavy leaves together with the exact double-counting
/// identity between open nodes and leaf counts.
pub fn heavy_mass(tree: &PathTree, labels: &NodeLabels) -> HeavyReport {
    let mass = tree
        .leaves()
        .filter(|l| labels.heavy[l.id] == Some(true))
        .fold(BigRational::zero(), |a, l| a + l.flow());
    let open_flow = tree
        .nodes()
        .iter()
        .skip(1)
        .filter(|n| labels.open[n.id] == Some(true))
        .fold(BigRational::zero(), |a, n| a + n.flow());
    let leaf_weighted = tree.leaves().fold(BigRational::zero(), |a, l| {
        a + l.flow() * BigRational::from_integer(BigInt::from(labels.open_ancestors[l.id].unwrap_or(0)))
    });
    let half = BigRational::new(BigInt::from(1), BigInt::from(2));
    HeavyReport {
        mass: ratio_to_f64(&mass),
        e1: mass <= half,
        open_flow: ratio_to_f64(&open_flow),
        leaf_weighted: ratio_to_f64(&leaf_weighted),
        identity_holds: open_flow == leaf_weighted,
        heavy_leaves: labels.heavy.iter().filter(|h| **h == Some(true)).count(),
    }
}
