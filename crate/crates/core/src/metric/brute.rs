//! Exhaustive shortest simple paths on small boxes, as an independent check
//! on Dijkstra.

use crate::error::{domain, Result};
use crate::lattice::Vertex;

use super::weights::WeightField;

/// Largest `V_N` the enumeration accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Minimum weight over all simple lattice paths in `V_N` from `x` to `y`,
/// found by depth-first enumeration with branch and bound. Candidate weights
/// use the same order-independent summation as `WeightField::path_weight`.
pub fn brute_force_distance(weights: &WeightField, x: Vertex, y: Vertex) -> Result<(f64, Vec<Vertex>)> {
    let n = weights.n();
    if n > BRUTE_FORCE_LIMIT {
        return domain(format!("brute force is limited to N ≤ {BRUTE_FORCE_LIMIT}"));
    }
    let g = *weights.geometry();
    if !g.contains(x) || !g.contains(y) {
        return domain("endpoints must lie in V_N");
    }
    let w: Vec<f64> = weights.as_slice().to_vec();
    let wmin = w.iter().copied().fold(f64::INFINITY, f64::min);
    let mut search = Search {
        n: n as i64,
        w: &w,
        wmin,
        target: y,
        visited: vec![false; n * n],
        stack: vec![x],
        best: f64::INFINITY,
        best_path: Vec::new(),
        weights,
    };
    search.visited[g.index(x).unwrap()] = true;
    search.dfs(x, w[g.index(x).unwrap()])?;
    Ok((search.best, search.best_path))
}

struct Search<'a> {
    n: i64,
    w: &'a [f64],
    wmin: f64,
    target: Vertex,
    visited: Vec<bool>,
    stack: Vec<Vertex>,
    best: f64,
    best_path: Vec<Vertex>,
    weights: &'a WeightField,
}

impl Search<'_> {
    fn idx(&self, v: Vertex) -> usize {
        (v.y * self.n + v.x) as usize
    }

    fn dfs(&mut self, v: Vertex, cost: f64) -> Result<()> {
        if v == self.target {
            let exact = self.weights.path_weight(&self.stack)?;
            if exact < self.best {
                self.best = exact;
                self.best_path = self.stack.clone();
            }
            return Ok(());
        }
        // Slack keeps rounding in the running sum from pruning the optimum.
        let bound = |c: f64, u: Vertex, t: Vertex| c + self.wmin * u.l1(t) as f64;
        if bound(cost, v, self.target) > self.best * (1.0 + 1e-9) {
            return Ok(());
        }
        let mut next: Vec<(f64, Vertex)> = v
            .neighbors()
            .into_iter()
            .filter(|u| (0..self.n).contains(&u.x) && (0..self.n).contains(&u.y))
            .filter(|u| !self.visited[self.idx(*u)])
            .map(|u| (self.w[self.idx(u)] + self.wmin * u.l1(self.target) as f64, u))
            .collect();
        next.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, u) in next {
            let i = self.idx(u);
            self.visited[i] = true;
            self.stack.push(u);
            self.dfs(u, cost + self.w[i])?;
            self.stack.pop();
            self.visited[i] = false;
        }
        Ok(())
    }
}
