//! Vertex-weighted shortest paths on `V_N`.
//!
//! The cost of a path is the sum of the weights of all its vertices, both
//! endpoints included: the source starts at `w(x)` and settling a neighbour
//! `v` from `u` costs `w(v)`. Equal tentative costs are broken towards the
//! lexicographically smallest predecessor, so results are reproducible.

use serde::Serialize;

use super::weights::WeightField;
use crate::error::{domain, Result};
use crate::lattice::Vertex;

/// Min-heap of `(key, item)` with four children per node.
#[derive(Clone, Debug, Default)]
pub struct QuadHeap {
    data: Vec<(f64, u32)>,
}

impl QuadHeap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            data: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn clear(&mut self) {
        self.data.clear();
    }

    fn less(a: (f64, u32), b: (f64, u32)) -> bool {
        a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
    }

    pub fn push(&mut self, key: f64, item: u32) {
        self.data.push((key, item));
        let mut i = self.data.len() - 1;
        while i > 0 {
            let p = (i - 1) / 4;
            if Self::less(self.data[i], self.data[p]) {
                self.data.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    pub fn pop(&mut self) -> Option<(f64, u32)> {
        let last = self.data.pop()?;
        if self.data.is_empty() {
            return Some(last);
        }
        let top = std::mem::replace(&mut self.data[0], last);
        let n = self.data.len();
        let mut i = 0;
        loop {
            let first = 4 * i + 1;
            if first >= n {
                break;
            }
            let mut best = first;
            for c in first + 1..(first + 4).min(n) {
                if Self::less(self.data[c], self.data[best]) {
                    best = c;
                }
            }
            if Self::less(self.data[best], self.data[i]) {
                self.data.swap(best, i);
                i = best;
            } else {
                break;
            }
        }
        Some(top)
    }
}

/// Which predecessor wins when two tentative costs are equal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    SmallestPredecessor,
    LargestPredecessor,
}

/// Order in which the four neighbours are relaxed, as a permutation of
/// (east, north, west, south).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DijkstraOptions {
    pub tie_break: TieBreak,
    pub neighbor_order: [usize; 4],
}

impl Default for DijkstraOptions {
    fn default() -> Self {
        Self {
            tie_break: TieBreak::SmallestPredecessor,
            neighbor_order: [0, 1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicResult {
    pub from: Vertex,
    pub to: Vertex,
    pub path: Vec<Vertex>,
    /// `w(P)`, summed in vertex-index order.
    pub weight: f64,
    /// `|P|`.
    pub cardinality: usize,
    /// `‖x − y‖`.
    pub displacement: f64,
}

/// Scratch space for repeated searches on one lattice size.
pub struct Dijkstra {
    n: usize,
    dist: Vec<f64>,
    pred: Vec<u32>,
    settled: Vec<bool>,
    touched: Vec<u32>,
    heap: QuadHeap,
}

const NONE: u32 = u32::MAX;

impl Dijkstra {
    pub fn new(n: usize) -> Self {
        let len = n * n;
        Self {
            n,
            dist: vec![f64::INFINITY; len],
            pred: vec![NONE; len],
            settled: vec![false; len],
            touched: Vec::new(),
            heap: QuadHeap::with_capacity(len / 4),
        }
    }

    fn reset(&mut self) {
        for &i in &self.touched {
            let i = i as usize;
            self.dist[i] = f64::INFINITY;
            self.pred[i] = NONE;
            self.settled[i] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    fn vertex(&self, i: u32) -> Vertex {
        Vertex::new((i as usize % self.n) as i64, (i as usize / self.n) as i64)
    }

    /// Shortest path from `x` to `y`.
    pub fn run(&mut self, weights: &WeightField, x: Vertex, y: Vertex, opts: DijkstraOptions) -> Result<GeodesicResult> {
        let n = self.n;
        if weights.n() != n {
            return domain(format!("workspace for N={n} used with N={}", weights.n()));
        }
        let g = weights.geometry();
        let (Some(src), Some(dst)) = (g.index(x), g.index(y)) else {
            return domain(format!("endpoints {x}, {y} must lie in V_{n}"));
        };
        let w = weights.as_slice();
        self.reset();
        self.dist[src] = w[src];
        self.touched.push(src as u32);
        self.heap.push(w[src], src as u32);
        while let Some((d, u)) = self.heap.pop() {
            let ui = u as usize;
            if self.settled[ui] || d > self.dist[ui] {
                continue;
            }
            self.settled[ui] = true;
            if ui == dst {
                break;
            }
            let (ux, uy) = (ui % n, ui / n);
            for &dir in &opts.neighbor_order {
                let vi = match dir {
                    0 if ux + 1 < n => ui + 1,
                    1 if uy + 1 < n => ui + n,
                    2 if ux > 0 => ui - 1,
                    3 if uy > 0 => ui - n,
                    _ => continue,
                };
                if self.settled[vi] {
                    continue;
                }
                let nd = d + w[vi];
                let old = self.dist[vi];
                if nd < old {
                    if old == f64::INFINITY {
                        self.touched.push(vi as u32);
                    }
                    self.dist[vi] = nd;
                    self.pred[vi] = u;
                    self.heap.push(nd, vi as u32);
                } else if nd == old {
                    let cur = self.vertex(self.pred[vi]);
                    let cand = self.vertex(u);
                    let better = match opts.tie_break {
                        TieBreak::SmallestPredecessor => cand < cur,
                        TieBreak::LargestPredecessor => cand > cur,
                    };
                    if better {
                        self.pred[vi] = u;
                    }
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = dst as u32;
        while cur != NONE {
            path.push(self.vertex(cur));
            if cur as usize == src {
                break;
            }
            cur = self.pred[cur as usize];
        }
        path.reverse();
        let weight = weights.path_weight(&path)?;
        Ok(GeodesicResult {
            from: x,
            to: y,
            cardinality: path.len(),
            path,
            weight,
            displacement: x.l2(y),
        })
    }

    /// Tentative cost of the last search at `v` (the exact distance if `v`
    /// was settled).
    pub fn accumulated(&self, v: Vertex) -> f64 {
        if v.x < 0 || v.y < 0 || v.x as usize >= self.n || v.y as usize >= self.n {
            return f64::INFINITY;
        }
        self.dist[v.y as usize * self.n + v.x as usize]
    }
}

/// The LFPP geodesic between `x` and `y` with default tie-breaking.
pub fn lfpp_distance(weights: &WeightField, x: Vertex, y: Vertex) -> Result<GeodesicResult> {
    Dijkstra::new(weights.n()).run(weights, x, y, DijkstraOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_pops_in_order() {
        let mut h = QuadHeap::new();
        let keys = [5.0, 1.0, 4.0, 1.0, 9.0, 2.0, 6.0, 0.5, 3.0];
        for (i, k) in keys.iter().enumerate() {
            h.push(*k, i as u32);
        }
        let mut out = Vec::new();
        while let Some((k, _)) = h.pop() {
            out.push(k);
        }
        let mut sorted = keys.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(out, sorted);
    }

    #[test]
    fn single_vertex_and_straight_line() {
        let w = WeightField::uniform(8).unwrap();
        let r = lfpp_distance(&w, Vertex::new(2, 2), Vertex::new(2, 2)).unwrap();
        assert_eq!(r.path, vec![Vertex::new(2, 2)]);
        assert_eq!(r.weight, 1.0);
        let r = lfpp_distance(&w, Vertex::new(0, 0), Vertex::new(3, 0)).unwrap();
        assert_eq!(r.weight, 4.0);
        assert_eq!(r.cardinality, 4);
    }

    #[test]
    fn outside_endpoints_are_rejected() {
        let w = WeightField::uniform(4).unwrap();
        assert!(lfpp_distance(&w, Vertex::new(0, 0), Vertex::new(4, 0)).is_err());
    }

    #[test]
    fn workspace_reuse_matches_fresh_runs() {
        let eta: Vec<f64> = (0..144).map(|i| ((i * 7919) % 101) as f64 / 50.0 - 1.0).collect();
        let w = WeightField::from_values(12, 1.0, &eta).unwrap();
        let mut d = Dijkstra::new(12);
        for (a, b) in [((0, 0), (11, 11)), ((3, 9), (10, 1)), ((5, 5), (0, 11))] {
            let (x, y) = (Vertex::new(a.0, a.1), Vertex::new(b.0, b.1));
            let r = d.run(&w, x, y, DijkstraOptions::default()).unwrap();
            assert_eq!(r, lfpp_distance(&w, x, y).unwrap());
        }
    }
}
