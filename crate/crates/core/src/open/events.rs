//! Good points, the desk-scale events E1–E3, and the open-fraction tail.

use serde::{Deserialize, Serialize};

use super::labels::{OpenConfig, GOOD_POINT_CAP};
use crate::dgff::checks::C1;
use crate::dgff::{FieldSample, MultiscaleDecomposer, MultiscaleView, Sampler};
use crate::error::{config, domain, Result};
use crate::exec::Exec;
use crate::hierarchy::classes::{in_scale_class, tame_verdict};
use crate::hierarchy::extract::{level0_span, tame_span};
use crate::hierarchy::{HierarchyParams, LatticePath};
use crate::lattice::{BoxGeometry, Vertex};
use crate::stats::{linear_fit, LinearFit};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodPoints {
    /// `15 √δ log N`.
    pub threshold: f64,
    /// Lattice points of `P` with `η(z) ≥ −threshold`.
    pub count: usize,
    /// Lattice points of `P` with `η(z) ≤ threshold`.
    pub companion: usize,
    pub total: usize,
}

/// Counts lattice points of `P` whose field value stays inside the
/// `±15 √δ log N` band, one side at a time.
pub fn good_points(field: &FieldSample, path: &LatticePath, delta: f64, n: usize) -> Result<GoodPoints> {
    let threshold = GOOD_POINT_CAP * delta.sqrt() * (n as f64).ln();
    let pts = path.lattice_points();
    if let Some(v) = pts.iter().find(|v| !field.geometry.contains(**v)) {
        return domain(format!("path point ({}, {}) lies outside the field domain", v.x, v.y));
    }
    let vals: Vec<f64> = pts.iter().map(|v| field.value(*v)).collect();
    Ok(GoodPoints {
        threshold,
        count: vals.iter().filter(|&&v| v >= -threshold).count(),
        companion: vals.iter().filter(|&&v| v <= threshold).count(),
        total: pts.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct E2Report {
    /// Largest number of levels in a subset, `⌊8δm⌋`.
    pub levels: usize,
    /// `√(320 C₁ δ) log N`.
    pub bound: f64,
    /// Largest subset sum over all tracked points.
    pub max_sum: f64,
    pub argmax: Option<Vertex>,
    pub holds: bool,
}

/// Largest sum of at most `r` of the values, taking only positive ones.
pub fn greedy_top_sum(values: &[f64], r: usize) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| *x > 0.0).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    v.iter().take(r).fold(0.0, |a, x| a + x)
}

/// For each tracked point the worst subset of at most `8δm` levels is the
/// greedy top-`r` choice, so the maximum over subsets is exact.
pub fn e2_report(view: &MultiscaleView, delta: f64, n: usize) -> E2Report {
    let m = view.params().m;
    let levels = (8.0 * delta * m as f64).floor() as usize;
    let bound = (320.0 * C1 * delta).sqrt() * (n as f64).ln();
    let mut best = (0.0, None);
    for (p, v) in view.points().iter().enumerate() {
        let vals: Vec<f64> = (0..m).map(|j| view.eta(j, p)).collect();
        let s = greedy_top_sum(&vals, levels);
        if best.1.is_none() || s > best.0 {
            best = (s, Some(*v));
        }
    }
    E2Report {
        levels,
        bound,
        max_sum: best.0,
        argmax: best.1,
        holds: best.0 <= bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct E3Report {
    pub max_tail: f64,
    /// `ε log N`.
    pub bound: f64,
    pub holds: bool,
}

/// `max_{V_N} H_{K^m}` against `ε log N`.
pub fn e3_report(decomposer: &MultiscaleDecomposer, field: &FieldSample, eps: f64) -> Result<E3Report> {
    let n = decomposer.params().n;
    let tails = decomposer.tail_over(field, &BoxGeometry::v_n(n)?)?;
    let max_tail = tails.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = eps * (n as f64).ln();
    Ok(E3Report {
        max_tail,
        bound,
        holds: max_tail <= bound,
    })
}

/// `max_{z ∈ B} (η_j(z) − η_j(l_B))` for the box `corner + [0, K^j)²`, `l_B`
/// being its lower-left corner.
pub fn box_oscillation(view: &MultiscaleView, j: u32, corner: Vertex) -> Option<f64> {
    let side = view.params().scale(j) as i64;
    let base = view.eta_at(j, corner)?;
    let mut best = f64::NEG_INFINITY;
    for dx in 0..side {
        for dy in 0..side {
            best = best.max(view.eta_at(j, Vertex::new(corner.x + dx, corner.y + dy))? - base);
        }
    }
    Some(best)
}

/// Lattice points of a box of side `K^j`.
pub fn box_points(corner: Vertex, side: usize) -> Vec<Vertex> {
    let s = side as i64;
    (0..s)
        .flat_map(|dx| (0..s).map(move |dy| Vertex::new(corner.x + dx, corner.y + dy)))
        .collect()
}

/// A fixed family of tame paths in `SL_j` with their children's lattice
/// points, ready for repeated open counting.
#[derive(Clone, Debug)]
pub struct OpenFamily {
    j: u32,
    /// Per path, per child, the child's lattice points.
    children: Vec<Vec<Vec<Vertex>>>,
    points: Vec<Vertex>,
}

impl OpenFamily {
    pub fn new(paths: &[LatticePath], j: u32, params: &HierarchyParams) -> Result<Self> {
        if paths.is_empty() {
            return config("the path family is empty");
        }
        if j == 0 || j >= params.m() {
            return domain(format!("tame families live in levels 1..{}, got {j}", params.m()));
        }
        let mut children = Vec::with_capacity(paths.len());
        let mut points = Vec::new();
        for (i, p) in paths.iter().enumerate() {
            if !in_scale_class(p, p.full(), j, params) || !tame_verdict(p, p.full(), j - 1, params.big_k()).tame {
                return domain(format!("family path {i} is not a tame path of scale class {j}"));
            }
            let ex = if j == 1 {
                level0_span(p, p.full()).into_checked()?
            } else {
                tame_span(p, p.full(), j - 1, params)?.into_checked()?
            };
            let kids: Vec<Vec<Vertex>> = if j == 1 {
                ex.leaves.iter().map(|v| vec![*v]).collect()
            } else {
                ex.spans
                    .iter()
                    .map(|s| p.span_lattice_points(*s).into_iter().map(|q| q.1).collect())
                    .collect()
            };
            points.extend(kids.iter().flatten().copied());
            children.push(kids);
        }
        points.sort_unstable();
        points.dedup();
        Ok(Self { j, children, points })
    }

    pub fn len(&self) -> usize {
        self.children.len()
    }

    pub fn is_empty(&self) -> bool {
        self.children.is_empty()
    }

    pub fn points(&self) -> &[Vertex] {
        &self.points
    }

    /// `max_P Δ_P` over the family; children read `η_{j−1}`.
    pub fn max_delta(&self, view: &MultiscaleView, cfg: &OpenConfig) -> Result<f64> {
        let level = self.j - 1;
        let t = cfg.threshold(view.params().k);
        let mut best: f64 = 0.0;
        for kids in &self.children {
            let mut open = 0usize;
            for pts in kids {
                let mut flag = false;
                for z in pts {
                    let Some(v) = view.eta_at(level, *z) else {
                        return domain(format!("no field data at ({}, {})", z.x, z.y));
                    };
                    flag |= v >= t;
                }
                open += usize::from(flag);
            }
            best = best.max(open as f64 / kids.len() as f64);
        }
        Ok(best)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenTailReport {
    pub j: u32,
    pub family: usize,
    pub samples: usize,
    pub deltas: Vec<f64>,
    /// Estimated `P(max_P Δ_P ≥ δ)` per grid value.
    pub tail: Vec<f64>,
    /// Fit of `log tail` against `δ²` over grid values with positive tail.
    pub fit: Option<LinearFit>,
    /// `−slope / (ε k)²`.
    pub c7: Option<f64>,
}

/// Tail estimate from precomputed maxima.
pub fn open_tail(maxima: &[f64], deltas: &[f64], eps: f64, k: u32) -> (Vec<f64>, Option<LinearFit>, Option<f64>) {
    let n = maxima.len().max(1) as f64;
    let tail: Vec<f64> = deltas
        .iter()
        .map(|d| maxima.iter().filter(|&&m| m >= *d).count() as f64 / n)
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = deltas
        .iter()
        .zip(&tail)
        .filter(|(_, t)| **t > 0.0)
        .map(|(d, t)| (d * d, t.ln()))
        .unzip();
    if xs.len() < 2 {
        return (tail, None, None);
    }
    let fit = linear_fit(&xs, &ys);
    let scale = (eps * k as f64).powi(2);
    let c7 = (scale > 0.0).then(|| -fit.slope / scale);
    (tail, Some(fit), c7)
}

/// Monte Carlo estimate of `P(Δ_P ≥ δ for some P in the family)` over
/// fields on `V_{5N}`, one field per stream.
pub fn open_fraction_mc(
    family: &OpenFamily,
    params: &HierarchyParams,
    cfg: &OpenConfig,
    deltas: &[f64],
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<OpenTailReport> {
    if family.is_empty() {
        return config("the path family is empty");
    }
    let sampler = Sampler::auto(BoxGeometry::v_5n(params.n())?)?;
    let decomposer = MultiscaleDecomposer::new(params.scales)?;
    let maxima: Vec<Result<f64>> = exec.map(samples, |i| {
        let field = sampler.sample_stream(seed, i as u64);
        let view = decomposer.decompose(&field, family.points())?;
        family.max_delta(&view, cfg)
    });
    let maxima: Vec<f64> = maxima.into_iter().collect::<Result<_>>()?;
    let (tail, fit, c7) = open_tail(&maxima, deltas, cfg.eps, params.scales.k);
    Ok(OpenTailReport {
        j: family.j,
        family: family.len(),
        samples,
        deltas: deltas.to_vec(),
        tail,
        fit,
        c7,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::corpus::tame_paths_between;
    use crate::rng::stream_rng;
    use crate::scales::ScaleParams;

    #[test]
    fn greedy_is_best_subset() {
        let v = [0.3, -1.0, 2.0, 0.1];
        assert_eq!(greedy_top_sum(&v, 2), 2.3);
        assert_eq!(greedy_top_sum(&v, 0), 0.0);
        assert_eq!(greedy_top_sum(&[-1.0, -2.0], 2), 0.0);
    }

    #[test]
    fn zero_field_good_points() {
        let field = FieldSample::zeros(BoxGeometry::v_5n(16).unwrap(), 0);
        let p = LatticePath::from_vertices(&(0..10).map(|i| Vertex::new(i, 3)).collect::<Vec<_>>()).unwrap();
        let g = good_points(&field, &p, 0.04, 16).unwrap();
        assert_eq!((g.count, g.companion, g.total), (10, 10, 10));
    }

    #[test]
    fn degenerate_family_tail() {
        let sp = ScaleParams::new(64, 2, 3).unwrap();
        let params = HierarchyParams::new(sp, 0.5).unwrap();
        let mut rng = stream_rng(3, 0);
        let paths = tame_paths_between(Vertex::new(23, 32), Vertex::new(41, 32), 2, 5, &params, &mut rng);
        assert_eq!(paths.len(), 5);
        let fam = OpenFamily::new(&paths, 2, &params).unwrap();
        let cfg = OpenConfig::from_delta(0.04).unwrap();
        let zero = MultiscaleView::synthetic(sp, fam.points().to_vec(), |_, _| 0.0);
        assert_eq!(fam.max_delta(&zero, &cfg).unwrap(), 0.0);
        let (tail, _, _) = open_tail(&[0.0, 0.0], &[0.1, 0.5], cfg.eps, sp.k);
        assert_eq!(tail, vec![0.0, 0.0]);
        let (tail, _, _) = open_tail(&[1.0, 0.5], &[1.5], cfg.eps, sp.k);
        assert_eq!(tail, vec![0.0]);
        assert!(OpenFamily::new(&[], 2, &params).is_err());
    }
}
