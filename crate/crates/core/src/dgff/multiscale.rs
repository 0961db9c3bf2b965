//! Multiscale decomposition of the field into dyadic harmonic increments.
//!
//! For a tracked vertex `x`, `H_{2^r}(x)` is the harmonic extension of the
//! field into `B_{2^r}(x)` evaluated at the centre, i.e. the field on
//! `∂B_{2^r}(x)` averaged against harmonic measure from `x`. The increments
//! are `X_0 = η − H_2`, `X_r = H_{2^r} − H_{2^{r+1}}`, grouped as
//! `η_j = Σ_{r=jk}^{(j+1)k−1} X_r`, so that `Σ_j η_j + H_{K^m} = η`.

use std::collections::HashMap;

use super::dst::DirichletSolver;
use super::sampler::FieldSample;
use crate::error::{domain, LfppError, Result};
use crate::lattice::{BoxGeometry, Vertex};
use crate::scales::ScaleParams;

/// Harmonic measure on `∂B_{2^r}(0)` seen from the centre, for `r = 1..=max_r`.
#[derive(Clone, Debug)]
pub struct CenterHarmonicMeasure {
    /// `levels[r-1]` lists `(offset, weight)` with non-zero weight.
    levels: Vec<Vec<(Vertex, f64)>>,
}

impl CenterHarmonicMeasure {
    pub fn new(max_r: u32) -> Result<Self> {
        let mut levels = Vec::with_capacity(max_r as usize);
        for r in 1..=max_r {
            let ell = 1usize << r;
            let b = BoxGeometry::centered(Vertex::new(0, 0), ell)?;
            let n = b.interior_side();
            let solver = DirichletSolver::new(n);
            let mut g = vec![0.0; n * n];
            g[b.interior_index(b.center()).unwrap()] = 1.0;
            solver.solve_in_place(&mut g);
            let mut entries = Vec::new();
            let mut total = 0.0;
            for z in b.boundary() {
                let w: f64 = z
                    .neighbors()
                    .iter()
                    .filter_map(|nb| b.interior_index(*nb))
                    .map(|i| 0.25 * g[i])
                    .sum();
                if w != 0.0 {
                    entries.push((z, w));
                    total += w;
                }
            }
            if (total - 1.0).abs() > 1e-10 {
                return Err(LfppError::Internal(format!("harmonic measure at r={r} sums to {total}")));
            }
            levels.push(entries);
        }
        Ok(Self { levels })
    }

    pub fn max_r(&self) -> u32 {
        self.levels.len() as u32
    }

    pub fn weights(&self, r: u32) -> &[(Vertex, f64)] {
        &self.levels[r as usize - 1]
    }

    /// `H_{2^r}(x)` for a field sample.
    pub fn evaluate(&self, field: &FieldSample, x: Vertex, r: u32) -> f64 {
        self.weights(r)
            .iter()
            .map(|(z, w)| w * field.value(Vertex::new(x.x + z.x, x.y + z.y)))
            .sum()
    }
}

/// Per-vertex decomposition `{X_r}`, `{η_j}`, `H_{K^m}` over a tracked set.
#[derive(Clone, Debug)]
pub struct MultiscaleView {
    params: ScaleParams,
    points: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    field: Vec<f64>,
    /// `x[r * P + p]`
    x: Vec<f64>,
    /// `eta[j * P + p]`
    eta: Vec<f64>,
    tail: Vec<f64>,
}

impl MultiscaleView {
    pub fn params(&self) -> &ScaleParams {
        &self.params
    }

    pub fn points(&self) -> &[Vertex] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, v: Vertex) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn covers(&self, v: Vertex) -> bool {
        self.index.contains_key(&v)
    }

    pub fn x_r(&self, r: u32, p: usize) -> f64 {
        self.x[r as usize * self.points.len() + p]
    }

    pub fn eta(&self, j: u32, p: usize) -> f64 {
        self.eta[j as usize * self.points.len() + p]
    }

    pub fn eta_at(&self, j: u32, v: Vertex) -> Option<f64> {
        self.position(v).map(|p| self.eta(j, p))
    }

    pub fn tail(&self, p: usize) -> f64 {
        self.tail[p]
    }

    pub fn field(&self, p: usize) -> f64 {
        self.field[p]
    }

    /// `max_x |Σ_j η_j(x) + H_{K^m}(x) − η(x)|`.
    pub fn telescoping_error(&self) -> f64 {
        (0..self.points.len())
            .map(|p| {
                let s: f64 = (0..self.params.m).map(|j| self.eta(j, p)).sum();
                (s + self.tail(p) - self.field(p)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// A view with prescribed `η_j` values and zero tail, for injecting
    /// synthetic fields. `X_{jk}` carries `η_j`; the other increments are 0.
    pub fn synthetic(params: ScaleParams, points: Vec<Vertex>, eta: impl Fn(u32, Vertex) -> f64) -> Self {
        let np = points.len();
        let levels = params.dyadic_levels() as usize;
        let mut x = vec![0.0; levels * np];
        let mut e = vec![0.0; params.m as usize * np];
        let mut field = vec![0.0; np];
        for (p, v) in points.iter().enumerate() {
            for j in 0..params.m {
                let val = eta(j, *v);
                e[j as usize * np + p] = val;
                x[(j * params.k) as usize * np + p] = val;
                field[p] += val;
            }
        }
        let index = points.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Self {
            params,
            points,
            index,
            field,
            x,
            eta: e,
            tail: vec![0.0; np],
        }
    }
}

/// Reusable decomposer holding the harmonic-measure tables for one `(K, m)`.
#[derive(Clone, Debug)]
pub struct MultiscaleDecomposer {
    params: ScaleParams,
    measure: CenterHarmonicMeasure,
}

impl MultiscaleDecomposer {
    pub fn new(params: ScaleParams) -> Result<Self> {
        Ok(Self {
            measure: CenterHarmonicMeasure::new(params.dyadic_levels())?,
            params,
        })
    }

    pub fn params(&self) -> &ScaleParams {
        &self.params
    }

    pub fn measure(&self) -> &CenterHarmonicMeasure {
        &self.measure
    }

    /// Checks that `B_{K^m}(x)` fits in the field domain for every point.
    fn check_coverage(&self, field: &FieldSample, points: &[Vertex]) -> Result<()> {
        let ell = self.params.top_box();
        let bad: Vec<Vertex> = points
            .iter()
            .copied()
            .filter(|x| {
                BoxGeometry::centered(*x, ell)
                    .map(|b| !field.geometry.contains_box(&b))
                    .unwrap_or(true)
            })
            .take(8)
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            domain(format!("B_{ell}(x) leaves the field domain for points {bad:?}"))
        }
    }

    pub fn decompose(&self, field: &FieldSample, points: &[Vertex]) -> Result<MultiscaleView> {
        self.check_coverage(field, points)?;
        let np = points.len();
        let mk = self.params.dyadic_levels();
        let k = self.params.k;
        let mut x = vec![0.0; mk as usize * np];
        let mut eta = vec![0.0; self.params.m as usize * np];
        let mut tail = vec![0.0; np];
        let mut values = vec![0.0; np];
        let mut h = vec![0.0; mk as usize + 1];
        for (p, v) in points.iter().enumerate() {
            let f = field.value(*v);
            values[p] = f;
            h[0] = f;
            for r in 1..=mk {
                h[r as usize] = self.measure.evaluate(field, *v, r);
            }
            for r in 0..mk {
                x[r as usize * np + p] = h[r as usize] - h[r as usize + 1];
            }
            for j in 0..self.params.m {
                let s: f64 = (j * k..(j + 1) * k).map(|r| x[r as usize * np + p]).sum();
                eta[j as usize * np + p] = s;
            }
            tail[p] = h[mk as usize];
        }
        let index = points.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Ok(MultiscaleView {
            params: self.params,
            points: points.to_vec(),
            index,
            field: values,
            x,
            eta,
            tail,
        })
    }

    /// `H_{K^m}(u)` for every `u` in `region`.
    pub fn tail_over(&self, field: &FieldSample, region: &BoxGeometry) -> Result<Vec<f64>> {
        let pts: Vec<Vertex> = region.vertices().collect();
        self.check_coverage(field, &pts)?;
        let r = self.params.dyadic_levels();
        Ok(pts.iter().map(|v| self.measure.evaluate(field, *v, r)).collect())
    }
}

/// One-shot decomposition of `field` (on `V_{5N}`) at `points ⊆ V_N`.
pub fn multiscale_decompose(field: &FieldSample, points: &[Vertex], params: ScaleParams) -> Result<MultiscaleView> {
    MultiscaleDecomposer::new(params)?.decompose(field, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgff::harmonic::harmonic_extension;
    use crate::dgff::sampler::sample_dgff;

    #[test]
    fn center_value_matches_full_harmonic_extension() {
        let field = sample_dgff(BoxGeometry::v_5n(16).unwrap(), 3).unwrap();
        let table = CenterHarmonicMeasure::new(4).unwrap();
        let x = Vertex::new(5, 9);
        for r in 1..=4u32 {
            let b = BoxGeometry::centered(x, 1 << r).unwrap();
            let h = harmonic_extension(&field, &b).unwrap();
            let want = h.value(x).unwrap();
            assert!((table.evaluate(&field, x, r) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn telescoping_identity() {
        let params = ScaleParams::new(16, 2, 2).unwrap();
        let field = sample_dgff(BoxGeometry::v_5n(16).unwrap(), 11).unwrap();
        let pts: Vec<Vertex> = BoxGeometry::v_n(16).unwrap().vertices().collect();
        let view = multiscale_decompose(&field, &pts, params).unwrap();
        assert!(view.telescoping_error() < 1e-8);
        for p in [0, 17, 255] {
            for j in 0..2 {
                let s: f64 = (2 * j..2 * j + 2).map(|r| view.x_r(r, p)).sum();
                assert_eq!(s, view.eta(j, p));
            }
        }
    }

    #[test]
    fn uncovered_points_are_rejected() {
        let params = ScaleParams::new(16, 2, 2).unwrap();
        let field = sample_dgff(BoxGeometry::v_n(16).unwrap(), 1).unwrap();
        let err = multiscale_decompose(&field, &[Vertex::new(1, 1)], params).unwrap_err();
        assert!(matches!(err, LfppError::Domain(_)));
    }
}
