//! Liouville vertex weights `w(v) = exp(γ η(v))` on `V_N`.

use serde::Serialize;

use crate::dgff::FieldSample;
use crate::error::{domain, Result};
use crate::lattice::{BoxGeometry, Vertex};

#[derive(Clone, Debug, Serialize)]
pub struct WeightField {
    geometry: BoxGeometry,
    gamma: f64,
    /// Row-major over `V_N`.
    weights: Vec<f64>,
}

impl WeightField {
    /// Weights on `V_N` from a field sampled on a box containing it.
    pub fn from_field(field: &FieldSample, n: usize, gamma: f64) -> Result<Self> {
        let geometry = BoxGeometry::v_n(n)?;
        if !field.geometry.contains_box(&geometry) {
            return domain(format!("field domain does not contain V_{n}"));
        }
        let eta: Vec<f64> = geometry.vertices().map(|v| field.value(v)).collect();
        Self::from_values(n, gamma, &eta)
    }

    /// Weights from field values given row-major on `V_N`.
    pub fn from_values(n: usize, gamma: f64, eta: &[f64]) -> Result<Self> {
        let geometry = BoxGeometry::v_n(n)?;
        if eta.len() != geometry.len() {
            return domain(format!("expected {} field values, got {}", geometry.len(), eta.len()));
        }
        if !gamma.is_finite() || gamma < 0.0 {
            return domain(format!("gamma must be finite and non-negative, got {gamma}"));
        }
        let weights: Vec<f64> = eta.iter().map(|e| (gamma * e).exp()).collect();
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return domain(format!("weight at {} is not positive and finite", geometry.vertex(i)));
        }
        Ok(Self { geometry, gamma, weights })
    }

    /// All weights one.
    pub fn uniform(n: usize) -> Result<Self> {
        let geometry = BoxGeometry::v_n(n)?;
        Ok(Self {
            weights: vec![1.0; geometry.len()],
            geometry,
            gamma: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.geometry.side
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, v: Vertex) -> Option<f64> {
        self.geometry.index(v).map(|i| self.weights[i])
    }

    /// Weights multiplied by `factor`; the image of adding `log(factor)/γ` to the field.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            geometry: self.geometry,
            gamma: self.gamma,
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// `w(P)` for a vertex sequence, summed in increasing index order so the
    /// value does not depend on traversal direction.
    pub fn path_weight(&self, path: &[Vertex]) -> Result<f64> {
        let mut idx = Vec::with_capacity(path.len());
        for v in path {
            match self.geometry.index(*v) {
                Some(i) => idx.push(i),
                None => return domain(format!("vertex {v} outside V_{}", self.n())),
            }
        }
        idx.sort_unstable();
        Ok(neumaier(idx.iter().map(|&i| self.weights[i])))
    }
}

/// Compensated summation.
pub(crate) fn neumaier(xs: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gamma_gives_unit_weights() {
        let w = WeightField::from_values(4, 0.0, &[3.0; 16]).unwrap();
        assert!(w.as_slice().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn path_weight_is_order_free() {
        let eta: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        let w = WeightField::from_values(4, 0.7, &eta).unwrap();
        let p = [Vertex::new(0, 0), Vertex::new(1, 0), Vertex::new(1, 1), Vertex::new(2, 1)];
        let mut q = p;
        q.reverse();
        assert_eq!(w.path_weight(&p).unwrap(), w.path_weight(&q).unwrap());
    }
}
