//! Green function of simple random walk killed on the boundary of a box.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::banded::BandCholesky;
use super::potential::PotentialKernel;
use crate::error::{domain, LfppError, Result};
use crate::lattice::{BoxGeometry, Vertex};

/// Largest interior vertex count the dense oracle will hold (side 66).
pub const DENSE_ORACLE_LIMIT: usize = 64 * 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenMethod {
    /// Columns of `(I − P)^{-1}` from a direct solve.
    DenseSolve,
    /// Harmonic measure against the potential kernel.
    PotentialKernel,
}

/// Dense table of expected visit counts `G(x, y)` for a box.
#[derive(Clone, Debug)]
pub struct GreenOracle {
    geometry: BoxGeometry,
    method: GreenMethod,
    /// Interior × interior, row-major by interior index.
    matrix: Vec<f64>,
}

fn check_geometry(geometry: &BoxGeometry) -> Result<()> {
    if geometry.side < 3 {
        return domain(format!("Green oracle needs side ≥ 3, got {}", geometry.side));
    }
    if geometry.interior_len() > DENSE_ORACLE_LIMIT {
        return Err(LfppError::Capacity {
            what: format!(
                "dense Green oracle for side {} ({} interior vertices)",
                geometry.side,
                geometry.interior_len()
            ),
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    Ok(())
}

/// Builds the oracle by solving `(I − P) G = I` over the interior.
pub fn build_green_oracle(geometry: BoxGeometry) -> Result<GreenOracle> {
    GreenOracle::dense_solve(geometry)
}

impl GreenOracle {
    pub fn dense_solve(geometry: BoxGeometry) -> Result<Self> {
        check_geometry(&geometry)?;
        let n = geometry.interior_side();
        let size = n * n;
        let chol = BandCholesky::walk_operator(n)?;
        let mut matrix = vec![0.0; size * size];
        let mut col = vec![0.0; size];
        for j in 0..size {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            chol.solve(&mut col);
            for i in 0..size {
                matrix[i * size + j] = col[i];
            }
        }
        // Exact symmetry; the two triangles differ only by rounding.
        for i in 0..size {
            for j in i + 1..size {
                let s = 0.5 * (matrix[i * size + j] + matrix[j * size + i]);
                matrix[i * size + j] = s;
                matrix[j * size + i] = s;
            }
        }
        Ok(Self {
            geometry,
            method: GreenMethod::DenseSolve,
            matrix,
        })
    }

    /// `G(x,y) = Σ_{z∈∂B} P_x(S_τ = z) a(z − y) − a(x − y)`, with the
    /// harmonic measure obtained from a linear solve per boundary vertex.
    pub fn from_potential_kernel(geometry: BoxGeometry, kernel: &PotentialKernel) -> Result<Self> {
        check_geometry(&geometry)?;
        if (kernel.radius() as usize) < geometry.side {
            return domain(format!(
                "potential kernel radius {} too small for box side {}",
                kernel.radius(),
                geometry.side
            ));
        }
        let n = geometry.interior_side();
        let size = n * n;
        let chol = BandCholesky::walk_operator(n)?;
        let boundary: Vec<Vertex> = geometry.boundary().collect();
        // hm[b][x] = P_x(S_τ = boundary[b])
        let hm: Vec<Vec<f64>> = boundary
            .iter()
            .map(|z| {
                let mut rhs = vec![0.0; size];
                for w in z.neighbors() {
                    if let Some(i) = geometry.interior_index(w) {
                        rhs[i] += 0.25;
                    }
                }
                chol.solve(&mut rhs);
                rhs
            })
            .collect();
        let mut matrix = vec![0.0; size * size];
        for ix in 0..size {
            let x = geometry.interior_vertex(ix);
            for iy in 0..size {
                let y = geometry.interior_vertex(iy);
                let mut g = -kernel.value(Vertex::new(x.x - y.x, x.y - y.y));
                for (b, z) in boundary.iter().enumerate() {
                    g += hm[b][ix] * kernel.value(Vertex::new(z.x - y.x, z.y - y.y));
                }
                matrix[ix * size + iy] = g;
            }
        }
        Ok(Self {
            geometry,
            method: GreenMethod::PotentialKernel,
            matrix,
        })
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn method(&self) -> GreenMethod {
        self.method
    }

    pub fn interior_len(&self) -> usize {
        self.geometry.interior_len()
    }

    /// Interior block, row-major by interior index.
    pub fn interior_matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `G(x, y)`; zero when either vertex lies on the boundary.
    pub fn get(&self, x: Vertex, y: Vertex) -> Result<f64> {
        for v in [x, y] {
            if !self.geometry.contains(v) {
                return domain(format!("vertex {v} outside box {:?}", self.geometry));
            }
        }
        match (self.geometry.interior_index(x), self.geometry.interior_index(y)) {
            (Some(i), Some(j)) => Ok(self.matrix[i * self.interior_len() + j]),
            _ => Ok(0.0),
        }
    }

    /// `P_x(S_τ = z)` for `z ∈ ∂B`.
    pub fn harmonic_measure(&self, x: Vertex, z: Vertex) -> Result<f64> {
        if !self.geometry.is_boundary(z) {
            return domain(format!("{z} is not a boundary vertex"));
        }
        if self.geometry.is_boundary(x) {
            return Ok(if x == z { 1.0 } else { 0.0 });
        }
        let mut p = 0.0;
        for w in z.neighbors() {
            if self.geometry.is_interior(w) {
                p += 0.25 * self.get(x, w)?;
            }
        }
        Ok(p)
    }

    /// Smallest eigenvalue of the interior block.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.interior_len();
        let mat = DMatrix::from_row_slice(m, m, &self.matrix);
        SymmetricEigen::new(mat).eigenvalues.min()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = self.interior_len();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                worst = worst.max((self.matrix[i * m + j] - self.matrix[j * m + i]).abs());
            }
        }
        worst
    }
}

/// `G(x, y)` from the eigen-expansion of the box walk operator. `O(n²)` per
/// entry; independent of any linear solve.
pub fn spectral_green(geometry: &BoxGeometry, x: Vertex, y: Vertex) -> Result<f64> {
    for v in [x, y] {
        if !geometry.contains(v) {
            return domain(format!("vertex {v} outside box"));
        }
    }
    if !geometry.is_interior(x) || !geometry.is_interior(y) {
        return Ok(0.0);
    }
    let n = geometry.interior_side();
    let h = (n + 1) as f64;
    let (x1, x2) = ((x.x - geometry.origin.x) as f64, (x.y - geometry.origin.y) as f64);
    let (y1, y2) = ((y.x - geometry.origin.x) as f64, (y.y - geometry.origin.y) as f64);
    let cos: Vec<f64> = (1..=n).map(|a| (a as f64 * PI / h).cos()).collect();
    let sx: Vec<f64> = (1..=n)
        .map(|a| (a as f64 * PI * x1 / h).sin() * (a as f64 * PI * y1 / h).sin())
        .collect();
    let sy: Vec<f64> = (1..=n)
        .map(|b| (b as f64 * PI * x2 / h).sin() * (b as f64 * PI * y2 / h).sin())
        .collect();
    let mut g = 0.0;
    for b in 0..n {
        for a in 0..n {
            g += sx[a] * sy[b] / (1.0 - 0.5 * (cos[a] + cos[b]));
        }
    }
    Ok(g * 4.0 / (h * h))
}

/// `E η^B(x₀)²` at the centre of the box of side length `ell` (`ell + 1`
/// vertices per side), by the eigen-expansion.
pub fn center_variance(ell: usize) -> Result<f64> {
    let b = BoxGeometry::centered(Vertex::new(0, 0), ell)?;
    spectral_green(&b, b.center(), b.center())
}

/// `(2/π) log ℓ − (2/π) log 2 + (2γ̄ + log 8)/π`.
pub fn center_variance_formula(ell: f64) -> f64 {
    (2.0 / PI) * (ell.ln() - 2f64.ln()) + super::potential::kernel_constant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_by_three_has_unit_green() {
        let b = BoxGeometry::new(Vertex::new(0, 0), 3).unwrap();
        let g = build_green_oracle(b).unwrap();
        assert_eq!(g.get(Vertex::new(1, 1), Vertex::new(1, 1)).unwrap(), 1.0);
        assert_eq!(g.get(Vertex::new(0, 1), Vertex::new(1, 1)).unwrap(), 0.0);
    }

    #[test]
    fn rejects_out_of_box_and_tiny_boxes() {
        let b = BoxGeometry::new(Vertex::new(0, 0), 4).unwrap();
        let g = build_green_oracle(b).unwrap();
        assert!(matches!(g.get(Vertex::new(9, 0), Vertex::new(1, 1)), Err(LfppError::Domain(_))));
        assert!(build_green_oracle(BoxGeometry::new(Vertex::new(0, 0), 2).unwrap()).is_err());
        let huge = BoxGeometry::new(Vertex::new(0, 0), 200).unwrap();
        assert!(matches!(build_green_oracle(huge), Err(LfppError::Capacity { .. })));
    }

    #[test]
    fn dense_matches_spectral() {
        let b = BoxGeometry::new(Vertex::new(2, -1), 9).unwrap();
        let g = build_green_oracle(b).unwrap();
        for (x, y) in [((5, 3), (5, 3)), ((3, 0), (8, 5)), ((4, 4), (7, 1))] {
            let (x, y) = (Vertex::new(x.0, x.1), Vertex::new(y.0, y.1));
            let d = g.get(x, y).unwrap();
            let s = spectral_green(&b, x, y).unwrap();
            assert!((d - s).abs() < 1e-12, "{d} vs {s}");
        }
    }

    #[test]
    fn harmonic_measure_is_a_probability() {
        let b = BoxGeometry::new(Vertex::new(0, 0), 7).unwrap();
        let g = build_green_oracle(b).unwrap();
        let x = Vertex::new(2, 4);
        let total: f64 = b.boundary().map(|z| g.harmonic_measure(x, z).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
