//! Harmonic extensions `H^B` of field data into a sub-box.

use super::dst::DirichletSolver;
use super::sampler::FieldSample;
use crate::error::{domain, LfppError, Result};
use crate::lattice::{BoxGeometry, Vertex};

/// Relative residual the Dirichlet solves must reach.
pub const HARMONIC_TOLERANCE: f64 = 1e-10;

/// `H^B` restricted to the sub-box `B`.
#[derive(Clone, Debug)]
pub struct HarmonicExtension {
    pub subbox: BoxGeometry,
    /// Row-major over `subbox`; equals the boundary data on `∂B`.
    pub values: Vec<f64>,
    /// Achieved `max|(I − P)u − f| / max(1, max|data|)`.
    pub relative_residual: f64,
}

impl HarmonicExtension {
    pub fn value(&self, v: Vertex) -> Option<f64> {
        self.subbox.index(v).map(|i| self.values[i])
    }

    /// `H^B` over the whole field domain: the field off `B`, the extension on it.
    pub fn full(&self, field: &FieldSample) -> Vec<f64> {
        let mut out = field.values.clone();
        for (i, v) in self.subbox.vertices().enumerate() {
            if let Some(j) = field.geometry.index(v) {
                out[j] = self.values[i];
            }
        }
        out
    }
}

/// Harmonic function on `subbox` taking the values `data(z)` on `∂subbox`.
pub fn dirichlet_extension(subbox: &BoxGeometry, data: impl Fn(Vertex) -> f64) -> Result<HarmonicExtension> {
    let solver = DirichletSolver::new(subbox.interior_side());
    dirichlet_extension_with(&solver, subbox, data)
}

/// As [`dirichlet_extension`] with a caller-supplied solver of matching size.
pub fn dirichlet_extension_with(solver: &DirichletSolver, subbox: &BoxGeometry, data: impl Fn(Vertex) -> f64) -> Result<HarmonicExtension> {
    if subbox.side < 2 {
        return domain("harmonic extension needs a box of side ≥ 2");
    }
    let n = subbox.interior_side();
    if solver.n() != n {
        return Err(LfppError::Internal(format!("solver size {} for interior side {n}", solver.n())));
    }
    let mut values = vec![0.0; subbox.len()];
    let mut scale = 1.0f64;
    for (i, v) in subbox.vertices().enumerate() {
        if subbox.is_boundary(v) {
            values[i] = data(v);
            scale = scale.max(values[i].abs());
        }
    }
    if n == 0 {
        return Ok(HarmonicExtension {
            subbox: *subbox,
            values,
            relative_residual: 0.0,
        });
    }
    // (I − P) u = ¼ Σ boundary neighbours
    let mut rhs = vec![0.0; n * n];
    for (i, v) in subbox.interior().enumerate() {
        let mut s = 0.0;
        for w in v.neighbors() {
            if subbox.is_boundary(w) {
                s += values[subbox.index(w).unwrap()];
            }
        }
        rhs[i] = 0.25 * s;
    }
    let mut u = rhs.clone();
    solver.solve_in_place(&mut u);
    let mut residual = solver.residual(&u, &rhs) / scale;
    if residual > HARMONIC_TOLERANCE {
        // one round of iterative refinement
        let mut correction = residual_vector(&u, &rhs, n);
        solver.solve_in_place(&mut correction);
        u.iter_mut().zip(&correction).for_each(|(a, c)| *a += c);
        residual = solver.residual(&u, &rhs) / scale;
    }
    if residual > HARMONIC_TOLERANCE {
        return Err(LfppError::Internal(format!(
            "harmonic solve residual {residual:e} above {HARMONIC_TOLERANCE:e}"
        )));
    }
    for (i, v) in subbox.interior().enumerate() {
        values[subbox.index(v).unwrap()] = u[i];
    }
    Ok(HarmonicExtension {
        subbox: *subbox,
        values,
        relative_residual: residual,
    })
}

fn residual_vector(u: &[f64], f: &[f64], n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let mut s = 0.0;
            if x > 0 {
                s += u[y * n + x - 1];
            }
            if x + 1 < n {
                s += u[y * n + x + 1];
            }
            if y > 0 {
                s += u[(y - 1) * n + x];
            }
            if y + 1 < n {
                s += u[(y + 1) * n + x];
            }
            r[y * n + x] = f[y * n + x] - (u[y * n + x] - 0.25 * s);
        }
    }
    r
}

/// `H^B` for a field sample: equal to the field on `B^c ∪ ∂B`, harmonic inside.
pub fn harmonic_extension(field: &FieldSample, subbox: &BoxGeometry) -> Result<HarmonicExtension> {
    if !field.geometry.contains_box(subbox) {
        return domain(format!("sub-box {:?} not contained in field domain {:?}", subbox, field.geometry));
    }
    dirichlet_extension(subbox, |v| field.value(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgff::sampler::sample_dgff;

    #[test]
    fn constants_and_coordinates_are_reproduced() {
        let b = BoxGeometry::new(Vertex::new(-2, 5), 11).unwrap();
        let h = dirichlet_extension(&b, |_| 3.25).unwrap();
        assert!(h.values.iter().all(|v| (v - 3.25).abs() < 1e-12));
        let h = dirichlet_extension(&b, |v| v.x as f64).unwrap();
        for v in b.vertices() {
            assert!((h.value(v).unwrap() - v.x as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn subbox_must_fit() {
        let f = sample_dgff(BoxGeometry::new(Vertex::new(0, 0), 10).unwrap(), 1).unwrap();
        let outside = BoxGeometry::new(Vertex::new(5, 5), 8).unwrap();
        assert!(matches!(harmonic_extension(&f, &outside), Err(LfppError::Domain(_))));
        let inside = BoxGeometry::new(Vertex::new(2, 2), 5).unwrap();
        let h = harmonic_extension(&f, &inside).unwrap();
        assert!(h.relative_residual <= HARMONIC_TOLERANCE);
        let full = h.full(&f);
        assert_eq!(full[f.geometry.index(Vertex::new(0, 0)).unwrap()], f.value(Vertex::new(0, 0)));
        assert_eq!(full[f.geometry.index(Vertex::new(2, 4)).unwrap()], f.value(Vertex::new(2, 4)));
    }
}
