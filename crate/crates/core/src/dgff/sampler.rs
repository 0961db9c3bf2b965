//! Exact samplers for the Dirichlet DGFF on a box.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::banded::BandCholesky;
use super::dst::DirichletSolver;
use crate::error::{LfppError, Result};
use crate::lattice::{BoxGeometry, Vertex};
use crate::rng::stream_rng;

/// Bumped whenever the mapping from `(geometry, seed)` to values changes.
pub const SAMPLER_VERSION: u32 = 1;

/// Largest side the banded factorisation backend accepts.
pub const BANDED_SIDE_LIMIT: usize = 257;
/// Largest side the spectral backend accepts.
pub const SPECTRAL_SIDE_LIMIT: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Backend {
    /// Cholesky factor of the precision matrix `I − P`; `η = L^{-T} ξ`.
    Banded,
    /// Sine-basis diagonalisation; `η = S Λ^{-1/2} ξ`.
    Spectral,
}

impl Backend {
    /// Banded up to side 65, spectral above.
    pub fn auto(side: usize) -> Self {
        if side <= 65 {
            Backend::Banded
        } else {
            Backend::Spectral
        }
    }

    pub fn limit(self) -> usize {
        match self {
            Backend::Banded => BANDED_SIDE_LIMIT,
            Backend::Spectral => SPECTRAL_SIDE_LIMIT,
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = LfppError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense" | "banded" => Ok(Backend::Banded),
            "spectral" => Ok(Backend::Spectral),
            other => Err(LfppError::Config(format!("unknown backend {other:?}"))),
        }
    }
}

/// One realisation of the DGFF on a box.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub geometry: BoxGeometry,
    /// Row-major (y-major, x-minor) over the whole box; zero on the boundary.
    pub values: Vec<f64>,
    pub seed: u64,
}

impl FieldSample {
    pub fn zeros(geometry: BoxGeometry, seed: u64) -> Self {
        Self {
            values: vec![0.0; geometry.len()],
            geometry,
            seed,
        }
    }

    /// Field value; zero outside the box.
    pub fn value(&self, v: Vertex) -> f64 {
        self.geometry.index(v).map_or(0.0, |i| self.values[i])
    }

    pub fn interior_values(&self) -> Vec<f64> {
        self.geometry.interior().map(|v| self.value(v)).collect()
    }

    fn from_interior(geometry: BoxGeometry, interior: &[f64], seed: u64) -> Self {
        let mut values = vec![0.0; geometry.len()];
        let n = geometry.interior_side();
        let s = geometry.side;
        for y in 0..n {
            values[(y + 1) * s + 1..(y + 1) * s + 1 + n].copy_from_slice(&interior[y * n..(y + 1) * n]);
        }
        Self { geometry, values, seed }
    }
}

enum Engine {
    Banded(BandCholesky),
    Spectral { solver: DirichletSolver, inv_sqrt: Vec<f64> },
}

/// A reusable sampler for one geometry. Immutable and shareable.
pub struct Sampler {
    geometry: BoxGeometry,
    backend: Backend,
    engine: Engine,
}

impl Sampler {
    pub fn new(geometry: BoxGeometry, backend: Backend) -> Result<Self> {
        if geometry.side > backend.limit() {
            return Err(LfppError::Capacity {
                what: format!("{backend:?} sampler for side {}", geometry.side),
                limit: backend.limit(),
            });
        }
        let n = geometry.interior_side();
        let engine = match backend {
            Backend::Banded => Engine::Banded(BandCholesky::walk_operator(n)?),
            Backend::Spectral => {
                let solver = DirichletSolver::new(n);
                let inv_sqrt = solver.eigenvalues().iter().map(|l| l.sqrt().recip()).collect();
                Engine::Spectral { solver, inv_sqrt }
            }
        };
        Ok(Self { geometry, backend, engine })
    }

    pub fn auto(geometry: BoxGeometry) -> Result<Self> {
        Self::new(geometry, Backend::auto(geometry.side))
    }

    pub fn geometry(&self) -> &BoxGeometry {
        &self.geometry
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Draws interior values (row-major by interior index) from `rng`.
    pub fn sample_interior<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.geometry.interior_len());
        for v in out.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        match &self.engine {
            Engine::Banded(chol) => chol.backward(out),
            Engine::Spectral { solver, inv_sqrt } => {
                for (v, s) in out.iter_mut().zip(inv_sqrt) {
                    *v *= s;
                }
                solver.transform().transform_2d(out);
            }
        }
    }

    /// Sample `stream` of the run keyed by `seed`.
    pub fn sample_stream(&self, seed: u64, stream: u64) -> FieldSample {
        let mut rng = stream_rng(seed, stream);
        let mut interior = vec![0.0; self.geometry.interior_len()];
        self.sample_interior(&mut rng, &mut interior);
        FieldSample::from_interior(self.geometry, &interior, seed)
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        self.sample_stream(seed, 0)
    }
}

/// Samples the DGFF on `geometry` with the automatically chosen backend.
pub fn sample_dgff(geometry: BoxGeometry, seed: u64) -> Result<FieldSample> {
    Ok(Sampler::auto(geometry)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_zero_and_runs_reproduce() {
        let b = BoxGeometry::new(Vertex::new(-4, 3), 12).unwrap();
        for backend in [Backend::Banded, Backend::Spectral] {
            let s = Sampler::new(b, backend).unwrap();
            let f = s.sample(42);
            assert!(b.boundary().all(|v| f.value(v) == 0.0));
            assert!(b.interior().any(|v| f.value(v) != 0.0));
            assert_eq!(f, s.sample(42));
            assert_ne!(f.values, s.sample(43).values);
            assert_eq!(f.value(Vertex::new(100, 100)), 0.0);
        }
    }

    #[test]
    fn capacity_error_names_the_limit() {
        let b = BoxGeometry::new(Vertex::new(0, 0), 300).unwrap();
        match Sampler::new(b, Backend::Banded) {
            Err(LfppError::Capacity { limit, .. }) => assert_eq!(limit, BANDED_SIDE_LIMIT),
            _ => panic!("expected capacity error"),
        }
    }
}
