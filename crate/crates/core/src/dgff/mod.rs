//! Discrete Gaussian free field with zero boundary on lattice boxes.

pub mod banded;
pub mod checks;
pub mod dst;
pub mod green;
pub mod harmonic;
pub mod multiscale;
pub mod potential;
pub mod sampler;

pub use green::{build_green_oracle, center_variance, center_variance_formula, GreenMethod, GreenOracle};
pub use harmonic::{harmonic_extension, HarmonicExtension};
pub use multiscale::{multiscale_decompose, MultiscaleDecomposer, MultiscaleView};
pub use potential::{potential_kernel_exact, PotentialKernel};
pub use sampler::{sample_dgff, Backend, FieldSample, Sampler, BANDED_SIDE_LIMIT};
