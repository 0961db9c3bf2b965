//! Liouville first passage percolation on the discrete Gaussian free field:
//! field sampling, geodesics, path hierarchies and open-box analysis.

pub mod campaign;
pub mod dgff;
pub mod error;
pub mod exec;
pub mod hierarchy;
pub mod io;
pub mod lattice;
pub mod metric;
pub mod open;
pub mod rng;
pub mod scales;
pub mod stats;

pub use error::{LfppError, Result};
pub use exec::Exec;
pub use lattice::{BoxGeometry, Vertex};
pub use scales::ScaleParams;
