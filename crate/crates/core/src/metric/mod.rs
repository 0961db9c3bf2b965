//! Liouville first passage percolation on `V_N`.

pub mod brute;
pub mod dijkstra;
pub mod scan;
pub mod weights;

pub use brute::brute_force_distance;
pub use dijkstra::{lfpp_distance, Dijkstra, DijkstraOptions, GeodesicResult, TieBreak};
pub use scan::{geodesic_scan, sample_endpoints, ScanConfig, ScanReport, ScanTrial};
pub use weights::WeightField;
