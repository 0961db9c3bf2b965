//! Multiscale decomposition of lattice paths into trees of subpaths.

pub mod classes;
pub mod corpus;
pub mod extract;
pub mod geometry;
pub mod path;
pub mod tree;

pub use classes::{classify_tame, in_scale_class, HierarchyParams, TameVerdict};
pub use extract::{extract_level0, extract_tame, extract_top, extract_untame, Extraction, ExtractionKind, StopReason};
pub use geometry::{BoxGrid, BoxIndex, Ellipse};
pub use path::{first_exit, LatticePath, Point, Span};
pub use tree::{build_tree, leaf_flow_bound, tree_violations, uniform_flow, untame_flow, untame_flow_exact, PathTree, TreeNode};
