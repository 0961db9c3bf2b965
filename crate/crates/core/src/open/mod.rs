//! Open labels, flow functionals and the desk-scale event statistics.

pub mod events;
pub mod labels;

pub use events::{
    box_oscillation, e2_report, e3_report, good_points, open_fraction_mc, E2Report, E3Report, GoodPoints, OpenFamily, OpenTailReport,
};
pub use labels::{heavy_mass, label_open, tree_points, y_flow, y_flow_exact, y_recursion_failures, HeavyReport, NodeLabels, OpenConfig};
