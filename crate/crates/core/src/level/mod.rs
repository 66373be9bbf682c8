//! Sampling, labeling and percolation analysis of level sets `{V < ε}` and
//! `{V ≥ ε}` on uniform grids.

pub mod grid;
pub mod label;
pub mod oracle;
pub mod percolation;
pub mod scan;

pub use grid::{sample_grid, Boundary, GridField, Window};
pub use label::{component_diameter, label_components, LevelComponent, Sign};
pub use percolation::{
    estimate_epsilon_nm, percolation_class, PercolationClass, ThresholdEstimate,
};
pub use scan::{max_closed_diameter, scan_window, ClosedStats, LevelScanner};
