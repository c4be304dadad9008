//! Pseudospectra on rectangular grids: resolvent fields, level-set
//! contours, eigenvalue conditioning and the small-δ disk model.

mod conditioning;
mod contour;
mod field;
mod windows;

pub use conditioning::{asymptotic_disks, eigen_condition_numbers, Disk, EigConditioning};
pub use contour::{extract_contours, ContourSet};
pub use field::{delta0, resolvent_field, resolvent_field_with, GridSpec, PseudospectrumField, ResolventOperator};
pub use windows::{auto_contours, AutoContourOptions};
