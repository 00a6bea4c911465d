//! Scalp topographic images: azimuthal equidistant electrode projection,
//! cubic RBF interpolation onto a 32x32 grid, and the inverse mapping from
//! pixel importance back to electrodes.

mod layout;
mod pgm;
mod rbf;
mod render;

pub use layout::{project, Electrode, ElectrodeLayout, HEAD_SCALE};
pub use pgm::write_pgm;
pub use rbf::{fit_rbf, RbfInterpolant, RbfSystem};
pub use render::{
    grid_index, head_mask, pixel_center, pixels_to_channels, render, voronoi_assignment,
    TopoImage, TopoRenderer, GRID,
};
