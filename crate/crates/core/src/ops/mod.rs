//! Discrete Volterra operators I and J with product-integration weights.

mod apply;
mod grid;
mod weights;

pub use apply::{apply_i, apply_i_fn, apply_j, check_inversion, check_inversion_ij, cumulative};
pub use grid::{Grading, SampledSignal, TimeGrid, UniformTail, DEFAULT_GRADING_FLOOR};
pub use weights::{cell_moments, product_weights, CellKernel, IKernel, JKernel, ProductRule, Rule};
