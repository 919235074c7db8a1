//! Periodized multi-level 2-D discrete wavelet transform over multi-channel
//! grids.
//!
//! The inverse transform is the only one the model uses at run time; the
//! forward transform exists for initialization, oracles and tests. Both are
//! linear, and [`idwt2_vjp`] applies the exact transpose of [`idwt2`] so that
//! feature-plane gradients can be pulled back onto the coefficients.

mod filters;
mod pyramid;
mod transform;

pub use filters::{FilterBank, WaveletFamily};
pub use pyramid::{CoefficientPyramid, Grid, PyramidShape, Subband};
pub use transform::{dwt2, idwt2, idwt2_vjp};
