//! Dynamic radiance fields stored as wavelet coefficients.
//!
//! Six 2-D coefficient pyramids (three in static mode) are reconstructed by
//! an inverse DWT into coarse and fine feature planes. Samples are projected
//! onto the planes, bilinearly interpolated, fused, decoded with a learned
//! color basis and volume rendered. After training, coefficients are hard
//! thresholded and stored as sparse maps inside a losslessly compressed
//! container.

pub mod codec;
pub mod config;
pub mod data;
pub mod error;
pub mod field;
pub mod optim;
pub mod render;
pub mod wavelets;

pub use error::{Result, WavePlanesError};
