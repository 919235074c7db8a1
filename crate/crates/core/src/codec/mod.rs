//! Coefficient thresholding, sparse maps and the `WVPL` container.
//!
//! Container layout, all integers little-endian:
//!
//! ```text
//! "WVPL"            4 bytes, uncompressed
//! backend           1 byte: 0 raw, 1 gzip, 2 bzip2, 3 lzma
//! payload           compressed with the backend:
//!   version         u16
//!   config          see `write_config`
//!   decoder         u32 count, then count f32
//!   per plane       u32 entry count, then (u32 index, f32 value) ascending by index
//! ```
//!
//! Plane order follows the configuration; linear indices follow the pyramid
//! layout (father block, then mother levels coarse to fine, each channel
//! major with H, V, D subbands).

mod backend;
mod container;
mod sparse;

pub use backend::Backend;
pub use container::{
    bench_codec, compress_model, decompress_model, inspect, load_model, plane_stats, save_checkpoint, BenchRow,
    ModelInfo, PlaneStats, FORMAT_VERSION, MAGIC,
};
pub use sparse::{threshold_coeffs, threshold_pyramid, SparseCoeffMap};

/// Default hard threshold for compression.
pub const DEFAULT_THRESHOLD: f64 = 0.1;
