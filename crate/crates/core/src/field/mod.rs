//! The plane-factorized field: coefficient pyramids per plane, their
//! reconstruction into multi-scale feature planes, and fused sampling.

mod cache;
mod fusion;
mod sample;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WavePlanesError};
use crate::wavelets::{CoefficientPyramid, PyramidShape, WaveletFamily};

pub use cache::{reconstruct_plane, refresh_cache, FeaturePlaneCache};
pub use fusion::{fuse_hp, fuse_zam, fuse_zmm, hp_channel, zam_channel, zmm_channel};
pub use sample::{project, sample_bilinear, sample_field, BilinearTaps, FusedFeature};
pub(crate) use sample::{sample_field_backward, sample_field_into, PlaneCotangents};

/// Feature planes, named by the pair of coordinates they span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlaneId {
    XY,
    XZ,
    YZ,
    XT,
    YT,
    ZT,
}

impl PlaneId {
    pub const DYNAMIC: [PlaneId; 6] = [
        PlaneId::XY,
        PlaneId::XZ,
        PlaneId::YZ,
        PlaneId::XT,
        PlaneId::YT,
        PlaneId::ZT,
    ];
    pub const STATIC: [PlaneId; 3] = [PlaneId::XY, PlaneId::XZ, PlaneId::YZ];

    pub fn is_space_time(self) -> bool {
        matches!(self, PlaneId::XT | PlaneId::YT | PlaneId::ZT)
    }

    /// Indices into (x, y, z, t) of the coordinates mapped to the plane's
    /// columns and rows respectively.
    pub fn axes(self) -> (usize, usize) {
        match self {
            PlaneId::XY => (0, 1),
            PlaneId::XZ => (0, 2),
            PlaneId::YZ => (1, 2),
            PlaneId::XT => (0, 3),
            PlaneId::YT => (1, 3),
            PlaneId::ZT => (2, 3),
        }
    }

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::DYNAMIC.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PlaneId::XY => "xy",
            PlaneId::XZ => "xz",
            PlaneId::YZ => "yz",
            PlaneId::XT => "xt",
            PlaneId::YT => "yt",
            PlaneId::ZT => "zt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fusion {
    /// Elementwise product over every plane.
    Hp,
    /// Zero-agreement masked multiplication.
    Zmm,
    /// Zero-agreement masked addition.
    Zam,
}

impl Fusion {
    pub const ALL: [Fusion; 3] = [Fusion::Hp, Fusion::Zmm, Fusion::Zam];

    pub fn id(self) -> u8 {
        match self {
            Fusion::Hp => 0,
            Fusion::Zmm => 1,
            Fusion::Zam => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.id() == id)
    }
}

/// Axis-aligned scene bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Default for Aabb {
    fn default() -> Self {
        Aabb {
            min: [-1.5; 3],
            max: [1.5; 3],
        }
    }
}

/// A 4-D query position in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub t: f64,
}

impl SamplePoint {
    pub fn new(x: f64, y: f64, z: f64, t: f64) -> Self {
        SamplePoint { x, y, z, t }
    }
}

fn default_features() -> usize {
    16
}
fn default_levels() -> usize {
    2
}
fn default_spatial_res() -> usize {
    64
}
fn default_time_res() -> usize {
    16
}
fn default_scales() -> Vec<usize> {
    vec![1, 2]
}
fn default_family() -> WaveletFamily {
    WaveletFamily::Db2
}
fn default_fusion() -> Fusion {
    Fusion::Zmm
}
fn default_k() -> Vec<f64> {
    vec![1.0, 2.0 / 5.0, 1.0 / 5.0]
}
fn default_t_range() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_decoder_layers() -> usize {
    3
}
fn default_decoder_width() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Feature length per scale (B).
    #[serde(default = "default_features")]
    pub features: usize,
    /// Wavelet decomposition depth (N).
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Grid resolution along x, y and z.
    #[serde(default = "default_spatial_res")]
    pub spatial_res: usize,
    /// Grid resolution along t.
    #[serde(default = "default_time_res")]
    pub time_res: usize,
    /// Reconstruction levels used as feature scales; `levels` is full resolution.
    #[serde(default = "default_scales")]
    pub scales: Vec<usize>,
    #[serde(default = "default_family")]
    pub family: WaveletFamily,
    #[serde(default = "default_fusion")]
    pub fusion: Fusion,
    /// Per-level coefficient scaling: father first, then mother levels 1..N.
    #[serde(default = "default_k")]
    pub k: Vec<f64>,
    #[serde(default)]
    pub bbox: Aabb,
    #[serde(default = "default_t_range")]
    pub t_range: [f64; 2],
    /// Tri-plane model without time planes.
    #[serde(default)]
    pub static_mode: bool,
    /// Number of linear layers in the direction-to-basis network.
    #[serde(default = "default_decoder_layers")]
    pub decoder_layers: usize,
    #[serde(default = "default_decoder_width")]
    pub decoder_width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            features: default_features(),
            levels: default_levels(),
            spatial_res: default_spatial_res(),
            time_res: default_time_res(),
            scales: default_scales(),
            family: default_family(),
            fusion: default_fusion(),
            k: default_k(),
            bbox: Aabb::default(),
            t_range: default_t_range(),
            static_mode: false,
            decoder_layers: default_decoder_layers(),
            decoder_width: default_decoder_width(),
        }
    }
}

impl ModelConfig {
    /// Validates the configuration, rounding resolutions up to powers of two.
    pub fn validated(mut self) -> Result<Self> {
        let bad = |msg: String| Err(WavePlanesError::Config(msg));
        if self.features == 0 {
            return bad("features must be >= 1".into());
        }
        if self.levels == 0 || self.levels > 8 {
            return bad(format!("levels must be in 1..=8, got {}", self.levels));
        }
        let min_res = 2usize << self.levels;
        self.spatial_res = self.spatial_res.max(1).next_power_of_two().max(min_res);
        self.time_res = self.time_res.max(1).next_power_of_two().max(min_res);
        if self.scales.is_empty() {
            return bad("at least one scale is required".into());
        }
        self.scales.sort_unstable();
        self.scales.dedup();
        if self.scales.iter().any(|&s| s == 0 || s > self.levels) {
            return bad(format!("scales must lie in 1..={}", self.levels));
        }
        if self.k.len() != self.levels + 1 {
            return bad(format!(
                "k needs {} entries (father + {} levels), got {}",
                self.levels + 1,
                self.levels,
                self.k.len()
            ));
        }
        if self.k[0] != 1.0 {
            return bad("k[0] must be 1".into());
        }
        if self.k.iter().any(|v| !v.is_finite()) {
            return bad("k must be finite".into());
        }
        for axis in 0..3 {
            if !(self.bbox.min[axis] < self.bbox.max[axis]) {
                return bad("bbox min must be below max on every axis".into());
            }
        }
        if !(self.t_range[0] < self.t_range[1]) {
            return bad("t_range must be increasing".into());
        }
        if self.decoder_layers < 2 || self.decoder_width == 0 {
            return bad("decoder needs >= 2 layers and a nonzero width".into());
        }
        Ok(self)
    }

    pub fn planes(&self) -> &'static [PlaneId] {
        if self.static_mode {
            &PlaneId::STATIC
        } else {
            &PlaneId::DYNAMIC
        }
    }

    /// Length of a fused feature: B per scale.
    pub fn feature_len(&self) -> usize {
        self.features * self.scales.len()
    }

    fn axis_res(&self, axis: usize) -> usize {
        if axis == 3 {
            self.time_res
        } else {
            self.spatial_res
        }
    }

    pub fn plane_shape(&self, plane: PlaneId) -> PyramidShape {
        let (col_axis, row_axis) = plane.axes();
        PyramidShape {
            channels: self.features,
            levels: self.levels,
            height: self.axis_res(row_axis),
            width: self.axis_res(col_axis),
        }
    }

    /// Maps a world-space sample to [0, 1]^4, clamping outside the bounds.
    pub fn normalize(&self, q: &SamplePoint) -> [f64; 4] {
        let world = [q.x, q.y, q.z];
        let mut out = [0.0; 4];
        for axis in 0..3 {
            let span = self.bbox.max[axis] - self.bbox.min[axis];
            out[axis] = ((world[axis] - self.bbox.min[axis]) / span).clamp(0.0, 1.0);
        }
        let span = self.t_range[1] - self.t_range[0];
        out[3] = ((q.t - self.t_range[0]) / span).clamp(0.0, 1.0);
        out
    }
}

/// Rounds a value through 32-bit precision; stored parameters are kept
/// representable as `f32` so the on-disk format is lossless.
#[inline]
pub fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

/// The learnable coefficients of every active plane.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletField {
    pub config: ModelConfig,
    /// One pyramid per entry of `config.planes()`, in that order.
    pub planes: Vec<CoefficientPyramid>,
}

impl WaveletField {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        let config = config.validated()?;
        let planes = config
            .planes()
            .iter()
            .map(|&p| {
                let shape = config.plane_shape(p);
                shape.validate().map(|_| CoefficientPyramid::zeros(shape))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(WaveletField { config, planes })
    }

    /// Space-only coefficients uniform in [-0.01, 0.01]; space-time
    /// coefficients zero, so a fresh field is static.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut field = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids = field.config.planes();
        for (plane, pyr) in ids.iter().zip(field.planes.iter_mut()) {
            if plane.is_space_time() {
                continue;
            }
            for v in pyr.data.iter_mut() {
                *v = quantize(rng.gen_range(-0.01..=0.01));
            }
        }
        Ok(field)
    }

    pub fn plane_ids(&self) -> &'static [PlaneId] {
        self.config.planes()
    }

    pub fn plane(&self, id: PlaneId) -> Option<&CoefficientPyramid> {
        self.plane_ids().iter().position(|&p| p == id).map(|i| &self.planes[i])
    }

    pub fn coefficient_count(&self) -> usize {
        self.planes.iter().map(|p| p.data.len()).sum()
    }

    /// Zeros every space-time coefficient, forcing all space-time features
    /// to exactly 1.
    pub fn zero_space_time(&mut self) {
        let ids = self.config.planes();
        for (plane, pyr) in ids.iter().zip(self.planes.iter_mut()) {
            if plane.is_space_time() {
                pyr.data.iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
}
