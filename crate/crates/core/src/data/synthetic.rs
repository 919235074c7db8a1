//! A moving Gaussian blob with an analytic density and color, rendered by
//! dense quadrature as ground truth.

use std::f64::consts::PI;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dnerf::{composite_u8, decomposite_u8};
use super::{Dataset, Frame, FrameRecord, Split};
use crate::error::{Result, WavePlanesError};
use crate::field::Aabb;
use crate::render::{composite, look_at, stratified_samples, Background, Camera, Ray, RenderedImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum ColorField {
    Constant { rgb: [f64; 3] },
    /// Linear blend from `low` to `high` across the bounding box along `axis`.
    Gradient { axis: usize, low: [f64; 3], high: [f64; 3] },
}

/// Blob center moving linearly from `start` (t = 0) to `end` (t = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub radius: f64,
    /// Peak density A.
    pub density: f64,
}

impl Blob {
    pub fn center(&self, t: f64) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (i, v) in c.iter_mut().enumerate() {
            *v = self.start[i] + t * (self.end[i] - self.start[i]);
        }
        c
    }

    pub fn sigma(&self, p: [f64; 3], t: f64) -> f64 {
        let c = self.center(t);
        let d2: f64 = (0..3).map(|i| (p[i] - c[i]) * (p[i] - c[i])).sum();
        self.density * (-d2 / (2.0 * self.radius * self.radius)).exp()
    }
}

fn default_blob() -> Blob {
    Blob {
        start: [-0.6, 0.0, 0.0],
        end: [0.6, 0.0, 0.0],
        radius: 0.35,
        density: 12.0,
    }
}
fn default_color() -> ColorField {
    ColorField::Gradient {
        axis: 2,
        low: [0.9, 0.2, 0.1],
        high: [0.1, 0.3, 0.9],
    }
}
fn default_frames() -> usize {
    8
}
fn default_views() -> usize {
    4
}
fn default_test_views() -> usize {
    1
}
fn default_size() -> usize {
    32
}
fn default_distance() -> f64 {
    4.0
}
fn default_fov() -> f64 {
    0.7
}
fn default_near() -> f64 {
    2.0
}
fn default_far() -> f64 {
    6.0
}
fn default_oracle_samples() -> usize {
    256
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSceneSpec {
    #[serde(default = "default_blob")]
    pub blob: Blob,
    #[serde(default = "default_color")]
    pub color: ColorField,
    #[serde(default)]
    pub bbox: Aabb,
    /// Number of time instants, evenly spaced over [0, 1].
    #[serde(default = "default_frames")]
    pub frames: usize,
    /// Training cameras per time instant.
    #[serde(default = "default_views")]
    pub views_per_frame: usize,
    /// Held-out test cameras per time instant.
    #[serde(default = "default_test_views")]
    pub test_views_per_frame: usize,
    #[serde(default = "default_size")]
    pub width: usize,
    #[serde(default = "default_size")]
    pub height: usize,
    #[serde(default = "default_distance")]
    pub camera_distance: f64,
    #[serde(default = "default_fov")]
    pub camera_angle_x: f64,
    #[serde(default = "default_near")]
    pub near: f64,
    #[serde(default = "default_far")]
    pub far: f64,
    /// Quadrature samples per ray for the ground truth.
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SyntheticSceneSpec {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl SyntheticSceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(WavePlanesError::Config(msg));
        let b = &self.blob;
        if !(b.radius > 0.0 && b.radius.is_finite() && b.density >= 0.0 && b.density.is_finite()) {
            return bad("blob radius must be positive and density non-negative".into());
        }
        for p in [b.start, b.end] {
            for i in 0..3 {
                if p[i] - b.radius < self.bbox.min[i] || p[i] + b.radius > self.bbox.max[i] {
                    return bad(format!("blob endpoint {p:?} leaves the bounding box"));
                }
            }
        }
        if let ColorField::Gradient { axis, .. } = self.color {
            if axis > 2 {
                return bad(format!("gradient axis must be 0, 1 or 2, got {axis}"));
            }
        }
        if self.frames == 0 || self.width == 0 || self.height == 0 || self.oracle_samples == 0 {
            return bad("frames, image size and oracle samples must be >= 1".into());
        }
        if !(0.0 <= self.near && self.near < self.far) {
            return bad("near/far must satisfy 0 <= near < far".into());
        }
        Ok(())
    }

    /// Evenly spaced times over [0, 1].
    pub fn times(&self) -> Vec<f64> {
        if self.frames == 1 {
            return vec![0.0];
        }
        (0..self.frames).map(|i| i as f64 / (self.frames - 1) as f64).collect()
    }
}

/// Analytic scene with its rendering oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub spec: SyntheticSceneSpec,
}

impl SyntheticScene {
    pub fn new(spec: SyntheticSceneSpec) -> Result<Self> {
        spec.validate()?;
        Ok(SyntheticScene { spec })
    }

    pub fn sigma(&self, p: [f64; 3], t: f64) -> f64 {
        self.spec.blob.sigma(p, t)
    }

    pub fn color(&self, p: [f64; 3]) -> [f64; 3] {
        match &self.spec.color {
            ColorField::Constant { rgb } => *rgb,
            ColorField::Gradient { axis, low, high } => {
                let (lo, hi) = (self.spec.bbox.min[*axis], self.spec.bbox.max[*axis]);
                let s = ((p[*axis] - lo) / (hi - lo)).clamp(0.0, 1.0);
                [0, 1, 2].map(|c| low[c] + s * (high[c] - low[c]))
            }
        }
    }

    /// Ground-truth color and opacity of one ray with `samples` bins.
    pub fn render_ray(&self, ray: &Ray, t: f64, samples: usize, background: [f64; 3]) -> ([f64; 3], f64) {
        let strat = stratified_samples::<ChaCha8Rng>(ray, samples, None);
        let mut sigmas = Vec::with_capacity(samples);
        let mut colors = Vec::with_capacity(samples);
        for &d in &strat.distances {
            let p = ray.at(d);
            sigmas.push(self.sigma(p, t));
            colors.push(self.color(p));
        }
        let out = composite(&sigmas, &strat.deltas, &colors, background);
        (out.rgb, out.alpha())
    }

    pub fn render(&self, cam: &Camera, t: f64, samples: usize) -> RenderedImage {
        let (near, far) = (self.spec.near, self.spec.far);
        let bg = cam.background.rgb();
        let rows: Vec<Vec<([f64; 3], f64)>> = (0..cam.height)
            .into_par_iter()
            .map(|y| {
                (0..cam.width)
                    .map(|x| {
                        let ray = cam.ray_through(x as f64 + 0.5, y as f64 + 0.5, near, far);
                        self.render_ray(&ray, t, samples, bg)
                    })
                    .collect()
            })
            .collect();
        let mut img = RenderedImage::new(cam.width, cam.height);
        for (i, (rgb, a)) in rows.into_iter().flatten().enumerate() {
            img.rgb[3 * i..3 * i + 3].copy_from_slice(&rgb);
            img.alpha[i] = a;
        }
        img
    }

    fn camera(&self, rng: &mut ChaCha8Rng) -> Result<Camera> {
        let s = &self.spec;
        let azimuth = rng.gen_range(0.0..2.0 * PI);
        let elevation: f64 = rng.gen_range(-0.35..0.75);
        let position = [
            s.camera_distance * elevation.cos() * azimuth.cos(),
            s.camera_distance * elevation.cos() * azimuth.sin(),
            s.camera_distance * elevation.sin(),
        ];
        Camera::from_fov(look_at(position, [0.0; 3]), s.camera_angle_x, s.width, s.height, s.background)
    }

    /// Renders one frame and rounds it to 8-bit straight alpha so it
    /// survives a PNG round trip unchanged.
    fn frame(&self, cam: Camera, t: f64, split: Split, index: usize) -> Frame {
        let img = self.render(&cam, t, self.spec.oracle_samples);
        let bg = cam.background.rgb();
        let mut rgb = Vec::with_capacity(img.rgb.len());
        let mut alpha = Vec::with_capacity(img.alpha.len());
        for (p, &a) in img.alpha.iter().enumerate() {
            let (c8, a8) = decomposite_u8([img.rgb[3 * p], img.rgb[3 * p + 1], img.rgb[3 * p + 2]], a, bg);
            let (c, a) = composite_u8(c8, a8, bg);
            rgb.extend_from_slice(&c);
            alpha.push(a);
        }
        Frame {
            record: FrameRecord {
                image_path: PathBuf::from(format!("{}/r_{index:03}.png", split.name())),
                transform: cam.pose,
                time: t,
                split,
            },
            camera: cam,
            rgb,
            alpha,
        }
    }
}

/// Generates train and test frames. Every time instant is seen from
/// `views_per_frame` random training cameras and `test_views_per_frame`
/// different test cameras. The validation split reuses the first test frame
/// of each time instant.
pub fn gen_synthetic(spec: &SyntheticSceneSpec) -> Result<(Dataset, SyntheticScene)> {
    let scene = SyntheticScene::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for t in spec.times() {
        for _ in 0..spec.views_per_frame {
            let cam = scene.camera(&mut rng)?;
            train.push((cam, t));
        }
        for _ in 0..spec.test_views_per_frame {
            let cam = scene.camera(&mut rng)?;
            test.push((cam, t));
        }
    }
    let build = |jobs: Vec<(Camera, f64)>, split: Split| -> Vec<Frame> {
        jobs.into_iter()
            .enumerate()
            .map(|(i, (cam, t))| scene.frame(cam, t, split, i))
            .collect()
    };
    let train = build(train, Split::Train);
    let test = build(test, Split::Test);
    let val = test
        .iter()
        .step_by(spec.test_views_per_frame.max(1))
        .enumerate()
        .map(|(i, f)| {
            let mut f = f.clone();
            f.record.split = Split::Val;
            f.record.image_path = PathBuf::from(format!("val/r_{i:03}.png"));
            f
        })
        .collect();
    let dataset = Dataset {
        train,
        val,
        test,
        background: spec.background,
        camera_angle_x: spec.camera_angle_x,
    };
    Ok((dataset, scene))
}
