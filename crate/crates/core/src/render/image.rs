use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::camera::{Camera, Ray};
use super::decoder::ColorBasisDecoder;
use super::volume::{composite, stratified_samples, Composite};
use crate::error::{Result, WavePlanesError};
use crate::field::{sample_field_into, FeaturePlaneCache, ModelConfig, SamplePoint, WaveletField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub samples_per_ray: usize,
    pub near: f64,
    pub far: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            samples_per_ray: 48,
            near: 2.0,
            far: 6.0,
        }
    }
}

/// An RGB image with per-pixel alpha, row-major, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl RenderedImage {
    pub fn new(width: usize, height: usize) -> Self {
        RenderedImage {
            width,
            height,
            rgb: vec![0.0; width * height * 3],
            alpha: vec![0.0; width * height],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    fn to_u8(v: f64) -> u8 {
        (v.clamp(0.0, 1.0) * 255.0).round() as u8
    }

    /// Writes an 8-bit PNG, RGBA when `with_alpha` is set.
    pub fn save_png(&self, path: &Path, with_alpha: bool) -> Result<()> {
        let (w, h) = (self.width as u32, self.height as u32);
        let result = if with_alpha {
            let mut buf = image::RgbaImage::new(w, h);
            for (i, px) in buf.pixels_mut().enumerate() {
                let c = &self.rgb[i * 3..i * 3 + 3];
                px.0 = [Self::to_u8(c[0]), Self::to_u8(c[1]), Self::to_u8(c[2]), Self::to_u8(self.alpha[i])];
            }
            buf.save(path)
        } else {
            let buf = image::RgbImage::from_fn(w, h, |x, y| {
                let c = self.pixel(x as usize, y as usize);
                image::Rgb([Self::to_u8(c[0]), Self::to_u8(c[1]), Self::to_u8(c[2])])
            });
            buf.save(path)
        };
        result.map_err(|e| WavePlanesError::Io(std::io::Error::other(e)))
    }
}

/// Renders one ray at time `t`: samples, decodes and composites over
/// `background`. `rng` jitters the samples; `None` uses bin centers.
pub fn trace_ray(
    config: &ModelConfig,
    cache: &FeaturePlaneCache,
    decoder: &ColorBasisDecoder,
    ray: &Ray,
    t: f64,
    samples_per_ray: usize,
    background: [f64; 3],
    rng: Option<&mut ChaCha8Rng>,
) -> Composite {
    let strat = stratified_samples(ray, samples_per_ray, rng);
    let basis = decoder.basis(ray.direction).basis;
    let mut plane_feats = vec![0.0; cache.scales.len() * cache.planes.len() * config.features];
    let mut feature = vec![0.0; config.feature_len()];
    let n = strat.distances.len();
    let mut sigmas = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    for &d in &strat.distances {
        let p = ray.at(d);
        let qn = config.normalize(&SamplePoint::new(p[0], p[1], p[2], t));
        sample_field_into(config, cache, &qn, &mut plane_feats, &mut feature);
        let out = decoder.decode_with(&feature, &basis);
        sigmas.push(out.sigma);
        colors.push(out.rgb);
    }
    composite(&sigmas, &strat.deltas, &colors, background)
}

/// Renders a full frame. Rows are rendered in parallel; every pixel is
/// independent and deterministic.
pub fn render_image(
    field: &WaveletField,
    cache: &FeaturePlaneCache,
    decoder: &ColorBasisDecoder,
    cam: &Camera,
    t: f64,
    opts: &RenderOptions,
) -> RenderedImage {
    let config = &field.config;
    let background = cam.background.rgb();
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..cam.height)
        .into_par_iter()
        .map(|y| {
            let mut rgb = Vec::with_capacity(cam.width * 3);
            let mut alpha = Vec::with_capacity(cam.width);
            for x in 0..cam.width {
                let ray = cam.ray_through(x as f64 + 0.5, y as f64 + 0.5, opts.near, opts.far);
                let out = trace_ray(config, cache, decoder, &ray, t, opts.samples_per_ray, background, None);
                rgb.extend_from_slice(&out.rgb);
                alpha.push(out.alpha());
            }
            (rgb, alpha)
        })
        .collect();
    let mut img = RenderedImage::new(cam.width, cam.height);
    img.rgb.clear();
    img.alpha.clear();
    for (rgb, alpha) in rows {
        img.rgb.extend(rgb);
        img.alpha.extend(alpha);
    }
    img
}

/// Seeded generator for jittered sampling of a given ray index.
pub fn ray_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
