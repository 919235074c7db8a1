use super::cache::FeaturePlaneCache;
use super::fusion::{fuse_backward, fuse_channel};
use super::{ModelConfig, PlaneId, SamplePoint};
use crate::wavelets::Grid;

/// Selects the two normalized coordinates a plane spans, in name order.
#[inline]
pub fn project(q: &[f64; 4], plane: PlaneId) -> (f64, f64) {
    let (a, b) = plane.axes();
    (q[a], q[b])
}

/// Corner-aligned bilinear stencil: four in-channel offsets and weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilinearTaps {
    pub offsets: [usize; 4],
    pub weights: [f64; 4],
}

impl BilinearTaps {
    /// `u` runs along columns (width), `v` along rows (height).
    #[inline]
    pub fn new(u: f64, v: f64, height: usize, width: usize) -> Self {
        let (c0, fc) = split(u, width);
        let (r0, fr) = split(v, height);
        let c1 = (c0 + 1).min(width - 1);
        let r1 = (r0 + 1).min(height - 1);
        BilinearTaps {
            offsets: [r0 * width + c0, r0 * width + c1, r1 * width + c0, r1 * width + c1],
            weights: [
                (1.0 - fr) * (1.0 - fc),
                (1.0 - fr) * fc,
                fr * (1.0 - fc),
                fr * fc,
            ],
        }
    }
}

#[inline]
fn split(coord: f64, len: usize) -> (usize, f64) {
    if len < 2 {
        return (0, 0.0);
    }
    let x = coord.clamp(0.0, 1.0) * (len - 1) as f64;
    let i = (x.floor() as usize).min(len - 2);
    (i, x - i as f64)
}

/// Bilinear interpolation of every channel of `grid` at `uv`.
pub fn sample_bilinear(grid: &Grid, uv: (f64, f64)) -> Vec<f64> {
    let taps = BilinearTaps::new(uv.0, uv.1, grid.height, grid.width);
    let mut out = vec![0.0; grid.channels];
    gather(grid, &taps, &mut out);
    out
}

#[inline]
fn gather(grid: &Grid, taps: &BilinearTaps, out: &mut [f64]) {
    let n = grid.height * grid.width;
    for (c, o) in out.iter_mut().enumerate() {
        let ch = &grid.data[c * n..(c + 1) * n];
        *o = taps.weights[0] * ch[taps.offsets[0]]
            + taps.weights[1] * ch[taps.offsets[1]]
            + taps.weights[2] * ch[taps.offsets[2]]
            + taps.weights[3] * ch[taps.offsets[3]];
    }
}

#[inline]
fn scatter(grid: &mut Grid, taps: &BilinearTaps, grad: &[f64]) {
    let n = grid.height * grid.width;
    for (c, g) in grad.iter().enumerate() {
        if *g == 0.0 {
            continue;
        }
        let ch = &mut grid.data[c * n..(c + 1) * n];
        for k in 0..4 {
            ch[taps.offsets[k]] += taps.weights[k] * g;
        }
    }
}

/// Per-sample fused feature: B values per scale, scales concatenated.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeature {
    pub values: Vec<f64>,
}

/// Samples and fuses the field at `q`.
pub fn sample_field(config: &ModelConfig, cache: &FeaturePlaneCache, q: &SamplePoint) -> FusedFeature {
    let qn = config.normalize(q);
    let planes = cache.planes.len();
    let mut plane_feats = vec![0.0; cache.scales.len() * planes * config.features];
    let mut values = vec![0.0; config.feature_len()];
    sample_field_into(config, cache, &qn, &mut plane_feats, &mut values);
    FusedFeature { values }
}

/// Forward sampling into caller buffers. `plane_feats` receives the raw
/// per-(scale, plane) features laid out as `[(scale * planes + plane) * B + c]`
/// and is what [`sample_field_backward`] consumes.
pub(crate) fn sample_field_into(
    config: &ModelConfig,
    cache: &FeaturePlaneCache,
    qn: &[f64; 4],
    plane_feats: &mut [f64],
    out: &mut [f64],
) {
    let b = config.features;
    let planes = cache.planes.len();
    let mut values = [0.0; 6];
    for si in 0..cache.scales.len() {
        for (pi, &id) in cache.planes.iter().enumerate() {
            let grid = &cache.grids[pi][si];
            let (u, v) = project(qn, id);
            let taps = BilinearTaps::new(u, v, grid.height, grid.width);
            let start = (si * planes + pi) * b;
            gather(grid, &taps, &mut plane_feats[start..start + b]);
        }
        for c in 0..b {
            for pi in 0..planes {
                values[pi] = plane_feats[(si * planes + pi) * b + c];
            }
            out[si * b + c] = fuse_channel(config.fusion, &values[..planes]);
        }
    }
}

/// Cotangents for every cached grid, shaped like the cache.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PlaneCotangents {
    pub grids: Vec<Vec<Grid>>,
}

impl PlaneCotangents {
    pub fn zeros_like(cache: &FeaturePlaneCache) -> Self {
        PlaneCotangents {
            grids: cache
                .grids
                .iter()
                .map(|per_scale| {
                    per_scale
                        .iter()
                        .map(|g| Grid::zeros(g.channels, g.height, g.width))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn add_assign(&mut self, other: &PlaneCotangents) {
        for (a, b) in self.grids.iter_mut().flatten().zip(other.grids.iter().flatten()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }
}

/// Pulls `d_out` (gradient w.r.t. the fused feature) back onto the cached
/// grids through fusion and bilinear sampling.
pub(crate) fn sample_field_backward(
    config: &ModelConfig,
    cache: &FeaturePlaneCache,
    qn: &[f64; 4],
    plane_feats: &[f64],
    d_out: &[f64],
    cotangents: &mut PlaneCotangents,
) {
    let b = config.features;
    let planes = cache.planes.len();
    let mut values = [0.0; 6];
    let mut grads = [0.0; 6];
    let mut d_plane = vec![0.0; planes * b];
    for si in 0..cache.scales.len() {
        for c in 0..b {
            let g = d_out[si * b + c];
            if g == 0.0 {
                for pi in 0..planes {
                    d_plane[pi * b + c] = 0.0;
                }
                continue;
            }
            for pi in 0..planes {
                values[pi] = plane_feats[(si * planes + pi) * b + c];
            }
            fuse_backward(config.fusion, &values[..planes], g, &mut grads[..planes]);
            for pi in 0..planes {
                d_plane[pi * b + c] = grads[pi];
            }
        }
        for (pi, &id) in cache.planes.iter().enumerate() {
            let grid = &mut cotangents.grids[pi][si];
            let (u, v) = project(qn, id);
            let taps = BilinearTaps::new(u, v, grid.height, grid.width);
            scatter(grid, &taps, &d_plane[pi * b..(pi + 1) * b]);
        }
    }
}
