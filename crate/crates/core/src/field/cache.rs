use super::{PlaneId, WaveletField};
use crate::error::Result;
use crate::wavelets::{idwt2, CoefficientPyramid, Grid, WaveletFamily};

/// Reconstructs one feature plane at scale `scale`: the inverse transform of
/// the k-scaled coefficients, shifted by +1 on space-time planes.
pub fn reconstruct_plane(
    coeffs: &CoefficientPyramid,
    scale: usize,
    is_space_time: bool,
    k: &[f64],
    family: WaveletFamily,
) -> Result<Grid> {
    let mut scaled = coeffs.clone();
    let shape = coeffs.shape;
    for v in scaled.father_mut() {
        *v *= k[0];
    }
    for level in 1..=shape.levels {
        let factor = k[level];
        for v in scaled.mother_mut(level) {
            *v *= factor;
        }
    }
    let mut grid = idwt2(&scaled, scale, family)?;
    if is_space_time {
        for v in grid.data.iter_mut() {
            *v += 1.0;
        }
    }
    Ok(grid)
}

/// Feature planes reconstructed from the current coefficients, one grid per
/// (plane, scale). Read-only once built.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePlaneCache {
    pub planes: Vec<PlaneId>,
    pub scales: Vec<usize>,
    /// `grids[plane_index][scale_index]`.
    pub grids: Vec<Vec<Grid>>,
    /// Parameter version the cache was built from.
    pub epoch: u64,
}

impl FeaturePlaneCache {
    pub fn grid(&self, plane: PlaneId, scale: usize) -> Option<&Grid> {
        let p = self.planes.iter().position(|&id| id == plane)?;
        let s = self.scales.iter().position(|&v| v == scale)?;
        Some(&self.grids[p][s])
    }
}

/// Rebuilds every (plane, scale) grid from `field`.
pub fn refresh_cache(field: &WaveletField, epoch: u64) -> Result<FeaturePlaneCache> {
    let cfg = &field.config;
    let grids = field
        .plane_ids()
        .iter()
        .zip(&field.planes)
        .map(|(id, pyr)| {
            cfg.scales
                .iter()
                .map(|&s| reconstruct_plane(pyr, s, id.is_space_time(), &cfg.k, cfg.family))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeaturePlaneCache {
        planes: field.plane_ids().to_vec(),
        scales: cfg.scales.clone(),
        grids,
        epoch,
    })
}
