use std::collections::HashMap;

use crate::error::{Result, WavePlanesError};
use crate::field::WaveletField;
use crate::wavelets::{CoefficientPyramid, PyramidShape};

/// Zeros every coefficient with `|v| < tau`; equality is kept. Zeros of
/// either sign come out as `+0.0`.
pub fn threshold_pyramid(pyramid: &CoefficientPyramid, tau: f64) -> CoefficientPyramid {
    let mut out = pyramid.clone();
    for v in out.data.iter_mut() {
        if v.abs() < tau || *v == 0.0 {
            *v = 0.0;
        }
    }
    out
}

pub fn threshold_coeffs(field: &WaveletField, tau: f64) -> WaveletField {
    WaveletField {
        config: field.config.clone(),
        planes: field.planes.iter().map(|p| threshold_pyramid(p, tau)).collect(),
    }
}

/// Non-zero coefficients of one plane keyed by linear index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCoeffMap {
    /// Number of coefficients in the dense plane.
    pub len: usize,
    pub entries: HashMap<u32, f32>,
}

impl SparseCoeffMap {
    /// Values are stored at 32-bit precision.
    pub fn to_sparse(pyramid: &CoefficientPyramid) -> Self {
        let entries = pyramid
            .data
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v as f32))
            .collect();
        SparseCoeffMap {
            len: pyramid.data.len(),
            entries,
        }
    }

    pub fn from_sparse(&self, shape: PyramidShape) -> Result<CoefficientPyramid> {
        let mut pyr = CoefficientPyramid::zeros(shape);
        let len = pyr.data.len();
        for (&i, &v) in &self.entries {
            let slot = pyr.data.get_mut(i as usize).ok_or_else(|| {
                WavePlanesError::CorruptModel(format!("coefficient index {i} out of range for {len} coefficients"))
            })?;
            *slot = v as f64;
        }
        Ok(pyr)
    }

    /// Entries ascending by index.
    pub fn sorted(&self) -> Vec<(u32, f32)> {
        let mut out: Vec<(u32, f32)> = self.entries.iter().map(|(&i, &v)| (i, v)).collect();
        out.sort_unstable_by_key(|(i, _)| *i);
        out
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}
