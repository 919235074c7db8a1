use crate::error::{Result, WavePlanesError};

/// Multi-channel 2-D grid, channel-major then row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Grid {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    pub fn from_vec(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(WavePlanesError::Dimension(format!(
                "grid of {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Grid {
            channels,
            height,
            width,
            data,
        })
    }

    #[inline]
    pub fn index(&self, channel: usize, row: usize, col: usize) -> usize {
        (channel * self.height + row) * self.width + col
    }

    #[inline]
    pub fn get(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.data[self.index(channel, row, col)]
    }

    pub fn channel(&self, channel: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[channel * n..(channel + 1) * n]
    }

    pub fn channel_mut(&mut self, channel: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[channel * n..(channel + 1) * n]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.channels == other.channels && self.height == other.height && self.width == other.width
    }
}

/// Detail subband orientation inside a mother level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subband {
    /// High-pass along rows (height), low-pass along columns.
    Horizontal = 0,
    /// Low-pass along rows, high-pass along columns (width).
    Vertical = 1,
    Diagonal = 2,
}

/// Shape of a coefficient pyramid: `channels` feature channels, `levels`
/// decomposition levels, reconstructing a `height` x `width` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PyramidShape {
    pub channels: usize,
    pub levels: usize,
    pub height: usize,
    pub width: usize,
}

impl PyramidShape {
    pub fn new(channels: usize, levels: usize, height: usize, width: usize) -> Result<Self> {
        let shape = PyramidShape {
            channels,
            levels,
            height,
            width,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(WavePlanesError::Dimension("zero channels".into()));
        }
        if !self.height.is_power_of_two() || !self.width.is_power_of_two() {
            return Err(WavePlanesError::Dimension(format!(
                "grid {}x{} is not a power of two in both dimensions",
                self.height, self.width
            )));
        }
        if self.levels == 0 {
            return Err(WavePlanesError::Level("decomposition needs at least one level".into()));
        }
        let min_side = 2usize
            .checked_shl(self.levels as u32)
            .filter(|m| *m > 0)
            .ok_or_else(|| WavePlanesError::Level(format!("{} levels is too many", self.levels)))?;
        if self.height.min(self.width) < min_side {
            return Err(WavePlanesError::Level(format!(
                "{} levels need both sides >= {min_side}, got {}x{}",
                self.levels, self.height, self.width
            )));
        }
        Ok(())
    }

    /// Spatial shape of mother level `level` (1 = coarsest, `levels` = finest).
    /// The father shares the shape of level 1.
    pub fn level_dims(&self, level: usize) -> (usize, usize) {
        let shift = self.levels - level + 1;
        (self.height >> shift, self.width >> shift)
    }

    pub fn father_dims(&self) -> (usize, usize) {
        self.level_dims(1)
    }

    /// Output shape of a reconstruction that uses mother levels `1..=use_levels`.
    pub fn output_dims(&self, use_levels: usize) -> (usize, usize) {
        let shift = self.levels - use_levels;
        (self.height >> shift, self.width >> shift)
    }

    pub fn father_len(&self) -> usize {
        let (h, w) = self.father_dims();
        self.channels * h * w
    }

    pub fn level_len(&self, level: usize) -> usize {
        let (h, w) = self.level_dims(level);
        self.channels * 3 * h * w
    }

    /// Offset of mother level `level` in the flattened coefficient vector.
    pub fn level_offset(&self, level: usize) -> usize {
        self.father_len() + (1..level).map(|l| self.level_len(l)).sum::<usize>()
    }

    pub fn total_len(&self) -> usize {
        self.level_offset(self.levels + 1)
    }

    /// Level index of flattened position `index` (0 = father).
    pub fn level_of(&self, index: usize) -> usize {
        if index < self.father_len() {
            return 0;
        }
        (1..=self.levels)
            .find(|&l| index < self.level_offset(l + 1))
            .unwrap_or(self.levels)
    }
}

/// Learnable wavelet coefficients of one plane.
///
/// Flattened layout: the father block (channel, row, col), followed by mother
/// levels from coarsest (1) to finest (N), each laid out as
/// (channel, subband H|V|D, row, col).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPyramid {
    pub shape: PyramidShape,
    pub data: Vec<f64>,
}

impl CoefficientPyramid {
    pub fn zeros(shape: PyramidShape) -> Self {
        CoefficientPyramid {
            shape,
            data: vec![0.0; shape.total_len()],
        }
    }

    pub fn from_vec(shape: PyramidShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.total_len() {
            return Err(WavePlanesError::Dimension(format!(
                "pyramid needs {} coefficients, got {}",
                shape.total_len(),
                data.len()
            )));
        }
        Ok(CoefficientPyramid { shape, data })
    }

    pub fn father(&self) -> &[f64] {
        &self.data[..self.shape.father_len()]
    }

    pub fn father_mut(&mut self) -> &mut [f64] {
        let n = self.shape.father_len();
        &mut self.data[..n]
    }

    pub fn mother(&self, level: usize) -> &[f64] {
        let start = self.shape.level_offset(level);
        &self.data[start..start + self.shape.level_len(level)]
    }

    pub fn mother_mut(&mut self, level: usize) -> &mut [f64] {
        let start = self.shape.level_offset(level);
        let len = self.shape.level_len(level);
        &mut self.data[start..start + len]
    }

    /// One subband of one channel at mother level `level`.
    pub fn subband(&self, level: usize, channel: usize, band: Subband) -> &[f64] {
        let (h, w) = self.shape.level_dims(level);
        let n = h * w;
        let start = (channel * 3 + band as usize) * n;
        &self.mother(level)[start..start + n]
    }

    pub fn subband_mut(&mut self, level: usize, channel: usize, band: Subband) -> &mut [f64] {
        let (h, w) = self.shape.level_dims(level);
        let n = h * w;
        let start = (channel * 3 + band as usize) * n;
        &mut self.mother_mut(level)[start..start + n]
    }

    pub fn dot(&self, other: &CoefficientPyramid) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}
