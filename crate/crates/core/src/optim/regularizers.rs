//! Plane and coefficient regularizers with their gradients.
//!
//! Plane regularizers average over the given grids, normalizing each grid by
//! its own cell count `H * W` and summing over channels. Differences never
//! wrap around the grid boundary.

use serde::{Deserialize, Serialize};

use crate::wavelets::{CoefficientPyramid, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegWeights {
    #[serde(default = "default_tv")]
    pub tv: f64,
    #[serde(default = "default_sst")]
    pub sst: f64,
    #[serde(default = "default_ts")]
    pub ts: f64,
    /// Second difference along the time axis; off unless set.
    #[serde(default)]
    pub time_smooth: f64,
}

fn default_tv() -> f64 {
    1e-5
}
fn default_sst() -> f64 {
    0.1
}
fn default_ts() -> f64 {
    1e-5
}

impl Default for RegWeights {
    fn default() -> Self {
        RegWeights {
            tv: default_tv(),
            sst: default_sst(),
            ts: default_ts(),
            time_smooth: 0.0,
        }
    }
}

impl RegWeights {
    pub fn validate(&self) -> bool {
        [self.tv, self.sst, self.ts, self.time_smooth]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0)
    }
}

/// Total variation: squared differences to the previous row (rows >= 1)
/// and to the previous column (columns >= 1).
pub fn reg_tv(grids: &[&Grid]) -> f64 {
    tv_impl(grids, None)
}

/// Adds `scale * d reg_tv / d grid` into `grads`.
pub fn reg_tv_grad(grids: &[&Grid], scale: f64, grads: &mut [&mut Grid]) {
    tv_impl(grids, Some((scale, grads)));
}

fn tv_impl(grids: &[&Grid], mut grads: Option<(f64, &mut [&mut Grid])>) -> f64 {
    if grids.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (gi, grid) in grids.iter().enumerate() {
        let (h, w) = (grid.height, grid.width);
        let norm = 1.0 / (h * w) as f64;
        let coef = norm / grids.len() as f64;
        let mut sum = 0.0;
        for c in 0..grid.channels {
            let p = grid.channel(c);
            for i in 0..h {
                for j in 0..w {
                    let v = p[i * w + j];
                    if i >= 1 {
                        let d = v - p[(i - 1) * w + j];
                        sum += d * d;
                        if let Some((scale, g)) = grads.as_mut() {
                            let gc = g[gi].channel_mut(c);
                            let k = 2.0 * *scale * coef * d;
                            gc[i * w + j] += k;
                            gc[(i - 1) * w + j] -= k;
                        }
                    }
                    if j >= 1 {
                        let d = v - p[i * w + j - 1];
                        sum += d * d;
                        if let Some((scale, g)) = grads.as_mut() {
                            let gc = g[gi].channel_mut(c);
                            let k = 2.0 * *scale * coef * d;
                            gc[i * w + j] += k;
                            gc[i * w + j - 1] -= k;
                        }
                    }
                }
            }
        }
        total += norm * sum;
    }
    total / grids.len() as f64
}

#[derive(Clone, Copy, PartialEq)]
enum Axis {
    Columns,
    Rows,
}

fn second_diff_impl(grids: &[&Grid], axis: Axis, mut grads: Option<(f64, &mut [&mut Grid])>) -> f64 {
    if grids.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for (gi, grid) in grids.iter().enumerate() {
        let (h, w) = (grid.height, grid.width);
        let norm = 1.0 / (h * w) as f64;
        let coef = norm / grids.len() as f64;
        let (len, stride, outer, outer_stride) = match axis {
            Axis::Columns => (w, 1, h, w),
            Axis::Rows => (h, w, w, 1),
        };
        let mut sum = 0.0;
        for c in 0..grid.channels {
            let p = grid.channel(c);
            for o in 0..outer {
                let base = o * outer_stride;
                for i in 1..len.saturating_sub(1) {
                    let (a, b, d) = (base + (i - 1) * stride, base + i * stride, base + (i + 1) * stride);
                    let lap = p[a] - 2.0 * p[b] + p[d];
                    sum += lap * lap;
                    if let Some((scale, g)) = grads.as_mut() {
                        let gc = g[gi].channel_mut(c);
                        let k = 2.0 * *scale * coef * lap;
                        gc[a] += k;
                        gc[b] -= 2.0 * k;
                        gc[d] += k;
                    }
                }
            }
        }
        total += norm * sum;
    }
    total / grids.len() as f64
}

/// Spatial smoothness of space-time planes: squared second differences
/// along the spatial axis (columns).
pub fn reg_sst(time_grids: &[&Grid]) -> f64 {
    second_diff_impl(time_grids, Axis::Columns, None)
}

pub fn reg_sst_grad(time_grids: &[&Grid], scale: f64, grads: &mut [&mut Grid]) {
    second_diff_impl(time_grids, Axis::Columns, Some((scale, grads)));
}

/// Squared second differences along the time axis (rows).
pub fn reg_time_smooth(time_grids: &[&Grid]) -> f64 {
    second_diff_impl(time_grids, Axis::Rows, None)
}

pub fn reg_time_smooth_grad(time_grids: &[&Grid], scale: f64, grads: &mut [&mut Grid]) {
    second_diff_impl(time_grids, Axis::Rows, Some((scale, grads)));
}

/// L1 norm of all space-time coefficients.
pub fn reg_ts(time_coeffs: &[&CoefficientPyramid]) -> f64 {
    time_coeffs.iter().flat_map(|p| p.data.iter()).map(|v| v.abs()).sum()
}

/// Adds `scale * sign(coefficient)` into `grads` (zero at zero).
pub fn reg_ts_grad(time_coeffs: &[&CoefficientPyramid], scale: f64, grads: &mut [&mut CoefficientPyramid]) {
    for (p, g) in time_coeffs.iter().zip(grads.iter_mut()) {
        for (v, d) in p.data.iter().zip(g.data.iter_mut()) {
            if *v > 0.0 {
                *d += scale;
            } else if *v < 0.0 {
                *d -= scale;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tv_hand_value() {
        let g = Grid::from_vec(1, 2, 2, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(reg_tv(&[&g]), 0.5);
    }

    #[test]
    fn constant_planes_are_free() {
        let g = Grid::from_vec(2, 4, 4, vec![3.0; 32]).unwrap();
        assert_eq!(reg_tv(&[&g]), 0.0);
        assert_eq!(reg_sst(&[&g]), 0.0);
        assert_eq!(reg_time_smooth(&[&g]), 0.0);
    }

    #[test]
    fn ramps_have_no_curvature() {
        // Linear along columns; quadratic along rows.
        let data: Vec<f64> = (0..4).flat_map(|r| (0..8).map(move |c| 0.5 * c as f64 + (r * r) as f64)).collect();
        let g = Grid::from_vec(1, 4, 8, data).unwrap();
        assert!(reg_sst(&[&g]).abs() < 1e-24);
        // Rows: second difference of r^2 is 2 everywhere: 8 cols x 2 interior rows x 4 / 32 cells.
        assert!((reg_time_smooth(&[&g]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ts_is_absolute_sum() {
        let shape = crate::wavelets::PyramidShape::new(1, 1, 4, 4).unwrap();
        let mut p = CoefficientPyramid::zeros(shape);
        p.data[0] = 0.5;
        p.data[1] = -1.5;
        assert_eq!(reg_ts(&[&p]), 2.0);
        let mut g = CoefficientPyramid::zeros(shape);
        reg_ts_grad(&[&p], 1.0, &mut [&mut g]);
        assert_eq!(&g.data[..3], &[1.0, -1.0, 0.0]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mk = |rng: &mut rand_chacha::ChaCha8Rng, h, w| {
            Grid::from_vec(2, h, w, (0..2 * h * w).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
        };
        let a = mk(&mut rng, 4, 8);
        let b = mk(&mut rng, 8, 4);
        type Reg = fn(&[&Grid]) -> f64;
        type RegGrad = fn(&[&Grid], f64, &mut [&mut Grid]);
        let cases: [(Reg, RegGrad); 3] = [
            (reg_tv, reg_tv_grad),
            (reg_sst, reg_sst_grad),
            (reg_time_smooth, reg_time_smooth_grad),
        ];
        for (f, df) in cases {
            let mut ga = Grid::zeros(2, 4, 8);
            let mut gb = Grid::zeros(2, 8, 4);
            df(&[&a, &b], 1.0, &mut [&mut ga, &mut gb]);
            for idx in [0, 5, 17, 40, 63] {
                let h = 1e-6;
                let (mut p, mut m) = (a.clone(), a.clone());
                p.data[idx] += h;
                m.data[idx] -= h;
                let fd = (f(&[&p, &b]) - f(&[&m, &b])) / (2.0 * h);
                assert!((fd - ga.data[idx]).abs() < 1e-8, "{fd} vs {}", ga.data[idx]);
            }
        }
    }
}
