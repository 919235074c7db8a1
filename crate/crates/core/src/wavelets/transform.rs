use super::filters::WaveletFamily;
use super::pyramid::{CoefficientPyramid, Grid, PyramidShape, Subband};
use crate::error::{Result, WavePlanesError};

/// Correlate every row with the two filters and keep even phases.
/// `x` is `h x w`; returns two `h x w/2` blocks.
fn down_rows(x: &[f64], h: usize, w: usize, f_lo: &[f64], f_hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = w / 2;
    let mut lo = vec![0.0; h * half];
    let mut hi = vec![0.0; h * half];
    for r in 0..h {
        let row = &x[r * w..(r + 1) * w];
        for k in 0..half {
            let (mut a, mut b) = (0.0, 0.0);
            for (n, (fl, fh)) in f_lo.iter().zip(f_hi).enumerate() {
                let v = row[(2 * k + n) % w];
                a += fl * v;
                b += fh * v;
            }
            lo[r * half + k] = a;
            hi[r * half + k] = b;
        }
    }
    (lo, hi)
}

/// Column counterpart of [`down_rows`]: `h x w` in, two `h/2 x w` blocks out.
fn down_cols(x: &[f64], h: usize, w: usize, f_lo: &[f64], f_hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let half = h / 2;
    let mut lo = vec![0.0; half * w];
    let mut hi = vec![0.0; half * w];
    for k in 0..half {
        let (lo_row, hi_row) = (&mut lo[k * w..(k + 1) * w], &mut hi[k * w..(k + 1) * w]);
        for (n, (fl, fh)) in f_lo.iter().zip(f_hi).enumerate() {
            let src = &x[((2 * k + n) % h) * w..][..w];
            for c in 0..w {
                lo_row[c] += fl * src[c];
                hi_row[c] += fh * src[c];
            }
        }
    }
    (lo, hi)
}

/// Upsample-and-filter along rows, the transpose of [`down_rows`] for the
/// same filters. Inputs are `h x half`; output is `h x 2*half`.
fn up_rows(lo: &[f64], hi: &[f64], h: usize, half: usize, f_lo: &[f64], f_hi: &[f64]) -> Vec<f64> {
    let w = 2 * half;
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let row = &mut out[r * w..(r + 1) * w];
        for k in 0..half {
            let (a, b) = (lo[r * half + k], hi[r * half + k]);
            for (n, (fl, fh)) in f_lo.iter().zip(f_hi).enumerate() {
                row[(2 * k + n) % w] += fl * a + fh * b;
            }
        }
    }
    out
}

fn up_cols(lo: &[f64], hi: &[f64], half: usize, w: usize, f_lo: &[f64], f_hi: &[f64]) -> Vec<f64> {
    let h = 2 * half;
    let mut out = vec![0.0; h * w];
    for k in 0..half {
        let (lo_row, hi_row) = (&lo[k * w..(k + 1) * w], &hi[k * w..(k + 1) * w]);
        for (n, (fl, fh)) in f_lo.iter().zip(f_hi).enumerate() {
            let dst = &mut out[((2 * k + n) % h) * w..][..w];
            for c in 0..w {
                dst[c] += fl * lo_row[c] + fh * hi_row[c];
            }
        }
    }
    out
}

/// One analysis level on a single-channel `h x w` block: (LL, H, V, D).
fn analyze_level(x: &[f64], h: usize, w: usize, f_lo: &[f64], f_hi: &[f64]) -> [Vec<f64>; 4] {
    let (lw, hw) = down_rows(x, h, w, f_lo, f_hi);
    let (ll, horizontal) = down_cols(&lw, h, w / 2, f_lo, f_hi);
    let (vertical, diagonal) = down_cols(&hw, h, w / 2, f_lo, f_hi);
    [ll, horizontal, vertical, diagonal]
}

/// One synthesis level from `h2 x w2` subbands to a `2h2 x 2w2` block.
fn synthesize_level(
    bands: [&[f64]; 4],
    h2: usize,
    w2: usize,
    f_lo: &[f64],
    f_hi: &[f64],
) -> Vec<f64> {
    let [ll, horizontal, vertical, diagonal] = bands;
    let lw = up_cols(ll, horizontal, h2, w2, f_lo, f_hi);
    let hw = up_cols(vertical, diagonal, h2, w2, f_lo, f_hi);
    up_rows(&lw, &hw, 2 * h2, w2, f_lo, f_hi)
}

fn reversed(f: &[f64]) -> Vec<f64> {
    f.iter().rev().copied().collect()
}

/// Forward multi-level transform of every channel of `grid`.
pub fn dwt2(grid: &Grid, levels: usize, family: WaveletFamily) -> Result<CoefficientPyramid> {
    let shape = PyramidShape::new(grid.channels, levels, grid.height, grid.width)?;
    let bank = family.filters();
    let (a_lo, a_hi) = (reversed(bank.analysis_low), reversed(bank.analysis_high));
    let mut pyr = CoefficientPyramid::zeros(shape);

    for c in 0..grid.channels {
        let mut current = grid.channel(c).to_vec();
        let (mut h, mut w) = (grid.height, grid.width);
        for level in (1..=levels).rev() {
            let [ll, horizontal, vertical, diagonal] = analyze_level(&current, h, w, &a_lo, &a_hi);
            pyr.subband_mut(level, c, Subband::Horizontal).copy_from_slice(&horizontal);
            pyr.subband_mut(level, c, Subband::Vertical).copy_from_slice(&vertical);
            pyr.subband_mut(level, c, Subband::Diagonal).copy_from_slice(&diagonal);
            current = ll;
            h /= 2;
            w /= 2;
        }
        let n = h * w;
        pyr.father_mut()[c * n..(c + 1) * n].copy_from_slice(&current);
    }
    Ok(pyr)
}

fn check_levels(shape: &PyramidShape, use_levels: usize) -> Result<()> {
    if use_levels == 0 || use_levels > shape.levels {
        return Err(WavePlanesError::Level(format!(
            "reconstruction level {use_levels} outside 1..={}",
            shape.levels
        )));
    }
    Ok(())
}

/// Inverse transform using the father and mother levels `1..=use_levels`.
///
/// The output is `height / 2^(levels - use_levels)` by
/// `width / 2^(levels - use_levels)`; `use_levels == levels` gives the full
/// resolution grid.
pub fn idwt2(pyr: &CoefficientPyramid, use_levels: usize, family: WaveletFamily) -> Result<Grid> {
    let shape = pyr.shape;
    check_levels(&shape, use_levels)?;
    let bank = family.filters();
    let (s_lo, s_hi) = (bank.synthesis_low, bank.synthesis_high);
    let (out_h, out_w) = shape.output_dims(use_levels);
    let mut out = Grid::zeros(shape.channels, out_h, out_w);

    let (fh, fw) = shape.father_dims();
    for c in 0..shape.channels {
        let n = fh * fw;
        let mut current = pyr.father()[c * n..(c + 1) * n].to_vec();
        let (mut h, mut w) = (fh, fw);
        for level in 1..=use_levels {
            current = synthesize_level(
                [
                    &current,
                    pyr.subband(level, c, Subband::Horizontal),
                    pyr.subband(level, c, Subband::Vertical),
                    pyr.subband(level, c, Subband::Diagonal),
                ],
                h,
                w,
                s_lo,
                s_hi,
            );
            h *= 2;
            w *= 2;
        }
        out.channel_mut(c).copy_from_slice(&current);
    }
    Ok(out)
}

/// Transpose of [`idwt2`] applied to `cotangent`.
///
/// Mother levels above `use_levels` do not influence the reconstruction and
/// receive zero.
pub fn idwt2_vjp(
    cotangent: &Grid,
    shape: PyramidShape,
    use_levels: usize,
    family: WaveletFamily,
) -> Result<CoefficientPyramid> {
    check_levels(&shape, use_levels)?;
    let (out_h, out_w) = shape.output_dims(use_levels);
    if cotangent.channels != shape.channels || cotangent.height != out_h || cotangent.width != out_w {
        return Err(WavePlanesError::Dimension(format!(
            "cotangent {}x{}x{} does not match reconstruction {}x{}x{}",
            cotangent.channels, cotangent.height, cotangent.width, shape.channels, out_h, out_w
        )));
    }
    let bank = family.filters();
    let (s_lo, s_hi) = (bank.synthesis_low, bank.synthesis_high);
    let mut grad = CoefficientPyramid::zeros(shape);

    for c in 0..shape.channels {
        let mut current = cotangent.channel(c).to_vec();
        let (mut h, mut w) = (out_h, out_w);
        for level in (1..=use_levels).rev() {
            let [ll, horizontal, vertical, diagonal] = analyze_level(&current, h, w, s_lo, s_hi);
            grad.subband_mut(level, c, Subband::Horizontal).copy_from_slice(&horizontal);
            grad.subband_mut(level, c, Subband::Vertical).copy_from_slice(&vertical);
            grad.subband_mut(level, c, Subband::Diagonal).copy_from_slice(&diagonal);
            current = ll;
            h /= 2;
            w /= 2;
        }
        let n = h * w;
        grad.father_mut()[c * n..(c + 1) * n].copy_from_slice(&current);
    }
    Ok(grad)
}
