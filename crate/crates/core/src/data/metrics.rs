use crate::error::{Result, WavePlanesError};

/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 99.0;

/// Peak signal-to-noise ratio in dB for images with values in [0, 1].
/// An optional mask restricts the error to selected pixels; `channels`
/// values per pixel are assumed.
pub fn psnr(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(WavePlanesError::Metric(format!(
            "image sizes differ: {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(WavePlanesError::Metric("empty images".into()));
    }
    let mse = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64;
    Ok(psnr_from_mse(mse))
}

pub(crate) fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP
    } else {
        (10.0 * (1.0 / mse).log10()).min(PSNR_CAP)
    }
}

/// Binary dilation with a `(2r+1) x (2r+1)` square structuring element.
pub fn dilate(mask: &[bool], width: usize, height: usize, radius: usize) -> Vec<bool> {
    // Separable: a square element is a row pass followed by a column pass.
    let mut rows = vec![false; mask.len()];
    for y in 0..height {
        for x in 0..width {
            let lo = x.saturating_sub(radius);
            let hi = (x + radius).min(width - 1);
            rows[y * width + x] = (lo..=hi).any(|xx| mask[y * width + xx]);
        }
    }
    let mut out = vec![false; mask.len()];
    for y in 0..height {
        let lo = y.saturating_sub(radius);
        let hi = (y + radius).min(height - 1);
        for x in 0..width {
            out[y * width + x] = (lo..=hi).any(|yy| rows[yy * width + x]);
        }
    }
    out
}

/// Foreground is the dilated `alpha > 0.5` region; background its complement.
pub fn split_fg_bg(alpha: &[f64], width: usize, height: usize, radius: usize) -> (Vec<bool>, Vec<bool>) {
    let seed: Vec<bool> = alpha.iter().map(|a| *a > 0.5).collect();
    let fg = dilate(&seed, width, height, radius);
    let bg = fg.iter().map(|f| !f).collect();
    (fg, bg)
}

/// PSNR over the pixels selected by `mask` (RGB images). `None` when the
/// mask selects nothing.
pub(crate) fn masked_psnr(a: &[f64], b: &[f64], mask: &[bool]) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &m) in mask.iter().enumerate() {
        if m {
            for c in 0..3 {
                let d = a[i * 3 + c] - b[i * 3 + c];
                sum += d * d;
            }
            count += 3;
        }
    }
    (count > 0).then(|| psnr_from_mse(sum / count as f64))
}
