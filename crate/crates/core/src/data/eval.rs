use serde::{Deserialize, Serialize};

use super::metrics::{masked_psnr, psnr, split_fg_bg};
use super::Frame;
use crate::error::{Result, WavePlanesError};
use crate::field::{refresh_cache, WaveletField};
use crate::render::{render_image, ColorBasisDecoder, RenderOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameScores {
    pub index: usize,
    pub time: f64,
    pub psnr_whole: f64,
    /// `None` when the frame has no foreground pixels.
    pub psnr_fg: Option<f64>,
    /// `None` when the foreground covers the whole frame.
    pub psnr_bg: Option<f64>,
}

/// Whole-image, foreground and background PSNR, per frame and averaged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub psnr_whole: f64,
    pub psnr_fg: Option<f64>,
    pub psnr_bg: Option<f64>,
    pub dilation_radius: usize,
    pub frames: Vec<FrameScores>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Scores predicted RGB images against `frames`, using each frame's
/// ground-truth alpha for the foreground mask.
pub fn evaluate_renders(predictions: &[Vec<f64>], frames: &[Frame], dilation_radius: usize) -> Result<EvalReport> {
    if frames.is_empty() {
        return Err(WavePlanesError::Metric("no frames to evaluate".into()));
    }
    if predictions.len() != frames.len() {
        return Err(WavePlanesError::Metric(format!(
            "{} predictions for {} frames",
            predictions.len(),
            frames.len()
        )));
    }
    let mut scores = Vec::with_capacity(frames.len());
    for (index, (pred, frame)) in predictions.iter().zip(frames).enumerate() {
        let whole = psnr(pred, &frame.rgb)?;
        let (fg, bg) = split_fg_bg(&frame.alpha, frame.camera.width, frame.camera.height, dilation_radius);
        scores.push(FrameScores {
            index,
            time: frame.time(),
            psnr_whole: whole,
            psnr_fg: masked_psnr(pred, &frame.rgb, &fg),
            psnr_bg: masked_psnr(pred, &frame.rgb, &bg),
        });
    }
    Ok(EvalReport {
        psnr_whole: mean(scores.iter().map(|s| s.psnr_whole)).unwrap_or(0.0),
        psnr_fg: mean(scores.iter().filter_map(|s| s.psnr_fg)),
        psnr_bg: mean(scores.iter().filter_map(|s| s.psnr_bg)),
        dilation_radius,
        frames: scores,
    })
}

/// Renders every frame at its own time and camera, then scores it.
pub fn evaluate(
    field: &WaveletField,
    decoder: &ColorBasisDecoder,
    frames: &[Frame],
    opts: &RenderOptions,
    dilation_radius: usize,
) -> Result<EvalReport> {
    let cache = refresh_cache(field, 0)?;
    let predictions: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| render_image(field, &cache, decoder, &f.camera, f.time(), opts).rgb)
        .collect();
    evaluate_renders(&predictions, frames, dilation_radius)
}
