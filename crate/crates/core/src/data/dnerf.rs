//! D-NeRF style directories: `transforms_{train,val,test}.json` plus PNGs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Frame, FrameRecord, Split};
use crate::error::{Result, WavePlanesError};
use crate::render::{Background, Camera};

#[derive(Debug, Deserialize, Serialize)]
struct TransformsFile {
    camera_angle_x: f64,
    frames: Vec<FrameEntry>,
}

#[derive(Debug, Deserialize, Serialize)]
struct FrameEntry {
    file_path: String,
    transform_matrix: [[f64; 4]; 4],
    #[serde(default)]
    time: f64,
}

/// Composites an 8-bit straight-alpha pixel over `background`.
pub(crate) fn composite_u8(color: [u8; 3], alpha: u8, background: [f64; 3]) -> ([f64; 3], f64) {
    let a = alpha as f64 / 255.0;
    let mut rgb = [0.0; 3];
    for c in 0..3 {
        rgb[c] = color[c] as f64 / 255.0 * a + background[c] * (1.0 - a);
    }
    (rgb, a)
}

/// Inverse of [`composite_u8`] up to 8-bit rounding.
pub(crate) fn decomposite_u8(rgb: [f64; 3], alpha: f64, background: [f64; 3]) -> ([u8; 3], u8) {
    let a8 = (alpha.clamp(0.0, 1.0) * 255.0).round() as u8;
    if a8 == 0 {
        return ([0; 3], 0);
    }
    let a = a8 as f64 / 255.0;
    let mut color = [0u8; 3];
    for c in 0..3 {
        let straight = (rgb[c] - background[c] * (1.0 - a)) / a;
        color[c] = (straight.clamp(0.0, 1.0) * 255.0).round() as u8;
    }
    (color, a8)
}

fn image_path(dir: &Path, file_path: &str) -> PathBuf {
    let mut path = dir.join(file_path.trim_start_matches("./"));
    if path.extension().is_none() {
        path.set_extension("png");
    }
    path
}

fn read_transforms(path: &Path) -> Result<TransformsFile> {
    let text = fs::read_to_string(path).map_err(|e| WavePlanesError::dataset(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| WavePlanesError::dataset(path, format!("invalid transforms JSON: {e}")))
}

fn load_frame(
    dir: &Path,
    json_path: &Path,
    entry: &FrameEntry,
    split: Split,
    fov_x: f64,
    background: Background,
) -> Result<Frame> {
    if !(0.0..=1.0).contains(&entry.time) {
        return Err(WavePlanesError::dataset(
            json_path,
            format!("time {} of {} outside [0, 1]", entry.time, entry.file_path),
        ));
    }
    if entry.transform_matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(WavePlanesError::dataset(
            json_path,
            format!("non-finite transform for {}", entry.file_path),
        ));
    }
    let path = image_path(dir, &entry.file_path);
    let img = image::open(&path)
        .map_err(|e| WavePlanesError::dataset(&path, format!("cannot decode image: {e}")))?
        .to_rgba8();
    let (width, height) = (img.width() as usize, img.height() as usize);
    let camera = Camera::from_fov(entry.transform_matrix, fov_x, width, height, background)
        .map_err(|e| WavePlanesError::dataset(json_path, format!("{}: {e}", entry.file_path)))?;
    let bg = background.rgb();
    let mut rgb = Vec::with_capacity(width * height * 3);
    let mut alpha = Vec::with_capacity(width * height);
    for px in img.pixels() {
        let [r, g, b, a] = px.0;
        let (c, a) = composite_u8([r, g, b], a, bg);
        rgb.extend_from_slice(&c);
        alpha.push(a);
    }
    Ok(Frame {
        record: FrameRecord {
            image_path: path,
            transform: entry.transform_matrix,
            time: entry.time,
            split,
        },
        camera,
        rgb,
        alpha,
    })
}

/// Loads all three splits. Every image must share the size of the first one.
pub fn load_dnerf(dir: &Path, background: Background) -> Result<Dataset> {
    let mut splits: Vec<Vec<Frame>> = Vec::with_capacity(3);
    let mut fov = None;
    let mut size: Option<(usize, usize)> = None;
    for split in Split::ALL {
        let json_path = dir.join(format!("transforms_{}.json", split.name()));
        let file = read_transforms(&json_path)?;
        if !(file.camera_angle_x.is_finite() && file.camera_angle_x > 0.0 && file.camera_angle_x < std::f64::consts::PI)
        {
            return Err(WavePlanesError::dataset(&json_path, "camera_angle_x must be in (0, pi)"));
        }
        fov.get_or_insert(file.camera_angle_x);
        let mut frames = Vec::with_capacity(file.frames.len());
        for entry in &file.frames {
            let frame = load_frame(dir, &json_path, entry, split, file.camera_angle_x, background)?;
            let dims = (frame.camera.width, frame.camera.height);
            match size {
                None => size = Some(dims),
                Some(expected) if expected != dims => {
                    return Err(WavePlanesError::dataset(
                        &frame.record.image_path,
                        format!("image is {}x{}, expected {}x{}", dims.0, dims.1, expected.0, expected.1),
                    ));
                }
                Some(_) => {}
            }
            frames.push(frame);
        }
        splits.push(frames);
    }
    let test = splits.pop().unwrap_or_default();
    let val = splits.pop().unwrap_or_default();
    let train = splits.pop().unwrap_or_default();
    Ok(Dataset {
        train,
        val,
        test,
        background,
        camera_angle_x: fov.unwrap_or(0.0),
    })
}

/// Writes `dataset` as a D-NeRF directory with RGBA PNGs. Colors are
/// un-composited from the background, so reloading reproduces the targets
/// exactly when they came from 8-bit data.
pub fn write_dnerf(dataset: &Dataset, dir: &Path) -> Result<()> {
    let bg = dataset.background.rgb();
    for split in Split::ALL {
        let sub = dir.join(split.name());
        fs::create_dir_all(&sub)?;
        let mut entries = Vec::new();
        for (i, frame) in dataset.split(split).iter().enumerate() {
            let (w, h) = (frame.camera.width, frame.camera.height);
            let mut img = image::RgbaImage::new(w as u32, h as u32);
            for (p, px) in img.pixels_mut().enumerate() {
                let rgb = [frame.rgb[3 * p], frame.rgb[3 * p + 1], frame.rgb[3 * p + 2]];
                let (c, a) = decomposite_u8(rgb, frame.alpha[p], bg);
                px.0 = [c[0], c[1], c[2], a];
            }
            let name = format!("r_{i:03}");
            let path = sub.join(format!("{name}.png"));
            img.save(&path)
                .map_err(|e| WavePlanesError::dataset(&path, format!("cannot write image: {e}")))?;
            entries.push(FrameEntry {
                file_path: format!("./{}/{name}", split.name()),
                transform_matrix: frame.camera.pose,
                time: frame.time(),
            });
        }
        let file = TransformsFile {
            camera_angle_x: dataset.camera_angle_x,
            frames: entries,
        };
        let json = serde_json::to_string_pretty(&file).map_err(|e| std::io::Error::other(e))?;
        fs::write(dir.join(format!("transforms_{}.json", split.name())), json)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_round_trip_is_exact() {
        let bg = [1.0; 3];
        for a in [0u8, 1, 17, 128, 254, 255] {
            for c in [0u8, 3, 99, 200, 255] {
                let (rgb, alpha) = composite_u8([c, c / 2, 255 - c], a, bg);
                let (back, a8) = decomposite_u8(rgb, alpha, bg);
                assert_eq!(a8, a);
                if a > 0 {
                    assert_eq!(back, [c, c / 2, 255 - c]);
                }
            }
        }
    }

    #[test]
    fn extension_is_added() {
        let p = image_path(Path::new("/d"), "./train/r_000");
        assert_eq!(p, PathBuf::from("/d/train/r_000.png"));
        let q = image_path(Path::new("/d"), "test/a.png");
        assert_eq!(q, PathBuf::from("/d/test/a.png"));
    }
}
