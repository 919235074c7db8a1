//! Datasets, the analytic synthetic scene, and image-quality metrics.

mod dnerf;
mod eval;
mod metrics;
mod synthetic;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::render::{Background, Camera};

pub use dnerf::{load_dnerf, write_dnerf};
pub use eval::{evaluate, evaluate_renders, EvalReport, FrameScores};
pub use metrics::{dilate, psnr, split_fg_bg, PSNR_CAP};
pub use synthetic::{gen_synthetic, Blob, ColorField, SyntheticScene, SyntheticSceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One entry of a transforms file.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub image_path: PathBuf,
    pub transform: [[f64; 4]; 4],
    pub time: f64,
    pub split: Split,
}

/// A loaded frame: camera, time, color composited over the background and
/// the original alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub record: FrameRecord,
    pub camera: Camera,
    /// Row-major RGB in [0, 1].
    pub rgb: Vec<f64>,
    /// Row-major alpha in [0, 1].
    pub alpha: Vec<f64>,
}

impl Frame {
    pub fn time(&self) -> f64 {
        self.record.time
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub train: Vec<Frame>,
    pub val: Vec<Frame>,
    pub test: Vec<Frame>,
    pub background: Background,
    /// Horizontal field of view shared by every frame.
    pub camera_angle_x: f64,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Frame] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}
