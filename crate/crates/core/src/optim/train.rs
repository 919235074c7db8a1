use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::regularizers::RegWeights;
use super::schedule::LrSchedule;
use super::tape::{loss_and_gradients, LossBreakdown, RaySampling, TrainBatch};
use crate::data::Frame;
use crate::error::{Result, WavePlanesError};
use crate::field::{refresh_cache, ModelConfig, WaveletField};
use crate::render::ColorBasisDecoder;

fn default_steps() -> usize {
    2000
}
fn default_batch_size() -> usize {
    1024
}
fn default_lr() -> f64 {
    0.01
}
fn default_warmup() -> usize {
    512
}
fn default_samples_per_ray() -> usize {
    48
}
fn default_near() -> f64 {
    2.0
}
fn default_far() -> f64 {
    6.0
}
fn default_jitter() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default)]
    pub weights: RegWeights,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples_per_ray")]
    pub samples_per_ray: usize,
    #[serde(default = "default_near")]
    pub near: f64,
    #[serde(default = "default_far")]
    pub far: f64,
    /// Jitter sample positions within their bins.
    #[serde(default = "default_jitter")]
    pub jitter: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            steps: default_steps(),
            batch_size: default_batch_size(),
            lr: default_lr(),
            warmup: default_warmup(),
            weights: RegWeights::default(),
            seed: 0,
            samples_per_ray: default_samples_per_ray(),
            near: default_near(),
            far: default_far(),
            jitter: default_jitter(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(WavePlanesError::Config(msg.into()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.samples_per_ray == 0 {
            return bad("samples_per_ray must be >= 1");
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad("lr must be positive and finite");
        }
        if !(self.near.is_finite() && self.far.is_finite() && 0.0 <= self.near && self.near < self.far) {
            return bad("near/far must satisfy 0 <= near < far");
        }
        if !self.weights.validate() {
            return bad("regularizer weights must be finite and >= 0");
        }
        Ok(())
    }
}

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub lr: f64,
    pub loss: LossBreakdown,
}

impl StepLog {
    pub const CSV_HEADER: &'static str = "step,lr,mse,tv,sst,ts,time_smooth,total";

    pub fn csv_row(&self) -> String {
        let l = &self.loss;
        let mut row = String::new();
        let _ = write!(
            row,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.step, self.lr, l.mse, l.tv, l.sst, l.ts, l.time_smooth, l.total
        );
        row
    }
}

/// Draws `size` random pixels from `frames` as training rays.
pub fn sample_batch(
    frames: &[Frame],
    size: usize,
    near: f64,
    far: f64,
    background: [f64; 3],
    rng: &mut impl Rng,
) -> TrainBatch {
    let mut batch = TrainBatch {
        rays: Vec::with_capacity(size),
        times: Vec::with_capacity(size),
        targets: Vec::with_capacity(size),
        background,
    };
    if frames.is_empty() {
        return batch;
    }
    for _ in 0..size {
        let frame = &frames[rng.gen_range(0..frames.len())];
        let cam = &frame.camera;
        let x = rng.gen_range(0..cam.width);
        let y = rng.gen_range(0..cam.height);
        let i = (y * cam.width + x) * 3;
        batch.rays.push(cam.ray_through(x as f64 + 0.5, y as f64 + 0.5, near, far));
        batch.times.push(frame.time());
        batch.targets.push([frame.rgb[i], frame.rgb[i + 1], frame.rgb[i + 2]]);
    }
    batch
}

/// Model, optimizer state and batch generator for one training run.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub field: WaveletField,
    pub decoder: ColorBasisDecoder,
    pub config: TrainConfig,
    pub adam: Adam,
    pub schedule: LrSchedule,
    /// Completed optimizer steps.
    pub step: usize,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(model: ModelConfig, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let field = WaveletField::init(model, config.seed)?;
        let cfg = &field.config;
        let decoder = ColorBasisDecoder::init(
            cfg.feature_len(),
            cfg.decoder_width,
            cfg.decoder_layers,
            config.seed.wrapping_add(1),
        )?;
        Ok(Self::from_parts(field, decoder, config))
    }

    /// Resumes from existing parameters with fresh optimizer state.
    pub fn from_parts(field: WaveletField, decoder: ColorBasisDecoder, config: TrainConfig) -> Self {
        let len = field.coefficient_count() + decoder.params.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Trainer {
            adam: Adam::new(len),
            schedule: LrSchedule::new(config.lr, config.warmup, config.steps),
            step: 0,
            rng,
            field,
            decoder,
            config,
        }
    }

    pub fn next_batch(&mut self, frames: &[Frame], background: [f64; 3]) -> TrainBatch {
        let c = &self.config;
        sample_batch(frames, c.batch_size, c.near, c.far, background, &mut self.rng)
    }

    fn sampling(&self) -> RaySampling {
        let jitter_seed = self
            .config
            .jitter
            .then(|| self.config.seed ^ (self.step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        RaySampling {
            samples_per_ray: self.config.samples_per_ray,
            jitter_seed,
        }
    }

    /// One optimizer step on `batch`. The feature cache is rebuilt from the
    /// current coefficients first.
    pub fn train_step(&mut self, batch: &TrainBatch) -> Result<StepLog> {
        let cache = refresh_cache(&self.field, self.step as u64)?;
        let (loss, grads) = loss_and_gradients(
            &self.field,
            &cache,
            &self.decoder,
            batch,
            &self.config.weights,
            self.sampling(),
        )?;
        let grad_finite = grads.decoder.iter().all(|g| g.is_finite())
            && grads.planes.iter().all(|p| p.data.iter().all(|g| g.is_finite()));
        if !loss.total.is_finite() || !grad_finite {
            return Err(WavePlanesError::Divergence {
                step: self.step,
                snapshot: format!(
                    "mse={} tv={} sst={} ts={} time_smooth={} total={} finite_gradients={}",
                    loss.mse, loss.tv, loss.sst, loss.ts, loss.time_smooth, loss.total, grad_finite
                ),
            });
        }
        let lr = self.schedule.lr(self.step + 1);
        let mut params: Vec<&mut [f64]> = self.field.planes.iter_mut().map(|p| p.data.as_mut_slice()).collect();
        params.push(self.decoder.params.as_mut_slice());
        let mut g: Vec<&[f64]> = grads.planes.iter().map(|p| p.data.as_slice()).collect();
        g.push(grads.decoder.as_slice());
        self.adam.update(&mut params, &g, lr);
        self.step += 1;
        Ok(StepLog {
            step: self.step,
            lr,
            loss,
        })
    }

    /// Runs the remaining configured steps, calling `on_step` after each.
    pub fn fit(
        &mut self,
        frames: &[Frame],
        background: [f64; 3],
        mut on_step: impl FnMut(&Trainer, &StepLog) -> Result<()>,
    ) -> Result<Vec<StepLog>> {
        let mut logs = Vec::with_capacity(self.config.steps.saturating_sub(self.step));
        while self.step < self.config.steps {
            let batch = self.next_batch(frames, background);
            let log = self.train_step(&batch)?;
            on_step(self, &log)?;
            logs.push(log);
        }
        Ok(logs)
    }
}
