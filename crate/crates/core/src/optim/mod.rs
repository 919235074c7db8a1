//! Gradients, regularizers, the optimizer and the training loop.

mod adam;
mod regularizers;
mod schedule;
mod tape;
mod train;

pub use adam::Adam;
pub use regularizers::{
    reg_sst, reg_sst_grad, reg_time_smooth, reg_time_smooth_grad, reg_ts, reg_ts_grad, reg_tv, reg_tv_grad,
    RegWeights,
};
pub use schedule::LrSchedule;
pub use tape::{
    loss_and_gradients, loss_value, GradientTape, LossBreakdown, ModelGradients, RaySampling, TrainBatch,
};
pub use train::{sample_batch, StepLog, TrainConfig, Trainer};
