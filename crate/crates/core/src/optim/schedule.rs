use std::f64::consts::PI;

/// Linear warm-up followed by cosine annealing to zero.
///
/// Steps count optimizer updates starting at 1; step 0 is treated as step 1
/// so the first update always has a positive rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base: f64,
    pub warmup: usize,
    pub total: usize,
}

impl LrSchedule {
    pub fn new(base: f64, warmup: usize, total: usize) -> Self {
        LrSchedule { base, warmup, total }
    }

    pub fn lr(&self, step: usize) -> f64 {
        let step = step.max(1);
        if step <= self.warmup {
            return self.base * step as f64 / self.warmup as f64;
        }
        if self.total <= self.warmup {
            return self.base;
        }
        let progress = ((step - self.warmup) as f64 / (self.total - self.warmup) as f64).min(1.0);
        0.5 * self.base * (1.0 + (PI * progress).cos())
    }
}
