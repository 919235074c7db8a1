#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use waveplanes::field::{refresh_cache, Fusion, ModelConfig, WaveletField};
use waveplanes::optim::{loss_and_gradients, loss_value, RaySampling, RegWeights, TrainBatch};
use waveplanes::render::{look_at, Background, Camera, ColorBasisDecoder};
use waveplanes::wavelets::Grid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(rng: &mut ChaCha8Rng, channels: usize, height: usize, width: usize) -> Grid {
    let data = (0..channels * height * width).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Grid::from_vec(channels, height, width, data).unwrap()
}

/// Features 4, 8x8 planes, two levels, both scales.
pub fn tiny_config(fusion: Fusion) -> ModelConfig {
    ModelConfig {
        features: 4,
        levels: 2,
        spatial_res: 8,
        time_res: 8,
        scales: vec![1, 2],
        fusion,
        decoder_width: 8,
        decoder_layers: 3,
        ..Default::default()
    }
    .validated()
    .unwrap()
}

/// Random coefficients on every plane, kept at least 0.01 away from zero.
pub fn random_field(config: ModelConfig, seed: u64) -> WaveletField {
    let mut field = WaveletField::zeros(config).unwrap();
    let mut r = rng(seed);
    let ids = field.plane_ids();
    for (id, plane) in ids.iter().zip(field.planes.iter_mut()) {
        let amp = if id.is_space_time() { 0.3 } else { 0.6 };
        for v in plane.data.iter_mut() {
            let m: f64 = r.gen_range(0.01..amp);
            *v = if r.gen::<bool>() { m } else { -m };
        }
    }
    field
}

pub fn random_batch(rays: usize, seed: u64) -> TrainBatch {
    let mut r = rng(seed);
    let mut batch = TrainBatch {
        rays: Vec::new(),
        times: Vec::new(),
        targets: Vec::new(),
        background: Background::White.rgb(),
    };
    for _ in 0..rays {
        let az: f64 = r.gen_range(0.0..std::f64::consts::TAU);
        let pos = [4.0 * az.cos(), 4.0 * az.sin(), r.gen_range(-1.0..1.0)];
        let cam = Camera::from_fov(look_at(pos, [0.0; 3]), 0.7, 16, 16, Background::White).unwrap();
        let (x, y) = (r.gen_range(2.0..14.0), r.gen_range(2.0..14.0));
        batch.rays.push(cam.ray_through(x, y, 2.0, 6.0));
        batch.times.push(r.gen_range(0.0..1.0));
        batch.targets.push([r.gen(), r.gen(), r.gen()]);
    }
    batch
}

pub const GRAD_WEIGHTS: RegWeights = RegWeights {
    tv: 0.05,
    sst: 0.05,
    ts: 0.002,
    time_smooth: 0.05,
};

#[derive(Debug)]
pub struct GradReport {
    pub checked: usize,
    pub max_rel: f64,
    pub worst: String,
}

fn rel_err(a: f64, n: f64) -> f64 {
    let scale = a.abs().max(n.abs());
    // Both vanish: compare absolutely.
    if scale < 1e-10 {
        return (a - n).abs() / 1e-10;
    }
    (a - n).abs() / scale
}

/// Analytic gradients of the full loss against central differences with
/// step `h`, for every coefficient and decoder parameter of a tiny model.
pub fn gradient_check(fusion: Fusion, seed: u64, h: f64) -> GradReport {
    let config = tiny_config(fusion);
    let field = random_field(config.clone(), seed);
    let decoder =
        ColorBasisDecoder::init(config.feature_len(), config.decoder_width, config.decoder_layers, seed + 1).unwrap();
    let batch = random_batch(4, seed + 2);
    let sampling = RaySampling {
        samples_per_ray: 8,
        jitter_seed: None,
    };
    let cache = refresh_cache(&field, 0).unwrap();
    let (_, grads) = loss_and_gradients(&field, &cache, &decoder, &batch, &GRAD_WEIGHTS, sampling).unwrap();

    let mut report = GradReport {
        checked: 0,
        max_rel: 0.0,
        worst: String::new(),
    };
    let mut record = |name: String, a: f64, n: f64| {
        let e = rel_err(a, n);
        report.checked += 1;
        if e > report.max_rel {
            report.max_rel = e;
            report.worst = format!("{name}: analytic {a:e} numeric {n:e}");
        }
    };

    let mut f = field.clone();
    for p in 0..f.planes.len() {
        for i in 0..f.planes[p].data.len() {
            let orig = f.planes[p].data[i];
            let mut eval = |v: f64| {
                f.planes[p].data[i] = v;
                let c = refresh_cache(&f, 0).unwrap();
                loss_value(&f, &c, &decoder, &batch, &GRAD_WEIGHTS, sampling).total
            };
            let n = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
            f.planes[p].data[i] = orig;
            record(format!("plane {p} coefficient {i}"), grads.planes[p].data[i], n);
        }
    }
    let mut d = decoder.clone();
    for i in 0..d.params.len() {
        let orig = d.params[i];
        let mut eval = |v: f64| {
            d.params[i] = v;
            loss_value(&field, &cache, &d, &batch, &GRAD_WEIGHTS, sampling).total
        };
        let n = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
        d.params[i] = orig;
        record(format!("decoder parameter {i}"), grads.decoder[i], n);
    }
    report
}

/// Plain double-loop regularizer oracles.
pub mod oracle {
    use waveplanes::wavelets::{CoefficientPyramid, Grid};

    pub fn tv(grids: &[&Grid]) -> f64 {
        let mut total = 0.0;
        for g in grids {
            let mut s = 0.0;
            for c in 0..g.channels {
                for i in 0..g.height {
                    for j in 0..g.width {
                        if i >= 1 {
                            s += (g.get(c, i, j) - g.get(c, i - 1, j)).powi(2);
                        }
                        if j >= 1 {
                            s += (g.get(c, i, j) - g.get(c, i, j - 1)).powi(2);
                        }
                    }
                }
            }
            total += s / (g.height * g.width) as f64;
        }
        total / grids.len() as f64
    }

    /// Second difference along columns (the spatial axis of a time plane).
    pub fn sst(grids: &[&Grid]) -> f64 {
        let mut total = 0.0;
        for g in grids {
            let mut s = 0.0;
            for c in 0..g.channels {
                for t in 0..g.height {
                    for i in 1..g.width - 1 {
                        s += (g.get(c, t, i - 1) - 2.0 * g.get(c, t, i) + g.get(c, t, i + 1)).powi(2);
                    }
                }
            }
            total += s / (g.height * g.width) as f64;
        }
        total / grids.len() as f64
    }

    /// Second difference along rows (the time axis).
    pub fn time_smooth(grids: &[&Grid]) -> f64 {
        let mut total = 0.0;
        for g in grids {
            let mut s = 0.0;
            for c in 0..g.channels {
                for t in 1..g.height - 1 {
                    for i in 0..g.width {
                        s += (g.get(c, t - 1, i) - 2.0 * g.get(c, t, i) + g.get(c, t + 1, i)).powi(2);
                    }
                }
            }
            total += s / (g.height * g.width) as f64;
        }
        total / grids.len() as f64
    }

    pub fn ts(pyramids: &[&CoefficientPyramid]) -> f64 {
        let mut s = 0.0;
        for p in pyramids {
            for v in &p.data {
                s += v.abs();
            }
        }
        s
    }
}
