use rand::Rng;

use super::camera::Ray;

/// Stratified sample distances along a ray: `n` equal bins spanning
/// `[near, far]`, one sample per bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratified {
    pub distances: Vec<f64>,
    pub deltas: Vec<f64>,
}

/// Bin centers when `rng` is `None`, a uniform draw inside each bin otherwise.
pub fn stratified_samples<R: Rng + ?Sized>(ray: &Ray, n: usize, rng: Option<&mut R>) -> Stratified {
    let n = n.max(1);
    let width = (ray.far - ray.near) / n as f64;
    let mut distances = Vec::with_capacity(n);
    match rng {
        Some(rng) => {
            for i in 0..n {
                let lo = ray.near + i as f64 * width;
                distances.push(lo + rng.gen::<f64>() * width);
            }
        }
        None => {
            for i in 0..n {
                distances.push(ray.near + (i as f64 + 0.5) * width);
            }
        }
    }
    Stratified {
        distances,
        deltas: vec![width; n],
    }
}

/// Decoded samples along one ray, ordered by depth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RaySamples {
    pub positions: Vec<[f64; 3]>,
    pub deltas: Vec<f64>,
    pub colors: Vec<[f64; 3]>,
    pub sigmas: Vec<f64>,
}

/// Result of compositing one ray.
#[derive(Debug, Clone, PartialEq)]
pub struct Composite {
    /// Pixel color including the background contribution.
    pub rgb: [f64; 3],
    /// `T_i * (1 - exp(-sigma_i * delta_i))` per sample.
    pub weights: Vec<f64>,
    /// Transmittance left after the last sample.
    pub residual: f64,
}

impl Composite {
    pub fn alpha(&self) -> f64 {
        1.0 - self.residual
    }
}

/// Alpha-composites samples front to back and adds the residual
/// transmittance times `background`.
pub fn composite(sigmas: &[f64], deltas: &[f64], colors: &[[f64; 3]], background: [f64; 3]) -> Composite {
    let mut weights = Vec::with_capacity(sigmas.len());
    let mut rgb = [0.0; 3];
    let mut optical_depth = 0.0;
    let mut transmittance = 1.0;
    for ((sigma, delta), color) in sigmas.iter().zip(deltas).zip(colors) {
        let tau = sigma * delta;
        let next = (-(optical_depth + tau)).exp();
        // T_i (1 - e^{-tau}) = T_i - T_{i+1}; the form below avoids cancellation.
        let w = transmittance * -(-tau).exp_m1();
        for c in 0..3 {
            rgb[c] += w * color[c];
        }
        weights.push(w);
        optical_depth += tau;
        transmittance = next;
    }
    for c in 0..3 {
        rgb[c] += transmittance * background[c];
    }
    Composite {
        rgb,
        weights,
        residual: transmittance,
    }
}

pub fn render_ray(samples: &RaySamples, background: [f64; 3]) -> [f64; 3] {
    composite(&samples.sigmas, &samples.deltas, &samples.colors, background).rgb
}

/// Gradients of the composited color with respect to every sigma and color,
/// given the forward `result` and upstream `d_rgb`.
pub fn composite_backward(
    deltas: &[f64],
    colors: &[[f64; 3]],
    background: [f64; 3],
    result: &Composite,
    d_rgb: [f64; 3],
    d_sigma: &mut [f64],
    d_color: &mut [[f64; 3]],
) {
    let n = deltas.len();
    // Suffix: sum_{i>k} w_i c_i + T_{N+1} bg, dotted with d_rgb.
    let mut tail = result.residual * (0..3).map(|c| background[c] * d_rgb[c]).sum::<f64>();
    let mut transmittance_next = result.residual;
    for k in (0..n).rev() {
        let dot_c: f64 = (0..3).map(|c| colors[k][c] * d_rgb[c]).sum();
        let w = result.weights[k];
        for c in 0..3 {
            d_color[k][c] = w * d_rgb[c];
        }
        // d C / d sigma_k = delta_k (T_{k+1} c_k - tail_k)
        d_sigma[k] = deltas[k] * (transmittance_next * dot_c - tail);
        tail += w * dot_c;
        transmittance_next += w;
    }
}
