//! Reverse-mode gradients for one training step.
//!
//! The forward graph is: k-scaling -> inverse DWT -> (+1 on space-time
//! planes) -> bilinear sampling -> fusion -> color-basis decoding -> volume
//! rendering -> loss, plus regularizers on the cached planes and the
//! coefficients. The tape keeps cotangents for every cached plane; a single
//! transposed IDWT per (plane, scale) then pulls them onto the coefficients,
//! so plane-level regularizers never re-run the transform.

use rayon::prelude::*;
use serde::Serialize;

use super::regularizers::{
    reg_sst, reg_sst_grad, reg_time_smooth, reg_time_smooth_grad, reg_ts, reg_ts_grad, reg_tv, reg_tv_grad,
    RegWeights,
};
use crate::error::Result;
use crate::field::{
    sample_field_backward, sample_field_into, FeaturePlaneCache, PlaneCotangents, SamplePoint, WaveletField,
};
use crate::render::{composite, composite_backward, ray_rng, stratified_samples, ColorBasisDecoder, Ray};
use crate::wavelets::{idwt2_vjp, CoefficientPyramid, Grid};

/// Rays with ground-truth colors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainBatch {
    pub rays: Vec<Ray>,
    pub times: Vec<f64>,
    pub targets: Vec<[f64; 3]>,
    pub background: [f64; 3],
}

impl TrainBatch {
    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }
}

/// How rays are sampled during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySampling {
    pub samples_per_ray: usize,
    /// Seed for jittered sample placement; `None` uses bin centers.
    pub jitter_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct LossBreakdown {
    pub mse: f64,
    pub tv: f64,
    pub sst: f64,
    pub ts: f64,
    pub time_smooth: f64,
    pub total: f64,
}

/// Gradients for every learnable parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradients {
    pub planes: Vec<CoefficientPyramid>,
    pub decoder: Vec<f64>,
}

/// Number of fixed ray shards; partial gradients are summed in shard order,
/// so results do not depend on the worker count.
const SHARDS: usize = 8;

struct ShardResult {
    sq_err: f64,
    cotangents: PlaneCotangents,
    decoder: Vec<f64>,
}

pub struct GradientTape<'a> {
    field: &'a WaveletField,
    cache: &'a FeaturePlaneCache,
    cotangents: PlaneCotangents,
    coeff_grads: Vec<CoefficientPyramid>,
    decoder_grad: Vec<f64>,
    loss: LossBreakdown,
}

impl<'a> GradientTape<'a> {
    pub fn new(field: &'a WaveletField, cache: &'a FeaturePlaneCache, decoder_len: usize) -> Self {
        GradientTape {
            field,
            cache,
            cotangents: PlaneCotangents::zeros_like(cache),
            coeff_grads: field.planes.iter().map(|p| CoefficientPyramid::zeros(p.shape)).collect(),
            decoder_grad: vec![0.0; decoder_len],
            loss: LossBreakdown::default(),
        }
    }

    pub fn loss(&self) -> LossBreakdown {
        self.loss
    }

    /// Forward and backward over a batch with mean-squared color error.
    /// Returns the MSE (mean over rays and channels).
    pub fn record_rays(&mut self, decoder: &ColorBasisDecoder, batch: &TrainBatch, sampling: RaySampling) -> f64 {
        let n = batch.len();
        if n == 0 {
            return 0.0;
        }
        let norm = 1.0 / (3 * n) as f64;
        let shard_len = n.div_ceil(SHARDS);
        let field = self.field;
        let cache = self.cache;
        let decoder_len = self.decoder_grad.len();
        let shards: Vec<ShardResult> = (0..SHARDS)
            .into_par_iter()
            .map(|s| {
                let mut out = ShardResult {
                    sq_err: 0.0,
                    cotangents: PlaneCotangents::zeros_like(cache),
                    decoder: vec![0.0; decoder_len],
                };
                let mut scratch = RayScratch::new(field, cache);
                for i in (s * shard_len)..((s + 1) * shard_len).min(n) {
                    out.sq_err += ray_forward_backward(
                        field,
                        cache,
                        decoder,
                        batch,
                        i,
                        sampling,
                        norm,
                        &mut scratch,
                        &mut out.cotangents,
                        &mut out.decoder,
                    );
                }
                out
            })
            .collect();
        let mut sq_err = 0.0;
        for shard in &shards {
            sq_err += shard.sq_err;
            self.cotangents.add_assign(&shard.cotangents);
            for (a, b) in self.decoder_grad.iter_mut().zip(&shard.decoder) {
                *a += b;
            }
        }
        let mse = sq_err * norm;
        self.loss.mse = mse;
        self.loss.total += mse;
        mse
    }

    /// Adds the weighted regularizers on the cached planes and coefficients.
    pub fn record_regularizers(&mut self, weights: &RegWeights) {
        let (cache, field) = (self.cache, self.field);
        let ids = &cache.planes;
        let (space, time): (Vec<usize>, Vec<usize>) = (0..ids.len()).partition(|&i| !ids[i].is_space_time());

        let grids_of =
            |set: &[usize]| -> Vec<&Grid> { set.iter().flat_map(|&p| cache.grids[p].iter()).collect() };
        let space_grids = grids_of(&space);
        let time_grids = grids_of(&time);

        let tv = reg_tv(&space_grids);
        let sst = reg_sst(&time_grids);
        let time_smooth = reg_time_smooth(&time_grids);
        let time_coeffs: Vec<&CoefficientPyramid> = time.iter().map(|&p| &field.planes[p]).collect();
        let ts = reg_ts(&time_coeffs);

        {
            let mut cot: Vec<&mut Grid> = cotangents_for(&mut self.cotangents, &space);
            if weights.tv != 0.0 {
                reg_tv_grad(&space_grids, weights.tv, &mut cot);
            }
        }
        {
            let mut cot: Vec<&mut Grid> = cotangents_for(&mut self.cotangents, &time);
            if weights.sst != 0.0 {
                reg_sst_grad(&time_grids, weights.sst, &mut cot);
            }
            if weights.time_smooth != 0.0 {
                reg_time_smooth_grad(&time_grids, weights.time_smooth, &mut cot);
            }
        }
        if weights.ts != 0.0 {
            let mut grads: Vec<&mut CoefficientPyramid> = self
                .coeff_grads
                .iter_mut()
                .enumerate()
                .filter(|(i, _)| time.contains(i))
                .map(|(_, g)| g)
                .collect();
            reg_ts_grad(&time_coeffs, weights.ts, &mut grads);
        }

        self.loss.tv = tv;
        self.loss.sst = sst;
        self.loss.ts = ts;
        self.loss.time_smooth = time_smooth;
        self.loss.total +=
            weights.tv * tv + weights.sst * sst + weights.ts * ts + weights.time_smooth * time_smooth;
    }

    /// Pulls plane cotangents back through the transposed IDWT and the
    /// k-scaling. The +1 shift has unit derivative.
    pub fn backward(self) -> Result<(LossBreakdown, ModelGradients)> {
        let cfg = &self.field.config;
        let mut planes = self.coeff_grads;
        for (pi, per_scale) in self.cotangents.grids.iter().enumerate() {
            let shape = self.field.planes[pi].shape;
            for (si, &scale) in self.cache.scales.iter().enumerate() {
                let g = idwt2_vjp(&per_scale[si], shape, scale, cfg.family)?;
                let target = &mut planes[pi];
                for (i, (t, v)) in target.data.iter_mut().zip(&g.data).enumerate() {
                    if *v != 0.0 {
                        *t += cfg.k[shape.level_of(i)] * v;
                    }
                }
            }
        }
        Ok((
            self.loss,
            ModelGradients {
                planes,
                decoder: self.decoder_grad,
            },
        ))
    }
}

fn cotangents_for<'c>(cot: &'c mut PlaneCotangents, set: &[usize]) -> Vec<&'c mut Grid> {
    cot.grids
        .iter_mut()
        .enumerate()
        .filter(|(i, _)| set.contains(i))
        .flat_map(|(_, g)| g.iter_mut())
        .collect()
}

/// Reusable per-ray buffers.
struct RayScratch {
    plane_feats: Vec<f64>,
    features: Vec<f64>,
    normalized: Vec<[f64; 4]>,
    d_feature: Vec<f64>,
    d_basis: Vec<f64>,
    planes_len: usize,
    feature_len: usize,
}

impl RayScratch {
    fn new(field: &WaveletField, cache: &FeaturePlaneCache) -> Self {
        let cfg = &field.config;
        RayScratch {
            plane_feats: Vec::new(),
            features: Vec::new(),
            normalized: Vec::new(),
            d_feature: vec![0.0; cfg.feature_len()],
            d_basis: vec![0.0; 3 * cfg.feature_len()],
            planes_len: cache.scales.len() * cache.planes.len() * cfg.features,
            feature_len: cfg.feature_len(),
        }
    }
}

/// Runs one ray forward and backward, accumulating gradients scaled by
/// `norm`. Returns the ray's summed squared error.
#[allow(clippy::too_many_arguments)]
fn ray_forward_backward(
    field: &WaveletField,
    cache: &FeaturePlaneCache,
    decoder: &ColorBasisDecoder,
    batch: &TrainBatch,
    index: usize,
    sampling: RaySampling,
    norm: f64,
    scratch: &mut RayScratch,
    cotangents: &mut PlaneCotangents,
    d_params: &mut [f64],
) -> f64 {
    let cfg = &field.config;
    let ray = &batch.rays[index];
    let t = batch.times[index];
    let strat = match sampling.jitter_seed {
        Some(seed) => stratified_samples(ray, sampling.samples_per_ray, Some(&mut ray_rng(seed, index as u64))),
        None => stratified_samples::<rand_chacha::ChaCha8Rng>(ray, sampling.samples_per_ray, None),
    };
    let n = strat.distances.len();
    let acts = decoder.basis(ray.direction);

    let (pl, fl) = (scratch.planes_len, scratch.feature_len);
    scratch.plane_feats.resize(n * pl, 0.0);
    scratch.features.resize(n * fl, 0.0);
    scratch.normalized.clear();
    let mut sigmas = Vec::with_capacity(n);
    let mut colors = Vec::with_capacity(n);
    let mut decoded = Vec::with_capacity(n);
    for (i, &d) in strat.distances.iter().enumerate() {
        let p = ray.at(d);
        let qn = cfg.normalize(&SamplePoint::new(p[0], p[1], p[2], t));
        scratch.normalized.push(qn);
        sample_field_into(
            cfg,
            cache,
            &qn,
            &mut scratch.plane_feats[i * pl..(i + 1) * pl],
            &mut scratch.features[i * fl..(i + 1) * fl],
        );
        let out = decoder.decode_with(&scratch.features[i * fl..(i + 1) * fl], &acts.basis);
        sigmas.push(out.sigma);
        colors.push(out.rgb);
        decoded.push(out);
    }
    let comp = composite(&sigmas, &strat.deltas, &colors, batch.background);
    let target = batch.targets[index];
    let mut sq_err = 0.0;
    let mut d_rgb = [0.0; 3];
    for c in 0..3 {
        let e = comp.rgb[c] - target[c];
        sq_err += e * e;
        d_rgb[c] = 2.0 * e * norm;
    }

    let mut d_sigma = vec![0.0; n];
    let mut d_color = vec![[0.0; 3]; n];
    composite_backward(&strat.deltas, &colors, batch.background, &comp, d_rgb, &mut d_sigma, &mut d_color);

    scratch.d_basis.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n {
        scratch.d_feature.iter_mut().for_each(|v| *v = 0.0);
        let feature = &scratch.features[i * fl..(i + 1) * fl];
        decoder.decode_backward(
            feature,
            &acts.basis,
            &decoded[i],
            d_color[i],
            d_sigma[i],
            &mut scratch.d_feature,
            &mut scratch.d_basis,
            d_params,
        );
        sample_field_backward(
            cfg,
            cache,
            &scratch.normalized[i],
            &scratch.plane_feats[i * pl..(i + 1) * pl],
            &scratch.d_feature,
            cotangents,
        );
    }
    decoder.basis_backward(&acts, &scratch.d_basis, d_params);
    sq_err
}

/// Loss and gradients for one batch against a cache built from `field`.
pub fn loss_and_gradients(
    field: &WaveletField,
    cache: &FeaturePlaneCache,
    decoder: &ColorBasisDecoder,
    batch: &TrainBatch,
    weights: &RegWeights,
    sampling: RaySampling,
) -> Result<(LossBreakdown, ModelGradients)> {
    let mut tape = GradientTape::new(field, cache, decoder.params.len());
    tape.record_rays(decoder, batch, sampling);
    tape.record_regularizers(weights);
    tape.backward()
}

/// Forward-only loss, mirroring [`loss_and_gradients`].
pub fn loss_value(
    field: &WaveletField,
    cache: &FeaturePlaneCache,
    decoder: &ColorBasisDecoder,
    batch: &TrainBatch,
    weights: &RegWeights,
    sampling: RaySampling,
) -> LossBreakdown {
    let cfg = &field.config;
    let mut sq_err = 0.0;
    for (i, ray) in batch.rays.iter().enumerate() {
        let mut rng = sampling.jitter_seed.map(|seed| ray_rng(seed, i as u64));
        let out = crate::render::trace_ray(
            cfg,
            cache,
            decoder,
            ray,
            batch.times[i],
            sampling.samples_per_ray,
            batch.background,
            rng.as_mut(),
        );
        for c in 0..3 {
            let e = out.rgb[c] - batch.targets[i][c];
            sq_err += e * e;
        }
    }
    let mse = if batch.is_empty() { 0.0 } else { sq_err / (3 * batch.len()) as f64 };

    let ids = &cache.planes;
    let grids = |want_time: bool| -> Vec<&Grid> {
        ids.iter()
            .zip(&cache.grids)
            .filter(|(id, _)| id.is_space_time() == want_time)
            .flat_map(|(_, g)| g.iter())
            .collect()
    };
    let space_grids = grids(false);
    let time_grids = grids(true);
    let time_coeffs: Vec<&CoefficientPyramid> = ids
        .iter()
        .zip(&field.planes)
        .filter(|(id, _)| id.is_space_time())
        .map(|(_, p)| p)
        .collect();
    let tv = reg_tv(&space_grids);
    let sst = reg_sst(&time_grids);
    let ts = reg_ts(&time_coeffs);
    let time_smooth = reg_time_smooth(&time_grids);
    LossBreakdown {
        mse,
        tv,
        sst,
        ts,
        time_smooth,
        total: mse + weights.tv * tv + weights.sst * sst + weights.ts * ts + weights.time_smooth * time_smooth,
    }
}
