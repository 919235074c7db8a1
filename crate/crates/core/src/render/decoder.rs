use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, WavePlanesError};
use crate::field::quantize;

/// Learned color basis.
///
/// A small ReLU network maps the unit view direction to three basis vectors
/// (red, green, blue) of the fused-feature length; a separate, direction-free
/// vector serves as the density basis. Colors are `sigmoid(<f, b_i(d)>)` and
/// density is `softplus(<f, density_basis>)`.
///
/// Parameter layout: for each linear layer its row-major `out x in` weights
/// then its biases; the density basis last.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorBasisDecoder {
    pub feature_len: usize,
    pub hidden_width: usize,
    pub layers: usize,
    pub params: Vec<f64>,
}

/// Decoded sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub rgb: [f64; 3],
    pub sigma: f64,
}

/// Forward activations of the basis network for one direction.
#[derive(Debug, Clone)]
pub struct BasisActivations {
    /// Input of every layer; entry 0 is the direction.
    inputs: Vec<Vec<f64>>,
    /// Output of the last layer: 3 bases of `feature_len` each.
    pub basis: Vec<f64>,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

impl ColorBasisDecoder {
    fn layer_dims(feature_len: usize, hidden_width: usize, layers: usize) -> Vec<(usize, usize)> {
        (0..layers)
            .map(|l| {
                let input = if l == 0 { 3 } else { hidden_width };
                let output = if l + 1 == layers { 3 * feature_len } else { hidden_width };
                (input, output)
            })
            .collect()
    }

    pub fn param_count(feature_len: usize, hidden_width: usize, layers: usize) -> usize {
        Self::layer_dims(feature_len, hidden_width, layers)
            .iter()
            .map(|(i, o)| i * o + o)
            .sum::<usize>()
            + feature_len
    }

    fn dims(&self) -> Vec<(usize, usize)> {
        Self::layer_dims(self.feature_len, self.hidden_width, self.layers)
    }

    pub fn zeros(feature_len: usize, hidden_width: usize, layers: usize) -> Result<Self> {
        if layers < 2 || hidden_width == 0 || feature_len == 0 {
            return Err(WavePlanesError::Config(format!(
                "decoder needs >= 2 layers and nonzero widths (layers={layers}, width={hidden_width})"
            )));
        }
        Ok(ColorBasisDecoder {
            feature_len,
            hidden_width,
            layers,
            params: vec![0.0; Self::param_count(feature_len, hidden_width, layers)],
        })
    }

    pub fn from_params(feature_len: usize, hidden_width: usize, layers: usize, params: Vec<f64>) -> Result<Self> {
        let mut dec = Self::zeros(feature_len, hidden_width, layers)?;
        if params.len() != dec.params.len() {
            return Err(WavePlanesError::Dimension(format!(
                "decoder expects {} parameters, got {}",
                dec.params.len(),
                params.len()
            )));
        }
        dec.params = params;
        Ok(dec)
    }

    /// Glorot-uniform weights, zero biases, small uniform density basis.
    pub fn init(feature_len: usize, hidden_width: usize, layers: usize, seed: u64) -> Result<Self> {
        let mut dec = Self::zeros(feature_len, hidden_width, layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut offset = 0;
        for (input, output) in dec.dims() {
            let bound = (6.0 / (input + output) as f64).sqrt();
            for w in &mut dec.params[offset..offset + input * output] {
                *w = quantize(rng.gen_range(-bound..bound));
            }
            offset += input * output + output;
        }
        for w in &mut dec.params[offset..] {
            *w = quantize(rng.gen_range(-0.1..0.1));
        }
        Ok(dec)
    }

    pub fn density_basis(&self) -> &[f64] {
        &self.params[self.params.len() - self.feature_len..]
    }

    pub fn basis(&self, direction: [f64; 3]) -> BasisActivations {
        let mut inputs = Vec::with_capacity(self.layers);
        let mut current = direction.to_vec();
        let mut offset = 0;
        let dims = self.dims();
        for (l, &(input, output)) in dims.iter().enumerate() {
            let weights = &self.params[offset..offset + input * output];
            let bias = &self.params[offset + input * output..offset + input * output + output];
            let mut next: Vec<f64> = bias.to_vec();
            for (o, n) in next.iter_mut().enumerate() {
                let row = &weights[o * input..(o + 1) * input];
                *n += row.iter().zip(&current).map(|(w, x)| w * x).sum::<f64>();
            }
            if l + 1 < dims.len() {
                next.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            inputs.push(current);
            current = next;
            offset += input * output + output;
        }
        BasisActivations { inputs, basis: current }
    }

    /// Decodes a fused feature against precomputed direction bases.
    #[inline]
    pub fn decode_with(&self, feature: &[f64], basis: &[f64]) -> Decoded {
        let f = self.feature_len;
        let mut rgb = [0.0; 3];
        for (i, c) in rgb.iter_mut().enumerate() {
            let b = &basis[i * f..(i + 1) * f];
            *c = sigmoid(feature.iter().zip(b).map(|(x, y)| x * y).sum());
        }
        let z: f64 = feature.iter().zip(self.density_basis()).map(|(x, y)| x * y).sum();
        Decoded { rgb, sigma: softplus(z) }
    }

    pub fn decode(&self, feature: &[f64], direction: [f64; 3]) -> Decoded {
        let acts = self.basis(direction);
        self.decode_with(feature, &acts.basis)
    }

    /// Backward of [`decode_with`](Self::decode_with) for one sample.
    ///
    /// Accumulates into `d_feature`, `d_basis` and the density-basis part of
    /// `d_params`.
    #[inline]
    pub fn decode_backward(
        &self,
        feature: &[f64],
        basis: &[f64],
        decoded: &Decoded,
        d_rgb: [f64; 3],
        d_sigma: f64,
        d_feature: &mut [f64],
        d_basis: &mut [f64],
        d_params: &mut [f64],
    ) {
        let f = self.feature_len;
        for i in 0..3 {
            let s = decoded.rgb[i];
            let g = d_rgb[i] * s * (1.0 - s);
            if g == 0.0 {
                continue;
            }
            let b = &basis[i * f..(i + 1) * f];
            let db = &mut d_basis[i * f..(i + 1) * f];
            for k in 0..f {
                d_feature[k] += g * b[k];
                db[k] += g * feature[k];
            }
        }
        // softplus'(z) = sigmoid(z) = 1 - exp(-softplus(z))
        let g = d_sigma * -(-decoded.sigma).exp_m1();
        if g != 0.0 {
            let density = self.density_basis();
            let n = d_params.len();
            let d_density = &mut d_params[n - f..];
            for k in 0..f {
                d_feature[k] += g * density[k];
                d_density[k] += g * feature[k];
            }
        }
    }

    /// Backpropagates `d_basis` through the network, accumulating weight and
    /// bias gradients into `d_params`.
    pub fn basis_backward(&self, acts: &BasisActivations, d_basis: &[f64], d_params: &mut [f64]) {
        let dims = self.dims();
        let mut offsets = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for &(i, o) in &dims {
            offsets.push(offset);
            offset += i * o + o;
        }
        let mut grad_out = d_basis.to_vec();
        for l in (0..dims.len()).rev() {
            let (input, output) = dims[l];
            let x = &acts.inputs[l];
            let start = offsets[l];
            let weights = &self.params[start..start + input * output];
            let mut grad_in = vec![0.0; input];
            {
                let (dw, rest) = d_params[start..].split_at_mut(input * output);
                let db = &mut rest[..output];
                for o in 0..output {
                    let g = grad_out[o];
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    let row = &weights[o * input..(o + 1) * input];
                    let drow = &mut dw[o * input..(o + 1) * input];
                    for k in 0..input {
                        drow[k] += g * x[k];
                        grad_in[k] += g * row[k];
                    }
                }
            }
            if l > 0 {
                // ReLU: inputs of layer l are post-activation outputs of l-1.
                for (g, &a) in grad_in.iter_mut().zip(x) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            grad_out = grad_in;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_forward(dec: &ColorBasisDecoder, f: &[f64], d: [f64; 3]) -> Decoded {
        // Independent re-implementation with explicit index arithmetic.
        let mut x: Vec<f64> = d.to_vec();
        let mut off = 0;
        for l in 0..dec.layers {
            let n_in = x.len();
            let n_out = if l + 1 == dec.layers { 3 * dec.feature_len } else { dec.hidden_width };
            let mut y = vec![0.0; n_out];
            for o in 0..n_out {
                let mut acc = dec.params[off + n_in * n_out + o];
                for i in 0..n_in {
                    acc += dec.params[off + o * n_in + i] * x[i];
                }
                y[o] = if l + 1 < dec.layers && acc < 0.0 { 0.0 } else { acc };
            }
            off += n_in * n_out + n_out;
            x = y;
        }
        let fl = dec.feature_len;
        let mut rgb = [0.0; 3];
        for c in 0..3 {
            let mut z = 0.0;
            for k in 0..fl {
                z += f[k] * x[c * fl + k];
            }
            rgb[c] = 1.0 / (1.0 + (-z).exp());
        }
        let mut z = 0.0;
        for k in 0..fl {
            z += f[k] * dec.params[off + k];
        }
        Decoded {
            rgb,
            sigma: (1.0 + z.exp()).ln(),
        }
    }

    #[test]
    fn zero_feature_decodes_to_gray() {
        let dec = ColorBasisDecoder::init(8, 16, 3, 1).unwrap();
        let out = dec.decode(&[0.0; 8], [0.0, 0.0, -1.0]);
        assert_eq!(out.rgb, [0.5, 0.5, 0.5]);
        assert!((out.sigma - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn density_ignores_direction() {
        let dec = ColorBasisDecoder::init(8, 16, 4, 2).unwrap();
        let f: Vec<f64> = (0..8).map(|i| i as f64 * 0.1 - 0.3).collect();
        let a = dec.decode(&f, [0.0, 0.0, -1.0]);
        let b = dec.decode(&f, [0.6, 0.8, 0.0]);
        assert_eq!(a.sigma, b.sigma);
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for layers in [3, 4] {
            let dec = ColorBasisDecoder::init(12, 64, layers, 3).unwrap();
            for _ in 0..20 {
                let f: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let d = [v[0] / n, v[1] / n, v[2] / n];
                let a = dec.decode(&f, d);
                let b = scalar_forward(&dec, &f, d);
                for c in 0..3 {
                    assert!((a.rgb[c] - b.rgb[c]).abs() < 1e-6);
                }
                assert!((a.sigma - b.sigma).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(ColorBasisDecoder::zeros(4, 8, 1).is_err());
        assert!(ColorBasisDecoder::from_params(4, 8, 3, vec![0.0; 3]).is_err());
    }

    #[test]
    fn softplus_and_sigmoid_stable() {
        assert_eq!(softplus(100.0), 100.0);
        assert!(softplus(-100.0) > 0.0);
        assert!((sigmoid(-800.0)).abs() < 1e-300);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
