use super::Fusion;

#[inline]
pub fn hp_channel(values: &[f64]) -> f64 {
    values.iter().product()
}

/// Zero-agreement masked multiplication for one channel.
///
/// Zero time features are replaced by 1; the space-time factor vanishes only
/// when all three time features are zero.
#[inline]
pub fn zmm_channel(space: &[f64; 3], time: &[f64; 3]) -> f64 {
    let (mask_prod, shifted_prod) = zmm_parts(time);
    let inverse_mask = (1.0 - mask_prod).abs();
    inverse_mask * shifted_prod * hp_channel(space)
}

/// (product of zero-masks, product of mask-shifted features).
#[inline]
fn zmm_parts(time: &[f64; 3]) -> (f64, f64) {
    let mut mask_prod = 1.0;
    let mut shifted_prod = 1.0;
    for &f in time {
        let q = if f == 0.0 { 1.0 } else { 0.0 };
        mask_prod *= q;
        shifted_prod *= f + q;
    }
    (mask_prod, shifted_prod)
}

/// Zero-agreement masked addition for one channel: the mean of the time
/// features scales the product of the space features.
#[inline]
pub fn zam_channel(space: &[f64; 3], time: &[f64; 3]) -> f64 {
    (time[0] + time[1] + time[2]) / 3.0 * hp_channel(space)
}

/// Elementwise product of per-plane features.
pub fn fuse_hp(feats: &[&[f64]]) -> Vec<f64> {
    let len = feats.first().map_or(0, |f| f.len());
    let mut out = vec![1.0; len];
    for f in feats {
        for (o, v) in out.iter_mut().zip(f.iter()) {
            *o *= v;
        }
    }
    out
}

fn per_channel(space: [&[f64]; 3], time: [&[f64]; 3], kernel: fn(&[f64; 3], &[f64; 3]) -> f64) -> Vec<f64> {
    (0..space[0].len())
        .map(|c| {
            let s = [space[0][c], space[1][c], space[2][c]];
            let t = [time[0][c], time[1][c], time[2][c]];
            kernel(&s, &t)
        })
        .collect()
}

pub fn fuse_zmm(space: [&[f64]; 3], time: [&[f64]; 3]) -> Vec<f64> {
    per_channel(space, time, zmm_channel)
}

pub fn fuse_zam(space: [&[f64]; 3], time: [&[f64]; 3]) -> Vec<f64> {
    per_channel(space, time, zam_channel)
}

/// Fuses one channel given the plane values in plane order (space planes
/// first). Three planes means static mode, which is always a plain product.
#[inline]
pub(crate) fn fuse_channel(fusion: Fusion, values: &[f64]) -> f64 {
    if values.len() == 3 {
        return hp_channel(values);
    }
    let space = [values[0], values[1], values[2]];
    let time = [values[3], values[4], values[5]];
    match fusion {
        Fusion::Hp => hp_channel(values),
        Fusion::Zmm => zmm_channel(&space, &time),
        Fusion::Zam => zam_channel(&space, &time),
    }
}

/// Product of all entries except index `skip`.
#[inline]
fn product_except(values: &[f64], skip: usize) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, v)| v)
        .product()
}

/// Gradient of [`fuse_channel`] with respect to each plane value, scaled by
/// the upstream gradient `g`. ZMM masks are held constant.
#[inline]
pub(crate) fn fuse_backward(fusion: Fusion, values: &[f64], g: f64, grads: &mut [f64]) {
    let fusion = if values.len() == 3 { Fusion::Hp } else { fusion };
    match fusion {
        Fusion::Hp => {
            for (i, out) in grads.iter_mut().enumerate() {
                *out = g * product_except(values, i);
            }
        }
        Fusion::Zmm => {
            let time = [values[3], values[4], values[5]];
            let (mask_prod, shifted_prod) = zmm_parts(&time);
            let inverse_mask = (1.0 - mask_prod).abs();
            let space_prod = hp_channel(&values[..3]);
            let space_time = inverse_mask * shifted_prod;
            for i in 0..3 {
                grads[i] = g * space_time * product_except(&values[..3], i);
            }
            let shifted = time.map(|f| if f == 0.0 { 1.0 } else { f });
            for i in 0..3 {
                grads[3 + i] = g * space_prod * inverse_mask * product_except(&shifted, i);
            }
        }
        Fusion::Zam => {
            let space_prod = hp_channel(&values[..3]);
            let mean_time = (values[3] + values[4] + values[5]) / 3.0;
            for i in 0..3 {
                grads[i] = g * mean_time * product_except(&values[..3], i);
            }
            for i in 3..6 {
                grads[i] = g * space_prod / 3.0;
            }
        }
    }
}
