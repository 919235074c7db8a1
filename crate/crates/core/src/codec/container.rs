use std::fs;
use std::path::Path;

use serde::Serialize;

use super::backend::Backend;
use super::sparse::{threshold_coeffs, SparseCoeffMap};
use crate::error::{Result, WavePlanesError};
use crate::field::{Aabb, Fusion, ModelConfig, WaveletField};
use crate::render::ColorBasisDecoder;
use crate::wavelets::WaveletFamily;

pub const MAGIC: &[u8; 4] = b"WVPL";
pub const FORMAT_VERSION: u16 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(WavePlanesError::CorruptModel(format!(
                "truncated payload: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        self.u32().map(|v| v as usize)
    }
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// Guards allocations against counts larger than the remaining bytes.
    fn count(&mut self, item_size: usize) -> Result<usize> {
        let n = self.usize()?;
        if n.saturating_mul(item_size) > self.data.len() - self.pos {
            return Err(WavePlanesError::CorruptModel(format!("count {n} exceeds payload size")));
        }
        Ok(n)
    }
}

/// Config block: features, levels, spatial_res, time_res as u32; scales as
/// u32 count + u32 each; family id u8; fusion id u8; k as u32 count + f64
/// each; bbox min then max as 6 f64; t_range as 2 f64; static flag u8;
/// decoder layers and width as u32.
fn write_config(w: &mut Writer, c: &ModelConfig) {
    w.u32(c.features);
    w.u32(c.levels);
    w.u32(c.spatial_res);
    w.u32(c.time_res);
    w.u32(c.scales.len());
    c.scales.iter().for_each(|&s| w.u32(s));
    w.u8(c.family.id());
    w.u8(c.fusion.id());
    w.u32(c.k.len());
    c.k.iter().for_each(|&k| w.f64(k));
    c.bbox.min.iter().chain(&c.bbox.max).for_each(|&v| w.f64(v));
    w.f64(c.t_range[0]);
    w.f64(c.t_range[1]);
    w.u8(c.static_mode as u8);
    w.u32(c.decoder_layers);
    w.u32(c.decoder_width);
}

fn read_config(r: &mut Reader) -> Result<ModelConfig> {
    let corrupt = |m: String| WavePlanesError::CorruptModel(m);
    let features = r.usize()?;
    let levels = r.usize()?;
    let spatial_res = r.usize()?;
    let time_res = r.usize()?;
    let n = r.count(4)?;
    let scales = (0..n).map(|_| r.usize()).collect::<Result<Vec<_>>>()?;
    let fid = r.u8()?;
    let family = WaveletFamily::from_id(fid).ok_or_else(|| corrupt(format!("unknown wavelet family id {fid}")))?;
    let uid = r.u8()?;
    let fusion = Fusion::from_id(uid).ok_or_else(|| corrupt(format!("unknown fusion id {uid}")))?;
    let n = r.count(8)?;
    let k = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    let mut b = [0.0; 6];
    for v in b.iter_mut() {
        *v = r.f64()?;
    }
    let t_range = [r.f64()?, r.f64()?];
    let static_mode = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(corrupt(format!("invalid static flag {v}"))),
    };
    let decoder_layers = r.usize()?;
    let decoder_width = r.usize()?;
    let config = ModelConfig {
        features,
        levels,
        spatial_res,
        time_res,
        scales,
        family,
        fusion,
        k,
        bbox: Aabb {
            min: [b[0], b[1], b[2]],
            max: [b[3], b[4], b[5]],
        },
        t_range,
        static_mode,
        decoder_layers,
        decoder_width,
    };
    let validated = config
        .clone()
        .validated()
        .map_err(|e| corrupt(format!("stored configuration is invalid: {e}")))?;
    if validated != config {
        return Err(corrupt("stored configuration is not in canonical form".into()));
    }
    Ok(config)
}

fn encode_payload(field: &WaveletField, decoder: &ColorBasisDecoder) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u16(FORMAT_VERSION);
    write_config(&mut w, &field.config);
    w.u32(decoder.params.len());
    decoder.params.iter().for_each(|&p| w.f32(p as f32));
    for plane in &field.planes {
        let entries = SparseCoeffMap::to_sparse(plane).sorted();
        w.u32(entries.len());
        for (i, v) in entries {
            w.u32(i as usize);
            w.f32(v);
        }
    }
    w.0
}

/// Thresholds the field at `tau` and serializes it with `backend`.
/// Parameters are written at 32-bit precision.
pub fn compress_model(field: &WaveletField, decoder: &ColorBasisDecoder, tau: f64, backend: Backend) -> Result<Vec<u8>> {
    if !(tau.is_finite() && tau >= 0.0) {
        return Err(WavePlanesError::Config(format!("threshold must be finite and >= 0, got {tau}")));
    }
    let thresholded = threshold_coeffs(field, tau);
    let payload = encode_payload(&thresholded, decoder);
    let mut out = Vec::with_capacity(payload.len() / 2 + 5);
    out.extend_from_slice(MAGIC);
    out.push(backend.id());
    out.extend(backend.compress(&payload)?);
    Ok(out)
}

/// Header, configuration and sparsity of a serialized model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelInfo {
    pub backend: Backend,
    pub version: u16,
    pub config: ModelConfig,
    pub decoder_params: usize,
    pub planes: Vec<PlaneStats>,
    pub file_bytes: usize,
    pub payload_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneStats {
    pub plane: String,
    pub coefficients: usize,
    pub nonzero: usize,
    /// Fraction of zero coefficients.
    pub sparsity: f64,
}

struct Decoded {
    info: ModelInfo,
    field: WaveletField,
    decoder: ColorBasisDecoder,
}

fn decode(bytes: &[u8]) -> Result<Decoded> {
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(WavePlanesError::CorruptModel("missing WVPL magic".into()));
    }
    let backend = Backend::from_id(bytes[4])
        .ok_or_else(|| WavePlanesError::CorruptModel(format!("unknown backend id {}", bytes[4])))?;
    let payload = backend.decompress(&bytes[5..])?;
    let mut r = Reader { data: &payload, pos: 0 };
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(WavePlanesError::CorruptModel(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let config = read_config(&mut r)?;
    let n = r.count(4)?;
    let params = (0..n).map(|_| r.f32().map(|v| v as f64)).collect::<Result<Vec<_>>>()?;
    let decoder = ColorBasisDecoder::from_params(config.feature_len(), config.decoder_width, config.decoder_layers, params)
        .map_err(|e| WavePlanesError::CorruptModel(e.to_string()))?;
    let mut field = WaveletField::zeros(config.clone())?;
    let mut stats = Vec::with_capacity(field.planes.len());
    for (id, plane) in config.planes().iter().zip(field.planes.iter_mut()) {
        let n = r.count(8)?;
        let len = plane.data.len();
        let mut last: Option<u32> = None;
        for _ in 0..n {
            let i = r.u32()?;
            let v = r.f32()?;
            if last.is_some_and(|l| l >= i) {
                return Err(WavePlanesError::CorruptModel(format!("entries of plane {} not ascending", id.name())));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(WavePlanesError::CorruptModel(format!("invalid stored value {v} in plane {}", id.name())));
            }
            let slot = plane.data.get_mut(i as usize).ok_or_else(|| {
                WavePlanesError::CorruptModel(format!("index {i} out of range for plane {} ({len})", id.name()))
            })?;
            *slot = v as f64;
            last = Some(i);
        }
        stats.push(PlaneStats {
            plane: id.name().to_string(),
            coefficients: len,
            nonzero: n,
            sparsity: 1.0 - n as f64 / len as f64,
        });
    }
    if r.pos != payload.len() {
        return Err(WavePlanesError::CorruptModel(format!(
            "{} trailing bytes after the last plane",
            payload.len() - r.pos
        )));
    }
    Ok(Decoded {
        info: ModelInfo {
            backend,
            version,
            config,
            decoder_params: decoder.params.len(),
            planes: stats,
            file_bytes: bytes.len(),
            payload_bytes: payload.len(),
        },
        field,
        decoder,
    })
}

pub fn decompress_model(bytes: &[u8]) -> Result<(WaveletField, ColorBasisDecoder)> {
    let d = decode(bytes)?;
    Ok((d.field, d.decoder))
}

pub fn inspect(bytes: &[u8]) -> Result<ModelInfo> {
    decode(bytes).map(|d| d.info)
}

/// Per-plane sparsity after thresholding at `tau`.
pub fn plane_stats(field: &WaveletField, tau: f64) -> Vec<PlaneStats> {
    let t = threshold_coeffs(field, tau);
    t.plane_ids()
        .iter()
        .zip(&t.planes)
        .map(|(id, p)| {
            let nonzero = p.data.iter().filter(|v| **v != 0.0).count();
            PlaneStats {
                plane: id.name().to_string(),
                coefficients: p.data.len(),
                nonzero,
                sparsity: 1.0 - nonzero as f64 / p.data.len() as f64,
            }
        })
        .collect()
}

/// Dense checkpoint: the same container with no threshold and no compression.
pub fn save_checkpoint(path: &Path, field: &WaveletField, decoder: &ColorBasisDecoder) -> Result<()> {
    fs::write(path, compress_model(field, decoder, 0.0, Backend::Raw)?)?;
    Ok(())
}

/// Reads a checkpoint or compressed model.
pub fn load_model(path: &Path) -> Result<(WaveletField, ColorBasisDecoder)> {
    decompress_model(&fs::read(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub backend: Backend,
    pub bytes: usize,
    /// Raw size divided by this backend's size.
    pub ratio_vs_raw: f64,
    /// The decoded model equals the thresholded model exactly.
    pub lossless: bool,
}

/// Sizes of the model thresholded at `tau` under each backend.
pub fn bench_codec(
    field: &WaveletField,
    decoder: &ColorBasisDecoder,
    tau: f64,
    backends: &[Backend],
) -> Result<Vec<BenchRow>> {
    if backends.is_empty() {
        return Err(WavePlanesError::Config("bench needs at least one backend".into()));
    }
    let expected = threshold_coeffs(field, tau);
    let raw = compress_model(field, decoder, tau, Backend::Raw)?.len();
    let mut rows = Vec::with_capacity(backends.len());
    for &backend in backends {
        let bytes = compress_model(field, decoder, tau, backend)?;
        let (f, d) = decompress_model(&bytes)?;
        rows.push(BenchRow {
            backend,
            bytes: bytes.len(),
            ratio_vs_raw: raw as f64 / bytes.len() as f64,
            lossless: f == expected && d.params == decoder.params,
        });
    }
    Ok(rows)
}
