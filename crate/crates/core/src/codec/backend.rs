use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use xz2::stream::{LzmaOptions, Stream};

use crate::error::{Result, WavePlanesError};

/// Lossless byte-stream compressor wrapped around the container payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Raw,
    Gzip,
    Bzip2,
    Lzma,
}

impl Backend {
    pub const ALL: [Backend; 4] = [Backend::Raw, Backend::Gzip, Backend::Bzip2, Backend::Lzma];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Backend::Raw => "raw",
            Backend::Gzip => "gzip",
            Backend::Bzip2 => "bzip2",
            Backend::Lzma => "lzma",
        }
    }

    pub fn compress(self, data: &[u8]) -> Result<Vec<u8>> {
        let codec_err = |e: std::io::Error| WavePlanesError::Codec(format!("{} compression failed: {e}", self.name()));
        match self {
            Backend::Raw => Ok(data.to_vec()),
            Backend::Gzip => {
                let mut enc = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::best());
                enc.write_all(data).map_err(codec_err)?;
                enc.finish().map_err(codec_err)
            }
            Backend::Bzip2 => {
                let mut enc = bzip2::write::BzEncoder::new(Vec::new(), bzip2::Compression::best());
                enc.write_all(data).map_err(codec_err)?;
                enc.finish().map_err(codec_err)
            }
            Backend::Lzma => {
                let opts = LzmaOptions::new_preset(9)
                    .map_err(|e| WavePlanesError::Codec(format!("lzma options: {e}")))?;
                let stream =
                    Stream::new_lzma_encoder(&opts).map_err(|e| WavePlanesError::Codec(format!("lzma encoder: {e}")))?;
                let mut enc = xz2::write::XzEncoder::new_stream(Vec::new(), stream);
                enc.write_all(data).map_err(codec_err)?;
                enc.finish().map_err(codec_err)
            }
        }
    }

    /// Failures are reported as corruption: the input did not come from a
    /// matching encoder.
    pub fn decompress(self, data: &[u8]) -> Result<Vec<u8>> {
        let corrupt = |e: std::io::Error| WavePlanesError::CorruptModel(format!("{} stream: {e}", self.name()));
        let mut out = Vec::new();
        match self {
            Backend::Raw => out.extend_from_slice(data),
            Backend::Gzip => {
                flate2::read::GzDecoder::new(data).read_to_end(&mut out).map_err(corrupt)?;
            }
            Backend::Bzip2 => {
                bzip2::read::BzDecoder::new(data).read_to_end(&mut out).map_err(corrupt)?;
            }
            Backend::Lzma => {
                let stream = Stream::new_lzma_decoder(u64::MAX)
                    .map_err(|e| WavePlanesError::Codec(format!("lzma decoder: {e}")))?;
                xz2::read::XzDecoder::new_stream(data, stream)
                    .read_to_end(&mut out)
                    .map_err(corrupt)?;
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Backend {
    type Err = WavePlanesError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s.to_ascii_lowercase())
            .ok_or_else(|| WavePlanesError::Config(format!("unknown backend {s:?} (raw, gzip, bzip2, lzma)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_backend_round_trips() {
        let data: Vec<u8> = (0..5000u32).map(|i| (i * 7 % 13) as u8).collect();
        for b in Backend::ALL {
            let packed = b.compress(&data).unwrap();
            assert_eq!(b.decompress(&packed).unwrap(), data, "{b}");
        }
    }

    #[test]
    fn names_and_ids() {
        for b in Backend::ALL {
            assert_eq!(b.name().parse::<Backend>().unwrap(), b);
            assert_eq!(Backend::from_id(b.id()), Some(b));
        }
        assert!(Backend::from_id(4).is_none());
    }

    #[test]
    fn garbage_is_corrupt() {
        for b in [Backend::Gzip, Backend::Bzip2, Backend::Lzma] {
            assert!(matches!(b.decompress(&[1, 2, 3, 4]), Err(WavePlanesError::CorruptModel(_))), "{b}");
        }
    }
}
