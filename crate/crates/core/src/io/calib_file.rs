//! Calibration file: per-pixel bias coefficients, validity and noise model.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size        field
//! 0       4           magic "DCAL"
//! 4       4   u32     format version (1)
//! 8       4   u32     width
//! 12      4   u32     height
//! 16      32  f64×4   noise model a, b, c, sigma_floor
//! 48      24·N f64×3  per-pixel (a, b, c), row-major, N = width·height
//! ..      ⌈N/8⌉       validity bitmap, pixel i at byte i/8, bit i%8 (LSB first)
//! ..      4   u32     provenance length L
//! ..      L           provenance, UTF-8 JSON
//! ```
//!
//! The JSON form carries the same content and is meant for inspection.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::error_model::{BiasMap, NoiseModel, PixelBias};
use crate::io::atomic_write;

pub const MAGIC: &[u8; 4] = b"DCAL";
pub const FORMAT_VERSION: u32 = 1;
const JSON_FORMAT_TAG: &str = "DCAL-JSON";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationFormat {
    Binary,
    Json,
}

/// Where a calibration came from. Contains no timestamps, so identical
/// inputs give identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// "calibration" for estimates, "ground_truth" for simulator output.
    pub kind: String,
    pub tool_version: String,
    /// Order-independent SHA-256 of the input dataset, hex.
    pub dataset_hash: String,
    pub config: serde_json::Value,
}

impl Provenance {
    pub fn new(kind: &str, dataset_hash: String, config: serde_json::Value) -> Self {
        Self {
            kind: kind.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            dataset_hash,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationFile {
    pub bias_map: BiasMap,
    pub noise: NoiseModel,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct JsonNoise {
    a: f64,
    b: f64,
    c: f64,
    sigma_floor: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonCalibration {
    format: String,
    version: u32,
    width: u32,
    height: u32,
    noise: JsonNoise,
    coefficients: Vec<[f64; 3]>,
    valid: Vec<u8>,
    provenance: Provenance,
}

impl CalibrationFile {
    pub fn to_binary(&self) -> Vec<u8> {
        let map = &self.bias_map;
        let n = map.coefficients().len();
        let provenance =
            serde_json::to_vec(&self.provenance).expect("provenance serializes to JSON");
        let mut out = Vec::with_capacity(48 + 24 * n + n.div_ceil(8) + 4 + provenance.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&map.width().to_le_bytes());
        out.extend_from_slice(&map.height().to_le_bytes());
        for v in [self.noise.a, self.noise.b, self.noise.c, self.noise.sigma_floor] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for p in map.coefficients() {
            for v in [p.a, p.b, p.c] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let mut bitmap = vec![0u8; n.div_ceil(8)];
        for (i, _) in map.valid().iter().enumerate().filter(|(_, v)| **v) {
            bitmap[i / 8] |= 1 << (i % 8);
        }
        out.extend_from_slice(&bitmap);
        out.extend_from_slice(&(provenance.len() as u32).to_le_bytes());
        out.extend_from_slice(&provenance);
        out
    }

    pub fn from_binary(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptFile {
            path: path.into(),
            reason,
        };
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4).map_err(&corrupt)? != MAGIC {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: "missing DCAL magic".into(),
            });
        }
        let version = cur.u32().map_err(&corrupt)?;
        if version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("calibration format version {version} not supported"),
            });
        }
        let width = cur.u32().map_err(&corrupt)?;
        let height = cur.u32().map_err(&corrupt)?;
        let n = width as usize * height as usize;
        let noise = [(); 4].map(|_| cur.f64());
        let noise: Vec<f64> = noise.into_iter().collect::<Result<_, _>>().map_err(&corrupt)?;
        let expected = 24 * n + n.div_ceil(8) + 4;
        if cur.remaining() < expected {
            return Err(corrupt(format!(
                "{} bytes left, need at least {expected} for {width}x{height}",
                cur.remaining()
            )));
        }
        let mut coefficients = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b, c) = (cur.f64(), cur.f64(), cur.f64());
            coefficients.push(PixelBias::new(a.unwrap(), b.unwrap(), c.unwrap()));
        }
        let bitmap = cur.take(n.div_ceil(8)).map_err(&corrupt)?;
        let valid = (0..n).map(|i| bitmap[i / 8] & (1 << (i % 8)) != 0).collect();
        let len = cur.u32().map_err(&corrupt)? as usize;
        let prov_bytes = cur.take(len).map_err(&corrupt)?;
        if cur.remaining() != 0 {
            return Err(corrupt(format!("{} trailing bytes", cur.remaining())));
        }
        let provenance: Provenance = serde_json::from_slice(prov_bytes)
            .map_err(|e| corrupt(format!("provenance: {e}")))?;
        let bias_map =
            BiasMap::new(width, height, coefficients, valid).map_err(|e| corrupt(e.to_string()))?;
        let noise = NoiseModel::new(noise[0], noise[1], noise[2], noise[3])
            .map_err(|e| corrupt(e.to_string()))?;
        Ok(Self {
            bias_map,
            noise,
            provenance,
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let map = &self.bias_map;
        let doc = JsonCalibration {
            format: JSON_FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            width: map.width(),
            height: map.height(),
            noise: JsonNoise {
                a: self.noise.a,
                b: self.noise.b,
                c: self.noise.c,
                sigma_floor: self.noise.sigma_floor,
            },
            coefficients: map.coefficients().iter().map(|p| [p.a, p.b, p.c]).collect(),
            valid: map.valid().iter().map(|&v| v as u8).collect(),
            provenance: self.provenance.clone(),
        };
        let mut out = serde_json::to_vec(&doc).expect("calibration serializes to JSON");
        out.push(b'\n');
        out
    }

    pub fn from_json(bytes: &[u8], path: &Path) -> Result<Self> {
        let corrupt = |reason: String| Error::CorruptFile {
            path: path.into(),
            reason,
        };
        let doc: JsonCalibration =
            serde_json::from_slice(bytes).map_err(|e| corrupt(e.to_string()))?;
        if doc.format != JSON_FORMAT_TAG || doc.version != FORMAT_VERSION {
            return Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: format!("format {} version {}", doc.format, doc.version),
            });
        }
        let coefficients = doc
            .coefficients
            .iter()
            .map(|c| PixelBias::new(c[0], c[1], c[2]))
            .collect();
        let valid = doc.valid.iter().map(|&v| v != 0).collect();
        let bias_map = BiasMap::new(doc.width, doc.height, coefficients, valid)
            .map_err(|e| corrupt(e.to_string()))?;
        let noise = NoiseModel::new(doc.noise.a, doc.noise.b, doc.noise.c, doc.noise.sigma_floor)
            .map_err(|e| corrupt(e.to_string()))?;
        Ok(Self {
            bias_map,
            noise,
            provenance: doc.provenance,
        })
    }

    pub fn encode(&self, format: CalibrationFormat) -> Vec<u8> {
        match format {
            CalibrationFormat::Binary => self.to_binary(),
            CalibrationFormat::Json => self.to_json(),
        }
    }

    /// Decodes either form, detected from the leading bytes.
    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.starts_with(MAGIC) {
            Self::from_binary(bytes, path)
        } else if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
            Self::from_json(bytes, path)
        } else {
            Err(Error::UnsupportedFormat {
                path: path.into(),
                reason: "neither DCAL binary nor JSON".into(),
            })
        }
    }
}

pub fn write_calibration(
    path: impl AsRef<Path>,
    file: &CalibrationFile,
    format: CalibrationFormat,
) -> Result<()> {
    atomic_write(path.as_ref(), &file.encode(format))
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<CalibrationFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    CalibrationFile::decode(&bytes, path)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], String> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, String> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
