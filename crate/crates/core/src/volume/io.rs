//! NPY (v1/v2/v3 read, v1 write) and raw+json sidecar volume files.
//!
//! NPY arrays are indexed `arr[x, y, z]`, so a C-ordered file is transposed
//! into the x-fastest layout on read and back on write. Fortran-ordered
//! files already match the layout. Raw files are always x-fastest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Shape, Volume};
use crate::error::{Error, Result};

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Npy,
    RawJson,
}

impl Format {
    /// `.npy` selects NPY, `.raw` selects raw+json.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "npy" => Some(Format::Npy),
            "raw" => Some(Format::RawJson),
            _ => None,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "npy" => Ok(Format::Npy),
            "raw" | "raw+json" | "raw-json" => Ok(Format::RawJson),
            other => Err(Error::InvalidParameter(format!("unknown format `{other}`"))),
        }
    }
}

/// Sidecar describing a raw buffer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub shape: [usize; 3],
    pub dtype: String,
    pub order: String,
    #[serde(default = "little", skip_serializing_if = "is_little")]
    pub endian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voxel_size: Option<[f64; 3]>,
}

fn little() -> String {
    "little".to_string()
}

fn is_little(s: &String) -> bool {
    s == "little"
}

pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Kind {
    Float,
    Unsigned,
}

#[derive(Copy, Clone, Debug)]
struct Dtype {
    kind: Kind,
    size: usize,
    big_endian: bool,
}

impl Dtype {
    fn parse_npy(descr: &str) -> Result<Dtype> {
        let unsupported = || Error::UnsupportedDtype(descr.to_string());
        let mut chars = descr.chars();
        let order = chars.next().ok_or_else(unsupported)?;
        let big_endian = match order {
            '<' | '|' => false,
            '>' => true,
            '=' => cfg!(target_endian = "big"),
            _ => return Err(unsupported()),
        };
        let kind = match chars.next() {
            Some('f') => Kind::Float,
            Some('u') => Kind::Unsigned,
            _ => return Err(unsupported()),
        };
        let size: usize = chars.as_str().parse().map_err(|_| unsupported())?;
        Dtype::checked(kind, size, big_endian).ok_or_else(unsupported)
    }

    fn parse_sidecar(dtype: &str, endian: &str) -> Result<Dtype> {
        let unsupported = || Error::UnsupportedDtype(dtype.to_string());
        let big_endian = match endian {
            "little" => false,
            "big" => true,
            other => {
                return Err(Error::malformed(
                    "raw+json",
                    format!("unknown byte order `{other}`"),
                ))
            }
        };
        let (kind, bits) = match dtype.split_at_checked(1) {
            Some(("f", rest)) => (Kind::Float, rest),
            Some(("u", rest)) => (Kind::Unsigned, rest),
            _ => return Err(unsupported()),
        };
        let bits: usize = bits.parse().map_err(|_| unsupported())?;
        if !bits.is_multiple_of(8) {
            return Err(unsupported());
        }
        Dtype::checked(kind, bits / 8, big_endian).ok_or_else(unsupported)
    }

    fn checked(kind: Kind, size: usize, big_endian: bool) -> Option<Dtype> {
        let ok = match kind {
            Kind::Float => matches!(size, 4 | 8),
            Kind::Unsigned => matches!(size, 1 | 2 | 4 | 8),
        };
        ok.then_some(Dtype {
            kind,
            size,
            big_endian,
        })
    }

    fn decode(&self, bytes: &[u8]) -> Vec<f64> {
        let be = self.big_endian;
        macro_rules! words {
            ($t:ty, $n:expr) => {
                bytes.chunks_exact($n).map(move |c| {
                    let a: [u8; $n] = c.try_into().unwrap();
                    if be {
                        <$t>::from_be_bytes(a)
                    } else {
                        <$t>::from_le_bytes(a)
                    }
                })
            };
        }
        // Unsigned integers are rescaled by the dtype maximum.
        match (self.kind, self.size) {
            (Kind::Float, 4) => words!(f32, 4).map(f64::from).collect(),
            (Kind::Float, 8) => words!(f64, 8).collect(),
            (Kind::Unsigned, 1) => bytes.iter().map(|&b| f64::from(b) / 255.0).collect(),
            (Kind::Unsigned, 2) => words!(u16, 2).map(|v| f64::from(v) / 65535.0).collect(),
            (Kind::Unsigned, 4) => words!(u32, 4)
                .map(|v| f64::from(v) / f64::from(u32::MAX))
                .collect(),
            (Kind::Unsigned, 8) => words!(u64, 8).map(|v| v as f64 / u64::MAX as f64).collect(),
            _ => unreachable!("validated in Dtype::checked"),
        }
    }
}

pub fn read_volume(path: &Path, format: Format) -> Result<Volume> {
    match format {
        Format::Npy => read_npy(path),
        Format::RawJson => read_raw(path),
    }
}

/// Writes little-endian float32 samples.
pub fn write_volume(v: &Volume, path: &Path, format: Format) -> Result<()> {
    match format {
        Format::Npy => write_npy(v, path),
        Format::RawJson => write_raw(v, path),
    }
}

fn read_npy(path: &Path) -> Result<Volume> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let malformed = |r: &str| Error::malformed("npy", r);
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(malformed("missing magic string"));
    }
    let major = bytes[6];
    let (header_len, header_start) = match major {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 => {
            if bytes.len() < 12 {
                return Err(malformed("truncated header length"));
            }
            let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
            (n as usize, 12)
        }
        v => return Err(malformed(&format!("unsupported version {v}"))),
    };
    let data_start = header_start + header_len;
    if bytes.len() < data_start {
        return Err(malformed("truncated header"));
    }
    let header = std::str::from_utf8(&bytes[header_start..data_start])
        .map_err(|_| malformed("header is not text"))?;
    let header = NpyHeader::parse(header)?;
    let dtype = Dtype::parse_npy(&header.descr)?;
    if header.shape.len() != 3 {
        return Err(malformed(&format!(
            "expected 3 dimensions, found {}",
            header.shape.len()
        )));
    }
    let shape = Shape::new(header.shape[0], header.shape[1], header.shape[2])?;
    let payload = &bytes[data_start..];
    if payload.len() != shape.len() * dtype.size {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            found: payload.len() / dtype.size,
        });
    }
    let values = dtype.decode(payload);
    let data = if header.fortran_order {
        values
    } else {
        from_c_order(shape, &values)
    };
    Volume::new(shape, data)
}

fn write_npy(v: &Volume, path: &Path) -> Result<()> {
    let s = v.shape();
    let mut header = format!(
        "{{'descr': '<f4', 'fortran_order': False, 'shape': ({}, {}, {}), }}",
        s.nx, s.ny, s.nz
    );
    // magic(6) + version(2) + len(2) + header + '\n' is a multiple of 64
    let unpadded = 10 + header.len() + 1;
    header.push_str(&" ".repeat((64 - unpadded % 64) % 64));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + 4 * v.len());
    out.extend_from_slice(NPY_MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for value in to_c_order(v) {
        out.extend_from_slice(&(value as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_raw(path: &Path) -> Result<Volume> {
    let side_path = sidecar_path(path);
    let side_text = fs::read_to_string(&side_path).map_err(|e| Error::io(&side_path, e))?;
    let side: RawSidecar = serde_json::from_str(&side_text)
        .map_err(|e| Error::malformed("raw+json", e.to_string()))?;
    if side.order != "x-fastest" {
        return Err(Error::malformed(
            "raw+json",
            format!("unsupported order `{}`", side.order),
        ));
    }
    let dtype = Dtype::parse_sidecar(&side.dtype, &side.endian)?;
    let shape = Shape::from_dims(side.shape)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != shape.len() * dtype.size {
        return Err(Error::ShapeMismatch {
            expected: shape.len(),
            found: bytes.len() / dtype.size,
        });
    }
    Ok(Volume::new(shape, dtype.decode(&bytes))?.with_voxel_size(side.voxel_size))
}

fn write_raw(v: &Volume, path: &Path) -> Result<()> {
    let mut out = Vec::with_capacity(4 * v.len());
    for &value in v.data() {
        out.extend_from_slice(&(value as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    let side = RawSidecar {
        shape: v.shape().dims(),
        dtype: "f32".to_string(),
        order: "x-fastest".to_string(),
        endian: little(),
        voxel_size: v.voxel_size(),
    };
    let side_path = sidecar_path(path);
    let text = serde_json::to_string(&side).expect("sidecar serializes");
    fs::write(&side_path, text).map_err(|e| Error::io(&side_path, e))
}

/// Reorders an `arr[x, y, z]` C-ordered buffer into x-fastest order.
pub(crate) fn from_c_order(shape: Shape, values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; shape.len()];
    let mut src = 0;
    for x in 0..shape.nx {
        for y in 0..shape.ny {
            for z in 0..shape.nz {
                out[shape.index(x, y, z)] = values[src];
                src += 1;
            }
        }
    }
    out
}

pub(crate) fn to_c_order(v: &Volume) -> Vec<f64> {
    let s = v.shape();
    let mut out = Vec::with_capacity(v.len());
    for x in 0..s.nx {
        for y in 0..s.ny {
            for z in 0..s.nz {
                out.push(v.get(x, y, z));
            }
        }
    }
    out
}

struct NpyHeader {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
}

impl NpyHeader {
    fn parse(text: &str) -> Result<NpyHeader> {
        let malformed = |r: String| Error::malformed("npy", r);
        let value_after = |key: &str| -> Result<&str> {
            let pat = format!("'{key}'");
            let at = text
                .find(&pat)
                .ok_or_else(|| malformed(format!("header lacks `{key}`")))?;
            let rest = &text[at + pat.len()..];
            let colon = rest
                .find(':')
                .ok_or_else(|| malformed(format!("no value for `{key}`")))?;
            Ok(rest[colon + 1..].trim_start())
        };

        let descr_src = value_after("descr")?;
        let quote = descr_src
            .chars()
            .next()
            .filter(|c| *c == '\'' || *c == '"')
            .ok_or_else(|| malformed("descr is not a string".into()))?;
        let end = descr_src[1..]
            .find(quote)
            .ok_or_else(|| malformed("unterminated descr".into()))?;
        let descr = descr_src[1..1 + end].to_string();

        let fo = value_after("fortran_order")?;
        let fortran_order = if fo.starts_with("True") {
            true
        } else if fo.starts_with("False") {
            false
        } else {
            return Err(malformed("fortran_order is not a bool".into()));
        };

        let sh = value_after("shape")?;
        if !sh.starts_with('(') {
            return Err(malformed("shape is not a tuple".into()));
        }
        let close = sh
            .find(')')
            .ok_or_else(|| malformed("unterminated shape".into()))?;
        let shape = sh[1..close]
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.trim_end_matches('L')
                    .parse::<usize>()
                    .map_err(|_| malformed(format!("bad shape entry `{t}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(NpyHeader {
            descr,
            fortran_order,
            shape,
        })
    }
}
