//! Binary sketch files and their JSON mirror.
//!
//! Binary layout, little-endian:
//!
//! | field | type |
//! |---|---|
//! | magic `"CSKL"` | 4 bytes |
//! | version = 1 | u16 |
//! | map kind | u8 |
//! | m, d, d_pad | u32 × 3 |
//! | σ_w | f64 |
//! | operator kind (0 dense, 1 structured, 255 none) | u8 |
//! | operator seed, dither seed | u64 × 2 |
//! | n | u64 |
//! | privacy mechanism (0 none, 1 laplace, 2 gaussian) | u8 |
//! | ε, δ | f64 × 2 |
//! | values | 2m × f64, real/imag interleaved |

use base64::Engine;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Mechanism, PrivacyRecord, Sketch};
use crate::error::{Error, Result};
use crate::feature_map::{Fingerprint, MapKind, MapParams};
use crate::transform::OperatorKind;

pub const MAGIC: &[u8; 4] = b"CSKL";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 4 + 2 + 1 + 4 * 3 + 8 + 1 + 8 * 2 + 8 + 1 + 8 * 2;

const NO_OPERATOR: u8 = 0xFF;

pub fn serialize(s: &Sketch) -> Vec<u8> {
    let p = s.params();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * s.m());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(p.kind.code());
    out.extend_from_slice(&p.m.to_le_bytes());
    out.extend_from_slice(&p.d.to_le_bytes());
    out.extend_from_slice(&p.d_pad.to_le_bytes());
    out.extend_from_slice(&p.sigma_w.to_le_bytes());
    out.push(p.operator.map_or(NO_OPERATOR, OperatorKind::code));
    out.extend_from_slice(&p.operator_seed.to_le_bytes());
    out.extend_from_slice(&p.dither_seed.to_le_bytes());
    out.extend_from_slice(&s.n().to_le_bytes());
    let (mech, eps, delta) = match s.privacy() {
        None => (0u8, 0.0, 0.0),
        Some(r) => (r.mechanism.code(), r.epsilon, r.delta),
    };
    out.push(mech);
    out.extend_from_slice(&eps.to_le_bytes());
    out.extend_from_slice(&delta.to_le_bytes());
    out.extend_from_slice(&values_to_bytes(s.values()));
    out
}

fn values_to_bytes(values: &[Complex64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 * values.len());
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn values_from_bytes(bytes: &[u8], m: usize) -> Result<Vec<Complex64>> {
    if bytes.len() != 16 * m {
        return Err(Error::Format(format!(
            "value payload is {} bytes, expected {}",
            bytes.len(),
            16 * m
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated sketch at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
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

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn privacy_from_code(code: u8, epsilon: f64, delta: f64) -> Result<Option<PrivacyRecord>> {
    let mechanism = match code {
        0 => {
            if epsilon.to_bits() != 0 || delta.to_bits() != 0 {
                return Err(Error::Format("privacy parameters set without a mechanism".into()));
            }
            return Ok(None);
        }
        1 => Mechanism::Laplace,
        2 => Mechanism::Gaussian,
        other => return Err(Error::Format(format!("unknown privacy mechanism {other}"))),
    };
    Ok(Some(PrivacyRecord {
        mechanism,
        epsilon,
        delta,
    }))
}

fn header_error(e: Error) -> Error {
    match e {
        Error::InvalidArgument(msg) => Error::Format(format!("inconsistent map header: {msg}")),
        other => other,
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<Sketch> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = r.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind_code = r.u8()?;
    let kind = MapKind::from_code(kind_code).ok_or_else(|| Error::Format(format!("unknown map kind {kind_code}")))?;
    let m = r.u32()?;
    let d = r.u32()?;
    let d_pad = r.u32()?;
    let sigma_w = r.f64()?;
    let op_code = r.u8()?;
    let operator = match op_code {
        NO_OPERATOR => None,
        c => Some(OperatorKind::from_code(c).ok_or_else(|| Error::Format(format!("unknown operator kind {c}")))?),
    };
    let operator_seed = r.u64()?;
    let dither_seed = r.u64()?;
    let n = r.u64()?;
    let mech = r.u8()?;
    let epsilon = r.f64()?;
    let delta = r.f64()?;
    let params = MapParams {
        kind,
        m,
        d,
        d_pad,
        sigma_w,
        operator,
        operator_seed,
        dither_seed,
    };
    params.validate().map_err(header_error)?;
    let privacy = privacy_from_code(mech, epsilon, delta)?;
    let payload = &bytes[r.pos..];
    let values = values_from_bytes(payload, m as usize)?;
    Sketch::from_parts(params, values, n, privacy).map_err(header_error)
}

#[derive(Serialize, Deserialize)]
struct JsonSketch {
    format: String,
    version: u16,
    map: MapParams,
    n: u64,
    privacy: Option<PrivacyRecord>,
    fingerprint: String,
    values: String,
}

/// Human-readable mirror of the binary format; the value payload is the
/// binary value block in base64.
pub fn serialize_json(s: &Sketch) -> String {
    let doc = JsonSketch {
        format: "CSKL".into(),
        version: VERSION,
        map: *s.params(),
        n: s.n(),
        privacy: s.privacy().copied(),
        fingerprint: s.fingerprint().to_hex(),
        values: base64::engine::general_purpose::STANDARD.encode(values_to_bytes(s.values())),
    };
    serde_json::to_string_pretty(&doc).expect("sketch serializes to JSON")
}

pub fn deserialize_json(text: &str) -> Result<Sketch> {
    let doc: JsonSketch = serde_json::from_str(text).map_err(|e| Error::Format(format!("json: {e}")))?;
    if doc.format != "CSKL" {
        return Err(Error::Format("bad format tag".into()));
    }
    if doc.version != VERSION {
        return Err(Error::Format(format!("unsupported version {}", doc.version)));
    }
    doc.map.validate().map_err(header_error)?;
    let stored = Fingerprint::from_hex(&doc.fingerprint)?;
    if stored != doc.map.fingerprint() {
        return Err(Error::Format("stored fingerprint does not match map parameters".into()));
    }
    let raw = base64::engine::general_purpose::STANDARD
        .decode(doc.values.as_bytes())
        .map_err(|e| Error::Format(format!("base64: {e}")))?;
    let values = values_from_bytes(&raw, doc.map.m as usize)?;
    if let Some(p) = doc.privacy {
        if p.epsilon.is_nan() || p.delta.is_nan() {
            return Err(Error::Format("invalid privacy record".into()));
        }
    }
    Sketch::from_parts(doc.map, values, doc.n, doc.privacy).map_err(header_error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_map::FeatureMapSpec;
    use crate::sketch::sketch_dataset;

    fn sample() -> Sketch {
        let spec = FeatureMapSpec::new_rff_complex(7, 2, 1.1, OperatorKind::Structured, 3).unwrap();
        sketch_dataset([[0.1, 0.2], [0.4, -1.0], [2.0, 0.0]], &spec).unwrap()
    }

    #[test]
    fn layout_length() {
        let s = sample();
        assert_eq!(HEADER_LEN, 69);
        assert_eq!(serialize(&s).len(), HEADER_LEN + 16 * 7);
    }

    #[test]
    fn round_trip_binary_and_json() {
        let s = sample();
        assert_eq!(deserialize(&serialize(&s)).unwrap(), s);
        assert_eq!(deserialize_json(&serialize_json(&s)).unwrap(), s);
    }

    #[test]
    fn corrupted_inputs() {
        let s = sample();
        let bytes = serialize(&s);
        let mut bad = bytes.clone();
        bad[0] ^= 0x20;
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
        assert!(matches!(deserialize(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(deserialize(&bytes[..10]), Err(Error::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(deserialize(&long), Err(Error::Format(_))));
        // d_pad lives at offset 15; a structured operator over d=2 needs d_pad=2.
        let mut bad = bytes.clone();
        bad[15] = 3;
        assert!(matches!(deserialize(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn json_fingerprint_is_checked() {
        let s = sample();
        let text = serialize_json(&s);
        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["map"]["operator_seed"] = serde_json::json!(4);
        assert!(matches!(deserialize_json(&doc.to_string()), Err(Error::Format(_))));
    }
}
