//! `PINR` container: magic, version, JSON header, then one tensor record per
//! array. All integers and floats are little-endian.

use std::path::Path;

use serde_json::{json, Value};

use super::write_atomic;
use crate::error::{FormatError, Result};
use crate::generator::{AffineParams, Generator, GeneratorConfig};
use crate::tensor::{Real, Tensor};

pub const MAGIC: [u8; 4] = *b"PINR";
pub const FORMAT_VERSION: u32 = 1;

fn encode(header: &Value, records: &[(String, &Tensor<f32>)]) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("json value serializes");
    let mut out = Vec::with_capacity(
        16 + json.len()
            + records
                .iter()
                .map(|(_, t)| t.numel() * 4 + 64)
                .sum::<usize>(),
    );
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (name, t) in records {
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &dyn Fn() -> String) -> Result<&'a [u8], FormatError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(FormatError::Truncated(what())),
        }
    }

    fn u32(&mut self, what: &dyn Fn() -> String) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(
            self.take(4, what)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self, what: &dyn Fn() -> String) -> Result<u64, FormatError> {
        Ok(u64::from_le_bytes(
            self.take(8, what)?.try_into().expect("8 bytes"),
        ))
    }

    fn len(&mut self, what: &dyn Fn() -> String) -> Result<usize, FormatError> {
        let v = self.u64(what)?;
        usize::try_from(v).map_err(|_| FormatError::Truncated(what()))
    }

    fn done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

type Records = Vec<(String, Tensor<f32>)>;

fn decode(bytes: &[u8]) -> Result<(Value, Records), FormatError> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = c.take(4, &|| "magic".into())?.try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(FormatError::BadMagic(magic));
    }
    let version = c.u32(&|| "version".into())?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let json_len = c.len(&|| "header length".into())?;
    let json = c.take(json_len, &|| "header json".into())?;
    let header: Value =
        serde_json::from_slice(json).map_err(|e| FormatError::Config(e.to_string()))?;

    let mut records = Vec::new();
    while !c.done() {
        let idx = records.len();
        let name_len = c.len(&|| format!("record {idx} name"))?;
        let raw = c.take(name_len, &|| format!("record {idx} name"))?;
        let name = String::from_utf8(raw.to_vec())
            .map_err(|_| FormatError::RecordMismatch(format!("record {idx} name is not UTF-8")))?;
        let ctx = || format!("record {idx} ({name})");
        let rank = c.u32(&ctx)? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(c.len(&ctx)?);
        }
        let count = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| {
                FormatError::RecordMismatch(format!("{} has an impossible shape {shape:?}", ctx()))
            })?;
        let raw = c.take(count, &ctx)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| FormatError::RecordMismatch(e.to_string()))?;
        records.push((name, t));
    }
    Ok((header, records))
}

fn check_records(
    records: &[(String, Tensor<f32>)],
    specs: &[(String, Vec<usize>)],
) -> Result<(), FormatError> {
    if records.len() != specs.len() {
        return Err(FormatError::RecordMismatch(format!(
            "file holds {} records, config requires {}",
            records.len(),
            specs.len()
        )));
    }
    for (i, ((name, t), (want_name, want_shape))) in records.iter().zip(specs).enumerate() {
        if name != want_name || t.shape() != want_shape.as_slice() {
            return Err(FormatError::RecordMismatch(format!(
                "record {i} is {name} {:?}, expected {want_name} {want_shape:?}",
                t.shape()
            )));
        }
    }
    Ok(())
}

/// Serializes the generator's parameters (as 32-bit floats).
pub fn generator_to_bytes<T: Real>(gen: &Generator<T>) -> Vec<u8> {
    let header = serde_json::to_value(gen.config()).expect("config serializes");
    let params: Vec<Tensor<f32>> = gen.params().iter().map(Tensor::cast).collect();
    let records: Vec<(String, &Tensor<f32>)> = gen
        .config()
        .param_specs()
        .into_iter()
        .map(|(n, _)| n)
        .zip(params.iter())
        .collect();
    encode(&header, &records)
}

pub fn generator_from_bytes(bytes: &[u8]) -> Result<Generator<f32>> {
    let (header, records) = decode(bytes)?;
    if header.get("kind").and_then(Value::as_str) == Some("affine") {
        return Err(FormatError::RecordMismatch(
            "file holds affine parameters, not a generator".into(),
        )
        .into());
    }
    let config: GeneratorConfig =
        serde_json::from_value(header).map_err(|e| FormatError::Config(e.to_string()))?;
    config
        .validate()
        .map_err(|e| FormatError::Config(e.to_string()))?;
    check_records(&records, &config.param_specs())?;
    Generator::from_params(config, records.into_iter().map(|(_, t)| t).collect())
}

pub fn save_checkpoint<T: Real>(path: impl AsRef<Path>, gen: &Generator<T>) -> Result<()> {
    Ok(write_atomic(path.as_ref(), &generator_to_bytes(gen))?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Generator<f32>> {
    generator_from_bytes(&std::fs::read(path)?)
}

pub fn affine_to_bytes<T: Real>(affine: &AffineParams<T>) -> Vec<u8> {
    let header = json!({ "kind": "affine", "levels": affine.num_levels(), "feature_dim": affine.feature_dim() });
    let levels: Vec<Tensor<f32>> = affine.levels().iter().map(Tensor::cast).collect();
    let records: Vec<(String, &Tensor<f32>)> = levels
        .iter()
        .enumerate()
        .map(|(i, t)| (format!("affine.{i}"), t))
        .collect();
    encode(&header, &records)
}

pub fn affine_from_bytes(bytes: &[u8]) -> Result<AffineParams<f32>> {
    let (header, records) = decode(bytes)?;
    if header.get("kind").and_then(Value::as_str) != Some("affine") {
        return Err(
            FormatError::RecordMismatch("file does not hold affine parameters".into()).into(),
        );
    }
    let field = |k: &str| {
        header
            .get(k)
            .and_then(Value::as_u64)
            .map(|v| v as usize)
            .ok_or_else(|| FormatError::Config(format!("affine header lacks {k:?}")))
    };
    let (levels, n) = (field("levels")?, field("feature_dim")?);
    let specs: Vec<(String, Vec<usize>)> = (0..levels)
        .map(|i| (format!("affine.{i}"), vec![n, 3]))
        .collect();
    check_records(&records, &specs)?;
    AffineParams::new(records.into_iter().map(|(_, t)| t).collect())
}

pub fn save_affine<T: Real>(path: impl AsRef<Path>, affine: &AffineParams<T>) -> Result<()> {
    Ok(write_atomic(path.as_ref(), &affine_to_bytes(affine))?)
}

pub fn load_affine(path: impl AsRef<Path>) -> Result<AffineParams<f32>> {
    affine_from_bytes(&std::fs::read(path)?)
}
