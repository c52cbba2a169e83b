//! Versioned binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic   4 bytes  "OPMD"
//! version u32      currently 1
//! payload          see below
//! digest  32 bytes SHA-256 of the payload
//! ```
//!
//! Payload: `k: u32`, `d: u32`, `k` length-prefixed UTF-8 class names,
//! `k·d` weight f64s (row-major), `k` bias f64s, the hyperparameters
//! (`c: f64`, `tol: f64`, `max_iter: u64`, optional `cg_max_iter` as flag
//! byte + `u64`, `armijo_c1: f64`, `backtrack: f64`, `max_backtracks: u64`,
//! `seed: u64`), then an optional embedding fingerprint (flag byte; path,
//! `vocab_size: u64`, `dimension: u32`, checksum string). Strings are
//! `u32` length + bytes. Round-trips are exact: every numeric field is
//! stored bit-for-bit.

use std::fs;
use std::io::{self, Cursor, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Hyperparams, ModelParams};
use crate::embedding::EmbeddingFingerprint;

const MAGIC: &[u8; 4] = b"OPMD";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("failed to read/write model file: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("model file is truncated")]
    Truncated,
    #[error("model file checksum mismatch")]
    ChecksumMismatch,
    #[error("model file is corrupt: {0}")]
    Corrupt(String),
}

fn put_string(buffer: &mut Vec<u8>, value: &str) {
    buffer
        .write_u32::<LittleEndian>(value.len() as u32)
        .expect("write to Vec cannot fail");
    buffer.extend_from_slice(value.as_bytes());
}

fn encode_payload(model: &ModelParams) -> Vec<u8> {
    let mut payload = Vec::new();
    let k = model.n_classes();
    let d = model.dimension();
    payload.write_u32::<LittleEndian>(k as u32).unwrap();
    payload.write_u32::<LittleEndian>(d as u32).unwrap();
    for class in &model.classes {
        put_string(&mut payload, class);
    }
    for value in model.weights.iter() {
        payload.write_f64::<LittleEndian>(*value).unwrap();
    }
    for value in model.biases.iter() {
        payload.write_f64::<LittleEndian>(*value).unwrap();
    }
    let hyper = &model.hyperparams;
    payload.write_f64::<LittleEndian>(hyper.c).unwrap();
    payload.write_f64::<LittleEndian>(hyper.tol).unwrap();
    payload.write_u64::<LittleEndian>(hyper.max_iter as u64).unwrap();
    match hyper.cg_max_iter {
        None => {
            payload.write_u8(0).unwrap();
            payload.write_u64::<LittleEndian>(0).unwrap();
        }
        Some(limit) => {
            payload.write_u8(1).unwrap();
            payload.write_u64::<LittleEndian>(limit as u64).unwrap();
        }
    }
    payload.write_f64::<LittleEndian>(hyper.armijo_c1).unwrap();
    payload.write_f64::<LittleEndian>(hyper.backtrack).unwrap();
    payload.write_u64::<LittleEndian>(hyper.max_backtracks as u64).unwrap();
    payload.write_u64::<LittleEndian>(hyper.seed).unwrap();
    match &model.embedding {
        None => payload.write_u8(0).unwrap(),
        Some(fingerprint) => {
            payload.write_u8(1).unwrap();
            put_string(&mut payload, &fingerprint.path);
            payload.write_u64::<LittleEndian>(fingerprint.vocab_size as u64).unwrap();
            payload.write_u32::<LittleEndian>(fingerprint.dimension as u32).unwrap();
            put_string(&mut payload, &fingerprint.checksum);
        }
    }
    payload
}

/// Serialize a model to any writer.
pub fn write_model<W: Write>(model: &ModelParams, mut writer: W) -> Result<(), ModelIoError> {
    let payload = encode_payload(model);
    let digest = Sha256::digest(&payload);
    writer.write_all(MAGIC)?;
    writer.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    writer.write_all(&payload)?;
    writer.write_all(&digest)?;
    Ok(())
}

pub fn save_model(model: &ModelParams, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
    let mut bytes = Vec::new();
    write_model(model, &mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

struct PayloadReader<'a> {
    cursor: Cursor<&'a [u8]>,
    len: usize,
}

impl<'a> PayloadReader<'a> {
    fn new(payload: &'a [u8]) -> Self {
        Self { cursor: Cursor::new(payload), len: payload.len() }
    }

    fn remaining(&self) -> usize {
        self.len - self.cursor.position() as usize
    }

    fn u8(&mut self) -> Result<u8, ModelIoError> {
        self.cursor.read_u8().map_err(|_| ModelIoError::Truncated)
    }

    fn u32(&mut self) -> Result<u32, ModelIoError> {
        self.cursor.read_u32::<LittleEndian>().map_err(|_| ModelIoError::Truncated)
    }

    fn u64(&mut self) -> Result<u64, ModelIoError> {
        self.cursor.read_u64::<LittleEndian>().map_err(|_| ModelIoError::Truncated)
    }

    fn f64(&mut self) -> Result<f64, ModelIoError> {
        self.cursor.read_f64::<LittleEndian>().map_err(|_| ModelIoError::Truncated)
    }

    fn string(&mut self) -> Result<String, ModelIoError> {
        let len = self.u32()? as usize;
        if len > self.remaining() {
            return Err(ModelIoError::Truncated);
        }
        let mut bytes = vec![0u8; len];
        self.cursor.read_exact(&mut bytes).map_err(|_| ModelIoError::Truncated)?;
        String::from_utf8(bytes)
            .map_err(|_| ModelIoError::Corrupt("string is not valid UTF-8".to_owned()))
    }

    fn f64_block(&mut self, count: usize) -> Result<Vec<f64>, ModelIoError> {
        if count.checked_mul(8).is_none_or(|bytes| bytes > self.remaining()) {
            return Err(ModelIoError::Truncated);
        }
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(self.f64()?);
        }
        Ok(values)
    }
}

/// Deserialize a model from bytes. Checks magic, version and checksum
/// before interpreting the payload.
pub fn read_model(bytes: &[u8]) -> Result<ModelParams, ModelIoError> {
    if bytes.len() < MAGIC.len() + 4 {
        return if bytes.starts_with(&MAGIC[..bytes.len().min(4)]) {
            Err(ModelIoError::Truncated)
        } else {
            Err(ModelIoError::BadMagic)
        };
    }
    let (magic, rest) = bytes.split_at(MAGIC.len());
    if magic != MAGIC {
        return Err(ModelIoError::BadMagic);
    }
    let version = u32::from_le_bytes(rest[..4].try_into().expect("length checked"));
    if version != FORMAT_VERSION {
        return Err(ModelIoError::UnsupportedVersion(version));
    }
    let body = &rest[4..];
    if body.len() < 32 {
        return Err(ModelIoError::Truncated);
    }
    let (payload, digest) = body.split_at(body.len() - 32);
    if Sha256::digest(payload).as_slice() != digest {
        return Err(ModelIoError::ChecksumMismatch);
    }

    let mut reader = PayloadReader::new(payload);
    let k = reader.u32()? as usize;
    let d = reader.u32()? as usize;
    if k < 2 || d == 0 {
        return Err(ModelIoError::Corrupt(format!("invalid shape {k}x{d}")));
    }
    let mut classes = Vec::with_capacity(k.min(1024));
    for _ in 0..k {
        classes.push(reader.string()?);
    }
    let weights = reader.f64_block(k * d)?;
    let biases = reader.f64_block(k)?;
    let c = reader.f64()?;
    let tol = reader.f64()?;
    let max_iter = reader.u64()? as usize;
    let cg_flag = reader.u8()?;
    let cg_value = reader.u64()? as usize;
    let armijo_c1 = reader.f64()?;
    let backtrack = reader.f64()?;
    let max_backtracks = reader.u64()? as usize;
    let seed = reader.u64()?;
    let embedding = match reader.u8()? {
        0 => None,
        1 => {
            let path = reader.string()?;
            let vocab_size = reader.u64()? as usize;
            let dimension = reader.u32()? as usize;
            let checksum = reader.string()?;
            Some(EmbeddingFingerprint { path, vocab_size, dimension, checksum })
        }
        other => {
            return Err(ModelIoError::Corrupt(format!("invalid fingerprint flag {other}")))
        }
    };
    if reader.remaining() != 0 {
        return Err(ModelIoError::Corrupt("trailing payload data".to_owned()));
    }
    if weights.iter().chain(biases.iter()).any(|v| !v.is_finite()) {
        return Err(ModelIoError::Corrupt("non-finite parameter".to_owned()));
    }
    if let Some(fingerprint) = &embedding {
        if fingerprint.dimension != d {
            return Err(ModelIoError::Corrupt(
                "fingerprint dimension disagrees with weight shape".to_owned(),
            ));
        }
    }

    let weights = Array2::from_shape_vec((k, d), weights)
        .map_err(|e| ModelIoError::Corrupt(e.to_string()))?;
    Ok(ModelParams {
        weights,
        biases: Array1::from_vec(biases),
        classes,
        embedding,
        hyperparams: Hyperparams {
            c,
            tol,
            max_iter,
            cg_max_iter: (cg_flag == 1).then_some(cg_value),
            armijo_c1,
            backtrack,
            max_backtracks,
            seed,
        },
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams, ModelIoError> {
    read_model(&fs::read(path)?)
}
