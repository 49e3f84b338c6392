//! Feature dump format: a 16-byte header (`EVMF` magic, rows, cols, dtype
//! code, each u32 little-endian) followed by row-major little-endian f32.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const FEATURE_MAGIC: [u8; 4] = *b"EVMF";
const DTYPE_F32: u32 = 1;

pub fn write_feature_file(path: &Path, m: &Matrix<f32>) -> Result<()> {
    let mut bytes = Vec::with_capacity(16 + 4 * m.as_slice().len());
    bytes.extend_from_slice(&FEATURE_MAGIC);
    bytes.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    bytes.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    bytes.extend_from_slice(&DTYPE_F32.to_le_bytes());
    for v in m.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<Matrix<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || bytes[..4] != FEATURE_MAGIC {
        return Err(Error::format(path, "missing feature-file magic"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (rows, cols, dtype) = (word(4), word(8), word(12) as u32);
    if dtype != DTYPE_F32 {
        return Err(Error::format(path, format!("unsupported dtype code {dtype}")));
    }
    let body = &bytes[16..];
    if body.len() != rows * cols * 4 {
        return Err(Error::format(
            path,
            format!("{rows}x{cols} header but {} payload bytes", body.len()),
        ));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}
