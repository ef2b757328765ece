//! Binary checkpoint: eight little-endian u64 sizes (rows, cols of M, W1,
//! W2, W_Y), followed by the four matrices as little-endian f64 in row-major
//! order.

use std::fs;
use std::path::Path;

use super::UserModel;
use crate::error::{Error, Result};
use crate::ndmath::Tensor;

pub fn save_checkpoint(path: impl AsRef<Path>, model: &UserModel) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for (r, c) in model.shapes() {
        buf.extend_from_slice(&(r as u64).to_le_bytes());
        buf.extend_from_slice(&(c as u64).to_le_bytes());
    }
    for p in model.params() {
        for x in p.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<UserModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg,
    };
    if bytes.len() < 64 {
        return Err(bad("truncated header".into()));
    }
    let sizes: Vec<usize> = bytes[..64]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let shapes = [
        (sizes[0], sizes[1]),
        (sizes[2], sizes[3]),
        (sizes[4], sizes[5]),
        (sizes[6], sizes[7]),
    ];
    let [(mr, mc), (_, ac), (br, bc), (yr, _)] = shapes;
    if mr != mc || ac != br || bc != yr {
        return Err(bad(format!("inconsistent parameter shapes {shapes:?}")));
    }
    let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
    if bytes.len() != 64 + 8 * total {
        return Err(bad(format!(
            "expected {} bytes, found {}",
            64 + 8 * total,
            bytes.len()
        )));
    }
    let mut values = bytes[64..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut take =
        |(r, c): (usize, usize)| Tensor::new(r, c, values.by_ref().take(r * c).collect());
    Ok(UserModel {
        m: take(shapes[0])?,
        w1: take(shapes[1])?,
        w2: take(shapes[2])?,
        wy: take(shapes[3])?,
    })
}
