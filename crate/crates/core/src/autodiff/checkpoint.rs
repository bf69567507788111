//! Named f64 arrays in a small binary file.
//!
//! ```text
//! magic   8 bytes "KATPARAM"
//! version u32
//! count   u32
//! per tensor: name_len u32, name, rank u32, dims u64 × rank, values f64 × len
//! ```
//!
//! All integers and floats are little-endian; floats round-trip bit-exactly.

use super::{AutodiffError, Tensor};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::io::{Cursor, Read};

const MAGIC: &[u8; 8] = b"KATPARAM";
const VERSION: u32 = 1;

pub fn write_checkpoint<'a>(tensors: impl IntoIterator<Item = (&'a str, &'a Tensor)>) -> Vec<u8> {
    let mut body = Vec::new();
    let mut count = 0u32;
    for (name, t) in tensors {
        count += 1;
        body.write_u32::<LittleEndian>(name.len() as u32).unwrap();
        body.extend_from_slice(name.as_bytes());
        body.write_u32::<LittleEndian>(t.shape().len() as u32).unwrap();
        for &d in t.shape() {
            body.write_u64::<LittleEndian>(d as u64).unwrap();
        }
        for &v in t.data() {
            body.write_f64::<LittleEndian>(v).unwrap();
        }
    }
    let mut out = Vec::with_capacity(16 + body.len());
    out.extend_from_slice(MAGIC);
    out.write_u32::<LittleEndian>(VERSION).unwrap();
    out.write_u32::<LittleEndian>(count).unwrap();
    out.extend_from_slice(&body);
    out
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, AutodiffError> {
    let bad = |why: &str| AutodiffError::Checkpoint(why.to_string());
    let truncated = |_| bad("truncated");
    let mut cur = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(bad("bad magic number"));
    }
    let version = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let count = cur.read_u32::<LittleEndian>().map_err(truncated)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let remaining = bytes.len() - cur.position() as usize;
        if len > remaining {
            return Err(bad("truncated"));
        }
        let mut name = vec![0u8; len];
        cur.read_exact(&mut name).map_err(truncated)?;
        let name = String::from_utf8(name).map_err(|_| bad("name is not UTF-8"))?;
        let rank = cur.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        let mut shape = Vec::with_capacity(rank.min(8));
        for _ in 0..rank {
            shape.push(cur.read_u64::<LittleEndian>().map_err(truncated)? as usize);
        }
        let n = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| bad("shape overflows"))?;
        let remaining = bytes.len() - cur.position() as usize;
        if n.checked_mul(8).is_none_or(|b| b > remaining) {
            return Err(bad("truncated"));
        }
        let mut data = vec![0.0; n];
        cur.read_f64_into::<LittleEndian>(&mut data).map_err(truncated)?;
        out.push((name, Tensor::from_vec(&shape, data)?));
    }
    if cur.position() as usize != bytes.len() {
        return Err(bad("trailing bytes"));
    }
    Ok(out)
}
