//! Binary cache of an encoded corpus.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  "KATCACHE"
//! version    u32
//! header_len u32
//! header     JSON (CacheHeader)
//! payload    per score: path_len u32, path, label u32, rows u32, packed bit words (u64)
//! ```
//!
//! The header records the payload length, so a truncated file is rejected
//! instead of being read as a shorter corpus.

use super::tensor::{BinaryTensor, ScoreTensor};
use super::EncodeError;
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use std::io::{Cursor, Read};
use std::path::Path;

const MAGIC: &[u8; 8] = b"KATCACHE";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedScore {
    pub path: String,
    pub tensor: ScoreTensor,
}

impl EncodedScore {
    pub fn label(&self) -> usize {
        self.tensor.label.expect("cached scores are labeled")
    }
}

/// A labeled, encoded corpus as stored in the cache file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedCorpus {
    /// Composer slugs; position is the class label.
    pub composers: Vec<String>,
    pub spines: usize,
    pub channels: usize,
    /// SHA-256 of the vocabulary file text the corpus was encoded with.
    pub vocab_sha256: String,
    pub scores: Vec<EncodedScore>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    composers: Vec<String>,
    spines: usize,
    channels: usize,
    vocab_sha256: String,
    scores: usize,
    payload_len: u64,
}

impl EncodedCorpus {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        for score in &self.scores {
            let data = &score.tensor.data;
            debug_assert_eq!(data.spines(), self.spines);
            debug_assert_eq!(data.channels(), self.channels);
            let path = score.path.as_bytes();
            payload.write_u32::<LittleEndian>(path.len() as u32).unwrap();
            payload.extend_from_slice(path);
            payload.write_u32::<LittleEndian>(score.label() as u32).unwrap();
            payload.write_u32::<LittleEndian>(data.rows() as u32).unwrap();
            for word in data.pack_bits() {
                payload.write_u64::<LittleEndian>(word).unwrap();
            }
        }
        let header = CacheHeader {
            composers: self.composers.clone(),
            spines: self.spines,
            channels: self.channels,
            vocab_sha256: self.vocab_sha256.clone(),
            scores: self.scores.len(),
            payload_len: payload.len() as u64,
        };
        let header = serde_json::to_vec(&header).expect("header serializes");
        let mut out = Vec::with_capacity(16 + header.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(VERSION).unwrap();
        out.write_u32::<LittleEndian>(header.len() as u32).unwrap();
        out.extend_from_slice(&header);
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EncodeError> {
        let corrupt = |why: &str| EncodeError::Format(format!("corpus cache: {why}"));
        let mut cur = Cursor::new(bytes);
        let mut magic = [0u8; 8];
        cur.read_exact(&mut magic).map_err(|_| corrupt("truncated"))?;
        if &magic != MAGIC {
            return Err(corrupt("bad magic number"));
        }
        let version = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))?;
        if version != VERSION {
            return Err(corrupt(&format!("unsupported version {version}")));
        }
        let header_len = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
        let start = cur.position() as usize;
        let header_bytes = bytes
            .get(start..start + header_len)
            .ok_or_else(|| corrupt("truncated header"))?;
        let header: CacheHeader =
            serde_json::from_slice(header_bytes).map_err(|e| corrupt(&e.to_string()))?;
        let payload = &bytes[start + header_len..];
        if payload.len() as u64 != header.payload_len {
            return Err(corrupt(&format!(
                "payload is {} bytes, header says {}",
                payload.len(),
                header.payload_len
            )));
        }
        let mut cur = Cursor::new(payload);
        let mut scores = Vec::with_capacity(header.scores);
        for _ in 0..header.scores {
            let path_len = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))?;
            let mut path = vec![0u8; path_len as usize];
            cur.read_exact(&mut path).map_err(|_| corrupt("truncated"))?;
            let path = String::from_utf8(path).map_err(|_| corrupt("path is not UTF-8"))?;
            let label = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
            if label >= header.composers.len() {
                return Err(corrupt("label out of range"));
            }
            let rows = cur.read_u32::<LittleEndian>().map_err(|_| corrupt("truncated"))? as usize;
            let n_words = (rows * header.spines * header.channels).div_ceil(64);
            let mut words = vec![0u64; n_words];
            cur.read_u64_into::<LittleEndian>(&mut words)
                .map_err(|_| corrupt("truncated"))?;
            let data = BinaryTensor::unpack_bits(rows, header.spines, header.channels, &words)
                .ok_or_else(|| corrupt("stray padding bits"))?;
            scores.push(EncodedScore {
                path,
                tensor: ScoreTensor {
                    data,
                    label: Some(label),
                },
            });
        }
        if cur.position() as usize != payload.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self {
            composers: header.composers,
            spines: header.spines,
            channels: header.channels,
            vocab_sha256: header.vocab_sha256,
            scores,
        })
    }

    pub fn load(path: &Path) -> Result<Self, EncodeError> {
        let bytes = std::fs::read(path).map_err(|e| EncodeError::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Number of scores per composer label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.composers.len()];
        for s in &self.scores {
            counts[s.label()] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EncodedCorpus {
        let a = BinaryTensor::from_cells(2, 2, 5, [vec![0, 4], vec![], vec![3], vec![1, 2]]);
        let b = BinaryTensor::from_cells(0, 2, 5, Vec::<Vec<usize>>::new());
        EncodedCorpus {
            composers: vec!["bach".into(), "haydn".into()],
            spines: 2,
            channels: 5,
            vocab_sha256: "abc".into(),
            scores: vec![
                EncodedScore {
                    path: "a.krn".into(),
                    tensor: ScoreTensor { data: a, label: Some(1) },
                },
                EncodedScore {
                    path: "b.krn".into(),
                    tensor: ScoreTensor { data: b, label: Some(0) },
                },
            ],
        }
    }

    #[test]
    fn round_trip() {
        let c = sample();
        let back = EncodedCorpus::from_bytes(&c.to_bytes()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.class_counts(), vec![1, 1]);
    }

    #[test]
    fn rejects_truncation_and_bad_magic() {
        let bytes = sample().to_bytes();
        for cut in [4, 12, 20, bytes.len() - 1] {
            assert!(EncodedCorpus::from_bytes(&bytes[..cut]).is_err(), "cut at {cut}");
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(EncodedCorpus::from_bytes(&bad).is_err());
        let mut longer = bytes;
        longer.push(0);
        assert!(EncodedCorpus::from_bytes(&longer).is_err());
    }
}
