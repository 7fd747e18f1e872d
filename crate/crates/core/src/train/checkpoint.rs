//! Binary embedding checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic          4 bytes "SYME"
//! version        u32
//! dim            u32
//! entity_count   u64
//! relation_count u64
//! scorer         u32     0 = TransE, 1 = DistMult
//! values         f32 x (entity_count + relation_count) * dim, row-major,
//!                entity rows first
//! crc32          u32     over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use super::{EmbeddingTable, ScorerKind};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"SYME";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8 + 4;

pub fn write_checkpoint(table: &EmbeddingTable, kind: ScorerKind) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * table.as_slice().len() + 4);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(table.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&(table.entity_count() as u64).to_le_bytes());
    buf.extend_from_slice(&(table.relation_count() as u64).to_le_bytes());
    buf.extend_from_slice(&kind.code().to_le_bytes());
    for v in table.as_slice() {
        buf.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

pub fn read_checkpoint(bytes: &[u8]) -> Result<(EmbeddingTable, ScorerKind)> {
    let corrupt = |m: String| Error::CorruptCheckpoint(m);
    if bytes.len() < HEADER_LEN + 4 {
        return Err(corrupt("truncated".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    if &payload[..4] != CHECKPOINT_MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    if crc32fast::hash(payload) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(payload[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(payload[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != CHECKPOINT_VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let dim = u32_at(8) as usize;
    let entities = u64_at(12) as usize;
    let relations = u64_at(20) as usize;
    let kind = ScorerKind::from_code(u32_at(28)).ok_or_else(|| corrupt("unknown scorer".into()))?;
    let expected = (entities as u128 + relations as u128) * dim as u128 * 4;
    if expected != (payload.len() - HEADER_LEN) as u128 {
        return Err(corrupt("size does not match header".into()));
    }
    let data = payload[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((EmbeddingTable::from_data(entities, relations, dim, data), kind))
}

pub fn save_checkpoint(table: &EmbeddingTable, kind: ScorerKind, path: &Path) -> Result<()> {
    fs::write(path, write_checkpoint(table, kind)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(EmbeddingTable, ScorerKind)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::train::init_embeddings;

    #[test]
    fn round_trip_rounds_to_f32() {
        let t = init_embeddings(7, 2, 5, 11);
        let (back, kind) = read_checkpoint(&write_checkpoint(&t, ScorerKind::DistMult)).unwrap();
        assert_eq!(kind, ScorerKind::DistMult);
        assert_eq!(back.dim(), 5);
        assert_eq!(back.entity_count(), 7);
        for (a, b) in t.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(*b, *a as f32 as f64);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = write_checkpoint(&init_embeddings(3, 1, 2, 0), ScorerKind::TransE);
        assert!(read_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        let mut b = bytes.clone();
        b[HEADER_LEN + 1] ^= 0x40;
        assert!(matches!(read_checkpoint(&b), Err(Error::CorruptCheckpoint(_))));
    }
}
