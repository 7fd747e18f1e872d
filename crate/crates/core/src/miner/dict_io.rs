//! Binary dictionary files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "SYMD"
//! version      u32
//! K            u32
//! entity_count u64
//! per entity:  count u64, then `count` target ids as u64
//! crc32        u32      over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use super::PositiveDict;
use crate::error::{Error, Result};
use crate::graph::EntityId;

pub const DICT_MAGIC: &[u8; 4] = b"SYMD";
pub const DICT_VERSION: u32 = 1;

pub fn write_dict(dict: &PositiveDict) -> Vec<u8> {
    let mut buf = Vec::with_capacity(20 + 8 * (dict.entity_count() + dict.pair_count()) + 4);
    buf.extend_from_slice(DICT_MAGIC);
    buf.extend_from_slice(&DICT_VERSION.to_le_bytes());
    buf.extend_from_slice(&dict.k().to_le_bytes());
    buf.extend_from_slice(&(dict.entity_count() as u64).to_le_bytes());
    for list in dict.raw_targets() {
        buf.extend_from_slice(&(list.len() as u64).to_le_bytes());
        for t in list {
            buf.extend_from_slice(&(t.0 as u64).to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptDictFile("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_dict(bytes: &[u8]) -> Result<PositiveDict> {
    let corrupt = |m: &str| Error::CorruptDictFile(m.to_owned());
    if bytes.len() < 24 {
        return Err(corrupt("truncated"));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 4);
    if &payload[..4] != DICT_MAGIC {
        return Err(corrupt("bad magic"));
    }
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(payload) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader { bytes: payload, pos: 4 };
    let version = r.u32()?;
    if version != DICT_VERSION {
        return Err(Error::CorruptDictFile(format!("unsupported version {version}")));
    }
    let k = r.u32()?;
    let n = r.u64()? as usize;
    if n > payload.len() / 8 {
        return Err(corrupt("entity count exceeds file size"));
    }
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let count = r.u64()? as usize;
        if count > (payload.len() - r.pos) / 8 {
            return Err(corrupt("truncated"));
        }
        let mut list = Vec::with_capacity(count);
        for _ in 0..count {
            let id = r.u64()?;
            if id >= n as u64 {
                return Err(corrupt("target id out of range"));
            }
            list.push(EntityId(id as u32));
        }
        targets.push(list);
    }
    if r.pos != payload.len() {
        return Err(corrupt("trailing bytes"));
    }
    PositiveDict::from_targets(k, targets).map_err(|e| Error::CorruptDictFile(e.to_string()))
}

pub fn save_dict(dict: &PositiveDict, path: &Path) -> Result<()> {
    fs::write(path, write_dict(dict)).map_err(|e| Error::io(path, e))
}

pub fn load_dict(path: &Path) -> Result<PositiveDict> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_dict(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PositiveDict {
        PositiveDict::from_targets(
            2,
            vec![vec![EntityId(1), EntityId(2)], vec![EntityId(0)], vec![EntityId(0)], vec![]],
        )
        .unwrap()
    }

    #[test]
    fn round_trip() {
        let d = sample();
        assert_eq!(read_dict(&write_dict(&d)).unwrap(), d);
    }

    #[test]
    fn header_layout() {
        let bytes = write_dict(&sample());
        assert_eq!(&bytes[..4], b"SYMD");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 4);
        // 4 counts + 4 ids
        assert_eq!(bytes.len(), 20 + 8 * 8 + 4);
    }

    #[test]
    fn truncated_or_flipped_files_are_rejected() {
        let bytes = write_dict(&sample());
        for cut in [0, 10, bytes.len() - 1] {
            assert!(matches!(read_dict(&bytes[..cut]), Err(Error::CorruptDictFile(_))));
        }
        let mut flipped = bytes.clone();
        flipped[30] ^= 1;
        assert!(matches!(read_dict(&flipped), Err(Error::CorruptDictFile(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.symd");
        save_dict(&sample(), &p).unwrap();
        assert_eq!(load_dict(&p).unwrap(), sample());
    }
}
