//! Binary cache for 8-bit theta tables.
//!
//! Layout (little-endian): magic "OMGA", u16 version, u8 kind code, u64 N,
//! N raw bytes, u64 FNV-1a checksum of everything before it.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sieve::{ThetaKind, ThetaTable};

pub const MAGIC: &[u8; 4] = b"OMGA";
pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

pub fn encode(table: &ThetaTable) -> Result<Vec<u8>> {
    let values = table.narrow_values().ok_or_else(|| {
        Error::arg("only tables with 8-bit values can be cached; rebuild synthetic tables instead")
    })?;
    let mut buf = Vec::with_capacity(HEADER_LEN + values.len() + 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(table.kind().code());
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    buf.extend_from_slice(values);
    let sum = fnv1a(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    Ok(buf)
}

pub fn decode(bytes: &[u8]) -> Result<ThetaTable> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::IncompatibleCache("missing OMGA magic".into()));
    }
    if bytes.len() < 6 {
        return Err(Error::CorruptCache("header truncated".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::IncompatibleCache(format!(
            "format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    if bytes.len() < HEADER_LEN + 8 {
        return Err(Error::CorruptCache("header truncated".into()));
    }
    let kind = ThetaKind::from_code(bytes[6])
        .ok_or_else(|| Error::IncompatibleCache(format!("unknown kind code {}", bytes[6])))?;
    let n = u64::from_le_bytes(bytes[7..15].try_into().unwrap());
    let expected = (HEADER_LEN as u64)
        .checked_add(n)
        .and_then(|v| v.checked_add(8))
        .ok_or_else(|| Error::CorruptCache(format!("absurd length {n}")))?;
    if bytes.len() as u64 != expected {
        return Err(Error::CorruptCache(format!(
            "file holds {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let body_end = HEADER_LEN + n as usize;
    let stored = u64::from_le_bytes(bytes[body_end..].try_into().unwrap());
    if stored != fnv1a(&bytes[..body_end]) {
        return Err(Error::CorruptCache("checksum mismatch".into()));
    }
    if n == 0 {
        return Err(Error::CorruptCache("empty table".into()));
    }
    ThetaTable::from_u8(kind, bytes[HEADER_LEN..body_end].to_vec())
}

pub fn write_table(table: &ThetaTable, path: &Path) -> Result<()> {
    let bytes = encode(table)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    // write to a sibling file first so a crash never leaves a half-written cache
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<ThetaTable> {
    decode(&fs::read(path)?)
}

pub fn cache_roundtrip(table: &ThetaTable, path: &Path) -> Result<ThetaTable> {
    write_table(table, path)?;
    read_table(path)
}

/// Conventional file name for a sieved table inside a cache directory.
pub fn cache_path(dir: &Path, kind: ThetaKind, n: u64) -> PathBuf {
    dir.join(format!("{}-{n}.omga", kind.name()))
}
