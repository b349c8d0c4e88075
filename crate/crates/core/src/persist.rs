//! Versioned on-disk state: a JSON manifest plus framed binary files, each
//! carrying a 4-byte little-endian format version header.

use std::io::{Read, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn write_framed<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let payload = bincode::serialize(value).map_err(|e| Error::CorruptState {
        path: path.display().to_string(),
        message: format!("serialize failed: {e}"),
    })?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&FORMAT_VERSION.to_le_bytes())
        .and_then(|_| file.write_all(&payload))
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn read_framed<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut header = [0u8; 4];
    file.read_exact(&mut header).map_err(|e| Error::io(path.display().to_string(), e))?;
    let found = u32::from_le_bytes(header);
    if found != FORMAT_VERSION {
        return Err(Error::VersionMismatch { found, expected: FORMAT_VERSION });
    }
    let mut payload = Vec::new();
    file.read_to_end(&mut payload).map_err(|e| Error::io(path.display().to_string(), e))?;
    bincode::deserialize(&payload).map_err(|e| Error::CorruptState {
        path: path.display().to_string(),
        message: format!("decode failed: {e}"),
    })
}

/// FNV-1a over id/text pairs; stable corpus fingerprint for the manifest.
pub fn corpus_hash(pairs: impl Iterator<Item = (impl AsRef<str>, impl AsRef<str>)>) -> String {
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    };
    for (id, text) in pairs {
        feed(id.as_ref().as_bytes());
        feed(&[0]);
        feed(text.as_ref().as_bytes());
        feed(b"\n");
    }
    format!("{hash:016x}")
}
