//! Binary container shared by dataset and checkpoint files.
//!
//! ```text
//! magic      8 bytes   b"QDONDATA" or b"QDONCKPT"
//! version    u32 LE    container version (1)
//! meta_len   u64 LE    byte length of the metadata block
//! meta       UTF-8     JSON object
//! payload    f64 LE    flat array running to end of file
//! ```
//!
//! Dataset payload, in order: sensor coordinates (`d × 2`, x then y),
//! per-sample sensor values (`n × d`), query points (`n × Q × 3`, x, y, t),
//! targets (`n × Q`).
//!
//! Checkpoint payload: the model's flat parameter vector. Per branch subnet
//! in order, then the trunk: pre-network `W1 (in×hidden), b1, W2 (hidden×q),
//! b2`, circuit angles `θ`, post-network `W1 (q×hidden), b1, W2
//! (hidden×out), b2`. The attention kernel weights sit between the last
//! subnet and the trunk.

use std::io::{Read, Write};

use serde::{de::DeserializeOwned, Serialize};

use crate::error::{Error, Result};

pub const DATASET_MAGIC: &[u8; 8] = b"QDONDATA";
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"QDONCKPT";
pub const CONTAINER_VERSION: u32 = 1;

pub fn write_container<W: Write, M: Serialize>(out: &mut W, magic: &[u8; 8], meta: &M, payload: &[f64]) -> Result<()> {
    let meta = serde_json::to_vec_pretty(meta).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(magic)?;
    out.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    out.write_all(&(meta.len() as u64).to_le_bytes())?;
    out.write_all(&meta)?;
    let mut buf = Vec::with_capacity(payload.len() * 8);
    for v in payload {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_container<R: Read, M: DeserializeOwned>(input: &mut R, magic: &[u8; 8]) -> Result<(M, Vec<f64>)> {
    let mut head = [0u8; 8];
    input.read_exact(&mut head)?;
    if &head != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&head),
            String::from_utf8_lossy(magic)
        )));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CONTAINER_VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let mut len = [0u8; 8];
    input.read_exact(&mut len)?;
    let meta_len = u64::from_le_bytes(len) as usize;
    let mut meta = vec![0u8; meta_len];
    input.read_exact(&mut meta)?;
    let meta: M = serde_json::from_slice(&meta).map_err(|e| Error::Format(format!("metadata: {e}")))?;
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if rest.len() % 8 != 0 {
        return Err(Error::Format(format!("payload of {} bytes is not f64-aligned", rest.len())));
    }
    let payload = rest
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok((meta, payload))
}
