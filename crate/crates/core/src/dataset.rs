//! Binary dataset files.
//!
//! Single dataset: `RTK1`, dtype code (u8), element count (u64), payload.
//! Batch container: `RTKB`, task count (u32), one u64 length per task, then
//! the concatenated payloads. All integers and elements little-endian.

use std::io::{Read, Write};

use crate::error::{Result, TopKError};
use crate::value::{DType, RadixValue};

pub const DATASET_MAGIC: &[u8; 4] = b"RTK1";
pub const BATCH_MAGIC: &[u8; 4] = b"RTKB";

#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    F32(Vec<f32>),
    U32(Vec<u32>),
    F16(Vec<half::f16>),
}

impl Dataset {
    pub fn dtype(&self) -> DType {
        match self {
            Dataset::F32(_) => DType::F32,
            Dataset::U32(_) => DType::U32,
            Dataset::F16(_) => DType::F16,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::F32(v) => v.len(),
            Dataset::U32(v) => v.len(),
            Dataset::F16(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn encode_payload<T: RadixValue>(values: &[T], out: &mut Vec<u8>) {
    out.reserve(values.len() * T::elem_bytes());
    for &v in values {
        v.write_le(out);
    }
}

fn decode_payload<T: RadixValue>(bytes: &[u8]) -> Vec<T> {
    bytes
        .chunks_exact(T::elem_bytes())
        .map(T::read_le)
        .collect()
}

fn read_exact_vec<R: Read>(r: &mut R, len: usize, what: &str) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let got = r.take(len as u64).read_to_end(&mut buf)?;
    if got != len {
        return Err(TopKError::Format(format!(
            "truncated {what}: expected {len} bytes, found {got}"
        )));
    }
    Ok(buf)
}

fn read_magic<R: Read>(r: &mut R, magic: &[u8; 4]) -> Result<()> {
    let got = read_exact_vec(r, 4, "header")?;
    if got != magic {
        return Err(TopKError::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&got),
            String::from_utf8_lossy(magic)
        )));
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let b = read_exact_vec(r, 8, what)?;
    Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
}

fn payload_len(count: u64, elem_bytes: usize) -> Result<usize> {
    usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(elem_bytes))
        .ok_or_else(|| TopKError::Format(format!("element count {count} too large")))
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(TopKError::Format("trailing bytes after payload".into()));
    }
    Ok(())
}

pub fn write_dataset<T: RadixValue, W: Write>(w: &mut W, values: &[T]) -> Result<()> {
    let mut out = Vec::with_capacity(13);
    out.extend_from_slice(DATASET_MAGIC);
    out.push(T::DTYPE.code());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    encode_payload(values, &mut out);
    w.write_all(&out)?;
    Ok(())
}

pub fn read_dataset<R: Read>(r: &mut R) -> Result<Dataset> {
    read_magic(r, DATASET_MAGIC)?;
    let code = read_exact_vec(r, 1, "dtype")?[0];
    let dtype = DType::from_code(code)
        .ok_or_else(|| TopKError::Format(format!("unknown dtype code {code}")))?;
    let count = read_u64(r, "element count")?;
    let bytes = read_exact_vec(r, payload_len(count, dtype.elem_bytes())?, "payload")?;
    expect_eof(r)?;
    Ok(match dtype {
        DType::F32 => Dataset::F32(decode_payload(&bytes)),
        DType::U32 => Dataset::U32(decode_payload(&bytes)),
        DType::F16 => Dataset::F16(decode_payload(&bytes)),
    })
}

pub fn write_batch<T: RadixValue, W: Write>(w: &mut W, tasks: &[&[T]]) -> Result<()> {
    let count = u32::try_from(tasks.len()).map_err(|_| {
        TopKError::Format(format!("{} tasks exceed the container limit", tasks.len()))
    })?;
    let mut out = Vec::new();
    out.extend_from_slice(BATCH_MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    for t in tasks {
        out.extend_from_slice(&(t.len() as u64).to_le_bytes());
    }
    for t in tasks {
        encode_payload(t, &mut out);
    }
    w.write_all(&out)?;
    Ok(())
}

/// The container records no element type, so the caller names it.
/// Returns the concatenated data and the per-task lengths.
pub fn read_batch<T: RadixValue, R: Read>(r: &mut R) -> Result<(Vec<T>, Vec<usize>)> {
    read_magic(r, BATCH_MAGIC)?;
    let b = read_exact_vec(r, 4, "task count")?;
    let count = u32::from_le_bytes(b.try_into().expect("4 bytes"));
    let mut lengths = Vec::with_capacity(count as usize);
    let mut total = 0usize;
    for i in 0..count {
        let len = read_u64(r, "task length")?;
        let len = usize::try_from(len)
            .map_err(|_| TopKError::Format(format!("task {i} length {len} too large")))?;
        total = total
            .checked_add(len)
            .ok_or_else(|| TopKError::Format("total length overflows".into()))?;
        lengths.push(len);
    }
    let bytes = read_exact_vec(r, payload_len(total as u64, T::elem_bytes())?, "payload")?;
    expect_eof(r)?;
    Ok((decode_payload(&bytes), lengths))
}
