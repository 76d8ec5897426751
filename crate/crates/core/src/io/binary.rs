//! Binary embedding container, little-endian, no padding:
//!
//! ```text
//! magic     b"SNPE"
//! version   u32 = 1
//! dim       u32
//! count     u64
//! datasets  u32 n, then n x (u32 len, UTF-8 bytes)
//! records   count x (u32 dataset_id, u64 identity_id,
//!                    u32 len, UTF-8 image_key, dim x f32)
//! ```

use std::io::{self, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::RawEmbeddings;
use crate::error::{Error, Result};
use crate::model::EmbeddingRecord;

pub const MAGIC: [u8; 4] = *b"SNPE";
pub const VERSION: u32 = 1;

// Guards allocations driven by untrusted header fields.
const MAX_STRING_LEN: u32 = 1 << 20;
const MAX_PREALLOC: u64 = 1 << 20;

pub fn write<W: Write>(
    out: &mut W,
    datasets: &[String],
    records: &[EmbeddingRecord],
    dimension: usize,
) -> io::Result<()> {
    out.write_all(&MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(dimension as u32)?;
    out.write_u64::<LittleEndian>(records.len() as u64)?;
    out.write_u32::<LittleEndian>(datasets.len() as u32)?;
    for name in datasets {
        write_str(out, name)?;
    }
    for r in records {
        out.write_u32::<LittleEndian>(r.dataset_id)?;
        out.write_u64::<LittleEndian>(r.identity_id)?;
        write_str(out, &r.image_key)?;
        for &v in &r.descriptor {
            out.write_f32::<LittleEndian>(v)?;
        }
    }
    Ok(())
}

fn write_str<W: Write>(out: &mut W, s: &str) -> io::Result<()> {
    out.write_u32::<LittleEndian>(s.len() as u32)?;
    out.write_all(s.as_bytes())
}

pub fn read<R: Read>(mut input: R, context: &str) -> Result<RawEmbeddings> {
    let truncated = |what: &str, e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::format(context, format!("truncated while reading {what}"))
        } else {
            Error::format(context, format!("read error in {what}: {e}"))
        }
    };

    let mut magic = [0u8; 4];
    input
        .read_exact(&mut magic)
        .map_err(|e| truncated("magic", e))?;
    if magic != MAGIC {
        return Err(Error::format(context, "not an SNPE embedding file (bad magic)"));
    }
    let version = input
        .read_u32::<LittleEndian>()
        .map_err(|e| truncated("version", e))?;
    if version != VERSION {
        return Err(Error::format(
            context,
            format!("unsupported format version {version}"),
        ));
    }
    let dimension = input
        .read_u32::<LittleEndian>()
        .map_err(|e| truncated("dimension", e))? as usize;
    let count = input
        .read_u64::<LittleEndian>()
        .map_err(|e| truncated("record count", e))?;
    if dimension == 0 && count > 0 {
        return Err(Error::format(context, "descriptor dimension must be >= 1"));
    }

    let n_datasets = input
        .read_u32::<LittleEndian>()
        .map_err(|e| truncated("dataset table", e))?;
    let mut datasets = Vec::with_capacity(n_datasets.min(1024) as usize);
    for _ in 0..n_datasets {
        datasets.push(read_str(&mut input, context, "dataset name")?);
    }

    let mut records = Vec::with_capacity(count.min(MAX_PREALLOC) as usize);
    let mut buf = vec![0u8; dimension * 4];
    for row in 1..=count {
        let what = format!("record {row}");
        let dataset_id = input
            .read_u32::<LittleEndian>()
            .map_err(|e| truncated(&what, e))?;
        let identity_id = input
            .read_u64::<LittleEndian>()
            .map_err(|e| truncated(&what, e))?;
        let image_key = read_str(&mut input, context, &what)?;
        input.read_exact(&mut buf).map_err(|e| truncated(&what, e))?;
        let descriptor = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        records.push(EmbeddingRecord {
            dataset_id,
            identity_id,
            image_key,
            descriptor,
        });
    }

    let mut trailing = [0u8; 1];
    match input.read(&mut trailing) {
        Ok(0) => {}
        Ok(_) => return Err(Error::format(context, "trailing bytes after last record")),
        Err(e) => return Err(truncated("end of file", e)),
    }

    Ok(RawEmbeddings {
        datasets,
        records,
        dimension,
    })
}

fn read_str<R: Read>(input: &mut R, context: &str, what: &str) -> Result<String> {
    let len = input
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::format(context, format!("truncated while reading {what}")))?;
    if len > MAX_STRING_LEN {
        return Err(Error::format(
            context,
            format!("{what}: string length {len} is implausible"),
        ));
    }
    let mut bytes = vec![0u8; len as usize];
    input
        .read_exact(&mut bytes)
        .map_err(|_| Error::format(context, format!("truncated while reading {what}")))?;
    String::from_utf8(bytes)
        .map_err(|_| Error::format(context, format!("{what} is not valid UTF-8")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (Vec<String>, Vec<EmbeddingRecord>) {
        (
            vec!["alpha".into(), "beta".into()],
            vec![
                EmbeddingRecord::new(0, 1, "a/1.jpg", vec![1.0, -2.5]),
                EmbeddingRecord::new(1, (1 << 40) | 7, "b/7.jpg", vec![f32::MIN_POSITIVE, 3.0e8]),
            ],
        )
    }

    #[test]
    fn header_layout_is_exact() {
        let (datasets, records) = sample();
        let mut bytes = Vec::new();
        write(&mut bytes, &datasets, &records[..1], 2).unwrap();
        let mut expected = Vec::new();
        expected.extend_from_slice(b"SNPE");
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&2u32.to_le_bytes());
        expected.extend_from_slice(&5u32.to_le_bytes());
        expected.extend_from_slice(b"alpha");
        expected.extend_from_slice(&4u32.to_le_bytes());
        expected.extend_from_slice(b"beta");
        expected.extend_from_slice(&0u32.to_le_bytes());
        expected.extend_from_slice(&1u64.to_le_bytes());
        expected.extend_from_slice(&7u32.to_le_bytes());
        expected.extend_from_slice(b"a/1.jpg");
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.5f32).to_le_bytes());
        assert_eq!(bytes, expected);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_trailing_bytes() {
        let (datasets, records) = sample();
        let mut bytes = Vec::new();
        write(&mut bytes, &datasets, &records, 2).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read(&bad[..], "t").is_err());

        let short = &bytes[..bytes.len() - 3];
        let err = read(short, "t").unwrap_err().to_string();
        assert!(err.contains("truncated"), "{err}");

        let mut long = bytes.clone();
        long.push(0);
        assert!(read(&long[..], "t").is_err());

        assert_eq!(read(&bytes[..], "t").unwrap().records, records);
    }
}
