//! IDX tensor file format (the MNIST container): big-endian header of
//! two zero bytes, a type code, the dimension count, then one u32 per
//! dimension and the raw big-endian payload. Reads preserve the stored
//! element type so write(read(f)) reproduces f byte-for-byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{BigEndian, WriteBytesExt};

use crate::error::{Error, Result};

const TYPE_U8: u8 = 0x08;
const TYPE_I8: u8 = 0x09;
const TYPE_I16: u8 = 0x0B;
const TYPE_I32: u8 = 0x0C;
const TYPE_F32: u8 = 0x0D;
const TYPE_F64: u8 = 0x0E;

/// Payload in its stored element type.
#[derive(Debug, Clone, PartialEq)]
pub enum IdxData {
    U8(Vec<u8>),
    I8(Vec<i8>),
    I16(Vec<i16>),
    I32(Vec<i32>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl IdxData {
    pub fn len(&self) -> usize {
        match self {
            IdxData::U8(v) => v.len(),
            IdxData::I8(v) => v.len(),
            IdxData::I16(v) => v.len(),
            IdxData::I32(v) => v.len(),
            IdxData::F32(v) => v.len(),
            IdxData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn type_code(&self) -> u8 {
        match self {
            IdxData::U8(_) => TYPE_U8,
            IdxData::I8(_) => TYPE_I8,
            IdxData::I16(_) => TYPE_I16,
            IdxData::I32(_) => TYPE_I32,
            IdxData::F32(_) => TYPE_F32,
            IdxData::F64(_) => TYPE_F64,
        }
    }
}

/// An n-dimensional tensor with its declared shape.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxTensor {
    pub dims: Vec<usize>,
    pub data: IdxData,
}

impl IdxTensor {
    pub fn from_f64(dims: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let expected: usize = dims.iter().product();
        if values.len() != expected {
            return Err(Error::invalid_input(format!(
                "{} values do not fill shape {:?}",
                values.len(),
                dims
            )));
        }
        Ok(IdxTensor {
            dims,
            data: IdxData::F64(values),
        })
    }

    pub fn element_count(&self) -> usize {
        self.dims.iter().product()
    }

    /// Values as f64; unsigned bytes are mapped to [0, 1].
    pub fn to_f64_normalized(&self) -> Vec<f64> {
        match &self.data {
            IdxData::U8(v) => v.iter().map(|&x| x as f64 / 255.0).collect(),
            IdxData::I8(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::I16(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::I32(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::F32(v) => v.iter().map(|&x| x as f64).collect(),
            IdxData::F64(v) => v.clone(),
        }
    }
}

struct CountingReader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> CountingReader<R> {
    fn read_exact_at(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::Format {
                        offset: self.offset + filled as u64,
                        message: format!("unexpected end of file while reading {what}"),
                    })
                }
                Ok(n) => filled += n,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn read_u8_at(&mut self, what: &str) -> Result<u8> {
        let mut b = [0u8; 1];
        self.read_exact_at(&mut b, what)?;
        Ok(b[0])
    }
}

/// Parses an IDX tensor from a reader.
pub fn read_idx_from<R: Read>(reader: R) -> Result<IdxTensor> {
    let mut r = CountingReader {
        inner: reader,
        offset: 0,
    };
    for i in 0..2 {
        let offset = r.offset;
        let b = r.read_u8_at("magic")?;
        if b != 0 {
            return Err(Error::Format {
                offset,
                message: format!("magic byte {i} is 0x{b:02x}, expected 0x00"),
            });
        }
    }
    let type_offset = r.offset;
    let type_code = r.read_u8_at("type code")?;
    let ndim = r.read_u8_at("dimension count")? as usize;
    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let mut b = [0u8; 4];
        r.read_exact_at(&mut b, "dimension size")?;
        dims.push(u32::from_be_bytes(b) as usize);
    }
    let count: usize = dims.iter().product();

    let elem_size = match type_code {
        TYPE_U8 | TYPE_I8 => 1,
        TYPE_I16 => 2,
        TYPE_I32 | TYPE_F32 => 4,
        TYPE_F64 => 8,
        other => {
            return Err(Error::Format {
                offset: type_offset,
                message: format!("unknown element type code 0x{other:02x}"),
            })
        }
    };
    let mut raw = vec![0u8; count * elem_size];
    r.read_exact_at(&mut raw, "tensor payload")?;

    // A valid file ends exactly at the payload boundary.
    let mut probe = [0u8; 1];
    if r.inner.read(&mut probe)? != 0 {
        return Err(Error::Format {
            offset: r.offset,
            message: "trailing bytes after declared payload".into(),
        });
    }

    let data = match type_code {
        TYPE_U8 => IdxData::U8(raw),
        TYPE_I8 => IdxData::I8(raw.into_iter().map(|b| b as i8).collect()),
        TYPE_I16 => IdxData::I16(
            raw.chunks_exact(2)
                .map(|c| i16::from_be_bytes([c[0], c[1]]))
                .collect(),
        ),
        TYPE_I32 => IdxData::I32(
            raw.chunks_exact(4)
                .map(|c| i32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        TYPE_F32 => IdxData::F32(
            raw.chunks_exact(4)
                .map(|c| f32::from_be_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        ),
        TYPE_F64 => IdxData::F64(
            raw.chunks_exact(8)
                .map(|c| f64::from_be_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        _ => unreachable!(),
    };
    Ok(IdxTensor { dims, data })
}

pub fn read_idx(path: &Path) -> Result<IdxTensor> {
    read_idx_from(BufReader::new(File::open(path)?))
}

/// Serializes a tensor in IDX layout.
pub fn write_idx_to<W: Write>(mut writer: W, tensor: &IdxTensor) -> Result<()> {
    if tensor.data.len() != tensor.element_count() {
        return Err(Error::invalid_input(format!(
            "payload of {} elements does not fill shape {:?}",
            tensor.data.len(),
            tensor.dims
        )));
    }
    if tensor.dims.len() > u8::MAX as usize {
        return Err(Error::invalid_input("too many dimensions for IDX header"));
    }
    writer.write_all(&[0, 0, tensor.data.type_code(), tensor.dims.len() as u8])?;
    for &d in &tensor.dims {
        writer.write_u32::<BigEndian>(u32::try_from(d).map_err(|_| {
            Error::invalid_input("dimension exceeds u32 range")
        })?)?;
    }
    match &tensor.data {
        IdxData::U8(v) => writer.write_all(v)?,
        IdxData::I8(v) => {
            for &x in v {
                writer.write_i8(x)?;
            }
        }
        IdxData::I16(v) => {
            for &x in v {
                writer.write_i16::<BigEndian>(x)?;
            }
        }
        IdxData::I32(v) => {
            for &x in v {
                writer.write_i32::<BigEndian>(x)?;
            }
        }
        IdxData::F32(v) => {
            for &x in v {
                writer.write_f32::<BigEndian>(x)?;
            }
        }
        IdxData::F64(v) => {
            for &x in v {
                writer.write_f64::<BigEndian>(x)?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn write_idx(path: &Path, tensor: &IdxTensor) -> Result<()> {
    write_idx_to(BufWriter::new(File::create(path)?), tensor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ubyte_file() -> Vec<u8> {
        // 0x00000803, dims (2, 2, 2), eight pixel bytes.
        let mut f = vec![0, 0, 0x08, 0x03];
        for d in [2u32, 2, 2] {
            f.extend_from_slice(&d.to_be_bytes());
        }
        f.extend_from_slice(&[0, 64, 128, 255, 1, 2, 3, 4]);
        f
    }

    #[test]
    fn parses_ubyte_images() {
        let t = read_idx_from(&ubyte_file()[..]).unwrap();
        assert_eq!(t.dims, vec![2, 2, 2]);
        assert_eq!(t.data, IdxData::U8(vec![0, 64, 128, 255, 1, 2, 3, 4]));
        let norm = t.to_f64_normalized();
        assert_eq!(norm[3], 1.0);
        assert_eq!(norm[0], 0.0);
    }

    #[test]
    fn truncated_payload_names_offset() {
        let mut f = ubyte_file();
        f.truncate(f.len() - 3);
        match read_idx_from(&f[..]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, f.len() as u64),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_names_offset() {
        let mut f = ubyte_file();
        f[1] = 7;
        match read_idx_from(&f[..]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 1),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_type_code_rejected() {
        let mut f = ubyte_file();
        f[2] = 0x77;
        assert!(matches!(read_idx_from(&f[..]), Err(Error::Format { offset: 2, .. })));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let original = ubyte_file();
        let t = read_idx_from(&original[..]).unwrap();
        let mut rewritten = Vec::new();
        write_idx_to(&mut rewritten, &t).unwrap();
        assert_eq!(rewritten, original);
    }

    #[test]
    fn f64_round_trip_preserves_bits() {
        let values = vec![0.1, -3.25, f64::MIN_POSITIVE, 1e300];
        let t = IdxTensor::from_f64(vec![2, 2], values.clone()).unwrap();
        let mut buf = Vec::new();
        write_idx_to(&mut buf, &t).unwrap();
        let back = read_idx_from(&buf[..]).unwrap();
        match back.data {
            IdxData::F64(v) => assert_eq!(v, values),
            other => panic!("wrong type {other:?}"),
        }
    }
}
