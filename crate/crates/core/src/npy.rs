//! Minimal reader/writer for the NPY v1.0 array format.
//!
//! Only little-endian `f8`/`f4` arrays in C order are supported, which is all the
//! weight containers, operator files and trajectory dumps need. Arrays are always
//! held as `f64` in memory; the on-disk dtype is kept alongside so that a float32
//! file is written back as float32 (every `f32` is exactly representable as `f64`).

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// On-disk element type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    #[default]
    F64,
    F32,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::F64 => "<f8",
            Dtype::F32 => "<f4",
        }
    }

    fn width(self) -> usize {
        match self {
            Dtype::F64 => 8,
            Dtype::F32 => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub dtype: Dtype,
}

impl NpyArray {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        NpyArray { shape, data, dtype: Dtype::F64 }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        NpyArray::new(vec![data.len()], data)
    }

    /// Row-major matrix from a `nalgebra` matrix (which is column-major in memory).
    pub fn from_matrix(m: &nalgebra::DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            data.extend(m.row(r).iter().copied());
        }
        NpyArray::new(vec![rows, cols], data)
    }

    pub fn to_matrix(&self, key: &str) -> Result<nalgebra::DMatrix<f64>> {
        match self.shape.as_slice() {
            [rows, cols] => Ok(nalgebra::DMatrix::from_row_slice(*rows, *cols, &self.data)),
            other => Err(Error::ShapeMismatch {
                key: key.to_string(),
                expected: "2-d array".into(),
                found: format!("{other:?}"),
            }),
        }
    }

    pub fn to_vector(&self, key: &str) -> Result<nalgebra::DVector<f64>> {
        match self.shape.as_slice() {
            [_] => Ok(nalgebra::DVector::from_vec(self.data.clone())),
            other => Err(Error::ShapeMismatch {
                key: key.to_string(),
                expected: "1-d array".into(),
                found: format!("{other:?}"),
            }),
        }
    }
}

fn header_text(dtype: Dtype, shape: &[usize]) -> String {
    let shape_txt = match shape {
        [n] => format!("({n},)"),
        dims => format!(
            "({})",
            dims.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        dtype.descr(),
        shape_txt
    );
    // magic(6) + version(2) + len(2) + header + '\n' must be a multiple of ALIGN
    let unpadded = MAGIC.len() + 2 + 2 + header.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    header.extend(std::iter::repeat_n(' ', pad));
    header.push('\n');
    header
}

pub fn write_npy<W: Write>(w: &mut W, array: &NpyArray) -> std::io::Result<()> {
    let header = header_text(array.dtype, &array.shape);
    w.write_all(MAGIC)?;
    w.write_all(&[1, 0])?;
    w.write_all(&(header.len() as u16).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    let mut buf = Vec::with_capacity(array.data.len() * array.dtype.width());
    match array.dtype {
        Dtype::F64 => array.data.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes())),
        Dtype::F32 => array
            .data
            .iter()
            .for_each(|v| buf.extend_from_slice(&(*v as f32).to_le_bytes())),
    }
    w.write_all(&buf)
}

pub fn to_bytes(array: &NpyArray) -> Vec<u8> {
    let mut out = Vec::new();
    write_npy(&mut out, array).expect("writing to a Vec cannot fail");
    out
}

/// Reads one array. `key` is only used to label errors.
pub fn read_npy<R: Read>(r: &mut R, key: &str) -> Result<NpyArray> {
    let bad = |reason: String| Error::Npy { key: key.to_string(), reason };
    let io = |e: std::io::Error| bad(e.to_string());

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(bad("bad magic string".into()));
    }
    let mut version = [0u8; 2];
    r.read_exact(&mut version).map_err(io)?;
    let header_len = match version[0] {
        1 => {
            let mut len = [0u8; 2];
            r.read_exact(&mut len).map_err(io)?;
            u16::from_le_bytes(len) as usize
        }
        2 | 3 => {
            let mut len = [0u8; 4];
            r.read_exact(&mut len).map_err(io)?;
            u32::from_le_bytes(len) as usize
        }
        v => return Err(bad(format!("unsupported format version {v}"))),
    };
    let mut header = vec![0u8; header_len];
    r.read_exact(&mut header).map_err(io)?;
    let header = String::from_utf8(header).map_err(|_| bad("header is not utf-8".into()))?;
    let (dtype, fortran, shape) = parse_header(&header).map_err(bad)?;
    if fortran {
        return Err(bad("fortran-ordered arrays are not supported".into()));
    }

    let count: usize = shape.iter().product();
    let mut raw = vec![0u8; count * dtype.width()];
    r.read_exact(&mut raw).map_err(io)?;
    let data = match dtype {
        Dtype::F64 => raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Ok(NpyArray { shape, data, dtype })
}

fn dict_value<'a>(header: &'a str, key: &str) -> std::result::Result<&'a str, String> {
    let needle = format!("'{key}':");
    let start = header
        .find(&needle)
        .ok_or_else(|| format!("header lacks '{key}'"))?
        + needle.len();
    Ok(header[start..].trim_start())
}

fn parse_header(header: &str) -> std::result::Result<(Dtype, bool, Vec<usize>), String> {
    let descr = dict_value(header, "descr")?;
    let descr = descr
        .strip_prefix('\'')
        .and_then(|s| s.split('\'').next())
        .ok_or("malformed descr")?;
    let dtype = match descr {
        "<f8" => Dtype::F64,
        "<f4" => Dtype::F32,
        other => return Err(format!("unsupported dtype '{other}' (need <f8 or <f4)")),
    };

    let fortran = dict_value(header, "fortran_order")?;
    let fortran = if fortran.starts_with("True") {
        true
    } else if fortran.starts_with("False") {
        false
    } else {
        return Err("malformed fortran_order".into());
    };

    let shape = dict_value(header, "shape")?;
    let inner = shape
        .strip_prefix('(')
        .and_then(|s| s.split(')').next())
        .ok_or("malformed shape")?;
    let shape = inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|_| format!("bad shape entry '{s}'")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((dtype, fortran, shape))
}

pub fn read_npy_file(path: &std::path::Path) -> Result<NpyArray> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_npy(&mut std::io::BufReader::new(file), &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_aligned_and_numpy_shaped() {
        let bytes = to_bytes(&NpyArray::new(vec![3, 4], vec![0.0; 12]));
        let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
        assert_eq!((10 + header_len) % 64, 0);
        let header = std::str::from_utf8(&bytes[10..10 + header_len]).unwrap();
        assert!(header.starts_with("{'descr': '<f8', 'fortran_order': False, 'shape': (3, 4), }"));
        assert!(header.ends_with('\n'));
        assert_eq!(bytes.len(), 10 + header_len + 12 * 8);
    }

    #[test]
    fn one_dimensional_shape_has_trailing_comma() {
        assert!(header_text(Dtype::F64, &[5]).contains("'shape': (5,)"));
    }

    #[test]
    fn rejects_big_endian_and_fortran() {
        let mut bytes = to_bytes(&NpyArray::vector(vec![1.0]));
        let pos = bytes.windows(3).position(|w| w == b"<f8").unwrap();
        bytes[pos] = b'>';
        assert!(read_npy(&mut bytes.as_slice(), "x").is_err());

        let mut bytes = to_bytes(&NpyArray::vector(vec![1.0]));
        let pos = bytes.windows(5).position(|w| w == b"False").unwrap();
        bytes[pos..pos + 5].copy_from_slice(b"True ");
        let err = read_npy(&mut bytes.as_slice(), "x").unwrap_err();
        assert!(err.to_string().contains("fortran"));
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let bytes = to_bytes(&NpyArray::vector(vec![1.0, 2.0]));
        assert!(read_npy(&mut &bytes[..bytes.len() - 1], "x").is_err());
    }

    proptest! {
        #[test]
        fn write_read_write_is_byte_identical(
            data in prop::collection::vec(any::<f64>(), 0..40),
            f32_storage in any::<bool>(),
        ) {
            let mut array = NpyArray::vector(data);
            if f32_storage {
                array.dtype = Dtype::F32;
            }
            let first = to_bytes(&array);
            let back = read_npy(&mut first.as_slice(), "x").unwrap();
            prop_assert_eq!(back.dtype, array.dtype);
            prop_assert_eq!(to_bytes(&back), first);
        }
    }
}
