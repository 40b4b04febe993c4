//! The LFD1 binary field format.
//!
//! ```text
//! 0..4   magic "LFD1"
//! 4      kind: 0 scalar, 1 vector, 2 matrix
//! 5      dimension d
//! 6..8   reserved, zero
//! 8..12  n, u32 little-endian
//! 12..20 L, f64 little-endian
//! 20..   complex samples as interleaved (re, im) f64 little-endian, row-major
//!        over grid points; components innermost (vector: j; matrix: j, k)
//! ```

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{MatrixPotentialField, ScalarField, VectorField};
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"LFD1";
const HEADER_LEN: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum FieldKind {
    Scalar = 0,
    Vector = 1,
    Matrix = 2,
}

impl FieldKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(FieldKind::Scalar),
            1 => Some(FieldKind::Vector),
            2 => Some(FieldKind::Matrix),
            _ => None,
        }
    }

    fn components(self, dim: usize) -> usize {
        match self {
            FieldKind::Scalar => 1,
            FieldKind::Vector => dim,
            FieldKind::Matrix => dim * dim,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Field {
    Scalar(ScalarField),
    Vector(VectorField),
    Matrix(MatrixPotentialField),
}

impl Field {
    pub fn kind(&self) -> FieldKind {
        match self {
            Field::Scalar(_) => FieldKind::Scalar,
            Field::Vector(_) => FieldKind::Vector,
            Field::Matrix(_) => FieldKind::Matrix,
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Field::Scalar(f) => f.grid(),
            Field::Vector(f) => f.grid(),
            Field::Matrix(f) => f.grid(),
        }
    }
}

impl From<ScalarField> for Field {
    fn from(f: ScalarField) -> Self {
        Field::Scalar(f)
    }
}

impl From<VectorField> for Field {
    fn from(f: VectorField) -> Self {
        Field::Vector(f)
    }
}

impl From<MatrixPotentialField> for Field {
    fn from(f: MatrixPotentialField) -> Self {
        Field::Matrix(f)
    }
}

pub fn encode(field: &Field) -> Vec<u8> {
    let grid = field.grid();
    let samples: Vec<Complex64> = match field {
        Field::Scalar(f) => f.samples().to_vec(),
        Field::Vector(f) => f.to_interleaved(),
        Field::Matrix(f) => f.entries().to_vec(),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * samples.len());
    out.extend_from_slice(MAGIC);
    out.push(field.kind() as u8);
    out.push(grid.dim() as u8);
    out.extend_from_slice(&[0, 0]);
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.length().to_le_bytes());
    for z in samples {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Field> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(bytes.len() as u64, format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::format(0, format!("bad magic {:?}", String::from_utf8_lossy(&bytes[0..4]))));
    }
    let kind = FieldKind::from_byte(bytes[4]).ok_or_else(|| Error::format(4, format!("unknown field kind {}", bytes[4])))?;
    let dim = bytes[5] as usize;
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::format(6, "reserved bytes must be zero"));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("slice of 4")) as usize;
    let length = f64::from_le_bytes(bytes[12..20].try_into().expect("slice of 8"));
    let grid = Grid::new(dim, n, length).map_err(|e| Error::format(5, format!("invalid grid header: {e}")))?;

    let count = kind.components(dim) * grid.len();
    let expected = HEADER_LEN + 16 * count;
    if bytes.len() < expected {
        return Err(Error::format(bytes.len() as u64, format!("truncated payload: expected {expected} bytes")));
    }
    if bytes.len() > expected {
        return Err(Error::format(expected as u64, format!("{} trailing bytes", bytes.len() - expected)));
    }
    let samples: Vec<Complex64> = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[0..8].try_into().expect("slice of 8")),
                f64::from_le_bytes(c[8..16].try_into().expect("slice of 8")),
            )
        })
        .collect();
    if let Some(pos) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::format((HEADER_LEN + 16 * pos) as u64, "non-finite sample"));
    }
    Ok(match kind {
        FieldKind::Scalar => Field::Scalar(ScalarField::new(grid, samples)?),
        FieldKind::Vector => Field::Vector(VectorField::from_interleaved(grid, &samples)?),
        FieldKind::Matrix => Field::Matrix(MatrixPotentialField::new(grid, samples)?),
    })
}

pub fn save_field(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(field)).map_err(|e| Error::io(path, e))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<Field> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn kind_mismatch(expected: FieldKind, got: FieldKind) -> Error {
    Error::Shape(format!("expected a {expected:?} field, file holds a {got:?} field"))
}

pub fn load_scalar_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    match load_field(path)? {
        Field::Scalar(f) => Ok(f),
        other => Err(kind_mismatch(FieldKind::Scalar, other.kind())),
    }
}

pub fn load_vector_field(path: impl AsRef<Path>) -> Result<VectorField> {
    match load_field(path)? {
        Field::Vector(f) => Ok(f),
        other => Err(kind_mismatch(FieldKind::Vector, other.kind())),
    }
}

pub fn load_matrix_field(path: impl AsRef<Path>) -> Result<MatrixPotentialField> {
    match load_field(path)? {
        Field::Matrix(f) => Ok(f),
        other => Err(kind_mismatch(FieldKind::Matrix, other.kind())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_vector() -> VectorField {
        let g = Grid::new(2, 4, 1.5).unwrap();
        VectorField::from_fn(g, |x| {
            [Complex64::new(x[0], -x[1]), Complex64::new(0.25, x[0] * x[1]), Complex64::new(0.0, 0.0)]
        })
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&Field::Vector(sample_vector()));
        assert_eq!(&bytes[0..4], b"LFD1");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 2);
        assert_eq!(&bytes[6..8], &[0, 0]);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1.5);
        assert_eq!(bytes.len(), 20 + 16 * 2 * 16);
        // second sample is component 1 of point 0
        let re = f64::from_le_bytes(bytes[36..44].try_into().unwrap());
        assert_eq!(re, 0.25);
    }

    #[test]
    fn bad_magic() {
        let mut bytes = encode(&Field::Vector(sample_vector()));
        bytes[0..4].copy_from_slice(b"XXXX");
        assert!(matches!(decode(&bytes), Err(Error::Format { offset: 0, .. })));
    }

    #[test]
    fn truncation_reports_offset() {
        let bytes = encode(&Field::Vector(sample_vector()));
        let cut = &bytes[..bytes.len() - 5];
        match decode(cut) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, cut.len() as u64),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(matches!(decode(&bytes[..10]), Err(Error::Format { .. })));
    }

    #[test]
    fn nonzero_reserved_rejected() {
        let mut bytes = encode(&Field::Vector(sample_vector()));
        bytes[7] = 1;
        assert!(matches!(decode(&bytes), Err(Error::Format { offset: 6, .. })));
    }

    #[test]
    fn scalar_file_is_not_a_potential() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.lfd");
        let g = Grid::new(3, 4, 1.0).unwrap();
        save_field(&Field::Scalar(ScalarField::constant(g, Complex64::new(1.0, 0.0))), &path).unwrap();
        assert!(matches!(load_matrix_field(&path), Err(Error::Shape(_))));
        assert!(load_scalar_field(&path).is_ok());
    }
}
