use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::io::{BinReader, BinWriter};

const MAGIC: &[u8; 4] = b"TGEM";
const VERSION: u32 = 1;

/// Word vectors (`input`) and context vectors (`output`), both `rows x dim`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    input: Vec<f64>,
    output: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_parts(rows: usize, dim: usize, input: Vec<f64>, output: Vec<f64>) -> Result<Self> {
        if input.len() != rows * dim || output.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                got: input.len().max(output.len()),
            });
        }
        Ok(Self {
            rows,
            dim,
            input,
            output,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn input_row(&self, i: usize) -> &[f64] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn output_row(&self, i: usize) -> &[f64] {
        &self.output[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_vectors(&self) -> &[f64] {
        &self.input
    }

    pub fn output_vectors(&self) -> &[f64] {
        &self.output
    }

    pub(crate) fn shared_rows(&self) -> Vec<Arc<[f64]>> {
        (0..self.rows).map(|i| Arc::from(self.input_row(i))).collect()
    }

    /// `TGEM`, u32 version, u32 rows, u32 dim, then input and output matrices
    /// as little-endian f64, row-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = BinWriter::new();
        self.write(&mut w);
        w.into_bytes()
    }

    pub(crate) fn write(&self, w: &mut BinWriter) {
        w.bytes(MAGIC);
        w.u32(VERSION);
        w.len32(self.rows);
        w.len32(self.dim);
        w.f64s(&self.input);
        w.f64s(&self.output);
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = BinReader::new(bytes);
        let m = Self::read(&mut r)?;
        r.finish()?;
        Ok(m)
    }

    pub(crate) fn read(r: &mut BinReader) -> Result<Self> {
        r.expect_magic(MAGIC)?;
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported TGEM version {version}")));
        }
        let rows = r.len32()?;
        let dim = r.len32()?;
        let input = r.f64s(rows * dim)?;
        let output = r.f64s(rows * dim)?;
        Self::from_parts(rows, dim, input, output)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let m = EmbeddingMatrix::from_parts(1, 2, vec![1.0, -2.0], vec![0.5, 0.0]).unwrap();
        let b = m.to_bytes();
        assert_eq!(&b[..4], b"TGEM");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        assert_eq!(&b[16..24], &1.0f64.to_le_bytes());
        assert_eq!(b.len(), 16 + 4 * 8);
    }

    #[test]
    fn rejects_garbage() {
        assert!(EmbeddingMatrix::from_bytes(b"TGMD").is_err());
        let mut b = EmbeddingMatrix::from_parts(1, 1, vec![1.0], vec![1.0]).unwrap().to_bytes();
        b.push(0);
        assert!(EmbeddingMatrix::from_bytes(&b).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(rows in 0usize..5, dim in 1usize..5, seed in any::<u64>()) {
            use rand::Rng;
            let mut rng = crate::rng::seeded(seed);
            let input: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let output: Vec<f64> = (0..rows * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = EmbeddingMatrix::from_parts(rows, dim, input, output).unwrap();
            prop_assert_eq!(EmbeddingMatrix::from_bytes(&m.to_bytes()).unwrap(), m);
        }
    }
}
