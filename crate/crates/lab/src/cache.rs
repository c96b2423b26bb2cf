//! Binary eigenpair cache.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes        | field                                         |
//! |--------------|-----------------------------------------------|
//! | 4            | magic `NBL1`                                  |
//! | 4            | `dim` (u32)                                   |
//! | 4            | `n` (u32)                                     |
//! | 4            | `m` (i32)                                     |
//! | 8·dim²       | flux matrix, row-major (i64)                  |
//! | 4            | `k` (u32)                                     |
//! | 8            | solver seed (u64)                             |
//! | 32           | config hash (SHA-256)                         |
//! | 8·k          | eigenvalues (f64)                             |
//! | 16·k·nᵈ      | sections, each `re, im` interleaved (f64)     |

use std::path::Path;

use nodalkk_core::{BaseGrid, Complex64, Connection, EigenPair, Section};

use crate::error::{LabError, Result};

pub const MAGIC: &[u8; 4] = b"NBL1";

#[derive(Debug, Clone, PartialEq)]
pub struct CacheFile {
    pub dim: u32,
    pub n: u32,
    pub m: i32,
    pub flux: Vec<i64>,
    pub seed: u64,
    pub config_hash: [u8; 32],
    pub eigenvalues: Vec<f64>,
    /// One row-major grid function per eigenvalue.
    pub sections: Vec<Vec<Complex64>>,
}

impl CacheFile {
    pub fn from_eigenpairs(eigs: &[EigenPair], flux: &nodalkk_core::Flux, seed: u64, config_hash: [u8; 32]) -> Result<Self> {
        let first = eigs.first().ok_or_else(|| LabError::Cache("no eigenpairs to store".into()))?;
        let s = &first.section;
        Ok(Self {
            dim: s.dim() as u32,
            n: s.n() as u32,
            m: first.m,
            flux: flux.rows().concat(),
            seed,
            config_hash,
            eigenvalues: eigs.iter().map(|e| e.lambda).collect(),
            sections: eigs.iter().map(|e| e.section.values().to_vec()).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid_len(&self) -> usize {
        (self.n as usize).pow(self.dim)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let len = self.grid_len();
        let mut out = Vec::with_capacity(64 + 8 * self.flux.len() + 8 * self.k() * (1 + 2 * len));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&self.dim.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m.to_le_bytes());
        for v in &self.flux {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.k() as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&self.config_hash);
        for v in &self.eigenvalues {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for s in &self.sections {
            for z in s {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(LabError::Cache("bad magic".into()));
        }
        let dim = r.u32()?;
        if !(2..=3).contains(&dim) {
            return Err(LabError::Cache(format!("unsupported dimension {dim}")));
        }
        let n = r.u32()?;
        let m = r.u32()? as i32;
        let flux = (0..dim * dim).map(|_| r.u64().map(|v| v as i64)).collect::<Result<Vec<_>>>()?;
        let k = r.u32()? as usize;
        let seed = r.u64()?;
        let config_hash: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
        let len = (n as usize)
            .checked_pow(dim)
            .ok_or_else(|| LabError::Cache("grid size overflows".into()))?;
        let expected = k.checked_mul(8 + 16 * len).ok_or_else(|| LabError::Cache("payload size overflows".into()))?;
        if bytes.len() - r.pos != expected {
            return Err(LabError::Cache(format!("payload is {} bytes, header implies {expected}", bytes.len() - r.pos)));
        }
        let eigenvalues = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let mut sections = Vec::with_capacity(k);
        for _ in 0..k {
            let s = (0..len).map(|_| Ok(Complex64::new(r.f64()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
            sections.push(s);
        }
        Ok(Self { dim, n, m, flux, seed, config_hash, eigenvalues, sections })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, &self.to_bytes())
    }

    /// Reads a cache and requires its header hash to equal `expected_hash`.
    pub fn read(path: &Path, expected_hash: &[u8; 32]) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| LabError::io(path, e))?;
        let c = Self::from_bytes(&bytes)?;
        if &c.config_hash != expected_hash {
            return Err(LabError::HashMismatch { expected: hex::encode(expected_hash), found: hex::encode(c.config_hash) });
        }
        Ok(c)
    }

    /// Rebuilds eigenpairs against `conn`, recomputing residuals.
    pub fn eigenpairs(&self, grid: &BaseGrid, conn: &Connection) -> Result<Vec<EigenPair>> {
        if grid.dim() as u32 != self.dim || grid.n() as u32 != self.n || conn.flux().rows().concat() != self.flux {
            return Err(LabError::Cache("cache does not match the configured geometry".into()));
        }
        let op = nodalkk_core::assemble_forms(grid, conn, self.m)?;
        self.eigenvalues
            .iter()
            .zip(&self.sections)
            .map(|(&lambda, v)| {
                let residual = op.residual(v, lambda);
                let section = Section::new(conn, self.m, v.clone())?;
                Ok(EigenPair { m: self.m, lambda, section, residual })
            })
            .collect()
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LabError::Cache("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CacheFile {
        CacheFile {
            dim: 2,
            n: 2,
            m: -3,
            flux: vec![0, 1, -1, 0],
            seed: 7,
            config_hash: [9; 32],
            eigenvalues: vec![1.5, -0.0],
            sections: vec![vec![Complex64::new(1.0, -2.0); 4], vec![Complex64::new(f64::MIN_POSITIVE, 3.0); 4]],
        }
    }

    #[test]
    fn header_layout() {
        let b = sample().to_bytes();
        assert_eq!(&b[..4], b"NBL1");
        assert_eq!(&b[4..8], &2u32.to_le_bytes());
        assert_eq!(&b[12..16], &(-3i32).to_le_bytes());
        assert_eq!(b.len(), 4 + 12 + 32 + 4 + 8 + 32 + 16 + 2 * 4 * 16);
    }

    #[test]
    fn truncation_and_bad_magic_are_errors() {
        let b = sample().to_bytes();
        assert!(CacheFile::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(CacheFile::from_bytes(&bad).is_err());
        let mut extra = b;
        extra.push(0);
        assert!(CacheFile::from_bytes(&extra).is_err());
    }
}
