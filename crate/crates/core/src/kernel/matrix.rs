use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::error::{Error, Result};

/// Dense `n × n` real matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct MatrixKernel {
    n: usize,
    entries: Vec<f64>,
}

/// On-disk JSON shape: `{"n": 2, "entries": [[1, 2], [3, 4]]}`.
#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixFile> for MatrixKernel {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        if file.entries.len() != file.n {
            return Err(Error::invalid(format!(
                "declared n = {} but found {} rows",
                file.n,
                file.entries.len()
            )));
        }
        Self::from_rows(file.entries)
    }
}

impl From<MatrixKernel> for MatrixFile {
    fn from(k: MatrixKernel) -> Self {
        MatrixFile {
            n: k.n,
            entries: k.to_rows(),
        }
    }
}

impl MatrixKernel {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("matrix dimension must be at least 1"));
        }
        if entries.len() != n * n {
            return Err(Error::invalid(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(p) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "entry ({}, {}) is not finite",
                p / n,
                p % n
            )));
        }
        Ok(Self { n, entries })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!(
                "matrix is not square: row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    pub fn is_non_negative(&self) -> bool {
        self.entries.iter().all(|&v| v >= 0.0)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            entries: self.entries.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j];
            }
        }
        Self { n, entries }
    }

    /// `self + shift * I`.
    pub fn shifted(&self, shift: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.entries[i * self.n + i] += shift;
        }
        out
    }

    /// Matrix product; each entry accumulates over the middle index in order.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            let out = &mut entries[i * n..(i + 1) * n];
            for j in 0..n {
                let a = self.entries[i * n + j];
                for (o, b) in out.iter_mut().zip(other.row(j)) {
                    *o += a * b;
                }
            }
        }
        if let Some(p) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range(format!(
                "product entry ({}, {}) overflowed",
                p / n,
                p % n
            )));
        }
        Ok(Self { n, entries })
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::invalid(format!(
                "dimension mismatch: {} vs {}",
                self.n, other.n
            )));
        }
        Ok(())
    }
}

impl Kernel for MatrixKernel {
    fn dim(&self) -> usize {
        self.n
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }

    fn row_sums(&self) -> Vec<f64> {
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().fold(0.0, |a, v| a + v))
            .collect()
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match kernel dimension");
        self.entries
            .chunks(self.n)
            .map(|r| r.iter().zip(v).fold(0.0, |a, (k, x)| a + k * x))
            .collect()
    }

    fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "vector length must match kernel dimension");
        let mut out = vec![0.0; self.n];
        for (r, &vi) in self.entries.chunks(self.n).zip(v) {
            for (o, k) in out.iter_mut().zip(r) {
                *o += vi * k;
            }
        }
        out
    }

    fn first_negative(&self) -> Option<(usize, usize)> {
        self.entries
            .iter()
            .position(|&v| v < 0.0)
            .map(|p| (p / self.n, p % self.n))
    }
}
