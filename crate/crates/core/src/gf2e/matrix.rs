use std::fmt;

use super::{FieldElement, FieldSpec, GfError, SymbolVec};

/// Dense matrix over GF(2^z), row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    spec: FieldSpec,
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Matrix {
    pub fn from_rows(spec: FieldSpec, rows: &[Vec<u64>]) -> Result<Self, GfError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(GfError::Dimension("ragged matrix rows".into()));
        }
        let data: Vec<u64> = rows.iter().flatten().copied().collect();
        if let Some(&value) = data.iter().find(|&&v| v >= spec.order()) {
            return Err(GfError::OutOfRange { value, z: spec.degree() });
        }
        Ok(Self { spec, rows: rows.len(), cols, data })
    }

    pub fn identity(spec: FieldSpec, n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self { spec, rows: n, cols: n, data }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn value(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    pub fn entry(&self, i: usize, j: usize) -> FieldElement {
        FieldElement { value: self.value(i, j), spec: self.spec }
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.cols.max(1)).map(<[u64]>::to_vec).collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let data = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.value(i, j)))
            .collect();
        Self { spec: self.spec, rows: rows.len(), cols: cols.len(), data }
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.data.clone();
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| m[r * cols + col] != 0) else {
                continue;
            };
            for j in 0..cols {
                m.swap(rank * cols + j, pivot * cols + j);
            }
            let inv = self.spec.inv_raw(m[rank * cols + col]).expect("pivot is nonzero");
            for r in 0..rows {
                if r == rank || m[r * cols + col] == 0 {
                    continue;
                }
                let factor = self.spec.mul_raw(m[r * cols + col], inv);
                for j in 0..cols {
                    m[r * cols + j] ^= self.spec.mul_raw(factor, m[rank * cols + j]);
                }
            }
            rank += 1;
            if rank == rows {
                break;
            }
        }
        rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.rows.min(self.cols)
    }

    /// Gauss-Jordan inverse.
    pub fn inverse(&self) -> Result<Self, GfError> {
        if !self.is_square() {
            return Err(GfError::Dimension(format!(
                "cannot invert a {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.data.clone();
        let mut inv = Self::identity(self.spec, n).data;
        for col in 0..n {
            let pivot = (col..n).find(|&r| a[r * n + col] != 0).ok_or(GfError::Singular)?;
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
                inv.swap(col * n + j, pivot * n + j);
            }
            let p = self.spec.inv_raw(a[col * n + col]).expect("pivot is nonzero");
            for j in 0..n {
                a[col * n + j] = self.spec.mul_raw(a[col * n + j], p);
                inv[col * n + j] = self.spec.mul_raw(inv[col * n + j], p);
            }
            for r in 0..n {
                let factor = a[r * n + col];
                if r == col || factor == 0 {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] ^= self.spec.mul_raw(factor, a[col * n + j]);
                    inv[r * n + j] ^= self.spec.mul_raw(factor, inv[col * n + j]);
                }
            }
        }
        Ok(Self { spec: self.spec, rows: n, cols: n, data: inv })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, GfError> {
        if self.spec != other.spec {
            return Err(GfError::FieldMismatch { left: self.spec, right: other.spec });
        }
        if self.cols != other.rows {
            return Err(GfError::Dimension(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.value(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    data[i * other.cols + j] ^= self.spec.mul_raw(a, other.value(k, j));
                }
            }
        }
        Ok(Self { spec: self.spec, rows: self.rows, cols: other.cols, data })
    }

    /// Multiplies this matrix into a column of symbol vectors, position by position.
    pub fn apply(&self, column: &[SymbolVec]) -> Result<Vec<SymbolVec>, GfError> {
        if column.len() != self.cols {
            return Err(GfError::Dimension(format!(
                "{}x{} matrix applied to {} entries",
                self.rows,
                self.cols,
                column.len()
            )));
        }
        let len = column.first().map_or(0, SymbolVec::len);
        for y in column {
            if y.spec() != self.spec {
                return Err(GfError::FieldMismatch { left: self.spec, right: y.spec() });
            }
            if y.len() != len {
                return Err(GfError::Dimension("symbol vectors of unequal length".into()));
            }
        }
        Ok((0..self.rows)
            .map(|i| {
                let mut values = vec![0u64; len];
                for (j, y) in column.iter().enumerate() {
                    let d = self.value(i, j);
                    for (acc, &v) in values.iter_mut().zip(y.values()) {
                        *acc ^= self.spec.mul_raw(d, v);
                    }
                }
                SymbolVec::new(self.spec, values).expect("products stay in the field")
            })
            .collect())
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_rows() {
            let line: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}
