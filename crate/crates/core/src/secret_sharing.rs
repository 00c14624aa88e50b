//! `(Z, F)` ramp secret sharing with an `F x F` matrix over GF(2^z).
//!
//! A batch of `F - Z` secret symbol vectors `W` is stacked with `Z` uniformly
//! random key vectors `V` into `Y = [W; V]`, and the shares are `A = D Y`.
//! Any `Z` shares are independent of `W` exactly when, for every `Z`-subset of
//! rows, the `Z x Z` block of `D` on the last `Z` columns is invertible.
//! A Cauchy matrix has every square submatrix invertible, so it works for every `Z`.

use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::gf2e::{FieldSpec, GfError, Matrix, SymbolVec};

/// Largest joint space the leakage oracle will enumerate.
pub const LEAKAGE_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SharingError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("a {f}x{f} Cauchy matrix needs {} distinct points but GF(2^{z}) has only {}", 2 * f, 1u64 << z)]
    PointsExhausted { f: usize, z: u32 },
    #[error("matrix must be square and non-empty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("secrecy-unsafe: the submatrix on rows {rows:?}, columns {cols:?} (one-based) is rank deficient")]
    DeficientMinor { rows: Vec<usize>, cols: Vec<usize> },
    #[error("secrecy-unsafe for Z={z}: the key block on rows {rows:?} (one-based) is rank deficient")]
    DeficientKeyBlock { z: usize, rows: Vec<usize> },
    #[error("expected {expected} {what}, got {found}")]
    Dimension { what: &'static str, expected: usize, found: usize },
    #[error("missing shares: expected {expected}, got {found}")]
    MissingShares { expected: usize, found: usize },
    #[error("Z={z} must be below F={f}")]
    BadThreshold { z: usize, f: usize },
    #[error("leakage oracle needs {states} states, above the budget of {budget}")]
    BudgetExceeded { states: u128, budget: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// How a share matrix came to be trusted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// `d_ij = 1 / (x_i + y_j)` from distinct points.
    Cauchy { xs: Vec<u64>, ys: Vec<u64> },
    /// Literal values; every square submatrix was checked to be full rank.
    Literal,
    /// Literal values; only invertibility and the key block for one `Z` were checked.
    RampChecked { z: usize },
    /// No secrecy audit at all (used to demonstrate leakage).
    Unchecked,
}

/// An invertible `F x F` sharing matrix together with its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShareMatrix {
    matrix: Matrix,
    inverse: Matrix,
    provenance: Provenance,
}

impl ShareMatrix {
    fn from_invertible(matrix: Matrix, provenance: Provenance) -> Result<Self, SharingError> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(SharingError::NotSquare { rows: matrix.rows(), cols: matrix.cols() });
        }
        let inverse = matrix.inverse().map_err(|_| SharingError::Singular)?;
        Ok(Self { matrix, inverse, provenance })
    }

    /// Accepts a literal matrix after checking invertibility and the key block
    /// for threshold `z` only.
    pub fn ramp_checked(rows: &[Vec<u64>], spec: FieldSpec, z: usize) -> Result<Self, SharingError> {
        let matrix = Matrix::from_rows(spec, rows)?;
        let me = Self::from_invertible(matrix, Provenance::RampChecked { z })?;
        let report = secrecy_rank_check(&me, z)?;
        if let Some(rows) = report.violations.first() {
            return Err(SharingError::DeficientKeyBlock { z, rows: rows.iter().map(|r| r + 1).collect() });
        }
        Ok(me)
    }

    /// Any invertible matrix, with no secrecy guarantee.
    pub fn unchecked(matrix: Matrix) -> Result<Self, SharingError> {
        Self::from_invertible(matrix, Provenance::Unchecked)
    }

    pub fn identity(spec: FieldSpec, f: usize) -> Self {
        Self::unchecked(Matrix::identity(spec, f)).expect("identity is invertible")
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn spec(&self) -> FieldSpec {
        self.matrix.spec()
    }

    /// F, the number of shares.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }
}

impl fmt::Display for ShareMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.matrix.fmt(f)
    }
}

/// Cauchy matrix with `x_i = i - 1` and `y_j = F + j - 1` in the natural
/// encoding order of the field.
pub fn build_cauchy(f: usize, spec: FieldSpec) -> Result<ShareMatrix, SharingError> {
    if f == 0 {
        return Err(SharingError::NotSquare { rows: 0, cols: 0 });
    }
    if (2 * f) as u64 > spec.order() {
        return Err(SharingError::PointsExhausted { f, z: spec.degree() });
    }
    let xs: Vec<u64> = (0..f as u64).collect();
    let ys: Vec<u64> = (f as u64..2 * f as u64).collect();
    let rows: Vec<Vec<u64>> = xs
        .iter()
        .map(|&x| {
            ys.iter()
                .map(|&y| spec.inv_raw(x ^ y).expect("points are distinct"))
                .collect()
        })
        .collect();
    let matrix = Matrix::from_rows(spec, &rows)?;
    ShareMatrix::from_invertible(matrix, Provenance::Cauchy { xs, ys })
}

/// First rank-deficient square submatrix, by size, then rows, then columns.
pub fn first_deficient_minor(m: &Matrix) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = m.rows().min(m.cols());
    for size in 1..=n {
        for rows in (0..m.rows()).combinations(size) {
            for cols in (0..m.cols()).combinations(size) {
                if !m.submatrix(&rows, &cols).is_full_rank() {
                    return Some((rows, cols));
                }
            }
        }
    }
    None
}

/// Stores a literal matrix verbatim after checking that it is invertible and
/// that every square submatrix is full rank.
pub fn ingest_literal_matrix(rows: &[Vec<u64>], spec: FieldSpec) -> Result<ShareMatrix, SharingError> {
    let matrix = Matrix::from_rows(spec, rows)?;
    let me = ShareMatrix::from_invertible(matrix, Provenance::Literal)?;
    if let Some((rows, cols)) = first_deficient_minor(&me.matrix) {
        return Err(SharingError::DeficientMinor {
            rows: rows.iter().map(|r| r + 1).collect(),
            cols: cols.iter().map(|c| c + 1).collect(),
        });
    }
    Ok(me)
}

/// Parses `F` lines of `F` decimal field-element encodings; `#` lines are comments.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<u64>>, SharingError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<u64>().map_err(|_| SharingError::Parse {
                    line: i + 1,
                    message: format!("invalid field element {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SharingError::Parse { line: 0, message: "no matrix rows".into() });
    }
    if rows.iter().any(|r| r.len() != rows.len()) {
        return Err(SharingError::NotSquare {
            rows: rows.len(),
            cols: rows.iter().map(Vec::len).max().unwrap_or(0),
        });
    }
    Ok(rows)
}

/// `A = D [W; V]`, applied symbol position by symbol position.
pub fn share(
    secrets: &[SymbolVec],
    keys: &[SymbolVec],
    d: &ShareMatrix,
) -> Result<Vec<SymbolVec>, SharingError> {
    let f = d.size();
    if secrets.len() + keys.len() != f || secrets.is_empty() {
        return Err(SharingError::Dimension {
            what: "secret plus key vectors",
            expected: f,
            found: secrets.len() + keys.len(),
        });
    }
    let y: Vec<SymbolVec> = secrets.iter().chain(keys).cloned().collect();
    Ok(d.matrix.apply(&y)?)
}

/// `[W; V] = D^-1 A`; `z` is the number of key vectors.
pub fn reconstruct(
    shares: &[SymbolVec],
    d: &ShareMatrix,
    z: usize,
) -> Result<(Vec<SymbolVec>, Vec<SymbolVec>), SharingError> {
    let f = d.size();
    if shares.len() != f {
        return Err(SharingError::MissingShares { expected: f, found: shares.len() });
    }
    if z >= f {
        return Err(SharingError::BadThreshold { z, f });
    }
    let mut y = d.inverse.apply(shares)?;
    let keys = y.split_off(f - z);
    Ok((y, keys))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecrecyReport {
    pub z: usize,
    pub subsets_checked: usize,
    /// Zero-based row subsets whose key block is rank deficient.
    pub violations: Vec<Vec<usize>>,
}

impl SecrecyReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every `Z`-subset of rows, checks that the `Z x Z` block on the last `Z`
/// columns is full rank.
pub fn secrecy_rank_check(d: &ShareMatrix, z: usize) -> Result<SecrecyReport, SharingError> {
    let f = d.size();
    if z >= f {
        return Err(SharingError::BadThreshold { z, f });
    }
    let key_cols: Vec<usize> = (f - z..f).collect();
    let mut subsets_checked = 0;
    let mut violations = Vec::new();
    for rows in (0..f).combinations(z) {
        subsets_checked += 1;
        if z > 0 && !d.matrix.submatrix(&rows, &key_cols).is_full_rank() {
            violations.push(rows);
        }
    }
    Ok(SecrecyReport { z, subsets_checked, violations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeakageReport {
    /// Largest I(W; A_S) over all `Z`-subsets `S`, in bits.
    pub max_mi_bits: f64,
    /// True iff every subset's shares are exactly independent of the secret.
    pub exact_zero: bool,
    /// A zero-based subset achieving `max_mi_bits`, when positive.
    pub worst_subset: Option<Vec<usize>>,
    pub subsets: usize,
    pub states_per_subset: u64,
}

/// Brute-force I(W; A_S) for every `Z`-subset `S` of single-symbol shares, with
/// `W` and `V` uniform. For each secret the histogram of `A_S` over every key
/// vector is counted. Exact independence holds iff all histograms coincide.
pub fn share_leakage_oracle(d: &ShareMatrix, z: usize) -> Result<LeakageReport, SharingError> {
    let f = d.size();
    if z >= f {
        return Err(SharingError::BadThreshold { z, f });
    }
    let spec = d.spec();
    let q = spec.order();
    let states = (q as u128).pow(f as u32);
    if states > LEAKAGE_BUDGET as u128 {
        return Err(SharingError::BudgetExceeded { states, budget: LEAKAGE_BUDGET });
    }
    let bits = spec.degree();
    let w_count = q.pow((f - z) as u32);
    let v_count = q.pow(z as u32);
    let digits = |mut idx: u64, n: usize| -> Vec<u64> {
        (0..n)
            .map(|_| {
                let digit = idx % q;
                idx /= q;
                digit
            })
            .collect()
    };
    // packed D_S restricted to `cols`, applied to the vector `x`
    let project = |rows: &[usize], cols: std::ops::Range<usize>, x: &[u64]| -> usize {
        rows.iter().fold(0usize, |acc, &r| {
            let v = cols
                .clone()
                .zip(x)
                .fold(0u64, |s, (c, &xv)| s ^ spec.mul_raw(d.matrix.value(r, c), xv));
            (acc << bits) | v as usize
        })
    };

    let mut report = LeakageReport {
        max_mi_bits: 0.0,
        exact_zero: true,
        worst_subset: None,
        subsets: 0,
        states_per_subset: w_count * v_count,
    };
    for subset in (0..f).combinations(z) {
        report.subsets += 1;
        let key_part: Vec<usize> = (0..v_count).map(|v| project(&subset, f - z..f, &digits(v, z))).collect();
        let secret_part: Vec<usize> = (0..w_count).map(|w| project(&subset, 0..f - z, &digits(w, f - z))).collect();
        let width = 1usize << (bits as usize * z);
        let histogram = |w: usize| {
            let mut h = vec![0u64; width];
            for &kv in &key_part {
                h[secret_part[w] ^ kv] += 1;
            }
            h
        };
        let reference = histogram(0);
        let independent = (1..w_count as usize).all(|w| histogram(w) == reference);
        if independent {
            continue;
        }
        report.exact_zero = false;
        let mut marginal = vec![0u64; width];
        for w in 0..w_count as usize {
            for (m, h) in marginal.iter_mut().zip(histogram(w)) {
                *m += h;
            }
        }
        let mut mi = 0.0;
        for w in 0..w_count as usize {
            for (a, &c) in histogram(w).iter().enumerate() {
                if c > 0 {
                    let p = c as f64 / (w_count * v_count) as f64;
                    mi += p * ((c as f64 * w_count as f64) / marginal[a] as f64).log2();
                }
            }
        }
        if mi > report.max_mi_bits {
            report.max_mi_bits = mi;
            report.worst_subset = Some(subset);
        }
    }
    Ok(report)
}
