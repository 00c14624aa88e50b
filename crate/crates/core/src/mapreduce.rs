//! The job model: linear map functions, intermediate values and reduce functions.
//!
//! Node `q` (one-based) computes output function `q`. Its map function is
//! symbol-wise multiplication by a nonzero scalar `alpha_q`, which commutes with
//! the sharing matrix. Its reduce function is the field sum of all its
//! intermediate values.
//!
//! Under [`MapFamily::Blocked`] a file holds one block of `L_sym` symbols per
//! function and `g_q` scales block `q` only, so IVs of different functions are
//! independent.

use bitvec::prelude::*;
use thiserror::Error;

use crate::gf2e::{FieldElement, FieldSpec, GfError, SymbolVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapReduceError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("intermediate value {0} is missing")]
    MissingIv(usize),
    #[error("no intermediate values to reduce")]
    Empty,
    #[error("input holds {found} bytes but {expected} are needed for {files} files of {bits} bits")]
    BlobSize { expected: usize, found: usize, files: usize, bits: usize },
}

/// How map functions read a file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapFamily {
    /// Files have `L_sym` symbols and `g_q` scales all of them.
    #[default]
    Scalar,
    /// Files have `Q * L_sym` symbols and `g_q` scales block `q`.
    Blocked,
}

impl MapFamily {
    /// Symbols per file for `q_count` output functions.
    pub fn file_symbols(self, lsym: usize, q_count: usize) -> usize {
        match self {
            MapFamily::Scalar => lsym,
            MapFamily::Blocked => lsym * q_count,
        }
    }

    pub fn function(self, q: usize, spec: FieldSpec, lsym: usize) -> MapFunction {
        let g = MapFunction::for_output(q, spec);
        match self {
            MapFamily::Scalar => g,
            MapFamily::Blocked => MapFunction { window: Some(((q - 1) * lsym, lsym)), ..g },
        }
    }
}

/// `g_q`: multiplication by `alpha_q` on every symbol, or on one block of symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapFunction {
    q: usize,
    alpha: FieldElement,
    window: Option<(usize, usize)>,
}

impl MapFunction {
    /// The map function of output `q` (one-based): `alpha_q = ((q - 1) mod (2^z - 1)) + 1`.
    pub fn for_output(q: usize, spec: FieldSpec) -> Self {
        let nonzero = spec.order() - 1;
        let value = ((q as u64).saturating_sub(1) % nonzero) + 1;
        Self { q, alpha: spec.element(value).expect("value below field order"), window: None }
    }

    pub fn with_scalar(q: usize, alpha: FieldElement) -> Result<Self, GfError> {
        if alpha.is_zero() {
            return Err(GfError::DivisionByZero(alpha.spec()));
        }
        Ok(Self { q, alpha, window: None })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn alpha(&self) -> FieldElement {
        self.alpha
    }

    /// `(first symbol, length)` read by a blocked function.
    pub fn window(&self) -> Option<(usize, usize)> {
        self.window
    }

    pub fn apply(&self, payload: &SymbolVec) -> Result<SymbolVec, GfError> {
        match self.window {
            None => payload.scale(self.alpha),
            Some((start, len)) => {
                let block = payload.values().get(start..start + len).ok_or_else(|| {
                    GfError::Dimension(format!("file of {} symbols has no block {}", payload.len(), self.q))
                })?;
                SymbolVec::new(payload.spec(), block.to_vec())?.scale(self.alpha)
            }
        }
    }
}

/// `v_{q,n} = g_q(W_n)`.
pub fn map_iv(g: &MapFunction, file: &SymbolVec) -> Result<SymbolVec, GfError> {
    g.apply(file)
}

/// `c_{q,f} = g_q(A_f)`.
pub fn coded_iv(g: &MapFunction, share: &SymbolVec) -> Result<SymbolVec, GfError> {
    g.apply(share)
}

/// `h_q`: field sum of one intermediate value per file.
pub fn reduce_output(ivs: &[Option<SymbolVec>]) -> Result<SymbolVec, MapReduceError> {
    let mut iter = ivs.iter().enumerate();
    let (_, first) = iter.next().ok_or(MapReduceError::Empty)?;
    let mut acc = first.clone().ok_or(MapReduceError::MissingIv(0))?;
    for (i, iv) in iter {
        acc.add_assign(iv.as_ref().ok_or(MapReduceError::MissingIv(i))?)?;
    }
    Ok(acc)
}

/// `h_q(g_q(W_1), ..., g_q(W_N))` computed directly from the plaintext files.
pub fn plaintext_output(g: &MapFunction, files: &[SymbolVec]) -> Result<SymbolVec, MapReduceError> {
    let ivs = files
        .iter()
        .map(|w| map_iv(g, w).map(Some))
        .collect::<Result<Vec<_>, _>>()?;
    reduce_output(&ivs)
}

/// Splits a byte blob into `count` files of `symbols` symbols each, reading bits
/// MSB-first. The blob must have exactly `ceil(count * z * symbols / 8)` bytes
/// and any trailing pad bits must be zero.
pub fn split_blob(blob: &[u8], spec: FieldSpec, symbols: usize, count: usize) -> Result<Vec<SymbolVec>, MapReduceError> {
    let bits_per_file = spec.degree() as usize * symbols;
    let total = bits_per_file * count;
    let expected = total.div_ceil(8);
    let bits = BitSlice::<u8, Msb0>::from_slice(blob);
    if blob.len() != expected || bits[total..].any() {
        return Err(MapReduceError::BlobSize { expected, found: blob.len(), files: count, bits: bits_per_file });
    }
    bits[..total]
        .chunks(bits_per_file.max(1))
        .take(count)
        .map(|chunk| SymbolVec::from_bits(spec, chunk).map_err(Into::into))
        .collect()
}
