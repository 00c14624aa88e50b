//! Arithmetic over binary extension fields GF(2^z).
//!
//! Elements are stored as bit masks of polynomial coefficients (bit `i` is the
//! coefficient of `x^i`). Every element carries the [`FieldSpec`] it belongs
//! to, and mixing elements of different fields is an error rather than a silent
//! reinterpretation.

mod matrix;
mod symbols;

pub use matrix::Matrix;
pub use symbols::{bits_from_hex, bits_to_hex, Bits, SymbolVec};

use std::fmt;

use thiserror::Error;

/// Largest supported extension degree; products of two elements must fit in a `u64`.
pub const MAX_DEGREE: u32 = 31;

/// Canonical irreducible polynomials, indexed by degree.
const CANONICAL_POLYS: [u64; 17] = [
    0,
    0b11,                  // x + 1
    0b111,                 // x^2 + x + 1
    0b1011,                // x^3 + x + 1
    0b1_0011,              // x^4 + x + 1
    0b10_0101,             // x^5 + x^2 + 1
    0b100_0011,            // x^6 + x + 1
    0b1000_0011,           // x^7 + x + 1
    0x11B,                 // x^8 + x^4 + x^3 + x + 1
    0x211,                 // x^9 + x^4 + 1
    0x409,                 // x^10 + x^3 + 1
    0x805,                 // x^11 + x^2 + 1
    0x1053,                // x^12 + x^6 + x^4 + x + 1
    0x201B,                // x^13 + x^4 + x^3 + x + 1
    0x4443,                // x^14 + x^10 + x^6 + x + 1
    0x8003,                // x^15 + x + 1
    0x1_100B,              // x^16 + x^12 + x^3 + x + 1
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("extension degree must be in 1..={MAX_DEGREE}, got {0}")]
    BadDegree(u32),
    #[error("polynomial {poly:#b} does not have degree {z}")]
    DegreeMismatch { z: u32, poly: u64 },
    #[error("polynomial {poly:#b} is reducible over GF(2) (divisible by {factor:#b})")]
    Reducible { poly: u64, factor: u64 },
    #[error("no canonical polynomial for degree {0}; supply one explicitly")]
    NoCanonical(u32),
    #[error("value {value} is out of range for GF(2^{z})")]
    OutOfRange { value: u64, z: u32 },
    #[error("operands belong to different fields ({left} vs {right})")]
    FieldMismatch { left: FieldSpec, right: FieldSpec },
    #[error("division by zero in {0}")]
    DivisionByZero(FieldSpec),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
}

/// A binary extension field: degree `z` and reduction polynomial `poly`
/// (including the leading `x^z` bit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    z: u32,
    poly: u64,
}

impl FieldSpec {
    /// Builds a field after checking that `poly` has degree `z` and is irreducible.
    pub fn new(z: u32, poly: u64) -> Result<Self, GfError> {
        if z == 0 || z > MAX_DEGREE {
            return Err(GfError::BadDegree(z));
        }
        if degree(poly) != Some(z) {
            return Err(GfError::DegreeMismatch { z, poly });
        }
        if let Some(factor) = find_factor(poly) {
            return Err(GfError::Reducible { poly, factor });
        }
        Ok(Self { z, poly })
    }

    /// The field of degree `z` with the canonical reduction polynomial.
    pub fn canonical(z: u32) -> Result<Self, GfError> {
        if z == 0 || z > MAX_DEGREE {
            return Err(GfError::BadDegree(z));
        }
        let poly = *CANONICAL_POLYS
            .get(z as usize)
            .ok_or(GfError::NoCanonical(z))?;
        Self::new(z, poly)
    }

    pub fn degree(&self) -> u32 {
        self.z
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Number of field elements, `2^z`.
    pub fn order(&self) -> u64 {
        1u64 << self.z
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { value: 0, spec: *self }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement { value: 1, spec: *self }
    }

    pub fn element(&self, value: u64) -> Result<FieldElement, GfError> {
        if value >= self.order() {
            return Err(GfError::OutOfRange { value, z: self.z });
        }
        Ok(FieldElement { value, spec: *self })
    }

    /// All elements in natural encoding order `0, 1, ..., 2^z - 1`.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.order()).map(move |value| FieldElement { value, spec: *self })
    }

    pub(crate) fn mul_raw(&self, a: u64, b: u64) -> u64 {
        // Shift-and-reduce.
        let mut acc = 0u64;
        let mut a = a;
        let mut b = b;
        let top = 1u64 << self.z;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= a;
            }
            b >>= 1;
            a <<= 1;
            if a & top != 0 {
                a ^= self.poly;
            }
        }
        acc
    }

    pub(crate) fn inv_raw(&self, a: u64) -> Option<u64> {
        if a == 0 {
            return None;
        }
        // a^(2^z - 2) by square-and-multiply.
        let mut exp = self.order() - 2;
        let mut base = a;
        let mut acc = 1u64;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            exp >>= 1;
        }
        Some(acc)
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{}) mod {:#b}", self.z, self.poly)
    }
}

/// Smallest field with `z >= 1 + log2(f)`, using the canonical polynomial.
pub fn field_for(f: usize) -> FieldSpec {
    assert!(f >= 1, "field_for requires at least one row");
    // z >= 1 + log2 F  <=>  2^(z-1) >= F
    let mut z = 1u32;
    while (1usize << (z - 1)) < f {
        z += 1;
    }
    FieldSpec::canonical(z).expect("canonical table covers every practical row count")
}

fn degree(poly: u64) -> Option<u32> {
    if poly == 0 {
        None
    } else {
        Some(63 - poly.leading_zeros())
    }
}

fn poly_mod(mut a: u64, b: u64) -> u64 {
    let db = degree(b).expect("nonzero divisor");
    while let Some(da) = degree(a) {
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
fn find_factor(poly: u64) -> Option<u64> {
    let d = degree(poly)?;
    for fd in 1..=d / 2 {
        for cand in (1u64 << fd)..(1u64 << (fd + 1)) {
            if poly_mod(poly, cand) == 0 {
                return Some(cand);
            }
        }
    }
    None
}

/// An element of a binary extension field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u64,
    spec: FieldSpec,
}

impl FieldElement {
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &FieldElement) -> Result<(), GfError> {
        if self.spec != other.spec {
            return Err(GfError::FieldMismatch { left: self.spec, right: other.spec });
        }
        Ok(())
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

pub fn gf_add(a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
    a.same_field(&b)?;
    Ok(FieldElement { value: a.value ^ b.value, spec: a.spec })
}

pub fn gf_mul(a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
    a.same_field(&b)?;
    Ok(FieldElement { value: a.spec.mul_raw(a.value, b.value), spec: a.spec })
}

pub fn gf_inv(a: FieldElement) -> Result<FieldElement, GfError> {
    a.spec
        .inv_raw(a.value)
        .map(|value| FieldElement { value, spec: a.spec })
        .ok_or(GfError::DivisionByZero(a.spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf8() -> FieldSpec {
        FieldSpec::new(3, 0b1011).unwrap()
    }

    #[test]
    fn add_examples() {
        let f = gf8();
        let a = f.element(6).unwrap();
        assert_eq!(gf_add(a, a).unwrap(), f.zero());
        assert_eq!(gf_add(a, f.zero()).unwrap(), a);
        assert_eq!(gf_add(a, f.element(3).unwrap()).unwrap().value(), 5);
    }

    #[test]
    fn mul_examples() {
        let f = gf8();
        let two = f.element(2).unwrap();
        let four = f.element(4).unwrap();
        assert_eq!(gf_mul(two, two).unwrap().value(), 4);
        assert_eq!(gf_mul(four, two).unwrap().value(), 3);
        for a in f.elements() {
            assert_eq!(gf_mul(a, f.one()).unwrap(), a);
        }
    }

    #[test]
    fn inverse_examples_match_exhaustive_search() {
        let search = |f: FieldSpec, a: u64| {
            (1..f.order()).find(|&x| f.mul_raw(a, x) == 1).unwrap()
        };
        let f8 = gf8();
        let f4 = FieldSpec::new(2, 0b111).unwrap();
        assert_eq!(search(f8, 2), 5);
        assert_eq!(search(f4, 2), 3);
        assert_eq!(gf_inv(f8.element(2).unwrap()).unwrap().value(), 5);
        assert_eq!(gf_inv(f4.element(2).unwrap()).unwrap().value(), 3);
        assert_eq!(gf_inv(f8.one()).unwrap(), f8.one());
    }

    #[test]
    fn zero_has_no_inverse() {
        let f = gf8();
        assert_eq!(gf_inv(f.zero()), Err(GfError::DivisionByZero(f)));
    }

    #[test]
    fn cross_field_operations_fail() {
        let a = gf8().one();
        let b = FieldSpec::canonical(4).unwrap().one();
        assert!(matches!(gf_add(a, b), Err(GfError::FieldMismatch { .. })));
        assert!(matches!(gf_mul(a, b), Err(GfError::FieldMismatch { .. })));
    }

    #[test]
    fn field_for_examples() {
        assert_eq!(field_for(4).degree(), 3);
        assert_eq!(field_for(1).degree(), 1);
        assert_eq!(field_for(8).degree(), 4);
        assert_eq!(field_for(3).degree(), 3);
        assert_eq!(field_for(5).degree(), 4);
        for f in 1..200 {
            let z = field_for(f).degree() as f64;
            assert!(z >= 1.0 + (f as f64).log2());
            assert!(z - 1.0 < 1.0 + (f as f64).log2());
        }
    }

    #[test]
    fn canonical_table_is_irreducible() {
        for z in 1..=16 {
            FieldSpec::canonical(z).unwrap();
        }
    }

    #[test]
    fn rejects_reducible_and_bad_degree() {
        // x^2 + 1 = (x + 1)^2
        assert_eq!(FieldSpec::new(2, 0b101), Err(GfError::Reducible { poly: 0b101, factor: 0b11 }));
        assert!(matches!(FieldSpec::new(3, 0b111), Err(GfError::DegreeMismatch { .. })));
        assert!(matches!(FieldSpec::new(0, 1), Err(GfError::BadDegree(0))));
        assert!(matches!(gf8().element(8), Err(GfError::OutOfRange { .. })));
    }

    #[test]
    fn field_axioms_exhaustive_small() {
        for z in 1..=4 {
            let f = FieldSpec::canonical(z).unwrap();
            for a in f.elements() {
                for b in f.elements() {
                    let ab = gf_mul(a, b).unwrap();
                    assert_eq!(ab, gf_mul(b, a).unwrap());
                    assert_eq!(gf_add(a, b).unwrap(), gf_add(b, a).unwrap());
                    if !a.is_zero() && !b.is_zero() {
                        assert!(!ab.is_zero(), "zero divisor {a}*{b} in {f}");
                    }
                    for c in f.elements() {
                        assert_eq!(
                            gf_mul(ab, c).unwrap(),
                            gf_mul(a, gf_mul(b, c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            gf_add(gf_add(a, b).unwrap(), c).unwrap(),
                            gf_add(a, gf_add(b, c).unwrap()).unwrap()
                        );
                        assert_eq!(
                            gf_mul(a, gf_add(b, c).unwrap()).unwrap(),
                            gf_add(ab, gf_mul(a, c).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn inverses_exhaustive_up_to_degree_8() {
        for z in 1..=8 {
            let f = FieldSpec::canonical(z).unwrap();
            for a in f.elements().skip(1) {
                assert_eq!(gf_mul(a, gf_inv(a).unwrap()).unwrap(), f.one());
            }
        }
    }
}
