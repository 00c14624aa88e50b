use bitvec::prelude::*;
use rand::Rng;

use super::{FieldElement, FieldSpec, GfError};

/// Bit strings carried on the wire: packets, keys, transmitted messages.
pub type Bits = BitVec<u8, Msb0>;

/// Hex of the bit string packed MSB-first; the final byte is zero-padded.
pub fn bits_to_hex(bits: &Bits) -> String {
    hex::encode(bits.as_raw_slice())
}

/// Inverse of [`bits_to_hex`] for a known bit length.
pub fn bits_from_hex(text: &str, len: usize) -> Option<Bits> {
    let bytes = hex::decode(text).ok()?;
    if bytes.len() != len.div_ceil(8) {
        return None;
    }
    let mut bits = Bits::from_vec(bytes);
    if bits[len..].any() {
        return None;
    }
    bits.truncate(len);
    Some(bits)
}

/// A fixed-length vector of symbols of one field: the payload of a file,
/// an intermediate value, a share or a coded intermediate value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolVec {
    spec: FieldSpec,
    values: Vec<u64>,
}

impl SymbolVec {
    pub fn new(spec: FieldSpec, values: Vec<u64>) -> Result<Self, GfError> {
        if let Some(&value) = values.iter().find(|&&v| v >= spec.order()) {
            return Err(GfError::OutOfRange { value, z: spec.degree() });
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: FieldSpec, len: usize) -> Self {
        Self { spec, values: vec![0; len] }
    }

    pub fn random<R: Rng + ?Sized>(spec: FieldSpec, len: usize, rng: &mut R) -> Self {
        let values = (0..len).map(|_| rng.gen_range(0..spec.order())).collect();
        Self { spec, values }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn get(&self, i: usize) -> FieldElement {
        FieldElement { value: self.values[i], spec: self.spec }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0)
    }

    /// Bit length, `z * len`.
    pub fn bit_len(&self) -> usize {
        self.spec.degree() as usize * self.values.len()
    }

    fn check_compatible(&self, other: &Self) -> Result<(), GfError> {
        if self.spec != other.spec {
            return Err(GfError::FieldMismatch { left: self.spec, right: other.spec });
        }
        if self.values.len() != other.values.len() {
            return Err(GfError::Dimension(format!(
                "symbol vectors of length {} and {}",
                self.values.len(),
                other.values.len()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GfError> {
        self.check_compatible(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a ^ b).collect();
        Ok(Self { spec: self.spec, values })
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<(), GfError> {
        self.check_compatible(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a ^= b;
        }
        Ok(())
    }

    /// Symbol-wise multiplication by a scalar.
    pub fn scale(&self, alpha: FieldElement) -> Result<Self, GfError> {
        if alpha.spec != self.spec {
            return Err(GfError::FieldMismatch { left: self.spec, right: alpha.spec });
        }
        let values = self.values.iter().map(|&v| self.spec.mul_raw(alpha.value, v)).collect();
        Ok(Self { spec: self.spec, values })
    }

    /// Each symbol as `z` bits, most significant first.
    pub fn to_bits(&self) -> Bits {
        let z = self.spec.degree() as usize;
        let mut bits = Bits::with_capacity(self.bit_len());
        for &v in &self.values {
            for i in (0..z).rev() {
                bits.push((v >> i) & 1 == 1);
            }
        }
        bits
    }

    pub fn from_bits(spec: FieldSpec, bits: &BitSlice<u8, Msb0>) -> Result<Self, GfError> {
        let z = spec.degree() as usize;
        if bits.len() % z != 0 {
            return Err(GfError::Dimension(format!(
                "{} bits do not split into {z}-bit symbols",
                bits.len()
            )));
        }
        let values = bits
            .chunks(z)
            .map(|chunk| chunk.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(*b)))
            .collect();
        Ok(Self { spec, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bits_round_trip(z in 1u32..=8, raw in proptest::collection::vec(any::<u64>(), 0..12)) {
            let spec = FieldSpec::canonical(z).unwrap();
            let v = SymbolVec::new(spec, raw.iter().map(|r| r % spec.order()).collect()).unwrap();
            let bits = v.to_bits();
            prop_assert_eq!(bits.len(), v.bit_len());
            prop_assert_eq!(SymbolVec::from_bits(spec, &bits).unwrap(), v);
            prop_assert_eq!(bits_from_hex(&bits_to_hex(&bits), bits.len()).unwrap(), bits);
        }
    }

    #[test]
    fn bit_order_is_msb_first() {
        let spec = FieldSpec::canonical(3).unwrap();
        let v = SymbolVec::new(spec, vec![6, 1]).unwrap();
        assert_eq!(v.to_bits(), bits![u8, Msb0; 1, 1, 0, 0, 0, 1]);
        assert_eq!(bits_to_hex(&v.to_bits()), "c4");
    }

    #[test]
    fn hex_rejects_dirty_padding() {
        assert!(bits_from_hex("c5", 6).is_none());
        assert!(bits_from_hex("c4", 6).is_some());
        assert!(bits_from_hex("c400", 6).is_none());
    }
}
