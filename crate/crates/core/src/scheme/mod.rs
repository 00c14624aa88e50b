//! Scheme registry and the shared job/randomness types.
//!
//! Each scheme implements [`Scheme`] and is registered by name in a
//! [`SchemeRegistry`]. Both built-in schemes place content by the PDA's stars,
//! shuffle with one-time-padded multicasts over the same engine
//! ([`shuffle`]), and decode at every node. Only the stored content differs:
//! files for `t1`, ramp shares for `t2`.
//!
//! All randomness enters through [`Randomness`], so callers may sample it from
//! a seeded RNG or enumerate it exhaustively.

pub mod shuffle;
pub mod t1;
pub mod t2;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use bitvec::prelude::*;
use num_integer::Integer;
use rand::{Rng, RngCore};
use thiserror::Error;

use crate::gf2e::{Bits, FieldSpec, GfError, SymbolVec};
use crate::mapreduce::{MapFamily, MapFunction, MapReduceError};
use crate::pda::{Loads, Pda, PdaError};
use crate::secret_sharing::{SharingError, ShareMatrix};
use crate::transcript::Transcript;

pub use shuffle::{KeyId, NodeState, PadKeys};
pub use t1::SecureShuffle;
pub use t2::SecureCoded;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SchemeError {
    #[error(transparent)]
    Pda(#[from] PdaError),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Sharing(#[from] SharingError),
    #[error(transparent)]
    MapReduce(#[from] MapReduceError),
    #[error(
        "integer {s} occurs g_s={g} times: t={t} bits cannot be split into {} equal packets \
         for any batch grouping that divides eta={eta}; choose L_sym or eta so that t*eta is a multiple of {}",
        g - 1, g - 1
    )]
    Divisibility { s: usize, g: usize, t: usize, eta: usize },
    #[error("symbol length L_sym must be positive")]
    EmptySymbols,
    #[error("expected {expected} input files, got {found}")]
    FileCount { expected: usize, found: usize },
    #[error("input file {index} does not have {symbols} symbols of {spec}")]
    FileShape { index: usize, symbols: usize, spec: FieldSpec },
    #[error("the coded scheme needs a sharing matrix")]
    MissingMatrix,
    #[error("sharing matrix is {found}x{found} but the PDA has F={expected}")]
    MatrixSize { expected: usize, found: usize },
    #[error("sharing matrix is over {matrix}, payload symbols over {payload}")]
    MatrixField { matrix: FieldSpec, payload: FieldSpec },
    #[error("expected {expected} ramp key vectors per batch for {batches} batches")]
    RampKeys { expected: usize, batches: usize },
    #[error("node {node} holds no entry {instance} and cannot transmit in that instance")]
    NotTransmitter { node: usize, instance: usize },
    #[error("missing transmission from node {sender} in instance {instance}, batch group {group}")]
    MissingTransmission { sender: usize, instance: usize, group: usize },
    #[error("transmission from node {sender} in instance {instance} has {found} bits, expected {expected}")]
    BadLength { sender: usize, instance: usize, expected: usize, found: usize },
    #[error("node {node} lacks {what}")]
    MissingContent { node: usize, what: String },
    #[error("unknown scheme {name:?}; registered: {known}")]
    UnknownScheme { name: String, known: String },
    #[error("no files: loads are undefined")]
    NoFiles,
}

impl SchemeError {
    /// Errors raised while running the protocol rather than while setting it up.
    pub fn is_protocol(&self) -> bool {
        matches!(
            self,
            SchemeError::NotTransmitter { .. }
                | SchemeError::MissingTransmission { .. }
                | SchemeError::BadLength { .. }
                | SchemeError::MissingContent { .. }
        )
    }
}

/// Deliberate weakenings that demonstrate the audits can detect leakage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Sabotage {
    /// Every one-time pad is all zeros.
    pub zero_pad_keys: bool,
    /// Every ramp-sharing key vector is all zeros.
    pub zero_ramp_keys: bool,
    /// The sharing matrix is replaced by the identity.
    pub identity_matrix: bool,
}

/// A configured job: PDA, batch count, symbol alphabet and (for `t2`) the sharing matrix.
#[derive(Debug, Clone)]
pub struct Job {
    pda: Arc<Pda>,
    eta: usize,
    spec: FieldSpec,
    lsym: usize,
    group: usize,
    matrix: Option<ShareMatrix>,
    sabotage: Sabotage,
    family: MapFamily,
}

impl Job {
    /// Picks the smallest batch grouping `rho | eta` such that `rho * t` splits
    /// evenly into `g_s - 1` packets for every integer `s`.
    pub fn new(pda: Arc<Pda>, eta: usize, spec: FieldSpec, lsym: usize) -> Result<Self, SchemeError> {
        if lsym == 0 {
            return Err(SchemeError::EmptySymbols);
        }
        let t = spec.degree() as usize * lsym;
        let idx = pda.occurrences();
        let fits = |rho: usize| idx.labels().find(|&s| (rho * t) % (idx.count(s) - 1) != 0);
        let group = if eta == 0 {
            1
        } else {
            match (1..=eta).filter(|&r| eta.is_multiple_of(r)).find(|&r| fits(r).is_none()) {
                Some(rho) => rho,
                None => {
                    let s = fits(eta).expect("eta itself failed");
                    return Err(SchemeError::Divisibility { s, g: idx.count(s), t, eta });
                }
            }
        };
        Ok(Self { pda, eta, spec, lsym, group, matrix: None, sabotage: Sabotage::default(), family: MapFamily::Scalar })
    }

    pub fn with_matrix(mut self, matrix: ShareMatrix) -> Self {
        self.matrix = Some(matrix);
        self
    }

    pub fn with_sabotage(mut self, sabotage: Sabotage) -> Self {
        self.sabotage = sabotage;
        self
    }

    pub fn with_family(mut self, family: MapFamily) -> Self {
        self.family = family;
        self
    }

    pub fn family(&self) -> MapFamily {
        self.family
    }

    /// Map function of output `q` (one-based).
    pub fn map_function(&self, q: usize) -> MapFunction {
        self.family.function(q, self.spec, self.lsym)
    }

    /// Symbols per input file (and per share).
    pub fn file_symbols(&self) -> usize {
        self.family.file_symbols(self.lsym, self.pda.k())
    }

    /// File size `w` in bits.
    pub fn file_bits(&self) -> usize {
        self.spec.degree() as usize * self.file_symbols()
    }

    pub fn pda(&self) -> &Pda {
        &self.pda
    }

    pub fn eta(&self) -> usize {
        self.eta
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn lsym(&self) -> usize {
        self.lsym
    }

    /// IV size `t = z * L_sym` in bits.
    pub fn iv_bits(&self) -> usize {
        self.spec.degree() as usize * self.lsym
    }

    /// Consecutive batches packetised together (1 whenever `t` already splits evenly).
    pub fn group_size(&self) -> usize {
        self.group
    }

    pub fn groups(&self) -> usize {
        self.eta / self.group
    }

    /// Packet size for instance `s`: `rho * t / (g_s - 1)`.
    pub fn packet_bits(&self, s: usize) -> usize {
        self.group * self.iv_bits() / (self.pda.occurrences().count(s) - 1)
    }

    pub fn matrix(&self) -> Option<&ShareMatrix> {
        self.matrix.as_ref()
    }

    pub fn sabotage(&self) -> Sabotage {
        self.sabotage
    }

    pub fn describe(&self) -> String {
        let (k, f, z, s) = self.pda.params();
        let family = match self.family {
            MapFamily::Scalar => "scalar",
            MapFamily::Blocked => "blocked",
        };
        format!(
            "K={k} F={f} Z={z} S={s} eta={} z={} lsym={} t={} w={} group={} maps={family}",
            self.eta,
            self.spec.degree(),
            self.lsym,
            self.iv_bits(),
            self.file_bits(),
            self.group
        )
    }
}

/// Every random quantity a run consumes: one-time pads and, for `t2`, the ramp key vectors.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Randomness {
    pub pad_keys: PadKeys,
    /// `ramp_keys[m]`: the `Z` key vectors of batch `m`.
    pub ramp_keys: Vec<Vec<SymbolVec>>,
}

/// Layout of a run's randomness, in the order bits are consumed by
/// [`RandomnessShape::from_bits`]: ramp keys batch by batch, then pads in key order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomnessShape {
    pub pads: Vec<(KeyId, usize)>,
    pub zero_pads: bool,
    pub zero_ramp: bool,
    pub ramp_batches: usize,
    pub ramp_per_batch: usize,
    pub spec: FieldSpec,
    /// Symbols per ramp key vector (the file size).
    pub ramp_symbols: usize,
}

impl RandomnessShape {
    /// Number of uniformly random bits a run consumes.
    pub fn total_bits(&self) -> usize {
        let ramp = if self.zero_ramp { 0 } else { self.ramp_batches * self.ramp_per_batch * self.ramp_symbols * self.spec.degree() as usize };
        let pads: usize = if self.zero_pads { 0 } else { self.pads.iter().map(|(_, n)| n).sum() };
        ramp + pads
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> Randomness {
        let ramp_keys = (0..self.ramp_batches)
            .map(|_| {
                (0..self.ramp_per_batch)
                    .map(|_| match self.zero_ramp {
                        true => SymbolVec::zeros(self.spec, self.ramp_symbols),
                        false => SymbolVec::random(self.spec, self.ramp_symbols, rng),
                    })
                    .collect()
            })
            .collect();
        let pads = self
            .pads
            .iter()
            .map(|&(id, n)| {
                let bits: Bits = if self.zero_pads { bitvec![u8, Msb0; 0; n] } else { (0..n).map(|_| rng.gen::<bool>()).collect() };
                (id, bits)
            })
            .collect();
        Randomness { pad_keys: PadKeys::from_map(pads), ramp_keys }
    }

    /// Builds randomness from exactly [`total_bits`](Self::total_bits) bits.
    pub fn from_bits(&self, bits: &BitSlice<u8, Msb0>) -> Randomness {
        assert_eq!(bits.len(), self.total_bits(), "randomness bit budget");
        let sym_bits = self.ramp_symbols * self.spec.degree() as usize;
        let mut pos = 0;
        let mut ramp_keys = Vec::with_capacity(self.ramp_batches);
        for _ in 0..self.ramp_batches {
            let mut batch = Vec::with_capacity(self.ramp_per_batch);
            for _ in 0..self.ramp_per_batch {
                if self.zero_ramp {
                    batch.push(SymbolVec::zeros(self.spec, self.ramp_symbols));
                    continue;
                }
                batch.push(SymbolVec::from_bits(self.spec, &bits[pos..pos + sym_bits]).expect("whole symbols"));
                pos += sym_bits;
            }
            ramp_keys.push(batch);
        }
        let mut pads = BTreeMap::new();
        for &(id, n) in &self.pads {
            if self.zero_pads {
                pads.insert(id, bitvec![u8, Msb0; 0; n]);
            } else {
                pads.insert(id, bits[pos..pos + n].to_bitvec());
                pos += n;
            }
        }
        Randomness { pad_keys: PadKeys::from_map(pads), ramp_keys }
    }
}

/// Outcome of a full map-shuffle-reduce run.
#[derive(Debug, Clone)]
pub struct Execution {
    pub nodes: Vec<NodeState>,
    pub transcript: Transcript,
    /// `outputs[k]`: the value of output function `k + 1` as decoded by node `k`.
    pub outputs: Vec<SymbolVec>,
    /// Loads measured from storage and transcript.
    pub loads: Loads,
    /// `t2` only: `key_images[k][m]` holds `g_{k+1}(V_j^m)`, recovered alongside the IVs.
    pub key_images: Vec<Vec<Vec<SymbolVec>>>,
}

/// One secure distributed-computing construction.
pub trait Scheme: Send + Sync {
    fn name(&self) -> &'static str;

    fn summary(&self) -> &'static str;

    /// Number of input files the scheme expects.
    fn file_count(&self, pda: &Pda, eta: usize) -> usize;

    /// Closed-form loads.
    fn formula_loads(&self, pda: &Pda) -> Result<Loads, SchemeError>;

    fn randomness_shape(&self, job: &Job) -> RandomnessShape;

    /// Checks scheme-specific preconditions on the job.
    fn check(&self, job: &Job) -> Result<(), SchemeError>;

    /// Runs map, shuffle and reduce with the given inputs and randomness.
    fn execute(&self, job: &Job, files: &[SymbolVec], randomness: &Randomness) -> Result<Execution, SchemeError>;
}

impl fmt::Debug for dyn Scheme + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name-indexed collection of schemes.
#[derive(Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Box<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding `t1` ([`SecureShuffle`]) and `t2` ([`SecureCoded`]).
    pub fn builtin() -> Self {
        let mut registry = Self::new();
        registry.register(Box::new(SecureShuffle));
        registry.register(Box::new(SecureCoded));
        registry
    }

    /// Adds a scheme, replacing any previous one with the same name.
    pub fn register(&mut self, scheme: Box<dyn Scheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<&dyn Scheme, SchemeError> {
        self.schemes.get(name).map(Box::as_ref).ok_or_else(|| SchemeError::UnknownScheme {
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.schemes.keys().copied().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn Scheme> {
        self.schemes.values().map(Box::as_ref)
    }
}

/// Samples the `count` input files of a job.
pub fn random_files<R: RngCore + ?Sized>(job: &Job, count: usize, rng: &mut R) -> Vec<SymbolVec> {
    (0..count).map(|_| SymbolVec::random(job.spec(), job.file_symbols(), rng)).collect()
}

pub(crate) fn check_files(job: &Job, files: &[SymbolVec], expected: usize) -> Result<(), SchemeError> {
    if files.len() != expected {
        return Err(SchemeError::FileCount { expected, found: files.len() });
    }
    if let Some(index) = files.iter().position(|w| w.spec() != job.spec() || w.len() != job.file_symbols()) {
        return Err(SchemeError::FileShape { index, symbols: job.file_symbols(), spec: job.spec() });
    }
    Ok(())
}

/// Smallest `L_sym` for which `z * L_sym` splits evenly for every integer of the PDA.
pub fn minimal_lsym(pda: &Pda, spec: FieldSpec) -> usize {
    let idx = pda.occurrences();
    let lcm = idx.labels().map(|s| idx.count(s) - 1).fold(1usize, |acc, g| acc.lcm(&g));
    lcm / lcm.gcd(&(spec.degree() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pda::{generate_mn_pda, parse_pda, validate};

    fn p1() -> Arc<Pda> {
        Arc::new(validate(parse_pda("* * * 1 2\n* 1 2 * *\n1 * 3 * 4\n2 3 * 4 *").unwrap()).unwrap())
    }

    #[test]
    fn batch_grouping() {
        let gf8 = FieldSpec::canonical(3).unwrap();
        // t = 3, g - 1 in {1, 2}
        let job = Job::new(p1(), 2, gf8, 1).unwrap();
        assert_eq!(job.group_size(), 2);
        assert_eq!(job.groups(), 1);
        assert_eq!(job.packet_bits(1), 3);
        assert_eq!(job.packet_bits(3), 6);
        let job = Job::new(p1(), 2, gf8, 2).unwrap();
        assert_eq!(job.group_size(), 1);
        assert_eq!(job.packet_bits(1), 3);
        assert!(matches!(
            Job::new(p1(), 1, gf8, 1),
            Err(SchemeError::Divisibility { s: 1, g: 3, t: 3, eta: 1 })
        ));
        assert!(matches!(Job::new(p1(), 3, gf8, 1), Err(SchemeError::Divisibility { .. })));
        let gf2 = FieldSpec::canonical(1).unwrap();
        assert!(matches!(Job::new(p1(), 1, gf2, 1), Err(SchemeError::Divisibility { .. })));
        assert_eq!(Job::new(p1(), 0, gf8, 1).unwrap().groups(), 0);
        assert!(matches!(Job::new(p1(), 1, gf8, 0), Err(SchemeError::EmptySymbols)));
    }

    #[test]
    fn minimal_lsym_splits_evenly() {
        let pda = generate_mn_pda(5, 3).unwrap();
        for z in 1..=6 {
            let spec = FieldSpec::canonical(z).unwrap();
            let lsym = minimal_lsym(&pda, spec);
            let job = Job::new(Arc::new(pda.clone()), 1, spec, lsym).unwrap();
            assert_eq!(job.group_size(), 1);
            assert_eq!((z as usize * lsym) % 3, 0);
        }
    }

    #[test]
    fn registry_lookup() {
        let registry = SchemeRegistry::builtin();
        assert_eq!(registry.names(), vec!["t1", "t2"]);
        assert_eq!(registry.get("t2").unwrap().name(), "t2");
        let err = registry.get("t3").unwrap_err();
        assert!(err.to_string().contains("t1, t2"));
    }

    #[test]
    fn randomness_round_trips_through_bits() {
        let gf8 = FieldSpec::canonical(3).unwrap();
        let job = Job::new(p1(), 2, gf8, 1).unwrap();
        let shape = SecureCoded.randomness_shape(&job);
        assert_eq!(shape.ramp_batches, 2);
        assert_eq!(shape.ramp_per_batch, 2);
        // 10 keys per group, 6 of 3 bits and 4 of 6 bits, one group
        assert_eq!(shape.pads.len(), 10);
        assert_eq!(shape.total_bits(), 2 * 2 * 3 + 6 * 3 + 4 * 6);
        let mut bits = Bits::new();
        for i in 0..shape.total_bits() {
            bits.push(i % 3 == 0);
        }
        let r = shape.from_bits(&bits);
        assert_eq!(r.ramp_keys[0][0].values(), &[0b100]);
        let zeroed = RandomnessShape { zero_pads: true, ..shape.clone() };
        assert_eq!(zeroed.total_bits(), 12);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        assert!(zeroed.sample(&mut rng).pad_keys.iter().all(|(_, k)| k.not_any()));
    }
}
