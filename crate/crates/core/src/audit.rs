//! Load accounting and exact security audits.
//!
//! An audit treats the files and every random bit (ramp keys, pads) as
//! uniform. By enumeration it runs the protocol on every assignment and counts
//! joint occurrences of a secret and an observation. The two are independent,
//! so the mutual information is exactly zero, iff `N c(a, b) = c(a) c(b)` for
//! every pair, including the pairs that never occur.

use std::collections::HashMap;
use std::fmt;

use bitvec::prelude::*;
use num_rational::{Ratio, Rational64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::gf2e::{Bits, SymbolVec};
use crate::mapreduce::map_iv;
use crate::pda::Loads;
use crate::scheme::{Execution, Job, NodeState, RandomnessShape, Scheme, SchemeError};
use crate::transcript::Transcript;

/// Largest number of enumerated random bits (files plus randomness).
pub const AUDIT_BUDGET_BITS: usize = 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(
        "exhaustive audit needs 2^{bits} states, above the budget of 2^{budget}; \
         reduce z, L_sym, eta or the PDA size"
    )]
    BudgetExceeded { bits: usize, budget: usize },
    #[error("node {node} does not exist (K={k})")]
    NoSuchNode { node: usize, k: usize },
    #[error("the run is not GF(2)-linear in its inputs; use enumeration")]
    NotLinear,
}

/// Loads measured from a completed run over `files` input files:
/// `r` = stored bits over `K N w`, `L` = transmitted bits over `K N t`.
pub fn measured_loads(job: &Job, nodes: &[NodeState], transcript: &Transcript, files: usize) -> Result<Loads, SchemeError> {
    if files == 0 {
        return Err(SchemeError::NoFiles);
    }
    let k = job.pda().k();
    let denominator = |size: usize| i64::try_from(k * files * size).expect("load denominator fits in i64");
    let stored: usize = nodes.iter().map(NodeState::stored_bits).sum();
    Ok(Loads {
        computation: Rational64::new(stored as i64, denominator(job.file_bits())),
        communication: Rational64::new(transcript.total_bits() as i64, denominator(job.iv_bits())),
    })
}

/// Exact joint counts of `(secret, observation)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct JointCounts {
    joint: HashMap<(Bits, Bits), u64>,
}

impl JointCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, secret: Bits, observation: Bits) {
        *self.joint.entry((secret, observation)).or_insert(0) += 1;
    }

    pub fn merge(self, other: Self) -> Self {
        let (mut big, small) = if self.joint.len() >= other.joint.len() { (self.joint, other.joint) } else { (other.joint, self.joint) };
        for (key, c) in small {
            *big.entry(key).or_insert(0) += c;
        }
        Self { joint: big }
    }

    pub fn total(&self) -> u64 {
        self.joint.values().sum()
    }

    fn marginals(&self) -> (HashMap<&Bits, u64>, HashMap<&Bits, u64>) {
        let mut a = HashMap::new();
        let mut b = HashMap::new();
        for ((x, y), &c) in &self.joint {
            *a.entry(x).or_insert(0) += c;
            *b.entry(y).or_insert(0) += c;
        }
        (a, b)
    }

    pub fn distinct_secrets(&self) -> usize {
        self.marginals().0.len()
    }

    pub fn distinct_observations(&self) -> usize {
        self.marginals().1.len()
    }

    /// Exact independence: full support on the product of marginals and
    /// `N c(a, b) = c(a) c(b)` on it.
    pub fn is_independent(&self) -> bool {
        let n = self.total() as u128;
        let (a, b) = self.marginals();
        self.joint.len() == a.len() * b.len()
            && self.joint.iter().all(|((x, y), &c)| n * c as u128 == a[x] as u128 * b[y] as u128)
    }

    /// `I(A; B)` in bits.
    pub fn mutual_information_bits(&self) -> f64 {
        let n = self.total() as f64;
        let (a, b) = self.marginals();
        self.joint
            .iter()
            .map(|((x, y), &c)| {
                let c = c as f64;
                c / n * (n * c / (a[x] as f64 * b[y] as f64)).log2()
            })
            .sum::<f64>()
            .max(0.0)
    }

    /// `H(A)` in bits.
    pub fn secret_entropy_bits(&self) -> f64 {
        let n = self.total() as f64;
        self.marginals().0.values().map(|&c| -(c as f64 / n) * (c as f64 / n).log2()).sum()
    }

    /// Total-variation distance between the joint law and the product of its marginals.
    pub fn tv_distance(&self) -> Ratio<i128> {
        let n = self.total() as i128;
        if n == 0 {
            return Ratio::from_integer(0);
        }
        let (a, b) = self.marginals();
        let mut occurring_product = 0i128;
        let mut deviation = 0i128;
        for ((x, y), &c) in &self.joint {
            let product = a[x] as i128 * b[y] as i128;
            occurring_product += product;
            deviation += (n * c as i128 - product).abs();
        }
        // pairs that never occur contribute their full product mass
        deviation += n * n - occurring_product;
        Ratio::new(deviation, 2 * n * n)
    }
}

/// How an audit decides independence.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Method {
    /// Enumerate every assignment and count joint occurrences.
    Enumeration,
    /// The run is GF(2)-linear in files and randomness, so with uniform inputs
    /// `I(S; O) = rank S + rank O - rank [S; O]` bits. Linearity is checked on
    /// sample points before the ranks are trusted.
    Linear,
    /// Enumeration within budget, otherwise linear.
    #[default]
    Auto,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Enumeration => "enumeration",
            Method::Linear => "linear",
            Method::Auto => "auto",
        })
    }
}

/// Outcome of one audit.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub scheme: String,
    pub view: String,
    pub configuration: String,
    pub method: Method,
    /// Uniform random input bits (files plus randomness).
    pub space_bits: usize,
    pub secret_entropy_bits: f64,
    pub independent: bool,
    pub mi_bits: f64,
    /// Exact MI when it is rational: always for the linear method, only zero for enumeration.
    pub mi_exact: Option<Ratio<i128>>,
    pub tv_distance: Option<Ratio<i128>>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.independent
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scheme: {}", self.scheme)?;
        writeln!(f, "view: {}", self.view)?;
        writeln!(f, "configuration: {}", self.configuration)?;
        writeln!(f, "method: {}", self.method)?;
        writeln!(f, "space: 2^{} states", self.space_bits)?;
        writeln!(f, "secret entropy: {:.3} bits", self.secret_entropy_bits)?;
        match &self.mi_exact {
            Some(mi) => writeln!(f, "mi: {}/{} bits", mi.numer(), mi.denom())?,
            None => writeln!(f, "mi: {:.6} bits (not rational)", self.mi_bits)?,
        }
        if let Some(tv) = &self.tv_distance {
            writeln!(f, "tv distance: {}/{}", tv.numer(), tv.denom())?;
        }
        write!(f, "result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// A deterministic function of one run producing one `(secret, observation)` pair per view.
type Views<'a> = dyn Fn(&[SymbolVec], &Execution) -> Vec<(Bits, Bits)> + Sync + 'a;

struct Space<'a> {
    scheme: &'a dyn Scheme,
    job: &'a Job,
    shape: RandomnessShape,
    file_count: usize,
    bits: usize,
}

impl<'a> Space<'a> {
    fn new(scheme: &'a dyn Scheme, job: &'a Job) -> Result<Self, AuditError> {
        scheme.check(job)?;
        let shape = scheme.randomness_shape(job);
        let file_count = scheme.file_count(job.pda(), job.eta());
        let bits = file_count * job.file_bits() + shape.total_bits();
        Ok(Self { scheme, job, shape, file_count, bits })
    }

    fn run(&self, state: &BitSlice<u8, Msb0>, view: &Views<'_>) -> Result<Vec<(Bits, Bits)>, SchemeError> {
        let file_bits = self.job.file_bits();
        let (file_part, random_part) = state.split_at(self.file_count * file_bits);
        let files = file_part
            .chunks(file_bits.max(1))
            .take(self.file_count)
            .map(|c| SymbolVec::from_bits(self.job.spec(), c))
            .collect::<Result<Vec<_>, _>>()?;
        let randomness = self.shape.from_bits(random_part);
        let exec = self.scheme.execute(self.job, &files, &randomness)?;
        Ok(view(&files, &exec))
    }

    fn report(&self, view: String, method: Method, fields: ReportFields) -> AuditReport {
        AuditReport {
            scheme: self.scheme.name().to_string(),
            view,
            configuration: self.job.describe(),
            method,
            space_bits: self.bits,
            secret_entropy_bits: fields.entropy,
            independent: fields.independent,
            mi_bits: fields.mi_bits,
            mi_exact: fields.mi_exact,
            tv_distance: fields.tv,
        }
    }

    fn audit(&self, method: Method, names: Vec<String>, view: &Views<'_>) -> Result<Vec<AuditReport>, AuditError> {
        let method = match method {
            Method::Auto if self.bits <= AUDIT_BUDGET_BITS => Method::Enumeration,
            Method::Auto => Method::Linear,
            m => m,
        };
        let fields = match method {
            Method::Enumeration => self.enumerate(names.len(), view)?.iter().map(ReportFields::from_counts).collect(),
            _ => self.linear(names.len(), view)?,
        };
        Ok(names.into_iter().zip(fields).map(|(name, f)| self.report(name, method, f)).collect())
    }

    fn enumerate(&self, views: usize, view: &Views<'_>) -> Result<Vec<JointCounts>, AuditError> {
        let bits = self.bits;
        if bits > AUDIT_BUDGET_BITS {
            return Err(AuditError::BudgetExceeded { bits, budget: AUDIT_BUDGET_BITS });
        }
        let counts = (0..1u64 << bits)
            .into_par_iter()
            .try_fold(
                || vec![JointCounts::new(); views],
                |mut acc, u| {
                    let state: Bits = (0..bits).rev().map(|i| (u >> i) & 1 == 1).collect();
                    for (slot, (secret, obs)) in acc.iter_mut().zip(self.run(&state, view)?) {
                        slot.add(secret, obs);
                    }
                    Ok::<_, SchemeError>(acc)
                },
            )
            .try_reduce(
                || vec![JointCounts::new(); views],
                |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
            )?;
        Ok(counts)
    }

    fn linear(&self, views: usize, view: &Views<'_>) -> Result<Vec<ReportFields>, AuditError> {
        let n = self.bits;
        let origin = self.run(&bitvec![u8, Msb0; 0; n], view)?;
        let columns: Vec<Vec<(Bits, Bits)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut e = bitvec![u8, Msb0; 0; n];
                e.set(i, true);
                let image = self.run(&e, view)?;
                Ok(image.into_iter().zip(&origin).map(|((s, o), (s0, o0))| (s ^ s0, o ^ o0)).collect())
            })
            .collect::<Result<_, SchemeError>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..LINEARITY_SAMPLES {
            let x: Bits = (0..n).map(|_| rng.gen::<bool>()).collect();
            let actual = self.run(&x, view)?;
            for (v, (s, o)) in actual.into_iter().enumerate() {
                let (mut es, mut eo) = origin[v].clone();
                for i in x.iter_ones() {
                    es ^= &columns[i][v].0;
                    eo ^= &columns[i][v].1;
                }
                if es != s || eo != o {
                    return Err(AuditError::NotLinear);
                }
            }
        }
        Ok((0..views)
            .map(|v| {
                let secret: Vec<Bits> = columns.iter().map(|c| c[v].0.clone()).collect();
                let obs: Vec<Bits> = columns.iter().map(|c| c[v].1.clone()).collect();
                let joint: Vec<Bits> = columns
                    .iter()
                    .map(|c| {
                        let mut j = c[v].0.clone();
                        j.extend_from_bitslice(&c[v].1);
                        j
                    })
                    .collect();
                let (rs, ro, rj) = (gf2_rank(&secret), gf2_rank(&obs), gf2_rank(&joint));
                let mi = (rs + ro - rj) as i128;
                let tv = (mi < 120).then(|| Ratio::from_integer(1) - Ratio::new(1, 1i128 << mi));
                ReportFields {
                    entropy: rs as f64,
                    independent: mi == 0,
                    mi_bits: mi as f64,
                    mi_exact: Some(Ratio::from_integer(mi)),
                    tv,
                }
            })
            .collect())
    }
}

struct ReportFields {
    entropy: f64,
    independent: bool,
    mi_bits: f64,
    mi_exact: Option<Ratio<i128>>,
    tv: Option<Ratio<i128>>,
}

impl ReportFields {
    fn from_counts(counts: &JointCounts) -> Self {
        let independent = counts.is_independent();
        Self {
            entropy: counts.secret_entropy_bits(),
            independent,
            mi_bits: if independent { 0.0 } else { counts.mutual_information_bits() },
            mi_exact: independent.then(|| Ratio::from_integer(0)),
            tv: Some(counts.tv_distance()),
        }
    }
}

const LINEARITY_SAMPLES: usize = 32;

/// Rank over GF(2) of a set of equal-length bit vectors.
pub fn gf2_rank(vectors: &[Bits]) -> usize {
    let mut basis: Vec<Bits> = Vec::new();
    for v in vectors {
        let mut v = v.clone();
        for b in &basis {
            let lead = b.first_one().expect("basis vectors are nonzero");
            if v[lead] {
                v ^= b;
            }
        }
        if let Some(lead) = v.first_one() {
            for b in basis.iter_mut() {
                if b[lead] {
                    *b ^= &v;
                }
            }
            basis.push(v);
        }
    }
    basis.len()
}

/// Every IV `v_{q,n}` for the functions selected by `keep`, concatenated.
fn ivs_of(job: &Job, files: &[SymbolVec], keep: impl Fn(usize) -> bool) -> Bits {
    let mut out = Bits::new();
    for q in (1..=job.pda().k()).filter(|&q| keep(q)) {
        let g = job.map_function(q);
        for w in files {
            out.extend_from_bitslice(&map_iv(&g, w).expect("file shape checked").to_bits());
        }
    }
    out
}

/// The content of a node: stored items and pads, in key order.
fn storage_of(node: &NodeState) -> Bits {
    let mut out = Bits::new();
    for v in node.items.values() {
        out.extend_from_bitslice(&v.to_bits());
    }
    for key in node.keys.values() {
        out.extend_from_bitslice(key);
    }
    out
}

fn node_view(job: &Job, files: &[SymbolVec], exec: &Execution, node: usize) -> (Bits, Bits) {
    let mut obs = storage_of(&exec.nodes[node]);
    for r in exec.transcript.received_by(node) {
        obs.extend_from_bitslice(&r.payload);
    }
    (ivs_of(job, files, |q| q != node + 1), obs)
}

/// `I(all IVs; full transcript)`, with the PDA, matrix and sizes public.
pub fn audit_eavesdropper(scheme: &dyn Scheme, job: &Job, method: Method) -> Result<AuditReport, AuditError> {
    let view = |files: &[SymbolVec], exec: &Execution| vec![(ivs_of(job, files, |_| true), exec.transcript.concatenated())];
    let space = Space::new(scheme, job)?;
    Ok(space.audit(method, vec!["eavesdropper".into()], &view)?.remove(0))
}

/// `I({v_{q,n}}_{q != k}; M_k, {X_j}_{j != k})` for every node `k` at once.
pub fn audit_all_nodes(scheme: &dyn Scheme, job: &Job, method: Method) -> Result<Vec<AuditReport>, AuditError> {
    let k = job.pda().k();
    let view = |files: &[SymbolVec], exec: &Execution| (0..k).map(|node| node_view(job, files, exec, node)).collect();
    let space = Space::new(scheme, job)?;
    space.audit(method, (1..=k).map(|node| format!("node {node}")).collect(), &view)
}

/// Node-view audit for a single zero-based node.
pub fn audit_node_secrecy(scheme: &dyn Scheme, job: &Job, node: usize, method: Method) -> Result<AuditReport, AuditError> {
    let k = job.pda().k();
    if node >= k {
        return Err(AuditError::NoSuchNode { node: node + 1, k });
    }
    let view = |files: &[SymbolVec], exec: &Execution| vec![node_view(job, files, exec, node)];
    let space = Space::new(scheme, job)?;
    Ok(space.audit(method, vec![format!("node {}", node + 1)], &view)?.remove(0))
}
