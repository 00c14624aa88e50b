//! Secure data shuffling: nodes store whole files and exchange padded IV packets.
//!
//! File `n = m F + f` (zero-based) is row `f` of batch `m`.

use std::collections::BTreeMap;

use super::shuffle::{self, NodeState, PadKeys};
use super::{check_files, Execution, Job, Randomness, RandomnessShape, Scheme, SchemeError};
use crate::audit::measured_loads;
use crate::gf2e::SymbolVec;
use crate::mapreduce::reduce_output;
use crate::pda::{load_shuffle, Loads, Pda};
use crate::transcript::{Multicast, Transcript};

pub use shuffle::partition_iv;

#[derive(Debug, Clone, Copy, Default)]
pub struct SecureShuffle;

/// Stores batch row `f` at node `k` iff `p_{f,k}` is a star, plus the pads of
/// every instance in column `k`, and maps every stored file.
pub fn place_t1(job: &Job, files: &[SymbolVec], pads: &PadKeys) -> Result<Vec<NodeState>, SchemeError> {
    let f = job.pda().f();
    check_files(job, files, job.eta() * f)?;
    shuffle::place(job, |row, batch| files[batch * f + row].clone(), pads)
}

pub fn encode_t1(job: &Job, node: &NodeState, s: usize, group: usize) -> Result<Multicast, SchemeError> {
    shuffle::encode(job, node, s, group)
}

pub fn run_shuffle_t1(job: &Job, nodes: &[NodeState]) -> Result<Transcript, SchemeError> {
    shuffle::run_shuffle(job, nodes)
}

/// The missing IVs `v_{k,f}^m` for every integer row `f` of column `k`.
pub fn decode_t1(
    job: &Job,
    node: &NodeState,
    transcript: &Transcript,
) -> Result<BTreeMap<(usize, usize), SymbolVec>, SchemeError> {
    shuffle::decode(job, node, transcript)
}

/// Output of function `k + 1`: the sum of its IVs over every file.
pub fn reduce_t1(job: &Job, node: &NodeState, transcript: &Transcript) -> Result<SymbolVec, SchemeError> {
    let ivs = shuffle::gather(job, node, transcript)?;
    let f = job.pda().f();
    let ordered: Vec<Option<SymbolVec>> = (0..job.eta() * f).map(|n| ivs.get(&(n % f, n / f)).cloned()).collect();
    Ok(reduce_output(&ordered)?)
}

impl Scheme for SecureShuffle {
    fn name(&self) -> &'static str {
        "t1"
    }

    fn summary(&self) -> &'static str {
        "secure data shuffling: file placement, padded IV multicasts"
    }

    fn file_count(&self, pda: &Pda, eta: usize) -> usize {
        eta * pda.f()
    }

    fn formula_loads(&self, pda: &Pda) -> Result<Loads, SchemeError> {
        Ok(load_shuffle(pda))
    }

    fn randomness_shape(&self, job: &Job) -> RandomnessShape {
        RandomnessShape {
            pads: shuffle::pad_layout(job),
            zero_pads: job.sabotage().zero_pad_keys,
            zero_ramp: job.sabotage().zero_ramp_keys,
            ramp_batches: 0,
            ramp_per_batch: 0,
            spec: job.spec(),
            ramp_symbols: job.file_symbols(),
        }
    }

    fn check(&self, job: &Job) -> Result<(), SchemeError> {
        if job.eta() == 0 {
            return Err(SchemeError::NoFiles);
        }
        Ok(())
    }

    fn execute(&self, job: &Job, files: &[SymbolVec], randomness: &Randomness) -> Result<Execution, SchemeError> {
        self.check(job)?;
        let nodes = place_t1(job, files, &randomness.pad_keys)?;
        let transcript = run_shuffle_t1(job, &nodes)?;
        let outputs = nodes
            .iter()
            .map(|node| reduce_t1(job, node, &transcript))
            .collect::<Result<Vec<_>, _>>()?;
        let loads = measured_loads(job, &nodes, &transcript, files.len())?;
        Ok(Execution { nodes, transcript, outputs, loads, key_images: Vec::new() })
    }
}
