//! Secure coded computing: nodes store ramp shares and exchange padded coded-IV packets.
//!
//! Batch `m` holds files `m (F - Z) .. (m + 1)(F - Z)`. Its shares are
//! `A^m = D [W^m; V^m]`, and share `f` plays the role of row `f` in the
//! shuffle. Each node decodes its coded IVs `c_{k,f}^m` for all `f`, then
//! `D^-1 C_k^m` gives `g_k(W^m)` followed by `g_k(V^m)`.

use super::shuffle::{self, NodeState, PadKeys};
use super::{check_files, Execution, Job, Randomness, RandomnessShape, Scheme, SchemeError};
use crate::audit::measured_loads;
use crate::gf2e::SymbolVec;
use crate::mapreduce::reduce_output;
use crate::pda::{load_coded, Loads, Pda};
use crate::secret_sharing::{reconstruct, share, ShareMatrix};
use crate::transcript::Transcript;

#[derive(Debug, Clone, Copy, Default)]
pub struct SecureCoded;

/// The matrix a job actually shares with, after sabotage.
pub fn effective_matrix(job: &Job) -> Result<ShareMatrix, SchemeError> {
    let f = job.pda().f();
    if job.sabotage().identity_matrix {
        return Ok(ShareMatrix::identity(job.spec(), f));
    }
    let d = job.matrix().ok_or(SchemeError::MissingMatrix)?;
    if d.size() != f {
        return Err(SchemeError::MatrixSize { expected: f, found: d.size() });
    }
    if d.spec() != job.spec() {
        return Err(SchemeError::MatrixField { matrix: d.spec(), payload: job.spec() });
    }
    Ok(d.clone())
}

/// Shares of every batch: `shares[m][f] = A_f^m`.
pub fn setup_t2(
    job: &Job,
    d: &ShareMatrix,
    files: &[SymbolVec],
    ramp_keys: &[Vec<SymbolVec>],
) -> Result<Vec<Vec<SymbolVec>>, SchemeError> {
    let (_, f, z, _) = job.pda().params();
    let payload = f - z;
    check_files(job, files, job.eta() * payload)?;
    let well_formed = ramp_keys.len() == job.eta()
        && ramp_keys.iter().flatten().all(|v| v.spec() == job.spec() && v.len() == job.file_symbols())
        && ramp_keys.iter().all(|b| b.len() == z);
    if !well_formed {
        return Err(SchemeError::RampKeys { expected: z, batches: job.eta() });
    }
    files
        .chunks(payload)
        .zip(ramp_keys)
        .map(|(w, v)| share(w, v, d).map_err(Into::into))
        .collect()
}

/// Share placement follows the star pattern; pads as in `t1`.
pub fn place_t2(job: &Job, shares: &[Vec<SymbolVec>], pads: &PadKeys) -> Result<Vec<NodeState>, SchemeError> {
    shuffle::place(job, |row, batch| shares[batch][row].clone(), pads)
}

pub fn run_shuffle_t2(job: &Job, nodes: &[NodeState]) -> Result<Transcript, SchemeError> {
    shuffle::run_shuffle(job, nodes)
}

/// Decoded output of function `k + 1` and, per batch, the `Z` values `g_{k+1}(V_j^m)`.
pub fn decode_t2(
    job: &Job,
    d: &ShareMatrix,
    node: &NodeState,
    transcript: &Transcript,
) -> Result<(SymbolVec, Vec<Vec<SymbolVec>>), SchemeError> {
    let coded = shuffle::gather(job, node, transcript)?;
    let (_, f, z, _) = job.pda().params();
    let mut ivs = Vec::with_capacity(job.eta() * (f - z));
    let mut images = Vec::with_capacity(job.eta());
    for batch in 0..job.eta() {
        let column = (0..f)
            .map(|row| {
                coded.get(&(row, batch)).cloned().ok_or_else(|| SchemeError::MissingContent {
                    node: node.id + 1,
                    what: format!("the coded IV of share {} in batch {}", row + 1, batch + 1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (w, v) = reconstruct(&column, d, z)?;
        ivs.extend(w.into_iter().map(Some));
        images.push(v);
    }
    Ok((reduce_output(&ivs)?, images))
}

/// Same accounting as `t1`, normalised by the `eta (F - Z)` files.
pub fn loads_measured_t2(job: &Job, nodes: &[NodeState], transcript: &Transcript) -> Result<Loads, SchemeError> {
    let (_, f, z, _) = job.pda().params();
    measured_loads(job, nodes, transcript, job.eta() * (f - z))
}

/// For each one-based function `q`, how many shares' coded IVs node `node`
/// can recover in every batch group from its own view.
pub fn recoverable_coded_ivs(job: &Job, node: usize) -> Vec<usize> {
    let pda = job.pda();
    let items = shuffle::recoverable_items(job, node);
    (1..=pda.k())
        .map(|q| {
            (0..pda.f())
                .filter(|&row| (0..job.groups()).all(|g| items.contains(&(q, row, g))))
                .count()
        })
        .collect()
}

impl Scheme for SecureCoded {
    fn name(&self) -> &'static str {
        "t2"
    }

    fn summary(&self) -> &'static str {
        "secure coded computing: ramp-share placement, padded coded-IV multicasts"
    }

    fn file_count(&self, pda: &Pda, eta: usize) -> usize {
        eta * (pda.f() - pda.z())
    }

    fn formula_loads(&self, pda: &Pda) -> Result<Loads, SchemeError> {
        Ok(load_coded(pda)?)
    }

    fn randomness_shape(&self, job: &Job) -> RandomnessShape {
        RandomnessShape {
            pads: shuffle::pad_layout(job),
            zero_pads: job.sabotage().zero_pad_keys,
            zero_ramp: job.sabotage().zero_ramp_keys,
            ramp_batches: job.eta(),
            ramp_per_batch: job.pda().z(),
            spec: job.spec(),
            ramp_symbols: job.file_symbols(),
        }
    }

    fn check(&self, job: &Job) -> Result<(), SchemeError> {
        load_coded(job.pda())?;
        if job.eta() == 0 {
            return Err(SchemeError::NoFiles);
        }
        effective_matrix(job).map(|_| ())
    }

    fn execute(&self, job: &Job, files: &[SymbolVec], randomness: &Randomness) -> Result<Execution, SchemeError> {
        self.check(job)?;
        let d = effective_matrix(job)?;
        let shares = setup_t2(job, &d, files, &randomness.ramp_keys)?;
        let nodes = place_t2(job, &shares, &randomness.pad_keys)?;
        let transcript = run_shuffle_t2(job, &nodes)?;
        let (outputs, key_images) = nodes
            .iter()
            .map(|node| decode_t2(job, &d, node, &transcript))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .unzip();
        let loads = loads_measured_t2(job, &nodes, &transcript)?;
        Ok(Execution { nodes, transcript, outputs, loads, key_images })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2e::FieldSpec;
    use crate::mapreduce::plaintext_output;
    use crate::pda::{generate_mn_pda, parse_pda, validate};
    use crate::scheme::{random_files, Sabotage};
    use crate::secret_sharing::{build_cauchy, ingest_literal_matrix};
    use num_rational::Rational64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    const EXAMPLE_D: [[u64; 4]; 4] = [[1, 6, 2, 4], [6, 1, 4, 2], [2, 4, 1, 6], [4, 2, 6, 1]];

    fn example_job() -> Job {
        let pda = Arc::new(validate(parse_pda("* * * 1 2\n* 1 2 * *\n1 * 3 * 4\n2 3 * 4 *").unwrap()).unwrap());
        let spec = FieldSpec::canonical(3).unwrap();
        let rows: Vec<Vec<u64>> = EXAMPLE_D.iter().map(|r| r.to_vec()).collect();
        Job::new(pda, 2, spec, 1).unwrap().with_matrix(ingest_literal_matrix(&rows, spec).unwrap())
    }

    fn run(job: &Job, seed: u64) -> (Vec<SymbolVec>, Randomness, Execution) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let files = random_files(job, SecureCoded.file_count(job.pda(), job.eta()), &mut rng);
        let randomness = SecureCoded.randomness_shape(job).sample(&mut rng);
        let exec = SecureCoded.execute(job, &files, &randomness).unwrap();
        (files, randomness, exec)
    }

    #[test]
    fn example_loads_and_outputs() {
        let job = example_job();
        let (files, _, exec) = run(&job, 4);
        assert_eq!(files.len(), 4);
        assert_eq!(exec.loads.computation, Rational64::from_integer(1));
        assert_eq!(exec.loads.communication, Rational64::new(7, 10));
        assert_eq!(exec.loads, SecureCoded.formula_loads(job.pda()).unwrap());
        // one group of two batches, 10 keyed messages
        assert_eq!(exec.transcript.len(), 10);
        for r in exec.transcript.records() {
            let expected = if r.instance <= 2 { 3 } else { 6 };
            assert_eq!(r.payload.len(), expected);
        }
        for (k, out) in exec.outputs.iter().enumerate() {
            assert_eq!(out, &plaintext_output(&job.map_function(k + 1), &files).unwrap());
        }
    }

    #[test]
    fn node_one_holds_two_shares_per_batch() {
        let job = example_job();
        let (_, _, exec) = run(&job, 8);
        assert!(exec.nodes.iter().all(|node| node.items.len() == 2 * 2));
        assert_eq!(exec.nodes[0].keys.len(), 6);
        let rows: Vec<usize> = exec.nodes[0].items.keys().map(|&(r, _)| r).collect();
        assert_eq!(rows, vec![0, 0, 1, 1]);
    }

    #[test]
    fn key_rows_of_the_inverse_give_mapped_keys() {
        let job = example_job();
        let (_, randomness, exec) = run(&job, 12);
        for (k, per_batch) in exec.key_images.iter().enumerate() {
            let g = job.map_function(k + 1);
            for (m, images) in per_batch.iter().enumerate() {
                let direct: Vec<SymbolVec> = randomness.ramp_keys[m].iter().map(|v| g.apply(v).unwrap()).collect();
                assert_eq!(images, &direct);
            }
        }
    }

    #[test]
    fn every_node_recovers_exactly_its_own_shares_of_foreign_functions() {
        let job = example_job();
        for k in 0..5 {
            let counts = recoverable_coded_ivs(&job, k);
            for (q, &c) in counts.iter().enumerate() {
                assert_eq!(c, if q == k { 4 } else { 2 }, "node {k} function {q}");
            }
        }
    }

    #[test]
    fn mn_measured_equals_formula() {
        let pda = Arc::new(generate_mn_pda(3, 1).unwrap());
        let spec = FieldSpec::canonical(3).unwrap();
        let job = Job::new(pda, 1, spec, 1).unwrap().with_matrix(build_cauchy(3, spec).unwrap());
        let (files, _, exec) = run(&job, 1);
        assert_eq!(exec.loads, load_coded(job.pda()).unwrap());
        for (k, out) in exec.outputs.iter().enumerate() {
            assert_eq!(out, &plaintext_output(&job.map_function(k + 1), &files).unwrap());
        }
    }

    #[test]
    fn zero_everything_gives_zero_transcript() {
        let job = example_job().with_sabotage(Sabotage { zero_pad_keys: true, identity_matrix: false, ..Sabotage::default() });
        let files = vec![SymbolVec::zeros(job.spec(), 1); 4];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut randomness = SecureCoded.randomness_shape(&job).sample(&mut rng);
        for batch in &mut randomness.ramp_keys {
            batch.iter_mut().for_each(|v| *v = SymbolVec::zeros(job.spec(), 1));
        }
        let exec = SecureCoded.execute(&job, &files, &randomness).unwrap();
        assert!(exec.transcript.records().iter().all(|r| r.payload.not_any()));
    }

    #[test]
    fn configuration_errors() {
        let job = example_job();
        let bare = Job::new(Arc::new(job.pda().clone()), 2, job.spec(), 1).unwrap();
        assert_eq!(SecureCoded.check(&bare), Err(SchemeError::MissingMatrix));
        let small = bare.clone().with_matrix(build_cauchy(3, job.spec()).unwrap());
        assert!(matches!(SecureCoded.check(&small), Err(SchemeError::MatrixSize { expected: 4, found: 3 })));
        let gf16 = FieldSpec::canonical(4).unwrap();
        let other = bare.clone().with_matrix(build_cauchy(4, gf16).unwrap());
        assert!(matches!(SecureCoded.check(&other), Err(SchemeError::MatrixField { .. })));
        let sabotaged = bare.with_sabotage(Sabotage { zero_pad_keys: false, identity_matrix: true, ..Sabotage::default() });
        assert_eq!(SecureCoded.check(&sabotaged), Ok(()));
    }
}
