//! Placement, keyed multicasts and decoding shared by both schemes.
//!
//! Row `f` of the PDA names one stored item per batch: a file for `t1`, a share
//! for `t2`. Node `k` stores the items of its star rows and maps them with every
//! function. For integer `s` occurring at `(f_1, k_1), ..., (f_g, k_g)`, the
//! mapped item `g_{k_i}(item_{f_i})` of a batch group is cut into `g - 1`
//! packets labelled by the other columns in ascending order. Node `k_j` sends
//! the XOR of the packets labelled `k_j` with its pad `T_{k_j, s}`.

use std::collections::{BTreeMap, HashSet};

use bitvec::prelude::*;

use super::{Job, SchemeError};
use crate::gf2e::{Bits, SymbolVec};
use crate::mapreduce::MapFunction;
use crate::transcript::{Multicast, Transcript};

/// Pad identifier. Field order gives the transmission order `(s, k, group)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyId {
    pub instance: usize,
    pub sender: usize,
    pub group: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PadKeys {
    keys: BTreeMap<KeyId, Bits>,
}

impl PadKeys {
    pub fn from_map(keys: BTreeMap<KeyId, Bits>) -> Self {
        Self { keys }
    }

    pub fn get(&self, id: &KeyId) -> Option<&Bits> {
        self.keys.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KeyId, &Bits)> {
        self.keys.iter()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Every pad a run needs with its length, in transmission order.
pub fn pad_layout(job: &Job) -> Vec<(KeyId, usize)> {
    let idx = job.pda().occurrences();
    let mut out = Vec::new();
    for s in idx.labels() {
        for &(_, sender) in idx.positions(s) {
            for group in 0..job.groups() {
                out.push((KeyId { instance: s, sender, group }, job.packet_bits(s)));
            }
        }
    }
    out
}

/// Content of one node after placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: usize,
    /// `(row, batch)` to stored file or share.
    pub items: BTreeMap<(usize, usize), SymbolVec>,
    /// `(q, row, batch)` to `g_q(item)` for every one-based function `q`.
    pub mapped: BTreeMap<(usize, usize, usize), SymbolVec>,
    pub keys: BTreeMap<KeyId, Bits>,
}

impl NodeState {
    /// Bits of stored files or shares (keys excluded).
    pub fn stored_bits(&self) -> usize {
        self.items.values().map(SymbolVec::bit_len).sum()
    }

    fn mapped_group(&self, job: &Job, q: usize, row: usize, group: usize) -> Result<Bits, SchemeError> {
        let mut bits = Bits::with_capacity(job.group_size() * job.iv_bits());
        for batch in batches_of(job, group) {
            let iv = self.mapped.get(&(q, row, batch)).ok_or_else(|| SchemeError::MissingContent {
                node: self.id + 1,
                what: format!("the intermediate value of function {q} on row {} batch {}", row + 1, batch + 1),
            })?;
            bits.extend_from_bitslice(&iv.to_bits());
        }
        Ok(bits)
    }

    fn key(&self, id: KeyId) -> Result<&Bits, SchemeError> {
        self.keys.get(&id).ok_or_else(|| SchemeError::MissingContent {
            node: self.id + 1,
            what: format!("the pad of node {} for instance {}", id.sender + 1, id.instance),
        })
    }
}

fn batches_of(job: &Job, group: usize) -> std::ops::Range<usize> {
    group * job.group_size()..(group + 1) * job.group_size()
}

/// Places items by the star pattern and pads by instance membership, then maps.
/// `item(row, batch)` supplies the content of row `row` in batch `batch`.
pub fn place<F>(job: &Job, mut item: F, pads: &PadKeys) -> Result<Vec<NodeState>, SchemeError>
where
    F: FnMut(usize, usize) -> SymbolVec,
{
    let pda = job.pda();
    let idx = pda.occurrences();
    let maps: Vec<MapFunction> = (1..=pda.k()).map(|q| job.map_function(q)).collect();
    let mut nodes = Vec::with_capacity(pda.k());
    for k in 0..pda.k() {
        let mut state = NodeState { id: k, items: BTreeMap::new(), mapped: BTreeMap::new(), keys: BTreeMap::new() };
        for row in pda.star_rows(k) {
            for batch in 0..job.eta() {
                let content = item(row, batch);
                for g in &maps {
                    state.mapped.insert((g.q(), row, batch), g.apply(&content)?);
                }
                state.items.insert((row, batch), content);
            }
        }
        for &s in idx.column_integers(k) {
            for &(_, sender) in idx.positions(s) {
                for group in 0..job.groups() {
                    let id = KeyId { instance: s, sender, group };
                    let key = pads.get(&id).ok_or_else(|| SchemeError::MissingContent {
                        node: k + 1,
                        what: format!("a sampled pad for node {} in instance {s}", sender + 1),
                    })?;
                    state.keys.insert(id, key.clone());
                }
            }
        }
        nodes.push(state);
    }
    Ok(nodes)
}

/// Splits `bits` into `parts` equal packets.
pub fn partition_iv(bits: &BitSlice<u8, Msb0>, parts: usize) -> Vec<Bits> {
    assert!(parts > 0 && bits.len() % parts == 0, "{} bits do not split into {parts} packets", bits.len());
    bits.chunks(bits.len() / parts).map(BitSlice::to_bitvec).collect()
}

/// Packet labels of the IV for `(row, col)` in instance `s`: the other columns holding `s`.
pub fn packet_labels(job: &Job, s: usize, col: usize) -> Vec<usize> {
    job.pda().occurrences().positions(s).iter().map(|&(_, k)| k).filter(|&k| k != col).collect()
}

/// The packet of `g_q(item_row)` that `sender` carries in instance `s`.
fn packet(job: &Job, node: &NodeState, s: usize, (row, col): (usize, usize), sender: usize, group: usize) -> Result<Bits, SchemeError> {
    let labels = packet_labels(job, s, col);
    let slot = labels.iter().position(|&k| k == sender).expect("sender holds s");
    let pb = job.packet_bits(s);
    let iv = node.mapped_group(job, col + 1, row, group)?;
    Ok(iv[slot * pb..(slot + 1) * pb].to_bitvec())
}

/// `X_{k,s}` for one batch group.
pub fn encode(job: &Job, node: &NodeState, s: usize, group: usize) -> Result<Multicast, SchemeError> {
    let positions = job.pda().occurrences().positions(s);
    if !positions.iter().any(|&(_, k)| k == node.id) {
        return Err(SchemeError::NotTransmitter { node: node.id + 1, instance: s });
    }
    let mut payload = node.key(KeyId { instance: s, sender: node.id, group })?.clone();
    for &(row, col) in positions.iter().filter(|&&(_, k)| k != node.id) {
        payload ^= packet(job, node, s, (row, col), node.id, group)?;
    }
    let first = group * job.group_size();
    Ok(Multicast { sender: node.id, instance: s, group, first_batch: first, batches: job.group_size(), payload })
}

/// All multicasts in `(s, k, group)` order.
pub fn run_shuffle(job: &Job, nodes: &[NodeState]) -> Result<Transcript, SchemeError> {
    let mut transcript = Transcript::new();
    for (id, _) in pad_layout(job) {
        transcript.push(encode(job, &nodes[id.sender], id.instance, id.group)?);
    }
    Ok(transcript)
}

/// Recovers `g_{k+1}(item_row)` for every batch and every integer row `row` of
/// column `k`, keyed by `(row, batch)`.
pub fn decode(job: &Job, node: &NodeState, transcript: &Transcript) -> Result<BTreeMap<(usize, usize), SymbolVec>, SchemeError> {
    let k = node.id;
    let idx = job.pda().occurrences();
    let mut out = BTreeMap::new();
    for &s in idx.column_integers(k) {
        let positions = idx.positions(s);
        let own_row = idx.row_of(s, k).expect("s in column k");
        let pb = job.packet_bits(s);
        for group in 0..job.groups() {
            let mut iv = Bits::with_capacity(job.group_size() * job.iv_bits());
            for sender in packet_labels(job, s, k) {
                let msg = transcript.find(sender, s, group).ok_or(SchemeError::MissingTransmission {
                    sender: sender + 1,
                    instance: s,
                    group,
                })?;
                if msg.payload.len() != pb {
                    return Err(SchemeError::BadLength { sender: sender + 1, instance: s, expected: pb, found: msg.payload.len() });
                }
                let mut bits = msg.payload.clone();
                bits ^= node.key(KeyId { instance: s, sender, group })?;
                for &(row, col) in positions.iter().filter(|&&(_, c)| c != sender && c != k) {
                    bits ^= packet(job, node, s, (row, col), sender, group)?;
                }
                iv.extend_from_bitslice(&bits);
            }
            let sym_bits = job.iv_bits();
            for (offset, batch) in batches_of(job, group).enumerate() {
                let v = SymbolVec::from_bits(job.spec(), &iv[offset * sym_bits..(offset + 1) * sym_bits])?;
                out.insert((own_row, batch), v);
            }
        }
    }
    Ok(out)
}

/// Every mapped item of function `k + 1`, local or decoded, keyed by `(row, batch)`.
pub fn gather(job: &Job, node: &NodeState, transcript: &Transcript) -> Result<BTreeMap<(usize, usize), SymbolVec>, SchemeError> {
    let mut all = decode(job, node, transcript)?;
    for (&(q, row, batch), v) in &node.mapped {
        if q == node.id + 1 {
            all.insert((row, batch), v.clone());
        }
    }
    Ok(all)
}

/// Which mapped items a node can recover from its storage, pads and the
/// received messages, treating packets as opaque symbols. A message yields
/// one packet when its pad is held and all other packets in it are known.
/// Returns `(q, row, group)` triples for which every packet is recoverable.
pub fn recoverable_items(job: &Job, node: usize) -> Vec<(usize, usize, usize)> {
    let pda = job.pda();
    let idx = pda.occurrences();
    // atom: (q, row, group, sender label)
    let mut known: HashSet<(usize, usize, usize, usize)> = HashSet::new();
    let stars = pda.star_rows(node);
    let labels_of = |s: usize, col: usize| packet_labels(job, s, col);
    for q in 1..=pda.k() {
        for &row in &stars {
            for group in 0..job.groups() {
                for label in 0..pda.k() {
                    known.insert((q, row, group, label));
                }
            }
        }
    }
    let held: Vec<usize> = idx.column_integers(node).iter().copied().collect();
    loop {
        let mut progress = false;
        for &s in &held {
            let positions = idx.positions(s);
            for &(_, sender) in positions {
                if sender == node {
                    continue;
                }
                for group in 0..job.groups() {
                    let unknown: Vec<_> = positions
                        .iter()
                        .filter(|&&(_, c)| c != sender)
                        .map(|&(row, col)| (col + 1, row, group, sender))
                        .filter(|a| !known.contains(a))
                        .collect();
                    if let [atom] = unknown[..] {
                        known.insert(atom);
                        progress = true;
                    }
                }
            }
        }
        if !progress {
            break;
        }
    }
    let mut out = Vec::new();
    for q in 1..=pda.k() {
        for row in 0..pda.f() {
            for group in 0..job.groups() {
                let full = if pda.is_star(row, q - 1) {
                    stars.contains(&row)
                } else {
                    let s = pda.entry(row, q - 1).int().expect("integer cell");
                    stars.contains(&row) || labels_of(s, q - 1).iter().all(|&l| known.contains(&(q, row, group, l)))
                };
                if full {
                    out.push((q, row, group));
                }
            }
        }
    }
    out
}
