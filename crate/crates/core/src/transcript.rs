//! The ordered record of every multicast on the broadcast channel.
//!
//! Text form, one record per line after `#` header lines:
//!
//! ```text
//! # <free-form summary lines>
//! <sender> <instance> <first batch>[-<last batch>] <bit length> <hex payload>
//! ```
//!
//! Senders, instances and batches are one-based in the text form.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::gf2e::{bits_from_hex, bits_to_hex, Bits};

/// One keyed message `X_{k,s}` for one batch group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Multicast {
    /// Zero-based sending node.
    pub sender: usize,
    /// One-based transmission instance (PDA integer).
    pub instance: usize,
    /// Zero-based batch group.
    pub group: usize,
    /// Zero-based first batch covered and the number of batches.
    pub first_batch: usize,
    pub batches: usize,
    pub payload: Bits,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranscriptError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    records: Vec<Multicast>,
    index: HashMap<(usize, usize, usize), usize>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: Multicast) {
        self.index.insert((record.sender, record.instance, record.group), self.records.len());
        self.records.push(record);
    }

    pub fn records(&self) -> &[Multicast] {
        &self.records
    }

    pub fn records_mut(&mut self) -> &mut [Multicast] {
        &mut self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn find(&self, sender: usize, instance: usize, group: usize) -> Option<&Multicast> {
        self.index.get(&(sender, instance, group)).map(|&i| &self.records[i])
    }

    /// Total transmitted bits.
    pub fn total_bits(&self) -> usize {
        self.records.iter().map(|r| r.payload.len()).sum()
    }

    /// Records not sent by `node`.
    pub fn received_by(&self, node: usize) -> impl Iterator<Item = &Multicast> {
        self.records.iter().filter(move |r| r.sender != node)
    }

    /// All payload bits in transmission order.
    pub fn concatenated(&self) -> Bits {
        let mut out = Bits::with_capacity(self.total_bits());
        for r in &self.records {
            out.extend_from_bitslice(&r.payload);
        }
        out
    }

    pub fn to_text(&self, header: &[String]) -> String {
        let mut out = String::from("# transcript\n");
        for line in header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# messages={} bits={}", self.len(), self.total_bits());
        let _ = writeln!(out, "# sender instance batch bits payload");
        for r in &self.records {
            let batch = if r.batches == 1 {
                (r.first_batch + 1).to_string()
            } else {
                format!("{}-{}", r.first_batch + 1, r.first_batch + r.batches)
            };
            let hex = if r.payload.is_empty() { "-".to_string() } else { bits_to_hex(&r.payload) };
            let _ = writeln!(out, "{} {} {} {} {}", r.sender + 1, r.instance, batch, r.payload.len(), hex);
        }
        out
    }

    /// Parses the text form. Batch groups are numbered by the width of the first record.
    pub fn parse(text: &str) -> Result<Self, TranscriptError> {
        let mut transcript = Self::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| TranscriptError::Parse { line: i + 1, message };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [sender, instance, batch, bits, payload] = fields[..] else {
                return Err(err(format!("expected 5 fields, found {}", fields.len())));
            };
            let num = |s: &str, what: &str| {
                s.parse::<usize>()
                    .ok()
                    .filter(|&v| v > 0 || what == "bit length")
                    .ok_or_else(|| err(format!("invalid {what} {s:?}")))
            };
            let sender = num(sender, "sender")? - 1;
            let instance = num(instance, "instance")?;
            let (first, last) = match batch.split_once('-') {
                Some((a, b)) => (num(a, "batch")?, num(b, "batch")?),
                None => {
                    let b = num(batch, "batch")?;
                    (b, b)
                }
            };
            if last < first {
                return Err(err(format!("empty batch range {batch}")));
            }
            let len = num(bits, "bit length")?;
            let payload = if payload == "-" && len == 0 {
                Bits::new()
            } else {
                bits_from_hex(payload, len).ok_or_else(|| err(format!("payload does not encode {len} bits")))?
            };
            let batches = last - first + 1;
            transcript.push(Multicast {
                sender,
                instance,
                group: (first - 1) / batches,
                first_batch: first - 1,
                batches,
                payload,
            });
        }
        Ok(transcript)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bitvec::prelude::*;

    fn record(sender: usize, instance: usize, group: usize, bits: &BitSlice<u8, Msb0>) -> Multicast {
        Multicast { sender, instance, group, first_batch: group * 2, batches: 2, payload: bits.to_bitvec() }
    }

    #[test]
    fn text_round_trip() {
        let mut t = Transcript::new();
        t.push(record(0, 1, 0, bits![u8, Msb0; 1, 0, 1]));
        t.push(record(4, 3, 1, bits![u8, Msb0; 0, 0, 0, 1, 1, 1, 1, 1, 0]));
        let text = t.to_text(&["scheme=t2".into()]);
        assert!(text.contains("1 1 1-2 3 a0\n"));
        assert!(text.contains("5 3 3-4 9 1f00\n"));
        assert_eq!(Transcript::parse(&text).unwrap(), t);
        assert_eq!(t.total_bits(), 12);
        assert_eq!(t.find(4, 3, 1).unwrap().payload.len(), 9);
        assert!(t.find(4, 3, 0).is_none());
        assert_eq!(t.received_by(0).count(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Transcript::parse("1 1 1 3"), Err(TranscriptError::Parse { line: 1, .. })));
        assert!(Transcript::parse("0 1 1 3 a0").is_err());
        assert!(Transcript::parse("1 1 1 3 a1").is_err());
        assert!(Transcript::parse("1 1 2-1 3 a0").is_err());
    }
}
