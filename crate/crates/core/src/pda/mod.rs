//! Placement delivery arrays.
//!
//! A `(K, F, Z, S)` PDA is an `F x K` grid of stars and integer labels `1..=S`.
//! Rows index file batches (or shares), columns index nodes. A star at
//! `(f, k)` means node `k` stores row `f`. An integer `s` at `(f, k)` means node
//! `k` needs row `f` and receives it during transmission instance `s`.
//!
//! Rows and columns are zero-based throughout the API. Integer labels are
//! one-based. Error messages and text output use one-based rows and columns.

mod mn;
mod text;

pub use mn::generate_mn_pda;
pub use text::{parse_pda, serialize_pda, ParseError};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Entry {
    Star,
    Int(usize),
}

impl Entry {
    pub fn is_star(&self) -> bool {
        matches!(self, Entry::Star)
    }

    pub fn int(&self) -> Option<usize> {
        match self {
            Entry::Star => None,
            Entry::Int(s) => Some(*s),
        }
    }
}

impl fmt::Display for Entry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entry::Star => f.write_str("*"),
            Entry::Int(s) => write!(f, "{s}"),
        }
    }
}

/// Which part of the A3 condition a pair of equal entries breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum A3Violation {
    SameRow,
    SameColumn,
    CrossingNotStar,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PdaError {
    #[error("the array is empty")]
    Empty,
    #[error("row {row} has {found} entries, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("integer entries must be positive (row {row}, column {col})")]
    NonPositive { row: usize, col: usize },
    #[error("A1 violated: column {col} has {found} stars, expected {expected}")]
    A1 { col: usize, expected: usize, found: usize },
    #[error("A2 cannot hold: the array contains no integers")]
    NoIntegers,
    #[error(
        "A3 violated by integer {label} ({kind:?}): rows {{{}, {}}}, columns {{{}, {}}}",
        rows[0] + 1, rows[1] + 1, cols[0] + 1, cols[1] + 1
    )]
    A3 { label: usize, kind: A3Violation, rows: [usize; 2], cols: [usize; 2] },
    #[error("integer {label} appears only once; every integer must appear at least twice")]
    SingleOccurrence { label: usize },
    #[error("the generator needs 1 <= t < K, got K={k}, t={t}")]
    GeneratorRange { k: usize, t: usize },
    #[error("the coded scheme needs F > Z (F={f}, Z={z})")]
    NoPayloadCapacity { f: usize, z: usize },
}

/// Positions and counts of every integer of a PDA.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceIndex {
    /// `positions[s - 1]`: `(row, col)` of each occurrence of `s`, ascending by column.
    positions: Vec<Vec<(usize, usize)>>,
    /// `column_integers[k]`: the set S_k of integers present in column `k`.
    column_integers: Vec<BTreeSet<usize>>,
    /// `g -> S_g`, the number of integers occurring exactly `g` times.
    histogram: BTreeMap<usize, usize>,
}

impl OccurrenceIndex {
    fn build(grid: &[Vec<Entry>], s_count: usize) -> Self {
        let cols = grid[0].len();
        let mut positions = vec![Vec::new(); s_count];
        let mut column_integers = vec![BTreeSet::new(); cols];
        for col in 0..cols {
            for (row, line) in grid.iter().enumerate() {
                if let Entry::Int(s) = line[col] {
                    positions[s - 1].push((row, col));
                    column_integers[col].insert(s);
                }
            }
        }
        let mut histogram = BTreeMap::new();
        for p in &positions {
            *histogram.entry(p.len()).or_insert(0) += 1;
        }
        Self { positions, column_integers, histogram }
    }

    pub fn positions(&self, s: usize) -> &[(usize, usize)] {
        &self.positions[s - 1]
    }

    /// g_s, the number of occurrences of `s`.
    pub fn count(&self, s: usize) -> usize {
        self.positions[s - 1].len()
    }

    /// S_k, the integers present in column `col`.
    pub fn column_integers(&self, col: usize) -> &BTreeSet<usize> {
        &self.column_integers[col]
    }

    /// S_g for every occurring `g`.
    pub fn histogram(&self) -> &BTreeMap<usize, usize> {
        &self.histogram
    }

    /// U_s, the columns holding `s`, ascending.
    pub fn columns_of(&self, s: usize) -> Vec<usize> {
        self.positions[s - 1].iter().map(|&(_, c)| c).collect()
    }

    /// The row where `s` sits in column `col`, if any.
    pub fn row_of(&self, s: usize, col: usize) -> Option<usize> {
        self.positions[s - 1].iter().find(|&&(_, c)| c == col).map(|&(r, _)| r)
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> {
        1..=self.positions.len()
    }
}

/// A validated `(K, F, Z, S)` placement delivery array in which every integer
/// appears at least twice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pda {
    grid: Vec<Vec<Entry>>,
    k: usize,
    f: usize,
    z: usize,
    s: usize,
    index: OccurrenceIndex,
}

impl Pda {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn f(&self) -> usize {
        self.f
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn params(&self) -> (usize, usize, usize, usize) {
        (self.k, self.f, self.z, self.s)
    }

    pub fn grid(&self) -> &[Vec<Entry>] {
        &self.grid
    }

    pub fn entry(&self, row: usize, col: usize) -> Entry {
        self.grid[row][col]
    }

    pub fn is_star(&self, row: usize, col: usize) -> bool {
        self.grid[row][col].is_star()
    }

    /// Rows stored by node `col`.
    pub fn star_rows(&self, col: usize) -> Vec<usize> {
        (0..self.f).filter(|&r| self.is_star(r, col)).collect()
    }

    pub fn occurrences(&self) -> &OccurrenceIndex {
        &self.index
    }

    /// Number of integer cells, `K (F - Z)`.
    pub fn integer_cells(&self) -> usize {
        self.k * (self.f - self.z)
    }
}

impl fmt::Display for Pda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_pda(self))
    }
}

/// Checks A1-A3 and the at-least-twice rule, and renumbers the integers to
/// `1..=S` by first appearance in column-major order.
pub fn validate(grid: Vec<Vec<Entry>>) -> Result<Pda, PdaError> {
    let cols = grid.first().map_or(0, Vec::len);
    if grid.is_empty() || cols == 0 {
        return Err(PdaError::Empty);
    }
    for (row, line) in grid.iter().enumerate() {
        if line.len() != cols {
            return Err(PdaError::Ragged { row: row + 1, expected: cols, found: line.len() });
        }
        if let Some(col) = line.iter().position(|e| *e == Entry::Int(0)) {
            return Err(PdaError::NonPositive { row: row + 1, col: col + 1 });
        }
    }

    let stars_in = |col: usize| grid.iter().filter(|line| line[col].is_star()).count();
    let z = stars_in(0);
    for col in 1..cols {
        let found = stars_in(col);
        if found != z {
            return Err(PdaError::A1 { col: col + 1, expected: z, found });
        }
    }

    // Canonical relabelling by first appearance, column-major.
    let mut relabel: HashMap<usize, usize> = HashMap::new();
    for col in 0..cols {
        for line in &grid {
            if let Entry::Int(s) = line[col] {
                let next = relabel.len() + 1;
                relabel.entry(s).or_insert(next);
            }
        }
    }
    if relabel.is_empty() {
        return Err(PdaError::NoIntegers);
    }

    check_a3(&grid)?;

    let mut counts: HashMap<usize, usize> = HashMap::new();
    for e in grid.iter().flatten() {
        if let Entry::Int(s) = e {
            *counts.entry(*s).or_insert(0) += 1;
        }
    }
    if let Some(label) = first_in_column_major(&grid, |s| counts[&s] == 1) {
        return Err(PdaError::SingleOccurrence { label });
    }

    let grid: Vec<Vec<Entry>> = grid
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|e| match e {
                    Entry::Star => Entry::Star,
                    Entry::Int(s) => Entry::Int(relabel[&s]),
                })
                .collect()
        })
        .collect();
    let s = relabel.len();
    let index = OccurrenceIndex::build(&grid, s);
    Ok(Pda { f: grid.len(), k: cols, z, s, index, grid })
}

fn first_in_column_major(grid: &[Vec<Entry>], pred: impl Fn(usize) -> bool) -> Option<usize> {
    (0..grid[0].len())
        .flat_map(|col| grid.iter().map(move |line| line[col]))
        .filter_map(|e| e.int())
        .find(|&s| pred(s))
}

/// Scans every pair of equal integer cells in row-major order.
fn check_a3(grid: &[Vec<Entry>]) -> Result<(), PdaError> {
    let cells: Vec<(usize, usize, usize)> = grid
        .iter()
        .enumerate()
        .flat_map(|(r, line)| line.iter().enumerate().filter_map(move |(c, e)| e.int().map(|s| (r, c, s))))
        .collect();
    for (i, &(r1, c1, s1)) in cells.iter().enumerate() {
        for &(r2, c2, s2) in &cells[i + 1..] {
            if s1 != s2 {
                continue;
            }
            let kind = if r1 == r2 {
                Some(A3Violation::SameRow)
            } else if c1 == c2 {
                Some(A3Violation::SameColumn)
            } else if !(grid[r1][c2].is_star() && grid[r2][c1].is_star()) {
                Some(A3Violation::CrossingNotStar)
            } else {
                None
            };
            if let Some(kind) = kind {
                let mut cols = [c1, c2];
                cols.sort_unstable();
                return Err(PdaError::A3 { label: s1, kind, rows: [r1, r2], cols });
            }
        }
    }
    Ok(())
}

pub fn occurrence_index(pda: &Pda) -> OccurrenceIndex {
    OccurrenceIndex::build(&pda.grid, pda.s)
}

/// Exact computation and communication loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Loads {
    pub computation: Rational64,
    pub communication: Rational64,
}

impl fmt::Display for Loads {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={} L={}", self.computation, self.communication)
    }
}

fn r64(n: usize) -> i64 {
    i64::try_from(n).expect("PDA dimensions fit in i64")
}

/// `S + sum_g S_g / (g - 1)`, the per-row message volume in units of `t`.
fn message_volume(pda: &Pda) -> Rational64 {
    pda.index
        .histogram()
        .iter()
        .fold(Rational64::from_integer(r64(pda.s)), |acc, (&g, &sg)| {
            acc + Rational64::new(r64(sg), r64(g - 1))
        })
}

/// Loads of the secure data-shuffling scheme: `r = Z/F` and
/// `L = S/(KF) + sum_{g>=2} S_g / (KF(g-1))`.
pub fn load_shuffle(pda: &Pda) -> Loads {
    Loads {
        computation: Rational64::new(r64(pda.z), r64(pda.f)),
        communication: message_volume(pda) / r64(pda.k * pda.f),
    }
}

/// Loads of the secure coded-computing scheme: `r = Z/(F-Z)` and
/// `L = S/(K(F-Z)) + sum_{g>=2} S_g / (K(F-Z)(g-1))`.
pub fn load_coded(pda: &Pda) -> Result<Loads, PdaError> {
    if pda.f <= pda.z {
        return Err(PdaError::NoPayloadCapacity { f: pda.f, z: pda.z });
    }
    let payload = r64(pda.f - pda.z);
    Ok(Loads {
        computation: Rational64::new(r64(pda.z), payload),
        communication: message_volume(pda) / (r64(pda.k) * payload),
    })
}
