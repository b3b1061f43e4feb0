//! Local-realistic bound of the Bell expression.
//!
//! A deterministic local model assigns ±1 to every element of reality that
//! appears in the expression: seven per block (X1, Y1, x1 on particle 1 and
//! X2, Y2, y2, z2 on particle 2). Any probabilistic model is a mixture of
//! these, so its value never exceeds the deterministic maximum.

use rayon::prelude::*;

use crate::bell::{enumerate_terms, BlockTerm};
use crate::error::{Error, Result};
use crate::pauli::{Letter, Particle};
use crate::state::BellScenario;

/// Largest N scanned exhaustively (2^21 assignments).
pub const BRUTE_FORCE_MAX_BLOCKS: usize = 3;

/// Labels per block that enter the Bell expression.
pub const LABELS_PER_BLOCK: usize = 7;

use Letter::{LowerX as SX, LowerY as SY, LowerZ as SZ, X, Y, Z};
use Particle::{One as P1, Two as P2};

/// Bit position of each label inside a block's 7-bit valuation mask.
pub const BELL_LABELS: [(Letter, Particle); LABELS_PER_BLOCK] = [
    (X, P1),
    (Y, P1),
    (SX, P1),
    (X, P2),
    (Y, P2),
    (SY, P2),
    (SZ, P2),
];

/// A remotely predictable observable on one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EorLabel {
    pub letter: Letter,
    pub particle: Particle,
    pub block: usize,
}

impl EorLabel {
    pub fn new(letter: Letter, particle: Particle, block: usize) -> Self {
        EorLabel {
            letter,
            particle,
            block,
        }
    }

    /// Bit position within the block mask, if the label occurs in the
    /// expression.
    pub fn bell_position(&self) -> Option<usize> {
        BELL_LABELS
            .iter()
            .position(|&(l, p)| l == self.letter && p == self.particle)
    }

    /// Every label named by the perfect correlations of one block.
    pub fn correlation_labels(block: usize) -> Vec<EorLabel> {
        [
            (X, P1),
            (Y, P1),
            (Z, P1),
            (SX, P1),
            (SY, P1),
            (SZ, P1),
            (X, P2),
            (Y, P2),
            (Z, P2),
            (SX, P2),
            (SY, P2),
            (SZ, P2),
        ]
        .into_iter()
        .map(|(l, p)| EorLabel::new(l, p, block))
        .collect()
    }
}

fn label_mask(term: BlockTerm) -> u8 {
    term.factors().iter().fold(0u8, |mask, &(l, p)| {
        let pos = EorLabel::new(l, p, 1)
            .bell_position()
            .expect("block terms only use expression labels");
        mask | 1 << pos
    })
}

/// Value of one block's four-term sum under a 7-bit valuation (bit set = −1).
pub fn block_sum(mask: u8) -> i64 {
    BlockTerm::ALL
        .iter()
        .map(|&t| {
            let flips = (label_mask(t) & mask).count_ones();
            let product = if flips.is_multiple_of(2) { 1 } else { -1 };
            i64::from(t.sign()) * product
        })
        .sum()
}

fn block_sum_table() -> [i64; 128] {
    let mut table = [0; 128];
    for (m, slot) in table.iter_mut().enumerate() {
        *slot = block_sum(m as u8);
    }
    table
}

/// Deterministic ±1 valuation of the expression's labels, one 7-bit mask per
/// block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LhvAssignment {
    blocks: Vec<u8>,
}

impl LhvAssignment {
    pub fn all_plus(n_blocks: usize) -> Self {
        LhvAssignment {
            blocks: vec![0; n_blocks],
        }
    }

    pub fn from_block_masks(blocks: Vec<u8>) -> Self {
        LhvAssignment {
            blocks: blocks.into_iter().map(|m| m & 0x7f).collect(),
        }
    }

    /// Block `j` (0-based) occupies bits `7j..7j+7`.
    pub fn from_bitmask(n_blocks: usize, mask: u64) -> Self {
        LhvAssignment {
            blocks: (0..n_blocks)
                .map(|j| ((mask >> (LABELS_PER_BLOCK * j)) & 0x7f) as u8)
                .collect(),
        }
    }

    pub fn bitmask(&self) -> u64 {
        self.blocks.iter().enumerate().fold(0, |acc, (j, m)| {
            acc | u64::from(*m) << (LABELS_PER_BLOCK * j)
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_masks(&self) -> &[u8] {
        &self.blocks
    }

    pub fn value(&self, label: &EorLabel) -> Option<i8> {
        let pos = label.bell_position()?;
        let mask = self.blocks.get(label.block.checked_sub(1)?)?;
        Some(if mask >> pos & 1 == 1 { -1 } else { 1 })
    }

    pub fn set(&mut self, label: &EorLabel, value: i8) -> Result<()> {
        let pos = label.bell_position().ok_or_else(|| Error::Parse {
            input: format!("{label:?}"),
            reason: "label does not occur in the expression".into(),
        })?;
        let n_blocks = self.blocks.len();
        let mask = label
            .block
            .checked_sub(1)
            .and_then(|j| self.blocks.get_mut(j))
            .ok_or(Error::BlockOutOfRange {
                block: label.block,
                n_blocks,
            })?;
        if value < 0 {
            *mask |= 1 << pos;
        } else {
            *mask &= !(1 << pos);
        }
        Ok(())
    }

    fn check(&self, n_blocks: usize) -> Result<()> {
        if self.blocks.len() != n_blocks {
            return Err(Error::PartialAssignment {
                got: self.blocks.len(),
                expected: n_blocks,
            });
        }
        Ok(())
    }
}

/// Sum over all `4^N` signed terms of the product of assigned values.
pub fn evaluate(assignment: &LhvAssignment, n_blocks: usize) -> Result<i64> {
    assignment.check(n_blocks)?;
    let masks: Vec<u8> = BlockTerm::ALL.iter().map(|&t| label_mask(t)).collect();
    let mut total = 0i64;
    for term in enumerate_terms(n_blocks)? {
        let mut value = i64::from(term.sign());
        for (j, t) in term.choices().iter().enumerate() {
            if (masks[*t as usize] & assignment.blocks[j]).count_ones() % 2 == 1 {
                value = -value;
            }
        }
        total += value;
    }
    Ok(total)
}

/// Product of per-block sums; equal to [`evaluate`] by the product structure
/// of the expression.
pub fn evaluate_factored(assignment: &LhvAssignment, n_blocks: usize) -> Result<i64> {
    assignment.check(n_blocks)?;
    Ok(assignment.blocks.iter().map(|m| block_sum(*m)).product())
}

/// Value of a convex mixture of deterministic assignments.
pub fn mixture_value(mixture: &[(f64, LhvAssignment)], n_blocks: usize) -> Result<f64> {
    mixture.iter().try_fold(0.0, |acc, (w, a)| {
        Ok(acc + w * evaluate_factored(a, n_blocks)? as f64)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LhvBoundResult {
    pub max_value: i64,
    pub min_value: i64,
    /// Lowest-bitmask assignment reaching `max_value`.
    pub argmax: LhvAssignment,
    pub assignments_scanned: u64,
}

#[derive(Debug, Clone, Copy)]
struct ScanStats {
    max: i64,
    argmax: u64,
    min: i64,
    scanned: u64,
}

impl ScanStats {
    fn merge(self, other: ScanStats) -> ScanStats {
        let (max, argmax) = match self.max.cmp(&other.max) {
            std::cmp::Ordering::Greater => (self.max, self.argmax),
            std::cmp::Ordering::Less => (other.max, other.argmax),
            std::cmp::Ordering::Equal => (self.max, self.argmax.min(other.argmax)),
        };
        ScanStats {
            max,
            argmax,
            min: self.min.min(other.min),
            scanned: self.scanned + other.scanned,
        }
    }
}

fn gray(k: u64) -> u64 {
    k ^ (k >> 1)
}

/// Gray-code walk over `range`; flipping one label only touches its block.
fn scan_range(n_blocks: usize, range: std::ops::Range<u64>, table: &[i64; 128]) -> ScanStats {
    let mut code = gray(range.start);
    let mut sums: Vec<i64> = (0..n_blocks)
        .map(|j| table[((code >> (LABELS_PER_BLOCK * j)) & 0x7f) as usize])
        .collect();
    let value = |sums: &[i64]| sums.iter().product::<i64>();
    let first = value(&sums);
    let mut stats = ScanStats {
        max: first,
        argmax: code,
        min: first,
        scanned: 1,
    };
    for k in range.start + 1..range.end {
        let bit = k.trailing_zeros() as usize;
        code ^= 1 << bit;
        let j = bit / LABELS_PER_BLOCK;
        sums[j] = table[((code >> (LABELS_PER_BLOCK * j)) & 0x7f) as usize];
        let v = value(&sums);
        if v > stats.max || (v == stats.max && code < stats.argmax) {
            stats.max = v;
            stats.argmax = code;
        }
        stats.min = stats.min.min(v);
        stats.scanned += 1;
    }
    stats
}

/// Exact maximum over every deterministic assignment (N ≤ 3).
pub fn brute_force_bound(n_blocks: usize) -> Result<LhvBoundResult> {
    BellScenario::new(n_blocks)?;
    if n_blocks > BRUTE_FORCE_MAX_BLOCKS {
        return Err(Error::TooManyBlocks {
            what: "exhaustive local-model scan",
            max: BRUTE_FORCE_MAX_BLOCKS,
            got: n_blocks,
        });
    }
    let table = block_sum_table();
    let total = 1u64 << (LABELS_PER_BLOCK * n_blocks);
    let chunk = (total / 64).max(1);
    let stats = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| scan_range(n_blocks, c * chunk..((c + 1) * chunk).min(total), &table))
        .reduce_with(ScanStats::merge)
        .expect("at least one chunk");
    Ok(LhvBoundResult {
        max_value: stats.max,
        min_value: stats.min,
        argmax: LhvAssignment::from_bitmask(n_blocks, stats.argmax),
        assignments_scanned: stats.scanned,
    })
}

/// Per-block maximum raised to the N-th power.
pub fn factored_bound(n_blocks: usize) -> Result<u128> {
    BellScenario::new(n_blocks)?;
    let per_block = block_sum_table().into_iter().max().expect("nonempty") as u128;
    u32::try_from(n_blocks)
        .ok()
        .and_then(|n| per_block.checked_pow(n))
        .ok_or(Error::TooManyBlocks {
            what: "factored bound",
            max: 127,
            got: n_blocks,
        })
}
