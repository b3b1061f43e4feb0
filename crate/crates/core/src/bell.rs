//! The Bell expression: every product over blocks of the four signed block
//! terms, `Π_j (T1 − T2 + T3 + T4)`, giving `4^N` correlation averages.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pauli::{block_product, Letter, Particle, PauliOp};
use crate::state::{build_state, dense_state, BellScenario};

/// Largest N whose term count `4^N` fits in a `u64`.
pub const MAX_TERM_BLOCKS: usize = 31;

/// One of the four per-block correlation patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockTerm {
    T1,
    T2,
    T3,
    T4,
}

use Letter::{LowerX as SX, LowerY as SY, LowerZ as SZ, X, Y};
use Particle::{One as P1, Two as P2};

impl BlockTerm {
    pub const ALL: [BlockTerm; 4] = [BlockTerm::T1, BlockTerm::T2, BlockTerm::T3, BlockTerm::T4];

    pub fn from_digit(d: u64) -> Self {
        BlockTerm::ALL[(d & 3) as usize]
    }

    pub fn digit(self) -> u64 {
        self as u64
    }

    pub fn sign(self) -> i8 {
        match self {
            BlockTerm::T2 => -1,
            _ => 1,
        }
    }

    /// Observables in the average, particle 1 first.
    pub fn factors(self) -> &'static [(Letter, Particle)] {
        match self {
            BlockTerm::T1 => &[(X, P1), (X, P2), (SZ, P2)],
            BlockTerm::T2 => &[(Y, P1), (Y, P2), (SZ, P2)],
            BlockTerm::T3 => &[(X, P1), (SX, P1), (Y, P2), (SY, P2)],
            BlockTerm::T4 => &[(Y, P1), (SX, P1), (X, P2), (SY, P2)],
        }
    }

    pub fn letters_for(self, particle: Particle) -> Vec<Letter> {
        self.factors()
            .iter()
            .filter(|(_, p)| *p == particle)
            .map(|(l, _)| *l)
            .collect()
    }

    pub fn operator(self, block: usize, n_blocks: usize) -> Result<PauliOp> {
        block_product(self.factors(), block, n_blocks)
    }

    pub fn name(self) -> &'static str {
        match self {
            BlockTerm::T1 => "T1",
            BlockTerm::T2 => "T2",
            BlockTerm::T3 => "T3",
            BlockTerm::T4 => "T4",
        }
    }
}

/// One signed average of the expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BellTerm {
    index: u64,
    choices: Vec<BlockTerm>,
    sign: i8,
    operator: PauliOp,
}

impl BellTerm {
    pub fn from_choices(choices: Vec<BlockTerm>) -> Result<Self> {
        let n = choices.len();
        BellScenario::new(n)?;
        let mut operator = PauliOp::identity(4 * n);
        let mut index = 0u64;
        for (j, c) in choices.iter().enumerate() {
            operator = &operator * &c.operator(j + 1, n)?;
            index = index.wrapping_mul(4) + c.digit();
        }
        let sign = choices.iter().map(|c| c.sign()).product();
        Ok(BellTerm {
            index,
            choices,
            sign,
            operator,
        })
    }

    /// Position in the lexicographic enumeration (block 1 most significant).
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn choices(&self) -> &[BlockTerm] {
        &self.choices
    }

    pub fn n_blocks(&self) -> usize {
        self.choices.len()
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn operator(&self) -> &PauliOp {
        &self.operator
    }

    pub fn choices_label(&self) -> String {
        self.choices
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl fmt::Display for BellTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = self.operator.to_pauli_string();
        let body = op.trim_start_matches('+');
        let sign = if self.sign < 0 { '-' } else { '+' };
        write!(f, "{sign}<{body}>")
    }
}

/// Number of terms, `4^N`.
pub fn term_count(n_blocks: usize) -> Result<u64> {
    BellScenario::new(n_blocks)?;
    if n_blocks > MAX_TERM_BLOCKS {
        return Err(Error::TooManyBlocks {
            what: "term enumeration",
            max: MAX_TERM_BLOCKS,
            got: n_blocks,
        });
    }
    Ok(1u64 << (2 * n_blocks))
}

/// Lazy, restartable stream of terms over an index range.
#[derive(Debug, Clone)]
pub struct Terms {
    n_blocks: usize,
    range: Range<u64>,
    // block_ops[j][t]: operator of block term t on block j + 1
    block_ops: Arc<Vec<[PauliOp; 4]>>,
}

impl Terms {
    pub fn new(n_blocks: usize) -> Result<Self> {
        let total = term_count(n_blocks)?;
        Terms::with_range(n_blocks, 0..total)
    }

    pub fn with_range(n_blocks: usize, range: Range<u64>) -> Result<Self> {
        let total = term_count(n_blocks)?;
        let range = range.start.min(total)..range.end.min(total);
        let block_ops = (1..=n_blocks)
            .map(|block| {
                let op = |t: BlockTerm| t.operator(block, n_blocks);
                Ok([
                    op(BlockTerm::T1)?,
                    op(BlockTerm::T2)?,
                    op(BlockTerm::T3)?,
                    op(BlockTerm::T4)?,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Terms {
            n_blocks,
            range,
            block_ops: Arc::new(block_ops),
        })
    }

    /// Same stream restricted to a sub-range, sharing the operator cache.
    pub fn restrict(&self, range: Range<u64>) -> Terms {
        let end = self.range.end;
        Terms {
            n_blocks: self.n_blocks,
            range: range.start.min(end)..range.end.min(end),
            block_ops: Arc::clone(&self.block_ops),
        }
    }

    pub fn term(&self, index: u64) -> BellTerm {
        let n = self.n_blocks;
        let mut operator = PauliOp::identity(4 * n);
        let mut choices = Vec::with_capacity(n);
        let mut sign = 1i8;
        for j in 0..n {
            let t = BlockTerm::from_digit(index >> (2 * (n - 1 - j)));
            operator = &operator * &self.block_ops[j][t as usize];
            sign *= t.sign();
            choices.push(t);
        }
        BellTerm {
            index,
            choices,
            sign,
            operator,
        }
    }
}

impl Iterator for Terms {
    type Item = BellTerm;

    fn next(&mut self) -> Option<BellTerm> {
        let index = self.range.next()?;
        Some(self.term(index))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.range.size_hint()
    }
}

pub fn enumerate_terms(n_blocks: usize) -> Result<Terms> {
    Terms::new(n_blocks)
}

/// One observer's local experiment: which observables it reads in each block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub particle: Particle,
    pub blocks: Vec<Vec<Letter>>,
}

impl MeasurementSetting {
    /// Product of every measured observable on this side.
    pub fn operator(&self) -> Result<PauliOp> {
        let n = self.blocks.len();
        let mut op = PauliOp::identity(4 * n);
        for (j, letters) in self.blocks.iter().enumerate() {
            let factors: Vec<_> = letters.iter().map(|l| (*l, self.particle)).collect();
            op = &op * &block_product(&factors, j + 1, n)?;
        }
        Ok(op)
    }

    pub fn observable_count(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }
}

pub fn settings_for_term(term: &BellTerm) -> (MeasurementSetting, MeasurementSetting) {
    let side = |particle| MeasurementSetting {
        particle,
        blocks: term
            .choices()
            .iter()
            .map(|c| c.letters_for(particle))
            .collect(),
    };
    (side(P1), side(P2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Stabilizer,
    Dense,
}

fn eval_terms<F>(n_blocks: usize, eval: F) -> Result<i64>
where
    F: Fn(&PauliOp) -> Result<f64> + Sync,
{
    let terms = Terms::new(n_blocks)?;
    let total = terms.range.end;
    let chunks = (rayon::current_num_threads() as u64 * 8).clamp(1, total);
    let per = total.div_ceil(chunks);
    let partial: Vec<Result<i64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut sum = 0i64;
            for term in terms.restrict(c * per..(c + 1) * per) {
                let value = f64::from(term.sign()) * eval(term.operator())?;
                if (value - 1.0).abs() > 1e-9 {
                    return Err(Error::TermMismatch {
                        index: term.index(),
                        value,
                    });
                }
                sum += value.round() as i64;
            }
            Ok(sum)
        })
        .collect();
    // first error in index order, independent of scheduling
    partial.into_iter().sum()
}

/// Exact quantum value of the expression; fails if any signed term is not +1.
pub fn quantum_value(n_blocks: usize, backend: Backend) -> Result<i64> {
    match backend {
        Backend::Stabilizer => {
            let state = build_state(n_blocks)?;
            eval_terms(n_blocks, |op| state.expectation(op).map(f64::from))
        }
        Backend::Dense => {
            let state = dense_state(n_blocks)?;
            eval_terms(n_blocks, |op| state.expectation(op))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::named_observable;

    #[test]
    fn n1_terms_match_menu() {
        let terms: Vec<BellTerm> = enumerate_terms(1).unwrap().collect();
        assert_eq!(terms.len(), 4);
        let shown: Vec<String> = terms.iter().map(ToString::to_string).collect();
        assert_eq!(
            shown,
            vec![
                "+<X1(1).X2(1).z2(1)>",
                "-<Y1(1).Y2(1).z2(1)>",
                "+<X1(1).x1(1).Y2(1).y2(1)>",
                "+<Y1(1).x1(1).X2(1).y2(1)>",
            ]
        );
    }

    #[test]
    fn n2_first_term_and_signs() {
        let terms: Vec<BellTerm> = enumerate_terms(2).unwrap().collect();
        assert_eq!(terms.len(), 16);
        assert_eq!(terms[0].sign(), 1);
        assert_eq!(terms[0].choices(), &[BlockTerm::T1, BlockTerm::T1]);
        assert_eq!(
            terms[0].operator().to_pauli_string(),
            "+X1(1).X1(2).X2(1).z2(1).X2(2).z2(2)"
        );
        for t in &terms {
            let twos = t.choices().iter().filter(|c| **c == BlockTerm::T2).count();
            assert_eq!(t.sign(), if twos == 1 { -1 } else { 1 });
        }
    }

    #[test]
    fn enumeration_order_follows_displayed_rows() {
        let labels: Vec<String> = enumerate_terms(3)
            .unwrap()
            .take(5)
            .map(|t| t.choices_label())
            .collect();
        assert_eq!(
            labels,
            vec!["T1.T1.T1", "T1.T1.T2", "T1.T1.T3", "T1.T1.T4", "T1.T2.T1"]
        );
        let last = enumerate_terms(3).unwrap().last().unwrap();
        assert_eq!(last.choices_label(), "T4.T4.T4");
    }

    #[test]
    fn from_choices_matches_stream() {
        let terms = enumerate_terms(3).unwrap();
        for t in terms.clone() {
            let rebuilt = BellTerm::from_choices(t.choices().to_vec()).unwrap();
            assert_eq!(rebuilt, t);
        }
        assert_eq!(terms.count(), 64);
    }

    #[test]
    fn term_observables_are_on_distinct_qubits() {
        for t in enumerate_terms(2).unwrap() {
            let expected: usize = t.choices().iter().map(|c| c.factors().len()).sum();
            assert_eq!(t.operator().weight() as usize, expected);
        }
    }

    #[test]
    fn settings_split_by_particle() {
        let t3 = BellTerm::from_choices(vec![BlockTerm::T3]).unwrap();
        let (a, b) = settings_for_term(&t3);
        assert_eq!(a.blocks, vec![vec![Letter::X, Letter::LowerX]]);
        assert_eq!(b.blocks, vec![vec![Letter::Y, Letter::LowerY]]);

        let t1 = BellTerm::from_choices(vec![BlockTerm::T1]).unwrap();
        let (a, b) = settings_for_term(&t1);
        assert_eq!(a.blocks, vec![vec![Letter::X]]);
        assert_eq!(b.blocks, vec![vec![Letter::X, Letter::LowerZ]]);
    }

    #[test]
    fn settings_reproduce_term_operator() {
        for t in enumerate_terms(2).unwrap() {
            let (a, b) = settings_for_term(&t);
            let product = &a.operator().unwrap() * &b.operator().unwrap();
            assert_eq!(&product, t.operator());
            for side in [&a, &b] {
                for (j, letters) in side.blocks.iter().enumerate() {
                    for l in letters {
                        for m in letters {
                            let p = named_observable(*l, side.particle, j + 1, 2).unwrap();
                            let q = named_observable(*m, side.particle, j + 1, 2).unwrap();
                            assert!(p.commutes(&q));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn quantum_value_small() {
        assert_eq!(quantum_value(1, Backend::Stabilizer).unwrap(), 4);
        assert_eq!(quantum_value(3, Backend::Stabilizer).unwrap(), 64);
        assert_eq!(quantum_value(1, Backend::Dense).unwrap(), 4);
        assert_eq!(quantum_value(2, Backend::Dense).unwrap(), 16);
    }

    #[test]
    fn term_count_limits() {
        assert_eq!(term_count(8).unwrap(), 65536);
        assert!(term_count(0).is_err());
        assert!(term_count(MAX_TERM_BLOCKS + 1).is_err());
    }

    #[test]
    fn sum_is_independent_of_thread_count() {
        let values: Vec<i64> = [1, 3, 7]
            .iter()
            .map(|&threads| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .unwrap()
                    .install(|| quantum_value(5, Backend::Stabilizer).unwrap())
            })
            .collect();
        assert_eq!(values, vec![1024, 1024, 1024]);
    }
}
