//! Pauli products on the two-particle register.
//!
//! Each particle carries `2N` qubits: one *upper* and one *lower* qubit per
//! block. The flat qubit index is particle-major, then block, then slot:
//!
//! ```text
//! flat = (particle - 1) * 2N + (block - 1) * 2 + slot     (upper = 0, lower = 1)
//! ```
//!
//! so each observer's sub-register is the contiguous range `[(p-1)2N, p*2N)`.
//!
//! A [`PauliOp`] stores one bit-pair per qubit (`x`, `z`) plus a phase `i^k`.
//! The bit pair is read literally: `(1,0)` is X, `(0,1)` is Z, `(1,1)` is Y.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Particle {
    One,
    Two,
}

impl Particle {
    pub const BOTH: [Particle; 2] = [Particle::One, Particle::Two];

    pub fn number(self) -> usize {
        match self {
            Particle::One => 1,
            Particle::Two => 2,
        }
    }

    pub fn from_number(n: usize) -> Option<Self> {
        match n {
            1 => Some(Particle::One),
            2 => Some(Particle::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }
}

/// Observable letter: uppercase acts on the upper slot of a block, lowercase
/// on the lower slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    X,
    Y,
    Z,
    LowerX,
    LowerY,
    LowerZ,
}

impl Letter {
    pub const ALL: [Letter; 6] = [
        Letter::X,
        Letter::Y,
        Letter::Z,
        Letter::LowerX,
        Letter::LowerY,
        Letter::LowerZ,
    ];

    pub fn axis(self) -> Axis {
        match self {
            Letter::X | Letter::LowerX => Axis::X,
            Letter::Y | Letter::LowerY => Axis::Y,
            Letter::Z | Letter::LowerZ => Axis::Z,
        }
    }

    pub fn slot(self) -> Slot {
        match self {
            Letter::X | Letter::Y | Letter::Z => Slot::Upper,
            _ => Slot::Lower,
        }
    }

    pub fn from_parts(axis: Axis, slot: Slot) -> Self {
        match (axis, slot) {
            (Axis::X, Slot::Upper) => Letter::X,
            (Axis::Y, Slot::Upper) => Letter::Y,
            (Axis::Z, Slot::Upper) => Letter::Z,
            (Axis::X, Slot::Lower) => Letter::LowerX,
            (Axis::Y, Slot::Lower) => Letter::LowerY,
            (Axis::Z, Slot::Lower) => Letter::LowerZ,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
            Letter::LowerX => 'x',
            Letter::LowerY => 'y',
            Letter::LowerZ => 'z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        Letter::ALL.into_iter().find(|l| l.as_char() == c)
    }
}

/// Address of one qubit: particle, 1-based block, slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitIndex {
    pub particle: Particle,
    pub block: usize,
    pub slot: Slot,
}

impl QubitIndex {
    pub fn new(particle: Particle, block: usize, slot: Slot) -> Self {
        QubitIndex {
            particle,
            block,
            slot,
        }
    }

    pub fn flat(&self, n_blocks: usize) -> Result<usize> {
        if self.block == 0 || self.block > n_blocks {
            return Err(Error::BlockOutOfRange {
                block: self.block,
                n_blocks,
            });
        }
        let slot = match self.slot {
            Slot::Upper => 0,
            Slot::Lower => 1,
        };
        Ok((self.particle.number() - 1) * 2 * n_blocks + (self.block - 1) * 2 + slot)
    }

    pub fn from_flat(n_blocks: usize, flat: usize) -> Option<Self> {
        if flat >= 4 * n_blocks {
            return None;
        }
        let per_particle = 2 * n_blocks;
        let particle = Particle::from_number(flat / per_particle + 1)?;
        let within = flat % per_particle;
        let slot = if within.is_multiple_of(2) {
            Slot::Upper
        } else {
            Slot::Lower
        };
        Some(QubitIndex::new(particle, within / 2 + 1, slot))
    }
}

/// Phase `i^k`, `k` taken mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    I,
    MinusOne,
    MinusI,
}

impl Phase {
    pub fn from_exponent(k: u32) -> Self {
        match k % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn is_real(self) -> bool {
        matches!(self, Phase::One | Phase::MinusOne)
    }

    /// `+1`/`-1` for real phases.
    pub fn sign(self) -> Option<i8> {
        match self {
            Phase::One => Some(1),
            Phase::MinusOne => Some(-1),
            _ => None,
        }
    }

    fn prefix(self) -> &'static str {
        match self {
            Phase::One => "+",
            Phase::I => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        }
    }
}

impl Mul for Phase {
    type Output = Phase;

    // Phases are powers of i, so exponents add.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Phase) -> Phase {
        Phase::from_exponent(self.exponent() + rhs.exponent())
    }
}

/// Signed Pauli product `i^k * P_0 ⊗ P_1 ⊗ ...` on `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliOp {
    num_qubits: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Phase,
}

fn words_for(num_qubits: usize) -> usize {
    num_qubits.div_ceil(WORD).max(1)
}

fn popcount_and(a: &[u64], b: &[u64]) -> u32 {
    a.iter().zip(b).map(|(a, b)| (a & b).count_ones()).sum()
}

impl PauliOp {
    pub fn identity(num_qubits: usize) -> Self {
        let words = words_for(num_qubits);
        PauliOp {
            num_qubits,
            x: vec![0; words],
            z: vec![0; words],
            phase: Phase::One,
        }
    }

    pub fn single(num_qubits: usize, qubit: usize, axis: Axis) -> Self {
        assert!(qubit < num_qubits, "qubit {qubit} out of range");
        let mut op = PauliOp::identity(num_qubits);
        op.set(qubit, Some(axis));
        op
    }

    /// Builds an operator from per-qubit letters (`None` = identity).
    pub fn from_axes(axes: &[Option<Axis>], phase: Phase) -> Self {
        let mut op = PauliOp::identity(axes.len());
        for (q, a) in axes.iter().enumerate() {
            op.set(q, *a);
        }
        op.phase = phase;
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn negated(mut self) -> Self {
        self.phase = self.phase * Phase::MinusOne;
        self
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn axis(&self, q: usize) -> Option<Axis> {
        match (self.x_bit(q), self.z_bit(q)) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    pub fn set(&mut self, q: usize, axis: Option<Axis>) {
        let (xb, zb) = axis.map_or((false, false), Axis::bits);
        let (w, b) = (q / WORD, q % WORD);
        self.x[w] = (self.x[w] & !(1 << b)) | (u64::from(xb) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | (u64::from(zb) << b);
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones())
            .sum()
    }

    pub fn y_count(&self) -> u32 {
        popcount_and(&self.x, &self.z)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// True when every factor is the identity, regardless of phase.
    pub fn is_scalar(&self) -> bool {
        self.x.iter().chain(&self.z).all(|w| *w == 0)
    }

    pub fn same_support_letters(&self, other: &PauliOp) -> bool {
        self.num_qubits == other.num_qubits && self.x == other.x && self.z == other.z
    }

    fn check_size(&self, other: &PauliOp) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(())
    }

    /// Operator product `self * other` with exact phase.
    pub fn checked_mul(&self, other: &PauliOp) -> Result<PauliOp> {
        self.check_size(other)?;
        // Rewrite each factor as i^(k + #Y) X^x Z^z; moving Z^z1 past X^x2
        // costs (-1)^(z1.x2).
        let x: Vec<u64> = self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect();
        let z: Vec<u64> = self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect();
        let k = self.phase.exponent()
            + self.y_count()
            + other.phase.exponent()
            + other.y_count()
            + 2 * popcount_and(&self.z, &other.x);
        let y_res = popcount_and(&x, &z);
        // k - y_res (mod 4)
        let phase = Phase::from_exponent(k + 3 * y_res);
        Ok(PauliOp {
            num_qubits: self.num_qubits,
            x,
            z,
            phase,
        })
    }

    pub fn checked_commutes(&self, other: &PauliOp) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.commutes(other))
    }

    /// Symplectic inner product parity test. Panics on size mismatch.
    pub fn commutes(&self, other: &PauliOp) -> bool {
        assert_eq!(self.num_qubits, other.num_qubits, "register size mismatch");
        let parity = popcount_and(&self.x, &other.z) + popcount_and(&self.z, &other.x);
        parity.is_multiple_of(2)
    }

    /// Tensor-place `other` onto the qubits where it is non-trivial. Both must
    /// have the same size; supports must be disjoint.
    pub fn disjoint_product(&self, other: &PauliOp) -> PauliOp {
        debug_assert!(self
            .x
            .iter()
            .zip(&self.z)
            .zip(other.x.iter().zip(&other.z))
            .all(|((a, b), (c, d))| (a | b) & (c | d) == 0));
        self * other
    }

    /// Human-readable form, e.g. `+X1(1).x1(1).Y2(1).y2(1)`. Requires the
    /// register to be a whole number of 4-qubit blocks.
    pub fn to_pauli_string(&self) -> String {
        let mut out = String::from(self.phase.prefix());
        if self.is_scalar() {
            out.push('I');
            return out;
        }
        let n_blocks = self.num_qubits / 4;
        let mut first = true;
        for q in 0..self.num_qubits {
            if let Some(axis) = self.axis(q) {
                if !first {
                    out.push('.');
                }
                first = false;
                match QubitIndex::from_flat(n_blocks, q) {
                    Some(idx) => {
                        let letter = Letter::from_parts(axis, idx.slot);
                        out.push_str(&format!(
                            "{}{}({})",
                            letter.as_char(),
                            idx.particle.number(),
                            idx.block
                        ));
                    }
                    None => out.push_str(&format!("{axis:?}[{q}]")),
                }
            }
        }
        out
    }

    /// Parses the [`to_pauli_string`](Self::to_pauli_string) format on a
    /// register of `n_blocks` blocks. Repeated factors multiply in order.
    pub fn parse(input: &str, n_blocks: usize) -> Result<PauliOp> {
        let err = |reason: &str| Error::Parse {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let s = input.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("+i") {
            (Phase::I, rest)
        } else if let Some(rest) = s.strip_prefix("-i") {
            (Phase::MinusI, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (Phase::One, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (Phase::MinusOne, rest)
        } else {
            (Phase::One, s)
        };
        let n_qubits = 4 * n_blocks;
        let mut op = PauliOp::identity(n_qubits);
        if body == "I" {
            return Ok(op.with_phase(phase));
        }
        if body.is_empty() {
            return Err(err("empty operator"));
        }
        for factor in body.split('.') {
            let mut chars = factor.chars();
            let letter = chars
                .next()
                .and_then(Letter::from_char)
                .ok_or_else(|| err("expected one of X Y Z x y z"))?;
            let particle = chars
                .next()
                .and_then(|c| c.to_digit(10))
                .and_then(|d| Particle::from_number(d as usize))
                .ok_or_else(|| err("expected particle 1 or 2"))?;
            let rest: String = chars.collect();
            let block = rest
                .strip_prefix('(')
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|r| r.parse::<usize>().ok())
                .ok_or_else(|| err("expected (block)"))?;
            let single = named_observable(letter, particle, block, n_blocks)?;
            op = &op * &single;
        }
        let total = op.phase * phase;
        Ok(op.with_phase(total))
    }
}

impl Mul for &PauliOp {
    type Output = PauliOp;

    fn mul(self, rhs: &PauliOp) -> PauliOp {
        self.checked_mul(rhs).expect("register size mismatch")
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_pauli_string())
    }
}

/// Register-aware parsing helper: `"<N>:<pauli string>"`.
impl FromStr for PauliOp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, body) = s.split_once(':').ok_or_else(|| Error::Parse {
            input: s.to_string(),
            reason: "expected <n_blocks>:<operator>".into(),
        })?;
        let n_blocks = n.trim().parse::<usize>().map_err(|_| Error::Parse {
            input: s.to_string(),
            reason: "bad block count".into(),
        })?;
        PauliOp::parse(body, n_blocks)
    }
}

/// The named single-qubit observable `letter` on `(particle, block)` in a
/// register of `n_blocks` blocks, phase `+1`.
pub fn named_observable(
    letter: Letter,
    particle: Particle,
    block: usize,
    n_blocks: usize,
) -> Result<PauliOp> {
    let q = QubitIndex::new(particle, block, letter.slot()).flat(n_blocks)?;
    Ok(PauliOp::single(4 * n_blocks, q, letter.axis()))
}

/// Product of named observables on one block, e.g. `[(X,1),(X,2),(z,2)]`.
pub fn block_product(
    factors: &[(Letter, Particle)],
    block: usize,
    n_blocks: usize,
) -> Result<PauliOp> {
    let mut op = PauliOp::identity(4 * n_blocks);
    for &(letter, particle) in factors {
        op = &op * &named_observable(letter, particle, block, n_blocks)?;
    }
    Ok(op)
}
