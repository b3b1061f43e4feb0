//! The hyperentangled two-particle state, as a stabilizer group (any N) and
//! as an explicit amplitude vector (small N).
//!
//! Each block holds `½(|00⟩|00⟩ + |01⟩|01⟩ + |10⟩|10⟩ − |11⟩|11⟩)` where the
//! first ket is particle 1's (upper, lower) pair and the second is particle
//! 2's. The full state is the N-fold tensor product over blocks.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{block_product, Letter, Particle, PauliOp, QubitIndex, Slot};

/// Largest N the dense backend will build (2^20 amplitudes).
pub const DENSE_MAX_BLOCKS: usize = 5;

/// Problem size: N blocks of four qubits, two particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BellScenario {
    n_blocks: usize,
}

impl BellScenario {
    pub fn new(n_blocks: usize) -> Result<Self> {
        if n_blocks == 0 {
            return Err(Error::NoBlocks(n_blocks));
        }
        Ok(BellScenario { n_blocks })
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn qubits_per_particle(&self) -> usize {
        2 * self.n_blocks
    }

    pub fn num_qubits(&self) -> usize {
        4 * self.n_blocks
    }

    /// Hilbert-space dimension of one particle, `4^N`. `None` on overflow.
    pub fn local_dimension(&self) -> Option<u128> {
        4u128.checked_pow(u32::try_from(self.n_blocks).ok()?)
    }
}

use Letter::{LowerX as SX, LowerY as SY, LowerZ as SZ, X, Y, Z};
use Particle::{One as P1, Two as P2};

/// Generator factors for one block.
const BLOCK_GENERATORS: [&[(Letter, Particle)]; 4] = [
    &[(X, P1), (X, P2), (SZ, P2)],
    &[(SX, P1), (Z, P2), (SX, P2)],
    &[(SZ, P1), (SZ, P2)],
    &[(Z, P1), (Z, P2)],
];

/// Name, factors and value of one perfect correlation.
pub type Correlation = (&'static str, &'static [(Letter, Particle)], i8);

/// The seven perfect correlations per block and their values.
pub const PERFECT_CORRELATIONS: [Correlation; 7] = [
    ("X1X2z2", &[(X, P1), (X, P2), (SZ, P2)], 1),
    ("Y1Y2z2", &[(Y, P1), (Y, P2), (SZ, P2)], -1),
    ("x1Z2x2", &[(SX, P1), (Z, P2), (SX, P2)], 1),
    ("X1z1X2", &[(X, P1), (SZ, P1), (X, P2)], 1),
    ("Y1z1Y2", &[(Y, P1), (SZ, P1), (Y, P2)], -1),
    ("Z1y1y2", &[(Z, P1), (SY, P1), (SY, P2)], -1),
    ("z1z2", &[(SZ, P1), (SZ, P2)], 1),
];

/// Pure stabilizer state given by a full set of commuting, independent,
/// Hermitian generators.
#[derive(Debug, Clone)]
pub struct StabilizerState {
    num_qubits: usize,
    generators: Vec<PauliOp>,
    // Reduced row-echelon rows with their pivot columns. Column c < n is the
    // x-bit of qubit c; column n + q is the z-bit of qubit q.
    echelon: Vec<(usize, PauliOp)>,
}

fn column_bit(op: &PauliOp, col: usize) -> bool {
    let n = op.num_qubits();
    if col < n {
        op.x_bit(col)
    } else {
        op.z_bit(col - n)
    }
}

impl StabilizerState {
    pub fn from_generators(generators: Vec<PauliOp>) -> Result<Self> {
        let num_qubits = generators
            .first()
            .map(PauliOp::num_qubits)
            .ok_or_else(|| Error::InvalidGenerators("empty generator list".into()))?;
        if generators.len() != num_qubits {
            return Err(Error::InvalidGenerators(format!(
                "{} generators for {} qubits",
                generators.len(),
                num_qubits
            )));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.num_qubits() != num_qubits {
                return Err(Error::SizeMismatch {
                    left: num_qubits,
                    right: g.num_qubits(),
                });
            }
            if !g.is_hermitian() {
                return Err(Error::InvalidGenerators(format!(
                    "generator {i} has non-real phase"
                )));
            }
            for (j, h) in generators.iter().enumerate().skip(i + 1) {
                if !g.commutes(h) {
                    return Err(Error::InvalidGenerators(format!(
                        "generators {i} and {j} anticommute"
                    )));
                }
            }
        }

        let mut rows = generators.clone();
        let mut echelon_cols = Vec::with_capacity(num_qubits);
        let mut rank = 0;
        for col in 0..2 * num_qubits {
            let Some(found) = (rank..rows.len()).find(|&i| column_bit(&rows[i], col)) else {
                continue;
            };
            rows.swap(rank, found);
            let pivot = rows[rank].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != rank && column_bit(row, col) {
                    *row = &*row * &pivot;
                }
            }
            echelon_cols.push(col);
            rank += 1;
        }
        if rank != generators.len() {
            return Err(Error::InvalidGenerators(format!(
                "generators are dependent (rank {rank} of {})",
                generators.len()
            )));
        }
        let echelon = echelon_cols.into_iter().zip(rows).collect();
        Ok(StabilizerState {
            num_qubits,
            generators,
            echelon,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn generators(&self) -> &[PauliOp] {
        &self.generators
    }

    /// Exact `⟨obs⟩ ∈ {+1, 0, −1}`.
    pub fn expectation(&self, obs: &PauliOp) -> Result<i8> {
        if obs.num_qubits() != self.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: obs.num_qubits(),
            });
        }
        let Some(obs_sign) = obs.phase().sign() else {
            return Err(Error::NotHermitian(format!("{:?}", obs.phase())));
        };
        if self.generators.iter().any(|g| !g.commutes(obs)) {
            return Ok(0);
        }
        let mut acc = PauliOp::identity(self.num_qubits);
        for (col, row) in &self.echelon {
            if column_bit(obs, *col) {
                acc = &acc * row;
            }
        }
        // A full commuting set leaves no room for a commuting operator outside
        // the group up to phase.
        debug_assert!(acc.same_support_letters(obs));
        let group_sign = acc.phase().sign().expect("group elements are Hermitian");
        Ok(obs_sign * group_sign)
    }
}

/// Stabilizer description of the N-block state.
pub fn build_state(n_blocks: usize) -> Result<StabilizerState> {
    BellScenario::new(n_blocks)?;
    let mut gens = Vec::with_capacity(4 * n_blocks);
    for block in 1..=n_blocks {
        for factors in BLOCK_GENERATORS {
            gens.push(block_product(factors, block, n_blocks)?);
        }
    }
    StabilizerState::from_generators(gens)
}

/// Amplitude vector with qubit `q` stored in bit `q` of the basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl DenseState {
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨ψ|P|ψ⟩` (real part; it is real for Hermitian `P`).
    pub fn expectation(&self, obs: &PauliOp) -> Result<f64> {
        if obs.num_qubits() != self.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: obs.num_qubits(),
            });
        }
        let x = obs.x_words()[0];
        let z = obs.z_words()[0];
        let prefactor = Complex64::i().powu(obs.phase().exponent() + obs.y_count());
        let mut total = Complex64::new(0.0, 0.0);
        for (i, amp) in self.amplitudes.iter().enumerate() {
            if *amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let target = self.amplitudes[i ^ x as usize];
            let sign = if (i as u64 & z).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            total += target.conj() * amp * sign;
        }
        Ok((total * prefactor).re)
    }
}

/// Literal tensor power of the block vector.
pub fn dense_state(n_blocks: usize) -> Result<DenseState> {
    let scenario = BellScenario::new(n_blocks)?;
    if n_blocks > DENSE_MAX_BLOCKS {
        return Err(Error::TooManyBlocks {
            what: "dense state",
            max: DENSE_MAX_BLOCKS,
            got: n_blocks,
        });
    }
    let num_qubits = scenario.num_qubits();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
    let magnitude = 0.5f64.powi(n_blocks as i32);
    let flat = |p, block, slot| {
        QubitIndex::new(p, block, slot)
            .flat(n_blocks)
            .expect("block in range")
    };
    // One nonzero amplitude per choice of (upper, lower) value in every block.
    for choice in 0..1usize << (2 * n_blocks) {
        let mut index = 0usize;
        let mut negative = false;
        for block in 1..=n_blocks {
            let upper = choice >> (2 * (block - 1)) & 1;
            let lower = choice >> (2 * (block - 1) + 1) & 1;
            negative ^= upper == 1 && lower == 1;
            for p in Particle::BOTH {
                index |= upper << flat(p, block, Slot::Upper);
                index |= lower << flat(p, block, Slot::Lower);
            }
        }
        let sign = if negative { -1.0 } else { 1.0 };
        amplitudes[index] = Complex64::new(sign * magnitude, 0.0);
    }
    Ok(DenseState {
        num_qubits,
        amplitudes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCheck {
    pub block: usize,
    pub name: &'static str,
    pub operator: PauliOp,
    pub expected: i8,
    pub observed: i8,
}

impl CorrelationCheck {
    pub fn passed(&self) -> bool {
        self.expected == self.observed
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorrelationReport {
    pub checks: Vec<CorrelationCheck>,
}

impl CorrelationReport {
    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|c| c.passed()).count()
    }

    pub fn total(&self) -> usize {
        self.checks.len()
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CorrelationCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CorrelationCheck> {
        self.checks.iter().filter(|c| !c.passed())
    }
}

/// Checks the seven perfect correlations in each of the N blocks.
pub fn verify_perfect_correlations(n_blocks: usize) -> Result<CorrelationReport> {
    let state = build_state(n_blocks)?;
    verify_perfect_correlations_on(&state, n_blocks)
}

/// Same as [`verify_perfect_correlations`] against an arbitrary state.
pub fn verify_perfect_correlations_on(
    state: &StabilizerState,
    n_blocks: usize,
) -> Result<CorrelationReport> {
    let mut checks = Vec::with_capacity(7 * n_blocks);
    for block in 1..=n_blocks {
        for (name, factors, expected) in PERFECT_CORRELATIONS {
            let operator = block_product(factors, block, n_blocks)?;
            let observed = state.expectation(&operator)?;
            checks.push(CorrelationCheck {
                block,
                name,
                operator,
                expected,
                observed,
            });
        }
    }
    Ok(CorrelationReport { checks })
}
