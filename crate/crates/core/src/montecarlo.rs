//! Finite-shot simulation of the Bell experiment with imperfect state,
//! imperfect correlations and lossy detectors.
//!
//! Noise model for one emitted pair measured under a term:
//!
//! 1. with probability `p` the block outcomes are drawn from the ideal state,
//!    block by block; otherwise every measured outcome is uniform (white
//!    noise);
//! 2. the total outcome product is flipped with probability `ε/2`;
//! 3. each particle is detected independently with probability `η`.
//!
//! Every term gets its own ChaCha stream derived from the master seed, so the
//! result does not depend on how terms are spread over threads.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{term_count, BellTerm, BlockTerm, Terms};
use crate::efficiency::NoiseParams;
use crate::error::{Error, Result};
use crate::pauli::{block_product, Particle};
use crate::state::build_state;

pub const SCHEMA_VERSION: u32 = 1;

/// Stream id reserved for choosing the term subsample.
const SELECTION_STREAM: u64 = u64::MAX;

/// Joint outcome distribution of one block term's observables on the ideal
/// block state. Outcome patterns use bit `k` = 1 for a −1 result on factor `k`.
#[derive(Debug, Clone)]
struct BlockDistribution {
    n_factors: u32,
    // cumulative[o] = 2^m * P(pattern <= o)
    cumulative: Vec<u32>,
    particle_one_mask: u32,
}

impl BlockDistribution {
    fn build(term: BlockTerm) -> Self {
        let state = build_state(1).expect("one block");
        let factors = term.factors();
        let m = factors.len() as u32;
        let subsets = 1u32 << m;
        // ⟨Π_{k∈S} P_k⟩ for every subset S, exact.
        let moments: Vec<i64> = (0..subsets)
            .map(|s| {
                let chosen: Vec<_> = factors
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| s >> k & 1 == 1)
                    .map(|(_, f)| *f)
                    .collect();
                let op = block_product(&chosen, 1, 1).expect("block 1");
                i64::from(state.expectation(&op).expect("Hermitian product"))
            })
            .collect();
        // 2^m P(o) = Σ_S (−1)^{|o ∩ S|} ⟨P_S⟩
        let mut cumulative = Vec::with_capacity(subsets as usize);
        let mut running = 0i64;
        for o in 0..subsets {
            let weight: i64 = (0..subsets)
                .map(|s| {
                    if (o & s).count_ones() % 2 == 0 {
                        moments[s as usize]
                    } else {
                        -moments[s as usize]
                    }
                })
                .sum();
            assert!(weight >= 0, "negative probability");
            running += weight;
            cumulative.push(running as u32);
        }
        assert_eq!(running, i64::from(subsets));
        let particle_one_mask = factors
            .iter()
            .enumerate()
            .filter(|(_, (_, p))| *p == Particle::One)
            .fold(0, |acc, (k, _)| acc | 1 << k);
        BlockDistribution {
            n_factors: m,
            cumulative,
            particle_one_mask,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let r = rng.gen_range(0..1u32 << self.n_factors);
        self.cumulative.partition_point(|&c| c <= r) as u32
    }

    fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        rng.gen_range(0..1u32 << self.n_factors)
    }

    /// Outcome products `(particle 1, particle 2)` of a pattern, as parities.
    fn parities(&self, pattern: u32) -> (bool, bool) {
        let one = (pattern & self.particle_one_mask).count_ones() % 2 == 1;
        let two = (pattern & !self.particle_one_mask).count_ones() % 2 == 1;
        (one, two)
    }
}

fn distributions() -> &'static [BlockDistribution; 4] {
    static TABLES: OnceLock<[BlockDistribution; 4]> = OnceLock::new();
    TABLES.get_or_init(|| BlockTerm::ALL.map(BlockDistribution::build))
}

/// One emitted pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunRecord {
    pub term_index: u64,
    pub detected: [bool; 2],
    /// Product of each particle's measured outcomes; `None` when undetected.
    pub outcome: [Option<i8>; 2],
}

pub fn sample_run<R: Rng + ?Sized>(term: &BellTerm, noise: &NoiseParams, rng: &mut R) -> RunRecord {
    let tables = distributions();
    let ideal = rng.gen_bool(noise.p);
    let (mut odd_one, mut odd_two) = (false, false);
    for choice in term.choices() {
        let table = &tables[*choice as usize];
        let pattern = if ideal {
            table.sample(rng)
        } else {
            table.sample_uniform(rng)
        };
        let (a, b) = table.parities(pattern);
        odd_one ^= a;
        odd_two ^= b;
    }
    if rng.gen_bool(noise.epsilon / 2.0) {
        odd_one = !odd_one;
    }
    let detected = [rng.gen_bool(noise.eta), rng.gen_bool(noise.eta)];
    let sign = |odd: bool| if odd { -1 } else { 1 };
    RunRecord {
        term_index: term.index(),
        detected,
        outcome: [
            detected[0].then(|| sign(odd_one)),
            detected[1].then(|| sign(odd_two)),
        ],
    }
}

/// Detection-event tallies for one setting pair.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    pub n_total: u64,
    pub n_pp: u64,
    pub n_mm: u64,
    pub n_single_1: u64,
    pub n_single_2: u64,
    pub n_00: u64,
}

impl CountsTable {
    pub fn record(&mut self, run: &RunRecord) {
        self.n_total += 1;
        match run.outcome {
            [Some(a), Some(b)] if a == b => self.n_pp += 1,
            [Some(_), Some(_)] => self.n_mm += 1,
            [Some(_), None] => self.n_single_1 += 1,
            [None, Some(_)] => self.n_single_2 += 1,
            [None, None] => self.n_00 += 1,
        }
    }

    pub fn merge(&mut self, other: &CountsTable) {
        self.n_total += other.n_total;
        self.n_pp += other.n_pp;
        self.n_mm += other.n_mm;
        self.n_single_1 += other.n_single_1;
        self.n_single_2 += other.n_single_2;
        self.n_00 += other.n_00;
    }

    /// Total equals the sum of the five event classes.
    pub fn is_consistent(&self) -> bool {
        self.n_total == self.n_pp + self.n_mm + self.n_single_1 + self.n_single_2 + self.n_00
    }

    fn detected_any(&self) -> u64 {
        self.n_total - self.n_00
    }
}

/// `(N(AB=+1) − N(AB=−1)) / (N − N(A=0,B=0))`; single detections stay in the
/// denominator.
pub fn estimate_correlation(counts: &CountsTable) -> Result<f64> {
    let denom = counts.detected_any();
    if denom == 0 {
        return Err(Error::UndefinedEstimate);
    }
    Ok((counts.n_pp as f64 - counts.n_mm as f64) / denom as f64)
}

/// Standard error of [`estimate_correlation`], treating each pair with at
/// least one detection as a draw from {+1, −1, 0}.
pub fn correlation_stderr(counts: &CountsTable) -> Result<f64> {
    let denom = counts.detected_any();
    if denom == 0 {
        return Err(Error::UndefinedEstimate);
    }
    let d = denom as f64;
    let mean = (counts.n_pp as f64 - counts.n_mm as f64) / d;
    let second = (counts.n_pp + counts.n_mm) as f64 / d;
    Ok(((second - mean * mean).max(0.0) / d).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub index: u64,
    pub choices: String,
    pub sign: i8,
    pub correlation: f64,
    pub stderr: f64,
    pub counts: CountsTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub beta_hat: f64,
    pub stderr: f64,
    pub shots_per_term: u64,
    pub terms_sampled: u64,
    pub exhaustive: bool,
    pub seed: u64,
    pub counts: CountsTable,
    pub terms: Vec<TermEstimate>,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs `shots` pairs under one term.
pub fn simulate_term<R: Rng + ?Sized>(
    term: &BellTerm,
    shots: u64,
    noise: &NoiseParams,
    rng: &mut R,
) -> CountsTable {
    let mut counts = CountsTable::default();
    for _ in 0..shots {
        counts.record(&sample_run(term, noise, rng));
    }
    debug_assert!(counts.is_consistent());
    counts
}

/// Estimates the Bell value from simulated coincidence counts: every term
/// when `4^N <= term_budget`, otherwise a uniform sample of `term_budget`
/// terms scaled by `4^N / M`.
pub fn estimate_beta(
    n_blocks: usize,
    shots_per_term: u64,
    noise: &NoiseParams,
    seed: u64,
    term_budget: u64,
) -> Result<BetaEstimate> {
    if shots_per_term == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "shots_per_term",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    if term_budget == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "term_budget",
            value: 0.0,
            range: "[1, inf)",
        });
    }
    let noise = NoiseParams::new(noise.epsilon, noise.p, noise.eta)?;
    let total = term_count(n_blocks)?;
    let terms = Terms::new(n_blocks)?;
    let exhaustive = total <= term_budget;
    let indices: Vec<u64> = if exhaustive {
        (0..total).collect()
    } else {
        let mut rng = stream_rng(seed, SELECTION_STREAM);
        (0..term_budget).map(|_| rng.gen_range(0..total)).collect()
    };

    let estimates: Vec<TermEstimate> = indices
        .par_iter()
        .enumerate()
        .map(|(k, &index)| {
            let term = terms.term(index);
            let mut rng = stream_rng(seed, k as u64);
            let counts = simulate_term(&term, shots_per_term, &noise, &mut rng);
            Ok(TermEstimate {
                index,
                choices: term.choices_label(),
                sign: term.sign(),
                correlation: estimate_correlation(&counts)?,
                stderr: correlation_stderr(&counts)?,
                counts,
            })
        })
        .collect::<Result<_>>()?;

    let mut counts = CountsTable::default();
    for e in &estimates {
        counts.merge(&e.counts);
    }
    let signed: Vec<f64> = estimates
        .iter()
        .map(|e| f64::from(e.sign) * e.correlation)
        .collect();
    let m = signed.len() as f64;
    let (beta_hat, stderr) = if exhaustive {
        let var: f64 = estimates.iter().map(|e| e.stderr * e.stderr).sum();
        (signed.iter().sum::<f64>(), var.sqrt())
    } else {
        let scale = total as f64;
        let mean = signed.iter().sum::<f64>() / m;
        let var_mean = if signed.len() > 1 {
            signed.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (m - 1.0) / m
        } else {
            estimates[0].stderr.powi(2)
        };
        (scale * mean, scale * var_mean.sqrt())
    };

    Ok(BetaEstimate {
        beta_hat,
        stderr,
        shots_per_term,
        terms_sampled: estimates.len() as u64,
        exhaustive,
        seed,
        counts,
        terms: estimates,
    })
}

/// Versioned JSON result document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationDocument {
    pub schema_version: u32,
    pub n: usize,
    pub shots_per_term: u64,
    pub terms_sampled: u64,
    pub exhaustive: bool,
    pub eta: f64,
    pub eps: f64,
    pub p: f64,
    pub seed: u64,
    pub beta_hat: f64,
    pub stderr: f64,
    pub counts_summary: CountsTable,
    pub terms: Vec<TermEstimate>,
}

impl SimulationDocument {
    pub fn new(n_blocks: usize, noise: &NoiseParams, estimate: BetaEstimate) -> Self {
        SimulationDocument {
            schema_version: SCHEMA_VERSION,
            n: n_blocks,
            shots_per_term: estimate.shots_per_term,
            terms_sampled: estimate.terms_sampled,
            exhaustive: estimate.exhaustive,
            eta: noise.eta,
            eps: noise.epsilon,
            p: noise.p,
            seed: estimate.seed,
            beta_hat: estimate.beta_hat,
            stderr: estimate.stderr,
            counts_summary: estimate.counts,
            terms: estimate.terms,
        }
    }
}
