//! Stabilizer and dense backends agree on every operator of interest.

use hyperbell::bell::enumerate_terms;
use hyperbell::pauli::{block_product, Axis, PauliOp, Phase};
use hyperbell::state::{build_state, dense_state, PERFECT_CORRELATIONS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interesting_ops(n: usize) -> Vec<PauliOp> {
    let mut ops = Vec::new();
    for block in 1..=n {
        for (_, factors, _) in PERFECT_CORRELATIONS {
            ops.push(block_product(factors, block, n).unwrap());
        }
    }
    ops.extend(enumerate_terms(n).unwrap().map(|t| t.operator().clone()));
    ops
}

#[test]
fn backends_agree_on_correlations_and_terms() {
    for n in 1..=3 {
        let stab = build_state(n).unwrap();
        let dense = dense_state(n).unwrap();
        for op in interesting_ops(n) {
            let exact = f64::from(stab.expectation(&op).unwrap());
            let numeric = dense.expectation(&op).unwrap();
            assert!(
                (exact - numeric).abs() < 1e-12,
                "N={n} {op}: {exact} vs {numeric}"
            );
        }
    }
}

#[test]
fn backends_agree_on_random_hermitian_paulis() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let axes = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    for n in 1..=3 {
        let stab = build_state(n).unwrap();
        let dense = dense_state(n).unwrap();
        let mut nonzero = 0;
        for _ in 0..1000 {
            let letters: Vec<_> = (0..4 * n).map(|_| axes[rng.gen_range(0..4)]).collect();
            let phase = if rng.gen_bool(0.5) {
                Phase::One
            } else {
                Phase::MinusOne
            };
            let mut op = PauliOp::from_axes(&letters, phase);
            // Uniform Paulis almost never stabilize the state; half the time
            // draw from the stabilizer group up to sign instead.
            if rng.gen_bool(0.5) {
                op = PauliOp::identity(4 * n).with_phase(phase);
                for g in stab.generators() {
                    if rng.gen_bool(0.5) {
                        op = &op * g;
                    }
                }
            }
            let exact = f64::from(stab.expectation(&op).unwrap());
            let numeric = dense.expectation(&op).unwrap();
            assert!((exact - numeric).abs() < 1e-12, "N={n} {op}");
            nonzero += usize::from(exact != 0.0);
        }
        assert!(nonzero > 300, "N={n}: {nonzero}");
    }
}

#[test]
fn subset_products_of_generators_are_stabilizers() {
    let n = 2;
    let stab = build_state(n).unwrap();
    let gens = stab.generators();
    for subset in 1u32..1 << gens.len() {
        let mut op = PauliOp::identity(4 * n);
        for (k, g) in gens.iter().enumerate() {
            if subset >> k & 1 == 1 {
                op = &op * g;
            }
        }
        assert_eq!(stab.expectation(&op).unwrap(), 1);
    }
}

#[test]
fn block_local_expectations_do_not_depend_on_n() {
    for (_, factors, expected) in PERFECT_CORRELATIONS {
        for n in 1..=6 {
            let stab = build_state(n).unwrap();
            for block in 1..=n {
                let op = block_product(factors, block, n).unwrap();
                assert_eq!(stab.expectation(&op).unwrap(), expected);
            }
        }
    }
}

#[test]
fn dense_n1_matches_golden_file() {
    let golden = include_str!("golden/dense_n1.txt");
    let dense = dense_state(1).unwrap();
    let mut seen = 0;
    for line in golden.lines().filter(|l| !l.starts_with('#')) {
        let (index, amp) = line.split_once(' ').unwrap();
        let index: usize = index.parse().unwrap();
        let amp: f64 = amp.parse().unwrap();
        let actual = dense.amplitudes()[index];
        assert_eq!(actual.re, amp, "index {index}");
        assert_eq!(actual.im, 0.0);
        seen += 1;
    }
    assert_eq!(seen, 16);
}
