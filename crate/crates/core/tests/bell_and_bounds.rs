use hyperbell::bell::{enumerate_terms, quantum_value, Backend, BlockTerm};
use hyperbell::lhv::{
    brute_force_bound, evaluate, evaluate_factored, factored_bound, mixture_value, LhvAssignment,
};
use hyperbell::pauli::PauliOp;
use hyperbell::state::build_state;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn term_counts_are_powers_of_four() {
    for n in 1..=8 {
        assert_eq!(
            enumerate_terms(n).unwrap().count() as u64,
            4u64.pow(n as u32)
        );
    }
}

#[test]
fn term_streams_are_deterministic_and_distinct() {
    let a: Vec<_> = enumerate_terms(3)
        .unwrap()
        .map(|t| t.choices().to_vec())
        .collect();
    let b: Vec<_> = enumerate_terms(3)
        .unwrap()
        .map(|t| t.choices().to_vec())
        .collect();
    assert_eq!(a, b);
    let mut sorted = a.clone();
    sorted.sort();
    sorted.dedup();
    assert_eq!(sorted.len(), a.len());
}

#[test]
fn term_expectation_factorizes_over_blocks() {
    let n = 3;
    let state = build_state(n).unwrap();
    for term in enumerate_terms(n).unwrap() {
        let whole = state.expectation(term.operator()).unwrap();
        let per_block: i8 = term
            .choices()
            .iter()
            .enumerate()
            .map(|(j, c)| state.expectation(&c.operator(j + 1, n).unwrap()).unwrap())
            .product();
        assert_eq!(whole, per_block);
        assert_eq!(whole * term.sign(), 1);
    }
}

#[test]
fn every_signed_term_is_plus_one_up_to_n8() {
    for n in [4, 8] {
        let state = build_state(n).unwrap();
        for term in enumerate_terms(n).unwrap() {
            assert_eq!(state.expectation(term.operator()).unwrap() * term.sign(), 1);
        }
    }
}

#[test]
fn dense_quantum_value_cross_check() {
    for n in 1..=3 {
        assert_eq!(
            quantum_value(n, Backend::Dense).unwrap(),
            quantum_value(n, Backend::Stabilizer).unwrap()
        );
    }
}

#[test]
fn block_term_menu() {
    let expected = [
        (BlockTerm::T1, 1, "+X1(1).X2(1).z2(1)"),
        (BlockTerm::T2, -1, "+Y1(1).Y2(1).z2(1)"),
        (BlockTerm::T3, 1, "+X1(1).x1(1).Y2(1).y2(1)"),
        (BlockTerm::T4, 1, "+Y1(1).x1(1).X2(1).y2(1)"),
    ];
    for (t, sign, op) in expected {
        assert_eq!(t.sign(), sign);
        assert_eq!(t.operator(1, 1).unwrap(), PauliOp::parse(op, 1).unwrap());
    }
}

#[test]
fn parity_property_exhaustive() {
    for n in 1..=2 {
        let total = 1u64 << (7 * n);
        let bound = 1i64 << n;
        for mask in 0..total {
            let a = LhvAssignment::from_bitmask(n, mask);
            assert_eq!(evaluate(&a, n).unwrap().abs(), bound);
        }
    }
}

#[test]
fn brute_force_agrees_with_factored() {
    for n in 1..=3 {
        let r = brute_force_bound(n).unwrap();
        assert_eq!(r.max_value as u128, factored_bound(n).unwrap());
        assert_eq!(r.min_value, -r.max_value);
        assert_eq!(r.assignments_scanned, 1 << (7 * n));
        assert_eq!(evaluate_factored(&r.argmax, n).unwrap(), r.max_value);
    }
}

#[test]
fn brute_force_is_thread_count_independent() {
    let results: Vec<_> = [1, 2, 5]
        .iter()
        .map(|&t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| brute_force_bound(2).unwrap())
        })
        .collect();
    assert!(results.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn random_mixtures_never_exceed_deterministic_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for n in 1..=3 {
        let max = factored_bound(n).unwrap() as f64;
        for _ in 0..1000 {
            let k = rng.gen_range(1..6);
            let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            let mixture: Vec<_> = raw
                .iter()
                .map(|w| {
                    let mask = rng.gen_range(0..1u64 << (7 * n));
                    (w / total, LhvAssignment::from_bitmask(n, mask))
                })
                .collect();
            assert!(mixture_value(&mixture, n).unwrap() <= max + 1e-12);
        }
    }
}

#[test]
fn exponential_ratio() {
    for n in 1..=8 {
        let q = quantum_value(n, Backend::Stabilizer).unwrap() as u128;
        let c = factored_bound(n).unwrap();
        assert_eq!(q % c, 0);
        assert_eq!(q / c, 1 << n);
    }
}

proptest! {
    #[test]
    fn term_sum_equals_block_product(n in 1usize..=3, mask in any::<u64>()) {
        let a = LhvAssignment::from_bitmask(n, mask);
        prop_assert_eq!(evaluate(&a, n).unwrap(), evaluate_factored(&a, n).unwrap());
    }
}
