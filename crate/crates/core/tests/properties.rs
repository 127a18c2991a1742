use dsa_core::entropy::{cond_entropy, entropy, mutual_info, LinearObservable};
use dsa_core::field::{FieldVector, PrimeField};
use dsa_core::linalg::FieldMatrix;
use dsa_core::mds::{build_vandermonde, is_mds};
use itertools::Itertools;
use proptest::prelude::*;

const PRIMES: [u64; 6] = [2, 3, 5, 11, 257, 65_537];

fn field() -> impl Strategy<Value = PrimeField> {
    prop::sample::select(PRIMES.to_vec()).prop_map(|q| PrimeField::new(q).unwrap())
}

fn matrix_in(f: PrimeField, rows: usize, cols: usize) -> impl Strategy<Value = FieldMatrix> {
    prop::collection::vec(0..f.modulus(), rows * cols)
        .prop_map(move |v| FieldMatrix::from_row_major(f, rows, cols, &v).unwrap())
}

fn matrix() -> impl Strategy<Value = FieldMatrix> {
    (field(), 1usize..7, 1usize..7).prop_flat_map(|(f, r, c)| matrix_in(f, r, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn field_axioms(q in prop::sample::select(PRIMES.to_vec()), a: u64, b: u64, c: u64) {
        let f = PrimeField::new(q).unwrap();
        let (a, b, c) = (f.elem(a), f.elem(b), f.elem(c));
        prop_assert_eq!((a + b) + c, a + (b + c));
        prop_assert_eq!((a * b) * c, a * (b * c));
        prop_assert_eq!(a + b, b + a);
        prop_assert_eq!(a * b, b * a);
        prop_assert_eq!(a * (b + c), a * b + a * c);
        prop_assert_eq!(a + f.zero(), a);
        prop_assert_eq!(a * f.one(), a);
        prop_assert_eq!(a + (-a), f.zero());
        prop_assert_eq!((a - b) + b, a);
        // against plain u128 arithmetic
        let wide = (a.value() as u128 * b.value() as u128 % q as u128) as u64;
        prop_assert_eq!((a * b).value(), wide);
    }

    #[test]
    fn nonzero_elements_invert(q in prop::sample::select(PRIMES.to_vec()), a: u64) {
        let f = PrimeField::new(q).unwrap();
        let a = f.elem(a);
        if a.is_zero() {
            prop_assert!(a.inv().is_err());
        } else {
            prop_assert_eq!(a * a.inv().unwrap(), f.one());
            // Fermat
            prop_assert_eq!(a.pow(q - 1), f.one());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn rank_is_transpose_invariant(m in matrix()) {
        prop_assert_eq!(m.rank(), m.transpose().rank());
        prop_assert!(m.rank() <= m.rows().min(m.cols()));
    }

    #[test]
    fn stacked_rank_is_subadditive(
        (a, b) in (field(), 1usize..6, 1usize..6, 1usize..7)
            .prop_flat_map(|(f, r1, r2, c)| (matrix_in(f, r1, c), matrix_in(f, r2, c)))
    ) {
        let stacked = FieldMatrix::vstack(a.field(), a.cols(), [&a, &b]).unwrap();
        prop_assert!(stacked.rank() <= a.rank() + b.rank());
        prop_assert!(stacked.rank() >= a.rank().max(b.rank()));
    }

    #[test]
    fn solve_round_trip(
        (m, x) in (field(), 1usize..7).prop_flat_map(|(f, n)| {
            (matrix_in(f, n, n), prop::collection::vec(0..f.modulus(), n))
        })
    ) {
        let f = m.field();
        let x = FieldVector::from_values(f, x);
        let b = m.mul_vec(&x).unwrap();
        match m.solve(&b) {
            Ok(sol) => {
                prop_assert!(m.is_nonsingular().unwrap());
                prop_assert_eq!(sol, x);
            }
            Err(_) => prop_assert!(!m.is_nonsingular().unwrap()),
        }
    }

    #[test]
    fn determinant_is_multiplicative(
        (a, b) in (field(), 1usize..5).prop_flat_map(|(f, n)| (matrix_in(f, n, n), matrix_in(f, n, n)))
    ) {
        let ab = a.matmul(&b).unwrap();
        prop_assert_eq!(
            ab.determinant().unwrap(),
            a.determinant().unwrap() * b.determinant().unwrap()
        );
        prop_assert_eq!(a.determinant().unwrap().is_zero(), !a.is_nonsingular().unwrap());
    }
}

/// `Π_{i<j} (β_j − β_i)` computed directly.
fn vandermonde_det(f: PrimeField, points: &[u64]) -> u64 {
    points
        .iter()
        .tuple_combinations()
        .fold(1, |acc, (&bi, &bj)| f.mul_raw(acc, f.sub_raw(bj, bi)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn vandermonde_mds_matches_the_product_formula(
        (q, u, points) in (prop::sample::select(vec![11u64, 13, 101, 257]), 1usize..5, 2usize..8)
            .prop_flat_map(|(q, u, k)| {
                let k = k.max(u);
                (Just(q), Just(u), prop::sample::subsequence((1..q).collect::<Vec<_>>(), k))
            })
    ) {
        let f = PrimeField::new(q).unwrap();
        let betas = FieldVector::from_values(f, points.clone());
        let m = build_vandermonde(u, &betas).unwrap();
        let analytic = points
            .iter()
            .copied()
            .combinations(u)
            .all(|cols| vandermonde_det(f, &cols) != 0);
        prop_assert!(analytic);
        prop_assert_eq!(is_mds(&m).unwrap(), analytic);
        for cols in (0..points.len()).combinations(u) {
            let sub = m.submatrix(&(0..u).collect::<Vec<_>>(), &cols).unwrap();
            let chosen: Vec<u64> = cols.iter().map(|&c| points[c]).collect();
            prop_assert_eq!(sub.determinant().unwrap().value(), vandermonde_det(f, &chosen));
        }
    }
}

fn observable(f: PrimeField, rows: usize, d: usize) -> impl Strategy<Value = LinearObservable> {
    matrix_in(f, rows, d).prop_map(|m| LinearObservable::new("obs", m))
}

fn triple() -> impl Strategy<Value = (LinearObservable, LinearObservable, LinearObservable)> {
    (prop::sample::select(vec![2u64, 3, 5, 7]), 1usize..8).prop_flat_map(|(q, d)| {
        let f = PrimeField::new(q).unwrap();
        (
            (0usize..4).prop_flat_map(move |r| observable(f, r.max(1), d)),
            (0usize..4).prop_flat_map(move |r| observable(f, r.max(1), d)),
            (0usize..4).prop_flat_map(move |r| observable(f, r.max(1), d)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mutual_information_is_symmetric((a, b, c) in triple()) {
        prop_assert_eq!(mutual_info(&[&a], &[&b], &[&c]).unwrap(), mutual_info(&[&b], &[&a], &[&c]).unwrap());
        prop_assert!(mutual_info(&[&a], &[&b], &[&c]).unwrap() >= 0);
        prop_assert_eq!(mutual_info(&[&a], &[&b], &[&a, &b]).unwrap(), 0);
    }

    #[test]
    fn conditioning_reduces_entropy((a, b, c) in triple()) {
        prop_assert!(cond_entropy(&[&a], &[&b, &c]).unwrap() <= cond_entropy(&[&a], &[&b]).unwrap());
        prop_assert!(cond_entropy(&[&a], &[&b]).unwrap() <= entropy(&[&a]).unwrap());
        prop_assert_eq!(cond_entropy(&[&a], &[&a]).unwrap(), 0);
        // chain rule
        prop_assert_eq!(
            entropy(&[&a, &b]).unwrap(),
            entropy(&[&b]).unwrap() + cond_entropy(&[&a], &[&b]).unwrap()
        );
    }
}
