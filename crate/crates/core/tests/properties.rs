use std::collections::HashSet;

use proptest::prelude::*;

use conecg::atoms::{RankOneAtom, U3Cursor};
use conecg::poly::{GramMap, Poly};
use conecg::symmat::{dd_decompose, eigh, is_dd, SymMatrix};

fn sym(n: usize, vals: &[f64]) -> SymMatrix {
    let mut it = vals.iter().cycle();
    SymMatrix::from_fn(n, |_, _| *it.next().unwrap())
}

fn dd_from(n: usize, off: &[f64], slack: &[f64]) -> SymMatrix {
    let mut m = sym(n, off);
    for i in 0..n {
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| m.get(i, j).abs()).sum();
        m.set(i, i, row + slack[i % slack.len()]);
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_map_matches_polynomial_expansion(
        n in 1usize..4,
        d in 1u32..3,
        vals in prop::collection::vec(-3.0f64..3.0, 1..40),
        x in prop::collection::vec(-1.5f64..1.5, 3),
    ) {
        let g = GramMap::new(n, d);
        let q = sym(g.gram_size(), &vals);
        let p = Poly::from_coefficients(n, 2 * d, g.apply(&q).unwrap()).unwrap();
        // zᵀQz evaluated directly from the half-degree monomials
        let x = &x[..n];
        let z: Vec<f64> = (0..g.gram_size())
            .map(|i| g.half_basis().exponent(i).iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product())
            .collect();
        let direct = q.quad_form(&z);
        prop_assert!((p.eval(x) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
    }

    #[test]
    fn gram_adjoint_is_adjoint(
        n in 1usize..4,
        d in 1u32..3,
        vals in prop::collection::vec(-3.0f64..3.0, 1..40),
        mu_seed in prop::collection::vec(-3.0f64..3.0, 1..40),
    ) {
        let g = GramMap::new(n, d);
        let q = sym(g.gram_size(), &vals);
        let mu: Vec<f64> = mu_seed.iter().cycle().take(g.num_coefficients()).copied().collect();
        let lhs: f64 = g.apply(&q).unwrap().iter().zip(&mu).map(|(a, b)| a * b).sum();
        let rhs = q.dot(&g.adjoint(&mu).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn dd_decomposition_round_trips(
        n in 1usize..9,
        off in prop::collection::vec(-5.0f64..5.0, 1..50),
        slack in prop::collection::vec(0.0f64..2.0, 1..9),
    ) {
        let a = dd_from(n, &off, &slack);
        prop_assert!(is_dd(&a));
        let mut back = SymMatrix::zeros(n);
        for (c, u) in dd_decompose(&a).unwrap() {
            prop_assert!(c >= 0.0);
            prop_assert!(u.nnz() <= 2);
            back.add_outer(c, &u.to_dense());
        }
        let err = SymMatrix::from_fn(n, |i, j| back.get(i, j) - a.get(i, j)).frobenius_norm();
        prop_assert!(err <= 1e-12 * a.frobenius_norm().max(1.0));
        prop_assert!(eigh(&a).unwrap().min_eigenvalue() >= -1e-9 * a.max_abs().max(1.0));
    }

    #[test]
    fn sign_canonicalization(u in prop::collection::vec(-2.0f64..2.0, 2..7)) {
        prop_assume!(u.iter().any(|x| x.abs() > 1e-3));
        let neg: Vec<f64> = u.iter().map(|x| -x).collect();
        let a = RankOneAtom::dense(&u).unwrap();
        prop_assert_eq!(&a, &RankOneAtom::dense(&neg).unwrap());
        let first = a.to_dense().into_iter().find(|x| *x != 0.0).unwrap();
        prop_assert!(first > 0.0);
    }

    #[test]
    fn signed_atoms_ignore_global_sign(n in 3usize..8, i in 0usize..8, j in 0usize..8, neg in any::<bool>()) {
        prop_assume!(i < n && j < n && i != j);
        let s = if neg { -1 } else { 1 };
        prop_assert_eq!(RankOneAtom::signed(n, &[(i, 1), (j, s)]), RankOneAtom::signed(n, &[(i, -1), (j, -s)]));
    }
}

/// Every nonzero {−1, 0, 1} vector with at most three nonzeros, first
/// nonzero positive.
fn u3_classes(n: usize) -> HashSet<Vec<i8>> {
    let mut out = HashSet::new();
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        let v: Vec<i8> = (0..n)
            .map(|_| {
                let d = (c % 3) as i8 - 1;
                c /= 3;
                d
            })
            .collect();
        let nnz = v.iter().filter(|&&x| x != 0).count();
        if nnz >= 1 && nnz <= 3 && v.iter().find(|&&x| x != 0) == Some(&1) {
            out.insert(v);
        }
    }
    out
}

#[test]
fn cursor_visits_each_class_once_per_cycle() {
    for n in 1..=6 {
        let mut c = U3Cursor::new(n);
        let mut seen = HashSet::new();
        for _ in 0..c.cycle_len() {
            let a = c.peek();
            let v: Vec<i8> = a
                .to_dense()
                .iter()
                .map(|x| if *x == 0.0 { 0 } else { x.signum() as i8 })
                .collect();
            assert!(seen.insert(v), "n={n}: repeated {a:?}");
            c.advance();
        }
        assert_eq!(seen, u3_classes(n));
        assert_eq!(c.position(), 0);
        assert_eq!(c.peek(), U3Cursor::new(n).peek());
    }
}
