use conecg::cg::engine::Mode;
use conecg::conic::SolverParams;
use conecg::poly::{amgm_separation, Poly, PolyMaster, DEFAULT_GRAM_CAP, DEFAULT_NODE_CAP};

#[test]
fn motzkin_as_extra_column_closes_the_gap() {
    let p = Poly::motzkin();
    let params = SolverParams::precise();
    let mut m = PolyMaster::new(&p, 0, DEFAULT_GRAM_CAP).unwrap();
    let atoms = m.initial_atoms(Mode::Lp);
    let before = m.solve_full(&atoms, &params).unwrap().lambda;
    assert!(before < 0.0);
    // p itself is nonnegative, so λ = 0 becomes feasible
    m.add_extra_column(&p).unwrap();
    let after = m.solve_full(&atoms, &params).unwrap();
    assert!(after.lambda >= -1e-7, "{}", after.lambda);
    assert!(after.extra_weights[0] > 0.0);
}

#[test]
fn amgm_cuts_never_lower_the_bound() {
    let p = Poly::motzkin();
    let params = SolverParams::precise();
    let mut m = PolyMaster::new(&p, 0, DEFAULT_GRAM_CAP).unwrap();
    let atoms = m.initial_atoms(Mode::Socp);
    let mut sol = m.solve_full(&atoms, &params).unwrap();
    for _ in 0..5 {
        let basis = m.gram().full_basis().clone();
        let Some(cut) = amgm_separation(&sol.mu, &basis, 3, DEFAULT_NODE_CAP, 1e-9).unwrap() else {
            break;
        };
        assert!(cut.is_valid(3));
        m.add_extra_column(&cut.poly).unwrap();
        let next = m.solve_full(&atoms, &params).unwrap();
        assert!(
            next.lambda >= sol.lambda - 1e-8,
            "{} < {}",
            next.lambda,
            sol.lambda
        );
        sol = next;
    }
    assert!(sol.lambda <= 1e-7);
}

#[test]
fn extra_column_must_match_degree() {
    let mut m = PolyMaster::new(&Poly::motzkin(), 0, DEFAULT_GRAM_CAP).unwrap();
    let q = Poly::from_terms(3, 4, &[(vec![4, 0, 0], 1.0)]).unwrap();
    assert!(m.add_extra_column(&q).is_err());
}
