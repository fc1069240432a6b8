//! SDPs of the form max bᵀy s.t. C − Σ y_iA_i ⪰ 0 and their restricted
//! masters over DD/SDD atoms.

use crate::atoms::{Atom, AtomSet};
use crate::cg::engine::{matrix_certificate, Certificate, Direction, Master, MasterSolution};
use crate::conic::{ConicModel, LinExpr, Sense, SolveStatus, SolverParams};
use crate::error::{Error, Result};
use crate::symmat::{eigh, SymMatrix, Tokens};

#[derive(Clone, Debug, PartialEq)]
pub struct SdpProblem {
    pub c: SymMatrix,
    pub a: Vec<SymMatrix>,
    pub b: Vec<f64>,
    /// y_i ≥ 0 where set; free otherwise.
    pub nonneg: Vec<bool>,
}

impl SdpProblem {
    /// Problem with free y.
    pub fn new(c: SymMatrix, a: Vec<SymMatrix>, b: Vec<f64>) -> Result<Self> {
        let m = a.len();
        Self::with_sign_constraints(c, a, b, vec![false; m])
    }

    pub fn with_sign_constraints(
        c: SymMatrix,
        a: Vec<SymMatrix>,
        b: Vec<f64>,
        nonneg: Vec<bool>,
    ) -> Result<Self> {
        let p = SdpProblem { c, a, b, nonneg };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.n();
        if n == 0 {
            return Err(Error::InvalidInput(
                "SDP matrix dimension must be positive".into(),
            ));
        }
        if self.b.len() != self.a.len() {
            return Err(Error::Dimension {
                expected: self.a.len(),
                got: self.b.len(),
            });
        }
        if self.nonneg.len() != self.a.len() {
            return Err(Error::Dimension {
                expected: self.a.len(),
                got: self.nonneg.len(),
            });
        }
        for a in &self.a {
            if a.n() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: a.n(),
                });
            }
        }
        if !self.c.is_finite()
            || !self.a.iter().all(|a| a.is_finite())
            || !self.b.iter().all(|x| x.is_finite())
        {
            return Err(Error::InvalidInput("SDP data must be finite".into()));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// C − Σ y_iA_i
    pub fn slack(&self, y: &[f64]) -> SymMatrix {
        let mut s = self.c.clone();
        for (yi, ai) in y.iter().zip(&self.a) {
            s.axpy(-yi, ai);
        }
        s
    }

    pub fn objective(&self, y: &[f64]) -> f64 {
        self.b.iter().zip(y).map(|(b, y)| b * y).sum()
    }

    /// Parses "m n", then C as an n×n block, then m blocks of b_i followed
    /// by A_i. All y are free.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Tokens::new(text);
        let m = t.next_usize()?;
        let n = t.next_usize()?;
        if n == 0 {
            return Err(Error::parse(1, "matrix dimension must be positive"));
        }
        let c = SymMatrix::from_rows(&t.read_square(n)?)?;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..m {
            b.push(t.next_f64()?);
            a.push(SymMatrix::from_rows(&t.read_square(n)?)?);
        }
        t.expect_end()?;
        Self::new(c, a, b)
    }

    pub fn to_text(&self) -> String {
        let block = |m: &SymMatrix| {
            m.to_text()
                .split_once('\n')
                .map(|x| x.1.to_string())
                .unwrap_or_default()
        };
        let mut s = format!("{} {}\n", self.m(), self.n());
        s.push_str(&block(&self.c));
        for (bi, ai) in self.b.iter().zip(&self.a) {
            s.push_str(&format!("{bi}\n"));
            s.push_str(&block(ai));
        }
        s
    }
}

/// Solution of a restricted SDP master.
#[derive(Clone, Debug)]
pub struct SdpMasterSolution {
    pub status: SolveStatus,
    pub bound: f64,
    pub y: Vec<f64>,
    /// Per-atom weights: one α for rank-one atoms, (a1, a2, a3) for pairs.
    pub weights: Vec<Vec<f64>>,
    /// Sensitivities of the optimum to the upper-triangle entries of C, in
    /// row-major upper order.
    pub mu: Vec<f64>,
}

impl SdpMasterSolution {
    /// The dual matrix X* assembled from `mu`.
    pub fn dual_matrix(&self, n: usize) -> Result<SymMatrix> {
        if self.status != SolveStatus::Optimal {
            return Err(Error::Solver(self.status));
        }
        assemble_dual_matrix(n, &self.mu)
    }
}

/// Restricted master: C − Σ y_iA_i = Σ atom contributions, entrywise on the
/// upper triangle. Rank-one atoms get α ≥ 0; pair atoms get a 2×2 PSD block.
pub fn solve_master(
    prob: &SdpProblem,
    atoms: &AtomSet,
    params: &SolverParams,
) -> Result<SdpMasterSolution> {
    prob.validate()?;
    if atoms.is_empty() {
        return Err(Error::InvalidInput("master needs at least one atom".into()));
    }
    let n = prob.n();
    if let Some(a) = atoms.iter().find(|a| a.n() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: a.n(),
        });
    }
    let mut model = ConicModel::new(Sense::Maximize);
    let y: Vec<usize> = (0..prob.m())
        .map(|i| model.add_var(if prob.nonneg[i] { Some(0.0) } else { None }, prob.b[i]))
        .collect();
    let mut rows: Vec<LinExpr> = vec![LinExpr::new(); n * (n + 1) / 2];
    for (yi, ai) in y.iter().zip(&prob.a) {
        for (i, j, v) in ai.upper() {
            rows[prob.c.upper_index(i, j)].push(*yi, v);
        }
    }
    let mut weight_vars = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let vars: Vec<usize> = match atom {
            Atom::RankOne(_) => vec![model.add_var(Some(0.0), 0.0)],
            Atom::Pair(_) => {
                let v = [
                    model.add_var(None, 0.0),
                    model.add_var(None, 0.0),
                    model.add_var(None, 0.0),
                ];
                model.add_psd2(v);
                v.to_vec()
            }
        };
        for (gen, var) in atom.generators_upper().iter().zip(&vars) {
            for &(i, j, x) in gen {
                rows[prob.c.upper_index(i, j)].push(*var, x);
            }
        }
        weight_vars.push(vars);
    }
    let eq_ids: Vec<usize> = rows
        .into_iter()
        .zip(prob.c.upper())
        .map(|(row, (_, _, cij))| model.add_eq(row, cij))
        .collect();

    let sol = model.solve(params)?;
    let y_val = y
        .iter()
        .map(|&i| sol.primal.get(i).copied().unwrap_or(0.0))
        .collect();
    let weights = weight_vars
        .iter()
        .map(|vs| {
            vs.iter()
                .map(|&i| sol.primal.get(i).copied().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let mu = eq_ids
        .iter()
        .map(|&e| sol.dual_eq.get(e).copied().unwrap_or(0.0))
        .collect();
    Ok(SdpMasterSolution {
        status: sol.status,
        bound: sol.objective_value,
        y: y_val,
        weights,
        mu,
    })
}

/// [`solve_master`] restricted to rank-one atoms.
pub fn solve_master_lp(
    prob: &SdpProblem,
    atoms: &AtomSet,
    params: &SolverParams,
) -> Result<SdpMasterSolution> {
    if atoms.iter().any(|a| matches!(a, Atom::Pair(_))) {
        return Err(Error::InvalidInput(
            "LP master takes rank-one atoms only".into(),
        ));
    }
    solve_master(prob, atoms, params)
}

/// [`solve_master`] with pair atoms (rank-one cuts may be mixed in).
pub fn solve_master_socp(
    prob: &SdpProblem,
    atoms: &AtomSet,
    params: &SolverParams,
) -> Result<SdpMasterSolution> {
    solve_master(prob, atoms, params)
}

/// X with X_ii = μ_ii and X_ij = μ_ij/2, so that X·A equals Σ μ_ij A_ij over
/// the upper triangle.
pub fn assemble_dual_matrix(n: usize, mu: &[f64]) -> Result<SymMatrix> {
    if mu.len() != n * (n + 1) / 2 {
        return Err(Error::Dimension {
            expected: n * (n + 1) / 2,
            got: mu.len(),
        });
    }
    let mut x = SymMatrix::zeros(n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            x.set(i, j, if i == j { mu[k] } else { 0.5 * mu[k] });
            k += 1;
        }
    }
    Ok(x)
}

/// Column-generation master for an [`SdpProblem`].
#[derive(Clone, Debug)]
pub struct SdpMaster {
    pub problem: SdpProblem,
    /// y from the most recent solve.
    pub last_y: Vec<f64>,
}

impl SdpMaster {
    pub fn new(problem: SdpProblem) -> Self {
        let m = problem.m();
        SdpMaster {
            problem,
            last_y: vec![0.0; m],
        }
    }
}

impl Master for SdpMaster {
    fn direction(&self) -> Direction {
        Direction::Maximize
    }

    fn atom_dim(&self) -> usize {
        self.problem.n()
    }

    fn solve(&mut self, atoms: &AtomSet, params: &SolverParams) -> Result<MasterSolution> {
        let s = solve_master(&self.problem, atoms, params)?;
        let n = self.problem.n();
        let dual = if s.status == SolveStatus::Optimal {
            assemble_dual_matrix(n, &s.mu)?
        } else {
            SymMatrix::zeros(n)
        };
        if s.status == SolveStatus::Optimal {
            self.last_y = s.y.clone();
        }
        Ok(MasterSolution {
            status: s.status,
            bound: s.bound,
            dual,
            weights: s.weights,
        })
    }

    fn certify(&self, atoms: &AtomSet, sol: &MasterSolution) -> Result<Certificate> {
        let target = self.problem.slack(&self.last_y);
        matrix_certificate(
            &target,
            atoms,
            &sol.weights,
            self.problem.c.frobenius_norm(),
        )
    }
}

/// λ_min(C − Σ y_iA_i).
pub fn slack_min_eigenvalue(prob: &SdpProblem, y: &[f64]) -> Result<f64> {
    Ok(eigh(&prob.slack(y))?.min_eigenvalue())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atoms::{gen_u2, gen_v2, RankOneAtom};
    use crate::cg::engine::{run, CgConfig, Mode, Pricing, Termination};

    fn two_by_two() -> SdpProblem {
        // max y s.t. [[1,y],[y,4]] ⪰ 0, i.e. C = diag(1,4), A = −E12
        let a = SymMatrix::from_rows(&[vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        SdpProblem::new(SymMatrix::diagonal(&[1.0, 4.0]), vec![a], vec![1.0]).unwrap()
    }

    #[test]
    fn dd_master_on_two_by_two() {
        let s = solve_master_lp(&two_by_two(), &gen_u2(2), &SolverParams::precise()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.bound - 1.0).abs() < 1e-7);
        // dual feasibility: A·X = b and uᵀXu ≥ 0 over the atoms
        let x = s.dual_matrix(2).unwrap();
        let prob = two_by_two();
        assert!((prob.a[0].dot(&x) - 1.0).abs() < 1e-6);
        for a in &gen_u2(2) {
            assert!(a.value(&x).unwrap() >= -1e-8);
        }
    }

    #[test]
    fn rank_one_atom_closes_gap() {
        let mut atoms = AtomSet::new();
        atoms.insert(Atom::RankOne(RankOneAtom::signed(2, &[(0, 1)])));
        atoms.insert(Atom::RankOne(RankOneAtom::signed(2, &[(1, 1)])));
        atoms.insert(Atom::RankOne(RankOneAtom::dense(&[1.0, 2.0]).unwrap()));
        let s = solve_master_lp(&two_by_two(), &atoms, &SolverParams::precise()).unwrap();
        assert!((s.bound - 2.0).abs() < 1e-7);
    }

    #[test]
    fn sdd_master_on_two_by_two() {
        let s = solve_master_socp(&two_by_two(), &gen_v2(2), &SolverParams::precise()).unwrap();
        assert!((s.bound - 2.0).abs() < 1e-6);
    }

    #[test]
    fn no_constraints_is_trivially_feasible() {
        let p = SdpProblem::new(SymMatrix::identity(3), vec![], vec![]).unwrap();
        let s = solve_master_lp(&p, &gen_u2(3), &SolverParams::precise()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.bound, 0.0);
        let p = SdpProblem::new(SymMatrix::diagonal(&[2.0, 0.0, 1.0]), vec![], vec![]).unwrap();
        let s = solve_master_socp(&p, &gen_v2(3), &SolverParams::precise()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
    }

    #[test]
    fn lp_master_rejects_pairs() {
        assert!(solve_master_lp(&two_by_two(), &gen_v2(2), &SolverParams::precise()).is_err());
        assert!(solve_master_lp(&two_by_two(), &AtomSet::new(), &SolverParams::precise()).is_err());
    }

    #[test]
    fn engine_closes_two_by_two_gap() {
        let mut m = SdpMaster::new(two_by_two());
        let cfg = CgConfig::new(Mode::Lp, Pricing::Eig);
        let r = run(&mut m, gen_u2(2), &cfg).unwrap();
        let b = r.trace.bounds();
        assert!((b[0] - 1.0).abs() < 1e-7);
        // the first eigenvector is (1, 1+√2), not (1, 2): one cut reaches 4 − 1.5√2
        assert!((b[1] - (4.0 - 1.5 * 2f64.sqrt())).abs() < 1e-6);
        assert!((r.trace.final_bound() - 2.0).abs() < 1e-6);
        assert!(r.trace.is_monotone());
        assert!(r.trace.converged());
        assert!(r.trace.certificate.as_ref().unwrap().ok());
    }

    #[test]
    fn engine_converges_immediately_without_constraints() {
        let mut m =
            SdpMaster::new(SdpProblem::new(SymMatrix::identity(3), vec![], vec![]).unwrap());
        let r = run(&mut m, gen_u2(3), &CgConfig::new(Mode::Lp, Pricing::Eig)).unwrap();
        assert_eq!(r.trace.termination, Termination::PsdDual);
        assert_eq!(r.trace.iterations(), 0);
    }

    #[test]
    fn text_round_trip() {
        let p = two_by_two();
        let q = SdpProblem::parse(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert!(SdpProblem::parse("1 2\n1 0\n0 1\n").is_err());
        assert!(SdpProblem::parse("0 0\n").is_err());
    }
}
