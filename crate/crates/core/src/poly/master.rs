use crate::atoms::{gen_u2, gen_v2, Atom, AtomSet};
use crate::cg::engine::{
    self, reconstruct, Certificate, CgConfig, CgRun, Direction, Master, MasterSolution, Mode,
};
use crate::conic::{ConicModel, LinExpr, Sense, SolveStatus, SolverParams};
use crate::error::{Error, Result};
use crate::poly::basis::{basis_size, sphere_multiplier, Poly};
use crate::poly::gram::GramMap;
use crate::symmat::{eigh, is_psd, SymMatrix};

/// Largest Gram basis the bound routines will build unless told otherwise.
pub const DEFAULT_GRAM_CAP: usize = 400;

/// Restricted master for max λ s.t. (p − λ·(Σx_i²)^d)·(Σx_i²)^r equals
/// Σ atom contributions in the Gram space of degree d + r, plus optional
/// fixed nonnegative columns.
#[derive(Clone, Debug)]
pub struct PolyMaster {
    gram: GramMap,
    /// coef(p·σ^r)
    target: Vec<f64>,
    /// coef(σ^{d+r})
    sphere: Vec<f64>,
    extra: Vec<Poly>,
    last: Option<PolySolution>,
}

/// Solution of a polynomial master.
#[derive(Clone, Debug)]
pub struct PolySolution {
    pub status: SolveStatus,
    pub lambda: f64,
    pub weights: Vec<Vec<f64>>,
    /// Weights on the extra columns, in insertion order.
    pub extra_weights: Vec<f64>,
    /// Sensitivities of λ to each coefficient of p·σ^r.
    pub mu: Vec<f64>,
}

impl PolyMaster {
    pub fn new(p: &Poly, r: u32, cap: usize) -> Result<Self> {
        if p.degree() % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "form must have even degree, got {}",
                p.degree()
            )));
        }
        let d = p.degree() / 2 + r;
        let size = basis_size(p.n(), d);
        if size > cap {
            return Err(Error::SizeCap { size, cap });
        }
        let target = if r == 0 {
            p.clone()
        } else {
            p.mul(&sphere_multiplier(p.n(), r))?
        };
        let sphere = sphere_multiplier(p.n(), d);
        Ok(PolyMaster {
            gram: GramMap::new(p.n(), d),
            target: target.coefficients().to_vec(),
            sphere: sphere.coefficients().to_vec(),
            extra: Vec::new(),
            last: None,
        })
    }

    pub fn gram(&self) -> &GramMap {
        &self.gram
    }

    /// Adds a known nonnegative form as an extra column with weight ≥ 0.
    pub fn add_extra_column(&mut self, q: &Poly) -> Result<()> {
        let b = self.gram.full_basis();
        if q.n() != b.n() || q.degree() != b.degree() {
            return Err(Error::InvalidInput(format!(
                "extra column must be a form of degree {} in {} variables",
                b.degree(),
                b.n()
            )));
        }
        self.extra.push(q.clone());
        Ok(())
    }

    pub fn extra_columns(&self) -> &[Poly] {
        &self.extra
    }

    pub fn last_solution(&self) -> Option<&PolySolution> {
        self.last.as_ref()
    }

    pub fn solve_full(&self, atoms: &AtomSet, params: &SolverParams) -> Result<PolySolution> {
        let nn = self.gram.gram_size();
        if let Some(a) = atoms.iter().find(|a| a.n() != nn) {
            return Err(Error::Dimension {
                expected: nn,
                got: a.n(),
            });
        }
        let mut model = ConicModel::new(Sense::Maximize);
        let lambda = model.add_var(None, 1.0);
        let mut rows: Vec<LinExpr> = vec![LinExpr::new(); self.gram.num_coefficients()];
        for (i, s) in self.sphere.iter().enumerate() {
            rows[i].push(lambda, *s);
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
            for (col, var) in self.gram.atom_columns(atom).iter().zip(&vars) {
                for &(i, x) in col {
                    rows[i].push(*var, x);
                }
            }
            weight_vars.push(vars);
        }
        let extra_vars: Vec<usize> = self
            .extra
            .iter()
            .map(|q| {
                let v = model.add_var(Some(0.0), 0.0);
                for (i, c) in q.coefficients().iter().enumerate() {
                    rows[i].push(v, *c);
                }
                v
            })
            .collect();
        let eq_ids: Vec<usize> = rows
            .into_iter()
            .zip(&self.target)
            .map(|(row, b)| model.add_eq(row, *b))
            .collect();

        let sol = model.solve(params)?;
        let get = |i: usize| sol.primal.get(i).copied().unwrap_or(0.0);
        Ok(PolySolution {
            status: sol.status,
            lambda: sol.objective_value,
            weights: weight_vars
                .iter()
                .map(|vs| vs.iter().map(|&i| get(i)).collect())
                .collect(),
            extra_weights: extra_vars.iter().map(|&i| get(i)).collect(),
            mu: eq_ids
                .iter()
                .map(|&e| sol.dual_eq.get(e).copied().unwrap_or(0.0))
                .collect(),
        })
    }

    /// Default starting atoms: all of U_{N,2} (LP) or V_{N,2} (SOCP).
    pub fn initial_atoms(&self, mode: Mode) -> AtomSet {
        let nn = self.gram.gram_size();
        match mode {
            Mode::Socp if nn >= 2 => gen_v2(nn),
            _ => gen_u2(nn),
        }
    }
}

impl Master for PolyMaster {
    fn direction(&self) -> Direction {
        Direction::Maximize
    }

    fn atom_dim(&self) -> usize {
        self.gram.gram_size()
    }

    fn solve(&mut self, atoms: &AtomSet, params: &SolverParams) -> Result<MasterSolution> {
        let s = self.solve_full(atoms, params)?;
        let dual = if s.status == SolveStatus::Optimal {
            self.gram.adjoint(&s.mu)?
        } else {
            SymMatrix::zeros(self.gram.gram_size())
        };
        let out = MasterSolution {
            status: s.status,
            bound: s.lambda,
            dual,
            weights: s.weights.clone(),
        };
        if s.status == SolveStatus::Optimal {
            self.last = Some(s);
        }
        Ok(out)
    }

    fn certify(&self, atoms: &AtomSet, sol: &MasterSolution) -> Result<Certificate> {
        let m = reconstruct(atoms, &sol.weights, self.gram.gram_size());
        let mut coef = self.gram.apply(&m)?;
        if let Some(last) = &self.last {
            for (q, w) in self.extra.iter().zip(&last.extra_weights) {
                for (c, x) in coef.iter_mut().zip(q.coefficients()) {
                    *c += w * x;
                }
            }
        }
        let residual = coef
            .iter()
            .zip(self.target.iter().zip(&self.sphere))
            .map(|(c, (b, s))| (c - (b - sol.bound * s)).powi(2))
            .sum::<f64>()
            .sqrt();
        let scale = self.target.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok(Certificate {
            residual,
            residual_tol: 1e-6 * scale.max(1.0),
            min_eigenvalue: eigh(&m)?.min_eigenvalue(),
            psd: is_psd(&m, engine::CERT_PSD_TOL)?,
        })
    }
}

/// Outcome of a one-shot bound computation.
#[derive(Clone, Debug)]
pub struct PolyBound {
    pub lambda: f64,
    pub atoms: AtomSet,
    pub solution: PolySolution,
}

/// max λ such that (p − λ(Σx_i²)^d)(Σx_i²)^r is dsos (LP) or sdsos (SOCP).
pub fn poly_bound(
    p: &Poly,
    r: u32,
    mode: Mode,
    cap: usize,
    params: &SolverParams,
) -> Result<PolyBound> {
    let master = PolyMaster::new(p, r, cap)?;
    let atoms = master.initial_atoms(mode);
    let solution = master.solve_full(&atoms, params)?;
    if solution.status != SolveStatus::Optimal {
        return Err(Error::Solver(solution.status));
    }
    Ok(PolyBound {
        lambda: solution.lambda,
        atoms,
        solution,
    })
}

pub fn dsos_bound(p: &Poly) -> Result<PolyBound> {
    poly_bound(p, 0, Mode::Lp, DEFAULT_GRAM_CAP, &SolverParams::default())
}

pub fn sdsos_bound(p: &Poly) -> Result<PolyBound> {
    poly_bound(p, 0, Mode::Socp, DEFAULT_GRAM_CAP, &SolverParams::default())
}

pub fn r_dsos_bound(p: &Poly, r: u32) -> Result<f64> {
    Ok(poly_bound(p, r, Mode::Lp, DEFAULT_GRAM_CAP, &SolverParams::default())?.lambda)
}

pub fn r_sdsos_bound(p: &Poly, r: u32) -> Result<f64> {
    Ok(poly_bound(p, r, Mode::Socp, DEFAULT_GRAM_CAP, &SolverParams::default())?.lambda)
}

/// Column generation for the sphere minimum of `p`, starting from the dsos
/// (LP) or sdsos (SOCP) master.
pub fn cg_polymin(p: &Poly, config: &CgConfig) -> Result<CgRun> {
    let mut master = PolyMaster::new(p, 0, DEFAULT_GRAM_CAP)?;
    let init = master.initial_atoms(config.mode);
    engine::run(&mut master, init, config).map_err(|e| match e {
        // the initial master is always feasible: p − λ·s is dd for λ small enough
        Error::InitialInfeasible(msg) => {
            Error::Internal(format!("polynomial master reported infeasible: {msg}"))
        }
        e => e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quartic(terms: &[(Vec<u32>, f64)], n: usize) -> Poly {
        Poly::from_terms(n, 4, terms).unwrap()
    }

    #[test]
    fn sphere_squared_is_tight() {
        let s = sphere_multiplier(2, 2);
        assert!((dsos_bound(&s).unwrap().lambda - 1.0).abs() < 1e-7);
        assert!((sdsos_bound(&s).unwrap().lambda - 1.0).abs() < 1e-7);
    }

    #[test]
    fn sum_of_fourth_powers() {
        let p = quartic(&[(vec![4, 0], 1.0), (vec![0, 4], 1.0)], 2);
        let l = dsos_bound(&p).unwrap().lambda;
        assert!((0.45..=0.5 + 1e-7).contains(&l), "{l}");
    }

    #[test]
    fn motzkin_below_zero() {
        let m = Poly::motzkin();
        let d = dsos_bound(&m).unwrap().lambda;
        let s = sdsos_bound(&m).unwrap().lambda;
        assert!(d < 0.0 && s < 0.0);
        assert!(s >= d - 1e-8);
    }

    #[test]
    fn r_zero_matches_plain_bounds() {
        let m = Poly::motzkin();
        assert!((r_dsos_bound(&m, 0).unwrap() - dsos_bound(&m).unwrap().lambda).abs() < 1e-9);
        assert!((r_sdsos_bound(&m, 0).unwrap() - sdsos_bound(&m).unwrap().lambda).abs() < 1e-9);
    }

    #[test]
    fn multiplier_improves_motzkin() {
        let m = Poly::motzkin();
        assert!(r_dsos_bound(&m, 1).unwrap() >= r_dsos_bound(&m, 0).unwrap() - 1e-8);
    }

    #[test]
    fn cap_is_enforced() {
        let p = sphere_multiplier(10, 2);
        match poly_bound(&p, 2, Mode::Lp, 100, &SolverParams::default()) {
            Err(Error::SizeCap { size, cap }) => assert_eq!((size, cap), (715, 100)),
            other => panic!("expected size cap error, got {other:?}"),
        }
        let odd = Poly::zero(2, 3);
        assert!(PolyMaster::new(&odd, 0, 400).is_err());
    }

    #[test]
    fn certificate_holds_after_cg() {
        let mut cfg = CgConfig::new(Mode::Lp, engine::Pricing::Eig);
        cfg.max_iters = 5;
        let run = cg_polymin(&Poly::motzkin(), &cfg).unwrap();
        assert!(run.trace.is_monotone());
        let c = run.trace.certificate.unwrap();
        assert!(c.ok(), "{c:?}");
    }
}
