//! Linear / second-order-cone models and their solution with duals.
//!
//! Everything upstream builds a [`ConicModel`] and reads back a
//! [`ConicSolution`]; the backend (Clarabel, a primal-dual interior-point
//! method) is only visible inside [`ConicModel::solve`].
//!
//! Dual sign convention, for either objective sense:
//!
//! * `dual_eq[i]` is the sensitivity ∂(objective)/∂(rhs_i) and is free.
//! * `dual_ineq[j]` and `dual_lower[k]` are nonnegative. For a minimization
//!   they equal the sensitivity of the objective to the right-hand side; for
//!   a maximization they equal minus that sensitivity.
//!
//! Consequently, at an optimum,
//! `objective = Σ rhs_i·dual_eq_i + s·(Σ rhs_j·dual_ineq_j + Σ lb_k·dual_lower_k)`
//! with `s = +1` for minimization and `s = −1` for maximization. With this
//! choice, the equality multipliers of a maximization master can be used
//! directly as the pricing vector.

use std::fmt;
use std::time::Duration;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use crate::error::{Error, Result};

/// Name reported in output headers; `CONECG_BACKEND` must match it if set.
pub const BACKEND_NAME: &str = "clarabel";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// Sparse linear expression Σ coef·x_var.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinExpr {
    terms: Vec<(usize, f64)>,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr { terms: Vec::new() }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (usize, f64)>) -> Self {
        LinExpr {
            terms: terms.into_iter().collect(),
        }
    }

    pub fn push(&mut self, var: usize, coef: f64) {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
    }

    pub fn terms(&self) -> &[(usize, f64)] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }
}

#[derive(Clone, Debug)]
pub struct ConicModel {
    sense: Sense,
    lower: Vec<Option<f64>>,
    objective: Vec<f64>,
    eqs: Vec<(LinExpr, f64)>,
    ineqs: Vec<(LinExpr, f64)>,
    psd2: Vec<[usize; 3]>,
}

#[derive(Clone, Debug)]
pub struct SolverParams {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub time_limit: Option<Duration>,
    pub max_iter: u32,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            time_limit: None,
            max_iter: 200,
        }
    }
}

impl SolverParams {
    /// Tighter tolerances, used by column generation so that bound noise
    /// between consecutive masters stays far below the monotonicity check.
    pub fn precise() -> Self {
        SolverParams {
            feas_tol: 1e-10,
            gap_tol: 1e-10,
            time_limit: None,
            max_iter: 400,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalFailure => "numerical_failure",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    pub dual_eq: Vec<f64>,
    pub dual_ineq: Vec<f64>,
    /// One entry per variable; zero for variables without a lower bound.
    pub dual_lower: Vec<f64>,
    pub objective_value: f64,
    pub iterations: u32,
    /// Set when the backend stopped on its time limit; the vectors above are
    /// then partial iterates and must not be used.
    pub time_limit_hit: bool,
}

impl ConicSolution {
    fn without_iterates(status: SolveStatus, model: &ConicModel) -> Self {
        ConicSolution {
            status,
            primal: vec![0.0; model.num_vars()],
            dual_eq: vec![0.0; model.eqs.len()],
            dual_ineq: vec![0.0; model.ineqs.len()],
            dual_lower: vec![0.0; model.num_vars()],
            objective_value: f64::NAN,
            iterations: 0,
            time_limit_hit: false,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

impl ConicModel {
    pub fn new(sense: Sense) -> Self {
        ConicModel {
            sense,
            lower: Vec::new(),
            objective: Vec::new(),
            eqs: Vec::new(),
            ineqs: Vec::new(),
            psd2: Vec::new(),
        }
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn add_var(&mut self, lower: Option<f64>, obj: f64) -> usize {
        self.lower.push(lower);
        self.objective.push(obj);
        self.lower.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    pub fn add_eq(&mut self, expr: LinExpr, rhs: f64) -> usize {
        self.eqs.push((expr, rhs));
        self.eqs.len() - 1
    }

    /// expr ≥ rhs
    pub fn add_ge(&mut self, expr: LinExpr, rhs: f64) -> usize {
        self.ineqs.push((expr, rhs));
        self.ineqs.len() - 1
    }

    /// Requires [[a1, a2], [a2, a3]] ⪰ 0.
    pub fn add_psd2(&mut self, vars: [usize; 3]) {
        self.psd2.push(vars);
    }

    pub fn num_eqs(&self) -> usize {
        self.eqs.len()
    }

    pub fn num_ineqs(&self) -> usize {
        self.ineqs.len()
    }

    pub fn psd2(&self) -> &[[usize; 3]] {
        &self.psd2
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.num_vars();
        let check = |e: &LinExpr, what: &str, k: usize| -> Result<()> {
            for &(v, c) in e.terms() {
                if v >= nv {
                    return Err(Error::MalformedModel(format!(
                        "{what} {k} references undeclared variable {v}"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::MalformedModel(format!(
                        "{what} {k} has a non-finite coefficient"
                    )));
                }
            }
            Ok(())
        };
        for (k, (e, r)) in self.eqs.iter().enumerate() {
            check(e, "equality", k)?;
            if !r.is_finite() {
                return Err(Error::MalformedModel(format!(
                    "equality {k} has a non-finite rhs"
                )));
            }
        }
        for (k, (e, r)) in self.ineqs.iter().enumerate() {
            check(e, "inequality", k)?;
            if !r.is_finite() {
                return Err(Error::MalformedModel(format!(
                    "inequality {k} has a non-finite rhs"
                )));
            }
        }
        for (k, t) in self.psd2.iter().enumerate() {
            if t.iter().any(|&v| v >= nv) {
                return Err(Error::MalformedModel(format!(
                    "psd2 block {k} references an undeclared variable"
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::MalformedModel(format!(
                    "psd2 block {k} repeats a variable"
                )));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.lower.iter().flatten().any(|l| !l.is_finite())
        {
            return Err(Error::MalformedModel(
                "non-finite objective or bound".into(),
            ));
        }
        Ok(())
    }

    /// Solves the model from scratch. Malformed models are an `Err`; every
    /// solver outcome, including infeasibility, is an `Ok` with a status.
    pub fn solve(&self, params: &SolverParams) -> Result<ConicSolution> {
        self.validate()?;
        let nv = self.num_vars();
        let scale_tol = |r: f64| params.feas_tol * r.abs().max(1.0);

        // rows with no terms are decided here; the backend never sees them
        for (e, r) in &self.eqs {
            if e.is_empty() && r.abs() > scale_tol(*r) {
                return Ok(ConicSolution::without_iterates(
                    SolveStatus::Infeasible,
                    self,
                ));
            }
        }
        for (e, r) in &self.ineqs {
            if e.is_empty() && *r > scale_tol(*r) {
                return Ok(ConicSolution::without_iterates(
                    SolveStatus::Infeasible,
                    self,
                ));
            }
        }
        let eq_rows: Vec<usize> = (0..self.eqs.len())
            .filter(|&k| !self.eqs[k].0.is_empty())
            .collect();
        let ineq_rows: Vec<usize> = (0..self.ineqs.len())
            .filter(|&k| !self.ineqs[k].0.is_empty())
            .collect();
        let lb_vars: Vec<usize> = (0..nv).filter(|&v| self.lower[v].is_some()).collect();

        let mut ri = Vec::new();
        let mut ci = Vec::new();
        let mut vals = Vec::new();
        let mut b = Vec::new();
        let mut row = 0usize;
        for &k in &eq_rows {
            let (e, r) = &self.eqs[k];
            for &(v, c) in e.terms() {
                ri.push(row);
                ci.push(v);
                vals.push(c);
            }
            b.push(*r);
            row += 1;
        }
        // expr ≥ rhs  ⇔  −expr + s = −rhs, s ≥ 0
        for &k in &ineq_rows {
            let (e, r) = &self.ineqs[k];
            for &(v, c) in e.terms() {
                ri.push(row);
                ci.push(v);
                vals.push(-c);
            }
            b.push(-r);
            row += 1;
        }
        for &v in &lb_vars {
            ri.push(row);
            ci.push(v);
            vals.push(-1.0);
            b.push(-self.lower[v].unwrap());
            row += 1;
        }
        // [[a1,a2],[a2,a3]] ⪰ 0  ⇔  (a1 + a3, 2 a2, a1 − a3) ∈ SOC(3)
        for t in &self.psd2 {
            let [a1, a2, a3] = *t;
            ri.extend([row, row, row + 1, row + 2, row + 2]);
            ci.extend([a1, a3, a2, a1, a3]);
            vals.extend([-1.0, -1.0, -2.0, -1.0, 1.0]);
            b.extend([0.0, 0.0, 0.0]);
            row += 3;
        }

        let mut cones = Vec::new();
        if !eq_rows.is_empty() {
            cones.push(SupportedConeT::ZeroConeT(eq_rows.len()));
        }
        let n_nonneg = ineq_rows.len() + lb_vars.len();
        if n_nonneg > 0 {
            cones.push(SupportedConeT::NonnegativeConeT(n_nonneg));
        }
        cones.extend(
            self.psd2
                .iter()
                .map(|_| SupportedConeT::SecondOrderConeT(3)),
        );

        let sign = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let q: Vec<f64> = self.objective.iter().map(|c| sign * c).collect();
        let p = CscMatrix::zeros((nv, nv));
        let a = CscMatrix::new_from_triplets(row, nv, ri, ci, vals);

        let mut settings = DefaultSettings::<f64>::default();
        settings.verbose = false;
        settings.tol_feas = params.feas_tol;
        settings.tol_gap_abs = params.gap_tol;
        settings.tol_gap_rel = params.gap_tol;
        settings.max_iter = params.max_iter;
        if let Some(t) = params.time_limit {
            settings.time_limit = t.as_secs_f64();
        }

        let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, settings)
            .map_err(|e| Error::MalformedModel(format!("backend rejected model: {e:?}")))?;
        solver.solve();
        let raw = &solver.solution;

        let mut status = match raw.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => SolveStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                SolveStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                SolveStatus::Unbounded
            }
            _ => SolveStatus::NumericalFailure,
        };
        let time_limit_hit = raw.status == SolverStatus::MaxTime;

        let x = raw.x.clone();
        let mut dual_eq = vec![0.0; self.eqs.len()];
        let mut dual_ineq = vec![0.0; self.ineqs.len()];
        let mut dual_lower = vec![0.0; nv];
        let mut zi = 0;
        for &k in &eq_rows {
            dual_eq[k] = -sign * raw.z[zi];
            zi += 1;
        }
        for &k in &ineq_rows {
            dual_ineq[k] = raw.z[zi];
            zi += 1;
        }
        for &v in &lb_vars {
            dual_lower[v] = raw.z[zi];
            zi += 1;
        }
        let objective_value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

        // reduced-accuracy solutions are kept only if they still meet the
        // requested feasibility tolerance
        if status == SolveStatus::Optimal && raw.status == SolverStatus::AlmostSolved {
            let resid = self.primal_residual(&x);
            if resid > 100.0 * params.feas_tol {
                status = SolveStatus::NumericalFailure;
            }
        }

        Ok(ConicSolution {
            status,
            primal: x,
            dual_eq,
            dual_ineq,
            dual_lower,
            objective_value,
            iterations: raw.iterations,
            time_limit_hit,
        })
    }

    /// Largest constraint violation, each row scaled by max(1, |rhs|).
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (e, r) in &self.eqs {
            worst = worst.max((e.eval(x) - r).abs() / r.abs().max(1.0));
        }
        for (e, r) in &self.ineqs {
            worst = worst.max((r - e.eval(x)).max(0.0) / r.abs().max(1.0));
        }
        for (v, l) in self.lower.iter().enumerate() {
            if let Some(l) = l {
                worst = worst.max((l - x[v]).max(0.0));
            }
        }
        for &[a1, a2, a3] in &self.psd2 {
            let (p, q, r) = (x[a1], x[a2], x[a3]);
            let viol = ((p - r).powi(2) + 4.0 * q * q).sqrt() - (p + r);
            worst = worst.max(viol.max(0.0));
        }
        worst
    }

    /// Dual objective assembled from the multipliers, following the sign
    /// convention in the module docs.
    pub fn dual_objective(&self, sol: &ConicSolution) -> f64 {
        let s = match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let eq: f64 = self
            .eqs
            .iter()
            .zip(&sol.dual_eq)
            .map(|((_, r), y)| r * y)
            .sum();
        let ineq: f64 = self
            .ineqs
            .iter()
            .zip(&sol.dual_ineq)
            .map(|((_, r), w)| r * w)
            .sum();
        let lb: f64 = self
            .lower
            .iter()
            .zip(&sol.dual_lower)
            .map(|(l, w)| l.map_or(0.0, |l| l * w))
            .sum();
        eq + s * (ineq + lb)
    }
}

/// Debug listing, one item per line:
///
/// ```text
/// sense max
/// var x0 >= 0 obj 1
/// eq  e0: 1 x0 + -2 x3 = 4
/// ge  g0: 1 x1 >= 0
/// psd2 x4 x5 x6
/// ```
impl fmt::Display for ConicModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sense = match self.sense {
            Sense::Minimize => "min",
            Sense::Maximize => "max",
        };
        writeln!(f, "sense {sense}")?;
        for (v, (l, c)) in self.lower.iter().zip(&self.objective).enumerate() {
            match l {
                Some(l) => writeln!(f, "var x{v} >= {l} obj {c}")?,
                None => writeln!(f, "var x{v} free obj {c}")?,
            }
        }
        let fmt_expr = |e: &LinExpr| -> String {
            if e.is_empty() {
                return "0".into();
            }
            e.terms()
                .iter()
                .map(|(v, c)| format!("{c} x{v}"))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        for (k, (e, r)) in self.eqs.iter().enumerate() {
            writeln!(f, "eq  e{k}: {} = {r}", fmt_expr(e))?;
        }
        for (k, (e, r)) in self.ineqs.iter().enumerate() {
            writeln!(f, "ge  g{k}: {} >= {r}", fmt_expr(e))?;
        }
        for t in &self.psd2 {
            writeln!(f, "psd2 x{} x{} x{}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_single_bound() {
        let mut m = ConicModel::new(Sense::Maximize);
        let y = m.add_var(None, 1.0);
        m.add_ge(LinExpr::from_terms([(y, -1.0)]), -3.0);
        let s = m.solve(&SolverParams::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 3.0).abs() < 1e-7);
        assert!((m.dual_objective(&s) - 3.0).abs() < 1e-7);
        assert!(s.dual_ineq[0] >= -1e-8);
    }

    #[test]
    fn conflicting_constraints_are_infeasible() {
        let mut m = ConicModel::new(Sense::Minimize);
        let x = m.add_var(None, 0.0);
        m.add_eq(LinExpr::from_terms([(x, 1.0)]), 1.0);
        m.add_ge(LinExpr::from_terms([(x, 1.0)]), 2.0);
        let s = m.solve(&SolverParams::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn psd2_bounds_offdiagonal() {
        let mut m = ConicModel::new(Sense::Maximize);
        let a1 = m.add_var(None, 0.0);
        let a2 = m.add_var(None, 1.0);
        let a3 = m.add_var(None, 0.0);
        m.add_eq(LinExpr::from_terms([(a1, 1.0)]), 1.0);
        m.add_eq(LinExpr::from_terms([(a3, 1.0)]), 1.0);
        m.add_psd2([a1, a2, a3]);
        let s = m.solve(&SolverParams::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-7);
        let (p, q, r) = (s.primal[a1], s.primal[a2], s.primal[a3]);
        assert!(p * r - q * q >= -1e-8 * (p * r).max(1.0));
    }

    #[test]
    fn unbounded_detected() {
        let mut m = ConicModel::new(Sense::Maximize);
        let x = m.add_var(Some(0.0), 1.0);
        let _ = x;
        let s = m.solve(&SolverParams::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn empty_rows_are_handled() {
        let mut m = ConicModel::new(Sense::Minimize);
        let x = m.add_var(Some(1.0), 1.0);
        m.add_eq(LinExpr::new(), 0.0);
        let s = m.solve(&SolverParams::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.primal[x] - 1.0).abs() < 1e-7);

        m.add_eq(LinExpr::new(), 1.0);
        assert_eq!(
            m.solve(&SolverParams::default()).unwrap().status,
            SolveStatus::Infeasible
        );
    }

    #[test]
    fn malformed_models_are_errors() {
        let mut m = ConicModel::new(Sense::Minimize);
        let x = m.add_var(None, 0.0);
        m.add_eq(LinExpr::from_terms([(x + 5, 1.0)]), 0.0);
        assert!(matches!(
            m.solve(&SolverParams::default()),
            Err(Error::MalformedModel(_))
        ));

        let mut m = ConicModel::new(Sense::Minimize);
        let x = m.add_var(None, 0.0);
        let y = m.add_var(None, 0.0);
        m.add_psd2([x, y, x]);
        assert!(m.validate().is_err());
    }

    #[test]
    fn duals_match_sensitivity_in_both_senses() {
        // min x + 2y  s.t. x + y = 3, x ≥ 1 (lb), y ≥ 0.5 (row)
        let mut m = ConicModel::new(Sense::Minimize);
        let x = m.add_var(Some(1.0), 1.0);
        let y = m.add_var(None, 2.0);
        m.add_eq(LinExpr::from_terms([(x, 1.0), (y, 1.0)]), 3.0);
        m.add_ge(LinExpr::from_terms([(y, 1.0)]), 0.5);
        let s = m.solve(&SolverParams::default()).unwrap();
        // x = 2.5, y = 0.5; raising the rhs of the equality costs 1 per unit
        assert!((s.objective_value - 3.5).abs() < 1e-7);
        assert!((s.dual_eq[0] - 1.0).abs() < 1e-6);
        assert!((s.dual_ineq[0] - 1.0).abs() < 1e-6);
        assert!((m.dual_objective(&s) - s.objective_value).abs() < 1e-6);

        // same problem as a maximization of the negated objective
        let mut m = ConicModel::new(Sense::Maximize);
        let x = m.add_var(Some(1.0), -1.0);
        let y = m.add_var(None, -2.0);
        m.add_eq(LinExpr::from_terms([(x, 1.0), (y, 1.0)]), 3.0);
        m.add_ge(LinExpr::from_terms([(y, 1.0)]), 0.5);
        let s = m.solve(&SolverParams::default()).unwrap();
        assert!((s.objective_value + 3.5).abs() < 1e-7);
        assert!((s.dual_eq[0] + 1.0).abs() < 1e-6);
        assert!((s.dual_ineq[0] - 1.0).abs() < 1e-6);
        assert!((m.dual_objective(&s) - s.objective_value).abs() < 1e-6);
    }

    #[test]
    fn display_lists_everything() {
        let mut m = ConicModel::new(Sense::Maximize);
        let a = m.add_var(Some(0.0), 1.0);
        let b = m.add_var(None, 0.0);
        let c = m.add_var(None, 0.0);
        m.add_eq(LinExpr::from_terms([(a, 1.0)]), 2.0);
        m.add_psd2([a, b, c]);
        let text = m.to_string();
        assert!(text.starts_with("sense max\n"));
        assert!(text.contains("var x0 >= 0 obj 1"));
        assert!(text.contains("eq  e0: 1 x0 = 2"));
        assert!(text.contains("psd2 x0 x1 x2"));
    }
}
