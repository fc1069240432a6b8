//! Upper bounds on the stability number α(G) through the copositive
//! formulation α(G) = min λ s.t. λ(I + A) − J copositive, with the
//! copositive cone replaced by DD/SDD plus a nonnegative matrix.

use std::collections::BTreeSet;

use crate::atoms::{gen_u2, gen_v2, AtomSet};
use crate::cg::engine::{
    self, Certificate, CgConfig, CgRun, Direction, Master, MasterSolution, Mode,
};
use crate::cg::sdp::{SdpMaster, SdpProblem};
use crate::conic::{ConicModel, LinExpr, Sense, SolveStatus, SolverParams};
use crate::error::{Error, Result};
use crate::poly::basis::Poly;
use crate::poly::master::{poly_bound, DEFAULT_GRAM_CAP};
use crate::symmat::{SymMatrix, Tokens};

/// Simple undirected graph on nodes 0..n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Graph from 0-based edges. Self-loops, out-of-range nodes and repeated
    /// edges are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for &(i, j) in edges {
            if !g.add_edge(i, j)? {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(g)
    }

    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Graph::empty(n);
        if n >= 3 {
            for i in 0..n {
                let (a, b) = (i, (i + 1) % n);
                g.edges.insert((a.min(b), a.max(b)));
            }
        } else if n == 2 {
            g.edges.insert((0, 1));
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for i in 1..n {
            g.edges.insert((i - 1, i));
        }
        g
    }

    /// Outer 5-cycle 0..4, spokes i–(i+5), inner pentagram 5–7–9–6–8–5.
    pub fn petersen() -> Self {
        let mut e = Vec::new();
        for i in 0..5 {
            e.push((i, (i + 1) % 5));
            e.push((i, i + 5));
            e.push((5 + i, 5 + (i + 2) % 5));
        }
        Graph::new(10, &e).expect("valid Petersen edges")
    }

    pub fn complement(&self) -> Self {
        let mut g = Graph::empty(self.n);
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !self.has_edge(i, j) {
                    g.edges.insert((i, j));
                }
            }
        }
        g
    }

    /// Adds edge {i, j}; returns false if it was already present.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        if i >= self.n || j >= self.n {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}) outside 1..={}",
                i + 1,
                j + 1,
                self.n
            )));
        }
        if i == j {
            return Err(Error::InvalidInput(format!("self-loop at node {}", i + 1)));
        }
        Ok(self.edges.insert((i.min(j), i.max(j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as (i, j) with i < j, sorted.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    pub fn adjacency(&self) -> SymMatrix {
        let mut a = SymMatrix::zeros(self.n);
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
        }
        a
    }

    /// Parses "p edge n m" followed by "e i j" lines (1-based). Comment lines
    /// starting with `c` are skipped. Repeated edges in either orientation
    /// are merged; self-loops are errors.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut g = Graph::empty(0);
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let ln = ln + 1;
            if line.is_empty() || line.starts_with('c') || line.starts_with('#') {
                continue;
            }
            let mut t = Tokens::new(line);
            match t.next_str()? {
                "p" => {
                    if header.is_some() {
                        return Err(Error::parse(ln, "second problem line"));
                    }
                    let kind = t
                        .next_str()
                        .map_err(|_| Error::parse(ln, "missing format"))?;
                    if kind != "edge" && kind != "col" {
                        return Err(Error::parse(ln, format!("unsupported format `{kind}`")));
                    }
                    let n = t
                        .next_usize()
                        .map_err(|_| Error::parse(ln, "bad node count"))?;
                    let m = t
                        .next_usize()
                        .map_err(|_| Error::parse(ln, "bad edge count"))?;
                    if n > 1_000_000 {
                        return Err(Error::parse(ln, "node count too large"));
                    }
                    header = Some((n, m));
                    g = Graph::empty(n);
                }
                "e" => {
                    if header.is_none() {
                        return Err(Error::parse(ln, "edge before problem line"));
                    }
                    let i = t
                        .next_usize()
                        .map_err(|_| Error::parse(ln, "bad edge endpoint"))?;
                    let j = t
                        .next_usize()
                        .map_err(|_| Error::parse(ln, "bad edge endpoint"))?;
                    if i == 0 || j == 0 {
                        return Err(Error::parse(ln, "node indices are 1-based"));
                    }
                    g.add_edge(i - 1, j - 1)
                        .map_err(|e| Error::parse(ln, e.to_string()))?;
                }
                other => return Err(Error::parse(ln, format!("unknown line type `{other}`"))),
            }
        }
        if header.is_none() {
            return Err(Error::parse(1, "missing `p edge n m` line"));
        }
        Ok(g)
    }

    pub fn to_dimacs(&self) -> String {
        let mut s = format!("p edge {} {}\n", self.n, self.num_edges());
        for &(i, j) in &self.edges {
            s.push_str(&format!("e {} {}\n", i + 1, j + 1));
        }
        s
    }

    /// Exact α(G) by branch and bound over bitmasks; intended for small
    /// test graphs (n ≤ 64, fast up to about 30 nodes).
    pub fn stability_number(&self) -> Result<usize> {
        if self.n > 64 {
            return Err(Error::InvalidInput(
                "exact stability number limited to 64 nodes".into(),
            ));
        }
        let mut nbr = vec![0u64; self.n];
        for &(i, j) in &self.edges {
            nbr[i] |= 1 << j;
            nbr[j] |= 1 << i;
        }
        let all = if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        };
        let mut best = 0;
        mis(&nbr, all, 0, &mut best);
        Ok(best)
    }
}

fn mis(nbr: &[u64], cand: u64, size: usize, best: &mut usize) {
    if cand == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + cand.count_ones() as usize <= *best {
        return;
    }
    let v = cand.trailing_zeros() as usize;
    mis(nbr, cand & !(1 << v) & !nbr[v], size + 1, best);
    if nbr[v] & cand != 0 {
        mis(nbr, cand & !(1 << v), size, best);
    }
}

/// Optimal value of max Σx_i s.t. x_i + x_j ≤ 1 on edges, 0 ≤ x ≤ 1.
pub fn lp2_bound(g: &Graph) -> Result<f64> {
    let mut model = ConicModel::new(Sense::Maximize);
    let x: Vec<usize> = (0..g.n()).map(|_| model.add_var(Some(0.0), 1.0)).collect();
    for &xi in &x {
        model.add_ge(LinExpr::from_terms(vec![(xi, -1.0)]), -1.0);
    }
    for (i, j) in g.edges() {
        model.add_ge(LinExpr::from_terms(vec![(x[i], -1.0), (x[j], -1.0)]), -1.0);
    }
    let sol = model.solve(&SolverParams::default())?;
    match sol.status {
        SolveStatus::Optimal => Ok(sol.objective_value),
        s => Err(Error::Solver(s)),
    }
}

/// Explicit feasible point of the DSOS₁ program.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialPoint {
    /// n − min degree + 1
    pub lambda: f64,
    /// Diagonal λ − 1, 0 on edges, −1 on non-edges; diagonally dominant.
    pub d: SymMatrix,
    /// λ − 1 on edges, 0 elsewhere; entrywise nonnegative.
    pub nonneg: SymMatrix,
}

/// λ₀ = n − min_i d_i + 1 together with D + N = λ₀(I + A) − J.
pub fn init_lambda(g: &Graph) -> InitialPoint {
    let n = g.n();
    let min_deg = g.degrees().into_iter().min().unwrap_or(0);
    let lambda = (n - min_deg + 1) as f64;
    let d = SymMatrix::from_fn(n, |i, j| {
        if i == j {
            lambda - 1.0
        } else if g.has_edge(i, j) {
            0.0
        } else {
            -1.0
        }
    });
    let nonneg = SymMatrix::from_fn(n, |i, j| {
        if i != j && g.has_edge(i, j) {
            lambda - 1.0
        } else {
            0.0
        }
    });
    InitialPoint { lambda, d, nonneg }
}

/// λ(I + A) − J
pub fn stable_set_matrix(g: &Graph, lambda: f64) -> SymMatrix {
    let a = g.adjacency();
    SymMatrix::from_fn(g.n(), |i, j| {
        lambda * (if i == j { 1.0 } else { a.get(i, j) }) - 1.0
    })
}

/// zᵀ(λ(I + A) − J)z with z = (x₁², …, x_n²), a quartic form.
pub fn stable_set_form(g: &Graph, lambda: f64) -> Result<Poly> {
    let m = stable_set_matrix(g, lambda);
    let n = g.n();
    let mut terms = Vec::with_capacity(n * (n + 1) / 2);
    for (i, j, v) in m.upper() {
        let mut e = vec![0u32; n];
        e[i] += 2;
        e[j] += 2;
        terms.push((e, if i == j { v } else { 2.0 * v }));
    }
    Poly::from_terms(n, 4, &terms)
}

/// Restricted master for min λ s.t. λ(I + A) − J − S = Σ atoms, S ≥ 0.
///
/// Written as an SDP in max form with y = (λ, S_kl for k ≤ l): C = −J,
/// A_λ = −(I + A), A_{S_kl} = E_kl, b = (−1, 0, …). Its dual is
/// max J·X s.t. (I + A)·X = 1, X ≥ 0, atom·X ≥ 0.
#[derive(Clone, Debug)]
pub struct StableSetMaster {
    inner: SdpMaster,
}

impl StableSetMaster {
    pub fn new(g: &Graph) -> Result<Self> {
        let n = g.n();
        if n == 0 {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        let c = SymMatrix::ones(n).scaled(-1.0);
        let adj = g.adjacency();
        let mut a = vec![SymMatrix::from_fn(n, |i, j| {
            if i == j {
                -1.0
            } else {
                -adj.get(i, j)
            }
        })];
        let mut b = vec![-1.0];
        let mut nonneg = vec![false];
        for k in 0..n {
            for l in k..n {
                let mut e = SymMatrix::zeros(n);
                e.set(k, l, 1.0);
                a.push(e);
                b.push(0.0);
                nonneg.push(true);
            }
        }
        let prob = SdpProblem::with_sign_constraints(c, a, b, nonneg)?;
        Ok(StableSetMaster {
            inner: SdpMaster::new(prob),
        })
    }

    pub fn problem(&self) -> &SdpProblem {
        &self.inner.problem
    }

    /// λ and S from the last solve.
    pub fn last_lambda(&self) -> f64 {
        self.inner.last_y.first().copied().unwrap_or(f64::NAN)
    }

    pub fn initial_atoms(&self, mode: Mode) -> AtomSet {
        let n = self.inner.problem.n();
        match mode {
            Mode::Socp if n >= 2 => gen_v2(n),
            _ => gen_u2(n),
        }
    }
}

impl Master for StableSetMaster {
    fn direction(&self) -> Direction {
        Direction::Minimize
    }

    fn atom_dim(&self) -> usize {
        self.inner.problem.n()
    }

    fn solve(&mut self, atoms: &AtomSet, params: &SolverParams) -> Result<MasterSolution> {
        let mut s = self.inner.solve(atoms, params)?;
        s.bound = -s.bound;
        Ok(s)
    }

    fn certify(&self, atoms: &AtomSet, sol: &MasterSolution) -> Result<Certificate> {
        let mut flipped = sol.clone();
        flipped.bound = -sol.bound;
        self.inner.certify(atoms, &flipped)
    }
}

/// Bound from a single master solve.
#[derive(Clone, Debug)]
pub struct StableBound {
    pub lambda: f64,
    pub status: SolveStatus,
    pub certificate: Certificate,
}

fn single_bound(g: &Graph, mode: Mode) -> Result<StableBound> {
    let mut m = StableSetMaster::new(g)?;
    let atoms = m.initial_atoms(mode);
    let sol = m.solve(&atoms, &SolverParams::precise())?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let certificate = m.certify(&atoms, &sol)?;
    Ok(StableBound {
        lambda: sol.bound,
        status: sol.status,
        certificate,
    })
}

/// min λ s.t. λ(I + A) − J ≥ X entrywise, X ∈ DD_n.
pub fn dsos1_bound(g: &Graph) -> Result<StableBound> {
    single_bound(g, Mode::Lp)
}

/// As [`dsos1_bound`] with X ∈ SDD_n.
pub fn sdsos1_bound(g: &Graph) -> Result<StableBound> {
    single_bound(g, Mode::Socp)
}

/// Column generation from the DSOS₁ (LP) or SDSOS₁ (SOCP) master; the
/// trace is nonincreasing.
pub fn cg_stableset(g: &Graph, config: &CgConfig) -> Result<CgRun> {
    let mut m = StableSetMaster::new(g)?;
    let init = m.initial_atoms(config.mode);
    engine::run(&mut m, init, config).map_err(|e| match e {
        // λ₀ from init_lambda is always feasible for the initial master
        Error::InitialInfeasible(msg) => {
            Error::Internal(format!("stable-set master reported infeasible: {msg}"))
        }
        e => e,
    })
}

/// Result of bisecting the r-th level of the hierarchy.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyBound {
    /// Smallest λ found feasible.
    pub upper: f64,
    /// Largest λ found infeasible.
    pub lower: f64,
    pub solves: usize,
}

/// Smallest λ (to within `tol`) such that stable_set_form(G, λ)·(Σx_i²)^r
/// is dsos (LP) or sdsos (SOCP). A level counts as feasible when the
/// polynomial bound max γ s.t. (p_λ − γ(Σx_i²)²)(Σx_i²)^r ∈ cone is at
/// least −`margin`.
pub fn hierarchy_bound(
    g: &Graph,
    r: u32,
    mode: Mode,
    tol: f64,
    margin: f64,
) -> Result<HierarchyBound> {
    if g.n() == 0 {
        return Err(Error::InvalidInput("graph has no nodes".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(
            "bisection tolerance must be positive".into(),
        ));
    }
    let params = SolverParams::default();
    let mut solves = 0;
    let mut feasible = |lambda: f64| -> Result<bool> {
        solves += 1;
        let p = stable_set_form(g, lambda)?;
        Ok(poly_bound(&p, r, mode, DEFAULT_GRAM_CAP, &params)?.lambda >= -margin)
    };
    // λ = 0 gives −(Σx_i²)², never nonnegative; λ₀ is dsos already at r = 0
    let mut lo = 0.0;
    let mut hi = init_lambda(g).lambda;
    if !feasible(hi)? {
        return Err(Error::Internal(format!(
            "λ = {hi} should be feasible at every level"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(HierarchyBound {
        upper: hi,
        lower: lo,
        solves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cg::engine::Pricing;
    use crate::symmat::is_dd;

    #[test]
    fn petersen_structure() {
        let p = Graph::petersen();
        assert_eq!(p.num_edges(), 15);
        assert!(p.degrees().iter().all(|&d| d == 3));
        assert_eq!(p.stability_number().unwrap(), 4);
        let c = p.complement();
        assert!(c.degrees().iter().all(|&d| d == 6));
        assert_eq!(c.stability_number().unwrap(), 2);
    }

    #[test]
    fn small_alphas() {
        assert_eq!(Graph::cycle(5).stability_number().unwrap(), 2);
        assert_eq!(Graph::path(5).stability_number().unwrap(), 3);
        assert_eq!(Graph::complete(6).stability_number().unwrap(), 1);
        assert_eq!(Graph::empty(7).stability_number().unwrap(), 7);
    }

    #[test]
    fn lp2_examples() {
        assert!((lp2_bound(&Graph::empty(4)).unwrap() - 4.0).abs() < 1e-6);
        assert!((lp2_bound(&Graph::complete(3)).unwrap() - 1.5).abs() < 1e-6);
        assert!((lp2_bound(&Graph::petersen().complement()).unwrap() - 5.0).abs() < 1e-6);
    }

    #[test]
    fn init_lambda_examples() {
        assert_eq!(init_lambda(&Graph::petersen().complement()).lambda, 5.0);
        assert_eq!(init_lambda(&Graph::complete(6)).lambda, 2.0);
        assert_eq!(init_lambda(&Graph::empty(6)).lambda, 7.0);
        let g = Graph::cycle(7);
        let ip = init_lambda(&g);
        assert!(is_dd(&ip.d));
        assert_eq!(&ip.d + &ip.nonneg, stable_set_matrix(&g, ip.lambda));
    }

    #[test]
    fn single_bounds() {
        let k = Graph::complete(5);
        assert!((dsos1_bound(&k).unwrap().lambda - 1.0).abs() < 1e-6);
        assert!((sdsos1_bound(&k).unwrap().lambda - 1.0).abs() < 1e-6);
        let e = Graph::empty(4);
        assert!((dsos1_bound(&e).unwrap().lambda - 4.0).abs() < 1e-6);
        let c = Graph::petersen().complement();
        let d = dsos1_bound(&c).unwrap();
        assert!((d.lambda - 4.0).abs() < 1e-6);
        assert!(d.certificate.ok(), "{:?}", d.certificate);
    }

    #[test]
    fn form_examples() {
        let k2 = Graph::complete(2);
        assert!(stable_set_form(&k2, 1.0)
            .unwrap()
            .coefficients()
            .iter()
            .all(|&c| c == 0.0));
        let e2 = Graph::empty(2);
        let p = stable_set_form(&e2, 2.0).unwrap();
        assert_eq!(p.coefficient(&[4, 0]), 1.0);
        assert_eq!(p.coefficient(&[2, 2]), -2.0);
        let x = [0.3, -0.8];
        assert!((p.eval(&x) - (x[0] * x[0] - x[1] * x[1]).powi(2)).abs() < 1e-12);
        assert!(crate::poly::r_dsos_bound(&p, 0).unwrap() >= -1e-7);
    }

    #[test]
    fn hierarchy_at_level_zero_matches_master() {
        let g = Graph::cycle(5);
        let h = hierarchy_bound(&g, 0, Mode::Lp, 1e-4, 1e-9).unwrap();
        let d = dsos1_bound(&g).unwrap().lambda;
        assert!((h.upper - d).abs() < 2e-4, "{h:?} vs {d}");
    }

    #[test]
    fn cg_on_empty_graph_converges_at_once() {
        let g = Graph::empty(4);
        let r = cg_stableset(&g, &CgConfig::new(Mode::Lp, Pricing::Eig)).unwrap();
        assert!((r.trace.bounds()[0] - 4.0).abs() < 1e-6);
        assert!(r.trace.converged());
        assert_eq!(r.trace.iterations(), 0);
    }

    #[test]
    fn dimacs_round_trip() {
        let g = Graph::petersen();
        assert_eq!(Graph::parse_dimacs(&g.to_dimacs()).unwrap(), g);
        let h = Graph::parse_dimacs("c comment\np edge 3 2\ne 1 2\ne 2 1\n").unwrap();
        assert_eq!(h.num_edges(), 1);
        assert!(Graph::parse_dimacs("p edge 3 1\ne 1 1\n").is_err());
        assert!(Graph::parse_dimacs("p edge 3 1\ne 1 4\n").is_err());
        assert!(Graph::parse_dimacs("e 1 2\n").is_err());
        assert!(Graph::parse_dimacs("").is_err());
    }
}
