//! The master/pricing loop shared by every application.
//!
//! A [`Master`] owns the problem data and knows how to solve its restricted
//! master over a set of atoms. The loop here only sees the resulting bound
//! and the dual matrix used for pricing, so the same code drives SDP,
//! polynomial and stable-set masters.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::atoms::{Atom, AtomSet, PairAtom, RankOneAtom, U3Cursor};
use crate::conic::{SolveStatus, SolverParams};
use crate::error::{Error, Result};
use crate::symmat::{eigh, is_psd, SymMatrix};

/// Which inner approximation the master uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Rank-one atoms, linear program.
    Lp,
    /// 2×2 block atoms, second-order cone program.
    Socp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lp => "lp",
            Mode::Socp => "socp",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp" => Ok(Mode::Lp),
            "socp" => Ok(Mode::Socp),
            _ => Err(Error::InvalidInput(format!(
                "unknown mode `{s}` (expected lp or socp)"
            ))),
        }
    }
}

/// How new atoms are found from the dual matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pricing {
    /// Eigenvectors of the most negative eigenvalues.
    Eig,
    /// Enumeration of ±1 vectors with at most three nonzeros.
    Triples,
}

impl fmt::Display for Pricing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pricing::Eig => "eig",
            Pricing::Triples => "triples",
        })
    }
}

impl FromStr for Pricing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eig" => Ok(Pricing::Eig),
            "triples" => Ok(Pricing::Triples),
            _ => Err(Error::InvalidInput(format!(
                "unknown pricing `{s}` (expected eig or triples)"
            ))),
        }
    }
}

/// Whether the master maximizes a lower bound or minimizes an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Signed progress from `prev` to `next`; positive means better.
    pub fn improvement(self, prev: f64, next: f64) -> f64 {
        match self {
            Direction::Maximize => next - prev,
            Direction::Minimize => prev - next,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgConfig {
    pub mode: Mode,
    pub pricing: Pricing,
    /// Eigenvector atoms (LP) or eigenvector pairs (SOCP) added per iteration.
    pub cuts_per_iter: usize,
    /// Violated triples to collect before stopping a scan.
    pub t1: usize,
    /// Most violated triples added per iteration.
    pub t2: usize,
    /// Pricing iterations after the initial solve.
    pub max_iters: usize,
    pub time_limit: Option<Duration>,
    /// The dual matrix counts as PSD when λ_min ≥ −psd_tol·max(1, max|X|).
    pub psd_tol: f64,
    /// A triple violates the dual when uᵀBu < −violation_tol·max(1, max|B|).
    pub violation_tol: f64,
    /// Stop when the bound improved by less than this over `stall_iters`
    /// consecutive iterations.
    pub improvement_tol: f64,
    pub stall_iters: usize,
    /// Record wall-clock times in the trace; off gives bit-reproducible output.
    pub record_timing: bool,
    pub solver: SolverParams,
}

impl CgConfig {
    pub fn new(mode: Mode, pricing: Pricing) -> Self {
        CgConfig {
            mode,
            pricing,
            cuts_per_iter: 1,
            t1: 300_000,
            t2: 5000,
            max_iters: 50,
            time_limit: None,
            psd_tol: 1e-7,
            violation_tol: 1e-8,
            improvement_tol: 1e-7,
            stall_iters: 10,
            record_timing: true,
            solver: SolverParams::precise(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cuts_per_iter == 0 || self.t1 == 0 || self.t2 == 0 || self.stall_iters == 0 {
            return Err(Error::InvalidInput(
                "cuts, t1, t2 and stall_iters must be positive".into(),
            ));
        }
        for (name, v) in [
            ("psd_tol", self.psd_tol),
            ("violation_tol", self.violation_tol),
            ("improvement_tol", self.improvement_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative"
                )));
            }
        }
        Ok(())
    }
}

/// Result of one restricted master solve.
#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub status: SolveStatus,
    /// Objective in the application's own units (λ for polynomials, the
    /// stability bound for graphs, bᵀy for SDPs).
    pub bound: f64,
    /// Dual matrix for pricing: atoms with negative value against it are the
    /// violated cuts.
    pub dual: SymMatrix,
    /// Weights per atom, in set order (1 for rank-one, 3 for pairs).
    pub weights: Vec<Vec<f64>>,
}

/// Consistency check of the final master solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    /// Distance between the master's target and the reconstructed atom sum.
    pub residual: f64,
    pub residual_tol: f64,
    /// Smallest eigenvalue of the reconstructed atom sum.
    pub min_eigenvalue: f64,
    pub psd: bool,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.residual <= self.residual_tol && self.psd
    }
}

/// A restricted master problem.
pub trait Master {
    fn direction(&self) -> Direction;

    /// Dimension of the matrices the atoms live in.
    fn atom_dim(&self) -> usize;

    fn solve(&mut self, atoms: &AtomSet, params: &SolverParams) -> Result<MasterSolution>;

    /// Rebuilds Σ weighted atoms and compares against what it must equal.
    fn certify(&self, atoms: &AtomSet, sol: &MasterSolution) -> Result<Certificate>;
}

/// Σ_i w_i B_i over the atom set.
pub fn reconstruct(atoms: &AtomSet, weights: &[Vec<f64>], n: usize) -> SymMatrix {
    let mut m = SymMatrix::zeros(n);
    for (a, w) in atoms.iter().zip(weights) {
        a.accumulate(w, &mut m);
    }
    m
}

/// PSD check used by certificates.
pub const CERT_PSD_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Dual matrix is PSD: the bound equals the full SDP bound.
    PsdDual,
    /// A full triples cycle found no violated atom.
    TriplesSaturated,
    /// Pricing produced only atoms already in the master.
    NoNewAtoms,
    Stalled,
    MaxIters,
    TimeLimit,
    /// A master solve after the first did not finish optimally.
    SolverFailure(SolveStatus),
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::PsdDual => f.write_str("psd_dual"),
            Termination::TriplesSaturated => f.write_str("triples_saturated"),
            Termination::NoNewAtoms => f.write_str("no_new_atoms"),
            Termination::Stalled => f.write_str("stalled"),
            Termination::MaxIters => f.write_str("max_iters"),
            Termination::TimeLimit => f.write_str("time_limit"),
            Termination::SolverFailure(s) => write!(f, "solver_{s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub bound: f64,
    /// Atoms added before this solve; row 0 counts the initial atoms.
    pub atoms_added: usize,
    pub status: SolveStatus,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug)]
pub struct CgTrace {
    pub records: Vec<IterRecord>,
    pub termination: Termination,
    pub direction: Direction,
    pub certificate: Option<Certificate>,
}

impl CgTrace {
    pub fn final_bound(&self) -> f64 {
        self.records.last().map(|r| r.bound).unwrap_or(f64::NAN)
    }

    /// Number of pricing iterations performed.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// True when the loop stopped because no cut of the chosen family is
    /// violated any more.
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::PsdDual | Termination::TriplesSaturated
        )
    }

    pub fn bounds(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.bound).collect()
    }

    /// Checks that no bound is worse than its predecessor by more than
    /// `1e-9·max(1,|bound|)`.
    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| {
            let tol = 1e-9 * w[0].bound.abs().max(1.0);
            self.direction.improvement(w[0].bound, w[1].bound) >= -tol
        })
    }

    /// CSV with columns iter,bound,atoms_added,status,elapsed_ms. Each
    /// header line is emitted as a `#` comment before the column row.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut s = String::new();
        for h in header {
            s.push_str("# ");
            s.push_str(h);
            s.push('\n');
        }
        s.push_str("iter,bound,atoms_added,status,elapsed_ms\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{:?},{},{},{}\n",
                r.iter, r.bound, r.atoms_added, r.status, r.elapsed_ms
            ));
        }
        s
    }
}

/// Parses CSV produced by [`CgTrace::to_csv`] back into records.
pub fn parse_trace_csv(text: &str) -> Result<Vec<IterRecord>> {
    let mut out = Vec::new();
    let mut seen_header = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != "iter,bound,atoms_added,status,elapsed_ms" {
                return Err(Error::parse(ln + 1, "missing trace column header"));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(Error::parse(ln + 1, "expected 5 fields"));
        }
        let bad = |what: &str| Error::parse(ln + 1, format!("bad {what}"));
        let status = match f[3] {
            "optimal" => SolveStatus::Optimal,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            "numerical_failure" => SolveStatus::NumericalFailure,
            _ => return Err(bad("status")),
        };
        out.push(IterRecord {
            iter: f[0].parse().map_err(|_| bad("iter"))?,
            bound: f[1].parse().map_err(|_| bad("bound"))?,
            atoms_added: f[2].parse().map_err(|_| bad("atoms_added"))?,
            status,
            elapsed_ms: f[4].parse().map_err(|_| bad("elapsed_ms"))?,
        });
    }
    Ok(out)
}

/// Eigenvector pricing. LP mode returns up to `k` rank-one atoms from the
/// most negative eigenvalues. SOCP mode pairs consecutive negative
/// eigenvectors into up to `k` pair atoms; a lone negative eigenvector
/// becomes a rank-one cut. Empty when λ_min ≥ −psd_tol.
pub fn price_eig(x: &SymMatrix, mode: Mode, k: usize, psd_tol: f64) -> Result<Vec<Atom>> {
    let eig = eigh(x)?;
    let neg: Vec<&Vec<f64>> = eig
        .eigenvalues
        .iter()
        .zip(&eig.eigenvectors)
        .take_while(|(l, _)| **l < -psd_tol)
        .map(|(_, v)| v)
        .collect();
    let mut out = Vec::new();
    match mode {
        Mode::Lp => {
            for v in neg.into_iter().take(k) {
                out.push(Atom::RankOne(RankOneAtom::dense(v)?));
            }
        }
        Mode::Socp => {
            for chunk in neg.chunks(2).take(k) {
                match chunk {
                    [a, b] => out.push(Atom::Pair(PairAtom::from_columns(a, b)?)),
                    [a] => out.push(Atom::RankOne(RankOneAtom::dense(a)?)),
                    _ => unreachable!(),
                }
            }
        }
    }
    Ok(out)
}

/// Scans triples from `cursor`, collecting up to `t1` with uᵀBu < −tol that
/// are not in `exclude`, stopping early after a full cycle. Returns the `t2`
/// most violated, ties broken by scan order. The cursor is left just past
/// the last scanned triple. An empty result means a full cycle found no
/// violation.
pub fn price_triples_excluding(
    b: &SymMatrix,
    cursor: &mut U3Cursor,
    t1: usize,
    t2: usize,
    tol: f64,
    exclude: &AtomSet,
) -> Vec<RankOneAtom> {
    assert_eq!(b.n(), cursor.n(), "cursor dimension mismatch");
    let cycle = cursor.cycle_len();
    let mut found: Vec<(f64, u64, RankOneAtom)> = Vec::new();
    for step in 0..cycle {
        let v = cursor.peek_value(b);
        if v < -tol {
            let atom = cursor.peek();
            if !exclude.contains(&Atom::RankOne(atom.clone())) {
                found.push((v, step, atom));
            }
        }
        cursor.advance();
        if found.len() >= t1 {
            break;
        }
    }
    found.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    found.into_iter().take(t2).map(|(_, _, a)| a).collect()
}

/// [`price_triples_excluding`] with nothing excluded and tolerance 0.
pub fn price_triples(
    b: &SymMatrix,
    cursor: &mut U3Cursor,
    t1: usize,
    t2: usize,
) -> Vec<RankOneAtom> {
    price_triples_excluding(b, cursor, t1, t2, 0.0, &AtomSet::new())
}

/// Output of [`run`].
#[derive(Clone, Debug)]
pub struct CgRun {
    pub trace: CgTrace,
    /// Final atom set, initial atoms first.
    pub atoms: AtomSet,
    /// Last optimal master solution.
    pub solution: MasterSolution,
}

/// Runs column generation from `initial` atoms until a stopping rule fires.
pub fn run<M: Master + ?Sized>(
    master: &mut M,
    initial: AtomSet,
    config: &CgConfig,
) -> Result<CgRun> {
    config.validate()?;
    let n = master.atom_dim();
    if initial.iter().any(|a| a.n() != n) {
        return Err(Error::Dimension {
            expected: n,
            got: initial.iter().find(|a| a.n() != n).unwrap().n(),
        });
    }
    let start = Instant::now();
    let elapsed = |on: bool| {
        if on {
            start.elapsed().as_millis() as u64
        } else {
            0
        }
    };
    let direction = master.direction();
    let mut atoms = initial;

    let first = master.solve(&atoms, &config.solver)?;
    match first.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => {
            return Err(Error::InitialInfeasible(format!(
                "the restricted master over {} initial atoms has no feasible point",
                atoms.len()
            )))
        }
        s => return Err(Error::Solver(s)),
    }
    let mut records = vec![IterRecord {
        iter: 0,
        bound: first.bound,
        atoms_added: atoms.len(),
        status: first.status,
        elapsed_ms: elapsed(config.record_timing),
    }];
    let mut best = first;
    let mut cursor = U3Cursor::new(n);

    let termination = loop {
        let iter = records.len();
        if iter > config.max_iters {
            break Termination::MaxIters;
        }
        if let Some(limit) = config.time_limit {
            if start.elapsed() >= limit {
                break Termination::TimeLimit;
            }
        }
        if iter > config.stall_iters {
            let old = records[iter - 1 - config.stall_iters].bound;
            if direction.improvement(old, best.bound) < config.improvement_tol * old.abs().max(1.0)
            {
                break Termination::Stalled;
            }
        }

        let dual = &best.dual;
        let scale = dual.max_abs().max(1.0);
        let candidates: Vec<Atom> = match config.pricing {
            Pricing::Eig => {
                let c = price_eig(
                    dual,
                    config.mode,
                    config.cuts_per_iter,
                    config.psd_tol * scale,
                )?;
                if c.is_empty() {
                    break Termination::PsdDual;
                }
                c
            }
            Pricing::Triples => {
                let c = price_triples_excluding(
                    dual,
                    &mut cursor,
                    config.t1,
                    config.t2,
                    config.violation_tol * scale,
                    &atoms,
                );
                if c.is_empty() {
                    break Termination::TriplesSaturated;
                }
                c.into_iter().map(Atom::RankOne).collect()
            }
        };
        let added = atoms.extend(candidates);
        if added == 0 {
            break Termination::NoNewAtoms;
        }

        let sol = master.solve(&atoms, &config.solver)?;
        records.push(IterRecord {
            iter,
            bound: sol.bound,
            atoms_added: added,
            status: sol.status,
            elapsed_ms: elapsed(config.record_timing),
        });
        if sol.status != SolveStatus::Optimal {
            break Termination::SolverFailure(sol.status);
        }
        best = sol;
    };

    let certificate = Some(master.certify(&atoms, &best)?);
    Ok(CgRun {
        trace: CgTrace {
            records,
            termination,
            direction,
            certificate,
        },
        atoms,
        solution: best,
    })
}

/// Builds a certificate from a target matrix and the atom reconstruction.
pub fn matrix_certificate(
    target: &SymMatrix,
    atoms: &AtomSet,
    weights: &[Vec<f64>],
    scale: f64,
) -> Result<Certificate> {
    let m = reconstruct(atoms, weights, target.n());
    let residual = (target - &m).frobenius_norm();
    let min_eigenvalue = eigh(&m)?.min_eigenvalue();
    Ok(Certificate {
        residual,
        residual_tol: 1e-6 * scale.max(1.0),
        min_eigenvalue,
        psd: is_psd(&m, CERT_PSD_TOL)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eig_pricing_examples() {
        let x = SymMatrix::diagonal(&[1.0, -1.0]);
        let a = price_eig(&x, Mode::Lp, 1, 1e-9).unwrap();
        assert_eq!(
            a,
            vec![Atom::RankOne(RankOneAtom::signed(2, &[(1, 1)]))]
                .into_iter()
                .map(|a| match a {
                    Atom::RankOne(r) => Atom::RankOne(RankOneAtom::dense(&r.to_dense()).unwrap()),
                    p => p,
                })
                .collect::<Vec<_>>()
        );

        let x = SymMatrix::diagonal(&[-2.0, -1.0, 5.0]);
        let a = price_eig(&x, Mode::Socp, 1, 1e-9).unwrap();
        assert_eq!(a, vec![Atom::Pair(PairAtom::structured(3, 0, 1))]);

        assert!(price_eig(&SymMatrix::identity(4), Mode::Lp, 3, 1e-9)
            .unwrap()
            .is_empty());
        assert!(price_eig(&SymMatrix::identity(4), Mode::Socp, 3, 1e-9)
            .unwrap()
            .is_empty());

        // single negative eigenvalue in SOCP mode gives a rank-one cut
        let a = price_eig(&SymMatrix::diagonal(&[3.0, -1.0, 2.0]), Mode::Socp, 1, 1e-9).unwrap();
        assert!(matches!(a[0], Atom::RankOne(_)));
    }

    #[test]
    fn triples_examples() {
        let mut c = U3Cursor::new(3);
        assert!(price_triples(&SymMatrix::identity(3), &mut c, 10, 10).is_empty());
        assert_eq!(c.position(), 0);

        let j = SymMatrix::ones(3).scaled(-1.0);
        let mut c = U3Cursor::new(3);
        let a = price_triples(&j, &mut c, 1, 1);
        assert_eq!(a, vec![RankOneAtom::signed(3, &[(0, 1)])]);
        assert_eq!(c.position(), 1);

        let b = SymMatrix::diagonal(&[1.0, 1.0, -3.0]);
        let mut c = U3Cursor::new(3);
        let a = price_triples(&b, &mut c, 100, 1);
        assert_eq!(a, vec![RankOneAtom::signed(3, &[(2, 1)])]);
        let mut c = U3Cursor::new(3);
        let all = price_triples(&b, &mut c, 100, 100);
        for w in all.windows(2) {
            assert!(w[0].value(&b).unwrap() <= w[1].value(&b).unwrap());
        }
        assert!(all.iter().all(|a| a.value(&b).unwrap() < 0.0));
    }

    #[test]
    fn csv_round_trip() {
        let t = CgTrace {
            records: vec![
                IterRecord {
                    iter: 0,
                    bound: 1.5,
                    atoms_added: 4,
                    status: SolveStatus::Optimal,
                    elapsed_ms: 3,
                },
                IterRecord {
                    iter: 1,
                    bound: 0.1 + 0.2,
                    atoms_added: 1,
                    status: SolveStatus::Optimal,
                    elapsed_ms: 9,
                },
            ],
            termination: Termination::MaxIters,
            direction: Direction::Maximize,
            certificate: None,
        };
        let csv = t.to_csv(&["seed=1".to_string()]);
        assert!(csv.starts_with("# seed=1\niter,bound"));
        let back = parse_trace_csv(&csv).unwrap();
        assert_eq!(back, t.records);
        assert!(parse_trace_csv("iter,bound\n").is_err());
    }

    #[test]
    fn monotone_check_respects_direction() {
        let rec = |b: f64| IterRecord {
            iter: 0,
            bound: b,
            atoms_added: 0,
            status: SolveStatus::Optimal,
            elapsed_ms: 0,
        };
        let mut t = CgTrace {
            records: vec![rec(1.0), rec(2.0)],
            termination: Termination::MaxIters,
            direction: Direction::Maximize,
            certificate: None,
        };
        assert!(t.is_monotone());
        t.direction = Direction::Minimize;
        assert!(!t.is_monotone());
    }
}
