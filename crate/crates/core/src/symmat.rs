//! Dense symmetric matrices, spectral decomposition and the DD/SDD cone tests.
//!
//! Storage is the packed upper triangle in row-major order; every accessor
//! mirrors, so a `SymMatrix` is symmetric by construction.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::atoms::RankOneAtom;
use crate::conic::{ConicModel, LinExpr, Sense, SolveStatus, SolverParams};
use crate::error::{Error, Result};

/// Relative tolerance used when the caller does not supply one.
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Iteration cap handed to the QL eigensolver.
pub const EIGH_MAX_SWEEPS: usize = 10_000;

#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// The all-ones matrix J.
    pub fn ones(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![1.0; n * (n + 1) / 2],
        }
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from `f(i, j)` evaluated on the upper triangle only.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                data.push(f(i, j));
            }
        }
        SymMatrix { n, data }
    }

    /// Symmetrizes a square dense matrix by averaging it with its transpose.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
        }
        let m = Self::from_fn(n, |i, j| 0.5 * (rows[i][j] + rows[j][i]));
        if !m.is_finite() {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(m)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// Sets entry (i, j) and, implicitly, (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Upper-triangle entries (i <= j) in storage order.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| (i..n).map(move |j| (i, j)))
            .zip(self.data.iter())
            .map(|((i, j), &v)| (i, j, v))
    }

    /// Position of (i, j), i <= j, in the upper-triangle enumeration.
    pub fn upper_index(&self, i: usize, j: usize) -> usize {
        self.idx(i, j)
    }

    pub fn upper_len(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trace inner product A·B = Σ_ij A_ij B_ij.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n, "dot: dimension mismatch");
        self.upper()
            .zip(other.data.iter())
            .map(|((i, j, a), &b)| if i == j { a * b } else { 2.0 * a * b })
            .sum()
    }

    /// uᵀ A u.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        assert_eq!(u.len(), self.n);
        let mut s = 0.0;
        for (i, j, a) in self.upper() {
            if i == j {
                s += a * u[i] * u[i];
            } else {
                s += 2.0 * a * u[i] * u[j];
            }
        }
        s
    }

    /// uᵀ A v.
    pub fn bilinear(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            if u[i] == 0.0 {
                continue;
            }
            let mut row = 0.0;
            for j in 0..self.n {
                row += self.get(i, j) * v[j];
            }
            s += u[i] * row;
        }
        s
    }

    /// self += alpha · other
    pub fn axpy(&mut self, alpha: f64, other: &SymMatrix) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// self += alpha · u uᵀ
    pub fn add_outer(&mut self, alpha: f64, u: &[f64]) {
        for i in 0..self.n {
            if u[i] == 0.0 {
                continue;
            }
            for j in i..self.n {
                if u[j] != 0.0 {
                    self.add_to(i, j, alpha * u[i] * u[j]);
                }
            }
        }
    }

    /// self += alpha · (u vᵀ + v uᵀ)
    pub fn add_sym_outer(&mut self, alpha: f64, u: &[f64], v: &[f64]) {
        for i in 0..self.n {
            for j in i..self.n {
                let w = u[i] * v[j] + v[i] * u[j];
                if w != 0.0 {
                    self.add_to(i, j, alpha * w);
                }
            }
        }
    }

    pub fn scaled(&self, alpha: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Parses the plain matrix text format: a line with `n`, then `n` rows of
    /// `n` whitespace-separated numbers. The result is symmetrized.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Tokens::new(text);
        let n = tokens.next_usize()?;
        let rows = tokens.read_square(n)?;
        tokens.expect_end()?;
        Self::from_rows(&rows)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{}", self.get(i, j))).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:>10.4}", self.get(i, j)))
                .collect();
            writeln!(f, "  [{}]", row.join(" "))?;
        }
        Ok(())
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scaled(rhs)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenDecomposition {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// Q Λ Qᵀ
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.eigenvalues.len();
        let mut m = SymMatrix::zeros(n);
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m.add_outer(*lam, v);
        }
        m
    }
}

/// Symmetric eigendecomposition (Householder tridiagonalization followed by
/// implicit QL/QR sweeps). Output is sorted ascending; each eigenvector is
/// sign-normalized so that its first entry of magnitude above 1e-12 is
/// positive, which makes the result a deterministic function of the input.
pub fn eigh(a: &SymMatrix) -> Result<EigenDecomposition> {
    if !a.is_finite() {
        return Err(Error::InvalidInput("eigh: non-finite matrix".into()));
    }
    let n = a.n();
    if n == 0 {
        return Ok(EigenDecomposition {
            eigenvalues: vec![],
            eigenvectors: vec![],
        });
    }
    let eig = SymmetricEigen::try_new(a.to_dense(), f64::EPSILON, EIGH_MAX_SWEEPS).ok_or(
        Error::EigenNonConvergence {
            max_sweeps: EIGH_MAX_SWEEPS,
        },
    )?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| {
        eig.eigenvalues[x]
            .total_cmp(&eig.eigenvalues[y])
            .then(x.cmp(&y))
    });
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    for k in order {
        eigenvalues.push(eig.eigenvalues[k]);
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvectors.push(v);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// λ_min(A) ≥ −tol · max(1, ‖A‖_F).
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<bool> {
    let e = eigh(a)?;
    Ok(e.min_eigenvalue() >= -tol * a.frobenius_norm().max(1.0))
}

/// Exact diagonal-dominance test on the stored values.
pub fn is_dd(a: &SymMatrix) -> bool {
    first_non_dd_row(a).is_none()
}

fn first_non_dd_row(a: &SymMatrix) -> Option<usize> {
    let n = a.n();
    (0..n).find(|&i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
        a.get(i, i) < off
    })
}

/// Scaled-diagonal-dominance test: feasibility of writing `a` as a sum of
/// PSD matrices each supported on a single 2×2 principal block. Feasibility
/// is judged by the conic backend at `params.feas_tol`.
pub fn is_sdd(a: &SymMatrix, params: &SolverParams) -> Result<bool> {
    let n = a.n();
    if n == 0 {
        return Ok(true);
    }
    if n == 1 {
        return Ok(a.get(0, 0) >= 0.0);
    }
    let mut model = ConicModel::new(Sense::Minimize);
    // entry (i,j) receives contributions from the blocks touching it
    let mut entry_terms: Vec<LinExpr> = vec![LinExpr::new(); a.upper_len()];
    for i in 0..n {
        for j in (i + 1)..n {
            let a1 = model.add_var(None, 0.0);
            let a2 = model.add_var(None, 0.0);
            let a3 = model.add_var(None, 0.0);
            model.add_psd2([a1, a2, a3]);
            entry_terms[a.upper_index(i, i)].push(a1, 1.0);
            entry_terms[a.upper_index(i, j)].push(a2, 1.0);
            entry_terms[a.upper_index(j, j)].push(a3, 1.0);
        }
    }
    for ((_, _, v), expr) in a.upper().zip(entry_terms) {
        model.add_eq(expr, v);
    }
    let sol = model.solve(params)?;
    match sol.status {
        SolveStatus::Optimal => Ok(true),
        SolveStatus::Infeasible => Ok(false),
        s => Err(Error::Solver(s)),
    }
}

/// Writes a DD matrix as a nonnegative combination of u uᵀ with u having at
/// most two nonzeros in {±1}.
pub fn dd_decompose(a: &SymMatrix) -> Result<Vec<(f64, RankOneAtom)>> {
    if let Some(row) = first_non_dd_row(a) {
        return Err(Error::NotDiagonallyDominant { row });
    }
    let n = a.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = a.get(i, j);
            if v != 0.0 {
                let s = if v > 0.0 { 1 } else { -1 };
                out.push((v.abs(), RankOneAtom::signed(n, &[(i, 1), (j, s)])));
            }
        }
    }
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a.get(i, j).abs()).sum();
        let slack = a.get(i, i) - off;
        if slack > 0.0 {
            out.push((slack, RankOneAtom::signed(n, &[(i, 1)])));
        }
    }
    Ok(out)
}

/// Whitespace tokenizer that tracks line numbers for diagnostics.
pub(crate) struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .flat_map(|(ln, line)| {
                let line = line.split('#').next().unwrap_or("");
                line.split_whitespace().map(move |t| (ln + 1, t))
            })
            .collect();
        Tokens { items, pos: 0 }
    }

    pub(crate) fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    pub(crate) fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map(|t| t.0)
            .unwrap_or(1)
    }

    pub(crate) fn next_str(&mut self) -> Result<&'a str> {
        let line = self.line();
        let t = self
            .items
            .get(self.pos)
            .ok_or_else(|| Error::parse(line, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t.1)
    }

    pub(crate) fn next_usize(&mut self) -> Result<usize> {
        let line = self.line();
        let t = self.next_str()?;
        t.parse()
            .map_err(|_| Error::parse(line, format!("expected a nonnegative integer, found `{t}`")))
    }

    pub(crate) fn next_f64(&mut self) -> Result<f64> {
        let line = self.line();
        let t = self.next_str()?;
        let v: f64 = t
            .parse()
            .map_err(|_| Error::parse(line, format!("expected a number, found `{t}`")))?;
        if !v.is_finite() {
            return Err(Error::parse(line, format!("non-finite value `{t}`")));
        }
        Ok(v)
    }

    pub(crate) fn read_square(&mut self, n: usize) -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let mut row = Vec::with_capacity(n.min(1024));
            for _ in 0..n {
                row.push(self.next_f64()?);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    pub(crate) fn expect_end(&self) -> Result<()> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some((line, t)) => Err(Error::parse(*line, format!("trailing token `{t}`"))),
        }
    }
}
