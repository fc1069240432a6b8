//! PSD atoms: rank-one u uᵀ and n×2 column pairs V carrying a free 2×2 PSD
//! block, the structured families U_{n,2}, U_{n,3}, V_{n,2}, and a
//! deduplicating container.

use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::symmat::{SymMatrix, Tokens};

/// Cosine threshold above which two dense directions count as the same atom.
pub const DENSE_DUP_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
enum AtomVector {
    /// Sorted by index; first sign is +1.
    Signed(Vec<(usize, i8)>),
    /// Unit norm; first entry above 1e-12 in magnitude is positive.
    Dense(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOneAtom {
    n: usize,
    u: AtomVector,
}

impl RankOneAtom {
    /// Structured atom from (index, ±1) pairs. Signs are canonicalized so the
    /// lowest index carries +1.
    pub fn signed(n: usize, entries: &[(usize, i8)]) -> Self {
        let mut e: Vec<(usize, i8)> = entries
            .iter()
            .copied()
            .filter(|&(_, s)| s != 0)
            .map(|(i, s)| (i, s.signum()))
            .collect();
        assert!(!e.is_empty(), "atom vector must be nonzero");
        e.sort_by_key(|&(i, _)| i);
        assert!(
            e.windows(2).all(|w| w[0].0 != w[1].0),
            "repeated index in atom"
        );
        assert!(e.last().unwrap().0 < n, "atom index out of range");
        if e[0].1 < 0 {
            e.iter_mut().for_each(|p| p.1 = -p.1);
        }
        RankOneAtom {
            n,
            u: AtomVector::Signed(e),
        }
    }

    /// Dense atom, normalized to unit length with canonical sign.
    pub fn dense(u: &[f64]) -> Result<Self> {
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidInput(
                "atom vector must be finite and nonzero".into(),
            ));
        }
        let mut v: Vec<f64> = u.iter().map(|x| x / norm).collect();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        Ok(RankOneAtom {
            n: u.len(),
            u: AtomVector::Dense(v),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_structured(&self) -> bool {
        matches!(self.u, AtomVector::Signed(_))
    }

    /// Nonzero entries as (index, value).
    pub fn entries(&self) -> Vec<(usize, f64)> {
        match &self.u {
            AtomVector::Signed(e) => e.iter().map(|&(i, s)| (i, s as f64)).collect(),
            AtomVector::Dense(v) => v
                .iter()
                .copied()
                .enumerate()
                .filter(|(_, x)| *x != 0.0)
                .collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.u {
            AtomVector::Signed(e) => e.len(),
            AtomVector::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (i, x) in self.entries() {
            v[i] = x;
        }
        v
    }

    /// uᵀ B u
    pub fn value(&self, b: &SymMatrix) -> Result<f64> {
        if b.n() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: b.n(),
            });
        }
        let e = self.entries();
        let mut s = 0.0;
        for (a, &(i, ui)) in e.iter().enumerate() {
            s += ui * ui * b.get(i, i);
            for &(j, uj) in &e[a + 1..] {
                s += 2.0 * ui * uj * b.get(i, j);
            }
        }
        Ok(s)
    }

    /// Upper-triangle entries of u uᵀ.
    pub fn outer_upper(&self) -> Vec<(usize, usize, f64)> {
        let e = self.entries();
        let mut out = Vec::with_capacity(e.len() * (e.len() + 1) / 2);
        for (a, &(i, ui)) in e.iter().enumerate() {
            for &(j, uj) in &e[a..] {
                out.push((i, j, ui * uj));
            }
        }
        out
    }

    fn signed_key(&self) -> Option<Vec<(usize, i8)>> {
        match &self.u {
            AtomVector::Signed(e) => Some(e.clone()),
            AtomVector::Dense(v) => {
                // a dense vector that is a scaled ±1 pattern is the same ray as
                // the structured atom with that pattern
                let support: Vec<(usize, f64)> = v
                    .iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, x)| x.abs() > 1e-6)
                    .collect();
                let k = support.len();
                if k == 0 || k > 3 {
                    return None;
                }
                let mag = 1.0 / (k as f64).sqrt();
                if support.iter().all(|(_, x)| (x.abs() - mag).abs() < 1e-9) {
                    let e: Vec<(usize, i8)> = support
                        .iter()
                        .map(|&(i, x)| (i, if x > 0.0 { 1 } else { -1 }))
                        .collect();
                    Some(RankOneAtom::signed(self.n, &e).signed_key_unchecked())
                } else {
                    None
                }
            }
        }
    }

    fn signed_key_unchecked(&self) -> Vec<(usize, i8)> {
        match &self.u {
            AtomVector::Signed(e) => e.clone(),
            AtomVector::Dense(_) => unreachable!(),
        }
    }

    fn unit(&self) -> Vec<f64> {
        let v = self.to_dense();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }
}

/// An n×2 atom V; contributes V [[a1,a2],[a2,a3]] Vᵀ with the 2×2 block PSD.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAtom {
    n: usize,
    cols: [Vec<f64>; 2],
    structured: Option<(usize, usize)>,
}

impl PairAtom {
    /// Columns e_j and e_k, j < k.
    pub fn structured(n: usize, j: usize, k: usize) -> Self {
        assert!(j < k && k < n, "structured pair needs j < k < n");
        let mut c0 = vec![0.0; n];
        let mut c1 = vec![0.0; n];
        c0[j] = 1.0;
        c1[k] = 1.0;
        PairAtom {
            n,
            cols: [c0, c1],
            structured: Some((j, k)),
        }
    }

    /// General pair; columns are normalized and must be linearly independent.
    /// A pair spanning a coordinate plane comes back structured.
    pub fn from_columns(v0: &[f64], v1: &[f64]) -> Result<Self> {
        if v0.len() != v1.len() {
            return Err(Error::Dimension {
                expected: v0.len(),
                got: v1.len(),
            });
        }
        let a = RankOneAtom::dense(v0)?.to_dense();
        let b = RankOneAtom::dense(v1)?.to_dense();
        let cos: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        if cos.abs() >= 1.0 - DENSE_DUP_TOL {
            return Err(Error::InvalidInput(
                "pair atom columns are linearly dependent".into(),
            ));
        }
        // two independent columns supported on the same coordinate plane span
        // it, which is exactly the structured pair
        let support: Vec<usize> = (0..a.len())
            .filter(|&i| a[i].abs() > 1e-12 || b[i].abs() > 1e-12)
            .collect();
        if support.len() == 2 {
            return Ok(PairAtom::structured(a.len(), support[0], support[1]));
        }
        Ok(PairAtom {
            n: v0.len(),
            cols: [a, b],
            structured: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> &[Vec<f64>; 2] {
        &self.cols
    }

    pub fn structured_indices(&self) -> Option<(usize, usize)> {
        self.structured
    }

    /// Vᵀ B V as (m11, m12, m22).
    pub fn compress(&self, b: &SymMatrix) -> Result<(f64, f64, f64)> {
        if b.n() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: b.n(),
            });
        }
        if let Some((j, k)) = self.structured {
            return Ok((b.get(j, j), b.get(j, k), b.get(k, k)));
        }
        let [v0, v1] = &self.cols;
        Ok((b.quad_form(v0), b.bilinear(v0, v1), b.quad_form(v1)))
    }

    /// λ_min(Vᵀ B V)
    pub fn value(&self, b: &SymMatrix) -> Result<f64> {
        let (p, q, r) = self.compress(b)?;
        Ok(0.5 * (p + r) - (0.25 * (p - r).powi(2) + q * q).sqrt())
    }

    /// Upper-triangle entries of v0 v0ᵀ, v0 v1ᵀ + v1 v0ᵀ and v1 v1ᵀ.
    pub fn generators_upper(&self) -> [Vec<(usize, usize, f64)>; 3] {
        let [v0, v1] = &self.cols;
        let outer = |u: &[f64], w: &[f64]| -> Vec<(usize, usize, f64)> {
            let mut out = Vec::new();
            for i in 0..self.n {
                for j in i..self.n {
                    let x = if std::ptr::eq(u, w) {
                        u[i] * u[j]
                    } else {
                        u[i] * w[j] + w[i] * u[j]
                    };
                    if x != 0.0 {
                        out.push((i, j, x));
                    }
                }
            }
            out
        };
        [outer(v0, v0), outer(v0, v1), outer(v1, v1)]
    }

    fn orthonormal_basis(&self) -> [Vec<f64>; 2] {
        let [a, b] = &self.cols;
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let mut c: Vec<f64> = b.iter().zip(a).map(|(y, x)| y - dot * x).collect();
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        c.iter_mut().for_each(|x| *x /= norm);
        [a.clone(), c]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    RankOne(RankOneAtom),
    Pair(PairAtom),
}

impl Atom {
    pub fn n(&self) -> usize {
        match self {
            Atom::RankOne(a) => a.n(),
            Atom::Pair(a) => a.n(),
        }
    }

    /// uᵀBu for rank-one atoms, λ_min(VᵀBV) for pairs. Negative means the
    /// dual matrix B violates the cut this atom induces.
    pub fn value(&self, b: &SymMatrix) -> Result<f64> {
        match self {
            Atom::RankOne(a) => a.value(b),
            Atom::Pair(a) => a.value(b),
        }
    }

    /// Number of scalar weights this atom carries in a master problem.
    pub fn arity(&self) -> usize {
        match self {
            Atom::RankOne(_) => 1,
            Atom::Pair(_) => 3,
        }
    }

    /// Upper-triangle generator matrices, one per weight.
    pub fn generators_upper(&self) -> Vec<Vec<(usize, usize, f64)>> {
        match self {
            Atom::RankOne(a) => vec![a.outer_upper()],
            Atom::Pair(p) => p.generators_upper().to_vec(),
        }
    }

    /// Adds Σ weight_k · generator_k to `m`.
    pub fn accumulate(&self, weights: &[f64], m: &mut SymMatrix) {
        for (gen, w) in self.generators_upper().iter().zip(weights) {
            for &(i, j, x) in gen {
                m.add_to(i, j, w * x);
            }
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Atom::RankOne(a) => {
                let parts: Vec<String> = match &a.u {
                    AtomVector::Signed(e) => {
                        e.iter().map(|(i, s)| format!("{}:{}", i + 1, s)).collect()
                    }
                    AtomVector::Dense(v) => v
                        .iter()
                        .enumerate()
                        .filter(|(_, x)| **x != 0.0)
                        .map(|(i, x)| format!("{}:{:e}", i + 1, x))
                        .collect(),
                };
                format!("u {} {}", a.n, parts.join(" "))
            }
            Atom::Pair(p) => {
                let mut s = format!("V {} 2", p.n);
                for i in 0..p.n {
                    s.push_str(&format!("\n{} {}", p.cols[0][i], p.cols[1][i]));
                }
                s
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Clone, Debug, Hash, PartialEq, Eq)]
enum StructKey {
    Signed(Vec<(usize, i8)>),
    Pair(usize, usize),
}

/// Ordered atom list with duplicate rejection: exact for structured atoms,
/// angular (threshold [`DENSE_DUP_TOL`]) for dense ones.
#[derive(Clone, Debug, Default)]
pub struct AtomSet {
    atoms: Vec<Atom>,
    keys: HashSet<StructKey>,
    dense_rank_one: Vec<Vec<f64>>,
    dense_pairs: Vec<[Vec<f64>; 2]>,
}

impl AtomSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Atom> {
        self.atoms.iter()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        match atom {
            Atom::RankOne(a) => {
                if let Some(k) = a.signed_key() {
                    return self.keys.contains(&StructKey::Signed(k));
                }
                let u = a.unit();
                self.dense_rank_one.iter().any(|v| {
                    let c: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
                    c.abs() >= 1.0 - DENSE_DUP_TOL
                })
            }
            Atom::Pair(p) => {
                if let Some((j, k)) = p.structured {
                    return self.keys.contains(&StructKey::Pair(j, k));
                }
                let q = p.orthonormal_basis();
                self.dense_pairs.iter().any(|r| {
                    let mut f2 = 0.0;
                    for a in &q {
                        for b in r {
                            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                            f2 += d * d;
                        }
                    }
                    f2 >= 2.0 * (1.0 - DENSE_DUP_TOL)
                })
            }
        }
    }

    /// Inserts unless a duplicate is present; returns whether it was added.
    pub fn insert(&mut self, atom: Atom) -> bool {
        if let Some(first) = self.atoms.first() {
            assert_eq!(first.n(), atom.n(), "atom dimension mismatch");
        }
        if self.contains(&atom) {
            return false;
        }
        match &atom {
            Atom::RankOne(a) => match a.signed_key() {
                Some(k) => {
                    self.keys.insert(StructKey::Signed(k));
                }
                None => self.dense_rank_one.push(a.unit()),
            },
            Atom::Pair(p) => match p.structured {
                Some((j, k)) => {
                    self.keys.insert(StructKey::Pair(j, k));
                }
                None => self.dense_pairs.push(p.orthonormal_basis()),
            },
        }
        self.atoms.push(atom);
        true
    }

    /// Inserts all, returning how many were new.
    pub fn extend(&mut self, atoms: impl IntoIterator<Item = Atom>) -> usize {
        atoms.into_iter().map(|a| self.insert(a) as usize).sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for a in &self.atoms {
            s.push_str(&a.to_text());
            s.push('\n');
        }
        s
    }

    /// Parses the text produced by [`AtomSet::to_text`]. Pair atoms whose
    /// columns are distinct unit basis vectors come back structured, and
    /// rank-one atoms written with integer ±1 entries come back signed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Tokens::new(text);
        let mut set = AtomSet::new();
        while let Ok(tag) = t.next_str() {
            match tag {
                "u" => {
                    let n = t.next_usize()?;
                    let mut entries = Vec::new();
                    // entries run until the next tag or the end of input
                    loop {
                        let tok = match t.peek() {
                            Some(tok) if tok != "u" && tok != "V" => tok,
                            _ => break,
                        };
                        let line = t.line();
                        t.next_str()?;
                        let (i, v) = tok
                            .split_once(':')
                            .ok_or_else(|| Error::parse(line, format!("bad atom entry `{tok}`")))?;
                        let i: usize = i
                            .parse()
                            .map_err(|_| Error::parse(line, format!("bad atom index `{i}`")))?;
                        if i == 0 || i > n {
                            return Err(Error::parse(
                                line,
                                format!("atom index {i} out of range 1..={n}"),
                            ));
                        }
                        entries.push((i - 1, v.to_string()));
                    }
                    if entries.is_empty() {
                        return Err(Error::parse(t.line(), "rank-one atom with no entries"));
                    }
                    let signed: Option<Vec<(usize, i8)>> = entries
                        .iter()
                        .map(|(i, v)| match v.as_str() {
                            "1" => Some((*i, 1)),
                            "-1" => Some((*i, -1)),
                            _ => None,
                        })
                        .collect();
                    let atom = match signed {
                        Some(e) => RankOneAtom::signed(n, &e),
                        None => {
                            let mut u = vec![0.0; n];
                            for (i, v) in &entries {
                                u[*i] = v.parse().map_err(|_| {
                                    Error::parse(t.line(), format!("bad atom value `{v}`"))
                                })?;
                            }
                            RankOneAtom::dense(&u)?
                        }
                    };
                    set.insert(Atom::RankOne(atom));
                }
                "V" => {
                    let n = t.next_usize()?;
                    if t.next_usize()? != 2 {
                        return Err(Error::parse(t.line(), "pair atoms must have 2 columns"));
                    }
                    let mut c0 = Vec::with_capacity(n.min(1024));
                    let mut c1 = Vec::with_capacity(n.min(1024));
                    for _ in 0..n {
                        c0.push(t.next_f64()?);
                        c1.push(t.next_f64()?);
                    }
                    let unit_index = |c: &[f64]| -> Option<usize> {
                        let nz: Vec<usize> = (0..c.len()).filter(|&i| c[i] != 0.0).collect();
                        (nz.len() == 1 && c[nz[0]] == 1.0).then(|| nz[0])
                    };
                    let atom = match (unit_index(&c0), unit_index(&c1)) {
                        (Some(j), Some(k)) if j < k => PairAtom::structured(n, j, k),
                        _ => PairAtom::from_columns(&c0, &c1)?,
                    };
                    set.insert(Atom::Pair(atom));
                }
                other => {
                    return Err(Error::parse(
                        t.line(),
                        format!("unknown atom tag `{other}`"),
                    ))
                }
            }
        }
        Ok(set)
    }
}

impl<'a> IntoIterator for &'a AtomSet {
    type Item = &'a Atom;
    type IntoIter = std::slice::Iter<'a, Atom>;
    fn into_iter(self) -> Self::IntoIter {
        self.atoms.iter()
    }
}

/// The n² extreme rays of DD_n: e_i, then e_i + e_j and e_i − e_j for i < j.
pub fn gen_u2(n: usize) -> AtomSet {
    let mut set = AtomSet::new();
    for i in 0..n {
        set.insert(Atom::RankOne(RankOneAtom::signed(n, &[(i, 1)])));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            set.insert(Atom::RankOne(RankOneAtom::signed(n, &[(i, 1), (j, 1)])));
            set.insert(Atom::RankOne(RankOneAtom::signed(n, &[(i, 1), (j, -1)])));
        }
    }
    set
}

/// One structured pair (e_j, e_k) per j < k.
pub fn gen_v2(n: usize) -> AtomSet {
    let mut set = AtomSet::new();
    for j in 0..n {
        for k in (j + 1)..n {
            set.insert(Atom::Pair(PairAtom::structured(n, j, k)));
        }
    }
    set
}

/// Resumable, cyclic enumeration of the sign-canonical vectors with one to
/// three nonzero ±1 entries.
///
/// Order: support size ascending, then supports in lexicographic order, then
/// sign patterns with the first entry fixed at +1 and the remaining signs
/// counted in binary (bit b set means entry b+1 is negative). After the last
/// element the cursor wraps to the first. Cursors are plain values: cloning
/// one saves the position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct U3Cursor {
    n: usize,
    size: usize,
    support: [usize; 3],
    sign: u8,
    position: u64,
}

impl U3Cursor {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "cursor needs n >= 1");
        U3Cursor {
            n,
            size: 1,
            support: [0, 1, 2],
            sign: 0,
            position: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Elements per cycle: n + 2·C(n,2) + 4·C(n,3).
    pub fn cycle_len(&self) -> u64 {
        let n = self.n as u64;
        let c2 = n * n.saturating_sub(1) / 2;
        let c3 = n * n.saturating_sub(1) * n.saturating_sub(2) / 6;
        n + 2 * c2 + 4 * c3
    }

    /// Index of the next element within the current cycle.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Current element, without advancing.
    pub fn peek(&self) -> RankOneAtom {
        let entries: Vec<(usize, i8)> = (0..self.size)
            .map(|b| {
                let neg = b > 0 && (self.sign >> (b - 1)) & 1 == 1;
                (self.support[b], if neg { -1 } else { 1 })
            })
            .collect();
        RankOneAtom::signed(self.n, &entries)
    }

    /// Sum of the current element's entries against B, evaluated without
    /// building the atom.
    pub fn peek_value(&self, b: &SymMatrix) -> f64 {
        let mut s = [1.0f64; 3];
        for k in 1..self.size {
            if (self.sign >> (k - 1)) & 1 == 1 {
                s[k] = -1.0;
            }
        }
        let sup = &self.support;
        let mut v = 0.0;
        for a in 0..self.size {
            v += b.get(sup[a], sup[a]);
            for c in (a + 1)..self.size {
                v += 2.0 * s[a] * s[c] * b.get(sup[a], sup[c]);
            }
        }
        v
    }

    pub fn advance(&mut self) {
        self.sign += 1;
        if self.sign < (1u8 << (self.size - 1)) {
            self.position += 1;
            return;
        }
        self.sign = 0;
        if !next_combination(&mut self.support[..self.size], self.n) {
            self.size += 1;
            if self.size > self.n.min(3) {
                self.size = 1;
                self.position = 0;
                self.support = [0, 1, 2];
                return;
            }
            for k in 0..self.size {
                self.support[k] = k;
            }
        }
        self.position += 1;
    }
}

impl Iterator for U3Cursor {
    type Item = RankOneAtom;

    /// Never returns `None`; the enumeration is cyclic.
    fn next(&mut self) -> Option<RankOneAtom> {
        let a = self.peek();
        self.advance();
        Some(a)
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// uᵀBu or λ_min(VᵀBV).
pub fn atom_value(atom: &Atom, b: &SymMatrix) -> Result<f64> {
    atom.value(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, ent: &[(usize, i8)]) -> Atom {
        Atom::RankOne(RankOneAtom::signed(n, ent))
    }

    #[test]
    fn u2_sizes_and_members() {
        assert_eq!(gen_u2(1).len(), 1);
        let s = gen_u2(2);
        assert_eq!(s.len(), 4);
        assert!(s.contains(&e(2, &[(0, 1)])));
        assert!(s.contains(&e(2, &[(1, 1)])));
        assert!(s.contains(&e(2, &[(0, 1), (1, 1)])));
        assert!(s.contains(&e(2, &[(0, -1), (1, 1)])));
        assert_eq!(gen_u2(10).len(), 100);
    }

    #[test]
    fn v2_sizes() {
        assert_eq!(gen_v2(2).len(), 1);
        assert_eq!(gen_v2(10).len(), 45);
        let s = gen_v2(3);
        let pairs: Vec<_> = s
            .iter()
            .map(|a| match a {
                Atom::Pair(p) => p.structured_indices().unwrap(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn canonical_sign() {
        let a = RankOneAtom::signed(3, &[(2, 1), (0, -1)]);
        assert_eq!(a.to_dense(), vec![1.0, 0.0, -1.0]);
        let d = RankOneAtom::dense(&[0.0, -3.0, 4.0]).unwrap();
        assert_eq!(d.to_dense(), vec![0.0, 0.6, -0.8]);
        assert!(RankOneAtom::dense(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn cursor_counts() {
        let c = U3Cursor::new(3);
        assert_eq!(c.cycle_len(), 13);
        let all: Vec<RankOneAtom> = U3Cursor::new(3).take(13).collect();
        assert_eq!(all.iter().filter(|a| a.nnz() == 3).count(), 4);
        let mut set = AtomSet::new();
        assert_eq!(set.extend(all.into_iter().map(Atom::RankOne)), 13);

        let four: Vec<RankOneAtom> = U3Cursor::new(4)
            .take(U3Cursor::new(4).cycle_len() as usize)
            .collect();
        assert_eq!(four.iter().filter(|a| a.nnz() == 3).count(), 16);
    }

    #[test]
    fn cursor_wraps_and_resumes() {
        let mut c = U3Cursor::new(4);
        let len = c.cycle_len() as usize;
        let first: Vec<_> = c.by_ref().take(len).collect();
        assert_eq!(c.position(), 0);
        let again: Vec<_> = c.by_ref().take(len).collect();
        assert_eq!(first, again);

        let mut a = U3Cursor::new(5);
        a.by_ref().take(17).for_each(drop);
        let saved = a.clone();
        let cont: Vec<_> = a.take(30).collect();
        let resumed: Vec<_> = saved.take(30).collect();
        assert_eq!(cont, resumed);
    }

    #[test]
    fn cursor_order_is_size_then_lex() {
        let v: Vec<Vec<f64>> = U3Cursor::new(3).take(13).map(|a| a.to_dense()).collect();
        assert_eq!(v[0], vec![1.0, 0.0, 0.0]);
        assert_eq!(v[3], vec![1.0, 1.0, 0.0]);
        assert_eq!(v[4], vec![1.0, -1.0, 0.0]);
        assert_eq!(v[9], vec![1.0, 1.0, 1.0]);
        assert_eq!(v[10], vec![1.0, -1.0, 1.0]);
        assert_eq!(v[12], vec![1.0, -1.0, -1.0]);
    }

    #[test]
    fn peek_value_matches_atom_value() {
        let b = SymMatrix::from_fn(5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let mut c = U3Cursor::new(5);
        for _ in 0..c.cycle_len() {
            let v = c.peek_value(&b);
            let a = c.next().unwrap();
            assert!((v - a.value(&b).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn values() {
        let b = SymMatrix::diagonal(&[5.0, 1.0]);
        assert_eq!(atom_value(&e(2, &[(0, 1)]), &b).unwrap(), 5.0);
        let j = SymMatrix::ones(3).scaled(-1.0);
        assert_eq!(
            atom_value(&e(3, &[(0, 1), (1, 1), (2, 1)]), &j).unwrap(),
            -9.0
        );
        let b = SymMatrix::diagonal(&[-1.0, -2.0, 7.0]);
        let p = Atom::Pair(PairAtom::structured(3, 0, 1));
        assert_eq!(atom_value(&p, &b).unwrap(), -2.0);
        assert!(atom_value(&p, &SymMatrix::identity(4)).is_err());
    }

    #[test]
    fn dense_duplicates_rejected() {
        let mut s = gen_u2(2);
        // e2 found as an eigenvector is the same ray as the structured e2
        assert!(!s.insert(Atom::RankOne(RankOneAtom::dense(&[0.0, -1.0]).unwrap())));
        assert!(!s.insert(Atom::RankOne(RankOneAtom::dense(&[0.5, 0.5]).unwrap())));
        assert!(s.insert(Atom::RankOne(RankOneAtom::dense(&[1.0, 2.0]).unwrap())));
        assert!(!s.insert(Atom::RankOne(RankOneAtom::dense(&[-2.0, -4.0]).unwrap())));

        let mut p = AtomSet::new();
        assert!(p.insert(Atom::Pair(
            PairAtom::from_columns(&[1.0, 0.0, 0.0], &[0.0, 1.0, 1.0]).unwrap()
        )));
        // same span, different basis
        assert!(!p.insert(Atom::Pair(
            PairAtom::from_columns(&[1.0, 1.0, 1.0], &[1.0, -1.0, -1.0]).unwrap()
        )));
        assert!(p.insert(Atom::Pair(
            PairAtom::from_columns(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap()
        )));
        assert!(!p.insert(Atom::Pair(
            PairAtom::from_columns(&[0.0, 1.0, 0.0], &[1.0, 1.0, 0.0]).unwrap()
        )));
        assert_eq!(
            PairAtom::from_columns(&[0.0, -1.0, 0.0], &[2.0, 0.0, 0.0]).unwrap(),
            PairAtom::structured(3, 0, 1)
        );
    }

    #[test]
    fn text_round_trip() {
        let mut s = gen_u2(3);
        s.insert(Atom::RankOne(
            RankOneAtom::dense(&[0.3, -0.2, 0.9]).unwrap(),
        ));
        s.insert(Atom::Pair(PairAtom::structured(3, 0, 2)));
        s.insert(Atom::Pair(
            PairAtom::from_columns(&[1.0, 2.0, 0.0], &[0.0, 1.0, 3.0]).unwrap(),
        ));
        let text = s.to_text();
        assert!(text.starts_with("u 3 1:1\n"));
        let back = AtomSet::parse(&text).unwrap();
        assert_eq!(back.len(), s.len());
        for (a, b) in s.iter().zip(back.iter()) {
            let m = SymMatrix::from_fn(3, |i, j| (i + 2 * j) as f64 - 1.5);
            assert!((a.value(&m).unwrap() - b.value(&m).unwrap()).abs() < 1e-12);
        }
        assert!(AtomSet::parse("u 3 4:1").is_err());
        assert!(AtomSet::parse("w 3").is_err());
    }
}
