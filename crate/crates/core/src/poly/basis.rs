use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::symmat::Tokens;

/// All monomials of degree exactly `d` in `n` variables, in graded
/// lexicographic order: exponent tuples sorted descending, so x₁ᵈ comes
/// first and xₙᵈ last. Every coefficient vector in the crate uses this order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    n: usize,
    d: u32,
    exponents: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl MonomialBasis {
    pub fn new(n: usize, d: u32) -> Self {
        assert!(n >= 1, "monomial basis needs at least one variable");
        let mut exponents = Vec::with_capacity(binomial(n + d as usize - 1, d as usize));
        let mut cur = vec![0u32; n];
        fill(&mut exponents, &mut cur, 0, d);
        let index = exponents
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, e)| (e, i))
            .collect();
        MonomialBasis {
            n,
            d,
            exponents,
            index,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.d
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    pub fn exponent(&self, i: usize) -> &[u32] {
        &self.exponents[i]
    }

    pub fn index_of(&self, e: &[u32]) -> Option<usize> {
        self.index.get(e).copied()
    }
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut [u32], pos: usize, left: u32) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.to_vec());
        return;
    }
    for e in (0..=left).rev() {
        cur[pos] = e;
        fill(out, cur, pos + 1, left - e);
    }
    cur[pos] = 0;
}

/// Binomial coefficient C(n, k); saturates on overflow.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r.min(usize::MAX as u128) as usize
}

/// Size of the degree-d basis in n variables, C(n+d−1, d).
pub fn basis_size(n: usize, d: u32) -> usize {
    binomial(n + d as usize - 1, d as usize)
}

/// The monomial x^e rendered as e.g. `x1^2*x3`.
pub fn monomial_name(e: &[u32]) -> String {
    let parts: Vec<String> = e
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0)
        .map(|(i, &p)| {
            if p == 1 {
                format!("x{}", i + 1)
            } else {
                format!("x{}^{}", i + 1, p)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// A homogeneous polynomial (form) stored as a dense coefficient vector in
/// the basis of its degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    n: usize,
    degree: u32,
    coef: Vec<f64>,
}

impl Poly {
    pub fn zero(n: usize, degree: u32) -> Self {
        Poly {
            n,
            degree,
            coef: vec![0.0; basis_size(n, degree)],
        }
    }

    pub fn from_coefficients(n: usize, degree: u32, coef: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput(
                "polynomial needs at least one variable".into(),
            ));
        }
        let len = basis_size(n, degree);
        if coef.len() != len {
            return Err(Error::Dimension {
                expected: len,
                got: coef.len(),
            });
        }
        if !coef.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(Poly { n, degree, coef })
    }

    /// Builds a form from (exponent, coefficient) terms; repeated exponents
    /// are summed.
    pub fn from_terms(n: usize, degree: u32, terms: &[(Vec<u32>, f64)]) -> Result<Self> {
        let basis = MonomialBasis::new(n, degree);
        let mut p = Poly::zero(n, degree);
        for (e, c) in terms {
            if e.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: e.len(),
                });
            }
            let i = basis.index_of(e).ok_or_else(|| {
                Error::InvalidInput(format!(
                    "monomial {} does not have degree {degree}",
                    monomial_name(e)
                ))
            })?;
            p.coef[i] += c;
        }
        if !p.coef.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(p)
    }

    /// x⁴y² + x²y⁴ + z⁶ − 3x²y²z²
    pub fn motzkin() -> Self {
        Poly::from_terms(
            3,
            6,
            &[
                (vec![4, 2, 0], 1.0),
                (vec![2, 4, 0], 1.0),
                (vec![0, 0, 6], 1.0),
                (vec![2, 2, 2], -3.0),
            ],
        )
        .expect("valid terms")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn basis(&self) -> MonomialBasis {
        MonomialBasis::new(self.n, self.degree)
    }

    pub fn coefficient(&self, e: &[u32]) -> f64 {
        self.basis()
            .index_of(e)
            .map(|i| self.coef[i])
            .unwrap_or(0.0)
    }

    /// Nonzero terms in basis order.
    pub fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        let b = self.basis();
        self.coef
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (b.exponent(i).to_vec(), *c))
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n, "point dimension mismatch");
        self.terms()
            .iter()
            .map(|(e, c)| c * monomial_value(e, x))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for (e, c) in self.terms() {
            for v in 0..self.n {
                if e[v] == 0 {
                    continue;
                }
                let mut t = c * e[v] as f64;
                for (w, &p) in e.iter().enumerate() {
                    let p = if w == v { p - 1 } else { p };
                    t *= x[w].powi(p as i32);
                }
                g[v] += t;
            }
        }
        g
    }

    pub fn scaled(&self, a: f64) -> Poly {
        Poly {
            n: self.n,
            degree: self.degree,
            coef: self.coef.iter().map(|c| a * c).collect(),
        }
    }

    /// self + a·other
    pub fn add_scaled(&self, a: f64, other: &Poly) -> Result<Poly> {
        if self.n != other.n || self.degree != other.degree {
            return Err(Error::InvalidInput(
                "adding forms of different shape".into(),
            ));
        }
        Ok(Poly {
            n: self.n,
            degree: self.degree,
            coef: self
                .coef
                .iter()
                .zip(&other.coef)
                .map(|(x, y)| x + a * y)
                .collect(),
        })
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        if self.n != other.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: other.n,
            });
        }
        let out_basis = MonomialBasis::new(self.n, self.degree + other.degree);
        let mut out = Poly::zero(self.n, self.degree + other.degree);
        let b = other.terms();
        let mut e = vec![0u32; self.n];
        for (ea, ca) in self.terms() {
            for (eb, cb) in &b {
                for v in 0..self.n {
                    e[v] = ea[v] + eb[v];
                }
                out.coef[out_basis.index_of(&e).expect("product degree")] += ca * cb;
            }
        }
        Ok(out)
    }

    /// Parses header "n deg", then lines "e1 … en c". Unlisted monomials are
    /// zero; repeated monomials are summed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Tokens::new(text);
        let n = t.next_usize()?;
        let degree = t.next_usize()?;
        if n == 0 || n > 64 {
            return Err(Error::parse(1, "variable count must be in 1..=64"));
        }
        if degree > 64 {
            return Err(Error::parse(1, "degree must be at most 64"));
        }
        let degree = degree as u32;
        if basis_size(n, degree) > 5_000_000 {
            return Err(Error::parse(1, "polynomial basis too large"));
        }
        let basis = MonomialBasis::new(n, degree);
        let mut p = Poly::zero(n, degree);
        while t.peek().is_some() {
            let line = t.line();
            let mut e = vec![0u32; n];
            for v in e.iter_mut() {
                let x = t.next_usize()?;
                *v = u32::try_from(x).map_err(|_| Error::parse(line, "exponent too large"))?;
            }
            let c = t.next_f64()?;
            let i = basis.index_of(&e).ok_or_else(|| {
                Error::parse(
                    line,
                    format!("monomial {} is not of degree {degree}", monomial_name(&e)),
                )
            })?;
            p.coef[i] += c;
        }
        Ok(p)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.degree);
        for (e, c) in self.terms() {
            let es: Vec<String> = e.iter().map(|x| x.to_string()).collect();
            s.push_str(&format!("{} {:?}\n", es.join(" "), c));
        }
        s
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (e, c)) in terms.iter().enumerate() {
            let sign = if *c < 0.0 {
                "-"
            } else if k > 0 {
                "+"
            } else {
                ""
            };
            let sep = if k > 0 { " " } else { "" };
            let space = if k > 0 { " " } else { "" };
            write!(f, "{sep}{sign}{space}{}*{}", c.abs(), monomial_name(e))?;
        }
        Ok(())
    }
}

fn monomial_value(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(&p, &v)| v.powi(p as i32)).product()
}

/// (Σ x_i²)^d as a form of degree 2d.
pub fn sphere_multiplier(n: usize, d: u32) -> Poly {
    let mut p = Poly::from_coefficients(n, 0, vec![1.0]).expect("constant");
    let sq = Poly::from_terms(
        n,
        2,
        &(0..n)
            .map(|i| {
                let mut e = vec![0; n];
                e[i] = 2;
                (e, 1.0)
            })
            .collect::<Vec<_>>(),
    )
    .expect("squares");
    for _ in 0..d {
        p = p.mul(&sq).expect("same n");
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_examples() {
        let b = MonomialBasis::new(2, 2);
        assert_eq!(b.exponents(), &[vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(
            MonomialBasis::new(3, 1).exponents(),
            &[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]
        );
        assert_eq!(MonomialBasis::new(10, 2).len(), 55);
        assert_eq!(MonomialBasis::new(10, 4).len(), 715);
        assert_eq!(MonomialBasis::new(4, 0).len(), 1);
        let b = MonomialBasis::new(4, 3);
        assert!(b.exponents().windows(2).all(|w| w[0] > w[1]));
        assert_eq!(b.len(), binomial(6, 3));
    }

    #[test]
    fn sphere_multiplier_examples() {
        let s = sphere_multiplier(2, 2);
        assert_eq!(s.coefficients(), &[1.0, 0.0, 2.0, 0.0, 1.0]);
        let s = sphere_multiplier(1, 3);
        assert_eq!(s.coefficients(), &[1.0]);
        let s = sphere_multiplier(3, 2);
        assert_eq!(s.coefficient(&[2, 2, 0]), 2.0);
        assert_eq!(s.coefficient(&[4, 0, 0]), 1.0);
    }

    #[test]
    fn motzkin_values() {
        let m = Poly::motzkin();
        assert!(m.eval(&[1.0, 1.0, 1.0]).abs() < 1e-15);
        assert!(m.eval(&[0.3, -0.7, 1.1]) >= 0.0);
        assert_eq!(m.coefficient(&[2, 2, 2]), -3.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = Poly::motzkin();
        let x = [0.4, -0.3, 0.8];
        let g = m.gradient(&x);
        for v in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[v] += 1e-6;
            xm[v] -= 1e-6;
            let fd = (m.eval(&xp) - m.eval(&xm)) / 2e-6;
            assert!((fd - g[v]).abs() < 1e-6);
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let m = Poly::motzkin();
        assert_eq!(Poly::parse(&m.to_text()).unwrap(), m);
        assert!(Poly::parse("2 2\n1 0 1.0\n").is_err());
        assert!(Poly::parse("2 2\n1 1\n").is_err());
        assert!(Poly::parse("2 2\n2 0 abc\n").is_err());
        let p = Poly::parse("2 2 # header\n2 0 1\n2 0 2\n").unwrap();
        assert_eq!(p.coefficient(&[2, 0]), 3.0);
    }

    #[test]
    fn product_degree_and_values() {
        let s = sphere_multiplier(3, 1);
        let m = Poly::motzkin();
        let p = m.mul(&s).unwrap();
        assert_eq!(p.degree(), 8);
        let x = [0.2, 0.5, -0.9];
        assert!((p.eval(&x) - m.eval(&x) * s.eval(&x)).abs() < 1e-12);
    }
}
