//! Separation of am-gm nonnegative forms q = Σ_{c∈S} x^{α_c} − k·x^{α_y}.
//!
//! By the arithmetic-geometric mean inequality such a q is nonnegative
//! whenever every α_c is even and Σ_c α_c = k·α_y. Given dual weights μ on
//! the monomials of a master, the search looks for the q minimizing
//! μᵀcoef(q) = Σ_c μ_c − k·μ_y; a negative value means q, added as a
//! column, is a violated cut.

use crate::error::{Error, Result};
use crate::poly::basis::{MonomialBasis, Poly};

pub const DEFAULT_NODE_CAP: u64 = 10_000_000;

/// A separating am-gm form.
#[derive(Clone, Debug, PartialEq)]
pub struct AmgmCut {
    /// Index of the monomial with coefficient −k.
    pub y: usize,
    /// Indices of the k monomials with coefficient 1, ascending.
    pub c: Vec<usize>,
    /// Σ_c μ_c − k·μ_y
    pub objective: f64,
    pub poly: Poly,
}

impl AmgmCut {
    /// Checks the structure: k distinct even monomials other than y with
    /// coefficient 1, coefficient −k on y, and Σ α_c = k·α_y.
    pub fn is_valid(&self, k: usize) -> bool {
        let b = self.poly.basis();
        let coef = self.poly.coefficients();
        if self.c.len() != k || self.c.contains(&self.y) {
            return false;
        }
        let mut sorted = self.c.clone();
        sorted.dedup();
        if sorted.len() != k {
            return false;
        }
        let n = b.n();
        let mut sum = vec![0u64; n];
        for &i in &self.c {
            if coef[i] != 1.0 || b.exponent(i).iter().any(|e| e % 2 != 0) {
                return false;
            }
            for v in 0..n {
                sum[v] += b.exponent(i)[v] as u64;
            }
        }
        let balance = (0..n).all(|v| sum[v] == k as u64 * b.exponent(self.y)[v] as u64);
        let others_zero = coef
            .iter()
            .enumerate()
            .all(|(i, &x)| i == self.y || self.c.contains(&i) || x == 0.0);
        balance && others_zero && coef[self.y] == -(k as f64)
    }
}

/// Exhaustive search over y and k-subsets of even monomials (excluding y)
/// satisfying the exponent balance. Returns the minimizer of
/// Σ_c μ_c − k·μ_y if its value is below −`tol`; ties keep the first found
/// in (y ascending, c lexicographic) order. Fails with [`Error::Budget`]
/// once more than `node_cap` search nodes have been visited.
pub fn amgm_separation(
    mu: &[f64],
    basis: &MonomialBasis,
    k: usize,
    node_cap: u64,
    tol: f64,
) -> Result<Option<AmgmCut>> {
    if mu.len() != basis.len() {
        return Err(Error::Dimension {
            expected: basis.len(),
            got: mu.len(),
        });
    }
    if k < 2 {
        return Err(Error::InvalidInput("am-gm separation needs k >= 2".into()));
    }
    let n = basis.n();
    let even: Vec<usize> = (0..basis.len())
        .filter(|&i| basis.exponent(i).iter().all(|e| e % 2 == 0))
        .collect();

    let mut search = Search {
        basis,
        mu,
        k,
        node_cap,
        nodes: 0,
        best: None,
        chosen: Vec::with_capacity(k),
    };
    for y in 0..basis.len() {
        let goal: Vec<u32> = basis.exponent(y).iter().map(|&e| e * k as u32).collect();
        let candidates: Vec<usize> = even
            .iter()
            .copied()
            .filter(|&c| c != y && (0..n).all(|v| basis.exponent(c)[v] <= goal[v]))
            .collect();
        if candidates.len() < k {
            continue;
        }
        let mut partial = vec![0u32; n];
        search.dfs(y, &goal, &candidates, 0, &mut partial, 0.0)?;
    }
    let Some((obj, y, c)) = search.best else {
        return Ok(None);
    };
    if obj >= -tol {
        return Ok(None);
    }
    let mut coef = vec![0.0; basis.len()];
    for &i in &c {
        coef[i] = 1.0;
    }
    coef[y] = -(k as f64);
    let poly = Poly::from_coefficients(n, basis.degree(), coef)?;
    Ok(Some(AmgmCut {
        y,
        c,
        objective: obj,
        poly,
    }))
}

struct Search<'a> {
    basis: &'a MonomialBasis,
    mu: &'a [f64],
    k: usize,
    node_cap: u64,
    nodes: u64,
    best: Option<(f64, usize, Vec<usize>)>,
    chosen: Vec<usize>,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        y: usize,
        goal: &[u32],
        cand: &[usize],
        from: usize,
        partial: &mut [u32],
        acc: f64,
    ) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.node_cap {
            return Err(Error::Budget {
                nodes: self.node_cap,
            });
        }
        if self.chosen.len() == self.k {
            if partial == goal {
                let obj = acc - self.k as f64 * self.mu[y];
                if self.best.as_ref().is_none_or(|b| obj < b.0) {
                    self.best = Some((obj, y, self.chosen.clone()));
                }
            }
            return Ok(());
        }
        let need = self.k - self.chosen.len();
        for idx in from..cand.len() {
            if cand.len() - idx < need {
                break;
            }
            let c = cand[idx];
            let e = self.basis.exponent(c);
            if (0..e.len()).any(|v| partial[v] + e[v] > goal[v]) {
                continue;
            }
            for v in 0..e.len() {
                partial[v] += e[v];
            }
            self.chosen.push(c);
            let r = self.dfs(y, goal, cand, idx + 1, partial, acc + self.mu[c]);
            self.chosen.pop();
            for v in 0..e.len() {
                partial[v] -= e[v];
            }
            r?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis() -> MonomialBasis {
        MonomialBasis::new(3, 6)
    }

    #[test]
    fn finds_the_classic_certificate() {
        let b = basis();
        let mut mu = vec![0.0; b.len()];
        mu[b.index_of(&[2, 2, 2]).unwrap()] = 1.0;
        let cut = amgm_separation(&mu, &b, 3, DEFAULT_NODE_CAP, 1e-12)
            .unwrap()
            .unwrap();
        assert_eq!(cut.objective, -3.0);
        assert!(cut.is_valid(3));
        let expect = Poly::from_terms(
            3,
            6,
            &[
                (vec![6, 0, 0], 1.0),
                (vec![0, 6, 0], 1.0),
                (vec![0, 0, 6], 1.0),
                (vec![2, 2, 2], -3.0),
            ],
        )
        .unwrap();
        assert_eq!(cut.poly, expect);
    }

    #[test]
    fn nonnegative_weights_give_nothing() {
        let b = basis();
        let mu: Vec<f64> = (0..b.len())
            .map(|i| {
                if b.exponent(i).iter().all(|e| e % 2 == 0) {
                    5.0
                } else {
                    0.0
                }
            })
            .collect();
        assert!(amgm_separation(&mu, &b, 3, DEFAULT_NODE_CAP, 1e-12)
            .unwrap()
            .is_none());
    }

    #[test]
    fn motzkin_pattern_sign() {
        // with μ = −1 on x²y²z² the Motzkin form scores +3, so it is not a cut
        let b = basis();
        let mut mu = vec![0.0; b.len()];
        let mid = b.index_of(&[2, 2, 2]).unwrap();
        mu[mid] = -1.0;
        let motzkin_score: f64 = [[4, 2, 0], [2, 4, 0], [0, 0, 6]]
            .iter()
            .map(|e| mu[b.index_of(e).unwrap()])
            .sum::<f64>()
            - 3.0 * mu[mid];
        assert_eq!(motzkin_score, 3.0);
        if let Some(cut) = amgm_separation(&mu, &b, 3, DEFAULT_NODE_CAP, 1e-12).unwrap() {
            assert!(cut.objective < 0.0);
            assert!(cut.is_valid(3));
            assert!(cut.c.contains(&mid));
        }
    }

    #[test]
    fn budget_is_reported() {
        let b = basis();
        let mu = vec![0.0; b.len()];
        assert!(matches!(
            amgm_separation(&mu, &b, 3, 10, 0.0),
            Err(Error::Budget { nodes: 10 })
        ));
    }

    #[test]
    fn returned_form_is_nonnegative() {
        let b = MonomialBasis::new(3, 4);
        let mu: Vec<f64> = (0..b.len()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        if let Some(cut) = amgm_separation(&mu, &b, 2, DEFAULT_NODE_CAP, 1e-12).unwrap() {
            assert!(cut.is_valid(2));
            for t in 0..200 {
                let x = [
                    (t as f64 * 0.37).sin(),
                    (t as f64 * 0.71).cos(),
                    (t as f64 * 1.3).sin(),
                ];
                assert!(cut.poly.eval(&x) >= -1e-12);
            }
        }
    }
}
