use crate::atoms::Atom;
use crate::error::{Error, Result};
use crate::poly::basis::MonomialBasis;
use crate::symmat::SymMatrix;

/// The linear map Q ↦ coef(z(x,d)ᵀ Q z(x,d)).
///
/// Position (j, k) of the Gram matrix multiplies z_j·z_k. Both (j, k) and
/// (k, j) are listed under their monomial, so for a symmetric Q the
/// coefficient collects Q_jj once and each off-diagonal Q_jk twice.
#[derive(Clone, Debug)]
pub struct GramMap {
    half: MonomialBasis,
    full: MonomialBasis,
    /// Row-major N×N table of monomial indices in `full`.
    position: Vec<usize>,
    /// For each monomial of degree 2d, the ordered Gram positions mapping to it.
    entries: Vec<Vec<(usize, usize)>>,
}

impl GramMap {
    pub fn new(n: usize, d: u32) -> Self {
        let half = MonomialBasis::new(n, d);
        let full = MonomialBasis::new(n, 2 * d);
        let nn = half.len();
        let mut position = vec![0; nn * nn];
        let mut entries = vec![Vec::new(); full.len()];
        let mut e = vec![0u32; n];
        for j in 0..nn {
            for k in 0..nn {
                for v in 0..n {
                    e[v] = half.exponent(j)[v] + half.exponent(k)[v];
                }
                let i = full
                    .index_of(&e)
                    .expect("product of degree-d monomials has degree 2d");
                position[j * nn + k] = i;
                entries[i].push((j, k));
            }
        }
        GramMap {
            half,
            full,
            position,
            entries,
        }
    }

    /// Basis z(x, d) indexing the Gram matrix.
    pub fn half_basis(&self) -> &MonomialBasis {
        &self.half
    }

    /// Basis of degree 2d indexing coefficient vectors.
    pub fn full_basis(&self) -> &MonomialBasis {
        &self.full
    }

    pub fn gram_size(&self) -> usize {
        self.half.len()
    }

    pub fn num_coefficients(&self) -> usize {
        self.full.len()
    }

    /// Monomial index of z_j·z_k.
    pub fn monomial(&self, j: usize, k: usize) -> usize {
        self.position[j * self.half.len() + k]
    }

    /// Ordered Gram positions contributing to monomial `i` (the matrix A_i).
    pub fn entries(&self, i: usize) -> &[(usize, usize)] {
        &self.entries[i]
    }

    /// A_i · Q for every i.
    pub fn apply(&self, q: &SymMatrix) -> Result<Vec<f64>> {
        if q.n() != self.half.len() {
            return Err(Error::Dimension {
                expected: self.half.len(),
                got: q.n(),
            });
        }
        let mut out = vec![0.0; self.full.len()];
        for (i, j, v) in q.upper() {
            out[self.monomial(i, j)] += if i == j { v } else { 2.0 * v };
        }
        Ok(out)
    }

    /// Adjoint: B_jk = μ_{monomial(j,k)}.
    pub fn adjoint(&self, mu: &[f64]) -> Result<SymMatrix> {
        if mu.len() != self.full.len() {
            return Err(Error::Dimension {
                expected: self.full.len(),
                got: mu.len(),
            });
        }
        Ok(SymMatrix::from_fn(self.half.len(), |j, k| {
            mu[self.monomial(j, k)]
        }))
    }

    /// Sparse coefficient vectors of each generator of an atom.
    pub fn atom_columns(&self, atom: &Atom) -> Vec<Vec<(usize, f64)>> {
        atom.generators_upper()
            .iter()
            .map(|gen| {
                let mut col: Vec<(usize, f64)> = gen
                    .iter()
                    .map(|&(j, k, x)| (self.monomial(j, k), if j == k { x } else { 2.0 * x }))
                    .collect();
                col.sort_by_key(|c| c.0);
                col.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                col
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_examples() {
        let g = GramMap::new(2, 1);
        let q = SymMatrix::from_rows(&[vec![1.0, 5.0], vec![5.0, 3.0]]).unwrap();
        assert_eq!(g.apply(&q).unwrap(), vec![1.0, 10.0, 3.0]);

        let g = GramMap::new(2, 2);
        let x2y2 = g.full_basis().index_of(&[2, 2]).unwrap();
        let mut pos = g.entries(x2y2).to_vec();
        pos.sort();
        assert_eq!(pos, vec![(0, 2), (1, 1), (2, 0)]);
        let total: usize = (0..g.num_coefficients()).map(|i| g.entries(i).len()).sum();
        assert_eq!(total, 9);
    }

    #[test]
    fn adjoint_is_transpose_of_apply() {
        let g = GramMap::new(3, 2);
        let q = SymMatrix::from_fn(g.gram_size(), |i, j| ((i * 3 + j * 5) % 7) as f64 - 3.0);
        let mu: Vec<f64> = (0..g.num_coefficients())
            .map(|i| (i as f64 * 0.37).sin())
            .collect();
        let lhs: f64 = g
            .apply(&q)
            .unwrap()
            .iter()
            .zip(&mu)
            .map(|(a, b)| a * b)
            .sum();
        let rhs = g.adjoint(&mu).unwrap().dot(&q);
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
