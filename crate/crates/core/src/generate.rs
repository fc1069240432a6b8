//! Seeded random instances.
//!
//! All randomness comes from ChaCha20 (`rand_chacha`) seeded with
//! `seed_from_u64(seed)`, with a separate stream number per use so that
//! different generators never share draws. Uniforms are
//! `Rng::random::<f64>()` in [0, 1); standard normals use the Box–Muller
//! cosine branch on two uniforms, u₁ replaced by 1 − u₁ to avoid log 0.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::cg::sdp::SdpProblem;
use crate::error::{Error, Result};
use crate::poly::basis::{basis_size, Poly};
use crate::stableset::Graph;
use crate::symmat::SymMatrix;

/// Name recorded in output headers.
pub const RNG_NAME: &str = "chacha20";
pub const NORMAL_METHOD: &str = "box-muller";

pub const STREAM_QUARTIC: u64 = 1;
pub const STREAM_GRAPH: u64 = 2;
pub const STREAM_SPECTRAHEDRON: u64 = 3;
pub const STREAM_ORACLE: u64 = 4;

/// Seeded uniform and normal sampler.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Standard normal; consumes two uniforms.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// Dense quartic form in n variables with i.i.d. standard normal
/// coefficients in basis order.
pub fn gen_quartic(n: usize, seed: u64) -> Result<Poly> {
    gen_form(n, 4, seed)
}

/// Dense form of the given degree with i.i.d. standard normal coefficients.
pub fn gen_form(n: usize, degree: u32, seed: u64) -> Result<Poly> {
    if n < 1 {
        return Err(Error::InvalidInput("need at least one variable".into()));
    }
    let mut s = Sampler::new(seed, STREAM_QUARTIC);
    let coef = (0..basis_size(n, degree)).map(|_| s.normal()).collect();
    Poly::from_coefficients(n, degree, coef)
}

/// Erdős–Rényi graph: pairs (i, j), i < j in lexicographic order, each kept
/// when a fresh uniform is below p.
pub fn gen_er(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut s = Sampler::new(seed, STREAM_GRAPH);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if s.uniform() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, &edges)
}

/// max x + y s.t. I + xE + yF ⪰ 0 with E, F symmetric, upper triangles
/// i.i.d. standard normal (E drawn first, row-major).
pub fn gen_spectrahedron(n: usize, seed: u64) -> Result<SdpProblem> {
    if n < 1 {
        return Err(Error::InvalidInput(
            "spectrahedron dimension must be positive".into(),
        ));
    }
    let mut s = Sampler::new(seed, STREAM_SPECTRAHEDRON);
    let mut draw = || {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, s.normal());
            }
        }
        m
    };
    let e = draw();
    let f = draw();
    SdpProblem::new(
        SymMatrix::identity(n),
        vec![e.scaled(-1.0), f.scaled(-1.0)],
        vec![1.0, 1.0],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_is_reproducible() {
        let a = gen_quartic(10, 42).unwrap();
        let b = gen_quartic(10, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.coefficients().len(), 715);
        assert_ne!(a, gen_quartic(10, 43).unwrap());
        let mean = a.coefficients().iter().sum::<f64>() / 715.0;
        assert!(mean.abs() < 4.0 / 715f64.sqrt());
    }

    #[test]
    fn er_extremes_and_count() {
        assert_eq!(gen_er(12, 0.0, 1).unwrap().num_edges(), 0);
        assert_eq!(gen_er(12, 1.0, 1).unwrap().num_edges(), 66);
        let g = gen_er(200, 0.3, 5).unwrap();
        let pairs = 199.0 * 100.0;
        let sd = (pairs * 0.3 * 0.7f64).sqrt();
        assert!((g.num_edges() as f64 - 0.3 * pairs).abs() < 4.0 * sd);
        assert!(gen_er(5, 1.5, 1).is_err());
    }

    #[test]
    fn spectrahedron_shape() {
        let p = gen_spectrahedron(10, 3).unwrap();
        assert_eq!(p.c, SymMatrix::identity(10));
        assert_eq!(p.b, vec![1.0, 1.0]);
        assert_eq!(p, gen_spectrahedron(10, 3).unwrap());
    }

    #[test]
    fn normals_have_unit_variance() {
        let mut s = Sampler::new(9, 0);
        let xs: Vec<f64> = (0..20000).map(|_| s.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05);
    }
}
