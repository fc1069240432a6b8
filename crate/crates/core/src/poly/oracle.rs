use crate::generate::{Sampler, STREAM_ORACLE};
use crate::poly::basis::Poly;

const ORACLE_SEED: u64 = 0x5eed;
const POLISH_STARTS: usize = 8;
const POLISH_STEPS: usize = 500;

/// Upper bound on min p(x) over the unit sphere: the best of `samples`
/// seeded Gaussian directions, the coordinate vectors and the normalized
/// all-ones vector, followed by projected gradient descent from the best
/// few starting points.
pub fn sphere_min_oracle(p: &Poly, samples: usize) -> f64 {
    let n = p.n();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(samples + n + 1);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        points.push(e);
    }
    points.push(vec![1.0 / (n as f64).sqrt(); n]);
    let mut s = Sampler::new(ORACLE_SEED, STREAM_ORACLE);
    for _ in 0..samples.max(1) {
        let v: Vec<f64> = (0..n).map(|_| s.normal()).collect();
        points.push(normalize(v));
    }
    let mut scored: Vec<(f64, Vec<f64>)> = points.into_iter().map(|x| (p.eval(&x), x)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored[0].0;
    for (f0, x0) in scored.into_iter().take(POLISH_STARTS) {
        best = best.min(polish(p, x0, f0));
    }
    best
}

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut e = vec![0.0; v.len()];
        e[0] = 1.0;
        return e;
    }
    v.into_iter().map(|x| x / norm).collect()
}

fn polish(p: &Poly, mut x: Vec<f64>, mut f: f64) -> f64 {
    let mut step = 0.1;
    for _ in 0..POLISH_STEPS {
        let g = p.gradient(&x);
        let radial: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let tangent: Vec<f64> = g.iter().zip(&x).map(|(a, b)| a - radial * b).collect();
        let gnorm = tangent.iter().map(|t| t * t).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        let mut accepted = false;
        while step > 1e-14 {
            let y = normalize(x.iter().zip(&tangent).map(|(a, t)| a - step * t).collect());
            let fy = p.eval(&y);
            if fy < f {
                x = y;
                f = fy;
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::basis::sphere_multiplier;

    #[test]
    fn oracle_examples() {
        assert!((sphere_min_oracle(&sphere_multiplier(2, 2), 50) - 1.0).abs() < 1e-12);
        let p = Poly::from_terms(2, 4, &[(vec![4, 0], 1.0), (vec![0, 4], 1.0)]).unwrap();
        assert!((sphere_min_oracle(&p, 200) - 0.5).abs() < 1e-6);
        assert!(sphere_min_oracle(&Poly::motzkin(), 200) <= 1e-6);
    }
}
