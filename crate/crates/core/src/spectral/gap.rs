use crate::domain::{Field, Grid};
use crate::error::{invalid, Error, Result};
use crate::operators::KernelMatrix;

#[derive(Debug, Clone)]
pub struct GapResult {
    /// Smallest eigenvalue of `-M` on weighted mean-zero fields.
    pub beta_star: f64,
    /// Mean-zero eigenvector, unit weighted `L²` norm.
    pub eigvec: Field,
    pub iterations: usize,
}

const MAX_ITERATIONS: usize = 100_000;

/// Power iteration on `σI + M` restricted to the weighted mean-zero
/// subspace, with the weighted Rayleigh quotient as the estimate.
pub fn spectral_gap_beta(k: &KernelMatrix, g: &Grid) -> Result<GapResult> {
    let n = k.len();
    if g.len() != n {
        return Err(invalid("grid and kernel matrix differ in size"));
    }
    let w = g.weights();
    let wsum: f64 = w.iter().sum();
    let project = |v: &mut [f64]| {
        let mean = w.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() / wsum;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let wdot = |a: &[f64], b: &[f64]| -> f64 { w.iter().zip(a).zip(b).map(|((wi, x), y)| wi * x * y).sum() };

    // σI + M is positive semidefinite on the mean-zero space once σ
    // exceeds the Gershgorin bound 2 max_i |M_ii|.
    let diag_max = k.matrix().diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let sigma = (k.kvec().norm_inf() + 1.0).max(2.0 * diag_max);

    let (lo, hi) = g.domain();
    let mid = 0.5 * (lo + hi);
    let len = hi - lo;
    let mut v: Vec<f64> = g
        .nodes()
        .iter()
        .map(|&x| {
            let t = (x - mid) / len;
            t + 0.1 * t * t
        })
        .collect();
    project(&mut v);
    let norm = wdot(&v, &v).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Numeric("mean-zero subspace is trivial".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);

    let mut mv = vec![0.0; n];
    let mut prev = f64::NAN;
    for it in 0..MAX_ITERATIONS {
        k.apply_into(&v, &mut mv);
        let rq = wdot(&v, &mv);
        if (rq - prev).abs() <= 1e-15 * (1.0 + rq.abs()) {
            return Ok(GapResult {
                beta_star: -rq,
                eigvec: Field(v),
                iterations: it,
            });
        }
        prev = rq;
        let mut y: Vec<f64> = v.iter().zip(&mv).map(|(x, m)| sigma * x + m).collect();
        project(&mut y);
        let norm = wdot(&y, &y).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Numeric("gap iteration collapsed".into()));
        }
        v = y.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::Convergence {
        message: "spectral gap iteration hit the iteration cap".into(),
        iterations: MAX_ITERATIONS,
        low: -prev,
        high: -prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::KernelSpec;

    #[test]
    fn uniform_kernel_gap_is_its_value() {
        let g = Grid::midpoint(25, 0.0, 1.0).unwrap();
        for c in [1.0, 2.5] {
            let k = KernelMatrix::assemble(&KernelSpec::Uniform { value: c }, &g);
            let r = spectral_gap_beta(&k, &g).unwrap();
            assert!((r.beta_star - c).abs() < 1e-12, "{}", r.beta_star);
            assert!(g.integrate(&r.eigvec).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_gap_is_positive() {
        let g = Grid::midpoint(101, 0.0, 1.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma: 0.2 }, &g);
        let r = spectral_gap_beta(&k, &g).unwrap();
        assert!(r.beta_star > 0.0 && r.beta_star < k.kvec().norm_inf());
    }
}
