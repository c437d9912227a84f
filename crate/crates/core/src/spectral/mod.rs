//! Principal spectrum points of cooperative matrices with Collatz–Wielandt
//! certificates, a dense QR eigenvalue oracle and the dispersal spectral gap.

mod gap;
mod oracle;

pub use gap::{spectral_gap_beta, GapResult};
pub use oracle::{dense_eigen_oracle, Complex};

use crate::dense::{dot, norm_inf, DenseMatrix};
use crate::error::{invalid, Error, Result};
use crate::operators::BlockOperator;

/// Square matrix with nonnegative off-diagonal entries.
///
/// Row sums are stored separately so that products can be formed as
/// `(Bv)_i = ρ_i v_i + Σ_{j≠i} B_ij (v_j - v_i)`, which stays accurate when
/// large dispersal rates make the diagonal and off-diagonal nearly cancel.
#[derive(Debug, Clone)]
pub struct MetzlerOperator {
    matrix: DenseMatrix,
    row_sums: Vec<f64>,
}

impl MetzlerOperator {
    pub fn new(matrix: DenseMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(invalid(format!(
                "need a nonempty square matrix, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        for i in 0..n {
            for j in 0..n {
                let v = matrix[(i, j)];
                if !v.is_finite() {
                    return Err(invalid(format!("entry ({i}, {j}) is not finite")));
                }
                if i != j && v < 0.0 {
                    return Err(invalid(format!("negative off-diagonal entry at ({i}, {j})")));
                }
            }
        }
        let row_sums = (0..n).map(|i| matrix.row(i).iter().sum()).collect();
        Ok(Self { matrix, row_sums })
    }

    pub(crate) fn with_row_sums(matrix: DenseMatrix, row_sums: Vec<f64>) -> Self {
        debug_assert_eq!(matrix.rows(), row_sums.len());
        Self { matrix, row_sums }
    }

    pub fn dim(&self) -> usize {
        self.row_sums.len()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// `1 + max_i |B_ii|`
    pub fn shift(&self) -> f64 {
        1.0 + self.matrix.diagonal().iter().fold(0.0_f64, |m, d| m.max(d.abs()))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim());
        for (i, o) in out.iter_mut().enumerate() {
            let vi = v[i];
            let mut acc = 0.0;
            for (j, (&b, &vj)) in self.matrix.row(i).iter().zip(v).enumerate() {
                if j != i {
                    acc += b * (vj - vi);
                }
            }
            *o = self.row_sums[i] * vi + acc;
        }
    }
}

impl From<&BlockOperator> for MetzlerOperator {
    fn from(b: &BlockOperator) -> Self {
        b.operator().clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Inverse iteration with a shift kept above the certificate's upper
    /// bound. Converges in a handful of steps at any dispersal rate.
    ShiftInvert,
    /// Power iteration on `B + c I` from the all-ones vector.
    Power,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    pub method: Method,
    /// Iteration cap for the power method.
    pub max_power_iterations: usize,
    /// Iteration cap for inverse iteration.
    pub max_inverse_iterations: usize,
    /// Relative Rayleigh-quotient change that stops the power method.
    pub rel_change_tol: f64,
    /// Relative certificate width that is always accepted.
    pub tight_width: f64,
    /// Relative certificate width accepted once the bracket stops shrinking.
    pub width_tol: f64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            method: Method::ShiftInvert,
            max_power_iterations: 200_000,
            max_inverse_iterations: 200,
            rel_change_tol: 1e-13,
            tight_width: 1e-12,
            width_tol: 1e-8,
        }
    }
}

impl SpectralOptions {
    pub fn power() -> Self {
        Self {
            method: Method::Power,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub lambda_p: f64,
    /// Strictly positive, sup-norm 1. For a block operator the first half
    /// holds the first component.
    pub eigvec: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub lambda_low: f64,
    pub lambda_high: f64,
}

impl SpectrumResult {
    pub fn width(&self) -> f64 {
        self.lambda_high - self.lambda_low
    }

    /// Splits a block eigenvector into its two components.
    pub fn split(&self) -> (&[f64], &[f64]) {
        self.eigvec.split_at(self.eigvec.len() / 2)
    }
}

/// `λ_p` of a cooperative matrix together with its certificate.
pub fn principal_eigen(op: &MetzlerOperator, opts: &SpectralOptions) -> Result<SpectrumResult> {
    principal_eigen_from(op, opts, &vec![1.0; op.dim()])
}

/// Same as [`principal_eigen`] but starting from a given positive vector,
/// typically the eigenvector of a nearby operator.
pub fn principal_eigen_from(op: &MetzlerOperator, opts: &SpectralOptions, start: &[f64]) -> Result<SpectrumResult> {
    if start.len() != op.dim() {
        return Err(invalid("start vector has the wrong length"));
    }
    if start.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid("start vector must be strictly positive"));
    }
    let m = norm_inf(start);
    let v: Vec<f64> = start.iter().map(|x| x / m).collect();
    match opts.method {
        Method::ShiftInvert => shift_invert(op, opts, v),
        Method::Power => power(op, opts, v),
    }
}

/// `λ_p(μ∘K + A)` with default options.
pub fn principal_spectrum_point(b: &BlockOperator) -> Result<SpectrumResult> {
    principal_eigen(b.operator(), &SpectralOptions::default())
}

/// `(min_i (Bφ)_i/φ_i, max_i (Bφ)_i/φ_i)` for strictly positive `φ`.
pub fn collatz_wielandt_bounds(op: &MetzlerOperator, phi: &[f64]) -> Result<(f64, f64)> {
    if phi.len() != op.dim() {
        return Err(invalid(format!(
            "phi has {} entries, operator has dimension {}",
            phi.len(),
            op.dim()
        )));
    }
    if let Some(i) = phi.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(invalid(format!("phi is not strictly positive at index {i}")));
    }
    let bphi = op.apply(phi);
    Ok(ratio_bounds(&bphi, phi))
}

fn ratio_bounds(bv: &[f64], v: &[f64]) -> (f64, f64) {
    bv.iter()
        .zip(v)
        .map(|(b, x)| b / x)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q), hi.max(q)))
}

fn finish(op: &MetzlerOperator, v: Vec<f64>, bv: &[f64], lo: f64, hi: f64, iterations: usize) -> SpectrumResult {
    let rq = (dot(&v, bv) / dot(&v, &v)).clamp(lo, hi);
    let residual = bv
        .iter()
        .zip(&v)
        .fold(0.0_f64, |m, (b, x)| m.max((b - rq * x).abs()));
    debug_assert_eq!(v.len(), op.dim());
    SpectrumResult {
        lambda_p: rq,
        eigvec: v,
        residual,
        iterations,
        lambda_low: lo,
        lambda_high: hi,
    }
}

fn shift_invert(op: &MetzlerOperator, opts: &SpectralOptions, mut v: Vec<f64>) -> Result<SpectrumResult> {
    let mut bv = op.apply(&v);
    let (mut lo, mut hi) = ratio_bounds(&bv, &v);
    let mut prev_width = f64::INFINITY;
    let mut iterations = 0;
    loop {
        let width = hi - lo;
        let mag = 1.0 + lo.abs().max(hi.abs());
        if width <= opts.tight_width * mag {
            break;
        }
        if width <= opts.width_tol * mag && width > 0.5 * prev_width {
            break;
        }
        if iterations >= opts.max_inverse_iterations {
            return Err(Error::Convergence {
                message: "inverse iteration did not tighten the certificate".into(),
                iterations,
                low: lo,
                high: hi,
            });
        }
        let mut delta = width.max(1e-10 * mag);
        let mut next = None;
        for _ in 0..8 {
            if let Some(y) = positive_solve(op, &v, &bv, hi + delta) {
                next = Some(y);
                break;
            }
            delta *= 10.0;
        }
        let Some(y) = next else {
            return Err(Error::Numeric(format!(
                "shifted solve lost positivity near λ ∈ [{lo}, {hi}]"
            )));
        };
        let m = norm_inf(&y);
        v = y.into_iter().map(|t| t / m).collect();
        bv = op.apply(&v);
        let (l, h) = ratio_bounds(&bv, &v);
        lo = l;
        hi = h;
        prev_width = width;
        iterations += 1;
    }
    Ok(finish(op, v, &bv, lo, hi, iterations))
}

/// Solves `(σI − B) y = v` for `σ` above every Collatz–Wielandt ratio of
/// `v`. Working with `C = (σI − B) diag(v)`, whose off-diagonal entries are
/// `−B_ij v_j ≤ 0` and whose row sums `σ v_i − (Bv)_i` are positive, the
/// elimination only ever adds nonnegative numbers, so each component of
/// `y` carries a small relative error however small it is.
fn positive_solve(op: &MetzlerOperator, v: &[f64], bv: &[f64], sigma: f64) -> Option<Vec<f64>> {
    let n = op.dim();
    let mut sums: Vec<f64> = v.iter().zip(bv).map(|(x, b)| sigma * x - b).collect();
    if sums.iter().any(|&t| !(t > 0.0)) {
        return None;
    }
    let b = op.matrix();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        let row = b.row(i);
        let out = &mut p[i * n..(i + 1) * n];
        for j in 0..n {
            if j != i {
                out[j] = row[j] * v[j];
            }
        }
    }
    let mut diag = vec![0.0; n];
    for k in 0..n {
        let (head, tail) = p.split_at_mut((k + 1) * n);
        let pk = &head[k * n + k + 1..(k + 1) * n];
        let d = sums[k] + pk.iter().sum::<f64>();
        diag[k] = d;
        let sk = sums[k];
        for (r, row) in tail.chunks_exact_mut(n).enumerate() {
            let i = k + 1 + r;
            let m = row[k] / d;
            row[k] = m;
            if m != 0.0 {
                for (x, &u) in row[k + 1..].iter_mut().zip(pk) {
                    *x += m * u;
                }
                sums[i] += m * sk;
            }
        }
    }
    let mut y = v.to_vec();
    for i in 0..n {
        let row = &p[i * n..i * n + i];
        y[i] += dot(row, &y[..i]);
    }
    for k in (0..n).rev() {
        let row = &p[k * n + k + 1..(k + 1) * n];
        y[k] = (y[k] + dot(row, &y[k + 1..])) / diag[k];
    }
    let out: Vec<f64> = y.iter().zip(v).map(|(z, x)| z * x).collect();
    out.iter().all(|t| *t > 0.0 && t.is_finite()).then_some(out)
}

fn power(op: &MetzlerOperator, opts: &SpectralOptions, mut v: Vec<f64>) -> Result<SpectrumResult> {
    let c = op.shift();
    let mut bv = op.apply(&v);
    let mut prev = f64::NAN;
    let mut iterations = 0;
    loop {
        let rq = dot(&v, &bv) / dot(&v, &v);
        let (lo, hi) = ratio_bounds(&bv, &v);
        let settled = (rq - prev).abs() < opts.rel_change_tol * (1.0 + rq.abs());
        let scale = 1.0 + rq.abs();
        let residual = bv.iter().zip(&v).fold(0.0_f64, |m, (b, x)| m.max((b - rq * x).abs()));
        if hi - lo == 0.0 || (settled && hi - lo <= opts.width_tol * scale && residual <= 0.1 * opts.width_tol * scale) {
            return Ok(finish(op, v, &bv, lo, hi, iterations));
        }
        if iterations >= opts.max_power_iterations {
            return Err(Error::Convergence {
                message: "power iteration hit the iteration cap".into(),
                iterations,
                low: lo,
                high: hi,
            });
        }
        prev = rq;
        let y: Vec<f64> = bv.iter().zip(&v).map(|(b, x)| b + c * x).collect();
        let m = norm_inf(&y);
        v = y.into_iter().map(|t| t / m).collect();
        op.apply_into(&v, &mut bv);
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CoefficientSpec, DispersalRates, Grid, KernelSpec};
    use crate::operators::KernelMatrix;

    fn block(spec: &CoefficientSpec, n: usize, mu1: f64, mu2: f64) -> BlockOperator {
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let c = spec.sample(&g).unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        BlockOperator::assemble(DispersalRates::new(mu1, mu2).unwrap(), &k, &c).unwrap()
    }

    fn cc1() -> CoefficientSpec {
        CoefficientSpec::constants(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, KernelSpec::Gaussian { sigma: 0.2 })
    }

    #[test]
    fn constants_give_local_eigenvalue() {
        let expected = (-3.0 + 5f64.sqrt()) / 2.0;
        for (mu1, mu2) in [(1.0, 1.0), (1e-3, 50.0), (1e4, 1e4)] {
            for method in [SpectralOptions::default(), SpectralOptions::power()] {
                let b = block(&cc1(), 12, mu1, mu2);
                let r = principal_eigen(b.operator(), &method).unwrap();
                assert!((r.lambda_p - expected).abs() < 1e-10, "{mu1} {mu2} {}", r.lambda_p);
                assert!(r.lambda_low <= r.lambda_p && r.lambda_p <= r.lambda_high);
                assert!(r.eigvec.iter().all(|&v| v > 0.0));
                assert!(r.residual <= 1e-9 * (1.0 + r.lambda_p.abs()), "{mu1} {mu2} {:?} {} {}", method.method, r.residual, r.iterations);
            }
        }
    }

    #[test]
    fn scalar_dispersal_alone_is_zero() {
        let g = Grid::midpoint(15, 0.0, 1.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma: 0.2 }, &g);
        let r = principal_eigen(&k.scalar_operator(2.0, &[0.0; 15]), &SpectralOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.lambda_p.abs() < 1e-15);
    }

    #[test]
    fn cw_bounds_on_ones() {
        let b = block(&cc1(), 6, 1.0, 1.0);
        let (lo, hi) = collatz_wielandt_bounds(b.operator(), &[1.0; 12]).unwrap();
        assert!((lo + 1.0).abs() < 1e-14 && hi.abs() < 1e-14);
        let mut phi = vec![1.0; 12];
        phi[3] = 0.0;
        assert!(collatz_wielandt_bounds(b.operator(), &phi).is_err());
    }

    #[test]
    fn rejects_non_metzler() {
        let m = DenseMatrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]);
        assert!(MetzlerOperator::new(m).is_err());
    }

    #[test]
    fn two_by_two_matches_closed_form() {
        let m = DenseMatrix::from_rows(&[vec![-1.0, 4.0], vec![1.0, -1.0]]);
        let op = MetzlerOperator::new(m).unwrap();
        let r = principal_eigen(&op, &SpectralOptions::default()).unwrap();
        assert!((r.lambda_p - 1.0).abs() < 1e-12);
        assert!((r.eigvec[0] - 1.0).abs() < 1e-12 && (r.eigvec[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_cap_reports_bracket() {
        let b = block(&cc1(), 6, 1.0, 1.0);
        let opts = SpectralOptions {
            max_power_iterations: 1,
            ..SpectralOptions::power()
        };
        match principal_eigen(b.operator(), &opts) {
            Err(Error::Convergence { low, high, .. }) => assert!(low <= high),
            other => panic!("{other:?}"),
        }
    }
}
