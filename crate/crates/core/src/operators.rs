//! Discrete nonlocal dispersal operator, the cooperative block operator
//! `μ∘K + A`, resolvent solves and the pure-dispersal semigroup.

use crate::dense::{DenseMatrix, Lu};
use crate::domain::{CoefficientSet, DispersalRates, Field, Grid, KernelSpec};
use crate::error::{invalid, Error, Result};
use crate::spectral::{principal_eigen, MetzlerOperator, SpectralOptions};

/// Nyström matrix of `(Ku)(x) = ∫ κ(x,y) (u(y) - u(x)) dy` on a grid.
///
/// `M_ij = w_j κ(x_i, x_j)` off the diagonal and `M_ii = -Σ_{j≠i} M_ij`,
/// so every row sums to zero.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    matrix: DenseMatrix,
    kvec: Field,
    grid: Grid,
}

impl KernelMatrix {
    /// Assembles the matrix without checking the kernel hypotheses.
    pub fn assemble(kernel: &KernelSpec, grid: &Grid) -> Self {
        let n = grid.len();
        let nodes = grid.nodes();
        let w = grid.weights();
        let mut matrix = DenseMatrix::zeros(n, n);
        let mut kvec = vec![0.0; n];
        for i in 0..n {
            let row = matrix.row_mut(i);
            let mut off = 0.0;
            for j in 0..n {
                let v = w[j] * kernel.eval(nodes[i], nodes[j]);
                kvec[i] += v;
                if j != i {
                    row[j] = v;
                    off += v;
                }
            }
            row[i] = -off;
        }
        Self {
            matrix,
            kvec: Field(kvec),
            grid: grid.clone(),
        }
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// `K(x_i) = Σ_j w_j κ(x_i, x_j)`
    pub fn kvec(&self) -> &Field {
        &self.kvec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `(M u)_i` in difference form `Σ_{j≠i} M_ij (u_j - u_i)`.
    pub fn apply(&self, u: &[f64]) -> Result<Field> {
        if u.len() != self.len() {
            return Err(invalid(format!(
                "field has {} values, kernel matrix has {} rows",
                u.len(),
                self.len()
            )));
        }
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        Ok(Field(out))
    }

    pub(crate) fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.matrix.row(i);
            let ui = u[i];
            let mut acc = 0.0;
            for (j, (&m, &uj)) in row.iter().zip(u).enumerate() {
                if j != i {
                    acc += m * (uj - ui);
                }
            }
            *o = acc;
        }
    }

    /// Dense `ξ M + diag(η)` together with its exact row sums `η`.
    pub fn scalar_operator(&self, xi: f64, eta: &[f64]) -> MetzlerOperator {
        assert_eq!(eta.len(), self.len());
        let mut m = self.matrix.clone();
        m.scale(xi);
        for (i, &h) in eta.iter().enumerate() {
            m[(i, i)] += h;
        }
        MetzlerOperator::with_row_sums(m, eta.to_vec())
    }
}

/// Validates the coefficients and assembles the kernel matrix.
pub fn assemble_kernel_matrix(c: &CoefficientSet, grid: &Grid) -> Result<KernelMatrix> {
    c.ensure_valid(grid)?;
    Ok(KernelMatrix::assemble(&c.kernel, grid))
}

/// `B = [[μ₁M − diag(a+s), diag(r)], [diag(s), μ₂M − diag(e)]]`.
#[derive(Debug, Clone)]
pub struct BlockOperator {
    op: MetzlerOperator,
    mu: DispersalRates,
    shift: f64,
}

impl BlockOperator {
    pub fn assemble(mu: DispersalRates, kernel: &KernelMatrix, c: &CoefficientSet) -> Result<Self> {
        let n = kernel.len();
        if c.len() != n {
            return Err(invalid(format!(
                "coefficients have {} nodes, kernel matrix has {n}",
                c.len()
            )));
        }
        let m = kernel.matrix();
        let mut b = DenseMatrix::zeros(2 * n, 2 * n);
        let mut row_sums = vec![0.0; 2 * n];
        for i in 0..n {
            let as_i = c.a[i] + c.s[i];
            for j in 0..n {
                b[(i, j)] = mu.mu1() * m[(i, j)];
                b[(n + i, n + j)] = mu.mu2() * m[(i, j)];
            }
            b[(i, i)] -= as_i;
            b[(n + i, n + i)] -= c.e[i];
            b[(i, n + i)] = c.r[i];
            b[(n + i, i)] = c.s[i];
            row_sums[i] = c.r[i] - as_i;
            row_sums[n + i] = c.s[i] - c.e[i];
        }
        let shift = 1.0 + b.diagonal().iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
        Ok(Self {
            op: MetzlerOperator::with_row_sums(b, row_sums),
            mu,
            shift,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.op.matrix()
    }

    pub fn operator(&self) -> &MetzlerOperator {
        &self.op
    }

    pub fn mu(&self) -> DispersalRates {
        self.mu
    }

    /// `1 + max_i |B_ii|`; `B + shift·I` is entrywise nonnegative.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Number of grid nodes (half the matrix dimension).
    pub fn nodes(&self) -> usize {
        self.op.dim() / 2
    }

    pub fn apply(&self, u1: &[f64], u2: &[f64]) -> (Field, Field) {
        let n = self.nodes();
        let mut v = Vec::with_capacity(2 * n);
        v.extend_from_slice(u1);
        v.extend_from_slice(u2);
        let out = self.op.apply(&v);
        (Field(out[..n].to_vec()), Field(out[n..].to_vec()))
    }
}

/// `Ψ = (νI − (ξM − diag(l)))⁻¹ z` for `ν` above the principal spectrum
/// point of `ξM − diag(l)`.
#[derive(Debug, Clone)]
pub struct Resolvent {
    op: MetzlerOperator,
    lambda_p: f64,
}

impl Resolvent {
    pub fn new(kernel: &KernelMatrix, xi: f64, l: &[f64], opts: &SpectralOptions) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(invalid(format!("xi must be positive, got {xi}")));
        }
        if l.len() != kernel.len() {
            return Err(invalid("l has the wrong length"));
        }
        let eta: Vec<f64> = l.iter().map(|v| -v).collect();
        let op = kernel.scalar_operator(xi, &eta);
        let lambda_p = principal_eigen(&op, opts)?.lambda_p;
        Ok(Self { op, lambda_p })
    }

    /// `λ_p(ξK − l)`
    pub fn lambda_p(&self) -> f64 {
        self.lambda_p
    }

    pub fn factor(&self, nu: f64) -> Result<Lu> {
        if !(nu > self.lambda_p) {
            return Err(Error::Precondition(format!(
                "nu = {nu} is not above the principal spectrum point {}",
                self.lambda_p
            )));
        }
        let mut a = self.op.matrix().clone();
        a.scale(-1.0);
        a.shifted(nu).lu()
    }

    pub fn solve(&self, nu: f64, z: &[f64]) -> Result<Field> {
        let lu = self.factor(nu)?;
        Ok(Field(lu.solve(z)))
    }

    /// `‖(νI − ξM + diag(l)) Ψ − z‖∞`
    pub fn residual(&self, nu: f64, psi: &[f64], z: &[f64]) -> f64 {
        let bpsi = self.op.apply(psi);
        bpsi.iter()
            .zip(psi)
            .zip(z)
            .fold(0.0_f64, |m, ((b, p), zi)| m.max((nu * p - b - zi).abs()))
    }
}

/// One-shot resolvent solve; computes the principal spectrum point first.
pub fn resolvent_solve(kernel: &KernelMatrix, xi: f64, l: &[f64], nu: f64, z: &[f64]) -> Result<Field> {
    Resolvent::new(kernel, xi, l, &SpectralOptions::default())?.solve(nu, z)
}

/// Explicit Euler for `∂ₜu = K u` up to time `t`. The step is reduced so
/// that an integer number of steps lands exactly on `t`.
pub fn evolve_linear(kernel: &KernelMatrix, u0: &[f64], t: f64, dt: f64) -> Result<Field> {
    if u0.len() != kernel.len() {
        return Err(invalid("initial field has the wrong length"));
    }
    let dt_max = 0.5 / kernel.kvec().norm_inf();
    if !(dt > 0.0) || dt > dt_max {
        return Err(invalid(format!("unstable step dt = {dt}, need 0 < dt <= {dt_max}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("invalid final time {t}")));
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut u = u0.to_vec();
    let mut ku = vec![0.0; u.len()];
    for _ in 0..steps {
        kernel.apply_into(&u, &mut ku);
        for (x, k) in u.iter_mut().zip(&ku) {
            *x += h * k;
        }
    }
    Ok(Field(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::CoefficientSpec;

    fn uniform(n: usize) -> KernelMatrix {
        KernelMatrix::assemble(&KernelSpec::Uniform { value: 1.0 }, &Grid::midpoint(n, 0.0, 1.0).unwrap())
    }

    #[test]
    fn two_node_uniform_kernel() {
        let k = uniform(2);
        assert_eq!(k.matrix().to_rows(), vec![vec![-0.5, 0.5], vec![0.5, -0.5]]);
        assert_eq!(k.kvec().0, vec![1.0, 1.0]);
    }

    #[test]
    fn rows_sum_to_zero_and_mass_is_conserved() {
        let g = Grid::midpoint(37, 0.0, 2.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma: 0.3 }, &g);
        let ones = vec![1.0; 37];
        assert!(k.matrix().matvec(&ones).iter().all(|v| v.abs() <= 1e-13));
        let u: Vec<f64> = g.nodes().iter().map(|x| (3.0 * x).sin() + x * x).collect();
        let ku = k.apply(&u).unwrap();
        let mass = g.integrate(&ku).unwrap();
        assert!(mass.abs() <= 1e-12 * crate::dense::norm_inf(&u), "{mass}");
    }

    #[test]
    fn uniform_kernel_closed_form() {
        let k = uniform(10);
        let g = k.grid().clone();
        let u: Vec<f64> = g.nodes().iter().map(|x| x * x).collect();
        let mean = g.integrate(&u).unwrap();
        let ku = k.apply(&u).unwrap();
        for (v, ui) in ku.iter().zip(&u) {
            assert!((v - (mean - ui)).abs() < 1e-14);
        }
    }

    #[test]
    fn single_node_block_is_local_matrix() {
        let g = Grid::single(0.0, 1.0).unwrap();
        let spec = CoefficientSpec::constants(0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 4.0, 1.0, KernelSpec::Uniform { value: 1.0 });
        let c = spec.sample(&g).unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let b = BlockOperator::assemble(DispersalRates::new(3.0, 5.0).unwrap(), &k, &c).unwrap();
        assert_eq!(b.matrix().to_rows(), vec![vec![-1.0, 4.0], vec![1.0, -1.0]]);
        assert_eq!(b.shift(), 2.0);
    }

    #[test]
    fn block_on_constants() {
        let g = Grid::midpoint(9, 0.0, 1.0).unwrap();
        let spec = CoefficientSpec::constants(0.5, 1.0, 0.0, 0.7, 1.0, 0.0, 2.0, 1.5, KernelSpec::Gaussian { sigma: 0.2 });
        let c = spec.sample(&g).unwrap();
        let k = assemble_kernel_matrix(&c, &g).unwrap();
        let b = BlockOperator::assemble(DispersalRates::new(10.0, 0.1).unwrap(), &k, &c).unwrap();
        let (o1, o2) = b.apply(&[1.0; 9], &[1.0; 9]);
        assert!(o1.iter().all(|v| (v - (2.0 - 2.0)).abs() < 1e-14));
        assert!(o2.iter().all(|v| (v - (1.5 - 0.7)).abs() < 1e-14));
        let m = b.matrix();
        for i in 0..18 {
            for j in 0..18 {
                if i != j {
                    assert!(m[(i, j)] >= 0.0);
                }
            }
            assert!(m[(i, i)] + b.shift() > 0.0);
        }
    }

    #[test]
    fn resolvent_constant_case() {
        let k = uniform(8);
        let psi = resolvent_solve(&k, 1.0, &[1.0; 8], 1.0, &[2.0; 8]).unwrap();
        assert!(psi.iter().all(|v| (v - 1.0).abs() < 1e-13));
        let zero = resolvent_solve(&k, 1.0, &[1.0; 8], 1.0, &[0.0; 8]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolvent_rejects_nu_below_spectrum() {
        let k = uniform(8);
        // λ_p(K - 1) = -1
        let err = resolvent_solve(&k, 1.0, &[1.0; 8], -1.5, &[1.0; 8]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn evolve_keeps_constants_and_mass() {
        let g = Grid::midpoint(20, 0.0, 1.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma: 0.2 }, &g);
        let c = evolve_linear(&k, &[3.0; 20], 5.0, 0.1).unwrap();
        assert!(c.iter().all(|v| (v - 3.0).abs() < 1e-13));
        let u0: Vec<f64> = g.nodes().iter().map(|x| (7.0 * x).cos()).collect();
        let u = evolve_linear(&k, &u0, 10.0, 0.1).unwrap();
        let drift = (g.integrate(&u).unwrap() - g.integrate(&u0).unwrap()).abs();
        assert!(drift < 1e-8);
        assert!(evolve_linear(&k, &u0, 1.0, 10.0).is_err());
    }
}
