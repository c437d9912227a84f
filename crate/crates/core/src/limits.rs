//! Limit quantities of the principal spectrum point for small, large and
//! mixed dispersal rates, and the monotone root equations behind them.

use std::fmt;

use crate::domain::{CoefficientSet, DispersalRates, Field, Grid};
use crate::error::{invalid, Error, Result};
use crate::operators::{BlockOperator, KernelMatrix, Resolvent};
use crate::spectral::{principal_eigen, principal_eigen_from, SpectralOptions, SpectrumResult};

const MAX_BISECTIONS: usize = 200;
const MAX_EXPANSIONS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootKind {
    Interior,
    /// The equation has no zero in its domain; the value is the domain edge.
    Boundary,
}

impl fmt::Display for RootKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootKind::Interior => "interior-root",
            RootKind::Boundary => "boundary-value",
        })
    }
}

#[derive(Debug, Clone)]
pub struct RootResult {
    pub value: f64,
    pub kind: RootKind,
    /// Final bracket; for a boundary value both ends are the probe point.
    pub bracket: (f64, f64),
    /// `|equation(value)|`, or its value at the probe point for boundaries.
    pub residual: f64,
}

/// `ε_b = 1e-8 (1 + |edge|)`
pub fn edge_offset(edge: f64) -> f64 {
    1e-8 * (1.0 + edge.abs())
}

/// Bisection for a decreasing `f` with `f(lo) > 0 > f(hi)`.
fn bisect<F>(f: &mut F, mut lo: f64, mut hi: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let value = 0.5 * (lo + hi);
    Ok(RootResult {
        value,
        kind: RootKind::Interior,
        bracket: (lo, hi),
        residual: f(value)?.abs(),
    })
}

/// Finds the zero of a decreasing function on `(edge, ∞)`, returning
/// `edge` itself as a boundary value when `f(edge + ε_b) ≤ 0`.
fn decreasing_root<F>(mut f: F, edge: f64, boundary: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let lo = edge + edge_offset(edge);
    let f_lo = f(lo)?;
    if f_lo <= 0.0 {
        return Ok(RootResult {
            value: boundary,
            kind: RootKind::Boundary,
            bracket: (lo, lo),
            residual: f_lo,
        });
    }
    let mut lo = lo;
    let mut step = 1.0_f64.max(lo.abs());
    let mut hi = lo + step;
    let mut expansions = 0;
    while f(hi)? >= 0.0 {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
        expansions += 1;
        if expansions > MAX_EXPANSIONS || !hi.is_finite() {
            return Err(Error::Numeric("no sign change found while expanding the bracket".into()));
        }
    }
    bisect(&mut f, lo, hi)
}

/// Maximal eigenvalue of `[[−a_s, r], [s, −e]]` and its eigenvector
/// normalized to `Q₁ + Q₂ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalEigen {
    pub lambda: f64,
    pub q1: f64,
    pub q2: f64,
}

pub fn lambda_matrix_2x2(a_s: f64, e: f64, r: f64, s: f64) -> Result<LocalEigen> {
    for (name, v) in [("a+s", a_s), ("e", e), ("r", r), ("s", s)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(format!("{name} must be finite and nonnegative, got {v}")));
        }
    }
    let rs = r * s;
    if rs == 0.0 {
        let lambda = (-a_s).max(-e);
        let (q1, q2) = if e < a_s {
            if r > 0.0 {
                (r / (r + a_s - e), (a_s - e) / (r + a_s - e))
            } else {
                (0.0, 1.0)
            }
        } else if a_s < e {
            if s > 0.0 {
                ((e - a_s) / (e - a_s + s), s / (e - a_s + s))
            } else {
                (1.0, 0.0)
            }
        } else if r > 0.0 {
            (1.0, 0.0)
        } else if s > 0.0 {
            (0.0, 1.0)
        } else {
            (0.5, 0.5)
        };
        return Ok(LocalEigen { lambda, q1, q2 });
    }
    let d = a_s - e;
    let root = (d * d + 4.0 * rs).sqrt();
    // Λ + a_s and Λ + e, each without cancellation
    let (plus_as, plus_e) = if d >= 0.0 {
        (0.5 * (root + d), 2.0 * rs / (root + d))
    } else {
        (2.0 * rs / (root - d), 0.5 * (root - d))
    };
    let lambda = if a_s >= e { plus_e - e } else { plus_as - a_s };
    let den = r + plus_as;
    Ok(LocalEigen {
        lambda,
        q1: r / den,
        q2: plus_as / den,
    })
}

#[derive(Debug, Clone)]
pub struct LambdaField {
    pub lambda: Field,
    pub lambda_max: f64,
    pub q1: Field,
    pub q2: Field,
}

/// Nodewise `Λ(x)` with `a_s = a + s`.
pub fn lambda_field(c: &CoefficientSet) -> Result<LambdaField> {
    let n = c.len();
    let (mut lambda, mut q1, mut q2) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let le = lambda_matrix_2x2(c.a[i] + c.s[i], c.e[i], c.r[i], c.s[i])?;
        lambda.push(le.lambda);
        q1.push(le.q1);
        q2.push(le.q2);
    }
    let lambda = Field(lambda);
    Ok(LambdaField {
        lambda_max: lambda.max(),
        lambda,
        q1: Field(q1),
        q2: Field(q2),
    })
}

/// `Λ̃`, the maximal eigenvalue of the spatially averaged 2×2 matrix.
pub fn lambda_tilde(c: &CoefficientSet, g: &Grid) -> Result<f64> {
    let as_hat = g.hat_average(&c.a)? + g.hat_average(&c.s)?;
    Ok(lambda_matrix_2x2(as_hat, g.hat_average(&c.e)?, g.hat_average(&c.r)?, g.hat_average(&c.s)?)?.lambda)
}

/// Local basic reproduction function `r s / ((a+s) e)`.
pub fn r0_field(c: &CoefficientSet) -> Result<Field> {
    let bad: Vec<usize> = (0..c.len()).filter(|&i| (c.a[i] + c.s[i]) * c.e[i] == 0.0).collect();
    if !bad.is_empty() {
        return Err(Error::Domain {
            message: "(a+s)·e vanishes".into(),
            nodes: bad,
        });
    }
    Ok(Field(
        (0..c.len())
            .map(|i| c.r[i] * c.s[i] / ((c.a[i] + c.s[i]) * c.e[i]))
            .collect(),
    ))
}

fn check_nonnegative(name: &str, f: &[f64], n: usize) -> Result<()> {
    if f.len() != n {
        return Err(invalid(format!("{name} has {} values, expected {n}", f.len())));
    }
    if let Some(i) = f.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid(format!("{name} must be nonnegative (node {i})")));
    }
    Ok(())
}

/// `L(ν) = λ_p(ξM + diag(rs/(ν+h) − l)) − ν`
pub struct Prop1Equation<'a> {
    kernel: &'a KernelMatrix,
    xi: f64,
    h: &'a [f64],
    l: &'a [f64],
    rs: &'a [f64],
    opts: SpectralOptions,
    warm: Option<Vec<f64>>,
}

impl<'a> Prop1Equation<'a> {
    pub fn new(kernel: &'a KernelMatrix, xi: f64, h: &'a [f64], l: &'a [f64], rs: &'a [f64]) -> Result<Self> {
        let n = kernel.len();
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(invalid(format!("xi must be positive, got {xi}")));
        }
        check_nonnegative("h", h, n)?;
        check_nonnegative("l", l, n)?;
        check_nonnegative("rs", rs, n)?;
        Ok(Self {
            kernel,
            xi,
            h,
            l,
            rs,
            opts: SpectralOptions::default(),
            warm: None,
        })
    }

    /// `−h_min`
    pub fn edge(&self) -> f64 {
        -self.h.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn spectrum(&mut self, nu: f64) -> Result<SpectrumResult> {
        if !(nu > self.edge()) {
            return Err(invalid(format!("nu = {nu} is outside (−h_min, ∞)")));
        }
        let eta: Vec<f64> = (0..self.h.len())
            .map(|i| self.rs[i] / (nu + self.h[i]) - self.l[i])
            .collect();
        let op = self.kernel.scalar_operator(self.xi, &eta);
        let res = match &self.warm {
            Some(v) => principal_eigen_from(&op, &self.opts, v)?,
            None => principal_eigen(&op, &self.opts)?,
        };
        self.warm = Some(res.eigvec.clone());
        Ok(res)
    }

    pub fn eval(&mut self, nu: f64) -> Result<f64> {
        Ok(self.spectrum(nu)?.lambda_p - nu)
    }
}

/// Zero of `L(ν)` on `(−h_min, ∞)`; boundary value `−h_min` when `L ≤ 0`
/// at the domain edge.
pub fn prop1_root(kernel: &KernelMatrix, xi: f64, h: &[f64], l: &[f64], rs: &[f64]) -> Result<RootResult> {
    let mut eq = Prop1Equation::new(kernel, xi, h, l, rs)?;
    let edge = eq.edge();
    decreasing_root(|nu| eq.eval(nu), edge, edge)
}

/// `Ψ̃(ν) = ∫ q (νI − ξM + diag(l))⁻¹ z − ∫ h − ν|Ω|`
pub struct Prop2Equation<'a> {
    resolvent: Resolvent,
    grid: &'a Grid,
    q: &'a [f64],
    z: &'a [f64],
    int_h: f64,
}

impl<'a> Prop2Equation<'a> {
    pub fn new(kernel: &'a KernelMatrix, xi: f64, q: &'a [f64], z: &'a [f64], l: &'a [f64], h: &[f64]) -> Result<Self> {
        let n = kernel.len();
        for (name, f) in [("q", q), ("z", z), ("l", l), ("h", h)] {
            check_nonnegative(name, f, n)?;
        }
        if q.iter().all(|&v| v == 0.0) || z.iter().all(|&v| v == 0.0) {
            return Err(invalid("q and z must not vanish identically"));
        }
        let resolvent = Resolvent::new(kernel, xi, l, &SpectralOptions::default())?;
        let grid = kernel.grid();
        Ok(Self {
            resolvent,
            grid,
            q,
            z,
            int_h: grid.integrate(h)?,
        })
    }

    /// `λ_p(ξK − l)`
    pub fn edge(&self) -> f64 {
        self.resolvent.lambda_p()
    }

    pub fn psi(&self, nu: f64) -> Result<Field> {
        self.resolvent.solve(nu, self.z)
    }

    pub fn eval(&self, nu: f64) -> Result<f64> {
        let psi = self.psi(nu)?;
        let qpsi: Vec<f64> = self.q.iter().zip(psi.iter()).map(|(a, b)| a * b).collect();
        Ok(self.grid.integrate(&qpsi)? - self.int_h - nu * self.grid.measure())
    }

    /// Residuals of the coupled system satisfied at a root: the scalar
    /// balance and `νψ = ξKψ − lψ + z`.
    pub fn coupled_residual(&self, nu: f64) -> Result<f64> {
        let psi = self.psi(nu)?;
        let scalar = self.eval(nu)?.abs();
        let line = self.resolvent.residual(nu, &psi, self.z);
        Ok(scalar.max(line))
    }
}

/// Zero of `Ψ̃` on `(λ_p(ξK − l), ∞)`; boundary value `λ_p(ξK − l)` when
/// `Ψ̃ ≤ 0` there.
pub fn prop2_root(kernel: &KernelMatrix, xi: f64, q: &[f64], z: &[f64], l: &[f64], h: &[f64]) -> Result<RootResult> {
    let eq = Prop2Equation::new(kernel, xi, q, z, l, h)?;
    let edge = eq.edge();
    let root = decreasing_root(|nu| eq.eval(nu), edge, edge)?;
    if root.kind == RootKind::Interior {
        let res = eq.coupled_residual(root.value)?;
        let scale = 1.0 + crate::dense::norm_inf(z) + eq.int_h.abs() + root.value.abs() * kernel.grid().measure();
        if res > 1e-8 * scale {
            return Err(Error::Numeric(format!("coupled system residual {res:e} at ν = {}", root.value)));
        }
    }
    Ok(root)
}

/// `∫ q (l − ξK)⁻¹ z − ∫ h`; requires `λ_p(ξK − l) < 0`.
pub fn sigma_sign(kernel: &KernelMatrix, xi: f64, q: &[f64], z: &[f64], h: &[f64], l: &[f64]) -> Result<f64> {
    let resolvent = Resolvent::new(kernel, xi, l, &SpectralOptions::default())?;
    if !(resolvent.lambda_p() < 0.0) {
        return Err(Error::Precondition(format!(
            "λ_p(ξK − l) = {} is not negative",
            resolvent.lambda_p()
        )));
    }
    let g = kernel.grid();
    let psi = resolvent.solve(0.0, z)?;
    let qpsi: Vec<f64> = q.iter().zip(psi.iter()).map(|(a, b)| a * b).collect();
    Ok(g.integrate(&qpsi)? - g.integrate(h)?)
}

/// Which stage disperses slowly along the mixed path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaVariant {
    /// `μ₁ → 0`, `μ₂ → ∞`: `(h, l) = (a+s, e)`.
    JuvenileSlowAdultFast,
    /// `μ₁ → ∞`, `μ₂ → 0`: `(h, l) = (e, a+s)`.
    JuvenileFastAdultSlow,
}

/// `𝓛(η) = ∫ (rs/(η+h) − (l+η))`
pub fn eta_equation(c: &CoefficientSet, g: &Grid, variant: EtaVariant, eta: f64) -> Result<f64> {
    let (h, l) = eta_fields(c, variant);
    eta_eval(g, &c.rs(), &h, &l, eta)
}

fn eta_fields(c: &CoefficientSet, variant: EtaVariant) -> (Field, Field) {
    match variant {
        EtaVariant::JuvenileSlowAdultFast => (c.a_plus_s(), c.e.clone()),
        EtaVariant::JuvenileFastAdultSlow => (c.e.clone(), c.a_plus_s()),
    }
}

fn eta_eval(g: &Grid, rs: &[f64], h: &[f64], l: &[f64], eta: f64) -> Result<f64> {
    let vals: Vec<f64> = (0..rs.len()).map(|i| rs[i] / (eta + h[i]) - (l[i] + eta)).collect();
    g.integrate(&vals)
}

/// `η₁*` or `η₂*`.
pub fn eta_star(variant: EtaVariant, c: &CoefficientSet, g: &Grid) -> Result<RootResult> {
    let (h, l) = eta_fields(c, variant);
    let rs = c.rs();
    let edge = -h.min();
    decreasing_root(|eta| eta_eval(g, &rs, &h, &l, eta), edge, edge)
}

/// `λ_p(μ₂K + diag(rs/(a+s) − e))`, decreasing in `μ₂`.
pub fn mu2_threshold_lambda(kernel: &KernelMatrix, c: &CoefficientSet, mu2: f64) -> Result<SpectrumResult> {
    let eta = mu2_eta(c);
    principal_eigen(&kernel.scalar_operator(mu2, &eta), &SpectralOptions::default())
}

fn mu2_eta(c: &CoefficientSet) -> Vec<f64> {
    (0..c.len())
        .map(|i| c.r[i] * c.s[i] / (c.a[i] + c.s[i]) - c.e[i])
        .collect()
}

pub const MU2_BRACKET: (f64, f64) = (1e-3, 1e3);

/// Dispersal rate `μ₂*` at which `λ_p(μ₂K + diag(rs/(a+s) − e))` changes
/// sign. Absence is reported as [`Error::NoRoot`].
pub fn mu2_star(kernel: &KernelMatrix, c: &CoefficientSet, bracket: (f64, f64)) -> Result<RootResult> {
    let g = kernel.grid();
    let as_min = c.a_plus_s().min();
    if !(as_min > 0.0) {
        return Err(Error::NoRoot(format!("(a+s)_min = {as_min} is not positive")));
    }
    let eta1 = eta_star(EtaVariant::JuvenileSlowAdultFast, c, g)?.value;
    let lmax = lambda_field(c)?.lambda_max;
    if !(eta1 < 0.0 && 0.0 < lmax) {
        return Err(Error::NoRoot(format!(
            "need η₁* < 0 < Λ_max, have η₁* = {eta1}, Λ_max = {lmax}"
        )));
    }
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("invalid μ₂ bracket ({lo}, {hi})")));
    }
    let eta = mu2_eta(c);
    let opts = SpectralOptions::default();
    let mut warm: Option<Vec<f64>> = None;
    let mut f = |mu2: f64| -> Result<f64> {
        let op = kernel.scalar_operator(mu2, &eta);
        let r = match &warm {
            Some(v) => principal_eigen_from(&op, &opts, v)?,
            None => principal_eigen(&op, &opts)?,
        };
        warm = Some(r.eigvec);
        Ok(r.lambda_p)
    };
    let mut f_lo = f(lo)?;
    let mut f_hi = f(hi)?;
    for _ in 0..6 {
        if f_lo > 0.0 {
            break;
        }
        lo /= 10.0;
        f_lo = f(lo)?;
    }
    for _ in 0..6 {
        if f_hi < 0.0 {
            break;
        }
        hi *= 10.0;
        f_hi = f(hi)?;
    }
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(Error::NoRoot(format!(
            "no sign change on [{lo:e}, {hi:e}]: λ_p = {f_lo:e} at the left end, {f_hi:e} at the right end"
        )));
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b || b - a <= 1e-14 {
            break;
        }
        let fm = f(mid.exp())?;
        if fm == 0.0 {
            a = mid;
            b = mid;
            break;
        }
        if fm > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    let value = (0.5 * (a + b)).exp();
    Ok(RootResult {
        value,
        kind: RootKind::Interior,
        bracket: (a.exp(), b.exp()),
        residual: f(value)?.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignRegion {
    Persist,
    Extinct,
    NearThreshold,
}

impl fmt::Display for SignRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignRegion::Persist => "persist",
            SignRegion::Extinct => "extinct",
            SignRegion::NearThreshold => "near-threshold",
        })
    }
}

pub fn classify_sign_region(
    kernel: &KernelMatrix,
    c: &CoefficientSet,
    mu: DispersalRates,
    eps: f64,
) -> Result<(SignRegion, SpectrumResult)> {
    let b = BlockOperator::assemble(mu, kernel, c)?;
    let r = principal_eigen(b.operator(), &SpectralOptions::default())?;
    let region = if r.lambda_p > eps {
        SignRegion::Persist
    } else if r.lambda_p < -eps {
        SignRegion::Extinct
    } else {
        SignRegion::NearThreshold
    };
    Ok((region, r))
}

/// Dispersal-independent limit quantities of a coefficient set.
#[derive(Debug, Clone)]
pub struct LimitReport {
    pub lambda: LambdaField,
    pub lambda_tilde: f64,
    pub r0: Option<Field>,
    pub eta1_star: RootResult,
    pub eta2_star: RootResult,
    pub mu2_star: std::result::Result<RootResult, String>,
}

impl LimitReport {
    pub fn compute(kernel: &KernelMatrix, c: &CoefficientSet) -> Result<Self> {
        let g = kernel.grid();
        let mu2 = match mu2_star(kernel, c, MU2_BRACKET) {
            Ok(r) => Ok(r),
            Err(Error::NoRoot(msg)) => Err(msg),
            Err(e) => return Err(e),
        };
        Ok(Self {
            lambda: lambda_field(c)?,
            lambda_tilde: lambda_tilde(c, g)?,
            r0: r0_field(c).ok(),
            eta1_star: eta_star(EtaVariant::JuvenileSlowAdultFast, c, g)?,
            eta2_star: eta_star(EtaVariant::JuvenileFastAdultSlow, c, g)?,
            mu2_star: mu2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CoefficientSpec, KernelSpec};

    const GOLDEN: f64 = -0.381_966_011_250_105_1;

    fn constants(a: f64, e: f64, r: f64, s: f64, n: usize) -> (CoefficientSet, KernelMatrix) {
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let c = CoefficientSpec::constants(a, 1.0, 0.0, e, 1.0, 0.0, r, s, KernelSpec::Gaussian { sigma: 0.2 })
            .sample(&g)
            .unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        (c, k)
    }

    #[test]
    fn local_eigen_examples() {
        let le = lambda_matrix_2x2(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((le.lambda - GOLDEN).abs() < 1e-15);
        let le = lambda_matrix_2x2(1.0, 1.0, 4.0, 1.0).unwrap();
        assert!((le.lambda - 1.0).abs() < 1e-15);
        assert!((le.q2 - 1.0 / 3.0).abs() < 1e-15 && (le.q1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(lambda_matrix_2x2(2.0, 1.0, 0.0, 3.0).unwrap().lambda, -1.0);
        assert!(lambda_matrix_2x2(-1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn triangular_eigenvectors() {
        let check = |a_s: f64, e: f64, r: f64, s: f64| {
            let le = lambda_matrix_2x2(a_s, e, r, s).unwrap();
            let r1 = -a_s * le.q1 + r * le.q2 - le.lambda * le.q1;
            let r2 = s * le.q1 - e * le.q2 - le.lambda * le.q2;
            assert!(r1.abs() < 1e-14 && r2.abs() < 1e-14, "{a_s} {e} {r} {s} {le:?}");
            assert!((le.q1 + le.q2 - 1.0).abs() < 1e-15);
        };
        check(2.0, 1.0, 0.0, 3.0);
        check(1.0, 2.0, 0.0, 3.0);
        check(2.0, 1.0, 3.0, 0.0);
        check(1.0, 2.0, 3.0, 0.0);
        check(1.0, 1.0, 0.0, 0.0);
        assert_eq!(lambda_matrix_2x2(1.0, 1.0, 2.0, 0.0).unwrap().q1, 1.0);
        assert_eq!(lambda_matrix_2x2(1.0, 1.0, 0.0, 2.0).unwrap().q2, 1.0);
    }

    #[test]
    fn r0_rejects_vanishing_denominator() {
        let (c, _) = constants(0.0, 0.0, 4.0, 1.0, 4);
        match r0_field(&c) {
            Err(Error::Domain { nodes, .. }) => assert_eq!(nodes, vec![0, 1, 2, 3]),
            other => panic!("{other:?}"),
        }
        let (c, _) = constants(0.0, 1.0, 4.0, 1.0, 4);
        assert!(r0_field(&c).unwrap().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn constant_prop_roots() {
        let (c, k) = constants(1.0, 1.0, 1.0, 1.0, 10);
        let h = c.a_plus_s();
        let r1 = prop1_root(&k, 0.7, &h, &c.e, &c.rs()).unwrap();
        assert_eq!(r1.kind, RootKind::Interior);
        assert!((r1.value - GOLDEN).abs() < 1e-12, "{}", r1.value);
        let r2 = prop2_root(&k, 0.7, &c.r, &c.s, &c.e, &h).unwrap();
        assert!((r2.value - GOLDEN).abs() < 1e-12, "{}", r2.value);
    }

    #[test]
    fn prop1_without_coupling() {
        // L(ν) = −1 − ν: root −1 inside (−2, ∞)
        let (c, k) = constants(1.0, 1.0, 0.0, 1.0, 6);
        let r = prop1_root(&k, 1.0, &c.a_plus_s(), &c.e, &c.rs()).unwrap();
        assert_eq!(r.kind, RootKind::Interior);
        assert!((r.value + 1.0).abs() < 1e-12);
        // h ≡ 0.5: −1 < −0.5, so boundary
        let h = vec![0.5; 6];
        let r = prop1_root(&k, 1.0, &h, &c.e, &c.rs()).unwrap();
        assert_eq!(r.kind, RootKind::Boundary);
        assert_eq!(r.value, -0.5);
    }

    #[test]
    fn sigma_of_cc2() {
        let (c, k) = constants(0.0, 1.0, 4.0, 1.0, 8);
        let s = sigma_sign(&k, 1.0, &c.r, &c.s, &c.a_plus_s(), &c.e).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
        let zero = vec![0.0; 8];
        let s0 = sigma_sign(&k, 1.0, &c.r, &zero, &c.a_plus_s(), &c.e).unwrap();
        assert!((s0 + 1.0).abs() < 1e-14);
    }

    #[test]
    fn eta_examples() {
        let g = Grid::midpoint(5, 0.0, 1.0).unwrap();
        let (c, _) = constants(0.0, 1.0, 4.0, 1.0, 5);
        let r = eta_star(EtaVariant::JuvenileSlowAdultFast, &c, &g).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let (c, _) = constants(1.0, 1.0, 1.0, 1.0, 5);
        for v in [EtaVariant::JuvenileSlowAdultFast, EtaVariant::JuvenileFastAdultSlow] {
            assert!((eta_star(v, &c, &g).unwrap().value - GOLDEN).abs() < 1e-12);
        }
    }

    #[test]
    fn mu2_star_absent_for_constants() {
        let (c, k) = constants(1.0, 1.0, 1.0, 1.0, 5);
        assert!(matches!(mu2_star(&k, &c, MU2_BRACKET), Err(Error::NoRoot(_))));
    }

    #[test]
    fn classify_constants() {
        let (c, k) = constants(0.0, 1.0, 4.0, 1.0, 6);
        let mu = DispersalRates::new(0.3, 3.0).unwrap();
        assert_eq!(classify_sign_region(&k, &c, mu, 1e-8).unwrap().0, SignRegion::Persist);
        let (c, k) = constants(1.0, 1.0, 1.0, 1.0, 6);
        assert_eq!(classify_sign_region(&k, &c, mu, 1e-8).unwrap().0, SignRegion::Extinct);
    }
}
