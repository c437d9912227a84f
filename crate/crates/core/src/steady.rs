//! Nonnegative steady states of the two-stage system and the limit
//! profiles they approach for small, large and mixed dispersal.

use crate::dense::{norm_inf, Lu};
use crate::domain::{CoefficientSet, DispersalRates, Field, Grid};
use crate::error::{invalid, Error, Result};
use crate::limits::{lambda_matrix_2x2, lambda_tilde, prop1_root, prop2_root};
use crate::operators::KernelMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_STEPS: usize = 10_000_000;
pub const DEFAULT_INIT: f64 = 0.1;
const SAFETY: f64 = 0.4;

/// `M* = max(r_max/b_min, s_max/f_min) + 1e-6`
pub fn a_priori_bound(c: &CoefficientSet) -> f64 {
    (c.r.max() / c.b.min()).max(c.s.max() / c.f.min()) + 1e-6
}

/// Lipschitz bound of the reaction terms on `[0, M*]²`.
pub fn reaction_lipschitz(c: &CoefficientSet) -> f64 {
    let m = a_priori_bound(c);
    c.r.norm_inf()
        + c.s.norm_inf()
        + c.a.norm_inf()
        + c.e.norm_inf()
        + 2.0 * (c.b.norm_inf() + c.f.norm_inf() + c.c.norm_inf() + c.g.norm_inf()) * m
}

/// Largest explicit step `0.4 / (μ_max ‖K‖∞ + Lip)`.
pub fn stable_dt(mu: DispersalRates, kernel: &KernelMatrix, c: &CoefficientSet) -> f64 {
    SAFETY / (mu.max() * kernel.kvec().norm_inf() + reaction_lipschitz(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Forward Euler in both dispersal and reaction.
    Explicit,
    /// Dispersal backward Euler, reaction forward Euler; the step is then
    /// limited by the reaction terms only.
    Imex,
    /// IMEX when dispersal dominates the explicit step bound.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct SteadyOptions {
    pub tol: f64,
    pub max_steps: usize,
    pub scheme: Scheme,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_steps: DEFAULT_MAX_STEPS,
            scheme: Scheme::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyState {
    pub u1: Field,
    pub u2: Field,
    /// Sup-norm of the right-hand side.
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
}

fn check_len(c: &CoefficientSet, kernel: &KernelMatrix) -> Result<()> {
    if c.len() != kernel.len() {
        return Err(invalid(format!(
            "coefficients have {} nodes, kernel matrix has {}",
            c.len(),
            kernel.len()
        )));
    }
    Ok(())
}

fn full_reaction(c: &CoefficientSet, u: &[Vec<f64>], out: &mut [Vec<f64>]) {
    let (u1, u2) = (&u[0], &u[1]);
    let (o1, o2) = out.split_at_mut(1);
    for i in 0..u1.len() {
        let (x, y) = (u1[i], u2[i]);
        o1[0][i] = c.r[i] * y - c.s[i] * x - (c.a[i] + c.b[i] * x + c.c[i] * y) * x;
        o2[0][i] = c.s[i] * x - (c.e[i] + c.f[i] * y + c.g[i] * x) * y;
    }
}

/// Right-hand side of the full system.
pub fn full_rhs(mu: DispersalRates, kernel: &KernelMatrix, c: &CoefficientSet, u1: &[f64], u2: &[f64]) -> (Field, Field) {
    let n = u1.len();
    let u = [u1.to_vec(), u2.to_vec()];
    let mut out = vec![vec![0.0; n]; 2];
    full_reaction(c, &u, &mut out);
    let mut ku = vec![0.0; n];
    for (comp, m) in [mu.mu1(), mu.mu2()].into_iter().enumerate() {
        kernel.apply_into(&u[comp], &mut ku);
        for (o, k) in out[comp].iter_mut().zip(&ku) {
            *o += m * k;
        }
    }
    let o2 = out.pop().unwrap_or_default();
    let o1 = out.pop().unwrap_or_default();
    (Field(o1), Field(o2))
}

/// One forward Euler step with negative values clamped to zero.
pub fn step_full_system(
    u1: &[f64],
    u2: &[f64],
    mu: DispersalRates,
    kernel: &KernelMatrix,
    c: &CoefficientSet,
    dt: f64,
) -> Result<(Field, Field)> {
    check_len(c, kernel)?;
    if u1.len() != c.len() || u2.len() != c.len() {
        return Err(invalid("state has the wrong length"));
    }
    let dt_max = stable_dt(mu, kernel, c);
    if !(dt > 0.0) || dt > dt_max {
        return Err(invalid(format!("unstable step dt = {dt}, need 0 < dt <= {dt_max}")));
    }
    let (f1, f2) = full_rhs(mu, kernel, c, u1, u2);
    let next = |u: &[f64], f: &Field| Field(u.iter().zip(f.iter()).map(|(x, d)| (x + dt * d).max(0.0)).collect());
    Ok((next(u1, &f1), next(u2, &f2)))
}

/// Integrates `∂ₜu_k = μ_k K u_k + R_k(u)` until the sup-norm of the
/// right-hand side drops below `tol`.
struct Integrator<'a> {
    kernel: &'a KernelMatrix,
    mus: Vec<f64>,
    dt: f64,
    implicit: Option<Vec<Lu>>,
}

struct Outcome {
    state: Vec<Vec<f64>>,
    residual: f64,
    steps: usize,
    converged: bool,
}

impl<'a> Integrator<'a> {
    fn new(kernel: &'a KernelMatrix, mus: Vec<f64>, lip: f64, scheme: Scheme) -> Result<Self> {
        let knorm = kernel.kvec().norm_inf();
        let mu_max = mus.iter().copied().fold(0.0, f64::max);
        let implicit = match scheme {
            Scheme::Explicit => false,
            Scheme::Imex => true,
            Scheme::Auto => mu_max * knorm > lip,
        };
        if !implicit {
            return Ok(Self {
                kernel,
                dt: SAFETY / (mu_max * knorm + lip),
                mus,
                implicit: None,
            });
        }
        let dt = SAFETY / lip;
        let mut lus = Vec::with_capacity(mus.len());
        for &m in &mus {
            let mut a = kernel.matrix().clone();
            a.scale(-dt * m);
            lus.push(a.shifted(1.0).lu()?);
        }
        Ok(Self {
            kernel,
            mus,
            dt,
            implicit: Some(lus),
        })
    }

    fn residual(&self, state: &[Vec<f64>], reaction: &[Vec<f64>], scratch: &mut [f64]) -> f64 {
        let mut res = 0.0_f64;
        for (k, (u, r)) in state.iter().zip(reaction).enumerate() {
            self.kernel.apply_into(u, scratch);
            for (m, x) in scratch.iter().zip(r) {
                res = res.max((self.mus[k] * m + x).abs());
            }
        }
        res
    }

    fn run<R>(&self, mut state: Vec<Vec<f64>>, reaction: R, tol: f64, max_steps: usize) -> Outcome
    where
        R: Fn(&[Vec<f64>], &mut [Vec<f64>]),
    {
        let n = self.kernel.len();
        let comps = state.len();
        let mut react = vec![vec![0.0; n]; comps];
        let mut scratch = vec![0.0; n];
        let mut residual = f64::INFINITY;
        let check_every = if self.implicit.is_some() { 20 } else { 1 };
        for step in 0..=max_steps {
            reaction(&state, &mut react);
            if step % check_every == 0 || step == max_steps {
                residual = self.residual(&state, &react, &mut scratch);
                if residual <= tol {
                    return Outcome {
                        state,
                        residual,
                        steps: step,
                        converged: true,
                    };
                }
                if !residual.is_finite() {
                    break;
                }
            }
            if step == max_steps {
                break;
            }
            match &self.implicit {
                None => {
                    for (k, u) in state.iter_mut().enumerate() {
                        self.kernel.apply_into(u, &mut scratch);
                        for ((x, m), r) in u.iter_mut().zip(&scratch).zip(&react[k]) {
                            *x = (*x + self.dt * (self.mus[k] * m + r)).max(0.0);
                        }
                    }
                }
                Some(lus) => {
                    for (k, u) in state.iter_mut().enumerate() {
                        let rhs: Vec<f64> = u.iter().zip(&react[k]).map(|(x, r)| x + self.dt * r).collect();
                        let next = lus[k].solve(&rhs);
                        for (x, y) in u.iter_mut().zip(next) {
                            *x = y.max(0.0);
                        }
                    }
                }
            }
        }
        Outcome {
            state,
            residual,
            steps: max_steps,
            converged: false,
        }
    }
}

/// Time-steps the full system from `init` (default `(0.1, 0.1)`) until the
/// stationary residual is below `opts.tol`.
pub fn solve_steady(
    mu: DispersalRates,
    kernel: &KernelMatrix,
    c: &CoefficientSet,
    init: Option<(&[f64], &[f64])>,
    opts: &SteadyOptions,
) -> Result<SteadyState> {
    check_len(c, kernel)?;
    let n = c.len();
    let state = match init {
        Some((a, b)) => {
            if a.len() != n || b.len() != n {
                return Err(invalid("initial state has the wrong length"));
            }
            if a.iter().chain(b).any(|v| !(*v >= 0.0)) {
                return Err(invalid("initial state must be nonnegative"));
            }
            vec![a.to_vec(), b.to_vec()]
        }
        None => vec![vec![DEFAULT_INIT; n]; 2],
    };
    let integ = Integrator::new(kernel, vec![mu.mu1(), mu.mu2()], reaction_lipschitz(c), opts.scheme)?;
    let out = integ.run(state, |u, o| full_reaction(c, u, o), opts.tol, opts.max_steps);
    let mut st = out.state;
    let u2 = st.pop().unwrap_or_default();
    let u1 = st.pop().unwrap_or_default();
    Ok(SteadyState {
        u1: Field(u1),
        u2: Field(u2),
        residual: out.residual,
        steps: out.steps,
        converged: out.converged,
    })
}

/// `H(τ)`, the nonnegative root of `b H² + (a+s+cτ) H − rτ = 0`.
pub fn h_eval(a_s: f64, b: f64, c: f64, r: f64, tau: f64) -> f64 {
    if tau == 0.0 || r == 0.0 {
        return 0.0;
    }
    let g = a_s + c * tau;
    2.0 * r * tau / ((g * g + 4.0 * b * r * tau).sqrt() + g)
}

/// `H(τ)/τ`, finite at `τ = 0` whenever `a + s > 0`.
fn h_ratio(a_s: f64, b: f64, c: f64, r: f64, tau: f64) -> f64 {
    let g = a_s + c * tau;
    2.0 * r / ((g * g + 4.0 * b * r * tau).sqrt() + g)
}

/// Local rates at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeRates {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub r: f64,
    pub s: f64,
}

impl NodeRates {
    pub fn at(c: &CoefficientSet, i: usize) -> Self {
        Self {
            a: c.a[i],
            b: c.b[i],
            c: c.c[i],
            e: c.e[i],
            f: c.f[i],
            g: c.g[i],
            r: c.r[i],
            s: c.s[i],
        }
    }

    /// Residual of the algebraic equilibrium system at `(v1, v2)`.
    pub fn kinetic_residual(&self, v1: f64, v2: f64) -> (f64, f64) {
        (
            self.r * v2 - (self.a + self.s + self.b * v1 + self.c * v2) * v1,
            self.s * v1 - (self.e + self.f * v2 + self.g * v1) * v2,
        )
    }
}

/// Stable nonnegative equilibrium of the dispersal-free system at one node.
///
/// `V₁ = H(V₂)` turns the system into a single strictly decreasing scalar
/// equation for `V₂`, solved by bisection and polished by Newton's method.
pub fn kinetic_node(p: &NodeRates) -> Result<(f64, f64)> {
    if !(p.b > 0.0 && p.f > 0.0) {
        return Err(Error::Precondition("b and f must be positive".into()));
    }
    let a_s = p.a + p.s;
    if lambda_matrix_2x2(a_s, p.e, p.r, p.s)?.lambda <= 0.0 {
        return Ok((0.0, 0.0));
    }
    let phi = |t: f64| {
        let ratio = h_ratio(a_s, p.b, p.c, p.r, t);
        p.s * ratio - p.e - p.f * t - p.g * t * ratio
    };
    let (mut lo, mut hi) = (0.0_f64, p.s * h_ratio(a_s, p.b, p.c, p.r, 0.0) / p.f + 1.0);
    if !(phi(lo) > 0.0 && phi(hi) < 0.0) {
        return Err(Error::Numeric(format!("kinetic bracket failed for {p:?}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut v2 = 0.5 * (lo + hi);
    let mut v1 = h_eval(a_s, p.b, p.c, p.r, v2);
    let norm = |(x, y): (f64, f64)| x.abs().max(y.abs());
    for _ in 0..4 {
        let (f1, f2) = p.kinetic_residual(v1, v2);
        let j11 = -(a_s + 2.0 * p.b * v1 + p.c * v2);
        let j12 = p.r - p.c * v1;
        let j21 = p.s - p.g * v2;
        let j22 = -(p.e + 2.0 * p.f * v2 + p.g * v1);
        let det = j11 * j22 - j12 * j21;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let d1 = (-f1 * j22 + f2 * j12) / det;
        let d2 = (-f2 * j11 + f1 * j21) / det;
        let (n1, n2) = (v1 + d1, v2 + d2);
        if !(n1 > 0.0 && n2 > 0.0) || norm(p.kinetic_residual(n1, n2)) >= norm((f1, f2)) {
            break;
        }
        v1 = n1;
        v2 = n2;
    }
    Ok((v1, v2))
}

#[derive(Debug, Clone)]
pub struct KineticEquilibrium {
    pub v1: Field,
    pub v2: Field,
    /// Largest nodewise residual of the algebraic system.
    pub residual: f64,
}

pub fn kinetic_equilibrium(c: &CoefficientSet) -> Result<KineticEquilibrium> {
    let n = c.len();
    let (mut v1, mut v2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut residual = 0.0_f64;
    for i in 0..n {
        let p = NodeRates::at(c, i);
        let (x, y) = kinetic_node(&p).map_err(|e| match e {
            Error::Numeric(m) => Error::Domain {
                message: m,
                nodes: vec![i],
            },
            other => other,
        })?;
        let (f1, f2) = p.kinetic_residual(x, y);
        residual = residual.max(f1.abs()).max(f2.abs());
        v1.push(x);
        v2.push(y);
    }
    Ok(KineticEquilibrium {
        v1: Field(v1),
        v2: Field(v2),
        residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AveragedEquilibrium {
    pub v1: f64,
    pub v2: f64,
    /// `Λ̃ > 0`; otherwise both values are zero.
    pub positive: bool,
    pub residual: f64,
}

/// Kinetic equilibrium of the spatially averaged rates.
pub fn averaged_equilibrium(c: &CoefficientSet, g: &Grid) -> Result<AveragedEquilibrium> {
    let avg = c.averaged(g)?;
    let p = NodeRates::at(&avg, 0);
    if lambda_tilde(c, g)? <= 0.0 {
        return Ok(AveragedEquilibrium {
            v1: 0.0,
            v2: 0.0,
            positive: false,
            residual: 0.0,
        });
    }
    let (v1, v2) = kinetic_node(&p)?;
    let (f1, f2) = p.kinetic_residual(v1, v2);
    Ok(AveragedEquilibrium {
        v1,
        v2,
        positive: true,
        residual: f1.abs().max(f2.abs()),
    })
}

#[derive(Debug, Clone)]
pub struct WStar {
    pub w: Field,
    /// `H(·, w)`
    pub h: Field,
    pub residual: f64,
    pub steps: usize,
    pub converged: bool,
}

fn w_reaction(c: &CoefficientSet, w: &[f64], out: &mut [f64]) {
    for i in 0..w.len() {
        let h = h_eval(c.a[i] + c.s[i], c.b[i], c.c[i], c.r[i], w[i]);
        out[i] = c.s[i] * h - (c.e[i] + c.f[i] * w[i] + c.g[i] * h) * w[i];
    }
}

/// Positive solution of `0 = μ₂Kw + sH(·,w) − (e + fw + gH(·,w))w`, the
/// profile of the slow-juvenile limit.
pub fn solve_w_star(mu2: f64, kernel: &KernelMatrix, c: &CoefficientSet, opts: &SteadyOptions) -> Result<WStar> {
    check_len(c, kernel)?;
    if !(mu2 > 0.0 && mu2.is_finite()) {
        return Err(invalid(format!("mu2 must be positive, got {mu2}")));
    }
    let a_s = c.a_plus_s();
    let h_min = a_s.min();
    if !(h_min > 0.0) {
        return Err(Error::Precondition(format!("(a+s)_min = {h_min} is not positive")));
    }
    let root = prop1_root(kernel, mu2, &a_s, &c.e, &c.rs())?;
    if !(root.value > 0.0) {
        return Err(Error::Precondition(format!(
            "the small-μ₁ limit {} is not positive",
            root.value
        )));
    }
    let m = a_priori_bound(c);
    let r_max = c.r.norm_inf();
    let h_bound = (r_max * m / c.b.min()).sqrt();
    let lip = c.s.norm_inf() * r_max / h_min
        + c.e.norm_inf()
        + 2.0 * c.f.norm_inf() * m
        + c.g.norm_inf() * (h_bound + m * r_max / h_min);
    let integ = Integrator::new(kernel, vec![mu2], lip, opts.scheme)?;
    let out = integ.run(
        vec![vec![DEFAULT_INIT; c.len()]],
        |u, o| w_reaction(c, &u[0], &mut o[0]),
        opts.tol,
        opts.max_steps,
    );
    let w = out.state.into_iter().next().unwrap_or_default();
    let h = (0..w.len())
        .map(|i| h_eval(a_s[i], c.b[i], c.c[i], c.r[i], w[i]))
        .collect();
    Ok(WStar {
        w: Field(w),
        h: Field(h),
        residual: out.residual,
        steps: out.steps,
        converged: out.converged,
    })
}

#[derive(Debug, Clone)]
pub struct Shadow {
    pub l_star: f64,
    pub w: Field,
    /// Largest of the two equation residuals.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const SHADOW_MAX_OUTER: usize = 500;
const SHADOW_TOL: f64 = 1e-8;

/// Newton's method for `0 = μ₂Kw + sl − (e + gl)w − fw²`. The map is
/// concave in `w`, so after one step the iterates decrease monotonically
/// to the positive solution.
fn shadow_w(mu2: f64, kernel: &KernelMatrix, c: &CoefficientSet, l: f64, mut w: Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let n = w.len();
    let mut ku = vec![0.0; n];
    let eval = |w: &[f64], ku: &mut [f64]| -> Vec<f64> {
        kernel.apply_into(w, ku);
        (0..n)
            .map(|i| mu2 * ku[i] + c.s[i] * l - (c.e[i] + c.g[i] * l + c.f[i] * w[i]) * w[i])
            .collect()
    };
    let mut f = eval(&w, &mut ku);
    let scale = 1.0 + c.s.norm_inf() * l;
    for _ in 0..100 {
        let res = norm_inf(&f);
        if res <= 1e-13 * scale {
            return Ok((w, res));
        }
        let mut j = kernel.matrix().clone();
        j.scale(mu2);
        for i in 0..n {
            j[(i, i)] -= c.e[i] + c.g[i] * l + 2.0 * c.f[i] * w[i];
        }
        let neg: Vec<f64> = f.iter().map(|v| -v).collect();
        let delta = j.lu()?.solve(&neg);
        let next: Vec<f64> = w.iter().zip(&delta).map(|(a, d)| a + d).collect();
        let f_next = eval(&next, &mut ku);
        if norm_inf(&f_next) >= res && res <= 1e-10 * scale {
            return Ok((w, res));
        }
        w = next;
        f = f_next;
    }
    let res = norm_inf(&f);
    if res <= 1e-10 * scale {
        Ok((w, res))
    } else {
        Err(Error::Convergence {
            message: "Newton iteration for the slow component stalled".into(),
            iterations: 100,
            low: res,
            high: res,
        })
    }
}

/// Damped fixed point for the fast-juvenile limit: a constant `l*` coupled
/// to a nonlocal equation for `w̃*`.
pub fn solve_shadow(mu2: f64, kernel: &KernelMatrix, c: &CoefficientSet) -> Result<Shadow> {
    check_len(c, kernel)?;
    if !(mu2 > 0.0 && mu2.is_finite()) {
        return Err(invalid(format!("mu2 must be positive, got {mu2}")));
    }
    if c.e.is_identically_zero() {
        return Err(Error::Precondition("e vanishes identically".into()));
    }
    let a_s = c.a_plus_s();
    let root = prop2_root(kernel, mu2, &c.r, &c.s, &c.e, &a_s)?;
    if !(root.value > 0.0) {
        return Err(Error::Precondition(format!(
            "the large-μ₁ limit {} is not positive",
            root.value
        )));
    }
    let g = kernel.grid();
    let int_b = g.integrate(&c.b)?;
    let int_as = g.integrate(&a_s)?;
    let mut l = DEFAULT_INIT;
    let mut w = vec![DEFAULT_INIT; c.len()];
    let mut last = (f64::INFINITY, 0);
    for it in 0..SHADOW_MAX_OUTER {
        let (nw, w_res) = shadow_w(mu2, kernel, c, l, w)?;
        w = nw;
        let int_rw = g.integrate(&c.r.mul(&Field(w.clone())))?;
        let int_cw = g.integrate(&c.c.mul(&Field(w.clone())))?;
        let lin = int_as + int_cw;
        let q_res = (int_rw - (lin + l * int_b) * l).abs();
        let residual = q_res.max(w_res);
        last = (residual, it);
        if residual <= SHADOW_TOL {
            return Ok(Shadow {
                l_star: l,
                w: Field(w),
                residual,
                iterations: it,
                converged: true,
            });
        }
        let l_new = 2.0 * int_rw / ((lin * lin + 4.0 * int_b * int_rw).sqrt() + lin);
        l = 0.5 * (l + l_new);
    }
    Ok(Shadow {
        l_star: l,
        w: Field(w),
        residual: last.0,
        iterations: SHADOW_MAX_OUTER,
        converged: false,
    })
}

/// Integrals of both stationary equations; they vanish at a steady state
/// because the dispersal terms integrate to zero.
pub fn flux_balance(c: &CoefficientSet, g: &Grid, u1: &[f64], u2: &[f64]) -> Result<(f64, f64)> {
    let n = c.len();
    let mut l1 = Vec::with_capacity(n);
    let mut l2 = Vec::with_capacity(n);
    for i in 0..n {
        let (x, y) = (u1[i], u2[i]);
        l1.push(c.r[i] * y - (c.a[i] + c.s[i] + c.b[i] * x + c.c[i] * y) * x);
        l2.push(c.s[i] * x - (c.e[i] + c.f[i] * y + c.g[i] * x) * y);
    }
    Ok((g.integrate(&l1)?, g.integrate(&l2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CoefficientSpec, KernelSpec};

    /// Real root of `y³ + 2y² + 2y − 3 = 0` by bisection.
    fn cc2_oracle() -> (f64, f64) {
        let p = |y: f64| y * y * y + 2.0 * y * y + 2.0 * y - 3.0;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if p(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        let y = 0.5 * (lo + hi);
        (y + y * y, y)
    }

    fn cc2(n: usize) -> (CoefficientSet, KernelMatrix) {
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let c = CoefficientSpec::constants(0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 4.0, 1.0, KernelSpec::Gaussian { sigma: 0.2 })
            .sample(&g)
            .unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        (c, k)
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_eval(1.0, 1.0, 0.0, 1.0, 0.0), 0.0);
        assert!((h_eval(1.0, 1.0, 0.0, 1.0, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cc2_kinetic_matches_cubic() {
        let (v1, v2) = cc2_oracle();
        assert!((v1 - 1.294_947_578).abs() < 1e-8 && (v2 - 0.742_959_202).abs() < 1e-8);
        let (c, _) = cc2(4);
        let k = kinetic_equilibrium(&c).unwrap();
        assert!(k.residual <= 1e-10);
        for i in 0..4 {
            assert!((k.v1[i] - v1).abs() < 1e-12 && (k.v2[i] - v2).abs() < 1e-12);
        }
    }

    #[test]
    fn kinetic_zero_when_lambda_nonpositive() {
        let p = NodeRates {
            a: 1.0,
            b: 1.0,
            c: 0.0,
            e: 1.0,
            f: 1.0,
            g: 0.0,
            r: 1.0,
            s: 1.0,
        };
        assert_eq!(kinetic_node(&p).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn kinetic_scaling() {
        let p = NodeRates {
            a: 0.3,
            b: 1.2,
            c: 0.4,
            e: 0.5,
            f: 0.9,
            g: 0.2,
            r: 3.0,
            s: 1.1,
        };
        let (x, y) = kinetic_node(&p).unwrap();
        let t = 2.5;
        let q = NodeRates {
            b: p.b * t,
            c: p.c * t,
            f: p.f * t,
            g: p.g * t,
            ..p
        };
        let (xt, yt) = kinetic_node(&q).unwrap();
        assert!((xt - x / t).abs() < 1e-13 && (yt - y / t).abs() < 1e-13);
    }

    #[test]
    fn zero_state_is_fixed() {
        let (c, k) = cc2(6);
        let mu = DispersalRates::new(1.0, 1.0).unwrap();
        let dt = stable_dt(mu, &k, &c);
        let (a, b) = step_full_system(&[0.0; 6], &[0.0; 6], mu, &k, &c, dt).unwrap();
        assert!(a.is_identically_zero() && b.is_identically_zero());
        assert!(step_full_system(&[0.0; 6], &[0.0; 6], mu, &k, &c, 2.0 * dt).is_err());
    }

    #[test]
    fn kinetic_constant_state_is_fixed() {
        let (c, k) = cc2(6);
        let (v1, v2) = cc2_oracle();
        let mu = DispersalRates::new(0.5, 2.0).unwrap();
        let dt = stable_dt(mu, &k, &c);
        let (a, b) = step_full_system(&[v1; 6], &[v2; 6], mu, &k, &c, dt).unwrap();
        assert!(a.iter().all(|x| (x - v1).abs() < 1e-14));
        assert!(b.iter().all(|x| (x - v2).abs() < 1e-14));
    }

    #[test]
    fn cc2_steady_state_both_schemes() {
        let (c, k) = cc2(12);
        let (v1, v2) = cc2_oracle();
        for (mu, scheme) in [(1.0, Scheme::Explicit), (1e3, Scheme::Imex), (1e-3, Scheme::Auto)] {
            let mu = DispersalRates::new(mu, mu).unwrap();
            let opts = SteadyOptions { scheme, ..Default::default() };
            let st = solve_steady(mu, &k, &c, None, &opts).unwrap();
            assert!(st.converged && st.residual <= 1e-9);
            assert!(st.u1.iter().all(|x| (x - v1).abs() < 1e-8));
            assert!(st.u2.iter().all(|x| (x - v2).abs() < 1e-8));
        }
    }

    #[test]
    fn cc1_goes_extinct() {
        let g = Grid::midpoint(8, 0.0, 1.0).unwrap();
        let c = CoefficientSpec::constants(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, KernelSpec::Gaussian { sigma: 0.2 })
            .sample(&g)
            .unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let st = solve_steady(DispersalRates::new(1.0, 1.0).unwrap(), &k, &c, None, &SteadyOptions::default()).unwrap();
        assert!(st.converged);
        assert!(st.u1.norm_inf() < 1e-8 && st.u2.norm_inf() < 1e-8);
    }

    #[test]
    fn cc2_limit_profiles() {
        let (c, k) = cc2(10);
        let (v1, v2) = cc2_oracle();
        let w = solve_w_star(1.0, &k, &c, &SteadyOptions::default()).unwrap();
        assert!(w.converged && w.residual <= 1e-9);
        assert!(w.w.iter().all(|x| (x - v2).abs() < 1e-8));
        assert!(w.h.iter().all(|x| (x - v1).abs() < 1e-8));
        let sh = solve_shadow(1.0, &k, &c).unwrap();
        assert!(sh.converged, "{sh:?}");
        assert!((sh.l_star - v1).abs() < 1e-7);
        assert!(sh.w.iter().all(|x| (x - v2).abs() < 1e-7));
        let avg = averaged_equilibrium(&c, k.grid()).unwrap();
        assert!(avg.positive && (avg.v1 - v1).abs() < 1e-12);
    }

    #[test]
    fn w_star_rejects_negative_limit() {
        let g = Grid::midpoint(6, 0.0, 1.0).unwrap();
        let c = CoefficientSpec::constants(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, KernelSpec::Gaussian { sigma: 0.2 })
            .sample(&g)
            .unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        assert!(matches!(
            solve_w_star(1.0, &k, &c, &SteadyOptions::default()),
            Err(Error::Precondition(_))
        ));
    }
}
