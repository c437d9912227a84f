//! Steady-state profiles next to the limit profile of their dispersal path.

use std::fmt;

use nonlocal_core::limits::{lambda_field, lambda_tilde};
use nonlocal_core::steady::{
    averaged_equilibrium, kinetic_equilibrium, solve_shadow, solve_steady, solve_w_star, SteadyOptions,
};
use nonlocal_core::{DispersalRates, Error, Field};

use crate::config::{RunConfig, SweepConfig};
use crate::error::{CliError, Result};
use crate::sweep::SweepPath;
use crate::{num, Problem, CSV_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// Both rates small: nodewise kinetic equilibrium.
    Kinetic,
    /// Both rates large: equilibrium of the averaged rates.
    Averaged,
    /// Juvenile rate small: `(H(·, w*), w*)`.
    WStar,
    /// Juvenile rate large: the shadow pair `(l*, w̃*)`.
    Shadow,
}

impl ProfileKind {
    pub fn for_path(path: SweepPath) -> Result<Self> {
        match path {
            SweepPath::MuToZero => Ok(ProfileKind::Kinetic),
            SweepPath::MuToInfinity => Ok(ProfileKind::Averaged),
            SweepPath::Mu1ToZero => Ok(ProfileKind::WStar),
            SweepPath::Mu1ToInfinity => Ok(ProfileKind::Shadow),
            other => Err(CliError::config(format!("path {other} has no limit profile"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProfileKind::Kinetic => "kinetic",
            ProfileKind::Averaged => "averaged",
            ProfileKind::WStar => "w-star",
            ProfileKind::Shadow => "shadow",
        }
    }
}

impl fmt::Display for ProfileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct LimitProfile {
    pub u1: Field,
    pub u2: Field,
    /// Convergence caveats of the limit solver.
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub label: String,
    pub kind: ProfileKind,
    pub mu: (f64, f64),
    pub x: Vec<f64>,
    pub u1: Field,
    pub u2: Field,
    pub limit: LimitProfile,
    pub converged: bool,
    pub residual: f64,
    pub steps: usize,
}

impl ProfileReport {
    /// Sup-norm distance per component.
    pub fn sup_gap(&self) -> (f64, f64) {
        (self.u1.sup_distance(&self.limit.u1), self.u2.sup_distance(&self.limit.u2))
    }

    pub fn summary(&self) -> String {
        let (g1, g2) = self.sup_gap();
        let mut s = format!(
            "{} steady state at mu = ({}, {}) against the {} limit\n  steady: {} (residual {:.2e}, {} steps)\n  sup gap u1 {g1:.3e}, u2 {g2:.3e}\n",
            self.label,
            num(self.mu.0),
            num(self.mu.1),
            self.kind,
            if self.converged { "converged" } else { "NOT converged" },
            self.residual,
            self.steps
        );
        if let Some(n) = &self.limit.note {
            s += &format!("  limit solver: {n}\n");
        }
        s
    }

    pub fn csv(&self) -> String {
        let (g1, g2) = self.sup_gap();
        let mut out = format!(
            "{CSV_MAGIC}\n# kind = profile\n# problem = {}\n# limit = {}\n# mu1 = {}\n# mu2 = {}\n# steady_converged = {}\n# steady_residual = {}\n# sup_gap_u1 = {}\n# sup_gap_u2 = {}\n",
            self.label,
            self.kind,
            num(self.mu.0),
            num(self.mu.1),
            self.converged,
            num(self.residual),
            num(g1),
            num(g2)
        );
        if let Some(n) = &self.limit.note {
            out += &format!("# limit_note = {}\n", n.replace('\n', " "));
        }
        out += "x,u1,u2,limit_u1,limit_u2,gap_u1,gap_u2\n";
        for i in 0..self.x.len() {
            let (a, b) = (self.u1[i], self.u2[i]);
            let (la, lb) = (self.limit.u1[i], self.limit.u2[i]);
            out += &format!(
                "{},{},{},{},{},{},{}\n",
                num(self.x[i]),
                num(a),
                num(b),
                num(la),
                num(lb),
                num((a - la).abs()),
                num((b - lb).abs())
            );
        }
        out
    }
}

fn refuse(e: Error) -> CliError {
    match e {
        Error::Precondition(m) => CliError::Hypothesis(m),
        other => CliError::Numeric(other),
    }
}

/// The limit profile, refusing when the hypotheses behind it fail.
pub fn limit_profile(p: &Problem, kind: ProfileKind, mu2: f64, opts: &SteadyOptions) -> Result<LimitProfile> {
    let c = &p.coefficients;
    let n = c.len();
    match kind {
        ProfileKind::Kinetic => {
            let lmax = lambda_field(c)?.lambda_max;
            if !(lmax > 0.0) {
                return Err(CliError::Hypothesis(format!(
                    "the small-dispersal profile comparison needs Lambda_max > 0, found {lmax}"
                )));
            }
            let k = kinetic_equilibrium(c)?;
            Ok(LimitProfile {
                u1: k.v1,
                u2: k.v2,
                note: None,
            })
        }
        ProfileKind::Averaged => {
            let lt = lambda_tilde(c, &p.grid)?;
            if !(lt > 0.0) {
                return Err(CliError::Hypothesis(format!(
                    "the large-dispersal profile comparison needs Lambda_tilde > 0, found {lt}"
                )));
            }
            let a = averaged_equilibrium(c, &p.grid)?;
            Ok(LimitProfile {
                u1: Field::constant(n, a.v1),
                u2: Field::constant(n, a.v2),
                note: None,
            })
        }
        ProfileKind::WStar => {
            let w = solve_w_star(mu2, &p.kernel, c, opts).map_err(refuse)?;
            let note = (!w.converged).then(|| format!("w* not converged, residual {:.2e}", w.residual));
            Ok(LimitProfile {
                u1: w.h,
                u2: w.w,
                note,
            })
        }
        ProfileKind::Shadow => {
            let sh = solve_shadow(mu2, &p.kernel, c).map_err(refuse)?;
            let note = if sh.converged {
                Some(format!(
                    "fixed point l* = {:.10} after {} iterations (residual {:.2e}); uniqueness is not established",
                    sh.l_star, sh.iterations, sh.residual
                ))
            } else {
                Some(format!(
                    "fixed-point iteration stalled after {} iterations, residual {:.2e}",
                    sh.iterations, sh.residual
                ))
            };
            Ok(LimitProfile {
                u1: Field::constant(n, sh.l_star),
                u2: sh.w,
                note,
            })
        }
    }
}

/// Steady state at `mu` compared with the limit profile of `kind`.
pub fn run_profile(p: &Problem, kind: ProfileKind, mu: (f64, f64), opts: &SteadyOptions) -> Result<ProfileReport> {
    let limit = limit_profile(p, kind, mu.1, opts)?;
    let st = solve_steady(DispersalRates::new(mu.0, mu.1)?, &p.kernel, &p.coefficients, None, opts)?;
    Ok(ProfileReport {
        label: p.label.clone(),
        kind,
        mu,
        x: p.grid.nodes().to_vec(),
        u1: st.u1,
        u2: st.u2,
        limit,
        converged: st.converged,
        residual: st.residual,
        steps: st.steps,
    })
}

/// Profile at the last point of the configured path.
pub fn run_profiles(p: &Problem, sweep: &SweepConfig, run: &RunConfig) -> Result<ProfileReport> {
    let kind = ProfileKind::for_path(sweep.path)?;
    let mu = *sweep
        .path
        .points(sweep)
        .last()
        .ok_or_else(|| CliError::config("sweep values must not be empty"))?;
    let opts = SteadyOptions {
        tol: run.tol,
        max_steps: run.max_steps,
        ..SteadyOptions::default()
    };
    run_profile(p, kind, mu, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonlocal_core::presets::Preset;

    #[test]
    fn cc2_small_and_large_dispersal() {
        let p = Problem::preset(Preset::Cc2, 41).unwrap();
        let opts = SteadyOptions::default();
        for (kind, mu) in [(ProfileKind::Kinetic, 1e-4), (ProfileKind::Averaged, 1e4)] {
            let r = run_profile(&p, kind, (mu, mu), &opts).unwrap();
            let (g1, g2) = r.sup_gap();
            assert!(r.converged && g1 <= 1e-3 && g2 <= 1e-3, "{kind}: {g1} {g2}");
            let csv = r.csv();
            assert!(csv.starts_with(CSV_MAGIC));
            assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 42);
        }
    }

    #[test]
    fn refuses_when_lambda_max_negative() {
        let p = Problem::preset(Preset::Cc1, 11).unwrap();
        let err = run_profile(&p, ProfileKind::Kinetic, (1e-3, 1e-3), &SteadyOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Hypothesis(_)));
        assert!(err.to_string().contains("Lambda_max > 0"), "{err}");
        let p = Problem::preset(Preset::Disjoint, 21).unwrap();
        let err = run_profile(&p, ProfileKind::Kinetic, (1e-3, 1e-3), &SteadyOptions::default()).unwrap_err();
        assert!(matches!(err, CliError::Hypothesis(_)));
    }

    #[test]
    fn paths_without_profiles() {
        assert!(ProfileKind::for_path(SweepPath::Antidiagonal).is_err());
        assert!(ProfileKind::for_path(SweepPath::Grid2d).is_err());
        assert_eq!(ProfileKind::for_path(SweepPath::Mu1ToInfinity).unwrap(), ProfileKind::Shadow);
    }
}
