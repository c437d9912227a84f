//! Block `λ_p` along a dispersal path, compared with the path's limit.

use std::fmt;
use std::str::FromStr;

use nonlocal_core::limits::{eta_star, lambda_field, lambda_tilde, prop1_root, prop2_root, EtaVariant};
use nonlocal_core::operators::BlockOperator;
use nonlocal_core::spectral::principal_spectrum_point;
use nonlocal_core::DispersalRates;
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::error::{CliError, Result};
use crate::{num, Problem, CSV_MAGIC};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPath {
    /// `μ₁ = μ₂ = v → 0`
    MuToZero,
    /// `μ₁ = μ₂ = v → ∞`
    MuToInfinity,
    /// `μ₁ = v → 0`, `μ₂` fixed
    Mu1ToZero,
    /// `μ₁ = v → ∞`, `μ₂` fixed
    Mu1ToInfinity,
    /// `μ₁ = 1/t`, `μ₂ = t`, `t → ∞`
    Antidiagonal,
    /// `μ₁ = t`, `μ₂ = 1/t`, `t → ∞`
    AntidiagonalMirrored,
    /// Every pair of `values × mu2_values`.
    Grid2d,
}

impl SweepPath {
    pub const ALL: [SweepPath; 7] = [
        SweepPath::MuToZero,
        SweepPath::MuToInfinity,
        SweepPath::Mu1ToZero,
        SweepPath::Mu1ToInfinity,
        SweepPath::Antidiagonal,
        SweepPath::AntidiagonalMirrored,
        SweepPath::Grid2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepPath::MuToZero => "mu-to-zero",
            SweepPath::MuToInfinity => "mu-to-infinity",
            SweepPath::Mu1ToZero => "mu1-to-zero-mu2-fixed",
            SweepPath::Mu1ToInfinity => "mu1-to-infinity-mu2-fixed",
            SweepPath::Antidiagonal => "antidiagonal",
            SweepPath::AntidiagonalMirrored => "antidiagonal-mirrored",
            SweepPath::Grid2d => "grid2d",
        }
    }

    /// Name of the limit quantity the path approaches.
    pub fn target_name(self) -> Option<&'static str> {
        match self {
            SweepPath::MuToZero => Some("Lambda_max"),
            SweepPath::MuToInfinity => Some("Lambda_tilde"),
            SweepPath::Mu1ToZero => Some("prop1_root"),
            SweepPath::Mu1ToInfinity => Some("prop2_root"),
            SweepPath::Antidiagonal => Some("eta1_star"),
            SweepPath::AntidiagonalMirrored => Some("eta2_star"),
            SweepPath::Grid2d => None,
        }
    }

    /// CSV column that carries the path parameter.
    pub fn variable(self) -> &'static str {
        match self {
            SweepPath::Antidiagonal => "mu2",
            _ => "mu1",
        }
    }

    /// Values used when the configuration lists none.
    pub fn default_values(self) -> &'static [f64] {
        match self {
            SweepPath::MuToZero | SweepPath::Mu1ToZero | SweepPath::Grid2d => &[1e-1, 1e-2, 1e-3, 1e-4],
            _ => &[1e1, 1e2, 1e3, 1e4],
        }
    }

    /// `(μ₁, μ₂)` pairs ordered along the path toward its limit.
    pub fn points(self, cfg: &SweepConfig) -> Vec<(f64, f64)> {
        let mut v = if cfg.values.is_empty() {
            self.default_values().to_vec()
        } else {
            cfg.values.clone()
        };
        v.sort_by(f64::total_cmp);
        v.dedup();
        if matches!(self, SweepPath::MuToZero | SweepPath::Mu1ToZero) {
            v.reverse();
        }
        match self {
            SweepPath::MuToZero | SweepPath::MuToInfinity => v.iter().map(|&m| (m, m)).collect(),
            SweepPath::Mu1ToZero | SweepPath::Mu1ToInfinity => v.iter().map(|&m| (m, cfg.mu2)).collect(),
            SweepPath::Antidiagonal => v.iter().map(|&t| (1.0 / t, t)).collect(),
            SweepPath::AntidiagonalMirrored => v.iter().map(|&t| (t, 1.0 / t)).collect(),
            SweepPath::Grid2d => {
                let mut w = cfg.mu2_values.clone();
                w.sort_by(f64::total_cmp);
                w.dedup();
                v.iter().flat_map(|&a| w.iter().map(move |&b| (a, b))).collect()
            }
        }
    }

    /// The limit value, or `None` for `grid2d`.
    pub fn target(self, p: &Problem, mu2: f64) -> nonlocal_core::Result<Option<f64>> {
        let c = &p.coefficients;
        let k = &p.kernel;
        Ok(Some(match self {
            SweepPath::MuToZero => lambda_field(c)?.lambda_max,
            SweepPath::MuToInfinity => lambda_tilde(c, &p.grid)?,
            SweepPath::Mu1ToZero => prop1_root(k, mu2, &c.a_plus_s(), &c.e, &c.rs())?.value,
            SweepPath::Mu1ToInfinity => prop2_root(k, mu2, &c.r, &c.s, &c.e, &c.a_plus_s())?.value,
            SweepPath::Antidiagonal => eta_star(EtaVariant::JuvenileSlowAdultFast, c, &p.grid)?.value,
            SweepPath::AntidiagonalMirrored => eta_star(EtaVariant::JuvenileFastAdultSlow, c, &p.grid)?.value,
            SweepPath::Grid2d => return Ok(None),
        }))
    }
}

impl fmt::Display for SweepPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepPath {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        SweepPath::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = SweepPath::ALL.iter().map(|p| p.name()).collect();
            format!("unknown sweep path `{s}` (expected one of {})", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub lambda_p: f64,
    pub lambda_low: f64,
    pub lambda_high: f64,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub mu1: f64,
    pub mu2: f64,
    pub point: std::result::Result<PointResult, String>,
    pub limit_target: Option<f64>,
}

impl SweepRecord {
    pub fn gap(&self) -> Option<f64> {
        match (&self.point, self.limit_target) {
            (Ok(p), Some(t)) => Some((p.lambda_p - t).abs()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub label: String,
    pub path: SweepPath,
    pub target: Option<f64>,
    /// Why the target is missing, when it is.
    pub target_note: Option<String>,
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().and_then(SweepRecord::gap)
    }

    /// Gaps of the last `k` points exist and strictly decrease.
    pub fn strictly_shrinking(&self, k: usize) -> bool {
        if self.records.len() < k || k == 0 {
            return false;
        }
        let gaps: Option<Vec<f64>> = self.records[self.records.len() - k..].iter().map(SweepRecord::gap).collect();
        gaps.is_some_and(|g| g.windows(2).all(|w| w[1] < w[0]))
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.point.is_err()).count()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} sweep along {} ({} points", self.label, self.path, self.records.len());
        if self.failures() > 0 {
            s += &format!(", {} failed", self.failures());
        }
        s += ")\n";
        match (self.path.target_name(), self.target, &self.target_note) {
            (Some(name), Some(t), _) => s += &format!("  limit {name} = {t:.10}\n"),
            (Some(name), None, Some(note)) => s += &format!("  limit {name} unavailable: {note}\n"),
            _ => s += "  no single limit for this path\n",
        }
        if let Some(g) = self.final_gap() {
            let k = self.records.len().min(5);
            s += &format!(
                "  final gap {g:.3e}; gap shrinking over last {k} points: {}\n",
                if self.strictly_shrinking(k) { "yes" } else { "no" }
            );
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        out += CSV_MAGIC;
        out += "\n# kind = sweep\n";
        out += &format!("# problem = {}\n# path = {}\n", self.label, self.path);
        if let Some(name) = self.path.target_name() {
            out += &format!("# limit = {name}\n");
        }
        if let Some(note) = &self.target_note {
            out += &format!("# limit unavailable: {}\n", one_line(note));
        }
        out += "mu1,mu2,lambda_p,lambda_low,lambda_high,iterations,limit_target,gap,status\n";
        for r in &self.records {
            let target = r.limit_target.map(num).unwrap_or_default();
            let gap = r.gap().map(num).unwrap_or_default();
            match &r.point {
                Ok(p) => {
                    out += &format!(
                        "{},{},{},{},{},{},{},{},ok\n",
                        num(r.mu1),
                        num(r.mu2),
                        num(p.lambda_p),
                        num(p.lambda_low),
                        num(p.lambda_high),
                        p.iterations,
                        target,
                        gap
                    );
                }
                Err(e) => {
                    out += &format!("{},{},,,,,{},,error: {}\n", num(r.mu1), num(r.mu2), target, one_line(e));
                }
            }
        }
        out
    }
}

fn one_line(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

/// Block `λ_p` at one dispersal pair.
pub fn evaluate_point(p: &Problem, mu1: f64, mu2: f64) -> nonlocal_core::Result<PointResult> {
    let b = BlockOperator::assemble(DispersalRates::new(mu1, mu2)?, &p.kernel, &p.coefficients)?;
    let r = principal_spectrum_point(&b)?;
    Ok(PointResult {
        lambda_p: r.lambda_p,
        lambda_low: r.lambda_low,
        lambda_high: r.lambda_high,
        iterations: r.iterations,
        residual: r.residual,
    })
}

/// Evaluates every point of the path on up to `jobs` threads. Output order
/// follows the path regardless of scheduling.
pub fn run_sweep(p: &Problem, cfg: &SweepConfig, jobs: usize) -> Result<SweepReport> {
    let (target, target_note) = match cfg.path.target(p, cfg.mu2) {
        Ok(t) => (t, None),
        Err(e) => (None, Some(e.to_string())),
    };
    let points = cfg.path.points(cfg);
    let eval = |&(mu1, mu2): &(f64, f64)| SweepRecord {
        mu1,
        mu2,
        point: evaluate_point(p, mu1, mu2).map_err(|e| e.to_string()),
        limit_target: target,
    };
    let records = if jobs <= 1 {
        points.iter().map(eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::config(format!("cannot start {jobs} worker threads: {e}")))?;
        pool.install(|| points.par_iter().map(eval).collect())
    };
    Ok(SweepReport {
        label: p.label.clone(),
        path: cfg.path,
        target,
        target_note,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonlocal_core::presets::Preset;

    fn cfg(path: SweepPath, values: &[f64]) -> SweepConfig {
        SweepConfig {
            path,
            values: values.to_vec(),
            mu2: 2.0,
            mu2_values: vec![3.0, 1.0],
        }
    }

    #[test]
    fn path_names_round_trip() {
        for p in SweepPath::ALL {
            assert_eq!(p.name().parse::<SweepPath>().unwrap(), p);
        }
        assert!("sideways".parse::<SweepPath>().is_err());
    }

    #[test]
    fn points_follow_the_path() {
        let v = [1e-2, 1e-1, 1e-3];
        assert_eq!(SweepPath::MuToZero.points(&cfg(SweepPath::MuToZero, &v))[0], (1e-1, 1e-1));
        assert_eq!(SweepPath::MuToInfinity.points(&cfg(SweepPath::MuToInfinity, &v))[0], (1e-3, 1e-3));
        assert_eq!(SweepPath::Mu1ToZero.points(&cfg(SweepPath::Mu1ToZero, &v))[2], (1e-3, 2.0));
        assert_eq!(SweepPath::Antidiagonal.points(&cfg(SweepPath::Antidiagonal, &[10.0]))[0], (0.1, 10.0));
        assert_eq!(
            SweepPath::AntidiagonalMirrored.points(&cfg(SweepPath::AntidiagonalMirrored, &[10.0]))[0],
            (10.0, 0.1)
        );
        let defaults = SweepConfig {
            path: SweepPath::Antidiagonal,
            ..SweepConfig::default()
        };
        assert_eq!(SweepPath::Antidiagonal.points(&defaults).last(), Some(&(1e-4, 1e4)));
        assert_eq!(SweepPath::MuToZero.points(&defaults).last(), Some(&(1e-4, 1e-4)));
        let g = SweepPath::Grid2d.points(&cfg(SweepPath::Grid2d, &[2.0, 1.0]));
        assert_eq!(g, vec![(1.0, 1.0), (1.0, 3.0), (2.0, 1.0), (2.0, 3.0)]);
    }

    #[test]
    fn cc1_every_row_is_the_golden_value() {
        let p = Problem::preset(Preset::Cc1, 21).unwrap();
        let golden = (5f64.sqrt() - 3.0) / 2.0;
        for path in SweepPath::ALL {
            let r = run_sweep(&p, &cfg(path, &[1e-2, 1.0, 1e2]), 1).unwrap();
            for rec in &r.records {
                let pt = rec.point.as_ref().unwrap();
                assert!((pt.lambda_p - golden).abs() <= 1e-9, "{path}: {}", pt.lambda_p);
                assert!(pt.lambda_low <= pt.lambda_p && pt.lambda_p <= pt.lambda_high);
                if path != SweepPath::Grid2d {
                    assert!(rec.gap().unwrap() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn antidiagonal_targets_eta_one() {
        let p = Problem::preset(Preset::Het, 31).unwrap();
        let r = run_sweep(&p, &cfg(SweepPath::Antidiagonal, &[10.0]), 1).unwrap();
        let eta = eta_star(EtaVariant::JuvenileSlowAdultFast, &p.coefficients, &p.grid).unwrap().value;
        assert_eq!(r.target, Some(eta));
    }

    #[test]
    fn parallel_output_matches_serial() {
        let p = Problem::preset(Preset::Het, 41).unwrap();
        let c = cfg(SweepPath::MuToZero, &[1e-1, 1e-2, 1e-3, 1e-4]);
        let serial = run_sweep(&p, &c, 1).unwrap().csv();
        let parallel = run_sweep(&p, &c, 4).unwrap().csv();
        assert_eq!(serial, parallel);
        assert!(serial.starts_with("# nonlocal-spectra v1\n"));
    }

    #[test]
    fn shrinking_detection() {
        let rec = |g: f64| SweepRecord {
            mu1: 1.0,
            mu2: 1.0,
            point: Ok(PointResult {
                lambda_p: g,
                lambda_low: g,
                lambda_high: g,
                iterations: 1,
                residual: 0.0,
            }),
            limit_target: Some(0.0),
        };
        let mut r = SweepReport {
            label: "t".into(),
            path: SweepPath::MuToZero,
            target: Some(0.0),
            target_note: None,
            records: vec![rec(5.0), rec(1.0), rec(0.5), rec(0.25)],
        };
        assert!(r.strictly_shrinking(4));
        r.records[2] = rec(1.0);
        assert!(!r.strictly_shrinking(4));
        assert!(r.strictly_shrinking(1));
        assert!(!r.strictly_shrinking(5));
        assert_eq!(r.final_gap(), Some(0.25));
    }
}
