//! The fourteen acceptance criteria as library functions.

use std::path::PathBuf;
use std::time::Instant;

use nonlocal_core::limits::{
    classify_sign_region, eta_star, lambda_field, mu2_star, mu2_threshold_lambda, lambda_tilde, prop1_root, prop2_root,
    EtaVariant, Prop1Equation, Prop2Equation, SignRegion, MU2_BRACKET,
};
use nonlocal_core::operators::{evolve_linear, BlockOperator, KernelMatrix, Resolvent};
use nonlocal_core::presets::{Preset, DEFAULT_NODES};
use nonlocal_core::spectral::{
    collatz_wielandt_bounds, dense_eigen_oracle, principal_eigen, spectral_gap_beta, SpectralOptions,
};
use nonlocal_core::steady::{h_eval, SteadyOptions};
use nonlocal_core::{CoefficientSource, CoefficientSpec, DispersalRates, Grid, KernelSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SweepConfig;
use crate::error::{CliError, Result};
use crate::profiles::{run_profile, ProfileKind, ProfileReport};
use crate::sweep::{run_sweep, SweepPath, SweepReport};
use crate::{num, write_artifact, Problem, CSV_MAGIC};

pub const CRITERIA_COUNT: usize = 14;

pub const CRITERIA: [&str; CRITERIA_COUNT] = [
    "constant-coefficient consistency",
    "both rates to zero",
    "both rates to infinity",
    "juvenile rate to zero",
    "juvenile rate to infinity",
    "antidiagonal paths",
    "sign regions and threshold rate",
    "small-dispersal profile",
    "large-dispersal profile",
    "slow-juvenile profile",
    "fast-juvenile shadow profile",
    "dense oracle equivalence",
    "structural properties",
    "determinism",
];

/// Thresholds used by the criteria; each can be overridden from `[verify]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tolerances {
    pub chain: f64,
    pub small_mu_gap: f64,
    pub large_mu_gap: f64,
    pub prop1_gap: f64,
    pub prop2_gap: f64,
    pub eta_gap: f64,
    pub threshold: f64,
    pub sign_eps: f64,
    pub kinetic_gap: f64,
    pub averaged_gap: f64,
    pub w_star_gap: f64,
    pub shadow_gap: f64,
    pub oracle: f64,
    pub mass: f64,
    pub row_sum: f64,
    pub uniform_gap: f64,
    pub h_identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            chain: 1e-9,
            small_mu_gap: 0.02,
            large_mu_gap: 0.02,
            prop1_gap: 1e-3,
            prop2_gap: 5e-3,
            eta_gap: 5e-3,
            threshold: 1e-6,
            sign_eps: 1e-8,
            kinetic_gap: 0.05,
            averaged_gap: 0.05,
            w_star_gap: 0.05,
            shadow_gap: 0.05,
            oracle: 1e-8,
            mass: 1e-12,
            row_sum: 1e-13,
            uniform_gap: 1e-10,
            h_identity: 1e-12,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 17] = [
        "chain",
        "small_mu_gap",
        "large_mu_gap",
        "prop1_gap",
        "prop2_gap",
        "eta_gap",
        "threshold",
        "sign_eps",
        "kinetic_gap",
        "averaged_gap",
        "w_star_gap",
        "shadow_gap",
        "oracle",
        "mass",
        "row_sum",
        "uniform_gap",
        "h_identity",
    ];

    pub fn set(&mut self, key: &str, value: f64) -> std::result::Result<(), String> {
        if !(value >= 0.0) {
            return Err(format!("tolerance {key} must be nonnegative, found {value}"));
        }
        let slot = match key {
            "chain" => &mut self.chain,
            "small_mu_gap" => &mut self.small_mu_gap,
            "large_mu_gap" => &mut self.large_mu_gap,
            "prop1_gap" => &mut self.prop1_gap,
            "prop2_gap" => &mut self.prop2_gap,
            "eta_gap" => &mut self.eta_gap,
            "threshold" => &mut self.threshold,
            "sign_eps" => &mut self.sign_eps,
            "kinetic_gap" => &mut self.kinetic_gap,
            "averaged_gap" => &mut self.averaged_gap,
            "w_star_gap" => &mut self.w_star_gap,
            "shadow_gap" => &mut self.shadow_gap,
            "oracle" => &mut self.oracle,
            "mass" => &mut self.mass,
            "row_sum" => &mut self.row_sum,
            "uniform_gap" => &mut self.uniform_gap,
            "h_identity" => &mut self.h_identity,
            _ => {
                return Err(format!(
                    "unknown verify key `{key}` (criteria or one of: {})",
                    Self::KEYS.join(", ")
                ))
            }
        };
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub n: usize,
    pub jobs: usize,
    /// Where CSV artifacts go; `None` keeps everything in memory.
    pub out: Option<PathBuf>,
    pub tolerances: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            n: DEFAULT_NODES,
            jobs: 1,
            out: None,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} [{:02}] {}: {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub outcomes: Vec<Outcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn text(&self) -> String {
        let mut s: String = self.outcomes.iter().map(|o| o.line() + "\n").collect();
        let passed = self.outcomes.iter().filter(|o| o.passed).count();
        s += &format!("{passed}/{} criteria passed\n", self.outcomes.len());
        s
    }

    /// Timing-free summary, identical across repeated runs.
    pub fn csv(&self) -> String {
        let mut out = format!("{CSV_MAGIC}\n# kind = verify\ncriterion,name,result,detail\n");
        for o in &self.outcomes {
            out += &format!(
                "{},{},{},{}\n",
                o.id,
                o.name,
                if o.passed { "pass" } else { "fail" },
                o.detail.replace([',', '\n'], ";")
            );
        }
        out
    }
}

struct Check {
    passed: bool,
    detail: String,
}

fn check(passed: bool, detail: String) -> Result<Check> {
    Ok(Check { passed, detail })
}

/// Runs the selected criteria in order; failures are report content, not
/// errors. An empty selection is an error.
pub fn run_verify(opts: &VerifyOptions, criteria: &[usize]) -> Result<VerifyReport> {
    if criteria.is_empty() {
        return Err(CliError::config("nothing to verify"));
    }
    if let Some(bad) = criteria.iter().find(|c| !(1..=CRITERIA_COUNT).contains(*c)) {
        return Err(CliError::config(format!("criterion {bad} out of range 1..={CRITERIA_COUNT}")));
    }
    let outcomes: Vec<Outcome> = criteria.iter().map(|&id| run_criterion(id, opts)).collect();
    let report = VerifyReport { outcomes };
    if let Some(dir) = &opts.out {
        write_artifact(&dir.join("verify.csv"), &report.csv())?;
    }
    Ok(report)
}

pub fn run_criterion(id: usize, opts: &VerifyOptions) -> Outcome {
    let start = Instant::now();
    let res = match id {
        1 => consistency_chain(opts),
        2..=6 => sweep_criterion(id, opts),
        7 => sign_regions(opts),
        8 => small_dispersal_profile(opts),
        9 => large_dispersal_profile(opts),
        10 => slow_juvenile_profile(opts),
        11 => shadow_profile(opts),
        12 => oracle_equivalence(opts),
        13 => structural(opts),
        14 => determinism(opts),
        _ => Err(CliError::config(format!("no criterion {id}"))),
    };
    let (passed, detail) = match res {
        Ok(c) => (c.passed, c.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    Outcome {
        id,
        name: CRITERIA.get(id.wrapping_sub(1)).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn consistency_chain(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.chain;
    let mut worst = 0.0_f64;
    let mut worst_at = String::new();
    for (preset, expected) in [(Preset::Cc1, (5f64.sqrt() - 3.0) / 2.0), (Preset::Cc2, 1.0)] {
        let p = Problem::preset(preset, opts.n)?;
        let c = &p.coefficients;
        let (a_s, rs) = (c.a_plus_s(), c.rs());
        let mut values = vec![
            ("Lambda_max".to_string(), lambda_field(c)?.lambda_max),
            ("Lambda_tilde".to_string(), lambda_tilde(c, &p.grid)?),
            ("eta1".to_string(), eta_star(EtaVariant::JuvenileSlowAdultFast, c, &p.grid)?.value),
            ("eta2".to_string(), eta_star(EtaVariant::JuvenileFastAdultSlow, c, &p.grid)?.value),
        ];
        let rates = [1e-3, 1.0, 1e3];
        for xi in rates {
            values.push((format!("prop1({xi:e})"), prop1_root(&p.kernel, xi, &a_s, &c.e, &rs)?.value));
            values.push((format!("prop2({xi:e})"), prop2_root(&p.kernel, xi, &c.r, &c.s, &c.e, &a_s)?.value));
        }
        for m1 in rates {
            for m2 in rates {
                let b = BlockOperator::assemble(DispersalRates::new(m1, m2)?, &p.kernel, c)?;
                let r = principal_eigen(b.operator(), &SpectralOptions::default())?;
                values.push((format!("block({m1:e},{m2:e})"), r.lambda_p));
            }
        }
        for (name, v) in values {
            let d = (v - expected).abs();
            if d > worst || worst_at.is_empty() {
                worst = worst.max(d);
                worst_at = format!("{preset} {name}");
            }
        }
    }
    check(
        worst <= tol,
        format!("42 quantities, max deviation {worst:.2e} at {worst_at} (tol {tol:.0e})"),
    )
}

/// The sweep artifacts behind criteria 2 to 6.
struct SweepSpec {
    id: usize,
    file: &'static str,
    path: SweepPath,
    values: &'static [f64],
    mu2: f64,
}

const SWEEPS: [SweepSpec; 6] = [
    SweepSpec {
        id: 2,
        file: "sweep-mu-to-zero.csv",
        path: SweepPath::MuToZero,
        values: &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5],
        mu2: 1.0,
    },
    SweepSpec {
        id: 3,
        file: "sweep-mu-to-infinity.csv",
        path: SweepPath::MuToInfinity,
        values: &[1e1, 1e2, 1e3, 1e4, 1e5],
        mu2: 1.0,
    },
    SweepSpec {
        id: 4,
        file: "sweep-mu1-to-zero.csv",
        path: SweepPath::Mu1ToZero,
        values: &[1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
        mu2: 1.0,
    },
    SweepSpec {
        id: 5,
        file: "sweep-mu1-to-infinity.csv",
        path: SweepPath::Mu1ToInfinity,
        values: &[1e1, 1e2, 1e3, 1e4, 1e5],
        mu2: 1.0,
    },
    SweepSpec {
        id: 6,
        file: "sweep-antidiagonal.csv",
        path: SweepPath::Antidiagonal,
        values: &[1e1, 1e2, 1e3, 1e4],
        mu2: 1.0,
    },
    SweepSpec {
        id: 6,
        file: "sweep-antidiagonal-mirrored.csv",
        path: SweepPath::AntidiagonalMirrored,
        values: &[1e1, 1e2, 1e3, 1e4],
        mu2: 1.0,
    },
];

fn run_spec(p: &Problem, s: &SweepSpec, jobs: usize) -> Result<SweepReport> {
    let cfg = SweepConfig {
        path: s.path,
        values: s.values.to_vec(),
        mu2: s.mu2,
        mu2_values: Vec::new(),
    };
    run_sweep(p, &cfg, jobs)
}

fn save(opts: &VerifyOptions, file: &str, contents: &str) -> Result<()> {
    match &opts.out {
        Some(dir) => write_artifact(&dir.join(file), contents),
        None => Ok(()),
    }
}

fn sweep_criterion(id: usize, opts: &VerifyOptions) -> Result<Check> {
    let t = &opts.tolerances;
    let p = Problem::preset(Preset::Het, opts.n)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for s in SWEEPS.iter().filter(|s| s.id == id) {
        let r = run_spec(&p, s, opts.jobs)?;
        save(opts, s.file, &r.csv())?;
        if r.failures() > 0 {
            passed = false;
            parts.push(format!("{} failed points", r.failures()));
        }
        let target = r
            .target
            .ok_or_else(|| CliError::config(r.target_note.clone().unwrap_or_else(|| "no limit".into())))?;
        let fin = r.final_gap().unwrap_or(f64::INFINITY);
        let (tol, monotone) = match id {
            2 => (t.small_mu_gap, Some(r.strictly_shrinking(4))),
            3 => (t.large_mu_gap, Some(r.strictly_shrinking(4))),
            4 => (t.prop1_gap, None),
            5 => (t.prop2_gap, None),
            _ => (t.eta_gap, None),
        };
        passed &= fin < tol;
        let mut part = format!(
            "{} target {} = {target:.8}, final gap {fin:.3e} (tol {tol:.0e})",
            s.path,
            s.path.target_name().unwrap_or("")
        );
        if let Some(m) = monotone {
            passed &= m;
            part += &format!(", strictly decreasing over last 4: {}", if m { "yes" } else { "no" });
        }
        parts.push(part);
    }
    check(passed, parts.join("; "))
}

fn sign_regions(opts: &VerifyOptions) -> Result<Check> {
    let t = &opts.tolerances;
    let p = Problem::preset(Preset::HetSignflip, opts.n)?;
    let c = &p.coefficients;
    let as_min = c.a_plus_s().min();
    let eta1 = eta_star(EtaVariant::JuvenileSlowAdultFast, c, &p.grid)?.value;
    let lmax = lambda_field(c)?.lambda_max;
    let r_min = c.r.min();
    let construction = as_min > 0.0 && eta1 < 0.0 && 0.0 < lmax && r_min > 0.0;
    let mut detail = format!(
        "(a+s)_min = {as_min:.3}, eta1* = {eta1:.6}, Lambda_max = {lmax:.6}, r_min = {r_min:.3}"
    );
    if !construction {
        return check(false, detail + ": preset construction violated");
    }
    let star = mu2_star(&p.kernel, c, MU2_BRACKET)?;
    let at_star = mu2_threshold_lambda(&p.kernel, c, star.value)?.lambda_p;
    let mu1 = 1e-4;
    let (below, lb) = classify_sign_region(&p.kernel, c, DispersalRates::new(mu1, star.value / 2.0)?, t.sign_eps)?;
    let (above, la) = classify_sign_region(&p.kernel, c, DispersalRates::new(mu1, 2.0 * star.value)?, t.sign_eps)?;
    let passed = below == SignRegion::Persist && above == SignRegion::Extinct && at_star.abs() <= t.threshold;
    detail += &format!(
        "; mu2* = {:.8}, |lambda_p(mu2*)| = {:.1e} (tol {:.0e}); mu2*/2: {below} ({:+.4e}), 2 mu2*: {above} ({:+.4e})",
        star.value,
        at_star.abs(),
        t.threshold,
        lb.lambda_p,
        la.lambda_p
    );
    check(passed, detail)
}

fn profile(opts: &VerifyOptions, kind: ProfileKind, mu: (f64, f64), file: &str) -> Result<ProfileReport> {
    let p = Problem::preset(Preset::Het, opts.n)?;
    let r = run_profile(&p, kind, mu, &SteadyOptions::default())?;
    save(opts, file, &r.csv())?;
    Ok(r)
}

fn gap_detail(r: &ProfileReport) -> String {
    let (g1, g2) = r.sup_gap();
    let mut s = format!("mu = ({}, {}): sup gaps {g1:.3e}, {g2:.3e}", num(r.mu.0), num(r.mu.1));
    if !r.converged {
        s += &format!(" (steady state NOT converged, residual {:.1e})", r.residual);
    }
    s
}

fn max_gap(r: &ProfileReport) -> f64 {
    let (a, b) = r.sup_gap();
    a.max(b)
}

fn small_dispersal_profile(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.kinetic_gap;
    let near = profile(opts, ProfileKind::Kinetic, (1e-4, 1e-4), "profile-kinetic-1e-4.csv")?;
    let far = profile(opts, ProfileKind::Kinetic, (1e-3, 1e-3), "profile-kinetic-1e-3.csv")?;
    let passed = near.converged && max_gap(&near) < tol && max_gap(&far) > max_gap(&near);
    check(passed, format!("{}; {} (tol {tol})", gap_detail(&near), gap_detail(&far)))
}

fn large_dispersal_profile(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.averaged_gap;
    let near = profile(opts, ProfileKind::Averaged, (1e4, 1e4), "profile-averaged-1e4.csv")?;
    let far = profile(opts, ProfileKind::Averaged, (1e3, 1e3), "profile-averaged-1e3.csv")?;
    let passed = near.converged && max_gap(&near) < tol && max_gap(&near) < max_gap(&far);
    check(passed, format!("{}; {} (tol {tol})", gap_detail(&near), gap_detail(&far)))
}

fn slow_juvenile_profile(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.w_star_gap;
    let r = profile(opts, ProfileKind::WStar, (1e-5, 1.0), "profile-w-star.csv")?;
    let mut detail = gap_detail(&r) + &format!(" (tol {tol})");
    if let Some(n) = &r.limit.note {
        detail += &format!("; {n}");
    }
    check(r.converged && r.limit.note.is_none() && max_gap(&r) < tol, detail)
}

fn shadow_profile(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.shadow_gap;
    let r = profile(opts, ProfileKind::Shadow, (1e5, 1.0), "profile-shadow.csv")?;
    let stalled = r.limit.note.as_deref().is_some_and(|n| n.starts_with("fixed-point iteration stalled"));
    let mut detail = gap_detail(&r) + &format!(" (tol {tol})");
    if let Some(n) = &r.limit.note {
        detail += &format!("; {n}");
    }
    if !stalled && max_gap(&r) >= tol {
        detail += "; DIAGNOSTIC: the computed fixed point does not match the steady state, possibly another solution of the shadow system";
    }
    check(r.converged && !stalled && max_gap(&r) < tol, detail)
}

fn random_block(rng: &mut ChaCha8Rng, n: usize) -> Result<BlockOperator> {
    let g = Grid::midpoint(n, 0.0, 1.0)?;
    let mut draw = |lo: f64, hi: f64| CoefficientSource::Samples((0..n).map(|_| rng.gen_range(lo..hi)).collect());
    let spec = CoefficientSpec {
        a: draw(0.0, 1.0),
        b: draw(0.5, 1.5),
        c: draw(0.0, 0.5),
        e: draw(0.0, 1.0),
        f: draw(0.5, 1.5),
        g: draw(0.0, 0.5),
        r: draw(0.1, 3.0),
        s: draw(0.1, 2.0),
        kernel: KernelSpec::Uniform { value: 1.0 },
    };
    let spec = CoefficientSpec {
        kernel: KernelSpec::Gaussian {
            sigma: rng.gen_range(0.1..0.5),
        },
        ..spec
    };
    let c = spec.sample(&g)?;
    c.ensure_valid(&g)?;
    let k = KernelMatrix::assemble(&c.kernel, &g);
    let mu1 = 10f64.powf(rng.gen_range(-3.0..2.0));
    let mu2 = 10f64.powf(rng.gen_range(-3.0..2.0));
    Ok(BlockOperator::assemble(DispersalRates::new(mu1, mu2)?, &k, &c)?)
}

fn oracle_equivalence(opts: &VerifyOptions) -> Result<Check> {
    let tol = opts.tolerances.oracle;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0_f64;
    let mut count = 0;
    for n in [4, 8, 16] {
        for _ in 0..5 {
            let b = random_block(&mut rng, n)?;
            let top = dense_eigen_oracle(b.matrix())?
                .into_iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            let power = SpectralOptions {
                max_power_iterations: 20_000_000,
                ..SpectralOptions::power()
            };
            for method in [power, SpectralOptions::default()] {
                let r = principal_eigen(b.operator(), &method)?;
                worst = worst.max((r.lambda_p - top).abs());
                count += 1;
            }
        }
    }
    check(worst <= tol, format!("{count} comparisons, max |difference| {worst:.2e} (tol {tol:.0e})"))
}

fn structural(opts: &VerifyOptions) -> Result<Check> {
    let t = &opts.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let het = Problem::preset(Preset::Het, opts.n)?;
    let n = het.grid.len();
    let mut failed = Vec::new();
    let mut notes = Vec::new();
    let mut record = |name: &str, ok: bool, note: String| {
        if !ok {
            failed.push(name.to_string());
        }
        notes.push(format!("{name} {note}"));
    };

    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = u.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let mass = het.grid.integrate(&het.kernel.apply(&u)?)?.abs();
        worst = worst.max(mass / norm);
    }
    record("mass", worst <= t.mass, format!("{worst:.1e}"));

    let mut worst = 0.0_f64;
    for preset in Preset::ALL {
        let p = Problem::preset(preset, opts.n)?;
        worst = worst.max(p.kernel.apply(&vec![1.0; n])?.norm_inf());
    }
    record("K1", worst <= t.row_sum, format!("{worst:.1e}"));

    let c = &het.coefficients;
    let l = c.a_plus_s();
    let res = Resolvent::new(&het.kernel, 1.0, &l, &SpectralOptions::default())?;
    let mut ok = true;
    for gap in [1e-3, 0.1, 1.0] {
        for _ in 0..3 {
            let mut z: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.1) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
            z[rng.gen_range(0..n)] = 1.0;
            let psi = res.solve(res.lambda_p() + gap, &z)?;
            ok &= psi.iter().all(|&v| v > 0.0);
        }
    }
    record("resolvent", ok, String::from(if ok { "positive" } else { "NOT positive" }));

    let mut ok = true;
    let mut hk3 = true;
    let (lower, upper) = (-c.a_plus_s().norm_inf().max(c.e.norm_inf()), c.r.norm_inf().max(c.s.norm_inf()));
    for mu in [1e-3, 1.0, 1e3] {
        let b = BlockOperator::assemble(DispersalRates::new(mu, 1.0 / mu.sqrt())?, &het.kernel, c)?;
        let r = principal_eigen(b.operator(), &SpectralOptions::default())?;
        ok &= r.lambda_low <= r.lambda_p && r.lambda_p <= r.lambda_high;
        for _ in 0..5 {
            let phi: Vec<f64> = (0..2 * n).map(|_| rng.gen_range(0.1..2.0)).collect();
            let (lo, hi) = collatz_wielandt_bounds(b.operator(), &phi)?;
            ok &= lo <= r.lambda_p && r.lambda_p <= hi;
        }
        hk3 &= lower <= r.lambda_low && r.lambda_high <= upper;
    }
    record("CW", ok, String::from(if ok { "brackets" } else { "violated" }));
    record("bounds", hk3, format!("[{lower:.3}, {upper:.3}]"));

    let (rs, e) = (c.rs(), c.e.clone());
    let mut eq1 = Prop1Equation::new(&het.kernel, 0.5, &l, &e, &rs)?;
    let edge = eq1.edge();
    let mut vals = Vec::new();
    for i in 0..12 {
        vals.push(eq1.eval(edge + 1e-3 + 0.2 * i as f64)?);
    }
    let mut mono = vals.windows(2).all(|w| w[1] < w[0]);
    let eq2 = Prop2Equation::new(&het.kernel, 1.0, &c.r, &c.s, &e, &l)?;
    let edge = eq2.edge();
    let mut vals = Vec::new();
    for i in 0..12 {
        vals.push(eq2.eval(edge + 1e-3 + 0.2 * i as f64)?);
    }
    mono &= vals.windows(2).all(|w| w[1] < w[0]);
    record("monotone", mono, String::from(if mono { "decreasing" } else { "NOT decreasing" }));

    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let (a_s, b, cc, r) = (
            rng.gen_range(0.0..5.0),
            rng.gen_range(1e-3..5.0),
            rng.gen_range(0.0..5.0),
            rng.gen_range(0.0..5.0),
        );
        let tau = rng.gen_range(0.0..10.0);
        let h = h_eval(a_s, b, cc, r, tau);
        worst = worst.max((b * h * h + (a_s + cc * tau) * h - r * tau).abs() / (1.0 + r * tau));
    }
    record("H", worst <= t.h_identity, format!("{worst:.1e}"));

    let uniform = KernelMatrix::assemble(&KernelSpec::Uniform { value: 1.0 }, &het.grid);
    let beta = spectral_gap_beta(&uniform, &het.grid)?.beta_star;
    record("beta", (beta - 1.0).abs() <= t.uniform_gap, format!("{:.1e}", (beta - 1.0).abs()));

    let gap = spectral_gap_beta(&het.kernel, &het.grid)?.beta_star;
    let u0: Vec<f64> = het.grid.nodes().iter().map(|x| (6.0 * x).sin() + rng.gen_range(-0.2..0.2)).collect();
    let dt = 0.05 / het.kernel.kvec().norm_inf();
    let mean0 = het.grid.hat_average(&u0)?;
    let dev0: Vec<f64> = u0.iter().map(|v| v - mean0).collect();
    let mut ok = gap > 0.0;
    for time in [0.5, 1.0, 2.0, 4.0] {
        let u = evolve_linear(&het.kernel, &u0, time, dt)?;
        let mean = het.grid.hat_average(&u)?;
        let dev: Vec<f64> = u.iter().map(|v| v - mean).collect();
        ok &= het.grid.l2_norm(&dev) <= (-gap * time).exp() * het.grid.l2_norm(&dev0) + 10.0 * dt;
    }
    record("decay", ok, format!("beta+ = {gap:.4}"));

    let passed = failed.is_empty();
    let mut detail = notes.join(", ");
    if !passed {
        detail = format!("failed: {}; {detail}", failed.join(" "));
    }
    check(passed, detail)
}

/// Every CSV artifact of criteria 2 to 6, computed with `jobs` threads.
fn artifact_set(opts: &VerifyOptions, jobs: usize) -> Result<Vec<(&'static str, String)>> {
    let p = Problem::preset(Preset::Het, opts.n)?;
    SWEEPS.iter().map(|s| Ok((s.file, run_spec(&p, s, jobs)?.csv()))).collect()
}

fn determinism(opts: &VerifyOptions) -> Result<Check> {
    let first = artifact_set(opts, 1)?;
    let second = artifact_set(opts, opts.jobs.max(2))?;
    let mut mismatches: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0)
        .collect();
    if let Some(dir) = &opts.out {
        for (file, contents) in &first {
            let path = dir.join(file);
            match std::fs::read(&path) {
                Ok(bytes) if bytes != contents.as_bytes() => mismatches.push(file),
                Ok(_) => {}
                Err(_) => write_artifact(&path, contents)?,
            }
        }
    }
    let bytes: usize = first.iter().map(|(_, s)| s.len()).sum();
    if mismatches.is_empty() {
        check(
            true,
            format!("{} CSV artifacts ({bytes} bytes) identical across serial and parallel runs", first.len()),
        )
    } else {
        mismatches.sort_unstable();
        mismatches.dedup();
        check(false, format!("artifacts differ: {}", mismatches.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_keys_are_settable() {
        let mut t = Tolerances::default();
        for k in Tolerances::KEYS {
            t.set(k, 0.5).unwrap();
        }
        assert_eq!(t.chain, 0.5);
        assert_eq!(t.h_identity, 0.5);
        assert!(t.set("nope", 1.0).is_err());
        assert!(t.set("chain", -1.0).is_err());
    }

    #[test]
    fn empty_selection_is_an_error() {
        let err = run_verify(&VerifyOptions::default(), &[]).unwrap_err();
        assert_eq!(err.to_string(), "nothing to verify");
    }

    #[test]
    fn broken_tolerance_fails_the_criterion() {
        let mut opts = VerifyOptions {
            n: 21,
            ..VerifyOptions::default()
        };
        assert!(run_verify(&opts, &[1]).unwrap().all_passed());
        opts.tolerances.chain = 0.0;
        opts.tolerances.oracle = 0.0;
        let report = run_verify(&opts, &[1, 12]).unwrap();
        assert!(!report.all_passed());
        assert!(report.outcomes.iter().all(|o| o.line().starts_with("FAIL")), "{}", report.text());
    }
}
