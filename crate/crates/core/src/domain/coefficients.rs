use std::fmt;

use crate::domain::expr::{BinOp, Expr, Func};
use crate::domain::grid::{Field, Grid};
use crate::error::{invalid, Error, Result};

/// Tolerance for the numerical kernel symmetry check.
pub const KERNEL_SYMMETRY_TOL: f64 = 1e-12;

/// Dispersal kernel `κ(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// `κ ≡ value`
    Uniform { value: f64 },
    /// Normalized Gaussian `exp(-(x-y)²/(2σ²)) / (σ√(2π))`.
    Gaussian { sigma: f64 },
    /// Arbitrary expression in `x` and `y`.
    Expr(Expr),
}

impl KernelSpec {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            KernelSpec::Uniform { value } => *value,
            KernelSpec::Gaussian { sigma } => {
                let d = (x - y) / sigma;
                (-0.5 * d * d).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
            }
            KernelSpec::Expr(e) => e.eval_xy(x, y),
        }
    }

    /// `κ(x_i, x_j)` for all node pairs.
    pub fn sample(&self, grid: &Grid) -> Vec<Vec<f64>> {
        let nodes = grid.nodes();
        nodes
            .iter()
            .map(|&x| nodes.iter().map(|&y| self.eval(x, y)).collect())
            .collect()
    }

    /// Same kernel multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> KernelSpec {
        match self {
            KernelSpec::Uniform { value } => KernelSpec::Uniform {
                value: value * factor,
            },
            other => KernelSpec::Expr(Expr::Bin(
                BinOp::Mul,
                Box::new(Expr::Num(factor)),
                Box::new(other.as_expr()),
            )),
        }
    }

    fn as_expr(&self) -> Expr {
        match self {
            KernelSpec::Uniform { value } => Expr::Num(*value),
            KernelSpec::Gaussian { sigma } => {
                // exp(-((x-y)/σ)²/2) / (σ√(2π))
                let d = Expr::Bin(
                    BinOp::Div,
                    Box::new(Expr::Bin(BinOp::Sub, Box::new(Expr::X), Box::new(Expr::Y))),
                    Box::new(Expr::Num(*sigma)),
                );
                let sq = Expr::Bin(BinOp::Mul, Box::new(d.clone()), Box::new(d));
                let arg = Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::Num(-0.5)),
                    Box::new(sq),
                );
                Expr::Bin(
                    BinOp::Mul,
                    Box::new(Expr::Num(1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt()))),
                    Box::new(Expr::Call(Func::Exp, vec![arg])),
                )
            }
            KernelSpec::Expr(e) => e.clone(),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Uniform { value } => write!(f, "uniform({value})"),
            KernelSpec::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            KernelSpec::Expr(e) => write!(f, "expr({e})"),
        }
    }
}

/// How a single coefficient function is specified.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientSource {
    Constant(f64),
    Expr(Expr),
    /// Explicit node values; must match the grid size.
    Samples(Vec<f64>),
}

impl CoefficientSource {
    pub fn expr(src: &str) -> Result<Self> {
        Ok(CoefficientSource::Expr(Expr::parse(src)?))
    }

    pub fn sample(&self, grid: &Grid) -> Result<Field> {
        match self {
            CoefficientSource::Constant(v) => {
                if !v.is_finite() {
                    return Err(invalid(format!("non-finite constant {v}")));
                }
                Ok(Field::constant(grid.len(), *v))
            }
            CoefficientSource::Expr(e) => e.eval_field(grid),
            CoefficientSource::Samples(v) => {
                if v.len() != grid.len() {
                    return Err(invalid(format!(
                        "{} samples supplied for a grid of {} nodes",
                        v.len(),
                        grid.len()
                    )));
                }
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::Evaluation {
                        node: i,
                        x: grid.nodes()[i],
                        message: "non-finite sample".into(),
                    });
                }
                Ok(Field(v.clone()))
            }
        }
    }
}

impl fmt::Display for CoefficientSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientSource::Constant(v) => write!(f, "{v}"),
            CoefficientSource::Expr(e) => write!(f, "{e}"),
            CoefficientSource::Samples(v) => write!(f, "<{} samples>", v.len()),
        }
    }
}

/// Grid-independent description of the eight rates and the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec {
    pub a: CoefficientSource,
    pub b: CoefficientSource,
    pub c: CoefficientSource,
    pub e: CoefficientSource,
    pub f: CoefficientSource,
    pub g: CoefficientSource,
    pub r: CoefficientSource,
    pub s: CoefficientSource,
    pub kernel: KernelSpec,
}

impl CoefficientSpec {
    /// All-constant coefficients with the given kernel.
    #[allow(clippy::too_many_arguments)]
    pub fn constants(
        a: f64,
        b: f64,
        c: f64,
        e: f64,
        f: f64,
        g: f64,
        r: f64,
        s: f64,
        kernel: KernelSpec,
    ) -> Self {
        use CoefficientSource::Constant as C;
        Self {
            a: C(a),
            b: C(b),
            c: C(c),
            e: C(e),
            f: C(f),
            g: C(g),
            r: C(r),
            s: C(s),
            kernel,
        }
    }

    pub fn sample(&self, grid: &Grid) -> Result<CoefficientSet> {
        Ok(CoefficientSet {
            a: self.a.sample(grid)?,
            b: self.b.sample(grid)?,
            c: self.c.sample(grid)?,
            e: self.e.sample(grid)?,
            f: self.f.sample(grid)?,
            g: self.g.sample(grid)?,
            r: self.r.sample(grid)?,
            s: self.s.sample(grid)?,
            kernel: self.kernel.clone(),
        })
    }
}

/// The eight model rates sampled on a grid, plus the kernel.
///
/// `a, e` are death rates, `b, f` self-limitation, `c, g` interstage
/// competition, `r` adult reproduction, `s` juvenile maturation.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub a: Field,
    pub b: Field,
    pub c: Field,
    pub e: Field,
    pub f: Field,
    pub g: Field,
    pub r: Field,
    pub s: Field,
    pub kernel: KernelSpec,
}

impl CoefficientSet {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn named_fields(&self) -> [(&'static str, &Field); 8] {
        [
            ("a", &self.a),
            ("b", &self.b),
            ("c", &self.c),
            ("e", &self.e),
            ("f", &self.f),
            ("g", &self.g),
            ("r", &self.r),
            ("s", &self.s),
        ]
    }

    /// `a + s`, the total juvenile loss rate.
    pub fn a_plus_s(&self) -> Field {
        self.a.add(&self.s)
    }

    /// `r s`
    pub fn rs(&self) -> Field {
        self.r.mul(&self.s)
    }

    /// Coefficient set with every rate replaced by its spatial average.
    pub fn averaged(&self, grid: &Grid) -> Result<CoefficientSet> {
        let avg = |f: &Field| -> Result<Field> { Ok(Field::constant(f.len(), grid.hat_average(f)?)) };
        Ok(CoefficientSet {
            a: avg(&self.a)?,
            b: avg(&self.b)?,
            c: avg(&self.c)?,
            e: avg(&self.e)?,
            f: avg(&self.f)?,
            g: avg(&self.g)?,
            r: avg(&self.r)?,
            s: avg(&self.s)?,
            kernel: self.kernel.clone(),
        })
    }

    /// Checks the standing hypotheses on the grid: nonnegative finite
    /// rates, `b, f > 0`, `r, s ≢ 0`, and a positive symmetric kernel.
    /// Hölder continuity cannot be checked on samples.
    pub fn validate(&self, grid: &Grid) -> ValidationReport {
        let mut report = ValidationReport::default();
        let n = grid.len();
        for (name, field) in self.named_fields() {
            if field.len() != n {
                report.push(format!("{name} has {} values for {n} nodes", field.len()), vec![]);
                continue;
            }
            let bad: Vec<usize> = (0..n).filter(|&i| !field[i].is_finite()).collect();
            if !bad.is_empty() {
                report.push(format!("{name} not finite"), bad);
            }
            let neg: Vec<usize> = (0..n).filter(|&i| field[i] < 0.0).collect();
            if !neg.is_empty() {
                report.push(format!("{name} negative"), neg);
            }
        }
        if !report.is_ok() {
            return report;
        }
        for (name, field) in [("b", &self.b), ("f", &self.f)] {
            let bad: Vec<usize> = (0..n).filter(|&i| field[i] <= 0.0).collect();
            if !bad.is_empty() {
                report.push(format!("{name} not strictly positive"), bad);
            }
        }
        for (name, field) in [("r", &self.r), ("s", &self.s)] {
            if field.iter().all(|&v| v <= 0.0) {
                report.push(format!("{name} identically zero"), vec![]);
            }
        }
        let nodes = grid.nodes();
        let mut bad_rows = Vec::new();
        for i in 0..n {
            let row_bad = (0..n).any(|j| {
                let kij = self.kernel.eval(nodes[i], nodes[j]);
                let kji = self.kernel.eval(nodes[j], nodes[i]);
                !(kij.is_finite() && kij > 0.0) || (kij - kji).abs() > KERNEL_SYMMETRY_TOL
            });
            if row_bad {
                bad_rows.push(i);
            }
        }
        if !bad_rows.is_empty() {
            report.push("kernel not symmetric/positive".to_string(), bad_rows);
        }
        report
    }

    pub fn ensure_valid(&self, grid: &Grid) -> Result<()> {
        let report = self.validate(grid);
        if report.is_ok() {
            Ok(())
        } else {
            Err(invalid(format!("invalid coefficients: {report}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub message: String,
    /// Offending node indices (kernel rows for kernel violations).
    pub nodes: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, message: String, nodes: Vec<usize>) {
        self.violations.push(Violation { message, nodes });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            f.write_str(&v.message)?;
            if !v.nodes.is_empty() {
                let shown: Vec<String> = v.nodes.iter().take(5).map(usize::to_string).collect();
                let more = if v.nodes.len() > 5 { ", ..." } else { "" };
                write!(f, " at nodes [{}{more}]", shown.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Dispersal rates `(μ₁, μ₂)` of juveniles and adults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersalRates {
    mu1: f64,
    mu2: f64,
}

impl DispersalRates {
    pub fn new(mu1: f64, mu2: f64) -> Result<Self> {
        if !(mu1.is_finite() && mu1 > 0.0 && mu2.is_finite() && mu2 > 0.0) {
            return Err(invalid(format!("dispersal rates must be positive, got ({mu1}, {mu2})")));
        }
        Ok(Self { mu1, mu2 })
    }

    pub fn mu1(&self) -> f64 {
        self.mu1
    }

    pub fn mu2(&self) -> f64 {
        self.mu2
    }

    pub fn max(&self) -> f64 {
        self.mu1.max(self.mu2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::midpoint(11, 0.0, 1.0).unwrap()
    }

    fn base() -> CoefficientSpec {
        CoefficientSpec::constants(1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 2.0, 1.0, KernelSpec::Gaussian { sigma: 0.2 })
    }

    #[test]
    fn positive_constants_are_ok() {
        let g = grid();
        let c = base().sample(&g).unwrap();
        assert!(c.validate(&g).is_ok());
    }

    #[test]
    fn zero_b_is_rejected() {
        let g = grid();
        let mut spec = base();
        spec.b = CoefficientSource::Constant(0.0);
        let report = spec.sample(&g).unwrap().validate(&g);
        assert!(report.mentions("b not strictly positive"), "{report}");
        assert_eq!(report.violations[0].nodes.len(), 11);
    }

    #[test]
    fn antisymmetric_kernel_is_rejected() {
        let g = grid();
        let mut spec = base();
        spec.kernel = KernelSpec::Expr(Expr::parse_xy("x - y").unwrap());
        let report = spec.sample(&g).unwrap().validate(&g);
        assert!(report.mentions("kernel not symmetric/positive"), "{report}");
    }

    #[test]
    fn identically_zero_r_and_negative_values() {
        let g = grid();
        let mut spec = base();
        spec.r = CoefficientSource::Constant(0.0);
        spec.e = CoefficientSource::expr("x - 0.5").unwrap();
        let report = spec.sample(&g).unwrap().validate(&g);
        assert!(report.mentions("e negative"));
        spec.e = CoefficientSource::Constant(1.0);
        let report = spec.sample(&g).unwrap().validate(&g);
        assert!(report.mentions("r identically zero"));
    }

    #[test]
    fn samples_must_match_grid() {
        let g = grid();
        assert!(CoefficientSource::Samples(vec![1.0; 3]).sample(&g).is_err());
        assert_eq!(CoefficientSource::Samples(vec![2.0; 11]).sample(&g).unwrap().0, vec![2.0; 11]);
    }

    #[test]
    fn scaled_kernel_matches_pointwise() {
        let k = KernelSpec::Gaussian { sigma: 0.3 };
        let k2 = k.scaled(2.0);
        for (x, y) in [(0.1, 0.4), (0.5, 0.5), (0.9, 0.0)] {
            assert!((k2.eval(x, y) - 2.0 * k.eval(x, y)).abs() < 1e-14);
        }
    }

    #[test]
    fn dispersal_rates_must_be_positive() {
        assert!(DispersalRates::new(1.0, 2.0).is_ok());
        assert!(DispersalRates::new(0.0, 2.0).is_err());
        assert!(DispersalRates::new(1.0, -2.0).is_err());
    }
}
