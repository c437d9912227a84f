//! Built-in coefficient sets.

use std::fmt;
use std::str::FromStr;

use crate::domain::{CoefficientSource, CoefficientSpec, KernelSpec};
use crate::error::{invalid, Error, Result};

pub const DEFAULT_KERNEL: KernelSpec = KernelSpec::Gaussian { sigma: 0.2 };
pub const DEFAULT_NODES: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Constants with `λ_p = (−3+√5)/2 < 0`.
    Cc1,
    /// Constants with `λ_p = 1`.
    Cc2,
    /// Smooth heterogeneous rates with `Λ > 0` everywhere.
    Het,
    /// `r` and `s` with disjoint supports: `Λ < 0` everywhere but `Λ̃ > 0`.
    Disjoint,
    /// Localized reproduction: `η₁* < 0 < Λ_max`.
    HetSignflip,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Cc1, Preset::Cc2, Preset::Het, Preset::Disjoint, Preset::HetSignflip];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cc1 => "CC1",
            Preset::Cc2 => "CC2",
            Preset::Het => "HET",
            Preset::Disjoint => "DISJOINT",
            Preset::HetSignflip => "HET-SIGNFLIP",
        }
    }

    pub fn spec(self) -> CoefficientSpec {
        let k = DEFAULT_KERNEL;
        match self {
            Preset::Cc1 => CoefficientSpec::constants(1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, k),
            Preset::Cc2 => CoefficientSpec::constants(0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 4.0, 1.0, k),
            Preset::Het => CoefficientSpec {
                a: expr("0.5 + 0.3*cos(2*pi*x)"),
                b: expr("1 + 0.5*x"),
                c: CoefficientSource::Constant(0.2),
                e: expr("0.5 + 0.25*sin(2*pi*x)"),
                f: CoefficientSource::Constant(1.0),
                g: expr("0.3*x"),
                r: expr("2 + cos(2*pi*x)"),
                s: expr("1 + 0.5*sin(pi*x)"),
                kernel: k,
            },
            Preset::Disjoint => CoefficientSpec {
                a: CoefficientSource::Constant(0.1),
                b: CoefficientSource::Constant(1.0),
                c: CoefficientSource::Constant(0.0),
                e: CoefficientSource::Constant(0.1),
                f: CoefficientSource::Constant(1.0),
                g: CoefficientSource::Constant(0.0),
                r: expr("4*max(0, sin(2*pi*x))"),
                s: expr("4*max(0, -sin(2*pi*x))"),
                kernel: k,
            },
            Preset::HetSignflip => CoefficientSpec {
                a: CoefficientSource::Constant(0.5),
                b: CoefficientSource::Constant(1.0),
                c: CoefficientSource::Constant(0.0),
                e: CoefficientSource::Constant(1.0),
                f: CoefficientSource::Constant(1.0),
                g: CoefficientSource::Constant(0.0),
                r: expr("0.2 + 4*exp(-100*(x - 0.5)*(x - 0.5))"),
                s: CoefficientSource::Constant(0.5),
                kernel: k,
            },
        }
    }
}

fn expr(src: &str) -> CoefficientSource {
    CoefficientSource::expr(src).expect("preset expression parses")
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase().replace('_', "-");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == up)
            .ok_or_else(|| invalid(format!("unknown preset '{s}' (expected one of CC1, CC2, HET, DISJOINT, HET-SIGNFLIP)")))
    }
}
