//! Report of every dispersal-independent limit quantity.

use nonlocal_core::limits::{
    eta_star, lambda_field, lambda_tilde, mu2_star, prop1_root, prop2_root, r0_field, EtaVariant, RootResult, MU2_BRACKET,
};

use crate::{num, Problem, CSV_MAGIC};

#[derive(Debug, Clone, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub kind: Option<String>,
    pub bracket: Option<(f64, f64)>,
    pub residual: Option<f64>,
}

impl Quantity {
    fn plain(value: f64) -> Self {
        Self {
            value,
            kind: None,
            bracket: None,
            residual: None,
        }
    }
}

impl From<RootResult> for Quantity {
    fn from(r: RootResult) -> Self {
        Self {
            value: r.value,
            kind: Some(r.kind.to_string()),
            bracket: Some(r.bracket),
            residual: Some(r.residual),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: String,
    /// Absent quantities carry the reason.
    pub value: Result<Quantity, String>,
}

#[derive(Debug, Clone)]
pub struct LimitsReport {
    pub label: String,
    pub entries: Vec<Entry>,
    /// Caveats about hypotheses that fail for these coefficients.
    pub flags: Vec<String>,
}

impl LimitsReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.value.as_ref().ok())
            .map(|q| q.value)
    }

    pub fn text(&self) -> String {
        let mut s = format!("limit quantities for {}\n", self.label);
        for e in &self.entries {
            match &e.value {
                Ok(q) => {
                    s += &format!("  {:<22} {:>+.10}", e.name, q.value);
                    if let Some(k) = &q.kind {
                        s += &format!("  [{k}]");
                    }
                    if let Some((lo, hi)) = q.bracket {
                        s += &format!("  bracket ({lo:.6e}, {hi:.6e})");
                    }
                    if let Some(r) = q.residual {
                        s += &format!("  residual {r:.2e}");
                    }
                    s += "\n";
                }
                Err(why) => s += &format!("  {:<22} unavailable: {why}\n", e.name),
            }
        }
        for f in &self.flags {
            s += &format!("  note: {f}\n");
        }
        s
    }

    pub fn csv(&self) -> String {
        let mut out = format!("{CSV_MAGIC}\n# kind = limits\n# problem = {}\n", self.label);
        for f in &self.flags {
            out += &format!("# note: {}\n", f.replace(',', ";"));
        }
        out += "quantity,value,kind,bracket_lo,bracket_hi,residual,status\n";
        for e in &self.entries {
            match &e.value {
                Ok(q) => {
                    let (lo, hi) = q
                        .bracket
                        .map(|(a, b)| (num(a), num(b)))
                        .unwrap_or_default();
                    out += &format!(
                        "{},{},{},{},{},{},ok\n",
                        e.name,
                        num(q.value),
                        q.kind.clone().unwrap_or_default(),
                        lo,
                        hi,
                        q.residual.map(num).unwrap_or_default()
                    );
                }
                Err(why) => out += &format!("{},,,,,,unavailable: {}\n", e.name, why.replace([',', '\n'], ";")),
            }
        }
        out
    }
}

fn entry(name: impl Into<String>, v: Result<Quantity, String>) -> Entry {
    Entry { name: name.into(), value: v }
}

/// Evaluates each quantity independently so one failure does not hide the
/// others. `fixed_mu` lists the `ξ` values for the mixed-limit roots.
pub fn run_limits(p: &Problem, fixed_mu: &[f64]) -> LimitsReport {
    let c = &p.coefficients;
    let g = &p.grid;
    let k = &p.kernel;
    let err = |e: nonlocal_core::Error| e.to_string();
    let mut entries = Vec::new();
    let mut flags = Vec::new();

    let lf = lambda_field(c).map_err(err);
    entries.push(entry("Lambda_max", lf.as_ref().map(|l| Quantity::plain(l.lambda_max)).map_err(Clone::clone)));
    entries.push(entry("Lambda_tilde", lambda_tilde(c, g).map(Quantity::plain).map_err(err)));
    match r0_field(c) {
        Ok(r0) => {
            entries.push(entry("R0_min", Ok(Quantity::plain(r0.min()))));
            entries.push(entry("R0_max", Ok(Quantity::plain(r0.max()))));
        }
        Err(e) => {
            entries.push(entry("R0_min", Err(e.to_string())));
            entries.push(entry("R0_max", Err(e.to_string())));
        }
    }
    entries.push(entry(
        "eta1_star",
        eta_star(EtaVariant::JuvenileSlowAdultFast, c, g).map(Quantity::from).map_err(err),
    ));
    entries.push(entry(
        "eta2_star",
        eta_star(EtaVariant::JuvenileFastAdultSlow, c, g).map(Quantity::from).map_err(err),
    ));
    entries.push(entry("mu2_star", mu2_star(k, c, MU2_BRACKET).map(Quantity::from).map_err(err)));
    let (a_s, rs) = (c.a_plus_s(), c.rs());
    for &xi in fixed_mu {
        entries.push(entry(
            format!("prop1_root(mu2={})", num(xi)),
            prop1_root(k, xi, &a_s, &c.e, &rs).map(Quantity::from).map_err(err),
        ));
        entries.push(entry(
            format!("prop2_root(mu2={})", num(xi)),
            prop2_root(k, xi, &c.r, &c.s, &c.e, &a_s).map(Quantity::from).map_err(err),
        ));
    }

    if c.r.min() <= 0.0 {
        flags.push(format!(
            "r_min = {} is not positive; the antidiagonal limits and the sign classification are stated for r_min > 0",
            c.r.min()
        ));
    }
    if a_s.min() <= 0.0 {
        flags.push("(a+s)_min = 0; the juvenile-slow limits use the boundary convention".into());
    }
    if let (Ok(l), Ok(t)) = (&lf, lambda_tilde(c, g)) {
        if (l.lambda_max > 0.0) != (t > 0.0) {
            flags.push(format!(
                "Lambda_max ({:+.6}) and Lambda_tilde ({t:+.6}) have opposite signs",
                l.lambda_max
            ));
        }
    }
    LimitsReport {
        label: p.label.clone(),
        entries,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nonlocal_core::presets::Preset;

    #[test]
    fn cc2_limits_are_all_one() {
        let p = Problem::preset(Preset::Cc2, 21).unwrap();
        let r = run_limits(&p, &[0.5, 1.0]);
        for name in [
            "Lambda_max",
            "Lambda_tilde",
            "eta1_star",
            "eta2_star",
            "prop1_root(mu2=5e-1)",
            "prop2_root(mu2=1e0)",
        ] {
            let v = r.get(name).unwrap_or_else(|| panic!("{name} missing"));
            assert!((v - 1.0).abs() <= 1e-9, "{name}: {v}");
        }
        assert_eq!(r.get("R0_min"), Some(4.0));
        assert!(r.entries.iter().find(|e| e.name == "mu2_star").unwrap().value.is_err());
        assert!(r.csv().starts_with(CSV_MAGIC));
    }

    #[test]
    fn cc1_limits_are_golden() {
        let p = Problem::preset(Preset::Cc1, 11).unwrap();
        let r = run_limits(&p, &[1.0]);
        let golden = (5f64.sqrt() - 3.0) / 2.0;
        for e in &r.entries {
            if e.name.starts_with("R0") || e.name == "mu2_star" {
                continue;
            }
            let v = e.value.as_ref().unwrap().value;
            assert!((v - golden).abs() <= 1e-9, "{}: {v}", e.name);
        }
    }

    #[test]
    fn disjoint_reports_both_signs() {
        let p = Problem::preset(Preset::Disjoint, 101).unwrap();
        let r = run_limits(&p, &[1.0]);
        assert!(r.get("Lambda_max").unwrap() < 0.0);
        assert!(r.get("Lambda_tilde").unwrap() > 0.0);
        assert!(r.flags.iter().any(|f| f.contains("opposite signs")));
        assert!(r.flags.iter().any(|f| f.contains("r_min")));
        let text = r.text();
        assert!(text.contains("Lambda_max") && text.contains("Lambda_tilde"));
    }
}
