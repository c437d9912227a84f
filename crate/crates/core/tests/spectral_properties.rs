use nonlocal_core::operators::{BlockOperator, KernelMatrix};
use nonlocal_core::presets::Preset;
use nonlocal_core::spectral::{collatz_wielandt_bounds, principal_eigen, principal_spectrum_point, SpectralOptions};
use nonlocal_core::*;
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Draw {
    a: Vec<f64>,
    e: Vec<f64>,
    r: Vec<f64>,
    s: Vec<f64>,
    sigma: f64,
    mu1: f64,
    mu2: f64,
}

impl Draw {
    fn coefficients(&self) -> (Grid, CoefficientSet) {
        let g = Grid::midpoint(self.a.len(), 0.0, 1.0).unwrap();
        let spec = CoefficientSpec {
            a: CoefficientSource::Samples(self.a.clone()),
            b: CoefficientSource::Constant(1.0),
            c: CoefficientSource::Constant(0.1),
            e: CoefficientSource::Samples(self.e.clone()),
            f: CoefficientSource::Constant(1.0),
            g: CoefficientSource::Constant(0.1),
            r: CoefficientSource::Samples(self.r.clone()),
            s: CoefficientSource::Samples(self.s.clone()),
            kernel: KernelSpec::Gaussian { sigma: self.sigma },
        };
        let c = spec.sample(&g).unwrap();
        (g, c)
    }

    fn lambda(&self) -> f64 {
        let (g, c) = self.coefficients();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let b = BlockOperator::assemble(DispersalRates::new(self.mu1, self.mu2).unwrap(), &k, &c).unwrap();
        principal_spectrum_point(&b).unwrap().lambda_p
    }
}

fn draws() -> impl Strategy<Value = Draw> {
    (2usize..24).prop_flat_map(|n| {
        let f = move |lo: f64, hi: f64| prop::collection::vec(lo..hi, n);
        (f(0.0, 2.0), f(0.0, 2.0), f(0.05, 3.0), f(0.05, 3.0), 0.05f64..0.8, -4.0f64..3.0, -4.0f64..3.0).prop_map(
            |(a, e, r, s, sigma, l1, l2)| Draw {
                a,
                e,
                r,
                s,
                sigma,
                mu1: 10f64.powf(l1),
                mu2: 10f64.powf(l2),
            },
        )
    })
}

#[test]
fn preset_certificates_hold_across_scales() {
    let g = Grid::midpoint(101, 0.0, 1.0).unwrap();
    for p in Preset::ALL {
        let c = p.spec().sample(&g).unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        for mu in [1e-5, 1e-2, 1.0, 1e2, 1e5] {
            let b = BlockOperator::assemble(DispersalRates::new(mu, mu).unwrap(), &k, &c).unwrap();
            let r = principal_spectrum_point(&b).unwrap();
            let scale = 1.0 + r.lambda_p.abs();
            assert!(r.residual <= 1e-9 * scale, "{p} mu={mu}: residual {}", r.residual);
            assert!(r.width() <= 1e-8 * scale, "{p} mu={mu}: width {}", r.width());
            assert!(r.eigvec.iter().all(|&v| v > 0.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn spectrum_certificate_and_bounds(d in draws()) {
        let (g, c) = d.coefficients();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let b = BlockOperator::assemble(DispersalRates::new(d.mu1, d.mu2).unwrap(), &k, &c).unwrap();
        let r = principal_spectrum_point(&b).unwrap();
        let scale = 1.0 + r.lambda_p.abs();
        prop_assert!(r.lambda_low <= r.lambda_p && r.lambda_p <= r.lambda_high);
        prop_assert!(r.width() <= 1e-8 * scale);
        prop_assert!(r.residual <= 1e-9 * scale);
        prop_assert!(r.eigvec.iter().all(|&v| v > 0.0));
        let sup = r.eigvec.iter().fold(0.0f64, |m, &v| m.max(v));
        prop_assert!((sup - 1.0).abs() < 1e-12);

        let lower = -c.a_plus_s().norm_inf().max(c.e.norm_inf());
        let upper = c.r.norm_inf().max(c.s.norm_inf());
        prop_assert!(lower <= r.lambda_low && r.lambda_high <= upper);
    }

    #[test]
    fn collatz_wielandt_brackets_for_any_positive_phi(
        d in draws(),
        seed in prop::collection::vec(0.01f64..10.0, 48),
    ) {
        let (g, c) = d.coefficients();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let b = BlockOperator::assemble(DispersalRates::new(d.mu1, d.mu2).unwrap(), &k, &c).unwrap();
        let r = principal_spectrum_point(&b).unwrap();
        let phi: Vec<f64> = seed.iter().cycle().take(b.operator().dim()).copied().collect();
        let (lo, hi) = collatz_wielandt_bounds(b.operator(), &phi).unwrap();
        let tol = 1e-10 * (1.0 + r.lambda_p.abs());
        prop_assert!(lo <= r.lambda_p + tol && r.lambda_p <= hi + tol, "{lo} {} {hi}", r.lambda_p);
        let (elo, ehi) = collatz_wielandt_bounds(b.operator(), &r.eigvec).unwrap();
        prop_assert!(ehi - elo <= 1e-8 * (1.0 + r.lambda_p.abs()));
    }

    #[test]
    fn lambda_monotone_in_rates(d in draws(), bump in prop::collection::vec(0.0f64..1.0, 24), which in 0usize..4) {
        let base = d.lambda();
        let mut up = d.clone();
        let target = match which {
            0 => &mut up.r,
            1 => &mut up.s,
            2 => &mut up.a,
            _ => &mut up.e,
        };
        for (v, db) in target.iter_mut().zip(&bump) {
            *v += db;
        }
        let moved = up.lambda();
        let tol = 1e-9 * (1.0 + base.abs());
        if which < 2 {
            prop_assert!(moved >= base - tol, "{which}: {base} -> {moved}");
        } else {
            prop_assert!(moved <= base + tol, "{which}: {base} -> {moved}");
        }
    }

    #[test]
    fn scalar_operator_with_zero_potential_has_zero_bound(n in 1usize..40, xi in 1e-3f64..1e3) {
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma: 0.2 }, &g);
        let r = principal_eigen(&k.scalar_operator(xi, &vec![0.0; n]), &SpectralOptions::default()).unwrap();
        prop_assert!(r.lambda_p.abs() <= 1e-12);
    }
}
