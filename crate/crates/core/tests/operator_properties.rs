use nonlocal_core::operators::{evolve_linear, BlockOperator, KernelMatrix, Resolvent};
use nonlocal_core::presets::Preset;
use nonlocal_core::spectral::{spectral_gap_beta, SpectralOptions};
use nonlocal_core::*;
use proptest::prelude::*;

fn gaussian(n: usize, lo: f64, hi: f64, sigma: f64) -> (Grid, KernelMatrix) {
    let g = Grid::midpoint(n, lo, hi).unwrap();
    let k = KernelMatrix::assemble(&KernelSpec::Gaussian { sigma }, &g);
    (g, k)
}

/// Textbook Gaussian elimination without pivoting refinements, used as an
/// independent path for `(νI − ξM + diag(l))ψ = z`.
fn naive_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

#[test]
fn preset_kernel_matrices_annihilate_constants() {
    let g = Grid::midpoint(201, 0.0, 1.0).unwrap();
    for p in Preset::ALL {
        let c = p.spec().sample(&g).unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let r = k.apply(&vec![1.0; 201]).unwrap();
        assert!(r.norm_inf() <= 1e-13, "{p}: {}", r.norm_inf());
        let m = k.matrix();
        for i in 0..201 {
            for j in 0..201 {
                if i != j {
                    assert!(m[(i, j)] > 0.0);
                }
            }
        }
    }
}

#[test]
fn resolvent_matches_naive_elimination() {
    let (g, k) = gaussian(8, 0.0, 1.0, 0.3);
    let l: Vec<f64> = g.nodes().iter().map(|x| 0.5 + x * x).collect();
    let z: Vec<f64> = g.nodes().iter().map(|x| (3.0 * x).sin() + 1.2).collect();
    let xi = 0.7;
    let res = Resolvent::new(&k, xi, &l, &SpectralOptions::default()).unwrap();
    let nu = res.lambda_p() + 0.3;
    let psi = res.solve(nu, &z).unwrap();
    let m = k.matrix();
    let a: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            (0..8)
                .map(|j| {
                    let d = if i == j { nu + l[i] } else { 0.0 };
                    d - xi * m[(i, j)]
                })
                .collect()
        })
        .collect();
    let oracle = naive_solve(a, z.clone());
    for i in 0..8 {
        assert!((psi[i] - oracle[i]).abs() <= 1e-12 * (1.0 + oracle[i].abs()), "{i}: {} vs {}", psi[i], oracle[i]);
    }
    assert!(res.residual(nu, &psi, &z) <= 1e-10 * 2.2);
}

#[test]
fn uniform_kernel_gap_is_one() {
    for n in [11, 64, 201] {
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let k = KernelMatrix::assemble(&KernelSpec::Uniform { value: 1.0 }, &g);
        let beta = spectral_gap_beta(&k, &g).unwrap().beta_star;
        assert!((beta - 1.0).abs() <= 1e-10, "n={n}: {beta}");
    }
}

#[test]
fn long_time_mass_conservation() {
    let (g, k) = gaussian(101, 0.0, 1.0, 0.2);
    let u0: Vec<f64> = g.nodes().iter().map(|x| (-30.0 * (x - 0.3) * (x - 0.3)).exp()).collect();
    let dt = 0.5 / k.kvec().norm_inf();
    let u = evolve_linear(&k, &u0, 50.0, dt).unwrap();
    let m0 = g.integrate(&u0).unwrap();
    assert!((g.integrate(&u).unwrap() - m0).abs() <= 1e-8);
}

fn field(n: usize, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, n)
}

fn sized_field(lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    (2usize..40).prop_flat_map(move |n| field(n, lo, hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_rows_sum_to_zero(n in 2usize..80, sigma in 0.05f64..2.0, lo in -2.0f64..1.0, len in 0.1f64..5.0) {
        let (_, k) = gaussian(n, lo, lo + len, sigma);
        let r = k.apply(&vec![1.0; n]).unwrap();
        prop_assert!(r.norm_inf() <= 1e-13);
    }

    #[test]
    fn weighted_mass_is_conserved(u in sized_field(-5.0, 5.0), sigma in 0.05f64..1.0) {
        let n = u.len();
        let (g, k) = gaussian(n, 0.0, 1.0, sigma);
        let ku = k.apply(&u).unwrap();
        let unorm = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        prop_assert!(g.integrate(&ku).unwrap().abs() <= 1e-12 * unorm.max(1e-300));
    }

    #[test]
    fn block_is_cooperative(
        a in sized_field(0.0, 2.0),
        mu1 in 1e-4f64..1e3,
        mu2 in 1e-4f64..1e3,
    ) {
        let n = a.len();
        let g = Grid::midpoint(n, 0.0, 1.0).unwrap();
        let mut spec = Preset::Het.spec();
        spec.a = CoefficientSource::Samples(a);
        let c = spec.sample(&g).unwrap();
        let k = KernelMatrix::assemble(&c.kernel, &g);
        let b = BlockOperator::assemble(DispersalRates::new(mu1, mu2).unwrap(), &k, &c).unwrap();
        let m = b.matrix();
        let shift = b.shift();
        for i in 0..2 * n {
            for j in 0..2 * n {
                if i != j {
                    prop_assert!(m[(i, j)] >= 0.0);
                } else {
                    prop_assert!(m[(i, i)] + shift > 0.0);
                }
            }
        }
    }

    #[test]
    fn resolvent_is_strictly_positive(
        lz in (2usize..30).prop_flat_map(|n| (field(n, 0.0, 3.0), field(n, 0.0, 2.0), 0..n)),
        xi in 0.01f64..10.0,
        gap in 1e-3f64..5.0,
    ) {
        let (l, mut z, spike) = lz;
        for v in z.iter_mut() {
            if *v < 1.0 {
                *v = 0.0;
            }
        }
        z[spike] = z[spike].max(0.5);
        let n = l.len();
        let (_, k) = gaussian(n, 0.0, 1.0, 0.2);
        let res = Resolvent::new(&k, xi, &l, &SpectralOptions::default()).unwrap();
        let nu = res.lambda_p() + gap;
        let psi = res.solve(nu, &z).unwrap();
        prop_assert!(psi.iter().all(|&p| p > 0.0), "{:?}", psi.values());
        let znorm = z.iter().fold(0.0f64, |m, x| m.max(*x));
        prop_assert!(res.residual(nu, &psi, &z) <= 1e-10 * znorm);
    }

    #[test]
    fn resolvent_rejects_spectral_values(l in sized_field(0.0, 3.0), xi in 0.01f64..10.0, below in 0.0f64..2.0) {
        let (_, k) = gaussian(l.len(), 0.0, 1.0, 0.2);
        let res = Resolvent::new(&k, xi, &l, &SpectralOptions::default()).unwrap();
        prop_assert!(res.solve(res.lambda_p() - below, &vec![1.0; l.len()]).is_err());
    }

    #[test]
    fn evolution_decays_at_gap_rate(
        u0 in (4usize..40).prop_flat_map(|n| field(n, -1.0, 1.0)),
        sigma in 0.1f64..0.5,
        t in 0.1f64..5.0,
    ) {
        let n = u0.len();
        let (g, k) = gaussian(n, 0.0, 1.0, sigma);
        let beta = spectral_gap_beta(&k, &g).unwrap().beta_star;
        prop_assert!(beta > 0.0);
        let dt = 0.05 / k.kvec().norm_inf();
        let u = evolve_linear(&k, &u0, t, dt).unwrap();
        let mean0 = g.hat_average(&u0).unwrap();
        let mean = g.hat_average(&u).unwrap();
        prop_assert!((mean - mean0).abs() <= 1e-12 * (1.0 + mean0.abs()) * (t / dt));
        let dev0: Vec<f64> = u0.iter().map(|x| x - mean0).collect();
        let dev: Vec<f64> = u.iter().map(|x| x - mean).collect();
        let bound = (-beta * t).exp() * g.l2_norm(&dev0) + 10.0 * dt;
        prop_assert!(g.l2_norm(&dev) <= bound, "{} > {}", g.l2_norm(&dev), bound);
    }
}
