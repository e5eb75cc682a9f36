use densflow::bony::{bony_decomposition, commutator, commutator_split};
use densflow::elliptic::{solve_pressure, CoefficientField, PressureOptions};
use densflow::harness::{generate_spectral, Envelope, SampleSpec};
use densflow::lp::{block, block_norms, decompose, PartitionOfUnity};
use densflow::ns::{run, ScalarFamily, SolverConfig, VectorFamily};
use densflow::spectral::ops::{divergence, gradient_part, leray_project, partial};
use densflow::spectral::{product, GridSpec, ProductRule, SpectralField, TorusGrid};
use densflow::transport::{advect, frozen, TransportOptions};
use proptest::prelude::*;

fn random(g: TorusGrid, seed: u64, kmax: i64) -> SpectralField {
    let cap = g.sizes().iter().min().unwrap() / 2 - 1;
    ScalarFamily::Random { amp: 1.0, seed, kmax: kmax.min(cap as i64), decay: 1.0 }.build(g).unwrap()
}

/// Extrema of the trigonometric polynomial `u` (modes up to `kmax`) sampled
/// on a grid `factor` times finer.
fn fine_extrema(u: &SpectralField, kmax: i64, factor: usize) -> (f64, f64) {
    let fine = u.grid().refined(factor).unwrap();
    let mut v = SpectralField::zeros(fine);
    for i in -kmax..=kmax {
        for j in -kmax..=kmax {
            v.set_mode([i, j, 0], u.mode([i, j, 0]));
        }
    }
    let r = v.inverse();
    (r.min(), r.max())
}

fn random_vector(g: TorusGrid, seed: u64, kmax: i64) -> Vec<SpectralField> {
    (0..g.dim() as u64).map(|i| random(g, seed * 7 + i, kmax)).collect()
}

fn max_diff(a: &[SpectralField], b: &[SpectralField]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inverse().sub(&y.inverse()).unwrap().max_abs()).fold(0.0, f64::max)
}

fn sup(u: &[SpectralField]) -> f64 {
    u.iter().map(|c| c.inverse().max_abs()).fold(0.0, f64::max)
}

fn grids() -> impl Strategy<Value = TorusGrid> {
    prop_oneof![
        Just(TorusGrid::cubic(2, 16).unwrap()),
        Just(TorusGrid::cubic(2, 32).unwrap()),
        Just(TorusGrid::new(&[16, 32], &[1.0, 3.0]).unwrap()),
        Just(TorusGrid::cubic(3, 8).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval(g in grids(), seed in 0u64..1000, kmax in 1i64..6) {
        let u = random(g, seed, kmax);
        let quad = u.inverse().lp_norm(2.0).unwrap();
        prop_assert!((u.l2_norm() - quad).abs() <= 1e-12 * quad);
    }

    #[test]
    fn leray_is_idempotent_and_solenoidal(g in grids(), seed in 0u64..1000, kmax in 1i64..6) {
        let u = random_vector(g, seed, kmax);
        let pu = leray_project(&u).unwrap();
        let ppu = leray_project(&pu).unwrap();
        let scale = sup(&u);
        prop_assert!(max_diff(&pu, &ppu) <= 1e-12 * scale);
        let div = divergence(&pu).unwrap().inverse().max_abs();
        prop_assert!(div <= 1e-12 * scale * g.wavenumbers().kmax());
        let q = gradient_part(&u).unwrap();
        let sum: Vec<SpectralField> = pu.iter().zip(&q).map(|(a, b)| a.add(b).unwrap()).collect();
        prop_assert!(max_diff(&sum, &u) <= 1e-12 * scale);
    }

    #[test]
    fn blocks_commute_with_derivatives(g in grids(), seed in 0u64..1000, l in -1i32..4) {
        let u = random(g, seed, 8);
        let pou = PartitionOfUnity::default();
        for k in 0..g.dim() {
            let a = block(&partial(&u, k), &pou, l);
            let b = partial(&block(&u, &pou, l), k);
            prop_assert!(a.max_diff(&b) <= 1e-15 * (1.0 + u.max_abs_coeff()) * g.wavenumbers().kmax());
        }
    }

    #[test]
    fn blocks_reconstruct_the_field(g in grids(), seed in 0u64..1000, kmax in 1i64..10) {
        let u = random(g, seed, kmax);
        let back = decompose(&u, &PartitionOfUnity::default()).reconstruct().unwrap();
        prop_assert!(max_diff(&[back], &[u.clone()]) <= 1e-12 * sup(&[u]));
    }

    #[test]
    fn besov_norm_nonincreasing_in_r(
        seed in 0u64..1000,
        s in -1.0f64..2.0,
        p in prop::sample::select(vec![1.0, 2.0, 4.0, f64::INFINITY]),
    ) {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let bn = block_norms(&random(g, seed, 12), p).unwrap();
        let rs = [1.0, 1.5, 2.0, 4.0, f64::INFINITY];
        for w in rs.windows(2) {
            let (a, b) = (bn.besov(s, w[0]), bn.besov(s, w[1]));
            prop_assert!(b <= a * (1.0 + 1e-14), "r {} -> {}: {a} < {b}", w[0], w[1]);
        }
    }

    #[test]
    fn lp_norm_nondecreasing_in_p_on_unit_box(seed in 0u64..1000, kmax in 1i64..8) {
        let g = TorusGrid::new(&[32, 32], &[1.0, 1.0]).unwrap();
        let u = random(g, seed, kmax).inverse();
        let ps = [1.0, 1.5, 2.0, 3.0, 8.0, f64::INFINITY];
        let norms: Vec<f64> = ps.iter().map(|&p| u.lp_norm(p).unwrap()).collect();
        for w in norms.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-14), "{norms:?}");
        }
    }

    #[test]
    fn blockwise_interpolation_with_r_infinite(
        seed in 0u64..1000,
        s1 in -1.0f64..2.0,
        s2 in -1.0f64..2.0,
        theta in 0.0f64..=1.0,
    ) {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let bn = block_norms(&random(g, seed, 12), 2.0).unwrap();
        let lhs = bn.besov(theta * s1 + (1.0 - theta) * s2, f64::INFINITY);
        let rhs = bn.besov(s1, f64::INFINITY).powf(theta) * bn.besov(s2, f64::INFINITY).powf(1.0 - theta);
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn bony_identity(
        g in grids(),
        seed in 0u64..1000,
        rule in prop::sample::select(vec![ProductRule::Native, ProductRule::Padded32, ProductRule::Dealiased23]),
    ) {
        let u = random(g, 2 * seed, 6);
        let v = random(g, 2 * seed + 1, 6);
        let (tuv, tvu, r) = bony_decomposition(&u, &v, rule).unwrap();
        let err = product(&u, &v, rule).unwrap().sub(&tuv).unwrap().sub(&tvu).unwrap().sub(&r).unwrap();
        prop_assert!(err.inverse().max_abs() <= 1e-12 * sup(&[u]) * sup(&[v]));
    }

    #[test]
    fn commutator_is_the_sum_of_five_pieces(seed in 0u64..1000, q in -1i32..4, k in 0usize..2) {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let a = random(g, 2 * seed, 8);
        let w = random(g, 2 * seed + 1, 8);
        let full = commutator(&a, &w, k, q).unwrap();
        let split = commutator_split(&a, &w, k, q).unwrap().recombine().unwrap();
        let scale = sup(&[a]) * sup(&[w]) * g.wavenumbers().kmax();
        prop_assert!(max_diff(&[full], &[split]) <= 1e-12 * scale);
    }

    #[test]
    fn harness_samples_are_deterministic(seed in 0u64..1000, s in -1.0f64..2.0) {
        let spec = SampleSpec::new(s, 2.0, 2.0, Envelope::Power { decay: 1.0 }, seed,
            GridSpec { sizes: vec![32, 32], periods: None });
        let a = generate_spectral(&spec).unwrap();
        let b = generate_spectral(&spec).unwrap();
        prop_assert_eq!(a.coeffs(), b.coeffs());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn elliptic_residual_below_tolerance(seed in 0u64..1000, amp in 0.0f64..0.3) {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let a = ScalarFamily::Random { amp, seed, kmax: 4, decay: 1.0 }.build(g).unwrap();
        let coef = CoefficientField::new(a.inverse()).unwrap();
        let f = random_vector(g, seed + 1, 6);
        let opts = PressureOptions::default();
        let sol = solve_pressure(&coef, &f, &opts).unwrap();
        prop_assert!(sol.residual <= opts.tol);
        prop_assert!(sol.contraction() < 1.0);
    }

    #[test]
    fn elliptic_solution_tends_to_gradient_part(seed in 0u64..1000) {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let f = random_vector(g, seed, 6);
        let q = gradient_part(&f).unwrap();
        let a = ScalarFamily::Random { amp: 1.0, seed: seed + 1, kmax: 4, decay: 1.0 }.build(g).unwrap().inverse();
        let err = |eps: f64| {
            let coef = CoefficientField::new(a.scale(eps)).unwrap();
            let sol = solve_pressure(&coef, &f, &PressureOptions { tol: 1e-13, ..Default::default() }).unwrap();
            max_diff(&sol.grad, &q)
        };
        let (e1, e2, e3) = (err(1e-2), err(5e-3), err(2.5e-3));
        prop_assert!(e1 > e2 && e2 > e3);
        for ratio in [e2 / e1, e3 / e2] {
            prop_assert!((ratio - 0.5).abs() < 0.05, "ratio {ratio}");
        }
    }

    #[test]
    fn transport_keeps_mean_and_bounds(seed in 0u64..1000, amp in 0.2f64..1.5) {
        let g = TorusGrid::cubic(2, 64).unwrap();
        let v = frozen(VectorFamily::Random { amp, seed, kmax: 2, decay: 1.0 }.build(g).unwrap());
        let a0 = random(g, seed + 1, 3);
        let opts = TransportOptions { t_final: 0.5, dt: 0.01, record_velocity: false, ..Default::default() };
        let run = advect(&a0, &v, None, &opts).unwrap();
        let start = run.diagnostics[0];
        let (lo, hi) = fine_extrema(&a0, 3, 8);
        let scale = hi.abs().max(lo.abs());
        for d in &run.diagnostics {
            prop_assert!((d.mean - start.mean).abs() <= 1e-10 * scale);
            prop_assert!(d.max <= hi + 1e-4 * scale && d.min >= lo - 1e-4 * scale,
                "t = {}: [{}, {}] vs [{lo}, {hi}]", d.t, d.min, d.max);
        }
    }

    #[test]
    fn homogeneous_energy_decays_mode_by_mode(amp in 0.1f64..1.5, mu in 0.05f64..0.3, k in 1i64..3) {
        let cfg = SolverConfig {
            grid: GridSpec { sizes: vec![32, 32], periods: None },
            mu,
            dt: 0.01,
            t_final: 0.2,
            ..Default::default()
        };
        let g = cfg.grid().unwrap();
        let u0 = VectorFamily::TaylorGreen { amp, k }.build(g).unwrap();
        let zero = vec![SpectralField::zeros(g); 2];
        let tr = run(&SpectralField::zeros(g), &u0, &zero, &cfg).unwrap();
        prop_assert!(tr.energy.windows(2).all(|w| w[1].energy <= w[0].energy));
        let e0 = tr.energy[0].energy;
        for r in &tr.energy {
            let exact = e0 * (-4.0 * mu * (k * k) as f64 * r.t).exp();
            prop_assert!((r.energy - exact).abs() <= 1e-10 * e0);
        }
        prop_assert!(tr.state.divergence_defect().unwrap() <= 1e-12);
    }

    #[test]
    fn velocity_mean_and_divergence_with_density(seed in 0u64..1000, a_amp in 0.0f64..0.3) {
        let cfg = SolverConfig {
            grid: GridSpec { sizes: vec![32, 32], periods: None },
            dt: 0.01,
            t_final: 0.1,
            snapshot_every: Some(2),
            ..Default::default()
        };
        let g = cfg.grid().unwrap();
        let a0 = ScalarFamily::Random { amp: a_amp, seed, kmax: 3, decay: 1.0 }.build(g).unwrap();
        let u0 = VectorFamily::Random { amp: 1.0, seed: seed + 1, kmax: 3, decay: 1.0 }.build(g).unwrap();
        let zero = vec![SpectralField::zeros(g); 2];
        let tr = run(&a0, &u0, &zero, &cfg).unwrap();
        let m0 = tr.snapshots[0].momentum().unwrap();
        for s in &tr.snapshots {
            prop_assert!(s.divergence_defect().unwrap() <= 1e-12);
            for (x, y) in s.momentum().unwrap().iter().zip(&m0) {
                prop_assert!((x - y).abs() <= 1e-6, "momentum {x} vs {y}");
            }
        }
    }
}
