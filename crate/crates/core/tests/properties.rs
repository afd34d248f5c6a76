use iss_lab_core::boundary::{neumann_control, ControlOperator};
use iss_lab_core::gain::{estimate_gain_l2, estimate_gain_lq, simulate_final_norm, GainScenario, TimeGrid};
use iss_lab_core::metrics::{check_certificate, luxemburg_gauge, IssCertificate};
use iss_lab_core::rng::LabRng;
use iss_lab_core::signal::{lq_norm, InputSignal};
use iss_lab_core::solver::{energy_balance_residual, solve_linear, solve_semilinear, Nonlinearity, Trajectory};
use iss_lab_core::spectral::{SpectralOperator, StateVector};
use proptest::prelude::*;

fn rel_close(a: &StateVector, b: &StateVector, tol: f64) -> bool {
    let scale = a.norm().max(b.norm()).max(1e-300);
    let diff: f64 = a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    diff <= tol * scale
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = LabRng::new(seed);
    StateVector::new((0..n).map(|k| rng.uniform(-1.0, 1.0) / (1 + k) as f64).collect())
}

fn random_input(k: usize, horizon: f64, seed: u64) -> InputSignal {
    InputSignal::random_piecewise(k, 2.0, horizon, &mut LabRng::new(seed)).unwrap()
}

fn neumann(a: f64, n: usize) -> (SpectralOperator, ControlOperator) {
    let op = SpectralOperator::neumann_laplacian_1d(a, n).unwrap();
    let b = neumann_control(&op).unwrap();
    (op, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn semigroup_cocycle(a in 0.1f64..2.0, n in 1usize..32, t in 0.0f64..5.0, s in 0.0f64..5.0, seed: u64) {
        let op = SpectralOperator::neumann_laplacian_1d(a, n).unwrap();
        let x = random_state(n, seed);
        let joint = op.semigroup_apply(t + s, &x).unwrap();
        let split = op.semigroup_apply(t, &op.semigroup_apply(s, &x).unwrap()).unwrap();
        prop_assert!(rel_close(&joint, &split, 1e-12));
    }

    #[test]
    fn semigroup_contracts(a in 0.0f64..2.0, n in 1usize..32, t in 0.0f64..5.0, seed: u64) {
        let op = SpectralOperator::neumann_laplacian_1d(a, n).unwrap();
        let x = random_state(n, seed);
        prop_assert!(op.semigroup_apply(t, &x).unwrap().norm() <= x.norm());
    }

    #[test]
    fn analytic_smoothing(a in 0.1f64..2.0, n in 1usize..48, t in 1e-4f64..3.0, seed: u64) {
        let op = SpectralOperator::neumann_laplacian_1d(a, n).unwrap();
        let x = random_state(n, seed);
        let omega = op.growth_bound();
        let c = op.eigenvalues().iter().map(|l| t * -l * (l * t).exp()).fold(0.0, f64::max) * (-omega * t).exp();
        let lhs = t * op.fractional_apply(1.0, &op.semigroup_apply(t, &x).unwrap()).unwrap().norm();
        prop_assert!(lhs <= c * (omega * t).exp() * x.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn fractional_commutes_with_semigroup(n in 1usize..32, alpha in -1.0f64..1.0, t in 0.0f64..2.0, seed: u64) {
        let op = SpectralOperator::dirichlet_laplacian_1d(n).unwrap();
        let x = random_state(n, seed);
        let left = op.fractional_apply(alpha, &op.semigroup_apply(t, &x).unwrap()).unwrap();
        let right = op.semigroup_apply(t, &op.fractional_apply(alpha, &x).unwrap()).unwrap();
        prop_assert!(rel_close(&left, &right, 1e-12));
    }

    #[test]
    fn fractional_composition(n in 1usize..32, alpha in -1.0f64..1.0, beta in -1.0f64..1.0, seed: u64) {
        prop_assume!((alpha + beta).abs() <= 1.0);
        let op = SpectralOperator::neumann_laplacian_1d(1.0, n).unwrap();
        let x = random_state(n, seed);
        let two = op.fractional_apply(alpha, &op.fractional_apply(beta, &x).unwrap()).unwrap();
        let one = op.fractional_apply(alpha + beta, &x).unwrap();
        prop_assert!(rel_close(&two, &one, 1e-12));
        prop_assert!((two.space_index - one.space_index).abs() < 1e-15);
    }

    #[test]
    fn parseval(n in 1usize..40, extra in 2usize..40, dirichlet: bool, seed: u64) {
        let op = if dirichlet {
            SpectralOperator::dirichlet_laplacian_1d(n).unwrap()
        } else {
            SpectralOperator::neumann_laplacian_1d(1.0, n).unwrap()
        };
        let x = random_state(n, seed);
        let g = op.synthesize(&x, n + extra).unwrap();
        prop_assert!((g.l2_norm() - x.norm()).abs() <= 1e-12 * x.norm().max(1e-300));
        prop_assert!(rel_close(&op.analyze(&g).unwrap(), &x, 1e-12));
    }

    #[test]
    fn linear_causality(n in 1usize..16, cut in 1usize..40, seed: u64) {
        let (op, b) = neumann(1.0, n);
        let h = 0.025;
        let u = random_input(8, 1.0, seed);
        let t = cut as f64 * h;
        let mut values = u.values().to_vec();
        let breaks = u.breakpoints().to_vec();
        for (k, v) in values.iter_mut().enumerate() {
            if breaks[k] >= t {
                *v += 1.0;
            }
        }
        let altered = InputSignal::new(breaks, values).unwrap();
        let x0 = random_state(n, seed ^ 1);
        let a = solve_linear(&op, &b, &x0, &u, 1.0, h).unwrap();
        let c = solve_linear(&op, &b, &x0, &altered, 1.0, h).unwrap();
        for j in 0..a.times.len() {
            if a.times[j] <= t {
                prop_assert_eq!(&a.states[j], &c.states[j]);
            }
        }
    }

    #[test]
    fn semilinear_causality(cut in 1usize..20, seed: u64) {
        let (op, b) = neumann(1.0, 8);
        let h = 0.05;
        let u = random_input(4, 1.0, seed);
        let t = cut as f64 * h;
        let altered = u.truncated(t).extended(1.0 - t, 5.0).unwrap();
        let x0 = random_state(8, seed ^ 2);
        let f = Nonlinearity::cubic();
        let a = solve_semilinear(&op, &b, &f, &x0, &u, 1.0, h).unwrap();
        let c = solve_semilinear(&op, &b, &f, &x0, &altered, 1.0, h).unwrap();
        for j in 0..a.times.len() {
            if a.times[j] <= t {
                prop_assert_eq!(&a.states[j], &c.states[j]);
            }
        }
    }

    #[test]
    fn linear_cocycle(n in 1usize..24, split in 1usize..39, seed: u64) {
        let (op, b) = neumann(1.0, n);
        let h = 0.025;
        let u = random_input(5, 1.0, seed);
        let x0 = random_state(n, seed ^ 3);
        let t = split as f64 * h;
        let full = solve_linear(&op, &b, &x0, &u, 1.0, h).unwrap();
        let first = solve_linear(&op, &b, &x0, &u, t, h).unwrap();
        let rest = solve_linear(&op, &b, first.final_state(), &u.shifted(t), 1.0 - t, h).unwrap();
        prop_assert!(rel_close(full.final_state(), rest.final_state(), 1e-10));
    }

    #[test]
    fn semilinear_cocycle(split in 1usize..19, seed: u64) {
        let (op, b) = neumann(1.0, 8);
        let h = 0.05;
        let u = random_input(4, 1.0, seed);
        let x0 = random_state(8, seed ^ 4);
        let f = Nonlinearity::lipschitz_sine(0.5);
        let t = split as f64 * h;
        let full = solve_semilinear(&op, &b, &f, &x0, &u, 1.0, h).unwrap();
        let first = solve_semilinear(&op, &b, &f, &x0, &u, t, h).unwrap();
        let rest = solve_semilinear(&op, &b, &f, first.final_state(), &u.shifted(t), 1.0 - t, h).unwrap();
        prop_assert!(rel_close(full.final_state(), rest.final_state(), 1e-8));
    }

    #[test]
    fn superposition(n in 1usize..32, seed: u64) {
        let (op, b) = neumann(0.5, n);
        let u = random_input(5, 1.0, seed);
        let x0 = random_state(n, seed ^ 5);
        let both = solve_linear(&op, &b, &x0, &u, 1.0, 0.01).unwrap();
        let free = solve_linear(&op, &b, &x0, &InputSignal::zero(), 1.0, 0.01).unwrap();
        let forced = solve_linear(&op, &b, &StateVector::zeros(n), &u, 1.0, 0.01).unwrap();
        for j in 0..both.times.len() {
            let sum = StateVector::new(
                free.states[j].coefficients.iter().zip(&forced.states[j].coefficients).map(|(p, q)| p + q).collect(),
            );
            prop_assert!(rel_close(&both.states[j], &sum, 1e-12));
        }
    }

    #[test]
    fn zero_stays_zero(n in 1usize..32, t in 0.01f64..3.0) {
        let (op, b) = neumann(1.0, n);
        let traj = solve_linear(&op, &b, &StateVector::zeros(n), &InputSignal::zero(), t, 0.01).unwrap();
        prop_assert!(traj.states.iter().all(|x| x.coefficients.iter().all(|c| *c == 0.0)));
    }

    #[test]
    fn energy_balance_first_order(a in 0.0f64..2.0, seed: u64) {
        let (op, b) = neumann(a, 12);
        let u = random_input(4, 0.2, seed);
        let x0 = random_state(12, seed ^ 6);
        let res = |h: f64| {
            let traj = solve_linear(&op, &b, &x0, &u, 0.2, h).unwrap();
            energy_balance_residual(&op, a, &traj, &u, 64).unwrap()
        };
        let (coarse, fine) = (res(1e-3), res(5e-4));
        prop_assert!(fine <= coarse / 1.6 || fine <= 1e-9, "coarse {coarse}, fine {fine}");
    }

    #[test]
    fn holder_consistency(k in 1usize..12, p in 1.0f64..6.0, dq in 0.01f64..6.0, t in 0.05f64..1.0, seed: u64) {
        let q = p + dq;
        let u = random_input(k, 1.0, seed);
        let lp = lq_norm(&u, p, t).unwrap();
        let lq = lq_norm(&u, q, t).unwrap();
        prop_assert!(lp <= t.powf(1.0 / p - 1.0 / q) * lq * (1.0 + 1e-12) + 1e-300);
        let linf = lq_norm(&u, f64::INFINITY, t).unwrap();
        prop_assert!(lq <= t.powf(1.0 / q) * linf * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn gauge_matches_lq(k in 1usize..12, q in 1.0f64..8.0, t in 0.05f64..1.5, seed: u64) {
        let u = random_input(k, 1.0, seed);
        let g = luxemburg_gauge(&u, |x| x.powf(q), t, 0.0).unwrap();
        let n = lq_norm(&u, q, t).unwrap();
        prop_assert!((g - n).abs() <= 1e-9 * n.max(1e-300));
    }

    #[test]
    fn weighted_gauge_is_stronger(k in 1usize..10, eps in 0.01f64..3.0, t in 0.05f64..1.0, convex in 0usize..3, seed: u64) {
        let u = random_input(k, 1.0, seed);
        let phi = move |x: f64| match convex {
            0 => x * x,
            1 => x.exp_m1() - x,
            _ => x.powf(3.5),
        };
        let weighted = luxemburg_gauge(&u, phi, t, eps).unwrap();
        let plain = luxemburg_gauge(&u, phi, t, 0.0).unwrap();
        prop_assert!((-eps * t).exp() * weighted <= plain * (1.0 + 1e-9));
    }

    #[test]
    fn certificate_monotonicity(seed: u64, dc1 in 0.0f64..2.0, domega in 0.0f64..0.9, dc2 in 0.0f64..2.0) {
        let (op, b) = neumann(1.0, 8);
        let runs: Vec<(Trajectory, InputSignal)> = (0..3)
            .map(|i| {
                let u = random_input(5, 1.0, seed.wrapping_add(i));
                let x0 = random_state(8, seed.wrapping_add(100 + i));
                (solve_linear(&op, &b, &x0, &u, 1.0, 0.02).unwrap(), u)
            })
            .collect();
        let base = iss_lab_core::metrics::fit_certificate(&op, &runs, 2.0, "neumann-heat").unwrap();
        let looser = IssCertificate::new(base.c1 + dc1, base.omega * (1.0 - domega), base.c2 + dc2, 2.0, "neumann-heat").unwrap();
        for (traj, u) in &runs {
            prop_assert!(check_certificate(traj, u, &base).unwrap().holds(1e-12));
            prop_assert!(check_certificate(traj, u, &looser).unwrap().holds(1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn witness_reproduces_gain(n in 2usize..24, q_index in 0usize..4, seed: u64) {
        let q = [1.5, 2.0, 3.0, f64::INFINITY][q_index];
        let (op, b) = GainScenario::NeumannHeat { a: 1.0 }.system(n).unwrap();
        let grid = TimeGrid::for_operator(&op, 1.0).unwrap();
        let est = estimate_gain_lq(&op, &b, q, &grid, 30, seed).unwrap();
        let resim = simulate_final_norm(&op, &b, &est.witness, 1.0).unwrap();
        prop_assert!((resim - est.gain).abs() <= 0.01 * est.gain);
        let doubled = simulate_final_norm(&op, &b, &est.witness.scaled(2.0), 1.0).unwrap();
        prop_assert!((doubled - 2.0 * resim).abs() <= 1e-12 * doubled);
    }

    #[test]
    fn gain_monotone_in_horizon(n in 1usize..16, cells in 10usize..60, extra in 1usize..30) {
        let (op, b) = GainScenario::DirichletHeat.system(n).unwrap();
        let h = 0.01;
        let short = TimeGrid::uniform(h * cells as f64, cells).unwrap();
        let long = TimeGrid::uniform(h * (cells + extra) as f64, cells + extra).unwrap();
        let g1 = estimate_gain_l2(&op, &b, &short).unwrap().gain;
        let g2 = estimate_gain_l2(&op, &b, &long).unwrap().gain;
        prop_assert!(g2 >= g1 * (1.0 - 1e-9));
    }
}
