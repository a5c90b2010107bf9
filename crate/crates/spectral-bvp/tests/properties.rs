use proptest::prelude::*;
use spectral_bvp::inverse::MomentTable;
use spectral_bvp::quasi_ode::wronskian;
use spectral_bvp::{Potential, Problem, RationalBC, Solver, SolverConfig, SpectralData, ThetaBranch};
use std::f64::consts::PI;

fn bc(index: i32, h0: f64, h: f64, locs: &[f64], res: &[f64]) -> RationalBC {
    if index < 0 {
        return RationalBC::Dirichlet;
    }
    let h0 = if index % 2 == 1 { h0 } else { 0.0 };
    let mut at = 0.0;
    let poles: Vec<(f64, f64)> = (0..(index / 2) as usize)
        .map(|k| {
            at += locs[k];
            (at, res[k])
        })
        .collect();
    RationalBC::with_poles(h0, h, &poles).unwrap()
}

fn bc_strategy(min_index: i32) -> impl Strategy<Value = RationalBC> {
    (
        min_index..=4,
        0.2f64..2.0,
        -1.5f64..1.5,
        prop::collection::vec(0.5f64..8.0, 2),
        prop::collection::vec(0.1f64..2.0, 2),
    )
        .prop_map(|(i, h0, h, locs, res)| bc(i, h0, h, &locs, &res))
}

fn potential_strategy() -> impl Strategy<Value = Potential> {
    (
        prop::collection::vec(-0.5f64..0.5, 0..4),
        prop::collection::vec(-0.5f64..0.5, 0..3),
    )
        .prop_map(|(c, s)| Potential::fourier(c, s).unwrap())
}

fn problem_strategy() -> impl Strategy<Value = Problem> {
    (potential_strategy(), bc_strategy(-1), bc_strategy(-1)).prop_map(|(s, f, g)| Problem::new(s, f, g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn theta_raises_then_lowers_back(
        f in bc_strategy(0),
        below in 0.1f64..5.0,
        gap in 0.05f64..3.0,
        rho in -2.0f64..2.0,
    ) {
        let mu = f.smallest_pole().min(10.0) - below;
        let tau = f.eval(mu) + gap;
        let g = f.theta(mu, tau, rho, None).unwrap();
        prop_assert_eq!(g.index(), f.index() + 1);
        prop_assert!((g.eval(mu) - rho).abs() < 1e-9);
        let back = g.theta(mu, rho, tau, Some(ThetaBranch::Equal)).unwrap();
        prop_assert_eq!(back.index(), f.index());
        let d = back.coefficient_distance(&f);
        prop_assert!(d < 1e-7, "distance {} between {:?} and {:?}", d, back, f);
    }

    #[test]
    fn herglotz_functions_increase(f in bc_strategy(1), x in -20.0f64..40.0) {
        let near_pole = f.poles().iter().any(|p| (p.location - x).abs() < 1e-6);
        prop_assume!(!near_pole);
        prop_assert!(f.eval_deriv(x) > 0.0);
    }

    #[test]
    fn potentials_have_zero_mean(s in potential_strategy(), v in prop::collection::vec(-2.0f64..2.0, 9)) {
        // Simpson on nodes aligned with the 8 grid cells is exact for the cubic interpolant.
        let mean = |p: &Potential| {
            let n = 4096;
            let y = p.sample(n);
            let w = |i: usize| if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            (0..=n).map(|i| w(i) * y[i]).sum::<f64>() / (3.0 * n as f64)
        };
        prop_assert!(mean(&s).abs() < 1e-9);
        let x: Vec<f64> = (0..9).map(|i| PI * i as f64 / 8.0).collect();
        let pl = Potential::piecewise_linear(x, v.clone()).unwrap();
        prop_assert!(mean(&pl).abs() < 1e-9);
        let grid = Potential::grid(v).unwrap();
        prop_assert!(mean(&grid).abs() < 1e-9);
    }

    #[test]
    fn fourier_fit_reproduces_fourier(s in potential_strategy()) {
        let fit = s.fit_fourier(4, 3, 512).unwrap();
        prop_assert!(fit.l2_distance(&s) < 1e-10);
    }

    #[test]
    fn wronskian_of_phi_psi_is_chi(p in problem_strategy(), lambda in -5.0f64..60.0) {
        let sv = Solver::new(&p, SolverConfig::default());
        let phi = sv.phi(lambda);
        let psi = sv.psi(lambda);
        let at_zero = wronskian(&phi, &psi).unwrap();
        let chi = sv.char_function(lambda);
        let scale = phi.max_abs_y() * psi.max_abs_y() * (1.0 + lambda.abs()).sqrt() + 1.0;
        prop_assert!((at_zero - chi).abs() <= 1e-8 * scale, "{} vs {}", at_zero, chi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn raising_f_interlaces_spectra(p in problem_strategy(), alpha in 0.1f64..3.0) {
        prop_assume!(!p.f.is_dirichlet());
        let q = Problem::new(p.s.clone(), p.f.shift(alpha), p.big_f.clone());
        let a = Solver::new(&p, SolverConfig::default()).eigenvalues(12).unwrap();
        let b = Solver::new(&q, SolverConfig::default()).eigenvalues(12).unwrap();
        for n in 0..12 {
            prop_assert!(b[n] < a[n], "raising f must lower every eigenvalue, n = {}", n);
            if n > 0 {
                prop_assert!(a[n - 1] < b[n], "interlacing fails at n = {}", n);
            }
        }
    }

    #[test]
    fn hankel_tables_are_positive_definite(
        d in 1usize..=2,
        big_n in 0i32..=1,
        omega in -1.0f64..1.0,
        wiggle in prop::collection::vec(-0.3f64..0.3, 120),
    ) {
        let m = 2 * d as i32 + 1;
        let l = 0.5 * (m + big_n) as f64;
        let eigenvalues: Vec<f64> = (0..120)
            .map(|n| {
                let k = n as f64 - l;
                k * k.abs() + omega + 0.2 * wiggle[n] / (1.0 + k * k)
            })
            .collect();
        prop_assume!(eigenvalues.windows(2).all(|w| w[1] > w[0]));
        let norming_constants = (0..120)
            .map(|n| {
                let k = (n as f64 - l).abs().max(0.5);
                0.5 * PI * k.powi(2 * m) * (1.0 + wiggle[n] / (1.0 + k * k))
            })
            .collect();
        let data = SpectralData { ind_f: m, ind_big_f: big_n, eigenvalues, norming_constants };
        let table = MomentTable::build(&data, d, 2000).unwrap();
        prop_assert!(table.hankel().cholesky().is_some());
    }
}
