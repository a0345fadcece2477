use num_rational::Rational64;
use proptest::prelude::*;

use qcurv_core::poly::{c0, iterated_laplacian, matching_polynomial_for, EvenPolynomial};
use qcurv_core::shooting::{alpha_data, scan_branch_serial, solve_for_volume};
use qcurv_core::verify::{barrier_check, comparison_check, scaling_check};
use qcurv_core::{
    integrate, reduce_rhs, scan_branch, spherical_spec, Branch, IntegratorControls, PathSpec, ProblemSpec, RadialState,
    Sign, TailMode, VolumeSettings,
};

fn sigma0(m: usize, a: &[f64]) -> Vec<f64> {
    let mut a = a[..m].to_vec();
    if m >= 3 {
        a[m - 2] = 0.0;
    }
    a
}

fn minus_spec() -> impl Strategy<Value = ProblemSpec<f64>> {
    (2usize..=4, prop::collection::vec(-5.0f64..5.0, 4))
        .prop_map(|(m, a)| ProblemSpec::conformal(m, Sign::Minus, sigma0(m, &a)).unwrap())
}

fn settings() -> VolumeSettings<f64> {
    VolumeSettings::default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_are_bit_identical(spec in minus_spec()) {
        let c = IntegratorControls::default().with_r_max(30.0);
        let t1 = integrate(&spec, &c).unwrap();
        let t2 = integrate(&spec, &c).unwrap();
        prop_assert_eq!(t1.to_csv(), t2.to_csv());
        let s = settings();
        let v1 = s.total_volume(&spec).unwrap();
        let v2 = s.total_volume(&spec).unwrap();
        prop_assert_eq!(v1.total.to_bits(), v2.total.to_bits());
        prop_assert_eq!(v1.to_json(), v2.to_json());
    }

    #[test]
    fn minus_sign_trajectory_shape(spec in minus_spec()) {
        let traj = integrate(&spec, &IntegratorControls::default().with_r_max(50.0)).unwrap();
        prop_assert!(traj.outcome().is_global());
        let nodes = traj.nodes();
        prop_assert_eq!(&nodes[0], &RadialState::initial(&spec));
        let top = spec.m() - 1;
        for w in nodes.windows(2) {
            prop_assert!(w[1].r > w[0].r);
            prop_assert!(w[1].w[top] <= w[0].w[top], "Δ^(m-1)u increased at r = {}", w[1].r);
            prop_assert!(w[1].is_finite());
        }
    }

    #[test]
    fn dense_output_reproduces_nodes(spec in minus_spec()) {
        let traj = integrate(&spec, &IntegratorControls::default().with_r_max(20.0)).unwrap();
        let n = 2 * spec.m();
        for node in traj.nodes().iter().step_by(7) {
            for idx in 0..n {
                let exact = if idx < spec.m() { node.w[idx] } else { node.dw[idx - spec.m()] };
                prop_assert_eq!(traj.component_at(node.r, idx).unwrap(), exact);
            }
        }
    }

    #[test]
    fn rhs_tends_to_origin_limit(spec in minus_spec(), r in 1e-9f64..1e-6) {
        let at0 = reduce_rhs(&RadialState::initial(&spec), &spec);
        let traj = integrate(&spec, &IntegratorControls::default().with_r_max(1.0)).unwrap();
        let near = reduce_rhs(&traj.state_at(r).unwrap(), &spec);
        for (a, b) in at0.iter().zip(&near) {
            prop_assert!((a - b).abs() <= 1e-4 * (1.0 + a.abs()), "{:?} vs {:?}", at0, near);
        }
    }

    #[test]
    fn volume_report_brackets_total(spec in minus_spec()) {
        let rep = settings().total_volume(&spec).unwrap();
        prop_assert!(rep.quad_part >= 0.0 && rep.tail_upper >= 0.0);
        prop_assert!(rep.quad_part <= rep.total && rep.total <= rep.quad_part + rep.tail_upper);
        if spec.m() >= 3 {
            prop_assert_eq!(rep.tail_mode, TailMode::CascadeCertified);
        }
    }

    #[test]
    fn barrier_holds_for_minus_sign(spec in minus_spec()) {
        let traj = integrate(&spec, &IntegratorControls::default()).unwrap();
        let rep = barrier_check(&traj).unwrap();
        prop_assert!(rep.passed, "{}", rep.to_json());
        prop_assert_eq!(rep.passed, rep.worst_violation >= -rep.tolerance);
    }

    #[test]
    fn comparison_holds_for_ordered_data(
        m in 2usize..=3,
        base in prop::collection::vec(-4.0f64..4.0, 3),
        gap in prop::collection::vec(0.0f64..2.0, 3),
    ) {
        let v: Vec<f64> = base[..m].iter().map(|x| x - 10.0).collect();
        let u: Vec<f64> = v.iter().zip(&gap).map(|(x, g)| x + g).collect();
        let us = ProblemSpec::conformal(m, Sign::Plus, u).unwrap();
        let vs = ProblemSpec::conformal(m, Sign::Plus, v).unwrap();
        let rep = comparison_check(&us, &vs, 50.0, &settings()).unwrap();
        prop_assert!(rep.passed, "{}", rep.to_json());
    }

    #[test]
    fn matching_polynomial_reproduces_rational_data(
        m in 2usize..=6,
        num in prop::collection::vec(-50i64..50, 6),
        den in prop::collection::vec(1i64..9, 6),
    ) {
        let dim = 2 * m;
        let a: Vec<Rational64> = (0..m).map(|i| Rational64::new(num[i], den[i])).collect();
        let phi = matching_polynomial_for(&a, dim);
        for (i, ai) in a.iter().enumerate() {
            prop_assert_eq!(iterated_laplacian(&phi, dim, i).at_origin(), *ai);
        }
        prop_assert!(iterated_laplacian(&phi, dim, m).is_zero());
        let top = EvenPolynomial::monomial(m - 1, Rational64::from_integer(1));
        prop_assert_eq!(iterated_laplacian(&top, dim, m - 1), EvenPolynomial::constant(c0::<Rational64>(m)));
    }

    #[test]
    fn scaling_error_within_ten_vol_tol(vol_tol_exp in 4i32..=8) {
        let vol_tol = 10f64.powi(-vol_tol_exp);
        let spec = ProblemSpec::new(2, 3, Sign::Minus, vec![-2.0, 6.0]).unwrap();
        let rep = scaling_check(&spec, 1.5, &settings().with_vol_tol(vol_tol)).unwrap();
        prop_assert!(rep.passed, "{}", rep.to_json());
        let vol = rep.details.iter().find(|d| d.label == "volume").unwrap();
        prop_assert!(vol.value("relative_error").unwrap() <= 10.0 * vol_tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn parallel_scan_equals_serial(b0 in 0.0f64..10.0, step in 0.5f64..5.0) {
        let template = ProblemSpec::conformal(2, Sign::Minus, vec![0.0, 0.0]).unwrap();
        let grid: Vec<f64> = (0..6).map(|k| b0 + step * k as f64).collect();
        let s = settings();
        for branch in [Branch::PlusC0, Branch::MinusC0] {
            prop_assert_eq!(
                scan_branch(branch, &grid, &template, &s),
                scan_branch_serial(branch, &grid, &template, &s)
            );
        }
    }

    #[test]
    fn alpha_volumes_decrease(a1 in 0.05f64..20.0, ratio in 1.2f64..4.0) {
        let u0 = spherical_spec::<f64>(2).unwrap();
        let s = settings();
        let vol = |alpha: f64| s.total_volume(&u0.with_data(alpha_data(&u0, alpha)).unwrap()).unwrap().total;
        let (v1, v2) = (vol(a1), vol(a1 * ratio));
        prop_assert!(v1 > v2, "V({}) = {} vs V({}) = {}", a1, v1, a1 * ratio, v2);
    }

    #[test]
    fn shoot_result_lies_on_path(target in 0.5f64..500.0) {
        let template = ProblemSpec::conformal(2, Sign::Minus, vec![0.0, 0.0]).unwrap();
        let path = PathSpec::default_path(&template, 16.0).unwrap();
        let res = solve_for_volume(target, &path, 1e-3, &settings()).unwrap();
        prop_assert!((res.achieved_volume - target).abs() <= 1e-3 * target);
        prop_assert_eq!(&res.found_data, &path.point(res.found_param));
        prop_assert!(res.bracket_lo <= res.found_param && res.found_param <= res.bracket_hi);
    }

    #[test]
    fn volume_is_locally_lipschitz(spec in minus_spec(), dir in prop::collection::vec(-1.0f64..1.0, 4), eps in 1e-5f64..1e-3) {
        let m = spec.m();
        let dir = sigma0(m, &dir);
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        let moved: Vec<f64> = spec.data().iter().zip(&dir).map(|(a, d)| a + eps * d / norm).collect();
        let s = settings().with_vol_tol(1e-8);
        let v0 = s.total_volume(&spec).unwrap().total;
        let v1 = s.total_volume(&spec.with_data(moved).unwrap()).unwrap().total;
        let lip = (v1 - v0).abs() / eps;
        prop_assert!(lip <= 50.0 * v0, "|ΔV|/|δa| = {} with V = {}", lip, v0);
    }
}

#[test]
fn halving_vol_tol_never_moves_away_from_reference() {
    let specs = [
        ProblemSpec::conformal(2, Sign::Minus, vec![-5.0, 8.0]).unwrap(),
        ProblemSpec::conformal(3, Sign::Minus, vec![0.0, 0.0, 0.0]).unwrap(),
        ProblemSpec::conformal(3, Sign::Minus, vec![1.0, 0.0, -3.0]).unwrap(),
        ProblemSpec::conformal(4, Sign::Minus, vec![-1.0, 2.0, 0.0, 5.0]).unwrap(),
    ];
    for spec in specs {
        let mut vol_tol = 1e-3;
        let reference = settings().with_vol_tol(vol_tol / 1024.0 / 100.0).total_volume(&spec).unwrap().total;
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let t = settings().with_vol_tol(vol_tol).total_volume(&spec).unwrap().total;
            let err = (t - reference).abs();
            assert!(err <= prev, "{:?}: error {err:e} after halving to {vol_tol:e}, was {prev:e}", spec.data());
            prev = err;
            vol_tol /= 2.0;
        }
    }
}
