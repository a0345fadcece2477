use std::f64::consts::PI;

use qcurv_core::volume::quad_volume;
use qcurv_core::{
    integrate, reduce_rhs, spherical_spec, total_volume, IntegratorControls, Outcome, ProblemSpec, Sign, TailMode,
};

/// Exact `2π² ∫₀^R r³ · 384/(1+r²)⁴ dr`.
fn spherical_ball_volume(radius: f64) -> f64 {
    let s = 1.0 + radius * radius;
    2.0 * PI * PI * (32.0 - 96.0 / (s * s) + 64.0 / (s * s * s))
}

#[test]
fn rhs_matches_finite_difference_of_trajectory() {
    let spec = ProblemSpec::new(3, 6, Sign::Minus, vec![0.4, -1.5, 2.0]).unwrap();
    let controls = IntegratorControls::default().with_tolerances(1e-13, 1e-15).with_r_max(2.0);
    let traj = integrate(&spec, &controls).unwrap();
    let r = 0.7f64;
    let rhs = reduce_rhs(&traj.state_at(r).unwrap(), &spec);
    let h = 1e-4f64;
    for (idx, &d) in rhs.iter().enumerate() {
        let fd = (traj.component_at(r + h, idx).unwrap() - traj.component_at(r - h, idx).unwrap()) / (2.0 * h);
        assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()), "component {idx}: rhs {d} vs fd {fd}");
    }
}

#[test]
fn rhs_continuous_at_origin() {
    let spec = ProblemSpec::new(2, 4, Sign::Minus, vec![-3.0, 5.0]).unwrap();
    let traj = integrate(&spec, &IntegratorControls::default().with_r_max(1.0)).unwrap();
    let at0 = reduce_rhs(&traj.nodes()[0], &spec);
    assert_eq!(at0[2], 5.0 / 4.0);
    assert!((at0[3] + (-3.0f64).exp() / 4.0).abs() < 1e-15);
    let near = reduce_rhs(&traj.state_at(1e-6).unwrap(), &spec);
    for (a, b) in at0.iter().zip(&near) {
        assert!((a - b).abs() < 1e-5, "{at0:?} vs {near:?}");
    }
}

#[test]
fn quadrature_against_closed_form_ball() {
    let spec = spherical_spec::<f64>(2).unwrap();
    let traj = integrate(&spec, &IntegratorControls::default()).unwrap();
    for radius in [1.0, 10.0, 100.0] {
        let q = quad_volume(&traj, radius).unwrap();
        let exact = spherical_ball_volume(radius);
        assert!((q / exact - 1.0).abs() < 1e-5, "R={radius}: {q} vs {exact}");
    }
    assert_eq!(quad_volume(&traj, 0.0).unwrap(), 0.0);
}

#[test]
fn quadrature_against_trapezoid_on_refined_nodes() {
    let spec = ProblemSpec::conformal(2, Sign::Minus, vec![1.0, -2.0]).unwrap();
    let traj = integrate(&spec, &IntegratorControls::default().with_r_max(20.0)).unwrap();
    let area = 2.0 * PI * PI;
    let f = |r: f64| area * r.powi(3) * traj.u_at(r).unwrap().exp();
    let nodes: Vec<f64> = traj.nodes().iter().map(|n| n.r).collect();
    let mut trap = 0.0;
    for w in nodes.windows(2) {
        let sub = 64;
        let h = (w[1] - w[0]) / sub as f64;
        for k in 0..sub {
            let a = w[0] + k as f64 * h;
            trap += 0.5 * h * (f(a) + f(a + h));
        }
    }
    let q = quad_volume(&traj, 20.0).unwrap();
    assert!((q / trap - 1.0).abs() < 1e-4, "quadrature {q} vs trapezoid {trap}");
}

#[test]
fn single_precision_smoke() {
    let spec = spherical_spec::<f32>(2).unwrap();
    let controls = IntegratorControls::<f32>::default();
    let traj = integrate(&spec, &controls).unwrap();
    assert!(matches!(traj.outcome(), Outcome::GlobalToRmax(_)));
    let u1 = traj.u_at(1.0).unwrap();
    assert!((u1 - 24f32.ln()).abs() < 1e-3, "u(1) = {u1}");
    let rep = total_volume(&spec, &controls, 1e-4).unwrap();
    let exact = 64.0 * std::f32::consts::PI.powi(2);
    assert!((rep.total / exact - 1.0).abs() < 1e-2, "V = {}", rep.total);
    assert_ne!(rep.tail_mode, TailMode::Invalid);
}
