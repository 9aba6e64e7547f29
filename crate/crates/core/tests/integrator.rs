mod common;

use common::*;
use sddpde_core::history::{HistoryBuffer, InitialFunction, InitialShape};
use sddpde_core::integrator::{check_manifold, make_manifold_initial, solve, SolverConfig};
use sddpde_core::rhs::{DelaySpec, Nonlinearity};

#[test]
fn zero_forcing_is_pure_decay() {
    let rhs = rhs_with(4, 16, Nonlinearity::Constant { value: 0.0 }, DelaySpec::default(), 1.0, 0.3);
    let h = smooth_history(4, 1.0, 1.0);
    let traj = solve(&h, &rhs, &SolverConfig::new(0.01, 1.0)).unwrap();
    let g0 = h.head_value();
    for (i, &t) in traj.times().iter().enumerate() {
        for k in 0..4 {
            let exact = (-(rhs.basis().eigenvalues()[k] + 0.3) * t).exp() * g0[k];
            assert!((traj.state(i)[k] - exact).abs() < 1e-14, "t={t} k={k}");
        }
    }
}

#[test]
fn constant_forcing_matches_variation_of_constants() {
    let c_b = 0.8;
    let rhs = rhs_with(5, 16, Nonlinearity::Constant { value: c_b }, DelaySpec::default(), 1.0, 0.0);
    let h = smooth_history(5, 1.0, 1.0);
    let traj = solve(&h, &rhs, &SolverConfig::new(0.01, 1.0)).unwrap();
    let basis = rhs.basis();
    let g0 = h.head_value();
    let g_t = traj.final_state();
    for k in 0..5 {
        let ip: f64 = basis.node_row(k).iter().zip(basis.quad_weights()).map(|(e, w)| c_b * e * w).sum();
        let l = basis.eigenvalues()[k];
        let exact = (-l).exp() * g0[k] + ip * (1.0 - (-l).exp()) / l;
        assert!((g_t[k] - exact).abs() < 1e-10, "mode {k}: {} vs {exact}", g_t[k]);
    }
}

#[test]
fn zero_history_stays_zero() {
    let rhs = nicholson(6, 16);
    let h = HistoryBuffer::constant(1.0, &[0.0; 6]);
    let traj = solve(&h, &rhs, &SolverConfig::new(0.01, 2.0)).unwrap();
    assert!(traj.final_state().iter().all(|&x| x == 0.0));
}

#[test]
fn derivative_record_satisfies_the_equation() {
    let rhs = nicholson(6, 16);
    let cfg = SolverConfig::new(0.005, 2.0);
    let traj = solve(&smooth_history(6, 2.0, 1.0), &rhs, &cfg).unwrap();
    let mut field = vec![0.0; 6];
    for (i, &t) in traj.times().iter().enumerate().skip(1) {
        rhs.vector_field_into(&traj.view(t).unwrap(), &mut field).unwrap();
        let resid: Vec<f64> = field.iter().zip(traj.derivative(i)).map(|(a, b)| a - b).collect();
        assert!(rhs.basis().power_norm(-0.5, &resid) <= 10.0 * cfg.fp_tol, "t={t}");
    }
    assert!(traj.fp_iterations().iter().all(|&n| n <= 5));
}

#[test]
fn agrees_with_method_of_steps_reference() {
    let tau = 0.5;
    let rhs = rhs_with(1, 16, Nonlinearity::Nicholson { p: 2.0 }, DelaySpec::Constant { tau0: tau }, 1.0, 0.1);
    let shape = InitialShape::Polynomial { coeffs: vec![vec![0.8], vec![0.6], vec![0.3]] };
    let hist = |s: f64| (0.8 + 0.6 * s + 0.3 * s * s, 0.6 + 0.6 * s);
    let reference = MethodOfSteps::run(&rhs, tau, hist, 5.0, 1e-5);
    let h = shape.render(1.0, 1, 64).unwrap();
    let traj = solve(&h, &rhs, &SolverConfig::new(2.5e-4, 5.0)).unwrap();
    let mut worst = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate().step_by(40) {
        worst = worst.max((traj.state(i)[0] - reference.at(t)).abs());
    }
    assert!(worst <= 1e-6, "max error {worst:e}");
}

#[test]
fn semigroup_property_on_the_step_grid() {
    let rhs = nicholson(8, 32);
    let cfg = SolverConfig::new(0.01, 1.6);
    let h = smooth_history(8, 1.5, 1.0);
    let one = solve(&h, &rhs, &cfg).unwrap();
    let mid = one.snapshot(0.7).unwrap();
    let two = solve(&mid, &rhs, &cfg.with_final_time(0.9)).unwrap();
    let a = one.snapshot(1.6).unwrap();
    let b = two.snapshot(two.final_time()).unwrap();
    let diff = a.difference(&b).unwrap();
    assert!(diff.norm_h(rhs.basis()) < 1e-8, "{:e}", diff.norm_h(rhs.basis()));
}

#[test]
fn second_order_self_convergence() {
    let rhs = nicholson(8, 32);
    let h = sddpde_core::integrator::manifold_from_buffer(smooth_history(8, 2.0, 1.0), &rhs).unwrap();
    let run = |dt: f64| solve(&h, &rhs, &SolverConfig::new(dt, 2.0)).unwrap().snapshot(2.0).unwrap();
    let (a, b, c) = (run(0.02), run(0.01), run(0.005));
    let e1 = a.difference(&b).unwrap().norm_h(rhs.basis());
    let e2 = b.difference(&c).unwrap().norm_h(rhs.basis());
    assert!(e1 / e2 >= 3.0, "{e1:e} {e2:e}");
}

#[test]
fn manifold_initial_examples() {
    let rhs = nicholson(4, 16);
    let zero = InitialFunction::new(InitialShape::Polynomial { coeffs: vec![vec![0.0; 4]] }, 1.0);
    let z = make_manifold_initial(&zero, &rhs).unwrap();
    assert_eq!(check_manifold(&z.view(), &rhs).unwrap(), 0.0);

    let shape = InitialFunction::new(smooth_shape(4, 1.0), 1.0);
    let once = make_manifold_initial(&shape, &rhs).unwrap();
    assert!(check_manifold(&once.view(), &rhs).unwrap() < 1e-12);
    let twice = sddpde_core::integrator::manifold_from_buffer(once.clone(), &rhs).unwrap();
    let diff = once.difference(&twice).unwrap();
    assert!(diff.norm_x(rhs.basis()) < 1e-14);
    // away from the blend the shape is untouched
    let raw = shape.render(4).unwrap();
    for s in [-1.0, -0.5, -0.2] {
        assert_eq!(raw.eval(s).unwrap(), once.eval(s).unwrap());
    }
}

#[test]
fn manifold_constant_history_closed_form() {
    let c_b = 0.4;
    let c = 0.7;
    let rhs = rhs_with(3, 16, Nonlinearity::Constant { value: c_b }, DelaySpec::default(), 1.0, 0.2);
    let shape = InitialFunction::new(InitialShape::Polynomial { coeffs: vec![vec![c]] }, 1.0);
    let h = make_manifold_initial(&shape, &rhs).unwrap();
    let basis = rhs.basis();
    let ip: f64 = basis.node_row(0).iter().zip(basis.quad_weights()).map(|(e, w)| c_b * e * w).sum();
    let want = ip - (1.0 + 0.2) * c;
    assert!((h.head_deriv()[0] - want).abs() < 1e-12);
    assert!(check_manifold(&h.view(), &rhs).unwrap() < 1e-12);

    // b ≡ 0, d = 0: residual of the raw constant equals λ_1^{1/2}|c|
    let rhs0 = rhs_with(3, 16, Nonlinearity::Constant { value: 0.0 }, DelaySpec::default(), 1.0, 0.0);
    let raw = HistoryBuffer::constant(1.0, &[c, 0.0, 0.0]);
    assert!((check_manifold(&raw.view(), &rhs0).unwrap() - c).abs() < 1e-15);
}

#[test]
fn rejects_bad_step_sizes() {
    let rhs = nicholson(2, 8);
    let h = smooth_history(2, 1.0, 1.0);
    assert!(solve(&h, &rhs, &SolverConfig::new(1.5, 3.0)).is_err());
    let constant = rhs_with(2, 8, Nonlinearity::Nicholson { p: 2.0 }, DelaySpec::Constant { tau0: 1.0 }, 1.0, 0.1);
    // constant delay τ₀ ≥ dt is allowed even when dt > r is not
    assert!(solve(&h, &constant, &SolverConfig::new(0.5, 1.0)).is_ok());
}
