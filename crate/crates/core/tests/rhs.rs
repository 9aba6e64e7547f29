mod common;

use std::f64::consts::PI;

use common::*;
use sddpde_core::analysis::audit::{audit_hb, audit_lemma1, lemma1_ratio};
use sddpde_core::history::{HistoryBuffer, InitialShape};
use sddpde_core::rhs::{lipschitz_f1, DelaySpec, KernelSpec, Nonlinearity, Profile};
use sddpde_core::Execution;

/// Composite Simpson on `[a, b]` with `n` (even) intervals.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

fn e(k: usize, x: f64) -> f64 {
    (2.0 / PI).sqrt() * ((k + 1) as f64 * x).sin()
}

fn bump(y: f64) -> f64 {
    let u = (y - PI / 2.0) / (PI / 4.0);
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - u * u).powi(3)
    }
}

fn gauss(z: f64) -> f64 {
    (-(z * z) / 0.04).exp()
}

/// `[B v](x)` by Simpson over the bump support.
fn apply_b(v: &[f64], x: f64) -> f64 {
    simpson(PI / 4.0, 3.0 * PI / 4.0, 2000, |y| {
        let u: f64 = v.iter().enumerate().map(|(k, c)| c * e(k, y)).sum();
        u * gauss(x - y) * bump(y)
    })
}

#[test]
fn kernel_matrix_matches_brute_force_quadrature() {
    let m = 5;
    let rhs = nicholson(m, 32);
    for k in 0..m {
        let mut unit = vec![0.0; m];
        unit[k] = 1.0;
        let bk: Vec<(f64, f64)> = (0..=1600).map(|i| i as f64 * PI / 1600.0).map(|x| (x, apply_b(&unit, x))).collect();
        for j in 0..m {
            // Simpson over the tabulated outer integrand.
            let h = PI / 1600.0;
            let mut s = 0.0;
            for (i, (x, b)) in bk.iter().enumerate() {
                let w = if i == 0 || i == 1600 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * b * e(j, *x);
            }
            let want = s * h / 3.0;
            let got = rhs.operator().entry(j, k);
            assert!((got - want).abs() < 1e-8, "B[{j}][{k}] = {got} vs {want}");
        }
    }
}

#[test]
fn f1_matches_direct_evaluation() {
    let m = 6;
    let rhs = nicholson(m, 64);
    // Positive first mode keeps B u > 0, where the nonlinearity is smooth.
    let shape = InitialShape::Polynomial {
        coeffs: vec![vec![1.2, 0.1, -0.05, 0.02], vec![0.4, -0.1], vec![0.2, 0.0, 0.05]],
    };
    let h = shape.render(1.0, m, 64).unwrap();
    let lambdas: Vec<f64> = (1..=m).map(|k| (k * k) as f64).collect();
    let energy = simpson(-1.0, 0.0, 4000, |s| {
        let g = h.eval(s).unwrap();
        g.iter().zip(&lambdas).map(|(x, l)| x * x / l).sum()
    });
    let tau = energy / (1.0 + energy);
    let w = h.eval(-tau).unwrap().0;
    let b = Nonlinearity::Nicholson { p: 2.0 };
    let xs: Vec<f64> = (0..=800).map(|i| i as f64 * PI / 800.0).collect();
    let fx: Vec<f64> = xs.iter().map(|&x| b.eval(apply_b(&w, x))).collect();
    let got = rhs.eval_f1(&h.view()).unwrap();
    for j in 0..m {
        let hx = PI / 800.0;
        let mut s = 0.0;
        for (i, (x, f)) in xs.iter().zip(&fx).enumerate() {
            let wt = if i == 0 || i == 800 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += wt * f * e(j, *x);
        }
        let want = s * hx / 3.0;
        assert!((got[j] - want).abs() < 1e-7, "mode {j}: {} vs {want}", got[j]);
    }
    assert!((rhs.eta(&h.view()) - tau).abs() < 1e-10);
}

#[test]
fn operator_constant_dominates_sampled_ratios() {
    // L_B is an upper bound for ‖Bv‖ / ‖A^{-1/2}v‖; pure modes come close.
    let rhs = nicholson(8, 32);
    let report = audit_hb(&rhs, 500, 3, Execution::Parallel);
    assert!(report.pass && report.observed > 0.05, "{}", report.summary());
    let basis = rhs.basis();
    for k in 0..8 {
        let mut v = vec![0.0; 8];
        v[k] = 1.0;
        let mut grid = vec![0.0; basis.n_grid()];
        rhs.operator().apply_on_grid_into(&v, &mut grid);
        let ratio = basis.grid_l2_norm(&grid) / basis.power_norm(-0.5, &v);
        assert!(ratio <= rhs.operator().l_b(), "mode {k}: {ratio}");
    }
}

#[test]
fn lipschitz_constant_of_b_is_the_gradient_norm() {
    // With a constant profile the inner function is c·ℓ(y), so
    // L_B = c·|Ω|^{1/2}·‖ℓ'‖.
    let spec = KernelSpec { f: Profile::Constant { value: 0.5 }, ..KernelSpec::default() };
    let rhs = sddpde_core::rhs::SddRightHandSide::new(
        basis(4, 16),
        &spec,
        Nonlinearity::Nicholson { p: 1.0 },
        sddpde_core::rhs::DelayFunctional::new(DelaySpec::default(), 1.0).unwrap(),
        0.0,
        Execution::Sequential,
    )
    .unwrap();
    let dbump = |y: f64| {
        let w = PI / 4.0;
        let u = (y - PI / 2.0) / w;
        if u.abs() >= 1.0 {
            0.0
        } else {
            3.0 * (1.0 - u * u).powi(2) * (-2.0 * u / w)
        }
    };
    let grad = simpson(PI / 4.0, 3.0 * PI / 4.0, 4000, |y| dbump(y).powi(2)).sqrt();
    let want = 0.5 * PI.sqrt() * grad;
    assert!((rhs.operator().l_b() - want).abs() < 1e-9 * want, "{} vs {want}", rhs.operator().l_b());
}

#[test]
fn lemma1_examples() {
    let rhs = nicholson(6, 32);
    let phi = smooth_history(6, 1.0, 1.0);
    assert_eq!(lemma1_ratio(&rhs, &phi, &phi).unwrap(), 0.0);

    // Constant delay: the bound degenerates to √2·L_b·L_B·‖A^{-1/2}(φ−ψ)‖_C.
    let c = rhs_with(6, 32, Nonlinearity::Nicholson { p: 2.0 }, DelaySpec::Constant { tau0: 0.4 }, 1.0, 0.1);
    assert_eq!(c.lipschitz_f1(123.0), 2.0 * c.operator().l_b() * std::f64::consts::SQRT_2);
    assert_eq!(lipschitz_f1(2.0, 3.0, 0.0, 1.0, 50.0), 6.0 * std::f64::consts::SQRT_2);
    let report = audit_lemma1(&c, 200, 11, Execution::Parallel).unwrap();
    assert!(report.pass, "{}", report.summary());
}

#[test]
fn audits_are_deterministic_and_execution_independent() {
    let rhs = nicholson(6, 32);
    let a = audit_lemma1(&rhs, 64, 5, Execution::Parallel).unwrap();
    let b = audit_lemma1(&rhs, 64, 5, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let c = audit_lemma1(&rhs, 64, 6, Execution::Parallel).unwrap();
    assert_ne!(a.observed, c.observed);
}

#[test]
fn zero_history_forcing_vanishes() {
    let rhs = nicholson(4, 16);
    let z = HistoryBuffer::constant(1.0, &[0.0; 4]);
    assert!(rhs.eval_f1(&z.view()).unwrap().iter().all(|&x| x == 0.0));
}
