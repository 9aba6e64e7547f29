#![allow(dead_code)]

use std::f64::consts::PI;

use sddpde_core::history::{HistoryBuffer, InitialShape};
use sddpde_core::rhs::{DelayFunctional, DelaySpec, KernelSpec, Nonlinearity, SddRightHandSide};
use sddpde_core::spectral::{DomainSpec, SpectralBasis};
use sddpde_core::Execution;

pub fn basis(m: usize, n_grid: usize) -> SpectralBasis {
    SpectralBasis::new(DomainSpec::new(PI, n_grid).unwrap(), m).unwrap()
}

pub fn rhs_with(m: usize, n_grid: usize, b: Nonlinearity, delay: DelaySpec, r: f64, d: f64) -> SddRightHandSide {
    SddRightHandSide::new(
        basis(m, n_grid),
        &KernelSpec::default(),
        b,
        DelayFunctional::new(delay, r).unwrap(),
        d,
        Execution::Parallel,
    )
    .unwrap()
}

/// Nicholson, p = 2, d = 0.1, r = 1, history-energy delay with κ = 1.
pub fn nicholson(m: usize, n_grid: usize) -> SddRightHandSide {
    rhs_with(m, n_grid, Nonlinearity::Nicholson { p: 2.0 }, DelaySpec::default(), 1.0, 0.1)
}

/// Smooth, decaying multi-mode polynomial history.
pub fn smooth_shape(m: usize, amp: f64) -> InitialShape {
    let c0: Vec<f64> = (0..m).map(|k| amp / (1.0 + k as f64).powi(2)).collect();
    let c1: Vec<f64> = (0..m).map(|k| 0.5 * amp * (-1f64).powi(k as i32) / (1.0 + k as f64).powi(3)).collect();
    let c2: Vec<f64> = (0..m).map(|k| 0.25 * amp / (1.0 + k as f64).powi(4)).collect();
    InitialShape::Polynomial { coeffs: vec![c0, c1, c2] }
}

pub fn smooth_history(m: usize, amp: f64, r: f64) -> HistoryBuffer {
    smooth_shape(m, amp).render(r, m, 64).unwrap()
}

/// Reference solution of the scalar (m = 1) constant-delay system by the
/// method of steps: classical RK4 with the delayed value read from a cubic
/// Hermite interpolant of the reference's own stored states.
pub struct MethodOfSteps {
    pub dt: f64,
    pub ts: Vec<f64>,
    pub gs: Vec<f64>,
}

impl MethodOfSteps {
    pub fn run(
        rhs: &SddRightHandSide,
        tau: f64,
        history: impl Fn(f64) -> (f64, f64),
        t_end: f64,
        dt: f64,
    ) -> Self {
        assert_eq!(rhs.order(), 1);
        let rate = rhs.basis().eigenvalues()[0] + rhs.d();
        let r = rhs.r();
        // forcing as a function of the delayed coefficient
        let forcing = |w: f64| -> f64 {
            let h = HistoryBuffer::constant(r, &[w]);
            rhs.eval_f1(&h.view()).unwrap()[0]
        };
        let n = (t_end / dt).round() as usize;
        let mut ts = vec![0.0];
        let mut gs = vec![history(0.0).0];
        let mut ds: Vec<f64> = Vec::with_capacity(n + 1);
        let lookup = |s: f64, gs: &[f64], ds: &[f64]| -> f64 {
            if s <= 0.0 {
                return history(s).0;
            }
            let i = ((s / dt).floor() as usize).min(ds.len().saturating_sub(1));
            let (t0, t1) = (i as f64 * dt, (i + 1) as f64 * dt);
            if i + 1 >= gs.len() || i + 1 >= ds.len() + 1 {
                return gs[i];
            }
            let th = (s - t0) / (t1 - t0);
            let (y0, y1) = (gs[i], gs[i + 1]);
            let d0 = ds[i];
            let d1 = if i + 1 < ds.len() { ds[i + 1] } else { ds[i] };
            let t2 = th * th;
            let t3 = t2 * th;
            (2.0 * t3 - 3.0 * t2 + 1.0) * y0
                + (t3 - 2.0 * t2 + th) * dt * d0
                + (-2.0 * t3 + 3.0 * t2) * y1
                + (t3 - t2) * dt * d1
        };
        for i in 0..n {
            let t = i as f64 * dt;
            let g = gs[i];
            let f = |s: f64, y: f64, gs: &[f64], ds: &[f64]| -rate * y + forcing(lookup(s - tau, gs, ds));
            // derivative at the node (right side) for the interpolant
            let d_here = f(t, g, &gs, &ds);
            ds.push(d_here);
            let k1 = d_here;
            let k2 = f(t + 0.5 * dt, g + 0.5 * dt * k1, &gs, &ds);
            let k3 = f(t + 0.5 * dt, g + 0.5 * dt * k2, &gs, &ds);
            let k4 = f(t + dt, g + dt * k3, &gs, &ds);
            gs.push(g + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
            ts.push(t + dt);
        }
        Self { dt, ts, gs }
    }

    pub fn at(&self, t: f64) -> f64 {
        let i = (t / self.dt).round() as usize;
        assert!((self.ts[i] - t).abs() < 1e-9, "reference node mismatch at {t}");
        self.gs[i]
    }
}
