//! A priori energy inequality along a computed trajectory:
//! `‖A^{1/2}u(t)‖² + ∫_{t0}^t ‖Au‖² ≤ ‖A^{1/2}u(t0)‖² + M_b²|Ω|(t − t0)`.

use serde::Serialize;

use super::report::EstimateReport;
use crate::integrator::Trajectory;
use crate::rhs::SddRightHandSide;

/// Allowed slack at elapsed time `t`.
pub fn energy_tolerance(t: f64) -> f64 {
    1e-6 * (1.0 + t)
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyPoint {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Both sides at every step node. The dissipation integral is exact for
/// the Hermite pieces (4-point Gauss per step).
pub fn energy_series(traj: &Trajectory, rhs: &SddRightHandSide) -> Vec<EnergyPoint> {
    let basis = traj.basis();
    let sq: Vec<f64> = basis.eigenvalues().iter().map(|l| l * l).collect();
    let forcing = rhs.m_b().powi(2) * basis.domain().measure();
    let t0 = traj.start_time();
    let e0 = basis.power_norm_sq(0.5, traj.state(0));
    let mut out = Vec::with_capacity(traj.times().len());
    out.push(EnergyPoint { t: t0, lhs: e0, rhs: e0 });
    let mut dissipated = 0.0;
    for (i, seg) in traj.step_segments().iter().enumerate() {
        dissipated += seg.weighted_sq_integral(&sq, seg.t0, seg.t1);
        let t = traj.times()[i + 1];
        out.push(EnergyPoint {
            t,
            lhs: basis.power_norm_sq(0.5, &seg.y1) + dissipated,
            rhs: e0 + forcing * (t - t0),
        });
    }
    out
}

/// Checks the running form (right side grows like `t`) at every node and
/// reports the horizon form (right side evaluated at `T`).
pub fn verify_energy(traj: &Trajectory, rhs: &SddRightHandSide) -> EstimateReport {
    let series = energy_series(traj, rhs);
    let t0 = traj.start_time();
    let horizon = traj.final_time() - t0;
    let slack = |p: &EnergyPoint| p.rhs - p.lhs + energy_tolerance(p.t - t0);
    let worst = series
        .iter()
        .min_by(|a, b| slack(a).total_cmp(&slack(b)))
        .expect("series has the initial point");
    let peak = series.iter().map(|p| p.lhs).fold(f64::NEG_INFINITY, f64::max);
    let bound = series[0].rhs + rhs.m_b().powi(2) * traj.basis().domain().measure() * horizon;
    let report = EstimateReport::new("energy", bound, peak, energy_tolerance(horizon))
        .with("nodes", series.len())
        .with("worst_running_slack", slack(worst))
        .with("worst_running_t", worst.t);
    if slack(worst) < 0.0 {
        report.fail("running inequality violated beyond tolerance")
    } else {
        report
    }
}
