//! Properties of the discrete flow: restart consistency (semigroup) and
//! invariance of the solution manifold between step nodes.

use rand::Rng;
use serde::Serialize;

use super::audit::sample_rng;
use super::report::EstimateReport;
use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::HistoryBuffer;
use crate::integrator::{check_manifold, solve, SolverConfig, Trajectory};
use crate::rhs::SddRightHandSide;

pub const SEMIGROUP_TOL: f64 = 1e-8;
pub const MANIFOLD_TOL: f64 = 1e-6;
/// Required residual shrink factor when `dt` is halved.
pub const MANIFOLD_SHRINK: f64 = 3.0;
/// Off-node sampling offset, as a fraction of `dt`.
const OFF_NODE: f64 = 0.3;

#[derive(Clone, Debug, Serialize)]
pub struct SplitRecord {
    pub s: f64,
    pub t: f64,
    pub distance_h: f64,
}

/// Compares `S_{s+t}φ` with `S_t S_s φ` for random node pairs. The full
/// run `full` must start from `initial` with the same `cfg`.
pub fn verify_semigroup(
    full: &Trajectory,
    rhs: &SddRightHandSide,
    cfg: &SolverConfig,
    pairs: usize,
    seed: u64,
    exec: Execution,
) -> Result<EstimateReport> {
    let times = full.times();
    let n = times.len() - 1;
    if n < 2 {
        return Err(SddError::InvalidParameter("semigroup check needs at least two steps".into()));
    }
    let splits: Vec<(usize, usize)> = (0..pairs)
        .map(|i| {
            let mut rng = sample_rng(seed ^ 0x5347, i as u64);
            let a = rng.gen_range(1..n);
            let b = rng.gen_range(a + 1..=n);
            (a, b)
        })
        .collect();
    let records = exec.map(&splits, |&(a, b)| -> Result<SplitRecord> {
        let (s, st) = (times[a], times[b]);
        let restart = full.snapshot(s)?;
        let run = solve(&restart, rhs, &cfg.with_final_time(st - s))?;
        let lhs = full.snapshot(st)?;
        let rhs_buf = run.snapshot(run.final_time())?.shifted_to(st);
        let distance_h = lhs.difference(&rhs_buf)?.norm_h(rhs.basis());
        Ok(SplitRecord { s: s - times[0], t: st - s, distance_h })
    });
    let records: Vec<SplitRecord> = records.into_iter().collect::<Result<_>>()?;
    let worst = records.iter().map(|r| r.distance_h).fold(0.0, f64::max);
    Ok(EstimateReport::new("semigroup", SEMIGROUP_TOL, worst, 0.0).with("splits", &records))
}

/// `max_i ‖A^{-1/2}(u̇ + (A + d)u − F₁(u_t))‖` at `t_i + 0.3·dt`.
pub fn manifold_residual(traj: &Trajectory, rhs: &SddRightHandSide, horizon: f64) -> Result<f64> {
    let times = traj.times();
    let t0 = times[0];
    let mut worst = 0.0f64;
    for w in times.windows(2) {
        if w[0] - t0 >= horizon {
            break;
        }
        let t = w[0] + OFF_NODE * (w[1] - w[0]);
        worst = worst.max(check_manifold(&traj.view(t)?, rhs)?);
    }
    Ok(worst)
}

/// Runs `initial` (already on the manifold) at `dt` and `dt/2` over
/// `[0, horizon]` and checks the off-node residual and its decay.
pub fn verify_manifold(
    initial: &HistoryBuffer,
    rhs: &SddRightHandSide,
    cfg: &SolverConfig,
    horizon: f64,
    exec: Execution,
) -> Result<EstimateReport> {
    let coarse_cfg = cfg.with_final_time(horizon);
    let fine_cfg = coarse_cfg.with_dt(cfg.dt / 2.0);
    let (coarse, fine) = exec.join(
        || solve(initial, rhs, &coarse_cfg).and_then(|t| manifold_residual(&t, rhs, horizon)),
        || solve(initial, rhs, &fine_cfg).and_then(|t| manifold_residual(&t, rhs, horizon)),
    );
    let (coarse, fine) = (coarse?, fine?);
    let initial_residual = check_manifold(&initial.view(), rhs)?;
    let shrink = if fine > 0.0 { coarse / fine } else { f64::INFINITY };
    let report = EstimateReport::new("manifold", MANIFOLD_TOL, coarse.max(fine), 0.0)
        .with("residual_dt", coarse)
        .with("residual_half_dt", fine)
        .with("shrink", shrink)
        .with("initial_residual", initial_residual)
        .with("horizon", horizon);
    // Near round-off the ratio carries no information.
    if shrink < MANIFOLD_SHRINK && fine > 1e-10 {
        Ok(report.fail("residual does not shrink with dt"))
    } else {
        Ok(report)
    }
}
