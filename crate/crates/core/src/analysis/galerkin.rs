//! Self-convergence in the Galerkin order: `‖·‖_H` distance at `T` between
//! consecutive orders, the coarser run zero-padded to the finer one.

use serde::Serialize;

use super::report::EstimateReport;
use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::{HistoryBuffer, InitialShape};
use crate::integrator::{manifold_from_buffer, solve, SolverConfig};
use crate::rhs::SddRightHandSide;

#[derive(Clone, Debug, Serialize)]
pub struct GalerkinRow {
    pub m: usize,
    pub m_next: usize,
    pub distance: f64,
    /// `distance / previous distance`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GalerkinOutcome {
    pub rows: Vec<GalerkinRow>,
    pub sup_energy: Vec<(usize, f64)>,
    pub report: EstimateReport,
}

/// Runs every order in `m_list` (in parallel) from the same initial shape.
/// `make_rhs(m)` must build the right-hand side at order `m`.
pub fn galerkin_convergence_study<F>(
    shape: &InitialShape,
    r: f64,
    make_rhs: F,
    m_list: &[usize],
    cfg: &SolverConfig,
    manifold: bool,
    exec: Execution,
) -> Result<GalerkinOutcome>
where
    F: Fn(usize) -> Result<SddRightHandSide> + Sync + Send,
{
    if m_list.len() < 2 || m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SddError::InvalidParameter("m_list must hold at least two ascending orders".into()));
    }
    let runs = exec.map(m_list, |&m| -> Result<(HistoryBuffer, f64, SddRightHandSide)> {
        let rhs = make_rhs(m)?;
        let mut init = shape.render(r, m, 64)?;
        if manifold {
            init = manifold_from_buffer(init, &rhs)?;
        }
        let traj = solve(&init, &rhs, cfg)?;
        let sup = (0..traj.times().len())
            .map(|i| rhs.basis().power_norm(0.5, traj.state(i)))
            .fold(0.0, f64::max);
        Ok((traj.snapshot(traj.final_time())?, sup, rhs))
    });
    let runs: Vec<_> = runs.into_iter().collect::<Result<_>>()?;
    let mut rows: Vec<GalerkinRow> = Vec::new();
    for (i, w) in runs.windows(2).enumerate() {
        let (coarse, _, _) = &w[0];
        let (fine, _, fine_rhs) = &w[1];
        let padded = coarse.resized(fine.dim());
        let distance = fine.difference(&padded)?.norm_h(fine_rhs.basis());
        let ratio = rows.last().map(|prev: &GalerkinRow| {
            if prev.distance == 0.0 {
                0.0
            } else {
                distance / prev.distance
            }
        });
        rows.push(GalerkinRow { m: m_list[i], m_next: m_list[i + 1], distance, ratio });
    }
    let worst = rows.iter().filter_map(|r| r.ratio).fold(0.0, f64::max);
    let report = EstimateReport::new("galerkin", 0.5, worst, 0.0)
        .with("rows", &rows)
        .with("decrease_factor_required", 2.0);
    let sup_energy = m_list.iter().zip(&runs).map(|(&m, run)| (m, run.1)).collect();
    Ok(GalerkinOutcome { rows, sup_energy, report })
}
