//! Absorbing-ball entry. Since `‖Au‖² ≥ λ₁‖A^{1/2}u‖²`, the energy obeys
//! `E' ≤ −λ₁E + M_b²|Ω|`, so every trajectory is eventually inside
//! `E ≤ R = M_b²|Ω|/λ₁`. The comparison ODE also predicts the entry time.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::audit::{random_history, sample_rng};
use super::report::EstimateReport;
use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::HistoryBuffer;
use crate::integrator::{solve, SolverConfig, Trajectory};
use crate::rhs::SddRightHandSide;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DissipativityConfig {
    /// Relative enlargement of the ball.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Time budget per trajectory.
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    /// Number of random initial functions.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Initial `‖A^{1/2}φ(0)‖²` as a multiple of `R`.
    #[serde(default = "default_energy_factor")]
    pub energy_factor: f64,
    /// Exponent of the attractor boundedness check, in (1/2, 1).
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_eps() -> f64 {
    0.05
}
fn default_t_max() -> f64 {
    20.0
}
fn default_count() -> usize {
    8
}
fn default_energy_factor() -> f64 {
    10.0
}
fn default_alpha() -> f64 {
    0.75
}

impl Default for DissipativityConfig {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            t_max: default_t_max(),
            count: default_count(),
            energy_factor: default_energy_factor(),
            alpha: default_alpha(),
        }
    }
}

/// `R = M_b²|Ω|/λ₁`.
pub fn absorbing_radius_sq(rhs: &SddRightHandSide) -> f64 {
    rhs.m_b().powi(2) * rhs.basis().domain().measure() / rhs.basis().eigenvalues()[0]
}

/// Entry time of `y' = −λ₁y + λ₁R`, `y(0) = e0`, into `y ≤ (1+ε)R`.
pub fn predicted_entry(e0: f64, radius_sq: f64, eps: f64, lambda1: f64) -> f64 {
    if e0 <= (1.0 + eps) * radius_sq {
        return 0.0;
    }
    ((e0 - radius_sq) / (eps * radius_sq)).ln() / lambda1
}

/// Random initial functions whose head energy is `factor·R` (or zero when
/// `R = 0`).
pub fn initial_set(rhs: &SddRightHandSide, count: usize, factor: f64, seed: u64) -> Vec<HistoryBuffer> {
    let target = factor * absorbing_radius_sq(rhs);
    let basis = rhs.basis();
    (0..count)
        .map(|i| {
            let mut rng = sample_rng(seed ^ 0x4449, i as u64);
            let amp = rng.gen_range(0.5..2.0);
            let h = random_history(&mut rng, rhs.order(), rhs.r(), amp);
            let e = basis.power_norm_sq(0.5, &h.head_value());
            let scale = if e > 0.0 { (target / e).sqrt() } else { 0.0 };
            h.combine(scale, &h, 0.0).expect("same window")
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct EntryRecord {
    pub index: usize,
    pub initial_energy: f64,
    pub predicted: f64,
    pub entry_time: Option<f64>,
    /// `sup ‖A^α u(t)‖` after entry, and its bound.
    pub post_entry_sup: Option<f64>,
    pub attractor_bound: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct DissipativityOutcome {
    pub radius_sq: f64,
    pub entries: Vec<EntryRecord>,
    pub report: EstimateReport,
    pub attractor: EstimateReport,
    /// `(t, ‖A^{1/2}u(t)‖²)` per trajectory, for plotting.
    pub energy_curves: Vec<Vec<(f64, f64)>>,
}

/// First node after which the energy stays inside the enlarged ball for `r`.
pub fn entry_time(traj: &Trajectory, level: f64, stay: f64) -> Option<f64> {
    let basis = traj.basis();
    let times = traj.times();
    let inside: Vec<bool> = (0..times.len()).map(|i| basis.power_norm_sq(0.5, traj.state(i)) <= level).collect();
    let end = traj.final_time();
    let mut candidate: Option<usize> = None;
    for (i, &ok) in inside.iter().enumerate() {
        match (ok, candidate) {
            (true, None) => candidate = Some(i),
            (false, Some(_)) => candidate = None,
            _ => {}
        }
        if let Some(c) = candidate {
            if times[i] - times[c] >= stay - 1e-12 {
                return Some(times[c]);
            }
        }
    }
    candidate.filter(|&c| end - times[c] >= stay - 1e-12).map(|c| times[c])
}

fn attractor_bound(rhs: &SddRightHandSide, at_entry: f64, alpha: f64) -> f64 {
    let l1 = rhs.basis().eigenvalues()[0];
    at_entry + rhs.f1_bound() * (-alpha).exp() * l1.powf(alpha - 1.0) / (1.0 - alpha)
}

pub fn verify_dissipativity(
    rhs: &SddRightHandSide,
    cfg: &SolverConfig,
    dcfg: &DissipativityConfig,
    initials: &[HistoryBuffer],
    exec: Execution,
) -> Result<DissipativityOutcome> {
    if rhs.delay().q() != 0.0 {
        return Err(SddError::InvalidParameter(
            "the absorbing-set check needs q = 0 in the delay functional".into(),
        ));
    }
    if !(dcfg.alpha > 0.5 && dcfg.alpha < 1.0) {
        return Err(SddError::InvalidParameter(format!("alpha must lie in (1/2, 1), got {}", dcfg.alpha)));
    }
    let basis = rhs.basis();
    let radius_sq = absorbing_radius_sq(rhs);
    let level = (1.0 + dcfg.eps) * radius_sq;
    let lambda1 = basis.eigenvalues()[0];
    let run_cfg = cfg.with_final_time(dcfg.t_max);
    let runs = exec.map(initials, |h| solve(h, rhs, &run_cfg));
    let mut entries = Vec::with_capacity(initials.len());
    let mut curves = Vec::with_capacity(initials.len());
    let mut worst_slack = f64::INFINITY;
    let mut worst_entry = 0.0f64;
    let mut worst_bound = 0.0f64;
    let mut exhausted = false;
    let mut att_ratio = 0.0f64;
    let mut att_obs = 0.0f64;
    let mut att_bound = 0.0f64;
    for (index, run) in runs.into_iter().enumerate() {
        let traj = run?;
        let e0 = basis.power_norm_sq(0.5, traj.state(0));
        let predicted = predicted_entry(e0, radius_sq, dcfg.eps, lambda1);
        let entry = entry_time(&traj, level, rhs.r());
        let curve: Vec<(f64, f64)> = traj
            .times()
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, basis.power_norm_sq(0.5, traj.state(i))))
            .collect();
        let (mut post_sup, mut a_bound) = (None, None);
        match entry {
            Some(te) => {
                let allowed = 2.0 * predicted + cfg.dt;
                if allowed - te < worst_slack {
                    worst_slack = allowed - te;
                    worst_entry = te;
                    worst_bound = allowed;
                }
                let i_e = traj.times().iter().position(|&t| t == te).expect("entry is a node");
                let at_entry = basis.power_norm(dcfg.alpha, traj.state(i_e));
                let sup = (i_e..traj.times().len())
                    .map(|i| basis.power_norm(dcfg.alpha, traj.state(i)))
                    .fold(0.0, f64::max);
                let bound = attractor_bound(rhs, at_entry, dcfg.alpha);
                if sup / bound > att_ratio || att_bound == 0.0 {
                    att_ratio = sup / bound;
                    att_obs = sup;
                    att_bound = bound;
                }
                post_sup = Some(sup);
                a_bound = Some(bound);
            }
            None => exhausted = true,
        }
        entries.push(EntryRecord {
            index,
            initial_energy: e0,
            predicted,
            entry_time: entry,
            post_entry_sup: post_sup,
            attractor_bound: a_bound,
        });
        curves.push(curve);
    }
    let max_entry = entries.iter().filter_map(|e| e.entry_time).fold(0.0, f64::max);
    let report = if exhausted {
        EstimateReport::exhausted("dissipativity", worst_bound, max_entry)
            .with("failure", "some trajectory did not settle in the ball within t_max")
    } else if entries.is_empty() {
        EstimateReport::new("dissipativity", 0.0, 0.0, 0.0)
    } else {
        EstimateReport::new("dissipativity", worst_bound, worst_entry, 0.0)
    }
    .with("radius_sq", radius_sq)
    .with("eps", dcfg.eps)
    .with("max_entry_time", max_entry)
    .with("entries", &entries);
    let attractor = if exhausted {
        EstimateReport::exhausted("attractor", att_bound, att_obs)
    } else {
        EstimateReport::new("attractor", att_bound, att_obs, 1e-12 * (1.0 + att_bound))
    }
    .with("alpha", dcfg.alpha)
    .with("worst_ratio", att_ratio);
    Ok(DissipativityOutcome { radius_sq, entries, report, attractor, energy_curves: curves })
}
