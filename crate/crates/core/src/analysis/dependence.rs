//! Continuous dependence on initial data with the Gronwall-type constant
//! `E = exp{L_F₁[L_{v,T}]·(T + √(2T/e))}`, where `L_{v,T}` is the Lipschitz
//! constant of the reference solution itself over `[−r, T]`.

use std::collections::VecDeque;

use serde::Serialize;

use super::report::EstimateReport;
use crate::error::{Result, SddError};
use crate::exec::Execution;
use crate::history::HistoryBuffer;
use crate::integrator::{solve, SolverConfig, Trajectory};
use crate::rhs::SddRightHandSide;
use crate::history::SAMPLES_PER_SEGMENT;

/// `φ + ε·s(θ)·e_mode` with `s` a C¹ smoothstep on `[−δ, 0]` (`s(0) = 1`),
/// scaled so that the perturbation has `‖·‖_H = h_norm`.
pub fn head_perturbation(base: &HistoryBuffer, rhs: &SddRightHandSide, h_norm: f64, mode: usize) -> HistoryBuffer {
    let lambda = rhs.basis().eigenvalues()[mode];
    let eps = h_norm / (lambda.sqrt().recip() + lambda.sqrt());
    let delta = crate::integrator::blend_width(base.r());
    let mut out = base.clone();
    out.split_at(-delta);
    let mut v = vec![0.0; base.dim()];
    v[mode] = eps;
    out.add_profile(&v, move |th| {
        if th <= -delta {
            return (0.0, 0.0);
        }
        let u = 1.0 + th / delta;
        (u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u) / delta)
    });
    out
}

/// Max of `samples` (sorted by time) over each window `[t − r, t]`.
pub(crate) fn window_max(samples: &[(f64, f64)], nodes: &[f64], r: f64) -> Vec<f64> {
    let eps = 1e-12 * (1.0 + r);
    let mut out = Vec::with_capacity(nodes.len());
    let mut deque: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for &t in nodes {
        while next < samples.len() && samples[next].0 <= t + eps {
            while let Some(&back) = deque.back() {
                if samples[back].1 <= samples[next].1 {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(next);
            next += 1;
        }
        while let Some(&front) = deque.front() {
            if samples[front].0 < t - r - eps {
                deque.pop_front();
            } else {
                break;
            }
        }
        out.push(deque.front().map(|&i| samples[i].1).unwrap_or(0.0));
    }
    out
}

/// `(s, ‖A^{-1/2}D(s)‖)` and `(s, ‖A^{-1/2}Ḋ(s)‖)` samples of `u − v` over the
/// whole path.
fn difference_samples(u: &Trajectory, v: &Trajectory) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    let span = u.final_time() - u.segments()[0].t0;
    let a = HistoryBuffer::from_segments(span, u.segments().to_vec())?;
    let b = HistoryBuffer::from_segments(span, v.segments().to_vec())?;
    let d = a.difference(&b)?;
    let basis = u.basis();
    let mut vals = Vec::new();
    let mut ders = Vec::new();
    let mut buf = vec![0.0; d.dim()];
    for seg in d.segments() {
        for j in 0..=SAMPLES_PER_SEGMENT {
            let s = if j == SAMPLES_PER_SEGMENT {
                seg.t1
            } else {
                seg.t0 + seg.len() * j as f64 / SAMPLES_PER_SEGMENT as f64
            };
            seg.eval_into(s, &mut buf);
            vals.push((s, basis.power_norm(-0.5, &buf)));
            seg.eval_deriv_into(s, &mut buf);
            ders.push((s, basis.power_norm(-0.5, &buf)));
        }
    }
    Ok((vals, ders))
}

#[derive(Clone, Debug, Serialize)]
pub struct DependencePoint {
    pub t: f64,
    /// `‖A^{1/2}(u−v)(t)‖ + ‖A^{-1/2}(u_t−v_t)‖_C`, also `‖u_t − v_t‖_H`.
    pub g: f64,
    pub lip_norm: f64,
}

#[derive(Clone, Debug)]
pub struct DependenceOutcome {
    pub reports: Vec<EstimateReport>,
    pub series: Vec<DependencePoint>,
}

pub fn gronwall_constant(rhs: &SddRightHandSide, lipschitz: f64, horizon: f64) -> (f64, f64) {
    let l_f1 = rhs.lipschitz_f1(lipschitz);
    let e = (l_f1 * (horizon + (2.0 * horizon / std::f64::consts::E).sqrt())).exp();
    (l_f1, e)
}

/// Compares two trajectories against the H-norm and 𝓛-norm continuity
/// bounds. Both labelings of the reference solution are evaluated and the
/// smaller bound is the one checked.
pub fn compare_trajectories(u: &Trajectory, v: &Trajectory, rhs: &SddRightHandSide) -> Result<DependenceOutcome> {
    if u.times() != v.times() {
        return Err(SddError::InvalidParameter("trajectories use different step grids".into()));
    }
    let basis = rhs.basis();
    let r = rhs.r();
    let nodes = u.times();
    let (vals, ders) = difference_samples(u, v)?;
    let c_part = window_max(&vals, nodes, r);
    let lip_part = window_max(&ders, nodes, r);
    let mut series = Vec::with_capacity(nodes.len());
    for (i, &t) in nodes.iter().enumerate() {
        let head: Vec<f64> = u.state(i).iter().zip(v.state(i)).map(|(a, b)| a - b).collect();
        let h = basis.power_norm(0.5, &head);
        series.push(DependencePoint { t, g: h + c_part[i], lip_norm: h + c_part[i] + lip_part[i] });
    }
    let t0 = nodes[0];
    let horizon = u.final_time() - t0;
    let g0 = series[0].g;
    let l0 = series[0].lip_norm;
    let g_max = series.iter().map(|p| p.g).fold(0.0, f64::max);
    let lip_max = series.iter().map(|p| p.lip_norm).fold(0.0, f64::max);

    let labels = [("u", u), ("v", v)];
    let consts: Vec<(f64, f64, f64)> = labels
        .iter()
        .map(|(_, traj)| {
            let l_vt = traj.lipschitz_on(t0 - r, u.final_time());
            let (l_f1, e) = gronwall_constant(rhs, l_vt, horizon);
            (l_vt, l_f1, e)
        })
        .collect();
    let e_min = consts.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let lip_factor = |c: &(f64, f64, f64)| (2.0 + rhs.d() + c.1) * c.2;
    let lip_min = consts.iter().map(lip_factor).fold(f64::INFINITY, f64::min);

    let tol = 1e-12 * (1.0 + g0);
    let h_report = EstimateReport::new("continuity", e_min * g0, g_max, tol)
        .with("initial_distance_h", g0)
        .with("e_label_u", consts[0].2)
        .with("e_label_v", consts[1].2)
        .with("l_vt_label_u", consts[0].0)
        .with("l_vt_label_v", consts[1].0)
        .with("l_f1_label_u", consts[0].1)
        .with("l_f1_label_v", consts[1].1)
        .with("ratio", if g0 > 0.0 { g_max / (e_min * g0) } else { 0.0 })
        .with("horizon", horizon);
    let l_report = EstimateReport::new("continuity_lip", lip_min * l0, lip_max, 1e-12 * (1.0 + l0))
        .with("initial_distance_lip", l0)
        .with("factor_label_u", lip_factor(&consts[0]))
        .with("factor_label_v", lip_factor(&consts[1]))
        .with("ratio", if l0 > 0.0 { lip_max / (lip_min * l0) } else { 0.0 });
    Ok(DependenceOutcome { reports: vec![h_report, l_report], series })
}

pub fn verify_continuous_dependence(
    phi: &HistoryBuffer,
    psi: &HistoryBuffer,
    rhs: &SddRightHandSide,
    cfg: &SolverConfig,
    exec: Execution,
) -> Result<DependenceOutcome> {
    if phi.anchor() != psi.anchor() {
        return Err(SddError::InvalidParameter("initial functions must share the same anchor".into()));
    }
    let (u, v) = exec.join(|| solve(phi, rhs, cfg), || solve(psi, rhs, cfg));
    compare_trajectories(&u?, &v?, rhs)
}
