//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Tolerances are pinned here, not read from config.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use sddpde_core::analysis::counterexample::{shift_series, ShiftNorm, ShiftProfile, SHIFTS};
use sddpde_core::analysis::{audit, dissipativity, energy, flow};
use sddpde_core::history::InitialShape;
use sddpde_core::integrator::{solve, SolverConfig};
use sddpde_core::rhs::{DelaySpec, Nonlinearity};
use sddpde_core::scenario::Scenario;
use sddpde_core::suite::Suite;
use sddpde_core::{Execution, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

/// 1. Energy inequality at every node, tol 1e-6·(1+t).
fn energy_inequality(suite: &Suite) -> Result<Outcome> {
    let traj = suite.trajectory()?;
    let rep = energy::verify_energy(traj, suite.rhs());
    let worst = rep.details["worst_running_slack"].as_f64().unwrap_or(f64::NAN);
    outcome(rep.pass && rep.margin >= 0.0, format!("horizon margin {:.3e}, worst running slack {worst:.3e}", rep.margin))
}

/// 2. Constant delay, m = 1: max |g − g_ref| ≤ 1e-6 over [0, 5].
fn method_of_steps() -> Result<Outcome> {
    let tau = 0.5;
    let rhs = rhs_with(1, 16, Nonlinearity::Nicholson { p: 2.0 }, DelaySpec::Constant { tau0: tau }, 1.0, 0.1);
    let shape = InitialShape::Polynomial { coeffs: vec![vec![0.8], vec![0.6], vec![0.3]] };
    let hist = |s: f64| (0.8 + 0.6 * s + 0.3 * s * s, 0.6 + 0.6 * s);
    let reference = MethodOfSteps::run(&rhs, tau, hist, 5.0, 1e-5);
    let traj = solve(&shape.render(1.0, 1, 64)?, &rhs, &SolverConfig::new(2.5e-4, 5.0))?;
    let mut worst = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate().step_by(40) {
        worst = worst.max((traj.state(i)[0] - reference.at(t)).abs());
    }
    outcome(worst <= 1e-6, format!("max abs error {worst:.3e} (dt 2.5e-4, reference RK4 dt 1e-5)"))
}

/// 3. Constant b: per-mode error ≤ 1e-10 at T = 1.
fn closed_form_linear() -> Result<Outcome> {
    let (m, c_b) = (16, 0.8);
    let rhs = rhs_with(m, 64, Nonlinearity::Constant { value: c_b }, DelaySpec::default(), 1.0, 0.0);
    let h = smooth_history(m, 1.0, 1.0);
    let traj = solve(&h, &rhs, &SolverConfig::new(1e-3, 1.0))?;
    let basis = rhs.basis();
    let (g0, g1) = (h.head_value(), traj.final_state());
    let mut worst = 0.0f64;
    for k in 0..m {
        let ip: f64 = basis.node_row(k).iter().zip(basis.quad_weights()).map(|(e, w)| c_b * e * w).sum();
        let l = basis.eigenvalues()[k];
        let exact = (-l).exp() * g0[k] + ip * (1.0 - (-l).exp()) / l;
        worst = worst.max((g1[k] - exact).abs());
    }
    outcome(worst <= 1e-10, format!("max per-mode error {worst:.3e} over {m} modes"))
}

/// 4. 10³ random pairs, worst observed/bound ratio < 1.
fn lemma1(suite: &Suite, seed: u64) -> Result<Outcome> {
    let rep = audit::audit_lemma1(suite.rhs(), 1000, seed, Execution::Parallel)?;
    outcome(rep.observed < 1.0, format!("worst ratio {:.4} over 1000 pairs", rep.observed))
}

/// 5. H-norm and 𝓛-norm continuity bounds, 1e-4 perturbation, T = 2.
fn continuity(suite: &Suite) -> Result<Outcome> {
    let out = suite.verify("continuity")?;
    let pass = out.reports.len() == 2 && out.reports.iter().all(|r| r.pass);
    let detail = out
        .reports
        .iter()
        .map(|r| format!("{} ratio {:.3e}", r.id, r.details["ratio"].as_f64().unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

/// 6. Manifold residual ≤ 1e-6 on [0, 3], shrink ≥ 3× under dt-halving.
fn manifold(suite: &Suite, s: &Scenario) -> Result<Outcome> {
    let rep = flow::verify_manifold(suite.initial(), suite.rhs(), &s.solver, 3.0, Execution::Parallel)?;
    let shrink = rep.details["shrink"].as_f64().unwrap_or(0.0);
    let fine = rep.details["residual_half_dt"].as_f64().unwrap_or(f64::NAN);
    outcome(
        rep.observed <= 1e-6 && shrink >= 3.0,
        format!("residual {:.3e} (dt), {fine:.3e} (dt/2), shrink {shrink:.2}", rep.observed),
    )
}

/// 7. 8 initials at 10× the ball: all enter within 2× of the prediction.
fn dissipativity_entry(suite: &Suite, s: &Scenario, seed: u64) -> Result<Outcome> {
    let rhs = suite.rhs();
    let initials = dissipativity::initial_set(rhs, 8, 10.0, seed);
    let dcfg = dissipativity::DissipativityConfig { count: 8, energy_factor: 10.0, eps: 0.05, ..s.dissipativity };
    let out = dissipativity::verify_dissipativity(rhs, &s.solver, &dcfg, &initials, Execution::Parallel)?;
    let entered = out.entries.iter().filter(|e| e.entry_time.is_some()).count();
    let worst = out
        .entries
        .iter()
        .filter_map(|e| e.entry_time.map(|t| t / e.predicted))
        .fold(0.0, f64::max);
    outcome(
        out.report.pass && entered == 8,
        format!("{entered}/8 entered, worst entry/prediction {worst:.3}"),
    )
}

/// 8. Shift limits: Lip 1 ± 1e-2, derivative 1 ± 1e-6, control 0 ± 1e-6.
fn shift_limits() -> Result<Outcome> {
    let lip = shift_series(ShiftProfile::Ramp, ShiftNorm::Lip, 1.0, &SHIFTS)?.limit;
    let der = shift_series(ShiftProfile::Ramp, ShiftNorm::Seminorm, 1.0, &SHIFTS)?.limit;
    let ctl = shift_series(ShiftProfile::Parabola, ShiftNorm::Lip, 1.0, &SHIFTS)?.limit;
    let pass = (lip - 1.0).abs() <= 1e-2 && (der - 1.0).abs() <= 1e-6 && ctl.abs() <= 1e-6;
    outcome(pass, format!("lip limit {lip:.9}, derivative limit {der:.9}, control limit {ctl:.2e}"))
}

/// 9. Galerkin Cauchy differences drop ≥ 2× per doubling, ≤ 5 min.
fn galerkin(suite: &Suite) -> Result<Outcome> {
    let start = Instant::now();
    let g = suite.galerkin()?;
    let secs = start.elapsed().as_secs_f64();
    let dists: Vec<String> = g.rows.iter().map(|r| format!("{}->{}: {:.2e}", r.m, r.m_next, r.distance)).collect();
    outcome(g.report.pass && secs <= 300.0, format!("{} ({secs:.1} s)", dists.join(", ")))
}

/// 10. Ten random restarts agree with the one-stage run to ≤ 1e-8.
fn semigroup(suite: &Suite, s: &Scenario, seed: u64) -> Result<Outcome> {
    let rep = flow::verify_semigroup(suite.trajectory()?, suite.rhs(), &s.solver, 10, seed, Execution::Parallel)?;
    outcome(rep.observed <= 1e-8, format!("max ‖·‖_H distance {:.3e} over 10 splits", rep.observed))
}

fn main() -> ExitCode {
    let s = Scenario::nicholson();
    let seed = s.seed;
    let suite = match Suite::prepare(&s, seed, Execution::Parallel) {
        Ok(suite) => suite,
        Err(e) => {
            println!("acceptance: could not build the default scenario: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Outcome> + '_>)> = vec![
        ("energy inequality", Box::new(|| energy_inequality(&suite))),
        ("method-of-steps oracle", Box::new(method_of_steps)),
        ("closed-form linear case", Box::new(closed_form_linear)),
        ("nonlinearity Lipschitz audit", Box::new(|| lemma1(&suite, seed))),
        ("continuous dependence", Box::new(|| continuity(&suite))),
        ("manifold invariance", Box::new(|| manifold(&suite, &s))),
        ("absorbing-ball entry", Box::new(|| dissipativity_entry(&suite, &s, seed))),
        ("shift counterexamples", Box::new(shift_limits)),
        ("Galerkin self-convergence", Box::new(|| galerkin(&suite))),
        ("semigroup property", Box::new(|| semigroup(&suite, &s, seed))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<30} {} ({:.2} s) {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
