//! Scenario-level drivers: every verifier and study keyed by id, with the
//! plot data each one produces. The command-line front end is a thin layer
//! over this module.

use std::sync::OnceLock;

use serde::Serialize;

use crate::analysis::dissipativity::{initial_set, verify_dissipativity, DissipativityOutcome};
use crate::analysis::galerkin::{galerkin_convergence_study, GalerkinOutcome};
use crate::analysis::report::{EstimateReport, Provenance};
use crate::analysis::{audit, counterexample, dependence, energy, flow};
use crate::error::Result;
use crate::exec::Execution;
use crate::history::HistoryBuffer;
use crate::integrator::{solve, Trajectory};
use crate::rhs::SddRightHandSide;
use crate::scenario::Scenario;

/// Ids accepted by [`Suite::verify`], in the order `all` runs them.
pub const VERIFY_IDS: [&str; 11] = [
    "energy",
    "lemma1",
    "hb",
    "eta",
    "continuity",
    "manifold",
    "dissipativity",
    "semigroup",
    "galerkin",
    "remark4",
    "remark5",
];

pub const STUDY_KINDS: [&str; 3] = ["galerkin", "dissipativity", "sweep"];

/// Columns of `(t, quantity…)` data for offline plotting.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PlotData {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl PlotData {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.columns.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// A table for the study CSV (the same shape as plot data, named columns).
pub type StudyTable = PlotData;

#[derive(Clone, Debug, Default)]
pub struct SuiteOutput {
    pub reports: Vec<EstimateReport>,
    pub plots: Vec<PlotData>,
}

#[derive(Clone, Debug)]
pub struct StudyOutput {
    pub table: StudyTable,
    pub plots: Vec<PlotData>,
    pub report: EstimateReport,
}

pub struct Suite<'a> {
    scenario: &'a Scenario,
    seed: u64,
    exec: Execution,
    rhs: SddRightHandSide,
    initial: HistoryBuffer,
    trajectory: OnceLock<Trajectory>,
}

impl<'a> Suite<'a> {
    /// Builds the model and the initial function. Errors here are
    /// configuration errors.
    pub fn prepare(scenario: &'a Scenario, seed: u64, exec: Execution) -> Result<Self> {
        scenario.validate()?;
        let rhs = scenario.rhs(exec)?;
        let initial = scenario.initial_history(&rhs)?;
        Ok(Self { scenario, seed, exec, rhs, initial, trajectory: OnceLock::new() })
    }

    pub fn rhs(&self) -> &SddRightHandSide {
        &self.rhs
    }

    pub fn initial(&self) -> &HistoryBuffer {
        &self.initial
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            scenario: Some(self.scenario.name.clone()),
            config_hash: Some(self.scenario.config_hash()),
            seed: Some(self.seed),
        }
    }

    /// The scenario run over `[0, T]`, computed once.
    pub fn trajectory(&self) -> Result<&Trajectory> {
        if let Some(t) = self.trajectory.get() {
            return Ok(t);
        }
        let t = solve(&self.initial, &self.rhs, &self.scenario.solver)?;
        Ok(self.trajectory.get_or_init(|| t))
    }

    pub fn energy_plot(&self) -> Result<PlotData> {
        let mut plot = PlotData::new("energy", &["t", "lhs", "rhs"]);
        for p in energy::energy_series(self.trajectory()?, &self.rhs) {
            plot.rows.push(vec![p.t, p.lhs, p.rhs]);
        }
        Ok(plot)
    }

    /// Runs one verifier. Unknown ids are rejected by the caller.
    pub fn verify(&self, id: &str) -> Result<SuiteOutput> {
        let s = self.scenario;
        let n = s.verify.lemma1_samples;
        let mut out = SuiteOutput::default();
        match id {
            "energy" => {
                out.reports.push(energy::verify_energy(self.trajectory()?, &self.rhs));
                out.plots.push(self.energy_plot()?);
            }
            "lemma1" => out.reports.push(audit::audit_lemma1(&self.rhs, n, self.seed, self.exec)?),
            "hb" => out.reports.push(audit::audit_hb(&self.rhs, n, self.seed, self.exec)),
            "eta" => out.reports.push(audit::audit_eta(&self.rhs, n, self.seed, self.exec)?),
            "continuity" => {
                let psi = dependence::head_perturbation(&self.initial, &self.rhs, s.verify.perturbation, 0);
                let cfg = s.solver.with_final_time(s.verify.continuity_t);
                let dep = dependence::verify_continuous_dependence(&self.initial, &psi, &self.rhs, &cfg, self.exec)?;
                let mut plot = PlotData::new("continuity", &["t", "g", "lip_norm"]);
                plot.rows = dep.series.iter().map(|p| vec![p.t, p.g, p.lip_norm]).collect();
                out.reports.extend(dep.reports);
                out.plots.push(plot);
            }
            "manifold" => out.reports.push(flow::verify_manifold(
                &self.initial,
                &self.rhs,
                &s.solver,
                s.verify.manifold_t,
                self.exec,
            )?),
            "dissipativity" => {
                let d = self.dissipativity(&self.rhs)?;
                out.plots.push(energy_curves_plot(&d));
                out.reports.push(d.report);
                out.reports.push(d.attractor);
            }
            "semigroup" => out.reports.push(flow::verify_semigroup(
                self.trajectory()?,
                &self.rhs,
                &s.solver,
                s.verify.semigroup_pairs,
                self.seed,
                self.exec,
            )?),
            "galerkin" => {
                let g = self.galerkin()?;
                out.plots.push(galerkin_plot(&g));
                out.reports.push(g.report);
            }
            "remark4" => out.reports.push(counterexample::remark4(s.r)?),
            "remark5" => out.reports.push(counterexample::remark5(s.r)?),
            other => {
                return Err(crate::SddError::Config(format!(
                    "unknown estimate id '{other}'; valid ids: {}",
                    VERIFY_IDS.join(", ")
                )))
            }
        }
        let prov = self.provenance();
        out.reports = out.reports.into_iter().map(|r| r.with_provenance(prov.clone())).collect();
        Ok(out)
    }

    pub fn dissipativity(&self, rhs: &SddRightHandSide) -> Result<DissipativityOutcome> {
        let dc = &self.scenario.dissipativity;
        let initials = initial_set(rhs, dc.count, dc.energy_factor, self.seed);
        verify_dissipativity(rhs, &self.scenario.solver, dc, &initials, self.exec)
    }

    pub fn galerkin(&self) -> Result<GalerkinOutcome> {
        let s = self.scenario;
        let n_grid = s.study_n_grid();
        let cfg = s.solver.with_final_time(s.study.t_final.unwrap_or(s.solver.t_final));
        // Orders already run in parallel; each kernel assembly stays sequential.
        galerkin_convergence_study(
            &s.initial.shape,
            s.r,
            |m| s.rhs_variant(m, n_grid, s.d, Execution::Sequential),
            &s.study.m_list,
            &cfg,
            s.initial.manifold,
            self.exec,
        )
    }

    pub fn study(&self, kind: &str) -> Result<StudyOutput> {
        let prov = self.provenance();
        let out = match kind {
            "galerkin" => {
                let g = self.galerkin()?;
                let mut table = StudyTable::new("galerkin", &["m", "m_next", "distance", "ratio"]);
                for row in &g.rows {
                    table.rows.push(vec![row.m as f64, row.m_next as f64, row.distance, row.ratio.unwrap_or(f64::NAN)]);
                }
                StudyOutput { table, plots: vec![galerkin_plot(&g)], report: g.report }
            }
            "dissipativity" => {
                let d = self.dissipativity(&self.rhs)?;
                let mut table = StudyTable::new(
                    "dissipativity",
                    &["index", "initial_energy", "predicted", "entry_time", "post_entry_sup", "attractor_bound"],
                );
                for e in &d.entries {
                    table.rows.push(vec![
                        e.index as f64,
                        e.initial_energy,
                        e.predicted,
                        e.entry_time.unwrap_or(f64::NAN),
                        e.post_entry_sup.unwrap_or(f64::NAN),
                        e.attractor_bound.unwrap_or(f64::NAN),
                    ]);
                }
                let plots = vec![energy_curves_plot(&d)];
                StudyOutput { table, plots, report: d.report }
            }
            "sweep" => self.sweep()?,
            other => {
                return Err(crate::SddError::Config(format!(
                    "unknown study kind '{other}'; valid kinds: {}",
                    STUDY_KINDS.join(", ")
                )))
            }
        };
        Ok(StudyOutput { report: out.report.with_provenance(prov), ..out })
    }

    /// Entry times over the damping values, each initial function followed
    /// across the sweep. Entry times must not grow with `d`.
    fn sweep(&self) -> Result<StudyOutput> {
        let s = self.scenario;
        let mut d_values = s.study.d_values.clone();
        d_values.sort_by(f64::total_cmp);
        let outcomes = d_values
            .iter()
            .map(|&d| {
                let rhs = s.rhs_variant(s.m, s.domain.n_grid, d, self.exec)?;
                self.dissipativity(&rhs)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut table = StudyTable::new("sweep", &["d", "index", "entry_time", "predicted"]);
        let mut plot = PlotData::new("sweep", &["d", "max_entry_time", "mean_entry_time"]);
        let mut worst_increase = 0.0f64;
        let mut exhausted = false;
        for (k, (d, o)) in d_values.iter().zip(&outcomes).enumerate() {
            let times: Vec<f64> = o.entries.iter().map(|e| e.entry_time.unwrap_or(f64::NAN)).collect();
            exhausted |= times.iter().any(|t| t.is_nan());
            for (e, t) in o.entries.iter().zip(&times) {
                table.rows.push(vec![*d, e.index as f64, *t, e.predicted]);
            }
            let max = times.iter().cloned().fold(0.0, f64::max);
            let mean = times.iter().sum::<f64>() / times.len().max(1) as f64;
            plot.rows.push(vec![*d, max, mean]);
            if k > 0 {
                for (a, b) in outcomes[k - 1].entries.iter().zip(&o.entries) {
                    if let (Some(ta), Some(tb)) = (a.entry_time, b.entry_time) {
                        worst_increase = worst_increase.max(tb - ta);
                    }
                }
            }
        }
        // One step of slack: entry times live on the step grid.
        let report = if exhausted {
            EstimateReport::exhausted("sweep", s.solver.dt, worst_increase)
        } else {
            EstimateReport::new("sweep", s.solver.dt, worst_increase, 0.0)
        }
        .with("d_values", &d_values);
        Ok(StudyOutput { table, plots: vec![plot], report })
    }
}

fn energy_curves_plot(d: &DissipativityOutcome) -> PlotData {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..d.energy_curves.len()).map(|i| format!("energy_{i}")));
    let mut plot = PlotData { name: "dissipativity".into(), columns: cols, rows: Vec::new() };
    let n = d.energy_curves.iter().map(|c| c.len()).min().unwrap_or(0);
    for j in 0..n {
        let mut row = vec![d.energy_curves[0][j].0];
        row.extend(d.energy_curves.iter().map(|c| c[j].1));
        plot.rows.push(row);
    }
    plot
}

fn galerkin_plot(g: &GalerkinOutcome) -> PlotData {
    let mut plot = PlotData::new("galerkin", &["m", "sup_energy_norm", "distance_to_next"]);
    for (i, (m, sup)) in g.sup_energy.iter().enumerate() {
        let dist = g.rows.get(i).map(|r| r.distance).unwrap_or(f64::NAN);
        plot.rows.push(vec![*m as f64, *sup, dist]);
    }
    plot
}
