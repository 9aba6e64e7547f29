//! `sddpde solve|verify|study [--config PATH] [--out DIR] [--seed N]`
//!
//! Exit codes: 0 success, 1 verification failure, 2 config error,
//! 3 runtime error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use sddpde_core::analysis::{reports_to_json, EstimateReport};
use sddpde_core::scenario::Scenario;
use sddpde_core::suite::{PlotData, Suite, STUDY_KINDS, VERIFY_IDS};
use sddpde_core::{Execution, SddError};

const EXIT_VERIFY: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "sddpde", version, about = "Solve and verify non-local parabolic equations with a state-dependent delay")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario TOML; the built-in Nicholson scenario when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: scenario `output.dir`, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized checks (overrides the scenario seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Run everything on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the scenario and write the trajectory.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Run verifiers by id (all when none are given).
    Verify {
        ids: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Run a study: galerkin, dissipativity or sweep.
    Study {
        kind: String,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure classified by exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_CONFIG, message: format!("config error: {e}") }
    }
    fn runtime(e: impl std::fmt::Display) -> Self {
        Self { code: EXIT_RUNTIME, message: format!("runtime error: {e}") }
    }
}

fn runtime(e: SddError) -> Failure {
    match e {
        SddError::Config(_) => Failure::config(e),
        other => Failure::runtime(other),
    }
}

struct Context {
    scenario: Scenario,
    seed: u64,
    exec: Execution,
    out: PathBuf,
}

impl Context {
    fn load(common: &Common) -> Result<Self, Failure> {
        let scenario = match &common.config {
            Some(p) => Scenario::load(p).map_err(Failure::config)?,
            None => Scenario::nicholson(),
        };
        let seed = common.seed.unwrap_or(scenario.seed);
        let out = common
            .out
            .clone()
            .or_else(|| scenario.output.dir.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        std::fs::create_dir_all(&out).map_err(|e| Failure::runtime(format!("{}: {e}", out.display())))?;
        let exec = if common.sequential { Execution::Sequential } else { Execution::Parallel };
        Ok(Self { scenario, seed, exec, out })
    }

    fn suite(&self) -> Result<Suite<'_>, Failure> {
        Suite::prepare(&self.scenario, self.seed, self.exec).map_err(Failure::config)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn manifest(&self, command: &str, started: Instant, files: &[PathBuf], extra: Value) -> Result<(), Failure> {
        let mut m = json!({
            "tool": "sddpde",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "scenario": self.scenario.name,
            "config_hash": self.scenario.config_hash(),
            "config": self.scenario,
            "seed": self.seed,
            "execution": self.exec,
            "wall_time_s": started.elapsed().as_secs_f64(),
            "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        });
        if let (Value::Object(dst), Value::Object(src)) = (&mut m, extra) {
            dst.extend(src);
        }
        write_json(&self.path("manifest.json"), &m)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let w = create(path)?;
    serde_json::to_writer_pretty(w, value).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
}

fn write_plot(ctx: &Context, plot: &PlotData, prefix: &str, files: &mut Vec<PathBuf>) -> Result<(), Failure> {
    let path = ctx.path(&format!("{prefix}_{}.csv", plot.name));
    plot.write_csv(create(&path)?).map_err(runtime)?;
    files.push(path);
    Ok(())
}

fn margins(reports: &[EstimateReport]) -> Value {
    Value::Object(reports.iter().map(|r| (r.id.clone(), json!(r.margin))).collect())
}

fn cmd_solve(common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    let ctx = Context::load(common)?;
    let suite = ctx.suite()?;
    let traj = suite.trajectory().map_err(runtime)?;
    let mut files = Vec::new();
    let csv = ctx.path("trajectory.csv");
    traj.write_csv(create(&csv)?).map_err(runtime)?;
    files.push(csv);
    let plot = suite.energy_plot().map_err(runtime)?;
    write_plot(&ctx, &plot, "plot", &mut files)?;
    let energy = suite.verify("energy").map_err(runtime)?.reports;
    let final_h = traj.snapshot(traj.final_time()).map_err(runtime)?.norm_h(traj.basis());
    println!("solved {} to T = {} in {} steps", ctx.scenario.name, traj.final_time(), traj.times().len() - 1);
    println!("final ‖u_T‖_H = {final_h:e}");
    println!("worst energy margin = {:e}", energy[0].margin);
    let fp_max = traj.fp_iterations().iter().copied().max().unwrap_or(0);
    ctx.manifest(
        "solve",
        started,
        &files,
        json!({ "final_h_norm": final_h, "margins": margins(&energy), "max_fixed_point_iterations": fp_max }),
    )?;
    Ok(0)
}

fn cmd_verify(ids: &[String], common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    let mut selected: Vec<String> = ids.iter().flat_map(|s| s.split(',')).map(|s| s.trim().to_string()).collect();
    selected.retain(|s| !s.is_empty());
    if selected.is_empty() || selected.iter().any(|s| s == "all") {
        selected = VERIFY_IDS.iter().map(|s| s.to_string()).collect();
    }
    if let Some(bad) = selected.iter().find(|s| !VERIFY_IDS.contains(&s.as_str())) {
        return Err(Failure::config(format!("unknown estimate id '{bad}'; valid ids: {}", VERIFY_IDS.join(", "))));
    }
    let ctx = Context::load(common)?;
    let suite = ctx.suite()?;
    let mut reports = Vec::new();
    let mut files = Vec::new();
    for id in &selected {
        let out = suite.verify(id).map_err(runtime)?;
        for plot in &out.plots {
            write_plot(&ctx, plot, "plot", &mut files)?;
        }
        for r in &out.reports {
            println!("{}", r.summary());
            if r.id == "remark4" || r.id == "remark5" {
                println!("{} limit = {:.6}", r.id, r.observed);
            }
        }
        reports.extend(out.reports);
    }
    let path = ctx.path("report.json");
    write_json(&path, &reports_to_json(&reports))?;
    files.push(path);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    ctx.manifest("verify", started, &files, json!({ "margins": margins(&reports), "failed": failed }))?;
    if failed.is_empty() {
        Ok(0)
    } else {
        eprintln!("verification failed: {}", failed.join(", "));
        Ok(EXIT_VERIFY)
    }
}

fn cmd_study(kind: &str, common: &Common) -> Result<u8, Failure> {
    let started = Instant::now();
    if !STUDY_KINDS.contains(&kind) {
        return Err(Failure::config(format!("unknown study kind '{kind}'; valid kinds: {}", STUDY_KINDS.join(", "))));
    }
    let ctx = Context::load(common)?;
    let suite = ctx.suite()?;
    let out = suite.study(kind).map_err(runtime)?;
    let mut files = Vec::new();
    let table = ctx.path(&format!("study_{kind}.csv"));
    out.table.write_csv(create(&table)?).map_err(runtime)?;
    files.push(table);
    for plot in &out.plots {
        write_plot(&ctx, plot, "plot", &mut files)?;
    }
    println!("{}", out.report.summary());
    let report = ctx.path("report.json");
    write_json(&report, &reports_to_json(std::slice::from_ref(&out.report)))?;
    files.push(report);
    ctx.manifest(&format!("study {kind}"), started, &files, json!({ "margins": margins(&[out.report.clone()]) }))?;
    Ok(if out.report.pass { 0 } else { EXIT_VERIFY })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve { common } => cmd_solve(common),
        Command::Verify { ids, common } => cmd_verify(ids, common),
        Command::Study { kind, common } => cmd_study(kind, common),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
