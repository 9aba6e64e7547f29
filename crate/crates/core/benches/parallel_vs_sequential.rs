use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sddpde_core::analysis::audit::audit_lemma1;
use sddpde_core::analysis::dissipativity::{initial_set, verify_dissipativity, DissipativityConfig};
use sddpde_core::analysis::galerkin::galerkin_convergence_study;
use sddpde_core::integrator::SolverConfig;
use sddpde_core::rhs::NonlocalOperator;
use sddpde_core::scenario::Scenario;
use sddpde_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench(c: &mut Criterion) {
    let sc = Scenario::nicholson();
    let rhs = sc.rhs(Execution::Parallel).unwrap();
    let basis = sc.basis().unwrap();

    let mut g = c.benchmark_group("assemble");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| NonlocalOperator::assemble(&sc.kernel, &basis, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("lemma1_audit");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| audit_lemma1(&rhs, 200, 1, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("dissipativity_batch");
    g.sample_size(10);
    let initials = initial_set(&rhs, 8, 10.0, 1);
    let cfg = SolverConfig::new(0.01, 1.0);
    let dcfg = DissipativityConfig { t_max: 5.0, ..DissipativityConfig::default() };
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| verify_dissipativity(&rhs, &cfg, &dcfg, &initials, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("galerkin_study");
    g.sample_size(10);
    let cfg = SolverConfig::new(0.01, 1.0);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let make = |m| sc.rhs_variant(m, sc.study_n_grid(), sc.d, Execution::Sequential);
                galerkin_convergence_study(&sc.initial.shape, sc.r, make, &[4, 8, 16, 32], &cfg, true, exec).unwrap()
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
