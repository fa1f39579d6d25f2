//! Residual and Jacobian assembly, sequential against rayon.
//!
//! `cargo bench --bench assembly`. On a single core the parallel numbers
//! only measure scheduling overhead.

use criterion::{criterion_group, criterion_main, BenchmarkId as Id, Criterion};
use otmonge::benchmarks::{make_problem, BenchmarkId};
use otmonge::parallel::Execution;
use otmonge::problem::build_grids;
use otmonge::scheme::{assemble_residual_and_jacobian_with, assemble_residual_with, build_context};

fn assembly(c: &mut Criterion) {
    let spec = make_problem(BenchmarkId::Curved);
    let exact = spec.exact_u.clone().unwrap();
    let mut group = c.benchmark_group("assembly");
    group.sample_size(20);
    for n in [256, 1024, 4096] {
        let grids = build_grids(spec.x_domain, spec.y_square, n).unwrap();
        let ctx = build_context(&spec, &grids).unwrap();
        let u: Vec<f64> = grids.x_nodes.iter().map(|&x| exact(x)).collect();
        for (label, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(Id::new(format!("residual/{label}"), n), &u, |b, u| {
                b.iter(|| assemble_residual_with(&ctx, u, exec).unwrap())
            });
            group.bench_with_input(Id::new(format!("jacobian/{label}"), n), &u, |b, u| {
                b.iter(|| assemble_residual_and_jacobian_with(&ctx, u, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, assembly);
criterion_main!(benches);
