//! Benchmarks for the data-parallel kernels: element assembly, the decomposed
//! source solve, and sparse matvec.
//!
//! Run with the default features for the rayon code paths and with
//! `--no-default-features` for the sequential fallback; comparing the two
//! reports the parallel speedup:
//!
//! ```text
//! cargo bench -p plate-fem
//! cargo bench -p plate-fem --no-default-features
//! ```

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use plate_fem::assembly::{assemble_for_mesh, assemble_source_rhs, SourceData, Triple};
use plate_fem::linsolve::DecomposedSolver;
use plate_fem::mesh::{make_unit_square_mesh, refine_uniform};

fn refined_square(levels: usize) -> Arc<plate_fem::mesh::Triangulation> {
    let mut m = make_unit_square_mesh(4).unwrap();
    for _ in 0..levels {
        m = refine_uniform(&m).unwrap();
    }
    Arc::new(m)
}

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_mixed");
    for levels in [2usize, 3] {
        let mesh = refined_square(levels);
        group.bench_with_input(BenchmarkId::from_parameter(levels), &mesh, |b, mesh| {
            b.iter(|| assemble_for_mesh(mesh.clone(), Triple::B, true).unwrap());
        });
    }
    group.finish();
}

fn bench_source_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("decomposed_source_solve");
    group.sample_size(10);
    for levels in [2usize, 3] {
        let sys = assemble_for_mesh(refined_square(levels), Triple::B, true).unwrap();
        let rhs = assemble_source_rhs(&sys, SourceData::Analytic(&|_, _| 1.0)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(levels), &levels, |b, _| {
            b.iter(|| {
                let solver = DecomposedSolver::new(&sys).unwrap();
                solver.solve(&rhs)
            });
        });
    }
    group.finish();
}

fn bench_matvec(c: &mut Criterion) {
    let sys = assemble_for_mesh(refined_square(3), Triple::B, true).unwrap();
    let x = vec![1.0; sys.offsets.total];
    c.bench_function("spmv_level3", |b| b.iter(|| sys.a.matvec(&x)));
}

criterion_group!(benches, bench_assembly, bench_source_solve, bench_matvec);
criterion_main!(benches);
