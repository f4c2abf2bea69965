use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use symhodge::grid_domain::random_field;
use symhodge::hodge_engine::{harmonic_space, poincare_solve, Decomposer, Flavor, HarmonicKind, PoincareOp, PoincareOptions, DEFAULT_CUTOFF};
use symhodge::symplectic_operators::matvec;
use symhodge::{Assembler, BoundaryCondition, FormField};
use symhodge_bench::{setup, CASES};

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    for &(label, n, shape) in CASES {
        let (grid, md) = setup(n, shape);
        g.bench_function(BenchmarkId::new("dplus_dminus", label), |b| {
            b.iter(|| {
                let asm = Assembler::new(&grid, &md).unwrap();
                black_box((asm.dplus(0), asm.dminus(1)))
            })
        });
    }
    g.finish();
}

fn harmonic(c: &mut Criterion) {
    let mut g = c.benchmark_group("harmonic_space");
    g.sample_size(10);
    for &(label, n, shape) in CASES {
        let (grid, md) = setup(n, shape);
        g.bench_function(BenchmarkId::new("plusplus_N+", label), |b| {
            b.iter(|| black_box(harmonic_space(HarmonicKind::PlusPlus, Some(BoundaryCondition::NPlus), n, &grid, &md, DEFAULT_CUTOFF).unwrap().dimension))
        });
    }
    g.finish();
}

fn decomposition(c: &mut Criterion) {
    let mut g = c.benchmark_group("decomposition");
    g.sample_size(10);
    for &(label, n, shape) in CASES {
        let (grid, md) = setup(n, shape);
        let flavor: Flavor = "plus:N+".parse().unwrap();
        g.bench_function(BenchmarkId::new("setup", label), |b| b.iter(|| black_box(Decomposer::new(flavor, 0, &grid, &md).unwrap().discrete_dim)));
        let dec = Decomposer::new(flavor, 0, &grid, &md).unwrap();
        let eta = random_field(&grid, &md, 0, true, 2, 1).unwrap();
        g.bench_function(BenchmarkId::new("apply", label), |b| b.iter(|| black_box(dec.decompose(&eta).unwrap().residual)));
    }
    g.finish();
}

fn poincare(c: &mut Criterion) {
    let mut g = c.benchmark_group("poincare");
    g.sample_size(10);
    for &(label, n, shape) in CASES {
        let (grid, md) = setup(n, shape);
        let asm = Assembler::new(&grid, &md).unwrap();
        let alpha = random_field(&grid, &md, 0, true, 2, 2).unwrap();
        let eta = FormField { grid: grid.clone(), degree: 1, primitive_flag: true, coeffs: matvec(&PoincareOp::DPlus.sparse(&asm, 1), &alpha.coeffs) };
        g.bench_function(BenchmarkId::new("dplus", label), |b| {
            b.iter(|| black_box(poincare_solve(PoincareOp::DPlus, &eta, None, &md, PoincareOptions::default()).unwrap().equation_residual))
        });
    }
    g.finish();
}

criterion_group!(benches, assembly, harmonic, decomposition, poincare);
criterion_main!(benches);
