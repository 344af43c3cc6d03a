use std::hint::black_box;
use std::sync::Arc;

use carleman_bench::{symmetric_problem, variable_problem};
use carleman_core::funcmodel;
use carleman_core::{
    derive_coefficients, solve, split, split_rhs, weight_eval, CarlemanSequence, Complex64,
    PartitionSplit, Recurrence, SolveOptions, SplitHalves, SplitParams,
};
use criterion::{criterion_group, criterion_main, Criterion};

fn weight(c: &mut Criterion) {
    let seq = CarlemanSequence::factorial_log(200).unwrap();
    c.bench_function("weight_eval n_max=200", |b| b.iter(|| weight_eval(&seq, black_box(0.03)).unwrap()));
}

fn splitting(c: &mut Criterion) {
    let f = funcmodel::exp_i(1.0, Complex64::new(1.0, 0.0));
    let disk = split(f.clone(), SplitParams::new(0.5, 1.0)).unwrap();
    let z = Complex64::new(0.17, 0.0);
    c.bench_function("disk split f_plus", |b| b.iter(|| disk.plus(black_box(z)).unwrap()));
    let part = PartitionSplit::new(f, 2.0).unwrap();
    c.bench_function("partition split ln_plus", |b| b.iter(|| part.ln_plus(black_box(z)).unwrap()));
}

fn recurrence(c: &mut Criterion) {
    let p = symmetric_problem();
    let opts = SolveOptions::default();
    let dc = derive_coefficients(&p, None, None).unwrap();
    let halves = split_rhs(&p, &dc, &opts).unwrap();
    c.bench_function("g_8 on a fresh memo", |b| {
        b.iter(|| {
            let rec = Arc::new(Recurrence::new(&p, &dc, halves.clone(), 1_000_000));
            rec.g(8, black_box(Complex64::new(0.3, 0.0))).unwrap()
        })
    });
}

fn solving(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    let sym = symmetric_problem();
    group.bench_function("constant coefficients", |b| b.iter(|| solve(&sym, &SolveOptions::default()).unwrap()));
    let var = variable_problem();
    let opts = SolveOptions {
        a: 3.0,
        ..SolveOptions::default()
    };
    group.bench_function("variable coefficients", |b| b.iter(|| solve(&var, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, weight, splitting, recurrence, solving);
criterion_main!(benches);
