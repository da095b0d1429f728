use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use pushasep::kernels::{dw_step_kernel, invariant_pmf, sup_cdf, TransitionKernel};
use pushasep::samplers::{pushasep_burned_in, sample_geometric_field, ZdaggerSampler};
use pushasep::symfunc::schur;
use pushasep::{Chamber, ChamberConfig};
use pushasep_bench::{rates, rng};

fn exact(c: &mut Criterion) {
    let v2 = rates("0.3,0.5");
    let v3 = rates("0.3,0.5,0.7");
    c.bench_function("transition_kernel/new+25 entries n=2", |b| {
        b.iter(|| {
            let k = TransitionKernel::new(1.0, &v2).unwrap();
            (0..25).map(|y| k.r(&[0, 1], &[y / 5, y]).unwrap()).sum::<f64>()
        })
    });
    let x = ChamberConfig::new(vec![1, 2, 4], Chamber::NonNeg).unwrap();
    c.bench_function("invariant_pmf n=3", |b| b.iter(|| invariant_pmf(black_box(&x), &v3).unwrap()));
    c.bench_function("sup_cdf n=3 eta=10", |b| b.iter(|| sup_cdf(black_box(10), &v3).unwrap()));
    let z = ChamberConfig::new(vec![-1, 2, 5], Chamber::Full).unwrap();
    c.bench_function("schur n=3", |b| b.iter(|| schur(black_box(&z), &v3).unwrap()));
    c.bench_function("dw_step_kernel n=3", |b| b.iter(|| dw_step_kernel(&[0, 1], black_box(&[0, 2, 3]), &v3).unwrap()));
}

fn sampling(c: &mut Criterion) {
    let v = rates("0.3,0.5,0.7");
    let vals = v.values().to_vec();
    let mut r = rng(1);
    c.bench_function("pushasep n=3 burn-in 20", |b| b.iter(|| pushasep_burned_in(&vals, 20.0, &mut r)));
    let mut r = rng(2);
    c.bench_function("geometric field n=3", |b| b.iter(|| sample_geometric_field(&v, &mut r)));
    let mut zs = ZdaggerSampler::new(&v, 1e-12).unwrap();
    let mut r = rng(3);
    c.bench_function("zdagger sup n=3", |b| b.iter(|| zs.sample_sup(&[0, 0, 0], &mut r).unwrap().sup));
}

criterion_group!(benches, exact, sampling);
criterion_main!(benches);
