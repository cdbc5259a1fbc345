use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use medsacks_core::ned::BelowFirstBlock;
use medsacks_core::trees::AutomatonTree;
use medsacks_core::{
    build_h, catch_product, catch_single, encode_prefix, EdFamily, NatFn, NedInput, SkeletonTree, TransducerCode,
};

fn automaton() -> SkeletonTree {
    let bits = |s: &str| s.parse().unwrap();
    SkeletonTree::from_rule(AutomatonTree {
        stem: bits("01"),
        next: vec![[1, 0], [0, 1]],
        gap: vec![[bits(""), bits("1")], [bits("00"), bits("")]],
    })
}

fn single(c: &mut Criterion) {
    let mut group = c.benchmark_group("catch-single");
    for depth in [4, 6, 8] {
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, &depth| {
            b.iter(|| {
                let result = catch_single(automaton(), Arc::new(TransducerCode::echo(1)));
                black_box(result.trace(depth).unwrap())
            })
        });
    }
    group.finish();
}

fn product(c: &mut Criterion) {
    let mut family = EdFamily::new();
    family.push(NatFn::new(|n| n + 1000), 0);
    family.push(NatFn::new(|n| 2 * n + 1001), 0);
    let mut group = c.benchmark_group("catch-product");
    for arity in [1, 2] {
        let code = TransducerCode::echo(arity);
        group.bench_with_input(BenchmarkId::new("arity", arity), &arity, |b, &arity| {
            b.iter(|| black_box(catch_product(arity, &code, &family, 64, 3).unwrap().h0.len()))
        });
    }
    group.finish();
}

fn validate(c: &mut Criterion) {
    let tree = automaton();
    c.bench_function("validate depth 8", |b| b.iter(|| black_box(tree.validate(8).is_ok())));
}

fn encode(c: &mut Criterion) {
    let h = NatFn::new(|n| 3 * n + 1);
    let z = NatFn::new(|n| n % 5);
    c.bench_function("encode prefix 200", |b| b.iter(|| black_box(encode_prefix(&h, &z, 200).unwrap())));
}

fn ned(c: &mut Criterion) {
    let input = NedInput {
        f: NatFn::new(|n| n % 3),
        family: vec![NatFn::new(|_| 5), NatFn::new(|n| n + 10)],
        bounds: vec![0, 0],
        h_star: NatFn::new(|n| [0, 5, 2, 7][n as usize % 4]),
        g_star: NatFn::new(|k| 10 * k + 4),
        below_first_block: BelowFirstBlock::Copy,
        spot_horizon: 1000,
    };
    c.bench_function("build h 1000", |b| b.iter(|| black_box(build_h(&input, 1000).unwrap().prefix(1000))));
}

criterion_group!(benches, single, product, validate, encode, ned);
criterion_main!(benches);
