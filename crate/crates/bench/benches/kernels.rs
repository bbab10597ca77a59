use std::hint::black_box;

use covert_adsi::analytic::{bsc_rewrite_noncausal, DEFAULT_BETA_GRID};
use covert_adsi::codesim::{build_codebook, induced_warden_distribution, SimConfig, DEFAULT_SIM_CAP};
use covert_adsi::fixtures::{dirty_binary_channel, dirty_binary_params, rewrite_bsc_channel, rewrite_causal_params};
use covert_adsi::regions::{eval_region, optimize_region, OptConfig, RegionId, RegionParams};
use criterion::{criterion_group, criterion_main, Criterion};

fn eval(c: &mut Criterion) {
    let ch = dirty_binary_channel(0.2).unwrap();
    let p = dirty_binary_params(&ch, 0.5).unwrap();
    c.bench_function("eval_region/cor2_dirty", |b| {
        b.iter(|| eval_region(&ch, RegionId::Cor2C, black_box(&p)).unwrap())
    });
    let t1 = RegionParams::no_communication(RegionId::Thm1Nc, &ch, 3, 2, false);
    c.bench_function("eval_region/thm1_dirty", |b| {
        b.iter(|| eval_region(&ch, RegionId::Thm1Nc, black_box(&t1)).unwrap())
    });
}

fn analytic(c: &mut Criterion) {
    c.bench_function("bsc_rewrite_noncausal/default_grid", |b| {
        b.iter(|| bsc_rewrite_noncausal(black_box(0.5), DEFAULT_BETA_GRID).unwrap())
    });
}

fn optimize(c: &mut Criterion) {
    let ch = rewrite_bsc_channel(0.4).unwrap();
    let cfg = OptConfig { restarts: 2, ..OptConfig::default() };
    let mut g = c.benchmark_group("optimize_region");
    g.sample_size(10);
    g.bench_function("cor2_rewrite_2_restarts", |b| {
        b.iter(|| optimize_region(&ch, RegionId::Cor2C, black_box(&cfg)).unwrap())
    });
    g.finish();
}

fn codesim(c: &mut Criterion) {
    let ch = rewrite_bsc_channel(0.3).unwrap();
    let p = rewrite_causal_params(&ch, 0.3).unwrap();
    let cfg = SimConfig { n: 8, bits_m: 4, bits_k: 4, ..SimConfig::default() };
    let cb = build_codebook(&ch, &p, &cfg).unwrap();
    c.bench_function("induced_warden_distribution/n8_256_words", |b| {
        b.iter(|| induced_warden_distribution(&ch, black_box(&cb), DEFAULT_SIM_CAP).unwrap())
    });
}

criterion_group!(benches, eval, analytic, optimize, codesim);
criterion_main!(benches);
