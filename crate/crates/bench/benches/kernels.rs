use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use memsim_core::aer::{route_events, uniform_traffic, RouteOptions};
use memsim_core::device::{iv_sweep, Drive};
use memsim_core::{
    epsc_trace, stdp_curve, BoardSpec, DpiParams, MemristorParams, MemristorState, StdpProbe,
};

fn dpi(c: &mut Criterion) {
    let p = DpiParams::default();
    let spikes: Vec<f64> = (0..50).map(|k| 1e-3 + k as f64 * 2e-3).collect();
    c.bench_function("epsc_trace 50 spikes x 1001 samples", |b| {
        b.iter(|| epsc_trace(&p, black_box(&spikes), 0.1, 1e-4).unwrap())
    });
}

fn device(c: &mut Criterion) {
    let p = MemristorParams::default();
    let drive = Drive::triangle(3.0, 1e-3, 1000, 10);
    let s = MemristorState::new(p.g_mid(), &p).unwrap();
    c.bench_function("iv_sweep 10k samples", |b| {
        b.iter(|| iv_sweep(black_box(s), &p, &drive).unwrap())
    });
}

fn stdp(c: &mut Criterion) {
    let p = MemristorParams::default();
    let probe = StdpProbe::default();
    let mut group = c.benchmark_group("stdp");
    group.sample_size(20);
    group.bench_function("default curve", |b| {
        b.iter(|| stdp_curve(black_box(&probe), &p, p.g_mid()).unwrap())
    });
    group.finish();
}

fn mesh(c: &mut Criterion) {
    let spec = BoardSpec::default();
    let mut group = c.benchmark_group("mesh");
    group.sample_size(10);
    for n in [10_000usize, 100_000] {
        let events = uniform_traffic(&spec, 0.1, n, 1).unwrap();
        group.throughput(Throughput::Elements(n as u64));
        group.bench_with_input(BenchmarkId::new("route 10% load", n), &events, |b, ev| {
            b.iter(|| route_events(&spec, ev, &RouteOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, dpi, device, stdp, mesh);
criterion_main!(benches);
