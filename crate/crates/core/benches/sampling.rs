use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use seamqec::par::{map_blocks, sequential};
use seamqec::patch::*;
use seamqec::sampler::{block_rng, count_failures, FrameSampler, SampleOptions};
use std::hint::black_box;

const BLOCKS: usize = 256;

fn frame_sampling(c: &mut Criterion) {
    let patch = build_patch(&PatchSpec::new(Variant::Seam, 5, Basis::Z, 1e-3, 0.02)).unwrap();
    let fs = FrameSampler::new(&patch.circuit).unwrap();
    let work = |s: &mut seamqec::sampler::BlockScratch, b: usize| {
        fs.sample_block(&mut block_rng(1, b), s);
        s.detectors.iter().map(|w| w.count_ones() as u64).sum::<u64>()
    };
    let mut g = c.benchmark_group("frame_sampling_d5_seam");
    g.bench_function("sequential", |bench| {
        bench.iter(|| black_box(sequential(BLOCKS, || fs.scratch(), work)))
    });
    g.bench_function("parallel", |bench| {
        bench.iter(|| black_box(map_blocks(BLOCKS, 0, || fs.scratch(), work)))
    });
    g.finish();
}

fn decoded_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("count_failures_d5_plain");
    g.sample_size(10);
    let patch = build_patch(&PatchSpec::new(Variant::Plain, 5, Basis::Z, 3e-3, 0.0)).unwrap();
    for threads in [1, 0] {
        let label = if threads == 1 { "sequential" } else { "parallel" };
        g.bench_with_input(BenchmarkId::new(label, 4096), &threads, |bench, &threads| {
            bench.iter(|| count_failures(&patch.circuit, SampleOptions { shots: 4096, seed: 2, threads }).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, frame_sampling, decoded_sampling);
criterion_main!(benches);
