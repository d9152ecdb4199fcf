use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use umc_core::datagen::{gen_field, gen_mesh, SynthSpec};
use umc_core::{
    build_grid, compress, compress_baseline_archive, decompress, BackInterpKind, CodecRegistry, CodecSpec,
    CompressOptions, ErrorBudget, Field, GridBuildConfig, Layout, Mesh,
};

fn dataset() -> (Mesh, Field) {
    let spec = SynthSpec { n_target: 50_000, ..SynthSpec::default() };
    let mesh = gen_mesh(&spec).unwrap();
    let field = gen_field(&mesh, &spec).unwrap();
    (mesh, field)
}

fn grid(c: &mut Criterion) {
    let (mesh, _) = dataset();
    let mut g = c.benchmark_group("build_grid");
    g.throughput(Throughput::Elements(mesh.num_vertices() as u64));
    for g_max in [64, 4096] {
        let cfg = GridBuildConfig { g_max, ..Default::default() };
        g.bench_with_input(BenchmarkId::from_parameter(g_max), &cfg, |b, cfg| b.iter(|| build_grid(black_box(&mesh), cfg).unwrap()));
    }
    g.finish();
}

fn codec(c: &mut Criterion) {
    let (_, field) = dataset();
    let reg = CodecRegistry::new();
    let tau = 1e-3 * field.range();
    let spec = CodecSpec::sequence(field.len(), tau);
    let encoded = reg.encode(field.values(), &spec).unwrap();

    let mut g = c.benchmark_group("codec");
    g.throughput(Throughput::Bytes(8 * field.len() as u64));
    g.bench_function("encode", |b| b.iter(|| reg.encode(black_box(field.values()), &spec).unwrap()));
    g.bench_function("decode", |b| b.iter(|| reg.decode(black_box(&encoded)).unwrap()));
    g.finish();
}

fn pipeline(c: &mut Criterion) {
    let (mesh, field) = dataset();
    let reg = CodecRegistry::new();
    let opts = CompressOptions::default();
    let budget = ErrorBudget::relative(1e-3, 0.15).unwrap();
    let (_, coarse) = build_grid(&mesh, &GridBuildConfig { g_max: 64, ..Default::default() }).unwrap();

    let mut g = c.benchmark_group("pipeline");
    g.throughput(Throughput::Bytes(8 * field.len() as u64));
    g.bench_function("baseline", |b| b.iter(|| compress_baseline_archive(black_box(&field), &budget, &opts, &reg).unwrap()));
    for kind in [BackInterpKind::Nearest, BackInterpKind::Multilinear] {
        let layout = Layout::new(coarse.grid.clone(), coarse.mapping.clone(), kind, Some(&mesh)).unwrap();
        let archive = compress(&field, &layout, &budget, &opts, &reg).unwrap();
        g.bench_function(BenchmarkId::new("compress", format!("{kind:?}")), |b| {
            b.iter(|| compress(black_box(&field), &layout, &budget, &opts, &reg).unwrap())
        });
        g.bench_function(BenchmarkId::new("decompress", format!("{kind:?}")), |b| {
            b.iter(|| decompress(black_box(&archive), Some(&layout), &reg).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, grid, codec, pipeline);
criterion_main!(benches);
