use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use tydi_bench::{chain, query};
use tydi_core::ir::emit_ir;
use tydi_core::vhdl::emit_vhdl;
use tydi_core::{compile, drc, sugar, BuildConfig, DrcMode};

fn queries(c: &mut Criterion) {
    for (file, top) in [("tpch1.td", "tpch1"), ("tpch12.td", "tpch12"), ("tpch19.td", "tpch19")] {
        let (sources, config) = query(file, top);
        c.bench_function(&format!("compile/{top}"), |b| {
            b.iter_batched(|| sources.clone(), |s| compile(s, &config), BatchSize::SmallInput)
        });
    }
}

fn stages(c: &mut Criterion) {
    let (sources, config) = query("tpch19.td", "tpch19");
    let design = compile(sources.clone(), &BuildConfig { sugar: false, ..config.clone() }).design.unwrap();
    let sugared = compile(sources, &config).design.unwrap();
    c.bench_function("sugar/tpch19", |b| {
        b.iter_batched(|| design.clone(), |mut d| sugar::sugar(&mut d), BatchSize::SmallInput)
    });
    c.bench_function("drc/tpch19", |b| b.iter(|| drc::check_design(&sugared, DrcMode::Strict)));
    c.bench_function("ir/tpch19", |b| b.iter(|| emit_ir(&sugared)));
    c.bench_function("vhdl/tpch19", |b| b.iter(|| emit_vhdl(&sugared)));
}

fn scaling(c: &mut Criterion) {
    let config = BuildConfig {
        top: Some("top".into()),
        ..BuildConfig::default()
    };
    let mut g = c.benchmark_group("chain");
    for n in [16, 64, 256] {
        let sources = chain(n, 2);
        g.bench_function(n.to_string(), |b| {
            b.iter_batched(|| sources.clone(), |s| compile(s, &config), BatchSize::SmallInput)
        });
    }
    g.finish();
}

criterion_group!(benches, queries, stages, scaling);
criterion_main!(benches);
