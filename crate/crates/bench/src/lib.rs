//! Benchmarks for the compiler pipeline.

use std::path::PathBuf;

use tydi_core::{load_inputs, BuildConfig, SourceMap};

/// The `corpus/` directory at the workspace root.
pub fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Sources and build settings for a corpus query.
pub fn query(file: &str, top: &str) -> (SourceMap, BuildConfig) {
    let sources = load_inputs(&[corpus().join("queries").join(file)]).expect("corpus file");
    let config = BuildConfig {
        top: Some(top.to_string()),
        ..BuildConfig::default()
    };
    (sources, config)
}

/// A chain of `n` pass-through stages, each fanned out to `fan` sinks.
pub fn chain(n: usize, fan: usize) -> SourceMap {
    let mut s = String::from(
        "type Byte = Stream(Bit(8));
streamlet pass_s { in: Byte in, out: Byte out, }
streamlet sink_s { in: Byte in, }
external impl pass_i of pass_s {}
external impl sink_i of sink_s {}
",
    );
    s.push_str(&format!("impl top of pass_s {{\n  instance p(pass_i) [{n}],\n  instance k(sink_i) [{}],\n  in => p[0].in,\n", n * fan));
    s.push_str(&format!("  for i in 0-1->{} {{ p[i].out => p[i + 1].in, }}\n", n - 1));
    s.push_str(&format!("  for i in 0-1->{n} {{ for j in 0-1->{fan} {{ p[i].out => k[i * {fan} + j].in, }} }}\n"));
    s.push_str(&format!("  p[{}].out => out,\n}}\n", n - 1));
    let mut m = SourceMap::new();
    m.add("chain.td", s);
    m
}
