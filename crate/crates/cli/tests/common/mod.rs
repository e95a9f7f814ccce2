//! Corpus access shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use tydi_core::{compile, load_inputs, BuildConfig, Code, Compilation};

pub fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// A design that must compile cleanly: (file under the corpus, top, sugar).
pub struct Good {
    pub file: &'static str,
    pub top: &'static str,
    pub sugar: bool,
}

pub const GOOD: &[Good] = &[
    Good { file: "queries/parallelize.td", top: "adder_top", sugar: true },
    Good { file: "queries/tpch1.td", top: "tpch1", sugar: true },
    Good { file: "queries/tpch6.td", top: "tpch6", sugar: true },
    Good { file: "queries/tpch12.td", top: "tpch12", sugar: true },
    Good { file: "queries/tpch19.td", top: "tpch19", sugar: true },
    Good { file: "manual/tpch1.td", top: "tpch1", sugar: false },
];

/// The TPC-H style queries.
pub const QUERIES: &[&str] = &["tpch1", "tpch12", "tpch19"];

pub fn config(top: Option<&str>, sugar: bool) -> BuildConfig {
    BuildConfig {
        top: top.map(str::to_string),
        sugar,
        ..BuildConfig::default()
    }
}

pub fn compile_file(rel: &str, config: &BuildConfig) -> Compilation {
    let sources = load_inputs(&[corpus().join(rel)]).unwrap_or_else(|e| panic!("{rel}: {e}"));
    compile(sources, config)
}

pub fn compile_good(g: &Good) -> Compilation {
    compile_file(g.file, &config(Some(g.top), g.sugar))
}

pub fn compile_text(text: &str, config: &BuildConfig) -> Compilation {
    let mut m = tydi_core::SourceMap::new();
    m.add("input.td", text);
    compile(m, config)
}

/// Expected outcome of a bad design, from its `// expect: E00x line:col` header.
pub struct Expect {
    pub file: PathBuf,
    pub code: Code,
    pub line: u32,
    pub column: u32,
}

fn code(s: &str) -> Code {
    match s {
        "E001" => Code::E001,
        "E002" => Code::E002,
        "E003" => Code::E003,
        "E004" => Code::E004,
        "E005" => Code::E005,
        "E006" => Code::E006,
        "E007" => Code::E007,
        "E008" => Code::E008,
        "E009" => Code::E009,
        "E010" => Code::E010,
        "E011" => Code::E011,
        _ => panic!("unknown code {s}"),
    }
}

pub fn bad_designs() -> Vec<Expect> {
    let dir = corpus().join("bad");
    let files = tydi_core::pipeline::source_files_in(&dir).unwrap();
    files
        .into_iter()
        .map(|file| {
            let text = std::fs::read_to_string(&file).unwrap();
            let head = text.lines().next().unwrap_or_default();
            let rest = head
                .strip_prefix("// expect: ")
                .unwrap_or_else(|| panic!("{}: missing expect header", file.display()));
            let (c, pos) = rest.split_once(' ').unwrap();
            let (l, col) = pos.split_once(':').unwrap();
            Expect {
                file,
                code: code(c),
                line: l.parse().unwrap(),
                column: col.parse().unwrap(),
            }
        })
        .collect()
}
