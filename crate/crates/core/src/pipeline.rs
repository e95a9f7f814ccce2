//! The compiler pipeline: parse, resolve, elaborate, sugar, DRC, emit.

use std::collections::VecDeque;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::design::ElaboratedDesign;
use crate::diag::{has_errors, sort_diagnostics, Diagnostic, SourceMap};
use crate::drc::{self, DrcMode};
use crate::elaborate::{elaborate, ElabConfig, DEFAULT_MAX_DEPTH};
use crate::scope::{normalize_path, resolve, resolve_import_path};
use crate::stdlib::{PRELUDE, PRELUDE_PATH};
use crate::syntax::lexer::{tokenize, Keyword, Tok};
use crate::syntax::parse;
use crate::{ir, sugar, vhdl};

/// Source file extension.
pub const SOURCE_EXT: &str = "td";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    Ir,
    Vhdl,
    #[default]
    Both,
}

impl Backend {
    pub fn parse(s: &str) -> Option<Backend> {
        match s {
            "ir" => Some(Backend::Ir),
            "vhdl" => Some(Backend::Vhdl),
            "both" => Some(Backend::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub top: Option<String>,
    pub drc_mode: DrcMode,
    pub sugar: bool,
    pub backend: Backend,
    pub max_depth: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            top: None,
            drc_mode: DrcMode::Strict,
            sugar: true,
            backend: Backend::Both,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

/// Pipeline stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Parse,
    Resolve,
    Elaborate,
    Sugar,
    Drc,
    Emit,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse",
            Stage::Resolve => "resolve",
            Stage::Elaborate => "elaborate",
            Stage::Sugar => "sugar",
            Stage::Drc => "drc",
            Stage::Emit => "emit",
        }
    }
}

/// A generated file, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub path: String,
    pub text: String,
}

#[derive(Debug)]
pub struct Compilation {
    pub sources: SourceMap,
    /// Present when elaboration succeeded, even if DRC failed.
    pub design: Option<ElaboratedDesign>,
    pub diagnostics: Vec<Diagnostic>,
    pub artifacts: Vec<Artifact>,
    pub stages: Vec<Stage>,
}

impl Compilation {
    pub fn ok(&self) -> bool {
        !has_errors(&self.diagnostics)
    }

    pub fn rendered_diagnostics(&self) -> Vec<String> {
        self.diagnostics.iter().map(|d| d.render(&self.sources)).collect()
    }
}

/// Runs every stage over `sources`. The prelude is added automatically.
pub fn compile(mut sources: SourceMap, config: &BuildConfig) -> Compilation {
    let prelude = sources.add(PRELUDE_PATH, PRELUDE);
    let mut c = Compilation {
        sources,
        design: None,
        diagnostics: Vec::new(),
        artifacts: Vec::new(),
        stages: Vec::new(),
    };

    c.stages.push(Stage::Parse);
    let mut asts = Vec::new();
    for id in c.sources.ids().collect::<Vec<_>>() {
        match parse(&c.sources.get(id).text, id) {
            Ok(a) => asts.push(a),
            Err(d) => c.diagnostics.push(d),
        }
    }
    if !finish_stage(&mut c) {
        return c;
    }

    c.stages.push(Stage::Resolve);
    let (program, diags) = resolve(asts, &c.sources, Some(prelude));
    c.diagnostics.extend(diags);
    if !finish_stage(&mut c) {
        return c;
    }

    c.stages.push(Stage::Elaborate);
    let elab = ElabConfig {
        max_depth: config.max_depth,
    };
    let mut design = match elaborate(&program, config.top.as_deref(), &elab) {
        Ok(d) => d,
        Err(diags) => {
            c.diagnostics.extend(diags);
            finish_stage(&mut c);
            return c;
        }
    };

    if config.sugar {
        c.stages.push(Stage::Sugar);
        sugar::sugar(&mut design);
    }

    c.stages.push(Stage::Drc);
    c.diagnostics.extend(drc::check_design(&design, config.drc_mode));
    let clean = finish_stage(&mut c);
    if clean {
        c.stages.push(Stage::Emit);
        c.artifacts = artifacts(&design, config.backend);
    }
    c.design = Some(design);
    c
}

fn finish_stage(c: &mut Compilation) -> bool {
    sort_diagnostics(&mut c.diagnostics);
    c.ok()
}

/// Base name of the IR file for a design.
pub fn ir_file_name(design: &ElaboratedDesign) -> String {
    if design.top.is_empty() {
        "design.tir".to_string()
    } else {
        format!("{}.tir", vhdl::sanitize(&design.top))
    }
}

pub fn artifacts(design: &ElaboratedDesign, backend: Backend) -> Vec<Artifact> {
    let mut out = Vec::new();
    if matches!(backend, Backend::Ir | Backend::Both) {
        out.push(Artifact {
            path: ir_file_name(design),
            text: ir::emit_ir(design),
        });
    }
    if matches!(backend, Backend::Vhdl | Backend::Both) {
        out.extend(vhdl::emit_vhdl(design).into_iter().map(|f| Artifact {
            path: format!("vhdl/{}", f.name),
            text: f.text,
        }));
    }
    out
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}: not a .td file or directory")]
    NotSource(String),
}

fn read(path: &Path) -> Result<String, LoadError> {
    fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Paths of the `.td` files directly inside `dir`, sorted.
pub fn source_files_in(dir: &Path) -> Result<Vec<PathBuf>, LoadError> {
    let entries = fs::read_dir(dir).map_err(|source| LoadError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut out = Vec::new();
    for e in entries {
        let e = e.map_err(|source| LoadError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let p = e.path();
        if p.is_file() && p.extension().is_some_and(|x| x == SOURCE_EXT) {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

/// Import paths named in `text`. Lexing errors are left for the parser.
fn imports_of(text: &str) -> Vec<String> {
    let Ok(toks) = tokenize(text, crate::diag::FileId(0)) else {
        return Vec::new();
    };
    toks.windows(2)
        .filter_map(|w| match (&w[0].tok, &w[1].tok) {
            (Tok::Keyword(Keyword::Import), Tok::Str(s)) => Some(s.clone()),
            _ => None,
        })
        .collect()
}

/// Reads the given files and directories (`*.td`, sorted) plus every file
/// they import, transitively. Missing imports are left for name
/// resolution to report.
pub fn load_inputs(inputs: &[PathBuf]) -> Result<SourceMap, LoadError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            files.extend(source_files_in(input)?);
        } else if input.extension().is_some_and(|x| x == SOURCE_EXT) || input.is_file() {
            files.push(input.clone());
        } else {
            return Err(LoadError::NotSource(input.display().to_string()));
        }
    }
    let mut map = SourceMap::new();
    let mut queue: VecDeque<(String, bool)> = files.iter().map(|p| (normalize_path(p), true)).collect();
    while let Some((path, explicit)) = queue.pop_front() {
        if map.find(&path).is_some() {
            continue;
        }
        let p = Path::new(&path);
        if !explicit && !p.is_file() {
            continue;
        }
        let text = read(p)?;
        for imp in imports_of(&text) {
            queue.push_back((resolve_import_path(&path, &imp), false));
        }
        map.add(path, text);
    }
    Ok(map)
}
