//! `tydic`: command-line driver for the Tydi-lang compiler.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;
use tydi_core::drc::DrcMode;
use tydi_core::loc::{loc_count, loc_metrics, CommentStyle};
use tydi_core::pipeline::{compile, load_inputs, source_files_in, Backend, BuildConfig};

const DEPTH_ENV: &str = "TYDIC_TEMPLATE_DEPTH";

#[derive(Parser)]
#[command(name = "tydic", version, about = "Tydi-lang compiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile sources to IR and/or VHDL.
    Build(BuildArgs),
    /// Count lines of code and report design-effort ratios.
    Loc(LocArgs),
    /// Compute the ratios from given line counts.
    Metrics {
        query: u64,
        fletcher: u64,
        stdlib: u64,
        vhdl: u64,
    },
}

#[derive(Args)]
struct BuildArgs {
    /// Source files or directories (`*.td`).
    inputs: Vec<PathBuf>,
    /// Top-level implementation.
    #[arg(long)]
    top: Option<String>,
    /// Disable duplicator/voider insertion.
    #[arg(long)]
    no_sugar: bool,
    /// Type equality used by DRC: strict or hierarchy.
    #[arg(long)]
    drc: Option<String>,
    /// Backend: ir, vhdl or both.
    #[arg(long)]
    emit: Option<String>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// File of `key=value` lines: top, drc, sugar, emit, outdir, depth.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Log each pipeline stage.
    #[arg(long, short)]
    verbose: bool,
}

#[derive(Args)]
struct LocArgs {
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    fletcher: PathBuf,
    #[arg(long)]
    stdlib: PathBuf,
    #[arg(long)]
    vhdl: PathBuf,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Load(#[from] tydi_core::pipeline::LoadError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

struct Settings {
    config: BuildConfig,
    outdir: PathBuf,
}

fn settings(args: &BuildArgs) -> Result<Settings, CliError> {
    let file = match &args.config {
        Some(p) => read_config(p)?,
        None => BTreeMap::new(),
    };
    for k in file.keys() {
        if !["top", "drc", "sugar", "emit", "outdir", "depth"].contains(&k.as_str()) {
            return Err(CliError::Config(format!("unknown config key `{k}`")));
        }
    }
    let mut config = BuildConfig::default();
    config.top = args.top.clone().or_else(|| file.get("top").cloned());
    if let Some(d) = args.drc.as_ref().or(file.get("drc")) {
        config.drc_mode = DrcMode::parse(d).ok_or_else(|| CliError::Config(format!("unknown DRC mode `{d}`")))?;
    }
    if let Some(s) = file.get("sugar") {
        config.sugar = s
            .parse()
            .map_err(|_| CliError::Config(format!("sugar must be true or false, found `{s}`")))?;
    }
    if args.no_sugar {
        config.sugar = false;
    }
    if let Some(e) = args.emit.as_ref().or(file.get("emit")) {
        config.backend = Backend::parse(e).ok_or_else(|| CliError::Config(format!("unknown backend `{e}`")))?;
    }
    let depth = match std::env::var(DEPTH_ENV) {
        Ok(v) => Some((v, DEPTH_ENV.to_string())),
        Err(_) => file.get("depth").map(|v| (v.clone(), "depth".to_string())),
    };
    if let Some((v, src)) = depth {
        config.max_depth = v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{src} must be a non-negative integer, found `{v}`")))?;
    }
    let outdir = args
        .outdir
        .clone()
        .or_else(|| file.get("outdir").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("build"));
    Ok(Settings { config, outdir })
}

fn build(args: &BuildArgs) -> Result<bool, CliError> {
    let s = settings(args)?;
    if args.inputs.is_empty() {
        return Err(CliError::Config("no input files".into()));
    }
    let sources = load_inputs(&args.inputs)?;
    let c = compile(sources, &s.config);
    if args.verbose {
        for st in &c.stages {
            eprintln!("[stage] {}", st.name());
        }
    }
    for line in c.rendered_diagnostics() {
        eprintln!("{line}");
    }
    if !c.ok() {
        return Ok(false);
    }
    for a in &c.artifacts {
        let path = s.outdir.join(&a.path);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        fs::write(&path, &a.text).map_err(io_err(&path))?;
        if args.verbose {
            eprintln!("[write] {}", path.display());
        }
    }
    Ok(true)
}

fn count_dir(dir: &Path, ext: &str, style: CommentStyle) -> Result<u64, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("{}: not a directory", dir.display())));
    }
    let files: Vec<PathBuf> = if ext == "td" {
        source_files_in(dir)?
    } else {
        let mut v: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(io_err(dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == ext))
            .collect();
        v.sort();
        v
    };
    let mut total = 0;
    for f in files {
        let text = fs::read_to_string(&f).map_err(io_err(&f))?;
        total += loc_count(&text, style) as u64;
    }
    Ok(total)
}

fn loc(args: &LocArgs) -> Result<bool, CliError> {
    let q = count_dir(&args.query, "td", CommentStyle::Tydi)?;
    let f = count_dir(&args.fletcher, "td", CommentStyle::Tydi)?;
    let s = count_dir(&args.stdlib, "td", CommentStyle::Tydi)?;
    let v = count_dir(&args.vhdl, "vhd", CommentStyle::Vhdl)?;
    metrics(q, f, s, v)
}

fn metrics(q: u64, f: u64, s: u64, v: u64) -> Result<bool, CliError> {
    match loc_metrics(q, f, s, v) {
        Ok(r) => {
            println!("{r}");
            Ok(true)
        }
        Err(e) => {
            eprintln!("error: {e}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Build(a) => build(a),
        Command::Loc(a) => loc(a),
        Command::Metrics {
            query,
            fletcher,
            stdlib,
            vhdl,
        } => metrics(*query, *fletcher, *stdlib, *vhdl),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
