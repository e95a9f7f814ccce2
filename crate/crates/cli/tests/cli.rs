use std::fs;
use std::path::Path;
use std::process::{Command, Output};

mod common;

fn tydic(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tydic"));
    c.args(args).env_remove("TYDIC_TEMPLATE_DEPTH");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_writes_ir_and_vhdl() {
    let out = tempfile::tempdir().unwrap();
    let src = common::corpus().join("queries/parallelize.td");
    let o = tydic(&["build", path(&src), "--top", "adder_top", "--outdir", path(out.path()), "-v"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let log = stderr(&o);
    for st in ["parse", "resolve", "elaborate", "sugar", "drc", "emit"] {
        assert!(log.contains(&format!("[stage] {st}")), "{log}");
    }
    let ir = fs::read_to_string(out.path().join("adder_top.tir")).unwrap();
    assert!(ir.starts_with("design adder_top\n"));
    assert!(out.path().join("vhdl/adder_top.vhd").is_file());
}

#[test]
fn emit_selects_backend() {
    let out = tempfile::tempdir().unwrap();
    let src = common::corpus().join("queries/parallelize.td");
    let o = tydic(&["build", path(&src), "--top", "adder_top", "--emit", "ir", "--outdir", path(out.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.path().join("adder_top.tir").is_file());
    assert!(!out.path().join("vhdl").exists());
}

#[test]
fn design_errors_exit_1_with_rendered_diagnostics() {
    let out = tempfile::tempdir().unwrap();
    let src = common::corpus().join("bad/e005_clock.td");
    let o = tydic(&["build", path(&src), "--outdir", path(out.path())], &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("e005_clock.td:11:3: error[E005]: "), "{err}");
    assert!(fs::read_dir(out.path()).unwrap().next().is_none());
}

#[test]
fn no_sugar_reports_fan_out() {
    let out = tempfile::tempdir().unwrap();
    let src = common::corpus().join("queries/tpch6.td");
    let o = tydic(&["build", path(&src), "--top", "tpch6", "--no-sugar", "--outdir", path(out.path())], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[E004]"));
}

#[test]
fn io_and_config_errors_exit_2() {
    let o = tydic(&["build", "/nonexistent/x.td"], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = tydic(&["build", "--drc", "loose", "x.td"], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown DRC mode"));
    let o = tydic(&["frobnicate"], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("build.cfg");
    fs::write(&cfg, format!("# build settings\ntop = adder_top\nemit = vhdl\noutdir = {}\n", out.display())).unwrap();
    let src = common::corpus().join("queries/parallelize.td");
    let o = tydic(&["build", path(&src), "--config", path(&cfg), "--emit", "ir"], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("adder_top.tir").is_file());
    assert!(!out.join("vhdl").exists());

    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = tydic(&["build", path(&src), "--config", path(&cfg)], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn depth_from_environment() {
    let out = tempfile::tempdir().unwrap();
    let src = common::corpus().join("queries/parallelize.td");
    let args = ["build", path(&src), "--top", "adder_top", "--outdir", path(out.path())];
    let o = tydic(&args, &[("TYDIC_TEMPLATE_DEPTH", "1")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[E009]"), "{}", stderr(&o));
    let o = tydic(&args, &[("TYDIC_TEMPLATE_DEPTH", "many")]);
    assert_eq!(o.status.code(), Some(2));
    let o = tydic(&args, &[("TYDIC_TEMPLATE_DEPTH", "8")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn metrics_and_loc() {
    let o = tydic(&["metrics", "284", "166", "151", "7547"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("LoC_a    601"));
    assert!(text.contains("R_q      26.57"));
    assert!(text.contains("R_a      12.56"));
    let o = tydic(&["metrics", "0", "166", "151", "7547"], &[]);
    assert_eq!(o.status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let src = common::corpus().join("queries/tpch19.td");
    let o = tydic(&["build", path(&src), "--top", "tpch19", "--outdir", path(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let q = dir.path().join("q");
    fs::create_dir(&q).unwrap();
    fs::copy(&src, q.join("tpch19.td")).unwrap();
    let c = common::corpus();
    let o = tydic(
        &[
            "loc",
            "--query",
            path(&q),
            "--fletcher",
            path(&c.join("fletcher")),
            "--stdlib",
            path(&c.join("stdlib")),
            "--vhdl",
            path(&dir.path().join("vhdl")),
        ],
        &[],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() == 7, "{text}");
}
