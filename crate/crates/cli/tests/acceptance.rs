//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use tydi_core::design::Intrinsic;
use tydi_core::diag::SourceSpan;
use tydi_core::eval::{ceil_log2_exact, ceil_log2_float, eval, Bindings, EvalResult};
use tydi_core::ir::{emit_ir, read_ir};
use tydi_core::loc::loc_metrics;
use tydi_core::syntax::parse_expr;
use tydi_core::types::bit_width;
use tydi_core::{sugar, vhdl, Code, FileId, LogicalType, Owner, Value};

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---- 1: type algebra ----

fn leaf() -> impl Strategy<Value = LogicalType> {
    prop_oneof![Just(LogicalType::Null), (1u64..=64).prop_map(LogicalType::Bit)]
}

fn fields(inner: impl Strategy<Value = LogicalType>) -> impl Strategy<Value = Vec<(String, LogicalType)>> {
    prop::collection::vec(inner, 1..5).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, t)| (format!("f{i}"), t))
            .collect()
    })
}

fn type_tree() -> impl Strategy<Value = LogicalType> {
    leaf().prop_recursive(5, 48, 4, |inner| {
        prop_oneof![
            fields(inner.clone()).prop_map(LogicalType::Group),
            fields(inner.clone()).prop_map(LogicalType::Union),
            inner.clone().prop_map(|t| LogicalType::named("T", t)),
            inner.prop_map(LogicalType::stream),
        ]
    })
}

/// Brute-force width: `None` when a stream sits inside the element.
fn width_oracle(t: &LogicalType) -> Option<u128> {
    match t {
        LogicalType::Null => Some(0),
        LogicalType::Bit(n) => Some(*n as u128),
        LogicalType::Group(fs) => {
            let mut total = 0;
            for (_, f) in fs {
                total += width_oracle(f)?;
            }
            Some(total)
        }
        LogicalType::Union(fs) => {
            let mut best = 0;
            for (_, f) in fs {
                best = best.max(width_oracle(f)?);
            }
            Some(best)
        }
        LogicalType::Stream(_) => None,
        LogicalType::Named(n) => width_oracle(&n.ty),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cases = 10_000;
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    runner
        .run(&type_tree(), |t| {
            let got = bit_width(&t).ok().map(u128::from);
            prop_assert_eq!(got, width_oracle(&t), "type {}", t);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    Ok(format!("{cases} random trees match the oracle in {took:.2?}"))
}

// ---- 2: expression math ----

struct One(&'static str, Value);

impl Bindings for One {
    fn lookup_value(&mut self, name: &str, span: SourceSpan) -> EvalResult<Value> {
        if name == self.0 {
            Ok(self.1.clone())
        } else {
            Err(tydi_core::Diagnostic::error(Code::E002, name, span).into())
        }
    }
}

/// Bit length of `n - 1`, which is `ceil(log2(n))` for `n >= 1`.
fn bitlen_oracle(n: u128) -> u64 {
    (128 - (n - 1).leading_zeros()) as u64
}

fn criterion_2() -> Outcome {
    let e = parse_expr("ceil(log2(10^15-1))", FileId(0)).map_err(|d| d.message)?;
    let v = eval(&e, &mut One("", Value::int(0))).map_err(|f| format!("{f:?}"))?;
    let want = bitlen_oracle(10u128.pow(15) - 1);
    ensure(want == 50 && v == Value::int(50), || format!("got {v:?}, oracle {want}"))?;

    let e = parse_expr("ceil(log2(n))", FileId(0)).map_err(|d| d.message)?;
    let top = 1u64 << 20;
    for n in 2..=top {
        let exact = eval(&e, &mut One("n", Value::int(n))).map_err(|f| format!("{f:?}"))?;
        let float = eval(&e, &mut One("n", Value::Float(n as f64))).map_err(|f| format!("{f:?}"))?;
        let oracle = bitlen_oracle(n as u128);
        let lib = ceil_log2_exact(&n.into()).unwrap();
        let f = ceil_log2_float(n as f64);
        ensure(
            exact == Value::int(oracle) && float == Value::int(oracle) && lib == oracle && f == oracle as f64,
            || format!("n = {n}: exact {exact:?}, float {float:?}, oracle {oracle}"),
        )?;
    }
    Ok(format!("ceil(log2(10^15-1)) = 50; exact and float agree for n in [2, {top}]"))
}

// ---- 3: parallelize elaboration ----

fn criterion_3() -> Outcome {
    let c = compile_file("queries/parallelize.td", &config(Some("adder_top"), true));
    ensure(c.ok(), || c.rendered_diagnostics().join("\n"))?;
    let d = c.design.as_ref().unwrap();
    let imp = d
        .impls
        .values()
        .find(|i| i.origin.decl == "parallelize_i" && i.origin.args.last().map(String::as_str) == Some("8"))
        .ok_or("no parallelize_i<.., 8> instance")?;
    let by_decl = |decl: &str| {
        imp.instances
            .iter()
            .filter(|i| d.impls[&i.implementation].origin.decl == decl)
            .count()
    };
    let pu = imp.instances.iter().filter(|i| i.name == "pu").count();
    let is_pu = |o: &Owner| matches!(o, Owner::Instance { name, .. } if name == "pu");
    let generated = imp
        .connections
        .iter()
        .filter(|c| is_pu(&c.src.owner) || is_pu(&c.dst.owner))
        .count();
    let got = (by_decl("demux_i"), by_decl("mux_i"), pu, generated);
    ensure(got == (1, 1, 8, 16), || format!("(demux, mux, pu, for-connections) = {got:?}"))?;
    Ok("1 demux, 1 mux, 8 pu, 16 for-generated connections".into())
}

// ---- 4: sugaring ----

fn fan_out(k: u64) -> String {
    format!(
        "type Byte = Stream(Bit(8));
streamlet src_s {{ out: Byte out, }}
streamlet dst_s {{ in: Byte in, }}
external impl src_i of src_s {{}}
external impl dst_i of dst_s {{}}
streamlet top_s {{ }}
impl top of top_s {{
  instance a(src_i),
  instance b(dst_i) [{k}],
  for i in 0-1->{k} {{ a.out => b[i].in, }}
}}
"
    )
}

fn criterion_4() -> Outcome {
    for k in 2..=4u64 {
        let text = fan_out(k);
        let c = compile_text(&text, &config(Some("top"), true));
        ensure(c.ok(), || format!("k = {k}: {}", c.rendered_diagnostics().join("; ")))?;
        let d = c.design.unwrap();
        let top = &d.impls["top"];
        let dups: Vec<_> = top
            .instances
            .iter()
            .filter_map(|i| d.impls[&i.implementation].intrinsic)
            .collect();
        ensure(dups == vec![Intrinsic::Duplicator { outputs: k }], || {
            format!("k = {k}: inserted {dups:?}")
        })?;
        let mut again = d.clone();
        sugar::sugar(&mut again);
        ensure(emit_ir(&again) == emit_ir(&d), || format!("k = {k}: sugaring twice changed the IR"))?;

        let raw = compile_text(&text, &config(Some("top"), false));
        let e004: Vec<_> = raw.diagnostics.iter().filter(|d| d.code == Code::E004).collect();
        let want = format!("used {k} times");
        ensure(
            raw.diagnostics.len() == 1 && e004.len() == 1 && e004[0].message.contains(&want),
            || format!("k = {k} without sugar: {}", raw.rendered_diagnostics().join("; ")),
        )?;
    }
    Ok("duplicator<k> inserted for k = 2, 3, 4; E004 without sugar; idempotent".into())
}

// ---- 5: DRC negatives ----

fn criterion_5() -> Outcome {
    let bad = bad_designs();
    ensure(bad.len() >= 12, || format!("only {} bad designs", bad.len()))?;
    let mut seen = BTreeMap::new();
    for b in &bad {
        let name = b.file.file_name().unwrap().to_string_lossy().to_string();
        let sources = tydi_core::load_inputs(std::slice::from_ref(&b.file)).map_err(|e| e.to_string())?;
        let c = tydi_core::compile(sources, &config(None, true));
        ensure(c.diagnostics.len() == 1, || {
            format!("{name}: expected one diagnostic, got {:?}", c.rendered_diagnostics())
        })?;
        let d = &c.diagnostics[0];
        let at = d.span.map(|s| (s.line, s.column));
        ensure(d.code == b.code && at == Some((b.line, b.column)), || {
            format!(
                "{name}: expected {} at {}:{}, got {}",
                b.code,
                b.line,
                b.column,
                c.rendered_diagnostics()[0]
            )
        })?;
        *seen.entry(b.code).or_insert(0) += 1;
    }
    let required = [
        Code::E003,
        Code::E004,
        Code::E005,
        Code::E006,
        Code::E007,
        Code::E008,
        Code::E009,
        Code::E010,
        Code::E011,
    ];
    let missing: Vec<_> = required.iter().filter(|c| !seen.contains_key(c)).collect();
    ensure(missing.is_empty(), || format!("no design triggers {missing:?}"))?;
    let e004 = bad
        .iter()
        .filter(|b| b.code == Code::E004)
        .map(|b| b.file.file_name().unwrap().to_string_lossy().to_string())
        .collect::<Vec<_>>();
    ensure(e004.iter().any(|f| f.contains("unused")) && e004.iter().any(|f| f.contains("twice")), || {
        format!("E004 cases: {e004:?}")
    })?;
    Ok(format!("{} bad designs, each one diagnostic with the expected code and span", bad.len()))
}

// ---- 6: LoC metrics ----

fn criterion_6() -> Outcome {
    // (LoC_q, LoC_vhdl, published R_q, R_a, published LoC_a)
    let rows: [(u64, u64, &str, &str, u64); 6] = [
        (402, 7547, "18.77", "10.50", 709),
        (284, 7547, "26.57", "12.56", 601),
        (166, 6291, "37.90", "13.02", 483),
        (197, 6992, "35.49", "13.60", 514),
        (108, 4586, "42.46", "10.79", 425),
        (297, 11734, "39.51", "19.11", 614),
    ];
    let (f, s) = (166, 151);
    let hundredths = |want: &str| {
        let (i, frac) = want.split_once('.').unwrap();
        i.parse::<i64>().unwrap() * 100 + frac.parse::<i64>().unwrap()
    };
    let mut total_mismatch = Vec::new();
    for (q, v, rq, ra, published_total) in rows {
        let r = loc_metrics(q, f, s, v).map_err(|e| e.to_string())?;
        let close = |got: u64, want: &str| (got as i64 - hundredths(want)).abs() <= 1;
        ensure(close(r.r_q.hundredths, rq) && close(r.r_a.hundredths, ra), || {
            format!("({q},{f},{s},{v}) gave R_q {} R_a {}, published {rq} {ra}", r.r_q, r.r_a)
        })?;
        if r.total != published_total {
            total_mismatch.push(format!("{q}+{f}+{s} = {} (printed {published_total})", r.total));
        }
    }
    ensure(total_mismatch.len() <= 1, || format!("LoC_a differs: {total_mismatch:?}"))?;
    Ok(format!(
        "all 6 published ratio pairs reproduced within 0.01; printed LoC_a typo: {}",
        total_mismatch.join(", ")
    ))
}

// ---- 7, 8, 9, 10: corpus ----

fn outputs() -> Result<Vec<(String, Vec<tydi_core::pipeline::Artifact>)>, String> {
    GOOD.iter()
        .map(|g| {
            let c = compile_good(g);
            ensure(c.ok(), || format!("{}: {}", g.file, c.rendered_diagnostics().join("; ")))?;
            Ok((g.file.to_string(), c.artifacts))
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let a = outputs()?;
    let b = outputs()?;
    ensure(a == b, || "outputs differ between runs".into())?;
    let files: usize = a.iter().map(|(_, x)| x.len()).sum();
    Ok(format!("{} designs, {files} files byte-identical across two runs", a.len()))
}

fn criterion_8() -> Outcome {
    let mut n = 0;
    for g in GOOD {
        let c = compile_good(g);
        let d = c.design.ok_or(format!("{}: no design", g.file))?;
        let back = read_ir(&emit_ir(&d), FileId(0)).map_err(|e| format!("{}: {}", g.file, e.message))?;
        ensure(back.structurally_eq(&d), || format!("{}: round trip differs", g.file))?;
        n += 1;
    }
    Ok(format!("{n} designs round-trip"))
}

/// Widths of `<name> : <mode> std_logic_vector(H downto 0)` declarations in an entity.
fn declared_widths(text: &str) -> BTreeMap<String, u64> {
    let entity = text.split("end entity").next().unwrap_or_default();
    entity
        .lines()
        .filter_map(|l| {
            let (name, rest) = l.trim().split_once(" : ")?;
            let hi = rest.split("std_logic_vector(").nth(1)?.split(" downto").next()?;
            Some((name.to_string(), hi.trim().parse::<u64>().ok()? + 1))
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let parser = vhdl_lang::VHDLParser::new(vhdl_lang::VHDLStandard::VHDL2008);
    let (mut files, mut ports) = (0, 0);
    for g in GOOD {
        let c = compile_good(g);
        let d = c.design.ok_or(format!("{}: no design", g.file))?;
        let emitted = vhdl::emit_vhdl(&d);
        for f in &emitted {
            let source = vhdl_lang::Source::inline(Path::new(&f.name), &f.text);
            let mut diags: Vec<vhdl_lang::Diagnostic> = Vec::new();
            parser.parse_design_source(&source, &mut diags);
            ensure(diags.is_empty(), || {
                format!("{}/{}: {}", g.file, f.name, diags.iter().map(|d| d.message.clone()).collect::<Vec<_>>().join("; "))
            })?;
            files += 1;
        }
        let layout = vhdl::layout(&d);
        for imp in d.impls.values() {
            let entity = &layout.entities[&imp.name];
            let text = &emitted
                .iter()
                .find(|f| f.name == format!("{entity}.vhd"))
                .ok_or(format!("no file for {entity}"))?
                .text;
            let widths = declared_widths(text);
            let streamlet = d.streamlet_of(imp);
            for (p, sig) in streamlet.ports.iter().zip(&layout.ports[&imp.name]) {
                let s = p.stream();
                let lanes = {
                    let t = &s.throughput;
                    let q = t.numer() / t.denom() + if (t.numer() % t.denom()) != 0.into() { 1 } else { 0 };
                    u64::try_from(q).unwrap().max(1)
                };
                let want = width_oracle(&s.element).ok_or("stream in element")? as u64 * lanes;
                let got = sig.data.as_ref().map(|s| widths.get(&s.name).copied().unwrap_or(0)).unwrap_or(0);
                ensure(got == want, || {
                    format!("{entity}.{}: emitted width {got}, expected {want}", p.display_name())
                })?;
                ports += 1;
            }
        }
    }
    Ok(format!("{files} files parse cleanly; {ports} port widths match"))
}

fn criterion_10() -> Outcome {
    let mut notes = Vec::new();
    for q in QUERIES {
        let rel = format!("queries/{q}.td");
        let c = compile_file(&rel, &config(Some(q), true));
        ensure(c.ok(), || format!("{q}: {}", c.rendered_diagnostics().join("; ")))?;
        let vhdl_lines: usize = c
            .artifacts
            .iter()
            .filter(|a| a.path.ends_with(".vhd"))
            .map(|a| a.text.lines().count())
            .sum();
        ensure(vhdl_lines > 0, || format!("{q}: no VHDL"))?;

        let text = std::fs::read_to_string(corpus().join(&rel)).map_err(|e| e.to_string())?;
        let uses = |needle: &str| text.contains(needle);
        ensure(uses("[string] "), || format!("{q}: no string array"))?;
        ensure(uses("for "), || format!("{q}: no for-expansion"))?;
        ensure(text.contains(": impl of ") && text.contains("impl "), || format!("{q}: no impl-of argument"))?;

        let d = c.design.unwrap();
        let decls: Vec<&str> = d.impls.values().map(|i| i.origin.decl.as_str()).collect();
        let has = |names: &[&str]| names.iter().any(|n| decls.contains(n));
        ensure(has(&["filter_i"]), || format!("{q}: no filter"))?;
        ensure(has(&["string_eq_i"]) && has(&["or_gate_i", "and_gate_i"]), || {
            format!("{q}: no comparator fan-in")
        })?;
        ensure(has(&["multiplier_i", "subtractor_i", "adder_i", "sum_i", "count_i"]), || {
            format!("{q}: no arithmetic")
        })?;
        notes.push(format!("{q} {vhdl_lines} VHDL lines"));
    }
    Ok(notes.join(", "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("type algebra", criterion_1),
        ("expression math", criterion_2),
        ("parallelize elaboration", criterion_3),
        ("sugaring", criterion_4),
        ("DRC negatives", criterion_5),
        ("LoC metrics", criterion_6),
        ("determinism", criterion_7),
        ("IR round-trip", criterion_8),
        ("VHDL validity", criterion_9),
        ("end-to-end corpus", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    let took = start.elapsed();
    let limit = Duration::from_secs(60);
    println!("suite runtime {took:.2?} (limit {limit:?})");
    if failed == 0 && took < limit {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
