//! End-to-end runs of the binary. Reports for a fixed seed are compared
//! byte for byte with `tests/golden/`; set `UPDATE_GOLDEN=1` to rewrite them.

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use shorted_ops::cli::report::SCHEMA_JSON;

struct Run {
    code: i32,
    stdout: String,
    report: Value,
}

fn run(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_shorted-ops"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    let stdout = String::from_utf8(out.stdout).expect("utf-8 report");
    let report = serde_json::from_str(&stdout).unwrap_or(Value::Null);
    Run {
        code: out.status.code().expect("exit code"),
        stdout,
        report,
    }
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden {}", path.display()));
    assert!(want == actual, "{name} differs from its golden file");
}

fn assert_matrix_close(v: &Value, want: &[&[f64]]) {
    let rows = v.as_array().expect("matrix");
    assert_eq!(rows.len(), want.len());
    for (row, w) in rows.iter().zip(want) {
        for (x, y) in row.as_array().unwrap().iter().zip(*w) {
            let x = x.as_f64().unwrap();
            assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
        }
    }
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

/// Checks the keywords used by the shipped schema: type, const, enum,
/// required, properties, additionalProperties, items, minimum, min/maxLength.
fn validate(schema: &Value, v: &Value, at: &str) -> Result<(), String> {
    let fail = |what: &str| Err(format!("{at}: {what}"));
    if let Some(c) = schema.get("const") {
        if c != v {
            return fail(&format!("expected {c}"));
        }
    }
    if let Some(Value::Array(options)) = schema.get("enum") {
        if !options.contains(v) {
            return fail(&format!("{v} not in enum"));
        }
    }
    if let Some(t) = schema.get("type") {
        let types: Vec<&str> = match t {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let ok = types.iter().any(|t| match *t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "number" => v.is_number(),
            "integer" => v.is_i64() || v.is_u64(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            return fail(&format!("type {t} expected, got {v}"));
        }
    }
    if let (Some(min), Some(n)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if n < min {
            return fail("below minimum");
        }
    }
    if let Some(s) = v.as_str() {
        let len = s.chars().count() as u64;
        if schema.get("minLength").and_then(Value::as_u64).is_some_and(|m| len < m)
            || schema.get("maxLength").and_then(Value::as_u64).is_some_and(|m| len > m)
        {
            return fail("string length out of range");
        }
    }
    if let Value::Object(obj) = v {
        if let Some(Value::Array(req)) = schema.get("required") {
            for k in req.iter().filter_map(Value::as_str) {
                if !obj.contains_key(k) {
                    return fail(&format!("missing {k}"));
                }
            }
        }
        let props = schema.get("properties").and_then(Value::as_object);
        for (k, child) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => validate(s, child, &format!("{at}.{k}"))?,
                None if schema.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return fail(&format!("unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Value::Array(items), Some(s)) = (v, schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            validate(s, item, &format!("{at}[{i}]"))?;
        }
    }
    Ok(())
}

fn assert_valid(r: &Run) {
    let schema: Value = serde_json::from_str(SCHEMA_JSON).unwrap();
    validate(&schema, &r.report, "$").unwrap();
    assert_eq!(r.report["exit_code"], r.code);
}

#[test]
fn pipeline_reproduces_goldens() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let gen = run(d, &["gen", "--dim", "6", "--rank-g", "3", "--rank-x", "4", "--overlap", "1", "--seed", "17", "pair"]);
    assert_eq!(gen.code, 0);
    check_golden("gen.json", &gen.stdout);
    check_golden("G.txt", &std::fs::read_to_string(d.join("pair/G.txt")).unwrap());
    check_golden("spec.json", &std::fs::read_to_string(d.join("pair/spec.json")).unwrap());

    let steps: [(&str, &[&str]); 5] = [
        ("parsum.json", &["parsum", "pair/X.txt", "pair/G.txt"]),
        ("tau.json", &["tau", "pair/G.txt", "pair/X.txt", "--trace"]),
        ("short.json", &["short", "pair/G.txt", "pair/X.txt"]),
        ("verify.json", &["verify", "pair/G.txt", "pair/X.txt"]),
        ("verify_ensemble.json", &["verify", "--dim", "5", "--count", "4", "--seed", "7"]),
    ];
    for (golden, args) in steps {
        let r = run(d, args);
        assert_eq!(r.code, 0, "{args:?}: {}", r.report["error"]);
        assert_valid(&r);
        check_golden(golden, &r.stdout);
        // a second run is byte-identical
        assert_eq!(run(d, args).stdout, r.stdout);
    }
}

#[test]
fn tau_report_carries_subspace_dims() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "G.txt", "2\n1 0\n0 0\n");
    write(d, "X.txt", "2\n3 0\n0 5\n");
    let r = run(d, &["tau", "G.txt", "X.txt"]);
    assert_eq!(r.code, 0);
    let out = &r.report["outputs"];
    assert_matrix_close(&out["tau"], &[&[0.0, 0.0], &[0.0, 5.0]]);
    assert_eq!(out["dim_m"], 1);
    assert_eq!(out["dim_l"], 1);
    assert!(out["orbit_length"].as_u64().unwrap() >= 1);
    assert!(out.get("trace").is_none());
}

#[test]
fn diagonal_parsum_is_the_harmonic_mean() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "X.txt", "2\n2 0\n0 3\n");
    write(d, "G.txt", "2\n2 0\n0 6\n");
    let r = run(d, &["parsum", "X.txt", "G.txt", "--route", "all"]);
    assert_eq!(r.code, 0);
    let v = &r.report["outputs"]["parallel_sum"];
    assert!((v[0][0].as_f64().unwrap() - 1.0).abs() < 1e-14);
    assert!((v[1][1].as_f64().unwrap() - 2.0).abs() < 1e-14);
    for (_, res) in r.report["diagnostics"]["route_residuals"].as_object().unwrap() {
        assert!(res.as_f64().unwrap() < 1e-8);
    }
}

#[test]
fn csv_files_work_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(run(d, &["--format", "csv", "gen", "--dim", "4", "--seed", "3", "p"]).code, 0);
    assert!(d.join("p/G.csv").exists());
    let r = run(d, &["--format", "csv", "short", "p/G.csv", "p/X.csv"]);
    assert_eq!(r.code, 0);
    assert_valid(&r);
}

#[test]
fn input_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "A.txt", "2\n1 0\n0 1\n");
    write(d, "B.txt", "3\n1 0 0\n0 1 0\n0 0 1\n");
    write(d, "N.txt", "2\n1 0\n0 -1\n");
    write(d, "bad.txt", "2\n1 0\n");
    for args in [
        &["parsum", "A.txt", "B.txt"][..],
        &["tau", "A.txt", "N.txt"],
        &["short", "bad.txt", "A.txt"],
        &["short", "A.txt", "missing.txt"],
        &["gen", "--dim", "4", "--rank-g", "3", "--rank-x", "3", "--overlap", "1", "out"],
        &["parsum", "A.txt", "A.txt", "--route", "definite", "--tol-conv=-1"],
        &["verify", "A.txt"],
    ] {
        let r = run(d, args);
        assert_eq!(r.code, 2, "{args:?}");
        assert_valid(&r);
        assert!(r.report["error"].is_string());
    }
    // clap usage errors share the code
    assert_eq!(run(d, &["parsum", "--route", "nope", "A.txt", "A.txt"]).code, 2);
}

#[test]
fn definite_route_on_singular_input_is_skipped_under_all() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "X.txt", "2\n1 0\n0 0\n");
    write(d, "G.txt", "2\n1 0\n0 1\n");
    let r = run(d, &["parsum", "X.txt", "G.txt"]);
    assert_eq!(r.code, 0);
    assert!(r.report["diagnostics"]["skipped_routes"]["definite"].is_string());
    assert_eq!(run(d, &["parsum", "X.txt", "G.txt", "--route", "definite"]).code, 2);
}

#[test]
fn zero_g_passes_the_battery() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "G.txt", "2\n0 0\n0 0\n");
    write(d, "X.txt", "2\n2 1\n1 2\n");
    let r = run(d, &["verify", "G.txt", "X.txt"]);
    assert_eq!(r.code, 0);
    let tau = run(d, &["tau", "G.txt", "X.txt"]);
    assert_matrix_close(&tau.report["outputs"]["tau"], &[&[2.0, 1.0], &[1.0, 2.0]]);
}

#[test]
fn loosened_rank_tolerance_fails_checks() {
    let tmp = tempfile::tempdir().unwrap();
    let r = run(tmp.path(), &["verify", "--dim", "8", "--count", "5", "--seed", "7", "--tol-rank", "0.5"]);
    assert_eq!(r.code, 4);
    assert_valid(&r);
    assert!(r.report["diagnostics"]["summary"]["checks_fail"].as_u64().unwrap() > 0);
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "A.txt", "1\n4\n");
    let r = run(d, &["parsum", "A.txt", "A.txt", "--out", "r.json"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(d.join("r.json")).unwrap()).unwrap();
    assert_matrix_close(&rep["outputs"]["parallel_sum"], &[&[2.0]]);
}
