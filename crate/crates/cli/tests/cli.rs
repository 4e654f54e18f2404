use std::path::{Path, PathBuf};

use assert_cmd::Command;
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus(file: &str) -> PathBuf {
    root().join("corpus").join(file)
}

fn smartgen() -> Command {
    let mut c = Command::cargo_bin("smartgen").unwrap();
    c.env_remove("SMARTGEN_SEED");
    c
}

fn gen(file: &str, out: &Path, extra: &[&str]) -> std::process::Output {
    smartgen()
        .arg("gen")
        .arg(corpus(file))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Validates the subset of JSON Schema used by the files in `schemas/`.
fn validate(v: &Value, schema: &Value, root: &Value, at: &str) -> Vec<String> {
    let mut errs = Vec::new();
    if let Some(r) = schema.get("$ref").and_then(Value::as_str) {
        let name = r.trim_start_matches("#/$defs/");
        return validate(v, &root["$defs"][name], root, at);
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
            "integer" => v.is_i64() || v.is_u64(),
            "number" => v.is_number(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            _ => false,
        });
        if !ok {
            errs.push(format!("{at}: expected {types:?}, got {v}"));
            return errs;
        }
    }
    if let Some(e) = schema.get("enum").and_then(Value::as_array) {
        if !e.contains(v) {
            errs.push(format!("{at}: {v} not in {e:?}"));
        }
    }
    if let Some(c) = schema.get("const") {
        if c != v {
            errs.push(format!("{at}: {v} != {c}"));
        }
    }
    if let (Some(min), Some(x)) = (schema.get("minimum").and_then(Value::as_f64), v.as_f64()) {
        if x < min {
            errs.push(format!("{at}: {x} < {min}"));
        }
    }
    if let (Some(max), Some(x)) = (schema.get("maximum").and_then(Value::as_f64), v.as_f64()) {
        if x > max {
            errs.push(format!("{at}: {x} > {max}"));
        }
    }
    if let Some(alts) = schema.get("oneOf").and_then(Value::as_array) {
        let n = alts.iter().filter(|s| validate(v, s, root, at).is_empty()).count();
        if n != 1 {
            errs.push(format!("{at}: matches {n} alternatives"));
        }
    }
    if let Some(obj) = v.as_object() {
        let props = schema.get("properties").and_then(Value::as_object);
        for r in schema.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !obj.contains_key(r.as_str().unwrap()) {
                errs.push(format!("{at}: missing {r}"));
            }
        }
        for (k, x) in obj {
            match props.and_then(|p| p.get(k)) {
                Some(s) => errs.extend(validate(x, s, root, &format!("{at}.{k}"))),
                None => match schema.get("additionalProperties") {
                    Some(Value::Bool(false)) => errs.push(format!("{at}: unexpected {k}")),
                    Some(s @ Value::Object(_)) => errs.extend(validate(x, s, root, &format!("{at}.{k}"))),
                    _ => {}
                },
            }
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(s) = schema.get("items") {
            for (i, x) in items.iter().enumerate() {
                errs.extend(validate(x, s, root, &format!("{at}[{i}]")));
            }
        }
        if schema.get("uniqueItems") == Some(&Value::Bool(true)) {
            for (i, x) in items.iter().enumerate() {
                if items[..i].contains(x) {
                    errs.push(format!("{at}: duplicate {x}"));
                }
            }
        }
    }
    errs
}

fn check_schema(doc: &Value, schema_file: &str) {
    let schema = json(&root().join("schemas").join(schema_file));
    let errs = validate(doc, &schema, &schema, "$");
    assert!(errs.is_empty(), "{errs:#?}");
}

#[test]
fn min_example_gives_two_cases_and_full_branch_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let out = gen("min.c", dir.path(), &["--criterion", "branch"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let lines = std::fs::read_to_string(dir.path().join("tests.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["totals"]["branch"]["percent"], 100.0);
    assert_eq!(report["histogram"]["branch"]["100%"], 1);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("Average (s/func)"), "{stdout}");
}

#[test]
fn missing_input_is_an_io_error_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = smartgen()
        .args(["gen", "does/not/exist.c", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(!out_dir.exists());
}

#[test]
fn tiny_state_cap_reports_incomplete() {
    let dir = tempfile::tempdir().unwrap();
    let out = gen("stress.c", dir.path(), &["--state-cap", "4"]);
    assert_eq!(out.status.code(), Some(3));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["totals"]["incomplete"], true);
    assert!(String::from_utf8_lossy(&out.stdout).contains("(incomplete)"));
}

#[test]
fn parse_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.c");
    std::fs::write(&bad, "int f(int x { return x; }").unwrap();
    let out = smartgen().arg("parse").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.c:1:"));
    let out = smartgen().arg("gen").arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn parse_lists_functions_and_warns_on_skips() {
    let out = smartgen().arg("parse").arg(corpus("limits.c")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2 functions"), "{text}");
    assert!(text.contains("1 skipped"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("function pointer"));
}

#[test]
fn cfg_prints_dot() {
    let dir = tempfile::tempdir().unwrap();
    let out = smartgen()
        .arg("cfg")
        .arg(corpus("coverage.c"))
        .args(["--function", "classify", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("digraph"), "{text}");
    assert_eq!(std::fs::read_to_string(dir.path().join("cfg/classify.dot")).unwrap(), text);
}

#[test]
fn runs_are_byte_identical_and_seed_comes_from_env() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(gen("coverage.c", a.path(), &["--seed", "7"]).status.code(), Some(0));
    let out = smartgen()
        .env("SMARTGEN_SEED", "7")
        .arg("gen")
        .arg(corpus("coverage.c"))
        .args(["--jobs", "2", "--out"])
        .arg(b.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["tests.jsonl", "report.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    assert_eq!(json(&b.path().join("report.json"))["seed"], 7);
}

#[test]
fn report_rerenders_the_same_text() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gen("bugs_div0.c", dir.path(), &[]).status.code(), Some(0));
    let before = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    std::fs::remove_file(dir.path().join("report.txt")).unwrap();
    let out = smartgen().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), before);
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), before);
}

#[test]
fn report_without_artifacts_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = smartgen().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn dataflow_lists_and_classifies_pairs() {
    let out = smartgen()
        .args(["dataflow", "--list", "--function", "df_kill"])
        .arg(corpus("dataflow.c"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let listing: Value = serde_json::from_slice(&out.stdout).unwrap();
    let pairs = listing[0]["pairs"].as_array().unwrap();
    assert!(!pairs.is_empty());
    assert!(pairs.iter().all(|p| p["variable"].is_string() && p["kind"].is_string()));

    let dir = tempfile::tempdir().unwrap();
    let out = smartgen()
        .arg("dataflow")
        .arg(corpus("dataflow.c"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_slice(&out.stdout).unwrap();
    let contra = rows
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["function"] == "df_contra")
        .unwrap();
    let classes: Vec<&str> = contra["pairs"].as_array().unwrap().iter().map(|p| p["class"].as_str().unwrap()).collect();
    assert!(classes.contains(&"covered"));
    assert!(classes.iter().any(|c| *c != "covered"), "{classes:?}");
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["criterion"], "defuse");
    check_schema(&report, "report.schema.json");
}

#[test]
fn optional_artifacts_are_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let out = gen("bugs_fixed.c", dir.path(), &["--emit", "jsonl,harness,dot,smt2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("harness/poke.c").exists());
    assert!(dir.path().join("cfg/poke.dot").exists());
    assert!(dir.path().join("smt2").read_dir().unwrap().count() > 0);
    assert!(dir.path().join("tests.jsonl").exists());
    assert!(!dir.path().join("report.json").exists());
    let harness = std::fs::read_to_string(dir.path().join("harness/peek_reg.c")).unwrap();
    assert!(harness.contains("/* expect FixedMemoryAddress"), "{harness}");
}

#[test]
fn zero_budgets_are_rejected() {
    for flag in ["--state-cap", "--unroll", "--solver-evals", "--jobs", "--pair-seconds"] {
        let dir = tempfile::tempdir().unwrap();
        let out = gen("min.c", dir.path(), &[flag, "0"]);
        assert_eq!(out.status.code(), Some(2), "{flag}");
        assert!(!dir.path().join("tests.jsonl").exists(), "{flag}");
    }
}

#[test]
fn unknown_function_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gen("min.c", dir.path(), &["--function", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
}

#[test]
fn reports_and_suites_match_the_schemas() {
    for (file, criterion) in [
        ("coverage.c", "mcdc"),
        ("bugs_oob.c", "branch"),
        ("bugs_fixed.c", "statement"),
        ("bugs_div0.c", "defuse"),
        ("limits.c", "branch"),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let out = gen(file, dir.path(), &["--criterion", criterion]);
        assert_eq!(out.status.code(), Some(0), "{file}: {}", String::from_utf8_lossy(&out.stderr));
        check_schema(&json(&dir.path().join("report.json")), "report.schema.json");
        for line in std::fs::read_to_string(dir.path().join("tests.jsonl")).unwrap().lines() {
            check_schema(&serde_json::from_str(line).unwrap(), "testcase.schema.json");
        }
    }
}

#[test]
fn schema_validator_rejects_bad_reports() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gen("min.c", dir.path(), &[]).status.code(), Some(0));
    let schema = json(&root().join("schemas/report.schema.json"));
    let mut report = json(&dir.path().join("report.json"));
    report["totals"]["branch"]["percent"] = Value::from(140.0);
    report["functions"][0]["extra"] = Value::from(1);
    let errs = validate(&report, &schema, &schema, "$");
    assert_eq!(errs.len(), 2, "{errs:?}");
}
