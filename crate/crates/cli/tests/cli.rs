use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bohrlab"));
    c.env_remove("BOHRLAB_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(format!("{name}.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Checks the keywords the shipped schemas use: type, required,
/// properties, additionalProperties, enum, items and minimum.
fn validate(v: &Value, s: &Value, path: &str) -> Result<(), String> {
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().map(|x| x.as_str().unwrap()).collect(),
            _ => unreachable!(),
        };
        let ok = types.iter().any(|&t| match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            _ => false,
        });
        if !ok {
            return Err(format!("{path}: {v} is not {types:?}"));
        }
    }
    if let Some(e) = s.get("enum") {
        if !e.as_array().unwrap().contains(v) {
            return Err(format!("{path}: {v} not in {e}"));
        }
    }
    if let (Some(m), Some(x)) = (s.get("minimum"), v.as_f64()) {
        if x < m.as_f64().unwrap() {
            return Err(format!("{path}: {x} below {m}"));
        }
    }
    if let Value::Object(o) = v {
        for r in s.get("required").and_then(Value::as_array).into_iter().flatten() {
            if !o.contains_key(r.as_str().unwrap()) {
                return Err(format!("{path}: missing {r}"));
            }
        }
        let props = s.get("properties").and_then(Value::as_object);
        for (k, x) in o {
            match props.and_then(|p| p.get(k)) {
                Some(ps) => validate(x, ps, &format!("{path}.{k}"))?,
                None if s.get("additionalProperties") == Some(&Value::Bool(false)) => {
                    return Err(format!("{path}: unexpected key {k}"))
                }
                None => {}
            }
        }
    }
    if let (Value::Array(xs), Some(items)) = (v, s.get("items")) {
        for (i, x) in xs.iter().enumerate() {
            validate(x, items, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

fn check(v: &Value, name: &str) {
    if let Err(e) = validate(v, &schema(name), name) {
        panic!("schema {name}: {e}");
    }
}

/// Header line and compact body from a `--json` run.
fn json_out(out: &Output) -> (Value, Value) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let head: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    let body: Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert!(lines.next().is_none());
    check(&head, "header");
    (head, body)
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("roth-run"));
    assert!(run(&["count", "--help"]).status.success());
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["count", "--group", "Z7"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    // randomised commands insist on a seed
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "1\n2\n");
    assert_eq!(run(&["roth-run", "--group", "Z7", "--set", s(&a)]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_one_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "1\n2\n");
    let out = run(&["count", "--group", "Z8", "--set", s(&a)]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    check(&err, "error");
    assert_eq!(err["error"], "EvenOrder");

    let missing = dir.path().join("nope.txt");
    assert_eq!(run(&["count", "--group", "Z9", "--set", s(&missing)]).status.code(), Some(1));
}

#[test]
fn constructed_sets_count_only_trivial_progressions() {
    let dir = tempfile::tempdir().unwrap();
    for (method, n) in [("ternary", "40"), ("behrend", "300")] {
        let f = dir.path().join(format!("{method}.txt"));
        let (_, c) = json_out(&run(&["--json", "construct", "--method", method, "--N", n, "--out", s(&f)]));
        check(&c, "construct");
        assert_eq!(c["certified_free"], true);
        let group = c["group"].as_str().unwrap().to_string();
        for mode in ["fourier", "brute"] {
            let (_, r) = json_out(&run(&["--json", "count", "--group", &group, "--set", s(&f), "--mode", mode]));
            check(&r, "count");
            assert_eq!(r["triple_count"], c["size"], "{method} {mode}");
        }
    }
}

#[test]
fn bitmap_and_line_files_agree() {
    let dir = tempfile::tempdir().unwrap();
    let g = bohrlab_core::Group::parse("Z3xZ5").unwrap();
    let a = bohrlab_core::Subset::from_indices(&g, [0, 4, 7, 11]).unwrap();
    let bm = dir.path().join("a.blab");
    std::fs::write(&bm, bohrlab_core::io::encode_bitmap(&a)).unwrap();
    let ln = write(dir.path(), "a.txt", &bohrlab_core::io::format_set_lines(&a));
    let (_, x) = json_out(&run(&["--json", "count", "--group", "Z3xZ5", "--set", s(&bm)]));
    let (_, y) = json_out(&run(&["--json", "count", "--group", "Z3xZ5", "--set", s(&ln)]));
    assert_eq!(x, y);
    // a bitmap for another group is rejected
    assert_eq!(run(&["count", "--group", "Z15", "--set", s(&bm)]).status.code(), Some(1));
}

#[test]
fn roth_run_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let body: String = (1..=60).filter(|x| x % 3 != 0 && x % 7 != 2).map(|x| format!("{x}\n")).collect();
    let a = write(dir.path(), "a.txt", &body);
    let logs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("run{i}.jsonl"))).collect();
    let mut stdouts = Vec::new();
    for (i, log) in logs.iter().enumerate() {
        let mut c = bin();
        c.args(["roth-run", "--group", "Z121", "--set", s(&a), "--seed", "7", "--log", s(log)]);
        if i == 1 {
            c.env("BOHRLAB_THREADS", "1");
        }
        let out = c.output().unwrap();
        assert!(out.status.success());
        stdouts.push(out.stdout);
    }
    assert_eq!(stdouts[0], stdouts[1]);
    let l0 = std::fs::read(&logs[0]).unwrap();
    assert_eq!(l0, std::fs::read(&logs[1]).unwrap());

    let text = String::from_utf8(l0).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    check(&lines[0], "header");
    assert_eq!(lines[0]["seed"], 7);
    assert!(lines[1..lines.len() - 1].iter().all(|l| l.get("step").is_some()));
    assert!(lines.last().unwrap().get("terminal").is_some());

    let (_, r) = json_out(&run(&["--json", "roth-run", "--group", "Z121", "--set", s(&a), "--seed", "7"]));
    check(&r, "roth-run");
    assert_eq!(r["sound"], true);
    assert!(r["claimed_lower_bound"].as_f64().unwrap() <= r["brute_value"].as_f64().unwrap());
}

#[test]
fn config_files_override_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", "1\n2\n4\n");
    let empty = write(dir.path(), "empty.toml", "");
    let custom = write(dir.path(), "c.toml", "c_main = 0.25\n");
    let unknown = write(dir.path(), "u.toml", "no_such_key = 1\n");
    let args = ["--json", "count", "--group", "Z9", "--set", s(&a)];
    let (plain, _) = json_out(&run(&args));
    let (with_empty, _) = json_out(&bin().args(args).args(["--config", s(&empty)]).output().unwrap());
    assert_eq!(plain, with_empty);
    let (with_custom, _) = json_out(&bin().args(args).args(["--config", s(&custom)]).output().unwrap());
    assert_eq!(with_custom["config"]["c_main"], 0.25);
    let bad = bin().args(args).args(["--config", s(&unknown)]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn spectrum_and_chang_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.txt", &(0..20).map(|x| format!("{}\n", x * x)).collect::<String>());
    let (_, sp) = json_out(&run(&["--json", "spectrum", "--group", "Z101", "--set", s(&a), "--eps", "0.3"]));
    check(&sp, "spectrum");
    assert_eq!(sp["chars"][0], serde_json::json!([0]));
    let (_, ch) = json_out(&run(&["--json", "chang-report", "--group", "Z101", "--set", s(&a), "--eps", "0.3", "--seed", "1"]));
    check(&ch, "chang-report");
    assert!(ch["lambda_size"].as_u64().unwrap() as f64 <= ch["bound"].as_f64().unwrap());

    let b = write(dir.path(), "b.json", r#"{"group":"Z101","freq":[[3]],"width":[1.0]}"#);
    let (_, sb) = json_out(&run(&["--json", "spectrum", "--group", "Z101", "--set", s(&a), "--eps", "0.3", "--bohr", s(&b)]));
    check(&sb, "spectrum");
}

#[test]
fn cs_verify_translates_pass_recheck() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.txt", &(0..401).filter(|x| x % 3 == 0).map(|x| format!("{x}\n")).collect::<String>());
    let a = write(dir.path(), "a.txt", &(0..30).map(|x| format!("{x}\n")).collect::<String>());
    let sset = write(dir.path(), "s.txt", &(-6..=6).map(|x: i64| format!("{x}\n")).collect::<String>());
    for mode in ["exhaustive", "sampled"] {
        let (_, r) = json_out(&run(&[
            "--json", "cs-verify", "--group", "Z401", "--f", s(&f), "--A", s(&a), "--S", s(&sset),
            "--eps", "0.4", "--p", "2", "--mode", mode, "--seed", "5",
        ]));
        check(&r, "cs-verify");
        assert_eq!(r["verified"], r["T_size"], "{mode}");
        assert!(r["T_size"].as_u64().unwrap() >= 1);
        assert!(r["worst_norm"].as_f64().unwrap() <= r["limit"].as_f64().unwrap() + 1e-9);
    }
}

#[test]
fn kk_run_logs_each_step() {
    let dir = tempfile::tempdir().unwrap();
    let b = write(dir.path(), "b.json", r#"{"group":"Z1009","freq":[[5]],"width":[1.2]}"#);
    let a = write(dir.path(), "a.txt", &(0..1009).filter(|x| x % 7 == 1).map(|x| format!("{x}\n")).collect::<String>());
    let ap = write(dir.path(), "ap.txt", &(0..1009).filter(|x| x % 2 == 0).map(|x| format!("{x}\n")).collect::<String>());
    let log = dir.path().join("kk.jsonl");
    let (_, r) = json_out(&run(&[
        "--json", "kk-run", "--group", "Z1009", "--A", s(&a), "--Aprime", s(&ap), "--bohr", s(&b), "--log", s(&log),
    ]));
    check(&r, "kk-run");
    let text = std::fs::read_to_string(&log).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    check(&lines[0], "header");
    for l in &lines[1..] {
        check(l, "kk-step");
    }
    assert_eq!(lines.len() - 1, r["steps"].as_u64().unwrap() as usize + 1);
}

#[test]
fn verify_suite_reports_selected_criteria() {
    let out = run(&["--json", "verify-suite", "--only", "1,3"]);
    let (_, r) = json_out(&out);
    check(&r, "verify-suite");
    assert_eq!(r["total"], 2);
    assert!(r["criteria"].as_array().unwrap().iter().all(|c| c.get("seconds").is_none()));
    let text = run(&["verify-suite", "--only", "1"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("PASS"));
}
