use std::path::PathBuf;
use std::process::Command;

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name)
}

fn fjeucs(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_fjeucs")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned() + &String::from_utf8_lossy(&out.stderr),
    )
}

fn check(program: &str, policy: &str, entry: &str, extra: &[&str]) -> (i32, String) {
    let p = corpus(program);
    let pol = corpus(policy);
    let mut args = vec!["check", p.to_str().unwrap(), "--policy", pol.to_str().unwrap(), "--entry", entry];
    args.extend_from_slice(extra);
    fjeucs(&args)
}

#[test]
fn compliant_exits_zero() {
    let (code, out) = check("ex1.fj", "taint.policy", "C.main", &["--k", "1"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("compliant"));
}

#[test]
fn violation_exits_one_and_cites_the_sink() {
    let (code, out) = check("ex1-mutated.fj", "taint.policy", "C.main", &["--k", "1"]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("11:12: putString"), "{out}");
}

#[test]
fn constant_context_policy_is_selectable() {
    let (code, _) = check("ex1.fj", "taint.policy", "C.main", &["--context-policy", "constant"]);
    assert_eq!(code, 1);
    let (code, _) = check("ex1.fj", "taint.policy", "C.main", &["--context-policy", "bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn missing_policy_file_exits_two() {
    let p = corpus("ex1.fj");
    let (code, out) = fjeucs(&["check", p.to_str().unwrap(), "--policy", "/nonexistent.policy", "--entry", "C.main"]);
    assert_eq!(code, 2);
    assert!(out.contains("nonexistent.policy"));
}

#[test]
fn bad_usage_exits_two() {
    assert_eq!(fjeucs(&["check"]).0, 2);
    assert_eq!(fjeucs(&["frobnicate"]).0, 2);
}

#[test]
fn syntax_error_exits_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("bad.fj");
    std::fs::write(&f, "class A {\n  String m() { return ; }\n}\n").unwrap();
    let pol = corpus("taint.policy");
    let (code, out) = fjeucs(&["check", f.to_str().unwrap(), "--policy", pol.to_str().unwrap(), "--entry", "A.m"]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("bad.fj:2:"), "{out}");
}

#[test]
fn json_report_schema() {
    let (code, out) = check("ex2.fj", "taint.policy", "Servlet.doGet", &["--json"]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"], "violation");
    assert_eq!(v["witnesses"], serde_json::json!(["T"]));
    assert!(v["iterations"].as_u64().unwrap() >= 2);
    assert!(v["summaries"].as_array().unwrap().len() > 1);
    for s in v["summaries"].as_array().unwrap() {
        for key in ["method", "context", "receiver", "args", "result", "effect"] {
            assert!(s.get(key).is_some(), "{key}");
        }
    }
    let b = &v["blame"][0];
    assert_eq!(b["builtin"], "putString");
    assert!(b["position"]["line"].as_u64().is_some());
}

#[test]
fn dumped_table_audits_clean_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("table.txt");
    let (code, _) = check("ex1.fj", "taint.policy", "C.main", &["--dump-table", t.to_str().unwrap()]);
    assert_eq!(code, 0);
    let p = corpus("ex1.fj");
    let pol = corpus("taint.policy");
    let base = ["audit-table", t.to_str().unwrap(), "--program", p.to_str().unwrap(), "--policy", pol.to_str().unwrap()];
    assert_eq!(fjeucs(&base).0, 0);
    let mut with_entry = base.to_vec();
    with_entry.extend_from_slice(&["--entry", "C.main"]);
    assert_eq!(fjeucs(&with_entry).0, 0);

    let text = std::fs::read_to_string(&t).unwrap();
    let broken: String = text.lines().filter(|l| !l.starts_with("relevant Object")).map(|l| format!("{l}\n")).collect();
    std::fs::write(&t, broken).unwrap();
    let (code, out) = fjeucs(&base);
    assert_eq!(code, 1);
    assert!(out.contains("relevance"), "{out}");
}

#[test]
fn run_reports_trace_class() {
    let p = corpus("sanitize-ok.fj");
    let pol = corpus("sanitize.policy");
    let (code, out) = fjeucs(&["run", p.to_str().unwrap(), "--policy", pol.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0, "{out}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["outcome"], "done");
    assert_eq!(v["allowed"], true);
}

#[test]
fn dump_monoid_json() {
    let pol = corpus("taint-dfa.policy");
    let (code, out) = fjeucs(&["dump-monoid", "--policy", pol.to_str().unwrap(), "--json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let n = v["elements"].as_array().unwrap().len();
    assert_eq!(v["table"].as_array().unwrap().len(), n);
}

#[test]
fn fuzz_writes_junit() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("junit.xml");
    let pol = corpus("sanitize.policy");
    let (code, out) = fjeucs(&["fuzz", "--policy", pol.to_str().unwrap(), "--count", "10", "--junit", j.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    let xml = std::fs::read_to_string(&j).unwrap();
    assert!(xml.contains("tests=\"30\"") && xml.contains("failures=\"0\""));
}

#[test]
fn corpus_runner() {
    let dir = corpus("");
    let (code, out) = fjeucs(&["corpus", dir.to_str().unwrap()]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("0 failed"));

    let empty = tempfile::tempdir().unwrap();
    let (code, out) = fjeucs(&["corpus", empty.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("0 cases"));

    std::fs::write(empty.path().join("MANIFEST"), "ex1.fj taint.policy C.main PERHAPS\n").unwrap();
    assert_eq!(fjeucs(&["corpus", empty.path().to_str().unwrap()]).0, 2);

    std::fs::copy(corpus("ex1.fj"), empty.path().join("ex1.fj")).unwrap();
    std::fs::copy(corpus("taint.policy"), empty.path().join("taint.policy")).unwrap();
    std::fs::write(empty.path().join("MANIFEST"), "ex1.fj taint.policy C.main BAD k=1\n").unwrap();
    let (code, out) = fjeucs(&["corpus", empty.path().to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    assert!(out.contains("FAIL"));
}
