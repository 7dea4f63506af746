use std::path::PathBuf;
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(crate_dir().join("include/fjeucs.h")).unwrap();
    let src = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exported: Vec<&str> = src
        .split("extern \"C\" fn ")
        .skip(1)
        .map(|s| s.split('(').next().unwrap())
        .collect();
    assert!(exported.len() >= 12);
    for f in exported {
        assert!(h.contains(&format!(" {f}(")) || h.contains(&format!("*{f}(")), "{f} missing from header");
    }
    for t in ["typedef struct FjProgram FjProgram;", "typedef struct FjPolicy FjPolicy;", "typedef struct FjReport FjReport;", "FJ_STATUS_VIOLATION = 1"] {
        assert!(h.contains(t), "{t}");
    }
}

/// Compiles a small C client against the header and static library.
#[test]
fn c_client_links_and_runs() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("no C compiler; skipping");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let target = exe.parent().unwrap().parent().unwrap();
    let lib = target.join("libfjeucs_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("client.c");
    std::fs::write(
        &c,
        r#"
#include <stdio.h>
#include <string.h>
#include "fjeucs.h"

int main(void) {
    const char *pol_src =
        "[alphabet]\nuser ok\n[monoid]\nelements U T\nneutral U\n"
        "U * U = U\nU * T = T\nT * U = T\nT * T = T\n"
        "hom user = T\nhom ok = U\n[allowed]\nU\n[lit2word]\ndefault = ok\n"
        "[builtins]\nbuiltin getString/0\n  sem fresh ; user ; ε\n"
        "builtin putString/1\n  sem \"\" ; ε ; class($1)\n";
    FjProgram *prog = NULL;
    FjPolicy *pol = NULL;
    FjReport *rep = NULL;
    if (fj_parse_policy(pol_src, &pol) != FJ_STATUS_OK) { printf("policy: %s\n", fj_last_error()); return 10; }
    if (fj_parse_program("main { putString(getString()); }", &prog) != FJ_STATUS_OK) return 11;
    FjStatus s = fj_check(prog, pol, "$Main.main", "kcfa", 1, &rep);
    if (s != FJ_STATUS_VIOLATION) return 12;
    if (fj_report_is_compliant(rep) != 0) return 13;
    if (strstr(fj_report_json(rep), "violation") == NULL) return 14;
    fj_report_free(rep);
    fj_program_free(prog);
    fj_policy_free(pol);
    printf("ok\n");
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("client");
    let st = Command::new("cc")
        .arg(&c)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{:?} {}", out.status, String::from_utf8_lossy(&out.stdout));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
