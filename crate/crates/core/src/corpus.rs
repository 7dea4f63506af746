//! Bundled case directories described by a `MANIFEST` file.
//!
//! ```text
//! # case          policy         entry    expected  options
//! ex1.fj          taint.policy   C.main   OK        k=1
//! ex1.fj          taint.policy   C.main   BAD       context=constant
//! ```

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::contexts;
use crate::parser::{parse_policy, parse_program};
use crate::report::check_program;

pub const MANIFEST: &str = "MANIFEST";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Case {
    pub program: String,
    pub policy: String,
    pub entry: String,
    pub expect_ok: bool,
    pub k: usize,
    pub context: String,
}

impl Case {
    pub fn name(&self) -> String {
        let mut s = format!("{} {} {}", self.program, self.policy, self.entry);
        if self.context == "kcfa" {
            s.push_str(&format!(" k={}", self.k));
        } else {
            s.push_str(&format!(" context={}", self.context));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}:{line}: {message}")]
    Manifest {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{0}: {1}")]
    Io(String, String),
}

pub fn parse_manifest(text: &str, path: &str) -> Result<Vec<Case>, CorpusError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let err = |message: String| CorpusError::Manifest {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() < 4 {
            return Err(err("expected `case policy entry OK|BAD [options]`".into()));
        }
        let expect_ok = match cols[3] {
            "OK" => true,
            "BAD" => false,
            other => return Err(err(format!("expected OK or BAD, found `{other}`"))),
        };
        let mut case = Case {
            program: cols[0].to_string(),
            policy: cols[1].to_string(),
            entry: cols[2].to_string(),
            expect_ok,
            k: 1,
            context: "kcfa".into(),
        };
        for opt in &cols[4..] {
            match opt.split_once('=') {
                Some(("k", v)) => {
                    case.k = v.parse().map_err(|_| err(format!("bad k `{v}`")))?;
                }
                Some(("context", v)) => {
                    if contexts::by_name(v, 0).is_none() {
                        return Err(err(format!("unknown context policy `{v}`")));
                    }
                    case.context = v.to_string();
                }
                _ => return Err(err(format!("unknown option `{opt}`"))),
            }
        }
        out.push(case);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseResult {
    pub case: Case,
    /// `OK`, `BAD` or an error message.
    pub actual: String,
    pub passed: bool,
    pub elapsed_ms: f64,
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn run_case(dir: &Path, case: &Case) -> CaseResult {
    let start = Instant::now();
    let actual = (|| -> Result<bool, String> {
        let p = parse_program(&read(&dir.join(&case.program))?).map_err(|e| e.to_string())?;
        let pol = parse_policy(&read(&dir.join(&case.policy))?).map_err(|e| e.to_string())?;
        let ctx = contexts::by_name(&case.context, case.k).ok_or("unknown context policy")?;
        let (rep, _) = check_program(&p, &pol, ctx.as_ref(), &case.entry).map_err(|e| e.to_string())?;
        if !rep.audit.is_empty() {
            return Err(format!("audit failed: {}", rep.audit[0]));
        }
        Ok(rep.is_compliant())
    })();
    let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
    let (actual, passed) = match actual {
        Ok(ok) => ((if ok { "OK" } else { "BAD" }).to_string(), ok == case.expect_ok),
        Err(e) => (format!("error: {e}"), false),
    };
    CaseResult {
        case: case.clone(),
        actual,
        passed,
        elapsed_ms,
    }
}

/// Runs every case of `dir/MANIFEST` in parallel. A directory without a
/// manifest has no cases.
pub fn run_corpus(dir: &Path) -> Result<Vec<CaseResult>, CorpusError> {
    let path: PathBuf = dir.join(MANIFEST);
    if !dir.is_dir() {
        return Err(CorpusError::Io(dir.display().to_string(), "not a directory".into()));
    }
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CorpusError::Io(path.display().to_string(), e.to_string()))?;
    let cases = parse_manifest(&text, &path.display().to_string())?;
    Ok(cases.par_iter().map(|c| run_case(dir, c)).collect())
}

/// The corpus shipped with the crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_options() {
        let cs = parse_manifest("a.fj p.policy C.m BAD context=constant\nb.fj p.policy C.m OK k=2 # x\n", "M").unwrap();
        assert_eq!(cs.len(), 2);
        assert_eq!(cs[0].context, "constant");
        assert!(!cs[0].expect_ok);
        assert_eq!(cs[1].k, 2);
    }

    #[test]
    fn corrupted_manifest_is_rejected() {
        for bad in ["a.fj p C.m MAYBE", "a.fj p", "a.fj p C.m OK k=x", "a.fj p C.m OK depth=2"] {
            assert!(matches!(parse_manifest(bad, "M"), Err(CorpusError::Manifest { line: 1, .. })), "{bad}");
        }
    }

    #[test]
    fn bundled_corpus_matches() {
        let rs = run_corpus(&bundled_dir()).unwrap();
        assert!(!rs.is_empty());
        for r in &rs {
            assert!(r.passed, "{}: expected {}, got {}", r.case.name(), if r.case.expect_ok { "OK" } else { "BAD" }, r.actual);
        }
    }
}
