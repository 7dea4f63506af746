//! Analysis reports in JSON and text form.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::checker::{audit, Diagnostic};
use crate::contexts::ContextPolicy;
use crate::infer::{blame, verdict, Analysis, Analyzer, Entry, InferError, SemiTable, Verdict};
use crate::lattice::{RefinedType, Renderer};
use crate::policy::Policy;
use crate::syntax::{Label, Program};

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Position {
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlameSite {
    pub position: Option<Position>,
    pub builtin: String,
    pub prefix: String,
    pub emitted: String,
    pub result: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub method: String,
    pub context: String,
    pub receiver: String,
    pub args: Vec<String>,
    pub result: String,
    pub effect: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WarningReport {
    pub position: Option<Position>,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub entry: String,
    pub context_policy: String,
    pub verdict: &'static str,
    pub witnesses: Vec<String>,
    pub effect: Vec<String>,
    pub result_type: String,
    pub blame: Vec<BlameSite>,
    pub iterations: usize,
    pub entries: usize,
    pub summaries: Vec<Summary>,
    pub warnings: Vec<WarningReport>,
    /// Audit findings on the final table; empty unless the analyzer is broken.
    pub audit: Vec<Diagnostic>,
    pub elapsed_ms: f64,
}

impl Report {
    pub fn is_compliant(&self) -> bool {
        self.verdict == "compliant"
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "entry:    {} ({})", self.entry, self.context_policy);
        let _ = writeln!(s, "result:   {}", self.result_type);
        let _ = writeln!(s, "effect:   {{{}}}", self.effect.join(","));
        if self.is_compliant() {
            let _ = writeln!(s, "verdict:  compliant");
        } else {
            let _ = writeln!(s, "verdict:  VIOLATION {{{}}}", self.witnesses.join(","));
            for b in &self.blame {
                let at = b
                    .position
                    .as_ref()
                    .map_or_else(|| "?".to_string(), |p| format!("{}:{}", p.line, p.col));
                let _ = writeln!(
                    s,
                    "  {at}: {} takes {} to {} ({} . {})",
                    b.builtin, b.prefix, b.result, b.prefix, b.emitted
                );
            }
        }
        for w in &self.warnings {
            match &w.position {
                Some(p) => {
                    let _ = writeln!(s, "warning {}:{}: {}", p.line, p.col, w.message);
                }
                None => {
                    let _ = writeln!(s, "warning: {}", w.message);
                }
            }
        }
        for d in &self.audit {
            let _ = writeln!(s, "audit: {d}");
        }
        let _ = writeln!(
            s,
            "{} iterations, {} summaries, {:.1} ms",
            self.iterations, self.entries, self.elapsed_ms
        );
        s
    }
}

fn position(p: &Program, l: Label) -> Option<Position> {
    p.span(l).map(|s| Position {
        line: s.line,
        col: s.col,
    })
}

/// Analyzes `entry` and builds its report.
pub fn check_program(
    p: &Program,
    pol: &Policy,
    contexts: &dyn ContextPolicy,
    entry: &str,
) -> Result<(Report, Analysis), InferError> {
    let start = Instant::now();
    let an = Analyzer::new(p, pol, contexts);
    let e = Entry::parse(p, entry)?;
    let analysis = an.analyze(&e)?;
    let res = analysis.result();
    let v = verdict(&res.effect, pol);
    let blames = if v.is_compliant() {
        Vec::new()
    } else {
        blame(&an, &analysis)
    };
    let tab = &analysis.table;
    let r = Renderer {
        program: p,
        regions: &tab.regions,
        monoid: &pol.monoid,
    };
    let names = |u: &crate::policy::Effect| -> Vec<String> {
        u.iter().map(|e| pol.monoid.name(*e).to_string()).collect()
    };
    let summaries = tab
        .methods
        .iter()
        .map(|(k, v)| Summary {
            method: format!("{}.{}", p.class_name(k.class), k.method),
            context: k.ctx.to_string(),
            receiver: r.ty(&RefinedType::alloc(k.class, k.region)),
            args: k.args.iter().map(|a| r.ty(a)).collect(),
            result: r.ty(&v.ty),
            effect: names(&v.effect),
        })
        .collect();
    let report = Report {
        schema: SCHEMA_VERSION,
        entry: entry.to_string(),
        context_policy: contexts.name(),
        verdict: if v.is_compliant() { "compliant" } else { "violation" },
        witnesses: match &v {
            Verdict::Compliant => Vec::new(),
            Verdict::Violation { witnesses } => {
                witnesses.iter().map(|e| pol.monoid.name(*e).to_string()).collect()
            }
        },
        effect: names(&res.effect),
        result_type: r.ty(&res.ty),
        blame: blames
            .iter()
            .map(|b| BlameSite {
                position: position(p, b.label),
                builtin: b.builtin.clone(),
                prefix: pol.monoid.name(b.prefix).to_string(),
                emitted: pol.monoid.name(b.emitted).to_string(),
                result: pol.monoid.name(b.result).to_string(),
            })
            .collect(),
        iterations: analysis.iterations,
        entries: tab.entry_count(),
        summaries,
        warnings: analysis
            .warnings
            .iter()
            .map(|w| WarningReport {
                position: w.label.and_then(|l| position(p, l)),
                message: w.message.clone(),
            })
            .collect(),
        audit: audit(&SemiTable::from_table(tab), p, &r),
        elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
    };
    Ok((report, analysis))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::KCfa;
    use crate::parser::{parse_policy, parse_program};

    const TAINT: &str = include_str!("../corpus/taint.policy");

    #[test]
    fn mutated_example_blames_the_sink() {
        let pol = parse_policy(TAINT).unwrap();
        let p = parse_program(include_str!("../corpus/ex1-mutated.fj")).unwrap();
        let (rep, _) = check_program(&p, &pol, &KCfa { k: 1 }, "C.main").unwrap();
        assert_eq!(rep.verdict, "violation");
        assert_eq!(rep.witnesses, ["T"]);
        assert_eq!(rep.blame.len(), 1);
        assert_eq!(rep.blame[0].builtin, "putString");
        assert_eq!(rep.blame[0].position.as_ref().unwrap().line, 11);
        assert!(rep.audit.is_empty());
        assert!(rep.render_text().contains("11:"));
    }

    #[test]
    fn json_has_stable_keys() {
        let pol = parse_policy(TAINT).unwrap();
        let p = parse_program(include_str!("../corpus/ex1.fj")).unwrap();
        let (rep, _) = check_program(&p, &pol, &KCfa { k: 1 }, "C.main").unwrap();
        let v: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = [
                "schema", "entry", "context_policy", "verdict", "witnesses", "effect",
                "result_type", "blame", "iterations", "entries", "summaries", "warnings",
                "audit", "elapsed_ms"
        ];
        want.sort();
        assert_eq!(keys, want);
        assert_eq!(v["verdict"], "compliant");
        assert_eq!(v["effect"], serde_json::json!(["U"]));
    }
}
