//! Executable soundness testing: run programs under every builtin
//! resolution and compare traces and final heaps with the inferred table.

mod generate;

pub use generate::{generate_program, generate_source, GenBounds};

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::checker::{Check, Diagnostic};
use crate::contexts::{ContextPolicy, KCfa};
use crate::infer::{Analysis, Analyzer, ClassTable, Entry, InferError};
use crate::interp::{run_entry, EvalResult, HeapObj, Limits, Outcome, Value};
use crate::lattice::{subtype, RefinedType, Renderer};
use crate::policy::{EnumChooser, Policy};
use crate::parser::MAIN_CLASS;
use crate::syntax::Program;

#[derive(Clone, Copy, Debug)]
pub struct Budget {
    /// Maximum number of resolutions tried.
    pub runs: usize,
    pub limits: Limits,
}

impl Default for Budget {
    fn default() -> Budget {
        Budget {
            runs: 64,
            limits: Limits {
                fuel: 100_000,
                max_depth: 100,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub choices: Vec<usize>,
    pub trace: String,
    pub class: String,
    pub inferred: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SoundnessReport {
    pub runs: usize,
    pub terminated: usize,
    pub stuck: usize,
    pub out_of_fuel: usize,
    /// True when every resolution was tried within the budget.
    pub exhaustive: bool,
    pub counterexamples: Vec<Counterexample>,
    pub heap_diagnostics: Vec<Diagnostic>,
}

impl SoundnessReport {
    pub fn is_sound(&self) -> bool {
        self.counterexamples.is_empty() && self.heap_diagnostics.is_empty()
    }
}

/// Analyzes `entry`, then runs it under each builtin resolution and checks
/// that every terminating trace is classified inside the inferred effect
/// and that the final heap is typed by the table. Stuck runs are counted
/// but not checked.
pub fn soundness_check(
    p: &Program,
    entry: &Entry,
    pol: &Policy,
    ctxpol: &dyn ContextPolicy,
    budget: Budget,
) -> Result<SoundnessReport, InferError> {
    let an = Analyzer::new(p, pol, ctxpol);
    let analysis = an.analyze(entry)?;
    let effect = &analysis.result().effect;
    let mut report = SoundnessReport::default();
    let mut chooser = EnumChooser::new();
    loop {
        if report.runs >= budget.runs {
            break;
        }
        report.runs += 1;
        let out = run_entry(
            p,
            pol,
            entry.class,
            &entry.method,
            Some(ctxpol),
            &mut chooser,
            budget.limits,
        )
        .ok_or_else(|| InferError::NoEntry(format!("{}.{}", p.class_name(entry.class), entry.method)))?;
        match out {
            Outcome::Done(res) => {
                report.terminated += 1;
                let class = pol.classify(&res.trace);
                if !effect.contains(&class) {
                    report.counterexamples.push(Counterexample {
                        choices: chooser.choices(),
                        trace: pol.render_word(&res.trace),
                        class: pol.monoid.name(class).to_string(),
                        inferred: pol.render_effect(effect),
                    });
                }
                report
                    .heap_diagnostics
                    .extend(heap_typing_check(&res, &analysis, p, pol));
            }
            Outcome::Stuck { .. } => report.stuck += 1,
            Outcome::OutOfFuel => report.out_of_fuel += 1,
        }
        if !chooser.advance() {
            report.exhaustive = true;
            break;
        }
    }
    report.heap_diagnostics.sort();
    report.heap_diagnostics.dedup();
    Ok(report)
}

fn value_type(res: &EvalResult, v: Value, tab: &ClassTable, pol: &Policy) -> Result<RefinedType, String> {
    match v {
        Value::Null => Ok(RefinedType::null()),
        Value::Loc(l) => match res.heap.get(l) {
            Some(HeapObj::Str { word, .. }) => Ok(RefinedType::string([pol.classify(word)])),
            Some(HeapObj::Obj { class, region: Some(k), .. }) => tab
                .regions
                .get(k)
                .map(|r| RefinedType::alloc(*class, r))
                .ok_or_else(|| format!("region {k} not in the table")),
            Some(HeapObj::Obj { region: None, .. }) => Err("uninstrumented object".into()),
            None => Err(format!("dangling location #{l}")),
        },
    }
}

/// Builds the heap typing of a finished instrumented run and checks it:
/// every object's type is relevant, every field value (strings typed by
/// the class of their tag word) fits the table's field type, and the
/// result fits the entry summary.
pub fn heap_typing_check(
    res: &EvalResult,
    analysis: &Analysis,
    p: &Program,
    pol: &Policy,
) -> Vec<Diagnostic> {
    let tab = &analysis.table;
    let r = Renderer {
        program: p,
        regions: &tab.regions,
        monoid: &pol.monoid,
    };
    let mut out = BTreeSet::new();
    let mut diag = |location: String, expected: String, found: String| {
        out.insert(Diagnostic {
            check: Check::Heap,
            location,
            expected,
            found,
        });
    };
    for (l, obj) in res.heap.iter() {
        let HeapObj::Obj { class, fields, .. } = obj else {
            continue;
        };
        let own = match value_type(res, Value::Loc(l), tab, pol) {
            Ok(t) => t,
            Err(e) => {
                diag(format!("#{l}"), "a typed object".into(), e);
                continue;
            }
        };
        let Some(reg) = own.alloc_regions().next() else {
            continue;
        };
        if !tab.relevant.contains(&(*class, reg)) {
            diag(format!("#{l}"), "a relevant type".into(), r.ty(&own));
        }
        for (f, v) in fields {
            let declared = p.field_type(*class, f).unwrap_or(crate::syntax::ClassId::OBJECT);
            let want = tab
                .fields
                .get(&(f.clone(), *class, reg))
                .cloned()
                .unwrap_or_else(|| RefinedType::empty(declared));
            match value_type(res, *v, tab, pol) {
                Ok(t) if subtype(&t, &want, p) => {}
                Ok(t) => diag(format!("#{l}.{f} in {}", r.ty(&own)), r.ty(&want), r.ty(&t)),
                Err(e) => diag(format!("#{l}.{f}"), r.ty(&want), e),
            }
        }
    }
    let want = &analysis.result().ty;
    match value_type(res, res.value, tab, pol) {
        Ok(t) if subtype(&t, want, p) => {}
        Ok(t) => diag("result".into(), r.ty(want), r.ty(&t)),
        Err(e) => diag("result".into(), r.ty(want), e),
    }
    out.into_iter().collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzCase {
    pub seed: u64,
    pub k: usize,
    pub report: Option<SoundnessReport>,
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

impl FuzzCase {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_some_and(SoundnessReport::is_sound)
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct FuzzSummary {
    pub programs: usize,
    pub checks: usize,
    pub runs: usize,
    pub terminated: usize,
    pub stuck: usize,
    pub out_of_fuel: usize,
    pub failures: usize,
    pub cases: Vec<FuzzCase>,
}

/// Generates one program per seed and checks it under each `k`.
pub fn fuzz(
    pol: &Policy,
    seeds: std::ops::Range<u64>,
    ks: &[usize],
    bounds: &GenBounds,
    budget: Budget,
) -> FuzzSummary {
    let builtins: Vec<(String, usize)> =
        pol.builtins.values().map(|b| (b.name.clone(), b.arity)).collect();
    let jobs: Vec<(u64, usize)> = seeds.flat_map(|s| ks.iter().map(move |&k| (s, k))).collect();
    let cases: Vec<FuzzCase> = jobs
        .par_iter()
        .map(|&(seed, k)| {
            let start = std::time::Instant::now();
            let res = generate_program(seed, bounds, &builtins)
                .map_err(|e| e.to_string())
                .and_then(|p| {
                    let e = Entry::parse(&p, &format!("{MAIN_CLASS}.main")).map_err(|e| e.to_string())?;
                    soundness_check(&p, &e, pol, &KCfa { k }, budget).map_err(|e| e.to_string())
                });
            let (report, error) = match res {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e)),
            };
            FuzzCase {
                seed,
                k,
                report,
                error,
                elapsed_ms: start.elapsed().as_secs_f64() * 1000.0,
            }
        })
        .collect();
    let mut sum = FuzzSummary {
        programs: cases.iter().map(|c| c.seed).collect::<BTreeSet<_>>().len(),
        checks: cases.len(),
        ..FuzzSummary::default()
    };
    for c in &cases {
        if !c.passed() {
            sum.failures += 1;
        }
        if let Some(r) = &c.report {
            sum.runs += r.runs;
            sum.terminated += r.terminated;
            sum.stuck += r.stuck;
            sum.out_of_fuel += r.out_of_fuel;
        }
    }
    sum.cases = cases;
    sum
}

impl FuzzSummary {
    /// JUnit-style XML with one test case per (seed, k).
    pub fn to_junit(&self) -> String {
        let esc = |s: &str| {
            s.replace('&', "&amp;")
                .replace('<', "&lt;")
                .replace('>', "&gt;")
                .replace('"', "&quot;")
        };
        let total: f64 = self.cases.iter().map(|c| c.elapsed_ms).sum::<f64>() / 1000.0;
        let mut s = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<testsuite name=\"soundness\" tests=\"{}\" failures=\"{}\" time=\"{total:.3}\">\n",
            self.checks, self.failures
        );
        for c in &self.cases {
            let name = format!("seed{}-k{}", c.seed, c.k);
            s.push_str(&format!(
                "  <testcase classname=\"fuzz\" name=\"{name}\" time=\"{:.3}\"",
                c.elapsed_ms / 1000.0
            ));
            if c.passed() {
                s.push_str("/>\n");
                continue;
            }
            let msg = match (&c.error, &c.report) {
                (Some(e), _) => e.clone(),
                (None, Some(r)) => format!(
                    "{} counterexamples, {} heap diagnostics",
                    r.counterexamples.len(),
                    r.heap_diagnostics.len()
                ),
                _ => String::new(),
            };
            s.push_str(&format!(">\n    <failure message=\"{}\"/>\n  </testcase>\n", esc(&msg)));
        }
        s.push_str("</testsuite>\n");
        s
    }
}
