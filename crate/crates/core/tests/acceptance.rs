mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use fjeucs::checker::audit;
use fjeucs::contexts::{self, ContextPolicy, KCfa};
use fjeucs::corpus::{parse_manifest, run_case, Case};
use fjeucs::harness::{fuzz, Budget, GenBounds};
use fjeucs::infer::{Analyzer, Entry, SemiTable};
use fjeucs::lattice::Renderer;
use fjeucs::parser::{parse_policy, parse_program};
use fjeucs::report::check_program;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(program: &str, policy: &str, entry: &str, ctx: &dyn ContextPolicy) -> Result<(bool, Duration), String> {
    let start = Instant::now();
    let p = parse_program(&common::read(program)).map_err(|e| format!("{program}: {e}"))?;
    let pol = parse_policy(&common::read(policy)).map_err(|e| format!("{policy}: {e}"))?;
    let (rep, _) = check_program(&p, &pol, ctx, entry).map_err(|e| format!("{program}: {e}"))?;
    Ok((rep.is_compliant(), start.elapsed()))
}

fn expect(program: &str, policy: &str, entry: &str, ctx: &dyn ContextPolicy, ok: bool, limit: Duration) -> Outcome {
    let (got, t) = verdict(program, policy, entry, ctx)?;
    let word = |b: bool| if b { "compliant" } else { "violation" };
    if got != ok {
        return Err(format!("{program} under {}: expected {}, got {}", ctx.name(), word(ok), word(got)));
    }
    if t > limit {
        return Err(format!("{program}: took {t:?}, limit {limit:?}"));
    }
    Ok(format!("{program} {} {}", ctx.name(), word(got)))
}

fn example_one() -> Outcome {
    let sec = Duration::from_secs(1);
    let mut notes = Vec::new();
    for k in 0..=3 {
        notes.push(expect("ex1.fj", "taint.policy", "C.main", &KCfa { k }, true, sec)?);
    }
    notes.push(expect("ex1-mutated.fj", "taint.policy", "C.main", &KCfa { k: 1 }, false, sec)?);
    notes.push(expect("ex1.fj", "taint.policy", "C.main", &contexts::Constant, false, sec)?);
    Ok(format!("{} checks", notes.len()))
}

fn example_two() -> Outcome {
    expect("ex2.fj", "taint.policy", "Servlet.doGet", &KCfa { k: 1 }, false, Duration::from_secs(1))
}

fn guidelines() -> Outcome {
    let two = Duration::from_secs(2);
    let k1 = KCfa { k: 1 };
    expect("ex1.fj", "taint.policy", "C.main", &k1, true, two)?;
    expect("ex1.fj", "taint-dfa.policy", "C.main", &k1, true, two)?;
    expect("sanitize-ok.fj", "sanitize.policy", "$Main.main", &k1, true, two)?;
    expect("sanitize-bad.fj", "sanitize.policy", "$Main.main", &k1, false, two)?;
    expect("auth.fj", "auth.policy", "Authorization.main", &k1, false, two)?;
    Ok("taint, sanitizers, authorization".into())
}

fn known_false_positives() -> Outcome {
    let k1 = KCfa { k: 1 };
    expect("strong-updates3.fj", "taint.policy", "StrongUpdates3.doGet", &k1, false, Duration::from_secs(2))?;
    expect("pred.fj", "taint.policy", "Pred.doGet", &k1, false, Duration::from_secs(2))?;
    Ok("StrongUpdates3 and Pred report violations".into())
}

fn soundness_suite() -> Outcome {
    let start = Instant::now();
    let mut programs = 0;
    let mut runs = 0;
    let mut terminated = 0;
    for (i, policy) in ["sanitize.policy", "taint.policy", "auth.policy"].iter().enumerate() {
        let pol = parse_policy(&common::read(policy)).unwrap();
        let count = if i == 0 { 500 } else { 100 };
        let seeds = (i as u64) * 1_000_000..(i as u64) * 1_000_000 + count;
        let sum = fuzz(&pol, seeds, &[0, 1, 2], &GenBounds::default(), Budget::default());
        if sum.failures > 0 {
            let bad = sum.cases.iter().find(|c| !c.passed()).unwrap();
            return Err(format!("{policy}: {} failures, first at seed {} k={}", sum.failures, bad.seed, bad.k));
        }
        programs += sum.programs;
        runs += sum.runs;
        terminated += sum.terminated;
    }
    let t = start.elapsed();
    if t > Duration::from_secs(600) {
        return Err(format!("took {t:?}"));
    }
    if terminated * 10 < runs * 3 {
        return Err(format!("only {terminated} of {runs} runs terminated"));
    }
    Ok(format!("{programs} programs x k=0..2, {runs} runs, {terminated} terminated, 0 counterexamples, {:.1} s", t.as_secs_f64()))
}

fn algebra() -> Outcome {
    let mut triples = 0;
    let mut words = 0;
    for (name, pol) in common::policies() {
        triples += common::monoid_laws(&pol).map_err(|e| format!("{name}: {e}"))?;
        words += common::dfa_agreement(&pol, 1000, 11).map_err(|e| format!("{name}: {e}"))?;
    }
    let lattice = common::lattice_laws()?;
    Ok(format!("{triples} monoid triples, {lattice} lattice triples, {words} words"))
}

fn cases() -> Vec<Case> {
    parse_manifest(&common::read("MANIFEST"), "MANIFEST").unwrap()
}

fn fixpoint_discipline() -> Outcome {
    let mut max_ratio: f64 = 0.0;
    for c in cases() {
        let p = parse_program(&common::read(&c.program)).unwrap();
        let pol = parse_policy(&common::read(&c.policy)).unwrap();
        let ctx = contexts::by_name(&c.context, c.k).unwrap();
        let an = Analyzer::new(&p, &pol, ctx.as_ref());
        let e = Entry::parse(&p, &c.entry).map_err(|e| e.to_string())?;
        let a = an.analyze(&e).map_err(|e| e.to_string())?;
        let mut tab = a.table.clone();
        let changed = an.iterate(&mut tab, &mut Default::default()).map_err(|e| e.to_string())?;
        if changed || !tab.same_entries(&a.table) {
            return Err(format!("{}: extra iteration changed the table", c.name()));
        }
        an.check_well_typed(&a.table).map_err(|e| format!("{}: {e}", c.name()))?;
        let height = p.depth() + a.table.regions.len() + 2 * pol.monoid.size() + 1;
        let bound = a.table.entry_count() * height;
        if a.iterations > bound {
            return Err(format!("{}: {} iterations, bound {bound}", c.name(), a.iterations));
        }
        max_ratio = max_ratio.max(a.iterations as f64 / bound as f64);
        let r = Renderer { program: &p, regions: &a.table.regions, monoid: &pol.monoid };
        let diags = audit(&SemiTable::from_table(&a.table), &p, &r);
        if let Some(d) = diags.first() {
            return Err(format!("{}: {d}", c.name()));
        }
    }
    Ok(format!("{} cases, iterations at most {:.3} of the bound", cases().len(), max_ratio))
}

fn performance() -> Outcome {
    let dir = common::corpus_dir();
    let mut slowest = (String::new(), 0.0);
    for c in cases() {
        let r = run_case(&dir, &c);
        if !r.passed {
            return Err(format!("{}: expected {}, got {}", c.name(), if c.expect_ok { "OK" } else { "BAD" }, r.actual));
        }
        if r.elapsed_ms > 5000.0 {
            return Err(format!("{}: {:.0} ms", c.name(), r.elapsed_ms));
        }
        if r.elapsed_ms > slowest.1 {
            slowest = (c.name(), r.elapsed_ms);
        }
    }
    Ok(format!("{} cases, slowest {} at {:.1} ms", cases().len(), slowest.0, slowest.1))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("example 1", example_one),
        ("example 2", example_two),
        ("guideline corpus", guidelines),
        ("known false positives", known_false_positives),
        ("soundness suite", soundness_suite),
        ("algebraic suites", algebra),
        ("fixpoint discipline", fixpoint_discipline),
        ("performance", performance),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        match f() {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {msg}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
