//! Command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::contexts::{self, ContextPolicy};
use crate::corpus::run_corpus;
use crate::harness::{fuzz, Budget, GenBounds};
use crate::infer::{dump_table, parse_table, validate_semi_table, Analyzer, ClassTable, Entry, InferError};
use crate::interp::{run_entry, HeapObj, Limits, Outcome, Value, DEFAULT_FUEL, DEFAULT_MAX_DEPTH};
use crate::lattice::Renderer;
use crate::parser::{parse_policy, parse_program};
use crate::policy::{Policy, SeededChooser};
use crate::report::check_program;
use crate::syntax::Program;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "fjeucs", version, about = "Region-based type and effect analysis for FJEUCS programs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct ProgramArgs {
    /// Program source files, read as one program.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    #[arg(long)]
    pub policy: PathBuf,
    /// Entry method as `Class.method`.
    #[arg(long, default_value = "$Main.main")]
    pub entry: String,
}

#[derive(Args, Debug)]
pub struct ContextArgs {
    /// Call-string length for k-CFA.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// `kcfa` or `constant`.
    #[arg(long, default_value = "kcfa")]
    pub context_policy: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a program with the reference interpreter.
    Run {
        #[command(flatten)]
        program: ProgramArgs,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Seed for nondeterministic builtins; the first rule is used otherwise.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Infer types and effects and decide compliance.
    Check {
        #[command(flatten)]
        program: ProgramArgs,
        #[command(flatten)]
        ctx: ContextArgs,
        #[arg(long)]
        json: bool,
        /// Write the final class table here.
        #[arg(long)]
        dump_table: Option<PathBuf>,
    },
    /// Audit a class table file; with `--entry`, also check it against inference.
    AuditTable {
        table: PathBuf,
        #[arg(long = "program", required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        entry: Option<String>,
        #[command(flatten)]
        ctx: ContextArgs,
        #[arg(long)]
        json: bool,
    },
    /// Check soundness on generated programs.
    Fuzz {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Call-string lengths to check, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0usize, 1, 2])]
        k: Vec<usize>,
        #[arg(long, default_value_t = 100_000)]
        fuel: u64,
        /// Resolutions tried per program.
        #[arg(long, default_value_t = 64)]
        runs: usize,
        #[arg(long)]
        json: bool,
        /// Write a JUnit XML summary here.
        #[arg(long)]
        junit: Option<PathBuf>,
    },
    /// Print the policy's monoid, allowed set and representatives.
    DumpMonoid {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run every case of a corpus directory's MANIFEST.
    Corpus {
        dir: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<InferError> for Failure {
    fn from(e: InferError) -> Failure {
        match e {
            InferError::Internal(_) => Failure::internal(e.to_string()),
            _ => Failure::usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_program(files: &[PathBuf]) -> Result<Program, Failure> {
    let mut src = String::new();
    for f in files {
        src.push_str(&read(f)?);
        src.push('\n');
    }
    parse_program(&src).map_err(|e| {
        let name = if files.len() == 1 {
            files[0].display().to_string()
        } else {
            "<program>".to_string()
        };
        Failure::usage(format!("{name}:{e}"))
    })
}

fn load_policy(path: &Path) -> Result<Policy, Failure> {
    parse_policy(&read(path)?).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))
}

fn context_policy(a: &ContextArgs) -> Result<Box<dyn ContextPolicy>, Failure> {
    contexts::by_name(&a.context_policy, a.k)
        .ok_or_else(|| Failure::usage(format!("unknown context policy `{}`", a.context_policy)))
}

fn json_out<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn cmd_run(a: &ProgramArgs, fuel: u64, seed: Option<u64>, json: bool) -> Result<u8, Failure> {
    let p = load_program(&a.files)?;
    let pol = load_policy(&a.policy)?;
    let e = Entry::parse(&p, &a.entry)?;
    let limits = Limits {
        fuel,
        max_depth: DEFAULT_MAX_DEPTH,
    };
    let out = match seed {
        Some(s) => run_entry(&p, &pol, e.class, &e.method, None, &mut SeededChooser::new(s), limits),
        None => run_entry(&p, &pol, e.class, &e.method, None, &mut crate::policy::FirstChooser, limits),
    }
    .ok_or_else(|| Failure::usage(format!("unknown entry point `{}`", a.entry)))?;
    match out {
        Outcome::Done(r) => {
            let class = pol.classify(&r.trace);
            let allowed = pol.is_allowed(class);
            let value = match r.value {
                Value::Loc(l) => match r.heap.get(l) {
                    Some(HeapObj::Str { lit, .. }) => crate::parser::quote(lit),
                    _ => format!("{} {}", p.class_name(r.heap.class_of(r.value)), r.value),
                },
                Value::Null => "null".into(),
            };
            if json {
                println!(
                    "{}",
                    json_out(&serde_json::json!({
                        "outcome": "done",
                        "value": value,
                        "trace": pol.render_word(&r.trace),
                        "class": pol.monoid.name(class),
                        "allowed": allowed,
                    }))
                );
            } else {
                println!("value:   {value}");
                println!("trace:   {}", pol.render_word(&r.trace));
                println!("class:   {}{}", pol.monoid.name(class), if allowed { "" } else { " (not allowed)" });
            }
            Ok(if allowed { EXIT_OK } else { EXIT_VIOLATION })
        }
        Outcome::Stuck { reason, label } => {
            let at = p.span(label).map_or_else(String::new, |s| format!(" at {s}"));
            if json {
                println!("{}", json_out(&serde_json::json!({"outcome": "stuck", "reason": reason.to_string(), "at": at.trim()})));
            } else {
                println!("stuck{at}: {reason}");
            }
            Ok(EXIT_OK)
        }
        Outcome::OutOfFuel => {
            if json {
                println!("{}", json_out(&serde_json::json!({"outcome": "out-of-fuel"})));
            } else {
                println!("out of fuel");
            }
            Ok(EXIT_OK)
        }
    }
}

fn cmd_check(a: &ProgramArgs, ctx: &ContextArgs, json: bool, dump: Option<&Path>) -> Result<u8, Failure> {
    let p = load_program(&a.files)?;
    let pol = load_policy(&a.policy)?;
    let cp = context_policy(ctx)?;
    let (rep, analysis) = check_program(&p, &pol, cp.as_ref(), &a.entry).map_err(|e| {
        let mut f = Failure::from(e);
        if f.code == EXIT_USAGE {
            f.message = format!("{}: {}", a.files[0].display(), f.message);
        }
        f
    })?;
    if let Some(path) = dump {
        std::fs::write(path, dump_table(&analysis.table, &p, &pol))
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    if json {
        println!("{}", rep.to_json());
    } else {
        print!("{}", rep.render_text());
    }
    if !rep.audit.is_empty() {
        return Err(Failure::internal("the inferred table fails its own audit"));
    }
    Ok(if rep.is_compliant() { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_audit(
    table: &Path,
    files: &[PathBuf],
    policy: &Path,
    entry: Option<&str>,
    ctx: &ContextArgs,
    json: bool,
) -> Result<u8, Failure> {
    let p = load_program(files)?;
    let pol = load_policy(policy)?;
    let mut tab = ClassTable::new();
    let semi = parse_table(&read(table)?, &p, &pol, &mut tab.regions)
        .map_err(|e| Failure::usage(format!("{}: {e}", table.display())))?;
    let diags = match entry {
        Some(_) => {
            let cp = context_policy(ctx)?;
            let an = Analyzer::new(&p, &pol, cp.as_ref());
            validate_semi_table(&an, tab, &semi)?
        }
        None => {
            let r = Renderer {
                program: &p,
                regions: &tab.regions,
                monoid: &pol.monoid,
            };
            crate::checker::audit(&semi, &p, &r)
        }
    };
    if json {
        println!("{}", json_out(&diags));
    } else {
        for d in &diags {
            println!("{d}");
        }
        if diags.is_empty() {
            println!("table ok");
        }
    }
    Ok(if diags.is_empty() { EXIT_OK } else { EXIT_VIOLATION })
}

#[allow(clippy::too_many_arguments)]
fn cmd_fuzz(
    policy: &Path,
    count: u64,
    seed: u64,
    ks: &[usize],
    fuel: u64,
    runs: usize,
    json: bool,
    junit: Option<&Path>,
) -> Result<u8, Failure> {
    let pol = load_policy(policy)?;
    let budget = Budget {
        runs,
        limits: Limits {
            fuel,
            max_depth: DEFAULT_MAX_DEPTH,
        },
    };
    let sum = fuzz(&pol, seed..seed + count, ks, &GenBounds::default(), budget);
    if let Some(path) = junit {
        std::fs::write(path, sum.to_junit()).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    }
    if json {
        println!("{}", json_out(&sum));
    } else {
        for c in sum.cases.iter().filter(|c| !c.passed()) {
            match (&c.error, &c.report) {
                (Some(e), _) => println!("seed {} k={}: error: {e}", c.seed, c.k),
                (None, Some(r)) => {
                    for ce in &r.counterexamples {
                        println!(
                            "seed {} k={}: trace {} has class {} outside {}",
                            c.seed, c.k, ce.trace, ce.class, ce.inferred
                        );
                    }
                    for d in &r.heap_diagnostics {
                        println!("seed {} k={}: {d}", c.seed, c.k);
                    }
                }
                _ => {}
            }
        }
        println!(
            "{} programs, {} checks, {} runs ({} terminated, {} stuck, {} out of fuel), {} failures",
            sum.programs, sum.checks, sum.runs, sum.terminated, sum.stuck, sum.out_of_fuel, sum.failures
        );
    }
    Ok(if sum.failures == 0 { EXIT_OK } else { EXIT_VIOLATION })
}

fn cmd_dump_monoid(policy: &Path, json: bool) -> Result<u8, Failure> {
    let pol = load_policy(policy)?;
    let m = &pol.monoid;
    if json {
        let table: Vec<Vec<&str>> = m
            .elements()
            .map(|a| m.elements().map(|b| m.name(m.mul(a, b))).collect())
            .collect();
        let v = serde_json::json!({
            "elements": m.names(),
            "neutral": m.name(m.neutral()),
            "allowed": pol.allowed.iter().map(|e| m.name(*e)).collect::<Vec<_>>(),
            "hom": pol.alphabet.iter().zip(&pol.hom).map(|(l, e)| (l.clone(), m.name(*e).to_string())).collect::<std::collections::BTreeMap<_, _>>(),
            "table": table,
        });
        println!("{}", json_out(&v));
    } else {
        println!("{} elements, neutral {}", m.size(), m.name(m.neutral()));
        println!("allowed: {}", pol.render_effect(&pol.allowed));
        for (l, e) in pol.alphabet.iter().zip(&pol.hom) {
            println!("hom {l} = {}", m.name(*e));
        }
        print!("{}", m.to_tsv());
    }
    Ok(EXIT_OK)
}

fn cmd_corpus(dir: &Path, json: bool) -> Result<u8, Failure> {
    let rs = run_corpus(dir).map_err(|e| Failure::usage(e.to_string()))?;
    if json {
        println!("{}", json_out(&rs));
    } else {
        for r in &rs {
            println!(
                "{:<5} {:<60} expected {:<3} got {:<3} {:>8.1} ms",
                if r.passed { "pass" } else { "FAIL" },
                r.case.name(),
                if r.case.expect_ok { "OK" } else { "BAD" },
                r.actual,
                r.elapsed_ms
            );
        }
        println!("{} cases, {} failed", rs.len(), rs.iter().filter(|r| !r.passed).count());
    }
    Ok(if rs.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_VIOLATION })
}

pub fn execute(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Run { program, fuel, seed, json } => cmd_run(program, *fuel, *seed, *json),
        Command::Check { program, ctx, json, dump_table } => {
            cmd_check(program, ctx, *json, dump_table.as_deref())
        }
        Command::AuditTable { table, files, policy, entry, ctx, json } => {
            cmd_audit(table, files, policy, entry.as_deref(), ctx, *json)
        }
        Command::Fuzz { policy, count, seed, k, fuel, runs, json, junit } => {
            cmd_fuzz(policy, *count, *seed, k, *fuel, *runs, *json, junit.as_deref())
        }
        Command::DumpMonoid { policy, json } => cmd_dump_monoid(policy, *json),
        Command::Corpus { dir, json } => cmd_corpus(dir, *json),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::MAIN_CLASS;

    #[test]
    fn entry_defaults_to_main() {
        let cli = Cli::try_parse_from(["fjeucs", "check", "a.fj", "--policy", "p"]).unwrap();
        let Command::Check { program, ctx, .. } = cli.command else { panic!() };
        assert_eq!(program.entry, format!("{MAIN_CLASS}.main"));
        assert_eq!((ctx.k, ctx.context_policy.as_str()), (1, "kcfa"));
    }

    #[test]
    fn fuzz_k_list() {
        let cli = Cli::try_parse_from(["fjeucs", "fuzz", "--policy", "p", "--k", "0,2"]).unwrap();
        let Command::Fuzz { k, .. } = cli.command else { panic!() };
        assert_eq!(k, [0, 2]);
    }
}
