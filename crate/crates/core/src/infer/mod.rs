//! Type and effect inference: summary tables and their least fixpoint.

mod blame;
mod table_io;
mod typeff;
mod semi;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::contexts::{Context, ContextPolicy, RegionId, RegionInterner, RegionKey};
use crate::lattice::{join_elem, join_type, leq_elem, subtype_seq, LatticeElem, RefinedType};
use crate::policy::{Effect, Elem, Policy};
use crate::syntax::{ClassId, Label, Program, Span};

pub use blame::{blame, Blame};
pub use semi::validate_semi_table;
pub use table_io::{dump_table, parse_table, SemiEntry, SemiTable, TableParseError};
pub use typeff::{Gamma, Mode, Typer};

/// `(m, z, C_r, σ̄)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaKey {
    pub method: String,
    pub ctx: Context,
    pub class: ClassId,
    pub region: RegionId,
    pub args: Vec<RefinedType>,
}

/// Relevant types, field typing `F` and method summaries `Ma`.
#[derive(Clone, Debug, Default)]
pub struct ClassTable {
    pub regions: RegionInterner,
    pub relevant: BTreeSet<(ClassId, RegionId)>,
    pub fields: BTreeMap<(String, ClassId, RegionId), RefinedType>,
    pub methods: BTreeMap<MaKey, LatticeElem>,
}

impl ClassTable {
    pub fn new() -> ClassTable {
        ClassTable::default()
    }

    /// Same relevant set, fields and summaries.
    pub fn same_entries(&self, other: &ClassTable) -> bool {
        self.relevant == other.relevant
            && self.fields == other.fields
            && self.methods == other.methods
    }

    pub fn entry_count(&self) -> usize {
        self.relevant.len() + self.fields.len() + self.methods.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub label: Label,
    pub message: String,
    /// A summary the checker needed was never created.
    pub internal: bool,
}

impl TypeError {
    pub fn new(label: Label, message: String) -> TypeError {
        TypeError {
            label,
            message,
            internal: false,
        }
    }

    pub fn missing(label: Label, message: String) -> TypeError {
        TypeError {
            label,
            message,
            internal: true,
        }
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at expression {}: {}", self.label, self.message)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Warning {
    pub label: Option<Label>,
    pub message: String,
}

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error("type error: {0}")]
    Type(TypeError),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("unknown entry point `{0}`")]
    NoEntry(String),
}

impl From<TypeError> for InferError {
    fn from(e: TypeError) -> InferError {
        if e.internal {
            InferError::Internal(e.to_string())
        } else {
            InferError::Type(e)
        }
    }
}

impl InferError {
    /// Source position of the offending expression, when known.
    pub fn span(&self, p: &Program) -> Option<Span> {
        match self {
            InferError::Type(e) => p.span(e.label),
            _ => None,
        }
    }
}

/// The analyzed method `class.method`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub class: ClassId,
    pub method: String,
}

impl Entry {
    /// Parses `C.m`.
    pub fn parse(p: &Program, s: &str) -> Result<Entry, InferError> {
        let (c, m) = s
            .rsplit_once('.')
            .ok_or_else(|| InferError::NoEntry(s.to_string()))?;
        let class = p.class_id(c).map_err(|_| InferError::NoEntry(s.to_string()))?;
        if p.mtable(class, m).is_none() {
            return Err(InferError::NoEntry(s.to_string()));
        }
        Ok(Entry {
            class,
            method: m.to_string(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct Analysis {
    pub table: ClassTable,
    pub entry: MaKey,
    pub iterations: usize,
    pub warnings: Vec<Warning>,
}

impl Analysis {
    pub fn result(&self) -> &LatticeElem {
        &self.table.methods[&self.entry]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Compliant,
    Violation { witnesses: Vec<Elem> },
}

impl Verdict {
    pub fn is_compliant(&self) -> bool {
        matches!(self, Verdict::Compliant)
    }
}

/// Compliant iff every inferred effect is allowed.
pub fn verdict(effect: &Effect, policy: &Policy) -> Verdict {
    let witnesses: Vec<Elem> = effect
        .iter()
        .copied()
        .filter(|e| !policy.is_allowed(*e))
        .collect();
    if witnesses.is_empty() {
        Verdict::Compliant
    } else {
        Verdict::Violation { witnesses }
    }
}

pub struct Analyzer<'a> {
    pub program: &'a Program,
    pub policy: &'a Policy,
    pub contexts: &'a dyn ContextPolicy,
    pub max_iterations: usize,
}

impl<'a> Analyzer<'a> {
    pub fn new(
        program: &'a Program,
        policy: &'a Policy,
        contexts: &'a dyn ContextPolicy,
    ) -> Analyzer<'a> {
        Analyzer {
            program,
            policy,
            contexts,
            max_iterations: 100_000,
        }
    }

    pub fn typer(&self, mode: Mode) -> Typer<'a> {
        Typer::new(self.program, self.policy, self.contexts, mode)
    }

    /// Creates the entry summary: receiver in a region of its own, string
    /// parameters tagged like `""`, other parameters in one region each.
    pub fn seed(&self, tab: &mut ClassTable, entry: &Entry) -> Result<MaKey, InferError> {
        let (_, def) = self
            .program
            .mtable(entry.class, &entry.method)
            .ok_or_else(|| InferError::NoEntry(entry.method.clone()))?;
        let mut typer = self.typer(Mode::Open);
        let r0 = tab.regions.intern(RegionKey::Entry);
        typer.make_relevant(tab, entry.class, r0);
        let mut args = Vec::new();
        for (i, (_, ty)) in def.params.iter().enumerate() {
            if *ty == ClassId::STRING {
                let w = self.policy.lit2word("");
                args.push(RefinedType::string([self.policy.classify(&w)]));
            } else {
                let r = tab.regions.intern(RegionKey::EntryParam(i + 1));
                typer.make_relevant(tab, *ty, r);
                args.push(RefinedType::alloc(*ty, r));
            }
        }
        let key = MaKey {
            method: entry.method.clone(),
            ctx: self.contexts.initial(),
            class: entry.class,
            region: r0,
            args,
        };
        self.ensure(tab, &key);
        Ok(key)
    }

    fn ensure(&self, tab: &mut ClassTable, key: &MaKey) -> bool {
        if tab.methods.contains_key(key) {
            return false;
        }
        let b = self.typer(Mode::Open).method_bottom(key.class, &key.method);
        tab.methods.insert(key.clone(), b);
        true
    }

    /// One round: re-type every summary body, join, then re-normalize.
    pub fn iterate(
        &self,
        tab: &mut ClassTable,
        warnings: &mut BTreeSet<Warning>,
    ) -> Result<bool, InferError> {
        let mut typer = self.typer(Mode::Open);
        let keys: Vec<MaKey> = tab.methods.keys().cloned().collect();
        for key in keys {
            let (_, def) = self.program.mtable(key.class, &key.method).ok_or_else(|| {
                InferError::Internal(format!("summary for unknown method `{}`", key.method))
            })?;
            let mut g = Gamma::for_key(&key);
            let res = typer.typeff(tab, &mut g, &key.ctx, &def.body)?;
            let cur = &tab.methods[&key];
            let joined = join_elem(cur, &res, self.program);
            if &joined != cur {
                tab.methods.insert(key, joined);
                typer.changed = true;
            }
        }
        let changed = check_class_table(tab, self.program, self.policy.monoid.neutral()) | typer.changed;
        warnings.extend(typer.warnings);
        Ok(changed)
    }

    /// Iterates to the least fixpoint above the given table.
    pub fn solve(
        &self,
        tab: &mut ClassTable,
        warnings: &mut BTreeSet<Warning>,
    ) -> Result<usize, InferError> {
        let mut n = 0;
        loop {
            n += 1;
            if n > self.max_iterations {
                return Err(InferError::Internal("no fixpoint within the iteration limit".into()));
            }
            if !self.iterate(tab, warnings)? {
                return Ok(n);
            }
        }
    }

    pub fn analyze(&self, entry: &Entry) -> Result<Analysis, InferError> {
        let mut tab = ClassTable::new();
        let key = self.seed(&mut tab, entry)?;
        let mut warnings = BTreeSet::new();
        let iterations = self.solve(&mut tab, &mut warnings)?;
        Ok(Analysis {
            table: tab,
            entry: key,
            iterations,
            warnings: warnings.into_iter().collect(),
        })
    }

    /// Checks that the program is well-typed w.r.t. `tab` without
    /// changing it.
    pub fn check_well_typed(&self, tab: &ClassTable) -> Result<(), InferError> {
        let mut scratch = tab.clone();
        let mut typer = self.typer(Mode::Frozen);
        for (key, val) in &tab.methods {
            let (_, def) = self.program.mtable(key.class, &key.method).ok_or_else(|| {
                InferError::Internal(format!("summary for unknown method `{}`", key.method))
            })?;
            let mut g = Gamma::for_key(key);
            let res = typer.typeff(&mut scratch, &mut g, &key.ctx, &def.body)?;
            if !leq_elem(&res, val, self.program) {
                return Err(InferError::Internal(format!(
                    "body of `{}` exceeds its summary",
                    key.method
                )));
            }
        }
        Ok(())
    }

    /// Initializes every summary and allocation type the context policy
    /// can produce, instead of creating them on demand.
    pub fn lift_exhaustive(&self, tab: &mut ClassTable) {
        let mut typer = self.typer(Mode::Open);
        for z in self.contexts.contexts(self.program) {
            for (pos, c) in self.program.allocation_sites() {
                let r = tab.regions.intern(self.contexts.psi(&z, pos));
                typer.make_relevant(tab, c, r);
            }
        }
        let atoms: Vec<(ClassId, RegionId)> = tab.relevant.iter().copied().collect();
        let tags: Vec<Elem> = self.policy.monoid.elements().collect();
        let contexts = self.contexts.contexts(self.program);
        for &(c, r) in &atoms {
            for (f, _) in field_list(self.program, c) {
                tab.fields
                    .entry((f.clone(), c, r))
                    .or_insert_with(|| typer.field(&ClassTable::new(), &f, c, r));
            }
            let methods: Vec<String> = self.program.class(c).methods.iter().cloned().collect();
            for m in methods {
                let Some((params, _)) = self.program.method_type(c, &m) else {
                    continue;
                };
                let choices: Vec<Vec<RefinedType>> = params
                    .iter()
                    .map(|&d| {
                        let mut v = vec![RefinedType::empty(d)];
                        if d == ClassId::STRING || d == ClassId::OBJECT {
                            v.extend(tags.iter().map(|&t| RefinedType::string([t])));
                        }
                        for &(c2, r2) in &atoms {
                            if self.program.subclass_of(c2, d) {
                                v.push(RefinedType::alloc(c2, r2));
                            }
                        }
                        v
                    })
                    .collect();
                for args in cartesian(&choices) {
                    for z in &contexts {
                        let key = MaKey {
                            method: m.clone(),
                            ctx: z.clone(),
                            class: c,
                            region: r,
                            args: args.clone(),
                        };
                        self.ensure(tab, &key);
                    }
                }
            }
        }
    }
}

fn cartesian(parts: &[Vec<RefinedType>]) -> Vec<Vec<RefinedType>> {
    let mut out = vec![Vec::new()];
    for p in parts {
        let mut next = Vec::new();
        for prefix in &out {
            for t in p {
                let mut v: Vec<RefinedType> = prefix.clone();
                v.push(t.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn field_list(p: &Program, c: ClassId) -> Vec<(String, ClassId)> {
    p.class(c)
        .fields
        .iter()
        .map(|(f, t)| (f.clone(), *t))
        .collect()
}

/// The topmost class declaring `f` above `c`.
fn declaring_class(p: &Program, c: ClassId, f: &str) -> ClassId {
    let mut decl = c;
    for &s in p.superclasses(c) {
        if p.class(s).fields.contains_key(f) {
            decl = s;
        }
    }
    decl
}

/// Makes `F` invariant along the subclass tree and `Ma` monotone w.r.t.
/// overriding, raising entries where needed. Returns whether anything
/// changed.
pub fn check_class_table(tab: &mut ClassTable, p: &Program, neutral: Elem) -> bool {
    let mut changed = false;

    // Fields: one value per (field, declaring class, region), copied to
    // every relevant class that has the field.
    let mut groups: BTreeMap<(String, ClassId, RegionId), RefinedType> = BTreeMap::new();
    for ((f, c, r), t) in &tab.fields {
        let g = (f.clone(), declaring_class(p, *c, f), *r);
        let v = match groups.remove(&g) {
            Some(acc) => join_type(&acc, t, p),
            None => t.clone(),
        };
        groups.insert(g, v);
    }
    let mut targets: Vec<(String, ClassId, RegionId)> = tab.fields.keys().cloned().collect();
    for &(c, r) in &tab.relevant {
        for f in p.class(c).fields.keys() {
            targets.push((f.clone(), c, r));
        }
    }
    for (f, c, r) in targets {
        let g = (f.clone(), declaring_class(p, c, &f), r);
        if let Some(v) = groups.get(&g) {
            let slot = (f, c, r);
            if tab.fields.get(&slot) != Some(v) {
                tab.fields.insert(slot, v.clone());
                changed = true;
            }
        }
    }

    // Methods: subclass summaries exist for relevant receivers, and a
    // superclass summary with narrower arguments covers the subclass one.
    let keys: Vec<MaKey> = tab.methods.keys().cloned().collect();
    for k in &keys {
        for &(c2, r2) in tab.relevant.iter() {
            if r2 == k.region && c2 != k.class && p.subclass_of(c2, k.class) {
                let nk = MaKey {
                    class: c2,
                    ..k.clone()
                };
                if let std::collections::btree_map::Entry::Vacant(slot) = tab.methods.entry(nk) {
                    let ret = p.method_type(c2, &k.method).map_or(ClassId::NULL, |(_, r)| r);
                    slot.insert(LatticeElem::new(RefinedType::empty(ret), [neutral].into_iter().collect()));
                    changed = true;
                }
            }
        }
    }
    let mut by_site: BTreeMap<(String, Context, RegionId), Vec<MaKey>> = BTreeMap::new();
    for k in tab.methods.keys() {
        by_site
            .entry((k.method.clone(), k.ctx.clone(), k.region))
            .or_default()
            .push(k.clone());
    }
    for group in by_site.values() {
        loop {
            let mut round = false;
            for sub in group {
                for sup in group {
                    if sub == sup
                        || !p.subclass_of(sub.class, sup.class)
                        || !subtype_seq(&sup.args, &sub.args, p)
                    {
                        continue;
                    }
                    let a = &tab.methods[sub];
                    let b = &tab.methods[sup];
                    if !leq_elem(a, b, p) {
                        let j = join_elem(a, b, p);
                        tab.methods.insert(sup.clone(), j);
                        round = true;
                    }
                }
            }
            if !round {
                break;
            }
            changed = true;
        }
    }
    changed
}

#[cfg(test)]
mod tests;
