//! Well-formedness audits for class tables.

use std::collections::BTreeMap;
use std::fmt;

use crate::contexts::{Context, RegionId};
use crate::infer::{SemiEntry, SemiTable};
use crate::lattice::{subtype, subtype_seq, RefinedType, Renderer};
use crate::syntax::{ClassId, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    FieldTyping,
    Override,
    Relevance,
    Completeness,
    Heap,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::FieldTyping => "field-typing",
            Check::Override => "override",
            Check::Relevance => "relevance",
            Check::Completeness => "completeness",
            Check::Heap => "heap",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
pub struct Diagnostic {
    pub check: Check,
    pub location: String,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}: expected {}, found {}",
            self.check, self.location, self.expected, self.found
        )
    }
}

fn atom(r: &Renderer<'_>, c: ClassId, reg: RegionId) -> String {
    r.ty(&RefinedType::alloc(c, reg))
}

/// `F(f, D_r) = F(f, C_r)` for relevant `D_r` with `D ⪯ C`.
pub fn check_field_typing(t: &SemiTable, p: &Program, r: &Renderer<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for ((f, c, reg), ty) in &t.fields {
        if p.field_type(*c, f).is_none() {
            out.push(Diagnostic {
                check: Check::FieldTyping,
                location: format!("F {f} {}", atom(r, *c, *reg)),
                expected: format!("a field of {}", p.class_name(*c)),
                found: "no such field".into(),
            });
            continue;
        }
        for &(d, r2) in &t.relevant {
            if r2 != *reg || d == *c || !p.subclass_of(d, *c) {
                continue;
            }
            let location = format!("F {f} {}", atom(r, d, r2));
            match t.fields.get(&(f.clone(), d, r2)) {
                Some(t2) if t2 == ty => {}
                Some(t2) => out.push(Diagnostic {
                    check: Check::FieldTyping,
                    location,
                    expected: r.ty(ty),
                    found: r.ty(t2),
                }),
                None => out.push(Diagnostic {
                    check: Check::FieldTyping,
                    location,
                    expected: r.ty(ty),
                    found: "missing".into(),
                }),
            }
        }
    }
    out
}

fn render_sig(r: &Renderer<'_>, e: &SemiEntry) -> String {
    format!("({}) -> {} ! {}", r.types(&e.args), r.ty(&e.ret), r.effect(&e.effect))
}

/// Every signature of `m` on `C_r` is matched by a better one on each
/// relevant subclass `C'_r`.
pub fn check_override_condition(t: &SemiTable, p: &Program, r: &Renderer<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut groups: BTreeMap<(&str, &Context, RegionId), Vec<&SemiEntry>> = BTreeMap::new();
    for e in &t.methods {
        groups
            .entry((e.method.as_str(), &e.ctx, e.region))
            .or_default()
            .push(e);
        if p.method_type(e.class, &e.method).is_none() {
            out.push(Diagnostic {
                check: Check::Override,
                location: format!("M {} {} {}", e.method, e.ctx, atom(r, e.class, e.region)),
                expected: format!("a method of {}", p.class_name(e.class)),
                found: "no such method".into(),
            });
        }
    }
    for ((m, z, reg), entries) in &groups {
        for s in entries {
            for &(c2, r2) in &t.relevant {
                if r2 != *reg || c2 == s.class || !p.subclass_of(c2, s.class) {
                    continue;
                }
                let ok = entries.iter().any(|s2| {
                    s2.class == c2
                        && subtype_seq(&s.args, &s2.args, p)
                        && subtype(&s2.ret, &s.ret, p)
                        && s2.effect.is_subset(&s.effect)
                });
                if !ok {
                    out.push(Diagnostic {
                        check: Check::Override,
                        location: format!("M {m} {z} {}", atom(r, c2, r2)),
                        expected: format!("a signature below {}", render_sig(r, s)),
                        found: "none".into(),
                    });
                }
            }
        }
    }
    out
}

/// Relevant types are closed under supertypes, and every atom in the
/// tables is relevant.
pub fn check_relevance_closure(t: &SemiTable, p: &Program, r: &Renderer<'_>) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for &(c, reg) in &t.relevant {
        for &d in p.superclasses(c) {
            if !t.relevant.contains(&(d, reg)) {
                out.push(Diagnostic {
                    check: Check::Relevance,
                    location: format!("relevant {}", atom(r, c, reg)),
                    expected: format!("relevant {}", atom(r, d, reg)),
                    found: "missing".into(),
                });
            }
        }
    }
    let need = |location: String, ty: &RefinedType, out: &mut Vec<Diagnostic>| {
        for reg in ty.alloc_regions() {
            if !t.relevant.contains(&(ty.class, reg)) {
                out.push(Diagnostic {
                    check: Check::Relevance,
                    location: location.clone(),
                    expected: format!("relevant {}", atom(r, ty.class, reg)),
                    found: "missing".into(),
                });
            }
        }
    };
    for ((f, c, reg), ty) in &t.fields {
        let loc = format!("F {f} {}", atom(r, *c, *reg));
        need(loc.clone(), &RefinedType::alloc(*c, *reg), &mut out);
        need(loc, ty, &mut out);
    }
    for e in &t.methods {
        let loc = format!("M {} {} {}", e.method, e.ctx, atom(r, e.class, e.region));
        need(loc.clone(), &RefinedType::alloc(e.class, e.region), &mut out);
        for a in &e.args {
            need(loc.clone(), a, &mut out);
        }
        need(loc, &e.ret, &mut out);
    }
    out
}

/// All three audits.
pub fn audit(t: &SemiTable, p: &Program, r: &Renderer<'_>) -> Vec<Diagnostic> {
    let mut out = check_field_typing(t, p, r);
    out.extend(check_override_condition(t, p, r));
    out.extend(check_relevance_closure(t, p, r));
    out.sort();
    out.dedup();
    out
}
