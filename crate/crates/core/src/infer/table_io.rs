//! Stable text form of class tables.
//!
//! ```text
//! relevant D@{3}
//! F s D@{3} = String@{U}
//! M main [] $Main@{$entry} () = String@{} ! {U}
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::contexts::{Context, RegionId, RegionInterner, RegionKey};
use crate::lattice::{Region, RefinedType, Renderer};
use crate::policy::{Effect, Policy};
use crate::syntax::{ClassId, Program};

use super::ClassTable;

/// One claimed signature `(σ̄, τ, U) ∈ M(m, z, C_r)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemiEntry {
    pub method: String,
    pub ctx: Context,
    pub class: ClassId,
    pub region: RegionId,
    pub args: Vec<RefinedType>,
    pub ret: RefinedType,
    pub effect: Effect,
}

/// A class table with set-valued method typing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SemiTable {
    pub relevant: BTreeSet<(ClassId, RegionId)>,
    pub fields: BTreeMap<(String, ClassId, RegionId), RefinedType>,
    pub methods: Vec<SemiEntry>,
}

impl SemiTable {
    /// Views the summaries set-wise.
    pub fn from_table(tab: &ClassTable) -> SemiTable {
        SemiTable {
            relevant: tab.relevant.clone(),
            fields: tab.fields.clone(),
            methods: tab
                .methods
                .iter()
                .map(|(k, v)| SemiEntry {
                    method: k.method.clone(),
                    ctx: k.ctx.clone(),
                    class: k.class,
                    region: k.region,
                    args: k.args.clone(),
                    ret: v.ty.clone(),
                    effect: v.effect.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("table line {line}: {message}")]
pub struct TableParseError {
    pub line: usize,
    pub message: String,
}

pub fn dump_table(tab: &ClassTable, p: &Program, policy: &Policy) -> String {
    dump_semi(&SemiTable::from_table(tab), &tab.regions, p, policy)
}

pub fn dump_semi(t: &SemiTable, regions: &RegionInterner, p: &Program, policy: &Policy) -> String {
    let r = Renderer {
        program: p,
        regions,
        monoid: &policy.monoid,
    };
    let atom = |c: ClassId, reg: RegionId| r.ty(&RefinedType::alloc(c, reg));
    let mut lines = Vec::new();
    for &(c, reg) in &t.relevant {
        lines.push(format!("relevant {}", atom(c, reg)));
    }
    let mut fields = Vec::new();
    for ((f, c, reg), ty) in &t.fields {
        fields.push(format!("F {f} {} = {}", atom(*c, *reg), r.ty(ty)));
    }
    let mut methods = Vec::new();
    for e in &t.methods {
        let mut s = format!("M {} {} {} (", e.method, e.ctx, atom(e.class, e.region));
        s.push_str(&r.types(&e.args));
        let _ = write!(s, ") = {} ! {}", r.ty(&e.ret), r.effect(&e.effect));
        methods.push(s);
    }
    // Interned region ids depend on discovery order; sort the rendered text.
    lines.sort();
    fields.sort();
    methods.sort();
    let mut out = String::new();
    for l in lines.into_iter().chain(fields).chain(methods) {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

struct Cursor<'a> {
    s: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TableParseError> {
        Err(TableParseError {
            line: self.line,
            message: msg.into(),
        })
    }

    fn ws(&mut self) {
        while self.s[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.s[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn eat(&mut self, t: &str) -> Result<(), TableParseError> {
        self.ws();
        if self.s[self.pos..].starts_with(t) {
            self.pos += t.len();
            Ok(())
        } else {
            self.err(format!("expected `{t}`"))
        }
    }

    fn peek(&mut self, t: &str) -> bool {
        self.ws();
        self.s[self.pos..].starts_with(t)
    }

    fn word(&mut self) -> Result<&'a str, TableParseError> {
        self.ws();
        let rest = &self.s[self.pos..];
        let n = rest
            .find(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
            .unwrap_or(rest.len());
        if n == 0 {
            return self.err("expected a name");
        }
        self.pos += n;
        Ok(&rest[..n])
    }

    /// Text up to (not including) one of `stops`.
    fn until(&mut self, stops: &[char]) -> &'a str {
        let rest = &self.s[self.pos..];
        let n = rest.find(|c| stops.contains(&c)).unwrap_or(rest.len());
        self.pos += n;
        rest[..n].trim()
    }

    fn done(&mut self) -> bool {
        self.ws();
        self.pos >= self.s.len()
    }
}

struct Reader<'a> {
    p: &'a Program,
    policy: &'a Policy,
    regions: &'a mut RegionInterner,
}

impl Reader<'_> {
    fn class(&self, c: &mut Cursor<'_>) -> Result<ClassId, TableParseError> {
        let name = c.word()?;
        match self.p.class_id(name) {
            Ok(id) => Ok(id),
            Err(_) => c.err(format!("unknown class `{name}`")),
        }
    }

    fn ty(&mut self, c: &mut Cursor<'_>) -> Result<RefinedType, TableParseError> {
        let class = self.class(c)?;
        c.eat("@")?;
        c.eat("{")?;
        let mut regions = BTreeSet::new();
        loop {
            let tok = c.until(&[',', '}']);
            if !tok.is_empty() {
                let reg = if let Some(k) = RegionKey::parse(tok) {
                    Region::Alloc(self.regions.intern(k))
                } else if let Some(e) = self.policy.monoid.elem(tok) {
                    Region::Tag(e)
                } else {
                    return c.err(format!("unknown region `{tok}`"));
                };
                regions.insert(reg);
            }
            if c.peek(",") {
                c.eat(",")?;
            } else {
                c.eat("}")?;
                break;
            }
        }
        Ok(RefinedType { class, regions })
    }

    fn atom(&mut self, c: &mut Cursor<'_>) -> Result<(ClassId, RegionId), TableParseError> {
        let t = self.ty(c)?;
        let allocs: Vec<RegionId> = t.alloc_regions().collect();
        let has_tags = t.tags().next().is_some();
        match (allocs.as_slice(), has_tags) {
            ([r], false) => Ok((t.class, *r)),
            _ => c.err("expected an atomic ordinary type"),
        }
    }

    fn effect(&self, c: &mut Cursor<'_>) -> Result<Effect, TableParseError> {
        c.eat("{")?;
        let body = c.until(&['}']);
        c.eat("}")?;
        let mut out = Effect::new();
        for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match self.policy.monoid.elem(tok) {
                Some(e) => {
                    out.insert(e);
                }
                None => return c.err(format!("unknown monoid element `{tok}`")),
            }
        }
        Ok(out)
    }

    fn ctx(&self, c: &mut Cursor<'_>) -> Result<Context, TableParseError> {
        c.eat("[")?;
        let body = c.until(&[']']);
        c.eat("]")?;
        let mut v = Vec::new();
        for tok in body.split('.').filter(|t| !t.is_empty()) {
            match tok.trim().parse() {
                Ok(l) => v.push(l),
                Err(_) => return c.err(format!("bad call site `{tok}`")),
            }
        }
        Ok(Context(v))
    }
}

/// Reads a table, interning regions into `regions`.
pub fn parse_table(
    text: &str,
    p: &Program,
    policy: &Policy,
    regions: &mut RegionInterner,
) -> Result<SemiTable, TableParseError> {
    let mut rd = Reader { p, policy, regions };
    let mut out = SemiTable::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut c = Cursor {
            s: line,
            pos: 0,
            line: i + 1,
        };
        match c.word()? {
            "relevant" => {
                let a = rd.atom(&mut c)?;
                out.relevant.insert(a);
            }
            "F" => {
                let f = c.word()?.to_string();
                let (cl, r) = rd.atom(&mut c)?;
                c.eat("=")?;
                let t = rd.ty(&mut c)?;
                out.fields.insert((f, cl, r), t);
            }
            "M" => {
                let method = c.word()?.to_string();
                let ctx = rd.ctx(&mut c)?;
                let (class, region) = rd.atom(&mut c)?;
                c.eat("(")?;
                let mut args = Vec::new();
                if !c.peek(")") {
                    loop {
                        args.push(rd.ty(&mut c)?);
                        if c.peek(",") {
                            c.eat(",")?;
                        } else {
                            break;
                        }
                    }
                }
                c.eat(")")?;
                c.eat("=")?;
                let ret = rd.ty(&mut c)?;
                c.eat("!")?;
                let effect = rd.effect(&mut c)?;
                out.methods.push(SemiEntry {
                    method,
                    ctx,
                    class,
                    region,
                    args,
                    ret,
                    effect,
                });
            }
            other => return c.err(format!("unknown entry kind `{other}`")),
        }
        if !c.done() {
            return c.err("trailing input");
        }
    }
    Ok(out)
}
