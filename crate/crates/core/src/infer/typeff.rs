//! The syntax-directed typing rules, in a checking and an inferring mode.

use std::collections::BTreeSet;

use crate::contexts::{Context, ContextPolicy, RegionId, RegionKey};
use crate::lattice::{
    join_elem, join_type, key_atoms_seq, subtype, Form, LatticeElem, Region, RefinedType,
};
use crate::policy::{effect_concat, Effect, Elem, Policy};
use crate::syntax::{ClassId, Expr, ExprKind, Label, Program, Var};

use super::{ClassTable, MaKey, TypeError, Warning};

/// `Frozen` checks against the table; `Open` weakens it where needed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Frozen,
    Open,
}

/// Variable typing Γ, innermost binding last.
#[derive(Clone, Debug, Default)]
pub struct Gamma(Vec<(Var, RefinedType)>);

impl Gamma {
    pub fn new() -> Gamma {
        Gamma(Vec::new())
    }

    pub fn push(&mut self, x: Var, t: RefinedType) {
        self.0.push((x, t));
    }

    pub fn pop(&mut self) {
        self.0.pop();
    }

    pub fn get(&self, x: &Var) -> Option<&RefinedType> {
        self.0.iter().rev().find(|(v, _)| v == x).map(|(_, t)| t)
    }

    /// Γ for a method body: `this ↦ C_r`, `x_i ↦ σ_i`.
    pub fn for_key(key: &MaKey) -> Gamma {
        let mut g = Gamma::new();
        g.push(Var::This, RefinedType::alloc(key.class, key.region));
        for (i, t) in key.args.iter().enumerate() {
            g.push(Var::Arg(i + 1), t.clone());
        }
        g
    }
}

pub struct Typer<'a> {
    pub program: &'a Program,
    pub policy: &'a Policy,
    pub contexts: &'a dyn ContextPolicy,
    pub mode: Mode,
    pub warnings: BTreeSet<Warning>,
    pub changed: bool,
}

fn neutral(policy: &Policy) -> Effect {
    [policy.monoid.neutral()].into_iter().collect()
}

impl<'a> Typer<'a> {
    pub fn new(
        program: &'a Program,
        policy: &'a Policy,
        contexts: &'a dyn ContextPolicy,
        mode: Mode,
    ) -> Typer<'a> {
        Typer {
            program,
            policy,
            contexts,
            mode,
            warnings: BTreeSet::new(),
            changed: false,
        }
    }

    fn warn(&mut self, label: Label, message: String) {
        self.warnings.insert(Warning {
            label: Some(label),
            message,
        });
    }

    fn lookup(&self, g: &Gamma, x: &Var, label: Label) -> Result<RefinedType, TypeError> {
        g.get(x)
            .cloned()
            .ok_or_else(|| TypeError::new(label, format!("variable `{x}` is not bound")))
    }

    fn pure(&self, ty: RefinedType) -> LatticeElem {
        LatticeElem::new(ty, neutral(self.policy))
    }

    /// Adds `C_r` and all its supertypes to the relevant set.
    pub fn make_relevant(&mut self, tab: &mut ClassTable, class: ClassId, r: RegionId) {
        for &d in self.program.ancestors(class) {
            if tab.relevant.insert((d, r)) {
                self.changed = true;
            }
        }
    }

    /// Receiver regions of an object-typed variable.
    fn receiver(
        &self,
        t: &RefinedType,
        label: Label,
        what: &str,
    ) -> Result<Vec<RegionId>, TypeError> {
        match t.form() {
            Form::Empty | Form::Ordinary => Ok(t.alloc_regions().collect()),
            Form::Tags | Form::Mixed => Err(TypeError::new(
                label,
                format!("{what} on a value that may be a string"),
            )),
        }
    }

    fn tags_of(&self, t: &RefinedType, label: Label, what: &str) -> Result<Vec<Elem>, TypeError> {
        if !self.program.subclass_of(t.class, ClassId::STRING) {
            return Err(TypeError::new(
                label,
                format!("{what} expects a String, found {}", self.program.class_name(t.class)),
            ));
        }
        match t.form() {
            Form::Empty | Form::Tags => Ok(t.tags().collect()),
            _ => Err(TypeError::new(label, format!("{what} on a non-string value"))),
        }
    }

    /// The default (bottom) entry for `m` on class `c`.
    pub fn method_bottom(&self, c: ClassId, m: &str) -> LatticeElem {
        let ret = self
            .program
            .method_type(c, m)
            .map_or(ClassId::NULL, |(_, r)| r);
        self.pure(RefinedType::empty(ret))
    }

    /// Summary keys consulted by a call `x.m(ys)` at `label`.
    #[allow(clippy::too_many_arguments)]
    pub fn invoke_keys(
        &mut self,
        tab: &mut ClassTable,
        g: &Gamma,
        z: &Context,
        label: Label,
        x: &Var,
        m: &str,
        ys: &[Var],
    ) -> Result<Vec<MaKey>, TypeError> {
        let recv = self.lookup(g, x, label)?;
        let regions = self.receiver(&recv, label, "method call")?;
        if regions.is_empty() {
            return Ok(Vec::new());
        }
        let Some((params, _)) = self.program.method_type(recv.class, m) else {
            return Err(TypeError::new(
                label,
                format!("class {} has no method `{m}`", self.program.class_name(recv.class)),
            ));
        };
        if params.len() != ys.len() {
            return Err(TypeError::new(
                label,
                format!("method `{m}` expects {} arguments, got {}", params.len(), ys.len()),
            ));
        }
        let mut args = Vec::with_capacity(ys.len());
        for y in ys {
            args.push(self.lookup(g, y, label)?);
        }
        let arg_atoms = key_atoms_seq(&args);
        let mut keys = Vec::new();
        for r in regions {
            let rk: RegionKey = tab.regions.key(r).clone();
            let z2 = self.contexts.phi(z, recv.class, &rk, m, label);
            for a in &arg_atoms {
                keys.push(MaKey {
                    method: m.to_string(),
                    ctx: z2.clone(),
                    class: recv.class,
                    region: r,
                    args: a.clone(),
                });
            }
        }
        Ok(keys)
    }

    /// Field type `F(f, C_r)`, or the declared type with no regions.
    pub fn field(&self, tab: &ClassTable, f: &str, c: ClassId, r: RegionId) -> RefinedType {
        tab.fields
            .get(&(f.to_string(), c, r))
            .cloned()
            .unwrap_or_else(|| {
                RefinedType::empty(self.program.field_type(c, f).unwrap_or(ClassId::NULL))
            })
    }

    pub fn typeff(
        &mut self,
        tab: &mut ClassTable,
        g: &mut Gamma,
        z: &Context,
        e: &Expr,
    ) -> Result<LatticeElem, TypeError> {
        let l = e.label;
        match &e.kind {
            ExprKind::Var(x) => Ok(self.pure(self.lookup(g, x, l)?)),
            ExprKind::Let(x, e1, e2) => {
                let r1 = self.typeff(tab, g, z, e1)?;
                g.push(x.clone(), r1.ty);
                let r2 = self.typeff(tab, g, z, e2);
                g.pop();
                let r2 = r2?;
                Ok(LatticeElem::new(
                    r2.ty,
                    effect_concat(&r1.effect, &r2.effect, &self.policy.monoid),
                ))
            }
            ExprKind::IfEq(x, y, e1, e2) => {
                let tx = self.lookup(g, x, l)?;
                let ty = self.lookup(g, y, l)?;
                let common: BTreeSet<Region> =
                    tx.regions.intersection(&ty.regions).copied().collect();
                g.push(x.clone(), RefinedType::new(tx.class, common.iter().copied()));
                g.push(y.clone(), RefinedType::new(ty.class, common.iter().copied()));
                let r1 = self.typeff(tab, g, z, e1);
                g.pop();
                g.pop();
                let r1 = r1?;
                let r2 = self.typeff(tab, g, z, e2)?;
                Ok(join_elem(&r1, &r2, self.program))
            }
            ExprKind::Null => Ok(self.pure(RefinedType::null())),
            ExprKind::New(c) => {
                let r = tab.regions.intern(self.contexts.psi(z, l));
                match self.mode {
                    Mode::Open => self.make_relevant(tab, *c, r),
                    Mode::Frozen => {
                        if !tab.relevant.contains(&(*c, r)) {
                            return Err(TypeError::new(
                                l,
                                format!(
                                    "allocated type {}@{{{}}} is not relevant",
                                    self.program.class_name(*c),
                                    tab.regions.key(r)
                                ),
                            ));
                        }
                    }
                }
                Ok(self.pure(RefinedType::alloc(*c, r)))
            }
            ExprKind::Cast(inner, d) => {
                let res = self.typeff(tab, g, z, inner)?;
                let c = res.ty.class;
                let p = self.program;
                let related = p.subclass_of(c, *d) || p.subclass_of(*d, c);
                let regions: Vec<Region> = if related {
                    let keep_tags = p.subclass_of(ClassId::STRING, *d);
                    res.ty
                        .regions
                        .iter()
                        .copied()
                        .filter(|rg| match rg {
                            Region::Tag(_) => keep_tags,
                            Region::Alloc(r) => {
                                *d == ClassId::OBJECT || tab.relevant.contains(&(*d, *r))
                            }
                        })
                        .collect()
                } else {
                    self.warn(
                        l,
                        format!(
                            "cast from {} to unrelated class {} only succeeds on null",
                            p.class_name(c),
                            p.class_name(*d)
                        ),
                    );
                    Vec::new()
                };
                Ok(LatticeElem::new(RefinedType::new(*d, regions), res.effect))
            }
            ExprKind::GetField(x, f) => {
                let t = self.lookup(g, x, l)?;
                let regions = self.receiver(&t, l, "field read")?;
                if regions.is_empty() {
                    return Ok(self.pure(RefinedType::null()));
                }
                if self.program.field_type(t.class, f).is_none() {
                    return Err(TypeError::new(
                        l,
                        format!("class {} has no field `{f}`", self.program.class_name(t.class)),
                    ));
                }
                let mut out: Option<RefinedType> = None;
                for r in regions {
                    let ft = self.field(tab, f, t.class, r);
                    out = Some(match out {
                        None => ft,
                        Some(acc) => join_type(&acc, &ft, self.program),
                    });
                }
                Ok(self.pure(out.unwrap_or_else(RefinedType::null)))
            }
            ExprKind::SetField(x, f, y) => {
                let t = self.lookup(g, x, l)?;
                let v = self.lookup(g, y, l)?;
                let regions = self.receiver(&t, l, "field write")?;
                if !regions.is_empty() {
                    let Some(decl) = self.program.field_type(t.class, f) else {
                        return Err(TypeError::new(
                            l,
                            format!(
                                "class {} has no field `{f}`",
                                self.program.class_name(t.class)
                            ),
                        ));
                    };
                    if !self.program.subclass_of(v.class, decl) {
                        return Err(TypeError::new(
                            l,
                            format!(
                                "field `{f}` has class {}, assigned {}",
                                self.program.class_name(decl),
                                self.program.class_name(v.class)
                            ),
                        ));
                    }
                }
                for r in regions {
                    let cur = self.field(tab, f, t.class, r);
                    match self.mode {
                        Mode::Open => {
                            let joined = join_type(&cur, &v, self.program);
                            if joined != cur || !tab.fields.contains_key(&(f.clone(), t.class, r)) {
                                tab.fields.insert((f.clone(), t.class, r), joined);
                                self.changed = true;
                            }
                        }
                        Mode::Frozen => {
                            if !subtype(&v, &cur, self.program) {
                                return Err(TypeError::new(
                                    l,
                                    format!("value assigned to field `{f}` exceeds its table type"),
                                ));
                            }
                        }
                    }
                }
                Ok(self.pure(v))
            }
            ExprKind::Invoke(x, m, ys) => {
                let keys = self.invoke_keys(tab, g, z, l, x, m, ys)?;
                if keys.is_empty() {
                    self.warn(l, format!("call to `{m}` on a receiver that is always null"));
                    return Ok(LatticeElem::new(RefinedType::null(), Effect::new()));
                }
                let mut out: Option<LatticeElem> = None;
                for k in keys {
                    let v = match tab.methods.get(&k) {
                        Some(v) => v.clone(),
                        None => match self.mode {
                            Mode::Frozen => {
                                return Err(TypeError::missing(l, format!("no summary for `{m}`")))
                            }
                            Mode::Open => {
                                let b = self.method_bottom(k.class, m);
                                tab.methods.insert(k, b.clone());
                                self.changed = true;
                                b
                            }
                        },
                    };
                    out = Some(match out {
                        None => v,
                        Some(acc) => join_elem(&acc, &v, self.program),
                    });
                }
                Ok(out.expect("non-empty key set"))
            }
            ExprKind::Builtin(name, ys) => {
                let b = self
                    .policy
                    .builtin(name)
                    .map_err(|err| TypeError::new(l, err.to_string()))?;
                if b.arity != ys.len() {
                    return Err(TypeError::new(
                        l,
                        format!("builtin `{name}` expects {} arguments, got {}", b.arity, ys.len()),
                    ));
                }
                let mut per_arg = Vec::with_capacity(ys.len());
                for y in ys {
                    let t = self.lookup(g, y, l)?;
                    per_arg.push(self.tags_of(&t, l, "builtin argument")?);
                }
                if per_arg.iter().any(Vec::is_empty) {
                    return Ok(LatticeElem::new(RefinedType::string([]), Effect::new()));
                }
                let mut tags = BTreeSet::new();
                let mut eff = Effect::new();
                for combo in product_elems(&per_arg) {
                    let (rs, us) = self
                        .policy
                        .builtin_typing(name, &combo)
                        .map_err(|err| TypeError::new(l, err.to_string()))?;
                    tags.extend(rs);
                    eff.extend(us);
                }
                Ok(LatticeElem::new(RefinedType::string(tags), eff))
            }
            ExprKind::StrLit(s) => {
                let w = self.policy.lit2word(s);
                Ok(self.pure(RefinedType::string([self.policy.classify(&w)])))
            }
            ExprKind::Concat(x, y) => {
                let a = self.tags_of(&self.lookup(g, x, l)?, l, "concatenation")?;
                let b = self.tags_of(&self.lookup(g, y, l)?, l, "concatenation")?;
                let m = &self.policy.monoid;
                let tags: BTreeSet<Elem> = a
                    .iter()
                    .flat_map(|&u| b.iter().map(move |&v| m.mul(u, v)))
                    .collect();
                Ok(self.pure(RefinedType::string(tags)))
            }
        }
    }
}

fn product_elems(parts: &[Vec<Elem>]) -> Vec<Vec<Elem>> {
    let mut out = vec![Vec::new()];
    for p in parts {
        let mut next = Vec::new();
        for prefix in &out {
            for &e in p {
                let mut v: Vec<Elem> = prefix.clone();
                v.push(e);
                next.push(v);
            }
        }
        out = next;
    }
    out
}
