//! Random well-typed programs for soundness testing.
//!
//! Every method takes a `Nat` countdown as first argument and returns at
//! once when it is null; recursive calls pass its predecessor, so runs
//! always terminate. Fields of newly allocated objects are initialized
//! right away, which keeps null dereferences rare.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::parser::{parse_program, ParseError};
use crate::syntax::Program;

#[derive(Clone, Debug)]
pub struct GenBounds {
    pub classes: usize,
    pub fields: usize,
    pub methods: usize,
    pub params: usize,
    pub stmts: usize,
    pub depth: usize,
    /// Length of the countdown passed from `main`.
    pub nat: usize,
}

impl Default for GenBounds {
    fn default() -> GenBounds {
        GenBounds {
            classes: 3,
            fields: 2,
            methods: 2,
            params: 2,
            stmts: 4,
            depth: 2,
            nat: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Ty {
    Str,
    Obj,
    Class(usize),
}

#[derive(Clone, Debug)]
struct MethodSig {
    name: String,
    params: Vec<Ty>,
    ret: Ty,
}

#[derive(Clone, Debug)]
struct ClassInfo {
    name: String,
    parent: Option<usize>,
    fields: Vec<(String, Ty)>,
    methods: Vec<MethodSig>,
}

#[derive(Clone, Debug)]
struct Local {
    name: String,
    ty: Ty,
    nonnull: bool,
}

const LITERALS: &[&str] = &["a", "test", "<script>", "</script>", "<b>", ""];

struct Gen<'a> {
    rng: ChaCha8Rng,
    bounds: &'a GenBounds,
    builtins: &'a [(String, usize)],
    classes: Vec<ClassInfo>,
    fresh: usize,
}

impl Gen<'_> {
    fn var(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn ancestors(&self, c: usize) -> Vec<usize> {
        let mut out = vec![c];
        let mut cur = c;
        while let Some(p) = self.classes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    fn subclass(&self, a: usize, b: usize) -> bool {
        self.ancestors(a).contains(&b)
    }

    fn all_fields(&self, c: usize) -> Vec<(String, Ty)> {
        self.ancestors(c)
            .into_iter()
            .flat_map(|a| self.classes[a].fields.clone())
            .collect()
    }

    fn all_methods(&self, c: usize) -> Vec<MethodSig> {
        let mut out: Vec<MethodSig> = Vec::new();
        for a in self.ancestors(c) {
            for m in &self.classes[a].methods {
                if !out.iter().any(|x| x.name == m.name) {
                    out.push(m.clone());
                }
            }
        }
        out
    }

    fn ty_name(&self, t: Ty) -> String {
        match t {
            Ty::Str => "String".into(),
            Ty::Obj => "Object".into(),
            Ty::Class(c) => self.classes[c].name.clone(),
        }
    }

    fn fits(&self, have: Ty, want: Ty) -> bool {
        match (have, want) {
            (_, Ty::Obj) => true,
            (Ty::Str, Ty::Str) => true,
            (Ty::Class(a), Ty::Class(b)) => self.subclass(a, b),
            _ => false,
        }
    }

    fn random_ty(&mut self) -> Ty {
        match self.rng.gen_range(0..4) {
            0 | 1 => Ty::Str,
            2 => Ty::Obj,
            _ => Ty::Class(self.rng.gen_range(0..self.classes.len())),
        }
    }

    fn pick<'b>(&mut self, env: &'b [Local], want: Ty, nonnull: bool) -> Option<&'b Local> {
        let c: Vec<&Local> = env
            .iter()
            .filter(|l| self.fits(l.ty, want) && (l.nonnull || !nonnull))
            .collect();
        c.choose(&mut self.rng).copied()
    }

    fn str_expr(&mut self, env: &[Local], nat: Option<&str>, depth: usize) -> String {
        let choice = if depth == 0 {
            self.rng.gen_range(0..2)
        } else {
            self.rng.gen_range(0..7)
        };
        match choice {
            1 => {
                if let Some(l) = self.pick(env, Ty::Str, true) {
                    return l.name.clone();
                }
            }
            2 | 3 if !self.builtins.is_empty() => {
                let (name, arity) = self.builtins.choose(&mut self.rng).unwrap().clone();
                let args: Vec<String> = (0..arity)
                    .map(|_| self.str_expr(env, nat, depth - 1))
                    .collect();
                return format!("{name}({})", args.join(", "));
            }
            4 => {
                let a = self.str_expr(env, nat, depth - 1);
                let b = self.str_expr(env, nat, depth - 1);
                return format!("({a} + {b})");
            }
            5 => {
                let objs: Vec<(String, usize)> = env
                    .iter()
                    .filter_map(|l| match l.ty {
                        Ty::Class(c) if l.nonnull => Some((l.name.clone(), c)),
                        _ => None,
                    })
                    .collect();
                if let Some((v, c)) = objs.choose(&mut self.rng).cloned() {
                    let fs: Vec<String> = self
                        .all_fields(c)
                        .into_iter()
                        .filter(|f| f.1 == Ty::Str)
                        .map(|f| f.0)
                        .collect();
                    if let Some(f) = fs.choose(&mut self.rng) {
                        return format!("{v}.{f}");
                    }
                    if let Some(n) = nat {
                        if let Some(call) = self.call(env, n, &v, c, Some(Ty::Str), depth - 1) {
                            return call;
                        }
                    }
                }
            }
            6 => {
                if let Some(l) = self.pick(env, Ty::Obj, true) {
                    if l.ty == Ty::Obj {
                        return format!("((String) {})", l.name);
                    }
                }
            }
            _ => {}
        }
        format!("{:?}", LITERALS.choose(&mut self.rng).unwrap())
    }

    /// A call `v.m(nat, args)` on a method returning `ret`, if any fits.
    fn call(
        &mut self,
        env: &[Local],
        nat: &str,
        v: &str,
        c: usize,
        ret: Option<Ty>,
        depth: usize,
    ) -> Option<String> {
        let ms: Vec<MethodSig> = self
            .all_methods(c)
            .into_iter()
            .filter(|m| ret.is_none_or(|r| self.fits(m.ret, r)))
            .collect();
        let m = ms.choose(&mut self.rng)?.clone();
        let mut args = vec![nat.to_string()];
        for &p in &m.params {
            args.push(self.value(env, p, Some(nat), depth)?);
        }
        Some(format!("{v}.{}({})", m.name, args.join(", ")))
    }

    /// A non-null value of type `t`.
    fn value(&mut self, env: &[Local], t: Ty, nat: Option<&str>, depth: usize) -> Option<String> {
        match t {
            Ty::Str => Some(self.str_expr(env, nat, depth)),
            Ty::Obj => {
                if self.rng.gen_bool(0.5) {
                    if let Some(l) = self.pick(env, Ty::Obj, true) {
                        return Some(l.name.clone());
                    }
                }
                Some(self.str_expr(env, nat, depth))
            }
            Ty::Class(_) => self.pick(env, t, true).map(|l| l.name.clone()),
        }
    }

    fn stmts(&mut self, env: &mut Vec<Local>, nat: Option<&str>, out: &mut String, indent: &str) {
        let n = self.rng.gen_range(1..=self.bounds.stmts);
        let d = self.bounds.depth;
        for _ in 0..n {
            match self.rng.gen_range(0..7) {
                0 | 1 => {
                    let c = self.rng.gen_range(0..self.classes.len());
                    let v = self.var();
                    let _ = writeln!(out, "{indent}{} {v} = new {}();", self.classes[c].name, self.classes[c].name);
                    for (f, t) in self.all_fields(c) {
                        if let Some(val) = self.value(env, t, nat, d) {
                            let _ = writeln!(out, "{indent}{v}.{f} = {val};");
                        }
                    }
                    env.push(Local { name: v, ty: Ty::Class(c), nonnull: true });
                }
                2 => {
                    let v = self.var();
                    let e = self.str_expr(env, nat, d);
                    let _ = writeln!(out, "{indent}String {v} = {e};");
                    env.push(Local { name: v, ty: Ty::Str, nonnull: true });
                }
                3 => {
                    let objs: Vec<(String, usize)> = env
                        .iter()
                        .filter_map(|l| match l.ty {
                            Ty::Class(c) if l.nonnull => Some((l.name.clone(), c)),
                            _ => None,
                        })
                        .collect();
                    if let Some((v, c)) = objs.choose(&mut self.rng).cloned() {
                        let fs = self.all_fields(c);
                        if let Some((f, t)) = fs.choose(&mut self.rng).cloned() {
                            if let Some(val) = self.value(env, t, nat, d) {
                                let _ = writeln!(out, "{indent}{v}.{f} = {val};");
                            }
                        }
                    }
                }
                4 => {
                    let objs: Vec<(String, usize)> = env
                        .iter()
                        .filter_map(|l| match l.ty {
                            Ty::Class(c) if l.nonnull => Some((l.name.clone(), c)),
                            _ => None,
                        })
                        .collect();
                    if let (Some((v, c)), Some(n)) = (objs.choose(&mut self.rng).cloned(), nat) {
                        if let Some(call) = self.call(env, n, &v, c, None, d) {
                            let _ = writeln!(out, "{indent}{call};");
                        }
                    } else {
                        let e = self.str_expr(env, nat, d);
                        let _ = writeln!(out, "{indent}{e};");
                    }
                }
                5 => {
                    let v = self.var();
                    let a = env.choose(&mut self.rng).map(|l| l.name.clone());
                    let b = env.choose(&mut self.rng).map(|l| l.name.clone());
                    if let (Some(a), Some(b)) = (a, b) {
                        let e1 = self.str_expr(env, nat, d);
                        let e2 = self.str_expr(env, nat, d);
                        let _ = writeln!(
                            out,
                            "{indent}String {v} = if ({a} == {b}) {{ {e1}; }} else {{ {e2}; }};"
                        );
                        env.push(Local { name: v, ty: Ty::Str, nonnull: true });
                    }
                }
                _ => {
                    // A downcast that may fail, or an upcast to Object.
                    let objs: Vec<(String, usize)> = env
                        .iter()
                        .filter_map(|l| match l.ty {
                            Ty::Class(c) if l.nonnull => Some((l.name.clone(), c)),
                            _ => None,
                        })
                        .collect();
                    if let Some((u, c)) = objs.choose(&mut self.rng).cloned() {
                        let subs: Vec<usize> =
                            (0..self.classes.len()).filter(|&s| self.subclass(s, c)).collect();
                        let s = *subs.choose(&mut self.rng).unwrap();
                        let v = self.var();
                        let o = self.var();
                        let _ = writeln!(out, "{indent}Object {o} = {u};");
                        let _ = writeln!(out, "{indent}{} {v} = ({}) {o};", self.classes[s].name, self.classes[s].name);
                        env.push(Local { name: o, ty: Ty::Obj, nonnull: true });
                        env.push(Local { name: v, ty: Ty::Class(s), nonnull: true });
                    }
                }
            }
        }
    }

    fn base_value(&mut self, env: &[Local], t: Ty, this: usize) -> String {
        match t {
            Ty::Str | Ty::Obj => self.str_expr(env, None, 0),
            Ty::Class(c) if self.subclass(this, c) => "this".into(),
            Ty::Class(_) => self
                .pick(env, t, true)
                .map_or_else(|| "null".into(), |l| l.name.clone()),
        }
    }

    fn method(&mut self, class: usize, sig: &MethodSig, out: &mut String) {
        let mut env = vec![Local { name: "this".into(), ty: Ty::Class(class), nonnull: true }];
        let mut params = vec!["Nat n".to_string()];
        for (i, &p) in sig.params.iter().enumerate() {
            let name = format!("p{i}");
            params.push(format!("{} {name}", self.ty_name(p)));
            env.push(Local { name, ty: p, nonnull: true });
        }
        let _ = writeln!(out, "  {} {}({}) {{", self.ty_name(sig.ret), sig.name, params.join(", "));
        let base = self.base_value(&env, sig.ret, class);
        let _ = writeln!(out, "    if (n == null) {{ return {base}; }} else {{");
        let _ = writeln!(out, "      Nat k = n.pred;");
        self.stmts(&mut env, Some("k"), out, "      ");
        let result = match sig.ret {
            Ty::Class(_) => self.base_value(&env, sig.ret, class),
            t => self.value(&env, t, Some("k"), self.bounds.depth).unwrap(),
        };
        let _ = writeln!(out, "      return {result};\n    }}\n  }}");
    }

    fn program(&mut self) -> String {
        let nclasses = self.rng.gen_range(1..=self.bounds.classes.max(1));
        let mut field_no = 0;
        let mut method_no = 0;
        for i in 0..nclasses {
            let parent = if i > 0 && self.rng.gen_bool(0.5) {
                Some(self.rng.gen_range(0..i))
            } else {
                None
            };
            self.classes.push(ClassInfo {
                name: format!("K{i}"),
                parent,
                fields: Vec::new(),
                methods: Vec::new(),
            });
        }
        for i in 0..nclasses {
            for _ in 0..self.rng.gen_range(0..=self.bounds.fields) {
                let t = self.random_ty();
                self.classes[i].fields.push((format!("f{field_no}"), t));
                field_no += 1;
            }
            for _ in 0..self.rng.gen_range(0..=self.bounds.methods) {
                let params = (0..self.rng.gen_range(0..=self.bounds.params))
                    .map(|_| self.random_ty())
                    .collect();
                let ret = self.random_ty();
                self.classes[i].methods.push(MethodSig {
                    name: format!("m{method_no}"),
                    params,
                    ret,
                });
                method_no += 1;
            }
        }
        let mut out = String::from("class Nat { Nat pred; }\n");
        for i in 0..nclasses {
            let c = self.classes[i].clone();
            match c.parent {
                Some(p) => {
                    let _ = writeln!(out, "class {} extends {} {{", c.name, self.classes[p].name);
                }
                None => {
                    let _ = writeln!(out, "class {} {{", c.name);
                }
            }
            for (f, t) in &c.fields {
                let _ = writeln!(out, "  {} {f};", self.ty_name(*t));
            }
            let mut sigs = c.methods.clone();
            if let Some(p) = c.parent {
                for m in self.all_methods(p) {
                    if self.rng.gen_bool(0.4) {
                        sigs.push(m);
                    }
                }
            }
            for m in &sigs {
                self.method(i, m, &mut out);
            }
            out.push_str("}\n");
        }
        out.push_str("main {\n  Nat n0 = null;\n");
        for i in 1..=self.bounds.nat {
            let _ = writeln!(out, "  Nat n{i} = new Nat();\n  n{i}.pred = n{};", i - 1);
        }
        let nat = format!("n{}", self.bounds.nat);
        let mut env = Vec::new();
        self.stmts(&mut env, Some(&nat), &mut out, "  ");
        let objs: Vec<(String, usize)> = env
            .iter()
            .filter_map(|l| match l.ty {
                Ty::Class(c) => Some((l.name.clone(), c)),
                _ => None,
            })
            .collect();
        for (v, c) in objs {
            if let Some(call) = self.call(&env, &nat, &v, c, None, self.bounds.depth) {
                let _ = writeln!(out, "  {call};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Source text of a random program; `builtins` lists the string
/// primitives it may call.
pub fn generate_source(seed: u64, bounds: &GenBounds, builtins: &[(String, usize)]) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        bounds,
        builtins,
        classes: Vec::new(),
        fresh: 0,
    };
    g.program()
}

pub fn generate_program(
    seed: u64,
    bounds: &GenBounds,
    builtins: &[(String, usize)],
) -> Result<Program, ParseError> {
    parse_program(&generate_source(seed, bounds, builtins))
}
