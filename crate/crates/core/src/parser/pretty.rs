use std::fmt::Write as _;

use crate::syntax::{Expr, ExprKind, MethodDef, Program, Var};

use super::lexer::quote;
use super::program::MAIN_CLASS;

struct Printer<'a> {
    program: &'a Program,
    params: &'a [(String, crate::syntax::ClassId)],
}

impl Printer<'_> {
    fn var(&self, v: &Var) -> String {
        match v {
            Var::This => "this".into(),
            Var::Arg(i) => self.params[i - 1].0.clone(),
            Var::Local(n) => n.clone(),
        }
    }

    fn vars(&self, vs: &[Var]) -> String {
        vs.iter().map(|v| self.var(v)).collect::<Vec<_>>().join(", ")
    }

    /// `open` means the expression may extend to the right without
    /// parentheses.
    fn expr(&self, e: &Expr, out: &mut String, open: bool) {
        match &e.kind {
            ExprKind::Var(v) => out.push_str(&self.var(v)),
            ExprKind::Null => out.push_str("null"),
            ExprKind::New(c) => {
                let _ = write!(out, "new {}()", self.program.class_name(*c));
            }
            ExprKind::StrLit(s) => out.push_str(&quote(s)),
            ExprKind::GetField(x, f) => {
                let _ = write!(out, "{}.{f}", self.var(x));
            }
            ExprKind::SetField(x, f, y) => {
                if !open {
                    out.push('(');
                }
                let _ = write!(out, "{}.{f} = {}", self.var(x), self.var(y));
                if !open {
                    out.push(')');
                }
            }
            ExprKind::Invoke(x, m, ys) => {
                let _ = write!(out, "{}.{m}({})", self.var(x), self.vars(ys));
            }
            ExprKind::Builtin(f, ys) => {
                let _ = write!(out, "{f}({})", self.vars(ys));
            }
            ExprKind::Concat(x, y) => {
                if !open {
                    out.push('(');
                }
                let _ = write!(out, "{} + {}", self.var(x), self.var(y));
                if !open {
                    out.push(')');
                }
            }
            ExprKind::Cast(inner, c) => {
                if !open {
                    out.push('(');
                }
                let _ = write!(out, "({}) ", self.program.class_name(*c));
                self.expr(inner, out, false);
                if !open {
                    out.push(')');
                }
            }
            ExprKind::Let(x, a, b) => {
                if !open {
                    out.push('(');
                }
                let _ = write!(out, "let {} = ", self.var(x));
                self.expr(a, out, false);
                out.push_str(" in ");
                self.expr(b, out, true);
                if !open {
                    out.push(')');
                }
            }
            ExprKind::IfEq(x, y, a, b) => {
                if !open {
                    out.push('(');
                }
                let _ = write!(out, "if ({} == {}) {{ return ", self.var(x), self.var(y));
                self.expr(a, out, true);
                out.push_str("; } else { return ");
                self.expr(b, out, true);
                out.push_str("; }");
                if !open {
                    out.push(')');
                }
            }
        }
    }
}

/// Renders an expression of a method with the given parameters.
pub fn pretty_expr(program: &Program, def: &MethodDef) -> String {
    let mut s = String::new();
    Printer {
        program,
        params: &def.params,
    }
    .expr(&def.body, &mut s, true);
    s
}

/// Renders the program in its let-normal form. Parsing the output yields
/// the same program.
pub fn pretty_program(program: &Program) -> String {
    let mut out = String::new();
    let mut main = None;
    for (id, class) in program.classes().skip(3) {
        if class.name == MAIN_CLASS {
            main = class.bodies.get("main");
            continue;
        }
        let _ = write!(out, "class {}", class.name);
        if let Some(p) = class.parent {
            if p != crate::syntax::ClassId::OBJECT {
                let _ = write!(out, " extends {}", program.class_name(p));
            }
        }
        out.push_str(" {\n");
        let parent_fields = class
            .parent
            .map(|p| program.class(p).fields.clone())
            .unwrap_or_default();
        for (f, t) in &class.fields {
            if !parent_fields.contains_key(f) {
                let _ = writeln!(out, "    {} {f};", program.class_name(*t));
            }
        }
        for (m, def) in &class.bodies {
            let params = def
                .params
                .iter()
                .map(|(n, t)| format!("{} {n}", program.class_name(*t)))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(
                out,
                "    {} {m}({params}) {{\n        return {};\n    }}",
                program.class_name(def.ret),
                pretty_expr(program, def)
            );
        }
        let _ = id;
        out.push_str("}\n");
    }
    if let Some(def) = main {
        let _ = writeln!(out, "main {{\n    return {};\n}}", pretty_expr(program, def));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::parse_program;
    use super::*;

    #[test]
    fn roundtrip_small_program() {
        let src = r#"
class A { String s; Object m(String x) { this.s = x + "!"; return (A) this; } }
class B extends A { Object m(String y) { if (y == y) { return y; } else { return null; } } }
main { A a = new B(); a.m(getString()); }
"#;
        let p = parse_program(src).unwrap();
        let text = pretty_program(&p);
        let q = parse_program(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(p, q, "{text}");
        assert_eq!(text, pretty_program(&q));
    }
}
