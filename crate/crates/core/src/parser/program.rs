use std::collections::{HashMap, HashSet};

use crate::syntax::{
    inherit_members, ClassDef, ClassId, Expr, ExprKind, Label, MethodDef, Program, Span, Var,
};

use super::lexer::{lex, Tok, Token};
use super::ParseError;

/// Name of the synthetic class wrapping a top-level `main { .. }` block.
pub const MAIN_CLASS: &str = "$Main";

#[derive(Clone, Debug)]
struct SExpr {
    span: Span,
    kind: SKind,
}

#[derive(Clone, Debug)]
enum SKind {
    Var(String),
    This,
    Null,
    Str(String),
    New(String),
    Cast(String, Box<SExpr>),
    Get(Box<SExpr>, String),
    Set(Box<SExpr>, String, Box<SExpr>),
    Call(Box<SExpr>, String, Vec<SExpr>),
    Builtin(String, Vec<SExpr>),
    Concat(Box<SExpr>, Box<SExpr>),
    Let(String, Box<SExpr>, Box<SExpr>),
    /// Evaluate the first, discard its value, continue with the second.
    Seq(Box<SExpr>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>, Box<SExpr>),
}

struct SMethod {
    span: Span,
    name: String,
    params: Vec<(String, String, Span)>,
    ret: (String, Span),
    body: SExpr,
}

struct SClass {
    span: Span,
    name: String,
    parent: Option<(String, Span)>,
    fields: Vec<(String, String, Span)>,
    methods: Vec<SMethod>,
}

enum Stmt {
    Decl(String, SExpr),
    Return(SExpr),
    Expr(SExpr),
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<Span, ParseError> {
        if self.is_sym(s) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<Span, ParseError> {
        if self.is_kw(s) {
            Ok(self.next().span)
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        };
        ParseError::at(self.span(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.next().span;
                Ok((s, span))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn program(&mut self) -> Result<(Vec<SClass>, Option<SExpr>), ParseError> {
        let mut classes = Vec::new();
        let mut main = None;
        loop {
            if matches!(self.peek(), Tok::Eof) {
                break;
            }
            if self.is_kw("main") {
                let span = self.next().span;
                if main.is_some() {
                    return Err(ParseError::at(span, "more than one `main` block"));
                }
                main = Some(self.block(true)?);
                continue;
            }
            classes.push(self.class()?);
        }
        Ok((classes, main))
    }

    fn class(&mut self) -> Result<SClass, ParseError> {
        let span = self.expect_kw("class")?;
        let (name, _) = self.ident()?;
        let parent = if self.is_kw("extends") {
            self.next();
            Some(self.ident()?)
        } else {
            None
        };
        self.expect_sym("{")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        while !self.is_sym("}") {
            let (ty, tspan) = self.ident()?;
            let (member, mspan) = self.ident()?;
            if self.is_sym(";") {
                self.next();
                fields.push((member, ty, mspan));
                continue;
            }
            self.expect_sym("(")?;
            let mut params = Vec::new();
            while !self.is_sym(")") {
                if !params.is_empty() {
                    self.expect_sym(",")?;
                }
                let (pty, _) = self.ident()?;
                let (pname, pspan) = self.ident()?;
                params.push((pname, pty, pspan));
            }
            self.next();
            let body = self.block(true)?;
            methods.push(SMethod {
                span: mspan,
                name: member,
                params,
                ret: (ty, tspan),
                body,
            });
        }
        self.next();
        Ok(SClass {
            span,
            name,
            parent,
            fields,
            methods,
        })
    }

    /// `{ stmt* }` desugared into one expression. `tail` says whether the
    /// block's value is the value of the enclosing method or expression, in
    /// which case a final `return` is permitted.
    fn block(&mut self, tail: bool) -> Result<SExpr, ParseError> {
        let open = self.expect_sym("{")?;
        let mut stmts = Vec::new();
        while !self.is_sym("}") {
            let span = self.span();
            let is_last_return = self.is_kw("return");
            let st = self.stmt(tail)?;
            stmts.push((span, st));
            if is_last_return && !self.is_sym("}") {
                return Err(ParseError::at(span, "`return` must be the last statement of a block"));
            }
        }
        self.next();
        let mut acc: Option<SExpr> = None;
        for (span, st) in stmts.into_iter().rev() {
            acc = Some(match (st, acc) {
                (Stmt::Return(e), None) | (Stmt::Expr(e), None) => e,
                (Stmt::Decl(x, e), None) => SExpr {
                    span,
                    kind: SKind::Let(
                        x.clone(),
                        Box::new(e),
                        Box::new(SExpr {
                            span,
                            kind: SKind::Var(x),
                        }),
                    ),
                },
                (Stmt::Decl(x, e), Some(rest)) => SExpr {
                    span,
                    kind: SKind::Let(x, Box::new(e), Box::new(rest)),
                },
                (Stmt::Expr(e), Some(rest)) => SExpr {
                    span,
                    kind: SKind::Seq(Box::new(e), Box::new(rest)),
                },
                (Stmt::Return(_), Some(_)) => unreachable!(),
            });
        }
        Ok(acc.unwrap_or(SExpr {
            span: open,
            kind: SKind::Null,
        }))
    }

    fn stmt(&mut self, tail: bool) -> Result<Stmt, ParseError> {
        if self.is_kw("return") {
            let span = self.next().span;
            if !tail {
                return Err(ParseError::at(span, "`return` is only allowed in tail position"));
            }
            let e = self.expr()?;
            self.expect_sym(";")?;
            return Ok(Stmt::Return(e));
        }
        if self.is_kw("var") {
            self.next();
            let (x, _) = self.ident()?;
            self.expect_sym("=")?;
            let e = self.expr()?;
            self.expect_sym(";")?;
            return Ok(Stmt::Decl(x, e));
        }
        if self.is_kw("if") {
            // Statement-level conditional; only the last statement of a
            // tail block may return from inside its branches.
            let save = self.pos;
            let e = self.if_expr(tail)?;
            let last = self.is_sym("}");
            if !last && tail {
                self.pos = save;
                let e = self.if_expr(false)?;
                self.eat_semis();
                return Ok(Stmt::Expr(e));
            }
            self.eat_semis();
            return Ok(Stmt::Expr(e));
        }
        if let (Tok::Ident(a), Tok::Ident(_)) = (self.peek(), self.peek_at(1)) {
            if !is_keyword(a) {
                self.next();
                let (x, _) = self.ident()?;
                self.expect_sym("=")?;
                let e = self.expr()?;
                self.expect_sym(";")?;
                return Ok(Stmt::Decl(x, e));
            }
        }
        let e = self.expr()?;
        self.expect_sym(";")?;
        Ok(Stmt::Expr(e))
    }

    fn eat_semis(&mut self) {
        while self.is_sym(";") {
            self.next();
        }
    }

    fn if_expr(&mut self, tail: bool) -> Result<SExpr, ParseError> {
        let span = self.expect_kw("if")?;
        self.expect_sym("(")?;
        let a = self.expr()?;
        self.expect_sym("==")?;
        let b = self.expr()?;
        self.expect_sym(")")?;
        let then = self.block(tail)?;
        let els = if self.is_kw("else") {
            self.next();
            if self.is_kw("if") {
                self.if_expr(tail)?
            } else {
                self.block(tail)?
            }
        } else {
            SExpr {
                span,
                kind: SKind::Null,
            }
        };
        Ok(SExpr {
            span,
            kind: SKind::If(Box::new(a), Box::new(b), Box::new(then), Box::new(els)),
        })
    }

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        if self.is_kw("let") {
            let span = self.next().span;
            let (x, _) = self.ident()?;
            self.expect_sym("=")?;
            let e1 = self.expr()?;
            self.expect_kw("in")?;
            let e2 = self.expr()?;
            return Ok(SExpr {
                span,
                kind: SKind::Let(x, Box::new(e1), Box::new(e2)),
            });
        }
        if self.is_kw("if") {
            return self.if_expr(true);
        }
        let lhs = self.concat()?;
        if self.is_sym("=") {
            let eq = self.span();
            if let SKind::Get(obj, f) = lhs.kind {
                self.next();
                let rhs = self.expr()?;
                return Ok(SExpr {
                    span: lhs.span,
                    kind: SKind::Set(obj, f, Box::new(rhs)),
                });
            }
            return Err(ParseError::at(eq, "only field accesses can be assigned"));
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<SExpr, ParseError> {
        let mut lhs = self.unary()?;
        while self.is_sym("+") {
            self.next();
            let rhs = self.unary()?;
            lhs = SExpr {
                span: lhs.span,
                kind: SKind::Concat(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn is_cast(&self) -> bool {
        if !self.is_sym("(") {
            return false;
        }
        let name_ok = matches!(self.peek_at(1), Tok::Ident(s) if !is_keyword(s));
        let close = matches!(self.peek_at(2), Tok::Sym(")"));
        let follows = match self.peek_at(3) {
            Tok::Ident(s) => s != "in" && s != "else",
            Tok::Str(_) => true,
            Tok::Sym("(") => true,
            _ => false,
        };
        name_ok && close && follows
    }

    fn unary(&mut self) -> Result<SExpr, ParseError> {
        if self.is_cast() {
            let span = self.next().span;
            let (c, _) = self.ident()?;
            self.next();
            let e = self.unary()?;
            return Ok(SExpr {
                span,
                kind: SKind::Cast(c, Box::new(e)),
            });
        }
        self.postfix()
    }

    fn args(&mut self) -> Result<Vec<SExpr>, ParseError> {
        self.expect_sym("(")?;
        let mut args = Vec::new();
        while !self.is_sym(")") {
            if !args.is_empty() {
                self.expect_sym(",")?;
            }
            args.push(self.expr()?);
        }
        self.next();
        Ok(args)
    }

    fn postfix(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.primary()?;
        while self.is_sym(".") {
            self.next();
            let (name, span) = self.ident()?;
            if self.is_sym("(") {
                let args = self.args()?;
                e = SExpr {
                    span,
                    kind: SKind::Call(Box::new(e), name, args),
                };
            } else {
                e = SExpr {
                    span,
                    kind: SKind::Get(Box::new(e), name),
                };
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Str(s) => {
                self.next();
                Ok(SExpr {
                    span,
                    kind: SKind::Str(s),
                })
            }
            Tok::Sym("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("{") => self.block(true),
            Tok::Ident(s) if s == "this" => {
                self.next();
                Ok(SExpr {
                    span,
                    kind: SKind::This,
                })
            }
            Tok::Ident(s) if s == "null" => {
                self.next();
                Ok(SExpr {
                    span,
                    kind: SKind::Null,
                })
            }
            Tok::Ident(s) if s == "new" => {
                self.next();
                let (c, _) = self.ident()?;
                self.expect_sym("(")?;
                if !self.is_sym(")") {
                    return Err(ParseError::at(self.span(), "constructors take no arguments"));
                }
                self.next();
                Ok(SExpr {
                    span,
                    kind: SKind::New(c),
                })
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.next();
                if self.is_sym("(") {
                    let args = self.args()?;
                    Ok(SExpr {
                        span,
                        kind: SKind::Builtin(s, args),
                    })
                } else {
                    Ok(SExpr {
                        span,
                        kind: SKind::Var(s),
                    })
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "class" | "extends" | "return" | "var" | "let" | "in" | "if" | "else" | "new" | "this" | "null"
    )
}

/// Lowers surface expressions to let-normal form.
type AtomsCont<'k, P> = dyn FnMut(&mut P, Vec<Var>) -> Result<Expr, ParseError> + 'k;

struct Lower<'a> {
    classes: &'a HashMap<String, ClassId>,
    params: HashMap<String, usize>,
    scope: Vec<String>,
    taken: &'a HashSet<String>,
    next_temp: &'a mut usize,
    next_label: &'a mut Label,
    spans: &'a mut HashMap<Label, Span>,
}

impl Lower<'_> {
    fn label(&mut self, span: Span) -> Label {
        let l = *self.next_label;
        *self.next_label += 1;
        self.spans.insert(l, span);
        l
    }

    fn mk(&mut self, span: Span, kind: ExprKind) -> Expr {
        let label = self.label(span);
        Expr { label, kind }
    }

    fn fresh(&mut self) -> String {
        loop {
            *self.next_temp += 1;
            let t = format!("$t{}", self.next_temp);
            if !self.taken.contains(&t) {
                return t;
            }
        }
    }

    fn class(&self, name: &str, span: Span) -> Result<ClassId, ParseError> {
        if name == "void" {
            return Ok(ClassId::STRING);
        }
        self.classes
            .get(name)
            .copied()
            .ok_or_else(|| ParseError::at(span, format!("undeclared class `{name}`")))
    }

    fn var(&self, name: &str, span: Span) -> Result<Var, ParseError> {
        if self.scope.iter().any(|s| s == name) {
            return Ok(Var::Local(name.to_string()));
        }
        if let Some(&i) = self.params.get(name) {
            return Ok(Var::Arg(i));
        }
        Err(ParseError::at(span, format!("unbound variable `{name}`")))
    }

    fn bind(&mut self, name: &str, span: Span) -> Result<(), ParseError> {
        if self.params.contains_key(name) {
            return Err(ParseError::at(
                span,
                format!("local `{name}` shadows a parameter"),
            ));
        }
        self.scope.push(name.to_string());
        Ok(())
    }

    /// Lowers `e` to a variable, binding it to a fresh temporary first
    /// unless it already is one.
    fn atom(
        &mut self,
        e: &SExpr,
        k: &mut dyn FnMut(&mut Self, Var) -> Result<Expr, ParseError>,
    ) -> Result<Expr, ParseError> {
        match &e.kind {
            SKind::Var(x) => {
                let v = self.var(x, e.span)?;
                k(self, v)
            }
            SKind::This => k(self, Var::This),
            _ => {
                let label = self.label(e.span);
                let rhs = self.lower(e)?;
                let t = self.fresh();
                self.scope.push(t.clone());
                let body = k(self, Var::Local(t.clone()));
                self.scope.pop();
                Ok(Expr {
                    label,
                    kind: ExprKind::Let(Var::Local(t), Box::new(rhs), Box::new(body?)),
                })
            }
        }
    }

    fn atoms(
        &mut self,
        es: &[SExpr],
        acc: Vec<Var>,
        k: &mut AtomsCont<'_, Self>,
    ) -> Result<Expr, ParseError> {
        match es.split_first() {
            None => k(self, acc),
            Some((first, rest)) => self.atom(first, &mut |this, v| {
                let mut acc = acc.clone();
                acc.push(v);
                this.atoms(rest, acc, k)
            }),
        }
    }

    fn lower(&mut self, e: &SExpr) -> Result<Expr, ParseError> {
        let span = e.span;
        match &e.kind {
            SKind::Var(x) => {
                let v = self.var(x, span)?;
                Ok(self.mk(span, ExprKind::Var(v)))
            }
            SKind::This => Ok(self.mk(span, ExprKind::Var(Var::This))),
            SKind::Null => Ok(self.mk(span, ExprKind::Null)),
            SKind::Str(s) => Ok(self.mk(span, ExprKind::StrLit(s.clone()))),
            SKind::New(c) => {
                let id = self.class(c, span)?;
                if id == ClassId::STRING || id == ClassId::NULL {
                    return Err(ParseError::at(
                        span,
                        format!("cannot instantiate {}", if id == ClassId::STRING { "String" } else { "NullType" }),
                    ));
                }
                Ok(self.mk(span, ExprKind::New(id)))
            }
            SKind::Cast(c, inner) => {
                let id = self.class(c, span)?;
                if id == ClassId::NULL {
                    return Err(ParseError::at(span, "cast to NullType"));
                }
                let label = self.label(span);
                let inner = self.lower(inner)?;
                Ok(Expr {
                    label,
                    kind: ExprKind::Cast(Box::new(inner), id),
                })
            }
            SKind::Get(obj, f) => self.atom(obj, &mut |this, x| {
                Ok(this.mk(span, ExprKind::GetField(x, f.clone())))
            }),
            SKind::Set(obj, f, rhs) => self.atom(obj, &mut |this, x| {
                this.atom(rhs, &mut |this, y| {
                    Ok(this.mk(span, ExprKind::SetField(x.clone(), f.clone(), y)))
                })
            }),
            SKind::Call(obj, m, args) => self.atom(obj, &mut |this, x| {
                this.atoms(args, Vec::new(), &mut |this, ys| {
                    Ok(this.mk(span, ExprKind::Invoke(x.clone(), m.clone(), ys)))
                })
            }),
            SKind::Builtin(f, args) => self.atoms(args, Vec::new(), &mut |this, ys| {
                Ok(this.mk(span, ExprKind::Builtin(f.clone(), ys)))
            }),
            SKind::Concat(a, b) => self.atom(a, &mut |this, x| {
                this.atom(b, &mut |this, y| Ok(this.mk(span, ExprKind::Concat(x.clone(), y))))
            }),
            SKind::Let(x, e1, e2) => {
                let label = self.label(span);
                let rhs = self.lower(e1)?;
                self.bind(x, span)?;
                let body = self.lower(e2);
                self.scope.pop();
                Ok(Expr {
                    label,
                    kind: ExprKind::Let(Var::Local(x.clone()), Box::new(rhs), Box::new(body?)),
                })
            }
            SKind::Seq(e1, e2) => {
                let label = self.label(span);
                let rhs = self.lower(e1)?;
                let t = self.fresh();
                self.scope.push(t.clone());
                let body = self.lower(e2);
                self.scope.pop();
                Ok(Expr {
                    label,
                    kind: ExprKind::Let(Var::Local(t), Box::new(rhs), Box::new(body?)),
                })
            }
            SKind::If(a, b, e1, e2) => self.atom(a, &mut |this, x| {
                this.atom(b, &mut |this, y| {
                    let label = this.label(span);
                    let t = this.lower(e1)?;
                    let f = this.lower(e2)?;
                    Ok(Expr {
                        label,
                        kind: ExprKind::IfEq(x.clone(), y, Box::new(t), Box::new(f)),
                    })
                })
            }),
        }
    }
}

fn collect_idents(toks: &[Token]) -> HashSet<String> {
    toks.iter()
        .filter_map(|t| match &t.tok {
            Tok::Ident(s) => Some(s.clone()),
            _ => None,
        })
        .collect()
}

/// Parses a program, normalizes it, assigns preorder labels and checks
/// well-formedness.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let toks = lex(src)?;
    let taken = collect_idents(&toks);
    let mut parser = Parser { toks, pos: 0 };
    let (mut sclasses, main) = parser.program()?;
    if let Some(body) = main {
        sclasses.push(SClass {
            span: body.span,
            name: MAIN_CLASS.to_string(),
            parent: None,
            fields: Vec::new(),
            methods: vec![SMethod {
                span: body.span,
                name: "main".into(),
                params: Vec::new(),
                ret: ("Object".into(), body.span),
                body,
            }],
        });
    }

    let mut classes = Program::builtin_classes();
    let mut index: HashMap<String, ClassId> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.clone(), ClassId(i as u32)))
        .collect();
    for sc in &sclasses {
        if index.contains_key(&sc.name) {
            return Err(ParseError::at(sc.span, format!("class `{}` declared twice", sc.name)));
        }
        index.insert(sc.name.clone(), ClassId(classes.len() as u32));
        classes.push(ClassDef::new(sc.name.clone(), None));
    }
    for (i, sc) in sclasses.iter().enumerate() {
        let parent = match &sc.parent {
            None => ClassId::OBJECT,
            Some((p, span)) => *index
                .get(p)
                .ok_or_else(|| ParseError::at(*span, format!("undeclared class `{p}`")))?,
        };
        let def = &mut classes[i + 3];
        def.parent = Some(parent);
        for (f, ty, span) in &sc.fields {
            let t = if ty == "void" {
                ClassId::STRING
            } else {
                *index
                    .get(ty)
                    .ok_or_else(|| ParseError::at(*span, format!("undeclared class `{ty}`")))?
            };
            if def.fields.insert(f.clone(), t).is_some() {
                return Err(ParseError::at(*span, format!("field `{f}` declared twice")));
            }
        }
        for m in &sc.methods {
            if !def.methods.insert(m.name.clone()) {
                return Err(ParseError::at(m.span, format!("method `{}` declared twice", m.name)));
            }
        }
    }
    let mut program = Program::from_classes(classes);
    inherit_members(&mut program);

    let mut next_temp = 0usize;
    let mut next_label: Label = 1;
    let mut spans = HashMap::new();
    let mut bodies: Vec<(ClassId, String, MethodDef)> = Vec::new();
    for (i, sc) in sclasses.iter().enumerate() {
        let cid = ClassId(i as u32 + 3);
        for m in &sc.methods {
            let mut params = Vec::new();
            let mut pmap = HashMap::new();
            for (k, (pname, pty, pspan)) in m.params.iter().enumerate() {
                let t = if pty == "void" {
                    ClassId::STRING
                } else {
                    *index
                        .get(pty)
                        .ok_or_else(|| ParseError::at(*pspan, format!("undeclared class `{pty}`")))?
                };
                if pmap.insert(pname.clone(), k + 1).is_some() {
                    return Err(ParseError::at(*pspan, format!("parameter `{pname}` declared twice")));
                }
                params.push((pname.clone(), t));
            }
            let mut lower = Lower {
                classes: &index,
                params: pmap,
                scope: Vec::new(),
                taken: &taken,
                next_temp: &mut next_temp,
                next_label: &mut next_label,
                spans: &mut spans,
            };
            let ret = lower.class(&m.ret.0, m.ret.1)?;
            let body = lower.lower(&m.body)?;
            bodies.push((cid, m.name.clone(), MethodDef { params, ret, body }));
        }
    }
    for (cid, name, def) in bodies {
        program.class_mut(cid).bodies.insert(name, def);
    }
    program.set_spans(spans);
    program.relabel_preorder();
    if let Err(diags) = program.validate() {
        return Err(ParseError::wellformed(diags));
    }
    Ok(program)
}

/// Parses a method-free closed expression as the body of a synthetic
/// `main`, alongside the classes of `classes_src`.
pub fn parse_with_main(classes_src: &str, main_src: &str) -> Result<Program, ParseError> {
    parse_program(&format!("{classes_src}\nmain {{ {main_src} }}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_ONE: &str = r#"
class C {
    String main() {
        String a = getString();
        D f1 = new D();
        f1.cD(a);
        D f2 = new D();
        f2.cD("test");
        putString(f2.s);
        return "";
    }
}
class D {
    String s;
    String cD(String s0) { this.s = s0; return ""; }
}
"#;

    #[test]
    fn parses_example_one() {
        let p = parse_program(EXAMPLE_ONE).unwrap();
        let c = p.class_id("C").unwrap();
        let d = p.class_id("D").unwrap();
        assert_eq!(p.field_type(d, "s"), Some(ClassId::STRING));
        let main = &p.class(c).bodies["main"];
        match &main.body.kind {
            ExprKind::Let(Var::Local(a), rhs, _) => {
                assert_eq!(a, "a");
                assert!(matches!(&rhs.kind, ExprKind::Builtin(f, args) if f == "getString" && args.is_empty()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nested_arguments_are_let_normalized() {
        let p = parse_program(
            "class D { String s; } main { D f2 = new D(); putString(f2.s); }",
        )
        .unwrap();
        let m = p.class_id(MAIN_CLASS).unwrap();
        let body = &p.class(m).bodies["main"].body;
        let ExprKind::Let(_, _, rest) = &body.kind else { panic!() };
        let ExprKind::Let(Var::Local(t), rhs, call) = &rest.kind else { panic!("{rest:?}") };
        assert!(matches!(&rhs.kind, ExprKind::GetField(Var::Local(f), s) if f == "f2" && s == "s"));
        assert!(matches!(&call.kind, ExprKind::Builtin(f, a) if f == "putString" && a == &vec![Var::Local(t.clone())]));
    }

    #[test]
    fn new_string_is_an_error() {
        let e = parse_program("main { new String(); }").unwrap_err();
        assert!(e.message.contains("cannot instantiate String"), "{e}");
    }

    #[test]
    fn temporaries_avoid_user_names() {
        let p = parse_program("main { var $t1 = \"a\"; putString(id($t1)); }").unwrap();
        let m = p.class_id(MAIN_CLASS).unwrap();
        let text = format!("{:?}", p.class(m).bodies["main"].body);
        assert!(text.contains("$t2"), "{text}");
    }

    #[test]
    fn labels_are_preorder_and_unique() {
        let p = parse_program(EXAMPLE_ONE).unwrap();
        let mut labels: Vec<Label> = p
            .bodies()
            .flat_map(|(_, _, d)| d.body.preorder().into_iter().map(|e| e.label).collect::<Vec<_>>())
            .collect();
        let n = labels.len();
        labels.sort();
        assert_eq!(labels, (1..=n as Label).collect::<Vec<_>>());
        assert!(p.spans().len() == n);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_program("class A {\n  String f\n}").unwrap_err();
        assert_eq!(e.line, 3);
        let e = parse_program("main { x; }").unwrap_err();
        assert!(e.message.contains("unbound variable `x`"));
    }

    #[test]
    fn return_must_be_last() {
        let e = parse_program("main { return null; null; }").unwrap_err();
        assert!(e.message.contains("last statement"));
    }

    #[test]
    fn local_may_not_shadow_parameter() {
        let e = parse_program("class A { Object m(Object x) { var x = null; return x; } }").unwrap_err();
        assert!(e.message.contains("shadows"));
    }
}
