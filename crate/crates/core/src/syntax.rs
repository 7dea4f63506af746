//! Abstract syntax of FJEUCS programs: labelled let-normal-form expressions,
//! the class hierarchy, and the standard (class-level) typing of members.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

/// Program position. Every expression node carries one, unique per program.
pub type Label = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const OBJECT: ClassId = ClassId(0);
    pub const STRING: ClassId = ClassId(1);
    pub const NULL: ClassId = ClassId(2);

    fn index(self) -> usize {
        self.0 as usize
    }
}

/// Source position of a surface construct.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Variables. Formal arguments use canonical 1-based slots so that method
/// bodies never depend on the names the programmer picked.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    This,
    Arg(usize),
    Local(String),
}

impl Var {
    pub fn local(name: impl Into<String>) -> Var {
        Var::Local(name.into())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::This => f.write_str("this"),
            Var::Arg(i) => write!(f, "x{i}"),
            Var::Local(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub label: Label,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Var(Var),
    Let(Var, Box<Expr>, Box<Expr>),
    IfEq(Var, Var, Box<Expr>, Box<Expr>),
    Null,
    New(ClassId),
    Cast(Box<Expr>, ClassId),
    GetField(Var, String),
    SetField(Var, String, Var),
    Invoke(Var, String, Vec<Var>),
    Builtin(String, Vec<Var>),
    StrLit(String),
    Concat(Var, Var),
}

impl Expr {
    pub fn new(label: Label, kind: ExprKind) -> Expr {
        Expr { label, kind }
    }

    /// Immediate sub-expressions, in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Let(_, a, b) | ExprKind::IfEq(_, _, a, b) => vec![a, b],
            ExprKind::Cast(e, _) => vec![e],
            _ => Vec::new(),
        }
    }

    /// Preorder traversal.
    pub fn preorder(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(e) = stack.pop() {
            out.push(e);
            let mut kids = e.children();
            kids.reverse();
            stack.extend(kids);
        }
        out
    }

    /// Rewrites every label in preorder starting from `next`, returning the
    /// pairs (old, new) so callers can carry side tables along.
    pub fn relabel(&mut self, next: &mut Label, map: &mut Vec<(Label, Label)>) {
        map.push((self.label, *next));
        self.label = *next;
        *next += 1;
        match &mut self.kind {
            ExprKind::Let(_, a, b) | ExprKind::IfEq(_, _, a, b) => {
                a.relabel(next, map);
                b.relabel(next, map);
            }
            ExprKind::Cast(e, _) => e.relabel(next, map),
            _ => {}
        }
    }

    /// Free variables of the expression.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        fn go(e: &Expr, bound: &mut Vec<Var>, out: &mut BTreeSet<Var>) {
            let mut use_var = |v: &Var, bound: &Vec<Var>| {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            };
            match &e.kind {
                ExprKind::Var(x) | ExprKind::GetField(x, _) => use_var(x, bound),
                ExprKind::Let(x, a, b) => {
                    go(a, bound, out);
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                ExprKind::IfEq(x, y, a, b) => {
                    use_var(x, bound);
                    use_var(y, bound);
                    go(a, bound, out);
                    go(b, bound, out);
                }
                ExprKind::Null | ExprKind::New(_) | ExprKind::StrLit(_) => {}
                ExprKind::Cast(a, _) => go(a, bound, out),
                ExprKind::SetField(x, _, y) | ExprKind::Concat(x, y) => {
                    use_var(x, bound);
                    use_var(y, bound);
                }
                ExprKind::Invoke(x, _, ys) => {
                    use_var(x, bound);
                    for y in ys {
                        use_var(y, bound);
                    }
                }
                ExprKind::Builtin(_, ys) => {
                    for y in ys {
                        use_var(y, bound);
                    }
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodDef {
    /// Parameter display names with their standard classes.
    pub params: Vec<(String, ClassId)>,
    pub ret: ClassId,
    pub body: Expr,
}

impl MethodDef {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    /// Immediate superclass; `None` for `Object` and `NullType`.
    pub parent: Option<ClassId>,
    /// `fields(C)` including inherited fields, with their standard class `F0`.
    pub fields: BTreeMap<String, ClassId>,
    /// `methods(C)` including inherited names.
    pub methods: BTreeSet<String>,
    /// Bodies declared (or overridden) in this class.
    pub bodies: BTreeMap<String, MethodDef>,
}

impl ClassDef {
    pub fn new(name: impl Into<String>, parent: Option<ClassId>) -> ClassDef {
        ClassDef {
            name: name.into(),
            parent,
            fields: BTreeMap::new(),
            methods: BTreeSet::new(),
            bodies: BTreeMap::new(),
        }
    }
}

/// A well-formedness violation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WfDiagnostic {
    pub kind: WfKind,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WfKind {
    SubclassNotTree,
    FieldInheritance,
    MethodInheritance,
    FieldTypeVaries,
    ReservedClass,
    MissingBody,
    Overloading,
    DuplicateLabel,
    BadNew,
    BadCast,
    UnknownClass,
    FreeVariable,
}

impl fmt::Display for WfDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("undeclared class `{0}`")]
    UnknownClass(String),
    #[error("undeclared class id {0}")]
    UnknownClassId(u32),
}

/// An FJEUCS program together with its standard class table `(F0, M0)`.
#[derive(Clone, Debug)]
pub struct Program {
    classes: Vec<ClassDef>,
    index: HashMap<String, ClassId>,
    /// `ancestors[c]` lists `c`, its parent, ..., `Object`. Empty for NullType.
    ancestors: Vec<Vec<ClassId>>,
    spans: HashMap<Label, Span>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.classes == other.classes
    }
}

impl Program {
    /// Builds a program from raw class definitions. The first three entries
    /// must be `Object`, `String` and `NullType` in that order; `fields` and
    /// `methods` are taken as given (no inheritance is computed).
    pub fn from_classes(classes: Vec<ClassDef>) -> Program {
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.clone(), ClassId(i as u32)))
            .collect();
        let ancestors = (0..classes.len())
            .map(|i| {
                if i == ClassId::NULL.index() {
                    return Vec::new();
                }
                let mut chain = vec![ClassId(i as u32)];
                let mut seen: HashSet<ClassId> = chain.iter().copied().collect();
                let mut cur = classes[i].parent;
                while let Some(p) = cur {
                    if p.index() >= classes.len() || !seen.insert(p) {
                        break;
                    }
                    chain.push(p);
                    cur = classes[p.index()].parent;
                }
                chain
            })
            .collect();
        Program {
            classes,
            index,
            ancestors,
            spans: HashMap::new(),
        }
    }

    /// The three predefined classes.
    pub fn builtin_classes() -> Vec<ClassDef> {
        vec![
            ClassDef::new("Object", None),
            ClassDef::new("String", Some(ClassId::OBJECT)),
            ClassDef::new("NullType", None),
        ]
    }

    pub fn classes(&self) -> impl Iterator<Item = (ClassId, &ClassDef)> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| (ClassId(i as u32), c))
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class(&self, id: ClassId) -> &ClassDef {
        &self.classes[id.index()]
    }

    pub fn class_mut(&mut self, id: ClassId) -> &mut ClassDef {
        &mut self.classes[id.index()]
    }

    pub fn class_name(&self, id: ClassId) -> &str {
        self.classes
            .get(id.index())
            .map(|c| c.name.as_str())
            .unwrap_or("?")
    }

    pub fn class_id(&self, name: &str) -> Result<ClassId, SyntaxError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| SyntaxError::UnknownClass(name.to_string()))
    }

    fn check_id(&self, c: ClassId) -> Result<(), SyntaxError> {
        if c.index() < self.classes.len() {
            Ok(())
        } else {
            Err(SyntaxError::UnknownClassId(c.0))
        }
    }

    pub fn spans(&self) -> &HashMap<Label, Span> {
        &self.spans
    }

    pub fn span(&self, label: Label) -> Option<Span> {
        self.spans.get(&label).copied()
    }

    pub fn set_spans(&mut self, spans: HashMap<Label, Span>) {
        self.spans = spans;
    }

    /// Strict superclasses of `c` from the immediate parent up to `Object`.
    pub fn superclasses(&self, c: ClassId) -> &[ClassId] {
        let chain = &self.ancestors[c.index()];
        if chain.is_empty() {
            chain
        } else {
            &chain[1..]
        }
    }

    /// `c` followed by its strict superclasses.
    pub fn ancestors(&self, c: ClassId) -> &[ClassId] {
        &self.ancestors[c.index()]
    }

    /// Reflexive-transitive subclass relation `c1 ⪯ c2`.
    pub fn subclass_of(&self, c1: ClassId, c2: ClassId) -> bool {
        c1 == c2 || c1 == ClassId::NULL || self.ancestors[c1.index()].contains(&c2)
    }

    /// Checked variant of [`Program::subclass_of`].
    pub fn try_subclass_of(&self, c1: ClassId, c2: ClassId) -> Result<bool, SyntaxError> {
        self.check_id(c1)?;
        self.check_id(c2)?;
        Ok(self.subclass_of(c1, c2))
    }

    /// Smallest common superclass. Always defined since every class sits
    /// below `Object`.
    pub fn least_common_superclass(&self, c1: ClassId, c2: ClassId) -> ClassId {
        if c1 == ClassId::NULL {
            return c2;
        }
        if c2 == ClassId::NULL {
            return c1;
        }
        self.ancestors[c1.index()]
            .iter()
            .copied()
            .find(|&a| self.subclass_of(c2, a))
            .unwrap_or(ClassId::OBJECT)
    }

    pub fn try_least_common_superclass(
        &self,
        c1: ClassId,
        c2: ClassId,
    ) -> Result<ClassId, SyntaxError> {
        self.check_id(c1)?;
        self.check_id(c2)?;
        Ok(self.least_common_superclass(c1, c2))
    }

    /// All classes `d` with `d ⪯ c`, excluding NullType.
    pub fn subclasses(&self, c: ClassId) -> Vec<ClassId> {
        self.classes()
            .map(|(id, _)| id)
            .filter(|&d| d != ClassId::NULL && self.subclass_of(d, c))
            .collect()
    }

    /// Immediate subclasses of `c` (the tree successor relation).
    pub fn children(&self, c: ClassId) -> Vec<ClassId> {
        self.classes()
            .filter(|(_, d)| d.parent == Some(c))
            .map(|(id, _)| id)
            .collect()
    }

    /// Depth of the class tree (Object has depth 1).
    pub fn depth(&self) -> usize {
        self.ancestors.iter().map(Vec::len).max().unwrap_or(1)
    }

    /// `mtable(C, m)`: the implementation that runs for receivers of class
    /// `C`, found in `C` or the nearest ancestor that declares it.
    pub fn mtable(&self, c: ClassId, m: &str) -> Option<(ClassId, &MethodDef)> {
        if !self.class(c).methods.contains(m) {
            return None;
        }
        self.ancestors[c.index()]
            .iter()
            .find_map(|&a| self.class(a).bodies.get(m).map(|d| (a, d)))
    }

    /// Standard method typing `M0(C, m)`.
    pub fn method_type(&self, c: ClassId, m: &str) -> Option<(Vec<ClassId>, ClassId)> {
        self.mtable(c, m)
            .map(|(_, d)| (d.params.iter().map(|p| p.1).collect(), d.ret))
    }

    /// Standard field typing `F0(C, f)`.
    pub fn field_type(&self, c: ClassId, f: &str) -> Option<ClassId> {
        self.class(c).fields.get(f).copied()
    }

    /// Every method body with its declaring class, in declaration order.
    pub fn bodies(&self) -> impl Iterator<Item = (ClassId, &str, &MethodDef)> {
        self.classes().flat_map(|(id, c)| {
            c.bodies
                .iter()
                .map(move |(name, def)| (id, name.as_str(), def))
        })
    }

    pub fn max_label(&self) -> Label {
        self.bodies()
            .flat_map(|(_, _, d)| d.body.preorder())
            .map(|e| e.label)
            .max()
            .unwrap_or(0)
    }

    /// Positions of `new` expressions together with their class.
    pub fn allocation_sites(&self) -> Vec<(Label, ClassId)> {
        let mut out = Vec::new();
        for (_, _, def) in self.bodies() {
            for e in def.body.preorder() {
                if let ExprKind::New(c) = e.kind {
                    out.push((e.label, c));
                }
            }
        }
        out
    }

    /// Positions of method invocations.
    pub fn call_sites(&self) -> Vec<Label> {
        let mut out = Vec::new();
        for (_, _, def) in self.bodies() {
            for e in def.body.preorder() {
                if let ExprKind::Invoke(..) = e.kind {
                    out.push(e.label);
                }
            }
        }
        out
    }

    /// Reassigns all labels in preorder, classes and methods in declaration
    /// order, starting at 1. Source spans follow their nodes.
    pub fn relabel_preorder(&mut self) {
        let mut next: Label = 1;
        let mut map = Vec::new();
        for class in &mut self.classes {
            for def in class.bodies.values_mut() {
                def.body.relabel(&mut next, &mut map);
            }
        }
        let old = std::mem::take(&mut self.spans);
        self.spans = map
            .into_iter()
            .filter_map(|(o, n)| old.get(&o).map(|s| (n, *s)))
            .collect();
    }

    /// Returns the list of well-formedness violations; empty iff well-formed.
    pub fn check_wellformed(&self) -> Vec<WfDiagnostic> {
        let mut out = Vec::new();
        macro_rules! diag {
            ($kind:expr, $msg:expr $(,)?) => {
                out.push(WfDiagnostic { kind: $kind, message: $msg })
            };
        }

        let n = self.classes.len();
        if n < 3
            || self.classes[0].name != "Object"
            || self.classes[1].name != "String"
            || self.classes[2].name != "NullType"
        {
            diag!(
                WfKind::ReservedClass,
                "predefined classes Object, String, NullType missing".into(),
            );
            return out;
        }
        let mut names = HashSet::new();
        for (id, c) in self.classes() {
            if !names.insert(c.name.as_str()) {
                diag!(WfKind::ReservedClass, format!("class `{}` declared twice", c.name));
            }
            if id == ClassId::OBJECT || id == ClassId::NULL {
                if c.parent.is_some() {
                    diag!(
                        WfKind::SubclassNotTree,
                        format!("subclass relation not a tree: `{}` has a superclass", c.name),
                    );
                }
                continue;
            }
            match c.parent {
                None => diag!(
                    WfKind::SubclassNotTree,
                    format!("subclass relation not a tree: `{}` has no superclass", c.name),
                ),
                Some(p) if p.index() >= n => diag!(
                    WfKind::UnknownClass,
                    format!("superclass of `{}` is undeclared", c.name),
                ),
                Some(p) if p == ClassId::NULL => diag!(
                    WfKind::SubclassNotTree,
                    format!("subclass relation not a tree: `{}` extends NullType", c.name),
                ),
                Some(p) if p == ClassId::STRING => diag!(
                    WfKind::ReservedClass,
                    format!("`{}` may not extend String", c.name),
                ),
                Some(_) => {
                    if self.ancestors[id.index()].last() != Some(&ClassId::OBJECT) {
                        diag!(
                            WfKind::SubclassNotTree,
                            format!("subclass relation not a tree: cycle through `{}`", c.name),
                        );
                    }
                }
            }
        }
        if self.classes[1].parent != Some(ClassId::OBJECT) {
            diag!(
                WfKind::ReservedClass,
                "String must be an immediate subclass of Object".into(),
            );
        }
        for special in [ClassId::STRING, ClassId::NULL] {
            let c = self.class(special);
            if !c.fields.is_empty() || !c.methods.is_empty() || !c.bodies.is_empty() {
                diag!(
                    WfKind::ReservedClass,
                    format!("`{}` may not have fields or methods", c.name),
                );
            }
        }
        if !out.is_empty() {
            return out;
        }

        // Inheritance of members and invariance of the standard typing.
        for (id, c) in self.classes() {
            if let Some(p) = c.parent {
                let parent = self.class(p);
                for (f, ty) in &parent.fields {
                    match c.fields.get(f) {
                        None => diag!(
                            WfKind::FieldInheritance,
                            format!(
                                "field inheritance violated: `{}` lacks field `{f}` of `{}`",
                                c.name, parent.name
                            ),
                        ),
                        Some(t) if t != ty => diag!(
                            WfKind::FieldTypeVaries,
                            format!(
                                "field `{f}` has type {} in `{}` but {} in `{}`",
                                self.class_name(*t),
                                c.name,
                                self.class_name(*ty),
                                parent.name
                            ),
                        ),
                        _ => {}
                    }
                }
                for m in &parent.methods {
                    if !c.methods.contains(m) {
                        diag!(
                            WfKind::MethodInheritance,
                            format!(
                                "method inheritance violated: `{}` lacks method `{m}` of `{}`",
                                c.name, parent.name
                            ),
                        );
                    }
                }
            }
            for (f, ty) in &c.fields {
                if ty.index() >= n || *ty == ClassId::NULL {
                    diag!(
                        WfKind::UnknownClass,
                        format!("field `{f}` of `{}` has an invalid type", c.name),
                    );
                }
            }
            for m in &c.methods {
                if self.mtable(id, m).is_none() {
                    diag!(
                        WfKind::MissingBody,
                        format!("no implementation of `{}.{m}`", c.name),
                    );
                }
            }
            for m in c.bodies.keys() {
                if !c.methods.contains(m) {
                    diag!(
                        WfKind::MethodInheritance,
                        format!("body for `{}.{m}` but `{m}` not in methods", c.name),
                    );
                }
            }
        }

        // One arity per method name.
        let mut arity: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (id, name, def) in self.bodies() {
            match arity.get(name) {
                Some(&(a, first)) if a != def.arity() => diag!(
                    WfKind::Overloading,
                    format!(
                        "method `{name}` has arity {} in `{}` but {a} in `{first}`",
                        def.arity(),
                        self.class_name(id)
                    ),
                ),
                Some(_) => {}
                None => {
                    arity.insert(name, (def.arity(), self.class_name(id)));
                }
            }
        }

        // Labels, allocation/cast side conditions and free variables.
        let mut labels = HashSet::new();
        for (id, name, def) in self.bodies() {
            for e in def.body.preorder() {
                if !labels.insert(e.label) {
                    diag!(
                        WfKind::DuplicateLabel,
                        format!("label {} appears more than once", e.label),
                    );
                }
                match &e.kind {
                    ExprKind::New(c) if c.index() >= n => {
                        diag!(WfKind::UnknownClass, format!("`new` of undeclared class in `{name}`"))
                    }
                    ExprKind::New(c) if *c == ClassId::STRING || *c == ClassId::NULL => diag!(
                        WfKind::BadNew,
                        format!("cannot instantiate {}", self.class_name(*c)),
                    ),
                    ExprKind::Cast(_, c) if c.index() >= n => {
                        diag!(WfKind::UnknownClass, format!("cast to undeclared class in `{name}`"))
                    }
                    ExprKind::Cast(_, c) if *c == ClassId::NULL => {
                        diag!(WfKind::BadCast, "cast to NullType".into())
                    }
                    _ => {}
                }
            }
            for v in def.body.free_vars() {
                let ok = match &v {
                    Var::This => true,
                    Var::Arg(i) => *i >= 1 && *i <= def.arity(),
                    Var::Local(_) => false,
                };
                if !ok {
                    diag!(
                        WfKind::FreeVariable,
                        format!(
                            "variable `{v}` is free in `{}.{name}`",
                            self.class_name(id)
                        ),
                    );
                }
            }
        }
        out
    }

    /// Convenience: `Ok(())` when well-formed.
    pub fn validate(&self) -> Result<(), Vec<WfDiagnostic>> {
        let d = self.check_wellformed();
        if d.is_empty() {
            Ok(())
        } else {
            Err(d)
        }
    }
}

/// Incremental construction of a [`Program`] for hand-built ASTs. Fields and
/// method names are inherited automatically when the program is built.
#[derive(Default)]
pub struct ProgramBuilder {
    classes: Vec<ClassDef>,
    parents: Vec<Option<String>>,
}

impl ProgramBuilder {
    pub fn new() -> ProgramBuilder {
        let classes = Program::builtin_classes();
        ProgramBuilder {
            parents: vec![None, Some("Object".into()), None],
            classes,
        }
    }

    fn id(&self, name: &str) -> ClassId {
        let pos = self
            .classes
            .iter()
            .position(|c| c.name == name)
            .unwrap_or_else(|| panic!("class `{name}` not declared in builder"));
        ClassId(pos as u32)
    }

    /// Declares a class; the parent may be declared later.
    pub fn class(&mut self, name: &str, parent: &str) -> ClassId {
        self.classes.push(ClassDef::new(name, None));
        self.parents.push(Some(parent.to_string()));
        ClassId(self.classes.len() as u32 - 1)
    }

    pub fn class_id(&self, name: &str) -> ClassId {
        self.id(name)
    }

    pub fn field(&mut self, class: &str, field: &str, ty: &str) -> &mut Self {
        let ty = self.id(ty);
        let c = self.id(class);
        self.classes[c.index()].fields.insert(field.to_string(), ty);
        self
    }

    pub fn method(
        &mut self,
        class: &str,
        name: &str,
        params: &[(&str, &str)],
        ret: &str,
        body: Expr,
    ) -> &mut Self {
        let params = params
            .iter()
            .map(|(n, t)| (n.to_string(), self.id(t)))
            .collect();
        let ret = self.id(ret);
        let c = self.id(class);
        let cls = &mut self.classes[c.index()];
        cls.methods.insert(name.to_string());
        cls.bodies
            .insert(name.to_string(), MethodDef { params, ret, body });
        self
    }

    pub fn build(mut self) -> Program {
        for i in 0..self.classes.len() {
            let parent = self.parents[i].as_ref().map(|p| self.id(p));
            self.classes[i].parent = parent;
        }
        let mut program = Program::from_classes(self.classes);
        inherit_members(&mut program);
        program
    }
}

/// Copies fields and method names down the class tree (top-down).
pub fn inherit_members(program: &mut Program) {
    let order = {
        let mut ids: Vec<ClassId> = program.classes().map(|(id, _)| id).collect();
        ids.sort_by_key(|c| program.ancestors[c.index()].len());
        ids
    };
    for c in order {
        if let Some(p) = program.class(c).parent {
            if p.index() >= program.classes.len() || program.ancestors[c.index()].len() < 2 {
                continue;
            }
            let (fields, methods) = {
                let parent = program.class(p);
                (parent.fields.clone(), parent.methods.clone())
            };
            let cls = program.class_mut(c);
            for (f, t) in fields {
                cls.fields.entry(f).or_insert(t);
            }
            cls.methods.extend(methods);
        }
    }
}
