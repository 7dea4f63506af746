//! Big-step reference interpreter producing values, heaps and event traces.
//! Optionally records the abstract region of every allocation so that final
//! heaps can be checked against an inferred class table.

use std::collections::BTreeMap;
use std::fmt;

use crate::contexts::{Context, ContextPolicy, RegionKey};
use crate::policy::{Chooser, Policy, Word};
use crate::syntax::{ClassId, Expr, ExprKind, Label, Program, Var};

pub type Loc = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Null,
    Loc(Loc),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Loc(l) => write!(f, "#{l}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HeapObj {
    Obj {
        class: ClassId,
        fields: BTreeMap<String, Value>,
        /// Allocation region when run in instrumented mode.
        region: Option<RegionKey>,
    },
    Str {
        lit: String,
        word: Word,
    },
}

/// Locations are handed out sequentially and never reused.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Heap {
    objs: Vec<HeapObj>,
}

impl Heap {
    pub fn new() -> Heap {
        Heap::default()
    }

    pub fn alloc(&mut self, obj: HeapObj) -> Loc {
        self.objs.push(obj);
        self.objs.len() - 1
    }

    pub fn get(&self, l: Loc) -> Option<&HeapObj> {
        self.objs.get(l)
    }

    pub fn get_mut(&mut self, l: Loc) -> Option<&mut HeapObj> {
        self.objs.get_mut(l)
    }

    pub fn len(&self) -> usize {
        self.objs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Loc, &HeapObj)> {
        self.objs.iter().enumerate()
    }

    /// `classOf_h(v)`.
    pub fn class_of(&self, v: Value) -> ClassId {
        match v {
            Value::Null => ClassId::NULL,
            Value::Loc(l) => match &self.objs[l] {
                HeapObj::Obj { class, .. } => *class,
                HeapObj::Str { .. } => ClassId::STRING,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalResult {
    pub value: Value,
    pub heap: Heap,
    pub trace: Word,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StuckReason {
    NullDereference,
    CastFailure,
    MissingMethod,
    MissingField,
    NotAString,
    NotAnObject,
    UnboundVariable,
    ArityMismatch,
    BuiltinFailure,
}

impl fmt::Display for StuckReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StuckReason::NullDereference => "null dereference",
            StuckReason::CastFailure => "cast failure",
            StuckReason::MissingMethod => "missing method",
            StuckReason::MissingField => "missing field",
            StuckReason::NotAString => "string operation on a non-string",
            StuckReason::NotAnObject => "object operation on a string",
            StuckReason::UnboundVariable => "unbound variable",
            StuckReason::ArityMismatch => "arity mismatch",
            StuckReason::BuiltinFailure => "builtin failure",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Done(EvalResult),
    Stuck { reason: StuckReason, label: Label },
    OutOfFuel,
}

impl Outcome {
    pub fn done(&self) -> Option<&EvalResult> {
        match self {
            Outcome::Done(r) => Some(r),
            _ => None,
        }
    }
}

pub const DEFAULT_FUEL: u64 = 1_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub fuel: u64,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            fuel: DEFAULT_FUEL,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

enum Halt {
    Stuck(StuckReason, Label),
    OutOfFuel,
}

type Store = Vec<(Var, Value)>;

pub struct Interpreter<'a> {
    program: &'a Program,
    policy: &'a Policy,
    contexts: Option<&'a dyn ContextPolicy>,
    chooser: &'a mut dyn Chooser,
    heap: Heap,
    trace: Word,
    fuel: u64,
    depth: usize,
    max_depth: usize,
}

impl<'a> Interpreter<'a> {
    pub fn new(
        program: &'a Program,
        policy: &'a Policy,
        chooser: &'a mut dyn Chooser,
        limits: Limits,
    ) -> Interpreter<'a> {
        Interpreter {
            program,
            policy,
            contexts: None,
            chooser,
            heap: Heap::new(),
            trace: Vec::new(),
            fuel: limits.fuel,
            depth: 0,
            max_depth: limits.max_depth,
        }
    }

    /// Records allocation regions following the given context policy.
    pub fn instrumented(mut self, contexts: &'a dyn ContextPolicy) -> Interpreter<'a> {
        self.contexts = Some(contexts);
        self
    }

    pub fn heap_mut(&mut self) -> &mut Heap {
        &mut self.heap
    }

    fn lookup(store: &Store, x: &Var, label: Label) -> Result<Value, Halt> {
        store
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, v)| *v)
            .ok_or(Halt::Stuck(StuckReason::UnboundVariable, label))
    }

    fn string(&self, v: Value, label: Label) -> Result<(String, Word), Halt> {
        match v {
            Value::Null => Err(Halt::Stuck(StuckReason::NullDereference, label)),
            Value::Loc(l) => match &self.heap.objs[l] {
                HeapObj::Str { lit, word } => Ok((lit.clone(), word.clone())),
                HeapObj::Obj { .. } => Err(Halt::Stuck(StuckReason::NotAString, label)),
            },
        }
    }

    fn object(&self, v: Value, label: Label) -> Result<Loc, Halt> {
        match v {
            Value::Null => Err(Halt::Stuck(StuckReason::NullDereference, label)),
            Value::Loc(l) => match &self.heap.objs[l] {
                HeapObj::Obj { .. } => Ok(l),
                HeapObj::Str { .. } => Err(Halt::Stuck(StuckReason::NotAnObject, label)),
            },
        }
    }

    fn tick(&mut self) -> Result<(), Halt> {
        if self.fuel == 0 {
            return Err(Halt::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    pub fn new_object(&mut self, class: ClassId, region: Option<RegionKey>) -> Loc {
        let fields = self
            .program
            .class(class)
            .fields
            .keys()
            .map(|f| (f.clone(), Value::Null))
            .collect();
        self.heap.alloc(HeapObj::Obj {
            class,
            fields,
            region,
        })
    }

    fn eval(&mut self, store: &mut Store, e: &Expr, z: &Context) -> Result<Value, Halt> {
        let base = store.len();
        let mut cur = e;
        loop {
            self.tick()?;
            match &cur.kind {
                ExprKind::Let(x, e1, e2) => {
                    let v = self.eval(store, e1, z)?;
                    store.push((x.clone(), v));
                    cur = e2;
                }
                ExprKind::IfEq(x, y, a, b) => {
                    let vx = Self::lookup(store, x, cur.label)?;
                    let vy = Self::lookup(store, y, cur.label)?;
                    cur = if vx == vy { a } else { b };
                }
                _ => {
                    let r = self.eval_leaf(store, cur, z);
                    store.truncate(base);
                    return r;
                }
            }
        }
    }

    fn eval_leaf(&mut self, store: &mut Store, e: &Expr, z: &Context) -> Result<Value, Halt> {
        let label = e.label;
        match &e.kind {
            ExprKind::Var(x) => Self::lookup(store, x, label),
            ExprKind::Null => Ok(Value::Null),
            ExprKind::New(c) => {
                let region = self.contexts.map(|cp| cp.psi(z, label));
                Ok(Value::Loc(self.new_object(*c, region)))
            }
            ExprKind::Cast(inner, c) => {
                let v = self.eval(store, inner, z)?;
                if self.program.subclass_of(self.heap.class_of(v), *c) {
                    Ok(v)
                } else {
                    Err(Halt::Stuck(StuckReason::CastFailure, label))
                }
            }
            ExprKind::GetField(x, f) => {
                let l = self.object(Self::lookup(store, x, label)?, label)?;
                match &self.heap.objs[l] {
                    HeapObj::Obj { fields, .. } => fields
                        .get(f)
                        .copied()
                        .ok_or(Halt::Stuck(StuckReason::MissingField, label)),
                    HeapObj::Str { .. } => unreachable!(),
                }
            }
            ExprKind::SetField(x, f, y) => {
                let l = self.object(Self::lookup(store, x, label)?, label)?;
                let v = Self::lookup(store, y, label)?;
                match &mut self.heap.objs[l] {
                    HeapObj::Obj { fields, .. } => match fields.get_mut(f) {
                        Some(slot) => {
                            *slot = v;
                            Ok(v)
                        }
                        None => Err(Halt::Stuck(StuckReason::MissingField, label)),
                    },
                    HeapObj::Str { .. } => unreachable!(),
                }
            }
            ExprKind::Invoke(x, m, ys) => {
                let l = self.object(Self::lookup(store, x, label)?, label)?;
                let class = self.heap.class_of(Value::Loc(l));
                let (_, def) = self
                    .program
                    .mtable(class, m)
                    .ok_or(Halt::Stuck(StuckReason::MissingMethod, label))?;
                if def.arity() != ys.len() {
                    return Err(Halt::Stuck(StuckReason::ArityMismatch, label));
                }
                let mut callee: Store = vec![(Var::This, Value::Loc(l))];
                for (i, y) in ys.iter().enumerate() {
                    callee.push((Var::Arg(i + 1), Self::lookup(store, y, label)?));
                }
                let z2 = match self.contexts {
                    Some(cp) => {
                        let region = match &self.heap.objs[l] {
                            HeapObj::Obj { region, .. } => region.clone().unwrap_or(RegionKey::Single),
                            HeapObj::Str { .. } => RegionKey::Single,
                        };
                        cp.phi(z, class, &region, m, label)
                    }
                    None => Context::empty(),
                };
                if self.depth >= self.max_depth {
                    return Err(Halt::OutOfFuel);
                }
                self.depth += 1;
                let r = self.eval(&mut callee, &def.body, &z2);
                self.depth -= 1;
                r
            }
            ExprKind::Builtin(f, ys) => {
                let mut args = Vec::with_capacity(ys.len());
                for y in ys {
                    let v = Self::lookup(store, y, label)?;
                    args.push(self.string(v, label)?);
                }
                let (lit, word, trace) = self
                    .policy
                    .builtin_step(f, &args, &mut *self.chooser)
                    .map_err(|_| Halt::Stuck(StuckReason::BuiltinFailure, label))?;
                self.trace.extend(trace);
                Ok(Value::Loc(self.heap.alloc(HeapObj::Str { lit, word })))
            }
            ExprKind::StrLit(s) => {
                let word = self.policy.lit2word(s);
                Ok(Value::Loc(self.heap.alloc(HeapObj::Str {
                    lit: s.clone(),
                    word,
                })))
            }
            ExprKind::Concat(x, y) => {
                let (l1, w1) = self.string(Self::lookup(store, x, label)?, label)?;
                let (l2, w2) = self.string(Self::lookup(store, y, label)?, label)?;
                let mut word = w1;
                word.extend(w2);
                Ok(Value::Loc(self.heap.alloc(HeapObj::Str {
                    lit: l1 + &l2,
                    word,
                })))
            }
            ExprKind::Let(..) | ExprKind::IfEq(..) => self.eval(store, e, z),
        }
    }

    /// Evaluates `e` under `store`, consuming the interpreter.
    pub fn run(mut self, store: Vec<(Var, Value)>, e: &Expr, z: &Context) -> Outcome {
        let mut store = store;
        match self.eval(&mut store, e, z) {
            Ok(value) => Outcome::Done(EvalResult {
                value,
                heap: self.heap,
                trace: self.trace,
            }),
            Err(Halt::Stuck(reason, label)) => Outcome::Stuck { reason, label },
            Err(Halt::OutOfFuel) => Outcome::OutOfFuel,
        }
    }
}

/// Evaluates a closed expression from the empty heap.
pub fn eval_closed(
    program: &Program,
    policy: &Policy,
    e: &Expr,
    chooser: &mut dyn Chooser,
    limits: Limits,
) -> Outcome {
    Interpreter::new(program, policy, chooser, limits).run(Vec::new(), e, &Context::empty())
}

/// The store `[this ↦ entry object, x_i ↦ parameter values]` used to run an
/// entry method: ordinary parameters are fresh objects, strings are `""`.
pub fn entry_store(interp: &mut Interpreter<'_>, program: &Program, policy: &Policy, class: ClassId, method: &str) -> Option<Vec<(Var, Value)>> {
    let (_, def) = program.mtable(class, method)?;
    let instrumented = interp.contexts.is_some();
    let this = interp.new_object(class, instrumented.then_some(RegionKey::Entry));
    let mut store = vec![(Var::This, Value::Loc(this))];
    for (i, (_, ty)) in def.params.iter().enumerate() {
        let v = if *ty == ClassId::STRING {
            let word = policy.lit2word("");
            Value::Loc(interp.heap.alloc(HeapObj::Str {
                lit: String::new(),
                word,
            }))
        } else {
            Value::Loc(interp.new_object(*ty, instrumented.then_some(RegionKey::EntryParam(i + 1))))
        };
        store.push((Var::Arg(i + 1), v));
    }
    Some(store)
}

/// Runs `class.method` as the program's entry point.
pub fn run_entry(
    program: &Program,
    policy: &Policy,
    class: ClassId,
    method: &str,
    contexts: Option<&dyn ContextPolicy>,
    chooser: &mut dyn Chooser,
    limits: Limits,
) -> Option<Outcome> {
    let (_, def) = program.mtable(class, method)?;
    let mut interp = Interpreter::new(program, policy, chooser, limits);
    if let Some(cp) = contexts {
        interp = interp.instrumented(cp);
    }
    let store = entry_store(&mut interp, program, policy, class, method)?;
    let z = contexts.map_or_else(Context::empty, |cp| cp.initial());
    Some(interp.run(store, &def.body, &z))
}
