//! Guidelines: a finite monoid abstracting traces, the homomorphism from
//! words, the allowed set, and the builtin string primitives.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(pub u16);

pub type Word = Vec<Letter>;

pub type Effect = BTreeSet<Elem>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolicyError {
    #[error("unknown alphabet symbol `{0}`")]
    UnknownLetter(String),
    #[error("unknown monoid element `{0}`")]
    UnknownElement(String),
    #[error("multiplication not total: missing {0} * {1}")]
    NotTotal(String, String),
    #[error("monoid law violated: {0}")]
    Laws(String),
    #[error("automaton is partial: no transition from `{0}` on `{1}`")]
    PartialAutomaton(String, String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("monoid and automaton disagree on word `{0}`")]
    Inconsistent(String),
    #[error("neutral element is not allowed")]
    NeutralNotAllowed,
    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),
    #[error("builtin `{name}` takes {expected} arguments, got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("builtin `{0}` has no semantic rules")]
    NoRules(String),
    #[error("builtin `{name}`: argument reference ${index} out of range")]
    ArgRange { name: String, index: usize },
    #[error("no letter with hom = {0} (needed by class(${1}) in `{2}`)")]
    NoLetterFor(String, usize, String),
    #[error("typing of `{0}` is not total: no row matches ({1})")]
    TypingNotTotal(String, String),
    #[error("typing of `{name}` is unsound on ({args}): {detail}")]
    TypingUnsound {
        name: String,
        args: String,
        detail: String,
    },
    #[error("element name `{0}` is reserved")]
    ReservedName(String),
    #[error("policy has neither a monoid nor an automaton")]
    NoMonoid,
    #[error("{0}")]
    Other(String),
}

/// A finite monoid given by its multiplication table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monoid {
    names: Vec<String>,
    table: Vec<Vec<Elem>>,
    neutral: Elem,
}

impl Monoid {
    pub fn new(names: Vec<String>, table: Vec<Vec<Elem>>, neutral: Elem) -> Monoid {
        Monoid {
            names,
            table,
            neutral,
        }
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        (0..self.names.len() as u16).map(Elem)
    }

    pub fn neutral(&self) -> Elem {
        self.neutral
    }

    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.table[a.0 as usize][b.0 as usize]
    }

    pub fn name(&self, e: Elem) -> &str {
        &self.names[e.0 as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn elem(&self, name: &str) -> Option<Elem> {
        self.names.iter().position(|n| n == name).map(|i| Elem(i as u16))
    }

    /// Checks closure, identity and associativity over all triples.
    pub fn check_laws(&self) -> Result<(), PolicyError> {
        let n = self.size();
        if self.table.len() != n || self.table.iter().any(|r| r.len() != n) {
            return Err(PolicyError::Laws("table is not square".into()));
        }
        for a in self.elements() {
            for b in self.elements() {
                if self.mul(a, b).0 as usize >= n {
                    return Err(PolicyError::Laws("table not closed".into()));
                }
            }
            if self.mul(a, self.neutral) != a || self.mul(self.neutral, a) != a {
                return Err(PolicyError::Laws(format!(
                    "{} is not an identity for {}",
                    self.name(self.neutral),
                    self.name(a)
                )));
            }
        }
        for a in self.elements() {
            for b in self.elements() {
                let ab = self.mul(a, b);
                for c in self.elements() {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Err(PolicyError::Laws(format!(
                            "({0}*{1})*{2} != {0}*({1}*{2})",
                            self.name(a),
                            self.name(b),
                            self.name(c)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Multiplication table as tab-separated values.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("*");
        for n in &self.names {
            s.push('\t');
            s.push_str(n);
        }
        s.push('\n');
        for a in self.elements() {
            s.push_str(self.name(a));
            for b in self.elements() {
                s.push('\t');
                s.push_str(self.name(self.mul(a, b)));
            }
            s.push('\n');
        }
        s
    }
}

/// `UU' = { u·u' | u ∈ U, u' ∈ U' }`.
pub fn effect_concat(u1: &Effect, u2: &Effect, m: &Monoid) -> Effect {
    let mut out = BTreeSet::new();
    for &a in u1 {
        for &b in u2 {
            out.insert(m.mul(a, b));
        }
    }
    out
}

/// A complete deterministic automaton over the policy alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automaton {
    pub states: Vec<String>,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    /// `delta[state][letter]`.
    pub delta: Vec<Vec<usize>>,
}

impl Automaton {
    pub fn step(&self, q: usize, a: Letter) -> usize {
        self.delta[q][a.0 as usize]
    }

    pub fn run_from(&self, q: usize, w: &[Letter]) -> usize {
        w.iter().fold(q, |q, &a| self.step(q, a))
    }

    pub fn run(&self, w: &[Letter]) -> usize {
        self.run_from(self.initial, w)
    }

    pub fn accepts(&self, w: &[Letter]) -> bool {
        self.accepting.contains(&self.run(w))
    }
}

/// Result of compiling an automaton: its transition monoid.
#[derive(Clone, Debug)]
pub struct TransitionMonoid {
    pub monoid: Monoid,
    pub hom: Vec<Elem>,
    pub allowed: BTreeSet<Elem>,
    /// The state transformation each element denotes.
    pub functions: Vec<Vec<usize>>,
}

/// Closes the letter transformations under composition. Elements are named
/// by a shortest word generating them (`ε` for the identity).
pub fn transition_monoid(a: &Automaton, alphabet: &[String]) -> TransitionMonoid {
    let nstates = a.states.len();
    let identity: Vec<usize> = (0..nstates).collect();
    let letter_fns: Vec<Vec<usize>> = (0..alphabet.len())
        .map(|l| (0..nstates).map(|q| a.step(q, Letter(l as u16))).collect())
        .collect();

    let mut functions = vec![identity.clone()];
    let mut names = vec!["ε".to_string()];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
    index.insert(identity, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for (l, g) in letter_fns.iter().enumerate() {
            let composed: Vec<usize> = functions[i].iter().map(|&q| g[q]).collect();
            if !index.contains_key(&composed) {
                let name = if i == 0 {
                    alphabet[l].clone()
                } else {
                    format!("{}.{}", names[i], alphabet[l])
                };
                index.insert(composed.clone(), functions.len());
                queue.push_back(functions.len());
                functions.push(composed);
                names.push(name);
            }
        }
    }
    let n = functions.len();
    let table = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let f: Vec<usize> = functions[i].iter().map(|&q| functions[j][q]).collect();
                    Elem(index[&f] as u16)
                })
                .collect()
        })
        .collect();
    let hom = letter_fns.iter().map(|f| Elem(index[f] as u16)).collect();
    let allowed = (0..n)
        .filter(|&i| a.accepting.contains(&functions[i][a.initial]))
        .map(|i| Elem(i as u16))
        .collect();
    TransitionMonoid {
        monoid: Monoid::new(names, table, Elem(0)),
        hom,
        allowed,
        functions,
    }
}

/// Matchers of the literal tagging rules.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LitMatcher {
    Exact(String),
    Prefix(String),
    Default,
}

impl LitMatcher {
    pub fn matches(&self, lit: &str) -> bool {
        match self {
            LitMatcher::Exact(s) => lit == s,
            LitMatcher::Prefix(p) => lit.starts_with(p.as_str()),
            LitMatcher::Default => true,
        }
    }
}

/// Pieces of a builtin's result literal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LitPart {
    Const(String),
    Arg(usize),
    Html(usize),
    Js(usize),
    Fresh,
}

/// Pieces of a builtin's result tag word or emitted trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WordPart {
    Letter(Letter),
    /// The raw tag word of argument `i` (1-based).
    ArgWord(usize),
    /// One letter whose image is the class of argument `i`'s tag word.
    ClassOf(usize),
}

/// One alternative of `sem(fn)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SemRule {
    pub lit: Vec<LitPart>,
    pub tag: Vec<WordPart>,
    pub trace: Vec<WordPart>,
}

/// Factor of a typing result: a fixed element or an argument's class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Elem(Elem),
    Arg(usize),
}

/// A declared row of `M(fn)`: argument patterns (None = any) and result
/// sets given as products of factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypingRow {
    pub pats: Vec<Option<Elem>>,
    pub result: Vec<Vec<Factor>>,
    pub effect: Vec<Vec<Factor>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Builtin {
    pub name: String,
    pub arity: usize,
    pub rules: Vec<SemRule>,
    /// Declared typing; derived from `rules` when empty.
    pub typing: Vec<TypingRow>,
}

/// Resolves nondeterministic choices: returns an index below `n`.
pub trait Chooser {
    fn choose(&mut self, n: usize) -> usize;
}

/// Always takes the first alternative.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstChooser;

impl Chooser for FirstChooser {
    fn choose(&mut self, _n: usize) -> usize {
        0
    }
}

/// Reproducible random choices.
#[derive(Clone, Debug)]
pub struct SeededChooser(ChaCha8Rng);

impl SeededChooser {
    pub fn new(seed: u64) -> SeededChooser {
        SeededChooser(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl Chooser for SeededChooser {
    fn choose(&mut self, n: usize) -> usize {
        if n <= 1 {
            0
        } else {
            self.0.gen_range(0..n)
        }
    }
}

/// Depth-first enumeration of all choice sequences. Run the program once
/// per resolution, calling [`EnumChooser::advance`] between runs.
#[derive(Clone, Debug, Default)]
pub struct EnumChooser {
    path: Vec<(usize, usize)>,
    pos: usize,
}

impl EnumChooser {
    pub fn new() -> EnumChooser {
        EnumChooser::default()
    }

    /// Moves to the next unexplored resolution; false once all are done.
    pub fn advance(&mut self) -> bool {
        self.path.truncate(self.pos);
        self.pos = 0;
        while let Some((v, n)) = self.path.pop() {
            if v + 1 < n {
                self.path.push((v + 1, n));
                return true;
            }
        }
        false
    }

    pub fn choices(&self) -> Vec<usize> {
        self.path.iter().map(|p| p.0).collect()
    }
}

impl Chooser for EnumChooser {
    fn choose(&mut self, n: usize) -> usize {
        let v = if self.pos < self.path.len() {
            let (v, m) = self.path[self.pos];
            if m == n && v < n {
                v
            } else {
                self.path.truncate(self.pos);
                self.path.push((0, n));
                0
            }
        } else {
            self.path.push((0, n.max(1)));
            0
        };
        self.pos += 1;
        v
    }
}

/// A loaded guideline.
#[derive(Clone, Debug)]
pub struct Policy {
    pub alphabet: Vec<String>,
    pub monoid: Monoid,
    pub hom: Vec<Elem>,
    pub allowed: BTreeSet<Elem>,
    pub automaton: Option<Automaton>,
    pub lit2word: Vec<(LitMatcher, Word)>,
    pub builtins: BTreeMap<String, Builtin>,
    pub fresh_pool: Vec<String>,
    pub warnings: Vec<String>,
    /// Shortest word for each element reachable from the letters.
    representatives: Vec<Option<Word>>,
    /// A letter whose image is the given element, if any.
    letter_for: Vec<Option<Letter>>,
}

/// Unvalidated policy pieces as read from a file.
#[derive(Clone, Debug, Default)]
pub struct PolicyParts {
    pub alphabet: Vec<String>,
    pub monoid: Option<(Monoid, Vec<Elem>)>,
    pub allowed: Option<BTreeSet<Elem>>,
    pub automaton: Option<Automaton>,
    pub lit2word: Vec<(LitMatcher, Word)>,
    pub builtins: Vec<Builtin>,
    pub fresh_pool: Vec<String>,
}

impl Policy {
    /// Validates and completes the parts: compiles the automaton if no
    /// monoid is given, checks consistency if both are, and checks the
    /// builtin side conditions.
    pub fn assemble(parts: PolicyParts) -> Result<Policy, PolicyError> {
        let PolicyParts {
            alphabet,
            monoid,
            allowed,
            automaton,
            lit2word,
            builtins,
            fresh_pool,
        } = parts;
        let (monoid, hom, allowed) = match (monoid, &automaton) {
            (Some((m, hom)), aut) => {
                let allowed = match (allowed, aut) {
                    (Some(a), _) => a,
                    (None, Some(aut)) => derive_allowed(&m, &hom, aut),
                    (None, None) => {
                        return Err(PolicyError::Other("monoid policy needs an [allowed] section".into()))
                    }
                };
                (m, hom, allowed)
            }
            (None, Some(aut)) => {
                let tm = transition_monoid(aut, &alphabet);
                let allowed = match allowed {
                    Some(_) => {
                        return Err(PolicyError::Other(
                            "[allowed] is derived from the automaton and may not be given".into(),
                        ))
                    }
                    None => tm.allowed,
                };
                (tm.monoid, tm.hom, allowed)
            }
            (None, None) => return Err(PolicyError::NoMonoid),
        };
        monoid.check_laws()?;
        for n in monoid.names() {
            if n.is_empty()
                || n.starts_with(|c: char| c.is_ascii_digit() || c == '*' || c == '$')
                || n.contains(|c: char| c.is_whitespace() || ",{}()[]@".contains(c))
            {
                return Err(PolicyError::ReservedName(n.clone()));
            }
        }
        if !allowed.contains(&monoid.neutral()) {
            return Err(PolicyError::NeutralNotAllowed);
        }
        if let Some(aut) = &automaton {
            check_consistency(&monoid, &hom, &allowed, aut, &alphabet)?;
        }
        let representatives = shortest_words(&monoid, &hom);
        let mut letter_for = vec![None; monoid.size()];
        for (l, &e) in hom.iter().enumerate() {
            if letter_for[e.0 as usize].is_none() {
                letter_for[e.0 as usize] = Some(Letter(l as u16));
            }
        }
        let mut policy = Policy {
            alphabet,
            monoid,
            hom,
            allowed,
            automaton,
            lit2word,
            builtins: BTreeMap::new(),
            fresh_pool: if fresh_pool.is_empty() {
                vec!["input".to_string()]
            } else {
                fresh_pool
            },
            warnings: Vec::new(),
            representatives,
            letter_for,
        };
        for b in builtins {
            policy.check_builtin(&b)?;
            policy.builtins.insert(b.name.clone(), b);
        }
        policy.check_typing_soundness()?;
        Ok(policy)
    }

    fn check_builtin(&self, b: &Builtin) -> Result<(), PolicyError> {
        if b.rules.is_empty() {
            return Err(PolicyError::NoRules(b.name.clone()));
        }
        let range = |i: usize| {
            if i == 0 || i > b.arity {
                Err(PolicyError::ArgRange {
                    name: b.name.clone(),
                    index: i,
                })
            } else {
                Ok(())
            }
        };
        for r in &b.rules {
            for p in &r.lit {
                if let LitPart::Arg(i) | LitPart::Html(i) | LitPart::Js(i) = p {
                    range(*i)?;
                }
            }
            for p in r.tag.iter().chain(&r.trace) {
                match p {
                    WordPart::ArgWord(i) => range(*i)?,
                    WordPart::ClassOf(i) => {
                        range(*i)?;
                        for e in self.monoid.elements() {
                            if self.representatives[e.0 as usize].is_some()
                                && e != self.monoid.neutral()
                                && self.letter_for[e.0 as usize].is_none()
                            {
                                return Err(PolicyError::NoLetterFor(
                                    self.monoid.name(e).to_string(),
                                    *i,
                                    b.name.clone(),
                                ));
                            }
                        }
                    }
                    WordPart::Letter(_) => {}
                }
            }
        }
        for row in &b.typing {
            if row.pats.len() != b.arity {
                return Err(PolicyError::Arity {
                    name: b.name.clone(),
                    expected: b.arity,
                    found: row.pats.len(),
                });
            }
            for f in row.result.iter().chain(&row.effect).flatten() {
                if let Factor::Arg(i) = f {
                    range(*i)?;
                }
            }
        }
        if !b.typing.is_empty() {
            for args in tuples(&self.monoid.elements().collect::<Vec<_>>(), b.arity) {
                if !b.typing.iter().any(|r| row_matches(r, &args)) {
                    return Err(PolicyError::TypingNotTotal(
                        b.name.clone(),
                        self.render_elems(&args),
                    ));
                }
            }
        }
        Ok(())
    }

    /// For every builtin, every reachable argument class and every rule:
    /// the outcome's tag class lies in the declared result set and its
    /// trace class in the declared effect.
    pub fn check_typing_soundness(&self) -> Result<(), PolicyError> {
        let reachable: Vec<Elem> = self
            .monoid
            .elements()
            .filter(|e| self.representatives[e.0 as usize].is_some())
            .collect();
        for b in self.builtins.values() {
            for args in tuples(&reachable, b.arity) {
                let (tags, eff) = self.builtin_typing(&b.name, &args)?;
                let words: Vec<(String, Word)> = args
                    .iter()
                    .map(|e| (String::new(), self.representative(*e).unwrap().clone()))
                    .collect();
                for rule in &b.rules {
                    let tag = self.classify(&self.build_word(&rule.tag, &words));
                    let trace = self.classify(&self.build_word(&rule.trace, &words));
                    if !tags.contains(&tag) || !eff.contains(&trace) {
                        return Err(PolicyError::TypingUnsound {
                            name: b.name.clone(),
                            args: self.render_elems(&args),
                            detail: format!(
                                "outcome ({}, {}) not covered",
                                self.monoid.name(tag),
                                self.monoid.name(trace)
                            ),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn render_elems(&self, es: &[Elem]) -> String {
        es.iter()
            .map(|e| self.monoid.name(*e))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn render_effect(&self, es: &Effect) -> String {
        let v: Vec<Elem> = es.iter().copied().collect();
        format!("{{{}}}", self.render_elems(&v))
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.alphabet
            .iter()
            .position(|a| a == name)
            .map(|i| Letter(i as u16))
    }

    pub fn letter_name(&self, l: Letter) -> &str {
        &self.alphabet[l.0 as usize]
    }

    pub fn render_word(&self, w: &[Letter]) -> String {
        if w.is_empty() {
            return "ε".into();
        }
        w.iter()
            .map(|l| self.letter_name(*l))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// The homomorphism `[w]`.
    pub fn classify(&self, w: &[Letter]) -> Elem {
        w.iter().fold(self.monoid.neutral(), |acc, l| {
            self.monoid.mul(acc, self.hom[l.0 as usize])
        })
    }

    pub fn is_allowed(&self, e: Elem) -> bool {
        self.allowed.contains(&e)
    }

    pub fn representative(&self, e: Elem) -> Option<&Word> {
        self.representatives[e.0 as usize].as_ref()
    }

    pub fn lit2word(&self, lit: &str) -> Word {
        self.lit2word
            .iter()
            .find(|(m, _)| m.matches(lit))
            .map(|(_, w)| w.clone())
            .unwrap_or_default()
    }

    pub fn builtin(&self, name: &str) -> Result<&Builtin, PolicyError> {
        self.builtins
            .get(name)
            .ok_or_else(|| PolicyError::UnknownBuiltin(name.to_string()))
    }

    fn eval_product(&self, p: &[Factor], args: &[Elem]) -> Elem {
        p.iter().fold(self.monoid.neutral(), |acc, f| {
            let e = match f {
                Factor::Elem(e) => *e,
                Factor::Arg(i) => args[i - 1],
            };
            self.monoid.mul(acc, e)
        })
    }

    fn part_class(&self, p: &WordPart, args: &[Elem]) -> Elem {
        match p {
            WordPart::Letter(l) => self.hom[l.0 as usize],
            WordPart::ArgWord(i) | WordPart::ClassOf(i) => args[i - 1],
        }
    }

    /// `M(fn)(u1..un)`: possible result tag classes and effects.
    pub fn builtin_typing(&self, name: &str, args: &[Elem]) -> Result<(Effect, Effect), PolicyError> {
        let b = self.builtin(name)?;
        if args.len() != b.arity {
            return Err(PolicyError::Arity {
                name: name.to_string(),
                expected: b.arity,
                found: args.len(),
            });
        }
        if b.typing.is_empty() {
            let mut tags = BTreeSet::new();
            let mut eff = BTreeSet::new();
            for r in &b.rules {
                let fold = |parts: &[WordPart]| {
                    parts.iter().fold(self.monoid.neutral(), |acc, p| {
                        self.monoid.mul(acc, self.part_class(p, args))
                    })
                };
                tags.insert(fold(&r.tag));
                eff.insert(fold(&r.trace));
            }
            return Ok((tags, eff));
        }
        let row = b
            .typing
            .iter()
            .find(|r| row_matches(r, args))
            .ok_or_else(|| PolicyError::TypingNotTotal(name.to_string(), self.render_elems(args)))?;
        let tags = row.result.iter().map(|p| self.eval_product(p, args)).collect();
        let eff = row.effect.iter().map(|p| self.eval_product(p, args)).collect();
        Ok((tags, eff))
    }

    fn build_word(&self, parts: &[WordPart], args: &[(String, Word)]) -> Word {
        let mut w = Vec::new();
        for p in parts {
            match p {
                WordPart::Letter(l) => w.push(*l),
                WordPart::ArgWord(i) => w.extend(args[i - 1].1.iter().copied()),
                WordPart::ClassOf(i) => {
                    let e = self.classify(&args[i - 1].1);
                    if let Some(l) = self.letter_for[e.0 as usize] {
                        w.push(l);
                    }
                }
            }
        }
        w
    }

    /// One outcome of `sem(fn)(args)`: result literal, tag word, trace.
    pub fn builtin_step(
        &self,
        name: &str,
        args: &[(String, Word)],
        chooser: &mut dyn Chooser,
    ) -> Result<(String, Word, Word), PolicyError> {
        let b = self.builtin(name)?;
        if args.len() != b.arity {
            return Err(PolicyError::Arity {
                name: name.to_string(),
                expected: b.arity,
                found: args.len(),
            });
        }
        if b.rules.is_empty() {
            return Err(PolicyError::NoRules(name.to_string()));
        }
        let idx = if b.rules.len() == 1 {
            0
        } else {
            chooser.choose(b.rules.len()).min(b.rules.len() - 1)
        };
        let rule = &b.rules[idx];
        let mut lit = String::new();
        for p in &rule.lit {
            match p {
                LitPart::Const(s) => lit.push_str(s),
                LitPart::Arg(i) => lit.push_str(&args[i - 1].0),
                LitPart::Html(i) => lit.push_str(&escape_html(&args[i - 1].0)),
                LitPart::Js(i) => lit.push_str(&escape_js(&args[i - 1].0)),
                LitPart::Fresh => {
                    let n = self.fresh_pool.len();
                    let k = if n == 1 { 0 } else { chooser.choose(n).min(n - 1) };
                    lit.push_str(&self.fresh_pool[k]);
                }
            }
        }
        Ok((lit, self.build_word(&rule.tag, args), self.build_word(&rule.trace, args)))
    }

    /// Number of alternatives a chooser may face at one call of `name`.
    pub fn sem_branching(&self, name: &str) -> usize {
        self.builtins.get(name).map_or(0, |b| {
            let fresh = b.rules.iter().any(|r| r.lit.contains(&LitPart::Fresh));
            b.rules.len() * if fresh { self.fresh_pool.len() } else { 1 }
        })
    }

    /// A uniformly random word of length below `max_len`.
    pub fn random_word(&self, rng: &mut impl Rng, max_len: usize) -> Word {
        let len = rng.gen_range(0..max_len.max(1));
        (0..len)
            .map(|_| Letter(rng.gen_range(0..self.alphabet.len()) as u16))
            .collect()
    }
}

fn row_matches(r: &TypingRow, args: &[Elem]) -> bool {
    r.pats
        .iter()
        .zip(args)
        .all(|(p, a)| p.is_none_or(|p| p == *a))
}

/// All tuples of length `n` over `xs`.
pub fn tuples<T: Copy>(xs: &[T], n: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|t| {
                xs.iter().map(move |&x| {
                    let mut t = t.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

fn shortest_words(m: &Monoid, hom: &[Elem]) -> Vec<Option<Word>> {
    let mut reps: Vec<Option<Word>> = vec![None; m.size()];
    reps[m.neutral().0 as usize] = Some(Vec::new());
    let mut queue = VecDeque::from([m.neutral()]);
    while let Some(e) = queue.pop_front() {
        let w = reps[e.0 as usize].clone().unwrap();
        for (l, &h) in hom.iter().enumerate() {
            let next = m.mul(e, h);
            if reps[next.0 as usize].is_none() {
                let mut w2 = w.clone();
                w2.push(Letter(l as u16));
                reps[next.0 as usize] = Some(w2);
                queue.push_back(next);
            }
        }
    }
    reps
}

fn derive_allowed(m: &Monoid, hom: &[Elem], aut: &Automaton) -> BTreeSet<Elem> {
    shortest_words(m, hom)
        .iter()
        .enumerate()
        .filter_map(|(i, w)| w.as_ref().filter(|w| aut.accepts(w)).map(|_| Elem(i as u16)))
        .collect()
}

/// Explores reachable pairs (monoid element, automaton transformation) and
/// requires that membership in Allowed coincides with acceptance.
fn check_consistency(
    m: &Monoid,
    hom: &[Elem],
    allowed: &BTreeSet<Elem>,
    aut: &Automaton,
    alphabet: &[String],
) -> Result<(), PolicyError> {
    let id: Vec<usize> = (0..aut.states.len()).collect();
    let mut seen: HashSet<(Elem, Vec<usize>)> = HashSet::new();
    let mut queue = VecDeque::from([(m.neutral(), id, Vec::<Letter>::new())]);
    while let Some((e, f, w)) = queue.pop_front() {
        if !seen.insert((e, f.clone())) {
            continue;
        }
        if allowed.contains(&e) != aut.accepting.contains(&f[aut.initial]) {
            let rendered = if w.is_empty() {
                "ε".to_string()
            } else {
                w.iter()
                    .map(|l| alphabet[l.0 as usize].as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            return Err(PolicyError::Inconsistent(rendered));
        }
        for (l, &h) in hom.iter().enumerate() {
            let f2: Vec<usize> = f.iter().map(|&q| aut.step(q, Letter(l as u16))).collect();
            let mut w2 = w.clone();
            w2.push(Letter(l as u16));
            queue.push_back((m.mul(e, h), f2, w2));
        }
    }
    Ok(())
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '&' => out.push_str("&amp;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn escape_js(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '"' => out.push_str("\\\""),
            '<' => out.push_str("\\x3c"),
            '>' => out.push_str("\\x3e"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> (Automaton, Vec<String>) {
        let alphabet = vec!["user".to_string(), "ok".to_string()];
        let aut = Automaton {
            states: vec!["ok".into(), "fail".into()],
            initial: 0,
            accepting: BTreeSet::from([0]),
            delta: vec![vec![1, 0], vec![1, 1]],
        };
        (aut, alphabet)
    }

    #[test]
    fn single_state_automaton_gives_trivial_monoid() {
        let aut = Automaton {
            states: vec!["q".into()],
            initial: 0,
            accepting: BTreeSet::from([0]),
            delta: vec![vec![0, 0]],
        };
        let tm = transition_monoid(&aut, &["a".into(), "b".into()]);
        assert_eq!(tm.monoid.size(), 1);
        assert_eq!(tm.allowed.len(), 1);
    }

    #[test]
    fn two_state_closure_matches_brute_force() {
        let (aut, alphabet) = two_state();
        let tm = transition_monoid(&aut, &alphabet);
        // brute force: all functions reachable by composing generators
        let gens: Vec<Vec<usize>> = vec![vec![1, 1], vec![0, 1]];
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::from([vec![0, 1]]);
        loop {
            let before = set.len();
            let cur: Vec<_> = set.iter().cloned().collect();
            for f in &cur {
                for g in &gens {
                    set.insert(f.iter().map(|&q| g[q]).collect());
                }
            }
            if set.len() == before {
                break;
            }
        }
        assert_eq!(tm.monoid.size(), set.len());
        assert_eq!(tm.monoid.size(), 2);
        assert_eq!(tm.allowed, BTreeSet::from([tm.monoid.neutral()]));
        tm.monoid.check_laws().unwrap();
    }

    #[test]
    fn effect_concat_laws() {
        let (aut, alphabet) = two_state();
        let tm = transition_monoid(&aut, &alphabet);
        let m = &tm.monoid;
        let t = tm.hom[0];
        let u = m.neutral();
        let x: Effect = BTreeSet::from([t, u]);
        assert_eq!(effect_concat(&BTreeSet::from([u]), &x, m), x);
        assert_eq!(effect_concat(&BTreeSet::new(), &x, m), BTreeSet::new());
        assert_eq!(effect_concat(&BTreeSet::from([t]), &BTreeSet::from([u]), m), BTreeSet::from([t]));
    }

    #[test]
    fn enum_chooser_visits_every_resolution() {
        let mut ch = EnumChooser::new();
        let mut seen = Vec::new();
        loop {
            let a = ch.choose(2);
            let b = if a == 0 { ch.choose(3) } else { 9 };
            seen.push((a, b));
            if !ch.advance() {
                break;
            }
        }
        assert_eq!(seen, vec![(0, 0), (0, 1), (0, 2), (1, 9)]);
    }

    #[test]
    fn seeded_chooser_is_reproducible() {
        let mut a = SeededChooser::new(7);
        let mut b = SeededChooser::new(7);
        let xs: Vec<usize> = (0..20).map(|_| a.choose(5)).collect();
        let ys: Vec<usize> = (0..20).map(|_| b.choose(5)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn escapes() {
        assert_eq!(escape_html("<b>"), "&lt;b&gt;");
        assert_eq!(escape_js("a'b"), "a\\'b");
    }
}
