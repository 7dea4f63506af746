use std::collections::{BTreeMap, BTreeSet};

use crate::policy::{
    Automaton, Builtin, Elem, Factor, Letter, LitMatcher, LitPart, Monoid, Policy, PolicyError,
    PolicyParts, SemRule, TypingRow, Word, WordPart,
};

use super::ParseError;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Section {
    None,
    Alphabet,
    Monoid,
    Automaton,
    Allowed,
    Lit2Word,
    Builtins,
    Fresh,
}

/// Strips a `#` comment that is not inside a string literal.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            '\\' if in_str => escaped = !escaped,
            '"' if !escaped => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => escaped = false,
        }
        if c != '\\' {
            escaped = false;
        }
    }
    line
}

/// Reads a quoted literal at the start of `s`; returns it and the rest.
fn quoted(s: &str, line: u32) -> Result<(String, &str), ParseError> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    if chars.next().map(|c| c.1) != Some('"') {
        return Err(ParseError::line(line, "expected a string literal"));
    }
    let mut out = String::new();
    let mut escaped = false;
    for (i, c) in chars {
        if escaped {
            out.push(match c {
                'n' => '\n',
                't' => '\t',
                'r' => '\r',
                '0' => '\0',
                '\\' => '\\',
                '"' => '"',
                _ => return Err(ParseError::line(line, format!("unknown escape `\\{c}`"))),
            });
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            return Ok((out, &s[i + 1..]));
        } else {
            out.push(c);
        }
    }
    Err(ParseError::line(line, "unterminated string literal"))
}

struct Reader {
    alphabet: Vec<String>,
    elements: Vec<String>,
    neutral: Option<String>,
    products: BTreeMap<(String, String), String>,
    homs: BTreeMap<String, String>,
    has_monoid: bool,
    allowed: Option<Vec<(String, u32)>>,
    states: Vec<String>,
    initial: Option<String>,
    accepting: Vec<String>,
    transitions: Vec<(String, String, String, u32)>,
    default_state: Option<String>,
    has_automaton: bool,
    lit2word: Vec<(LitMatcher, Vec<String>, u32)>,
    builtins: Vec<RawBuiltin>,
    fresh: Vec<String>,
}

struct RawBuiltin {
    name: String,
    arity: usize,
    line: u32,
    sems: Vec<(String, u32)>,
    types: Vec<(String, u32)>,
}

fn policy_err(line: u32, e: PolicyError) -> ParseError {
    ParseError::line(line, e.to_string())
}

impl Reader {
    fn letter(&self, name: &str, line: u32) -> Result<Letter, ParseError> {
        self.alphabet
            .iter()
            .position(|a| a == name)
            .map(|i| Letter(i as u16))
            .ok_or_else(|| policy_err(line, PolicyError::UnknownLetter(name.to_string())))
    }

    fn word(&self, text: &str, line: u32) -> Result<Word, ParseError> {
        text.split_whitespace()
            .filter(|t| *t != "ε")
            .map(|t| self.letter(t, line))
            .collect()
    }

    fn line(&mut self, section: Section, text: &str, line: u32) -> Result<(), ParseError> {
        let words: Vec<&str> = text.split_whitespace().collect();
        match section {
            Section::None => Err(ParseError::line(line, "content outside of a section")),
            Section::Alphabet => {
                for w in words {
                    if w.contains(|c: char| "\"$*,;()".contains(c)) || w == "ε" {
                        return Err(ParseError::line(line, format!("invalid letter `{w}`")));
                    }
                    if self.alphabet.iter().any(|a| a == w) {
                        return Err(ParseError::line(line, format!("letter `{w}` declared twice")));
                    }
                    self.alphabet.push(w.to_string());
                }
                Ok(())
            }
            Section::Monoid => {
                self.has_monoid = true;
                match words.as_slice() {
                    ["elements", rest @ ..] => {
                        self.elements.extend(rest.iter().map(|s| s.to_string()));
                        Ok(())
                    }
                    ["neutral", e] => {
                        self.neutral = Some(e.to_string());
                        Ok(())
                    }
                    ["hom", l, "=", e] => {
                        self.letter(l, line)?;
                        self.homs.insert(l.to_string(), e.to_string());
                        Ok(())
                    }
                    [a, "*", b, "=", c] => {
                        self.products
                            .insert((a.to_string(), b.to_string()), c.to_string());
                        Ok(())
                    }
                    _ => Err(ParseError::line(line, format!("cannot read monoid line `{text}`"))),
                }
            }
            Section::Allowed => {
                self.allowed
                    .get_or_insert_with(Vec::new)
                    .extend(words.iter().map(|w| (w.to_string(), line)));
                Ok(())
            }
            Section::Automaton => {
                self.has_automaton = true;
                match words.as_slice() {
                    ["states", rest @ ..] => {
                        self.states.extend(rest.iter().map(|s| s.to_string()));
                        Ok(())
                    }
                    ["initial", q] => {
                        self.initial = Some(q.to_string());
                        Ok(())
                    }
                    ["accepting", rest @ ..] => {
                        self.accepting.extend(rest.iter().map(|s| s.to_string()));
                        Ok(())
                    }
                    ["default", "->", q] => {
                        self.default_state = Some(q.to_string());
                        Ok(())
                    }
                    [q, letters, "->", t] => {
                        for l in letters.split(',').filter(|l| !l.is_empty()) {
                            self.letter(l, line)?;
                            self.transitions
                                .push((q.to_string(), l.to_string(), t.to_string(), line));
                        }
                        Ok(())
                    }
                    _ => Err(ParseError::line(line, format!("cannot read automaton line `{text}`"))),
                }
            }
            Section::Lit2Word => {
                let t = text.trim();
                let (matcher, rest) = if let Some(r) = t.strip_prefix("default") {
                    (LitMatcher::Default, r)
                } else if let Some(r) = t.strip_prefix("prefix") {
                    let (lit, r) = quoted(r, line)?;
                    (LitMatcher::Prefix(lit), r)
                } else {
                    let (lit, r) = quoted(t, line)?;
                    (LitMatcher::Exact(lit), r)
                };
                let rest = rest
                    .trim_start()
                    .strip_prefix('=')
                    .ok_or_else(|| ParseError::line(line, "expected `=` in tagging rule"))?;
                let word = rest.split_whitespace().map(|s| s.to_string()).collect();
                self.lit2word.push((matcher, word, line));
                Ok(())
            }
            Section::Fresh => {
                let mut rest = text.trim();
                while !rest.is_empty() {
                    let (lit, r) = quoted(rest, line)?;
                    self.fresh.push(lit);
                    rest = r.trim();
                }
                Ok(())
            }
            Section::Builtins => {
                let t = text.trim();
                if let Some(decl) = t.strip_prefix("builtin ") {
                    let (name, arity) = decl
                        .trim()
                        .split_once('/')
                        .ok_or_else(|| ParseError::line(line, "expected `builtin name/arity`"))?;
                    let arity = arity
                        .trim()
                        .parse()
                        .map_err(|_| ParseError::line(line, "arity must be a number"))?;
                    if self.builtins.iter().any(|b| b.name == name.trim()) {
                        return Err(ParseError::line(line, format!("builtin `{}` declared twice", name.trim())));
                    }
                    self.builtins.push(RawBuiltin {
                        name: name.trim().to_string(),
                        arity,
                        line,
                        sems: Vec::new(),
                        types: Vec::new(),
                    });
                    return Ok(());
                }
                let current = self
                    .builtins
                    .last_mut()
                    .ok_or_else(|| ParseError::line(line, "rule before any `builtin` declaration"))?;
                if let Some(r) = t.strip_prefix("sem ") {
                    current.sems.push((r.to_string(), line));
                } else if let Some(r) = t.strip_prefix("type ") {
                    current.types.push((r.to_string(), line));
                } else if t == "type" || t.starts_with("type->") {
                    current.types.push((t.trim_start_matches("type").to_string(), line));
                } else {
                    return Err(ParseError::line(line, format!("cannot read builtin line `{t}`")));
                }
                Ok(())
            }
        }
    }

    fn arg_index(s: &str, arity: usize, name: &str, line: u32) -> Result<usize, ParseError> {
        let i: usize = s
            .parse()
            .map_err(|_| ParseError::line(line, format!("bad argument reference `${s}`")))?;
        if i == 0 || i > arity {
            return Err(policy_err(
                line,
                PolicyError::ArgRange {
                    name: name.to_string(),
                    index: i,
                },
            ));
        }
        Ok(i)
    }

    fn lit_parts(&self, text: &str, b: &RawBuiltin, line: u32) -> Result<Vec<LitPart>, ParseError> {
        let mut parts = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            if rest.starts_with('"') {
                let (lit, r) = quoted(rest, line)?;
                if !lit.is_empty() {
                    parts.push(LitPart::Const(lit));
                }
                rest = r.trim_start();
            } else {
                let end = rest.find('+').unwrap_or(rest.len());
                let item = rest[..end].trim();
                let part = if item == "fresh" {
                    LitPart::Fresh
                } else if let Some(n) = item.strip_prefix('$') {
                    LitPart::Arg(Self::arg_index(n, b.arity, &b.name, line)?)
                } else if let Some(n) = item.strip_prefix("html($").and_then(|r| r.strip_suffix(')')) {
                    LitPart::Html(Self::arg_index(n, b.arity, &b.name, line)?)
                } else if let Some(n) = item.strip_prefix("js($").and_then(|r| r.strip_suffix(')')) {
                    LitPart::Js(Self::arg_index(n, b.arity, &b.name, line)?)
                } else {
                    return Err(ParseError::line(line, format!("cannot read literal part `{item}`")));
                };
                parts.push(part);
                rest = rest[end..].trim_start();
            }
            if let Some(r) = rest.strip_prefix('+') {
                rest = r.trim_start();
            } else if !rest.is_empty() {
                return Err(ParseError::line(line, "expected `+` between literal parts"));
            }
        }
        Ok(parts)
    }

    fn word_parts(&self, text: &str, b: &RawBuiltin, line: u32) -> Result<Vec<WordPart>, ParseError> {
        text.split_whitespace()
            .filter(|t| *t != "ε")
            .map(|t| {
                if let Some(n) = t.strip_prefix("class($").and_then(|r| r.strip_suffix(')')) {
                    Ok(WordPart::ClassOf(Self::arg_index(n, b.arity, &b.name, line)?))
                } else if let Some(n) = t.strip_prefix('$') {
                    Ok(WordPart::ArgWord(Self::arg_index(n, b.arity, &b.name, line)?))
                } else {
                    Ok(WordPart::Letter(self.letter(t, line)?))
                }
            })
            .collect()
    }

    fn elem_set(
        &self,
        text: &str,
        monoid: &Monoid,
        b: &RawBuiltin,
        line: u32,
    ) -> Result<Vec<Vec<Factor>>, ParseError> {
        let t = text.trim();
        if t == "-" || t.is_empty() {
            return Ok(Vec::new());
        }
        t.split(',')
            .map(|item| {
                item.trim()
                    .split('*')
                    .map(|f| {
                        let f = f.trim();
                        if let Some(n) = f.strip_prefix('$') {
                            Ok(Factor::Arg(Self::arg_index(n, b.arity, &b.name, line)?))
                        } else {
                            monoid
                                .elem(f)
                                .map(Factor::Elem)
                                .ok_or_else(|| policy_err(line, PolicyError::UnknownElement(f.to_string())))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn typing_row(&self, text: &str, monoid: &Monoid, b: &RawBuiltin, line: u32) -> Result<TypingRow, ParseError> {
        let (pats, rest) = text
            .split_once("->")
            .ok_or_else(|| ParseError::line(line, "expected `->` in typing"))?;
        let (res, eff) = rest
            .split_once(';')
            .ok_or_else(|| ParseError::line(line, "expected `;` between result and effect"))?;
        let pats: Vec<Option<Elem>> = pats
            .split_whitespace()
            .map(|p| {
                if p == "_" {
                    Ok(None)
                } else {
                    monoid
                        .elem(p)
                        .map(Some)
                        .ok_or_else(|| policy_err(line, PolicyError::UnknownElement(p.to_string())))
                }
            })
            .collect::<Result<_, _>>()?;
        if pats.len() != b.arity {
            return Err(policy_err(
                line,
                PolicyError::Arity {
                    name: b.name.clone(),
                    expected: b.arity,
                    found: pats.len(),
                },
            ));
        }
        Ok(TypingRow {
            pats,
            result: self.elem_set(res, monoid, b, line)?,
            effect: self.elem_set(eff, monoid, b, line)?,
        })
    }

    fn finish(self, last_line: u32) -> Result<Policy, ParseError> {
        let mut parts = PolicyParts {
            alphabet: self.alphabet.clone(),
            fresh_pool: self.fresh.clone(),
            ..PolicyParts::default()
        };
        if self.has_monoid {
            let n = self.elements.len();
            let idx = |name: &str| -> Result<Elem, ParseError> {
                self.elements
                    .iter()
                    .position(|e| e == name)
                    .map(|i| Elem(i as u16))
                    .ok_or_else(|| policy_err(last_line, PolicyError::UnknownElement(name.to_string())))
            };
            let mut table = vec![vec![Elem(0); n]; n];
            for (i, a) in self.elements.iter().enumerate() {
                for (j, b) in self.elements.iter().enumerate() {
                    let c = self
                        .products
                        .get(&(a.clone(), b.clone()))
                        .ok_or_else(|| policy_err(last_line, PolicyError::NotTotal(a.clone(), b.clone())))?;
                    table[i][j] = idx(c)?;
                }
            }
            for (a, b) in self.products.keys() {
                idx(a)?;
                idx(b)?;
            }
            let neutral = idx(self
                .neutral
                .as_deref()
                .ok_or_else(|| ParseError::line(last_line, "monoid needs a `neutral` element"))?)?;
            let mut hom = Vec::new();
            for l in &self.alphabet {
                let e = self
                    .homs
                    .get(l)
                    .ok_or_else(|| ParseError::line(last_line, format!("no `hom` given for letter `{l}`")))?;
                hom.push(idx(e)?);
            }
            let monoid = Monoid::new(self.elements.clone(), table, neutral);
            if let Some(allowed) = &self.allowed {
                let mut set = BTreeSet::new();
                for (a, line) in allowed {
                    set.insert(
                        monoid
                            .elem(a)
                            .ok_or_else(|| policy_err(*line, PolicyError::UnknownElement(a.clone())))?,
                    );
                }
                parts.allowed = Some(set);
            }
            parts.monoid = Some((monoid, hom));
        } else if self.allowed.is_some() {
            return Err(ParseError::line(last_line, "[allowed] requires a [monoid] section"));
        }
        if self.has_automaton {
            let state = |name: &str, line: u32| -> Result<usize, ParseError> {
                self.states
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| policy_err(line, PolicyError::UnknownState(name.to_string())))
            };
            let initial = state(
                self.initial
                    .as_deref()
                    .ok_or_else(|| ParseError::line(last_line, "automaton needs an `initial` state"))?,
                last_line,
            )?;
            let default = match &self.default_state {
                Some(d) => Some(state(d, last_line)?),
                None => None,
            };
            let mut delta: Vec<Vec<Option<usize>>> = vec![vec![None; self.alphabet.len()]; self.states.len()];
            for (q, l, t, line) in &self.transitions {
                let qi = state(q, *line)?;
                let ti = state(t, *line)?;
                let li = self.letter(l, *line)?.0 as usize;
                if let Some(prev) = delta[qi][li] {
                    if prev != ti {
                        return Err(ParseError::line(*line, format!("nondeterministic transition from `{q}` on `{l}`")));
                    }
                }
                delta[qi][li] = Some(ti);
            }
            let mut full = Vec::new();
            for (qi, row) in delta.iter().enumerate() {
                let mut r = Vec::new();
                for (li, t) in row.iter().enumerate() {
                    match t.or(default) {
                        Some(t) => r.push(t),
                        None => {
                            return Err(policy_err(
                                last_line,
                                PolicyError::PartialAutomaton(self.states[qi].clone(), self.alphabet[li].clone()),
                            ))
                        }
                    }
                }
                full.push(r);
            }
            let accepting = self
                .accepting
                .iter()
                .map(|a| state(a, last_line))
                .collect::<Result<BTreeSet<_>, _>>()?;
            parts.automaton = Some(Automaton {
                states: self.states.clone(),
                initial,
                accepting,
                delta: full,
            });
        }
        for (m, w, line) in &self.lit2word {
            let word = self.word(&w.join(" "), *line)?;
            parts.lit2word.push((m.clone(), word));
        }

        // Builtin typings reference element names, which for compiled
        // automata only exist after compilation; assemble a builtin-free
        // policy first to learn the monoid.
        let base = Policy::assemble(parts.clone()).map_err(|e| policy_err(last_line, e))?;
        for b in &self.builtins {
            let mut rules = Vec::new();
            for (text, line) in &b.sems {
                let fields: Vec<&str> = split_semis(text);
                if fields.len() != 3 {
                    return Err(ParseError::line(*line, "expected `sem LIT ; TAG ; TRACE`"));
                }
                rules.push(SemRule {
                    lit: self.lit_parts(fields[0], b, *line)?,
                    tag: self.word_parts(fields[1], b, *line)?,
                    trace: self.word_parts(fields[2], b, *line)?,
                });
            }
            if rules.is_empty() {
                return Err(policy_err(b.line, PolicyError::NoRules(b.name.clone())));
            }
            let typing = b
                .types
                .iter()
                .map(|(t, line)| self.typing_row(t, &base.monoid, b, *line))
                .collect::<Result<Vec<_>, _>>()?;
            parts.builtins.push(Builtin {
                name: b.name.clone(),
                arity: b.arity,
                rules,
                typing,
            });
        }
        let line_of = |name: &str| self.builtins.iter().find(|b| b.name == name).map_or(last_line, |b| b.line);
        Policy::assemble(parts).map_err(|e| {
            let line = match &e {
                PolicyError::TypingUnsound { name, .. }
                | PolicyError::TypingNotTotal(name, _)
                | PolicyError::NoLetterFor(_, _, name) => line_of(name),
                _ => last_line,
            };
            policy_err(line, e)
        })
    }
}

/// Splits on `;` outside string literals.
fn split_semis(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        match c {
            '\\' if in_str && !escaped => {
                escaped = true;
                continue;
            }
            '"' if !escaped => in_str = !in_str,
            ';' if !in_str => {
                out.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        escaped = false;
    }
    out.push(&text[start..]);
    out
}

/// Parses a `.policy` file.
pub fn parse_policy(src: &str) -> Result<Policy, ParseError> {
    let mut reader = Reader {
        alphabet: Vec::new(),
        elements: Vec::new(),
        neutral: None,
        products: BTreeMap::new(),
        homs: BTreeMap::new(),
        has_monoid: false,
        allowed: None,
        states: Vec::new(),
        initial: None,
        accepting: Vec::new(),
        transitions: Vec::new(),
        default_state: None,
        has_automaton: false,
        lit2word: Vec::new(),
        builtins: Vec::new(),
        fresh: Vec::new(),
    };
    let mut section = Section::None;
    let mut last = 1;
    for (i, raw) in src.lines().enumerate() {
        let line = i as u32 + 1;
        last = line;
        let text = strip_comment(raw);
        let t = text.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('[') && t.ends_with(']') {
            section = match &t[1..t.len() - 1] {
                "alphabet" => Section::Alphabet,
                "monoid" => {
                    reader.has_monoid = true;
                    Section::Monoid
                }
                "automaton" => {
                    reader.has_automaton = true;
                    Section::Automaton
                }
                "allowed" => {
                    reader.allowed.get_or_insert_with(Vec::new);
                    Section::Allowed
                }
                "lit2word" => Section::Lit2Word,
                "builtins" => Section::Builtins,
                "fresh" => Section::Fresh,
                other => return Err(ParseError::line(line, format!("unknown section `[{other}]`"))),
            };
            continue;
        }
        reader.line(section, text, line)?;
    }
    reader.finish(last)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const TAINT: &str = r#"
[alphabet]
user ok
[monoid]
elements U T
neutral U
U * U = U
U * T = T
T * U = T
T * T = T
hom user = T
hom ok = U
[allowed]
U
[lit2word]
default = ok
[builtins]
builtin getString/0
  sem fresh ; user ; ε
builtin putString/1
  sem "" ; ε ; class($1)
"#;

    #[test]
    fn taint_policy() {
        let p = parse_policy(TAINT).unwrap();
        let t = p.monoid.elem("T").unwrap();
        let u = p.monoid.elem("U").unwrap();
        assert_eq!(p.monoid.size(), 2);
        assert_eq!(p.allowed, BTreeSet::from([u]));
        assert_eq!(p.classify(&[p.letter("user").unwrap()]), t);
        assert_eq!(p.classify(&[p.letter("ok").unwrap()]), u);
        assert_eq!(p.builtin_typing("getString", &[]).unwrap(), (BTreeSet::from([t]), BTreeSet::from([u])));
        for e in [t, u] {
            assert_eq!(p.builtin_typing("putString", &[e]).unwrap(), (BTreeSet::from([u]), BTreeSet::from([e])));
        }
    }

    #[test]
    fn missing_cell_is_not_total() {
        let src = TAINT.replace("T * T = T\n", "");
        let e = parse_policy(&src).unwrap_err();
        assert!(e.message.contains("multiplication not total"), "{e}");
    }

    #[test]
    fn unknown_letter_is_reported() {
        let src = TAINT.replace("hom ok = U", "hom ok = U\nhom bogus = U");
        let e = parse_policy(&src).unwrap_err();
        assert!(e.message.contains("unknown alphabet symbol"), "{e}");
    }

    #[test]
    fn unsound_declared_typing_is_rejected() {
        let src = TAINT.replace("  sem fresh ; user ; ε", "  sem fresh ; user ; ε\n  type -> U ; U");
        let e = parse_policy(&src).unwrap_err();
        assert!(e.message.contains("unsound"), "{e}");
    }

    #[test]
    fn partial_automaton_needs_default() {
        let src = "[alphabet]\na b\n[automaton]\nstates p q\ninitial p\naccepting p\np a -> q\n";
        let e = parse_policy(src).unwrap_err();
        assert!(e.message.contains("partial"), "{e}");
        let ok = format!("{src}default -> q\n");
        let p = parse_policy(&ok).unwrap();
        assert_eq!(p.monoid.size(), 2);
    }

    #[test]
    fn comments_and_quoted_hashes() {
        let src = "[alphabet]\na # letters\n[automaton]\nstates p\ninitial p\naccepting p\np a -> p\n[lit2word]\n\"#x\" = a\n";
        let p = parse_policy(src).unwrap();
        assert_eq!(p.lit2word("#x"), vec![Letter(0)]);
        assert_eq!(p.lit2word("y"), Vec::<Letter>::new());
    }
}
