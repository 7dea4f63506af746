//! Analysis parameters: call-string contexts, the context transfer function
//! and the allocation-site abstraction naming regions.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::syntax::{ClassId, ExprKind, Label, Program};

/// A call string, most recent call site first.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Context(pub Vec<Label>);

impl Context {
    pub fn empty() -> Context {
        Context(Vec::new())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str("]")
    }
}

/// What a region stands for. `Site` is the allocation-site abstraction;
/// the other variants cover the constant policy and the objects that exist
/// before the entry method runs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegionKey {
    Site { ctx: Context, pos: Label },
    Single,
    Entry,
    EntryParam(usize),
}

impl fmt::Display for RegionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionKey::Site { ctx, pos } if ctx.is_empty() => write!(f, "{pos}"),
            RegionKey::Site { ctx, pos } => {
                write!(f, "{pos}/")?;
                for (i, l) in ctx.0.iter().enumerate() {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    write!(f, "{l}")?;
                }
                Ok(())
            }
            RegionKey::Single => f.write_str("*"),
            RegionKey::Entry => f.write_str("$entry"),
            RegionKey::EntryParam(i) => write!(f, "$arg{i}"),
        }
    }
}

impl RegionKey {
    /// Inverse of the `Display` rendering.
    pub fn parse(s: &str) -> Option<RegionKey> {
        match s {
            "*" => return Some(RegionKey::Single),
            "$entry" => return Some(RegionKey::Entry),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("$arg") {
            return n.parse().ok().map(RegionKey::EntryParam);
        }
        let (pos, ctx) = match s.split_once('/') {
            Some((p, c)) => {
                let ctx = c
                    .split('.')
                    .map(|l| l.parse::<Label>().ok())
                    .collect::<Option<Vec<_>>>()?;
                (p, ctx)
            }
            None => (s, Vec::new()),
        };
        Some(RegionKey::Site {
            ctx: Context(ctx),
            pos: pos.parse().ok()?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(pub u32);

/// Interns region keys as dense integers.
#[derive(Clone, Debug, Default)]
pub struct RegionInterner {
    keys: Vec<RegionKey>,
    ids: HashMap<RegionKey, RegionId>,
}

impl RegionInterner {
    pub fn new() -> RegionInterner {
        RegionInterner::default()
    }

    pub fn intern(&mut self, key: RegionKey) -> RegionId {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = RegionId(self.keys.len() as u32);
        self.keys.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    pub fn get(&self, key: &RegionKey) -> Option<RegionId> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: RegionId) -> &RegionKey {
        &self.keys[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// The pair (φ, ψ). Implementations only affect precision, never soundness.
pub trait ContextPolicy: Send + Sync {
    fn name(&self) -> String;

    /// ψ: names the region of an allocation at `pos` in context `z`.
    fn psi(&self, z: &Context, pos: Label) -> RegionKey;

    /// φ: the callee context for a call at `pos`.
    fn phi(&self, z: &Context, class: ClassId, region: &RegionKey, method: &str, pos: Label)
        -> Context;

    fn initial(&self) -> Context {
        Context::empty()
    }

    /// Every context of the (finite) context universe for `p`.
    fn contexts(&self, p: &Program) -> Vec<Context>;
}

/// Call strings of length at most `k`, regions `(z, i)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KCfa {
    pub k: usize,
}

impl ContextPolicy for KCfa {
    fn name(&self) -> String {
        format!("{}-cfa", self.k)
    }

    fn psi(&self, z: &Context, pos: Label) -> RegionKey {
        RegionKey::Site {
            ctx: z.clone(),
            pos,
        }
    }

    fn phi(&self, z: &Context, _class: ClassId, _r: &RegionKey, _m: &str, pos: Label) -> Context {
        let mut v = Vec::with_capacity(self.k);
        if self.k > 0 {
            v.push(pos);
            v.extend(z.0.iter().copied().take(self.k - 1));
        }
        Context(v)
    }

    fn contexts(&self, p: &Program) -> Vec<Context> {
        let sites: BTreeSet<Label> = p.call_sites().into_iter().collect();
        let mut out = vec![Context::empty()];
        let mut layer = vec![Context::empty()];
        for _ in 0..self.k {
            let mut next = Vec::new();
            for z in &layer {
                for &s in &sites {
                    let mut v = vec![s];
                    v.extend(z.0.iter().copied());
                    next.push(Context(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}

/// One context and one allocation region for everything.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Constant;

impl ContextPolicy for Constant {
    fn name(&self) -> String {
        "constant".into()
    }

    fn psi(&self, _z: &Context, _pos: Label) -> RegionKey {
        RegionKey::Single
    }

    fn phi(&self, _z: &Context, _c: ClassId, _r: &RegionKey, _m: &str, _pos: Label) -> Context {
        Context::empty()
    }

    fn contexts(&self, _p: &Program) -> Vec<Context> {
        vec![Context::empty()]
    }
}

/// Builds a policy from its CLI name.
pub fn by_name(name: &str, k: usize) -> Option<Box<dyn ContextPolicy>> {
    match name {
        "kcfa" | "k-cfa" => Some(Box::new(KCfa { k })),
        "constant" => Some(Box::new(Constant)),
        _ => None,
    }
}

/// Every region the policy can produce for allocations in `p`.
pub fn region_universe(p: &Program, policy: &dyn ContextPolicy) -> BTreeSet<RegionKey> {
    let mut out = BTreeSet::new();
    let sites: Vec<Label> = p
        .bodies()
        .flat_map(|(_, _, d)| d.body.preorder())
        .filter(|e| matches!(e.kind, ExprKind::New(_)))
        .map(|e| e.label)
        .collect();
    for z in policy.contexts(p) {
        for &i in &sites {
            out.insert(policy.psi(&z, i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_pairs_context_and_position() {
        let p = KCfa { k: 1 };
        let z = Context::empty();
        assert_eq!(p.psi(&z, 3), RegionKey::Site { ctx: Context::empty(), pos: 3 });
        assert_eq!(p.psi(&z, 3), p.psi(&z, 3));
        assert_ne!(p.psi(&z, 3), p.psi(&z, 4));
    }

    #[test]
    fn phi_truncates_call_strings() {
        let z = Context(vec![7]);
        let k0 = KCfa { k: 0 };
        assert_eq!(k0.phi(&z, ClassId::OBJECT, &RegionKey::Single, "m", 9), Context::empty());
        let k1 = KCfa { k: 1 };
        assert_eq!(k1.phi(&z, ClassId::OBJECT, &RegionKey::Single, "m", 9), Context(vec![9]));
        let k2 = KCfa { k: 2 };
        let z1 = Context(vec![1]);
        assert_eq!(k2.phi(&z1, ClassId::OBJECT, &RegionKey::Single, "m", 2), Context(vec![2, 1]));
        let z2 = Context(vec![2, 1]);
        assert_eq!(k2.phi(&z2, ClassId::OBJECT, &RegionKey::Single, "m", 3), Context(vec![3, 2]));
    }

    #[test]
    fn interner_roundtrip() {
        let mut i = RegionInterner::new();
        let a = i.intern(RegionKey::Single);
        let b = i.intern(RegionKey::Entry);
        assert_eq!(i.intern(RegionKey::Single), a);
        assert_ne!(a, b);
        assert_eq!(i.key(b), &RegionKey::Entry);
    }

    #[test]
    fn region_key_text_roundtrip() {
        for k in [
            RegionKey::Single,
            RegionKey::Entry,
            RegionKey::EntryParam(2),
            RegionKey::Site { ctx: Context::empty(), pos: 12 },
            RegionKey::Site { ctx: Context(vec![4, 9]), pos: 12 },
        ] {
            assert_eq!(RegionKey::parse(&k.to_string()), Some(k));
        }
    }
}
