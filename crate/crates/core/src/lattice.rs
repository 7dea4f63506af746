//! Refined types `C_R`, effects, and the semilattice `Typ × Eff`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::contexts::{RegionId, RegionInterner};
use crate::policy::{Effect, Elem, Monoid};
use crate::syntax::{ClassId, Program};

/// Either an allocation region or a tag class of strings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Alloc(RegionId),
    Tag(Elem),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefinedType {
    pub class: ClassId,
    pub regions: BTreeSet<Region>,
}

/// Which kind of regions a type carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    Empty,
    Ordinary,
    Tags,
    Mixed,
}

impl RefinedType {
    pub fn new(class: ClassId, regions: impl IntoIterator<Item = Region>) -> RefinedType {
        RefinedType {
            class,
            regions: regions.into_iter().collect(),
        }
    }

    pub fn empty(class: ClassId) -> RefinedType {
        RefinedType {
            class,
            regions: BTreeSet::new(),
        }
    }

    pub fn null() -> RefinedType {
        RefinedType::empty(ClassId::NULL)
    }

    pub fn alloc(class: ClassId, r: RegionId) -> RefinedType {
        RefinedType::new(class, [Region::Alloc(r)])
    }

    pub fn string(tags: impl IntoIterator<Item = Elem>) -> RefinedType {
        RefinedType::new(ClassId::STRING, tags.into_iter().map(Region::Tag))
    }

    pub fn form(&self) -> Form {
        let ordinary = self.regions.iter().any(|r| matches!(r, Region::Alloc(_)));
        let tags = self.regions.iter().any(|r| matches!(r, Region::Tag(_)));
        match (ordinary, tags) {
            (false, false) => Form::Empty,
            (true, false) => Form::Ordinary,
            (false, true) => Form::Tags,
            (true, true) => Form::Mixed,
        }
    }

    pub fn alloc_regions(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.regions.iter().filter_map(|r| match r {
            Region::Alloc(id) => Some(*id),
            Region::Tag(_) => None,
        })
    }

    pub fn tags(&self) -> impl Iterator<Item = Elem> + '_ {
        self.regions.iter().filter_map(|r| match r {
            Region::Tag(e) => Some(*e),
            Region::Alloc(_) => None,
        })
    }

    pub fn is_atomic(&self) -> bool {
        self.regions.len() == 1
    }
}

/// `C ⪯ D` and `R ⊆ S`.
pub fn subtype(t1: &RefinedType, t2: &RefinedType, p: &Program) -> bool {
    p.subclass_of(t1.class, t2.class) && t1.regions.is_subset(&t2.regions)
}

pub fn subtype_seq(a: &[RefinedType], b: &[RefinedType], p: &Program) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| subtype(x, y, p))
}

/// `C_R ⊔ D_S = E_{R∪S}` with `E` the least common superclass.
pub fn join_type(t1: &RefinedType, t2: &RefinedType, p: &Program) -> RefinedType {
    RefinedType {
        class: p.least_common_superclass(t1.class, t2.class),
        regions: t1.regions.union(&t2.regions).copied().collect(),
    }
}

/// Join of a set of types; `Object` with every given region when empty is
/// not representable here, so callers pass the universe explicitly.
pub fn join_all<'a>(
    ts: impl IntoIterator<Item = &'a RefinedType>,
    p: &Program,
    top: impl FnOnce() -> RefinedType,
) -> RefinedType {
    let mut it = ts.into_iter();
    match it.next() {
        None => top(),
        Some(first) => it.fold(first.clone(), |acc, t| join_type(&acc, t, p)),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticeElem {
    pub ty: RefinedType,
    pub effect: Effect,
}

impl LatticeElem {
    pub fn new(ty: RefinedType, effect: Effect) -> LatticeElem {
        LatticeElem { ty, effect }
    }
}

pub fn leq_elem(a: &LatticeElem, b: &LatticeElem, p: &Program) -> bool {
    subtype(&a.ty, &b.ty, p) && a.effect.is_subset(&b.effect)
}

pub fn join_elem(a: &LatticeElem, b: &LatticeElem, p: &Program) -> LatticeElem {
    LatticeElem {
        ty: join_type(&a.ty, &b.ty, p),
        effect: a.effect.union(&b.effect).copied().collect(),
    }
}

/// A method signature `(σ̄, τ, U)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSig {
    pub args: Vec<RefinedType>,
    pub ret: RefinedType,
    pub effect: Effect,
}

/// `s1 ⊑_m s2`: contravariant in the arguments, covariant in result and
/// effect.
pub fn sig_leq(s1: &MethodSig, s2: &MethodSig, p: &Program) -> bool {
    subtype_seq(&s2.args, &s1.args, p)
        && subtype(&s1.ret, &s2.ret, p)
        && s1.effect.is_subset(&s2.effect)
}

/// `atoms(C_R) = { C_r | r ∈ R }`.
pub fn atoms(t: &RefinedType) -> Vec<RefinedType> {
    t.regions
        .iter()
        .map(|r| RefinedType::new(t.class, [*r]))
        .collect()
}

/// Cartesian product of the atoms of each component.
pub fn atoms_seq(ts: &[RefinedType]) -> Vec<Vec<RefinedType>> {
    product(ts.iter().map(atoms).collect())
}

/// Atoms used as table keys: a type without regions stands for itself.
pub fn key_atoms(t: &RefinedType) -> Vec<RefinedType> {
    if t.regions.is_empty() {
        vec![t.clone()]
    } else {
        atoms(t)
    }
}

pub fn key_atoms_seq(ts: &[RefinedType]) -> Vec<Vec<RefinedType>> {
    product(ts.iter().map(key_atoms).collect())
}

fn product(parts: Vec<Vec<RefinedType>>) -> Vec<Vec<RefinedType>> {
    let mut out = vec![Vec::new()];
    for choices in parts {
        let mut next = Vec::with_capacity(out.len() * choices.len());
        for prefix in &out {
            for c in &choices {
                let mut v = prefix.clone();
                v.push(c.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// Stable textual rendering of types and effects.
pub struct Renderer<'a> {
    pub program: &'a Program,
    pub regions: &'a RegionInterner,
    pub monoid: &'a Monoid,
}

impl<'a> Renderer<'a> {
    pub fn region(&self, r: &Region) -> String {
        match r {
            Region::Alloc(id) => self.regions.key(*id).to_string(),
            Region::Tag(e) => self.monoid.name(*e).to_string(),
        }
    }

    pub fn ty(&self, t: &RefinedType) -> String {
        let mut s = format!("{}@{{", self.program.class_name(t.class));
        let mut parts: Vec<String> = t.regions.iter().map(|r| self.region(r)).collect();
        parts.sort();
        s.push_str(&parts.join(","));
        s.push('}');
        s
    }

    pub fn effect(&self, u: &Effect) -> String {
        let mut parts: Vec<&str> = u.iter().map(|e| self.monoid.name(*e)).collect();
        parts.sort();
        format!("{{{}}}", parts.join(","))
    }

    pub fn elem(&self, l: &LatticeElem) -> String {
        let mut s = self.ty(&l.ty);
        let _ = write!(s, " ! {}", self.effect(&l.effect));
        s
    }

    pub fn types(&self, ts: &[RefinedType]) -> String {
        ts.iter().map(|t| self.ty(t)).collect::<Vec<_>>().join(", ")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::ProgramBuilder;

    fn prog() -> Program {
        let mut b = ProgramBuilder::new();
        b.class("A", "Object");
        b.class("B", "A");
        b.class("C", "A");
        b.build()
    }

    fn all_types(p: &Program) -> Vec<RefinedType> {
        // 4 ordinary-ish classes x subsets of 3 regions
        let classes = [ClassId::OBJECT, ClassId::NULL, p.class_id("A").unwrap(), p.class_id("B").unwrap(), p.class_id("C").unwrap()];
        let regions = [Region::Alloc(RegionId(0)), Region::Alloc(RegionId(1)), Region::Tag(Elem(0))];
        let mut out = Vec::new();
        for &c in &classes {
            for mask in 0..8u8 {
                let rs = (0..3).filter(|i| mask & (1 << i) != 0).map(|i| regions[i]);
                if c == ClassId::NULL && mask != 0 {
                    continue;
                }
                out.push(RefinedType::new(c, rs));
            }
        }
        out
    }

    #[test]
    fn subtype_examples() {
        let p = prog();
        let d = p.class_id("B").unwrap();
        let red = Region::Alloc(RegionId(0));
        let green = Region::Alloc(RegionId(1));
        assert!(subtype(&RefinedType::new(d, [red]), &RefinedType::new(d, [red, green]), &p));
        assert!(subtype(&RefinedType::null(), &RefinedType::new(d, [red]), &p));
        assert!(!subtype(&RefinedType::string([Elem(1)]), &RefinedType::string([Elem(0)]), &p));
    }

    #[test]
    fn join_is_least_upper_bound() {
        let p = prog();
        let ts = all_types(&p);
        for a in &ts {
            assert_eq!(&join_type(a, a, &p), a);
            for b in &ts {
                let j = join_type(a, b, &p);
                assert_eq!(j, join_type(b, a, &p));
                assert!(subtype(a, &j, &p) && subtype(b, &j, &p));
                for u in &ts {
                    if subtype(a, u, &p) && subtype(b, u, &p) {
                        assert!(subtype(&j, u, &p));
                    }
                }
                for c in &ts {
                    assert_eq!(join_type(&j, c, &p), join_type(a, &join_type(b, c, &p), &p));
                }
            }
        }
    }

    #[test]
    fn subtype_is_partial_order() {
        let p = prog();
        let ts = all_types(&p);
        for a in &ts {
            assert!(subtype(a, a, &p));
            for b in &ts {
                if a != b {
                    assert!(!(subtype(a, b, &p) && subtype(b, a, &p)));
                }
            }
        }
    }

    #[test]
    fn join_all_empty_is_top() {
        let p = prog();
        let top = join_all(std::iter::empty(), &p, || RefinedType::empty(ClassId::OBJECT));
        assert_eq!(top.class, ClassId::OBJECT);
    }

    #[test]
    fn atoms_and_products() {
        let a = RefinedType::new(ClassId::OBJECT, [Region::Alloc(RegionId(0))]);
        assert_eq!(atoms(&a), vec![a.clone()]);
        let b = RefinedType::new(ClassId::OBJECT, [Region::Alloc(RegionId(0)), Region::Alloc(RegionId(1))]);
        assert_eq!(atoms(&b).len(), 2);
        assert_eq!(atoms_seq(&[b.clone(), b.clone()]).len(), 4);
        assert_eq!(key_atoms(&RefinedType::null()), vec![RefinedType::null()]);
    }

    #[test]
    fn sig_leq_is_contravariant_in_arguments() {
        let p = prog();
        let r0 = Region::Alloc(RegionId(0));
        let r1 = Region::Alloc(RegionId(1));
        let a = p.class_id("A").unwrap();
        let narrow = MethodSig {
            args: vec![RefinedType::new(a, [r0])],
            ret: RefinedType::null(),
            effect: Effect::new(),
        };
        let wide = MethodSig {
            args: vec![RefinedType::new(a, [r0, r1])],
            ..narrow.clone()
        };
        assert!(sig_leq(&narrow, &narrow, &p));
        assert!(sig_leq(&wide, &narrow, &p));
        assert!(!sig_leq(&narrow, &wide, &p));
    }
}
