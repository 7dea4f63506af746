#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use fjeucs::contexts::RegionId;
use fjeucs::lattice::{join_elem, join_type, leq_elem, subtype, LatticeElem, RefinedType, Region};
use fjeucs::parser::parse_policy;
use fjeucs::policy::{transition_monoid, Elem, Policy};
use fjeucs::syntax::{ClassId, Program, ProgramBuilder};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(name)).unwrap()
}

/// Every bundled policy, by file name.
pub fn policies() -> Vec<(String, Policy)> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let n = e.unwrap().file_name().into_string().unwrap();
            n.ends_with(".policy").then_some(n)
        })
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|n| {
            let p = parse_policy(&read(&n)).unwrap_or_else(|e| panic!("{n}: {e}"));
            (n, p)
        })
        .collect()
}

/// Associativity and identity on all triples; returns the number of triples.
pub fn monoid_laws(pol: &Policy) -> Result<usize, String> {
    let m = &pol.monoid;
    let es: Vec<Elem> = m.elements().collect();
    let mut n = 0;
    for &a in &es {
        if m.mul(a, m.neutral()) != a || m.mul(m.neutral(), a) != a {
            return Err(format!("identity fails at {}", m.name(a)));
        }
        for &b in &es {
            let ab = m.mul(a, b);
            for &c in &es {
                n += 1;
                if m.mul(ab, c) != m.mul(a, m.mul(b, c)) {
                    return Err(format!("({0}{1}){2} != {0}({1}{2})", m.name(a), m.name(b), m.name(c)));
                }
            }
        }
    }
    Ok(n)
}

/// Object with A, B under it and C under A: four classes.
pub fn small_hierarchy() -> Program {
    let mut b = ProgramBuilder::new();
    b.class("A", "Object");
    b.class("B", "Object");
    b.class("C", "A");
    b.build()
}

fn types_over(p: &Program, regions: &[Region]) -> Vec<RefinedType> {
    let mut classes = vec![ClassId::OBJECT, ClassId::STRING, ClassId::NULL];
    for c in ["A", "B", "C"] {
        classes.push(p.class_id(c).unwrap());
    }
    let mut out = Vec::new();
    for &c in &classes {
        for mask in 0..(1u32 << regions.len()) {
            let rs = (0..regions.len()).filter(|i| mask & (1 << i) != 0).map(|i| regions[i]);
            out.push(RefinedType::new(c, rs));
        }
    }
    out
}

/// Partial-order and least-upper-bound laws for refined types and for
/// type-effect pairs, exhaustively over three regions and four classes.
pub fn lattice_laws() -> Result<usize, String> {
    let p = small_hierarchy();
    let universes = [
        vec![Region::Alloc(RegionId(0)), Region::Alloc(RegionId(1)), Region::Alloc(RegionId(2))],
        vec![Region::Alloc(RegionId(0)), Region::Tag(Elem(0)), Region::Tag(Elem(1))],
    ];
    let mut n = 0;
    for u in &universes {
        let ts = types_over(&p, u);
        for a in &ts {
            if !subtype(a, a, &p) {
                return Err(format!("reflexivity fails at {a:?}"));
            }
            for b in &ts {
                let ab = subtype(a, b, &p);
                if ab && subtype(b, a, &p) && a != b {
                    return Err(format!("antisymmetry fails at {a:?}, {b:?}"));
                }
                let j = join_type(a, b, &p);
                if j != join_type(b, a, &p) || !subtype(a, &j, &p) || !subtype(b, &j, &p) {
                    return Err(format!("join is not an upper bound of {a:?}, {b:?}"));
                }
                for c in &ts {
                    n += 1;
                    if ab && subtype(b, c, &p) && !subtype(a, c, &p) {
                        return Err(format!("transitivity fails at {a:?}, {b:?}, {c:?}"));
                    }
                    if subtype(a, c, &p) && subtype(b, c, &p) && !subtype(&j, c, &p) {
                        return Err(format!("join of {a:?}, {b:?} is not below {c:?}"));
                    }
                }
            }
        }
    }
    let effects: Vec<BTreeSet<Elem>> = (0..4u32)
        .map(|mask| (0..2).filter(|i| mask & (1 << i) != 0).map(|i| Elem(i as u16)).collect())
        .collect();
    let types = types_over(&p, &universes[1][..2]);
    let elems: Vec<LatticeElem> = types
        .iter()
        .flat_map(|t| effects.iter().map(move |e| LatticeElem::new(t.clone(), e.clone())))
        .collect();
    for a in &elems {
        for b in &elems {
            let j = join_elem(a, b, &p);
            if !leq_elem(a, &j, &p) || !leq_elem(b, &j, &p) {
                return Err("pair join is not an upper bound".into());
            }
            for c in &elems {
                n += 1;
                if leq_elem(a, c, &p) && leq_elem(b, c, &p) && !leq_elem(&j, c, &p) {
                    return Err("pair join is not least".into());
                }
            }
        }
    }
    Ok(n)
}

/// For a policy with an automaton: on `count` random words, the compiled
/// transformation equals the automaton run from every state, and the
/// policy's classification decides acceptance.
pub fn dfa_agreement(pol: &Policy, count: usize, seed: u64) -> Result<usize, String> {
    let Some(a) = &pol.automaton else {
        return Ok(0);
    };
    let tm = transition_monoid(a, &pol.alphabet);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..count {
        let w = pol.random_word(&mut rng, 12);
        let e = w
            .iter()
            .fold(tm.monoid.neutral(), |acc, l| tm.monoid.mul(acc, tm.hom[l.0 as usize]));
        let f = &tm.functions[e.0 as usize];
        for (q, fq) in f.iter().enumerate() {
            if *fq != a.run_from(q, &w) {
                return Err(format!("transformation disagrees on {} from state {q}", pol.render_word(&w)));
            }
        }
        if tm.allowed.contains(&e) != a.accepts(&w) || pol.is_allowed(pol.classify(&w)) != a.accepts(&w) {
            return Err(format!("acceptance disagrees on {}", pol.render_word(&w)));
        }
    }
    Ok(count)
}
