mod common;

use fjeucs::checker::audit;
use fjeucs::contexts::KCfa;
use fjeucs::harness::{generate_source, soundness_check, Budget, GenBounds};
use fjeucs::infer::{Analyzer, Entry, SemiTable};
use fjeucs::lattice::Renderer;
use fjeucs::parser::{parse_policy, parse_program, pretty_program, MAIN_CLASS};
use fjeucs::policy::{effect_concat, Effect, Elem, Letter};
use proptest::prelude::*;

fn builtins() -> Vec<(String, usize)> {
    let pol = parse_policy(&common::read("sanitize.policy")).unwrap();
    pol.builtins.values().map(|b| (b.name.clone(), b.arity)).collect()
}

#[test]
fn bundled_monoids_satisfy_the_laws() {
    for (name, pol) in common::policies() {
        let n = common::monoid_laws(&pol).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(n, pol.monoid.size().pow(3));
    }
}

#[test]
fn lattice_laws_hold_exhaustively() {
    common::lattice_laws().unwrap();
}

#[test]
fn compiled_automata_agree_with_their_runs() {
    let mut checked = 0;
    for (name, pol) in common::policies() {
        if pol.automaton.is_some() {
            checked += common::dfa_agreement(&pol, 1000, 7).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
    assert!(checked >= 3000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pretty_printing_roundtrips(seed in any::<u64>()) {
        let src = generate_source(seed, &GenBounds::default(), &builtins());
        let p = parse_program(&src).unwrap();
        let once = pretty_program(&p);
        let again = pretty_program(&parse_program(&once).unwrap());
        prop_assert_eq!(once, again);
    }

    #[test]
    fn generated_programs_are_sound(seed in any::<u64>(), k in 0usize..3) {
        let pol = parse_policy(&common::read("sanitize.policy")).unwrap();
        let src = generate_source(seed, &GenBounds::default(), &builtins());
        let p = parse_program(&src).unwrap();
        let e = Entry::parse(&p, &format!("{MAIN_CLASS}.main")).unwrap();
        let rep = soundness_check(&p, &e, &pol, &KCfa { k }, Budget::default()).unwrap();
        prop_assert!(rep.is_sound(), "{:?}\n{}", rep, src);
    }

    #[test]
    fn analysis_is_a_fixpoint_that_passes_audits(seed in any::<u64>()) {
        let pol = parse_policy(&common::read("taint.policy")).unwrap();
        let src = generate_source(seed, &GenBounds::default(), &builtins()[..0]);
        let p = parse_program(&src).unwrap();
        let e = Entry::parse(&p, &format!("{MAIN_CLASS}.main")).unwrap();
        let an = Analyzer::new(&p, &pol, &KCfa { k: 1 });
        let a = an.analyze(&e).unwrap();
        let mut tab = a.table.clone();
        let changed = an.iterate(&mut tab, &mut Default::default()).unwrap();
        prop_assert!(!changed && tab.same_entries(&a.table));
        prop_assert!(an.check_well_typed(&a.table).is_ok());
        let r = Renderer { program: &p, regions: &a.table.regions, monoid: &pol.monoid };
        let diags = audit(&SemiTable::from_table(&a.table), &p, &r);
        prop_assert!(diags.is_empty(), "{:?}", diags);
    }

    #[test]
    fn classification_is_a_homomorphism(
        u in proptest::collection::vec(0u16..5, 0..10),
        v in proptest::collection::vec(0u16..5, 0..10),
    ) {
        let pol = parse_policy(&common::read("auth.policy")).unwrap();
        let u: Vec<Letter> = u.into_iter().map(Letter).collect();
        let v: Vec<Letter> = v.into_iter().map(Letter).collect();
        let mut uv = u.clone();
        uv.extend(&v);
        prop_assert_eq!(pol.classify(&uv), pol.monoid.mul(pol.classify(&u), pol.classify(&v)));
    }

    #[test]
    fn effect_concatenation_is_monotone(
        a in proptest::collection::btree_set(0u16..6, 0..4),
        b in proptest::collection::btree_set(0u16..6, 0..4),
        extra in 0u16..6,
    ) {
        let pol = parse_policy(&common::read("sanitize.policy")).unwrap();
        let n = pol.monoid.size() as u16;
        let a: Effect = a.into_iter().map(|x| Elem(x % n)).collect();
        let b: Effect = b.into_iter().map(|x| Elem(x % n)).collect();
        let mut bigger = a.clone();
        bigger.insert(Elem(extra % n));
        let small = effect_concat(&a, &b, &pol.monoid);
        let large = effect_concat(&bigger, &b, &pol.monoid);
        prop_assert!(small.is_subset(&large));
    }
}
