use super::*;
use crate::contexts::{Constant, KCfa};
use crate::lattice::Renderer;
use crate::parser::{parse_policy, parse_program, MAIN_CLASS};

const TAINT: &str = include_str!("../../corpus/taint.policy");
const EX1: &str = include_str!("../../corpus/ex1.fj");
const EX1_MUTATED: &str = include_str!("../../corpus/ex1-mutated.fj");

fn analyze_src(src: &str, pol: &Policy, ctx: &dyn ContextPolicy, entry: &str) -> (Program, Result<Analysis, InferError>) {
    let p = parse_program(src).unwrap();
    let res = {
        let an = Analyzer::new(&p, pol, ctx);
        Entry::parse(&p, entry).and_then(|e| an.analyze(&e))
    };
    (p, res)
}

fn effect_names(pol: &Policy, a: &Analysis) -> Vec<String> {
    a.result().effect.iter().map(|e| pol.monoid.name(*e).to_string()).collect()
}

#[test]
fn literal_method_converges_in_two_iterations() {
    let pol = parse_policy(TAINT).unwrap();
    let (p, a) = analyze_src(r#"main { "test"; }"#, &pol, &KCfa { k: 0 }, &format!("{MAIN_CLASS}.main"));
    let a = a.unwrap();
    assert_eq!(a.iterations, 2);
    let u = pol.monoid.elem("U").unwrap();
    assert_eq!(a.result().ty.regions, RefinedType::string([u]).regions);
    assert_eq!(effect_names(&pol, &a), ["U"]);
    let _ = p;
}

#[test]
fn example_one_is_compliant_for_every_k() {
    let pol = parse_policy(TAINT).unwrap();
    for k in 0..3 {
        let (_, a) = analyze_src(EX1, &pol, &KCfa { k }, "C.main");
        let a = a.unwrap();
        assert_eq!(verdict(&a.result().effect, &pol), Verdict::Compliant, "k = {k}");
    }
}

#[test]
fn example_one_field_typing_separates_regions() {
    let pol = parse_policy(TAINT).unwrap();
    let (p, a) = analyze_src(EX1, &pol, &KCfa { k: 0 }, "C.main");
    let a = a.unwrap();
    let d = p.class_id("D").unwrap();
    let allocs: Vec<_> = a.table.relevant.iter().filter(|(c, _)| *c == d).collect();
    assert_eq!(allocs.len(), 2);
    let mut tags: Vec<String> = a
        .table
        .fields
        .iter()
        .filter(|((f, c, _), _)| f == "s" && *c == d)
        .map(|(_, t)| {
            let r = Renderer { program: &p, regions: &a.table.regions, monoid: &pol.monoid };
            r.ty(t)
        })
        .collect();
    tags.sort();
    assert_eq!(tags, ["String@{T}", "String@{U}"]);
}

#[test]
fn mutated_example_one_violates() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src(EX1_MUTATED, &pol, &KCfa { k: 1 }, "C.main");
    let a = a.unwrap();
    let t = pol.monoid.elem("T").unwrap();
    assert_eq!(verdict(&a.result().effect, &pol), Verdict::Violation { witnesses: vec![t] });
}

#[test]
fn one_region_loses_object_sensitivity() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src(EX1, &pol, &Constant, "C.main");
    assert!(!verdict(&a.unwrap().result().effect, &pol).is_compliant());
}

#[test]
fn extra_iteration_is_a_no_op() {
    let pol = parse_policy(TAINT).unwrap();
    let ctx = KCfa { k: 1 };
    let (p, a) = analyze_src(EX1, &pol, &ctx, "C.main");
    let a = a.unwrap();
    let an = Analyzer::new(&p, &pol, &ctx);
    let mut tab = a.table.clone();
    assert!(!an.iterate(&mut tab, &mut BTreeSet::new()).unwrap());
    assert!(tab.same_entries(&a.table));
    an.check_well_typed(&a.table).unwrap();
}

#[test]
fn write_through_null_receiver_touches_nothing() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src(
        "class A { String s; } main { A a = null; a.s = getString(); }",
        &pol,
        &KCfa { k: 0 },
        &format!("{MAIN_CLASS}.main"),
    );
    assert!(a.unwrap().table.fields.is_empty());
}

#[test]
fn call_on_null_is_bottom_with_warning() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src(
        "class A { String m() { return putString(getString()); } } main { A a = null; a.m(); }",
        &pol,
        &KCfa { k: 0 },
        &format!("{MAIN_CLASS}.main"),
    );
    let a = a.unwrap();
    let t = pol.monoid.elem("T").unwrap();
    assert!(!a.result().effect.contains(&t));
    assert!(a.warnings.iter().any(|w| w.message.contains("always null")));
}

#[test]
fn string_used_as_object_is_a_type_error() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src(
        r#"class A { String s; } main { Object o = "x"; A a = (A) o; a.s; }"#,
        &pol,
        &KCfa { k: 0 },
        &format!("{MAIN_CLASS}.main"),
    );
    // the cast drops the string region, so the read is on a null-only value
    assert!(a.is_ok());
    let (_, b) = analyze_src(
        r#"main { putString(new Object()); }"#,
        &pol,
        &KCfa { k: 0 },
        &format!("{MAIN_CLASS}.main"),
    );
    assert!(matches!(b, Err(InferError::Type(_))));
}

#[test]
fn unknown_builtin_is_a_type_error() {
    let pol = parse_policy(TAINT).unwrap();
    let (_, a) = analyze_src("main { frobnicate(); }", &pol, &KCfa { k: 0 }, &format!("{MAIN_CLASS}.main"));
    assert!(matches!(a, Err(InferError::Type(_))));
}

#[test]
fn check_class_table_equalizes_subclass_fields() {
    let src = "class A { String s; } class B extends A {} main { new B(); }";
    let p = parse_program(src).unwrap();
    let a = p.class_id("A").unwrap();
    let b = p.class_id("B").unwrap();
    let mut tab = ClassTable::new();
    let r = tab.regions.intern(RegionKey::Single);
    tab.relevant.extend([(b, r), (a, r), (ClassId::OBJECT, r)]);
    tab.fields.insert(("s".into(), a, r), RefinedType::string([Elem(0)]));
    tab.fields.insert(("s".into(), b, r), RefinedType::string([Elem(1)]));
    assert!(check_class_table(&mut tab, &p, Elem(0)));
    let both = RefinedType::string([Elem(0), Elem(1)]);
    assert_eq!(tab.fields[&("s".to_string(), a, r)], both);
    assert_eq!(tab.fields[&("s".to_string(), b, r)], both);
    assert!(!check_class_table(&mut tab, &p, Elem(0)));
}

#[test]
fn check_class_table_raises_superclass_summary() {
    let src = "class A { String m() { return \"\"; } } class B extends A {} main { new B(); }";
    let p = parse_program(src).unwrap();
    let a = p.class_id("A").unwrap();
    let b = p.class_id("B").unwrap();
    let mut tab = ClassTable::new();
    let r = tab.regions.intern(RegionKey::Single);
    tab.relevant.extend([(b, r), (a, r), (ClassId::OBJECT, r)]);
    let key = |c| MaKey { method: "m".into(), ctx: Context::empty(), class: c, region: r, args: vec![] };
    let low = LatticeElem::new(RefinedType::string([Elem(0)]), [Elem(0)].into());
    let high = LatticeElem::new(RefinedType::string([Elem(1)]), [Elem(1)].into());
    tab.methods.insert(key(a), low.clone());
    tab.methods.insert(key(b), high.clone());
    assert!(check_class_table(&mut tab, &p, Elem(0)));
    assert_eq!(tab.methods[&key(a)], join_elem(&low, &high, &p));
    assert_eq!(tab.methods[&key(b)], high);
}

#[test]
fn exhaustive_lift_agrees_on_entry() {
    let pol = parse_policy(TAINT).unwrap();
    let ctx = KCfa { k: 0 };
    let src = r#"class A { String id(String x) { return x; } }
                 class C { String main() { A a = new A(); return putString(a.id("lit")); } }"#;
    let p = parse_program(src).unwrap();
    let an = Analyzer::new(&p, &pol, &ctx);
    let e = Entry::parse(&p, "C.main").unwrap();
    let lazy = an.analyze(&e).unwrap();
    let mut tab = ClassTable::new();
    an.lift_exhaustive(&mut tab);
    let key = an.seed(&mut tab, &e).unwrap();
    an.solve(&mut tab, &mut BTreeSet::new()).unwrap();
    assert_eq!(tab.methods[&key], *lazy.result());
}

#[test]
fn dump_parse_round_trip() {
    let pol = parse_policy(TAINT).unwrap();
    let ctx = KCfa { k: 1 };
    let (p, a) = analyze_src(EX1, &pol, &ctx, "C.main");
    let a = a.unwrap();
    let text = dump_table(&a.table, &p, &pol);
    let mut regions = a.table.regions.clone();
    let semi = parse_table(&text, &p, &pol, &mut regions).unwrap();
    let mut expected = SemiTable::from_table(&a.table);
    expected.methods.sort_by_key(|e| format!("{e:?}"));
    let mut got = semi.clone();
    got.methods.sort_by_key(|e| format!("{e:?}"));
    assert_eq!(got, expected);
    assert_eq!(table_io::dump_semi(&semi, &regions, &p, &pol), text);
}

#[test]
fn inferred_table_validates_and_smaller_claim_does_not() {
    let pol = parse_policy(TAINT).unwrap();
    let ctx = KCfa { k: 1 };
    let (p, a) = analyze_src(EX1_MUTATED, &pol, &ctx, "C.main");
    let a = a.unwrap();
    let an = Analyzer::new(&p, &pol, &ctx);
    let text = dump_table(&a.table, &p, &pol);
    let mut tab = ClassTable::new();
    let semi = parse_table(&text, &p, &pol, &mut tab.regions).unwrap();
    assert_eq!(validate_semi_table(&an, tab, &semi).unwrap(), vec![]);

    let lowered = text.replace("! {T,U}", "! {U}");
    assert_ne!(lowered, text);
    let mut tab = ClassTable::new();
    let semi = parse_table(&lowered, &p, &pol, &mut tab.regions).unwrap();
    let diags = validate_semi_table(&an, tab, &semi).unwrap();
    assert!(diags.iter().any(|d| d.check == crate::checker::Check::Completeness));
}

#[test]
fn blame_points_at_put_string() {
    let pol = parse_policy(TAINT).unwrap();
    let ctx = KCfa { k: 1 };
    let (p, a) = analyze_src(EX1_MUTATED, &pol, &ctx, "C.main");
    let a = a.unwrap();
    let an = Analyzer::new(&p, &pol, &ctx);
    let b = blame(&an, &a);
    assert!(!b.is_empty());
    assert!(b.iter().all(|x| x.builtin == "putString"));
    let span = p.span(b[0].label).unwrap();
    assert_eq!(span.line, 11);
}
