use std::collections::BTreeSet;

use crate::checker::{audit, Check, Diagnostic};
use crate::lattice::{key_atoms_seq, leq_elem, LatticeElem, RefinedType, Renderer};

use super::{Analyzer, ClassTable, InferError, MaKey, Mode, SemiTable};

/// Checks a user table against the inferred one: every claimed signature
/// must be above the inferred summaries for its argument atoms, and the
/// table itself must be well-formed. `tab` carries the region names used
/// when `semi` was parsed.
pub fn validate_semi_table(
    an: &Analyzer<'_>,
    mut tab: ClassTable,
    semi: &SemiTable,
) -> Result<Vec<Diagnostic>, InferError> {
    let mut typer = an.typer(Mode::Open);
    let mut claims = Vec::new();
    for e in &semi.methods {
        typer.make_relevant(&mut tab, e.class, e.region);
        for a in &e.args {
            for r in a.alloc_regions() {
                typer.make_relevant(&mut tab, a.class, r);
            }
        }
        for args in key_atoms_seq(&e.args) {
            let key = MaKey {
                method: e.method.clone(),
                ctx: e.ctx.clone(),
                class: e.class,
                region: e.region,
                args,
            };
            if an.program.mtable(key.class, &key.method).is_none() {
                continue;
            }
            tab.methods
                .entry(key.clone())
                .or_insert_with(|| typer.method_bottom(key.class, &key.method));
            claims.push((key, e));
        }
    }
    let mut warnings = BTreeSet::new();
    an.solve(&mut tab, &mut warnings)?;

    let r = Renderer {
        program: an.program,
        regions: &tab.regions,
        monoid: &an.policy.monoid,
    };
    let mut out = audit(semi, an.program, &r);
    for (key, e) in claims {
        let inferred = &tab.methods[&key];
        let claimed = LatticeElem::new(e.ret.clone(), e.effect.clone());
        if !leq_elem(inferred, &claimed, an.program) {
            out.push(Diagnostic {
                check: Check::Completeness,
                location: format!(
                    "M {} {} {} ({})",
                    key.method,
                    key.ctx,
                    r.ty(&RefinedType::alloc(key.class, key.region)),
                    r.types(&key.args)
                ),
                expected: format!("at least {}", r.elem(inferred)),
                found: r.elem(&claimed),
            });
        }
    }
    for &(c, reg) in &tab.relevant {
        if !semi.relevant.contains(&(c, reg)) {
            out.push(Diagnostic {
                check: Check::Completeness,
                location: "relevant".into(),
                expected: r.ty(&RefinedType::alloc(c, reg)),
                found: "missing".into(),
            });
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}
