//! Locating the builtin calls that make a trace leave `Allowed`.

use std::collections::{BTreeSet, HashSet};

use crate::contexts::Context;
use crate::lattice::RefinedType;
use crate::policy::{Effect, Elem};
use crate::syntax::{Expr, ExprKind, Label};

use super::{Analysis, Analyzer, ClassTable, Gamma, MaKey, Mode, Typer};

/// A builtin call at `label` that turns the allowed prefix class `prefix`
/// into the disallowed `prefix · emitted`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Blame {
    pub label: Label,
    pub builtin: String,
    pub prefix: Elem,
    pub emitted: Elem,
    pub result: Elem,
}

struct Walker<'a, 'b> {
    an: &'b Analyzer<'a>,
    typer: Typer<'a>,
    tab: ClassTable,
    seen: HashSet<(MaKey, BTreeSet<Elem>)>,
    out: BTreeSet<Blame>,
}

impl Walker<'_, '_> {
    fn concat(&self, p: &BTreeSet<Elem>, u: &Effect) -> BTreeSet<Elem> {
        let m = &self.an.policy.monoid;
        p.iter()
            .flat_map(|&a| u.iter().map(move |&b| m.mul(a, b)))
            .collect()
    }

    fn effect_of(&mut self, g: &mut Gamma, z: &Context, e: &Expr) -> Option<(RefinedType, Effect)> {
        self.typer
            .typeff(&mut self.tab, g, z, e)
            .ok()
            .map(|r| (r.ty, r.effect))
    }

    fn method(&mut self, key: &MaKey, prefixes: BTreeSet<Elem>) {
        if prefixes.is_empty() || !self.seen.insert((key.clone(), prefixes.clone())) {
            return;
        }
        let Some((_, def)) = self.an.program.mtable(key.class, &key.method) else {
            return;
        };
        let mut g = Gamma::for_key(key);
        self.expr(&mut g, &key.ctx, &def.body, prefixes);
    }

    /// Prefix classes after evaluating `e` from `prefixes`.
    fn expr(
        &mut self,
        g: &mut Gamma,
        z: &Context,
        e: &Expr,
        prefixes: BTreeSet<Elem>,
    ) -> BTreeSet<Elem> {
        match &e.kind {
            ExprKind::Let(x, e1, e2) => {
                let after = self.expr(g, z, e1, prefixes);
                let Some((t1, _)) = self.effect_of(g, z, e1) else {
                    return after;
                };
                g.push(x.clone(), t1);
                let res = self.expr(g, z, e2, after);
                g.pop();
                res
            }
            ExprKind::IfEq(x, y, e1, e2) => {
                let (Some(tx), Some(ty)) = (g.get(x).cloned(), g.get(y).cloned()) else {
                    return prefixes;
                };
                let common: Vec<_> = tx.regions.intersection(&ty.regions).copied().collect();
                g.push(x.clone(), RefinedType::new(tx.class, common.iter().copied()));
                g.push(y.clone(), RefinedType::new(ty.class, common.iter().copied()));
                let mut a = self.expr(g, z, e1, prefixes.clone());
                g.pop();
                g.pop();
                a.extend(self.expr(g, z, e2, prefixes));
                a
            }
            ExprKind::Cast(inner, _) => self.expr(g, z, inner, prefixes),
            ExprKind::Builtin(name, _) => {
                let Some((_, eff)) = self.effect_of(g, z, e) else {
                    return prefixes;
                };
                let m = &self.an.policy.monoid;
                for &p in &prefixes {
                    for &u in &eff {
                        let r = m.mul(p, u);
                        if self.an.policy.is_allowed(p) && !self.an.policy.is_allowed(r) {
                            self.out.insert(Blame {
                                label: e.label,
                                builtin: name.clone(),
                                prefix: p,
                                emitted: u,
                                result: r,
                            });
                        }
                    }
                }
                self.concat(&prefixes, &eff)
            }
            ExprKind::Invoke(x, m, ys) => {
                let keys = self
                    .typer
                    .invoke_keys(&mut self.tab, g, z, e.label, x, m, ys)
                    .unwrap_or_default();
                let mut eff = Effect::new();
                for k in keys {
                    if let Some(v) = self.tab.methods.get(&k) {
                        eff.extend(v.effect.iter().copied());
                    }
                    self.method(&k, prefixes.clone());
                }
                self.concat(&prefixes, &eff)
            }
            _ => prefixes,
        }
    }
}

/// Builtin call sites responsible for the disallowed effects of the entry.
pub fn blame(an: &Analyzer<'_>, analysis: &Analysis) -> Vec<Blame> {
    let mut w = Walker {
        an,
        typer: an.typer(Mode::Frozen),
        tab: analysis.table.clone(),
        seen: HashSet::new(),
        out: BTreeSet::new(),
    };
    let start: BTreeSet<Elem> = [an.policy.monoid.neutral()].into_iter().collect();
    w.method(&analysis.entry, start);
    w.out.into_iter().collect()
}
