//! Syntactic read footprints, separator formulas, framed reads, and the
//! syntactic subeffect check.

use super::ast::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("footprint error: {0}")]
pub struct FtptError(pub String);

/// Syntactic read footprint of an expression.
pub fn ftpt(e: &Expr) -> Result<Effect, FtptError> {
    let mut eff = Effect::empty();
    ftpt_into(e, &BTreeSet::new(), &mut eff)?;
    Ok(eff)
}

fn ftpt_into(e: &Expr, bound: &BTreeSet<VarName>, out: &mut Effect) -> Result<(), FtptError> {
    match e {
        Expr::Int(_) | Expr::Bool(_) | Expr::Null | Expr::EmptyRgn => Ok(()),
        Expr::Var(x) => {
            if !bound.contains(x) {
                out.push(EffAtom::rd_var(x));
            }
            Ok(())
        }
        Expr::Bin(_, a, b) | Expr::Rgn(_, a, b) => {
            ftpt_into(a, bound, out)?;
            ftpt_into(b, bound, out)
        }
        Expr::Not(a) | Expr::Singleton(a) => ftpt_into(a, bound, out),
        Expr::Image(g, sel) => {
            out.push(EffAtom {
                kind: RdWr::Rd,
                target: EffTarget::Image((**g).clone(), sel.clone()),
            });
            ftpt_into(g, bound, out)
        }
        Expr::App(f, _) => Err(FtptError(format!(
            "footprint of spec function {} is not defined; use the semantic framing check",
            f.name()
        ))),
    }
}

/// Syntactic read footprint of a quantifier-free formula.
pub fn ftpt_uformula(p: &UFormula) -> Result<Effect, FtptError> {
    let mut eff = Effect::empty();
    ftpt_uf(p, &BTreeSet::new(), &mut eff)?;
    Ok(eff)
}

fn ftpt_uf(p: &UFormula, bound: &BTreeSet<VarName>, out: &mut Effect) -> Result<(), FtptError> {
    match p {
        UFormula::True | UFormula::False => Ok(()),
        UFormula::Atom(e) => ftpt_into(e, bound, out),
        UFormula::PointsTo(x, f, t) => {
            if !bound.contains(x) {
                out.push(EffAtom::rd_var(x));
            }
            out.push(EffAtom {
                kind: RdWr::Rd,
                target: EffTarget::Image(
                    Expr::Singleton(Box::new(Expr::Var(x.clone()))),
                    FieldSel::Field(f.clone()),
                ),
            });
            ftpt_into(t, bound, out)
        }
        UFormula::Subset(a, b) => {
            ftpt_into(a, bound, out)?;
            ftpt_into(b, bound, out)
        }
        UFormula::Not(q) => ftpt_uf(q, bound, out),
        UFormula::And(a, b) | UFormula::Or(a, b) | UFormula::Imp(a, b) => {
            ftpt_uf(a, bound, out)?;
            ftpt_uf(b, bound, out)
        }
        UFormula::Forall(x, _, q) => {
            let mut bound2 = bound.clone();
            bound2.insert(x.clone());
            ftpt_uf(q, &bound2, out)
        }
    }
}

fn fields_overlap(a: &FieldSel, b: &FieldSel) -> bool {
    match (a, b) {
        (FieldSel::Any, _) | (_, FieldSel::Any) => true,
        (FieldSel::Field(f), FieldSel::Field(g)) => f == g,
    }
}

/// The separator formula: holds in a state iff the read locations of the
/// first effect are disjoint from the write locations of the second.
pub fn separator(reads: &Effect, writes: &Effect) -> UFormula {
    let mut conjuncts: Vec<UFormula> = Vec::new();
    for r in reads.reads() {
        for w in writes.writes() {
            match (&r.target, &w.target) {
                (EffTarget::Var(x), EffTarget::Var(y)) => {
                    if x == y {
                        return UFormula::False;
                    }
                }
                (EffTarget::Var(_), EffTarget::Image(..))
                | (EffTarget::Image(..), EffTarget::Var(_)) => {}
                (EffTarget::Image(g, f), EffTarget::Image(h, f2)) => {
                    if fields_overlap(f, f2) {
                        conjuncts.push(UFormula::Subset(
                            Expr::Rgn(RgnOp::Inter, Box::new(g.clone()), Box::new(h.clone())),
                            Expr::Singleton(Box::new(Expr::Null)),
                        ));
                    }
                }
            }
        }
    }
    conjuncts.sort();
    conjuncts.dedup();
    UFormula::and(conjuncts)
}

/// An effect has framed reads when the footprint of every read image's
/// region expression is included in the effect.
pub fn framed_reads_check(eff: &Effect) -> bool {
    for atom in eff.reads() {
        if let EffTarget::Image(g, _) = &atom.target {
            match ftpt(g) {
                Ok(fp) => {
                    if !fp.0.iter().all(|a| eff.contains(a)) {
                        return false;
                    }
                }
                Err(_) => return false,
            }
        }
    }
    true
}

/// Sufficient syntactic subeffect check: every atom of e1 is subsumed by an
/// atom of e2 (identical, or an `any` image over the same region).
pub fn subeffect_syntactic(e1: &Effect, e2: &Effect) -> bool {
    e1.0.iter().all(|a| {
        if e2.contains(a) {
            return true;
        }
        if let EffTarget::Image(g, _) = &a.target {
            return e2.contains(&EffAtom {
                kind: a.kind,
                target: EffTarget::Image(g.clone(), FieldSel::Any),
            });
        }
        false
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse::*;

    #[test]
    fn ftpt_of_variable() {
        let e = parse_expr_str("x").unwrap();
        assert_eq!(ftpt(&e).unwrap(), parse_effect_str("rd x").unwrap());
    }

    #[test]
    fn ftpt_of_image_includes_region_footprint() {
        let e = parse_expr_str("r`nxt").unwrap();
        let eff = ftpt(&e).unwrap();
        assert!(eff.same_atoms(&parse_effect_str("rd r`nxt, rd r").unwrap()));
    }

    #[test]
    fn ftpt_of_pointsto() {
        let p = parse_uformula_str("x.f = 0").unwrap();
        let eff = ftpt_uformula(&p).unwrap();
        assert!(eff.same_atoms(&parse_effect_str("rd x, rd {x}`f").unwrap()));
    }

    #[test]
    fn separator_same_region_different_fields_is_true() {
        let r = parse_effect_str("rd r`nxt").unwrap();
        let w = parse_effect_str("wr r`val").unwrap();
        assert_eq!(separator(&r, &w), UFormula::True);
    }

    #[test]
    fn separator_same_field_needs_disjointness() {
        let r = parse_effect_str("rd r`nxt").unwrap();
        let w = parse_effect_str("wr s`nxt").unwrap();
        let sep = separator(&r, &w);
        assert_eq!(
            sep,
            parse_uformula_str("inter(r, s) subset {null}").unwrap()
        );
    }

    #[test]
    fn separator_same_variable_is_false() {
        let r = parse_effect_str("rd x").unwrap();
        let w = parse_effect_str("wr x").unwrap();
        assert_eq!(separator(&r, &w), UFormula::False);
        let w2 = parse_effect_str("wr y").unwrap();
        assert_eq!(separator(&r, &w2), UFormula::True);
    }

    #[test]
    fn framed_reads_examples() {
        assert!(!framed_reads_check(&parse_effect_str("rd r`f").unwrap()));
        assert!(framed_reads_check(&parse_effect_str("rd r`f, rd r").unwrap()));
        assert!(framed_reads_check(&Effect::empty()));
    }

    #[test]
    fn subeffect_syntactic_examples() {
        let a = parse_effect_str("rd x").unwrap();
        let b = parse_effect_str("rd x, wr y").unwrap();
        assert!(subeffect_syntactic(&a, &b));
        let c = parse_effect_str("wr rep`f").unwrap();
        let d = parse_effect_str("wr rep`any").unwrap();
        assert!(subeffect_syntactic(&c, &d));
        let e = parse_effect_str("rd x").unwrap();
        let f = parse_effect_str("rd y").unwrap();
        assert!(!subeffect_syntactic(&e, &f));
    }
}
