//! Syntactic projections, full alignment, and the weaving relation.

use super::ast::*;
use std::collections::BTreeSet;

/// Left projection of a biprogram, canonicalized.
pub fn project_left(bb: &Biprogram) -> Command {
    proj(bb, true).canon()
}

/// Right projection of a biprogram, canonicalized.
pub fn project_right(bb: &Biprogram) -> Command {
    proj(bb, false).canon()
}

fn proj(bb: &Biprogram, left: bool) -> Command {
    match bb {
        Biprogram::Split(c, d) => {
            if left {
                c.clone()
            } else {
                d.clone()
            }
        }
        Biprogram::Sync(a) => Command::Atom(a.clone()),
        Biprogram::BiSeq(a, b) => {
            Command::Seq(Box::new(proj(a, left)), Box::new(proj(b, left)))
        }
        Biprogram::BiIf(e, e2, a, b) => Command::If(
            if left { e.clone() } else { e2.clone() },
            Box::new(proj(a, left)),
            Box::new(proj(b, left)),
        ),
        Biprogram::BiWhile(e, e2, _, _, c) => Command::While(
            if left { e.clone() } else { e2.clone() },
            Box::new(proj(c, left)),
        ),
        Biprogram::BiLet(m, b, b2, c) => Command::Let(
            m.clone(),
            Box::new(if left { b.clone() } else { b2.clone() }),
            Box::new(proj(c, left)),
        ),
    }
}

/// Left projection of a relational formula. Connectives without a sound
/// pointwise projection (negation, implication) weaken to true.
pub fn project_formula_left(p: &RFormula) -> UFormula {
    proj_formula(p, true)
}

pub fn project_formula_right(p: &RFormula) -> UFormula {
    proj_formula(p, false)
}

fn proj_formula(p: &RFormula, left: bool) -> UFormula {
    match p {
        RFormula::True => UFormula::True,
        RFormula::False => UFormula::False,
        RFormula::CrossEq(a, b) => {
            let e = if left { a } else { b };
            UFormula::Atom(Expr::Bin(BinOp::Eq, Box::new(e.clone()), Box::new(e.clone())))
        }
        RFormula::Agree(g, sel) => {
            // for reference-typed fields this is the image self-equality; for
            // other selectors the well-typed weakening is region self-equality
            let e = match sel {
                FieldSel::Field(_) | FieldSel::Any => g.clone(),
            };
            UFormula::Atom(Expr::Bin(BinOp::Eq, Box::new(e.clone()), Box::new(e)))
        }
        RFormula::Later(q) => proj_formula(q, left),
        RFormula::LEmb(q) => {
            if left {
                q.clone()
            } else {
                UFormula::True
            }
        }
        RFormula::REmb(q) => {
            if left {
                UFormula::True
            } else {
                q.clone()
            }
        }
        RFormula::And(a, b) => UFormula::And(
            Box::new(proj_formula(a, left)),
            Box::new(proj_formula(b, left)),
        ),
        RFormula::Or(a, b) => UFormula::Or(
            Box::new(proj_formula(a, left)),
            Box::new(proj_formula(b, left)),
        ),
        RFormula::Not(_) | RFormula::Imp(..) => UFormula::True,
        RFormula::Forall(x, x2, k, q) => {
            let v = if left { x } else { x2 };
            UFormula::Forall(v.clone(), k.clone(), Box::new(proj_formula(q, left)))
        }
    }
}

/// The maximal weaving of (C|C): every atom sync'd, every control construct
/// paired, loop alignment guards false on both sides.
pub fn full_alignment(c: &Command) -> Biprogram {
    match c {
        Command::Atom(a) => Biprogram::Sync(a.clone()),
        Command::Seq(a, b) => {
            Biprogram::BiSeq(Box::new(full_alignment(a)), Box::new(full_alignment(b)))
        }
        Command::If(e, a, b) => Biprogram::BiIf(
            e.clone(),
            e.clone(),
            Box::new(full_alignment(a)),
            Box::new(full_alignment(b)),
        ),
        Command::While(e, a) => Biprogram::BiWhile(
            e.clone(),
            e.clone(),
            RFormula::False,
            RFormula::False,
            Box::new(full_alignment(a)),
        ),
        Command::Let(m, b, cont) => Biprogram::BiLet(
            m.clone(),
            *b.clone(),
            *b.clone(),
            Box::new(full_alignment(cont)),
        ),
    }
}

/// Whether a biprogram is the full alignment of its left projection.
pub fn is_full_alignment(bb: &Biprogram) -> bool {
    bb.canon() == full_alignment(&project_left(bb)).canon()
}

/// All one-step weavings of a biprogram, with loop alignment guards drawn
/// from the supplied candidates (the trivial pair is always considered).
pub fn weave_step_with_guards(
    bb: &Biprogram,
    guards: &[(RFormula, RFormula)],
) -> BTreeSet<Biprogram> {
    let mut out = BTreeSet::new();
    let bb = bb.canon();
    weave_at(&bb, guards, &mut |woven| {
        out.insert(woven.canon());
    });
    out.remove(&bb);
    out
}

/// All one-step weavings with the default false|false loop guards.
pub fn weave_step(bb: &Biprogram) -> BTreeSet<Biprogram> {
    weave_step_with_guards(bb, &[])
}

fn weave_at(bb: &Biprogram, guards: &[(RFormula, RFormula)], emit: &mut dyn FnMut(Biprogram)) {
    // axioms at a split
    if let Biprogram::Split(c, d) = bb {
        weave_axioms(c, d, guards, emit);
    }
    // congruence rules
    match bb {
        Biprogram::BiSeq(..) => {
            let parts: Vec<Biprogram> = bb.biseq_parts().into_iter().cloned().collect();
            for i in 0..parts.len() {
                weave_at(&parts[i], guards, &mut |woven| {
                    let mut ps = parts.clone();
                    ps[i] = woven;
                    emit(Biprogram::biseq(ps));
                });
            }
        }
        Biprogram::BiIf(e, e2, a, b) => {
            weave_at(a, guards, &mut |woven| {
                emit(Biprogram::BiIf(
                    e.clone(),
                    e2.clone(),
                    Box::new(woven),
                    b.clone(),
                ));
            });
            weave_at(b, guards, &mut |woven| {
                emit(Biprogram::BiIf(
                    e.clone(),
                    e2.clone(),
                    a.clone(),
                    Box::new(woven),
                ));
            });
        }
        Biprogram::BiWhile(e, e2, p, p2, c) => {
            weave_at(c, guards, &mut |woven| {
                emit(Biprogram::BiWhile(
                    e.clone(),
                    e2.clone(),
                    p.clone(),
                    p2.clone(),
                    Box::new(woven),
                ));
            });
        }
        Biprogram::BiLet(m, b, b2, c) => {
            weave_at(c, guards, &mut |woven| {
                emit(Biprogram::BiLet(
                    m.clone(),
                    b.clone(),
                    b2.clone(),
                    Box::new(woven),
                ));
            });
        }
        Biprogram::Split(..) | Biprogram::Sync(_) => {}
    }
}

fn weave_axioms(
    c: &Command,
    d: &Command,
    guards: &[(RFormula, RFormula)],
    emit: &mut dyn FnMut(Biprogram),
) {
    // atomic sync
    if let (Command::Atom(a), Command::Atom(b)) = (c, d) {
        if a == b {
            emit(Biprogram::Sync(a.clone()));
        }
    }
    // sequence split at every cut point of both sides
    let lparts = c.seq_parts();
    let rparts = d.seq_parts();
    if lparts.len() >= 2 && rparts.len() >= 2 {
        for i in 1..lparts.len() {
            for j in 1..rparts.len() {
                let l1 = Command::seq(lparts[..i].iter().map(|p| (*p).clone()).collect());
                let l2 = Command::seq(lparts[i..].iter().map(|p| (*p).clone()).collect());
                let r1 = Command::seq(rparts[..j].iter().map(|p| (*p).clone()).collect());
                let r2 = Command::seq(rparts[j..].iter().map(|p| (*p).clone()).collect());
                emit(Biprogram::BiSeq(
                    Box::new(Biprogram::Split(l1, r1)),
                    Box::new(Biprogram::Split(l2, r2)),
                ));
            }
        }
    }
    match (c, d) {
        (Command::If(e, c1, c2), Command::If(e2, d1, d2)) => {
            emit(Biprogram::BiIf(
                e.clone(),
                e2.clone(),
                Box::new(Biprogram::Split(*c1.clone(), *d1.clone())),
                Box::new(Biprogram::Split(*c2.clone(), *d2.clone())),
            ));
        }
        (Command::While(e, c1), Command::While(e2, d1)) => {
            let mut all: Vec<(RFormula, RFormula)> = vec![(RFormula::False, RFormula::False)];
            all.extend(guards.iter().cloned());
            for (p, p2) in all {
                emit(Biprogram::BiWhile(
                    e.clone(),
                    e2.clone(),
                    p,
                    p2,
                    Box::new(Biprogram::Split(*c1.clone(), *d1.clone())),
                ));
            }
        }
        (Command::Let(m, b, c1), Command::Let(m2, b2, d1)) if m == m2 => {
            emit(Biprogram::BiLet(
                m.clone(),
                *b.clone(),
                *b2.clone(),
                Box::new(Biprogram::Split(*c1.clone(), *d1.clone())),
            ));
        }
        _ => {}
    }
}

/// Alignment-guard pairs appearing in a biprogram, used to instantiate the
/// loop weaving axiom when searching toward a target.
pub fn collect_guards(bb: &Biprogram) -> Vec<(RFormula, RFormula)> {
    let mut out = Vec::new();
    fn go(bb: &Biprogram, out: &mut Vec<(RFormula, RFormula)>) {
        match bb {
            Biprogram::BiWhile(_, _, p, p2, c) => {
                out.push((p.clone(), p2.clone()));
                go(c, out);
            }
            Biprogram::BiSeq(a, b) | Biprogram::BiIf(_, _, a, b) => {
                go(a, out);
                go(b, out);
            }
            Biprogram::BiLet(_, _, _, c) => go(c, out),
            Biprogram::Split(..) | Biprogram::Sync(_) => {}
        }
    }
    go(bb, &mut out);
    out.sort();
    out.dedup();
    out
}

/// Bounded reflexive-transitive weaving search: does bb weave to dd?
pub fn weave_check(bb: &Biprogram, dd: &Biprogram, budget: usize) -> bool {
    let start = bb.canon();
    let target = dd.canon();
    if start == target {
        return true;
    }
    let guards = collect_guards(&target);
    let mut seen: BTreeSet<Biprogram> = BTreeSet::new();
    let mut frontier = vec![start];
    while let Some(cur) = frontier.pop() {
        if seen.len() > budget {
            return false;
        }
        for next in weave_step_with_guards(&cur, &guards) {
            if next == target {
                return true;
            }
            if seen.insert(next.clone()) {
                frontier.push(next);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse::*;

    #[test]
    fn left_projection_of_split() {
        let bb = parse_biprogram_str("( x := 1 | y := 2 )").unwrap();
        assert_eq!(project_left(&bb), parse_command_str("x := 1").unwrap());
        assert_eq!(project_right(&bb), parse_command_str("y := 2").unwrap());
    }

    #[test]
    fn projection_applies_identifications() {
        let bb = parse_biprogram_str("( skip | x := 0 ); [ y := 0 ]").unwrap();
        assert_eq!(project_left(&bb), parse_command_str("y := 0").unwrap());
        assert_eq!(
            project_right(&bb),
            parse_command_str("x := 0; y := 0").unwrap()
        );
    }

    #[test]
    fn sync_projects_to_atom() {
        for a in ["skip", "x := 1", "x := y.f", "x.f := y"] {
            let bb = parse_biprogram_str(&format!("[ {a} ]")).unwrap();
            assert_eq!(project_left(&bb), parse_command_str(a).unwrap());
        }
    }

    #[test]
    fn full_alignment_of_skip() {
        assert_eq!(
            full_alignment(&Command::skip()).canon(),
            Biprogram::sync_skip()
        );
    }

    #[test]
    fn full_alignment_of_if() {
        let c = parse_command_str("if x = 0 then y := 1 fi").unwrap();
        let fa = full_alignment(&c);
        match fa {
            Biprogram::BiIf(e, e2, t, f) => {
                assert_eq!(e, e2);
                assert!(matches!(*t, Biprogram::Sync(_)));
                assert!(matches!(*f, Biprogram::Sync(Atomic::Skip)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn atomic_sync_axiom() {
        let bb = parse_biprogram_str("( x := 1 | x := 1 )").unwrap();
        let steps = weave_step(&bb);
        assert!(steps.contains(&parse_biprogram_str("[ x := 1 ]").unwrap()));
    }

    #[test]
    fn distinct_atoms_have_no_weaving() {
        let bb = parse_biprogram_str("( x := 1 | y := 2 )").unwrap();
        assert!(weave_step(&bb).is_empty());
    }

    #[test]
    fn sequence_axiom_produces_componentwise_split() {
        let bb = parse_biprogram_str("( x := 1; y := 2 | x := 3; y := 4 )").unwrap();
        let steps = weave_step(&bb);
        let want =
            parse_biprogram_str("( x := 1 | x := 3 ); ( y := 2 | y := 4 )").unwrap();
        assert!(steps.contains(&want.canon()));
    }

    #[test]
    fn weave_check_reaches_full_alignment() {
        let c = parse_command_str("x := 1; if y = 0 then x := 2 else skip fi").unwrap();
        let bb = Biprogram::Split(c.clone(), c.clone());
        let target = full_alignment(&c);
        assert!(weave_check(&bb, &target, 100000));
    }

    #[test]
    fn weave_check_reflexive() {
        let bb = parse_biprogram_str("( x := 1 | y := 2 )").unwrap();
        assert!(weave_check(&bb, &bb, 10));
    }

    #[test]
    fn weaving_preserves_projections() {
        let c = parse_command_str("x := 1; while y > 0 do x := x * y; y := y - 1 od").unwrap();
        let d = parse_command_str("x := 1; y := y - 1; while y >= 0 do x := x * y + x; y := y - 1 od")
            .unwrap();
        let bb = Biprogram::Split(c.clone(), d.clone());
        for w in weave_step(&bb) {
            assert_eq!(project_left(&w), c.canon());
            assert_eq!(project_right(&w), d.canon());
        }
    }
}
