//! Unconditional command equivalence as a bounded rewrite search over the
//! skip identities, loop unrolling, and loop peeling, closed under congruence
//! and symmetry.

use super::ast::*;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UequivResult {
    Derivable,
    NotDerivable,
    /// The search budget ran out before the rewrite closure was exhausted.
    Budget,
}

/// Candidate extra-conjunct guards for the unrolling rule, harvested from
/// inner loop guards of the shape E and E0.
fn guard_candidates(c: &Command, out: &mut Vec<Expr>) {
    match c {
        Command::While(e, body) => {
            if let Expr::Bin(BinOp::And, _, b) = e {
                out.push((**b).clone());
            }
            guard_candidates(body, out);
        }
        Command::Seq(a, b) => {
            guard_candidates(a, out);
            guard_candidates(b, out);
        }
        Command::If(_, a, b) => {
            guard_candidates(a, out);
            guard_candidates(b, out);
        }
        Command::Let(_, a, b) => {
            guard_candidates(a, out);
            guard_candidates(b, out);
        }
        Command::Atom(_) => {}
    }
}

/// One-step rewrites of a command at the top position.
fn top_rewrites(c: &Command, guards: &[Expr], out: &mut BTreeSet<Command>) {
    if let Command::While(e, body) = c {
        // unrolling, expansion: while E do C od
        //   becomes  while E do C; while E and E0 do C od od
        for e0 in guards {
            let inner_guard = Expr::Bin(BinOp::And, Box::new(e.clone()), Box::new(e0.clone()));
            let inner = Command::While(inner_guard, body.clone());
            let new_body = Command::Seq(body.clone(), Box::new(inner));
            out.insert(Command::While(e.clone(), Box::new(new_body)).canon());
        }
        // unrolling, contraction: body of the shape C; while E and E0 do C od
        let parts = body.seq_parts();
        if parts.len() >= 2 {
            if let Command::While(inner_e, inner_body) = parts[parts.len() - 1] {
                if let Expr::Bin(BinOp::And, a, _) = inner_e {
                    let prefix =
                        Command::seq(parts[..parts.len() - 1].iter().map(|p| (*p).clone()).collect());
                    if **a == *e && prefix.canon() == inner_body.canon() {
                        out.insert(Command::While(e.clone(), inner_body.clone()).canon());
                    }
                }
            }
        }
        // peeling, expansion: while E do C od
        //   becomes  if E then C fi; while E do C od
        let peeled = Command::Seq(
            Box::new(Command::If(
                e.clone(),
                body.clone(),
                Box::new(Command::skip()),
            )),
            Box::new(c.clone()),
        );
        out.insert(peeled.canon());
    }
    // peeling, contraction: if E then C fi; while E do C od  becomes the loop
    let parts = c.seq_parts();
    if parts.len() >= 2 {
        if let (Command::If(e1, c1, els), Command::While(e2, c2)) = (parts[0], parts[1]) {
            if els.is_skip() && e1 == e2 && c1.canon() == c2.canon() {
                let mut rest: Vec<Command> = vec![parts[1].clone()];
                rest.extend(parts[2..].iter().map(|p| (*p).clone()));
                out.insert(Command::seq(rest).canon());
            }
        }
    }
}

/// All one-step rewrites at any position (congruence closure of one step).
fn rewrites(c: &Command, guards: &[Expr]) -> BTreeSet<Command> {
    let mut out = BTreeSet::new();
    top_rewrites(c, guards, &mut out);
    match c {
        Command::Seq(..) => {
            let parts: Vec<Command> = c.seq_parts().into_iter().cloned().collect();
            for i in 0..parts.len() {
                for r in rewrites(&parts[i], guards) {
                    let mut ps = parts.clone();
                    ps[i] = r;
                    out.insert(Command::seq(ps).canon());
                }
            }
        }
        Command::If(e, a, b) => {
            for r in rewrites(a, guards) {
                out.insert(Command::If(e.clone(), Box::new(r), b.clone()).canon());
            }
            for r in rewrites(b, guards) {
                out.insert(Command::If(e.clone(), a.clone(), Box::new(r)).canon());
            }
        }
        Command::While(e, a) => {
            for r in rewrites(a, guards) {
                out.insert(Command::While(e.clone(), Box::new(r)).canon());
            }
        }
        Command::Let(m, a, b) => {
            for r in rewrites(a, guards) {
                out.insert(Command::Let(m.clone(), Box::new(r), b.clone()).canon());
            }
            for r in rewrites(b, guards) {
                out.insert(Command::Let(m.clone(), a.clone(), Box::new(r)).canon());
            }
        }
        Command::Atom(_) => {}
    }
    out.remove(&c.canon());
    out
}

/// Bounded search for a rewrite derivation from c to d. A negative answer
/// means "not derivable within the stated rewrite system", never semantic
/// inequivalence.
pub fn uequiv_check(c: &Command, d: &Command, budget: usize) -> UequivResult {
    let start = c.canon();
    let target = d.canon();
    if start == target {
        return UequivResult::Derivable;
    }
    let mut guards = Vec::new();
    guard_candidates(&start, &mut guards);
    guard_candidates(&target, &mut guards);
    guards.sort();
    guards.dedup();

    let mut seen: BTreeSet<Command> = [start.clone()].into_iter().collect();
    let mut frontier = vec![start];
    while let Some(cur) = frontier.pop() {
        for next in rewrites(&cur, &guards) {
            if next == target {
                return UequivResult::Derivable;
            }
            if seen.insert(next.clone()) {
                if seen.len() > budget {
                    return UequivResult::Budget;
                }
                frontier.push(next);
            }
        }
    }
    UequivResult::NotDerivable
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse::parse_command_str;

    #[test]
    fn skip_padding_is_identified() {
        let c = parse_command_str("x := 1").unwrap();
        let d = parse_command_str("skip; x := 1; skip").unwrap();
        assert_eq!(uequiv_check(&c, &d, 100), UequivResult::Derivable);
    }

    #[test]
    fn loop_peeling() {
        let c = parse_command_str("while x > 0 do x := x - 1 od").unwrap();
        let d =
            parse_command_str("if x > 0 then x := x - 1 fi; while x > 0 do x := x - 1 od")
                .unwrap();
        assert_eq!(uequiv_check(&c, &d, 1000), UequivResult::Derivable);
        assert_eq!(uequiv_check(&d, &c, 1000), UequivResult::Derivable);
    }

    #[test]
    fn loop_unrolling_with_extra_guard() {
        let c = parse_command_str("while x < 4 do x := x + 1 od").unwrap();
        let d = parse_command_str(
            "while x < 4 do x := x + 1; while x < 4 and x % 2 = 1 do x := x + 1 od od",
        )
        .unwrap();
        assert_eq!(uequiv_check(&c, &d, 2000), UequivResult::Derivable);
    }

    #[test]
    fn unrelated_programs_not_derivable() {
        let c = parse_command_str("x := 1").unwrap();
        let d = parse_command_str("x := 2").unwrap();
        assert_eq!(uequiv_check(&c, &d, 500), UequivResult::NotDerivable);
    }
}
