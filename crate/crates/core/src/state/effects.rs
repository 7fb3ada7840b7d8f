//! Semantic interpretation of effects: location sets, change bounds,
//! agreement modulo refperms, and allowed dependence.

use super::{
    enumerate_extensions, enumerate_refperms, eval_expr, CapExceeded, EvalError, Location,
    LocSet, RefId, Refperm, State, Value,
};
use crate::syntax::ast::*;
use std::collections::BTreeSet;

/// Locations designated by the read atoms of an effect in a given state.
pub fn rlocs(s: &State, classes: &ClassTable, eff: &Effect) -> Result<LocSet, EvalError> {
    locs_of(s, classes, eff, RdWr::Rd)
}

/// Locations designated by the write atoms of an effect in a given state.
pub fn wlocs(s: &State, classes: &ClassTable, eff: &Effect) -> Result<LocSet, EvalError> {
    locs_of(s, classes, eff, RdWr::Wr)
}

fn locs_of(s: &State, classes: &ClassTable, eff: &Effect, kind: RdWr) -> Result<LocSet, EvalError> {
    let mut out = LocSet::new();
    for atom in eff.0.iter().filter(|a| a.kind == kind) {
        match &atom.target {
            EffTarget::Var(x) => {
                out.insert(Location::Var(x.clone()));
            }
            EffTarget::Image(g, sel) => {
                let rv = eval_expr(s, classes, g)?.as_region()?.clone();
                for o in &rv.refs {
                    let class = match s.class_of(*o) {
                        Some(k) => k,
                        None => continue,
                    };
                    match sel {
                        FieldSel::Field(f) => {
                            if classes.field_type(class, f).is_some() {
                                out.insert(Location::Heap(*o, f.clone()));
                            }
                        }
                        FieldSel::Any => {
                            for (f, _) in classes.fields(class).unwrap_or(&[]) {
                                out.insert(Location::Heap(*o, f.clone()));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// written(s, t): locations of s whose value differs in t.
pub fn written(s: &State, t: &State) -> LocSet {
    let mut out = LocSet::new();
    for (x, v) in &s.store {
        if t.get(x) != Some(v) {
            out.insert(Location::Var(x.clone()));
        }
    }
    for (o, obj) in &s.heap {
        for (f, v) in &obj.fields {
            if t.field(*o, f) != Some(v) {
                out.insert(Location::Heap(*o, f.clone()));
            }
        }
    }
    out
}

/// t can succeed s: allocation grows and classes are preserved.
pub fn can_succeed(s: &State, t: &State) -> bool {
    s.heap.iter().all(|(o, obj)| match t.class_of(*o) {
        Some(k) => k == obj.class,
        None => false,
    })
}

/// The effect allows the change from s to t.
pub fn allows_change(
    s: &State,
    t: &State,
    classes: &ClassTable,
    eff: &Effect,
) -> Result<bool, EvalError> {
    if !can_succeed(s, t) {
        return Ok(false);
    }
    let w = wlocs(s, classes, eff)?;
    Ok(written(s, t).is_subset(&w))
}

/// Value relation modulo a refperm: equality on scalars, the refperm on
/// references, direct-image equality on regions (null disregarded).
pub fn value_related(pi: &Refperm, a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Null, Value::Null) => true,
        (Value::Ref(x), Value::Ref(y)) => pi.get(*x) == Some(*y),
        (Value::Rgn(x), Value::Rgn(y)) => {
            // ignores null on both sides; the image must hit exactly y's refs,
            // and every x-ref must be in the refperm's domain
            x.refs.iter().all(|r| pi.get(*r).is_some()) && pi.image(&x.refs) == y.refs
        }
        _ => false,
    }
}

/// Pointwise agreement on a location set, heap locations mapped through pi.
pub fn lagree(s: &State, s2: &State, pi: &Refperm, w: &LocSet) -> bool {
    w.iter().all(|loc| match loc {
        Location::Var(x) => match (s.get(x), s2.get(x)) {
            (Some(a), Some(b)) => value_related(pi, a, b),
            _ => false,
        },
        Location::Heap(o, f) => match pi.get(*o) {
            None => false,
            Some(o2) => match (s.field(*o, f), s2.field(o2, f)) {
                (Some(a), Some(b)) => value_related(pi, a, b),
                _ => false,
            },
        },
    })
}

/// Agreement on an effect's read locations modulo pi.
pub fn agree(
    s: &State,
    s2: &State,
    classes: &ClassTable,
    eff: &Effect,
    pi: &Refperm,
) -> Result<bool, EvalError> {
    Ok(lagree(s, s2, pi, &rlocs(s, classes, eff)?))
}

pub fn fresh_refs(s: &State, t: &State) -> BTreeSet<RefId> {
    t.heap
        .keys()
        .filter(|r| !s.heap.contains_key(r))
        .cloned()
        .collect()
}

pub fn fresh_locs(s: &State, t: &State, classes: &ClassTable) -> LocSet {
    let mut out = LocSet::new();
    for r in fresh_refs(s, t) {
        if let Some(k) = t.class_of(r) {
            for (f, _) in classes.fields(k).unwrap_or(&[]) {
                out.insert(Location::Heap(r, f.clone()));
            }
        }
    }
    out
}

/// Outcome of a bounded dependence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DepResult {
    Holds,
    /// A refperm with pre-state agreement but no suitable extension.
    Fails(Box<Refperm>),
}

/// The two-run read-effect condition: every refperm that makes the initial
/// states agree on the effect extends to one relating fresh and written
/// locations of the final states.
pub fn allows_dependence(
    s: &State,
    s2: &State,
    t: &State,
    t2: &State,
    classes: &ClassTable,
    eff: &Effect,
    cap: usize,
) -> Result<DepResult, CapExceeded> {
    let pre_reads = match rlocs(s, classes, eff) {
        Ok(r) => r,
        Err(_) => return Ok(DepResult::Holds), // unevaluable effect: vacuous
    };
    let target: LocSet = fresh_locs(s, t, classes)
        .union(&written(s, t))
        .cloned()
        .collect();
    for pi in enumerate_refperms(s, s2, cap)? {
        if !lagree(s, s2, &pi, &pre_reads) {
            continue;
        }
        let mut found = false;
        for rho in enumerate_extensions(&pi, t, t2, cap)? {
            if lagree(t, t2, &rho, &target) {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(DepResult::Fails(Box::new(pi)));
        }
    }
    Ok(DepResult::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::State;
    use crate::syntax::parse::*;

    fn setup() -> (State, ClassTable, TypingCtx) {
        let ct = parse_class_table_str("class Node { nxt: Node; val: int; del: bool }").unwrap();
        let mut ctx = base_ctx();
        ctx.insert("x".into(), Type::Int);
        ctx.insert("y".into(), Type::Int);
        ctx.insert("r".into(), Type::Rgn);
        let st = State::new(&ctx);
        (st, ct, ctx)
    }

    #[test]
    fn rlocs_of_variables() {
        let (st, ct, _) = setup();
        let e = parse_effect_str("rd x, rd y").unwrap();
        let locs = rlocs(&st, &ct, &e).unwrap();
        assert_eq!(locs.len(), 2);
        assert!(locs.contains(&Location::Var("x".into())));
    }

    #[test]
    fn wlocs_ignores_read_atoms() {
        let (st, ct, _) = setup();
        let e = parse_effect_str("rd x").unwrap();
        assert!(wlocs(&st, &ct, &e).unwrap().is_empty());
    }

    #[test]
    fn rlocs_of_region_image() {
        let (mut st, ct, _) = setup();
        st.add_object(RefId(1), "Node", &ct);
        st.add_object(RefId(2), "Node", &ct);
        st.set("r", Value::Rgn(super::super::RegionVal::of_refs([RefId(1), RefId(2)])));
        let e = parse_effect_str("rd r`val").unwrap();
        let locs = rlocs(&st, &ct, &e).unwrap();
        assert_eq!(locs.len(), 2);
        assert!(locs.contains(&Location::Heap(RefId(1), "val".into())));
        let any = parse_effect_str("rd r`any").unwrap();
        assert_eq!(rlocs(&st, &ct, &any).unwrap().len(), 6);
    }

    #[test]
    fn allows_change_reflexive() {
        let (st, ct, _) = setup();
        for eff in ["", "rd x", "wr x, wr y"] {
            let e = parse_effect_str(eff).unwrap();
            assert!(allows_change(&st, &st, &ct, &e).unwrap());
        }
    }

    #[test]
    fn allows_change_detects_unlicensed_write() {
        let (st, ct, _) = setup();
        let mut t = st.clone();
        t.set("x", Value::Int(1));
        let wr = parse_effect_str("wr x").unwrap();
        let rd = parse_effect_str("rd x").unwrap();
        assert!(allows_change(&st, &t, &ct, &wr).unwrap());
        assert!(!allows_change(&st, &t, &ct, &rd).unwrap());
    }

    #[test]
    fn agreement_via_refperm() {
        let (mut s, ct, ctx) = setup();
        s.add_object(RefId(1), "Node", &ct);
        let mut ctx2 = ctx.clone();
        ctx2.insert("p".into(), Type::Class("Node".into()));
        let mut s1 = State::new(&ctx2);
        s1.add_object(RefId(1), "Node", &ct);
        s1.set("p", Value::Ref(RefId(1)));
        let mut s2 = State::new(&ctx2);
        s2.add_object(RefId(7), "Node", &ct);
        s2.set("p", Value::Ref(RefId(7)));
        let w: LocSet = [Location::Var("p".into())].into_iter().collect();
        assert!(!lagree(&s1, &s2, &Refperm::empty(), &w));
        let mut pi = Refperm::empty();
        pi.insert(RefId(1), RefId(7)).unwrap();
        assert!(lagree(&s1, &s2, &pi, &w));
        let _ = s;
    }

    #[test]
    fn dependence_on_shared_increment() {
        // x:=x+1 on both runs depends only on x
        let (st, ct, _) = setup();
        let mut s1 = st.clone();
        s1.set("x", Value::Int(2));
        let mut s2 = st.clone();
        s2.set("x", Value::Int(2));
        s2.set("y", Value::Int(9));
        let mut t1 = s1.clone();
        t1.set("x", Value::Int(3));
        let mut t2 = s2.clone();
        t2.set("x", Value::Int(3));
        let e = parse_effect_str("rd x").unwrap();
        assert_eq!(
            allows_dependence(&s1, &s2, &t1, &t2, &ct, &e, 10000).unwrap(),
            DepResult::Holds
        );
        // increment only on the left: dependence fails
        assert!(matches!(
            allows_dependence(&s1, &s2, &t1, &s2, &ct, &e, 10000).unwrap(),
            DepResult::Fails(_)
        ));
    }
}
