//! Classical tautology check over the boolean skeleton of a formula.
//!
//! Atoms and modal subformulas (`[]ψ`, `Kψ`) are opaque propositional
//! variables; syntactically equal modal subformulas share a variable.

use std::collections::HashMap;

use crate::formula::Formula;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Skel {
    Const(bool),
    Var(usize),
    Not(Box<Skel>),
    And(Box<Skel>, Box<Skel>),
}

/// Distinct opaque leaves of `f`'s boolean skeleton, in first-occurrence order.
pub fn skeleton_leaves(f: &Formula) -> Vec<Formula> {
    let mut leaves = Vec::new();
    let mut index = HashMap::new();
    skeleton(f, &mut leaves, &mut index);
    leaves
}

fn skeleton(f: &Formula, leaves: &mut Vec<Formula>, index: &mut HashMap<Formula, usize>) -> Skel {
    match f {
        Formula::Top => Skel::Const(true),
        Formula::Bottom => Skel::Const(false),
        Formula::Not(g) => Skel::Not(Box::new(skeleton(g, leaves, index))),
        Formula::And(l, r) => Skel::And(Box::new(skeleton(l, leaves, index)), Box::new(skeleton(r, leaves, index))),
        Formula::Atom(_) | Formula::Effort(_) | Formula::Know(_) => {
            let next = leaves.len();
            let i = *index.entry(f.clone()).or_insert_with(|| {
                leaves.push(f.clone());
                next
            });
            Skel::Var(i)
        }
    }
}

fn assign(s: &Skel, var: usize, value: bool) -> Skel {
    match s {
        Skel::Var(v) if *v == var => Skel::Const(value),
        Skel::Const(_) | Skel::Var(_) => s.clone(),
        Skel::Not(g) => simplify_not(assign(g, var, value)),
        Skel::And(l, r) => simplify_and(assign(l, var, value), assign(r, var, value)),
    }
}

fn simplify_not(s: Skel) -> Skel {
    match s {
        Skel::Const(b) => Skel::Const(!b),
        Skel::Not(g) => *g,
        other => Skel::Not(Box::new(other)),
    }
}

fn simplify_and(l: Skel, r: Skel) -> Skel {
    match (l, r) {
        (Skel::Const(false), _) | (_, Skel::Const(false)) => Skel::Const(false),
        (Skel::Const(true), x) | (x, Skel::Const(true)) => x,
        (l, r) => Skel::And(Box::new(l), Box::new(r)),
    }
}

fn first_var(s: &Skel) -> Option<usize> {
    match s {
        Skel::Const(_) => None,
        Skel::Var(v) => Some(*v),
        Skel::Not(g) => first_var(g),
        Skel::And(l, r) => first_var(l).or_else(|| first_var(r)),
    }
}

// Quine's method: split on a variable, simplify, recurse.
fn always(s: &Skel, want: bool) -> bool {
    match first_var(s) {
        None => closed_value(s) == want,
        Some(v) => always(&assign(s, v, true), want) && always(&assign(s, v, false), want),
    }
}

fn closed_value(s: &Skel) -> bool {
    match s {
        Skel::Const(b) => *b,
        Skel::Var(_) => unreachable!("closed skeleton has no variables"),
        Skel::Not(g) => !closed_value(g),
        Skel::And(l, r) => closed_value(l) && closed_value(r),
    }
}

pub fn is_tautology(f: &Formula) -> bool {
    let mut leaves = Vec::new();
    let s = skeleton(f, &mut leaves, &mut HashMap::new());
    always(&s, true)
}

pub fn is_contradiction(f: &Formula) -> bool {
    let mut leaves = Vec::new();
    let s = skeleton(f, &mut leaves, &mut HashMap::new());
    always(&s, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use proptest::prelude::*;

    fn table_eval(f: &Formula, leaves: &[Formula], row: u32) -> bool {
        match f {
            Formula::Top => true,
            Formula::Bottom => false,
            Formula::Not(g) => !table_eval(g, leaves, row),
            Formula::And(l, r) => table_eval(l, leaves, row) && table_eval(r, leaves, row),
            _ => {
                let i = leaves.iter().position(|x| x == f).unwrap();
                row >> i & 1 == 1
            }
        }
    }

    fn truth_table_tautology(f: &Formula) -> bool {
        let leaves = skeleton_leaves(f);
        (0..1u32 << leaves.len()).all(|row| table_eval(f, &leaves, row))
    }

    #[test]
    fn known_cases() {
        assert!(is_tautology(&parse("A | ~A").unwrap()));
        assert!(is_tautology(&parse("(K A -> A) -> (K A -> A)").unwrap()));
        assert!(is_tautology(&parse("[]A -> []A").unwrap()));
        assert!(!is_tautology(&parse("K A -> A").unwrap()));
        assert!(!is_tautology(&parse("[]A -> [][]A").unwrap()));
        assert!(is_tautology(&Formula::Top));
        assert!(is_contradiction(&parse("A & ~A").unwrap()));
        assert!(is_tautology(&parse("(A -> B) -> (B -> C) -> A -> C").unwrap()));
    }

    fn skeleton_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::atom("A")),
            Just(Formula::atom("B")),
            Just(Formula::know(Formula::atom("A"))),
            Just(Formula::effort(Formula::atom("B"))),
            Just(Formula::Top),
            Just(Formula::Bottom),
        ];
        leaf.prop_recursive(5, 40, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| Formula::implies(l, r)),
            ]
        })
    }

    proptest! {
        #[test]
        fn quine_agrees_with_truth_table(f in skeleton_formula()) {
            prop_assert!(skeleton_leaves(&f).len() <= 4);
            prop_assert_eq!(is_tautology(&f), truth_table_tautology(&f));
            prop_assert_eq!(is_contradiction(&f), truth_table_tautology(&Formula::not(f.clone())));
        }
    }
}
