use std::collections::BTreeMap;


use super::{all_tuples, tuple_index, FiniteStructure, FunctionTable, RelationTable};
use crate::scalar::Scalar;

/// Result of identifying points at distance zero.
#[derive(Clone, Debug)]
pub struct Quotient<S> {
    pub structure: FiniteStructure<S>,
    /// Class index of every original point.
    pub class_of: Vec<usize>,
    /// Original members of each class; the first is the representative.
    pub classes: Vec<Vec<usize>>,
}

/// Identifies points at distance zero. Interpretations are read off the
/// class representatives, which is well defined for Lipschitz tables.
pub fn quotient<S: Scalar>(m: &FiniteStructure<S>) -> Quotient<S> {
    let n = m.len();
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        if class_of[a] != usize::MAX {
            continue;
        }
        let id = classes.len();
        let members: Vec<usize> = (a..n).filter(|&b| class_of[b] == usize::MAX && m.metric_entry(a, b).is_zero()).collect();
        for &b in &members {
            class_of[b] = id;
        }
        classes.push(members);
    }
    let reps: Vec<usize> = classes.iter().map(|c| c[0]).collect();
    let k = reps.len();
    let (points, _, power, constants, functions, relations) = m.raw_parts();

    let new_points = reps.iter().map(|&r| points[r].clone()).collect();
    let metric = reps.iter().flat_map(|&a| reps.iter().map(move |&b| m.metric_entry(a, b).clone())).collect();
    let constants: BTreeMap<String, usize> = constants.iter().map(|(c, &p)| (c.clone(), class_of[p])).collect();
    let lift = |t: &[usize]| t.iter().map(|&c| reps[c]).collect::<Vec<_>>();
    let functions = functions
        .iter()
        .map(|(name, t)| {
            let values = all_tuples(k, t.arity).map(|tup| class_of[t.values[tuple_index(n, &lift(&tup))]]).collect();
            (name.clone(), FunctionTable { arity: t.arity, values })
        })
        .collect();
    let relations = relations
        .iter()
        .map(|(name, t)| {
            let values = all_tuples(k, t.arity).map(|tup| t.values[tuple_index(n, &lift(&tup))].clone()).collect();
            (name.clone(), RelationTable { arity: t.arity, values })
        })
        .collect();
    Quotient {
        structure: FiniteStructure::from_parts(new_points, metric, power, constants, functions, relations),
        class_of,
        classes,
    }
}
