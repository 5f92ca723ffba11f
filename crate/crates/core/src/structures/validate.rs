use std::fmt;


use super::{all_tuples, FiniteStructure, StructureError};
use crate::scalar::Scalar;
use crate::syntax::{Signature, SymbolKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Violation<S> {
    SelfDistance { point: String, value: S },
    Negative { a: String, b: String, value: S },
    Asymmetric { a: String, b: String, ab: S, ba: S },
    Triangle { a: String, b: String, c: String },
    Diameter { a: String, b: String, value: S },
    FunctionLipschitz { symbol: String, left: Vec<String>, right: Vec<String>, excess: S },
    RelationLipschitz { symbol: String, left: Vec<String>, right: Vec<String>, excess: S },
    RelationRange { symbol: String, args: Vec<String>, value: S },
}

impl<S: fmt::Display> fmt::Display for Violation<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfDistance { point, value } => write!(f, "d({point},{point}) = {value}, expected 0"),
            Violation::Negative { a, b, value } => write!(f, "d({a},{b}) = {value} is negative"),
            Violation::Asymmetric { a, b, ab, ba } => write!(f, "d({a},{b}) = {ab} but d({b},{a}) = {ba}"),
            Violation::Triangle { a, b, c } => write!(f, "d({a},{c}) > d({a},{b}) + d({b},{c})"),
            Violation::Diameter { a, b, value } => write!(f, "d({a},{b}) = {value} exceeds 1"),
            Violation::FunctionLipschitz { symbol, left, right, excess } => write!(
                f,
                "{symbol}({}) vs {symbol}({}): Lipschitz bound exceeded by {excess}",
                left.join(","),
                right.join(",")
            ),
            Violation::RelationLipschitz { symbol, left, right, excess } => write!(
                f,
                "{symbol}({}) - {symbol}({}) exceeds the Lipschitz bound by {excess}",
                left.join(","),
                right.join(",")
            ),
            Violation::RelationRange { symbol, args, value } => {
                write!(f, "{symbol}({}) = {value} outside [0,1]", args.join(","))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<S> {
    pub violations: Vec<Violation<S>>,
}

impl<S> ValidationReport<S> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the metric axioms, diameter, ranges and Lipschitz bounds of `sig`.
///
/// With `power() == p > 1` the stored entries are `d^p`; every comparison is
/// done on p-th powers and the tuple metric is `(sum d^p)^(1/p)`.
pub fn validate<S: Scalar>(m: &FiniteStructure<S>, sig: &Signature) -> Result<ValidationReport<S>, StructureError> {
    let n = m.len();
    let p = m.power();
    let name = |i: usize| m.points()[i].clone();
    let names = |t: &[usize]| t.iter().map(|&i| name(i)).collect::<Vec<_>>();
    let mut out = Vec::new();

    for sym in sig.symbols() {
        let (found, arity) = match sym.kind {
            SymbolKind::Constant => (m.constant(&sym.name).map(|_| 0), 0),
            SymbolKind::Function => (m.function(&sym.name).map(|t| t.arity), sym.arity),
            SymbolKind::Relation => (m.relation(&sym.name).map(|t| t.arity), sym.arity),
        };
        match found {
            None => return Err(StructureError::MissingInterpretation { symbol: sym.name.clone(), kind: sym.kind }),
            Some(a) if a != arity => {
                return Err(StructureError::ArityMismatch { symbol: sym.name.clone(), expected: arity, found: a })
            }
            _ => {}
        }
    }

    for a in 0..n {
        let v = m.metric_entry(a, a);
        if !v.is_zero() && !v.eq_tol(&S::zero()) {
            out.push(Violation::SelfDistance { point: name(a), value: v.clone() });
        }
        for b in 0..n {
            let ab = m.metric_entry(a, b);
            if ab.is_negative_tol() {
                out.push(Violation::Negative { a: name(a), b: name(b), value: ab.clone() });
            }
            if b > a {
                let ba = m.metric_entry(b, a);
                if !ab.eq_tol(ba) {
                    out.push(Violation::Asymmetric { a: name(a), b: name(b), ab: ab.clone(), ba: ba.clone() });
                }
            }
            if b > a && !ab.le_tol(&S::one()) {
                out.push(Violation::Diameter { a: name(a), b: name(b), value: ab.clone() });
            }
        }
    }

    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a == c || a == b || b == c {
                    continue;
                }
                let (ab, bc, ac) = (m.metric_entry(a, b), m.metric_entry(b, c), m.metric_entry(a, c));
                let holds = if p == 1 { ac.le_tol(&(ab.clone() + bc.clone())) } else { S::root_triangle(ab, bc, ac, p) };
                if !holds {
                    out.push(Violation::Triangle { a: name(a), b: name(b), c: name(c) });
                }
            }
        }
    }

    for sym in sig.of_kind(SymbolKind::Function) {
        let table = m.function(&sym.name).expect("checked above");
        let lam = S::from_rational(&sym.lipschitz).pow(p);
        let tuples: Vec<Vec<usize>> = all_tuples(n, table.arity).collect();
        for (i, x) in tuples.iter().enumerate() {
            for (j, y) in tuples.iter().enumerate().skip(i + 1) {
                let lhs = m.metric_entry(table.values[i], table.values[j]).clone();
                let rhs = lam.clone() * stored_tuple_dist(m, x, y);
                if !lhs.le_tol(&rhs) {
                    out.push(Violation::FunctionLipschitz {
                        symbol: sym.name.clone(),
                        left: names(x),
                        right: names(y),
                        excess: lhs - rhs,
                    });
                }
            }
        }
    }

    for sym in sig.of_kind(SymbolKind::Relation) {
        let table = m.relation(&sym.name).expect("checked above");
        let lam = S::from_rational(&sym.lipschitz).pow(p);
        let tuples: Vec<Vec<usize>> = all_tuples(n, table.arity).collect();
        for (i, x) in tuples.iter().enumerate() {
            let v = &table.values[i];
            if v.is_negative_tol() || !v.le_tol(&S::one()) {
                out.push(Violation::RelationRange { symbol: sym.name.clone(), args: names(x), value: v.clone() });
            }
            for (j, y) in tuples.iter().enumerate() {
                if i == j {
                    continue;
                }
                let diff = v.clone() - table.values[j].clone();
                if !diff.is_positive_tol() {
                    continue;
                }
                let lhs = diff.pow(p);
                let rhs = lam.clone() * stored_tuple_dist(m, x, y);
                if !lhs.le_tol(&rhs) {
                    out.push(Violation::RelationLipschitz {
                        symbol: sym.name.clone(),
                        left: names(x),
                        right: names(y),
                        excess: lhs - rhs,
                    });
                }
            }
        }
    }

    Ok(ValidationReport { violations: out })
}

/// `sum_i` of stored entries, i.e. the p-th power of the tuple distance.
fn stored_tuple_dist<S: Scalar>(m: &FiniteStructure<S>, x: &[usize], y: &[usize]) -> S {
    x.iter().zip(y).fold(S::zero(), |acc, (&a, &b)| acc + m.metric_entry(a, b).clone())
}
