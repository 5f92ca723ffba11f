//! Checker for finite proofs in the affine deduction system: axioms `A1`..`A22`
//! and rules `R1`..`R4`. Real constants are the literals `r*1` (and `1`);
//! literal positions match by value, everything else up to renaming of bound
//! variables.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::scalar::{format_rational, Rational};
use crate::structures::{check_condition_universal, Assignment, EvalError, FiniteStructure};
use crate::syntax::{parse_formula, parse_term, Condition, Formula, Signature, SymbolKind, Term, Theory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    R1,
    R2,
    R3,
    R4,
}

impl Rule {
    pub fn premises(self) -> usize {
        match self {
            Rule::R1 | Rule::R3 => 2,
            Rule::R2 | Rule::R4 => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Justification {
    Axiom(u8),
    Hypothesis(usize),
    Rule(Rule),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown justification `{0}` (expected A1..A22, R1..R4 or hyp:i)")]
pub struct JustificationParseError(pub String);

impl FromStr for Justification {
    type Err = JustificationParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || JustificationParseError(s.to_string());
        if let Some(i) = s.strip_prefix("hyp:") {
            return i.parse().map(Justification::Hypothesis).map_err(|_| err());
        }
        if let Some(n) = s.strip_prefix('A') {
            return match n.parse::<u8>() {
                Ok(k @ 1..=22) if n == k.to_string() => Ok(Justification::Axiom(k)),
                _ => Err(err()),
            };
        }
        match s {
            "R1" => Ok(Justification::Rule(Rule::R1)),
            "R2" => Ok(Justification::Rule(Rule::R2)),
            "R3" => Ok(Justification::Rule(Rule::R3)),
            "R4" => Ok(Justification::Rule(Rule::R4)),
            _ => Err(err()),
        }
    }
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Justification::Axiom(k) => write!(f, "A{k}"),
            Justification::Hypothesis(i) => write!(f, "hyp:{i}"),
            Justification::Rule(r) => write!(f, "{r:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub conclusion: Condition,
    pub by: Justification,
    pub premises: Vec<ProofNode>,
    /// Optional metavariable bindings for axioms, as formula/term/rational text.
    pub inst: BTreeMap<String, String>,
}

impl ProofNode {
    pub fn axiom(tag: u8, conclusion: Condition) -> Self {
        ProofNode { conclusion, by: Justification::Axiom(tag), premises: vec![], inst: BTreeMap::new() }
    }

    pub fn hyp(index: usize, conclusion: Condition) -> Self {
        ProofNode { conclusion, by: Justification::Hypothesis(index), premises: vec![], inst: BTreeMap::new() }
    }

    pub fn rule(rule: Rule, conclusion: Condition, premises: Vec<ProofNode>) -> Self {
        ProofNode { conclusion, by: Justification::Rule(rule), premises, inst: BTreeMap::new() }
    }

    pub fn with_inst(mut self, metavar: &str, value: &str) -> Self {
        self.inst.insert(metavar.to_string(), value.to_string());
        self
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofNode::size).sum::<usize>()
    }

    pub fn at(&self, path: &[usize]) -> Option<&ProofNode> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get(*i)?.at(rest),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut ProofNode> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get_mut(*i)?.at_mut(rest),
        }
    }

    /// Paths of all nodes in pre-order.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for (i, p) in self.premises.iter().enumerate() {
            out.extend(p.paths().into_iter().map(|mut q| {
                q.insert(0, i);
                q
            }));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reason {
    /// Bad or inconsistent binding for a metavariable.
    Malformed { metavar: String, msg: String },
    NotAnInstance { tag: String, msg: String },
    SideCondition { tag: String, msg: String },
    NoSuchHypothesis(usize),
    HypothesisMismatch(usize),
    PremiseCount { tag: String, expected: usize, found: usize },
    /// `x` is free in the hypotheses.
    FreeInHypotheses(String),
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::Malformed { metavar, msg } => write!(f, "metavariable `{metavar}`: {msg}"),
            Reason::NotAnInstance { tag, msg } => write!(f, "not an instance of {tag}: {msg}"),
            Reason::SideCondition { tag, msg } => write!(f, "side condition of {tag} fails: {msg}"),
            Reason::NoSuchHypothesis(i) => write!(f, "no hypothesis {i}"),
            Reason::HypothesisMismatch(i) => write!(f, "conclusion differs from hypothesis {i}"),
            Reason::PremiseCount { tag, expected, found } => write!(f, "{tag} takes {expected} premises, found {found}"),
            Reason::FreeInHypotheses(x) => write!(f, "R4: `{x}` is free in the hypotheses"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("invalid at node {path:?}: {reason}")]
pub struct Invalid {
    pub path: Vec<usize>,
    pub reason: Reason,
}

/// Checks every node, parents before children.
pub fn check(proof: &ProofNode, gamma: &Theory, sig: &Signature) -> Result<(), Invalid> {
    let mut path = Vec::new();
    check_at(proof, gamma, sig, &mut path)
}

fn check_at(node: &ProofNode, gamma: &Theory, sig: &Signature, path: &mut Vec<usize>) -> Result<(), Invalid> {
    check_node(node, gamma, sig).map_err(|reason| Invalid { path: path.clone(), reason })?;
    for (i, p) in node.premises.iter().enumerate() {
        path.push(i);
        check_at(p, gamma, sig, path)?;
        path.pop();
    }
    Ok(())
}

fn check_node(node: &ProofNode, gamma: &Theory, sig: &Signature) -> Result<(), Reason> {
    let tag = node.by.to_string();
    let expected = match &node.by {
        Justification::Rule(r) => r.premises(),
        _ => 0,
    };
    if node.premises.len() != expected {
        return Err(Reason::PremiseCount { tag, expected, found: node.premises.len() });
    }
    match &node.by {
        Justification::Hypothesis(i) => {
            let h = gamma.conditions.get(*i).ok_or(Reason::NoSuchHypothesis(*i))?;
            if node.conclusion.alpha_eq(h) {
                Ok(())
            } else {
                Err(Reason::HypothesisMismatch(*i))
            }
        }
        Justification::Axiom(k) => check_axiom(*k, &node.conclusion, &node.inst, sig),
        Justification::Rule(r) => check_rule(*r, &node.conclusion, &node.premises, gamma),
    }
}

fn lit(f: &Formula) -> Option<Rational> {
    f.as_real()
}

fn is_lit(f: &Formula, r: &Rational) -> bool {
    lit(f).as_ref() == Some(r)
}

/// The literal `r`, written `1` when `r = 1`.
pub fn literal(r: Rational) -> Formula {
    if r.is_one() {
        Formula::One
    } else {
        Formula::real(r)
    }
}

fn neg(f: Formula) -> Formula {
    Formula::scale(-Rational::one(), f)
}

fn vars_of(ts: &[Term]) -> Option<Vec<String>> {
    ts.iter()
        .map(|t| match t {
            Term::Var(v) => Some(v.clone()),
            _ => None,
        })
        .collect()
}

#[derive(Clone, Debug)]
enum Bound {
    Formula(Formula),
    Term(Term),
    Real(Rational),
    Name(String),
    Vars(Vec<String>),
}

type Bindings = Vec<(&'static str, Bound)>;

type Match = Result<Bindings, String>;

fn same(a: &Formula, b: &Formula, what: &str) -> Result<(), String> {
    if a.alpha_eq(b) {
        Ok(())
    } else {
        Err(format!("expected {what} `{b}`, found `{a}`"))
    }
}

fn shape(what: &str) -> String {
    format!("expected {what}")
}

/// `d(x_1,y_1) + ... + d(x_n,y_n)`, scaled by `lambda` unless it is 1.
fn lipschitz_bound(lambda: &Rational, xs: &[String], ys: &[String]) -> Vec<Formula> {
    let sum = Formula::sum_all(xs.iter().zip(ys).map(|(x, y)| Formula::dist(Term::var(x), Term::var(y))));
    let mut out = vec![Formula::scale(lambda.clone(), sum.clone())];
    if lambda.is_one() {
        out.push(sum);
    }
    out
}

/// Instance check for an equation schema `a = b`, used for either direction.
fn equation(k: u8, a: &Formula, b: &Formula, sig: &Signature) -> Match {
    use Formula::*;
    match k {
        1 => match a {
            Sum(p, q) => {
                let (r1, r2) = (lit(p).ok_or_else(|| shape("literal r1"))?, lit(q).ok_or_else(|| shape("literal r2"))?);
                let r = lit(b).ok_or_else(|| shape("literal r"))?;
                if &r1 + &r2 != r {
                    return Err(format!("side:{} + {} != {}", format_rational(&r1), format_rational(&r2), format_rational(&r)));
                }
                Ok(vec![("r1", Bound::Real(r1)), ("r2", Bound::Real(r2)), ("r", Bound::Real(r))])
            }
            _ => Err(shape("r1 + r2")),
        },
        2 => match a {
            Scale(r1, q) => {
                let r2 = lit(q).ok_or_else(|| shape("literal r2"))?;
                let r = lit(b).ok_or_else(|| shape("literal r"))?;
                if r1 * &r2 != r {
                    return Err(format!("side:{} * {} != {}", format_rational(r1), format_rational(&r2), format_rational(&r)));
                }
                Ok(vec![("r1", Bound::Real(r1.clone())), ("r2", Bound::Real(r2)), ("r", Bound::Real(r))])
            }
            _ => Err(shape("r1 r2")),
        },
        4 => match a {
            Sum(phi, rest) => match &**rest {
                Sum(psi, theta) => {
                    same(b, &Formula::sum(Formula::sum((**phi).clone(), (**psi).clone()), (**theta).clone()), "(phi + psi) + theta")?;
                    Ok(vec![("phi", Bound::Formula((**phi).clone())), ("psi", Bound::Formula((**psi).clone())), ("theta", Bound::Formula((**theta).clone()))])
                }
                _ => Err(shape("phi + (psi + theta)")),
            },
            _ => Err(shape("phi + (psi + theta)")),
        },
        5 => match a {
            Sum(phi, psi) => {
                same(b, &Formula::sum((**psi).clone(), (**phi).clone()), "psi + phi")?;
                Ok(vec![("phi", Bound::Formula((**phi).clone())), ("psi", Bound::Formula((**psi).clone()))])
            }
            _ => Err(shape("phi + psi")),
        },
        6 => match a {
            Sum(z, phi) if is_lit(z, &Rational::zero()) => {
                same(b, phi, "phi")?;
                Ok(vec![("phi", Bound::Formula((**phi).clone()))])
            }
            _ => Err(shape("0 + phi")),
        },
        7 => match a {
            Scale(r, inner) => match &**inner {
                Sum(phi, psi) => {
                    let want = Formula::sum(Formula::scale(r.clone(), (**phi).clone()), Formula::scale(r.clone(), (**psi).clone()));
                    same(b, &want, "r phi + r psi")?;
                    Ok(vec![("r", Bound::Real(r.clone())), ("phi", Bound::Formula((**phi).clone())), ("psi", Bound::Formula((**psi).clone()))])
                }
                _ => Err(shape("r (phi + psi)")),
            },
            _ => Err(shape("r (phi + psi)")),
        },
        8 => match (a, b) {
            (Scale(t, phi), Sum(p, q)) => match (&**p, &**q) {
                (Scale(r, phi1), Scale(s, phi2)) => {
                    same(phi1, phi, "phi")?;
                    same(phi2, phi, "phi")?;
                    if r + s != *t {
                        return Err(format!("side:{} + {} != {}", format_rational(r), format_rational(s), format_rational(t)));
                    }
                    Ok(vec![("r", Bound::Real(r.clone())), ("s", Bound::Real(s.clone())), ("phi", Bound::Formula((**phi).clone()))])
                }
                _ => Err(shape("r phi + s phi")),
            },
            _ => Err(shape("(r + s) phi = r phi + s phi")),
        },
        9 => match a {
            Scale(r, inner) => match &**inner {
                Scale(s, phi) => {
                    same(b, &Formula::scale(r * s, (**phi).clone()), "(rs) phi")?;
                    Ok(vec![("r", Bound::Real(r.clone())), ("s", Bound::Real(s.clone())), ("phi", Bound::Formula((**phi).clone()))])
                }
                _ => Err(shape("r (s phi)")),
            },
            _ => Err(shape("r (s phi)")),
        },
        10 => match a {
            Scale(r, phi) if r.is_one() => {
                same(b, phi, "phi")?;
                Ok(vec![("phi", Bound::Formula((**phi).clone()))])
            }
            _ => Err(shape("1 phi")),
        },
        11 => match a {
            Scale(r, phi) if r.is_zero() => {
                if !is_lit(b, &Rational::zero()) {
                    return Err(shape("literal 0"));
                }
                Ok(vec![("phi", Bound::Formula((**phi).clone()))])
            }
            _ => Err(shape("0 phi")),
        },
        13 => match a {
            Sup(x, body) => match &**body {
                Sum(phi, psi) => {
                    if psi.free_vars().contains(x) {
                        return Err(format!("side:`{x}` is free in psi"));
                    }
                    same(b, &Formula::sum(Formula::sup(x, (**phi).clone()), (**psi).clone()), "sup_x phi + psi")?;
                    Ok(vec![("x", Bound::Name(x.clone())), ("phi", Bound::Formula((**phi).clone())), ("psi", Bound::Formula((**psi).clone()))])
                }
                _ => Err(shape("sup_x (phi + psi)")),
            },
            _ => Err(shape("sup_x (phi + psi)")),
        },
        15 => match a {
            Sup(x, body) => match &**body {
                Scale(r, phi) => {
                    if r.is_negative() {
                        return Err(format!("side:{} < 0", format_rational(r)));
                    }
                    same(b, &Formula::scale(r.clone(), Formula::sup(x, (**phi).clone())), "r sup_x phi")?;
                    Ok(vec![("x", Bound::Name(x.clone())), ("r", Bound::Real(r.clone())), ("phi", Bound::Formula((**phi).clone()))])
                }
                _ => Err(shape("sup_x (r phi)")),
            },
            _ => Err(shape("sup_x (r phi)")),
        },
        16 => match a {
            Sup(x, phi) => {
                same(b, &neg(Formula::inf(x, neg((**phi).clone()))), "-inf_x -phi")?;
                Ok(vec![("x", Bound::Name(x.clone())), ("phi", Bound::Formula((**phi).clone()))])
            }
            _ => Err(shape("sup_x phi")),
        },
        17 => match a {
            Dist(Term::Var(x), Term::Var(y)) if x == y => {
                if !is_lit(b, &Rational::zero()) {
                    return Err(shape("literal 0"));
                }
                Ok(vec![("x", Bound::Name(x.clone()))])
            }
            _ => Err(shape("d(x,x) with x a variable")),
        },
        18 => match (a, b) {
            (Dist(Term::Var(x), Term::Var(y)), Dist(Term::Var(y2), Term::Var(x2))) if x == x2 && y == y2 => {
                Ok(vec![("x", Bound::Name(x.clone())), ("y", Bound::Name(y.clone()))])
            }
            _ => Err(shape("d(x,y) = d(y,x) with x, y variables")),
        },
        _ => {
            let _ = sig;
            Err(format!("A{k} is not an equation"))
        }
    }
}

/// Instance check for an inequality schema `a <= b`.
fn inequality(k: u8, a: &Formula, b: &Formula, sig: &Signature, t_hint: Option<Term>) -> Match {
    use Formula::*;
    match k {
        3 => {
            let r = lit(a).ok_or_else(|| shape("literal r"))?;
            let s = lit(b).ok_or_else(|| shape("literal s"))?;
            if r > s {
                return Err(format!("side:{} > {}", format_rational(&r), format_rational(&s)));
            }
            Ok(vec![("r", Bound::Real(r)), ("s", Bound::Real(s))])
        }
        12 => match b {
            Sup(x, phi) => {
                let t = t_hint.unwrap_or_else(|| infer_instance(phi, x, a).unwrap_or_else(|| Term::var(x)));
                let inst = phi.substitute(x, &t).map_err(|e| format!("side:{e}"))?;
                same(a, &inst, "phi[t/x]")?;
                Ok(vec![("x", Bound::Name(x.clone())), ("phi", Bound::Formula((**phi).clone())), ("t", Bound::Term(t))])
            }
            _ => Err(shape("rhs sup_x phi")),
        },
        14 => match a {
            Sup(x, body) => match &**body {
                Sum(phi, psi) => {
                    let want = Formula::sum(Formula::sup(x, (**phi).clone()), Formula::sup(x, (**psi).clone()));
                    same(b, &want, "sup_x phi + sup_x psi")?;
                    Ok(vec![("x", Bound::Name(x.clone())), ("phi", Bound::Formula((**phi).clone())), ("psi", Bound::Formula((**psi).clone()))])
                }
                _ => Err(shape("sup_x (phi + psi)")),
            },
            _ => Err(shape("sup_x (phi + psi)")),
        },
        19 => match (a, b) {
            (Dist(Term::Var(x), Term::Var(z)), Sum(p, q)) => match (&**p, &**q) {
                (Dist(Term::Var(x2), Term::Var(y)), Dist(Term::Var(y2), Term::Var(z2))) if x == x2 && y == y2 && z == z2 => {
                    Ok(vec![("x", Bound::Name(x.clone())), ("y", Bound::Name(y.clone())), ("z", Bound::Name(z.clone()))])
                }
                _ => Err(shape("d(x,y) + d(y,z) on the right")),
            },
            _ => Err(shape("d(x,z) <= d(x,y) + d(y,z) with variables")),
        },
        20 => match a {
            Dist(Term::Apply(f, xs), Term::Apply(g, ys)) if f == g && !xs.is_empty() => {
                let sym = sig.get(f).filter(|s| s.kind == SymbolKind::Function).ok_or_else(|| format!("`{f}` is not a function symbol"))?;
                let (xs, ys) = (vars_of(xs).ok_or_else(|| shape("variable arguments"))?, vars_of(ys).ok_or_else(|| shape("variable arguments"))?);
                if xs.len() != sym.arity || ys.len() != sym.arity {
                    return Err(format!("`{f}` has arity {}", sym.arity));
                }
                if !lipschitz_bound(&sym.lipschitz, &xs, &ys).iter().any(|w| b.alpha_eq(w)) {
                    return Err(format!("expected `{}`", lipschitz_bound(&sym.lipschitz, &xs, &ys)[0]));
                }
                Ok(vec![("F", Bound::Name(f.clone())), ("xs", Bound::Vars(xs)), ("ys", Bound::Vars(ys))])
            }
            _ => Err(shape("d(F(xs), F(ys))")),
        },
        21 => match a {
            Sum(p, q) => match (&**p, &**q) {
                (Rel(r, xs), Scale(m, inner)) if m == &-Rational::one() => match &**inner {
                    Rel(r2, ys) if r == r2 => {
                        let sym = sig.get(r).filter(|s| s.kind == SymbolKind::Relation).ok_or_else(|| format!("`{r}` is not a relation symbol"))?;
                        let (xs, ys) = (vars_of(xs).ok_or_else(|| shape("variable arguments"))?, vars_of(ys).ok_or_else(|| shape("variable arguments"))?);
                        if xs.len() != sym.arity || ys.len() != sym.arity {
                            return Err(format!("`{r}` has arity {}", sym.arity));
                        }
                        if !lipschitz_bound(&sym.lipschitz, &xs, &ys).iter().any(|w| b.alpha_eq(w)) {
                            return Err(format!("expected `{}`", lipschitz_bound(&sym.lipschitz, &xs, &ys)[0]));
                        }
                        Ok(vec![("R", Bound::Name(r.clone())), ("xs", Bound::Vars(xs)), ("ys", Bound::Vars(ys))])
                    }
                    _ => Err(shape("R(xs) - R(ys)")),
                },
                _ => Err(shape("R(xs) - R(ys)")),
            },
            _ => Err(shape("R(xs) - R(ys)")),
        },
        22 => {
            let (atom, other, value) = if is_lit(a, &Rational::zero()) {
                (b, a, Rational::zero())
            } else {
                (a, b, Rational::one())
            };
            if !is_lit(other, &value) {
                return Err(shape("0 <= R(xs) or R(xs) <= 1"));
            }
            match atom {
                Dist(Term::Var(x), Term::Var(y)) => Ok(vec![("R", Bound::Name("d".into())), ("xs", Bound::Vars(vec![x.clone(), y.clone()]))]),
                Rel(r, xs) => {
                    let sym = sig.get(r).filter(|s| s.kind == SymbolKind::Relation).ok_or_else(|| format!("`{r}` is not a relation symbol"))?;
                    let xs = vars_of(xs).ok_or_else(|| shape("variable arguments"))?;
                    if xs.len() != sym.arity {
                        return Err(format!("`{r}` has arity {}", sym.arity));
                    }
                    Ok(vec![("R", Bound::Name(r.clone())), ("xs", Bound::Vars(xs))])
                }
                _ => Err(shape("R(xs) with variable arguments")),
            }
        }
        _ => Err(format!("A{k} is not an inequality")),
    }
}

const EQUATIONS: &[u8] = &[1, 2, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 16, 17, 18];

fn check_axiom(k: u8, c: &Condition, inst: &BTreeMap<String, String>, sig: &Signature) -> Result<(), Reason> {
    let tag = format!("A{k}");
    let t_hint = match inst.get("t") {
        Some(text) if k == 12 => Some(
            parse_term(text, sig).map_err(|e| Reason::Malformed { metavar: "t".into(), msg: e.to_string() })?,
        ),
        _ => None,
    };
    let result = if EQUATIONS.contains(&k) {
        equation(k, &c.lhs, &c.rhs, sig).or_else(|first| equation(k, &c.rhs, &c.lhs, sig).map_err(|_| first))
    } else {
        inequality(k, &c.lhs, &c.rhs, sig, t_hint)
    };
    let bindings = result.map_err(|msg| match msg.strip_prefix("side:") {
        Some(m) => Reason::SideCondition { tag: tag.clone(), msg: m.to_string() },
        None => Reason::NotAnInstance { tag: tag.clone(), msg },
    })?;
    for (name, text) in inst {
        let bound = bindings
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, b)| b)
            .ok_or_else(|| Reason::Malformed { metavar: name.clone(), msg: format!("not a metavariable of {tag}") })?;
        let bad = |msg: String| Reason::Malformed { metavar: name.clone(), msg };
        let agrees = match bound {
            Bound::Formula(f) => parse_formula(text, sig).map_err(|e| bad(e.to_string()))?.alpha_eq(f),
            Bound::Term(t) => parse_term(text, sig).map_err(|e| bad(e.to_string()))? == *t,
            Bound::Real(r) => crate::scalar::parse_rational(text).map_err(|e| bad(e.to_string()))? == *r,
            Bound::Name(n) => text.trim() == n,
            Bound::Vars(vs) => text.split(',').map(str::trim).eq(vs.iter().map(String::as_str)),
        };
        if !agrees {
            return Err(bad(format!("`{text}` does not match the conclusion")));
        }
    }
    Ok(())
}

/// First term standing where `phi` has a free `x`, found by walking `phi` and
/// `target` in parallel.
fn infer_instance(phi: &Formula, x: &str, target: &Formula) -> Option<Term> {
    fn in_terms(p: &Term, t: &Term, x: &str) -> Option<Term> {
        match (p, t) {
            (Term::Var(v), _) if v == x => Some(t.clone()),
            (Term::Apply(f, ps), Term::Apply(g, ts)) if f == g && ps.len() == ts.len() => {
                ps.iter().zip(ts).find_map(|(p, t)| in_terms(p, t, x))
            }
            _ => None,
        }
    }
    use Formula::*;
    match (phi, target) {
        (Dist(a, b), Dist(c, d)) => in_terms(a, c, x).or_else(|| in_terms(b, d, x)),
        (Rel(r, ps), Rel(s, ts)) if r == s && ps.len() == ts.len() => ps.iter().zip(ts).find_map(|(p, t)| in_terms(p, t, x)),
        (Sum(a, b), Sum(c, d)) | (Min(a, b), Min(c, d)) | (Max(a, b), Max(c, d)) => {
            infer_instance(a, x, c).or_else(|| infer_instance(b, x, d))
        }
        (Scale(_, a), Scale(_, c)) => infer_instance(a, x, c),
        (Sup(y, a), Sup(_, c)) | (Inf(y, a), Inf(_, c)) if y != x => infer_instance(a, x, c),
        _ => None,
    }
}

fn check_rule(rule: Rule, c: &Condition, prem: &[ProofNode], gamma: &Theory) -> Result<(), Reason> {
    let tag = format!("{rule:?}");
    let fail = |msg: String| Reason::NotAnInstance { tag: tag.clone(), msg };
    let same = |a: &Formula, b: &Formula, what: &str| same(a, b, what).map_err(fail);
    match rule {
        Rule::R1 => {
            let (p, q) = (&prem[0].conclusion, &prem[1].conclusion);
            same(&q.lhs, &p.rhs, "middle formula")?;
            same(&c.lhs, &p.lhs, "lhs")?;
            same(&c.rhs, &q.rhs, "rhs")
        }
        Rule::R2 => {
            let p = &prem[0].conclusion;
            match (&c.lhs, &c.rhs) {
                (Formula::Sum(a, t1), Formula::Sum(b, t2)) => {
                    same(t2, t1, "theta")?;
                    same(a, &p.lhs, "phi")?;
                    same(b, &p.rhs, "psi")
                }
                _ => Err(fail("expected phi + theta <= psi + theta".into())),
            }
        }
        Rule::R3 => {
            let (sign, p) = (&prem[0].conclusion, &prem[1].conclusion);
            if !is_lit(&sign.lhs, &Rational::zero()) {
                return Err(fail("first premise must be 0 <= r".into()));
            }
            let r = lit(&sign.rhs).ok_or_else(|| fail("first premise must be 0 <= r".into()))?;
            match (&c.lhs, &c.rhs) {
                (Formula::Scale(r1, a), Formula::Scale(r2, b)) if *r1 == r && *r2 == r => {
                    same(a, &p.lhs, "phi")?;
                    same(b, &p.rhs, "psi")
                }
                _ => Err(fail(format!("expected {} phi <= {} psi", format_rational(&r), format_rational(&r)))),
            }
        }
        Rule::R4 => {
            let p = &prem[0].conclusion;
            match (&c.lhs, &c.rhs) {
                (Formula::Sup(x, a), Formula::Sup(y, b)) if x == y => {
                    if gamma.free_vars().contains(x) {
                        return Err(Reason::FreeInHypotheses(x.clone()));
                    }
                    same(a, &p.lhs, "phi")?;
                    same(b, &p.rhs, "psi")
                }
                _ => Err(fail("expected sup_x phi <= sup_x psi".into())),
            }
        }
    }
}

/// Rewrites every `0*phi` to the literal `0`. Never applied by `check`.
pub fn normalize_zero_scalings(f: &Formula) -> Formula {
    match f {
        Formula::Scale(r, inner) if r.is_zero() => Formula::real(Rational::zero()),
        Formula::Scale(r, inner) => Formula::scale(r.clone(), normalize_zero_scalings(inner)),
        Formula::Sum(a, b) => Formula::sum(normalize_zero_scalings(a), normalize_zero_scalings(b)),
        Formula::Min(a, b) => Formula::min(normalize_zero_scalings(a), normalize_zero_scalings(b)),
        Formula::Max(a, b) => Formula::max(normalize_zero_scalings(a), normalize_zero_scalings(b)),
        Formula::Sup(x, a) => Formula::sup(x, normalize_zero_scalings(a)),
        Formula::Inf(x, a) => Formula::inf(x, normalize_zero_scalings(a)),
        _ => f.clone(),
    }
}

/// Joins `a_0 <= a_1`, `a_1 <= a_2`, ... with `R1`.
pub fn chain(steps: Vec<ProofNode>) -> ProofNode {
    let mut it = steps.into_iter();
    let first = it.next().expect("at least one step");
    it.fold(first, |acc, next| {
        let c = Condition::new(acc.conclusion.lhs.clone(), next.conclusion.rhs.clone());
        ProofNode::rule(Rule::R1, c, vec![acc, next])
    })
}

fn le(a: &Formula, b: &Formula) -> Condition {
    Condition::new(a.clone(), b.clone())
}

/// Hypotheses `r <= 0` and `0 <= r`, the two halves of `r = 0`.
pub fn zero_hypotheses(r: &Rational) -> Theory {
    let zero = Formula::real(Rational::zero());
    Theory::new(vec![le(&literal(r.clone()), &zero), le(&zero, &literal(r.clone()))])
}

/// Derivation of `r phi <= 0` from `zero_hypotheses(r)`, in these
/// steps: `r phi <= r b`, `0 <= -r`, `(-r)(-phi) <= (-r) b`, `r phi <= -r b`,
/// then `2 r phi <= r b - r b` and halving. `phi` must be an atom with variable
/// arguments, so `b = 1` and `A22` bounds it.
pub fn zero_scaling_proof(r: &Rational, phi: &Formula) -> ProofNode {
    let zero = Formula::real(Rational::zero());
    let one = Formula::One;
    let lr = literal(r.clone());
    let lnr = literal(-r.clone());
    let sc = |k: &Rational, f: &Formula| Formula::scale(k.clone(), f.clone());
    let sum = |a: &Formula, b: &Formula| Formula::sum(a.clone(), b.clone());
    let minus_r = -r.clone();

    // r phi <= r 1
    let phi_le_b = ProofNode::axiom(22, le(phi, &one));
    let step1 = ProofNode::rule(Rule::R3, le(&sc(r, phi), &sc(r, &one)), vec![ProofNode::hyp(1, le(&zero, &lr)), phi_le_b]);

    // r <= 0 gives 0 <= -r
    let step2 = chain(vec![
        ProofNode::axiom(1, le(&zero, &sum(&lr, &lnr))),
        ProofNode::rule(Rule::R2, le(&sum(&lr, &lnr), &sum(&zero, &lnr)), vec![ProofNode::hyp(0, le(&lr, &zero))]),
        ProofNode::axiom(6, le(&sum(&zero, &lnr), &lnr)),
    ]);

    // -phi <= 1
    let n = neg(phi.clone());
    let neg_le_b = chain(vec![
        ProofNode::axiom(6, le(&n, &sum(&zero, &n))),
        ProofNode::rule(Rule::R2, le(&sum(&zero, &n), &sum(phi, &n)), vec![ProofNode::axiom(22, le(&zero, phi))]),
        ProofNode::rule(Rule::R2, le(&sum(phi, &n), &sum(&sc(&Rational::one(), phi), &n)), vec![ProofNode::axiom(10, le(phi, &sc(&Rational::one(), phi)))]),
        ProofNode::axiom(8, le(&sum(&sc(&Rational::one(), phi), &n), &sc(&Rational::zero(), phi))),
        ProofNode::axiom(11, le(&sc(&Rational::zero(), phi), &zero)),
        ProofNode::axiom(3, le(&zero, &one)),
    ]);
    // (-r)(-phi) <= (-r) 1
    let step3 = ProofNode::rule(Rule::R3, le(&sc(&minus_r, &n), &sc(&minus_r, &one)), vec![step2, neg_le_b]);
    // r phi <= -r 1
    let step4 = chain(vec![ProofNode::axiom(9, le(&sc(r, phi), &sc(&minus_r, &n))), step3]);

    // 2r phi <= r 1 - r 1 = 0
    let a = sc(r, phi);
    let (p, q) = (sc(r, &one), sc(&minus_r, &one));
    let two_r = r + r;
    let doubled = chain(vec![
        ProofNode::axiom(8, le(&sc(&two_r, phi), &sum(&a, &a))),
        ProofNode::rule(Rule::R2, le(&sum(&a, &a), &sum(&p, &a)), vec![step1]),
        ProofNode::axiom(5, le(&sum(&p, &a), &sum(&a, &p))),
        ProofNode::rule(Rule::R2, le(&sum(&a, &p), &sum(&q, &p)), vec![step4]),
        ProofNode::axiom(1, le(&sum(&q, &p), &zero)),
    ]);
    let half = Rational::new(1.into(), 2.into());
    let halved = ProofNode::rule(
        Rule::R3,
        le(&sc(&half, &sc(&two_r, phi)), &sc(&half, &zero)),
        vec![ProofNode::axiom(3, le(&zero, &literal(half.clone()))), doubled],
    );
    chain(vec![
        ProofNode::axiom(9, le(&a, &sc(&half, &sc(&two_r, phi)))),
        halved,
        ProofNode::axiom(2, le(&sc(&half, &zero), &zero)),
    ])
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeViolation {
    pub structure: usize,
    pub node: Vec<usize>,
    pub witness: Assignment,
    pub margin: Rational,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbeReport {
    /// Structures satisfying every hypothesis.
    pub satisfying: usize,
    pub skipped: usize,
    /// Least margin of any node conclusion over the satisfying structures.
    pub min_margin: Option<Rational>,
    pub violations: Vec<ProbeViolation>,
}

impl ProbeReport {
    pub fn sound(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates every node conclusion (universally closed) in each structure that
/// satisfies the universal closure of every hypothesis.
pub fn soundness_probe(proof: &ProofNode, gamma: &Theory, family: &[FiniteStructure]) -> Result<ProbeReport, EvalError> {
    let mut report = ProbeReport::default();
    let paths = proof.paths();
    for (i, m) in family.iter().enumerate() {
        let mut ok = true;
        for h in &gamma.conditions {
            if !check_condition_universal(m, h, 1)?.holds {
                ok = false;
                break;
            }
        }
        if !ok {
            report.skipped += 1;
            continue;
        }
        report.satisfying += 1;
        for path in &paths {
            let node = proof.at(path).expect("path from paths()");
            let r = check_condition_universal(m, &node.conclusion, 1)?;
            if report.min_margin.as_ref().map_or(true, |w| r.min_margin < *w) {
                report.min_margin = Some(r.min_margin.clone());
            }
            if !r.holds {
                report.violations.push(ProbeViolation { structure: i, node: path.clone(), witness: r.witness, margin: r.min_margin });
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MutationKind {
    /// Exchange the premises of an `R1` or `R3` node.
    SwapPremises,
    /// Shift one rational in a non-root conclusion.
    PerturbRational,
    /// Rename a binder in a non-root conclusion to a variable free in its body.
    CaptureRename,
    /// Rename a binder in a non-root conclusion to a fresh variable.
    FreshRename,
}

#[derive(Clone, Debug)]
pub struct Mutant {
    pub proof: ProofNode,
    pub kind: MutationKind,
    pub path: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuzzOutcome {
    Rejected,
    /// Still valid, with a root conclusion alpha-equivalent to the original.
    AlphaVariant,
    /// Valid proof of a different conclusion; never expected.
    ChangedConclusion,
}

fn count_scales(f: &Formula) -> usize {
    match f {
        Formula::Scale(_, a) => 1 + count_scales(a),
        Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => count_scales(a) + count_scales(b),
        Formula::Sup(_, a) | Formula::Inf(_, a) => count_scales(a),
        _ => 0,
    }
}

fn perturb_nth(f: &Formula, k: &mut usize, delta: &Rational) -> Formula {
    match f {
        Formula::Scale(r, a) => {
            if *k == 0 {
                *k = usize::MAX;
                return Formula::scale(r + delta, (**a).clone());
            }
            *k = k.wrapping_sub(1);
            Formula::scale(r.clone(), perturb_nth(a, k, delta))
        }
        Formula::Sum(a, b) => {
            let a = perturb_nth(a, k, delta);
            Formula::sum(a, perturb_nth(b, k, delta))
        }
        Formula::Min(a, b) => {
            let a = perturb_nth(a, k, delta);
            Formula::min(a, perturb_nth(b, k, delta))
        }
        Formula::Max(a, b) => {
            let a = perturb_nth(a, k, delta);
            Formula::max(a, perturb_nth(b, k, delta))
        }
        Formula::Sup(x, a) => Formula::sup(x, perturb_nth(a, k, delta)),
        Formula::Inf(x, a) => Formula::inf(x, perturb_nth(a, k, delta)),
        _ => f.clone(),
    }
}

/// Binders in pre-order with the free variables of their bodies.
fn binders(f: &Formula, out: &mut Vec<(String, Vec<String>)>) {
    match f {
        Formula::Sup(x, a) | Formula::Inf(x, a) => {
            out.push((x.clone(), a.free_vars().into_iter().filter(|v| v != x).collect()));
            binders(a, out);
        }
        Formula::Scale(_, a) => binders(a, out),
        Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
            binders(a, out);
            binders(b, out);
        }
        _ => {}
    }
}

fn rename_nth(f: &Formula, k: &mut usize, new: &str) -> Formula {
    match f {
        Formula::Sup(x, a) | Formula::Inf(x, a) => {
            let here = *k == 0;
            *k = k.wrapping_sub(1);
            let body = if here {
                a.substitute(x, &Term::var(new)).unwrap_or_else(|_| (**a).clone())
            } else {
                rename_nth(a, k, new)
            };
            let x = if here { new } else { x.as_str() };
            match f {
                Formula::Sup(..) => Formula::sup(x, body),
                _ => Formula::inf(x, body),
            }
        }
        Formula::Scale(r, a) => Formula::scale(r.clone(), rename_nth(a, k, new)),
        Formula::Sum(a, b) => {
            let a = rename_nth(a, k, new);
            Formula::sum(a, rename_nth(b, k, new))
        }
        Formula::Min(a, b) => {
            let a = rename_nth(a, k, new);
            Formula::min(a, rename_nth(b, k, new))
        }
        Formula::Max(a, b) => {
            let a = rename_nth(a, k, new);
            Formula::max(a, rename_nth(b, k, new))
        }
        _ => f.clone(),
    }
}

fn on_condition(c: &Condition, k: usize, lhs_count: usize, f: impl Fn(&Formula, &mut usize) -> Formula) -> Condition {
    if k < lhs_count {
        Condition::new(f(&c.lhs, &mut k.clone()), c.rhs.clone())
    } else {
        Condition::new(c.lhs.clone(), f(&c.rhs, &mut (k - lhs_count)))
    }
}

/// One random mutation of the requested kind, if the proof has a site for it.
pub fn mutate<R: Rng>(proof: &ProofNode, kind: MutationKind, rng: &mut R) -> Option<Mutant> {
    let paths = proof.paths();
    let inner: Vec<&Vec<usize>> = paths.iter().filter(|p| !p.is_empty()).collect();
    let mut out = proof.clone();
    match kind {
        MutationKind::SwapPremises => {
            let sites: Vec<&Vec<usize>> = paths
                .iter()
                .filter(|p| {
                    let n = proof.at(p).expect("valid path");
                    n.premises.len() == 2 && n.premises[0].conclusion != n.premises[1].conclusion
                })
                .collect();
            let path = (*sites.choose(rng)?).clone();
            out.at_mut(&path).expect("valid path").premises.swap(0, 1);
            Some(Mutant { proof: out, kind, path })
        }
        MutationKind::PerturbRational => {
            let sites: Vec<&&Vec<usize>> = inner.iter().filter(|p| {
                let c = &proof.at(p).expect("valid path").conclusion;
                count_scales(&c.lhs) + count_scales(&c.rhs) > 0
            }).collect();
            let path = (**sites.choose(rng)?).clone();
            let node = out.at_mut(&path).expect("valid path");
            let lhs_count = count_scales(&node.conclusion.lhs);
            let k = rng.gen_range(0..lhs_count + count_scales(&node.conclusion.rhs));
            let delta = Rational::new(if rng.gen_bool(0.5) { 1 } else { -1 }.into(), rng.gen_range(1..=3).into());
            node.conclusion = on_condition(&node.conclusion, k, lhs_count, |f, k| perturb_nth(f, k, &delta));
            Some(Mutant { proof: out, kind, path })
        }
        MutationKind::CaptureRename | MutationKind::FreshRename => {
            let mut sites = Vec::new();
            for p in &inner {
                let c = &proof.at(p).expect("valid path").conclusion;
                let (mut l, mut r) = (Vec::new(), Vec::new());
                binders(&c.lhs, &mut l);
                binders(&c.rhs, &mut r);
                let lhs_count = l.len();
                for (k, (x, free)) in l.into_iter().chain(r).enumerate() {
                    let target = if kind == MutationKind::CaptureRename {
                        match free.first() {
                            Some(v) => v.clone(),
                            None => continue,
                        }
                    } else {
                        let used: std::collections::BTreeSet<String> =
                            c.lhs.all_vars().into_iter().chain(c.rhs.all_vars()).collect();
                        (0..).map(|i| format!("{x}_{i}")).find(|v| !used.contains(v)).expect("fresh name")
                    };
                    sites.push(((*p).clone(), k, lhs_count, target));
                }
            }
            let (path, k, lhs_count, target) = sites.choose(rng)?.clone();
            let node = out.at_mut(&path).expect("valid path");
            node.conclusion = on_condition(&node.conclusion, k, lhs_count, |f, k| rename_nth(f, k, &target));
            Some(Mutant { proof: out, kind, path })
        }
    }
}

pub fn classify(original: &ProofNode, mutant: &ProofNode, gamma: &Theory, sig: &Signature) -> FuzzOutcome {
    if check(mutant, gamma, sig).is_err() {
        FuzzOutcome::Rejected
    } else if mutant.conclusion.alpha_eq(&original.conclusion) {
        FuzzOutcome::AlphaVariant
    } else {
        FuzzOutcome::ChangedConclusion
    }
}
