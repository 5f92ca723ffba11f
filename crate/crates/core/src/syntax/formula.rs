use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use super::signature::{Signature, SymbolKind};
use super::SyntaxError;
use crate::scalar::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
    Apply(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn constant(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn apply(f: &str, args: Vec<Term>) -> Self {
        Term::Apply(f.to_string(), args)
    }

    pub fn lipschitz(&self, sig: &Signature) -> Result<Rational, SyntaxError> {
        match self {
            Term::Var(_) => Ok(Rational::one()),
            Term::Const(_) => Ok(Rational::zero()),
            Term::Apply(f, args) => {
                let sym = sig
                    .get(f)
                    .filter(|s| s.kind == SymbolKind::Function)
                    .ok_or_else(|| SyntaxError::UnknownSymbol(f.clone()))?;
                let mut total = Rational::zero();
                for a in args {
                    total += a.lipschitz(sig)?;
                }
                Ok(&sym.lipschitz * total)
            }
        }
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Const(_) => {}
            Term::Apply(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn substitute(&self, var: &str, replacement: &Term) -> Term {
        match self {
            Term::Var(v) if v == var => replacement.clone(),
            Term::Var(_) | Term::Const(_) => self.clone(),
            Term::Apply(f, args) => {
                Term::Apply(f.clone(), args.iter().map(|a| a.substitute(var, replacement)).collect())
            }
        }
    }

    fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Apply(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
            Term::Apply(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Formula AST. Real constants are `Scale(r, One)`. `Min`/`Max` are the
/// lattice connectives of full continuous logic and make a formula non-affine.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    One,
    Dist(Term, Term),
    Rel(String, Vec<Term>),
    Sum(Box<Formula>, Box<Formula>),
    Scale(Rational, Box<Formula>),
    Sup(String, Box<Formula>),
    Inf(String, Box<Formula>),
    Min(Box<Formula>, Box<Formula>),
    Max(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstitutionError {
    #[error("substituting for `{var}` would capture `{binder}`; rename the bound variable first")]
    Capture { var: String, binder: String },
}

impl Formula {
    pub fn dist(a: Term, b: Term) -> Self {
        Formula::Dist(a, b)
    }

    pub fn rel(name: &str, args: Vec<Term>) -> Self {
        Formula::Rel(name.to_string(), args)
    }

    pub fn sum(a: Formula, b: Formula) -> Self {
        Formula::Sum(Box::new(a), Box::new(b))
    }

    pub fn scale(r: Rational, a: Formula) -> Self {
        Formula::Scale(r, Box::new(a))
    }

    pub fn neg(a: Formula) -> Self {
        Formula::scale(-Rational::one(), a)
    }

    pub fn sub(a: Formula, b: Formula) -> Self {
        Formula::sum(a, Formula::neg(b))
    }

    /// The real constant `r`, written `r*1`.
    pub fn real(r: Rational) -> Self {
        Formula::scale(r, Formula::One)
    }

    pub fn sup(var: &str, body: Formula) -> Self {
        Formula::Sup(var.to_string(), Box::new(body))
    }

    pub fn inf(var: &str, body: Formula) -> Self {
        Formula::Inf(var.to_string(), Box::new(body))
    }

    pub fn min(a: Formula, b: Formula) -> Self {
        Formula::Min(Box::new(a), Box::new(b))
    }

    pub fn max(a: Formula, b: Formula) -> Self {
        Formula::Max(Box::new(a), Box::new(b))
    }

    /// Left-nested sum of the given formulas; `0` when empty.
    pub fn sum_all(items: impl IntoIterator<Item = Formula>) -> Self {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::real(Rational::zero()),
            Some(first) => it.fold(first, Formula::sum),
        }
    }

    /// The value denoted if this formula is a real literal (`1` or `r*1`).
    pub fn as_real(&self) -> Option<Rational> {
        match self {
            Formula::One => Some(Rational::one()),
            Formula::Scale(r, inner) if **inner == Formula::One => Some(r.clone()),
            _ => None,
        }
    }

    /// Lipschitz constant computed by the structural recursion on formulas.
    pub fn lipschitz(&self, sig: &Signature) -> Result<Rational, SyntaxError> {
        Ok(match self {
            Formula::One => Rational::zero(),
            Formula::Dist(a, b) => a.lipschitz(sig)? + b.lipschitz(sig)?,
            Formula::Rel(r, args) => {
                let lr = sig.relation_lipschitz(r).ok_or_else(|| SyntaxError::UnknownSymbol(r.clone()))?;
                let mut total = Rational::zero();
                for a in args {
                    total += a.lipschitz(sig)?;
                }
                lr * total
            }
            Formula::Sum(a, b) => a.lipschitz(sig)? + b.lipschitz(sig)?,
            Formula::Scale(r, a) => r.abs() * a.lipschitz(sig)?,
            Formula::Sup(_, a) | Formula::Inf(_, a) => a.lipschitz(sig)?,
            // Lattice connectives: max of the two constants.
            Formula::Min(a, b) | Formula::Max(a, b) => {
                let (la, lb) = (a.lipschitz(sig)?, b.lipschitz(sig)?);
                if la > lb {
                    la
                } else {
                    lb
                }
            }
        })
    }

    /// Bound `b` with `|value| <= b` in every structure.
    pub fn bound(&self) -> Rational {
        match self {
            Formula::One | Formula::Dist(..) | Formula::Rel(..) => Rational::one(),
            Formula::Sum(a, b) => a.bound() + b.bound(),
            Formula::Scale(r, a) => r.abs() * a.bound(),
            Formula::Sup(_, a) | Formula::Inf(_, a) => a.bound(),
            Formula::Min(a, b) | Formula::Max(a, b) => {
                let (ba, bb) = (a.bound(), b.bound());
                if ba > bb {
                    ba
                } else {
                    bb
                }
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add_term = |t: &Term, bound: &Vec<String>| {
            for v in t.vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::One => {}
            Formula::Dist(a, b) => {
                add_term(a, bound);
                add_term(b, bound);
            }
            Formula::Rel(_, args) => args.iter().for_each(|a| add_term(a, bound)),
            Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Scale(_, a) => a.collect_free(bound, out),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                bound.push(x.clone());
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_sentence(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Whether the formula avoids the `min`/`max` connectives.
    pub fn is_affine(&self) -> bool {
        match self {
            Formula::One | Formula::Dist(..) | Formula::Rel(..) => true,
            Formula::Sum(a, b) => a.is_affine() && b.is_affine(),
            Formula::Scale(_, a) | Formula::Sup(_, a) | Formula::Inf(_, a) => a.is_affine(),
            Formula::Min(..) | Formula::Max(..) => false,
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::One | Formula::Dist(..) | Formula::Rel(..) => true,
            Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Scale(_, a) => a.is_quantifier_free(),
            Formula::Sup(..) | Formula::Inf(..) => false,
        }
    }

    pub fn quantifier_depth(&self) -> usize {
        match self {
            Formula::One | Formula::Dist(..) | Formula::Rel(..) => 0,
            Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                a.quantifier_depth().max(b.quantifier_depth())
            }
            Formula::Scale(_, a) => a.quantifier_depth(),
            Formula::Sup(_, a) | Formula::Inf(_, a) => 1 + a.quantifier_depth(),
        }
    }

    /// Number of formula and term nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::One => 1,
            Formula::Dist(a, b) => 1 + a.size() + b.size(),
            Formula::Rel(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => 1 + a.size() + b.size(),
            Formula::Scale(_, a) | Formula::Sup(_, a) | Formula::Inf(_, a) => 1 + a.size(),
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_vars(&mut out);
        out
    }

    fn visit_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::One => {}
            Formula::Dist(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Formula::Rel(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            Formula::Sum(a, b) | Formula::Min(a, b) | Formula::Max(a, b) => {
                a.visit_vars(out);
                b.visit_vars(out);
            }
            Formula::Scale(_, a) => a.visit_vars(out),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                out.insert(x.clone());
                a.visit_vars(out);
            }
        }
    }

    /// Capture-avoiding substitution of `t` for the free occurrences of `var`.
    /// Refuses instead of renaming when a binder would capture a variable of `t`.
    pub fn substitute(&self, var: &str, t: &Term) -> Result<Formula, SubstitutionError> {
        let t_vars = t.vars();
        self.subst_inner(var, t, &t_vars)
    }

    fn subst_inner(&self, var: &str, t: &Term, t_vars: &BTreeSet<String>) -> Result<Formula, SubstitutionError> {
        Ok(match self {
            Formula::One => Formula::One,
            Formula::Dist(a, b) => Formula::Dist(a.substitute(var, t), b.substitute(var, t)),
            Formula::Rel(r, args) => Formula::Rel(r.clone(), args.iter().map(|a| a.substitute(var, t)).collect()),
            Formula::Sum(a, b) => Formula::sum(a.subst_inner(var, t, t_vars)?, b.subst_inner(var, t, t_vars)?),
            Formula::Min(a, b) => Formula::min(a.subst_inner(var, t, t_vars)?, b.subst_inner(var, t, t_vars)?),
            Formula::Max(a, b) => Formula::max(a.subst_inner(var, t, t_vars)?, b.subst_inner(var, t, t_vars)?),
            Formula::Scale(r, a) => Formula::scale(r.clone(), a.subst_inner(var, t, t_vars)?),
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let body = if x == var {
                    (**a).clone()
                } else if t_vars.contains(x) && a.free_vars().contains(var) {
                    return Err(SubstitutionError::Capture { var: var.to_string(), binder: x.clone() });
                } else {
                    a.subst_inner(var, t, t_vars)?
                };
                match self {
                    Formula::Sup(..) => Formula::sup(x, body),
                    _ => Formula::inf(x, body),
                }
            }
        })
    }

    /// Renames every binder named `old` (and its bound occurrences) to `new`.
    /// No capture check; used to build alpha-variants and illegal renamings.
    pub fn rename_binder(&self, old: &str, new: &str) -> Formula {
        match self {
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let body = if x == old {
                    rename_free(a, old, new)
                } else {
                    (**a).clone()
                };
                let body = body.rename_binder(old, new);
                let x = if x == old { new } else { x.as_str() };
                match self {
                    Formula::Sup(..) => Formula::sup(x, body),
                    _ => Formula::inf(x, body),
                }
            }
            Formula::Sum(a, b) => Formula::sum(a.rename_binder(old, new), b.rename_binder(old, new)),
            Formula::Min(a, b) => Formula::min(a.rename_binder(old, new), b.rename_binder(old, new)),
            Formula::Max(a, b) => Formula::max(a.rename_binder(old, new), b.rename_binder(old, new)),
            Formula::Scale(r, a) => Formula::scale(r.clone(), a.rename_binder(old, new)),
            _ => self.clone(),
        }
    }

    /// Equality up to consistent renaming of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        alpha_eq_in(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

fn rename_free(f: &Formula, old: &str, new: &str) -> Formula {
    // Plain textual replacement of free occurrences; binders of `old` stop it.
    match f {
        Formula::One => Formula::One,
        Formula::Dist(a, b) => Formula::Dist(a.substitute(old, &Term::var(new)), b.substitute(old, &Term::var(new))),
        Formula::Rel(r, args) => {
            Formula::Rel(r.clone(), args.iter().map(|a| a.substitute(old, &Term::var(new))).collect())
        }
        Formula::Sum(a, b) => Formula::sum(rename_free(a, old, new), rename_free(b, old, new)),
        Formula::Min(a, b) => Formula::min(rename_free(a, old, new), rename_free(b, old, new)),
        Formula::Max(a, b) => Formula::max(rename_free(a, old, new), rename_free(b, old, new)),
        Formula::Scale(r, a) => Formula::scale(r.clone(), rename_free(a, old, new)),
        Formula::Sup(x, _) | Formula::Inf(x, _) if x == old => f.clone(),
        Formula::Sup(x, a) => Formula::sup(x, rename_free(a, old, new)),
        Formula::Inf(x, a) => Formula::inf(x, rename_free(a, old, new)),
    }
}

fn lookup(env: &[String], v: &str) -> Option<usize> {
    env.iter().rev().position(|b| b == v)
}

fn term_alpha_eq(a: &Term, b: &Term, ea: &[String], eb: &[String]) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => match (lookup(ea, x), lookup(eb, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Apply(f, xs), Term::Apply(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_alpha_eq(x, y, ea, eb))
        }
        _ => false,
    }
}

fn alpha_eq_in(a: &Formula, b: &Formula, ea: &mut Vec<String>, eb: &mut Vec<String>) -> bool {
    use Formula::*;
    match (a, b) {
        (One, One) => true,
        (Dist(a1, a2), Dist(b1, b2)) => term_alpha_eq(a1, b1, ea, eb) && term_alpha_eq(a2, b2, ea, eb),
        (Rel(r, xs), Rel(s, ys)) => {
            r == s && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| term_alpha_eq(x, y, ea, eb))
        }
        (Sum(a1, a2), Sum(b1, b2)) | (Min(a1, a2), Min(b1, b2)) | (Max(a1, a2), Max(b1, b2)) => {
            alpha_eq_in(a1, b1, ea, eb) && alpha_eq_in(a2, b2, ea, eb)
        }
        (Scale(r, x), Scale(s, y)) => r == s && alpha_eq_in(x, y, ea, eb),
        (Sup(x, fa), Sup(y, fb)) | (Inf(x, fa), Inf(y, fb)) => {
            ea.push(x.clone());
            eb.push(y.clone());
            let ok = alpha_eq_in(fa, fb, ea, eb);
            ea.pop();
            eb.pop();
            ok
        }
        _ => false,
    }
}

// Printing follows the grammar accepted by the parser: quantifier bodies
// extend to the right, so a quantifier that is not the whole formula is
// parenthesized.
fn write_prim(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::One => out.write_str("1"),
        Formula::Dist(a, b) => write!(out, "d({a},{b})"),
        Formula::Rel(r, args) => write!(out, "{}", Term::Apply(r.clone(), args.clone())),
        Formula::Min(a, b) => write!(out, "min({a}, {b})"),
        Formula::Max(a, b) => write!(out, "max({a}, {b})"),
        _ => write!(out, "({f})"),
    }
}

fn write_prod(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::Scale(r, inner) if **inner == Formula::One && !r.is_one() => {
            out.write_str(&format_rational(r))
        }
        Formula::Scale(r, inner) => {
            write!(out, "{}*", format_rational(r))?;
            write_prim(inner, out)
        }
        _ => write_prim(f, out),
    }
}

fn write_sum(f: &Formula, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    match f {
        Formula::Sum(a, b) => {
            write_sum(a, out)?;
            out.write_str(" + ")?;
            write_prod(b, out)
        }
        _ => write_prod(f, out),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Sup(x, body) => write!(f, "sup {x}. {body}"),
            Formula::Inf(x, body) => write!(f, "inf {x}. {body}"),
            _ => write_sum(self, f),
        }
    }
}

/// The condition `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Condition {
    pub lhs: Formula,
    pub rhs: Formula,
}

impl Condition {
    pub fn new(lhs: Formula, rhs: Formula) -> Self {
        Condition { lhs, rhs }
    }

    /// Both directions of `lhs = rhs`.
    pub fn equality(lhs: Formula, rhs: Formula) -> [Condition; 2] {
        [Condition::new(lhs.clone(), rhs.clone()), Condition::new(rhs, lhs)]
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.free_vars();
        v.extend(self.rhs.free_vars());
        v
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn is_affine(&self) -> bool {
        self.lhs.is_affine() && self.rhs.is_affine()
    }

    pub fn alpha_eq(&self, other: &Condition) -> bool {
        self.lhs.alpha_eq(&other.lhs) && self.rhs.alpha_eq(&other.rhs)
    }

    /// `lhs - rhs`; the condition holds iff this is `<= 0`.
    pub fn violation(&self) -> Formula {
        Formula::sub(self.lhs.clone(), self.rhs.clone())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Parenthesize a leading quantifier so its body does not swallow `<=`.
        match &self.lhs {
            Formula::Sup(..) | Formula::Inf(..) => write!(f, "({}) <= {}", self.lhs, self.rhs),
            _ => write!(f, "{} <= {}", self.lhs, self.rhs),
        }
    }
}

/// A finite list of conditions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Theory {
    pub conditions: Vec<Condition>,
}

impl Theory {
    pub fn new(conditions: Vec<Condition>) -> Self {
        Theory { conditions }
    }

    pub fn len(&self) -> usize {
        self.conditions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.conditions.iter().all(Condition::is_closed)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        self.conditions.iter().flat_map(Condition::free_vars).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CombinationError {
    #[error("affine combination needs at least one positive weight")]
    Empty,
    #[error("weight {0} is negative")]
    NegativeWeight(String),
}

/// `sum r_i lhs_i <= sum r_i rhs_i`. Weight-one terms are left unscaled and
/// zero-weight terms are dropped.
pub fn affine_combination(conds: &[(Condition, Rational)]) -> Result<Condition, CombinationError> {
    if let Some((_, w)) = conds.iter().find(|(_, w)| w.is_negative()) {
        return Err(CombinationError::NegativeWeight(format_rational(w)));
    }
    let live: Vec<_> = conds.iter().filter(|(_, w)| !w.is_zero()).collect();
    if live.is_empty() {
        return Err(CombinationError::Empty);
    }
    let weigh = |f: &Formula, w: &Rational| {
        if w.is_one() {
            f.clone()
        } else {
            Formula::scale(w.clone(), f.clone())
        }
    };
    let lhs = Formula::sum_all(live.iter().map(|(c, w)| weigh(&c.lhs, w)));
    let rhs = Formula::sum_all(live.iter().map(|(c, w)| weigh(&c.rhs, w)));
    Ok(Condition::new(lhs, rhs))
}
