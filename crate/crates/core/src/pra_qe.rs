//! Quantifier elimination for the affine theory of probability algebras.
//!
//! A quantifier-free formula in variables `x_1..x_n` is stored as its
//! coefficients on the `2^n` minterms `z_1 & ... & z_n` (each `z_i` is `x_i`
//! or its complement). Minterms are disjoint and cover `1`, so constants are
//! spread over all of them. `sup_y` of such a formula keeps, for each minterm
//! `u` of the other variables, the larger of the coefficients of `u & y` and
//! `u & y'`: the supremum is attained at `y` = union of the `u` where the
//! `y` side wins.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::scalar::{Rational, Scalar};
use crate::structures::FiniteStructure;
use crate::syntax::{Formula, Term};

/// Most variables a formula may have in scope at once.
pub const MAX_VARS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PraError {
    #[error("`{0}` is not a probability algebra symbol")]
    NotPra(String),
    #[error("min/max is not affine")]
    NotAffine,
    #[error("more than {MAX_VARS} variables in scope")]
    TooManyVariables,
    #[error("variable `{0}` is not in scope")]
    UnknownVariable(String),
    #[error("an algebra needs between 1 and 16 atoms with weights summing to 1")]
    BadAlgebra,
}

/// Boolean term over variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum EventTerm {
    Var(String),
    Zero,
    One,
    And(Box<EventTerm>, Box<EventTerm>),
    Or(Box<EventTerm>, Box<EventTerm>),
    Not(Box<EventTerm>),
    Sym(Box<EventTerm>, Box<EventTerm>),
}

impl EventTerm {
    pub fn var(name: &str) -> Self {
        EventTerm::Var(name.to_string())
    }

    pub fn and(a: EventTerm, b: EventTerm) -> Self {
        EventTerm::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: EventTerm, b: EventTerm) -> Self {
        EventTerm::Or(Box::new(a), Box::new(b))
    }

    pub fn not(a: EventTerm) -> Self {
        EventTerm::Not(Box::new(a))
    }

    pub fn sym(a: EventTerm, b: EventTerm) -> Self {
        EventTerm::Sym(Box::new(a), Box::new(b))
    }

    pub fn from_term(t: &Term) -> Result<Self, PraError> {
        Ok(match t {
            Term::Var(v) => EventTerm::Var(v.clone()),
            Term::Const(c) if c == "zero" => EventTerm::Zero,
            Term::Const(c) if c == "one" => EventTerm::One,
            Term::Const(c) => return Err(PraError::NotPra(c.clone())),
            Term::Apply(f, args) => {
                let a: Vec<EventTerm> = args.iter().map(EventTerm::from_term).collect::<Result<_, _>>()?;
                let mut it = a.into_iter();
                let mut next = || Box::new(it.next().expect("arity checked by parser"));
                match (f.as_str(), args.len()) {
                    ("and", 2) => EventTerm::And(next(), next()),
                    ("or", 2) => EventTerm::Or(next(), next()),
                    ("sym", 2) => EventTerm::Sym(next(), next()),
                    ("not", 1) => EventTerm::Not(next()),
                    _ => return Err(PraError::NotPra(f.clone())),
                }
            }
        })
    }

    pub fn to_term(&self) -> Term {
        match self {
            EventTerm::Var(v) => Term::var(v),
            EventTerm::Zero => Term::constant("zero"),
            EventTerm::One => Term::constant("one"),
            EventTerm::And(a, b) => Term::apply("and", vec![a.to_term(), b.to_term()]),
            EventTerm::Or(a, b) => Term::apply("or", vec![a.to_term(), b.to_term()]),
            EventTerm::Sym(a, b) => Term::apply("sym", vec![a.to_term(), b.to_term()]),
            EventTerm::Not(a) => Term::apply("not", vec![a.to_term()]),
        }
    }

    /// Truth value at the minterm whose bit `i` gives variable `scope[i]`.
    /// A name resolves to its last occurrence in `scope`.
    fn holds(&self, scope: &[String], m: usize) -> Result<bool, PraError> {
        Ok(match self {
            EventTerm::Var(v) => {
                let i = scope.iter().rposition(|s| s == v).ok_or_else(|| PraError::UnknownVariable(v.clone()))?;
                m >> i & 1 == 1
            }
            EventTerm::Zero => false,
            EventTerm::One => true,
            EventTerm::And(a, b) => a.holds(scope, m)? && b.holds(scope, m)?,
            EventTerm::Or(a, b) => a.holds(scope, m)? || b.holds(scope, m)?,
            EventTerm::Sym(a, b) => a.holds(scope, m)? != b.holds(scope, m)?,
            EventTerm::Not(a) => !a.holds(scope, m)?,
        })
    }

    /// The set of minterms (over `scope`) below this term, as a membership vector.
    pub fn minterms(&self, scope: &[String]) -> Result<Vec<bool>, PraError> {
        if scope.len() > MAX_VARS {
            return Err(PraError::TooManyVariables);
        }
        (0..1usize << scope.len()).map(|m| self.holds(scope, m)).collect()
    }
}

impl fmt::Display for EventTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// `sum_m coeffs[m] * mu(minterm m)` over the variables `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PraFormula {
    pub vars: Vec<String>,
    coeffs: Vec<Rational>,
}

impl PraFormula {
    pub fn constant(vars: Vec<String>, c: Rational) -> Result<Self, PraError> {
        if vars.len() > MAX_VARS {
            return Err(PraError::TooManyVariables);
        }
        let n = 1usize << vars.len();
        Ok(PraFormula { vars, coeffs: vec![c; n] })
    }

    /// `mu(t)`.
    pub fn atom(vars: Vec<String>, t: &EventTerm) -> Result<Self, PraError> {
        let coeffs = t.minterms(&vars)?.into_iter().map(|b| if b { Rational::one() } else { Rational::zero() }).collect();
        Ok(PraFormula { vars, coeffs })
    }

    pub fn minterm_coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    fn zip(&self, other: &PraFormula, f: impl Fn(&Rational, &Rational) -> Rational) -> PraFormula {
        assert_eq!(self.vars, other.vars, "formulas over different scopes");
        PraFormula { vars: self.vars.clone(), coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect() }
    }

    pub fn add(&self, other: &PraFormula) -> PraFormula {
        self.zip(other, |a, b| a + b)
    }

    pub fn scale(&self, r: &Rational) -> PraFormula {
        PraFormula { vars: self.vars.clone(), coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|c| *c == self.coeffs[0])
    }

    /// Value when every variable is read in `alg` through `asg`.
    pub fn eval(&self, alg: &FiniteAlgebra, asg: &BTreeMap<String, u32>) -> Result<Rational, PraError> {
        let events: Vec<u32> =
            self.vars.iter().map(|v| asg.get(v).copied().ok_or_else(|| PraError::UnknownVariable(v.clone()))).collect::<Result<_, _>>()?;
        let full = alg.full();
        let mut total = Rational::zero();
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let cell = events.iter().enumerate().fold(full, |acc, (i, e)| acc & if m >> i & 1 == 1 { *e } else { !e & full });
            total += c * alg.measure(cell);
        }
        Ok(total)
    }

    /// Coefficients on `mu(x_S)` for `x_S` the conjunction of the variables in `S`
    /// (bitmask), with `S = {}` the constant term. Zero coefficients are dropped.
    pub fn conjunction_basis(&self) -> Vec<(usize, Rational)> {
        // c_S = sum over minterms m within S of (-1)^{|S - m|} f(m)
        let n = self.coeffs.len();
        let mut c = self.coeffs.clone();
        let bits = self.vars.len();
        for i in 0..bits {
            for s in 0..n {
                if s >> i & 1 == 1 {
                    let lower = c[s ^ (1 << i)].clone();
                    c[s] -= lower;
                }
            }
        }
        c.into_iter().enumerate().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// Renders in the conjunction basis: `r + sum c_S * mu(and(...))`.
    pub fn to_formula(&self) -> Formula {
        let terms = self.conjunction_basis();
        let mut parts = Vec::new();
        for (s, c) in terms {
            if s == 0 {
                parts.push(if c.is_one() { Formula::One } else { Formula::real(c) });
                continue;
            }
            let mut conj: Option<Term> = None;
            for (i, v) in self.vars.iter().enumerate() {
                if s >> i & 1 == 1 {
                    conj = Some(match conj {
                        None => Term::var(v),
                        Some(t) => Term::apply("and", vec![t, Term::var(v)]),
                    });
                }
            }
            let atom = Formula::rel("mu", vec![conj.expect("nonempty")]);
            parts.push(if c.is_one() { atom } else { Formula::scale(c, atom) });
        }
        if parts.is_empty() {
            Formula::real(Rational::zero())
        } else {
            Formula::sum_all(parts)
        }
    }

    /// The value of a formula without variables.
    pub fn as_constant(&self) -> Option<Rational> {
        self.is_constant().then(|| self.coeffs[0].clone())
    }

    fn position(&self, y: &str) -> Result<usize, PraError> {
        self.vars.iter().rposition(|v| v == y).ok_or_else(|| PraError::UnknownVariable(y.to_string()))
    }
}

impl fmt::Display for PraFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// `mu(t)` written in the conjunction basis, as `(conjunction, coefficient)` pairs.
pub fn expand_inclusion_exclusion(t: &EventTerm, vars: &[String]) -> Result<Vec<(Vec<String>, Rational)>, PraError> {
    let f = PraFormula::atom(vars.to_vec(), t)?;
    Ok(f.conjunction_basis()
        .into_iter()
        .map(|(s, c)| ((0..vars.len()).filter(|i| s >> i & 1 == 1).map(|i| vars[i].clone()).collect(), c))
        .collect())
}

/// `phi = residue + sum_u positive[u] * mu(u & y)` with `residue` and `u` free of `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitForm {
    pub y: String,
    pub residue: PraFormula,
    /// Indexed by minterms of `residue.vars`.
    pub positive: Vec<Rational>,
}

impl SplitForm {
    pub fn recombine(&self) -> PraFormula {
        let mut vars = self.residue.vars.clone();
        vars.push(self.y.clone());
        let k = self.residue.coeffs.len();
        let mut coeffs = self.residue.coeffs.clone();
        coeffs.extend(self.residue.coeffs.iter().zip(&self.positive).map(|(r, p)| r + p));
        debug_assert_eq!(coeffs.len(), 2 * k);
        PraFormula { vars, coeffs }
    }
}

fn drop_bit(m: usize, i: usize) -> usize {
    (m & ((1 << i) - 1)) | (m >> (i + 1) << i)
}

/// Rewrites `mu(u & y') = mu(u) - mu(u & y)` so `y` occurs only positively.
pub fn split_on(phi: &PraFormula, y: &str) -> Result<SplitForm, PraError> {
    let i = phi.position(y)?;
    let mut vars = phi.vars.clone();
    vars.remove(i);
    let half = phi.coeffs.len() / 2;
    let mut residue = vec![Rational::zero(); half];
    let mut positive = vec![Rational::zero(); half];
    for (m, c) in phi.coeffs.iter().enumerate() {
        let u = drop_bit(m, i);
        if m >> i & 1 == 1 {
            positive[u] += c;
        } else {
            residue[u] += c;
            positive[u] -= c;
        }
    }
    Ok(SplitForm { y: y.to_string(), residue: PraFormula { vars, coeffs: residue }, positive })
}

/// `sup_y phi`: `y` becomes the union of the minterms with positive coefficient.
pub fn eliminate_sup(phi: &PraFormula, y: &str) -> Result<PraFormula, PraError> {
    let split = split_on(phi, y)?;
    let mut out = split.residue;
    for (c, p) in out.coeffs.iter_mut().zip(&split.positive) {
        if p.is_positive() {
            *c += p;
        }
    }
    Ok(out)
}

/// Eliminates every quantifier; the result is over the free variables in sorted order.
pub fn qe(f: &Formula) -> Result<PraFormula, PraError> {
    let scope: Vec<String> = f.free_vars().into_iter().collect();
    qe_in(f, &scope)
}

fn qe_in(f: &Formula, scope: &[String]) -> Result<PraFormula, PraError> {
    Ok(match f {
        Formula::One => PraFormula::constant(scope.to_vec(), Rational::one())?,
        Formula::Dist(a, b) => {
            PraFormula::atom(scope.to_vec(), &EventTerm::sym(EventTerm::from_term(a)?, EventTerm::from_term(b)?))?
        }
        Formula::Rel(r, args) if r == "mu" && args.len() == 1 => {
            PraFormula::atom(scope.to_vec(), &EventTerm::from_term(&args[0])?)?
        }
        Formula::Rel(r, _) => return Err(PraError::NotPra(r.clone())),
        Formula::Sum(a, b) => qe_in(a, scope)?.add(&qe_in(b, scope)?),
        Formula::Scale(r, a) => qe_in(a, scope)?.scale(r),
        Formula::Sup(y, body) => {
            let inner = extended(scope, y)?;
            eliminate_sup(&qe_in(body, &inner)?, y)?
        }
        Formula::Inf(y, body) => {
            // inf_y phi = -sup_y -phi
            let inner = extended(scope, y)?;
            let minus = -Rational::one();
            eliminate_sup(&qe_in(body, &inner)?.scale(&minus), y)?.scale(&minus)
        }
        Formula::Min(..) | Formula::Max(..) => return Err(PraError::NotAffine),
    })
}

fn extended(scope: &[String], y: &str) -> Result<Vec<String>, PraError> {
    if scope.len() >= MAX_VARS {
        return Err(PraError::TooManyVariables);
    }
    let mut v = scope.to_vec();
    v.push(y.to_string());
    Ok(v)
}

/// A probability algebra with `k` atoms; events are bitmasks of atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteAlgebra {
    weights: Vec<Rational>,
}

impl FiniteAlgebra {
    pub fn new(weights: Vec<Rational>) -> Result<Self, PraError> {
        let total: Rational = weights.iter().sum();
        if weights.is_empty() || weights.len() > 16 || weights.iter().any(Signed::is_negative) || !total.is_one() {
            return Err(PraError::BadAlgebra);
        }
        Ok(FiniteAlgebra { weights })
    }

    pub fn uniform(k: usize) -> Self {
        FiniteAlgebra::new(vec![Rational::new(1.into(), (k as i64).into()); k]).expect("valid")
    }

    pub fn atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn full(&self) -> u32 {
        (1u32 << self.atoms()) - 1
    }

    pub fn events(&self) -> impl Iterator<Item = u32> {
        0..=self.full()
    }

    pub fn measure(&self, e: u32) -> Rational {
        self.weights.iter().enumerate().filter(|(i, _)| e >> i & 1 == 1).map(|(_, w)| w).sum()
    }

    /// Events as points (named by their atoms), `d = mu(a sym b)`, with the
    /// Boolean operations, `zero`, `one` and `mu` interpreted.
    pub fn to_structure(&self) -> FiniteStructure {
        let events: Vec<u32> = self.events().collect();
        let n = events.len();
        let name = |e: u32| {
            let atoms: Vec<String> = (0..self.atoms()).filter(|i| e >> i & 1 == 1).map(|i| i.to_string()).collect();
            format!("{{{}}}", atoms.join(","))
        };
        let points = events.iter().map(|&e| name(e)).collect();
        let metric = events.iter().map(|&a| events.iter().map(|&b| self.measure(a ^ b)).collect()).collect();
        let full = self.full();
        let binary = |op: fn(u32, u32) -> u32| -> Vec<usize> {
            let mut v = Vec::with_capacity(n * n);
            for &a in &events {
                for &b in &events {
                    v.push((op(a, b) & full) as usize);
                }
            }
            v
        };
        FiniteStructure::new(points, metric)
            .and_then(|m| m.with_constant("zero", 0))
            .and_then(|m| m.with_constant("one", full as usize))
            .and_then(|m| m.with_function("and", 2, binary(|a, b| a & b)))
            .and_then(|m| m.with_function("or", 2, binary(|a, b| a | b)))
            .and_then(|m| m.with_function("sym", 2, binary(|a, b| a ^ b)))
            .and_then(|m| m.with_function("not", 1, events.iter().map(|&a| (!a & full) as usize).collect()))
            .and_then(|m| m.with_relation("mu", 1, events.iter().map(|&a| self.measure(a)).collect()))
            .expect("well formed")
    }
}

fn event_value(t: &Term, alg: &FiniteAlgebra, asg: &BTreeMap<String, u32>) -> Result<u32, PraError> {
    let full = alg.full();
    Ok(match t {
        Term::Var(v) => *asg.get(v).ok_or_else(|| PraError::UnknownVariable(v.clone()))?,
        Term::Const(c) if c == "zero" => 0,
        Term::Const(c) if c == "one" => full,
        Term::Const(c) => return Err(PraError::NotPra(c.clone())),
        Term::Apply(f, args) => {
            let vals: Vec<u32> = args.iter().map(|a| event_value(a, alg, asg)).collect::<Result<_, _>>()?;
            match (f.as_str(), vals.as_slice()) {
                ("and", [a, b]) => a & b,
                ("or", [a, b]) => a | b,
                ("sym", [a, b]) => a ^ b,
                ("not", [a]) => !a & full,
                _ => return Err(PraError::NotPra(f.clone())),
            }
        }
    })
}

/// Direct evaluation with quantifiers ranging over all `2^k` events.
pub fn oracle_eval(f: &Formula, alg: &FiniteAlgebra, asg: &BTreeMap<String, u32>) -> Result<Rational, PraError> {
    Ok(match f {
        Formula::One => Rational::one(),
        Formula::Dist(a, b) => alg.measure(event_value(a, alg, asg)? ^ event_value(b, alg, asg)?),
        Formula::Rel(r, args) if r == "mu" && args.len() == 1 => alg.measure(event_value(&args[0], alg, asg)?),
        Formula::Rel(r, _) => return Err(PraError::NotPra(r.clone())),
        Formula::Sum(a, b) => oracle_eval(a, alg, asg)? + oracle_eval(b, alg, asg)?,
        Formula::Scale(r, a) => r * oracle_eval(a, alg, asg)?,
        Formula::Min(a, b) => Scalar::min_of(oracle_eval(a, alg, asg)?, oracle_eval(b, alg, asg)?),
        Formula::Max(a, b) => Scalar::max_of(oracle_eval(a, alg, asg)?, oracle_eval(b, alg, asg)?),
        Formula::Sup(y, body) | Formula::Inf(y, body) => {
            let mut inner = asg.clone();
            let mut best: Option<Rational> = None;
            for e in alg.events() {
                inner.insert(y.clone(), e);
                let v = oracle_eval(body, alg, &inner)?;
                best = Some(match best {
                    None => v,
                    Some(b) if matches!(f, Formula::Sup(..)) => Scalar::max_of(b, v),
                    Some(b) => Scalar::min_of(b, v),
                });
            }
            best.expect("at least one event")
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use crate::structures::{check_condition, eval, validate, Assignment};
    use crate::syntax::{parse_conditions, parse_formula, Signature};

    fn sig() -> Signature {
        Signature::probability_algebra()
    }

    fn f(text: &str) -> Formula {
        parse_formula(text, &sig()).unwrap()
    }

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Algebras with up to 3 atoms and weights on the quarter grid.
    fn algebras() -> Vec<FiniteAlgebra> {
        let mut out = vec![FiniteAlgebra::new(vec![int(1)]).unwrap()];
        for a in 0..=4 {
            out.push(FiniteAlgebra::new(vec![rat(a, 4), rat(4 - a, 4)]).unwrap());
            for b in 0..=(4 - a) {
                out.push(FiniteAlgebra::new(vec![rat(a, 4), rat(b, 4), rat(4 - a - b, 4)]).unwrap());
            }
        }
        out
    }

    fn assignments(alg: &FiniteAlgebra, names: &[String]) -> Vec<BTreeMap<String, u32>> {
        let mut out = vec![BTreeMap::new()];
        for v in names {
            out = out
                .into_iter()
                .flat_map(|a| {
                    alg.events().map(move |e| {
                        let mut b = a.clone();
                        b.insert(v.clone(), e);
                        b
                    })
                })
                .collect();
        }
        out
    }

    fn agrees(original: &Formula, reduced: &PraFormula) {
        for alg in algebras() {
            for asg in assignments(&alg, &reduced.vars) {
                assert_eq!(
                    oracle_eval(original, &alg, &asg).unwrap(),
                    reduced.eval(&alg, &asg).unwrap(),
                    "{original} vs {reduced} at {:?} on {:?}",
                    asg,
                    alg.weights()
                );
            }
        }
    }

    #[test]
    fn inclusion_exclusion() {
        let xy = vars(&["x", "y"]);
        let or = EventTerm::or(EventTerm::var("x"), EventTerm::var("y"));
        assert_eq!(
            expand_inclusion_exclusion(&or, &xy).unwrap(),
            vec![(vars(&["x"]), int(1)), (vars(&["y"]), int(1)), (xy.clone(), int(-1))]
        );
        let not = EventTerm::not(EventTerm::var("x"));
        assert_eq!(
            expand_inclusion_exclusion(&not, &vars(&["x"])).unwrap(),
            vec![(vec![], int(1)), (vars(&["x"]), int(-1))]
        );
        let sym = EventTerm::sym(EventTerm::var("x"), EventTerm::var("y"));
        assert_eq!(
            expand_inclusion_exclusion(&sym, &xy).unwrap(),
            vec![(vars(&["x"]), int(1)), (vars(&["y"]), int(1)), (xy.clone(), int(-2))]
        );
        assert_eq!(PraFormula::atom(xy.clone(), &sym).unwrap().to_string(), "mu(x) + mu(y) + -2*mu(and(x,y))");
        agrees(&f("mu(sym(x,y))"), &PraFormula::atom(xy, &sym).unwrap());
    }

    #[test]
    fn split_unfolds_complements() {
        let phi = PraFormula::atom(vars(&["x", "y"]), &EventTerm::var("x")).unwrap();
        let s = split_on(&phi, "y").unwrap();
        // mu(x) = mu(x & y) + mu(x & y') = mu(x) + 0 * mu(x & y)
        assert_eq!(s.residue.to_string(), "mu(x)");
        assert!(s.positive.iter().all(Zero::is_zero));
        assert_eq!(s.recombine(), phi);
        let psi = PraFormula::atom(vars(&["x", "y"]), &EventTerm::and(EventTerm::var("x"), EventTerm::var("y"))).unwrap();
        let again = split_on(&psi, "y").unwrap();
        assert!(again.residue.minterm_coeffs().iter().all(Zero::is_zero));
        assert_eq!(again.recombine(), psi);
    }

    #[test]
    fn sup_examples() {
        for (text, expect) in [
            ("sup y. mu(and(x,y))", "mu(x)"),
            ("sup y. mu(and(x,y)) - mu(and(not(x),y))", "mu(x)"),
            ("sup y. mu(y)", "1"),
        ] {
            let g = f(text);
            let r = qe(&g).unwrap();
            assert_eq!(r.to_string(), expect);
            agrees(&g, &r);
        }
    }

    #[test]
    fn sentences_become_constants() {
        for (text, expect) in [
            ("sup x. inf y. d(x,y)", int(0)),
            ("sup x. mu(x)", int(1)),
            ("inf x. sup y. mu(y) - mu(and(x,y))", int(0)),
            ("sup x. inf y. mu(or(x,y)) + -1/2*d(x,y)", rat(1, 2)),
        ] {
            let g = f(text);
            let r = qe(&g).unwrap();
            assert_eq!(r.as_constant(), Some(expect.clone()), "{text}");
            for alg in algebras() {
                assert_eq!(oracle_eval(&g, &alg, &BTreeMap::new()).unwrap(), expect, "{text}");
            }
        }
    }

    #[test]
    fn nested_and_shadowed() {
        for text in [
            "inf y. sup z. mu(and(x,z)) - 2*mu(and(y,z)) + d(x,y)",
            "sup x. mu(x) + inf x. mu(not(x))",
            "sup y. inf z. mu(sym(x,and(y,z))) + -1/3*mu(or(y,w))",
        ] {
            let g = f(text);
            agrees(&g, &qe(&g).unwrap());
        }
        assert_eq!(qe(&f("min(mu(x), 1)")), Err(PraError::NotAffine));
    }

    #[test]
    fn oracle_basics() {
        let alg = FiniteAlgebra::uniform(3);
        let asg: BTreeMap<String, u32> = [("x".to_string(), 0b101)].into();
        assert_eq!(oracle_eval(&f("mu(one)"), &alg, &asg).unwrap(), int(1));
        assert_eq!(oracle_eval(&f("d(x,x)"), &alg, &asg).unwrap(), int(0));
        assert_eq!(oracle_eval(&f("mu(x)"), &alg, &asg).unwrap(), rat(2, 3));
    }

    #[test]
    fn algebras_as_structures() {
        let two = FiniteAlgebra::new(vec![int(1)]).unwrap().to_structure();
        assert_eq!(two.points(), &["{}", "{0}"]);
        assert!(validate(&two, &sig()).unwrap().is_valid());
        let skew = FiniteAlgebra::new(vec![rat(1, 4), rat(3, 4), int(0)]).unwrap();
        let m = skew.to_structure();
        assert!(validate(&m, &sig()).unwrap().is_valid());

        for cond in parse_conditions("mu(and(x,y)) + mu(or(x,y)) = mu(x) + mu(y)", &sig()).unwrap() {
            for x in 0..2 {
                for y in 0..2 {
                    let asg: Assignment = [("x".to_string(), x), ("y".to_string(), y)].into();
                    let r = check_condition(&two, &cond, &asg, 1).unwrap();
                    assert!(r.holds);
                    assert_eq!(r.margin, int(0));
                }
            }
        }

        let g = f("sup y. mu(and(x,y)) + -1/2*d(y,not(x))");
        for e in skew.events() {
            let asg: Assignment = [("x".to_string(), e as usize)].into();
            let oracle = oracle_eval(&g, &skew, &[("x".to_string(), e)].into()).unwrap();
            assert_eq!(eval(&m, &g, &asg, 1).unwrap(), oracle);
        }
    }
}
