//! Random structures, formulas, charges and proofs for property tests.

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::proofcheck::{literal, ProofNode, Rule};
use crate::scalar::Rational;
use crate::structures::{all_tuples, tuple_index, FiniteStructure};
use crate::syntax::{Condition, Formula, Signature, SymbolKind, Term, Theory};
use crate::ultramean::Charge;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `F` (unary, 1-Lipschitz), `R` (unary, 1-Lipschitz), `P` (binary, 1/2-Lipschitz), constant `c`.
pub fn test_signature() -> Signature {
    Signature::new()
        .with_constant("c")
        .and_then(|s| s.with_function("F", 1, Rational::one()))
        .and_then(|s| s.with_relation("R", 1, Rational::one()))
        .and_then(|s| s.with_relation("P", 2, q(1, 2)))
        .expect("static signature")
}

/// A random rational in `[0, 1]` with denominator `den`.
pub fn unit<R: Rng>(rng: &mut R, den: i64) -> Rational {
    q(rng.gen_range(0..=den), den)
}

/// Metric on `n` points: random edge lengths in `(0, 1]` closed under shortest paths.
pub fn random_metric<R: Rng>(rng: &mut R, n: usize, den: i64) -> Vec<Vec<Rational>> {
    let mut d = vec![vec![Rational::zero(); n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = q(rng.gen_range(1..=den), den);
            d[i][j] = v.clone();
            d[j][i] = v;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random structure for `sig` with `1..=max_points` points; every symbol is
/// interpreted within its Lipschitz bound.
pub fn random_structure<R: Rng>(rng: &mut R, sig: &Signature, max_points: usize, den: i64) -> FiniteStructure {
    let n = rng.gen_range(1..=max_points);
    let metric = random_metric(rng, n, den);
    let mut m = FiniteStructure::from_fn(n, |i, j| metric[i][j].clone()).expect("nonempty");
    for s in sig.symbols() {
        match s.kind {
            SymbolKind::Constant => m.set_constant(&s.name, rng.gen_range(0..n)).expect("in range"),
            SymbolKind::Function => {
                let values = lipschitz_map(rng, &m, s.arity, &s.lipschitz);
                m.set_function(&s.name, s.arity, values).expect("table size")
            }
            SymbolKind::Relation => {
                let values = lipschitz_predicate(rng, &m, s.arity, &s.lipschitz, den);
                m.set_relation(&s.name, s.arity, values).expect("table size")
            }
        }
    }
    m
}

fn tuple_dist(m: &FiniteStructure, a: &[usize], b: &[usize]) -> Rational {
    a.iter().zip(b).map(|(&x, &y)| m.dist(x, y).clone()).sum()
}

/// Random table, kept if `lambda`-Lipschitz; otherwise a projection
/// (`lambda >= 1`) or a constant map.
fn lipschitz_map<R: Rng>(rng: &mut R, m: &FiniteStructure, arity: usize, lambda: &Rational) -> Vec<usize> {
    let n = m.len();
    let tuples: Vec<Vec<usize>> = all_tuples(n, arity).collect();
    for _ in 0..8 {
        let values: Vec<usize> = tuples.iter().map(|_| rng.gen_range(0..n)).collect();
        let ok = tuples.iter().all(|a| {
            tuples.iter().all(|b| *m.dist(values[tuple_index(n, a)], values[tuple_index(n, b)]) <= lambda * tuple_dist(m, a, b))
        });
        if ok {
            return values;
        }
    }
    if *lambda >= Rational::one() {
        tuples.iter().map(|t| t[0]).collect()
    } else {
        vec![rng.gen_range(0..n); tuples.len()]
    }
}

/// `min_b (v_b + lambda d(a, b))` clipped to `[0, 1]`, with random `v`.
fn lipschitz_predicate<R: Rng>(rng: &mut R, m: &FiniteStructure, arity: usize, lambda: &Rational, den: i64) -> Vec<Rational> {
    let tuples: Vec<Vec<usize>> = all_tuples(m.len(), arity).collect();
    let v: Vec<Rational> = tuples.iter().map(|_| unit(rng, den)).collect();
    tuples
        .iter()
        .map(|a| {
            let best = tuples
                .iter()
                .zip(&v)
                .map(|(b, vb)| vb + lambda * tuple_dist(m, a, b))
                .min()
                .expect("nonempty");
            if best > Rational::one() {
                Rational::one()
            } else {
                best
            }
        })
        .collect()
}

/// Random charge on `n` indices with positive integer weights below `max`.
pub fn random_charge<R: Rng>(rng: &mut R, n: usize, max: i64) -> Charge {
    let raw: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=max)).collect();
    let total: i64 = raw.iter().sum();
    Charge::from_weights(raw.into_iter().map(|w| q(w, total)).collect()).expect("normalized")
}

const COEFFS: &[(i64, i64)] = &[(-2, 1), (-1, 1), (-1, 2), (1, 3), (1, 2), (2, 1), (3, 2)];

fn coeff<R: Rng>(rng: &mut R) -> Rational {
    let (n, d) = *COEFFS.choose(rng).expect("nonempty");
    q(n, d)
}

/// Generator of random affine formulas over a signature.
#[derive(Clone, Debug)]
pub struct FormulaGen<'a> {
    pub sig: &'a Signature,
    /// Most nested quantifiers.
    pub depth: usize,
    /// Most AST nodes (terms count as part of their atom).
    pub size: usize,
}

impl FormulaGen<'_> {
    pub fn term<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Term {
        let consts: Vec<&str> = self.sig.of_kind(SymbolKind::Constant).map(|s| s.name.as_str()).collect();
        let unary: Vec<&str> = self.sig.of_kind(SymbolKind::Function).filter(|s| s.arity == 1).map(|s| s.name.as_str()).collect();
        let base = |rng: &mut R| -> Term {
            if scope.is_empty() || (!consts.is_empty() && rng.gen_bool(0.2)) {
                match consts.choose(rng) {
                    Some(c) => Term::constant(c),
                    None => Term::var("x"),
                }
            } else {
                Term::var(scope.choose(rng).expect("nonempty"))
            }
        };
        let t = base(rng);
        match unary.choose(rng) {
            Some(f) if rng.gen_bool(0.25) => Term::apply(f, vec![t]),
            _ => t,
        }
    }

    pub fn atom<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Formula {
        let rels: Vec<_> = self.sig.of_kind(SymbolKind::Relation).collect();
        let closed_terms = scope.is_empty() && self.sig.of_kind(SymbolKind::Constant).next().is_none();
        if closed_terms || rng.gen_bool(0.15) {
            return if rng.gen_bool(0.5) { Formula::One } else { Formula::real(coeff(rng)) };
        }
        match rels.choose(rng) {
            Some(r) if rng.gen_bool(0.5) => Formula::rel(&r.name, (0..r.arity).map(|_| self.term(rng, scope)).collect()),
            _ => Formula::dist(self.term(rng, scope), self.term(rng, scope)),
        }
    }

    /// Random formula whose free variables lie in `scope`.
    pub fn formula<R: Rng>(&self, rng: &mut R, scope: &[String]) -> Formula {
        self.build(rng, &mut scope.to_vec(), self.depth, self.size)
    }

    fn build<R: Rng>(&self, rng: &mut R, scope: &mut Vec<String>, depth: usize, size: usize) -> Formula {
        if size <= 1 {
            return self.atom(rng, scope);
        }
        match rng.gen_range(0..10) {
            0..=3 if size >= 3 => {
                let left = rng.gen_range(1..size - 1);
                let a = self.build(rng, scope, depth, left);
                let b = self.build(rng, scope, depth, size - 1 - left);
                Formula::sum(a, b)
            }
            4 | 5 => Formula::scale(coeff(rng), self.build(rng, scope, depth, size - 1)),
            6..=8 if depth > 0 => {
                let x = format!("v{}", scope.len());
                scope.push(x.clone());
                let body = self.build(rng, scope, depth - 1, size - 1);
                scope.pop();
                if rng.gen_bool(0.5) {
                    Formula::sup(&x, body)
                } else {
                    Formula::inf(&x, body)
                }
            }
            _ => self.atom(rng, scope),
        }
    }

    pub fn sentence<R: Rng>(&self, rng: &mut R) -> Formula {
        self.formula(rng, &[])
    }

    /// `sentence <= r` or `r <= sentence` with `r` in `[-1, 1]`.
    pub fn closed_condition<R: Rng>(&self, rng: &mut R) -> Condition {
        let s = self.sentence(rng);
        let r = Formula::real(q(rng.gen_range(-4..=4), 4));
        if rng.gen_bool(0.5) {
            Condition::new(s, r)
        } else {
            Condition::new(r, s)
        }
    }

    pub fn closed_theory<R: Rng>(&self, rng: &mut R, max_len: usize) -> Theory {
        Theory::new((0..rng.gen_range(1..=max_len)).map(|_| self.closed_condition(rng)).collect())
    }
}

/// Random event term of depth `<= depth` over `vars` in the probability algebra signature.
pub fn random_event<R: Rng>(rng: &mut R, vars: &[String], depth: usize) -> Term {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..12) {
            0 => Term::constant("zero"),
            1 => Term::constant("one"),
            _ => Term::var(vars.choose(rng).expect("nonempty")),
        };
    }
    match rng.gen_range(0..4) {
        0 => Term::apply("not", vec![random_event(rng, vars, depth - 1)]),
        k => {
            let f = ["and", "or", "sym"][k - 1];
            Term::apply(f, vec![random_event(rng, vars, depth - 1), random_event(rng, vars, depth - 1)])
        }
    }
}

/// Prenex formula with `vars.len()` variables, of which the last `prefix` are bound.
pub fn random_pra_formula<R: Rng>(rng: &mut R, vars: &[String], prefix: usize) -> Formula {
    let terms = rng.gen_range(1..=3);
    let mut body = Vec::new();
    for _ in 0..terms {
        let atom = if rng.gen_bool(0.75) {
            Formula::rel("mu", vec![random_event(rng, vars, 2)])
        } else {
            Formula::dist(random_event(rng, vars, 1), random_event(rng, vars, 1))
        };
        body.push(if rng.gen_bool(0.5) { atom } else { Formula::scale(coeff(rng), atom) });
    }
    let mut f = Formula::sum_all(body);
    for x in vars[vars.len() - prefix..].iter().rev() {
        f = if rng.gen_bool(0.5) { Formula::sup(x, f) } else { Formula::inf(x, f) };
    }
    f
}

fn le(a: Formula, b: Formula) -> Condition {
    Condition::new(a, b)
}

/// Random valid proofs: axiom instances, possibly under rule applications.
#[derive(Clone, Debug)]
pub struct ProofGen<'a> {
    pub sig: &'a Signature,
    pub vars: Vec<String>,
}

impl<'a> ProofGen<'a> {
    pub fn new(sig: &'a Signature) -> Self {
        ProofGen { sig, vars: ["x", "y", "z"].iter().map(|s| s.to_string()).collect() }
    }

    fn small(&self) -> FormulaGen<'a> {
        FormulaGen { sig: self.sig, depth: 1, size: 4 }
    }

    fn var<R: Rng>(&self, rng: &mut R) -> String {
        self.vars.choose(rng).expect("nonempty").clone()
    }

    fn vars_n<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<String> {
        (0..n).map(|_| self.var(rng)).collect()
    }

    fn phi<R: Rng>(&self, rng: &mut R) -> Formula {
        self.small().formula(rng, &self.vars)
    }

    fn eq<R: Rng>(rng: &mut R, a: Formula, b: Formula) -> Condition {
        if rng.gen_bool(0.5) {
            le(a, b)
        } else {
            le(b, a)
        }
    }

    /// A random instance of axiom `k`.
    pub fn axiom<R: Rng>(&self, rng: &mut R, k: u8) -> ProofNode {
        let r = coeff(rng);
        let s = coeff(rng);
        let c = match k {
            1 => Self::eq(rng, Formula::sum(literal(r.clone()), literal(s.clone())), literal(&r + &s)),
            2 => Self::eq(rng, Formula::scale(r.clone(), literal(s.clone())), literal(&r * &s)),
            3 => {
                let (lo, hi) = if r <= s { (r, s) } else { (s, r) };
                le(literal(lo), literal(hi))
            }
            4 => {
                let (a, b, c) = (self.phi(rng), self.phi(rng), self.phi(rng));
                Self::eq(rng, Formula::sum(a.clone(), Formula::sum(b.clone(), c.clone())), Formula::sum(Formula::sum(a, b), c))
            }
            5 => {
                let (a, b) = (self.phi(rng), self.phi(rng));
                Self::eq(rng, Formula::sum(a.clone(), b.clone()), Formula::sum(b, a))
            }
            6 => {
                let a = self.phi(rng);
                Self::eq(rng, Formula::sum(literal(Rational::zero()), a.clone()), a)
            }
            7 => {
                let (a, b) = (self.phi(rng), self.phi(rng));
                let rhs = Formula::sum(Formula::scale(r.clone(), a.clone()), Formula::scale(r.clone(), b.clone()));
                Self::eq(rng, Formula::scale(r, Formula::sum(a, b)), rhs)
            }
            8 => {
                let a = self.phi(rng);
                let rhs = Formula::sum(Formula::scale(r.clone(), a.clone()), Formula::scale(s.clone(), a.clone()));
                Self::eq(rng, Formula::scale(&r + &s, a), rhs)
            }
            9 => {
                let a = self.phi(rng);
                Self::eq(rng, Formula::scale(r.clone(), Formula::scale(s.clone(), a.clone())), Formula::scale(&r * &s, a))
            }
            10 => {
                let a = self.phi(rng);
                Self::eq(rng, Formula::scale(Rational::one(), a.clone()), a)
            }
            11 => {
                let a = self.phi(rng);
                Self::eq(rng, Formula::scale(Rational::zero(), a), literal(Rational::zero()))
            }
            12 => loop {
                let x = self.var(rng);
                let a = self.phi(rng);
                let t = self.small().term(rng, &self.vars);
                if let Ok(inst) = a.substitute(&x, &t) {
                    break le(inst, Formula::sup(&x, a));
                }
            },
            13 => {
                let x = self.var(rng);
                let a = self.phi(rng);
                let others: Vec<String> = self.vars.iter().filter(|v| **v != x).cloned().collect();
                let b = self.small().formula(rng, &others);
                Self::eq(rng, Formula::sup(&x, Formula::sum(a.clone(), b.clone())), Formula::sum(Formula::sup(&x, a), b))
            }
            14 => {
                let x = self.var(rng);
                let (a, b) = (self.phi(rng), self.phi(rng));
                le(Formula::sup(&x, Formula::sum(a.clone(), b.clone())), Formula::sum(Formula::sup(&x, a), Formula::sup(&x, b)))
            }
            15 => {
                let x = self.var(rng);
                let a = self.phi(rng);
                let r = r.abs();
                Self::eq(rng, Formula::sup(&x, Formula::scale(r.clone(), a.clone())), Formula::scale(r, Formula::sup(&x, a)))
            }
            16 => {
                let x = self.var(rng);
                let a = self.phi(rng);
                let minus = -Rational::one();
                let rhs = Formula::scale(minus.clone(), Formula::inf(&x, Formula::scale(minus, a.clone())));
                Self::eq(rng, Formula::sup(&x, a), rhs)
            }
            17 => {
                let x = Term::var(&self.var(rng));
                Self::eq(rng, Formula::dist(x.clone(), x), literal(Rational::zero()))
            }
            18 => {
                let (x, y) = (Term::var(&self.var(rng)), Term::var(&self.var(rng)));
                Self::eq(rng, Formula::dist(x.clone(), y.clone()), Formula::dist(y, x))
            }
            19 => {
                let v = self.vars_n(rng, 3);
                let d = |a: &str, b: &str| Formula::dist(Term::var(a), Term::var(b));
                le(d(&v[0], &v[2]), Formula::sum(d(&v[0], &v[1]), d(&v[1], &v[2])))
            }
            20 | 21 => {
                let kind = if k == 20 { SymbolKind::Function } else { SymbolKind::Relation };
                let sym = self.sig.of_kind(kind).collect::<Vec<_>>().choose(rng).copied().expect("signature has the symbol kind").clone();
                let (xs, ys) = (self.vars_n(rng, sym.arity), self.vars_n(rng, sym.arity));
                let args = |vs: &[String]| vs.iter().map(|v| Term::var(v)).collect::<Vec<_>>();
                let bound = Formula::scale(
                    sym.lipschitz.clone(),
                    Formula::sum_all(xs.iter().zip(&ys).map(|(x, y)| Formula::dist(Term::var(x), Term::var(y)))),
                );
                let lhs = if k == 20 {
                    Formula::dist(Term::apply(&sym.name, args(&xs)), Term::apply(&sym.name, args(&ys)))
                } else {
                    Formula::sub(Formula::rel(&sym.name, args(&xs)), Formula::rel(&sym.name, args(&ys)))
                };
                le(lhs, bound)
            }
            22 => {
                let rels: Vec<_> = self.sig.of_kind(SymbolKind::Relation).collect();
                let atom = match rels.choose(rng) {
                    Some(r) if rng.gen_bool(0.6) => Formula::rel(&r.name, self.vars_n(rng, r.arity).iter().map(|v| Term::var(v)).collect()),
                    _ => Formula::dist(Term::var(&self.var(rng)), Term::var(&self.var(rng))),
                };
                if rng.gen_bool(0.5) {
                    le(literal(Rational::zero()), atom)
                } else {
                    le(atom, Formula::One)
                }
            }
            _ => panic!("no axiom A{k}"),
        };
        ProofNode::axiom(k, c)
    }

    /// A proof of depth at most `depth` with no hypotheses.
    pub fn proof<R: Rng>(&self, rng: &mut R, depth: usize) -> ProofNode {
        if depth == 0 || rng.gen_bool(0.4) {
            let k = rng.gen_range(1..=22);
            return self.axiom(rng, k);
        }
        let p = self.proof(rng, depth - 1);
        let c = p.conclusion.clone();
        match rng.gen_range(0..4) {
            0 => {
                let one_b = Formula::scale(Rational::one(), c.rhs.clone());
                let tail = ProofNode::axiom(10, le(c.rhs.clone(), one_b.clone()));
                ProofNode::rule(Rule::R1, le(c.lhs, one_b), vec![p, tail])
            }
            1 => {
                let theta = self.phi(rng);
                ProofNode::rule(Rule::R2, le(Formula::sum(c.lhs, theta.clone()), Formula::sum(c.rhs, theta)), vec![p])
            }
            2 => {
                let r = coeff(rng).abs();
                let sign = ProofNode::axiom(3, le(literal(Rational::zero()), literal(r.clone())));
                ProofNode::rule(Rule::R3, le(Formula::scale(r.clone(), c.lhs), Formula::scale(r, c.rhs)), vec![sign, p])
            }
            _ => {
                let x = self.var(rng);
                ProofNode::rule(Rule::R4, le(Formula::sup(&x, c.lhs), Formula::sup(&x, c.rhs)), vec![p])
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::proofcheck::check;
    use crate::structures::validate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_structures_are_valid() {
        let sig = test_signature();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_structure(&mut rng, &sig, 4, 6);
            let report = validate(&m, &sig).unwrap();
            assert!(report.is_valid(), "{:?}", report.violations);
        }
    }

    #[test]
    fn formulas_respect_limits() {
        let sig = test_signature();
        let gen = FormulaGen { sig: &sig, depth: 2, size: 12 };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let f = gen.formula(&mut rng, &["x".to_string()]);
            assert!(f.is_affine());
            assert!(f.quantifier_depth() <= 2);
            assert!(f.free_vars().iter().all(|v| v == "x"));
            assert!(gen.sentence(&mut rng).is_sentence());
        }
    }

    #[test]
    fn generated_proofs_check() {
        let sig = test_signature();
        let gen = ProofGen::new(&sig);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 1..=22 {
            for _ in 0..5 {
                let p = gen.axiom(&mut rng, k);
                assert_eq!(check(&p, &Theory::default(), &sig), Ok(()), "A{k}: {}", p.conclusion);
            }
        }
        for _ in 0..100 {
            let p = gen.proof(&mut rng, 3);
            assert_eq!(check(&p, &Theory::default(), &sig), Ok(()), "{}", p.conclusion);
        }
    }

    #[test]
    fn charges_are_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_charge(&mut rng, 3, 5);
        assert_eq!(c.weights().iter().sum::<Rational>(), Rational::one());
        assert!(c.weights().iter().all(|w| w.is_positive()));
    }
}
