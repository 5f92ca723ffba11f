use num_traits::{One, ToPrimitive};

use super::{all_tuples, Assignment, FiniteStructure, FunctionTable, RelationTable};
use crate::scalar::{format_rational, Rational, Scalar};
use crate::syntax::{Condition, Formula, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` has no assigned point")]
    Unassigned(String),
    #[error("assignment maps `{var}` to point index {index}, outside the universe")]
    BadPoint { var: String, index: usize },
    #[error("structure does not interpret `{0}`")]
    Uninterpreted(String),
    #[error("`{symbol}` has arity {expected} in the structure, used with {found} arguments")]
    Arity { symbol: String, expected: usize, found: usize },
    #[error("exponent {0} is not supported; use 1 or a positive integer")]
    BadExponent(String),
    #[error("metric is stored as a {stored}-th power; cannot evaluate exactly with p = {requested}")]
    IncompatiblePower { stored: u32, requested: u32 },
    #[error("formula uses min/max, which this operation does not accept")]
    NotAffine,
}

/// Validates an L^p exponent: positive integers only, so atoms stay rational.
pub fn parse_exponent(p: &Rational) -> Result<u32, EvalError> {
    if p.is_integer() && *p >= Rational::one() {
        if let Some(v) = p.to_integer().to_u32() {
            return Ok(v);
        }
    }
    Err(EvalError::BadExponent(format_rational(p)))
}

enum CTerm<'a> {
    Slot(usize),
    Point(usize),
    Apply(&'a FunctionTable, Vec<CTerm<'a>>),
}

enum CNode<'a, S> {
    Value(S),
    Dist(CTerm<'a>, CTerm<'a>),
    Rel(&'a RelationTable<S>, Vec<CTerm<'a>>),
    Sum(Box<CNode<'a, S>>, Box<CNode<'a, S>>),
    Scale(S, Box<CNode<'a, S>>),
    Sup(usize, Box<CNode<'a, S>>),
    Inf(usize, Box<CNode<'a, S>>),
    Min(Box<CNode<'a, S>>, Box<CNode<'a, S>>),
    Max(Box<CNode<'a, S>>, Box<CNode<'a, S>>),
}

/// A formula resolved against one structure, with variables mapped to slots.
/// Evaluating at many tuples reuses the compiled plan.
pub struct CompiledFormula<'a, S> {
    structure: &'a FiniteStructure<S>,
    root: CNode<'a, S>,
    free: usize,
    slots: usize,
    power: u32,
}

struct Compiler<'a, S> {
    m: &'a FiniteStructure<S>,
    scope: Vec<(String, usize)>,
    next_slot: usize,
    max_slot: usize,
}

impl<'a, S: Scalar> Compiler<'a, S> {
    fn term(&self, t: &Term) -> Result<CTerm<'a>, EvalError> {
        Ok(match t {
            Term::Var(v) => {
                let slot = self
                    .scope
                    .iter()
                    .rev()
                    .find(|(name, _)| name == v)
                    .map(|(_, s)| *s)
                    .ok_or_else(|| EvalError::Unassigned(v.clone()))?;
                CTerm::Slot(slot)
            }
            Term::Const(c) => CTerm::Point(self.m.constant(c).ok_or_else(|| EvalError::Uninterpreted(c.clone()))?),
            Term::Apply(f, args) => {
                let table = self.m.function(f).ok_or_else(|| EvalError::Uninterpreted(f.clone()))?;
                if table.arity != args.len() {
                    return Err(EvalError::Arity { symbol: f.clone(), expected: table.arity, found: args.len() });
                }
                CTerm::Apply(table, args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?)
            }
        })
    }

    fn node(&mut self, f: &Formula) -> Result<CNode<'a, S>, EvalError> {
        Ok(match f {
            Formula::One => CNode::Value(S::one()),
            Formula::Dist(a, b) => CNode::Dist(self.term(a)?, self.term(b)?),
            Formula::Rel(r, args) => {
                let table = self.m.relation(r).ok_or_else(|| EvalError::Uninterpreted(r.clone()))?;
                if table.arity != args.len() {
                    return Err(EvalError::Arity { symbol: r.clone(), expected: table.arity, found: args.len() });
                }
                CNode::Rel(table, args.iter().map(|a| self.term(a)).collect::<Result<_, _>>()?)
            }
            Formula::Sum(a, b) => CNode::Sum(Box::new(self.node(a)?), Box::new(self.node(b)?)),
            Formula::Min(a, b) => CNode::Min(Box::new(self.node(a)?), Box::new(self.node(b)?)),
            Formula::Max(a, b) => CNode::Max(Box::new(self.node(a)?), Box::new(self.node(b)?)),
            Formula::Scale(r, a) => {
                let inner = self.node(a)?;
                if let CNode::Value(v) = &inner {
                    CNode::Value(S::from_rational(r) * v.clone())
                } else {
                    CNode::Scale(S::from_rational(r), Box::new(inner))
                }
            }
            Formula::Sup(x, a) | Formula::Inf(x, a) => {
                let slot = self.next_slot;
                self.next_slot += 1;
                self.max_slot = self.max_slot.max(self.next_slot);
                self.scope.push((x.clone(), slot));
                let body = self.node(a)?;
                self.scope.pop();
                self.next_slot -= 1;
                match f {
                    Formula::Sup(..) => CNode::Sup(slot, Box::new(body)),
                    _ => CNode::Inf(slot, Box::new(body)),
                }
            }
        })
    }
}

impl<'a, S: Scalar> CompiledFormula<'a, S> {
    /// Compiles `f` with free variables bound, in order, to `vars`.
    pub fn new(m: &'a FiniteStructure<S>, f: &Formula, vars: &[String], p: u32) -> Result<Self, EvalError> {
        if p == 0 {
            return Err(EvalError::BadExponent("0".into()));
        }
        if m.power() != 1 && m.power() != p {
            return Err(EvalError::IncompatiblePower { stored: m.power(), requested: p });
        }
        let mut c = Compiler {
            m,
            scope: vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect(),
            next_slot: vars.len(),
            max_slot: vars.len(),
        };
        let root = c.node(f)?;
        Ok(CompiledFormula { structure: m, root, free: vars.len(), slots: c.max_slot, power: p })
    }

    pub fn arity(&self) -> usize {
        self.free
    }

    /// Value at the tuple `args` (one point per declared variable).
    pub fn eval(&self, args: &[usize]) -> S {
        assert_eq!(args.len(), self.free, "wrong number of arguments");
        let mut env = vec![0; self.slots];
        env[..self.free].copy_from_slice(args);
        self.run(&self.root, &mut env)
    }

    fn term(&self, t: &CTerm<'a>, env: &[usize]) -> usize {
        match t {
            CTerm::Slot(s) => env[*s],
            CTerm::Point(p) => *p,
            CTerm::Apply(table, args) => {
                let n = self.structure.len();
                let idx = args.iter().fold(0, |acc, a| acc * n + self.term(a, env));
                table.values[idx]
            }
        }
    }

    fn run(&self, node: &CNode<'a, S>, env: &mut Vec<usize>) -> S {
        match node {
            CNode::Value(v) => v.clone(),
            CNode::Dist(a, b) => {
                let (x, y) = (self.term(a, env), self.term(b, env));
                let stored = self.structure.metric_entry(x, y);
                if self.structure.power() == self.power {
                    stored.clone()
                } else {
                    stored.pow(self.power)
                }
            }
            CNode::Rel(table, args) => {
                let n = self.structure.len();
                let idx = args.iter().fold(0, |acc, a| acc * n + self.term(a, env));
                table.values[idx].clone()
            }
            CNode::Sum(a, b) => self.run(a, env) + self.run(b, env),
            CNode::Scale(r, a) => r.clone() * self.run(a, env),
            CNode::Min(a, b) => S::min_of(self.run(a, env), self.run(b, env)),
            CNode::Max(a, b) => S::max_of(self.run(a, env), self.run(b, env)),
            CNode::Sup(slot, body) | CNode::Inf(slot, body) => {
                let is_sup = matches!(node, CNode::Sup(..));
                let mut best: Option<S> = None;
                for point in 0..self.structure.len() {
                    env[*slot] = point;
                    let v = self.run(body, env);
                    best = Some(match best {
                        None => v,
                        Some(b) if is_sup => S::max_of(b, v),
                        Some(b) => S::min_of(b, v),
                    });
                }
                best.expect("structures are nonempty")
            }
        }
    }

    /// Values at every tuple, in lexicographic tuple order.
    pub fn table(&self) -> Vec<S> {
        all_tuples(self.structure.len(), self.free).map(|t| self.eval(&t)).collect()
    }
}

fn ordered_vars(f: &Formula, asg: &Assignment) -> Result<(Vec<String>, Vec<usize>), EvalError> {
    let mut names = Vec::new();
    let mut points = Vec::new();
    for v in f.free_vars() {
        let p = *asg.get(&v).ok_or_else(|| EvalError::Unassigned(v.clone()))?;
        names.push(v);
        points.push(p);
    }
    Ok((names, points))
}

/// Value of `f` at the assignment; `p` selects L^p atoms `d(s,t)^p`.
pub fn eval<S: Scalar>(m: &FiniteStructure<S>, f: &Formula, asg: &Assignment, p: u32) -> Result<S, EvalError> {
    let (names, points) = ordered_vars(f, asg)?;
    for (v, &pt) in names.iter().zip(&points) {
        if pt >= m.len() {
            return Err(EvalError::BadPoint { var: v.clone(), index: pt });
        }
    }
    Ok(CompiledFormula::new(m, f, &names, p)?.eval(&points))
}

pub fn eval_sentence<S: Scalar>(m: &FiniteStructure<S>, f: &Formula, p: u32) -> Result<S, EvalError> {
    eval(m, f, &Assignment::new(), p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck<S> {
    pub holds: bool,
    /// `rhs - lhs`.
    pub margin: S,
}

pub fn check_condition<S: Scalar>(
    m: &FiniteStructure<S>,
    cond: &Condition,
    asg: &Assignment,
    p: u32,
) -> Result<ConditionCheck<S>, EvalError> {
    let margin = eval(m, &cond.rhs, asg, p)? - eval(m, &cond.lhs, asg, p)?;
    Ok(ConditionCheck { holds: !margin.is_negative_tol(), margin })
}

/// Result of checking a condition under every assignment of its free variables.
#[derive(Clone, Debug, PartialEq)]
pub struct UniversalCheck<S> {
    pub holds: bool,
    pub min_margin: S,
    /// An assignment attaining the minimum margin.
    pub witness: Assignment,
}

/// Checks the universal closure of `cond`.
pub fn check_condition_universal<S: Scalar>(
    m: &FiniteStructure<S>,
    cond: &Condition,
    p: u32,
) -> Result<UniversalCheck<S>, EvalError> {
    let vars: Vec<String> = cond.free_vars().into_iter().collect();
    let diff = cond.violation();
    let compiled = CompiledFormula::new(m, &diff, &vars, p)?;
    let mut worst: Option<(S, Vec<usize>)> = None;
    for t in all_tuples(m.len(), vars.len()) {
        let margin = -compiled.eval(&t);
        if worst.as_ref().map_or(true, |(w, _)| margin < *w) {
            worst = Some((margin, t));
        }
    }
    let (min_margin, tuple) = worst.expect("at least one tuple");
    let witness = vars.into_iter().zip(tuple).collect();
    Ok(UniversalCheck { holds: !min_margin.is_negative_tol(), min_margin, witness })
}
