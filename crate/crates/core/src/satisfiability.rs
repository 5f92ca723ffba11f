//! Affine satisfiability of finite theories relative to a finite family of structures.

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{Rational, Scalar};
use crate::structures::{check_condition, eval_sentence, Assignment, EvalError, FiniteStructure};
use crate::syntax::{affine_combination, Condition, Formula, Theory};
use crate::ultramean::{ultramean, Charge, MeanError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SatError {
    #[error("condition {0} has free variables")]
    OpenCondition(usize),
    #[error("target condition has free variables")]
    OpenTarget,
    #[error("the family is empty")]
    EmptyFamily,
    #[error("the basis is empty")]
    EmptyBasis,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("theory is not satisfiable over the family (margin {margin})")]
    Unsatisfiable { certificate: Vec<(usize, String)>, margin: String },
}

/// `rows[i][j]` is the value of sentence `j` in structure `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueMatrix<S = Rational> {
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> ValueMatrix<S> {
    pub fn new(family: &[FiniteStructure<S>], sentences: &[Formula], p: u32) -> Result<Self, EvalError> {
        let rows = family
            .iter()
            .map(|m| sentences.iter().map(|s| eval_sentence(m, s, p)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ValueMatrix { rows })
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SatVerdict<S = Rational> {
    /// A charge on the family under which every condition holds in the ultramean.
    Sat(Charge<S>),
    /// Multipliers `(condition index, r_j > 0)`; the combination fails by at least `margin` everywhere.
    Unsat { certificate: Vec<(usize, S)>, margin: S },
}

impl<S: Scalar> SatVerdict<S> {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatVerdict::Sat(_))
    }
}

/// `V[i][j] = lhs_j - rhs_j` in member `i`; positive entries are violations.
fn violation_matrix<S: Scalar>(theory: &Theory, family: &[FiniteStructure<S>]) -> Result<Vec<Vec<S>>, SatError> {
    if family.is_empty() {
        return Err(SatError::EmptyFamily);
    }
    for (j, c) in theory.conditions.iter().enumerate() {
        if !c.is_closed() {
            return Err(SatError::OpenCondition(j));
        }
    }
    let diffs: Vec<Formula> = theory.conditions.iter().map(Condition::violation).collect();
    Ok(ValueMatrix::new(family, &diffs, 1)?.rows)
}

pub fn sat_over_family<S: Scalar>(theory: &Theory, family: &[FiniteStructure<S>]) -> Result<SatVerdict<S>, SatError> {
    let v = violation_matrix(theory, family)?;
    Ok(sat_from_matrix(&v))
}

/// Decides the LP `w >= 0, sum w = 1, sum_i w_i V[i][j] <= 0` by first solving the game
/// `max delta : sum_j r_j V[i][j] >= delta for all i, r in the simplex`.
pub fn sat_from_matrix<S: Scalar>(v: &[Vec<S>]) -> SatVerdict<S> {
    let n = v.len();
    let k = v.first().map_or(0, Vec::len);
    if k == 0 {
        return SatVerdict::Sat(Charge::point_mass(n, 0));
    }
    // Variables r_0..r_{k-1}, delta.
    let mut objective = vec![S::zero(); k + 1];
    objective[k] = S::one();
    let mut game = LinearProgram::new(k + 1).maximize(objective);
    game.set_free(k);
    for row in v {
        let mut coeffs = row.clone();
        coeffs.push(-S::one());
        game.add(coeffs, Relation::Ge, S::zero());
    }
    let mut simplex = vec![S::one(); k];
    simplex.push(S::zero());
    game.add(simplex, Relation::Eq, S::one());
    let LpOutcome::Optimal { x, value } = game.solve() else {
        unreachable!("the game LP is feasible and bounded");
    };
    if value.is_positive_tol() {
        let certificate = (0..k).filter(|&j| x[j].is_positive_tol()).map(|j| (j, x[j].clone())).collect();
        return SatVerdict::Unsat { certificate, margin: value };
    }

    let mut primal = LinearProgram::new(n);
    for j in 0..k {
        primal.add(v.iter().map(|row| row[j].clone()).collect(), Relation::Le, S::zero());
    }
    primal.add(vec![S::one(); n], Relation::Eq, S::one());
    match primal.solve() {
        LpOutcome::Optimal { x, .. } => SatVerdict::Sat(normalized_charge(x)),
        other => unreachable!("minimax guarantees a feasible charge, got {other:?}"),
    }
}

fn normalized_charge<S: Scalar>(x: Vec<S>) -> Charge<S> {
    let total = x.iter().cloned().fold(S::zero(), |a, b| a + b);
    let w: Vec<S> = x.into_iter().map(|v| if v.is_negative() { S::zero() } else { v / total.clone() }).collect();
    Charge::from_weights(w).expect("normalized weights")
}

/// The conditions of `theory` re-checked in the ultramean under `charge`; returns the margins.
pub fn verify_charge<S: Scalar>(
    theory: &Theory,
    family: &[FiniteStructure<S>],
    charge: &Charge<S>,
) -> Result<Vec<S>, MeanError> {
    let mean = ultramean(family, charge, 1)?;
    Ok(theory
        .conditions
        .iter()
        .map(|c| check_condition(&mean.structure, c, &Assignment::new(), 1).expect("closed condition").margin)
        .collect())
}

/// The combined condition `sum r_j lhs_j <= sum r_j rhs_j` of an Unsat certificate.
pub fn certificate_condition(theory: &Theory, certificate: &[(usize, Rational)]) -> Condition {
    let parts: Vec<(Condition, Rational)> =
        certificate.iter().map(|(j, r)| (theory.conditions[*j].clone(), r.clone())).collect();
    affine_combination(&parts).expect("nonempty, nonnegative")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Consequence<S = Rational> {
    /// Least target margin `rhs - lhs` over charges satisfying the theory.
    pub value: S,
    /// A charge attaining it.
    pub charge: Charge<S>,
    /// Dual witness: in every member, target margin >= offset - sum_j r_j (lhs_j - rhs_j).
    pub multipliers: Vec<S>,
    pub offset: S,
}

impl<S: Scalar> Consequence<S> {
    pub fn follows(&self) -> bool {
        !self.value.is_negative_tol()
    }
}

/// Minimizes the target margin over charges satisfying `theory`. The minimum is
/// always finite since charges range over a compact simplex.
pub fn consequence_margin<S: Scalar>(
    theory: &Theory,
    target: &Condition,
    family: &[FiniteStructure<S>],
) -> Result<Consequence<S>, SatError> {
    if !target.is_closed() {
        return Err(SatError::OpenTarget);
    }
    let v = violation_matrix(theory, family)?;
    if let SatVerdict::Unsat { certificate, margin } = sat_from_matrix(&v) {
        return Err(SatError::Unsatisfiable {
            certificate: certificate.into_iter().map(|(j, r)| (j, r.to_string())).collect(),
            margin: margin.to_string(),
        });
    }
    let margins: Vec<S> = family
        .iter()
        .map(|m| Ok::<_, EvalError>(-eval_sentence(m, &target.violation(), 1)?))
        .collect::<Result<_, _>>()?;
    let n = family.len();
    let k = theory.len();

    let mut primal = LinearProgram::new(n).maximize(margins.iter().map(|c| -c.clone()).collect());
    for j in 0..k {
        primal.add(v.iter().map(|row| row[j].clone()).collect(), Relation::Le, S::zero());
    }
    primal.add(vec![S::one(); n], Relation::Eq, S::one());
    let LpOutcome::Optimal { x, value } = primal.solve() else {
        unreachable!("feasible and bounded");
    };

    // Dual: max t s.t. t - sum_j r_j V[i][j] <= c_i, r >= 0, t free.
    let mut objective = vec![S::zero(); k + 1];
    objective[k] = S::one();
    let mut dual = LinearProgram::new(k + 1).maximize(objective);
    dual.set_free(k);
    for (row, c) in v.iter().zip(&margins) {
        let mut coeffs: Vec<S> = row.iter().map(|e| -e.clone()).collect();
        coeffs.push(S::one());
        dual.add(coeffs, Relation::Le, c.clone());
    }
    let LpOutcome::Optimal { x: y, .. } = dual.solve() else {
        unreachable!("dual of a bounded feasible LP");
    };
    Ok(Consequence {
        value: -value,
        charge: normalized_charge(x),
        multipliers: y[..k].to_vec(),
        offset: y[k].clone(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Separation<S = Rational> {
    /// `sum c_k sigma_k <= r` on the first family and `>= s` on the second, `r < s`.
    Separated { coeffs: Vec<S>, r: S, s: S },
    NotSeparable,
}

/// Separates two families by a basic condition over `basis`.
pub fn separate<S: Scalar>(
    a: &[FiniteStructure<S>],
    b: &[FiniteStructure<S>],
    basis: &[Formula],
) -> Result<Separation<S>, SatError> {
    if basis.is_empty() {
        return Err(SatError::EmptyBasis);
    }
    if a.is_empty() || b.is_empty() {
        return Err(SatError::EmptyFamily);
    }
    let va = ValueMatrix::new(a, basis, 1)?;
    let vb = ValueMatrix::new(b, basis, 1)?;
    Ok(separate_vectors(&va.rows, &vb.rows))
}

/// Maximizes `s - r` over `|c|_1 <= 1` with `c.a <= r` on `a` and `c.b >= s` on `b`.
pub fn separate_vectors<S: Scalar>(a: &[Vec<S>], b: &[Vec<S>]) -> Separation<S> {
    let k = a[0].len();
    // Variables: c+ (k), c- (k), r, s.
    let nv = 2 * k + 2;
    let mut objective = vec![S::zero(); nv];
    objective[2 * k] = -S::one();
    objective[2 * k + 1] = S::one();
    let mut lp = LinearProgram::new(nv).maximize(objective);
    lp.set_free(2 * k);
    lp.set_free(2 * k + 1);
    for row in a {
        let mut coeffs: Vec<S> = row.iter().cloned().chain(row.iter().map(|v| -v.clone())).collect();
        coeffs.extend([-S::one(), S::zero()]);
        lp.add(coeffs, Relation::Le, S::zero());
    }
    for row in b {
        let mut coeffs: Vec<S> = row.iter().map(|v| -v.clone()).chain(row.iter().cloned()).collect();
        coeffs.extend([S::zero(), S::one()]);
        lp.add(coeffs, Relation::Le, S::zero());
    }
    let mut norm = vec![S::one(); 2 * k];
    norm.extend([S::zero(), S::zero()]);
    lp.add(norm, Relation::Le, S::one());
    let LpOutcome::Optimal { x, value } = lp.solve() else {
        unreachable!("the separation LP is feasible and bounded");
    };
    if !value.is_positive_tol() {
        return Separation::NotSeparable;
    }
    let coeffs: Vec<S> = (0..k).map(|i| x[i].clone() - x[k + i].clone()).collect();
    let dot = |row: &Vec<S>| row.iter().zip(&coeffs).fold(S::zero(), |acc, (v, c)| acc + v.clone() * c.clone());
    let r = a.iter().map(dot).reduce(S::max_of).expect("nonempty");
    let s = b.iter().map(dot).reduce(S::min_of).expect("nonempty");
    Separation::Separated { coeffs, r, s }
}
