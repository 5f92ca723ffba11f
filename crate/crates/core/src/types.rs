//! Types restricted to a finite formula basis, their polytopes and metrics.

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{Rational, Scalar};
use crate::structures::{all_tuples, CompiledFormula, EvalError, FiniteStructure};
use crate::syntax::Formula;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TypeError {
    #[error("the basis is empty")]
    EmptyBasis,
    #[error("the family is empty")]
    EmptyFamily,
    #[error("basis formula {0} has a free variable outside the declared variables")]
    StrayVariable(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("the {0} type is not realized in the structure")]
    NotRealized(&'static str),
    #[error("formula `{0}` is not in the basis")]
    NotInBasis(String),
    #[error("vectors have {found} coordinates, the basis has {expected}")]
    Dimension { expected: usize, found: usize },
}

/// Formulas `phi_1..phi_m` in the variables `vars`, with sup-norms over a family.
#[derive(Clone, Debug, PartialEq)]
pub struct FormulaBasis<S = Rational> {
    pub vars: Vec<String>,
    pub formulas: Vec<Formula>,
    norms: Vec<S>,
}

impl<S: Scalar> FormulaBasis<S> {
    pub fn new(vars: Vec<String>, formulas: Vec<Formula>, family: &[FiniteStructure<S>]) -> Result<Self, TypeError> {
        if formulas.is_empty() {
            return Err(TypeError::EmptyBasis);
        }
        if family.is_empty() {
            return Err(TypeError::EmptyFamily);
        }
        for (k, f) in formulas.iter().enumerate() {
            if f.free_vars().iter().any(|v| !vars.contains(v)) {
                return Err(TypeError::StrayVariable(k));
            }
        }
        let mut norms = vec![S::zero(); formulas.len()];
        for m in family {
            for (k, f) in formulas.iter().enumerate() {
                for v in CompiledFormula::new(m, f, &vars, 1)?.table() {
                    norms[k] = S::max_of(norms[k].clone(), v.abs());
                }
            }
        }
        Ok(FormulaBasis { vars, formulas, norms })
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    /// `max |phi_k|` over every tuple of every family member.
    pub fn norms(&self) -> &[S] {
        &self.norms
    }

    /// Positions of `sub`'s formulas in this basis.
    fn positions(&self, sub: &FormulaBasis<S>) -> Result<Vec<usize>, TypeError> {
        sub.formulas
            .iter()
            .map(|f| {
                self.formulas.iter().position(|g| g.alpha_eq(f)).ok_or_else(|| TypeError::NotInBasis(f.to_string()))
            })
            .collect()
    }

    /// The basis formed by the formulas at `indices`, keeping their norms.
    pub fn select(&self, indices: &[usize]) -> FormulaBasis<S> {
        FormulaBasis {
            vars: self.vars.clone(),
            formulas: indices.iter().map(|&i| self.formulas[i].clone()).collect(),
            norms: indices.iter().map(|&i| self.norms[i].clone()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Provenance<S = Rational> {
    /// Realizing `(structure index, tuple)` pairs.
    Realized(Vec<(usize, Vec<usize>)>),
    Combination(Vec<(TypeVector<S>, S)>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeVector<S = Rational> {
    pub values: Vec<S>,
    pub provenance: Provenance<S>,
}

impl<S: Scalar> TypeVector<S> {
    /// `sum w_i p_i`.
    pub fn combine(parts: Vec<(TypeVector<S>, S)>) -> TypeVector<S> {
        let dim = parts.first().map_or(0, |(p, _)| p.values.len());
        let mut values = vec![S::zero(); dim];
        for (p, w) in &parts {
            for (v, x) in values.iter_mut().zip(&p.values) {
                *v = v.clone() + w.clone() * x.clone();
            }
        }
        TypeVector { values, provenance: Provenance::Combination(parts) }
    }
}

fn realized_in<S: Scalar>(
    m: &FiniteStructure<S>,
    index: usize,
    basis: &FormulaBasis<S>,
    out: &mut Vec<TypeVector<S>>,
) -> Result<(), TypeError> {
    let compiled: Vec<CompiledFormula<S>> =
        basis.formulas.iter().map(|f| CompiledFormula::new(m, f, &basis.vars, 1)).collect::<Result<_, _>>()?;
    for t in all_tuples(m.len(), basis.vars.len()) {
        let values: Vec<S> = compiled.iter().map(|c| c.eval(&t)).collect();
        match out.iter_mut().find(|p| p.values == values) {
            Some(TypeVector { provenance: Provenance::Realized(w), .. }) => w.push((index, t)),
            _ => out.push(TypeVector { values, provenance: Provenance::Realized(vec![(index, t)]) }),
        }
    }
    Ok(())
}

/// One vector per distinct type of a tuple of `m`, with every realizing tuple.
pub fn realized_types<S: Scalar>(m: &FiniteStructure<S>, basis: &FormulaBasis<S>) -> Result<Vec<TypeVector<S>>, TypeError> {
    let mut out = Vec::new();
    realized_in(m, 0, basis, &mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypePolytope<S = Rational> {
    pub generators: Vec<TypeVector<S>>,
    /// Indices into `generators`.
    pub vertices: Vec<usize>,
}

impl<S: Scalar> TypePolytope<S> {
    pub fn vertex_vectors(&self) -> Vec<&TypeVector<S>> {
        self.vertices.iter().map(|&i| &self.generators[i]).collect()
    }

    /// Whether `point` lies in the convex hull of the generators.
    pub fn contains(&self, point: &[S]) -> bool {
        let gens: Vec<&[S]> = self.generators.iter().map(|g| g.values.as_slice()).collect();
        in_hull(&gens, point)
    }
}

/// LP feasibility of `point = sum l_i g_i`, `l >= 0`, `sum l = 1`.
pub fn in_hull<S: Scalar>(generators: &[&[S]], point: &[S]) -> bool {
    if generators.is_empty() {
        return false;
    }
    let mut lp = LinearProgram::new(generators.len());
    for k in 0..point.len() {
        lp.add(generators.iter().map(|g| g[k].clone()).collect(), Relation::Eq, point[k].clone());
    }
    lp.add(vec![S::one(); generators.len()], Relation::Eq, S::one());
    matches!(lp.solve(), LpOutcome::Optimal { .. })
}

/// Types realized across the family, and the vertices of their hull.
pub fn type_polytope<S: Scalar>(
    family: &[FiniteStructure<S>],
    basis: &FormulaBasis<S>,
) -> Result<TypePolytope<S>, TypeError> {
    if family.is_empty() {
        return Err(TypeError::EmptyFamily);
    }
    let mut generators = Vec::new();
    for (i, m) in family.iter().enumerate() {
        realized_in(m, i, basis, &mut generators)?;
    }
    Ok(polytope_of(generators))
}

/// Computes the vertices of a generator list. Of repeated vectors only the first can be a vertex.
pub fn polytope_of<S: Scalar>(generators: Vec<TypeVector<S>>) -> TypePolytope<S> {
    let vertices = (0..generators.len())
        .filter(|&i| {
            let v = &generators[i].values;
            if generators[..i].iter().any(|g| &g.values == v) {
                return false;
            }
            let others: Vec<&[S]> =
                generators.iter().filter(|g| &g.values != v).map(|g| g.values.as_slice()).collect();
            !in_hull(&others, v)
        })
        .collect();
    TypePolytope { generators, vertices }
}

/// Coordinate projection onto `sub`, which must consist of formulas of `basis`.
pub fn restrict_type<S: Scalar>(
    p: &TypeVector<S>,
    basis: &FormulaBasis<S>,
    sub: &FormulaBasis<S>,
) -> Result<TypeVector<S>, TypeError> {
    let idx = basis.positions(sub)?;
    project(p, &idx, basis.len())
}

fn project<S: Scalar>(p: &TypeVector<S>, idx: &[usize], dim: usize) -> Result<TypeVector<S>, TypeError> {
    if p.values.len() != dim {
        return Err(TypeError::Dimension { expected: dim, found: p.values.len() });
    }
    let provenance = match &p.provenance {
        Provenance::Realized(w) => Provenance::Realized(w.clone()),
        Provenance::Combination(parts) => Provenance::Combination(
            parts.iter().map(|(q, w)| Ok((project(q, idx, dim)?, w.clone()))).collect::<Result<_, TypeError>>()?,
        ),
    };
    Ok(TypeVector { values: idx.iter().map(|&i| p.values[i].clone()).collect(), provenance })
}

/// `min d(a, b)` over tuples of `m` realizing `p` and `q`, with the sum metric on tuples.
pub fn logic_distance<S: Scalar>(
    p: &[S],
    q: &[S],
    m: &FiniteStructure<S>,
    basis: &FormulaBasis<S>,
) -> Result<S, TypeError> {
    for v in [p, q] {
        if v.len() != basis.len() {
            return Err(TypeError::Dimension { expected: basis.len(), found: v.len() });
        }
    }
    let types = realized_types(m, basis)?;
    let find = |v: &[S], which| {
        types
            .iter()
            .find(|t| t.values == v)
            .map(|t| match &t.provenance {
                Provenance::Realized(w) => w.iter().map(|(_, tup)| tup.clone()).collect::<Vec<_>>(),
                Provenance::Combination(_) => unreachable!(),
            })
            .ok_or(TypeError::NotRealized(which))
    };
    let (ps, qs) = (find(p, "first")?, find(q, "second")?);
    let mut best: Option<S> = None;
    for a in &ps {
        for b in &qs {
            let d = m.tuple_dist_pow(a, b, 1).expect("plain metric");
            best = Some(match best {
                Some(x) => S::min_of(x, d),
                None => d,
            });
        }
    }
    Ok(best.expect("both nonempty"))
}

/// `max_k |p_k - q_k| / |phi_k|` over formulas with nonzero norm.
pub fn norm_distance<S: Scalar>(p: &[S], q: &[S], basis: &FormulaBasis<S>) -> S {
    let mut best = S::zero();
    for k in 0..basis.len() {
        let n = &basis.norms[k];
        if n.is_zero() {
            continue;
        }
        let d = (p[k].clone() - q[k].clone()).abs() / n.clone();
        best = S::max_of(best, d);
    }
    best
}
