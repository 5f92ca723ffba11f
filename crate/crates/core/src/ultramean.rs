//! Ultrameans and powermeans of finite structures under finitely supported charges.

use std::collections::BTreeMap;

use crate::scalar::{Rational, Scalar};
use crate::structures::{eval, Assignment, EvalError, FiniteStructure, FunctionTable, RelationTable, StructureError};
use crate::syntax::Formula;

/// Default bound on the number of points a mean may have.
pub const DEFAULT_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChargeError {
    #[error("a charge needs at least one index")]
    Empty,
    #[error("index `{0}` listed twice")]
    DuplicateIndex(String),
    #[error("weight of `{0}` is negative")]
    NegativeWeight(String),
    #[error("weights sum to {0}, expected 1")]
    BadTotal(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeanError {
    #[error("family has {family} structures but the charge has {charge} indices")]
    IndexMismatch { family: usize, charge: usize },
    #[error("mean would have {size} points, above the cap of {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error(transparent)]
    Signature(#[from] StructureError),
    #[error("structure {index} stores d^{stored}, incompatible with p = {requested}")]
    Power { index: usize, stored: u32, requested: u32 },
}

/// A probability charge with finite index set.
#[derive(Clone, Debug, PartialEq)]
pub struct Charge<S = Rational> {
    index: Vec<String>,
    weights: Vec<S>,
}

impl<S: Scalar> Charge<S> {
    pub fn new(entries: Vec<(String, S)>) -> Result<Self, ChargeError> {
        if entries.is_empty() {
            return Err(ChargeError::Empty);
        }
        let mut total = S::zero();
        for (i, (id, w)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(other, _)| other == id) {
                return Err(ChargeError::DuplicateIndex(id.clone()));
            }
            if w.is_negative() {
                return Err(ChargeError::NegativeWeight(id.clone()));
            }
            total = total + w.clone();
        }
        if !total.eq_tol(&S::one()) {
            return Err(ChargeError::BadTotal(total.to_string()));
        }
        let (index, weights) = entries.into_iter().unzip();
        Ok(Charge { index, weights })
    }

    /// Weights on indices `0..weights.len()`.
    pub fn from_weights(weights: Vec<S>) -> Result<Self, ChargeError> {
        Self::new(weights.into_iter().enumerate().map(|(i, w)| (i.to_string(), w)).collect())
    }

    pub fn point_mass(n: usize, at: usize) -> Self {
        assert!(at < n);
        let weights = (0..n).map(|i| if i == at { S::one() } else { S::zero() }).collect();
        Self::from_weights(weights).expect("valid")
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        let w = S::one() / S::from_usize(n);
        Self::from_weights(vec![w; n]).expect("valid")
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.index
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, id: &str) -> Option<&S> {
        self.index.iter().position(|i| i == id).map(|k| &self.weights[k])
    }

    /// Positions with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i].is_positive()).collect()
    }

    /// `sum_i w_i x_i`.
    pub fn integrate(&self, values: &[S]) -> S {
        assert_eq!(values.len(), self.len());
        self.weights.iter().zip(values).fold(S::zero(), |acc, (w, v)| acc + w.clone() * v.clone())
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Charge<T> {
        Charge { index: self.index.clone(), weights: self.weights.iter().map(f).collect() }
    }
}

/// Product charge on pairs, ids `(i,j)` in lexicographic order.
pub fn fubini<S: Scalar>(mu: &Charge<S>, nu: &Charge<S>) -> Charge<S> {
    let mut index = Vec::with_capacity(mu.len() * nu.len());
    let mut weights = Vec::with_capacity(mu.len() * nu.len());
    for (i, wi) in mu.index.iter().zip(&mu.weights) {
        for (j, wj) in nu.index.iter().zip(&nu.weights) {
            index.push(format!("({i},{j})"));
            weights.push(wi.clone() * wj.clone());
        }
    }
    Charge { index, weights }
}

/// The mean structure together with the map from choice functions to its points.
#[derive(Clone, Debug)]
pub struct MeanStructure<S = Rational> {
    pub structure: FiniteStructure<S>,
    pub charge: Charge<S>,
    /// Charge positions with positive weight; only these coordinates matter.
    support: Vec<usize>,
    /// Per support coordinate: original point to class.
    component_class: Vec<Vec<usize>>,
    /// Per support coordinate: number of classes.
    component_size: Vec<usize>,
}

impl<S: Scalar> MeanStructure<S> {
    /// The point `[a]` of a full choice tuple (one point per charge index).
    pub fn class_of(&self, tuple: &[usize]) -> usize {
        assert_eq!(tuple.len(), self.charge.len(), "one coordinate per index");
        self.support
            .iter()
            .enumerate()
            .fold(0, |acc, (k, &i)| acc * self.component_size[k] + self.component_class[k][tuple[i]])
    }

    /// Image of the diagonal embedding of a powermean.
    pub fn diagonal(&self, a: usize) -> usize {
        self.class_of(&vec![a; self.charge.len()])
    }
}

/// Zero-distance classes of one structure: class of every point and the representatives.
fn zero_classes<S: Scalar>(m: &FiniteStructure<S>) -> (Vec<usize>, Vec<usize>) {
    let n = m.len();
    let mut class = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for a in 0..n {
        if class[a] == usize::MAX {
            for b in a..n {
                if class[b] == usize::MAX && m.metric_entry(a, b).is_zero() {
                    class[b] = reps.len();
                }
            }
            reps.push(a);
        }
    }
    (class, reps)
}

/// `prod_mu M_i` with `d([a],[b]) = (sum_i w_i d_i(a_i,b_i)^p)^(1/p)`, stored as a p-th power.
pub fn ultramean<S: Scalar>(family: &[FiniteStructure<S>], mu: &Charge<S>, p: u32) -> Result<MeanStructure<S>, MeanError> {
    ultramean_with_cap(family, mu, p, DEFAULT_CAP)
}

pub fn ultramean_with_cap<S: Scalar>(
    family: &[FiniteStructure<S>],
    mu: &Charge<S>,
    p: u32,
    cap: usize,
) -> Result<MeanStructure<S>, MeanError> {
    if family.len() != mu.len() {
        return Err(MeanError::IndexMismatch { family: family.len(), charge: mu.len() });
    }
    for (i, m) in family.iter().enumerate() {
        m.same_symbols(&family[0])?;
        if m.power() != 1 && m.power() != p {
            return Err(MeanError::Power { index: i, stored: m.power(), requested: p });
        }
    }
    let support = mu.support();
    let comps: Vec<&FiniteStructure<S>> = support.iter().map(|&i| &family[i]).collect();
    let weights: Vec<S> = support.iter().map(|&i| mu.weights[i].clone()).collect();
    let (component_class, reps): (Vec<Vec<usize>>, Vec<Vec<usize>>) = comps.iter().map(|m| zero_classes(m)).unzip();
    let component_size: Vec<usize> = reps.iter().map(Vec::len).collect();
    let size = component_size
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k).filter(|&s| s <= cap))
        .ok_or(MeanError::CapExceeded {
            size: component_size.iter().fold(1usize, |a, &k| a.saturating_mul(k)),
            cap,
        })?;

    // Representative choice tuples (in original point indices), lexicographic.
    let tuples: Vec<Vec<usize>> = (0..size)
        .map(|mut idx| {
            let mut t = vec![0; comps.len()];
            for k in (0..comps.len()).rev() {
                t[k] = reps[k][idx % component_size[k]];
                idx /= component_size[k];
            }
            t
        })
        .collect();
    let class_index = |t: &[usize]| -> usize {
        t.iter().enumerate().fold(0, |acc, (k, &a)| acc * component_size[k] + component_class[k][a])
    };

    let points = tuples
        .iter()
        .map(|t| {
            let names: Vec<&str> = t.iter().enumerate().map(|(k, &a)| comps[k].points()[a].as_str()).collect();
            format!("({})", names.join(","))
        })
        .collect();
    let mut metric = Vec::with_capacity(size * size);
    for a in &tuples {
        for b in &tuples {
            let mut total = S::zero();
            for k in 0..comps.len() {
                let d = comps[k].dist_pow(a[k], b[k], p).expect("power checked");
                total = total + weights[k].clone() * d;
            }
            metric.push(total);
        }
    }

    let template = &family[0];
    let constants: BTreeMap<String, usize> = template
        .constants()
        .keys()
        .map(|c| {
            let t: Vec<usize> = comps.iter().map(|m| m.constant(c).expect("same symbols")).collect();
            (c.clone(), class_index(&t))
        })
        .collect();

    let functions = template
        .functions()
        .iter()
        .map(|(name, t)| {
            let values = product_tuples(size, t.arity)
                .map(|args| {
                    let image: Vec<usize> = (0..comps.len())
                        .map(|k| {
                            let coords: Vec<usize> = args.iter().map(|&a| tuples[a][k]).collect();
                            comps[k].apply_function(name, &coords).expect("same symbols")
                        })
                        .collect();
                    class_index(&image)
                })
                .collect();
            (name.clone(), FunctionTable { arity: t.arity, values })
        })
        .collect();

    let relations = template
        .relations()
        .iter()
        .map(|(name, t)| {
            let values = product_tuples(size, t.arity)
                .map(|args| {
                    (0..comps.len()).fold(S::zero(), |acc, k| {
                        let coords: Vec<usize> = args.iter().map(|&a| tuples[a][k]).collect();
                        acc + weights[k].clone() * comps[k].relation_value(name, &coords).expect("same symbols").clone()
                    })
                })
                .collect();
            (name.clone(), RelationTable { arity: t.arity, values })
        })
        .collect();

    let structure = FiniteStructure::from_parts(points, metric, p, constants, functions, relations);
    Ok(MeanStructure { structure, charge: mu.clone(), support, component_class, component_size })
}

fn product_tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    crate::structures::all_tuples(n, k)
}

/// `M^mu`, the ultramean of the constant family.
pub fn powermean<S: Scalar>(m: &FiniteStructure<S>, mu: &Charge<S>, p: u32) -> Result<MeanStructure<S>, MeanError> {
    let family = vec![m.clone(); mu.len()];
    ultramean(&family, mu, p)
}

/// Outcome of comparing `phi^{prod M_i}([a])` with `sum_i w_i phi^{M_i}(a_i)`.
#[derive(Clone, Debug)]
pub struct IdentityCheck<S = Rational> {
    pub cases: usize,
    /// First disagreement: choice tuple per free variable, mean value, weighted value.
    pub mismatch: Option<(BTreeMap<String, Vec<usize>>, S, S)>,
}

impl<S> IdentityCheck<S> {
    pub fn holds(&self) -> bool {
        self.mismatch.is_none()
    }
}

/// Checks the ultramean identity for `f` at every assignment of support choice tuples.
/// Coordinates outside the support are fixed to point 0.
pub fn check_identity<S: Scalar>(
    family: &[FiniteStructure<S>],
    mean: &MeanStructure<S>,
    f: &Formula,
    p: u32,
) -> Result<IdentityCheck<S>, EvalError> {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    let support = &mean.support;
    let sizes: Vec<usize> = support.iter().map(|&i| family[i].len()).collect();
    let per_var: usize = sizes.iter().product();
    let total = per_var.pow(vars.len() as u32);
    let weights = mean.charge.weights();
    let mut cases = 0;
    for code in 0..total {
        let mut rest = code;
        let mut tuples: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for v in &vars {
            let mut local = rest % per_var;
            rest /= per_var;
            let mut t = vec![0; mean.charge.len()];
            for (k, &i) in support.iter().enumerate().rev() {
                t[i] = local % sizes[k];
                local /= sizes[k];
            }
            tuples.insert(v.clone(), t);
        }
        let asg: Assignment = tuples.iter().map(|(v, t)| (v.clone(), mean.class_of(t))).collect();
        let lhs = eval(&mean.structure, f, &asg, p)?;
        let mut rhs = S::zero();
        for &i in support {
            let asg_i: Assignment = tuples.iter().map(|(v, t)| (v.clone(), t[i])).collect();
            rhs = rhs + weights[i].clone() * eval(&family[i], f, &asg_i, p)?;
        }
        cases += 1;
        if !lhs.eq_tol(&rhs) {
            return Ok(IdentityCheck { cases, mismatch: Some((tuples, lhs, rhs)) });
        }
    }
    Ok(IdentityCheck { cases, mismatch: None })
}
