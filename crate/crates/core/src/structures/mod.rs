//! Finite metric structures and exact evaluation of formulas over them.

mod eval;
pub mod generators;
mod quotient;
mod rendezvous;
mod validate;

use std::collections::BTreeMap;


use crate::scalar::{Rational, Scalar};
use crate::syntax::SymbolKind;

pub use eval::{
    check_condition, check_condition_universal, eval, eval_sentence, parse_exponent, CompiledFormula,
    ConditionCheck, EvalError, UniversalCheck,
};
pub use quotient::{quotient, Quotient};
pub use rendezvous::{rendezvous_sentences, rendezvous_value};
pub use validate::{validate, ValidationReport, Violation};

/// Variable name to point index.
pub type Assignment = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("a structure needs at least one point")]
    Empty,
    #[error("point `{0}` listed twice")]
    DuplicatePoint(String),
    #[error("unknown point `{0}`")]
    UnknownPoint(String),
    #[error("metric must be {expected}x{expected}, found {found}")]
    MetricShape { expected: usize, found: String },
    #[error("table for `{symbol}` needs {expected} entries, found {found}")]
    TableSize { symbol: String, expected: usize, found: usize },
    #[error("function `{symbol}` maps to point index {index}, outside the universe")]
    FunctionOutOfRange { symbol: String, index: usize },
    #[error("no interpretation for {kind} symbol `{symbol}`")]
    MissingInterpretation { symbol: String, kind: SymbolKind },
    #[error("`{symbol}` has arity {found} in the structure but {expected} in the signature")]
    ArityMismatch { symbol: String, expected: usize, found: usize },
    #[error("structures disagree on symbol `{0}`")]
    SignatureMismatch(String),
    #[error("metric power must be a positive integer")]
    BadPower,
}

/// Full table of an `arity`-ary function, indexed by tuples in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    pub arity: usize,
    pub values: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RelationTable<S> {
    pub arity: usize,
    pub values: Vec<S>,
}

/// Index of `tuple` among all `n^k` tuples in lexicographic order.
pub fn tuple_index(n: usize, tuple: &[usize]) -> usize {
    tuple.iter().fold(0, |acc, &a| acc * n + a)
}

/// Inverse of [`tuple_index`].
pub fn tuple_at(n: usize, k: usize, mut idx: usize) -> Vec<usize> {
    let mut out = vec![0; k];
    for slot in out.iter_mut().rev() {
        *slot = idx % n;
        idx /= n;
    }
    out
}

/// Iterates all `n^k` tuples in lexicographic order.
pub fn all_tuples(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.checked_pow(k as u32).expect("tuple space overflow");
    (0..total).map(move |i| tuple_at(n, k, i))
}

/// A finite metric structure. The metric matrix stores `d^power`; ordinary
/// structures have `power == 1`, L^p means keep the exact p-th power.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteStructure<S = Rational> {
    points: Vec<String>,
    metric: Vec<S>,
    power: u32,
    constants: BTreeMap<String, usize>,
    functions: BTreeMap<String, FunctionTable>,
    relations: BTreeMap<String, RelationTable<S>>,
}

impl<S: Scalar> FiniteStructure<S> {
    /// Builds a structure from point names and a full metric matrix.
    pub fn new(points: Vec<String>, metric: Vec<Vec<S>>) -> Result<Self, StructureError> {
        Self::with_power(points, metric, 1)
    }

    pub fn with_power(points: Vec<String>, metric: Vec<Vec<S>>, power: u32) -> Result<Self, StructureError> {
        if power == 0 {
            return Err(StructureError::BadPower);
        }
        let n = points.len();
        if n == 0 {
            return Err(StructureError::Empty);
        }
        for (i, p) in points.iter().enumerate() {
            if points[..i].contains(p) {
                return Err(StructureError::DuplicatePoint(p.clone()));
            }
        }
        if metric.len() != n || metric.iter().any(|r| r.len() != n) {
            let found = format!("{}x{}", metric.len(), metric.first().map_or(0, Vec::len));
            return Err(StructureError::MetricShape { expected: n, found });
        }
        Ok(FiniteStructure {
            points,
            metric: metric.into_iter().flatten().collect(),
            power,
            constants: BTreeMap::new(),
            functions: BTreeMap::new(),
            relations: BTreeMap::new(),
        })
    }

    /// Points named `0..n` with a metric given by `dist(i, j)`.
    pub fn from_fn(n: usize, dist: impl Fn(usize, usize) -> S) -> Result<Self, StructureError> {
        let points = (0..n).map(|i| i.to_string()).collect();
        let metric = (0..n).map(|i| (0..n).map(|j| dist(i, j)).collect()).collect();
        Self::new(points, metric)
    }

    pub fn set_constant(&mut self, name: &str, point: usize) -> Result<(), StructureError> {
        if point >= self.len() {
            return Err(StructureError::FunctionOutOfRange { symbol: name.to_string(), index: point });
        }
        self.constants.insert(name.to_string(), point);
        Ok(())
    }

    pub fn set_function(&mut self, name: &str, arity: usize, values: Vec<usize>) -> Result<(), StructureError> {
        let expected = self.len().pow(arity as u32);
        if values.len() != expected {
            return Err(StructureError::TableSize { symbol: name.to_string(), expected, found: values.len() });
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= self.len()) {
            return Err(StructureError::FunctionOutOfRange { symbol: name.to_string(), index: bad });
        }
        self.functions.insert(name.to_string(), FunctionTable { arity, values });
        Ok(())
    }

    pub fn set_relation(&mut self, name: &str, arity: usize, values: Vec<S>) -> Result<(), StructureError> {
        let expected = self.len().pow(arity as u32);
        if values.len() != expected {
            return Err(StructureError::TableSize { symbol: name.to_string(), expected, found: values.len() });
        }
        self.relations.insert(name.to_string(), RelationTable { arity, values });
        Ok(())
    }

    pub fn with_constant(mut self, name: &str, point: usize) -> Result<Self, StructureError> {
        self.set_constant(name, point)?;
        Ok(self)
    }

    pub fn with_function(mut self, name: &str, arity: usize, values: Vec<usize>) -> Result<Self, StructureError> {
        self.set_function(name, arity, values)?;
        Ok(self)
    }

    pub fn with_relation(mut self, name: &str, arity: usize, values: Vec<S>) -> Result<Self, StructureError> {
        self.set_relation(name, arity, values)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn point_index(&self, name: &str) -> Option<usize> {
        self.points.iter().position(|p| p == name)
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Stored metric entry, i.e. `d(a,b)^power`.
    pub fn metric_entry(&self, a: usize, b: usize) -> &S {
        &self.metric[a * self.len() + b]
    }

    /// `d(a,b)^p`, or `None` when it is not exactly computable from storage.
    pub fn dist_pow(&self, a: usize, b: usize, p: u32) -> Option<S> {
        let stored = self.metric_entry(a, b);
        if self.power == p {
            Some(stored.clone())
        } else if self.power == 1 {
            Some(stored.pow(p))
        } else {
            None
        }
    }

    /// The metric itself; only available for `power == 1`.
    pub fn dist(&self, a: usize, b: usize) -> &S {
        assert_eq!(self.power, 1, "metric stored as a p-th power");
        self.metric_entry(a, b)
    }

    pub fn constants(&self) -> &BTreeMap<String, usize> {
        &self.constants
    }

    pub fn functions(&self) -> &BTreeMap<String, FunctionTable> {
        &self.functions
    }

    pub fn relations(&self) -> &BTreeMap<String, RelationTable<S>> {
        &self.relations
    }

    pub fn constant(&self, name: &str) -> Option<usize> {
        self.constants.get(name).copied()
    }

    pub fn function(&self, name: &str) -> Option<&FunctionTable> {
        self.functions.get(name)
    }

    pub fn relation(&self, name: &str) -> Option<&RelationTable<S>> {
        self.relations.get(name)
    }

    pub fn apply_function(&self, name: &str, args: &[usize]) -> Option<usize> {
        let table = self.functions.get(name)?;
        Some(table.values[tuple_index(self.len(), args)])
    }

    pub fn relation_value(&self, name: &str, args: &[usize]) -> Option<&S> {
        let table = self.relations.get(name)?;
        Some(&table.values[tuple_index(self.len(), args)])
    }

    /// Tuple distance `sum_i d(a_i, b_i)^p`; for `p == 1` this is the sum metric.
    pub fn tuple_dist_pow(&self, a: &[usize], b: &[usize], p: u32) -> Option<S> {
        let mut total = S::zero();
        for (&x, &y) in a.iter().zip(b) {
            total = total + self.dist_pow(x, y, p)?;
        }
        Some(total)
    }

    /// Maximum stored metric entry.
    pub fn diameter_pow(&self) -> S {
        self.metric.iter().cloned().fold(S::zero(), S::max_of)
    }

    /// Converts every number with `f`, e.g. rationals to floats.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FiniteStructure<T> {
        FiniteStructure {
            points: self.points.clone(),
            metric: self.metric.iter().map(&f).collect(),
            power: self.power,
            constants: self.constants.clone(),
            functions: self.functions.clone(),
            relations: self
                .relations
                .iter()
                .map(|(k, t)| (k.clone(), RelationTable { arity: t.arity, values: t.values.iter().map(&f).collect() }))
                .collect(),
        }
    }

    fn symbol_shape(&self) -> BTreeMap<String, (SymbolKind, usize)> {
        let mut shape = BTreeMap::new();
        for name in self.constants.keys() {
            shape.insert(name.clone(), (SymbolKind::Constant, 0));
        }
        for (name, t) in &self.functions {
            shape.insert(name.clone(), (SymbolKind::Function, t.arity));
        }
        for (name, t) in &self.relations {
            shape.insert(name.clone(), (SymbolKind::Relation, t.arity));
        }
        shape
    }

    /// Checks that two structures interpret the same symbols with the same arities.
    pub fn same_symbols(&self, other: &Self) -> Result<(), StructureError> {
        let (a, b) = (self.symbol_shape(), other.symbol_shape());
        if a == b {
            return Ok(());
        }
        let culprit = a
            .iter()
            .find(|(k, v)| b.get(*k) != Some(v))
            .map(|(k, _)| k.clone())
            .or_else(|| b.keys().find(|k| !a.contains_key(*k)).cloned())
            .unwrap_or_default();
        Err(StructureError::SignatureMismatch(culprit))
    }

    pub(crate) fn raw_parts(
        &self,
    ) -> (&[String], &[S], u32, &BTreeMap<String, usize>, &BTreeMap<String, FunctionTable>, &BTreeMap<String, RelationTable<S>>)
    {
        (&self.points, &self.metric, self.power, &self.constants, &self.functions, &self.relations)
    }

    pub(crate) fn from_parts(
        points: Vec<String>,
        metric: Vec<S>,
        power: u32,
        constants: BTreeMap<String, usize>,
        functions: BTreeMap<String, FunctionTable>,
        relations: BTreeMap<String, RelationTable<S>>,
    ) -> Self {
        debug_assert_eq!(metric.len(), points.len() * points.len());
        FiniteStructure { points, metric, power, constants, functions, relations }
    }

    /// True if some pair of distinct points is at distance zero.
    pub fn has_zero_distances(&self) -> bool {
        let n = self.len();
        (0..n).any(|a| (0..n).any(|b| a != b && self.metric_entry(a, b).is_zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn tuple_indexing_roundtrip() {
        for idx in 0..27 {
            let t = tuple_at(3, 3, idx);
            assert_eq!(tuple_index(3, &t), idx);
        }
        assert_eq!(all_tuples(2, 2).collect::<Vec<_>>(), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(all_tuples(3, 0).count(), 1);
    }

    #[test]
    fn rejects_malformed_input() {
        let pts = vec!["a".to_string(), "a".to_string()];
        assert!(matches!(
            FiniteStructure::<Rational>::new(pts, vec![vec![int(0); 2]; 2]),
            Err(StructureError::DuplicatePoint(_))
        ));
        assert!(matches!(
            FiniteStructure::<Rational>::new(vec!["a".into()], vec![vec![int(0); 2]]),
            Err(StructureError::MetricShape { .. })
        ));
        let m = FiniteStructure::from_fn(2, |i, j| if i == j { int(0) } else { rat(1, 2) }).unwrap();
        assert!(matches!(m.clone().with_function("F", 1, vec![0]), Err(StructureError::TableSize { .. })));
        assert!(matches!(m.with_function("F", 1, vec![0, 2]), Err(StructureError::FunctionOutOfRange { .. })));
    }
}
