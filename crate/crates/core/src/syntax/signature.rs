use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::scalar::Rational;

/// Names that cannot be declared as symbols.
pub const RESERVED: &[&str] = &["d", "sup", "inf", "min", "max"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Constant,
    Function,
    Relation,
}

impl std::fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SymbolKind::Constant => "constant",
            SymbolKind::Function => "function",
            SymbolKind::Relation => "relation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub arity: usize,
    pub lipschitz: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("symbol `{0}` declared twice")]
    Duplicate(String),
    #[error("`{0}` is reserved")]
    Reserved(String),
    #[error("`{name}`: {kind} symbols cannot have arity {arity}")]
    BadArity { name: String, kind: SymbolKind, arity: usize },
    #[error("`{0}`: Lipschitz constant must be nonnegative")]
    NegativeLipschitz(String),
    #[error("`{0}` is not a valid identifier")]
    BadName(String),
}

/// A Lipschitz signature. The metric symbol `d` (binary, Lipschitz 1) is
/// implicit and never stored among `symbols`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: Vec<Symbol>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(
        &mut self,
        name: &str,
        kind: SymbolKind,
        arity: usize,
        lipschitz: Rational,
    ) -> Result<(), SignatureError> {
        if RESERVED.contains(&name) {
            return Err(SignatureError::Reserved(name.to_string()));
        }
        if !is_identifier(name) {
            return Err(SignatureError::BadName(name.to_string()));
        }
        if self.get(name).is_some() {
            return Err(SignatureError::Duplicate(name.to_string()));
        }
        let arity_ok = match kind {
            SymbolKind::Constant => arity == 0,
            SymbolKind::Function | SymbolKind::Relation => arity >= 1,
        };
        if !arity_ok {
            return Err(SignatureError::BadArity { name: name.to_string(), kind, arity });
        }
        if lipschitz.is_negative() {
            return Err(SignatureError::NegativeLipschitz(name.to_string()));
        }
        self.symbols.push(Symbol { name: name.to_string(), kind, arity, lipschitz });
        Ok(())
    }

    pub fn with_constant(mut self, name: &str) -> Result<Self, SignatureError> {
        self.declare(name, SymbolKind::Constant, 0, Rational::from_integer(0.into()))?;
        Ok(self)
    }

    pub fn with_function(
        mut self,
        name: &str,
        arity: usize,
        lipschitz: Rational,
    ) -> Result<Self, SignatureError> {
        self.declare(name, SymbolKind::Function, arity, lipschitz)?;
        Ok(self)
    }

    pub fn with_relation(
        mut self,
        name: &str,
        arity: usize,
        lipschitz: Rational,
    ) -> Result<Self, SignatureError> {
        self.declare(name, SymbolKind::Relation, arity, lipschitz)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<&Symbol> {
        self.symbols.iter().find(|s| s.name == name)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn of_kind(&self, kind: SymbolKind) -> impl Iterator<Item = &Symbol> {
        self.symbols.iter().filter(move |s| s.kind == kind)
    }

    /// Lipschitz constant of a relation symbol, `d` included.
    pub fn relation_lipschitz(&self, name: &str) -> Option<Rational> {
        if name == "d" {
            return Some(Rational::one());
        }
        self.get(name)
            .filter(|s| s.kind == SymbolKind::Relation)
            .map(|s| s.lipschitz.clone())
    }

    /// The signature of probability algebras: `mu`, the Boolean operations
    /// `and`, `or`, `not`, `sym` and the constants `zero`, `one`, all 1-Lipschitz.
    pub fn probability_algebra() -> Self {
        let one = Rational::one();
        Signature::new()
            .with_constant("zero")
            .and_then(|s| s.with_constant("one"))
            .and_then(|s| s.with_function("and", 2, one.clone()))
            .and_then(|s| s.with_function("or", 2, one.clone()))
            .and_then(|s| s.with_function("not", 1, one.clone()))
            .and_then(|s| s.with_function("sym", 2, one.clone()))
            .and_then(|s| s.with_relation("mu", 1, one))
            .expect("static signature is well formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    #[test]
    fn rejects_bad_declarations() {
        let sig = Signature::new().with_function("F", 1, int(2)).unwrap();
        assert_eq!(
            sig.clone().with_relation("F", 1, int(1)),
            Err(SignatureError::Duplicate("F".into()))
        );
        assert_eq!(sig.clone().with_relation("d", 2, int(1)), Err(SignatureError::Reserved("d".into())));
        assert!(matches!(
            sig.clone().with_function("G", 0, int(1)),
            Err(SignatureError::BadArity { .. })
        ));
        assert!(matches!(sig.with_relation("R", 1, int(-1)), Err(SignatureError::NegativeLipschitz(_))));
    }

    #[test]
    fn metric_is_implicit() {
        let sig = Signature::new();
        assert_eq!(sig.relation_lipschitz("d"), Some(int(1)));
        assert!(sig.get("d").is_none());
    }
}
