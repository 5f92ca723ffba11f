//! Versioned JSON file formats. Numbers are exact rationals written as
//! `"p"` or `"p/q"` strings; points and symbols are referred to by name.

use std::collections::BTreeMap;

use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::proofcheck::{JustificationParseError, ProofNode};
use crate::scalar::{format_rational, parse_rational, Rational};
use crate::structures::{FiniteStructure, StructureError};
use crate::syntax::{parse_condition, parse_conditions, parse_formula, Formula, Signature, SignatureError, SymbolKind, SyntaxError, Theory};
use crate::ultramean::{Charge, ChargeError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("{field}: {msg}")]
    Value { field: String, msg: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Signature(#[from] SignatureError),
    #[error(transparent)]
    Charge(#[from] ChargeError),
    #[error(transparent)]
    Justification(#[from] JustificationParseError),
    #[error("{context}: {source}")]
    Syntax { context: String, source: SyntaxError },
}

fn value_err(field: impl Into<String>, msg: impl Into<String>) -> IoError {
    IoError::Value { field: field.into(), msg: msg.into() }
}

fn number(field: &str, text: &str) -> Result<Rational, IoError> {
    parse_rational(text).map_err(|e| value_err(field, e.to_string()))
}

fn version(v: u32) -> Result<(), IoError> {
    if v == FORMAT_VERSION {
        Ok(())
    } else {
        Err(IoError::Version(v))
    }
}

fn default_power() -> u32 {
    1
}

fn is_default_power(p: &u32) -> bool {
    *p == 1
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FunctionEntry {
    pub arity: usize,
    /// Point names, one per argument tuple in lexicographic order.
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RelationEntry {
    pub arity: usize,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub format_version: u32,
    pub points: Vec<String>,
    pub metric: Vec<Vec<String>>,
    #[serde(default = "default_power", skip_serializing_if = "is_default_power")]
    pub metric_power: u32,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, FunctionEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, RelationEntry>,
    /// Lipschitz constants; symbols not listed get 1.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub lipschitz: BTreeMap<String, String>,
}

/// A structure together with the signature it interprets.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedStructure {
    pub structure: FiniteStructure,
    pub signature: Signature,
}

impl StructureFile {
    pub fn load(self) -> Result<LoadedStructure, IoError> {
        version(self.format_version)?;
        let metric = self
            .metric
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, v)| number(&format!("metric[{i}][{j}]"), v)).collect())
            .collect::<Result<Vec<Vec<Rational>>, IoError>>()?;
        let mut m = FiniteStructure::with_power(self.points.clone(), metric, self.metric_power)?;
        let point = |name: &str| m.point_index(name).ok_or_else(|| StructureError::UnknownPoint(name.to_string()));
        let constants = self.constants.iter().map(|(c, p)| Ok((c.clone(), point(p)?))).collect::<Result<Vec<_>, IoError>>()?;
        let functions = self
            .functions
            .iter()
            .map(|(f, e)| Ok((f.clone(), e.arity, e.values.iter().map(|p| point(p)).collect::<Result<Vec<_>, _>>()?)))
            .collect::<Result<Vec<_>, IoError>>()?;
        let lip = |name: &str| match self.lipschitz.get(name) {
            Some(text) => number(&format!("lipschitz.{name}"), text),
            None => Ok(Rational::one()),
        };
        let mut sig = Signature::new();
        for (c, p) in constants {
            m.set_constant(&c, p)?;
            sig.declare(&c, SymbolKind::Constant, 0, Rational::from_integer(0.into()))?;
        }
        for (f, arity, values) in functions {
            m.set_function(&f, arity, values)?;
            sig.declare(&f, SymbolKind::Function, arity, lip(&f)?)?;
        }
        for (r, e) in &self.relations {
            let values = e.values.iter().enumerate().map(|(i, v)| number(&format!("relations.{r}[{i}]"), v)).collect::<Result<_, _>>()?;
            m.set_relation(r, e.arity, values)?;
            sig.declare(r, SymbolKind::Relation, e.arity, lip(r)?)?;
        }
        for name in self.lipschitz.keys() {
            if sig.get(name).is_none() {
                return Err(value_err(format!("lipschitz.{name}"), "no such function or relation"));
            }
        }
        Ok(LoadedStructure { structure: m, signature: sig })
    }

    /// File form of `m`; Lipschitz constants other than 1 are taken from `sig`.
    pub fn from_structure(m: &FiniteStructure, sig: &Signature) -> Self {
        let n = m.len();
        let name = |i: usize| m.points()[i].clone();
        let metric = (0..n).map(|i| (0..n).map(|j| format_rational(m.metric_entry(i, j))).collect()).collect();
        let lipschitz = sig
            .symbols()
            .iter()
            .filter(|s| s.kind != SymbolKind::Constant && !s.lipschitz.is_one())
            .filter(|s| m.function(&s.name).is_some() || m.relation(&s.name).is_some())
            .map(|s| (s.name.clone(), format_rational(&s.lipschitz)))
            .collect();
        StructureFile {
            format_version: FORMAT_VERSION,
            points: m.points().to_vec(),
            metric,
            metric_power: m.power(),
            constants: m.constants().iter().map(|(c, &p)| (c.clone(), name(p))).collect(),
            functions: m
                .functions()
                .iter()
                .map(|(f, t)| (f.clone(), FunctionEntry { arity: t.arity, values: t.values.iter().map(|&p| name(p)).collect() }))
                .collect(),
            relations: m
                .relations()
                .iter()
                .map(|(r, t)| (r.clone(), RelationEntry { arity: t.arity, values: t.values.iter().map(format_rational).collect() }))
                .collect(),
            lipschitz,
        }
    }
}

pub fn read_structure(text: &str) -> Result<LoadedStructure, IoError> {
    serde_json::from_str::<StructureFile>(text)?.load()
}

pub fn write_structure(m: &FiniteStructure, sig: &Signature) -> String {
    to_pretty(&StructureFile::from_structure(m, sig))
}

fn to_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChargeFile {
    pub format_version: u32,
    /// Index name to weight, in file order.
    pub weights: serde_json::Map<String, serde_json::Value>,
}

pub fn read_charge(text: &str) -> Result<Charge, IoError> {
    let file: ChargeFile = serde_json::from_str(text)?;
    version(file.format_version)?;
    let entries = file
        .weights
        .iter()
        .map(|(k, v)| {
            let field = format!("weights.{k}");
            let text = v.as_str().ok_or_else(|| value_err(&field, "weights are strings \"p/q\""))?;
            Ok((k.clone(), number(&field, text)?))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Charge::new(entries)?)
}

pub fn write_charge(c: &Charge) -> String {
    let weights = c.ids().iter().zip(c.weights()).map(|(k, w)| (k.clone(), serde_json::Value::String(format_rational(w)))).collect();
    to_pretty(&ChargeFile { format_version: FORMAT_VERSION, weights })
}

/// Symbol declarations for files that are read without a structure.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SignatureSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constants: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub functions: BTreeMap<String, SymbolSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub relations: BTreeMap<String, SymbolSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub arity: usize,
    #[serde(default = "one_text")]
    pub lipschitz: String,
}

fn one_text() -> String {
    "1".into()
}

impl SignatureSpec {
    pub fn to_signature(&self) -> Result<Signature, IoError> {
        let mut sig = Signature::new();
        for c in &self.constants {
            sig.declare(c, SymbolKind::Constant, 0, Rational::from_integer(0.into()))?;
        }
        for (kind, table) in [(SymbolKind::Function, &self.functions), (SymbolKind::Relation, &self.relations)] {
            for (name, s) in table {
                sig.declare(name, kind, s.arity, number(&format!("{name}.lipschitz"), &s.lipschitz)?)?;
            }
        }
        Ok(sig)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TheoryFile {
    pub format_version: u32,
    /// Used when no structure supplies the symbols.
    #[serde(default)]
    pub signature: Option<SignatureSpec>,
    /// Conditions; `a = b` stands for both inequalities.
    pub conditions: Vec<String>,
}

impl TheoryFile {
    pub fn parse(text: &str) -> Result<Self, IoError> {
        let file: TheoryFile = serde_json::from_str(text)?;
        version(file.format_version)?;
        Ok(file)
    }

    pub fn signature(&self) -> Result<Option<Signature>, IoError> {
        self.signature.as_ref().map(SignatureSpec::to_signature).transpose()
    }

    pub fn theory(&self, sig: &Signature) -> Result<Theory, IoError> {
        let mut out = Vec::new();
        for (i, c) in self.conditions.iter().enumerate() {
            let parsed = parse_conditions(c, sig).map_err(|source| IoError::Syntax { context: format!("conditions[{i}]"), source })?;
            out.extend(parsed);
        }
        Ok(Theory::new(out))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BasisFile {
    pub format_version: u32,
    /// Free variables of the type, in order.
    pub vars: Vec<String>,
    pub formulas: Vec<String>,
}

pub fn read_basis(text: &str, sig: &Signature) -> Result<(Vec<String>, Vec<Formula>), IoError> {
    let file: BasisFile = serde_json::from_str(text)?;
    version(file.format_version)?;
    let formulas = file
        .formulas
        .iter()
        .enumerate()
        .map(|(i, f)| parse_formula(f, sig).map_err(|source| IoError::Syntax { context: format!("formulas[{i}]"), source }))
        .collect::<Result<_, _>>()?;
    Ok((file.vars, formulas))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProofNodeFile {
    pub concl: String,
    pub by: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<ProofNodeFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inst: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProofFile {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature: Option<SignatureSpec>,
    pub proof: ProofNodeFile,
}

impl ProofNodeFile {
    pub fn to_node(&self, sig: &Signature, path: &mut Vec<usize>) -> Result<ProofNode, IoError> {
        let conclusion = parse_condition(&self.concl, sig)
            .map_err(|source| IoError::Syntax { context: format!("node {path:?}"), source })?;
        let mut premises = Vec::new();
        for (i, p) in self.premises.iter().enumerate() {
            path.push(i);
            premises.push(p.to_node(sig, path)?);
            path.pop();
        }
        Ok(ProofNode { conclusion, by: self.by.parse()?, premises, inst: self.inst.clone() })
    }

    pub fn from_node(n: &ProofNode) -> Self {
        ProofNodeFile {
            concl: n.conclusion.to_string(),
            by: n.by.to_string(),
            premises: n.premises.iter().map(ProofNodeFile::from_node).collect(),
            inst: n.inst.clone(),
        }
    }
}

/// The proof and the signature declared in the file (empty if absent).
pub fn read_proof(text: &str) -> Result<(ProofNode, Signature), IoError> {
    let file: ProofFile = serde_json::from_str(text)?;
    version(file.format_version)?;
    let sig = file.signature.unwrap_or_default().to_signature()?;
    let node = file.proof.to_node(&sig, &mut Vec::new())?;
    Ok((node, sig))
}

pub fn write_proof(n: &ProofNode, signature: Option<SignatureSpec>) -> String {
    to_pretty(&ProofFile { format_version: FORMAT_VERSION, signature, proof: ProofNodeFile::from_node(n) })
}
