//! Typing derivations for surface programs, with constraints left out.
//!
//! `infer` elaborates each top-level binding into a kernel derivation tree
//! (single-parameter lambdas, binary applications, flat cases, variable-only
//! unpacking) annotated with types, instantiations and multiplicities.
//! `usage_check` then computes usage maps bottom-up and enforces linearity.

mod desugar;
mod infer;
mod usage;

use std::collections::BTreeMap;

use serde_json::{json, Value};

use crate::constraint::{Mult, SiteId};
use crate::syntax::Span;
use crate::types::{display_spec, ArgType, CSpec, Scheme, Type};

pub use infer::infer;
pub use usage::usage_check;

/// Where a variable occurrence is bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarSource {
    /// Lambda-, let- or case-bound with a plain type: no evidence.
    Local,
    /// Bound with a scheme (local signature or constrained parameter): takes evidence.
    LocalScheme,
    Global,
    Prelude,
}

/// An implication introduced by the node: its identifier, the rigid
/// variables it brings into scope, and its assumptions with evidence names.
#[derive(Clone, Debug, Default)]
pub struct ImplInfo {
    pub id: String,
    pub skolems: Vec<String>,
    pub assume: CSpec,
    pub givens: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct DAlt {
    /// `()`, `(,)`, `Ur`, `True` or `False`.
    pub con: String,
    pub vars: Vec<String>,
    pub field_mults: Vec<Mult>,
    pub field_tys: Vec<Type>,
    pub body: Deriv,
}

#[derive(Clone, Debug)]
pub enum Node {
    Var { name: String, source: VarSource, inst: Vec<Type>, wanted: CSpec, sites: Vec<SiteId> },
    Con { name: String, inst: Vec<Type> },
    Lit(i64),
    Abs { param: String, mult: Mult, arg: ArgType, body: Box<Deriv> },
    App { fun: Box<Deriv>, arg: Box<Deriv>, mult: Mult, imp: Option<ImplInfo> },
    Pack { body: Box<Deriv>, witnesses: Vec<Type>, payload: CSpec, sites: Vec<SiteId> },
    Unpack { var: String, var_ty: Type, rhs: Box<Deriv>, body: Box<Deriv>, imp: ImplInfo },
    Let { mult: Mult, var: String, rhs: Box<Deriv>, body: Box<Deriv> },
    LetSig { mult: Mult, var: String, rec: bool, scheme: Scheme, rhs: Box<Deriv>, body: Box<Deriv>, imp: ImplInfo },
    Case { mult: Mult, scrut: Box<Deriv>, alts: Vec<DAlt> },
}

/// Values of these types carry no resource: numbers, booleans, and array or
/// reference pointers whose ownership is tracked by constraints. Linear
/// binders of them may be used freely.
pub fn is_free_type(t: &Type) -> bool {
    match t {
        Type::Con(n, a) => (a.is_empty() && (n == "Int" || n == "Bool")) || n == "PArray" || n == "AtomRef",
        _ => false,
    }
}

#[derive(Clone, Debug)]
pub struct Deriv {
    pub node: Node,
    pub ty: Type,
    pub span: Span,
    /// Filled by `usage_check`.
    pub usage: BTreeMap<String, Mult>,
}

/// A checked top-level binding.
#[derive(Clone, Debug)]
pub struct Binding {
    pub name: String,
    pub span: Span,
    /// `None` only for an unsigned `main`.
    pub scheme: Option<Scheme>,
    pub body: Deriv,
    /// The binding's own implication (`Q` of its signature; empty for `main`).
    pub imp: ImplInfo,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unbound {what} `{name}`")]
    UnboundVariable { what: &'static str, name: String, span: Span },
    #[error("type mismatch: expected `{expected}`, found `{actual}`")]
    UnificationFailure { expected: String, actual: String, span: Span },
    #[error("cannot determine {what}")]
    AmbiguousInstantiation { what: String, span: Span },
    #[error("top-level binding `{name}` has no signature")]
    MissingSignature { name: String, span: Span },
}

impl TypeError {
    pub fn class(&self) -> &'static str {
        match self {
            TypeError::UnboundVariable { .. } => "UnboundVariable",
            TypeError::UnificationFailure { .. } => "UnificationFailure",
            TypeError::AmbiguousInstantiation { .. } => "AmbiguousInstantiation",
            TypeError::MissingSignature { .. } => "MissingSignature",
        }
    }

    pub fn span(&self) -> Span {
        match self {
            TypeError::UnboundVariable { span, .. }
            | TypeError::UnificationFailure { span, .. }
            | TypeError::AmbiguousInstantiation { span, .. }
            | TypeError::MissingSignature { span, .. } => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LinearityError {
    #[error("linear variable `{name}` is never used")]
    LinearVariableUnused { name: String, span: Span },
    #[error("linear variable `{name}` is used more than once")]
    LinearVariableOverused { name: String, span: Span },
    #[error("case branches disagree on the use of linear variable `{name}`")]
    BranchUsageMismatch { name: String, span: Span },
}

impl LinearityError {
    pub fn class(&self) -> &'static str {
        match self {
            LinearityError::LinearVariableUnused { .. } => "LinearVariableUnused",
            LinearityError::LinearVariableOverused { .. } => "LinearVariableOverused",
            LinearityError::BranchUsageMismatch { .. } => "BranchUsageMismatch",
        }
    }

    pub fn span(&self) -> Span {
        match self {
            LinearityError::LinearVariableUnused { span, .. }
            | LinearityError::LinearVariableOverused { span, .. }
            | LinearityError::BranchUsageMismatch { span, .. } => *span,
        }
    }
}

impl Deriv {
    pub fn rule(&self) -> &'static str {
        match &self.node {
            Node::Var { .. } => "Var",
            Node::Con { .. } => "Con",
            Node::Lit(_) => "Lit",
            Node::Abs { .. } => "Abs",
            Node::App { .. } => "App",
            Node::Pack { .. } => "Pack",
            Node::Unpack { .. } => "Unpack",
            Node::Let { .. } => "Let",
            Node::LetSig { .. } => "LetSig",
            Node::Case { .. } => "Case",
        }
    }

    pub fn children(&self) -> Vec<&Deriv> {
        match &self.node {
            Node::Var { .. } | Node::Con { .. } | Node::Lit(_) => vec![],
            Node::Abs { body, .. } | Node::Pack { body, .. } => vec![body],
            Node::App { fun, arg, .. } => vec![fun, arg],
            Node::Unpack { rhs, body, .. } | Node::Let { rhs, body, .. } | Node::LetSig { rhs, body, .. } => {
                vec![rhs, body]
            }
            Node::Case { scrut, alts, .. } => {
                let mut v: Vec<&Deriv> = vec![scrut];
                v.extend(alts.iter().map(|a| &a.body));
                v
            }
        }
    }

    /// JSON rendering for `--dump-derivation`.
    pub fn to_json(&self) -> Value {
        let mut o = serde_json::Map::new();
        o.insert("rule".into(), json!(self.rule()));
        o.insert("type".into(), json!(self.ty.to_string()));
        let types = |ts: &[Type]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>();
        match &self.node {
            Node::Var { name, inst, wanted, .. } => {
                o.insert("name".into(), json!(name));
                o.insert("inst".into(), json!(types(inst)));
                o.insert("wanted".into(), json!(display_spec(wanted)));
            }
            Node::Con { name, inst } => {
                o.insert("name".into(), json!(name));
                o.insert("inst".into(), json!(types(inst)));
            }
            Node::Lit(n) => {
                o.insert("value".into(), json!(n));
            }
            Node::Abs { param, mult, .. } => {
                o.insert("param".into(), json!(param));
                o.insert("mult".into(), json!(mult.to_string()));
            }
            Node::App { mult, imp, .. } => {
                o.insert("mult".into(), json!(mult.to_string()));
                if let Some(i) = imp {
                    o.insert("assume".into(), json!(display_spec(&i.assume)));
                }
            }
            Node::Pack { witnesses, payload, .. } => {
                o.insert("witnesses".into(), json!(types(witnesses)));
                o.insert("payload".into(), json!(display_spec(payload)));
            }
            Node::Unpack { var, imp, .. } => {
                o.insert("var".into(), json!(var));
                o.insert("skolems".into(), json!(imp.skolems));
                o.insert("payload".into(), json!(display_spec(&imp.assume)));
            }
            Node::Let { mult, var, .. } => {
                o.insert("var".into(), json!(var));
                o.insert("mult".into(), json!(mult.to_string()));
            }
            Node::LetSig { mult, var, scheme, .. } => {
                o.insert("var".into(), json!(var));
                o.insert("mult".into(), json!(mult.to_string()));
                o.insert("scheme".into(), json!(scheme.to_string()));
            }
            Node::Case { mult, alts, .. } => {
                o.insert("mult".into(), json!(mult.to_string()));
                o.insert("patterns".into(), json!(alts.iter().map(|a| a.con.clone()).collect::<Vec<_>>()));
            }
        }
        let usage: serde_json::Map<String, Value> =
            self.usage.iter().map(|(k, m)| (k.clone(), json!(m.to_string()))).collect();
        o.insert("usage".into(), Value::Object(usage));
        let kids: Vec<Value> = self.children().into_iter().map(|c| c.to_json()).collect();
        if !kids.is_empty() {
            o.insert("children".into(), Value::Array(kids));
        }
        Value::Object(o)
    }
}

impl Binding {
    pub fn to_json(&self) -> Value {
        json!({
            "binding": self.name,
            "scheme": self.scheme.as_ref().map(|s| s.to_string()),
            "derivation": self.body.to_json(),
        })
    }
}

#[cfg(test)]
mod tests;
