use std::fmt;

use crate::constraint::Mult;
use crate::types::{Scheme, Type};

/// Source position (1-based). Positions never take part in structural equality.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Eq for Span {}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Var(String),
    /// Data constructor other than tuples and unit: `Ur`, `True`, `False`.
    Con(String),
    Int(i64),
    Unit,
    Tuple(Box<Expr>, Box<Expr>),
    Lam(Vec<String>, Box<Expr>),
    App(Box<Expr>, Box<Expr>),
    BinOp(String, Box<Expr>, Box<Expr>),
    Pack(Box<Expr>),
    LetPack(PackPat, Box<Expr>, Box<Expr>),
    Let { mult: Mult, name: String, sig: Option<Scheme>, rhs: Box<Expr>, body: Box<Expr> },
    /// `let () = e1 in e2`
    LetUnit { mult: Mult, rhs: Box<Expr>, body: Box<Expr> },
    Case { mult: Mult, scrut: Box<Expr>, alts: Vec<Alt> },
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Annot(Box<Expr>, Type),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Alt {
    pub pat: Pat,
    pub body: Expr,
}

/// Flat case patterns. Variables may be `_`.
#[derive(Clone, Debug, PartialEq)]
pub enum Pat {
    Con(String, Vec<String>),
    Tuple(String, String),
    Unit,
}

/// Patterns accepted under `let pack`: at most a constructor over a tuple of variables.
#[derive(Clone, Debug, PartialEq)]
pub enum PackPat {
    Var(String),
    Unit,
    Tuple(String, String),
    Ur(Box<PackPat>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    Sig { name: String, scheme: Scheme, span: Span },
    Bind { name: String, params: Vec<String>, body: Expr, span: Span },
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Program {
    pub decls: Vec<Decl>,
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Expr {
        Expr { kind, span }
    }
}
