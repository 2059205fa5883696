//! The explicit core language: evidence is an ordinary value, schemes are
//! unqualified, and every binder carries a multiplicity.

pub mod builtins;
pub mod eval;
pub mod lint;
pub mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::constraint::{Atom, Mult};

pub use eval::{eval_main, RunConfig, RunResult, RuntimeError, Value};
pub use lint::{lint_program, LintError};
pub use parse::parse_core;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CType {
    Var(String),
    /// `Int`, `Bool`, `()`, `(,)`, `Ur`, `PArray`, `AtomRef`.
    Con(String, Vec<CType>),
    /// Application with a variable head, normalised away on substitution.
    App(Box<CType>, Vec<CType>),
    Arrow(Box<CType>, Mult, Box<CType>),
    /// Only in argument position of an arrow.
    Forall(Vec<String>, Box<CType>),
    /// `exists as. value ⊗ evidence`
    Exists(Vec<String>, Box<CType>, Box<CType>),
    /// Evidence for one atom.
    Token(String, Vec<CType>),
}

pub fn c_unit() -> CType {
    CType::Con("()".into(), vec![])
}

pub fn c_pair(a: CType, b: CType) -> CType {
    CType::Con("(,)".into(), vec![a, b])
}

pub fn c_ur(a: CType) -> CType {
    CType::Con("Ur".into(), vec![a])
}

pub fn c_arrow(a: CType, m: Mult, b: CType) -> CType {
    CType::Arrow(Box::new(a), m, Box::new(b))
}

pub fn linearly_token() -> CType {
    CType::Token(Atom::linearly().name, vec![])
}

impl CType {
    pub fn apply(self, args: Vec<CType>) -> CType {
        if args.is_empty() {
            return self;
        }
        match self {
            CType::Con(n, mut a) => {
                a.extend(args);
                CType::Con(n, a)
            }
            CType::App(h, mut a) => {
                a.extend(args);
                CType::App(h, a)
            }
            h => CType::App(Box::new(h), args),
        }
    }

    pub fn subst(&self, s: &BTreeMap<String, CType>) -> CType {
        if s.is_empty() {
            return self.clone();
        }
        let without = |bs: &[String]| {
            let mut s = s.clone();
            bs.iter().for_each(|b| {
                s.remove(b);
            });
            s
        };
        match self {
            CType::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            CType::Con(n, a) => CType::Con(n.clone(), a.iter().map(|t| t.subst(s)).collect()),
            CType::App(h, a) => h.subst(s).apply(a.iter().map(|t| t.subst(s)).collect()),
            CType::Arrow(a, m, r) => c_arrow(a.subst(s), *m, r.subst(s)),
            CType::Forall(bs, t) => CType::Forall(bs.clone(), Box::new(t.subst(&without(bs)))),
            CType::Exists(bs, v, e) => {
                let inner = without(bs);
                CType::Exists(bs.clone(), Box::new(v.subst(&inner)), Box::new(e.subst(&inner)))
            }
            CType::Token(n, a) => CType::Token(n.clone(), a.iter().map(|t| t.subst(s)).collect()),
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            CType::Var(v) => {
                out.insert(v.clone());
            }
            CType::Con(_, a) | CType::Token(_, a) => a.iter().for_each(|t| t.free_vars(out)),
            CType::App(h, a) => {
                h.free_vars(out);
                a.iter().for_each(|t| t.free_vars(out));
            }
            CType::Arrow(a, _, r) => {
                a.free_vars(out);
                r.free_vars(out);
            }
            CType::Forall(bs, t) => {
                let mut inner = BTreeSet::new();
                t.free_vars(&mut inner);
                bs.iter().for_each(|b| {
                    inner.remove(b);
                });
                out.extend(inner);
            }
            CType::Exists(bs, v, e) => {
                let mut inner = BTreeSet::new();
                v.free_vars(&mut inner);
                e.free_vars(&mut inner);
                bs.iter().for_each(|b| {
                    inner.remove(b);
                });
                out.extend(inner);
            }
        }
    }

    /// Rename bound variables to positional names so that alpha-equivalent
    /// types compare equal.
    pub fn canonical(&self) -> CType {
        fn go(t: &CType, depth: &mut usize) -> CType {
            let bind = |bs: &[String], depth: &mut usize| {
                let mut s = BTreeMap::new();
                let mut names = vec![];
                for b in bs {
                    let n = format!("%{}", *depth);
                    *depth += 1;
                    s.insert(b.clone(), CType::Var(n.clone()));
                    names.push(n);
                }
                (s, names)
            };
            match t {
                CType::Var(_) => t.clone(),
                CType::Con(n, a) => CType::Con(n.clone(), a.iter().map(|x| go(x, depth)).collect()),
                CType::Token(n, a) => CType::Token(n.clone(), a.iter().map(|x| go(x, depth)).collect()),
                CType::App(h, a) => CType::App(Box::new(go(h, depth)), a.iter().map(|x| go(x, depth)).collect()),
                CType::Arrow(a, m, r) => c_arrow(go(a, depth), *m, go(r, depth)),
                CType::Forall(bs, body) => {
                    let (s, names) = bind(bs, depth);
                    CType::Forall(names, Box::new(go(&body.subst(&s), depth)))
                }
                CType::Exists(bs, v, e) => {
                    let (s, names) = bind(bs, depth);
                    CType::Exists(names, Box::new(go(&v.subst(&s), depth)), Box::new(go(&e.subst(&s), depth)))
                }
            }
        }
        go(self, &mut 0)
    }

    pub fn alpha_eq(&self, other: &CType) -> bool {
        self == other || self.canonical() == other.canonical()
    }
}

/// Plain data and shared pointers: a linear binder of such a type may be
/// used freely, since ownership is tracked by the accompanying tokens.
pub fn is_free_ctype(t: &CType) -> bool {
    match t {
        CType::Con(n, a) => (a.is_empty() && (n == "Int" || n == "Bool")) || n == "PArray" || n == "AtomRef",
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CScheme {
    pub vars: Vec<String>,
    pub ty: CType,
}

impl CScheme {
    pub fn mono(ty: CType) -> CScheme {
        CScheme { vars: vec![], ty }
    }

    pub fn instantiate(&self, inst: &[CType]) -> Option<CType> {
        if inst.len() != self.vars.len() {
            return None;
        }
        let s: BTreeMap<String, CType> = self.vars.iter().cloned().zip(inst.iter().cloned()).collect();
        Some(self.ty.subst(&s))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CAlt {
    pub con: String,
    pub vars: Vec<String>,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Var(String, Vec<CType>),
    Con(String, Vec<CType>),
    Lit(i64),
    Lam(String, Mult, CType, Box<Term>),
    TyLam(Vec<String>, Box<Term>),
    App(Box<Term>, Box<Term>),
    /// `pack [witnesses] (evidence, value) : ty`
    Pack { witnesses: Vec<CType>, ty: CType, ev: Box<Term>, val: Box<Term> },
    /// `let pack [tyvars] (ev, var) = rhs in body`
    Unpack { tyvars: Vec<String>, ev: String, var: String, rhs: Box<Term>, body: Box<Term> },
    Case { mult: Mult, scrut: Box<Term>, alts: Vec<CAlt> },
    Let { mult: Mult, rec: bool, var: String, scheme: CScheme, rhs: Box<Term>, body: Box<Term> },
}

impl Term {
    pub fn var(x: impl Into<String>) -> Term {
        Term::Var(x.into(), vec![])
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn pair(ta: CType, tb: CType, a: Term, b: Term) -> Term {
        Term::app(Term::app(Term::Con("(,)".into(), vec![ta, tb]), a), b)
    }

    pub fn unit() -> Term {
        Term::Con("()".into(), vec![])
    }

    pub fn case1(scrut: Term, con: &str, vars: Vec<String>, body: Term) -> Term {
        Term::Case {
            mult: Mult::One,
            scrut: Box::new(scrut),
            alts: vec![CAlt { con: con.into(), vars, body }],
        }
    }

    /// Number of free occurrences of `x`.
    pub fn occurrences(&self, x: &str) -> usize {
        match self {
            Term::Var(y, _) => (y == x) as usize,
            Term::Con(..) | Term::Lit(_) => 0,
            Term::Lam(y, _, _, b) => {
                if y == x {
                    0
                } else {
                    b.occurrences(x)
                }
            }
            Term::TyLam(_, b) => b.occurrences(x),
            Term::App(f, a) => f.occurrences(x) + a.occurrences(x),
            Term::Pack { ev, val, .. } => ev.occurrences(x) + val.occurrences(x),
            Term::Unpack { ev, var, rhs, body, .. } => {
                rhs.occurrences(x) + if ev == x || var == x { 0 } else { body.occurrences(x) }
            }
            Term::Case { scrut, alts, .. } => {
                scrut.occurrences(x)
                    + alts
                        .iter()
                        .map(|a| if a.vars.iter().any(|v| v == x) { 0 } else { a.body.occurrences(x) })
                        .sum::<usize>()
            }
            Term::Let { rec, var, rhs, body, .. } => {
                let shadow = var == x;
                (if shadow && *rec { 0 } else { rhs.occurrences(x) }) + if shadow { 0 } else { body.occurrences(x) }
            }
        }
    }

    /// Rename free occurrences of `x` to `y` (`y` must be fresh).
    pub fn rename(&self, x: &str, y: &str) -> Term {
        let r = |t: &Term| Box::new(t.rename(x, y));
        match self {
            Term::Var(z, i) if z == x => Term::Var(y.into(), i.clone()),
            Term::Var(..) | Term::Con(..) | Term::Lit(_) => self.clone(),
            Term::Lam(z, _, _, _) if z == x => self.clone(),
            Term::Lam(z, m, t, b) => Term::Lam(z.clone(), *m, t.clone(), r(b)),
            Term::TyLam(vs, b) => Term::TyLam(vs.clone(), r(b)),
            Term::App(f, a) => Term::App(r(f), r(a)),
            Term::Pack { witnesses, ty, ev, val } => {
                Term::Pack { witnesses: witnesses.clone(), ty: ty.clone(), ev: r(ev), val: r(val) }
            }
            Term::Unpack { tyvars, ev, var, rhs, body } => Term::Unpack {
                tyvars: tyvars.clone(),
                ev: ev.clone(),
                var: var.clone(),
                rhs: r(rhs),
                body: if ev == x || var == x { body.clone() } else { r(body) },
            },
            Term::Case { mult, scrut, alts } => Term::Case {
                mult: *mult,
                scrut: r(scrut),
                alts: alts
                    .iter()
                    .map(|a| CAlt {
                        con: a.con.clone(),
                        vars: a.vars.clone(),
                        body: if a.vars.iter().any(|v| v == x) { a.body.clone() } else { a.body.rename(x, y) },
                    })
                    .collect(),
            },
            Term::Let { mult, rec, var, scheme, rhs, body } => {
                let shadow = var == x;
                Term::Let {
                    mult: *mult,
                    rec: *rec,
                    var: var.clone(),
                    scheme: scheme.clone(),
                    rhs: if shadow && *rec { rhs.clone() } else { r(rhs) },
                    body: if shadow { body.clone() } else { r(body) },
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Def {
    pub name: String,
    pub scheme: CScheme,
    pub body: Term,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CoreProgram {
    pub defs: Vec<Def>,
}

// Concrete syntax: S-expressions, see docs/core.md.

pub(crate) fn mult_str(m: Mult) -> &'static str {
    match m {
        Mult::One => "1",
        Mult::Many => "w",
    }
}

pub(crate) fn con_str(c: &str) -> &str {
    match c {
        "()" => "Unit",
        "(,)" => "Pair",
        _ => c,
    }
}

fn list(f: &mut fmt::Formatter<'_>, xs: &[String]) -> fmt::Result {
    write!(f, "({})", xs.join(" "))
}

impl fmt::Display for CType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = |f: &mut fmt::Formatter<'_>, a: &[CType]| -> fmt::Result {
            for t in a {
                write!(f, " {t}")?;
            }
            Ok(())
        };
        match self {
            CType::Var(v) => write!(f, "{v}"),
            CType::Con(n, a) if a.is_empty() => write!(f, "{}", con_str(n)),
            CType::Con(n, a) => {
                write!(f, "({}", con_str(n))?;
                args(f, a)?;
                write!(f, ")")
            }
            CType::App(h, a) => {
                write!(f, "(app {h}")?;
                args(f, a)?;
                write!(f, ")")
            }
            CType::Arrow(a, m, r) => write!(f, "({} {a} {r})", if *m == Mult::One { "-o" } else { "->" }),
            CType::Forall(bs, t) => {
                write!(f, "(forall ")?;
                list(f, bs)?;
                write!(f, " {t})")
            }
            CType::Exists(bs, v, e) => {
                write!(f, "(exists ")?;
                list(f, bs)?;
                write!(f, " {v} {e})")
            }
            CType::Token(n, a) => {
                write!(f, "(tok {n}")?;
                args(f, a)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for CScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vars.is_empty() {
            write!(f, "{}", self.ty)
        } else {
            write!(f, "(forall ")?;
            list(f, &self.vars)?;
            write!(f, " {})", self.ty)
        }
    }
}

impl Term {
    fn write(&self, f: &mut fmt::Formatter<'_>, ind: usize) -> fmt::Result {
        let nl = |f: &mut fmt::Formatter<'_>, ind: usize| write!(f, "\n{}", "  ".repeat(ind));
        match self {
            Term::Var(x, i) | Term::Con(x, i) => {
                let x = if matches!(self, Term::Con(..)) { con_str(x) } else { x };
                if i.is_empty() {
                    write!(f, "{x}")
                } else {
                    write!(f, "(@ {x}")?;
                    for t in i {
                        write!(f, " {t}")?;
                    }
                    write!(f, ")")
                }
            }
            Term::Lit(n) => write!(f, "{n}"),
            Term::Lam(x, m, t, b) => {
                write!(f, "(\\ {x} {} {t}", mult_str(*m))?;
                nl(f, ind + 1)?;
                b.write(f, ind + 1)?;
                write!(f, ")")
            }
            Term::TyLam(vs, b) => {
                write!(f, "(/\\ ")?;
                list(f, vs)?;
                nl(f, ind + 1)?;
                b.write(f, ind + 1)?;
                write!(f, ")")
            }
            Term::App(a, b) => {
                write!(f, "(")?;
                a.write(f, ind)?;
                write!(f, " ")?;
                b.write(f, ind + 1)?;
                write!(f, ")")
            }
            Term::Pack { witnesses, ty, ev, val } => {
                write!(f, "(pack (")?;
                for (i, w) in witnesses.iter().enumerate() {
                    write!(f, "{}{w}", if i > 0 { " " } else { "" })?;
                }
                write!(f, ") {ty} ")?;
                ev.write(f, ind + 1)?;
                write!(f, " ")?;
                val.write(f, ind + 1)?;
                write!(f, ")")
            }
            Term::Unpack { tyvars, ev, var, rhs, body } => {
                write!(f, "(let-pack ")?;
                list(f, tyvars)?;
                write!(f, " {ev} {var} ")?;
                rhs.write(f, ind + 1)?;
                nl(f, ind + 1)?;
                body.write(f, ind + 1)?;
                write!(f, ")")
            }
            Term::Case { mult, scrut, alts } => {
                write!(f, "(case {} ", mult_str(*mult))?;
                scrut.write(f, ind + 1)?;
                for a in alts {
                    nl(f, ind + 1)?;
                    if a.vars.is_empty() {
                        write!(f, "({} ", con_str(&a.con))?;
                    } else {
                        write!(f, "(({} {}) ", con_str(&a.con), a.vars.join(" "))?;
                    }
                    a.body.write(f, ind + 2)?;
                    write!(f, ")")?;
                }
                write!(f, ")")
            }
            Term::Let { mult, rec, var, scheme, rhs, body } => {
                write!(f, "({} {} {var} {scheme}", if *rec { "let-rec" } else { "let" }, mult_str(*mult))?;
                nl(f, ind + 1)?;
                rhs.write(f, ind + 1)?;
                nl(f, ind + 1)?;
                body.write(f, ind + 1)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 0)
    }
}

impl fmt::Display for CoreProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.defs.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "(def {} {}\n  ", d.name, d.scheme)?;
            d.body.write(f, 1)?;
            writeln!(f, ")")?;
        }
        Ok(())
    }
}
