//! Types of the qualified language as used by the checker.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::constraint::{Atom, Mult};

/// A scaled atom list in declaration order.
pub type CSpec = Vec<(Mult, Atom)>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    /// Rigid variable: a signature variable or a skolem (skolems carry a `#k` suffix).
    Var(String),
    /// Unification variable.
    Meta(u32),
    Con(String, Vec<Type>),
    /// Application whose head is a variable.
    App(Box<Type>, Vec<Type>),
    Arrow(Box<ArgType>, Mult, Box<Type>),
    /// `exists as. t * q`
    Exists(Vec<String>, Box<Type>, CSpec),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArgType {
    Plain(Type),
    Qual(QualArg),
}

/// A constrained argument type `(forall ps. Q => t)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualArg {
    pub binders: Vec<String>,
    pub assume: CSpec,
    pub body: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub vars: Vec<String>,
    pub assume: CSpec,
    pub body: Type,
}

pub fn int() -> Type {
    Type::Con("Int".into(), vec![])
}
pub fn bool_ty() -> Type {
    Type::Con("Bool".into(), vec![])
}
pub fn unit() -> Type {
    Type::Con("()".into(), vec![])
}
pub fn pair(a: Type, b: Type) -> Type {
    Type::Con("(,)".into(), vec![a, b])
}
pub fn ur(a: Type) -> Type {
    Type::Con("Ur".into(), vec![a])
}

pub fn arrow(a: Type, m: Mult, b: Type) -> Type {
    Type::Arrow(Box::new(ArgType::Plain(a)), m, Box::new(b))
}

impl ArgType {
    pub fn body(&self) -> &Type {
        match self {
            ArgType::Plain(t) => t,
            ArgType::Qual(q) => &q.body,
        }
    }
}

impl Type {
    /// Apply a type to arguments, merging into constructor or application heads.
    pub fn apply(self, args: Vec<Type>) -> Type {
        if args.is_empty() {
            return self;
        }
        match self {
            Type::Con(n, mut a) => {
                a.extend(args);
                Type::Con(n, a)
            }
            Type::App(h, mut a) => {
                a.extend(args);
                Type::App(h, a)
            }
            h => Type::App(Box::new(h), args),
        }
    }

    pub fn subst(&self, s: &BTreeMap<String, Type>) -> Type {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Type::Var(v) => s.get(v).cloned().unwrap_or_else(|| self.clone()),
            Type::Meta(_) => self.clone(),
            Type::Con(n, a) => Type::Con(n.clone(), a.iter().map(|t| t.subst(s)).collect()),
            Type::App(h, a) => h.subst(s).apply(a.iter().map(|t| t.subst(s)).collect()),
            Type::Arrow(a, m, r) => Type::Arrow(Box::new(a.subst(s)), *m, Box::new(r.subst(s))),
            Type::Exists(bs, t, q) => {
                let inner = without(s, bs);
                Type::Exists(bs.clone(), Box::new(t.subst(&inner)), subst_spec(q, &inner))
            }
        }
    }

    /// Rewrite metas through `f`, re-normalising applications.
    pub fn map_metas(&self, f: &mut impl FnMut(u32) -> Option<Type>) -> Type {
        match self {
            Type::Var(_) => self.clone(),
            Type::Meta(m) => match f(*m) {
                Some(t) => t.map_metas(f),
                None => self.clone(),
            },
            Type::Con(n, a) => Type::Con(n.clone(), a.iter().map(|t| t.map_metas(f)).collect()),
            Type::App(h, a) => {
                let args = a.iter().map(|t| t.map_metas(f)).collect();
                h.map_metas(f).apply(args)
            }
            Type::Arrow(a, m, r) => {
                Type::Arrow(Box::new(a.map_metas(f)), *m, Box::new(r.map_metas(f)))
            }
            Type::Exists(bs, t, q) => Type::Exists(
                bs.clone(),
                Box::new(t.map_metas(f)),
                q.iter().map(|(m, a)| (*m, a.map_types(&mut |t| t.map_metas(f)))).collect(),
            ),
        }
    }

    pub fn metas(&self, out: &mut BTreeSet<u32>) {
        self.walk(&mut |t| {
            if let Type::Meta(m) = t {
                out.insert(*m);
            }
        });
    }

    pub fn has_metas(&self) -> bool {
        let mut s = BTreeSet::new();
        self.metas(&mut s);
        !s.is_empty()
    }

    /// Free rigid variables.
    pub fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Meta(_) => {}
            Type::Con(_, a) => a.iter().for_each(|t| t.free_vars(out)),
            Type::App(h, a) => {
                h.free_vars(out);
                a.iter().for_each(|t| t.free_vars(out));
            }
            Type::Arrow(a, _, r) => {
                a.free_vars(out);
                r.free_vars(out);
            }
            Type::Exists(bs, t, q) => {
                let mut inner = BTreeSet::new();
                t.free_vars(&mut inner);
                spec_free_vars(q, &mut inner);
                for b in bs {
                    inner.remove(b);
                }
                out.extend(inner);
            }
        }
    }

    fn walk(&self, f: &mut impl FnMut(&Type)) {
        f(self);
        match self {
            Type::Var(_) | Type::Meta(_) => {}
            Type::Con(_, a) => a.iter().for_each(|t| t.walk(f)),
            Type::App(h, a) => {
                h.walk(f);
                a.iter().for_each(|t| t.walk(f));
            }
            Type::Arrow(a, _, r) => {
                match &**a {
                    ArgType::Plain(t) => t.walk(f),
                    ArgType::Qual(q) => {
                        q.assume.iter().for_each(|(_, at)| at.args.iter().for_each(|t| t.walk(f)));
                        q.body.walk(f);
                    }
                }
                r.walk(f);
            }
            Type::Exists(_, t, q) => {
                t.walk(f);
                q.iter().for_each(|(_, at)| at.args.iter().for_each(|t| t.walk(f)));
            }
        }
    }

    pub fn display_atomic(&self) -> String {
        let s = self.to_string();
        let atomic = match self {
            Type::Var(_) | Type::Meta(_) => true,
            Type::Con(n, a) => a.is_empty() || n == "(,)",
            _ => false,
        };
        if atomic || is_folded_tuple(self) {
            s
        } else {
            format!("({s})")
        }
    }
}

fn is_folded_tuple(t: &Type) -> bool {
    matches!(t, Type::Con(n, _) if n == "(,)" || n == "()")
}

impl ArgType {
    pub fn subst(&self, s: &BTreeMap<String, Type>) -> ArgType {
        match self {
            ArgType::Plain(t) => ArgType::Plain(t.subst(s)),
            ArgType::Qual(q) => {
                let inner = without(s, &q.binders);
                ArgType::Qual(QualArg {
                    binders: q.binders.clone(),
                    assume: subst_spec(&q.assume, &inner),
                    body: q.body.subst(&inner),
                })
            }
        }
    }

    pub fn map_metas(&self, f: &mut impl FnMut(u32) -> Option<Type>) -> ArgType {
        match self {
            ArgType::Plain(t) => ArgType::Plain(t.map_metas(f)),
            ArgType::Qual(q) => ArgType::Qual(QualArg {
                binders: q.binders.clone(),
                assume: q.assume.iter().map(|(m, a)| (*m, a.map_types(&mut |t| t.map_metas(f)))).collect(),
                body: q.body.map_metas(f),
            }),
        }
    }

    fn free_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ArgType::Plain(t) => t.free_vars(out),
            ArgType::Qual(q) => {
                let mut inner = BTreeSet::new();
                q.body.free_vars(&mut inner);
                spec_free_vars(&q.assume, &mut inner);
                for b in &q.binders {
                    inner.remove(b);
                }
                out.extend(inner);
            }
        }
    }
}

impl QualArg {
    pub fn as_scheme(&self) -> Scheme {
        Scheme { vars: self.binders.clone(), assume: self.assume.clone(), body: self.body.clone() }
    }
}

impl Scheme {
    pub fn mono(t: Type) -> Scheme {
        Scheme { vars: vec![], assume: vec![], body: t }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.free_vars(&mut out);
        spec_free_vars(&self.assume, &mut out);
        for v in &self.vars {
            out.remove(v);
        }
        out
    }
}

pub fn subst_spec(q: &CSpec, s: &BTreeMap<String, Type>) -> CSpec {
    q.iter().map(|(m, a)| (*m, a.map_types(&mut |t| t.subst(s)))).collect()
}

pub fn spec_free_vars(q: &CSpec, out: &mut BTreeSet<String>) {
    for (_, a) in q {
        for t in &a.args {
            t.free_vars(out);
        }
    }
}

fn without(s: &BTreeMap<String, Type>, bs: &[String]) -> BTreeMap<String, Type> {
    let mut s = s.clone();
    for b in bs {
        s.remove(b);
    }
    s
}

/// Sort a declared constraint into canonical order: unrestricted atoms first, then
/// linear ones, each by atom. Declarations are stored in this order, which fixes the
/// evidence layout and survives substitution.
pub fn canonical_spec(mut q: CSpec) -> CSpec {
    q.sort_by(|x, y| (x.0 == Mult::One, &x.1).cmp(&(y.0 == Mult::One, &y.1)));
    q
}

pub fn display_spec(q: &CSpec) -> String {
    let items: Vec<String> = q
        .iter()
        .map(|(m, a)| match m {
            Mult::One => a.to_string(),
            Mult::Many => format!("many {a}"),
        })
        .collect();
    match items.len() {
        0 => "()".into(),
        1 => items[0].clone(),
        _ => format!("({})", items.join(", ")),
    }
}

/// Render a constraint prefix `Q =o ` / `Q => `, choosing the arrow that needs fewest `many` markers.
pub fn display_qualifier(q: &CSpec) -> String {
    if q.iter().all(|(m, _)| *m == Mult::Many) && !q.is_empty() {
        let plain: CSpec = q.iter().map(|(_, a)| (Mult::One, a.clone())).collect();
        format!("{} => ", display_spec(&plain))
    } else {
        format!("{} =o ", display_spec(q))
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Var(v) => f.write_str(v),
            Type::Meta(m) => write!(f, "?{m}"),
            Type::Con(n, a) if n == "()" && a.is_empty() => f.write_str("()"),
            Type::Con(n, a) if n == "(,)" && a.len() == 2 => write!(f, "({}, {})", a[0], a[1]),
            Type::Con(n, a) if n == "PArray" && a.len() == 2 => match &a[0] {
                Type::Con(r, e) if r == "AtomRef" && e.len() == 1 => {
                    write!(f, "UArray {} {}", e[0].display_atomic(), a[1].display_atomic())
                }
                _ => write!(f, "PArray {} {}", a[0].display_atomic(), a[1].display_atomic()),
            },
            Type::Con(n, a) => {
                f.write_str(n)?;
                for t in a {
                    write!(f, " {}", t.display_atomic())?;
                }
                Ok(())
            }
            Type::App(h, a) => {
                write!(f, "{}", h.display_atomic())?;
                for t in a {
                    write!(f, " {}", t.display_atomic())?;
                }
                Ok(())
            }
            Type::Arrow(a, m, r) => {
                let arg = match &**a {
                    ArgType::Plain(t @ (Type::Arrow(..) | Type::Exists(..))) => format!("({t})"),
                    ArgType::Plain(t) => t.to_string(),
                    ArgType::Qual(q) => {
                        let bs = if q.binders.is_empty() {
                            String::new()
                        } else {
                            format!("forall {}. ", q.binders.join(" "))
                        };
                        format!("({bs}{}{})", display_qualifier(&q.assume), q.body)
                    }
                };
                let op = match m {
                    Mult::One => "-o",
                    Mult::Many => "->",
                };
                write!(f, "{arg} {op} {r}")
            }
            Type::Exists(bs, t, q) => {
                let inner = match &**t {
                    t @ (Type::Arrow(..) | Type::Exists(..)) => format!("({t})"),
                    t => t.to_string(),
                };
                write!(f, "exists {}. {} * {}", bs.join(" "), inner, display_spec(q))
            }
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            write!(f, "forall {}. ", self.vars.join(" "))?;
        }
        if !self.assume.is_empty() {
            f.write_str(&display_qualifier(&self.assume))?;
        }
        write!(f, "{}", self.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Type {
        Type::Var(s.into())
    }

    #[test]
    fn apply_merges_into_constructor() {
        let a = v("a").subst(&BTreeMap::from([(
            "a".to_string(),
            Type::Con("AtomRef".into(), vec![int()]),
        )]));
        let t = Type::App(Box::new(v("a")), vec![v("p")]);
        let s = BTreeMap::from([("a".to_string(), a)]);
        assert_eq!(t.subst(&s), Type::Con("AtomRef".into(), vec![int(), v("p")]));
    }

    #[test]
    fn display_package() {
        let n = v("n");
        let t = Type::Exists(
            vec!["n".into()],
            Box::new(Type::Con("PArray".into(), vec![Type::Con("AtomRef".into(), vec![v("a")]), n.clone()])),
            vec![(Mult::One, Atom::new("Read", vec![n.clone()])), (Mult::One, Atom::new("Write", vec![n]))],
        );
        assert_eq!(t.to_string(), "exists n. UArray a n * (Read n, Write n)");
    }

    #[test]
    fn exists_binders_shadow_substitution() {
        let t = Type::Exists(vec!["n".into()], Box::new(v("n")), vec![]);
        let s = BTreeMap::from([("n".to_string(), int())]);
        assert_eq!(t.subst(&s), t);
    }

    #[test]
    fn canonical_order_puts_unrestricted_first() {
        let q = vec![
            (Mult::One, Atom::nullary("Write")),
            (Mult::Many, Atom::nullary("Z")),
            (Mult::One, Atom::nullary("Read")),
        ];
        let names: Vec<_> = canonical_spec(q).into_iter().map(|(_, a)| a.name).collect();
        assert_eq!(names, vec!["Z", "Read", "Write"]);
    }
}
