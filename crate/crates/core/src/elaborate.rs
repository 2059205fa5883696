//! Translation of checked bindings into the core language, using the
//! solver's evidence map to name the token passed at every wanted site.

use std::collections::BTreeMap;

use crate::calculus::{
    c_arrow, c_pair, c_unit, c_ur, linearly_token, CAlt, CScheme, CType, CoreProgram, Def, Term,
};
use crate::constraint::{Atom, Mult, SiteId};
use crate::oracle::{Binding, Deriv, ImplInfo, Node, VarSource};
use crate::solver::{EvidenceMap, Source};
use crate::types::{ArgType, CSpec, Scheme, Type};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ElabError {
    #[error("internal error: no evidence recorded for site `{0}`")]
    UnmappedSite(SiteId),
}

impl ElabError {
    pub fn class(&self) -> &'static str {
        "InternalError"
    }
}

pub fn atom_token(a: &Atom) -> CType {
    CType::Token(a.name.clone(), a.args.iter().map(translate_type).collect())
}

fn scaled_token(m: Mult, a: &Atom) -> CType {
    match m {
        Mult::One => atom_token(a),
        Mult::Many => c_ur(atom_token(a)),
    }
}

/// The type of evidence for a constraint: unit, one token, or right-nested
/// pairs in stored order.
pub fn evidence_type(q: &[(Mult, Atom)]) -> CType {
    match q.split_first() {
        None => c_unit(),
        Some(((m, a), [])) => scaled_token(*m, a),
        Some(((m, a), rest)) => c_pair(scaled_token(*m, a), evidence_type(rest)),
    }
}

pub fn translate_type(t: &Type) -> CType {
    match t {
        Type::Var(v) => CType::Var(v.clone()),
        // A leftover unification variable is unconstrained; any closed type will do.
        Type::Meta(_) => c_unit(),
        Type::Con(n, a) => CType::Con(n.clone(), a.iter().map(translate_type).collect()),
        Type::App(h, a) => translate_type(h).apply(a.iter().map(translate_type).collect()),
        Type::Arrow(a, m, r) => c_arrow(translate_arg(a), *m, translate_type(r)),
        Type::Exists(bs, v, q) => CType::Exists(bs.clone(), Box::new(translate_type(v)), Box::new(evidence_type(q))),
    }
}

fn translate_arg(a: &ArgType) -> CType {
    match a {
        ArgType::Plain(t) => translate_type(t),
        ArgType::Qual(q) => {
            let f = c_arrow(evidence_type(&q.assume), Mult::One, translate_type(&q.body));
            if q.binders.is_empty() {
                f
            } else {
                CType::Forall(q.binders.clone(), Box::new(f))
            }
        }
    }
}

/// `forall as. Q =o t` becomes `forall as. [[Q]] -o t`.
pub fn translate_scheme(s: &Scheme) -> CScheme {
    CScheme { vars: s.vars.clone(), ty: c_arrow(evidence_type(&s.assume), Mult::One, translate_type(&s.body)) }
}

/// Turn evidence for `ω·Q` (type `[[ω·Q]]`) into `Ur [[Q]]`.
pub fn coerce_ur(term: Term, q: &[(Mult, Atom)], fresh: &mut usize) -> Term {
    let mut name = |base: &str| {
        *fresh += 1;
        format!("{base}%{fresh}")
    };
    match q {
        [] => Term::case1(term, "()", vec![], Term::app(Term::Con("Ur".into(), vec![c_unit()]), Term::unit())),
        [(Mult::One, _)] => term,
        [(Mult::Many, a)] => {
            let x = name("%u");
            let inner = c_ur(atom_token(a));
            Term::case1(
                term,
                "Ur",
                vec![x.clone()],
                Term::app(Term::Con("Ur".into(), vec![inner.clone()]), Term::app(Term::Con("Ur".into(), vec![atom_token(a)]), Term::var(x))),
            )
        }
        [first, rest @ ..] => {
            let (a, b, x, y) = (name("%a"), name("%b"), name("%x"), name("%y"));
            let (ta, tb) = (evidence_type(std::slice::from_ref(first)), evidence_type(rest));
            let left = coerce_ur(Term::var(&a), std::slice::from_ref(first), fresh);
            let right = coerce_ur(Term::var(&b), rest, fresh);
            let both = Term::app(
                Term::Con("Ur".into(), vec![c_pair(ta.clone(), tb.clone())]),
                Term::pair(ta, tb, Term::var(&x), Term::var(&y)),
            );
            Term::case1(
                term,
                "(,)",
                vec![a, b],
                Term::case1(left, "Ur", vec![x], Term::case1(right, "Ur", vec![y], both)),
            )
        }
    }
}

struct Elab<'a> {
    evidence: &'a EvidenceMap,
    fresh: usize,
}

impl Elab<'_> {
    fn fresh(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}%{}", self.fresh)
    }

    fn evidence_term(&self, wanted: &CSpec, sites: &[SiteId]) -> Result<Term, ElabError> {
        let mut items = vec![];
        for ((m, a), site) in wanted.iter().zip(sites) {
            let (src, g) = self.evidence.get(site).ok_or_else(|| ElabError::UnmappedSite(site.clone()))?;
            let t = match (m, src) {
                (Mult::Many, Source::U) => {
                    Term::app(Term::Con("Ur".into(), vec![atom_token(a)]), Term::var(g))
                }
                _ => Term::var(g),
            };
            items.push((scaled_token(*m, a), t));
        }
        Ok(nest(items))
    }

    /// `\z : [[Q]]. body` with the givens of `imp` bound inside.
    fn abstract_givens(&mut self, imp: &ImplInfo, body: Term) -> Term {
        let z = self.fresh("%z");
        let inner = self.bind_givens(imp, &z, body);
        Term::Lam(z, Mult::One, evidence_type(&imp.assume), Box::new(inner))
    }

    /// Bind the givens of `imp` from the evidence variable `z` around `body`.
    fn bind_givens(&mut self, imp: &ImplInfo, z: &str, body: Term) -> Term {
        // Innermost first: unwrap unrestricted givens, linearise duplicable ones.
        let mut raw = vec![];
        let mut body = body;
        for ((m, a), g) in imp.assume.iter().zip(&imp.givens) {
            match m {
                Mult::Many => {
                    let r = format!("{g}'");
                    body = Term::Case {
                        mult: Mult::One,
                        scrut: Box::new(Term::var(&r)),
                        alts: vec![CAlt { con: "Ur".into(), vars: vec![g.clone()], body }],
                    };
                    raw.push(r);
                }
                Mult::One => {
                    if a.is_duplicable() {
                        body = linearize(g, body, &mut self.fresh);
                    }
                    raw.push(g.clone());
                }
            }
        }
        match raw.len() {
            0 => Term::case1(Term::var(z), "()", vec![], body),
            1 => body.rename(&raw[0], z),
            _ => split_nested(z, &raw, body, &mut self.fresh),
        }
    }

    fn term(&mut self, d: &Deriv) -> Result<Term, ElabError> {
        Ok(match &d.node {
            Node::Var { name, source, inst, wanted, sites } => {
                let inst: Vec<CType> = inst.iter().map(translate_type).collect();
                match source {
                    VarSource::Local => Term::Var(name.clone(), inst),
                    _ => Term::app(Term::Var(name.clone(), inst), self.evidence_term(wanted, sites)?),
                }
            }
            Node::Con { name, inst } => Term::Con(name.clone(), inst.iter().map(translate_type).collect()),
            Node::Lit(n) => Term::Lit(*n),
            Node::Abs { param, mult, arg, body } => {
                Term::Lam(param.clone(), *mult, translate_arg(arg), Box::new(self.term(body)?))
            }
            Node::App { fun, arg, imp, .. } => {
                let f = self.term(fun)?;
                let a = self.term(arg)?;
                let a = match imp {
                    None => a,
                    Some(i) => {
                        let lam = self.abstract_givens(i, a);
                        if i.skolems.is_empty() {
                            lam
                        } else {
                            Term::TyLam(i.skolems.clone(), Box::new(lam))
                        }
                    }
                };
                Term::app(f, a)
            }
            Node::Pack { body, witnesses, payload, sites } => Term::Pack {
                witnesses: witnesses.iter().map(translate_type).collect(),
                ty: translate_type(&d.ty),
                ev: Box::new(self.evidence_term(payload, sites)?),
                val: Box::new(self.term(body)?),
            },
            Node::Unpack { var, rhs, body, imp, .. } => {
                let rhs = self.term(rhs)?;
                let body = self.term(body)?;
                let z = self.fresh("%z");
                let body = self.bind_givens(imp, &z, body);
                Term::Unpack { tyvars: imp.skolems.clone(), ev: z, var: var.clone(), rhs: Box::new(rhs), body: Box::new(body) }
            }
            Node::Let { mult, var, rhs, body } => Term::Let {
                mult: *mult,
                rec: false,
                var: var.clone(),
                scheme: CScheme::mono(translate_type(&rhs.ty)),
                rhs: Box::new(self.term(rhs)?),
                body: Box::new(self.term(body)?),
            },
            Node::LetSig { mult, var, rec, scheme, rhs, body, imp } => {
                let r = self.term(rhs)?;
                Term::Let {
                    mult: *mult,
                    rec: *rec,
                    var: var.clone(),
                    scheme: translate_scheme(scheme),
                    rhs: Box::new(self.abstract_givens(imp, r)),
                    body: Box::new(self.term(body)?),
                }
            }
            Node::Case { mult, scrut, alts } => Term::Case {
                mult: *mult,
                scrut: Box::new(self.term(scrut)?),
                alts: alts
                    .iter()
                    .map(|a| Ok(CAlt { con: a.con.clone(), vars: a.vars.clone(), body: self.term(&a.body)? }))
                    .collect::<Result<_, ElabError>>()?,
            },
        })
    }
}

fn nest(mut items: Vec<(CType, Term)>) -> Term {
    match items.len() {
        0 => Term::unit(),
        1 => items.pop().unwrap().1,
        _ => {
            let (t, e) = items.remove(0);
            let rest_ty = evidence_rest_type(&items);
            Term::pair(t, rest_ty, e, nest(items))
        }
    }
}

fn evidence_rest_type(items: &[(CType, Term)]) -> CType {
    match items {
        [] => c_unit(),
        [(t, _)] => t.clone(),
        [(t, _), rest @ ..] => c_pair(t.clone(), evidence_rest_type(rest)),
    }
}

/// Destructure right-nested evidence pairs in `z` into `names` (at least two).
fn split_nested(z: &str, names: &[String], body: Term, fresh: &mut usize) -> Term {
    let (first, rest) = names.split_first().expect("two or more givens");
    if let [last] = rest {
        return Term::case1(Term::var(z), "(,)", vec![first.clone(), last.clone()], body);
    }
    *fresh += 1;
    let r = format!("%r{fresh}");
    let inner = split_nested(&r, rest, body, fresh);
    Term::case1(Term::var(z), "(,)", vec![first.clone(), r], inner)
}

/// A subterm evaluated independently of its siblings, or a set of case
/// alternatives (which share one copy between them).
enum Part {
    Term(Term),
    Alts(Vec<CAlt>),
}

impl Part {
    fn occurrences(&self, g: &str) -> usize {
        match self {
            Part::Term(t) => t.occurrences(g),
            Part::Alts(alts) => alts
                .iter()
                .filter(|a| !a.vars.iter().any(|v| v == g))
                .map(|a| a.body.occurrences(g))
                .sum(),
        }
    }

    fn rename(self, g: &str, to: &str) -> Part {
        match self {
            Part::Term(t) => Part::Term(t.rename(g, to)),
            Part::Alts(alts) => Part::Alts(
                alts.into_iter()
                    .map(|a| {
                        let body = if a.vars.iter().any(|v| v == g) { a.body } else { a.body.rename(g, to) };
                        CAlt { body, ..a }
                    })
                    .collect(),
            ),
        }
    }

    fn linearize(self, g: &str, fresh: &mut usize) -> Part {
        match self {
            Part::Term(t) => Part::Term(linearize(g, t, fresh)),
            Part::Alts(alts) => Part::Alts(
                alts.into_iter()
                    .map(|a| {
                        let body = linearize(g, a.body, fresh);
                        CAlt { body, ..a }
                    })
                    .collect(),
            ),
        }
    }

    fn term(self) -> Term {
        match self {
            Part::Term(t) => t,
            Part::Alts(_) => unreachable!("alternatives in term position"),
        }
    }

    fn alts(self) -> Vec<CAlt> {
        match self {
            Part::Alts(a) => a,
            Part::Term(_) => unreachable!("term in alternatives position"),
        }
    }
}

/// Make the duplicable token `g` used exactly once along every path of
/// `t`, copying it with `dupL` where several subterms need it and
/// discarding it with `dropL` where none do.
pub fn linearize(g: &str, t: Term, fresh: &mut usize) -> Term {
    if t.occurrences(g) == 0 {
        return Term::case1(Term::app(Term::var("dropL"), Term::var(g)), "()", vec![], t);
    }
    match t {
        Term::Lam(x, m, ty, b) => Term::Lam(x, m, ty, Box::new(linearize(g, *b, fresh))),
        Term::TyLam(vs, b) => Term::TyLam(vs, Box::new(linearize(g, *b, fresh))),
        Term::App(f, a) => share(g, vec![Part::Term(*f), Part::Term(*a)], fresh, |mut ps| {
            let a = ps.pop().unwrap().term();
            Term::app(ps.pop().unwrap().term(), a)
        }),
        Term::Pack { witnesses, ty, ev, val } => share(g, vec![Part::Term(*ev), Part::Term(*val)], fresh, |mut ps| {
            let val = Box::new(ps.pop().unwrap().term());
            Term::Pack { witnesses, ty, ev: Box::new(ps.pop().unwrap().term()), val }
        }),
        Term::Unpack { tyvars, ev, var, rhs, body } => {
            share(g, vec![Part::Term(*rhs), Part::Term(*body)], fresh, |mut ps| {
                let body = Box::new(ps.pop().unwrap().term());
                Term::Unpack { tyvars, ev, var, rhs: Box::new(ps.pop().unwrap().term()), body }
            })
        }
        Term::Let { mult, rec, var, scheme, rhs, body } => {
            share(g, vec![Part::Term(*rhs), Part::Term(*body)], fresh, |mut ps| {
                let body = Box::new(ps.pop().unwrap().term());
                Term::Let { mult, rec, var, scheme, rhs: Box::new(ps.pop().unwrap().term()), body }
            })
        }
        Term::Case { mult, scrut, alts } => share(g, vec![Part::Term(*scrut), Part::Alts(alts)], fresh, |mut ps| {
            let alts = ps.pop().unwrap().alts();
            Term::Case { mult, scrut: Box::new(ps.pop().unwrap().term()), alts }
        }),
        t => t,
    }
}

/// Hand each part that mentions `g` its own copy, produced by a chain of
/// `dupL` around the rebuilt node.
fn share(g: &str, parts: Vec<Part>, fresh: &mut usize, build: impl FnOnce(Vec<Part>) -> Term) -> Term {
    let users: Vec<usize> = (0..parts.len()).filter(|&i| parts[i].occurrences(g) > 0).collect();
    if users.len() == 1 {
        let parts = parts
            .into_iter()
            .enumerate()
            .map(|(i, p)| if i == users[0] { p.linearize(g, fresh) } else { p })
            .collect();
        return build(parts);
    }
    let names: Vec<String> = users
        .iter()
        .map(|_| {
            *fresh += 1;
            format!("{g}.{fresh}")
        })
        .collect();
    let parts = parts
        .into_iter()
        .enumerate()
        .map(|(i, p)| match users.iter().position(|&u| u == i) {
            Some(k) => p.rename(g, &names[k]).linearize(&names[k], fresh),
            None => p,
        })
        .collect();
    let mut body = build(parts);
    let k = names.len();
    let mut sources = vec![g.to_string()];
    for _ in 0..k - 2 {
        *fresh += 1;
        sources.push(format!("{g}.r{fresh}"));
    }
    for i in (0..k - 1).rev() {
        let second = if i == k - 2 { names[k - 1].clone() } else { sources[i + 1].clone() };
        let dup = Term::app(Term::var("dupL"), Term::var(&sources[i]));
        body = Term::case1(dup, "(,)", vec![names[i].clone(), second], body);
    }
    body
}

pub fn elaborate_binding(b: &Binding, evidence: &EvidenceMap) -> Result<Def, ElabError> {
    let mut e = Elab { evidence, fresh: 0 };
    let body = e.term(&b.body)?;
    Ok(match &b.scheme {
        Some(s) => Def { name: b.name.clone(), scheme: translate_scheme(s), body: e.abstract_givens(&b.imp, body) },
        // An unsigned `main` is treated as having an empty constraint.
        None => Def {
            name: b.name.clone(),
            scheme: CScheme::mono(c_arrow(c_unit(), Mult::One, translate_type(&b.body.ty))),
            body: e.abstract_givens(&b.imp, body),
        },
    })
}

pub fn elaborate_program(bs: &[(&Binding, &EvidenceMap)]) -> Result<CoreProgram, ElabError> {
    Ok(CoreProgram { defs: bs.iter().map(|(b, ev)| elaborate_binding(b, ev)).collect::<Result<_, _>>()? })
}

/// Types of the core-only token operations.
pub fn token_builtins() -> BTreeMap<&'static str, CScheme> {
    let l = linearly_token();
    BTreeMap::from([
        ("dupL", CScheme::mono(c_arrow(l.clone(), Mult::One, c_pair(l.clone(), l.clone())))),
        ("dropL", CScheme::mono(c_arrow(l, Mult::One, c_unit()))),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::lint_program;
    use crate::oracle::{infer, usage_check};
    use crate::prelude::prelude;
    use crate::syntax::parse_program;

    #[test]
    fn evidence_layout() {
        let c = Atom::nullary("C");
        let q = vec![(Mult::Many, c.clone()), (Mult::One, c.clone()), (Mult::One, Atom::linearly())];
        assert_eq!(evidence_type(&q).to_string(), "(Pair (Ur (tok C)) (Pair (tok C) (tok Linearly)))");
        assert_eq!(evidence_type(&[]).to_string(), "Unit");
    }

    fn tok_fn(arity: usize) -> CType {
        (0..arity).fold(c_unit(), |acc, _| c_arrow(linearly_token(), Mult::One, acc))
    }

    /// `\g -> body` linearised and linted.
    fn check_linearized(body: Term, ty: CType) -> Term {
        let mut fresh = 0;
        let lin = linearize("g", body, &mut fresh);
        let def = Def {
            name: "t".into(),
            scheme: CScheme::mono(c_arrow(linearly_token(), Mult::One, ty)),
            body: Term::Lam("g".into(), Mult::One, linearly_token(), Box::new(lin.clone())),
        };
        let env_def = Def {
            name: "use3".into(),
            scheme: CScheme::mono(tok_fn(3)),
            body: Term::Lam(
                "a".into(),
                Mult::One,
                linearly_token(),
                Box::new(Term::Lam(
                    "b".into(),
                    Mult::One,
                    linearly_token(),
                    Box::new(Term::Lam(
                        "c".into(),
                        Mult::One,
                        linearly_token(),
                        Box::new(Term::case1(
                            Term::app(Term::var("dropL"), Term::var("a")),
                            "()",
                            vec![],
                            Term::case1(
                                Term::app(Term::var("dropL"), Term::var("b")),
                                "()",
                                vec![],
                                Term::app(Term::var("dropL"), Term::var("c")),
                            ),
                        )),
                    )),
                )),
            ),
        };
        lint_program(&CoreProgram { defs: vec![env_def, def] }).unwrap_or_else(|e| panic!("{e}\n{lin}"));
        lin
    }

    #[test]
    fn linearize_copies_and_drops() {
        let g = || Term::var("g");
        let three = Term::app(Term::app(Term::app(Term::var("use3"), g()), g()), g());
        let lin = check_linearized(three, c_unit());
        assert_eq!(lin.to_string().matches("dupL").count(), 2);

        let unused = check_linearized(Term::unit(), c_unit());
        assert!(unused.to_string().contains("dropL g"));

        let b = CType::Con("Bool".into(), vec![]);
        let branchy = Term::Lam(
            "c".into(),
            Mult::Many,
            b.clone(),
            Box::new(Term::Case {
                mult: Mult::One,
                scrut: Box::new(Term::var("c")),
                alts: vec![
                    CAlt { con: "True".into(), vars: vec![], body: Term::app(Term::var("dropL"), g()) },
                    CAlt { con: "False".into(), vars: vec![], body: Term::unit() },
                ],
            }),
        );
        check_linearized(branchy, c_arrow(b, Mult::Many, c_unit()));
    }

    fn scale_many(q: &[(Mult, Atom)]) -> Vec<(Mult, Atom)> {
        q.iter().map(|(_, a)| (Mult::Many, a.clone())).collect()
    }

    #[test]
    fn coerce_ur_is_well_typed() {
        let c = Atom::nullary("C");
        assert_eq!(coerce_ur(Term::var("e"), &[(Mult::One, c.clone())], &mut 0), Term::var("e"));
        assert_eq!(coerce_ur(Term::var("e"), &[], &mut 0).to_string(), "(case 1 e\n  (Unit ((@ Ur Unit) Unit)))");
        let qs = vec![
            vec![],
            vec![(Mult::One, c.clone())],
            vec![(Mult::Many, c.clone())],
            vec![(Mult::Many, c.clone()), (Mult::One, c.clone()), (Mult::One, Atom::linearly())],
        ];
        for q in qs {
            let from = evidence_type(&scale_many(&q));
            let to = c_ur(evidence_type(&q));
            let body = coerce_ur(Term::var("e"), &q, &mut 0);
            let def = Def {
                name: "k".into(),
                scheme: CScheme::mono(c_arrow(from.clone(), Mult::One, to)),
                body: Term::Lam("e".into(), Mult::One, from, Box::new(body)),
            };
            lint_program(&CoreProgram { defs: vec![def] }).unwrap_or_else(|e| panic!("{q:?}: {e}"));
        }
    }

    #[test]
    fn missing_evidence_is_an_internal_error() {
        let prog = parse_program("f :: C =o Int\nf = useC\n").unwrap();
        let mut bs = infer(&prog, &prelude()).unwrap();
        usage_check(&mut bs[0]).unwrap();
        let err = elaborate_binding(&bs[0], &EvidenceMap::new()).unwrap_err();
        assert_eq!(err.class(), "InternalError");
        assert!(matches!(err, ElabError::UnmappedSite(s) if s.starts_with("f:")));
    }
}
