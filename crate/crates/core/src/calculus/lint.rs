//! Type and linearity checking for core programs.

use std::collections::{BTreeMap, BTreeSet};

use super::builtins::builtins;
use super::{c_arrow, c_pair, c_ur, is_free_ctype, CAlt, CType, CoreProgram, Term};
use crate::constraint::Mult;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LintError {
    #[error("in `{def}`: unbound variable `{name}`")]
    Unbound { def: String, name: String },
    #[error("in `{def}`: {msg}")]
    Type { def: String, msg: String },
    #[error("in `{def}`: {msg}")]
    Linearity { def: String, msg: String },
}

impl LintError {
    pub fn class(&self) -> &'static str {
        match self {
            LintError::Unbound { .. } => "LintUnbound",
            LintError::Type { .. } => "LintType",
            LintError::Linearity { .. } => "LintLinearity",
        }
    }
}

type Usage = BTreeMap<String, Mult>;

fn add(mut a: Usage, b: Usage) -> Usage {
    for (k, _) in b {
        a.entry(k).and_modify(|m| *m = Mult::Many).or_insert(Mult::One);
    }
    a
}

fn scale(m: Mult, u: Usage) -> Usage {
    match m {
        Mult::One => u,
        Mult::Many => u.into_keys().map(|k| (k, Mult::Many)).collect(),
    }
}

fn forall(vars: &[String], ty: &CType) -> CType {
    if vars.is_empty() {
        ty.clone()
    } else {
        CType::Forall(vars.to_vec(), Box::new(ty.clone()))
    }
}

struct Local {
    name: String,
    mult: Mult,
    ty: CType,
}

struct Linter<'a> {
    def: String,
    globals: &'a BTreeMap<String, CType>,
    locals: Vec<Local>,
}

type R<T> = Result<T, LintError>;

impl Linter<'_> {
    fn type_err<T>(&self, msg: String) -> R<T> {
        Err(LintError::Type { def: self.def.clone(), msg })
    }

    fn lin_err<T>(&self, msg: String) -> R<T> {
        Err(LintError::Linearity { def: self.def.clone(), msg })
    }

    fn expect(&self, what: &str, want: &CType, got: &CType) -> R<()> {
        if want.alpha_eq(got) {
            Ok(())
        } else {
            self.type_err(format!("{what}: expected `{want}`, found `{got}`"))
        }
    }

    /// Check `body` with `binds` in scope and remove them from its usage,
    /// enforcing that linear binders are used exactly once.
    fn under(&mut self, binds: Vec<(String, Mult, CType)>, body: &Term) -> R<(CType, Usage)> {
        let n = binds.len();
        for (name, mult, ty) in binds.iter().cloned() {
            self.locals.push(Local { name, mult, ty });
        }
        let r = self.term(body);
        self.locals.truncate(self.locals.len() - n);
        let (ty, mut u) = r?;
        let mut seen = BTreeSet::new();
        // Later binders shadow earlier ones.
        for (name, mult, t) in binds.iter().rev() {
            if !seen.insert(name.clone()) {
                continue;
            }
            let used = u.remove(name);
            if *mult == Mult::One && !is_free_ctype(t) {
                match used {
                    Some(Mult::One) => {}
                    None => return self.lin_err(format!("linear variable `{name}` is never used")),
                    Some(Mult::Many) => return self.lin_err(format!("linear variable `{name}` is used more than once")),
                }
            }
        }
        Ok((ty, u))
    }

    fn linear_in_scope(&self, x: &str) -> bool {
        self.locals
            .iter()
            .rev()
            .find(|l| l.name == x)
            .map(|l| l.mult == Mult::One && !is_free_ctype(&l.ty))
            .unwrap_or(false)
    }

    fn join(&self, a: Usage, b: Usage) -> R<Usage> {
        let keys: BTreeSet<String> = a.keys().chain(b.keys()).cloned().collect();
        let mut out = Usage::new();
        for k in keys {
            let (x, y) = (a.get(&k), b.get(&k));
            if self.linear_in_scope(&k) && x != y {
                return self.lin_err(format!("case branches disagree on the use of `{k}`"));
            }
            let m = match (x, y) {
                (Some(Mult::Many), _) | (_, Some(Mult::Many)) => Mult::Many,
                _ => Mult::One,
            };
            out.insert(k, m);
        }
        Ok(out)
    }

    fn instantiate(&self, name: &str, ty: &CType, inst: &[CType]) -> R<CType> {
        match (ty, inst) {
            (t, []) => Ok(t.clone()),
            (CType::Forall(vs, body), inst) if vs.len() == inst.len() => {
                let s = vs.iter().cloned().zip(inst.iter().cloned()).collect();
                Ok(body.subst(&s))
            }
            _ => self.type_err(format!("`{name}` of type `{ty}` applied to {} type arguments", inst.len())),
        }
    }

    fn con_type(&self, c: &str, inst: &[CType]) -> R<CType> {
        Ok(match (c, inst) {
            ("()", []) => CType::Con("()".into(), vec![]),
            ("True" | "False", []) => CType::Con("Bool".into(), vec![]),
            ("(,)", [a, b]) => c_arrow(a.clone(), Mult::One, c_arrow(b.clone(), Mult::One, c_pair(a.clone(), b.clone()))),
            ("Ur", [a]) => c_arrow(a.clone(), Mult::Many, c_ur(a.clone())),
            _ => return self.type_err(format!("constructor `{c}` with {} type arguments", inst.len())),
        })
    }

    /// Fields of a constructor pattern matched against `scrut`.
    fn fields(&self, alt: &CAlt, scrut: &CType) -> R<Vec<(CType, Mult)>> {
        let fields = match (alt.con.as_str(), scrut) {
            ("()", CType::Con(n, a)) if n == "()" && a.is_empty() => vec![],
            ("True" | "False", CType::Con(n, a)) if n == "Bool" && a.is_empty() => vec![],
            ("(,)", CType::Con(n, a)) if n == "(,)" && a.len() == 2 => {
                vec![(a[0].clone(), Mult::One), (a[1].clone(), Mult::One)]
            }
            ("Ur", CType::Con(n, a)) if n == "Ur" && a.len() == 1 => vec![(a[0].clone(), Mult::Many)],
            _ => return self.type_err(format!("pattern `{}` does not match `{scrut}`", alt.con)),
        };
        if fields.len() != alt.vars.len() {
            return self.type_err(format!("pattern `{}` binds {} variables", alt.con, alt.vars.len()));
        }
        Ok(fields)
    }

    fn term(&mut self, t: &Term) -> R<(CType, Usage)> {
        match t {
            Term::Var(x, inst) => {
                if let Some(l) = self.locals.iter().rev().find(|l| &l.name == x) {
                    let ty = self.instantiate(x, &l.ty, inst)?;
                    return Ok((ty, Usage::from([(x.clone(), Mult::One)])));
                }
                match self.globals.get(x) {
                    Some(ty) => Ok((self.instantiate(x, ty, inst)?, Usage::new())),
                    None => Err(LintError::Unbound { def: self.def.clone(), name: x.clone() }),
                }
            }
            Term::Con(c, inst) => Ok((self.con_type(c, inst)?, Usage::new())),
            Term::Lit(_) => Ok((CType::Con("Int".into(), vec![]), Usage::new())),
            Term::Lam(x, m, ty, body) => {
                let (rt, u) = self.under(vec![(x.clone(), *m, ty.clone())], body)?;
                Ok((c_arrow(ty.clone(), *m, rt), u))
            }
            Term::TyLam(vs, body) => {
                let (ty, u) = self.term(body)?;
                Ok((CType::Forall(vs.clone(), Box::new(ty)), u))
            }
            Term::App(f, a) => {
                let (ft, uf) = self.term(f)?;
                let CType::Arrow(want, m, res) = ft else {
                    return self.type_err(format!("applying a non-function of type `{ft}`"));
                };
                let (at, ua) = self.term(a)?;
                self.expect("argument", &want, &at)?;
                Ok((*res, add(uf, scale(m, ua))))
            }
            Term::Pack { witnesses, ty, ev, val } => {
                let CType::Exists(bs, v, e) = ty else {
                    return self.type_err(format!("package of non-existential type `{ty}`"));
                };
                if bs.len() != witnesses.len() {
                    return self.type_err(format!("package of `{ty}` with {} witnesses", witnesses.len()));
                }
                let s = bs.iter().cloned().zip(witnesses.iter().cloned()).collect();
                let (et, ue) = self.term(ev)?;
                self.expect("package evidence", &e.subst(&s), &et)?;
                let (vt, uv) = self.term(val)?;
                self.expect("package value", &v.subst(&s), &vt)?;
                Ok((ty.clone(), add(ue, uv)))
            }
            Term::Unpack { tyvars, ev, var, rhs, body } => {
                let (rt, ur) = self.term(rhs)?;
                let CType::Exists(bs, v, e) = &rt else {
                    return self.type_err(format!("unpacking a non-package of type `{rt}`"));
                };
                if bs.len() != tyvars.len() {
                    return self.type_err(format!("unpacking `{rt}` with {} type variables", tyvars.len()));
                }
                let s = bs.iter().cloned().zip(tyvars.iter().map(|v| CType::Var(v.clone()))).collect();
                let binds = vec![(ev.clone(), Mult::One, e.subst(&s)), (var.clone(), Mult::One, v.subst(&s))];
                let (bt, ub) = self.under(binds, body)?;
                let mut fv = BTreeSet::new();
                bt.free_vars(&mut fv);
                if let Some(k) = tyvars.iter().find(|k| fv.contains(*k)) {
                    return self.type_err(format!("unpacked type variable `{k}` escapes in `{bt}`"));
                }
                Ok((bt, add(ur, ub)))
            }
            Term::Case { mult, scrut, alts } => {
                let (st, us) = self.term(scrut)?;
                let mut result: Option<(CType, Usage)> = None;
                for alt in alts {
                    let fields = self.fields(alt, &st)?;
                    let binds = alt.vars.iter().zip(fields).map(|(x, (t, m))| (x.clone(), mult.mul(m), t)).collect();
                    let (bt, ub) = self.under(binds, &alt.body)?;
                    result = Some(match result {
                        None => (bt, ub),
                        Some((t0, u0)) => {
                            self.expect("case branch", &t0, &bt)?;
                            (t0, self.join(u0, ub)?)
                        }
                    });
                }
                let Some((ty, ub)) = result else {
                    return self.type_err("case with no alternatives".into());
                };
                Ok((ty, add(scale(*mult, us), ub)))
            }
            Term::Let { mult, rec, var, scheme, rhs, body } => {
                let full = forall(&scheme.vars, &scheme.ty);
                let (rt, ur) = if *rec {
                    if *mult != Mult::Many {
                        return self.type_err(format!("recursive binding `{var}` must be unrestricted"));
                    }
                    let (rt, mut ur) = self.under_keep(var, &full, rhs)?;
                    ur.remove(var);
                    (rt, ur)
                } else {
                    self.term(rhs)?
                };
                self.expect(&format!("right-hand side of `{var}`"), &scheme.ty, &rt)?;
                let (bt, ub) = self.under(vec![(var.clone(), *mult, full)], body)?;
                Ok((bt, add(scale(*mult, ur), ub)))
            }
        }
    }

    /// Check `t` with `x` bound unrestrictedly, leaving its usage in place.
    fn under_keep(&mut self, x: &str, ty: &CType, t: &Term) -> R<(CType, Usage)> {
        self.locals.push(Local { name: x.into(), mult: Mult::Many, ty: ty.clone() });
        let r = self.term(t);
        self.locals.pop();
        r
    }
}

pub fn lint_program(p: &CoreProgram) -> Result<(), LintError> {
    let mut globals: BTreeMap<String, CType> =
        builtins().into_iter().map(|(n, b)| (n, forall(&b.scheme.vars, &b.scheme.ty))).collect();
    for d in &p.defs {
        globals.insert(d.name.clone(), forall(&d.scheme.vars, &d.scheme.ty));
    }
    for d in &p.defs {
        let mut l = Linter { def: d.name.clone(), globals: &globals, locals: vec![] };
        let (ty, u) = l.term(&d.body)?;
        l.expect("definition body", &d.scheme.ty, &ty)?;
        debug_assert!(u.is_empty(), "free locals at top level");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{c_unit, linearly_token, CScheme, Def};

    fn prog(name: &str, ty: CType, body: Term) -> CoreProgram {
        CoreProgram { defs: vec![Def { name: name.into(), scheme: CScheme::mono(ty), body }] }
    }

    #[test]
    fn unused_linear_binder_is_rejected() {
        let t = linearly_token();
        let p = prog("f", c_arrow(t.clone(), Mult::One, c_unit()), Term::Lam("x".into(), Mult::One, t, Box::new(Term::unit())));
        assert_eq!(lint_program(&p).unwrap_err().class(), "LintLinearity");
    }

    #[test]
    fn token_used_twice_is_rejected() {
        let t = linearly_token();
        let body = Term::Lam(
            "x".into(),
            Mult::One,
            t.clone(),
            Box::new(Term::pair(t.clone(), t.clone(), Term::var("x"), Term::var("x"))),
        );
        let p = prog("f", c_arrow(t.clone(), Mult::One, c_pair(t.clone(), t)), body);
        assert_eq!(lint_program(&p).unwrap_err().class(), "LintLinearity");
    }

    #[test]
    fn duplicating_with_the_builtin_is_fine() {
        let t = linearly_token();
        let body = Term::Lam("x".into(), Mult::One, t.clone(), Box::new(Term::app(Term::var("dupL"), Term::var("x"))));
        let p = prog("f", c_arrow(t.clone(), Mult::One, c_pair(t.clone(), t)), body);
        lint_program(&p).unwrap();
    }

    #[test]
    fn integers_are_exempt() {
        let int = CType::Con("Int".into(), vec![]);
        let plus = Term::app(Term::app(Term::app(Term::var("+"), Term::unit()), Term::var("x")), Term::var("x"));
        let p = prog("f", c_arrow(int.clone(), Mult::One, int.clone()), Term::Lam("x".into(), Mult::One, int, Box::new(plus)));
        lint_program(&p).unwrap();
    }

    #[test]
    fn unbound_and_ill_typed() {
        let p = prog("f", c_unit(), Term::var("nope"));
        assert_eq!(lint_program(&p).unwrap_err().class(), "LintUnbound");
        let p = prog("f", c_unit(), Term::Lit(3));
        assert_eq!(lint_program(&p).unwrap_err().class(), "LintType");
    }

    #[test]
    fn branches_must_agree_on_linear_variables() {
        let t = linearly_token();
        let b = CType::Con("Bool".into(), vec![]);
        let drop = Term::app(Term::var("dropL"), Term::var("x"));
        let case = Term::Case {
            mult: Mult::One,
            scrut: Box::new(Term::var("c")),
            alts: vec![
                CAlt { con: "True".into(), vars: vec![], body: drop },
                CAlt { con: "False".into(), vars: vec![], body: Term::unit() },
            ],
        };
        let body = Term::Lam(
            "c".into(),
            Mult::Many,
            b.clone(),
            Box::new(Term::Lam("x".into(), Mult::One, t.clone(), Box::new(case))),
        );
        let ty = c_arrow(b, Mult::Many, c_arrow(t, Mult::One, c_unit()));
        assert_eq!(lint_program(&prog("f", ty, body)).unwrap_err().class(), "LintLinearity");
    }
}
