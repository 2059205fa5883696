use std::collections::{BTreeMap, BTreeSet};

use super::desugar::{desugar, lambdas, Fresh};
use super::*;
use crate::prelude::{generalize, SignatureTable};
use crate::syntax::{Decl, Expr, ExprKind, Pat, Program};
use crate::types::{self, subst_spec};

type R<T> = Result<T, TypeError>;

/// Type-check every top-level binding, in source order.
pub fn infer(program: &Program, prelude: &SignatureTable) -> R<Vec<Binding>> {
    let mut sigs: BTreeMap<String, Scheme> = BTreeMap::new();
    for d in &program.decls {
        if let Decl::Sig { name, scheme, span } = d {
            let s = generalize(scheme.clone());
            check_type_names(&s.body, &s.assume, *span)?;
            sigs.insert(name.clone(), s);
        }
    }
    let mut out = Vec::new();
    for d in &program.decls {
        let Decl::Bind { name, params, body, span } = d else { continue };
        let scheme = sigs.get(name).cloned();
        if scheme.is_none() && name != "main" {
            return Err(TypeError::MissingSignature { name: name.clone(), span: *span });
        }
        let mut cx = Cx::new(prelude, &sigs);
        let mut fresh = Fresh(0);
        let kernel = desugar(&lambdas(params, body.clone(), *span), &mut fresh);
        cx.fresh = fresh.0;
        let (deriv, assume) = match &scheme {
            Some(s) => {
                for v in &s.vars {
                    cx.tyvars.push((v.clone(), Type::Var(v.clone())));
                }
                (cx.go(&kernel, Some(&s.body))?, s.assume.clone())
            }
            None => (cx.go(&kernel, None)?, vec![]),
        };
        let mut deriv = cx.zonk_deriv(deriv)?;
        let mut imp = ImplInfo { id: format!("{name}:top"), skolems: vec![], assume, givens: vec![] };
        let mut num = Numbering { binding: name.clone(), given: 0 };
        num.impl_info(&mut imp);
        num.walk(&mut deriv, "e");
        out.push(Binding { name: name.clone(), span: *span, scheme, body: deriv, imp });
    }
    Ok(out)
}

const KNOWN_TYPES: &[(&str, usize)] =
    &[("Int", 0), ("Bool", 0), ("()", 0), ("(,)", 2), ("Ur", 1), ("PArray", 2), ("AtomRef", 2)];

fn check_type_names(t: &Type, q: &CSpec, span: Span) -> R<()> {
    fn go(t: &Type, span: Span) -> R<()> {
        match t {
            Type::Var(_) | Type::Meta(_) => Ok(()),
            Type::Con(n, a) => {
                match KNOWN_TYPES.iter().find(|(k, _)| k == n) {
                    Some((_, arity)) if a.len() <= *arity => {}
                    Some(_) => {
                        return Err(TypeError::UnificationFailure {
                            expected: format!("at most the declared arguments of `{n}`"),
                            actual: t.to_string(),
                            span,
                        })
                    }
                    None => return Err(TypeError::UnboundVariable { what: "type constructor", name: n.clone(), span }),
                }
                a.iter().try_for_each(|x| go(x, span))
            }
            Type::App(h, a) => {
                go(h, span)?;
                a.iter().try_for_each(|x| go(x, span))
            }
            Type::Arrow(a, _, r) => {
                match &**a {
                    ArgType::Plain(t) => go(t, span)?,
                    ArgType::Qual(qa) => check_type_names(&qa.body, &qa.assume, span)?,
                }
                go(r, span)
            }
            Type::Exists(_, b, q) => check_type_names(b, q, span),
        }
    }
    go(t, span)?;
    q.iter().flat_map(|(_, a)| a.args.iter()).try_for_each(|x| go(x, span))
}

#[derive(Clone)]
struct Local {
    scheme: Scheme,
    qualified: bool,
}

struct Cx<'a> {
    prelude: &'a SignatureTable,
    globals: &'a BTreeMap<String, Scheme>,
    metas: Vec<Option<Type>>,
    locals: Vec<(String, Local)>,
    tyvars: Vec<(String, Type)>,
    fresh: u32,
}

fn bx(d: Deriv) -> Box<Deriv> {
    Box::new(d)
}

fn node(node: Node, ty: Type, span: Span) -> Deriv {
    Deriv { node, ty, span, usage: BTreeMap::new() }
}

impl<'a> Cx<'a> {
    fn new(prelude: &'a SignatureTable, globals: &'a BTreeMap<String, Scheme>) -> Self {
        Cx { prelude, globals, metas: vec![], locals: vec![], tyvars: vec![], fresh: 0 }
    }

    fn meta(&mut self) -> Type {
        self.metas.push(None);
        Type::Meta(self.metas.len() as u32 - 1)
    }

    fn skolem(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}#{}", self.fresh)
    }

    fn zonk(&self, t: &Type) -> Type {
        t.map_metas(&mut |m| self.metas[m as usize].clone())
    }

    fn zonk_spec(&self, q: &CSpec) -> CSpec {
        q.iter().map(|(m, a)| (*m, a.map_types(&mut |t| self.zonk(t)))).collect()
    }

    fn zonk_arg(&self, a: &ArgType) -> ArgType {
        a.map_metas(&mut |m| self.metas[m as usize].clone())
    }

    // ------------------------------------------------------------ unification

    fn unify(&mut self, expected: &Type, actual: &Type, span: Span) -> R<()> {
        if self.unify_inner(expected, actual) {
            Ok(())
        } else {
            Err(TypeError::UnificationFailure {
                expected: self.zonk(expected).to_string(),
                actual: self.zonk(actual).to_string(),
                span,
            })
        }
    }

    fn bind(&mut self, m: u32, t: Type) -> bool {
        let mut ms = BTreeSet::new();
        t.metas(&mut ms);
        if ms.contains(&m) {
            return false;
        }
        self.metas[m as usize] = Some(t);
        true
    }

    fn unify_inner(&mut self, a: &Type, b: &Type) -> bool {
        let (a, b) = (self.zonk(a), self.zonk(b));
        match (&a, &b) {
            (Type::Meta(m), Type::Meta(n)) if m == n => true,
            (Type::Meta(m), t) | (t, Type::Meta(m)) => self.bind(*m, t.clone()),
            (Type::Var(x), Type::Var(y)) => x == y,
            (Type::Con(n, xs), Type::Con(m, ys)) => n == m && self.unify_all(xs, ys),
            (Type::App(h, xs), Type::App(g, ys)) => self.unify_inner(h, g) && self.unify_all(xs, ys),
            (Type::App(h, xs), Type::Con(n, ys)) | (Type::Con(n, ys), Type::App(h, xs)) => {
                if ys.len() < xs.len() {
                    return false;
                }
                let k = ys.len() - xs.len();
                let head = Type::Con(n.clone(), ys[..k].to_vec());
                self.unify_inner(h, &head) && self.unify_all(xs, &ys[k..])
            }
            (Type::Arrow(a1, m1, r1), Type::Arrow(a2, m2, r2)) => {
                m1 == m2 && self.unify_arg(a1, a2) && self.unify_inner(r1, r2)
            }
            (Type::Exists(b1, t1, q1), Type::Exists(b2, t2, q2)) => {
                if b1.len() != b2.len() {
                    return false;
                }
                let s = rename(b2, b1);
                self.unify_inner(t1, &t2.subst(&s)) && self.unify_spec(q1, &subst_spec(q2, &s))
            }
            _ => false,
        }
    }

    fn unify_all(&mut self, xs: &[Type], ys: &[Type]) -> bool {
        xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| self.unify_inner(x, y))
    }

    fn unify_spec(&mut self, q1: &CSpec, q2: &CSpec) -> bool {
        q1.len() == q2.len()
            && q1.iter().zip(q2).all(|((m1, a1), (m2, a2))| {
                m1 == m2 && a1.name == a2.name && self.unify_all(&a1.args, &a2.args)
            })
    }

    fn unify_arg(&mut self, a: &ArgType, b: &ArgType) -> bool {
        match (a, b) {
            (ArgType::Plain(x), ArgType::Plain(y)) => self.unify_inner(x, y),
            (ArgType::Qual(x), ArgType::Qual(y)) => {
                if x.binders.len() != y.binders.len() {
                    return false;
                }
                let s = rename(&y.binders, &x.binders);
                self.unify_spec(&x.assume, &subst_spec(&y.assume, &s)) && self.unify_inner(&x.body, &y.body.subst(&s))
            }
            _ => false,
        }
    }

    // ------------------------------------------------------------ scopes

    fn lookup_local(&self, x: &str) -> Option<&Local> {
        self.locals.iter().rev().find(|(n, _)| n == x).map(|(_, l)| l)
    }

    fn tyvar_in_scope(&self, v: &str) -> Option<&Type> {
        self.tyvars.iter().rev().find(|(n, _)| n == v).map(|(_, t)| t)
    }

    /// Rewrite source type-variable names to the rigid types they denote.
    fn scope_subst(&self, names: &BTreeSet<String>, span: Span) -> R<BTreeMap<String, Type>> {
        names
            .iter()
            .map(|n| match self.tyvar_in_scope(n) {
                Some(t) => Ok((n.clone(), t.clone())),
                None => Err(TypeError::UnboundVariable { what: "type variable", name: n.clone(), span }),
            })
            .collect()
    }

    fn resolve_type(&self, t: &Type, span: Span) -> R<Type> {
        check_type_names(t, &vec![], span)?;
        let mut fv = BTreeSet::new();
        t.free_vars(&mut fv);
        Ok(t.subst(&self.scope_subst(&fv, span)?))
    }

    /// A local signature quantifies the variables it mentions that are not in scope.
    fn resolve_scheme(&mut self, s: &Scheme, span: Span) -> R<(Scheme, Vec<(String, Type)>)> {
        check_type_names(&s.body, &s.assume, span)?;
        let mut quantified: Vec<String> = s.vars.clone();
        for v in s.free_vars() {
            if self.tyvar_in_scope(&v).is_none() && !quantified.contains(&v) {
                quantified.push(v);
            }
        }
        let mut sub = BTreeMap::new();
        let mut binds = vec![];
        let mut vars = vec![];
        for v in &quantified {
            let rigid = if self.tyvar_in_scope(v).is_some() { self.skolem(v) } else { v.clone() };
            sub.insert(v.clone(), Type::Var(rigid.clone()));
            binds.push((v.clone(), Type::Var(rigid.clone())));
            vars.push(rigid);
        }
        let mut fv = s.free_vars();
        fv.retain(|v| !quantified.contains(v));
        sub.extend(self.scope_subst(&fv, span)?);
        let scheme = Scheme { vars, assume: subst_spec(&s.assume, &sub), body: s.body.subst(&sub) };
        Ok((scheme, binds))
    }

    fn instantiate(&mut self, s: &Scheme) -> (Vec<Type>, CSpec, Type) {
        let inst: Vec<Type> = s.vars.iter().map(|_| self.meta()).collect();
        let sub: BTreeMap<String, Type> = s.vars.iter().cloned().zip(inst.iter().cloned()).collect();
        (inst, subst_spec(&s.assume, &sub), s.body.subst(&sub))
    }

    // ------------------------------------------------------------ checking

    fn finish(&mut self, d: Deriv, exp: Option<&Type>) -> R<Deriv> {
        if let Some(t) = exp {
            self.unify(t, &d.ty, d.span)?;
        }
        Ok(d)
    }

    fn go(&mut self, e: &Expr, exp: Option<&Type>) -> R<Deriv> {
        let sp = e.span;
        match &e.kind {
            ExprKind::Var(x) => {
                let d = self.var(x, sp)?;
                self.finish(d, exp)
            }
            ExprKind::Con(c) => {
                let (vars, fields, res) = con_sig(c).ok_or_else(|| TypeError::UnboundVariable {
                    what: "constructor",
                    name: c.clone(),
                    span: sp,
                })?;
                let inst: Vec<Type> = vars.iter().map(|_| self.meta()).collect();
                let sub: BTreeMap<String, Type> = vars.iter().map(|v| v.to_string()).zip(inst.iter().cloned()).collect();
                let ty = fields.iter().rev().fold(res.subst(&sub), |acc, (t, m)| types::arrow(t.subst(&sub), *m, acc));
                let d = node(Node::Con { name: c.clone(), inst }, ty, sp);
                self.finish(d, exp)
            }
            ExprKind::Int(n) => self.finish(node(Node::Lit(*n), types::int(), sp), exp),
            ExprKind::Lam(ps, body) => {
                let target = match exp {
                    Some(t) => self.zonk(t),
                    None => self.meta(),
                };
                let target = if let Type::Meta(_) = target {
                    let (a, r) = (self.meta(), self.meta());
                    let arr = types::arrow(a, Mult::One, r);
                    self.unify(&target, &arr, sp)?;
                    arr
                } else {
                    target
                };
                let Type::Arrow(arg, mult, res) = &target else {
                    return Err(TypeError::UnificationFailure {
                        expected: target.to_string(),
                        actual: "a function".into(),
                        span: sp,
                    });
                };
                let local = match &**arg {
                    ArgType::Plain(t) => Local { scheme: Scheme::mono(t.clone()), qualified: false },
                    ArgType::Qual(q) => Local { scheme: q.as_scheme(), qualified: true },
                };
                self.locals.push((ps[0].clone(), local));
                let body = self.go(body, Some(res));
                self.locals.pop();
                let body = body?;
                let d = Node::Abs { param: ps[0].clone(), mult: *mult, arg: (**arg).clone(), body: bx(body) };
                Ok(node(d, target.clone(), sp))
            }
            ExprKind::App(f, a) => {
                let df = self.go(f, None)?;
                let mut fty = self.zonk(&df.ty);
                if let Type::Meta(_) = fty {
                    let arr = types::arrow(self.meta(), Mult::One, self.meta());
                    self.unify(&arr, &fty, sp)?;
                    fty = arr;
                }
                let Type::Arrow(arg, mult, res) = fty else {
                    return Err(TypeError::UnificationFailure {
                        expected: "a function".into(),
                        actual: fty.to_string(),
                        span: f.span,
                    });
                };
                let (da, imp) = match &*arg {
                    ArgType::Plain(t) => (self.go(a, Some(t))?, None),
                    ArgType::Qual(q) => {
                        let sk: Vec<String> = q.binders.iter().map(|b| self.skolem(b)).collect();
                        let s = rename(&q.binders, &sk);
                        let body = q.body.subst(&s);
                        let da = self.go(a, Some(&body))?;
                        let imp = ImplInfo { skolems: sk, assume: subst_spec(&q.assume, &s), ..Default::default() };
                        (da, Some(imp))
                    }
                };
                let d = node(Node::App { fun: bx(df), arg: bx(da), mult, imp }, *res, sp);
                self.finish(d, exp)
            }
            ExprKind::Pack(body) => {
                let target = exp.map(|t| self.zonk(t));
                let Some(Type::Exists(bs, t, q)) = &target else {
                    return Err(TypeError::AmbiguousInstantiation {
                        what: match target {
                            Some(t) if !matches!(t, Type::Meta(_)) => {
                                return Err(TypeError::UnificationFailure {
                                    expected: t.to_string(),
                                    actual: "a package".into(),
                                    span: sp,
                                })
                            }
                            _ => "the package type of `pack`; add a signature or annotation".into(),
                        },
                        span: sp,
                    });
                };
                let witnesses: Vec<Type> = bs.iter().map(|_| self.meta()).collect();
                let s: BTreeMap<String, Type> = bs.iter().cloned().zip(witnesses.iter().cloned()).collect();
                let db = self.go(body, Some(&t.subst(&s)))?;
                let payload = subst_spec(q, &s);
                let d = Node::Pack { body: bx(db), witnesses, payload, sites: vec![] };
                Ok(node(d, target.clone().unwrap(), sp))
            }
            ExprKind::LetPack(pat, rhs, body) => {
                let crate::syntax::PackPat::Var(x) = pat else { unreachable!("desugared") };
                let dr = self.go(rhs, None)?;
                let rty = self.zonk(&dr.ty);
                let Type::Exists(bs, t, q) = &rty else {
                    return Err(match rty {
                        Type::Meta(_) => TypeError::AmbiguousInstantiation {
                            what: "the package type being unpacked; add an annotation".into(),
                            span: rhs.span,
                        },
                        other => TypeError::UnificationFailure {
                            expected: "a package".into(),
                            actual: other.to_string(),
                            span: rhs.span,
                        },
                    });
                };
                let sk: Vec<String> = bs.iter().map(|b| self.skolem(b)).collect();
                let s = rename(bs, &sk);
                let depth = self.tyvars.len();
                for (b, k) in bs.iter().zip(&sk) {
                    self.tyvars.push((b.clone(), Type::Var(k.clone())));
                }
                let var_ty = t.subst(&s);
                self.locals.push((x.clone(), Local { scheme: Scheme::mono(var_ty.clone()), qualified: false }));
                let db = self.go(body, exp);
                self.locals.pop();
                self.tyvars.truncate(depth);
                let db = db?;
                let mut fv = BTreeSet::new();
                self.zonk(&db.ty).free_vars(&mut fv);
                if let Some(k) = sk.iter().find(|k| fv.contains(*k)) {
                    return Err(TypeError::UnificationFailure {
                        expected: format!("a type not mentioning the unpacked variable `{k}`"),
                        actual: self.zonk(&db.ty).to_string(),
                        span: sp,
                    });
                }
                let imp = ImplInfo { skolems: sk, assume: subst_spec(q, &s), ..Default::default() };
                let ty = db.ty.clone();
                Ok(node(Node::Unpack { var: x.clone(), var_ty, rhs: bx(dr), body: bx(db), imp }, ty, sp))
            }
            ExprKind::Let { mult, name, sig: None, rhs, body } => {
                let dr = self.go(rhs, None)?;
                let local = Local { scheme: Scheme::mono(dr.ty.clone()), qualified: false };
                self.locals.push((name.clone(), local));
                let db = self.go(body, exp);
                self.locals.pop();
                let db = db?;
                let ty = db.ty.clone();
                Ok(node(Node::Let { mult: *mult, var: name.clone(), rhs: bx(dr), body: bx(db) }, ty, sp))
            }
            ExprKind::Let { mult, name, sig: Some(sig), rhs, body } => {
                let (scheme, binds) = self.resolve_scheme(sig, sp)?;
                let rec = *mult == Mult::Many;
                let local = Local { scheme: scheme.clone(), qualified: true };
                let depth = self.tyvars.len();
                self.tyvars.extend(binds);
                if rec {
                    self.locals.push((name.clone(), local.clone()));
                }
                let dr = self.go(rhs, Some(&scheme.body));
                if rec {
                    self.locals.pop();
                }
                self.tyvars.truncate(depth);
                let dr = dr?;
                self.locals.push((name.clone(), local));
                let db = self.go(body, exp);
                self.locals.pop();
                let db = db?;
                let ty = db.ty.clone();
                let imp = ImplInfo { skolems: scheme.vars.clone(), assume: scheme.assume.clone(), ..Default::default() };
                let n = Node::LetSig { mult: *mult, var: name.clone(), rec, scheme, rhs: bx(dr), body: bx(db), imp };
                Ok(node(n, ty, sp))
            }
            ExprKind::Case { mult, scrut, alts } => {
                let ds = self.go(scrut, None)?;
                let result = match exp {
                    Some(t) => t.clone(),
                    None => self.meta(),
                };
                let mut dalts = vec![];
                for alt in alts {
                    let (con, vars) = match &alt.pat {
                        Pat::Unit => ("()".to_string(), vec![]),
                        Pat::Tuple(x, y) => ("(,)".to_string(), vec![x.clone(), y.clone()]),
                        Pat::Con(c, vs) => (c.clone(), vs.clone()),
                    };
                    let (tvs, fields, res) = con_sig(&con).ok_or_else(|| TypeError::UnboundVariable {
                        what: "constructor",
                        name: con.clone(),
                        span: alt.body.span,
                    })?;
                    if fields.len() != vars.len() {
                        return Err(TypeError::UnificationFailure {
                            expected: format!("{} field(s) for `{con}`", fields.len()),
                            actual: format!("{} pattern variable(s)", vars.len()),
                            span: sp,
                        });
                    }
                    let inst: Vec<Type> = tvs.iter().map(|_| self.meta()).collect();
                    let sub: BTreeMap<String, Type> =
                        tvs.iter().map(|v| v.to_string()).zip(inst.iter().cloned()).collect();
                    self.unify(&res.subst(&sub), &ds.ty, scrut.span)?;
                    let field_tys: Vec<Type> = fields.iter().map(|(t, _)| t.subst(&sub)).collect();
                    let field_mults: Vec<Mult> = fields.iter().map(|(_, m)| *m).collect();
                    for (v, t) in vars.iter().zip(&field_tys) {
                        let local = Local { scheme: Scheme::mono(t.clone()), qualified: false };
                        self.locals.push((v.clone(), local));
                    }
                    let body = self.go(&alt.body, Some(&result));
                    self.locals.truncate(self.locals.len() - vars.len());
                    dalts.push(DAlt { con, vars, field_mults, field_tys, body: body? });
                }
                Ok(node(Node::Case { mult: *mult, scrut: bx(ds), alts: dalts }, result, sp))
            }
            ExprKind::Annot(x, t) => {
                let t = self.resolve_type(t, sp)?;
                let d = self.go(x, Some(&t))?;
                self.finish(d, exp)
            }
            _ => unreachable!("not a kernel expression"),
        }
    }

    fn var(&mut self, x: &str, sp: Span) -> R<Deriv> {
        let (source, scheme) = if let Some(l) = self.lookup_local(x) {
            let src = if l.qualified { VarSource::LocalScheme } else { VarSource::Local };
            (src, l.scheme.clone())
        } else if let Some(s) = self.globals.get(x) {
            (VarSource::Global, s.clone())
        } else if let Some(p) = self.prelude.get(x) {
            (VarSource::Prelude, p.scheme.clone())
        } else {
            return Err(TypeError::UnboundVariable { what: "variable", name: x.to_string(), span: sp });
        };
        let (inst, wanted, ty) = self.instantiate(&scheme);
        let n = Node::Var { name: x.to_string(), source, inst, wanted, sites: vec![] };
        Ok(node(n, ty, sp))
    }

    // ------------------------------------------------------------ zonking

    fn ground(&self, t: &Type, span: Span, what: &str) -> R<Type> {
        let z = self.zonk(t);
        if z.has_metas() {
            return Err(TypeError::AmbiguousInstantiation { what: format!("{what} (`{z}`)"), span });
        }
        Ok(z)
    }

    fn ground_spec(&self, q: &CSpec, span: Span) -> R<CSpec> {
        let z = self.zonk_spec(q);
        for (_, a) in &z {
            for t in &a.args {
                if t.has_metas() {
                    return Err(TypeError::AmbiguousInstantiation { what: format!("the constraint `{a}`"), span });
                }
            }
        }
        Ok(z)
    }

    fn zonk_deriv(&self, mut d: Deriv) -> R<Deriv> {
        let sp = d.span;
        d.ty = self.ground(&d.ty, sp, "the type of this expression")?;
        d.node = match d.node {
            Node::Var { name, source, inst, wanted, sites } => {
                let inst = inst
                    .iter()
                    .map(|t| self.ground(t, sp, &format!("the instantiation of `{name}`")))
                    .collect::<R<_>>()?;
                let wanted = self.ground_spec(&wanted, sp)?;
                Node::Var { name, source, inst, wanted, sites }
            }
            Node::Con { name, inst } => {
                let inst = inst
                    .iter()
                    .map(|t| self.ground(t, sp, &format!("the instantiation of `{name}`")))
                    .collect::<R<_>>()?;
                Node::Con { name, inst }
            }
            Node::Lit(n) => Node::Lit(n),
            Node::Abs { param, mult, arg, body } => {
                let arg = self.zonk_arg(&arg);
                Node::Abs { param, mult, arg, body: bx(self.zonk_deriv(*body)?) }
            }
            Node::App { fun, arg, mult, imp } => {
                let imp = match imp {
                    Some(i) => Some(ImplInfo { assume: self.ground_spec(&i.assume, sp)?, ..i }),
                    None => None,
                };
                Node::App { fun: bx(self.zonk_deriv(*fun)?), arg: bx(self.zonk_deriv(*arg)?), mult, imp }
            }
            Node::Pack { body, witnesses, payload, sites } => {
                let witnesses =
                    witnesses.iter().map(|t| self.ground(t, sp, "a package witness")).collect::<R<_>>()?;
                let payload = self.ground_spec(&payload, sp)?;
                Node::Pack { body: bx(self.zonk_deriv(*body)?), witnesses, payload, sites }
            }
            Node::Unpack { var, var_ty, rhs, body, imp } => {
                let imp = ImplInfo { assume: self.ground_spec(&imp.assume, sp)?, ..imp };
                let var_ty = self.ground(&var_ty, sp, "the unpacked value's type")?;
                Node::Unpack { var, var_ty, rhs: bx(self.zonk_deriv(*rhs)?), body: bx(self.zonk_deriv(*body)?), imp }
            }
            Node::Let { mult, var, rhs, body } => {
                Node::Let { mult, var, rhs: bx(self.zonk_deriv(*rhs)?), body: bx(self.zonk_deriv(*body)?) }
            }
            Node::LetSig { mult, var, rec, scheme, rhs, body, imp } => Node::LetSig {
                mult,
                var,
                rec,
                scheme,
                rhs: bx(self.zonk_deriv(*rhs)?),
                body: bx(self.zonk_deriv(*body)?),
                imp,
            },
            Node::Case { mult, scrut, alts } => {
                let scrut = bx(self.zonk_deriv(*scrut)?);
                let alts = alts
                    .into_iter()
                    .map(|a| {
                        Ok(DAlt {
                            field_tys: a
                                .field_tys
                                .iter()
                                .map(|t| self.ground(t, sp, "a pattern variable's type"))
                                .collect::<R<_>>()?,
                            body: self.zonk_deriv(a.body)?,
                            ..a
                        })
                    })
                    .collect::<R<_>>()?;
                Node::Case { mult, scrut, alts }
            }
        };
        Ok(d)
    }
}

fn rename(from: &[String], to: &[String]) -> BTreeMap<String, Type> {
    from.iter().cloned().zip(to.iter().map(|t| Type::Var(t.clone()))).collect()
}

/// Builtin data constructors: type variables, fields with their multiplicities, result.
pub(crate) fn con_sig(c: &str) -> Option<(Vec<&'static str>, Vec<(Type, Mult)>, Type)> {
    let v = |s: &str| Type::Var(s.into());
    Some(match c {
        "()" => (vec![], vec![], types::unit()),
        "(,)" => (vec!["a", "b"], vec![(v("a"), Mult::One), (v("b"), Mult::One)], types::pair(v("a"), v("b"))),
        "Ur" => (vec!["a"], vec![(v("a"), Mult::Many)], types::ur(v("a"))),
        "True" | "False" => (vec![], vec![], types::bool_ty()),
        _ => return None,
    })
}

/// Deterministic, path-derived names for wanted sites, implications and givens.
struct Numbering {
    binding: String,
    given: u32,
}

impl Numbering {
    fn impl_info(&mut self, imp: &mut ImplInfo) {
        imp.givens = imp
            .assume
            .iter()
            .map(|_| {
                self.given += 1;
                format!("%g{}", self.given)
            })
            .collect();
    }

    fn sites(&self, path: &str, n: usize) -> Vec<SiteId> {
        (0..n).map(|i| format!("{}:{path}#{i}", self.binding)).collect()
    }

    fn walk(&mut self, d: &mut Deriv, path: &str) {
        let id = format!("{}:{path}", self.binding);
        let child = |i: usize| format!("{path}.{i}");
        match &mut d.node {
            Node::Var { wanted, sites, .. } => *sites = self.sites(path, wanted.len()),
            Node::Con { .. } | Node::Lit(_) => {}
            Node::Abs { body, .. } => self.walk(body, &child(0)),
            Node::App { fun, arg, imp, .. } => {
                if let Some(i) = imp {
                    i.id = id;
                    self.impl_info(i);
                }
                self.walk(fun, &child(0));
                self.walk(arg, &child(1));
            }
            Node::Pack { body, payload, sites, .. } => {
                *sites = self.sites(path, payload.len());
                self.walk(body, &child(0));
            }
            Node::Unpack { rhs, body, imp, .. } | Node::LetSig { rhs, body, imp, .. } => {
                imp.id = id;
                self.impl_info(imp);
                self.walk(rhs, &child(0));
                self.walk(body, &child(1));
            }
            Node::Let { rhs, body, .. } => {
                self.walk(rhs, &child(0));
                self.walk(body, &child(1));
            }
            Node::Case { scrut, alts, .. } => {
                self.walk(scrut, &child(0));
                for (i, a) in alts.iter_mut().enumerate() {
                    self.walk(&mut a.body, &child(i + 1));
                }
            }
        }
    }
}
