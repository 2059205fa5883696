use std::collections::BTreeMap;

use super::*;

type Usage = BTreeMap<String, Mult>;
type R<T> = Result<T, LinearityError>;

/// Compute usage maps bottom-up and check that every linear binder is used
/// exactly once on every path.
pub fn usage_check(b: &mut Binding) -> R<()> {
    let mut scope = Vec::new();
    walk(&mut b.body, &mut scope)
}

fn plus(mut a: Usage, b: &Usage) -> Usage {
    for (k, m) in b {
        a.entry(k.clone()).and_modify(|x| *x = x.add(*m)).or_insert(*m);
    }
    a
}

fn scaled(u: &Usage, pi: Mult) -> Usage {
    u.iter().map(|(k, m)| (k.clone(), pi.mul(*m))).collect()
}

/// Check a binder against its uses in `u` and remove it.
fn close(u: &mut Usage, x: &str, bound: Mult, span: Span) -> R<()> {
    let used = u.remove(x);
    if bound == Mult::One {
        match used {
            None => return Err(LinearityError::LinearVariableUnused { name: x.into(), span }),
            Some(Mult::Many) => return Err(LinearityError::LinearVariableOverused { name: x.into(), span }),
            Some(Mult::One) => {}
        }
    }
    Ok(())
}

/// The multiplicity a binder is checked at.
fn effective(bound: Mult, ty: &Type) -> Mult {
    if is_free_type(ty) {
        Mult::Many
    } else {
        bound
    }
}

fn walk(d: &mut Deriv, scope: &mut Vec<(String, Mult)>) -> R<()> {
    let sp = d.span;
    let usage = match &mut d.node {
        Node::Var { name, source, .. } => {
            if matches!(source, VarSource::Local | VarSource::LocalScheme) {
                BTreeMap::from([(name.clone(), Mult::One)])
            } else {
                BTreeMap::new()
            }
        }
        Node::Con { .. } | Node::Lit(_) => BTreeMap::new(),
        Node::Abs { param, mult, arg, body } => {
            let m = match arg {
                ArgType::Plain(t) => effective(*mult, t),
                ArgType::Qual(_) => *mult,
            };
            scope.push((param.clone(), m));
            let r = walk(body, scope);
            scope.pop();
            r?;
            let mut u = body.usage.clone();
            close(&mut u, param, m, sp)?;
            u
        }
        Node::App { fun, arg, mult, .. } => {
            walk(fun, scope)?;
            walk(arg, scope)?;
            plus(fun.usage.clone(), &scaled(&arg.usage, *mult))
        }
        Node::Pack { body, .. } => {
            walk(body, scope)?;
            body.usage.clone()
        }
        Node::Unpack { var, var_ty, rhs, body, .. } => {
            walk(rhs, scope)?;
            let m = effective(Mult::One, var_ty);
            scope.push((var.clone(), m));
            let r = walk(body, scope);
            scope.pop();
            r?;
            let mut ub = body.usage.clone();
            close(&mut ub, var, m, sp)?;
            plus(rhs.usage.clone(), &ub)
        }
        Node::Let { mult, var, rhs, body } => {
            walk(rhs, scope)?;
            let m = effective(*mult, &rhs.ty);
            scope.push((var.clone(), m));
            let r = walk(body, scope);
            scope.pop();
            r?;
            let mut ub = body.usage.clone();
            close(&mut ub, var, m, sp)?;
            plus(scaled(&rhs.usage, *mult), &ub)
        }
        Node::LetSig { mult, var, rec, rhs, body, .. } => {
            if *rec {
                scope.push((var.clone(), Mult::Many));
            }
            let r = walk(rhs, scope);
            if *rec {
                scope.pop();
            }
            r?;
            let mut ur = rhs.usage.clone();
            if *rec {
                ur.remove(var.as_str());
            }
            scope.push((var.clone(), *mult));
            let r = walk(body, scope);
            scope.pop();
            r?;
            let mut ub = body.usage.clone();
            close(&mut ub, var, *mult, sp)?;
            plus(scaled(&ur, *mult), &ub)
        }
        Node::Case { mult, scrut, alts } => {
            walk(scrut, scope)?;
            let mut branches = Vec::new();
            for a in alts.iter_mut() {
                let bound: Vec<Mult> =
                    a.field_mults.iter().zip(&a.field_tys).map(|(m, t)| effective(mult.mul(*m), t)).collect();
                for (v, m) in a.vars.iter().zip(&bound) {
                    scope.push((v.clone(), *m));
                }
                let r = walk(&mut a.body, scope);
                scope.truncate(scope.len() - a.vars.len());
                r?;
                let mut u = a.body.usage.clone();
                for (v, m) in a.vars.iter().zip(&bound) {
                    close(&mut u, v, *m, a.body.span)?;
                }
                branches.push(u);
            }
            let joined = join(&branches, scope, sp)?;
            plus(scaled(&scrut.usage, *mult), &joined)
        }
    };
    d.usage = usage;
    Ok(())
}

/// Branches must agree on every linear variable in scope; unrestricted ones
/// take the least upper bound.
fn join(branches: &[Usage], scope: &[(String, Mult)], span: Span) -> R<Usage> {
    let mut keys: Vec<&String> = branches.iter().flat_map(|b| b.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut out = BTreeMap::new();
    for k in keys {
        let vals: Vec<Option<Mult>> = branches.iter().map(|b| b.get(k).copied()).collect();
        let linear = scope.iter().rev().find(|(n, _)| n == k).map(|(_, m)| *m) == Some(Mult::One);
        if vals.iter().all(|v| *v == vals[0]) {
            if let Some(m) = vals[0] {
                out.insert(k.clone(), m);
            }
        } else if linear {
            return Err(LinearityError::BranchUsageMismatch { name: k.clone(), span });
        } else {
            out.insert(k.clone(), Mult::Many);
        }
    }
    Ok(out)
}
