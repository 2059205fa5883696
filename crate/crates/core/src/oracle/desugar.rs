//! Surface sugar to kernel expressions.
//!
//! The kernel uses only `Var`, `Con`, `Int`, single-parameter `Lam`, `App`,
//! `Pack`, `LetPack` with a variable pattern, `Let`, `Case` and `Annot`.
//! Tuples and unit become constructor applications, operators become prelude
//! variables, `if` becomes an unrestricted case on `Bool`, and nested pack
//! patterns become cases on a fresh variable.

use crate::constraint::Mult;
use crate::syntax::{Alt, Expr, ExprKind, PackPat, Pat, Span};

pub(crate) struct Fresh(pub u32);

impl Fresh {
    pub fn name(&mut self, base: &str) -> String {
        self.0 += 1;
        format!("%{base}{}", self.0)
    }

    fn var(&mut self, v: &str) -> String {
        if v == "_" {
            self.name("_")
        } else {
            v.to_string()
        }
    }
}

fn mk(kind: ExprKind, span: Span) -> Expr {
    Expr::new(kind, span)
}

fn b(e: Expr) -> Box<Expr> {
    Box::new(e)
}

pub(crate) fn lambdas(params: &[String], body: Expr, span: Span) -> Expr {
    params.iter().rev().fold(body, |acc, p| mk(ExprKind::Lam(vec![p.clone()], b(acc)), span))
}

pub(crate) fn desugar(e: &Expr, fr: &mut Fresh) -> Expr {
    let sp = e.span;
    match &e.kind {
        ExprKind::Var(_) | ExprKind::Con(_) | ExprKind::Int(_) => e.clone(),
        ExprKind::Unit => mk(ExprKind::Con("()".into()), sp),
        ExprKind::Tuple(x, y) => {
            let pair = mk(ExprKind::Con("(,)".into()), sp);
            let a = mk(ExprKind::App(b(pair), b(desugar(x, fr))), sp);
            mk(ExprKind::App(b(a), b(desugar(y, fr))), sp)
        }
        ExprKind::Lam(ps, body) => {
            let ps: Vec<String> = ps.iter().map(|p| fr.var(p)).collect();
            lambdas(&ps, desugar(body, fr), sp)
        }
        ExprKind::App(f, a) => mk(ExprKind::App(b(desugar(f, fr)), b(desugar(a, fr))), sp),
        ExprKind::BinOp(op, x, y) => {
            let f = mk(ExprKind::Var(op.clone()), sp);
            let a = mk(ExprKind::App(b(f), b(desugar(x, fr))), sp);
            mk(ExprKind::App(b(a), b(desugar(y, fr))), sp)
        }
        ExprKind::Pack(x) => mk(ExprKind::Pack(b(desugar(x, fr))), sp),
        ExprKind::LetPack(pat, rhs, body) => {
            let rhs = desugar(rhs, fr);
            let body = desugar(body, fr);
            match pat {
                PackPat::Var(v) => mk(ExprKind::LetPack(PackPat::Var(fr.var(v)), b(rhs), b(body)), sp),
                _ => {
                    let x = fr.name("p");
                    let inner = open_pattern(pat, &x, Mult::One, body, sp, fr);
                    mk(ExprKind::LetPack(PackPat::Var(x), b(rhs), b(inner)), sp)
                }
            }
        }
        ExprKind::Let { mult, name, sig, rhs, body } => mk(
            ExprKind::Let {
                mult: *mult,
                name: fr.var(name),
                sig: sig.clone(),
                rhs: b(desugar(rhs, fr)),
                body: b(desugar(body, fr)),
            },
            sp,
        ),
        ExprKind::LetUnit { mult, rhs, body } => mk(
            ExprKind::Case {
                mult: *mult,
                scrut: b(desugar(rhs, fr)),
                alts: vec![Alt { pat: Pat::Unit, body: desugar(body, fr) }],
            },
            sp,
        ),
        ExprKind::Case { mult, scrut, alts } => mk(
            ExprKind::Case {
                mult: *mult,
                scrut: b(desugar(scrut, fr)),
                alts: alts
                    .iter()
                    .map(|a| Alt { pat: rename_pat(&a.pat, fr), body: desugar(&a.body, fr) })
                    .collect(),
            },
            sp,
        ),
        ExprKind::If(c, t, f) => mk(
            ExprKind::Case {
                mult: Mult::Many,
                scrut: b(desugar(c, fr)),
                alts: vec![
                    Alt { pat: Pat::Con("True".into(), vec![]), body: desugar(t, fr) },
                    Alt { pat: Pat::Con("False".into(), vec![]), body: desugar(f, fr) },
                ],
            },
            sp,
        ),
        ExprKind::Annot(x, t) => mk(ExprKind::Annot(b(desugar(x, fr)), t.clone()), sp),
    }
}

fn rename_pat(p: &Pat, fr: &mut Fresh) -> Pat {
    match p {
        Pat::Unit => Pat::Unit,
        Pat::Tuple(x, y) => Pat::Tuple(fr.var(x), fr.var(y)),
        Pat::Con(c, vs) => Pat::Con(c.clone(), vs.iter().map(|v| fr.var(v)).collect()),
    }
}

/// `case_mult x of pat -> body`, with nested `Ur` patterns opened by a further case.
fn open_pattern(pat: &PackPat, x: &str, mult: Mult, body: Expr, sp: Span, fr: &mut Fresh) -> Expr {
    let scrut = b(mk(ExprKind::Var(x.to_string()), sp));
    let alt = |pat: Pat, body: Expr| vec![Alt { pat, body }];
    match pat {
        PackPat::Var(v) => {
            // Only reachable under `Ur`: bind the field directly.
            mk(ExprKind::Let { mult, name: fr.var(v), sig: None, rhs: scrut, body: b(body) }, sp)
        }
        PackPat::Unit => mk(ExprKind::Case { mult, scrut, alts: alt(Pat::Unit, body) }, sp),
        PackPat::Tuple(l, r) => {
            mk(ExprKind::Case { mult, scrut, alts: alt(Pat::Tuple(fr.var(l), fr.var(r)), body) }, sp)
        }
        PackPat::Ur(inner) => match &**inner {
            PackPat::Var(v) => {
                mk(ExprKind::Case { mult, scrut, alts: alt(Pat::Con("Ur".into(), vec![fr.var(v)]), body) }, sp)
            }
            _ => {
                let t = fr.name("u");
                let inner = open_pattern(inner, &t, Mult::Many, body, sp, fr);
                mk(ExprKind::Case { mult, scrut, alts: alt(Pat::Con("Ur".into(), vec![t]), inner) }, sp)
            }
        },
    }
}
