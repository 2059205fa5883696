use crate::constraint::Mult;

use super::ast::*;

pub fn pretty_program(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.decls {
        match d {
            Decl::Sig { name, scheme, .. } => {
                out.push_str(&format!("{name} :: {scheme}\n"));
            }
            Decl::Bind { name, params, body, .. } => {
                out.push_str(name);
                for p in params {
                    out.push(' ');
                    out.push_str(p);
                }
                out.push_str(" =\n  ");
                out.push_str(&pretty_expr_at(body, 2));
                out.push_str("\n\n");
            }
        }
    }
    out
}

pub fn pretty_expr(e: &Expr) -> String {
    pretty_expr_at(e, 2)
}

fn pretty_expr_at(e: &Expr, indent: usize) -> String {
    let mut pp = Printer { indent };
    pp.expr(e, 0)
}

struct Printer {
    indent: usize,
}

const TOP: u8 = 0;
const CMP: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const APP: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Lam(..)
        | ExprKind::LetPack(..)
        | ExprKind::Let { .. }
        | ExprKind::LetUnit { .. }
        | ExprKind::Case { .. }
        | ExprKind::If(..) => TOP,
        ExprKind::BinOp(op, ..) => match op.as_str() {
            "+" | "-" => ADD,
            "*" => MUL,
            _ => CMP,
        },
        ExprKind::App(..) | ExprKind::Pack(_) => APP,
        _ => ATOM,
    }
}

fn let_kw(m: Mult) -> &'static str {
    match m {
        Mult::One => "let",
        Mult::Many => "letw",
    }
}

fn pack_pat(p: &PackPat) -> String {
    match p {
        PackPat::Var(v) => v.clone(),
        PackPat::Unit => "()".into(),
        PackPat::Tuple(a, b) => format!("({a}, {b})"),
        PackPat::Ur(inner) => format!("(Ur {})", pack_pat(inner)),
    }
}

fn pat(p: &Pat) -> String {
    match p {
        Pat::Unit => "()".into(),
        Pat::Tuple(a, b) => format!("({a}, {b})"),
        Pat::Con(c, vs) => {
            let mut s = c.clone();
            for v in vs {
                s.push(' ');
                s.push_str(v);
            }
            s
        }
    }
}

impl Printer {
    fn nl(&self) -> String {
        format!("\n{}", " ".repeat(self.indent))
    }

    fn nested(&mut self, e: &Expr, ctx: u8, extra: usize) -> String {
        self.indent += extra;
        let s = self.expr(e, ctx);
        self.indent -= extra;
        s
    }

    fn expr(&mut self, e: &Expr, ctx: u8) -> String {
        let own = level(e);
        if own < ctx {
            let inner = self.nested(e, TOP, 1);
            return format!("({inner})");
        }
        match &e.kind {
            ExprKind::Var(v) => v.clone(),
            ExprKind::Con(c) => c.clone(),
            ExprKind::Int(n) => n.to_string(),
            ExprKind::Unit => "()".into(),
            ExprKind::Tuple(a, b) => {
                format!("({}, {})", self.nested(a, TOP, 1), self.nested(b, TOP, 1))
            }
            ExprKind::Annot(a, t) => format!("({} :: {t})", self.nested(a, TOP, 1)),
            ExprKind::Lam(ps, body) => format!("\\{} -> {}", ps.join(" "), self.nested(body, TOP, 2)),
            ExprKind::App(f, a) => {
                let fs = if matches!(f.kind, ExprKind::Pack(_)) {
                    let inner = self.expr(f, TOP);
                    format!("({inner})")
                } else {
                    self.expr(f, APP)
                };
                format!("{fs} {}", self.expr(a, ATOM))
            }
            ExprKind::Pack(a) => format!("pack {}", self.expr(a, ATOM)),
            ExprKind::BinOp(op, a, b) => {
                let (l, r) = match own {
                    ADD => (ADD, MUL),
                    MUL => (MUL, APP),
                    _ => (ADD, ADD),
                };
                format!("{} {op} {}", self.expr(a, l), self.expr(b, r))
            }
            ExprKind::LetPack(p, rhs, body) => {
                let r = self.nested(rhs, TOP, 2);
                let b = self.expr(body, TOP);
                format!("let pack {} = {r} in{}{b}", pack_pat(p), self.nl())
            }
            ExprKind::Let { mult, name, sig, rhs, body } => {
                let r = self.nested(rhs, TOP, 2);
                let b = self.expr(body, TOP);
                let s = sig.as_ref().map(|s| format!(" :: {s}")).unwrap_or_default();
                format!("{} {name}{s} = {r} in{}{b}", let_kw(*mult), self.nl())
            }
            ExprKind::LetUnit { mult, rhs, body } => {
                let r = self.nested(rhs, TOP, 2);
                let b = self.expr(body, TOP);
                format!("{} () = {r} in{}{b}", let_kw(*mult), self.nl())
            }
            ExprKind::Case { mult, scrut, alts } => {
                let kw = match mult {
                    Mult::One => "case",
                    Mult::Many => "casew",
                };
                let s = self.nested(scrut, TOP, 2);
                let alts: Vec<String> = alts
                    .iter()
                    .map(|a| format!("{} -> {}", pat(&a.pat), self.nested(&a.body, TOP, 4)))
                    .collect();
                let sep = format!(";{}  ", self.nl());
                format!("{kw} {s} of{}{{ {} }}", self.nl(), alts.join(&sep))
            }
            ExprKind::If(c, a, b) => {
                let c = self.nested(c, TOP, 2);
                let a = self.nested(a, TOP, 2);
                let b = self.nested(b, TOP, 2);
                format!("if {c}{nl}then {a}{nl}else {b}", nl = self.nl())
            }
        }
    }
}
