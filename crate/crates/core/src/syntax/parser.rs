use crate::constraint::{Atom, Mult};
use crate::types::{canonical_spec, ArgType, CSpec, QualArg, Scheme, Type};

use super::ast::*;
use super::lexer::{lex, Tok};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

pub fn parse_program(src: &str) -> PResult<Program> {
    let mut p = Parser::new(src)?;
    let mut decls = Vec::new();
    loop {
        match p.peek() {
            Tok::Eof => break,
            Tok::DeclSep => {
                p.pos += 1;
            }
            _ => {
                decls.push(p.decl()?);
                if !matches!(p.peek(), Tok::DeclSep | Tok::Eof) {
                    return Err(p.unexpected(&["end of declaration"]));
                }
            }
        }
    }
    Ok(Program { decls })
}

pub fn parse_scheme(src: &str) -> PResult<Scheme> {
    let mut p = Parser::new(src)?;
    let s = p.scheme()?;
    p.expect_eof()?;
    Ok(s)
}

pub fn parse_type(src: &str) -> PResult<Type> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub fn parse_expr(src: &str) -> PResult<Expr> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

fn is_sym(t: &Tok, s: &str) -> bool {
    matches!(t, Tok::Sym(x) if *x == s)
}

impl Parser {
    fn new(src: &str) -> PResult<Parser> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, s: &str) -> bool {
        is_sym(self.peek(), s)
    }

    fn eat(&mut self, s: &str) -> bool {
        if self.at(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        ParseError::new(
            self.span(),
            format!("unexpected {}", self.peek().describe()),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, s: &str) -> PResult<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.unexpected(&[s]))
        }
    }

    fn expect_eof(&self) -> PResult<()> {
        match self.peek() {
            Tok::Eof => Ok(()),
            _ => Err(self.unexpected(&["end of input"])),
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn decl(&mut self) -> PResult<Decl> {
        let span = self.span();
        let name = self.ident()?;
        if self.eat("::") {
            let scheme = self.scheme()?;
            return Ok(Decl::Sig { name, scheme, span });
        }
        let mut params = Vec::new();
        while let Tok::Ident(p) = self.peek().clone() {
            self.bump();
            params.push(p);
        }
        self.expect("=")?;
        let body = self.expr()?;
        Ok(Decl::Bind { name, params, body, span })
    }

    // ---------------------------------------------------------------- types

    pub fn scheme(&mut self) -> PResult<Scheme> {
        let mut vars = Vec::new();
        if self.eat("forall") {
            while !self.at(".") {
                vars.push(self.ident()?);
            }
            self.expect(".")?;
        }
        let assume = self.try_qualifier()?.unwrap_or_default();
        let body = self.ty()?;
        Ok(Scheme { vars, assume, body })
    }

    /// Parse `Q =>` or `Q =o` if present; backtracks otherwise.
    fn try_qualifier(&mut self) -> PResult<Option<CSpec>> {
        let save = self.pos;
        if let Ok(spec) = self.cspec() {
            if self.eat("=>") {
                return Ok(Some(canonical_spec(spec.into_iter().map(|(_, a)| (Mult::Many, a)).collect())));
            }
            if self.eat("=o") {
                return Ok(Some(spec));
            }
        }
        self.pos = save;
        Ok(None)
    }

    fn cspec(&mut self) -> PResult<CSpec> {
        if self.at("(") {
            self.bump();
            if self.eat(")") {
                return Ok(vec![]);
            }
            let mut out = self.citem()?;
            while self.eat(",") {
                out.extend(self.citem()?);
            }
            self.expect(")")?;
            Ok(canonical_spec(out))
        } else {
            self.citem()
        }
    }

    fn citem(&mut self) -> PResult<CSpec> {
        let mult = if self.eat("many") { Mult::Many } else { Mult::One };
        let name = match self.peek().clone() {
            Tok::ConId(n) => {
                self.bump();
                n
            }
            _ => return Err(self.unexpected(&["constraint name"])),
        };
        let mut args = Vec::new();
        while self.atype_start() {
            args.push(self.atype()?);
        }
        if name == "RW" {
            if args.len() != 1 {
                return Err(ParseError::new(self.span(), "`RW` takes exactly one argument".into(), vec![]));
            }
            return Ok(vec![
                (mult, Atom::new("Read", args.clone())),
                (mult, Atom::new("Write", args)),
            ]);
        }
        Ok(vec![(mult, Atom::new(name, args))])
    }

    pub fn ty(&mut self) -> PResult<Type> {
        if self.eat("exists") {
            let mut binders = Vec::new();
            while !self.at(".") {
                binders.push(self.ident()?);
            }
            self.expect(".")?;
            let body = self.btype()?;
            self.expect("*")?;
            let payload = self.cspec()?;
            return Ok(Type::Exists(binders, Box::new(body), payload));
        }
        let arg = self.arg_type()?;
        let mult = if self.eat("->") {
            Some(Mult::Many)
        } else if self.eat("-o") {
            Some(Mult::One)
        } else {
            None
        };
        match (mult, arg) {
            (Some(m), arg) => {
                let res = self.ty()?;
                Ok(Type::Arrow(Box::new(arg), m, Box::new(res)))
            }
            (None, ArgType::Plain(t)) => {
                if self.eat("*") {
                    let payload = self.cspec()?;
                    Ok(Type::Exists(vec![], Box::new(t), payload))
                } else {
                    Ok(t)
                }
            }
            (None, ArgType::Qual(_)) => Err(self.unexpected(&["->", "-o"])),
        }
    }

    fn arg_type(&mut self) -> PResult<ArgType> {
        if self.at("(") {
            let save = self.pos;
            self.bump();
            let mut binders = Vec::new();
            let explicit = self.eat("forall");
            if explicit {
                while !self.at(".") {
                    binders.push(self.ident()?);
                }
                self.expect(".")?;
            }
            if let Some(assume) = self.try_qualifier()? {
                let body = self.ty()?;
                self.expect(")")?;
                return Ok(ArgType::Qual(QualArg { binders, assume, body }));
            }
            if explicit {
                return Err(self.unexpected(&["constraint"]));
            }
            self.pos = save;
        }
        Ok(ArgType::Plain(self.btype()?))
    }

    fn atype_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_)) || self.at("(")
    }

    fn btype(&mut self) -> PResult<Type> {
        let head = self.atype()?;
        let mut args = Vec::new();
        while self.atype_start() {
            args.push(self.atype()?);
        }
        if args.is_empty() {
            return Ok(head);
        }
        match head {
            Type::Con(n, a) if a.is_empty() && n != "()" && n != "(,)" => Ok(expand_synonym(n, args)),
            t @ Type::Var(_) => Ok(t.apply(args)),
            _ => Err(self.unexpected(&["type constructor application"])),
        }
    }

    fn atype(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                Ok(Type::Var(v))
            }
            Tok::ConId(c) => {
                self.bump();
                Ok(Type::Con(c, vec![]))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat(")") {
                    return Ok(crate::types::unit());
                }
                let a = self.ty()?;
                if self.eat(",") {
                    let b = self.ty()?;
                    self.expect(")")?;
                    return Ok(crate::types::pair(a, b));
                }
                self.expect(")")?;
                Ok(a)
            }
            _ => Err(self.unexpected(&["type"])),
        }
    }

    // ----------------------------------------------------------- expressions

    pub fn expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let t = self.peek().clone();
        match t {
            Tok::Sym("\\") => {
                self.bump();
                let mut params = vec![self.ident()?];
                while let Tok::Ident(p) = self.peek().clone() {
                    self.bump();
                    params.push(p);
                }
                self.expect("->")?;
                let body = self.expr()?;
                Ok(Expr::new(ExprKind::Lam(params, Box::new(body)), span))
            }
            Tok::Sym(kw @ ("let" | "letw")) => {
                self.bump();
                let mult = if kw == "let" { Mult::One } else { Mult::Many };
                if mult == Mult::One && self.eat("pack") {
                    let pat = self.pack_pat()?;
                    self.expect("=")?;
                    let rhs = self.expr()?;
                    self.expect("in")?;
                    let body = self.expr()?;
                    return Ok(Expr::new(ExprKind::LetPack(pat, Box::new(rhs), Box::new(body)), span));
                }
                if self.at("(") && is_sym(self.peek_at(1), ")") {
                    self.bump();
                    self.bump();
                    self.expect("=")?;
                    let rhs = self.expr()?;
                    self.expect("in")?;
                    let body = self.expr()?;
                    return Ok(Expr::new(
                        ExprKind::LetUnit { mult, rhs: Box::new(rhs), body: Box::new(body) },
                        span,
                    ));
                }
                let name = self.ident()?;
                let sig = if self.eat("::") { Some(self.scheme()?) } else { None };
                self.expect("=")?;
                let rhs = self.expr()?;
                self.expect("in")?;
                let body = self.expr()?;
                Ok(Expr::new(
                    ExprKind::Let { mult, name, sig, rhs: Box::new(rhs), body: Box::new(body) },
                    span,
                ))
            }
            Tok::Sym(kw @ ("case" | "casew")) => {
                self.bump();
                let mult = if kw == "case" { Mult::One } else { Mult::Many };
                let scrut = self.expr()?;
                self.expect("of")?;
                self.expect("{")?;
                let mut alts = vec![self.alt()?];
                while self.eat(";") {
                    alts.push(self.alt()?);
                }
                self.expect("}")?;
                Ok(Expr::new(ExprKind::Case { mult, scrut: Box::new(scrut), alts }, span))
            }
            Tok::Sym("if") => {
                self.bump();
                let c = self.expr()?;
                self.expect("then")?;
                let a = self.expr()?;
                self.expect("else")?;
                let b = self.expr()?;
                Ok(Expr::new(ExprKind::If(Box::new(c), Box::new(a), Box::new(b)), span))
            }
            _ => {
                let e = self.cmp_expr()?;
                if self.eat("$") {
                    let arg = self.expr()?;
                    return Ok(Expr::new(ExprKind::App(Box::new(e), Box::new(arg)), span));
                }
                Ok(e)
            }
        }
    }

    fn alt(&mut self) -> PResult<Alt> {
        let pat = match self.peek().clone() {
            Tok::Sym("(") => {
                self.bump();
                if self.eat(")") {
                    Pat::Unit
                } else {
                    let a = self.ident()?;
                    self.expect(",")?;
                    let b = self.ident()?;
                    self.expect(")")?;
                    Pat::Tuple(a, b)
                }
            }
            Tok::ConId(c) => {
                self.bump();
                let mut vars = Vec::new();
                while let Tok::Ident(v) = self.peek().clone() {
                    self.bump();
                    vars.push(v);
                }
                Pat::Con(c, vars)
            }
            _ => return Err(self.unexpected(&["pattern"])),
        };
        self.expect("->")?;
        let body = self.expr()?;
        Ok(Alt { pat, body })
    }

    fn pack_pat(&mut self) -> PResult<PackPat> {
        match self.peek().clone() {
            Tok::ConId(c) if c == "Ur" => {
                self.bump();
                let inner = self.simple_pack_pat()?;
                Ok(PackPat::Ur(Box::new(inner)))
            }
            Tok::Sym("(") if matches!(self.peek_at(1), Tok::ConId(c) if c == "Ur") => {
                self.bump();
                let p = self.pack_pat()?;
                self.expect(")")?;
                Ok(p)
            }
            _ => self.simple_pack_pat(),
        }
    }

    fn simple_pack_pat(&mut self) -> PResult<PackPat> {
        match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                Ok(PackPat::Var(v))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat(")") {
                    return Ok(PackPat::Unit);
                }
                let a = self.ident()?;
                if self.eat(")") {
                    return Ok(PackPat::Var(a));
                }
                self.expect(",")?;
                let b = self.ident()?;
                self.expect(")")?;
                Ok(PackPat::Tuple(a, b))
            }
            _ => Err(self.unexpected(&["pattern"])),
        }
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let span = self.span();
        let a = self.arith()?;
        for op in ["<=", ">=", "==", "<", ">"] {
            if self.eat(op) {
                let b = self.arith()?;
                return Ok(Expr::new(ExprKind::BinOp(op.into(), Box::new(a), Box::new(b)), span));
            }
        }
        Ok(a)
    }

    fn arith(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut a = self.term()?;
        loop {
            let op = if self.eat("+") {
                "+"
            } else if self.eat("-") {
                "-"
            } else {
                return Ok(a);
            };
            let b = self.term()?;
            a = Expr::new(ExprKind::BinOp(op.into(), Box::new(a), Box::new(b)), span);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let span = self.span();
        let mut a = self.app()?;
        while self.eat("*") {
            let b = self.app()?;
            a = Expr::new(ExprKind::BinOp("*".into(), Box::new(a), Box::new(b)), span);
        }
        Ok(a)
    }

    fn aexpr_start(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::Int(_)) || self.at("(")
    }

    fn app(&mut self) -> PResult<Expr> {
        let span = self.span();
        if self.eat("pack") {
            let e = self.aexpr()?;
            return Ok(Expr::new(ExprKind::Pack(Box::new(e)), span));
        }
        let mut f = self.aexpr()?;
        loop {
            if self.aexpr_start() {
                let a = self.aexpr()?;
                f = Expr::new(ExprKind::App(Box::new(f), Box::new(a)), span);
            } else if self.at("\\") {
                let a = self.expr()?;
                return Ok(Expr::new(ExprKind::App(Box::new(f), Box::new(a)), span));
            } else {
                return Ok(f);
            }
        }
    }

    fn aexpr(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Ident(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Var(v), span))
            }
            Tok::ConId(c) => {
                self.bump();
                Ok(Expr::new(ExprKind::Con(c), span))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(n), span))
            }
            Tok::Sym("(") => {
                self.bump();
                if self.eat(")") {
                    return Ok(Expr::new(ExprKind::Unit, span));
                }
                let e = self.expr()?;
                if self.eat(",") {
                    let b = self.expr()?;
                    self.expect(")")?;
                    return Ok(Expr::new(ExprKind::Tuple(Box::new(e), Box::new(b)), span));
                }
                if self.eat("::") {
                    let t = self.ty()?;
                    self.expect(")")?;
                    return Ok(Expr::new(ExprKind::Annot(Box::new(e), t), span));
                }
                self.expect(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected(&["expression"])),
        }
    }
}

fn expand_synonym(name: String, args: Vec<Type>) -> Type {
    if name == "UArray" && args.len() == 2 {
        let mut it = args.into_iter();
        let a = it.next().unwrap();
        let n = it.next().unwrap();
        return Type::Con("PArray".into(), vec![Type::Con("AtomRef".into(), vec![a]), n]);
    }
    Type::Con(name, args)
}
