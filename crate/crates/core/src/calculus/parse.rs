//! Reader for the S-expression form printed by `CoreProgram`'s `Display`.

use super::{CAlt, CScheme, CType, CoreProgram, Def, Term};
use crate::constraint::Mult;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {msg}")]
pub struct CoreParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Clone, Debug)]
enum Sexp {
    Atom(String, (usize, usize)),
    List(Vec<Sexp>, (usize, usize)),
}

impl Sexp {
    fn pos(&self) -> (usize, usize) {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }
}

type R<T> = Result<T, CoreParseError>;

fn err<T>(at: (usize, usize), msg: impl Into<String>) -> R<T> {
    Err(CoreParseError { line: at.0, col: at.1, msg: msg.into() })
}

fn read_all(src: &str) -> R<Vec<Sexp>> {
    let mut stack: Vec<(Vec<Sexp>, (usize, usize))> = vec![(vec![], (1, 1))];
    let (mut line, mut col) = (1, 1);
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        let here = (line, col);
        let advance = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        advance(c, &mut line, &mut col);
        match c {
            ';' => {
                for c in chars.by_ref() {
                    advance(c, &mut line, &mut col);
                    if c == '\n' {
                        break;
                    }
                }
            }
            '(' => stack.push((vec![], here)),
            ')' => {
                let (items, at) = stack.pop().unwrap();
                let Some(top) = stack.last_mut() else { return err(here, "unbalanced `)`") };
                top.0.push(Sexp::List(items, at));
                if stack.is_empty() {
                    return err(here, "unbalanced `)`");
                }
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    s.push(n);
                    advance(n, &mut line, &mut col);
                    chars.next();
                }
                stack.last_mut().unwrap().0.push(Sexp::Atom(s, here));
            }
        }
        if stack.is_empty() {
            return err(here, "unbalanced `)`");
        }
    }
    if stack.len() != 1 {
        return err(stack.last().unwrap().1, "unclosed `(`");
    }
    Ok(stack.pop().unwrap().0)
}

fn atom(s: &Sexp) -> R<&str> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        Sexp::List(_, p) => err(*p, "expected a name"),
    }
}

fn names(s: &Sexp) -> R<Vec<String>> {
    match s {
        Sexp::List(xs, _) => xs.iter().map(|x| atom(x).map(String::from)).collect(),
        Sexp::Atom(_, p) => err(*p, "expected a list of names"),
    }
}

fn mult(s: &Sexp) -> R<Mult> {
    match atom(s)? {
        "1" => Ok(Mult::One),
        "w" => Ok(Mult::Many),
        _ => err(s.pos(), "expected a multiplicity `1` or `w`"),
    }
}

fn con_name(a: &str) -> Option<String> {
    match a {
        "Unit" => Some("()".into()),
        "Pair" => Some("(,)".into()),
        _ if a.starts_with(|c: char| c.is_ascii_uppercase()) => Some(a.into()),
        _ => None,
    }
}

fn arity_check(xs: &[Sexp], n: usize, at: (usize, usize), what: &str) -> R<()> {
    if xs.len() == n {
        Ok(())
    } else {
        err(at, format!("`{what}` takes {} parts", n - 1))
    }
}

fn parse_type(s: &Sexp) -> R<CType> {
    match s {
        Sexp::Atom(a, _) => Ok(match con_name(a) {
            Some(c) => CType::Con(c, vec![]),
            None => CType::Var(a.clone()),
        }),
        Sexp::List(xs, at) => {
            let Some((head, rest)) = xs.split_first() else { return err(*at, "empty type") };
            let h = atom(head)?;
            let tys = |r: &[Sexp]| r.iter().map(parse_type).collect::<R<Vec<_>>>();
            match h {
                "-o" | "->" => {
                    arity_check(xs, 3, *at, h)?;
                    let m = if h == "-o" { Mult::One } else { Mult::Many };
                    Ok(CType::Arrow(Box::new(parse_type(&rest[0])?), m, Box::new(parse_type(&rest[1])?)))
                }
                "forall" => {
                    arity_check(xs, 3, *at, h)?;
                    Ok(CType::Forall(names(&rest[0])?, Box::new(parse_type(&rest[1])?)))
                }
                "exists" => {
                    arity_check(xs, 4, *at, h)?;
                    Ok(CType::Exists(names(&rest[0])?, Box::new(parse_type(&rest[1])?), Box::new(parse_type(&rest[2])?)))
                }
                "tok" => {
                    let Some((n, args)) = rest.split_first() else { return err(*at, "`tok` needs an atom name") };
                    Ok(CType::Token(atom(n)?.into(), tys(args)?))
                }
                "app" => {
                    let Some((h, args)) = rest.split_first() else { return err(*at, "`app` needs a head") };
                    Ok(parse_type(h)?.apply(tys(args)?))
                }
                other => match con_name(other) {
                    Some(c) => Ok(CType::Con(c, tys(rest)?)),
                    None => err(head.pos(), format!("unknown type former `{other}`")),
                },
            }
        }
    }
}

fn parse_scheme(s: &Sexp) -> R<CScheme> {
    match s {
        Sexp::List(xs, _) if matches!(xs.first(), Some(Sexp::Atom(a, _)) if a == "forall") && xs.len() == 3 => {
            Ok(CScheme { vars: names(&xs[1])?, ty: parse_type(&xs[2])? })
        }
        _ => Ok(CScheme::mono(parse_type(s)?)),
    }
}

fn parse_term(s: &Sexp) -> R<Term> {
    match s {
        Sexp::Atom(a, _) => Ok(if let Ok(n) = a.parse::<i64>() {
            Term::Lit(n)
        } else if let Some(c) = con_name(a) {
            Term::Con(c, vec![])
        } else {
            Term::Var(a.clone(), vec![])
        }),
        Sexp::List(xs, at) => {
            let Some((head, rest)) = xs.split_first() else { return err(*at, "empty term") };
            let kw = match head {
                Sexp::Atom(a, _) => a.as_str(),
                Sexp::List(..) => "",
            };
            match kw {
                "@" => {
                    let Some((x, tys)) = rest.split_first() else { return err(*at, "`@` needs a name") };
                    let tys = tys.iter().map(parse_type).collect::<R<Vec<_>>>()?;
                    Ok(match parse_term(x)? {
                        Term::Var(x, _) => Term::Var(x, tys),
                        Term::Con(c, _) => Term::Con(c, tys),
                        _ => return err(x.pos(), "only names can be instantiated"),
                    })
                }
                "\\" => {
                    arity_check(xs, 5, *at, kw)?;
                    Ok(Term::Lam(atom(&rest[0])?.into(), mult(&rest[1])?, parse_type(&rest[2])?, Box::new(parse_term(&rest[3])?)))
                }
                "/\\" => {
                    arity_check(xs, 3, *at, kw)?;
                    Ok(Term::TyLam(names(&rest[0])?, Box::new(parse_term(&rest[1])?)))
                }
                "pack" => {
                    arity_check(xs, 5, *at, kw)?;
                    let witnesses = match &rest[0] {
                        Sexp::List(ws, _) => ws.iter().map(parse_type).collect::<R<Vec<_>>>()?,
                        other => return err(other.pos(), "expected a list of witness types"),
                    };
                    Ok(Term::Pack {
                        witnesses,
                        ty: parse_type(&rest[1])?,
                        ev: Box::new(parse_term(&rest[2])?),
                        val: Box::new(parse_term(&rest[3])?),
                    })
                }
                "let-pack" => {
                    arity_check(xs, 6, *at, kw)?;
                    Ok(Term::Unpack {
                        tyvars: names(&rest[0])?,
                        ev: atom(&rest[1])?.into(),
                        var: atom(&rest[2])?.into(),
                        rhs: Box::new(parse_term(&rest[3])?),
                        body: Box::new(parse_term(&rest[4])?),
                    })
                }
                "case" => {
                    if rest.len() < 3 {
                        return err(*at, "`case` needs a multiplicity, a scrutinee and alternatives");
                    }
                    let alts = rest[2..].iter().map(parse_alt).collect::<R<Vec<_>>>()?;
                    Ok(Term::Case { mult: mult(&rest[0])?, scrut: Box::new(parse_term(&rest[1])?), alts })
                }
                "let" | "let-rec" => {
                    arity_check(xs, 6, *at, kw)?;
                    Ok(Term::Let {
                        mult: mult(&rest[0])?,
                        rec: kw == "let-rec",
                        var: atom(&rest[1])?.into(),
                        scheme: parse_scheme(&rest[2])?,
                        rhs: Box::new(parse_term(&rest[3])?),
                        body: Box::new(parse_term(&rest[4])?),
                    })
                }
                _ => {
                    if rest.is_empty() {
                        return err(*at, "application without an argument");
                    }
                    let mut t = parse_term(head)?;
                    for a in rest {
                        t = Term::app(t, parse_term(a)?);
                    }
                    Ok(t)
                }
            }
        }
    }
}

fn parse_alt(s: &Sexp) -> R<CAlt> {
    let Sexp::List(xs, at) = s else { return err(s.pos(), "expected an alternative") };
    arity_check(xs, 2, *at, "alternative")?;
    let (con, vars) = match &xs[0] {
        Sexp::Atom(a, p) => (con_name(a).ok_or(()).or_else(|_| err(*p, "expected a constructor"))?, vec![]),
        Sexp::List(ps, p) => {
            let Some((c, vs)) = ps.split_first() else { return err(*p, "empty pattern") };
            let c = con_name(atom(c)?).ok_or(()).or_else(|_| err(*p, "expected a constructor"))?;
            (c, vs.iter().map(|v| atom(v).map(String::from)).collect::<R<Vec<_>>>()?)
        }
    };
    Ok(CAlt { con, vars, body: parse_term(&xs[1])? })
}

pub fn parse_core(src: &str) -> Result<CoreProgram, CoreParseError> {
    let mut defs = vec![];
    for d in read_all(src)? {
        let Sexp::List(xs, at) = &d else { return err(d.pos(), "expected `(def name type body)`") };
        if xs.len() != 4 || !matches!(&xs[0], Sexp::Atom(a, _) if a == "def") {
            return err(*at, "expected `(def name type body)`");
        }
        defs.push(Def { name: atom(&xs[1])?.into(), scheme: parse_scheme(&xs[2])?, body: parse_term(&xs[3])? });
    }
    Ok(CoreProgram { defs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_small_program() {
        let src = "; adds\n(def main (-o Unit Int)\n  (\\ z 1 Unit (case 1 z (Unit (+ Unit 1 2)))))\n";
        let p = parse_core(src).unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(parse_core(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn types_round_trip() {
        for t in [
            "(forall (a n) (-o (tok Read n) (-> (PArray (AtomRef a) n) (exists (l) (Ur a) (Pair (tok RW l) (Ur (tok C)))))))",
            "(-o (forall (p) (-o (tok RW p) (app a p))) Unit)",
        ] {
            let p = parse_scheme(&read_all(t).unwrap()[0]).unwrap();
            assert_eq!(p.to_string(), t);
        }
    }

    #[test]
    fn errors_have_positions() {
        let e = parse_core("(def f Int\n  (\\ x 2 Int x))").unwrap_err();
        assert_eq!((e.line, e.col), (2, 8));
        assert!(parse_core("(def f Int 1").is_err());
        assert!(parse_core("(def f Int 1))").is_err());
    }
}
