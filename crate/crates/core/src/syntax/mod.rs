//! Surface syntax: lexer, parser and pretty-printer.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod pretty;

use std::fmt;

pub use ast::*;
pub use parser::{parse_expr, parse_program, parse_scheme, parse_type};
pub use pretty::{pretty_expr, pretty_program};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(span: Span, message: String, expected: Vec<String>) -> ParseError {
        ParseError { line: span.line, col: span.col, message, expected }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)?;
        if !self.expected.is_empty() {
            write!(f, "; expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::Mult;

    fn round_trip(src: &str) {
        let p = parse_program(src).unwrap();
        let printed = pretty_program(&p);
        let q = parse_program(&printed).unwrap_or_else(|e| panic!("{e} at {}:{}\n{printed}", e.line, e.col));
        assert_eq!(p, q, "\n{printed}");
    }

    #[test]
    fn variable() {
        let e = parse_expr("useC").unwrap();
        assert_eq!(e.kind, ExprKind::Var("useC".into()));
        assert_eq!(pretty_expr(&e), "useC");
    }

    #[test]
    fn if_sugar_parses() {
        let p = parse_program("dithering :: C =o Bool -> Int\ndithering x = if x then useC else 10\n").unwrap();
        match &p.decls[1] {
            Decl::Bind { body, .. } => assert!(matches!(body.kind, ExprKind::If(..))),
            _ => panic!(),
        }
    }

    #[test]
    fn package_type_prints_with_synonym() {
        let t = parse_type("exists n. UArray a n * RW n").unwrap();
        assert_eq!(t.to_string(), "exists n. UArray a n * (Read n, Write n)");
    }

    #[test]
    fn constraint_arrows() {
        let s = parse_scheme("(C => Int) -o Int").unwrap();
        assert_eq!(s.to_string(), "(C => Int) -o Int");
        let s = parse_scheme("RW n =o UArray a n -> ()").unwrap();
        assert_eq!(s.assume.len(), 2);
        assert!(s.assume.iter().all(|(m, _)| *m == Mult::One));
        let s = parse_scheme("(many C, D) =o Int").unwrap();
        assert_eq!(s.assume[0].0, Mult::Many);
        assert_eq!(parse_scheme(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn rank2_argument() {
        let s = parse_scheme(
            "RW n =o PArray a n -> Int -> (forall p. RW p =o a p -> r * RW p) -o r * RW n",
        )
        .unwrap();
        assert_eq!(parse_scheme(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn pretty_round_trips() {
        round_trip(
            "f :: RW n =o UArray Int n -> Int -> () * RW n\n\
             f arr i = if i == 0 then pack () else let pack (Ur (l, r)) = split arr (i + 1) in\n  \
             let pack () = lendMut l i (\\a -> pack ()) in case free arr of { () -> pack () }\n\
             g = letw x :: Int = 1 + 2 * 3 - 4 in let () = h x in (pack 1, (x :: Int))\n",
        );
    }

    #[test]
    fn errors_report_position() {
        let e = parse_program("f = let x = in x").unwrap_err();
        assert_eq!((e.line, e.col), (1, 13));
        assert!(e.expected.contains(&"expression".to_string()));
    }
}
