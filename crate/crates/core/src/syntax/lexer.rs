use super::ast::Span;
use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    ConId(String),
    Int(i64),
    Sym(&'static str),
    /// Inserted before every token that starts in column 1 (except the first).
    DeclSep,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::ConId(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::DeclSep => "start of a new declaration".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

const KEYWORDS: &[&str] = &[
    "let", "letw", "in", "case", "casew", "of", "if", "then", "else", "pack", "exists", "forall",
    "many",
];

// Longest first.
const SYMBOLS: &[&str] = &[
    "::", "->", "-o", "=>", "=o", "<=", ">=", "==", "\\", "(", ")", ",", ";", "{", "}", ".", "*", "+",
    "-", "<", ">", "=", "$",
];

fn ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let span = Span { line, col };
        if col == 1 && !out.is_empty() {
            out.push((Tok::DeclSep, span));
        }
        let start = i;
        if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError::new(span, format!("integer literal `{text}` out of range"), vec![]))?;
            out.push((Tok::Int(n), span));
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && ident_char(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let tok = if let Some(k) = KEYWORDS.iter().find(|k| **k == text) {
                Tok::Sym(k)
            } else if c.is_uppercase() {
                Tok::ConId(text)
            } else {
                Tok::Ident(text)
            };
            out.push((tok, span));
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            let sym = SYMBOLS.iter().find(|s| {
                if !rest.starts_with(**s) {
                    return false;
                }
                // `-o` and `=o` only when not followed by an identifier character.
                if s.ends_with('o') {
                    return !chars.get(i + 2).is_some_and(|&c| ident_char(c));
                }
                true
            });
            match sym {
                Some(s) => {
                    i += s.chars().count();
                    out.push((Tok::Sym(s), span));
                }
                None => {
                    return Err(ParseError::new(span, format!("unexpected character `{c}`"), vec![]));
                }
            }
        }
        col += (i - start) as u32;
    }
    out.push((Tok::Eof, Span { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn linear_arrows_and_minus() {
        assert_eq!(
            toks("a -o b"),
            vec![Tok::Ident("a".into()), Tok::Sym("-o"), Tok::Ident("b".into()), Tok::Eof]
        );
        assert_eq!(
            toks("x -one"),
            vec![Tok::Ident("x".into()), Tok::Sym("-"), Tok::Ident("one".into()), Tok::Eof]
        );
    }

    #[test]
    fn declarations_split_on_column_one() {
        let t = toks("f :: Int\nf = 1 -- c\n  + 2\n");
        assert_eq!(t.iter().filter(|t| **t == Tok::DeclSep).count(), 1);
    }
}
