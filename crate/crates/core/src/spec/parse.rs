//! Recursive-descent parser for the specification DSL.
//!
//! ```text
//! spec   := defn+
//! defn   := NAME '=' expr ';'
//! expr   := term ('+' term)*
//! term   := factor ('*' factor)*
//! factor := 'atom' | 'eps' | NAME | 'seq' '(' expr ')' | 'mset2' '(' expr ')' | '(' expr ')'
//! ```

use thiserror::Error;

use super::{CombSpec, Expr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}:{column}: class `{name}` is defined more than once")]
    Duplicate {
        name: String,
        line: usize,
        column: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Atom,
    Eps,
    Seq,
    MSet2,
    Eq,
    Plus,
    Star,
    LParen,
    RParen,
    Semi,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Atom => "`atom`".into(),
            Tok::Eps => "`eps`".into(),
            Tok::Seq => "`seq`".into(),
            Tok::MSet2 => "`mset2`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Star => "`*`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars<'_>>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        let tok = match c {
            '=' => Tok::Eq,
            '+' => Tok::Plus,
            '*' => Tok::Star,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ';' => Tok::Semi,
            c if c.is_ascii_alphabetic() => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        word.push(bump(&mut chars));
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    tok: match word.as_str() {
                        "atom" => Tok::Atom,
                        "eps" => Tok::Eps,
                        "seq" => Tok::Seq,
                        "mset2" => Tok::MSet2,
                        _ => Tok::Name(word),
                    },
                    line: tl,
                    column: tc,
                });
                continue;
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tl,
                    column: tc,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        bump(&mut chars);
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> &Token {
        let t = &self.toks[self.pos];
        if t.tok != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        let t = self.peek();
        ParseError::Syntax {
            line: t.line,
            column: t.column,
            message: format!("expected {expected}, found {}", t.tok.describe()),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error(what))
        }
    }

    fn spec(&mut self) -> Result<CombSpec, ParseError> {
        let mut spec = CombSpec::default();
        loop {
            let t = self.peek();
            let (line, column) = (t.line, t.column);
            let name = match &t.tok {
                Tok::Name(n) => n.clone(),
                Tok::End if !spec.is_empty() => return Ok(spec),
                _ => return Err(self.error("a class name")),
            };
            self.next();
            self.expect(Tok::Eq, "`=`")?;
            let expr = self.expr()?;
            self.expect(Tok::Semi, "`;`")?;
            if spec.definitions.contains_key(&name) {
                return Err(ParseError::Duplicate { name, line, column });
            }
            spec.definitions.insert(name, expr);
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        while self.peek().tok == Tok::Plus {
            self.next();
            terms.push(self.term()?);
        }
        Ok(Expr::union(terms))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        while self.peek().tok == Tok::Star {
            self.next();
            factors.push(self.factor()?);
        }
        Ok(Expr::product(factors))
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().tok.clone();
        match tok {
            Tok::Atom => {
                self.next();
                Ok(Expr::Atom)
            }
            Tok::Eps => {
                self.next();
                Ok(Expr::Epsilon)
            }
            Tok::Name(n) => {
                self.next();
                Ok(Expr::Ref(n))
            }
            Tok::Seq | Tok::MSet2 => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let inner = Box::new(self.expr()?);
                self.expect(Tok::RParen, "`)`")?;
                Ok(if tok == Tok::Seq {
                    Expr::Seq(inner)
                } else {
                    Expr::MSet2(inner)
                })
            }
            Tok::LParen => {
                self.next();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("an expression")),
        }
    }
}

/// Parses a specification. Unions and products come out flattened, so
/// `(a + b) + c` and `a + (b + c)` yield the same AST.
pub fn parse_spec(text: &str) -> Result<CombSpec, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.spec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: &str) -> Expr {
        Expr::Ref(n.into())
    }

    #[test]
    fn binary_trees() {
        let spec = parse_spec("B = atom + atom*B*B;").unwrap();
        assert_eq!(spec.len(), 1);
        assert_eq!(
            spec.get("B").unwrap(),
            &Expr::Union(vec![
                Expr::Atom,
                Expr::Product(vec![Expr::Atom, r("B"), r("B")])
            ])
        );
    }

    #[test]
    fn epsilon_class() {
        let spec = parse_spec("E = eps;").unwrap();
        assert_eq!(spec.get("E").unwrap(), &Expr::Epsilon);
    }

    #[test]
    fn otter_trees() {
        let spec = parse_spec("V = atom + mset2(V);").unwrap();
        assert_eq!(
            spec.get("V").unwrap(),
            &Expr::Union(vec![Expr::Atom, Expr::MSet2(Box::new(r("V")))])
        );
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# Motzkin\nY = atom * (E + Y + Y*Y); # trailing\n\n  E =eps ;";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.class_names().collect::<Vec<_>>(), ["Y", "E"]);
        assert_eq!(
            spec.get("Y").unwrap(),
            &Expr::Product(vec![
                Expr::Atom,
                Expr::Union(vec![r("E"), r("Y"), Expr::Product(vec![r("Y"), r("Y")])])
            ])
        );
    }

    #[test]
    fn nested_parens_flatten() {
        let a = parse_spec("A = (atom + eps) + A;").unwrap();
        let b = parse_spec("A = atom + (eps + A);").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_spec("A = atom +;\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 1,
                column: 11,
                message: "expected an expression, found `;`".into()
            }
        );
        let err = parse_spec("A = atom;\nB = atom $ atom;").unwrap_err();
        assert!(
            matches!(
                err,
                ParseError::Syntax {
                    line: 2,
                    column: 10,
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn missing_semicolon_and_empty_input() {
        assert!(matches!(
            parse_spec("A = atom"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(parse_spec("  # nothing\n").is_err());
    }

    #[test]
    fn duplicate_definition() {
        let err = parse_spec("A = atom;\nA = eps;").unwrap_err();
        assert_eq!(
            err,
            ParseError::Duplicate {
                name: "A".into(),
                line: 2,
                column: 1
            }
        );
    }

    #[test]
    fn keywords_are_reserved() {
        assert!(parse_spec("seq = atom;").is_err());
        assert!(parse_spec("atom2 = atom;").is_ok());
        assert!(parse_spec("_x = atom;").is_err());
    }
}
