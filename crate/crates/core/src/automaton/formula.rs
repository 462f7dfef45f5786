//! Propositional formulas over atomic propositions, used as transition
//! guards and matrix entries.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::Error;

/// Guard formula. `Empty` is the absent-edge marker in transition matrices;
/// it evaluates to false and prints as `e`.
#[derive(Clone, Debug, PartialEq)]
pub enum PropFormula {
    True,
    False,
    Empty,
    Atom(String),
    Not(Box<PropFormula>),
    And(Box<PropFormula>, Box<PropFormula>),
    Or(Box<PropFormula>, Box<PropFormula>),
}

impl PropFormula {
    pub fn not(f: PropFormula) -> Self {
        Self::Not(Box::new(f))
    }

    pub fn and(a: PropFormula, b: PropFormula) -> Self {
        Self::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: PropFormula, b: PropFormula) -> Self {
        Self::Or(Box::new(a), Box::new(b))
    }

    pub fn eval(&self, truth: &dyn Fn(&str) -> bool) -> bool {
        match self {
            Self::True => true,
            Self::False | Self::Empty => false,
            Self::Atom(a) => truth(a),
            Self::Not(f) => !f.eval(truth),
            Self::And(a, b) => a.eval(truth) && b.eval(truth),
            Self::Or(a, b) => a.eval(truth) || b.eval(truth),
        }
    }

    /// Evaluate against an assignment bitmask relative to `aps` order.
    pub fn eval_mask(&self, aps: &[String], mask: u16) -> bool {
        self.eval(&|name| {
            aps.iter()
                .position(|a| a == name)
                .map(|i| mask & (1 << i) != 0)
                .unwrap_or(false)
        })
    }

    pub fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Self::Atom(a) => {
                out.insert(a.clone());
            }
            Self::Not(f) => f.collect_atoms(out),
            Self::And(a, b) | Self::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            _ => {}
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Self::True => write!(f, "true"),
            Self::False => write!(f, "false"),
            Self::Empty => write!(f, "e"),
            Self::Atom(a) => write!(f, "{a}"),
            Self::Not(inner) => {
                write!(f, "!")?;
                inner.fmt_prec(f, 3)
            }
            Self::And(a, b) => {
                if prec > 2 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 2)?;
                write!(f, " & ")?;
                b.fmt_prec(f, 2)?;
                if prec > 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Self::Or(a, b) => {
                if prec > 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " | ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Recursive-descent parser: `|` binds loosest, then `&`, then `!`, with
/// parentheses. Atoms are `[A-Za-z_][A-Za-z0-9_]*`; `true` and `false` are
/// keywords. `line` and `col0` locate the formula inside a larger file for
/// error reporting.
pub fn parse_formula(src: &str, line: usize, col0: usize) -> Result<PropFormula, Error> {
    let mut p = FormulaParser {
        chars: src.char_indices().peekable(),
        src,
        line,
        col0,
    };
    let f = p.or_expr()?;
    p.skip_ws();
    if let Some(&(i, c)) = p.chars.peek() {
        return Err(p.err(i, format!("unexpected `{c}` after formula")));
    }
    Ok(f)
}

struct FormulaParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col0: usize,
}

impl<'a> FormulaParser<'a> {
    fn err(&self, offset: usize, msg: String) -> Error {
        Error::Parse {
            line: self.line,
            col: self.col0 + offset + 1,
            msg,
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn or_expr(&mut self) -> Result<PropFormula, Error> {
        let mut f = self.and_expr()?;
        loop {
            self.skip_ws();
            if matches!(self.chars.peek(), Some(&(_, '|'))) {
                self.chars.next();
                f = PropFormula::or(f, self.and_expr()?);
            } else {
                return Ok(f);
            }
        }
    }

    fn and_expr(&mut self) -> Result<PropFormula, Error> {
        let mut f = self.unary()?;
        loop {
            self.skip_ws();
            if matches!(self.chars.peek(), Some(&(_, '&'))) {
                self.chars.next();
                f = PropFormula::and(f, self.unary()?);
            } else {
                return Ok(f);
            }
        }
    }

    fn unary(&mut self) -> Result<PropFormula, Error> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some((_, '!')) => {
                self.chars.next();
                Ok(PropFormula::not(self.unary()?))
            }
            Some((open, '(')) => {
                self.chars.next();
                let f = self.or_expr()?;
                self.skip_ws();
                match self.chars.next() {
                    Some((_, ')')) => Ok(f),
                    _ => Err(self.err(open, "unclosed `(`".into())),
                }
            }
            Some((start, c)) if c.is_ascii_alphabetic() || c == '_' => {
                let mut end = start;
                while let Some(&(i, c)) = self.chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        end = i + c.len_utf8();
                        self.chars.next();
                    } else {
                        break;
                    }
                }
                let word = &self.src[start..end];
                Ok(match word {
                    "true" => PropFormula::True,
                    "false" => PropFormula::False,
                    _ => PropFormula::Atom(word.to_string()),
                })
            }
            Some((i, c)) => Err(self.err(i, format!("expected formula, found `{c}`"))),
            None => Err(self.err(self.src.len(), "expected formula, found end of line".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> PropFormula {
        parse_formula(s, 1, 0).unwrap()
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let f = parse("a | b & c");
        let aps = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        // a=false, b=true, c=true: a | (b & c) = true, (a | b) & c would also
        // be true; distinguish with a=true, c=false.
        assert!(f.eval_mask(&aps, 0b110));
        assert!(f.eval_mask(&aps, 0b001));
        assert!(!f.eval_mask(&aps, 0b010));
    }

    #[test]
    fn not_parens_and_keywords() {
        let f = parse("!(a1 | a2) & true");
        let aps = vec!["a1".to_string(), "a2".to_string()];
        assert!(f.eval_mask(&aps, 0b00));
        assert!(!f.eval_mask(&aps, 0b01));
        assert!(!parse("false").eval_mask(&aps, 0b00));
    }

    #[test]
    fn display_round_trips() {
        for s in ["!a1 & !a2", "a | b & c", "!(a | b)", "a & (b | c) & !d", "true"] {
            let f = parse(s);
            let g = parse(&f.to_string());
            assert_eq!(f, g, "{s} vs {f}");
        }
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_formula("a &", 7, 10).unwrap_err();
        match err {
            Error::Parse { line, col, .. } => {
                assert_eq!(line, 7);
                assert_eq!(col, 14);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("(a | b", 1, 0).is_err());
        assert!(parse_formula("a b", 1, 0).is_err());
    }
}
