//! Recursive-descent parser.
//!
//! Precedence, tightest first: `^` (integer exponent), unary `-`, `* /`,
//! `+ -`. Binary operators associate to the left.

use super::{Expr, ExprError, Func, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num {
        value: f64,
        exact: bool,
        int: Option<i64>,
    },
    Ident(String),
    Op(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

/// Parses `src` with `n` state and `m` control variables in scope.
pub fn parse(src: &str, n: usize, m: usize) -> Result<Expr, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Empty);
    }
    let tokens = lex(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        n,
        m,
    };
    let e = p.expr()?;
    match &p.peek().tok {
        Tok::End => Ok(e),
        _ => Err(p.error("unexpected trailing input")),
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || c == '.' {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                line: tl,
                column: tc,
                message: format!("malformed number '{text}'"),
            })?;
            let int = if text.chars().all(|c| c.is_ascii_digit()) {
                text.parse().ok()
            } else {
                None
            };
            Tok::Num {
                value,
                exact: decimal_is_exact(&text),
                int,
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if "+-*/^()".contains(c) {
            i += 1;
            Tok::Op(c)
        } else {
            return Err(ExprError::Syntax {
                line: tl,
                column: tc,
                message: format!("unexpected character '{c}'"),
            });
        };
        col += i - start;
        out.push(Token {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Token {
        tok: Tok::End,
        line,
        column: col,
    });
    Ok(out)
}

/// Whether a decimal literal denotes a value exactly representable as `f64`.
fn decimal_is_exact(text: &str) -> bool {
    let lower = text.to_ascii_lowercase();
    let (mant, exp) = match lower.split_once('e') {
        Some((m, e)) => (m.to_string(), e.parse::<i32>().unwrap_or(0)),
        None => (lower.clone(), 0),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((&mant, ""));
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let scale = exp - frac_part.len() as i32;
    let Ok(mut m) = (if digits.is_empty() {
        Ok(0u128)
    } else {
        digits.parse::<u128>()
    }) else {
        return false;
    };
    if m == 0 {
        return true;
    }
    if scale >= 0 {
        for _ in 0..scale {
            m = match m.checked_mul(10) {
                Some(v) => v,
                None => return false,
            };
        }
        return m < (1u128 << 53) || fits_mantissa(m);
    }
    // m / 10^k = m / (2^k 5^k): exact iff 5^k | m and the odd part fits
    for _ in 0..(-scale) {
        if m % 5 != 0 {
            return false;
        }
        m /= 5;
    }
    fits_mantissa(m)
}

fn fits_mantissa(mut m: u128) -> bool {
    while m > 0 && m % 2 == 0 {
        m /= 2;
    }
    m < (1u128 << 53)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    n: usize,
    m: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> ExprError {
        let t = self.peek();
        ExprError::Syntax {
            line: t.line,
            column: t.column,
            message: message.to_string(),
        }
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek().tok == Tok::Op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<(), ExprError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{op}'")))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while self.eat('^') {
            let k = self.exponent()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.eat('(');
        let neg = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        let k = match self.peek().tok.clone() {
            Tok::Num { int: Some(k), .. } if k <= i32::MAX as i64 => {
                self.bump();
                k as i32
            }
            _ => return Err(self.error("exponent must be an integer literal")),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -k } else { k })
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num { value, exact, .. } => {
                self.bump();
                Ok(Expr::Const { value, exact })
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(f) = Func::from_name(&name) {
                    self.expect('(')?;
                    let arg = self.expr()?;
                    self.expect(')')?;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                self.variable(&name, t.line, t.column)
            }
            Tok::End => Err(self.error("unexpected end of input")),
            Tok::Op(c) => Err(self.error(&format!("unexpected '{c}'"))),
        }
    }

    fn variable(&self, name: &str, line: usize, column: usize) -> Result<Expr, ExprError> {
        let unknown = || ExprError::UnknownIdentifier {
            name: name.to_string(),
            line,
            column,
        };
        let (kind, digits) = name.split_at(1);
        let idx: usize = digits.parse().map_err(|_| unknown())?;
        if idx == 0 || digits.starts_with('0') {
            return Err(unknown());
        }
        let (var, limit) = match kind {
            "x" => (Var::State(idx - 1), self.n),
            "u" => (Var::Control(idx - 1), self.m),
            _ => return Err(unknown()),
        };
        if idx > limit {
            return Err(ExprError::VariableOutOfRange {
                name: name.to_string(),
            });
        }
        Ok(Expr::Var(var))
    }
}
