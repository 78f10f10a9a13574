//! Lexer, recursive-descent parser and type checker, in one pass.

use super::ast::{builtin_type, is_reserved, Assign, BinOp, Expr, Func, Param, RuleAst, ValueType};
use super::{RuleError, MAX_RULE_CHARS};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Eq,
    Semi,
    LParen,
    RParen,
    Comma,
    Op(BinOp),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, RuleError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let single = |tok| Token { tok, line: tl, col: tc };
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {}
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '=' => out.push(single(Tok::Eq)),
            ';' => out.push(single(Tok::Semi)),
            '(' => out.push(single(Tok::LParen)),
            ')' => out.push(single(Tok::RParen)),
            ',' => out.push(single(Tok::Comma)),
            '+' => out.push(single(Tok::Op(BinOp::Add))),
            '-' => out.push(single(Tok::Op(BinOp::Sub))),
            '*' => out.push(single(Tok::Op(BinOp::Mul))),
            '/' => out.push(single(Tok::Op(BinOp::Div))),
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let ident: String = chars[start..i].iter().collect();
                col += i - start;
                out.push(Token {
                    tok: Tok::Ident(ident),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                let value: f64 = text.parse().map_err(|_| RuleError::Lex {
                    line: tl,
                    col: tc,
                    msg: format!("malformed number `{text}`"),
                })?;
                col += i - start;
                out.push(Token {
                    tok: Tok::Num(value),
                    line: tl,
                    col: tc,
                });
                continue;
            }
            other => {
                return Err(RuleError::Lex {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{other}`"),
                })
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    /// Names assigned so far with their current types.
    env: Vec<(String, ValueType)>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, RuleError> {
        let t = self.peek();
        Err(RuleError::Syntax {
            line: t.line,
            col: t.col,
            msg: msg.into(),
        })
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, RuleError> {
        if self.peek().tok == want {
            Ok(self.next())
        } else {
            self.syntax(format!("expected {what}, found {}", describe(&self.peek().tok)))
        }
    }

    fn lookup(&self, name: &str) -> Option<ValueType> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| *t)
            .or_else(|| builtin_type(name))
    }

    /// `IDENT = [-]NUMBER ;`
    fn at_param(&self) -> bool {
        matches!(self.peek_at(0), Tok::Ident(_))
            && *self.peek_at(1) == Tok::Eq
            && match self.peek_at(2) {
                Tok::Num(_) => *self.peek_at(3) == Tok::Semi,
                Tok::Op(BinOp::Sub) => matches!(self.peek_at(3), Tok::Num(_)) && *self.peek_at(4) == Tok::Semi,
                _ => false,
            }
    }

    fn target(&mut self) -> Result<(String, usize, usize), RuleError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(name) => {
                if is_reserved(&name) {
                    return Err(RuleError::Reserved {
                        line: t.line,
                        col: t.col,
                        name,
                    });
                }
                Ok((name, t.line, t.col))
            }
            other => Err(RuleError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected identifier, found {}", describe(&other)),
            }),
        }
    }

    fn program(&mut self) -> Result<RuleAst, RuleError> {
        let mut params: Vec<Param> = Vec::new();
        while self.at_param() {
            let (name, line, col) = self.target()?;
            if params.iter().any(|p| p.name == name) {
                return Err(RuleError::Syntax {
                    line,
                    col,
                    msg: format!("parameter `{name}` declared twice"),
                });
            }
            self.expect(Tok::Eq, "`=`")?;
            let negative = matches!(self.peek().tok, Tok::Op(BinOp::Sub));
            if negative {
                self.next();
            }
            let value = match self.next().tok {
                Tok::Num(v) => v,
                _ => unreachable!("at_param checked the number"),
            };
            self.expect(Tok::Semi, "`;`")?;
            let value = if negative { -value } else { value };
            self.env.push((name.clone(), ValueType::Scalar));
            params.push(Param { name, value });
        }

        let mut statements = Vec::new();
        while self.peek().tok != Tok::Eof {
            let (target, _, _) = self.target()?;
            self.expect(Tok::Eq, "`=`")?;
            let (expr, ty) = self.expr()?;
            self.expect(Tok::Semi, "`;`")?;
            self.env.push((target.clone(), ty));
            statements.push(Assign { target, expr, ty });
        }

        match statements.last() {
            None if params.is_empty() => Err(RuleError::Empty),
            Some(last) if last.target == "offspring" => {
                if last.ty != ValueType::Vector {
                    let t = &self.toks[self.toks.len() - 1];
                    return Err(RuleError::Type {
                        line: t.line,
                        col: t.col,
                        op: "offspring".into(),
                        msg: "offspring must be a vector, found a scalar".into(),
                    });
                }
                Ok(RuleAst { params, statements })
            }
            _ => Err(RuleError::MissingOffspring),
        }
    }

    fn expr(&mut self) -> Result<(Expr, ValueType), RuleError> {
        let (mut lhs, mut ty) = self.term()?;
        while let Tok::Op(op @ (BinOp::Add | BinOp::Sub)) = self.peek().tok {
            self.next();
            let (rhs, rty) = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
            ty = ty.join(rty);
        }
        Ok((lhs, ty))
    }

    fn term(&mut self) -> Result<(Expr, ValueType), RuleError> {
        let (mut lhs, mut ty) = self.unary()?;
        while let Tok::Op(op @ (BinOp::Mul | BinOp::Div)) = self.peek().tok {
            self.next();
            let (rhs, rty) = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
            ty = ty.join(rty);
        }
        Ok((lhs, ty))
    }

    fn unary(&mut self) -> Result<(Expr, ValueType), RuleError> {
        if let Tok::Op(BinOp::Sub) = self.peek().tok {
            self.next();
            let (e, ty) = self.unary()?;
            return Ok((Expr::Neg(Box::new(e)), ty));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<(Expr, ValueType), RuleError> {
        let t = self.next();
        match t.tok {
            Tok::Num(v) => Ok((Expr::Num(v), ValueType::Scalar)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| RuleError::Unbound {
                        line: t.line,
                        col: t.col,
                        name: name.clone(),
                    })?;
                    self.next();
                    let mut args = Vec::new();
                    if self.peek().tok != Tok::RParen {
                        loop {
                            args.push(self.expr()?);
                            if self.peek().tok == Tok::Comma {
                                self.next();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    let ty = check_call(func, &args, t.line, t.col)?;
                    Ok((Expr::Call(func, args.into_iter().map(|(e, _)| e).collect()), ty))
                } else {
                    let ty = self.lookup(&name).ok_or_else(|| RuleError::Unbound {
                        line: t.line,
                        col: t.col,
                        name: name.clone(),
                    })?;
                    Ok((Expr::Var(name), ty))
                }
            }
            other => Err(RuleError::Syntax {
                line: t.line,
                col: t.col,
                msg: format!("expected expression, found {}", describe(&other)),
            }),
        }
    }
}

fn check_call(func: Func, args: &[(Expr, ValueType)], line: usize, col: usize) -> Result<ValueType, RuleError> {
    let type_err = |msg: String| RuleError::Type {
        line,
        col,
        op: func.name().to_string(),
        msg,
    };
    if args.len() != func.arity() {
        return Err(type_err(format!(
            "expects {} argument(s), got {}",
            func.arity(),
            args.len()
        )));
    }
    let tys: Vec<ValueType> = args.iter().map(|(_, t)| *t).collect();
    match func {
        Func::Rand | Func::Randn => Ok(ValueType::Scalar),
        Func::Abs => Ok(tys[0]),
        Func::Min | Func::Max => Ok(tys[0].join(tys[1])),
        Func::Clamp => {
            if tys[0] != ValueType::Vector {
                return Err(type_err("argument must be a vector".into()));
            }
            Ok(ValueType::Vector)
        }
        Func::Bincross => {
            if tys[0] != ValueType::Vector || tys[1] != ValueType::Vector {
                return Err(type_err("first two arguments must be vectors".into()));
            }
            if tys[2] != ValueType::Scalar {
                return Err(type_err("crossover rate must be a scalar".into()));
            }
            Ok(ValueType::Vector)
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Num(v) => format!("number {v}"),
        Tok::Eq => "`=`".into(),
        Tok::Semi => "`;`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Op(op) => format!("`{}`", op.symbol()),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses and type-checks rule text.
pub fn parse(text: &str) -> Result<RuleAst, RuleError> {
    let len = text.chars().count();
    if len > MAX_RULE_CHARS {
        return Err(RuleError::TooLong { len });
    }
    if text.trim().is_empty() {
        return Err(RuleError::Empty);
    }
    let toks = lex(text)?;
    Parser {
        toks,
        pos: 0,
        env: Vec::new(),
    }
    .program()
}
