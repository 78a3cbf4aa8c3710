//! Minimal arithmetic expression evaluator for custom initial data.
//!
//! Supports `+ - * / ^`, parentheses, the variables `x` and `y`, the
//! constant `pi`, and a fixed set of functions. Expressions are parsed once
//! into a small tree and evaluated per node.

use crate::{Error, Result};

#[derive(Debug, Clone)]
enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(fn(f64) -> f64, Box<Node>),
    Call2(fn(f64, f64) -> f64, Box<Node>, Box<Node>),
}

impl Node {
    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::X => x,
            Node::Y => y,
            Node::Neg(a) => -a.eval(x, y),
            Node::Add(a, b) => a.eval(x, y) + b.eval(x, y),
            Node::Sub(a, b) => a.eval(x, y) - b.eval(x, y),
            Node::Mul(a, b) => a.eval(x, y) * b.eval(x, y),
            Node::Div(a, b) => a.eval(x, y) / b.eval(x, y),
            Node::Pow(a, b) => a.eval(x, y).powf(b.eval(x, y)),
            Node::Call1(f, a) => f(a.eval(x, y)),
            Node::Call2(f, a, b) => f(a.eval(x, y), b.eval(x, y)),
        }
    }
}

/// A parsed expression in the variables `x`, `y`.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(text: &str) -> Result<Expression> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "unexpected trailing input at token {}",
                p.pos
            )));
        }
        Ok(Expression { root })
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.root.eval(x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                out.push(Tok::Comma);
                i += 1;
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| Error::Expr(format!("bad number '{s}'")))?;
                out.push(Tok::Num(v));
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            _ => return Err(Error::Expr(format!("unexpected character '{c}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.bump() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!("expected {t:?}, got {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut node = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut node = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    node = Node::Mul(Box::new(node), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    node = Node::Div(Box::new(node), Box::new(self.unary()?));
                }
                _ => return Ok(node),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Minus) = self.peek() {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.bump();
            let exp = self.unary()?; // right associative
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.bump();
                    let first = self.expr()?;
                    match self.peek() {
                        Some(Tok::Comma) => {
                            self.bump();
                            let second = self.expr()?;
                            self.expect(Tok::RParen)?;
                            let f = fn2(&name)?;
                            Ok(Node::Call2(f, Box::new(first), Box::new(second)))
                        }
                        _ => {
                            self.expect(Tok::RParen)?;
                            let f = fn1(&name)?;
                            Ok(Node::Call1(f, Box::new(first)))
                        }
                    }
                } else {
                    match name.as_str() {
                        "x" => Ok(Node::X),
                        "y" => Ok(Node::Y),
                        "pi" => Ok(Node::Num(std::f64::consts::PI)),
                        "e" => Ok(Node::Num(std::f64::consts::E)),
                        other => Err(Error::Expr(format!("unknown identifier '{other}'"))),
                    }
                }
            }
            t => Err(Error::Expr(format!("unexpected token {t:?}"))),
        }
    }
}

fn fn1(name: &str) -> Result<fn(f64) -> f64> {
    Ok(match name {
        "sin" => f64::sin,
        "cos" => f64::cos,
        "tan" => f64::tan,
        "tanh" => f64::tanh,
        "exp" => f64::exp,
        "ln" | "log" => f64::ln,
        "sqrt" => f64::sqrt,
        "abs" => f64::abs,
        other => return Err(Error::Expr(format!("unknown function '{other}'"))),
    })
}

fn fn2(name: &str) -> Result<fn(f64, f64) -> f64> {
    Ok(match name {
        "min" => f64::min,
        "max" => f64::max,
        "hypot" => f64::hypot,
        "pow" => f64::powf,
        other => return Err(Error::Expr(format!("unknown two-argument function '{other}'"))),
    })
}
