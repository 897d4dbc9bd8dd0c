//! A small statement language over client arrays.
//!
//! ```text
//! A = randint(0, 10, 10)
//! B = (A * A) + (A * A)
//! print(B)
//! sum(B)
//! stats
//! ```
//!
//! Lines may carry an `ak.` prefix on calls and `import` lines are skipped,
//! so short notebook snippets replay unchanged. Each statement releases its
//! temporaries before the next one runs; reassigning a name releases the
//! previous binding.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::client::{ArrayHandle, Client, Operand};
use crate::dtype::{ArrayData, Dtype, Scalar};
use crate::error::{Error, Result};
use crate::ops::{BinOp, ReduceOp, UnaryOp};
use crate::protocol::FillSpec;

/// Elements shown by `print` before eliding the middle.
pub const PRINT_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    Float(f64),
    Op(BinOp),
    Minus,
    LParen,
    RParen,
    Comma,
    Assign,
}

fn tokenize(line: &str, no: usize) -> Result<Vec<Token>> {
    let err = |msg: String| Error::Parse { line: no, msg };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '#' => break,
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '=' => {
                out.push(Token::Assign);
                i += 1;
            }
            '+' => {
                out.push(Token::Op(BinOp::Add));
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Op(BinOp::Mul));
                i += 1;
            }
            '%' => {
                out.push(Token::Op(BinOp::Mod));
                i += 1;
            }
            '/' => {
                if chars.get(i + 1) == Some(&'/') {
                    out.push(Token::Op(BinOp::Floordiv));
                    i += 2;
                } else {
                    out.push(Token::Op(BinOp::Truediv));
                    i += 1;
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                if text.contains(['.', 'e', 'E']) {
                    let v = text.parse().map_err(|_| err(format!("bad number '{text}'")))?;
                    out.push(Token::Float(v));
                } else {
                    let v = text.parse().map_err(|_| err(format!("bad number '{text}'")))?;
                    out.push(Token::Int(v));
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let name = text.strip_prefix("ak.").unwrap_or(&text);
                if name.contains('.') {
                    return Err(err(format!("unsupported attribute access '{text}'")));
                }
                out.push(Token::Ident(name.to_string()));
            }
            other => return Err(err(format!("unexpected character '{other}'"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Num(Scalar),
    Name(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Statement {
    Assign(String, Expr),
    Print(Expr),
    Eval(Expr),
    Stats,
    Flush,
    Del(String),
    Quit,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Token) -> Result<()> {
        match self.next() {
            Some(t) if t == want => Ok(()),
            Some(t) => Err(self.err(format!("expected {want:?}, found {t:?}"))),
            None => Err(self.err(format!("expected {want:?} at end of line"))),
        }
    }

    fn statement(&mut self) -> Result<Statement> {
        let keyword = match (self.tokens.first(), self.tokens.len()) {
            (Some(Token::Ident(w)), 1) => match w.as_str() {
                "stats" => Some(Statement::Stats),
                "flush" => Some(Statement::Flush),
                "quit" | "exit" => Some(Statement::Quit),
                _ => None,
            },
            _ => None,
        };
        if let Some(stmt) = keyword {
            return Ok(stmt);
        }
        let stmt = match (self.tokens.first(), self.tokens.get(1)) {
            (Some(Token::Ident(w)), Some(Token::Ident(name))) if w == "del" => {
                let name = name.clone();
                self.pos = 2;
                Statement::Del(name)
            }
            (Some(Token::Ident(name)), Some(Token::Assign)) => {
                let name = name.clone();
                self.pos = 2;
                Statement::Assign(name, self.expr()?)
            }
            (Some(Token::Ident(w)), _) if w == "print" => {
                self.pos = 1;
                Statement::Print(self.expr()?)
            }
            _ => Statement::Eval(self.expr()?),
        };
        if let Some(t) = self.peek() {
            return Err(self.err(format!("unexpected {t:?} after statement")));
        }
        Ok(stmt)
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut left = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op(BinOp::Add)) => BinOp::Add,
                Some(Token::Minus) => BinOp::Sub,
                _ => return Ok(left),
            };
            self.pos += 1;
            left = Expr::Bin(op, Box::new(left), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut left = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op(op @ (BinOp::Mul | BinOp::Truediv | BinOp::Floordiv | BinOp::Mod))) => *op,
                _ => return Ok(left),
            };
            self.pos += 1;
            left = Expr::Bin(op, Box::new(left), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Minus) => match self.factor()? {
                Expr::Num(Scalar::Int(v)) => Ok(Expr::Num(Scalar::Int(-v))),
                Expr::Num(Scalar::Float(v)) => Ok(Expr::Num(Scalar::Float(-v))),
                e => Ok(Expr::Neg(Box::new(e))),
            },
            Some(Token::Int(v)) => Ok(Expr::Num(Scalar::Int(v))),
            Some(Token::Float(v)) => Ok(Expr::Num(Scalar::Float(v))),
            Some(Token::LParen) => {
                let e = self.expr()?;
                self.expect(Token::RParen)?;
                Ok(e)
            }
            Some(Token::Ident(name)) => {
                if self.peek() != Some(&Token::LParen) {
                    return match name.as_str() {
                        "True" => Ok(Expr::Num(Scalar::Bool(true))),
                        "False" => Ok(Expr::Num(Scalar::Bool(false))),
                        _ => Ok(Expr::Name(name)),
                    };
                }
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek() == Some(&Token::RParen) {
                    self.pos += 1;
                    return Ok(Expr::Call(name, args));
                }
                loop {
                    args.push(self.expr()?);
                    match self.next() {
                        Some(Token::Comma) => {}
                        Some(Token::RParen) => return Ok(Expr::Call(name, args)),
                        _ => return Err(self.err(format!("unclosed call to {name}"))),
                    }
                }
            }
            Some(t) => Err(self.err(format!("unexpected {t:?}"))),
            None => Err(self.err("unexpected end of line")),
        }
    }
}

fn parse(line: &str, no: usize) -> Result<Option<Statement>> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with("import ") || trimmed.starts_with("from ") {
        return Ok(None);
    }
    let tokens = tokenize(trimmed, no)?;
    if tokens.is_empty() {
        return Ok(None);
    }
    Parser { tokens, pos: 0, line: no }.statement().map(Some)
}

enum Val {
    Named(String),
    Temp(ArrayHandle),
    Scalar(Scalar),
}

fn operand<'a>(vars: &'a BTreeMap<String, ArrayHandle>, v: &'a Val) -> Operand<'a> {
    match v {
        Val::Scalar(s) => Operand::Scalar(*s),
        Val::Named(n) => Operand::Array(&vars[n]),
        Val::Temp(h) => Operand::Array(h),
    }
}

/// Formats values the way `print` shows them.
pub fn format_array(data: &ArrayData) -> String {
    let items = data.to_scalars();
    let show = |s: &[Scalar]| s.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ");
    if items.len() <= PRINT_LIMIT {
        format!("[{}]", show(&items))
    } else {
        let half = PRINT_LIMIT / 2;
        format!("[{} ... {}]", show(&items[..half]), show(&items[items.len() - half..]))
    }
}

/// Interpreter state: the client plus named bindings.
pub struct Repl {
    client: Client,
    vars: BTreeMap<String, ArrayHandle>,
    seed: u64,
    line: usize,
}

/// Result of one input line.
#[derive(Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub output: Option<String>,
    pub quit: bool,
}

impl Repl {
    /// `seed` is the base for `randint` calls that do not give one.
    pub fn new(client: Client, seed: u64) -> Repl {
        Repl { client, vars: BTreeMap::new(), seed, line: 0 }
    }

    pub fn client(&self) -> &Client {
        &self.client
    }

    pub fn client_mut(&mut self) -> &mut Client {
        &mut self.client
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.keys().map(String::as_str)
    }

    /// Runs one line. Errors leave the session usable.
    pub fn eval_line(&mut self, line: &str) -> Result<Outcome> {
        self.line += 1;
        let Some(stmt) = parse(line, self.line)? else {
            return Ok(Outcome::default());
        };
        let output = match stmt {
            Statement::Quit => return Ok(Outcome { output: None, quit: true }),
            Statement::Stats => Some(self.stats()?),
            Statement::Flush => {
                self.client.flush()?;
                None
            }
            Statement::Del(name) => {
                let h = self.vars.remove(&name).ok_or_else(|| self.undefined(&name))?;
                self.client.release(h)?;
                None
            }
            Statement::Assign(name, expr) => {
                let v = self.eval(&expr)?;
                let h = match v {
                    Val::Temp(h) => h,
                    Val::Named(other) => self.client.clone_handle(&self.vars[&other]),
                    Val::Scalar(s) => {
                        return Err(Error::Argument(format!(
                            "cannot bind scalar {s} to '{name}'; only arrays can be named"
                        )))
                    }
                };
                if let Some(old) = self.vars.insert(name, h) {
                    self.client.release(old)?;
                }
                None
            }
            Statement::Print(expr) | Statement::Eval(expr) => {
                let v = self.eval(&expr)?;
                Some(self.show(v)?)
            }
        };
        Ok(Outcome { output, quit: false })
    }

    /// Reads statements until end of input or `quit`. Each output line is
    /// written as produced; errors are written as `error: ...` lines.
    pub fn run(&mut self, input: impl BufRead, mut out: impl Write, prompt: bool) -> Result<()> {
        if prompt {
            write!(out, ">>> ")?;
            out.flush()?;
        }
        for line in input.lines() {
            match self.eval_line(&line?) {
                Ok(Outcome { quit: true, .. }) => break,
                Ok(Outcome { output: Some(text), .. }) => writeln!(out, "{text}")?,
                Ok(_) => {}
                Err(e @ Error::Io(_)) => return Err(e),
                Err(e) => writeln!(out, "error: {e}")?,
            }
            if prompt {
                write!(out, ">>> ")?;
                out.flush()?;
            }
        }
        Ok(())
    }

    /// Releases every binding and idle array.
    pub fn close(mut self) -> Result<Client> {
        for (_, h) in std::mem::take(&mut self.vars) {
            self.client.release(h)?;
        }
        self.client.drain_cache()?;
        Ok(self.client)
    }

    fn undefined(&self, name: &str) -> Error {
        Error::Argument(format!("name '{name}' is not defined"))
    }

    fn stats(&mut self) -> Result<String> {
        let report = self.client.client_metrics()?;
        let m = report.client;
        let mut line = format!(
            "messages_sent={} arrays_created={} arrays_deleted={} cache_hits_expr={} cache_hits_reduce={} freelist_hits={} pending={}",
            m.messages_sent,
            m.arrays_created,
            m.arrays_deleted,
            m.cache_hits_expr,
            m.cache_hits_reduce,
            m.freelist_hits,
            self.client.pending_commands(),
        );
        if let Some(s) = report.server {
            line.push_str(&format!(
                " server_messages={} server_arrays_created={} server_arrays_deleted={}",
                s.messages_handled, s.arrays_created, s.arrays_deleted
            ));
        }
        Ok(line)
    }

    fn show(&mut self, v: Val) -> Result<String> {
        match v {
            Val::Scalar(s) => Ok(s.to_string()),
            Val::Named(name) => {
                let h = &self.vars[&name];
                Ok(format_array(&self.client.to_values(h)?))
            }
            Val::Temp(h) => {
                let data = self.client.to_values(&h);
                self.client.release(h)?;
                Ok(format_array(&data?))
            }
        }
    }

    fn drop_val(&mut self, v: Val) -> Result<()> {
        if let Val::Temp(h) = v {
            self.client.release(h)?;
        }
        Ok(())
    }

    fn eval(&mut self, e: &Expr) -> Result<Val> {
        match e {
            Expr::Num(s) => Ok(Val::Scalar(*s)),
            Expr::Name(n) => {
                if self.vars.contains_key(n) {
                    Ok(Val::Named(n.clone()))
                } else {
                    Err(self.undefined(n))
                }
            }
            Expr::Neg(inner) => {
                let v = self.eval(inner)?;
                let out = match &v {
                    Val::Scalar(_) => Err(Error::Argument("negation needs an array".into())),
                    Val::Named(n) => self.client.unary(UnaryOp::Neg, &self.vars[n]),
                    Val::Temp(h) => self.client.unary(UnaryOp::Neg, h),
                };
                self.drop_val(v)?;
                out.map(Val::Temp)
            }
            Expr::Bin(op, l, r) => {
                let lv = self.eval(l)?;
                let rv = match self.eval(r) {
                    Ok(v) => v,
                    Err(e) => {
                        self.drop_val(lv)?;
                        return Err(e);
                    }
                };
                let (a, b) = (operand(&self.vars, &lv), operand(&self.vars, &rv));
                let out = self.client.binop(*op, a, b);
                self.drop_val(lv)?;
                self.drop_val(rv)?;
                out.map(Val::Temp)
            }
            Expr::Call(name, args) => self.call(name, args),
        }
    }

    fn scalar_args(&mut self, name: &str, args: &[Expr]) -> Result<Vec<Scalar>> {
        args.iter()
            .map(|a| match a {
                Expr::Num(s) => Ok(*s),
                _ => Err(Error::Argument(format!("{name} takes literal numbers"))),
            })
            .collect()
    }

    fn size_arg(name: &str, s: Scalar) -> Result<usize> {
        s.as_i64()
            .filter(|v| *v >= 0)
            .map(|v| v as usize)
            .ok_or_else(|| Error::Argument(format!("{name}: size must be a non-negative integer")))
    }

    fn call(&mut self, name: &str, args: &[Expr]) -> Result<Val> {
        let arity = |n: &[usize]| -> Result<()> {
            if n.contains(&args.len()) {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} takes {n:?} arguments, got {}", args.len())))
            }
        };
        let constructor = |s: &mut Self, fill: FillSpec, dtype: Dtype| -> Result<Val> {
            arity(&[1])?;
            let n = Self::size_arg(name, s.scalar_args(name, args)?[0])?;
            s.client.create(fill, dtype, n).map(Val::Temp)
        };
        match name {
            "randint" => {
                arity(&[3, 4])?;
                let a = self.scalar_args(name, args)?;
                let int = |s: Scalar| {
                    s.as_i64().ok_or_else(|| Error::Argument("randint takes integers".into()))
                };
                let (lo, hi, n) = (int(a[0])?, int(a[1])?, Self::size_arg(name, a[2])?);
                let seed = match a.get(3) {
                    Some(s) => int(*s)? as u64,
                    None => {
                        self.seed += 1;
                        self.seed
                    }
                };
                self.client.randint(lo, hi, n, seed).map(Val::Temp)
            }
            "arange" => constructor(self, FillSpec::Arange, Dtype::Int64),
            "zeros" => constructor(self, FillSpec::Const { value: Scalar::Float(0.0) }, Dtype::Float64),
            "ones" => constructor(self, FillSpec::Const { value: Scalar::Float(1.0) }, Dtype::Float64),
            "abs" => {
                arity(&[1])?;
                let v = self.eval(&args[0])?;
                let out = match &v {
                    Val::Named(n) => self.client.unary(UnaryOp::Abs, &self.vars[n]),
                    Val::Temp(h) => self.client.unary(UnaryOp::Abs, h),
                    Val::Scalar(_) => Err(Error::Argument("abs needs an array".into())),
                };
                self.drop_val(v)?;
                out.map(Val::Temp)
            }
            "print" => {
                arity(&[1])?;
                self.eval(&args[0])
            }
            "mean" | "std" => {
                arity(&[1])?;
                let v = self.eval(&args[0])?;
                let h = match &v {
                    Val::Named(n) => &self.vars[n],
                    Val::Temp(h) => h,
                    Val::Scalar(_) => return Err(Error::Argument(format!("{name} needs an array"))),
                };
                let out = if name == "mean" { self.client.mean(h) } else { self.client.std(h) };
                self.drop_val(v)?;
                out.map(|x| Val::Scalar(Scalar::Float(x)))
            }
            _ => {
                let op = ReduceOp::parse(name).ok_or_else(|| Error::Argument(format!("unknown function '{name}'")))?;
                arity(&[1])?;
                let v = self.eval(&args[0])?;
                let out = match &v {
                    Val::Named(n) => self.client.reduce(op, &self.vars[n]),
                    Val::Temp(h) => self.client.reduce(op, h),
                    Val::Scalar(_) => Err(Error::Argument(format!("{name} needs an array"))),
                };
                self.drop_val(v)?;
                out.map(Val::Scalar)
            }
        }
    }
}
