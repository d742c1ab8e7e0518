//! OpenQASM 2.0 reader that lowers programs into the {U3, CZ} basis.
//!
//! Accepted statements: the `OPENQASM` header, `include`, a single `qreg`,
//! `creg` (only as a measurement target), `gate` macro definitions whose
//! bodies use supported gates, gate calls from {`u3`, `u`, `U`, `cz`, `cx`,
//! `CX`, `h`, `x`, `rz`}, `measure` and `barrier`. Register-wide calls such
//! as `h q;` are broadcast over the register.
//!
//! Lowering rules:
//!
//! | source      | emitted                                   |
//! |-------------|-------------------------------------------|
//! | `u3/u/U`    | `U3(θ, φ, λ)`                             |
//! | `h`         | `U3(π/2, 0, π)`                           |
//! | `x`         | `U3(π, 0, π)`                             |
//! | `rz(λ)`     | `U3(0, 0, λ)`                             |
//! | `cx c,t`    | `U3(π/2,0,π) t; CZ c,t; U3(π/2,0,π) t`    |
//!
//! `measure` only checks that its operand exists (every qubit is read out
//! once at the end) and `barrier` is dropped.

use std::collections::HashMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::circuit::{Circuit, GateKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QasmError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: unsupported gate `{name}`")]
    UnsupportedGate { line: usize, name: String },
    #[error("line {line}: qubit index {index} out of range for register of size {size}")]
    QubitOutOfRange {
        line: usize,
        index: usize,
        size: usize,
    },
    #[error("line {line}: unsupported feature: {feature}")]
    Unsupported { line: usize, feature: String },
}

/// Parses OpenQASM 2.0 source into a [`Circuit`].
pub fn parse_qasm(text: &str) -> Result<Circuit, QasmError> {
    let tokens = lex(text)?;
    Parser {
        tokens,
        pos: 0,
        qreg: None,
        cregs: HashMap::new(),
        macros: HashMap::new(),
        circuit: None,
    }
    .program()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Real(f64),
    Int(u64),
    Str(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 14] = [
    "->", "==", ";", ",", "(", ")", "[", "]", "{", "}", "+", "-", "*", "/",
];

fn lex(text: &str) -> Result<Vec<Token>, QasmError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let start_col = col;
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
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let push = |tok, out: &mut Vec<Token>| {
            out.push(Token {
                tok,
                line,
                column: start_col,
            })
        };
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            push(Tok::Ident(word), &mut out);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            let mut real = false;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                real |= chars[i] == '.';
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    real = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            col += i - start;
            let bad = || QasmError::Syntax {
                line,
                column: start_col,
                message: format!("malformed number `{text}`"),
            };
            let tok = if real {
                Tok::Real(text.parse().map_err(|_| bad())?)
            } else {
                Tok::Int(text.parse().map_err(|_| bad())?)
            };
            push(tok, &mut out);
            continue;
        }
        if c == '"' {
            let start = i + 1;
            let mut j = start;
            while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                j += 1;
            }
            if j >= chars.len() || chars[j] != '"' {
                return Err(QasmError::Syntax {
                    line,
                    column: start_col,
                    message: "unterminated string".into(),
                });
            }
            let s: String = chars[start..j].iter().collect();
            col += j + 1 - i;
            i = j + 1;
            push(Tok::Str(s), &mut out);
            continue;
        }
        if let Some(sym) = SYMBOLS.iter().find(|s| {
            s.chars()
                .enumerate()
                .all(|(k, sc)| chars.get(i + k) == Some(&sc))
        }) {
            i += sym.len();
            col += sym.len();
            push(Tok::Sym(sym), &mut out);
            continue;
        }
        if c == '^' {
            i += 1;
            col += 1;
            push(Tok::Sym("^"), &mut out);
            continue;
        }
        return Err(QasmError::Syntax {
            line,
            column: start_col,
            message: format!("unexpected character `{c}`"),
        });
    }
    Ok(out)
}

/// Angle expression, kept symbolic so macro parameters can be substituted.
#[derive(Debug, Clone)]
enum Expr {
    Num(f64),
    Param(String),
    Neg(Box<Expr>),
    Bin(char, Box<Expr>, Box<Expr>),
    Call(String, Box<Expr>),
}

impl Expr {
    fn eval(&self, env: &HashMap<String, f64>, line: usize) -> Result<f64, QasmError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Param(name) => *env.get(name).ok_or_else(|| QasmError::Syntax {
                line,
                column: 1,
                message: format!("unknown parameter `{name}`"),
            })?,
            Expr::Neg(e) => -e.eval(env, line)?,
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(env, line)?, b.eval(env, line)?);
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(env, line)?;
                match f.as_str() {
                    "sin" => v.sin(),
                    "cos" => v.cos(),
                    "tan" => v.tan(),
                    "exp" => v.exp(),
                    "ln" => v.ln(),
                    _ => v.sqrt(),
                }
            }
        })
    }
}

/// Gate argument before register resolution.
#[derive(Debug, Clone)]
enum Arg {
    Indexed(String, usize),
    Whole(String),
}

#[derive(Debug, Clone)]
struct Call {
    name: String,
    params: Vec<Expr>,
    args: Vec<Arg>,
    line: usize,
}

#[derive(Debug, Clone)]
struct Macro {
    params: Vec<String>,
    args: Vec<String>,
    body: Vec<Call>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<(String, usize)>,
    cregs: HashMap<String, usize>,
    macros: HashMap<String, Macro>,
    circuit: Option<Circuit>,
}

const H: GateKind = GateKind::U3 {
    theta: PI / 2.0,
    phi: 0.0,
    lambda: PI,
};

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.column))
            .unwrap_or((1, 1))
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, QasmError> {
        let (line, column) = self.here();
        Err(QasmError::Syntax {
            line,
            column,
            message: message.into(),
        })
    }

    fn next(&mut self) -> Result<Tok, QasmError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.tok.clone())
            }
            None => self.error("unexpected end of input"),
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if self.peek() == Some(&Tok::Sym(static_sym(sym))) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), QasmError> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.error(format!("expected `{sym}`"))
        }
    }

    fn ident(&mut self) -> Result<String, QasmError> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.pos -= 1;
                self.error("expected identifier")
            }
        }
    }

    fn int(&mut self) -> Result<usize, QasmError> {
        match self.next()? {
            Tok::Int(v) => Ok(v as usize),
            _ => {
                self.pos -= 1;
                self.error("expected integer")
            }
        }
    }

    fn program(mut self) -> Result<Circuit, QasmError> {
        if matches!(self.peek(), Some(Tok::Ident(s)) if s == "OPENQASM") {
            self.pos += 1;
            match self.next()? {
                Tok::Real(v) if (2.0..3.0).contains(&v) => {}
                _ => {
                    self.pos -= 1;
                    return self.error("only OPENQASM 2.x is supported");
                }
            }
            self.expect(";")?;
        }
        while self.pos < self.tokens.len() {
            self.statement()?;
        }
        match self.circuit {
            Some(c) => Ok(c),
            None => self.error("program declares no quantum register"),
        }
    }

    fn statement(&mut self) -> Result<(), QasmError> {
        let (line, _) = self.here();
        let word = self.ident()?;
        match word.as_str() {
            "include" => {
                match self.next()? {
                    Tok::Str(_) => {}
                    _ => return self.error("expected file name"),
                }
                self.expect(";")
            }
            "qreg" => {
                let name = self.ident()?;
                self.expect("[")?;
                let size = self.int()?;
                self.expect("]")?;
                self.expect(";")?;
                if self.qreg.is_some() {
                    return Err(QasmError::Unsupported {
                        line,
                        feature: "more than one quantum register".into(),
                    });
                }
                if size == 0 {
                    return self.error("register size must be at least 1");
                }
                self.qreg = Some((name, size));
                self.circuit = Some(Circuit::new(size));
                Ok(())
            }
            "creg" => {
                let name = self.ident()?;
                self.expect("[")?;
                let size = self.int()?;
                self.expect("]")?;
                self.expect(";")?;
                self.cregs.insert(name, size);
                Ok(())
            }
            "gate" => self.gate_definition(),
            "measure" => {
                let q = self.arg()?;
                self.expect("->")?;
                let c = self.arg()?;
                self.expect(";")?;
                self.resolve_qubits(&q, line)?;
                let (name, index) = match &c {
                    Arg::Indexed(n, i) => (n, Some(*i)),
                    Arg::Whole(n) => (n, None),
                };
                match self.cregs.get(name) {
                    Some(&size) if index.is_none_or(|i| i < size) => Ok(()),
                    Some(&size) => Err(QasmError::Syntax {
                        line,
                        column: 1,
                        message: format!("classical bit {index:?} out of range for `{name}[{size}]`"),
                    }),
                    None => self.error(format!("unknown classical register `{name}`")),
                }
            }
            "barrier" => {
                loop {
                    let a = self.arg()?;
                    self.resolve_qubits(&a, line)?;
                    if !self.eat(",") {
                        break;
                    }
                }
                self.expect(";")
            }
            "if" => Err(QasmError::Unsupported {
                line,
                feature: "classical conditionals".into(),
            }),
            "opaque" | "reset" => Err(QasmError::Unsupported {
                line,
                feature: format!("`{word}` statements"),
            }),
            _ => {
                let call = self.call_rest(word, line)?;
                let bound: Vec<Vec<usize>> = call
                    .args
                    .iter()
                    .map(|a| self.resolve_qubits(a, line))
                    .collect::<Result<_, _>>()?;
                let params: Vec<f64> = call
                    .params
                    .iter()
                    .map(|e| e.eval(&HashMap::new(), line))
                    .collect::<Result<_, _>>()?;
                // broadcast register-wide arguments
                let width = bound.iter().map(Vec::len).max().unwrap_or(1);
                if bound.iter().any(|b| b.len() != 1 && b.len() != width) {
                    return self.error("mismatched register sizes in broadcast");
                }
                for k in 0..width {
                    let qubits: Vec<usize> = bound
                        .iter()
                        .map(|b| if b.len() == 1 { b[0] } else { b[k] })
                        .collect();
                    self.apply(&call.name, &params, &qubits, line, 0)?;
                }
                Ok(())
            }
        }
    }

    fn gate_definition(&mut self) -> Result<(), QasmError> {
        let name = self.ident()?;
        let mut params = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                params.push(self.ident()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let mut args = vec![self.ident()?];
        while self.eat(",") {
            args.push(self.ident()?);
        }
        self.expect("{")?;
        let mut body = Vec::new();
        while !self.eat("}") {
            let (line, _) = self.here();
            let word = self.ident()?;
            if word == "barrier" {
                while !self.eat(";") {
                    self.next()?;
                }
                continue;
            }
            body.push(self.call_rest(word, line)?);
        }
        self.macros.insert(name, Macro { params, args, body });
        Ok(())
    }

    /// Parses `[(params)] args ;` after the gate name.
    fn call_rest(&mut self, name: String, line: usize) -> Result<Call, QasmError> {
        let mut params = Vec::new();
        if self.eat("(") && !self.eat(")") {
            loop {
                params.push(self.expr()?);
                if self.eat(")") {
                    break;
                }
                self.expect(",")?;
            }
        }
        let mut args = vec![self.arg()?];
        while self.eat(",") {
            args.push(self.arg()?);
        }
        self.expect(";")?;
        Ok(Call {
            name,
            params,
            args,
            line,
        })
    }

    fn arg(&mut self) -> Result<Arg, QasmError> {
        let name = self.ident()?;
        if self.eat("[") {
            let i = self.int()?;
            self.expect("]")?;
            Ok(Arg::Indexed(name, i))
        } else {
            Ok(Arg::Whole(name))
        }
    }

    fn resolve_qubits(&self, arg: &Arg, line: usize) -> Result<Vec<usize>, QasmError> {
        let Some((reg, size)) = &self.qreg else {
            return self.error("quantum register used before declaration");
        };
        match arg {
            Arg::Indexed(name, i) if name == reg => {
                if *i >= *size {
                    Err(QasmError::QubitOutOfRange {
                        line,
                        index: *i,
                        size: *size,
                    })
                } else {
                    Ok(vec![*i])
                }
            }
            Arg::Whole(name) if name == reg => Ok((0..*size).collect()),
            Arg::Indexed(name, _) | Arg::Whole(name) => {
                self.error(format!("unknown quantum register `{name}`"))
            }
        }
    }

    fn apply(
        &mut self,
        name: &str,
        params: &[f64],
        qubits: &[usize],
        line: usize,
        depth: usize,
    ) -> Result<(), QasmError> {
        if depth > 64 {
            return Err(QasmError::Unsupported {
                line,
                feature: "recursive gate definitions".into(),
            });
        }
        let arity = |np: usize, nq: usize| -> Result<(), QasmError> {
            if params.len() != np || qubits.len() != nq {
                return Err(QasmError::Syntax {
                    line,
                    column: 1,
                    message: format!(
                        "`{name}` takes {np} parameter(s) and {nq} qubit(s), got {} and {}",
                        params.len(),
                        qubits.len()
                    ),
                });
            }
            if nq == 2 && qubits[0] == qubits[1] {
                return Err(QasmError::Syntax {
                    line,
                    column: 1,
                    message: format!("`{name}` applied twice to the same qubit"),
                });
            }
            Ok(())
        };
        let circuit = self.circuit.as_mut().expect("register declared");
        match name {
            "u3" | "u" | "U" => {
                arity(3, 1)?;
                if params.iter().any(|p| !p.is_finite()) {
                    return Err(QasmError::Syntax {
                        line,
                        column: 1,
                        message: "non-finite angle".into(),
                    });
                }
                circuit.push(
                    GateKind::U3 {
                        theta: params[0],
                        phi: params[1],
                        lambda: params[2],
                    },
                    vec![qubits[0]],
                    line,
                );
            }
            "h" => {
                arity(0, 1)?;
                circuit.push(H, vec![qubits[0]], line);
            }
            "x" => {
                arity(0, 1)?;
                circuit.push(
                    GateKind::U3 {
                        theta: PI,
                        phi: 0.0,
                        lambda: PI,
                    },
                    vec![qubits[0]],
                    line,
                );
            }
            "rz" => {
                arity(1, 1)?;
                if !params[0].is_finite() {
                    return Err(QasmError::Syntax {
                        line,
                        column: 1,
                        message: "non-finite angle".into(),
                    });
                }
                circuit.push(
                    GateKind::U3 {
                        theta: 0.0,
                        phi: 0.0,
                        lambda: params[0],
                    },
                    vec![qubits[0]],
                    line,
                );
            }
            "cz" => {
                arity(0, 2)?;
                circuit.push(GateKind::CZ, qubits.to_vec(), line);
            }
            "cx" | "CX" => {
                arity(0, 2)?;
                circuit.push(H, vec![qubits[1]], line);
                circuit.push(GateKind::CZ, qubits.to_vec(), line);
                circuit.push(H, vec![qubits[1]], line);
            }
            _ => {
                let Some(m) = self.macros.get(name).cloned() else {
                    return Err(QasmError::UnsupportedGate {
                        line,
                        name: name.to_string(),
                    });
                };
                if m.params.len() != params.len() || m.args.len() != qubits.len() {
                    return Err(QasmError::Syntax {
                        line,
                        column: 1,
                        message: format!("wrong arity in call to `{name}`"),
                    });
                }
                let env: HashMap<String, f64> =
                    m.params.iter().cloned().zip(params.iter().copied()).collect();
                let binding: HashMap<&str, usize> = m
                    .args
                    .iter()
                    .map(String::as_str)
                    .zip(qubits.iter().copied())
                    .collect();
                for call in &m.body {
                    let inner_params: Vec<f64> = call
                        .params
                        .iter()
                        .map(|e| e.eval(&env, line))
                        .collect::<Result<_, _>>()?;
                    let inner_qubits: Vec<usize> = call
                        .args
                        .iter()
                        .map(|a| match a {
                            Arg::Whole(n) => binding.get(n.as_str()).copied(),
                            Arg::Indexed(..) => None,
                        })
                        .collect::<Option<_>>()
                        .ok_or_else(|| QasmError::Syntax {
                            line: call.line,
                            column: 1,
                            message: format!("bad argument inside `{name}`"),
                        })?;
                    self.apply(&call.name, &inner_params, &inner_qubits, line, depth + 1)?;
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, QasmError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat("+") {
                '+'
            } else if self.eat("-") {
                '-'
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr, QasmError> {
        let mut lhs = self.power()?;
        loop {
            let op = if self.eat("*") {
                '*'
            } else if self.eat("/") {
                '/'
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.power()?));
        }
    }

    fn power(&mut self) -> Result<Expr, QasmError> {
        let base = self.unary()?;
        if self.eat("^") {
            Ok(Expr::Bin('^', Box::new(base), Box::new(self.power()?)))
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<Expr, QasmError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        match self.next()? {
            Tok::Real(v) => Ok(Expr::Num(v)),
            Tok::Int(v) => Ok(Expr::Num(v as f64)),
            Tok::Sym("(") => {
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "pi" => Ok(Expr::Num(PI)),
            Tok::Ident(name)
                if ["sin", "cos", "tan", "exp", "ln", "sqrt"].contains(&name.as_str()) =>
            {
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(Expr::Call(name, Box::new(e)))
            }
            Tok::Ident(name) => Ok(Expr::Param(name)),
            _ => {
                self.pos -= 1;
                self.error("expected expression")
            }
        }
    }
}

fn static_sym(sym: &str) -> &'static str {
    SYMBOLS
        .iter()
        .chain(std::iter::once(&"^"))
        .find(|s| **s == sym)
        .copied()
        .unwrap_or("")
}
