//! Row-wise formula execution and execution-guided repair.
//!
//! Formulas use a small Excel-like language: a leading `=`, column
//! references `[@Name]`, string and number literals, the operators
//! `+ - * / &` and comparisons, and the functions SEARCH, FIND, LEFT, RIGHT,
//! MID, LEN, UPPER, LOWER, SUBSTITUTE, CONCAT, VALUE and TRIM. Evaluation
//! never aborts: failures surface as error values such as `#VALUE!`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pipeline::{run_column, ColumnResult, Detection, RunConfig, SemanticMode};
use crate::semantics::SemanticOracle;
use crate::table::{is_exceptional, load_table, load_table_str, CellKind, CellValue, IngestOptions, Table};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    Column(String),
    /// A bare identifier; evaluates to `#NAME?`.
    Name(String),
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ErrorValue {
    #[serde(rename = "#VALUE!")]
    Value,
    #[serde(rename = "#DIV/0!")]
    Div0,
    #[serde(rename = "#NAME?")]
    Name,
    #[serde(rename = "NaN")]
    NaN,
}

impl ErrorValue {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorValue::Value => "#VALUE!",
            ErrorValue::Div0 => "#DIV/0!",
            ErrorValue::Name => "#NAME?",
            ErrorValue::NaN => "NaN",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    Bool(bool),
    Error(ErrorValue),
}

impl Value {
    fn to_text(&self) -> std::result::Result<String, ErrorValue> {
        match self {
            Value::Number(n) => Ok(format_number(*n)),
            Value::Text(s) => Ok(s.clone()),
            Value::Bool(b) => Ok(if *b { "TRUE" } else { "FALSE" }.into()),
            Value::Error(e) => Err(*e),
        }
    }

    fn to_number(&self) -> std::result::Result<f64, ErrorValue> {
        match self {
            Value::Number(n) => Ok(*n),
            Value::Text(s) if s.trim().is_empty() => Ok(0.0),
            Value::Text(s) => s.trim().parse::<f64>().ok().filter(|n| n.is_finite()).ok_or(ErrorValue::Value),
            Value::Bool(b) => Ok(*b as u8 as f64),
            Value::Error(e) => Err(*e),
        }
    }

    pub fn to_cell(&self) -> CellValue {
        match self {
            Value::Number(n) if !n.is_finite() => CellValue::parse(ErrorValue::NaN.as_str()),
            Value::Number(n) => CellValue::parse(&format_number(*n)),
            Value::Text(s) if s.is_empty() => CellValue::na(),
            Value::Text(s) => CellValue::text(s.clone()),
            Value::Bool(b) => CellValue::parse(if *b { "TRUE" } else { "FALSE" }),
            Value::Error(e) => CellValue::parse(e.as_str()),
        }
    }
}

fn format_number(n: f64) -> String {
    if n.is_nan() {
        return "NaN".into();
    }
    if n.fract() == 0.0 && n.abs() < 1e15 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

const FUNCTIONS: [(&str, usize, usize); 12] = [
    ("SEARCH", 2, 3),
    ("FIND", 2, 3),
    ("LEFT", 1, 2),
    ("RIGHT", 1, 2),
    ("MID", 3, 3),
    ("LEN", 1, 1),
    ("UPPER", 1, 1),
    ("LOWER", 1, 1),
    ("SUBSTITUTE", 3, 4),
    ("CONCAT", 1, usize::MAX),
    ("VALUE", 1, 1),
    ("TRIM", 1, 1),
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Str(String),
    Ident(String),
    Col(String),
    Op(char),
    Cmp(&'static str),
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let err = |i: usize, m: &str| Error::Formula(format!("{m} at offset {i}"));
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            _ if c.is_whitespace() => i += 1,
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(err(i, "unterminated string")),
                        Some('"') if chars.get(i + 1) == Some(&'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&c) => {
                            s.push(c);
                            i += 1;
                        }
                    }
                }
                out.push(Tok::Str(s));
            }
            '[' => {
                let end = chars[i..]
                    .iter()
                    .position(|&c| c == ']')
                    .ok_or_else(|| err(i, "unterminated column reference"))?;
                let inner: String = chars[i + 1..i + end].iter().collect();
                let name = inner.strip_prefix('@').unwrap_or(&inner).trim();
                if name.is_empty() {
                    return Err(err(i, "empty column reference"));
                }
                out.push(Tok::Col(name.to_string()));
                i += end + 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Tok::Num(s.parse().map_err(|_| err(start, "bad number"))?));
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Ident(chars[start..i].iter().collect()));
            }
            '+' | '-' | '*' | '/' | '&' => {
                out.push(Tok::Op(c));
                i += 1;
            }
            '=' | '<' | '>' => {
                let next = chars.get(i + 1).copied();
                let (op, len) = match (c, next) {
                    ('<', Some('>')) => ("<>", 2),
                    ('<', Some('=')) => ("<=", 2),
                    ('>', Some('=')) => (">=", 2),
                    ('<', _) => ("<", 1),
                    ('>', _) => (">", 1),
                    _ => ("=", 1),
                };
                out.push(Tok::Cmp(op));
                i += len;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            ',' | ';' => {
                out.push(Tok::Comma);
                i += 1;
            }
            _ => return Err(err(i, &format!("unexpected character `{c}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(x) if x == t => Ok(()),
            other => Err(Error::Formula(format!("expected {t:?}, found {other:?}"))),
        }
    }

    fn comparison(&mut self) -> Result<Expr> {
        let mut lhs = self.concat()?;
        while let Some(Tok::Cmp(op)) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.concat()?;
            let op = match op {
                "=" => BinOp::Eq,
                "<>" => BinOp::Ne,
                "<" => BinOp::Lt,
                "<=" => BinOp::Le,
                ">" => BinOp::Gt,
                _ => BinOp::Ge,
            };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn concat(&mut self) -> Result<Expr> {
        let mut lhs = self.additive()?;
        while self.peek() == Some(&Tok::Op('&')) {
            self.pos += 1;
            let rhs = self.additive()?;
            lhs = Expr::Binary(BinOp::Concat, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.pos += 1;
                Ok(Expr::Neg(Box::new(self.unary()?)))
            }
            Some(Tok::Op('+')) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(Expr::Number(n)),
            Some(Tok::Str(s)) => Ok(Expr::Text(s)),
            Some(Tok::Col(c)) => Ok(Expr::Column(c)),
            Some(Tok::LParen) => {
                let e = self.comparison()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.comparison()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    return Ok(Expr::Call(name.to_ascii_uppercase(), args));
                }
                match name.to_ascii_uppercase().as_str() {
                    "TRUE" => Ok(Expr::Bool(true)),
                    "FALSE" => Ok(Expr::Bool(false)),
                    _ => Ok(Expr::Name(name)),
                }
            }
            other => Err(Error::Formula(format!("unexpected token {other:?}"))),
        }
    }
}

/// A parsed, statically checked formula.
#[derive(Debug, Clone, PartialEq)]
pub struct FormulaProgram {
    pub source: String,
    pub expr: Expr,
    /// Referenced columns, in order of first use.
    pub inputs: Vec<String>,
}

impl fmt::Display for FormulaProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn check(e: &Expr, inputs: &mut Vec<String>) -> Result<()> {
    match e {
        Expr::Column(c) => {
            if !inputs.contains(c) {
                inputs.push(c.clone());
            }
            Ok(())
        }
        Expr::Call(name, args) => {
            let Some(&(_, lo, hi)) = FUNCTIONS.iter().find(|(n, _, _)| n == name) else {
                return Err(Error::Formula(format!("unknown function {name}")));
            };
            if args.len() < lo || args.len() > hi {
                return Err(Error::Formula(format!("{name} takes {lo}..{hi} arguments, got {}", args.len())));
            }
            args.iter().try_for_each(|a| check(a, inputs))
        }
        Expr::Neg(a) => check(a, inputs),
        Expr::Binary(_, a, b) => {
            check(a, inputs)?;
            check(b, inputs)
        }
        Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) | Expr::Name(_) => Ok(()),
    }
}

impl FormulaProgram {
    pub fn parse(source: &str) -> Result<Self> {
        let body = source.trim();
        let body = body.strip_prefix('=').unwrap_or(body);
        let mut p = Parser { toks: lex(body)?, pos: 0 };
        let expr = p.comparison()?;
        if p.pos < p.toks.len() {
            return Err(Error::Formula(format!("unexpected trailing {:?}", p.toks[p.pos])));
        }
        let mut inputs = Vec::new();
        check(&expr, &mut inputs)?;
        Ok(Self {
            source: source.trim().to_string(),
            expr,
            inputs,
        })
    }

    /// Checks that every referenced column exists.
    pub fn validate(&self, table: &Table) -> Result<Vec<usize>> {
        self.inputs
            .iter()
            .map(|c| {
                table
                    .column_index(c)
                    .ok_or_else(|| Error::Formula(format!("formula references missing column `{c}`")))
            })
            .collect()
    }
}

fn cell_value(cell: &CellValue) -> Value {
    match cell.kind {
        CellKind::Numeric => cell
            .raw
            .trim()
            .parse()
            .map_or_else(|_| Value::Text(cell.raw.clone()), Value::Number),
        CellKind::Error => Value::Error(match cell.raw.as_str() {
            "#DIV/0!" => ErrorValue::Div0,
            "#NAME?" => ErrorValue::Name,
            "NaN" | "nan" => ErrorValue::NaN,
            _ => ErrorValue::Value,
        }),
        CellKind::Logical => Value::Bool(cell.raw.eq_ignore_ascii_case("true")),
        CellKind::Na => Value::Text(String::new()),
        CellKind::Text => Value::Text(cell.raw.clone()),
    }
}

type Eval<T> = std::result::Result<T, ErrorValue>;

fn char_pos(haystack: &[char], needle: &[char], from: usize) -> Option<usize> {
    if needle.is_empty() {
        return (from <= haystack.len()).then_some(from);
    }
    (from..haystack.len()).find(|&i| haystack[i..].starts_with(needle))
}

fn int_arg(v: &Value) -> Eval<i64> {
    let n = v.to_number()?;
    Ok(n.trunc() as i64)
}

fn call(name: &str, args: &[Value]) -> Eval<Value> {
    let text = |i: usize| args[i].to_text();
    let chars = |i: usize| text(i).map(|s| s.chars().collect::<Vec<char>>());
    match name {
        "SEARCH" | "FIND" => {
            let fold = |v: Vec<char>| -> Vec<char> {
                if name == "SEARCH" {
                    v.into_iter().flat_map(char::to_lowercase).collect()
                } else {
                    v
                }
            };
            let needle = fold(chars(0)?);
            let hay = fold(chars(1)?);
            let start = if args.len() > 2 { int_arg(&args[2])? } else { 1 };
            if start < 1 || start as usize > hay.len() + 1 {
                return Err(ErrorValue::Value);
            }
            char_pos(&hay, &needle, start as usize - 1)
                .map(|p| Value::Number((p + 1) as f64))
                .ok_or(ErrorValue::Value)
        }
        "LEFT" | "RIGHT" => {
            let s = chars(0)?;
            let n = if args.len() > 1 { int_arg(&args[1])? } else { 1 };
            if n < 0 {
                return Err(ErrorValue::Value);
            }
            let n = (n as usize).min(s.len());
            let out = if name == "LEFT" { &s[..n] } else { &s[s.len() - n..] };
            Ok(Value::Text(out.iter().collect()))
        }
        "MID" => {
            let s = chars(0)?;
            let start = int_arg(&args[1])?;
            let n = int_arg(&args[2])?;
            if start < 1 || n < 0 {
                return Err(ErrorValue::Value);
            }
            let a = (start as usize - 1).min(s.len());
            let b = (a + n as usize).min(s.len());
            Ok(Value::Text(s[a..b].iter().collect()))
        }
        "LEN" => Ok(Value::Number(chars(0)?.len() as f64)),
        "UPPER" => Ok(Value::Text(text(0)?.to_uppercase())),
        "LOWER" => Ok(Value::Text(text(0)?.to_lowercase())),
        "TRIM" => Ok(Value::Text(
            text(0)?.split(' ').filter(|w| !w.is_empty()).collect::<Vec<_>>().join(" "),
        )),
        "SUBSTITUTE" => {
            let s = text(0)?;
            let old = text(1)?;
            let new = text(2)?;
            if old.is_empty() {
                return Ok(Value::Text(s));
            }
            if args.len() > 3 {
                let k = int_arg(&args[3])?;
                if k < 1 {
                    return Err(ErrorValue::Value);
                }
                match s.match_indices(&old).nth(k as usize - 1) {
                    Some((i, _)) => Ok(Value::Text(format!("{}{}{}", &s[..i], new, &s[i + old.len()..]))),
                    None => Ok(Value::Text(s)),
                }
            } else {
                Ok(Value::Text(s.replace(&old, &new)))
            }
        }
        "CONCAT" => {
            let mut out = String::new();
            for a in args {
                out.push_str(&a.to_text()?);
            }
            Ok(Value::Text(out))
        }
        "VALUE" => match &args[0] {
            Value::Number(n) => Ok(Value::Number(*n)),
            v => {
                let s = v.to_text()?;
                s.trim().parse::<f64>().map(Value::Number).map_err(|_| ErrorValue::Value)
            }
        },
        _ => Err(ErrorValue::Name),
    }
}

fn compare(op: BinOp, a: &Value, b: &Value) -> Eval<bool> {
    let ord = match (a, b) {
        (Value::Error(e), _) | (_, Value::Error(e)) => return Err(*e),
        (Value::Number(x), Value::Number(y)) => x.partial_cmp(y).ok_or(ErrorValue::NaN)?,
        _ => a.to_text()?.to_lowercase().cmp(&b.to_text()?.to_lowercase()),
    };
    use std::cmp::Ordering::*;
    Ok(match op {
        BinOp::Eq => ord == Equal,
        BinOp::Ne => ord != Equal,
        BinOp::Lt => ord == Less,
        BinOp::Le => ord != Greater,
        BinOp::Gt => ord == Greater,
        _ => ord != Less,
    })
}

fn eval(e: &Expr, table: &Table, row: usize) -> Eval<Value> {
    match e {
        Expr::Number(n) => Ok(Value::Number(*n)),
        Expr::Text(s) => Ok(Value::Text(s.clone())),
        Expr::Bool(b) => Ok(Value::Bool(*b)),
        Expr::Name(_) => Err(ErrorValue::Name),
        Expr::Column(c) => {
            let ci = table.column_index(c).ok_or(ErrorValue::Name)?;
            match cell_value(table.cell(ci, row)) {
                Value::Error(e) => Err(e),
                v => Ok(v),
            }
        }
        Expr::Neg(a) => Ok(Value::Number(-eval(a, table, row)?.to_number()?)),
        Expr::Call(name, args) => {
            let vals = args.iter().map(|a| eval(a, table, row)).collect::<Eval<Vec<Value>>>()?;
            call(name, &vals)
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, table, row)?;
            let y = eval(b, table, row)?;
            match op {
                BinOp::Concat => Ok(Value::Text(x.to_text()? + &y.to_text()?)),
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    let (p, q) = (x.to_number()?, y.to_number()?);
                    let r = match op {
                        BinOp::Add => p + q,
                        BinOp::Sub => p - q,
                        BinOp::Mul => p * q,
                        _ if q == 0.0 => return Err(ErrorValue::Div0),
                        _ => p / q,
                    };
                    if r.is_finite() {
                        Ok(Value::Number(r))
                    } else {
                        Err(ErrorValue::NaN)
                    }
                }
                _ => compare(*op, &x, &y).map(Value::Bool),
            }
        }
    }
}

/// Evaluates the formula on one row. Errors become error values.
pub fn evaluate_value(program: &FormulaProgram, table: &Table, row: usize) -> Value {
    eval(&program.expr, table, row).unwrap_or_else(Value::Error)
}

pub fn evaluate(program: &FormulaProgram, table: &Table, row: usize) -> CellValue {
    evaluate_value(program, table, row).to_cell()
}

fn is_failure(cell: &CellValue) -> bool {
    cell.kind == CellKind::Error || is_exceptional(&cell.raw)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExecutionPartition {
    pub successes: Vec<usize>,
    pub failures: Vec<usize>,
}

impl ExecutionPartition {
    pub fn success_rate(&self) -> f64 {
        let n = self.successes.len() + self.failures.len();
        if n == 0 {
            1.0
        } else {
            self.successes.len() as f64 / n as f64
        }
    }
}

pub fn partition(program: &FormulaProgram, table: &Table) -> ExecutionPartition {
    let mut p = ExecutionPartition {
        successes: Vec::new(),
        failures: Vec::new(),
    };
    for row in 0..table.row_count {
        if is_failure(&evaluate(program, table, row)) {
            p.failures.push(row);
        } else {
            p.successes.push(row);
        }
    }
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairMode {
    Guided,
    Unsupervised,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExecRepair {
    pub mode: RepairMode,
    pub columns: Vec<ColumnResult>,
    pub warnings: Vec<String>,
}

/// Repairs the inputs of failing rows. Patterns are learned from succeeding
/// rows only and all of them are significant. Without any succeeding row the
/// unsupervised pipeline is used instead.
pub fn execution_guided_repair(
    program: &FormulaProgram,
    table: &Table,
    config: &RunConfig,
    oracle: &dyn SemanticOracle,
    guided_semantic: bool,
) -> Result<ExecRepair> {
    let inputs = program.validate(table)?;
    let part = partition(program, table);
    if part.failures.is_empty() {
        return Ok(ExecRepair {
            mode: RepairMode::Guided,
            columns: Vec::new(),
            warnings: Vec::new(),
        });
    }
    if part.successes.is_empty() {
        let mut r = unsupervised_repair(program, table, config, oracle)?;
        r.warnings
            .insert(0, "no row executes successfully; falling back to unsupervised repair".into());
        return Ok(r);
    }
    let mut cfg = config.clone();
    if !guided_semantic {
        cfg.semantic = SemanticMode::NoAbstraction;
    }
    let detection = Detection::Guided {
        successes: part.successes,
        failures: part.failures,
    };
    let columns = inputs
        .into_iter()
        .map(|ci| run_column(table, ci, &cfg, oracle, &detection))
        .collect();
    Ok(ExecRepair {
        mode: RepairMode::Guided,
        columns,
        warnings: Vec::new(),
    })
}

/// The unsupervised pipeline on the formula's input columns.
pub fn unsupervised_repair(program: &FormulaProgram, table: &Table, config: &RunConfig, oracle: &dyn SemanticOracle) -> Result<ExecRepair> {
    let inputs = program.validate(table)?;
    let columns = inputs
        .into_iter()
        .map(|ci| run_column(table, ci, config, oracle, &Detection::Unsupervised))
        .collect();
    Ok(ExecRepair {
        mode: RepairMode::Unsupervised,
        columns,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub formula_success: bool,
    pub cell_success_rate: f64,
    /// Repaired cells written into the table.
    pub applied: usize,
}

/// Applies the top repairs of failing rows to a copy of the table and
/// re-executes the formula.
pub fn verify_repairs(program: &FormulaProgram, table: &Table, repairs: &[ColumnResult]) -> (Table, Verification) {
    let failing: std::collections::HashSet<usize> = partition(program, table).failures.into_iter().collect();
    let mut fixed = table.clone();
    let mut applied = 0;
    for r in repairs {
        for (row, value) in r.top_repairs() {
            if failing.contains(&row) {
                fixed.set_cell(r.column_index, row, value);
                applied += 1;
            }
        }
    }
    let after = partition(program, &fixed);
    let v = Verification {
        formula_success: after.failures.is_empty(),
        cell_success_rate: after.success_rate(),
        applied,
    };
    (fixed, v)
}

/// One task of an execution benchmark file (JSON lines).
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ExecTask {
    pub formula: String,
    /// Inline CSV (when it contains a newline) or a path relative to the
    /// task file.
    pub table: String,
    pub target_output_column: String,
}

impl ExecTask {
    pub fn load_table(&self, base: &Path) -> Result<Table> {
        if self.table.contains('\n') {
            load_table_str(&self.table)
        } else {
            let path = base.join(&self.table);
            let file = std::fs::File::open(&path)?;
            load_table(
                file,
                &IngestOptions {
                    name: path
                        .file_stem()
                        .map_or_else(|| "table".into(), |s| s.to_string_lossy().into_owned()),
                    ..Default::default()
                },
            )
        }
    }
}

pub fn read_tasks(text: &str) -> Result<Vec<ExecTask>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}
