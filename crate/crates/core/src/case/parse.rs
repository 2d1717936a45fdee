use std::collections::HashMap;
use std::path::Path;

use super::{validate_case, Branch, Bus, CostCurve, Generator, NetworkCase};
use crate::error::CaseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Str,
    Dot,
    Assign,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Semi,
    Comma,
    Minus,
    Plus,
    Newline,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CaseError {
    CaseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>, CaseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: tl,
                column: tc,
            })
        };
        match c {
            '\n' => {
                push(&mut out, Tok::Newline);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '%' | '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '.' if !chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()) => {
                // MATPOWER line continuation
                if chars.get(i + 1) == Some(&'.') && chars.get(i + 2) == Some(&'.') {
                    while i < chars.len() && chars[i] != '\n' {
                        i += 1;
                    }
                    if i < chars.len() {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    continue;
                }
                push(&mut out, Tok::Dot)
            }
            '=' => push(&mut out, Tok::Assign),
            '[' => push(&mut out, Tok::LBracket),
            ']' => push(&mut out, Tok::RBracket),
            '{' => push(&mut out, Tok::LBrace),
            '}' => push(&mut out, Tok::RBrace),
            ';' => push(&mut out, Tok::Semi),
            ',' => push(&mut out, Tok::Comma),
            '-' => push(&mut out, Tok::Minus),
            '+' => push(&mut out, Tok::Plus),
            '\'' | '"' => {
                let quote = c;
                i += 1;
                col += 1;
                while i < chars.len() && chars[i] != quote {
                    if chars[i] == '\n' {
                        return Err(syntax(tl, tc, "unterminated string"));
                    }
                    i += 1;
                    col += 1;
                }
                if i >= chars.len() {
                    return Err(syntax(tl, tc, "unterminated string"));
                }
                push(&mut out, Tok::Str);
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
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s
                    .parse()
                    .map_err(|_| syntax(tl, tc, format!("malformed number '{s}'")))?;
                col += i - start;
                push(&mut out, Tok::Number(v));
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                col += i - start;
                push(&mut out, Tok::Ident(s));
                continue;
            }
            other => return Err(syntax(tl, tc, format!("unexpected character '{other}'"))),
        }
        i += 1;
        col += 1;
    }
    Ok(out)
}

#[derive(Debug)]
enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Other,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof_line: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|t| (t.line, t.column))
            .unwrap_or((self.eof_line, 1))
    }

    fn err(&self, message: impl Into<String>) -> CaseError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Tok::Newline) | Some(Tok::Semi)) {
            self.pos += 1;
        }
    }

    fn skip_line(&mut self) {
        while let Some(t) = self.next() {
            if t == Tok::Newline {
                break;
            }
        }
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), CaseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn number(&mut self) -> Result<f64, CaseError> {
        let mut sign = 1.0;
        loop {
            match self.peek() {
                Some(Tok::Minus) => {
                    sign = -sign;
                    self.pos += 1;
                }
                Some(Tok::Plus) => self.pos += 1,
                _ => break,
            }
        }
        match self.next() {
            Some(Tok::Number(v)) => Ok(sign * v),
            Some(Tok::Ident(s)) if s == "Inf" || s == "inf" => Ok(sign * f64::INFINITY),
            Some(Tok::Ident(s)) if s == "NaN" || s == "nan" => Ok(f64::NAN),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a number"))
            }
        }
    }

    fn matrix(&mut self) -> Result<Vec<Vec<f64>>, CaseError> {
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated matrix")),
                Some(Tok::RBracket) => {
                    self.pos += 1;
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                    return Ok(rows);
                }
                Some(Tok::Semi) | Some(Tok::Newline) => {
                    self.pos += 1;
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(Tok::Comma) => self.pos += 1,
                _ => row.push(self.number()?),
            }
        }
    }

    fn skip_cell(&mut self) -> Result<(), CaseError> {
        let mut depth = 0usize;
        loop {
            match self.next() {
                None => return Err(self.err("unterminated cell array")),
                Some(Tok::LBrace) => depth += 1,
                Some(Tok::RBrace) => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
    }

    fn value(&mut self) -> Result<Value, CaseError> {
        match self.peek() {
            Some(Tok::LBracket) => {
                self.pos += 1;
                Ok(Value::Matrix(self.matrix()?))
            }
            Some(Tok::LBrace) => {
                self.skip_cell()?;
                Ok(Value::Other)
            }
            Some(Tok::Str) => {
                self.pos += 1;
                Ok(Value::Other)
            }
            Some(Tok::Number(_)) | Some(Tok::Minus) | Some(Tok::Plus) | Some(Tok::Ident(_)) => {
                Ok(Value::Scalar(self.number()?))
            }
            _ => Err(self.err("expected a value")),
        }
    }

    /// Statements of the form `name.field = value;`. `function` headers and
    /// bare expressions are skipped line-wise.
    fn statements(&mut self) -> Result<(Option<String>, HashMap<String, Value>), CaseError> {
        let mut fields = HashMap::new();
        let mut fname = None;
        loop {
            self.skip_newlines();
            let Some(tok) = self.peek().cloned() else {
                break;
            };
            match tok {
                Tok::Ident(s) if s == "function" => {
                    // function mpc = name
                    self.pos += 1;
                    let mut idents = Vec::new();
                    while let Some(t) = self.peek() {
                        match t {
                            Tok::Newline => break,
                            Tok::Ident(s) => idents.push(s.clone()),
                            _ => {}
                        }
                        self.pos += 1;
                    }
                    fname = idents.last().cloned();
                }
                Tok::Ident(s) if s == "end" || s == "return" => self.skip_line(),
                Tok::Ident(_) => {
                    self.pos += 1;
                    if self.peek() != Some(&Tok::Dot) {
                        return Err(self.err("expected '.' after struct name"));
                    }
                    self.pos += 1;
                    let field = match self.next() {
                        Some(Tok::Ident(f)) => f,
                        _ => {
                            self.pos -= 1;
                            return Err(self.err("expected field name"));
                        }
                    };
                    self.expect(Tok::Assign, "'='")?;
                    let v = self.value()?;
                    match self.peek() {
                        None | Some(Tok::Semi) | Some(Tok::Newline) => {}
                        _ => return Err(self.err("expected ';' or end of line")),
                    }
                    fields.insert(field, v);
                }
                _ => return Err(self.err("expected an assignment")),
            }
        }
        Ok((fname, fields))
    }
}

fn semantic(section: &'static str, row: Option<usize>, message: impl Into<String>) -> CaseError {
    CaseError::Semantic {
        section,
        row,
        message: message.into(),
    }
}

fn need_cols(section: &'static str, rows: &[Vec<f64>], n: usize) -> Result<(), CaseError> {
    for (k, r) in rows.iter().enumerate() {
        if r.len() < n {
            return Err(semantic(
                section,
                Some(k + 1),
                format!("expected at least {n} columns, found {}", r.len()),
            ));
        }
        if let Some(c) = r.iter().take(n).position(|v| v.is_nan()) {
            return Err(semantic(section, Some(k + 1), format!("column {} is NaN", c + 1)));
        }
    }
    Ok(())
}

fn as_id(section: &'static str, row: usize, v: f64) -> Result<u32, CaseError> {
    if v.fract() != 0.0 || !(0.0..=u32::MAX as f64).contains(&v) {
        return Err(semantic(section, Some(row), format!("invalid bus number {v}")));
    }
    Ok(v as u32)
}

/// Parse MATPOWER (version 2) case text into a validated [`NetworkCase`].
///
/// Generators with status 0 are dropped; branches with status 0 are kept and
/// flagged out of service. Only polynomial costs of degree ≤ 2 are accepted.
pub fn parse_case(text: &str) -> Result<NetworkCase, CaseError> {
    let toks = lex(text)?;
    let eof_line = text.lines().count().max(1);
    let mut p = Parser {
        toks,
        pos: 0,
        eof_line,
    };
    let (fname, mut fields) = p.statements()?;

    if let Some(Value::Scalar(v)) = fields.get("version") {
        if *v != 2.0 {
            return Err(semantic("version", None, format!("unsupported case version {v}")));
        }
    }
    let base_mva = match fields.remove("baseMVA") {
        Some(Value::Scalar(v)) if v > 0.0 && v.is_finite() => v,
        Some(_) => return Err(semantic("baseMVA", None, "must be a positive scalar")),
        None => return Err(semantic("baseMVA", None, "missing")),
    };
    let mut take = |name: &'static str| -> Result<Vec<Vec<f64>>, CaseError> {
        match fields.remove(name) {
            Some(Value::Matrix(m)) => Ok(m),
            Some(_) => Err(semantic(name, None, "must be a matrix")),
            None => Err(semantic(name, None, "missing")),
        }
    };
    let bus_rows = take("bus")?;
    let gen_rows = take("gen")?;
    let branch_rows = take("branch")?;
    let cost_rows = take("gencost")?;
    need_cols("bus", &bus_rows, 3)?;
    need_cols("gen", &gen_rows, 10)?;
    need_cols("branch", &branch_rows, 11)?;
    need_cols("gencost", &cost_rows, 4)?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut seen = HashMap::new();
    for (k, r) in bus_rows.iter().enumerate() {
        let id = as_id("bus", k + 1, r[0])?;
        if seen.insert(id, k).is_some() {
            return Err(semantic("bus", Some(k + 1), format!("duplicate bus number {id}")));
        }
        buses.push(Bus {
            id,
            demand: r[2] / base_mva,
            is_ref: r[1] == 3.0,
        });
    }
    match buses.iter().filter(|b| b.is_ref).count() {
        0 => return Err(semantic("bus", None, "missing reference bus (type 3)")),
        1 => {}
        _ => return Err(semantic("bus", None, "multiple reference buses")),
    }

    if cost_rows.len() < gen_rows.len() {
        return Err(semantic(
            "gencost",
            None,
            format!("{} rows for {} generators", cost_rows.len(), gen_rows.len()),
        ));
    }

    let mut generators = Vec::new();
    for (k, (g, c)) in gen_rows.iter().zip(&cost_rows).enumerate() {
        let bus = as_id("gen", k + 1, g[0])?;
        if !seen.contains_key(&bus) {
            return Err(semantic(
                "gen",
                Some(k + 1),
                format!("references unknown bus {bus}"),
            ));
        }
        let cost = polynomial_cost(k + 1, c, base_mva)?;
        if g[7] <= 0.0 {
            continue;
        }
        generators.push(Generator {
            bus,
            p_min: g[9] / base_mva,
            p_max: g[8] / base_mva,
            cost,
        });
    }

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (k, r) in branch_rows.iter().enumerate() {
        let from = as_id("branch", k + 1, r[0])?;
        let to = as_id("branch", k + 1, r[1])?;
        for b in [from, to] {
            if !seen.contains_key(&b) {
                return Err(semantic(
                    "branch",
                    Some(k + 1),
                    format!("references unknown bus {b}"),
                ));
            }
        }
        if r[3] == 0.0 {
            return Err(semantic("branch", Some(k + 1), "zero reactance"));
        }
        let rate = r[5];
        branches.push(Branch {
            from,
            to,
            susceptance: 1.0 / r[3],
            flow_limit: if rate == 0.0 {
                f64::INFINITY
            } else {
                rate / base_mva
            },
            in_service: r[10] != 0.0,
        });
    }

    let case = NetworkCase {
        name: fname.unwrap_or_else(|| "case".to_string()),
        base_mva,
        buses,
        generators,
        branches,
    };
    let report = validate_case(&case);
    if let Some(f) = report.findings.first() {
        return Err(CaseError::Invalid(f.to_string()));
    }
    Ok(case)
}

fn polynomial_cost(row: usize, c: &[f64], base: f64) -> Result<CostCurve, CaseError> {
    match c[0] {
        1.0 => Err(semantic(
            "gencost",
            Some(row),
            "piecewise-linear cost model is not supported",
        )),
        2.0 => {
            let n = c[3];
            if n.fract() != 0.0 || !(0.0..=3.0).contains(&n) {
                return Err(semantic(
                    "gencost",
                    Some(row),
                    format!("polynomial with {n} coefficients (at most 3 supported)"),
                ));
            }
            let n = n as usize;
            if c.len() < 4 + n {
                return Err(semantic("gencost", Some(row), "missing cost coefficients"));
            }
            let mut coef = [0.0; 3];
            coef[3 - n..].copy_from_slice(&c[4..4 + n]);
            if coef.iter().any(|v| !v.is_finite()) {
                return Err(semantic("gencost", Some(row), "non-finite cost coefficient"));
            }
            Ok(CostCurve {
                c2: coef[0] * base * base,
                c1: coef[1] * base,
                c0: coef[2],
            })
        }
        m => Err(semantic("gencost", Some(row), format!("unknown cost model {m}"))),
    }
}

/// Read and parse a case file from disk.
pub fn read_case(path: impl AsRef<Path>) -> Result<NetworkCase, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CaseError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_case(&text)
}
