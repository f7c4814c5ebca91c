//! Reader and writer for the LP text format subset the exporter emits:
//! `Minimize`/`Maximize`, `Subject To`, `Bounds`, `Binary`, `General`,
//! `End`, with an optional `[ ... ] / 2` quadratic objective block.
//! Section keywords must stand alone on their line.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpConstraint {
    pub name: Option<String>,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpBound {
    pub var: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

/// A parsed LP file. Quadratic objective coefficients are stored after
/// applying the block divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: ObjSense,
    pub objective_name: Option<String>,
    pub objective: Vec<(String, f64)>,
    pub quadratic: Vec<(String, String, f64)>,
    pub objective_constant: f64,
    pub constraints: Vec<LpConstraint>,
    pub bounds: Vec<LpBound>,
    pub binaries: Vec<String>,
    pub generals: Vec<String>,
}

impl LpProblem {
    pub fn empty(sense: ObjSense) -> Self {
        LpProblem {
            sense,
            objective_name: None,
            objective: Vec::new(),
            quadratic: Vec::new(),
            objective_constant: 0.0,
            constraints: Vec::new(),
            bounds: Vec::new(),
            binaries: Vec::new(),
            generals: Vec::new(),
        }
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut out = LpWriter::new(w);
        out.raw(match self.sense {
            ObjSense::Minimize => "Minimize",
            ObjSense::Maximize => "Maximize",
        })?;
        out.objective(
            self.objective_name.as_deref(),
            &self.objective,
            &self.quadratic,
            self.objective_constant,
        )?;
        out.raw("Subject To")?;
        for c in &self.constraints {
            out.constraint(c.name.as_deref(), c.terms.iter().map(|(n, v)| (n.as_str(), *v)), c.sense, c.rhs)?;
        }
        out.raw("Bounds")?;
        for b in &self.bounds {
            out.bound(&b.var, b.lo, b.hi)?;
        }
        if !self.binaries.is_empty() {
            out.raw("Binary")?;
            out.names(self.binaries.iter().map(String::as_str))?;
        }
        if !self.generals.is_empty() {
            out.raw("General")?;
            out.names(self.generals.iter().map(String::as_str))?;
        }
        out.raw("End")?;
        out.finish()
    }
}

/// Shortest round-trip decimal form.
pub(crate) fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

const WRAP: usize = 200;

/// Streaming writer; wraps long expressions onto indented continuation
/// lines.
pub(crate) struct LpWriter<W: Write> {
    w: std::io::BufWriter<W>,
    line: String,
    qfirst: bool,
}

impl<W: Write> LpWriter<W> {
    pub(crate) fn new(w: W) -> Self {
        LpWriter {
            w: std::io::BufWriter::new(w),
            line: String::new(),
            qfirst: false,
        }
    }

    fn io(e: std::io::Error) -> Error {
        Error::io("<lp output>", e)
    }

    pub(crate) fn raw(&mut self, s: &str) -> Result<()> {
        self.flush_line()?;
        writeln!(self.w, "{s}").map_err(Self::io)
    }

    pub(crate) fn comment(&mut self, s: &str) -> Result<()> {
        self.raw(&format!("\\ {s}"))
    }

    fn flush_line(&mut self) -> Result<()> {
        if !self.line.is_empty() {
            writeln!(self.w, "{}", self.line).map_err(Self::io)?;
            self.line.clear();
        }
        Ok(())
    }

    fn push(&mut self, tok: &str) -> Result<()> {
        if self.line.len() + tok.len() + 1 > WRAP && !self.line.trim().is_empty() {
            self.flush_line()?;
            self.line.push_str("   ");
        }
        if !self.line.is_empty() {
            self.line.push(' ');
        }
        self.line.push_str(tok);
        Ok(())
    }

    fn term(&mut self, first: bool, coef: f64, body: &str) -> Result<()> {
        let mut s = String::new();
        let mag = coef.abs();
        if coef < 0.0 || (coef == 0.0 && coef.is_sign_negative()) {
            s.push_str("- ");
        } else if !first {
            s.push_str("+ ");
        }
        if mag != 1.0 {
            let _ = write!(s, "{} ", num(mag));
        }
        s.push_str(body);
        self.push(&s)
    }

    pub(crate) fn start(&mut self, name: Option<&str>) -> Result<()> {
        self.flush_line()?;
        self.line.push(' ');
        if let Some(n) = name {
            self.line.push_str(n);
            self.line.push(':');
        }
        Ok(())
    }

    /// Writes an objective; `quadratic` holds final coefficients, which
    /// are doubled inside a `[ ... ] / 2` block.
    pub(crate) fn objective<'a>(
        &mut self,
        name: Option<&str>,
        linear: impl IntoIterator<Item = &'a (String, f64)>,
        quadratic: &[(String, String, f64)],
        constant: f64,
    ) -> Result<()> {
        self.start(name)?;
        let mut first = true;
        for (v, c) in linear {
            self.term(first, *c, v)?;
            first = false;
        }
        self.quad_block(&mut first, quadratic.iter().map(|(a, b, c)| (a.as_str(), b.as_str(), *c)))?;
        if constant != 0.0 || first {
            self.constant(first, constant)?;
        }
        self.flush_line()
    }

    pub(crate) fn quad_block<'a>(
        &mut self,
        first: &mut bool,
        terms: impl IntoIterator<Item = (&'a str, &'a str, f64)>,
    ) -> Result<()> {
        let mut open = false;
        for (a, b, c) in terms {
            if !open {
                self.quad_open(*first)?;
                open = true;
            }
            self.quad_term(a, b, c)?;
            *first = false;
        }
        if open {
            self.quad_close()?;
        }
        Ok(())
    }

    pub(crate) fn quad_open(&mut self, first: bool) -> Result<()> {
        self.qfirst = true;
        self.push(if first { "[" } else { "+ [" })
    }

    /// `c` is the final coefficient; the block carries it doubled.
    pub(crate) fn quad_term(&mut self, a: &str, b: &str, c: f64) -> Result<()> {
        let body = if a == b { format!("{a} ^2") } else { format!("{a} * {b}") };
        let first = std::mem::replace(&mut self.qfirst, false);
        self.term(first, 2.0 * c, &body)
    }

    pub(crate) fn quad_close(&mut self) -> Result<()> {
        self.push("] / 2")
    }

    pub(crate) fn push_raw_token(&mut self, tok: &str) -> Result<()> {
        self.push(tok)
    }

    fn constant(&mut self, first: bool, c: f64) -> Result<()> {
        let s = if c < 0.0 {
            format!("- {}", num(-c))
        } else if first {
            num(c)
        } else {
            format!("+ {}", num(c))
        };
        self.push(&s)
    }

    pub(crate) fn constraint<'a>(
        &mut self,
        name: Option<&str>,
        terms: impl IntoIterator<Item = (&'a str, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<()> {
        self.start(name)?;
        let mut first = true;
        for (v, c) in terms {
            self.term(first, c, v)?;
            first = false;
        }
        if first {
            self.push("0")?;
        }
        self.push(sense.symbol())?;
        self.push(&num(rhs))?;
        self.flush_line()
    }

    pub(crate) fn bound(&mut self, var: &str, lo: Option<f64>, hi: Option<f64>) -> Result<()> {
        let s = match (lo, hi) {
            (None, None) => format!(" {var} free"),
            (Some(l), None) => format!(" {var} >= {}", num(l)),
            (None, Some(h)) => format!(" -inf <= {var} <= {}", num(h)),
            (Some(l), Some(h)) if l == h => format!(" {var} = {}", num(l)),
            (Some(l), Some(h)) => format!(" {} <= {var} <= {}", num(l), num(h)),
        };
        self.raw(&s)
    }

    pub(crate) fn names<'a>(&mut self, names: impl IntoIterator<Item = &'a str>) -> Result<()> {
        self.flush_line()?;
        for n in names {
            if self.line.is_empty() {
                self.line.push(' ');
            }
            self.push(n)?;
        }
        self.flush_line()
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.flush_line()?;
        self.w.flush().map_err(Self::io)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Op(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binary,
    General,
}

fn section_keyword(line: &str) -> Option<Option<Section>> {
    let norm = line.split_whitespace().collect::<Vec<_>>().join(" ").to_ascii_lowercase();
    Some(match norm.as_str() {
        "minimize" | "minimum" | "min" | "maximize" | "maximum" | "max" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "binary" | "binaries" | "bin" => Some(Section::Binary),
        "general" | "generals" | "gen" => Some(Section::General),
        "end" => None,
        _ => return None,
    })
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic() || "_!\"#$%&(),.;?@'{}|~".contains(c)
}

fn is_name_char(c: char) -> bool {
    is_name_start(c) || c.is_ascii_digit()
}

fn tokenize(text: &str, line_no: usize, out: &mut Vec<(Tok, usize)>) -> Result<()> {
    let cs: Vec<char> = text.chars().collect();
    let mut k = 0;
    let err = |m: String| Error::Lp { line: line_no, message: m };
    while k < cs.len() {
        let c = cs[k];
        if c.is_whitespace() {
            k += 1;
        } else if c == '\\' {
            break;
        } else if c.is_ascii_digit() || (c == '.' && cs.get(k + 1).is_some_and(|d| d.is_ascii_digit())) {
            let s = k;
            while k < cs.len() && (cs[k].is_ascii_digit() || cs[k] == '.') {
                k += 1;
            }
            if k < cs.len() && (cs[k] == 'e' || cs[k] == 'E') {
                let mut j = k + 1;
                if j < cs.len() && (cs[j] == '+' || cs[j] == '-') {
                    j += 1;
                }
                if j < cs.len() && cs[j].is_ascii_digit() {
                    k = j;
                    while k < cs.len() && cs[k].is_ascii_digit() {
                        k += 1;
                    }
                }
            }
            let t: String = cs[s..k].iter().collect();
            let v = t.parse::<f64>().map_err(|_| err(format!("bad number {t:?}")))?;
            out.push((Tok::Num(v), line_no));
        } else if is_name_start(c) {
            let s = k;
            while k < cs.len() && is_name_char(cs[k]) {
                k += 1;
            }
            let t: String = cs[s..k].iter().collect();
            match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => out.push((Tok::Num(f64::INFINITY), line_no)),
                _ => out.push((Tok::Name(t), line_no)),
            }
        } else {
            let two: String = cs[k..(k + 2).min(cs.len())].iter().collect();
            let (op, len) = match two.as_str() {
                "<=" | "=<" => ("<=", 2),
                ">=" | "=>" => (">=", 2),
                _ => match c {
                    '<' => ("<=", 1),
                    '>' => (">=", 1),
                    '=' => ("=", 1),
                    '+' => ("+", 1),
                    '-' => ("-", 1),
                    '*' => ("*", 1),
                    '^' => ("^", 1),
                    '[' => ("[", 1),
                    ']' => ("]", 1),
                    '/' => ("/", 1),
                    ':' => (":", 1),
                    _ => return Err(err(format!("unexpected character {c:?}"))),
                },
            };
            out.push((Tok::Op(op), line_no));
            k += len;
        }
    }
    Ok(())
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    last_line: usize,
}

#[derive(Default)]
struct Expr {
    linear: Vec<(String, f64)>,
    quadratic: Vec<(String, String, f64)>,
    constant: f64,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, off: usize) -> Option<&Tok> {
        self.toks.get(self.pos + off).map(|t| &t.0)
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map_or(self.last_line, |t| t.1)
    }

    fn err<T>(&self, m: impl Into<String>) -> Result<T> {
        Err(Error::Lp {
            line: self.line(),
            message: m.into(),
        })
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Some(Tok::Op(o)) if *o == op)
    }

    fn label(&mut self) -> Option<String> {
        if let (Some(Tok::Name(n)), Some(Tok::Op(":"))) = (self.peek(), self.peek_at(1)) {
            let n = n.clone();
            self.pos += 2;
            Some(n)
        } else {
            None
        }
    }

    fn sign(&mut self) -> f64 {
        let mut s = 1.0;
        loop {
            if self.is_op("+") {
                self.pos += 1;
            } else if self.is_op("-") {
                self.pos += 1;
                s = -s;
            } else {
                return s;
            }
        }
    }

    fn is_sense(&self) -> bool {
        self.is_op("<=") || self.is_op(">=") || self.is_op("=")
    }

    /// Terms up to a relational operator or the end of the section.
    fn expr(&mut self, allow_quadratic: bool) -> Result<Expr> {
        let mut e = Expr::default();
        let mut first = true;
        while !self.at_end() && !self.is_sense() {
            let had_op = self.is_op("+") || self.is_op("-");
            if !first && !had_op {
                return self.err("expected + or - between terms");
            }
            let s = self.sign();
            if self.is_op("[") {
                if !allow_quadratic {
                    return self.err("quadratic terms are only allowed in the objective");
                }
                if s < 0.0 {
                    return self.err("negated quadratic block");
                }
                self.pos += 1;
                self.quad_block(&mut e)?;
            } else {
                match self.next() {
                    Some(Tok::Num(v)) => {
                        if let Some(Tok::Name(n)) = self.peek() {
                            let n = n.clone();
                            self.pos += 1;
                            e.linear.push((n, s * v));
                        } else {
                            e.constant += s * v;
                        }
                    }
                    Some(Tok::Name(n)) => e.linear.push((n, s)),
                    _ => {
                        self.pos -= 1;
                        return self.err("expected a term");
                    }
                }
            }
            first = false;
        }
        Ok(e)
    }

    fn quad_block(&mut self, e: &mut Expr) -> Result<()> {
        let mut terms = Vec::new();
        let mut first = true;
        while !self.is_op("]") {
            if self.at_end() {
                return self.err("unterminated quadratic block");
            }
            if !first && !(self.is_op("+") || self.is_op("-")) {
                return self.err("expected + or - between quadratic terms");
            }
            let s = self.sign();
            let coef = if let Some(Tok::Num(v)) = self.peek() {
                let v = *v;
                self.pos += 1;
                v
            } else {
                1.0
            };
            let Some(Tok::Name(a)) = self.next() else {
                self.pos -= 1;
                return self.err("expected a variable in quadratic block");
            };
            if self.is_op("^") {
                self.pos += 1;
                if self.next() != Some(Tok::Num(2.0)) {
                    self.pos -= 1;
                    return self.err("only ^2 is supported");
                }
                terms.push((a.clone(), a, s * coef));
            } else if self.is_op("*") {
                self.pos += 1;
                let Some(Tok::Name(b)) = self.next() else {
                    self.pos -= 1;
                    return self.err("expected a variable after *");
                };
                terms.push((a, b, s * coef));
            } else {
                return self.err("expected ^2 or * in quadratic block");
            }
            first = false;
        }
        self.pos += 1;
        let mut div = 1.0;
        if self.is_op("/") {
            self.pos += 1;
            match self.next() {
                Some(Tok::Num(v)) if v != 0.0 && v.is_finite() => div = v,
                _ => {
                    self.pos -= 1;
                    return self.err("expected a non-zero divisor after /");
                }
            }
        }
        e.quadratic.extend(terms.into_iter().map(|(a, b, c)| (a, b, c / div)));
        Ok(())
    }

    fn sense(&mut self) -> Result<Sense> {
        match self.next() {
            Some(Tok::Op("<=")) => Ok(Sense::Le),
            Some(Tok::Op(">=")) => Ok(Sense::Ge),
            Some(Tok::Op("=")) => Ok(Sense::Eq),
            _ => {
                self.pos -= 1;
                self.err("expected <=, >= or =")
            }
        }
    }

    fn number(&mut self) -> Result<f64> {
        let s = self.sign();
        match self.next() {
            Some(Tok::Num(v)) => Ok(s * v),
            _ => {
                self.pos -= 1;
                self.err("expected a number")
            }
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.next() {
            Some(Tok::Name(n)) => Ok(n),
            _ => {
                self.pos -= 1;
                self.err("expected a variable name")
            }
        }
    }

    fn bound(&mut self) -> Result<LpBound> {
        // var free | var op num | num op var [op num]
        if let Some(Tok::Name(_)) = self.peek() {
            let var = self.name()?;
            if let Some(Tok::Name(k)) = self.peek() {
                if k.eq_ignore_ascii_case("free") {
                    self.pos += 1;
                    return Ok(LpBound { var, lo: None, hi: None });
                }
            }
            let op = self.sense()?;
            let v = self.number()?;
            return Ok(match op {
                Sense::Ge => LpBound { var, lo: finite(v), hi: None },
                Sense::Le => LpBound {
                    var,
                    lo: Some(0.0),
                    hi: finite(v),
                },
                Sense::Eq => LpBound {
                    var,
                    lo: Some(v),
                    hi: Some(v),
                },
            });
        }
        let a = self.number()?;
        let op = self.sense()?;
        let var = self.name()?;
        let mut b = LpBound {
            var,
            lo: Some(0.0),
            hi: None,
        };
        match op {
            Sense::Le => b.lo = finite(a),
            Sense::Ge => b.hi = finite(a),
            Sense::Eq => {
                b.lo = Some(a);
                b.hi = Some(a);
                return Ok(b);
            }
        }
        if self.is_sense() {
            let op2 = self.sense()?;
            let c = self.number()?;
            match (op, op2) {
                (Sense::Le, Sense::Le) => b.hi = finite(c),
                (Sense::Ge, Sense::Ge) => b.lo = finite(c),
                _ => return self.err("inconsistent double bound"),
            }
        }
        Ok(b)
    }
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// Parses LP text. Errors carry the 1-based line number.
pub fn parse_lp(text: &str) -> Result<LpProblem> {
    let mut sections: Vec<(Section, usize, Vec<(Tok, usize)>)> = Vec::new();
    let mut sense = None;
    let mut ended = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = raw.split('\\').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        if ended {
            return Err(Error::Lp {
                line: line_no,
                message: "content after End".into(),
            });
        }
        if let Some(kw) = section_keyword(body) {
            match kw {
                None => ended = true,
                Some(s) => {
                    if s == Section::Objective {
                        if sense.is_some() {
                            return Err(Error::Lp {
                                line: line_no,
                                message: "second objective section".into(),
                            });
                        }
                        sense = Some(if body.trim().to_ascii_lowercase().starts_with("max") {
                            ObjSense::Maximize
                        } else {
                            ObjSense::Minimize
                        });
                    } else if sense.is_none() {
                        return Err(Error::Lp {
                            line: line_no,
                            message: "section before the objective".into(),
                        });
                    }
                    sections.push((s, line_no, Vec::new()));
                }
            }
            continue;
        }
        let Some(cur) = sections.last_mut() else {
            return Err(Error::Lp {
                line: line_no,
                message: "expected Minimize or Maximize".into(),
            });
        };
        tokenize(body, line_no, &mut cur.2)?;
    }
    let last_line = text.lines().count();
    let Some(sense) = sense else {
        return Err(Error::Lp {
            line: last_line.max(1),
            message: "no objective section".into(),
        });
    };
    if !ended {
        return Err(Error::Lp {
            line: last_line.max(1),
            message: "missing End".into(),
        });
    }
    let mut lp = LpProblem::empty(sense);
    for (section, start, toks) in sections {
        let mut p = Parser {
            toks,
            pos: 0,
            last_line: start,
        };
        match section {
            Section::Objective => {
                lp.objective_name = p.label();
                let e = p.expr(true)?;
                if !p.at_end() {
                    return p.err("relational operator in the objective");
                }
                lp.objective.extend(e.linear);
                lp.quadratic.extend(e.quadratic);
                lp.objective_constant += e.constant;
            }
            Section::Constraints => {
                while !p.at_end() {
                    let name = p.label();
                    let e = p.expr(false)?;
                    if p.at_end() {
                        return p.err("constraint without a relational operator");
                    }
                    let sense = p.sense()?;
                    let rhs = p.number()?;
                    lp.constraints.push(LpConstraint {
                        name,
                        terms: e.linear,
                        sense,
                        rhs: rhs - e.constant,
                    });
                }
            }
            Section::Bounds => {
                while !p.at_end() {
                    let b = p.bound()?;
                    lp.bounds.push(b);
                }
            }
            Section::Binary | Section::General => {
                while !p.at_end() {
                    let n = p.name()?;
                    if section == Section::Binary {
                        lp.binaries.push(n);
                    } else {
                        lp.generals.push(n);
                    }
                }
            }
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\\ sample
Minimize
 obj: 2 x + 3 y - z + [ 2 x ^2 + 4 x * y ] / 2
Subject To
 c1: x + y >= 1
 c2: - x + 2.5 y
     - 1e-3 z <= 4
 x - z = 0
Bounds
 0 <= z <= 10
 y free
 -inf <= w <= 3
Binary
 x
General
 w
End
";

    #[test]
    fn parses_sample() {
        let lp = parse_lp(SAMPLE).unwrap();
        assert_eq!(lp.sense, ObjSense::Minimize);
        assert_eq!(lp.objective_name.as_deref(), Some("obj"));
        assert_eq!(lp.objective.len(), 3);
        assert_eq!(lp.quadratic, vec![("x".into(), "x".into(), 1.0), ("x".into(), "y".into(), 2.0)]);
        assert_eq!(lp.constraints.len(), 3);
        assert_eq!(lp.constraints[1].terms[2], ("z".into(), -1e-3));
        assert_eq!(lp.constraints[2].name, None);
        assert_eq!(lp.bounds[0], LpBound { var: "z".into(), lo: Some(0.0), hi: Some(10.0) });
        assert_eq!(lp.bounds[1], LpBound { var: "y".into(), lo: None, hi: None });
        assert_eq!(lp.bounds[2], LpBound { var: "w".into(), lo: None, hi: Some(3.0) });
        assert_eq!(lp.binaries, vec!["x"]);
        assert_eq!(lp.generals, vec!["w"]);
    }

    #[test]
    fn write_parse_round_trip() {
        let lp = parse_lp(SAMPLE).unwrap();
        let mut buf = Vec::new();
        lp.write(&mut buf).unwrap();
        let again = parse_lp(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(lp, again);
    }

    #[test]
    fn reports_line_numbers() {
        let bad = "Minimize\n obj: x\nSubject To\n c: x >=\nEnd\n";
        match parse_lp(bad) {
            Err(Error::Lp { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_lp("Minimize\n obj: x\n"), Err(Error::Lp { .. })));
        assert!(matches!(parse_lp("x + y\n"), Err(Error::Lp { line: 1, .. })));
        assert!(parse_lp("Minimize\n obj: x $ y\nEnd\n").is_err());
    }

    #[test]
    fn long_rows_wrap() {
        let mut lp = LpProblem::empty(ObjSense::Minimize);
        lp.constraints.push(LpConstraint {
            name: Some("big".into()),
            terms: (0..200).map(|i| (format!("x_{i}"), i as f64 - 50.5)).collect(),
            sense: Sense::Le,
            rhs: -3.25,
        });
        let mut buf = Vec::new();
        lp.write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().all(|l| l.len() <= 255));
        let mut expected = lp.clone();
        expected.objective_constant = 0.0;
        assert_eq!(parse_lp(&text).unwrap(), expected);
    }
}
