//! CPLEX LP text for [`MilpModel`], plus a reader for the subset we write.
//!
//! Every variable appears in the `Bounds` section in model order, so a
//! round trip restores the variable order exactly. Numbers use Rust's
//! shortest round-trip formatting.

use thiserror::Error;

use super::milp::{Constraint, MilpModel, Sense, VarKind};

const WRAP: usize = 78;

#[derive(Debug, Error, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("missing section {0}")]
    MissingSection(&'static str),
}

fn number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

struct Wrapper {
    out: String,
    line_len: usize,
}

impl Wrapper {
    fn start(&mut self, head: &str) {
        self.out.push(' ');
        self.out.push_str(head);
        self.line_len = 1 + head.len();
    }

    fn token(&mut self, tok: &str) {
        if self.line_len + 1 + tok.len() > WRAP {
            self.out.push_str("\n   ");
            self.line_len = 3;
        } else {
            self.out.push(' ');
            self.line_len += 1;
        }
        self.out.push_str(tok);
        self.line_len += tok.len();
    }

    fn end(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }
}

fn write_terms(w: &mut Wrapper, m: &MilpModel, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        w.token("0");
        return;
    }
    for (n, &(i, c)) in terms.iter().enumerate() {
        let name = &m.variables[i].name;
        let sign = if c < 0.0 { "-" } else { "+" };
        if n > 0 || c < 0.0 {
            w.token(sign);
        }
        let mag = c.abs();
        if mag == 1.0 {
            w.token(name);
        } else {
            w.token(&format!("{} {name}", number(mag)));
        }
    }
}

/// Writes the model as CPLEX LP text. The output depends only on the model.
pub fn export_lp(m: &MilpModel) -> String {
    let mut w = Wrapper { out: String::new(), line_len: 0 };
    w.out.push_str(&format!("\\ Problem: {}\n", m.name));
    w.out.push_str("Minimize\n");
    w.start("obj:");
    write_terms(&mut w, m, &m.objective);
    w.end();

    w.out.push_str("Subject To\n");
    for c in &m.constraints {
        w.start(&format!("{}:", c.name));
        write_terms(&mut w, m, &c.terms);
        w.token(c.sense.symbol());
        w.token(&number(c.rhs));
        w.end();
    }

    w.out.push_str("Bounds\n");
    for v in &m.variables {
        match v.upper {
            Some(u) => w.out.push_str(&format!(" {} <= {} <= {}\n", number(v.lower), v.name, number(u))),
            None => w.out.push_str(&format!(" {} >= {}\n", v.name, number(v.lower))),
        }
    }
    for (title, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        if m.count_kind(kind) == 0 {
            continue;
        }
        w.out.push_str(title);
        w.out.push('\n');
        w.line_len = 0;
        let mut first = true;
        for v in m.variables.iter().filter(|v| v.kind == kind) {
            if first {
                w.start(&v.name);
                first = false;
            } else {
                w.token(&v.name);
            }
        }
        w.end();
    }
    w.out.push_str("End\n");
    w.out
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_of(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" => Some(Section::Objective),
        "subject to" => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "generals" => Some(Section::Generals),
        "binaries" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Parses LP text written by [`export_lp`].
pub fn parse_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let mut name = String::new();
    let mut section = Section::Preamble;
    // (line number, token) per section
    let mut tokens: Vec<(Section, usize, String)> = Vec::new();
    let mut bounds_lines: Vec<(usize, Vec<String>)> = Vec::new();
    let mut seen = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        if let Some(rest) = raw.trim_start().strip_prefix('\\') {
            if let Some(p) = rest.trim().strip_prefix("Problem:") {
                name = p.trim().to_string();
            }
            continue;
        }
        if let Some(s) = section_of(raw) {
            section = s;
            seen.push(s);
            continue;
        }
        if raw.trim().is_empty() {
            continue;
        }
        match section {
            Section::Preamble | Section::End => {
                return Err(LpParseError::Syntax { line: line_no, msg: "text outside a section".into() })
            }
            Section::Bounds => bounds_lines.push((line_no, raw.split_whitespace().map(str::to_string).collect())),
            s => tokens.extend(raw.split_whitespace().map(|t| (s, line_no, t.to_string()))),
        }
    }
    for (s, label) in [(Section::Objective, "Minimize"), (Section::Constraints, "Subject To"), (Section::Bounds, "Bounds")] {
        if !seen.contains(&s) {
            return Err(LpParseError::MissingSection(label));
        }
    }

    let mut m = MilpModel::new(name);
    let syntax = |line: usize, msg: &str| LpParseError::Syntax { line, msg: msg.to_string() };
    for (line, toks) in &bounds_lines {
        let num = |t: &String| t.parse::<f64>().map_err(|_| syntax(*line, "bad number"));
        match toks.as_slice() {
            [lo, le1, var, le2, hi] if le1 == "<=" && le2 == "<=" => {
                m.add_variable(var.clone(), VarKind::Continuous, num(lo)?, Some(num(hi)?));
            }
            [var, ge, lo] if ge == ">=" => {
                m.add_variable(var.clone(), VarKind::Continuous, num(lo)?, None);
            }
            _ => return Err(syntax(*line, "unsupported bound")),
        }
    }
    let lookup = |m: &MilpModel, v: &str| m.var_index(v).ok_or_else(|| LpParseError::UnknownVariable(v.to_string()));

    for (kind, sec) in [(VarKind::Integer, Section::Generals), (VarKind::Binary, Section::Binaries)] {
        for (_, _, t) in tokens.iter().filter(|t| t.0 == sec) {
            let i = lookup(&m, t)?;
            m.variables[i].kind = kind;
        }
    }

    // group objective/constraint tokens into labelled rows
    let mut rows: Vec<(Section, usize, String, Vec<String>)> = Vec::new();
    for (s, line, t) in tokens.into_iter().filter(|t| matches!(t.0, Section::Objective | Section::Constraints)) {
        if let Some(label) = t.strip_suffix(':') {
            rows.push((s, line, label.to_string(), Vec::new()));
        } else {
            match rows.last_mut() {
                Some(row) if row.0 == s => row.3.push(t),
                _ => return Err(syntax(line, "expression without a label")),
            }
        }
    }

    for (s, line, label, toks) in rows {
        let (expr, tail) = match toks.iter().position(|t| matches!(t.as_str(), "<=" | ">=" | "=")) {
            Some(p) => (&toks[..p], Some(&toks[p..])),
            None => (&toks[..], None),
        };
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        for t in expr {
            match t.as_str() {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ => {
                    if let Ok(c) = t.parse::<f64>() {
                        coef = Some(c);
                    } else {
                        terms.push((lookup(&m, t)?, sign * coef.unwrap_or(1.0)));
                        sign = 1.0;
                        coef = None;
                    }
                }
            }
        }
        match (s, tail) {
            (Section::Objective, None) => m.objective = terms,
            (Section::Constraints, Some([sense, rhs])) => {
                let sense = match sense.as_str() {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = rhs.parse::<f64>().map_err(|_| syntax(line, "bad right-hand side"))?;
                let mut c = Constraint { name: label, terms, sense, rhs };
                c.terms.sort_by_key(|t| t.0);
                m.constraints.push(c);
            }
            _ => return Err(syntax(line, "malformed row")),
        }
    }
    m.rebuild_index();
    Ok(m)
}
