//! Netlist types, the line-oriented parser and its writer.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::grid::DesignPoint;
use crate::units::{format_length_nm, parse_length_nm, parse_si};

use super::stimulus::Stimulus;

/// Canonical name of the reference node.
pub const GROUND: &str = "0";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    Resistor {
        n1: String,
        n2: String,
        ohms: f64,
    },
    Capacitor {
        n1: String,
        n2: String,
        farads: f64,
    },
    /// Branch current flows from `pos` through the source to `neg`.
    VoltageSource {
        pos: String,
        neg: String,
        stimulus: Stimulus,
    },
    /// Positive current leaves `pos` and enters `neg` through the source.
    CurrentSource {
        pos: String,
        neg: String,
        stimulus: Stimulus,
    },
    Transistor {
        d: String,
        g: String,
        s: String,
        b: String,
        /// Card file path or the name of a library grid such as `gcm`.
        model: String,
        point: Option<DesignPoint>,
        nfin: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// Lower-case, including the type letter.
    pub name: String,
    /// Source line, 0 for elements built in code.
    pub line: usize,
    pub kind: ElementKind,
}

impl Element {
    pub fn nodes(&self) -> Vec<&str> {
        match &self.kind {
            ElementKind::Resistor { n1, n2, .. } | ElementKind::Capacitor { n1, n2, .. } => {
                vec![n1, n2]
            }
            ElementKind::VoltageSource { pos, neg, .. }
            | ElementKind::CurrentSource { pos, neg, .. } => {
                vec![pos, neg]
            }
            ElementKind::Transistor { d, g, s, b, .. } => vec![d, g, s, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Analysis {
    Op,
    Tran {
        t_stop: f64,
        max_step: Option<f64>,
        /// Start from the `.ic` values (0 V elsewhere) instead of a DC solution.
        uic: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Netlist {
    pub elements: Vec<Element>,
    pub analyses: Vec<Analysis>,
    pub initial_conditions: Vec<(String, f64)>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetlistError {
    #[error("duplicate element name `{0}`")]
    Duplicate(String),
    #[error("node `{node}` connects to only one terminal (element `{element}`)")]
    Dangling { node: String, element: String },
    #[error("no element connects to ground node 0")]
    NoGround,
    #[error("netlist has no elements")]
    Empty,
    #[error("element `{element}`: {message}")]
    InvalidElement { element: String, message: String },
    #[error("initial condition names unknown node `{0}`")]
    UnknownIcNode(String),
}

impl Netlist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: &str, kind: ElementKind) {
        self.elements.push(Element {
            name: name.to_ascii_lowercase(),
            line: 0,
            kind,
        });
    }

    pub fn element(&self, name: &str) -> Option<&Element> {
        let name = name.to_ascii_lowercase();
        self.elements.iter().find(|e| e.name == name)
    }

    /// Non-ground nodes in order of first appearance.
    pub fn node_names(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for e in &self.elements {
            for n in e.nodes() {
                if n != GROUND && seen.insert(n.to_string()) {
                    out.push(n.to_string());
                }
            }
        }
        out
    }

    pub fn transistor_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e.kind, ElementKind::Transistor { .. }))
            .count()
    }

    pub fn validate(&self) -> Result<(), NetlistError> {
        if self.elements.is_empty() {
            return Err(NetlistError::Empty);
        }
        let mut names = HashSet::new();
        for e in &self.elements {
            if !names.insert(e.name.as_str()) {
                return Err(NetlistError::Duplicate(e.name.clone()));
            }
            let bad = |message: &str| {
                Err(NetlistError::InvalidElement {
                    element: e.name.clone(),
                    message: message.to_string(),
                })
            };
            match &e.kind {
                ElementKind::Resistor { ohms, .. } if !(ohms.is_finite() && *ohms > 0.0) => {
                    return bad("resistance must be positive");
                }
                ElementKind::Capacitor { farads, .. }
                    if !(farads.is_finite() && *farads >= 0.0) =>
                {
                    return bad("capacitance must be non-negative");
                }
                ElementKind::VoltageSource { stimulus, .. }
                | ElementKind::CurrentSource { stimulus, .. } => {
                    if let Err(err) = stimulus.validate() {
                        return bad(&err.to_string());
                    }
                }
                ElementKind::Transistor { nfin, point, .. } => {
                    if *nfin == 0 {
                        return bad("nfin must be at least 1");
                    }
                    if let Some(p) = point {
                        if p.validate().is_err() {
                            return bad("design point must be finite and positive");
                        }
                    }
                }
                _ => {}
            }
        }
        let mut touches: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for e in &self.elements {
            for n in e.nodes() {
                let entry = touches.entry(n).or_insert((0, e.name.as_str()));
                entry.0 += 1;
            }
        }
        if !touches.contains_key(GROUND) {
            return Err(NetlistError::NoGround);
        }
        for (node, (count, element)) in &touches {
            if *node != GROUND && *count == 1 {
                return Err(NetlistError::Dangling {
                    node: node.to_string(),
                    element: element.to_string(),
                });
            }
        }
        for (node, _) in &self.initial_conditions {
            if !touches.contains_key(node.as_str()) {
                return Err(NetlistError::UnknownIcNode(node.clone()));
            }
        }
        Ok(())
    }
}

fn canonical_node(token: &str) -> String {
    let lower = token.to_ascii_lowercase();
    if lower == "gnd" {
        GROUND.to_string()
    } else {
        lower
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits on whitespace, parentheses and commas. Columns are 1-based.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut column_of = 0;
    let mut col = 0;
    for (i, ch) in line.char_indices() {
        col += 1;
        let sep = ch.is_whitespace() || matches!(ch, '(' | ')' | ',');
        match (sep, start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: column_of,
                });
                start = None;
            }
            (false, None) => {
                start = Some(i);
                column_of = col;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: column_of,
        });
    }
    out
}

struct LineParser<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineParser<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(*t)
            }
            None => Err(self.err(self.end_column, format!("expected {what}"))),
        }
    }

    fn node(&mut self) -> Result<String, ParseError> {
        Ok(canonical_node(self.next("node name")?.text))
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let t = self.next(what)?;
        parse_si(t.text).map_err(|e| self.err(t.column, format!("{what}: {e}")))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(t.column, format!("unexpected token `{}`", t.text))),
        }
    }

    fn stimulus(&mut self, allowed: &[&str]) -> Result<Stimulus, ParseError> {
        let kind_tok = self.next("stimulus kind")?;
        let kind = kind_tok.text.to_ascii_lowercase();
        if !allowed.contains(&kind.as_str()) {
            // A bare number is shorthand for dc.
            if allowed.contains(&"dc") {
                if let Ok(v) = parse_si(kind_tok.text) {
                    return Ok(Stimulus::Dc(v));
                }
            }
            return Err(self.err(
                kind_tok.column,
                format!(
                    "unknown stimulus `{}`, expected one of {}",
                    kind_tok.text,
                    allowed.join(", ")
                ),
            ));
        }
        let (line, column) = (self.line, kind_tok.column);
        let checked = |s: Result<Stimulus, super::stimulus::StimulusError>| {
            s.map_err(|e| ParseError {
                line,
                column,
                message: e.to_string(),
            })
        };
        match kind.as_str() {
            "dc" => Ok(Stimulus::Dc(self.number("dc value")?)),
            "pwl" => {
                let mut points = Vec::new();
                while self.peek().is_some() {
                    let t = self.number("pwl time")?;
                    let v = self.number("pwl value")?;
                    points.push((t, v));
                }
                checked(Stimulus::pwl(points))
            }
            "ramp" => {
                let t0 = self.number("ramp start")?;
                let tr = self.number("ramp rise time")?;
                let vf = self.number("ramp final value")?;
                checked(Stimulus::ramp(t0, tr, vf))
            }
            "dexp" => {
                let i0 = self.number("dexp amplitude")?;
                let tr = self.number("dexp rise constant")?;
                let td = self.number("dexp decay constant")?;
                checked(Stimulus::dexp(i0, tr, td))
            }
            _ => unreachable!(),
        }
    }
}

/// Parses a netlist. Lines starting with `*` and text after `;` are comments.
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let mut net = Netlist::new();
    let mut first_line: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = raw.split(';').next().unwrap_or("");
        if content.trim_start().starts_with('*') {
            continue;
        }
        let tokens = tokenize(content);
        if tokens.is_empty() {
            continue;
        }
        let mut p = LineParser {
            line: line_no,
            tokens,
            pos: 0,
            end_column: content.chars().count() + 1,
        };
        let head = p.next("element")?;
        let lower = head.text.to_ascii_lowercase();
        if lower.starts_with('.') {
            parse_directive(&mut p, &lower, head, &mut net)?;
            continue;
        }
        if first_line.contains_key(&lower) {
            return Err(p.err(
                head.column,
                format!("duplicate element name `{}`", head.text),
            ));
        }
        let letter = lower.chars().next().unwrap_or(' ');
        let kind = match letter {
            'r' => {
                let (n1, n2) = (p.node()?, p.node()?);
                ElementKind::Resistor {
                    n1,
                    n2,
                    ohms: p.number("resistance")?,
                }
            }
            'c' => {
                let (n1, n2) = (p.node()?, p.node()?);
                ElementKind::Capacitor {
                    n1,
                    n2,
                    farads: p.number("capacitance")?,
                }
            }
            'v' => {
                let (pos, neg) = (p.node()?, p.node()?);
                ElementKind::VoltageSource {
                    pos,
                    neg,
                    stimulus: p.stimulus(&["dc", "pwl", "ramp"])?,
                }
            }
            'i' => {
                let (pos, neg) = (p.node()?, p.node()?);
                ElementKind::CurrentSource {
                    pos,
                    neg,
                    stimulus: p.stimulus(&["dexp", "dc"])?,
                }
            }
            'm' => parse_transistor(&mut p)?,
            _ => {
                return Err(p.err(
                    head.column,
                    format!("unknown element letter `{}`", &head.text[..1]),
                ))
            }
        };
        p.finish()?;
        first_line.insert(lower.clone(), line_no);
        net.elements.push(Element {
            name: lower,
            line: line_no,
            kind,
        });
    }
    net.validate().map_err(|e| {
        let line = match &e {
            NetlistError::Duplicate(n) => first_line.get(n).copied(),
            NetlistError::Dangling { element, .. }
            | NetlistError::InvalidElement { element, .. } => first_line.get(element).copied(),
            _ => None,
        };
        ParseError {
            line: line.unwrap_or(0),
            column: 1,
            message: e.to_string(),
        }
    })?;
    Ok(net)
}

fn parse_transistor(p: &mut LineParser<'_>) -> Result<ElementKind, ParseError> {
    let (d, g, s, b) = (p.node()?, p.node()?, p.node()?, p.node()?);
    let model_tok = p.next("model")?;
    if model_tok.text.contains('=') {
        return Err(p.err(
            model_tok.column,
            "expected a card file or model name before parameters",
        ));
    }
    let mut lg = None;
    let mut wfin = None;
    let mut nfin = None;
    while let Some(t) = p.peek() {
        p.pos += 1;
        let Some((key, value)) = t.text.split_once('=') else {
            return Err(p.err(t.column, format!("unexpected token `{}`", t.text)));
        };
        let vcol = t.column + key.chars().count() + 1;
        match key.to_ascii_lowercase().as_str() {
            "lg" => lg = Some(parse_length_nm(value).map_err(|e| p.err(vcol, format!("lg: {e}")))?),
            "wfin" => {
                wfin = Some(parse_length_nm(value).map_err(|e| p.err(vcol, format!("wfin: {e}")))?)
            }
            "nfin" => {
                let v: u32 = value
                    .parse()
                    .map_err(|_| p.err(vcol, format!("nfin: malformed count `{value}`")))?;
                nfin = Some(v);
            }
            _ => return Err(p.err(t.column, format!("unknown transistor parameter `{key}`"))),
        }
    }
    let point = match (lg, wfin) {
        (Some(lg), Some(w)) => Some(DesignPoint::new(lg, w)),
        (None, None) => None,
        _ => return Err(p.err(model_tok.column, "lg and wfin must be given together")),
    };
    let nfin = nfin.ok_or_else(|| p.err(p.end_column, "missing nfin=<count>"))?;
    Ok(ElementKind::Transistor {
        d,
        g,
        s,
        b,
        model: model_tok.text.to_string(),
        point,
        nfin,
    })
}

fn parse_directive(
    p: &mut LineParser<'_>,
    lower: &str,
    head: Token<'_>,
    net: &mut Netlist,
) -> Result<(), ParseError> {
    match lower {
        ".op" => {
            p.finish()?;
            net.analyses.push(Analysis::Op);
        }
        ".tran" => {
            let t_stop = p.number("stop time")?;
            if t_stop <= 0.0 {
                return Err(p.err(head.column, "stop time must be positive"));
            }
            let mut max_step = None;
            let mut uic = false;
            while let Some(t) = p.peek() {
                if t.text.eq_ignore_ascii_case("uic") {
                    p.pos += 1;
                    uic = true;
                } else if max_step.is_none() && !uic {
                    let v = p.number("maximum step")?;
                    if v <= 0.0 {
                        return Err(p.err(t.column, "maximum step must be positive"));
                    }
                    max_step = Some(v);
                } else {
                    return p.finish();
                }
            }
            net.analyses.push(Analysis::Tran {
                t_stop,
                max_step,
                uic,
            });
        }
        ".ic" => {
            while let Some(t) = p.peek() {
                p.pos += 1;
                let lowered = t.text.to_ascii_lowercase();
                // The tokenizer splits `v(a)=1` into `v` and `=1`; accept both spellings.
                let (node, value_text, vcol) = if lowered == "v" {
                    let n = p.next("node")?;
                    let v = p.next("value")?;
                    let Some(val) = v.text.strip_prefix('=') else {
                        return Err(p.err(v.column, "expected =<value>"));
                    };
                    (canonical_node(n.text), val.to_string(), v.column + 1)
                } else if let Some((n, v)) = t.text.split_once('=') {
                    (
                        canonical_node(n),
                        v.to_string(),
                        t.column + n.chars().count() + 1,
                    )
                } else {
                    return Err(p.err(t.column, "expected v(<node>)=<value>"));
                };
                let v = parse_si(&value_text).map_err(|e| p.err(vcol, e.to_string()))?;
                net.initial_conditions.push((node, v));
            }
        }
        ".end" => p.finish()?,
        _ => return Err(p.err(head.column, format!("unknown directive `{}`", head.text))),
    }
    Ok(())
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.elements {
            let name = &e.name;
            match &e.kind {
                ElementKind::Resistor { n1, n2, ohms } => writeln!(f, "{name} {n1} {n2} {ohms:e}")?,
                ElementKind::Capacitor { n1, n2, farads } => {
                    writeln!(f, "{name} {n1} {n2} {farads:e}")?
                }
                ElementKind::VoltageSource { pos, neg, stimulus }
                | ElementKind::CurrentSource { pos, neg, stimulus } => {
                    writeln!(f, "{name} {pos} {neg} {stimulus}")?
                }
                ElementKind::Transistor {
                    d,
                    g,
                    s,
                    b,
                    model,
                    point,
                    nfin,
                } => {
                    write!(f, "{name} {d} {g} {s} {b} {model}")?;
                    if let Some(p) = point {
                        write!(
                            f,
                            " lg={} wfin={}",
                            format_length_nm(p.axis1),
                            format_length_nm(p.axis2)
                        )?;
                    }
                    writeln!(f, " nfin={nfin}")?
                }
            }
        }
        if !self.initial_conditions.is_empty() {
            f.write_str(".ic")?;
            for (n, v) in &self.initial_conditions {
                write!(f, " v({n})={v:e}")?;
            }
            writeln!(f)?;
        }
        for a in &self.analyses {
            match a {
                Analysis::Op => writeln!(f, ".op")?,
                Analysis::Tran {
                    t_stop,
                    max_step,
                    uic,
                } => {
                    write!(f, ".tran {t_stop:e}")?;
                    if let Some(m) = max_step {
                        write!(f, " {m:e}")?;
                    }
                    if *uic {
                        f.write_str(" uic")?;
                    }
                    writeln!(f)?
                }
            }
        }
        Ok(())
    }
}
