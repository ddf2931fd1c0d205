//! Mixed-integer bilinear programs for MNL Agreement and Disagreement,
//! written in CPLEX-style LP text with bilinear terms in brackets.
//!
//! Variables: `x_<item>` (binary, alternative included), `z_<individual>`
//! (free, the reciprocal of the individual's denominator), `d_<y>_<a>_<b>`
//! (free, absolute gap on item `y`) and, for Disagreement only,
//! `g_<y>_<a>_<b>` (binary, sign of that gap).

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};
use crate::math;
use crate::models::{ChoiceInstance, Population};
use crate::objectives::Problem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub linear: Vec<(f64, String)>,
    pub bilinear: Vec<(f64, String, String)>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MiblpModel {
    pub sense: Sense,
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<Constraint>,
    pub binaries: Vec<String>,
    pub free: Vec<String>,
}

impl MiblpModel {
    pub fn variable_count(&self) -> usize {
        self.binaries.len() + self.free.len()
    }

    pub fn inequality_count(&self) -> usize {
        self.constraints.iter().filter(|c| c.relation != Relation::Eq).count()
    }

    pub fn equality_count(&self) -> usize {
        self.constraints.iter().filter(|c| c.relation == Relation::Eq).count()
    }
}

/// Keeps `[A-Za-z0-9_]`, maps everything else to `_`, and appends the index
/// when that collides with an earlier name.
fn safe_names(raw: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    raw.enumerate()
        .map(|(i, r)| {
            let mut s: String = r.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
            if !seen.insert(s.clone()) {
                s = format!("{s}_{i}");
                seen.insert(s.clone());
            }
            s
        })
        .collect()
}

/// Builds the program for Agreement (minimize) or Disagreement (maximize).
pub fn build_miblp(pop: &Population, inst: &ChoiceInstance, problem: Problem) -> Result<MiblpModel> {
    pop.check_instance(inst)?;
    let params = pop.mnl()?;
    let sense = match problem {
        Problem::Agreement => Sense::Minimize,
        Problem::Disagreement => Sense::Maximize,
        Problem::Promotion { .. } => {
            return Err(Error::Precondition("no bilinear program is defined for promotion".into()))
        }
    };
    let item_names = safe_names(inst.universe().iter().map(|i| i.as_str().to_string()));
    let ind_names = safe_names(pop.individuals().iter().map(|i| i.label.clone()));
    let x = |i: usize| format!("x_{}", item_names[i]);
    let z = |a: usize| format!("z_{}", ind_names[a]);
    let e = |a: usize, y: usize| math::exp(params[a].utility(y));

    let mut objective = Vec::new();
    let mut constraints = Vec::new();
    let mut binaries: Vec<String> = inst.alternatives().iter().map(|&i| x(i)).collect();
    let mut free: Vec<String> = (0..params.len()).map(z).collect();
    let mut gaps = Vec::new();
    let n = params.len();
    for &y in inst.choice_set() {
        for a in 0..n {
            for b in a + 1..n {
                let tag = format!("{}_{}_{}", item_names[y], ind_names[a], ind_names[b]);
                let d = format!("d_{tag}");
                objective.push((1.0, d.clone()));
                let (ea, eb) = (e(a, y), e(b, y));
                constraints.push(Constraint {
                    name: format!("up_{tag}"),
                    linear: alloc::vec![(ea, z(a)), (-eb, z(b)), (-1.0, d.clone())],
                    bilinear: Vec::new(),
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                constraints.push(Constraint {
                    name: format!("dn_{tag}"),
                    linear: alloc::vec![(eb, z(b)), (-ea, z(a)), (-1.0, d.clone())],
                    bilinear: Vec::new(),
                    relation: Relation::Le,
                    rhs: 0.0,
                });
                if sense == Sense::Maximize {
                    let g = format!("g_{tag}");
                    constraints.push(Constraint {
                        name: format!("gp_{tag}"),
                        linear: alloc::vec![(2.0, g.clone()), (ea, z(a)), (-eb, z(b)), (-1.0, d.clone())],
                        bilinear: Vec::new(),
                        relation: Relation::Ge,
                        rhs: 0.0,
                    });
                    // 2(1 − g) + e_yb z_b − e_ya z_a ≥ d, constant moved right
                    constraints.push(Constraint {
                        name: format!("gn_{tag}"),
                        linear: alloc::vec![(-2.0, g.clone()), (eb, z(b)), (-ea, z(a)), (-1.0, d.clone())],
                        bilinear: Vec::new(),
                        relation: Relation::Ge,
                        rhs: -2.0,
                    });
                    binaries.push(g);
                }
                gaps.push(d);
            }
        }
    }
    free.extend(gaps);
    for (a, label) in ind_names.iter().enumerate() {
        let e_c: f64 = inst.choice_set().iter().map(|&y| e(a, y)).sum();
        constraints.push(Constraint {
            name: format!("norm_{label}"),
            linear: alloc::vec![(e_c, z(a))],
            bilinear: inst.alternatives().iter().map(|&i| (e(a, i), z(a), x(i))).collect(),
            relation: Relation::Eq,
            rhs: 1.0,
        });
    }
    Ok(MiblpModel { sense, objective, constraints, binaries, free })
}

const TERMS_PER_LINE: usize = 6;

fn push_term(out: &mut String, count: &mut usize, coef: f64, body: &str) {
    if *count > 0 && (*count).is_multiple_of(TERMS_PER_LINE) {
        out.push_str("\n   ");
    }
    let (sign, mag) = if coef.is_sign_negative() { ("-", -coef) } else { ("+", coef) };
    if *count == 0 && sign == "+" {
        let _ = write!(out, " {mag} {body}");
    } else {
        let _ = write!(out, " {sign} {mag} {body}");
    }
    *count += 1;
}

/// LP text. Coefficients use the shortest decimal form that parses back to
/// the same `f64`.
pub fn render_miblp(model: &MiblpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ mixed-integer bilinear program\n");
    out.push_str(match model.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    out.push_str(" obj:");
    let mut count = 0;
    for (c, v) in &model.objective {
        push_term(&mut out, &mut count, *c, v);
    }
    out.push_str("\nSubject To\n");
    for con in &model.constraints {
        let _ = write!(out, " {}:", con.name);
        let mut count = 0;
        for (c, v) in &con.linear {
            push_term(&mut out, &mut count, *c, v);
        }
        if !con.bilinear.is_empty() {
            out.push_str(if count == 0 { " [" } else { " + [" });
            let mut inner = 0;
            for (c, u, v) in &con.bilinear {
                push_term(&mut out, &mut inner, *c, &format!("{u} * {v}"));
            }
            out.push_str(" ]");
        }
        let _ = writeln!(out, " {} {}", con.relation.symbol(), con.rhs);
    }
    out.push_str("Bounds\n");
    for v in &model.free {
        let _ = writeln!(out, " {v} free");
    }
    out.push_str("Binaries\n");
    for chunk in model.binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Start,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

struct Tok<'a> {
    text: &'a str,
    line: usize,
}

/// Reads back the text written by [`render_miblp`].
pub fn parse_miblp(text: &str) -> Result<MiblpModel> {
    let mut sense = None;
    let mut section = Section::Start;
    let mut objective_tokens: Vec<Tok<'_>> = Vec::new();
    let mut constraint_tokens: Vec<Tok<'_>> = Vec::new();
    let mut binaries = Vec::new();
    let mut free = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        let header = match trimmed.to_ascii_lowercase().as_str() {
            "minimize" => Some((Section::Objective, Some(Sense::Minimize))),
            "maximize" => Some((Section::Objective, Some(Sense::Maximize))),
            "subject to" => Some((Section::Constraints, None)),
            "bounds" => Some((Section::Bounds, None)),
            "binaries" => Some((Section::Binaries, None)),
            "end" => Some((Section::End, None)),
            _ => None,
        };
        if let Some((next, s)) = header {
            if s.is_some() {
                sense = s;
            }
            section = next;
            continue;
        }
        let toks = trimmed.split_whitespace().map(|t| Tok { text: t, line });
        match section {
            Section::Objective => objective_tokens.extend(toks),
            Section::Constraints => constraint_tokens.extend(toks),
            Section::Bounds => {
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                match parts.as_slice() {
                    [v, "free"] => free.push(v.to_string()),
                    _ => return Err(parse_err(line, "expected `<var> free`")),
                }
            }
            Section::Binaries => binaries.extend(trimmed.split_whitespace().map(String::from)),
            Section::Start | Section::End => return Err(parse_err(line, "text outside any section")),
        }
    }
    let sense = sense.ok_or_else(|| parse_err(0, "missing Minimize/Maximize"))?;
    if section != Section::End {
        return Err(parse_err(text.lines().count(), "missing End"));
    }

    let mut objective = Vec::new();
    let mut it = objective_tokens.iter().peekable();
    match it.next() {
        Some(t) if t.text.ends_with(':') => {}
        Some(t) => return Err(parse_err(t.line, "objective needs a name")),
        None => return Err(parse_err(0, "missing objective")),
    }
    while it.peek().is_some() {
        let (c, v) = linear_term(&mut it)?;
        objective.push((c, v));
    }

    let mut constraints = Vec::new();
    let mut it = constraint_tokens.iter().peekable();
    while let Some(head) = it.next() {
        let name = head
            .text
            .strip_suffix(':')
            .ok_or_else(|| parse_err(head.line, format!("expected a constraint name, found `{}`", head.text)))?;
        let mut linear = Vec::new();
        let mut bilinear = Vec::new();
        let relation;
        loop {
            let text = it.peek().ok_or_else(|| parse_err(head.line, "constraint ends early"))?.text;
            match text {
                "<=" | ">=" | "=" => {
                    relation = match text {
                        "<=" => Relation::Le,
                        ">=" => Relation::Ge,
                        _ => Relation::Eq,
                    };
                    it.next();
                    break;
                }
                "[" => {
                    it.next();
                    bilinear_block(&mut it, &mut bilinear)?;
                }
                "+" if it.clone().nth(1).is_some_and(|n| n.text == "[") => {
                    it.next();
                }
                _ => linear.push(linear_term(&mut it)?),
            }
        }
        let r = it.next().ok_or_else(|| parse_err(head.line, "missing right-hand side"))?;
        let rhs = number(r)?;
        constraints.push(Constraint { name: name.to_string(), linear, bilinear, relation, rhs });
    }
    Ok(MiblpModel { sense, objective, constraints, binaries, free })
}

type Toks<'s, 'a> = core::iter::Peekable<core::slice::Iter<'s, Tok<'a>>>;

fn number(t: &Tok<'_>) -> Result<f64> {
    t.text.parse::<f64>().map_err(|_| parse_err(t.line, format!("bad number `{}`", t.text)))
}

/// `[+|-] <coef> <var>`
fn signed_coef(it: &mut Toks<'_, '_>) -> Result<f64> {
    let first = it.next().ok_or_else(|| parse_err(0, "expected a term"))?;
    match first.text {
        "+" | "-" => {
            let c = number(it.next().ok_or_else(|| parse_err(first.line, "sign without coefficient"))?)?;
            Ok(if first.text == "-" { -c } else { c })
        }
        _ => number(first),
    }
}

fn variable(it: &mut Toks<'_, '_>) -> Result<String> {
    let t = it.next().ok_or_else(|| parse_err(0, "expected a variable"))?;
    if t.text.parse::<f64>().is_ok() || matches!(t.text, "+" | "-" | "*" | "[" | "]") {
        return Err(parse_err(t.line, format!("expected a variable, found `{}`", t.text)));
    }
    Ok(t.text.to_string())
}

fn linear_term(it: &mut Toks<'_, '_>) -> Result<(f64, String)> {
    let c = signed_coef(it)?;
    Ok((c, variable(it)?))
}

fn bilinear_block(it: &mut Toks<'_, '_>, out: &mut Vec<(f64, String, String)>) -> Result<()> {
    loop {
        if let Some(t) = it.peek() {
            if t.text == "]" {
                it.next();
                return Ok(());
            }
        }
        let c = signed_coef(it)?;
        let u = variable(it)?;
        match it.next() {
            Some(t) if t.text == "*" => {}
            Some(t) => return Err(parse_err(t.line, "expected `*` in a bilinear term")),
            None => return Err(parse_err(0, "unterminated bilinear block")),
        }
        out.push((c, u, variable(it)?));
    }
}
