//! Diagnostic rendering: race text, JSON lines and the task graph as DOT.

use std::fmt::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::cfg::CfgWarning;
use crate::frontend::ast::SourceLoc;
use crate::frontend::UnsupportedPragma;
use crate::pia::{PhaseInterval, PiaLattice, PiaResult};
use crate::racedetect::{MemoryAccess, RaceReport};
use crate::taskgraph::{Multiplicity, TaskGraph};

const RULE: &str = "==============";
const RED: &str = "\x1b[31m";
const RESET: &str = "\x1b[0m";

/// How the two access lines of a race excerpt are marked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Highlight {
    /// ANSI red, for terminals.
    Color,
    /// `>> ` prefix.
    Marker,
    /// No marking at all.
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Severity {
    Race,
    UnsupportedPragma,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub text: String,
    pub locs: Vec<SourceLoc>,
}

impl Diagnostic {
    pub fn race(r: &RaceReport, source_text: &str, hl: Highlight) -> Self {
        Diagnostic {
            severity: Severity::Race,
            text: format_race_report(r, source_text, hl),
            locs: vec![r.source.loc.clone(), r.sink.loc.clone()],
        }
    }

    pub fn unsupported(u: &UnsupportedPragma) -> Self {
        Diagnostic {
            severity: Severity::UnsupportedPragma,
            text: format!("{}: unsupported pragma `{}`; file not covered\n", u.loc, u.text),
            locs: vec![u.loc.clone()],
        }
    }

    pub fn warning(w: &CfgWarning) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            text: format!("{}: warning: {}\n", w.loc, w.message),
            locs: vec![w.loc.clone()],
        }
    }
}

/// The race block: header, both locations and a numbered excerpt from one
/// line before the first access to one line after the last, with the two
/// access lines marked according to `hl`.
pub fn format_race_report(r: &RaceReport, source_text: &str, hl: Highlight) -> String {
    let mut out = String::new();
    out.push_str("Data Race detected.\n");
    let _ = writeln!(out, "Source : {}", r.source.loc);
    let _ = writeln!(out, "Sink : {}", r.sink.loc);
    out.push_str(RULE);
    out.push('\n');
    let lines: Vec<&str> = source_text.lines().collect();
    let (a, b) = (r.source.loc.line as usize, r.sink.loc.line as usize);
    let first = a.min(b).saturating_sub(1).max(1);
    let last = (a.max(b) + 1).min(lines.len());
    for n in first..=last {
        let text = lines[n - 1];
        let _ = match hl {
            Highlight::Color if n == a || n == b => writeln!(out, "{RED}{n} : {text}{RESET}"),
            Highlight::Marker if n == a || n == b => writeln!(out, ">> {n} : {text}"),
            _ => writeln!(out, "{n} : {text}"),
        };
    }
    out.push_str(RULE);
    out.push('\n');
    out
}

fn phase_json(pi: PhaseInterval, lat: &PiaLattice) -> Value {
    if pi.is_bottom() {
        return Value::Null;
    }
    let ub = if pi.ub >= lat.upper { Value::Null } else { json!(pi.ub) };
    json!({ "lb": pi.lb, "ub": ub })
}

fn access_json(a: &MemoryAccess) -> Value {
    json!({
        "file": &*a.loc.file,
        "line": a.loc.line,
        "col": a.loc.col,
        "var": a.name,
        "access": a.kind,
    })
}

/// One JSON object per race. An unbounded phase has `"ub": null`.
pub fn race_json(r: &RaceReport, lat: &PiaLattice) -> Value {
    json!({
        "kind": "race",
        "source": access_json(&r.source),
        "sink": access_json(&r.sink),
        "phases": {
            "source": phase_json(r.source_phase, lat),
            "sink": phase_json(r.sink_phase, lat),
        },
        "race_kind": r.kind,
        "mhp_verdict": r.verdict,
    })
}

pub fn unsupported_json(u: &UnsupportedPragma) -> Value {
    json!({
        "kind": "unsupported_pragma",
        "file": &*u.loc.file,
        "line": u.loc.line,
        "col": u.loc.col,
        "text": u.text,
    })
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The task graph as a Graphviz digraph, each node labelled with its
/// incoming and outgoing phase interval.
pub fn emit_dot(g: &TaskGraph, pia: &PiaResult, lat: &PiaLattice) -> String {
    let mut out = String::from("digraph TaskGraph {\n  node [style=filled, shape=box, fontname=\"monospace\"];\n");
    for n in &g.nodes {
        let label = format!(
            "{}\\n{}_in {}_out",
            dot_escape(&n.name),
            lat.display(pia.inputs[n.id]),
            lat.display(pia.outputs[n.id])
        );
        let shape = if n.id == g.root {
            ", shape=invtriangle"
        } else if n.id == g.terminal {
            ", shape=triangle"
        } else {
            ""
        };
        let fill = match n.multiplicity {
            Multiplicity::MultiInstance => "fillcolor=gray40, fontcolor=white",
            Multiplicity::SingleInstance => "fillcolor=gray85",
        };
        let _ = writeln!(out, "  n{} [label=\"{label}\", {fill}{shape}];", n.id);
    }
    for (a, b) in &g.edges {
        let _ = writeln!(out, "  n{a} -> n{b};");
    }
    out.push_str("}\n");
    out
}
