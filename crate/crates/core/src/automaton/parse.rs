//! Text format for automata over propositional labels.
//!
//! ```text
//! # comment
//! aps: a1 a2 a3
//! disjoint: a1 a2 a3
//! states: 5
//! initial: q2
//! accepting: q4
//! q2 -> q2 : !a1
//! q2 -> q3 : a1
//! ```
//!
//! Header lines may appear in any order but must precede transitions.
//! `disjoint` is optional and declares that at most one of the listed
//! propositions holds at any point; determinism and totality are then only
//! required over assignments satisfying that constraint.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::formula::parse_formula;
use super::{Dba, MAX_APS};
use crate::error::Error;

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

/// Parse and fully validate a deterministic automaton: syntax, then
/// determinism and totality over feasible assignments.
pub fn parse_dba(text: &str) -> Result<Dba, Error> {
    let dba = parse_automaton(text)?;
    dba.validate_deterministic_total()?;
    Ok(dba)
}

/// Parse a possibly nondeterministic automaton: syntax checks only.
pub fn parse_nba(text: &str) -> Result<Dba, Error> {
    parse_automaton(text)
}

fn parse_automaton(text: &str) -> Result<Dba, Error> {
    let mut aps: Option<Vec<String>> = None;
    let mut disjoint: Vec<String> = Vec::new();
    let mut n_states: Option<usize> = None;
    let mut initial: Option<usize> = None;
    let mut accepting: Option<BTreeSet<usize>> = None;
    let mut edges: Vec<Vec<(super::PropFormula, usize)>> = Vec::new();
    let mut saw_edge = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }

        if let Some(rest) = line.strip_prefix("aps:") {
            check_header_order(saw_edge, line_no)?;
            if aps.is_some() {
                return Err(perr(line_no, 1, "duplicate `aps:` line"));
            }
            let names = parse_names(rest, line_no)?;
            if names.len() > MAX_APS {
                return Err(Error::TooManyAps {
                    got: names.len(),
                    max: MAX_APS,
                });
            }
            let mut seen = BTreeSet::new();
            for n in &names {
                if !seen.insert(n.clone()) {
                    return Err(perr(line_no, 1, format!("duplicate proposition `{n}`")));
                }
            }
            aps = Some(names);
        } else if let Some(rest) = line.strip_prefix("disjoint:") {
            check_header_order(saw_edge, line_no)?;
            disjoint = parse_names(rest, line_no)?;
        } else if let Some(rest) = line.strip_prefix("states:") {
            check_header_order(saw_edge, line_no)?;
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| perr(line_no, 1, "expected a state count"))?;
            if n == 0 {
                return Err(perr(line_no, 1, "automaton needs at least one state"));
            }
            n_states = Some(n);
            edges = vec![Vec::new(); n];
        } else if let Some(rest) = line.strip_prefix("initial:") {
            check_header_order(saw_edge, line_no)?;
            initial = Some(parse_state(rest.trim(), line_no, 1)?);
        } else if let Some(rest) = line.strip_prefix("accepting:") {
            check_header_order(saw_edge, line_no)?;
            let mut set = BTreeSet::new();
            for tok in rest.split_whitespace() {
                set.insert(parse_state(tok, line_no, 1)?);
            }
            accepting = Some(set);
        } else {
            // Transition line: q<i> -> q<j> : <formula>
            saw_edge = true;
            let n = n_states
                .ok_or_else(|| perr(line_no, 1, "`states:` must precede transitions"))?;
            let arrow = line
                .find("->")
                .ok_or_else(|| perr(line_no, 1, "expected `q<i> -> q<j> : <formula>`"))?;
            let colon = line[arrow..]
                .find(':')
                .map(|p| arrow + p)
                .ok_or_else(|| perr(line_no, arrow + 3, "missing `:` before guard formula"))?;
            let from = parse_state(line[..arrow].trim(), line_no, 1)?;
            let to = parse_state(line[arrow + 2..colon].trim(), line_no, arrow + 3)?;
            if from >= n || to >= n {
                return Err(perr(
                    line_no,
                    1,
                    format!("state index out of range (have {n} states)"),
                ));
            }
            let guard = parse_formula(&line[colon + 1..], line_no, colon + 1)?;
            edges[from].push((guard, to));
        }
    }

    let aps = aps.ok_or_else(|| perr(text.lines().count() + 1, 1, "missing `aps:` line"))?;
    let n_states =
        n_states.ok_or_else(|| perr(text.lines().count() + 1, 1, "missing `states:` line"))?;
    let initial =
        initial.ok_or_else(|| perr(text.lines().count() + 1, 1, "missing `initial:` line"))?;
    let accepting = accepting
        .ok_or_else(|| perr(text.lines().count() + 1, 1, "missing `accepting:` line"))?;

    if initial >= n_states {
        return Err(perr(1, 1, "initial state out of range".to_string()));
    }
    if let Some(&q) = accepting.iter().find(|&&q| q >= n_states) {
        return Err(perr(1, 1, format!("accepting state q{q} out of range")));
    }
    for name in &disjoint {
        if !aps.contains(name) {
            return Err(Error::UnknownAp {
                name: name.clone(),
                context: "disjoint declaration".into(),
            });
        }
    }
    let mut used = BTreeSet::new();
    for row in &edges {
        for (g, _) in row {
            g.collect_atoms(&mut used);
        }
    }
    if let Some(name) = used.iter().find(|n| !aps.contains(n)) {
        return Err(Error::UnknownAp {
            name: name.clone(),
            context: "transition guard".into(),
        });
    }

    Ok(Dba {
        aps,
        disjoint,
        n_states,
        initial,
        accepting,
        edges,
    })
}

fn check_header_order(saw_edge: bool, line: usize) -> Result<(), Error> {
    if saw_edge {
        Err(perr(line, 1, "header lines must precede transitions"))
    } else {
        Ok(())
    }
}

fn parse_names(rest: &str, line: usize) -> Result<Vec<String>, Error> {
    let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
    for n in &names {
        let mut chars = n.chars();
        let head_ok = chars
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false);
        if !head_ok || !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(perr(line, 1, format!("invalid proposition name `{n}`")));
        }
    }
    Ok(names)
}

fn parse_state(tok: &str, line: usize, col: usize) -> Result<usize, Error> {
    tok.strip_prefix('q')
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| perr(line, col, format!("expected a state `q<i>`, found `{tok}`")))
}

/// Render an automaton back to the text format.
pub fn render(dba: &Dba) -> String {
    let mut out = String::new();
    writeln!(out, "aps: {}", dba.aps.join(" ")).unwrap();
    if !dba.disjoint.is_empty() {
        writeln!(out, "disjoint: {}", dba.disjoint.join(" ")).unwrap();
    }
    writeln!(out, "states: {}", dba.n_states).unwrap();
    writeln!(out, "initial: q{}", dba.initial).unwrap();
    let acc: Vec<String> = dba.accepting.iter().map(|q| format!("q{q}")).collect();
    writeln!(out, "accepting: {}", acc.join(" ")).unwrap();
    for (from, row) in dba.edges.iter().enumerate() {
        for (guard, to) in row {
            writeln!(out, "q{from} -> q{to} : {guard}").unwrap();
        }
    }
    out
}
