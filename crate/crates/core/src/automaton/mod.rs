//! Deterministic Büchi automata over propositional labels: parsing,
//! validation, transition matrices, structure-exploiting preprocessing, and
//! a trimming pass turning nondeterministic automata into deterministic
//! under-approximations.

pub mod formula;
mod parse;

use std::collections::BTreeSet;

pub use formula::{parse_formula, PropFormula};
pub use parse::{parse_dba, parse_nba, render};

use crate::error::Error;

/// Assignment masks are u16 bitfields, so the proposition count is capped.
pub const MAX_APS: usize = 16;

/// Automaton over 2^AP. Fields are public for construction by tests and
/// tools; use [`parse_dba`] for validated input. The same struct carries
/// nondeterministic automata (from [`parse_nba`]) before trimming.
#[derive(Clone, Debug, PartialEq)]
pub struct Dba {
    pub aps: Vec<String>,
    /// Propositions declared mutually exclusive: assignments with two or
    /// more of them true are infeasible and exempt from determinism and
    /// totality checks.
    pub disjoint: Vec<String>,
    pub n_states: usize,
    pub initial: usize,
    pub accepting: BTreeSet<usize>,
    /// `edges[q]` lists `(guard, successor)` pairs in declaration order.
    pub edges: Vec<Vec<(PropFormula, usize)>>,
}

impl Dba {
    fn disjoint_mask(&self) -> u16 {
        let mut m = 0u16;
        for name in &self.disjoint {
            if let Some(i) = self.aps.iter().position(|a| a == name) {
                m |= 1 << i;
            }
        }
        m
    }

    /// All assignments over the declared propositions that honor the
    /// disjointness constraint, ascending.
    pub fn feasible_masks(&self) -> Vec<u16> {
        let dm = self.disjoint_mask();
        (0..(1u32 << self.aps.len()) as u32)
            .map(|m| m as u16)
            .filter(|m| (m & dm).count_ones() <= 1)
            .collect()
    }

    /// Human-readable label for an assignment mask, e.g. `{a1, a3}`.
    pub fn mask_label(&self, mask: u16) -> String {
        let names: Vec<&str> = self
            .aps
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.as_str())
            .collect();
        format!("{{{}}}", names.join(", "))
    }

    /// Assignment mask for a set of proposition names; unknown names are a
    /// label mismatch.
    pub fn mask_of<'a>(&self, present: impl IntoIterator<Item = &'a str>) -> Result<u16, Error> {
        let mut mask = 0u16;
        for name in present {
            let i = self
                .aps
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::LabelMismatch { ap: name.into() })?;
            mask |= 1 << i;
        }
        Ok(mask)
    }

    /// Check determinism and totality over feasible assignments.
    pub fn validate_deterministic_total(&self) -> Result<(), Error> {
        if self.aps.len() > MAX_APS {
            return Err(Error::TooManyAps {
                got: self.aps.len(),
                max: MAX_APS,
            });
        }
        for q in 0..self.n_states {
            for &mask in &self.feasible_masks() {
                let count = self.edges[q]
                    .iter()
                    .filter(|(g, _)| g.eval_mask(&self.aps, mask))
                    .count();
                if count == 0 {
                    return Err(Error::NonTotal {
                        state: q,
                        label: self.mask_label(mask),
                    });
                }
                if count > 1 {
                    return Err(Error::NonDeterministic {
                        state: q,
                        label: self.mask_label(mask),
                        count,
                    });
                }
            }
        }
        Ok(())
    }

    /// Successor of `q` under the assignment `mask`: the first matching
    /// edge. Unique after validation.
    pub fn transition(&self, q: usize, mask: u16) -> Option<usize> {
        self.edges[q]
            .iter()
            .find(|(g, _)| g.eval_mask(&self.aps, mask))
            .map(|&(_, to)| to)
    }

    /// Successor sets per state, deduplicated and ascending.
    fn successor_sets(&self) -> Vec<Vec<usize>> {
        self.edges
            .iter()
            .map(|row| {
                let mut s: Vec<usize> = row.iter().map(|&(_, to)| to).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect()
    }
}

/// Transition matrix in a given state order: `entries[i][j]` is the merged
/// guard from `order[i]` to `order[j]`, `Empty` when there is no edge.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub order: Vec<usize>,
    pub entries: Vec<Vec<PropFormula>>,
    /// Whether `order[i]` is accepting.
    pub accepting: Vec<bool>,
}

pub fn transition_matrix(dba: &Dba, order: &[usize]) -> Result<TransitionMatrix, Error> {
    let n = dba.n_states;
    let mut seen = vec![false; n];
    for &q in order {
        if q >= n || seen[q] {
            return Err(Error::InvalidParameter {
                name: "order",
                reason: "not a permutation of the state indices".into(),
            });
        }
        seen[q] = true;
    }
    if order.len() != n {
        return Err(Error::InvalidParameter {
            name: "order",
            reason: "not a permutation of the state indices".into(),
        });
    }
    let entries = order
        .iter()
        .map(|&from| {
            order
                .iter()
                .map(|&to| {
                    let mut merged: Option<PropFormula> = None;
                    for (g, t) in &dba.edges[from] {
                        if *t == to {
                            merged = Some(match merged {
                                None => g.clone(),
                                Some(m) => PropFormula::or(m, g.clone()),
                            });
                        }
                    }
                    merged.unwrap_or(PropFormula::Empty)
                })
                .collect()
        })
        .collect();
    let accepting = order.iter().map(|q| dba.accepting.contains(q)).collect();
    Ok(TransitionMatrix {
        order: order.to_vec(),
        entries,
        accepting,
    })
}

/// Result of structure analysis: a solving order (upper block-triangular
/// matrix), the diagonal block extents, and how many leading positions are
/// live. Positions at and beyond `n_live` can never reach an accepting
/// cycle and are dead.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessed {
    pub order: Vec<usize>,
    pub blocks: Vec<usize>,
    pub n_live: usize,
}

/// Order states by strongly connected components, components topologically
/// (sources first), accepting states last within their component. Blocks
/// after the last one containing an accepting state are dead: no accepting
/// state is reachable from them.
pub fn preprocess(dba: &Dba) -> Preprocessed {
    let comps = tarjan_components(&dba.successor_sets());
    let mut order = Vec::with_capacity(dba.n_states);
    let mut blocks = Vec::with_capacity(comps.len());
    let mut n_live = 0;
    for comp in comps.iter().rev() {
        let (rest, acc): (Vec<usize>, Vec<usize>) = comp
            .iter()
            .copied()
            .partition(|q| !dba.accepting.contains(q));
        let has_accepting = !acc.is_empty();
        order.extend(rest);
        order.extend(acc);
        blocks.push(comp.len());
        if has_accepting {
            n_live = order.len();
        }
    }
    Preprocessed {
        order,
        blocks,
        n_live,
    }
}

/// Iterative Tarjan SCC. Roots are visited in ascending index order and
/// successors in ascending order; components are returned in completion
/// order, each listing its members in stack pop order.
fn tarjan_components(succs: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = succs.len();
    let mut index = vec![usize::MAX; n];
    let mut lowlink = vec![usize::MAX; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut comps: Vec<Vec<usize>> = Vec::new();

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut frames: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while !frames.is_empty() {
            let (v, si) = *frames.last().expect("nonempty");
            if si < succs[v].len() {
                frames.last_mut().expect("nonempty").1 += 1;
                let w = succs[v][si];
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                frames.pop();
                if lowlink[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
                if let Some(&(p, _)) = frames.last() {
                    lowlink[p] = lowlink[p].min(lowlink[v]);
                }
            }
        }
    }
    comps
}

/// Full minterm formula for an assignment mask: every proposition appears,
/// negated when absent.
fn minterm(aps: &[String], mask: u16) -> PropFormula {
    let mut f: Option<PropFormula> = None;
    for (i, ap) in aps.iter().enumerate() {
        let lit = if mask & (1 << i) != 0 {
            PropFormula::Atom(ap.clone())
        } else {
            PropFormula::not(PropFormula::Atom(ap.clone()))
        };
        f = Some(match f {
            None => lit,
            Some(g) => PropFormula::and(g, lit),
        });
    }
    f.unwrap_or(PropFormula::True)
}

/// Determinize a nondeterministic automaton by pruning: per state and per
/// feasible assignment keep exactly one successor, preferring accepting
/// successors and then the lowest index. States that are already
/// deterministic and total keep their guards verbatim. Totality is restored
/// through a non-accepting sink when needed. The result accepts a subset of
/// the input's language.
pub fn trim_nba(input: &Dba) -> Result<Dba, Error> {
    if input.aps.len() > MAX_APS {
        return Err(Error::TooManyAps {
            got: input.aps.len(),
            max: MAX_APS,
        });
    }
    let masks = input.feasible_masks();
    let mut edges: Vec<Vec<(PropFormula, usize)>> = Vec::with_capacity(input.n_states);
    let mut need_sink = false;
    let sink = input.n_states;

    for q in 0..input.n_states {
        let already_ok = masks.iter().all(|&m| {
            input.edges[q]
                .iter()
                .filter(|(g, _)| g.eval_mask(&input.aps, m))
                .count()
                == 1
        });
        if already_ok {
            edges.push(input.edges[q].clone());
            continue;
        }
        let mut per_target: std::collections::BTreeMap<usize, Vec<u16>> = Default::default();
        for &m in &masks {
            let mut candidates: Vec<usize> = input.edges[q]
                .iter()
                .filter(|(g, _)| g.eval_mask(&input.aps, m))
                .map(|&(_, to)| to)
                .collect();
            candidates.sort_unstable();
            candidates.dedup();
            let chosen = candidates
                .iter()
                .copied()
                .find(|t| input.accepting.contains(t))
                .or_else(|| candidates.first().copied())
                .unwrap_or_else(|| {
                    need_sink = true;
                    sink
                });
            per_target.entry(chosen).or_default().push(m);
        }
        let row = per_target
            .into_iter()
            .map(|(to, ms)| {
                let f = ms
                    .into_iter()
                    .map(|m| minterm(&input.aps, m))
                    .reduce(PropFormula::or)
                    .expect("target group cannot be empty");
                (f, to)
            })
            .collect();
        edges.push(row);
    }

    let n_states = if need_sink {
        edges.push(vec![(PropFormula::True, sink)]);
        input.n_states + 1
    } else {
        input.n_states
    };

    let out = Dba {
        aps: input.aps.clone(),
        disjoint: input.disjoint.clone(),
        n_states,
        initial: input.initial,
        accepting: input.accepting.clone(),
        edges,
    };
    out.validate_deterministic_total()?;
    Ok(out)
}

/// Semantic isomorphism: some bijection of states maps initial to initial
/// and accepting onto accepting, and commutes with every feasible
/// transition. Proposition sets must match (order may differ). Exhaustive
/// over permutations, intended for small automata.
pub fn isomorphic(a: &Dba, b: &Dba) -> bool {
    if a.n_states != b.n_states || a.accepting.len() != b.accepting.len() {
        return false;
    }
    let mut a_aps = a.aps.clone();
    let mut b_aps = b.aps.clone();
    a_aps.sort();
    b_aps.sort();
    if a_aps != b_aps {
        return false;
    }
    // Remap a's masks into b's proposition order.
    let remap: Vec<usize> = a
        .aps
        .iter()
        .map(|ap| b.aps.iter().position(|x| x == ap).unwrap())
        .collect();
    let remap_mask = |m: u16| -> u16 {
        let mut out = 0;
        for (i, &j) in remap.iter().enumerate() {
            if m & (1 << i) != 0 {
                out |= 1 << j;
            }
        }
        out
    };
    let masks = a.feasible_masks();
    if masks.len() != b.feasible_masks().len() {
        return false;
    }

    let n = a.n_states;
    let mut perm: Vec<usize> = (0..n).collect();
    fn permutations(k: usize, perm: &mut Vec<usize>, check: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        if k == perm.len() {
            return check(perm);
        }
        for i in k..perm.len() {
            perm.swap(k, i);
            if permutations(k + 1, perm, check) {
                return true;
            }
            perm.swap(k, i);
        }
        false
    }
    permutations(0, &mut perm, &mut |p: &[usize]| {
        if p[a.initial] != b.initial {
            return false;
        }
        if !a.accepting.iter().all(|&q| b.accepting.contains(&p[q])) {
            return false;
        }
        for q in 0..n {
            for &m in &masks {
                let ta = a.transition(q, m);
                let tb = b.transition(p[q], remap_mask(m));
                match (ta, tb) {
                    (Some(x), Some(y)) if p[x] == y => {}
                    (None, None) => {}
                    _ => return false,
                }
            }
        }
        true
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEQ: &str = "\
# visit a1 then a2
aps: a1 a2
states: 3
initial: q2
accepting: q0
q2 -> q2 : !a1
q2 -> q1 : a1
q1 -> q1 : !a2
q1 -> q0 : a2
q0 -> q0 : true
";

    #[test]
    fn parses_and_validates_a_dba() {
        let dba = parse_dba(SEQ).unwrap();
        assert_eq!(dba.n_states, 3);
        assert_eq!(dba.initial, 2);
        assert!(dba.accepting.contains(&0));
        assert_eq!(dba.transition(2, 0b01), Some(1));
        assert_eq!(dba.transition(2, 0b00), Some(2));
        assert_eq!(dba.transition(1, 0b10), Some(0));
    }

    #[test]
    fn round_trips_through_render() {
        let dba = parse_dba(SEQ).unwrap();
        let again = parse_dba(&render(&dba)).unwrap();
        assert_eq!(dba, again);
    }

    #[test]
    fn rejects_nondeterminism_with_witness() {
        let text = "\
aps: a
states: 2
initial: q0
accepting: q1
q0 -> q0 : true
q0 -> q1 : a
q1 -> q1 : true
";
        let err = parse_dba(text).unwrap_err();
        match err {
            Error::NonDeterministic { state, label, count } => {
                assert_eq!(state, 0);
                assert_eq!(label, "{a}");
                assert_eq!(count, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_transitions_with_witness() {
        let text = "\
aps: a b
states: 1
initial: q0
accepting: q0
q0 -> q0 : a
";
        let err = parse_dba(text).unwrap_err();
        match err {
            Error::NonTotal { state, label } => {
                assert_eq!(state, 0);
                assert_eq!(label, "{}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disjoint_restricts_feasible_assignments() {
        let text = "\
aps: a b
disjoint: a b
states: 1
initial: q0
accepting: q0
q0 -> q0 : !a | !b
";
        // Without the disjoint line {a, b} would make this non-total.
        let dba = parse_dba(text).unwrap();
        assert_eq!(dba.feasible_masks(), vec![0b00, 0b01, 0b10]);
    }

    #[test]
    fn unknown_ap_in_guard_is_rejected() {
        let text = "\
aps: a
states: 1
initial: q0
accepting: q0
q0 -> q0 : a | oops
";
        assert!(matches!(
            parse_nba(text).unwrap_err(),
            Error::UnknownAp { .. }
        ));
    }

    #[test]
    fn matrix_merges_parallel_edges_by_disjunction() {
        let text = "\
aps: a b
states: 2
initial: q0
accepting: q1
q0 -> q1 : a & !b
q0 -> q1 : !a & b
q0 -> q0 : a & b | !a & !b
q1 -> q1 : true
";
        let dba = parse_dba(text).unwrap();
        let m = transition_matrix(&dba, &[0, 1]).unwrap();
        assert_eq!(
            m.entries[0][1],
            PropFormula::or(
                parse_formula("a & !b", 1, 0).unwrap(),
                parse_formula("!a & b", 1, 0).unwrap()
            )
        );
        assert_eq!(m.entries[1][0], PropFormula::Empty);
        assert_eq!(m.accepting, vec![false, true]);
    }

    #[test]
    fn preprocess_orders_chain_components_topologically() {
        let dba = parse_dba(SEQ).unwrap();
        let pre = preprocess(&dba);
        assert_eq!(pre.order, vec![2, 1, 0]);
        assert_eq!(pre.blocks, vec![1, 1, 1]);
        assert_eq!(pre.n_live, 3);
    }

    #[test]
    fn preprocess_marks_trailing_accepting_free_blocks_dead() {
        // q0 accepting, q1 escapes to a sink q2: q2's block is dead.
        let text = "\
aps: a
states: 3
initial: q0
accepting: q0
q0 -> q0 : a
q0 -> q1 : !a
q1 -> q0 : a
q1 -> q2 : !a
q2 -> q2 : true
";
        let dba = parse_dba(text).unwrap();
        let pre = preprocess(&dba);
        assert_eq!(pre.n_live, pre.order.len() - 1);
        assert_eq!(*pre.order.last().unwrap(), 2);
    }

    #[test]
    fn preprocess_handles_no_accepting_reachable() {
        let text = "\
aps: a
states: 1
initial: q0
accepting:
q0 -> q0 : true
";
        let dba = parse_dba(text).unwrap();
        let pre = preprocess(&dba);
        assert_eq!(pre.n_live, 0);
    }

    #[test]
    fn trim_keeps_deterministic_states_verbatim() {
        let nba = parse_nba(SEQ).unwrap();
        let out = trim_nba(&nba).unwrap();
        assert_eq!(out, parse_dba(SEQ).unwrap());
    }

    #[test]
    fn trim_prefers_accepting_then_lowest_index() {
        let text = "\
aps: b
states: 3
initial: q0
accepting: q1
q0 -> q0 : true
q0 -> q1 : b
q1 -> q1 : b
q1 -> q2 : !b
q2 -> q2 : true
";
        let nba = parse_nba(text).unwrap();
        let out = trim_nba(&nba).unwrap();
        assert_eq!(out.n_states, 3);
        assert_eq!(out.transition(0, 0b1), Some(1), "accepting successor wins");
        assert_eq!(out.transition(0, 0b0), Some(0));
        // q1 and q2 were already deterministic.
        assert_eq!(out.edges[1], nba.edges[1]);
        assert_eq!(out.edges[2], nba.edges[2]);
    }

    #[test]
    fn trim_adds_sink_when_totality_fails() {
        let text = "\
aps: a
states: 1
initial: q0
accepting: q0
q0 -> q0 : a
";
        let nba = parse_nba(text).unwrap();
        let out = trim_nba(&nba).unwrap();
        assert_eq!(out.n_states, 2);
        assert_eq!(out.transition(0, 0b0), Some(1));
        assert_eq!(out.transition(1, 0b1), Some(1));
        assert!(!out.accepting.contains(&1));
    }

    #[test]
    fn isomorphism_is_insensitive_to_state_renaming() {
        let a = parse_dba(SEQ).unwrap();
        let renamed = "\
aps: a1 a2
states: 3
initial: q0
accepting: q2
q0 -> q0 : !a1
q0 -> q1 : a1
q1 -> q1 : !a2
q1 -> q2 : a2
q2 -> q2 : true
";
        let b = parse_dba(renamed).unwrap();
        assert!(isomorphic(&a, &b));

        let different = "\
aps: a1 a2
states: 3
initial: q0
accepting: q2
q0 -> q0 : !a2
q0 -> q1 : a2
q1 -> q1 : !a1
q1 -> q2 : a1
q2 -> q2 : true
";
        let c = parse_dba(different).unwrap();
        assert!(!isomorphic(&a, &c));
    }
}
