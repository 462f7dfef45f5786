//! Shared fixtures for the integration suites: asset loading, the scalar and
//! vehicle benchmark systems, frozen analytic winning sets, an independent
//! product-game solver, and random instance generators.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use winset::automaton::{parse_dba, parse_nba, Dba, PropFormula};
use winset::interval::{BoxSet, IntervalBox};
use winset::oracle::FiniteTS;
use winset::system::{DynamicsConfig, SystemSpec};

pub fn assets_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../assets")
}

fn read_asset(rel: &str) -> String {
    let path = assets_dir().join(rel);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

pub fn load_dba(rel: &str) -> Dba {
    parse_dba(&read_asset(rel)).unwrap()
}

pub fn load_nba(rel: &str) -> Dba {
    parse_nba(&read_asset(rel)).unwrap()
}

pub fn load_ts(rel: &str) -> FiniteTS {
    FiniteTS::parse(&read_asset(rel)).unwrap()
}

fn boxset_1d(pairs: &[(f64, f64)]) -> BoxSet {
    BoxSet::new(
        pairs
            .iter()
            .map(|&(lo, hi)| IntervalBox::new(vec![lo], vec![hi]).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Scalar benchmark: x+ = u (x - 1) + 1 on X = [0, 2], u in [-0.9, -0.8],
/// regions a1 = [0.1, 0.2] and a2 = [0.5, 0.6], growth constant 1.
pub fn scalar_spec(delta: f64) -> SystemSpec {
    let mut regions = BTreeMap::new();
    regions.insert("a1".to_string(), boxset_1d(&[(0.1, 0.2)]));
    regions.insert("a2".to_string(), boxset_1d(&[(0.5, 0.6)]));
    SystemSpec::new(
        IntervalBox::new(vec![0.0], vec![2.0]).unwrap(),
        IntervalBox::new(vec![-0.9], vec![-0.8]).unwrap(),
        delta,
        1.0,
        DynamicsConfig::ScalarAffine { center: 1.0 },
        regions,
    )
    .unwrap()
}

/// Scalar system with regions laid out so the five-state ordering task is
/// winnable: the map contracts |x - 1| by 0.8..0.9 each step, so the chain
/// a1, a2, a3, a1 only closes if a1 has a second box near the center that
/// stays reachable after the bands of a2 and a3 have been spent.
pub fn scalar_ordered_spec(delta: f64) -> SystemSpec {
    let mut regions = BTreeMap::new();
    regions.insert("a1".to_string(), boxset_1d(&[(0.1, 0.2), (0.8, 0.9)]));
    regions.insert("a2".to_string(), boxset_1d(&[(1.5, 1.7)]));
    regions.insert("a3".to_string(), boxset_1d(&[(0.35, 0.45)]));
    SystemSpec::new(
        IntervalBox::new(vec![0.0], vec![2.0]).unwrap(),
        IntervalBox::new(vec![-0.9], vec![-0.8]).unwrap(),
        delta,
        1.0,
        DynamicsConfig::ScalarAffine { center: 1.0 },
        regions,
    )
    .unwrap()
}

/// Unicycle on a 10 x 10 arena with three corner regions, velocity pinned
/// at 1, sampling period 0.3.
pub fn vehicle_spec() -> SystemSpec {
    let pi = std::f64::consts::PI;
    let region = |x0: f64, x1: f64, y0: f64, y1: f64| {
        BoxSet::new(vec![IntervalBox::new(
            vec![x0, y0, -pi],
            vec![x1, y1, pi],
        )
        .unwrap()])
        .unwrap()
    };
    let mut regions = BTreeMap::new();
    regions.insert("a1".to_string(), region(0.5, 2.5, 7.5, 9.5));
    regions.insert("a2".to_string(), region(7.5, 9.5, 7.5, 9.5));
    regions.insert("a3".to_string(), region(7.5, 9.5, 0.5, 2.5));
    SystemSpec::new(
        IntervalBox::new(vec![0.0, 0.0, -pi], vec![10.0, 10.0, pi]).unwrap(),
        IntervalBox::new(vec![-1.0, 1.0], vec![1.0, 1.0]).unwrap(),
        0.0,
        2.0,
        DynamicsConfig::Vehicle { tau: 0.3 },
        regions,
    )
    .unwrap()
}

// Analytic winning sets for the scalar benchmark with the two-phase task
// (reach a1, then reach a2, then accept forever). Nominal = no disturbance;
// perturbed = disturbance bound 0.01 = rho * (eps + mu) at eps = mu = 0.005.
// The decimal variants are rounded to the 1e-3 sampling grid used by the
// sandwich check; the exact variants carry the true fraction endpoints.
pub const NOMINAL_Q1: &[(f64, f64)] = &[(0.0, 0.6), (1.444, 2.0)];
pub const NOMINAL_Q2: &[(f64, f64)] = &[(0.0, 0.012), (0.1, 0.2), (1.889, 2.0)];
pub const PERTURBED_Q1: &[(f64, f64)] = &[(0.0, 0.483), (0.5, 0.6), (1.456, 2.0)];
pub const PERTURBED_Q2: &[(f64, f64)] = &[(0.1, 0.2), (1.9, 2.0)];

pub fn nominal_exact_q1() -> Vec<(f64, f64)> {
    vec![(0.0, 0.6), (13.0 / 9.0, 2.0)]
}

pub fn nominal_exact_q2() -> Vec<(f64, f64)> {
    vec![(0.0, 1.0 / 81.0), (0.1, 0.2), (17.0 / 9.0, 2.0)]
}

pub fn perturbed_exact_q1() -> Vec<(f64, f64)> {
    vec![(0.0, 391.0 / 810.0), (0.5, 0.6), (131.0 / 90.0, 2.0)]
}

pub fn perturbed_exact_q2() -> Vec<(f64, f64)> {
    vec![(0.1, 0.2), (1.9, 2.0)]
}

pub fn in_union(x: f64, set: &[(f64, f64)]) -> bool {
    set.iter().any(|&(lo, hi)| lo <= x && x <= hi)
}

/// Whole interval [lo, hi] inside one component of the union.
pub fn interval_in_union(lo: f64, hi: f64, set: &[(f64, f64)]) -> bool {
    set.iter().any(|&(a, b)| a <= lo && hi <= b)
}

/// Sampling grid 0, 0.001, ..., 2 over the scalar state space.
pub fn grid_1mm() -> impl Iterator<Item = f64> {
    (0..=2000).map(|i| i as f64 / 1000.0)
}

/// Independent Buechi solver over the explicit product graph, written
/// against the game-theoretic recurrence rather than the row-vector
/// iteration: V_0 = all, V_{k+1} = CanReach(F intersect cpre(V_k)), where
/// cpre demands some action whose successors all stay inside and CanReach
/// is the least fixed point of T union cpre. Returns per-automaton-state
/// winning sets of system states.
pub fn brute_force_product_buchi(ts: &FiniteTS, dba: &Dba) -> Vec<BTreeSet<usize>> {
    let n = ts.states.len();
    let nq = dba.n_states;
    let total = nq * n;
    let masks: Vec<u16> = ts
        .labels
        .iter()
        .map(|l| dba.mask_of(l.iter().map(String::as_str)).unwrap())
        .collect();
    // Automaton successor on reading the label of the current system state.
    let tgt: Vec<Vec<Option<usize>>> = (0..nq)
        .map(|q| (0..n).map(|s| dba.transition(q, masks[s])).collect())
        .collect();
    let idx = |q: usize, s: usize| q * n + s;

    let cpre = |inside: &[bool]| -> Vec<bool> {
        let mut out = vec![false; total];
        for q in 0..nq {
            for s in 0..n {
                let Some(t) = tgt[q][s] else { continue };
                let ok = ts.trans[s]
                    .iter()
                    .any(|(_, succs)| succs.iter().all(|&sp| inside[idx(t, sp)]));
                if ok {
                    out[idx(q, s)] = true;
                }
            }
        }
        out
    };

    let accepting: Vec<bool> = (0..total)
        .map(|v| dba.accepting.contains(&(v / n)))
        .collect();
    let mut v = vec![true; total];
    loop {
        let pre = cpre(&v);
        let target: Vec<bool> = (0..total).map(|i| accepting[i] && pre[i]).collect();
        let mut reach = target;
        loop {
            let pre = cpre(&reach);
            let next: Vec<bool> = (0..total).map(|i| reach[i] || pre[i]).collect();
            if next == reach {
                break;
            }
            reach = next;
        }
        if reach == v {
            break;
        }
        v = reach;
    }
    (0..nq)
        .map(|q| (0..n).filter(|&s| v[idx(q, s)]).collect())
        .collect()
}

/// Random finite transition system: 1..=max_states states, 1..=max_actions
/// actions, every state keeps at least one enabled action, nondeterministic
/// successor sets of size 1..=3.
pub fn random_ts(
    rng: &mut ChaCha8Rng,
    aps: &[&str],
    max_states: usize,
    max_actions: usize,
) -> FiniteTS {
    let n = rng.gen_range(1..=max_states);
    let n_actions = rng.gen_range(1..=max_actions);
    let states = (0..n).map(|s| format!("s{s}")).collect();
    let actions = (0..n_actions).map(|a| format!("u{a}")).collect();
    let labels = (0..n)
        .map(|_| {
            aps.iter()
                .filter(|_| rng.gen_bool(0.4))
                .map(|a| a.to_string())
                .collect()
        })
        .collect();
    let trans = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=n_actions);
            let mut pool: Vec<usize> = (0..n_actions).collect();
            for i in 0..k {
                let j = rng.gen_range(i..n_actions);
                pool.swap(i, j);
            }
            let mut chosen = pool[..k].to_vec();
            chosen.sort_unstable();
            chosen
                .into_iter()
                .map(|a| {
                    let m = rng.gen_range(1..=3.min(n));
                    let mut succs = BTreeSet::new();
                    while succs.len() < m {
                        succs.insert(rng.gen_range(0..n));
                    }
                    (a, succs.into_iter().collect())
                })
                .collect()
        })
        .collect();
    FiniteTS {
        states,
        labels,
        actions,
        trans,
    }
}

/// Conjunction of literals matching exactly the given assignment mask.
pub fn minterm(aps: &[String], mask: u16) -> PropFormula {
    let mut formula: Option<PropFormula> = None;
    for (i, ap) in aps.iter().enumerate() {
        let lit = if mask & (1 << i) != 0 {
            PropFormula::Atom(ap.clone())
        } else {
            PropFormula::not(PropFormula::Atom(ap.clone()))
        };
        formula = Some(match formula {
            None => lit,
            Some(f) => PropFormula::and(f, lit),
        });
    }
    formula.unwrap_or(PropFormula::True)
}

/// Random deterministic, total automaton: for each state one successor per
/// assignment mask, grouped into minterm-disjunction guards.
pub fn random_total_dba(rng: &mut ChaCha8Rng, aps: &[&str], max_states: usize) -> Dba {
    let n = rng.gen_range(1..=max_states);
    let aps_owned: Vec<String> = aps.iter().map(|s| s.to_string()).collect();
    let n_masks = 1u16 << aps_owned.len();
    let edges = (0..n)
        .map(|_| {
            let mut per_target: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
            for m in 0..n_masks {
                per_target.entry(rng.gen_range(0..n)).or_default().push(m);
            }
            per_target
                .into_iter()
                .map(|(to, ms)| {
                    let guard = ms
                        .into_iter()
                        .map(|m| minterm(&aps_owned, m))
                        .reduce(PropFormula::or)
                        .unwrap();
                    (guard, to)
                })
                .collect()
        })
        .collect();
    let accepting = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    Dba {
        aps: aps_owned,
        disjoint: Vec::new(),
        n_states: n,
        initial: rng.gen_range(0..n),
        accepting,
        edges,
    }
}

/// Random nondeterministic, possibly partial automaton: per state and mask,
/// zero to two successors, each edge guarded by the mask's minterm.
pub fn random_nba(rng: &mut ChaCha8Rng, aps: &[&str], max_states: usize) -> Dba {
    let n = rng.gen_range(1..=max_states);
    let aps_owned: Vec<String> = aps.iter().map(|s| s.to_string()).collect();
    let n_masks = 1u16 << aps_owned.len();
    let edges = (0..n)
        .map(|_| {
            let mut row = Vec::new();
            for m in 0..n_masks {
                for _ in 0..rng.gen_range(0..=2u32) {
                    row.push((minterm(&aps_owned, m), rng.gen_range(0..n)));
                }
            }
            row
        })
        .collect();
    let accepting = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
    Dba {
        aps: aps_owned,
        disjoint: Vec::new(),
        n_states: n,
        initial: rng.gen_range(0..n),
        accepting,
        edges,
    }
}
