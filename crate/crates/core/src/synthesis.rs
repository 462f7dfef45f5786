//! Winning-set synthesis: constrained interval predecessor, nested Büchi
//! fixed point over a vector of pavers, structure-exploiting block
//! decomposition, strategy extraction, and a soundness audit.
//!
//! The inner fixed point applies the predecessor operator in rounds: all
//! rows of one pass classify leaves against the winning unions as they
//! stood when the pass began (marks become visible only in the next pass),
//! so iterate counts are well defined and results do not depend on row
//! processing order. Leaves are re-examined only when the paver they target
//! has grown since their last classification.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::{Duration, Instant};

use crate::automaton::{preprocess, transition_matrix, Dba, PropFormula, TransitionMatrix};
use crate::error::Error;
use crate::interval::{BoxSet, IntervalBox};
use crate::paver::{Paver, Tag, WinningView};
use crate::system::{sample_controls, ControlGrid, SystemSpec};

#[derive(Clone, Debug)]
pub struct SynthesisOptions {
    /// Decompose the automaton into component blocks and solve them
    /// last-to-first instead of running one global fixed point.
    pub preprocess: bool,
    /// Classify leaf batches on the rayon pool. Ignored (sequential) when
    /// the `parallel` feature is disabled. Results are identical either
    /// way.
    pub parallel: bool,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            preprocess: true,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SynthesisStats {
    pub eps: f64,
    pub mu: f64,
    /// Productive inner passes per outer round, in execution order across
    /// blocks.
    pub inner_iterations: Vec<usize>,
    pub outer_iterations: usize,
    /// Per automaton state (original indices): leaves and nodes of its
    /// paver.
    pub leaf_counts: Vec<usize>,
    pub node_counts: Vec<usize>,
    /// Total tree nodes at the end of the run; trees only grow, so this is
    /// also the peak.
    pub peak_nodes: usize,
    pub wall: Duration,
    /// rho * (eps + mu): winning sets of the eroded problem at this margin
    /// are guaranteed to be found.
    pub robustness_margin: f64,
    /// Model-based estimate of peak working-set bytes (trees plus grid).
    pub model_bytes: usize,
}

/// One paver per automaton state, in matrix order. `order[p]` is the
/// original state index at position `p`.
#[derive(Clone, Debug)]
pub struct WinningVector {
    pub order: Vec<usize>,
    pub pavers: Vec<Paver>,
}

impl WinningVector {
    pub fn position_of_state(&self, q: usize) -> Option<usize> {
        self.order.iter().position(|&s| s == q)
    }

    pub fn paver_of_state(&self, q: usize) -> Option<&Paver> {
        self.position_of_state(q).map(|p| &self.pavers[p])
    }
}

/// Target of a classification: a paver's winning union at a cutoff, or an
/// explicit box union.
#[derive(Clone, Copy)]
enum TargetRef<'a> {
    View(WinningView<'a>),
    Boxes(&'a BoxSet),
}

impl<'a> TargetRef<'a> {
    #[inline]
    fn covers(&self, b: &IntervalBox) -> bool {
        match self {
            Self::View(v) => v.covers(b),
            Self::Boxes(s) => s.contains(b).unwrap_or(false),
        }
    }

    #[inline]
    fn intersects(&self, b: &IntervalBox) -> bool {
        match self {
            Self::View(v) => v.intersects(b),
            Self::Boxes(s) => s.intersects(b).unwrap_or(false),
        }
    }
}

enum Outcome {
    /// Some controls drive the whole leaf image into the target; all such
    /// controls listed.
    Won(Vec<u16>),
    /// Some control image meets the target but none is contained: bisection
    /// candidate.
    Partial,
    /// Every control image misses the target entirely.
    Empty,
    /// The leaf label enables no transition; the leaf can never win.
    Infeasible,
}

struct Ctx<'a> {
    spec: &'a SystemSpec,
    grid: &'a ControlGrid,
    eps: f64,
    parallel: bool,
}

impl<'a> Ctx<'a> {
    fn classify(&self, bx: &IntervalBox, target: Option<TargetRef<'_>>) -> Outcome {
        let Some(target) = target else {
            return Outcome::Infeasible;
        };
        let mut valid: Vec<u16> = Vec::new();
        let mut any_hit = false;
        for ui in 0..self.grid.len() {
            let (img, rest) = self.spec.reach_overapprox_parts(bx, self.grid.point(ui));
            let covered = target.covers(&img) && rest.as_ref().map_or(true, |r| target.covers(r));
            if covered {
                valid.push(ui as u16);
                any_hit = true;
            } else if !any_hit
                && (target.intersects(&img) || rest.as_ref().is_some_and(|r| target.intersects(r)))
            {
                any_hit = true;
            }
        }
        if !valid.is_empty() {
            Outcome::Won(valid)
        } else if any_hit {
            Outcome::Partial
        } else {
            Outcome::Empty
        }
    }

    fn run_batch<'b, F>(&self, paver: &Paver, batch: &[u32], target_of: F) -> Vec<Outcome>
    where
        F: Fn(u16) -> Option<TargetRef<'b>> + Sync,
    {
        let work = |&id: &u32| self.classify(paver.leaf_box(id), target_of(paver.label(id)));
        #[cfg(feature = "parallel")]
        if self.parallel {
            use rayon::prelude::*;
            return batch.par_iter().map(work).collect();
        }
        batch.iter().map(work).collect()
    }
}

/// Per-row transition table: assignment mask to target matrix position.
type RowCols = Vec<Option<usize>>;

fn compile_rows(matrix: &TransitionMatrix, aps: &[String]) -> Vec<RowCols> {
    let n_masks = 1usize << aps.len();
    matrix
        .entries
        .iter()
        .map(|row| {
            (0..n_masks as u16)
                .map(|mask| {
                    row.iter()
                        .position(|g| !matches!(g, PropFormula::Empty) && g.eval_mask(aps, mask))
                })
                .collect()
        })
        .collect()
}

/// Regions declared disjoint must be pairwise interior-disjoint, otherwise
/// leaf labels could be infeasible assignments.
fn validate_disjoint_regions(spec: &SystemSpec, dba: &Dba) -> Result<(), Error> {
    for (i, a) in dba.disjoint.iter().enumerate() {
        for b in dba.disjoint.iter().skip(i + 1) {
            let (ra, rb) = match (spec.ap_regions.get(a), spec.ap_regions.get(b)) {
                (Some(ra), Some(rb)) => (ra, rb),
                _ => continue,
            };
            for ba in ra.boxes() {
                for bb in rb.boxes() {
                    if let Some(ix) = ba.intersection(bb) {
                        if (0..ix.dim()).all(|k| ix.side(k) > 0.0) {
                            return Err(Error::RegionsNotDisjoint {
                                a: a.clone(),
                                b: b.clone(),
                                witness: format!("{:?}", ix.midpoint()),
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Apply classification outcomes to a row paver. Returns leaves newly
/// marked winning; partial leaves wide enough are bisected and their
/// children appended to `pending`.
fn apply_outcomes(
    ctx: &Ctx<'_>,
    paver: &mut Paver,
    batch: &[u32],
    outcomes: Vec<Outcome>,
    counter: &mut u64,
    pending: &mut Vec<u32>,
    mut stale: Option<&mut [Vec<u32>]>,
    row_cols: &RowCols,
    newly: &mut Vec<u32>,
) {
    for (&id, out) in batch.iter().zip(outcomes) {
        match out {
            Outcome::Won(controls) => {
                *counter += 1;
                paver.mark_winning(id, controls, *counter);
                newly.push(id);
            }
            Outcome::Partial => {
                if paver.leaf_box(id).width() >= ctx.eps {
                    let (a, b) = paver.bisect_leaf(id);
                    pending.push(a);
                    pending.push(b);
                } else {
                    paver.set_tag(id, Tag::Undetermined);
                    if let Some(stale) = stale.as_deref_mut() {
                        if let Some(c) = row_cols[paver.label(id) as usize] {
                            stale[c].push(id);
                        }
                    }
                }
            }
            Outcome::Empty => {
                paver.set_tag(id, Tag::Losing);
                if let Some(stale) = stale.as_deref_mut() {
                    if let Some(c) = row_cols[paver.label(id) as usize] {
                        stale[c].push(id);
                    }
                }
            }
            Outcome::Infeasible => {
                paver.set_tag(id, Tag::Losing);
            }
        }
    }
}

/// Drain one row whose paver lives inside the vector (two-phase borrows so
/// a self-loop can read its own frozen winning union while being refined).
#[allow(clippy::too_many_arguments)]
fn drain_row_in_vec(
    ctx: &Ctx<'_>,
    pavers: &mut [Paver],
    row: usize,
    row_cols: &RowCols,
    cutoff: u64,
    counter: &mut u64,
    mut pending: Vec<u32>,
    stale: &mut [Vec<u32>],
    newly: &mut Vec<u32>,
) {
    while !pending.is_empty() {
        let batch = std::mem::take(&mut pending);
        let outcomes = {
            let views: Vec<WinningView<'_>> =
                pavers.iter().map(|p| p.winning_view(cutoff)).collect();
            let target_of = |mask: u16| row_cols[mask as usize].map(|c| TargetRef::View(views[c]));
            ctx.run_batch(&pavers[row], &batch, target_of)
        };
        apply_outcomes(
            ctx,
            &mut pavers[row],
            &batch,
            outcomes,
            counter,
            &mut pending,
            Some(stale),
            row_cols,
            newly,
        );
    }
}

/// Drain a detached paver (not a classification target) against the
/// current vector.
fn drain_detached(
    ctx: &Ctx<'_>,
    source: &mut Paver,
    pavers: &[Paver],
    row_cols: &RowCols,
    cutoff: u64,
    counter: &mut u64,
    newly: &mut Vec<u32>,
) {
    let mut pending = source.leaf_ids();
    while !pending.is_empty() {
        let batch = std::mem::take(&mut pending);
        let outcomes = {
            let views: Vec<WinningView<'_>> =
                pavers.iter().map(|p| p.winning_view(cutoff)).collect();
            let target_of = |mask: u16| row_cols[mask as usize].map(|c| TargetRef::View(views[c]));
            ctx.run_batch(source, &batch, target_of)
        };
        apply_outcomes(
            ctx,
            source,
            &batch,
            outcomes,
            counter,
            &mut pending,
            None,
            row_cols,
            newly,
        );
    }
}

/// Reachability-style accumulation over `y_rows` until no pass adds a
/// winning leaf. Returns the number of productive passes.
fn inner_loop(
    ctx: &Ctx<'_>,
    pavers: &mut [Paver],
    y_rows: &[usize],
    rows: &[RowCols],
    counter: &mut u64,
) -> usize {
    let n_cols = pavers.len();
    let mut stale: Vec<Vec<Vec<u32>>> = y_rows.iter().map(|_| vec![Vec::new(); n_cols]).collect();
    let mut pending: Vec<Vec<u32>> = y_rows
        .iter()
        .map(|&row| {
            pavers[row]
                .leaf_ids()
                .into_iter()
                .filter(|&id| pavers[row].tag(id) != Tag::Winning)
                .collect()
        })
        .collect();
    let mut iterations = 0usize;
    loop {
        let cutoff = *counter;
        let mut grew = vec![false; n_cols];
        let mut any = false;
        for (yi, &row) in y_rows.iter().enumerate() {
            let mut newly = Vec::new();
            let work = std::mem::take(&mut pending[yi]);
            drain_row_in_vec(
                ctx, pavers, row, &rows[row], cutoff, counter, work, &mut stale[yi], &mut newly,
            );
            if !newly.is_empty() {
                grew[row] = true;
                any = true;
            }
        }
        if !any {
            break;
        }
        iterations += 1;
        for (yi, _) in y_rows.iter().enumerate() {
            for (c, g) in grew.iter().enumerate() {
                if *g {
                    let woken = std::mem::take(&mut stale[yi][c]);
                    pending[yi].extend(woken);
                }
            }
        }
    }
    iterations
}

/// Nested fixed point on one block: accepting rows start from the whole
/// space and shrink, the others are recomputed from scratch each round.
fn nested_solve(
    ctx: &Ctx<'_>,
    pavers: &mut Vec<Paver>,
    y_rows: &[usize],
    z_rows: &[usize],
    rows: &[RowCols],
    counter: &mut u64,
    stats: &mut SynthesisStats,
) {
    if z_rows.is_empty() {
        let iters = inner_loop(ctx, pavers, y_rows, rows, counter);
        stats.inner_iterations.push(iters);
        stats.outer_iterations += 1;
        return;
    }
    for &z in z_rows {
        *counter += 1;
        pavers[z].mark_all_winning(*counter);
    }
    loop {
        for &y in y_rows {
            pavers[y].reset_tags();
        }
        let iters = inner_loop(ctx, pavers, y_rows, rows, counter);
        stats.inner_iterations.push(iters);

        let cutoff = *counter;
        let mut unchanged = true;
        let mut fresh_zs: Vec<(usize, Paver)> = Vec::new();
        for &z in z_rows {
            let mut fresh = pavers[z].clone_reset();
            let mut newly = Vec::new();
            drain_detached(ctx, &mut fresh, pavers, &rows[z], cutoff, counter, &mut newly);
            let old_view = pavers[z].winning_view(cutoff);
            for &id in &newly {
                assert!(
                    old_view.covers(fresh.leaf_box(id)),
                    "outer iterate must not grow"
                );
            }
            let fresh_view = fresh.winning_view(u64::MAX);
            if pavers[z]
                .winning_boxes()
                .iter()
                .any(|b| !fresh_view.covers(b))
            {
                unchanged = false;
            }
            fresh_zs.push((z, fresh));
        }
        stats.outer_iterations += 1;
        for (z, fresh) in fresh_zs {
            pavers[z] = fresh;
        }
        if unchanged {
            return;
        }
    }
}

fn model_bytes(pavers: &[Paver], grid: &ControlGrid) -> usize {
    let dim = pavers
        .first()
        .map(|p| p.root_box().dim())
        .unwrap_or(0);
    let per_node = 16 * dim + 48;
    let nodes: usize = pavers.iter().map(|p| p.n_nodes()).sum();
    let controls: usize = pavers
        .iter()
        .flat_map(|p| p.leaf_ids().into_iter().map(|id| p.controls(id).len() * 2))
        .sum::<usize>();
    let grid_bytes = grid.len() * grid.point(0).len() * 8;
    nodes * per_node + controls + grid_bytes
}

fn finish_stats(
    stats: &mut SynthesisStats,
    vector: &WinningVector,
    grid: &ControlGrid,
    started: Instant,
) {
    let n = vector.order.len();
    stats.leaf_counts = vec![0; n];
    stats.node_counts = vec![0; n];
    for (p, paver) in vector.pavers.iter().enumerate() {
        let state = vector.order[p];
        stats.leaf_counts[state] = paver.n_leaves();
        stats.node_counts[state] = paver.n_nodes();
    }
    stats.peak_nodes = stats.node_counts.iter().sum();
    stats.model_bytes = model_bytes(&vector.pavers, grid);
    stats.wall = started.elapsed();
}

fn check_params(eps: f64, mu: f64) -> Result<(), Error> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "paving precision must be positive".into(),
        });
    }
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: "control granularity must be positive".into(),
        });
    }
    Ok(())
}

/// Solve one transition matrix as a single nested fixed point, without
/// block decomposition. Accepting rows are the Z-component. The paver
/// proposition order is the automaton order `aps`.
pub fn buchi_fixpoint(
    matrix: &TransitionMatrix,
    aps: &[String],
    spec: &SystemSpec,
    eps: f64,
    mu: f64,
    options: &SynthesisOptions,
) -> Result<(WinningVector, SynthesisStats), Error> {
    check_params(eps, mu)?;
    let started = Instant::now();
    let grid = sample_controls(spec, mu)?;
    let ctx = Ctx {
        spec,
        grid: &grid,
        eps,
        parallel: options.parallel,
    };
    let rows = compile_rows(matrix, aps);
    let base = Paver::new(spec, aps)?;
    let mut pavers: Vec<Paver> = matrix.order.iter().map(|_| base.clone()).collect();
    let mut stats = SynthesisStats {
        eps,
        mu,
        robustness_margin: spec.rho * (eps + mu),
        ..Default::default()
    };
    let z_rows: Vec<usize> = (0..pavers.len()).filter(|&p| matrix.accepting[p]).collect();
    let y_rows: Vec<usize> = (0..pavers.len())
        .filter(|&p| !matrix.accepting[p])
        .collect();
    let mut counter = 0u64;
    nested_solve(
        &ctx,
        &mut pavers,
        &y_rows,
        &z_rows,
        &rows,
        &mut counter,
        &mut stats,
    );
    let vector = WinningVector {
        order: matrix.order.clone(),
        pavers,
    };
    finish_stats(&mut stats, &vector, &grid, started);
    Ok((vector, stats))
}

/// Full synthesis for an automaton: validates region disjointness, orders
/// the matrix, and solves either block by block (preprocessed) or
/// globally.
pub fn synthesize(
    dba: &Dba,
    spec: &SystemSpec,
    eps: f64,
    mu: f64,
    options: &SynthesisOptions,
) -> Result<(WinningVector, SynthesisStats), Error> {
    check_params(eps, mu)?;
    for ap in &dba.aps {
        if !spec.ap_regions.contains_key(ap) {
            return Err(Error::UnknownAp {
                name: ap.clone(),
                context: "system regions".into(),
            });
        }
    }
    validate_disjoint_regions(spec, dba)?;

    if !options.preprocess {
        let matrix = transition_matrix(dba, &(0..dba.n_states).collect::<Vec<_>>())?;
        return buchi_fixpoint(&matrix, &dba.aps, spec, eps, mu, options);
    }

    let started = Instant::now();
    let pre = preprocess(dba);
    let matrix = transition_matrix(dba, &pre.order)?;
    let grid = sample_controls(spec, mu)?;
    let ctx = Ctx {
        spec,
        grid: &grid,
        eps,
        parallel: options.parallel,
    };
    let rows = compile_rows(&matrix, &dba.aps);
    let base = Paver::new(spec, &dba.aps)?;
    let mut pavers: Vec<Paver> = pre.order.iter().map(|_| base.clone()).collect();
    let mut stats = SynthesisStats {
        eps,
        mu,
        robustness_margin: spec.rho * (eps + mu),
        ..Default::default()
    };

    // Dead positions can never visit an accepting state again: their sets
    // are empty by construction.
    for p in pre.n_live..pavers.len() {
        for id in pavers[p].leaf_ids() {
            pavers[p].set_tag(id, Tag::Losing);
        }
    }

    // Block extents over positions; solve live blocks last to first.
    let mut extents: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for &len in &pre.blocks {
        extents.push((start, start + len));
        start += len;
    }
    let mut counter = 0u64;
    for &(lo, hi) in extents.iter().rev() {
        if lo >= pre.n_live {
            continue;
        }
        let z_rows: Vec<usize> = (lo..hi).filter(|&p| matrix.accepting[p]).collect();
        let y_rows: Vec<usize> = (lo..hi).filter(|&p| !matrix.accepting[p]).collect();
        nested_solve(
            &ctx,
            &mut pavers,
            &y_rows,
            &z_rows,
            &rows,
            &mut counter,
            &mut stats,
        );
    }

    let vector = WinningVector {
        order: pre.order,
        pavers,
    };
    finish_stats(&mut stats, &vector, &grid, started);
    Ok((vector, stats))
}

/// Standalone constrained interval predecessor: refine `paver` against an
/// explicit target union, marking leaves whose label satisfies
/// `constraint` and whose image under some control is contained in the
/// target. Returns the newly winning leaf ids.
pub fn pre_approx(
    paver: &mut Paver,
    target: &BoxSet,
    constraint: &PropFormula,
    spec: &SystemSpec,
    grid: &ControlGrid,
    eps: f64,
    parallel: bool,
) -> Result<Vec<u32>, Error> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "paving precision must be positive".into(),
        });
    }
    let aps = paver.ap_order().to_vec();
    let mut atoms = BTreeSet::new();
    constraint.collect_atoms(&mut atoms);
    if let Some(name) = atoms.iter().find(|a| !aps.contains(a)) {
        return Err(Error::UnknownAp {
            name: name.clone(),
            context: "predecessor constraint".into(),
        });
    }
    let n_masks = 1usize << aps.len();
    let row_cols: RowCols = (0..n_masks as u16)
        .map(|mask| constraint.eval_mask(&aps, mask).then_some(0))
        .collect();
    let ctx = Ctx {
        spec,
        grid,
        eps,
        parallel,
    };
    let mut counter = 1u64;
    let mut newly = Vec::new();
    let mut pending: Vec<u32> = paver
        .leaf_ids()
        .into_iter()
        .filter(|&id| paver.tag(id) != Tag::Winning)
        .collect();
    while !pending.is_empty() {
        let batch = std::mem::take(&mut pending);
        let outcomes = {
            let target_of =
                |mask: u16| row_cols[mask as usize].map(|_| TargetRef::Boxes(target));
            ctx.run_batch(paver, &batch, target_of)
        };
        apply_outcomes(
            &ctx,
            paver,
            &batch,
            outcomes,
            &mut counter,
            &mut pending,
            None,
            &row_cols,
            &mut newly,
        );
    }
    Ok(newly)
}

#[derive(Clone, Debug, Default)]
pub struct AuditReport {
    pub leaves_checked: usize,
    pub control_checks: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Recheck every recorded strategy control: the disturbance-inflated image
/// of its leaf must land inside the winning union of the successor state's
/// paver. A clean report certifies the invariant the fixed point is built
/// on.
pub fn soundness_audit(
    vector: &WinningVector,
    dba: &Dba,
    spec: &SystemSpec,
    grid: &ControlGrid,
) -> AuditReport {
    let mut report = AuditReport::default();
    let mut pos_of_state = vec![usize::MAX; dba.n_states];
    for (p, &s) in vector.order.iter().enumerate() {
        pos_of_state[s] = p;
    }
    for (p, paver) in vector.pavers.iter().enumerate() {
        let state = vector.order[p];
        for id in paver.leaf_ids() {
            if paver.tag(id) != Tag::Winning {
                continue;
            }
            report.leaves_checked += 1;
            let mask = paver.label(id);
            let Some(succ_state) = dba.transition(state, mask) else {
                report
                    .violations
                    .push(format!("q{state} leaf {id}: label enables no transition"));
                continue;
            };
            let succ = &vector.pavers[pos_of_state[succ_state]];
            let view = succ.winning_view(u64::MAX);
            let controls = paver.controls(id);
            if controls.is_empty() {
                report
                    .violations
                    .push(format!("q{state} leaf {id}: winning without controls"));
                continue;
            }
            for &ui in controls {
                report.control_checks += 1;
                let (img, rest) =
                    spec.reach_overapprox_parts(paver.leaf_box(id), grid.point(ui as usize));
                let ok = view.covers(&img) && rest.as_ref().map_or(true, |r| view.covers(r));
                if !ok {
                    report.violations.push(format!(
                        "q{state} leaf {id}: control {ui} escapes the winning set of q{succ_state}"
                    ));
                }
            }
        }
    }
    report
}

/// Winning leaves as CSV: `state_index, lo_1, hi_1, .., lo_n, hi_n,
/// n_controls, u_idx..`, one row per winning leaf, grouped by original
/// state index.
pub fn export_winning_csv(vector: &WinningVector, out: &mut dyn Write) -> std::io::Result<()> {
    let mut by_state: Vec<(usize, &Paver)> = vector
        .order
        .iter()
        .zip(&vector.pavers)
        .map(|(&s, p)| (s, p))
        .collect();
    by_state.sort_by_key(|&(s, _)| s);
    for (state, paver) in by_state {
        for id in paver.leaf_ids() {
            if paver.tag(id) != Tag::Winning {
                continue;
            }
            let b = paver.leaf_box(id);
            write!(out, "{state}")?;
            for k in 0..b.dim() {
                write!(out, ", {}, {}", b.lo()[k], b.hi()[k])?;
            }
            let controls = paver.controls(id);
            write!(out, ", {}", controls.len())?;
            for &u in controls {
                write!(out, ", {u}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Flat key-value rendering of run statistics. Excludes wall time so that
/// equal runs produce byte-identical files.
pub fn render_stats(stats: &SynthesisStats, coverage: f64) -> String {
    let inner: Vec<String> = stats
        .inner_iterations
        .iter()
        .map(|i| i.to_string())
        .collect();
    let mut s = String::new();
    s.push_str(&format!("eps = {}\n", stats.eps));
    s.push_str(&format!("mu = {}\n", stats.mu));
    s.push_str(&format!("robustness_margin = {}\n", stats.robustness_margin));
    s.push_str(&format!("outer_iterations = {}\n", stats.outer_iterations));
    s.push_str(&format!("inner_iterations = {}\n", inner.join(" ")));
    s.push_str(&format!(
        "leaf_counts = {}\n",
        stats
            .leaf_counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    s.push_str(&format!(
        "node_counts = {}\n",
        stats
            .node_counts
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    ));
    s.push_str(&format!("peak_nodes = {}\n", stats.peak_nodes));
    s.push_str(&format!("model_bytes = {}\n", stats.model_bytes));
    s.push_str(&format!("initial_coverage = {coverage:.6}\n"));
    s
}
