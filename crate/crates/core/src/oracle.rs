//! Exact solvers over finite transition systems. These serve two roles:
//! the same nested fixed point as the interval engine, computed without any
//! geometry, and a grid abstraction of a continuous system whose winning
//! sets can be compared against the interval result.

use std::collections::{BTreeMap, BTreeSet};

use crate::automaton::Dba;
use crate::error::Error;
use crate::interval::IntervalBox;
use crate::system::{sample_controls, ControlGrid, SystemSpec};

/// Finite transition system with named states and actions. Successor sets
/// may have several elements (adversarial nondeterminism). A state with no
/// available action is never winning.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteTS {
    pub states: Vec<String>,
    /// Per state, sorted proposition names.
    pub labels: Vec<Vec<String>>,
    pub actions: Vec<String>,
    /// Per state: `(action index, sorted successors)`, ascending by action.
    pub trans: Vec<Vec<(usize, Vec<usize>)>>,
}

impl FiniteTS {
    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Parse the line-oriented text format:
    ///
    /// ```text
    /// # comment
    /// state s0 :
    /// state s1 : b
    /// trans s0 u1 s3
    /// trans s0 u1 s4
    /// ```
    ///
    /// States are indexed in declaration order, actions in order of first
    /// appearance. Every state needs at least one transition.
    pub fn parse(src: &str) -> Result<Self, Error> {
        let err = |line: usize, col: usize, msg: String| Error::Parse { line, col, msg };
        let mut states: Vec<String> = Vec::new();
        let mut labels: Vec<Vec<String>> = Vec::new();
        let mut actions: Vec<String> = Vec::new();
        let mut raw: Vec<BTreeMap<usize, BTreeSet<usize>>> = Vec::new();
        let mut trans_lines: Vec<(usize, Vec<String>)> = Vec::new();

        for (i, full) in src.lines().enumerate() {
            let line_no = i + 1;
            let text = full.split('#').next().unwrap_or("").trim();
            if text.is_empty() {
                continue;
            }
            let mut parts = text.split_whitespace();
            match parts.next() {
                Some("state") => {
                    let rest = text["state".len()..].trim();
                    let (name, label_part) = match rest.split_once(':') {
                        Some((n, l)) => (n.trim(), l.trim()),
                        None => {
                            return Err(err(line_no, 1, "state line needs `:`".into()));
                        }
                    };
                    check_ident(name, line_no)?;
                    if states.iter().any(|s| s == name) {
                        return Err(err(line_no, 1, format!("duplicate state `{name}`")));
                    }
                    let mut aps = BTreeSet::new();
                    for part in label_part.split(',') {
                        let ap = part.trim();
                        if ap.is_empty() {
                            continue;
                        }
                        check_ident(ap, line_no)?;
                        if !aps.insert(ap.to_string()) {
                            return Err(err(
                                line_no,
                                1,
                                format!("duplicate proposition `{ap}` on state `{name}`"),
                            ));
                        }
                    }
                    states.push(name.to_string());
                    labels.push(aps.into_iter().collect());
                    raw.push(BTreeMap::new());
                }
                Some("trans") => {
                    let words: Vec<String> = parts.map(str::to_string).collect();
                    if words.len() != 3 {
                        return Err(err(
                            line_no,
                            1,
                            "transition line needs `trans <state> <action> <state>`".into(),
                        ));
                    }
                    trans_lines.push((line_no, words));
                }
                Some(word) => {
                    return Err(err(line_no, 1, format!("unknown directive `{word}`")));
                }
                None => unreachable!("blank lines are skipped"),
            }
        }

        for (line_no, words) in trans_lines {
            let from = states
                .iter()
                .position(|s| *s == words[0])
                .ok_or_else(|| err(line_no, 1, format!("unknown state `{}`", words[0])))?;
            let to = states
                .iter()
                .position(|s| *s == words[2])
                .ok_or_else(|| err(line_no, 1, format!("unknown state `{}`", words[2])))?;
            check_ident(&words[1], line_no)?;
            let action = match actions.iter().position(|a| *a == words[1]) {
                Some(a) => a,
                None => {
                    actions.push(words[1].clone());
                    actions.len() - 1
                }
            };
            raw[from].entry(action).or_default().insert(to);
        }

        if states.is_empty() {
            return Err(err(1, 1, "no states declared".into()));
        }
        let trans: Vec<Vec<(usize, Vec<usize>)>> = raw
            .into_iter()
            .map(|m| {
                m.into_iter()
                    .map(|(a, succs)| (a, succs.into_iter().collect()))
                    .collect()
            })
            .collect();
        for (i, row) in trans.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::NoOutgoingAction {
                    index: i,
                    name: states[i].clone(),
                });
            }
        }
        Ok(Self {
            states,
            labels,
            actions,
            trans,
        })
    }
}

fn check_ident(name: &str, line: usize) -> Result<(), Error> {
    let mut chars = name.chars();
    let ok = chars
        .next()
        .map(|c| c.is_ascii_alphabetic() || c == '_')
        .unwrap_or(false)
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(Error::Parse {
            line,
            col: 1,
            msg: format!("invalid identifier `{name}`"),
        })
    }
}

/// Per automaton state: winning system states mapped to their valid action
/// indices (every action whose successors stay inside the target set).
pub type FiniteStrategy = Vec<BTreeMap<usize, Vec<usize>>>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FiniteStats {
    /// Productive passes per outer round.
    pub inner_iterations: Vec<usize>,
    pub outer_iterations: usize,
    /// `(automaton state, system state)` pairs added per pass of the first
    /// inner round.
    pub first_inner_y: Vec<Vec<(usize, usize)>>,
}

struct FiniteProblem<'a> {
    ts: &'a FiniteTS,
    /// `target[q][s]`: automaton successor from `q` under the label of
    /// `s`, `None` when no transition matches (the pair is dead).
    target: Vec<Vec<Option<usize>>>,
}

impl<'a> FiniteProblem<'a> {
    fn new(ts: &'a FiniteTS, dba: &Dba) -> Result<Self, Error> {
        let masks: Vec<u16> = ts
            .labels
            .iter()
            .map(|l| dba.mask_of(l.iter().map(String::as_str)))
            .collect::<Result<_, _>>()?;
        let target = (0..dba.n_states)
            .map(|q| masks.iter().map(|&m| dba.transition(q, m)).collect())
            .collect();
        Ok(Self { ts, target })
    }

    /// Actions of `s` whose successors all lie in `win[target[q][s]]`.
    fn valid_actions(&self, q: usize, s: usize, win: &[Vec<bool>]) -> Vec<usize> {
        let Some(t) = self.target[q][s] else {
            return Vec::new();
        };
        self.ts.trans[s]
            .iter()
            .filter(|(_, succs)| succs.iter().all(|&sp| win[t][sp]))
            .map(|&(a, _)| a)
            .collect()
    }
}

/// Winning sets of the product of a finite system with the automaton,
/// per automaton state, with a recorded strategy. Exact counterpart of the
/// interval engine: accepting rows start at everything and shrink once per
/// outer round; the other rows restart from nothing and grow to the inner
/// fixed point in simultaneous (Jacobi) passes, counting the productive
/// ones.
pub fn finite_buchi(
    ts: &FiniteTS,
    dba: &Dba,
) -> Result<(Vec<BTreeSet<usize>>, FiniteStrategy, FiniteStats), Error> {
    let problem = FiniteProblem::new(ts, dba)?;
    let n = ts.states.len();
    let z_rows: Vec<usize> = dba.accepting.iter().copied().collect();
    let y_rows: Vec<usize> = (0..dba.n_states)
        .filter(|q| !dba.accepting.contains(q))
        .collect();

    let mut win = vec![vec![false; n]; dba.n_states];
    let mut strat: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; dba.n_states];
    for &z in &z_rows {
        win[z] = vec![true; n];
    }
    let mut stats = FiniteStats::default();

    loop {
        for &y in &y_rows {
            win[y] = vec![false; n];
            for s in 0..n {
                strat[y][s].clear();
            }
        }
        let mut passes = 0;
        loop {
            let mut adds: Vec<(usize, usize, Vec<usize>)> = Vec::new();
            for &y in &y_rows {
                for s in 0..n {
                    if win[y][s] {
                        continue;
                    }
                    let valid = problem.valid_actions(y, s, &win);
                    if !valid.is_empty() {
                        adds.push((y, s, valid));
                    }
                }
            }
            if adds.is_empty() {
                break;
            }
            passes += 1;
            if stats.outer_iterations == 0 {
                stats
                    .first_inner_y
                    .push(adds.iter().map(|&(q, s, _)| (q, s)).collect());
            }
            for (q, s, valid) in adds {
                win[q][s] = true;
                strat[q][s] = valid;
            }
        }
        stats.inner_iterations.push(passes);
        stats.outer_iterations += 1;
        if z_rows.is_empty() {
            break;
        }

        let mut unchanged = true;
        let mut next: Vec<(usize, Vec<bool>, Vec<Vec<usize>>)> = Vec::new();
        for &z in &z_rows {
            let mut wz = vec![false; n];
            let mut sz = vec![Vec::new(); n];
            for s in 0..n {
                let valid = problem.valid_actions(z, s, &win);
                if !valid.is_empty() {
                    wz[s] = true;
                    sz[s] = valid;
                }
            }
            debug_assert!(
                (0..n).all(|s| !wz[s] || win[z][s]),
                "outer iterate must not grow"
            );
            if wz != win[z] {
                unchanged = false;
            }
            next.push((z, wz, sz));
        }
        for (z, wz, sz) in next {
            win[z] = wz;
            strat[z] = sz;
        }
        if unchanged {
            break;
        }
    }

    let win_sets = win
        .iter()
        .map(|row| (0..n).filter(|&s| row[s]).collect())
        .collect();
    let strategy = strat
        .into_iter()
        .enumerate()
        .map(|(q, row)| {
            row.into_iter()
                .enumerate()
                .filter(|(s, _)| win[q][*s])
                .map(|(s, v)| (s, v))
                .collect()
        })
        .collect();
    Ok((win_sets, strategy, stats))
}

/// One application of the predecessor operator to a candidate winning
/// vector (indexed by automaton state). The fixed point returned by
/// [`finite_buchi`] maps to itself.
pub fn finite_t_apply(
    ts: &FiniteTS,
    dba: &Dba,
    win: &[BTreeSet<usize>],
) -> Result<Vec<BTreeSet<usize>>, Error> {
    if win.len() != dba.n_states {
        return Err(Error::InvalidParameter {
            name: "win",
            reason: "one set per automaton state required".into(),
        });
    }
    let problem = FiniteProblem::new(ts, dba)?;
    let n = ts.states.len();
    let dense: Vec<Vec<bool>> = win
        .iter()
        .map(|set| (0..n).map(|s| set.contains(&s)).collect())
        .collect();
    Ok((0..dba.n_states)
        .map(|q| {
            (0..n)
                .filter(|&s| !problem.valid_actions(q, s, &dense).is_empty())
                .collect()
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbstractionStats {
    pub n_cells: usize,
    pub cells_per_dim: Vec<usize>,
    /// Total successor records over all (cell, control) pairs, including
    /// records pointing at the out state.
    pub n_records: usize,
    pub n_out_records: usize,
}

/// Uniform-grid abstraction of a continuous system. Cell labels come from
/// the cell midpoint, which is exact because region faces must lie on the
/// grid. A control leads from a cell to every cell its one-step
/// over-approximation touches, plus a designated out state when the image
/// is not contained in the state space. The out state has no actions, so
/// it is never winning and any record pointing at it invalidates the
/// control.
#[derive(Debug)]
pub struct Abstraction {
    pub cells_per_dim: Vec<usize>,
    pub sides: Vec<f64>,
    pub n_cells: usize,
    /// Cell index of the out state in `ts`.
    pub out_state: usize,
    pub ts: FiniteTS,
    pub stats: AbstractionStats,
    origin: Vec<f64>,
}

impl Abstraction {
    /// Build the abstraction at resolution `eps`; every region face must
    /// sit on the induced grid. `cap` bounds the number of successor
    /// records.
    pub fn build(
        spec: &SystemSpec,
        grid: &ControlGrid,
        eps: f64,
        cap: Option<usize>,
    ) -> Result<Self, Error> {
        if eps <= 0.0 || !eps.is_finite() {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: "abstraction resolution must be positive".into(),
            });
        }
        let x = &spec.state_space;
        let dim = x.dim();
        let mut cells_per_dim = Vec::with_capacity(dim);
        let mut sides = Vec::with_capacity(dim);
        for k in 0..dim {
            let extent = x.hi()[k] - x.lo()[k];
            if extent == 0.0 {
                return Err(Error::InvalidParameter {
                    name: "state_space",
                    reason: format!("dimension {k} is degenerate"),
                });
            }
            let n = (extent / eps - 1e-9).ceil().max(1.0) as usize;
            cells_per_dim.push(n);
            sides.push(extent / n as f64);
        }
        let n_cells: usize = cells_per_dim.iter().product();

        for (ap, region) in &spec.ap_regions {
            for b in region.boxes() {
                for k in 0..dim {
                    for coord in [b.lo()[k], b.hi()[k]] {
                        let t = (coord - x.lo()[k]) / sides[k];
                        if (t - t.round()).abs() > 1e-9 {
                            return Err(Error::RegionMisaligned {
                                ap: ap.clone(),
                                dim: k,
                                coord,
                            });
                        }
                    }
                }
            }
        }

        let mut labels = Vec::with_capacity(n_cells + 1);
        let mut trans: Vec<Vec<(usize, Vec<usize>)>> = Vec::with_capacity(n_cells + 1);
        let out_state = n_cells;
        let mut records = 0usize;
        let mut out_records = 0usize;
        let origin = x.lo().to_vec();

        for cell in 0..n_cells {
            let b = cell_box_of(&origin, &sides, &cells_per_dim, cell);
            labels.push(spec.labels_at(&b.midpoint()));
            let mut row = Vec::with_capacity(grid.len());
            for (ui, u) in grid.points().iter().enumerate() {
                let (img, rest) = spec.reach_overapprox_parts(&b, u);
                let mut succs = intersecting_cells(&origin, &sides, &cells_per_dim, &img);
                let mut outside = !x.contains_box(&img);
                if let Some(r) = &rest {
                    succs.extend(intersecting_cells(&origin, &sides, &cells_per_dim, r));
                    succs.sort_unstable();
                    succs.dedup();
                    outside = outside || !x.contains_box(r);
                }
                if outside {
                    succs.push(out_state);
                    out_records += 1;
                }
                records += succs.len();
                if let Some(cap) = cap {
                    if records > cap {
                        return Err(Error::MemoryCap {
                            records,
                            cap,
                            cells_done: cell,
                            cells_total: n_cells,
                        });
                    }
                }
                row.push((ui, succs));
            }
            trans.push(row);
        }
        labels.push(Vec::new());
        trans.push(Vec::new());

        let mut states: Vec<String> = (0..n_cells).map(|i| format!("c{i}")).collect();
        states.push("out".into());
        let actions = (0..grid.len()).map(|i| format!("u{i}")).collect();
        let stats = AbstractionStats {
            n_cells,
            cells_per_dim: cells_per_dim.clone(),
            n_records: records,
            n_out_records: out_records,
        };
        Ok(Self {
            cells_per_dim,
            sides,
            n_cells,
            out_state,
            ts: FiniteTS {
                states,
                labels,
                actions,
                trans,
            },
            stats,
            origin,
        })
    }

    pub fn cell_box(&self, cell: usize) -> IntervalBox {
        cell_box_of(&self.origin, &self.sides, &self.cells_per_dim, cell)
    }

    /// Cell containing a point; upper faces belong to the last cell of
    /// each dimension. `None` outside the state space.
    pub fn cell_of_point(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.origin.len() {
            return None;
        }
        let mut idx = 0usize;
        for k in 0..x.len() {
            let n = self.cells_per_dim[k];
            let t = (x[k] - self.origin[k]) / self.sides[k];
            if t < 0.0 || t > n as f64 {
                return None;
            }
            idx = idx * n + (t.floor() as usize).min(n - 1);
        }
        Some(idx)
    }
}

fn cell_box_of(origin: &[f64], sides: &[f64], cells: &[usize], cell: usize) -> IntervalBox {
    let dim = origin.len();
    let mut coord = vec![0usize; dim];
    let mut rest = cell;
    for k in (0..dim).rev() {
        coord[k] = rest % cells[k];
        rest /= cells[k];
    }
    let lo: Vec<f64> = (0..dim)
        .map(|k| origin[k] + coord[k] as f64 * sides[k])
        .collect();
    let hi: Vec<f64> = (0..dim)
        .map(|k| origin[k] + (coord[k] + 1) as f64 * sides[k])
        .collect();
    IntervalBox::new(lo, hi).expect("grid cells are well formed")
}

/// Flat indices of every cell whose closed box meets `img`, ascending.
fn intersecting_cells(
    origin: &[f64],
    sides: &[f64],
    cells: &[usize],
    img: &IntervalBox,
) -> Vec<usize> {
    let dim = origin.len();
    let mut per_dim: Vec<Vec<usize>> = Vec::with_capacity(dim);
    for k in 0..dim {
        let n = cells[k] as isize;
        let lo_est = ((img.lo()[k] - origin[k]) / sides[k]).floor() as isize - 1;
        let hi_est = ((img.hi()[k] - origin[k]) / sides[k]).floor() as isize + 1;
        let mut idxs = Vec::new();
        for j in lo_est.max(0)..=hi_est.min(n - 1) {
            let face_lo = origin[k] + j as f64 * sides[k];
            let face_hi = origin[k] + (j + 1) as f64 * sides[k];
            if face_lo <= img.hi()[k] && face_hi >= img.lo()[k] {
                idxs.push(j as usize);
            }
        }
        if idxs.is_empty() {
            return Vec::new();
        }
        per_dim.push(idxs);
    }
    let mut out = Vec::new();
    let mut pick = vec![0usize; dim];
    'outer: loop {
        let mut idx = 0usize;
        for k in 0..dim {
            idx = idx * cells[k] + per_dim[k][pick[k]];
        }
        out.push(idx);
        for k in (0..dim).rev() {
            pick[k] += 1;
            if pick[k] < per_dim[k].len() {
                continue 'outer;
            }
            pick[k] = 0;
        }
        break;
    }
    out
}

/// Abstract the system at resolution `eps` with controls sampled at `mu`,
/// then solve the finite product exactly.
pub fn abstract_and_solve(
    spec: &SystemSpec,
    dba: &Dba,
    eps: f64,
    mu: f64,
    cap: Option<usize>,
) -> Result<(Abstraction, Vec<BTreeSet<usize>>, FiniteStrategy, FiniteStats), Error> {
    let grid = sample_controls(spec, mu)?;
    let abs = Abstraction::build(spec, &grid, eps, cap)?;
    let (win, strategy, stats) = finite_buchi(&abs.ts, dba)?;
    Ok((abs, win, strategy, stats))
}
