//! Executable finite-memory controllers: the synthesized winning vector
//! packaged with the automaton and system description, a closed-loop
//! simulator with selectable disturbance models, and a checksummed binary
//! container format.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::automaton::{parse_formula, Dba, PropFormula};
use crate::error::Error;
use crate::interval::{BoxSet, IntervalBox};
use crate::paver::{Paver, Tag};
use crate::synthesis::WinningVector;
use crate::system::{ControlGrid, DynamicsConfig, Monomial, Polynomial, SystemSpec};

const MAGIC: &[u8; 4] = b"WSCT";
const VERSION: u8 = 1;

/// Finite-memory controller: automaton state tracks progress, the paver of
/// the current state supplies valid controls for the current plant state.
#[derive(Clone)]
pub struct Controller {
    pub dba: Dba,
    pub vector: WinningVector,
    pub grid: ControlGrid,
    pub spec: SystemSpec,
    pub rng_seed: u64,
}

/// Disturbance model applied after the nominal step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisturbanceMode {
    /// No disturbance.
    None,
    /// Adversarial corner sampling: the vertex of the disturbance box whose
    /// successor has the smallest margin inside its winning leaf.
    WorstSample,
    /// Uniform in the disturbance box.
    Random,
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    /// Plant states, length `steps + 1` unless stopped early.
    pub states: Vec<Vec<f64>>,
    /// Automaton states, same length as `states`.
    pub automaton_states: Vec<usize>,
    /// Controls applied at each step, length `states.len() - 1`.
    pub controls: Vec<Vec<f64>>,
    /// Disturbances applied at each step.
    pub disturbances: Vec<Vec<f64>>,
    /// Labels observed at each state.
    pub labels: Vec<Vec<String>>,
    /// Whether the run left the winning set (the step that would have left
    /// is not taken).
    pub left_winning_set: bool,
}

impl Controller {
    fn position(&self, q: usize) -> Result<usize, Error> {
        self.vector
            .position_of_state(q)
            .ok_or(Error::UndefinedTransition {
                state: q,
                label: "<unknown automaton state>".into(),
            })
    }

    /// Valid controls at `(q, x)` and the automaton successor under the
    /// label of `x`. Errors when `x` is outside the winning set of `q`
    /// (including outside the state space).
    pub fn step(&self, q: usize, x: &[f64]) -> Result<(Vec<Vec<f64>>, usize), Error> {
        let paver = &self.vector.pavers[self.position(q)?];
        let leaf = paver
            .winning_leaf_of_point(x)
            .ok_or_else(|| Error::OutOfWinningSet {
                q,
                x: x.to_vec(),
            })?;
        let controls: Vec<Vec<f64>> = paver
            .controls(leaf)
            .iter()
            .map(|&ui| self.grid.point(ui as usize).to_vec())
            .collect();
        if controls.is_empty() {
            return Err(Error::OutOfWinningSet { q, x: x.to_vec() });
        }
        let labels = self.spec.labels_at(x);
        let mask = self.dba.mask_of(labels.iter().map(String::as_str))?;
        let q_next = self
            .dba
            .transition(q, mask)
            .ok_or_else(|| Error::UndefinedTransition {
                state: q,
                label: self.dba.mask_label(mask),
            })?;
        Ok((controls, q_next))
    }

    /// Closed-loop run from `x0` for `steps` steps, starting at the
    /// automaton's initial state. Control choices among the valid set and
    /// random disturbances are drawn from a generator seeded with
    /// `rng_seed`, so repeated calls produce identical trajectories.
    pub fn simulate(
        &self,
        x0: &[f64],
        steps: usize,
        mode: DisturbanceMode,
    ) -> Result<Trajectory, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let mut traj = Trajectory::default();
        let mut x = x0.to_vec();
        let mut q = self.dba.initial;
        // Fail fast when the start state is not winning.
        self.step(q, &x)?;
        traj.states.push(x.clone());
        traj.automaton_states.push(q);
        traj.labels.push(self.spec.labels_at(&x));
        for _ in 0..steps {
            let (controls, q_next) = match self.step(q, &x) {
                Ok(v) => v,
                Err(Error::OutOfWinningSet { .. }) => {
                    traj.left_winning_set = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let u = controls[rng.gen_range(0..controls.len())].clone();
            let nominal = self.spec.step(&x, &u);
            let d = self.disturbance(&nominal, q_next, mode, &mut rng);
            let mut x_next: Vec<f64> = nominal.iter().zip(&d).map(|(v, dv)| v + dv).collect();
            self.spec.wrap_point(&mut x_next);
            traj.controls.push(u);
            traj.disturbances.push(d);
            x = x_next;
            q = q_next;
            traj.states.push(x.clone());
            traj.automaton_states.push(q);
            traj.labels.push(self.spec.labels_at(&x));
        }
        Ok(traj)
    }

    fn disturbance(
        &self,
        nominal: &[f64],
        q_next: usize,
        mode: DisturbanceMode,
        rng: &mut ChaCha8Rng,
    ) -> Vec<f64> {
        let n = nominal.len();
        let delta = self.spec.delta;
        match mode {
            DisturbanceMode::None => vec![0.0; n],
            DisturbanceMode::Random => (0..n).map(|_| rng.gen_range(-delta..=delta)).collect(),
            DisturbanceMode::WorstSample => {
                if delta == 0.0 {
                    return vec![0.0; n];
                }
                let paver = match self.position(q_next) {
                    Ok(p) => &self.vector.pavers[p],
                    Err(_) => return vec![0.0; n],
                };
                let mut best: Option<(f64, Vec<f64>)> = None;
                for corner in 0..(1usize << n) {
                    let d: Vec<f64> = (0..n)
                        .map(|k| if corner & (1 << k) != 0 { delta } else { -delta })
                        .collect();
                    let x: Vec<f64> = nominal.iter().zip(&d).map(|(v, dv)| v + dv).collect();
                    let margin = successor_margin(paver, &x);
                    if best.as_ref().map(|(m, _)| margin < *m).unwrap_or(true) {
                        best = Some((margin, d));
                    }
                }
                best.map(|(_, d)| d).unwrap_or_else(|| vec![0.0; n])
            }
        }
    }
}

/// Adversary heuristic: distance from the successor to the boundary of its
/// winning leaf, negative when the successor is not winning.
fn successor_margin(paver: &Paver, x: &[f64]) -> f64 {
    match paver.leaf_of_point(x) {
        Some(id) if paver.tag(id) == Tag::Winning => {
            let b = paver.leaf_box(id);
            (0..b.dim())
                .map(|k| (x[k] - b.lo()[k]).min(b.hi()[k] - x[k]))
                .fold(f64::INFINITY, f64::min)
        }
        _ => -1.0,
    }
}

/// Count visits to accepting automaton states along the run and compare
/// with the threshold; a run that left the winning set fails regardless.
pub fn check_buchi(traj: &Trajectory, accepting: &BTreeSet<usize>, min_visits: usize) -> bool {
    if traj.left_winning_set {
        return false;
    }
    let visits = traj
        .automaton_states
        .iter()
        .filter(|q| accepting.contains(q))
        .count();
    visits >= min_visits
}

/// Trajectory CSV: `t, x_1..x_n, u_1..u_m, q, label`. The final row has no
/// control columns (empty fields).
pub fn export_trajectory_csv(traj: &Trajectory, out: &mut dyn Write) -> std::io::Result<()> {
    let n = traj.states.first().map(Vec::len).unwrap_or(0);
    let m = traj.controls.first().map(Vec::len).unwrap_or(0);
    write!(out, "t")?;
    for k in 0..n {
        write!(out, ", x_{}", k + 1)?;
    }
    for k in 0..m {
        write!(out, ", u_{}", k + 1)?;
    }
    writeln!(out, ", q, label")?;
    for t in 0..traj.states.len() {
        write!(out, "{t}")?;
        for v in &traj.states[t] {
            write!(out, ", {v}")?;
        }
        for k in 0..m {
            match traj.controls.get(t) {
                Some(u) => write!(out, ", {}", u[k])?,
                None => write!(out, ", ")?,
            }
        }
        writeln!(
            out,
            ", {}, {}",
            traj.automaton_states[t],
            traj.labels[t].join(";")
        )?;
    }
    Ok(())
}

// Container layout: magic, version byte, little-endian payload, then the
// SHA-256 of the payload. Strings are u32-length-prefixed UTF-8; box and
// float arrays are raw f64 bits.

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Self {
        Self { buf: Vec::new() }
    }

    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    fn boxx(&mut self, b: &IntervalBox) {
        self.u32(b.dim() as u32);
        for k in 0..b.dim() {
            self.f64(b.lo()[k]);
            self.f64(b.hi()[k]);
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Corrupt("unexpected end of container".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, Error> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, Error> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, Error> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, Error> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Corrupt("invalid string encoding".into()))
    }

    fn boxx(&mut self) -> Result<IntervalBox, Error> {
        let d = self.u32()? as usize;
        if d == 0 || d > 64 {
            return Err(Error::Corrupt("implausible box dimension".into()));
        }
        let mut lo = Vec::with_capacity(d);
        let mut hi = Vec::with_capacity(d);
        for _ in 0..d {
            lo.push(self.f64()?);
            hi.push(self.f64()?);
        }
        IntervalBox::new(lo, hi).map_err(|e| Error::Corrupt(format!("invalid box: {e}")))
    }
}

fn write_dynamics(w: &mut Writer, cfg: &DynamicsConfig) {
    match cfg {
        DynamicsConfig::ScalarAffine { center } => {
            w.u8(0);
            w.f64(*center);
        }
        DynamicsConfig::Vehicle { tau } => {
            w.u8(1);
            w.f64(*tau);
        }
        DynamicsConfig::DoubleIntegrator { tau } => {
            w.u8(2);
            w.f64(*tau);
        }
        DynamicsConfig::Polynomial {
            n_states,
            n_controls,
            outputs,
        } => {
            w.u8(3);
            w.u32(*n_states as u32);
            w.u32(*n_controls as u32);
            w.u32(outputs.len() as u32);
            for p in outputs {
                w.u32(p.terms.len() as u32);
                for t in &p.terms {
                    w.f64(t.coeff);
                    for &e in &t.state_powers {
                        w.u32(e);
                    }
                    for &e in &t.control_powers {
                        w.u32(e);
                    }
                }
            }
        }
    }
}

fn read_dynamics(r: &mut Reader<'_>) -> Result<DynamicsConfig, Error> {
    match r.u8()? {
        0 => Ok(DynamicsConfig::ScalarAffine { center: r.f64()? }),
        1 => Ok(DynamicsConfig::Vehicle { tau: r.f64()? }),
        2 => Ok(DynamicsConfig::DoubleIntegrator { tau: r.f64()? }),
        3 => {
            let n_states = r.u32()? as usize;
            let n_controls = r.u32()? as usize;
            let n_out = r.u32()? as usize;
            if n_states > 64 || n_controls > 64 || n_out > 64 {
                return Err(Error::Corrupt("implausible polynomial arity".into()));
            }
            let mut outputs = Vec::with_capacity(n_out);
            for _ in 0..n_out {
                let n_terms = r.u32()? as usize;
                let mut terms = Vec::with_capacity(n_terms);
                for _ in 0..n_terms {
                    let coeff = r.f64()?;
                    let mut state_powers = Vec::with_capacity(n_states);
                    for _ in 0..n_states {
                        state_powers.push(r.u32()?);
                    }
                    let mut control_powers = Vec::with_capacity(n_controls);
                    for _ in 0..n_controls {
                        control_powers.push(r.u32()?);
                    }
                    terms.push(Monomial {
                        coeff,
                        state_powers,
                        control_powers,
                    });
                }
                outputs.push(Polynomial { terms });
            }
            Ok(DynamicsConfig::Polynomial {
                n_states,
                n_controls,
                outputs,
            })
        }
        t => Err(Error::Corrupt(format!("unknown dynamics tag {t}"))),
    }
}

/// Serialize the controller to the container format.
pub fn save(ctl: &Controller, out: &mut dyn Write) -> Result<(), Error> {
    let mut w = Writer::new();

    // Automaton: guards as formula text, reparsed on load.
    w.u32(ctl.dba.aps.len() as u32);
    for ap in &ctl.dba.aps {
        w.str(ap);
    }
    w.u32(ctl.dba.disjoint.len() as u32);
    for ap in &ctl.dba.disjoint {
        w.str(ap);
    }
    w.u32(ctl.dba.n_states as u32);
    w.u32(ctl.dba.initial as u32);
    w.u32(ctl.dba.accepting.len() as u32);
    for &q in &ctl.dba.accepting {
        w.u32(q as u32);
    }
    for row in &ctl.dba.edges {
        w.u32(row.len() as u32);
        for (g, to) in row {
            w.str(&g.to_string());
            w.u32(*to as u32);
        }
    }

    // System.
    w.boxx(&ctl.spec.state_space);
    w.boxx(&ctl.spec.control_space);
    w.f64(ctl.spec.delta);
    w.f64(ctl.spec.rho);
    write_dynamics(&mut w, &ctl.spec.config);
    w.u32(ctl.spec.ap_regions.len() as u32);
    for (ap, region) in &ctl.spec.ap_regions {
        w.str(ap);
        w.u32(region.boxes().len() as u32);
        for b in region.boxes() {
            w.boxx(b);
        }
    }

    // Control grid, stored explicitly to preserve exact floats.
    w.f64(ctl.grid.mu);
    w.u32(ctl.grid.len() as u32);
    for p in ctl.grid.points() {
        for &v in p {
            w.f64(v);
        }
    }

    // Winning vector.
    w.u32(ctl.vector.order.len() as u32);
    for &s in &ctl.vector.order {
        w.u32(s as u32);
    }
    for paver in &ctl.vector.pavers {
        let raw = paver.raw_nodes();
        w.u32(raw.len() as u32);
        for node in raw {
            w.boxx(node.bx);
            match node.children {
                Some((a, b)) => {
                    w.u8(1);
                    w.u32(a);
                    w.u32(b);
                }
                None => w.u8(0),
            }
            w.u8(match node.tag {
                Tag::Winning => 0,
                Tag::Losing => 1,
                Tag::Undetermined => 2,
            });
            w.u16(node.label);
            w.u32(node.controls.len() as u32);
            for &u in node.controls {
                w.u16(u);
            }
        }
    }

    w.u64(ctl.rng_seed);

    let digest = Sha256::digest(&w.buf);
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION])?;
    out.write_all(&w.buf)?;
    out.write_all(&digest)?;
    Ok(())
}

/// Load a controller container, verifying magic, version, and checksum.
pub fn load(input: &mut dyn Read) -> Result<Controller, Error> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    if data.len() < MAGIC.len() + 1 + 32 {
        return Err(Error::Corrupt("container too short".into()));
    }
    if &data[..4] != MAGIC {
        return Err(Error::Corrupt("not a controller container".into()));
    }
    let version = data[4];
    if version != VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: VERSION,
        });
    }
    let payload = &data[5..data.len() - 32];
    let digest = Sha256::digest(payload);
    if digest.as_slice() != &data[data.len() - 32..] {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }
    let mut r = Reader {
        buf: payload,
        pos: 0,
    };

    let n_aps = r.u32()? as usize;
    if n_aps > crate::automaton::MAX_APS {
        return Err(Error::Corrupt("too many propositions".into()));
    }
    let mut aps = Vec::with_capacity(n_aps);
    for _ in 0..n_aps {
        aps.push(r.str()?);
    }
    let n_disjoint = r.u32()? as usize;
    let mut disjoint = Vec::with_capacity(n_disjoint.min(n_aps + 1));
    for _ in 0..n_disjoint {
        disjoint.push(r.str()?);
    }
    let n_states = r.u32()? as usize;
    if n_states == 0 || n_states > 100_000 {
        return Err(Error::Corrupt("implausible state count".into()));
    }
    let initial = r.u32()? as usize;
    let n_acc = r.u32()? as usize;
    let mut accepting = BTreeSet::new();
    for _ in 0..n_acc {
        accepting.insert(r.u32()? as usize);
    }
    let mut edges = Vec::with_capacity(n_states);
    for _ in 0..n_states {
        let n_edges = r.u32()? as usize;
        let mut row = Vec::with_capacity(n_edges.min(1024));
        for _ in 0..n_edges {
            let text = r.str()?;
            let guard: PropFormula = parse_formula(&text, 0, 0)
                .map_err(|e| Error::Corrupt(format!("bad guard `{text}`: {e}")))?;
            let to = r.u32()? as usize;
            if to >= n_states {
                return Err(Error::Corrupt("edge target out of range".into()));
            }
            row.push((guard, to));
        }
        edges.push(row);
    }
    if initial >= n_states {
        return Err(Error::Corrupt("initial state out of range".into()));
    }
    let dba = Dba {
        aps,
        disjoint,
        n_states,
        initial,
        accepting,
        edges,
    };

    let state_space = r.boxx()?;
    let control_space = r.boxx()?;
    let delta = r.f64()?;
    let rho = r.f64()?;
    let config = read_dynamics(&mut r)?;
    let n_regions = r.u32()? as usize;
    let mut ap_regions = BTreeMap::new();
    for _ in 0..n_regions.min(1 << 16) {
        let ap = r.str()?;
        let n_boxes = r.u32()? as usize;
        let mut boxes = Vec::with_capacity(n_boxes.min(1 << 16));
        for _ in 0..n_boxes {
            boxes.push(r.boxx()?);
        }
        ap_regions.insert(
            ap,
            BoxSet::new(boxes).map_err(|e| Error::Corrupt(format!("bad region: {e}")))?,
        );
    }
    let spec = SystemSpec::new(state_space, control_space, delta, rho, config, ap_regions)
        .map_err(|e| Error::Corrupt(format!("inconsistent system: {e}")))?;

    let mu = r.f64()?;
    let n_points = r.u32()? as usize;
    let m = spec.control_space.dim();
    let mut points = Vec::with_capacity(n_points.min(1 << 20));
    for _ in 0..n_points {
        let mut p = Vec::with_capacity(m);
        for _ in 0..m {
            p.push(r.f64()?);
        }
        points.push(p);
    }
    let grid = ControlGrid::from_raw(mu, points);

    let n_pavers = r.u32()? as usize;
    if n_pavers != n_states {
        return Err(Error::Corrupt("paver count does not match states".into()));
    }
    let mut order = Vec::with_capacity(n_pavers);
    for _ in 0..n_pavers {
        let s = r.u32()? as usize;
        if s >= n_states {
            return Err(Error::Corrupt("order entry out of range".into()));
        }
        order.push(s);
    }
    let mut pavers = Vec::with_capacity(n_pavers);
    for _ in 0..n_pavers {
        let n_nodes = r.u32()? as usize;
        let mut raw = Vec::with_capacity(n_nodes.min(1 << 22));
        for _ in 0..n_nodes {
            let bx = r.boxx()?;
            let children = match r.u8()? {
                0 => None,
                1 => Some((r.u32()?, r.u32()?)),
                t => return Err(Error::Corrupt(format!("unknown node kind {t}"))),
            };
            let tag = match r.u8()? {
                0 => Tag::Winning,
                1 => Tag::Losing,
                2 => Tag::Undetermined,
                t => return Err(Error::Corrupt(format!("unknown tag {t}"))),
            };
            let label = r.u16()?;
            let n_controls = r.u32()? as usize;
            let mut controls = Vec::with_capacity(n_controls.min(1 << 16));
            for _ in 0..n_controls {
                let u = r.u16()?;
                if (u as usize) >= grid.len() {
                    return Err(Error::Corrupt("control index out of range".into()));
                }
                controls.push(u);
            }
            raw.push((bx, children, tag, label, controls));
        }
        pavers.push(Paver::from_raw(dba.aps.clone(), raw)?);
    }
    let rng_seed = r.u64()?;
    if r.pos != payload.len() {
        return Err(Error::Corrupt("trailing bytes in container".into()));
    }

    Ok(Controller {
        dba,
        vector: WinningVector { order, pavers },
        grid,
        spec,
        rng_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_controller() -> Controller {
        // One automaton state accepting everything; the winning set is the
        // left half of the space with both controls valid.
        let spec = SystemSpec::new(
            IntervalBox::from_pairs(&[(0.0, 2.0)]),
            IntervalBox::from_pairs(&[(-0.9, -0.8)]),
            0.0,
            1.0,
            DynamicsConfig::ScalarAffine { center: 1.0 },
            BTreeMap::new(),
        )
        .unwrap();
        let dba = Dba {
            aps: vec![],
            disjoint: vec![],
            n_states: 1,
            initial: 0,
            accepting: [0].into(),
            edges: vec![vec![(PropFormula::True, 0)]],
        };
        let grid = crate::system::sample_controls(&spec, 0.05).unwrap();
        let mut paver = Paver::new(&spec, &[]).unwrap();
        let root = paver.leaf_ids()[0];
        let (a, _b) = paver.bisect_leaf(root);
        paver.mark_winning(a, vec![0, 1, 2], 1);
        Controller {
            dba,
            vector: WinningVector {
                order: vec![0],
                pavers: vec![paver],
            },
            grid,
            spec,
            rng_seed: 7,
        }
    }

    /// Both halves winning, so runs never leave the set.
    fn invariant_controller() -> Controller {
        let mut ctl = tiny_controller();
        let paver = &mut ctl.vector.pavers[0];
        let open = paver
            .leaf_ids()
            .into_iter()
            .find(|&id| paver.tag(id) != Tag::Winning)
            .unwrap();
        paver.mark_winning(open, vec![0, 1, 2], 1);
        ctl
    }

    #[test]
    fn container_round_trips() {
        let ctl = tiny_controller();
        let mut buf = Vec::new();
        save(&ctl, &mut buf).unwrap();
        let back = load(&mut buf.as_slice()).unwrap();
        assert_eq!(back.dba, ctl.dba);
        assert_eq!(back.grid, ctl.grid);
        assert_eq!(back.rng_seed, ctl.rng_seed);
        assert_eq!(back.vector.order, ctl.vector.order);
        assert_eq!(
            back.vector.pavers[0].winning_boxes(),
            ctl.vector.pavers[0].winning_boxes()
        );
        let mut again = Vec::new();
        save(&back, &mut again).unwrap();
        assert_eq!(buf, again, "save is byte-stable across a round trip");
    }

    #[test]
    fn corrupt_containers_are_rejected() {
        let ctl = tiny_controller();
        let mut buf = Vec::new();
        save(&ctl, &mut buf).unwrap();

        let mut flipped = buf.clone();
        let mid = flipped.len() / 2;
        flipped[mid] ^= 0xff;
        assert!(matches!(
            load(&mut flipped.as_slice()),
            Err(Error::Corrupt(_))
        ));

        let truncated = &buf[..buf.len() - 10];
        assert!(matches!(
            load(&mut &truncated[..]),
            Err(Error::Corrupt(_))
        ));

        let mut wrong_version = buf.clone();
        wrong_version[4] = 99;
        assert!(matches!(
            load(&mut wrong_version.as_slice()),
            Err(Error::VersionMismatch { found: 99, .. })
        ));

        assert!(matches!(
            load(&mut &b"not a container"[..]),
            Err(Error::Corrupt(_))
        ));
    }

    #[test]
    fn step_errors_outside_the_winning_set() {
        let ctl = tiny_controller();
        // Left half is winning.
        let (controls, q) = ctl.step(0, &[0.5]).unwrap();
        assert_eq!(q, 0);
        assert_eq!(controls.len(), 3);
        assert!(matches!(
            ctl.step(0, &[1.5]),
            Err(Error::OutOfWinningSet { .. })
        ));
        assert!(matches!(
            ctl.step(0, &[2.5]),
            Err(Error::OutOfWinningSet { .. })
        ));
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let ctl = invariant_controller();
        let a = ctl.simulate(&[0.5], 20, DisturbanceMode::None).unwrap();
        let b = ctl.simulate(&[0.5], 20, DisturbanceMode::None).unwrap();
        assert!(!a.left_winning_set);
        assert_eq!(a.states.len(), 21);
        assert_eq!(a.states, b.states);
        assert_eq!(a.controls, b.controls);

        let mut other = ctl.clone();
        other.rng_seed = 8;
        let c = other.simulate(&[0.5], 20, DisturbanceMode::None).unwrap();
        assert_ne!(a.controls, c.controls, "different seeds pick differently");
    }

    #[test]
    fn runs_stop_at_the_winning_set_boundary() {
        let ctl = tiny_controller();
        // Every control from the left half lands in the right half, which
        // is not winning; the run flags and stops after one step.
        let traj = ctl.simulate(&[0.5], 20, DisturbanceMode::None).unwrap();
        assert!(traj.left_winning_set);
        assert_eq!(traj.states.len(), 2);
        assert_eq!(traj.controls.len(), 1);
        assert!(!check_buchi(&traj, &ctl.dba.accepting, 1));
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let ctl = invariant_controller();
        let traj = ctl.simulate(&[0.5], 3, DisturbanceMode::None).unwrap();
        let mut out = Vec::new();
        export_trajectory_csv(&traj, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t, x_1, u_1, q, label");
        assert!(lines.len() >= 2);
        assert!(lines[1].starts_with("0, 0.5, "));
    }
}
