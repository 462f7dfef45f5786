//! System model: state and control spaces, disturbance bound, labeled
//! regions, control-grid sampling, and one-step inclusion functions for the
//! built-in dynamics families.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::Error;
use crate::interval::{BoxSet, IntervalBox};

/// Relative tolerance when snapping control-lattice endpoints to integers,
/// so that e.g. -0.9 / 0.05 counts as the lattice point -18.
const LATTICE_SNAP: f64 = 1e-9;

const MAX_GRID_POINTS: usize = u16::MAX as usize;

/// One-dimensional closed interval used internally by the inclusion
/// functions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Ival {
    pub lo: f64,
    pub hi: f64,
}

impl Ival {
    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.lo + o.lo, self.hi + o.hi)
    }

    pub fn add_scalar(self, c: f64) -> Self {
        Self::new(self.lo + c, self.hi + c)
    }

    pub fn mul(self, o: Self) -> Self {
        let c = [
            self.lo * o.lo,
            self.lo * o.hi,
            self.hi * o.lo,
            self.hi * o.hi,
        ];
        Self::new(
            c.iter().copied().fold(f64::INFINITY, f64::min),
            c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        )
    }

    pub fn scale(self, c: f64) -> Self {
        if c >= 0.0 {
            Self::new(c * self.lo, c * self.hi)
        } else {
            Self::new(c * self.hi, c * self.lo)
        }
    }

    /// Exact interval power.
    pub fn pow(self, k: u32) -> Self {
        match k {
            0 => Self::point(1.0),
            1 => self,
            _ => {
                let a = self.lo.powi(k as i32);
                let b = self.hi.powi(k as i32);
                if k % 2 == 1 {
                    Self::new(a, b)
                } else if self.lo <= 0.0 && 0.0 <= self.hi {
                    Self::new(0.0, a.max(b))
                } else {
                    Self::new(a.min(b), a.max(b))
                }
            }
        }
    }

    /// Range of sin over the interval.
    pub fn sin(self) -> Self {
        self.add_scalar(-PI / 2.0).cos()
    }

    /// Range of cos over the interval.
    pub fn cos(self) -> Self {
        if self.hi - self.lo >= 2.0 * PI {
            return Self::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_shifted_multiple(self.lo, self.hi, 2.0 * PI, 0.0) {
            hi = 1.0;
        }
        if contains_shifted_multiple(self.lo, self.hi, 2.0 * PI, PI) {
            lo = -1.0;
        }
        Self::new(lo, hi)
    }
}

/// Whether some `offset + k * period` (integer k) lies in `[a, b]`.
fn contains_shifted_multiple(a: f64, b: f64, period: f64, offset: f64) -> bool {
    let k = ((a - offset) / period).ceil();
    offset + k * period <= b
}

fn split_box(b: &IntervalBox) -> Vec<Ival> {
    (0..b.dim())
        .map(|k| Ival::new(b.lo()[k], b.hi()[k]))
        .collect()
}

fn join_box(ivs: &[Ival]) -> IntervalBox {
    IntervalBox::new(
        ivs.iter().map(|i| i.lo).collect(),
        ivs.iter().map(|i| i.hi).collect(),
    )
    .expect("inclusion function produced invalid bounds")
}

/// One monomial `coeff * prod(x_k^state_powers[k]) * prod(u_k^control_powers[k])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub state_powers: Vec<u32>,
    pub control_powers: Vec<u32>,
}

/// One output coordinate of a polynomial map.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

/// Serializable description of a one-step map. `build` instantiates the
/// matching inclusion function.
#[derive(Clone, Debug, PartialEq)]
pub enum DynamicsConfig {
    /// x+ = u (x - center) + center; 1 state, 1 control.
    ScalarAffine { center: f64 },
    /// Kinematic unicycle with rear-axle steering sampled at `tau`;
    /// states (x, y, theta), controls (steering angle, velocity).
    Vehicle { tau: f64 },
    /// Planar double integrator sampled at `tau`; states (p1, p2, v1, v2),
    /// controls (a1, a2).
    DoubleIntegrator { tau: f64 },
    /// Componentwise polynomial in states and controls.
    Polynomial {
        n_states: usize,
        n_controls: usize,
        outputs: Vec<Polynomial>,
    },
}

impl DynamicsConfig {
    /// Look up a dynamics family by registry name. `params` supplies scalar
    /// parameters; polynomial outputs come through `outputs`.
    pub fn by_name(
        name: &str,
        params: &BTreeMap<String, f64>,
        outputs: Option<(usize, usize, Vec<Polynomial>)>,
    ) -> Result<Self, Error> {
        let get = |key: &str, default: Option<f64>| -> Result<f64, Error> {
            params.get(key).copied().or(default).ok_or_else(|| {
                Error::InvalidParameter {
                    name: "params",
                    reason: format!("dynamics `{name}` requires parameter `{key}`"),
                }
            })
        };
        match name {
            "scalar_affine" => Ok(Self::ScalarAffine {
                center: get("center", Some(1.0))?,
            }),
            "vehicle" => Ok(Self::Vehicle {
                tau: get("tau", None)?,
            }),
            "double_integrator" => Ok(Self::DoubleIntegrator {
                tau: get("tau", Some(0.1))?,
            }),
            "polynomial" => {
                let (n_states, n_controls, outputs) =
                    outputs.ok_or_else(|| Error::InvalidParameter {
                        name: "outputs",
                        reason: "polynomial dynamics require explicit outputs".into(),
                    })?;
                Ok(Self::Polynomial {
                    n_states,
                    n_controls,
                    outputs,
                })
            }
            _ => Err(Error::UnknownDynamics(name.into())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ScalarAffine { .. } => "scalar_affine",
            Self::Vehicle { .. } => "vehicle",
            Self::DoubleIntegrator { .. } => "double_integrator",
            Self::Polynomial { .. } => "polynomial",
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            Self::ScalarAffine { .. } => 1,
            Self::Vehicle { .. } => 3,
            Self::DoubleIntegrator { .. } => 4,
            Self::Polynomial { n_states, .. } => *n_states,
        }
    }

    pub fn control_dim(&self) -> usize {
        match self {
            Self::ScalarAffine { .. } => 1,
            Self::Vehicle { .. } => 2,
            Self::DoubleIntegrator { .. } => 2,
            Self::Polynomial { n_controls, .. } => *n_controls,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match self {
            Self::Vehicle { tau } | Self::DoubleIntegrator { tau } if *tau <= 0.0 => {
                Err(Error::InvalidParameter {
                    name: "tau",
                    reason: "sampling period must be positive".into(),
                })
            }
            Self::Polynomial {
                n_states,
                n_controls,
                outputs,
            } => {
                if outputs.len() != *n_states {
                    return Err(Error::InvalidParameter {
                        name: "outputs",
                        reason: format!(
                            "expected {n_states} output polynomials, got {}",
                            outputs.len()
                        ),
                    });
                }
                for p in outputs {
                    for t in &p.terms {
                        if t.state_powers.len() != *n_states
                            || t.control_powers.len() != *n_controls
                        {
                            return Err(Error::InvalidParameter {
                                name: "outputs",
                                reason: "monomial power vector length mismatch".into(),
                            });
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Nominal point image f(x, u), no disturbance.
    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        match self {
            Self::ScalarAffine { center } => vec![u[0] * (x[0] - center) + center],
            Self::Vehicle { tau } => {
                let (phi, v) = (u[0], u[1]);
                let t = phi.tan();
                if t.abs() < 1e-9 {
                    vec![
                        x[0] + v * tau * x[2].cos(),
                        x[1] + v * tau * x[2].sin(),
                        x[2],
                    ]
                } else {
                    let gamma = (t / 2.0).atan();
                    let omega = v * t;
                    let psi = gamma + omega * tau / 2.0;
                    let kk = 2.0 / t * (omega * tau / 2.0).sin() / gamma.cos();
                    vec![
                        x[0] + kk * (x[2] + psi).cos(),
                        x[1] + kk * (x[2] + psi).sin(),
                        x[2] + omega * tau,
                    ]
                }
            }
            Self::DoubleIntegrator { tau } => vec![
                x[0] + tau * x[2] + 0.5 * tau * tau * u[0],
                x[1] + tau * x[3] + 0.5 * tau * tau * u[1],
                x[2] + tau * u[0],
                x[3] + tau * u[1],
            ],
            Self::Polynomial {
                n_states, outputs, ..
            } => {
                let vars: Vec<Ival> = x
                    .iter()
                    .chain(u.iter())
                    .map(|&v| Ival::point(v))
                    .collect();
                outputs
                    .iter()
                    .map(|p| horner_eval(&p.terms_indexed(*n_states), &vars, 0).lo)
                    .collect()
            }
        }
    }

    /// Interval image of a box under constant control, no disturbance.
    /// Sound: contains f(x, u) for every x in the box.
    pub fn image(&self, b: &IntervalBox, u: &[f64]) -> IntervalBox {
        match self {
            Self::ScalarAffine { center } => {
                let t = Ival::new(b.lo()[0], b.hi()[0]).add_scalar(-center);
                join_box(&[t.scale(u[0]).add_scalar(*center)])
            }
            Self::Vehicle { tau } => {
                let [x, y, th] = [0, 1, 2].map(|k| Ival::new(b.lo()[k], b.hi()[k]));
                let (phi, v) = (u[0], u[1]);
                let t = phi.tan();
                if t.abs() < 1e-9 {
                    let dx = th.cos().scale(v * tau);
                    let dy = th.sin().scale(v * tau);
                    join_box(&[x.add(dx), y.add(dy), th])
                } else {
                    let gamma = (t / 2.0).atan();
                    let omega = v * t;
                    let psi = gamma + omega * tau / 2.0;
                    let kk = 2.0 / t * (omega * tau / 2.0).sin() / gamma.cos();
                    let heading = th.add_scalar(psi);
                    join_box(&[
                        x.add(heading.cos().scale(kk)),
                        y.add(heading.sin().scale(kk)),
                        th.add_scalar(omega * tau),
                    ])
                }
            }
            Self::DoubleIntegrator { tau } => {
                let iv = split_box(b);
                join_box(&[
                    iv[0].add(iv[2].scale(*tau)).add_scalar(0.5 * tau * tau * u[0]),
                    iv[1].add(iv[3].scale(*tau)).add_scalar(0.5 * tau * tau * u[1]),
                    iv[2].add_scalar(tau * u[0]),
                    iv[3].add_scalar(tau * u[1]),
                ])
            }
            Self::Polynomial {
                n_states, outputs, ..
            } => {
                let mut vars = split_box(b);
                vars.extend(u.iter().map(|&v| Ival::point(v)));
                let imgs: Vec<Ival> = outputs
                    .iter()
                    .map(|p| horner_eval(&p.terms_indexed(*n_states), &vars, 0))
                    .collect();
                join_box(&imgs)
            }
        }
    }
}

impl Polynomial {
    fn terms_indexed(&self, n_states: usize) -> Vec<(f64, Vec<u32>)> {
        self.terms
            .iter()
            .map(|t| {
                let mut powers = t.state_powers.clone();
                powers.extend_from_slice(&t.control_powers);
                debug_assert!(powers.len() >= n_states);
                (t.coeff, powers)
            })
            .collect()
    }
}

/// Horner-form natural interval extension: factor out the current variable,
/// evaluate coefficient polynomials recursively, and combine with exact
/// interval powers for the exponent gaps.
fn horner_eval(terms: &[(f64, Vec<u32>)], vars: &[Ival], var: usize) -> Ival {
    if terms.is_empty() {
        return Ival::point(0.0);
    }
    if var == vars.len() {
        return Ival::point(terms.iter().map(|t| t.0).sum());
    }
    let mut by_power: BTreeMap<u32, Vec<(f64, Vec<u32>)>> = BTreeMap::new();
    for t in terms {
        by_power.entry(t.1[var]).or_default().push(t.clone());
    }
    let mut acc = Ival::point(0.0);
    let mut prev_power = None;
    for (&p, group) in by_power.iter().rev() {
        if let Some(q) = prev_power {
            acc = acc.mul(vars[var].pow(q - p));
        }
        acc = acc.add(horner_eval(group, vars, var + 1));
        prev_power = Some(p);
    }
    if let Some(p) = prev_power {
        if p > 0 {
            acc = acc.mul(vars[var].pow(p));
        }
    }
    acc
}

/// Discrete-time control system over a box state space: dynamics, spaces,
/// additive disturbance bound, Lipschitz-style constant for margin
/// reporting, and labeled regions.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub state_space: IntervalBox,
    pub control_space: IntervalBox,
    /// Componentwise bound on the additive disturbance.
    pub delta: f64,
    /// Growth constant used for the robustness margin rho * (eps + mu).
    pub rho: f64,
    pub config: DynamicsConfig,
    dynamics: Arc<DynamicsConfig>,
    /// Region of each atomic proposition, keyed by name.
    pub ap_regions: BTreeMap<String, BoxSet>,
}

impl SystemSpec {
    pub fn new(
        state_space: IntervalBox,
        control_space: IntervalBox,
        delta: f64,
        rho: f64,
        config: DynamicsConfig,
        ap_regions: BTreeMap<String, BoxSet>,
    ) -> Result<Self, Error> {
        config.validate()?;
        if state_space.dim() != config.state_dim() {
            return Err(Error::DimMismatch {
                expected: config.state_dim(),
                got: state_space.dim(),
            });
        }
        if control_space.dim() != config.control_dim() {
            return Err(Error::DimMismatch {
                expected: config.control_dim(),
                got: control_space.dim(),
            });
        }
        if delta < 0.0 || !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "disturbance bound must be nonnegative".into(),
            });
        }
        if rho <= 0.0 || !rho.is_finite() {
            return Err(Error::InvalidParameter {
                name: "rho",
                reason: "growth constant must be positive".into(),
            });
        }
        for (ap, region) in &ap_regions {
            for b in region.boxes() {
                if b.dim() != state_space.dim() {
                    return Err(Error::DimMismatch {
                        expected: state_space.dim(),
                        got: b.dim(),
                    });
                }
                if !state_space.contains_box(b) {
                    return Err(Error::RegionOutsideSpace { ap: ap.clone() });
                }
            }
        }
        Ok(Self {
            state_space,
            control_space,
            delta,
            rho,
            dynamics: Arc::new(config.clone()),
            config,
            ap_regions,
        })
    }

    /// Dimension living on a circle, if any: the vehicle heading. Values
    /// are kept in the principal window [-pi, pi]; images crossing the seam
    /// re-enter from the other side.
    fn angular_dim(&self) -> Option<usize> {
        match &self.config {
            DynamicsConfig::Vehicle { .. } => Some(2),
            _ => None,
        }
    }

    /// Nominal one-step image of a point, angular dimensions wrapped.
    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut y = self.dynamics.step(x, u);
        if let Some(k) = self.angular_dim() {
            y[k] = wrap_angle(y[k]);
        }
        y
    }

    /// Wrap angular dimensions of a state into their principal window.
    pub fn wrap_point(&self, x: &mut [f64]) {
        if let Some(k) = self.angular_dim() {
            x[k] = wrap_angle(x[k]);
        }
    }

    /// Disturbance-inflated interval image: the nominal inclusion image
    /// grown by delta on every face. Contains every f(x, u) + d with x in
    /// the box and |d|_inf <= delta. Raw chart coordinates, no wrapping.
    pub fn reach_overapprox(&self, b: &IntervalBox, u: &[f64]) -> IntervalBox {
        debug_assert_eq!(b.dim(), self.state_space.dim());
        debug_assert_eq!(u.len(), self.control_space.dim());
        self.dynamics.image(b, u).inflate(self.delta)
    }

    /// Like `reach_overapprox`, but reduced to the principal angular
    /// window. An image crossing the +-pi seam splits into two boxes; the
    /// union of the parts contains every wrapped disturbed successor.
    pub fn reach_overapprox_parts(
        &self,
        b: &IntervalBox,
        u: &[f64],
    ) -> (IntervalBox, Option<IntervalBox>) {
        let img = self.reach_overapprox(b, u);
        let Some(k) = self.angular_dim() else {
            return (img, None);
        };
        let (lo, hi) = (img.lo()[k], img.hi()[k]);
        if -PI <= lo && hi <= PI {
            return (img, None);
        }
        if hi - lo >= 2.0 * PI {
            return (replace_dim(&img, k, -PI, PI), None);
        }
        let shift = 2.0 * PI * ((lo + PI) / (2.0 * PI)).floor();
        let (lo, hi) = (lo - shift, hi - shift);
        if hi <= PI {
            (replace_dim(&img, k, lo, hi), None)
        } else {
            (
                replace_dim(&img, k, lo, PI),
                Some(replace_dim(&img, k, -PI, hi - 2.0 * PI)),
            )
        }
    }

    /// Labels at a point: closed membership in each region.
    pub fn labels_at(&self, x: &[f64]) -> Vec<String> {
        self.ap_regions
            .iter()
            .filter(|(_, r)| r.contains_point(x))
            .map(|(ap, _)| ap.clone())
            .collect()
    }

    /// Label signature of a box: `(uniform, aps)`. Uniform means the box is
    /// entirely inside or entirely outside every region (boundary contact
    /// does not count as being inside). When uniform, `aps` lists exactly
    /// the regions containing the box.
    pub fn label_signature(&self, b: &IntervalBox) -> (bool, Vec<String>) {
        let mut aps = Vec::new();
        for (ap, region) in &self.ap_regions {
            if region.contains(b).unwrap_or(false) {
                aps.push(ap.clone());
            } else if region.interior_intersects(b).unwrap_or(false) {
                return (false, Vec::new());
            }
        }
        (true, aps)
    }
}

/// The control grid `mu Z^m` intersected with the control space, in
/// lexicographic order of the integer lattice vector. A degenerate control
/// dimension contributes the single value `lo`.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlGrid {
    pub mu: f64,
    points: Vec<Vec<f64>>,
}

impl ControlGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub(crate) fn from_raw(mu: f64, points: Vec<Vec<f64>>) -> Self {
        Self { mu, points }
    }
}

/// Principal value of an angle in [-pi, pi]. Exact identity inside the
/// window so non-crossing images are untouched bit for bit.
fn wrap_angle(t: f64) -> f64 {
    if (-PI..=PI).contains(&t) {
        return t;
    }
    (t + PI).rem_euclid(2.0 * PI) - PI
}

fn replace_dim(b: &IntervalBox, k: usize, lo: f64, hi: f64) -> IntervalBox {
    let mut l = b.lo().to_vec();
    let mut h = b.hi().to_vec();
    l[k] = lo;
    h[k] = hi;
    IntervalBox::new(l, h).expect("wrapped side is a valid interval")
}

/// Sample the control space on the lattice `mu Z^m`.
pub fn sample_controls(spec: &SystemSpec, mu: f64) -> Result<ControlGrid, Error> {
    if mu <= 0.0 || !mu.is_finite() {
        return Err(Error::InvalidParameter {
            name: "mu",
            reason: "control granularity must be positive".into(),
        });
    }
    let u = &spec.control_space;
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(u.dim());
    for k in 0..u.dim() {
        let (lo, hi) = (u.lo()[k], u.hi()[k]);
        if lo == hi {
            axes.push(vec![lo]);
            continue;
        }
        let snap_lo = LATTICE_SNAP * (1.0 + (lo / mu).abs());
        let snap_hi = LATTICE_SNAP * (1.0 + (hi / mu).abs());
        let z_min = (lo / mu - snap_lo).ceil() as i64;
        let z_max = (hi / mu + snap_hi).floor() as i64;
        if z_min > z_max {
            return Err(Error::EmptyControlGrid { dim: k, mu, lo, hi });
        }
        axes.push((z_min..=z_max).map(|z| z as f64 * mu).collect());
    }
    let total: usize = axes.iter().map(Vec::len).product();
    if total > MAX_GRID_POINTS {
        return Err(Error::ControlGridTooLarge {
            points: total,
            max: MAX_GRID_POINTS,
        });
    }
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    loop {
        points.push(idx.iter().enumerate().map(|(k, &i)| axes[k][i]).collect());
        let mut k = axes.len();
        loop {
            if k == 0 {
                return Ok(ControlGrid { mu, points });
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}
