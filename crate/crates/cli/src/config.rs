//! TOML run configuration. Every numeric synthesis parameter (eps, mu,
//! delta, rho) must be spelled out; there are no silent defaults because
//! the reported robustness margin depends on all four.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use winset::interval::{BoxSet, IntervalBox};
use winset::system::{DynamicsConfig, Monomial, Polynomial, SystemSpec};
use winset::Error;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub run: RunSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    /// Registry name: scalar_affine, vehicle, double_integrator, polynomial.
    pub dynamics: String,
    /// One [lo, hi] pair per state dimension.
    pub state_space: Vec<[f64; 2]>,
    /// One [lo, hi] pair per control dimension.
    pub control_space: Vec<[f64; 2]>,
    pub delta: f64,
    pub rho: f64,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// Region of each atomic proposition: a list of boxes, each box a list
    /// of [lo, hi] pairs.
    #[serde(default)]
    pub regions: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
    /// Required when dynamics = "polynomial", rejected otherwise.
    pub polynomial: Option<PolynomialSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSection {
    pub outputs: Vec<OutputSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub terms: Vec<TermSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSection {
    pub coeff: f64,
    #[serde(default)]
    pub state_powers: Vec<u32>,
    #[serde(default)]
    pub control_powers: Vec<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Automaton file, relative paths resolved against the config file.
    pub automaton: PathBuf,
    pub eps: f64,
    pub mu: f64,
    #[serde(default = "default_preprocess")]
    pub preprocess: bool,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_preprocess() -> bool {
    true
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::InvalidParameter {
            name: "config",
            reason: e.to_string(),
        })
    }

    /// Resolve the automaton path against the directory holding the config.
    pub fn automaton_path(&self, config_path: &Path) -> PathBuf {
        if self.run.automaton.is_absolute() {
            self.run.automaton.clone()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(&self.run.automaton)
        }
    }

    pub fn build_spec(&self) -> Result<SystemSpec, Error> {
        let sys = &self.system;
        let state_space = box_from_rows(&sys.state_space)?;
        let control_space = box_from_rows(&sys.control_space)?;

        let outputs = match (&sys.polynomial, sys.dynamics.as_str()) {
            (Some(p), "polynomial") => Some((
                state_space.dim(),
                control_space.dim(),
                p.outputs
                    .iter()
                    .map(|o| Polynomial {
                        terms: o
                            .terms
                            .iter()
                            .map(|t| Monomial {
                                coeff: t.coeff,
                                state_powers: t.state_powers.clone(),
                                control_powers: t.control_powers.clone(),
                            })
                            .collect(),
                    })
                    .collect(),
            )),
            (Some(_), other) => {
                return Err(Error::InvalidParameter {
                    name: "system.polynomial",
                    reason: format!("not applicable to dynamics `{other}`"),
                })
            }
            (None, _) => None,
        };
        let config = DynamicsConfig::by_name(&sys.dynamics, &sys.params, outputs)?;

        let mut regions = BTreeMap::new();
        for (ap, boxes) in &sys.regions {
            let parsed: Result<Vec<IntervalBox>, Error> =
                boxes.iter().map(|rows| box_from_rows(rows)).collect();
            regions.insert(ap.clone(), BoxSet::new(parsed?)?);
        }

        SystemSpec::new(
            state_space,
            control_space,
            sys.delta,
            sys.rho,
            config,
            regions,
        )
    }
}

fn box_from_rows(rows: &[[f64; 2]]) -> Result<IntervalBox, Error> {
    IntervalBox::new(
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
    )
}
