//! Scenario configuration: a TOML file with dotted sections, every field
//! optional with paper-regime defaults.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fock::StateKind;
use crate::grid::PotentialParams;
use crate::mctdh::EvolutionConfig;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapSection {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl Default for TrapSection {
    fn default() -> Self {
        Self {
            p1: 0.5,
            p2: 50.0,
            p3: 1.0,
            p4: 0.1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            half_width: 8.0,
            n_points: 257,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub frozen_orbitals: bool,
    pub eps_reg: f64,
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_final: 2.0,
            sample_stride: 100,
            frozen_orbitals: false,
            eps_reg: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherSection {
    pub delta_qfi: f64,
    pub delta_cfi: f64,
    /// Evolution time of the particle-number sweep.
    pub t_star: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl Default for FisherSection {
    fn default() -> Self {
        Self {
            delta_qfi: 1e-4,
            delta_cfi: 1e-3,
            t_star: 1.77,
            n_min: 2,
            n_max: 12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    pub p4_min: f64,
    pub p4_max: f64,
    pub p4_step: f64,
    /// Evolution time of the family rows (the measurement instant).
    pub t_final: f64,
}

impl Default for FamilySection {
    fn default() -> Self {
        Self {
            p4_min: 0.0,
            p4_max: 0.25,
            p4_step: 0.0025,
            t_final: 1.77,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationSection {
    pub nu_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// True tilt for estimator statistics; defaults to trap.p4.
    pub x_true: Option<f64>,
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self {
            nu_list: vec![1, 4, 16, 64, 256],
            trials: 10_000,
            seed: 20260810,
            x_true: None,
        }
    }
}

/// Whole-run configuration; defaults reproduce the paper regime
/// (p1 = 0.5, p2 = 50, p3 = 1, p4 = 0.1, gN = 0.1, N = 10, M = 2).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub trap: TrapSection,
    pub g: f64,
    pub n_particles: usize,
    pub n_modes: usize,
    pub state_kind: String,
    pub grid: GridSection,
    pub evolution: EvolutionSection,
    pub fisher: FisherSection,
    pub family: FamilySection,
    pub estimation: EstimationSection,
    pub output_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            trap: TrapSection::default(),
            g: 0.01,
            n_particles: 10,
            n_modes: 2,
            state_kind: "coherent".into(),
            grid: GridSection::default(),
            evolution: EvolutionSection::default(),
            fisher: FisherSection::default(),
            family: FamilySection::default(),
            estimation: EstimationSection::default(),
            output_dir: "out".into(),
        }
    }
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn state_kind(&self) -> Result<StateKind> {
        StateKind::from_str(&self.state_kind)
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let scenario = Scenario {
            trap: PotentialParams {
                p1: self.trap.p1,
                p2: self.trap.p2,
                p3: self.trap.p3,
                p4: self.trap.p4,
            },
            g: self.g,
            n_particles: self.n_particles,
            n_modes: self.n_modes,
            state_kind: self.state_kind()?,
            half_width: self.grid.half_width,
            n_points: self.grid.n_points,
            evolution: EvolutionConfig {
                dt: self.evolution.dt,
                t_final: self.evolution.t_final,
                sample_stride: self.evolution.sample_stride,
                eps_reg: self.evolution.eps_reg,
                frozen_orbitals: self.evolution.frozen_orbitals,
            },
        };
        scenario
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(scenario)
    }

    /// Candidate tilt grid from the family section.
    pub fn family_grid(&self) -> Result<Vec<f64>> {
        let f = &self.family;
        if !(f.p4_step > 0.0) || f.p4_max <= f.p4_min {
            return Err(Error::Config(format!(
                "family grid requires p4_step > 0 and p4_max > p4_min: {f:?}"
            )));
        }
        let count = ((f.p4_max - f.p4_min) / f.p4_step).round() as usize;
        Ok((0..=count).map(|i| f.p4_min + i as f64 * f.p4_step).collect())
    }

    /// Short hash over the serialized configuration, stamped into every
    /// emitted CSV. The output directory is excluded so the hash names the
    /// scenario, not its location.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = String::new();
        let text = toml::to_string(&canonical).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
