//! Scenario assembly: grid, spectrum, localized orbitals, probe state, and
//! propagators for the quench protocol (prepare level at zero tilt, switch
//! the tilt on at t = 0).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fock::{enumerate_configs, FockBasis, StateKind};
use crate::grid::{
    build_grid, eval_potential, localized_orbitals, lowest_eigenstates, Grid, PotentialParams,
    RealFunction,
};
use crate::mctdh::{EvolutionConfig, ManyBodyState, Propagator};
use crate::tmi::{bose_hubbard_params, offset_slope, BoseHubbardParams};

/// Complete description of one experiment leg.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Trap parameters; `p4` is the post-quench tilt.
    pub trap: PotentialParams,
    pub g: f64,
    pub n_particles: usize,
    pub n_modes: usize,
    pub state_kind: StateKind,
    pub half_width: f64,
    pub n_points: usize,
    pub evolution: EvolutionConfig,
}

impl Scenario {
    /// The regime the whole study runs in: gN = 0.1 and p4 = 0.1 with ten
    /// particles in the 50-high double well.
    pub fn paper_default() -> Self {
        Self {
            trap: PotentialParams {
                p1: 0.5,
                p2: 50.0,
                p3: 1.0,
                p4: 0.1,
            },
            g: 0.01,
            n_particles: 10,
            n_modes: 2,
            state_kind: StateKind::Coherent,
            half_width: 8.0,
            n_points: 257,
            evolution: EvolutionConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.trap.validate()?;
        self.evolution.validate()?;
        if !self.g.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite g = {}", self.g)));
        }
        if self.n_particles < 1 {
            return Err(Error::InvalidInput("need at least one particle".into()));
        }
        Ok(())
    }

    /// Same scenario with a different post-quench tilt.
    pub fn with_tilt(&self, p4: f64) -> Self {
        let mut s = self.clone();
        s.trap = s.trap.with_tilt(p4);
        s
    }

    /// Builds grid, spectrum, localized orbitals, and the probe state.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let grid = build_grid(self.half_width, self.n_points)?;
        let flat_params = self.trap.with_tilt(0.0);
        let flat_potential = eval_potential(&flat_params, &grid)?;
        let eigenpairs = lowest_eigenstates(&flat_potential, self.n_modes)?;
        let mut orbitals = Vec::with_capacity(self.n_modes);
        for doublet in eigenpairs.chunks(2) {
            let (l, r) = localized_orbitals(&doublet[0].1, &doublet[1].1)?;
            orbitals.push(l.to_complex());
            orbitals.push(r.to_complex());
        }
        let basis = enumerate_configs(self.n_particles, self.n_modes)?;
        let coefficients = self.state_kind.build(&basis);
        let initial = ManyBodyState::new(Arc::clone(&basis), coefficients, orbitals)?;
        Ok(Prepared {
            grid,
            basis,
            flat_potential,
            eigenpairs,
            initial,
        })
    }
}

/// Prepared ingredients shared by every leg of a scan.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: Arc<Grid>,
    pub basis: Arc<FockBasis>,
    /// Preparation potential (zero tilt).
    pub flat_potential: RealFunction,
    /// Lowest eigenpairs of the preparation potential (one per mode).
    pub eigenpairs: Vec<(f64, RealFunction)>,
    /// Probe state over the localized orbitals at t = 0.
    pub initial: ManyBodyState,
}

impl Prepared {
    /// Propagator for the quenched potential with tilt `p4`.
    pub fn propagator(&self, scenario: &Scenario, p4: f64) -> Result<Propagator> {
        let potential = eval_potential(&scenario.trap.with_tilt(p4), &self.grid)?;
        Propagator::new(potential, scenario.g, scenario.evolution)
    }

    /// Bose-Hubbard parameters of the initial orbitals under tilt `p4`.
    pub fn initial_bose_hubbard(&self, scenario: &Scenario, p4: f64) -> Result<BoseHubbardParams> {
        let potential = eval_potential(&scenario.trap.with_tilt(p4), &self.grid)?;
        bose_hubbard_params(
            &self.initial.orbitals[0],
            &self.initial.orbitals[1],
            &potential,
            scenario.g,
            scenario.n_particles,
        )
    }

    /// `d eps / d p4` of the initial localized pair.
    pub fn offset_slope(&self) -> f64 {
        offset_slope(&self.initial.orbitals[0], &self.initial.orbitals[1])
    }
}
