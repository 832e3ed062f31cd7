//! Coupled time evolution of Fock coefficients and orbitals.
//!
//! The coefficient vector follows `i dC/dt = H(t) C` with the Hamiltonian
//! matrix rebuilt from the instantaneous orbitals; each orbital follows the
//! projected integro-differential equation
//! `i d|phi_j> = P [ h|phi_j> + sum [rho^-1]_jk rho_ksql W_sl |phi_q> ]`
//! with `W_sl(x) = g phi_s*(x) phi_l(x)` for contact interaction and
//! `P = 1 - sum |phi_j><phi_j|`. A fixed-step classical RK4 advances the
//! joint system; after every step the orbitals are symmetrically
//! re-orthonormalized and the coefficient norm reset, with the
//! pre-correction defects logged.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    assemble_hamiltonian, gram_defect, one_body_rdm, orbital_integrals, two_body_rdm,
    CoefficientVector, DensityData, FockBasis, Rho2,
};
use crate::grid::{ComplexFunction, RealFunction};
use crate::likelihood::side_probabilities;
use crate::tmi::bose_hubbard_params;

/// Full many-body state: amplitudes, orbitals, and the current time.
#[derive(Debug, Clone)]
pub struct ManyBodyState {
    pub basis: Arc<FockBasis>,
    pub coefficients: CoefficientVector,
    pub orbitals: Vec<ComplexFunction>,
    pub time: f64,
}

impl ManyBodyState {
    pub fn new(
        basis: Arc<FockBasis>,
        coefficients: CoefficientVector,
        orbitals: Vec<ComplexFunction>,
    ) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients for a {}-configuration basis",
                coefficients.len(),
                basis.len()
            )));
        }
        if orbitals.len() != basis.n_modes() {
            return Err(Error::InvalidInput(format!(
                "{} orbitals for {} modes",
                orbitals.len(),
                basis.n_modes()
            )));
        }
        Ok(Self {
            basis,
            coefficients,
            orbitals,
            time: 0.0,
        })
    }

    pub fn density(&self) -> DensityData {
        DensityData {
            rho1: one_body_rdm(&self.coefficients, &self.basis),
            rho2: two_body_rdm(&self.coefficients, &self.basis),
        }
    }
}

/// Step size, duration, sampling, and regularization knobs.
#[derive(Debug, Clone, Copy)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub sample_stride: usize,
    pub eps_reg: f64,
    pub frozen_orbitals: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_final: 2.0,
            sample_stride: 100,
            eps_reg: 1e-8,
            frozen_orbitals: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.eps_reg > 0.0) || self.t_final < 0.0 {
            return Err(Error::InvalidInput(format!(
                "evolution config requires dt > 0, eps_reg > 0, t_final >= 0: {self:?}"
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidInput("sample_stride must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

/// Pre-correction defects of one accepted step.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepDiagnostics {
    pub norm_defect: f64,
    pub ortho_defect: f64,
}

/// Defect limit beyond which a step is rejected as a step-size failure.
const DEFECT_LIMIT: f64 = 1e-4;

/// Inverts a Hermitian one-body density after replacing each eigenvalue
/// `l` by `l + eps exp(-l/eps)`, which leaves occupied directions intact
/// and caps the inverse at 1/eps on empty ones.
pub fn regularized_inverse(rho1: &DMatrix<C64>, eps_reg: f64) -> Result<DMatrix<C64>> {
    let m = rho1.nrows();
    let eig = rho1.clone().symmetric_eigen();
    let mut inv_diag = Vec::with_capacity(m);
    for &l in eig.eigenvalues.iter() {
        let reg = l + eps_reg * (-l / eps_reg).exp();
        if !reg.is_finite() || reg <= 0.0 {
            return Err(Error::SingularDensity(format!(
                "eigenvalue {l:.3e} regularized to {reg:.3e}"
            )));
        }
        inv_diag.push(1.0 / reg);
    }
    let mut out = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for (idx, &d) in inv_diag.iter().enumerate() {
        let v = eig.eigenvectors.column(idx);
        for a in 0..m {
            for b in 0..m {
                out[(a, b)] += v[a] * v[b].conj() * d;
            }
        }
    }
    Ok(out)
}

/// `dC/dt = -i H(t) C` with the Hamiltonian built from the state's
/// orbitals.
pub fn coefficient_rhs(
    state: &ManyBodyState,
    potential: &RealFunction,
    g: f64,
) -> Result<DVector<C64>> {
    let ham = crate::fock::hamiltonian_matrix(&state.orbitals, potential, g, &state.basis)?;
    let mut dc = &ham * &state.coefficients.amplitudes;
    dc *= C64::new(0.0, -1.0);
    Ok(dc)
}

fn orbital_rhs_kernel(
    orbitals: &[ComplexFunction],
    rho1: &DMatrix<C64>,
    rho2: &Rho2,
    potential: &RealFunction,
    g: f64,
    eps_reg: f64,
) -> Result<Vec<ComplexFunction>> {
    let m = orbitals.len();
    let grid = potential.grid();
    let n = grid.n_points();
    let dx = grid.spacing();
    let inverse = regularized_inverse(rho1, eps_reg)?;

    // B_jsql = sum_k inv[j,k] rho2[k,s,q,l]
    let idx = |a: usize, b: usize, c: usize, d: usize| ((a * m + b) * m + c) * m + d;
    let mut b_tensor = vec![C64::new(0.0, 0.0); m * m * m * m];
    for j in 0..m {
        for s in 0..m {
            for q in 0..m {
                for l in 0..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..m {
                        acc += inverse[(j, k)] * rho2.get(k, s, q, l);
                    }
                    b_tensor[idx(j, s, q, l)] = acc;
                }
            }
        }
    }

    let mut raw: Vec<Vec<C64>> = Vec::with_capacity(m);
    for orb in orbitals {
        let mut h_phi = vec![C64::new(0.0, 0.0); n];
        crate::grid::ops::apply_h(potential.values(), orb.values(), dx, &mut h_phi);
        raw.push(h_phi);
    }
    // Mean field: g sum_sql B_jsql phi_s*(x) phi_l(x) phi_q(x).
    for j in 0..m {
        for s in 0..m {
            for q in 0..m {
                for l in 0..m {
                    let beta = b_tensor[idx(j, s, q, l)] * g;
                    if beta.norm_sqr() == 0.0 {
                        continue;
                    }
                    let ps = orbitals[s].values();
                    let pq = orbitals[q].values();
                    let pl = orbitals[l].values();
                    let dst = &mut raw[j];
                    for x in 0..n {
                        dst[x] += beta * ps[x].conj() * pl[x] * pq[x];
                    }
                }
            }
        }
    }

    // Project out the orbital span, then multiply by -i.
    let mut out = Vec::with_capacity(m);
    for r in raw.into_iter() {
        let mut f = ComplexFunction::new(Arc::clone(grid), r)?;
        for orb in orbitals {
            let overlap = crate::grid::ops::inner(orb.values(), f.values(), dx);
            if overlap.norm_sqr() > 0.0 {
                let src = orb.values().to_vec();
                for (d, s) in f.values_mut().iter_mut().zip(&src) {
                    *d -= overlap * s;
                }
            }
        }
        f.values_mut()
            .iter_mut()
            .for_each(|v| *v *= C64::new(0.0, -1.0));
        out.push(f);
    }
    Ok(out)
}

/// `d|phi_j>/dt` per the projected orbital equation; identically zero in
/// frozen-orbital mode.
pub fn orbital_rhs(
    state: &ManyBodyState,
    density: &DensityData,
    potential: &RealFunction,
    g: f64,
    config: &EvolutionConfig,
) -> Result<Vec<ComplexFunction>> {
    if config.frozen_orbitals {
        return Ok(state
            .orbitals
            .iter()
            .map(|o| ComplexFunction::zeros(Arc::clone(o.grid())))
            .collect());
    }
    orbital_rhs_kernel(
        &state.orbitals,
        &density.rho1,
        &density.rho2,
        potential,
        g,
        config.eps_reg,
    )
}

/// Natural occupations: eigenvalues of the one-body density, descending.
pub fn natural_occupations(rho1: &DMatrix<C64>) -> Vec<f64> {
    let eig = rho1.clone().symmetric_eigen();
    let mut occ: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    occ.sort_by(|a, b| b.partial_cmp(a).expect("finite occupations"));
    occ
}

/// Fraction of the one-body density carried by the two leading natural
/// orbitals.
pub fn two_mode_fraction(occupations: &[f64], n_particles: usize) -> f64 {
    assert!(occupations.len() >= 2, "need at least two occupations");
    (occupations[0] + occupations[1]) / n_particles as f64
}

/// Monitors recorded along a trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub t: f64,
    /// Natural occupations, descending; length M.
    pub occupations: Vec<f64>,
    pub two_mode_fraction: f64,
    pub energy: f64,
    pub norm_defect: f64,
    pub ortho_defect: f64,
    pub tunneling_magnitude: f64,
    pub offset: f64,
    pub interaction: f64,
    /// (P_L, P_R) of the first two orbitals.
    pub side: [(f64, f64); 2],
}

#[derive(Debug, Clone, Default)]
pub struct TrajectoryLog {
    pub samples: Vec<TrajectorySample>,
}

impl TrajectoryLog {
    pub fn min_two_mode_fraction(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.two_mode_fraction)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_defect).fold(0.0, f64::max)
    }

    pub fn max_ortho_defect(&self) -> f64 {
        self.samples.iter().map(|s| s.ortho_defect).fold(0.0, f64::max)
    }

    /// Largest relative energy drift against the first sample.
    pub fn energy_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else {
            return 0.0;
        };
        let scale = first.energy.abs().max(1e-12);
        self.samples
            .iter()
            .map(|s| (s.energy - first.energy).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// CSV with the monitor columns; `comment` goes into a leading `#` line.
    pub fn write_csv(&self, out: &mut dyn std::io::Write, comment: &str) -> std::io::Result<()> {
        writeln!(out, "# {comment}")?;
        writeln!(
            out,
            "t,rho1,rho2,rho3,rho4,rho_tm,energy,norm_defect,tau,eps,U,PL1,PR1,PL2,PR2"
        )?;
        for s in &self.samples {
            let occ = |i: usize| s.occupations.get(i).copied().unwrap_or(0.0);
            writeln!(
                out,
                "{},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12},{:.3e},{:.6e},{:.12},{:.12},{:.12},{:.12},{:.12},{:.12}",
                s.t,
                occ(0),
                occ(1),
                occ(2),
                occ(3),
                s.two_mode_fraction,
                s.energy,
                s.norm_defect,
                s.tunneling_magnitude,
                s.offset,
                s.interaction,
                s.side[0].0,
                s.side[0].1,
                s.side[1].0,
                s.side[1].1,
            )?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 propagator for one trap/interaction setting.
#[derive(Debug, Clone)]
pub struct Propagator {
    potential: RealFunction,
    g: f64,
    config: EvolutionConfig,
}

struct Rhs {
    dc: DVector<C64>,
    dorb: Vec<Vec<C64>>,
}

impl Propagator {
    pub fn new(potential: RealFunction, g: f64, config: EvolutionConfig) -> Result<Self> {
        config.validate()?;
        if !g.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite coupling g = {g}")));
        }
        Ok(Self {
            potential,
            g,
            config,
        })
    }

    pub fn config(&self) -> &EvolutionConfig {
        &self.config
    }

    pub fn potential(&self) -> &RealFunction {
        &self.potential
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn stepper(&self, initial: &ManyBodyState) -> Stepper<'_> {
        Stepper {
            prop: self,
            state: initial.clone(),
            frozen_ham: None,
            step_index: 0,
            last: StepDiagnostics::default(),
        }
    }

    /// Advances one RK4 step in place; returns the pre-correction defects.
    pub fn step(&self, state: &mut ManyBodyState) -> Result<StepDiagnostics> {
        let mut stepper = self.stepper(state);
        stepper.advance(1)?;
        *state = stepper.state;
        Ok(stepper.last)
    }

    /// Runs for `t_final` and samples monitors every `sample_stride` steps.
    pub fn evolve(&self, initial: &ManyBodyState) -> Result<(ManyBodyState, TrajectoryLog)> {
        let mut stepper = self.stepper(initial);
        let n_steps = self.config.n_steps();
        let mut log = TrajectoryLog::default();
        log.samples.push(stepper.sample()?);
        let mut done = 0;
        while done < n_steps {
            let chunk = self.config.sample_stride.min(n_steps - done);
            stepper.advance(chunk)?;
            done += chunk;
            log.samples.push(stepper.sample()?);
        }
        Ok((stepper.state, log))
    }
}

/// Incremental view of a running trajectory, so several parameter legs can
/// be advanced in lockstep.
pub struct Stepper<'a> {
    prop: &'a Propagator,
    pub state: ManyBodyState,
    frozen_ham: Option<DMatrix<C64>>,
    step_index: u64,
    last: StepDiagnostics,
}

impl Stepper<'_> {
    pub fn diagnostics(&self) -> StepDiagnostics {
        self.last
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    fn rhs(&mut self, c: &DVector<C64>, orbitals: &[ComplexFunction]) -> Result<Rhs> {
        let frozen = self.prop.config.frozen_orbitals;
        let basis = &self.state.basis;
        let ham_owned;
        let ham = if frozen {
            if self.frozen_ham.is_none() {
                let ints = orbital_integrals(orbitals, &self.prop.potential, self.prop.g)?;
                self.frozen_ham = Some(assemble_hamiltonian(&ints, basis));
            }
            self.frozen_ham.as_ref().expect("cached above")
        } else {
            let ints = orbital_integrals(orbitals, &self.prop.potential, self.prop.g)?;
            ham_owned = assemble_hamiltonian(&ints, basis);
            &ham_owned
        };
        let mut dc = ham * c;
        dc *= C64::new(0.0, -1.0);

        let dorb = if frozen {
            let n = self.prop.potential.grid().n_points();
            vec![vec![C64::new(0.0, 0.0); n]; orbitals.len()]
        } else {
            let cv = CoefficientVector::new(c.clone());
            let rho1 = one_body_rdm(&cv, basis);
            let rho2 = two_body_rdm(&cv, basis);
            orbital_rhs_kernel(
                orbitals,
                &rho1,
                &rho2,
                &self.prop.potential,
                self.prop.g,
                self.prop.config.eps_reg,
            )?
            .into_iter()
            .map(|f| f.values().to_vec())
            .collect()
        };
        Ok(Rhs { dc, dorb })
    }

    /// Runs `n` RK4 steps with per-step renormalization.
    pub fn advance(&mut self, n: usize) -> Result<()> {
        let dt = self.prop.config.dt;
        let grid = Arc::clone(self.prop.potential.grid());
        for _ in 0..n {
            let c0 = self.state.coefficients.amplitudes.clone();
            let orb0 = self.state.orbitals.clone();

            let shifted = |c: &DVector<C64>,
                           orb: &[ComplexFunction],
                           k: &Rhs,
                           h: f64|
             -> Result<(DVector<C64>, Vec<ComplexFunction>)> {
                let mut c_new = c.clone();
                c_new.axpy(C64::new(h, 0.0), &k.dc, C64::new(1.0, 0.0));
                let mut orb_new = Vec::with_capacity(orb.len());
                for (o, d) in orb.iter().zip(&k.dorb) {
                    let vals: Vec<C64> = o
                        .values()
                        .iter()
                        .zip(d)
                        .map(|(a, b)| a + h * b)
                        .collect();
                    orb_new.push(ComplexFunction::new(Arc::clone(&grid), vals)?);
                }
                Ok((c_new, orb_new))
            };

            let k1 = self.rhs(&c0, &orb0)?;
            let (c_mid, orb_mid) = shifted(&c0, &orb0, &k1, 0.5 * dt)?;
            let k2 = self.rhs(&c_mid, &orb_mid)?;
            let (c_mid, orb_mid) = shifted(&c0, &orb0, &k2, 0.5 * dt)?;
            let k3 = self.rhs(&c_mid, &orb_mid)?;
            let (c_end, orb_end) = shifted(&c0, &orb0, &k3, dt)?;
            let k4 = self.rhs(&c_end, &orb_end)?;

            let sixth = dt / 6.0;
            let mut c_new = c0;
            for (i, v) in c_new.iter_mut().enumerate() {
                *v += sixth * (k1.dc[i] + 2.0 * k2.dc[i] + 2.0 * k3.dc[i] + k4.dc[i]);
            }
            let mut orb_new = orb0;
            for (j, orb) in orb_new.iter_mut().enumerate() {
                for (x, v) in orb.values_mut().iter_mut().enumerate() {
                    *v += sixth
                        * (k1.dorb[j][x]
                            + 2.0 * k2.dorb[j][x]
                            + 2.0 * k3.dorb[j][x]
                            + k4.dorb[j][x]);
                }
            }

            self.step_index += 1;
            let t = self.state.time + dt;

            // Corrections, logging the defects they removed.
            let norm = CoefficientVector::new(c_new.clone()).norm();
            let norm_defect = (norm - 1.0).abs();
            let ortho_defect = if self.prop.config.frozen_orbitals {
                0.0
            } else {
                loewdin_orthonormalize(&mut orb_new)?
            };
            if norm_defect > DEFECT_LIMIT || ortho_defect > DEFECT_LIMIT {
                return Err(Error::StepFailure {
                    t,
                    defect: norm_defect.max(ortho_defect),
                    limit: DEFECT_LIMIT,
                });
            }
            c_new /= C64::new(norm, 0.0);

            self.state.coefficients = CoefficientVector::new(c_new);
            self.state.orbitals = orb_new;
            self.state.time = t;
            self.last = StepDiagnostics {
                norm_defect,
                ortho_defect,
            };
        }
        Ok(())
    }

    /// Monitors of the current state.
    pub fn sample(&self) -> Result<TrajectorySample> {
        let state = &self.state;
        let basis = &state.basis;
        let rho1 = one_body_rdm(&state.coefficients, basis);
        let occupations = natural_occupations(&rho1);
        let fraction = two_mode_fraction(&occupations, basis.n_particles());
        let ints = orbital_integrals(&state.orbitals, &self.prop.potential, self.prop.g)?;
        let ham = assemble_hamiltonian(&ints, basis);
        let energy = state
            .coefficients
            .amplitudes
            .dotc(&(&ham * &state.coefficients.amplitudes))
            .re;
        let bh = bose_hubbard_params(
            &state.orbitals[0],
            &state.orbitals[1],
            &self.prop.potential,
            self.prop.g,
            basis.n_particles(),
        )?;
        let sp = side_probabilities(&state.orbitals);
        Ok(TrajectorySample {
            t: state.time,
            occupations,
            two_mode_fraction: fraction,
            energy,
            norm_defect: self.last.norm_defect,
            ortho_defect: self.last.ortho_defect,
            tunneling_magnitude: bh.tunneling_magnitude,
            offset: bh.offset,
            interaction: bh.interaction,
            side: [(sp.left[0], sp.right[0]), (sp.left[1], sp.right[1])],
        })
    }
}

/// Symmetric (Loewdin) orthonormalization in place; returns the
/// pre-correction Gram defect.
fn loewdin_orthonormalize(orbitals: &mut [ComplexFunction]) -> Result<f64> {
    let m = orbitals.len();
    let defect = gram_defect(orbitals);
    let gram = DMatrix::from_fn(m, m, |i, j| orbitals[i].inner(&orbitals[j]));
    let eig = gram.symmetric_eigen();
    let mut s = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for (idx, &l) in eig.eigenvalues.iter().enumerate() {
        if !(l > 0.0) {
            return Err(Error::NonOrthonormal(defect));
        }
        let d = 1.0 / l.sqrt();
        let v = eig.eigenvectors.column(idx);
        for a in 0..m {
            for b in 0..m {
                s[(a, b)] += v[a] * v[b].conj() * d;
            }
        }
    }
    let n = orbitals[0].values().len();
    let mut column = vec![C64::new(0.0, 0.0); m];
    for x in 0..n {
        for (j, col) in column.iter_mut().enumerate() {
            *col = orbitals[j].values()[x];
        }
        for (i, orb) in orbitals.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, col) in column.iter().enumerate() {
                // phi'_i = sum_j phi_j S_ji
                acc += col * s[(j, i)];
            }
            orb.values_mut()[x] = acc;
        }
    }
    Ok(defect)
}
