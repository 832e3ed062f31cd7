//! Bosonic configuration space for N particles in M modes: basis
//! enumeration, initial-state builders, the many-body Hamiltonian matrix in
//! the instantaneous orbital basis, and reduced one- and two-body density
//! matrices.
//!
//! Matrix elements of ladder-operator monomials depend only on the basis, so
//! they are tabulated once at construction; per-step work during propagation
//! reduces to sparse accumulations with the current orbital integrals.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{ComplexFunction, RealFunction};

pub const MAX_MODES: usize = 4;

/// Occupation vector, padded with zeros beyond `n_modes`.
pub type Config = [u8; MAX_MODES];

/// Sparse matrix elements `<row| monomial |col>` of a ladder monomial over
/// the fixed-N basis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LadderEntry {
    pub row: u32,
    pub col: u32,
    pub factor: f64,
}

#[derive(Debug)]
pub struct FockBasis {
    n_particles: usize,
    n_modes: usize,
    configs: Vec<Config>,
    index: HashMap<Config, usize>,
    one_body: Vec<Vec<LadderEntry>>,
    two_body: Vec<Vec<LadderEntry>>,
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Closed-form factor of `<n| b+_k b+_s b_q b_l |n_ks^ql>`, split by the
/// equality pattern of the index pairs; each branch is one of the element
/// classes of the reduced two-body matrix.
fn quartic_factor(n: &Config, k: usize, s: usize, q: usize, l: usize) -> f64 {
    let nk = n[k] as f64;
    let ns = n[s] as f64;
    let nq = n[q] as f64;
    let nl = n[l] as f64;
    if k == s {
        if q == l {
            if q == k {
                nk * (nk - 1.0)
            } else {
                ((nk - 1.0) * nk * (nq + 1.0) * (nq + 2.0)).max(0.0).sqrt()
            }
        } else if q == k {
            (nk - 1.0) * (nk * (nl + 1.0)).sqrt()
        } else if l == k {
            (nk - 1.0) * (nk * (nq + 1.0)).sqrt()
        } else {
            ((nk - 1.0) * nk * (nq + 1.0) * (nl + 1.0)).max(0.0).sqrt()
        }
    } else if q == l {
        if q == k {
            nk * (ns * (nk + 1.0)).sqrt()
        } else if q == s {
            ns * (nk * (ns + 1.0)).sqrt()
        } else {
            (nk * ns * (nq + 1.0) * (nq + 2.0)).sqrt()
        }
    } else {
        let k_in = k == q || k == l;
        let s_in = s == q || s == l;
        if k_in && s_in {
            // {k,s} == {q,l}
            nk * ns
        } else if k_in || s_in {
            let spectator = if k_in { k } else { s };
            let source = if k_in { s } else { k };
            let dest = if q == spectator { l } else { q };
            (n[spectator] as f64) * ((n[source] as f64) * (n[dest] as f64 + 1.0)).sqrt()
        } else {
            (nk * ns * (nq + 1.0) * (nl + 1.0)).sqrt()
        }
    }
}

fn shifted_config(n: &Config, remove: &[usize], add: &[usize]) -> Option<Config> {
    let mut out = *n;
    for &r in remove {
        if out[r] == 0 {
            return None;
        }
        out[r] -= 1;
    }
    for &a in add {
        out[a] += 1;
    }
    Some(out)
}

fn pair_slot(m: usize, a: usize, b: usize) -> usize {
    // (a, b) with a <= b into triangular numbering
    a * m - a * (a + 1) / 2 + b
}

impl FockBasis {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn config(&self, i: usize) -> &Config {
        &self.configs[i]
    }

    pub fn index_of(&self, cfg: &Config) -> Option<usize> {
        self.index.get(cfg).copied()
    }

    pub(crate) fn one_body_table(&self, k: usize, q: usize) -> &[LadderEntry] {
        &self.one_body[k * self.n_modes + q]
    }

    /// Table for `b+_k b+_s b_q b_l`; valid for any index order because the
    /// monomial is symmetric under k<->s and q<->l.
    pub(crate) fn two_body_table(&self, k: usize, s: usize, q: usize, l: usize) -> &[LadderEntry] {
        let m = self.n_modes;
        let t = m * (m + 1) / 2;
        let (k, s) = if k <= s { (k, s) } else { (s, k) };
        let (q, l) = if q <= l { (q, l) } else { (l, q) };
        &self.two_body[pair_slot(m, k, s) * t + pair_slot(m, q, l)]
    }

    fn build_tables(&mut self) {
        let m = self.n_modes;
        let dim = self.configs.len();

        let mut one_body = vec![Vec::new(); m * m];
        for (k, tables) in one_body.chunks_mut(m).enumerate() {
            for (q, table) in tables.iter_mut().enumerate() {
                for (row, n) in self.configs.iter().enumerate() {
                    if n[k] == 0 {
                        continue;
                    }
                    let factor = if k == q {
                        n[k] as f64
                    } else {
                        ((n[k] as f64) * (n[q] as f64 + 1.0)).sqrt()
                    };
                    let shifted = shifted_config(n, &[k], &[q]).expect("checked occupation");
                    let col = self.index[&shifted];
                    table.push(LadderEntry {
                        row: row as u32,
                        col: col as u32,
                        factor,
                    });
                }
                debug_assert!(table.len() <= dim);
            }
        }

        let t = m * (m + 1) / 2;
        let mut two_body = vec![Vec::new(); t * t];
        for k in 0..m {
            for s in k..m {
                for q in 0..m {
                    for l in q..m {
                        let table = &mut two_body[pair_slot(m, k, s) * t + pair_slot(m, q, l)];
                        for (row, n) in self.configs.iter().enumerate() {
                            let factor = quartic_factor(n, k, s, q, l);
                            if factor == 0.0 {
                                continue;
                            }
                            let Some(shifted) = shifted_config(n, &[k, s], &[q, l]) else {
                                continue;
                            };
                            let col = self.index[&shifted];
                            table.push(LadderEntry {
                                row: row as u32,
                                col: col as u32,
                                factor,
                            });
                        }
                    }
                }
            }
        }

        self.one_body = one_body;
        self.two_body = two_body;
    }
}

/// Enumerates all occupation vectors of N particles in M modes, ordered
/// lexicographically descending in n_1, then n_2, and so on.
pub fn enumerate_configs(n_particles: usize, n_modes: usize) -> Result<Arc<FockBasis>> {
    if n_particles < 1 {
        return Err(Error::InvalidInput("need at least one particle".into()));
    }
    if n_modes != 2 && n_modes != 4 {
        return Err(Error::InvalidInput(format!(
            "unsupported mode count {n_modes}; supported: 2, 4"
        )));
    }
    let mut configs = Vec::with_capacity(binomial(n_particles + n_modes - 1, n_modes - 1));
    let mut current = [0u8; MAX_MODES];
    fill_configs(n_particles, 0, n_modes, &mut current, &mut configs);
    let index = configs
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, i))
        .collect();
    let mut basis = FockBasis {
        n_particles,
        n_modes,
        configs,
        index,
        one_body: Vec::new(),
        two_body: Vec::new(),
    };
    basis.build_tables();
    Ok(Arc::new(basis))
}

fn fill_configs(
    remaining: usize,
    mode: usize,
    n_modes: usize,
    current: &mut Config,
    out: &mut Vec<Config>,
) {
    if mode == n_modes - 1 {
        current[mode] = remaining as u8;
        out.push(*current);
        current[mode] = 0;
        return;
    }
    for occ in (0..=remaining).rev() {
        current[mode] = occ as u8;
        fill_configs(remaining - occ, mode + 1, n_modes, current, out);
    }
    current[mode] = 0;
}

/// Complex amplitudes over the basis configurations.
#[derive(Debug, Clone)]
pub struct CoefficientVector {
    pub amplitudes: DVector<C64>,
}

impl CoefficientVector {
    pub fn new(amplitudes: DVector<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.len() == 0
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            self.amplitudes /= C64::new(n, 0.0);
        }
    }
}

/// Probe-state choice for the interferometric protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    /// NOON superposition of all-left and all-right.
    Cat,
    /// Binomial (spin coherent) superposition.
    Coherent,
}

impl StateKind {
    pub fn build(self, basis: &FockBasis) -> CoefficientVector {
        match self {
            StateKind::Cat => build_noon(basis),
            StateKind::Coherent => build_spin_coherent(basis),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            StateKind::Cat => "cat",
            StateKind::Coherent => "coherent",
        }
    }
}

impl std::str::FromStr for StateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cat" | "noon" => Ok(StateKind::Cat),
            "coherent" | "coh" => Ok(StateKind::Coherent),
            other => Err(Error::Config(format!(
                "unknown state kind '{other}' (expected cat | coherent)"
            ))),
        }
    }
}

/// NOON (cat) state `(|N,0,...> + |0,N,...>)/sqrt(2)`.
pub fn build_noon(basis: &FockBasis) -> CoefficientVector {
    let n = basis.n_particles() as u8;
    let mut amps = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
    let mut all_left = [0u8; MAX_MODES];
    all_left[0] = n;
    let mut all_right = [0u8; MAX_MODES];
    all_right[1] = n;
    let w = C64::new(1.0 / 2f64.sqrt(), 0.0);
    amps[basis.index_of(&all_left).expect("config in basis")] = w;
    amps[basis.index_of(&all_right).expect("config in basis")] = w;
    CoefficientVector::new(amps)
}

/// Spin coherent state: binomial amplitudes
/// `C_k = sqrt(N choose k) cos^(N-k)(pi/4) sin^k(pi/4)` over `|N-k, k, 0...>`.
pub fn build_spin_coherent(basis: &FockBasis) -> CoefficientVector {
    let n = basis.n_particles();
    let mut amps = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
    let half = std::f64::consts::FRAC_PI_4;
    for k in 0..=n {
        let mut cfg = [0u8; MAX_MODES];
        cfg[0] = (n - k) as u8;
        cfg[1] = k as u8;
        let amp = (binomial(n, k) as f64).sqrt()
            * half.cos().powi((n - k) as i32)
            * half.sin().powi(k as i32);
        amps[basis.index_of(&cfg).expect("config in basis")] = C64::new(amp, 0.0);
    }
    CoefficientVector::new(amps)
}

/// Reduced one-body density matrix `rho_kq = <b+_k b_q>`.
pub fn one_body_rdm(c: &CoefficientVector, basis: &FockBasis) -> DMatrix<C64> {
    let m = basis.n_modes();
    let a = &c.amplitudes;
    let mut rho = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    for k in 0..m {
        for q in 0..m {
            let mut acc = C64::new(0.0, 0.0);
            for e in basis.one_body_table(k, q) {
                acc += a[e.row as usize].conj() * a[e.col as usize] * e.factor;
            }
            rho[(k, q)] = acc;
        }
    }
    rho
}

/// Dense reduced two-body matrix `rho_ksql = <b+_k b+_s b_q b_l>`.
#[derive(Debug, Clone)]
pub struct Rho2 {
    n_modes: usize,
    data: Vec<C64>,
}

impl Rho2 {
    #[inline]
    pub fn get(&self, k: usize, s: usize, q: usize, l: usize) -> C64 {
        let m = self.n_modes;
        self.data[((k * m + s) * m + q) * m + l]
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `sum_ks rho_ksks`, which must equal N(N-1).
    pub fn pair_trace(&self) -> C64 {
        let m = self.n_modes;
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..m {
            for s in 0..m {
                acc += self.get(k, s, k, s);
            }
        }
        acc
    }
}

pub fn two_body_rdm(c: &CoefficientVector, basis: &FockBasis) -> Rho2 {
    let m = basis.n_modes();
    let a = &c.amplitudes;
    let mut data = vec![C64::new(0.0, 0.0); m * m * m * m];
    for k in 0..m {
        for s in k..m {
            for q in 0..m {
                for l in q..m {
                    let mut acc = C64::new(0.0, 0.0);
                    for e in basis.two_body_table(k, s, q, l) {
                        acc += a[e.row as usize].conj() * a[e.col as usize] * e.factor;
                    }
                    // The monomial is symmetric under k<->s and q<->l.
                    for &(ka, sa) in &[(k, s), (s, k)] {
                        for &(qa, la) in &[(q, l), (l, q)] {
                            data[((ka * m + sa) * m + qa) * m + la] = acc;
                        }
                    }
                }
            }
        }
    }
    Rho2 { n_modes: m, data }
}

/// One- and two-body reduced densities of a coefficient vector.
#[derive(Debug, Clone)]
pub struct DensityData {
    pub rho1: DMatrix<C64>,
    pub rho2: Rho2,
}

pub fn density_data(c: &CoefficientVector, basis: &FockBasis) -> DensityData {
    DensityData {
        rho1: one_body_rdm(c, basis),
        rho2: two_body_rdm(c, basis),
    }
}

/// One-body integrals `h_ij = <phi_i|h|phi_j>` and contact-interaction
/// integrals `W_ijkl = g dx sum_x phi_i* phi_j* phi_k phi_l`.
#[derive(Debug, Clone)]
pub struct OrbitalIntegrals {
    pub h: DMatrix<C64>,
    pub w: Vec<C64>,
    pub n_modes: usize,
}

impl OrbitalIntegrals {
    #[inline]
    pub fn w(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        let m = self.n_modes;
        self.w[((i * m + j) * m + k) * m + l]
    }
}

pub fn orbital_integrals(
    orbitals: &[ComplexFunction],
    potential: &RealFunction,
    g: f64,
) -> Result<OrbitalIntegrals> {
    let m = orbitals.len();
    let dx = potential.grid().spacing();
    let mut h = DMatrix::from_element(m, m, C64::new(0.0, 0.0));
    let mut h_phi = Vec::with_capacity(m);
    for orb in orbitals {
        h_phi.push(crate::grid::apply_h(potential, orb)?);
    }
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = orbitals[i].inner(&h_phi[j]);
        }
    }

    // pair products P_ab(x) = phi_a*(x) phi_b(x)
    let n = potential.grid().n_points();
    let mut pair = vec![C64::new(0.0, 0.0); m * m * n];
    for a in 0..m {
        for b in 0..m {
            let dst = &mut pair[(a * m + b) * n..(a * m + b + 1) * n];
            for (x, d) in dst.iter_mut().enumerate() {
                *d = orbitals[a].values()[x].conj() * orbitals[b].values()[x];
            }
        }
    }
    let mut w = vec![C64::new(0.0, 0.0); m * m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let p_ik = &pair[(i * m + k) * n..(i * m + k + 1) * n];
                    let p_jl = &pair[(j * m + l) * n..(j * m + l + 1) * n];
                    let mut acc = C64::new(0.0, 0.0);
                    for (a, b) in p_ik.iter().zip(p_jl) {
                        acc += a * b;
                    }
                    w[((i * m + j) * m + k) * m + l] = acc * g * dx;
                }
            }
        }
    }
    Ok(OrbitalIntegrals { h, w, n_modes: m })
}

/// Largest deviation of the orbital Gram matrix from the identity.
pub fn gram_defect(orbitals: &[ComplexFunction]) -> f64 {
    let m = orbitals.len();
    let mut defect = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let g = orbitals[i].inner(&orbitals[j]);
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            defect = defect.max((g - target).norm());
        }
    }
    defect
}

/// Assembles `H = sum h_ij b+_i b_j + 1/2 sum W_ijkl b+_i b+_j b_l b_k` from
/// precomputed integrals.
pub fn assemble_hamiltonian(integrals: &OrbitalIntegrals, basis: &FockBasis) -> DMatrix<C64> {
    let m = basis.n_modes();
    let dim = basis.len();
    let mut ham = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for i in 0..m {
        for j in 0..m {
            let hij = integrals.h[(i, j)];
            if hij.norm_sqr() == 0.0 {
                continue;
            }
            for e in basis.one_body_table(i, j) {
                ham[(e.row as usize, e.col as usize)] += hij * e.factor;
            }
        }
    }
    // b+_i b+_j b_l b_k matches the tabulated monomial b+_k' b+_s' b_q' b_l'
    // with (k', s', q', l') = (i, j, l, k).
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let coeff = 0.5 * integrals.w(i, j, k, l);
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    for e in basis.two_body_table(i, j, l, k) {
                        ham[(e.row as usize, e.col as usize)] += coeff * e.factor;
                    }
                }
            }
        }
    }
    ham
}

/// Many-body Hamiltonian in the given orbital basis. Rejects orbital sets
/// whose Gram matrix deviates from the identity by more than 1e-6.
pub fn hamiltonian_matrix(
    orbitals: &[ComplexFunction],
    potential: &RealFunction,
    g: f64,
    basis: &FockBasis,
) -> Result<DMatrix<C64>> {
    if orbitals.len() != basis.n_modes() {
        return Err(Error::InvalidInput(format!(
            "{} orbitals for a {}-mode basis",
            orbitals.len(),
            basis.n_modes()
        )));
    }
    let defect = gram_defect(orbitals);
    if defect > 1e-6 {
        return Err(Error::NonOrthonormal(defect));
    }
    let integrals = orbital_integrals(orbitals, potential, g)?;
    Ok(assemble_hamiltonian(&integrals, basis))
}
