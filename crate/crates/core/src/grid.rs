//! Uniform 1D grid, trap potential, and the discretized single-particle
//! Hamiltonian `h = -1/2 d^2/dx^2 + V(x)`.
//!
//! The kinetic term uses second-order central differences with hard-wall
//! (zero) boundary values; the same operator backs both the eigensolver used
//! for state preparation and the time propagation, so a prepared eigenstate
//! is stationary under the dynamics to machine precision.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Uniform symmetric mesh on `[-half_width, half_width]`.
#[derive(Debug)]
pub struct Grid {
    half_width: f64,
    n_points: usize,
    spacing: f64,
    nodes: Vec<f64>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n_points == other.n_points && self.half_width.to_bits() == other.half_width.to_bits()
    }
}

impl Grid {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the mirror node of `i` under x -> -x.
    pub fn reflect_index(&self, i: usize) -> usize {
        self.n_points - 1 - i
    }
}

/// Builds the mesh. Requires `n_points >= 16` and positive extent.
pub fn build_grid(half_width: f64, n_points: usize) -> Result<Arc<Grid>> {
    if n_points < 16 {
        return Err(Error::InvalidInput(format!(
            "n_points = {n_points} below minimum of 16"
        )));
    }
    if !(half_width > 0.0) {
        return Err(Error::InvalidInput(format!(
            "half_width = {half_width} must be positive"
        )));
    }
    let spacing = 2.0 * half_width / (n_points - 1) as f64;
    let nodes: Vec<f64> = (0..n_points)
        .map(|i| -half_width + spacing * i as f64)
        .collect();
    Ok(Arc::new(Grid {
        half_width,
        n_points,
        spacing,
        nodes,
    }))
}

/// Tilted double-well parameters:
/// `V(x) = p1 x^2 / 2 + p2 exp(-x^2 / (2 p3^2)) + p4 x`.
///
/// `p4` is the tilt slope, the parameter the whole estimation pipeline
/// targets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.p1 > 0.0) || !(self.p3 > 0.0) || self.p2 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "potential requires p1 > 0, p2 >= 0, p3 > 0; got {self:?}"
            )));
        }
        if !(self.p1.is_finite() && self.p2.is_finite() && self.p3.is_finite() && self.p4.is_finite())
        {
            return Err(Error::InvalidInput(format!("non-finite potential {self:?}")));
        }
        Ok(())
    }

    pub fn with_tilt(self, p4: f64) -> Self {
        Self { p4, ..self }
    }

    pub fn eval(&self, x: f64) -> f64 {
        0.5 * self.p1 * x * x + self.p2 * (-x * x / (2.0 * self.p3 * self.p3)).exp() + self.p4 * x
    }
}

/// Real-valued samples on the grid nodes.
#[derive(Debug, Clone)]
pub struct RealFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Complex-valued samples on the grid nodes.
#[derive(Debug, Clone)]
pub struct ComplexFunction {
    grid: Arc<Grid>,
    values: Vec<C64>,
}

fn check_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "half widths {} vs {}, points {} vs {}",
            a.half_width(),
            b.half_width(),
            a.n_points(),
            b.n_points()
        )))
    }
}

impl RealFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_complex(&self) -> ComplexFunction {
        ComplexFunction {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }

    /// dx-weighted inner product.
    pub fn inner(&self, other: &RealFunction) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// First moment <x> of |f|^2 (not normalized).
    pub fn dipole(&self) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(self.grid.nodes())
                .map(|(v, x)| v * v * x)
                .sum::<f64>()
    }
}

impl ComplexFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch(format!(
                "{} samples on a {}-point grid",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.n_points();
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// dx-weighted inner product `<self|other>` (conjugate-linear in self).
    pub fn inner(&self, other: &ComplexFunction) -> C64 {
        ops::inner(&self.values, &other.values, self.grid.spacing())
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).re.sqrt()
    }

    pub fn dipole(&self) -> f64 {
        self.grid.spacing()
            * self
                .values
                .iter()
                .zip(self.grid.nodes())
                .map(|(v, x)| v.norm_sqr() * x)
                .sum::<f64>()
    }
}

/// Samples the trap potential at every node.
pub fn eval_potential(params: &PotentialParams, grid: &Arc<Grid>) -> Result<RealFunction> {
    params.validate()?;
    let values = grid.nodes().iter().map(|&x| params.eval(x)).collect();
    RealFunction::new(Arc::clone(grid), values)
}

/// Applies the discrete single-particle Hamiltonian to `psi`.
pub fn apply_h(potential: &RealFunction, psi: &ComplexFunction) -> Result<ComplexFunction> {
    check_same_grid(potential.grid(), psi.grid())?;
    let mut out = ComplexFunction::zeros(Arc::clone(psi.grid()));
    ops::apply_h(
        potential.values(),
        psi.values(),
        psi.grid().spacing(),
        out.values_mut(),
    );
    Ok(out)
}

fn fix_sign(values: &mut [f64]) {
    if let Some(first) = values.iter().find(|v| v.abs() > 1e-6) {
        if *first < 0.0 {
            values.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

fn is_mirror_symmetric(potential: &RealFunction) -> bool {
    let grid = potential.grid();
    let v = potential.values();
    let scale = 1.0 + v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..v.len()).all(|i| (v[i] - v[grid.reflect_index(i)]).abs() <= 1e-12 * scale)
}

/// `k` lowest eigenpairs of the discretized Hamiltonian, orthonormal under
/// the dx-weighted inner product, energies ascending. The sign of each
/// eigenvector is fixed so its first sample with magnitude above 1e-6 is
/// positive, making runs reproducible.
///
/// Tunneling doublets under a high barrier are degenerate at solver
/// resolution, so the raw eigenvectors of a symmetric potential can come out
/// as arbitrary mixtures of the parity eigenstates. For mirror-symmetric
/// potentials, near-degenerate consecutive pairs are rotated back onto
/// parity eigenvectors and their energies recomputed as Rayleigh quotients.
pub fn lowest_eigenstates(potential: &RealFunction, k: usize) -> Result<Vec<(f64, RealFunction)>> {
    let grid = potential.grid();
    let n = grid.n_points();
    if k > n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs from a {n}-point grid"
        )));
    }
    let dx = grid.spacing();
    let inv_dx2 = 1.0 / (dx * dx);
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = inv_dx2 + potential.values()[i];
        if i + 1 < n {
            h[(i, i + 1)] = -0.5 * inv_dx2;
            h[(i + 1, i)] = -0.5 * inv_dx2;
        }
    }
    let eig = h
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::EigensolverFailure)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });

    let mut energies = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        energies.push(eig.eigenvalues[idx]);
        // nalgebra returns unit l2 columns; rescale to dx-weighted norm 1.
        vectors.push(eig.eigenvectors.column(idx).iter().map(|&v| v / dx.sqrt()).collect());
    }

    if is_mirror_symmetric(potential) {
        let rayleigh = |v: &[f64]| -> f64 {
            let mut acc = 0.0;
            for i in 0..n {
                let left = if i > 0 { v[i - 1] } else { 0.0 };
                let right = if i + 1 < n { v[i + 1] } else { 0.0 };
                acc += v[i]
                    * (0.5 * inv_dx2 * (2.0 * v[i] - left - right) + potential.values()[i] * v[i]);
            }
            acc * dx
        };
        let mut i = 0;
        while i + 1 < k {
            let scale = energies[i].abs().max(energies[i + 1].abs()).max(1.0);
            if energies[i + 1] - energies[i] < 1e-6 * scale {
                // Rotate the pair onto parity eigenvectors: diagonalize the
                // 2x2 parity expectation matrix within the doublet span.
                let reflect = |v: &[f64]| -> Vec<f64> {
                    (0..n).map(|j| v[grid.reflect_index(j)]).collect()
                };
                let ra = reflect(&vectors[i]);
                let dot = |a: &[f64], b: &[f64]| dx * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                let p00 = dot(&vectors[i], &ra);
                let p01 = dot(&vectors[i + 1], &ra);
                let p11 = dot(&vectors[i + 1], &reflect(&vectors[i + 1]));
                let theta = 0.5 * (2.0 * p01).atan2(p00 - p11);
                let (c, s) = (theta.cos(), theta.sin());
                let wa: Vec<f64> = (0..n).map(|j| c * vectors[i][j] + s * vectors[i + 1][j]).collect();
                let wb: Vec<f64> = (0..n).map(|j| -s * vectors[i][j] + c * vectors[i + 1][j]).collect();
                let (ea, eb) = (rayleigh(&wa), rayleigh(&wb));
                if ea <= eb {
                    vectors[i] = wa;
                    vectors[i + 1] = wb;
                    energies[i] = ea;
                    energies[i + 1] = eb;
                } else {
                    vectors[i] = wb;
                    vectors[i + 1] = wa;
                    energies[i] = eb;
                    energies[i + 1] = ea;
                }
                i += 2;
            } else {
                i += 1;
            }
        }
    }

    let mut pairs = Vec::with_capacity(k);
    for (e, mut values) in energies.into_iter().zip(vectors) {
        fix_sign(&mut values);
        pairs.push((e, RealFunction::new(Arc::clone(grid), values)?));
    }
    Ok(pairs)
}

fn parity_overlap(f: &RealFunction) -> f64 {
    let grid = f.grid();
    let v = f.values();
    grid.spacing()
        * (0..v.len())
            .map(|i| v[i] * v[grid.reflect_index(i)])
            .sum::<f64>()
}

/// Combines the lowest doublet into left/right localized orbitals
/// `(phi0 +- phi1)/sqrt(2)`, signs chosen so the left orbital has negative
/// dipole moment. Inputs must be near parity eigenstates (+ and -).
pub fn localized_orbitals(
    phi0: &RealFunction,
    phi1: &RealFunction,
) -> Result<(RealFunction, RealFunction)> {
    check_same_grid(phi0.grid(), phi1.grid())?;
    let p0 = parity_overlap(phi0);
    let p1 = parity_overlap(phi1);
    if (p0 - 1.0).abs() >= 0.05 {
        return Err(Error::ParityCheck(format!(
            "first input not symmetric: <phi|P|phi> = {p0:.4}"
        )));
    }
    if (p1 + 1.0).abs() >= 0.05 {
        return Err(Error::ParityCheck(format!(
            "second input not antisymmetric: <phi|P|phi> = {p1:.4}"
        )));
    }
    let grid = phi0.grid();
    let sum: Vec<f64> = phi0
        .values()
        .iter()
        .zip(phi1.values())
        .map(|(a, b)| (a + b) / 2f64.sqrt())
        .collect();
    let diff: Vec<f64> = phi0
        .values()
        .iter()
        .zip(phi1.values())
        .map(|(a, b)| (a - b) / 2f64.sqrt())
        .collect();
    let sum = RealFunction::new(Arc::clone(grid), sum)?;
    let diff = RealFunction::new(Arc::clone(grid), diff)?;
    if sum.dipole() < diff.dipole() {
        Ok((sum, diff))
    } else {
        Ok((diff, sum))
    }
}

/// `<phi|h|phi>` for a normalized orbital; errors if the imaginary residue
/// survives above 1e-10.
pub fn single_particle_energy(phi: &ComplexFunction, potential: &RealFunction) -> Result<f64> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidInput(format!(
            "orbital norm {norm} not 1 within 1e-6"
        )));
    }
    let h_phi = apply_h(potential, phi)?;
    let e = phi.inner(&h_phi);
    if e.im.abs() > 1e-10 {
        return Err(Error::InvalidInput(format!(
            "energy has imaginary part {:.3e}",
            e.im
        )));
    }
    Ok(e.re)
}

/// Slice kernels shared with the propagation hot loops.
pub(crate) mod ops {
    use num_complex::Complex64 as C64;

    pub fn inner(a: &[C64], b: &[C64], dx: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            acc += x.conj() * y;
        }
        acc * dx
    }

    /// `out = (-1/2 d^2/dx^2 + V) psi` with hard-wall boundaries.
    pub fn apply_h(potential: &[f64], psi: &[C64], dx: f64, out: &mut [C64]) {
        let n = psi.len();
        let c = 0.5 / (dx * dx);
        for i in 0..n {
            let left = if i > 0 { psi[i - 1] } else { C64::new(0.0, 0.0) };
            let right = if i + 1 < n { psi[i + 1] } else { C64::new(0.0, 0.0) };
            out[i] = c * (2.0 * psi[i] - left - right) + potential[i] * psi[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn paper_params() -> PotentialParams {
        PotentialParams {
            p1: 0.5,
            p2: 50.0,
            p3: 1.0,
            p4: 0.0,
        }
    }

    fn harmonic_params() -> PotentialParams {
        PotentialParams {
            p1: 0.5,
            p2: 0.0,
            p3: 1.0,
            p4: 0.0,
        }
    }

    fn default_grid() -> Arc<Grid> {
        build_grid(8.0, 257).unwrap()
    }

    #[test]
    fn rejects_tiny_grid() {
        assert!(build_grid(8.0, 5).is_err());
        assert!(build_grid(0.0, 257).is_err());
        assert!(build_grid(-1.0, 257).is_err());
    }

    #[test]
    fn spacing_and_symmetry() {
        let g = build_grid(8.0, 257).unwrap();
        assert_abs_diff_eq!(g.spacing(), 16.0 / 256.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.nodes()[128], 0.0, epsilon = 1e-13);
        for w in g.nodes().windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], g.spacing(), epsilon = 1e-12);
        }
    }

    #[test]
    fn even_count_straddles_zero() {
        let g = build_grid(8.0, 256).unwrap();
        let mid_lo = g.nodes()[127];
        let mid_hi = g.nodes()[128];
        assert!(mid_lo < 0.0 && mid_hi > 0.0);
        assert_abs_diff_eq!(mid_lo + mid_hi, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn potential_values() {
        let p = paper_params();
        assert_abs_diff_eq!(p.eval(0.0), 50.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p.with_tilt(0.1).eval(0.0), 50.0, epsilon = 1e-14);
        let harm = harmonic_params();
        assert_abs_diff_eq!(harm.eval(2.0), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn potential_even_without_tilt() {
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        for i in 0..g.n_points() {
            let j = g.reflect_index(i);
            assert_eq!(v.values()[i].to_bits(), v.values()[j].to_bits());
        }
    }

    fn grid_normalized_gaussian(grid: &Arc<Grid>, omega: f64) -> ComplexFunction {
        let mut vals: Vec<C64> = grid
            .nodes()
            .iter()
            .map(|&x| C64::new((-0.5 * omega * x * x).exp(), 0.0))
            .collect();
        let norm = (grid.spacing() * vals.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
        vals.iter_mut().for_each(|v| *v /= norm);
        ComplexFunction::new(Arc::clone(grid), vals).unwrap()
    }

    #[test]
    fn harmonic_ground_state_is_near_eigenfunction() {
        let g = default_grid();
        let v = eval_potential(&harmonic_params(), &g).unwrap();
        let omega = 0.5f64.sqrt();
        let psi = grid_normalized_gaussian(&g, omega);
        let h_psi = apply_h(&v, &psi).unwrap();
        let e0 = omega / 2.0;
        for i in 4..g.n_points() - 4 {
            let residual = (h_psi.values()[i] - e0 * psi.values()[i]).norm();
            assert!(residual < 1e-3, "residual {residual:.2e} at node {i}");
        }
    }

    #[test]
    fn kinetic_term_vanishes_on_plateau() {
        let g = default_grid();
        let v = eval_potential(&harmonic_params(), &g).unwrap();
        let n = g.n_points();
        let mut vals = vec![C64::new(0.0, 0.0); n];
        for v in vals.iter_mut().take(3 * n / 4).skip(n / 4) {
            *v = C64::new(1.0, 0.0);
        }
        let psi = ComplexFunction::new(Arc::clone(&g), vals).unwrap();
        let h_psi = apply_h(&v, &psi).unwrap();
        for i in n / 4 + 2..3 * n / 4 - 2 {
            let kinetic = h_psi.values()[i] - v.values()[i] * psi.values()[i];
            assert!(kinetic.norm() < 1e-12);
        }
    }

    #[test]
    fn discrete_h_is_hermitian() {
        use rand::prelude::*;
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let random_normalized = |rng: &mut rand_chacha::ChaCha8Rng| {
            let v: Vec<C64> = (0..g.n_points())
                .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let mut f = ComplexFunction::new(Arc::clone(&g), v).unwrap();
            let norm = f.norm();
            f.values_mut().iter_mut().for_each(|x| *x /= norm);
            f
        };
        for _ in 0..5 {
            let fa = random_normalized(&mut rng);
            let fb = random_normalized(&mut rng);
            let lhs = fa.inner(&apply_h(&v, &fb).unwrap());
            let rhs = apply_h(&v, &fa).unwrap().inner(&fb);
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn grid_mismatch_rejected() {
        let g1 = default_grid();
        let g2 = build_grid(8.0, 129).unwrap();
        let v = eval_potential(&harmonic_params(), &g1).unwrap();
        let psi = ComplexFunction::zeros(g2);
        assert!(apply_h(&v, &psi).is_err());
    }

    #[test]
    fn harmonic_spectrum() {
        let g = default_grid();
        let v = eval_potential(&harmonic_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&v, 3).unwrap();
        let omega = 0.5f64.sqrt();
        for (n, (e, _)) in pairs.iter().enumerate() {
            assert_abs_diff_eq!(*e, omega * (n as f64 + 0.5), epsilon = 1e-3);
        }
    }

    #[test]
    fn eigenvectors_orthonormal() {
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&v, 4).unwrap();
        for (i, (_, fi)) in pairs.iter().enumerate() {
            for (j, (_, fj)) in pairs.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(fi.inner(fj), expect, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn double_well_has_tunneling_doublet() {
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&v, 3).unwrap();
        let split01 = pairs[1].0 - pairs[0].0;
        let split12 = pairs[2].0 - pairs[1].0;
        assert!(split01 > 0.0);
        // Near-degenerate doublet under the 50-high barrier: the splitting is
        // many orders below the intra-well gap.
        assert!(
            split01 < 1e-6 * split12,
            "doublet split {split01:.3e} vs gap {split12:.3e}"
        );
    }

    #[test]
    fn localized_orbitals_live_in_their_wells() {
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&v, 2).unwrap();
        let (left, right) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
        let dx = g.spacing();
        let left_mass: f64 = left
            .values()
            .iter()
            .zip(g.nodes())
            .filter(|(_, &x)| x < 0.0)
            .map(|(v, _)| v * v * dx)
            .sum();
        assert!(left_mass > 0.95, "left mass {left_mass}");
        assert_abs_diff_eq!(left.inner(&right), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(left.norm(), 1.0, epsilon = 1e-10);
        // Parity mirror when p4 = 0.
        for i in 0..g.n_points() {
            let mirrored = right.values()[g.reflect_index(i)];
            assert_abs_diff_eq!(left.values()[i], mirrored, epsilon = 1e-8);
        }
    }

    #[test]
    fn swapped_doublet_swaps_sides() {
        let g = default_grid();
        let v = eval_potential(&paper_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&v, 2).unwrap();
        let (l1, r1) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
        // The parity precheck rejects swapped inputs outright.
        assert!(localized_orbitals(&pairs[1].1, &pairs[0].1).is_err());
        // Flipping the antisymmetric member swaps left and right.
        let flipped = RealFunction::new(
            Arc::clone(&g),
            pairs[1].1.values().iter().map(|v| -v).collect(),
        )
        .unwrap();
        let (l2, r2) = localized_orbitals(&pairs[0].1, &flipped).unwrap();
        for i in 0..g.n_points() {
            assert_abs_diff_eq!(l1.values()[i], l2.values()[i], epsilon = 1e-12);
            assert_abs_diff_eq!(r1.values()[i], r2.values()[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn single_particle_energies() {
        let g = default_grid();
        let harm = eval_potential(&harmonic_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&harm, 1).unwrap();
        let e = single_particle_energy(&pairs[0].1.to_complex(), &harm).unwrap();
        assert_abs_diff_eq!(e, 0.5f64.sqrt() / 2.0, epsilon = 1e-3);

        let dw = eval_potential(&paper_params(), &g).unwrap();
        let pairs = lowest_eigenstates(&dw, 2).unwrap();
        let (left, right) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
        let e_l = single_particle_energy(&left.to_complex(), &dw).unwrap();
        let e_r = single_particle_energy(&right.to_complex(), &dw).unwrap();
        assert_abs_diff_eq!(e_l, e_r, epsilon = 1e-8);

        // Positive tilt lowers the left well.
        let tilted = eval_potential(&paper_params().with_tilt(0.1), &g).unwrap();
        let e_l = single_particle_energy(&left.to_complex(), &tilted).unwrap();
        let e_r = single_particle_energy(&right.to_complex(), &tilted).unwrap();
        assert!(e_l < e_r, "h_L = {e_l}, h_R = {e_r}");
    }

    #[test]
    fn energy_requires_normalized_input() {
        let g = default_grid();
        let v = eval_potential(&harmonic_params(), &g).unwrap();
        let psi = ComplexFunction::new(
            Arc::clone(&g),
            vec![C64::new(0.1, 0.0); g.n_points()],
        )
        .unwrap();
        assert!(single_particle_energy(&psi, &v).is_err());
    }
}
