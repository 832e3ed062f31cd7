//! Probability distribution of left/right particle-count outcomes.
//!
//! Once the orbitals delocalize, a particle occupying orbital j is found on
//! the left or right of the trap center with probabilities given by the
//! orbital's mass on each side. The outcome distribution over
//! `(n_L, n_R) = (N-j, j)` then follows from bosonic counting statistics as
//! a permanent of a matrix assembled from those side probabilities, weighted
//! by the Fock amplitudes.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fock::{one_body_rdm, CoefficientVector, FockBasis};
use crate::grid::ComplexFunction;

/// Hard cap on permanent size; the Ryser scan is O(2^n n).
pub const PERMANENT_CAP: usize = 25;

/// Occupation threshold above which a state no longer counts as two-mode.
pub const MODE_LEAK_THRESHOLD: f64 = 1e-6;

/// Per-orbital probabilities of detection left or right of x = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct SideProbabilities {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl SideProbabilities {
    pub fn n_orbitals(&self) -> usize {
        self.left.len()
    }
}

/// Splits each orbital's density at x = 0 with the dx-weighted sum; a node
/// sitting exactly at the origin (odd grids) contributes half its weight to
/// each side, so left + right reproduces the norm exactly.
pub fn side_probabilities(orbitals: &[ComplexFunction]) -> SideProbabilities {
    let mut left = Vec::with_capacity(orbitals.len());
    let mut right = Vec::with_capacity(orbitals.len());
    for orb in orbitals {
        let grid = orb.grid();
        let dx = grid.spacing();
        let mut l = 0.0;
        let mut r = 0.0;
        for (v, &x) in orb.values().iter().zip(grid.nodes()) {
            let w = v.norm_sqr() * dx;
            if x.abs() < 0.5 * dx {
                l += 0.5 * w;
                r += 0.5 * w;
            } else if x < 0.0 {
                l += w;
            } else {
                r += w;
            }
        }
        left.push(l.clamp(0.0, 1.0));
        right.push(r.clamp(0.0, 1.0));
    }
    SideProbabilities { left, right }
}

/// Permanent by the Ryser formula with Gray-code subset updates,
/// O(2^n n). Exact up to floating-point rounding for the nonnegative
/// matrices used here.
pub fn permanent(matrix: &DMatrix<f64>) -> Result<f64> {
    let n = matrix.nrows();
    if n != matrix.ncols() {
        return Err(Error::InvalidInput(format!(
            "permanent of a {}x{} matrix",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if n > PERMANENT_CAP {
        return Err(Error::InvalidInput(format!(
            "permanent size {n} above the cap of {PERMANENT_CAP}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut row_sums = vec![0.0f64; n];
    let mut total = 0.0f64;
    let mut gray: u64 = 0;
    for iter in 1u64..(1u64 << n) {
        let next = iter ^ (iter >> 1);
        let flipped = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << flipped) != 0;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            let a = matrix[(i, flipped)];
            if added {
                *rs += a;
            } else {
                *rs -= a;
            }
        }
        gray = next;
        let product: f64 = row_sums.iter().product();
        let bits = next.count_ones() as usize;
        // (-1)^(n - |S|)
        if (n - bits) % 2 == 0 {
            total += product;
        } else {
            total -= product;
        }
    }
    Ok(total)
}

/// The N x N matrix whose permanent weighs outcome `(N-j, j)` against
/// configuration `(N-k, k)`: rows are the ordered multiset of N-j L's then
/// j R's, columns the ascending multiset of occupied mode labels, and entry
/// (r, c) is the side probability of that row's side for that column's
/// mode.
pub fn build_outcome_matrix(
    j: usize,
    k: usize,
    n: usize,
    sp: &SideProbabilities,
) -> Result<DMatrix<f64>> {
    if j > n || k > n {
        return Err(Error::InvalidInput(format!(
            "outcome indices j = {j}, k = {k} out of range for N = {n}"
        )));
    }
    if sp.n_orbitals() < 2 {
        return Err(Error::InvalidInput(
            "need side probabilities for two orbitals".into(),
        ));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| {
        let mode = if c < n - k { 0 } else { 1 };
        if r < n - j {
            sp.left[mode]
        } else {
            sp.right[mode]
        }
    }))
}

/// Probabilities over outcomes `(n_L, n_R) = (N-j, j)`, indexed by j.
#[derive(Debug, Clone)]
pub struct OutcomeDistribution {
    pub probabilities: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn n_particles(&self) -> usize {
        self.probabilities.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    /// Outcome counts `(n_L, n_R)` for slot j.
    pub fn outcome(&self, j: usize) -> (usize, usize) {
        (self.n_particles() - j, j)
    }
}

/// Memo for `{V_jk}` permanents, keyed by (j, k) and the two side
/// probabilities quantized at 1e-12. Useful when several tilt candidates
/// share identical orbitals (the frozen-orbital family hits it on every
/// row).
#[derive(Debug, Default)]
pub struct PermanentCache {
    map: HashMap<(u32, u32, u64, u64), f64>,
}

impl PermanentCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn quantize(p: f64) -> u64 {
        (p * 1e12).round() as u64
    }

    fn get_or_compute(
        &mut self,
        j: usize,
        k: usize,
        n: usize,
        sp: &SideProbabilities,
    ) -> Result<f64> {
        let key = (
            j as u32,
            k as u32,
            Self::quantize(sp.left[0]),
            Self::quantize(sp.left[1]),
        );
        if let Some(&v) = self.map.get(&key) {
            return Ok(v);
        }
        let v = permanent(&build_outcome_matrix(j, k, n, sp)?)?;
        self.map.insert(key, v);
        Ok(v)
    }
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `binom(N, j) / N!`, exact in integer arithmetic up to N = 20 and via
/// log-gamma beyond.
fn prefactor(n: usize, j: usize) -> f64 {
    if n <= 20 {
        // binom(n, j) / n! = 1 / (j! (n-j)!)
        let mut denom: u128 = 1;
        for i in 2..=j {
            denom *= i as u128;
        }
        for i in 2..=(n - j) {
            denom *= i as u128;
        }
        1.0 / denom as f64
    } else {
        (-(ln_factorial(j) + ln_factorial(n - j))).exp()
    }
}

fn two_mode_weights(c: &CoefficientVector, basis: &FockBasis) -> Result<Vec<f64>> {
    let n = basis.n_particles();
    if basis.n_modes() == 2 {
        let weights = (0..=n).map(|k| c.amplitudes[k].norm_sqr()).collect();
        return Ok(weights);
    }
    // Project a four-mode state onto the two-mode sector; the occupation of
    // modes 3 and 4 must be negligible.
    let rho = one_body_rdm(c, basis);
    let leak = rho[(2, 2)].re + rho[(3, 3)].re;
    if leak > MODE_LEAK_THRESHOLD {
        return Err(Error::ModeLeakage(leak));
    }
    let mut weights = vec![0.0; n + 1];
    let mut kept = 0.0;
    for (i, cfg) in basis.configs().iter().enumerate() {
        let w = c.amplitudes[i].norm_sqr();
        if cfg[2] == 0 && cfg[3] == 0 {
            weights[cfg[1] as usize] += w;
            kept += w;
        }
    }
    if kept < 1.0 - 1e-12 {
        log::warn!(
            "renormalizing away {:.3e} probability mass outside the two-mode sector",
            1.0 - kept
        );
        weights.iter_mut().for_each(|w| *w /= kept);
    }
    Ok(weights)
}

/// Outcome distribution `P_j = binom(N,j)/N! sum_k |C_k|^2 {V_jk}` from an
/// effectively two-mode state and the instantaneous side probabilities.
pub fn outcome_distribution(
    c: &CoefficientVector,
    basis: &FockBasis,
    sp: &SideProbabilities,
) -> Result<OutcomeDistribution> {
    let mut cache = PermanentCache::new();
    outcome_distribution_cached(c, basis, sp, &mut cache)
}

/// Same as [`outcome_distribution`] but reusing a permanent memo across
/// calls.
pub fn outcome_distribution_cached(
    c: &CoefficientVector,
    basis: &FockBasis,
    sp: &SideProbabilities,
    cache: &mut PermanentCache,
) -> Result<OutcomeDistribution> {
    let n = basis.n_particles();
    if n > PERMANENT_CAP {
        return Err(Error::InvalidInput(format!(
            "outcome distribution limited to N <= {PERMANENT_CAP}"
        )));
    }
    let weights = two_mode_weights(c, basis)?;
    let mut probabilities = vec![0.0; n + 1];
    for (j, p) in probabilities.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            acc += w * cache.get_or_compute(j, k, n, sp)?;
        }
        *p = (prefactor(n, j) * acc).max(0.0);
    }
    Ok(OutcomeDistribution { probabilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_spin_coherent, enumerate_configs};
    use crate::grid::{build_grid, eval_potential, localized_orbitals, lowest_eigenstates, PotentialParams};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64 as C64;
    use rand::prelude::*;

    #[test]
    fn side_probabilities_of_prepared_orbitals() {
        let grid = build_grid(8.0, 257).unwrap();
        let params = PotentialParams {
            p1: 0.5,
            p2: 50.0,
            p3: 1.0,
            p4: 0.0,
        };
        let v = eval_potential(&params, &grid).unwrap();
        let pairs = lowest_eigenstates(&v, 2).unwrap();
        let (l, r) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
        let sp = side_probabilities(&[l.to_complex(), r.to_complex()]);
        assert!(sp.left[0] > 0.95, "P_L1 = {}", sp.left[0]);
        assert!(sp.right[1] > 0.95, "P_R2 = {}", sp.right[1]);
        for j in 0..2 {
            assert_abs_diff_eq!(sp.left[j] + sp.right[j], 1.0, epsilon = 1e-10);
        }
        // An even function splits half and half.
        let even = pairs[0].1.to_complex();
        let sp = side_probabilities(&[even]);
        assert_abs_diff_eq!(sp.left[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sp.right[0], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn permanent_small_cases() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_abs_diff_eq!(permanent(&m).unwrap(), 2.0, epsilon = 1e-14);
        let m = DMatrix::<f64>::identity(4, 4);
        assert_abs_diff_eq!(permanent(&m).unwrap(), 1.0, epsilon = 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_abs_diff_eq!(permanent(&m).unwrap(), 10.0, epsilon = 1e-13);
        assert_abs_diff_eq!(permanent(&DMatrix::<f64>::zeros(0, 0)).unwrap(), 1.0);
        assert!(permanent(&DMatrix::<f64>::zeros(26, 26)).is_err());
        assert!(permanent(&DMatrix::<f64>::zeros(2, 3)).is_err());
    }

    fn permanent_brute_force(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        let mut cols: Vec<usize> = (0..n).collect();
        let mut total = 0.0;
        permute(&mut cols, 0, &mut |perm| {
            total += (0..n).map(|i| m[(i, perm[i])]).product::<f64>();
        });
        total
    }

    fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            visit(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permute(items, k + 1, visit);
            items.swap(k, i);
        }
    }

    #[test]
    fn permanent_matches_permutation_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for n in 1..=7 {
            for _ in 0..(if n == 7 { 10 } else { 20 }) {
                let m = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
                let fast = permanent(&m).unwrap();
                let slow = permanent_brute_force(&m);
                assert!(
                    ((fast - slow) / slow).abs() < 1e-10,
                    "n = {n}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn permanent_permutation_invariance_and_row_linearity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 5;
        let m = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
        let base = permanent(&m).unwrap();
        // Swap two rows and two columns.
        let mut rows = m.clone();
        rows.swap_rows(1, 3);
        assert_abs_diff_eq!(permanent(&rows).unwrap(), base, epsilon = 1e-11);
        let mut cols = m.clone();
        cols.swap_columns(0, 4);
        assert_abs_diff_eq!(permanent(&cols).unwrap(), base, epsilon = 1e-11);
        // Scaling one row scales the permanent.
        let mut scaled = m.clone();
        for c in 0..n {
            scaled[(2, c)] *= 3.0;
        }
        assert_abs_diff_eq!(permanent(&scaled).unwrap(), 3.0 * base, epsilon = 1e-10);
    }

    fn toy_sp(pl1: f64, pl2: f64) -> SideProbabilities {
        SideProbabilities {
            left: vec![pl1, pl2],
            right: vec![1.0 - pl1, 1.0 - pl2],
        }
    }

    #[test]
    fn outcome_matrix_worked_examples() {
        let sp = toy_sp(0.8, 0.3);
        // N = 2, j = 1, k = 2: both columns mode 2, rows L then R.
        let m = build_outcome_matrix(1, 2, 2, &sp).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.3, 0.3, 0.7, 0.7]));
        assert_abs_diff_eq!(
            permanent(&m).unwrap(),
            2.0 * 0.3 * 0.7,
            epsilon = 1e-14
        );
        // N = 2, j = 0, k = 0: all entries P_L1.
        let m = build_outcome_matrix(0, 0, 2, &sp).unwrap();
        assert!(m.iter().all(|&x| x == 0.8));
        assert_abs_diff_eq!(permanent(&m).unwrap(), 2.0 * 0.8 * 0.8, epsilon = 1e-14);
        // N = 3, j = 1, k = 2: permanent 4 P_L1 P_L2 P_R2 + 2 P_L2^2 P_R1.
        let m = build_outcome_matrix(1, 2, 3, &sp).unwrap();
        let expect = 4.0 * 0.8 * 0.3 * 0.7 + 2.0 * 0.3 * 0.3 * 0.2;
        assert_abs_diff_eq!(permanent(&m).unwrap(), expect, epsilon = 1e-13);
        assert!(build_outcome_matrix(4, 0, 3, &sp).is_err());
    }

    fn random_two_mode(n: usize, rng: &mut impl Rng) -> (CoefficientVector, std::sync::Arc<FockBasis>) {
        let basis = enumerate_configs(n, 2).unwrap();
        let mut c = CoefficientVector::new(DVector::from_fn(basis.len(), |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        }));
        c.normalize();
        (c, basis)
    }

    #[test]
    fn localized_limit_recovers_fock_weights() {
        let basis = enumerate_configs(4, 2).unwrap();
        let c = build_spin_coherent(&basis);
        let sp = toy_sp(1.0, 0.0);
        let dist = outcome_distribution(&c, &basis, &sp).unwrap();
        for j in 0..=4 {
            assert_abs_diff_eq!(
                dist.probabilities[j],
                c.amplitudes[j].norm_sqr(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn explicit_n2_formulas() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let (c, basis) = random_two_mode(2, &mut rng);
        let sp = toy_sp(0.77, 0.21);
        let (pl1, pl2) = (sp.left[0], sp.left[1]);
        let (pr1, pr2) = (sp.right[0], sp.right[1]);
        let w: Vec<f64> = (0..3).map(|k| c.amplitudes[k].norm_sqr()).collect();
        let dist = outcome_distribution(&c, &basis, &sp).unwrap();
        let p0 = w[0] * pl1 * pl1 + w[1] * pl1 * pl2 + w[2] * pl2 * pl2;
        let p1 = 2.0 * w[0] * pl1 * pr1
            + w[1] * (pl1 * pr2 + pr1 * pl2)
            + 2.0 * w[2] * pl2 * pr2;
        let p2 = w[0] * pr1 * pr1 + w[1] * pr1 * pr2 + w[2] * pr2 * pr2;
        assert_abs_diff_eq!(dist.probabilities[0], p0, epsilon = 1e-14);
        assert_abs_diff_eq!(dist.probabilities[1], p1, epsilon = 1e-14);
        assert_abs_diff_eq!(dist.probabilities[2], p2, epsilon = 1e-14);
    }

    #[test]
    fn normalization_over_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=12);
            let (c, basis) = random_two_mode(n, &mut rng);
            let sp = toy_sp(rng.gen(), rng.gen());
            let dist = outcome_distribution(&c, &basis, &sp).unwrap();
            assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-10);
            assert!(dist.probabilities.iter().all(|&p| p >= 0.0));
        }
    }

    /// Assign each particle of each configuration to a side independently
    /// and tally the right-well counts; 2^N literal enumeration.
    fn enumeration_oracle(
        weights: &[f64],
        sp: &SideProbabilities,
        n: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; n + 1];
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for mask in 0u32..(1 << n) {
                let mut prob = 1.0;
                for p in 0..n {
                    let mode = if p < n - k { 0 } else { 1 };
                    if mask & (1 << p) != 0 {
                        prob *= sp.right[mode];
                    } else {
                        prob *= sp.left[mode];
                    }
                }
                out[mask.count_ones() as usize] += w * prob;
            }
        }
        out
    }

    #[test]
    fn matches_two_power_n_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..10 {
                let (c, basis) = random_two_mode(n, &mut rng);
                let sp = toy_sp(rng.gen(), rng.gen());
                let weights: Vec<f64> =
                    (0..=n).map(|k| c.amplitudes[k].norm_sqr()).collect();
                let dist = outcome_distribution(&c, &basis, &sp).unwrap();
                let oracle = enumeration_oracle(&weights, &sp, n);
                for j in 0..=n {
                    assert!(
                        (dist.probabilities[j] - oracle[j]).abs() < 1e-10,
                        "N = {n}, j = {j}: {} vs {}",
                        dist.probabilities[j],
                        oracle[j]
                    );
                }
            }
        }
    }

    #[test]
    fn left_shift_moves_mass_to_low_j() {
        // All particles in mode 1: raising P_L1 shifts outcomes toward j = 0.
        let basis = enumerate_configs(6, 2).unwrap();
        let mut amps = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
        amps[0] = C64::new(1.0, 0.0);
        let c = CoefficientVector::new(amps);
        let lo = outcome_distribution(&c, &basis, &toy_sp(0.6, 0.5)).unwrap();
        let hi = outcome_distribution(&c, &basis, &toy_sp(0.9, 0.5)).unwrap();
        assert!(hi.probabilities[0] > lo.probabilities[0]);
        let mean = |d: &OutcomeDistribution| {
            d.probabilities
                .iter()
                .enumerate()
                .map(|(j, p)| j as f64 * p)
                .sum::<f64>()
        };
        assert!(mean(&hi) < mean(&lo));
    }

    #[test]
    fn four_mode_leak_gate() {
        let basis = enumerate_configs(3, 4).unwrap();
        // Pure two-mode content inside a four-mode basis.
        let mut amps = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
        let idx = basis.index_of(&[2, 1, 0, 0]).unwrap();
        amps[idx] = C64::new(1.0, 0.0);
        let c = CoefficientVector::new(amps);
        let sp = SideProbabilities {
            left: vec![0.9, 0.2, 0.5, 0.5],
            right: vec![0.1, 0.8, 0.5, 0.5],
        };
        let dist = outcome_distribution(&c, &basis, &sp).unwrap();
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-12);

        // Occupation in mode 3 above the threshold is rejected.
        let mut amps = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
        let a = basis.index_of(&[2, 1, 0, 0]).unwrap();
        let b = basis.index_of(&[2, 0, 1, 0]).unwrap();
        amps[a] = C64::new((1.0f64 - 1e-3).sqrt(), 0.0);
        amps[b] = C64::new(1e-3f64.sqrt(), 0.0);
        let c = CoefficientVector::new(amps);
        assert!(matches!(
            outcome_distribution(&c, &basis, &sp),
            Err(Error::ModeLeakage(_))
        ));
    }

    #[test]
    fn cache_reuses_identical_side_probabilities() {
        let basis = enumerate_configs(5, 2).unwrap();
        let c = build_spin_coherent(&basis);
        let sp = toy_sp(0.73, 0.22);
        let mut cache = PermanentCache::new();
        let a = outcome_distribution_cached(&c, &basis, &sp, &mut cache).unwrap();
        let hits_before = cache.map.len();
        let b = outcome_distribution_cached(&c, &basis, &sp, &mut cache).unwrap();
        assert_eq!(cache.map.len(), hits_before);
        for j in 0..=5 {
            assert_eq!(a.probabilities[j].to_bits(), b.probabilities[j].to_bits());
        }
    }
}
