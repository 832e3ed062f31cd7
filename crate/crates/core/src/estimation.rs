//! Likelihood-family construction over a tilt grid, maximum-likelihood
//! estimation, Monte Carlo estimator statistics, and Cramer-Rao
//! benchmarking.
//!
//! A family is one evolution per candidate tilt, each reduced to its
//! outcome distribution. The estimator looks up the observed outcome's row
//! slice, takes the grid argmax, and refines it with a parabola through the
//! three points around the peak. The flat family of fixed-orbital
//! interferometry carries no tilt dependence at all and is reported as a
//! no-information error rather than a number.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::likelihood::{
    outcome_distribution_cached, side_probabilities, OutcomeDistribution, PermanentCache,
};
use crate::metrology;
use crate::scenario::Scenario;

/// Provenance and physics metadata of a likelihood family.
#[derive(Debug, Clone)]
pub struct FamilyMeta {
    pub t_final: f64,
    pub n_particles: usize,
    pub g: f64,
    pub state_kind: crate::fock::StateKind,
    pub dt: f64,
    pub half_width: f64,
    pub n_points: usize,
    pub frozen_orbitals: bool,
    /// SHA-256 over the generating scenario and grid.
    pub provenance: String,
}

/// Outcome distributions indexed by candidate tilt, the object the MLE
/// maximizes over.
#[derive(Debug, Clone)]
pub struct LikelihoodFamily {
    pub p4_grid: Vec<f64>,
    pub rows: Vec<OutcomeDistribution>,
    /// Smallest two-mode fraction seen while generating any row.
    pub min_two_mode_fraction: f64,
    pub meta: FamilyMeta,
}

impl LikelihoodFamily {
    pub fn n_particles(&self) -> usize {
        self.meta.n_particles
    }

    pub fn grid_step(&self) -> f64 {
        self.p4_grid[1] - self.p4_grid[0]
    }

    /// Index of a grid value, within floating-point slack.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.p4_grid
            .iter()
            .position(|&p| (p - x).abs() < 1e-12 * (1.0 + x.abs()))
    }

    /// Likelihood slice of one outcome across the grid.
    pub fn outcome_slice(&self, outcome_j: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.probabilities[outcome_j])
            .collect()
    }
}

/// The default candidate grid: 0 to 0.25 in steps of 0.0025 (101 points).
pub fn default_p4_grid() -> Vec<f64> {
    (0..=100).map(|i| i as f64 * 0.0025).collect()
}

fn scenario_fingerprint(scenario: &Scenario, p4_grid: &[f64]) -> String {
    let mut hasher = Sha256::new();
    let e = &scenario.evolution;
    hasher.update(format!(
        "p1={};p2={};p3={};p4={};g={};N={};M={};kind={};L={};pts={};dt={};tf={};frozen={};grid={:?}",
        scenario.trap.p1,
        scenario.trap.p2,
        scenario.trap.p3,
        scenario.trap.p4,
        scenario.g,
        scenario.n_particles,
        scenario.n_modes,
        scenario.state_kind.label(),
        scenario.half_width,
        scenario.n_points,
        e.dt,
        e.t_final,
        e.frozen_orbitals,
        p4_grid,
    ));
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Evolves the scenario once per grid point and collects the outcome
/// distributions. Rows are deterministic in grid order regardless of the
/// parallel schedule.
pub fn build_family(scenario: &Scenario, p4_grid: &[f64]) -> Result<LikelihoodFamily> {
    if p4_grid.len() < 2 {
        return Err(Error::InvalidInput("tilt grid needs at least two points".into()));
    }
    if p4_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("tilt grid must be strictly increasing".into()));
    }
    let prepared = scenario.prepare()?;
    let cache = std::sync::Mutex::new(PermanentCache::new());
    let rows: Vec<(OutcomeDistribution, f64)> = p4_grid
        .par_iter()
        .map(|&p4| -> Result<(OutcomeDistribution, f64)> {
            let prop = prepared.propagator(scenario, p4)?;
            let (state, log) = prop.evolve(&prepared.initial)?;
            let sp = side_probabilities(&state.orbitals);
            let mut cache = cache.lock().expect("permanent cache lock");
            let dist =
                outcome_distribution_cached(&state.coefficients, &state.basis, &sp, &mut cache)?;
            Ok((dist, log.min_two_mode_fraction()))
        })
        .collect::<Result<Vec<_>>>()?;
    let min_two_mode_fraction = rows.iter().map(|(_, f)| *f).fold(f64::INFINITY, f64::min);
    if min_two_mode_fraction < 0.98 {
        log::warn!(
            "two-mode fraction dropped to {min_two_mode_fraction:.4} while building the family"
        );
    }
    Ok(LikelihoodFamily {
        p4_grid: p4_grid.to_vec(),
        rows: rows.into_iter().map(|(d, _)| d).collect(),
        min_two_mode_fraction,
        meta: FamilyMeta {
            t_final: scenario.evolution.t_final,
            n_particles: scenario.n_particles,
            g: scenario.g,
            state_kind: scenario.state_kind,
            dt: scenario.evolution.dt,
            half_width: scenario.half_width,
            n_points: scenario.n_points,
            frozen_orbitals: scenario.evolution.frozen_orbitals,
            provenance: scenario_fingerprint(scenario, p4_grid),
        },
    })
}

/// Grid argmax with parabolic refinement through the three points around
/// the peak; ties resolve toward the smaller tilt with a warning.
fn argmax_refined(grid: &[f64], values: &[f64]) -> Result<f64> {
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(spread > 1e-12) {
        return Err(Error::NoInformation);
    }
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        } else if v == values[best] && i != best {
            log::warn!("degenerate likelihood maximum at {} and {}", grid[best], grid[i]);
        }
    }
    if best == 0 || best == grid.len() - 1 {
        return Ok(grid[best]);
    }
    let h = grid[best + 1] - grid[best];
    let (ym, y0, yp) = (values[best - 1], values[best], values[best + 1]);
    let denom = ym - 2.0 * y0 + yp;
    if denom >= 0.0 {
        // Not a strict local maximum in the quadratic sense.
        return Ok(grid[best]);
    }
    let shift = 0.5 * h * (ym - yp) / denom;
    Ok((grid[best] + shift).clamp(grid[best - 1], grid[best + 1]))
}

/// Single-outcome maximum-likelihood estimate.
pub fn mle_estimate(outcome_j: usize, family: &LikelihoodFamily) -> Result<f64> {
    if outcome_j > family.n_particles() {
        return Err(Error::InvalidInput(format!(
            "outcome index {outcome_j} out of range for N = {}",
            family.n_particles()
        )));
    }
    argmax_refined(&family.p4_grid, &family.outcome_slice(outcome_j))
}

/// Pooled estimate from outcome counts: maximizes the product likelihood
/// (sum of count-weighted log probabilities) over the same grid.
pub fn mle_from_counts(counts: &[u64], family: &LikelihoodFamily) -> Result<f64> {
    if counts.len() != family.n_particles() + 1 {
        return Err(Error::InvalidInput(format!(
            "{} counts for {} outcomes",
            counts.len(),
            family.n_particles() + 1
        )));
    }
    let loglik: Vec<f64> = family
        .rows
        .iter()
        .map(|row| {
            counts
                .iter()
                .zip(&row.probabilities)
                .map(|(&c, &p)| {
                    if c == 0 {
                        0.0
                    } else if p > 0.0 {
                        c as f64 * p.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .sum()
        })
        .collect();
    argmax_refined(&family.p4_grid, &loglik)
}

/// Multinomial draw of `nu` outcomes, reproducible by seed.
pub fn sample_outcomes(dist: &OutcomeDistribution, nu: usize, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; dist.probabilities.len()];
    for _ in 0..nu {
        let mut u: f64 = rng.gen();
        let mut chosen = dist.probabilities.len() - 1;
        for (j, &p) in dist.probabilities.iter().enumerate() {
            if u < p {
                chosen = j;
                break;
            }
            u -= p;
        }
        counts[chosen] += 1;
    }
    counts
}

/// Per-trial seed, decorrelated from the trial index but independent of
/// scheduling.
fn derive_seed(seed: u64, trial: u64) -> u64 {
    // splitmix64 step
    let mut z = seed ^ (trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimator statistics against the true tilt: mean of estimates, its
/// slope across the family grid, the rescaled mean-square deviation, and
/// the Cramer-Rao benchmark.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub x_true: f64,
    pub nu: usize,
    pub trials: usize,
    pub seed: u64,
    /// Single-shot estimate per outcome j = 0..N.
    pub mle_table: Vec<f64>,
    /// Mean of estimates at the true tilt.
    pub moe: f64,
    pub moe_stderr: f64,
    /// |d moe / d X| by central differences on the family grid.
    pub domoe: f64,
    /// Mean-square deviation of `X_est / domoe - X`.
    pub msd: f64,
    pub msd_stderr: f64,
    /// Classical Fisher information at the true tilt, from the family.
    pub fisher: f64,
    pub crlb: f64,
    /// msd / crlb.
    pub ratio: f64,
}

/// Cramer-Rao lower bound `1/(nu F)`; an uninformative family (F = 0)
/// yields the explicit infinity marker.
pub fn cramer_rao_bound(f_x: f64, nu: usize) -> f64 {
    assert!(nu >= 1, "need at least one measurement");
    if f_x <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (nu as f64 * f_x)
    }
}

pub fn estimator_statistics(
    family: &LikelihoodFamily,
    x_true: f64,
    nu: usize,
    trials: usize,
    seed: u64,
) -> Result<EstimationReport> {
    if nu < 1 {
        return Err(Error::InvalidInput("nu must be at least 1".into()));
    }
    let idx = family.index_of(x_true).ok_or_else(|| {
        Error::InvalidInput(format!("true tilt {x_true} is not on the family grid"))
    })?;
    if idx == 0 || idx + 1 >= family.p4_grid.len() {
        return Err(Error::InvalidInput(
            "true tilt needs interior grid neighbors for slope and Fisher estimates".into(),
        ));
    }
    let h = family.grid_step();
    let fisher = metrology::cfi(
        &family.rows[idx + 1],
        &family.rows[idx - 1],
        &family.rows[idx],
        h,
    )
    .value;

    let n_outcomes = family.n_particles() + 1;
    let mle_table: Vec<f64> = (0..n_outcomes)
        .map(|j| mle_estimate(j, family))
        .collect::<Result<Vec<_>>>()?;

    let (moe_grid, moe, moe_stderr, msd_raw, msd_stderr_raw);
    if nu == 1 {
        // Exact expectations over the outcome distribution.
        let expect = |i: usize| -> f64 {
            family.rows[i]
                .probabilities
                .iter()
                .zip(&mle_table)
                .map(|(&p, &est)| p * est)
                .sum()
        };
        moe_grid = [expect(idx - 1), expect(idx + 1)];
        moe = expect(idx);
        moe_stderr = 0.0;
        msd_raw = None;
        msd_stderr_raw = 0.0;
    } else {
        if trials < 2 {
            return Err(Error::InvalidInput("Monte Carlo statistics need trials >= 2".into()));
        }
        // Common per-trial seeds across the three grid legs correlate the
        // draws and steady the central difference.
        let estimate_at = |i: usize| -> Result<Vec<f64>> {
            (0..trials as u64)
                .into_par_iter()
                .map(|trial| {
                    let counts =
                        sample_outcomes(&family.rows[i], nu, derive_seed(seed, trial));
                    mle_from_counts(&counts, family)
                })
                .collect()
        };
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let ests = estimate_at(idx)?;
        let below = estimate_at(idx - 1)?;
        let above = estimate_at(idx + 1)?;
        moe = mean(&ests);
        moe_stderr = (ests.iter().map(|e| (e - moe).powi(2)).sum::<f64>()
            / (trials as f64 * (trials - 1) as f64))
            .sqrt();
        moe_grid = [mean(&below), mean(&above)];
        msd_raw = Some(ests);
        msd_stderr_raw = 0.0;
    }
    let domoe = ((moe_grid[1] - moe_grid[0]) / (2.0 * h)).abs();
    if domoe == 0.0 {
        return Err(Error::NoInformation);
    }

    let (msd, msd_stderr) = match msd_raw {
        None => {
            let msd = family.rows[idx]
                .probabilities
                .iter()
                .zip(&mle_table)
                .map(|(&p, &est)| p * (est / domoe - x_true).powi(2))
                .sum();
            (msd, msd_stderr_raw)
        }
        Some(ests) => {
            let devs: Vec<f64> = ests
                .iter()
                .map(|&e| (e / domoe - x_true).powi(2))
                .collect();
            let msd = devs.iter().sum::<f64>() / devs.len() as f64;
            let stderr = (devs.iter().map(|d| (d - msd).powi(2)).sum::<f64>()
                / (devs.len() as f64 * (devs.len() - 1) as f64))
                .sqrt();
            (msd, stderr)
        }
    };

    let crlb = cramer_rao_bound(fisher, nu);
    Ok(EstimationReport {
        x_true,
        nu,
        trials: if nu == 1 { 0 } else { trials },
        seed,
        mle_table,
        moe,
        moe_stderr,
        domoe,
        msd,
        msd_stderr,
        fisher,
        crlb,
        ratio: msd / crlb,
    })
}
