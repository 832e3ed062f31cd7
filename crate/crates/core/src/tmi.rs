//! Conventional fixed-orbital two-mode interferometry: extraction of the
//! two-site Bose-Hubbard parameters from the localized orbitals, the
//! dephasing-only analytic evolution, analytic Fisher-information limits,
//! and the chain rule from the inter-well offset to the tilt slope.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{gram_defect, orbital_integrals, CoefficientVector, StateKind};
use crate::grid::{ComplexFunction, RealFunction};

/// Parameters of `H = -tau J_x + eps J_z + U J_z^2 + const`.
///
/// The mapping is pinned by requiring the full two-mode many-body matrix to
/// equal this form plus the recorded constant; `constant` is kept so tests
/// and phase alignments can use the complete identity.
#[derive(Debug, Clone, Copy)]
pub struct BoseHubbardParams {
    /// Tunneling amplitude `tau = -2 Re <phi_L|h|phi_R>`.
    pub tunneling: f64,
    /// Magnitude `2 |<phi_L|h|phi_R>|`; equals |tunneling| for real
    /// orbitals, and is the meaningful scalar once evolved orbitals carry
    /// phases.
    pub tunneling_magnitude: f64,
    /// Inter-well offset `eps`, including the interaction-induced shift.
    pub offset: f64,
    /// On-site interaction coupling `U`.
    pub interaction: f64,
    /// Fock-diagonal constant completing the identity with the full matrix.
    pub constant: f64,
}

/// Extracts `(tau, eps, U)` from an orthonormal localized pair.
///
/// Writing `n_L = N/2 + m`, `n_R = N/2 - m`, the diagonal of the two-mode
/// many-body Hamiltonian collapses to `const + eps m + U m^2` with
///   eps = h_LL - h_RR + (N-1)(U_L - U_R)/2,
///   U   = (U_L + U_R)/2 - 2 W_X,
/// where `U_i = g int |phi_i|^4` and `W_X = g int |phi_L|^2 |phi_R|^2`.
pub fn bose_hubbard_params(
    phi_l: &ComplexFunction,
    phi_r: &ComplexFunction,
    potential: &RealFunction,
    g: f64,
    n_particles: usize,
) -> Result<BoseHubbardParams> {
    let orbitals = [phi_l.clone(), phi_r.clone()];
    let defect = gram_defect(&orbitals);
    if defect > 1e-6 {
        return Err(Error::NonOrthonormal(defect));
    }
    let ints = orbital_integrals(&orbitals, potential, g)?;
    let h_ll = ints.h[(0, 0)].re;
    let h_rr = ints.h[(1, 1)].re;
    let h_lr = ints.h[(0, 1)];
    let u_l = ints.w(0, 0, 0, 0).re;
    let u_r = ints.w(1, 1, 1, 1).re;
    let w_x = ints.w(0, 1, 0, 1).re;
    let n = n_particles as f64;
    Ok(BoseHubbardParams {
        tunneling: -2.0 * h_lr.re,
        tunneling_magnitude: 2.0 * h_lr.norm(),
        offset: h_ll - h_rr + (n - 1.0) * (u_l - u_r) / 2.0,
        interaction: (u_l + u_r) / 2.0 - 2.0 * w_x,
        constant: (h_ll + h_rr) * n / 2.0
            + (u_l + u_r) / 2.0 * (n * n / 4.0 - n / 2.0)
            + w_x * n * n / 2.0,
    })
}

/// Matrix of `-tau J_x + eps J_z + U J_z^2` over the two-mode basis
/// `|N-k, k>`, k = 0..N.
pub fn bose_hubbard_matrix(params: &BoseHubbardParams, n_particles: usize) -> DMatrix<C64> {
    let dim = n_particles + 1;
    let n = n_particles as f64;
    let mut ham = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for k in 0..dim {
        let m = (n - 2.0 * k as f64) / 2.0;
        ham[(k, k)] = C64::new(params.offset * m + params.interaction * m * m, 0.0);
        if k + 1 < dim {
            // J_x couples |N-k,k> and |N-k-1,k+1> with strength
            // sqrt((N-k)(k+1))/2.
            let jx = 0.5 * ((n - k as f64) * (k as f64 + 1.0)).sqrt();
            ham[(k, k + 1)] = C64::new(-params.tunneling * jx, 0.0);
            ham[(k + 1, k)] = C64::new(-params.tunneling * jx, 0.0);
        }
    }
    ham
}

/// Dephasing-only evolution: each coefficient acquires the phase
/// `exp(-i eps m t) exp(-i U m^2 t)` with `m = (N - 2k)/2`. Magnitudes are
/// exactly preserved, which is why the fixed-orbital likelihood carries no
/// tilt information.
pub fn tmi_evolve(
    c0: &CoefficientVector,
    offset: f64,
    interaction: f64,
    t: f64,
) -> CoefficientVector {
    let n = c0.len() - 1;
    let mut out = c0.clone();
    for k in 0..=n {
        let m = (n as f64 - 2.0 * k as f64) / 2.0;
        let phase = -(offset * m + interaction * m * m) * t;
        out.amplitudes[k] *= C64::from_polar(1.0, phase);
    }
    out
}

/// Analytic quantum Fisher information for the offset parameter under pure
/// dephasing: `4 Var(J_z) t^2`. The cat state reaches the Heisenberg limit
/// `N^2 t^2`; the equal spin coherent state gives the shot-noise limit
/// `N t^2`.
pub fn tmi_qfi_analytic(kind: StateKind, n_particles: usize, t: f64) -> f64 {
    let n = n_particles as f64;
    match kind {
        StateKind::Cat => n * n * t * t,
        StateKind::Coherent => n * t * t,
    }
}

/// Chain rule from offset to tilt: `F_p4 = F_eps (d eps / d p4)^2`.
pub fn chain_rule_qfi(f_eps: f64, deps_dp4: f64) -> f64 {
    f_eps * deps_dp4 * deps_dp4
}

/// `d eps / d p4` at fixed orbitals: the difference of per-orbital dipole
/// moments, since the tilt enters each single-particle energy as
/// `p4 <x>_i`.
pub fn offset_slope(phi_l: &ComplexFunction, phi_r: &ComplexFunction) -> f64 {
    phi_l.dipole() - phi_r.dipole()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_noon, enumerate_configs, hamiltonian_matrix};
    use crate::grid::{
        build_grid, eval_potential, localized_orbitals, lowest_eigenstates, PotentialParams,
    };
    use approx::assert_abs_diff_eq;

    struct Setup {
        potential_tilted: RealFunction,
        potential_flat: RealFunction,
        left: ComplexFunction,
        right: ComplexFunction,
    }

    fn prepare(p4: f64) -> Setup {
        let grid = build_grid(8.0, 257).unwrap();
        let params = PotentialParams {
            p1: 0.5,
            p2: 50.0,
            p3: 1.0,
            p4: 0.0,
        };
        let flat = eval_potential(&params, &grid).unwrap();
        let pairs = lowest_eigenstates(&flat, 2).unwrap();
        let (l, r) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
        Setup {
            potential_tilted: eval_potential(&params.with_tilt(p4), &grid).unwrap(),
            potential_flat: flat,
            left: l.to_complex(),
            right: r.to_complex(),
        }
    }

    #[test]
    fn paper_parameter_windows() {
        let s = prepare(0.1);
        let bh = bose_hubbard_params(&s.left, &s.right, &s.potential_tilted, 0.01, 10).unwrap();
        assert!(
            bh.offset > -0.7 && bh.offset < -0.6,
            "eps = {}",
            bh.offset
        );
        assert!(
            bh.interaction > 0.002 && bh.interaction < 0.03,
            "U = {}",
            bh.interaction
        );
        // Tunneling at the paper barrier is exponentially small next to the
        // other couplings.
        assert!(bh.tunneling_magnitude < 1e-9 * bh.offset.abs());
        assert!(bh.tunneling_magnitude < 1e-9 * bh.interaction.abs());
    }

    #[test]
    fn symmetric_well_has_no_offset() {
        let s = prepare(0.0);
        let bh = bose_hubbard_params(&s.left, &s.right, &s.potential_flat, 0.01, 10).unwrap();
        assert_abs_diff_eq!(bh.offset, 0.0, epsilon = 1e-8);
    }

    #[test]
    fn rejects_non_orthonormal_pair() {
        let s = prepare(0.0);
        assert!(matches!(
            bose_hubbard_params(&s.left, &s.left, &s.potential_flat, 0.01, 10),
            Err(Error::NonOrthonormal(_))
        ));
    }

    #[test]
    fn full_matrix_equals_bose_hubbard_plus_constant() {
        let s = prepare(0.1);
        for n in [2usize, 6, 10] {
            let basis = enumerate_configs(n, 2).unwrap();
            let orbitals = [s.left.clone(), s.right.clone()];
            let full =
                hamiltonian_matrix(&orbitals, &s.potential_tilted, 0.01, &basis).unwrap();
            let bh = bose_hubbard_params(&s.left, &s.right, &s.potential_tilted, 0.01, n)
                .unwrap();
            let model = bose_hubbard_matrix(&bh, n);
            let mut worst = 0.0f64;
            for i in 0..basis.len() {
                for j in 0..basis.len() {
                    let shift = if i == j {
                        C64::new(bh.constant, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    worst = worst.max((full[(i, j)] - model[(i, j)] - shift).norm());
                }
            }
            assert!(worst < 1e-10, "N = {n}: worst defect {worst:.3e}");
        }
    }

    #[test]
    fn dephasing_preserves_magnitudes() {
        let basis = enumerate_configs(4, 2).unwrap();
        let c0 = build_noon(&basis);
        let c_t = tmi_evolve(&c0, -0.65, 0.005, 1.77);
        for k in 0..c0.len() {
            assert_abs_diff_eq!(
                c_t.amplitudes[k].norm(),
                c0.amplitudes[k].norm(),
                epsilon = 1e-15
            );
        }
        let id = tmi_evolve(&c0, -0.65, 0.005, 0.0);
        for k in 0..c0.len() {
            assert!((id.amplitudes[k] - c0.amplitudes[k]).norm() < 1e-15);
        }
    }

    #[test]
    fn dephasing_phases_match_direct_formula() {
        // N = 2, eps = 1, U = 0, t = pi: phases (e^{-i pi}, 1, e^{i pi}).
        let basis = enumerate_configs(2, 2).unwrap();
        let mut c0 = build_noon(&basis);
        c0.amplitudes[1] = C64::new(0.5, 0.0);
        c0.normalize();
        let c_t = tmi_evolve(&c0, 1.0, 0.0, std::f64::consts::PI);
        let expected = [
            C64::from_polar(1.0, -std::f64::consts::PI),
            C64::new(1.0, 0.0),
            C64::from_polar(1.0, std::f64::consts::PI),
        ];
        for k in 0..3 {
            let ratio = c_t.amplitudes[k] / c0.amplitudes[k];
            if c0.amplitudes[k].norm() > 0.0 {
                assert!((ratio - expected[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_qfi_limits() {
        assert_abs_diff_eq!(tmi_qfi_analytic(StateKind::Cat, 10, 1.0), 100.0);
        assert_abs_diff_eq!(tmi_qfi_analytic(StateKind::Coherent, 10, 1.0), 10.0);
        assert_abs_diff_eq!(tmi_qfi_analytic(StateKind::Cat, 7, 0.0), 0.0);
        // Heisenberg over shot-noise ratio is N at any t > 0.
        for n in [2usize, 5, 12] {
            for t in [0.3, 1.0, 2.0] {
                let ratio = tmi_qfi_analytic(StateKind::Cat, n, t)
                    / tmi_qfi_analytic(StateKind::Coherent, n, t);
                assert_abs_diff_eq!(ratio, n as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn chain_rule_arithmetic() {
        assert_abs_diff_eq!(chain_rule_qfi(100.0, 2.0), 400.0);
    }

    #[test]
    fn offset_slope_matches_finite_difference() {
        let s = prepare(0.0);
        let slope = offset_slope(&s.left, &s.right);
        // Central difference of eps over p4.
        let delta = 1e-4;
        let grid = s.left.grid();
        let params = PotentialParams {
            p1: 0.5,
            p2: 50.0,
            p3: 1.0,
            p4: 0.0,
        };
        let vp = eval_potential(&params.with_tilt(delta), grid).unwrap();
        let vm = eval_potential(&params.with_tilt(-delta), grid).unwrap();
        let ep = bose_hubbard_params(&s.left, &s.right, &vp, 0.01, 10)
            .unwrap()
            .offset;
        let em = bose_hubbard_params(&s.left, &s.right, &vm, 0.01, 10)
            .unwrap()
            .offset;
        let fd = (ep - em) / (2.0 * delta);
        assert!(
            ((slope - fd) / fd).abs() < 1e-6,
            "dipole slope {slope} vs fd {fd}"
        );
        // Mirror-symmetric pair: swapping sides flips the sign.
        assert_abs_diff_eq!(offset_slope(&s.right, &s.left), -slope, epsilon = 1e-12);
        assert!(slope < 0.0, "left well at x < 0 gives negative slope");
    }
}
