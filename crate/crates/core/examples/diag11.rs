// Exact two-boson evolution on the (x1, x2) grid vs the M=2 MCTDH engine.
use num_complex::Complex64 as C64;
use selfmetro::fock::StateKind;
use selfmetro::grid::*;
use selfmetro::mctdh::{EvolutionConfig, ManyBodyState};
use selfmetro::scenario::Scenario;

struct Exact2B {
    n: usize,
    dx: f64,
    v: Vec<f64>,   // one-body potential (tilted)
    g_eff: f64,    // g / dx on the diagonal
    psi: Vec<C64>, // n*n
}

impl Exact2B {
    fn apply_h(&self, psi: &[C64], out: &mut [C64]) {
        let n = self.n;
        let c = 0.5 / (self.dx * self.dx);
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                let mut acc = (2.0 * c + 2.0 * c + self.v[i] + self.v[j]) * psi[idx];
                if i > 0 { acc -= c * psi[idx - n]; }
                if i + 1 < n { acc -= c * psi[idx + n]; }
                if j > 0 { acc -= c * psi[idx - 1]; }
                if j + 1 < n { acc -= c * psi[idx + 1]; }
                if i == j { acc += self.g_eff * psi[idx]; }
                out[idx] = acc;
            }
        }
    }

    fn rk4_step(&mut self, dt: f64) {
        let n2 = self.n * self.n;
        let mut k1 = vec![C64::new(0.0, 0.0); n2];
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut tmp = k1.clone();
        self.apply_h(&self.psi, &mut k1);
        for i in 0..n2 { tmp[i] = self.psi[i] - C64::new(0.0, 0.5 * dt) * k1[i]; }
        self.apply_h(&tmp, &mut k2);
        for i in 0..n2 { tmp[i] = self.psi[i] - C64::new(0.0, 0.5 * dt) * k2[i]; }
        self.apply_h(&tmp, &mut k3);
        for i in 0..n2 { tmp[i] = self.psi[i] - C64::new(0.0, dt) * k3[i]; }
        self.apply_h(&tmp, &mut k4);
        let sixth = dt / 6.0;
        for i in 0..n2 {
            let deriv = k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i];
            self.psi[i] -= C64::new(0.0, sixth) * deriv;
        }
    }

    fn left_mass(&self, nodes: &[f64]) -> f64 {
        // expectation of n_L / N: integral over x1 < 0 of the one-body density
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let w1 = if nodes[i].abs() < 0.5 * self.dx { 0.5 } else if nodes[i] < 0.0 { 1.0 } else { 0.0 };
            if w1 == 0.0 { continue; }
            for j in 0..n {
                acc += w1 * self.psi[i * n + j].norm_sqr();
            }
        }
        acc * self.dx * self.dx
    }

    fn quadrant_probs(&self, nodes: &[f64]) -> [f64; 3] {
        let n = self.n;
        let mut p = [0.0f64; 3]; // (2,0), (1,1), (0,2)
        for i in 0..n {
            let w1 = if nodes[i].abs() < 0.5 * self.dx { 0.5 } else if nodes[i] < 0.0 { 1.0 } else { 0.0 };
            for j in 0..n {
                let w2 = if nodes[j].abs() < 0.5 * self.dx { 0.5 } else if nodes[j] < 0.0 { 1.0 } else { 0.0 };
                let w = self.psi[i * n + j].norm_sqr() * self.dx * self.dx;
                p[0] += w1 * w2 * w;
                p[1] += (w1 * (1.0 - w2) + (1.0 - w1) * w2) * w;
                p[2] += (1.0 - w1) * (1.0 - w2) * w;
            }
        }
        p
    }
}

fn main() {
    let n_particles = 2;
    let g = 0.05; // gN = 0.1
    let p4 = 0.1;
    let mut s = Scenario::paper_default();
    s.state_kind = StateKind::Coherent;
    s.n_particles = n_particles;
    s.g = g;
    s.evolution = EvolutionConfig { dt: 1e-4, t_final: 1.77, sample_stride: 4425, ..Default::default() };
    let prepared = s.prepare().unwrap();
    let grid = &prepared.grid;
    let n = grid.n_points();
    let dx = grid.spacing();

    // Exact initial state: symmetrized coherent state = ((phi_L + phi_R)/sqrt2)^{\otimes 2}
    let phi_l = prepared.initial.orbitals[0].values();
    let phi_r = prepared.initial.orbitals[1].values();
    let plus: Vec<C64> = phi_l.iter().zip(phi_r).map(|(a, b)| (a + b) / C64::new(2f64.sqrt(), 0.0)).collect();
    let mut psi = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            psi[i * n + j] = plus[i] * plus[j];
        }
    }
    let norm: f64 = psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx * dx;
    let corr = norm.sqrt();
    psi.iter_mut().for_each(|v| *v /= corr);

    let tilted = eval_potential(&s.trap.with_tilt(p4), grid).unwrap();
    let mut exact = Exact2B { n, dx, v: tilted.values().to_vec(), g_eff: g / dx, psi };

    // MCTDH side
    let prop = prepared.propagator(&s, p4).unwrap();
    let mut stepper = prop.stepper(&prepared.initial);

    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>28}", "t", "left_exact", "left_mctdh", "occ2_exact", "occ2_mctdh", "P(2,0),P(1,1),P(0,2) exact | mctdh-permanent");
    let steps_per = 4425;
    for block in 0..=4 {
        if block > 0 {
            for _ in 0..steps_per {
                exact.rk4_step(1e-4);
            }
            stepper.advance(steps_per).unwrap();
        }
        let t = 1e-4 * (block * steps_per) as f64;
        // exact one-body density eigenvalues: rho(x,x') = 2 int psi*(x',y) psi(x,y) dy... use occupations via SVD of psi matrix
        // psi symmetric matrix: one-body rdm = 2 * psi psi^dagger (dx weighting)
        // natural occupations = 2 * squared singular values * dx^2... compute top-2 via power iteration would be heavy; use Schmidt through Gram of rows? n=257: do full SVD? skip: use left-mass + quadrants.
        let le = exact.left_mass(grid.nodes());
        let state: &ManyBodyState = &stepper.state;
        let sp = selfmetro::likelihood::side_probabilities(&state.orbitals);
        let dist = selfmetro::likelihood::outcome_distribution(&state.coefficients, &state.basis, &sp).unwrap();
        let lm_mctdh: f64 = {
            // <n_L>/N from the outcome distribution
            let mean_nl: f64 = dist.probabilities.iter().enumerate().map(|(j, p)| (2 - j) as f64 * p).sum();
            mean_nl / 2.0
        };
        let pq = exact.quadrant_probs(grid.nodes());
        println!(
            "{t:6.2} {le:12.6} {lm_mctdh:12.6} {:>12} {:>12} [{:.4} {:.4} {:.4}] | [{:.4} {:.4} {:.4}]",
            "-", "-",
            pq[0], pq[1], pq[2],
            dist.probabilities[0], dist.probabilities[1], dist.probabilities[2]
        );
    }
}
