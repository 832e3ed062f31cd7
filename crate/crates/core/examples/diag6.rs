use rayon::prelude::*;
use selfmetro::fock::StateKind;
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::scenario::Scenario;

fn main() {
    // Longer window + frozen-orbital comparison for the gN=1 depletion.
    let legs: Vec<(StateKind, bool, f64)> = vec![
        (StateKind::Cat, false, 10.0),
        (StateKind::Coherent, false, 10.0),
        (StateKind::Cat, true, 3.0),
        (StateKind::Coherent, true, 3.0),
    ];
    let results: Vec<_> = legs
        .par_iter()
        .map(|&(kind, frozen, t_final)| {
            let mut s = Scenario::paper_default();
            s.state_kind = kind;
            s.n_modes = 4;
            s.g = 1.0 / s.n_particles as f64;
            s.evolution = EvolutionConfig { dt: 1e-4, t_final, sample_stride: 2000, frozen_orbitals: frozen, ..Default::default() };
            let prepared = s.prepare().unwrap();
            let prop = prepared.propagator(&s, s.trap.p4).unwrap();
            let (_, log) = prop.evolve(&prepared.initial).unwrap();
            let min_tm = log.min_two_mode_fraction();
            let t_min = log.samples.iter().min_by(|a, b| a.two_mode_fraction.partial_cmp(&b.two_mode_fraction).unwrap()).unwrap().t;
            (kind, frozen, t_final, min_tm, t_min)
        })
        .collect();
    for (kind, frozen, t_final, min_tm, t_min) in results {
        println!(
            "{:8} frozen={:5} t_final={:4}: min rho_tm = {:.6} (at t = {:.2})",
            kind.label(), frozen, t_final, min_tm, t_min
        );
    }
}
