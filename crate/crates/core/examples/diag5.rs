use rayon::prelude::*;
use selfmetro::fock::StateKind;
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::scenario::Scenario;

fn main() {
    let legs: Vec<(StateKind, f64)> = vec![
        (StateKind::Cat, 0.1),
        (StateKind::Coherent, 0.1),
        (StateKind::Cat, 1.0),
        (StateKind::Coherent, 1.0),
    ];
    let results: Vec<_> = legs
        .par_iter()
        .map(|&(kind, g_n)| {
            let mut s = Scenario::paper_default();
            s.state_kind = kind;
            s.n_modes = 4;
            s.g = g_n / s.n_particles as f64;
            s.evolution = EvolutionConfig { dt: 1e-4, t_final: 3.0, sample_stride: 1000, ..Default::default() };
            let prepared = s.prepare().unwrap();
            let prop = prepared.propagator(&s, s.trap.p4).unwrap();
            let t0 = std::time::Instant::now();
            let (_, log) = prop.evolve(&prepared.initial).unwrap();
            (kind, g_n, log.min_two_mode_fraction(), log.energy_drift(), log.max_norm_defect(), t0.elapsed())
        })
        .collect();
    for (kind, g_n, min_tm, drift, norm, el) in results {
        println!(
            "{:8} gN={:3}: min rho_tm = {:.6}, energy drift = {:.3e}, norm defect = {:.3e}  [{:?}]",
            kind.label(), g_n, min_tm, drift, norm, el
        );
    }
}
