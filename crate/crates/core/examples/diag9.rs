use selfmetro::fock::StateKind;
use selfmetro::likelihood::{outcome_distribution, side_probabilities};
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::scenario::Scenario;

fn main() {
    let mut s = Scenario::paper_default();
    s.state_kind = StateKind::Coherent;
    s.evolution = EvolutionConfig { dt: 1e-4, t_final: 1.77, sample_stride: 1770, ..Default::default() };
    let prepared = s.prepare().unwrap();

    // Trace PL1, PL2 over time at p4 = 0.1
    let prop = prepared.propagator(&s, 0.1).unwrap();
    let (_, log) = prop.evolve(&prepared.initial).unwrap();
    println!("t, PL1, PL2, rho1, rho2, tau_mag:");
    for smp in &log.samples {
        println!("{:5.2} {:.4} {:.4} {:.4} {:.4} {:.4}", smp.t, smp.side[0].0, smp.side[1].0, smp.occupations[0], smp.occupations[1], smp.tunneling_magnitude);
    }

    for p4 in [0.0, 0.05, 0.10, 0.15, 0.20] {
        let prop = prepared.propagator(&s, p4).unwrap();
        let (state, _) = prop.evolve(&prepared.initial).unwrap();
        let sp = side_probabilities(&state.orbitals);
        let dist = outcome_distribution(&state.coefficients, &state.basis, &sp).unwrap();
        let weights: Vec<f64> = (0..=10).map(|k| state.coefficients.amplitudes[k].norm_sqr()).collect();
        println!("\np4 = {p4}: PL1 = {:.4}, PL2 = {:.4}", sp.left[0], sp.left[1]);
        println!("  |C_k|^2 = {}", weights.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>().join(" "));
        println!("  P(j)    = {}", dist.probabilities.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" "));
        let mean_j: f64 = dist.probabilities.iter().enumerate().map(|(j, p)| j as f64 * p).sum();
        println!("  mean n_R = {mean_j:.3}");
    }
}
