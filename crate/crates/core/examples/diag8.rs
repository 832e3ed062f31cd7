use selfmetro::estimation::*;
use selfmetro::fock::StateKind;
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::scenario::Scenario;

fn main() {
    let mut s = Scenario::paper_default();
    s.state_kind = StateKind::Coherent;
    s.evolution = EvolutionConfig { dt: 1e-4, t_final: 1.77, sample_stride: usize::MAX, ..Default::default() };
    let t0 = std::time::Instant::now();
    let family = build_family(&s, &default_p4_grid()).unwrap();
    println!("family built in {:?}", t0.elapsed());
    println!("min rho_tm = {:.6}", family.min_two_mode_fraction);

    // criterion 5: MLE for outcome (7,3) = slot j=3
    for j in 0..=10usize {
        match mle_estimate(j, &family) {
            Ok(est) => println!("outcome ({}, {}): X_est = {:.4}", 10 - j, j, est),
            Err(e) => println!("outcome ({}, {}): {}", 10 - j, j, e),
        }
    }

    // criterion 6
    let exact = estimator_statistics(&family, 0.1, 1, 0, 20260810).unwrap();
    println!("nu=1: moe = {:.5} domoe = {:.4} msd = {:.5e} F = {:.3} crlb = {:.3e} ratio = {:.3}",
        exact.moe, exact.domoe, exact.msd, exact.fisher, exact.crlb, exact.ratio);
    for nu in [4usize, 16, 64, 256] {
        let r = estimator_statistics(&family, 0.1, nu, 10_000, 20260810).unwrap();
        println!("nu={nu}: moe = {:.5}+-{:.5} domoe = {:.4} msd = {:.4e}+-{:.2e} ratio = {:.3}",
            r.moe, r.moe_stderr, r.domoe, r.msd, r.msd_stderr, r.ratio);
    }
    // p4=0 row symmetry for the coherent state
    let row0 = &family.rows[0].probabilities;
    let worst = (0..row0.len()).map(|j| (row0[j] - row0[row0.len()-1-j]).abs()).fold(0.0f64, f64::max);
    println!("p4=0 row j<->N-j asymmetry: {worst:.2e}");
}
