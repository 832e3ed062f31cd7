use selfmetro::estimation::*;
use selfmetro::fock::StateKind;
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::scenario::Scenario;

fn main() {
    let mut s = Scenario::paper_default();
    s.state_kind = StateKind::Coherent;
    s.evolution = EvolutionConfig { dt: 1e-4, t_final: 1.77, sample_stride: usize::MAX, ..Default::default() };
    // small grid around 0.1 for speed? need the whole family — reuse full grid but coarser for repro
    let family = build_family(&s, &default_p4_grid()).unwrap();
    let idx = family.index_of(0.1).unwrap();

    // Direct expected log-likelihood: argmax of sum_j P_j(0.1) ln P_j(X)
    let p_true = &family.rows[idx].probabilities;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for (i, x) in family.p4_grid.iter().enumerate() {
        let e: f64 = p_true.iter().zip(&family.rows[i].probabilities)
            .map(|(&pt, &px)| if pt > 0.0 { pt * px.max(1e-300).ln() } else { 0.0 })
            .sum();
        if e > best.0 { best = (e, *x); }
    }
    println!("argmax of expected loglik: {:.4}", best.1);

    // Sample a few pooled trials at nu = 256
    for trial in 0..6u64 {
        let counts = sample_outcomes(&family.rows[idx], 256, 1000 + trial);
        let est = mle_from_counts(&counts, &family).unwrap();
        println!("trial {trial}: counts = {counts:?} -> pooled MLE {est:.4}");
    }
}
