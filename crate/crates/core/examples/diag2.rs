use selfmetro::fock::*;
use selfmetro::grid::*;
use selfmetro::mctdh::*;

fn main() {
    let grid = build_grid(8.0, 257).unwrap();
    let params = PotentialParams { p1: 0.5, p2: 50.0, p3: 1.0, p4: 0.0 };
    let flat = eval_potential(&params, &grid).unwrap();
    let pairs = lowest_eigenstates(&flat, 2).unwrap();
    let (l, r) = localized_orbitals(&pairs[0].1, &pairs[1].1).unwrap();
    let basis = enumerate_configs(10, 2).unwrap();
    let c = StateKind::Coherent.build(&basis);
    let state = ManyBodyState::new(basis, c, vec![l.to_complex(), r.to_complex()]).unwrap();
    let config = EvolutionConfig { dt: 1e-4, t_final: 0.5, sample_stride: 1000, ..Default::default() };
    let prop = Propagator::new(flat, 0.01, config).unwrap();
    let (_, log) = prop.evolve(&state).unwrap();
    let first = &log.samples[0];
    let mut worst: f64 = 0.0;
    for s in &log.samples {
        for j in 0..2 {
            worst = worst.max((s.occupations[j] - first.occupations[j]).abs());
        }
    }
    println!("max occupation drift over [0,0.5] at p4=0, g=0.01: {worst:.6e}");
    println!("rho_tm min {:.12}", log.min_two_mode_fraction());
    println!("energy drift {:.3e}", log.energy_drift());
    println!("PL1 first {:.10} last {:.10}", log.samples[0].side[0].0, log.samples.last().unwrap().side[0].0);
}
