use selfmetro::fock::StateKind;
use selfmetro::mctdh::EvolutionConfig;
use selfmetro::metrology::fisher_time_scan;
use selfmetro::scenario::Scenario;

fn main() {
    for kind in [StateKind::Coherent, StateKind::Cat] {
        let mut s = Scenario::paper_default();
        s.state_kind = kind;
        s.evolution = EvolutionConfig {
            dt: 1e-4,
            t_final: 2.0,
            sample_stride: 2000, // sample every 0.2
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let rows = fisher_time_scan(&s, 1e-4, 1e-3).unwrap();
        println!("== {} (scan took {:?})", kind.label(), t0.elapsed());
        println!("{:>6} {:>14} {:>14} {:>9} {:>12} {:>12} {:>10}", "t", "qfi_sc", "qfi_tmi", "rel_dev", "cfi_sc", "cfi_tmi", "ah_defect");
        for r in &rows {
            let rel = if r.qfi_tmi_analytic > 0.0 { (r.qfi_sc - r.qfi_tmi_analytic) / r.qfi_tmi_analytic } else { 0.0 };
            println!("{:6.2} {:14.4} {:14.4} {:9.4} {:12.6} {:12.3e} {:10.2e}", r.x, r.qfi_sc, r.qfi_tmi_analytic, rel, r.cfi_sc, r.cfi_tmi, r.anti_hermiticity_defect);
        }
    }
}
