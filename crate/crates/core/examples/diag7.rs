use selfmetro::cli::{self, RunOptions, ScenarioConfig};

fn tiny(dir: &str) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::default();
    cfg.n_particles = 3;
    cfg.g = 0.1 / 3.0;
    cfg.grid.n_points = 129;
    cfg.evolution.t_final = 0.05;
    cfg.family.p4_min = 0.08;
    cfg.family.p4_max = 0.12;
    cfg.family.p4_step = 0.01;
    cfg.family.t_final = 0.4;
    cfg.estimation.nu_list = vec![1, 4];
    cfg.estimation.trials = 64;
    cfg.estimation.x_true = Some(0.1);
    cfg.output_dir = dir.to_string();
    cfg
}

fn main() {
    for dir in ["/tmp/det-a", "/tmp/det-b"] {
        let _ = std::fs::remove_dir_all(dir);
        let cfg = tiny(dir);
        cli::run_estimate(&cfg, RunOptions::default()).unwrap();
    }
}
