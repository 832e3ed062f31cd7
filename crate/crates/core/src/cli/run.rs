//! Subcommand drivers: prepare -> evolve -> fisher -> family -> estimate,
//! each emitting CSVs (and optional SVG charts) under the configured
//! output directory.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cli::config::ScenarioConfig;
use crate::cli::output::{write_csv, write_text};
use crate::cli::svg::{self, Series};
use crate::error::{Error, Result};
use crate::estimation::{build_family, estimator_statistics, LikelihoodFamily};
use crate::fock::StateKind;
use crate::grid::eval_potential;
use crate::metrology::{fisher_n_scan, fisher_time_scan, FisherPoint};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub plots: bool,
}

fn out_path(cfg: &ScenarioConfig, name: &str) -> PathBuf {
    Path::new(&cfg.output_dir).join(name)
}

/// Writes the preparation artifacts: trap samples, localized orbitals, and
/// the single-particle spectrum.
pub fn run_prepare(cfg: &ScenarioConfig, _opts: RunOptions) -> Result<Vec<PathBuf>> {
    let scenario = cfg.to_scenario()?;
    let prepared = scenario.prepare()?;
    let hash = cfg.hash();

    let grid = &prepared.grid;
    let tilted = eval_potential(&scenario.trap, grid)?;
    let m = scenario.n_modes;
    let orbital_headers: Vec<String> = (1..=m).map(|j| format!("phi_{j}")).collect();
    let header = format!(
        "x,V_prep,V_tilted,{}",
        orbital_headers.join(",")
    );
    let rows = (0..grid.n_points()).map(|i| {
        let mut row = format!(
            "{},{:.12},{:.12}",
            grid.nodes()[i],
            prepared.flat_potential.values()[i],
            tilted.values()[i]
        );
        for orb in &prepared.initial.orbitals {
            row.push_str(&format!(",{:.12}", orb.values()[i].re));
        }
        row
    });
    let orbitals_path = write_csv(&out_path(cfg, "orbitals.csv"), &hash, &header, rows)?;

    let energies_path = write_csv(
        &out_path(cfg, "energies.csv"),
        &hash,
        "n,energy",
        prepared
            .eigenpairs
            .iter()
            .enumerate()
            .map(|(n, (e, _))| format!("{n},{e:.12}")),
    )?;
    if scenario.trap.p2 == 0.0 {
        let omega = scenario.trap.p1.sqrt();
        for (n, (e, _)) in prepared.eigenpairs.iter().enumerate() {
            log::info!(
                "harmonic check: E_{n} = {e:.6} vs omega(n + 1/2) = {:.6}",
                omega * (n as f64 + 0.5)
            );
        }
    }
    Ok(vec![orbitals_path, energies_path])
}

/// Two-mode validity monitoring: both probe states at gN = 0.1 and gN = 1,
/// with the configured mode count and duration.
pub fn run_evolve(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let legs: Vec<(StateKind, f64)> = vec![
        (StateKind::Cat, 0.1),
        (StateKind::Coherent, 0.1),
        (StateKind::Cat, 1.0),
        (StateKind::Coherent, 1.0),
    ];
    let results: Vec<(String, crate::mctdh::TrajectoryLog)> = legs
        .par_iter()
        .map(|&(kind, g_n)| -> Result<_> {
            let mut scenario = cfg.to_scenario()?;
            scenario.state_kind = kind;
            scenario.g = g_n / scenario.n_particles as f64;
            let prepared = scenario.prepare()?;
            let prop = prepared.propagator(&scenario, scenario.trap.p4)?;
            let (_, log) = prop.evolve(&prepared.initial)?;
            Ok((format!("{}_gN{}", kind.label(), g_n), log))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut paths = Vec::new();
    let mut tm_series = Vec::new();
    for (tag, log) in &results {
        let path = out_path(cfg, &format!("trajectory_{tag}.csv"));
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        log.write_csv(&mut file, &format!("config_hash={hash}"))?;
        paths.push(path);
        tm_series.push(Series {
            label: tag.as_str(),
            points: log
                .samples
                .iter()
                .map(|s| (s.t, s.two_mode_fraction))
                .collect(),
        });
    }
    if opts.plots {
        let svg_path = out_path(cfg, "two_mode_fraction.svg");
        svg::line_chart(&svg_path, "Two-mode fraction", "t", "rho_tm", &tm_series)?;
        paths.push(svg_path);
    }
    Ok(paths)
}

fn fisher_rows(points: &[FisherPoint], kind: StateKind) -> Vec<String> {
    points
        .iter()
        .map(|p| {
            format!(
                "{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
                p.x,
                p.qfi_sc,
                p.qfi_tmi_analytic,
                p.cfi_sc,
                p.cfi_tmi,
                kind.label()
            )
        })
        .collect()
}

/// Fisher-information sweeps over time and particle number for both probe
/// states; four CSVs.
pub fn run_fisher(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let mut paths = Vec::new();
    let (dq, dc) = (cfg.fisher.delta_qfi, cfg.fisher.delta_cfi);
    let n_values: Vec<usize> = (cfg.fisher.n_min..=cfg.fisher.n_max).collect();

    for kind in [StateKind::Cat, StateKind::Coherent] {
        let mut scenario = cfg.to_scenario()?;
        scenario.state_kind = kind;
        let t_rows = fisher_time_scan(&scenario, dq, dc)?;
        paths.push(write_csv(
            &out_path(cfg, &format!("fisher_t_{}.csv", kind.label())),
            &hash,
            "t,qfi_sc,qfi_tmi_analytic,cfi_sc,cfi_tmi,state_kind",
            fisher_rows(&t_rows, kind),
        )?);

        let mut n_scenario = scenario.clone();
        n_scenario.evolution.t_final = cfg.fisher.t_star;
        let n_rows = fisher_n_scan(&n_scenario, &n_values, dq, dc)?;
        paths.push(write_csv(
            &out_path(cfg, &format!("fisher_n_{}.csv", kind.label())),
            &hash,
            "n,qfi_sc,qfi_tmi_analytic,cfi_sc,cfi_tmi,state_kind",
            fisher_rows(&n_rows, kind),
        )?);

        if opts.plots {
            let svg_path = out_path(cfg, &format!("fisher_t_{}.svg", kind.label()));
            svg::line_chart(
                &svg_path,
                &format!("Fisher information vs t ({})", kind.label()),
                "t",
                "F",
                &[
                    Series {
                        label: "qfi_sc",
                        points: t_rows.iter().map(|p| (p.x, p.qfi_sc)).collect(),
                    },
                    Series {
                        label: "qfi_tmi_analytic",
                        points: t_rows.iter().map(|p| (p.x, p.qfi_tmi_analytic)).collect(),
                    },
                    Series {
                        label: "cfi_sc",
                        points: t_rows.iter().map(|p| (p.x, p.cfi_sc)).collect(),
                    },
                    Series {
                        label: "cfi_tmi",
                        points: t_rows.iter().map(|p| (p.x, p.cfi_tmi)).collect(),
                    },
                ],
            )?;
            paths.push(svg_path);
        }
    }
    Ok(paths)
}

fn family_scenario(cfg: &ScenarioConfig) -> Result<crate::scenario::Scenario> {
    let mut scenario = cfg.to_scenario()?;
    scenario.evolution.t_final = cfg.family.t_final;
    Ok(scenario)
}

fn write_family(
    cfg: &ScenarioConfig,
    family: &LikelihoodFamily,
) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let n = family.n_particles();
    let header = format!(
        "p4,{}",
        (0..=n).map(|j| format!("P_{j}")).collect::<Vec<_>>().join(",")
    );
    let rows = family.p4_grid.iter().zip(&family.rows).map(|(p4, row)| {
        let probs: Vec<String> = row
            .probabilities
            .iter()
            .map(|p| format!("{p:.12e}"))
            .collect();
        format!("{p4},{}", probs.join(","))
    });
    let csv = write_csv(&out_path(cfg, "family.csv"), &hash, &header, rows)?;
    let meta = format!(
        "t_final={}\nn_particles={}\ng={}\nstate_kind={}\ndt={}\nhalf_width={}\nn_points={}\n\
         frozen_orbitals={}\nmin_two_mode_fraction={:.6}\nprovenance={}\nconfig_hash={}\n",
        family.meta.t_final,
        family.meta.n_particles,
        family.meta.g,
        family.meta.state_kind.label(),
        family.meta.dt,
        family.meta.half_width,
        family.meta.n_points,
        family.meta.frozen_orbitals,
        family.min_two_mode_fraction,
        family.meta.provenance,
        hash,
    );
    let meta_path = write_text(&out_path(cfg, "family_meta.txt"), &meta)?;
    Ok(vec![csv, meta_path])
}

/// Builds and persists the likelihood family.
pub fn run_family(cfg: &ScenarioConfig, opts: RunOptions) -> Result<(LikelihoodFamily, Vec<PathBuf>)> {
    let scenario = family_scenario(cfg)?;
    let grid = cfg.family_grid()?;
    let family = build_family(&scenario, &grid)?;
    let mut paths = write_family(cfg, &family)?;
    if opts.plots {
        let n = family.n_particles();
        let series: Vec<Series<'_>> = vec![Series {
            label: "P(outcome)",
            points: family
                .p4_grid
                .iter()
                .zip(family.outcome_slice(n.min(3)))
                .map(|(&x, p)| (x, p))
                .collect(),
        }];
        let svg_path = out_path(cfg, "family_slice.svg");
        svg::line_chart(&svg_path, "Likelihood slice", "p4", "P", &series)?;
        paths.push(svg_path);
    }
    Ok((family, paths))
}

/// Family construction followed by maximum-likelihood statistics across
/// the configured measurement budgets.
pub fn run_estimate(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let hash = cfg.hash();
    let (family, mut paths) = run_family(cfg, opts)?;
    let x_true = cfg.estimation.x_true.unwrap_or(cfg.trap.p4);
    let n = family.n_particles();

    // Per-outcome estimates; a flat (frozen-orbital) family carries no
    // information, which is flagged and surfaced as exit code 4.
    let mle_rows: Result<Vec<String>> = (0..=n)
        .map(|j| {
            crate::estimation::mle_estimate(j, &family)
                .map(|est| format!("{},{},{:.6}", n - j, j, est))
        })
        .collect();
    match mle_rows {
        Ok(rows) => {
            paths.push(write_csv(
                &out_path(cfg, "mle_table.csv"),
                &hash,
                "nL,nR,x_est",
                rows,
            )?);
        }
        Err(Error::NoInformation) => {
            let summary = format!(
                "no_information=true\nx_true={x_true}\nnote=the likelihood family is flat; \
                 the measurement outcome distribution does not depend on the tilt\n"
            );
            paths.push(write_text(&out_path(cfg, "estimate_summary.txt"), &summary)?);
            log::warn!("flat likelihood family: no estimate is possible");
            return Err(Error::NoInformation);
        }
        Err(other) => return Err(other),
    }

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &nu in &cfg.estimation.nu_list {
        let report = estimator_statistics(
            &family,
            x_true,
            nu,
            cfg.estimation.trials,
            cfg.estimation.seed,
        )?;
        rows.push(format!(
            "{},{:.8},{:.3e},{:.6},{:.8e},{:.3e},{:.6e},{:.6e},{:.6},{},{}",
            report.nu,
            report.moe,
            report.moe_stderr,
            report.domoe,
            report.msd,
            report.msd_stderr,
            report.fisher,
            report.crlb,
            report.ratio,
            report.trials,
            report.seed,
        ));
        reports.push(report);
    }
    paths.push(write_csv(
        &out_path(cfg, "estimate.csv"),
        &hash,
        "nu,moe,moe_stderr,domoe,msd,msd_stderr,fisher,crlb,ratio,trials,seed",
        rows,
    )?);

    let mut summary = String::new();
    summary.push_str("no_information=false\n");
    summary.push_str(&format!(
        "x_true={x_true}\nfisher={:.6e}\nmin_two_mode_fraction={:.6}\n",
        reports[0].fisher, family.min_two_mode_fraction
    ));
    for r in &reports {
        summary.push_str(&format!(
            "nu={}: moe={:.5} domoe={:.4} msd={:.4e} crlb={:.4e} ratio={:.3}\n",
            r.nu, r.moe, r.domoe, r.msd, r.crlb, r.ratio
        ));
    }
    paths.push(write_text(&out_path(cfg, "estimate_summary.txt"), &summary)?);

    if opts.plots {
        let series = vec![
            Series {
                label: "msd",
                points: reports.iter().map(|r| (r.nu as f64, r.msd)).collect(),
            },
            Series {
                label: "crlb",
                points: reports.iter().map(|r| (r.nu as f64, r.crlb)).collect(),
            },
        ];
        let svg_path = out_path(cfg, "msd_vs_crlb.svg");
        svg::line_chart(&svg_path, "msd vs CRLB", "nu", "value", &series)?;
        paths.push(svg_path);
    }
    Ok(paths)
}

/// The full pipeline; the evolve leg monitors with four orbitals.
pub fn run_all(cfg: &ScenarioConfig, opts: RunOptions) -> Result<Vec<PathBuf>> {
    let mut paths = run_prepare(cfg, opts)?;
    let mut evolve_cfg = cfg.clone();
    evolve_cfg.n_modes = 4;
    paths.extend(run_evolve(&evolve_cfg, opts)?);
    paths.extend(run_fisher(cfg, opts)?);
    paths.extend(run_estimate(cfg, opts)?);
    Ok(paths)
}
