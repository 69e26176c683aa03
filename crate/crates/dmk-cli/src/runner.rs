//! Run orchestration: executes a resolved configuration over its nested
//! refinement levels, writes per-level outputs (diagnostics CSV, final
//! fields as VTK, meshes in Triangle format), and a run summary. A level
//! that fails is recorded in the summary and the remaining levels proceed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use dmk_core::diagnostics::extract_branch_point;
use dmk_core::dynamics::Simulator;
use dmk_core::forcing::assemble_rhs;
use dmk_core::mesh::Triangulation;

use crate::config::{Config, ResolvedRun, ScenarioKind};
use crate::report::{self, LevelOutcome, LevelResult};
use crate::{io_err, triangle_io, vtk, CliError};

fn scenario_name(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Radial => "radial",
        ScenarioKind::Tc1 => "tc1",
        ScenarioKind::Tc2 => "tc2",
        ScenarioKind::Tc3 => "tc3",
        ScenarioKind::Custom => "custom",
    }
}

/// Scenarios on the unit square get a branch-point probe; the extractor's
/// strip sweep is meaningless on the disk.
fn probes_branch_point(kind: ScenarioKind) -> bool {
    !matches!(kind, ScenarioKind::Radial)
}

pub struct CommandOverrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Loads, resolves, and executes one configuration. Returns the summary
/// path on success (individual level failures are reported in the summary,
/// not as process errors).
pub fn run(config_path: &Path, overrides: &CommandOverrides) -> Result<PathBuf, CliError> {
    let mut config = Config::load(config_path)?;
    if let Some(out) = &overrides.out {
        config.output.dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        config.scenario.seed = seed;
    }
    let resolved = config.resolve(config_path)?;
    execute(resolved)
}

/// Runs the configuration once per flux exponent, each into its own
/// subdirectory, and writes a sweep table.
pub fn sweep_beta(
    config_path: &Path,
    betas: &[f64],
    overrides: &CommandOverrides,
) -> Result<PathBuf, CliError> {
    if betas.is_empty() {
        return Err(CliError::Config {
            path: config_path.to_path_buf(),
            message: "--betas must list at least one value".into(),
        });
    }
    let mut base_config = Config::load(config_path)?;
    if let Some(out) = &overrides.out {
        base_config.output.dir = out.clone();
    }
    if let Some(seed) = overrides.seed {
        base_config.scenario.seed = seed;
    }
    let sweep_dir = base_config.output.dir.clone();
    std::fs::create_dir_all(&sweep_dir).map_err(io_err(&sweep_dir))?;

    let mut rows = Vec::new();
    for &beta in betas {
        let mut config = base_config.clone();
        config.sim.beta = beta;
        config.output.dir = sweep_dir.join(format!("beta_{beta}"));
        let resolved = config.resolve(config_path)?;
        let kind = resolved.config.scenario.kind;
        let levels = execute_levels(&resolved)?;
        write_outputs(&resolved, &levels)?;
        // The sweep table reports the finest level that produced a result.
        let last = levels.iter().rev().find_map(|l| l.outcome.as_ref().ok());
        rows.push((beta, kind, last.cloned()));
    }

    let mut table = String::from("beta,lyapunov,err,support_fraction,branch_y,converged\n");
    for (beta, _, result) in &rows {
        match result {
            Some(r) => {
                let err = r.err.map(|e| format!("{e:.16e}")).unwrap_or_default();
                let branch = r
                    .branch_point
                    .map(|b| format!("{:.16e}", b[1]))
                    .unwrap_or_default();
                table.push_str(&format!(
                    "{beta},{:.16e},{err},{:.16e},{branch},{}\n",
                    r.lyapunov, r.support_fraction, r.converged
                ));
            }
            None => table.push_str(&format!("{beta},,,,,failed\n")),
        }
    }
    let table_path = sweep_dir.join("sweep_summary.csv");
    std::fs::write(&table_path, table).map_err(io_err(&table_path))?;
    Ok(table_path)
}

pub fn execute(resolved: ResolvedRun) -> Result<PathBuf, CliError> {
    let levels = execute_levels(&resolved)?;
    write_outputs(&resolved, &levels)
}

/// Runs every refinement level, writing per-level artifacts as it goes.
fn execute_levels(resolved: &ResolvedRun) -> Result<Vec<LevelOutcome>, CliError> {
    let out_dir = &resolved.out_dir;
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut outcomes = Vec::new();
    let mut mesh: Triangulation = resolved.base_mesh.clone();
    for level in 0..resolved.levels {
        let started = Instant::now();
        let level_dir = out_dir.join(format!("level_{level}"));
        std::fs::create_dir_all(&level_dir).map_err(io_err(&level_dir))?;

        let pair = match mesh.refine_uniform() {
            Ok(p) => p,
            Err(e) => {
                outcomes.push(LevelOutcome {
                    level,
                    coarse_triangles: mesh.num_triangles(),
                    fine_nodes: 0,
                    h: mesh.max_diameter(),
                    wall_seconds: started.elapsed().as_secs_f64(),
                    outcome: Err(format!("refinement failed: {e}")),
                });
                break;
            }
        };

        triangle_io::write_mesh(
            &pair.coarse,
            &level_dir.join("coarse.node"),
            &level_dir.join("coarse.ele"),
        )?;
        triangle_io::write_mesh(
            &pair.fine,
            &level_dir.join("fine.node"),
            &level_dir.join("fine.ele"),
        )?;

        let outcome = run_level(resolved, &pair, &level_dir);
        outcomes.push(LevelOutcome {
            level,
            coarse_triangles: pair.coarse.num_triangles(),
            fine_nodes: pair.fine.num_nodes(),
            h: pair.coarse.max_diameter(),
            wall_seconds: started.elapsed().as_secs_f64(),
            outcome,
        });

        if level + 1 < resolved.levels {
            mesh = pair.fine;
        }
    }
    Ok(outcomes)
}

fn run_level(
    resolved: &ResolvedRun,
    pair: &dmk_core::mesh::RefinedPair,
    level_dir: &Path,
) -> Result<LevelResult, String> {
    let rhs = assemble_rhs(&resolved.forcing, pair).map_err(|e| e.to_string())?;
    let mut sim =
        Simulator::new(resolved.sim, pair, rhs.values()).map_err(|e| e.to_string())?;
    let (state, records) = sim.run_to_steady().map_err(|e| e.to_string())?;

    report::write_csv(&level_dir.join("diagnostics.csv"), &records)
        .map_err(|e| e.to_string())?;
    vtk::write_cell_field(
        &level_dir.join("mu_final.vtk"),
        &pair.coarse,
        "mu",
        state.mu.values(),
    )
    .map_err(|e| e.to_string())?;
    vtk::write_point_field(
        &level_dir.join("u_final.vtk"),
        &pair.fine,
        "u",
        state.u.values(),
    )
    .map_err(|e| e.to_string())?;

    let last = records.last().expect("a run always has records");
    let branch_point = if probes_branch_point(resolved.config.scenario.kind) {
        extract_branch_point(&pair.coarse, &state.mu, resolved.sim.support_threshold)
    } else {
        None
    };
    Ok(LevelResult {
        steps: state.step,
        converged: state.converged,
        var: state.var,
        lyapunov: last.lyapunov,
        err: last.err,
        support_fraction: last.support_fraction,
        branch_point,
    })
}

/// Writes the resolved configuration and the summary; returns the summary
/// path.
fn write_outputs(resolved: &ResolvedRun, levels: &[LevelOutcome]) -> Result<PathBuf, CliError> {
    let out_dir = &resolved.out_dir;
    let config_toml = toml::to_string_pretty(&resolved.config).map_err(|e| CliError::Config {
        path: out_dir.join("config.resolved.toml"),
        message: format!("could not serialize resolved configuration: {e}"),
    })?;
    let config_path = out_dir.join("config.resolved.toml");
    std::fs::write(&config_path, &config_toml).map_err(io_err(&config_path))?;

    let rate_points: Vec<(f64, f64)> = levels
        .iter()
        .filter_map(|l| {
            l.outcome
                .as_ref()
                .ok()
                .and_then(|r| r.err.map(|e| (l.h, e)))
        })
        .collect();
    let err_rate = report::least_squares_rate(&rate_points);

    let summary_path = out_dir.join("summary.txt");
    report::write_summary(
        &summary_path,
        scenario_name(resolved.config.scenario.kind),
        levels,
        err_rate,
        &config_toml,
    )?;
    Ok(summary_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, text: &str) -> PathBuf {
        let path = dir.join("run.toml");
        std::fs::write(&path, text).unwrap();
        path
    }

    #[test]
    fn radial_run_produces_the_advertised_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let config = write_config(
            dir.path(),
            &format!(
                "[scenario]\nkind = \"radial\"\n\n[mesh]\nn_r = 3\nn_t = 12\nlevels = 2\n\n\
                 [sim]\nbeta = 0.5\nmax_steps = 60\n\n[output]\ndir = {:?}\n",
                out.to_str().unwrap()
            ),
        );
        let summary_path = run(
            &config,
            &CommandOverrides { out: None, seed: None },
        )
        .unwrap();
        let summary = std::fs::read_to_string(&summary_path).unwrap();
        assert!(summary.contains("[level 0]"));
        assert!(summary.contains("[level 1]"));
        assert!(summary.contains("err_rate_least_squares:"));
        for name in [
            "config.resolved.toml",
            "level_0/diagnostics.csv",
            "level_0/mu_final.vtk",
            "level_0/u_final.vtk",
            "level_0/coarse.node",
            "level_0/coarse.ele",
            "level_0/fine.node",
            "level_0/fine.ele",
            "level_1/diagnostics.csv",
        ] {
            assert!(out.join(name).is_file(), "missing {name}");
        }
        // Summary repeats the last CSV lyapunov value byte for byte.
        let csv = std::fs::read_to_string(out.join("level_1/diagnostics.csv")).unwrap();
        let last_lyap = csv
            .lines()
            .last()
            .unwrap()
            .split(',')
            .nth(4)
            .unwrap();
        assert!(
            summary.contains(&format!("lyapunov: {last_lyap}")),
            "summary must repeat {last_lyap}"
        );
    }

    #[test]
    fn identical_configs_produce_identical_csv_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut texts = Vec::new();
        for name in ["a", "b"] {
            let out = dir.path().join(name);
            let config = write_config(
                dir.path(),
                &format!(
                    "[scenario]\nkind = \"tc2\"\nseed = 11\ncount = 8\n\n\
                     [mesh]\nn = 8\n\n[sim]\nbeta = 1.5\nmax_steps = 25\n\n\
                     [output]\ndir = {:?}\n",
                    out.to_str().unwrap()
                ),
            );
            run(&config, &CommandOverrides { out: None, seed: None }).unwrap();
            texts.push(std::fs::read(out.join("level_0/diagnostics.csv")).unwrap());
        }
        assert_eq!(texts[0], texts[1]);
    }

    #[test]
    fn seed_override_changes_the_resolved_config() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let config = write_config(
            dir.path(),
            &format!(
                "[scenario]\nkind = \"tc2\"\nseed = 11\ncount = 5\n\n\
                 [mesh]\nn = 6\n\n[sim]\nbeta = 1.5\nmax_steps = 5\n\n\
                 [output]\ndir = {:?}\n",
                out.to_str().unwrap()
            ),
        );
        run(
            &config,
            &CommandOverrides { out: None, seed: Some(99) },
        )
        .unwrap();
        let resolved = std::fs::read_to_string(out.join("config.resolved.toml")).unwrap();
        assert!(resolved.contains("seed = 99"), "override missing:\n{resolved}");
    }

    #[test]
    fn beta_sweep_writes_a_table_row_per_exponent() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("sweep");
        let config = write_config(
            dir.path(),
            &format!(
                "[scenario]\nkind = \"tc1\"\n\n[mesh]\nn = 6\n\n\
                 [sim]\nbeta = 1.0\nmax_steps = 10\n\n[output]\ndir = {:?}\n",
                out.to_str().unwrap()
            ),
        );
        let table_path = sweep_beta(
            &config,
            &[1.1, 1.5],
            &CommandOverrides { out: None, seed: None },
        )
        .unwrap();
        let table = std::fs::read_to_string(&table_path).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("beta,"));
        assert!(lines[1].starts_with("1.1,"));
        assert!(lines[2].starts_with("1.5,"));
        assert!(out.join("beta_1.1/summary.txt").is_file());
        assert!(out.join("beta_1.5/summary.txt").is_file());
    }
}
