//! Run configuration: a TOML file with `[scenario]`, `[mesh]`, `[sim]`,
//! `[solver]`, and `[output]` sections. Unknown keys are rejected so typos
//! cannot silently fall back to defaults. The resolved configuration
//! (defaults filled in, command-line overrides applied) is written next to
//! the run outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dmk_core::diagnostics::ExactRadial;
use dmk_core::dynamics::{InitialCondition, SimConfig};
use dmk_core::forcing::{make_tc2_sources, ForcingSpec, Rect};
use dmk_core::mesh::{gen_disk_polar, gen_unit_square, Triangulation};
use dmk_core::solver::PrecondKind;

use crate::triangle_io;
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub mesh: MeshSection,
    pub sim: SimSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// Ring forcing on the unit disk with a closed-form steady state.
    Radial,
    /// Two balanced rectangles on the unit square.
    Tc1,
    /// Seeded cloud of unit sources with one collecting sink.
    Tc2,
    /// One source feeding two sinks; the Y-network scenario.
    Tc3,
    /// Mesh from files plus an explicit point-load list.
    Custom,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    /// Core forcing density of the radial scenario.
    #[serde(default = "default_c1")]
    pub c1: f64,
    /// Source-cloud seed of the tc2 scenario.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Number of tc2 sources.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Point loads of the custom scenario, as [x, y, weight].
    #[serde(default)]
    pub diracs: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshKind {
    Disk,
    Square,
    Files,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Defaults to `disk` for the radial scenario, `square` otherwise,
    /// `files` when node/ele paths are given.
    #[serde(default)]
    pub kind: Option<MeshKind>,
    /// Rings of the disk generator (a multiple of 3).
    #[serde(default = "default_n_r")]
    pub n_r: usize,
    /// Angular sectors of the disk generator.
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    /// Cells per side of the square generator.
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub node: Option<PathBuf>,
    #[serde(default)]
    pub ele: Option<PathBuf>,
    /// Number of nested refinement levels to run.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            kind: None,
            n_r: default_n_r(),
            n_t: default_n_t(),
            n: default_n(),
            node: None,
            ele: None,
            levels: default_levels(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcKind {
    Uniform1,
    RadialDip,
    Checkerboard,
    YTube,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub beta: f64,
    #[serde(default = "default_ic")]
    pub ic: IcKind,
    /// Cost exponent of the y_tube initial condition.
    #[serde(default)]
    pub q: f64,
    /// Tube radius of the y_tube initial condition.
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Outside value of the y_tube initial condition.
    #[serde(default = "default_lo")]
    pub lo: f64,
    #[serde(default = "default_dt_initial")]
    pub dt_initial: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_growth_cap")]
    pub growth_cap: f64,
    /// Overrides the adaptive step-size rule when set.
    #[serde(default)]
    pub fixed_dt: Option<f64>,
    #[serde(default = "default_tau_t")]
    pub tau_t: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_mu_floor")]
    pub mu_floor: f64,
    #[serde(default = "default_clamp")]
    pub clamp: bool,
    #[serde(default = "default_support_threshold")]
    pub support_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecondChoice {
    None,
    Jacobi,
    Ic0,
}

impl From<PrecondChoice> for PrecondKind {
    fn from(p: PrecondChoice) -> Self {
        match p {
            PrecondChoice::None => PrecondKind::None,
            PrecondChoice::Jacobi => PrecondKind::Jacobi,
            PrecondChoice::Ic0 => PrecondKind::Ic0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Iteration cap per solve; defaults to ten times the unknown count.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default = "default_precond")]
    pub precond: PrecondChoice,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: default_tol(),
            max_iter: None,
            precond: default_precond(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Diagnostics stride; defaults to 1 for radial runs and 10 for the
    /// network scenarios.
    #[serde(default)]
    pub stride: Option<usize>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: default_dir(), stride: None }
    }
}

fn default_c1() -> f64 {
    1.0
}
fn default_seed() -> u64 {
    7
}
fn default_count() -> usize {
    50
}
fn default_n_r() -> usize {
    12
}
fn default_n_t() -> usize {
    84
}
fn default_n() -> usize {
    32
}
fn default_levels() -> usize {
    1
}
fn default_ic() -> IcKind {
    IcKind::Uniform1
}
fn default_rho() -> f64 {
    0.02
}
fn default_lo() -> f64 {
    1e-3
}
fn default_dt_initial() -> f64 {
    0.01
}
fn default_dt_max() -> f64 {
    1.0
}
fn default_growth_cap() -> f64 {
    0.2
}
fn default_tau_t() -> f64 {
    5e-7
}
fn default_max_steps() -> usize {
    50_000
}
fn default_mu_floor() -> f64 {
    1e-10
}
fn default_clamp() -> bool {
    true
}
fn default_support_threshold() -> f64 {
    1e-10
}
fn default_tol() -> f64 {
    1e-11
}
fn default_precond() -> PrecondChoice {
    PrecondChoice::Ic0
}
fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

/// A configuration with every choice made: base mesh built, forcing chosen,
/// simulation parameters assembled.
#[derive(Debug)]
pub struct ResolvedRun {
    pub config: Config,
    pub base_mesh: Triangulation,
    pub levels: usize,
    pub forcing: ForcingSpec,
    pub sim: SimConfig,
    pub out_dir: PathBuf,
    pub stride: usize,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(crate::io_err(path))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Validates and builds everything the runner needs. `config_path` is
    /// only used in error messages.
    pub fn resolve(mut self, config_path: &Path) -> Result<ResolvedRun, CliError> {
        let fail = |message: String| CliError::Config {
            path: config_path.to_path_buf(),
            message,
        };

        if !(self.sim.beta > 0.0) {
            return Err(fail(format!(
                "sim.beta must be positive for the dynamics (got {})",
                self.sim.beta
            )));
        }
        if self.mesh.levels < 1 {
            return Err(fail("mesh.levels must be at least 1".into()));
        }

        let mesh_kind = self.mesh.kind.unwrap_or(match (&self.mesh.node, self.scenario.kind) {
            (Some(_), _) => MeshKind::Files,
            (None, ScenarioKind::Radial) => MeshKind::Disk,
            (None, _) => MeshKind::Square,
        });
        self.mesh.kind = Some(mesh_kind);

        let base_mesh = match mesh_kind {
            MeshKind::Disk => {
                if self.mesh.n_r < 3 || self.mesh.n_r % 3 != 0 {
                    return Err(fail(format!(
                        "mesh.n_r must be a positive multiple of 3 (got {})",
                        self.mesh.n_r
                    )));
                }
                if self.mesh.n_t < 8 {
                    return Err(fail(format!("mesh.n_t must be at least 8 (got {})", self.mesh.n_t)));
                }
                gen_disk_polar(self.mesh.n_r, self.mesh.n_t)
            }
            MeshKind::Square => {
                if self.mesh.n < 1 {
                    return Err(fail("mesh.n must be at least 1".into()));
                }
                gen_unit_square(self.mesh.n)
            }
            MeshKind::Files => {
                let node = self.mesh.node.clone().ok_or_else(|| {
                    fail("mesh.node is required when mesh.kind = \"files\"".into())
                })?;
                let ele = self.mesh.ele.clone().ok_or_else(|| {
                    fail("mesh.ele is required when mesh.kind = \"files\"".into())
                })?;
                triangle_io::read_mesh(&node, &ele)?
            }
        };

        let forcing = match self.scenario.kind {
            ScenarioKind::Radial => {
                if !(self.scenario.c1 > 0.0) {
                    return Err(fail(format!(
                        "scenario.c1 must be positive (got {})",
                        self.scenario.c1
                    )));
                }
                ForcingSpec::RadialPiecewise {
                    c1: self.scenario.c1,
                    c2: -self.scenario.c1 / 5.0,
                }
            }
            ScenarioKind::Tc1 => ForcingSpec::Boxes(vec![
                (Rect::new(0.125, 0.375, 0.25, 0.75), 1.0),
                (Rect::new(0.625, 0.875, 0.25, 0.75), -1.0),
            ]),
            ScenarioKind::Tc2 => {
                if self.scenario.count == 0 {
                    return Err(fail("scenario.count must be positive".into()));
                }
                ForcingSpec::DiracSet(make_tc2_sources(self.scenario.seed, self.scenario.count))
            }
            ScenarioKind::Tc3 => ForcingSpec::DiracSet(vec![
                ([0.5, 0.1], 1.0),
                ([0.4, 0.9], -0.5),
                ([0.6, 0.9], -0.5),
            ]),
            ScenarioKind::Custom => {
                if self.scenario.diracs.is_empty() {
                    return Err(fail(
                        "scenario.diracs must list at least one point load for kind = \"custom\""
                            .into(),
                    ));
                }
                ForcingSpec::DiracSet(
                    self.scenario.diracs.iter().map(|d| ([d[0], d[1]], d[2])).collect(),
                )
            }
        };

        let ic = match self.sim.ic {
            IcKind::Uniform1 => InitialCondition::Uniform1,
            IcKind::RadialDip => InitialCondition::RadialDip,
            IcKind::Checkerboard => InitialCondition::Checkerboard,
            IcKind::YTube => {
                if !(0.0..=1.0).contains(&self.sim.q) {
                    return Err(fail(format!("sim.q must lie in [0, 1] (got {})", self.sim.q)));
                }
                InitialCondition::YTube { q: self.sim.q, rho: self.sim.rho, lo: self.sim.lo }
            }
        };

        let mut sim = SimConfig::new(self.sim.beta, ic);
        sim.dt_initial = self.sim.dt_initial;
        sim.dt_max = self.sim.dt_max;
        sim.growth_cap = self.sim.growth_cap;
        sim.fixed_dt = self.sim.fixed_dt;
        sim.tau_t = self.sim.tau_t;
        sim.max_steps = self.sim.max_steps;
        sim.mu_floor = self.sim.mu_floor;
        sim.clamp_enabled = self.sim.clamp;
        sim.support_threshold = self.sim.support_threshold;
        sim.solver_tol = self.solver.tol;
        sim.solver_max_iter = self.solver.max_iter;
        sim.precond = self.solver.precond.into();
        if self.scenario.kind == ScenarioKind::Radial && self.sim.beta <= 1.0 {
            sim.err_reference = Some(ExactRadial::new(self.scenario.c1, self.sim.beta));
        }
        sim.validate().map_err(|e| fail(format!("sim section: {e}")))?;

        let stride = self.output.stride.unwrap_or(match self.scenario.kind {
            ScenarioKind::Radial => 1,
            _ => 10,
        });
        if stride == 0 {
            return Err(fail("output.stride must be positive".into()));
        }
        self.output.stride = Some(stride);
        sim.record_stride = stride;

        Ok(ResolvedRun {
            base_mesh,
            levels: self.mesh.levels,
            forcing,
            sim,
            out_dir: self.output.dir.clone(),
            stride,
            config: self,
        })
    }
}
