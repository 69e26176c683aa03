//! Time evolution of the conductivity field: forward Euler on
//! `d mu / dt = mu^beta g^beta - mu` coupled to the elliptic solve for the
//! potential, with an adaptive step-size rule, an optional lower clamp, and
//! steady-state detection through the relative rate of change.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::assembly::{gradient_norms, FieldP0, FieldP1, StiffnessAssembler};
use crate::diagnostics::{
    err_metric, gilbert_branch_point, lyapunov, support_stats, y_graph_distance,
    DiagnosticsRecord, ExactRadial,
};
use crate::mesh::{RefinedPair, Triangulation};
use crate::solver::{default_max_iter, pcg_solve, PrecondKind, SolveReport, SolverError};

#[derive(Debug, Clone, PartialEq)]
pub enum DynamicsError {
    Solver(SolverError),
    /// Load vector length does not match the fine mesh.
    DimensionMismatch { expected: usize, got: usize },
    /// A conductivity value left the positive range with clamping disabled.
    LostPositivity { triangle: usize, value: f64 },
    InvalidConfig(String),
}

impl fmt::Display for DynamicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DynamicsError::Solver(e) => write!(f, "elliptic solve failed: {e}"),
            DynamicsError::DimensionMismatch { expected, got } => {
                write!(f, "load vector has length {got}, fine mesh has {expected} nodes")
            }
            DynamicsError::LostPositivity { triangle, value } => {
                write!(f, "conductivity on triangle {triangle} fell to {value:e} with clamping disabled")
            }
            DynamicsError::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl From<SolverError> for DynamicsError {
    fn from(e: SolverError) -> Self {
        DynamicsError::Solver(e)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DynamicsError {}

/// Starting conductivity profiles, sampled at coarse-triangle centroids.
/// Every variant is strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    /// `mu0 = 1`.
    Uniform1,
    /// `mu0(x) = 0.01 + 0.99 min(1, 2 |x - (0.5, 0.5)|)`: a dip to 0.01 at
    /// the domain center.
    RadialDip,
    /// `mu0(x) = 0.505 + 0.495 sign(sin(2 pi n x1) sin(2 pi n x2))` with
    /// `n = 4`: alternating tiles of 0.01 and 1.
    Checkerboard,
    /// `mu0 = 1` within distance `rho` of the reference Y-graph for cost
    /// exponent `q`, `lo` outside.
    YTube { q: f64, rho: f64, lo: f64 },
}

impl InitialCondition {
    /// Y-tube with the default radius 0.02 and outside value 1e-3.
    pub fn y_tube(q: f64) -> Self {
        InitialCondition::YTube { q, rho: 0.02, lo: 1e-3 }
    }

    pub fn sample(&self, mesh: &Triangulation) -> FieldP0 {
        match *self {
            InitialCondition::Uniform1 => FieldP0::constant(mesh.num_triangles(), 1.0),
            InitialCondition::RadialDip => FieldP0::from_centroids(mesh, |p| {
                let d = Float::hypot(p[0] - 0.5, p[1] - 0.5);
                0.01 + 0.99 * (2.0 * d).min(1.0)
            }),
            InitialCondition::Checkerboard => {
                let n = 4.0;
                FieldP0::from_centroids(mesh, |p| {
                    let s = Float::sin(2.0 * core::f64::consts::PI * n * p[0])
                        * Float::sin(2.0 * core::f64::consts::PI * n * p[1]);
                    0.505 + 0.495 * s.signum()
                })
            }
            InitialCondition::YTube { q, rho, lo } => {
                let branch_y = gilbert_branch_point(q);
                FieldP0::from_centroids(mesh, |p| {
                    if y_graph_distance(p, branch_y) <= rho {
                        1.0
                    } else {
                        lo
                    }
                })
            }
        }
    }
}

/// Full parameter set of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// Flux exponent of the conductivity dynamics; positive.
    pub beta: f64,
    /// Cap on the very first step.
    pub dt_initial: f64,
    pub dt_max: f64,
    /// Largest allowed relative conductivity change per step.
    pub growth_cap: f64,
    /// Overrides the adaptive rule with a constant step when set.
    pub fixed_dt: Option<f64>,
    /// Steady-state tolerance on the relative rate of change.
    pub tau_t: f64,
    pub max_steps: usize,
    pub mu_floor: f64,
    pub clamp_enabled: bool,
    /// Relative tolerance of the elliptic solves.
    pub solver_tol: f64,
    /// Iteration cap per solve; 10x the fine node count when unset.
    pub solver_max_iter: Option<usize>,
    /// Requested preconditioner; incomplete-Cholesky failures fall back to
    /// Jacobi automatically.
    pub precond: PrecondKind,
    pub ic: InitialCondition,
    /// Emit one diagnostics record every this many steps (the final state is
    /// always recorded).
    pub record_stride: usize,
    /// When set, records carry the distance to this exact steady state.
    pub err_reference: Option<ExactRadial>,
    /// Conductivity level above which a triangle counts as supported.
    pub support_threshold: f64,
}

impl SimConfig {
    pub fn new(beta: f64, ic: InitialCondition) -> Self {
        SimConfig {
            beta,
            dt_initial: 0.01,
            dt_max: 1.0,
            growth_cap: 0.2,
            fixed_dt: None,
            tau_t: 5e-7,
            max_steps: 50_000,
            mu_floor: 1e-10,
            clamp_enabled: true,
            solver_tol: 1e-11,
            solver_max_iter: None,
            precond: PrecondKind::Ic0,
            ic,
            record_stride: 1,
            err_reference: None,
            support_threshold: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let fail = |msg: &str| Err(DynamicsError::InvalidConfig(String::from(msg)));
        if !(self.beta > 0.0) {
            return fail("flux exponent must be positive");
        }
        if !(self.tau_t > 0.0) {
            return fail("steady-state tolerance must be positive");
        }
        if !(self.mu_floor >= 0.0) {
            return fail("conductivity floor must be nonnegative");
        }
        if !(self.growth_cap > 0.0 && self.growth_cap <= 1.0) {
            return fail("growth cap must lie in (0, 1]");
        }
        if !(self.dt_initial > 0.0 && self.dt_max >= self.dt_initial) {
            return fail("need 0 < dt_initial <= dt_max");
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return fail("fixed step must be positive");
            }
        }
        if !(self.solver_tol > 0.0) {
            return fail("solver tolerance must be positive");
        }
        if self.record_stride == 0 {
            return fail("record stride must be positive");
        }
        Ok(())
    }
}

/// State after `step` completed transitions: the conductivity, its potential,
/// and the bookkeeping of the transition that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub step: usize,
    pub time: f64,
    pub mu: FieldP0,
    /// Mean-zero potential solving the weighted Neumann problem for `mu`.
    pub u: FieldP1,
    /// Step size of the transition into this state; zero at step 0.
    pub dt: f64,
    /// Relative rate of change of the transition into this state; infinite
    /// at step 0.
    pub var: f64,
    /// Report of the solve that produced `u`.
    pub report: SolveReport,
    /// Whether `var` has reached the steady-state tolerance.
    pub converged: bool,
}

/// Relative rate of change `|mu_new - mu_old| / (dt |mu_old|)` in the
/// area-weighted L2 norm.
pub fn var_metric(mesh: &Triangulation, mu_new: &FieldP0, mu_old: &FieldP0, dt: f64) -> f64 {
    assert!(dt > 0.0, "step size must be positive");
    assert_eq!(mu_new.len(), mesh.num_triangles());
    assert_eq!(mu_old.len(), mesh.num_triangles());
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.triangle_area(t);
        let d = mu_new[t] - mu_old[t];
        num += area * d * d;
        den += area * mu_old[t] * mu_old[t];
    }
    assert!(den > 0.0, "conductivity must not vanish identically");
    Float::sqrt(num / den) / dt
}

/// Owns the stiffness skeleton and the load vector of one run.
pub struct Simulator<'a> {
    cfg: SimConfig,
    pair: &'a RefinedPair,
    rhs: Vec<f64>,
    assembler: StiffnessAssembler,
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: SimConfig, pair: &'a RefinedPair, rhs: &[f64]) -> Result<Self, DynamicsError> {
        cfg.validate()?;
        if rhs.len() != pair.fine.num_nodes() {
            return Err(DynamicsError::DimensionMismatch {
                expected: pair.fine.num_nodes(),
                got: rhs.len(),
            });
        }
        Ok(Simulator {
            cfg,
            pair,
            rhs: rhs.to_vec(),
            assembler: StiffnessAssembler::new(pair),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn solve_potential(
        &mut self,
        mu: &FieldP0,
        warm: Option<&FieldP1>,
    ) -> Result<(FieldP1, SolveReport), DynamicsError> {
        let a = self.assembler.assemble(mu);
        let max_iter = self.cfg.solver_max_iter.unwrap_or_else(|| default_max_iter(a.dim()));
        let x0 = warm.map(|u| u.values());
        let attempt = pcg_solve(&a, &self.rhs, x0, self.cfg.solver_tol, max_iter, self.cfg.precond);
        let (mut u, report) = match attempt {
            Err(SolverError::FactorizationFailed { .. }) if self.cfg.precond == PrecondKind::Ic0 => {
                pcg_solve(&a, &self.rhs, x0, self.cfg.solver_tol, max_iter, PrecondKind::Jacobi)?
            }
            other => other?,
        };
        u.subtract_mean();
        Ok((u, report))
    }

    /// Samples the initial condition and solves for its potential.
    pub fn initial_state(&mut self) -> Result<SimState, DynamicsError> {
        let mu = self.cfg.ic.sample(&self.pair.coarse);
        let (u, report) = self.solve_potential(&mu, None)?;
        Ok(SimState {
            step: 0,
            time: 0.0,
            mu,
            u,
            dt: 0.0,
            var: f64::INFINITY,
            report,
            converged: false,
        })
    }

    /// One forward-Euler transition: rate from the current fields, step size
    /// from the growth cap, update, clamp, then the solve for the new
    /// potential (warm-started from the current one).
    pub fn step(&mut self, state: &SimState) -> Result<SimState, DynamicsError> {
        let beta = self.cfg.beta;
        let g = gradient_norms(self.pair, &state.u);
        let nt = self.pair.coarse.num_triangles();

        let mut delta = Vec::with_capacity(nt);
        let mut max_rel = 0.0f64;
        for t in 0..nt {
            let m = state.mu[t];
            let d = Float::powf(m, beta) * Float::powf(g[t], beta) - m;
            max_rel = max_rel.max(d.abs() / m);
            delta.push(d);
        }

        let dt = match self.cfg.fixed_dt {
            Some(dt) => dt,
            None => {
                let prev_cap = if state.step == 0 {
                    self.cfg.dt_initial
                } else {
                    1.2 * state.dt
                };
                let growth_cap = if max_rel > 0.0 {
                    self.cfg.growth_cap / max_rel
                } else {
                    f64::INFINITY
                };
                self.cfg.dt_max.min(prev_cap).min(growth_cap)
            }
        };

        let mut mu_next = Vec::with_capacity(nt);
        for t in 0..nt {
            let mut v = state.mu[t] + dt * delta[t];
            if self.cfg.clamp_enabled {
                v = v.max(self.cfg.mu_floor);
            } else if v <= 0.0 {
                return Err(DynamicsError::LostPositivity { triangle: t, value: v });
            }
            mu_next.push(v);
        }
        let mu_next = FieldP0::new(mu_next);

        let var = var_metric(&self.pair.coarse, &mu_next, &state.mu, dt);
        let (u, report) = self.solve_potential(&mu_next, Some(&state.u))?;
        Ok(SimState {
            step: state.step + 1,
            time: state.time + dt,
            mu: mu_next,
            u,
            dt,
            var,
            report,
            converged: var <= self.cfg.tau_t,
        })
    }

    /// Diagnostics row for the current state.
    pub fn record(&self, state: &SimState) -> DiagnosticsRecord {
        let coarse = &self.pair.coarse;
        let l = lyapunov(self.pair, &state.mu, &state.u, self.cfg.beta);
        let support = support_stats(coarse, &state.mu, self.cfg.support_threshold);
        DiagnosticsRecord {
            step: state.step,
            time: state.time,
            dt: state.dt,
            var: state.var,
            lyapunov: l.total,
            energy: l.energy,
            mass_term: l.mass_term,
            mu_integral: state.mu.integral(coarse),
            err: self
                .cfg
                .err_reference
                .as_ref()
                .map(|exact| err_metric(coarse, &state.mu, exact)),
            cg_iterations: state.report.iterations,
            mu_min: state.mu.min(),
            mu_max: state.mu.max(),
            support_fraction: support.area_fraction,
        }
    }

    /// Steps until the rate of change drops to the steady-state tolerance or
    /// the step budget runs out, recording diagnostics every
    /// `record_stride` steps and always at the final state.
    pub fn run_to_steady(&mut self) -> Result<(SimState, Vec<DiagnosticsRecord>), DynamicsError> {
        let mut records = Vec::new();
        let mut state = self.initial_state()?;
        records.push(self.record(&state));
        while !state.converged && state.step < self.cfg.max_steps {
            state = self.step(&state)?;
            if state.step % self.cfg.record_stride == 0 || state.converged {
                records.push(self.record(&state));
            }
        }
        if records.last().map(|r| r.step) != Some(state.step) {
            records.push(self.record(&state));
        }
        Ok((state, records))
    }
}

/// Convenience wrapper: build a simulator and run it to steady state.
pub fn run_to_steady(
    cfg: SimConfig,
    pair: &RefinedPair,
    rhs: &[f64],
) -> Result<(SimState, Vec<DiagnosticsRecord>), DynamicsError> {
    Simulator::new(cfg, pair, rhs)?.run_to_steady()
}
