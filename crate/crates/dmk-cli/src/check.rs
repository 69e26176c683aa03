//! Built-in self-test battery for the `check` subcommand: fast invariant
//! checks that exercise the whole pipeline without touching the filesystem.
//! Each check prints one PASS/FAIL line; the battery fails if any check
//! does.

use dmk_core::assembly::{
    assemble_stiffness, dirichlet_energy, gradient_norms, FieldP0, FieldP1,
};
use dmk_core::diagnostics::{
    gilbert_branch_point, lyapunov, lyapunov_time_derivative, ExactRadial,
};
use dmk_core::dynamics::{run_to_steady, InitialCondition, SimConfig};
use dmk_core::forcing::{assemble_rhs, ForcingSpec};
use dmk_core::mesh::{gen_disk_polar, gen_unit_square};
use dmk_core::solver::{default_max_iter, pcg_solve, PrecondKind};

type CheckResult = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn refinement_partitions_area() -> CheckResult {
    for mesh in [gen_unit_square(4), gen_disk_polar(3, 12)] {
        let pair = mesh.refine_uniform().map_err(|e| e.to_string())?;
        let worst = pair.partition_error();
        ensure(worst < 1e-12, || format!("child areas drift by {worst:e}"))?;
    }
    Ok(())
}

fn stiffness_has_zero_row_sums() -> CheckResult {
    let pair = gen_unit_square(5).refine_uniform().map_err(|e| e.to_string())?;
    let mu = FieldP0::from_centroids(&pair.coarse, |p| 0.5 + p[0] + 2.0 * p[1]);
    let a = assemble_stiffness(&pair, &mu);
    let scale = a.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    for i in 0..a.dim() {
        let s = a.row_sum(i).abs();
        ensure(s <= 1e-12 * scale, || format!("row {i} sums to {s:e}"))?;
    }
    Ok(())
}

fn elliptic_solve_is_consistent() -> CheckResult {
    let pair = gen_unit_square(6).refine_uniform().map_err(|e| e.to_string())?;
    let mu = FieldP0::constant(pair.coarse.num_triangles(), 1.0);
    let a = assemble_stiffness(&pair, &mu);
    let spec = ForcingSpec::Boxes(vec![
        (dmk_core::forcing::Rect::new(0.0, 0.5, 0.0, 1.0), 1.0),
        (dmk_core::forcing::Rect::new(0.5, 1.0, 0.0, 1.0), -1.0),
    ]);
    let b = assemble_rhs(&spec, &pair).map_err(|e| e.to_string())?;
    let (u, report) = pcg_solve(
        &a,
        b.values(),
        None,
        1e-11,
        default_max_iter(a.dim()),
        PrecondKind::Ic0,
    )
    .map_err(|e| e.to_string())?;

    // True residual against the tolerance the solver promised.
    let mut r = b.values().to_vec();
    let mut au = vec![0.0; a.dim()];
    a.matvec(u.values(), &mut au);
    for i in 0..r.len() {
        r[i] -= au[i];
    }
    let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bnorm: f64 = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    ensure(rnorm <= 2e-11 * bnorm, || {
        format!("residual {rnorm:e} exceeds tolerance ({} iterations)", report.iterations)
    })?;

    // Weak form: twice the energy equals the load functional b'u.
    let e = dirichlet_energy(&pair, &mu, &u);
    let bu: f64 = b.values().iter().zip(u.values()).map(|(x, y)| x * y).sum();
    ensure((2.0 * e - bu).abs() <= 1e-9 * bu.abs().max(1.0), || {
        format!("energy identity broken: 2E = {:e}, b'u = {bu:e}", 2.0 * e)
    })
}

fn gradient_energy_identity_holds() -> CheckResult {
    let pair = gen_unit_square(5).refine_uniform().map_err(|e| e.to_string())?;
    let mu = FieldP0::from_centroids(&pair.coarse, |p| 1.0 + p[0] * p[1]);
    let u = FieldP1::new(
        pair.fine
            .nodes
            .iter()
            .map(|p| (3.1 * p[0]).sin() * (2.7 * p[1] + 0.4).cos())
            .collect(),
    );
    let g = gradient_norms(&pair, &u);
    let mut quad = 0.0;
    for t in 0..pair.coarse.num_triangles() {
        quad += 0.5 * mu[t] * g[t] * g[t] * pair.coarse.triangle_area(t);
    }
    let direct = dirichlet_energy(&pair, &mu, &u);
    ensure((quad - direct).abs() <= 1e-12 * direct.max(1.0), || {
        format!("quadrature energy {quad:e} vs elementwise {direct:e}")
    })
}

fn branch_oracle_hits_known_limits() -> CheckResult {
    let steiner = 0.9 - 0.1 / 3.0f64.sqrt();
    let c0 = gilbert_branch_point(0.0);
    ensure((c0 - steiner).abs() < 1e-6, || format!("c(0) = {c0}"))?;
    let c1 = gilbert_branch_point(1.0);
    ensure((c1 - 0.1).abs() < 1e-6, || format!("c(1) = {c1}"))
}

fn exact_radial_reference_is_wired() -> CheckResult {
    let exact = ExactRadial::new(1.0, 0.5);
    ensure((exact.flux(1.0 / 3.0) + 1.0 / 6.0).abs() < 1e-14, || {
        format!("flux at the inner interface: {}", exact.flux(1.0 / 3.0))
    })?;
    ensure(exact.flux(1.0).abs() < 1e-14, || {
        format!("flux at the boundary: {}", exact.flux(1.0))
    })?;
    let u1 = exact.potential(1.0).map_err(|e| e.to_string())?;
    ensure(u1 == 0.0, || format!("boundary potential {u1}"))
}

fn unforced_run_decays_to_floor() -> CheckResult {
    let pair = gen_unit_square(2).refine_uniform().map_err(|e| e.to_string())?;
    let rhs = vec![0.0; pair.fine.num_nodes()];
    let mut cfg = SimConfig::new(1.5, InitialCondition::Uniform1);
    cfg.max_steps = 300;
    let (state, _) = run_to_steady(cfg, &pair, &rhs).map_err(|e| e.to_string())?;
    ensure(state.converged, || "decay run did not reach steady state".into())?;
    ensure(state.mu.max() <= 1e-10, || {
        format!("decay stalled at {:e}", state.mu.max())
    })
}

fn lyapunov_pieces_add_up_and_dissipate() -> CheckResult {
    let pair = gen_unit_square(4).refine_uniform().map_err(|e| e.to_string())?;
    // Deterministic but nonuniform fields.
    let mu = FieldP0::from_centroids(&pair.coarse, |p| 0.2 + (7.0 * p[0] + 3.0 * p[1]).sin().abs());
    let u = FieldP1::new(
        pair.fine
            .nodes
            .iter()
            .map(|p| (5.0 * p[0] - 2.0 * p[1]).cos())
            .collect(),
    );
    for beta in [0.5, 1.0, 2.0, 3.0] {
        let l = lyapunov(&pair, &mu, &u, beta);
        ensure(
            (l.total - l.energy - l.mass_term).abs() <= 1e-12 * l.total.abs().max(1.0),
            || format!("split disagrees at beta = {beta}"),
        )?;
        let rate = lyapunov_time_derivative(&pair, &mu, &u, beta);
        ensure(rate <= 1e-12, || format!("positive dissipation {rate:e} at beta = {beta}"))?;
    }
    Ok(())
}

/// Every check with its display name.
pub fn battery() -> Vec<(&'static str, fn() -> CheckResult)> {
    vec![
        ("refinement partitions parent areas", refinement_partitions_area),
        ("stiffness rows sum to zero", stiffness_has_zero_row_sums),
        ("elliptic solve meets tolerance and energy identity", elliptic_solve_is_consistent),
        ("gradient norms reproduce the energy", gradient_energy_identity_holds),
        ("branch-point oracle endpoints", branch_oracle_hits_known_limits),
        ("exact radial reference values", exact_radial_reference_is_wired),
        ("unforced conductivity decays to the floor", unforced_run_decays_to_floor),
        ("Lyapunov split and dissipation sign", lyapunov_pieces_add_up_and_dissipate),
    ]
}

/// Runs the battery, printing one line per check; true when all pass.
pub fn run_battery() -> bool {
    let mut all_ok = true;
    for (name, check) in battery() {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                all_ok = false;
            }
        }
    }
    all_ok
}
