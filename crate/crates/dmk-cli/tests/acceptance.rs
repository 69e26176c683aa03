//! End-to-end acceptance suite. Each test covers one numbered guarantee of
//! the simulator and prints a single summary line; expensive simulation
//! fixtures are shared through lazily initialized statics.

use std::sync::OnceLock;

use dmk_core::assembly::{assemble_stiffness, FieldP0, FieldP1};
use dmk_core::diagnostics::{
    extract_branch_point, gilbert_branch_point, lyapunov, lyapunov_time_derivative,
    steady_residual, support_stats, y_graph_distance, DiagnosticsRecord, ExactRadial,
};
use dmk_core::dynamics::{run_to_steady, InitialCondition, SimConfig, SimState, Simulator};
use dmk_core::forcing::{assemble_rhs, ForcingSpec, Rect};
use dmk_core::mesh::{gen_disk_polar, gen_unit_square, RefinedPair, Triangulation};
use dmk_core::solver::{pcg_solve, PrecondKind};

const RADIAL_BASE_RINGS: usize = 12;
const RADIAL_BASE_SECTORS: usize = 84;
const NETWORK_MESH_N: usize = 48;
const TC1_MESH_N: usize = 32;
const NETWORK_SOLVER_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

struct RadialLevel {
    h: f64,
    err: f64,
    records: Vec<DiagnosticsRecord>,
    state: SimState,
    pair: RefinedPair,
    wall_seconds: f64,
}

fn radial_base_mesh(level: usize) -> Triangulation {
    let mut mesh = gen_disk_polar(RADIAL_BASE_RINGS, RADIAL_BASE_SECTORS);
    for _ in 0..level {
        mesh = mesh.refine_uniform().expect("refinement").fine;
    }
    mesh
}

fn build_radial_family(beta: f64, levels: usize) -> Vec<RadialLevel> {
    let mut out = Vec::new();
    for level in 0..levels {
        let start = std::time::Instant::now();
        let pair = radial_base_mesh(level).refine_uniform().expect("refinement");
        let rhs = assemble_rhs(&ForcingSpec::RadialPiecewise { c1: 1.0, c2: -0.2 }, &pair)
            .expect("radial forcing");
        let mut cfg = SimConfig::new(beta, InitialCondition::Uniform1);
        cfg.err_reference = Some(ExactRadial::new(1.0, beta));
        cfg.record_stride = 1;
        let (state, records) = run_to_steady(cfg, &pair, rhs.values()).expect("radial run");
        let err = records.last().and_then(|r| r.err).expect("error metric");
        out.push(RadialLevel {
            h: pair.coarse.max_diameter(),
            err,
            records,
            state,
            pair,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    out
}

fn radial_family(beta: f64) -> &'static [RadialLevel] {
    static R025: OnceLock<Vec<RadialLevel>> = OnceLock::new();
    static R050: OnceLock<Vec<RadialLevel>> = OnceLock::new();
    static R075: OnceLock<Vec<RadialLevel>> = OnceLock::new();
    static R100: OnceLock<Vec<RadialLevel>> = OnceLock::new();
    if beta == 0.25 {
        R025.get_or_init(|| build_radial_family(0.25, 3))
    } else if beta == 0.5 {
        R050.get_or_init(|| build_radial_family(0.5, 3))
    } else if beta == 0.75 {
        R075.get_or_init(|| build_radial_family(0.75, 3))
    } else if beta == 1.0 {
        R100.get_or_init(|| build_radial_family(1.0, 2))
    } else {
        panic!("no radial fixture for beta = {beta}");
    }
}

struct NetworkRun {
    beta: f64,
    records: Vec<DiagnosticsRecord>,
    state: SimState,
}

struct NetworkScenario {
    pair: RefinedPair,
    runs: Vec<NetworkRun>,
}

fn tc3_forcing() -> ForcingSpec {
    ForcingSpec::DiracSet(vec![([0.5, 0.1], 1.0), ([0.4, 0.9], -0.5), ([0.6, 0.9], -0.5)])
}

fn tc1_forcing() -> ForcingSpec {
    ForcingSpec::Boxes(vec![
        (Rect::new(0.125, 0.375, 0.25, 0.75), 1.0),
        (Rect::new(0.625, 0.875, 0.25, 0.75), -1.0),
    ])
}

fn build_network_scenario(
    mesh_n: usize,
    forcing: &ForcingSpec,
    betas: &[f64],
    ic: impl Fn(f64) -> InitialCondition,
) -> NetworkScenario {
    let pair = gen_unit_square(mesh_n).refine_uniform().expect("refinement");
    let rhs = assemble_rhs(forcing, &pair).expect("network forcing");
    let mut runs = Vec::new();
    for &beta in betas {
        let mut cfg = SimConfig::new(beta, ic(beta));
        cfg.record_stride = 100;
        cfg.max_steps = 20_000;
        cfg.solver_tol = NETWORK_SOLVER_TOL;
        let (state, records) = run_to_steady(cfg, &pair, rhs.values()).expect("network run");
        runs.push(NetworkRun { beta, records, state });
    }
    NetworkScenario { pair, runs }
}

fn tc1_scenario() -> &'static NetworkScenario {
    static TC1: OnceLock<NetworkScenario> = OnceLock::new();
    TC1.get_or_init(|| {
        build_network_scenario(TC1_MESH_N, &tc1_forcing(), &[1.1, 1.5, 3.0], |_| {
            InitialCondition::Uniform1
        })
    })
}

fn tc3_scenario() -> &'static NetworkScenario {
    static TC3: OnceLock<NetworkScenario> = OnceLock::new();
    TC3.get_or_init(|| {
        build_network_scenario(NETWORK_MESH_N, &tc3_forcing(), &[1.1, 1.5, 2.0, 3.0], |_| {
            InitialCondition::Uniform1
        })
    })
}

fn y_tube_scenario() -> &'static NetworkScenario {
    static YTUBE: OnceLock<NetworkScenario> = OnceLock::new();
    YTUBE.get_or_init(|| {
        build_network_scenario(NETWORK_MESH_N, &tc3_forcing(), &[1.5], |_| {
            InitialCondition::y_tube(0.0)
        })
    })
}

/// Final Lyapunov values of the three initial conditions on the coarse
/// radial mesh at beta = 0.5, plus the per-step records of each run.
fn ic_comparison() -> &'static Vec<(InitialCondition, Vec<DiagnosticsRecord>)> {
    static ICS: OnceLock<Vec<(InitialCondition, Vec<DiagnosticsRecord>)>> = OnceLock::new();
    ICS.get_or_init(|| {
        let pair = radial_base_mesh(0).refine_uniform().expect("refinement");
        let rhs = assemble_rhs(&ForcingSpec::RadialPiecewise { c1: 1.0, c2: -0.2 }, &pair)
            .expect("radial forcing");
        [
            InitialCondition::Uniform1,
            InitialCondition::RadialDip,
            InitialCondition::Checkerboard,
        ]
        .into_iter()
        .map(|ic| {
            let mut cfg = SimConfig::new(0.5, ic.clone());
            cfg.record_stride = 1;
            let (_, records) = run_to_steady(cfg, &pair, rhs.values()).expect("ic run");
            (ic, records)
        })
        .collect()
    })
}

/// Lyapunov values and formula rates sampled each step of a fixed-step run.
fn fixed_step_probe() -> &'static (Vec<f64>, Vec<f64>) {
    static PROBE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    PROBE.get_or_init(|| {
        let pair = radial_base_mesh(0).refine_uniform().expect("refinement");
        let rhs = assemble_rhs(&ForcingSpec::RadialPiecewise { c1: 1.0, c2: -0.2 }, &pair)
            .expect("radial forcing");
        let mut cfg = SimConfig::new(0.5, InitialCondition::Uniform1);
        cfg.fixed_dt = Some(1e-3);
        cfg.max_steps = 400;
        let mut sim = Simulator::new(cfg, &pair, rhs.values()).expect("simulator");
        let mut state = sim.initial_state().expect("initial solve");
        let mut values = Vec::new();
        let mut rates = Vec::new();
        for _ in 0..=340 {
            values.push(lyapunov(&pair, &state.mu, &state.u, 0.5).total);
            rates.push(lyapunov_time_derivative(&pair, &state.mu, &state.u, 0.5));
            state = sim.step(&state).expect("step");
        }
        (values, rates)
    })
}

fn least_squares_rate(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in points {
        let (x, y) = (h.ln(), e.ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Connected components of the given triangles, adjacency by shared node.
fn components(mesh: &Triangulation, tris: &[usize]) -> Vec<Vec<usize>> {
    use std::collections::BTreeMap;
    let mut node_owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (local, &t) in tris.iter().enumerate() {
        for &v in &mesh.triangles[t] {
            node_owners.entry(v).or_default().push(local);
        }
    }
    let mut seen = vec![false; tris.len()];
    let mut out = Vec::new();
    for start in 0..tris.len() {
        if seen[start] {
            continue;
        }
        let mut group = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(local) = stack.pop() {
            group.push(tris[local]);
            for &v in &mesh.triangles[tris[local]] {
                for &other in &node_owners[&v] {
                    if !seen[other] {
                        seen[other] = true;
                        stack.push(other);
                    }
                }
            }
        }
        out.push(group);
    }
    out
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_radial_convergence_rates() {
    for beta in [0.25, 0.5, 0.75] {
        let family = radial_family(beta);
        assert_eq!(family.len(), 3);
        let coarse_count = family[0].pair.coarse.num_triangles();
        assert!(
            (1800..=2200).contains(&coarse_count),
            "coarsest mesh has {coarse_count} triangles, expected about 2k"
        );
        for w in family.windows(2) {
            assert!(
                w[1].err < w[0].err,
                "beta = {beta}: err did not decrease ({} -> {})",
                w[0].err,
                w[1].err
            );
        }
        let points: Vec<(f64, f64)> = family.iter().map(|l| (l.h, l.err)).collect();
        let rate = least_squares_rate(&points);
        assert!(
            (0.6..=1.2).contains(&rate),
            "beta = {beta}: rate {rate} outside [0.6, 1.2]"
        );
        let errs: Vec<String> = family.iter().map(|l| format!("{:.5}", l.err)).collect();
        let secs: f64 = family.iter().map(|l| l.wall_seconds).sum();
        println!(
            "criterion 01 PASS beta={beta} errs=[{}] rate={rate:.3} wall={secs:.0}s",
            errs.join(", ")
        );
    }
}

#[test]
fn criterion_02_beta_one_regression() {
    let family = radial_family(1.0);
    for w in family.windows(2) {
        assert!(
            w[1].err < w[0].err,
            "beta = 1: err did not decrease ({} -> {})",
            w[0].err,
            w[1].err
        );
    }
    let points: Vec<(f64, f64)> = family.iter().map(|l| (l.h, l.err)).collect();
    let rate = least_squares_rate(&points);
    assert!(rate >= 0.5, "beta = 1 rate {rate} below 0.5");
    let errs: Vec<String> = family.iter().map(|l| format!("{:.5}", l.err)).collect();
    println!("criterion 02 PASS errs=[{}] rate={rate:.3}", errs.join(", "));
}

fn check_identity_and_monotonicity(
    label: &str,
    beta: f64,
    records: &[DiagnosticsRecord],
    slack: f64,
) {
    for r in records {
        let gap = (r.lyapunov - (r.energy + r.mass_term)).abs();
        assert!(
            gap <= 1e-12 * r.lyapunov.abs().max(1e-300),
            "{label}: split identity off by {gap:e} at step {}",
            r.step
        );
    }
    for w in records.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        assert!(
            next.lyapunov <= prev.lyapunov + slack * prev.lyapunov.abs(),
            "{label} (beta = {beta}): L rose from {:.16e} to {:.16e} between steps {} and {}",
            prev.lyapunov,
            next.lyapunov,
            prev.step,
            next.step
        );
    }
}

#[test]
fn criterion_03_lyapunov_identity_and_monotonicity() {
    let mut scanned = 0usize;
    for beta in [0.25, 0.5, 0.75, 1.0] {
        for (level, l) in radial_family(beta).iter().enumerate() {
            check_identity_and_monotonicity(
                &format!("radial level {level}"),
                beta,
                &l.records,
                1e-10,
            );
            scanned += l.records.len();
        }
    }
    for (ic, records) in ic_comparison() {
        check_identity_and_monotonicity(&format!("{ic:?} start"), 0.5, records, 1e-10);
        scanned += records.len();
    }
    // Exponents above one oscillate within a window; the recorded values sit
    // 100 steps apart and must still descend from checkpoint to checkpoint.
    // The slack covers the noise floor of the 1e-9 elliptic solves, which
    // wiggle L by about 1e-10 relative near the plateau.
    for (name, scenario) in [
        ("tc1", tc1_scenario()),
        ("tc3", tc3_scenario()),
        ("y-tube", y_tube_scenario()),
    ] {
        for run in &scenario.runs {
            check_identity_and_monotonicity(name, run.beta, &run.records, 1e-8);
            scanned += run.records.len();
        }
    }
    println!("criterion 03 PASS records_scanned={scanned}");
}

#[test]
fn criterion_04_dissipation_rate_consistency() {
    let (values, rates) = fixed_step_probe();
    let mut worst: f64 = 0.0;
    for k in 300..320 {
        let fd = (values[k + 1] - values[k - 1]) / 2e-3;
        let rel = (fd - rates[k]).abs() / rates[k].abs();
        worst = worst.max(rel);
    }
    assert!(worst <= 0.05, "worst relative mismatch {worst}");
    println!("criterion 04 PASS worst_rel_diff={worst:.5}");
}

#[test]
fn criterion_05_optimal_value_identity() {
    let finest = &radial_family(0.5)[2];
    let exact = ExactRadial::new(1.0, 0.5);
    let mesh = &finest.pair.coarse;
    let mut reference = 0.0;
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
        reference += mesh.triangle_area(t) * exact.flux(r).abs().powf(1.5) / 1.5;
    }
    let last = finest.records.last().expect("records");
    let rel = (last.lyapunov - reference).abs() / reference.abs();
    assert!(rel <= 0.02, "relative gap {rel} exceeds 2%");
    println!(
        "criterion 05 PASS lyapunov={:.6e} reference={reference:.6e} rel={rel:.5}",
        last.lyapunov
    );
}

#[test]
fn criterion_06_initial_condition_independence() {
    let finals: Vec<f64> = ic_comparison()
        .iter()
        .map(|(_, records)| records.last().expect("records").lyapunov)
        .collect();
    let max = finals.iter().cloned().fold(f64::MIN, f64::max);
    let min = finals.iter().cloned().fold(f64::MAX, f64::min);
    let mean = finals.iter().sum::<f64>() / finals.len() as f64;
    let spread = (max - min) / mean.abs();
    assert!(spread <= 0.01, "final L spread {spread} exceeds 1%");
    println!("criterion 06 PASS finals={finals:?} spread={spread:.2e}");
}

#[test]
fn criterion_07_steady_state_residual() {
    let finest = &radial_family(0.5)[2];
    assert!(finest.state.converged, "finest beta = 0.5 run did not converge");
    let residual = steady_residual(&finest.pair, &finest.state.mu, &finest.state.u, 0.5, 1e-10)
        .expect("residual");
    assert!(residual <= 5e-3, "steady residual {residual}");
    println!("criterion 07 PASS steady_residual={residual:.2e}");
}

#[test]
fn criterion_08_branch_points_and_tube_lock() {
    let scenario = tc3_scenario();
    let h = scenario.pair.coarse.max_diameter();
    let mut previous = 0.0;
    let mut summary = Vec::new();
    for run in &scenario.runs {
        // Network detection threshold: off-network conductivity decays like
        // exp(-t) and at large exponents the variation plateau arrives before
        // that passive decay reaches the clamping floor, so the floor value
        // would classify the whole domain as support. On-network values are
        // orders of magnitude above 1e-6.
        let point = extract_branch_point(&scenario.pair.coarse, &run.state.mu, 1e-6)
            .unwrap_or_else(|| panic!("no branch point found at beta = {}", run.beta));
        let y = point[1];
        assert!(
            y > 0.1 && y < 0.8422,
            "beta = {}: branch y = {y} outside (0.1, 0.8422)",
            run.beta
        );
        assert!(
            y > previous,
            "branch y not increasing: beta = {} gives {y} after {previous}",
            run.beta
        );
        previous = y;
        summary.push(format!("{}:{y:.4}", run.beta));
    }

    let tube = y_tube_scenario();
    let tube_run = &tube.runs[0];
    let reference_y = gilbert_branch_point(0.0);
    let mut worst: f64 = 0.0;
    for t in 0..tube.pair.coarse.num_triangles() {
        if tube_run.state.mu.values()[t] > 1e-10 {
            let d = y_graph_distance(tube.pair.coarse.centroid(t), reference_y);
            worst = worst.max(d);
        }
    }
    let allowance = 4.0 * tube.pair.coarse.max_diameter();
    assert!(
        worst <= allowance,
        "tube support strays {worst} from the reference graph (allowed {allowance})"
    );
    println!(
        "criterion 08 PASS branch_y=[{}] (h={h:.4}) tube_distance={worst:.4}<={allowance:.4}",
        summary.join(", ")
    );
}

#[test]
fn criterion_09_support_concentration() {
    let scenario = tc1_scenario();
    let mesh = &scenario.pair.coarse;
    let mut previous = f64::MAX;
    let mut fractions = Vec::new();
    for run in &scenario.runs {
        let stats = support_stats(mesh, &run.state.mu, 1e-10);
        assert!(
            stats.area_fraction < previous,
            "support fraction not decreasing at beta = {}: {} after {previous}",
            run.beta,
            stats.area_fraction
        );
        previous = stats.area_fraction;
        fractions.push(format!("{}:{:.4}", run.beta, stats.area_fraction));
    }

    // At beta = 1.5 one connected piece of the support must touch both
    // rectangles.
    let run = &scenario.runs[1];
    assert_eq!(run.beta, 1.5);
    let supported: Vec<usize> = (0..mesh.num_triangles())
        .filter(|&t| run.state.mu.values()[t] > 1e-10)
        .collect();
    let left = Rect::new(0.125, 0.375, 0.25, 0.75);
    let right = Rect::new(0.625, 0.875, 0.25, 0.75);
    let linked = components(mesh, &supported).into_iter().any(|group| {
        let touches_left = group.iter().any(|&t| left.contains(mesh.centroid(t)));
        let touches_right = group.iter().any(|&t| right.contains(mesh.centroid(t)));
        touches_left && touches_right
    });
    assert!(linked, "no connected support component links the two rectangles");
    println!("criterion 09 PASS fractions=[{}] linked=true", fractions.join(", "));
}

#[test]
fn criterion_10_solver_against_dense_reference() {
    let pair = gen_unit_square(8).refine_uniform().expect("refinement");
    let n = pair.fine.num_nodes();
    let mu = FieldP0::constant(pair.coarse.num_triangles(), 1.0);
    let a = assemble_stiffness(&pair, &mu);

    // Independent elementwise assembly of the plain Laplacian on the fine
    // mesh.
    let mut dense = vec![vec![0.0f64; n]; n];
    for tri in &pair.fine.triangles {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| pair.fine.nodes[v]).collect();
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
                .abs();
        let b = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let c = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        for i in 0..3 {
            for j in 0..3 {
                dense[tri[i]][tri[j]] += (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
            }
        }
    }
    let mut worst_entry: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            worst_entry = worst_entry.max((dense[i][j] - a.get(i, j)).abs());
        }
    }
    assert!(worst_entry <= 1e-13, "assembly mismatch {worst_entry:e}");

    // Zero row sums, relative to the largest entry, for the unit-coefficient
    // matrix and for one with strongly varying weights.
    let varying = FieldP0::from_centroids(&pair.coarse, |p| 1e-6 + p[0] * p[0] + 3.0 * p[1]);
    for matrix in [&a, &assemble_stiffness(&pair, &varying)] {
        let scale = matrix.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..matrix.dim() {
            let s = matrix.row_sum(i).abs();
            assert!(s <= 1e-12 * scale, "row {i} sums to {s:e}");
        }
    }

    // Dense direct solve of the mean-constrained system for comparison.
    let rhs = assemble_rhs(
        &ForcingSpec::Boxes(vec![
            (Rect::new(0.0, 0.5, 0.0, 1.0), 1.0),
            (Rect::new(0.5, 1.0, 0.0, 1.0), -1.0),
        ]),
        &pair,
    )
    .expect("forcing");
    let m = n + 1;
    let mut aug = vec![vec![0.0f64; m + 1]; m];
    for i in 0..n {
        for j in 0..n {
            aug[i][j] = dense[i][j];
        }
        aug[i][n] = 1.0;
        aug[n][i] = 1.0;
        aug[i][m] = rhs.values()[i];
    }
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r, &s| aug[r][col].abs().total_cmp(&aug[s][col].abs()))
            .unwrap();
        aug.swap(col, pivot);
        assert!(aug[col][col].abs() > 1e-300, "singular augmented system");
        for row in col + 1..m {
            let f = aug[row][col] / aug[col][col];
            for k in col..=m {
                aug[row][k] -= f * aug[col][k];
            }
        }
    }
    let mut direct = vec![0.0f64; m];
    for row in (0..m).rev() {
        let mut v = aug[row][m];
        for k in row + 1..m {
            v -= aug[row][k] * direct[k];
        }
        direct[row] = v / aug[row][row];
    }
    let mean = direct[..n].iter().sum::<f64>() / n as f64;
    for v in &mut direct[..n] {
        *v -= mean;
    }

    let (solution, _) =
        pcg_solve(&a, rhs.values(), None, 1e-13, 10 * n, PrecondKind::Ic0).expect("pcg");
    let mut iterate = FieldP1::new(solution.values().to_vec());
    iterate.subtract_mean();
    let mut worst_node: f64 = 0.0;
    for i in 0..n {
        worst_node = worst_node.max((iterate.values()[i] - direct[i]).abs());
    }
    assert!(worst_node <= 1e-10, "solution mismatch {worst_node:e}");
    println!(
        "criterion 10 PASS assembly_diff={worst_entry:.1e} solve_diff={worst_node:.1e}"
    );
}

#[test]
fn criterion_11_branch_point_oracle() {
    let steiner = gilbert_branch_point(0.0);
    assert!(
        (steiner - 0.84226).abs() <= 1e-4,
        "q = 0 branch point {steiner}"
    );
    let boundary = gilbert_branch_point(1.0);
    assert!((boundary - 0.1).abs() <= 1e-6, "q = 1 branch point {boundary}");
    println!("criterion 11 PASS c(0)={steiner:.6} c(1)={boundary:.7}");
}

#[test]
fn criterion_12_termination() {
    let mut lines = Vec::new();
    for beta in [0.25, 0.5, 0.75, 1.0] {
        for (level, l) in radial_family(beta).iter().enumerate() {
            assert!(
                l.state.converged,
                "radial beta = {beta} level {level} stopped at var = {:e} after {} steps",
                l.state.var,
                l.state.step
            );
        }
        lines.push(format!("radial {beta}: converged"));
    }
    for (name, scenario) in [
        ("tc1", tc1_scenario()),
        ("tc3", tc3_scenario()),
        ("y-tube", y_tube_scenario()),
    ] {
        for run in &scenario.runs {
            if run.state.converged {
                assert!(run.state.var <= 5e-7);
            } else {
                assert!(
                    run.state.var <= 1e-3,
                    "{name} beta = {} neither converged nor plateaued: var = {:e}",
                    run.beta,
                    run.state.var
                );
            }
            lines.push(format!(
                "{name} {}: {}",
                run.beta,
                if run.state.converged { "converged" } else { "plateau" }
            ));
        }
    }
    println!("criterion 12 PASS [{}]", lines.join("; "));
}
