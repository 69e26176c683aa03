//! Run diagnostics: Lyapunov functional, dissipation rate, exact radial
//! reference solutions, steady-state residuals, support statistics, and
//! branch-point probes for network-forming runs.
//!
//! The radial reference lives on the unit disk with a piecewise-constant
//! ring forcing (positive core `r < 1/3`, dead band, negative annulus
//! `r > 2/3`). Writing `Z(r)` for the radial flux primitive
//! `-(1/r) integral_0^r t F(t) dt`, the steady conductivity is `|Z|^beta`
//! and the potential follows by radial quadrature; both are closed-form
//! enough to serve as convergence oracles.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::assembly::{dirichlet_energy, gradient_norms, FieldP0, FieldP1};
use crate::mesh::{RefinedPair, Triangulation};

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticsError {
    /// No triangle exceeded the support threshold.
    EmptySupport { threshold: f64 },
    /// Adaptive quadrature failed to reach its tolerance.
    QuadratureStalled { a: f64, b: f64 },
}

impl fmt::Display for DiagnosticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosticsError::EmptySupport { threshold } => {
                write!(f, "no triangle carries conductivity above {threshold:e}")
            }
            DiagnosticsError::QuadratureStalled { a, b } => {
                write!(f, "adaptive quadrature stalled on [{a}, {b}]")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DiagnosticsError {}

/// Lyapunov functional split into its transport-energy and mass pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovValue {
    pub total: f64,
    /// Weighted Dirichlet energy `1/2 integral mu |grad u|^2`.
    pub energy: f64,
    /// Mass term `1/2 integral mu^((2-beta)/beta) / ((2-beta)/beta)`,
    /// or `1/2 integral ln(mu)` when `beta = 2`.
    pub mass_term: f64,
}

/// Evaluates the Lyapunov functional for conductivity `mu` and its potential
/// `u` (the solution of the weighted Neumann problem for this `mu`).
///
/// `beta = 2` takes the logarithmic branch exactly, not by a limit.
pub fn lyapunov(pair: &RefinedPair, mu: &FieldP0, u: &FieldP1, beta: f64) -> LyapunovValue {
    assert!(beta > 0.0, "flux exponent must be positive");
    let energy = dirichlet_energy(pair, mu, u);
    let coarse = &pair.coarse;
    let mut mass = 0.0;
    if beta == 2.0 {
        for t in 0..coarse.num_triangles() {
            mass += coarse.triangle_area(t) * Float::ln(mu[t]);
        }
    } else {
        let e = (2.0 - beta) / beta;
        for t in 0..coarse.num_triangles() {
            mass += coarse.triangle_area(t) * Float::powf(mu[t], e) / e;
        }
    }
    mass *= 0.5;
    LyapunovValue { total: energy + mass, energy, mass_term: mass }
}

/// Time derivative of the Lyapunov functional along the conductivity flow,
/// evaluated from the current fields:
///
/// ```text
///   dL/dt = -1/2 sum_T area_T mu_T^beta (g_T^beta - mu_T^(1-beta))
///                                        (g_T^2    - mu_T^(2(1-beta)/beta))
/// ```
///
/// Both factors change sign together at `g = mu^((1-beta)/beta)`, so the
/// result is never positive.
pub fn lyapunov_time_derivative(pair: &RefinedPair, mu: &FieldP0, u: &FieldP1, beta: f64) -> f64 {
    assert!(beta > 0.0, "flux exponent must be positive");
    let g = gradient_norms(pair, u);
    let coarse = &pair.coarse;
    let mut acc = 0.0;
    for t in 0..coarse.num_triangles() {
        let (m, gt) = (mu[t], g[t]);
        let first = Float::powf(gt, beta) - Float::powf(m, 1.0 - beta);
        let second = gt * gt - Float::powf(m, 2.0 * (1.0 - beta) / beta);
        acc += coarse.triangle_area(t) * Float::powf(m, beta) * first * second;
    }
    -0.5 * acc
}

/// Exact steady solution of the ring-forced problem on the unit disk, valid
/// for `0 <= beta <= 1` (the congested regime; `beta = 0` is the plain
/// Poisson case used for cross-checks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactRadial {
    c1: f64,
    c2: f64,
    beta: f64,
}

impl ExactRadial {
    /// Core density `c1 > 0`; the annulus density is `-c1/5`, the exact
    /// balance of the two support areas.
    pub fn new(c1: f64, beta: f64) -> Self {
        assert!(c1 > 0.0, "core density must be positive");
        assert!((0.0..=1.0).contains(&beta), "radial reference needs 0 <= beta <= 1");
        ExactRadial { c1, c2: -c1 / 5.0, beta }
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Congestion exponent `p = (2 - beta) / (1 - beta)` of the steady-state
    /// problem; infinite at `beta = 1`.
    pub fn p_exponent(&self) -> f64 {
        (2.0 - self.beta) / (1.0 - self.beta)
    }

    /// Radial flux primitive `Z(r) = -(1/r) integral_0^r t F(t) dt`:
    ///
    /// ```text
    ///   r <= 1/3:        -c1 r / 2
    ///   1/3 < r <= 2/3:  -c1 / (18 r)
    ///   2/3 < r <= 1:    -(1/r) (c1/18 + c2 (r^2 - 4/9) / 2)
    /// ```
    ///
    /// With the balanced `c2` this vanishes at `r = 1`.
    pub fn flux(&self, r: f64) -> f64 {
        assert!((0.0..=1.0 + 1e-12).contains(&r), "radius out of range: {r}");
        if r <= 1.0 / 3.0 {
            -self.c1 * r / 2.0
        } else if r <= 2.0 / 3.0 {
            -self.c1 / (18.0 * r)
        } else {
            -(self.c1 / 18.0 + self.c2 * (r * r - 4.0 / 9.0) / 2.0) / r
        }
    }

    /// Steady conductivity `|Z(r)|^beta`.
    pub fn conductivity(&self, r: f64) -> f64 {
        assert!(self.beta > 0.0);
        Float::powf(self.flux(r).abs(), self.beta)
    }

    /// Forcing density at radius `r`.
    pub fn forcing(&self, r: f64) -> f64 {
        if r < 1.0 / 3.0 {
            self.c1
        } else if r > 2.0 / 3.0 {
            self.c2
        } else {
            0.0
        }
    }

    /// Steady potential `U(r) = -integral_r^1 sign(Z) |Z|^(1-beta) dt`,
    /// normalized to zero at the boundary; requires `beta < 1`.
    ///
    /// Integration is adaptive Simpson to absolute tolerance 1e-10, split at
    /// the forcing interfaces where `Z` has kinks.
    pub fn potential(&self, r: f64) -> Result<f64, DiagnosticsError> {
        assert!(self.beta < 1.0, "potential is unbounded in the beta = 1 limit");
        let e = 1.0 - self.beta;
        let integrand = |t: f64| {
            let z = self.flux(t);
            z.signum() * Float::powf(z.abs(), e)
        };
        let mut total = 0.0;
        for cut in [1.0 / 3.0, 2.0 / 3.0, 1.0] {
            let lo = r.max(match cut {
                c if c == 1.0 / 3.0 => 0.0,
                c if c == 2.0 / 3.0 => 1.0 / 3.0,
                _ => 2.0 / 3.0,
            });
            if lo < cut {
                total += adaptive_simpson(&integrand, lo, cut, 1e-10 / 3.0)?;
            }
        }
        Ok(-total)
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<f64, DiagnosticsError> {
    fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64, DiagnosticsError> {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(DiagnosticsError::QuadratureStalled { a, b });
        }
        let l = recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)?;
        let r = recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?;
        Ok(l + r)
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 48)
}

/// Relative area-weighted L2 distance between a P0 conductivity and the
/// exact radial steady state sampled at centroids:
/// `|mu - mu_exact| / |mu_exact|`.
pub fn err_metric(mesh: &Triangulation, mu: &FieldP0, exact: &ExactRadial) -> f64 {
    assert_eq!(mu.len(), mesh.num_triangles());
    let mut num = 0.0;
    let mut den = 0.0;
    for t in 0..mesh.num_triangles() {
        let c = mesh.centroid(t);
        let reference = exact.conductivity(Float::hypot(c[0], c[1]));
        let area = mesh.triangle_area(t);
        let d = mu[t] - reference;
        num += area * d * d;
        den += area * reference * reference;
    }
    Float::sqrt(num / den)
}

/// Worst relative mismatch of the steady-state relation
/// `mu = g^(beta / (1 - beta))` over the support `mu > threshold`.
///
/// Not defined at `beta = 1`; an empty support is an error.
pub fn steady_residual(
    pair: &RefinedPair,
    mu: &FieldP0,
    u: &FieldP1,
    beta: f64,
    threshold: f64,
) -> Result<f64, DiagnosticsError> {
    assert!(beta > 0.0 && beta != 1.0, "steady-state exponent undefined at beta = 1");
    let g = gradient_norms(pair, u);
    let exponent = beta / (1.0 - beta);
    let mut worst: Option<f64> = None;
    for t in 0..pair.coarse.num_triangles() {
        if mu[t] <= threshold {
            continue;
        }
        let target = Float::powf(g[t], exponent);
        let residual = if target.is_finite() {
            (mu[t] - target).abs() / mu[t].max(target)
        } else {
            1.0
        };
        worst = Some(worst.map_or(residual, |w: f64| w.max(residual)));
    }
    worst.ok_or(DiagnosticsError::EmptySupport { threshold })
}

/// Support of a P0 field above a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportStats {
    /// Supported area over total area.
    pub area_fraction: f64,
    pub triangle_count: usize,
}

pub fn support_stats(mesh: &Triangulation, mu: &FieldP0, threshold: f64) -> SupportStats {
    assert_eq!(mu.len(), mesh.num_triangles());
    let mut supported = 0.0;
    let mut total = 0.0;
    let mut count = 0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.triangle_area(t);
        total += area;
        if mu[t] > threshold {
            supported += area;
            count += 1;
        }
    }
    SupportStats { area_fraction: supported / total, triangle_count: count }
}

/// Optimal branch height of the reference Y-shaped network: one unit of mass
/// enters at `(0.5, 0.1)`, leaves in halves at `(0.4, 0.9)` and `(0.6, 0.9)`,
/// and a branch at `(0.5, c)` costs
/// `(c - 0.1) + 2 * 0.5^q * sqrt(0.01 + (0.9 - c)^2)`
/// with concavity exponent `q` of the flux cost.
///
/// Golden-section minimization over `c in [0.1, 0.9]` to 1e-8. The optimum
/// moves from `0.9 - 0.1/sqrt(3)` (the Steiner point) at `q = 0` down to the
/// source height 0.1 as `q` approaches 1.
pub fn gilbert_branch_point(q: f64) -> f64 {
    assert!((0.0..=1.0).contains(&q), "cost exponent must lie in [0, 1]");
    let w = 2.0 * Float::powf(0.5, q);
    let cost = |c: f64| (c - 0.1) + w * Float::sqrt(0.01 + (0.9 - c) * (0.9 - c));
    golden_section_min(cost, 0.1, 0.9, 1e-8)
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (Float::sqrt(5.0f64) - 1.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Distance from `p` to the segment `ab`.
pub fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Float::hypot(p[0] - (a[0] + t * ab[0]), p[1] - (a[1] + t * ab[1]))
}

/// Distance from `p` to the reference Y-shaped graph with branch height
/// `branch_y`: trunk `(0.5, 0.1)-(0.5, branch_y)` and two arms up to
/// `(0.4, 0.9)` and `(0.6, 0.9)`.
pub fn y_graph_distance(p: [f64; 2], branch_y: f64) -> f64 {
    let b = [0.5, branch_y];
    point_segment_distance(p, [0.5, 0.1], b)
        .min(point_segment_distance(p, b, [0.4, 0.9]))
        .min(point_segment_distance(p, b, [0.6, 0.9]))
}

/// Locates the branch point of a Y-shaped equilibrium support on the unit
/// square.
///
/// Horizontal strips of height `2h` (h = longest mesh edge) are swept from
/// `y = 0.15` upward in steps of `h/2`. Within a strip, supported triangles
/// (`mu > threshold`) are clustered by shared-node connectivity; the lowest
/// strip whose support splits into two or more clusters with centroids
/// laterally separated by more than `4h` marks the branch, and the
/// area-weighted centroid of the strip's support is returned. `None` if no
/// strip below `y = 0.88` splits.
pub fn extract_branch_point(
    mesh: &Triangulation,
    mu: &FieldP0,
    threshold: f64,
) -> Option<[f64; 2]> {
    assert_eq!(mu.len(), mesh.num_triangles());
    let h = mesh.max_diameter();
    let strip_height = 2.0 * h;
    let mut strip_start = 0.15;
    while strip_start < 0.88 {
        let strip_end = strip_start + strip_height;
        let strip: Vec<usize> = (0..mesh.num_triangles())
            .filter(|&t| {
                if mu[t] <= threshold {
                    return false;
                }
                let y = mesh.centroid(t)[1];
                y >= strip_start && y < strip_end
            })
            .collect();
        if strip.len() >= 2 {
            let clusters = connectivity_clusters(mesh, &strip);
            if clusters.len() >= 2 && max_lateral_separation(mesh, &clusters) > 4.0 * h {
                let mut cx = 0.0;
                let mut cy = 0.0;
                let mut area = 0.0;
                for &t in &strip {
                    let a = mesh.triangle_area(t);
                    let c = mesh.centroid(t);
                    cx += a * c[0];
                    cy += a * c[1];
                    area += a;
                }
                return Some([cx / area, cy / area]);
            }
        }
        strip_start += 0.5 * h;
    }
    None
}

/// Groups the given triangles into connected components, two triangles being
/// adjacent when they share a node.
fn connectivity_clusters(mesh: &Triangulation, tris: &[usize]) -> Vec<Vec<usize>> {
    let mut node_owners: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (local, &t) in tris.iter().enumerate() {
        for &v in &mesh.triangles[t] {
            node_owners.entry(v).or_default().push(local);
        }
    }
    let mut visited = vec![false; tris.len()];
    let mut clusters = Vec::new();
    for start in 0..tris.len() {
        if visited[start] {
            continue;
        }
        let mut stack = vec![start];
        visited[start] = true;
        let mut cluster = Vec::new();
        while let Some(local) = stack.pop() {
            cluster.push(tris[local]);
            for &v in &mesh.triangles[tris[local]] {
                for &other in &node_owners[&v] {
                    if !visited[other] {
                        visited[other] = true;
                        stack.push(other);
                    }
                }
            }
        }
        clusters.push(cluster);
    }
    clusters
}

fn max_lateral_separation(mesh: &Triangulation, clusters: &[Vec<usize>]) -> f64 {
    let centroids: Vec<f64> = clusters
        .iter()
        .map(|cluster| {
            let mut cx = 0.0;
            let mut area = 0.0;
            for &t in cluster {
                let a = mesh.triangle_area(t);
                cx += a * mesh.centroid(t)[0];
                area += a;
            }
            cx / area
        })
        .collect();
    let mut best = 0.0f64;
    for i in 0..centroids.len() {
        for j in i + 1..centroids.len() {
            best = best.max((centroids[i] - centroids[j]).abs());
        }
    }
    best
}

/// One row of the per-step run log.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
    /// Relative rate of change `|mu_next - mu| / (dt |mu|)` in the
    /// area-weighted L2 norm; the steady-state detector.
    pub var: f64,
    pub lyapunov: f64,
    pub energy: f64,
    pub mass_term: f64,
    pub mu_integral: f64,
    /// Relative distance to the exact radial steady state, when available.
    pub err: Option<f64>,
    pub cg_iterations: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub support_fraction: f64,
}
