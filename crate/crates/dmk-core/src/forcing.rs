//! Load vector assembly for the Neumann problem.
//!
//! Three forcing families: axis-aligned boxes with constant densities,
//! a radially piecewise-constant density on the unit disk (positive core,
//! dead ring, negative annulus), and weighted Dirac sets snapped to fine
//! nodes. Densities are integrated with one-point centroid quadrature, so a
//! P1 test function receives `f(centroid) * area / 3` per fine triangle.
//!
//! The compatibility condition of the Neumann problem requires the load to
//! sum to zero. After raw assembly the negative entries are rescaled by
//! `s = (sum of positive entries) / (-sum of negative entries)`, mirroring
//! the usual practice of tuning the sink strength to the discrete source;
//! on meshes aligned with the forcing geometry `s` is 1 up to roundoff.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::RefinedPair;

/// Axis-aligned rectangle, half-open test irrelevant: membership is strict
/// inequality on all four sides.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        assert!(x0 < x1 && y0 < y1, "rectangle sides must be ordered");
        Rect { x0, x1, y0, y1 }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }
}

/// Forcing term of the elliptic equation.
#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    /// Constant densities on axis-aligned rectangles; zero elsewhere.
    Boxes(Vec<(Rect, f64)>),
    /// On the unit disk: density `c1` for `r < 1/3`, zero for
    /// `1/3 <= r <= 2/3`, `c2` for `r > 2/3`. Exact balance needs
    /// `c2 = -c1 / 5` (the annulus has five times the core's area).
    RadialPiecewise { c1: f64, c2: f64 },
    /// Point masses `(position, weight)` snapped to the nearest fine node.
    DiracSet(Vec<([f64; 2], f64)>),
}

impl ForcingSpec {
    /// Piecewise density evaluated at a point (meaningless for Dirac sets).
    fn density(&self, p: [f64; 2]) -> f64 {
        match self {
            ForcingSpec::Boxes(boxes) => boxes
                .iter()
                .filter(|(rect, _)| rect.contains(p))
                .map(|&(_, value)| value)
                .sum(),
            ForcingSpec::RadialPiecewise { c1, c2 } => {
                let r = Float::hypot(p[0], p[1]);
                if r < 1.0 / 3.0 {
                    *c1
                } else if r > 2.0 / 3.0 {
                    *c2
                } else {
                    0.0
                }
            }
            ForcingSpec::DiracSet(_) => 0.0,
        }
    }
}

/// Balanced load vector on the fine nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RhsVector {
    values: Vec<f64>,
    positive_total: f64,
    negative_total: f64,
    /// Factor applied to the negative entries to reach exact balance.
    balance_factor: f64,
}

impl RhsVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sum of the positive entries after balancing.
    pub fn positive_total(&self) -> f64 {
        self.positive_total
    }

    /// Sum of the negative entries after balancing.
    pub fn negative_total(&self) -> f64 {
        self.negative_total
    }

    pub fn balance_factor(&self) -> f64 {
        self.balance_factor
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingError {
    /// The raw load has no positive or no negative part, so it cannot be
    /// balanced against itself.
    Unbalanceable { positive: f64, negative: f64 },
    /// A Dirac point fell outside the triangulated domain.
    PointOutsideDomain { index: usize, point: [f64; 2] },
    /// The description contains no sources at all.
    EmptySpec,
}

impl fmt::Display for ForcingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForcingError::Unbalanceable { positive, negative } => write!(
                f,
                "load has positive total {positive} and negative total {negative}; both signs are required"
            ),
            ForcingError::PointOutsideDomain { index, point } => write!(
                f,
                "point source {index} at ({}, {}) lies outside the domain",
                point[0], point[1]
            ),
            ForcingError::EmptySpec => write!(f, "forcing description is empty"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ForcingError {}

/// Assembles the balanced load vector for `spec` on the fine mesh of `pair`.
pub fn assemble_rhs(spec: &ForcingSpec, pair: &RefinedPair) -> Result<RhsVector, ForcingError> {
    let fine = &pair.fine;
    let mut values = vec![0.0f64; fine.num_nodes()];

    match spec {
        ForcingSpec::Boxes(boxes) => {
            if boxes.is_empty() {
                return Err(ForcingError::EmptySpec);
            }
            integrate_density(spec, pair, &mut values);
        }
        ForcingSpec::RadialPiecewise { .. } => {
            integrate_density(spec, pair, &mut values);
        }
        ForcingSpec::DiracSet(points) => {
            if points.is_empty() {
                return Err(ForcingError::EmptySpec);
            }
            for (index, &(point, weight)) in points.iter().enumerate() {
                if !fine.contains_point(point, 1e-9) {
                    return Err(ForcingError::PointOutsideDomain { index, point });
                }
                values[fine.nearest_node(point)] += weight;
            }
        }
    }

    let positive_raw: f64 = values.iter().filter(|&&v| v > 0.0).sum();
    let negative_raw: f64 = values.iter().filter(|&&v| v < 0.0).sum();
    if !(positive_raw > 0.0) || !(negative_raw < 0.0) {
        return Err(ForcingError::Unbalanceable {
            positive: positive_raw,
            negative: negative_raw,
        });
    }
    let s = positive_raw / -negative_raw;
    for v in values.iter_mut() {
        if *v < 0.0 {
            *v *= s;
        }
    }
    let negative_total: f64 = values.iter().filter(|&&v| v < 0.0).sum();

    Ok(RhsVector {
        values,
        positive_total: positive_raw,
        negative_total,
        balance_factor: s,
    })
}

fn integrate_density(spec: &ForcingSpec, pair: &RefinedPair, values: &mut [f64]) {
    let fine = &pair.fine;
    for t in 0..fine.num_triangles() {
        let f = spec.density(fine.centroid(t));
        if f == 0.0 {
            continue;
        }
        let contribution = f * fine.triangle_area(t) / 3.0;
        for &v in &fine.triangles[t] {
            values[v] += contribution;
        }
    }
}

/// Random source cloud of one test case: `count` unit sources uniform in
/// `[0.1, 0.9]^2` plus one sink of weight `-count` at `(0.05, 0.05)`.
/// The same seed always yields the same cloud.
pub fn make_tc2_sources(seed: u64, count: usize) -> Vec<([f64; 2], f64)> {
    assert!(count >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count + 1);
    for _ in 0..count {
        let x = 0.1 + 0.8 * rng.gen::<f64>();
        let y = 0.1 + 0.8 * rng.gen::<f64>();
        points.push(([x, y], 1.0));
    }
    points.push(([0.05, 0.05], -(count as f64)));
    points
}
