//! Conforming planar triangulations, structured generators, and uniform
//! (red, midpoint) refinement.
//!
//! Conventions:
//!  - node coordinates are `[x, y]` in `f64`,
//!  - triangles are triples of node indices, counterclockwise,
//!  - an edge is interior iff shared by exactly two triangles,
//!  - boundary edges are stored as canonical `(min, max)` index pairs.
//!
//! [`Triangulation::refine_uniform`] splits every triangle into four children
//! through the edge midpoints and returns a [`RefinedPair`] tying the two
//! levels together: piecewise-constant data lives on the coarse mesh,
//! piecewise-linear data on the fine one.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

/// Validation or construction failure for a triangulation.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshError {
    /// A triangle references a node index outside the node array.
    NodeIndexOutOfRange { triangle: usize, index: usize },
    /// A triangle repeats a node index.
    RepeatedNode { triangle: usize },
    /// A triangle has non-positive signed area (degenerate or clockwise).
    NonPositiveArea { triangle: usize, area: f64 },
    /// An edge is shared by more than two triangles.
    NonConformingEdge { a: usize, b: usize, count: usize },
    /// A coordinate is NaN or infinite.
    NonFiniteCoordinate { node: usize },
    /// Mesh has no triangles or no nodes.
    Empty,
    /// Free-form parameter problem reported by a generator or reader.
    InvalidParameter(String),
}

impl fmt::Display for MeshError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeshError::NodeIndexOutOfRange { triangle, index } => {
                write!(f, "triangle {triangle} references node {index} out of range")
            }
            MeshError::RepeatedNode { triangle } => {
                write!(f, "triangle {triangle} repeats a node index")
            }
            MeshError::NonPositiveArea { triangle, area } => {
                write!(f, "triangle {triangle} has non-positive area {area}")
            }
            MeshError::NonConformingEdge { a, b, count } => {
                write!(f, "edge ({a}, {b}) is shared by {count} triangles")
            }
            MeshError::NonFiniteCoordinate { node } => {
                write!(f, "node {node} has a non-finite coordinate")
            }
            MeshError::Empty => write!(f, "mesh has no nodes or no triangles"),
            MeshError::InvalidParameter(msg) => write!(f, "{msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MeshError {}

/// Conforming triangulation of a planar domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    /// Node coordinates `[x, y]`.
    pub nodes: Vec<[f64; 2]>,
    /// Node index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Canonical `(min, max)` index pairs of edges on the domain boundary.
    pub boundary_edges: Vec<[usize; 2]>,
}

/// Area and P1 basis gradients of one triangle.
///
/// `grads[i]` is the (constant) gradient of the hat function that is 1 on
/// local vertex `i` and 0 on the other two.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

/// A coarse triangulation together with its uniform refinement.
#[derive(Debug, Clone)]
pub struct RefinedPair {
    pub coarse: Triangulation,
    pub fine: Triangulation,
    /// Coarse triangle owning each fine triangle; `parent_of.len() == 4 * coarse.triangles.len()`.
    pub parent_of: Vec<usize>,
    /// Fine node index of each coarse node (the refinement keeps coarse nodes first,
    /// so this is the identity embedding).
    pub coarse_node_embed: Vec<usize>,
}

fn signed_area(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Triangulation {
    /// Builds a triangulation from nodes and triangles, deriving boundary
    /// edges and validating conformity.
    pub fn from_parts(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let mut mesh = Triangulation {
            nodes,
            triangles,
            boundary_edges: Vec::new(),
        };
        let census = mesh.validate_and_census()?;
        mesh.boundary_edges = census
            .into_iter()
            .filter(|&(_, count)| count == 1)
            .map(|((a, b), _)| [a, b])
            .collect();
        Ok(mesh)
    }

    /// Checks node indices, orientation and edge conformity; returns the edge
    /// census (canonical edge -> number of incident triangles).
    fn validate_and_census(&self) -> Result<BTreeMap<(usize, usize), usize>, MeshError> {
        if self.nodes.is_empty() || self.triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        for (i, p) in self.nodes.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(MeshError::NonFiniteCoordinate { node: i });
            }
        }
        let n = self.nodes.len();
        let mut census: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                if v >= n {
                    return Err(MeshError::NodeIndexOutOfRange { triangle: t, index: v });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedNode { triangle: t });
            }
            let area = signed_area(self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]);
            if !(area > 0.0) {
                return Err(MeshError::NonPositiveArea { triangle: t, area });
            }
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                *census.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &census {
            if count > 2 {
                return Err(MeshError::NonConformingEdge { a, b, count });
            }
        }
        Ok(census)
    }

    /// Full invariant check (usable on externally constructed meshes).
    pub fn validate(&self) -> Result<(), MeshError> {
        let census = self.validate_and_census()?;
        let derived: Vec<[usize; 2]> = census
            .into_iter()
            .filter(|&(_, count)| count == 1)
            .map(|((a, b), _)| [a, b])
            .collect();
        let mut stored = self.boundary_edges.clone();
        for e in stored.iter_mut() {
            *e = [e[0].min(e[1]), e[0].max(e[1])];
        }
        stored.sort_unstable();
        if stored != derived {
            return Err(MeshError::InvalidParameter(String::from(
                "stored boundary edges disagree with the edge census",
            )));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Signed area of triangle `t` (positive for valid meshes).
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
        ]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Longest edge over all triangles (the mesh size h).
    pub fn max_diameter(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let p = self.nodes[tri[k]];
                let q = self.nodes[tri[(k + 1) % 3]];
                let d = Float::hypot(q[0] - p[0], q[1] - p[1]);
                h = h.max(d);
            }
        }
        h
    }

    /// Sorted canonical edge list (interior and boundary).
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut set: BTreeMap<(usize, usize), ()> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                set.insert(edge_key(tri[k], tri[(k + 1) % 3]), ());
            }
        }
        set.into_keys().map(|(a, b)| [a, b]).collect()
    }

    /// Area and hat-function gradients of triangle `t`.
    ///
    /// For vertices `p0, p1, p2` the gradient of hat `i` is the 90-degree
    /// rotation of the opposite edge divided by twice the area, so the three
    /// gradients sum to zero.
    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[t];
        let (p0, p1, p2) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        let area = signed_area(p0, p1, p2);
        let inv = 1.0 / (2.0 * area);
        ElementGeometry {
            area,
            grads: [
                [(p1[1] - p2[1]) * inv, (p2[0] - p1[0]) * inv],
                [(p2[1] - p0[1]) * inv, (p0[0] - p2[0]) * inv],
                [(p0[1] - p1[1]) * inv, (p1[0] - p0[0]) * inv],
            ],
        }
    }

    /// True if `p` lies inside the triangulated domain (within `tol` in
    /// barycentric coordinates).
    pub fn contains_point(&self, p: [f64; 2], tol: f64) -> bool {
        for (t, tri) in self.triangles.iter().enumerate() {
            let area = self.triangle_area(t);
            let (p0, p1, p2) = (self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]);
            let w0 = signed_area(p, p1, p2) / area;
            let w1 = signed_area(p0, p, p2) / area;
            let w2 = signed_area(p0, p1, p) / area;
            if w0 >= -tol && w1 >= -tol && w2 >= -tol {
                return true;
            }
        }
        false
    }

    /// Index of the node closest to `p` (ties broken by lowest index).
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, q) in self.nodes.iter().enumerate() {
            let d = (q[0] - p[0]) * (q[0] - p[0]) + (q[1] - p[1]) * (q[1] - p[1]);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Splits every triangle into four through the edge midpoints.
    ///
    /// Fine node numbering is deterministic: coarse nodes keep their indices,
    /// midpoints follow in sorted canonical-edge order. Children of triangle
    /// `(v0, v1, v2)` with midpoints `m01, m12, m20` are emitted as
    /// `(v0, m01, m20), (v1, m12, m01), (v2, m20, m12), (m01, m12, m20)`,
    /// all inheriting the parent's orientation.
    pub fn refine_uniform(&self) -> Result<RefinedPair, MeshError> {
        self.validate_and_census()?;
        let nc = self.nodes.len();

        let mut midpoint_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                midpoint_of.insert(edge_key(tri[k], tri[(k + 1) % 3]), usize::MAX);
            }
        }
        let mut fine_nodes = self.nodes.clone();
        for (idx, (&(a, b), slot)) in midpoint_of.iter_mut().enumerate() {
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            fine_nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
            *slot = nc + idx;
        }

        let mut fine_triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut parent_of = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[v0, v1, v2]) in self.triangles.iter().enumerate() {
            let m01 = midpoint_of[&edge_key(v0, v1)];
            let m12 = midpoint_of[&edge_key(v1, v2)];
            let m20 = midpoint_of[&edge_key(v2, v0)];
            fine_triangles.push([v0, m01, m20]);
            fine_triangles.push([v1, m12, m01]);
            fine_triangles.push([v2, m20, m12]);
            fine_triangles.push([m01, m12, m20]);
            parent_of.extend([t, t, t, t]);
        }

        let fine = Triangulation::from_parts(fine_nodes, fine_triangles)?;
        let pair = RefinedPair {
            coarse: self.clone(),
            fine,
            parent_of,
            coarse_node_embed: (0..nc).collect(),
        };
        debug_assert!(pair.partition_error() < 1e-12);
        Ok(pair)
    }
}

impl RefinedPair {
    /// Fine triangle indices of the four children of coarse triangle `t`.
    pub fn children_of(&self, t: usize) -> [usize; 4] {
        [4 * t, 4 * t + 1, 4 * t + 2, 4 * t + 3]
    }

    /// Largest relative defect between a parent area and the sum of its
    /// children's areas; zero up to roundoff by construction.
    pub fn partition_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..self.coarse.num_triangles() {
            let parent = self.coarse.triangle_area(t);
            let children: f64 = self
                .children_of(t)
                .iter()
                .map(|&c| self.fine.triangle_area(c))
                .sum();
            worst = worst.max(((children - parent) / parent).abs());
        }
        worst
    }
}

/// Structured mesh of the unit square `[0,1]^2`: `n x n` cells, each split
/// along its lower-left to upper-right diagonal, `2 n^2` triangles.
pub fn gen_unit_square(n: usize) -> Triangulation {
    assert!(n >= 1, "gen_unit_square needs n >= 1");
    let step = 1.0 / n as f64;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([i as f64 * step, j as f64 * step]);
        }
    }
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Triangulation::from_parts(nodes, triangles).expect("structured square mesh is conforming")
}

/// Polar mesh of the unit disk: `n_r` concentric rings at radii `k / n_r`,
/// `n_t` angular sectors, a triangle fan at the center; `n_t (2 n_r - 1)`
/// triangles in total.
///
/// `n_r` must be a positive multiple of 3 so the radii 1/3 and 2/3 fall
/// exactly on mesh rings; `n_t` must be at least 8.
pub fn gen_disk_polar(n_r: usize, n_t: usize) -> Triangulation {
    assert!(n_r >= 3 && n_r % 3 == 0, "gen_disk_polar needs n_r a positive multiple of 3");
    assert!(n_t >= 8, "gen_disk_polar needs n_t >= 8");
    let mut nodes = Vec::with_capacity(1 + n_r * n_t);
    nodes.push([0.0, 0.0]);
    for k in 1..=n_r {
        let r = k as f64 / n_r as f64;
        for j in 0..n_t {
            let theta = 2.0 * core::f64::consts::PI * j as f64 / n_t as f64;
            nodes.push([r * Float::cos(theta), r * Float::sin(theta)]);
        }
    }
    let at = |k: usize, j: usize| 1 + (k - 1) * n_t + (j % n_t);
    let mut triangles = Vec::with_capacity(n_t * (2 * n_r - 1));
    for j in 0..n_t {
        triangles.push([0, at(1, j), at(1, j + 1)]);
    }
    for k in 1..n_r {
        for j in 0..n_t {
            let (a, b) = (at(k, j), at(k + 1, j));
            let (c, d) = (at(k + 1, j + 1), at(k, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Triangulation::from_parts(nodes, triangles).expect("polar disk mesh is conforming")
}
