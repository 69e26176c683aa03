//! Weighted P1 stiffness assembly on a refined mesh pair.
//!
//! The conductivity is piecewise constant on the coarse mesh, the potential
//! piecewise linear on the fine mesh; every fine triangle contributes its
//! parent's weight times the plain Laplacian element matrix. The sparsity
//! pattern depends only on the mesh, so [`StiffnessAssembler`] computes it
//! once (together with per-element matrices and scatter slots) and later
//! steps only refresh the numeric values.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Index;

use num_traits::Float;

use crate::mesh::RefinedPair;
use crate::mesh::Triangulation;

/// Piecewise-constant field, one value per coarse triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP0 {
    values: Vec<f64>,
}

impl FieldP0 {
    pub fn new(values: Vec<f64>) -> Self {
        FieldP0 { values }
    }

    pub fn constant(len: usize, value: f64) -> Self {
        FieldP0 { values: vec![value; len] }
    }

    /// Samples `f` at each coarse-triangle centroid.
    pub fn from_centroids(mesh: &Triangulation, f: impl Fn([f64; 2]) -> f64) -> Self {
        FieldP0 {
            values: (0..mesh.num_triangles()).map(|t| f(mesh.centroid(t))).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    /// Area-weighted L2 norm over the coarse mesh.
    pub fn l2_norm(&self, mesh: &Triangulation) -> f64 {
        assert_eq!(self.values.len(), mesh.num_triangles());
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(t, &v)| mesh.triangle_area(t) * v * v)
            .sum();
        Float::sqrt(sum)
    }

    /// Integral over the coarse mesh (values times areas).
    pub fn integral(&self, mesh: &Triangulation) -> f64 {
        assert_eq!(self.values.len(), mesh.num_triangles());
        self.values
            .iter()
            .enumerate()
            .map(|(t, &v)| mesh.triangle_area(t) * v)
            .sum()
    }
}

impl Index<usize> for FieldP0 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Piecewise-linear field, one value per fine node.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1 {
    values: Vec<f64>,
}

impl FieldP1 {
    pub fn new(values: Vec<f64>) -> Self {
        FieldP1 { values }
    }

    pub fn zeros(len: usize) -> Self {
        FieldP1 { values: vec![0.0; len] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Subtracts the arithmetic mean, the gauge fixing of the Neumann problem.
    pub fn subtract_mean(&mut self) {
        let n = self.values.len();
        if n == 0 {
            return;
        }
        let mean: f64 = self.values.iter().sum::<f64>() / n as f64;
        for v in &mut self.values {
            *v -= mean;
        }
    }
}

impl Index<usize> for FieldP1 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// Symmetric sparse matrix in CSR form with both triangles stored.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds a matrix from raw CSR arrays. Rows must have ascending column
    /// indices and the stored pattern must be structurally symmetric.
    pub fn from_csr(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(row_ptr.len(), n + 1);
        assert_eq!(*row_ptr.last().unwrap(), col_idx.len());
        assert_eq!(col_idx.len(), values.len());
        for i in 0..n {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            assert!(row.windows(2).all(|w| w[0] < w[1]), "row {i} not strictly ascending");
            assert!(row.iter().all(|&j| j < n));
        }
        SparseSymMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Entry `(i, j)`, zero when outside the pattern.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// `x' A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut row_acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                row_acc += v * x[j];
            }
            acc += x[i] * row_acc;
        }
        acc
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let (_, vals) = self.row(i);
        vals.iter().sum()
    }
}

/// Index into the packed upper-triangle storage of a symmetric 3x3 matrix.
fn sym3(a: usize, b: usize) -> usize {
    const MAP: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    MAP[a][b]
}

/// Precomputed sparsity pattern, element matrices and scatter slots for the
/// conductivity-weighted stiffness matrix of a mesh pair.
pub struct StiffnessAssembler {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    /// Per fine triangle: parent coarse triangle.
    parent: Vec<usize>,
    /// Per fine triangle: packed symmetric element matrix `area * (g_a . g_b)`.
    local: Vec<[f64; 6]>,
    /// Per fine triangle: CSR slot of entry `(node_a, node_b)` in row-major
    /// local order, so scattering needs no searches.
    slots: Vec<[usize; 9]>,
}

impl StiffnessAssembler {
    pub fn new(pair: &RefinedPair) -> Self {
        let fine = &pair.fine;
        let n = fine.num_nodes();

        // Node-to-node adjacency (including self) defines the pattern.
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::with_capacity(8); n];
        for i in 0..n {
            neighbors[i].push(i);
        }
        for tri in &fine.triangles {
            for &a in tri {
                for &b in tri {
                    if a != b {
                        neighbors[a].push(b);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            col_idx.extend_from_slice(list);
            row_ptr.push(col_idx.len());
        }

        let slot_of = |i: usize, j: usize| -> usize {
            let span = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            row_ptr[i] + span.binary_search(&j).expect("pattern covers element entries")
        };

        let nt = fine.num_triangles();
        let mut local = Vec::with_capacity(nt);
        let mut slots = Vec::with_capacity(nt);
        for t in 0..nt {
            let geo = fine.element_geometry(t);
            let mut packed = [0.0; 6];
            for a in 0..3 {
                for b in a..3 {
                    packed[sym3(a, b)] = geo.area
                        * (geo.grads[a][0] * geo.grads[b][0] + geo.grads[a][1] * geo.grads[b][1]);
                }
            }
            local.push(packed);
            let tri = fine.triangles[t];
            let mut s = [0usize; 9];
            for a in 0..3 {
                for b in 0..3 {
                    s[3 * a + b] = slot_of(tri[a], tri[b]);
                }
            }
            slots.push(s);
        }

        StiffnessAssembler {
            n,
            row_ptr,
            col_idx,
            parent: pair.parent_of.clone(),
            local,
            slots,
        }
    }

    /// Matrix with the cached pattern and all values zero.
    pub fn matrix_skeleton(&self) -> SparseSymMatrix {
        SparseSymMatrix {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: vec![0.0; self.col_idx.len()],
        }
    }

    /// Refreshes `matrix` in place with weights `mu`; the matrix must come
    /// from [`StiffnessAssembler::matrix_skeleton`] of this assembler.
    pub fn assemble_into(&self, mu: &FieldP0, matrix: &mut SparseSymMatrix) {
        assert_eq!(matrix.n, self.n);
        assert_eq!(matrix.values.len(), self.col_idx.len());
        matrix.values.iter_mut().for_each(|v| *v = 0.0);
        for t in 0..self.local.len() {
            let w = mu[self.parent[t]];
            let packed = &self.local[t];
            let slots = &self.slots[t];
            for a in 0..3 {
                for b in 0..3 {
                    matrix.values[slots[3 * a + b]] += w * packed[sym3(a, b)];
                }
            }
        }
    }

    pub fn assemble(&self, mu: &FieldP0) -> SparseSymMatrix {
        let mut m = self.matrix_skeleton();
        self.assemble_into(mu, &mut m);
        m
    }
}

/// Assembles the conductivity-weighted stiffness matrix on the fine mesh.
///
/// For repeated assembly on a fixed mesh, build a [`StiffnessAssembler`]
/// once instead.
pub fn assemble_stiffness(pair: &RefinedPair, mu: &FieldP0) -> SparseSymMatrix {
    assert_eq!(mu.len(), pair.coarse.num_triangles());
    StiffnessAssembler::new(pair).assemble(mu)
}

/// Squared-gradient integral of `u` over the four children of each coarse
/// triangle: `sum_children area * |grad u|^2`.
fn child_energy(pair: &RefinedPair, u: &[f64], t: usize) -> f64 {
    let mut acc = 0.0;
    for c in pair.children_of(t) {
        let geo = pair.fine.element_geometry(c);
        let tri = pair.fine.triangles[c];
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += u[tri[k]] * geo.grads[k][0];
            g[1] += u[tri[k]] * geo.grads[k][1];
        }
        acc += geo.area * (g[0] * g[0] + g[1] * g[1]);
    }
    acc
}

/// Composite gradient magnitude of `u` per coarse triangle: the area-weighted
/// root mean square of the children's P1 gradients,
/// `sqrt(sum_children area |grad u|^2 / sum_children area)`.
///
/// This choice makes `1/2 sum mu g^2 area` equal `1/2 u' A[mu] u` identically,
/// so the discrete energy seen by the dynamics matches the assembled one.
pub fn gradient_norms(pair: &RefinedPair, u: &FieldP1) -> FieldP0 {
    assert_eq!(u.len(), pair.fine.num_nodes());
    let nc = pair.coarse.num_triangles();
    let mut g = Vec::with_capacity(nc);
    for t in 0..nc {
        let area: f64 = pair.children_of(t).iter().map(|&c| pair.fine.triangle_area(c)).sum();
        g.push(Float::sqrt(child_energy(pair, u.values(), t) / area));
    }
    FieldP0::new(g)
}

/// Weighted Dirichlet energy `1/2 integral mu |grad u|^2`, summed child by
/// child so it equals `1/2 u' A[mu] u` exactly.
pub fn dirichlet_energy(pair: &RefinedPair, mu: &FieldP0, u: &FieldP1) -> f64 {
    assert_eq!(mu.len(), pair.coarse.num_triangles());
    assert_eq!(u.len(), pair.fine.num_nodes());
    let mut acc = 0.0;
    for t in 0..pair.coarse.num_triangles() {
        acc += mu[t] * child_energy(pair, u.values(), t);
    }
    0.5 * acc
}
