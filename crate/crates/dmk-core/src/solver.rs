//! Preconditioned conjugate gradient for the pure-Neumann stiffness system.
//!
//! The assembled matrix is symmetric positive semidefinite with the constant
//! vector in its null space, and load vectors are compatible (they sum to
//! zero). When the matrix is detected singular (all row sums vanish), the
//! iteration keeps residual and iterates in the mean-zero subspace by
//! subtracting means every step, which suppresses roundoff drift along the
//! null direction; nonsingular SPD input is solved unprojected. Convergence
//! is declared on the relative two-norm of the residual and confirmed
//! against the true residual `b - A x` before returning.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::assembly::{FieldP1, SparseSymMatrix};

/// Relative residual tolerance used when the caller has no preference.
pub const DEFAULT_TOL: f64 = 1e-11;

/// Iteration cap used when the caller has no preference.
pub fn default_max_iter(n: usize) -> usize {
    10 * n
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// `b` or `x0` length disagrees with the matrix dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// Curvature `p' A p` became non-positive; the matrix is not PSD on the
    /// search subspace.
    Breakdown { iteration: usize, curvature: f64 },
    /// Iteration cap reached before the residual tolerance.
    NoConvergence { iterations: usize, relative_residual: f64 },
    /// Incomplete Cholesky hit a non-positive pivot, or a Jacobi diagonal
    /// entry was non-positive.
    FactorizationFailed { row: usize, pivot: f64 },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::DimensionMismatch { expected, got } => {
                write!(f, "vector length {got} does not match system dimension {expected}")
            }
            SolverError::Breakdown { iteration, curvature } => {
                write!(f, "PCG breakdown at iteration {iteration}: curvature {curvature}")
            }
            SolverError::NoConvergence { iterations, relative_residual } => write!(
                f,
                "PCG did not converge in {iterations} iterations (relative residual {relative_residual:.3e})"
            ),
            SolverError::FactorizationFailed { row, pivot } => {
                write!(f, "preconditioner factorization failed at row {row} (pivot {pivot:.3e})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SolverError {}

/// Preconditioner selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrecondKind {
    None,
    Jacobi,
    /// Incomplete Cholesky on the matrix pattern; callers are expected to
    /// fall back to Jacobi when factorization fails.
    Ic0,
}

impl fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecondKind::None => write!(f, "none"),
            PrecondKind::Jacobi => write!(f, "jacobi"),
            PrecondKind::Ic0 => write!(f, "ic0"),
        }
    }
}

/// Outcome of a linear solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// True relative residual `|b - A x| / |b|` at exit.
    pub final_relative_residual: f64,
    pub preconditioner: PrecondKind,
    /// Largest ratio of consecutive preconditioned residual norms observed;
    /// at most 1 when convergence is monotone.
    pub max_residual_growth: f64,
}

/// Lower-triangular incomplete Cholesky factor on the matrix pattern.
///
/// Rows store ascending column indices with the diagonal entry last.
#[derive(Debug, Clone)]
pub struct Ic0Factor {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Incomplete Cholesky factorization with zero fill-in: the factor keeps the
/// lower-triangular pattern of `a` and drops everything outside it.
pub fn ic0_factorize(a: &SparseSymMatrix) -> Result<Ic0Factor, SolverError> {
    let n = a.dim();
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0usize);
    let mut col_idx = Vec::new();
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if j <= i {
                col_idx.push(j);
            }
        }
        row_ptr.push(col_idx.len());
    }
    let mut values = vec![0.0f64; col_idx.len()];

    for i in 0..n {
        let row_span = row_ptr[i]..row_ptr[i + 1];
        // Diagonal is last within the row because columns ascend.
        let diag_slot = row_span.end - 1;
        debug_assert_eq!(col_idx[diag_slot], i);
        for slot in row_span.clone() {
            let j = col_idx[slot];
            if j == i {
                break;
            }
            // Dot of rows i and j over columns < j, both sorted ascending.
            let mut dot = 0.0;
            let (mut pi, mut pj) = (row_ptr[i], row_ptr[j]);
            let (end_i, end_j) = (slot, row_ptr[j + 1] - 1);
            while pi < end_i && pj < end_j {
                let (ci, cj) = (col_idx[pi], col_idx[pj]);
                if ci == cj {
                    dot += values[pi] * values[pj];
                    pi += 1;
                    pj += 1;
                } else if ci < cj {
                    pi += 1;
                } else {
                    pj += 1;
                }
            }
            let denom = values[row_ptr[j + 1] - 1];
            values[slot] = (a.get(i, j) - dot) / denom;
        }
        let mut sq = 0.0;
        for slot in row_span.start..diag_slot {
            sq += values[slot] * values[slot];
        }
        let pivot = a.get(i, i) - sq;
        if !(pivot > 0.0) {
            return Err(SolverError::FactorizationFailed { row: i, pivot });
        }
        values[diag_slot] = Float::sqrt(pivot);
    }

    Ok(Ic0Factor { n, row_ptr, col_idx, values })
}

impl Ic0Factor {
    /// Applies `(L L')^{-1}` to `r` by forward and backward substitution.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.n);
        assert_eq!(z.len(), self.n);
        // Forward: L y = r, written into z.
        for i in 0..self.n {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut acc = r[i];
            for slot in span.start..span.end - 1 {
                acc -= self.values[slot] * z[self.col_idx[slot]];
            }
            z[i] = acc / self.values[span.end - 1];
        }
        // Backward: L' x = y, in place via column scatter.
        for i in (0..self.n).rev() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            let xi = z[i] / self.values[span.end - 1];
            z[i] = xi;
            for slot in span.start..span.end - 1 {
                z[self.col_idx[slot]] -= self.values[slot] * xi;
            }
        }
    }

    /// Dense reconstruction of the factor, row-major; for inspection and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for slot in self.row_ptr[i]..self.row_ptr[i + 1] {
                out[i][self.col_idx[slot]] = self.values[slot];
            }
        }
        out
    }
}

enum Precond {
    Identity,
    Jacobi(Vec<f64>),
    Ic0(Ic0Factor),
}

impl Precond {
    fn build(kind: PrecondKind, a: &SparseSymMatrix) -> Result<Self, SolverError> {
        match kind {
            PrecondKind::None => Ok(Precond::Identity),
            PrecondKind::Jacobi => {
                let diag = a.diagonal();
                for (i, &d) in diag.iter().enumerate() {
                    if !(d > 0.0) {
                        return Err(SolverError::FactorizationFailed { row: i, pivot: d });
                    }
                }
                Ok(Precond::Jacobi(diag.iter().map(|&d| 1.0 / d).collect()))
            }
            PrecondKind::Ic0 => Ok(Precond::Ic0(ic0_factorize(a)?)),
        }
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Precond::Identity => z.copy_from_slice(r),
            Precond::Jacobi(inv_diag) => {
                for i in 0..r.len() {
                    z[i] = r[i] * inv_diag[i];
                }
            }
            Precond::Ic0(factor) => factor.solve(r, z),
        }
    }
}

fn subtract_mean(v: &mut [f64]) {
    let mean: f64 = v.iter().sum::<f64>() / v.len() as f64;
    for x in v.iter_mut() {
        *x -= mean;
    }
}

fn norm2(v: &[f64]) -> f64 {
    Float::sqrt(v.iter().map(|&x| x * x).sum::<f64>())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// True when every row sums to zero relative to the largest entry, i.e. the
/// constant vector is in the null space.
fn has_constant_null_space(a: &SparseSymMatrix) -> bool {
    let scale = a.values().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if scale == 0.0 {
        return true;
    }
    (0..a.dim()).all(|i| a.row_sum(i).abs() <= 1e-10 * scale)
}

/// Solves `A x = b` by preconditioned conjugate gradient.
///
/// `x0` warm-starts the iteration (zero when absent). `tol` is relative to
/// `|b|`; see [`DEFAULT_TOL`] and [`default_max_iter`] for the customary
/// settings. For a singular Neumann matrix the returned solution has zero
/// mean; convergence there is invariant under constant shifts of `x0`.
pub fn pcg_solve(
    a: &SparseSymMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    precond: PrecondKind,
) -> Result<(FieldP1, SolveReport), SolverError> {
    let n = a.dim();
    if b.len() != n {
        return Err(SolverError::DimensionMismatch { expected: n, got: b.len() });
    }
    if let Some(x0) = x0 {
        if x0.len() != n {
            return Err(SolverError::DimensionMismatch { expected: n, got: x0.len() });
        }
    }
    let projecting = has_constant_null_space(a);
    let m = Precond::build(precond, a)?;

    let mut report = SolveReport {
        iterations: 0,
        final_relative_residual: 0.0,
        preconditioner: precond,
        max_residual_growth: 0.0,
    };

    let norm_b = norm2(b);
    if norm_b == 0.0 {
        return Ok((FieldP1::zeros(n), report));
    }

    let mut x: Vec<f64> = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    if projecting {
        subtract_mean(&mut x);
    }

    let mut r = vec![0.0; n];
    a.matvec(&x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    if projecting {
        subtract_mean(&mut r);
    }

    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];

    if norm2(&r) <= tol * norm_b {
        report.final_relative_residual = norm2(&r) / norm_b;
        return Ok((FieldP1::new(x), report));
    }

    m.apply(&r, &mut z);
    if projecting {
        subtract_mean(&mut z);
    }
    p.copy_from_slice(&z);
    let mut rz = dot(&r, &z);
    let mut iterations = 0usize;

    loop {
        if iterations >= max_iter {
            return Err(SolverError::NoConvergence {
                iterations,
                relative_residual: norm2(&r) / norm_b,
            });
        }
        a.matvec(&p, &mut q);
        let curvature = dot(&p, &q);
        if !(curvature > 0.0) {
            return Err(SolverError::Breakdown { iteration: iterations, curvature });
        }
        let alpha = rz / curvature;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        if projecting {
            subtract_mean(&mut r);
        }
        iterations += 1;

        let mut restarted = false;
        if norm2(&r) <= tol * norm_b {
            // Confirm on the true residual; recurrence drift can flatter us.
            a.matvec(&x, &mut r);
            for i in 0..n {
                r[i] = b[i] - r[i];
            }
            if projecting {
                subtract_mean(&mut r);
            }
            let true_rel = norm2(&r) / norm_b;
            if true_rel <= tol {
                if projecting {
                    subtract_mean(&mut x);
                }
                report.iterations = iterations;
                report.final_relative_residual = true_rel;
                return Ok((FieldP1::new(x), report));
            }
            restarted = true;
        }

        m.apply(&r, &mut z);
        if projecting {
            subtract_mean(&mut z);
        }
        let rz_new = dot(&r, &z);
        if rz > 0.0 {
            report.max_residual_growth = report.max_residual_growth.max(Float::sqrt(rz_new / rz));
        }
        if restarted {
            // The refreshed residual is no longer conjugate to the old
            // directions; restart the search from steepest descent.
            p.copy_from_slice(&z);
        } else {
            let beta = rz_new / rz;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        rz = rz_new;
    }
}
