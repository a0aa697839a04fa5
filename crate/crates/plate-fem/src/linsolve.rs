//! Sparse storage and direct solves.
//!
//! The saddle-point structure of the mixed system never requires an iterative
//! solver at the scales of the convergence studies: the scalar Poisson blocks
//! are factorized by sparse Cholesky and the rotated-Stokes block (and the
//! monolithic matrix, when requested) by sparse LU with pivoting. All
//! factorizations are immutable after construction and may be shared across
//! threads; a global counter records how many factorizations were computed so
//! tests can assert reuse.

use std::io::Write;
use std::sync::atomic::{AtomicU64, Ordering};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::assembly::MixedSystem;
use crate::{FemError, Result};

static FACTORIZATION_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of sparse factorizations computed so far in this process.
pub fn factorization_count() -> u64 {
    FACTORIZATION_COUNT.load(Ordering::Relaxed)
}

/// Row-compressed sparse matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    /// Marked true for matrices that are symmetric by construction.
    pub symmetric: bool,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed in
    /// insertion order, so construction is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for &(r, c, v) in &triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        SparseMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect());
        m.symmetric = true;
        m
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as (column, value) pairs, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices[self.indptr[r]..self.indptr[r + 1]]
            .iter()
            .copied()
            .zip(self.values[self.indptr[r]..self.indptr[r + 1]].iter().copied())
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        crate::map_range(self.nrows, |r| self.row(r).map(|(c, v)| v * x[c]).sum())
    }

    /// y += alpha * Aᵀ x accumulated into `y`.
    pub fn matvec_transpose_add(&self, x: &[f64], alpha: f64, y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for r in 0..self.nrows {
            let xr = alpha * x[r];
            if xr != 0.0 {
                for (c, v) in self.row(r) {
                    y[c] += v * xr;
                }
            }
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        let mut t = SparseMatrix::from_triplets(self.ncols, self.nrows, triplets);
        t.symmetric = self.symmetric;
        t
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// max |A - Aᵀ| entry; zero for matrices symmetric by construction.
    pub fn max_asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            let mut a = self.row(r).peekable();
            let mut b = t.row(r).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((_, va)), None) => {
                        worst = worst.max(va.abs());
                        a.next();
                    }
                    (None, Some((_, vb))) => {
                        worst = worst.max(vb.abs());
                        b.next();
                    }
                    (Some((ca, va)), Some((cb, vb))) => {
                        if ca == cb {
                            worst = worst.max((va - vb).abs());
                            a.next();
                            b.next();
                        } else if ca < cb {
                            worst = worst.max(va.abs());
                            a.next();
                        } else {
                            worst = worst.max(vb.abs());
                            b.next();
                        }
                    }
                }
            }
        }
        worst
    }

    /// Coordinate text dump: header `n nnz`, then one `row col value` line per
    /// stored entry.
    pub fn dump_coo<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {}", self.nrows, self.nnz())?;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push(Triplet::new(r, c, v));
            }
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| FemError::InvalidArgument(format!("sparse conversion failed: {e:?}")))
    }
}

enum Backend {
    Cholesky(faer::sparse::linalg::solvers::Llt<usize, f64>),
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
}

/// A reusable direct factorization of a square sparse matrix.
pub struct Factorization {
    n: usize,
    backend: Backend,
}

/// Sparse LU with partial pivoting; the workhorse for the indefinite
/// saddle-point blocks and the monolithic mixed matrix.
pub fn factorize(a: &SparseMatrix) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(FemError::InvalidArgument("factorize requires a square matrix".into()));
    }
    FACTORIZATION_COUNT.fetch_add(1, Ordering::Relaxed);
    let lu = a
        .to_faer()?
        .sp_lu()
        .map_err(|_| FemError::SingularMatrix { block: "sparse LU".into() })?;
    Ok(Factorization {
        n: a.nrows(),
        backend: Backend::Lu(lu),
    })
}

/// Sparse Cholesky for symmetric positive definite matrices (the Poisson
/// blocks of the decomposed source solve).
pub fn factorize_spd(a: &SparseMatrix) -> Result<Factorization> {
    if a.nrows() != a.ncols() {
        return Err(FemError::InvalidArgument("factorize requires a square matrix".into()));
    }
    FACTORIZATION_COUNT.fetch_add(1, Ordering::Relaxed);
    let llt = a
        .to_faer()?
        .sp_cholesky(faer::Side::Lower)
        .map_err(|_| FemError::SingularMatrix { block: "sparse Cholesky".into() })?;
    Ok(Factorization {
        n: a.nrows(),
        backend: Backend::Cholesky(llt),
    })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.n);
        let b = faer::Mat::from_fn(self.n, 1, |i, _| rhs[i]);
        let x = match &self.backend {
            Backend::Cholesky(f) => f.solve(&b),
            Backend::Lu(f) => f.solve(&b),
        };
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

/// The three-subsystem solver for the mixed source problem: a Poisson solve
/// for w, a rotated-Stokes solve for (φ, p), and a Poisson solve for u.
///
/// Factorizations are computed once at construction; `solve` may be called
/// concurrently with many right-hand sides.
pub struct DecomposedSolver<'s> {
    system: &'s MixedSystem,
    poisson: Factorization,
    stokes: Factorization,
    stokes_dim: usize,
}

impl<'s> DecomposedSolver<'s> {
    pub fn new(system: &'s MixedSystem) -> Result<Self> {
        let poisson = factorize_spd(&system.constrained_scalar_stiffness())?;
        let (stokes_mat, stokes_dim) = system.stokes_block();
        let stokes = factorize(&stokes_mat).map_err(|e| match e {
            FemError::SingularMatrix { .. } => FemError::SingularMatrix {
                block: "rotated-Stokes block (inf-sup failure?)".into(),
            },
            other => other,
        })?;
        Ok(DecomposedSolver {
            system,
            poisson,
            stokes,
            stokes_dim,
        })
    }

    /// Solve the full mixed system for an arbitrary right-hand side, exploiting
    /// the block-triangular solve order w → (φ, p) → u.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let sys = self.system;
        let off = &sys.offsets;
        let n_s = sys.scalar_space.dof_count;
        let n_p = sys.pressure_space.dof_count;
        assert_eq!(rhs.len(), off.total);

        let mask = |mut v: Vec<f64>| {
            for (i, &c) in sys.scalar_space.constrained.iter().enumerate() {
                if c {
                    v[i] = 0.0;
                }
            }
            v
        };

        // (∇w, ∇v) = rhs_v
        let w = self.poisson.solve(&mask(rhs[0..n_s].to_vec()));

        // (∇φ, ∇ψ) + (p, rot ψ) = rhs_ψ − (∇w, ψ),  (rot φ, q) = rhs_q
        let mut srhs = vec![0.0; self.stokes_dim];
        let gxw = sys.g_x.matvec(&w);
        let gyw = sys.g_y.matvec(&w);
        for i in 0..n_s {
            if !sys.scalar_space.constrained[i] {
                srhs[i] = rhs[off.phi_x + i] - gxw[i];
                srhs[n_s + i] = rhs[off.phi_y + i] - gyw[i];
            }
        }
        srhs[2 * n_s..2 * n_s + n_p].copy_from_slice(&rhs[off.p..off.p + n_p]);
        if let Some(m) = off.mult {
            srhs[2 * n_s + n_p] = rhs[m];
        }
        let phi_p = self.stokes.solve(&srhs);

        // (∇u, ∇s) = rhs_s − (φ, ∇s)
        let mut urhs = rhs[off.w..off.w + n_s].to_vec();
        sys.g_x.matvec_transpose_add(&phi_p[0..n_s], -1.0, &mut urhs);
        sys.g_y.matvec_transpose_add(&phi_p[n_s..2 * n_s], -1.0, &mut urhs);
        let u = self.poisson.solve(&mask(urhs));

        let mut x = vec![0.0; off.total];
        x[0..n_s].copy_from_slice(&u);
        x[off.phi_x..off.phi_x + n_s].copy_from_slice(&phi_p[0..n_s]);
        x[off.phi_y..off.phi_y + n_s].copy_from_slice(&phi_p[n_s..2 * n_s]);
        x[off.p..off.p + n_p].copy_from_slice(&phi_p[2 * n_s..2 * n_s + n_p]);
        x[off.w..off.w + n_s].copy_from_slice(&w);
        if let Some(m) = off.mult {
            x[m] = phi_p[2 * n_s + n_p];
        }
        x
    }
}

/// Solve the assembled mixed system monolithically. One factorization per call;
/// prefer [`DecomposedSolver`] when many right-hand sides share a system.
pub fn solve_source_monolithic(system: &MixedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != system.offsets.total {
        return Err(FemError::DimensionMismatch(format!(
            "rhs length {} vs system dimension {}",
            rhs.len(),
            system.offsets.total
        )));
    }
    let f = factorize(&system.a)?;
    Ok(f.solve(rhs))
}

/// Solve the mixed source problem by the three-subsystem decomposition.
pub fn solve_source_decomposed(system: &MixedSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != system.offsets.total {
        return Err(FemError::DimensionMismatch(format!(
            "rhs length {} vs system dimension {}",
            rhs.len(),
            system.offsets.total
        )));
    }
    Ok(DecomposedSolver::new(system)?.solve(rhs))
}
