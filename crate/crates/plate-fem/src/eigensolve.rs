//! Generalized eigenproblems A x = λ B x with symmetric A and positive
//! semidefinite, singular B.
//!
//! Two independent routes are provided. The sparse route factorizes A once
//! (shift-invert at zero) and runs block inverse iteration with Rayleigh–Ritz
//! projection; for mixed systems the inverse is applied through the
//! three-subsystem decomposition instead of a monolithic factorization. The
//! dense route reduces the pencil through the semidefinite square root of B to
//! an ordinary symmetric eigenproblem and serves as the brute-force oracle on
//! small systems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::MixedSystem;
use crate::linsolve::{factorize, DecomposedSolver, SparseMatrix};
use crate::{FemError, Result};

/// An eigenpair of the mixed problem. λ = 1/μ in the operator convention;
/// vectors are scaled to unit b-norm (L² norm of the u-component) with the
/// largest-magnitude u-entry positive.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMode {
    /// Shift-invert block iteration on the factorized (or decomposed) A.
    Sparse,
    /// Dense reduction, used for coarse problems and as the oracle.
    Dense,
}

/// Iteration controls for the sparse mode.
#[derive(Debug, Clone, Copy)]
pub struct IterationSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub extra_block: usize,
    pub seed: u64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        IterationSettings {
            tol: 1e-11,
            max_iter: 400,
            extra_block: 6,
            seed: 0,
        }
    }
}

/// Solve for the k smallest positive λ of the pencil (A, B).
pub fn solve_generalized(
    a: &SparseMatrix,
    b: &SparseMatrix,
    k: usize,
    mode: EigenMode,
) -> Result<Vec<EigenPair>> {
    if k == 0 {
        return Err(FemError::InvalidArgument("k must be at least 1".into()));
    }
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() || b.ncols() != a.ncols() {
        return Err(FemError::DimensionMismatch(
            "pencil matrices must be square and of equal size".into(),
        ));
    }
    let n = a.nrows();
    let pairs = match mode {
        EigenMode::Dense => {
            let raw = dense_pencil_eigs(&a.to_dense(), &b.to_dense())?;
            take_k(raw, k)?
        }
        EigenMode::Sparse => {
            let f = factorize(a)?;
            let apply_inv = |rhs: &[f64]| f.solve(rhs);
            let apply_b = |x: &[f64]| b.matvec(x);
            subspace_iteration(&apply_inv, &apply_b, n, k, IterationSettings::default(), &[])?
        }
    };
    Ok(finalize_pairs(pairs, b, 0..n))
}

/// Solve the assembled mixed eigenproblem (Dirichlet-eliminated system).
///
/// `warm_start` vectors, when given, seed the iteration block of the sparse
/// mode — typically prolongated eigenvectors from the previous level.
pub fn solve_mixed(
    system: &MixedSystem,
    k: usize,
    mode: EigenMode,
    warm_start: &[Vec<f64>],
    settings: IterationSettings,
) -> Result<Vec<EigenPair>> {
    if !system.dirichlet_applied {
        return Err(FemError::InvalidArgument(
            "eigenproblem requires the Dirichlet-eliminated system".into(),
        ));
    }
    if k == 0 {
        return Err(FemError::InvalidArgument("k must be at least 1".into()));
    }
    let n = system.offsets.total;
    let pairs = match mode {
        EigenMode::Dense => take_k(dense_pencil_eigs(&system.a.to_dense(), &system.b.to_dense())?, k)?,
        EigenMode::Sparse => {
            let solver = DecomposedSolver::new(system)?;
            let apply_inv = |rhs: &[f64]| solver.solve(rhs);
            let apply_b = |x: &[f64]| system.apply_b(x);
            subspace_iteration(&apply_inv, &apply_b, n, k, settings, warm_start)?
        }
    };
    Ok(finalize_pairs(pairs, &system.b, 0..system.scalar_space.dof_count))
}

fn take_k(pairs: Vec<(f64, Vec<f64>)>, k: usize) -> Result<Vec<(f64, Vec<f64>)>> {
    if pairs.len() < k {
        return Err(FemError::InsufficientSpectrum {
            requested: k,
            found: pairs.len(),
        });
    }
    Ok(pairs.into_iter().take(k).collect())
}

/// b-normalize and fix signs by the largest-magnitude entry of `sign_range`.
fn finalize_pairs(
    pairs: Vec<(f64, Vec<f64>)>,
    b: &SparseMatrix,
    sign_range: std::ops::Range<usize>,
) -> Vec<EigenPair> {
    pairs
        .into_iter()
        .map(|(lambda, mut v)| {
            let bv = b.matvec(&v);
            let norm = bv.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            let mut best = (0.0f64, 1.0f64);
            for &x in &v[sign_range.clone()] {
                if x.abs() > best.0 {
                    best = (x.abs(), x.signum());
                }
            }
            if best.1 < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            EigenPair { lambda, vector: v }
        })
        .collect()
}

/// All positive eigenvalues of the dense pencil, ascending in λ, with raw
/// (unnormalized) eigenvectors.
///
/// B is reduced by its semidefinite square root S = U√Σ (rank-truncated), and
/// the nonzero spectrum of A⁻¹B equals that of the symmetric matrix SᵀA⁻¹S.
/// Modes with no B-component (the spurious Dirichlet and multiplier modes)
/// disappear in the truncation.
pub fn dense_pencil_eigs(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Vec<(f64, Vec<f64>)>> {
    let n = a.nrows();
    let b_sym = 0.5 * (b + b.transpose());
    let eig_b = nalgebra::SymmetricEigen::new(b_sym);
    let s_max = eig_b.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    if s_max <= 0.0 {
        return Ok(Vec::new());
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&i| eig_b.eigenvalues[i] > 1e-12 * s_max)
        .collect();
    let r = keep.len();
    if r == 0 {
        return Ok(Vec::new());
    }
    let mut s = DMatrix::zeros(n, r);
    for (j, &i) in keep.iter().enumerate() {
        let scale = eig_b.eigenvalues[i].sqrt();
        s.column_mut(j).copy_from(&(eig_b.eigenvectors.column(i) * scale));
    }
    let lu = a.clone().lu();
    let w = lu.solve(&s).ok_or(FemError::SingularMatrix {
        block: "dense pencil reduction".into(),
    })?;
    let m = s.transpose() * &w;
    let m_sym = 0.5 * (&m + m.transpose());
    let eig_m = nalgebra::SymmetricEigen::new(m_sym);
    let mu_max = eig_m.eigenvalues.iter().fold(0.0f64, |acc, &x| acc.max(x.abs()));
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    for i in 0..r {
        let mu = eig_m.eigenvalues[i];
        if mu > 1e-12 * mu_max {
            let y: DVector<f64> = eig_m.eigenvectors.column(i).into();
            let x = &w * &y;
            pairs.push((1.0 / mu, x.iter().copied().collect()));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(pairs)
}

/// Block inverse iteration with Rayleigh–Ritz projection.
///
/// Returns the first k pairs (λ ascending) once every one of them satisfies
/// ‖Ax − λBx‖ ≤ tol·(‖Ax‖ + λ‖Bx‖).
fn subspace_iteration(
    apply_inv_a: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    apply_b: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    n: usize,
    k: usize,
    settings: IterationSettings,
    warm_start: &[Vec<f64>],
) -> Result<Vec<(f64, Vec<f64>)>> {
    let m = (k + settings.extra_block).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let random_col = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()
    };
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(m);
    for wv in warm_start.iter().take(m) {
        assert_eq!(wv.len(), n);
        x.push(wv.clone());
    }
    while x.len() < m {
        let col = random_col(&mut rng);
        x.push(col);
    }

    let mut worst_residual = f64::INFINITY;
    for iter in 0..settings.max_iter {
        let bx: Vec<Vec<f64>> = crate::map_collect(&x, |c| apply_b(c));
        let y: Vec<Vec<f64>> = crate::map_collect(&bx, |c| apply_inv_a(c));
        let by: Vec<Vec<f64>> = crate::map_collect(&y, |c| apply_b(c));

        // A-projection is free: A y_j = B x_j by construction.
        let mut a_red = DMatrix::zeros(m, m);
        let mut b_red = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                a_red[(i, j)] = dot(&y[i], &bx[j]);
                b_red[(i, j)] = dot(&y[i], &by[j]);
            }
        }
        let a_red = 0.5 * (&a_red + a_red.transpose());
        let b_red = 0.5 * (&b_red + b_red.transpose());

        let ritz = dense_pencil_eigs(&a_red, &b_red)?;
        if ritz.is_empty() {
            return Err(FemError::InsufficientSpectrum {
                requested: k,
                found: 0,
            });
        }
        let r = ritz.len().min(m);

        let mut x_new: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut ax_cols: Vec<Vec<f64>> = Vec::with_capacity(r);
        let mut bx_cols: Vec<Vec<f64>> = Vec::with_capacity(r);
        for (_, c) in ritz.iter().take(r) {
            x_new.push(combine(&y, c, n));
            ax_cols.push(combine(&bx, c, n));
            bx_cols.push(combine(&by, c, n));
        }

        if r >= k {
            worst_residual = (0..k)
                .map(|j| {
                    let lambda = ritz[j].0;
                    let (mut num, mut na, mut nb) = (0.0, 0.0, 0.0);
                    for i in 0..n {
                        let ax = ax_cols[j][i];
                        let bx = bx_cols[j][i];
                        num += (ax - lambda * bx).powi(2);
                        na += ax * ax;
                        nb += bx * bx;
                    }
                    num.sqrt() / (na.sqrt() + lambda * nb.sqrt())
                })
                .fold(0.0f64, f64::max);
            if worst_residual <= settings.tol {
                return Ok(ritz
                    .into_iter()
                    .take(k)
                    .zip(x_new)
                    .map(|((lambda, _), v)| (lambda, v))
                    .collect());
            }
        }

        // normalize Ritz columns and top the block back up with random vectors
        for col in &mut x_new {
            let scale = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if scale > 0.0 {
                col.iter_mut().for_each(|v| *v /= scale);
            }
        }
        while x_new.len() < m {
            x_new.push(random_col(&mut rng));
        }
        x = x_new;
        let _ = iter;
    }
    Err(FemError::MaxIterations {
        iterations: settings.max_iter,
        residual: worst_residual,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense linear combination Σᵢ cols[i]·coeff[i].
fn combine(cols: &[Vec<f64>], coeff: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (col, &c) in cols.iter().zip(coeff) {
        if c != 0.0 {
            for i in 0..n {
                out[i] += c * col[i];
            }
        }
    }
    out
}

/// Symmetric gap δ̂(M, N) between the spans of two basis sets under the inner
/// product given by `gram`.
pub fn subspace_gap(
    basis_m: &DMatrix<f64>,
    basis_n: &DMatrix<f64>,
    gram: &DMatrix<f64>,
) -> Result<f64> {
    let one_sided = |from: &DMatrix<f64>, to: &DMatrix<f64>| -> Result<f64> {
        let orth_from = gram_orthonormalize(from, gram)?;
        let orth_to = gram_orthonormalize(to, gram)?;
        let cross = orth_to.transpose() * gram * &orth_from; // q×p
        let p = orth_from.ncols();
        let q = orth_to.ncols();
        let sigma_min = if p > q {
            0.0
        } else {
            cross.svd(false, false).singular_values.min()
        };
        Ok((1.0 - (sigma_min * sigma_min).min(1.0)).max(0.0).sqrt())
    };
    Ok(one_sided(basis_m, basis_n)?.max(one_sided(basis_n, basis_m)?))
}

fn gram_orthonormalize(basis: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let g = basis.transpose() * gram * basis;
    let chol = nalgebra::Cholesky::new(0.5 * (&g + g.transpose()))
        .ok_or_else(|| FemError::InvalidBasis("basis is rank-deficient under the gram metric".into()))?;
    // basis · L⁻ᵀ has orthonormal columns in the gram metric
    let l_inv_t = chol
        .l()
        .transpose()
        .solve_upper_triangular(&DMatrix::identity(basis.ncols(), basis.ncols()))
        .ok_or_else(|| FemError::InvalidBasis("triangular solve failed".into()))?;
    Ok(basis * l_inv_t)
}

/// Stability constant θ of a set of vectors: the smallest eigenvalue of their
/// normalized Gram matrix (1 = orthogonal, 0 = linearly dependent).
pub fn stability_constant(vectors: &DMatrix<f64>, gram: &DMatrix<f64>) -> Result<f64> {
    let g = vectors.transpose() * gram * vectors;
    let m = g.nrows();
    let mut norms = Vec::with_capacity(m);
    for i in 0..m {
        let d = g[(i, i)];
        if d <= 0.0 || !d.is_finite() {
            return Err(FemError::InvalidBasis(format!(
                "vector {i} has nonpositive norm under the gram metric"
            )));
        }
        norms.push(d.sqrt());
    }
    let mut normalized = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            normalized[(i, j)] = g[(i, j)] / (norms[i] * norms[j]);
        }
    }
    let eig = nalgebra::SymmetricEigen::new(0.5 * (&normalized + normalized.transpose()));
    Ok(eig.eigenvalues.min().max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_pencil() {
        let a = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 2.0)]);
        let b = SparseMatrix::from_triplets(1, 1, vec![(0, 0, 1.0)]);
        for mode in [EigenMode::Dense, EigenMode::Sparse] {
            let pairs = solve_generalized(&a, &b, 1, mode).unwrap();
            assert!((pairs[0].lambda - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_b_gives_insufficient_spectrum() {
        let a = SparseMatrix::identity(3);
        let b = SparseMatrix::from_triplets(3, 3, Vec::new());
        for mode in [EigenMode::Dense, EigenMode::Sparse] {
            match solve_generalized(&a, &b, 1, mode) {
                Err(FemError::InsufficientSpectrum { found, .. }) => assert_eq!(found, 0),
                other => panic!("expected insufficient spectrum, got {other:?}"),
            }
        }
    }

    #[test]
    fn diagonal_pencil_smallest_lambdas() {
        // A = diag(1..=6), B = I: eigenvalues are 1..6
        let n = 6;
        let a = SparseMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, (i + 1) as f64)).collect());
        let b = SparseMatrix::identity(n);
        for mode in [EigenMode::Dense, EigenMode::Sparse] {
            let pairs = solve_generalized(&a, &b, 3, mode).unwrap();
            for (j, p) in pairs.iter().enumerate() {
                assert!((p.lambda - (j + 1) as f64).abs() < 1e-9, "{mode:?} λ_{j} = {}", p.lambda);
            }
        }
    }

    #[test]
    fn gap_of_identical_subspaces_is_zero() {
        let m = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let gram = DMatrix::identity(2, 2);
        assert!(subspace_gap(&m, &m, &gram).unwrap() < 1e-14);
    }

    #[test]
    fn gap_of_orthogonal_lines_is_one() {
        let m = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let n = DMatrix::from_column_slice(2, 1, &[0.0, 1.0]);
        let gram = DMatrix::identity(2, 2);
        assert!((subspace_gap(&m, &n, &gram).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gap_at_forty_five_degrees() {
        let m = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let n = DMatrix::from_column_slice(2, 1, &[s, s]);
        let gram = DMatrix::identity(2, 2);
        let gap = subspace_gap(&m, &n, &gram).unwrap();
        assert!((gap - s).abs() < 1e-14, "gap = {gap}");
    }

    #[test]
    fn rank_deficient_basis_rejected() {
        let m = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let gram = DMatrix::identity(2, 2);
        assert!(subspace_gap(&m, &m, &gram).is_err());
    }

    #[test]
    fn theta_orthonormal_is_one() {
        let v = DMatrix::identity(3, 3);
        let gram = DMatrix::identity(3, 3);
        assert!((stability_constant(&v, &gram).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn theta_duplicate_is_zero() {
        let v = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let gram = DMatrix::identity(2, 2);
        assert!(stability_constant(&v, &gram).unwrap() < 1e-14);
    }

    #[test]
    fn theta_at_sixty_degrees_is_half() {
        let v = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.5, 3.0f64.sqrt() / 2.0]);
        let gram = DMatrix::identity(2, 2);
        let theta = stability_constant(&v, &gram).unwrap();
        assert!((theta - 0.5).abs() < 1e-14, "theta = {theta}");
    }

    #[test]
    fn theta_zero_vector_rejected() {
        let v = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let gram = DMatrix::identity(2, 2);
        assert!(stability_constant(&v, &gram).is_err());
    }
}
