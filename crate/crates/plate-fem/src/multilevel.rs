//! The N-level correction scheme.
//!
//! One exact eigensolve happens on the coarsest mesh only. On every finer
//! level each eigenvector is improved by a single source solve (through the
//! decomposed Poisson/Stokes/Poisson path), and a small dense eigenproblem is
//! solved on the space spanned by the prolongated coarse basis plus the k
//! correction vectors. The final pairs live on the finest mesh at the cost of
//! coarse-mesh eigensolves plus one fine factorization per level.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::assembly::{apply_dirichlet, assemble_mixed, MixedSystem, Triple};
use crate::eigensolve::{dense_pencil_eigs, EigenPair};
use crate::linsolve::{DecomposedSolver, SparseMatrix};
use crate::mesh::{make_lshape_mesh, make_unit_square_mesh, refine_uniform, Triangulation};
use crate::spaces::{build_prolongation, build_space, Constraint, Prolongation, SpaceKind};
use crate::{FemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Square,
    LShape,
}

impl Domain {
    pub fn initial_mesh(self, n0: usize) -> Result<Triangulation> {
        match self {
            Domain::Square => make_unit_square_mesh(n0),
            Domain::LShape => make_lshape_mesh(n0),
        }
    }

    pub fn area(self) -> f64 {
        match self {
            Domain::Square => 1.0,
            Domain::LShape => 0.75,
        }
    }
}

/// Field-wise prolongation between consecutive levels.
pub struct LevelTransfer {
    pub scalar: Prolongation,
    pub pressure: Prolongation,
    scalar_t: SparseMatrix,
    pressure_t: SparseMatrix,
}

/// Nested meshes, assembled systems and transfers for levels 0..=N.
pub struct LevelHierarchy {
    pub domain: Domain,
    pub triple: Triple,
    pub n0: usize,
    pub meshes: Vec<Arc<Triangulation>>,
    /// Dirichlet-eliminated systems per level.
    pub systems: Vec<MixedSystem>,
    pub transfers: Vec<LevelTransfer>,
}

/// Eigenpairs on the finest level plus everything the study harness needs
/// from the intermediate levels.
pub struct MultilevelOutput {
    pub pairs: Vec<EigenPair>,
    /// λ̃ per level (0..=N), ascending within each level.
    pub per_level_lambdas: Vec<Vec<f64>>,
    /// Full coefficient vectors per level, b-normalized and sign-fixed.
    pub per_level_vectors: Vec<Vec<Vec<f64>>>,
    /// Wall-clock seconds spent on each level.
    pub per_level_seconds: Vec<f64>,
}

/// Build meshes, spaces, systems and prolongations for `levels` refinements.
pub fn build_hierarchy(
    domain: Domain,
    n0: usize,
    levels: usize,
    triple: Triple,
) -> Result<LevelHierarchy> {
    let mut meshes = vec![Arc::new(domain.initial_mesh(n0)?)];
    for i in 0..levels {
        let fine = refine_uniform(&meshes[i])?;
        meshes.push(Arc::new(fine));
    }
    let mut scalar_spaces = Vec::new();
    let mut pressure_spaces = Vec::new();
    let mut systems = Vec::new();
    for mesh in &meshes {
        let scalar = build_space(mesh.clone(), SpaceKind::P2, Constraint::Dirichlet)?;
        let pressure = build_space(mesh.clone(), triple.pressure_kind(), Constraint::ZeroMean)?;
        let sys = apply_dirichlet(assemble_mixed(&scalar, &scalar, &pressure, &scalar)?);
        scalar_spaces.push(scalar);
        pressure_spaces.push(pressure);
        systems.push(sys);
    }
    let mut transfers = Vec::new();
    for i in 0..levels {
        let scalar = build_prolongation(&scalar_spaces[i], &scalar_spaces[i + 1])?;
        let pressure = build_prolongation(&pressure_spaces[i], &pressure_spaces[i + 1])?;
        let scalar_t = scalar.matrix.transpose();
        let pressure_t = pressure.matrix.transpose();
        transfers.push(LevelTransfer {
            scalar,
            pressure,
            scalar_t,
            pressure_t,
        });
    }
    Ok(LevelHierarchy {
        domain,
        triple,
        n0,
        meshes,
        systems,
        transfers,
    })
}

impl LevelHierarchy {
    pub fn levels(&self) -> usize {
        self.meshes.len() - 1
    }

    /// Prolongate a full mixed coefficient vector from `level` to `level + 1`.
    pub fn prolongate_full(&self, level: usize, x: &[f64]) -> Vec<f64> {
        let t = &self.transfers[level];
        let co = self.systems[level].offsets;
        let fo = self.systems[level + 1].offsets;
        let cn_s = self.systems[level].scalar_space.dof_count;
        let cn_p = self.systems[level].pressure_space.dof_count;
        let fn_s = self.systems[level + 1].scalar_space.dof_count;
        let fn_p = self.systems[level + 1].pressure_space.dof_count;
        let mut y = vec![0.0; fo.total];
        y[fo.u..fo.u + fn_s].copy_from_slice(&t.scalar.apply(&x[co.u..co.u + cn_s]));
        y[fo.phi_x..fo.phi_x + fn_s]
            .copy_from_slice(&t.scalar.apply(&x[co.phi_x..co.phi_x + cn_s]));
        y[fo.phi_y..fo.phi_y + fn_s]
            .copy_from_slice(&t.scalar.apply(&x[co.phi_y..co.phi_y + cn_s]));
        y[fo.p..fo.p + fn_p].copy_from_slice(&t.pressure.apply(&x[co.p..co.p + cn_p]));
        y[fo.w..fo.w + fn_s].copy_from_slice(&t.scalar.apply(&x[co.w..co.w + cn_s]));
        if let (Some(cm), Some(fm)) = (co.mult, fo.mult) {
            y[fm] = x[cm];
        }
        y
    }

    /// Prolongate the u-component (scalar-space coefficients) across one level.
    pub fn prolongate_scalar(&self, level: usize, u: &[f64]) -> Vec<f64> {
        self.transfers[level].scalar.apply(u)
    }

    /// Prolongate a sparse full-vector column from `level` to `level + 1`.
    fn prolongate_sparse(&self, level: usize, col: &[(usize, f64)]) -> Vec<(usize, f64)> {
        let t = &self.transfers[level];
        let co = self.systems[level].offsets;
        let fo = self.systems[level + 1].offsets;
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(col.len() * 4);
        for &(g, v) in col {
            if Some(g) == co.mult {
                out.push((fo.mult.unwrap(), v));
                continue;
            }
            let (block_c, block_f, mat) = if g >= co.w {
                (co.w, fo.w, &t.scalar_t)
            } else if g >= co.p {
                (co.p, fo.p, &t.pressure_t)
            } else if g >= co.phi_y {
                (co.phi_y, fo.phi_y, &t.scalar_t)
            } else if g >= co.phi_x {
                (co.phi_x, fo.phi_x, &t.scalar_t)
            } else {
                (co.u, fo.u, &t.scalar_t)
            };
            for (fine, pv) in mat.row(g - block_c) {
                out.push((block_f + fine, pv * v));
            }
        }
        out.sort_by_key(|&(i, _)| i);
        out.dedup_by(|a, b| {
            if a.0 == b.0 {
                b.1 += a.1;
                true
            } else {
                false
            }
        });
        out
    }

    /// Inner product of the V-norm (H¹ per scalar field, L² for the pressure).
    fn v_norm_inner(&self, level: usize, x: &[f64], y: &[f64]) -> f64 {
        let sys = &self.systems[level];
        let off = sys.offsets;
        let n_s = sys.scalar_space.dof_count;
        let n_p = sys.pressure_space.dof_count;
        let h1 = |a: &[f64], b: &[f64]| {
            let ka = sys.k_s.matvec(a);
            let ma = sys.m_s.matvec(a);
            ka.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
                + ma.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
        };
        let mut s = 0.0;
        for lo in [off.u, off.phi_x, off.phi_y, off.w] {
            s += h1(&x[lo..lo + n_s], &y[lo..lo + n_s]);
        }
        let mp = sys.m_p.matvec(&x[off.p..off.p + n_p]);
        s += mp
            .iter()
            .zip(&y[off.p..off.p + n_p])
            .map(|(p, q)| p * q)
            .sum::<f64>();
        if let Some(m) = off.mult {
            s += x[m] * y[m];
        }
        s
    }
}

type SparseCol = Vec<(usize, f64)>;

/// Basis of the augmented space on one level: the prolongated coarse dofs
/// (sparse columns) plus the dense correction vectors. Columns are only ever
/// densified one at a time.
struct AugmentedBasis {
    coarse: Vec<SparseCol>,
    corrections: Vec<Vec<f64>>,
}

impl AugmentedBasis {
    fn len(&self) -> usize {
        self.coarse.len() + self.corrections.len()
    }

    fn expand_column(&self, j: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        if j < self.coarse.len() {
            for &(i, v) in &self.coarse[j] {
                out[i] = v;
            }
        } else {
            out.copy_from_slice(&self.corrections[j - self.coarse.len()]);
        }
        out
    }

    /// col_j · dense, using sparsity where available.
    fn dot_column(&self, j: usize, dense: &[f64]) -> f64 {
        if j < self.coarse.len() {
            self.coarse[j].iter().map(|&(i, v)| v * dense[i]).sum()
        } else {
            self.corrections[j - self.coarse.len()]
                .iter()
                .zip(dense)
                .map(|(a, b)| a * b)
                .sum()
        }
    }

    /// Linear combination Σ coeffs[j]·col_j.
    fn expand(&self, coeff: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (col, &c) in self.coarse.iter().zip(coeff) {
            if c != 0.0 {
                for &(i, v) in col {
                    out[i] += c * v;
                }
            }
        }
        for (col, &c) in self.corrections.iter().zip(&coeff[self.coarse.len()..]) {
            if c != 0.0 {
                for (o, v) in out.iter_mut().zip(col) {
                    *o += c * v;
                }
            }
        }
        out
    }

    /// Smallest eigenvalue of the column-normalized Euclidean Gram matrix.
    fn conditioning(&self, n: usize) -> f64 {
        let m = self.len();
        let cols: Vec<Vec<f64>> = crate::map_range(m, |j| {
            let dense = self.expand_column(j, n);
            (0..m).map(|i| self.dot_column(i, &dense)).collect()
        });
        let mut gram = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..m {
                gram[(i, j)] = cols[j][i];
            }
        }
        let gram = 0.5 * (&gram + gram.transpose());
        let norms: Vec<f64> = (0..m).map(|i| gram[(i, i)].sqrt().max(1e-300)).collect();
        let mut normalized = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                normalized[(i, j)] = gram[(i, j)] / (norms[i] * norms[j]);
            }
        }
        nalgebra::SymmetricEigen::new(normalized).eigenvalues.min()
    }
}

/// Galerkin reduction of the level pencil onto the basis columns.
fn reduced_pencil(sys: &MixedSystem, basis: &AugmentedBasis) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sys.offsets.total;
    let m = basis.len();
    let cols: Vec<(Vec<f64>, Vec<f64>)> = crate::map_range(m, |j| {
        let dense = basis.expand_column(j, n);
        let aj = sys.a.matvec(&dense);
        let bj = sys.apply_b(&dense);
        let acol: Vec<f64> = (0..m).map(|i| basis.dot_column(i, &aj)).collect();
        let bcol: Vec<f64> = (0..m).map(|i| basis.dot_column(i, &bj)).collect();
        (acol, bcol)
    });
    let mut a_red = DMatrix::zeros(m, m);
    let mut b_red = DMatrix::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            a_red[(i, j)] = cols[j].0[i];
            b_red[(i, j)] = cols[j].1[i];
        }
    }
    (a_red, b_red)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = max_abs(m).max(1e-300);
    max_abs(&(m - m.transpose())) / scale
}

/// Solve the reduced eigenproblem and return the k smallest pairs expanded to
/// full b-normalized, sign-fixed vectors.
fn reduced_solve(
    sys: &MixedSystem,
    basis: &AugmentedBasis,
    k: usize,
    level: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (a_red, b_red) = reduced_pencil(sys, basis);
    if relative_asymmetry(&a_red) > 1e-12 || relative_asymmetry(&b_red) > 1e-12 {
        return Err(FemError::DegenerateBasis {
            level,
            detail: "reduced matrices lost symmetry".into(),
        });
    }
    let a_red = 0.5 * (&a_red + a_red.transpose());
    let b_red = 0.5 * (&b_red + b_red.transpose());
    let ritz = dense_pencil_eigs(&a_red, &b_red)?;
    if ritz.len() < k {
        return Err(FemError::InsufficientSpectrum {
            requested: k,
            found: ritz.len(),
        });
    }
    let n = sys.offsets.total;
    let n_s = sys.scalar_space.dof_count;
    let mut lambdas = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    for (lambda, coeff) in ritz.into_iter().take(k) {
        let mut v = basis.expand(&coeff, n);
        let norm = sys.b_norm(&v);
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        let mut best = (0.0f64, 1.0f64);
        for &x in &v[0..n_s] {
            if x.abs() > best.0 {
                best = (x.abs(), x.signum());
            }
        }
        if best.1 < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        lambdas.push(lambda);
        vectors.push(v);
    }
    Ok((lambdas, vectors))
}

/// Run the N-level correction algorithm for the first k eigenpairs.
pub fn multilevel_eigs(hier: &LevelHierarchy, k: usize) -> Result<MultilevelOutput> {
    let sys0 = &hier.systems[0];
    let free0 = sys0.free_dofs();
    if k == 0 || 4 * k > free0.len() {
        return Err(FemError::InvalidArgument(format!(
            "k = {k} is not within a quarter of the {} free coarse dofs",
            free0.len()
        )));
    }

    let mut coarse_cols: Vec<SparseCol> = free0.iter().map(|&d| vec![(d, 1.0)]).collect();
    let basis0 = AugmentedBasis {
        coarse: coarse_cols.clone(),
        corrections: Vec::new(),
    };

    let t0 = std::time::Instant::now();
    let (mut lambdas, mut vectors) = reduced_solve(sys0, &basis0, k, 0)?;
    let mut per_level_lambdas = vec![lambdas.clone()];
    let mut per_level_vectors = vec![vectors.clone()];
    let mut per_level_seconds = vec![t0.elapsed().as_secs_f64()];

    for level in 1..=hier.levels() {
        let t_level = std::time::Instant::now();
        let sys = &hier.systems[level];

        // one corrected source solve per eigenpair, sharing the factorization
        let solver = DecomposedSolver::new(sys)?;
        let rhs: Vec<Vec<f64>> = lambdas
            .iter()
            .zip(&vectors)
            .map(|(&l, v)| {
                let prolongated = hier.prolongate_full(level - 1, v);
                let mut r = sys.apply_b(&prolongated);
                r.iter_mut().for_each(|x| *x *= l);
                r
            })
            .collect();
        let corrections: Vec<Vec<f64>> = crate::map_collect(&rhs, |r| solver.solve(r));

        coarse_cols = crate::map_collect(&coarse_cols, |c| hier.prolongate_sparse(level - 1, c));
        let basis = AugmentedBasis {
            coarse: coarse_cols.clone(),
            corrections,
        };
        let cond = basis.conditioning(sys.offsets.total);
        if cond < 1e-10 {
            return Err(FemError::DegenerateBasis {
                level,
                detail: format!("normalized Gram eigenvalue {cond:.3e}"),
            });
        }

        let (l, v) = reduced_solve(sys, &basis, k, level)?;
        lambdas = l;
        vectors = v;

        // stability-constant monitor on the computed eigenvectors
        let theta = eigenvector_theta(hier, level, &vectors)?;
        if theta < 0.1 {
            return Err(FemError::DegenerateBasis {
                level,
                detail: format!("stability constant {theta:.3e} below 0.1"),
            });
        }

        per_level_lambdas.push(lambdas.clone());
        per_level_vectors.push(vectors.clone());
        per_level_seconds.push(t_level.elapsed().as_secs_f64());
    }

    let pairs = lambdas
        .iter()
        .zip(&vectors)
        .map(|(&lambda, v)| EigenPair {
            lambda,
            vector: v.clone(),
        })
        .collect();
    Ok(MultilevelOutput {
        pairs,
        per_level_lambdas,
        per_level_vectors,
        per_level_seconds,
    })
}

/// θ of the current eigenvector set in the V-norm.
fn eigenvector_theta(hier: &LevelHierarchy, level: usize, vectors: &[Vec<f64>]) -> Result<f64> {
    let m = vectors.len();
    let mut gram = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = hier.v_norm_inner(level, &vectors[i], &vectors[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    crate::eigensolve::stability_constant(&DMatrix::identity(m, m), &gram)
}

/// H¹ errors ‖u_ref − u_ℓ‖ of the u-components against the reference level,
/// with sign alignment and, inside numerically degenerate eigenvalue clusters,
/// orthogonal (Procrustes) alignment of the whole cluster.
pub fn eigenfunction_errors(
    hier: &LevelHierarchy,
    per_level_u: &[Vec<Vec<f64>>],
    reference_level: usize,
    reference_lambdas: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let sys_ref = &hier.systems[reference_level];
    let k = reference_lambdas.len();
    let h1 = |a: &[f64], b: &[f64]| -> f64 {
        let ka = sys_ref.k_s.matvec(a);
        let ma = sys_ref.m_s.matvec(a);
        ka.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
            + ma.iter().zip(b).map(|(p, q)| p * q).sum::<f64>()
    };

    // consecutive eigenvalues closer than 1e-8 relative form one cluster
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for j in 0..k {
        let new_cluster = match clusters.last() {
            Some(c) => {
                let prev = reference_lambdas[*c.last().unwrap()];
                (reference_lambdas[j] - prev).abs() > 1e-8 * reference_lambdas[j].abs()
            }
            None => true,
        };
        if new_cluster {
            clusters.push(vec![j]);
        } else {
            clusters.last_mut().unwrap().push(j);
        }
    }

    let reference = &per_level_u[reference_level];
    let mut errors = vec![vec![0.0; k]; reference_level];
    for level in 0..reference_level {
        let lifted: Vec<Vec<f64>> = per_level_u[level]
            .iter()
            .map(|u| {
                let mut v = u.clone();
                for l in level..reference_level {
                    v = hier.prolongate_scalar(l, &v);
                }
                v
            })
            .collect();
        for cluster in &clusters {
            let c = cluster.len();
            if c == 1 {
                let j = cluster[0];
                let plus = {
                    let d: Vec<f64> =
                        reference[j].iter().zip(&lifted[j]).map(|(a, b)| a - b).collect();
                    h1(&d, &d)
                };
                let minus = {
                    let d: Vec<f64> =
                        reference[j].iter().zip(&lifted[j]).map(|(a, b)| a + b).collect();
                    h1(&d, &d)
                };
                errors[level][j] = plus.min(minus).max(0.0).sqrt();
            } else {
                // cross Gram in H¹, then the closest orthogonal alignment
                let mut cross = DMatrix::zeros(c, c);
                for (ci, &i) in cluster.iter().enumerate() {
                    for (cj, &j) in cluster.iter().enumerate() {
                        cross[(ci, cj)] = h1(&lifted[i], &reference[j]);
                    }
                }
                let svd = cross.clone().svd(true, true);
                let q = svd.u.unwrap() * svd.v_t.unwrap();
                for (cj, &j) in cluster.iter().enumerate() {
                    let mut aligned = vec![0.0; reference[j].len()];
                    for (ci, &i) in cluster.iter().enumerate() {
                        let w = q[(ci, cj)];
                        if w != 0.0 {
                            for (a, b) in aligned.iter_mut().zip(&lifted[i]) {
                                *a += w * b;
                            }
                        }
                    }
                    let d: Vec<f64> =
                        reference[j].iter().zip(&aligned).map(|(a, b)| a - b).collect();
                    errors[level][j] = h1(&d, &d).max(0.0).sqrt();
                }
            }
        }
    }
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{solve_mixed, EigenMode, IterationSettings};

    #[test]
    fn hierarchy_shapes() {
        let hier = build_hierarchy(Domain::Square, 2, 2, Triple::B).unwrap();
        assert_eq!(hier.meshes.len(), 3);
        assert_eq!(hier.transfers.len(), 2);
        for (i, mesh) in hier.meshes.iter().enumerate() {
            assert_eq!(mesh.level, i);
            assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        }
        // dof counts grow roughly fourfold per level
        let d0 = hier.systems[0].offsets.total as f64;
        let d2 = hier.systems[2].offsets.total as f64;
        assert!(d2 / d0 > 8.0);
    }

    #[test]
    fn collapse_identity_matches_single_level() {
        let hier = build_hierarchy(Domain::Square, 2, 0, Triple::B).unwrap();
        let out = multilevel_eigs(&hier, 3).unwrap();
        let single = solve_mixed(
            &hier.systems[0],
            3,
            EigenMode::Dense,
            &[],
            IterationSettings::default(),
        )
        .unwrap();
        for (m, s) in out.pairs.iter().zip(&single) {
            assert!(
                (m.lambda - s.lambda).abs() <= 1e-10 * s.lambda,
                "multilevel {} vs single {}",
                m.lambda,
                s.lambda
            );
        }
    }

    #[test]
    fn two_level_correction_tracks_fine_solution() {
        let hier = build_hierarchy(Domain::Square, 2, 1, Triple::B).unwrap();
        let out = multilevel_eigs(&hier, 2).unwrap();
        let fine = solve_mixed(
            &hier.systems[1],
            2,
            EigenMode::Dense,
            &[],
            IterationSettings::default(),
        )
        .unwrap();
        for (m, s) in out.pairs.iter().zip(&fine) {
            let rel = (m.lambda - s.lambda).abs() / s.lambda;
            assert!(rel < 1e-3, "λ̃ = {} vs λ = {} (rel {rel:.2e})", m.lambda, s.lambda);
        }
    }

    #[test]
    fn oversized_k_rejected() {
        let hier = build_hierarchy(Domain::Square, 2, 0, Triple::A).unwrap();
        assert!(multilevel_eigs(&hier, 1000).is_err());
    }

    #[test]
    fn self_comparison_has_zero_error_even_after_sign_flip() {
        let hier = build_hierarchy(Domain::Square, 2, 1, Triple::B).unwrap();
        let out = multilevel_eigs(&hier, 2).unwrap();
        let n_s0 = hier.systems[0].scalar_space.dof_count;
        let u0: Vec<Vec<f64>> = out.per_level_vectors[0]
            .iter()
            .map(|v| v[0..n_s0].to_vec())
            .collect();
        // reference = the exact prolongation of the coarse u-components
        let lifted: Vec<Vec<f64>> = u0.iter().map(|u| hier.prolongate_scalar(0, u)).collect();
        let lambdas = out.per_level_lambdas[0].clone();
        let per_level = vec![u0.clone(), lifted.clone()];
        let errs = eigenfunction_errors(&hier, &per_level, 1, &lambdas).unwrap();
        let mut flipped = u0;
        for v in &mut flipped {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let per_level_flipped = vec![flipped, lifted];
        let errs_flipped = eigenfunction_errors(&hier, &per_level_flipped, 1, &lambdas).unwrap();
        for j in 0..2 {
            assert!(errs[0][j] < 1e-10, "self error {}", errs[0][j]);
            assert!(errs_flipped[0][j] < 1e-10, "flipped error {}", errs_flipped[0][j]);
        }
    }
}
