//! Assembly of the mixed bilinear forms.
//!
//! With trial fields ordered (u, φₓ, φᵧ, p, w, multiplier) and the test
//! functionals ordered so that the first eigen-equation comes first
//! (v, ψₓ, ψᵧ, q, s, multiplier), both forms become literally symmetric
//! matrices:
//!
//! ```text
//!       u    φₓ    φᵧ    p     w            u  …
//! v  [  ·    ·     ·     ·     K   ]    v [  M  … ]   (B: u-mass, top-left)
//! ψₓ [  ·    K     ·    −Dᵧᵀ   Gₓ  ]
//! ψᵧ [  ·    ·     K     Dₓᵀ   Gᵧ  ]
//! q  [  ·   −Dᵧ    Dₓ    ·     ·   ]
//! s  [  K    Gₓᵀ   Gᵧᵀ   ·     ·   ]
//! ```
//!
//! K is the scalar P2 stiffness, Gₓ/Gᵧ couple a function against a derivative
//! ((ψ, ∂w/∂x) etc.), Dₓ/Dᵧ couple pressure against velocity derivatives, and
//! the mean-zero constraint on p adds one symmetric multiplier row/column
//! holding ∫p. Because mirrored blocks are emitted from the same element
//! integrals, ‖A − Aᵀ‖ is exactly zero.

use std::sync::Arc;

use crate::linsolve::SparseMatrix;
use crate::mesh::triangle_geometry;
use crate::quadrature::QuadratureRule;
use crate::spaces::{basis_gradients, basis_values, Constraint, FESpace, SpaceKind};
use crate::{FemError, Result};

/// Element triple naming: A is the reduced P2~P2~P0 choice, B is P2~P2~P1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triple {
    A,
    B,
}

impl Triple {
    pub fn pressure_kind(self) -> SpaceKind {
        match self {
            Triple::A => SpaceKind::P0,
            Triple::B => SpaceKind::P1,
        }
    }

    /// Theoretical eigenvalue convergence rate on smooth problems.
    pub fn eigenvalue_rate(self) -> f64 {
        match self {
            Triple::A => 2.0,
            Triple::B => 4.0,
        }
    }
}

/// Start index of each field block in the concatenated dof vector. Rows and
/// columns share the same offsets by the test-ordering convention above.
#[derive(Debug, Clone, Copy)]
pub struct BlockOffsets {
    pub u: usize,
    pub phi_x: usize,
    pub phi_y: usize,
    pub p: usize,
    pub w: usize,
    pub mult: Option<usize>,
    pub total: usize,
}

/// The assembled mixed system plus the raw per-field blocks it is composed of.
pub struct MixedSystem {
    pub scalar_space: FESpace,
    pub pressure_space: FESpace,
    pub triple: Triple,
    pub offsets: BlockOffsets,
    /// Scalar P2 stiffness (∇s_i, ∇s_j), no constraints applied.
    pub k_s: SparseMatrix,
    /// Scalar P2 mass (s_i, s_j), no constraints applied.
    pub m_s: SparseMatrix,
    /// (s_i, ∂s_j/∂x) and (s_i, ∂s_j/∂y).
    pub g_x: SparseMatrix,
    pub g_y: SparseMatrix,
    /// (p_i, ∂s_j/∂x) and (p_i, ∂s_j/∂y).
    pub d_x: SparseMatrix,
    pub d_y: SparseMatrix,
    /// Pressure mass matrix.
    pub m_p: SparseMatrix,
    /// ∫ p_i, the multiplier row enforcing the zero mean.
    pub e_p: Vec<f64>,
    /// The composed symmetric matrix of the a-form.
    pub a: SparseMatrix,
    /// The composed matrix of the b-form (u-mass in the top-left block).
    pub b: SparseMatrix,
    /// Per-global-dof Dirichlet flag.
    pub constrained_global: Vec<bool>,
    /// Whether `a`/`b` have had Dirichlet rows and columns eliminated.
    pub dirichlet_applied: bool,
}

/// Right-hand side data for the source problem.
pub enum SourceData<'a> {
    /// Coefficients of f in the u-space: entries become (f_h, v_i).
    Coefficients(&'a [f64]),
    /// Analytic f(x, y), integrated by quadrature.
    Analytic(&'a dyn Fn(f64, f64) -> f64),
}

struct BlockTriplets {
    k: Vec<(usize, usize, f64)>,
    m: Vec<(usize, usize, f64)>,
    gx: Vec<(usize, usize, f64)>,
    gy: Vec<(usize, usize, f64)>,
    dx: Vec<(usize, usize, f64)>,
    dy: Vec<(usize, usize, f64)>,
    mp: Vec<(usize, usize, f64)>,
    ep: Vec<f64>,
}

/// Assemble the mixed system over V_h = u × (φₓ, φᵧ) × p × w.
///
/// `u`, `phi` (the scalar space reused per component) and `w` must be the same
/// Dirichlet-constrained P2 space; `p` is the zero-mean pressure space of the
/// chosen triple.
pub fn assemble_mixed(u: &FESpace, phi: &FESpace, p: &FESpace, w: &FESpace) -> Result<MixedSystem> {
    let same = |a: &FESpace, b: &FESpace| {
        Arc::ptr_eq(&a.mesh, &b.mesh) && a.kind == b.kind && a.constraint == b.constraint
    };
    if !same(u, phi) || !same(u, w) {
        return Err(FemError::InvalidArgument(
            "u, φ and w must share one scalar space".into(),
        ));
    }
    if !Arc::ptr_eq(&u.mesh, &p.mesh) {
        return Err(FemError::InvalidArgument(
            "pressure space lives on a different mesh".into(),
        ));
    }
    if u.kind != SpaceKind::P2 || u.constraint != Constraint::Dirichlet {
        return Err(FemError::InvalidArgument(
            "scalar fields must be Dirichlet-constrained P2".into(),
        ));
    }
    let triple = match p.kind {
        SpaceKind::P0 => Triple::A,
        SpaceKind::P1 => Triple::B,
        SpaceKind::P2 => {
            return Err(FemError::UnsupportedCombination(
                "P2 pressure is not part of either element triple".into(),
            ))
        }
    };

    let scalar = u.clone();
    let pressure = p.clone();
    let mesh = scalar.mesh.clone();
    let rule = QuadratureRule::degree4();
    let n_s = scalar.dof_count;
    let n_p = pressure.dof_count;
    let np_loc = pressure.kind.dofs_per_triangle();

    let n_t = mesh.triangles.len();
    let chunk = 512usize;
    let ranges: Vec<(usize, usize)> = (0..n_t.div_ceil(chunk))
        .map(|i| (i * chunk, ((i + 1) * chunk).min(n_t)))
        .collect();

    let chunks: Vec<BlockTriplets> = crate::map_collect(&ranges, |&(lo, hi)| {
        let mut out = BlockTriplets {
            k: Vec::new(),
            m: Vec::new(),
            gx: Vec::new(),
            gy: Vec::new(),
            dx: Vec::new(),
            dy: Vec::new(),
            mp: Vec::new(),
            ep: vec![0.0; n_p],
        };
        for t in lo..hi {
            let geom = triangle_geometry(&mesh, t).expect("validated at construction");
            let sd = scalar.triangle_dofs(t);
            let pd = pressure.triangle_dofs(t);
            let mut k_e = [[0.0; 6]; 6];
            let mut m_e = [[0.0; 6]; 6];
            let mut gx_e = [[0.0; 6]; 6];
            let mut gy_e = [[0.0; 6]; 6];
            let mut dx_e = [[0.0; 6]; 3];
            let mut dy_e = [[0.0; 6]; 3];
            let mut mp_e = [[0.0; 3]; 3];
            let mut ep_e = [0.0; 3];
            for (pt, &wq) in rule.points.iter().zip(&rule.weights) {
                let w2 = 2.0 * geom.area * wq;
                let sv = basis_values(SpaceKind::P2, pt);
                let sg = basis_gradients(SpaceKind::P2, pt, &geom.grad);
                let pv = basis_values(pressure.kind, pt);
                for i in 0..6 {
                    for j in 0..6 {
                        k_e[i][j] += w2 * (sg[i][0] * sg[j][0] + sg[i][1] * sg[j][1]);
                        m_e[i][j] += w2 * (sv[i] * sv[j]);
                        gx_e[i][j] += w2 * sv[i] * sg[j][0];
                        gy_e[i][j] += w2 * sv[i] * sg[j][1];
                    }
                }
                for pi in 0..np_loc {
                    for j in 0..6 {
                        dx_e[pi][j] += w2 * pv[pi] * sg[j][0];
                        dy_e[pi][j] += w2 * pv[pi] * sg[j][1];
                    }
                    for pj in 0..np_loc {
                        mp_e[pi][pj] += w2 * (pv[pi] * pv[pj]);
                    }
                    ep_e[pi] += w2 * pv[pi];
                }
            }
            for i in 0..6 {
                for j in 0..6 {
                    out.k.push((sd[i], sd[j], k_e[i][j]));
                    out.m.push((sd[i], sd[j], m_e[i][j]));
                    out.gx.push((sd[i], sd[j], gx_e[i][j]));
                    out.gy.push((sd[i], sd[j], gy_e[i][j]));
                }
            }
            for pi in 0..np_loc {
                for j in 0..6 {
                    out.dx.push((pd[pi], sd[j], dx_e[pi][j]));
                    out.dy.push((pd[pi], sd[j], dy_e[pi][j]));
                }
                for pj in 0..np_loc {
                    out.mp.push((pd[pi], pd[pj], mp_e[pi][pj]));
                }
                out.ep[pd[pi]] += ep_e[pi];
            }
        }
        out
    });

    let mut merged = BlockTriplets {
        k: Vec::new(),
        m: Vec::new(),
        gx: Vec::new(),
        gy: Vec::new(),
        dx: Vec::new(),
        dy: Vec::new(),
        mp: Vec::new(),
        ep: vec![0.0; n_p],
    };
    for c in chunks {
        merged.k.extend(c.k);
        merged.m.extend(c.m);
        merged.gx.extend(c.gx);
        merged.gy.extend(c.gy);
        merged.dx.extend(c.dx);
        merged.dy.extend(c.dy);
        merged.mp.extend(c.mp);
        for (dst, src) in merged.ep.iter_mut().zip(&c.ep) {
            *dst += src;
        }
    }

    let mut k_s = SparseMatrix::from_triplets(n_s, n_s, merged.k);
    let mut m_s = SparseMatrix::from_triplets(n_s, n_s, merged.m);
    k_s.symmetric = true;
    m_s.symmetric = true;
    let g_x = SparseMatrix::from_triplets(n_s, n_s, merged.gx);
    let g_y = SparseMatrix::from_triplets(n_s, n_s, merged.gy);
    let d_x = SparseMatrix::from_triplets(n_p, n_s, merged.dx);
    let d_y = SparseMatrix::from_triplets(n_p, n_s, merged.dy);
    let mut m_p = SparseMatrix::from_triplets(n_p, n_p, merged.mp);
    m_p.symmetric = true;

    let use_mult = pressure.zero_mean();
    let offsets = BlockOffsets {
        u: 0,
        phi_x: n_s,
        phi_y: 2 * n_s,
        p: 3 * n_s,
        w: 3 * n_s + n_p,
        mult: use_mult.then_some(4 * n_s + n_p),
        total: 4 * n_s + n_p + usize::from(use_mult),
    };

    let mut constrained_global = vec![false; offsets.total];
    for (i, &c) in scalar.constrained.iter().enumerate() {
        if c {
            constrained_global[offsets.u + i] = true;
            constrained_global[offsets.phi_x + i] = true;
            constrained_global[offsets.phi_y + i] = true;
            constrained_global[offsets.w + i] = true;
        }
    }

    let mut sys = MixedSystem {
        scalar_space: scalar,
        pressure_space: pressure,
        triple,
        offsets,
        k_s,
        m_s,
        g_x,
        g_y,
        d_x,
        d_y,
        m_p,
        e_p: merged.ep,
        a: SparseMatrix::from_triplets(0, 0, Vec::new()),
        b: SparseMatrix::from_triplets(0, 0, Vec::new()),
        constrained_global,
        dirichlet_applied: false,
    };
    sys.compose(false);
    Ok(sys)
}

/// Symmetric Dirichlet elimination: constrained rows and columns are zeroed,
/// with unit diagonal in A and zero diagonal in B. The resulting spurious
/// eigenvalues at infinity never surface in the shift-invert solver.
pub fn apply_dirichlet(mut system: MixedSystem) -> MixedSystem {
    system.compose(true);
    system
}

/// Assemble the source-problem right-hand side: (f, v) entries in the first
/// (w-equation) test block, zeros elsewhere.
pub fn assemble_source_rhs(system: &MixedSystem, data: SourceData) -> Result<Vec<f64>> {
    let n_s = system.scalar_space.dof_count;
    let mut rhs = vec![0.0; system.offsets.total];
    match data {
        SourceData::Coefficients(c) => {
            if c.len() != n_s {
                return Err(FemError::DimensionMismatch(format!(
                    "f has {} coefficients, u-space has {n_s}",
                    c.len()
                )));
            }
            rhs[0..n_s].copy_from_slice(&system.m_s.matvec(c));
        }
        SourceData::Analytic(f) => {
            let mesh = &system.scalar_space.mesh;
            let rule = QuadratureRule::degree4();
            for t in 0..mesh.triangles.len() {
                let geom = triangle_geometry(mesh, t)?;
                let [a, b, c] = mesh.triangles[t];
                let (pa, pb, pc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
                let sd = system.scalar_space.triangle_dofs(t);
                for (pt, &wq) in rule.points.iter().zip(&rule.weights) {
                    let x = pt[0] * pa[0] + pt[1] * pb[0] + pt[2] * pc[0];
                    let y = pt[0] * pa[1] + pt[1] * pb[1] + pt[2] * pc[1];
                    let fv = f(x, y) * 2.0 * geom.area * wq;
                    let sv = basis_values(SpaceKind::P2, pt);
                    for i in 0..6 {
                        rhs[sd[i]] += fv * sv[i];
                    }
                }
            }
        }
    }
    if system.dirichlet_applied {
        for (i, &c) in system.constrained_global.iter().enumerate() {
            if c {
                rhs[i] = 0.0;
            }
        }
    }
    Ok(rhs)
}

impl MixedSystem {
    /// (Re)compose the global A and B from the raw blocks.
    fn compose(&mut self, eliminate: bool) {
        let off = self.offsets;
        let keep = |r: usize, c: usize, constrained: &[bool]| -> bool {
            !eliminate || (!constrained[r] && !constrained[c])
        };

        let mut ta: Vec<(usize, usize, f64)> = Vec::new();
        let cg = std::mem::take(&mut self.constrained_global);
        {
            let mut push = |r: usize, c: usize, v: f64| {
                if keep(r, c, &cg) {
                    ta.push((r, c, v));
                }
            };
            for r in 0..self.k_s.nrows() {
                for (c, v) in self.k_s.row(r) {
                    push(off.u + r, off.w + c, v); // (∇w, ∇v)
                    push(off.w + r, off.u + c, v); // (∇u, ∇s)
                    push(off.phi_x + r, off.phi_x + c, v); // (∇φ, ∇ψ)
                    push(off.phi_y + r, off.phi_y + c, v);
                }
            }
            for r in 0..self.g_x.nrows() {
                for (c, v) in self.g_x.row(r) {
                    push(off.phi_x + r, off.w + c, v); // (∇w, ψ), x part
                    push(off.w + c, off.phi_x + r, v); // (φ, ∇s) mirror
                }
                for (c, v) in self.g_y.row(r) {
                    push(off.phi_y + r, off.w + c, v);
                    push(off.w + c, off.phi_y + r, v);
                }
            }
            for r in 0..self.d_x.nrows() {
                for (c, v) in self.d_y.row(r) {
                    push(off.p + r, off.phi_x + c, -v); // (rot φ, q), x part
                    push(off.phi_x + c, off.p + r, -v); // (p, rot ψ) mirror
                }
                for (c, v) in self.d_x.row(r) {
                    push(off.p + r, off.phi_y + c, v);
                    push(off.phi_y + c, off.p + r, v);
                }
            }
            if let Some(m) = off.mult {
                for (i, &e) in self.e_p.iter().enumerate() {
                    push(m, off.p + i, e);
                    push(off.p + i, m, e);
                }
            }
            if eliminate {
                for (i, &c) in cg.iter().enumerate() {
                    if c {
                        ta.push((i, i, 1.0));
                    }
                }
            }
        }

        let mut tb: Vec<(usize, usize, f64)> = Vec::new();
        for r in 0..self.m_s.nrows() {
            for (c, v) in self.m_s.row(r) {
                if keep(off.u + r, off.u + c, &cg) {
                    tb.push((off.u + r, off.u + c, v));
                }
            }
        }

        self.constrained_global = cg;
        self.a = SparseMatrix::from_triplets(off.total, off.total, ta);
        self.a.symmetric = true;
        self.b = SparseMatrix::from_triplets(off.total, off.total, tb);
        self.b.symmetric = true;
        self.dirichlet_applied = eliminate;
    }

    /// B x: the u-component mass, placed in the first test block.
    pub fn apply_b(&self, x: &[f64]) -> Vec<f64> {
        let n_s = self.scalar_space.dof_count;
        let mut u = x[0..n_s].to_vec();
        if self.dirichlet_applied {
            for (i, &c) in self.scalar_space.constrained.iter().enumerate() {
                if c {
                    u[i] = 0.0;
                }
            }
        }
        let mut y = vec![0.0; self.offsets.total];
        let mu = self.m_s.matvec(&u);
        y[0..n_s].copy_from_slice(&mu);
        if self.dirichlet_applied {
            for (i, &c) in self.scalar_space.constrained.iter().enumerate() {
                if c {
                    y[i] = 0.0;
                }
            }
        }
        y
    }

    /// b(x, y) = (u_x, u_y).
    pub fn b_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let bx = self.apply_b(x);
        bx.iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// √b(x, x), the L² norm of the u-component.
    pub fn b_norm(&self, x: &[f64]) -> f64 {
        self.b_inner(x, x).max(0.0).sqrt()
    }

    /// Scalar stiffness with Dirichlet rows/columns eliminated and unit
    /// diagonal: the Poisson block of the decomposed solver.
    pub fn constrained_scalar_stiffness(&self) -> SparseMatrix {
        let n = self.scalar_space.dof_count;
        let cons = &self.scalar_space.constrained;
        let mut t = Vec::with_capacity(self.k_s.nnz() + n);
        for r in 0..n {
            if cons[r] {
                t.push((r, r, 1.0));
            } else {
                for (c, v) in self.k_s.row(r) {
                    if !cons[c] {
                        t.push((r, c, v));
                    }
                }
            }
        }
        let mut m = SparseMatrix::from_triplets(n, n, t);
        m.symmetric = true;
        m
    }

    /// The rotated-Stokes block over (φₓ, φᵧ, p, multiplier), Dirichlet rows
    /// eliminated. Returns the matrix and its dimension.
    pub fn stokes_block(&self) -> (SparseMatrix, usize) {
        let n_s = self.scalar_space.dof_count;
        let n_p = self.pressure_space.dof_count;
        let cons = &self.scalar_space.constrained;
        let use_mult = self.offsets.mult.is_some();
        let dim = 2 * n_s + n_p + usize::from(use_mult);
        let mut t = Vec::new();
        for r in 0..n_s {
            if cons[r] {
                t.push((r, r, 1.0));
                t.push((n_s + r, n_s + r, 1.0));
                continue;
            }
            for (c, v) in self.k_s.row(r) {
                if !cons[c] {
                    t.push((r, c, v));
                    t.push((n_s + r, n_s + c, v));
                }
            }
        }
        for r in 0..n_p {
            for (c, v) in self.d_y.row(r) {
                if !cons[c] {
                    t.push((2 * n_s + r, c, -v));
                    t.push((c, 2 * n_s + r, -v));
                }
            }
            for (c, v) in self.d_x.row(r) {
                if !cons[c] {
                    t.push((2 * n_s + r, n_s + c, v));
                    t.push((n_s + c, 2 * n_s + r, v));
                }
            }
        }
        if use_mult {
            for (i, &e) in self.e_p.iter().enumerate() {
                t.push((dim - 1, 2 * n_s + i, e));
                t.push((2 * n_s + i, dim - 1, e));
            }
        }
        let mut m = SparseMatrix::from_triplets(dim, dim, t);
        m.symmetric = true;
        (m, dim)
    }

    /// Global indices that remain free after Dirichlet elimination
    /// (pressure and multiplier dofs included).
    pub fn free_dofs(&self) -> Vec<usize> {
        self.constrained_global
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Assemble the mixed system for a mesh and triple; the raw form unless
/// `eliminate` is set.
pub fn assemble_for_mesh(
    mesh: Arc<crate::mesh::Triangulation>,
    triple: Triple,
    eliminate: bool,
) -> Result<MixedSystem> {
    let scalar = crate::spaces::build_space(mesh.clone(), SpaceKind::P2, Constraint::Dirichlet)?;
    let pressure = crate::spaces::build_space(mesh, triple.pressure_kind(), Constraint::ZeroMean)?;
    let sys = assemble_mixed(&scalar, &scalar, &pressure, &scalar)?;
    Ok(if eliminate { apply_dirichlet(sys) } else { sys })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_unit_square_mesh, refine_uniform, Triangulation};
    use crate::spaces::build_space;

    fn system_on(mesh: Arc<Triangulation>, triple: Triple) -> MixedSystem {
        assemble_for_mesh(mesh, triple, false).unwrap()
    }

    fn square_system(n0: usize, refines: usize, triple: Triple) -> MixedSystem {
        let mut m = make_unit_square_mesh(n0).unwrap();
        for _ in 0..refines {
            m = refine_uniform(&m).unwrap();
        }
        system_on(Arc::new(m), triple)
    }

    #[test]
    fn composed_matrices_exactly_symmetric() {
        for triple in [Triple::A, Triple::B] {
            let raw = square_system(2, 0, triple);
            assert_eq!(raw.a.max_asymmetry(), 0.0);
            assert_eq!(raw.b.max_asymmetry(), 0.0);
            let sys = apply_dirichlet(raw);
            assert_eq!(sys.a.max_asymmetry(), 0.0);
            assert_eq!(sys.b.max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn stiffness_annihilates_constants_in_s_equation() {
        let sys = square_system(2, 0, Triple::B);
        let off = sys.offsets;
        let mut x = vec![0.0; off.total];
        x[0..sys.scalar_space.dof_count].fill(1.0);
        let ax = sys.a.matvec(&x);
        for r in off.w..off.w + sys.scalar_space.dof_count {
            assert!(ax[r].abs() < 1e-12, "s-equation row {r} = {}", ax[r]);
        }
    }

    #[test]
    fn rot_of_gradient_vanishes() {
        for triple in [Triple::A, Triple::B] {
            let sys = square_system(2, 0, triple);
            // φ = ∇g with g quadratic is linear, hence represented exactly in P2
            let gx = sys.scalar_space.interpolate(|x, y| 2.0 * x + y); // ∂g/∂x, g = x² + xy
            let gy = sys.scalar_space.interpolate(|x, _| x);
            let mut rot = vec![0.0; sys.pressure_space.dof_count];
            for (r, val) in sys.d_y.matvec(&gx).into_iter().enumerate() {
                rot[r] -= val;
            }
            for (r, val) in sys.d_x.matvec(&gy).into_iter().enumerate() {
                rot[r] += val;
            }
            for (r, v) in rot.iter().enumerate() {
                assert!(v.abs() < 1e-13, "(rot ∇g, q_{r}) = {v}");
            }
        }
    }

    #[test]
    fn mass_row_sums_give_domain_area() {
        let sys = square_system(2, 1, Triple::A);
        let ones = vec![1.0; sys.scalar_space.dof_count];
        let total: f64 = sys.m_s.matvec(&ones).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rhs_zero_and_constant_and_linear() {
        let sys = square_system(2, 1, Triple::B);
        let zero = assemble_source_rhs(&sys, SourceData::Analytic(&|_, _| 0.0)).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));

        let one = assemble_source_rhs(&sys, SourceData::Analytic(&|_, _| 1.0)).unwrap();
        assert!((one.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let fx = sys.scalar_space.interpolate(|x, _| x);
        let linear = assemble_source_rhs(&sys, SourceData::Coefficients(&fx)).unwrap();
        assert!((linear.iter().sum::<f64>() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rhs_dimension_mismatch_rejected() {
        let sys = square_system(1, 0, Triple::A);
        assert!(assemble_source_rhs(&sys, SourceData::Coefficients(&[1.0])).is_err());
    }

    #[test]
    fn mesh_mismatch_rejected() {
        let m1 = Arc::new(make_unit_square_mesh(1).unwrap());
        let m2 = Arc::new(make_unit_square_mesh(2).unwrap());
        let s = build_space(m1, SpaceKind::P2, Constraint::Dirichlet).unwrap();
        let p = build_space(m2, SpaceKind::P1, Constraint::ZeroMean).unwrap();
        assert!(assemble_mixed(&s, &s, &p, &s).is_err());
    }

    #[test]
    fn elimination_zeroes_constrained_rows() {
        let sys = apply_dirichlet(square_system(1, 0, Triple::A));
        for (i, &c) in sys.constrained_global.iter().enumerate() {
            if c {
                let row: Vec<_> = sys.a.row(i).collect();
                assert_eq!(row, vec![(i, 1.0)]);
            }
        }
        // every vertex of the 2-triangle square lies on the boundary,
        // so every u vertex dof is eliminated
        let nv = sys.scalar_space.mesh.vertices.len();
        for v in 0..nv {
            assert!(sys.constrained_global[v]);
        }
    }

    #[test]
    fn b_form_is_positive_semidefinite() {
        let sys = apply_dirichlet(square_system(2, 0, Triple::B));
        let n = sys.offsets.total;
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for _ in 0..100 {
            let x: Vec<f64> = (0..n).map(|_| next()).collect();
            let q = sys.b.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            assert!(q >= -1e-12, "xᵀBx = {q}");
        }
    }

    #[test]
    fn reference_triangle_p2_stiffness_matches_exact_integration() {
        let mesh = Arc::new(
            crate::mesh::Triangulation::from_vertices_triangles(
                vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                vec![[0, 1, 2]],
            )
            .unwrap(),
        );
        let s = build_space(mesh, SpaceKind::P2, Constraint::None).unwrap();
        // assemble K on the single reference triangle via the quadrature path
        let rule = QuadratureRule::degree4();
        let geom = triangle_geometry(&s.mesh, 0).unwrap();
        let mut k_q = [[0.0; 6]; 6];
        for (pt, &wq) in rule.points.iter().zip(&rule.weights) {
            let sg = basis_gradients(SpaceKind::P2, pt, &geom.grad);
            for i in 0..6 {
                for j in 0..6 {
                    k_q[i][j] += 2.0 * geom.area * wq * (sg[i][0] * sg[j][0] + sg[i][1] * sg[j][1]);
                }
            }
        }
        let k_exact = exact_reference_p2_stiffness();
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    (k_q[i][j] - k_exact[i][j]).abs() < 1e-14,
                    "K[{i}][{j}]: {} vs {}",
                    k_q[i][j],
                    k_exact[i][j]
                );
            }
        }
    }

    /// Independent oracle: integrate the products of the P2 basis gradients
    /// over the reference triangle with exact monomial integrals
    /// ∫ x^m y^n = m! n! / (m + n + 2)!.
    fn exact_reference_p2_stiffness() -> [[f64; 6]; 6] {
        // gradient components as [c, cx, cy] meaning c + cx·x + cy·y
        type Lin = [f64; 3];
        let grads: [[Lin; 2]; 6] = [
            [[-3.0, 4.0, 4.0], [-3.0, 4.0, 4.0]],   // v0: (4λ0−1)(−1,−1)
            [[-1.0, 4.0, 0.0], [0.0, 0.0, 0.0]],    // v1: (4x−1)(1,0)
            [[0.0, 0.0, 0.0], [-1.0, 0.0, 4.0]],    // v2: (4y−1)(0,1)
            [[4.0, -8.0, -4.0], [0.0, -4.0, 0.0]],  // e01: 4(x∇λ0+λ0∇λ1)
            [[0.0, 0.0, 4.0], [0.0, 4.0, 0.0]],     // e12: 4(y∇λ1+x∇λ2)
            [[0.0, 0.0, -4.0], [4.0, -4.0, -8.0]],  // e02: 4(y∇λ0+λ0∇λ2)
        ];
        let fact = |n: u32| -> f64 { (1..=n).map(|k| k as f64).product() };
        let mono = |m: u32, n: u32| fact(m) * fact(n) / fact(m + n + 2);
        let int_product = |a: &Lin, b: &Lin| {
            let mut s = 0.0;
            let terms_a = [(a[0], 0u32, 0u32), (a[1], 1, 0), (a[2], 0, 1)];
            let terms_b = [(b[0], 0u32, 0u32), (b[1], 1, 0), (b[2], 0, 1)];
            for (ca, ma, na) in terms_a {
                for (cb, mb, nb) in terms_b {
                    s += ca * cb * mono(ma + mb, na + nb);
                }
            }
            s
        };
        let mut k = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                k[i][j] = int_product(&grads[i][0], &grads[j][0])
                    + int_product(&grads[i][1], &grads[j][1]);
            }
        }
        k
    }
}
