//! Scalar Lagrange spaces P0, P1, P2 on a triangulation, and the exact nodal
//! prolongation between nested refinement levels.
//!
//! Dof numbering is deterministic: vertex dofs in mesh order, then edge
//! midpoint dofs in canonical edge order (edges sorted by their vertex pair).
//! The vector-valued field of the mixed system reuses the scalar space twice,
//! blocked by component.

use std::sync::Arc;

use crate::linsolve::SparseMatrix;
use crate::mesh::{triangle_geometry, Triangulation};
use crate::{FemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    P0,
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// No constraint metadata.
    None,
    /// Homogeneous Dirichlet: dofs on ∂Ω are constrained.
    Dirichlet,
    /// The space approximates L²₀; the mean-zero condition is enforced by a
    /// scalar multiplier during assembly, not by eliminating a basis function.
    ZeroMean,
}

/// A scalar Lagrange finite element space.
#[derive(Debug, Clone)]
pub struct FESpace {
    pub mesh: Arc<Triangulation>,
    pub kind: SpaceKind,
    pub constraint: Constraint,
    pub dof_count: usize,
    /// Per-dof constrained flag (nonempty only for Dirichlet spaces).
    pub constrained: Vec<bool>,
    dof_map: Vec<usize>,
}

impl SpaceKind {
    pub fn dofs_per_triangle(self) -> usize {
        match self {
            SpaceKind::P0 => 1,
            SpaceKind::P1 => 3,
            SpaceKind::P2 => 6,
        }
    }
}

/// Local basis values at a barycentric point. At most 6 entries are used.
pub(crate) fn basis_values(kind: SpaceKind, l: &[f64; 3]) -> [f64; 6] {
    match kind {
        SpaceKind::P0 => [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        SpaceKind::P1 => [l[0], l[1], l[2], 0.0, 0.0, 0.0],
        SpaceKind::P2 => [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[0] * l[2],
        ],
    }
}

/// Local basis gradients at a barycentric point, given the (constant)
/// barycentric gradients of the triangle.
pub(crate) fn basis_gradients(kind: SpaceKind, l: &[f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    match kind {
        SpaceKind::P0 => {}
        SpaceKind::P1 => {
            out[..3].copy_from_slice(g);
        }
        SpaceKind::P2 => {
            for i in 0..3 {
                let c = 4.0 * l[i] - 1.0;
                out[i] = [c * g[i][0], c * g[i][1]];
            }
            for (slot, (i, j)) in [(0usize, 1usize), (1, 2), (0, 2)].into_iter().enumerate() {
                out[3 + slot] = [
                    4.0 * (l[j] * g[i][0] + l[i] * g[j][0]),
                    4.0 * (l[j] * g[i][1] + l[i] * g[j][1]),
                ];
            }
        }
    }
    out
}

/// Build a P0/P1/P2 space with the requested constraint metadata.
pub fn build_space(mesh: Arc<Triangulation>, kind: SpaceKind, constraint: Constraint) -> Result<FESpace> {
    if constraint == Constraint::ZeroMean && kind == SpaceKind::P2 {
        return Err(FemError::UnsupportedCombination(
            "zero-mean constraint is only supported for P0 and P1 pressure spaces".into(),
        ));
    }
    let n_v = mesh.vertices.len();
    let n_e = mesh.edges.len();
    let n_t = mesh.triangles.len();
    let dof_count = match kind {
        SpaceKind::P0 => n_t,
        SpaceKind::P1 => n_v,
        SpaceKind::P2 => n_v + n_e,
    };
    let mut dof_map = Vec::with_capacity(n_t * kind.dofs_per_triangle());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        match kind {
            SpaceKind::P0 => dof_map.push(t),
            SpaceKind::P1 => dof_map.extend_from_slice(tri),
            SpaceKind::P2 => {
                dof_map.extend_from_slice(tri);
                for (a, b) in [(tri[0], tri[1]), (tri[1], tri[2]), (tri[0], tri[2])] {
                    dof_map.push(n_v + mesh.edge_index(a, b).unwrap());
                }
            }
        }
    }
    let mut constrained = vec![false; dof_count];
    if constraint == Constraint::Dirichlet {
        match kind {
            SpaceKind::P0 => {}
            SpaceKind::P1 => {
                for v in 0..n_v {
                    constrained[v] = mesh.boundary_vertex[v];
                }
            }
            SpaceKind::P2 => {
                for v in 0..n_v {
                    constrained[v] = mesh.boundary_vertex[v];
                }
                for &(a, b) in &mesh.boundary_edges {
                    constrained[n_v + mesh.edge_index(a, b).unwrap()] = true;
                }
            }
        }
    }
    Ok(FESpace {
        mesh,
        kind,
        constraint,
        dof_count,
        constrained,
        dof_map,
    })
}

impl FESpace {
    pub fn zero_mean(&self) -> bool {
        self.constraint == Constraint::ZeroMean
    }

    /// Global dofs of triangle `t`, in local order
    /// (vertices, then edges `(0,1)`, `(1,2)`, `(0,2)` for P2).
    pub fn triangle_dofs(&self, t: usize) -> &[usize] {
        let s = self.kind.dofs_per_triangle();
        &self.dof_map[t * s..(t + 1) * s]
    }

    /// Coordinates of the node carrying a dof (centroid for P0).
    pub fn node_position(&self, dof: usize) -> [f64; 2] {
        let n_v = self.mesh.vertices.len();
        match self.kind {
            SpaceKind::P0 => {
                let [a, b, c] = self.mesh.triangles[dof];
                let (p, q, r) = (
                    self.mesh.vertices[a],
                    self.mesh.vertices[b],
                    self.mesh.vertices[c],
                );
                [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
            }
            SpaceKind::P1 => self.mesh.vertices[dof],
            SpaceKind::P2 => {
                if dof < n_v {
                    self.mesh.vertices[dof]
                } else {
                    self.mesh.edge_midpoint(dof - n_v)
                }
            }
        }
    }

    /// Nodal interpolation of `f` (centroid sampling for P0).
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.dof_count)
            .map(|d| {
                let p = self.node_position(d);
                f(p[0], p[1])
            })
            .collect()
    }

    /// Barycentric coordinates of `point` in triangle `t`.
    fn barycentric(&self, t: usize, point: [f64; 2]) -> [f64; 3] {
        let g = triangle_geometry(&self.mesh, t).unwrap();
        let [a, _, _] = self.mesh.triangles[t];
        let p0 = self.mesh.vertices[a];
        let d = [point[0] - p0[0], point[1] - p0[1]];
        let l1 = g.grad[1][0] * d[0] + g.grad[1][1] * d[1];
        let l2 = g.grad[2][0] * d[0] + g.grad[2][1] * d[1];
        [1.0 - l1 - l2, l1, l2]
    }

    /// Evaluate the FE function with the given coefficients at a point,
    /// locating the containing triangle by scan.
    pub fn evaluate(&self, coeffs: &[f64], point: [f64; 2]) -> Result<f64> {
        if coeffs.len() != self.dof_count {
            return Err(FemError::DimensionMismatch(format!(
                "{} coefficients for a space of dimension {}",
                coeffs.len(),
                self.dof_count
            )));
        }
        const TOL: f64 = 1e-12;
        for t in 0..self.mesh.triangles.len() {
            let l = self.barycentric(t, point);
            if l.iter().all(|&x| x >= -TOL) {
                let vals = basis_values(self.kind, &l);
                return Ok(self
                    .triangle_dofs(t)
                    .iter()
                    .zip(vals.iter())
                    .map(|(&d, &v)| coeffs[d] * v)
                    .sum());
            }
        }
        Err(FemError::OutOfDomain(point[0], point[1]))
    }
}

/// Nodal interpolation operator from a coarse space onto the space on its
/// red-refined mesh. Exact for every represented function.
#[derive(Debug, Clone)]
pub struct Prolongation {
    /// fine dof × coarse dof interpolation matrix.
    pub matrix: SparseMatrix,
}

impl Prolongation {
    pub fn apply(&self, coarse: &[f64]) -> Vec<f64> {
        self.matrix.matvec(coarse)
    }
}

/// Parent-barycentric coordinates of the three corners of each red child.
const CHILD_CORNERS: [[[f64; 3]; 3]; 4] = [
    [[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5]],
    [[0.5, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.5, 0.5]],
    [[0.5, 0.0, 0.5], [0.0, 0.5, 0.5], [0.0, 0.0, 1.0]],
    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
];

/// Build the prolongation from `coarse` to `fine`.
///
/// `fine` must be the same kind and constraint on `refine_uniform` of the
/// coarse mesh.
pub fn build_prolongation(coarse: &FESpace, fine: &FESpace) -> Result<Prolongation> {
    if coarse.kind != fine.kind || coarse.constraint != fine.constraint {
        return Err(FemError::InvalidPair(
            "prolongation requires identical kind and constraint".into(),
        ));
    }
    let cm = &coarse.mesh;
    let fm = &fine.mesh;
    if fm.level != cm.level + 1
        || fm.parent_triangle.len() != fm.triangles.len()
        || fm.triangles.len() != 4 * cm.triangles.len()
        || fm.parent_edge_midpoint.len() != cm.edges.len()
    {
        return Err(FemError::InvalidPair(
            "fine mesh is not the uniform refinement of the coarse mesh".into(),
        ));
    }

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); fine.dof_count];
    let mut filled = vec![false; fine.dof_count];
    let mut fill = |dof: usize, entries: Vec<(usize, f64)>, filled: &mut Vec<bool>| {
        if !filled[dof] {
            rows[dof] = entries;
            filled[dof] = true;
        }
    };

    match coarse.kind {
        SpaceKind::P0 => {
            for (t, &p) in fm.parent_triangle.iter().enumerate() {
                fill(t, vec![(p, 1.0)], &mut filled);
            }
        }
        SpaceKind::P1 => {
            let n_cv = cm.vertices.len();
            for v in 0..n_cv {
                fill(v, vec![(v, 1.0)], &mut filled);
            }
            for (e, &mid) in fm.parent_edge_midpoint.iter().enumerate() {
                let (a, b) = cm.edges[e];
                fill(mid, vec![(a, 0.5), (b, 0.5)], &mut filled);
            }
        }
        SpaceKind::P2 => {
            let n_fv = fm.vertices.len();
            for (tf, &parent) in fm.parent_triangle.iter().enumerate() {
                let child = tf - 4 * parent;
                debug_assert!(child < 4);
                let corners = &CHILD_CORNERS[child];
                let parent_dofs = coarse.triangle_dofs(parent);
                let fine_dofs = fine.triangle_dofs(tf);
                // local fine nodes: corners, then edge midpoints (0,1),(1,2),(0,2)
                let mut node_bary = [[0.0; 3]; 6];
                node_bary[..3].copy_from_slice(corners);
                for (slot, (i, j)) in [(0usize, 1usize), (1, 2), (0, 2)].into_iter().enumerate() {
                    for d in 0..3 {
                        node_bary[3 + slot][d] = 0.5 * (corners[i][d] + corners[j][d]);
                    }
                }
                for (ln, &fdof) in fine_dofs.iter().enumerate() {
                    if filled[fdof] {
                        continue;
                    }
                    let vals = basis_values(SpaceKind::P2, &node_bary[ln]);
                    let entries: Vec<(usize, f64)> = parent_dofs
                        .iter()
                        .zip(vals.iter())
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(&d, &v)| (d, v))
                        .collect();
                    fill(fdof, entries, &mut filled);
                }
            }
            debug_assert!(n_fv <= fine.dof_count);
        }
    }
    debug_assert!(filled.iter().all(|&f| f));

    // For H¹₀ spaces the operator acts on the constrained subspace: weights a
    // free fine node would receive from boundary coarse dofs are dropped, so
    // constrained coarse dofs map only to constrained fine dofs.
    if coarse.constraint == Constraint::Dirichlet {
        for (r, row) in rows.iter_mut().enumerate() {
            if !fine.constrained[r] {
                row.retain(|&(c, _)| !coarse.constrained[c]);
            }
        }
    }

    let mut triplets = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            triplets.push((r, c, v));
        }
    }
    let matrix = SparseMatrix::from_triplets(fine.dof_count, coarse.dof_count, triplets);
    Ok(Prolongation { matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{make_unit_square_mesh, refine_uniform};
    use proptest::prelude::*;

    fn square(n0: usize) -> Arc<Triangulation> {
        Arc::new(make_unit_square_mesh(n0).unwrap())
    }

    fn refined(m: &Arc<Triangulation>) -> Arc<Triangulation> {
        Arc::new(refine_uniform(m).unwrap())
    }

    #[test]
    fn p1_two_triangle_dirichlet() {
        let s = build_space(square(1), SpaceKind::P1, Constraint::Dirichlet).unwrap();
        assert_eq!(s.dof_count, 4);
        assert!(s.constrained.iter().all(|&c| c));
    }

    #[test]
    fn p2_two_triangle_count() {
        let s = build_space(square(1), SpaceKind::P2, Constraint::None).unwrap();
        assert_eq!(s.dof_count, 9); // 4 vertices + 5 edges
    }

    #[test]
    fn p0_zero_mean_count() {
        let m = refined(&square(1)); // 8 triangles
        let s = build_space(m, SpaceKind::P0, Constraint::ZeroMean).unwrap();
        assert_eq!(s.dof_count, 8);
        assert!(s.zero_mean());
    }

    #[test]
    fn p2_zero_mean_rejected() {
        assert!(build_space(square(1), SpaceKind::P2, Constraint::ZeroMean).is_err());
    }

    #[test]
    fn deterministic_numbering() {
        let m = refined(&square(2));
        let a = build_space(m.clone(), SpaceKind::P2, Constraint::Dirichlet).unwrap();
        let b = build_space(m, SpaceKind::P2, Constraint::Dirichlet).unwrap();
        assert_eq!(a.dof_map, b.dof_map);
        assert_eq!(a.constrained, b.constrained);
    }

    #[test]
    fn p1_hat_prolongates_to_edge_averages() {
        let cm = square(1);
        let fm = refined(&cm);
        let c = build_space(cm, SpaceKind::P1, Constraint::None).unwrap();
        let f = build_space(fm.clone(), SpaceKind::P1, Constraint::None).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        let mut hat = vec![0.0; c.dof_count];
        hat[0] = 1.0;
        let fine = p.apply(&hat);
        for (v, &val) in fine.iter().enumerate() {
            let expect = c.evaluate(&hat, f.node_position(v)).unwrap();
            assert!((val - expect).abs() < 1e-14);
        }
        // midpoint rows average the edge endpoints
        for r in c.dof_count..f.dof_count {
            let row: Vec<_> = p.matrix.row(r).collect();
            assert!(row.len() <= 2);
            assert!(row.iter().all(|&(_, v)| v == 0.5));
        }
    }

    #[test]
    fn p0_children_inherit_parent() {
        let cm = square(2);
        let fm = refined(&cm);
        let c = build_space(cm, SpaceKind::P0, Constraint::ZeroMean).unwrap();
        let f = build_space(fm, SpaceKind::P0, Constraint::ZeroMean).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        for r in 0..p.matrix.nrows() {
            let row: Vec<_> = p.matrix.row(r).collect();
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].1, 1.0);
        }
        let coeffs: Vec<f64> = (0..c.dof_count).map(|i| i as f64).collect();
        let fine = p.apply(&coeffs);
        for (t, &v) in fine.iter().enumerate() {
            assert_eq!(v, coeffs[f.mesh.parent_triangle[t]]);
        }
        // mean is preserved exactly by construction
        let cmean: f64 = (0..c.dof_count)
            .map(|t| coeffs[t] * triangle_geometry(&c.mesh, t).unwrap().area)
            .sum();
        let fmean: f64 = (0..f.dof_count)
            .map(|t| fine[t] * triangle_geometry(&f.mesh, t).unwrap().area)
            .sum();
        assert!((cmean - fmean).abs() < 1e-13);
    }

    #[test]
    fn p2_prolongation_reproduces_quadratics() {
        let cm = square(2);
        let fm = refined(&cm);
        let c = build_space(cm, SpaceKind::P2, Constraint::None).unwrap();
        let f = build_space(fm, SpaceKind::P2, Constraint::None).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        let g = |x: f64, y: f64| x * x;
        let coarse = c.interpolate(g);
        let fine = p.apply(&coarse);
        let mut rng = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10 {
            let (x, y) = (next() * 0.98 + 0.01, next() * 0.98 + 0.01);
            let v = f.evaluate(&fine, [x, y]).unwrap();
            assert!((v - g(x, y)).abs() < 1e-13, "at ({x},{y}): {v}");
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        let cm = square(1);
        let fm = refined(&cm);
        let c = build_space(cm.clone(), SpaceKind::P1, Constraint::None).unwrap();
        let f = build_space(fm.clone(), SpaceKind::P2, Constraint::None).unwrap();
        assert!(build_prolongation(&c, &f).is_err());
        // not a parent/child pair
        let c2 = build_space(fm, SpaceKind::P1, Constraint::None).unwrap();
        let f2 = build_space(cm, SpaceKind::P1, Constraint::None).unwrap();
        assert!(build_prolongation(&c2, &f2).is_err());
    }

    #[test]
    fn constrained_coarse_dofs_map_to_constrained_fine_dofs() {
        let cm = square(2);
        let fm = refined(&cm);
        let c = build_space(cm, SpaceKind::P2, Constraint::Dirichlet).unwrap();
        let f = build_space(fm, SpaceKind::P2, Constraint::Dirichlet).unwrap();
        let p = build_prolongation(&c, &f).unwrap();
        for r in 0..p.matrix.nrows() {
            if !f.constrained[r] {
                for (cdof, _) in p.matrix.row(r) {
                    assert!(
                        !c.constrained[cdof],
                        "free fine dof {r} receives constrained coarse dof {cdof}"
                    );
                }
            }
        }
    }

    #[test]
    fn evaluate_p0_and_outside() {
        let m = square(2);
        let s = build_space(m, SpaceKind::P0, Constraint::None).unwrap();
        let coeffs: Vec<f64> = (0..s.dof_count).map(|i| i as f64 + 1.0).collect();
        let v = s.evaluate(&coeffs, [0.1, 0.05]).unwrap();
        assert!(coeffs.contains(&v));
        assert!(s.evaluate(&coeffs, [1.5, 0.5]).is_err());
    }

    #[test]
    fn p2_interpolant_of_xy_is_exact() {
        let s = build_space(refined(&square(2)), SpaceKind::P2, Constraint::None).unwrap();
        let coeffs = s.interpolate(|x, y| x * y);
        for (x, y) in [(0.3, 0.7), (0.11, 0.52), (0.87, 0.13)] {
            let v = s.evaluate(&coeffs, [x, y]).unwrap();
            assert!((v - x * y).abs() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.001f64..0.999, y in 0.001f64..0.999) {
            let m = square(2);
            for kind in [SpaceKind::P1, SpaceKind::P2] {
                let s = build_space(m.clone(), kind, Constraint::None).unwrap();
                let ones = vec![1.0; s.dof_count];
                let v = s.evaluate(&ones, [x, y]).unwrap();
                prop_assert!((v - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn prolongation_composes(seed in 0u64..1000) {
            let cm = square(1);
            let mm = refined(&cm);
            let fm = refined(&mm);
            let c = build_space(cm, SpaceKind::P2, Constraint::None).unwrap();
            let m = build_space(mm, SpaceKind::P2, Constraint::None).unwrap();
            let f = build_space(fm, SpaceKind::P2, Constraint::None).unwrap();
            let p_cm = build_prolongation(&c, &m).unwrap();
            let p_mf = build_prolongation(&m, &f).unwrap();
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let coeffs: Vec<f64> = (0..c.dof_count).map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            }).collect();
            let two_step = p_mf.apply(&p_cm.apply(&coeffs));
            // direct nodal interpolation of the coarse function on the fine space
            for dof in 0..f.dof_count {
                let pos = f.node_position(dof);
                let direct = c.evaluate(&coeffs, pos).unwrap();
                prop_assert!((two_step[dof] - direct).abs() < 1e-13);
            }
        }
    }
}
