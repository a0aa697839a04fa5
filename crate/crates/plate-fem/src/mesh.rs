//! Triangulations of the unit square and the L-shape domain, with nested
//! uniform (red) refinement.
//!
//! Vertex identity across levels is decided purely by index bookkeeping:
//! level-ℓ vertices occupy the leading indices of level ℓ+1, and each coarse
//! edge records the index of its midpoint vertex in the refined mesh. No
//! floating-point comparison is ever used to match nodes.

use std::collections::BTreeSet;
use std::io::Write;

use crate::{FemError, Result};

/// A conforming triangulation with refinement bookkeeping.
#[derive(Debug, Clone)]
pub struct Triangulation {
    /// Vertex coordinates.
    pub vertices: Vec<[f64; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// All edges as canonical `(min, max)` vertex pairs, sorted ascending.
    pub edges: Vec<(usize, usize)>,
    /// Edges lying on ∂Ω (adjacent to exactly one triangle).
    pub boundary_edges: Vec<(usize, usize)>,
    /// Per-vertex flag: does the vertex lie on ∂Ω?
    pub boundary_vertex: Vec<bool>,
    /// Refinement depth, 0 for an initial mesh.
    pub level: usize,
    /// For `level > 0`: parent triangle index at the previous level.
    pub parent_triangle: Vec<usize>,
    /// For `level > 0`: midpoint vertex index per *coarse* edge index.
    pub parent_edge_midpoint: Vec<usize>,
    /// Longest edge length.
    pub mesh_size: f64,
}

/// Signed area and the constant barycentric gradients of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct TriangleGeometry {
    pub area: f64,
    /// `grad[i]` is ∇λᵢ of the barycentric coordinate of local vertex `i`.
    pub grad: [[f64; 2]; 3],
}

impl Triangulation {
    /// Build a level-0 triangulation from explicit vertices and triangles.
    pub fn from_vertices_triangles(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        Self::from_cells(vertices, triangles)
    }

    fn from_cells(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mut mesh = Triangulation {
            vertices,
            triangles,
            edges: Vec::new(),
            boundary_edges: Vec::new(),
            boundary_vertex: Vec::new(),
            level: 0,
            parent_triangle: Vec::new(),
            parent_edge_midpoint: Vec::new(),
            mesh_size: 0.0,
        };
        mesh.rebuild_topology()?;
        Ok(mesh)
    }

    /// Recompute edges, boundary tags and the mesh size from the triangle list.
    fn rebuild_topology(&mut self) -> Result<()> {
        let mut edge_set = BTreeSet::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edge_set.insert((a.min(b), a.max(b)));
            }
        }
        self.edges = edge_set.into_iter().collect();
        let mut counts = vec![0usize; self.edges.len()];
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                counts[self.edge_index(a, b).unwrap()] += 1;
            }
        }
        self.boundary_edges = self
            .edges
            .iter()
            .zip(&counts)
            .filter(|(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        if counts.iter().any(|&c| c > 2) {
            return Err(FemError::InvalidArgument(
                "non-conforming mesh: edge shared by more than two triangles".into(),
            ));
        }
        self.boundary_vertex = vec![false; self.vertices.len()];
        for &(a, b) in &self.boundary_edges {
            self.boundary_vertex[a] = true;
            self.boundary_vertex[b] = true;
        }
        self.mesh_size = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max);
        for t in 0..self.triangles.len() {
            triangle_geometry(self, t)?;
        }
        Ok(())
    }

    /// Index of the canonical edge `(min, max)` in `self.edges`.
    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok()
    }

    /// Coordinates of an edge midpoint.
    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let (a, b) = self.edges[e];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]
    }

    /// Sum of all triangle areas.
    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| triangle_geometry(self, t).unwrap().area)
            .sum()
    }

    /// Plain-text dump: `V T`, then `V` lines `x y`, then `T` lines `i j k`.
    pub fn dump_text<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{} {}", self.vertices.len(), self.triangles.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        for t in &self.triangles {
            writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

/// Diagonal triangulation of the unit square with `n0` subdivisions per side.
///
/// Every cell is split along its bottom-left/top-right diagonal, so `n0 = 4`
/// reproduces the initial mesh scale h₀ of the convergence studies.
pub fn make_unit_square_mesh(n0: usize) -> Result<Triangulation> {
    if n0 == 0 {
        return Err(FemError::InvalidArgument(
            "unit square mesh needs at least one subdivision per side".into(),
        ));
    }
    grid_mesh(n0, |_, _| true)
}

/// Triangulation of the L-shape `[0,1]² \ [0,½]×[½,1]`.
///
/// `n0` is the number of subdivisions per unit length and must be even so the
/// reentrant corner `(½, ½)` is a mesh vertex.
pub fn make_lshape_mesh(n0: usize) -> Result<Triangulation> {
    if n0 == 0 || n0 % 2 != 0 {
        return Err(FemError::InvalidArgument(format!(
            "L-shape mesh needs an even subdivision count, got {n0}"
        )));
    }
    let half = n0 / 2;
    grid_mesh(n0, |i, j| !(i < half && j >= half))
}

/// Build a diagonal-split grid mesh keeping the cells selected by `keep`.
fn grid_mesh(n0: usize, keep: impl Fn(usize, usize) -> bool) -> Result<Triangulation> {
    let np = n0 + 1;
    let grid_index = |i: usize, j: usize| j * np + i;
    let mut used = vec![false; np * np];
    for j in 0..n0 {
        for i in 0..n0 {
            if keep(i, j) {
                for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    used[grid_index(a, b)] = true;
                }
            }
        }
    }
    let mut renumber = vec![usize::MAX; np * np];
    let mut vertices = Vec::new();
    let h = 1.0 / n0 as f64;
    for j in 0..np {
        for i in 0..np {
            if used[grid_index(i, j)] {
                renumber[grid_index(i, j)] = vertices.len();
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..n0 {
        for i in 0..n0 {
            if keep(i, j) {
                let a = renumber[grid_index(i, j)];
                let b = renumber[grid_index(i + 1, j)];
                let c = renumber[grid_index(i + 1, j + 1)];
                let d = renumber[grid_index(i, j + 1)];
                // diagonal a—c, oriented counterclockwise
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    Triangulation::from_vertices_triangles(vertices, triangles)
}

/// Red refinement: each triangle is split into four via its edge midpoints.
///
/// The input vertices keep their indices; midpoints are appended in canonical
/// edge order, so nested levels share vertex numbering by construction.
pub fn refine_uniform(mesh: &Triangulation) -> Result<Triangulation> {
    let n_old = mesh.vertices.len();
    let mut vertices = mesh.vertices.clone();
    vertices.extend((0..mesh.edges.len()).map(|e| mesh.edge_midpoint(e)));

    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    let mut parents = Vec::with_capacity(4 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [v0, v1, v2] = *tri;
        let m01 = n_old + mesh.edge_index(v0, v1).unwrap();
        let m12 = n_old + mesh.edge_index(v1, v2).unwrap();
        let m02 = n_old + mesh.edge_index(v0, v2).unwrap();
        triangles.push([v0, m01, m02]);
        triangles.push([m01, v1, m12]);
        triangles.push([m02, m12, v2]);
        triangles.push([m01, m12, m02]);
        parents.extend([t; 4]);
    }

    let mut fine = Triangulation::from_vertices_triangles(vertices, triangles)?;
    fine.level = mesh.level + 1;
    fine.parent_triangle = parents;
    fine.parent_edge_midpoint = (0..mesh.edges.len()).map(|e| n_old + e).collect();
    Ok(fine)
}

/// Signed area and barycentric gradients of triangle `t`.
pub fn triangle_geometry(mesh: &Triangulation, t: usize) -> Result<TriangleGeometry> {
    let [a, b, c] = mesh.triangles[t];
    let (p0, p1, p2) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
    let two_a = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if two_a <= f64::EPSILON * mesh.mesh_size.max(1.0).powi(2) {
        return Err(FemError::NumericDegeneracy(format!(
            "triangle {t} has signed area {:.3e}",
            0.5 * two_a
        )));
    }
    let grad = [
        [(p1[1] - p2[1]) / two_a, (p2[0] - p1[0]) / two_a],
        [(p2[1] - p0[1]) / two_a, (p0[0] - p2[0]) / two_a],
        [(p0[1] - p1[1]) / two_a, (p1[0] - p0[0]) / two_a],
    ];
    Ok(TriangleGeometry {
        area: 0.5 * two_a,
        grad,
    })
}
