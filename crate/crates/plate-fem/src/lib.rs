//! Mixed finite elements for the clamped-plate (biharmonic) eigenvalue problem.
//!
//! The fourth-order problem Δ²u = λu with u = ∂u/∂n = 0 is rewritten as a
//! four-field saddle-point system in (u, φ, p, w) that is stable on
//! H¹₀ × (H¹₀)² × L²₀ × H¹₀ and therefore discretizable with plain Lagrange
//! elements on nested triangulations. The crate provides
//!
//! * [`mesh`] — the unit-square and L-shape domains with nested red refinement,
//! * [`spaces`] — P0/P1/P2 Lagrange spaces and exact nodal prolongations,
//! * [`assembly`] — the symmetric block matrices of the mixed forms,
//! * [`linsolve`] — sparse direct solves, monolithic or via the
//!   Poisson/Stokes/Poisson decomposition of the source problem,
//! * [`eigensolve`] — shift-invert subspace iteration and a dense fallback
//!   for the generalized pencil A x = λ B x,
//! * [`multilevel`] — the N-level correction scheme that reaches fine-mesh
//!   accuracy with coarse-mesh eigensolves,
//! * [`study`] — the convergence-study harness behind the `plate-eig` CLI.
//!
//! Element loops and multi-vector solves run on rayon when the default
//! `parallel` feature is enabled; without it every code path is sequential.

pub mod assembly;
pub mod eigensolve;
pub mod error;
pub mod linsolve;
pub mod mesh;
pub mod multilevel;
pub mod quadrature;
pub mod spaces;
pub mod study;

pub use error::FemError;

/// Convenience result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, FemError>;

#[cfg(feature = "parallel")]
pub(crate) use rayon::prelude::*;

/// Map over a slice, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T: Sync, U: Send, F: Fn(&T) -> U + Sync + Send>(
    items: &[T],
    f: F,
) -> Vec<U> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, U, F: Fn(&T) -> U>(items: &[T], f: F) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Map over an index range, in parallel when the `parallel` feature is enabled.
#[cfg(feature = "parallel")]
pub(crate) fn map_range<U: Send, F: Fn(usize) -> U + Sync + Send>(n: usize, f: F) -> Vec<U> {
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_range<U, F: Fn(usize) -> U>(n: usize, f: F) -> Vec<U> {
    (0..n).map(f).collect()
}
