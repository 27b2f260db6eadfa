//! Two-level Full Approximation Scheme (FAS) for the nonlinear
//! diffusion-reaction problem `-div(k(u) grad u) + u = f` with homogeneous
//! Neumann conditions on the unit square, discretized with P1 elements.
//!
//! The coarse nonlinear operator can be the exact Galerkin operator
//! `P^T F(P .)` or an assembly of small per-subdomain neural networks trained
//! to reproduce the local coarse delta-maps `G_T(u, g) = F_T(u + g) - F_T(u)`.
//!
//! Module map:
//! - [`mesh`]: structured two-level triangulation, subdomains, transfer operators
//! - [`fem`]: fine operator, Jacobian, Galerkin coarse maps, manufactured data
//! - [`linsolve`]: CSR matrices and unrestarted GMRES
//! - [`sampling`]: Sobol sequence and box/ball samplers
//! - [`neural`]: MLP, backprop, Adam, training loop
//! - [`surrogate`]: datasets, per-subdomain training, global assembly
//! - [`fas`]: inexact Newton smoother and the two-level cycle
//! - [`cli`]: configuration files, model persistence, experiment drivers

pub mod cli;
pub mod error;
pub mod fas;
pub mod fem;
pub mod linsolve;
pub mod mesh;
pub mod neural;
pub mod sampling;
pub mod surrogate;

pub use error::{Error, Result};

/// Number of coarse dofs per subdomain (corners of one coarse square).
pub const LOCAL_COARSE_DOFS: usize = 4;
