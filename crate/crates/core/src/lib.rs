//! Exact laboratory for GL(N)-invariant composite spin chains.
//!
//! The crate builds inhomogeneous fundamental-representation chains as dense
//! operators, solves their (twisted) nested Bethe equations, binds the roots
//! to transfer-matrix eigenvectors, and checks form-factor identities of the
//! partial zero modes against direct matrix elements.
//!
//! Layers, bottom-up:
//!
//! - [`algebra`]: the rational functions `f`, `g`, vacuum ratios, the
//!   eigenvalue `tau` and the logarithmic Bethe residuals with their Jacobian.
//! - [`hilbert`]: the `N^M` product basis, weight sectors and dense operators.
//! - [`model`]: L-operators, monodromy matrices, zero modes, transfer matrices.
//! - [`bethe`]: multistart damped Newton and twist derivatives of the roots.
//! - [`spectral`]: sector diagonalization and root/eigenvector matching.
//! - [`formfactor`]: matrix elements and the verification records.

pub mod algebra;
pub mod bethe;
pub mod formfactor;
pub mod hilbert;
pub mod model;
pub mod spectral;

pub use num_complex::Complex64 as C64;
