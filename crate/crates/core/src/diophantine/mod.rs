//! Diophantine structure of torus points, in exact arithmetic.
//!
//! - [`is_irrational`]: exhaustive `(A, N)`-irrationality scan.
//! - [`complete_unimodular`]: integer charts straightening `{q'·x = 0}`.
//! - [`decompose_theta`]: splits `θ` into smooth, torsion and irrational parts.

mod decompose;
mod irrationality;
mod lattice;

pub use decompose::{
    decompose_theta, decompose_theta_from, smooth_scale, verify_decomposition,
    verify_decomposition_with, DescentStep, ThetaDecomposition,
};
pub use irrationality::{
    is_irrational, is_irrational_u64, is_irrational_with, scan_size, Irrationality,
    IrrationalityRecord,
};
pub use lattice::{bezout_vector, complete_unimodular, IntMatrix, SubtorusChart};
