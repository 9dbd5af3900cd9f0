//! Certified abelian (U²) arithmetic regularity on intervals `[N]`.
//!
//! The crate decomposes a function `f: [N] -> [0,1]` as
//! `f = f_str + f_sml + f_unf` and emits a certificate recording every
//! measured quantity: the structure witness `F(θn)` for `f_str`, the `L²`
//! size of `f_sml` and the `U²` size of `f_unf`. Asymptotic constants are
//! never assumed; the certificate is re-checked from scratch by
//! [`regularity::verify_certificate`].
//!
//! Module map:
//!
//! - [`fourier`]: Fourier analysis on `Z/MZ`, `U²` and `L²` norms.
//! - [`witness`]: expression trees `F: T^d -> R` with Lipschitz bounds.
//! - [`inverse`]: large Fourier coefficients and correlating level sets.
//! - [`factors`]: partitions of `[N]`, conditional expectation, energy increment.
//! - [`regularity`]: the full regularity decomposition and its verifier.
//! - [`torus`], [`diophantine`]: exact torus arithmetic and the
//!   smooth/rational/irrational splitting of frequencies.
//! - [`counting`]: equidistribution averages against Haar integrals.
//! - [`irrational`]: the structured form `F(n/N, n mod q, θn)`.
//!
//! Interchangeable strategies (DFT backends, `U²` evaluators, growth
//! families, synthetic generators) live behind traits and are looked up by
//! name through [`registry::Registry`].

pub mod config;
pub mod counting;
pub mod diophantine;
pub mod error;
pub mod factors;
pub mod fourier;
pub mod growth;
pub mod inverse;
pub mod irrational;
pub mod json;
pub mod registry;
pub mod report;
pub mod regularity;
pub mod synth;
pub mod torus;
pub mod witness;

pub use error::{Error, Result};
