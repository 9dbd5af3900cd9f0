//! Numerical constants and pipeline settings.
//!
//! Every tolerance and grid size used by the pipeline is defined here.

use std::sync::Arc;

use crate::fourier::{self, DftBackend, U2Evaluator};
use crate::Result;

/// Absolute tolerance for norm identities (Parseval, spectral vs direct `U²`).
pub const NORM_TOL: f64 = 1e-9;

/// Tolerance for identities that only involve a handful of roundings.
pub const IDENTITY_TOL: f64 = 1e-12;

/// Relative slack when comparing a measured `U²` norm against a bound.
pub const U2_BOUND_REL_TOL: f64 = 1e-9;

/// Absolute floor for the same comparison: the assembled `f_unf` carries
/// up to a few ulps of rounding, and `‖g‖_U² ≤ ‖g‖_∞`.
pub const U2_ABS_TOL: f64 = 1.0 / (1u64 << 50) as f64;

/// `u2 ≤ bound` up to the tolerances above.
pub fn u2_within(u2: f64, bound: f64) -> bool {
    u2 <= bound * (1.0 + U2_BOUND_REL_TOL) + U2_ABS_TOL
}

/// Number of thresholds `t` scanned in `(0,1)` when building level sets.
pub const THRESHOLD_GRID: usize = 1024;

/// Radii `2^-1 .. 2^-MAXIMAL_RADII` used by the maximal function.
pub const MAXIMAL_RADII: i32 = 12;

/// Value reported by the maximal function when it diverges.
pub const MAXIMAL_CAP: f64 = 4096.0;

/// Ramp half-width limits for level-set witnesses.
pub const RAMP_MIN: f64 = 1.0 / 4096.0;
pub const RAMP_MAX: f64 = 0.25;

/// Targets `M` (error `1/M`) for which ramp witnesses are built.
pub const WITNESS_LADDER: [f64; 7] = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0];

/// Gain floor is `delta^4 / GAIN_FLOOR_DIVISOR`.
pub const GAIN_FLOOR_DIVISOR: f64 = 1024.0;

/// Maximum number of integer vectors visited by an irrationality scan.
pub const ENUMERATION_BUDGET: u64 = 20_000_000;

/// Inflation constant `c` in `F'(M) = F(c M^2)`.
pub const GROWTH_INFLATION: f64 = 16.0;

/// Verification grid points per torus dimension.
pub const TORUS_GRID: usize = 64;

/// Verification grid points on `[0,1]`.
pub const INTERVAL_GRID: usize = 128;

/// Largest trigonometric degree tried when truncating Fourier expansions.
pub const FEJER_MAX_DEGREE: usize = 31;

/// Runtime-selectable strategies and budgets for the regularization pipeline.
#[derive(Clone, Debug)]
pub struct Settings {
    pub dft: Arc<dyn DftBackend>,
    pub u2: Arc<dyn U2Evaluator>,
    pub enumeration_budget: u64,
    /// Upper bound on energy-increment steps per weak regularization;
    /// `None` means `N`, which always suffices since every step splits a cell.
    pub max_steps: Option<usize>,
}

impl Settings {
    pub fn from_names(dft: &str, u2: &str) -> Result<Self> {
        Ok(Settings {
            dft: fourier::dft_backends().get(dft)?,
            u2: fourier::u2_evaluators().get(u2)?,
            enumeration_budget: ENUMERATION_BUDGET,
            max_steps: None,
        })
    }
}

impl Default for Settings {
    fn default() -> Self {
        Settings::from_names("fft", "spectral").expect("built-in strategies are registered")
    }
}
