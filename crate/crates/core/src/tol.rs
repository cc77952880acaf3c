//! Numerical tolerances and solver defaults used across the crate.
//!
//! Every threshold that changes a numerical outcome lives here so that
//! tests, the CLI and the experiment harness agree on one set of values.

/// Relative asymmetry accepted by [`crate::numkit::SymMatrix::new`].
pub const SYMMETRY_REL: f64 = 1e-12;

/// Off-diagonal Frobenius mass (relative to the full norm) at which the
/// cyclic Jacobi sweep stops.
pub const JACOBI_OFFDIAG_REL: f64 = 1e-14;
/// Sweep cap for cyclic Jacobi.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Relative change of the Rayleigh quotient that stops power iteration.
pub const POWER_ITER_REL: f64 = 1e-10;

/// Eigenvalues at or below `PSD_SINGULAR_REL * max|lambda|` are treated as
/// zero when a negative matrix power is requested.
pub const PSD_SINGULAR_REL: f64 = 1e-12;

/// Rounding allowance for the inverse-series inequalities, relative to the
/// right-hand side scale `|u|_inf / (1 - rho)`.
pub const NEUMANN_SLACK_REL: f64 = 1e-12;

/// Unit-diagonal tolerance for inverse-series inputs.
pub const UNIT_DIAG_ABS: f64 = 1e-12;

/// Finite-difference base step; the actual step is `FD_STEP * (1 + |x|_inf)`.
pub const FD_STEP: f64 = 1e-5;

/// Default gradient sup-norm tolerance of both convex solvers.
pub const SOLVER_TOL: f64 = 1e-10;
/// Tolerance used when a joint minimizer serves as a reference point.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Newton iteration cap.
pub const NEWTON_MAX_ITER: usize = 200;
/// Coordinate-descent sweep cap.
pub const COORD_MAX_SWEEPS: usize = 10_000;
/// Armijo sufficient-decrease constant.
pub const ARMIJO: f64 = 1e-4;
/// Maximum number of step halvings in the Newton line search.
pub const MAX_HALVINGS: usize = 60;
/// Initial half-width multiplier of the 1-D bracket: `(1 + |x|) * 64`.
pub const BRACKET_INIT: f64 = 64.0;
/// Maximum number of bracket doublings before a 1-D problem is declared
/// unbounded.
pub const BRACKET_MAX_DOUBLINGS: usize = 60;

/// Grid resolution for scalar suprema of third derivatives.
pub const GRID_RESOLUTION: f64 = 1e-3;
/// Largest grid size; wider intervals fall back to a per-term envelope.
pub const GRID_MAX_POINTS: usize = 200_001;
/// Random directions used by the Monte Carlo l2 constant estimates.
pub const MC_DIRECTIONS: usize = 256;

/// Error norms at or below this floor are treated as already converged by
/// the rate estimator.
pub const RATE_FLOOR: f64 = 1e-12;
/// Default burn-in of the rate estimator.
pub const RATE_BURN_IN: usize = 1;

/// Default mean-shift penalty strength.
pub const DEFAULT_GSQ: f64 = 1.0;
