//! Numerical tolerances shared by the solvers and their self-checks.
//!
//! All comparisons are relative: `|a - b| <= tol * max(1, |b|)` unless a
//! function documents otherwise.

/// Row sums of every transition operator.
pub const ROW_SUM: f64 = 1e-12;

/// Default tolerance for complex equality between two computations of the
/// same quantity from small dense solves.
pub const COMPLEX_EQ: f64 = 1e-10;

/// Agreement of the two Dirichlet solution formulas.
pub const DIRICHLET_AGREEMENT: f64 = 1e-10;

/// Agreement of the three effective admittance formulas and of the
/// diagonal Green identity.
pub const ADMITTANCE_AGREEMENT: f64 = 1e-9;

/// Residual of `(I - P) G = I`.
pub const GREEN_RESIDUAL: f64 = 1e-10;

/// Partial-sum tail bound at which a power series is certified.
pub const SERIES_TAIL: f64 = 1e-12;

/// Term magnitude treated as negligible by the series stopping rule.
pub const SERIES_TERM: f64 = 1e-15;

/// Number of consecutive negligible terms required by the stopping rule.
pub const SERIES_QUIET_TERMS: usize = 10;

/// Identities evaluated on limits obtained by exhaustion.
pub const EXHAUSTION_IDENTITY: f64 = 1e-6;

/// Harmonicity and additivity checks on tree truncations.
pub const TREE_HARMONIC: f64 = 1e-8;

/// Relative distance `|a - b| / max(1, |b|)`.
pub fn rel_err(a: num_complex::Complex64, b: num_complex::Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}
