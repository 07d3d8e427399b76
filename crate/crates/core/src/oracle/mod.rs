//! Brute-force reference computations, independent of the solvers.
//!
//! Everything here is deliberately naive: walks are enumerated one by one,
//! resistor networks are reduced in exact rationals, and matrices are
//! multiplied and diagonalised without library help.

pub mod charpoly;
pub mod fixtures;
pub mod montecarlo;
pub mod random;
pub mod reduce;
pub mod walks;

pub use charpoly::{charpoly, charpoly_eigenvalues};
pub use montecarlo::{monte_carlo_absorption, McStats};
pub use random::{random_frequency, random_network};
pub use reduce::{reduce_network, series_parallel_reduce, Circuit};
pub use walks::{first_visit_weight_sum, matrix_power_entry, transition_rows, walk_weight_sum};
