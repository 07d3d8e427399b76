//! Green kernels, effective admittance and transience for networks whose
//! edges carry complex admittances `s / (L s^2 + R s + D)`.
//!
//! The crate is organised bottom-up:
//!
//! - [`netcore`]: edge parameters, frequencies, finite networks and the
//!   complex and stochastic transition operators.
//! - [`finsolve`]: Dirichlet problems, Green matrices, effective admittance,
//!   restricted spectral radii and certified power series on finite networks.
//! - [`exhaust`]: infinite networks given by lazy generators, ball
//!   exhaustion, transience classification and infinite Green kernels.
//! - [`tree`]: ends, boundary arcs, Martin kernels and boundary
//!   distributions of harmonic functions on trees.
//! - [`freegrp`]: Cayley graphs of free groups and the convolution norm.
//! - [`oracle`]: brute-force validators used to cross-check everything else.

pub mod error;
pub mod exhaust;
pub mod finsolve;
pub mod freegrp;
pub mod linalg;
pub mod netcore;
pub mod oracle;
pub mod tol;
pub mod tree;

pub use error::{Error, Result};
pub use netcore::{
    build_operator, comparison_constants, edge_admittance, AdmittanceOperator, ComparisonConstants,
    ComplexFrequency, EdgeParams, FiniteNetwork, OperatorKind, C64,
};
