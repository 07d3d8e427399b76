//! Small reference networks.

use crate::netcore::{EdgeParams, FiniteNetwork};

/// Four-cycle 0-1-2-3 with chord 0-2; admittances `1/s, s, 1/s, s` around the
/// cycle and `s` on the chord.
pub fn diamond() -> FiniteNetwork {
    let inv = EdgeParams::admittance_inv_s();
    let s = EdgeParams::admittance_s();
    FiniteNetwork::new(
        4,
        [(0, 1, inv), (1, 2, s), (2, 3, inv), (3, 0, s), (0, 2, s)],
    )
    .expect("fixture is valid")
}
