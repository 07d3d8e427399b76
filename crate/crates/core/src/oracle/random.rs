//! Random instances for property checks.

use rand::Rng;

use crate::netcore::{ComplexFrequency, EdgeParams, FiniteNetwork};

fn random_params<R: Rng>(rng: &mut R) -> EdgeParams {
    loop {
        let mut c = [0.0f64; 3];
        for v in &mut c {
            if rng.random_bool(0.7) {
                *v = rng.random_range(0.05..3.0);
            }
        }
        if let Ok(p) = EdgeParams::new(c[0], c[1], c[2]) {
            return p;
        }
    }
}

/// Connected network on 2 to `max_vertices` vertices: a random spanning tree
/// plus a few extra edges, each with random nonnegative `L, R, D`.
pub fn random_network<R: Rng>(rng: &mut R, max_vertices: usize) -> FiniteNetwork {
    let n = rng.random_range(2..=max_vertices.max(2));
    let mut edges = Vec::new();
    let mut used = std::collections::BTreeSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        used.insert((u, v));
        edges.push((u, v, random_params(rng)));
    }
    let extra = rng.random_range(0..=n);
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u != v && used.insert((u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v), random_params(rng)));
        }
    }
    FiniteNetwork::new(n, edges).expect("random network is valid")
}

/// Frequency with real part in `re` and imaginary part in `[-im, im]`.
pub fn random_frequency<R: Rng>(
    rng: &mut R,
    re: std::ops::RangeInclusive<f64>,
    im: f64,
) -> ComplexFrequency {
    ComplexFrequency::from_parts(rng.random_range(re), rng.random_range(-im..=im))
        .expect("positive real part")
}
