//! Monte Carlo estimates of first-visit probabilities and visit counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finsolve::BoundarySpec;
use crate::netcore::{FiniteNetwork, OperatorKind};

/// Sample statistics of walks started at `x` and stopped on the boundary.
#[derive(Debug, Clone, Copy)]
pub struct McStats {
    pub walks: u64,
    /// Fraction of walks that visit the source.
    pub hit: f64,
    pub hit_stderr: f64,
    /// Mean number of visits to the source.
    pub visits: f64,
    pub visits_stderr: f64,
}

const CHUNK: u64 = 4096;

/// Runs `walks` stochastic walks from `x` until absorption in the boundary.
/// Deterministic for a given seed regardless of thread count.
pub fn monte_carlo_absorption(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    kind: OperatorKind,
    x: usize,
    walks: u64,
    seed: u64,
) -> Result<McStats> {
    if !kind.is_stochastic() {
        return Err(Error::InvalidArgument(
            "Monte Carlo needs a stochastic operator".into(),
        ));
    }
    if spec.boundary().is_empty() {
        return Err(Error::InvalidBoundary(
            "walks need a boundary to stop on".into(),
        ));
    }
    if x >= net.vertex_count() || walks == 0 {
        return Err(Error::InvalidArgument(
            "bad start vertex or walk count".into(),
        ));
    }
    let n = net.vertex_count();
    // cumulative transition probabilities per vertex
    let mut cum: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for v in 0..n {
        let row: Vec<(usize, f64)> = net
            .neighbors(v)
            .map(|(y, p)| (y, kind.weight(p).re))
            .collect();
        let total: f64 = row.iter().map(|r| r.1).sum();
        let mut acc = 0.0;
        for (y, w) in row {
            acc += w / total;
            cum[v].push((y, acc));
        }
    }
    let a = spec.source();
    let stop: Vec<bool> = (0..n).map(|v| spec.boundary().contains(&v)).collect();
    let chunks = walks.div_ceil(CHUNK);
    let sums: (f64, f64, f64) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let count = CHUNK.min(walks - c * CHUNK);
            let (mut hits, mut vs, mut vs2) = (0.0, 0.0, 0.0);
            for _ in 0..count {
                let mut at = x;
                let mut visits = 0u64;
                while !stop[at] {
                    if at == a {
                        visits += 1;
                    }
                    let u: f64 = rng.random();
                    let row = &cum[at];
                    at = row
                        .iter()
                        .find(|(_, c)| u < *c)
                        .unwrap_or(row.last().expect("no isolated vertices"))
                        .0;
                }
                if visits > 0 {
                    hits += 1.0;
                }
                let v = visits as f64;
                vs += v;
                vs2 += v * v;
            }
            (hits, vs, vs2)
        })
        .reduce(|| (0.0, 0.0, 0.0), |p, q| (p.0 + q.0, p.1 + q.1, p.2 + q.2));
    let m = walks as f64;
    let hit = sums.0 / m;
    let visits = sums.1 / m;
    let var = (sums.2 / m - visits * visits).max(0.0);
    Ok(McStats {
        walks,
        hit,
        hit_stderr: (hit * (1.0 - hit) / m).sqrt(),
        visits,
        visits_stderr: (var / m).sqrt(),
    })
}
