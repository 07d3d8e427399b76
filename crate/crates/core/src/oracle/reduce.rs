//! Series/parallel reduction of resistor networks in exact rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::netcore::FiniteNetwork;

/// A two-terminal resistor circuit.
#[derive(Debug, Clone)]
pub enum Circuit {
    Resistor(BigRational),
    Series(Vec<Circuit>),
    Parallel(Vec<Circuit>),
}

impl Circuit {
    pub fn ohms(r: i64) -> Circuit {
        Circuit::Resistor(BigRational::from_integer(BigInt::from(r)))
    }
}

/// Resistance of a circuit description.
pub fn series_parallel_reduce(c: &Circuit) -> Result<BigRational> {
    match c {
        Circuit::Resistor(r) => {
            if *r <= BigRational::zero() {
                return Err(Error::InvalidParams("resistances must be positive".into()));
            }
            Ok(r.clone())
        }
        Circuit::Series(parts) => {
            if parts.is_empty() {
                return Err(Error::InvalidArgument("empty series block".into()));
            }
            parts.iter().try_fold(BigRational::zero(), |acc, p| {
                Ok(acc + series_parallel_reduce(p)?)
            })
        }
        Circuit::Parallel(parts) => {
            if parts.is_empty() {
                return Err(Error::InvalidArgument("empty parallel block".into()));
            }
            let g = parts.iter().try_fold(BigRational::zero(), |acc, p| {
                Ok::<_, Error>(acc + series_parallel_reduce(p)?.recip())
            })?;
            Ok(g.recip())
        }
    }
}

fn exact(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidParams(format!("resistance {x} is not finite")))
}

/// Conductance between `source` and the set `grounded` (merged into one
/// terminal) of a network of pure resistors, by repeated series, parallel
/// and dangling-edge elimination. Networks that do not reduce, such as a
/// bridge, are rejected.
pub fn reduce_network(
    net: &FiniteNetwork,
    source: usize,
    grounded: &[usize],
) -> Result<BigRational> {
    let n = net.vertex_count();
    if source >= n || grounded.is_empty() || grounded.iter().any(|&g| g >= n || g == source) {
        return Err(Error::InvalidBoundary(
            "need a source and a disjoint grounded set".into(),
        ));
    }
    let sink = grounded[0];
    let node = |v: usize| if grounded.contains(&v) { sink } else { v };
    // multigraph as (u, v, resistance) with u < v
    let mut edges: Vec<(usize, usize, BigRational)> = Vec::new();
    for e in net.edges() {
        let p = e.params;
        if p.l() != 0.0 || p.d() != 0.0 || p.r() <= 0.0 {
            return Err(Error::InvalidParams("only pure resistors reduce".into()));
        }
        let (u, v) = (node(e.u), node(e.v));
        if u != v {
            edges.push((u.min(v), u.max(v), exact(p.r())?));
        }
    }
    loop {
        // parallel
        let mut merged: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for (u, v, r) in edges.drain(..) {
            let g = r.recip();
            *merged.entry((u, v)).or_insert_with(BigRational::zero) += g;
        }
        edges = merged
            .into_iter()
            .map(|((u, v), g)| (u, v, g.recip()))
            .collect();
        let terminal = |v: usize| v == source || v == sink;
        let mut degree: BTreeMap<usize, usize> = BTreeMap::new();
        for (u, v, _) in &edges {
            *degree.entry(*u).or_default() += 1;
            *degree.entry(*v).or_default() += 1;
        }
        if edges.len() == 1 && terminal(edges[0].0) && terminal(edges[0].1) {
            return Ok(edges[0].2.recip());
        }
        if !degree.contains_key(&source) || !degree.contains_key(&sink) {
            return Ok(BigRational::zero());
        }
        // dangling
        if let Some((&v, _)) = degree.iter().find(|(v, d)| **d == 1 && !terminal(**v)) {
            edges.retain(|(a, b, _)| *a != v && *b != v);
            continue;
        }
        // series
        if let Some((&v, _)) = degree.iter().find(|(v, d)| **d == 2 && !terminal(**v)) {
            let (pair, rest): (Vec<_>, Vec<_>) =
                edges.drain(..).partition(|(a, b, _)| *a == v || *b == v);
            edges = rest;
            let other = |e: &(usize, usize, BigRational)| if e.0 == v { e.1 } else { e.0 };
            let (x, y) = (other(&pair[0]), other(&pair[1]));
            let r = pair[0].2.clone() + pair[1].2.clone();
            if x != y {
                edges.push((x.min(y), x.max(y), r));
            }
            continue;
        }
        return Err(Error::InvalidNetwork(
            "network is not series-parallel between the terminals".into(),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::EdgeParams;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn two_in_series() {
        let c = Circuit::Series(vec![Circuit::ohms(1), Circuit::ohms(1)]);
        assert_eq!(series_parallel_reduce(&c).unwrap(), q(2, 1));
        let p = Circuit::Parallel(vec![Circuit::ohms(1), Circuit::ohms(1)]);
        assert_eq!(series_parallel_reduce(&p).unwrap(), q(1, 2));
    }

    #[test]
    fn doubled_chain() {
        // path -n..n, both ends grounded, source in the middle
        for n in 1..8usize {
            let r = EdgeParams::unit_resistor();
            let net = FiniteNetwork::new(2 * n + 1, (0..2 * n).map(|i| (i, i + 1, r))).unwrap();
            assert_eq!(
                reduce_network(&net, n, &[0, 2 * n]).unwrap(),
                q(2, n as i64)
            );
        }
    }

    #[test]
    fn bridge_is_rejected() {
        let r = EdgeParams::unit_resistor();
        let net =
            FiniteNetwork::new(4, [(0, 1, r), (0, 2, r), (1, 2, r), (1, 3, r), (2, 3, r)]).unwrap();
        assert!(reduce_network(&net, 0, &[3]).is_err());
    }
}
