//! Finite networks with complex edge admittances and the transition
//! operators built from them.
//!
//! An edge carrying inductance `L`, resistance `R` and capacitance
//! parameter `D` has admittance `s / (L s^2 + R s + D)` at the complex
//! frequency `s`. Normalising the admittances around each vertex gives the
//! complex operator `P_s`; replacing them by real parts, moduli, or by their
//! value at a real frequency gives the three stochastic comparison operators.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

/// Inductance, resistance and capacitance parameter of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams {
    l: f64,
    r: f64,
    d: f64,
}

impl EdgeParams {
    pub fn new(l: f64, r: f64, d: f64) -> Result<Self> {
        for (name, v) in [("L", l), ("R", r), ("D", d)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} = {v} must be finite and >= 0"
                )));
            }
        }
        if l + r + d <= 0.0 {
            return Err(Error::InvalidParams("L + R + D must be positive".into()));
        }
        Ok(EdgeParams { l, r, d })
    }

    /// `R = 1`: admittance identically 1.
    pub const fn unit_resistor() -> Self {
        EdgeParams {
            l: 0.0,
            r: 1.0,
            d: 0.0,
        }
    }

    /// `D = 1`: admittance `s`.
    pub const fn admittance_s() -> Self {
        EdgeParams {
            l: 0.0,
            r: 0.0,
            d: 1.0,
        }
    }

    /// `L = 1`: admittance `1/s`.
    pub const fn admittance_inv_s() -> Self {
        EdgeParams {
            l: 1.0,
            r: 0.0,
            d: 0.0,
        }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `s / (L s^2 + R s + D)`.
    pub fn admittance(&self, s: ComplexFrequency) -> C64 {
        let s = s.value();
        s / (self.l * s * s + self.r * s + self.d)
    }
}

/// A point of the open right half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency(C64);

impl ComplexFrequency {
    pub fn new(s: C64) -> Result<Self> {
        if !(s.re.is_finite() && s.im.is_finite()) || s.re <= 0.0 {
            return Err(Error::InvalidFrequency { re: s.re, im: s.im });
        }
        Ok(ComplexFrequency(s))
    }

    pub fn from_parts(re: f64, im: f64) -> Result<Self> {
        Self::new(C64::new(re, im))
    }

    pub fn real(t: f64) -> Result<Self> {
        Self::new(C64::new(t, 0.0))
    }

    /// `e^{i alpha}` for `|alpha| < pi/2`.
    pub fn unit(alpha: f64) -> Result<Self> {
        Self::new(C64::from_polar(1.0, alpha))
    }

    pub fn value(&self) -> C64 {
        self.0
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }

    /// `|s|` as a real frequency.
    pub fn modulus(&self) -> ComplexFrequency {
        ComplexFrequency(C64::new(self.0.norm(), 0.0))
    }
}

impl fmt::Display for ComplexFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}i", self.0.re, self.0.im)
    }
}

/// Admittance of a single edge at `s`.
pub fn edge_admittance(params: EdgeParams, s: ComplexFrequency) -> C64 {
    params.admittance(s)
}

/// Which transition operator to build from the edge admittances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    /// `p_s(x,y) = rho_s(x,y) / rho_s(x)`.
    Complex(ComplexFrequency),
    /// The stochastic operator `P_t` at a real frequency `t > 0`.
    AtT(f64),
    /// Real parts of the admittances.
    Tilde(ComplexFrequency),
    /// Moduli of the admittances.
    Check(ComplexFrequency),
}

impl OperatorKind {
    pub fn at_t(t: f64) -> Result<Self> {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
        }
        Ok(OperatorKind::AtT(t))
    }

    /// Edge weight whose row normalisation gives this operator.
    pub fn weight(&self, params: EdgeParams) -> C64 {
        match *self {
            OperatorKind::Complex(s) => params.admittance(s),
            OperatorKind::AtT(t) => C64::new(
                params.admittance(ComplexFrequency(C64::new(t, 0.0))).re,
                0.0,
            ),
            OperatorKind::Tilde(s) => C64::new(params.admittance(s).re, 0.0),
            OperatorKind::Check(s) => C64::new(params.admittance(s).norm(), 0.0),
        }
    }

    /// True when all weights are real and positive.
    pub fn is_stochastic(&self) -> bool {
        match *self {
            OperatorKind::Complex(s) => s.is_real(),
            _ => true,
        }
    }

    /// The three stochastic comparison kinds associated with `s`, plus `P_1`.
    pub fn comparison_kinds(s: ComplexFrequency) -> [OperatorKind; 4] {
        [
            OperatorKind::AtT(1.0),
            OperatorKind::AtT(s.value().norm()),
            OperatorKind::Tilde(s),
            OperatorKind::Check(s),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            OperatorKind::Complex(s) => format!("complex(s={s})"),
            OperatorKind::AtT(t) => format!("t={t}"),
            OperatorKind::Tilde(s) => format!("tilde(s={s})"),
            OperatorKind::Check(s) => format!("check(s={s})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub params: EdgeParams,
}

/// A finite connected loopless network on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteNetwork {
    n: usize,
    edges: Vec<Edge>,
    // (neighbour, edge index), sorted by neighbour
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl FiniteNetwork {
    pub fn new(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, EdgeParams)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidNetwork("no vertices".into()));
        }
        let mut seen = BTreeSet::new();
        let mut list = Vec::new();
        for (u, v, params) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({u},{v}) out of range 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidNetwork(format!("loop at vertex {u}")));
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::InvalidNetwork(format!("duplicate edge ({a},{b})")));
            }
            list.push(Edge { u: a, v: b, params });
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, e) in list.iter().enumerate() {
            adjacency[e.u].push((e.v, i));
            adjacency[e.v].push((e.u, i));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        if let Some(x) = adjacency.iter().position(Vec::is_empty) {
            return Err(Error::InvalidNetwork(format!(
                "vertex {x} has no neighbours"
            )));
        }
        let net = FiniteNetwork {
            n,
            edges: list,
            adjacency,
        };
        if !net.is_connected() {
            return Err(Error::InvalidNetwork("network is disconnected".into()));
        }
        Ok(net)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &(y, _) in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|b| b)
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbours of `x` with the parameters of the connecting edge.
    pub fn neighbors(&self, x: usize) -> impl Iterator<Item = (usize, EdgeParams)> + '_ {
        self.adjacency[x]
            .iter()
            .map(move |&(y, e)| (y, self.edges[e].params))
    }

    pub fn degree(&self, x: usize) -> usize {
        self.adjacency[x].len()
    }

    pub fn edge_between(&self, x: usize, y: usize) -> Option<EdgeParams> {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .ok()
            .map(|i| self.edges[self.adjacency[x][i].1].params)
    }

    /// Per-vertex total weight `sum_y w(x,y)` for the given kind.
    pub fn row_mass(&self, kind: OperatorKind) -> Vec<C64> {
        (0..self.n)
            .map(|x| self.neighbors(x).map(|(_, p)| kind.weight(p)).sum())
            .collect()
    }
}

/// A row-normalised transition operator stored by sparse rows.
#[derive(Debug, Clone)]
pub struct AdmittanceOperator {
    kind: OperatorKind,
    rows: Vec<Vec<(usize, C64)>>,
    row_mass: Vec<C64>,
}

impl AdmittanceOperator {
    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, x: usize) -> &[(usize, C64)] {
        &self.rows[x]
    }

    /// `rho(x)`, the normalising weight of row `x`.
    pub fn row_mass(&self, x: usize) -> C64 {
        self.row_mass[x]
    }

    pub fn entry(&self, x: usize, y: usize) -> C64 {
        self.rows[x]
            .binary_search_by_key(&y, |&(z, _)| z)
            .map(|i| self.rows[x][i].1)
            .unwrap_or_default()
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                m[(x, y)] = p;
            }
        }
        m
    }

    /// The submatrix indexed by `set` (in the given order).
    pub fn restricted(&self, set: &[usize]) -> DMatrix<C64> {
        let mut pos = vec![usize::MAX; self.size()];
        for (i, &x) in set.iter().enumerate() {
            pos[x] = i;
        }
        let mut m = DMatrix::zeros(set.len(), set.len());
        for (i, &x) in set.iter().enumerate() {
            for &(y, p) in &self.rows[x] {
                if pos[y] != usize::MAX {
                    m[(i, pos[y])] = p;
                }
            }
        }
        m
    }

    /// Largest deviation of a row sum from 1.
    pub fn row_sum_defect(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|&(_, p)| p).sum::<C64>() - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Builds `P_s` or one of its stochastic comparison operators.
pub fn build_operator(net: &FiniteNetwork, kind: OperatorKind) -> Result<AdmittanceOperator> {
    if let OperatorKind::AtT(t) = kind {
        OperatorKind::at_t(t)?;
    }
    let row_mass = net.row_mass(kind);
    let rows: Vec<Vec<(usize, C64)>> = (0..net.vertex_count())
        .map(|x| {
            net.neighbors(x)
                .map(|(y, p)| (y, kind.weight(p) / row_mass[x]))
                .collect()
        })
        .collect();
    let op = AdmittanceOperator {
        kind,
        rows,
        row_mass,
    };
    let defect = op.row_sum_defect();
    if defect > tol::ROW_SUM {
        return Err(Error::consistency("row sums", defect, tol::ROW_SUM));
    }
    Ok(op)
}

/// The constants `r_{s,t}` and `r_s` bounding `|p_s|` entrywise by
/// `r_{s,t} p_t` and by `r_s` times the tilde or check operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonConstants {
    pub r_st: f64,
    pub r_s: f64,
}

pub fn comparison_constants(s: ComplexFrequency, t: f64) -> Result<ComparisonConstants> {
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    let abs = s.value().norm();
    let re = s.value().re;
    Ok(ComparisonConstants {
        r_st: (abs.powi(4) / (t * t)).max(t * t) / (re * re),
        r_s: abs / re,
    })
}

/// Domination constant `r` with `|p_s(x,y)| <= r p(x,y)` for the stochastic
/// comparison `kind` of `s`; `None` if `kind` is not a comparison kind.
pub fn domination_constant(s: ComplexFrequency, kind: OperatorKind) -> Option<f64> {
    match kind {
        OperatorKind::AtT(t) => comparison_constants(s, t).ok().map(|c| c.r_st),
        OperatorKind::Tilde(u) | OperatorKind::Check(u) if u == s => {
            Some(s.value().norm() / s.value().re)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::fixtures::diamond;
    use std::f64::consts::PI;

    fn close(a: C64, b: C64) -> bool {
        tol::rel_err(a, b) < 1e-12
    }

    #[test]
    fn unit_resistor_admittance_is_one() {
        let s = ComplexFrequency::from_parts(2.0, 3.0).unwrap();
        assert!(close(
            EdgeParams::unit_resistor().admittance(s),
            C64::new(1.0, 0.0)
        ));
    }

    #[test]
    fn capacitor_and_inductor_symbols() {
        let s = ComplexFrequency::from_parts(0.7, -1.3).unwrap();
        assert!(close(EdgeParams::admittance_s().admittance(s), s.value()));
        assert!(close(
            EdgeParams::admittance_inv_s().admittance(s),
            1.0 / s.value()
        ));
    }

    #[test]
    fn mixed_edge_matches_direct_evaluation() {
        let s = ComplexFrequency::from_parts(1.0, 1.0).unwrap();
        let rho = EdgeParams::new(1.0, 1.0, 1.0).unwrap().admittance(s);
        // (1+i)/((1+i)^2 + (1+i) + 1) = (1+i)/(2+3i) = (5 - i)/13
        assert!(close(rho, C64::new(5.0 / 13.0, -1.0 / 13.0)));
        assert!(rho.re > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ComplexFrequency::from_parts(0.0, 1.0).is_err());
        assert!(ComplexFrequency::from_parts(-1.0, 0.0).is_err());
        assert!(EdgeParams::new(0.0, 0.0, 0.0).is_err());
        assert!(EdgeParams::new(-1.0, 1.0, 0.0).is_err());
        assert!(OperatorKind::at_t(0.0).is_err());
        assert!(FiniteNetwork::new(2, [(0, 0, EdgeParams::unit_resistor())]).is_err());
        assert!(FiniteNetwork::new(
            4,
            [
                (0, 1, EdgeParams::unit_resistor()),
                (2, 3, EdgeParams::unit_resistor())
            ]
        )
        .is_err());
        assert!(FiniteNetwork::new(
            2,
            [
                (0, 1, EdgeParams::unit_resistor()),
                (1, 0, EdgeParams::unit_resistor())
            ]
        )
        .is_err());
    }

    #[test]
    fn example_37_operator_row() {
        let net = diamond();
        let s = ComplexFrequency::unit(0.4).unwrap();
        let op = build_operator(&net, OperatorKind::Complex(s)).unwrap();
        let s2 = s.value() * s.value();
        let den = 2.0 * s2 + 1.0;
        assert!(op.entry(0, 0).norm() == 0.0);
        assert!(close(op.entry(0, 1), 1.0 / den));
        assert!(close(op.entry(0, 2), s2 / den));
        assert!(close(op.entry(0, 3), s2 / den));
        assert!(close(op.entry(1, 0), 1.0 / (s2 + 1.0)));
        assert!(op.row_sum_defect() < 1e-12);
    }

    #[test]
    fn example_37_stochastic_at_one() {
        let net = diamond();
        let op = build_operator(&net, OperatorKind::AtT(1.0)).unwrap();
        for y in 1..4 {
            assert!(close(op.entry(0, y), C64::new(1.0 / 3.0, 0.0)));
        }
        assert!(close(op.entry(1, 0), C64::new(0.5, 0.0)));
    }

    #[test]
    fn kinds_coincide_at_real_frequency() {
        let net = diamond();
        let s = ComplexFrequency::real(1.7).unwrap();
        let ops: Vec<_> = [
            OperatorKind::Complex(s),
            OperatorKind::AtT(1.7),
            OperatorKind::Tilde(s),
            OperatorKind::Check(s),
        ]
        .into_iter()
        .map(|k| build_operator(&net, k).unwrap().to_dense())
        .collect();
        for m in &ops[1..] {
            assert!((m - &ops[0]).camax() < 1e-12);
        }
    }

    #[test]
    fn comparison_constants_on_unit_circle() {
        for alpha in [-1.2, -0.3, 0.0, 0.5, 1.4] {
            let c = comparison_constants(ComplexFrequency::unit(alpha).unwrap(), 1.0).unwrap();
            let cos = f64::cos(alpha);
            assert!((c.r_st - 1.0 / (cos * cos)).abs() < 1e-12 * c.r_st);
            assert!((c.r_s - 1.0 / cos).abs() < 1e-12 * c.r_s);
        }
        let c = comparison_constants(ComplexFrequency::real(2.5).unwrap(), 2.5).unwrap();
        assert!((c.r_st - 1.0).abs() < 1e-14 && (c.r_s - 1.0).abs() < 1e-14);
        let c = comparison_constants(ComplexFrequency::from_parts(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert!((c.r_st - 4.0).abs() < 1e-12);
        assert!((c.r_s - 2f64.sqrt()).abs() < 1e-12);
        assert!(comparison_constants(ComplexFrequency::unit(PI / 4.0).unwrap(), 0.0).is_err());
    }
}
