//! Solvers on finite networks with a grounded boundary.
//!
//! Given a source `a` and a nonempty grounded set `B`, the interior is
//! `V \ B` and the reduced interior is `V \ (B + a)`. The Dirichlet problem
//! asks for `v` harmonic on the reduced interior with `v(a) = 1` and
//! `v = 0` on `B`.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricEnvelope};
use crate::netcore::{
    build_operator, domination_constant, AdmittanceOperator, ComplexFrequency, FiniteNetwork,
    OperatorKind, C64,
};
use crate::tol;

/// Systems with more unknowns than this go to the envelope solver.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    #[default]
    Auto,
    Dense,
    Sparse,
}

impl Backend {
    fn dense_for(self, n: usize) -> bool {
        match self {
            Backend::Auto => n <= DENSE_LIMIT,
            Backend::Dense => true,
            Backend::Sparse => false,
        }
    }
}

/// Source vertex and grounded set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySpec {
    source: usize,
    boundary: BTreeSet<usize>,
}

impl BoundarySpec {
    /// Validates `source` and `boundary` against a network with `n` vertices.
    /// An empty boundary is accepted here; finite solvers reject it.
    pub fn new(n: usize, source: usize, boundary: impl IntoIterator<Item = usize>) -> Result<Self> {
        let boundary: BTreeSet<usize> = boundary.into_iter().collect();
        if source >= n {
            return Err(Error::InvalidBoundary(format!(
                "source {source} out of range"
            )));
        }
        if let Some(&b) = boundary.iter().find(|&&b| b >= n) {
            return Err(Error::InvalidBoundary(format!(
                "boundary vertex {b} out of range"
            )));
        }
        if boundary.contains(&source) {
            return Err(Error::InvalidBoundary("source lies in the boundary".into()));
        }
        Ok(BoundarySpec { source, boundary })
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn boundary(&self) -> &BTreeSet<usize> {
        &self.boundary
    }

    /// Interior vertices in increasing order.
    pub fn interior(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|x| !self.boundary.contains(x)).collect()
    }

    /// Interior without the source.
    pub fn reduced_interior(&self, n: usize) -> Vec<usize> {
        (0..n)
            .filter(|&x| x != self.source && !self.boundary.contains(&x))
            .collect()
    }

    fn require_grounded(&self) -> Result<()> {
        if self.boundary.is_empty() {
            return Err(Error::InvalidBoundary(
                "finite networks need a nonempty grounded set".into(),
            ));
        }
        Ok(())
    }
}

/// Solves `(I - P_U) x = rhs` on the index set `free`.
pub(crate) fn solve_restricted(
    op: &AdmittanceOperator,
    free: &[usize],
    rhs: &[C64],
    backend: Backend,
) -> Result<Vec<C64>> {
    let m = free.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut pos = vec![usize::MAX; op.size()];
    for (i, &x) in free.iter().enumerate() {
        pos[x] = i;
    }
    if backend.dense_for(m) {
        let mut a = DMatrix::<C64>::identity(m, m);
        for (i, &x) in free.iter().enumerate() {
            for &(y, p) in op.row(x) {
                if pos[y] != usize::MAX {
                    a[(i, pos[y])] -= p;
                }
            }
        }
        let x = linalg::solve_dense(&a, &DVector::from_column_slice(rhs))?;
        Ok(x.iter().copied().collect())
    } else {
        // symmetric form: multiply row x by rho(x)
        let mut lower = vec![Vec::new(); m];
        let mut b = Vec::with_capacity(m);
        for (i, &x) in free.iter().enumerate() {
            let mass = op.row_mass(x);
            lower[i].push((i, mass));
            for &(y, p) in op.row(x) {
                let j = pos[y];
                if j != usize::MAX && j < i {
                    lower[i].push((j, -p * mass));
                }
            }
            b.push(rhs[i] * mass);
        }
        let env = SymmetricEnvelope::factor(&lower)?;
        Ok(env.solve(&b))
    }
}

/// Extends `fixed` harmonically: returns `v` on all vertices with
/// `v = fixed` on the fixed set and `P v = v` elsewhere.
pub fn harmonic_extension(
    op: &AdmittanceOperator,
    fixed: &BTreeMap<usize, C64>,
    backend: Backend,
) -> Result<Vec<C64>> {
    let n = op.size();
    if fixed.is_empty() {
        return Err(Error::InvalidBoundary("no boundary values given".into()));
    }
    let free: Vec<usize> = (0..n).filter(|x| !fixed.contains_key(x)).collect();
    let rhs: Vec<C64> = free
        .iter()
        .map(|&x| {
            op.row(x)
                .iter()
                .filter_map(|&(y, p)| fixed.get(&y).map(|&v| p * v))
                .sum()
        })
        .collect();
    let sol = solve_restricted(op, &free, &rhs, backend)?;
    let mut v = vec![C64::default(); n];
    for (&x, &val) in fixed {
        v[x] = val;
    }
    for (i, &x) in free.iter().enumerate() {
        v[x] = sol[i];
    }
    Ok(v)
}

/// Solution of the Dirichlet problem together with its self-checks.
#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub voltages: Vec<C64>,
    pub source: usize,
    pub boundary: Vec<usize>,
    /// `G_{V°}(a,a)` from the Green-column route.
    pub green_diagonal: C64,
    /// Largest relative disagreement between the two solution formulas.
    pub formula_agreement: f64,
    /// Largest `|Delta_P v|` on the reduced interior.
    pub harmonic_residual: f64,
}

/// Solves the Dirichlet problem both by the restricted linear solve and by
/// the Green column ratio `G(., a) / G(a, a)`, and checks that they agree.
pub fn solve_dirichlet(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    kind: OperatorKind,
) -> Result<DirichletSolution> {
    solve_dirichlet_with(net, spec, kind, Backend::Auto)
}

pub fn solve_dirichlet_with(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    kind: OperatorKind,
    backend: Backend,
) -> Result<DirichletSolution> {
    spec.require_grounded()?;
    let op = build_operator(net, kind)?;
    dirichlet_on_operator(&op, spec, backend)
}

pub(crate) fn dirichlet_on_operator(
    op: &AdmittanceOperator,
    spec: &BoundarySpec,
    backend: Backend,
) -> Result<DirichletSolution> {
    let n = op.size();
    let a = spec.source;
    let mut fixed: BTreeMap<usize, C64> =
        spec.boundary.iter().map(|&b| (b, C64::default())).collect();
    fixed.insert(a, C64::new(1.0, 0.0));
    let v = harmonic_extension(op, &fixed, backend)?;

    let interior = spec.interior(n);
    let mut rhs = vec![C64::default(); interior.len()];
    let ia = interior.binary_search(&a).expect("source is interior");
    rhs[ia] = C64::new(1.0, 0.0);
    let g = solve_restricted(op, &interior, &rhs, backend)?;
    let gaa = g[ia];
    if gaa.norm() == 0.0 {
        return Err(Error::Singular("normalising the Green column".into()));
    }
    let scale = v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut agreement: f64 = 0.0;
    for (i, &x) in interior.iter().enumerate() {
        agreement = agreement.max((v[x] - g[i] / gaa).norm() / scale);
    }
    if agreement > tol::DIRICHLET_AGREEMENT {
        return Err(Error::consistency(
            "Dirichlet solution formulas",
            agreement,
            tol::DIRICHLET_AGREEMENT,
        ));
    }
    let harmonic_residual = spec
        .reduced_interior(n)
        .into_iter()
        .map(|x| {
            op.row(x)
                .iter()
                .map(|&(y, p)| (v[y] - v[x]) * p)
                .sum::<C64>()
                .norm()
        })
        .fold(0.0, f64::max);
    Ok(DirichletSolution {
        voltages: v,
        source: a,
        boundary: spec.boundary.iter().copied().collect(),
        green_diagonal: gaa,
        formula_agreement: agreement,
        harmonic_residual,
    })
}

/// `(I - P_U)^{-1}` on an interior set `U`.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    pub indices: Vec<usize>,
    pub matrix: DMatrix<C64>,
    /// `max |(I - P_U) G - I|`.
    pub residual: f64,
}

impl GreenMatrix {
    pub fn get(&self, x: usize, y: usize) -> Option<C64> {
        let i = self.indices.binary_search(&x).ok()?;
        let j = self.indices.binary_search(&y).ok()?;
        Some(self.matrix[(i, j)])
    }
}

pub fn green_finite(
    net: &FiniteNetwork,
    interior: &[usize],
    kind: OperatorKind,
) -> Result<GreenMatrix> {
    let indices = validate_subset(net.vertex_count(), interior)?;
    let op = build_operator(net, kind)?;
    let m = indices.len();
    let a = DMatrix::<C64>::identity(m, m) - op.restricted(&indices);
    let g = linalg::invert_dense(&a)?;
    let residual = (&a * &g - DMatrix::<C64>::identity(m, m)).camax();
    if residual > tol::GREEN_RESIDUAL {
        return Err(Error::consistency(
            "(I - P) G = I",
            residual,
            tol::GREEN_RESIDUAL,
        ));
    }
    Ok(GreenMatrix {
        indices,
        matrix: g,
        residual,
    })
}

fn validate_subset(n: usize, set: &[usize]) -> Result<Vec<usize>> {
    let sorted: BTreeSet<usize> = set.iter().copied().collect();
    if sorted.is_empty() {
        return Err(Error::InvalidBoundary("interior must be nonempty".into()));
    }
    if sorted.len() >= n {
        return Err(Error::InvalidBoundary(
            "interior must be a proper subset".into(),
        ));
    }
    if let Some(&x) = sorted.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidBoundary(format!("vertex {x} out of range")));
    }
    Ok(sorted.into_iter().collect())
}

/// Effective admittance between the source and the grounded set, by all
/// three formulas.
#[derive(Debug, Clone)]
pub struct EffectiveAdmittance {
    pub value: C64,
    /// Current leaving the source.
    pub source_current: C64,
    /// Current entering the grounded set.
    pub grounded_current: C64,
    /// Half the weighted sum of squared voltage moduli differences.
    pub energy: C64,
    /// `rho(a) / G(a,a)`.
    pub from_green: C64,
    /// Largest pairwise relative disagreement of the three formulas.
    pub agreement: f64,
    /// Relative disagreement of `rho(a) / G(a,a)` with the value.
    pub green_identity_residual: f64,
    pub solution: DirichletSolution,
}

pub fn effective_admittance(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    kind: OperatorKind,
) -> Result<EffectiveAdmittance> {
    effective_admittance_with(net, spec, kind, Backend::Auto)
}

pub fn effective_admittance_with(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    kind: OperatorKind,
    backend: Backend,
) -> Result<EffectiveAdmittance> {
    spec.require_grounded()?;
    let sol = solve_dirichlet_with(net, spec, kind, backend)?;
    let a = spec.source;
    let v = &sol.voltages;
    let one = C64::new(1.0, 0.0);
    let source_current: C64 = net
        .neighbors(a)
        .map(|(x, p)| (one - v[x]) * kind.weight(p))
        .sum();
    let grounded_current: C64 = spec
        .boundary
        .iter()
        .flat_map(|&b| net.neighbors(b).map(|(y, p)| v[y] * kind.weight(p)))
        .sum();
    let energy: C64 = net
        .edges()
        .iter()
        .map(|e| (v[e.u] - v[e.v]).norm_sqr() * kind.weight(e.params))
        .sum();
    let rho_a: C64 = net.neighbors(a).map(|(_, p)| kind.weight(p)).sum();
    let from_green = rho_a / sol.green_diagonal;

    let agreement = [
        tol::rel_err(grounded_current, source_current),
        tol::rel_err(energy, source_current),
        tol::rel_err(energy, grounded_current),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if agreement > tol::ADMITTANCE_AGREEMENT {
        return Err(Error::consistency(
            "effective admittance formulas",
            agreement,
            tol::ADMITTANCE_AGREEMENT,
        ));
    }
    let green_identity_residual = tol::rel_err(from_green, source_current);
    if green_identity_residual > tol::ADMITTANCE_AGREEMENT {
        return Err(Error::consistency(
            "admittance = rho(a) / G(a,a)",
            green_identity_residual,
            tol::ADMITTANCE_AGREEMENT,
        ));
    }
    Ok(EffectiveAdmittance {
        value: source_current,
        source_current,
        grounded_current,
        energy,
        from_green,
        agreement,
        green_identity_residual,
        solution: sol,
    })
}

/// Largest-modulus eigenvalue of a restricted operator.
#[derive(Debug, Clone)]
pub struct SpectralRadius {
    pub radius: f64,
    /// An eigenvalue of maximal modulus; real and positive for stochastic kinds.
    pub witness: C64,
    pub eigenvalues: Vec<C64>,
}

pub fn restricted_spectral_radius(
    net: &FiniteNetwork,
    interior: &[usize],
    kind: OperatorKind,
) -> Result<SpectralRadius> {
    let indices = {
        let set: BTreeSet<usize> = interior.iter().copied().collect();
        if set.is_empty() {
            return Err(Error::InvalidBoundary("interior must be nonempty".into()));
        }
        if let Some(&x) = set.iter().find(|&&x| x >= net.vertex_count()) {
            return Err(Error::InvalidBoundary(format!("vertex {x} out of range")));
        }
        set.into_iter().collect::<Vec<_>>()
    };
    let op = build_operator(net, kind)?;
    spectral_radius_of(&op.restricted(&indices), kind.is_stochastic())
}

pub(crate) fn spectral_radius_of(m: &DMatrix<C64>, stochastic: bool) -> Result<SpectralRadius> {
    let eigenvalues = linalg::eigenvalues(m)?;
    let radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut witness = eigenvalues
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or_default();
    if stochastic && radius > 0.0 {
        // Perron-Frobenius: some eigenvalue of maximal modulus is real positive
        let slack = 1e-8 * radius.max(1.0);
        let perron = eigenvalues
            .iter()
            .copied()
            .filter(|z| z.re > 0.0 && (z.norm() - radius).abs() <= slack && z.im.abs() <= slack)
            .max_by(|a, b| a.re.total_cmp(&b.re));
        match perron {
            Some(p) => witness = C64::new(p.re, 0.0),
            None => return Err(Error::consistency("Perron eigenvalue", radius, slack)),
        }
        if radius >= 1.0 {
            return Err(Error::consistency(
                "substochastic spectral radius < 1",
                radius,
                1.0,
            ));
        }
    }
    Ok(SpectralRadius {
        radius,
        witness,
        eigenvalues,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesStatus {
    Converged,
    Diverged,
    Undecided,
}

/// One power series value with its convergence evidence.
#[derive(Debug, Clone, Copy)]
pub struct SeriesResult {
    pub value: C64,
    pub terms_used: usize,
    /// Value of the dominating nonnegative series, when one applies.
    pub domination_bound: Option<f64>,
    /// Bound on `|value - limit|` from the dominating series.
    pub tail_bound: Option<f64>,
    pub status: SeriesStatus,
}

impl SeriesResult {
    pub fn converged(&self) -> bool {
        self.status == SeriesStatus::Converged
    }
}

/// The stochastic comparison chosen to certify a series.
#[derive(Debug, Clone, Serialize)]
pub struct Domination {
    pub kind: String,
    /// Entrywise constant `r` with `|p_s| <= r p`.
    pub constant: f64,
    /// Spectral radius of the stochastic comparison on the reduced interior.
    pub stochastic_radius: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { max_terms: 200_000 }
    }
}

/// Series values for every interior vertex of `F(x, a | z)`.
#[derive(Debug, Clone)]
pub struct SeriesVector {
    pub vertices: Vec<usize>,
    pub values: Vec<SeriesResult>,
    /// Spectral radius of the complex operator on the reduced interior.
    pub complex_radius: f64,
    pub domination: Option<Domination>,
    pub status: SeriesStatus,
}

impl SeriesVector {
    pub fn get(&self, x: usize) -> Option<&SeriesResult> {
        self.vertices
            .iter()
            .position(|&y| y == x)
            .map(|i| &self.values[i])
    }
}

/// `G_{V^a}(x,y|z)`, `F_{V°}(x,a|z)` and `U(a,a|z)` evaluated by partial sums.
#[derive(Debug, Clone)]
pub struct SeriesKernels {
    pub green: SeriesResult,
    pub first_passage: SeriesResult,
    pub return_: SeriesResult,
    pub complex_radius: f64,
    pub domination: Option<Domination>,
}

struct SeriesSetup {
    reduced: Vec<usize>,
    pos: Vec<usize>,
    op: AdmittanceOperator,
    complex_radius: f64,
    // (kind, r, stochastic operator, its radius) for usable dominations
    dominations: Vec<(OperatorKind, f64, AdmittanceOperator, f64)>,
}

fn series_setup(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    s: ComplexFrequency,
    z: C64,
) -> Result<SeriesSetup> {
    spec.require_grounded()?;
    let n = net.vertex_count();
    let reduced = spec.reduced_interior(n);
    let mut pos = vec![usize::MAX; n];
    for (i, &x) in reduced.iter().enumerate() {
        pos[x] = i;
    }
    let op = build_operator(net, OperatorKind::Complex(s))?;
    let complex_radius = if reduced.is_empty() {
        0.0
    } else {
        spectral_radius_of(&op.restricted(&reduced), false)?.radius
    };
    let mut dominations = Vec::new();
    for kind in OperatorKind::comparison_kinds(s) {
        let r = domination_constant(s, kind).expect("comparison kind");
        let sop = build_operator(net, kind)?;
        let lam = if reduced.is_empty() {
            0.0
        } else {
            spectral_radius_of(&sop.restricted(&reduced), true)?.radius
        };
        if r * z.norm() * lam < 1.0 - 1e-12 {
            dominations.push((kind, r, sop, lam));
        }
    }
    Ok(SeriesSetup {
        reduced,
        pos,
        op,
        complex_radius,
        dominations,
    })
}

/// Partial sums of `sum_n (z P_U)^n start` for all components, with an
/// optional dominating nonnegative series `sum_n (w Q_U)^n dom_start`.
struct VectorSeries<'a> {
    setup: &'a SeriesSetup,
    z: C64,
    max_terms: usize,
}

struct VectorSum {
    values: Vec<C64>,
    tails: Option<Vec<f64>>,
    bounds: Option<Vec<f64>>,
    terms: usize,
    status: SeriesStatus,
    domination: Option<usize>,
}

impl VectorSeries<'_> {
    fn step(&self, op: &AdmittanceOperator, scale: C64, v: &[C64]) -> Vec<C64> {
        self.setup
            .reduced
            .iter()
            .map(|&x| {
                op.row(x)
                    .iter()
                    .filter(|&&(y, _)| self.setup.pos[y] != usize::MAX)
                    .map(|&(y, p)| p * v[self.setup.pos[y]])
                    .sum::<C64>()
                    * scale
            })
            .collect()
    }

    /// `start` and `dom_start(kind_index)` give the n = 0 terms.
    fn run(
        &self,
        start: Vec<C64>,
        dom_start: impl Fn(&AdmittanceOperator, f64) -> Vec<f64>,
    ) -> Result<VectorSum> {
        let setup = self.setup;
        let m = setup.reduced.len();
        if self.z.norm() * setup.complex_radius >= 1.0 {
            let mut values = start.clone();
            let mut term = start;
            let mut terms = 1;
            for _ in 1..self.max_terms.min(64) {
                term = self.step(&setup.op, self.z, &term);
                for i in 0..m {
                    values[i] += term[i];
                }
                terms += 1;
            }
            return Ok(VectorSum {
                values,
                tails: None,
                bounds: None,
                terms,
                status: SeriesStatus::Diverged,
                domination: None,
            });
        }
        // pick the domination with the smallest total bound
        let mut best: Option<(usize, Vec<f64>, Vec<f64>)> = None;
        for (k, (_, r, sop, _)) in setup.dominations.iter().enumerate() {
            let w = r * self.z.norm();
            let d0 = dom_start(sop, w);
            let rhs: Vec<C64> = d0.iter().map(|&d| C64::new(d, 0.0)).collect();
            let total = solve_scaled(sop, &setup.reduced, &setup.pos, w, &rhs)?;
            let total: Vec<f64> = total.iter().map(|z| z.re.max(0.0)).collect();
            let size = total.iter().copied().fold(0.0, f64::max);
            if best
                .as_ref()
                .is_none_or(|(_, _, t)| size < t.iter().copied().fold(0.0, f64::max))
            {
                best = Some((k, d0, total));
            }
        }
        let mut values = start.clone();
        let mut term = start;
        let (mut dterm, mut dsum, dtotal, dkind) = match &best {
            Some((k, d0, total)) => (d0.clone(), d0.clone(), Some(total.clone()), Some(*k)),
            None => (Vec::new(), Vec::new(), None, None),
        };
        let mut quiet = 0;
        let mut terms = 1;
        let mut status = SeriesStatus::Undecided;
        let mut tails = None;
        loop {
            if let Some(total) = &dtotal {
                let tail: Vec<f64> = total
                    .iter()
                    .zip(&dsum)
                    .map(|(t, s)| (t - s).max(0.0))
                    .collect();
                let size = total.iter().copied().fold(1.0, f64::max);
                let worst = tail.iter().copied().fold(0.0, f64::max);
                tails = Some(tail);
                if worst < tol::SERIES_TAIL * size {
                    status = SeriesStatus::Converged;
                    break;
                }
            }
            if terms >= self.max_terms {
                break;
            }
            term = self.step(&setup.op, self.z, &term);
            terms += 1;
            let mut largest: f64 = 0.0;
            for i in 0..m {
                values[i] += term[i];
                largest = largest.max(term[i].norm() / values[i].norm().max(1.0));
            }
            if let Some(k) = dkind {
                let (_, r, sop, _) = &setup.dominations[k];
                let w = r * self.z.norm();
                let next = self.step(
                    sop,
                    C64::new(w, 0.0),
                    &dterm.iter().map(|&d| C64::new(d, 0.0)).collect::<Vec<_>>(),
                );
                dterm = next.iter().map(|c| c.re).collect();
                for i in 0..m {
                    dsum[i] += dterm[i];
                }
            }
            quiet = if largest < tol::SERIES_TERM {
                quiet + 1
            } else {
                0
            };
            if quiet >= tol::SERIES_QUIET_TERMS {
                status = SeriesStatus::Converged;
                if let Some(total) = &dtotal {
                    tails = Some(
                        total
                            .iter()
                            .zip(&dsum)
                            .map(|(t, s)| (t - s).max(0.0))
                            .collect(),
                    );
                }
                break;
            }
        }
        Ok(VectorSum {
            values,
            tails,
            bounds: dtotal,
            terms,
            status,
            domination: dkind,
        })
    }
}

/// Solves `(I - w Q_U) x = rhs` for a stochastic operator `Q`.
fn solve_scaled(
    op: &AdmittanceOperator,
    reduced: &[usize],
    pos: &[usize],
    w: f64,
    rhs: &[C64],
) -> Result<Vec<C64>> {
    let m = reduced.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut a = DMatrix::<C64>::identity(m, m);
    for (i, &x) in reduced.iter().enumerate() {
        for &(y, p) in op.row(x) {
            if pos[y] != usize::MAX {
                a[(i, pos[y])] -= p * w;
            }
        }
    }
    Ok(linalg::solve_dense(&a, &DVector::from_column_slice(rhs))?
        .iter()
        .copied()
        .collect())
}

fn describe(setup: &SeriesSetup, k: Option<usize>) -> Option<Domination> {
    k.map(|k| {
        let (kind, r, _, lam) = &setup.dominations[k];
        Domination {
            kind: kind.label(),
            constant: *r,
            stochastic_radius: *lam,
        }
    })
}

/// `F_{V°}(x, a | z)` for every interior `x`; at `z = 1` this is the
/// Dirichlet solution whenever the series converges.
pub fn series_first_passage(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    s: ComplexFrequency,
    z: C64,
    opts: SeriesOptions,
) -> Result<SeriesVector> {
    let setup = series_setup(net, spec, s, z)?;
    let a = spec.source;
    let runner = VectorSeries {
        setup: &setup,
        z,
        max_terms: opts.max_terms,
    };
    let start: Vec<C64> = setup
        .reduced
        .iter()
        .map(|&x| setup.op.entry(x, a) * z)
        .collect();
    let sum = runner.run(start, |sop, w| {
        setup
            .reduced
            .iter()
            .map(|&x| sop.entry(x, a).re * w)
            .collect()
    })?;
    let mut vertices = vec![a];
    let mut values = vec![SeriesResult {
        value: C64::new(1.0, 0.0),
        terms_used: 1,
        domination_bound: Some(1.0),
        tail_bound: Some(0.0),
        status: SeriesStatus::Converged,
    }];
    for (i, &x) in setup.reduced.iter().enumerate() {
        vertices.push(x);
        values.push(SeriesResult {
            value: sum.values[i],
            terms_used: sum.terms,
            domination_bound: sum.bounds.as_ref().map(|b| b[i]),
            tail_bound: sum.tails.as_ref().map(|t| t[i]),
            status: sum.status,
        });
    }
    Ok(SeriesVector {
        vertices,
        values,
        complex_radius: setup.complex_radius,
        domination: describe(&setup, sum.domination),
        status: sum.status,
    })
}

/// `G_{V^a}(x,y|z)` for `x, y` in the reduced interior, `F_{V°}(x,a|z)` for
/// interior `x`, and `U(a,a|z) = z sum_w p(a,w) F(w,a|z)`.
pub fn series_kernels(
    net: &FiniteNetwork,
    spec: &BoundarySpec,
    s: ComplexFrequency,
    z: C64,
    x: usize,
    y: usize,
    opts: SeriesOptions,
) -> Result<SeriesKernels> {
    let setup = series_setup(net, spec, s, z)?;
    let a = spec.source;
    let (ix, iy) = match (
        setup.reduced.binary_search(&x),
        setup.reduced.binary_search(&y),
    ) {
        (Ok(i), Ok(j)) => (i, j),
        _ => {
            return Err(Error::InvalidArgument(format!(
                "({x},{y}) must lie in the reduced interior"
            )))
        }
    };
    let runner = VectorSeries {
        setup: &setup,
        z,
        max_terms: opts.max_terms,
    };
    let m = setup.reduced.len();
    let mut e = vec![C64::default(); m];
    e[iy] = C64::new(1.0, 0.0);
    let gsum = runner.run(e, |_, _| {
        let mut d = vec![0.0; m];
        d[iy] = 1.0;
        d
    })?;
    let green = SeriesResult {
        value: gsum.values[ix],
        terms_used: gsum.terms,
        domination_bound: gsum.bounds.as_ref().map(|b| b[ix]),
        tail_bound: gsum.tails.as_ref().map(|t| t[ix]),
        status: gsum.status,
    };

    let start: Vec<C64> = setup
        .reduced
        .iter()
        .map(|&w| setup.op.entry(w, a) * z)
        .collect();
    let fsum = runner.run(start, |sop, w| {
        setup
            .reduced
            .iter()
            .map(|&v| sop.entry(v, a).re * w)
            .collect()
    })?;
    let first_passage = SeriesResult {
        value: fsum.values[ix],
        terms_used: fsum.terms,
        domination_bound: fsum.bounds.as_ref().map(|b| b[ix]),
        tail_bound: fsum.tails.as_ref().map(|t| t[ix]),
        status: fsum.status,
    };

    let mut u = C64::default();
    let mut ubound = fsum.bounds.as_ref().map(|_| 0.0);
    let mut utail = fsum.tails.as_ref().map(|_| 0.0);
    let dom = fsum.domination.map(|k| &setup.dominations[k]);
    for (i, &w) in setup.reduced.iter().enumerate() {
        let p = setup.op.entry(a, w);
        u += p * z * fsum.values[i];
        if let Some((_, r, sop, _)) = dom {
            let q = sop.entry(a, w).re * r * z.norm();
            if let (Some(b), Some(bs)) = (ubound.as_mut(), fsum.bounds.as_ref()) {
                *b += q * bs[i];
            }
            if let (Some(t), Some(ts)) = (utail.as_mut(), fsum.tails.as_ref()) {
                *t += q * ts[i];
            }
        }
    }
    let return_ = SeriesResult {
        value: u,
        terms_used: fsum.terms,
        domination_bound: ubound,
        tail_bound: utail,
        status: fsum.status,
    };
    Ok(SeriesKernels {
        green,
        first_passage,
        return_,
        complex_radius: setup.complex_radius,
        domination: describe(&setup, fsum.domination.or(gsum.domination)),
    })
}
