//! Trees with complex admittances: addresses, ends, Martin kernels and
//! boundary distributions.
//!
//! Trees are described by cone types. Every vertex other than the root has a
//! type, and the children of a vertex (with the parameters of the edges to
//! them) depend only on its type. The parameters of the edge to the parent
//! are fixed by the type as well. All regular and free-group trees are of
//! this form with a handful of types.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::netcore::{domination_constant, EdgeParams, OperatorKind, C64};
use crate::tol;

/// Path from the root as a sequence of child indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TreeAddress(Vec<usize>);

impl TreeAddress {
    pub fn root() -> Self {
        TreeAddress(Vec::new())
    }

    pub fn new(path: Vec<usize>) -> Self {
        TreeAddress(path)
    }

    pub fn path(&self) -> &[usize] {
        &self.0
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// The predecessor `x^-`.
    pub fn parent(&self) -> Option<TreeAddress> {
        if self.0.is_empty() {
            None
        } else {
            Some(TreeAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn child(&self, i: usize) -> TreeAddress {
        let mut p = self.0.clone();
        p.push(i);
        TreeAddress(p)
    }

    pub fn prefix(&self, len: usize) -> TreeAddress {
        TreeAddress(self.0[..len].to_vec())
    }

    /// True if `self` lies on the geodesic from the root to `other`.
    pub fn is_ancestor_of(&self, other: &TreeAddress) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Length of the longest common prefix.
    pub fn common_len(&self, other: &TreeAddress) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn confluent(&self, other: &TreeAddress) -> TreeAddress {
        self.prefix(self.common_len(other))
    }

    /// Number of edges on the geodesic to `other`.
    pub fn distance(&self, other: &TreeAddress) -> usize {
        let c = self.common_len(other);
        self.depth() + other.depth() - 2 * c
    }

    /// Vertices of the geodesic from `self` to `other`, both included.
    pub fn geodesic(&self, other: &TreeAddress) -> Vec<TreeAddress> {
        let c = self.common_len(other);
        let mut out: Vec<TreeAddress> = (c..=self.depth()).rev().map(|k| self.prefix(k)).collect();
        out.extend((c + 1..=other.depth()).map(|k| other.prefix(k)));
        out
    }
}

impl fmt::Display for TreeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "o")?;
        for i in &self.0 {
            write!(f, ".{i}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for TreeAddress {
    type Err = Error;

    /// Parses `o`, `o.0.2`, or a bare index path such as `0.2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let body = s
            .strip_prefix('o')
            .map(|r| r.strip_prefix('.').unwrap_or(r))
            .unwrap_or(s);
        if body.is_empty() {
            return Ok(TreeAddress::root());
        }
        body.split('.')
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad tree address `{s}`")))
            })
            .collect::<Result<Vec<_>>>()
            .map(TreeAddress)
    }
}

/// An end approximated by a finite ray prefix from the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndApprox(pub TreeAddress);

impl EndApprox {
    pub fn depth(&self) -> usize {
        self.0.depth()
    }

    /// The confluent `x ^ xi`, when the prefix is long enough to decide it.
    pub fn confluent_with(&self, x: &TreeAddress) -> Result<TreeAddress> {
        let c = x.common_len(&self.0);
        if c == self.depth() && c < x.depth() {
            return Err(Error::DepthInsufficient {
                have: self.depth(),
                need: x.depth(),
            });
        }
        Ok(x.prefix(c))
    }
}

/// `theta(xi, eta) = 2^{-|xi ^ eta|}`; requires the prefixes to separate.
pub fn theta(xi: &EndApprox, eta: &EndApprox) -> Result<f64> {
    let c = xi.0.common_len(&eta.0);
    if c == xi.depth().min(eta.depth()) {
        return Err(Error::DepthInsufficient {
            have: c,
            need: c + 1,
        });
    }
    Ok(0.5f64.powi(c as i32))
}

/// A tree given by cone types.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTree {
    root_type: usize,
    children: Vec<Vec<(usize, EdgeParams)>>,
    up: Vec<Option<EdgeParams>>,
}

impl ConeTree {
    /// `children[t]` lists `(child type, edge params)` for vertices of
    /// type `t`. Every type needs at least one child, the root type may not
    /// occur as a child, and a type must always hang from its parent by the
    /// same edge parameters.
    pub fn new(root_type: usize, children: Vec<Vec<(usize, EdgeParams)>>) -> Result<Self> {
        let n = children.len();
        if root_type >= n {
            return Err(Error::InvalidNetwork("root type out of range".into()));
        }
        let mut up: Vec<Option<EdgeParams>> = vec![None; n];
        for (t, list) in children.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidNetwork(format!(
                    "cone type {t} has no children"
                )));
            }
            for &(c, p) in list {
                if c >= n || c == root_type {
                    return Err(Error::InvalidNetwork(format!("invalid child type {c}")));
                }
                match up[c] {
                    Some(q) if q != p => {
                        return Err(Error::InvalidNetwork(format!(
                            "cone type {c} has two parent edges"
                        )));
                    }
                    _ => up[c] = Some(p),
                }
            }
        }
        Ok(ConeTree {
            root_type,
            children,
            up,
        })
    }

    pub fn root_type(&self) -> usize {
        self.root_type
    }

    pub fn type_count(&self) -> usize {
        self.children.len()
    }

    pub fn children_of(&self, t: usize) -> &[(usize, EdgeParams)] {
        &self.children[t]
    }

    pub fn up_params(&self, t: usize) -> Option<EdgeParams> {
        self.up[t]
    }

    pub fn type_at(&self, x: &TreeAddress) -> Result<usize> {
        let mut t = self.root_type;
        for &i in x.path() {
            t = self.children[t]
                .get(i)
                .ok_or_else(|| Error::InvalidArgument(format!("address {x} leaves the tree")))?
                .0;
        }
        Ok(t)
    }

    pub fn contains(&self, x: &TreeAddress) -> bool {
        self.type_at(x).is_ok()
    }

    /// Edge parameters between `x` and its parent.
    pub fn parent_edge(&self, x: &TreeAddress) -> Result<Option<EdgeParams>> {
        Ok(self.up[self.type_at(x)?])
    }

    /// Neighbours of `x`: the parent first (if any), then the children.
    pub fn neighbors(&self, x: &TreeAddress) -> Result<Vec<(TreeAddress, EdgeParams)>> {
        let t = self.type_at(x)?;
        let mut out = Vec::with_capacity(self.children[t].len() + 1);
        if let (Some(p), Some(q)) = (x.parent(), self.up[t]) {
            out.push((p, q));
        }
        for (i, &(_, q)) in self.children[t].iter().enumerate() {
            out.push((x.child(i), q));
        }
        Ok(out)
    }

    /// All addresses of depth at most `depth`, by level.
    pub fn truncation(&self, depth: usize) -> Vec<TreeAddress> {
        let mut out = vec![TreeAddress::root()];
        let mut level = vec![(TreeAddress::root(), self.root_type)];
        for _ in 0..depth {
            let mut next = Vec::new();
            for (x, t) in &level {
                for (i, &(c, _)) in self.children[*t].iter().enumerate() {
                    next.push((x.child(i), c));
                }
            }
            out.extend(next.iter().map(|(x, _)| x.clone()));
            level = next;
        }
        out
    }

    /// Sum of weights around a vertex of type `t` (with or without parent).
    pub(crate) fn mass(&self, t: usize, kind: OperatorKind) -> C64 {
        let down: C64 = self.children[t].iter().map(|&(_, p)| kind.weight(p)).sum();
        down + self.up[t].map(|p| kind.weight(p)).unwrap_or_default()
    }
}

/// `ab / (a + b)`: two admittances in series.
pub(crate) fn series_pair(a: C64, b: C64) -> C64 {
    a * b / (a + b)
}

/// How a [`TreeKernels`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRoute {
    /// Limits of grounded-sphere exhaustion at `z = 1`.
    Exhaustion,
    /// Fixed-point iteration of the generating functions, certified by a
    /// dominating stochastic iteration.
    Series,
}

/// First-passage generating functions `F(x, y | z)` on a cone-typed tree.
///
/// Only the per-type values `F(x, x^- | z)` are stored; everything else
/// follows from them along geodesics.
#[derive(Debug, Clone)]
pub struct TreeKernels {
    tree: ConeTree,
    kind: OperatorKind,
    z: C64,
    down: Vec<C64>,
    route: KernelRoute,
    /// Bound on `|F - computed|` per type, from the dominating series.
    pub tail_bound: Option<f64>,
    /// Largest relative change of the per-type values at the last step.
    pub last_change: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct KernelOptions {
    pub max_iterations: usize,
    pub tol: f64,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            max_iterations: 2000,
            tol: 1e-13,
        }
    }
}

impl TreeKernels {
    /// Kernels at `z = 1` from the admittance of depth-`r` cones, grounded at
    /// their bottom sphere, as `r` grows.
    pub fn by_exhaustion(tree: &ConeTree, kind: OperatorKind, opts: KernelOptions) -> Result<Self> {
        let n = tree.type_count();
        let w = |p: EdgeParams| kind.weight(p);
        // y[t]: admittance below a vertex of type t, children grounded at depth r
        let mut y: Vec<C64> = (0..n)
            .map(|t| tree.children[t].iter().map(|&(_, p)| w(p)).sum())
            .collect();
        let down_of = |y: &[C64]| -> Vec<C64> {
            (0..n)
                .map(|t| match tree.up[t] {
                    Some(p) => w(p) / (w(p) + y[t]),
                    None => C64::default(),
                })
                .collect()
        };
        let mut down = down_of(&y);
        let mut quiet = 0;
        let mut change = f64::INFINITY;
        for it in 1..=opts.max_iterations {
            let next: Vec<C64> = (0..n)
                .map(|t| {
                    tree.children[t]
                        .iter()
                        .map(|&(c, p)| series_pair(w(p), y[c]))
                        .sum()
                })
                .collect();
            y = next;
            let nd = down_of(&y);
            change = nd
                .iter()
                .zip(&down)
                .map(|(a, b)| tol::rel_err(*a, *b))
                .fold(0.0, f64::max);
            down = nd;
            quiet = if change < opts.tol { quiet + 1 } else { 0 };
            if quiet >= 3 {
                return Ok(TreeKernels {
                    tree: tree.clone(),
                    kind,
                    z: C64::new(1.0, 0.0),
                    down,
                    route: KernelRoute::Exhaustion,
                    tail_bound: None,
                    last_change: change,
                    iterations: it,
                });
            }
        }
        Err(Error::NotConverged(format!(
            "cone admittances (last change {change:e})"
        )))
    }

    /// Kernels at a complex argument `z` by iterating
    /// `F_t = z p_up + z sum_c p_c F_c F_t` from zero.
    ///
    /// Refuses with a range error unless some stochastic comparison operator
    /// `Q` with `|p| <= r q` has a finite Green function at `r |z|`; that
    /// dominating iteration bounds the error of every iterate.
    pub fn by_series(
        tree: &ConeTree,
        kind: OperatorKind,
        z: C64,
        opts: KernelOptions,
    ) -> Result<Self> {
        let mut dominations: Vec<(OperatorKind, f64)> = Vec::new();
        match kind {
            OperatorKind::Complex(s) => {
                for k in OperatorKind::comparison_kinds(s) {
                    if let Some(r) = domination_constant(s, k) {
                        dominations.push((k, r));
                    }
                }
            }
            k => dominations.push((k, 1.0)),
        }
        let mut best: Option<(f64, Vec<f64>, OperatorKind, f64)> = None;
        for (k, r) in dominations {
            let w = r * z.norm();
            if let Some(limit) = stochastic_fixed_point(tree, k, w, opts.max_iterations * 50)? {
                let size = limit.iter().copied().fold(0.0, f64::max);
                if best.as_ref().is_none_or(|b| size < b.0) {
                    best = Some((size, limit, k, w));
                }
            }
        }
        let (_, limit, dom_kind, w) = best.ok_or_else(|| {
            Error::Range(format!(
                "no stochastic comparison certifies |z| = {}",
                z.norm()
            ))
        })?;

        let n = tree.type_count();
        let p = transition_table(tree, kind);
        let q = transition_table(tree, dom_kind);
        let mut f = vec![C64::default(); n];
        let mut g = vec![0.0; n];
        let mut it = 0;
        let mut change;
        loop {
            it += 1;
            let nf: Vec<C64> = (0..n)
                .map(|t| match p.up[t] {
                    Some(pu) => {
                        z * pu + z * p.down[t].iter().map(|&(c, pc)| pc * f[c]).sum::<C64>() * f[t]
                    }
                    None => C64::default(),
                })
                .collect();
            let ng: Vec<f64> = (0..n)
                .map(|t| match q.up[t] {
                    Some(qu) => {
                        w * qu.re
                            + w * q.down[t].iter().map(|&(c, qc)| qc.re * g[c]).sum::<f64>() * g[t]
                    }
                    None => 0.0,
                })
                .collect();
            change = nf
                .iter()
                .zip(&f)
                .map(|(a, b)| tol::rel_err(*a, *b))
                .fold(0.0, f64::max);
            f = nf;
            g = ng;
            let tail = limit
                .iter()
                .zip(&g)
                .map(|(l, g)| (l - g).max(0.0))
                .fold(0.0, f64::max);
            if tail < opts.tol {
                return Ok(TreeKernels {
                    tree: tree.clone(),
                    kind,
                    z,
                    down: f,
                    route: KernelRoute::Series,
                    tail_bound: Some(tail),
                    last_change: change,
                    iterations: it,
                });
            }
            if it >= opts.max_iterations * 50 {
                return Err(Error::NotConverged(format!(
                    "first-passage iteration (tail {tail:e})"
                )));
            }
        }
    }

    pub fn tree(&self) -> &ConeTree {
        &self.tree
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn z(&self) -> C64 {
        self.z
    }

    pub fn route(&self) -> KernelRoute {
        self.route
    }

    /// `p(x, y)` for neighbours `x`, `y`.
    pub fn transition(&self, x: &TreeAddress, y: &TreeAddress) -> Result<C64> {
        let tx = self.tree.type_at(x)?;
        let mass = self.tree.mass(tx, self.kind);
        if x.parent().as_ref() == Some(y) {
            return Ok(self.kind.weight(self.tree.up[tx].expect("non-root")) / mass);
        }
        if y.parent().as_ref() == Some(x) {
            let i = *y.path().last().expect("child");
            return Ok(self.kind.weight(self.tree.children[tx][i].1) / mass);
        }
        Err(Error::InvalidArgument(format!(
            "{x} and {y} are not neighbours"
        )))
    }

    /// `F(x, x^- | z)`.
    pub fn edge_up(&self, x: &TreeAddress) -> Result<C64> {
        if x.is_root() {
            return Err(Error::InvalidArgument("the root has no predecessor".into()));
        }
        Ok(self.down[self.tree.type_at(x)?])
    }

    /// `F(x^-, x | z)`, computed from the root along the geodesic.
    pub fn edge_down(&self, x: &TreeAddress) -> Result<C64> {
        if x.is_root() {
            return Err(Error::InvalidArgument("the root has no predecessor".into()));
        }
        Ok(*self.down_chain(x)?.last().expect("nonempty"))
    }

    /// `F(x_{k-1}, x_k | z)` for `k = 1..=|x|` along the root geodesic.
    fn down_chain(&self, x: &TreeAddress) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(x.depth());
        let mut t = self.tree.root_type;
        // F(parent of current, current), absent at the root
        let mut from_parent: Option<(C64, C64)> = None;
        for &i in x.path() {
            let mass = self.tree.mass(t, self.kind);
            let (ct, cp) = self.tree.children[t]
                .get(i)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("address {x} leaves the tree")))?;
            let mut other = C64::default();
            for (j, &(c, p)) in self.tree.children[t].iter().enumerate() {
                if j != i {
                    other += self.kind.weight(p) / mass * self.down[c];
                }
            }
            if let Some((pu, f)) = from_parent {
                other += pu / mass * f;
            }
            let denom = C64::new(1.0, 0.0) - self.z * other;
            if denom.norm() == 0.0 {
                return Err(Error::Singular("first-passage recursion".into()));
            }
            let f = self.z * self.kind.weight(cp) / mass / denom;
            out.push(f);
            from_parent = Some((self.kind.weight(cp), f));
            t = ct;
        }
        Ok(out)
    }

    /// `F(x, y | z)` as a product of edge values along the geodesic.
    pub fn first_passage(&self, x: &TreeAddress, y: &TreeAddress) -> Result<C64> {
        let c = x.common_len(y);
        let mut f = C64::new(1.0, 0.0);
        for k in (c + 1..=x.depth()).rev() {
            f *= self.edge_up(&x.prefix(k))?;
        }
        if y.depth() > c {
            let chain = self.down_chain(y)?;
            for v in &chain[c..] {
                f *= v;
            }
        }
        Ok(f)
    }

    /// `U(x, x | z) = z sum_w p(x,w) F(w, x | z)`.
    pub fn return_value(&self, x: &TreeAddress) -> Result<C64> {
        let t = self.tree.type_at(x)?;
        let mass = self.tree.mass(t, self.kind);
        let mut u: C64 = self.tree.children[t]
            .iter()
            .map(|&(c, p)| self.kind.weight(p) / mass * self.down[c])
            .sum();
        if let Some(p) = self.tree.up[t] {
            u += self.kind.weight(p) / mass * self.edge_down(x)?;
        }
        Ok(self.z * u)
    }

    /// `G(x, y | z) = F(x, y | z) / (1 - U(y, y | z))`.
    pub fn green(&self, x: &TreeAddress, y: &TreeAddress) -> Result<C64> {
        let u = self.return_value(y)?;
        Ok(self.first_passage(x, y)? / (C64::new(1.0, 0.0) - u))
    }

    /// Residual of `z p(x,y) (1 - F(x,y) F(y,x)) = F(x,y) (1 - U(x,x))`.
    pub fn edge_identity_residual(&self, x: &TreeAddress, y: &TreeAddress) -> Result<f64> {
        let p = self.transition(x, y)?;
        let fxy = self.first_passage(x, y)?;
        let fyx = self.first_passage(y, x)?;
        let u = self.return_value(x)?;
        let one = C64::new(1.0, 0.0);
        Ok((self.z * p * (one - fxy * fyx) - fxy * (one - u)).norm())
    }

    /// `K(x, xi | z) = F(x, x^xi | z) / F(o, x^xi | z)`.
    pub fn martin_kernel(&self, x: &TreeAddress, xi: &EndApprox) -> Result<C64> {
        let w = xi.confluent_with(x)?;
        self.kernel_at_confluent(x, &w)
    }

    fn kernel_at_confluent(&self, x: &TreeAddress, w: &TreeAddress) -> Result<C64> {
        let den = self.first_passage(&TreeAddress::root(), w)?;
        if den.norm() < 1e-300 {
            return Err(Error::consistency("F(o, x^xi) != 0", den.norm(), 0.0));
        }
        Ok(self.first_passage(x, w)? / den)
    }

    /// `z sum_y p(x,y) f(y) - f(x)` at `x`, with `f` given on neighbours.
    /// Vanishes for functions that are harmonic for `zP`.
    pub fn laplacian_at(&self, f: &BTreeMap<TreeAddress, C64>, x: &TreeAddress) -> Result<C64> {
        let fx = *f
            .get(x)
            .ok_or_else(|| Error::InvalidArgument(format!("no value at {x}")))?;
        let mut acc = C64::default();
        for (y, _) in self.tree.neighbors(x)? {
            let fy = *f
                .get(&y)
                .ok_or_else(|| Error::InvalidArgument(format!("no value at {y}")))?;
            acc += self.transition(x, &y)? * fy;
        }
        Ok(self.z * acc - fx)
    }
}

struct TransitionTable {
    up: Vec<Option<C64>>,
    down: Vec<Vec<(usize, C64)>>,
}

fn transition_table(tree: &ConeTree, kind: OperatorKind) -> TransitionTable {
    let n = tree.type_count();
    let mut up = Vec::with_capacity(n);
    let mut down = Vec::with_capacity(n);
    for t in 0..n {
        let mass = tree.mass(t, kind);
        up.push(tree.up[t].map(|p| kind.weight(p) / mass));
        down.push(
            tree.children[t]
                .iter()
                .map(|&(c, p)| (c, kind.weight(p) / mass))
                .collect(),
        );
    }
    TransitionTable { up, down }
}

/// Minimal nonnegative solution of the stochastic first-passage equations at
/// real `w`, provided it exists and the Green function stays finite.
///
/// Returns `None` when `w` is at or beyond the radius of convergence. A
/// relative margin of `1e-9` on `w` guards against the critical point.
pub(crate) fn stochastic_fixed_point(
    tree: &ConeTree,
    kind: OperatorKind,
    w: f64,
    cap: usize,
) -> Result<Option<Vec<f64>>> {
    if !kind.is_stochastic() {
        return Err(Error::InvalidArgument(
            "domination needs a stochastic operator".into(),
        ));
    }
    let q = transition_table(tree, kind);
    let n = tree.type_count();
    let probe = |w: f64| -> Option<Vec<f64>> {
        let mut g = vec![0.0; n];
        for _ in 0..cap {
            let ng: Vec<f64> = (0..n)
                .map(|t| match q.up[t] {
                    Some(qu) => {
                        w * qu.re
                            + w * q.down[t].iter().map(|&(c, qc)| qc.re * g[c]).sum::<f64>() * g[t]
                    }
                    None => 0.0,
                })
                .collect();
            if ng.iter().any(|v| !v.is_finite() || *v > 1e6) {
                return None;
            }
            let change = ng
                .iter()
                .zip(&g)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            g = ng;
            if change <= 1e-17 * g.iter().copied().fold(1.0, f64::max) {
                // Green function finite at every vertex iff the root return value is < 1
                let u: f64 = w * q.down[tree.root_type]
                    .iter()
                    .map(|&(c, qc)| qc.re * g[c])
                    .sum::<f64>();
                // a stationary type with u(t) >= 1 means G diverges below it
                let types_ok = (0..n).all(|t| {
                    let below: f64 = q.down[t].iter().map(|&(c, qc)| qc.re * g[c]).sum::<f64>();
                    w * below < 1.0
                });
                return (u < 1.0 && types_ok).then_some(g);
            }
        }
        None
    };
    Ok(probe(w * (1.0 + 1e-9)).and_then(|_| probe(w)))
}

/// A finitely additive complex set function on boundary arcs, represented
/// on all arcs of depth at most `depth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDistribution {
    depth: usize,
    values: BTreeMap<TreeAddress, C64>,
}

impl BoundaryDistribution {
    /// Builds the distribution from its values on the depth-`depth` arcs,
    /// filling coarser arcs by additivity.
    pub fn from_leaves(
        tree: &ConeTree,
        depth: usize,
        leaves: &BTreeMap<TreeAddress, C64>,
    ) -> Result<Self> {
        let all = tree.truncation(depth);
        let mut values = BTreeMap::new();
        for x in all.iter().filter(|x| x.depth() == depth) {
            let v = *leaves
                .get(x)
                .ok_or_else(|| Error::InvalidArgument(format!("no value for arc {x}")))?;
            values.insert(x.clone(), v);
        }
        for x in all.iter().rev().filter(|x| x.depth() < depth) {
            let t = tree.type_at(x)?;
            let sum: C64 = (0..tree.children_of(t).len())
                .map(|i| values[&x.child(i)])
                .sum();
            values.insert(x.clone(), sum);
        }
        Ok(BoundaryDistribution { depth, values })
    }

    /// Wraps explicit arc values; additivity is checked by
    /// [`BoundaryDistribution::additivity_defect`], not enforced.
    pub fn from_values(
        tree: &ConeTree,
        depth: usize,
        values: BTreeMap<TreeAddress, C64>,
    ) -> Result<Self> {
        for x in tree.truncation(depth) {
            if !values.contains_key(&x) {
                return Err(Error::InvalidArgument(format!("no value for arc {x}")));
            }
        }
        Ok(BoundaryDistribution { depth, values })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &BTreeMap<TreeAddress, C64> {
        &self.values
    }

    pub fn get(&self, x: &TreeAddress) -> Option<C64> {
        self.values.get(x).copied()
    }

    /// `nu` of the whole boundary.
    pub fn total(&self) -> C64 {
        self.values[&TreeAddress::root()]
    }

    /// Largest `|nu(T_x) - sum_{y^- = x} nu(T_y)|` over represented `x`.
    pub fn additivity_defect(&self, tree: &ConeTree) -> f64 {
        let mut worst: f64 = 0.0;
        for (x, v) in &self.values {
            if x.depth() >= self.depth {
                continue;
            }
            let t = tree.type_at(x).expect("represented arc");
            let sum: C64 = (0..tree.children_of(t).len())
                .filter_map(|i| self.values.get(&x.child(i)))
                .sum();
            worst = worst.max((v - sum).norm() / v.norm().max(1.0));
        }
        worst
    }
}

/// `h(x) = int K(x, .) d nu`, exact because `K(x, .)` is constant on arcs of
/// depth `>= |x|`.
pub fn integrate_kernel(
    kernels: &TreeKernels,
    nu: &BoundaryDistribution,
    x: &TreeAddress,
) -> Result<C64> {
    if x.depth() > nu.depth {
        return Err(Error::DepthInsufficient {
            have: nu.depth,
            need: x.depth(),
        });
    }
    // arcs below x at the finest depth, and for each ancestor w the arcs
    // that leave the geodesic at w
    let mut h = C64::default();
    for k in 0..=x.depth() {
        let w = x.prefix(k);
        let k_val = kernels.kernel_at_confluent(x, &w)?;
        let mass = if k == x.depth() {
            nu.get(&w).expect("represented")
        } else {
            nu.get(&w).expect("represented") - nu.get(&x.prefix(k + 1)).expect("represented")
        };
        h += k_val * mass;
    }
    Ok(h)
}

/// Harmonic function of a distribution on every vertex of depth `<= depth`.
pub fn harmonic_from_distribution(
    kernels: &TreeKernels,
    nu: &BoundaryDistribution,
) -> Result<BTreeMap<TreeAddress, C64>> {
    kernels
        .tree
        .truncation(nu.depth)
        .into_iter()
        .map(|x| integrate_kernel(kernels, nu, &x).map(|v| (x, v)))
        .collect()
}

/// Largest `|zPh - h|` over vertices of depth `< depth`, relative to the
/// largest `|h|`.
pub fn harmonic_residual(
    kernels: &TreeKernels,
    h: &BTreeMap<TreeAddress, C64>,
    depth: usize,
) -> Result<f64> {
    let scale = h.values().map(|v| v.norm()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for x in h.keys().filter(|x| x.depth() < depth) {
        worst = worst.max(kernels.laplacian_at(h, x)?.norm() / scale);
    }
    Ok(worst)
}

/// The distribution `nu^h` of a harmonic function given on a depth-`depth`
/// truncation.
pub fn distribution_from_harmonic(
    kernels: &TreeKernels,
    h: &BTreeMap<TreeAddress, C64>,
    depth: usize,
) -> Result<BoundaryDistribution> {
    let tree = &kernels.tree;
    for x in tree.truncation(depth) {
        if !h.contains_key(&x) {
            return Err(Error::InvalidArgument(format!("h is missing vertex {x}")));
        }
    }
    let residual = harmonic_residual(kernels, h, depth)?;
    if residual > tol::TREE_HARMONIC {
        return Err(Error::InvalidArgument(format!(
            "h is not harmonic: residual {residual:e}"
        )));
    }
    let one = C64::new(1.0, 0.0);
    let mut values = BTreeMap::new();
    for x in tree.truncation(depth) {
        let v = match x.parent() {
            None => h[&x],
            Some(p) => {
                let up = kernels.edge_up(&x)?;
                let down = kernels.edge_down(&x)?;
                let f_ox = kernels.first_passage(&TreeAddress::root(), &x)?;
                f_ox * (h[&x] - up * h[&p]) / (one - up * down)
            }
        };
        values.insert(x, v);
    }
    let nu = BoundaryDistribution { depth, values };
    let defect = nu.additivity_defect(tree);
    if defect > tol::TREE_HARMONIC {
        return Err(Error::consistency(
            "additivity of nu^h",
            defect,
            tol::TREE_HARMONIC,
        ));
    }
    Ok(nu)
}

/// `sum |nu(T_y)|` over the arcs of the given depth.
pub fn summability_probe(nu: &BoundaryDistribution, depth: usize) -> Result<f64> {
    if depth > nu.depth {
        return Err(Error::DepthInsufficient {
            have: nu.depth,
            need: depth,
        });
    }
    Ok(nu
        .values
        .iter()
        .filter(|(x, _)| x.depth() == depth)
        .map(|(_, v)| v.norm())
        .sum())
}
