//! Infinite networks given by lazy generators.
//!
//! A network is exhausted by the balls `V_n` around the generator's root.
//! The sphere `S_n` is grounded together with the part of a user-given
//! grounded set that lies in `V_{n-1}`, and the effective admittance from
//! the source is tracked as `n` grows.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finsolve::{effective_admittance_with, Backend, BoundarySpec};
use crate::freegrp;
use crate::netcore::{ComplexFrequency, EdgeParams, FiniteNetwork, OperatorKind, C64};
use crate::tol;
use crate::tree::{series_pair, ConeTree, TreeAddress};

/// Opaque, totally ordered vertex name chosen by a generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexCode(String);

impl VertexCode {
    pub fn new(s: impl Into<String>) -> Self {
        VertexCode(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VertexCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VertexCode {
    fn from(s: &str) -> Self {
        VertexCode(s.to_string())
    }
}

/// A locally finite, connected network produced on demand.
///
/// `neighbors` must be deterministic and symmetric: if `y` is listed for
/// `x` then `x` is listed for `y` with the same parameters.
pub trait GraphGenerator: Send + Sync {
    fn name(&self) -> String;

    fn root(&self) -> VertexCode;

    fn neighbors(&self, x: &VertexCode) -> Result<Vec<(VertexCode, EdgeParams)>>;

    /// Cone-type structure, for trees rooted at [`GraphGenerator::root`].
    fn as_tree(&self) -> Option<&TreeGenerator> {
        None
    }
}

/// The integer line with identical edges.
#[derive(Debug, Clone)]
pub struct Line {
    pub params: EdgeParams,
}

fn parse_int(x: &VertexCode) -> Result<i64> {
    x.0.trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("`{x}` is not an integer vertex")))
}

impl GraphGenerator for Line {
    fn name(&self) -> String {
        "line".into()
    }

    fn root(&self) -> VertexCode {
        VertexCode::new("0")
    }

    fn neighbors(&self, x: &VertexCode) -> Result<Vec<(VertexCode, EdgeParams)>> {
        let k = parse_int(x)?;
        Ok(vec![
            (VertexCode::new((k - 1).to_string()), self.params),
            (VertexCode::new((k + 1).to_string()), self.params),
        ])
    }
}

/// The square lattice with identical edges; vertices are `x,y`.
#[derive(Debug, Clone)]
pub struct Grid2d {
    pub params: EdgeParams,
}

fn parse_pair(x: &VertexCode) -> Result<(i64, i64)> {
    let bad = || Error::InvalidArgument(format!("`{x}` is not a lattice vertex `x,y`"));
    let (a, b) = x.0.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

impl GraphGenerator for Grid2d {
    fn name(&self) -> String {
        "grid2d".into()
    }

    fn root(&self) -> VertexCode {
        VertexCode::new("0,0")
    }

    fn neighbors(&self, x: &VertexCode) -> Result<Vec<(VertexCode, EdgeParams)>> {
        let (a, b) = parse_pair(x)?;
        Ok([(a + 1, b), (a - 1, b), (a, b + 1), (a, b - 1)]
            .into_iter()
            .map(|(p, q)| (VertexCode::new(format!("{p},{q}")), self.params))
            .collect())
    }
}

/// How a [`TreeGenerator`] names its vertices.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNaming {
    /// `o`, `o.0`, `o.0.1`, ...
    Dotted,
    /// Comma-separated type labels along the root path; `root` names the root.
    Labels { root: String, labels: Vec<String> },
}

/// A cone-typed tree as a generator.
#[derive(Debug, Clone)]
pub struct TreeGenerator {
    name: String,
    tree: ConeTree,
    naming: TreeNaming,
}

impl TreeGenerator {
    pub fn new(name: impl Into<String>, tree: ConeTree, naming: TreeNaming) -> Self {
        TreeGenerator {
            name: name.into(),
            tree,
            naming,
        }
    }

    /// Rooted tree where every vertex has `b` children; child `i` hangs by
    /// `assign[i % assign.len()]`.
    pub fn b_ary(b: usize, assign: &[EdgeParams]) -> Result<Self> {
        if b == 0 || assign.is_empty() {
            return Err(Error::InvalidArgument(
                "a b-ary tree needs b >= 1 and an assignment".into(),
            ));
        }
        let kids: Vec<(usize, EdgeParams)> =
            (0..b).map(|i| (i, assign[i % assign.len()])).collect();
        let mut children = vec![kids.clone(); b];
        children.push(kids);
        Ok(TreeGenerator::new(
            format!("tree:b={b}"),
            ConeTree::new(b, children)?,
            TreeNaming::Dotted,
        ))
    }

    /// The `(q+1)`-regular tree with identical edges.
    pub fn regular(q: usize, params: EdgeParams) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("regular tree needs q >= 1".into()));
        }
        let tree = ConeTree::new(0, vec![vec![(1, params); q + 1], vec![(1, params); q]])?;
        Ok(TreeGenerator::new(
            format!("regtree:q={q}"),
            tree,
            TreeNaming::Dotted,
        ))
    }

    pub fn cone_tree(&self) -> &ConeTree {
        &self.tree
    }

    pub fn code_of(&self, x: &TreeAddress) -> Result<VertexCode> {
        match &self.naming {
            TreeNaming::Dotted => {
                self.tree.type_at(x)?;
                Ok(VertexCode::new(x.to_string()))
            }
            TreeNaming::Labels { root, labels } => {
                if x.is_root() {
                    return Ok(VertexCode::new(root.clone()));
                }
                let mut t = self.tree.root_type();
                let mut parts = Vec::with_capacity(x.depth());
                for &i in x.path() {
                    t = self
                        .tree
                        .children_of(t)
                        .get(i)
                        .ok_or_else(|| {
                            Error::InvalidArgument(format!("address {x} leaves the tree"))
                        })?
                        .0;
                    parts.push(labels[t].clone());
                }
                Ok(VertexCode::new(parts.join(",")))
            }
        }
    }

    pub fn address_of(&self, code: &VertexCode) -> Result<TreeAddress> {
        match &self.naming {
            TreeNaming::Dotted => {
                let a: TreeAddress = code.0.parse()?;
                self.tree.type_at(&a)?;
                Ok(a)
            }
            TreeNaming::Labels { root, labels } => {
                let s = code.0.trim();
                if s == root || s.is_empty() {
                    return Ok(TreeAddress::root());
                }
                let mut t = self.tree.root_type();
                let mut path = Vec::new();
                for part in s.split(',') {
                    let part = part.trim();
                    let i = self
                        .tree
                        .children_of(t)
                        .iter()
                        .position(|&(c, _)| labels[c] == part)
                        .ok_or_else(|| {
                            Error::InvalidArgument(format!("`{code}` is not a reduced word"))
                        })?;
                    path.push(i);
                    t = self.tree.children_of(t)[i].0;
                }
                Ok(TreeAddress::new(path))
            }
        }
    }
}

impl GraphGenerator for TreeGenerator {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn root(&self) -> VertexCode {
        self.code_of(&TreeAddress::root()).expect("root exists")
    }

    fn neighbors(&self, x: &VertexCode) -> Result<Vec<(VertexCode, EdgeParams)>> {
        let a = self.address_of(x)?;
        self.tree
            .neighbors(&a)?
            .into_iter()
            .map(|(y, p)| Ok((self.code_of(&y)?, p)))
            .collect()
    }

    fn as_tree(&self) -> Option<&TreeGenerator> {
        Some(self)
    }
}

/// A finite network viewed as a generator; balls eventually stop growing.
#[derive(Debug, Clone)]
pub struct FiniteGenerator {
    net: FiniteNetwork,
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    root: usize,
}

impl FiniteGenerator {
    pub fn new(net: FiniteNetwork, names: Vec<String>, root: usize) -> Result<Self> {
        if names.len() != net.vertex_count() || root >= names.len() {
            return Err(Error::InvalidArgument(
                "vertex names do not match the network".into(),
            ));
        }
        let index: BTreeMap<String, usize> = names
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, n)| (n, i))
            .collect();
        if index.len() != names.len() {
            return Err(Error::InvalidArgument("duplicate vertex names".into()));
        }
        Ok(FiniteGenerator {
            net,
            names,
            index,
            root,
        })
    }

    /// Names vertices by their ids.
    pub fn numbered(net: FiniteNetwork, root: usize) -> Result<Self> {
        let names = (0..net.vertex_count()).map(|i| i.to_string()).collect();
        Self::new(net, names, root)
    }
}

impl GraphGenerator for FiniteGenerator {
    fn name(&self) -> String {
        format!("finite:{}", self.names.len())
    }

    fn root(&self) -> VertexCode {
        VertexCode::new(self.names[self.root].clone())
    }

    fn neighbors(&self, x: &VertexCode) -> Result<Vec<(VertexCode, EdgeParams)>> {
        let i = *self
            .index
            .get(&x.0)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown vertex `{x}`")))?;
        Ok(self
            .net
            .neighbors(i)
            .map(|(j, p)| (VertexCode::new(self.names[j].clone()), p))
            .collect())
    }
}

/// Parses an admittance symbol `1`, `s` or `1/s`.
pub fn parse_symbol(sym: &str) -> Result<EdgeParams> {
    match sym.trim() {
        "1" => Ok(EdgeParams::unit_resistor()),
        "s" => Ok(EdgeParams::admittance_s()),
        "1/s" => Ok(EdgeParams::admittance_inv_s()),
        other => Err(Error::InvalidArgument(format!(
            "unknown admittance symbol `{other}`"
        ))),
    }
}

fn parse_params(v: &str) -> Result<EdgeParams> {
    let parts: Vec<&str> = v.split(';').collect();
    if parts.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "params `{v}` must be L;R;D"
        )));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("bad number `{s}` in params")))
    };
    EdgeParams::new(num(parts[0])?, num(parts[1])?, num(parts[2])?)
}

fn parse_assign(v: &str) -> Result<Vec<EdgeParams>> {
    v.split(',').map(parse_symbol).collect()
}

/// Resolves a generator URI:
///
/// ```text
/// line[:params=L;R;D]
/// grid2d[:params=L;R;D]
/// tree:b=<int>[:assign=<sym>,<sym>,...]
/// regtree:q=<int>[:params=L;R;D]
/// freegroup:k=<int>[:assign=<sym>,<sym>,...]
/// ```
///
/// where `<sym>` is `1`, `s` or `1/s`. Edge parameters default to a unit
/// resistor.
pub fn parse_generator(uri: &str) -> Result<Box<dyn GraphGenerator>> {
    let mut parts = uri.trim().split(':');
    let head = parts.next().unwrap_or_default();
    let mut opts: BTreeMap<&str, &str> = BTreeMap::new();
    for p in parts {
        let (k, v) = p.split_once('=').ok_or_else(|| {
            Error::UnknownGenerator(format!("{uri} (expected key=value, got `{p}`)"))
        })?;
        if opts.insert(k.trim(), v.trim()).is_some() {
            return Err(Error::UnknownGenerator(format!(
                "{uri} (repeated key `{k}`)"
            )));
        }
    }
    let allow = |keys: &[&str]| -> Result<()> {
        match opts.keys().find(|k| !keys.contains(k)) {
            Some(k) => Err(Error::UnknownGenerator(format!(
                "{uri} (unexpected key `{k}`)"
            ))),
            None => Ok(()),
        }
    };
    let params = || {
        opts.get("params")
            .map(|v| parse_params(v))
            .transpose()
            .map(|p| p.unwrap_or(EdgeParams::unit_resistor()))
    };
    let int = |key: &str| -> Result<usize> {
        opts.get(key)
            .ok_or_else(|| Error::UnknownGenerator(format!("{uri} (missing `{key}`)")))?
            .parse()
            .map_err(|_| Error::UnknownGenerator(format!("{uri} (`{key}` must be an integer)")))
    };
    match head {
        "line" => {
            allow(&["params"])?;
            Ok(Box::new(Line { params: params()? }))
        }
        "grid2d" => {
            allow(&["params"])?;
            Ok(Box::new(Grid2d { params: params()? }))
        }
        "tree" => {
            allow(&["b", "assign"])?;
            let assign = match opts.get("assign") {
                Some(v) => parse_assign(v)?,
                None => vec![EdgeParams::unit_resistor()],
            };
            Ok(Box::new(TreeGenerator::b_ary(int("b")?, &assign)?))
        }
        "regtree" => {
            allow(&["q", "params"])?;
            Ok(Box::new(TreeGenerator::regular(int("q")?, params()?)?))
        }
        "freegroup" => {
            allow(&["k", "assign"])?;
            let k = int("k")?;
            let assign = match opts.get("assign") {
                Some(v) => parse_assign(v)?,
                None => vec![EdgeParams::unit_resistor(); k],
            };
            let spec = freegrp::FreeGroupSpec::new(k, assign)?;
            Ok(Box::new(freegrp::cayley_generator(&spec)?))
        }
        _ => Err(Error::UnknownGenerator(uri.to_string())),
    }
}

/// Breadth-first ball around the generator root.
#[derive(Debug, Clone)]
pub struct Ball {
    codes: Vec<VertexCode>,
    index: HashMap<VertexCode, usize>,
    level: Vec<usize>,
    // level_end[n] = |V_n|
    level_end: Vec<usize>,
    // (i, j, params) with i < j, sorted by j
    edges: Vec<(usize, usize, EdgeParams)>,
    // full neighbour parameters, including neighbours outside the ball
    around: Vec<Vec<EdgeParams>>,
    truncated: bool,
}

impl Ball {
    /// Builds `V_radius`, stopping at the last complete sphere if the next
    /// one would exceed `max_vertices`.
    pub fn build(gen: &dyn GraphGenerator, radius: usize, max_vertices: usize) -> Result<Ball> {
        let root = gen.root();
        let mut codes = vec![root.clone()];
        let mut index = HashMap::from([(root, 0usize)]);
        let mut level = vec![0];
        let mut level_end = vec![1];
        let mut adj: Vec<Vec<(VertexCode, EdgeParams)>> = Vec::new();
        let mut truncated = false;
        let mut frontier: VecDeque<usize> = VecDeque::from([0]);
        for n in 1..=radius + 1 {
            let mut next = Vec::new();
            let mut added = Vec::new();
            let mut fresh: HashSet<VertexCode> = HashSet::new();
            for i in frontier.drain(..) {
                let nb = gen.neighbors(&codes[i])?;
                for (y, _) in &nb {
                    if n <= radius && !index.contains_key(y) && fresh.insert(y.clone()) {
                        added.push(y.clone());
                    }
                }
                if adj.len() <= i {
                    adj.resize(i + 1, Vec::new());
                }
                adj[i] = nb;
            }
            if n > radius {
                break;
            }
            if added.is_empty() {
                level_end.push(codes.len());
                continue;
            }
            if codes.len() + added.len() > max_vertices {
                truncated = true;
                // neighbours of the last sphere are already recorded
                break;
            }
            for y in added {
                index.insert(y.clone(), codes.len());
                next.push(codes.len());
                codes.push(y);
                level.push(n);
            }
            level_end.push(codes.len());
            frontier.extend(next);
        }
        let mut edges = Vec::new();
        let mut seen: HashMap<(usize, usize), EdgeParams> = HashMap::new();
        let mut around = Vec::with_capacity(codes.len());
        for (i, nb) in adj.iter().enumerate() {
            around.push(nb.iter().map(|&(_, p)| p).collect());
            for (y, p) in nb {
                if let Some(&j) = index.get(y) {
                    if i == j {
                        return Err(Error::InvalidNetwork(format!("loop at `{}`", codes[i])));
                    }
                    let key = (i.min(j), i.max(j));
                    match seen.get(&key) {
                        Some(q) if q != p => {
                            return Err(Error::InvalidNetwork(format!(
                                "edge {}-{} has asymmetric parameters",
                                codes[key.0], codes[key.1]
                            )))
                        }
                        Some(_) => {}
                        None => {
                            seen.insert(key, *p);
                            edges.push((key.0, key.1, *p));
                        }
                    }
                }
            }
        }
        edges.sort_by_key(|&(i, j, _)| (j, i));
        Ok(Ball {
            codes,
            index,
            level,
            level_end,
            edges,
            around,
            truncated,
        })
    }

    /// Largest complete radius.
    pub fn radius(&self) -> usize {
        self.level_end.len() - 1
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[VertexCode] {
        &self.codes
    }

    pub fn index_of(&self, x: &VertexCode) -> Option<usize> {
        self.index.get(x).copied()
    }

    /// Distance from the root.
    pub fn level_of(&self, i: usize) -> usize {
        self.level[i]
    }

    /// `|V_n|`.
    pub fn size_at(&self, n: usize) -> usize {
        self.level_end[n.min(self.radius())]
    }

    /// The sphere `S_n`.
    pub fn sphere(&self, n: usize) -> std::ops::Range<usize> {
        if n == 0 {
            0..1
        } else {
            self.level_end[n - 1]..self.level_end[n]
        }
    }

    /// Total weight around vertex `i`, counting neighbours outside the ball.
    pub fn mass(&self, i: usize, kind: OperatorKind) -> C64 {
        self.around[i].iter().map(|&p| kind.weight(p)).sum()
    }

    /// Edges with both ends in `V_n`.
    pub fn edges_within(&self, n: usize) -> &[(usize, usize, EdgeParams)] {
        let m = self.size_at(n);
        let end = self.edges.partition_point(|&(_, j, _)| j < m);
        &self.edges[..end]
    }

    /// The subnetwork induced on `V_n`.
    pub fn network(&self, n: usize) -> Result<FiniteNetwork> {
        FiniteNetwork::new(self.size_at(n), self.edges_within(n).iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExhaustBackend {
    /// Tree recursion for cone-typed trees, linear solves otherwise.
    #[default]
    Auto,
    /// Linear solves on every ball.
    Generic,
    /// Admittance recursion on cone-typed trees.
    Tree,
}

#[derive(Debug, Clone, Copy)]
pub struct ExhaustOptions {
    pub n_max: usize,
    pub tol: f64,
    pub max_vertices: usize,
    pub backend: ExhaustBackend,
}

impl Default for ExhaustOptions {
    fn default() -> Self {
        ExhaustOptions {
            n_max: 30,
            tol: 1e-9,
            max_vertices: 250_000,
            backend: ExhaustBackend::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExhaustionStatus {
    Converged,
    RecurrentZero,
    Undecided,
}

impl ExhaustionStatus {
    pub fn label(&self) -> &'static str {
        match self {
            ExhaustionStatus::Converged => "converged",
            ExhaustionStatus::RecurrentZero => "recurrent-zero",
            ExhaustionStatus::Undecided => "undecided",
        }
    }
}

/// Power-law fit `|1/P_n - 1/P_{n-1}| ~ c n^{-exponent}` on the tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    pub exponent: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Largest exponent of the resistance increments still read as divergent
/// growth of the resistance; 1 is the borderline, the slack absorbs
/// finite-size corrections on the plane lattice.
pub const RECURRENCE_EXPONENT: f64 = 1.25;

/// Required goodness of fit for the recurrence trend.
pub const RECURRENCE_R2: f64 = 0.99;

#[derive(Debug, Clone)]
pub struct ExhaustionTrace {
    pub radii: Vec<usize>,
    pub values: Vec<C64>,
    pub limit: Option<C64>,
    pub status: ExhaustionStatus,
    pub trend: Option<TrendFit>,
    /// Set when the ball hit the vertex cap before `n_max`.
    pub truncated: bool,
    pub backend: &'static str,
}

impl ExhaustionTrace {
    pub fn last(&self) -> Option<C64> {
        self.values.last().copied()
    }
}

fn converged_tail(values: &[C64], tol: f64) -> bool {
    values.len() >= 4
        && values[values.len() - 4..]
            .windows(2)
            .all(|w| (w[1] - w[0]).norm() < tol * (1.0 + w[1].norm()))
}

fn fit_trend(radii: &[usize], values: &[C64]) -> Option<TrendFit> {
    let start = radii.len() / 2;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in start.max(1)..radii.len() {
        if values[i].norm() == 0.0 || values[i - 1].norm() == 0.0 {
            return None;
        }
        let d = (C64::new(1.0, 0.0) / values[i] - C64::new(1.0, 0.0) / values[i - 1]).norm();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        xs.push((radii[i] as f64).ln());
        ys.push(d.ln());
    }
    if xs.len() < 6 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    // flat increments: the spread is rounding noise
    let r_squared = if syy <= 1e-16 * m {
        1.0
    } else {
        1.0 - ss_res / syy
    };
    Some(TrendFit {
        exponent: -slope,
        r_squared,
        points: xs.len(),
    })
}

fn decide(
    radii: &[usize],
    values: &[C64],
    tol: f64,
) -> (ExhaustionStatus, Option<C64>, Option<TrendFit>) {
    let trend = fit_trend(radii, values);
    if converged_tail(values, tol) {
        return (ExhaustionStatus::Converged, values.last().copied(), trend);
    }
    let Some(&last) = values.last() else {
        return (ExhaustionStatus::Undecided, None, None);
    };
    if last.norm() < tol {
        return (ExhaustionStatus::RecurrentZero, Some(C64::default()), trend);
    }
    let tail = &values[values.len() / 2..];
    let decreasing = tail
        .windows(2)
        .all(|w| w[1].norm() <= w[0].norm() * (1.0 + 1e-12));
    if let Some(t) = trend {
        if decreasing && t.exponent <= RECURRENCE_EXPONENT && t.r_squared >= RECURRENCE_R2 {
            return (ExhaustionStatus::RecurrentZero, Some(C64::default()), trend);
        }
    }
    (ExhaustionStatus::Undecided, None, trend)
}

/// Admittances and probe voltages for every radius of an exhaustion.
struct Sweep {
    radii: Vec<usize>,
    values: Vec<C64>,
    // probes[k][i]: voltage at probe i on radius radii[k]
    probes: Vec<Vec<C64>>,
    truncated: bool,
    backend: &'static str,
}

fn use_tree(gen: &dyn GraphGenerator, backend: ExhaustBackend) -> Result<Option<&TreeGenerator>> {
    match backend {
        ExhaustBackend::Generic => Ok(None),
        ExhaustBackend::Auto => Ok(gen.as_tree()),
        ExhaustBackend::Tree => gen.as_tree().map(Some).ok_or_else(|| {
            Error::InvalidArgument(format!("{} is not a cone-typed tree", gen.name()))
        }),
    }
}

fn sweep(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    grounded: &[VertexCode],
    kind: OperatorKind,
    opts: &ExhaustOptions,
    probes: &[VertexCode],
) -> Result<Sweep> {
    if grounded.contains(source) {
        return Err(Error::InvalidBoundary(
            "source lies in the grounded set".into(),
        ));
    }
    if opts.n_max == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("need n_max >= 1 and tol > 0".into()));
    }
    if let OperatorKind::AtT(t) = kind {
        OperatorKind::at_t(t)?;
    }
    match use_tree(gen, opts.backend)? {
        Some(tg) => tree_sweep(tg, source, grounded, kind, opts, probes),
        None => generic_sweep(gen, source, grounded, kind, opts, probes),
    }
}

fn generic_sweep(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    grounded: &[VertexCode],
    kind: OperatorKind,
    opts: &ExhaustOptions,
    probes: &[VertexCode],
) -> Result<Sweep> {
    let ball = Ball::build(gen, opts.n_max, opts.max_vertices)?;
    let a = ball.index_of(source).ok_or_else(|| {
        Error::InvalidBoundary(format!(
            "source `{source}` lies outside the ball of radius {}",
            ball.radius()
        ))
    })?;
    for x in probes {
        // probes must at least name valid vertices
        gen.neighbors(x)?;
    }
    let ground: Vec<usize> = grounded.iter().filter_map(|g| ball.index_of(g)).collect();
    let probe_idx: Vec<Option<usize>> = probes.iter().map(|x| ball.index_of(x)).collect();
    let mut out = Sweep {
        radii: Vec::new(),
        values: Vec::new(),
        probes: Vec::new(),
        truncated: ball.truncated(),
        backend: "linear-solve",
    };
    for n in 1..=ball.radius() {
        if ball.level_of(a) > n - 1 {
            continue;
        }
        let m = ball.size_at(n);
        let inner = ball.size_at(n - 1);
        let mut boundary: BTreeSet<usize> = ground.iter().copied().filter(|&g| g < inner).collect();
        boundary.extend(ball.sphere(n));
        let (value, voltages) = if boundary.is_empty() {
            (C64::default(), vec![C64::new(1.0, 0.0); m])
        } else {
            let net = ball.network(n)?;
            let spec = BoundarySpec::new(m, a, boundary)?;
            let eff = effective_admittance_with(&net, &spec, kind, Backend::Sparse)?;
            (eff.value, eff.solution.voltages)
        };
        out.radii.push(n);
        out.values.push(value);
        out.probes.push(
            probe_idx
                .iter()
                .map(|i| match i {
                    Some(i) if *i < m => voltages[*i],
                    _ => C64::default(),
                })
                .collect(),
        );
    }
    Ok(out)
}

/// Load seen from a vertex: `None` when the vertex is grounded.
type Load = Option<C64>;

fn through(rho: C64, load: Load) -> C64 {
    match load {
        None => rho,
        Some(y) => series_pair(rho, y),
    }
}

struct TreeState<'a> {
    tree: &'a ConeTree,
    kind: OperatorKind,
    // ytab[r][t]: admittance below a type-t vertex whose descendants at
    // distance r are grounded
    ytab: Vec<Vec<C64>>,
    ground: Vec<TreeAddress>,
    n: usize,
}

impl TreeState<'_> {
    fn weight(&self, p: EdgeParams) -> C64 {
        self.kind.weight(p)
    }

    /// Load of `w` seen from its parent.
    fn down_load(&self, w: &TreeAddress) -> Load {
        if w.depth() >= self.n || self.ground.contains(w) {
            return None;
        }
        let t = self.tree.type_at(w).expect("valid address");
        let r = self.n - w.depth();
        if !self
            .ground
            .iter()
            .any(|g| g.depth() > w.depth() && w.is_ancestor_of(g))
        {
            return Some(self.ytab[r][t]);
        }
        let y = self
            .tree
            .children_of(t)
            .iter()
            .enumerate()
            .map(|(i, &(_, p))| through(self.weight(p), self.down_load(&w.child(i))))
            .sum();
        Some(y)
    }

    /// Loads of the ancestors of `a`: entry `i` is the load of the depth-`i`
    /// ancestor seen from its child towards `a`.
    fn ancestor_loads(&self, a: &TreeAddress) -> Vec<Load> {
        let mut out: Vec<Load> = Vec::with_capacity(a.depth());
        for i in 0..a.depth() {
            let g = a.prefix(i);
            if self.ground.contains(&g) {
                out.push(None);
                continue;
            }
            let t = self.tree.type_at(&g).expect("valid address");
            let next = a.path()[i];
            let mut y: C64 = self
                .tree
                .children_of(t)
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != next)
                .map(|(j, &(_, p))| through(self.weight(p), self.down_load(&g.child(j))))
                .sum();
            if i > 0 {
                let up = self.tree.up_params(t).expect("non-root");
                y += through(self.weight(up), out[i - 1]);
            }
            out.push(Some(y));
        }
        out
    }

    fn admittance(&self, a: &TreeAddress, anc: &[Load]) -> C64 {
        let t = self.tree.type_at(a).expect("valid address");
        let mut y: C64 = self
            .tree
            .children_of(t)
            .iter()
            .enumerate()
            .map(|(i, &(_, p))| through(self.weight(p), self.down_load(&a.child(i))))
            .sum();
        if let Some(up) = self.tree.up_params(t) {
            y += through(self.weight(up), anc[a.depth() - 1]);
        }
        y
    }

    fn voltage(&self, a: &TreeAddress, anc: &[Load], x: &TreeAddress) -> C64 {
        let c = a.common_len(x);
        let mut v = C64::new(1.0, 0.0);
        for k in (c + 1..=a.depth()).rev() {
            let t = self.tree.type_at(&a.prefix(k)).expect("valid address");
            let rho = self.weight(self.tree.up_params(t).expect("non-root"));
            match anc[k - 1] {
                None => return C64::default(),
                Some(y) => v *= rho / (rho + y),
            }
        }
        for k in c + 1..=x.depth() {
            let w = x.prefix(k);
            let t = self.tree.type_at(&w).expect("valid address");
            let rho = self.weight(self.tree.up_params(t).expect("non-root"));
            match self.down_load(&w) {
                None => return C64::default(),
                Some(y) => v *= rho / (rho + y),
            }
        }
        v
    }
}

fn tree_sweep(
    tg: &TreeGenerator,
    source: &VertexCode,
    grounded: &[VertexCode],
    kind: OperatorKind,
    opts: &ExhaustOptions,
    probes: &[VertexCode],
) -> Result<Sweep> {
    let tree = tg.cone_tree();
    let a = tg.address_of(source)?;
    let ground: Vec<TreeAddress> = grounded
        .iter()
        .map(|g| tg.address_of(g))
        .collect::<Result<_>>()?;
    let probe_addr: Vec<TreeAddress> = probes
        .iter()
        .map(|x| tg.address_of(x))
        .collect::<Result<_>>()?;
    let nt = tree.type_count();
    let mut ytab = vec![vec![C64::default(); nt]; opts.n_max + 1];
    for t in 0..nt {
        ytab[1][t] = tree
            .children_of(t)
            .iter()
            .map(|&(_, p)| kind.weight(p))
            .sum();
    }
    for r in 2..=opts.n_max {
        for t in 0..nt {
            ytab[r][t] = tree
                .children_of(t)
                .iter()
                .map(|&(c, p)| series_pair(kind.weight(p), ytab[r - 1][c]))
                .sum();
        }
    }
    let mut out = Sweep {
        radii: Vec::new(),
        values: Vec::new(),
        probes: Vec::new(),
        truncated: false,
        backend: "tree-recursion",
    };
    for n in a.depth() + 1..=opts.n_max {
        let state = TreeState {
            tree,
            kind,
            ytab: ytab.clone(),
            ground: ground.iter().filter(|g| g.depth() < n).cloned().collect(),
            n,
        };
        let anc = state.ancestor_loads(&a);
        out.radii.push(n);
        out.values.push(state.admittance(&a, &anc));
        out.probes.push(
            probe_addr
                .iter()
                .map(|x| state.voltage(&a, &anc, x))
                .collect(),
        );
    }
    Ok(out)
}

/// Effective admittance from `source` to the grounded set and the spheres
/// `S_n`, for `n` up to `opts.n_max`.
pub fn exhaust_admittance(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    grounded: &[VertexCode],
    kind: OperatorKind,
    opts: &ExhaustOptions,
) -> Result<ExhaustionTrace> {
    let sw = sweep(gen, source, grounded, kind, opts, &[])?;
    Ok(trace_of(&sw, opts.tol))
}

fn trace_of(sw: &Sweep, tol: f64) -> ExhaustionTrace {
    let (mut status, mut limit, trend) = decide(&sw.radii, &sw.values, tol);
    // a growth trend cut short by the vertex cap is not evidence
    if sw.truncated && status == ExhaustionStatus::RecurrentZero {
        status = ExhaustionStatus::Undecided;
        limit = None;
    }
    ExhaustionTrace {
        radii: sw.radii.clone(),
        values: sw.values.clone(),
        limit,
        status,
        trend,
        truncated: sw.truncated,
        backend: sw.backend,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Transient,
    Recurrent,
    Undecided,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Transient => "transient",
            Verdict::Recurrent => "recurrent",
            Verdict::Undecided => "undecided",
        }
    }

    fn of(trace: &ExhaustionTrace, tol: f64) -> Verdict {
        match (trace.status, trace.limit) {
            (ExhaustionStatus::Converged, Some(l)) if l.norm() >= 10.0 * tol => Verdict::Transient,
            (ExhaustionStatus::Converged, _) | (ExhaustionStatus::RecurrentZero, _) => {
                Verdict::Recurrent
            }
            _ => Verdict::Undecided,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub verdict: Verdict,
    /// Trace and verdict per operator kind, in input order.
    pub traces: Vec<(OperatorKind, ExhaustionTrace, Verdict)>,
}

/// Classifies with one trace per operator kind and insists that all decided
/// traces agree.
pub fn classify_kinds(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    kinds: &[OperatorKind],
    opts: &ExhaustOptions,
) -> Result<Classification> {
    if kinds.is_empty() {
        return Err(Error::InvalidArgument(
            "no operator kinds to classify".into(),
        ));
    }
    let traces: Vec<(OperatorKind, ExhaustionTrace, Verdict)> = kinds
        .par_iter()
        .map(|&k| {
            let t = exhaust_admittance(gen, source, &[], k, opts)?;
            let v = Verdict::of(&t, opts.tol);
            Ok((k, t, v))
        })
        .collect::<Result<_>>()?;
    let reference = traces[0].2;
    if traces.iter().any(|t| t.2 == Verdict::Undecided) {
        return Ok(Classification {
            verdict: Verdict::Undecided,
            traces,
        });
    }
    if let Some(bad) = traces.iter().find(|t| t.2 != reference) {
        let residual = bad.1.last().map(|v| v.norm()).unwrap_or(0.0);
        return Err(Error::consistency(
            format!(
                "type independent of frequency ({} vs {})",
                reference.label(),
                bad.2.label()
            ),
            residual,
            10.0 * opts.tol,
        ));
    }
    Ok(Classification {
        verdict: reference,
        traces,
    })
}

/// Transient or recurrent from a set of frequencies, at least one of them
/// real; the real ones are tried first.
pub fn classify(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    samples: &[ComplexFrequency],
    opts: &ExhaustOptions,
) -> Result<Classification> {
    let mut ordered: Vec<ComplexFrequency> =
        samples.iter().copied().filter(|s| s.is_real()).collect();
    if ordered.is_empty() {
        return Err(Error::InvalidArgument(
            "classification needs a real frequency sample".into(),
        ));
    }
    ordered.extend(samples.iter().copied().filter(|s| !s.is_real()));
    let kinds: Vec<OperatorKind> = ordered.into_iter().map(OperatorKind::Complex).collect();
    classify_kinds(gen, source, &kinds, opts)
}

/// Verdict of every stochastic comparison operator of `s`.
pub fn classify_comparisons(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    s: ComplexFrequency,
    opts: &ExhaustOptions,
) -> Result<Classification> {
    classify_kinds(gen, source, &OperatorKind::comparison_kinds(s), opts)
}

/// Estimate of `F(x, a)` from the voltages on growing balls.
#[derive(Debug, Clone)]
pub struct KernelEntry {
    pub value: C64,
    /// Voltage on the largest ball.
    pub raw: C64,
    /// Limit estimate from the voltages. Equals `value` unless the network
    /// is recurrent, where `value` is 1 and this is kept as a residual check.
    pub estimate: C64,
    /// Extrapolated from radii `n/4, n/2, n` rather than read off.
    pub extrapolated: bool,
    /// `G(x, a) = F(x, a) G(a, a)` when the diagonal is available.
    pub green: Option<C64>,
}

#[derive(Debug, Clone)]
pub struct InfiniteKernels {
    pub source: VertexCode,
    pub kind: OperatorKind,
    pub grounded: Vec<VertexCode>,
    pub admittance: ExhaustionTrace,
    /// `rho(a)`.
    pub source_mass: C64,
    /// `G(a, a) = rho(a) / P(a -> infinity)`, absent when the limit vanishes.
    pub green_diagonal: Option<C64>,
    /// Recurrent with nothing grounded: every `F(x, a)` equals 1.
    pub recurrent: bool,
    pub window: Vec<VertexCode>,
    pub entries: BTreeMap<VertexCode, KernelEntry>,
}

impl InfiniteKernels {
    pub fn f(&self, x: &VertexCode) -> Result<C64> {
        self.entries
            .get(x)
            .map(|e| e.value)
            .ok_or_else(|| Error::InvalidArgument(format!("`{x}` was not probed")))
    }

    pub fn require_green_diagonal(&self) -> Result<C64> {
        self.green_diagonal.ok_or_else(|| {
            Error::InvalidArgument("admittance to infinity vanishes; G(a,a) is infinite".into())
        })
    }
}

/// Last value if the sequence has settled, otherwise the Aitken extrapolate
/// through the radii `n/4, n/2, n`.
fn limit_of(radii: &[usize], seq: &[C64], tol: f64) -> (C64, bool) {
    let k = seq.len();
    let raw = seq.last().copied().unwrap_or_default();
    if converged_tail(seq, tol) || k < 4 {
        return (raw, false);
    }
    let n = radii[k - 1];
    let at = |r: usize| seq[radii.partition_point(|&q| q < r).min(k - 1)];
    (aitken(at(n / 4), at(n / 2), raw), true)
}

fn aitken(x0: C64, x1: C64, x2: C64) -> C64 {
    let d0 = x1 - x0;
    let d1 = x2 - x1;
    let den = d1 - d0;
    if den.norm() <= 1e-14 * (1.0 + x2.norm()) {
        x2
    } else {
        x2 - d1 * d1 / den
    }
}

/// `G(a,a)`, `F(x,a)` and `G(x,a)` for `x` in `window` as limits of the
/// grounded-ball solutions.
///
/// The neighbours of `a` and of the window (and, on trees, the geodesics to
/// `a`) are probed as well so that the identity checks can use them.
pub fn infinite_kernels(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    grounded: &[VertexCode],
    kind: OperatorKind,
    window: &[VertexCode],
    opts: &ExhaustOptions,
) -> Result<InfiniteKernels> {
    let mut probe_set: BTreeSet<VertexCode> = BTreeSet::new();
    probe_set.insert(source.clone());
    let mut source_mass = C64::default();
    for (y, p) in gen.neighbors(source)? {
        source_mass += kind.weight(p);
        probe_set.insert(y);
    }
    for x in window {
        probe_set.insert(x.clone());
        for (y, _) in gen.neighbors(x)? {
            probe_set.insert(y);
        }
        if let Some(tg) = gen.as_tree() {
            let (ax, aa) = (tg.address_of(x)?, tg.address_of(source)?);
            for g in ax.geodesic(&aa) {
                probe_set.insert(tg.code_of(&g)?);
            }
        }
    }
    let probes: Vec<VertexCode> = probe_set.into_iter().collect();
    let sw = sweep(gen, source, grounded, kind, opts, &probes)?;
    let trace = trace_of(&sw, opts.tol);
    let recurrent = grounded.is_empty() && trace.status == ExhaustionStatus::RecurrentZero;
    let green_diagonal = match (trace.status, trace.limit) {
        (ExhaustionStatus::Converged, Some(l)) if l.norm() >= 10.0 * opts.tol => {
            Some(source_mass / l)
        }
        _ => None,
    };
    let mut entries = BTreeMap::new();
    for (i, x) in probes.iter().enumerate() {
        let seq: Vec<C64> = sw.probes.iter().map(|row| row[i]).collect();
        let raw = seq.last().copied().unwrap_or_default();
        let (estimate, extrapolated) = if x == source {
            (C64::new(1.0, 0.0), false)
        } else {
            limit_of(&sw.radii, &seq, opts.tol)
        };
        let value = if recurrent {
            C64::new(1.0, 0.0)
        } else {
            estimate
        };
        entries.insert(
            x.clone(),
            KernelEntry {
                value,
                raw,
                estimate,
                extrapolated,
                green: green_diagonal.map(|g| g * value),
            },
        );
    }
    Ok(InfiniteKernels {
        source: source.clone(),
        kind,
        grounded: grounded.to_vec(),
        admittance: trace,
        source_mass,
        green_diagonal,
        recurrent,
        window: window.to_vec(),
        entries,
    })
}

#[derive(Debug, Clone)]
pub struct IdentityReport {
    /// `|G(a,a) (1 - U(a,a)) - 1|`.
    pub return_identity: Option<f64>,
    /// `|U(a,a) - (1 - 1/G(a,a))|`.
    pub return_rearranged: Option<f64>,
    /// `|F(x,a) - sum_y p(x,y) F(y,a)|` for `x` in the window, `x != a`.
    pub harmonicity: Vec<(VertexCode, f64)>,
    /// `|F(x,a) - F(x,y) F(y,a)|` for cut vertices `y` between `x` and `a`.
    pub factorization: Vec<(VertexCode, VertexCode, f64)>,
    pub tolerance: f64,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        let mut w: f64 = 0.0;
        for r in [self.return_identity, self.return_rearranged]
            .into_iter()
            .flatten()
        {
            w = w.max(r);
        }
        for (_, r) in &self.harmonicity {
            w = w.max(*r);
        }
        for (_, _, r) in &self.factorization {
            w = w.max(*r);
        }
        w
    }

    pub fn passed(&self) -> bool {
        self.worst() <= self.tolerance
    }
}

/// Checks `G(a,a)(1 - U(a,a)) = 1`, harmonicity of `F(., a)` off `a`, and on
/// trees the factorisation of `F` at cut vertices, using fresh exhaustions
/// for the intermediate targets.
pub fn kernel_identities_check(
    kernels: &InfiniteKernels,
    gen: &dyn GraphGenerator,
    opts: &ExhaustOptions,
) -> Result<IdentityReport> {
    let kind = kernels.kind;
    let a = &kernels.source;
    let mut u = C64::default();
    for (x, p) in gen.neighbors(a)? {
        u += kind.weight(p) / kernels.source_mass * kernels.f(&x)?;
    }
    let one = C64::new(1.0, 0.0);
    let (return_identity, return_rearranged) = match kernels.green_diagonal {
        Some(g) => (
            Some((g * (one - u) - one).norm()),
            Some((u - (one - one / g)).norm()),
        ),
        None => (None, None),
    };
    let mut harmonicity = Vec::new();
    for x in kernels
        .window
        .iter()
        .filter(|x| *x != a && !kernels.grounded.contains(x))
    {
        let nb = gen.neighbors(x)?;
        let mass: C64 = nb.iter().map(|&(_, p)| kind.weight(p)).sum();
        let mut acc = C64::default();
        for (y, p) in nb {
            acc += kind.weight(p) / mass * kernels.f(&y)?;
        }
        harmonicity.push((x.clone(), (acc - kernels.f(x)?).norm()));
    }
    let mut factorization = Vec::new();
    if let Some(tg) = gen.as_tree() {
        let aa = tg.address_of(a)?;
        for x in &kernels.window {
            let ax = tg.address_of(x)?;
            let geo = ax.geodesic(&aa);
            if geo.len() < 3 {
                continue;
            }
            for y in &geo[1..geo.len() - 1] {
                let yc = tg.code_of(y)?;
                let sw = sweep(
                    gen,
                    &yc,
                    &kernels.grounded,
                    kind,
                    opts,
                    std::slice::from_ref(x),
                )?;
                let seq: Vec<C64> = sw.probes.iter().map(|r| r[0]).collect();
                let (fxy, _) = limit_of(&sw.radii, &seq, opts.tol);
                let res = (kernels.f(x)? - fxy * kernels.f(&yc)?).norm();
                factorization.push((x.clone(), yc, res));
            }
        }
    }
    Ok(IdentityReport {
        return_identity,
        return_rearranged,
        harmonicity,
        factorization,
        tolerance: tol::EXHAUSTION_IDENTITY,
    })
}

/// Residual of `p(x,y) (1 - F(x,y) F(y,x)) = F(x,y) (1 - U(x,x))` for
/// neighbours `x, y`, with every kernel taken from exhaustions targeted at
/// `x` and at `y`.
pub fn tree_edge_identity(
    gen: &dyn GraphGenerator,
    x: &VertexCode,
    y: &VertexCode,
    kind: OperatorKind,
    opts: &ExhaustOptions,
) -> Result<f64> {
    let nb = gen.neighbors(x)?;
    let p_xy = nb
        .iter()
        .find(|(w, _)| w == y)
        .map(|&(_, p)| kind.weight(p))
        .ok_or_else(|| Error::InvalidArgument(format!("`{x}` and `{y}` are not neighbours")))?;
    let mass: C64 = nb.iter().map(|&(_, p)| kind.weight(p)).sum();
    let at_x = infinite_kernels(gen, x, &[], kind, &[], opts)?;
    let at_y = infinite_kernels(gen, y, &[], kind, &[], opts)?;
    let f_xy = at_y.f(x)?;
    let f_yx = at_x.f(y)?;
    let mut u = C64::default();
    for (w, p) in &nb {
        u += kind.weight(*p) / mass * at_x.f(w)?;
    }
    let one = C64::new(1.0, 0.0);
    Ok((p_xy / mass * (one - f_xy * f_yx) - f_xy * (one - u)).norm())
}

/// Growth-rate estimates of `|p^{(n)}(x,y)|`.
#[derive(Debug, Clone)]
pub struct LambdaEstimate {
    pub x: VertexCode,
    pub y: VertexCode,
    pub steps: usize,
    /// `max(|p^{(n-1)}|^{1/(n-1)}, |p^{(n)}|^{1/n})`.
    pub root: f64,
    /// `|p^{(m)} / p^{(m-2)}|^{1/2}` at the largest `m <= n` with nonzero
    /// entries; converges faster than the root when the decay is polynomial.
    pub ratio: Option<f64>,
    /// `(m, |p^{(m)}|^{1/m})` at ten evenly spaced `m`.
    pub trend: Vec<(usize, f64)>,
    pub method: &'static str,
}

/// Estimates of `limsup |p^{(n)}(x,y)|^{1/n}` from exact `n`-step
/// transition values.
pub fn pairwise_lambda_estimate(
    gen: &dyn GraphGenerator,
    kind: OperatorKind,
    pairs: &[(VertexCode, VertexCode)],
    n: usize,
    max_vertices: usize,
) -> Result<Vec<LambdaEstimate>> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two steps".into()));
    }
    pairs
        .par_iter()
        .map(|(x, y)| {
            let (coeffs, method) = match gen.as_tree() {
                Some(tg) => {
                    let ax = tg.address_of(x)?;
                    let ay = tg.address_of(y)?;
                    (
                        tree_step_values(tg.cone_tree(), kind, &ax, &ay, n)?,
                        "first-passage series",
                    )
                }
                None => (
                    ball_step_values(gen, kind, x, y, n, max_vertices)?,
                    "matrix powers",
                ),
            };
            Ok(summarise(x, y, &coeffs, method))
        })
        .collect()
}

fn summarise(x: &VertexCode, y: &VertexCode, c: &[C64], method: &'static str) -> LambdaEstimate {
    let n = c.len() - 1;
    let root_at = |m: usize| {
        if m == 0 {
            0.0
        } else {
            c[m].norm().powf(1.0 / m as f64)
        }
    };
    let root = root_at(n).max(root_at(n - 1));
    let ratio = (2..=n)
        .rev()
        .find(|&m| c[m].norm() > 0.0 && c[m - 2].norm() > 0.0)
        .map(|m| (c[m].norm() / c[m - 2].norm()).sqrt());
    let trend = (1..=10)
        .map(|i| (i * n / 10).max(1))
        .map(|m| (m, root_at(m)))
        .collect();
    LambdaEstimate {
        x: x.clone(),
        y: y.clone(),
        steps: n,
        root,
        ratio,
        trend,
        method,
    }
}

/// `p^{(m)}(x,y)` for `m = 0..=n` by sparse powers on a ball large enough
/// that no `n`-step walk from `x` to `y` leaves it.
pub fn ball_step_values(
    gen: &dyn GraphGenerator,
    kind: OperatorKind,
    x: &VertexCode,
    y: &VertexCode,
    n: usize,
    max_vertices: usize,
) -> Result<Vec<C64>> {
    let mut probe = 1;
    let (dx, dy) = loop {
        let ball = Ball::build(gen, probe, max_vertices)?;
        if let (Some(i), Some(j)) = (ball.index_of(x), ball.index_of(y)) {
            break (ball.level_of(i), ball.level_of(j));
        }
        if ball.truncated() || ball.radius() < probe {
            return Err(Error::InvalidArgument(format!(
                "`{x}` or `{y}` not reachable within the vertex cap"
            )));
        }
        probe *= 2;
    };
    let radius = dx.max(dy) + n.div_ceil(2) + 1;
    let ball = Ball::build(gen, radius, max_vertices)?;
    if ball.truncated() {
        return Err(Error::CapExceeded(format!(
            "ball of radius {radius} exceeds {max_vertices} vertices"
        )));
    }
    let m = ball.len();
    let mass: Vec<C64> = (0..m).map(|i| ball.mass(i, kind)).collect();
    let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); m];
    for &(i, j, p) in ball.edges_within(ball.radius()) {
        let w = kind.weight(p);
        rows[i].push((j, w / mass[i]));
        rows[j].push((i, w / mass[j]));
    }
    let (xi, yi) = (
        ball.index_of(x).expect("in ball"),
        ball.index_of(y).expect("in ball"),
    );
    let mut u = vec![C64::default(); m];
    u[xi] = C64::new(1.0, 0.0);
    let mut out = vec![u[yi]];
    for _ in 0..n {
        let mut next = vec![C64::default(); m];
        for (v, row) in rows.iter().enumerate() {
            let uv = u[v];
            if uv.norm() == 0.0 {
                continue;
            }
            for &(w, p) in row {
                next[w] += uv * p;
            }
        }
        u = next;
        out.push(u[yi]);
    }
    Ok(out)
}

/// Truncated power series in `z`.
#[derive(Debug, Clone)]
struct Series(Vec<C64>);

impl Series {
    fn zero(n: usize) -> Self {
        Series(vec![C64::default(); n + 1])
    }

    fn one(n: usize) -> Self {
        let mut s = Self::zero(n);
        s.0[0] = C64::new(1.0, 0.0);
        s
    }

    fn mul(&self, other: &Series) -> Series {
        let n = self.0.len() - 1;
        let mut out = Self::zero(n);
        for (i, a) in self.0.iter().enumerate() {
            if a.norm() == 0.0 {
                continue;
            }
            for (j, b) in other.0[..=n - i].iter().enumerate() {
                out.0[i + j] += a * b;
            }
        }
        out
    }

    fn scale(&self, c: C64) -> Series {
        Series(self.0.iter().map(|a| a * c).collect())
    }

    fn add(&mut self, other: &Series) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    /// Multiplication by `z`.
    fn shift(&self) -> Series {
        let n = self.0.len() - 1;
        let mut out = Self::zero(n);
        out.0[1..].copy_from_slice(&self.0[..n]);
        out
    }

    /// `1 / (1 - self)` for a series without constant term.
    fn geometric(&self) -> Series {
        debug_assert!(self.0[0].norm() == 0.0);
        let n = self.0.len() - 1;
        let mut out = Self::one(n);
        for k in 1..=n {
            let mut acc = C64::default();
            for i in 1..=k {
                acc += self.0[i] * out.0[k - i];
            }
            out.0[k] = acc;
        }
        out
    }
}

/// `p^{(m)}(x,y)` for `m = 0..=n` on a cone-typed tree from the power series
/// of the first-passage functions, `p^{(m)} = [z^m] F(x,y|z) G(y,y|z)`.
pub fn tree_step_values(
    tree: &ConeTree,
    kind: OperatorKind,
    x: &TreeAddress,
    y: &TreeAddress,
    n: usize,
) -> Result<Vec<C64>> {
    tree.type_at(x)?;
    tree.type_at(y)?;
    let nt = tree.type_count();
    let mass: Vec<C64> = (0..nt).map(|t| tree.mass(t, kind)).collect();
    let p_up: Vec<C64> = (0..nt)
        .map(|t| {
            tree.up_params(t)
                .map(|p| kind.weight(p) / mass[t])
                .unwrap_or_default()
        })
        .collect();
    // down[t][k]: [z^k] F(v, v^- | z) for v of type t
    let mut down = vec![vec![C64::default(); n + 1]; nt];
    for k in 1..=n {
        for t in 0..nt {
            if tree.up_params(t).is_none() {
                continue;
            }
            let mut acc = if k == 1 { p_up[t] } else { C64::default() };
            if k >= 3 {
                for &(c, p) in tree.children_of(t) {
                    let pc = kind.weight(p) / mass[t];
                    let mut conv = C64::default();
                    for i in 1..=k - 2 {
                        conv += down[c][i] * down[t][k - 1 - i];
                    }
                    acc += pc * conv;
                }
            }
            down[t][k] = acc;
        }
    }
    let down: Vec<Series> = down.into_iter().map(Series).collect();

    // F(v^-, v | z) along the root geodesic of `v`
    let chain = |v: &TreeAddress| -> Vec<Series> {
        let mut out: Vec<Series> = Vec::with_capacity(v.depth());
        let mut t = tree.root_type();
        for (k, &i) in v.path().iter().enumerate() {
            let mut other = Series::zero(n);
            for (j, &(c, p)) in tree.children_of(t).iter().enumerate() {
                if j != i {
                    other.add(&down[c].scale(kind.weight(p) / mass[t]));
                }
            }
            if k > 0 {
                other.add(&out[k - 1].scale(p_up[t]));
            }
            let (ct, cp) = tree.children_of(t)[i];
            let f = other
                .shift()
                .geometric()
                .shift()
                .scale(kind.weight(cp) / mass[t]);
            out.push(f);
            t = ct;
        }
        out
    };
    let c = x.common_len(y);
    let mut f = Series::one(n);
    for k in (c + 1..=x.depth()).rev() {
        let t = tree.type_at(&x.prefix(k))?;
        f = f.mul(&down[t]);
    }
    let ychain = chain(y);
    for s in &ychain[c..] {
        f = f.mul(s);
    }
    // U(y, y | z)
    let ty = tree.type_at(y)?;
    let mut u = Series::zero(n);
    for &(ct, p) in tree.children_of(ty) {
        u.add(&down[ct].scale(kind.weight(p) / mass[ty]));
    }
    if let Some(last) = ychain.last() {
        u.add(&last.scale(p_up[ty]));
    }
    let g = u.shift().geometric();
    Ok(f.mul(&g).0)
}

/// Dirichlet energy of the largest-ball voltages restricted to smaller balls,
/// compared with the admittance. Probes the energy identity at infinity; the
/// gap is reported, never asserted.
#[derive(Debug, Clone)]
pub struct EnergyProbe {
    pub n_max: usize,
    pub admittance: C64,
    /// `(m, sum over edges of V_m of |v(x) - v(y)|^2 rho(x,y))`.
    pub energies: Vec<(usize, C64)>,
    /// `|energy(m) - admittance|`.
    pub gaps: Vec<(usize, f64)>,
}

pub fn energy_probe(
    gen: &dyn GraphGenerator,
    source: &VertexCode,
    kind: OperatorKind,
    opts: &ExhaustOptions,
) -> Result<EnergyProbe> {
    let ball = Ball::build(gen, opts.n_max, opts.max_vertices)?;
    let n = ball.radius();
    let a = ball
        .index_of(source)
        .ok_or_else(|| Error::InvalidBoundary(format!("source `{source}` outside the ball")))?;
    if ball.level_of(a) >= n {
        return Err(Error::InvalidBoundary(
            "source must lie inside the largest ball".into(),
        ));
    }
    let net = ball.network(n)?;
    let spec = BoundarySpec::new(ball.len(), a, ball.sphere(n))?;
    let eff = effective_admittance_with(&net, &spec, kind, Backend::Sparse)?;
    let v = &eff.solution.voltages;
    let mut energies = Vec::new();
    let mut gaps = Vec::new();
    for m in 1..=n {
        let e: C64 = ball
            .edges_within(m)
            .iter()
            .map(|&(i, j, p)| (v[i] - v[j]).norm_sqr() * kind.weight(p))
            .sum();
        energies.push((m, e));
        gaps.push((m, (e - eff.value).norm()));
    }
    Ok(EnergyProbe {
        n_max: n,
        admittance: eff.value,
        energies,
        gaps,
    })
}
