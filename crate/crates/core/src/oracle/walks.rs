//! Walk enumeration with `z`-weights.

use crate::error::{Error, Result};
use crate::netcore::{FiniteNetwork, OperatorKind, C64};

pub const MAX_STEPS: usize = 10;
pub const MAX_SUBSET: usize = 8;

/// Transition rows `p(x, y) = w(x, y) / sum_y w(x, y)` computed straight
/// from the edge list.
pub fn transition_rows(net: &FiniteNetwork, kind: OperatorKind) -> Vec<Vec<(usize, C64)>> {
    let n = net.vertex_count();
    let mut rows = vec![Vec::new(); n];
    let mut mass = vec![C64::default(); n];
    for e in net.edges() {
        let w = kind.weight(e.params);
        rows[e.u].push((e.v, w));
        rows[e.v].push((e.u, w));
        mass[e.u] += w;
        mass[e.v] += w;
    }
    for (x, row) in rows.iter_mut().enumerate() {
        for (_, w) in row.iter_mut() {
            *w /= mass[x];
        }
    }
    rows
}

fn check(net: &FiniteNetwork, subset: &[usize], k: usize, ends: &[usize]) -> Result<()> {
    if k > MAX_STEPS || subset.len() > MAX_SUBSET {
        return Err(Error::CapExceeded(format!(
            "walk enumeration limited to {MAX_STEPS} steps in {MAX_SUBSET} vertices"
        )));
    }
    if subset.iter().chain(ends).any(|&v| v >= net.vertex_count()) {
        return Err(Error::InvalidArgument("vertex out of range".into()));
    }
    Ok(())
}

fn enumerate(
    rows: &[Vec<(usize, C64)>],
    allowed: &dyn Fn(usize, usize) -> bool,
    at: usize,
    target: usize,
    left: usize,
    step: usize,
    weight: C64,
    z: C64,
    acc: &mut C64,
) {
    if left == 0 {
        if at == target {
            *acc += weight;
        }
        return;
    }
    for &(y, p) in &rows[at] {
        if allowed(y, step + 1) {
            enumerate(
                rows,
                allowed,
                y,
                target,
                left - 1,
                step + 1,
                weight * p * z,
                z,
                acc,
            );
        }
    }
}

/// Sum of `prod p(x_{i-1}, x_i) z` over walks of exactly `k` steps from `x`
/// to `y` that stay in `subset`.
pub fn walk_weight_sum(
    net: &FiniteNetwork,
    subset: &[usize],
    x: usize,
    y: usize,
    k: usize,
    z: C64,
    kind: OperatorKind,
) -> Result<C64> {
    check(net, subset, k, &[x, y])?;
    if !subset.contains(&x) || !subset.contains(&y) {
        return Ok(C64::default());
    }
    let rows = transition_rows(net, kind);
    let mut acc = C64::default();
    enumerate(
        &rows,
        &|v, _| subset.contains(&v),
        x,
        y,
        k,
        0,
        C64::new(1.0, 0.0),
        z,
        &mut acc,
    );
    Ok(acc)
}

/// As [`walk_weight_sum`] for walks that reach `a` only at step `k`; the
/// intermediate vertices lie in `subset` minus `a`. The empty walk counts
/// when `x = a` and `k = 0`.
pub fn first_visit_weight_sum(
    net: &FiniteNetwork,
    subset: &[usize],
    x: usize,
    a: usize,
    k: usize,
    z: C64,
    kind: OperatorKind,
) -> Result<C64> {
    check(net, subset, k, &[x, a])?;
    if k == 0 {
        return Ok(if x == a {
            C64::new(1.0, 0.0)
        } else {
            C64::default()
        });
    }
    let rows = transition_rows(net, kind);
    let mut acc = C64::default();
    let allowed = |v: usize, step: usize| {
        if step == k {
            v == a
        } else {
            v != a && subset.contains(&v)
        }
    };
    enumerate(&rows, &allowed, x, a, k, 0, C64::new(1.0, 0.0), z, &mut acc);
    Ok(acc)
}

/// `(P_U^k)(x, y)` by repeated row-vector products.
pub fn matrix_power_entry(
    net: &FiniteNetwork,
    subset: &[usize],
    x: usize,
    y: usize,
    k: usize,
    kind: OperatorKind,
) -> C64 {
    let rows = transition_rows(net, kind);
    let n = net.vertex_count();
    let inside = |v: usize| subset.contains(&v);
    if !inside(x) || !inside(y) {
        return C64::default();
    }
    let mut u = vec![C64::default(); n];
    u[x] = C64::new(1.0, 0.0);
    for _ in 0..k {
        let mut next = vec![C64::default(); n];
        for v in 0..n {
            if u[v] == C64::default() {
                continue;
            }
            for &(w, p) in &rows[v] {
                if inside(w) {
                    next[w] += u[v] * p;
                }
            }
        }
        u = next;
    }
    u[y]
}
