//! Dense and envelope-sparse complex linear algebra used by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::netcore::C64;

/// Dense LU solve followed by one step of iterative refinement.
pub fn solve_dense(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    let lu = a.clone().lu();
    let mut x = lu
        .solve(b)
        .ok_or_else(|| Error::Singular("factoring a dense system".into()))?;
    let r = b - a * &x;
    if let Some(dx) = lu.solve(&r) {
        x += dx;
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular("solving a dense system".into()));
    }
    Ok(x)
}

pub fn invert_dense(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let id = DMatrix::<C64>::identity(n, n);
    let mut inv = lu
        .solve(&id)
        .ok_or_else(|| Error::Singular("inverting a dense matrix".into()))?;
    let r = &id - a * &inv;
    if let Some(d) = lu.solve(&r) {
        inv += d;
    }
    if inv.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular("inverting a dense matrix".into()));
    }
    Ok(inv)
}

/// `L D L^T` factorisation of a complex symmetric matrix stored by its
/// lower envelope, without pivoting.
///
/// Elimination without pivoting is stable when the real part of the matrix
/// is positive definite, which holds for every grounded network matrix
/// `diag(rho(x)) - rho(x,y)` with `Re rho > 0`. Profile cost is small for
/// breadth-first orderings of balls.
#[derive(Debug, Clone)]
pub struct SymmetricEnvelope {
    first: Vec<usize>,
    offset: Vec<usize>,
    // row i holds L[i, first[i]..i] followed by D[i]
    vals: Vec<C64>,
}

impl SymmetricEnvelope {
    /// `lower[i]` lists `(j, a_ij)` with `j <= i`; duplicates are summed.
    pub fn factor(lower: &[Vec<(usize, C64)>]) -> Result<Self> {
        let n = lower.len();
        let mut first = Vec::with_capacity(n);
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for (i, row) in lower.iter().enumerate() {
            let f = row.iter().map(|&(j, _)| j).min().unwrap_or(i).min(i);
            if row.iter().any(|&(j, _)| j > i) {
                return Err(Error::InvalidArgument(
                    "envelope rows must be lower triangular".into(),
                ));
            }
            first.push(f);
            offset.push(offset[i] + (i - f) + 1);
        }
        let mut vals = vec![C64::default(); offset[n]];
        for (i, row) in lower.iter().enumerate() {
            for &(j, a) in row {
                vals[offset[i] + (j - first[i])] += a;
            }
        }
        let mut env = SymmetricEnvelope {
            first,
            offset,
            vals,
        };
        env.eliminate()?;
        Ok(env)
    }

    fn eliminate(&mut self) -> Result<()> {
        let n = self.first.len();
        let mut w = Vec::new();
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            // w[k - fi] = L[i,k] * D[k]
            w.clear();
            for j in fi..i {
                let fj = self.first[j];
                let oj = self.offset[j];
                let lo = fi.max(fj);
                let mut t = self.vals[oi + (j - fi)];
                for k in lo..j {
                    t -= w[k - fi] * self.vals[oj + (k - fj)];
                }
                w.push(t);
                let dj = self.vals[oj + (j - fj)];
                self.vals[oi + (j - fi)] = t / dj;
            }
            let mut d = self.vals[oi + (i - fi)];
            for k in fi..i {
                d -= w[k - fi] * self.vals[oi + (k - fi)];
            }
            if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                return Err(Error::Singular(format!(
                    "eliminating row {i} of an envelope matrix"
                )));
            }
            self.vals[oi + (i - fi)] = d;
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.size();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            let mut t = x[i];
            for k in fi..i {
                t -= self.vals[oi + (k - fi)] * x[k];
            }
            x[i] = t;
        }
        for i in 0..n {
            x[i] /= self.vals[self.offset[i] + (i - self.first[i])];
        }
        // backward: L^T x = y, column-oriented over the stored rows
        for i in (0..n).rev() {
            let fi = self.first[i];
            let oi = self.offset[i];
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.vals[oi + (k - fi)] * xi;
            }
        }
        x
    }
}

/// All eigenvalues of a complex square matrix via a Schur decomposition.
pub fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = m
        .clone()
        .try_schur(1e-15, 10_000 * n)
        .ok_or_else(|| Error::NotConverged("Schur iteration".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}
