//! Eigenvalues of tiny matrices from the characteristic polynomial.

use crate::error::{Error, Result};
use crate::netcore::C64;

pub const MAX_ORDER: usize = 8;

/// Coefficients `c_0..c_n` of `det(lambda I - M) = sum c_k lambda^k`
/// (Faddeev-LeVerrier), `m` given by rows.
pub fn charpoly(m: &[Vec<C64>]) -> Result<Vec<C64>> {
    let n = m.len();
    if n > MAX_ORDER || m.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument(format!(
            "need a square matrix of order <= {MAX_ORDER}"
        )));
    }
    let mut c = vec![C64::default(); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut mk = vec![vec![C64::default(); n]; n];
    for k in 1..=n {
        // M_k = M M_{k-1} + c_{n-k+1} I
        let mut next = vec![vec![C64::default(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut s = C64::default();
                for l in 0..n {
                    s += m[i][l] * mk[l][j];
                }
                next[i][j] = s;
            }
            next[i][i] += c[n - k + 1];
        }
        mk = next;
        let mut tr = C64::default();
        for i in 0..n {
            for l in 0..n {
                tr += m[i][l] * mk[l][i];
            }
        }
        c[n - k] = -tr / k as f64;
    }
    Ok(c)
}

/// Roots of the characteristic polynomial by Durand-Kerner iteration.
pub fn charpoly_eigenvalues(m: &[Vec<C64>]) -> Result<Vec<C64>> {
    let c = charpoly(m)?;
    let n = m.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let eval = |z: C64| c.iter().rev().fold(C64::default(), |acc, &a| acc * z + a);
    let bound = 1.0 + c[..n].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * bound * 0.5).collect();
    for _ in 0..5000 {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            if den.norm() == 0.0 {
                roots[i] += C64::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(roots[i]) / den;
            roots[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 * bound {
            break;
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn companion_roots() {
        // eigenvalues 1, 2, 3
        let r = |x: f64| C64::new(x, 0.0);
        let m = vec![
            vec![r(1.0), r(1.0), r(0.0)],
            vec![r(0.0), r(2.0), r(1.0)],
            vec![r(0.0), r(0.0), r(3.0)],
        ];
        let mut ev: Vec<f64> = charpoly_eigenvalues(&m)
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
