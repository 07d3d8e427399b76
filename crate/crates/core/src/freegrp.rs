//! Free groups with symmetric nearest-neighbour admittances.
//!
//! Letters are the nonzero integers `±1..±k`; the vertex for a reduced word
//! is its letters joined by commas, and `e` is the identity.

use crate::error::{Error, Result};
use crate::exhaust::{tree_step_values, TreeGenerator, TreeNaming};
use crate::netcore::{ComplexFrequency, EdgeParams, OperatorKind, C64};
use crate::tree::{ConeTree, TreeAddress};

/// Letter order used for children: `1, -1, 2, -2, ...`.
pub fn letters(k: usize) -> Vec<i64> {
    (1..=k as i64).flat_map(|j| [j, -j]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeGroupSpec {
    k: usize,
    assign: Vec<EdgeParams>,
}

impl FreeGroupSpec {
    /// `assign` is cycled over the generators `a_1..a_k`; `a_{-j}` carries
    /// the same parameters as `a_j`.
    pub fn new(k: usize, assign: Vec<EdgeParams>) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidArgument(
                "a free group needs k >= 2 generators".into(),
            ));
        }
        if assign.is_empty() {
            return Err(Error::InvalidArgument("empty generator assignment".into()));
        }
        let assign = (0..k).map(|j| assign[j % assign.len()]).collect();
        Ok(FreeGroupSpec { k, assign })
    }

    /// `l1` generators with admittance `s`, `l2` with `1/s`, the rest `1`.
    pub fn symbolic(k: usize, l1: usize, l2: usize) -> Result<Self> {
        if l1 + l2 > k {
            return Err(Error::InvalidArgument("l1 + l2 exceeds k".into()));
        }
        let mut assign = vec![EdgeParams::admittance_s(); l1];
        assign.extend(vec![EdgeParams::admittance_inv_s(); l2]);
        assign.extend(vec![EdgeParams::unit_resistor(); k - l1 - l2]);
        Self::new(k, assign)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn params(&self, j: usize) -> EdgeParams {
        self.assign[j]
    }

    /// `(l1, l2, l3)` when every generator is one of the symbols `s`, `1/s`, `1`.
    pub fn symbol_counts(&self) -> Option<(usize, usize, usize)> {
        let mut c = (0, 0, 0);
        for p in &self.assign {
            if *p == EdgeParams::admittance_s() {
                c.0 += 1;
            } else if *p == EdgeParams::admittance_inv_s() {
                c.1 += 1;
            } else if *p == EdgeParams::unit_resistor() {
                c.2 += 1;
            } else {
                return None;
            }
        }
        Some(c)
    }
}

/// The Cayley graph: the `2k`-regular tree of reduced words.
pub fn cayley_generator(spec: &FreeGroupSpec) -> Result<TreeGenerator> {
    let lets = letters(spec.k);
    let type_of = |l: i64| lets.iter().position(|&m| m == l).expect("letter") + 1;
    let params_of = |l: i64| spec.assign[(l.unsigned_abs() - 1) as usize];
    let mut children = vec![lets
        .iter()
        .map(|&l| (type_of(l), params_of(l)))
        .collect::<Vec<_>>()];
    for &l in &lets {
        children.push(
            lets.iter()
                .filter(|&&m| m != -l)
                .map(|&m| (type_of(m), params_of(m)))
                .collect(),
        );
    }
    let mut labels = vec!["e".to_string()];
    labels.extend(lets.iter().map(|l| l.to_string()));
    Ok(TreeGenerator::new(
        format!("freegroup:k={}", spec.k),
        ConeTree::new(0, children)?,
        TreeNaming::Labels {
            root: "e".into(),
            labels,
        },
    ))
}

/// `mu_s(a) = rho_s(e, a) / rho_s(e)` on the letters.
#[derive(Debug, Clone)]
pub struct ConvolutionMeasure {
    /// `(letter, mu_s(letter))` in the order of [`letters`].
    pub values: Vec<(i64, C64)>,
    /// `sum_a |mu_s(a)|`.
    pub total_abs: f64,
}

impl ConvolutionMeasure {
    pub fn new(spec: &FreeGroupSpec, s: ComplexFrequency) -> Self {
        let kind = OperatorKind::Complex(s);
        let rho: Vec<C64> = spec.assign.iter().map(|&p| kind.weight(p)).collect();
        let total: C64 = rho.iter().sum::<C64>() * 2.0;
        let values: Vec<(i64, C64)> = letters(spec.k)
            .into_iter()
            .map(|l| (l, rho[(l.unsigned_abs() - 1) as usize] / total))
            .collect();
        let total_abs = values.iter().map(|(_, m)| m.norm()).sum();
        ConvolutionMeasure { values, total_abs }
    }

    pub fn k(&self) -> usize {
        self.values.len() / 2
    }

    /// `|mu_s(a_j)|` for `j = 1..k`.
    pub fn generator_moduli(&self) -> Vec<f64> {
        self.values
            .iter()
            .filter(|(l, _)| *l > 0)
            .map(|(_, m)| m.norm())
            .collect()
    }

    pub fn mass(&self) -> C64 {
        self.values.iter().map(|(_, m)| m).sum()
    }
}

/// Operator norm of convolution by a symmetric measure on the letters:
/// twice the minimum over `t >= 0` of `t + sum_j (sqrt(t^2 + c_j^2) - t)`.
pub fn akemann_ostrand_norm(measure: &ConvolutionMeasure) -> f64 {
    let c = measure.generator_moduli();
    norm_from_moduli(&c)
}

fn norm_from_moduli(c: &[f64]) -> f64 {
    let k = c.len() as f64;
    let phi = |t: f64| t + c.iter().map(|cj| (t * t + cj * cj).sqrt() - t).sum::<f64>();
    let dphi = |t: f64| {
        1.0 - k
            + c.iter()
                .map(|cj| {
                    if t == 0.0 && *cj == 0.0 {
                        1.0
                    } else {
                        t / (t * t + cj * cj).sqrt()
                    }
                })
                .sum::<f64>()
    };
    let cmax = c.iter().cloned().fold(0.0, f64::max);
    if cmax == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, cmax * k);
    while hi - lo > 1e-13 * cmax.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dphi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * phi(0.5 * (lo + hi))
}

/// `sqrt(2k - 1) / |l1 s + l2/s + l3|`, valid for symbolic assignments on
/// the unit circle (then every `|mu_s(a_j)|` coincides). `None` otherwise.
pub fn closed_form_norm(spec: &FreeGroupSpec, s: ComplexFrequency) -> Option<f64> {
    let (l1, l2, l3) = spec.symbol_counts()?;
    let z = s.value();
    if l1 + l2 > 0 && (z.norm() - 1.0).abs() > 1e-12 {
        return None;
    }
    let den = z * l1 as f64 + z.inv() * l2 as f64 + C64::new(l3 as f64, 0.0);
    Some((2.0 * spec.k as f64 - 1.0).sqrt() / den.norm())
}

#[derive(Debug, Clone)]
pub struct ThresholdRow {
    pub alpha: f64,
    pub norm: f64,
    /// Below 1: the Green function of `mu_s` is analytic on a disk containing `z = 1`.
    pub below_one: bool,
    pub closed_form: Option<f64>,
    pub total_abs: f64,
    /// `|s| / Re s`.
    pub bound: f64,
}

/// Norm of `mu_s` for `s = e^{i alpha}` over a grid of angles in `(-pi/2, pi/2)`.
pub fn norm_threshold_report(spec: &FreeGroupSpec, alphas: &[f64]) -> Result<Vec<ThresholdRow>> {
    alphas
        .iter()
        .map(|&alpha| {
            let s = ComplexFrequency::unit(alpha)?;
            let m = ConvolutionMeasure::new(spec, s);
            let norm = akemann_ostrand_norm(&m);
            Ok(ThresholdRow {
                alpha,
                norm,
                below_one: norm < 1.0,
                closed_form: closed_form_norm(spec, s),
                total_abs: m.total_abs,
                bound: s.value().norm() / s.value().re,
            })
        })
        .collect()
}

/// Smallest `alpha > 0` with `||mu_{e^{i alpha}}|| = 1`, or `None` if the
/// norm stays below 1 up to `pi/2`. Uses that the norm grows with `|alpha|`.
pub fn threshold_angle(spec: &FreeGroupSpec) -> Result<Option<f64>> {
    let norm_at = |a: f64| -> Result<f64> {
        Ok(akemann_ostrand_norm(&ConvolutionMeasure::new(
            spec,
            ComplexFrequency::unit(a)?,
        )))
    };
    let half = std::f64::consts::FRAC_PI_2;
    let mut hi = half * (1.0 - 1e-12);
    if norm_at(hi)? < 1.0 {
        return Ok(None);
    }
    let mut lo = 0.0;
    if norm_at(lo)? >= 1.0 {
        return Ok(Some(0.0));
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if norm_at(mid)? < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// `mu_s^{(m)}(e, e)` for `m = 0..=n`, exact.
pub fn return_coefficients(
    spec: &FreeGroupSpec,
    s: ComplexFrequency,
    n: usize,
) -> Result<Vec<C64>> {
    let g = cayley_generator(spec)?;
    tree_step_values(
        g.cone_tree(),
        OperatorKind::Complex(s),
        &TreeAddress::root(),
        &TreeAddress::root(),
        n,
    )
}
