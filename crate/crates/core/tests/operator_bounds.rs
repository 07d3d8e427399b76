use admnet::oracle::random_network;
use admnet::{build_operator, comparison_constants, ComplexFrequency, EdgeParams, OperatorKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-12;

fn params() -> impl Strategy<Value = EdgeParams> {
    (0.0..3.0f64, 0.0..3.0f64, 0.0..3.0f64, 0u8..8).prop_filter_map(
        "all zero",
        |(l, r, d, mask)| {
            let pick = |v: f64, bit: u8| if mask & bit == 0 { v } else { 0.0 };
            EdgeParams::new(pick(l, 1), pick(r, 2), pick(d, 4)).ok()
        },
    )
}

fn frequency() -> impl Strategy<Value = ComplexFrequency> {
    (0.1..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| ComplexFrequency::from_parts(re, im).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn admittance_is_positive_real(p in params(), s in frequency()) {
        prop_assert!(p.admittance(s).re > 0.0);
    }

    #[test]
    fn single_edge_estimates(p in params(), s in frequency()) {
        let rho = p.admittance(s);
        let r = s.value().norm() / s.value().re;
        let at_mod = p.admittance(s.modulus()).re;
        prop_assert!(rho.norm() <= r * at_mod * (1.0 + SLACK));
        prop_assert!(rho.norm() <= r * rho.re * (1.0 + SLACK));
        prop_assert!(rho.norm() >= at_mod * (1.0 - SLACK));
    }

    #[test]
    fn entrywise_operator_bounds(seed in any::<u64>(), s in frequency()) {
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        let r = s.value().norm() / s.value().re;
        let ps = build_operator(&net, OperatorKind::Complex(s)).unwrap();
        let pt = build_operator(&net, OperatorKind::Tilde(s)).unwrap();
        let pc = build_operator(&net, OperatorKind::Check(s)).unwrap();
        let pm = build_operator(&net, OperatorKind::AtT(s.value().norm())).unwrap();
        prop_assert!(ps.row_sum_defect() < 1e-12);
        for x in 0..net.vertex_count() {
            for (y, _) in net.neighbors(x) {
                let a = ps.entry(x, y).norm();
                prop_assert!(a <= r * pt.entry(x, y).re * (1.0 + SLACK));
                prop_assert!(a <= r * pc.entry(x, y).re * (1.0 + SLACK));
                prop_assert!(a <= r * r * pm.entry(x, y).re * (1.0 + SLACK));
            }
        }
    }

    #[test]
    fn real_frequency_monotonicity(seed in any::<u64>(), s in 0.05..4.0f64, ratio in 1.0..5.0f64) {
        let t = s * ratio;
        let net = random_network(&mut ChaCha8Rng::seed_from_u64(seed), 10);
        let (fs, ft) = (ComplexFrequency::real(s).unwrap(), ComplexFrequency::real(t).unwrap());
        let q = s / t;
        for e in net.edges() {
            let (a, b) = (e.params.admittance(fs).re, e.params.admittance(ft).re);
            prop_assert!(q * b <= a * (1.0 + SLACK) && a <= b / q * (1.0 + SLACK));
        }
        let ops = build_operator(&net, OperatorKind::AtT(s)).unwrap();
        let opt = build_operator(&net, OperatorKind::AtT(t)).unwrap();
        for x in 0..net.vertex_count() {
            for (y, _) in net.neighbors(x) {
                let (a, b) = (ops.entry(x, y).re, opt.entry(x, y).re);
                prop_assert!(q * q * b <= a * (1.0 + SLACK) && a <= b / (q * q) * (1.0 + SLACK));
            }
        }
    }

    #[test]
    fn comparison_constants_on_the_unit_circle(alpha in -1.5..1.5f64) {
        let c = comparison_constants(ComplexFrequency::unit(alpha).unwrap(), 1.0).unwrap();
        let cos = alpha.cos();
        prop_assert!((c.r_st - 1.0 / (cos * cos)).abs() <= 1e-12 * c.r_st);
        prop_assert!((c.r_s - 1.0 / cos).abs() <= 1e-12 * c.r_s);
    }
}

#[test]
fn zero_parameters_are_rejected() {
    assert!(EdgeParams::new(0.0, 0.0, 0.0).is_err());
    assert!(EdgeParams::new(-1.0, 1.0, 0.0).is_err());
    assert!(ComplexFrequency::from_parts(0.0, 1.0).is_err());
    assert!(OperatorKind::at_t(0.0).is_err());
}
