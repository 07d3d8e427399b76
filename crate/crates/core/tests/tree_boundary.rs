use std::collections::BTreeMap;
use std::f64::consts::PI;

use admnet::exhaust::{
    ball_step_values, infinite_kernels, parse_generator, tree_edge_identity, ExhaustOptions,
    TreeGenerator, VertexCode,
};
use admnet::tree::{
    distribution_from_harmonic, harmonic_from_distribution, BoundaryDistribution, EndApprox,
    KernelOptions, TreeAddress, TreeKernels,
};
use admnet::{ComplexFrequency, EdgeParams, OperatorKind, C64};
use proptest::prelude::*;

fn addr(s: &str) -> TreeAddress {
    s.parse().unwrap()
}

fn regular() -> TreeGenerator {
    TreeGenerator::regular(2, EdgeParams::unit_resistor()).unwrap()
}

fn mixed() -> TreeGenerator {
    TreeGenerator::b_ary(
        2,
        &[
            EdgeParams::admittance_s(),
            EdgeParams::new(0.5, 1.0, 2.0).unwrap(),
        ],
    )
    .unwrap()
}

fn leaves(tree: &TreeGenerator, depth: usize, vals: &[(f64, f64)]) -> BTreeMap<TreeAddress, C64> {
    tree.cone_tree()
        .truncation(depth)
        .into_iter()
        .filter(|x| x.depth() == depth)
        .zip(vals.iter().cycle())
        .map(|(x, &(re, im))| (x, C64::new(re, im)))
        .collect()
}

fn round_trip(kernels: &TreeKernels, tree: &TreeGenerator, vals: &[(f64, f64)]) -> f64 {
    let nu =
        BoundaryDistribution::from_leaves(tree.cone_tree(), 3, &leaves(tree, 3, vals)).unwrap();
    let h = harmonic_from_distribution(kernels, &nu).unwrap();
    let back = distribution_from_harmonic(kernels, &h, 3).unwrap();
    nu.values()
        .iter()
        .map(|(x, v)| (back.get(x).unwrap() - v).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn boundary_round_trip(vals in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 12)) {
        let s = ComplexFrequency::unit(PI / 8.0).unwrap();
        for tree in [regular(), mixed()] {
            let k = TreeKernels::by_exhaustion(tree.cone_tree(), OperatorKind::Complex(s), KernelOptions::default()).unwrap();
            prop_assert!(round_trip(&k, &tree, &vals) <= 1e-7);
        }
        let tree = regular();
        let k = TreeKernels::by_series(tree.cone_tree(), OperatorKind::AtT(1.0), C64::new(1.03, 0.02), KernelOptions::default()).unwrap();
        prop_assert!(round_trip(&k, &tree, &vals) <= 1e-7);
    }
}

#[test]
fn kernels_agree_with_ball_exhaustion() {
    let s = ComplexFrequency::from_parts(0.6, 0.7).unwrap();
    let kind = OperatorKind::Complex(s);
    let g = mixed();
    let tk = TreeKernels::by_exhaustion(g.cone_tree(), kind, KernelOptions::default()).unwrap();
    let opts = ExhaustOptions {
        n_max: 60,
        tol: 1e-12,
        ..Default::default()
    };
    for target in ["o", "o.1", "o.0.1"] {
        let window: Vec<VertexCode> = ["o", "o.0", "o.1.1", "o.0.1.0"]
            .into_iter()
            .map(VertexCode::new)
            .collect();
        let ik = infinite_kernels(&g, &VertexCode::new(target), &[], kind, &window, &opts).unwrap();
        for x in &window {
            let want = tk.first_passage(&addr(x.as_str()), &addr(target)).unwrap();
            assert!((ik.f(x).unwrap() - want).norm() < 1e-9, "{x} -> {target}");
        }
    }
}

#[test]
fn green_function_matches_step_counts() {
    let kind = OperatorKind::Complex(ComplexFrequency::from_parts(1.0, 0.5).unwrap());
    let g = mixed();
    // small enough that 24 terms reach double precision
    let z = C64::new(0.08, 0.03);
    let tk = TreeKernels::by_series(g.cone_tree(), kind, z, KernelOptions::default()).unwrap();
    for (x, y) in [("o", "o"), ("o.1", "o.0"), ("o.0.1", "o")] {
        let steps = ball_step_values(
            &g,
            kind,
            &VertexCode::new(x),
            &VertexCode::new(y),
            24,
            1_000_000,
        )
        .unwrap();
        let sum: C64 = steps
            .iter()
            .enumerate()
            .map(|(n, p)| p * z.powu(n as u32))
            .sum();
        assert!(
            (tk.green(&addr(x), &addr(y)).unwrap() - sum).norm() < 1e-12,
            "{x} {y}"
        );
    }
}

#[test]
fn edge_identity_both_ways() {
    let s = ComplexFrequency::unit(PI / 8.0).unwrap();
    let kind = OperatorKind::Complex(s);
    for g in [regular(), mixed()] {
        let tk = TreeKernels::by_exhaustion(g.cone_tree(), kind, KernelOptions::default()).unwrap();
        let opts = ExhaustOptions {
            n_max: 40,
            tol: 1e-10,
            ..Default::default()
        };
        for (x, y) in [("o", "o.1"), ("o.1", "o"), ("o.0.1", "o.0.1.1")] {
            assert!(tk.edge_identity_residual(&addr(x), &addr(y)).unwrap() <= 1e-10);
            let r = tree_edge_identity(&g, &VertexCode::new(x), &VertexCode::new(y), kind, &opts)
                .unwrap();
            assert!(r <= 1e-6, "{x} {y} {r}");
        }
    }
}

#[test]
fn martin_kernel_is_harmonic_off_the_end() {
    let s = ComplexFrequency::from_parts(0.4, -0.9).unwrap();
    let g = mixed();
    let tk = TreeKernels::by_exhaustion(
        g.cone_tree(),
        OperatorKind::Complex(s),
        KernelOptions::default(),
    )
    .unwrap();
    let xi = EndApprox(addr("o.1.0.1.1.0.0.1"));
    let mut k = BTreeMap::new();
    for x in g.cone_tree().truncation(4) {
        k.insert(x.clone(), tk.martin_kernel(&x, &xi).unwrap());
    }
    assert_eq!(k[&TreeAddress::root()], C64::new(1.0, 0.0));
    for x in g.cone_tree().truncation(3) {
        assert!(tk.laplacian_at(&k, &x).unwrap().norm() < 1e-10, "{x}");
    }
    // ends too short to separate the vertex are refused
    assert!(tk
        .martin_kernel(&addr("o.1.0.1"), &EndApprox(addr("o.1.0")))
        .is_err());
}

#[test]
fn uri_trees_expose_their_structure() {
    let g = parse_generator("tree:b=3:assign=1,s").unwrap();
    let t = g.as_tree().unwrap();
    assert_eq!(
        t.cone_tree().children_of(t.cone_tree().root_type()).len(),
        3
    );
    assert_eq!(
        t.address_of(&VertexCode::new("o.2.0")).unwrap(),
        addr("o.2.0")
    );
}
