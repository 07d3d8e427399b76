//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use admnet::exhaust::{
    classify, classify_comparisons, exhaust_admittance, infinite_kernels, kernel_identities_check,
    parse_generator, tree_edge_identity, ExhaustOptions, ExhaustionStatus, GraphGenerator,
    TreeGenerator, Verdict, VertexCode,
};
use admnet::finsolve::{
    effective_admittance, green_finite, restricted_spectral_radius, series_first_passage,
    BoundarySpec, SeriesOptions, SeriesStatus,
};
use admnet::freegrp::{akemann_ostrand_norm, threshold_angle, ConvolutionMeasure, FreeGroupSpec};
use admnet::oracle::fixtures::diamond;
use admnet::oracle::{matrix_power_entry, random_frequency, random_network, walk_weight_sum};
use admnet::tree::{
    distribution_from_harmonic, harmonic_from_distribution, BoundaryDistribution, KernelOptions,
    TreeAddress, TreeKernels,
};
use admnet::{
    build_operator, comparison_constants, ComplexFrequency, EdgeParams, OperatorKind, C64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn code(s: &str) -> VertexCode {
    VertexCode::new(s)
}

fn alpha_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| -PI / 2.0 + PI * i as f64 / (n + 1) as f64)
        .collect()
}

fn diamond_radii() -> Outcome {
    let net = diamond();
    let lam = restricted_spectral_radius(&net, &[1, 2], OperatorKind::AtT(1.0)).map_err(err)?;
    let e1 = (lam.radius - 1.0 / 6f64.sqrt()).abs();
    ensure(e1 <= 1e-10, || format!("stochastic radius off by {e1:e}"))?;
    let mut worst: f64 = 0.0;
    for alpha in alpha_grid(20) {
        let s = ComplexFrequency::unit(alpha).map_err(err)?;
        let lam =
            restricted_spectral_radius(&net, &[1, 2], OperatorKind::Complex(s)).map_err(err)?;
        let z = s.value();
        let want = 1.0 / ((2.0 * z * z + 1.0).norm() * (z * z + 1.0).norm());
        worst = worst.max((lam.radius * lam.radius - want).abs());
    }
    ensure(worst <= 1e-10, || {
        format!("complex radius squared off by {worst:e}")
    })?;
    let spec = BoundarySpec::new(4, 0, [3]).map_err(err)?;
    let crit = (1.0 / 8f64.sqrt()).acos();
    let run = |a: f64| -> Result<SeriesStatus, String> {
        let s = ComplexFrequency::unit(a).map_err(err)?;
        Ok(
            series_first_passage(&net, &spec, s, C64::new(1.0, 0.0), SeriesOptions::default())
                .map_err(err)?
                .status,
        )
    };
    let (inside, outside) = (run(crit - 1e-3)?, run(crit + 1e-3)?);
    ensure(
        inside == SeriesStatus::Converged && outside == SeriesStatus::Diverged,
        || format!("series status {inside:?} / {outside:?} around the critical angle"),
    )?;
    Ok(format!(
        "radius error {e1:.1e}, grid error {worst:.1e}, series converged/diverged at crit -/+ 1e-3"
    ))
}

fn comparison_closed_forms() -> Outcome {
    let mut worst: f64 = 0.0;
    for alpha in alpha_grid(40) {
        let c =
            comparison_constants(ComplexFrequency::unit(alpha).map_err(err)?, 1.0).map_err(err)?;
        let cos = alpha.cos();
        worst = worst
            .max((c.r_st * cos * cos - 1.0).abs())
            .max((c.r_s * cos - 1.0).abs());
    }
    ensure(worst <= 1e-14, || format!("relative error {worst:e}"))?;
    Ok(format!("40 angles, relative error {worst:.1e}"))
}

fn random_property_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let (mut w3, mut w35, mut wdir): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let slack = 1.0 + 1e-12;
    for trial in 0..1000 {
        let net = random_network(&mut rng, 10);
        let n = net.vertex_count();
        let s = random_frequency(&mut rng, 0.1..=3.0, 3.0);
        let r = s.value().norm() / s.value().re;
        // single-edge estimates
        for e in net.edges() {
            let rho = e.params.admittance(s);
            let at_mod = e.params.admittance(s.modulus()).re;
            ensure(
                rho.re > 0.0
                    && rho.norm() <= r * at_mod * slack
                    && rho.norm() <= r * rho.re * slack
                    && rho.norm() * slack >= at_mod,
                || format!("trial {trial}: edge estimate fails"),
            )?;
        }
        // operator bounds
        let ps = build_operator(&net, OperatorKind::Complex(s)).map_err(err)?;
        let pt = build_operator(&net, OperatorKind::Tilde(s)).map_err(err)?;
        let pc = build_operator(&net, OperatorKind::Check(s)).map_err(err)?;
        let pm = build_operator(&net, OperatorKind::AtT(s.value().norm())).map_err(err)?;
        for x in 0..n {
            for (y, _) in net.neighbors(x) {
                let a = ps.entry(x, y).norm();
                ensure(
                    a <= r * pt.entry(x, y).re * slack
                        && a <= r * pc.entry(x, y).re * slack
                        && a <= r * r * pm.entry(x, y).re * slack,
                    || format!("trial {trial}: operator bound fails at ({x},{y})"),
                )?;
            }
        }
        // real monotonicity
        let (t1, t2) = (rng.random_range(0.1..3.0), rng.random_range(0.1..3.0));
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        let q = lo / hi;
        let plo = build_operator(&net, OperatorKind::AtT(lo)).map_err(err)?;
        let phi = build_operator(&net, OperatorKind::AtT(hi)).map_err(err)?;
        for e in net.edges() {
            let (a, b) = (
                e.params
                    .admittance(ComplexFrequency::real(lo).map_err(err)?)
                    .re,
                e.params
                    .admittance(ComplexFrequency::real(hi).map_err(err)?)
                    .re,
            );
            ensure(q * b <= a * slack && a <= b / q * slack, || {
                format!("trial {trial}: admittance monotonicity")
            })?;
            for (x, y) in [(e.u, e.v), (e.v, e.u)] {
                let (a, b) = (plo.entry(x, y).re, phi.entry(x, y).re);
                ensure(q * q * b <= a * slack && a <= b / (q * q) * slack, || {
                    format!("trial {trial}: transition monotonicity")
                })?;
            }
        }
        // Dirichlet problem
        let a = rng.random_range(0..n);
        let mut boundary: Vec<usize> = (0..n).filter(|&v| v != a && rng.random_bool(0.3)).collect();
        if boundary.is_empty() {
            boundary.push((a + 1) % n);
        }
        let spec = BoundarySpec::new(n, a, boundary).map_err(err)?;
        let eff = effective_admittance(&net, &spec, OperatorKind::Complex(s)).map_err(err)?;
        let scale = eff.value.norm().max(1.0);
        w3 = w3
            .max((eff.source_current - eff.grounded_current).norm() / scale)
            .max((eff.source_current - eff.energy).norm() / scale);
        let g = green_finite(&net, &spec.interior(n), OperatorKind::Complex(s)).map_err(err)?;
        let rho_a: C64 = net.neighbors(a).map(|(_, p)| p.admittance(s)).sum();
        w35 = w35.max(
            (eff.value * g.get(a, a).expect("interior") - rho_a).norm() / rho_a.norm().max(1.0),
        );
        wdir = wdir.max(eff.solution.formula_agreement);
    }
    ensure(w3 <= 1e-9, || format!("three-formula spread {w3:e}"))?;
    ensure(w35 <= 1e-9, || format!("admittance-Green identity {w35:e}"))?;
    ensure(wdir <= 1e-10, || {
        format!("Dirichlet formulas differ by {wdir:e}")
    })?;
    Ok(format!(
        "1000 trials; formulas {w3:.1e}, identity {w35:.1e}, Dirichlet {wdir:.1e}"
    ))
}

fn walk_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for _ in 0..150 {
        let net = random_network(&mut rng, 5);
        let n = net.vertex_count();
        let s = random_frequency(&mut rng, 0.1..=3.0, 3.0);
        let kinds = [
            OperatorKind::Complex(s),
            OperatorKind::AtT(rng.random_range(0.1..3.0)),
            OperatorKind::Tilde(s),
            OperatorKind::Check(s),
        ];
        let subset: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.8)).collect();
        let z = C64::from_polar(rng.random_range(0.0..=2.0), rng.random_range(0.0..2.0 * PI));
        for kind in kinds {
            for x in 0..n {
                for y in 0..n {
                    for k in 0..=8 {
                        let e = walk_weight_sum(&net, &subset, x, y, k, z, kind).map_err(err)?;
                        let m = matrix_power_entry(&net, &subset, x, y, k, kind) * z.powu(k as u32);
                        worst = worst.max((e - m).norm());
                        checks += 1;
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-12, || format!("max difference {worst:e}"))?;
    Ok(format!("{checks} entries, max difference {worst:.1e}"))
}

fn exhaustion() -> Outcome {
    let opts = ExhaustOptions {
        n_max: 60,
        ..Default::default()
    };
    let line = parse_generator("line").map_err(err)?;
    let t = exhaust_admittance(
        line.as_ref(),
        &code("0"),
        &[],
        OperatorKind::AtT(1.0),
        &opts,
    )
    .map_err(err)?;
    let mut wl: f64 = 0.0;
    for (n, v) in t.radii.iter().zip(&t.values).filter(|(n, _)| **n <= 50) {
        wl = wl.max((v - 2.0 / *n as f64).norm());
    }
    ensure(wl <= 1e-9, || format!("line trace off by {wl:e}"))?;
    ensure(t.status == ExhaustionStatus::RecurrentZero, || {
        format!("line status {:?}", t.status)
    })?;
    let tree = parse_generator("tree:b=2").map_err(err)?;
    let t = exhaust_admittance(
        tree.as_ref(),
        &code("o"),
        &[],
        OperatorKind::AtT(1.0),
        &opts,
    )
    .map_err(err)?;
    let lim = t.limit.ok_or("binary tree did not converge")?;
    ensure((lim - 1.0).norm() <= 1e-6, || {
        format!("binary tree limit {lim}")
    })?;
    let samples = [
        ComplexFrequency::real(1.0).map_err(err)?,
        ComplexFrequency::unit(PI / 6.0).map_err(err)?,
        ComplexFrequency::from_parts(2.0, 1.0).map_err(err)?,
        ComplexFrequency::from_parts(0.5, 0.2).map_err(err)?,
    ];
    let cases = [
        ("line", "0", Verdict::Recurrent),
        ("line:params=1;1;1", "0", Verdict::Recurrent),
        ("tree:b=2", "o", Verdict::Transient),
        ("tree:b=2:assign=s,1/s", "o", Verdict::Transient),
    ];
    for (uri, root, want) in cases {
        let g = parse_generator(uri).map_err(err)?;
        let c = classify(g.as_ref(), &code(root), &samples, &opts).map_err(err)?;
        ensure(c.verdict == want, || {
            format!("{uri}: {} across frequencies", c.verdict.label())
        })?;
        for s in samples {
            let c = classify_comparisons(g.as_ref(), &code(root), s, &opts).map_err(err)?;
            ensure(c.verdict == want, || {
                format!("{uri}: {} for comparisons at {s}", c.verdict.label())
            })?;
        }
    }
    Ok(format!(
        "line error {wl:.1e}, tree limit error {:.1e}, 4 networks x 4 frequencies x 5 kinds agree",
        (lim - 1.0).norm()
    ))
}

fn kernels() -> Outcome {
    let s = ComplexFrequency::unit(PI / 8.0).map_err(err)?;
    let opts = ExhaustOptions {
        n_max: 30,
        tol: 1e-8,
        ..Default::default()
    };
    let mut worst: f64 = 0.0;
    for uri in ["tree:b=2", "tree:b=2:assign=s,1/s"] {
        let g = parse_generator(uri).map_err(err)?;
        let window: Vec<VertexCode> = ["o", "o.0", "o.1", "o.0.0", "o.0.1", "o.1.1.0"]
            .into_iter()
            .map(code)
            .collect();
        let k = infinite_kernels(
            g.as_ref(),
            &code("o.1"),
            &[],
            OperatorKind::Complex(s),
            &window,
            &opts,
        )
        .map_err(err)?;
        let rep = kernel_identities_check(&k, g.as_ref(), &opts).map_err(err)?;
        ensure(
            rep.return_identity.is_some()
                && !rep.harmonicity.is_empty()
                && !rep.factorization.is_empty(),
            || format!("{uri}: identities not all evaluated"),
        )?;
        worst = worst.max(rep.worst());
    }
    ensure(worst <= 1e-6, || {
        format!("binary tree identity residual {worst:e}")
    })?;
    let line = parse_generator("line").map_err(err)?;
    let opts = ExhaustOptions {
        n_max: 200,
        ..Default::default()
    };
    let window: Vec<VertexCode> = ["1", "-1", "2", "-2", "3", "-3"]
        .into_iter()
        .map(code)
        .collect();
    let k = infinite_kernels(
        line.as_ref(),
        &code("0"),
        &[],
        OperatorKind::AtT(1.0),
        &window,
        &opts,
    )
    .map_err(err)?;
    ensure(k.recurrent, || "line not recurrent".into())?;
    let mut wl: f64 = 0.0;
    for x in &window {
        wl = wl.max((k.entries[x].estimate - 1.0).norm());
    }
    ensure(wl <= 1e-3, || {
        format!("line first-visit estimate off by {wl:e}")
    })?;
    Ok(format!(
        "tree residual {worst:.1e}, line estimate error {wl:.1e}"
    ))
}

fn tree_boundary() -> Outcome {
    let tree = TreeGenerator::regular(2, EdgeParams::unit_resistor()).map_err(err)?;
    let cone = tree.cone_tree();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let s = ComplexFrequency::unit(PI / 8.0).map_err(err)?;
    let kinds = [
        TreeKernels::by_exhaustion(cone, OperatorKind::Complex(s), KernelOptions::default())
            .map_err(err)?,
        TreeKernels::by_series(
            cone,
            OperatorKind::AtT(1.0),
            C64::new(1.03, 0.02),
            KernelOptions::default(),
        )
        .map_err(err)?,
    ];
    let mut worst: f64 = 0.0;
    for k in &kinds {
        for _ in 0..20 {
            let leaves: BTreeMap<TreeAddress, C64> = cone
                .truncation(3)
                .into_iter()
                .filter(|x| x.depth() == 3)
                .map(|x| {
                    (
                        x,
                        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                    )
                })
                .collect();
            let nu = BoundaryDistribution::from_leaves(cone, 3, &leaves).map_err(err)?;
            let h = harmonic_from_distribution(k, &nu).map_err(err)?;
            let back = distribution_from_harmonic(k, &h, 3).map_err(err)?;
            for (x, v) in nu.values() {
                worst = worst.max((back.get(x).expect("same support") - v).norm());
            }
        }
    }
    ensure(worst <= 1e-7, || format!("round trip error {worst:e}"))?;
    let mut edge: f64 = 0.0;
    let pairs = [
        ("o", "o.0"),
        ("o.0", "o"),
        ("o.2.1", "o.2.1.0"),
        ("o.2.1", "o.2"),
    ];
    for k in &kinds {
        for (x, y) in pairs {
            edge = edge.max(
                k.edge_identity_residual(&x.parse().map_err(err)?, &y.parse().map_err(err)?)
                    .map_err(err)?,
            );
        }
    }
    let opts = ExhaustOptions {
        n_max: 40,
        tol: 1e-10,
        ..Default::default()
    };
    for (x, y) in pairs {
        edge = edge.max(
            tree_edge_identity(&tree, &code(x), &code(y), OperatorKind::Complex(s), &opts)
                .map_err(err)?,
        );
    }
    ensure(edge <= 1e-6, || format!("edge identity residual {edge:e}"))?;
    Ok(format!(
        "40 distributions, round trip {worst:.1e}, edge identity {edge:.1e}"
    ))
}

fn free_group() -> Outcome {
    let spec = FreeGroupSpec::symbolic(2, 1, 1).map_err(err)?;
    let mut w1: f64 = 0.0;
    for alpha in alpha_grid(60) {
        let s = ComplexFrequency::unit(alpha).map_err(err)?;
        let norm = akemann_ostrand_norm(&ConvolutionMeasure::new(&spec, s));
        w1 = w1.max((norm - 3f64.sqrt() / (2.0 * alpha.cos())).abs());
    }
    ensure(w1 <= 1e-10, || format!("mixed pair norm off by {w1:e}"))?;
    let t = threshold_angle(&spec)
        .map_err(err)?
        .ok_or("no threshold found")?;
    ensure((t - PI / 6.0).abs() <= 1e-6, || format!("threshold {t}"))?;
    let mut w2: f64 = 0.0;
    for k in 2..=6 {
        let m = ConvolutionMeasure::new(
            &FreeGroupSpec::symbolic(k, 0, 0).map_err(err)?,
            ComplexFrequency::real(1.0).map_err(err)?,
        );
        w2 = w2.max((akemann_ostrand_norm(&m) - (2.0 * k as f64 - 1.0).sqrt() / k as f64).abs());
    }
    ensure(w2 <= 1e-12, || {
        format!("equidistribution norm off by {w2:e}")
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..1000 {
        let k = rng.random_range(2..9);
        let assign: Vec<EdgeParams> = (0..k)
            .map(|_| match rng.random_range(0..4) {
                0 => Ok(EdgeParams::unit_resistor()),
                1 => Ok(EdgeParams::admittance_s()),
                2 => Ok(EdgeParams::admittance_inv_s()),
                _ => EdgeParams::new(
                    rng.random_range(0.0..2.0),
                    rng.random_range(0.0..2.0),
                    rng.random_range(0.1..2.0),
                ),
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        let spec = FreeGroupSpec::new(k, assign).map_err(err)?;
        let s = random_frequency(&mut rng, 0.05..=3.0, 4.0);
        let m = ConvolutionMeasure::new(&spec, s);
        let bound = s.value().norm() / s.value().re;
        ensure(m.total_abs <= bound * (1.0 + 1e-12), || {
            format!("trial {trial}: total mass {} > {bound}", m.total_abs)
        })?;
    }
    Ok(format!(
        "norm error {w1:.1e}, threshold error {:.1e}, Kesten error {w2:.1e}, 1000 mass bounds",
        (t - PI / 6.0).abs()
    ))
}

fn nonvanishing_admittance() -> Outcome {
    let opts = ExhaustOptions {
        n_max: 80,
        ..Default::default()
    };
    let mut least = f64::INFINITY;
    for uri in [
        "tree:b=2",
        "tree:b=2:assign=s,1/s",
        "tree:b=2:assign=s",
        "tree:b=2:assign=1/s,1",
    ] {
        let g: Box<dyn GraphGenerator> = parse_generator(uri).map_err(err)?;
        for i in 0..5 {
            for j in 0..5 {
                let s = ComplexFrequency::from_parts(
                    0.3 + 1.7 * i as f64 / 4.0,
                    -1.0 + 2.0 * j as f64 / 4.0,
                )
                .map_err(err)?;
                let t = exhaust_admittance(
                    g.as_ref(),
                    &code("o"),
                    &[],
                    OperatorKind::Complex(s),
                    &opts,
                )
                .map_err(err)?;
                let lim = t
                    .limit
                    .filter(|_| t.status == ExhaustionStatus::Converged)
                    .ok_or_else(|| format!("{uri} at {s}: not converged"))?;
                least = least.min(lim.norm());
            }
        }
    }
    ensure(least > 0.05, || format!("smallest |admittance| {least}"))?;
    Ok(format!(
        "4 trees x 25 frequencies, smallest |admittance| {least:.3}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("diamond spectral radii and series threshold", diamond_radii),
        (
            "comparison constants on the unit circle",
            comparison_closed_forms,
        ),
        ("random network properties", random_property_suite),
        ("walk enumeration vs matrix powers", walk_oracle),
        ("exhaustion traces and classification", exhaustion),
        ("infinite kernels", kernels),
        ("tree boundary round trip and edge identity", tree_boundary),
        ("free group norms", free_group),
        ("nonvanishing tree admittance", nonvanishing_admittance),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
