//! Subcommand bodies. Each builds a [`Report`]; printing and exit codes
//! are handled by `main`.

use std::collections::BTreeMap;

use admnet::exhaust::{
    classify_comparisons, energy_probe, exhaust_admittance, infinite_kernels,
    kernel_identities_check, parse_generator, parse_symbol, ExhaustOptions, ExhaustionTrace,
    GraphGenerator, Verdict, VertexCode,
};
use admnet::finsolve::{
    effective_admittance, restricted_spectral_radius, series_first_passage, BoundarySpec,
    SeriesOptions,
};
use admnet::freegrp::{norm_threshold_report, threshold_angle, FreeGroupSpec};
use admnet::netcore::domination_constant;
use admnet::oracle::monte_carlo_absorption;
use admnet::tree::{
    distribution_from_harmonic, harmonic_from_distribution, harmonic_residual, integrate_kernel,
    BoundaryDistribution, EndApprox, KernelOptions, TreeAddress, TreeKernels,
};
use admnet::{comparison_constants, tol, ComplexFrequency, OperatorKind, C64};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::io::{
    parse_address, parse_complex, parse_frequency, parse_grid, parse_kind, split_list, NetworkFile,
    TreeValuesFile,
};
use crate::report::{cx, measured, measured_real, Report, Table};
use crate::{FiniteArgs, FreeGroupArgs, InfiniteArgs, TreeAction, TreeArgs};

fn echo<T: serde::Serialize>(args: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(args)?)
}

fn precondition(msg: String) -> CliError {
    admnet::Error::InvalidArgument(msg).into()
}

pub fn finite(a: &FiniteArgs) -> CliResult<Report> {
    let file = NetworkFile::read(&a.network)?;
    let (net, index) = file.to_network()?;
    let s = parse_frequency(&a.s)?;
    let kind = parse_kind(&a.kind, s)?;
    let z = parse_complex(&a.z)?;
    let lookup = |name: &str| {
        index.get(name).copied().ok_or_else(|| {
            CliError::from(admnet::Error::InvalidBoundary(format!(
                "unknown vertex `{name}`"
            )))
        })
    };
    let source = lookup(&a.source)?;
    let boundary = a
        .boundary
        .split([',', ';'])
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(lookup)
        .collect::<CliResult<Vec<_>>>()?;
    let n = net.vertex_count();
    let spec = BoundarySpec::new(n, source, boundary)?;
    let names = &file.vertices;

    let mut report = Report::new("finite", echo(a)?);
    let ea = effective_admittance(&net, &spec, kind)?;
    let voltages: BTreeMap<&str, Value> = names
        .iter()
        .zip(&ea.solution.voltages)
        .map(|(k, v)| (k.as_str(), cx(*v)))
        .collect();
    report.set(
        "voltages",
        json!({ "method": "direct", "tolerance": tol::DIRICHLET_AGREEMENT, "values": voltages }),
    );
    report.set(
        "admittance",
        json!({
            "value": measured(ea.value, "direct", tol::ADMITTANCE_AGREEMENT),
            "source_current": cx(ea.source_current),
            "grounded_current": cx(ea.grounded_current),
            "energy": cx(ea.energy),
            "from_green": cx(ea.from_green),
        }),
    );
    report.set(
        "green_diagonal",
        measured(
            ea.solution.green_diagonal,
            "direct",
            tol::ADMITTANCE_AGREEMENT,
        ),
    );
    report.check(
        "admittance formulas agree",
        ea.agreement,
        tol::ADMITTANCE_AGREEMENT,
    );
    report.check(
        "green diagonal identity",
        ea.green_identity_residual,
        tol::ADMITTANCE_AGREEMENT,
    );
    report.check(
        "dirichlet formulas agree",
        ea.solution.formula_agreement,
        tol::DIRICHLET_AGREEMENT,
    );
    report.check(
        "harmonic residual",
        ea.solution.harmonic_residual,
        tol::DIRICHLET_AGREEMENT,
    );

    let interior = spec.reduced_interior(n);
    let interior_names: Vec<&str> = interior.iter().map(|&i| names[i].as_str()).collect();
    let mut radii = BTreeMap::new();
    if !interior.is_empty() {
        let mut kinds = vec![OperatorKind::Complex(s)];
        kinds.extend(OperatorKind::comparison_kinds(s));
        for k in kinds {
            let r = restricted_spectral_radius(&net, &interior, k)?;
            radii.insert(
                k.label(),
                json!({
                    "radius": measured_real(r.radius, "direct", tol::COMPLEX_EQ),
                    "witness": cx(r.witness),
                    "domination": domination_constant(s, k),
                }),
            );
        }
    }
    report.set(
        "spectral_radii",
        json!({ "interior": interior_names, "kinds": radii }),
    );
    let c = comparison_constants(s, 1.0)?;
    report.set(
        "comparison_constants",
        json!({ "t": 1.0, "r_st": c.r_st, "r_s": c.r_s }),
    );
    report.set("stochastic", json!(s.is_real() || kind.is_stochastic()));

    if a.series {
        let sv = series_first_passage(&net, &spec, s, z, SeriesOptions::default())?;
        let mut values = BTreeMap::new();
        let mut worst: f64 = 0.0;
        for (&x, r) in sv.vertices.iter().zip(&sv.values) {
            values.insert(
                names[x].as_str(),
                json!({
                    "value": measured(r.value, "series", tol::SERIES_TAIL),
                    "terms": r.terms_used,
                    "tail_bound": r.tail_bound,
                    "status": r.status,
                }),
            );
            if r.converged() && z == C64::new(1.0, 0.0) && matches!(kind, OperatorKind::Complex(_))
            {
                worst = worst.max(tol::rel_err(r.value, ea.solution.voltages[x]));
            }
        }
        report.set("series", json!({
            "z": cx(z),
            "status": sv.status,
            "complex_radius": sv.complex_radius,
            "domination": sv.domination.as_ref().map(|d| json!({
                "kind": d.kind, "constant": d.constant, "stochastic_radius": d.stochastic_radius,
            })),
            "first_passage": values,
        }));
        if worst > 0.0 || sv.status == admnet::finsolve::SeriesStatus::Converged {
            report.check("series matches direct solve", worst, tol::COMPLEX_EQ);
        }
    }

    if let Some(walks) = a.mc_walks {
        if !kind.is_stochastic() {
            return Err(precondition(format!(
                "--mc-walks needs a stochastic kind, got {}",
                kind.label()
            )));
        }
        let mut mc = BTreeMap::new();
        for &x in &spec.interior(n) {
            let st = monte_carlo_absorption(&net, &spec, kind, x, walks, a.seed)?;
            let exact = ea.solution.voltages[x].re;
            let tolerance = 5.0 * st.hit_stderr + 1e-12;
            report.check(
                format!("monte carlo hit at {}", names[x]),
                (st.hit - exact).abs(),
                tolerance,
            );
            mc.insert(
                names[x].as_str(),
                json!({
                    "hit": measured_real(st.hit, "monte-carlo", tolerance),
                    "hit_stderr": st.hit_stderr,
                    "visits": st.visits,
                    "visits_stderr": st.visits_stderr,
                }),
            );
        }
        report.set(
            "monte_carlo",
            json!({ "walks": walks, "seed": a.seed, "vertices": mc }),
        );
    }
    Ok(report)
}

fn codes(list: &str) -> Vec<VertexCode> {
    split_list(list).into_iter().map(VertexCode::new).collect()
}

fn trace_json(t: &ExhaustionTrace, tolerance: f64) -> Value {
    json!({
        "status": t.status.label(),
        "limit": t.limit.map(|v| measured(v, "exhaustion", tolerance)),
        "radii": t.radii,
        "values": t.values.iter().map(|v| cx(*v)).collect::<Vec<_>>(),
        "trend": t.trend.map(|f| json!({ "exponent": f.exponent, "r_squared": f.r_squared, "points": f.points })),
        "truncated": t.truncated,
        "backend": t.backend,
    })
}

pub fn infinite(a: &InfiniteArgs) -> CliResult<Report> {
    let gen: Box<dyn GraphGenerator> = parse_generator(&a.generator)?;
    let gen = gen.as_ref();
    let source = a
        .source
        .as_deref()
        .map(VertexCode::from)
        .unwrap_or_else(|| gen.root());
    let freqs = split_list(&a.s)
        .iter()
        .map(|s| parse_frequency(s))
        .collect::<CliResult<Vec<_>>>()?;
    if freqs.is_empty() {
        return Err(CliError::Parse("--s needs at least one frequency".into()));
    }
    let opts = ExhaustOptions {
        n_max: a.n_max,
        tol: a.tol,
        max_vertices: a.max_vertices,
        ..Default::default()
    };
    let grounded = codes(&a.grounded);
    let window = codes(&a.window);

    let mut report = Report::new("infinite", echo(a)?);
    report.set("generator", json!(gen.name()));
    report.set("source", json!(source.as_str()));
    let mut rows = Vec::new();
    let mut per_s = Vec::new();
    let mut verdicts: Vec<Verdict> = Vec::new();
    for &s in &freqs {
        let kind = OperatorKind::Complex(s);
        let trace = exhaust_admittance(gen, &source, &grounded, kind, &opts)?;
        for (r, v) in trace.radii.iter().zip(&trace.values) {
            rows.push(vec![
                s.value().re.to_string(),
                s.value().im.to_string(),
                kind.label(),
                r.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                trace.status.label().to_string(),
            ]);
        }
        let mut entry = json!({ "s": cx(s.value()), "trace": trace_json(&trace, a.tol) });

        if a.classify {
            let c = classify_comparisons(gen, &source, s, &opts)?;
            verdicts.push(c.verdict);
            entry["classification"] = json!({
                "verdict": c.verdict.label(),
                "kinds": c.traces.iter().map(|(k, t, v)| json!({
                    "kind": k.label(), "verdict": v.label(), "trace": trace_json(t, a.tol),
                })).collect::<Vec<_>>(),
            });
        }

        if a.kernels {
            let k = infinite_kernels(gen, &source, &grounded, kind, &window, &opts)?;
            let ids = kernel_identities_check(&k, gen, &opts)?;
            let entries: BTreeMap<&str, Value> = k
                .entries
                .iter()
                .map(|(x, e)| {
                    (
                        x.as_str(),
                        json!({
                            "f": measured(e.value, "exhaustion", ids.tolerance),
                            "raw": cx(e.raw),
                            "extrapolated": e.extrapolated,
                            "green": e.green.map(cx),
                        }),
                    )
                })
                .collect();
            entry["kernels"] = json!({
                "recurrent": k.recurrent,
                "source_mass": cx(k.source_mass),
                "green_diagonal": k.green_diagonal.map(|g| measured(g, "exhaustion", ids.tolerance)),
                "entries": entries,
                "identities": {
                    "return_identity": ids.return_identity,
                    "return_rearranged": ids.return_rearranged,
                    "harmonicity": ids.harmonicity.iter().map(|(x, r)| json!([x.as_str(), r])).collect::<Vec<_>>(),
                    "factorization": ids.factorization.iter().map(|(x, y, r)| json!([x.as_str(), y.as_str(), r])).collect::<Vec<_>>(),
                    "tolerance": ids.tolerance,
                },
            });
            report.check(
                format!("kernel identities at s={s}"),
                ids.worst(),
                ids.tolerance,
            );
        }

        if a.energy {
            let e = energy_probe(gen, &source, kind, &opts)?;
            entry["energy"] = json!({
                "n_max": e.n_max,
                "admittance": cx(e.admittance),
                "energies": e.energies.iter().map(|(n, v)| json!([n, cx(*v)])).collect::<Vec<_>>(),
                "gaps": e.gaps,
            });
        }
        per_s.push(entry);
    }
    report.set("frequencies", Value::Array(per_s));
    if a.classify {
        let decided: Vec<Verdict> = verdicts
            .iter()
            .copied()
            .filter(|v| *v != Verdict::Undecided)
            .collect();
        let overall = match decided.first() {
            None => Verdict::Undecided,
            Some(v) => *v,
        };
        let disagree = decided.iter().any(|v| *v != overall);
        report.check(
            "classification independent of s",
            if disagree { 1.0 } else { 0.0 },
            0.0,
        );
        report.set("verdict", json!(overall.label()));
    }
    report.set_table(Table {
        header: vec![
            "s_re",
            "s_im",
            "kind",
            "radius",
            "admittance_re",
            "admittance_im",
            "status",
        ],
        rows,
    });
    Ok(report)
}

fn tree_map(values: &BTreeMap<TreeAddress, C64>, depth: usize) -> BTreeMap<String, Value> {
    values
        .iter()
        .filter(|(x, _)| x.depth() <= depth)
        .map(|(x, v)| (x.to_string(), cx(*v)))
        .collect()
}

fn file_depth(file: &TreeValuesFile, depth: usize) -> CliResult<()> {
    match file.depth {
        Some(d) if d != depth => Err(precondition(format!(
            "file depth {d} differs from --depth {depth}"
        ))),
        _ => Ok(()),
    }
}

pub fn tree(a: &TreeArgs) -> CliResult<Report> {
    let gen = parse_generator(&a.generator)?;
    let tg = gen
        .as_tree()
        .ok_or_else(|| precondition(format!("`{}` is not a tree generator", a.generator)))?;
    let cone = tg.cone_tree();
    let s = parse_frequency(&a.s)?;
    let kind = parse_kind(&a.kind, s)?;
    let (kernels, method) = match &a.z {
        None => (
            TreeKernels::by_exhaustion(cone, kind, KernelOptions::default())?,
            "exhaustion",
        ),
        Some(z) => (
            TreeKernels::by_series(cone, kind, parse_complex(z)?, KernelOptions::default())?,
            "series",
        ),
    };
    let kernel_tol = match method {
        "series" => kernels
            .tail_bound
            .unwrap_or(tol::TREE_HARMONIC)
            .max(KernelOptions::default().tol),
        _ => tol::TREE_HARMONIC,
    };

    let mut args = echo(a)?;
    args["action"] = serde_json::to_value(&a.action)?;
    let mut report = Report::new("tree", args);
    report.set(
        "kernels",
        json!({
            "method": method,
            "z": cx(kernels.z()),
            "iterations": kernels.iterations,
            "last_change": kernels.last_change,
            "tail_bound": kernels.tail_bound,
        }),
    );

    match &a.action {
        TreeAction::Martin { x, xi } => {
            let x = parse_address(x)?;
            let xi = EndApprox(parse_address(xi)?);
            let k = kernels.martin_kernel(&x, &xi)?;
            report.set(
                "x",
                json!({ "address": x.to_string(), "code": tg.code_of(&x)?.as_str() }),
            );
            report.set("xi", json!(xi.0.to_string()));
            report.set("martin_kernel", measured(k, method, kernel_tol));
        }
        TreeAction::Represent { h } => {
            let file = TreeValuesFile::read(h)?;
            file_depth(&file, a.depth)?;
            let h = file.parsed()?;
            let nu = distribution_from_harmonic(&kernels, &h, a.depth)?;
            let back = harmonic_from_distribution(&kernels, &nu)?;
            let round_trip = back
                .iter()
                .map(|(x, v)| tol::rel_err(*v, h[x]))
                .fold(0.0, f64::max);
            let residual = harmonic_residual(&kernels, &h, a.depth)?;
            report.set("depth", json!(a.depth));
            report.set(
                "distribution",
                json!({
                    "method": method,
                    "tolerance": tol::TREE_HARMONIC,
                    "values": tree_map(nu.values(), a.depth),
                }),
            );
            report.set("total", measured(nu.total(), method, tol::TREE_HARMONIC));
            report.check("h is harmonic", residual, tol::TREE_HARMONIC);
            report.check(
                "additivity of nu",
                nu.additivity_defect(cone),
                tol::TREE_HARMONIC,
            );
            report.check("round trip h -> nu -> h", round_trip, tol::TREE_HARMONIC);
        }
        TreeAction::Integrate { nu, x } => {
            let file = TreeValuesFile::read(nu)?;
            file_depth(&file, a.depth)?;
            let leaves = file.parsed()?;
            let nu = BoundaryDistribution::from_leaves(cone, a.depth, &leaves)?;
            let x = parse_address(x)?;
            let value = integrate_kernel(&kernels, &nu, &x)?;
            let h = harmonic_from_distribution(&kernels, &nu)?;
            let back = distribution_from_harmonic(&kernels, &h, a.depth)?;
            let round_trip = nu
                .values()
                .iter()
                .map(|(y, v)| tol::rel_err(back.get(y).unwrap_or_default(), *v))
                .fold(0.0, f64::max);
            report.set("depth", json!(a.depth));
            report.set(
                "x",
                json!({ "address": x.to_string(), "code": tg.code_of(&x)?.as_str() }),
            );
            report.set("value", measured(value, method, tol::TREE_HARMONIC));
            report.set("total", cx(nu.total()));
            report.set(
                "harmonic",
                json!({
                    "method": method,
                    "tolerance": tol::TREE_HARMONIC,
                    "values": tree_map(&h, a.depth),
                }),
            );
            report.check(
                "h is harmonic",
                harmonic_residual(&kernels, &h, a.depth)?,
                tol::TREE_HARMONIC,
            );
            report.check("round trip nu -> h -> nu", round_trip, tol::TREE_HARMONIC);
        }
    }
    Ok(report)
}

/// Agreement required between the bisected and the closed-form norm.
const NORM_AGREEMENT: f64 = 1e-10;

pub fn freegroup(a: &FreeGroupArgs) -> CliResult<Report> {
    let assign = a
        .assign
        .split(',')
        .map(parse_symbol)
        .collect::<admnet::Result<Vec<_>>>()?;
    let spec = FreeGroupSpec::new(a.k, assign)?;
    let alphas = parse_grid(&a.alpha_grid)?;
    let rows = norm_threshold_report(&spec, &alphas)?;
    let threshold = threshold_angle(&spec)?;

    let mut report = Report::new("freegroup", echo(a)?);
    let mut worst_closed: f64 = 0.0;
    let mut worst_l1: f64 = 0.0;
    let mut table = Vec::new();
    let rows_json: Vec<Value> = rows
        .iter()
        .map(|r| {
            if let Some(c) = r.closed_form {
                worst_closed = worst_closed.max((r.norm - c).abs());
            }
            worst_l1 = worst_l1.max(r.norm - r.total_abs);
            table.push(vec![
                r.alpha.to_string(),
                r.norm.to_string(),
                r.closed_form.map(|c| c.to_string()).unwrap_or_default(),
                r.below_one.to_string(),
                r.total_abs.to_string(),
                r.bound.to_string(),
            ]);
            json!({
                "alpha": r.alpha,
                "norm": measured_real(r.norm, "direct", NORM_AGREEMENT),
                "closed_form": r.closed_form,
                "below_one": r.below_one,
                "total_abs": r.total_abs,
                "bound": r.bound,
            })
        })
        .collect();
    report.set("k", json!(spec.k()));
    report.set("symbol_counts", json!(spec.symbol_counts()));
    report.set("rows", Value::Array(rows_json));
    report.set(
        "threshold_angle",
        json!(threshold.map(|t| measured_real(t, "direct", 1e-12))),
    );
    if rows.iter().any(|r| r.closed_form.is_some()) {
        report.check(
            "closed form matches bisection",
            worst_closed,
            NORM_AGREEMENT,
        );
    }
    report.check("norm below total mass", worst_l1.max(0.0), 1e-12);
    if let (Some(t), Some(_)) = (threshold, spec.symbol_counts()) {
        let at = ComplexFrequency::unit(t)?;
        if let Some(c) = admnet::freegrp::closed_form_norm(&spec, at) {
            report.check(
                "closed form equals 1 at the threshold",
                (c - 1.0).abs(),
                1e-10,
            );
        }
    }
    report.set_table(Table {
        header: vec![
            "alpha",
            "norm",
            "closed_form",
            "below_one",
            "total_abs",
            "bound",
        ],
        rows: table,
    });
    Ok(report)
}
