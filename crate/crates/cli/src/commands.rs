use std::sync::Arc;

use orbifold_double::atlas::{inertia_atlas, sections_equivalence_check, validate_atlas, EquivalenceOptions};
use orbifold_double::double::{
    braiding_natural, convolution, double_braiding, double_hom_space, double_simples, double_tensor,
    enumerate_half_braidings, enumeration_bits, hexagon_left, hexagon_right, random_double_morphism, roundtrip_double,
    roundtrip_inertia, tau_components, tensor_tau_composite, theta, theta_image_families, theta_monoidal_iso,
    verify_half_braiding, HalfBraidedModule, InertiaModule, PanelOptions,
};
use orbifold_double::equivariant::{
    construct_simples, find_isomorphism, multiplicities, projection_iso, random_module, rng_from_seed,
    EquivariantModule, ModuleMap,
};
use orbifold_double::gset::{double_inertia, inertia, EquivariantMap, InertiaAction};
use orbifold_double::linalg::Matrix;
use orbifold_double::twisted::{ring_b, twisted_quotient, FunctionRing};

use crate::input::Problem;
use crate::report::{Report, Suite, Table};
use crate::{CliError, JobConfig};

fn element_label(p: &Problem, g: usize) -> String {
    match &p.permutations {
        Some(perms) => format!("{g} {:?}", perms[g]),
        None => g.to_string(),
    }
}

fn inertia_of(p: &Problem) -> Arc<InertiaAction> {
    Arc::new(inertia(&p.action))
}

pub fn cmd_inertia(p: &Problem, config: &JobConfig) -> Result<Report, CliError> {
    let mut report = Report::new("inertia", p.field.modulus(), config.seed);
    let a = &p.action;
    let g = a.group();
    let inert = inertia_of(p);
    report.note("group order", g.order());
    report.note("points", a.size());
    report.note("inertia pairs", inert.pairs().len());
    report.note("inertia orbits", inert.action().orbits().len());

    let mut elems = Table::new("elements", &["element", "order", "class"]);
    let classes = g.conjugacy_classes();
    for e in g.elements() {
        let class = classes.iter().position(|c| c.contains(&e)).expect("classes partition");
        elems.push(vec![element_label(p, e), g.element_order(e).to_string(), class.to_string()]);
    }
    report.tables.push(elems);

    let mut orbits = Table::new("orbits", &["representative", "size", "stabilizer", "stabilizer classes"]);
    for o in a.orbits() {
        let stab = a.stabilizer(o[0]);
        let classes = g.subgroup(&stab)?.0.class_count();
        orbits.push(vec![o[0].to_string(), o.len().to_string(), format!("{stab:?}"), classes.to_string()]);
    }
    report.tables.push(orbits);

    let mut pairs = Table::new("inertia pairs", &["index", "point", "element", "orbit"]);
    let orbit_of = inert.action().orbit_index();
    for (i, &(x, h)) in inert.pairs().iter().enumerate() {
        pairs.push(vec![i.to_string(), x.to_string(), h.to_string(), orbit_of[i].to_string()]);
    }
    report.tables.push(pairs);

    let mut iorbits =
        Table::new("inertia orbits", &["representative", "size", "stabilizer order", "stabilizer classes"]);
    for o in inert.action().orbits() {
        let stab = inert.action().stabilizer(o[0]);
        let classes = g.subgroup(&stab)?.0.class_count();
        let (x, h) = inert.pairs()[o[0]];
        iorbits.push(vec![format!("({x}, {h})"), o.len().to_string(), stab.len().to_string(), classes.to_string()]);
    }
    report.tables.push(iorbits);

    if let Some(atlas) = &p.atlas {
        let ia = inertia_atlas(atlas)?;
        let mut t = Table::new("inertia atlas", &["chart", "pairs", "images"]);
        for (i, c) in ia.nodes().iter().enumerate() {
            let images: Vec<String> = (0..c.local().size())
                .map(|v| {
                    let (x, h) = inert.pairs()[c.embed().alpha(v)];
                    format!("({x},{h})")
                })
                .collect();
            t.push(vec![i.to_string(), c.local().size().to_string(), images.join(" ")]);
        }
        report.tables.push(t);
        report.note("inertia atlas", validate_atlas(&ia));
    }
    Ok(report)
}

/// Simple counts plus the certificate that `theta` matches inertia simples
/// with pairwise non-isomorphic simple objects of the double.
struct SimpleCounts {
    base: usize,
    inertia: usize,
    double: usize,
    witnesses: Vec<String>,
    checks: usize,
}

fn simple_counts(p: &Problem, seed: u64) -> Result<SimpleCounts, CliError> {
    let inert = inertia_of(p);
    let base = construct_simples(&p.action, p.field)?.len();
    let simples = InertiaModule::simples(&inert, p.field)?;
    let doubles: Vec<HalfBraidedModule> = simples.iter().map(theta).collect::<Result<_, _>>()?;
    let mut witnesses = Vec::new();
    let mut checks = 0;
    let opts = PanelOptions { seed, random_modules: 1, max_dim: 1 };
    for (i, (s, d)) in simples.iter().zip(&doubles).enumerate() {
        checks += 3;
        if let Some(v) = verify_half_braiding(d, &opts).violations.first() {
            witnesses.push(format!("simple {i}: {v}"));
        }
        if let Err(e) = roundtrip_inertia(s) {
            witnesses.push(format!("simple {i}: extract after theta: {e}"));
        }
        let end = double_hom_space(d, d)?.len();
        if end != 1 {
            witnesses.push(format!("simple {i}: endomorphisms of dimension {end}"));
        }
    }
    for i in 0..doubles.len() {
        for j in i + 1..doubles.len() {
            checks += 1;
            let dim = double_hom_space(&doubles[i], &doubles[j])?.len();
            if dim != 0 {
                witnesses.push(format!("simples {i} and {j}: {dim}-dimensional hom space"));
            }
        }
    }
    let double = if witnesses.is_empty() { doubles.len() } else { 0 };
    Ok(SimpleCounts { base, inertia: simples.len(), double, witnesses, checks })
}

pub fn cmd_simples(p: &Problem, config: &JobConfig) -> Result<Report, CliError> {
    let mut report = Report::new("simples", p.field.modulus(), config.seed);
    let counts = simple_counts(p, config.seed)?;
    report.note("base", counts.base);
    report.note("inertia", counts.inertia);
    report.note("double", counts.double);
    report.suites.push(Suite::from_failures(
        "bijection",
        counts.checks,
        format!("theta of {} inertia simples: valid, simple, pairwise non-isomorphic", counts.inertia),
        counts.witnesses,
    ));
    Ok(report)
}

fn collect<T>(witnesses: &mut Vec<String>, label: impl FnOnce() -> String, r: Result<bool, T>)
where
    T: std::fmt::Display,
{
    match r {
        Ok(true) => {}
        Ok(false) => witnesses.push(label()),
        Err(e) => witnesses.push(format!("{}: {e}", label())),
    }
}

fn suite_input_half_braidings(p: &Problem, seed: u64) -> Suite {
    if p.half_braidings.is_empty() {
        return Suite::skipped("input-half-braidings", "no half-braidings in the input");
    }
    let opts = PanelOptions { seed, ..PanelOptions::default() };
    let mut witnesses = Vec::new();
    for (i, d) in p.half_braidings.iter().enumerate() {
        for v in verify_half_braiding(d, &opts).violations {
            witnesses.push(format!("half-braiding {i}: {v}"));
        }
    }
    Suite::from_failures("input-half-braidings", p.half_braidings.len(), "supplied φ-families".into(), witnesses)
}

fn suite_axioms(p: &Problem, inert: &Arc<InertiaAction>, seed: u64) -> Result<Suite, CliError> {
    let opts = PanelOptions { seed, ..PanelOptions::default() };
    let doubles = double_simples(inert, p.field)?;
    let mut witnesses = Vec::new();
    let mut pairs = 0;
    for (i, d) in doubles.iter().enumerate() {
        let r = verify_half_braiding(d, &opts);
        pairs += r.ft2_pairs;
        for v in r.violations {
            witnesses.push(format!("theta(simple {i}): {v}"));
        }
    }
    Ok(Suite::from_failures(
        "half-braiding-axioms",
        doubles.len(),
        format!("theta images of inertia simples; FT2 on {pairs} panel pairs"),
        witnesses,
    ))
}

fn suite_round_trips(p: &Problem, inert: &Arc<InertiaAction>, config: &JobConfig) -> Result<Suite, CliError> {
    let mut modules = InertiaModule::simples(inert, p.field)?;
    for i in 0..config.trials {
        modules.push(InertiaModule::random(inert, p.field, 3, config.seed.wrapping_add(i as u64))?);
    }
    let mut witnesses = Vec::new();
    for (i, m) in modules.iter().enumerate() {
        if let Err(e) = roundtrip_inertia(m) {
            witnesses.push(format!("module {i}: extract after theta: {e}"));
        }
        let d = theta(m)?;
        if let Err(e) = roundtrip_double(&d, inert) {
            witnesses.push(format!("module {i}: theta after extract: {e}"));
        }
    }
    Ok(Suite::from_failures("round-trips", 2 * modules.len(), format!("{} inertia modules", modules.len()), witnesses))
}

fn suite_oracle(p: &Problem, inert: &Arc<InertiaAction>, config: &JobConfig) -> Result<Suite, CliError> {
    let simples = construct_simples(&p.action, p.field)?;
    let mut candidates = vec![EquivariantModule::unit(&p.action, p.field)];
    candidates.extend(simples.iter().cloned());
    for i in 0..simples.len() {
        for j in i..simples.len() {
            candidates.push(EquivariantModule::direct_sum(&[simples[i].clone(), simples[j].clone()])?);
        }
    }
    candidates.extend(p.modules.iter().cloned());
    let mut witnesses = Vec::new();
    let mut checks = 0;
    let mut skipped = 0;
    for (i, m) in candidates.iter().enumerate() {
        if enumeration_bits(m) > config.budget_bits as f64 {
            skipped += 1;
            continue;
        }
        checks += 1;
        let found: std::collections::BTreeSet<Vec<Matrix>> =
            enumerate_half_braidings(m, config.budget_bits)?.iter().map(HalfBraidedModule::fixed_family).collect();
        let images = theta_image_families(m, inert)?;
        if found != images {
            let extra = found.difference(&images).count();
            let missing = images.difference(&found).count();
            witnesses.push(format!(
                "module {i}: {} solutions, {} theta images ({extra} not images, {missing} not found)",
                found.len(),
                images.len()
            ));
        }
    }
    if checks == 0 {
        return Ok(Suite::skipped(
            "enumeration-oracle",
            format!("all {skipped} candidate modules exceed the {}-bit budget", config.budget_bits),
        ));
    }
    Ok(Suite::from_failures(
        "enumeration-oracle",
        checks,
        format!("{checks} modules enumerated, {skipped} over budget"),
        witnesses,
    ))
}

fn suite_monoidal(p: &Problem, inert: &Arc<InertiaAction>, config: &JobConfig) -> Result<Suite, CliError> {
    let simples = InertiaModule::simples(inert, p.field)?;
    let cap = simples.len().min(8);
    let mut witnesses = Vec::new();
    let mut checks = 0;
    for i in 0..cap {
        for j in 0..cap {
            checks += 1;
            if let Err(e) = theta_monoidal_iso(&simples[i], &simples[j]) {
                witnesses.push(format!("theta comparison on simples ({i}, {j}): {e}"));
            }
        }
    }
    let unit = InertiaModule::untwisted_unit(inert, p.field);
    let mut rng = rng_from_seed(config.seed);
    for (i, s) in simples.iter().enumerate().take(cap) {
        checks += 1;
        let prod = convolution(s, &unit)?;
        if find_isomorphism(prod.module(), s.module(), &mut rng)?.is_none() {
            witnesses.push(format!("unit law fails on simple {i}"));
        }
    }
    let doubles: Vec<HalfBraidedModule> = simples.iter().take(cap.min(4)).map(theta).collect::<Result<_, _>>()?;
    let panel = construct_simples(&p.action, p.field)?;
    for (i, d1) in doubles.iter().enumerate() {
        for (j, d2) in doubles.iter().enumerate() {
            let t = double_tensor(d1, d2)?;
            for (k, n) in panel.iter().enumerate() {
                checks += 1;
                if tau_components(&t, n)? != tensor_tau_composite(d1, d2, n)? {
                    witnesses.push(format!("tensor of ({i}, {j}): tau differs from the composite on panel module {k}"));
                }
            }
            for (k, d3) in doubles.iter().enumerate() {
                checks += 1;
                let left = double_tensor(&t, d3)?;
                let right = double_tensor(d1, &double_tensor(d2, d3)?)?;
                if left != right {
                    witnesses.push(format!("associativity fails on ({i}, {j}, {k})"));
                }
            }
        }
    }
    Ok(Suite::from_failures("monoidal", checks, format!("{cap} inertia simples"), witnesses))
}

fn suite_braiding(p: &Problem, inert: &Arc<InertiaAction>, config: &JobConfig) -> Result<Suite, CliError> {
    let doubles: Vec<HalfBraidedModule> = double_simples(inert, p.field)?.into_iter().take(4).collect();
    let mut witnesses = Vec::new();
    let mut checks = 0;
    for (i, a) in doubles.iter().enumerate() {
        for (j, b) in doubles.iter().enumerate() {
            for (k, c) in doubles.iter().enumerate() {
                checks += 2;
                collect(&mut witnesses, || format!("left hexagon on ({i}, {j}, {k})"), hexagon_left(a, b, c));
                collect(&mut witnesses, || format!("right hexagon on ({i}, {j}, {k})"), hexagon_right(a, b, c));
            }
        }
    }
    let mut rng = rng_from_seed(config.seed ^ 0x62_7261);
    for t in 0..config.trials.min(8) {
        let d1 = theta(&InertiaModule::random(inert, p.field, 2, config.seed.wrapping_add(100 + 2 * t as u64))?)?;
        let d2 = theta(&InertiaModule::random(inert, p.field, 2, config.seed.wrapping_add(101 + 2 * t as u64))?)?;
        let f = random_double_morphism(&d1, &d1, &mut rng)?;
        let g = random_double_morphism(&d2, &d2, &mut rng)?;
        checks += 1;
        collect(&mut witnesses, || format!("naturality trial {t}"), braiding_natural(&f, &g, &d1, &d1, &d2, &d2));
    }
    Ok(Suite::from_failures(
        "braiding",
        checks,
        format!("hexagons on {} simples, naturality", doubles.len()),
        witnesses,
    ))
}

fn suite_ring(p: &Problem) -> Suite {
    let a = FunctionRing::new(p.action.clone(), p.field);
    let mut witnesses = Vec::new();
    for h in p.action.group().elements() {
        match twisted_quotient(&a, h) {
            Ok(q) if q.dim == p.action.fixed_points(h).len() => {}
            Ok(q) => witnesses.push(format!(
                "element {h}: quotient of dimension {} but {} fixed points",
                q.dim,
                p.action.fixed_points(h).len()
            )),
            Err(e) => witnesses.push(format!("element {h}: {e}")),
        }
    }
    if let Err(e) = ring_b(&p.action, p.field) {
        witnesses.push(format!("ring B: {e}"));
    }
    Suite::from_failures(
        "ring-b",
        p.action.group().order() + 1,
        "quotient dimensions and the isomorphism to functions on the inertia".into(),
        witnesses,
    )
}

fn suite_projection(p: &Problem, inert: &Arc<InertiaAction>, config: &JobConfig) -> Result<Suite, CliError> {
    let di = double_inertia(inert);
    let maps: [(&str, &EquivariantMap); 4] = [("pi", inert.projection()), ("p1", &di.p1), ("p2", &di.p2), ("m", &di.m)];
    let mut witnesses = Vec::new();
    let mut checks = 0;
    let per_map = config.trials.max(13);
    for (name, f) in maps {
        for t in 0..per_map {
            let seed = config.seed.wrapping_add(7919 * t as u64);
            let m = random_module(f.source(), p.field, 2, seed)?;
            let n = random_module(f.target(), p.field, 2, seed ^ 0x5a5a)?;
            checks += 1;
            if let Err(e) = projection_iso(f, &m, &n) {
                witnesses.push(format!("{name}, trial {t}: {e}"));
            }
        }
    }
    Ok(Suite::from_failures("projection-formula", checks, format!("{per_map} random pairs per map"), witnesses))
}

fn suite_descent(p: &Problem, config: &JobConfig) -> Result<Suite, CliError> {
    let Some(atlas) = &p.atlas else {
        return Ok(Suite::skipped("descent", "no atlas in the input"));
    };
    let opts = EquivalenceOptions { seed: config.seed, random: config.trials.max(32), max_dim: 2 };
    let lines = sections_equivalence_check(atlas, p.field, &opts)?;
    let witnesses = lines.iter().filter(|l| !l.passed).map(|l| l.to_string()).collect();
    let detail = lines.iter().map(|l| format!("{}: {}", l.name, l.detail)).collect::<Vec<_>>().join("; ");
    Ok(Suite::from_failures("descent", lines.len(), detail, witnesses))
}

pub fn cmd_verify(p: &Problem, config: &JobConfig) -> Result<Report, CliError> {
    let mut report = Report::new("verify", p.field.modulus(), config.seed);
    let inert = inertia_of(p);
    report.note("trials", config.trials);
    report.note("budget bits", config.budget_bits);
    let counts = simple_counts(p, config.seed)?;
    report.note("simples", format!("base {}, inertia {}, double {}", counts.base, counts.inertia, counts.double));
    report.suites.push(suite_input_half_braidings(p, config.seed));
    report.suites.push(Suite::from_failures(
        "simple-counts",
        counts.checks,
        format!("base {}, inertia {}, double {}", counts.base, counts.inertia, counts.double),
        counts.witnesses,
    ));
    report.suites.push(suite_axioms(p, &inert, config.seed)?);
    report.suites.push(suite_round_trips(p, &inert, config)?);
    report.suites.push(suite_oracle(p, &inert, config)?);
    report.suites.push(suite_monoidal(p, &inert, config)?);
    report.suites.push(suite_braiding(p, &inert, config)?);
    report.suites.push(suite_ring(p));
    report.suites.push(suite_projection(p, &inert, config)?);
    report.suites.push(suite_descent(p, config)?);
    Ok(report)
}

fn scalar_of(map: &ModuleMap) -> Option<u32> {
    let mut value = None;
    for c in map.components() {
        if c.rows() == 0 {
            continue;
        }
        let s = c.as_scalar()?;
        if value.is_some_and(|v| v != s) {
            return None;
        }
        value = Some(s);
    }
    value
}

pub fn cmd_fusion(p: &Problem, config: &JobConfig) -> Result<Report, CliError> {
    let mut report = Report::new("fusion", p.field.modulus(), config.seed);
    let inert = inertia_of(p);
    let simples = InertiaModule::simples(&inert, p.field)?;
    let modules: Vec<EquivariantModule> = simples.iter().map(|s| s.module().clone()).collect();
    let n = simples.len();
    let field = p.field;

    let mut labels = Table::new("simples", &["simple", "orbit representative", "dimension"]);
    for (i, s) in simples.iter().enumerate() {
        let support = (0..inert.pairs().len()).find(|&k| s.module().dim(k) > 0).expect("simples are nonzero");
        let (x, h) = inert.pairs()[support];
        labels.push(vec![format!("S{i}"), format!("({x}, {h})"), s.module().dim(support).to_string()]);
    }
    report.tables.push(labels);

    let headers: Vec<String> = std::iter::once("⊛".to_string()).chain((0..n).map(|j| format!("S{j}"))).collect();
    let header_refs: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut fusion = Table::new("convolution", &header_refs);
    for i in 0..n {
        let mut row = vec![format!("S{i}")];
        for j in 0..n {
            let prod = convolution(&simples[i], &simples[j])?;
            let mult = multiplicities(prod.module(), &modules)?;
            let terms: Vec<String> = mult
                .iter()
                .enumerate()
                .filter(|(_, &m)| m > 0)
                .map(|(k, &m)| if m == 1 { format!("S{k}") } else { format!("{m}S{k}") })
                .collect();
            row.push(if terms.is_empty() { "0".into() } else { terms.join("+") });
        }
        fusion.push(row);
    }
    report.tables.push(fusion);

    // the braiding c_{i,j} followed by c_{j,i} is a scalar whenever
    // End(D_i ⊗ D_j) is one-dimensional
    let doubles: Vec<HalfBraidedModule> = simples.iter().map(theta).collect::<Result<_, _>>()?;
    let bheaders: Vec<String> = std::iter::once("c".to_string()).chain((0..n).map(|j| format!("S{j}"))).collect();
    let bheader_refs: Vec<&str> = bheaders.iter().map(String::as_str).collect();
    let mut monodromy = Table::new("monodromy scalars (self-braiding scalar on the diagonal)", &bheader_refs);
    for i in 0..n {
        let mut row = vec![format!("S{i}")];
        for j in 0..n {
            let t = double_tensor(&doubles[i], &doubles[j])?;
            let entry = if double_hom_space(&t, &t)?.len() != 1 {
                "-".to_string()
            } else if i == j {
                let c = double_braiding(&doubles[i], &doubles[i])?;
                scalar_of(&c.then(&orbifold_double::equivariant::swap(doubles[i].module(), doubles[i].module())?)?)
                    .map_or("-".into(), |s| field.to_signed(s).to_string())
            } else {
                let c = double_braiding(&doubles[i], &doubles[j])?.then(&double_braiding(&doubles[j], &doubles[i])?)?;
                scalar_of(&c).map_or("-".into(), |s| field.to_signed(s).to_string())
            };
            row.push(entry);
        }
        monodromy.push(row);
    }
    report.tables.push(monodromy);
    report.note("simples", n);
    Ok(report)
}
