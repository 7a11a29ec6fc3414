//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use orbidouble::{run_on_text, Command, Format, JobConfig};
use orbifold_double::atlas::{chartwise_double_counts, example_z2_abc, sections_equivalence_check, EquivalenceOptions};
use orbifold_double::double::{
    braiding_natural, double_braiding, double_hom_space, double_simples, enumerate_half_braidings, hexagon_left,
    hexagon_right, random_double_morphism, roundtrip_double, roundtrip_inertia, theta, theta_image_families,
    theta_monoidal_iso, verify_half_braiding, HalfBraidedModule, InertiaModule, PanelOptions,
};
use orbifold_double::equivariant::{
    construct_simples, projection_iso, random_module, rng_from_seed, EquivariantModule,
};
use orbifold_double::group::{splitting_prime, FiniteGroup};
use orbifold_double::gset::{double_inertia, inertia, EquivariantMap, GroupAction, InertiaAction};
use orbifold_double::linalg::{Matrix, PrimeField};
use orbifold_double::twisted::{ring_b, twisted_quotient, FunctionRing};

type Outcome = Result<String, String>;

fn s3() -> (FiniteGroup, Vec<Vec<usize>>) {
    let (g, perms, _) = FiniteGroup::from_permutations(&[vec![1, 0, 2], vec![1, 2, 0]]).unwrap();
    (g, perms)
}

fn point(g: FiniteGroup) -> Arc<GroupAction> {
    Arc::new(GroupAction::point(g))
}

fn z2_swap(points: usize) -> Arc<GroupAction> {
    let mut moved: Vec<usize> = (0..points).collect();
    moved.swap(0, 1);
    Arc::new(GroupAction::new(FiniteGroup::cyclic(2), points, vec![(0..points).collect(), moved]).unwrap())
}

/// Test actions with |G| ≤ 6 and |X| ≤ 4.
fn zoo() -> Vec<(&'static str, Arc<GroupAction>)> {
    let (g, perms) = s3();
    let with_fixed: Vec<Vec<usize>> = perms.iter().map(|p| p.iter().copied().chain([3]).collect()).collect();
    vec![
        ("Z2 on a point", point(FiniteGroup::cyclic(2))),
        ("Z3 on a point", point(FiniteGroup::cyclic(3))),
        ("Z4 on a point", point(FiniteGroup::cyclic(4))),
        ("S3 on a point", point(g.clone())),
        ("Z2 swapping a,b", z2_swap(2)),
        ("Z2 on a,b,c", z2_swap(3)),
        ("S3 on 3 points", Arc::new(GroupAction::new(g.clone(), 3, perms).unwrap())),
        ("S3 on 3+1 points", Arc::new(GroupAction::new(g, 4, with_fixed).unwrap())),
        ("Z4 regular", Arc::new(GroupAction::regular(FiniteGroup::cyclic(4)))),
        ("Z2xZ2 on a point", point(FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2)))),
    ]
}

fn field_of(a: &GroupAction) -> PrimeField {
    PrimeField::new(splitting_prime(a.group()).unwrap() as u64).unwrap()
}

fn inertia_arc(a: &Arc<GroupAction>) -> Arc<InertiaAction> {
    Arc::new(inertia(a))
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let took = start.elapsed();
    check(took <= limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

/// Number of φ-families on a module over an abelian group acting on a point,
/// counted by hand. φ_h commutes with ρ, so it splits along isotypic
/// components; on an isotypic block of multiplicity m the family is a
/// decomposition of F_q^m into subspaces labelled by the n group elements.
/// For m = 1 that is n choices; for m = 2 either one label takes everything
/// (n) or two labels take complementary lines (C(n,2)·q(q+1)).
fn hand_count(n: usize, q: usize, multiplicities: &[usize]) -> usize {
    multiplicities
        .iter()
        .map(|&m| match m {
            0 => 1,
            1 => n,
            2 => n + n * (n - 1) / 2 * q * (q + 1),
            _ => unreachable!("total dimension at most 2"),
        })
        .product()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    for (name, a, p) in [
        ("Z2 on a point", point(FiniteGroup::cyclic(2)), 3u64),
        ("Z3 on a point", point(FiniteGroup::cyclic(3)), 7),
        ("Z2 swapping a,b", z2_swap(2), 3),
    ] {
        let field = PrimeField::new(p).unwrap();
        let inert = inertia_arc(&a);
        let simples = construct_simples(&a, field).map_err(e)?;
        let mut modules: Vec<(EquivariantModule, Vec<usize>)> = Vec::new();
        for i in 0..simples.len() {
            let mut mult = vec![0; simples.len()];
            mult[i] = 1;
            modules.push((simples[i].clone(), mult.clone()));
            for j in i..simples.len() {
                let sum = EquivariantModule::direct_sum(&[simples[i].clone(), simples[j].clone()]).map_err(e)?;
                if sum.total_dim() <= 2 {
                    let mut mult = vec![0; simples.len()];
                    mult[i] += 1;
                    mult[j] += 1;
                    modules.push((sum, mult));
                }
            }
        }
        let mut sizes = Vec::new();
        for (m, mult) in &modules {
            let found: BTreeSet<Vec<Matrix>> =
                enumerate_half_braidings(m, 40).map_err(e)?.iter().map(HalfBraidedModule::fixed_family).collect();
            let images = theta_image_families(m, &inert).map_err(e)?;
            check(found == images, || {
                format!("{name}, module {mult:?}: {} solutions vs {} theta images", found.len(), images.len())
            })?;
            // the swap action has free orbits only, where φ_e = 1 is forced
            let expected = if a.size() == 1 { hand_count(a.group().order(), p as usize, mult) } else { 1 };
            check(found.len() == expected, || {
                format!("{name}, module {mult:?}: {} solutions, counted {expected} by hand", found.len())
            })?;
            sizes.push(found.len().to_string());
        }
        notes.push(format!("{name} [{}]", sizes.join(",")));
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("enumeration equals theta images: {} ({:.2?})", notes.join("; "), start.elapsed()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for (name, a) in zoo() {
        let field = field_of(&a);
        let inert = inertia_arc(&a);
        for seed in 0..11u64 {
            let mp = InertiaModule::random(&inert, field, 3, 1000 + seed).map_err(e)?;
            roundtrip_inertia(&mp).map_err(|err| format!("{name}, seed {seed}: extract∘theta: {err}"))?;
            let d = theta(&mp).map_err(e)?;
            roundtrip_double(&d, &inert).map_err(|err| format!("{name}, seed {seed}: theta∘extract: {err}"))?;
            count += 1;
        }
    }
    check(count >= 100, || format!("only {count} modules"))?;
    within(Duration::from_secs(30), start)?;
    Ok(format!("{count} random inertia modules, both round trips certified ({:.2?})", start.elapsed()))
}

fn criterion_3() -> Outcome {
    let mut notes = Vec::new();
    for (name, g, expected) in [
        ("Z2", FiniteGroup::cyclic(2), (2, 4, 4)),
        ("Z3", FiniteGroup::cyclic(3), (3, 9, 9)),
        ("Z4", FiniteGroup::cyclic(4), (4, 16, 16)),
        ("S3", s3().0, (3, 8, 8)),
    ] {
        // independent counts from the group table
        let classes = g.class_count();
        let centralizer_sum: usize = g.conjugacy_classes().iter().map(|c| g.centralizer(c[0]).0.class_count()).sum();
        check((classes, centralizer_sum, centralizer_sum) == expected, || {
            format!("{name}: class counts ({classes}, {centralizer_sum}) disagree with {expected:?}")
        })?;
        let order = g.order();
        let a = point(g);
        let field = field_of(&a);
        let inert = inertia_arc(&a);
        let base = construct_simples(&a, field).map_err(e)?.len();
        let inertia_simples = InertiaModule::simples(&inert, field).map_err(e)?;
        let doubles = double_simples(&inert, field).map_err(e)?;
        for (i, (s, d)) in inertia_simples.iter().zip(&doubles).enumerate() {
            roundtrip_inertia(s).map_err(|err| format!("{name}, simple {i}: {err}"))?;
            let end = double_hom_space(d, d).map_err(e)?.len();
            check(end == 1, || format!("{name}, theta(simple {i}) has {end}-dimensional endomorphisms"))?;
            for (j, d2) in doubles.iter().enumerate().skip(i + 1) {
                let hom = double_hom_space(d, d2).map_err(e)?.len();
                check(hom == 0, || format!("{name}, theta images {i} and {j} are related"))?;
            }
        }
        // the double of a point is modules over an algebra of dimension |G|²
        let squares: usize = doubles.iter().map(|d| d.module().total_dim().pow(2)).sum();
        check(squares == order * order, || format!("{name}: Σ dim² = {squares}, expected {}", order * order))?;
        let got = (base, inertia_simples.len(), doubles.len());
        check(got == expected, || format!("{name}: computed {got:?}, expected {expected:?}"))?;
        notes.push(format!("{name} {got:?}"));
    }
    Ok(notes.join(", "))
}

fn criterion_4() -> Outcome {
    let mut images = 0;
    let mut ft2 = 0;
    let mut hexagons = 0;
    let mut naturality = 0;
    let actions = [
        ("Z2 on a point", point(FiniteGroup::cyclic(2))),
        ("Z3 on a point", point(FiniteGroup::cyclic(3))),
        ("S3 on a point", point(s3().0)),
        ("Z2 on a,b,c", z2_swap(3)),
    ];
    for (name, a) in actions {
        let field = field_of(&a);
        let inert = inertia_arc(&a);
        let doubles = double_simples(&inert, field).map_err(e)?;
        let opts = PanelOptions { seed: 5, random_modules: 2, max_dim: 2 };
        for (i, d) in doubles.iter().enumerate() {
            let report = verify_half_braiding(d, &opts);
            check(report.passed(), || format!("{name}, theta(simple {i}): {}", report.violations[0]))?;
            images += 1;
            ft2 += report.ft2_pairs;
        }
        for (i, d1) in doubles.iter().enumerate() {
            for (j, d2) in doubles.iter().enumerate() {
                for (k, d3) in doubles.iter().enumerate() {
                    check(hexagon_left(d1, d2, d3).map_err(e)?, || format!("{name}: left hexagon ({i},{j},{k})"))?;
                    check(hexagon_right(d1, d2, d3).map_err(e)?, || format!("{name}: right hexagon ({i},{j},{k})"))?;
                    hexagons += 2;
                }
            }
        }
        let mut rng = rng_from_seed(17);
        for t in 0..8u64 {
            let d1 = theta(&InertiaModule::random(&inert, field, 2, 300 + t).map_err(e)?).map_err(e)?;
            let d2 = theta(&InertiaModule::random(&inert, field, 2, 400 + t).map_err(e)?).map_err(e)?;
            let f = random_double_morphism(&d1, &d1, &mut rng).map_err(e)?;
            let g = random_double_morphism(&d2, &d2, &mut rng).map_err(e)?;
            check(braiding_natural(&f, &g, &d1, &d1, &d2, &d2).map_err(e)?, || {
                format!("{name}: naturality trial {t}")
            })?;
            naturality += 1;
        }
    }
    Ok(format!(
        "{images} theta images pass FT1 and FT2 ({ft2} panel pairs); {hexagons} hexagons; {naturality} naturality trials"
    ))
}

fn criterion_5() -> Outcome {
    let field = PrimeField::new(3).unwrap();
    let a = point(FiniteGroup::cyclic(2));
    let inert = inertia_arc(&a);
    let g = 1;
    let gpair = inert.pair_index(0, g).unwrap();
    let sign = EquivariantModule::character(&a, field, &[1, field.from_i64(-1)]).map_err(e)?;
    // the (g, sign) simple: sign character at the twisted pair
    let simple = InertiaModule::simples(&inert, field)
        .map_err(e)?
        .into_iter()
        .find(|s| s.module().dim(gpair) == 1 && s.module().rho(g, gpair).get(0, 0) == field.from_i64(-1))
        .ok_or("no (g, sign) inertia simple")?;
    let d = theta(&simple).map_err(e)?;
    let c = double_braiding(&d, &d).map_err(e)?;
    let scalar = c.at(0).as_scalar().ok_or("self-braiding is not a scalar")?;
    // by hand: c = swap ∘ Σ φ_h ⊗ ρ(h) = φ_g ⊗ ρ(g) = 1 · (−1)
    let by_hand = field.from_i64(-1);
    check(scalar == by_hand, || format!("self-braiding {} ≠ −1", field.to_signed(scalar)))?;
    // the enumeration oracle finds the family with φ_g = 1 on the sign module
    let families = enumerate_half_braidings(&sign, 40).map_err(e)?;
    let twisted = families.iter().find(|f| f.phi(g, 0).is_identity()).ok_or("oracle lacks the φ_g = 1 family")?;
    let forced: u32 = a
        .group()
        .elements()
        .fold(0, |acc, h| field.add(acc, field.mul(twisted.phi(h, 0).get(0, 0), sign.rho(h, 0).get(0, 0))));
    check(forced == by_hand, || format!("oracle family gives {}", field.to_signed(forced)))?;
    Ok(format!("self-braiding of (g, sign) = {} = −1 mod 3; oracle agrees", scalar))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    for (name, a) in zoo() {
        let field = field_of(&a);
        let ring = FunctionRing::new(a.clone(), field);
        for h in a.group().elements() {
            let q = twisted_quotient(&ring, h).map_err(e)?;
            let fixed = a.fixed_points(h).len();
            check(q.dim == fixed, || format!("{name}, h = {h}: quotient dimension {} vs {fixed} fixed points", q.dim))?;
            checked += 1;
        }
        ring_b(&a, field).map_err(|err| format!("{name}: ring B: {err}"))?;
    }
    within(Duration::from_secs(5), start)?;
    Ok(format!(
        "{checked} quotients match fixed points; ring B verified on {} actions ({:.2?})",
        zoo().len(),
        start.elapsed()
    ))
}

fn criterion_7() -> Outcome {
    let mut count = 0;
    for (name, a) in [
        ("S3 on 3+1 points", zoo()[7].1.clone()),
        ("Z2 on a,b,c", z2_swap(3)),
        ("Z4 on a point", point(FiniteGroup::cyclic(4))),
    ] {
        let field = field_of(&a);
        let inert = inertia(&a);
        let di = double_inertia(&inert);
        let maps: [(&str, &EquivariantMap); 4] =
            [("pi", inert.projection()), ("p1", &di.p1), ("p2", &di.p2), ("m", &di.m)];
        for (label, f) in maps {
            for t in 0..5u64 {
                let m = random_module(f.source(), field, 2, 50 + t).map_err(e)?;
                let n = random_module(f.target(), field, 2, 90 + t).map_err(e)?;
                let iso = projection_iso(f, &m, &n).map_err(|err| format!("{name}, {label}, trial {t}: {err}"))?;
                check(iso.is_isomorphism(), || format!("{name}, {label}, trial {t}: not invertible"))?;
                count += 1;
            }
        }
    }
    check(count >= 50, || format!("only {count} instances"))?;
    Ok(format!("{count} certified isomorphisms over pi, p1, p2, m"))
}

fn criterion_8() -> Outcome {
    let mut pairs = 0;
    for (name, a) in [("Z2 on a point", point(FiniteGroup::cyclic(2))), ("S3 on a point", point(s3().0))] {
        let field = field_of(&a);
        let inert = inertia_arc(&a);
        let simples = InertiaModule::simples(&inert, field).map_err(e)?;
        for (i, s) in simples.iter().enumerate() {
            for (j, t) in simples.iter().enumerate() {
                theta_monoidal_iso(s, t).map_err(|err| format!("{name}, simples ({i},{j}): {err}"))?;
                pairs += 1;
            }
        }
    }
    let a = z2_swap(3);
    let field = field_of(&a);
    let inert = inertia_arc(&a);
    for t in 0..32u64 {
        let m = InertiaModule::random(&inert, field, 2, 500 + 2 * t).map_err(e)?;
        let n = InertiaModule::random(&inert, field, 2, 501 + 2 * t).map_err(e)?;
        theta_monoidal_iso(&m, &n).map_err(|err| format!("Z2 on a,b,c, random pair {t}: {err}"))?;
        pairs += 1;
    }
    Ok(format!("{pairs} certified comparisons (all simple pairs for Z2, S3; 32 random pairs on a,b,c)"))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let atlas = example_z2_abc();
    let field = PrimeField::new(3).unwrap();
    let lines =
        sections_equivalence_check(&atlas, field, &EquivalenceOptions { seed: 9, ..EquivalenceOptions::default() })
            .map_err(e)?;
    for name in [
        "atlas",
        "restrict-descend",
        "descend-restrict",
        "double-restrict-glue",
        "glued-sections-verify",
        "simple-count",
    ] {
        let line = lines.iter().find(|l| l.name == name).ok_or_else(|| format!("no {name} line"))?;
        check(line.passed, || line.to_string())?;
    }
    let counts = chartwise_double_counts(&atlas);
    let inert = inertia_arc(atlas.base());
    let base = InertiaModule::simples(&inert, field).map_err(e)?.len();
    check(counts == [1, 4] && base == 5, || format!("chart counts {counts:?}, base inertia count {base}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!("round trips certified; chart counts 1 + 4 = {base}; glued sections verified ({:.2?})", start.elapsed()))
}

fn criterion_10() -> Outcome {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/z2_abc_atlas.json");
    let text = std::fs::read_to_string(&path).map_err(e)?;
    for format in [Format::Json, Format::Text] {
        let mut config = JobConfig::new(&path, Command::Verify);
        config.format = format;
        config.seed = 42;
        let first = run_on_text(&text, &config).map_err(e)?;
        let second = run_on_text(&text, &config).map_err(e)?;
        check(first.rendered == second.rendered, || format!("{format:?} reports differ"))?;
        check(first.exit_code == 0, || format!("verify exited {}", first.exit_code))?;
    }
    Ok("verify reports byte-identical across runs (json and text)".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("main-theorem oracle", criterion_1),
        ("round trips", criterion_2),
        ("simple counts", criterion_3),
        ("axioms", criterion_4),
        ("D(Z2) braiding", criterion_5),
        ("ring check", criterion_6),
        ("projection formula", criterion_7),
        ("monoidal transport", criterion_8),
        ("descent", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
