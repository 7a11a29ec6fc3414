//! Charts, atlases, cocartesian sections and descent over a finite action.
//!
//! The index category of an atlas has one object per chart and per overlap
//! chart, and one morphism per overlap leg. A leg `f: (V, K) → (U, H)`
//! carries a two-cell from `embed_U ∘ f` to `embed_V`, so chart morphisms
//! commute with the embeddings only up to a recorded natural isomorphism.
//!
//! Descent anchors every base orbit at a chart point `(n0, u0)` and defines
//! the glued module on that orbit as the induction of the stabilizer action
//! on `M_{n0,u0}`. Fiber identifications are then spread over all chart
//! points along chart arrows and transition isomorphisms; every edge is
//! checked afterwards, so path dependence shows up as an incompatibility.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::double::{
    double_hom_space, double_simples, find_double_isomorphism, is_double_morphism, pullback_half_braiding,
    structural_violations, theta, verify_half_braiding, HalfBraidedModule, InertiaModule, PanelOptions,
};
use crate::equivariant::{
    self, find_isomorphism, hom_dim, pullback, random_invertible, random_module, rng_from_seed, EquivariantModule,
    ModuleMap,
};
use crate::error::{Error, Result};
use crate::group::check_splitting;
use crate::gset::{inertia, EquivariantMap, GroupAction, InertiaAction, TwoMorphism};
use crate::linalg::{Matrix, PrimeField};

/// A local model `(U, H)` with an open embedding into the base.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chart {
    embed: EquivariantMap,
}

impl Chart {
    pub fn new(embed: EquivariantMap) -> Result<Self> {
        let check = embed.is_open_embedding();
        if !check.holds() {
            return Err(Error::InvalidAtlas(format!("chart embedding is not open: {check:?}")));
        }
        Ok(Chart { embed })
    }

    /// The whole base with the identity embedding.
    pub fn full(base: &Arc<GroupAction>) -> Self {
        Chart { embed: EquivariantMap::identity(base) }
    }

    pub fn local(&self) -> &Arc<GroupAction> {
        self.embed.source()
    }
    pub fn embed(&self) -> &EquivariantMap {
        &self.embed
    }
}

/// One leg of an overlap: a map into chart `target` and the two-cell
/// `embed_target ∘ map ⇒ embed_overlap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Leg {
    pub target: usize,
    pub map: EquivariantMap,
    pub cell: Vec<usize>,
}

/// An overlap chart mapping to two charts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub chart: Chart,
    pub legs: [Leg; 2],
}

/// A morphism of the index category, between node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChartMorphism {
    pub source: usize,
    pub target: usize,
    pub map: EquivariantMap,
    pub cell: TwoMorphism,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atlas {
    base: Arc<GroupAction>,
    charts: Vec<Chart>,
    overlaps: Vec<Overlap>,
    morphisms: Vec<ChartMorphism>,
}

impl Atlas {
    /// Checks that every chart embeds into `base`, and every leg is an open
    /// embedding into its chart with a valid two-cell.
    pub fn new(base: Arc<GroupAction>, charts: Vec<Chart>, overlaps: Vec<Overlap>) -> Result<Self> {
        for (i, c) in charts.iter().chain(overlaps.iter().map(|o| &o.chart)).enumerate() {
            if c.embed.target() != &base {
                return Err(Error::InvalidAtlas(format!("node {i} does not embed into the base")));
            }
        }
        let mut morphisms = Vec::new();
        for (k, o) in overlaps.iter().enumerate() {
            let node = charts.len() + k;
            for leg in &o.legs {
                let target = charts.get(leg.target).ok_or_else(|| {
                    Error::InvalidAtlas(format!("overlap {k} refers to missing chart {}", leg.target))
                })?;
                if leg.map.source() != o.chart.local() || leg.map.target() != target.local() {
                    return Err(Error::InvalidAtlas(format!(
                        "overlap {k}: leg to chart {} has wrong ends",
                        leg.target
                    )));
                }
                let check = leg.map.is_open_embedding();
                if !check.holds() {
                    return Err(Error::InvalidAtlas(format!(
                        "overlap {k}: leg to chart {} is not open: {check:?}",
                        leg.target
                    )));
                }
                let from = leg.map.then(target.embed())?;
                let cell = TwoMorphism::new(from, o.chart.embed.clone(), leg.cell.clone())
                    .map_err(|e| Error::InvalidAtlas(format!("overlap {k}: {e}")))?;
                morphisms.push(ChartMorphism { source: node, target: leg.target, map: leg.map.clone(), cell });
            }
        }
        Ok(Atlas { base, charts, overlaps, morphisms })
    }

    /// The atlas with a single chart, the base itself.
    pub fn single(base: &Arc<GroupAction>) -> Self {
        Atlas { base: base.clone(), charts: vec![Chart::full(base)], overlaps: Vec::new(), morphisms: Vec::new() }
    }

    pub fn base(&self) -> &Arc<GroupAction> {
        &self.base
    }
    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }
    pub fn overlaps(&self) -> &[Overlap] {
        &self.overlaps
    }
    /// Charts followed by overlap charts.
    pub fn nodes(&self) -> Vec<&Chart> {
        self.charts.iter().chain(self.overlaps.iter().map(|o| &o.chart)).collect()
    }
    pub fn node_count(&self) -> usize {
        self.charts.len() + self.overlaps.len()
    }
    pub fn morphisms(&self) -> &[ChartMorphism] {
        &self.morphisms
    }
}

/// `Z2` acting on `{a, b, c}` by swapping `a` and `b`, covered by the charts
/// `({a, b}, Z2)` and `({c}, Z2)`.
pub fn example_z2_abc() -> Atlas {
    let base = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0, 2]).expect("involution"));
    let ab = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0]).expect("involution"));
    let c = Arc::new(GroupAction::point(base.group().clone()));
    let id = crate::group::GroupHom::identity(base.group());
    let charts = vec![
        Chart::new(EquivariantMap::new(ab, base.clone(), id.clone(), vec![0, 1]).expect("equivariant")).expect("open"),
        Chart::new(EquivariantMap::new(c, base.clone(), id, vec![2]).expect("equivariant")).expect("open"),
    ];
    Atlas::new(base, charts, Vec::new()).expect("valid atlas")
}

/// Outcome of [`validate_atlas`]; witnesses are base points.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtlasReport {
    /// one point per uncovered orbit
    pub uncovered: Vec<usize>,
    /// `(chart i, chart j, point)`: the orbit of the point meets both images
    /// but no overlap of `i` and `j` reaches it
    pub missing_overlaps: Vec<(usize, usize, usize)>,
}

impl AtlasReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty() && self.missing_overlaps.is_empty()
    }
}

impl fmt::Display for AtlasReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "atlas ok");
        }
        for x in &self.uncovered {
            writeln!(f, "uncovered point {x}")?;
        }
        for (i, j, x) in &self.missing_overlaps {
            writeln!(f, "charts {i} and {j} both reach point {x} but no overlap does")?;
        }
        Ok(())
    }
}

fn image_orbits(chart: &Chart, orbit_of: &[usize], count: usize) -> Vec<bool> {
    let mut hit = vec![false; count];
    for u in 0..chart.local().size() {
        hit[orbit_of[chart.embed.alpha(u)]] = true;
    }
    hit
}

/// Surjectivity on orbits, and the overlap condition on orbits.
pub fn validate_atlas(a: &Atlas) -> AtlasReport {
    let orbits = a.base.orbits();
    let orbit_of = a.base.orbit_index();
    let hits: Vec<Vec<bool>> = a.charts.iter().map(|c| image_orbits(c, &orbit_of, orbits.len())).collect();
    let mut report = AtlasReport::default();
    for (o, orbit) in orbits.iter().enumerate() {
        if !hits.iter().any(|h| h[o]) {
            report.uncovered.push(orbit[0]);
        }
    }
    for i in 0..a.charts.len() {
        for j in i + 1..a.charts.len() {
            for (o, orbit) in orbits.iter().enumerate() {
                if !(hits[i][o] && hits[j][o]) {
                    continue;
                }
                let covered = a.overlaps.iter().any(|ov| {
                    let mut targets = [ov.legs[0].target, ov.legs[1].target];
                    targets.sort_unstable();
                    targets == [i, j] && image_orbits(&ov.chart, &orbit_of, orbits.len())[o]
                });
                if !covered {
                    report.missing_overlaps.push((i, j, orbit[0]));
                }
            }
        }
    }
    report
}

/// Chart modules with transition isomorphisms `f^*(M_target) → M_source`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CocartesianSection {
    pub modules: Vec<EquivariantModule>,
    pub transitions: Vec<ModuleMap>,
}

/// Ends, invertibility of every transition.
pub fn validate_section(a: &Atlas, s: &CocartesianSection) -> Result<()> {
    let nodes = a.nodes();
    if s.modules.len() != nodes.len() || s.transitions.len() != a.morphisms.len() {
        return Err(Error::IncompatibleSection("wrong number of chart modules or transitions".into()));
    }
    for (n, (m, c)) in s.modules.iter().zip(&nodes).enumerate() {
        if m.action() != c.local() {
            return Err(Error::IncompatibleSection(format!("module {n} does not live on its chart")));
        }
    }
    for (k, (t, f)) in s.transitions.iter().zip(&a.morphisms).enumerate() {
        if t.source() != &pullback(&f.map, &s.modules[f.target])? || t.target() != &s.modules[f.source] {
            return Err(Error::IncompatibleSection(format!("transition {k} has wrong ends")));
        }
        if !t.is_isomorphism() {
            return Err(Error::IncompatibleSection(format!("transition {k} is not invertible")));
        }
    }
    Ok(())
}

/// Chart pullbacks of a base module with the transitions given by the
/// two-cells.
pub fn restrict(a: &Atlas, m: &EquivariantModule) -> Result<CocartesianSection> {
    let modules: Vec<EquivariantModule> = a.nodes().iter().map(|c| pullback(c.embed(), m)).collect::<Result<_>>()?;
    let transitions = a
        .morphisms
        .iter()
        .map(|f| {
            let comps = (0..f.map.source().size())
                .map(|w| m.rho(f.cell.component(w), f.cell.from_map().alpha(w)).clone())
                .collect();
            ModuleMap::new(&pullback(&f.map, &modules[f.target])?, &modules[f.source], comps)
        })
        .collect::<Result<_>>()?;
    Ok(CocartesianSection { modules, transitions })
}

/// A glued base module with certified isomorphisms `embed_n^*(M) → M_n`.
#[derive(Debug, Clone)]
pub struct Descent {
    pub module: EquivariantModule,
    pub certificates: Vec<ModuleMap>,
}

struct Gluing {
    offsets: Vec<usize>,
    /// per vertex: (anchor vertex, base arrow from the anchor's image, fiber map from the anchor's fiber)
    reached: Vec<(usize, usize, Matrix)>,
    anchors: Vec<(usize, usize)>,
}

fn spread(a: &Atlas, s: &CocartesianSection) -> Result<Gluing> {
    let nodes = a.nodes();
    let g = a.base.group();
    let mut offsets = vec![0];
    for c in &nodes {
        offsets.push(offsets.last().unwrap() + c.local().size());
    }
    let total = *offsets.last().unwrap();
    let vertex = |n: usize, v: usize| offsets[n] + v;
    let node_of = |id: usize| {
        let n = offsets.partition_point(|&o| o <= id) - 1;
        (n, id - offsets[n])
    };
    let base_point = |id: usize| {
        let (n, v) = node_of(id);
        nodes[n].embed().alpha(v)
    };
    let orbit_of = a.base.orbit_index();
    let inverses: Vec<Vec<Matrix>> = s
        .transitions
        .iter()
        .map(|t| t.components().iter().map(Matrix::inverse).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let field = s.modules.first().map(|m| m.field()).unwrap_or_else(|| PrimeField::new(2).unwrap());

    let mut reached: Vec<Option<(usize, usize, Matrix)>> = vec![None; total];
    let mut anchors = Vec::new();
    let mut orbit_anchor = vec![None; a.base.orbits().len()];
    for start in 0..total {
        if reached[start].is_some() {
            continue;
        }
        let o = orbit_of[base_point(start)];
        if orbit_anchor[o].is_some() {
            // reached from nothing although its orbit already has an anchor
            let (n, v) = node_of(start);
            return Err(Error::IncompatibleSection(format!(
                "point {v} of chart {n} is not linked to the anchor of its orbit by overlaps"
            )));
        }
        orbit_anchor[o] = Some(start);
        anchors.push(node_of(start));
        let (n0, u0) = node_of(start);
        reached[start] = Some((start, g.identity(), Matrix::identity(field, s.modules[n0].dim(u0))));
        let mut queue = VecDeque::from([start]);
        while let Some(id) = queue.pop_front() {
            let (n, v) = node_of(id);
            let (anchor, arrow, fiber) = reached[id].clone().expect("queued vertices are reached");
            let mut next: Vec<(usize, usize, Matrix)> = Vec::new();
            let local = nodes[n].local();
            let gamma = nodes[n].embed().gamma();
            for h in local.group().elements() {
                next.push((
                    vertex(n, local.act(h, v)),
                    g.mul(gamma.apply(h), arrow),
                    s.modules[n].rho(h, v).mul(&fiber),
                ));
            }
            for (k, f) in a.morphisms.iter().enumerate() {
                if f.source == n {
                    let c = f.cell.component(v);
                    next.push((vertex(f.target, f.map.alpha(v)), g.mul(g.inv(c), arrow), inverses[k][v].mul(&fiber)));
                }
                if f.target == n {
                    for w in (0..f.map.source().size()).filter(|&w| f.map.alpha(w) == v) {
                        let c = f.cell.component(w);
                        next.push((vertex(f.source, w), g.mul(c, arrow), s.transitions[k].at(w).mul(&fiber)));
                    }
                }
            }
            for (to, arrow, fiber) in next {
                if reached[to].is_none() {
                    reached[to] = Some((anchor, arrow, fiber));
                    queue.push_back(to);
                }
            }
        }
    }
    Ok(Gluing { offsets, reached: reached.into_iter().map(|r| r.expect("all vertices visited")).collect(), anchors })
}

/// Glues a section to a base module, certifying compatibility with every
/// transition.
pub fn descend(a: &Atlas, s: &CocartesianSection) -> Result<Descent> {
    validate_section(a, s)?;
    let report = validate_atlas(a);
    if !report.passed() {
        return Err(Error::InvalidAtlas(report.to_string().trim_end().to_string()));
    }
    let nodes = a.nodes();
    let base = a.base.clone();
    let g = base.group().clone();
    let field = s.modules[0].field();
    let glue = spread(a, s)?;

    // stabilizer action at each anchor, pushed to the base through the chart
    let mut orbit_data: Vec<Option<(usize, usize, usize)>> = vec![None; base.size()];
    let mut transversals = Vec::new();
    for (i, &(n0, u0)) in glue.anchors.iter().enumerate() {
        let x0 = nodes[n0].embed().alpha(u0);
        let t = base.transversal(x0);
        for (x, tx) in t.iter().enumerate() {
            if tx.is_some() {
                orbit_data[x] = Some((i, n0, u0));
            }
        }
        transversals.push(t);
    }
    let lift = |n0: usize, u0: usize, k: usize| -> Result<usize> {
        let c = nodes[n0];
        c.local()
            .stabilizer(u0)
            .into_iter()
            .find(|&h| c.embed().gamma().apply(h) == k)
            .ok_or_else(|| Error::InvalidAtlas(format!("chart {n0} misses an automorphism of point {u0}")))
    };
    let mut rho = Vec::with_capacity(g.order() * base.size());
    let mut dims = vec![0; base.size()];
    for x in 0..base.size() {
        let (_, n0, u0) = orbit_data[x].expect("atlas covers every orbit");
        dims[x] = s.modules[n0].dim(u0);
    }
    for k in g.elements() {
        for x in 0..base.size() {
            let (i, n0, u0) = orbit_data[x].expect("atlas covers every orbit");
            let t = &transversals[i];
            let (tx, tkx) = (t[x].expect("in orbit"), t[base.act(k, x)].expect("in orbit"));
            let s_elt = g.mul(g.mul(g.inv(tkx), k), tx);
            rho.push(s.modules[n0].rho(lift(n0, u0, s_elt)?, u0).clone());
        }
    }
    let module = EquivariantModule::new(base.clone(), field, dims, rho)?;

    let mut certificates = Vec::with_capacity(nodes.len());
    for (n, c) in nodes.iter().enumerate() {
        let comps = (0..c.local().size())
            .map(|v| {
                let (_, arrow, fiber) = &glue.reached[glue.offsets[n] + v];
                fiber.mul(module.rho(g.inv(*arrow), c.embed().alpha(v)))
            })
            .collect();
        let cert = ModuleMap::new(&pullback(c.embed(), &module)?, &s.modules[n], comps)
            .map_err(|e| Error::IncompatibleSection(format!("chart {n}: identifications are path dependent ({e})")))?;
        certificates.push(cert);
    }
    for (k, f) in a.morphisms.iter().enumerate() {
        for w in 0..f.map.source().size() {
            let y = f.cell.from_map().alpha(w);
            let lhs = certificates[f.source].at(w).mul(module.rho(f.cell.component(w), y));
            let rhs = s.transitions[k].at(w).mul(certificates[f.target].at(f.map.alpha(w)));
            if lhs != rhs {
                return Err(Error::IncompatibleSection(format!(
                    "transition {k} at point {w}: cert_source ∘ cell != transition ∘ cert_target"
                )));
            }
        }
    }
    Ok(Descent { module, certificates })
}

/// Chart-level half-braided modules with transitions matching the φ-families.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelativeDoubleSection {
    pub objects: Vec<HalfBraidedModule>,
    pub transitions: Vec<ModuleMap>,
}

impl RelativeDoubleSection {
    pub fn underlying(&self) -> CocartesianSection {
        CocartesianSection {
            modules: self.objects.iter().map(|d| d.module().clone()).collect(),
            transitions: self.transitions.clone(),
        }
    }
}

/// Section invariants plus compatibility of each transition with the
/// pulled-back φ-family.
pub fn validate_double_section(a: &Atlas, s: &RelativeDoubleSection) -> Result<()> {
    validate_section(a, &s.underlying())?;
    for (n, d) in s.objects.iter().enumerate() {
        if let Some(v) = structural_violations(d, 1).into_iter().next() {
            return Err(Error::IncompatibleSection(format!("chart {n}: {v}")));
        }
    }
    for (k, (t, f)) in s.transitions.iter().zip(&a.morphisms).enumerate() {
        let pulled = pullback_half_braiding(&f.map, &s.objects[f.target])?;
        if !is_double_morphism(t, &pulled, &s.objects[f.source]) {
            return Err(Error::IncompatibleSection(format!("transition {k} does not match the φ-families")));
        }
    }
    Ok(())
}

pub fn restrict_double(a: &Atlas, d: &HalfBraidedModule) -> Result<RelativeDoubleSection> {
    let base = restrict(a, d.module())?;
    let objects = a.nodes().iter().map(|c| pullback_half_braiding(c.embed(), d)).collect::<Result<_>>()?;
    Ok(RelativeDoubleSection { objects, transitions: base.transitions })
}

/// A glued half-braided module with certificates that are double morphisms.
#[derive(Debug, Clone)]
pub struct DoubleDescent {
    pub object: HalfBraidedModule,
    pub certificates: Vec<ModuleMap>,
}

/// Glues a relative double section: descends the modules, reads the φ-family
/// off the anchor chart, spreads it by equivariance and checks it against
/// every chart.
pub fn glue_double(a: &Atlas, s: &RelativeDoubleSection) -> Result<DoubleDescent> {
    validate_double_section(a, s)?;
    let descent = descend(a, &s.underlying())?;
    let base = a.base.clone();
    let g = base.group();
    let m = &descent.module;
    let nodes = a.nodes();
    let n = base.size();
    let mut phi: Vec<Matrix> =
        (0..g.order() * n).map(|i| Matrix::zero(m.field(), m.dim(i % n), m.dim(i % n))).collect();
    let mut done = vec![false; n];
    for (c_idx, c) in nodes.iter().enumerate() {
        let cert = &descent.certificates[c_idx];
        for v in 0..c.local().size() {
            let x0 = c.embed().alpha(v);
            if done[x0] {
                continue;
            }
            // φ at x0 read off this chart, then moved around the orbit
            let inv = cert.at(v).inverse()?;
            let mut at_x0 = vec![None; g.order()];
            for h in c.local().stabilizer(v) {
                at_x0[c.embed().gamma().apply(h)] = Some(inv.mul(s.objects[c_idx].phi(h, v)).mul(cert.at(v)));
            }
            for (x, t) in base.transversal(x0).into_iter().enumerate() {
                let Some(t) = t else { continue };
                let there = m.rho(t, x0);
                let back = m.rho(g.inv(t), x);
                for k in base.stabilizer(x) {
                    let local = at_x0[g.conj(g.inv(t), k)].clone().ok_or_else(|| {
                        Error::InvalidAtlas(format!("chart {c_idx} misses an automorphism of point {v}"))
                    })?;
                    phi[k * n + x] = there.mul(&local).mul(back);
                }
                done[x] = true;
            }
        }
    }
    let object = HalfBraidedModule::new(m.clone(), phi)?;
    for (n, c) in nodes.iter().enumerate() {
        let pulled = pullback_half_braiding(c.embed(), &object)?;
        if !is_double_morphism(&descent.certificates[n], &pulled, &s.objects[n]) {
            return Err(Error::IncompatibleSection(format!(
                "chart {n}: glued φ-family does not restrict to the chart datum"
            )));
        }
    }
    Ok(DoubleDescent { object, certificates: descent.certificates })
}

/// The section transported chart by chart along random fiber isomorphisms.
pub fn scramble_section<R: Rng>(a: &Atlas, s: &CocartesianSection, rng: &mut R) -> Result<CocartesianSection> {
    let field = s.modules[0].field();
    let isos: Vec<Vec<Matrix>> =
        s.modules.iter().map(|m| m.dims().iter().map(|&d| random_invertible(field, d, rng)).collect()).collect();
    transport_section(a, s, &isos)
}

fn transport_section(a: &Atlas, s: &CocartesianSection, isos: &[Vec<Matrix>]) -> Result<CocartesianSection> {
    let modules: Vec<EquivariantModule> =
        s.modules.iter().zip(isos).map(|(m, t)| m.transport(t)).collect::<Result<_>>()?;
    let transitions = a
        .morphisms
        .iter()
        .zip(&s.transitions)
        .map(|(f, t)| {
            let comps = (0..f.map.source().size())
                .map(|w| {
                    let back = isos[f.target][f.map.alpha(w)].inverse()?;
                    Ok(isos[f.source][w].mul(t.at(w)).mul(&back))
                })
                .collect::<Result<_>>()?;
            ModuleMap::new(&pullback(&f.map, &modules[f.target])?, &modules[f.source], comps)
        })
        .collect::<Result<_>>()?;
    Ok(CocartesianSection { modules, transitions })
}

/// A relative double section transported along random fiber isomorphisms.
pub fn scramble_double_section<R: Rng>(
    a: &Atlas,
    s: &RelativeDoubleSection,
    rng: &mut R,
) -> Result<RelativeDoubleSection> {
    let field = s.objects[0].field();
    let isos: Vec<Vec<Matrix>> = s
        .objects
        .iter()
        .map(|d| d.module().dims().iter().map(|&k| random_invertible(field, k, rng)).collect())
        .collect();
    let under = transport_section(a, &s.underlying(), &isos)?;
    let objects = s.objects.iter().zip(&isos).map(|(d, t)| d.transport(t)).collect::<Result<_>>()?;
    Ok(RelativeDoubleSection { objects, transitions: under.transitions })
}

fn inertia_map(f: &EquivariantMap, src: &InertiaAction, tgt: &InertiaAction) -> Result<EquivariantMap> {
    let alpha = src
        .pairs()
        .iter()
        .map(|&(u, h)| {
            tgt.pair_index(f.alpha(u), f.gamma().apply(h))
                .ok_or_else(|| Error::InvalidMap("image of a fixed pair is not fixed".into()))
        })
        .collect::<Result<_>>()?;
    EquivariantMap::new(src.action().clone(), tgt.action().clone(), f.gamma().clone(), alpha)
}

/// Per chart `(U, H)`, the chart `(∐_h U^h, H)` of the inertia.
pub fn inertia_atlas(a: &Atlas) -> Result<Atlas> {
    let base_inertia = inertia(&a.base);
    let nodes = a.nodes();
    let local: Vec<InertiaAction> = nodes.iter().map(|c| inertia(c.local())).collect();
    let charts: Vec<Chart> = (0..a.charts.len())
        .map(|n| Chart::new(inertia_map(nodes[n].embed(), &local[n], &base_inertia)?))
        .collect::<Result<_>>()?;
    let overlaps = a
        .overlaps
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let n = a.charts.len() + k;
            let chart = Chart::new(inertia_map(o.chart.embed(), &local[n], &base_inertia)?)?;
            let legs = o.legs.clone().map(|leg| {
                let map = inertia_map(&leg.map, &local[n], &local[leg.target]).expect("legs preserve fixed pairs");
                let cell = local[n].pairs().iter().map(|&(w, _)| leg.cell[w]).collect();
                Leg { target: leg.target, map, cell }
            });
            Ok(Overlap { chart, legs })
        })
        .collect::<Result<_>>()?;
    Atlas::new(base_inertia.action().clone(), charts, overlaps)
}

/// Per base orbit, the double simple count of the anchor chart over that
/// orbit; returns the per-chart totals.
pub fn chartwise_double_counts(a: &Atlas) -> Vec<usize> {
    let nodes = a.nodes();
    let orbit_of = a.base.orbit_index();
    let mut anchored = vec![None; a.base.orbits().len()];
    for (n, c) in nodes.iter().enumerate().take(a.charts.len()) {
        for u in 0..c.local().size() {
            let o = orbit_of[c.embed().alpha(u)];
            if anchored[o].is_none() {
                anchored[o] = Some((n, u));
            }
        }
    }
    let mut counts = vec![0; a.charts.len()];
    for (n, c) in nodes.iter().enumerate().take(a.charts.len()) {
        let local_inertia = inertia(c.local());
        let ia = local_inertia.action();
        for orbit in ia.orbits() {
            let (u, _) = local_inertia.pairs()[orbit[0]];
            let o = orbit_of[c.embed().alpha(u)];
            let (an, au) = anchored[o].expect("chart points lie in covered orbits");
            let same_orbit = an == n && c.local().orbits().iter().any(|lo| lo.contains(&u) && lo.contains(&au));
            if same_orbit {
                let stab = ia.stabilizer(orbit[0]);
                counts[n] += ia.group().subgroup(&stab).expect("stabilizer").0.class_count();
            }
        }
    }
    counts
}

#[derive(Debug, Clone, Copy)]
pub struct EquivalenceOptions {
    pub seed: u64,
    pub random: usize,
    pub max_dim: usize,
}

impl Default for EquivalenceOptions {
    fn default() -> Self {
        EquivalenceOptions { seed: 0, random: 32, max_dim: 2 }
    }
}

/// One line of a check report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

fn line(name: &str, failures: &[String], detail: String) -> CheckLine {
    CheckLine {
        name: name.into(),
        passed: failures.is_empty(),
        detail: if failures.is_empty() { detail } else { failures.join("; ") },
    }
}

/// Panel-certified equivalence between base objects and sections, for both
/// modules and half-braided modules. The panel is all simples plus
/// `opts.random` seeded random objects.
pub fn sections_equivalence_check(a: &Atlas, field: PrimeField, opts: &EquivalenceOptions) -> Result<Vec<CheckLine>> {
    let report = validate_atlas(a);
    let mut lines = vec![CheckLine {
        name: "atlas".into(),
        passed: report.passed(),
        detail: report.to_string().trim_end().to_string(),
    }];
    if !report.passed() {
        return Ok(lines);
    }
    check_splitting(a.base.group(), field.modulus())?;
    let mut rng = rng_from_seed(opts.seed);
    let mut panel = equivariant::construct_simples(&a.base, field)?;
    let simple_count = panel.len();
    for i in 0..opts.random {
        panel.push(random_module(&a.base, field, opts.max_dim, opts.seed.wrapping_add(i as u64))?);
    }

    let mut failures = Vec::new();
    for (i, m) in panel.iter().enumerate() {
        let outcome = descend(a, &restrict(a, m)?).and_then(|d| {
            let same = hom_dim(&d.module, m)? == hom_dim(m, m)? && find_isomorphism(&d.module, m, &mut rng)?.is_some();
            Ok(same)
        });
        match outcome {
            Ok(true) => {}
            Ok(false) => failures.push(format!("panel module {i}: glued module not isomorphic")),
            Err(e) => failures.push(format!("panel module {i}: {e}")),
        }
    }
    lines.push(line(
        "restrict-descend",
        &failures,
        format!("{} modules ({simple_count} simples + {} random)", panel.len(), opts.random),
    ));

    let mut failures = Vec::new();
    for (i, m) in panel.iter().enumerate() {
        let section = scramble_section(a, &restrict(a, m)?, &mut rng)?;
        match descend(a, &section) {
            Ok(d) if d.certificates.iter().all(ModuleMap::is_isomorphism) => {}
            Ok(_) => failures.push(format!("section {i}: certificate not invertible")),
            Err(e) => failures.push(format!("section {i}: {e}")),
        }
    }
    lines.push(line("descend-restrict", &failures, format!("{} scrambled sections", panel.len())));

    let base_inertia = Arc::new(inertia(&a.base));
    let mut doubles = double_simples(&base_inertia, field)?;
    let double_simple_count = doubles.len();
    for i in 0..opts.random {
        let mp = InertiaModule::random(&base_inertia, field, opts.max_dim, opts.seed.wrapping_add(1000 + i as u64))?;
        doubles.push(theta(&mp)?);
    }
    let mut failures = Vec::new();
    for (i, d) in doubles.iter().enumerate() {
        let outcome = glue_double(a, &restrict_double(a, d)?)
            .and_then(|glued| Ok(find_double_isomorphism(&glued.object, d, &mut rng)?.is_some()));
        match outcome {
            Ok(true) => {}
            Ok(false) => failures.push(format!("double object {i}: glued object not isomorphic")),
            Err(e) => failures.push(format!("double object {i}: {e}")),
        }
    }
    lines.push(line(
        "double-restrict-glue",
        &failures,
        format!("{} objects ({double_simple_count} simples + {} random)", doubles.len(), opts.random),
    ));

    let mut failures = Vec::new();
    let panel_opts = PanelOptions { seed: opts.seed, random_modules: 1, max_dim: 1 };
    for (i, d) in doubles.iter().enumerate() {
        let section = scramble_double_section(a, &restrict_double(a, d)?, &mut rng)?;
        match glue_double(a, &section) {
            Ok(glued) => {
                let r = verify_half_braiding(&glued.object, &panel_opts);
                if !r.passed() {
                    failures.push(format!("section {i}: {}", r.violations[0]));
                }
            }
            Err(e) => failures.push(format!("section {i}: {e}")),
        }
    }
    lines.push(line("glued-sections-verify", &failures, format!("{} scrambled double sections", doubles.len())));

    let counts = chartwise_double_counts(a);
    let total: usize = counts.iter().sum();
    let expected = equivariant::count_simples(base_inertia.action(), field)?;
    let detail = format!(
        "{} = {total}, base inertia {expected}",
        counts.iter().map(usize::to_string).collect::<Vec<_>>().join(" + ")
    );
    lines.push(CheckLine { name: "simple-count".into(), passed: total == expected, detail });

    lines.push(lift_uniqueness(a, field)?);

    let ia = inertia_atlas(a)?;
    let r = validate_atlas(&ia);
    lines.push(CheckLine { name: "inertia-atlas".into(), passed: r.passed(), detail: r.to_string().trim_end().into() });
    Ok(lines)
}

/// For every chart morphism and every simple double object on its target,
/// the pulled-back object is zero or has one-dimensional endomorphisms, so
/// lifts are unique up to a unique scalar.
pub fn lift_uniqueness(a: &Atlas, field: PrimeField) -> Result<CheckLine> {
    let nodes = a.nodes();
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut skipped = 0;
    for (k, f) in a.morphisms.iter().enumerate() {
        let target = nodes[f.target].local();
        if check_splitting(target.group(), field.modulus()).is_err() {
            skipped += 1;
            continue;
        }
        for (i, d) in double_simples(&Arc::new(inertia(target)), field)?.iter().enumerate() {
            let pulled = pullback_half_braiding(&f.map, d)?;
            if pulled.module().total_dim() == 0 {
                continue;
            }
            checked += 1;
            let dim = double_hom_space(&pulled, &pulled)?.len();
            if dim != 1 {
                failures.push(format!("morphism {k}, simple {i}: endomorphisms of dimension {dim}"));
            }
        }
    }
    Ok(line("lift-uniqueness", &failures, format!("{checked} lifts checked, {skipped} morphisms skipped")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;

    fn fp(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn validate_examples() {
        let base = Arc::new(GroupAction::point(FiniteGroup::symmetric(3)));
        assert!(validate_atlas(&Atlas::single(&base)).passed());
        let a = example_z2_abc();
        assert!(validate_atlas(&a).passed());
        let dropped = Atlas::new(a.base().clone(), vec![a.charts()[0].clone()], Vec::new()).unwrap();
        assert_eq!(validate_atlas(&dropped).uncovered, vec![2]);
    }

    #[test]
    fn overlap_condition() {
        let a = example_z2_abc();
        let both =
            Atlas::new(a.base().clone(), vec![Chart::full(a.base()), a.charts()[1].clone()], Vec::new()).unwrap();
        assert_eq!(validate_atlas(&both).missing_overlaps, vec![(0, 1, 2)]);
        let cell = vec![0];
        let leg0 = Leg { target: 0, map: a.charts()[1].embed().clone(), cell: cell.clone() };
        let leg1 = Leg { target: 1, map: EquivariantMap::identity(a.charts()[1].local()), cell };
        let ov = Overlap { chart: a.charts()[1].clone(), legs: [leg0, leg1] };
        let fixed = Atlas::new(a.base().clone(), vec![Chart::full(a.base()), a.charts()[1].clone()], vec![ov]).unwrap();
        assert!(validate_atlas(&fixed).passed());
        let f = fp(3);
        let m = random_module(a.base(), f, 2, 5).unwrap();
        let d = descend(&fixed, &restrict(&fixed, &m).unwrap()).unwrap();
        assert!(find_isomorphism(&d.module, &m, &mut rng_from_seed(1)).unwrap().is_some());
        let lifts = lift_uniqueness(&fixed, f).unwrap();
        assert!(lifts.passed, "{lifts}");
        assert!(!lifts.detail.starts_with("0 lifts"), "{lifts}");
        let opts = EquivalenceOptions { seed: 2, random: 4, max_dim: 2 };
        for l in sections_equivalence_check(&fixed, f, &opts).unwrap() {
            assert!(l.passed, "{l}");
        }
    }

    #[test]
    fn descend_example() {
        let a = example_z2_abc();
        let f = fp(3);
        let nodes = a.nodes();
        let modules = vec![
            EquivariantModule::unit(nodes[0].local(), f),
            EquivariantModule::character(nodes[1].local(), f, &[1, 2]).unwrap(),
        ];
        let d = descend(&a, &CocartesianSection { modules, transitions: Vec::new() }).unwrap();
        assert_eq!(d.module.dims(), &[1, 1, 1]);
        assert_eq!(d.module.rho(1, 2).get(0, 0), 2);
        assert!(d.certificates.iter().all(ModuleMap::is_isomorphism));
    }

    #[test]
    fn single_chart_descent_is_transport() {
        let base = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0, 2]).unwrap());
        let a = Atlas::single(&base);
        let m = random_module(&base, fp(3), 2, 9).unwrap();
        let s = restrict(&a, &m).unwrap();
        assert_eq!(s.modules[0], m);
        let d = descend(&a, &s).unwrap();
        assert_eq!(d.module, m);
    }

    #[test]
    fn inertia_atlas_example() {
        let a = example_z2_abc();
        let ia = inertia_atlas(&a).unwrap();
        assert!(validate_atlas(&ia).passed());
        let sizes: Vec<usize> = ia.charts().iter().map(|c| c.local().size()).collect();
        assert_eq!(sizes, vec![2, 2]);
        let trivial = Arc::new(GroupAction::trivial(FiniteGroup::trivial(), 2));
        let ta = Atlas::single(&trivial);
        assert_eq!(inertia_atlas(&ta).unwrap().charts()[0].local().size(), 2);
    }

    #[test]
    fn chartwise_counts() {
        assert_eq!(chartwise_double_counts(&example_z2_abc()), vec![1, 4]);
    }

    #[test]
    fn incompatible_section_is_reported() {
        // an overlap whose two legs land in the same chart closes a loop;
        // a transition of -1 on one leg breaks the cocycle
        let base = Arc::new(GroupAction::point(FiniteGroup::trivial()));
        let chart = Chart::full(&base);
        let id = EquivariantMap::identity(&base);
        let leg = |t| Leg { target: t, map: id.clone(), cell: vec![0] };
        let ov = Overlap { chart: chart.clone(), legs: [leg(0), leg(0)] };
        let a = Atlas::new(base.clone(), vec![chart], vec![ov]).unwrap();
        let f = fp(3);
        let unit = EquivariantModule::unit(&base, f);
        let good = restrict(&a, &unit).unwrap();
        assert!(descend(&a, &good).is_ok());
        let twist = ModuleMap::new(&unit, &unit, vec![Matrix::scalar(f, 1, 2)]).unwrap();
        let bad =
            CocartesianSection { modules: good.modules.clone(), transitions: vec![good.transitions[0].clone(), twist] };
        assert!(matches!(descend(&a, &bad), Err(Error::IncompatibleSection(_))));
    }

    #[test]
    fn equivalence_check_on_example() {
        let a = example_z2_abc();
        let opts = EquivalenceOptions { seed: 3, random: 4, max_dim: 2 };
        let lines = sections_equivalence_check(&a, fp(3), &opts).unwrap();
        for l in &lines {
            assert!(l.passed, "{l}");
        }
    }
}
