//! The input document.
//!
//! ```json
//! {
//!   "group": {"table": [[0, 1], [1, 0]]} | {"permutations": [[1, 0, 2], [1, 2, 0]]},
//!   "action": "point" | "natural" | "regular" | [[...], ...],
//!   "prime": 3,
//!   "modules": [{"dims": [1], "rho": [[[[1]]], [[[-1]]]]}],
//!   "half_braidings": [{"module": 0, "phi": [{"h": 1, "x": 0, "matrix": [[1]]}]}],
//!   "atlas": {
//!     "charts": [{"group": ..., "action": ..., "hom": [...], "points": [...]}],
//!     "overlaps": [{"chart": {...}, "legs": [{"target": 0, "hom": [...], "points": [...], "cell": [...]}, {...}]}]
//!   }
//! }
//! ```
//!
//! Group elements are numbered by row of the table, or for permutation
//! generators in breadth-first order from the identity. `action[g][x]` is
//! `g·x`; `"natural"` is the permutation action of a permutation group,
//! `"regular"` left multiplication and `"point"` (the default) a single
//! point. `rho[g][x]` is the matrix of `g: M_x → M_{g·x}` as a list of rows. A chart maps its group by `hom`
//! (images of its elements) and its points by `points`; a leg's `cell[w]` is
//! the base element carrying `embed_target(leg(w))` to `embed_overlap(w)`.
//! All entries are integers, reduced modulo the prime.

use std::sync::Arc;

use orbifold_double::atlas::{Atlas, Chart, Leg, Overlap};
use orbifold_double::double::HalfBraidedModule;
use orbifold_double::equivariant::EquivariantModule;
use orbifold_double::group::{check_splitting, splitting_prime, FiniteGroup, GroupHom};
use orbifold_double::gset::{EquivariantMap, GroupAction};
use orbifold_double::linalg::{Matrix, PrimeField};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDoc {
    pub group: GroupSpec,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    #[serde(default)]
    pub prime: Option<u64>,
    #[serde(default)]
    pub modules: Vec<ModuleSpec>,
    #[serde(default)]
    pub half_braidings: Vec<HalfBraidingSpec>,
    #[serde(default)]
    pub atlas: Option<AtlasSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupSpec {
    Table(Vec<Vec<usize>>),
    Permutations(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ActionSpec {
    Named(String),
    Table(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleSpec {
    pub dims: Vec<usize>,
    pub rho: Vec<Vec<Vec<Vec<i64>>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiEntry {
    pub h: usize,
    pub x: usize,
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HalfBraidingSpec {
    pub module: usize,
    pub phi: Vec<PhiEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub group: GroupSpec,
    #[serde(default)]
    pub action: Option<ActionSpec>,
    pub hom: Vec<usize>,
    pub points: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegSpec {
    pub target: usize,
    pub hom: Vec<usize>,
    pub points: Vec<usize>,
    pub cell: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverlapSpec {
    pub chart: ChartSpec,
    pub legs: [LegSpec; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtlasSpec {
    pub charts: Vec<ChartSpec>,
    #[serde(default)]
    pub overlaps: Vec<OverlapSpec>,
}

/// Everything built from an input document.
#[derive(Debug, Clone)]
pub struct Problem {
    pub action: Arc<GroupAction>,
    pub field: PrimeField,
    /// permutation of each element, when the group came from generators
    pub permutations: Option<Vec<Vec<usize>>>,
    pub modules: Vec<EquivariantModule>,
    pub half_braidings: Vec<HalfBraidedModule>,
    pub atlas: Option<Atlas>,
}

fn input_err(context: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{context}: {e}"))
}

fn build_group(spec: &GroupSpec) -> Result<(FiniteGroup, Option<Vec<Vec<usize>>>), CliError> {
    match spec {
        GroupSpec::Table(t) => Ok((FiniteGroup::from_table(t.clone()).map_err(|e| input_err("group", e))?, None)),
        GroupSpec::Permutations(gens) => {
            let (g, elems, _) = FiniteGroup::from_permutations(gens).map_err(|e| input_err("group", e))?;
            Ok((g, Some(elems)))
        }
    }
}

fn build_action(
    group: &FiniteGroup,
    perms: &Option<Vec<Vec<usize>>>,
    spec: &Option<ActionSpec>,
    context: &str,
) -> Result<Arc<GroupAction>, CliError> {
    let action = match spec {
        None => GroupAction::point(group.clone()),
        Some(ActionSpec::Named(name)) => match name.as_str() {
            "point" => GroupAction::point(group.clone()),
            "natural" => {
                let perms = perms
                    .as_ref()
                    .ok_or_else(|| CliError::Input(format!("{context}: \"natural\" needs a permutation group")))?;
                let degree = perms[0].len();
                GroupAction::new(group.clone(), degree, perms.clone()).map_err(|e| input_err(context, e))?
            }
            "regular" => GroupAction::regular(group.clone()),
            other => return Err(CliError::Input(format!("{context}: unknown action \"{other}\""))),
        },
        Some(ActionSpec::Table(t)) => {
            let size = t.first().map_or(0, Vec::len);
            GroupAction::new(group.clone(), size, t.clone()).map_err(|e| input_err(context, e))?
        }
    };
    Ok(Arc::new(action))
}

fn build_matrix(
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: &[Vec<i64>],
    context: &str,
) -> Result<Matrix, CliError> {
    // a matrix with no columns may be written either as [] or as empty rows
    let empty_ok = cols == 0 && (data.is_empty() || data.iter().all(Vec::is_empty));
    if !empty_ok && (data.len() != rows || data.iter().any(|r| r.len() != cols)) {
        return Err(CliError::Input(format!("{context}: expected a {rows}x{cols} matrix")));
    }
    let mut m = Matrix::zero(field, rows, cols);
    if cols > 0 {
        for (i, row) in data.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m.set(i, j, field.from_i64(v));
            }
        }
    }
    Ok(m)
}

fn build_module(
    a: &Arc<GroupAction>,
    field: PrimeField,
    spec: &ModuleSpec,
    i: usize,
) -> Result<EquivariantModule, CliError> {
    let ctx = format!("module {i}");
    if spec.dims.len() != a.size() {
        return Err(CliError::Input(format!("{ctx}: {} dims for {} points", spec.dims.len(), a.size())));
    }
    if spec.rho.len() != a.group().order() || spec.rho.iter().any(|r| r.len() != a.size()) {
        return Err(CliError::Input(format!("{ctx}: rho must be indexed [element][point]")));
    }
    let mut rho = Vec::with_capacity(a.group().order() * a.size());
    for g in a.group().elements() {
        for x in 0..a.size() {
            let (r, c) = (spec.dims[a.act(g, x)], spec.dims[x]);
            rho.push(build_matrix(field, r, c, &spec.rho[g][x], &format!("{ctx}, rho({g}, {x})"))?);
        }
    }
    EquivariantModule::new(a.clone(), field, spec.dims.clone(), rho).map_err(|e| input_err(&ctx, e))
}

fn build_chart_map(
    spec_group: &GroupSpec,
    spec_action: &Option<ActionSpec>,
    hom: &[usize],
    points: &[usize],
    target: &Arc<GroupAction>,
    ctx: &str,
) -> Result<EquivariantMap, CliError> {
    let (g, perms) = build_group(spec_group).map_err(|e| CliError::Input(format!("{ctx}: {e}")))?;
    let local = build_action(&g, &perms, spec_action, ctx)?;
    let gamma = GroupHom::new(g, target.group().clone(), hom.to_vec()).map_err(|e| input_err(ctx, e))?;
    EquivariantMap::new(local, target.clone(), gamma, points.to_vec()).map_err(|e| input_err(ctx, e))
}

fn build_atlas(base: &Arc<GroupAction>, spec: &AtlasSpec) -> Result<Atlas, CliError> {
    let mut charts = Vec::new();
    for (i, c) in spec.charts.iter().enumerate() {
        let ctx = format!("atlas chart {i}");
        let map = build_chart_map(&c.group, &c.action, &c.hom, &c.points, base, &ctx)?;
        charts.push(Chart::new(map).map_err(|e| input_err(&ctx, e))?);
    }
    let mut overlaps = Vec::new();
    for (k, o) in spec.overlaps.iter().enumerate() {
        let ctx = format!("atlas overlap {k}");
        let map = build_chart_map(&o.chart.group, &o.chart.action, &o.chart.hom, &o.chart.points, base, &ctx)?;
        let chart = Chart::new(map).map_err(|e| input_err(&ctx, e))?;
        let mut legs = Vec::new();
        for (l, leg) in o.legs.iter().enumerate() {
            let lctx = format!("{ctx}, leg {l}");
            let target =
                charts.get(leg.target).ok_or_else(|| CliError::Input(format!("{lctx}: no chart {}", leg.target)))?;
            let gamma = GroupHom::new(chart.local().group().clone(), target.local().group().clone(), leg.hom.clone())
                .map_err(|e| input_err(&lctx, e))?;
            let map = EquivariantMap::new(chart.local().clone(), target.local().clone(), gamma, leg.points.clone())
                .map_err(|e| input_err(&lctx, e))?;
            legs.push(Leg { target: leg.target, map, cell: leg.cell.clone() });
        }
        let legs: [Leg; 2] = legs.try_into().expect("two legs");
        overlaps.push(Overlap { chart, legs });
    }
    Atlas::new(base.clone(), charts, overlaps).map_err(|e| input_err("atlas", e))
}

/// Parses and validates an input document; `prime` overrides the document's.
pub fn build(doc: &InputDoc, prime: Option<u64>) -> Result<Problem, CliError> {
    let (group, permutations) = build_group(&doc.group)?;
    let action = build_action(&group, &permutations, &doc.action, "action")?;
    let field = match prime.or(doc.prime) {
        Some(p) => {
            let f = PrimeField::new(p).map_err(|e| input_err("prime", e))?;
            check_splitting(&group, f.modulus()).map_err(|e| input_err("prime", e))?;
            f
        }
        None => PrimeField::new(splitting_prime(&group).map_err(|e| input_err("prime", e))? as u64)
            .expect("splitting primes are prime"),
    };
    let modules: Vec<EquivariantModule> =
        doc.modules.iter().enumerate().map(|(i, m)| build_module(&action, field, m, i)).collect::<Result<_, _>>()?;
    let mut half_braidings = Vec::new();
    for (i, hb) in doc.half_braidings.iter().enumerate() {
        let ctx = format!("half-braiding {i}");
        let m = modules.get(hb.module).ok_or_else(|| CliError::Input(format!("{ctx}: no module {}", hb.module)))?;
        let mut entries = Vec::new();
        for e in &hb.phi {
            if e.h >= group.order() || e.x >= action.size() {
                return Err(CliError::Input(format!("{ctx}: entry ({}, {}) out of range", e.h, e.x)));
            }
            let d = m.dim(e.x);
            entries.push((e.h, e.x, build_matrix(field, d, d, &e.matrix, &format!("{ctx}, phi({}, {})", e.h, e.x))?));
        }
        // invariants are checked by the verify command, not here
        half_braidings.push(HalfBraidedModule::from_entries(m.clone(), &entries));
    }
    let atlas = doc.atlas.as_ref().map(|a| build_atlas(&action, a)).transpose()?;
    Ok(Problem { action, field, permutations, modules, half_braidings, atlas })
}

pub fn parse(text: &str) -> Result<InputDoc, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed input: {e}")))
}
