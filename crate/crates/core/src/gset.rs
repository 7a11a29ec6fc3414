//! Finite G-sets and their action groupoids.
//!
//! The action groupoid `G ⋉ X` has objects `X` and arrows `(g, x): x → g·x`.
//! Everything here (inertia, double inertia, chart embeddings) stays inside
//! this one representation: a finite group acting on a finite set.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupHom};

/// A left action of a finite group on `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupAction {
    group: FiniteGroup,
    size: usize,
    table: Vec<usize>,
}

impl GroupAction {
    /// `table[g][x] = g·x`, checked against the action axioms.
    pub fn new(group: FiniteGroup, size: usize, table: Vec<Vec<usize>>) -> Result<Self> {
        if table.len() != group.order() {
            return Err(Error::InvalidAction(format!("{} rows for a group of order {}", table.len(), group.order())));
        }
        for (g, row) in table.iter().enumerate() {
            if row.len() != size {
                return Err(Error::InvalidAction(format!("row {} has length {}, expected {}", g, row.len(), size)));
            }
            if let Some(x) = row.iter().position(|&y| y >= size) {
                return Err(Error::InvalidAction(format!("{}·{} = {} out of range", g, x, row[x])));
            }
        }
        let flat: Vec<usize> = table.into_iter().flatten().collect();
        let a = GroupAction { group, size, table: flat };
        a.validate()?;
        Ok(a)
    }

    fn validate(&self) -> Result<()> {
        let e = self.group.identity();
        for x in 0..self.size {
            if self.act(e, x) != x {
                return Err(Error::InvalidAction(format!("identity moves point {}", x)));
            }
        }
        for g in self.group.elements() {
            for h in self.group.elements() {
                for x in 0..self.size {
                    if self.act(g, self.act(h, x)) != self.act(self.group.mul(g, h), x) {
                        return Err(Error::InvalidAction(format!("g·(h·x) != (gh)·x for g={}, h={}, x={}", g, h, x)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn trivial(group: FiniteGroup, size: usize) -> Self {
        let table = group.elements().map(|_| (0..size).collect()).collect();
        Self::new(group, size, table).expect("trivial action")
    }

    pub fn point(group: FiniteGroup) -> Self {
        Self::trivial(group, 1)
    }

    /// The left regular action of a group on itself.
    pub fn regular(group: FiniteGroup) -> Self {
        let n = group.order();
        let table = group.elements().map(|g| (0..n).map(|x| group.mul(g, x)).collect()).collect();
        Self::new(group, n, table).expect("regular action")
    }

    /// An action of a cyclic group given by the permutation of its generator `1`.
    pub fn cyclic_from_permutation(order: usize, perm: &[usize]) -> Result<Self> {
        let group = FiniteGroup::cyclic(order);
        let size = perm.len();
        let mut table = vec![(0..size).collect::<Vec<_>>()];
        for k in 1..order {
            let prev: &Vec<usize> = &table[k - 1];
            table.push(prev.iter().map(|&x| perm[x]).collect());
        }
        Self::new(group, size, table)
    }

    #[inline]
    pub fn group(&self) -> &FiniteGroup {
        &self.group
    }
    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }
    #[inline]
    pub fn act(&self, g: usize, x: usize) -> usize {
        self.table[g * self.size + x]
    }
    pub fn table(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.size.max(1)).take(self.group.order()).map(|r| r.to_vec()).collect()
    }

    /// `{x : h·x = x}`, ascending.
    pub fn fixed_points(&self, h: usize) -> Vec<usize> {
        (0..self.size).filter(|&x| self.act(h, x) == x).collect()
    }

    pub fn stabilizer(&self, x: usize) -> Vec<usize> {
        self.group.elements().filter(|&g| self.act(g, x) == x).collect()
    }

    /// Orbits as sorted point lists, ordered by their smallest point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.size];
        let mut out = Vec::new();
        for x in 0..self.size {
            if seen[x] {
                continue;
            }
            let mut orbit: Vec<usize> = self.group.elements().map(|g| self.act(g, x)).collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &y in &orbit {
                seen[y] = true;
            }
            out.push(orbit);
        }
        out
    }

    /// For each point, the index of its orbit in [`orbits`](Self::orbits).
    pub fn orbit_index(&self) -> Vec<usize> {
        let mut idx = vec![0; self.size];
        for (i, orbit) in self.orbits().iter().enumerate() {
            for &x in orbit {
                idx[x] = i;
            }
        }
        idx
    }

    /// Arrows `{g : g·x = y}`.
    pub fn hom_set(&self, x: usize, y: usize) -> Vec<usize> {
        self.group.elements().filter(|&g| self.act(g, x) == y).collect()
    }

    /// For an orbit representative `x0`, the smallest `g` with `g·x0 = x` for each `x`
    /// in its orbit (`None` elsewhere).
    pub fn transversal(&self, x0: usize) -> Vec<Option<usize>> {
        let mut t = vec![None; self.size];
        for g in self.group.elements() {
            let y = self.act(g, x0);
            if t[y].is_none() {
                t[y] = Some(g);
            }
        }
        t
    }
}

/// A morphism of actions `(H, U) → (G, X)`: `alpha(h·u) = gamma(h)·alpha(u)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EquivariantMap {
    source: Arc<GroupAction>,
    target: Arc<GroupAction>,
    gamma: GroupHom,
    alpha: Vec<usize>,
}

impl EquivariantMap {
    pub fn new(source: Arc<GroupAction>, target: Arc<GroupAction>, gamma: GroupHom, alpha: Vec<usize>) -> Result<Self> {
        if gamma.domain() != source.group() || gamma.codomain() != target.group() {
            return Err(Error::InvalidMap("group homomorphism does not match the actions".into()));
        }
        if alpha.len() != source.size() {
            return Err(Error::InvalidMap(format!("{} images for {} points", alpha.len(), source.size())));
        }
        if let Some(u) = alpha.iter().position(|&y| y >= target.size()) {
            return Err(Error::InvalidMap(format!("image of point {} out of range", u)));
        }
        for h in source.group().elements() {
            for u in 0..source.size() {
                if alpha[source.act(h, u)] != target.act(gamma.apply(h), alpha[u]) {
                    return Err(Error::InvalidMap(format!("alpha(h·u) != gamma(h)·alpha(u) for h={}, u={}", h, u)));
                }
            }
        }
        Ok(EquivariantMap { source, target, gamma, alpha })
    }

    pub fn identity(a: &Arc<GroupAction>) -> Self {
        EquivariantMap {
            source: a.clone(),
            target: a.clone(),
            gamma: GroupHom::identity(a.group()),
            alpha: (0..a.size()).collect(),
        }
    }

    pub fn source(&self) -> &Arc<GroupAction> {
        &self.source
    }
    pub fn target(&self) -> &Arc<GroupAction> {
        &self.target
    }
    pub fn gamma(&self) -> &GroupHom {
        &self.gamma
    }
    #[inline]
    pub fn alpha(&self, u: usize) -> usize {
        self.alpha[u]
    }
    pub fn alpha_map(&self) -> &[usize] {
        &self.alpha
    }

    /// `other ∘ self`
    pub fn then(&self, other: &EquivariantMap) -> Result<EquivariantMap> {
        if self.target != other.source {
            return Err(Error::InvalidMap("composition of non-composable maps".into()));
        }
        EquivariantMap::new(
            self.source.clone(),
            other.target.clone(),
            self.gamma.then(&other.gamma)?,
            self.alpha.iter().map(|&y| other.alpha[y]).collect(),
        )
    }

    pub fn is_open_embedding(&self) -> EmbeddingCheck {
        is_open_embedding(self)
    }
}

/// Outcome of [`is_open_embedding`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbeddingCheck {
    Embedding,
    /// Two source points mapping to the same target point.
    NotInjective {
        u: usize,
        v: usize,
    },
    /// `gamma` fails to be a bijection `Hom(u, v) → Hom(alpha u, alpha v)`.
    HomMismatch {
        u: usize,
        v: usize,
        upstairs: usize,
        downstairs: usize,
    },
}

impl EmbeddingCheck {
    pub fn holds(&self) -> bool {
        matches!(self, EmbeddingCheck::Embedding)
    }
}

/// Full faithfulness of the induced groupoid functor plus injectivity on points.
pub fn is_open_embedding(f: &EquivariantMap) -> EmbeddingCheck {
    let (src, tgt) = (f.source(), f.target());
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    for u in 0..src.size() {
        if let Some(&v) = first.get(&f.alpha(u)) {
            return EmbeddingCheck::NotInjective { u: v, v: u };
        }
        first.insert(f.alpha(u), u);
    }
    for u in 0..src.size() {
        for v in 0..src.size() {
            let up: Vec<usize> = src.hom_set(u, v).into_iter().map(|h| f.gamma().apply(h)).collect();
            let down = tgt.hom_set(f.alpha(u), f.alpha(v));
            let mut image = up.clone();
            image.sort_unstable();
            image.dedup();
            if image.len() != up.len() || image != down {
                return EmbeddingCheck::HomMismatch { u, v, upstairs: up.len(), downstairs: down.len() };
            }
        }
    }
    EmbeddingCheck::Embedding
}

/// A natural transformation between two maps with the same source and target.
///
/// Component `u` is an arrow `from(u) → to(u)` in the target groupoid, i.e. an
/// element `g` with `g·from.alpha(u) = to.alpha(u)`; naturality says
/// `c(h·u) · from.gamma(h) = to.gamma(h) · c(u)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoMorphism {
    from: EquivariantMap,
    to: EquivariantMap,
    components: Vec<usize>,
}

/// A two-morphism from a map to itself.
pub type NaturalLoop = TwoMorphism;

impl TwoMorphism {
    pub fn new(from: EquivariantMap, to: EquivariantMap, components: Vec<usize>) -> Result<Self> {
        if from.source() != to.source() || from.target() != to.target() {
            return Err(Error::InvalidTwoCell("endpoints are not parallel maps".into()));
        }
        let (src, tgt) = (from.source().clone(), from.target().clone());
        let g = tgt.group();
        if components.len() != src.size() {
            return Err(Error::InvalidTwoCell(format!("{} components for {} points", components.len(), src.size())));
        }
        for u in 0..src.size() {
            let c = components[u];
            if c >= g.order() || tgt.act(c, from.alpha(u)) != to.alpha(u) {
                return Err(Error::InvalidTwoCell(format!("component at {} is not an arrow", u)));
            }
        }
        for h in src.group().elements() {
            for u in 0..src.size() {
                let lhs = g.mul(components[src.act(h, u)], from.gamma().apply(h));
                let rhs = g.mul(to.gamma().apply(h), components[u]);
                if lhs != rhs {
                    return Err(Error::InvalidTwoCell(format!("naturality fails at arrow (h={}, u={})", h, u)));
                }
            }
        }
        Ok(TwoMorphism { from, to, components })
    }

    pub fn identity(f: &EquivariantMap) -> Self {
        let e = f.target().group().identity();
        TwoMorphism { from: f.clone(), to: f.clone(), components: vec![e; f.source().size()] }
    }

    pub fn from_map(&self) -> &EquivariantMap {
        &self.from
    }
    pub fn to_map(&self) -> &EquivariantMap {
        &self.to
    }
    #[inline]
    pub fn component(&self, u: usize) -> usize {
        self.components[u]
    }
    pub fn components(&self) -> &[usize] {
        &self.components
    }
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// The inertia of an action: `F = {(x, h) : h·x = x}` with `g·(x, h) = (g·x, g h g⁻¹)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InertiaAction {
    base: Arc<GroupAction>,
    pairs: Vec<(usize, usize)>,
    index: BTreeMap<(usize, usize), usize>,
    action: Arc<GroupAction>,
    projection: EquivariantMap,
}

impl InertiaAction {
    pub fn new(base: &Arc<GroupAction>) -> Self {
        let g = base.group();
        let pairs: Vec<(usize, usize)> = (0..base.size())
            .flat_map(|x| g.elements().filter(move |&h| base.act(h, x) == x).map(move |h| (x, h)))
            .collect();
        let index: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(i, &p)| (p, i)).collect();
        let table = g
            .elements()
            .map(|k| pairs.iter().map(|&(x, h)| index[&(base.act(k, x), g.conj(k, h))]).collect())
            .collect();
        let action = Arc::new(GroupAction::new(g.clone(), pairs.len(), table).expect("inertia action is well defined"));
        let projection = EquivariantMap::new(
            action.clone(),
            base.clone(),
            GroupHom::identity(g),
            pairs.iter().map(|&(x, _)| x).collect(),
        )
        .expect("projection is equivariant");
        InertiaAction { base: base.clone(), pairs, index, action, projection }
    }

    pub fn base(&self) -> &Arc<GroupAction> {
        &self.base
    }
    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn pair_index(&self, x: usize, h: usize) -> Option<usize> {
        self.index.get(&(x, h)).copied()
    }
    /// The projection `π: (x, h) ↦ x`.
    pub fn projection(&self) -> &EquivariantMap {
        &self.projection
    }
    /// Pair indices over a base point, in pair order.
    pub fn pairs_over(&self, x: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.index.range((x, 0)..(x + 1, 0)).map(|(&(_, h), &i)| (h, i))
    }

    /// The canonical loop of `π` assigning `h` to the pair `(x, h)`.
    pub fn canonical_loop(&self) -> NaturalLoop {
        TwoMorphism::new(self.projection.clone(), self.projection.clone(), self.pairs.iter().map(|&(_, h)| h).collect())
            .expect("canonical loop is natural")
    }
}

pub fn inertia(a: &Arc<GroupAction>) -> InertiaAction {
    InertiaAction::new(a)
}

/// Triples `(x, h1, h2)` with both `h_i` fixing `x`, with the maps `p1, p2, m`
/// to the inertia.
#[derive(Debug, Clone)]
pub struct DoubleInertia {
    pub triples: Vec<(usize, usize, usize)>,
    pub action: Arc<GroupAction>,
    pub p1: EquivariantMap,
    pub p2: EquivariantMap,
    pub m: EquivariantMap,
}

pub fn double_inertia(inert: &InertiaAction) -> DoubleInertia {
    let base = inert.base();
    let g = base.group();
    let triples: Vec<(usize, usize, usize)> = (0..base.size())
        .flat_map(|x| {
            let stab = base.stabilizer(x);
            stab.iter().flat_map(|&a| stab.iter().map(move |&b| (x, a, b))).collect::<Vec<_>>()
        })
        .collect();
    let index: BTreeMap<(usize, usize, usize), usize> = triples.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let table = g
        .elements()
        .map(|k| triples.iter().map(|&(x, a, b)| index[&(base.act(k, x), g.conj(k, a), g.conj(k, b))]).collect())
        .collect();
    let action = Arc::new(GroupAction::new(g.clone(), triples.len(), table).expect("double inertia action"));
    let make = |f: &dyn Fn(usize, usize, usize) -> (usize, usize)| {
        let alpha = triples
            .iter()
            .map(|&(x, a, b)| {
                let (y, h) = f(x, a, b);
                inert.pair_index(y, h).expect("image pair is fixed")
            })
            .collect();
        EquivariantMap::new(action.clone(), inert.action().clone(), GroupHom::identity(g), alpha)
            .expect("double inertia projection is equivariant")
    };
    let p1 = make(&|x, a, _| (x, a));
    let p2 = make(&|x, _, b| (x, b));
    let m = make(&|x, a, b| (x, g.mul(a, b)));
    DoubleInertia { triples, action, p1, p2, m }
}
