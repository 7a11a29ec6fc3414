//! Equivariant modules over an action groupoid `G ⋉ X`.
//!
//! A module assigns a vector space `M_x` to each point and an invertible
//! matrix `rho(g, x): M_x → M_{g·x}` to each arrow, subject to the cocycle
//! `rho(g', g·x) rho(g, x) = rho(g'g, x)`. The tensor structure is strict: all
//! Kronecker products put the left factor major, and direct sums follow the
//! order of their summands.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::group::{check_splitting, FiniteGroup};
use crate::gset::{EquivariantMap, GroupAction, TwoMorphism};
use crate::linalg::{Matrix, PrimeField};

/// Retry budget for randomized splitting of endomorphism algebras.
pub const SPLIT_RETRIES: usize = 32;

/// Fixed seed for the internal irreducible-representation search, so that
/// simple modules do not depend on the caller's seed.
const IRREP_SEED: u64 = 0x1e1e_5eed;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivariantModule {
    action: Arc<GroupAction>,
    field: PrimeField,
    dims: Vec<usize>,
    rho: Vec<Matrix>,
}

impl EquivariantModule {
    /// `rho` is indexed `g * |X| + x`.
    pub fn new(action: Arc<GroupAction>, field: PrimeField, dims: Vec<usize>, rho: Vec<Matrix>) -> Result<Self> {
        let m = EquivariantModule { action, field, dims, rho };
        m.validate()?;
        Ok(m)
    }

    /// Builds `rho` from a closure; the result is validated.
    pub fn from_fn(
        action: Arc<GroupAction>,
        field: PrimeField,
        dims: Vec<usize>,
        mut rho: impl FnMut(usize, usize) -> Matrix,
    ) -> Result<Self> {
        let n = action.size();
        let rho = (0..action.group().order() * n).map(|i| rho(i / n, i % n)).collect();
        Self::new(action, field, dims, rho)
    }

    fn from_fn_unchecked(
        action: Arc<GroupAction>,
        field: PrimeField,
        dims: Vec<usize>,
        mut rho: impl FnMut(usize, usize) -> Matrix,
    ) -> Self {
        let n = action.size();
        let rho = (0..action.group().order() * n).map(|i| rho(i / n, i % n)).collect();
        let m = EquivariantModule { action, field, dims, rho };
        debug_assert!(m.validate().is_ok(), "{:?}", m.validate());
        m
    }

    pub fn validate(&self) -> Result<()> {
        let a = &self.action;
        let g = a.group();
        let n = a.size();
        if self.dims.len() != n {
            return Err(Error::InvalidModule(format!("{} fiber dimensions for {} points", self.dims.len(), n)));
        }
        if self.rho.len() != g.order() * n {
            return Err(Error::InvalidModule("wrong number of action matrices".into()));
        }
        for k in g.elements() {
            for x in 0..n {
                let m = self.rho(k, x);
                if m.field() != self.field {
                    return Err(Error::InvalidModule(format!("matrix at (g={}, x={}) over the wrong field", k, x)));
                }
                if (m.rows(), m.cols()) != (self.dims[a.act(k, x)], self.dims[x]) {
                    return Err(Error::InvalidModule(format!("matrix at (g={}, x={}) has the wrong shape", k, x)));
                }
            }
        }
        let e = g.identity();
        for x in 0..n {
            if !self.rho(e, x).is_identity() {
                return Err(Error::InvalidModule(format!("rho(e, {}) is not the identity", x)));
            }
        }
        for k1 in g.elements() {
            for k2 in g.elements() {
                for x in 0..n {
                    let lhs = self.rho(k2, a.act(k1, x)).mul(self.rho(k1, x));
                    if &lhs != self.rho(g.mul(k2, k1), x) {
                        return Err(Error::InvalidModule(format!(
                            "cocycle fails: rho({}, {}·{}) rho({}, {}) != rho({}{}, {})",
                            k2, k1, x, k1, x, k2, k1, x
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }
    pub fn field(&self) -> PrimeField {
        self.field
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    #[inline]
    pub fn dim(&self, x: usize) -> usize {
        self.dims[x]
    }
    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }
    #[inline]
    pub fn rho(&self, g: usize, x: usize) -> &Matrix {
        &self.rho[g * self.action.size() + x]
    }

    pub fn unit(action: &Arc<GroupAction>, field: PrimeField) -> Self {
        let one = Matrix::identity(field, 1);
        Self::from_fn_unchecked(action.clone(), field, vec![1; action.size()], |_, _| one.clone())
    }

    pub fn zero(action: &Arc<GroupAction>, field: PrimeField) -> Self {
        let z = Matrix::zero(field, 0, 0);
        Self::from_fn_unchecked(action.clone(), field, vec![0; action.size()], |_, _| z.clone())
    }

    /// One-dimensional module on a one-point action given by a character.
    pub fn character(action: &Arc<GroupAction>, field: PrimeField, values: &[u32]) -> Result<Self> {
        if action.size() != 1 {
            return Err(Error::Mismatch("characters live on a one-point action".into()));
        }
        Self::from_fn(action.clone(), field, vec![1], |g, _| Matrix::scalar(field, 1, values[g]))
    }

    /// The groupoid algebra as a left module: the fiber at `x` has basis the
    /// arrows into `x`, indexed by their group element.
    pub fn regular(action: &Arc<GroupAction>, field: PrimeField) -> Self {
        let g = action.group().clone();
        let n = g.order();
        Self::from_fn_unchecked(action.clone(), field, vec![n; action.size()], |k, _| {
            let images: Vec<usize> = (0..n).map(|h| g.mul(k, h)).collect();
            Matrix::permutation(field, &images)
        })
    }

    pub fn direct_sum(parts: &[EquivariantModule]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Mismatch("empty direct sum".into()))?;
        for p in parts {
            check_compatible(first, p)?;
        }
        let (action, field) = (first.action.clone(), first.field);
        let dims = (0..action.size()).map(|x| parts.iter().map(|p| p.dim(x)).sum()).collect();
        Ok(Self::from_fn_unchecked(action, field, dims, |g, x| {
            Matrix::direct_sum(field, &parts.iter().map(|p| p.rho(g, x).clone()).collect::<Vec<_>>())
        }))
    }

    /// The module transported along per-point isomorphisms `t_x: M_x → V_x`.
    pub fn transport(&self, iso: &[Matrix]) -> Result<Self> {
        let inverses: Vec<Matrix> = iso.iter().map(|t| t.inverse()).collect::<Result<_>>()?;
        let a = self.action.clone();
        let dims = iso.iter().map(|t| t.rows()).collect();
        Ok(Self::from_fn_unchecked(a.clone(), self.field, dims, |g, x| {
            iso[a.act(g, x)].mul(self.rho(g, x)).mul(&inverses[x])
        }))
    }

    pub fn identity_map(&self) -> ModuleMap {
        ModuleMap {
            source: self.clone(),
            target: self.clone(),
            components: self.dims.iter().map(|&d| Matrix::identity(self.field, d)).collect(),
        }
    }
}

fn check_compatible(m: &EquivariantModule, n: &EquivariantModule) -> Result<()> {
    if m.action != n.action {
        return Err(Error::Mismatch("modules live on different actions".into()));
    }
    if m.field != n.field {
        return Err(Error::Mismatch(format!("fields {} and {} differ", m.field, n.field)));
    }
    Ok(())
}

/// A morphism of equivariant modules: `f_{g·x} rho_M(g, x) = rho_N(g, x) f_x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleMap {
    source: EquivariantModule,
    target: EquivariantModule,
    components: Vec<Matrix>,
}

impl ModuleMap {
    pub fn new(source: &EquivariantModule, target: &EquivariantModule, components: Vec<Matrix>) -> Result<Self> {
        check_compatible(source, target)?;
        let a = source.action();
        if components.len() != a.size() {
            return Err(Error::InvalidModuleMap(format!("{} components for {} points", components.len(), a.size())));
        }
        for (x, f) in components.iter().enumerate() {
            if (f.rows(), f.cols()) != (target.dim(x), source.dim(x)) {
                return Err(Error::InvalidModuleMap(format!("component at {} has the wrong shape", x)));
            }
        }
        for g in a.group().elements() {
            for x in 0..a.size() {
                let lhs = components[a.act(g, x)].mul(source.rho(g, x));
                let rhs = target.rho(g, x).mul(&components[x]);
                if lhs != rhs {
                    return Err(Error::InvalidModuleMap(format!("not equivariant at arrow (g={}, x={})", g, x)));
                }
            }
        }
        Ok(ModuleMap { source: source.clone(), target: target.clone(), components })
    }

    pub fn zero(source: &EquivariantModule, target: &EquivariantModule) -> Self {
        let f = source.field();
        ModuleMap {
            source: source.clone(),
            target: target.clone(),
            components: (0..source.action().size()).map(|x| Matrix::zero(f, target.dim(x), source.dim(x))).collect(),
        }
    }

    pub fn source(&self) -> &EquivariantModule {
        &self.source
    }
    pub fn target(&self) -> &EquivariantModule {
        &self.target
    }
    pub fn components(&self) -> &[Matrix] {
        &self.components
    }
    #[inline]
    pub fn at(&self, x: usize) -> &Matrix {
        &self.components[x]
    }

    /// `other ∘ self`
    pub fn then(&self, other: &ModuleMap) -> Result<ModuleMap> {
        if self.target != other.source {
            return Err(Error::Mismatch("composition of non-composable module maps".into()));
        }
        Ok(ModuleMap {
            source: self.source.clone(),
            target: other.target.clone(),
            components: self.components.iter().zip(&other.components).map(|(f, g)| g.mul(f)).collect(),
        })
    }

    pub fn add(&self, other: &ModuleMap) -> Result<ModuleMap> {
        if self.source != other.source || self.target != other.target {
            return Err(Error::Mismatch("sum of maps with different ends".into()));
        }
        Ok(ModuleMap {
            source: self.source.clone(),
            target: self.target.clone(),
            components: self.components.iter().zip(&other.components).map(|(f, g)| f.add(g)).collect(),
        })
    }

    pub fn scale(&self, c: u32) -> ModuleMap {
        ModuleMap {
            source: self.source.clone(),
            target: self.target.clone(),
            components: self.components.iter().map(|f| f.scale(c)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Matrix::is_zero)
    }

    pub fn is_isomorphism(&self) -> bool {
        self.components.iter().all(Matrix::is_invertible)
    }

    pub fn inverse(&self) -> Result<ModuleMap> {
        Ok(ModuleMap {
            source: self.target.clone(),
            target: self.source.clone(),
            components: self.components.iter().map(Matrix::inverse).collect::<Result<_>>()?,
        })
    }

    /// `self ⊗ other: M⊗M' → N⊗N'`
    pub fn tensor(&self, other: &ModuleMap) -> Result<ModuleMap> {
        Ok(ModuleMap {
            source: tensor(&self.source, &other.source)?,
            target: tensor(&self.target, &other.target)?,
            components: self.components.iter().zip(&other.components).map(|(f, g)| f.kron(g)).collect(),
        })
    }

    /// Re-labels the ends after checking they agree with the stored ones up to
    /// equality of data.
    pub fn with_ends(&self, source: &EquivariantModule, target: &EquivariantModule) -> Result<ModuleMap> {
        ModuleMap::new(source, target, self.components.clone())
    }
}

/// Fiberwise Kronecker product.
pub fn tensor(m: &EquivariantModule, n: &EquivariantModule) -> Result<EquivariantModule> {
    check_compatible(m, n)?;
    let dims = m.dims.iter().zip(&n.dims).map(|(a, b)| a * b).collect();
    Ok(EquivariantModule::from_fn_unchecked(m.action.clone(), m.field, dims, |g, x| m.rho(g, x).kron(n.rho(g, x))))
}

pub fn unit(action: &Arc<GroupAction>, field: PrimeField) -> EquivariantModule {
    EquivariantModule::unit(action, field)
}

/// The permutation `i ⊗ j ↦ j ⊗ i` on an `a·b`-dimensional product.
pub fn swap_matrix(field: PrimeField, a: usize, b: usize) -> Matrix {
    let images: Vec<usize> = (0..a * b).map(|k| (k % b) * a + k / b).collect();
    Matrix::permutation(field, &images)
}

/// The symmetry `M ⊗ N → N ⊗ M`.
pub fn swap(m: &EquivariantModule, n: &EquivariantModule) -> Result<ModuleMap> {
    let (mn, nm) = (tensor(m, n)?, tensor(n, m)?);
    let comps = (0..m.action.size()).map(|x| swap_matrix(m.field, m.dim(x), n.dim(x))).collect();
    Ok(ModuleMap { source: mn, target: nm, components: comps })
}

/// `f^*(N)`: fiber at `u` is `N_{alpha(u)}`, arrows act through `gamma`.
pub fn pullback(f: &EquivariantMap, n: &EquivariantModule) -> Result<EquivariantModule> {
    if f.target() != n.action() {
        return Err(Error::Mismatch("module does not live on the target of the map".into()));
    }
    let src = f.source().clone();
    let dims = (0..src.size()).map(|u| n.dim(f.alpha(u))).collect();
    Ok(EquivariantModule::from_fn_unchecked(src, n.field, dims, |h, u| n.rho(f.gamma().apply(h), f.alpha(u)).clone()))
}

/// Pullback of a module map along `f`.
pub fn pullback_map(f: &EquivariantMap, t: &ModuleMap) -> Result<ModuleMap> {
    Ok(ModuleMap {
        source: pullback(f, t.source())?,
        target: pullback(f, t.target())?,
        components: (0..f.source().size()).map(|u| t.at(f.alpha(u)).clone()).collect(),
    })
}

/// Summand bookkeeping for pushforward along a map with injective `gamma`.
///
/// The fiber of `f_*(M)` at `y` is `⊕ M_u` over representatives `(u, g)` of
/// pairs with `g·alpha(u) = y`, modulo `(u, g) ~ (h·u, g gamma(h)⁻¹)`.
#[derive(Debug, Clone)]
pub struct PushLayout {
    /// Representatives at each target point, in summand order.
    pub summands: Vec<Vec<(usize, usize)>>,
    /// For every pair `(u, g)`: `(y, summand index, h)` with `h·u = rep.u`.
    lookup: BTreeMap<(usize, usize), (usize, usize, usize)>,
}

impl PushLayout {
    pub fn new(f: &EquivariantMap) -> Result<Self> {
        if !f.gamma().is_injective() {
            return Err(Error::UnsupportedPushforward("group homomorphism is not injective".into()));
        }
        let (src, tgt) = (f.source(), f.target());
        let (h_grp, g_grp) = (src.group(), tgt.group());
        let e = g_grp.identity();
        let key = |(u, g): (usize, usize)| (g != e, g, u);
        let mut summands = vec![Vec::new(); tgt.size()];
        let mut lookup = BTreeMap::new();
        for u in 0..src.size() {
            for g in g_grp.elements() {
                if lookup.contains_key(&(u, g)) {
                    continue;
                }
                let y = tgt.act(g, f.alpha(u));
                let orbit: Vec<((usize, usize), usize)> = h_grp
                    .elements()
                    .map(|h| ((src.act(h, u), g_grp.mul(g, g_grp.inv(f.gamma().apply(h)))), h))
                    .collect();
                let (rep, _) = *orbit.iter().min_by_key(|(pair, _)| key(*pair)).expect("nonempty orbit");
                summands[y].push(rep);
                for &(pair, _) in &orbit {
                    // h' with h'·pair.u = rep.u and pair.g gamma(h')⁻¹ = rep.g
                    let want = g_grp.mul(g_grp.inv(rep.1), pair.1);
                    let hp = f.gamma().preimage(want).expect("same orbit");
                    debug_assert_eq!(src.act(hp, pair.0), rep.0);
                    lookup.insert(pair, (y, usize::MAX, hp));
                }
            }
        }
        for reps in summands.iter_mut() {
            reps.sort_by_key(|&r| key(r));
        }
        let position: BTreeMap<(usize, usize), usize> =
            summands.iter().flat_map(|reps| reps.iter().enumerate().map(|(i, &r)| (r, i))).collect();
        for (pair, entry) in lookup.iter_mut() {
            let hp = entry.2;
            let rep = (src.act(hp, pair.0), g_grp.mul(pair.1, g_grp.inv(f.gamma().apply(hp))));
            entry.1 = position[&rep];
        }
        Ok(PushLayout { summands, lookup })
    }

    /// `(y, summand index, h)` for the pair `(u, g)`.
    pub fn locate(&self, u: usize, g: usize) -> (usize, usize, usize) {
        self.lookup[&(u, g)]
    }

    pub fn offsets(&self, dims: &[usize], y: usize) -> Vec<usize> {
        let mut acc = 0;
        self.summands[y]
            .iter()
            .map(|&(u, _)| {
                let o = acc;
                acc += dims[u];
                o
            })
            .collect()
    }
}

/// `f_*(M)` for maps whose group homomorphism is injective (isomorphisms and
/// chart inclusions).
pub fn pushforward(f: &EquivariantMap, m: &EquivariantModule) -> Result<EquivariantModule> {
    if f.source() != m.action() {
        return Err(Error::Mismatch("module does not live on the source of the map".into()));
    }
    let layout = PushLayout::new(f)?;
    Ok(pushforward_with(f, m, &layout))
}

fn pushforward_with(f: &EquivariantMap, m: &EquivariantModule, layout: &PushLayout) -> EquivariantModule {
    let tgt = f.target().clone();
    let field = m.field;
    let g_grp = tgt.group().clone();
    let dims: Vec<usize> = layout.summands.iter().map(|reps| reps.iter().map(|&(u, _)| m.dim(u)).sum()).collect();
    let offsets: Vec<Vec<usize>> = (0..tgt.size()).map(|y| layout.offsets(&m.dims, y)).collect();
    EquivariantModule::from_fn_unchecked(tgt.clone(), field, dims.clone(), |k, y| {
        let ky = tgt.act(k, y);
        let mut out = Matrix::zero(field, dims[ky], dims[y]);
        for (s, &(u, g)) in layout.summands[y].iter().enumerate() {
            let (y2, s2, hp) = layout.locate(u, g_grp.mul(k, g));
            debug_assert_eq!(y2, ky);
            out.set_block(offsets[ky][s2], offsets[y][s], m.rho(hp, u));
        }
        out
    })
}

/// Pushforward of a module map.
pub fn pushforward_map(f: &EquivariantMap, t: &ModuleMap) -> Result<ModuleMap> {
    let layout = PushLayout::new(f)?;
    let (src, tgt) = (pushforward_with(f, t.source(), &layout), pushforward_with(f, t.target(), &layout));
    let field = src.field;
    let comps = (0..f.target().size())
        .map(|y| {
            let blocks: Vec<Matrix> = layout.summands[y].iter().map(|&(u, _)| t.at(u).clone()).collect();
            Matrix::direct_sum(field, &blocks)
        })
        .collect();
    ModuleMap::new(&src, &tgt, comps)
}

/// The canonical map `f_*(M) ⊗ N → f_*(M ⊗ f^*(N))`, checked to be an isomorphism.
pub fn projection_iso(f: &EquivariantMap, m: &EquivariantModule, n: &EquivariantModule) -> Result<ModuleMap> {
    let layout = PushLayout::new(f)?;
    let lhs = tensor(&pushforward_with(f, m, &layout), n)?;
    let rhs = pushforward_with(f, &tensor(m, &pullback(f, n)?)?, &layout);
    let g = f.target().group();
    let field = m.field;
    let comps = (0..f.target().size())
        .map(|y| {
            let blocks: Vec<Matrix> = layout.summands[y]
                .iter()
                .map(|&(u, k)| Matrix::identity(field, m.dim(u)).kron(n.rho(g.inv(k), y)))
                .collect();
            Matrix::direct_sum(field, &blocks)
        })
        .collect();
    let map = ModuleMap::new(&lhs, &rhs, comps)?;
    if !map.is_isomorphism() {
        return Err(Error::InvalidModuleMap("projection map is not invertible".into()));
    }
    Ok(map)
}

/// The map `f^*(N) → f'^*(N)` induced by a two-morphism `f ⇒ f'`; at `u` it is
/// `rho_N(c(u), alpha(u))`.
pub fn two_morphism_pullback_iso(t: &TwoMorphism, n: &EquivariantModule) -> Result<ModuleMap> {
    let (from, to) = (t.from_map(), t.to_map());
    let src = pullback(from, n)?;
    let tgt = pullback(to, n)?;
    let comps = (0..from.source().size()).map(|u| n.rho(t.component(u), from.alpha(u)).clone()).collect();
    ModuleMap::new(&src, &tgt, comps)
}

/// Linear constraints on an unknown `F: M_x → N_x` (row-major) forcing
/// `F a = b F` for each pair `(a, b)`.
pub(crate) fn commutation_rows(field: PrimeField, dm: usize, dn: usize, pairs: &[(&Matrix, &Matrix)]) -> Matrix {
    let unknowns = dm * dn;
    let mut rows = Matrix::zero(field, pairs.len() * unknowns, unknowns);
    for (pi, (a, b)) in pairs.iter().enumerate() {
        for i in 0..dn {
            for j in 0..dm {
                let r = pi * unknowns + i * dm + j;
                // (F a)[i][j] = Σ_k F[i][k] a[k][j]
                for k in 0..dm {
                    let c = i * dm + k;
                    rows.set(r, c, field.add(rows.get(r, c), a.get(k, j)));
                }
                // -(b F)[i][j] = -Σ_k b[i][k] F[k][j]
                for k in 0..dn {
                    let c = k * dm + j;
                    rows.set(r, c, field.sub(rows.get(r, c), b.get(i, k)));
                }
            }
        }
    }
    rows
}

fn unflatten(field: PrimeField, rows: usize, cols: usize, v: &[u32]) -> Matrix {
    Matrix::from_vec(field, rows, cols, v.to_vec()).expect("reduced entries")
}

/// Basis of `Hom(M, N)`, with extra per-point commutation constraints
/// `f_x a = b f_x` for each `(x, a, b)` in `extra` (`a` on `M_x`, `b` on `N_x`).
///
/// The extra constraints must be compatible with the action, in the sense that
/// the solution space at an orbit representative propagates to the orbit.
pub(crate) fn hom_space_constrained(
    m: &EquivariantModule,
    n: &EquivariantModule,
    extra: &dyn Fn(usize) -> Vec<(Matrix, Matrix)>,
) -> Result<Vec<ModuleMap>> {
    check_compatible(m, n)?;
    let a = m.action();
    let g = a.group();
    let field = m.field;
    let mut basis = Vec::new();
    for orbit in a.orbits() {
        let x0 = orbit[0];
        let (dm, dn) = (m.dim(x0), n.dim(x0));
        if dm == 0 || dn == 0 {
            continue;
        }
        let stab = a.stabilizer(x0);
        let gens = g.generators_of(&stab);
        let local = extra(x0);
        let mut pairs: Vec<(&Matrix, &Matrix)> = gens.iter().map(|&s| (m.rho(s, x0), n.rho(s, x0))).collect();
        pairs.extend(local.iter().map(|(p, q)| (p, q)));
        let kernel = if pairs.is_empty() {
            Matrix::zero(field, 1, dm * dn).kernel()
        } else {
            commutation_rows(field, dm, dn, &pairs).kernel()
        };
        let transversal = a.transversal(x0);
        for v in kernel {
            let f0 = unflatten(field, dn, dm, &v);
            let comps = (0..a.size())
                .map(|x| match transversal[x] {
                    Some(t) if orbit.binary_search(&x).is_ok() => n.rho(t, x0).mul(&f0).mul(m.rho(g.inv(t), x)),
                    _ => Matrix::zero(field, n.dim(x), m.dim(x)),
                })
                .collect();
            basis.push(ModuleMap { source: m.clone(), target: n.clone(), components: comps });
        }
    }
    debug_assert!(basis.iter().all(|b| ModuleMap::new(m, n, b.components.clone()).is_ok()));
    Ok(basis)
}

/// Basis of `Hom(M, N)`.
pub fn hom_space(m: &EquivariantModule, n: &EquivariantModule) -> Result<Vec<ModuleMap>> {
    hom_space_constrained(m, n, &|_| Vec::new())
}

pub fn hom_dim(m: &EquivariantModule, n: &EquivariantModule) -> Result<usize> {
    Ok(hom_space(m, n)?.len())
}

pub fn random_combination<R: Rng>(
    basis: &[ModuleMap],
    m: &EquivariantModule,
    n: &EquivariantModule,
    rng: &mut R,
) -> ModuleMap {
    let p = m.field.modulus();
    basis.iter().fold(ModuleMap::zero(m, n), |acc, b| acc.add(&b.scale(rng.gen_range(0..p))).expect("same ends"))
}

/// Searches for an isomorphism among random elements of `Hom(M, N)`.
pub fn find_isomorphism<R: Rng>(
    m: &EquivariantModule,
    n: &EquivariantModule,
    rng: &mut R,
) -> Result<Option<ModuleMap>> {
    if m.dims != n.dims {
        return Ok(None);
    }
    let basis = hom_space(m, n)?;
    for _ in 0..SPLIT_RETRIES {
        let f = random_combination(&basis, m, n, rng);
        if f.is_isomorphism() {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Submodule (or quotient) on the column span of per-point bases.
///
/// `bases[x]` must have invariant column span; the result carries the
/// restricted action in echelon coordinates, together with the inclusion.
pub fn restrict_to_subspace(m: &EquivariantModule, bases: &[Matrix]) -> Result<(EquivariantModule, ModuleMap)> {
    let a = m.action().clone();
    let cbs: Vec<_> = bases.iter().map(Matrix::column_basis).collect();
    let dims: Vec<usize> = cbs.iter().map(|c| c.basis.cols()).collect();
    let sub = EquivariantModule::from_fn(a.clone(), m.field, dims, |g, x| {
        cbs[a.act(g, x)].coordinates(&m.rho(g, x).mul(&cbs[x].basis))
    })?;
    let inc = ModuleMap::new(&sub, m, cbs.iter().map(|c| c.basis.clone()).collect())?;
    Ok((sub, inc))
}

/// Simple counts `Σ_orbits #classes(stabilizer)`, after checking the field splits.
pub fn count_simples(a: &GroupAction, field: PrimeField) -> Result<usize> {
    check_splitting(a.group(), field.modulus())?;
    Ok(a.orbits().iter().map(|o| stabilizer_group(a, o[0]).0.class_count()).sum())
}

fn stabilizer_group(a: &GroupAction, x: usize) -> (FiniteGroup, Vec<usize>) {
    let stab = a.stabilizer(x);
    let (sub, _) = a.group().subgroup(&stab).expect("stabilizer is a subgroup");
    (sub, stab)
}

/// Irreducible representations of `g` over a splitting field, as modules on a
/// one-point action, sorted by (dimension, character).
pub fn irreducible_representations(g: &FiniteGroup, field: PrimeField) -> Result<Vec<EquivariantModule>> {
    check_splitting(g, field.modulus())?;
    let point = Arc::new(GroupAction::point(g.clone()));
    let regular = EquivariantModule::regular(&point, field);
    let mut rng = rng_from_seed(IRREP_SEED);
    let mut parts = Vec::new();
    split_into_simples(&regular, &mut rng, &mut parts)?;
    let mut reps: Vec<EquivariantModule> = Vec::new();
    for s in parts {
        let mut is_new = true;
        for r in &reps {
            if r.dims == s.dims && hom_dim(r, &s)? > 0 {
                is_new = false;
                break;
            }
        }
        if is_new {
            reps.push(s);
        }
    }
    reps.sort_by_key(|r| (r.dim(0), character(r)));
    if reps.len() != g.class_count() {
        return Err(Error::NotSplitting {
            p: field.modulus(),
            reason: format!("found {} irreducibles for {} classes", reps.len(), g.class_count()),
        });
    }
    Ok(reps)
}

/// Traces of `rho(g, x0)` on the first populated point, one per group element.
pub fn character(m: &EquivariantModule) -> Vec<u32> {
    let a = m.action();
    let x0 = (0..a.size()).find(|&x| m.dim(x) > 0).unwrap_or(0);
    a.group().elements().map(|g| if a.act(g, x0) == x0 { m.rho(g, x0).trace() } else { 0 }).collect()
}

/// Splits a semisimple module into simple summands using random elements of
/// its endomorphism algebra.
pub fn split_into_simples<R: Rng>(m: &EquivariantModule, rng: &mut R, out: &mut Vec<EquivariantModule>) -> Result<()> {
    if m.total_dim() == 0 {
        return Ok(());
    }
    let ends = hom_space(m, m)?;
    if ends.len() == 1 {
        out.push(m.clone());
        return Ok(());
    }
    let field = m.field;
    let p = field.modulus();
    for _ in 0..SPLIT_RETRIES {
        let a = random_combination(&ends, m, m, rng);
        // an eigenvalue at one populated point, found by exhaustive root search
        let x0 = (0..m.action().size()).find(|&x| m.dim(x) > 0).expect("nonzero module");
        let Some(lambda) = (0..p).find(|&l| a.at(x0).eigenspace(l).cols() > 0) else { continue };
        let shifted: Vec<Matrix> = a
            .components()
            .iter()
            .map(|c| c.sub(&Matrix::scalar(field, c.rows(), lambda)).pow(m.total_dim() as u64))
            .collect();
        // the generalized eigenspace is nonzero at x0; the split is proper
        // unless it fills the whole module
        if shifted.iter().all(Matrix::is_zero) {
            continue;
        }
        let kernels: Vec<Matrix> = shifted.iter().map(Matrix::kernel_matrix).collect();
        let images: Vec<Matrix> = shifted.iter().map(|s| s.column_basis().basis).collect();
        let (k, _) = restrict_to_subspace(m, &kernels)?;
        let (i, _) = restrict_to_subspace(m, &images)?;
        split_into_simples(&k, rng, out)?;
        split_into_simples(&i, rng, out)?;
        return Ok(());
    }
    Err(Error::SplittingFailed(SPLIT_RETRIES))
}

/// Induces a representation of `Stab(x0)` (given on a one-point action of the
/// stabilizer subgroup, elements listed in `stab`) to a module supported on
/// the orbit of `x0`.
pub fn induce_from_stabilizer(
    a: &Arc<GroupAction>,
    field: PrimeField,
    x0: usize,
    stab: &[usize],
    rep: &EquivariantModule,
) -> EquivariantModule {
    let g = a.group().clone();
    let transversal = a.transversal(x0);
    let d = rep.dim(0);
    let dims = (0..a.size()).map(|x| if transversal[x].is_some() { d } else { 0 }).collect();
    EquivariantModule::from_fn_unchecked(a.clone(), field, dims, |k, x| match transversal[x] {
        Some(tx) => {
            let tkx = transversal[a.act(k, x)].expect("orbit is closed");
            let s = g.mul(g.mul(g.inv(tkx), k), tx);
            let idx = stab.binary_search(&s).expect("element fixes the representative");
            rep.rho(idx, 0).clone()
        }
        None => Matrix::zero(field, 0, 0),
    })
}

/// Complete, irredundant list of simple modules, ordered by orbit and then by
/// (dimension, character) of the stabilizer representation.
pub fn construct_simples(a: &Arc<GroupAction>, field: PrimeField) -> Result<Vec<EquivariantModule>> {
    check_splitting(a.group(), field.modulus())?;
    let mut out = Vec::new();
    for orbit in a.orbits() {
        let x0 = orbit[0];
        let (sub, stab) = stabilizer_group(a, x0);
        for rep in irreducible_representations(&sub, field)? {
            out.push(induce_from_stabilizer(a, field, x0, &stab, &rep));
        }
    }
    Ok(out)
}

/// A random module with fibers of dimension at most `max_dim`, deterministic
/// in `seed`: per orbit, a random sum of stabilizer irreducibles in a random
/// basis, induced to the orbit.
pub fn random_module(a: &Arc<GroupAction>, field: PrimeField, max_dim: usize, seed: u64) -> Result<EquivariantModule> {
    let mut rng = rng_from_seed(seed);
    let mut parts = Vec::new();
    for orbit in a.orbits() {
        let x0 = orbit[0];
        let (sub, stab) = stabilizer_group(a, x0);
        let point = Arc::new(GroupAction::point(sub.clone()));
        let irreps = irreducible_representations(&sub, field)?;
        let target = rng.gen_range(0..=max_dim);
        let mut chosen = Vec::new();
        let mut total = 0;
        for _ in 0..4 * max_dim {
            let r = &irreps[rng.gen_range(0..irreps.len())];
            if total + r.dim(0) <= target {
                total += r.dim(0);
                chosen.push(r.clone());
            }
        }
        let local = if chosen.is_empty() {
            EquivariantModule::zero(&point, field)
        } else {
            let sum = EquivariantModule::direct_sum(&chosen)?;
            sum.transport(&[random_invertible(field, total, &mut rng)])?
        };
        parts.push(induce_from_stabilizer(a, field, x0, &stab, &local));
    }
    EquivariantModule::direct_sum(&parts)
}

pub fn random_invertible<R: Rng>(field: PrimeField, n: usize, rng: &mut R) -> Matrix {
    let p = field.modulus();
    loop {
        let data = (0..n * n).map(|_| rng.gen_range(0..p)).collect();
        let m = Matrix::from_vec(field, n, n, data).expect("reduced");
        if m.is_invertible() {
            return m;
        }
    }
}

/// Multiplicity of each simple in `m`, as `dim Hom(S, M)`.
pub fn multiplicities(m: &EquivariantModule, simples: &[EquivariantModule]) -> Result<Vec<usize>> {
    simples.iter().map(|s| hom_dim(s, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupHom;
    use crate::gset::inertia;

    fn fp(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    fn z2_point() -> Arc<GroupAction> {
        Arc::new(GroupAction::point(FiniteGroup::cyclic(2)))
    }

    fn sign(a: &Arc<GroupAction>, f: PrimeField) -> EquivariantModule {
        EquivariantModule::character(a, f, &[1, f.modulus() - 1]).unwrap()
    }

    #[test]
    fn tensor_with_unit_is_strict() {
        let f = fp(3);
        let a = z2_point();
        let s = sign(&a, f);
        assert_eq!(tensor(&s, &unit(&a, f)).unwrap(), s);
        let ss = tensor(&s, &s).unwrap();
        assert!(ss.rho(1, 0).is_identity());
    }

    #[test]
    fn tensor_dims_multiply() {
        let f = fp(5);
        let a = Arc::new(GroupAction::trivial(FiniteGroup::trivial(), 2));
        let id = |d: usize| Matrix::identity(f, d);
        let m = EquivariantModule::from_fn(a.clone(), f, vec![2, 1], |_, x| id([2, 1][x])).unwrap();
        let n = EquivariantModule::from_fn(a.clone(), f, vec![1, 3], |_, x| id([1, 3][x])).unwrap();
        assert_eq!(tensor(&m, &n).unwrap().dims(), &[2, 3]);
    }

    #[test]
    fn swap_is_perfect_shuffle() {
        let f = fp(7);
        let s = swap_matrix(f, 2, 3);
        // (i, j) ↦ (j, i): index i*3 + j goes to j*2 + i
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(s.get(j * 2 + i, i * 3 + j), 1);
            }
        }
        assert!(swap_matrix(f, 3, 2).mul(&s).is_identity());
        assert!(swap_matrix(f, 1, 1).is_identity());
    }

    #[test]
    fn unit_on_free_orbit() {
        let f = fp(3);
        let a = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0]).unwrap());
        let u = unit(&a, f);
        assert_eq!(u.dims(), &[1, 1]);
        assert!(u.rho(1, 0).is_identity());
        assert_eq!(hom_dim(&u, &u).unwrap(), 1);
    }

    #[test]
    fn hom_examples() {
        let f = fp(3);
        let a = z2_point();
        assert_eq!(hom_dim(&sign(&a, f), &unit(&a, f)).unwrap(), 0);
        // dim End(unit) = number of orbits
        let b = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0, 2]).unwrap());
        assert_eq!(hom_dim(&unit(&b, f), &unit(&b, f)).unwrap(), 2);
    }

    #[test]
    fn pullback_of_sign_to_inertia() {
        let f = fp(3);
        let a = z2_point();
        let inert = inertia(&a);
        let pb = pullback(inert.projection(), &sign(&a, f)).unwrap();
        assert_eq!(pb.dims(), &[1, 1]);
        assert_eq!(pb.rho(1, 0).get(0, 0), 2);
        assert_eq!(pb.rho(1, 1).get(0, 0), 2);
    }

    #[test]
    fn pushforward_adds_fibers() {
        let f = fp(3);
        let a = z2_point();
        let inert = inertia(&a);
        let m =
            EquivariantModule::from_fn(inert.action().clone(), f, vec![1, 2], |_, x| Matrix::identity(f, [1, 2][x]))
                .unwrap();
        let push = pushforward(inert.projection(), &m).unwrap();
        assert_eq!(push.dims(), &[3]);

        let triv = Arc::new(GroupAction::trivial(FiniteGroup::trivial(), 2));
        let pt = Arc::new(GroupAction::point(FiniteGroup::trivial()));
        let collapse =
            EquivariantMap::new(triv.clone(), pt, GroupHom::identity(&FiniteGroup::trivial()), vec![0, 0]).unwrap();
        assert_eq!(pushforward(&collapse, &unit(&triv, f)).unwrap().dims(), &[2]);
        let id = EquivariantMap::identity(&triv);
        assert_eq!(pushforward(&id, &unit(&triv, f)).unwrap(), unit(&triv, f));
    }

    #[test]
    fn pushforward_along_chart_inclusion_induces() {
        // trivial group on a point into Z2 swapping {a, b}: induction
        let f = fp(3);
        let triv = FiniteGroup::trivial();
        let z2 = FiniteGroup::cyclic(2);
        let src = Arc::new(GroupAction::point(triv.clone()));
        let tgt = Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0]).unwrap());
        let gamma = GroupHom::new(triv, z2.clone(), vec![0]).unwrap();
        let inc = EquivariantMap::new(src.clone(), tgt.clone(), gamma, vec![0]).unwrap();
        let push = pushforward(&inc, &unit(&src, f)).unwrap();
        assert_eq!(push.dims(), &[1, 1]);
        // a non-injective homomorphism is refused
        let gamma = GroupHom::new(z2.clone(), FiniteGroup::trivial(), vec![0, 0]).unwrap();
        let collapse =
            EquivariantMap::new(z2_point(), Arc::new(GroupAction::point(FiniteGroup::trivial())), gamma, vec![0])
                .unwrap();
        assert!(matches!(pushforward(&collapse, &unit(&z2_point(), f)), Err(Error::UnsupportedPushforward(_))));
    }

    #[test]
    fn projection_iso_for_inertia_projection() {
        let f = fp(3);
        let a = z2_point();
        let inert = inertia(&a);
        let regular = EquivariantModule::regular(inert.action(), f);
        let iso = projection_iso(inert.projection(), &regular, &sign(&a, f)).unwrap();
        assert_eq!(iso.source().dims(), &[2 * 2]);
        assert!(iso.is_isomorphism());
        let idm = EquivariantMap::identity(&a);
        let iso = projection_iso(&idm, &sign(&a, f), &sign(&a, f)).unwrap();
        assert!(iso.at(0).is_identity());
    }

    #[test]
    fn zeta_on_pullbacks() {
        let f = fp(3);
        let a = z2_point();
        let inert = inertia(&a);
        let zeta = inert.canonical_loop();
        let on_sign = two_morphism_pullback_iso(&zeta, &sign(&a, f)).unwrap();
        assert_eq!(on_sign.at(0).get(0, 0), 1);
        assert_eq!(on_sign.at(1).get(0, 0), 2);
        let on_unit = two_morphism_pullback_iso(&zeta, &unit(&a, f)).unwrap();
        assert!(on_unit.components().iter().all(Matrix::is_identity));
        let trivial = TwoMorphism::identity(inert.projection());
        let s = sign(&a, f);
        assert_eq!(
            two_morphism_pullback_iso(&trivial, &s).unwrap(),
            pullback(inert.projection(), &s).unwrap().identity_map()
        );
    }

    #[test]
    fn simple_counts() {
        let s3 = FiniteGroup::symmetric(3);
        let f7 = fp(7);
        let pt = Arc::new(GroupAction::point(s3.clone()));
        assert_eq!(count_simples(&pt, f7).unwrap(), 3);
        assert_eq!(count_simples(inertia(&pt).action(), f7).unwrap(), 8);
        let swap = GroupAction::cyclic_from_permutation(2, &[1, 0]).unwrap();
        assert_eq!(count_simples(&swap, fp(3)).unwrap(), 1);
        assert!(count_simples(&pt, fp(5)).is_err());
    }

    #[test]
    fn s3_irreducibles() {
        let f7 = fp(7);
        let pt = Arc::new(GroupAction::point(FiniteGroup::symmetric(3)));
        let simples = construct_simples(&pt, f7).unwrap();
        let dims: Vec<usize> = simples.iter().map(|s| s.dim(0)).collect();
        assert_eq!(dims, vec![1, 1, 2]);
        for (i, s) in simples.iter().enumerate() {
            for (j, t) in simples.iter().enumerate() {
                assert_eq!(hom_dim(s, t).unwrap(), usize::from(i == j));
            }
        }
    }

    #[test]
    fn z2_and_skyscraper_simples() {
        let f = fp(3);
        let simples = construct_simples(&z2_point(), f).unwrap();
        assert_eq!(simples.len(), 2);
        assert_eq!(simples[0], unit(&z2_point(), f));
        assert_eq!(simples[1], sign(&z2_point(), f));
        let two = Arc::new(GroupAction::trivial(FiniteGroup::trivial(), 2));
        let sky = construct_simples(&two, f).unwrap();
        assert_eq!(sky.iter().map(|s| s.dims().to_vec()).collect::<Vec<_>>(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn regular_module_decomposes_by_simples() {
        let f7 = fp(7);
        let actions = [
            Arc::new(GroupAction::point(FiniteGroup::symmetric(3))),
            Arc::new(GroupAction::cyclic_from_permutation(2, &[1, 0, 2]).unwrap()),
            inertia(&Arc::new(GroupAction::point(FiniteGroup::symmetric(3)))).action().clone(),
        ];
        for a in actions {
            let r = EquivariantModule::regular(&a, f7);
            let simples = construct_simples(&a, f7).unwrap();
            let mut acc = vec![0; a.size()];
            for s in &simples {
                let mult = hom_dim(&r, s).unwrap();
                for x in 0..a.size() {
                    acc[x] += mult * s.dim(x);
                }
            }
            assert_eq!(acc, r.dims());
        }
    }

    #[test]
    fn random_modules_are_valid_and_seeded() {
        let f7 = fp(7);
        let a = inertia(&Arc::new(GroupAction::point(FiniteGroup::symmetric(3)))).action().clone();
        let m1 = random_module(&a, f7, 3, 11).unwrap();
        let m2 = random_module(&a, f7, 3, 11).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.dims().iter().all(|&d| d <= 3));
        m1.validate().unwrap();
    }

    #[test]
    fn adjunction_dimensions() {
        let f7 = fp(7);
        let base = Arc::new(GroupAction::point(FiniteGroup::symmetric(3)));
        let inert = inertia(&base);
        let pi = inert.projection();
        for seed in 0..4 {
            let m = random_module(inert.action(), f7, 2, seed).unwrap();
            let n = random_module(&base, f7, 3, seed + 100).unwrap();
            let lhs = hom_dim(&pullback(pi, &n).unwrap(), &m).unwrap();
            let rhs = hom_dim(&n, &pushforward(pi, &m).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn invalid_cocycle_rejected() {
        let f = fp(5);
        let a = z2_point();
        let err = EquivariantModule::from_fn(a, f, vec![1], |g, _| Matrix::scalar(f, 1, [1, 2][g])).unwrap_err();
        assert!(matches!(err, Error::InvalidModule(_)));
    }
}
