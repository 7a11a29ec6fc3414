//! The Drinfeld double of equivariant modules, in φ-family normal form.
//!
//! A half-braiding on an equivariant module `M` over `G ⋉ X` is encoded by a
//! family of endomorphisms `phi(h, x)` of the fibers `M_x`, one for each
//! `h` fixing `x`, such that
//!
//! * `rho(g, x) phi(h, x) = phi(g h g⁻¹, g·x) rho(g, x)` (equivariance),
//! * `phi(h, x) = 0` unless `h·x = x` (support),
//! * `Σ_h phi(h, x) = 1` (completeness),
//! * the `phi(h, x)` are orthogonal idempotents.
//!
//! The automorphism of `N ↦ M ⊗ N` attached to such a family is
//! `tau_N = Σ_h phi(h, x) ⊗ rho_N(h, x)` on each fiber, and the half-braiding
//! itself is `theta_N = swap ∘ tau_N`.
//!
//! [`theta`] sends a module on the inertia to `(π_* M', projections onto the
//! summands)`; [`extract`] is its quasi-inverse, reading the summands back off
//! the images of the idempotents.
//!
//! The convolution product on inertia modules, `m_*(p1^* M ⊗ p2^* N)`, is the
//! monoidal structure that `theta` carries to [`double_tensor`]. Its braiding
//! is obtained by transport: for `M'`, `N'` on the inertia, the component at
//! `(x, h)` of `M' ⊛ N' → N' ⊛ M'` sends the summand
//! `M'_(x,a) ⊗ N'_(x,b)` (`ab = h`) to `N'_(x, a b a⁻¹) ⊗ M'_(x,a)` by
//! `n ↦ rho_{N'}(a, (x, b)) n` followed by the swap.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::equivariant::{
    self, hom_space, hom_space_constrained, pullback, pushforward, random_combination, random_module, rng_from_seed,
    swap_matrix, tensor, EquivariantModule, ModuleMap, PushLayout, SPLIT_RETRIES,
};
use crate::error::{Error, Result};
use crate::group::check_splitting;
use crate::gset::{double_inertia, EquivariantMap, GroupAction, InertiaAction};
use crate::linalg::{solve_linear, Matrix, PrimeField};

/// A module on the inertia action of some base action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InertiaModule {
    inertia: Arc<InertiaAction>,
    module: EquivariantModule,
}

impl InertiaModule {
    pub fn new(inertia: Arc<InertiaAction>, module: EquivariantModule) -> Result<Self> {
        if module.action() != inertia.action() {
            return Err(Error::Mismatch("module does not live on the inertia action".into()));
        }
        Ok(InertiaModule { inertia, module })
    }

    pub fn inertia(&self) -> &Arc<InertiaAction> {
        &self.inertia
    }
    pub fn module(&self) -> &EquivariantModule {
        &self.module
    }
    pub fn field(&self) -> PrimeField {
        self.module.field()
    }

    /// The unit of the convolution product: one-dimensional at the pairs
    /// `(x, e)`, zero elsewhere.
    pub fn untwisted_unit(inertia: &Arc<InertiaAction>, field: PrimeField) -> Self {
        let e = inertia.base().group().identity();
        let dims: Vec<usize> = inertia.pairs().iter().map(|&(_, h)| usize::from(h == e)).collect();
        let module = EquivariantModule::from_fn(inertia.action().clone(), field, dims.clone(), |_, i| {
            Matrix::identity(field, dims[i])
        })
        .expect("untwisted unit is a module");
        InertiaModule { inertia: inertia.clone(), module }
    }

    /// Simple inertia modules, in the order of [`equivariant::construct_simples`].
    pub fn simples(inertia: &Arc<InertiaAction>, field: PrimeField) -> Result<Vec<InertiaModule>> {
        Ok(equivariant::construct_simples(inertia.action(), field)?
            .into_iter()
            .map(|module| InertiaModule { inertia: inertia.clone(), module })
            .collect())
    }

    pub fn random(inertia: &Arc<InertiaAction>, field: PrimeField, max_dim: usize, seed: u64) -> Result<Self> {
        Ok(InertiaModule { inertia: inertia.clone(), module: random_module(inertia.action(), field, max_dim, seed)? })
    }
}

/// An object of the double: an equivariant module with a φ-family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HalfBraidedModule {
    module: ModuleKey,
    phi: Vec<Matrix>,
}

// Wrapper so that the family can be ordered and deduplicated; modules compare
// by their data.
#[derive(Debug, Clone, PartialEq, Eq)]
struct ModuleKey(EquivariantModule);

impl PartialOrd for ModuleKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ModuleKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let a = &self.0;
        let b = &other.0;
        let g = a.action().group();
        let key = |m: &EquivariantModule| {
            (
                m.dims().to_vec(),
                (0..g.order() * m.action().size())
                    .map(|i| m.rho(i / m.action().size(), i % m.action().size()).clone())
                    .collect::<Vec<_>>(),
            )
        };
        key(a).cmp(&key(b))
    }
}

impl HalfBraidedModule {
    /// Validates the four structural invariants.
    pub fn new(module: EquivariantModule, phi: Vec<Matrix>) -> Result<Self> {
        let d = Self::new_unchecked(module, phi);
        if let Some(v) = structural_violations(&d, 1).into_iter().next() {
            return Err(Error::InvalidHalfBraiding(v.to_string()));
        }
        Ok(d)
    }

    /// Builds a family from its nonzero entries `(h, x, matrix)`; every other
    /// entry is zero. No invariant is checked.
    pub fn from_entries(module: EquivariantModule, entries: &[(usize, usize, Matrix)]) -> Self {
        let n = module.action().size();
        let field = module.field();
        let mut phi: Vec<Matrix> = (0..module.action().group().order() * n)
            .map(|i| Matrix::zero(field, module.dim(i % n), module.dim(i % n)))
            .collect();
        for (h, x, m) in entries {
            phi[h * n + x] = m.clone();
        }
        Self::new_unchecked(module, phi)
    }

    /// `phi` is indexed `h * |X| + x` and covers every pair.
    pub fn new_unchecked(module: EquivariantModule, phi: Vec<Matrix>) -> Self {
        HalfBraidedModule { module: ModuleKey(module), phi }
    }

    /// The trivial family `phi(e, x) = 1`.
    pub fn trivial(module: EquivariantModule) -> Self {
        let e = module.action().group().identity();
        let entries: Vec<(usize, usize, Matrix)> =
            (0..module.action().size()).map(|x| (e, x, Matrix::identity(module.field(), module.dim(x)))).collect();
        Self::from_entries(module, &entries)
    }

    /// The unit object of the double.
    pub fn unit(action: &Arc<GroupAction>, field: PrimeField) -> Self {
        Self::trivial(EquivariantModule::unit(action, field))
    }

    pub fn module(&self) -> &EquivariantModule {
        &self.module.0
    }
    pub fn action(&self) -> &Arc<GroupAction> {
        self.module.0.action()
    }
    pub fn field(&self) -> PrimeField {
        self.module.0.field()
    }
    #[inline]
    pub fn phi(&self, h: usize, x: usize) -> &Matrix {
        &self.phi[h * self.action().size() + x]
    }
    pub fn phi_family(&self) -> &[Matrix] {
        &self.phi
    }

    /// The family restricted to fixed pairs, in `(x, h)` order.
    pub fn fixed_family(&self) -> Vec<Matrix> {
        let a = self.action();
        (0..a.size())
            .flat_map(|x| a.group().elements().filter(move |&h| a.act(h, x) == x).map(move |h| (h, x)))
            .map(|(h, x)| self.phi(h, x).clone())
            .collect()
    }

    /// `{h : phi(h, x) != 0 for some x}`
    pub fn support(&self) -> BTreeSet<usize> {
        let a = self.action();
        a.group().elements().filter(|&h| (0..a.size()).any(|x| !self.phi(h, x).is_zero())).collect()
    }

    /// The same family conjugated by per-point isomorphisms `t_x: M_x → V_x`.
    pub fn transport(&self, iso: &[Matrix]) -> Result<Self> {
        let module = self.module().transport(iso)?;
        let inverses: Vec<Matrix> = iso.iter().map(Matrix::inverse).collect::<Result<_>>()?;
        let n = self.action().size();
        let phi = self.phi.iter().enumerate().map(|(i, p)| iso[i % n].mul(p).mul(&inverses[i % n])).collect();
        Ok(Self::new_unchecked(module, phi))
    }
}

/// A failed invariant, with its witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Shape { h: usize, x: usize },
    Support { h: usize, x: usize },
    Equivariance { g: usize, h: usize, x: usize },
    Completeness { x: usize },
    Idempotence { h: usize, x: usize },
    Orthogonality { g: usize, h: usize, x: usize },
    UnitAxiom { x: usize },
    Factorization { left: usize, right: usize, x: usize },
    Naturality { trial: usize, x: usize },
}

impl Violation {
    pub fn kind(&self) -> &'static str {
        match self {
            Violation::Shape { .. } => "shape",
            Violation::Support { .. } => "support",
            Violation::Equivariance { .. } => "equivariance",
            Violation::Completeness { .. } => "completeness",
            Violation::Idempotence { .. } => "idempotence",
            Violation::Orthogonality { .. } => "orthogonality",
            Violation::UnitAxiom { .. } => "FT1",
            Violation::Factorization { .. } => "FT2",
            Violation::Naturality { .. } => "naturality",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Shape { h, x } => write!(f, "shape: phi({h}, {x}) is not an endomorphism of the fiber"),
            Violation::Support { h, x } => write!(f, "support: phi({h}, {x}) != 0 but {h} moves {x}"),
            Violation::Equivariance { g, h, x } => {
                write!(f, "equivariance: rho({g},{x}) phi({h},{x}) != phi({g}{h}{g}^-1, {g}·{x}) rho({g},{x})")
            }
            Violation::Completeness { x } => write!(f, "completeness: sum of phi(h, {x}) is not the identity"),
            Violation::Idempotence { h, x } => write!(f, "idempotence: phi({h}, {x})^2 != phi({h}, {x})"),
            Violation::Orthogonality { g, h, x } => write!(f, "orthogonality: phi({g}, {x}) phi({h}, {x}) != 0"),
            Violation::UnitAxiom { x } => write!(f, "FT1: tau(1) is not the identity at {x}"),
            Violation::Factorization { left, right, x } => {
                write!(f, "FT2: tau(B⊗C) differs from the swap composite for panel pair ({left}, {right}) at {x}")
            }
            Violation::Naturality { trial, x } => {
                write!(f, "naturality: tau fails to commute with panel map {trial} at {x}")
            }
        }
    }
}

/// Structural invariants of a φ-family; stops after `limit` violations.
pub fn structural_violations(d: &HalfBraidedModule, limit: usize) -> Vec<Violation> {
    let a = d.action();
    let g = a.group();
    let m = d.module();
    let field = d.field();
    let n = a.size();
    let mut out = Vec::new();
    macro_rules! push {
        ($v:expr) => {{
            out.push($v);
            if out.len() >= limit {
                return out;
            }
        }};
    }
    if d.phi.len() != g.order() * n {
        push!(Violation::Shape { h: 0, x: 0 });
    }
    for h in g.elements() {
        for x in 0..n {
            let p = d.phi(h, x);
            if p.field() != field || (p.rows(), p.cols()) != (m.dim(x), m.dim(x)) {
                push!(Violation::Shape { h, x });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    for x in 0..n {
        for h in g.elements() {
            if a.act(h, x) != x && !d.phi(h, x).is_zero() {
                push!(Violation::Support { h, x });
            }
        }
    }
    for k in g.elements() {
        for x in 0..n {
            for h in a.stabilizer(x) {
                let lhs = m.rho(k, x).mul(d.phi(h, x));
                let rhs = d.phi(g.conj(k, h), a.act(k, x)).mul(m.rho(k, x));
                if lhs != rhs {
                    push!(Violation::Equivariance { g: k, h, x });
                }
            }
        }
    }
    for x in 0..n {
        let sum = g.elements().fold(Matrix::zero(field, m.dim(x), m.dim(x)), |acc, h| acc.add(d.phi(h, x)));
        if !sum.is_identity() {
            push!(Violation::Completeness { x });
        }
        let stab = a.stabilizer(x);
        for &h in &stab {
            let p = d.phi(h, x);
            if &p.mul(p) != p {
                push!(Violation::Idempotence { h, x });
            }
            for &k in &stab {
                if k != h && !d.phi(k, x).mul(p).is_zero() {
                    push!(Violation::Orthogonality { g: k, h, x });
                }
            }
        }
    }
    out
}

/// Fiber matrices of `tau_N = Σ_h phi(h, x) ⊗ rho_N(h, x)` on `M ⊗ N`.
pub fn tau_components(d: &HalfBraidedModule, n: &EquivariantModule) -> Result<Vec<Matrix>> {
    if d.action() != n.action() || d.field() != n.field() {
        return Err(Error::Mismatch("half-braided module and test module live on different actions".into()));
    }
    let a = d.action();
    let field = d.field();
    Ok((0..a.size())
        .map(|x| {
            let dim = d.module().dim(x) * n.dim(x);
            a.stabilizer(x)
                .into_iter()
                .fold(Matrix::zero(field, dim, dim), |acc, h| acc.add(&d.phi(h, x).kron(n.rho(h, x))))
        })
        .collect())
}

/// The automorphism `tau_N` of `M ⊗ N`, checked to be a module map.
pub fn tau_apply(d: &HalfBraidedModule, n: &EquivariantModule) -> Result<ModuleMap> {
    let mn = tensor(d.module(), n)?;
    ModuleMap::new(&mn, &mn, tau_components(d, n)?)
}

/// Knobs for the test panels used by [`verify_half_braiding`].
#[derive(Debug, Clone, Copy)]
pub struct PanelOptions {
    pub seed: u64,
    pub random_modules: usize,
    pub max_dim: usize,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions { seed: 0, random_modules: 3, max_dim: 2 }
    }
}

/// Outcome of [`verify_half_braiding`].
#[derive(Debug, Clone, Default)]
pub struct HalfBraidingReport {
    pub violations: Vec<Violation>,
    pub ft2_pairs: usize,
    pub naturality_trials: usize,
}

impl HalfBraidingReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Test modules for the axioms: all simples when the field splits, otherwise
/// the unit and the regular module; plus seeded random modules.
pub fn test_panel(action: &Arc<GroupAction>, field: PrimeField, opts: &PanelOptions) -> Vec<EquivariantModule> {
    match equivariant::construct_simples(action, field) {
        Ok(simples) => {
            let mut panel = simples;
            for i in 0..opts.random_modules {
                if let Ok(m) = random_module(action, field, opts.max_dim, opts.seed.wrapping_add(i as u64)) {
                    if m.total_dim() > 0 {
                        panel.push(m);
                    }
                }
            }
            panel
        }
        Err(_) => vec![EquivariantModule::unit(action, field), EquivariantModule::regular(action, field)],
    }
}

/// Checks the structural invariants, FT1, FT2 on all pairs from the panel,
/// and naturality of `tau` against random maps between panel modules.
pub fn verify_half_braiding(d: &HalfBraidedModule, opts: &PanelOptions) -> HalfBraidingReport {
    let mut report = HalfBraidingReport { violations: structural_violations(d, 16), ..Default::default() };
    if report.violations.iter().any(|v| matches!(v, Violation::Shape { .. })) {
        return report;
    }
    let a = d.action().clone();
    let field = d.field();
    let m = d.module();

    let unit = EquivariantModule::unit(&a, field);
    if let Ok(t) = tau_components(d, &unit) {
        for (x, c) in t.iter().enumerate() {
            if !c.is_identity() {
                report.violations.push(Violation::UnitAxiom { x });
            }
        }
    }

    let panel = test_panel(&a, field, opts);
    for (i, b) in panel.iter().enumerate() {
        for (j, c) in panel.iter().enumerate() {
            report.ft2_pairs += 1;
            let bc = tensor(b, c).expect("same action");
            let lhs = tau_components(d, &bc).expect("same action");
            let rhs = ft2_composite(d, b, c).expect("same action");
            for x in 0..a.size() {
                if lhs[x] != rhs[x] {
                    report.violations.push(Violation::Factorization { left: i, right: j, x });
                    break;
                }
            }
        }
    }

    let mut rng = rng_from_seed(opts.seed ^ 0x6e61_7475);
    for (trial, (n1, n2)) in panel.iter().zip(panel.iter().cycle().skip(1)).enumerate() {
        let basis = hom_space(n1, n2).expect("same action");
        let f = random_combination(&basis, n1, n2, &mut rng);
        report.naturality_trials += 1;
        let t1 = tau_components(d, n1).expect("same action");
        let t2 = tau_components(d, n2).expect("same action");
        for x in 0..a.size() {
            let idf = Matrix::identity(field, m.dim(x)).kron(f.at(x));
            if t2[x].mul(&idf) != idf.mul(&t1[x]) {
                report.violations.push(Violation::Naturality { trial, x });
                break;
            }
        }
    }
    report
}

/// `(A⊗σ_CB)∘(τ(C)⊗B)∘(A⊗σ_BC)∘(τ(B)⊗C)` on `A ⊗ B ⊗ C`, fiberwise.
pub fn ft2_composite(d: &HalfBraidedModule, b: &EquivariantModule, c: &EquivariantModule) -> Result<Vec<Matrix>> {
    let field = d.field();
    let tb = tau_components(d, b)?;
    let tc = tau_components(d, c)?;
    Ok((0..d.action().size())
        .map(|x| {
            let (da, db, dc) = (d.module().dim(x), b.dim(x), c.dim(x));
            let ida = Matrix::identity(field, da);
            let step1 = tb[x].kron(&Matrix::identity(field, dc));
            let step2 = ida.kron(&swap_matrix(field, db, dc));
            let step3 = tc[x].kron(&Matrix::identity(field, db));
            let step4 = ida.kron(&swap_matrix(field, dc, db));
            step4.mul(&step3).mul(&step2).mul(&step1)
        })
        .collect())
}

/// Offsets of the summands of `π_*(M')` at each base point: `(pair, h, offset)`.
fn pi_offsets(inertia: &InertiaAction, dims: &[usize]) -> Vec<Vec<(usize, usize, usize)>> {
    let layout = PushLayout::new(inertia.projection()).expect("projection has identity homomorphism");
    (0..inertia.base().size())
        .map(|x| {
            let offs = layout.offsets(dims, x);
            layout.summands[x].iter().zip(offs).map(|(&(pair, _), o)| (pair, inertia.pairs()[pair].1, o)).collect()
        })
        .collect()
}

/// `Θ(M') = (π_*(M'), projections onto the (x, h) summands)`.
pub fn theta(mp: &InertiaModule) -> Result<HalfBraidedModule> {
    let inertia = mp.inertia();
    let module = pushforward(inertia.projection(), mp.module())?;
    let field = mp.field();
    let entries: Vec<(usize, usize, Matrix)> = pi_offsets(inertia, mp.module().dims())
        .into_iter()
        .enumerate()
        .flat_map(|(x, summands)| {
            let dx = module.dim(x);
            let dims = mp.module().dims();
            summands.into_iter().map(move |(pair, h, off)| {
                let mut p = Matrix::zero(field, dx, dx);
                p.set_block(off, off, &Matrix::identity(field, dims[pair]));
                (h, x, p)
            })
        })
        .collect();
    Ok(HalfBraidedModule::from_entries(module, &entries))
}

/// Output of [`extract`]: the inertia module and, per base point, the
/// assembly isomorphism `⊕_h im phi(h, x) → M_x` (blocks in pair order).
#[derive(Debug, Clone)]
pub struct Extraction {
    pub module: InertiaModule,
    pub assembly: Vec<Matrix>,
}

/// Quasi-inverse of [`theta`]: the fiber at `(x, h)` is the image of `phi(h, x)`
/// in echelon coordinates.
pub fn extract(d: &HalfBraidedModule, inertia: &Arc<InertiaAction>) -> Result<Extraction> {
    if inertia.base() != d.action() {
        return Err(Error::Mismatch("inertia of a different action".into()));
    }
    if let Some(v) = structural_violations(d, 1).into_iter().next() {
        return Err(Error::InvalidHalfBraiding(v.to_string()));
    }
    let field = d.field();
    let bases: Vec<_> = inertia.pairs().iter().map(|&(x, h)| d.phi(h, x).column_basis()).collect();
    let ia = inertia.action().clone();
    let base = d.action();
    let dims = bases.iter().map(|b| b.basis.cols()).collect();
    let module = EquivariantModule::from_fn(ia.clone(), field, dims, |g, i| {
        let x = inertia.pairs()[i].0;
        bases[ia.act(g, i)].coordinates(&d.module().rho(g, x).mul(&bases[i].basis))
    })?;
    let assembly = (0..base.size())
        .map(|x| {
            let parts: Vec<Matrix> = inertia.pairs_over(x).map(|(_, i)| bases[i].basis.clone()).collect();
            Matrix::hstack(field, d.module().dim(x), &parts)
        })
        .collect();
    Ok(Extraction { module: InertiaModule::new(inertia.clone(), module)?, assembly })
}

/// `f_x phi1(h, x) = phi2(h, x) f_x` for every fixed pair.
pub fn is_double_morphism(f: &ModuleMap, d1: &HalfBraidedModule, d2: &HalfBraidedModule) -> bool {
    let a = d1.action();
    f.source() == d1.module()
        && f.target() == d2.module()
        && (0..a.size())
            .all(|x| a.stabilizer(x).into_iter().all(|h| f.at(x).mul(d1.phi(h, x)) == d2.phi(h, x).mul(f.at(x))))
}

/// Basis of morphisms of half-braided modules.
pub fn double_hom_space(d1: &HalfBraidedModule, d2: &HalfBraidedModule) -> Result<Vec<ModuleMap>> {
    let a = d1.action().clone();
    hom_space_constrained(d1.module(), d2.module(), &|x| {
        a.stabilizer(x).into_iter().map(|h| (d1.phi(h, x).clone(), d2.phi(h, x).clone())).collect()
    })
}

/// `extract(theta(M')) → M'`, certified as an isomorphism of inertia modules.
pub fn roundtrip_inertia(mp: &InertiaModule) -> Result<ModuleMap> {
    let d = theta(mp)?;
    let ext = extract(&d, mp.inertia())?;
    let offsets = pi_offsets(mp.inertia(), mp.module().dims());
    let field = mp.field();
    let mut comps = vec![Matrix::zero(field, 0, 0); mp.inertia().pairs().len()];
    for (x, summands) in offsets.iter().enumerate() {
        for &(pair, _, off) in summands {
            let basis = &d.phi(mp.inertia().pairs()[pair].1, x).column_basis().basis;
            comps[pair] = basis.block(off, 0, mp.module().dim(pair), basis.cols());
        }
    }
    let map = ModuleMap::new(ext.module.module(), mp.module(), comps)?;
    if !map.is_isomorphism() {
        return Err(Error::InvalidModuleMap("extract∘theta comparison is not invertible".into()));
    }
    Ok(map)
}

/// `theta(extract(D)) → D`, certified as an isomorphism in the double.
pub fn roundtrip_double(d: &HalfBraidedModule, inertia: &Arc<InertiaAction>) -> Result<ModuleMap> {
    let ext = extract(d, inertia)?;
    let back = theta(&ext.module)?;
    let map = ModuleMap::new(back.module(), d.module(), ext.assembly)?;
    if !map.is_isomorphism() {
        return Err(Error::InvalidModuleMap("assembly map is not invertible".into()));
    }
    if !is_double_morphism(&map, &back, d) {
        return Err(Error::InvalidModuleMap("assembly map does not match the φ-families".into()));
    }
    Ok(map)
}

/// `(M1 ⊗ M2, phi(h) = Σ_{kl = h} phi1(k) ⊗ phi2(l))`.
pub fn double_tensor(d1: &HalfBraidedModule, d2: &HalfBraidedModule) -> Result<HalfBraidedModule> {
    let module = tensor(d1.module(), d2.module())?;
    let a = d1.action();
    let g = a.group();
    let field = d1.field();
    let n = a.size();
    let mut phi: Vec<Matrix> =
        (0..g.order() * n).map(|i| Matrix::zero(field, module.dim(i % n), module.dim(i % n))).collect();
    for x in 0..n {
        let stab = a.stabilizer(x);
        for &k in &stab {
            for &l in &stab {
                let slot = &mut phi[g.mul(k, l) * n + x];
                *slot = slot.add(&d1.phi(k, x).kron(d2.phi(l, x)));
            }
        }
    }
    Ok(HalfBraidedModule::new_unchecked(module, phi))
}

/// The τ of `D1 ⊗ D2` computed literally: `σ_{X,A⊗A'} ∘ (θ(X)⊗A') ∘ (A⊗θ'(X))`
/// with `θ = σ ∘ τ`.
pub fn tensor_tau_composite(
    d1: &HalfBraidedModule,
    d2: &HalfBraidedModule,
    n: &EquivariantModule,
) -> Result<Vec<Matrix>> {
    let field = d1.field();
    let t1 = tau_components(d1, n)?;
    let t2 = tau_components(d2, n)?;
    Ok((0..d1.action().size())
        .map(|x| {
            let (da, db, dn) = (d1.module().dim(x), d2.module().dim(x), n.dim(x));
            let theta2 = swap_matrix(field, db, dn).mul(&t2[x]);
            let theta1 = swap_matrix(field, da, dn).mul(&t1[x]);
            let inner = Matrix::identity(field, da).kron(&theta2);
            let outer = theta1.kron(&Matrix::identity(field, db));
            swap_matrix(field, dn, da * db).mul(&outer).mul(&inner)
        })
        .collect())
}

/// `c: M1 ⊗ M2 → M2 ⊗ M1`, `m ⊗ m' ↦ Σ_h rho_2(h, x) m' ⊗ phi_1(h, x) m`.
pub fn double_braiding(d1: &HalfBraidedModule, d2: &HalfBraidedModule) -> Result<ModuleMap> {
    let field = d1.field();
    let tau = tau_components(d1, d2.module())?;
    let comps = (0..d1.action().size())
        .map(|x| swap_matrix(field, d1.module().dim(x), d2.module().dim(x)).mul(&tau[x]))
        .collect();
    let map = ModuleMap::new(&tensor(d1.module(), d2.module())?, &tensor(d2.module(), d1.module())?, comps)?;
    if !map.is_isomorphism() {
        return Err(Error::InvalidModuleMap("braiding is not invertible".into()));
    }
    Ok(map)
}

fn check_same_fibers(lhs: &[Matrix], rhs: &[Matrix]) -> bool {
    lhs.len() == rhs.len() && lhs.iter().zip(rhs).all(|(a, b)| a == b)
}

/// `c_{D1, D2⊗D3} = (D2 ⊗ c_{D1,D3}) ∘ (c_{D1,D2} ⊗ D3)`, entrywise.
pub fn hexagon_left(d1: &HalfBraidedModule, d2: &HalfBraidedModule, d3: &HalfBraidedModule) -> Result<bool> {
    let field = d1.field();
    let lhs = double_braiding(d1, &double_tensor(d2, d3)?)?;
    let c12 = double_braiding(d1, d2)?;
    let c13 = double_braiding(d1, d3)?;
    let rhs: Vec<Matrix> = (0..d1.action().size())
        .map(|x| {
            let i2 = Matrix::identity(field, d2.module().dim(x));
            let i3 = Matrix::identity(field, d3.module().dim(x));
            i2.kron(c13.at(x)).mul(&c12.at(x).kron(&i3))
        })
        .collect();
    Ok(check_same_fibers(lhs.components(), &rhs))
}

/// `c_{D1⊗D2, D3} = (c_{D1,D3} ⊗ D2) ∘ (D1 ⊗ c_{D2,D3})`, entrywise.
pub fn hexagon_right(d1: &HalfBraidedModule, d2: &HalfBraidedModule, d3: &HalfBraidedModule) -> Result<bool> {
    let field = d1.field();
    let lhs = double_braiding(&double_tensor(d1, d2)?, d3)?;
    let c13 = double_braiding(d1, d3)?;
    let c23 = double_braiding(d2, d3)?;
    let rhs: Vec<Matrix> = (0..d1.action().size())
        .map(|x| {
            let i1 = Matrix::identity(field, d1.module().dim(x));
            let i2 = Matrix::identity(field, d2.module().dim(x));
            c13.at(x).kron(&i2).mul(&i1.kron(c23.at(x)))
        })
        .collect();
    Ok(check_same_fibers(lhs.components(), &rhs))
}

/// `c_{D1',D2'} ∘ (f ⊗ g) = (g ⊗ f) ∘ c_{D1,D2}` for double morphisms `f`, `g`.
pub fn braiding_natural(
    f: &ModuleMap,
    g: &ModuleMap,
    d1: &HalfBraidedModule,
    d1p: &HalfBraidedModule,
    d2: &HalfBraidedModule,
    d2p: &HalfBraidedModule,
) -> Result<bool> {
    let c = double_braiding(d1, d2)?;
    let cp = double_braiding(d1p, d2p)?;
    Ok((0..d1.action().size()).all(|x| cp.at(x).mul(&f.at(x).kron(g.at(x))) == g.at(x).kron(f.at(x)).mul(c.at(x))))
}

/// `m_*(p1^* M' ⊗ p2^* N')`.
pub fn convolution(mp: &InertiaModule, np: &InertiaModule) -> Result<InertiaModule> {
    if mp.inertia() != np.inertia() {
        return Err(Error::Mismatch("inertia modules over different actions".into()));
    }
    let di = double_inertia(mp.inertia());
    let prod = tensor(&pullback(&di.p1, mp.module())?, &pullback(&di.p2, np.module())?)?;
    InertiaModule::new(mp.inertia().clone(), pushforward(&di.m, &prod)?)
}

/// The explicit isomorphism `Θ(M' ⊛ N') → Θ(M') ⊗ Θ(N')`, certified to be an
/// invertible module map matching the φ-families.
pub fn theta_monoidal_iso(mp: &InertiaModule, np: &InertiaModule) -> Result<ModuleMap> {
    let inertia = mp.inertia().clone();
    let conv = convolution(mp, np)?;
    let lhs = theta(&conv)?;
    let rhs = double_tensor(&theta(mp)?, &theta(np)?)?;
    let field = mp.field();
    let di = double_inertia(&inertia);
    let m_layout = PushLayout::new(&di.m)?;
    let triple_dims: Vec<usize> = di
        .triples
        .iter()
        .map(|&(x, a, b)| mp.module().dim(pair(&inertia, x, a)) * np.module().dim(pair(&inertia, x, b)))
        .collect();
    let conv_offsets = pi_offsets(&inertia, conv.module().dims());
    let m_off = pi_offsets(&inertia, mp.module().dims());
    let n_off = pi_offsets(&inertia, np.module().dims());
    let comps = (0..inertia.base().size())
        .map(|x| {
            let (src_dim, tgt_dim) = (lhs.module().dim(x), rhs.module().dim(x));
            let n_total = theta_dim(&n_off[x], np);
            let mut images = vec![usize::MAX; src_dim];
            for &(pi, _, pair_off) in &conv_offsets[x] {
                let inner = m_layout.offsets(&triple_dims, pi);
                for (&(t, _), t_off) in m_layout.summands[pi].iter().zip(inner) {
                    let (_, a, b) = di.triples[t];
                    let (ia, ib) = (pair(&inertia, x, a), pair(&inertia, x, b));
                    let mo = offset_of(&m_off[x], ia);
                    let no = offset_of(&n_off[x], ib);
                    let (dm, dn) = (mp.module().dim(ia), np.module().dim(ib));
                    for i in 0..dm {
                        for j in 0..dn {
                            images[pair_off + t_off + i * dn + j] = (mo + i) * n_total + no + j;
                        }
                    }
                }
            }
            debug_assert!(images.iter().all(|&v| v < tgt_dim));
            Matrix::permutation(field, &images)
        })
        .collect();
    let map = ModuleMap::new(lhs.module(), rhs.module(), comps)?;
    if !map.is_isomorphism() || !is_double_morphism(&map, &lhs, &rhs) {
        return Err(Error::InvalidModuleMap("monoidal comparison is not an isomorphism of the double".into()));
    }
    Ok(map)
}

fn pair(inertia: &InertiaAction, x: usize, h: usize) -> usize {
    inertia.pair_index(x, h).expect("fixed pair")
}

fn offset_of(offsets: &[(usize, usize, usize)], pair: usize) -> usize {
    offsets.iter().find(|o| o.0 == pair).expect("pair over this point").2
}

fn theta_dim(offsets: &[(usize, usize, usize)], m: &InertiaModule) -> usize {
    offsets.iter().map(|&(p, _, _)| m.module().dim(p)).sum()
}

/// Simple objects of the double, as `theta` of the inertia simples.
pub fn double_simples(inertia: &Arc<InertiaAction>, field: PrimeField) -> Result<Vec<HalfBraidedModule>> {
    InertiaModule::simples(inertia, field)?.iter().map(theta).collect()
}

/// Bits needed by [`enumerate_half_braidings`]: `Σ d_x² · log2 p` over fixed pairs.
pub fn enumeration_bits(m: &EquivariantModule) -> f64 {
    let a = m.action();
    let vars: usize = (0..a.size()).map(|x| a.stabilizer(x).len() * m.dim(x) * m.dim(x)).sum();
    vars as f64 * (m.field().modulus() as f64).log2()
}

/// Every φ-family on `m`, by exhaustive search over the affine solution space
/// of the linear constraints (equivariance, support, completeness), filtered
/// by the idempotent relations.
pub fn enumerate_half_braidings(m: &EquivariantModule, budget_bits: u32) -> Result<Vec<HalfBraidedModule>> {
    let needed = enumeration_bits(m);
    if needed > budget_bits as f64 {
        return Err(Error::BudgetExceeded { needed: needed.ceil() as u32, budget: budget_bits });
    }
    let a = m.action();
    let g = a.group();
    let field = m.field();
    let p = field.modulus();
    let n = a.size();
    // variable blocks, one per fixed pair
    let mut slots = vec![usize::MAX; g.order() * n];
    let mut offsets = Vec::new();
    let mut nvars = 0;
    for x in 0..n {
        for h in a.stabilizer(x) {
            slots[h * n + x] = offsets.len();
            offsets.push((h, x, nvars));
            nvars += m.dim(x) * m.dim(x);
        }
    }
    let var = |h: usize, x: usize, i: usize, j: usize| offsets[slots[h * n + x]].2 + i * m.dim(x) + j;
    let mut rows: Vec<Vec<u32>> = Vec::new();
    let mut rhs: Vec<u32> = Vec::new();
    for k in g.elements() {
        for x in 0..n {
            let y = a.act(k, x);
            let r = m.rho(k, x);
            for h in a.stabilizer(x) {
                let kh = g.conj(k, h);
                // (r phi_h)[i][j] - (phi_kh r)[i][j] = 0, i < d_y, j < d_x
                for i in 0..m.dim(y) {
                    for j in 0..m.dim(x) {
                        let mut row = vec![0u32; nvars];
                        for l in 0..m.dim(x) {
                            let v = var(h, x, l, j);
                            row[v] = field.add(row[v], r.get(i, l));
                        }
                        for l in 0..m.dim(y) {
                            let v = var(kh, y, i, l);
                            row[v] = field.sub(row[v], r.get(l, j));
                        }
                        rows.push(row);
                        rhs.push(0);
                    }
                }
            }
        }
    }
    for x in 0..n {
        for i in 0..m.dim(x) {
            for j in 0..m.dim(x) {
                let mut row = vec![0u32; nvars];
                for h in a.stabilizer(x) {
                    row[var(h, x, i, j)] = 1 % p;
                }
                rows.push(row);
                rhs.push(u32::from(i == j) % p);
            }
        }
    }
    let system = Matrix::from_vec(field, rows.len(), nvars, rows.into_iter().flatten().collect())?;
    let solution = match solve_linear(&system, &rhs) {
        Ok(s) => s,
        Err(Error::Inconsistent) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let k = solution.kernel.len();
    let mut coeffs = vec![0u32; k];
    let mut found = Vec::new();
    // v tracks particular + Σ coeffs·kernel; each odometer step adds one
    // kernel vector (a wrap from p-1 to 0 is also one addition).
    let mut v = solution.particular.clone();
    let groups: Vec<(usize, Vec<usize>)> =
        (0..n).map(|x| (m.dim(x), a.stabilizer(x).iter().map(|&h| offsets[slots[h * n + x]].2).collect())).collect();
    let mut scratch = Vec::new();
    loop {
        if groups.iter().all(|(d, starts)| orthogonal_idempotents(field, &v, *d, starts, &mut scratch)) {
            let entries: Vec<(usize, usize, Matrix)> = offsets
                .iter()
                .map(|&(h, x, start)| {
                    let d = m.dim(x);
                    (h, x, Matrix::from_vec(field, d, d, v[start..start + d * d].to_vec()).expect("reduced"))
                })
                .collect();
            found.push(HalfBraidedModule::from_entries(m.clone(), &entries));
        }
        // odometer over F_p^k
        let mut pos = 0;
        loop {
            if pos == k {
                return Ok(found);
            }
            for (slot, &b) in v.iter_mut().zip(&solution.kernel[pos]) {
                *slot = field.add(*slot, b);
            }
            coeffs[pos] += 1;
            if coeffs[pos] == p {
                coeffs[pos] = 0;
                pos += 1;
            } else {
                break;
            }
        }
    }
}

/// Whether the d×d blocks of `v` starting at `starts` are pairwise orthogonal
/// idempotents.
fn orthogonal_idempotents(field: PrimeField, v: &[u32], d: usize, starts: &[usize], scratch: &mut Vec<u32>) -> bool {
    scratch.resize(d * d, 0);
    for (i, &si) in starts.iter().enumerate() {
        for (j, &sj) in starts.iter().enumerate() {
            for r in 0..d {
                for c in 0..d {
                    let mut acc = 0;
                    for l in 0..d {
                        acc = field.add(acc, field.mul(v[si + r * d + l], v[sj + l * d + c]));
                    }
                    scratch[r * d + c] = acc;
                }
            }
            let ok = if i == j { scratch[..] == v[si..si + d * d] } else { scratch.iter().all(|&e| e == 0) };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Every φ-family on `m` obtained by transporting some `Θ(M')` along an
/// isomorphism `π_*(M') → m`, as a set of fixed-pair families.
///
/// Inertia modules are enumerated as sums of inertia simples whose
/// pushforward has the same simple multiplicities as `m`; isomorphisms are
/// enumerated exhaustively inside `Hom(π_*(M'), m)`.
pub fn theta_image_families(m: &EquivariantModule, inertia: &Arc<InertiaAction>) -> Result<BTreeSet<Vec<Matrix>>> {
    let field = m.field();
    check_splitting(m.action().group(), field.modulus())?;
    let base_simples = equivariant::construct_simples(m.action(), field)?;
    let target = equivariant::multiplicities(m, &base_simples)?;
    let simples = InertiaModule::simples(inertia, field)?;
    let pushed: Vec<Vec<usize>> = simples
        .iter()
        .map(|s| equivariant::multiplicities(&pushforward(inertia.projection(), s.module())?, &base_simples))
        .collect::<Result<_>>()?;
    let mut combos = Vec::new();
    collect_combinations(&pushed, &target, 0, &mut vec![0; simples.len()], &mut combos);
    let mut out = BTreeSet::new();
    for counts in combos {
        let parts: Vec<EquivariantModule> =
            simples.iter().zip(&counts).flat_map(|(s, &c)| std::iter::repeat_n(s.module().clone(), c)).collect();
        let mp = if parts.is_empty() {
            InertiaModule::new(inertia.clone(), EquivariantModule::zero(inertia.action(), field))?
        } else {
            InertiaModule::new(inertia.clone(), EquivariantModule::direct_sum(&parts)?)?
        };
        let d = theta(&mp)?;
        let basis = hom_space(d.module(), m)?;
        for_each_combination(field, basis.len(), |coeffs| {
            let comps: Vec<Matrix> = (0..m.action().size())
                .map(|x| {
                    basis.iter().zip(coeffs).fold(Matrix::zero(field, m.dim(x), d.module().dim(x)), |acc, (b, &c)| {
                        acc.add(&b.at(x).scale(c))
                    })
                })
                .collect();
            if comps.iter().all(Matrix::is_invertible) {
                let moved = d.transport(&comps).expect("invertible");
                out.insert(moved.fixed_family());
            }
        });
    }
    Ok(out)
}

fn collect_combinations(
    pushed: &[Vec<usize>],
    remaining: &[usize],
    i: usize,
    counts: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if i == pushed.len() {
        if remaining.iter().all(|&r| r == 0) {
            out.push(counts.clone());
        }
        return;
    }
    let mut rem = remaining.to_vec();
    counts[i] = 0;
    loop {
        collect_combinations(pushed, &rem, i + 1, counts, out);
        if pushed[i].iter().all(|&v| v == 0) {
            break;
        }
        if rem.iter().zip(&pushed[i]).any(|(&r, &v)| v > r) {
            break;
        }
        for (r, &v) in rem.iter_mut().zip(&pushed[i]) {
            *r -= v;
        }
        counts[i] += 1;
    }
    counts[i] = 0;
}

fn for_each_combination(field: PrimeField, k: usize, mut f: impl FnMut(&[u32])) {
    let p = field.modulus();
    let mut coeffs = vec![0u32; k];
    loop {
        f(&coeffs);
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            coeffs[pos] += 1;
            if coeffs[pos] == p {
                coeffs[pos] = 0;
                pos += 1;
            } else {
                break;
            }
        }
    }
}

/// Searches for an isomorphism of half-braided modules among random double
/// morphisms.
pub fn find_double_isomorphism<R: Rng>(
    d1: &HalfBraidedModule,
    d2: &HalfBraidedModule,
    rng: &mut R,
) -> Result<Option<ModuleMap>> {
    if d1.module().dims() != d2.module().dims() {
        return Ok(None);
    }
    let basis = double_hom_space(d1, d2)?;
    for _ in 0..SPLIT_RETRIES {
        let f = random_combination(&basis, d1.module(), d2.module(), rng);
        if f.is_isomorphism() {
            return Ok(Some(f));
        }
    }
    Ok(None)
}

/// Random double morphism `D1 → D2`.
pub fn random_double_morphism<R: Rng>(
    d1: &HalfBraidedModule,
    d2: &HalfBraidedModule,
    rng: &mut R,
) -> Result<ModuleMap> {
    let basis = double_hom_space(d1, d2)?;
    Ok(random_combination(&basis, d1.module(), d2.module(), rng))
}

/// The chart-level pullback of a half-braided module along a map whose
/// homomorphism is injective on stabilizers: `phi(h, u) = phi(gamma h, alpha u)`.
pub fn pullback_half_braiding(f: &EquivariantMap, d: &HalfBraidedModule) -> Result<HalfBraidedModule> {
    let module = pullback(f, d.module())?;
    let src = f.source();
    let entries: Vec<(usize, usize, Matrix)> = (0..src.size())
        .flat_map(|u| src.stabilizer(u).into_iter().map(move |h| (h, u)))
        .map(|(h, u)| (h, u, d.phi(f.gamma().apply(h), f.alpha(u)).clone()))
        .collect();
    Ok(HalfBraidedModule::from_entries(module, &entries))
}
