//! Functions on a finite G-set, the quotients `A/⟨h(a) − a⟩`, and the
//! twisted product ring `B = ∏_h A/⟨h(a) − a⟩` compared with functions on the
//! inertia.
//!
//! Ideals are generated honestly: the ideal of `A` generated by
//! `{h·a − a}` is the span of all products `b (h·a − a)` over basis
//! functions `a, b`, and quotients are taken by rank computation.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gset::{inertia, GroupAction, InertiaAction};
use crate::linalg::{Matrix, PrimeField};

/// `A = F_p^X` with `(g·f)(x) = f(g⁻¹·x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionRing {
    action: Arc<GroupAction>,
    field: PrimeField,
}

impl FunctionRing {
    pub fn new(action: Arc<GroupAction>, field: PrimeField) -> Self {
        FunctionRing { action, field }
    }
    pub fn action(&self) -> &Arc<GroupAction> {
        &self.action
    }
    pub fn field(&self) -> PrimeField {
        self.field
    }
    pub fn dim(&self) -> usize {
        self.action.size()
    }

    pub fn delta(&self, x: usize) -> Vec<u32> {
        let mut v = vec![0; self.dim()];
        v[x] = 1 % self.field.modulus();
        v
    }
    pub fn one(&self) -> Vec<u32> {
        vec![1 % self.field.modulus(); self.dim()]
    }
    pub fn mul(&self, a: &[u32], b: &[u32]) -> Vec<u32> {
        a.iter().zip(b).map(|(&x, &y)| self.field.mul(x, y)).collect()
    }
    pub fn act(&self, g: usize, f: &[u32]) -> Vec<u32> {
        let ginv = self.action.group().inv(g);
        (0..self.dim()).map(|x| f[self.action.act(ginv, x)]).collect()
    }
    /// Matrix of `f ↦ g·f` in the delta basis.
    pub fn action_matrix(&self, g: usize) -> Matrix {
        let images: Vec<usize> = (0..self.dim()).map(|x| self.action.act(g, x)).collect();
        Matrix::permutation(self.field, &images)
    }
}

/// `A / I` with an explicit basis of delta functions and the projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quotient {
    pub h: usize,
    /// spanning set of the ideal, as the columns of a matrix
    pub ideal: Matrix,
    pub dim: usize,
    /// points whose delta functions form a basis of the quotient
    pub basis: Vec<usize>,
    /// `dim × |X|` matrix sending a function to its class in that basis
    pub projection: Matrix,
}

/// The quotient of `A` by the ideal generated by `{h·a − a}`.
pub fn twisted_quotient(a: &FunctionRing, h: usize) -> Result<Quotient> {
    let g = a.action().group();
    if h >= g.order() {
        return Err(Error::InvalidGroup(format!("{h} is not an element")));
    }
    let n = a.dim();
    let field = a.field();
    let mut generators = Vec::with_capacity(n * n);
    for x in 0..n {
        let da = a.delta(x);
        let diff: Vec<u32> = a.act(h, &da).iter().zip(&da).map(|(&u, &v)| field.sub(u, v)).collect();
        for y in 0..n {
            generators.push(a.mul(&a.delta(y), &diff));
        }
    }
    let ideal = Matrix::from_vec(field, generators.len(), n, generators.into_iter().flatten().collect())?.transpose();
    // complete the ideal's pivot columns by delta functions: a delta at x is a
    // basis element of the quotient iff it is independent of the ideal and the
    // previously chosen deltas
    let mut span = ideal.clone();
    let mut basis = Vec::new();
    let mut rank = span.rank();
    let ideal_rank = rank;
    for x in 0..n {
        let candidate = Matrix::hstack(field, n, &[span.clone(), Matrix::column(field, &a.delta(x))]);
        let r = candidate.rank();
        if r > rank {
            span = candidate;
            rank = r;
            basis.push(x);
        }
    }
    let dim = n - ideal_rank;
    debug_assert_eq!(dim, basis.len());
    // coordinates: solve [ideal | deltas of basis] c = f, keep the basis part
    let full = Matrix::hstack(
        field,
        n,
        &[
            ideal.clone(),
            Matrix::hstack(field, n, &basis.iter().map(|&x| Matrix::column(field, &a.delta(x))).collect::<Vec<_>>()),
        ],
    );
    let mut projection = Matrix::zero(field, dim, n);
    for x in 0..n {
        let sol = crate::linalg::solve_linear(&full, &a.delta(x))?;
        for (i, &v) in sol.particular[ideal.cols()..].iter().enumerate() {
            projection.set(i, x, v);
        }
    }
    Ok(Quotient { h, ideal, dim, basis, projection })
}

/// `B = ∏_h A/⟨h(a) − a⟩`, with `g` sending the `h`-component to the
/// `ghg⁻¹`-component by `x_h ↦ g·x_h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedProductRing {
    pub ring: FunctionRing,
    pub components: Vec<Quotient>,
    /// global basis: `(h, x)` for each component `h` and basis point `x`
    pub basis: Vec<(usize, usize)>,
}

impl TwistedProductRing {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn offset(&self, h: usize) -> usize {
        self.components[..h].iter().map(|q| q.dim).sum()
    }

    /// Matrix of the action of `g` on `B` in the global basis.
    pub fn action_matrix(&self, g: usize) -> Matrix {
        let grp = self.ring.action().group();
        let field = self.ring.field();
        let mut m = Matrix::zero(field, self.dim(), self.dim());
        for (col, &(h, x)) in self.basis.iter().enumerate() {
            let k = grp.conj(g, h);
            let moved = self.ring.act(g, &self.ring.delta(x));
            let coords = self.components[k].projection.mul_vec(&moved);
            let off = self.offset(k);
            for (i, &v) in coords.iter().enumerate() {
                m.set(off + i, col, v);
            }
        }
        m
    }

    /// Product of two basis vectors, as coordinates.
    pub fn mul_basis(&self, i: usize, j: usize) -> Vec<u32> {
        let (hi, xi) = self.basis[i];
        let (hj, xj) = self.basis[j];
        let mut out = vec![0; self.dim()];
        if hi == hj {
            let prod = self.ring.mul(&self.ring.delta(xi), &self.ring.delta(xj));
            let coords = self.components[hi].projection.mul_vec(&prod);
            let off = self.offset(hi);
            out[off..off + coords.len()].copy_from_slice(&coords);
        }
        out
    }

    pub fn one(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.dim());
        for q in &self.components {
            out.extend(q.projection.mul_vec(&self.ring.one()));
        }
        out
    }
}

/// `B` together with the isomorphism to functions on the inertia.
#[derive(Debug, Clone)]
pub struct RingB {
    pub ring: TwistedProductRing,
    pub inertia: InertiaAction,
    /// `|F| × dim B`, sending the basis vector `(h, x)` to `δ_(x,h)`
    pub iso: Matrix,
}

/// Assembles `B` and certifies the isomorphism to `F_p^F` entrywise: it is
/// bijective, unital, multiplicative on basis vectors, and G-equivariant.
pub fn ring_b(action: &Arc<GroupAction>, field: PrimeField) -> Result<RingB> {
    let a = FunctionRing::new(action.clone(), field);
    let g = action.group();
    let components: Vec<Quotient> = g.elements().map(|h| twisted_quotient(&a, h)).collect::<Result<_>>()?;
    let basis: Vec<(usize, usize)> = components.iter().flat_map(|q| q.basis.iter().map(move |&x| (q.h, x))).collect();
    let ring = TwistedProductRing { ring: a, components, basis };
    let inert = inertia(action);
    let target = FunctionRing::new(inert.action().clone(), field);
    let mut iso = Matrix::zero(field, target.dim(), ring.dim());
    for (col, &(h, x)) in ring.basis.iter().enumerate() {
        let pair = inert
            .pair_index(x, h)
            .ok_or_else(|| Error::Mismatch(format!("basis point {x} of component {h} is not fixed")))?;
        iso.set(pair, col, 1 % field.modulus());
    }
    if !iso.is_invertible() {
        return Err(Error::Mismatch("B and functions on the inertia have different dimensions".into()));
    }
    if iso.mul_vec(&ring.one()) != target.one() {
        return Err(Error::Mismatch("isomorphism is not unital".into()));
    }
    for i in 0..ring.dim() {
        for j in 0..ring.dim() {
            let lhs = iso.mul_vec(&ring.mul_basis(i, j));
            let rhs = target.mul(&iso.column_vec(i), &iso.column_vec(j));
            if lhs != rhs {
                return Err(Error::Mismatch(format!("isomorphism is not multiplicative on basis pair ({i}, {j})")));
            }
        }
    }
    for k in g.elements() {
        if iso.mul(&ring.action_matrix(k)) != target.action_matrix(k).mul(&iso) {
            return Err(Error::Mismatch(format!("isomorphism does not intertwine the action of {k}")));
        }
    }
    Ok(RingB { ring, inertia: inert, iso })
}
