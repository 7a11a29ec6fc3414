//! Dense linear algebra over prime fields `F_p`.
//!
//! Residues are stored as `u32` in `[0, p)`; products go through a `u64`
//! intermediate, so any prime below `2^32` is supported.

use std::fmt;

use crate::error::{Error, Result};

/// The prime field `F_p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PrimeField {
    p: u32,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p > u32::MAX as u64 || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.p
    }

    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        ((a as u64 + b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        ((a as u64 + self.p as u64 - b as u64) % self.p as u64) as u32
    }

    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = 1 % self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p as u64 - 2)
    }

    pub fn from_i64(self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    /// Symmetric lift to `(-p/2, p/2]`, handy for printing signs.
    pub fn to_signed(self, a: u32) -> i64 {
        if a as u64 * 2 > self.p as u64 {
            a as i64 - self.p as i64
        } else {
            a as i64
        }
    }
}

impl fmt::Display for PrimeField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.p)
    }
}

/// Row-major dense matrix over a prime field.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix[{}x{} over {}]", self.rows, self.cols, self.field)?;
        for r in 0..self.rows {
            write!(f, "\n  {:?}", self.row(r))?;
        }
        Ok(())
    }
}

/// Result of a reduced row-echelon computation.
#[derive(Debug, Clone)]
pub struct Rref {
    pub matrix: Matrix,
    pub pivots: Vec<usize>,
    pub rank: usize,
}

/// All solutions of `A x = b`: `particular + span(kernel)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<u32>,
    pub kernel: Vec<Vec<u32>>,
}

/// An echelon basis of a column space.
///
/// `basis` has one column per basis vector; the rows listed in `pivots`
/// form an identity block, so selecting them is a left inverse.
#[derive(Debug, Clone)]
pub struct ColumnBasis {
    pub basis: Matrix,
    pub pivots: Vec<usize>,
}

impl ColumnBasis {
    /// Coordinates of a vector (or columns of a matrix) known to lie in the span.
    pub fn coordinates(&self, m: &Matrix) -> Matrix {
        m.select_rows(&self.pivots)
    }
}

impl Matrix {
    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        Matrix { field, rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1 % field.p;
        }
        m
    }

    pub fn scalar(field: PrimeField, n: usize, c: u32) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = c % field.p;
        }
        m
    }

    /// Builds a matrix from residues, validating every entry.
    pub fn from_vec(field: PrimeField, rows: usize, cols: usize, data: Vec<u32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Mismatch(format!("{} entries for a {}x{} matrix", data.len(), rows, cols)));
        }
        if let Some(bad) = data.iter().find(|&&v| v >= field.p) {
            return Err(Error::Mismatch(format!("entry {} not reduced mod {}", bad, field.p)));
        }
        Ok(Matrix { field, rows, cols, data })
    }

    /// Builds a matrix from signed integer rows, reducing mod p.
    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Mismatch("ragged matrix rows".into()));
        }
        let data = rows.iter().flatten().map(|&v| field.from_i64(v)).collect();
        Ok(Matrix { field, rows: rows.len(), cols, data })
    }

    pub fn column(field: PrimeField, v: &[u32]) -> Self {
        Matrix { field, rows: v.len(), cols: 1, data: v.iter().map(|&x| x % field.p).collect() }
    }

    pub fn permutation(field: PrimeField, images: &[usize]) -> Self {
        // column j has a one in row images[j]
        let n = images.len();
        let mut m = Self::zero(field, n, n);
        for (j, &i) in images.iter().enumerate() {
            m.data[i * n + j] = 1 % field.p;
        }
        m
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }
    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }
    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v % self.field.p;
    }
    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
    pub fn entries(&self) -> &[u32] {
        &self.data
    }
    pub fn column_vec(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }
    pub fn to_signed_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|r| self.row(r).iter().map(|&v| self.field.to_signed(v)).collect()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows)
                .all(|r| (0..self.cols).all(|c| self.get(r, c) == if r == c { 1 % self.field.p } else { 0 }))
    }

    /// `Some(c)` when the matrix is `c` times the identity.
    pub fn as_scalar(&self) -> Option<u32> {
        if !self.is_square() {
            return None;
        }
        if self.rows == 0 {
            return Some(1);
        }
        let c = self.get(0, 0);
        (*self == Matrix::scalar(self.field, self.rows, c)).then_some(c)
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zero(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.get(r, c);
            }
        }
        t
    }

    fn check_same_shape(&self, other: &Matrix) {
        assert_eq!(self.field, other.field, "field mismatch");
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        self.check_same_shape(other);
        let f = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.add(a, b)).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        self.check_same_shape(other);
        let f = self.field;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f.sub(a, b)).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, c: u32) -> Matrix {
        let f = self.field;
        let data = self.data.iter().map(|&a| f.mul(a, c)).collect();
        Matrix { field: self.field, rows: self.rows, cols: self.cols, data }
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.field, other.field, "field mismatch");
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let p = self.field.p as u64;
        let mut out = Matrix::zero(self.field, self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k] as u64;
                if a == 0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (slot, &b) in acc.iter_mut().zip(orow) {
                    *slot = (*slot + a * b as u64) % p;
                }
            }
            for (c, &v) in acc.iter().enumerate() {
                out.data[r * other.cols + c] = v as u32;
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(self.cols, v.len());
        let p = self.field.p as u64;
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % p) as u32)
            .collect()
    }

    /// Kronecker product, left factor major.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.field, other.field, "field mismatch");
        let f = self.field;
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut out = Matrix::zero(f, rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == 0 {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * cols + j * other.cols + l] = f.mul(a, other.get(k, l));
                    }
                }
            }
        }
        out
    }

    /// Block-diagonal sum of square or rectangular blocks.
    pub fn direct_sum(field: PrimeField, blocks: &[Matrix]) -> Matrix {
        let rows = blocks.iter().map(|b| b.rows).sum();
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut out = Matrix::zero(field, rows, cols);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            out.set_block(r0, c0, b);
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &Matrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for r in 0..block.rows {
            let dst = (r0 + r) * self.cols + c0;
            self.data[dst..dst + block.cols].copy_from_slice(block.row(r));
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
        let mut out = Matrix::zero(self.field, rows, cols);
        for r in 0..rows {
            let src = (r0 + r) * self.cols + c0;
            out.data[r * cols..(r + 1) * cols].copy_from_slice(&self.data[src..src + cols]);
        }
        out
    }

    pub fn hstack(field: PrimeField, rows: usize, parts: &[Matrix]) -> Matrix {
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Matrix::zero(field, rows, cols);
        let mut c0 = 0;
        for m in parts {
            assert_eq!(m.rows, rows);
            out.set_block(0, c0, m);
            c0 += m.cols;
        }
        out
    }

    pub fn vstack(field: PrimeField, cols: usize, parts: &[Matrix]) -> Matrix {
        let rows = parts.iter().map(|m| m.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for m in parts {
            assert_eq!(m.cols, cols);
            data.extend_from_slice(&m.data);
        }
        Matrix { field, rows, cols, data }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Matrix { field: self.field, rows: rows.len(), cols: self.cols, data }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zero(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.data[r * cols.len() + j] = self.get(r, c);
            }
        }
        out
    }

    /// Reduced row-echelon form.
    pub fn rref(&self) -> Rref {
        let f = self.field;
        let p = f.p as u64;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            if pr != row {
                for c in 0..m.cols {
                    m.data.swap(pr * m.cols + c, row * m.cols + c);
                }
            }
            let inv = f.inv(m.get(row, col));
            for c in col..m.cols {
                let v = m.get(row, c);
                m.data[row * m.cols + c] = f.mul(v, inv);
            }
            let (cols, data) = (m.cols, &mut m.data);
            let pivot_row: Vec<u32> = data[row * cols + col..(row + 1) * cols].to_vec();
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let factor = data[r * cols + col] as u64;
                if factor == 0 {
                    continue;
                }
                let neg = p - factor;
                let target = &mut data[r * cols + col..(r + 1) * cols];
                for (t, &pv) in target.iter_mut().zip(&pivot_row) {
                    *t = ((*t as u64 + neg * pv as u64) % p) as u32;
                }
            }
            pivots.push(col);
            row += 1;
        }
        let rank = pivots.len();
        Rref { matrix: m, pivots, rank }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of the right kernel `{x : A x = 0}`.
    pub fn kernel(&self) -> Vec<Vec<u32>> {
        let Rref { matrix, pivots, .. } = self.rref();
        kernel_from_rref(&matrix, &pivots)
    }

    /// Kernel basis packed as the columns of a matrix.
    pub fn kernel_matrix(&self) -> Matrix {
        let k = self.kernel();
        let mut out = Matrix::zero(self.field, self.cols, k.len());
        for (j, v) in k.iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                out.data[i * k.len() + j] = x;
            }
        }
        out
    }

    /// Echelon basis of the column space.
    pub fn column_basis(&self) -> ColumnBasis {
        let Rref { matrix, rank, .. } = self.transpose().rref();
        let basis = matrix.block(0, 0, rank, matrix.cols).transpose();
        // rows of the reduced transpose have leading ones at their pivots
        let pivots = (0..rank).map(|i| (0..basis.rows).find(|&r| basis.get(r, i) != 0).expect("nonzero row")).collect();
        ColumnBasis { basis, pivots }
    }

    pub fn inverse(&self) -> Result<Matrix> {
        if !self.is_square() {
            return Err(Error::Singular);
        }
        let n = self.rows;
        if n == 0 {
            return Ok(self.clone());
        }
        let aug = Matrix::hstack(self.field, n, &[self.clone(), Matrix::identity(self.field, n)]);
        let Rref { matrix, pivots, .. } = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        Ok(matrix.block(0, n, n, n))
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    /// Basis (as columns) of `{v : A v = lambda v}`.
    pub fn eigenspace(&self, lambda: u32) -> Matrix {
        self.sub(&Matrix::scalar(self.field, self.rows, lambda)).kernel_matrix()
    }

    pub fn pow(&self, mut e: u64) -> Matrix {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Matrix::identity(self.field, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    pub fn trace(&self) -> u32 {
        assert!(self.is_square());
        (0..self.rows).fold(0, |acc, i| self.field.add(acc, self.get(i, i)))
    }
}

fn kernel_from_rref(m: &Matrix, pivots: &[usize]) -> Vec<Vec<u32>> {
    let f = m.field;
    let mut is_pivot = vec![false; m.cols];
    for &c in pivots {
        is_pivot[c] = true;
    }
    (0..m.cols)
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![0u32; m.cols];
            v[free] = 1 % f.p;
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(m.get(r, free));
            }
            v
        })
        .collect()
}

/// Solves `A x = b`, returning the full affine solution set.
pub fn solve_linear(a: &Matrix, b: &[u32]) -> Result<AffineSolution> {
    if a.rows() != b.len() {
        return Err(Error::Mismatch(format!("{} rows but rhs has length {}", a.rows(), b.len())));
    }
    let f = a.field();
    let n = a.cols();
    let aug = Matrix::hstack(f, a.rows(), &[a.clone(), Matrix::column(f, b)]);
    let Rref { matrix, pivots, .. } = aug.rref();
    if pivots.last() == Some(&n) {
        return Err(Error::Inconsistent);
    }
    let mut particular = vec![0u32; n];
    for (r, &pc) in pivots.iter().enumerate() {
        particular[pc] = matrix.get(r, n);
    }
    let coeffs = matrix.block(0, 0, matrix.rows(), n);
    Ok(AffineSolution { particular, kernel: kernel_from_rref(&coeffs, &pivots) })
}

/// Solves `A X = B` for a matrix right-hand side; `None` if inconsistent.
pub fn solve_matrix(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let f = a.field();
    let aug = Matrix::hstack(f, a.rows(), &[a.clone(), b.clone()]);
    let Rref { matrix, pivots, .. } = aug.rref();
    if pivots.iter().any(|&c| c >= a.cols()) {
        return None;
    }
    let mut x = Matrix::zero(f, a.cols(), b.cols());
    for (r, &pc) in pivots.iter().enumerate() {
        for c in 0..b.cols() {
            x.set(pc, c, matrix.get(r, a.cols() + c));
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn identity_is_reduced() {
        let id = Matrix::identity(f(3), 2);
        let r = id.rref();
        assert_eq!(r.matrix, id);
        assert_eq!(r.rank, 2);
        assert_eq!(r.pivots, vec![0, 1]);
    }

    #[test]
    fn dependent_rows_rank_one() {
        let m = Matrix::from_rows(f(5), &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(m.rref().rank, 1);
        assert_eq!(Matrix::zero(f(7), 3, 3).rref().rank, 0);
    }

    #[test]
    fn solve_identity_and_zero() {
        let fl = f(7);
        let sol = solve_linear(&Matrix::identity(fl, 3), &[4, 0, 6]).unwrap();
        assert_eq!(sol.particular, vec![4, 0, 6]);
        assert!(sol.kernel.is_empty());
        let sol = solve_linear(&Matrix::zero(fl, 1, 2), &[0]).unwrap();
        assert_eq!(sol.kernel.len(), 2);
        assert_eq!(solve_linear(&Matrix::zero(fl, 1, 2), &[1]), Err(Error::Inconsistent));
    }

    #[test]
    fn solve_against_enumeration() {
        // x + y = 1 over F_3: enumerate all nine vectors.
        let fl = f(3);
        let a = Matrix::from_rows(fl, &[vec![1, 1]]).unwrap();
        let brute: Vec<(u32, u32)> =
            (0..3).flat_map(|x| (0..3).map(move |y| (x, y))).filter(|&(x, y)| (x + y) % 3 == 1).collect();
        assert_eq!(brute.len(), 3);
        let sol = solve_linear(&a, &[1]).unwrap();
        assert_eq!(sol.kernel.len(), 1);
        let mut generated: Vec<(u32, u32)> = (0..3)
            .map(|t| {
                let v: Vec<u32> =
                    sol.particular.iter().zip(&sol.kernel[0]).map(|(&p, &k)| fl.add(p, fl.mul(t, k))).collect();
                (v[0], v[1])
            })
            .collect();
        generated.sort();
        assert_eq!(generated, brute);
    }

    #[test]
    fn inverse_roundtrip() {
        let fl = f(7);
        let m = Matrix::from_rows(fl, &[vec![2, 1], vec![5, 3]]).unwrap();
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        let sing = Matrix::from_rows(fl, &[vec![1, 2], vec![2, 4]]).unwrap();
        assert_eq!(sing.inverse(), Err(Error::Singular));
    }

    #[test]
    fn kron_shuffle() {
        let fl = f(5);
        let a = Matrix::from_rows(fl, &[vec![1, 2], vec![3, 4]]).unwrap();
        let b = Matrix::identity(fl, 2);
        let k = a.kron(&b);
        assert_eq!(k.get(0, 2), 2);
        assert_eq!(k.get(3, 1), 3);
        assert_eq!(k.get(3, 3), 4);
    }

    #[test]
    fn column_basis_left_inverse() {
        let fl = f(5);
        let m = Matrix::from_rows(fl, &[vec![1, 2, 3], vec![2, 4, 0], vec![0, 0, 0]]).unwrap();
        let cb = m.column_basis();
        assert_eq!(cb.basis.cols(), 2);
        assert!(cb.coordinates(&cb.basis).is_identity());
        // every column of m is recovered from its coordinates
        assert_eq!(cb.basis.mul(&cb.coordinates(&m)), m);
    }

    #[test]
    fn field_ops() {
        let fl = f(7);
        assert_eq!(fl.inv(3), 5);
        assert_eq!(fl.neg(0), 0);
        assert_eq!(fl.from_i64(-1), 6);
        assert_eq!(fl.to_signed(6), -1);
        assert!(PrimeField::new(9).is_err());
    }
}
