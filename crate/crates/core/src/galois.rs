//! Prime-field arithmetic and dense linear algebra over it.
//!
//! Elements are single-word residues; every operation reduces modulo `p`, so
//! all results are exact. Moduli are capped at `2^31 - 1` which keeps every
//! product inside a `u64`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand_core::RngCore;

use crate::error::{Error, Result};

/// Largest supported modulus.
pub const MAX_MODULUS: u64 = (1 << 31) - 1;

/// A residue in `[0, p)`. Arithmetic goes through the owning [`Field`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(u64);

impl Elem {
    pub const ZERO: Elem = Elem(0);
    pub const ONE: Elem = Elem(1);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The prime field `F_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    p: u64,
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p.is_multiple_of(2) {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime `>= from`.
pub fn next_prime(from: u64) -> u64 {
    let mut p = from.max(2);
    while !is_prime(p) {
        p += 1;
    }
    p
}

impl Field {
    /// Builds `F_p`, rejecting composite or out-of-range moduli.
    pub fn new(p: u64) -> Result<Self> {
        if !(2..=MAX_MODULUS).contains(&p) {
            return Err(Error::ModulusOutOfRange(p));
        }
        if !is_prime(p) {
            return Err(Error::CompositeModulus(p));
        }
        Ok(Field { p })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.p
    }

    #[inline]
    pub fn elem(&self, v: u64) -> Elem {
        Elem(v % self.p)
    }

    /// Maps a signed integer to its residue.
    pub fn from_i64(&self, v: i64) -> Elem {
        Elem(v.rem_euclid(self.p as i64) as u64)
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        let s = a.0 + b.0;
        Elem(if s >= self.p { s - self.p } else { s })
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        Elem(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        if a.0 == 0 {
            a
        } else {
            Elem(self.p - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(a.0 * b.0 % self.p)
    }

    pub fn pow(&self, a: Elem, mut e: u64) -> Elem {
        let mut base = a;
        let mut acc = Elem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat's little theorem.
    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(self.pow(a, self.p - 2))
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `sum_i a[i] * b[i]`.
    pub fn dot(&self, a: &[Elem], b: &[Elem]) -> Elem {
        debug_assert_eq!(a.len(), b.len());
        let mut acc: u64 = 0;
        for (x, y) in a.iter().zip(b) {
            acc = (acc + x.0 * y.0) % self.p;
        }
        Elem(acc)
    }

    /// Uniform element, by rejection sampling on 64-bit words.
    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> Elem {
        let zone = u64::MAX - (u64::MAX % self.p + 1) % self.p;
        loop {
            let v = rng.next_u64();
            if v <= zone {
                return Elem(v % self.p);
            }
        }
    }
}

/// Dense row-major matrix over a prime field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<Elem>,
}

impl Mat {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Self {
        Mat {
            field,
            rows,
            cols,
            data: vec![Elem::ZERO; rows * cols],
        }
    }

    pub fn identity(field: Field, n: usize) -> Self {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Elem::ONE);
        }
        m
    }

    pub fn from_vec(field: Field, rows: usize, cols: usize, data: Vec<Elem>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Mat {
            field,
            rows,
            cols,
            data,
        })
    }

    /// Convenience constructor from raw integers (reduced mod p).
    pub fn from_u64(field: Field, rows: &[&[u64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&v| field.elem(v)));
        }
        Mat::from_vec(field, rows.len(), cols, data)
    }

    #[inline]
    pub fn field(&self) -> Field {
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
    pub fn get(&self, r: usize, c: usize) -> Elem {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Elem) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Elem] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Elem> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[Elem] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|e| e.is_zero())
    }

    /// Sub-matrix made of the listed rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Mat {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        Mat {
            field: self.field,
            rows: rows.len(),
            cols: self.cols,
            data,
        }
    }

    /// Sub-matrix made of the listed columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> Mat {
        let mut m = Mat::zeros(self.field, self.rows, cols.len());
        for r in 0..self.rows {
            for (c2, &c) in cols.iter().enumerate() {
                m.set(r, c2, self.get(r, c));
            }
        }
        m
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn mul(&self, other: &Mat) -> Result<Mat> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        let f = self.field;
        let mut out = Mat::zeros(f, self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let v = f.add(out.get(r, c), f.mul(a, other.get(k, c)));
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Elem]) -> Result<Vec<Elem>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.field.dot(self.row(r), v))
            .collect())
    }

    pub fn add(&self, other: &Mat) -> Result<Mat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(Mat { data, ..*self })
    }

    /// Row rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce(self.cols)
    }

    /// Reduces in place to row echelon form on the first `pivot_cols`
    /// columns, returning the number of pivots.
    fn row_reduce(&mut self, pivot_cols: usize) -> usize {
        let f = self.field;
        let mut rank = 0;
        for c in 0..pivot_cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = (rank..self.rows).find(|&r| !self.get(r, c).is_zero()) else {
                continue;
            };
            self.swap_rows(p, rank);
            // pivot is nonzero by construction
            let inv = f.inv(self.get(rank, c)).unwrap_or(Elem::ZERO);
            for cc in 0..self.cols {
                let v = f.mul(self.get(rank, cc), inv);
                self.set(rank, cc, v);
            }
            for r in 0..self.rows {
                if r == rank {
                    continue;
                }
                let factor = self.get(r, c);
                if factor.is_zero() {
                    continue;
                }
                for cc in 0..self.cols {
                    let v = f.sub(self.get(r, cc), f.mul(factor, self.get(rank, cc)));
                    self.set(r, cc, v);
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Solves `self * x = b` for square, nonsingular `self`.
    pub fn solve(&self, b: &[Elem]) -> Result<Vec<Elem>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        if b.len() != self.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: b.len(),
            });
        }
        let n = self.rows;
        let mut aug = Mat::zeros(self.field, n, n + 1);
        for (r, &br) in b.iter().enumerate() {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n, br);
        }
        if aug.row_reduce(n) < n {
            return Err(Error::SingularMatrix);
        }
        Ok((0..n).map(|r| aug.get(r, n)).collect())
    }

    /// Inverse of a square nonsingular matrix.
    pub fn inverse(&self) -> Result<Mat> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: self.cols,
            });
        }
        let n = self.rows;
        let mut aug = Mat::zeros(self.field, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, Elem::ONE);
        }
        if aug.row_reduce(n) < n {
            return Err(Error::SingularMatrix);
        }
        let mut inv = Mat::zeros(self.field, n, n);
        for r in 0..n {
            for c in 0..n {
                inv.set(r, c, aug.get(r, n + c));
            }
        }
        Ok(inv)
    }
}

/// `n x width` Vandermonde matrix with entry `(i, j) = points[i]^j`,
/// exponents `0..width`.
pub fn vandermonde(field: Field, points: &[Elem], width: usize) -> Result<Mat> {
    for (i, a) in points.iter().enumerate() {
        if points[..i].contains(a) {
            return Err(Error::DuplicatePoints);
        }
    }
    let mut m = Mat::zeros(field, points.len(), width);
    for (i, &x) in points.iter().enumerate() {
        let mut p = Elem::ONE;
        for j in 0..width {
            m.set(i, j, p);
            p = field.mul(p, x);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f7() -> Field {
        Field::new(7).unwrap()
    }

    fn pts(f: Field, v: &[u64]) -> Vec<Elem> {
        v.iter().map(|&x| f.elem(x)).collect()
    }

    #[test]
    fn field_construction() {
        assert_eq!(Field::new(7).unwrap().modulus(), 7);
        assert_eq!(Field::new(13).unwrap().modulus(), 13);
        assert_eq!(Field::new(6), Err(Error::CompositeModulus(6)));
        assert_eq!(Field::new(1), Err(Error::ModulusOutOfRange(1)));
        assert!(Field::new(MAX_MODULUS).is_ok());
    }

    #[test]
    fn inverse_examples() {
        let f = f7();
        assert_eq!(f.inv(f.elem(1)).unwrap(), f.elem(1));
        // exhaustive oracle: the unique x with 3x = 1 mod 7
        let oracle = (1..7).find(|&x| (3 * x) % 7 == 1).unwrap();
        assert_eq!(oracle, 5);
        assert_eq!(f.inv(f.elem(3)).unwrap(), f.elem(oracle));
        assert_eq!(f.inv(Elem::ZERO), Err(Error::DivisionByZero));
    }

    #[test]
    fn inverse_is_involution() {
        for p in [2u64, 3, 5, 7, 13, 31, 101] {
            let f = Field::new(p).unwrap();
            for a in 1..p {
                let a = f.elem(a);
                let ia = f.inv(a).unwrap();
                assert_eq!(f.mul(a, ia), Elem::ONE);
                assert_eq!(f.inv(ia).unwrap(), a);
            }
        }
    }

    #[test]
    fn vandermonde_rows_match_worked_examples() {
        let f = f7();
        let v = vandermonde(f, &pts(f, &[1, 2, 3, 4, 5, 6]), 4).unwrap();
        assert_eq!(v.row(2), pts(f, &[1, 3, 2, 6]).as_slice());
        let f13 = Field::new(13).unwrap();
        let v = vandermonde(f13, &pts(f13, &[1, 2, 3, 4, 5, 6]), 4).unwrap();
        assert_eq!(v.row(4), pts(f13, &[1, 5, 12, 8]).as_slice());
        let ones = vandermonde(f13, &pts(f13, &[3, 9, 4]), 1).unwrap();
        assert!(ones.as_slice().iter().all(|&e| e == Elem::ONE));
        assert_eq!(
            vandermonde(f, &pts(f, &[1, 2, 1]), 2),
            Err(Error::DuplicatePoints)
        );
    }

    #[test]
    fn solve_examples() {
        let f = f7();
        let id = Mat::identity(f, 3);
        let b = pts(f, &[4, 0, 6]);
        assert_eq!(id.solve(&b).unwrap(), b);

        let a = Mat::from_u64(f, &[&[1, 1], &[1, 2]]).unwrap();
        let x = a.solve(&pts(f, &[3, 5])).unwrap();
        assert_eq!(x, pts(f, &[1, 2]));
        assert_eq!(a.mul_vec(&x).unwrap(), pts(f, &[3, 5]));

        let sing = Mat::from_u64(f, &[&[1, 2], &[2, 4]]).unwrap();
        assert_eq!(sing.solve(&pts(f, &[1, 1])), Err(Error::SingularMatrix));
    }

    #[test]
    fn rank_examples() {
        let f = f7();
        assert_eq!(Mat::zeros(f, 3, 4).rank(), 0);
        let v = vandermonde(f, &pts(f, &[1, 2, 3, 4, 5]), 5).unwrap();
        assert_eq!(v.rank(), 5);
        let eq = Mat::from_u64(f, &[&[3, 4], &[3, 4]]).unwrap();
        assert_eq!(eq.rank(), 1);
    }

    #[test]
    fn inverse_roundtrip() {
        let f = Field::new(13).unwrap();
        let v = vandermonde(f, &pts(f, &[1, 2, 3, 4]), 4).unwrap();
        let inv = v.inverse().unwrap();
        assert_eq!(v.mul(&inv).unwrap(), Mat::identity(f, 4));
    }

    #[test]
    fn random_sampling_stays_in_range() {
        use rand_chacha::rand_core::SeedableRng;
        let f = Field::new(5).unwrap();
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[f.random(&mut rng).value() as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }
}
