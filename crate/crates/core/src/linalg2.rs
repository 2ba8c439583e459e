//! Fixed-size complex 2-vector and 2×2 matrix arithmetic.
//!
//! Everything in this crate lives in a two-dimensional internal space, so the
//! handful of closed forms needed here (products, adjoint, outer product,
//! trace, determinant) are written out explicitly.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2Vector {
    pub up: Complex64,
    pub down: Complex64,
}

impl Complex2Vector {
    pub const fn new(up: Complex64, down: Complex64) -> Self {
        Self { up, down }
    }

    pub fn from_real(up: f64, down: f64) -> Self {
        Self::new(Complex64::new(up, 0.0), Complex64::new(down, 0.0))
    }

    pub fn zero() -> Self {
        Self::new(ZERO, ZERO)
    }

    /// Validating constructor.
    pub fn try_new(up: Complex64, down: Complex64) -> Result<Self> {
        let v = Self::new(up, down);
        v.ensure_finite()?;
        Ok(v)
    }

    pub fn is_finite(&self) -> bool {
        self.up.is_finite() && self.down.is_finite()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numerical(format!("non-finite 2-vector {self:?}")))
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.up.norm_sqr() + self.down.norm_sqr()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.up * s, self.down * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self::new(self.up * s, self.down * s)
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.up.conj() * other.up + self.down.conj() * other.down
    }

    pub fn as_array(&self) -> [Complex64; 2] {
        [self.up, self.down]
    }
}

impl Add for Complex2Vector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.up + rhs.up, self.down + rhs.down)
    }
}

impl Sub for Complex2Vector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.up - rhs.up, self.down - rhs.down)
    }
}

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex2Matrix {
    pub m: [[Complex64; 2]; 2],
}

impl Complex2Matrix {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn try_new(m: [[Complex64; 2]; 2]) -> Result<Self> {
        let a = Self::new(m);
        a.ensure_finite()?;
        Ok(a)
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        let c = |x: f64| Complex64::new(x, 0.0);
        Self::new([[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn zero() -> Self {
        Self::new([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::from_real([[a, 0.0], [0.0, b]])
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numerical(format!("non-finite 2x2 matrix {self:?}")))
        }
    }

    pub fn matmul(&self, b: &Self) -> Self {
        let a = &self.m;
        let b = &b.m;
        Self::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, v: &Complex2Vector) -> Complex2Vector {
        Complex2Vector::new(
            self.m[0][0] * v.up + self.m[0][1] * v.down,
            self.m[1][0] * v.up + self.m[1][1] * v.down,
        )
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let a = &self.m;
        Self::new([
            [a[0][0].conj(), a[1][0].conj()],
            [a[0][1].conj(), a[1][1].conj()],
        ])
    }

    /// `adjoint(self) · v` without materializing the adjoint.
    pub fn apply_adjoint(&self, v: &Complex2Vector) -> Complex2Vector {
        let a = &self.m;
        Complex2Vector::new(
            a[0][0].conj() * v.up + a[1][0].conj() * v.down,
            a[0][1].conj() * v.up + a[1][1].conj() * v.down,
        )
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_real(0.5)
    }

    /// Largest entrywise modulus of `M − M†`.
    pub fn hermiticity_defect(&self) -> f64 {
        (*self - self.adjoint()).max_abs()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn flat(&self) -> [Complex64; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }
}

impl Add for Complex2Matrix {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for (o, r) in out.m.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *o += r;
        }
        out
    }
}

impl Sub for Complex2Matrix {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for (o, r) in out.m.iter_mut().flatten().zip(rhs.m.iter().flatten()) {
            *o -= r;
        }
        out
    }
}

impl Mul for Complex2Matrix {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        self.matmul(&rhs)
    }
}

pub fn matmul(a: &Complex2Matrix, b: &Complex2Matrix) -> Complex2Matrix {
    a.matmul(b)
}

pub fn adjoint(a: &Complex2Matrix) -> Complex2Matrix {
    a.adjoint()
}

/// `v · w†`: column `v` times conjugated row `w`.
pub fn outer(v: &Complex2Vector, w: &Complex2Vector) -> Complex2Matrix {
    Complex2Matrix::new([
        [v.up * w.up.conj(), v.up * w.down.conj()],
        [v.down * w.up.conj(), v.down * w.down.conj()],
    ])
}

pub fn trace(a: &Complex2Matrix) -> Complex64 {
    a.trace()
}

pub fn det(a: &Complex2Matrix) -> Complex64 {
    a.det()
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both carries.
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated accumulator for the eight real components of a 2×2 complex matrix.
#[derive(Debug, Clone, Copy, Default)]
pub struct MatrixAccumulator {
    parts: [CompensatedSum; 8],
}

impl MatrixAccumulator {
    pub fn add(&mut self, a: &Complex2Matrix) {
        for (k, z) in a.flat().iter().enumerate() {
            self.parts[2 * k].add(z.re);
            self.parts[2 * k + 1].add(z.im);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (p, o) in self.parts.iter_mut().zip(other.parts.iter()) {
            p.merge(o);
        }
    }

    pub fn value(&self) -> Complex2Matrix {
        let z = |k: usize| Complex64::new(self.parts[2 * k].value(), self.parts[2 * k + 1].value());
        Complex2Matrix::new([[z(0), z(1)], [z(2), z(3)]])
    }
}
