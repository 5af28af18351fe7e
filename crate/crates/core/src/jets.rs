//! Truncated Taylor series ("jets") in one and two complex variables.
//!
//! A [`Series1`] of order `K` stores `c₀..c_K` with `c_m = f⁽ᵐ⁾(base)/m!`.
//! A [`Series2`] of orders `(K₁, K₂)` stores the mixed coefficients
//! `c_{m,n} = ∂₁ᵐ∂₂ⁿ f(base)/(m! n!)` in row-major order. Binary operations
//! truncate to the smaller order of the two operands.
//!
//! These are what the homogeneous-limit code uses to get exact high-order
//! mixed partials of products of `sh(·)` factors.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Constant-term guard for series division.
pub const DEFAULT_DIV_TOL: f64 = 1e-14;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Analytic functions with a jet implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analytic {
    Sinh,
    Cosh,
    Exp,
}

/// Binary series operations, for callers that dispatch on an operator tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

// ---------------------------------------------------------------------------
// one variable
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Series1 {
    base: C64,
    coeffs: Vec<C64>,
}

impl Series1 {
    pub fn from_coeffs(base: C64, coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        Self { base, coeffs }
    }

    pub fn constant(value: C64, base: C64, order: usize) -> Self {
        let mut coeffs = vec![ZERO; order + 1];
        coeffs[0] = value;
        Self { base, coeffs }
    }

    /// The identity jet `t ↦ base + t`.
    pub fn variable(base: C64, order: usize) -> Self {
        let mut s = Self::constant(base, base, order);
        if order >= 1 {
            s.coeffs[1] = ONE;
        }
        s
    }

    pub fn base(&self) -> C64 {
        self.base
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, m: usize) -> C64 {
        self.coeffs[m]
    }

    /// `f⁽ᵐ⁾(base)`.
    pub fn derivative_at_base(&self, m: usize) -> Result<C64> {
        if m > self.order() {
            return Err(Error::OrderExceeded { m, n: 0, k1: self.order(), k2: 0 });
        }
        Ok(self.coeffs[m] * factorial(m))
    }

    /// Coefficients of `d/dt`; the order drops by one (order 0 stays a zero constant).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(ZERO, self.base, 0);
        }
        let coeffs = (1..=self.order()).map(|m| self.coeffs[m] * m as f64).collect();
        Self { base: self.base, coeffs }
    }

    /// Evaluates the truncated polynomial at offset `t` from the base.
    pub fn eval(&self, t: C64) -> C64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * t + c)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let k = order.min(self.order());
        Self { base: self.base, coeffs: self.coeffs[..=k].to_vec() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { base: self.base, coeffs: self.coeffs.iter().map(|&x| x * c).collect() }
    }

    pub fn add_scalar(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn arith(&self, op: ArithOp, other: &Self) -> Result<Self> {
        Ok(match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
            ArithOp::Div => self.try_div(other)?,
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.div_with_tol(other, DEFAULT_DIV_TOL)
    }

    /// Long division; fails when `|other.c₀| <= tol`.
    pub fn div_with_tol(&self, other: &Self, tol: f64) -> Result<Self> {
        let b0 = other.coeffs[0];
        if b0.norm() <= tol {
            return Err(Error::DivisionBySingularSeries { magnitude: b0.norm() });
        }
        let k = self.order().min(other.order());
        let mut q = vec![ZERO; k + 1];
        for m in 0..=k {
            let mut acc = self.coeffs[m];
            for i in 1..=m {
                acc -= other.coeffs[i] * q[m - i];
            }
            q[m] = acc / b0;
        }
        Ok(Self { base: self.base, coeffs: q })
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut out = Self::constant(ONE, self.base, self.order());
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// `(sinh∘s, cosh∘s)` by the coupled recurrences `S' = C·u'`, `C' = S·u'`.
    pub fn sinh_cosh(&self) -> (Self, Self) {
        let k = self.order();
        let u = &self.coeffs;
        let mut s = vec![ZERO; k + 1];
        let mut c = vec![ZERO; k + 1];
        s[0] = u[0].sinh();
        c[0] = u[0].cosh();
        for m in 1..=k {
            let mut ds = ZERO;
            let mut dc = ZERO;
            for j in 1..=m {
                let w = u[j] * j as f64;
                ds += w * c[m - j];
                dc += w * s[m - j];
            }
            s[m] = ds / m as f64;
            c[m] = dc / m as f64;
        }
        (Self { base: self.base, coeffs: s }, Self { base: self.base, coeffs: c })
    }

    pub fn sinh(&self) -> Self {
        self.sinh_cosh().0
    }

    pub fn cosh(&self) -> Self {
        self.sinh_cosh().1
    }

    pub fn exp(&self) -> Self {
        let k = self.order();
        let u = &self.coeffs;
        let mut e = vec![ZERO; k + 1];
        e[0] = u[0].exp();
        for m in 1..=k {
            let mut acc = ZERO;
            for j in 1..=m {
                acc += u[j] * j as f64 * e[m - j];
            }
            e[m] = acc / m as f64;
        }
        Self { base: self.base, coeffs: e }
    }

    pub fn analytic(&self, f: Analytic) -> Self {
        match f {
            Analytic::Sinh => self.sinh(),
            Analytic::Cosh => self.cosh(),
            Analytic::Exp => self.exp(),
        }
    }
}

impl Add for &Series1 {
    type Output = Series1;
    fn add(self, rhs: &Series1) -> Series1 {
        let k = self.order().min(rhs.order());
        let coeffs = (0..=k).map(|m| self.coeffs[m] + rhs.coeffs[m]).collect();
        Series1 { base: self.base, coeffs }
    }
}

impl Sub for &Series1 {
    type Output = Series1;
    fn sub(self, rhs: &Series1) -> Series1 {
        let k = self.order().min(rhs.order());
        let coeffs = (0..=k).map(|m| self.coeffs[m] - rhs.coeffs[m]).collect();
        Series1 { base: self.base, coeffs }
    }
}

impl Mul for &Series1 {
    type Output = Series1;
    fn mul(self, rhs: &Series1) -> Series1 {
        let k = self.order().min(rhs.order());
        let mut coeffs = vec![ZERO; k + 1];
        for (m, out) in coeffs.iter_mut().enumerate() {
            for i in 0..=m {
                *out += self.coeffs[i] * rhs.coeffs[m - i];
            }
        }
        Series1 { base: self.base, coeffs }
    }
}

impl Neg for &Series1 {
    type Output = Series1;
    fn neg(self) -> Series1 {
        self.scale(-ONE)
    }
}

// ---------------------------------------------------------------------------
// two variables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Series2 {
    base: (C64, C64),
    k1: usize,
    k2: usize,
    coeffs: Vec<C64>,
}

impl Series2 {
    pub fn from_fn(
        base: (C64, C64),
        orders: (usize, usize),
        mut f: impl FnMut(usize, usize) -> C64,
    ) -> Self {
        let (k1, k2) = orders;
        let mut coeffs = Vec::with_capacity((k1 + 1) * (k2 + 1));
        for m in 0..=k1 {
            for n in 0..=k2 {
                coeffs.push(f(m, n));
            }
        }
        Self { base, k1, k2, coeffs }
    }

    pub fn constant(value: C64, base: (C64, C64), orders: (usize, usize)) -> Self {
        Self::from_fn(base, orders, |m, n| if m == 0 && n == 0 { value } else { ZERO })
    }

    /// The identity jet of variable `axis` (0 or 1): `base[axis] + t_axis`.
    pub fn variable(axis: usize, base: (C64, C64), orders: (usize, usize)) -> Self {
        assert!(axis < 2, "Series2 has two variables");
        let b = if axis == 0 { base.0 } else { base.1 };
        Self::from_fn(base, orders, |m, n| match (m, n) {
            (0, 0) => b,
            (1, 0) if axis == 0 => ONE,
            (0, 1) if axis == 1 => ONE,
            _ => ZERO,
        })
    }

    /// Lifts a one-variable series into axis 0 or 1.
    pub fn lift(s: &Series1, axis: usize, base: (C64, C64), orders: (usize, usize)) -> Self {
        Self::from_fn(base, orders, |m, n| match axis {
            0 if n == 0 && m <= s.order() => s.coeff(m),
            1 if m == 0 && n <= s.order() => s.coeff(n),
            _ => ZERO,
        })
    }

    pub fn base(&self) -> (C64, C64) {
        self.base
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.k1, self.k2)
    }

    #[inline]
    fn idx(&self, m: usize, n: usize) -> usize {
        m * (self.k2 + 1) + n
    }

    pub fn coeff(&self, m: usize, n: usize) -> C64 {
        self.coeffs[self.idx(m, n)]
    }

    /// `∂₁ᵐ∂₂ⁿ f` at the base point, i.e. `m!·n!·c_{m,n}`.
    pub fn partial_coefficient(&self, m: usize, n: usize) -> Result<C64> {
        if m > self.k1 || n > self.k2 {
            return Err(Error::OrderExceeded { m, n, k1: self.k1, k2: self.k2 });
        }
        Ok(self.coeff(m, n) * factorial(m) * factorial(n))
    }

    /// The `n = 0` column as a series in the first variable.
    pub fn restrict_first(&self) -> Series1 {
        Series1::from_coeffs(self.base.0, (0..=self.k1).map(|m| self.coeff(m, 0)).collect())
    }

    /// The `m = 0` row as a series in the second variable.
    pub fn restrict_second(&self) -> Series1 {
        Series1::from_coeffs(self.base.1, (0..=self.k2).map(|n| self.coeff(0, n)).collect())
    }

    pub fn eval(&self, t1: C64, t2: C64) -> C64 {
        let mut acc = ZERO;
        for m in (0..=self.k1).rev() {
            let mut row = ZERO;
            for n in (0..=self.k2).rev() {
                row = row * t2 + self.coeff(m, n);
            }
            acc = acc * t1 + row;
        }
        acc
    }

    fn common(&self, other: &Self) -> (usize, usize) {
        (self.k1.min(other.k1), self.k2.min(other.k2))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|&x| x * c).collect(), ..self.clone() }
    }

    pub fn add_scalar(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    pub fn arith(&self, op: ArithOp, other: &Self) -> Result<Self> {
        Ok(match op {
            ArithOp::Add => self + other,
            ArithOp::Sub => self - other,
            ArithOp::Mul => self * other,
            ArithOp::Div => self.try_div(other)?,
        })
    }

    pub fn try_div(&self, other: &Self) -> Result<Self> {
        self.div_with_tol(other, DEFAULT_DIV_TOL)
    }

    pub fn div_with_tol(&self, other: &Self, tol: f64) -> Result<Self> {
        let b0 = other.coeff(0, 0);
        if b0.norm() <= tol {
            return Err(Error::DivisionBySingularSeries { magnitude: b0.norm() });
        }
        let (k1, k2) = self.common(other);
        let mut q = Self::constant(ZERO, self.base, (k1, k2));
        for m in 0..=k1 {
            for n in 0..=k2 {
                let mut acc = self.coeff(m, n);
                for i in 0..=m {
                    for j in 0..=n {
                        if i == 0 && j == 0 {
                            continue;
                        }
                        acc -= other.coeff(i, j) * q.coeff(m - i, n - j);
                    }
                }
                let at = q.idx(m, n);
                q.coeffs[at] = acc / b0;
            }
        }
        Ok(q)
    }

    pub fn powi(&self, e: u32) -> Self {
        let mut out = Self::constant(ONE, self.base, (self.k1, self.k2));
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Coupled sinh/cosh recurrence: the `m = 0` row is a one-variable
    /// problem in `t₂`; rows `m ≥ 1` follow from differentiating in `t₁`.
    pub fn sinh_cosh(&self) -> (Self, Self) {
        let (s_row, c_row) = self.restrict_second().sinh_cosh();
        let mut s = Self::constant(ZERO, self.base, (self.k1, self.k2));
        let mut c = s.clone();
        for n in 0..=self.k2 {
            s.coeffs[n] = s_row.coeff(n);
            c.coeffs[n] = c_row.coeff(n);
        }
        for m in 1..=self.k1 {
            for n in 0..=self.k2 {
                let mut ds = ZERO;
                let mut dc = ZERO;
                for i in 1..=m {
                    for j in 0..=n {
                        let w = self.coeff(i, j) * i as f64;
                        ds += w * c.coeff(m - i, n - j);
                        dc += w * s.coeff(m - i, n - j);
                    }
                }
                let at = s.idx(m, n);
                s.coeffs[at] = ds / m as f64;
                c.coeffs[at] = dc / m as f64;
            }
        }
        (s, c)
    }

    pub fn sinh(&self) -> Self {
        self.sinh_cosh().0
    }

    pub fn cosh(&self) -> Self {
        self.sinh_cosh().1
    }

    pub fn exp(&self) -> Self {
        let row = self.restrict_second().exp();
        let mut e = Self::constant(ZERO, self.base, (self.k1, self.k2));
        for n in 0..=self.k2 {
            e.coeffs[n] = row.coeff(n);
        }
        for m in 1..=self.k1 {
            for n in 0..=self.k2 {
                let mut acc = ZERO;
                for i in 1..=m {
                    for j in 0..=n {
                        acc += self.coeff(i, j) * i as f64 * e.coeff(m - i, n - j);
                    }
                }
                let at = e.idx(m, n);
                e.coeffs[at] = acc / m as f64;
            }
        }
        e
    }

    pub fn analytic(&self, f: Analytic) -> Self {
        match f {
            Analytic::Sinh => self.sinh(),
            Analytic::Cosh => self.cosh(),
            Analytic::Exp => self.exp(),
        }
    }
}

impl Add for &Series2 {
    type Output = Series2;
    fn add(self, rhs: &Series2) -> Series2 {
        let orders = self.common(rhs);
        Series2::from_fn(self.base, orders, |m, n| self.coeff(m, n) + rhs.coeff(m, n))
    }
}

impl Sub for &Series2 {
    type Output = Series2;
    fn sub(self, rhs: &Series2) -> Series2 {
        let orders = self.common(rhs);
        Series2::from_fn(self.base, orders, |m, n| self.coeff(m, n) - rhs.coeff(m, n))
    }
}

impl Mul for &Series2 {
    type Output = Series2;
    fn mul(self, rhs: &Series2) -> Series2 {
        let orders = self.common(rhs);
        Series2::from_fn(self.base, orders, |m, n| {
            let mut acc = ZERO;
            for i in 0..=m {
                for j in 0..=n {
                    acc += self.coeff(i, j) * rhs.coeff(m - i, n - j);
                }
            }
            acc
        })
    }
}

impl Neg for &Series2 {
    type Output = Series2;
    fn neg(self) -> Series2 {
        self.scale(-ONE)
    }
}

/// `n!` as a float (exact for `n ≤ 20`).
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}
