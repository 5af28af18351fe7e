//! Local algebra: Boltzmann weights, the R- and L-matrices, the reflecting
//! end K₊ and a Yang–Baxter residual.
//!
//! Two-site matrices act on the ordered basis `{↑↑, ↑↓, ↓↑, ↓↓}`; the first
//! factor is the auxiliary (row) space, so the index is `2·aux + site` with
//! `0 = ↑`, `1 = ↓`.

use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|sh(λ + η)|` below this is treated as a vanishing weight denominator.
pub const WEIGHT_TOL: f64 = 1e-12;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Spectral parameters `λ_j` (rows), inhomogeneities `ν_k` (columns),
/// crossing parameter `η` and boundary parameter `ζ₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub lambdas: Vec<C64>,
    pub nus: Vec<C64>,
    pub eta: C64,
    pub zeta_plus: C64,
}

impl ModelParams {
    pub fn new(lambdas: Vec<C64>, nus: Vec<C64>, eta: C64, zeta_plus: C64) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::SizeMismatch("N must be at least 1".into()));
        }
        if lambdas.len() != nus.len() {
            return Err(Error::SizeMismatch(format!(
                "{} lambdas but {} nus",
                lambdas.len(),
                nus.len()
            )));
        }
        Ok(Self { lambdas, nus, eta, zeta_plus })
    }

    /// Real-valued convenience constructor.
    pub fn real(lambdas: &[f64], nus: &[f64], eta: f64, zeta_plus: f64) -> Result<Self> {
        Self::new(
            lambdas.iter().map(|&x| C64::new(x, 0.0)).collect(),
            nus.iter().map(|&x| C64::new(x, 0.0)).collect(),
            C64::new(eta, 0.0),
            C64::new(zeta_plus, 0.0),
        )
    }

    /// Arithmetic shifts `λ_j = λ + j·dz`, `ν_k = ν + k·dw` for `j, k = 1..N`.
    pub fn shifted(n: usize, lambda: C64, dz: C64, nu: C64, dw: C64, eta: C64, zeta_plus: C64) -> Result<Self> {
        Self::new(
            (1..=n).map(|j| lambda + dz * j as f64).collect(),
            (1..=n).map(|k| nu + dw * k as f64).collect(),
            eta,
            zeta_plus,
        )
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }
}

/// A 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub fn zero() -> Self {
        Self([[ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Self::diag(ONE, ONE)
    }

    pub fn diag(a: C64, d: C64) -> Self {
        Self([[a, ZERO], [ZERO, d]])
    }

    /// σ² with `σ²↑ = i↓`, `σ²↓ = −i↑`.
    pub fn sigma2() -> Self {
        Self([[ZERO, -I], [I, ZERO]])
    }

    pub fn sigma3() -> Self {
        Self::diag(ONE, -ONE)
    }

    /// `½(1 + σ³)`.
    pub fn proj_up() -> Self {
        Self::diag(ONE, ZERO)
    }

    /// `½(1 − σ³)`.
    pub fn proj_down() -> Self {
        Self::diag(ZERO, ONE)
    }

    pub fn transpose(&self) -> Self {
        let m = self.0;
        Self([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }
}

impl Index<(usize, usize)> for Mat2 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.0[i][j]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let mut out = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.0[i][j] = self.0[i][0] * rhs.0[0][j] + self.0[i][1] * rhs.0[1][j];
            }
        }
        out
    }
}

/// A 4×4 complex matrix on auxiliary ⊗ site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.0[i][i] = ONE;
        }
        m
    }

    /// `x ⊗ y` with `x` on the auxiliary factor.
    pub fn kron(x: &Mat2, y: &Mat2) -> Self {
        let mut m = Self::zero();
        for a in 0..2 {
            for b in 0..2 {
                for s in 0..2 {
                    for t in 0..2 {
                        m.0[2 * a + s][2 * b + t] = x.0[a][b] * y.0[s][t];
                    }
                }
            }
        }
        m
    }

    /// Transpose in the auxiliary factor only.
    pub fn aux_transpose(&self) -> Self {
        let mut m = Self::zero();
        for a in 0..2 {
            for b in 0..2 {
                for s in 0..2 {
                    for t in 0..2 {
                        m.0[2 * b + s][2 * a + t] = self.0[2 * a + s][2 * b + t];
                    }
                }
            }
        }
        m
    }

    /// The site operator sitting in auxiliary block `(a, b)`.
    pub fn aux_block(&self, a: usize, b: usize) -> Mat2 {
        Mat2([
            [self.0[2 * a][2 * b], self.0[2 * a][2 * b + 1]],
            [self.0[2 * a + 1][2 * b], self.0[2 * a + 1][2 * b + 1]],
        ])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        d
    }
}

impl Index<(usize, usize)> for Mat4 {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.0[i][j]
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

/// `(a, b, c) = (1, sh λ / sh(λ+η), sh η / sh(λ+η))`.
pub fn weights(lambda: C64, eta: C64) -> Result<(C64, C64, C64)> {
    let den = (lambda + eta).sinh();
    if den.norm() < WEIGHT_TOL {
        return Err(Error::SingularWeight { arg: format!("{lambda}"), magnitude: den.norm() });
    }
    Ok((ONE, lambda.sinh() / den, eta.sinh() / den))
}

pub fn r_matrix(lambda: C64, eta: C64) -> Result<Mat4> {
    let (a, b, c) = weights(lambda, eta)?;
    Ok(Mat4([
        [a, ZERO, ZERO, ZERO],
        [ZERO, b, c, ZERO],
        [ZERO, c, b, ZERO],
        [ZERO, ZERO, ZERO, a],
    ]))
}

/// `L(λ, ν) = R(λ − ν − η/2)`.
pub fn l_matrix(lambda: C64, nu: C64, eta: C64) -> Result<Mat4> {
    r_matrix(lambda - nu - eta / 2.0, eta)
}

/// `(σ² ⊗ 1) L(−λ, ν) (σ² ⊗ 1)`, the weight of the returning row.
pub fn conj_l_matrix(lambda: C64, nu: C64, eta: C64) -> Result<Mat4> {
    let s = Mat4::kron(&Mat2::sigma2(), &Mat2::identity());
    Ok(s * l_matrix(-lambda, nu, eta)? * s)
}

/// `K₊(λ) = diag(sh(λ+η/2+ζ₊), sh(−λ−η/2+ζ₊))`.
pub fn k_plus(lambda: C64, eta: C64, zeta_plus: C64) -> Mat2 {
    let x = lambda + eta / 2.0;
    Mat2::diag((x + zeta_plus).sinh(), (zeta_plus - x).sinh())
}

/// Dense 8×8 matrices on the three-fold space `V₁ ⊗ V₂ ⊗ V₃`, index
/// `4·s₁ + 2·s₂ + s₃`.
type Mat8 = [[C64; 8]; 8];

fn embed(r: &Mat4, i: usize, j: usize) -> Mat8 {
    let mut out = [[ZERO; 8]; 8];
    let bit = |x: usize, k: usize| (x >> (2 - k)) & 1;
    for row in 0..8 {
        for col in 0..8 {
            let spectator = 3 - i - j;
            if bit(row, spectator) != bit(col, spectator) {
                continue;
            }
            let ri = 2 * bit(row, i) + bit(row, j);
            let ci = 2 * bit(col, i) + bit(col, j);
            out[row][col] = r.0[ri][ci];
        }
    }
    out
}

fn mul8(x: &Mat8, y: &Mat8) -> Mat8 {
    let mut out = [[ZERO; 8]; 8];
    for i in 0..8 {
        for k in 0..8 {
            if x[i][k] == ZERO {
                continue;
            }
            for j in 0..8 {
                out[i][j] += x[i][k] * y[k][j];
            }
        }
    }
    out
}

/// Max-norm of `R₁₂(λ)R₁₃(λ+μ)R₂₃(μ) − R₂₃(μ)R₁₃(λ+μ)R₁₂(λ)`.
pub fn yang_baxter_residual(lambda: C64, mu: C64, eta: C64) -> Result<f64> {
    let r12 = embed(&r_matrix(lambda, eta)?, 0, 1);
    let r13 = embed(&r_matrix(lambda + mu, eta)?, 0, 2);
    let r23 = embed(&r_matrix(mu, eta)?, 1, 2);
    let lhs = mul8(&mul8(&r12, &r13), &r23);
    let rhs = mul8(&mul8(&r23, &r13), &r12);
    let mut res = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            res = res.max((lhs[i][j] - rhs[i][j]).norm());
        }
    }
    Ok(res)
}
