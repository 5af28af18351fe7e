//! Type I boundary two-point function `Ψ₁(M, L)`: the first-column spin
//! turns down on double row `M` and the second-column spin on double row `L`.
//!
//! Three evaluations are provided: the double sum over `(α, β)`, the same sum
//! written as a determinant with two shift-operator columns, and the
//! homogeneous limit where the shift columns become derivative columns.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::detkit::{laplace_two_column, laplace_two_column_det, lu_det, lu_log_det, DenseMatrix, LogProduct};
use crate::error::{Error, Result};
use crate::jets::{factorial, Series1, Series2};
use crate::partition::{check_generic, chi_matrix, phi_matrix_homogeneous};
use crate::scalar::{c, checked_div, nonzero, nonzero_product, sh, sh2};
use crate::vertex::ModelParams;

/// The four single-rapidity factors of the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    G1,
    G2,
    H1,
    H2,
}

/// `ε_{αβ} = sign(α − β)`.
pub fn epsilon_sign(alpha: usize, beta: usize) -> f64 {
    match alpha.cmp(&beta) {
        std::cmp::Ordering::Greater => 1.0,
        std::cmp::Ordering::Less => -1.0,
        std::cmp::Ordering::Equal => 0.0,
    }
}

fn check_ml(n: usize, m: usize, l: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::SizeMismatch(format!("type I needs N >= 2, got {n}")));
    }
    if m < 1 || m > n {
        return Err(Error::IndexOutOfRange { what: "M", value: m, lo: 1, hi: n });
    }
    if l < 1 || l > n {
        return Err(Error::IndexOutOfRange { what: "L", value: l, lo: 1, hi: n });
    }
    if m >= l {
        return Err(Error::OrderingViolation(format!("type I needs M < L, got M = {m}, L = {l}")));
    }
    Ok(())
}

/// `G₁, G₂, H₁, H₂` bound to a parameter set and an `(M, L)` pair.
#[derive(Debug, Clone)]
pub struct TypeIFactors<'a> {
    params: &'a ModelParams,
    m: usize,
    l: usize,
}

impl<'a> TypeIFactors<'a> {
    pub fn new(params: &'a ModelParams, m: usize, l: usize) -> Result<Self> {
        check_ml(params.n(), m, l)?;
        Ok(Self { params, m, l })
    }

    /// `Π_{j∈range} [sh²(x + shift) − sh²λ_j]`, 1-based inclusive range.
    fn lambda_product(&self, x: C64, shift: C64, lo: usize, hi: usize) -> C64 {
        (lo..=hi).map(|j| sh2(x + shift) - sh2(self.params.lambdas[j - 1])).product()
    }

    /// `Π_{j=3}^{N} [sh²ν_j − sh²(x + shift)]`.
    fn nu_tail(&self, x: C64, shift: C64) -> Result<C64> {
        nonzero_product(self.params.nus[2..].iter().map(|&nu| sh2(nu) - sh2(x + shift)), || "sh²ν_j − sh²(λ ± η/2)".into())
    }

    pub fn eval(&self, which: Factor, x: C64) -> Result<C64> {
        let p = self.params;
        let (eta, z, n) = (p.eta, p.zeta_plus, p.n());
        let (lm, ll, nu2) = (p.lambdas[self.m - 1], p.lambdas[self.l - 1], p.nus[1]);
        let h = eta / 2.0;
        let s2x = nonzero(sh(2.0 * x), || "sh 2λ".into())?;
        let guard = |v: C64, what: &'static str| nonzero(v, || what.into());
        Ok(match which {
            Factor::G1 => {
                sh(x + h - z) / (s2x * guard(sh(x + ll + eta), "sh(λ + λ_L + η)")?)
                    * self.lambda_product(x, eta, 1, self.l)
                    * self.lambda_product(x, c(0.0), self.l + 1, n)
                    / self.nu_tail(x, h)?
            }
            Factor::G2 => {
                sh(2.0 * x + eta) * sh(x - h + z)
                    / (s2x * guard(sh(2.0 * x - eta), "sh(2λ − η)")? * guard(sh(x - ll - eta), "sh(λ − λ_L − η)")?)
                    * self.lambda_product(x, -eta, 1, self.l)
                    * self.lambda_product(x, c(0.0), self.l + 1, n)
                    / self.nu_tail(x, -h)?
            }
            Factor::H1 => {
                sh(x + lm) * sh(x + h - z) * sh(h - x - nu2) / (s2x * guard(sh(x + nu2 + h), "sh(λ + ν₂ + η/2)")?)
                    * self.lambda_product(x, eta, 1, self.m - 1)
                    * self.lambda_product(x, c(0.0), self.m + 1, n)
                    / self.nu_tail(x, h)?
            }
            Factor::H2 => {
                sh(2.0 * x + eta) * sh(x - lm) * sh(-x + h - z) * sh(x - nu2 + h)
                    / (s2x * guard(sh(2.0 * x - eta), "sh(2λ − η)")? * guard(sh(x - nu2 - h), "sh(λ − ν₂ − η/2)")?)
                    * self.lambda_product(x, -eta, 1, self.m - 1)
                    * self.lambda_product(x, c(0.0), self.m + 1, n)
                    / self.nu_tail(x, -h)?
            }
        })
    }

    /// `Σ_{i,j∈{1,2}} F_{i,j}(x, y)` with `F_{i,j} = G_i(x) H_j(y) / [sh²(x ± η) − sh²y]`.
    pub fn f_sum(&self, x: C64, y: C64) -> Result<C64> {
        let eta = self.params.eta;
        let hs = self.eval(Factor::H1, y)? + self.eval(Factor::H2, y)?;
        let d1 = checked_div(c(1.0), sh2(x + eta) - sh2(y), || "sh²(λ_α + η) − sh²λ_β".into())?;
        let d2 = checked_div(c(1.0), sh2(x - eta) - sh2(y), || "sh²(λ_α − η) − sh²λ_β".into())?;
        Ok(self.eval(Factor::G1, x)? * hs * d1 + self.eval(Factor::G2, x)? * hs * d2)
    }
}

/// Evaluates one of `G₁, G₂, H₁, H₂` at `rapidity`.
#[allow(non_snake_case)]
pub fn typeI_factor(which: Factor, params: &ModelParams, m: usize, l: usize, rapidity: C64) -> Result<C64> {
    TypeIFactors::new(params, m, l)?.eval(which, rapidity)
}

/// Everything multiplying the double sum, including `1 / det χ`.
fn prefactor(params: &ModelParams, m: usize, l: usize) -> Result<LogProduct> {
    let (lam, nu, eta) = (&params.lambdas, &params.nus, params.eta);
    let n = params.n();
    let h = eta / 2.0;
    let mut pre = LogProduct::from_value(sh2(eta));
    let det = lu_log_det(&chi_matrix(params)?);
    if det.value().norm() == 0.0 {
        return Err(Error::SingularParameters("det χ vanishes".into()));
    }
    pre.div_product(&det);
    pre.div(nonzero(sh(lam[m - 1] + nu[0] - h), || "sh(λ_M + ν₁ − η/2)".into())?);
    pre.div(nonzero(sh(lam[l - 1] - nu[1] - h), || "sh(λ_L − ν₂ − η/2)".into())?);
    let den = (1..m)
        .map(|j| sh2(nu[0] - h) - sh2(lam[j - 1]))
        .chain((m..=n).map(|j| sh2(nu[0] + h) - sh2(lam[j - 1])))
        .chain((1..=l).map(|j| sh2(nu[1] - h) - sh2(lam[j - 1])))
        .chain((l + 1..=n).map(|j| sh2(nu[1] + h) - sh2(lam[j - 1])));
    for d in den {
        pre.div(nonzero(d, || "prefactor denominator factor".into())?);
    }
    for j in 2..=n {
        pre.mul(sh2(nu[0]) - sh2(nu[j - 1]));
    }
    for j in 3..=n {
        pre.mul(sh2(nu[1]) - sh2(nu[j - 1]));
    }
    Ok(pre)
}

fn chi_tail(params: &ModelParams) -> Result<DenseMatrix> {
    let chi = chi_matrix(params)?;
    let n = params.n();
    Ok(chi.select(&(0..n).collect::<Vec<_>>(), &(2..n).collect::<Vec<_>>()))
}

/// `Ψ₁(M, L)` from the double sum over `α ≤ L`, `β ≤ M`, already divided by `Z`.
pub fn psi1_double_sum(params: &ModelParams, m: usize, l: usize) -> Result<C64> {
    psi1_sum_over(params, m, l, l, m)
}

/// Same double sum with both indices running over `1..=N`; the extra terms
/// vanish identically.
pub fn psi1_double_sum_extended(params: &ModelParams, m: usize, l: usize) -> Result<C64> {
    let n = params.n();
    psi1_sum_over(params, m, l, n, n)
}

fn psi1_sum_over(params: &ModelParams, m: usize, l: usize, alpha_max: usize, beta_max: usize) -> Result<C64> {
    let f = TypeIFactors::new(params, m, l)?;
    check_generic(params)?;
    let pre = prefactor(params, m, l)?;
    let tail = chi_tail(params)?;
    let n = params.n();
    let pairs: Vec<(usize, usize)> = (1..=alpha_max)
        .flat_map(|a| (1..=beta_max).map(move |b| (a, b)))
        .filter(|(a, b)| a != b)
        .collect();
    let terms = pairs
        .par_iter()
        .map(|&(a, b)| {
            let rows: Vec<usize> = (0..n).filter(|&j| j != a - 1 && j != b - 1).collect();
            let minor = lu_det(&tail.select(&rows, &(0..n - 2).collect::<Vec<_>>()));
            let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 } * epsilon_sign(a, b);
            Ok(sign * minor * f.f_sum(params.lambdas[a - 1], params.lambdas[b - 1])?)
        })
        .collect::<Result<Vec<C64>>>()?;
    Ok(pre.value() * terms.into_iter().sum::<C64>())
}

/// `Ψ₁(M, L)` at `λ_j = base + z_j` from the determinant whose first two
/// columns are the shift operators `exp(z_j ∂_{ε₁})`, `exp(z_j ∂_{ε₂})`
/// acting on `Σ F(λ + ε₁, λ + ε₂)` and whose remaining columns are
/// `χ(λ + z_j, ν_k)`, `k ≥ 3`.
pub fn psi1_det_form(
    base: C64,
    shifts: &[C64],
    nus: &[C64],
    eta: C64,
    zeta_plus: C64,
    m: usize,
    l: usize,
) -> Result<C64> {
    let params = ModelParams::new(shifts.iter().map(|&z| base + z).collect(), nus.to_vec(), eta, zeta_plus)?;
    let f = TypeIFactors::new(&params, m, l)?;
    check_generic(&params)?;
    let pre = prefactor(&params, m, l)?;
    let tail = chi_tail(&params)?;
    // exp(z_p ∂_{ε₁}) exp(z_q ∂_{ε₂}) F|_{ε=0} = F(λ + z_p, λ + z_q)
    let value = laplace_two_column(&tail, |p, q| f.f_sum(base + shifts[p], base + shifts[q]))?;
    Ok(pre.value() * value)
}

/// Jet helpers for the homogeneous limit: everything is a function of a
/// single small displacement `ε` around the common rapidity.
struct HomogeneousJets {
    lambda: C64,
    nu: C64,
    eta: C64,
    zeta: C64,
    order: usize,
}

impl HomogeneousJets {
    fn eps(&self) -> Series1 {
        Series1::variable(c(0.0), self.order)
    }

    /// `sh(a·ε + b)`.
    fn sh_lin(&self, a: f64, b: C64) -> Series1 {
        self.eps().scale(c(a)).add_scalar(b).sinh()
    }

    fn sh2_lin(&self, a: f64, b: C64) -> Series1 {
        let s = self.sh_lin(a, b);
        &s * &s
    }

    fn div(&self, num: &Series1, den: &Series1, what: &str) -> Result<Series1> {
        num.try_div(den).map_err(|_| Error::SingularParameters(format!("{what} vanishes in the homogeneous limit")))
    }

    /// `(sh²(λ+ε+s) − sh²λ)^{p} (sh²(λ+ε) − sh²λ)^{q} / (sh²ν − sh²(λ+ε+s/2))^{N−2}`.
    fn powers(&self, s: C64, p: usize, q: usize, n: usize) -> Result<Series1> {
        let (lam, nu) = (self.lambda, self.nu);
        let s2l = sh2(lam);
        let a = self.sh2_lin(1.0, lam + s).add_scalar(-s2l).powi(p as u32);
        let b = self.sh2_lin(1.0, lam).add_scalar(-s2l).powi(q as u32);
        let d = (-&self.sh2_lin(1.0, lam + s / 2.0)).add_scalar(sh2(nu)).powi((n - 2) as u32);
        self.div(&(&a * &b), &d, "sh²ν − sh²(λ ± η/2)")
    }

    fn g1(&self, n: usize, l: usize) -> Result<Series1> {
        let (lam, eta, z) = (self.lambda, self.eta, self.zeta);
        let num = self.sh_lin(1.0, lam + eta / 2.0 - z);
        let den = &self.sh_lin(2.0, 2.0 * lam) * &self.sh_lin(1.0, 2.0 * lam + eta);
        Ok(&self.div(&num, &den, "sh 2λ · sh(2λ + η)")? * &self.powers(eta, l, n - l, n)?)
    }

    fn g2(&self, n: usize, l: usize) -> Result<Series1> {
        let (lam, eta, z) = (self.lambda, self.eta, self.zeta);
        let num = &self.sh_lin(2.0, 2.0 * lam + eta) * &self.sh_lin(1.0, lam - eta / 2.0 + z);
        let den = &(&self.sh_lin(2.0, 2.0 * lam) * &self.sh_lin(2.0, 2.0 * lam - eta)) * &self.sh_lin(1.0, -eta);
        Ok(&self.div(&num, &den, "sh 2λ · sh(2λ − η) · sh η")? * &self.powers(-eta, l, n - l, n)?)
    }

    fn h1(&self, n: usize, m: usize) -> Result<Series1> {
        let (lam, nu, eta, z) = (self.lambda, self.nu, self.eta, self.zeta);
        let num = &(&self.sh_lin(1.0, 2.0 * lam) * &self.sh_lin(1.0, lam + eta / 2.0 - z))
            * &self.sh_lin(-1.0, eta / 2.0 - lam - nu);
        let den = &self.sh_lin(2.0, 2.0 * lam) * &self.sh_lin(1.0, lam + nu + eta / 2.0);
        Ok(&self.div(&num, &den, "sh 2λ · sh(λ + ν + η/2)")? * &self.powers(eta, m - 1, n - m, n)?)
    }

    fn h2(&self, n: usize, m: usize) -> Result<Series1> {
        let (lam, nu, eta, z) = (self.lambda, self.nu, self.eta, self.zeta);
        let num = &(&(&self.sh_lin(2.0, 2.0 * lam + eta) * &self.sh_lin(1.0, c(0.0))) * &self.sh_lin(-1.0, -lam + eta / 2.0 - z))
            * &self.sh_lin(1.0, lam - nu + eta / 2.0);
        let den = &(&self.sh_lin(2.0, 2.0 * lam) * &self.sh_lin(2.0, 2.0 * lam - eta)) * &self.sh_lin(1.0, lam - nu - eta / 2.0);
        Ok(&self.div(&num, &den, "sh 2λ · sh(2λ − η) · sh(λ − ν − η/2)")? * &self.powers(-eta, m - 1, n - m, n)?)
    }
}

/// `Σ F^{(h)}_{i,j}(ε₁, ε₂)` as a jet to orders `(N−1, N−1)`.
pub fn homogeneous_f_jet(lambda: C64, nu: C64, eta: C64, zeta_plus: C64, n: usize, m: usize, l: usize) -> Result<Series2> {
    check_ml(n, m, l)?;
    let k = n - 1;
    let jets = HomogeneousJets { lambda, nu, eta, zeta: zeta_plus, order: k };
    let base = (c(0.0), c(0.0));
    let orders = (k, k);
    let lift1 = |s: &Series1| Series2::lift(s, 0, base, orders);
    let lift2 = |s: &Series1| Series2::lift(s, 1, base, orders);
    let g1 = lift1(&jets.g1(n, l)?);
    let g2 = lift1(&jets.g2(n, l)?);
    let hs = lift2(&(&jets.h1(n, m)? + &jets.h2(n, m)?));
    let sh2_2 = |axis: usize, shift: C64| {
        let s = Series2::variable(axis, base, orders).add_scalar(lambda + shift).sinh();
        &s * &s
    };
    let d1 = &sh2_2(0, eta) - &sh2_2(1, c(0.0));
    let d2 = &sh2_2(0, -eta) - &sh2_2(1, c(0.0));
    let singular = |_| Error::SingularParameters("sh²(λ ± η) − sh²λ vanishes".into());
    let t1 = (&g1 * &hs).try_div(&d1).map_err(singular)?;
    let t2 = (&g2 * &hs).try_div(&d2).map_err(singular)?;
    Ok(&t1 + &t2)
}

/// The homogeneous limit `λ_j → λ`, `ν_k → ν` of `Ψ₁(M, L)`.
pub fn psi1_homogeneous(lambda: C64, nu: C64, eta: C64, zeta_plus: C64, n: usize, m: usize, l: usize) -> Result<C64> {
    check_ml(n, m, l)?;
    if eta.norm() < crate::scalar::GUARD_TOL {
        return Err(Error::SingularParameters("η = 0".into()));
    }
    nonzero(sh(2.0 * lambda), || "sh 2λ".into())?;
    let f = homogeneous_f_jet(lambda, nu, eta, zeta_plus, n, m, l)?;
    let phi = phi_matrix_homogeneous(lambda, nu, eta, zeta_plus, n)?;
    let block = phi.select(&(0..n).collect::<Vec<_>>(), &(0..n - 2).collect::<Vec<_>>());
    let expansion = laplace_two_column_det(&f, &block)?;

    let h = eta / 2.0;
    let mut pre = LogProduct::from_value(c(factorial(n - 1) * factorial(n - 2)));
    pre.mul(sh2(eta));
    for _ in 0..(2 * n - 3) {
        pre.mul(sh(2.0 * nu));
    }
    let det_phi = lu_log_det(&phi);
    if det_phi.value().norm() == 0.0 {
        return Err(Error::SingularParameters("det Φ vanishes".into()));
    }
    pre.div_product(&det_phi);
    pre.div(nonzero(sh2(nu) - sh2(lambda - h), || "sh²ν − sh²(λ − η/2)".into())?);
    let a = nonzero(sh2(nu - h) - sh2(lambda), || "sh²(ν − η/2) − sh²λ".into())?;
    let b = nonzero(sh2(nu + h) - sh2(lambda), || "sh²(ν + η/2) − sh²λ".into())?;
    for _ in 0..(l + m - 1) {
        pre.div(a);
    }
    for _ in 0..(2 * n + 1 - l - m) {
        pre.div(b);
    }
    Ok(pre.value() * expansion)
}

/// `Ψ₁(M, L)` at the arithmetic shifts `λ_j = λ + jδ`, `ν_k = ν + kδ` for
/// `δ = δ₀, δ₀/2, …`, one value per level.
#[allow(clippy::too_many_arguments)]
pub fn psi1_shift_ladder(
    lambda: C64,
    nu: C64,
    eta: C64,
    zeta_plus: C64,
    n: usize,
    m: usize,
    l: usize,
    delta0: f64,
    levels: usize,
) -> Result<Vec<C64>> {
    (0..levels)
        .map(|k| {
            let d = c(delta0 / f64::from(1u32 << k));
            let p = ModelParams::shifted(n, lambda, d, nu, d, eta, zeta_plus)?;
            psi1_double_sum(&p, m, l)
        })
        .collect()
}

/// Richardson extrapolation to `δ → 0` of values at `δ₀, δ₀/2, δ₀/4, …`
/// with an error expansion in integer powers of `δ`.
pub fn richardson(values: &[C64]) -> C64 {
    let mut col = values.to_vec();
    for k in 1..values.len() {
        let w = f64::from(1u32 << k);
        col = col.windows(2).map(|p| (w * p[1] - p[0]) / (w - 1.0)).collect();
    }
    col.first().copied().unwrap_or(c(0.0))
}
