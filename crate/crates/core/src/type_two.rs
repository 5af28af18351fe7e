//! Type II boundary two-point function `Ψ₂(M, L)`: the first-column spin
//! turns down on double row `M` and the last returning row turns down at
//! column `L`. The closed form is a sum over `α = 1..M` and sign vectors
//! `σ ∈ {±1}^{N−1}` of determinant terms.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::detkit::{lu_det, lu_log_det, DenseMatrix, LogProduct};
use crate::error::{Error, Result};
use crate::partition::{check_generic, chi_matrix, phi_entry};
use crate::scalar::{c, nonzero, nonzero_product, sh, sh2};
use crate::vertex::ModelParams;

/// Signs `σ_1, …, σ_{N−1}`; bit `j` of the mask clear means `σ_{j+1} = +1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaVector {
    signs: Vec<i8>,
}

impl SigmaVector {
    pub fn from_mask(mask: usize, len: usize) -> Self {
        Self { signs: (0..len).map(|j| if mask >> j & 1 == 0 { 1 } else { -1 }).collect() }
    }

    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Config(format!("sigma entries must be +1 or -1, got {signs:?}")));
        }
        Ok(Self { signs: signs.to_vec() })
    }

    /// All `2^len` vectors in binary order.
    pub fn all(len: usize) -> impl Iterator<Item = SigmaVector> {
        (0..(1usize << len)).map(move |mask| Self::from_mask(mask, len))
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    /// `σ_j` for 1-based `j`.
    pub fn sign(&self, j: usize) -> f64 {
        f64::from(self.signs[j - 1])
    }

    pub fn negated(&self) -> Self {
        Self { signs: self.signs.iter().map(|s| -s).collect() }
    }
}

/// The `(N−1)×(N−1)` matrix `h` for a skipped index `α` and column `L`.
#[derive(Debug, Clone)]
pub struct HMatrix {
    pub matrix: DenseMatrix,
    pub alpha: usize,
    pub l: usize,
}

fn check_ml(n: usize, m: usize, l: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::IndexOutOfRange { what: "M", value: m, lo: 1, hi: n.saturating_sub(1) });
    }
    if m < 1 || m > n - 1 {
        return Err(Error::IndexOutOfRange { what: "M", value: m, lo: 1, hi: n - 1 });
    }
    if l < 1 || l > n {
        return Err(Error::IndexOutOfRange { what: "L", value: l, lo: 1, hi: n });
    }
    Ok(())
}

fn signed_lambdas(params: &ModelParams, sigma: &SigmaVector) -> Result<Vec<C64>> {
    let n = params.n();
    if sigma.len() != n - 1 {
        return Err(Error::SizeMismatch(format!("sigma has {} entries, expected {}", sigma.len(), n - 1)));
    }
    Ok((1..n).map(|j| params.lambdas[j - 1] * sigma.sign(j)).collect())
}

/// Row 1: `Π_{i=2}^{L−1} sh(ν_i−ν_{k+1}+η) Π_{i=L+1}^{N} sh(ν_i−ν_{k+1}) / Π_{i≠α} sh(σ_iλ_i−ν_{k+1}+η/2)`;
/// rows `2..N−1`: `φ(σ_jλ_j, ν_{k+1})` over `j ≠ α` in increasing order.
pub fn build_h_matrix(params: &ModelParams, alpha: usize, l: usize, sigma: &SigmaVector) -> Result<HMatrix> {
    let n = params.n();
    if n < 2 || alpha < 1 || alpha > n - 1 {
        return Err(Error::IndexOutOfRange { what: "alpha", value: alpha, lo: 1, hi: n.saturating_sub(1) });
    }
    if l < 1 || l > n {
        return Err(Error::IndexOutOfRange { what: "L", value: l, lo: 1, hi: n });
    }
    let (nu, eta) = (&params.nus, params.eta);
    let sl = signed_lambdas(params, sigma)?;
    let rest: Vec<usize> = (1..n).filter(|&j| j != alpha).collect();
    let matrix = DenseMatrix::try_from_fn(n - 1, n - 1, |row, kk| {
        let nk = nu[kk + 1];
        if row == 0 {
            let mut num = c(1.0);
            for i in 2..l {
                num *= sh(nu[i - 1] - nk + eta);
            }
            for i in (l + 1)..=n {
                num *= sh(nu[i - 1] - nk);
            }
            let den = nonzero_product(rest.iter().map(|&i| sh(sl[i - 1] - nk + eta / 2.0)), || "sh(σ_iλ_i − ν + η/2)".into())?;
            Ok(num / den)
        } else {
            phi_entry(sl[rest[row - 1] - 1], nk, eta)
        }
    })?;
    Ok(HMatrix { matrix, alpha, l })
}

/// One summand of the `(α, σ)` sum, without the global prefactor.
pub fn psi2_sigma_term(params: &ModelParams, m: usize, l: usize, alpha: usize, sigma: &SigmaVector) -> Result<C64> {
    let n = params.n();
    check_ml(n, m, l)?;
    if alpha < 1 || alpha > m {
        return Err(Error::IndexOutOfRange { what: "alpha", value: alpha, lo: 1, hi: m });
    }
    let (nu, eta, z) = (&params.nus, params.eta, params.zeta_plus);
    let h = eta / 2.0;
    let sl = signed_lambdas(params, sigma)?;
    let lam = &params.lambdas;
    let sa = sl[alpha - 1];
    let guard = |v: C64, what: &'static str| nonzero(v, || what.into());

    let mut t = c(1.0);
    for j in 1..n {
        t *= -sigma.sign(j) * sh(-sl[j - 1] + h - z);
    }
    for j in 1..n {
        for k in (j + 1)..n {
            t *= sh(sl[j - 1] + sl[k - 1] - eta);
        }
    }
    let den = (1..n).flat_map(|j| (2..=n).map(move |k| (j, k))).map(|(j, k)| sh(-sl[j - 1] - nu[k - 1] + h));
    t /= nonzero_product(den, || "sh(−σ_jλ_j − ν_k + η/2)".into())?;
    for j in (m + 1)..n {
        t *= sh2(lam[alpha - 1]) - sh2(lam[j - 1]);
    }
    for j in 1..m {
        t *= sh(sa - sl[j - 1] - eta);
    }
    for j in 2..=n {
        t /= guard(sh(sa - nu[j - 1] - h), "sh(σ_αλ_α − ν_j − η/2)")?;
    }
    for j in m..n {
        t /= guard(sh(sa + sl[j - 1] - eta), "sh(σ_αλ_α + σ_jλ_j − η)")?;
    }
    let parity = if alpha.is_multiple_of(2) { 1.0 } else { -1.0 };
    t *= parity * sh(-sa + lam[m - 1]);
    let hm = build_h_matrix(params, alpha, l, sigma)?;
    Ok(t * lu_det(&hm.matrix))
}

/// Which global prefactor to use for `Ψ₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Psi2Prefactor {
    /// Agrees with the operator contraction.
    #[default]
    Corrected,
    /// Carries `1 / sh(λ_M − ν₁ + η/2)` in place of `−1 / sh(λ_M + ν₁ − η/2)`;
    /// off by the ratio of the two.
    Published,
}

fn prefactor(params: &ModelParams, m: usize, l: usize, variant: Psi2Prefactor) -> Result<LogProduct> {
    let n = params.n();
    let (lam, nu, eta, z) = (&params.lambdas, &params.nus, params.eta, params.zeta_plus);
    let h = eta / 2.0;
    let ln = lam[n - 1];
    let mut pre = LogProduct::from_value(sh2(eta));
    pre.mul(sh(ln + h + z));
    pre.mul(sh(-ln - nu[l - 1] - h));
    let det = lu_log_det(&chi_matrix(params)?);
    if det.value().norm() == 0.0 {
        return Err(Error::SingularParameters("det χ vanishes".into()));
    }
    pre.div_product(&det);
    match variant {
        Psi2Prefactor::Corrected => {
            pre.mul(c(-1.0));
            pre.div(nonzero(sh(lam[m - 1] + nu[0] - h), || "sh(λ_M + ν₁ − η/2)".into())?);
        }
        Psi2Prefactor::Published => {
            pre.div(nonzero(sh(lam[m - 1] - nu[0] + h), || "sh(λ_M − ν₁ + η/2)".into())?);
        }
    }
    pre.div(nonzero(sh2(nu[l - 1] - h) - sh2(ln), || "sh²(ν_L − η/2) − sh²λ_N".into())?);
    for j in 1..n {
        pre.mul(sh(2.0 * lam[j - 1] + eta));
        pre.div(nonzero(sh(2.0 * lam[j - 1]), || "sh 2λ_j".into())?);
    }
    for k in 2..=n {
        pre.mul(sh2(nu[k - 1]) - sh2(nu[0]));
    }
    for j in 2..=n {
        for k in (j + 1)..=n {
            pre.mul(sh(nu[k - 1] + nu[j - 1]));
        }
    }
    for j in 1..n {
        pre.mul(sh2(lam[j - 1]) - sh2(ln));
    }
    let den = (1..m)
        .map(|j| sh2(nu[0] - h) - sh2(lam[j - 1]))
        .chain((m..=n).map(|j| sh2(nu[0] + h) - sh2(lam[j - 1])))
        .chain((2..=l).map(|j| sh2(nu[j - 1] + h) - sh2(ln)))
        .chain(((l + 1)..=n).map(|j| sh2(nu[j - 1]) - sh2(ln + h)));
    for d in den {
        pre.div(nonzero(d, || "prefactor denominator factor".into())?);
    }
    Ok(pre)
}

/// `Ψ₂` together with diagnostics on the size of the summands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi2Evaluation {
    pub value: C64,
    /// Largest `|prefactor × term|` among the summands.
    pub max_term: f64,
    pub terms: usize,
}

impl Psi2Evaluation {
    /// `max_term / |value|`: how much cancellation the sum went through.
    pub fn cancellation(&self) -> f64 {
        self.max_term / self.value.norm().max(1e-300)
    }
}

pub fn psi2_with(params: &ModelParams, m: usize, l: usize, variant: Psi2Prefactor) -> Result<Psi2Evaluation> {
    let n = params.n();
    check_ml(n, m, l)?;
    check_generic(params)?;
    let pre = prefactor(params, m, l, variant)?.value();
    let per_alpha = 1usize << (n - 1);
    let terms = (0..m * per_alpha)
        .into_par_iter()
        .map(|idx| {
            let alpha = idx / per_alpha + 1;
            let sigma = SigmaVector::from_mask(idx % per_alpha, n - 1);
            psi2_sigma_term(params, m, l, alpha, &sigma).map(|t| pre * t)
        })
        .collect::<Result<Vec<C64>>>()?;
    let max_term = terms.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let value: C64 = terms.iter().sum();
    let eval = Psi2Evaluation { value, max_term, terms: terms.len() };
    log::debug!("psi2(M={m}, L={l}): {} terms, max |term| {:e}, cancellation {:e}", eval.terms, max_term, eval.cancellation());
    Ok(eval)
}

/// `Ψ₂(M, L)`, already divided by `Z`.
pub fn psi2(params: &ModelParams, m: usize, l: usize) -> Result<C64> {
    Ok(psi2_with(params, m, l, Psi2Prefactor::Corrected)?.value)
}

/// The column contraction `⟨v⁻| B̄(ν_N) ⋯ D̄(ν_L) ⋯ B̄(ν_2) |v⁺⟩` over the rows
/// `σ_jλ_j`, `j ≠ α`, in closed form: a product ratio times `det h`.
pub fn column_string_closed_form(params: &ModelParams, alpha: usize, l: usize, sigma: &SigmaVector) -> Result<C64> {
    let n = params.n();
    let (nu, eta) = (&params.nus, params.eta);
    let sl = signed_lambdas(params, sigma)?;
    let rest: Vec<C64> = (1..n).filter(|&j| j != alpha).map(|j| sl[j - 1]).collect();
    let mut num = c(1.0);
    for &x in &rest {
        for k in 2..=n {
            num *= sh(x - nu[k - 1] - eta / 2.0);
        }
    }
    let nu_pairs = (2..=n).flat_map(|j| ((j + 1)..=n).map(move |k| sh(nu[k - 1] - nu[j - 1])));
    let row_pairs = (0..rest.len()).flat_map(|x| ((x + 1)..rest.len()).map(move |y| (x, y))).map(|(x, y)| sh(rest[x] - rest[y]));
    let den = nonzero_product(nu_pairs.chain(row_pairs), || "column Vandermonde factor".into())?;
    let hm = build_h_matrix(params, alpha, l, sigma)?;
    Ok(num * lu_det(&hm.matrix) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{column_string, contract_Z, contract_psi2, ColumnString};
    use crate::scalar::rel_err;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draw(rng: &mut ChaCha8Rng, n: usize) -> ModelParams {
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        ModelParams::real(&l, &v, 0.5, 0.8).unwrap()
    }

    fn oracle(p: &ModelParams, m: usize, l: usize) -> C64 {
        contract_psi2(p, m, l).unwrap() / contract_Z(p).unwrap()
    }

    fn check(p: &ModelParams, m: usize, l: usize, tol: f64) {
        let (a, b) = (psi2(p, m, l).unwrap(), oracle(p, m, l));
        if b.norm() == 0.0 {
            assert!(a.norm() < 1e-12, "m={m} l={l}: {a}");
        } else {
            assert!(rel_err(a, b) < tol, "n={} m={m} l={l}: {a} vs {b}", p.n());
        }
    }

    #[test]
    fn sigma_order() {
        let all: Vec<_> = SigmaVector::all(2).collect();
        assert_eq!(all.len(), 4);
        assert_eq!((all[0].sign(1), all[0].sign(2)), (1.0, 1.0));
        assert_eq!((all[1].sign(1), all[1].sign(2)), (-1.0, 1.0));
        assert!(SigmaVector::from_signs(&[1, 0]).is_err());
    }

    #[test]
    fn n2_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let p = draw(&mut rng, 2);
            check(&p, 1, 1, 1e-9);
            check(&p, 1, 2, 1e-9);
        }
    }

    #[test]
    fn n3_n4_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 3..=4 {
            let p = draw(&mut rng, n);
            for m in 1..n {
                for l in 1..=n {
                    check(&p, m, l, 1e-8);
                }
            }
        }
    }

    #[test]
    fn published_prefactor_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = draw(&mut rng, 3);
        let (m, l) = (2, 3);
        let a = psi2_with(&p, m, l, Psi2Prefactor::Published).unwrap().value;
        let b = psi2(&p, m, l).unwrap();
        let (lm, n1, h) = (p.lambdas[m - 1], p.nus[0], p.eta / 2.0);
        let ratio = -sh(lm + n1 - h) / sh(lm - n1 + h);
        assert!(rel_err(a, b * ratio) < 1e-12);
    }

    #[test]
    fn h_matrix_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = draw(&mut rng, 2);
        let s = SigmaVector::from_mask(0, 1);
        let h = build_h_matrix(&p, 1, 2, &s).unwrap();
        assert_eq!((h.matrix.rows(), h.matrix.cols()), (1, 1));
        // L = N = 2 with α = 1: numerator and denominator products are empty.
        assert_eq!(h.matrix[(0, 0)], c(1.0));

        let p = draw(&mut rng, 4);
        let s = SigmaVector::from_mask(5, 3);
        let h = build_h_matrix(&p, 2, 2, &s).unwrap();
        assert_eq!(h.matrix.rows(), 3);
        // Rows after the first skip λ_α.
        let want = phi_entry(-p.lambdas[0], p.nus[1], p.eta).unwrap();
        assert!(rel_err(h.matrix[(1, 0)], want) < 1e-15);
        let want = phi_entry(-p.lambdas[2], p.nus[2], p.eta).unwrap();
        assert!(rel_err(h.matrix[(2, 1)], want) < 1e-15);
        assert!(build_h_matrix(&p, 4, 2, &s).is_err());
    }

    #[test]
    fn term_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = draw(&mut rng, 4);
        let e = psi2_with(&p, 2, 3, Psi2Prefactor::Corrected).unwrap();
        assert_eq!(e.terms, 2 * 8);
        assert!(e.cancellation() * e.terms as f64 >= 1.0 - 1e-12);
    }

    #[test]
    fn column_determinant_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let p = draw(&mut rng, 3);
        for alpha in 1..=2 {
            for l in 2..=3 {
                for s in SigmaVector::all(2) {
                    let sl = signed_lambdas(&p, &s).unwrap();
                    let rows: Vec<C64> = (1..3).filter(|&j| j != alpha).map(|j| sl[j - 1]).collect();
                    let direct = column_string(&p.nus[1..], &rows, p.eta, l - 2, ColumnString::BD).unwrap();
                    let closed = column_string_closed_form(&p, alpha, l, &s).unwrap();
                    assert!(rel_err(closed, direct) < 1e-10, "alpha={alpha} l={l} {s:?}");
                    let flipped = column_string(&p.nus[1..], &rows, p.eta, l - 2, ColumnString::CA).unwrap();
                    assert!(rel_err(flipped, direct) < 1e-10);
                }
            }
        }
    }

    #[test]
    fn singular_term_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p = draw(&mut rng, 3);
        p.nus[1] = p.lambdas[0] - p.eta / 2.0;
        let s = SigmaVector::from_mask(0, 2);
        assert!(matches!(psi2_sigma_term(&p, 1, 2, 1, &s), Err(Error::SingularParameters(_))));
    }
}
