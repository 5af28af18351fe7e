//! Closed-form partition functions: the χ kernel and the Tsuchiya
//! determinant of the reflecting-end lattice, the φ kernel and the Izergin
//! determinant of the square domain-wall lattice, and the homogeneous Φ.

use num_complex::Complex64 as C64;

use crate::detkit::{lu_det, lu_log_det, DenseMatrix, LogProduct};
use crate::error::{Error, Result};
use crate::jets::Series2;
use crate::scalar::{c, nonzero, nonzero_product, sh, sh2};
use crate::vertex::ModelParams;

/// Minimum separation between quantities that must be pairwise distinct.
pub const GENERICITY_TOL: f64 = 1e-8;

/// `χ(λ,ν) = −sh η sh(2λ+η) sh(ν+ζ₊) / ([sh²(ν+η/2)−sh²λ][sh²(ν−η/2)−sh²λ])`.
pub fn chi_entry(lambda: C64, nu: C64, eta: C64, zeta_plus: C64) -> Result<C64> {
    let d1 = nonzero(sh2(nu + eta / 2.0) - sh2(lambda), || "sh²(ν+η/2) − sh²λ".into())?;
    let d2 = nonzero(sh2(nu - eta / 2.0) - sh2(lambda), || "sh²(ν−η/2) − sh²λ".into())?;
    Ok(-sh(eta) * sh(2.0 * lambda + eta) * sh(nu + zeta_plus) / (d1 * d2))
}

/// `φ(λ,ν) = sh η / (sh(λ−ν+η/2) sh(λ−ν−η/2))`.
pub fn phi_entry(lambda: C64, nu: C64, eta: C64) -> Result<C64> {
    let d = nonzero_product([sh(lambda - nu + eta / 2.0), sh(lambda - nu - eta / 2.0)], || "sh(λ−ν±η/2)".into())?;
    Ok(sh(eta) / d)
}

pub fn chi_matrix(params: &ModelParams) -> Result<DenseMatrix> {
    let n = params.n();
    DenseMatrix::try_from_fn(n, n, |j, k| chi_entry(params.lambdas[j], params.nus[k], params.eta, params.zeta_plus))
}

fn distinct(xs: &[C64], f: impl Fn(C64) -> C64, what: &str) -> Result<()> {
    for j in 0..xs.len() {
        for k in (j + 1)..xs.len() {
            let d = (f(xs[j]) - f(xs[k])).norm();
            if d < GENERICITY_TOL {
                return Err(Error::DegenerateParameters(format!(
                    "{what}: entries {} and {} coincide (separation {d:e})",
                    j + 1,
                    k + 1
                )));
            }
        }
    }
    Ok(())
}

/// Pairwise-distinct `sh²λ_j` and `sh²ν_k`, required by the determinant formulas.
pub fn check_generic(params: &ModelParams) -> Result<()> {
    distinct(&params.lambdas, sh2, "sh²λ")?;
    distinct(&params.nus, sh2, "sh²ν")
}

/// `Π_{j,k}[sh²(ν_j+η/2)−sh²λ_k] det χ / (Π_{j<k}[sh²ν_j−sh²ν_k] Π_{j<k}[sh²λ_k−sh²λ_j])`.
#[allow(non_snake_case)]
pub fn tsuchiya_Z_log(params: &ModelParams) -> Result<LogProduct> {
    check_generic(params)?;
    let (l, v, eta) = (&params.lambdas, &params.nus, params.eta);
    let mut z = lu_log_det(&chi_matrix(params)?);
    for &nu in v {
        for &lam in l {
            z.mul(sh2(nu + eta / 2.0) - sh2(lam));
        }
    }
    for j in 0..l.len() {
        for k in (j + 1)..l.len() {
            z.div(sh2(v[j]) - sh2(v[k]));
            z.div(sh2(l[k]) - sh2(l[j]));
        }
    }
    Ok(z)
}

#[allow(non_snake_case)]
pub fn tsuchiya_Z(params: &ModelParams) -> Result<C64> {
    Ok(tsuchiya_Z_log(params)?.value())
}

/// `Π_{j,k} sh(λ_j−ν_k−η/2) det φ / (Π_{j<k} sh(ν_j−ν_k) Π_{j<k} sh(λ_k−λ_j))`.
#[allow(non_snake_case)]
pub fn izergin_Z(lambdas: &[C64], nus: &[C64], eta: C64) -> Result<C64> {
    let n = lambdas.len();
    if nus.len() != n || n == 0 {
        return Err(Error::SizeMismatch(format!("{} lambdas, {} nus", n, nus.len())));
    }
    distinct(lambdas, sh, "sh λ")?;
    distinct(nus, sh, "sh ν")?;
    let phi = DenseMatrix::try_from_fn(n, n, |j, k| phi_entry(lambdas[j], nus[k], eta))?;
    let mut z = lu_log_det(&phi);
    for &lam in lambdas {
        for &nu in nus {
            z.mul(sh(lam - nu - eta / 2.0));
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            z.div(sh(nus[j] - nus[k]));
            z.div(sh(lambdas[k] - lambdas[j]));
        }
    }
    Ok(z.value())
}

/// χ as a jet in `(λ, ν)` around the given point.
pub fn chi_jet(lambda: C64, nu: C64, eta: C64, zeta_plus: C64, orders: (usize, usize)) -> Result<Series2> {
    let base = (lambda, nu);
    let x = Series2::variable(0, base, orders);
    let y = Series2::variable(1, base, orders);
    let sh2s = |s: &Series2| {
        let t = s.sinh();
        &t * &t
    };
    let num = &x.scale(c(2.0)).add_scalar(eta).sinh() * &y.add_scalar(zeta_plus).sinh();
    let d1 = &sh2s(&y.add_scalar(eta / 2.0)) - &sh2s(&x);
    let d2 = &sh2s(&y.add_scalar(-eta / 2.0)) - &sh2s(&x);
    num.scale(-sh(eta)).try_div(&(&d1 * &d2)).map_err(|_| {
        Error::SingularParameters(format!("χ is singular at (λ, ν) = ({lambda}, {nu})"))
    })
}

/// `Φ_{j,k} = ∂_λ^{j−1} ∂_ν^{k−1} χ(λ, ν)` for `j, k = 1..N`.
pub fn phi_matrix_homogeneous(lambda: C64, nu: C64, eta: C64, zeta_plus: C64, n: usize) -> Result<DenseMatrix> {
    let jet = chi_jet(lambda, nu, eta, zeta_plus, (n - 1, n - 1))?;
    DenseMatrix::try_from_fn(n, n, |j, k| jet.partial_coefficient(j, k))
}

/// `det_N Φ`.
pub fn phi_det_homogeneous(lambda: C64, nu: C64, eta: C64, zeta_plus: C64, n: usize) -> Result<C64> {
    Ok(lu_det(&phi_matrix_homogeneous(lambda, nu, eta, zeta_plus, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::{contract_Z, contract_column_Z};
    use crate::scalar::rel_err;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn draw(rng: &mut ChaCha8Rng, n: usize) -> ModelParams {
        let l: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        ModelParams::real(&l, &v, 0.5, 0.8).unwrap()
    }

    #[test]
    fn chi_zeros() {
        let (eta, z) = (c(0.5), c(0.8));
        assert_eq!(chi_entry(c(0.3), -z, eta, z).unwrap().norm(), 0.0);
        assert!(chi_entry(-eta / 2.0, c(0.2), eta, z).unwrap().norm() < 1e-16);
    }

    #[test]
    fn chi_value() {
        let (l, v, e, z) = (0.3f64, 0.2f64, 0.5f64, 0.8f64);
        let want = -e.sinh() * (2.0 * l + e).sinh() * (v + z).sinh()
            / (((v + e / 2.0).sinh().powi(2) - l.sinh().powi(2)) * ((v - e / 2.0).sinh().powi(2) - l.sinh().powi(2)));
        let got = chi_entry(c(l), c(v), c(e), c(z)).unwrap();
        assert!(rel_err(got, c(want)) < 1e-14);
    }

    #[test]
    fn chi_singular() {
        let eta = c(0.5);
        let nu = c(0.4);
        assert!(matches!(chi_entry(nu + eta / 2.0, nu, eta, c(0.8)), Err(Error::SingularParameters(_))));
    }

    #[test]
    fn z_single_site() {
        let p = ModelParams::real(&[0.47], &[0.17], 0.5, 0.8).unwrap();
        let want = (sh2(p.nus[0] + p.eta / 2.0) - sh2(p.lambdas[0])) * chi_entry(p.lambdas[0], p.nus[0], p.eta, p.zeta_plus).unwrap();
        assert!(rel_err(tsuchiya_Z(&p).unwrap(), want) < 1e-14);
        assert!(rel_err(contract_Z(&p).unwrap(), want) < 1e-12);
    }

    #[test]
    fn z_matches_oracle() {
        let p = ModelParams::real(&[0.3, 0.55], &[0.2, 0.45], 0.5, 0.8).unwrap();
        assert!(rel_err(tsuchiya_Z(&p).unwrap(), contract_Z(&p).unwrap()) < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 3..=4 {
            let p = draw(&mut rng, n);
            assert!(rel_err(tsuchiya_Z(&p).unwrap(), contract_Z(&p).unwrap()) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn z_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = draw(&mut rng, 3);
        let z = tsuchiya_Z(&p).unwrap();
        let mut q = p.clone();
        q.lambdas.swap(0, 2);
        q.nus.swap(0, 1);
        assert!(rel_err(tsuchiya_Z(&q).unwrap(), z) < 1e-9);
        // Z / sh(2λ_j + η) is even in λ_j.
        let mut r = p.clone();
        let x = r.lambdas[1];
        r.lambdas[1] = -x;
        let want = z * sh(p.eta - 2.0 * x) / sh(p.eta + 2.0 * x);
        assert!(rel_err(tsuchiya_Z(&r).unwrap(), want) < 1e-9);
        assert!(rel_err(contract_Z(&r).unwrap(), want) < 1e-9);
    }

    #[test]
    fn z_degenerate() {
        let p = ModelParams::real(&[0.3, 0.3], &[0.2, 0.45], 0.5, 0.8).unwrap();
        assert!(matches!(tsuchiya_Z(&p), Err(Error::DegenerateParameters(_))));
        let p = ModelParams::real(&[0.3, -0.3], &[0.2, 0.45], 0.5, 0.8).unwrap();
        assert!(matches!(tsuchiya_Z(&p), Err(Error::DegenerateParameters(_))));
    }

    #[test]
    fn izergin_single_site() {
        let (l, v, e) = (c(0.61), c(0.12), c(0.5));
        let want = sh(e) / sh(l - v + e / 2.0);
        assert!(rel_err(izergin_Z(&[l], &[v], e).unwrap(), want) < 1e-14);
    }

    #[test]
    fn izergin_matches_column_contraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            let p = draw(&mut rng, n);
            let a = izergin_Z(&p.lambdas, &p.nus, p.eta).unwrap();
            let b = contract_column_Z(&p.lambdas, &p.nus, p.eta).unwrap();
            assert!(rel_err(a, b) < 1e-10, "n={n}");
        }
    }

    #[test]
    fn izergin_residue_recursion() {
        // Near ν₁ = λ₁ − η/2 the N-size value factorizes onto the (N−1)-size one.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = draw(&mut rng, 3);
        let (l, eta) = (&p.lambdas, p.eta);
        let delta = 1e-6;
        let mut nus = p.nus.clone();
        nus[0] = l[0] - eta / 2.0 + delta;
        let full = izergin_Z(l, &nus, eta).unwrap();
        let reduced = izergin_Z(&l[1..], &nus[1..], eta).unwrap();
        let nu1 = l[0] - eta / 2.0;
        // With ν₁ → λ₁ − η/2 the φ row/column of (λ₁, ν₁) dominates.
        let mut fac = c(1.0);
        for k in 1..3 {
            fac *= sh(l[0] - nus[k] - eta / 2.0) * sh(l[k] - nu1 - eta / 2.0) / (sh(nu1 - nus[k]) * sh(l[k] - l[0]));
        }
        let want = fac * reduced;
        assert!(rel_err(full, want) < 1e-4, "{full} vs {want}");
    }

    #[test]
    fn phi_matrix_entries() {
        let (l, v, e, z) = (c(0.3), c(0.45), c(0.5), c(0.8));
        let m1 = phi_matrix_homogeneous(l, v, e, z, 1).unwrap();
        assert!(rel_err(m1[(0, 0)], chi_entry(l, v, e, z).unwrap()) < 1e-14);
        let m = phi_matrix_homogeneous(l, v, e, z, 3).unwrap();
        let h = 1e-5;
        let fd = (chi_entry(l + h, v, e, z).unwrap() - chi_entry(l - h, v, e, z).unwrap()) / (2.0 * h);
        assert!(rel_err(m[(1, 0)], fd) < 1e-7);
        let fd = (chi_entry(l, v + h, e, z).unwrap() - chi_entry(l, v - h, e, z).unwrap()) / (2.0 * h);
        assert!(rel_err(m[(0, 1)], fd) < 1e-7);
    }
}
