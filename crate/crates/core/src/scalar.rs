//! Scalar helpers shared by the closed-form modules.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Magnitude below which a denominator in a closed-form expression is
/// considered vanishing.
pub const GUARD_TOL: f64 = 1e-12;

pub fn sh(x: C64) -> C64 {
    x.sinh()
}

/// `sh² x`.
pub fn sh2(x: C64) -> C64 {
    let s = x.sinh();
    s * s
}

pub fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Returns `den` unchanged, or `SingularParameters` naming `what` when it is
/// below [`GUARD_TOL`].
pub fn nonzero(den: C64, what: impl FnOnce() -> String) -> Result<C64> {
    if den.norm() < GUARD_TOL || !den.is_finite() {
        return Err(Error::SingularParameters(format!("{} = {den:e}", what())));
    }
    Ok(den)
}

/// Product of denominator factors, each checked with [`nonzero`].
pub fn nonzero_product(factors: impl IntoIterator<Item = C64>, what: impl Fn() -> String) -> Result<C64> {
    factors.into_iter().try_fold(c(1.0), |acc, f| Ok(acc * nonzero(f, &what)?))
}

pub fn checked_div(num: C64, den: C64, what: impl FnOnce() -> String) -> Result<C64> {
    Ok(num / nonzero(den, what)?)
}

/// Product over an iterator of fallible factors; empty products are 1.
pub fn try_product(factors: impl IntoIterator<Item = Result<C64>>) -> Result<C64> {
    factors.into_iter().try_fold(c(1.0), |acc, f| Ok(acc * f?))
}

pub fn product(factors: impl IntoIterator<Item = C64>) -> C64 {
    factors.into_iter().fold(c(1.0), |acc, f| acc * f)
}

/// `|a − b| / max(|b|, floor)`.
pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
