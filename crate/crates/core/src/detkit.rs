//! Dense complex determinants: LU with partial pivoting, minors, and the
//! generalized Laplace expansion along two "operator" columns.

use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::jets::Series2;

/// Pivots below this magnitude make [`lu_det`] return exactly zero.
pub const PIVOT_UNDERFLOW: f64 = 1e-300;

/// Row-major complex matrix. Usually square; the Φ block handed to
/// [`laplace_two_column_det`] is `n × (n − 2)`.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Like [`from_fn`](Self::from_fn) but the entry closure may fail.
    pub fn try_from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Result<C64>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j)?);
            }
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        Self::from_fn(self.rows, rhs.cols, |i, j| {
            (0..self.cols).map(|k| self[(i, k)] * rhs[(k, j)]).sum()
        })
    }

    /// The submatrix on the listed rows and columns, in the listed order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        Self::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>12.5e}{:+.5e}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A product kept as `exp(log_mag) · phase`, so long products of small or
/// large factors neither underflow nor overflow until the final read-out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogProduct {
    log_mag: f64,
    phase: C64,
    zero: bool,
}

impl Default for LogProduct {
    fn default() -> Self {
        Self::one()
    }
}

impl LogProduct {
    pub fn one() -> Self {
        Self { log_mag: 0.0, phase: C64::new(1.0, 0.0), zero: false }
    }

    pub fn from_value(z: C64) -> Self {
        let mut p = Self::one();
        p.mul(z);
        p
    }

    pub fn mul(&mut self, z: C64) {
        let r = z.norm();
        if r == 0.0 {
            self.zero = true;
            return;
        }
        self.log_mag += r.ln();
        self.phase *= z / r;
    }

    /// Division by zero is the caller's problem; guards live upstream.
    pub fn div(&mut self, z: C64) {
        let r = z.norm();
        self.log_mag -= r.ln();
        self.phase *= (z / r).conj();
    }

    pub fn mul_product(&mut self, other: &LogProduct) {
        self.zero |= other.zero;
        self.log_mag += other.log_mag;
        self.phase *= other.phase;
    }

    pub fn div_product(&mut self, other: &LogProduct) {
        self.log_mag -= other.log_mag;
        self.phase *= other.phase.conj();
    }

    pub fn log_magnitude(&self) -> f64 {
        if self.zero { f64::NEG_INFINITY } else { self.log_mag }
    }

    pub fn value(&self) -> C64 {
        if self.zero {
            return C64::new(0.0, 0.0);
        }
        self.phase * self.log_mag.exp()
    }
}

/// LU factorisation with partial pivoting, determinant accumulated as
/// log-magnitude plus phase.
pub fn lu_log_det(m: &DenseMatrix) -> LogProduct {
    assert!(m.is_square(), "determinant of a {}x{} matrix", m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut det = LogProduct::one();
    for k in 0..n {
        let (p, pmag) = (k..n)
            .map(|i| (i, a[(i, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pmag < PIVOT_UNDERFLOW {
            return LogProduct::from_value(C64::new(0.0, 0.0));
        }
        if p != k {
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            det.mul(C64::new(-1.0, 0.0));
        }
        let pivot = a[(k, k)];
        det.mul(pivot);
        for i in (k + 1)..n {
            let f = a[(i, k)] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in (k + 1)..n {
                let t = a[(k, j)];
                a[(i, j)] -= f * t;
            }
        }
    }
    det
}

pub fn lu_det(m: &DenseMatrix) -> C64 {
    match m.rows {
        0 => return C64::new(1.0, 0.0),
        1 => return m[(0, 0)],
        _ => {}
    }
    lu_log_det(m).value()
}

/// Determinant of the submatrix left after deleting `drop_rows` and
/// `drop_cols`; survivors keep their original order. The empty minor is 1.
pub fn minor_det(m: &DenseMatrix, drop_rows: &[usize], drop_cols: &[usize]) -> Result<C64> {
    let (rows, cols) = minor_indices(m, drop_rows, drop_cols)?;
    Ok(lu_det(&m.select(&rows, &cols)))
}

fn minor_indices(
    m: &DenseMatrix,
    drop_rows: &[usize],
    drop_cols: &[usize],
) -> Result<(Vec<usize>, Vec<usize>)> {
    for &r in drop_rows {
        if r >= m.rows {
            return Err(Error::IndexOutOfRange { what: "row", value: r, lo: 0, hi: m.rows - 1 });
        }
    }
    for &c in drop_cols {
        if c >= m.cols {
            return Err(Error::IndexOutOfRange { what: "column", value: c, lo: 0, hi: m.cols - 1 });
        }
    }
    let rows: Vec<usize> = (0..m.rows).filter(|i| !drop_rows.contains(i)).collect();
    let cols: Vec<usize> = (0..m.cols).filter(|j| !drop_cols.contains(j)).collect();
    if rows.len() != cols.len() {
        return Err(Error::SizeMismatch(format!(
            "minor would be {}x{}",
            rows.len(),
            cols.len()
        )));
    }
    Ok((rows, cols))
}

/// Sign attached to the term `u_p · v_q` when rows `p ≠ q` (0-based) are
/// moved into the two leading columns `(u | v)` of an `n × n` determinant.
pub fn laplace_sign(p: usize, q: usize) -> f64 {
    let block = if (p + q).is_multiple_of(2) { -1.0 } else { 1.0 };
    if p < q { block } else { -block }
}

/// Expands `det(u | v | block)` along its first two columns, where `u_p v_q`
/// is supplied by `pair(p, q)` and `block` is `n × (n − 2)`. Terms are summed
/// in row-major `(p, q)` order.
pub fn laplace_two_column(
    block: &DenseMatrix,
    mut pair: impl FnMut(usize, usize) -> Result<C64>,
) -> Result<C64> {
    let n = block.rows();
    if n < 2 || block.cols() + 2 != n {
        return Err(Error::SizeMismatch(format!(
            "two-column expansion needs an n x (n-2) block, got {}x{}",
            block.rows(),
            block.cols()
        )));
    }
    let all_cols: Vec<usize> = (0..block.cols()).collect();
    let mut total = C64::new(0.0, 0.0);
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let rows: Vec<usize> = (0..n).filter(|&i| i != p && i != q).collect();
            let minor = lu_det(&block.select(&rows, &all_cols));
            total += laplace_sign(p, q) * pair(p, q)? * minor;
        }
    }
    Ok(total)
}

/// `det(∂_{ε₁}^{j−1} | ∂_{ε₂}^{j−1} | block) f |_{ε=0}` for a jet `f` in
/// `(ε₁, ε₂)` carrying orders at least `(n − 1, n − 1)`.
pub fn laplace_two_column_det(f: &Series2, block: &DenseMatrix) -> Result<C64> {
    laplace_two_column(block, |p, q| f.partial_coefficient(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DenseMatrix {
        DenseMatrix::from_fn(r, c, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    /// Cofactor expansion along the first row; exponential, test-only.
    fn cofactor_det(m: &DenseMatrix) -> C64 {
        let n = m.rows();
        if n == 0 {
            return C64::new(1.0, 0.0);
        }
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..n {
            let rows: Vec<usize> = (1..n).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[(0, j)] * cofactor_det(&m.select(&rows, &cols));
        }
        acc
    }

    #[test]
    fn small_cases() {
        let x = C64::new(0.3, -1.7);
        assert_eq!(lu_det(&DenseMatrix::from_rows(&[vec![x]])), x);
        assert!((lu_det(&DenseMatrix::identity(5)) - 1.0).norm() < 1e-15);
        let singular = DenseMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)],
            vec![C64::new(2.0, 0.0), C64::new(4.0, 0.0)],
        ]);
        assert_eq!(lu_det(&singular), C64::new(0.0, 0.0));
    }

    #[test]
    fn lu_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=6 {
            for _ in 0..5 {
                let m = random_matrix(&mut rng, n, n);
                let (a, b) = (lu_det(&m), cofactor_det(&m));
                assert!((a - b).norm() <= 1e-11 * b.norm().max(1e-300), "n={n}");
            }
        }
    }

    #[test]
    fn product_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_matrix(&mut rng, 3, 3);
            let b = random_matrix(&mut rng, 3, 3);
            let lhs = lu_det(&a.matmul(&b));
            let rhs = lu_det(&a) * lu_det(&b);
            assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
        }
    }

    #[test]
    fn huge_entries_do_not_overflow_the_accumulator() {
        let n = 40;
        let m = DenseMatrix::from_fn(n, n, |i, j| {
            if i == j { C64::new(1e20, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let ld = lu_log_det(&m);
        assert!((ld.log_magnitude() - 800.0 * 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn minors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 4, 4);
        assert_eq!(minor_det(&m, &[0, 1, 3], &[0, 2, 3]).unwrap(), m[(2, 1)]);
        assert!((minor_det(&m, &[], &[]).unwrap() - lu_det(&m)).norm() < 1e-14);
        let got = minor_det(&m, &[1, 3], &[1, 2]).unwrap();
        let want = m[(0, 0)] * m[(2, 3)] - m[(0, 3)] * m[(2, 0)];
        assert!((got - want).norm() < 1e-14);
        assert!((minor_det(&m, &[3, 1], &[2, 1]).unwrap() - got).norm() < 1e-15);
        assert!(matches!(minor_det(&m, &[4], &[0]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn two_column_base_case() {
        // n = 2: ∂_{ε₂} f − ∂_{ε₁} f
        let base = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let e1 = Series2::variable(0, base, (1, 1));
        let e2 = Series2::variable(1, base, (1, 1));
        let f = &e1.scale(C64::new(3.0, 0.0)) + &e2.scale(C64::new(5.0, 0.0));
        let got = laplace_two_column_det(&f, &DenseMatrix::zeros(2, 0)).unwrap();
        assert!((got - C64::new(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn scalar_columns_reproduce_the_determinant() {
        // f = exp(a ε₁ + b ε₂) gives ∂₁^{p}∂₂^{q} f = aᵖ bᑫ: the operator columns
        // become the numeric columns (a^{j−1}) and (b^{j−1}).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=6 {
            for _ in 0..5 {
                let a = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.5..0.5));
                let b = C64::new(rng.gen_range(-1.5..1.5), rng.gen_range(-0.5..0.5));
                let block = random_matrix(&mut rng, n, n - 2);
                let base = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                let ord = (n - 1, n - 1);
                let arg = &Series2::variable(0, base, ord).scale(a) + &Series2::variable(1, base, ord).scale(b);
                let got = laplace_two_column_det(&arg.exp(), &block).unwrap();
                let full = DenseMatrix::from_fn(n, n, |i, j| match j {
                    0 => a.powu(i as u32),
                    1 => b.powu(i as u32),
                    _ => block[(i, j - 2)],
                });
                let want = lu_det(&full);
                assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0), "n={n}");
            }
        }
    }

    #[test]
    fn f_without_second_variable_reduces_to_a_cofactor() {
        // The ε₂ column is (f(0), 0, …, 0)ᵀ, so the result is −f(0) times the
        // determinant of (u | block) on rows 1..n.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for n in 3..=5 {
            let a = C64::new(0.7, 0.0);
            let f = Series2::variable(0, base, (n - 1, n - 1)).scale(a).exp();
            let block = random_matrix(&mut rng, n, n - 2);
            let got = laplace_two_column_det(&f, &block).unwrap();
            let rest = DenseMatrix::from_fn(n - 1, n - 1, |i, j| match j {
                0 => a.powu(i as u32 + 1),
                _ => block[(i + 1, j - 1)],
            });
            let want = -lu_det(&rest);
            assert!((got - want).norm() < 1e-12 * want.norm().max(1.0), "n={n}");
        }
    }

    #[test]
    fn swap_symmetric_f_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let base = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for n in 2..=6 {
            let ord = (n - 1, n - 1);
            let s = &Series2::variable(0, base, ord) + &Series2::variable(1, base, ord);
            let p = &Series2::variable(0, base, ord) * &Series2::variable(1, base, ord);
            let f = &s.sinh() + &p.exp();
            let block = random_matrix(&mut rng, n, n - 2);
            let got = laplace_two_column_det(&f, &block).unwrap();
            assert!(got.norm() < 1e-12, "n={n}: {got}");
        }
    }

    #[test]
    fn order_too_small() {
        let base = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let f = Series2::constant(C64::new(1.0, 0.0), base, (1, 1));
        let block = DenseMatrix::zeros(3, 1);
        assert!(matches!(laplace_two_column_det(&f, &block), Err(Error::OrderExceeded { .. })));
    }
}
