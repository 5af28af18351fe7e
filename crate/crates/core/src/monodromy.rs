//! Brute-force ground truth on the `2^N`-dimensional spin space.
//!
//! A basis state is a bitmask: bit `k − 1` set means site `k` is ↓, so the
//! all-up state `w⁺` has index 0 and the all-down state `w⁻` index `2^N − 1`.
//!
//! Every operator here is an ordered product of local factors acting on
//! auxiliary ⊗ quantum space. [`Chain`] applies such a product to a vector in
//! `O(len · 2^N)`; dense operators are obtained by applying it to basis
//! vectors.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::scalar::{c, checked_div, nonzero, product, sh, sh2, try_product};
use crate::vertex::{conj_l_matrix, k_plus, l_matrix, r_matrix, Mat2, Mat4, ModelParams};

/// Largest lattice width the dense oracle accepts.
pub const MAX_ORACLE_N: usize = 8;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORACLE_N {
        return Err(Error::SizeMismatch(format!("oracle supports 1 <= N <= {MAX_ORACLE_N}, got {n}")));
    }
    Ok(())
}

fn check_index(what: &'static str, value: usize, lo: usize, hi: usize) -> Result<()> {
    if value < lo || value > hi {
        return Err(Error::IndexOutOfRange { what, value, lo, hi });
    }
    Ok(())
}

/// Amplitudes over the `2^n` spin configurations of `n` sites.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        Self { n, amps: vec![ZERO; 1 << n] }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut v = Self::zeros(n);
        v.amps[index] = c(1.0);
        v
    }

    /// `w⁺`: every site up.
    pub fn all_up(n: usize) -> Self {
        Self::basis(n, 0)
    }

    /// `w⁻`: every site down.
    pub fn all_down(n: usize) -> Self {
        Self::basis(n, (1 << n) - 1)
    }

    pub fn sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    /// `⟨w⁻|v⟩`.
    pub fn all_down_amplitude(&self) -> C64 {
        self.amps[self.amps.len() - 1]
    }

    pub fn max_abs(&self) -> f64 {
        self.amps.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn axpy(&mut self, a: C64, x: &StateVector) {
        for (y, x) in self.amps.iter_mut().zip(&x.amps) {
            *y += a * x;
        }
    }

    /// Max-norm of `self − other`, relative to the max-norm of `self`.
    pub fn rel_diff(&self, other: &StateVector) -> f64 {
        let d = self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        d / self.max_abs().max(1e-300)
    }

    fn apply_site(&mut self, site: usize, m: &Mat2) {
        let bit = 1 << site;
        for x in 0..self.amps.len() {
            if x & bit != 0 {
                continue;
            }
            let (u, d) = (self.amps[x], self.amps[x | bit]);
            self.amps[x] = m.0[0][0] * u + m.0[0][1] * d;
            self.amps[x | bit] = m.0[1][0] * u + m.0[1][1] * d;
        }
    }
}

/// A dense operator on the spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<C64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c(1.0);
        }
        m
    }

    /// Assembles the operator column by column from its action on basis states.
    pub fn from_action(n: usize, mut act: impl FnMut(&StateVector) -> Result<StateVector>) -> Result<Self> {
        let dim = 1 << n;
        let mut m = Self::zeros(dim);
        for j in 0..dim {
            let col = act(&StateVector::basis(n, j))?;
            for i in 0..dim {
                m.data[i * dim + j] = col.amps[i];
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(v.dim(), self.dim);
        let mut out = StateVector { n: v.n, amps: vec![ZERO; self.dim] };
        for i in 0..self.dim {
            out.amps[i] = (0..self.dim).map(|j| self.data[i * self.dim + j] * v.amps[j]).sum();
        }
        out
    }

    pub fn matmul(&self, rhs: &Operator) -> Operator {
        let d = self.dim;
        let mut out = Operator::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let x = self.data[i * d + k];
                if x == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += x * rhs.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn scale(&self, a: C64) -> Operator {
        Operator { dim: self.dim, data: self.data.iter().map(|x| a * x).collect() }
    }

    pub fn add(&self, rhs: &Operator) -> Operator {
        Operator { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, rhs: &Operator) -> Operator {
        self.add(&rhs.scale(c(-1.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Four operators arranged as a 2×2 grid over the auxiliary space.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub blocks: [[Operator; 2]; 2],
}

impl BlockOperator {
    pub fn block(&self, a: usize, b: usize) -> &Operator {
        &self.blocks[a][b]
    }
}

/// One factor of an ordered product on auxiliary ⊗ quantum space.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor {
    /// A 4×4 matrix coupling the auxiliary space to site `site` (0-based).
    Vertex { site: usize, m: Mat4 },
    /// A 2×2 matrix on the auxiliary space alone.
    Aux(Mat2),
    /// A 2×2 matrix on one site alone.
    Site { site: usize, m: Mat2 },
}

/// A two-component vector over the auxiliary space.
pub type AuxState = [StateVector; 2];

/// An ordered product; `factors[0]` acts first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chain {
    pub factors: Vec<Factor>,
}

impl Chain {
    pub fn apply(&self, state: &mut AuxState) {
        for f in &self.factors {
            match f {
                Factor::Vertex { site, m } => apply_vertex(state, *site, m),
                Factor::Aux(m) => {
                    let (u, d) = (state[0].clone(), state[1].clone());
                    for (out, row) in state.iter_mut().zip(m.0.iter()) {
                        for (x, (a, b)) in out.amps.iter_mut().zip(u.amps.iter().zip(&d.amps)) {
                            *x = row[0] * a + row[1] * b;
                        }
                    }
                }
                Factor::Site { site, m } => {
                    state[0].apply_site(*site, m);
                    state[1].apply_site(*site, m);
                }
            }
        }
    }

    /// The quantum operator in auxiliary block `(a, b)` applied to `v`.
    pub fn apply_element(&self, a: usize, b: usize, v: &StateVector) -> StateVector {
        let mut state = [StateVector::zeros(v.n), StateVector::zeros(v.n)];
        state[b] = v.clone();
        self.apply(&mut state);
        let [s0, s1] = state;
        if a == 0 { s0 } else { s1 }
    }

    /// Dense 2×2 block form.
    pub fn to_block(&self, n: usize) -> BlockOperator {
        let dim = 1 << n;
        let mut blocks = [[Operator::zeros(dim), Operator::zeros(dim)], [Operator::zeros(dim), Operator::zeros(dim)]];
        for b in 0..2 {
            for j in 0..dim {
                let mut state = [StateVector::zeros(n), StateVector::zeros(n)];
                state[b] = StateVector::basis(n, j);
                self.apply(&mut state);
                for (a, row) in blocks.iter_mut().enumerate() {
                    for i in 0..dim {
                        row[b].data[i * dim + j] = state[a].amps[i];
                    }
                }
            }
        }
        BlockOperator { blocks }
    }
}

fn apply_vertex(state: &mut AuxState, site: usize, m: &Mat4) {
    let bit = 1 << site;
    let dim = state[0].amps.len();
    for x in 0..dim {
        if x & bit != 0 {
            continue;
        }
        let old = [
            [state[0].amps[x], state[0].amps[x | bit]],
            [state[1].amps[x], state[1].amps[x | bit]],
        ];
        for a in 0..2 {
            for t in 0..2 {
                let mut acc = ZERO;
                for b in 0..2 {
                    for s in 0..2 {
                        acc += m.0[2 * a + t][2 * b + s] * old[b][s];
                    }
                }
                state[a].amps[if t == 0 { x } else { x | bit }] = acc;
            }
        }
    }
}

/// `T(λ) = L_N ⋯ L_1`, site 1 acting first.
pub fn one_row_chain(params: &ModelParams, lambda: C64) -> Result<Chain> {
    let factors = params
        .nus
        .iter()
        .enumerate()
        .map(|(site, &nu)| Ok(Factor::Vertex { site, m: l_matrix(lambda, nu, params.eta)? }))
        .collect::<Result<_>>()?;
    Ok(Chain { factors })
}

/// `T(λ)` transposed in the auxiliary space. The factors act on distinct
/// sites, so the partial transpose reverses their order.
pub fn one_row_transposed_chain(params: &ModelParams, lambda: C64) -> Result<Chain> {
    let mut chain = one_row_chain(params, lambda)?;
    chain.factors.reverse();
    for f in &mut chain.factors {
        if let Factor::Vertex { m, .. } = f {
            *m = m.aux_transpose();
        }
    }
    Ok(chain)
}

/// `σ² T(−λ) σ² = (σ²L_N(−λ)σ²) ⋯ (σ²L_1(−λ)σ²)`, optionally with `½(1+σ³)`
/// on the auxiliary space inserted just before the factor of site
/// `aux_projector_before` (1-based).
pub fn returning_row_chain(params: &ModelParams, lambda: C64, aux_projector_before: Option<usize>) -> Result<Chain> {
    let mut factors = Vec::with_capacity(params.n() + 1);
    for (site, &nu) in params.nus.iter().enumerate() {
        if aux_projector_before == Some(site + 1) {
            factors.push(Factor::Aux(Mat2::proj_up()));
        }
        factors.push(Factor::Vertex { site, m: conj_l_matrix(lambda, nu, params.eta)? });
    }
    Ok(Chain { factors })
}

#[allow(non_snake_case)]
pub fn build_one_row_T(params: &ModelParams, lambda: C64) -> Result<BlockOperator> {
    check_size(params.n())?;
    Ok(one_row_chain(params, lambda)?.to_block(params.n()))
}

/// Site projectors decorating a double-row element `Σ_c T_{ca} k_c S_{cb}`:
/// `pre` acts before `S`, `mid` between `S` and `T`, `post` after `T`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Decoration {
    pub pre: Vec<(usize, Mat2)>,
    pub mid: Vec<(usize, Mat2)>,
    pub post: Vec<(usize, Mat2)>,
    /// 1-based site before which `½(1+σ³)` is inserted on the returning row.
    pub aux_projector_before: Option<usize>,
}

impl Decoration {
    /// `ℱ`: site 1 up on input, down between the two rows.
    pub fn flip_first_column() -> Self {
        Self { pre: vec![(0, Mat2::proj_up())], mid: vec![(0, Mat2::proj_down())], ..Self::default() }
    }

    /// `𝒢₂`: site 2 up between the two rows, down on output.
    pub fn flip_second_column() -> Self {
        Self { mid: vec![(1, Mat2::proj_up())], post: vec![(1, Mat2::proj_down())], ..Self::default() }
    }

    /// `ℰ_L`: site `L` up between the rows and the auxiliary projector before
    /// site `L` on the returning row.
    pub fn bottom_row_flip(l: usize) -> Self {
        Self { mid: vec![(l - 1, Mat2::proj_up())], aux_projector_before: Some(l), ..Self::default() }
    }
}

/// Element `(a, b)` of `U^t(λ) = T^t(λ) K₊(λ) σ²T(−λ)σ²`, decorated, applied to `v`.
pub fn apply_double_row(
    params: &ModelParams,
    lambda: C64,
    (a, b): (usize, usize),
    deco: &Decoration,
    v: &StateVector,
) -> Result<StateVector> {
    let n = params.n();
    let s = returning_row_chain(params, lambda, deco.aux_projector_before)?;
    let t = one_row_transposed_chain(params, lambda)?;
    let k = k_plus(lambda, params.eta, params.zeta_plus);

    let mut w = v.clone();
    for (site, m) in &deco.pre {
        w.apply_site(*site, m);
    }
    let mut state = [StateVector::zeros(n), StateVector::zeros(n)];
    state[b] = w;
    s.apply(&mut state);
    for (ci, comp) in state.iter_mut().enumerate() {
        let kc = k.0[ci][ci];
        comp.amps.iter_mut().for_each(|x| *x *= kc);
        for (site, m) in &deco.mid {
            comp.apply_site(*site, m);
        }
    }
    t.apply(&mut state);
    let [s0, s1] = state;
    let mut out = if a == 0 { s0 } else { s1 };
    for (site, m) in &deco.post {
        out.apply_site(*site, m);
    }
    Ok(out)
}

/// `U^t(λ)` with `𝒜` upper-left, `𝒞` upper-right, `ℬ` lower-left, `𝒟`
/// lower-right, built by dense products of the one-row blocks.
#[allow(non_snake_case)]
pub fn build_double_row_U(params: &ModelParams, lambda: C64) -> Result<BlockOperator> {
    check_size(params.n())?;
    let t = build_one_row_T(params, lambda)?;
    let tm = build_one_row_T(params, -lambda)?;
    let neg = |o: &Operator| o.scale(c(-1.0));
    // σ² T(−λ) σ² = [[D̃, −C̃], [−B̃, Ã]]
    let s = [[tm.blocks[1][1].clone(), neg(&tm.blocks[1][0])], [neg(&tm.blocks[0][1]), tm.blocks[0][0].clone()]];
    let k = k_plus(lambda, params.eta, params.zeta_plus);
    let elem = |a: usize, b: usize| {
        (0..2).fold(Operator::zeros(1 << params.n()), |acc, ci| {
            acc.add(&t.blocks[ci][a].matmul(&s[ci][b]).scale(k.0[ci][ci]))
        })
    };
    Ok(BlockOperator { blocks: [[elem(0, 0), elem(0, 1)], [elem(1, 0), elem(1, 1)]] })
}

/// Double-row operators of the six-vertex row transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoubleRowElement {
    A,
    B,
    C,
    D,
}

impl DoubleRowElement {
    fn index(self) -> (usize, usize) {
        match self {
            Self::A => (0, 0),
            Self::C => (0, 1),
            Self::B => (1, 0),
            Self::D => (1, 1),
        }
    }
}

pub fn apply_element(params: &ModelParams, lambda: C64, which: DoubleRowElement, v: &StateVector) -> Result<StateVector> {
    apply_double_row(params, lambda, which.index(), &Decoration::default(), v)
}

fn dense_decorated(params: &ModelParams, lambda: C64, deco: &Decoration) -> Result<Operator> {
    check_size(params.n())?;
    Operator::from_action(params.n(), |v| apply_double_row(params, lambda, (1, 0), deco, v))
}

/// `ℱ(λ)`: the `ℬ`-type element whose first-column spin turns down.
#[allow(non_snake_case)]
pub fn build_F(params: &ModelParams, lambda: C64) -> Result<Operator> {
    dense_decorated(params, lambda, &Decoration::flip_first_column())
}

/// `𝒢₂(λ)`: the `ℬ`-type element whose second-column spin turns down.
#[allow(non_snake_case)]
pub fn build_G2(params: &ModelParams, lambda: C64) -> Result<Operator> {
    if params.n() < 2 {
        return Err(Error::IndexOutOfRange { what: "N (needs a second column)", value: params.n(), lo: 2, hi: MAX_ORACLE_N });
    }
    dense_decorated(params, lambda, &Decoration::flip_second_column())
}

/// `ℰ_L(λ)`: the `ℬ`-type element whose returning row turns down at column `L`.
#[allow(non_snake_case)]
pub fn build_EL(params: &ModelParams, lambda: C64, l: usize) -> Result<Operator> {
    check_index("L", l, 1, params.n())?;
    dense_decorated(params, lambda, &Decoration::bottom_row_flip(l))
}

/// `⟨w⁻| ℬ(λ_N) ⋯ ℬ(λ_1) |w⁺⟩`.
#[allow(non_snake_case)]
pub fn contract_Z(params: &ModelParams) -> Result<C64> {
    check_size(params.n())?;
    let mut v = StateVector::all_up(params.n());
    for &lam in &params.lambdas {
        v = apply_element(params, lam, DoubleRowElement::B, &v)?;
    }
    Ok(v.all_down_amplitude())
}

fn contract_with(params: &ModelParams, deco_at: impl Fn(usize) -> Decoration) -> Result<C64> {
    let mut v = StateVector::all_up(params.n());
    for (i, &lam) in params.lambdas.iter().enumerate() {
        v = apply_double_row(params, lam, (1, 0), &deco_at(i + 1), &v)?;
    }
    Ok(v.all_down_amplitude())
}

/// Type I numerator: `ℱ` at row `M`, `𝒢₂` at row `L`, `ℬ` elsewhere.
pub fn contract_psi1(params: &ModelParams, m: usize, l: usize) -> Result<C64> {
    let n = params.n();
    check_size(n)?;
    check_index("M", m, 1, n)?;
    check_index("L", l, 1, n)?;
    if m >= l {
        return Err(Error::OrderingViolation(format!("type I needs M < L, got M = {m}, L = {l}")));
    }
    contract_with(params, |i| match i {
        _ if i == m => Decoration::flip_first_column(),
        _ if i == l => Decoration::flip_second_column(),
        _ => Decoration::default(),
    })
}

/// Type II numerator: `ℱ` at row `M`, `ℰ_L` at the last row, `ℬ` elsewhere.
pub fn contract_psi2(params: &ModelParams, m: usize, l: usize) -> Result<C64> {
    let n = params.n();
    check_size(n)?;
    if n < 2 {
        return Err(Error::IndexOutOfRange { what: "M", value: m, lo: 1, hi: 0 });
    }
    check_index("M", m, 1, n - 1)?;
    check_index("L", l, 1, n)?;
    contract_with(params, |i| match i {
        _ if i == m => Decoration::flip_first_column(),
        _ if i == n => Decoration::bottom_row_flip(l),
        _ => Decoration::default(),
    })
}

/// `T̄(ν, {λ}) = L_{R ν} ⋯ L_{1 ν}` with the row rapidities as quantum sites.
pub fn column_chain(nu: C64, rows: &[C64], eta: C64) -> Result<Chain> {
    let factors = rows
        .iter()
        .enumerate()
        .map(|(site, &lam)| Ok(Factor::Vertex { site, m: r_matrix(lam - nu - eta / 2.0, eta)? }))
        .collect::<Result<_>>()?;
    Ok(Chain { factors })
}

pub fn build_column_monodromy(nu: C64, rows: &[C64], eta: C64) -> Result<BlockOperator> {
    check_size(rows.len())?;
    Ok(column_chain(nu, rows, eta)?.to_block(rows.len()))
}

/// `⟨v⁻| B̄(ν_N) ⋯ B̄(ν_1) |v⁺⟩`, the N×N domain-wall partition function.
#[allow(non_snake_case)]
pub fn contract_column_Z(lambdas: &[C64], nus: &[C64], eta: C64) -> Result<C64> {
    check_size(lambdas.len())?;
    let mut v = StateVector::all_up(lambdas.len());
    for &nu in nus {
        v = column_chain(nu, lambdas, eta)?.apply_element(0, 1, &v);
    }
    Ok(v.all_down_amplitude())
}

/// The two column strings related by spin reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnString {
    /// `⟨v⁺| C̄ ⋯ Ā(ν_p) ⋯ C̄ |v⁻⟩`.
    CA,
    /// `⟨v⁻| B̄ ⋯ D̄(ν_p) ⋯ B̄ |v⁺⟩`.
    BD,
}

/// Column string over `nus` (first entry acting first) with the special
/// operator at 0-based position `special`.
pub fn column_string(nus: &[C64], rows: &[C64], eta: C64, special: usize, form: ColumnString) -> Result<C64> {
    check_size(rows.len())?;
    let r = rows.len();
    let (mut v, plain, odd) = match form {
        ColumnString::CA => (StateVector::all_down(r), (1, 0), (0, 0)),
        ColumnString::BD => (StateVector::all_up(r), (0, 1), (1, 1)),
    };
    for (k, &nu) in nus.iter().enumerate() {
        let (a, b) = if k == special { odd } else { plain };
        v = column_chain(nu, rows, eta)?.apply_element(a, b, &v);
    }
    Ok(match form {
        ColumnString::CA => v.amplitude(0),
        ColumnString::BD => v.all_down_amplitude(),
    })
}

/// Relative mismatch between the two forms of the column string.
pub fn change_relation_residual(nus: &[C64], rows: &[C64], eta: C64, special: usize) -> Result<f64> {
    let ca = column_string(nus, rows, eta, special, ColumnString::CA)?;
    let bd = column_string(nus, rows, eta, special, ColumnString::BD)?;
    Ok((ca - bd).norm() / bd.norm().max(1e-300))
}

/// Identities expressing operator actions on `ℬ`-generated states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionIdentity {
    /// `𝒟(λ_i) ℬ(λ_{i−1}) ⋯ ℬ(λ_1) w⁺` as a sum over removed rapidities.
    DAction,
    /// The same for `𝒜(λ_i)`.
    AAction,
    /// `ℬ(λ_i) ⋯ ℬ(λ_1) w⁺` as a sum over `σ ∈ {±}^i` of one-row `B(σλ)` strings.
    MultiB,
    /// `D̄(ν_i) B̄(ν_{i−1}) ⋯ B̄(ν_1) v⁺` for the column monodromy.
    DbarAction,
}

impl ActionIdentity {
    pub const ALL: [ActionIdentity; 4] = [Self::DAction, Self::AAction, Self::MultiB, Self::DbarAction];

    pub fn name(self) -> &'static str {
        match self {
            Self::DAction => "D_action",
            Self::AAction => "A_action",
            Self::MultiB => "multiB",
            Self::DbarAction => "Dbar_action",
        }
    }
}

fn b_string(params: &ModelParams, lams: &[C64]) -> Result<StateVector> {
    let mut v = StateVector::all_up(params.n());
    for &lam in lams {
        v = apply_element(params, lam, DoubleRowElement::B, &v)?;
    }
    Ok(v)
}

/// Max-norm of LHS − RHS relative to the LHS for the chosen identity, using
/// the first `i` rapidities.
pub fn verify_action_identities(params: &ModelParams, which: ActionIdentity, i: usize) -> Result<f64> {
    let n = params.n();
    check_size(n)?;
    check_index("i", i, 1, n)?;
    let (lhs, rhs) = match which {
        ActionIdentity::DAction => double_row_action(params, i, DoubleRowElement::D)?,
        ActionIdentity::AAction => double_row_action(params, i, DoubleRowElement::A)?,
        ActionIdentity::MultiB => multi_b(params, i)?,
        ActionIdentity::DbarAction => dbar_action(params, i)?,
    };
    Ok(lhs.rel_diff(&rhs))
}

fn double_row_action(params: &ModelParams, i: usize, op: DoubleRowElement) -> Result<(StateVector, StateVector)> {
    let (eta, z) = (params.eta, params.zeta_plus);
    let l = &params.lambdas[..i];
    let li = l[i - 1];
    let lhs = apply_element(params, li, op, &b_string(params, &l[..i - 1])?)?;

    let mut rhs = StateVector::zeros(params.n());
    for (k, &lk) in l.iter().enumerate() {
        // Exchange ratio for row k against the other rows, at the shift ±η.
        let exchange = |shift: C64| {
            try_product(l.iter().enumerate().filter(|&(j, _)| j != k).map(|(j, &lj)| {
                checked_div(sh2(lk + shift) - sh2(lj), sh2(lk) - sh2(lj), || format!("sh²λ_{} − sh²λ_{}", k + 1, j + 1))
            }))
        };
        let column = |x: C64| {
            try_product(params.nus.iter().map(|&nu| {
                checked_div(sh(x - nu - eta / 2.0), sh(x - nu + eta / 2.0), || "sh(λ − ν + η/2)".into())
            }))
        };
        let (t1, t2) = match op {
            DoubleRowElement::D => (
                sh(lk + li) * sh(lk + eta / 2.0 - z)
                    / nonzero(sh2(li) - sh2(lk + eta), || "sh²λ_i − sh²(λ_k+η)".into())?,
                sh(lk - li) * sh(-lk + eta / 2.0 - z)
                    / nonzero(sh2(li) - sh2(lk - eta), || "sh²λ_i − sh²(λ_k−η)".into())?,
            ),
            DoubleRowElement::A => (
                sh(lk + eta / 2.0 - z) / nonzero(sh(lk + li + eta), || "sh(λ_k+λ_i+η)".into())?,
                sh(-lk + eta / 2.0 - z) / nonzero(sh(lk - li - eta), || "sh(λ_k−λ_i−η)".into())?,
            ),
            _ => unreachable!("only A and D actions are expanded"),
        };
        let t1 = t1 * column(lk)? * exchange(eta)?;
        let t2 = t2 * column(-lk)? * exchange(-eta)?;
        let coef = sh(eta) * sh(2.0 * lk + eta) / nonzero(sh(2.0 * lk), || "sh 2λ_k".into())? * (t1 + t2);
        let others: Vec<C64> = l.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &x)| x).collect();
        rhs.axpy(coef, &b_string(params, &others)?);
    }
    Ok((lhs, rhs))
}

fn multi_b(params: &ModelParams, i: usize) -> Result<(StateVector, StateVector)> {
    let (eta, z) = (params.eta, params.zeta_plus);
    let l = &params.lambdas[..i];
    let lhs = b_string(params, l)?;
    let mut rhs = StateVector::zeros(params.n());
    for mask in 0..(1usize << i) {
        let sig: Vec<f64> = (0..i).map(|j| if mask >> j & 1 == 0 { 1.0 } else { -1.0 }).collect();
        let sl: Vec<C64> = l.iter().zip(&sig).map(|(&x, &s)| x * s).collect();
        let mut t = product(sl.iter().zip(&sig).map(|(&x, &s)| -s * sh(-x + eta / 2.0 - z)));
        for &x in &sl {
            for &nu in &params.nus {
                t *= checked_div(sh(-x - nu - eta / 2.0), sh(-x - nu + eta / 2.0), || "sh(−σλ − ν + η/2)".into())?;
            }
        }
        for j in 0..i {
            for k in (j + 1)..i {
                t *= checked_div(sh(sl[j] + sl[k] - eta), sh(sl[j] + sl[k]), || "sh(σ_jλ_j + σ_kλ_k)".into())?;
            }
        }
        let mut v = StateVector::all_up(params.n());
        for &x in &sl {
            v = one_row_chain(params, x)?.apply_element(0, 1, &v);
        }
        rhs.axpy(t, &v);
    }
    let pre = try_product(l.iter().map(|&x| checked_div(sh(2.0 * x + eta), sh(2.0 * x), || "sh 2λ".into())))?;
    rhs.amps.iter_mut().for_each(|x| *x *= pre);
    Ok((lhs, rhs))
}

fn dbar_action(params: &ModelParams, i: usize) -> Result<(StateVector, StateVector)> {
    let (eta, l, n) = (params.eta, &params.lambdas, &params.nus);
    let bbar = |nus: &[C64]| -> Result<StateVector> {
        let mut v = StateVector::all_up(l.len());
        for &nu in nus {
            v = column_chain(nu, l, eta)?.apply_element(0, 1, &v);
        }
        Ok(v)
    };
    let lhs = column_chain(n[i - 1], l, eta)?.apply_element(1, 1, &bbar(&n[..i - 1])?);
    let mut rhs = StateVector::zeros(l.len());
    for k in 0..i {
        let nk = n[k];
        let mut coef = checked_div(sh(eta), sh(n[i - 1] - nk + eta), || "sh(ν_i − ν_k + η)".into())?;
        for j in (0..i).filter(|&j| j != k) {
            coef *= checked_div(sh(n[j] - nk + eta), sh(n[j] - nk), || format!("sh(ν_{} − ν_{})", j + 1, k + 1))?;
        }
        for &lj in l {
            coef *= checked_div(sh(lj - nk - eta / 2.0), sh(lj - nk + eta / 2.0), || "sh(λ − ν + η/2)".into())?;
        }
        let others: Vec<C64> = (0..i).filter(|&j| j != k).map(|j| n[j]).collect();
        rhs.axpy(coef, &bbar(&others)?);
    }
    Ok((lhs, rhs))
}
