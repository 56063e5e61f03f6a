//! Integer cubic and quadratic forms.
//!
//! Forms are stored sparsely as maps from sorted 1-based index tuples to
//! integer coefficients. All evaluation is exact in `i128`; rank and
//! signature use arbitrary-precision integers and rationals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};

/// A cubic form `C(x) = Σ coeff · x_i x_j x_k` over sorted triples `i ≤ j ≤ k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CubicForm {
    n: usize,
    monomials: BTreeMap<[usize; 3], i64>,
}

/// A quadratic form `Q(x) = Σ coeff · x_i x_j` over sorted pairs `i ≤ j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticForm {
    n: usize,
    monomials: BTreeMap<[usize; 2], i64>,
}

fn check_index(n: usize, i: usize) -> Result<()> {
    if i == 0 || i > n {
        return Err(Error::Invalid(format!("index {i} outside [1, {n}]")));
    }
    Ok(())
}

impl CubicForm {
    /// Builds a cubic from `([i, j, k], coeff)` terms. Indices are 1-based and
    /// must satisfy `i ≤ j ≤ k`. Repeated triples are summed.
    pub fn new(n: usize, terms: impl IntoIterator<Item = ([usize; 3], i64)>) -> Result<Self> {
        let mut monomials = BTreeMap::new();
        for (idx, c) in terms {
            for &i in &idx {
                check_index(n, i)?;
            }
            if !(idx[0] <= idx[1] && idx[1] <= idx[2]) {
                return Err(Error::Invalid(format!("cubic indices {idx:?} not sorted")));
            }
            *monomials.entry(idx).or_insert(0i64) += c;
        }
        monomials.retain(|_, c| *c != 0);
        Ok(Self { n, monomials })
    }

    /// `Σ a_i x_i³`.
    pub fn diagonal(coeffs: &[i64]) -> Self {
        let n = coeffs.len();
        Self::new(n, coeffs.iter().enumerate().map(|(i, &a)| ([i + 1, i + 1, i + 1], a)))
            .expect("diagonal indices are valid")
    }

    pub fn zero(n: usize) -> Self {
        Self { n, monomials: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn monomials(&self) -> impl Iterator<Item = ([usize; 3], i64)> + '_ {
        self.monomials.iter().map(|(k, v)| (*k, *v))
    }

    /// Sum of absolute coefficients.
    pub fn height(&self) -> i128 {
        self.monomials.values().map(|c| (*c as i128).abs()).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.monomials.keys().all(|[i, j, k]| i == j && j == k)
    }

    /// `6·c_ijk` for the symmetric coefficient tensor (always an integer).
    pub fn symmetric_coeff6(&self, i: usize, j: usize, k: usize) -> i64 {
        let mut idx = [i, j, k];
        idx.sort_unstable();
        let a = self.monomials.get(&idx).copied().unwrap_or(0);
        let mult = if idx[0] == idx[2] {
            1
        } else if idx[0] == idx[1] || idx[1] == idx[2] {
            3
        } else {
            6
        };
        a * (6 / mult)
    }

    pub fn eval(&self, x: &[i64]) -> Result<i128> {
        check_dim(self.n, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[i64]) -> i128 {
        self.monomials
            .iter()
            .map(|([i, j, k], &c)| c as i128 * x[i - 1] as i128 * x[j - 1] as i128 * x[k - 1] as i128)
            .sum()
    }

    #[inline]
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.monomials.iter().map(|([i, j, k], &c)| c as f64 * x[i - 1] * x[j - 1] * x[k - 1]).sum()
    }

    /// The bilinear forms `B_i(x; y) = 6 Σ_{j,k} c_ijk x_j y_k`.
    pub fn bilinear(&self, x: &[i64], y: &[i64]) -> Result<Vec<i128>> {
        check_dim(self.n, x.len())?;
        check_dim(self.n, y.len())?;
        let mut b = vec![0i128; self.n];
        for (&idx, &c) in &self.monomials {
            // each of the 6 orderings of the triple carries weight c
            for &(p, q, r) in &[(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
                let (i, j, k) = (idx[p] - 1, idx[q] - 1, idx[r] - 1);
                b[i] += c as i128 * x[j] as i128 * y[k] as i128;
            }
        }
        Ok(b)
    }

    /// Matrix `M(x)` with `B(x; y) = M(x) y`.
    pub fn bilinear_matrix(&self, x: &[i64]) -> Result<Vec<Vec<i128>>> {
        check_dim(self.n, x.len())?;
        let mut m = vec![vec![0i128; self.n]; self.n];
        for (&idx, &c) in &self.monomials {
            for &(p, q, r) in &[(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)] {
                let (i, j, k) = (idx[p] - 1, idx[q] - 1, idx[r] - 1);
                m[i][k] += c as i128 * x[j] as i128;
            }
        }
        Ok(m)
    }

    /// Exact gradient by the product rule on each monomial.
    pub fn gradient(&self, x: &[i64]) -> Result<Vec<i128>> {
        check_dim(self.n, x.len())?;
        let mut g = vec![0i128; self.n];
        for (&idx, &c) in &self.monomials {
            for t in 0..3 {
                let rest: i128 = (0..3).filter(|&u| u != t).map(|u| x[idx[u] - 1] as i128).product();
                g[idx[t] - 1] += c as i128 * rest;
            }
        }
        Ok(g)
    }

    pub fn gradient_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n];
        for (&idx, &c) in &self.monomials {
            for t in 0..3 {
                let rest: f64 = (0..3).filter(|&u| u != t).map(|u| x[idx[u] - 1]).product();
                g[idx[t] - 1] += c as f64 * rest;
            }
        }
        g
    }
}

impl QuadraticForm {
    /// Builds a quadric from `([i, j], coeff)` terms, `i ≤ j`, 1-based.
    pub fn new(n: usize, terms: impl IntoIterator<Item = ([usize; 2], i64)>) -> Result<Self> {
        let mut monomials = BTreeMap::new();
        for (idx, c) in terms {
            check_index(n, idx[0])?;
            check_index(n, idx[1])?;
            if idx[0] > idx[1] {
                return Err(Error::Invalid(format!("quadric indices {idx:?} not sorted")));
            }
            *monomials.entry(idx).or_insert(0i64) += c;
        }
        monomials.retain(|_, c| *c != 0);
        Ok(Self { n, monomials })
    }

    /// `Σ d_i x_i²`.
    pub fn diagonal(d: &[i64]) -> Self {
        Self::new(d.len(), d.iter().enumerate().map(|(i, &c)| ([i + 1, i + 1], c))).expect("diagonal indices are valid")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn monomials(&self) -> impl Iterator<Item = ([usize; 2], i64)> + '_ {
        self.monomials.iter().map(|(k, v)| (*k, *v))
    }

    pub fn height(&self) -> i128 {
        self.monomials.values().map(|c| (*c as i128).abs()).sum()
    }

    pub fn is_diagonal(&self) -> bool {
        self.monomials.keys().all(|[i, j]| i == j)
    }

    /// Coefficients `d_1..d_n` when no cross terms are present.
    pub fn diagonal_coeffs(&self) -> Option<Vec<i64>> {
        if !self.is_diagonal() {
            return None;
        }
        let mut d = vec![0; self.n];
        for (&[i, _], &c) in &self.monomials {
            d[i - 1] = c;
        }
        Some(d)
    }

    /// Gram matrix `G` with `xᵀGx = 2Q(x)`.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let mut g = vec![vec![0i64; self.n]; self.n];
        for (&[i, j], &c) in &self.monomials {
            if i == j {
                g[i - 1][i - 1] = 2 * c;
            } else {
                g[i - 1][j - 1] = c;
                g[j - 1][i - 1] = c;
            }
        }
        g
    }

    pub fn eval(&self, x: &[i64]) -> Result<i128> {
        check_dim(self.n, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[i64]) -> i128 {
        self.monomials.iter().map(|([i, j], &c)| c as i128 * x[i - 1] as i128 * x[j - 1] as i128).sum()
    }

    #[inline]
    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.monomials.iter().map(|([i, j], &c)| c as f64 * x[i - 1] * x[j - 1]).sum()
    }

    /// `∇Q(x) = G x`.
    pub fn gradient(&self, x: &[i64]) -> Result<Vec<i128>> {
        check_dim(self.n, x.len())?;
        let g = self.gram();
        Ok(g.iter().map(|row| row.iter().zip(x).map(|(&a, &b)| a as i128 * b as i128).sum()).collect())
    }

    pub fn gradient_f64(&self, x: &[f64]) -> Vec<f64> {
        let g = self.gram();
        g.iter().map(|row| row.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()).collect()
    }
}

/// The pair `(C, Q)` cutting out `X: C = Q = 0`, plus user-asserted data.
#[derive(Debug, Clone, PartialEq)]
pub struct FormPair {
    pub cubic: CubicForm,
    pub quadric: QuadraticForm,
    /// User assertion that `C` is nonsingular.
    pub cubic_nonsingular: Option<bool>,
    /// User-supplied h-invariant `h(C)`.
    pub h_override: Option<u32>,
}

impl FormPair {
    pub fn new(cubic: CubicForm, quadric: QuadraticForm) -> Result<Self> {
        check_dim(cubic.dim(), quadric.dim())?;
        Ok(Self { cubic, quadric, cubic_nonsingular: None, h_override: None })
    }

    pub fn with_nonsingular(mut self, flag: bool) -> Self {
        self.cubic_nonsingular = Some(flag);
        self
    }

    pub fn with_h(mut self, h: u32) -> Self {
        self.h_override = Some(h);
        self
    }

    pub fn dim(&self) -> usize {
        self.cubic.dim()
    }

    /// `h = n` for a nonsingular cubic, otherwise the supplied `h(C)`.
    pub fn h_parameter(&self) -> Result<u32> {
        if self.cubic_nonsingular == Some(true) {
            return Ok(self.dim() as u32);
        }
        self.h_override.ok_or(Error::HUnavailable)
    }

    /// The 2×n Jacobian `[∇C(x); ∇Q(x)]` at a real point.
    pub fn jacobian_f64(&self, x: &[f64]) -> [Vec<f64>; 2] {
        [self.cubic.gradient_f64(x), self.quadric.gradient_f64(x)]
    }
}

/// Largest |2×2 minor| of a 2×n real matrix.
pub fn max_minor(rows: &[Vec<f64>; 2]) -> f64 {
    let n = rows[0].len();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            let m = rows[0][i] * rows[1][j] - rows[0][j] * rows[1][i];
            best = best.max(m.abs());
        }
    }
    best
}

/// All 2×2 minors `(i, j, a_i b_j − a_j b_i)` (1-based indices).
pub fn minors(rows: &[Vec<f64>; 2]) -> Vec<(usize, usize, f64)> {
    let n = rows[0].len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            out.push((i + 1, j + 1, rows[0][i] * rows[1][j] - rows[0][j] * rows[1][i]));
        }
    }
    out
}

/// True iff `x` is (numerically) a smooth real point of `X`: both forms
/// vanish to within `tol` and the Jacobian has a 2×2 minor larger than `tol`.
pub fn smooth_point_test(pair: &FormPair, x: &[f64], tol: f64) -> Result<bool> {
    check_dim(pair.dim(), x.len())?;
    if !(tol > 0.0) {
        return Err(Error::Invalid("tol must be positive".into()));
    }
    if pair.cubic.eval_f64(x).abs() > tol || pair.quadric.eval_f64(x).abs() > tol {
        return Ok(false);
    }
    Ok(max_minor(&pair.jacobian_f64(x)) > tol)
}

/// Exact rank of the Gram matrix by Bareiss fraction-free elimination.
pub fn rank_quadratic(q: &QuadraticForm) -> usize {
    let mut a: Vec<Vec<BigInt>> = q.gram().into_iter().map(|r| r.into_iter().map(BigInt::from).collect()).collect();
    bareiss_rank(&mut a)
}

pub(crate) fn bareiss_rank(a: &mut [Vec<BigInt>]) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut prev = BigInt::from(1);
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = (&a[rank][col] * &a[r][c] - &a[r][col] * &a[rank][c]) / &prev;
                a[r][c] = v;
            }
            a[r][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Inertia `(r, s)` of a quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub r: usize,
    pub s: usize,
}

impl Signature {
    pub fn rank(&self) -> usize {
        self.r + self.s
    }
}

/// Signature by exact rational congruence diagonalization.
#[allow(clippy::needless_range_loop)]
pub fn signature_quadratic(q: &QuadraticForm) -> Signature {
    let mut a: Vec<Vec<BigRational>> =
        q.gram().into_iter().map(|r| r.into_iter().map(|v| BigRational::from_integer(v.into())).collect()).collect();
    let n = a.len();
    let (mut r, mut s) = (0, 0);
    let mut k = 0;
    while k < n {
        if let Some(p) = (k..n).find(|&i| !a[i][i].is_zero()) {
            swap_sym(&mut a, k, p);
            let piv = a[k][k].clone();
            if piv.is_positive() {
                r += 1;
            } else {
                s += 1;
            }
            for i in k + 1..n {
                let f = &a[i][k] / &piv;
                if f.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let v = &a[i][j] - &f * &a[k][j];
                    a[i][j] = v;
                }
            }
            for i in k + 1..n {
                a[i][k] = BigRational::zero();
                a[k][i] = BigRational::zero();
            }
            k += 1;
            continue;
        }
        // zero diagonal on the active block: split off a hyperbolic plane
        let Some((i, j)) = (k..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[i][j].is_zero())
        else {
            break;
        };
        swap_sym(&mut a, k, i);
        let j = if j == k { i } else { j };
        swap_sym(&mut a, k + 1, j);
        let b = a[k][k + 1].clone();
        r += 1;
        s += 1;
        // Schur complement of [[0, b], [b, 0]]
        let x: Vec<(BigRational, BigRational)> = (0..n).map(|l| (a[l][k].clone(), a[l][k + 1].clone())).collect();
        for l in k + 2..n {
            for m in k + 2..n {
                let v = &a[l][m] - (&x[l].0 * &x[m].1 + &x[l].1 * &x[m].0) / &b;
                a[l][m] = v;
            }
        }
        for l in k + 2..n {
            for c in [k, k + 1] {
                a[l][c] = BigRational::zero();
                a[c][l] = BigRational::zero();
            }
        }
        k += 2;
    }
    Signature { r, s }
}

fn swap_sym<T>(a: &mut [Vec<T>], i: usize, j: usize) {
    if i == j {
        return;
    }
    a.swap(i, j);
    for row in a.iter_mut() {
        row.swap(i, j);
    }
}

/// Truth values of the theorem hypotheses for given parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub h: Option<u32>,
    pub rho: usize,
    pub signature: Signature,
    /// `n ≥ 31` and `max(r, s) ≤ n − 14`.
    pub plane_theorem: bool,
    /// `(h − 32)(ρ − 4) > 128`.
    pub h_rank_theorem: Option<bool>,
    /// `min(h, ρ) ≥ 37`.
    pub h_rank_sufficient: Option<bool>,
    /// `(n − 32)(ρ − 4) > 128`, meaningful when C is nonsingular.
    pub nonsingular_cubic_theorem: bool,
    /// `n ≥ 29` (nonsingularity of X itself is not certified).
    pub nonsingular_x_dimension: bool,
    /// `n ≥ 49` (the Q-order condition is not computed).
    pub q_order_dimension: bool,
    /// `ρ ≥ n − 1`, the rank forced by nonsingularity of X.
    pub rank_at_least_n_minus_1: bool,
    /// Largest d with `n ≥ 5 + 2d`.
    pub padic_plane_max_d: Option<usize>,
    /// Largest d with `d ≤ n − 1 − max(r, s)`.
    pub real_plane_max_d: Option<usize>,
}

/// `n ≥ 5 + 2d`.
pub fn padic_plane_ok(n: usize, d: usize) -> bool {
    n >= 5 + 2 * d
}

/// `d ≤ n − 1 − max(r, s)`.
pub fn real_plane_ok(n: usize, sig: Signature, d: usize) -> bool {
    d + 1 + sig.r.max(sig.s) <= n
}

pub fn hypothesis_report(n: usize, h: Option<u32>, rho: usize, signature: Signature) -> HypothesisReport {
    let (ni, rhoi) = (n as i64, rho as i64);
    let maxrs = signature.r.max(signature.s) as i64;
    let h_rank = h.map(|h| (h as i64 - 32) * (rhoi - 4) > 128);
    HypothesisReport {
        n,
        h,
        rho,
        signature,
        plane_theorem: ni >= 31 && maxrs <= ni - 14,
        h_rank_theorem: h_rank,
        h_rank_sufficient: h.map(|h| (h as usize).min(rho) >= 37),
        nonsingular_cubic_theorem: (ni - 32) * (rhoi - 4) > 128,
        nonsingular_x_dimension: n >= 29,
        q_order_dimension: n >= 49,
        rank_at_least_n_minus_1: rho + 1 >= n,
        padic_plane_max_d: (n >= 5).then(|| (n - 5) / 2),
        real_plane_max_d: (ni - 1 - maxrs >= 0).then(|| (ni - 1 - maxrs) as usize),
    }
}

/// Searches for a nonzero singular point of `C` modulo a small prime `p`:
/// `C(x) ≡ 0` and `∇C(x) ≡ 0`. Points are normalized so the first nonzero
/// coordinate is 1. Returns `None` if `pⁿ` exceeds `limit`.
pub fn cubic_singular_point_mod_p(c: &CubicForm, p: u64, limit: u64) -> Option<Option<Vec<i64>>> {
    let n = c.dim();
    let total = crate::arith::checked_pow(p, n as u32)?;
    if total > limit as u128 {
        return None;
    }
    let p = p as i64;
    let bx = crate::lattice::IntBox::residues(n, p);
    let mut found = None;
    bx.for_each(|x| {
        if found.is_some() {
            return;
        }
        match x.iter().find(|&&v| v != 0) {
            Some(&1) => {}
            _ => return,
        }
        if c.eval_unchecked(x).rem_euclid(p as i128) != 0 {
            return;
        }
        let g = c.gradient(x).expect("dimension checked");
        if g.iter().all(|v| v.rem_euclid(p as i128) == 0) {
            found = Some(x.to_vec());
        }
    });
    Some(found)
}
