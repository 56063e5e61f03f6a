//! Weyl sums, complete sums modulo q, the oscillatory integral and the
//! Poisson reconstruction linking them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{factorize, gcd, gcd3, modq};
use crate::error::{check_cap, check_dim, Error, Result};
use crate::forms::FormPair;
use crate::lattice::IntBox;
use crate::quad::{self, e, QuadResult};
use crate::reduce::{pairwise_sum_c, NeumaierC};
use crate::weightfn::Weight;

/// Default budget on residue vectors and grid points.
pub const DEFAULT_CAP: u64 = 100_000_000;

/// `α_i = a_i/q + θ_i` with `1 ≤ a_i ≤ q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RationalApprox {
    pub q: u64,
    pub a3: u64,
    pub a2: u64,
    pub theta3: f64,
    pub theta2: f64,
}

impl RationalApprox {
    pub fn new(q: u64, a3: u64, a2: u64, theta3: f64, theta2: f64) -> Result<Self> {
        if q == 0 || !(1..=q).contains(&a3) || !(1..=q).contains(&a2) {
            return Err(Error::Invalid(format!("need q ≥ 1 and 1 ≤ a_i ≤ q, got q={q}, a=({a3},{a2})")));
        }
        if !theta3.is_finite() || !theta2.is_finite() {
            return Err(Error::Invalid("theta must be finite".into()));
        }
        Ok(Self { q, a3, a2, theta3, theta2 })
    }

    /// `gcd(q, a₃, a₂) = 1`.
    pub fn is_reduced(&self) -> bool {
        gcd3(self.q as i64, self.a3 as i64, self.a2 as i64) == 1
    }

    pub fn alpha3(&self) -> f64 {
        self.a3 as f64 / self.q as f64 + self.theta3
    }

    pub fn alpha2(&self) -> f64 {
        self.a2 as f64 / self.q as f64 + self.theta2
    }
}

/// `Θ = 1 + |θ₃|P³ + |θ₂|P²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaHeight {
    pub value: f64,
}

pub fn theta_height(approx: &RationalApprox, p: f64) -> ThetaHeight {
    ThetaHeight { value: 1.0 + approx.theta3.abs() * p.powi(3) + approx.theta2.abs() * p.powi(2) }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Invalid(format!("P = {p} must be at least 1")));
    }
    Ok(())
}

/// Sums `f(x)` over the support of `ω(·/P)` with deterministic reduction.
fn support_sum<F>(bx: &IntBox, f: F) -> Complex64
where
    F: Fn(&[i64]) -> Complex64 + Sync,
{
    let slabs: Vec<Complex64> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut acc = NeumaierC::new();
            bx.slab(v).for_each(|x| acc.add(f(x)));
            acc.value()
        })
        .collect();
    pairwise_sum_c(&slabs)
}

/// `S(α₃, α₂) = Σ_x ω(x/P) e(α₃C(x) + α₂Q(x))`.
pub fn weyl_sum_direct(pair: &FormPair, p: f64, w: &Weight, alpha3: f64, alpha2: f64) -> Result<Complex64> {
    check_dim(pair.dim(), w.dim())?;
    check_p(p)?;
    let bx = w.support_box(p);
    Ok(support_sum(&bx, |x| {
        let wt = w.omega_scaled(x, p);
        if wt == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let c = pair.cubic.eval_unchecked(x) as f64;
        let q = pair.quadric.eval_unchecked(x) as f64;
        e((alpha3 * c).fract() + (alpha2 * q).fract()) * wt
    }))
}

/// The Weyl sum at `α = a/q + θ`, with the rational part of the phase
/// reduced exactly modulo `q`.
pub fn weyl_sum_rational(pair: &FormPair, p: f64, w: &Weight, approx: &RationalApprox) -> Result<Complex64> {
    check_dim(pair.dim(), w.dim())?;
    check_p(p)?;
    let q = approx.q as i64;
    let bx = w.support_box(p);
    Ok(support_sum(&bx, |x| {
        let wt = w.omega_scaled(x, p);
        if wt == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let c = pair.cubic.eval_unchecked(x);
        let qv = pair.quadric.eval_unchecked(x);
        let t = (modq(c, q) as i128 * approx.a3 as i128 + modq(qv, q) as i128 * approx.a2 as i128) % q as i128;
        let frac = t as f64 / q as f64 + (approx.theta3 * c as f64).fract() + (approx.theta2 * qv as f64).fract();
        e(frac) * wt
    }))
}

/// `e(t/q)` for `t = 0..q`.
fn roots_of_unity(q: u64) -> Vec<Complex64> {
    (0..q).map(|t| e(t as f64 / q as f64)).collect()
}

/// Histogram over `y mod q` of `a₃C(y) + a₂Q(y) + m·y mod q`.
fn phase_histogram(pair: &FormPair, q: u64, a3: i64, a2: i64, m: &[i64]) -> Vec<u64> {
    let qi = q as i64;
    let bx = IntBox::residues(pair.dim(), qi);
    let (a3, a2) = (a3.rem_euclid(qi) as i128, a2.rem_euclid(qi) as i128);
    let m: Vec<i128> = m.iter().map(|&v| v.rem_euclid(qi) as i128).collect();
    let slabs: Vec<Vec<u64>> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut h = vec![0u64; q as usize];
            bx.slab(v).for_each(|y| {
                let c = modq(pair.cubic.eval_unchecked(y), qi) as i128;
                let d = modq(pair.quadric.eval_unchecked(y), qi) as i128;
                let lin: i128 = y.iter().zip(&m).map(|(&a, &b)| a as i128 * b).sum();
                h[modq(a3 * c + a2 * d + lin, qi) as usize] += 1;
            });
            h
        })
        .collect();
    let mut out = vec![0u64; q as usize];
    for h in slabs {
        for (o, v) in out.iter_mut().zip(h) {
            *o += v;
        }
    }
    out
}

fn histogram_sum(h: &[u64], roots: &[Complex64]) -> Complex64 {
    let mut acc = NeumaierC::new();
    for (&c, &r) in h.iter().zip(roots) {
        if c != 0 {
            acc.add(r * c as f64);
        }
    }
    acc.value()
}

fn check_modulus(q: u64) -> Result<()> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    Ok(())
}

/// `S(a, q; m) = Σ_{y mod q} e_q(a₃C(y) + a₂Q(y) + m·y)` by brute force.
pub fn complete_sum(pair: &FormPair, q: u64, a3: i64, a2: i64, m: &[i64], cap: u64) -> Result<Complex64> {
    check_modulus(q)?;
    check_dim(pair.dim(), m.len())?;
    check_cap("residue vectors", (q as u128).saturating_pow(pair.dim() as u32), cap)?;
    let h = phase_histogram(pair, q, a3, a2, m);
    Ok(histogram_sum(&h, &roots_of_unity(q)))
}

/// One prime-power factor of a CRT evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrtFactor {
    pub modulus: u64,
    /// Cofactor `t = q / modulus`.
    pub twist: u64,
    /// `t²a₃ mod modulus`.
    pub a3: i64,
    /// `t a₂ mod modulus`.
    pub a2: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrtSum {
    pub value: Complex64,
    pub factors: Vec<CrtFactor>,
}

/// `S(a, q; m)` as the product over prime powers `f ∥ q` of
/// `S((t²a₃, t a₂), f; m)` with `t = q/f`.
pub fn complete_sum_crt(pair: &FormPair, q: u64, a3: i64, a2: i64, m: &[i64], cap: u64) -> Result<CrtSum> {
    check_modulus(q)?;
    check_dim(pair.dim(), m.len())?;
    let mut value = Complex64::new(1.0, 0.0);
    let mut factors = Vec::new();
    for (p, k) in factorize(q) {
        let f = p.pow(k);
        let t = (q / f) as i128;
        let fa3 = modq(t * t * a3 as i128, f as i64);
        let fa2 = modq(t * a2 as i128, f as i64);
        let s = complete_sum(pair, f, fa3, fa2, m, cap)?;
        value *= s;
        factors.push(CrtFactor { modulus: f, twist: q / f, a3: fa3, a2: fa2, re: s.re, im: s.im });
    }
    Ok(CrtSum { value, factors })
}

/// Lexicographic index of `m mod q` in a `qⁿ` table.
pub fn residue_index(m: &[i64], q: u64) -> usize {
    m.iter().fold(0usize, |acc, &v| acc * q as usize + v.rem_euclid(q as i64) as usize)
}

/// `S(a, q; m)` for every `m mod q`, indexed by [`residue_index`].
pub fn complete_sum_table(pair: &FormPair, q: u64, a3: i64, a2: i64, cap: u64) -> Result<Vec<Complex64>> {
    check_modulus(q)?;
    let n = pair.dim();
    let total = (q as u128).saturating_pow(n as u32);
    check_cap("residue vectors", total, cap)?;
    let qi = q as i64;
    let roots = roots_of_unity(q);
    let mut data = vec![Complex64::new(0.0, 0.0); total as usize];
    let bx = IntBox::residues(n, qi);
    let mut idx = 0;
    bx.for_each(|y| {
        let c = modq(pair.cubic.eval_unchecked(y), qi) as i128;
        let d = modq(pair.quadric.eval_unchecked(y), qi) as i128;
        data[idx] = roots[modq(a3 as i128 * c + a2 as i128 * d, qi) as usize];
        idx += 1;
    });
    if n > 0 {
        quad::fft_nd(&mut data, q as usize, n, true);
    }
    Ok(data)
}

/// Joint histogram of `(C(y) mod q, Q(y) mod q)` over `y mod q`,
/// row-major with `C` as the row.
pub fn value_histogram(pair: &FormPair, q: u64, cap: u64) -> Result<Vec<u64>> {
    check_modulus(q)?;
    let n = pair.dim();
    check_cap("residue vectors", (q as u128).saturating_pow(n as u32), cap)?;
    let qi = q as i64;
    let qs = q as usize;
    let bx = IntBox::residues(n, qi);
    let slabs: Vec<Vec<u64>> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut h = vec![0u64; qs * qs];
            bx.slab(v).for_each(|y| {
                let c = modq(pair.cubic.eval_unchecked(y), qi) as usize;
                let d = modq(pair.quadric.eval_unchecked(y), qi) as usize;
                h[c * qs + d] += 1;
            });
            h
        })
        .collect();
    let mut out = vec![0u64; qs * qs];
    for h in slabs {
        for (o, v) in out.iter_mut().zip(h) {
            *o += v;
        }
    }
    Ok(out)
}

/// `S(a, q; 0)` for every `(a₃, a₂) mod q`, row-major in `a₃`.
pub fn complete_sums_all_a(pair: &FormPair, q: u64, cap: u64) -> Result<Vec<Complex64>> {
    let h = value_histogram(pair, q, cap)?;
    let mut data: Vec<Complex64> = h.into_iter().map(|v| Complex64::new(v as f64, 0.0)).collect();
    quad::fft_nd(&mut data, q as usize, 2, true);
    Ok(data)
}

fn support_bounds(pair: &FormPair, w: &Weight) -> (f64, f64) {
    let r = w.center.iter().map(|c| c.abs() + w.xi).fold(0.0, f64::max);
    let gc = 3.0 * pair.cubic.height() as f64 * r * r;
    let gq = 2.0 * pair.quadric.height() as f64 * r;
    (gc, gq)
}

/// Largest dimension handled by tensor quadrature.
pub const MAX_QUAD_DIM: usize = 4;

pub(crate) fn check_quad_dim(n: usize) -> Result<()> {
    if n > MAX_QUAD_DIM {
        return Err(Error::TooLarge { what: "quadrature dimension", size: n as u128, cap: MAX_QUAD_DIM as u64 });
    }
    Ok(())
}

/// `I(γ; z) = ∫ ω(x) e(γ₃C(x) + γ₂Q(x) − z·x) dx`.
pub fn osc_integral(
    pair: &FormPair,
    w: &Weight,
    gamma3: f64,
    gamma2: f64,
    z: &[f64],
    tol: f64,
    cap: u64,
) -> Result<QuadResult> {
    check_dim(pair.dim(), w.dim())?;
    check_dim(pair.dim(), z.len())?;
    check_quad_dim(pair.dim())?;
    let f = |x: &[f64]| {
        let wt = w.omega_unchecked(x);
        if wt == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let lin: f64 = x.iter().zip(z).map(|(a, b)| a * b).sum();
        e(gamma3 * pair.cubic.eval_f64(x) + gamma2 * pair.quadric.eval_f64(x) - lin) * wt
    };
    quad::adaptive(&w.support_cube(), tol, cap, &f)
}

/// Truncation radius `⌈4qΘ/P⌉ + 8`.
pub fn default_radius(approx: &RationalApprox, p: f64) -> i64 {
    (4.0 * approx.q as f64 * theta_height(approx, p).value / p).ceil() as i64 + 8
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonResult {
    pub value: Complex64,
    pub radius: i64,
    pub terms: usize,
    /// Quadrature error estimate, scaled like the sum.
    pub quad_error: f64,
}

/// `(P/q)ⁿ Σ_{|m|∞ ≤ M} S(a, q; m) I(θ₃P³, θ₂P²; Pm/q)`.
pub fn poisson_reconstruct(
    pair: &FormPair,
    p: f64,
    w: &Weight,
    approx: &RationalApprox,
    radius: i64,
    tol: f64,
    cap: u64,
) -> Result<PoissonResult> {
    check_dim(pair.dim(), w.dim())?;
    check_p(p)?;
    if radius < 0 {
        return Err(Error::Invalid("truncation radius must be nonnegative".into()));
    }
    let n = pair.dim();
    check_quad_dim(n)?;
    let q = approx.q;
    let scale = (p / q as f64).powi(n as i32);
    let (g3, g2) = (approx.theta3 * p.powi(3), approx.theta2 * p.powi(2));
    let (a3, a2) = (approx.a3 as i64, approx.a2 as i64);
    if radius == 0 {
        let s = complete_sum(pair, q, a3, a2, &vec![0; n], cap)?;
        let i = osc_integral(pair, w, g3, g2, &vec![0.0; n], tol, cap)?;
        return Ok(PoissonResult {
            value: s * i.value * scale,
            radius,
            terms: 1,
            quad_error: i.error * s.norm() * scale,
        });
    }
    let table = complete_sum_table(pair, q, a3, a2, cap)?;
    let (gc, gq) = support_bounds(pair, w);
    let bandwidth = 160.0 / w.xi + g3.abs() * gc + g2.abs() * gq;
    let g = |x: &[f64]| {
        let wt = w.omega_unchecked(x);
        if wt == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        e(g3 * pair.cubic.eval_f64(x) + g2 * pair.quadric.eval_f64(x)) * wt
    };
    let c = p / q as f64;
    let batch = quad::fourier_batch(&w.support_cube(), c, radius, bandwidth, tol, cap, &g)?;
    let side = (2 * radius + 1) as usize;
    let total = side.pow(n as u32);
    let mut terms = Vec::with_capacity(total);
    let mut m = vec![-radius; n];
    for k in 0..total {
        terms.push(table[residue_index(&m, q)] * batch.values[k]);
        for i in (0..n).rev() {
            if m[i] < radius {
                m[i] += 1;
                break;
            }
            m[i] = -radius;
        }
    }
    let qn = (q as f64).powi(n as i32);
    Ok(PoissonResult {
        value: pairwise_sum_c(&terms) * scale,
        radius,
        terms: total,
        quad_error: batch.error * total as f64 * qn * scale,
    })
}

/// Largest `max_a |S(a, q; 0)| / q^{n/2}` over `a` with `gcd(q, a) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CancellationRow {
    pub q: u64,
    pub max_ratio: f64,
}

/// Square-root cancellation report over the given moduli.
pub fn sqrt_cancellation_scan(pair: &FormPair, moduli: &[u64], cap: u64) -> Result<Vec<CancellationRow>> {
    let n = pair.dim() as i32;
    moduli
        .iter()
        .map(|&q| {
            let all = complete_sums_all_a(pair, q, cap)?;
            let qi = q as i64;
            let mut best = 0.0f64;
            for a3 in 0..qi {
                for a2 in 0..qi {
                    if gcd(gcd(a3, a2), qi) == 1 {
                        best = best.max(all[(a3 * qi + a2) as usize].norm());
                    }
                }
            }
            Ok(CancellationRow { q, max_ratio: best / (q as f64).powf(n as f64 / 2.0) })
        })
        .collect()
}
