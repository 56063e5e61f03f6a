//! The truncated singular integral, the major-arc approximation and the
//! main-term prediction `𝔖𝔍P^{n−5}`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::counting::{count_weighted_detail, fit_power_law, GrowthFit};
use crate::error::{check_dim, Error, Result};
use crate::expsums::{check_quad_dim, complete_sum, osc_integral, weyl_sum_rational, RationalApprox};
use crate::forms::FormPair;
use crate::localdens::singular_series_truncated;
use crate::quad::{self, QuadResult};
use crate::weightfn::Weight;

/// Below this `|u|` the kernel uses its Taylor series.
pub const SERIES_SWITCH: f64 = 1e-8;

/// `K_R(u) = sin(2πRu)/(πu)`, with `K_R(0) = 2R`.
pub fn sin_kernel(r: f64, u: f64) -> f64 {
    if u.abs() < SERIES_SWITCH {
        let t = 2.0 * PI * r * u;
        2.0 * r * (1.0 - t * t / 6.0)
    } else {
        (2.0 * PI * r * u).sin() / (PI * u)
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Invalid(format!("R = {r} must be positive")));
    }
    Ok(())
}

/// `𝔍(R) = ∫ ω(x) K_R(C(x)) K_R(Q(x)) dx`.
pub fn singular_integral_truncated(pair: &FormPair, w: &Weight, r: f64, tol: f64, cap: u64) -> Result<QuadResult> {
    check_dim(pair.dim(), w.dim())?;
    check_quad_dim(pair.dim())?;
    check_r(r)?;
    let f = |x: &[f64]| {
        let wt = w.omega_unchecked(x);
        if wt == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(wt * sin_kernel(r, pair.cubic.eval_f64(x)) * sin_kernel(r, pair.quadric.eval_f64(x)), 0.0)
    };
    quad::adaptive(&w.support_cube(), tol, cap, &f)
}

/// `∫_{[−R,R]²} I(γ; 0) dγ` by Gauss–Legendre in `γ`. Slow; meant as a check.
pub fn singular_integral_gamma(
    pair: &FormPair,
    w: &Weight,
    r: f64,
    nodes: usize,
    tol: f64,
    cap: u64,
) -> Result<Complex64> {
    check_r(r)?;
    let (x, wt) = quad::gauss_legendre(nodes);
    let z = vec![0.0; pair.dim()];
    let mut acc = Complex64::new(0.0, 0.0);
    for (g3, w3) in x.iter().zip(&wt) {
        for (g2, w2) in x.iter().zip(&wt) {
            let i = osc_integral(pair, w, r * g3, r * g2, &z, tol, cap)?;
            acc += i.value * (w3 * w2 * r * r);
        }
    }
    Ok(acc)
}

/// Comparison of a Weyl sum with its major-arc approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxCheck {
    pub p: f64,
    pub q: u64,
    pub lhs: Complex64,
    /// `q^{−n}Pⁿ S(a, q) I(θ₃P³, θ₂P²; 0)`.
    pub main: Complex64,
    pub error: f64,
    /// `qP^{n−1} + |θ₃|qP^{n+2} + |θ₂|qP^{n+1}`.
    pub scale: f64,
    pub ratio: f64,
}

pub fn major_arc_approx_check(
    pair: &FormPair,
    w: &Weight,
    p: f64,
    approx: &RationalApprox,
    tol: f64,
    cap: u64,
) -> Result<ApproxCheck> {
    let n = pair.dim();
    check_quad_dim(n)?;
    let lhs = weyl_sum_rational(pair, p, w, approx)?;
    let q = approx.q;
    let s = complete_sum(pair, q, approx.a3 as i64, approx.a2 as i64, &vec![0; n], cap)?;
    let i = osc_integral(pair, w, approx.theta3 * p.powi(3), approx.theta2 * p.powi(2), &vec![0.0; n], tol, cap)?;
    let main = s * i.value * (p / q as f64).powi(n as i32);
    let (qf, ni) = (q as f64, n as i32);
    let scale =
        qf * p.powi(ni - 1) + approx.theta3.abs() * qf * p.powi(ni + 2) + approx.theta2.abs() * qf * p.powi(ni + 1);
    let error = (lhs - main).norm();
    Ok(ApproxCheck { p, q, lhs, main, error, scale, ratio: error / scale })
}

/// `𝔖(R_s) · 𝔍(R_i) · P^{n−5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainTerm {
    pub series: f64,
    pub integral: f64,
    pub p: f64,
    pub prediction: f64,
    /// `n ≥ 29`, the smallest dimension any of the asymptotic results covers.
    pub applicable: bool,
}

/// Combines already computed `𝔖` and `𝔍`.
pub fn main_term_from(series: f64, integral: f64, p: f64, n: usize) -> MainTerm {
    MainTerm { series, integral, p, prediction: series * integral * p.powi(n as i32 - 5), applicable: n >= 29 }
}

pub fn main_term(
    pair: &FormPair,
    w: &Weight,
    r_series: u64,
    r_integral: f64,
    p: f64,
    tol: f64,
    cap: u64,
) -> Result<MainTerm> {
    let s = singular_series_truncated(pair, r_series, cap)?;
    let j = singular_integral_truncated(pair, w, r_integral, tol, cap)?;
    Ok(main_term_from(s.value, j.value.re, p, pair.dim()))
}

/// One row of a count-versus-prediction table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompareRow {
    #[serde(rename = "P")]
    pub p: f64,
    pub solutions: usize,
    pub count: f64,
    pub prediction: f64,
    pub ratio: f64,
}

/// `N_ω(P)` against `𝔖𝔍P^{n−5}` over a grid of `P`.
pub fn compare(
    pair: &FormPair,
    w: &Weight,
    ps: &[f64],
    r_series: u64,
    r_integral: f64,
    tol: f64,
    cap: u64,
) -> Result<Vec<CompareRow>> {
    let s = singular_series_truncated(pair, r_series, cap)?;
    let j = singular_integral_truncated(pair, w, r_integral, tol, cap)?;
    ps.iter()
        .map(|&p| {
            let c = count_weighted_detail(pair, p, w)?;
            let m = main_term_from(s.value, j.value.re, p, pair.dim());
            Ok(CompareRow {
                p,
                solutions: c.solutions,
                count: c.value,
                prediction: m.prediction,
                ratio: c.value / m.prediction,
            })
        })
        .collect()
}

/// `|I(γ₃, 0; 0)|` over a grid of `γ₃` with a fitted decay exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayScan {
    pub gammas: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// `|I(0, 0; 0)| = ∫ω`.
    pub mass: f64,
    pub fit: GrowthFit,
}

pub fn integral_decay_scan(pair: &FormPair, w: &Weight, gammas: &[f64], tol: f64, cap: u64) -> Result<DecayScan> {
    let z = vec![0.0; pair.dim()];
    let mass = osc_integral(pair, w, 0.0, 0.0, &z, tol, cap)?.value.re;
    let magnitudes = gammas
        .iter()
        .map(|&g| Ok(osc_integral(pair, w, g, 0.0, &z, tol, cap)?.value.norm()))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(gammas, &magnitudes)?;
    Ok(DecayScan { gammas: gammas.to_vec(), magnitudes, mass, fit })
}
