//! Simultaneous Dirichlet approximation and the major/minor arc dissection.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{gcd3, jordan2};
use crate::error::{Error, Result};
use crate::expsums::RationalApprox;

/// Default major-arc exponent.
pub const DEFAULT_DELTA: f64 = 1.0 / 7.0;

/// Largest integer `k ≥ 0` with `k³ ≤ x`.
fn icbrt_floor(x: f64) -> u64 {
    let mut k = x.cbrt().floor() as u64;
    while ((k + 1) as f64).powi(3) <= x {
        k += 1;
    }
    while k > 0 && (k as f64).powi(3) > x {
        k -= 1;
    }
    k
}

/// `(Q₃, Q₂) = (⌊P^{4/3}⌋, ⌊P^{1/3}⌋)`.
pub fn q3q2(p: f64) -> Result<(u64, u64)> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Invalid(format!("P = {p} must be at least 1")));
    }
    Ok((icbrt_floor(p.powi(4)), icbrt_floor(p)))
}

/// `x mod 1` in `(0, 1]`.
fn unit_rep(x: f64) -> f64 {
    let r = x - x.floor();
    if r == 0.0 {
        1.0
    } else {
        r
    }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite input")
}

/// Exact test of `|qα − a| ≤ 1/Q`.
fn within_exact(alpha: f64, q: u64, a: i64, bound_q: u64) -> bool {
    let lhs = (exact(alpha) * BigInt::from(q) - BigInt::from(a)).abs() * BigInt::from(bound_q);
    lhs <= BigRational::from_integer(1.into())
}

/// `|qα − a| ≤ 1/Q`, deciding near-boundary cases exactly.
fn within(alpha: f64, q: u64, a: i64, bound_q: u64) -> bool {
    let v = (q as f64 * alpha - a as f64).abs() * bound_q as f64;
    if (v - 1.0).abs() < 1e-9 {
        within_exact(alpha, q, a, bound_q)
    } else {
        v < 1.0
    }
}

/// Whether `(q, a)` with `α ≡ a/q + θ` meets `|θ_i| ≤ 1/(qQ_i)`, where `a_i`
/// is taken nearest to `qα_i`. Exact.
pub fn satisfies_dirichlet(alpha3: f64, alpha2: f64, approx: &RationalApprox, q3: u64, q2: u64) -> bool {
    let q = approx.q;
    let check = |alpha: f64, a: u64, bound: u64| {
        let near = (q as f64 * alpha).round() as i64;
        near.rem_euclid(q as i64) == (a % q) as i64 && within_exact(alpha, q, near, bound)
    };
    q <= q3 * q2
        && approx.is_reduced()
        && check(unit_rep(alpha3), approx.a3, q3)
        && check(unit_rep(alpha2), approx.a2, q2)
}

/// Smallest `q ≤ Q₃Q₂` with `|α_i − a_i/q| ≤ 1/(qQ_i)` for both `i`.
///
/// The `α_i` are reduced into `(0, 1]`; `a_i` is the residue of the integer
/// nearest `qα_i`, normalized into `[1, q]`, and `θ_i = α_i − round(qα_i)/q`.
pub fn simultaneous_approx(alpha3: f64, alpha2: f64, q3: u64, q2: u64) -> Result<RationalApprox> {
    if q3 == 0 || q2 == 0 {
        return Err(Error::Invalid("Q₃ and Q₂ must be positive".into()));
    }
    if !alpha3.is_finite() || !alpha2.is_finite() {
        return Err(Error::Invalid("alpha must be finite".into()));
    }
    let (b3, b2) = (unit_rep(alpha3), unit_rep(alpha2));
    let qmax = q3 * q2;
    let ok = |q: u64| {
        let n3 = (q as f64 * b3).round() as i64;
        let n2 = (q as f64 * b2).round() as i64;
        within(b3, q, n3, q3) && within(b2, q, n2, q2)
    };
    let q = (1..=qmax).into_par_iter().find_first(|&q| ok(q)).expect("Dirichlet's theorem guarantees some q ≤ Q₃Q₂");
    let n3 = (q as f64 * b3).round() as i64;
    let n2 = (q as f64 * b2).round() as i64;
    let norm = |n: i64| {
        let r = n.rem_euclid(q as i64) as u64;
        if r == 0 {
            q
        } else {
            r
        }
    };
    let approx = RationalApprox {
        q,
        a3: norm(n3),
        a2: norm(n2),
        theta3: b3 - n3 as f64 / q as f64,
        theta2: b2 - n2 as f64 / q as f64,
    };
    assert!(approx.is_reduced(), "minimal q must be reduced: {approx:?}");
    Ok(approx)
}

/// Outcome of a major-arc membership test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MajorArcResult {
    pub is_major: bool,
    /// Smallest `q`, then smallest `(a₃, a₂)`.
    pub witness: Option<(u64, u64, u64)>,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0 / 3.0) {
        return Err(Error::Invalid(format!("delta = {delta} outside (0, 1/3)")));
    }
    Ok(())
}

/// Largest `q` with `q ≤ P^δ`.
pub fn major_q_limit(p: f64, delta: f64) -> u64 {
    (p.powf(delta) + 1e-12).floor().max(1.0) as u64
}

/// Residues `a mod q` in `[1, q]` with `‖α − a/q‖ ≤ r`.
fn candidates(alpha: f64, q: u64, r: f64) -> Vec<u64> {
    let qf = q as f64;
    let lo = (qf * (alpha - r)).ceil() as i64;
    let hi = (qf * (alpha + r)).floor() as i64;
    let mut out: Vec<u64> = (lo..=hi.min(lo + q as i64 - 1))
        .map(|a| {
            let v = a.rem_euclid(q as i64) as u64;
            if v == 0 {
                q
            } else {
                v
            }
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Membership in `𝔐 = ⋃ {α : |α_i − a_i/q| ≤ P^{−i+δ}}` over `q ≤ P^δ`,
/// `gcd(q, a) = 1`, exhaustively.
pub fn major_arc_test(alpha3: f64, alpha2: f64, p: f64, delta: f64) -> Result<MajorArcResult> {
    check_delta(delta)?;
    if !(p >= 1.0) {
        return Err(Error::Invalid(format!("P = {p} must be at least 1")));
    }
    let (r3, r2) = (p.powf(-3.0 + delta), p.powf(-2.0 + delta));
    for q in 1..=major_q_limit(p, delta) {
        let c3 = candidates(alpha3, q, r3);
        let c2 = candidates(alpha2, q, r2);
        for &a3 in &c3 {
            for &a2 in &c2 {
                if gcd3(q as i64, a3 as i64, a2 as i64) == 1 {
                    return Ok(MajorArcResult { is_major: true, witness: Some((q, a3, a2)) });
                }
            }
        }
    }
    Ok(MajorArcResult { is_major: false, witness: None })
}

/// `Σ_{q ≤ P^δ} J₂(q) · (2P^{−3+δ})(2P^{−2+δ})`, ignoring overlaps.
pub fn major_arc_measure(p: f64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let count: u64 = (1..=major_q_limit(p, delta)).map(jordan2).sum();
    Ok(count as f64 * 4.0 * p.powf(-5.0 + 2.0 * delta))
}

/// Whether all major arcs are pairwise disjoint on the torus.
pub fn major_arcs_disjoint(p: f64, delta: f64) -> Result<bool> {
    check_delta(delta)?;
    let (r3, r2) = (p.powf(-3.0 + delta), p.powf(-2.0 + delta));
    let mut centers = Vec::new();
    for q in 1..=major_q_limit(p, delta) {
        for a3 in 1..=q {
            for a2 in 1..=q {
                if gcd3(q as i64, a3 as i64, a2 as i64) == 1 {
                    centers.push((a3 as f64 / q as f64, a2 as f64 / q as f64));
                }
            }
        }
    }
    let torus = |x: f64| {
        let r = x.rem_euclid(1.0);
        r.min(1.0 - r)
    };
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            let d3 = torus(centers[i].0 - centers[j].0);
            let d2 = torus(centers[i].1 - centers[j].1);
            if d3 <= 2.0 * r3 && d2 <= 2.0 * r2 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Arc classification of one point, with both notions of approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArcClass {
    pub alpha3: f64,
    pub alpha2: f64,
    pub is_major: bool,
    pub q: Option<u64>,
    pub a3: Option<u64>,
    pub a2: Option<u64>,
    pub dirichlet_q: u64,
    pub dirichlet_a3: u64,
    pub dirichlet_a2: u64,
    pub theta3: f64,
    pub theta2: f64,
    /// `q > P^δ` or `max(|θ₃|P³, |θ₂|P²) > P^δ` for the Dirichlet triple.
    pub dirichlet_minor: bool,
}

pub fn classify(alpha3: f64, alpha2: f64, p: f64, delta: f64) -> Result<ArcClass> {
    let m = major_arc_test(alpha3, alpha2, p, delta)?;
    let (q3, q2) = q3q2(p)?;
    let d = simultaneous_approx(alpha3, alpha2, q3, q2)?;
    let pd = p.powf(delta);
    let dirichlet_minor = d.q as f64 > pd || (d.theta3.abs() * p.powi(3)).max(d.theta2.abs() * p.powi(2)) > pd;
    Ok(ArcClass {
        alpha3,
        alpha2,
        is_major: m.is_major,
        q: m.witness.map(|w| w.0),
        a3: m.witness.map(|w| w.1),
        a2: m.witness.map(|w| w.2),
        dirichlet_q: d.q,
        dirichlet_a3: d.a3,
        dirichlet_a2: d.a2,
        theta3: d.theta3,
        theta2: d.theta2,
        dirichlet_minor,
    })
}

/// Classifies the grid `(i/k, j/k)`, `1 ≤ i, j ≤ k`, row-major in `i`.
pub fn classify_grid(k: u64, p: f64, delta: f64) -> Result<Vec<ArcClass>> {
    let pts: Vec<(u64, u64)> = (1..=k).flat_map(|i| (1..=k).map(move |j| (i, j))).collect();
    pts.into_par_iter().map(|(i, j)| classify(i as f64 / k as f64, j as f64 / k as f64, p, delta)).collect()
}
