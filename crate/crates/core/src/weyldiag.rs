//! Diagnostics for Weyl differencing: the bilinear count `n(R)`, the
//! heights `T₃`, `T₂`, approximation witnesses for `α₃`, and scans of `|S|`
//! over the unit square.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arcs::major_arc_test;
use crate::arith::{dist_to_int, gcd};
use crate::counting::{fit_power_law, GrowthFit};
use crate::error::{check_cap, check_dim, Error, Result};
use crate::expsums::weyl_sum_direct;
use crate::forms::{rank_quadratic, CubicForm, FormPair};
use crate::lattice::IntBox;
use crate::weightfn::Weight;

/// Constant used in every "≪" budget.
pub const C0: f64 = 10.0;
/// Default `ε` in witness budgets.
pub const DEFAULT_EPS: f64 = 0.05;

type Q128 = Ratio<i128>;

fn check_radius(r: i64) -> Result<()> {
    if r < 1 {
        return Err(Error::Invalid(format!("R = {r} must be at least 1")));
    }
    Ok(())
}

/// `n(R)` by testing every pair `(x, y)`.
pub fn count_bilinear_full(c: &CubicForm, r: i64, cap: u64) -> Result<u64> {
    check_radius(r)?;
    let n = c.dim();
    let side = (2 * r - 1) as u128;
    check_cap("bilinear pairs", side.saturating_pow(2 * n as u32), cap)?;
    let bx = IntBox::cube(n, r - 1);
    let xs: Vec<Vec<i64>> = {
        let mut v = Vec::new();
        bx.for_each(|x| v.push(x.to_vec()));
        v
    };
    Ok(xs
        .par_iter()
        .map(|x| {
            let m = c.bilinear_matrix(x).expect("dimension matches");
            let mut k = 0u64;
            bx.for_each(|y| {
                if m.iter().all(|row| row.iter().zip(y).map(|(a, &b)| a * b as i128).sum::<i128>() == 0) {
                    k += 1;
                }
            });
            k
        })
        .sum())
}

/// Reduced row echelon form; returns the pivot columns.
#[allow(clippy::needless_range_loop)]
fn rref(m: &mut [Vec<Q128>]) -> Vec<usize> {
    let (rows, cols) = (m.len(), m.first().map_or(0, |r| r.len()));
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..rows).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for v in m[row].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows {
            if i != row && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in 0..cols {
                    let t = m[row][j] * f;
                    m[i][j] -= t;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    pivots
}

/// Integer `y` with `|y_i| ≤ b` and `M y = 0`.
fn kernel_points(m: &[Vec<i128>], b: i64) -> u64 {
    let n = m.len();
    let mut a: Vec<Vec<Q128>> = m.iter().map(|r| r.iter().map(|&v| Q128::from_integer(v)).collect()).collect();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    match free.len() {
        0 => 1,
        1 => {
            // y = t·v with v_f = 1 and v_p = −a[p][f]; clear denominators
            let f = free[0];
            let mut v: Vec<Q128> = vec![Q128::zero(); n];
            v[f] = Q128::from_integer(1);
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -a[row][f];
            }
            let den = v.iter().fold(1i128, |acc, x| num_integer::lcm(acc, *x.denom()));
            let ints: Vec<i128> = v.iter().map(|x| (x * den).to_integer()).collect();
            let g = ints.iter().fold(0i128, |acc, &x| num_integer::gcd(acc, x));
            let max = ints.iter().map(|x| (x / g).abs()).max().expect("nonzero vector");
            2 * (b as i128 / max) as u64 + 1
        }
        _ => {
            let mut count = 0u64;
            IntBox::cube(free.len(), b).for_each(|t| {
                for (row, _) in pivots.iter().enumerate() {
                    let val: Q128 = free.iter().zip(t).map(|(&f, &tv)| -a[row][f] * tv as i128).sum();
                    if !val.is_integer() || val.abs() > Q128::from_integer(b as i128) {
                        return;
                    }
                }
                count += 1;
            });
            count
        }
    }
}

/// `n(R) = #{(x, y) : |x|, |y| < R, B_i(x; y) = 0 for all i}`, solving the
/// linear system in `y` exactly for each `x`.
pub fn count_bilinear(c: &CubicForm, r: i64, cap: u64) -> Result<u64> {
    check_radius(r)?;
    let n = c.dim();
    check_cap("bilinear x values", ((2 * r - 1) as u128).saturating_pow(n as u32), cap)?;
    let bx = IntBox::cube(n, r - 1);
    let slabs: Vec<u64> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut k = 0u64;
            bx.slab(v).for_each(|x| {
                let m = c.bilinear_matrix(x).expect("dimension matches");
                k += kernel_points(&m, r - 1);
            });
            k
        })
        .collect();
    Ok(if n == 0 { 1 } else { slabs.iter().sum() })
}

/// Fitted exponent of `n(R)` over the given radii.
pub fn bilinear_growth(c: &CubicForm, radii: &[i64], cap: u64) -> Result<GrowthFit> {
    let counts = radii.iter().map(|&r| Ok(count_bilinear(c, r, cap)? as f64)).collect::<Result<Vec<_>>>()?;
    let rs: Vec<f64> = radii.iter().map(|&r| r as f64).collect();
    fit_power_law(&rs, &counts)
}

/// `T₃ = (Pⁿ/|S|)^{1/h}`, `T₂ = (Pⁿ/|S|)^{1/ρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylHeights {
    pub t3: f64,
    pub t2: f64,
    pub h: u32,
    pub rho: u32,
}

/// Heights from `|S|`; both are infinite when `|S| = 0`.
pub fn heights_from_sum(s_abs: f64, p: f64, n: usize, h: u32, rho: u32) -> Result<WeylHeights> {
    if !(s_abs >= 0.0) || h == 0 || rho == 0 || !(p >= 1.0) {
        return Err(Error::Invalid("need |S| ≥ 0, P ≥ 1 and positive h, ρ".into()));
    }
    if s_abs == 0.0 {
        return Ok(WeylHeights { t3: f64::INFINITY, t2: f64::INFINITY, h, rho });
    }
    let l = n as f64 * p.ln() - s_abs.ln();
    Ok(WeylHeights { t3: (l / h as f64).exp(), t2: (l / rho as f64).exp(), h, rho })
}

/// Best `s` for `α₃ = b₃/s + φ₃`, measured by `s(1 + P³|φ₃|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct W1Witness {
    pub s: u64,
    /// In `[1, s]`.
    pub b3: u64,
    pub phi3: f64,
    pub lhs: f64,
    /// `P^ε T₃⁸`.
    pub rhs_scale: f64,
    /// `lhs ≤ C0 · rhs_scale`.
    pub ok: bool,
}

/// Searches `s ≤ ⌈C0 P^ε T₃⁸⌉` for the least `s + P³‖sα₃‖`.
pub fn alpha3_witness(alpha3: f64, p: f64, t3: f64, eps: f64, cap: u64) -> Result<W1Witness> {
    if !t3.is_finite() || !(t3 > 0.0) {
        return Err(Error::Invalid("T₃ must be finite and positive".into()));
    }
    let p3 = p.powi(3);
    let rhs_scale = p.powf(eps) * t3.powi(8);
    let smax = (C0 * rhs_scale).ceil().max(1.0);
    let (mut best_s, mut best) = (1u64, 1.0 + p3 * dist_to_int(alpha3));
    // lhs(s) ≥ s, so no s beyond the current best can win
    let limit = smax.min(best.floor()).max(1.0);
    if limit > cap as f64 {
        return Err(Error::Budget(format!("witness search over {limit:.0} values exceeds cap {cap}")));
    }
    let mut s = 2u64;
    while (s as f64) <= smax && (s as f64) < best {
        let v = s as f64 + p3 * dist_to_int(s as f64 * alpha3);
        if v < best {
            best = v;
            best_s = s;
        }
        s += 1;
    }
    let mut b = (best_s as f64 * alpha3).round() as i64;
    let g = gcd(best_s as i64, b).max(1);
    let s = best_s / g as u64;
    b /= g;
    let phi3 = alpha3 - b as f64 / s as f64;
    let lhs = s as f64 * (1.0 + p3 * phi3.abs());
    let b3 = match b.rem_euclid(s as i64) as u64 {
        0 => s,
        v => v,
    };
    Ok(W1Witness { s, b3, phi3, lhs, rhs_scale, ok: lhs <= C0 * rhs_scale })
}

/// Which alternative of the differencing dichotomy a point satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// A small `u` with `‖suα₂‖` small was found.
    First,
    /// `T₂²` exceeds the threshold.
    Second,
    Both,
    Neither,
    /// The witness has `s > P`.
    Unclassifiable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub alpha3: f64,
    pub alpha2: f64,
    pub s_abs: f64,
    pub is_major: bool,
    pub t3: f64,
    pub t2: f64,
    pub s: Option<u64>,
    pub b3: Option<u64>,
    pub phi3: Option<f64>,
    pub w1_lhs: Option<f64>,
    pub w1_ok: Option<bool>,
    pub u: Option<u64>,
    pub alternative: Alternative,
}

/// Smallest `u ≤ umax` with `‖suα₂‖ ≤ bound`.
fn first_alternative(s: u64, alpha2: f64, umax: f64, bound: f64, cap: u64) -> Option<u64> {
    let umax = umax.min(cap as f64).floor() as u64;
    (1..=umax).find(|&u| dist_to_int((s * u) as f64 * alpha2) <= bound)
}

/// Scan settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub p: f64,
    pub grid: u64,
    pub samples: usize,
    pub seed: u64,
    pub delta: f64,
    pub eps: f64,
    pub cap: u64,
}

/// Evaluates `|S|` and the differencing diagnostics at one point.
pub fn scan_point(pair: &FormPair, w: &Weight, alpha3: f64, alpha2: f64, cfg: &ScanConfig) -> Result<ScanRow> {
    let n = pair.dim();
    let h = pair.h_parameter()?;
    let rho = rank_quadratic(&pair.quadric) as u32;
    if rho == 0 {
        return Err(Error::Invalid("Q has rank 0".into()));
    }
    let p = cfg.p;
    let s_abs = weyl_sum_direct(pair, p, w, alpha3, alpha2)?.norm();
    let is_major = major_arc_test(alpha3, alpha2, p, cfg.delta)?.is_major;
    let ht = heights_from_sum(s_abs, p, n, h, rho)?;
    let mut row = ScanRow {
        alpha3,
        alpha2,
        s_abs,
        is_major,
        t3: ht.t3,
        t2: ht.t2,
        s: None,
        b3: None,
        phi3: None,
        w1_lhs: None,
        w1_ok: None,
        u: None,
        alternative: Alternative::Unclassifiable,
    };
    if !ht.t3.is_finite() {
        return Ok(row);
    }
    let wit = alpha3_witness(alpha3, p, ht.t3, cfg.eps, cfg.cap)?;
    row.s = Some(wit.s);
    row.b3 = Some(wit.b3);
    row.phi3 = Some(wit.phi3);
    row.w1_lhs = Some(wit.lhs);
    row.w1_ok = Some(wit.ok);
    if wit.s as f64 > p {
        return Ok(row);
    }
    let t22 = ht.t2 * ht.t2;
    let weight = wit.s as f64 * (1.0 + p.powi(3) * wit.phi3.abs());
    let bound = C0 * p.powf(-2.0 + cfg.eps) * weight * t22;
    row.u = first_alternative(wit.s, alpha2, C0 * t22, bound, cfg.cap);
    let second = t22 >= p.powf(1.0 - cfg.eps) / (C0 * (wit.s as f64 + p.powi(3) * wit.phi3.abs()));
    row.alternative = match (row.u.is_some(), second) {
        (true, true) => Alternative::Both,
        (true, false) => Alternative::First,
        (false, true) => Alternative::Second,
        (false, false) => Alternative::Neither,
    };
    Ok(row)
}

/// The grid `(i/k, j/k)`, `1 ≤ i, j ≤ k`, followed by `samples` seeded
/// uniform points.
pub fn scan_points(cfg: &ScanConfig) -> Vec<(f64, f64)> {
    let k = cfg.grid;
    let mut pts: Vec<(f64, f64)> =
        (1..=k).flat_map(|i| (1..=k).map(move |j| (i as f64 / k as f64, j as f64 / k as f64))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    pts.extend((0..cfg.samples).map(|_| (rng.gen::<f64>(), rng.gen::<f64>())));
    pts
}

/// Diagnostics over [`scan_points`].
pub fn minor_arc_scan(pair: &FormPair, w: &Weight, cfg: &ScanConfig) -> Result<Vec<ScanRow>> {
    check_dim(pair.dim(), w.dim())?;
    scan_points(cfg).into_iter().map(|(a3, a2)| scan_point(pair, w, a3, a2, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsums::DEFAULT_CAP;
    use crate::forms::QuadraticForm;
    use proptest::prelude::*;

    #[test]
    fn bilinear_examples() {
        let c = CubicForm::diagonal(&[1]);
        assert_eq!(count_bilinear(&c, 5, DEFAULT_CAP).unwrap(), 17);
        let mut oracle = 0;
        for x in -4i64..=4 {
            for y in -4i64..=4 {
                if 6 * x * y == 0 {
                    oracle += 1;
                }
            }
        }
        assert_eq!(oracle, 17);
        assert_eq!(count_bilinear_full(&c, 5, DEFAULT_CAP).unwrap(), 17);
        assert_eq!(count_bilinear(&c, 1, DEFAULT_CAP).unwrap(), 1);
        let f = CubicForm::new(3, [([1, 2, 3], 1), ([1, 1, 1], 2)]).unwrap();
        assert_eq!(count_bilinear(&f, 1, DEFAULT_CAP).unwrap(), 1);
        // x = 0 contributes (2R − 1)ⁿ
        let zero = CubicForm::zero(2);
        assert_eq!(count_bilinear(&zero, 4, DEFAULT_CAP).unwrap(), 7u64.pow(4));
        assert!(count_bilinear_full(&f, 40, 1000).is_err());
    }

    #[test]
    fn fast_path_matches_full_scan() {
        let forms = [
            CubicForm::diagonal(&[1, 1, 1]),
            CubicForm::diagonal(&[1, 2, 0]),
            CubicForm::new(3, [([1, 2, 3], 1)]).unwrap(),
            CubicForm::new(3, [([1, 1, 2], 1), ([2, 3, 3], -1), ([1, 2, 3], 2)]).unwrap(),
            CubicForm::new(2, [([1, 1, 2], 1)]).unwrap(),
            CubicForm::new(2, [([1, 1, 1], 1), ([1, 1, 2], -3), ([1, 2, 2], 3), ([2, 2, 2], -1)]).unwrap(),
        ];
        for f in &forms {
            for r in 1..=4 {
                assert_eq!(
                    count_bilinear(f, r, DEFAULT_CAP).unwrap(),
                    count_bilinear_full(f, r, DEFAULT_CAP).unwrap(),
                    "{f:?} R={r}"
                );
            }
        }
    }

    #[test]
    fn bilinear_growth_is_bounded() {
        let f = bilinear_growth(&CubicForm::diagonal(&[1, 1, 1]), &[4, 8, 16], DEFAULT_CAP).unwrap();
        assert!(f.slope <= 3.5, "{f:?}");
    }

    #[test]
    fn height_examples() {
        let h = heights_from_sum(1000.0, 10.0, 3, 8, 4).unwrap();
        assert!((h.t3 - 1.0).abs() < 1e-12 && (h.t2 - 1.0).abs() < 1e-12);
        let h = heights_from_sum(1.0, 2.0, 8, 8, 4).unwrap();
        assert!((h.t3 - 2.0).abs() < 1e-12);
        assert!((h.t2 - 4.0).abs() < 1e-12);
        let h = heights_from_sum(1.0, 4.0, 8, 8, 4).unwrap();
        assert!((h.t3 - 4.0).abs() < 1e-12 && (h.t2 - 16.0).abs() < 1e-12);
        assert!(heights_from_sum(0.0, 4.0, 2, 2, 2).unwrap().t3.is_infinite());
    }

    proptest! {
        #[test]
        fn heights_relation(s in 1e-6f64..1.0, p in 1.0f64..100.0, n in 1usize..8, h in 1u32..40, rho in 1u32..40) {
            let w = heights_from_sum(s * p.powi(n as i32), p, n, h, rho).unwrap();
            let want = w.t3.powf(h as f64 / rho as f64);
            prop_assert!((w.t2 - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn witness_examples() {
        let w = alpha3_witness(3.0 / 7.0, 16.0, 2.0, DEFAULT_EPS, DEFAULT_CAP).unwrap();
        assert_eq!((w.s, w.b3), (7, 3));
        assert!(w.phi3.abs() < 1e-15);
        let p: f64 = 32.0;
        let w = alpha3_witness(0.5 + p.powi(-3), p, 1.0, DEFAULT_EPS, DEFAULT_CAP).unwrap();
        assert_eq!((w.s, w.b3), (2, 1));
        assert!((w.phi3 - p.powi(-3)).abs() < 1e-15);
        assert!((w.lhs - 4.0).abs() < 1e-9);
        assert!(w.ok);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let w = alpha3_witness(golden, 16.0, 3.0, DEFAULT_EPS, DEFAULT_CAP).unwrap();
        assert!(w.lhs <= C0 * w.rhs_scale);
        assert!(alpha3_witness(0.1, 16.0, f64::INFINITY, DEFAULT_EPS, DEFAULT_CAP).is_err());
    }

    fn scan_cfg() -> ScanConfig {
        ScanConfig { p: 12.0, grid: 3, samples: 4, seed: 9, delta: 1.0 / 7.0, eps: DEFAULT_EPS, cap: DEFAULT_CAP }
    }

    #[test]
    fn scan_behaviour() {
        let pair = FormPair::new(CubicForm::diagonal(&[1, 1]), QuadraticForm::diagonal(&[1, 2]))
            .unwrap()
            .with_nonsingular(true);
        let w = Weight::default_for(2);
        let cfg = scan_cfg();
        let rows = minor_arc_scan(&pair, &w, &cfg).unwrap();
        assert_eq!(rows.len(), 13);
        // (1, 1) is the trivial major arc: |S| is the full mass
        let top = rows[8];
        assert!(top.is_major);
        assert!(top.s == Some(1) && top.u == Some(1));
        assert!(rows.iter().all(|r| r.t3 >= top.t3 - 1e-12));
        assert_eq!(rows, minor_arc_scan(&pair, &w, &cfg).unwrap());
        // α₂ = 1/2 is caught by u = 2 or earlier
        let r = scan_point(&pair, &w, 1.0 / 3.0, 0.5, &cfg).unwrap();
        assert!(matches!(r.u, Some(u) if u <= 2), "{r:?}");
        let unknown_h = FormPair::new(CubicForm::diagonal(&[1, 1]), QuadraticForm::diagonal(&[1, 2])).unwrap();
        assert_eq!(scan_point(&unknown_h, &w, 0.1, 0.2, &cfg), Err(Error::HUnavailable));
    }

    #[test]
    fn seeded_points_repeat() {
        let a = scan_points(&scan_cfg());
        assert_eq!(a, scan_points(&scan_cfg()));
        let b = scan_points(&ScanConfig { seed: 10, ..scan_cfg() });
        assert_ne!(a[9..], b[9..]);
    }
}
