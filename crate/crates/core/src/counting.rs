//! Integer points on `C = Q = 0` in boxes and the weighted count
//! `N_ω(X; P) = Σ_{C(x)=Q(x)=0} ω(x/P)`.

use num_integer::Roots;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::forms::FormPair;
use crate::lattice::IntBox;
use crate::reduce::pairwise_sum;
use crate::weightfn::Weight;

/// How to enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scan {
    /// Diagonal fast path when available, else full scan.
    Auto,
    /// Test every point of the box.
    Full,
}

fn overflow_guard(pair: &FormPair, bx: &IntBox) -> Result<()> {
    let b = bx.max_abs() as i128;
    let bound = b
        .checked_mul(b)
        .and_then(|v| v.checked_mul(b))
        .and_then(|v| v.checked_mul(pair.cubic.height().max(pair.quadric.height()).max(1)));
    match bound {
        Some(v) if v < i128::MAX / 4 => Ok(()),
        _ => Err(Error::Overflow(format!("box radius {b} too large for exact evaluation"))),
    }
}

/// All points of `bx` with `C(x) = Q(x) = 0`, in lexicographic order.
pub fn enumerate_solutions(pair: &FormPair, bx: &IntBox) -> Result<Vec<Vec<i64>>> {
    enumerate_with(pair, bx, Scan::Auto)
}

pub fn enumerate_with(pair: &FormPair, bx: &IntBox, scan: Scan) -> Result<Vec<Vec<i64>>> {
    check_dim(pair.dim(), bx.dim())?;
    if bx.is_empty() {
        return Ok(Vec::new());
    }
    overflow_guard(pair, bx)?;
    let n = pair.dim();
    let diag = pair.quadric.diagonal_coeffs().filter(|d| d[n - 1] != 0);
    match (scan, diag) {
        (Scan::Auto, Some(d)) => Ok(diagonal_scan(pair, bx, &d)),
        _ => Ok(full_scan(pair, bx)),
    }
}

fn full_scan(pair: &FormPair, bx: &IntBox) -> Vec<Vec<i64>> {
    let slabs: Vec<Vec<Vec<i64>>> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut out = Vec::new();
            bx.slab(v).for_each(|x| {
                if pair.quadric.eval_unchecked(x) == 0 && pair.cubic.eval_unchecked(x) == 0 {
                    out.push(x.to_vec());
                }
            });
            out
        })
        .collect();
    slabs.into_iter().flatten().collect()
}

/// Solves `d_n x_n² = −Σ_{i<n} d_i x_i²` for the last coordinate.
fn diagonal_scan(pair: &FormPair, bx: &IntBox, d: &[i64]) -> Vec<Vec<i64>> {
    let n = d.len();
    let (lo, hi) = bx.ranges[n - 1];
    let dn = d[n - 1] as i128;
    let last = |prefix: &[i64], out: &mut Vec<Vec<i64>>| {
        let s: i128 = prefix.iter().zip(d).map(|(&x, &c)| c as i128 * x as i128 * x as i128).sum();
        if (-s) % dn != 0 {
            return;
        }
        let t = -s / dn;
        if t < 0 {
            return;
        }
        let r = t.sqrt();
        if r * r != t {
            return;
        }
        let roots: &[i128] = if r == 0 { &[0] } else { &[-r, r] };
        for &root in roots {
            let root = root as i64;
            if root < lo || root > hi {
                continue;
            }
            let mut x = prefix.to_vec();
            x.push(root);
            if pair.cubic.eval_unchecked(&x) == 0 {
                out.push(x);
            }
        }
    };
    if n == 1 {
        let mut out = Vec::new();
        last(&[], &mut out);
        return out;
    }
    let prefix_box = IntBox::new(bx.ranges[..n - 1].to_vec());
    let slabs: Vec<Vec<Vec<i64>>> = prefix_box
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut out = Vec::new();
            prefix_box.slab(v).for_each(|p| last(p, &mut out));
            out
        })
        .collect();
    slabs.into_iter().flatten().collect()
}

/// Number of solutions in `bx`.
pub fn count_box(pair: &FormPair, bx: &IntBox) -> Result<u64> {
    Ok(enumerate_solutions(pair, bx)?.len() as u64)
}

/// Weighted count together with the solutions that carry nonzero weight.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedCount {
    pub p: f64,
    pub value: f64,
    pub solutions: usize,
    #[serde(skip)]
    pub points: Vec<Vec<i64>>,
}

/// `N_ω(X; P)`.
pub fn count_weighted(pair: &FormPair, p: f64, w: &Weight) -> Result<f64> {
    Ok(count_weighted_detail(pair, p, w)?.value)
}

pub fn count_weighted_detail(pair: &FormPair, p: f64, w: &Weight) -> Result<WeightedCount> {
    check_dim(pair.dim(), w.dim())?;
    if !(p >= 1.0) {
        return Err(Error::Invalid(format!("P = {p} must be at least 1")));
    }
    let bx = w.support_box(p);
    let sols = enumerate_solutions(pair, &bx)?;
    let weights: Vec<f64> = sols.iter().map(|x| w.omega_scaled(x, p)).collect();
    let points: Vec<Vec<i64>> = sols.into_iter().zip(&weights).filter(|(_, &v)| v > 0.0).map(|(x, _)| x).collect();
    Ok(WeightedCount { p, value: pairwise_sum(&weights), solutions: points.len(), points })
}

/// Least-squares fit of `log N` against `log P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
}

pub fn fit_power_law(ps: &[f64], counts: &[f64]) -> Result<GrowthFit> {
    check_dim(ps.len(), counts.len())?;
    let pts: Vec<(f64, f64)> =
        ps.iter().zip(counts).filter(|(_, &c)| c > 0.0).map(|(&p, &c)| (p.ln(), c.ln())).collect();
    if pts.len() < 3 || pts.len() != ps.len() {
        return Err(Error::InsufficientData(format!(
            "{} of {} counts are positive; need all of at least 3",
            pts.len(),
            ps.len()
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("P values are not distinct".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / m).sqrt();
    Ok(GrowthFit { slope, intercept, residual })
}

/// Growth exponent of `N_ω(X; P)` over ascending `P` values.
pub fn growth_fit(pair: &FormPair, w: &Weight, ps: &[f64]) -> Result<GrowthFit> {
    if ps.windows(2).any(|v| v[0] >= v[1]) {
        return Err(Error::Invalid("P values must be strictly ascending".into()));
    }
    let counts = ps.iter().map(|&p| count_weighted(pair, p, w)).collect::<Result<Vec<_>>>()?;
    fit_power_law(ps, &counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{CubicForm, QuadraticForm};

    fn line_pair() -> FormPair {
        FormPair::new(CubicForm::diagonal(&[1, 1]), QuadraticForm::diagonal(&[1, -1])).unwrap()
    }

    #[test]
    fn line_fixture_has_21_points() {
        let pair = line_pair();
        let bx = IntBox::cube(2, 10);
        // double loop oracle
        let mut oracle = Vec::new();
        for a in -10i64..=10 {
            for b in -10i64..=10 {
                if a * a * a + b * b * b == 0 && a * a - b * b == 0 {
                    oracle.push(vec![a, b]);
                }
            }
        }
        let sols = enumerate_solutions(&pair, &bx).unwrap();
        assert_eq!(sols.len(), 21);
        assert_eq!(sols, oracle);
        assert!(sols.iter().all(|x| x[0] == -x[1]));
        assert_eq!(enumerate_with(&pair, &bx, Scan::Full).unwrap(), sols);
    }

    #[test]
    fn empty_and_forced_zero() {
        let pair = line_pair();
        assert!(enumerate_solutions(&pair, &IntBox::new(vec![(3, 2), (0, 1)])).unwrap().is_empty());
        let p1 = FormPair::new(CubicForm::diagonal(&[1]), QuadraticForm::diagonal(&[1])).unwrap();
        assert_eq!(enumerate_solutions(&p1, &IntBox::cube(1, 5)).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn overflow_is_reported() {
        let pair = line_pair();
        let bx = IntBox::cube(2, i64::MAX / 2);
        assert!(matches!(count_box(&pair, &bx), Err(Error::Overflow(_))));
    }

    #[test]
    fn weighted_examples() {
        let pair = line_pair();
        let w = Weight::new(vec![2.0 / 16.0, -2.0 / 16.0], 0.05).unwrap();
        let v = count_weighted(&pair, 16.0, &w).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        let w0 = Weight::new(vec![0.0, 0.0], 0.4).unwrap();
        assert!((count_weighted(&pair, 1.0, &w0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        // ball around (0.3, 0.3) misses the line x1 = -x2
        let far = Weight::new(vec![0.3, 0.3], 0.1).unwrap();
        assert_eq!(count_weighted(&pair, 20.0, &far).unwrap(), 0.0);
        assert!(count_weighted(&pair, 0.5, &w0).is_err());
    }

    #[test]
    fn power_law_fit() {
        let ps = [2.0, 4.0, 8.0, 16.0];
        let f = fit_power_law(&ps, &ps.map(|p| p * p)).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-9);
        let f = fit_power_law(&ps, &[3.0; 4]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        assert!(matches!(fit_power_law(&ps, &[1.0, 0.0, 1.0, 1.0]), Err(Error::InsufficientData(_))));
        assert!(fit_power_law(&ps[..2], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn line_fixture_grows_linearly() {
        let pair = line_pair();
        let w = Weight::new(vec![0.0, 0.0], 0.45).unwrap();
        let f = growth_fit(&pair, &w, &[8.0, 16.0, 32.0, 64.0]).unwrap();
        assert!((f.slope - 1.0).abs() < 0.05, "slope {}", f.slope);
    }
}
