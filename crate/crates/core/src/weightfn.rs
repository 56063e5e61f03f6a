//! The smooth bump weight `ω(x) = ν(‖x − x₀‖ / ξ)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// `ν(t) = exp(−1/(1 − t²))` for `|t| < 1`, else 0.
///
/// Returns exactly 0 once `1 − t² ≤ 1e−12`; the true value there is far
/// below the smallest subnormal.
#[inline]
pub fn nu(t: f64) -> f64 {
    let d = 1.0 - t * t;
    if !(d > 1e-12) {
        return 0.0;
    }
    (-1.0 / d).exp()
}

/// Default radius used when a problem file omits the weight.
pub const DEFAULT_XI: f64 = 0.4;

/// Radial bump centred at `center` with radius `xi ∈ (0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    #[serde(rename = "x0")]
    pub center: Vec<f64>,
    pub xi: f64,
}

impl Weight {
    pub fn new(center: Vec<f64>, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi <= 1.0) {
            return Err(Error::Invalid(format!("xi = {xi} outside (0, 1]")));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("weight center must be finite".into()));
        }
        Ok(Self { center, xi })
    }

    /// Centred at the origin with radius [`DEFAULT_XI`].
    pub fn default_for(n: usize) -> Self {
        Self { center: vec![0.0; n], xi: DEFAULT_XI }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn omega(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.omega_unchecked(x))
    }

    #[inline]
    pub(crate) fn omega_unchecked(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, b)| (a - b) * (a - b)).sum();
        nu(r2.sqrt() / self.xi)
    }

    /// `ω(x / P)` for an integer point.
    #[inline]
    pub(crate) fn omega_scaled(&self, x: &[i64], p: f64) -> f64 {
        let r2: f64 = x
            .iter()
            .zip(&self.center)
            .map(|(&a, b)| {
                let d = a as f64 / p - b;
                d * d
            })
            .sum();
        nu(r2.sqrt() / self.xi)
    }

    /// Whether the closed support ball lies inside the open box `(−1/2, 1/2)ⁿ`.
    pub fn inside_unit_box(&self) -> bool {
        self.center.iter().all(|&c| c - self.xi > -0.5 && c + self.xi < 0.5)
    }

    /// Integer box containing every `x` with `x / P` in the support.
    pub fn support_box(&self, p: f64) -> crate::lattice::IntBox {
        crate::lattice::IntBox::new(
            self.center
                .iter()
                .map(|&c| (((c - self.xi) * p).ceil() as i64, ((c + self.xi) * p).floor() as i64))
                .collect(),
        )
    }

    /// Per-axis real intervals `[x₀ − ξ, x₀ + ξ]`.
    pub fn support_cube(&self) -> Vec<(f64, f64)> {
        self.center.iter().map(|&c| (c - self.xi, c + self.xi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn nu_values() {
        assert_eq!(nu(0.0), (-1.0f64).exp());
        assert!((nu(0.0) - 0.3678794).abs() < 1e-7);
        assert_eq!(nu(1.0), 0.0);
        assert_eq!(nu(-2.0), 0.0);
        assert!((nu(0.5) - (-4.0f64 / 3.0).exp()).abs() < 1e-16);
        assert!((nu(0.5) - 0.2635971).abs() < 1e-7);
    }

    #[test]
    fn omega_values() {
        let w = Weight::new(vec![0.1, -0.2], 0.3).unwrap();
        assert_eq!(w.omega(&[0.1, -0.2]).unwrap(), (-1.0f64).exp());
        assert_eq!(w.omega(&[0.4, -0.2]).unwrap(), 0.0);
        let mid = w.omega(&[0.1, -0.2 + 0.15]).unwrap();
        assert!((mid - (-4.0f64 / 3.0).exp()).abs() < 1e-12);
        assert!(w.omega(&[0.0]).is_err());
        assert!(Weight::new(vec![0.0], 0.0).is_err());
        assert!(Weight::new(vec![0.0], 1.5).is_err());
    }

    #[test]
    fn box_warning() {
        assert!(Weight::new(vec![0.0, 0.0], 0.4).unwrap().inside_unit_box());
        assert!(!Weight::new(vec![0.2, 0.0], 0.4).unwrap().inside_unit_box());
    }

    #[test]
    fn smooth_at_support_boundary() {
        // finite differences of orders 1..4 at t = 1 shrink with the step
        for order in 1..=4usize {
            let mut prev = f64::INFINITY;
            for &h in &[1e-2, 1e-3, 1e-4] {
                let mut d = 0.0;
                for k in 0..=order {
                    let binom = (0..k).fold(1.0, |acc, i| acc * (order - i) as f64 / (i + 1) as f64);
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    d += sign * binom * nu(1.0 + (order as f64 / 2.0 - k as f64) * h);
                }
                let deriv = (d / h.powi(order as i32)).abs();
                assert!(deriv <= prev + 1e-300, "order {order} h {h}: {deriv} > {prev}");
                prev = deriv;
            }
            assert!(prev < 1e-3, "order {order}: {prev}");
        }
    }

    proptest! {
        #[test]
        fn vanishes_outside_ball(dx in -3.0f64..3.0, dy in -3.0f64..3.0) {
            let w = Weight::new(vec![0.05, -0.1], 0.25).unwrap();
            let r = (dx * dx + dy * dy).sqrt();
            let v = w.omega(&[0.05 + dx, -0.1 + dy]).unwrap();
            if r >= 0.25 {
                prop_assert_eq!(v, 0.0);
            }
            prop_assert!((0.0..=(-1.0f64).exp()).contains(&v));
        }

        #[test]
        fn radially_decreasing(a in 0.0f64..0.5, b in 0.0f64..0.5, t in 0.0f64..6.0) {
            let w = Weight::new(vec![0.0, 0.0], 0.4).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let p = |r: f64| w.omega(&[r * t.cos(), r * t.sin()]).unwrap();
            prop_assert!(p(lo) >= p(hi));
        }
    }
}
