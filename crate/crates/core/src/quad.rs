//! Tensor-product quadrature for integrands that vanish, with all
//! derivatives, on the boundary of a box.
//!
//! For such integrands the trapezoid rule converges faster than any power
//! of the step, and doubling the number of intervals reuses the previous
//! grid. Refinement stops when two successive levels agree to `tol`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::reduce::{pairwise_sum_c, NeumaierC};

/// Deepest refinement level (2^12 intervals per axis).
pub const MAX_LEVEL: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub level: u32,
    pub points: u128,
}

/// `e(t) = exp(2πi t)`.
#[inline]
pub fn e(t: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, s)
}

/// Composite trapezoid rule with `2^level` intervals per axis.
pub fn trapezoid<F>(cube: &[(f64, f64)], level: u32, f: &F) -> Complex64
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = cube.len();
    let m = 1usize << level;
    let h: Vec<f64> = cube.iter().map(|(a, b)| (b - a) / m as f64).collect();
    let vol: f64 = h.iter().product();
    let wt = |j: usize| if j == 0 || j == m { 0.5 } else { 1.0 };
    if n == 0 {
        return f(&[]);
    }
    let slabs: Vec<Complex64> = (0..=m)
        .into_par_iter()
        .map(|j0| {
            let mut acc = NeumaierC::new();
            let mut idx = vec![0usize; n];
            idx[0] = j0;
            let mut x = vec![0.0; n];
            loop {
                let mut w = 1.0;
                for k in 0..n {
                    x[k] = cube[k].0 + idx[k] as f64 * h[k];
                    w *= wt(idx[k]);
                }
                acc.add(f(&x) * w);
                // odometer over axes 1..n
                let mut k = n;
                loop {
                    k -= 1;
                    if k == 0 {
                        return acc.value();
                    }
                    if idx[k] < m {
                        idx[k] += 1;
                        break;
                    }
                    idx[k] = 0;
                }
            }
        })
        .collect();
    pairwise_sum_c(&slabs) * vol
}

/// Nested trapezoid refinement from `min_level` until successive levels
/// differ by less than `tol`.
pub fn adaptive<F>(cube: &[(f64, f64)], tol: f64, cap: u64, f: &F) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if !(tol > 0.0) {
        return Err(Error::Invalid("tol must be positive".into()));
    }
    let n = cube.len() as u32;
    let min_level = 3;
    let mut prev = trapezoid(cube, min_level - 1, f);
    let mut last_change = f64::INFINITY;
    for level in min_level..=MAX_LEVEL {
        let points = ((1u128 << level) + 1).pow(n);
        if points > cap as u128 {
            return Err(Error::TooLarge { what: "quadrature grid", size: points, cap });
        }
        let cur = trapezoid(cube, level, f);
        last_change = (cur - prev).norm();
        if last_change < tol {
            return Ok(QuadResult { value: cur, error: last_change, level, points });
        }
        prev = cur;
    }
    Err(Error::NoConvergence { levels: MAX_LEVEL, last_change })
}

/// Fourier coefficients `∫ g(x) e(−c m·x) dx` for every `|m|∞ ≤ M`.
#[derive(Debug, Clone)]
pub struct FourierBatch {
    pub radius: i64,
    pub dim: usize,
    /// Indexed lexicographically over `[−M, M]ⁿ`.
    pub values: Vec<Complex64>,
    pub error: f64,
    /// FFT length per axis of the accepted grid.
    pub fft_len: usize,
}

impl FourierBatch {
    pub fn get(&self, m: &[i64]) -> Complex64 {
        let side = (2 * self.radius + 1) as usize;
        let idx = m.iter().fold(0usize, |acc, &v| acc * side + (v + self.radius) as usize);
        self.values[idx]
    }
}

/// Largest FFT array (per axis length to the power n).
const FFT_CAP: u128 = 1 << 24;

/// Trapezoid rule on the grid `a + j h` with `c h = 1/L`, evaluated for all
/// frequencies at once: samples are folded modulo `L` along each axis and
/// transformed with an n-dimensional FFT. The error estimate compares
/// against the sub-grid of even indices (`2h`, folded modulo `L/2`).
///
/// `bandwidth` is a frequency beyond which `ĝ` is negligible; it only sets
/// the starting grid. `g` must vanish outside the box.
pub fn fourier_batch<F>(
    cube: &[(f64, f64)],
    c: f64,
    radius: i64,
    bandwidth: f64,
    tol: f64,
    cap: u64,
    g: &F,
) -> Result<FourierBatch>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if !(c > 0.0) || radius < 0 {
        return Err(Error::Invalid("frequency scale must be positive and radius nonnegative".into()));
    }
    let n = cube.len();
    let need_half = (2 * radius + 1).max(radius + (bandwidth / c).ceil() as i64 + 1).max(8) as usize;
    let mut l = 2 * need_half;
    let mut last_change = f64::INFINITY;
    for _ in 0..4 {
        let h = 1.0 / (c * l as f64);
        let counts: Vec<usize> = cube.iter().map(|(a, b)| ((b - a) / h).ceil() as usize + 1).collect();
        let samples: u128 = counts.iter().map(|&v| v as u128).product();
        if samples > cap as u128 {
            return Err(Error::TooLarge { what: "Fourier quadrature grid", size: samples, cap });
        }
        if (l as u128).pow(n as u32) > FFT_CAP {
            return Err(Error::TooLarge { what: "FFT array", size: (l as u128).pow(n as u32), cap: FFT_CAP as u64 });
        }
        let fine = folded_spectrum(cube, &counts, h, 1, l, g);
        let coarse = folded_spectrum(cube, &counts, h, 2, l / 2, g);
        let side = (2 * radius + 1) as usize;
        let total = side.pow(n as u32);
        let mut values = Vec::with_capacity(total);
        let mut err = 0.0f64;
        let mut m = vec![-radius; n];
        for _ in 0..total {
            let shift: f64 = m.iter().zip(cube).map(|(&mi, (a, _))| mi as f64 * a).sum();
            let phase = e(-c * shift);
            let vf = fine[flat_index(&m, l)] * phase * h.powi(n as i32);
            let vc = coarse[flat_index(&m, l / 2)] * phase * (2.0 * h).powi(n as i32);
            err = err.max((vf - vc).norm());
            values.push(vf);
            for k in (0..n).rev() {
                if m[k] < radius {
                    m[k] += 1;
                    break;
                }
                m[k] = -radius;
            }
        }
        if err < tol {
            return Ok(FourierBatch { radius, dim: n, values, error: err, fft_len: l });
        }
        last_change = err;
        l *= 2;
    }
    Err(Error::NoConvergence { levels: 4, last_change })
}

fn flat_index(m: &[i64], l: usize) -> usize {
    m.iter().fold(0usize, |acc, &v| acc * l + v.rem_euclid(l as i64) as usize)
}

/// Folds `g(a + stride·j·h)` modulo `l` along every axis and returns the
/// forward n-dimensional DFT of the folded array.
fn folded_spectrum<F>(cube: &[(f64, f64)], counts: &[usize], h: f64, stride: usize, l: usize, g: &F) -> Vec<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let n = cube.len();
    let pts: Vec<usize> = counts.iter().map(|&v| (v - 1) / stride + 1).collect();
    let row_len = l.pow(n as u32 - 1);
    let rows: Vec<Vec<Complex64>> = (0..l)
        .into_par_iter()
        .map(|r| {
            let mut row = vec![Complex64::new(0.0, 0.0); row_len];
            let mut x = vec![0.0; n];
            let mut j0 = r;
            while j0 < pts[0] {
                x[0] = cube[0].0 + (stride * j0) as f64 * h;
                let mut idx = vec![0usize; n];
                loop {
                    for k in 1..n {
                        x[k] = cube[k].0 + (stride * idx[k]) as f64 * h;
                    }
                    let v = g(&x);
                    if v.re != 0.0 || v.im != 0.0 {
                        let flat = (1..n).fold(0usize, |acc, k| acc * l + idx[k] % l);
                        row[flat] += v;
                    }
                    let mut k = n;
                    let mut done = true;
                    while k > 1 {
                        k -= 1;
                        if idx[k] + 1 < pts[k] {
                            idx[k] += 1;
                            done = false;
                            break;
                        }
                        idx[k] = 0;
                    }
                    if done {
                        break;
                    }
                }
                j0 += l;
            }
            row
        })
        .collect();
    let mut data: Vec<Complex64> = rows.into_iter().flatten().collect();
    fft_nd(&mut data, l, n, false);
    data
}

/// In-place n-dimensional DFT of a row-major `lⁿ` array. The forward
/// transform uses `e(−jk/l)`, the inverse `e(+jk/l)`; neither is normalized.
pub(crate) fn fft_nd(data: &mut [Complex64], l: usize, n: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(l) } else { planner.plan_fft_forward(l) };
    let mut line = vec![Complex64::new(0.0, 0.0); l];
    for axis in 0..n {
        let stride_axis = l.pow((n - 1 - axis) as u32);
        let outer = l.pow(axis as u32);
        for o in 0..outer {
            for inner in 0..stride_axis {
                let base = o * l * stride_axis + inner;
                for (t, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + t * stride_axis];
                }
                fft.process(&mut line);
                for (t, v) in line.iter().enumerate() {
                    data[base + t * stride_axis] = *v;
                }
            }
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(k: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    for i in 0..k.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=k {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let pk = if k == 0 {
                1.0
            } else if k == 1 {
                x
            } else {
                p1
            };
            let pkm1 = if k == 1 { 1.0 } else { p0 };
            dp = k as f64 * (x * pk - pkm1) / (x * x - 1.0);
            let dx = pk / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    (nodes, weights)
}
