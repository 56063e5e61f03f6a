//! Solution counts modulo q, p-adic densities, the truncated singular
//! series and a search for smooth p-adic points.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{checked_pow, factorize, gcd3, is_prime, modq, valuation};
use crate::error::{check_cap, Error, Result};
use crate::expsums::complete_sums_all_a;
use crate::forms::{FormPair, QuadraticForm};
use crate::lattice::IntBox;
use crate::reduce::{pairwise_sum, NeumaierC};

fn is_solution(pair: &FormPair, x: &[i64], q: i64) -> bool {
    modq(pair.quadric.eval_unchecked(x), q) == 0 && modq(pair.cubic.eval_unchecked(x), q) == 0
}

fn residue_budget(pair: &FormPair, q: u64, cap: u64) -> Result<()> {
    let size = checked_pow(q, pair.dim() as u32).unwrap_or(u128::MAX);
    check_cap("residue vectors", size, cap)
}

/// `N(q) = #{x mod q : C(x) ≡ Q(x) ≡ 0 mod q}` by exhaustive scan.
pub fn count_mod(pair: &FormPair, q: u64, cap: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    residue_budget(pair, q, cap)?;
    let bx = IntBox::residues(pair.dim(), q as i64);
    let counts: Vec<u64> = bx
        .leading_values()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| {
            let mut c = 0u64;
            bx.slab(v).for_each(|x| {
                if is_solution(pair, x, q as i64) {
                    c += 1;
                }
            });
            c
        })
        .collect();
    Ok(if pair.dim() == 0 { 1 } else { counts.iter().sum() })
}

fn check_prime(p: u64) -> Result<()> {
    if !is_prime(p) {
        return Err(Error::Invalid(format!("{p} is not prime")));
    }
    Ok(())
}

/// Solutions modulo `p^k`, grown one level at a time: every solution mod
/// `p^k` reduces to one mod `p^{k−1}`, so only lifts `x + p^{k−1}t` are tested.
struct Lifter<'a> {
    pair: &'a FormPair,
    p: u64,
    level: u32,
    modulus: i64,
    sols: Vec<Vec<i64>>,
}

impl<'a> Lifter<'a> {
    fn new(pair: &'a FormPair, p: u64) -> Self {
        Self { pair, p, level: 0, modulus: 1, sols: vec![vec![0; pair.dim()]] }
    }

    fn work_next(&self) -> u128 {
        (self.sols.len() as u128).saturating_mul(checked_pow(self.p, self.pair.dim() as u32).unwrap_or(u128::MAX))
    }

    fn step(&mut self, cap: u64) -> Result<()> {
        check_cap("lifting work", self.work_next(), cap)?;
        let n = self.pair.dim();
        let base = self.modulus;
        let next = base
            .checked_mul(self.p as i64)
            .ok_or_else(|| Error::Overflow(format!("modulus {base}·{} overflows", self.p)))?;
        let digits = IntBox::residues(n, self.p as i64);
        let pair = self.pair;
        let lifted: Vec<Vec<Vec<i64>>> = self
            .sols
            .par_iter()
            .map(|x| {
                let mut out = Vec::new();
                let mut y = vec![0i64; n];
                digits.for_each(|t| {
                    for i in 0..n {
                        y[i] = x[i] + base * t[i];
                    }
                    if is_solution(pair, &y, next) {
                        out.push(y.clone());
                    }
                });
                out
            })
            .collect();
        let mut sols: Vec<Vec<i64>> = lifted.into_iter().flatten().collect();
        sols.sort_unstable();
        self.sols = sols;
        self.modulus = next;
        self.level += 1;
        Ok(())
    }

    fn primitive(&self) -> u64 {
        let p = self.p as i64;
        self.sols.iter().filter(|x| x.iter().any(|v| v % p != 0)).count() as u64
    }
}

/// `p^{k(n−2)}` as a rational (the exponent may be negative).
fn normalizer(p: u64, k: u32, n: usize) -> BigRational {
    let e = k as i64 * (n as i64 - 2);
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(base)
    } else {
        BigRational::new(1.into(), base)
    }
}

/// `δ_p(k) = N(p^k) / p^{k(n−2)}`, exactly.
pub fn local_density(pair: &FormPair, p: u64, k: u32, cap: u64) -> Result<BigRational> {
    check_prime(p)?;
    let mut l = Lifter::new(pair, p);
    for _ in 0..k {
        l.step(cap)?;
    }
    Ok(BigRational::from_integer((l.sols.len() as u64).into()) / normalizer(p, k, pair.dim()))
}

/// One level of a density table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityLevel {
    pub k: u32,
    pub count: u64,
    /// Solutions with `x ≢ 0 mod p`.
    pub primitive_count: u64,
    /// `N(p^k)/p^{k(n−2)}` as `num/den`.
    pub density: String,
    pub density_f64: f64,
    /// `N*(p^k)/p^{k(n−2)}` as `num/den`.
    pub primitive_density: String,
    #[serde(skip)]
    pub exact: BigRational,
    #[serde(skip)]
    pub primitive_exact: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HenselReport {
    pub p: u64,
    pub levels: Vec<DensityLevel>,
    /// Primitive densities agree from `level` through the last computed `k`.
    pub stable: bool,
    pub level: Option<u32>,
    /// The budget ran out before `kmax`.
    pub partial: bool,
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Density table for `k = 1..=kmax` with a stabilization verdict on the
/// primitive densities.
///
/// The full density can never stabilize at `k = 1` in dimension `n ≥ 3`:
/// the solution `x ≡ 0` alone contributes `p^{k(2−n)}`. Primitive counts
/// remove it and are constant once every primitive solution lifts smoothly.
pub fn hensel_stable(pair: &FormPair, p: u64, kmax: u32, cap: u64) -> Result<HenselReport> {
    check_prime(p)?;
    if kmax == 0 {
        return Err(Error::Invalid("kmax must be at least 1".into()));
    }
    let n = pair.dim();
    let mut l = Lifter::new(pair, p);
    let mut levels = Vec::new();
    let mut partial = false;
    for k in 1..=kmax {
        match l.step(cap) {
            Ok(()) => {}
            Err(e) if e.is_budget() && k > 1 => {
                partial = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let norm = normalizer(p, k, n);
        let count = l.sols.len() as u64;
        let prim = l.primitive();
        let exact = BigRational::from_integer(count.into()) / &norm;
        let primitive_exact = BigRational::from_integer(prim.into()) / &norm;
        levels.push(DensityLevel {
            k,
            count,
            primitive_count: prim,
            density: rational_string(&exact),
            density_f64: exact.to_f64().unwrap_or(f64::NAN),
            primitive_density: rational_string(&primitive_exact),
            exact,
            primitive_exact,
        });
    }
    let mut level = None;
    if levels.len() >= 2 {
        let last = &levels.last().expect("nonempty").primitive_exact;
        let mut start = levels.len() - 1;
        while start > 0 && &levels[start - 1].primitive_exact == last {
            start -= 1;
        }
        if start < levels.len() - 1 && !last.is_zero() {
            level = Some(levels[start].k);
        }
    }
    Ok(HenselReport { p, levels, stable: level.is_some(), level, partial })
}

/// `Π_{p ≤ R} δ_p(k)` with full counts.
pub fn euler_product(pair: &FormPair, r: u64, k: u32, cap: u64) -> Result<f64> {
    let mut prod = 1.0;
    for p in (2..=r).filter(|&p| is_prime(p)) {
        prod *= local_density(pair, p, k, cap)?.to_f64().unwrap_or(f64::NAN);
    }
    Ok(prod)
}

/// `Σ*_a S(a, q)` over `gcd(q, a₃, a₂) = 1` and `A(q) = Σ*_a |S(a, q)|`.
fn reduced_sums(pair: &FormPair, q: u64, cap: u64) -> Result<(num_complex::Complex64, f64)> {
    let all = complete_sums_all_a(pair, q, cap)?;
    let qi = q as i64;
    let mut acc = NeumaierC::new();
    let mut abs = Vec::new();
    for a3 in 0..qi {
        for a2 in 0..qi {
            if gcd3(qi, a3, a2) == 1 {
                let s = all[(a3 * qi + a2) as usize];
                acc.add(s);
                abs.push(s.norm());
            }
        }
    }
    Ok((acc.value(), pairwise_sum(&abs)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub q: u64,
    /// `q^{−n} Σ*_a S(a, q)`, real part.
    pub term: f64,
    pub imag: f64,
    pub partial_sum: f64,
    /// `A(q)`.
    pub a_of_q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub r: u64,
    pub value: f64,
    pub max_imag: f64,
    pub terms: Vec<SeriesTerm>,
}

/// `𝔖(R) = Σ_{q ≤ R} q^{−n} Σ*_a S(a, q)` with its per-q trace.
pub fn singular_series_truncated(pair: &FormPair, r: u64, cap: u64) -> Result<SeriesReport> {
    if r == 0 {
        return Err(Error::Invalid("R must be at least 1".into()));
    }
    let n = pair.dim() as u32;
    let work: u128 = (1..=r).map(|q| checked_pow(q, n).unwrap_or(u128::MAX)).fold(0u128, u128::saturating_add);
    if work > cap as u128 {
        return Err(Error::Budget(format!("singular series up to R={r} needs {work} residue evaluations (cap {cap})")));
    }
    let mut terms = Vec::new();
    let mut partial = 0.0;
    let mut max_imag = 0.0f64;
    for q in 1..=r {
        let (s, a) = reduced_sums(pair, q, cap)?;
        let t = s / (q as f64).powi(n as i32);
        partial += t.re;
        max_imag = max_imag.max(t.im.abs());
        terms.push(SeriesTerm { q, term: t.re, imag: t.im, partial_sum: partial, a_of_q: a });
    }
    Ok(SeriesReport { r, value: partial, max_imag, terms })
}

/// `A(q) = Σ*_a |S(a, q)|`.
pub fn a_of_q(pair: &FormPair, q: u64, cap: u64) -> Result<f64> {
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    Ok(reduced_sums(pair, q, cap)?.1)
}

/// `q = q₀q₁q₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QFactorization {
    pub q0: u64,
    pub q1: u64,
    pub q2: u64,
}

/// `v(p)`: the largest power of `p` dividing some `2d_i`, `i < n`.
/// Zero coefficients are skipped.
pub fn v_exponent(d: &[i64], p: u64) -> u32 {
    let last = d.len().saturating_sub(1);
    d[..last].iter().filter(|&&c| c != 0).map(|&c| valuation(2 * c as i128, p)).max().unwrap_or(0)
}

/// Splits `q` into `q₀` (primes with `p^{1+v(p)} | a₃`), then the cube-full
/// part `q₂` and cube-free part `q₁` of the rest.
pub fn q_factorization(q: u64, a3: i64, quadric: &QuadraticForm) -> Result<QFactorization> {
    let d = quadric.diagonal_coeffs().ok_or(Error::NonDiagonal)?;
    if q == 0 {
        return Err(Error::Invalid("q must be positive".into()));
    }
    let mut f = QFactorization { q0: 1, q1: 1, q2: 1 };
    for (p, e) in factorize(q) {
        let pe = p.pow(e);
        let need = 1 + v_exponent(&d, p);
        if a3 == 0 || valuation(a3 as i128, p) >= need {
            f.q0 *= pe;
        } else if e >= 3 {
            f.q2 *= pe;
        } else {
            f.q1 *= pe;
        }
    }
    Ok(f)
}

/// Outcome of the p-adic point search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum QpVerdict {
    /// `x mod p^k` solves both congruences and the Jacobian has rank 2
    /// modulo `p`, so `x` lifts to a point over `ℚ_p`.
    SmoothLiftable { x: Vec<i64>, k: u32, modulus: u64 },
    /// Primitive solutions mod `p` exist, none with Jacobian rank 2.
    OnlySingular,
    /// No primitive solution mod `p`. This does not prove insolubility.
    NoneFound,
}

fn jacobian_mod(pair: &FormPair, x: &[i64], p: i64) -> (Vec<i64>, Vec<i64>) {
    let gc = pair.cubic.gradient(x).expect("dimension checked");
    let gq = pair.quadric.gradient(x).expect("dimension checked");
    (gc.into_iter().map(|v| modq(v, p)).collect(), gq.into_iter().map(|v| modq(v, p)).collect())
}

fn invertible_minor(j: &(Vec<i64>, Vec<i64>), p: i64) -> Option<(usize, usize)> {
    let n = j.0.len();
    for a in 0..n {
        for b in a + 1..n {
            if modq(j.0[a] as i128 * j.1[b] as i128 - j.0[b] as i128 * j.1[a] as i128, p) != 0 {
                return Some((a, b));
            }
        }
    }
    None
}

fn inv_mod(a: i64, p: i64) -> i64 {
    let (mut r0, mut r1, mut s0, mut s1) = (a.rem_euclid(p), p, 1i64, 0i64);
    while r1 != 0 {
        let t = r0 / r1;
        (r0, r1) = (r1, r0 - t * r1);
        (s0, s1) = (s1, s0 - t * s1);
    }
    s0.rem_euclid(p)
}

/// Lifts a smooth solution mod `p` to one mod `p^k` by Newton steps in the
/// two coordinates of an invertible minor.
fn hensel_lift(pair: &FormPair, x: &[i64], p: i64, k: u32) -> Result<Vec<i64>> {
    let jac = jacobian_mod(pair, x, p);
    let (a, b) = invertible_minor(&jac, p).expect("smooth point");
    let det = modq(jac.0[a] as i128 * jac.1[b] as i128 - jac.0[b] as i128 * jac.1[a] as i128, p);
    let dinv = inv_mod(det, p);
    let mut y = x.to_vec();
    let mut pk: i64 = p;
    for _ in 1..k {
        let c = pair.cubic.eval_unchecked(&y);
        let q = pair.quadric.eval_unchecked(&y);
        debug_assert!(modq(c, pk) == 0 && modq(q, pk) == 0);
        let (rc, rq) = (modq(-(c / pk as i128), p) as i128, modq(-(q / pk as i128), p) as i128);
        // solve [[Ja, Jb], [Ka, Kb]] (ta, tb) ≡ (rc, rq) mod p
        let ta = modq(dinv as i128 * (jac.1[b] as i128 * rc - jac.0[b] as i128 * rq), p);
        let tb = modq(dinv as i128 * (jac.0[a] as i128 * rq - jac.1[a] as i128 * rc), p);
        y[a] += ta * pk;
        y[b] += tb * pk;
        pk = pk.checked_mul(p).ok_or_else(|| Error::Overflow(format!("p^{k} overflows")))?;
        for v in y.iter_mut() {
            *v = v.rem_euclid(pk);
        }
    }
    Ok(y)
}

/// Looks for a smooth primitive solution mod `p` and lifts it to `p^kmax`.
pub fn qp_solubility_search(pair: &FormPair, p: u64, kmax: u32, cap: u64) -> Result<QpVerdict> {
    check_prime(p)?;
    if kmax == 0 {
        return Err(Error::Invalid("kmax must be at least 1".into()));
    }
    let modulus = checked_pow(p, kmax)
        .filter(|&m| m <= 1 << 40)
        .ok_or_else(|| Error::Overflow(format!("{p}^{kmax} too large")))? as u64;
    residue_budget(pair, p, cap)?;
    let pi = p as i64;
    let bx = IntBox::residues(pair.dim(), pi);
    let mut any = false;
    let mut smooth = None;
    bx.for_each(|x| {
        if smooth.is_some() || x.iter().all(|&v| v == 0) || !is_solution(pair, x, pi) {
            return;
        }
        any = true;
        if invertible_minor(&jacobian_mod(pair, x, pi), pi).is_some() {
            smooth = Some(x.to_vec());
        }
    });
    match smooth {
        Some(x) => {
            let y = hensel_lift(pair, &x, pi, kmax)?;
            assert!(is_solution(pair, &y, modulus as i64), "lift failed at {y:?}");
            Ok(QpVerdict::SmoothLiftable { x: y, k: kmax, modulus })
        }
        None if any => Ok(QpVerdict::OnlySingular),
        None => Ok(QpVerdict::NoneFound),
    }
}

/// Local data gathered for one problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub primes: Vec<HenselReport>,
    pub series: SeriesReport,
    pub euler_product: f64,
}

pub fn density_report(pair: &FormPair, primes: &[u64], kmax: u32, r: u64, cap: u64) -> Result<DensityReport> {
    let tables = primes.iter().map(|&p| hensel_stable(pair, p, kmax, cap)).collect::<Result<Vec<_>>>()?;
    let series = singular_series_truncated(pair, r, cap)?;
    let euler = euler_product(pair, r, kmax, cap)?;
    Ok(DensityReport { primes: tables, series, euler_product: euler })
}
