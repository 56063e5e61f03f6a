//! Cross-module identities checked against independent computations.

use circlelab::counting::{count_box, count_weighted};
use circlelab::expsums::{complete_sums_all_a, weyl_sum_direct, DEFAULT_CAP};
use circlelab::lattice::IntBox;
use circlelab::localdens::{count_mod, local_density};
use circlelab::{CubicForm, FormPair, QuadraticForm, Weight};
use num_traits::ToPrimitive;
use proptest::prelude::*;

fn pair3() -> FormPair {
    FormPair::new(
        CubicForm::new(3, [([1, 1, 1], 1), ([1, 2, 3], -2), ([2, 2, 3], 1)]).unwrap(),
        QuadraticForm::new(3, [([1, 1], 1), ([2, 3], 1), ([3, 3], -2)]).unwrap(),
    )
    .unwrap()
}

/// N(q) = q⁻² Σ_{a mod q} S(a, q; 0) by orthogonality of characters.
#[test]
fn counts_from_complete_sums() {
    let pair = pair3();
    for q in [2u64, 3, 4, 5, 6, 9] {
        let sums = complete_sums_all_a(&pair, q, DEFAULT_CAP).unwrap();
        let total: f64 = sums.iter().map(|z| z.re).sum::<f64>() / (q * q) as f64;
        let n = count_mod(&pair, q, DEFAULT_CAP).unwrap();
        assert!((total - n as f64).abs() < 1e-6, "q={q}: {total} vs {n}");
    }
}

/// Brute-force count by evaluating both forms at every residue.
#[test]
fn count_mod_matches_naive_loop() {
    let pair = pair3();
    for q in [3i64, 4, 7] {
        let mut n = 0;
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    let x = [a, b, c];
                    if pair.cubic.eval(&x).unwrap() % q as i128 == 0 && pair.quadric.eval(&x).unwrap() % q as i128 == 0
                    {
                        n += 1;
                    }
                }
            }
        }
        assert_eq!(count_mod(&pair, q as u64, DEFAULT_CAP).unwrap(), n);
    }
}

#[test]
fn density_is_normalized_count() {
    let pair = pair3();
    let d = local_density(&pair, 3, 2, DEFAULT_CAP).unwrap();
    let n = count_mod(&pair, 9, DEFAULT_CAP).unwrap();
    // δ_p(k) = N(p^k) / p^{k(n−2)}
    assert!((d.to_f64().unwrap() - n as f64 / 9.0).abs() < 1e-12);
}

/// S(0, 0) is the weighted box sum, and the weighted count never exceeds
/// the raw count in the support box when ω ≤ 1.
#[test]
fn weyl_sum_at_origin_is_mass() {
    let pair = pair3();
    let w = Weight::new(vec![0.1, -0.05, 0.0], 0.3).unwrap();
    let p = 12.0;
    let s = weyl_sum_direct(&pair, p, &w, 0.0, 0.0).unwrap();
    let mut mass = 0.0;
    w.support_box(p).for_each(|x| {
        let y: Vec<f64> = x.iter().map(|&v| v as f64 / p).collect();
        mass += w.omega(&y).unwrap();
    });
    assert!((s.re - mass).abs() < 1e-9 * mass && s.im == 0.0);
    let nw = count_weighted(&pair, p, &w).unwrap();
    assert!(nw <= count_box(&pair, &w.support_box(p)).unwrap() as f64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn weyl_sum_is_periodic(a3 in 0.0f64..1.0, a2 in 0.0f64..1.0, k3 in -3i32..3, k2 in -3i32..3) {
        let pair = pair3();
        let w = Weight::default_for(3);
        let s = weyl_sum_direct(&pair, 6.0, &w, a3, a2).unwrap();
        let t = weyl_sum_direct(&pair, 6.0, &w, a3 + k3 as f64, a2 + k2 as f64).unwrap();
        prop_assert!((s - t).norm() < 1e-9 * (1.0 + s.norm()));
    }

    #[test]
    fn box_counts_are_additive(lo in -4i64..0, mid in 0i64..3, hi in 3i64..6) {
        let pair = pair3();
        let whole = count_box(&pair, &IntBox::new(vec![(lo, hi), (-3, 3), (-3, 3)])).unwrap();
        let left = count_box(&pair, &IntBox::new(vec![(lo, mid), (-3, 3), (-3, 3)])).unwrap();
        let right = count_box(&pair, &IntBox::new(vec![(mid + 1, hi), (-3, 3), (-3, 3)])).unwrap();
        prop_assert_eq!(whole, left + right);
    }
}
