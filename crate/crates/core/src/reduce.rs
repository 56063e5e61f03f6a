//! Deterministic floating-point reductions.
//!
//! Every parallel sum in the crate goes through these helpers. The shape of
//! the reduction tree depends only on the length of the input, never on the
//! number of worker threads, so results are bit-identical across pool sizes.

use num_complex::Complex64;

/// Leaf size of the pairwise tree.
const LEAF: usize = 64;
/// Below this many leaves the tree is walked on the current thread.
const PAR_LEAVES: usize = 16;

/// Neumaier (improved Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Complex Neumaier accumulator (independent real and imaginary parts).
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierC {
    re: Neumaier,
    im: Neumaier,
}

impl NeumaierC {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        self.re.add(v.re);
        self.im.add(v.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Compensated pairwise sum with a fixed tree shape.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    tree(
        xs,
        &|leaf: &[f64]| {
            let mut acc = Neumaier::new();
            leaf.iter().for_each(|&v| acc.add(v));
            acc.value()
        },
        &|a, b| a + b,
        0.0,
    )
}

/// Complex variant of [`pairwise_sum`].
pub fn pairwise_sum_c(xs: &[Complex64]) -> Complex64 {
    tree(
        xs,
        &|leaf: &[Complex64]| {
            let mut acc = NeumaierC::new();
            leaf.iter().for_each(|&v| acc.add(v));
            acc.value()
        },
        &|a, b| a + b,
        Complex64::new(0.0, 0.0),
    )
}

fn tree<T, R, L, C>(xs: &[T], leaf: &L, combine: &C, zero: R) -> R
where
    T: Sync,
    R: Send + Sync + Copy,
    L: Fn(&[T]) -> R + Sync,
    C: Fn(R, R) -> R + Sync,
{
    if xs.is_empty() {
        return zero;
    }
    let leaves = xs.len().div_ceil(LEAF);
    if leaves == 1 {
        return leaf(xs);
    }
    // split on a leaf boundary near the middle
    let mid = leaves.div_ceil(2) * LEAF;
    let (lo, hi) = xs.split_at(mid.min(xs.len()));
    let (a, b) = if leaves >= PAR_LEAVES {
        rayon::join(|| tree(lo, leaf, combine, zero), || tree(hi, leaf, combine, zero))
    } else {
        (tree(lo, leaf, combine, zero), tree(hi, leaf, combine, zero))
    };
    combine(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_small_terms() {
        let mut acc = Neumaier::new();
        acc.add(1.0);
        acc.add(1e100);
        acc.add(1.0);
        acc.add(-1e100);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn pairwise_matches_exact_integers() {
        let xs: Vec<f64> = (0..10_000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 49_995_000.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn pairwise_independent_of_pool_size() {
        let xs: Vec<f64> = (0..100_000).map(|i| ((i as f64) * 0.37).sin() / 3.0).collect();
        let run =
            |k: usize| rayon::ThreadPoolBuilder::new().num_threads(k).build().unwrap().install(|| pairwise_sum(&xs));
        let one = run(1);
        assert_eq!(one.to_bits(), run(3).to_bits());
        assert_eq!(one.to_bits(), run(8).to_bits());
    }
}
