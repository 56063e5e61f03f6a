//! Axis-aligned integer boxes and their lexicographic traversal.

use crate::error::{Error, Result};

/// Inclusive integer ranges, one per coordinate. A range with `lo > hi` is empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntBox {
    pub ranges: Vec<(i64, i64)>,
}

impl IntBox {
    pub fn new(ranges: Vec<(i64, i64)>) -> Self {
        Self { ranges }
    }

    /// The cube `[-r, r]^n`.
    pub fn cube(n: usize, r: i64) -> Self {
        Self::new(vec![(-r, r); n])
    }

    /// Residues `[0, q)^n`.
    pub fn residues(n: usize, q: i64) -> Self {
        Self::new(vec![(0, q - 1); n])
    }

    /// Parses `a:b,c:d,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut ranges = Vec::new();
        for part in s.split(',') {
            let (a, b) = part
                .split_once(':')
                .ok_or_else(|| Error::Invalid(format!("box range '{part}' is not of the form a:b")))?;
            let a: i64 = a.trim().parse().map_err(|_| Error::Invalid(format!("bad bound '{a}'")))?;
            let b: i64 = b.trim().parse().map_err(|_| Error::Invalid(format!("bad bound '{b}'")))?;
            ranges.push((a, b));
        }
        Ok(Self::new(ranges))
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.iter().any(|&(a, b)| a > b)
    }

    /// Number of lattice points (saturating).
    pub fn len(&self) -> u128 {
        if self.is_empty() {
            return 0;
        }
        self.ranges.iter().fold(1u128, |acc, &(a, b)| acc.saturating_mul((b - a + 1) as u128))
    }

    /// Largest absolute coordinate over the box.
    pub fn max_abs(&self) -> i64 {
        self.ranges.iter().map(|&(a, b)| a.abs().max(b.abs())).max().unwrap_or(0)
    }

    /// Values of the first coordinate, used to partition work.
    #[allow(clippy::reversed_empty_ranges)]
    pub fn leading_values(&self) -> std::ops::RangeInclusive<i64> {
        match self.ranges.first() {
            Some(&(a, b)) if !self.is_empty() => a..=b,
            _ => 1..=0,
        }
    }

    /// The sub-box with the first coordinate pinned to `v`.
    pub fn slab(&self, v: i64) -> IntBox {
        let mut r = self.ranges.clone();
        if let Some(first) = r.first_mut() {
            *first = (v, v);
        }
        IntBox::new(r)
    }

    /// Visits every point in lexicographic order.
    pub fn for_each<F: FnMut(&[i64])>(&self, mut f: F) {
        if self.is_empty() {
            return;
        }
        let n = self.dim();
        if n == 0 {
            f(&[]);
            return;
        }
        let mut x: Vec<i64> = self.ranges.iter().map(|r| r.0).collect();
        loop {
            f(&x);
            let mut i = n;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                if x[i] < self.ranges[i].1 {
                    x[i] += 1;
                    break;
                }
                x[i] = self.ranges[i].0;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let b = IntBox::new(vec![(0, 1), (-1, 0)]);
        let mut pts = Vec::new();
        b.for_each(|x| pts.push(x.to_vec()));
        assert_eq!(pts, vec![vec![0, -1], vec![0, 0], vec![1, -1], vec![1, 0]]);
        assert_eq!(b.len(), 4);
    }

    #[test]
    fn empty_and_parse() {
        let b = IntBox::new(vec![(0, 3), (2, 1)]);
        assert!(b.is_empty());
        let mut c = 0;
        b.for_each(|_| c += 1);
        assert_eq!(c, 0);
        assert_eq!(IntBox::parse("-2:2, 0:5").unwrap().ranges, vec![(-2, 2), (0, 5)]);
        assert!(IntBox::parse("1-2").is_err());
    }
}
