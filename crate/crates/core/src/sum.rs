//! Pairwise (binary-tree) summation with a fixed reduction order.
//!
//! [`pairwise_sum`] and [`PairwiseSum`] produce the same tree for the same
//! input sequence, so a streamed sum and a slice sum agree bit for bit.

/// Streaming pairwise accumulator. Holds one partial sum per level of the
/// tree, so memory is logarithmic in the number of terms.
#[derive(Debug, Clone)]
pub struct PairwiseSum {
    // partial sums of blocks with strictly decreasing power-of-two sizes;
    // the set bits of `count` give the sizes
    stack: [f64; 64],
    depth: usize,
    count: u64,
}

impl Default for PairwiseSum {
    fn default() -> Self {
        Self {
            stack: [0.0; 64],
            depth: 0,
            count: 0,
        }
    }
}

impl PairwiseSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        let mut value = x;
        let mut c = self.count;
        while c & 1 == 1 {
            self.depth -= 1;
            value = self.stack[self.depth] + value;
            c >>= 1;
        }
        self.stack[self.depth] = value;
        self.depth += 1;
        self.count += 1;
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Folds the remaining partial sums from the smallest block upward.
    pub fn total(&self) -> f64 {
        let mut iter = self.stack[..self.depth].iter().rev();
        let Some(&(mut acc)) = iter.next() else {
            return 0.0;
        };
        for &v in iter {
            acc = v + acc;
        }
        acc
    }
}

impl Extend<f64> for PairwiseSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

/// Pairwise sum of a slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    let mut acc = PairwiseSum::new();
    acc.extend(values.iter().copied());
    acc.total()
}

/// Trapezoid rule on a uniform grid, summed interval by interval so that a
/// constant integrand over a power-of-two number of intervals is exact.
#[derive(Debug, Clone, Default)]
pub struct Trapezoid {
    sum: PairwiseSum,
    prev: Option<f64>,
}

impl Trapezoid {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, y: f64) {
        if let Some(p) = self.prev {
            self.sum.push(0.5 * (p + y));
        }
        self.prev = Some(y);
    }

    /// Integral for node spacing `h`.
    pub fn integral(&self, h: f64) -> f64 {
        self.sum.total() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recursive(values: &[f64]) -> f64 {
        // Same tree as the stream: split off the largest power of two.
        match values.len() {
            0 => 0.0,
            1 => values[0],
            len => {
                let head = if len.is_power_of_two() { len / 2 } else { 1 << (usize::BITS - 1 - len.leading_zeros()) };
                recursive(&values[..head]) + recursive(&values[head..])
            }
        }
    }

    #[test]
    fn constant_power_of_two_is_exact() {
        let values = vec![1.0 / 6.0; 1024];
        assert_eq!(pairwise_sum(&values), 1024.0 * (1.0 / 6.0));
        let mut t = Trapezoid::new();
        for _ in 0..=1024 {
            t.push(1.0 / 6.0);
        }
        assert_eq!(t.integral(1.0 / 1024.0), 1.0 / 6.0);
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.5]), 3.5);
        assert_eq!(Trapezoid::new().integral(0.1), 0.0);
    }

    #[test]
    fn beats_naive_summation() {
        let values = vec![0.1; 1 << 20];
        let naive: f64 = values.iter().sum();
        let exact = 0.1 * (1u64 << 20) as f64;
        assert!((pairwise_sum(&values) - exact).abs() < (naive - exact).abs());
    }

    #[test]
    fn trapezoid_is_second_order() {
        let integral = |k: usize| {
            let mut t = Trapezoid::new();
            for i in 0..=k {
                t.push((i as f64 / k as f64).exp());
            }
            t.integral(1.0 / k as f64)
        };
        let exact = std::f64::consts::E - 1.0;
        let ratio = (integral(64) - exact) / (integral(128) - exact);
        assert!((ratio - 4.0).abs() < 0.01, "{ratio}");
    }

    proptest! {
        #[test]
        fn stream_matches_tree(values in proptest::collection::vec(-1e3f64..1e3, 0..300)) {
            prop_assert_eq!(pairwise_sum(&values).to_bits(), recursive(&values).to_bits());
        }
    }
}
