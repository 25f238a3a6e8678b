use alloc::vec;
use alloc::vec::Vec;

use super::rng::SimRng;

/// Binary indexed tree over nonnegative channel rates, supporting point
/// updates and proportional sampling in `O(log n)`.
#[derive(Debug, Clone)]
pub struct RateTree {
    rates: Vec<f64>,
    tree: Vec<f64>,
    sum: f64,
    updates: u32,
}

impl RateTree {
    pub fn new(n: usize) -> Self {
        Self { rates: vec![0.0; n], tree: vec![0.0; n + 1], sum: 0.0, updates: 0 }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    pub fn set(&mut self, i: usize, rate: f64) {
        let delta = rate - self.rates[i];
        if delta == 0.0 {
            return;
        }
        self.rates[i] = rate;
        self.sum += delta;
        self.updates += 1;
        if self.updates == 1 << 16 {
            // re-sum from the leaves so rounding drift cannot build up
            self.updates = 0;
            self.sum = self.rates.iter().sum();
        }
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        self.sum
    }

    /// Channel whose cumulative rate interval contains `target`, restricted
    /// to channels with positive rate.
    pub fn find(&self, target: f64) -> usize {
        let n = self.rates.len();
        let mut pos = 0;
        let mut rem = target;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < rem {
                rem -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        // guard against rounding landing on a zero-rate channel
        let mut i = pos.min(n - 1);
        while self.rates[i] == 0.0 && i > 0 {
            i -= 1;
        }
        while self.rates[i] == 0.0 && i + 1 < n {
            i += 1;
        }
        i
    }

    pub fn sample(&self, total: f64, rng: &mut SimRng) -> usize {
        self.find(rng.uniform() * total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::rng::RngStream;

    #[test]
    fn find_respects_intervals() {
        let mut t = RateTree::new(5);
        for (i, r) in [1.0, 0.0, 2.0, 0.5, 0.0].iter().enumerate() {
            t.set(i, *r);
        }
        assert_eq!(t.total(), 3.5);
        assert_eq!(t.find(0.5), 0);
        assert_eq!(t.find(1.0), 0);
        assert_eq!(t.find(1.2), 2);
        assert_eq!(t.find(3.2), 3);
        assert_eq!(t.find(3.5), 3);
        t.set(2, 0.0);
        assert_eq!(t.find(1.2), 3);
    }

    #[test]
    fn sampling_frequencies() {
        let mut t = RateTree::new(3);
        t.set(0, 1.0);
        t.set(2, 3.0);
        let mut rng = RngStream::new(3, 0).rng();
        let n = 40_000;
        let hits = (0..n).filter(|_| t.sample(4.0, &mut rng) == 2).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * libm::sqrt(0.75 * 0.25 / n as f64));
    }
}
