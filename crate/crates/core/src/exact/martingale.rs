//! Exact one-step check of the three two-particle martingales on the
//! homogeneous segment with reservoir conductances `omega_L, omega_R`.
//!
//! The chain is the jump chain of two dual particles on `{0..N}` that never
//! swap: from `(x, y)`, `x <= y`, each enabled hop is taken with probability
//! rate / total rate. Sites `0` and `N` absorb and may hold both particles.

use alloc::vec::Vec;

use crate::error::{bail_param, Result};

/// Harmonic function of one walker: `h(0) = 0`, `h(x) = 1/omega_L + x - 1`
/// in the bulk, `h(N) = 1/omega_L + 1/omega_R + N - 2`.
pub fn harmonic(big_n: usize, omega_left: f64, omega_right: f64, x: usize) -> f64 {
    if x == 0 {
        0.0
    } else if x < big_n {
        1.0 / omega_left + (x as f64) - 1.0
    } else {
        1.0 / omega_left + 1.0 / omega_right + (big_n as f64) - 2.0
    }
}

fn edge_rate(big_n: usize, omega_left: f64, omega_right: f64, z: usize) -> f64 {
    // conductance of the edge {z, z+1}
    if z == 0 {
        omega_left
    } else if z + 1 == big_n {
        omega_right
    } else {
        1.0
    }
}

/// Increment of `D_n` from the pair state `(x, y)`.
///
/// For an adjacent bulk pair the increment is `2 / (a + b)`, with `a` the
/// conductance behind `x` and `b` the one ahead of `y`: `1` away from the
/// boundary, `2/(omega_L + 1)` when `x = 1`, `2/(omega_R + 1)` when
/// `y = N - 1`. When both hold at once (only possible for `N = 3`) the
/// increment is `2/(omega_L + omega_R)`, not the sum of the two boundary terms.
pub fn d_increment(big_n: usize, omega_left: f64, omega_right: f64, x: usize, y: usize) -> f64 {
    let bulk = |z: usize| z != 0 && z != big_n;
    if y != x + 1 || !bulk(x) || !bulk(y) {
        return 0.0;
    }
    match (x == 1, y + 1 == big_n) {
        (true, true) => 2.0 / (omega_left + omega_right),
        (true, false) => 2.0 / (omega_left + 1.0),
        (false, true) => 2.0 / (omega_right + 1.0),
        (false, false) => 1.0,
    }
}

/// States `(x, y)` with `x < y`, or `x = y` on an absorbing site.
pub fn pair_states(big_n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for x in 0..=big_n {
        for y in x..=big_n {
            if x < y || x == 0 || x == big_n {
                out.push((x, y));
            }
        }
    }
    out
}

/// One-step kernel of the pair jump chain: `(next_state, probability)`.
pub fn pair_kernel(big_n: usize, omega_left: f64, omega_right: f64, x: usize, y: usize) -> Vec<((usize, usize), f64)> {
    let absorbing = |z: usize| z == 0 || z == big_n;
    let mut moves: Vec<((usize, usize), f64)> = Vec::new();
    let free = |z: usize, other: usize| absorbing(z) || z != other;
    if !absorbing(x) {
        if free(x - 1, y) {
            moves.push(((x - 1, y), edge_rate(big_n, omega_left, omega_right, x - 1)));
        }
        if free(x + 1, y) {
            moves.push(((x + 1, y), edge_rate(big_n, omega_left, omega_right, x)));
        }
    }
    if !absorbing(y) {
        if free(y - 1, x) {
            moves.push(((x, y - 1), edge_rate(big_n, omega_left, omega_right, y - 1)));
        }
        if free(y + 1, x) {
            moves.push(((x, y + 1), edge_rate(big_n, omega_left, omega_right, y)));
        }
    }
    let total: f64 = moves.iter().map(|(_, r)| r).sum();
    if total == 0.0 {
        return alloc::vec![((x, y), 1.0)];
    }
    moves.into_iter().map(|(s, r)| (s, r / total)).collect()
}

/// Largest one-step violation of each martingale.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MartingaleResiduals {
    /// `h(X^x) + h(X^y)`
    pub sum: f64,
    /// `h(X^y) - h(X^x) - D_n`
    pub difference: f64,
    /// `h(X^x) h(X^y) + D_n / 2`
    pub product: f64,
}

impl MartingaleResiduals {
    pub fn max(&self) -> f64 {
        self.sum.max(self.difference).max(self.product)
    }
}

/// Checks `E[M_1 | state] = M_0` on every state of the pair chain.
pub fn check_two_particle_martingales(big_n: usize, omega_left: f64, omega_right: f64) -> Result<MartingaleResiduals> {
    if big_n < 3 {
        bail_param!("martingale check needs N >= 3, got {big_n}");
    }
    if !(omega_left > 0.0 && omega_right > 0.0) {
        bail_param!("reservoir conductances must be positive");
    }
    let h = |z: usize| harmonic(big_n, omega_left, omega_right, z);
    let mut res = MartingaleResiduals::default();
    for (x, y) in pair_states(big_n) {
        let kernel = pair_kernel(big_n, omega_left, omega_right, x, y);
        let dd = d_increment(big_n, omega_left, omega_right, x, y);
        let (mut sum, mut diff, mut prod) = (0.0, 0.0, 0.0);
        for ((nx, ny), p) in kernel {
            sum += p * (h(nx) + h(ny));
            diff += p * (h(ny) - h(nx));
            prod += p * h(nx) * h(ny);
        }
        res.sum = res.sum.max((sum - (h(x) + h(y))).abs());
        res.difference = res.difference.max((diff - dd - (h(y) - h(x))).abs());
        res.product = res.product.max((prod + dd / 2.0 - h(x) * h(y)).abs());
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conductance_h_is_identity() {
        for x in 0..=4 {
            assert_eq!(harmonic(4, 1.0, 1.0, x), x as f64);
        }
        assert_eq!(harmonic(3, 2.0, 1.0, 1), 0.5);
        assert_eq!(harmonic(3, 2.0, 4.0, 3), 1.75);
    }

    #[test]
    fn martingales_on_grid() {
        for n in 3..=7 {
            for &(wl, wr) in &[(1.0, 1.0), (3.0, 0.5), (0.5, 3.0), (2.0, 2.0)] {
                let r = check_two_particle_martingales(n, wl, wr).unwrap();
                assert!(r.max() < 1e-12, "N={n} wl={wl} wr={wr}: {r:?}");
            }
        }
    }

    #[test]
    fn absorbed_pairs_are_fixed_points() {
        for s in [(0, 0), (0, 5), (5, 5)] {
            assert_eq!(pair_kernel(5, 1.0, 1.0, s.0, s.1), alloc::vec![(s, 1.0)]);
        }
    }

    #[test]
    fn summed_boundary_terms_fail_when_both_touch() {
        // at N = 3 the pair (1,2) sits on both boundaries at once
        let (wl, wr) = (1.0, 1.0);
        let h = |z| harmonic(3, wl, wr, z);
        let drift: f64 = pair_kernel(3, wl, wr, 1, 2).iter().map(|((a, b), p)| p * (h(*b) - h(*a))).sum::<f64>() - (h(2) - h(1));
        let summed = 2.0 / (wl + 1.0) + 2.0 / (wr + 1.0);
        assert!((drift - d_increment(3, wl, wr, 1, 2)).abs() < 1e-15);
        assert!((drift - summed).abs() > 0.5);
    }
}
