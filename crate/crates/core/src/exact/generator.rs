use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail_capacity, Error, Result};
use crate::lattice::{GraphSpec, OccupancyConfig};
use crate::linalg::{Csr, Dense};

/// Systems up to this dimension are solved by dense LU; larger ones iterate.
pub const DENSE_STATIONARY_LIMIT: usize = 2048;

/// Continuous-time generator: nonnegative off-diagonal rates, diagonal equal
/// to minus the row sum.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    off: Csr,
    diag: Vec<f64>,
}

impl RateMatrix {
    /// Builds a generator from per-row off-diagonal transitions. Repeated
    /// targets are merged and the diagonal is set from the row sums.
    pub fn from_transitions(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut merged = Vec::with_capacity(rows.len());
        let mut diag = Vec::with_capacity(rows.len());
        for (i, mut r) in rows.into_iter().enumerate() {
            r.retain(|&(j, v)| j != i && v != 0.0);
            r.sort_by_key(|&(j, _)| j);
            let mut out: Vec<(usize, f64)> = Vec::with_capacity(r.len());
            for (j, v) in r {
                match out.last_mut() {
                    Some(last) if last.0 == j => last.1 += v,
                    _ => out.push((j, v)),
                }
            }
            diag.push(-out.iter().map(|&(_, v)| v).sum::<f64>());
            merged.push(out);
        }
        Self { off: Csr::from_rows(&merged), diag }
    }

    pub fn dimension(&self) -> usize {
        self.diag.len()
    }

    /// Off-diagonal `(column, rate)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.off.row(i)
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else {
            self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).sum()
        }
    }

    /// Largest `|sum_j q_ij|` over rows.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dimension())
            .map(|i| (self.diag[i] + self.row(i).map(|(_, v)| v).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    /// `(Q f)(i) = sum_j q_ij (f(j) - f(i))`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dimension())
            .map(|i| self.row(i).map(|(j, v)| v * (f[j] - f[i])).sum())
            .collect()
    }

    /// Row vector times generator, `(pi Q)(j)`.
    pub fn left_apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = pi.iter().zip(&self.diag).map(|(p, d)| p * d).collect();
        for i in 0..self.dimension() {
            for (j, v) in self.row(i) {
                out[j] += pi[i] * v;
            }
        }
        out
    }

    fn transpose_off(&self) -> Csr {
        let n = self.dimension();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                cols[j].push((i, v));
            }
        }
        Csr::from_rows(&cols)
    }
}

/// Generator of the open exclusion process over all `2^{N-1}` configurations,
/// configuration `eta` having index `eta.bits()`.
pub fn build_sep_generator(g: &GraphSpec) -> Result<RateMatrix> {
    g.require_exact_size()?;
    let n = g.n_sites;
    let dim = 1usize << n;
    let right_bit = 1u64 << (n - 1);
    let mut rows = Vec::with_capacity(dim);
    for s in 0..dim as u64 {
        let mut r = Vec::with_capacity(g.edges.len() + 2);
        for e in &g.edges {
            let (bx, by) = (1u64 << (e.x - 1), 1u64 << (e.y - 1));
            if (s & bx != 0) != (s & by != 0) {
                r.push(((s ^ bx ^ by) as usize, e.weight));
            }
        }
        let left = if s & 1 != 0 { 1.0 - g.rho_left } else { g.rho_left };
        r.push(((s ^ 1) as usize, g.omega_left * left));
        let right = if s & right_bit != 0 { 1.0 - g.rho_right } else { g.rho_right };
        r.push(((s ^ right_bit) as usize, g.omega_right * right));
        rows.push(r);
    }
    Ok(RateMatrix::from_transitions(rows))
}

/// Probability vector over all configurations of a graph.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub graph: GraphSpec,
    pub probs: Vec<f64>,
}

impl StationaryDistribution {
    pub fn prob(&self, eta: &OccupancyConfig) -> f64 {
        self.probs[eta.bits() as usize]
    }

    /// `E[prod_{x in sites} eta(x)]`.
    pub fn product_moment(&self, mask: u64) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .filter(|(s, _)| *s as u64 & mask == mask)
            .map(|(_, p)| p)
            .sum()
    }

    /// `E[prod (eta(x_i) - E eta(x_i))]`, the centered correlation.
    pub fn centered_moment(&self, sites: &[usize]) -> f64 {
        let means: Vec<f64> = sites.iter().map(|&x| self.product_moment(1 << (x - 1))).collect();
        self.probs
            .iter()
            .enumerate()
            .map(|(s, p)| {
                let f: f64 = sites
                    .iter()
                    .zip(&means)
                    .map(|(&x, m)| ((s >> (x - 1) & 1) as f64) - m)
                    .product();
                p * f
            })
            .sum()
    }

    /// Largest entrywise distance to another distribution on the same space.
    pub fn max_deviation(&self, other: &[f64]) -> f64 {
        self.probs.iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// The unique `pi` with `pi Q = 0`, `sum pi = 1`.
///
/// One balance equation is replaced by the normalization and the system is
/// solved by LU with partial pivoting; above [`DENSE_STATIONARY_LIMIT`]
/// states a Gauss-Seidel sweep on the balance equations is used instead.
pub fn stationary_distribution(q: &RateMatrix) -> Result<Vec<f64>> {
    let dim = q.dimension();
    if dim == 0 {
        bail_capacity!("empty generator");
    }
    let pi = if dim <= DENSE_STATIONARY_LIMIT { stationary_dense(q)? } else { stationary_iterative(q)? };
    let residual = q.left_apply(&pi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if residual > 1e-9 {
        return Err(Error::Numerical { message: "stationary residual too large".into(), residual });
    }
    Ok(pi)
}

fn stationary_dense(q: &RateMatrix) -> Result<Vec<f64>> {
    let dim = q.dimension();
    let mut a = Dense::zeros(dim);
    // row j of the system: sum_i pi_i q_ij = 0; row 0 is replaced by normalization
    for i in 0..dim {
        if i != 0 {
            a.add(i, i, q.diagonal(i));
        }
        for (j, v) in q.row(i) {
            if j != 0 {
                a.add(j, i, v);
            }
        }
    }
    for i in 0..dim {
        a.set(0, i, 1.0);
    }
    let mut b = vec![0.0; dim];
    b[0] = 1.0;
    Ok(a.lu()?.solve(&b))
}

fn stationary_iterative(q: &RateMatrix) -> Result<Vec<f64>> {
    let dim = q.dimension();
    let incoming = q.transpose_off();
    let mut pi = vec![1.0 / dim as f64; dim];
    let max_sweeps = 100 * dim.max(1000);
    let mut residual = f64::INFINITY;
    for sweep in 0..max_sweeps {
        for j in 0..dim {
            let inflow: f64 = incoming.row(j).map(|(i, v)| pi[i] * v).sum();
            pi[j] = inflow / -q.diagonal(j);
        }
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        if sweep % 10 == 9 {
            residual = q.left_apply(&pi).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if residual < 1e-14 {
                return Ok(pi);
            }
        }
    }
    Err(Error::Numerical { message: "Gauss-Seidel did not converge".into(), residual })
}

/// Exact stationary law of the open process on `g`.
pub fn solve_stationary(g: &GraphSpec) -> Result<StationaryDistribution> {
    let q = build_sep_generator(g)?;
    Ok(StationaryDistribution { graph: g.clone(), probs: stationary_distribution(&q)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{homogeneous_segment, Edge};

    #[test]
    fn single_site_rates() {
        let g = homogeneous_segment(1, 1.0, 1.0, 0.2, 0.8).unwrap();
        let q = build_sep_generator(&g).unwrap();
        assert!((q.rate(0, 1) - (0.2 + 0.8)).abs() < 1e-15);
        assert!((q.rate(1, 0) - (0.8 + 0.2)).abs() < 1e-15);
        let pi = stationary_distribution(&q).unwrap();
        assert!((pi[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn bulk_hop_rate() {
        let g = homogeneous_segment(2, 1.0, 1.0, 0.3, 0.6).unwrap();
        let q = build_sep_generator(&g).unwrap();
        // (1,0) has bits 0b01, (0,1) has 0b10
        assert_eq!(q.rate(0b01, 0b10), 1.0);
        assert_eq!(q.rate(0b10, 0b01), 1.0);
        assert!(q.max_row_sum() < 1e-12);
    }

    #[test]
    fn equal_densities_give_bernoulli_product() {
        let rho = 0.35;
        let mut g = homogeneous_segment(5, 0.7, 2.0, rho, rho).unwrap();
        g.edges.push(Edge::new(1, 4, 0.3));
        g.edges[1].weight = 2.5;
        let sd = solve_stationary(&g).unwrap();
        for (s, p) in sd.probs.iter().enumerate() {
            let k = (s as u64).count_ones() as i32;
            let expect = libm::pow(rho, k as f64) * libm::pow(1.0 - rho, (5 - k) as f64);
            assert!((p - expect).abs() < 1e-10);
        }
    }

    #[test]
    fn iterative_route_agrees_with_dense() {
        let g = homogeneous_segment(6, 1.3, 0.4, 0.1, 0.9).unwrap();
        let q = build_sep_generator(&g).unwrap();
        let a = stationary_dense(&q).unwrap();
        let b = stationary_iterative(&q).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn capacity_cap_enforced() {
        let g = homogeneous_segment(21, 1.0, 1.0, 0.2, 0.8).unwrap();
        assert!(matches!(build_sep_generator(&g), Err(Error::Capacity(_))));
    }
}
