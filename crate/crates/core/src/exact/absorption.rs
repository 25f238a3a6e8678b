//! Absorption laws of the dual process by exact linear solves.
//!
//! Absorbed particles never return, so the future number of particles
//! absorbed at `N` depends only on the current bulk occupancy. The transient
//! dual states are therefore grouped into layers by particle count `j`, and
//! layer `j` only feeds into layer `j - 1`. On each layer the system reads
//! `(D - S) u_j = r_j`, where `S` holds the symmetric bulk hop rates and `D`
//! the total exit rate (hops plus absorptions); `D - S` is symmetric positive
//! definite on a connected graph, so small layers go through dense LU and
//! large ones through conjugate gradients.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail_capacity, bail_param, Result};
use crate::lattice::{GraphSpec, SiteSet};
use crate::linalg::{conjugate_gradient, Csr};

/// Layers of at most this many states are solved by dense LU.
pub const DENSE_LAYER_LIMIT: usize = 4096;
/// Cap on `sum_j C(N-1, j) * (k + 1)` for a `k`-particle level solve.
pub const ABSORPTION_STATE_CAP: usize = 1 << 20;

const CG_TOL: f64 = 1e-13;

/// Law of `xi_inf(N)` for a dual process started from `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionTable {
    pub start: SiteSet,
    /// `probs[l] = P(xi_inf(N) = l)` for `l = 0..=|start|`.
    pub probs: Vec<f64>,
}

impl AbsorptionTable {
    /// `P(xi_inf(0) = m)`, read off by particle conservation.
    pub fn absorbed_at_zero(&self, m: usize) -> f64 {
        let k = self.start.len();
        if m > k {
            0.0
        } else {
            self.probs[k - m]
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// All `n`-bit masks with `j` bits set, increasing (Gosper's hack).
fn masks_with_popcount(n: usize, j: usize) -> Vec<u64> {
    if j == 0 {
        return vec![0];
    }
    if j > n {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(binomial(n, j));
    let limit = 1u64 << n;
    let mut m = (1u64 << j) - 1;
    while m < limit {
        out.push(m);
        let c = m & m.wrapping_neg();
        let r = m + c;
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

struct Layer {
    masks: Vec<u64>,
    matrix: Csr,
}

impl Layer {
    fn rank(&self, m: u64) -> usize {
        self.masks.binary_search(&m).expect("mask belongs to layer")
    }
}

struct LayeredDual<'g> {
    g: &'g GraphSpec,
    left_bit: u64,
    right_bit: u64,
}

impl<'g> LayeredDual<'g> {
    fn new(g: &'g GraphSpec) -> Result<Self> {
        g.require_valid()?;
        Ok(Self { g, left_bit: 1, right_bit: 1u64 << (g.n_sites - 1) })
    }

    fn layer(&self, j: usize) -> Layer {
        let masks = masks_with_popcount(self.g.n_sites, j);
        let mut rows = Vec::with_capacity(masks.len());
        for &m in &masks {
            let mut row = Vec::new();
            let mut exit = 0.0;
            for e in &self.g.edges {
                let (bx, by) = (1u64 << (e.x - 1), 1u64 << (e.y - 1));
                if (m & bx != 0) != (m & by != 0) {
                    let to = m ^ bx ^ by;
                    row.push((masks.binary_search(&to).unwrap(), -e.weight));
                    exit += e.weight;
                }
            }
            if m & self.left_bit != 0 {
                exit += self.g.omega_left;
            }
            if m & self.right_bit != 0 {
                exit += self.g.omega_right;
            }
            row.push((masks.binary_search(&m).unwrap(), exit));
            rows.push(row);
        }
        Layer { masks, matrix: Csr::from_rows(&rows) }
    }

    /// Solves layers `1..=k` bottom-up. `rhs(prev, prev_vals, prev_cols, mask, out)`
    /// accumulates the right-hand side of one state from the layer below.
    fn solve_up_to(
        &self,
        k: usize,
        columns: impl Fn(usize) -> usize,
        rhs: impl Fn(&Layer, &[f64], usize, u64, &mut [f64]),
    ) -> Result<(Layer, Vec<f64>)> {
        let mut prev = Layer { masks: vec![0], matrix: Csr::default() };
        let mut prev_vals = vec![1.0];
        for j in 1..=k {
            let layer = self.layer(j);
            let (cols, prev_cols) = (columns(j), columns(j - 1));
            let dim = layer.masks.len();
            let mut b = vec![vec![0.0; dim]; cols];
            let mut scratch = vec![0.0; cols];
            for (i, &m) in layer.masks.iter().enumerate() {
                scratch.iter_mut().for_each(|v| *v = 0.0);
                rhs(&prev, &prev_vals, prev_cols, m, &mut scratch);
                for c in 0..cols {
                    b[c][i] = scratch[c];
                }
            }
            let sol = solve_columns(&layer.matrix, &b)?;
            let mut vals = vec![0.0; dim * cols];
            for (c, col) in sol.iter().enumerate() {
                for i in 0..dim {
                    vals[i * cols + c] = col[i];
                }
            }
            prev = layer;
            prev_vals = vals;
        }
        Ok((prev, prev_vals))
    }
}

fn solve_columns(a: &Csr, b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if a.n <= DENSE_LAYER_LIMIT {
        let lu = a.to_dense().lu()?;
        Ok(b.iter().map(|col| lu.solve(col)).collect())
    } else {
        b.iter().map(|col| conjugate_gradient(a, col, CG_TOL, 10 * a.n)).collect()
    }
}

fn check_start(g: &GraphSpec, start: &SiteSet) -> Result<()> {
    if let Some(m) = start.max() {
        if m > g.n_sites {
            bail_param!("start site {m} outside the bulk 1..={}", g.n_sites);
        }
    }
    Ok(())
}

/// Full level distribution `P_I(xi_inf(N) = l)`, `l = 0..=|I|`.
pub fn absorption_distribution(g: &GraphSpec, start: &SiteSet) -> Result<AbsorptionTable> {
    let solver = LayeredDual::new(g)?;
    check_start(g, start)?;
    let k = start.len();
    let states: usize = (0..=k).map(|j| binomial(g.n_sites, j)).sum::<usize>() * (k + 1);
    if states > ABSORPTION_STATE_CAP {
        bail_capacity!("{states} dual states exceed the cap of {ABSORPTION_STATE_CAP}");
    }
    if k == 0 {
        return Ok(AbsorptionTable { start: start.clone(), probs: vec![1.0] });
    }
    let (lb, rb) = (solver.left_bit, solver.right_bit);
    let (wl, wr) = (g.omega_left, g.omega_right);
    let (layer, vals) = solver.solve_up_to(
        k,
        |j| j + 1,
        |prev, prev_vals, prev_cols, m, out| {
            if m & lb != 0 {
                let i = prev.rank(m ^ lb);
                for l in 0..prev_cols {
                    out[l] += wl * prev_vals[i * prev_cols + l];
                }
            }
            if m & rb != 0 {
                let i = prev.rank(m ^ rb);
                for l in 0..prev_cols {
                    out[l + 1] += wr * prev_vals[i * prev_cols + l];
                }
            }
        },
    )?;
    let i = layer.rank(start.mask());
    let probs = vals[i * (k + 1)..(i + 1) * (k + 1)].to_vec();
    Ok(AbsorptionTable { start: start.clone(), probs })
}

/// `P_I(xi_inf(N) = |I|)`: absorption at 0 is treated as failure, so a
/// single right-hand side per layer suffices.
pub fn all_absorbed_at_n(g: &GraphSpec, start: &SiteSet) -> Result<f64> {
    let solver = LayeredDual::new(g)?;
    check_start(g, start)?;
    let k = start.len();
    let states: usize = (0..=k).map(|j| binomial(g.n_sites, j)).sum();
    if states > ABSORPTION_STATE_CAP {
        bail_capacity!("{states} dual states exceed the cap of {ABSORPTION_STATE_CAP}");
    }
    if k == 0 {
        return Ok(1.0);
    }
    let (layer, vals) = all_at_n_layers(&solver, k)?;
    Ok(vals[layer.rank(start.mask())])
}

fn all_at_n_layers(solver: &LayeredDual<'_>, k: usize) -> Result<(Layer, Vec<f64>)> {
    let rb = solver.right_bit;
    let wr = solver.g.omega_right;
    solver.solve_up_to(
        k,
        |_| 1,
        |prev, prev_vals, _, m, out| {
            if m & rb != 0 {
                out[0] += wr * prev_vals[prev.rank(m ^ rb)];
            }
        },
    )
}

/// `P_J(xi_inf(N) = |J|)` for every subset `J` of the bulk, indexed by mask.
pub fn all_absorbed_table(g: &GraphSpec) -> Result<Vec<f64>> {
    g.require_exact_size()?;
    let solver = LayeredDual::new(g)?;
    let n = g.n_sites;
    let mut table = vec![0.0; 1usize << n];
    table[0] = 1.0;
    let rb = solver.right_bit;
    let wr = g.omega_right;
    let mut prev = Layer { masks: vec![0], matrix: Csr::default() };
    let mut prev_vals = vec![1.0];
    for j in 1..=n {
        let layer = solver.layer(j);
        let b: Vec<f64> = layer
            .masks
            .iter()
            .map(|&m| if m & rb != 0 { wr * prev_vals[prev.rank(m ^ rb)] } else { 0.0 })
            .collect();
        let vals = solve_columns(&layer.matrix, &[b])?.pop().unwrap();
        for (&m, &v) in layer.masks.iter().zip(&vals) {
            table[m as usize] = v;
        }
        prev = layer;
        prev_vals = vals;
    }
    Ok(table)
}

/// Probability that a single dual walker from `x` is absorbed at `N`.
pub fn single_particle_absorption(g: &GraphSpec, x: usize) -> Result<f64> {
    all_absorbed_at_n(g, &SiteSet::new(vec![x], g.n_sites)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::homogeneous_segment;

    fn seg(n_sites: usize) -> GraphSpec {
        homogeneous_segment(n_sites, 1.0, 1.0, 0.3, 0.6).unwrap()
    }

    fn sites(v: &[usize], n: usize) -> SiteSet {
        SiteSet::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn gosper_enumeration() {
        assert_eq!(masks_with_popcount(4, 2), vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(masks_with_popcount(3, 3), vec![0b111]);
        for n in 1..10 {
            for j in 0..=n {
                assert_eq!(masks_with_popcount(n, j).len(), binomial(n, j));
            }
        }
    }

    #[test]
    fn single_particle_is_x_over_n() {
        let g = seg(3);
        let t = absorption_distribution(&g, &sites(&[2], 3)).unwrap();
        assert!((t.probs[1] - 0.5).abs() < 1e-14);
        assert!((all_absorbed_at_n(&g, &sites(&[3], 3)).unwrap() - 0.75).abs() < 1e-14);
    }

    #[test]
    fn two_particles_on_two_sites() {
        let g = seg(2);
        let t = absorption_distribution(&g, &sites(&[1, 2], 2)).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
        for (p, e) in t.probs.iter().zip(expect) {
            assert!((p - e).abs() < 1e-14, "{:?}", t.probs);
        }
    }

    #[test]
    fn all_at_n_matches_level_solve() {
        let g = seg(3);
        let s = sites(&[1, 2, 3], 3);
        let p = all_absorbed_at_n(&g, &s).unwrap();
        assert!((p - 1.0 / 24.0).abs() < 1e-14);
        let t = absorption_distribution(&g, &s).unwrap();
        assert!((t.probs[3] - p).abs() < 1e-12);
        assert_eq!(all_absorbed_at_n(&g, &SiteSet::empty()).unwrap(), 1.0);
        let table = all_absorbed_table(&g).unwrap();
        assert!((table[0b111] - p).abs() < 1e-12);
        assert!((table[0b010] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_start_rejected() {
        let g = seg(3);
        let bad = SiteSet::from_mask(0b1000);
        assert!(absorption_distribution(&g, &bad).is_err());
    }

    #[test]
    fn cg_layers_agree_with_dense() {
        let g = seg(10);
        let solver = LayeredDual::new(&g).unwrap();
        let layer = solver.layer(5);
        let b: Vec<f64> = (0..layer.masks.len()).map(|i| (i % 5) as f64).collect();
        let dense = layer.matrix.to_dense().lu().unwrap().solve(&b);
        let cg = conjugate_gradient(&layer.matrix, &b, CG_TOL, 10 * layer.masks.len()).unwrap();
        for (u, v) in dense.iter().zip(&cg) {
            assert!((u - v).abs() < 1e-11);
        }
    }
}
