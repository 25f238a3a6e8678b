use alloc::vec::Vec;

use crate::error::{bail_param, Error, Result};
use crate::exact::all_absorbed_at_n;
use crate::lattice::{homogeneous_segment, GraphSpec, SiteSet};

/// Both sides of the size-reduction identity and their distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

fn all_at_right(n_sites: usize, xs: &SiteSet) -> Result<f64> {
    if xs.is_empty() {
        return Ok(1.0);
    }
    let g = homogeneous_segment(n_sites, 1.0, 1.0, 0.5, 0.5)?;
    all_absorbed_at_n(&g, xs)
}

/// Compares `P^{[N]}_{x_1..x_{k+1}}(all at N)` with
/// `(x_{k+1} - k)/N * P^{[N-1]}_{x_1..x_k}(all at N-1)` on unit segments,
/// both sides from exact absorbing-chain solves.
pub fn ninja_recursion_residual(big_n: usize, xs: &SiteSet) -> Result<RecursionCheck> {
    if big_n < 2 {
        bail_param!("need N >= 2, got {big_n}");
    }
    let Some(top) = xs.max() else {
        bail_param!("need at least one starting site");
    };
    SiteSet::new(xs.sites().to_vec(), big_n - 1)?;
    let k = xs.len() - 1;
    let rest = SiteSet::new(xs.sites()[..k].to_vec(), big_n - 1)?;
    let lhs = all_at_right(big_n - 1, xs)?;
    let rhs = (top - k) as f64 / big_n as f64 * all_at_right(big_n - 2, &rest)?;
    Ok(RecursionCheck { lhs, rhs, residual: (lhs - rhs).abs() })
}

/// As [`ninja_recursion_residual`], for a graph that must be the unit segment
/// with unit reservoir couplings.
pub fn ninja_recursion_residual_on(g: &GraphSpec, xs: &SiteSet) -> Result<RecursionCheck> {
    g.require_valid()?;
    if !g.is_homogeneous_segment() || g.omega_left != 1.0 || g.omega_right != 1.0 {
        return Err(Error::Unsupported("the size recursion holds for unit conductances only".into()));
    }
    ninja_recursion_residual(g.big_n(), xs)
}

/// Every admissible nonempty site set for `N`.
pub fn nonempty_site_sets(big_n: usize) -> Vec<SiteSet> {
    (1u64..1 << (big_n - 1)).map(SiteSet::from_mask).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        let r = ninja_recursion_residual(4, &SiteSet::new(alloc::vec![1, 3], 3).unwrap()).unwrap();
        assert!((r.lhs - 1.0 / 6.0).abs() < 1e-14 && (r.rhs - 1.0 / 6.0).abs() < 1e-14);
        let r = ninja_recursion_residual(5, &SiteSet::new(alloc::vec![3], 4).unwrap()).unwrap();
        assert!((r.rhs - 0.6).abs() < 1e-15 && r.residual < 1e-14);
    }

    #[test]
    fn exhaustive_small() {
        for n in 2..=6 {
            for xs in nonempty_site_sets(n) {
                assert!(ninja_recursion_residual(n, &xs).unwrap().residual < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_unit_couplings() {
        let g = homogeneous_segment(3, 2.0, 1.0, 0.5, 0.5).unwrap();
        let xs = SiteSet::new(alloc::vec![1], 3).unwrap();
        assert!(matches!(ninja_recursion_residual_on(&g, &xs), Err(Error::Unsupported(_))));
    }
}
