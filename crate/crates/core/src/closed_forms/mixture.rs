use alloc::vec;
use alloc::vec::Vec;

use super::Segment;
use crate::error::{bail_capacity, Result};
use crate::exact::{all_absorbed_at_n, all_absorbed_table, StationaryDistribution};
use crate::lattice::{GraphSpec, SiteSet};
use crate::scalar::{lower, pow, Exact, Scalar};

/// The class-count regrouping visits every `(eta, I)` pair, so it is capped.
pub const CLASS_ROUTE_MAX_SITES: usize = 12;

/// Weights `F(I)` of the Bernoulli components, indexed by the mask of `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureWeights {
    pub n_sites: usize,
    pub weights: Vec<f64>,
}

impl MixtureWeights {
    pub fn get(&self, sites: &SiteSet) -> f64 {
        self.weights[sites.mask() as usize]
    }

    /// `(I, F(I))` in mask order.
    pub fn iter(&self) -> impl Iterator<Item = (SiteSet, f64)> + '_ {
        self.weights.iter().enumerate().map(|(m, &f)| (SiteSet::from_mask(m as u64), f))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Source of the all-at-`N` probabilities `P_J(xi_inf(N) = |J|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightOracle {
    /// Product formula on homogeneous segments, exact solves elsewhere.
    #[default]
    Auto,
    ProductFormula,
    ExactSolve,
}

impl WeightOracle {
    fn resolve(self, g: &GraphSpec) -> Result<Option<Segment>> {
        match self {
            WeightOracle::ProductFormula => Segment::from_graph(g).map(Some),
            WeightOracle::ExactSolve => Ok(None),
            WeightOracle::Auto => Ok(if g.is_homogeneous_segment() { Segment::from_graph(g).ok() } else { None }),
        }
    }
}

/// Product-formula value for every subset of the bulk, indexed by mask.
pub fn all_at_n_products<S: Scalar>(seg: &Segment) -> Vec<S> {
    let n = seg.n_sites();
    let mut sites = Vec::with_capacity(n);
    (0u64..1 << n)
        .map(|m| {
            sites.clear();
            sites.extend((0..n).filter(|b| m >> b & 1 == 1).map(|b| b + 1));
            seg.product::<S>(&sites)
        })
        .collect()
}

/// In place `v[I] <- sum_{J >= I} (-1)^{|J \ I|} v[J]` over `n`-bit masks.
pub fn superset_mobius<S: Scalar>(v: &mut [S], n: usize) {
    for b in 0..n {
        let bit = 1usize << b;
        for m in 0..v.len() {
            if m & bit == 0 {
                v[m] = v[m].clone() - v[m | bit].clone();
            }
        }
    }
}

fn check_size(g: &GraphSpec) -> Result<()> {
    g.require_exact_size()
}

/// All weights `F(I)`, one oracle evaluation per subset.
pub fn mixture_weights(g: &GraphSpec, oracle: WeightOracle) -> Result<MixtureWeights> {
    check_size(g)?;
    let n = g.n_sites;
    let weights = match oracle.resolve(g)? {
        Some(seg) if seg.exact() => {
            let mut t = all_at_n_products::<Exact>(&seg);
            superset_mobius(&mut t, n);
            t.iter().map(lower).collect()
        }
        Some(seg) => {
            let mut t = all_at_n_products::<f64>(&seg);
            superset_mobius(&mut t, n);
            t
        }
        None => {
            let mut t = all_absorbed_table(g)?;
            superset_mobius(&mut t, n);
            t
        }
    };
    Ok(MixtureWeights { n_sites: n, weights })
}

/// A single weight `F(I)` from the `2^{N-1-|I|}` supersets of `I`.
pub fn mixture_weight(g: &GraphSpec, sites: &SiteSet, oracle: WeightOracle) -> Result<f64> {
    check_size(g)?;
    SiteSet::new(sites.sites().to_vec(), g.n_sites)?;
    let n = g.n_sites;
    let base = sites.mask();
    let free = !base & ((1u64 << n) - 1);
    let seg = oracle.resolve(g)?;
    let mut acc_exact = Exact::from_integer(0.into());
    let mut acc = 0.0;
    // enumerate subsets of the complement
    let mut extra = 0u64;
    loop {
        let j = SiteSet::from_mask(base | extra);
        let odd = extra.count_ones() % 2 == 1;
        match seg {
            Some(s) if s.exact() => {
                let p = s.product::<Exact>(j.sites());
                acc_exact = if odd { acc_exact - p } else { acc_exact + p };
            }
            Some(s) => {
                let p = s.product::<f64>(j.sites());
                acc += if odd { -p } else { p };
            }
            None => {
                let p = all_absorbed_at_n(g, &j)?;
                acc += if odd { -p } else { p };
            }
        }
        if extra == free {
            break;
        }
        extra = (extra.wrapping_sub(free)) & free;
    }
    Ok(match seg {
        Some(s) if s.exact() => lower(&acc_exact),
        _ => acc,
    })
}

/// `sum_I F(I) Ber(rho_R on I, rho_L off I)` for every configuration, as a
/// Kronecker product of per-site 2x2 maps applied to the weight vector.
pub fn mixture_measure(g: &GraphSpec, w: &MixtureWeights) -> Result<StationaryDistribution> {
    check_size(g)?;
    let (rl, rr) = (g.rho_left, g.rho_right);
    let mut v = w.weights.clone();
    for b in 0..w.n_sites {
        let bit = 1usize << b;
        for m in 0..v.len() {
            if m & bit == 0 {
                let (off, on) = (v[m], v[m | bit]);
                v[m] = (1.0 - rl) * off + (1.0 - rr) * on;
                v[m | bit] = rl * off + rr * on;
            }
        }
    }
    Ok(StationaryDistribution { graph: g.clone(), probs: v })
}

/// Same measure regrouped by classes `C(l, k)`: for each `eta`, the weights
/// of all `I` with `|I| = k + l` and `|I & eta| = l` are pooled first.
pub fn mixture_measure_by_classes(g: &GraphSpec, w: &MixtureWeights) -> Result<StationaryDistribution> {
    check_size(g)?;
    let n = w.n_sites;
    if n > CLASS_ROUTE_MAX_SITES {
        bail_capacity!("class regrouping is limited to {CLASS_ROUTE_MAX_SITES} bulk sites, got {n}");
    }
    let (rl, rr) = (g.rho_left, g.rho_right);
    let dim = 1usize << n;
    let mut probs = vec![0.0; dim];
    let mut classes = vec![0.0; (n + 1) * (n + 1)];
    for (eta, slot) in probs.iter_mut().enumerate() {
        let size = eta.count_ones() as usize;
        classes.iter_mut().for_each(|c| *c = 0.0);
        for (i, &f) in w.weights.iter().enumerate() {
            let l = (i & eta).count_ones() as usize;
            let k = i.count_ones() as usize - l;
            classes[l * (n + 1) + k] += f;
        }
        let mut total = 0.0;
        for l in 0..=size {
            for k in 0..=n - size {
                total += pow(&rr, l)
                    * pow(&rl, size - l)
                    * pow(&(1.0 - rr), k)
                    * pow(&(1.0 - rl), n - size - k)
                    * classes[l * (n + 1) + k];
            }
        }
        *slot = total;
    }
    Ok(StationaryDistribution { graph: g.clone(), probs })
}
