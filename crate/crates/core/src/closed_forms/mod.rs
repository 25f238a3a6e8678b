//! Closed-form absorption probabilities, mixture weights and correlations of
//! the open process on the nearest-neighbour segment.
//!
//! Evaluators are generic over [`Scalar`]; the `f64` entry points run in
//! exact rationals for `N <= 12` and round once at the end.

mod correlations;
mod mixture;
mod recursion;

pub use correlations::{
    density_profile, density_profile_segment, n_point_correlation, n_point_correlation_graph, psi,
    psi_signed_as_printed, two_point_correlation, CorrelationRequest,
};
pub use mixture::{
    all_at_n_products, mixture_measure, mixture_measure_by_classes, mixture_weight, mixture_weights,
    superset_mobius, MixtureWeights, WeightOracle, CLASS_ROUTE_MAX_SITES,
};
pub use recursion::{nonempty_site_sets, ninja_recursion_residual, ninja_recursion_residual_on, RecursionCheck};

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail_param, Error, Result};
use crate::lattice::{GraphSpec, SiteSet};
use crate::scalar::{int, lift, lower, Exact, Scalar, EXACT_ARITHMETIC_MAX_N};

/// Homogeneous segment `[N]_0` with unit bulk conductances and reservoir
/// couplings `omega_left`, `omega_right`. Densities play no role here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub big_n: usize,
    pub omega_left: f64,
    pub omega_right: f64,
}

impl Segment {
    pub fn new(big_n: usize, omega_left: f64, omega_right: f64) -> Result<Self> {
        if big_n < 2 {
            bail_param!("segment needs N >= 2, got {big_n}");
        }
        for (name, w) in [("omega_left", omega_left), ("omega_right", omega_right)] {
            if !(w > 0.0 && w.is_finite()) {
                bail_param!("{name} must be a positive finite rate, got {w}");
            }
        }
        Ok(Self { big_n, omega_left, omega_right })
    }

    pub fn unit(big_n: usize) -> Result<Self> {
        Self::new(big_n, 1.0, 1.0)
    }

    /// Reads the couplings off a graph, which must be a homogeneous segment.
    pub fn from_graph(g: &GraphSpec) -> Result<Self> {
        g.require_valid()?;
        if !g.is_homogeneous_segment() {
            return Err(Error::Unsupported("closed forms need the unit-conductance segment".into()));
        }
        Self::new(g.big_n(), g.omega_left, g.omega_right)
    }

    pub fn n_sites(&self) -> usize {
        self.big_n - 1
    }

    pub(crate) fn exact(&self) -> bool {
        self.big_n <= EXACT_ARITHMETIC_MAX_N
    }

    fn check_sites(&self, xs: &SiteSet) -> Result<()> {
        if let Some(m) = xs.max() {
            if m >= self.big_n {
                bail_param!("site {m} outside the bulk 1..={}", self.big_n - 1);
            }
        }
        Ok(())
    }

    /// `h(x)` evaluated in `S`.
    pub fn h<S: Scalar>(&self, x: usize) -> S {
        let inv_l = S::one() / lift::<S>(self.omega_left);
        if x == 0 {
            S::zero()
        } else if x < self.big_n {
            inv_l + int(x as i64 - 1)
        } else {
            inv_l + S::one() / lift::<S>(self.omega_right) + int(self.big_n as i64 - 2)
        }
    }

    /// `prod_i (h(x_i) - (i-1)) / (h(N) - (i-1))` over the increasing `xs`.
    pub fn product<S: Scalar>(&self, xs: &[usize]) -> S {
        let hn: S = self.h(self.big_n);
        xs.iter().enumerate().fold(S::one(), |acc, (i, &x)| {
            let shift: S = int(i as i64);
            acc * ((self.h::<S>(x) - shift.clone()) / (hn.clone() - shift))
        })
    }

    /// Level law of `xi_inf(N)` by inclusion-exclusion over subsets of `xs`.
    pub fn levels<S: Scalar>(&self, xs: &[usize]) -> Vec<S> {
        let n = xs.len();
        let binom = binomials(n);
        let mut out = vec![S::zero(); n + 1];
        let mut sub = Vec::with_capacity(n);
        for mask in 0u64..1 << n {
            sub.clear();
            sub.extend((0..n).filter(|j| mask >> j & 1 == 1).map(|j| xs[j]));
            let k = sub.len();
            let p: S = self.product(&sub);
            for (l, slot) in out.iter_mut().enumerate().take(k + 1) {
                let c: S = int(binom[k][l] as i64);
                let term = c * p.clone();
                *slot = if (k - l) % 2 == 0 { slot.clone() + term } else { slot.clone() - term };
            }
        }
        out
    }
}

fn binomials(n: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; n + 1]; n + 1];
    for k in 0..=n {
        t[k][0] = 1;
        for l in 1..=k {
            t[k][l] = t[k - 1][l - 1] + if l < k { t[k - 1][l] } else { 0 };
        }
    }
    t
}

/// `h(x)` for `x` in `0..=N`.
pub fn harmonic_h(seg: &Segment, x: usize) -> Result<f64> {
    if x > seg.big_n {
        bail_param!("site {x} outside 0..={}", seg.big_n);
    }
    Ok(seg.h::<f64>(x))
}

/// Probability that dual particles started at `xs` all end at `N`.
pub fn absorption_product(seg: &Segment, xs: &SiteSet) -> Result<f64> {
    seg.check_sites(xs)?;
    Ok(if seg.exact() { lower(&seg.product::<Exact>(xs.sites())) } else { seg.product::<f64>(xs.sites()) })
}

/// `P_xs(xi_inf(N) = l)` for every `l = 0..=|xs|`.
pub fn absorption_levels(seg: &Segment, xs: &SiteSet) -> Result<Vec<f64>> {
    seg.check_sites(xs)?;
    if xs.len() > 30 {
        bail_param!("inclusion-exclusion over {} sites is out of reach", xs.len());
    }
    Ok(if seg.exact() {
        seg.levels::<Exact>(xs.sites()).iter().map(lower).collect()
    } else {
        seg.levels::<f64>(xs.sites())
    })
}

pub fn absorption_level(seg: &Segment, xs: &SiteSet, level: usize) -> Result<f64> {
    if level > xs.len() {
        bail_param!("level {level} exceeds the {} starting particles", xs.len());
    }
    Ok(absorption_levels(seg, xs)?[level])
}
