use alloc::vec::Vec;

use crate::error::{bail_capacity, Result};
use crate::exact::generator::build_sep_generator;
use crate::lattice::{DualState, GraphSpec};

pub const DUALITY_MAX_SITES: usize = 10;
pub const DUALITY_MAX_PARTICLES: usize = 4;

/// `D(eta, xi) = rho_L^{xi(0)} prod_{xi(x)=1} eta(x) rho_R^{xi(N)}`.
pub fn duality_function(g: &GraphSpec, eta: u64, xi: &DualState) -> f64 {
    if eta & xi.bulk != xi.bulk {
        return 0.0;
    }
    libm::pow(g.rho_left, xi.absorbed_0 as f64) * libm::pow(g.rho_right, xi.absorbed_n as f64)
}

/// Transitions of the absorbing dual out of `xi`, with their rates.
pub fn dual_transitions(g: &GraphSpec, xi: &DualState) -> Vec<(DualState, f64)> {
    let mut out = Vec::new();
    for e in &g.edges {
        let (bx, by) = (1u64 << (e.x - 1), 1u64 << (e.y - 1));
        if (xi.bulk & bx != 0) != (xi.bulk & by != 0) {
            out.push((DualState { bulk: xi.bulk ^ bx ^ by, ..*xi }, e.weight));
        }
    }
    if xi.bulk & 1 != 0 {
        out.push((DualState { bulk: xi.bulk ^ 1, absorbed_0: xi.absorbed_0 + 1, ..*xi }, g.omega_left));
    }
    let rb = 1u64 << (g.n_sites - 1);
    if xi.bulk & rb != 0 {
        out.push((DualState { bulk: xi.bulk ^ rb, absorbed_n: xi.absorbed_n + 1, ..*xi }, g.omega_right));
    }
    out
}

/// Every dual state carrying at most `max_particles` particles in total.
pub fn dual_states(n_sites: usize, max_particles: usize) -> Vec<DualState> {
    let mut out = Vec::new();
    for bulk in 0..1u64 << n_sites {
        let p = bulk.count_ones() as usize;
        if p > max_particles {
            continue;
        }
        for a0 in 0..=(max_particles - p) {
            for an in 0..=(max_particles - p - a0) {
                out.push(DualState { bulk, absorbed_0: a0 as u32, absorbed_n: an as u32 });
            }
        }
    }
    out
}

/// Max over `(eta, xi)` of `|(L D(., xi))(eta) - (L^ D(eta, .))(xi)|`.
pub fn check_generator_duality(g: &GraphSpec, max_dual_particles: usize) -> Result<f64> {
    g.require_valid()?;
    if g.n_sites > DUALITY_MAX_SITES || max_dual_particles > DUALITY_MAX_PARTICLES {
        bail_capacity!(
            "duality check limited to {DUALITY_MAX_SITES} sites and {DUALITY_MAX_PARTICLES} dual particles"
        );
    }
    let q = build_sep_generator(g)?;
    let mut worst = 0.0f64;
    for xi in dual_states(g.n_sites, max_dual_particles) {
        let moves = dual_transitions(g, &xi);
        for eta in 0..q.dimension() as u64 {
            let here = duality_function(g, eta, &xi);
            let primal: f64 = q
                .row(eta as usize)
                .map(|(to, rate)| rate * (duality_function(g, to as u64, &xi) - here))
                .sum();
            let dual: f64 = moves.iter().map(|(to, rate)| rate * (duality_function(g, eta, to) - here)).sum();
            worst = worst.max((primal - dual).abs());
        }
    }
    Ok(worst)
}
