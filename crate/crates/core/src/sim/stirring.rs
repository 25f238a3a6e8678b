use alloc::vec;
use alloc::vec::Vec;

use super::events::{EventKind, EventSink, EVENT_CAP};
use super::rng::{RngStream, SimRng};
use super::sampler::RateTree;
use crate::error::{Error, Result};
use crate::lattice::{GraphSpec, SiteSet, MAX_SIM_SITES};

/// Where each labelled particle of a stirring run ended up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StirringOutcome {
    pub big_n: usize,
    /// `(start site, absorbing site)` in increasing start order.
    pub destination: Vec<(usize, usize)>,
}

impl StirringOutcome {
    pub fn destination_of(&self, x: usize) -> Option<usize> {
        self.destination.iter().find(|(s, _)| *s == x).map(|&(_, d)| d)
    }

    /// Mask of the start sites whose particle ended at `N`.
    pub fn right_mask(&self) -> u64 {
        self.destination
            .iter()
            .filter(|(_, d)| *d == self.big_n)
            .fold(0, |m, &(s, _)| m | 1 << (s - 1))
    }
}

/// Labelled stirring from a particle on every bulk site.
pub fn simulate_stirring(g: &GraphSpec, stream: &RngStream) -> Result<StirringOutcome> {
    simulate_stirring_from(g, &SiteSet::full(g.n_sites), &mut stream.rng(), &mut ())
}

/// Labelled stirring started from `labels`: each edge clock of rate
/// `omega_xy` exchanges the contents of its endpoints, clocks of rate
/// `omega_L`, `omega_R` absorb the occupant of site 1 or `N - 1`. Clocks
/// acting on empty sites are skipped.
pub fn simulate_stirring_from(
    g: &GraphSpec,
    labels: &SiteSet,
    rng: &mut SimRng,
    sink: &mut impl EventSink,
) -> Result<StirringOutcome> {
    g.require_valid()?;
    if g.n_sites > MAX_SIM_SITES {
        return Err(Error::Capacity(alloc::format!("simulation limited to {MAX_SIM_SITES} sites")));
    }
    SiteSet::new(labels.sites().to_vec(), g.n_sites)?;
    let n = g.n_sites;
    let big_n = g.big_n();
    let m = g.edges.len();
    let (left, right) = (m, m + 1);
    // occupant[x] = start site of the particle on x, 0 if empty
    let mut occupant = vec![0usize; n + 1];
    for &x in labels.sites() {
        occupant[x] = x;
    }
    let mut site_edges = vec![Vec::new(); n + 1];
    for (i, e) in g.edges.iter().enumerate() {
        site_edges[e.x].push(i);
        site_edges[e.y].push(i);
    }
    let rate = |c: usize, occ: &[usize]| -> f64 {
        if c == left {
            if occ[1] != 0 { g.omega_left } else { 0.0 }
        } else if c == right {
            if occ[n] != 0 { g.omega_right } else { 0.0 }
        } else {
            let e = &g.edges[c];
            if occ[e.x] != 0 || occ[e.y] != 0 { e.weight } else { 0.0 }
        }
    };
    let mut tree = RateTree::new(m + 2);
    for c in 0..m + 2 {
        tree.set(c, rate(c, &occupant));
    }
    let mut destination: Vec<(usize, usize)> = Vec::with_capacity(labels.len());
    let mut remaining = labels.len();
    let (mut t, mut events) = (0.0, 0u64);
    while remaining > 0 {
        let total = tree.total();
        t += rng.exponential(total);
        let c = tree.sample(total, rng);
        let touched: [usize; 2];
        if c == left || c == right {
            let (x, to) = if c == left { (1, 0) } else { (n, big_n) };
            destination.push((occupant[x], to));
            occupant[x] = 0;
            remaining -= 1;
            sink.record(t, EventKind::Absorb, x, to);
            touched = [x, x];
        } else {
            let e = &g.edges[c];
            occupant.swap(e.x, e.y);
            sink.record(t, EventKind::Swap, e.x, e.y);
            touched = [e.x, e.y];
        }
        for x in touched {
            for &k in &site_edges[x] {
                tree.set(k, rate(k, &occupant));
            }
        }
        tree.set(left, rate(left, &occupant));
        tree.set(right, rate(right, &occupant));
        events += 1;
        if events >= EVENT_CAP {
            return Err(Error::EventCap { cap: EVENT_CAP, detail: "stirring run".into() });
        }
    }
    destination.sort_unstable();
    Ok(StirringOutcome { big_n, destination })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::homogeneous_segment;

    #[test]
    fn every_label_gets_a_destination() {
        let g = homogeneous_segment(4, 1.0, 2.0, 0.5, 0.5).unwrap();
        for i in 0..100 {
            let out = simulate_stirring(&g, &RngStream::new(9, i)).unwrap();
            assert_eq!(out.destination.len(), 4);
            assert!(out.destination.iter().enumerate().all(|(j, &(s, d))| s == j + 1 && (d == 0 || d == 5)));
        }
    }

    #[test]
    fn marginal_matches_single_walker() {
        let g = homogeneous_segment(3, 1.0, 1.0, 0.5, 0.5).unwrap();
        let n = 20_000;
        let hits = (0..n)
            .filter(|&i| simulate_stirring(&g, &RngStream::new(6, i)).unwrap().destination_of(3) == Some(4))
            .count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.75).abs() < 4.0 * libm::sqrt(0.75 * 0.25 / n as f64));
    }
}
